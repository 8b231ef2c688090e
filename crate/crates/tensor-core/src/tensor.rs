/// Dense row-major f64 tensor with an optional gradient buffer.
///
/// Shapes are at most rank 2; a rank-1 shape `[n]` is treated as a single
/// row `[1, n]` wherever a 2-D view is needed.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "tensor values length must equal product of shape"
        );
        Tensor {
            shape,
            values,
            grad: None,
        }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor::new(shape, vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Rows of the 2-D view.
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            0 | 1 => 1,
            _ => self.shape[0],
        }
    }

    /// Columns of the 2-D view.
    pub fn cols(&self) -> usize {
        match self.shape.len() {
            0 => 1,
            1 => self.shape[0],
            _ => self.shape[1],
        }
    }

    /// Zero-fills (allocating if needed) the gradient buffer.
    pub fn zero_grad(&mut self) {
        match &mut self.grad {
            Some(g) => g.iter_mut().for_each(|v| *v = 0.0),
            None => self.grad = Some(vec![0.0; self.values.len()]),
        }
    }

    /// Accumulates `delta` into the gradient buffer.
    pub fn add_grad(&mut self, delta: &[f64]) {
        assert_eq!(delta.len(), self.values.len());
        let g = self.grad.get_or_insert_with(|| vec![0.0; delta.len()]);
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += di;
        }
    }
}
