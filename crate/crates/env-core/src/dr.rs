//! Domain randomization: per-episode uniform draws of physical and
//! observation parameters.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{EnvError, Result};

/// One randomized parameter: the value used when randomization is disabled
/// plus the uniform sampling range used when it is enabled.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DrRange {
    pub nominal: f64,
    pub min: f64,
    pub max: f64,
}

impl DrRange {
    const fn new(nominal: f64, min: f64, max: f64) -> Self {
        DrRange { nominal, min, max }
    }

    fn sample(&self, enabled: bool, rng: &mut ChaCha8Rng) -> f64 {
        if !enabled {
            self.nominal
        } else if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..self.max)
        }
    }
}

/// The full randomization table. Distances are mm, masses kg, volumes mm^3.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DrRanges {
    pub rock_obs_noise_xy: DrRange,
    pub rock_obs_bias_xy: DrRange,
    pub rock_in_bucket_error_rate: DrRange,
    pub ground_height_bias: DrRange,
    pub init_bucket_pos_bias_xyz: DrRange,
    pub init_rock_pos_bias_xyz: DrRange,
    pub bucket_torque_weight_xyz: DrRange,
    pub external_force_n: DrRange,
    pub friction_coefficient: DrRange,
    pub total_soil_mass_kg: DrRange,
    pub total_rock_mass_kg: DrRange,
    pub total_soil_volume_mm3: DrRange,
    pub total_rock_volume_mm3: DrRange,
}

impl Default for DrRanges {
    fn default() -> Self {
        let mm3 = |side: f64| side * side * side;
        DrRanges {
            rock_obs_noise_xy: DrRange::new(0.0, -25.0, 25.0),
            rock_obs_bias_xy: DrRange::new(0.0, -25.0, 25.0),
            rock_in_bucket_error_rate: DrRange::new(0.0, 0.2, 0.2),
            ground_height_bias: DrRange::new(0.0, -25.0, 25.0),
            init_bucket_pos_bias_xyz: DrRange::new(0.0, -300.0, 300.0),
            init_rock_pos_bias_xyz: DrRange::new(0.0, -30.0, 30.0),
            bucket_torque_weight_xyz: DrRange::new(1.0, 0.8, 1.2),
            external_force_n: DrRange::new(0.0, 0.0, 1.0),
            friction_coefficient: DrRange::new(1.0, 0.8, 1.2),
            total_soil_mass_kg: DrRange::new(3.0, 2.7, 3.3),
            total_rock_mass_kg: DrRange::new(1.0, 0.8, 1.2),
            total_soil_volume_mm3: DrRange::new(mm3(125.0), mm3(120.0), mm3(130.0)),
            total_rock_volume_mm3: DrRange::new(mm3(50.0), mm3(45.0), mm3(55.0)),
        }
    }
}

impl DrRanges {
    fn validate(&self) -> Result<()> {
        let rows = [
            ("rock_obs_noise_xy", &self.rock_obs_noise_xy),
            ("rock_obs_bias_xy", &self.rock_obs_bias_xy),
            ("rock_in_bucket_error_rate", &self.rock_in_bucket_error_rate),
            ("ground_height_bias", &self.ground_height_bias),
            ("init_bucket_pos_bias_xyz", &self.init_bucket_pos_bias_xyz),
            ("init_rock_pos_bias_xyz", &self.init_rock_pos_bias_xyz),
            ("bucket_torque_weight_xyz", &self.bucket_torque_weight_xyz),
            ("external_force_n", &self.external_force_n),
            ("friction_coefficient", &self.friction_coefficient),
            ("total_soil_mass_kg", &self.total_soil_mass_kg),
            ("total_rock_mass_kg", &self.total_rock_mass_kg),
            ("total_soil_volume_mm3", &self.total_soil_volume_mm3),
            ("total_rock_volume_mm3", &self.total_rock_volume_mm3),
        ];
        for (name, row) in rows {
            if !(row.min <= row.max) || !row.nominal.is_finite() {
                return Err(EnvError::Config(format!(
                    "malformed randomization range for {name}: {row:?}"
                )));
            }
        }
        Ok(())
    }
}

/// One episode's concrete parameter draw.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DrParams {
    pub rock_obs_noise_xy: f64,
    pub rock_obs_bias_xy: [f64; 2],
    pub rock_in_bucket_error_rate: f64,
    pub ground_height_bias: f64,
    pub init_bucket_pos_bias: [f64; 3],
    pub init_rock_pos_bias: [f64; 3],
    pub bucket_torque_weight: [f64; 3],
    pub external_force_n: f64,
    /// Per-episode direction of the external force drift, radians in XY.
    pub external_force_dir: f64,
    pub friction_coefficient: f64,
    pub total_soil_mass_kg: f64,
    pub total_rock_mass_kg: f64,
    pub total_soil_volume_mm3: f64,
    pub total_rock_volume_mm3: f64,
}

/// Draws one episode's parameters: uniform from each row's range when
/// `enabled`, the nominal column otherwise.
pub fn sample_dr(ranges: &DrRanges, enabled: bool, rng: &mut ChaCha8Rng) -> Result<DrParams> {
    ranges.validate()?;
    let mut vec3 = |r: &DrRange| {
        [
            r.sample(enabled, rng),
            r.sample(enabled, rng),
            r.sample(enabled, rng),
        ]
    };
    let init_bucket_pos_bias = vec3(&ranges.init_bucket_pos_bias_xyz);
    let init_rock_pos_bias = vec3(&ranges.init_rock_pos_bias_xyz);
    let bucket_torque_weight = vec3(&ranges.bucket_torque_weight_xyz);
    let rock_obs_bias_xy = [
        ranges.rock_obs_bias_xy.sample(enabled, rng),
        ranges.rock_obs_bias_xy.sample(enabled, rng),
    ];
    Ok(DrParams {
        rock_obs_noise_xy: ranges.rock_obs_noise_xy.sample(enabled, rng),
        rock_obs_bias_xy,
        rock_in_bucket_error_rate: ranges.rock_in_bucket_error_rate.sample(enabled, rng),
        ground_height_bias: ranges.ground_height_bias.sample(enabled, rng),
        init_bucket_pos_bias,
        init_rock_pos_bias,
        bucket_torque_weight,
        external_force_n: ranges.external_force_n.sample(enabled, rng),
        external_force_dir: if enabled {
            rng.gen_range(0.0..std::f64::consts::TAU)
        } else {
            0.0
        },
        friction_coefficient: ranges.friction_coefficient.sample(enabled, rng),
        total_soil_mass_kg: ranges.total_soil_mass_kg.sample(enabled, rng),
        total_rock_mass_kg: ranges.total_rock_mass_kg.sample(enabled, rng),
        total_soil_volume_mm3: ranges.total_soil_volume_mm3.sample(enabled, rng),
        total_rock_volume_mm3: ranges.total_rock_volume_mm3.sample(enabled, rng),
    })
}
