//! World generation, stepping, observation and success test.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rock::{grow_rock, RockState};
use crate::soil::{settle_soil, SoilField};
use crate::{DrParams, EnvError, Fnv64, Result};

/// Per-step bucket displacement limit, mm per axis.
pub const ACTION_XYZ_LIMIT_MM: f64 = 30.0;
/// Per-step bucket pitch limit, rad.
pub const ACTION_PITCH_LIMIT_RAD: f64 = 0.2;
/// Pitch window in which the plate can hold a rock.
pub const HOLD_PITCH_MIN_RAD: f64 = 0.3;
pub const HOLD_PITCH_MAX_RAD: f64 = 1.2;
/// Square fork plate side length, mm.
pub const PLATE_SIZE_MM: f64 = 80.0;
/// Plate thickness used for push contact, mm.
pub const PLATE_THICKNESS_MM: f64 = 10.0;
/// Workspace half-extent in x/y and full extent in z, mm.
pub const WORKSPACE_XY_MM: f64 = 300.0;
pub const WORKSPACE_Z_MM: f64 = 600.0;
/// Bucket start height above the nominal analytic soil top, mm.
pub const BUCKET_START_ABOVE_SOIL_MM: f64 = 100.0;

/// Voxel edge length in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    delta_mm: f64,
}

impl Resolution {
    pub fn new(delta_mm: f64) -> Result<Self> {
        if !(5.0..=100.0).contains(&delta_mm) {
            return Err(EnvError::Config(format!(
                "resolution {delta_mm} mm outside [5, 100]"
            )));
        }
        Ok(Resolution { delta_mm })
    }

    pub fn delta_mm(&self) -> f64 {
        self.delta_mm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketState {
    pub position_mm: [f64; 3],
    pub pitch_rad: f64,
    /// Plate x/y side lengths, mm.
    pub plate_mm: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub soil: SoilField,
    pub rock: RockState,
    pub bucket: BucketState,
    pub resolution: Resolution,
    pub dr: DrParams,
    pub step: u32,
    pub max_steps: u32,
    /// Initial maximum soil column height, mm; ground reference for success.
    pub nominal_soil_top_mm: f64,
    /// Rock bottom height right after the initial settle, mm.
    pub initial_rock_bottom_mm: f64,
    /// Set when initial biases had to be clamped back into the footprint.
    pub spawn_clamped: bool,
    /// Mass-weighted soil column height diagnostic, updated every step.
    pub soil_load_mm: f64,
    pub rng: ChaCha8Rng,
}

/// 8-dim observation of §-style `[p_r, f_r, p_b]` layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Rock x, y (mm, noised and biased) and pitch (rad).
    pub rock_xy_pitch: [f64; 3],
    /// Binary rock-in-bucket flag.
    pub rock_in_bucket: f64,
    /// Bucket x, y, z (mm) and pitch (rad), exact.
    pub bucket: [f64; 4],
}

impl Observation {
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.rock_xy_pitch[0],
            self.rock_xy_pitch[1],
            self.rock_xy_pitch[2],
            self.rock_in_bucket,
            self.bucket[0],
            self.bucket[1],
            self.bucket[2],
            self.bucket[3],
        ]
    }
}

/// Relative bucket motion, already in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub xyz_mm: [f64; 3],
    pub pitch_rad: f64,
}

impl Action {
    /// Clamps components to the per-step limits.
    pub fn clamped(xyz_mm: [f64; 3], pitch_rad: f64) -> Self {
        Action {
            xyz_mm: [
                xyz_mm[0].clamp(-ACTION_XYZ_LIMIT_MM, ACTION_XYZ_LIMIT_MM),
                xyz_mm[1].clamp(-ACTION_XYZ_LIMIT_MM, ACTION_XYZ_LIMIT_MM),
                xyz_mm[2].clamp(-ACTION_XYZ_LIMIT_MM, ACTION_XYZ_LIMIT_MM),
            ],
            pitch_rad: pitch_rad.clamp(-ACTION_PITCH_LIMIT_RAD, ACTION_PITCH_LIMIT_RAD),
        }
    }

    /// Maps a unitless policy output (roughly [-1, 1] per component) onto
    /// the physical limits, then clamps.
    pub fn from_normalized(u: &[f64; 4]) -> Self {
        Action::clamped(
            [
                u[0] * ACTION_XYZ_LIMIT_MM,
                u[1] * ACTION_XYZ_LIMIT_MM,
                u[2] * ACTION_XYZ_LIMIT_MM,
            ],
            u[3] * ACTION_PITCH_LIMIT_RAD,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    /// Rock height above its local resting seat, mm / 100.
    pub reward: f64,
    pub done: bool,
    pub success: bool,
    /// Voxels visited during this step (cost counter).
    pub voxel_ops: u64,
}

impl StepResult {
    pub fn hash_into(&self, h: &mut Fnv64) {
        for v in self.observation.to_array() {
            h.write_f64(v);
        }
        h.write_f64(self.reward);
        h.write_bool(self.done);
        h.write_bool(self.success);
        h.write_u64(self.voxel_ops);
    }
}

fn clamp_to_footprint(soil: &SoilField, x: f64, y: f64) -> ([f64; 2], bool) {
    let half_x = soil.cols_x as f64 * soil.delta_mm / 2.0;
    let half_y = soil.cols_y as f64 * soil.delta_mm / 2.0;
    let cx = x.clamp(-half_x, half_x);
    let cy = y.clamp(-half_y, half_y);
    ([cx, cy], cx != x || cy != y)
}

/// Builds a world at resolution `delta` from an episode parameter draw.
///
/// Soil is a cube of side `soil_volume^(1/3)` discretized into voxel
/// columns; the rock is grown voxel by voxel and settled embedded in the
/// surface at the footprint center plus the initial-position bias; the
/// bucket starts
/// centered above the soil plus its own bias, clamped to the workspace.
pub fn generate_world(
    delta: Resolution,
    dr: &DrParams,
    max_steps: u32,
    seed: u64,
) -> Result<WorldState> {
    let d = delta.delta_mm();
    let side = dr.total_soil_volume_mm3.cbrt();
    let total_voxels = ((dr.total_soil_volume_mm3 / d.powi(3)).round() as u64).max(1);
    let soil = SoilField::generate(d, side, total_voxels)?;
    let nominal_soil_top_mm = soil.max_height_voxels() as f64 * d;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let voxels = grow_rock(dr.total_rock_volume_mm3, d, &mut rng)?;
    let mut rock = RockState::new(voxels, d);

    let ([rx, ry], rock_clamped) = clamp_to_footprint(
        &soil,
        dr.init_rock_pos_bias[0],
        dr.init_rock_pos_bias[1],
    );
    rock.position_mm = [rx, ry, nominal_soil_top_mm + dr.init_rock_pos_bias[2].max(0.0)];
    rest_rock_on_soil(&mut rock, &soil);
    let initial_rock_bottom_mm = rock.bottom_mm();

    let bucket_nominal_z = side + BUCKET_START_ABOVE_SOIL_MM;
    let bx = (dr.init_bucket_pos_bias[0]).clamp(-WORKSPACE_XY_MM, WORKSPACE_XY_MM);
    let by = (dr.init_bucket_pos_bias[1]).clamp(-WORKSPACE_XY_MM, WORKSPACE_XY_MM);
    let bz = (bucket_nominal_z + dr.init_bucket_pos_bias[2]).clamp(0.0, WORKSPACE_Z_MM);
    let bucket = BucketState {
        position_mm: [bx, by, bz],
        pitch_rad: 0.0,
        plate_mm: [PLATE_SIZE_MM, PLATE_SIZE_MM],
    };

    Ok(WorldState {
        soil,
        rock,
        bucket,
        resolution: delta,
        dr: dr.clone(),
        step: 0,
        max_steps,
        nominal_soil_top_mm,
        initial_rock_bottom_mm,
        spawn_clamped: rock_clamped,
        soil_load_mm: 0.0,
        rng,
    })
}

/// Settles an un-held rock embedded in the soil: its highest voxel top
/// sits flush with the highest soil column under its footprint, so the
/// rock must be dug out rather than merely nudged. Returns columns
/// visited.
fn rest_rock_on_soil(rock: &mut RockState, soil: &SoilField) -> u64 {
    let (lo, hi) = rock.aabb_mm();
    let (support, visited) = soil.max_surface_over(lo[0], hi[0], lo[1], hi[1]);
    rock.position_mm[2] += support - hi[2];
    visited
}

/// Ground height used by the success test: the initial maximum soil column
/// top plus the episode's ground-height bias, floored at half a voxel
/// above the rock's initial seat so no parameter draw makes an untouched
/// rock count as lifted.
pub fn ground_height_mm(state: &WorldState) -> f64 {
    let biased = state.nominal_soil_top_mm + state.dr.ground_height_bias;
    biased.max(state.initial_rock_bottom_mm + state.resolution.delta_mm() / 2.0)
}

/// True iff the rock's lowest voxel bottom is strictly above ground height.
pub fn is_success(state: &WorldState) -> bool {
    state.rock.bottom_mm() > ground_height_mm(state)
}

fn plate_overlaps_rock_horizontally(state: &WorldState) -> bool {
    let (lo, hi) = state.rock.aabb_mm();
    let b = &state.bucket;
    let hx = b.plate_mm[0] / 2.0;
    let hy = b.plate_mm[1] / 2.0;
    b.position_mm[0] + hx >= lo[0]
        && b.position_mm[0] - hx <= hi[0]
        && b.position_mm[1] + hy >= lo[1]
        && b.position_mm[1] - hy <= hi[1]
}

fn pitch_in_hold_window(pitch: f64) -> bool {
    (HOLD_PITCH_MIN_RAD..=HOLD_PITCH_MAX_RAD).contains(&pitch)
}

/// Builds an observation from the current state, consuming per-step noise
/// draws from the episode RNG.
pub fn observe(state: &mut WorldState) -> Observation {
    let amp = state.dr.rock_obs_noise_xy.abs();
    let noise = |rng: &mut ChaCha8Rng| {
        if amp > 0.0 {
            rng.gen_range(-amp..amp)
        } else {
            0.0
        }
    };
    let nx = noise(&mut state.rng);
    let ny = noise(&mut state.rng);
    let rock_xy_pitch = [
        state.rock.position_mm[0] + nx + state.dr.rock_obs_bias_xy[0],
        state.rock.position_mm[1] + ny + state.dr.rock_obs_bias_xy[1],
        state.rock.pitch_rad,
    ];

    // Plate vertical load: holding the rock, resting on the soil surface,
    // or overlapping the rock box.
    let b = &state.bucket;
    let plate_bottom = b.position_mm[2] - PLATE_THICKNESS_MM / 2.0;
    let on_ground = plate_bottom <= state.soil.surface_mm(b.position_mm[0], b.position_mm[1]);
    let (rlo, rhi) = state.rock.aabb_mm();
    let touching_rock = plate_overlaps_rock_horizontally(state)
        && b.position_mm[2] >= rlo[2]
        && b.position_mm[2] <= rhi[2];
    let mut flag = state.rock.held || on_ground || touching_rock;
    let err = state.dr.rock_in_bucket_error_rate;
    if err > 0.0 && state.rng.gen_range(0.0..1.0) < err {
        flag = !flag;
    }

    Observation {
        rock_xy_pitch,
        rock_in_bucket: if flag { 1.0 } else { 0.0 },
        bucket: [
            b.position_mm[0],
            b.position_mm[1],
            b.position_mm[2],
            b.pitch_rad,
        ],
    }
}

/// Advances the world by one bucket action.
pub fn step_env(state: &mut WorldState, action: &Action) -> Result<StepResult> {
    if state.step >= state.max_steps {
        return Err(EnvError::SimulationFault(
            "step called on a finished episode".into(),
        ));
    }
    let mut voxel_ops = 0u64;

    // 1. Clamp, scale by torque weight, move the bucket (no soil contact).
    let a = Action::clamped(action.xyz_mm, action.pitch_rad);
    let w = state.dr.bucket_torque_weight;
    let b = &mut state.bucket;
    b.position_mm[0] =
        (b.position_mm[0] + a.xyz_mm[0] * w[0]).clamp(-WORKSPACE_XY_MM, WORKSPACE_XY_MM);
    b.position_mm[1] =
        (b.position_mm[1] + a.xyz_mm[1] * w[1]).clamp(-WORKSPACE_XY_MM, WORKSPACE_XY_MM);
    b.position_mm[2] = (b.position_mm[2] + a.xyz_mm[2] * w[2]).clamp(0.0, WORKSPACE_Z_MM);
    b.pitch_rad = (b.pitch_rad + a.pitch_rad).clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);

    // 2. Bucket-rock contact.
    voxel_ops += state.rock.voxel_count() as u64; // AABB/bottom recomputation below
    if state.rock.held {
        if pitch_in_hold_window(state.bucket.pitch_rad) {
            for axis in 0..3 {
                state.rock.position_mm[axis] =
                    state.bucket.position_mm[axis] + state.rock.held_offset_mm[axis];
            }
        } else {
            state.rock.held = false;
        }
    }
    if !state.rock.held {
        let (rlo, rhi) = state.rock.aabb_mm();
        let bz = state.bucket.position_mm[2];
        let horizontal = plate_overlaps_rock_horizontally(state);
        let in_catch_zone =
            bz >= rlo[2] - state.resolution.delta_mm() && bz <= rhi[2];
        if horizontal && in_catch_zone && pitch_in_hold_window(state.bucket.pitch_rad) {
            state.rock.held = true;
            for axis in 0..3 {
                state.rock.held_offset_mm[axis] =
                    state.rock.position_mm[axis] - state.bucket.position_mm[axis];
            }
        } else if horizontal && bz >= rlo[2] && bz <= rhi[2] {
            // Lateral push along the minimal translation vector, damped by
            // friction.
            let b = &state.bucket;
            let dx = state.rock.position_mm[0] - b.position_mm[0];
            let dy = state.rock.position_mm[1] - b.position_mm[1];
            let pen_x = b.plate_mm[0] / 2.0 + (rhi[0] - rlo[0]) / 2.0 - dx.abs();
            let pen_y = b.plate_mm[1] / 2.0 + (rhi[1] - rlo[1]) / 2.0 - dy.abs();
            let friction = state.dr.friction_coefficient.max(0.1);
            if pen_x <= pen_y {
                state.rock.position_mm[0] += pen_x / friction * dx.signum();
            } else {
                state.rock.position_mm[1] += pen_y / friction * dy.signum();
            }
        }
        // External disturbance drift, 2 mm/step per Newton.
        let drift = state.dr.external_force_n * 2.0;
        if drift > 0.0 {
            state.rock.position_mm[0] += drift * state.dr.external_force_dir.cos();
            state.rock.position_mm[1] += drift * state.dr.external_force_dir.sin();
        }
        let ([cx, cy], _) = clamp_to_footprint(
            &state.soil,
            state.rock.position_mm[0],
            state.rock.position_mm[1],
        );
        state.rock.position_mm[0] = cx;
        state.rock.position_mm[1] = cy;

        // 3. Un-held rock settles onto the soil surface.
        voxel_ops += rest_rock_on_soil(&mut state.rock, &state.soil);
        voxel_ops += state.rock.voxel_count() as u64;
    }

    // 4. Soil settles; also refresh the mass-load diagnostic voxel by voxel.
    let stats = settle_soil(&mut state.soil)?;
    voxel_ops += stats.voxel_visits + stats.moves;
    let voxel_mass = state.dr.total_soil_mass_kg / state.soil.total_voxels().max(1) as f64;
    let mut load = 0.0;
    for &h in &state.soil.heights {
        for v in 0..h {
            load += voxel_mass * (v as f64 + 0.5) * state.soil.delta_mm;
        }
        voxel_ops += h as u64;
    }
    state.soil_load_mm = load;

    // 5. Reward and termination.
    let bottom = state.rock.bottom_mm();
    if !bottom.is_finite()
        || state.rock.position_mm.iter().any(|v| !v.is_finite())
        || !state.bucket.pitch_rad.is_finite()
    {
        return Err(EnvError::SimulationFault("non-finite pose".into()));
    }
    // Clearance above the local resting seat: zero whenever the rock is
    // settled, positive only when it is actually held up out of the soil.
    let (rlo, rhi) = state.rock.aabb_mm();
    let (support, visited) = state
        .soil
        .max_surface_over(rlo[0], rhi[0], rlo[1], rhi[1]);
    voxel_ops += visited;
    let reward = (rhi[2] - support) / 100.0;
    let success = is_success(state);
    state.step += 1;
    let done = success || state.step >= state.max_steps;

    let observation = observe(state);
    Ok(StepResult {
        observation,
        reward,
        done,
        success,
        voxel_ops,
    })
}
