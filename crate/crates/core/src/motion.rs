//! Constant-velocity Kalman filtering for person boxes.
//!
//! Two state layouts are supported:
//!
//! * [`StateLayout::Center6`]: `[cx, cy, cz, vx, vy, vz]`, measured through the
//!   box centre only. Extents and yaw live outside the filter and are smoothed
//!   with [`ema_smooth`].
//! * [`StateLayout::FullBox10`]: `[cx, cy, cz, dx, dy, dz, yaw, vx, vy, vz]`,
//!   measured through all seven box parameters.
//!
//! Velocities are in metres per frame; `dt` is counted in frames.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::model::{wrap_angle, Detection, OrientedBox3D};

/// Smallest extent a filtered box may report.
const MIN_EXTENT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLayout {
    Center6,
    FullBox10,
}

impl StateLayout {
    pub fn dim(self) -> usize {
        match self {
            StateLayout::Center6 => 6,
            StateLayout::FullBox10 => 10,
        }
    }

    pub fn measurement_dim(self) -> usize {
        match self {
            StateLayout::Center6 => 3,
            StateLayout::FullBox10 => 7,
        }
    }

    /// Index of `vx`; `vy`, `vz` follow.
    fn velocity_offset(self) -> usize {
        match self {
            StateLayout::Center6 => 3,
            StateLayout::FullBox10 => 7,
        }
    }
}

const YAW: usize = 6;

/// Diagonal noise model. `q_*` are per-step process variances, `r_*`
/// measurement variances and `p0_*` initial variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub q_position: f64,
    pub q_velocity: f64,
    pub q_size: f64,
    pub q_yaw: f64,
    pub r_position: f64,
    pub r_size: f64,
    pub r_yaw: f64,
    pub p0_measured: f64,
    pub p0_velocity: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            q_position: 0.01,
            q_velocity: 0.01,
            q_size: 1e-4,
            q_yaw: 1e-4,
            r_position: 0.01,
            r_size: 0.01,
            r_yaw: 0.04,
            p0_measured: 1.0,
            p0_velocity: 10.0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("q_position", self.q_position),
            ("q_velocity", self.q_velocity),
            ("q_size", self.q_size),
            ("q_yaw", self.q_yaw),
            ("r_position", self.r_position),
            ("r_size", self.r_size),
            ("r_yaw", self.r_yaw),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("p0_measured", self.p0_measured), ("p0_velocity", self.p0_velocity)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn process(&self, layout: StateLayout) -> DVector<f64> {
        let mut q = DVector::from_element(layout.dim(), self.q_position);
        let v = layout.velocity_offset();
        for i in v..v + 3 {
            q[i] = self.q_velocity;
        }
        if layout == StateLayout::FullBox10 {
            for i in 3..6 {
                q[i] = self.q_size;
            }
            q[YAW] = self.q_yaw;
        }
        q
    }

    fn measurement(&self, layout: StateLayout) -> DVector<f64> {
        let mut r = DVector::from_element(layout.measurement_dim(), self.r_position);
        if layout == StateLayout::FullBox10 {
            for i in 3..6 {
                r[i] = self.r_size;
            }
            r[YAW] = self.r_yaw;
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub layout: StateLayout,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl KalmanState {
    pub fn position(&self) -> [f64; 3] {
        [self.mean[0], self.mean[1], self.mean[2]]
    }

    pub fn velocity(&self) -> [f64; 3] {
        let v = self.layout.velocity_offset();
        [self.mean[v], self.mean[v + 1], self.mean[v + 2]]
    }

    /// Box implied by the state. For `Center6` the extents and yaw come from
    /// `shape`; for `FullBox10` `shape` is ignored.
    pub fn to_box(&self, shape: &OrientedBox3D) -> OrientedBox3D {
        let m = &self.mean;
        let (extent, yaw) = match self.layout {
            StateLayout::Center6 => (shape.extent(), shape.yaw()),
            StateLayout::FullBox10 => (
                [m[3].max(MIN_EXTENT), m[4].max(MIN_EXTENT), m[5].max(MIN_EXTENT)],
                m[YAW],
            ),
        };
        OrientedBox3D::from_arrays(self.position(), extent, yaw)
            .expect("filter state stays finite with positive extents")
    }

    /// Covariance of the centre innovation, `H P Hᵀ + R` restricted to x, y, z.
    pub fn position_innovation_covariance(&self, noise: &NoiseConfig) -> Matrix3<f64> {
        let mut s = Matrix3::from_fn(|i, j| self.covariance[(i, j)]);
        for i in 0..3 {
            s[(i, i)] += noise.r_position;
        }
        s
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let p = &self.covariance;
        (0..p.nrows()).all(|i| (0..p.ncols()).all(|j| (p[(i, j)] - p[(j, i)]).abs() <= tol))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

fn measurement_vector(det: &Detection, layout: StateLayout) -> DVector<f64> {
    let b = &det.bbox;
    match layout {
        StateLayout::Center6 => DVector::from_row_slice(&b.center()),
        StateLayout::FullBox10 => DVector::from_row_slice(&[b.cx(), b.cy(), b.cz(), b.dx(), b.dy(), b.dz(), b.yaw()]),
    }
}

/// New state at the detection with zero velocity.
pub fn kf_init(det: &Detection, layout: StateLayout, noise: &NoiseConfig) -> KalmanState {
    let n = layout.dim();
    let z = measurement_vector(det, layout);
    let mut mean = DVector::zeros(n);
    mean.rows_mut(0, z.len()).copy_from(&z);
    let mut diag = DVector::from_element(n, noise.p0_measured);
    let v = layout.velocity_offset();
    for i in v..v + 3 {
        diag[i] = noise.p0_velocity;
    }
    KalmanState {
        layout,
        mean,
        covariance: DMatrix::from_diagonal(&diag),
    }
}

fn symmetrize(p: &mut DMatrix<f64>) {
    let t = p.transpose();
    *p += t;
    *p *= 0.5;
}

/// Constant-velocity prediction over `dt` frames.
pub fn kf_predict(s: &KalmanState, dt: f64, noise: &NoiseConfig) -> KalmanState {
    let n = s.layout.dim();
    let v = s.layout.velocity_offset();
    let mut f = DMatrix::identity(n, n);
    for i in 0..3 {
        f[(i, v + i)] = dt;
    }
    let mut mean = &f * &s.mean;
    if s.layout == StateLayout::FullBox10 {
        mean[YAW] = wrap_angle(mean[YAW]);
    }
    let mut covariance = &f * &s.covariance * f.transpose();
    covariance += DMatrix::from_diagonal(&noise.process(s.layout));
    symmetrize(&mut covariance);
    KalmanState {
        layout: s.layout,
        mean,
        covariance,
    }
}

/// Yaw innovation `measured - predicted`, wrapped and folded so that a box
/// seen back-to-front counts as the same heading. Always within `[-π/2, π/2]`.
pub fn yaw_residual(predicted_yaw: f64, measured_yaw: f64) -> f64 {
    let r = wrap_angle(measured_yaw - predicted_yaw);
    if r > FRAC_PI_2 {
        r - PI
    } else if r < -FRAC_PI_2 {
        r + PI
    } else {
        r
    }
}

/// Linear Kalman update with a single detection.
///
/// Uses the Joseph form so the posterior covariance stays symmetric PSD.
pub fn kf_update(s: &KalmanState, det: &Detection, noise: &NoiseConfig) -> Result<KalmanState> {
    let layout = s.layout;
    let (n, m) = (layout.dim(), layout.measurement_dim());
    let z = measurement_vector(det, layout);

    let mut innovation = &z - s.mean.rows(0, m);
    if layout == StateLayout::FullBox10 {
        innovation[YAW] = yaw_residual(s.mean[YAW], z[YAW]);
    }

    let p = &s.covariance;
    let r = DMatrix::from_diagonal(&noise.measurement(layout));
    // H selects the first m state components.
    let p_ht = p.columns(0, m).into_owned();
    let mut innov_cov = p.view((0, 0), (m, m)) + &r;
    symmetrize(&mut innov_cov);
    let s_inv = innov_cov.cholesky().ok_or(Error::SingularInnovation)?.inverse();
    let gain = &p_ht * s_inv;

    let mut mean = &s.mean + &gain * innovation;
    if layout == StateLayout::FullBox10 {
        mean[YAW] = wrap_angle(mean[YAW]);
    }

    let mut i_kh = DMatrix::identity(n, n);
    {
        let mut measured = i_kh.columns_mut(0, m);
        measured -= &gain;
    }
    let mut covariance = &i_kh * p * i_kh.transpose() + &gain * r * gain.transpose();
    symmetrize(&mut covariance);

    Ok(KalmanState {
        layout,
        mean,
        covariance,
    })
}

/// Mahalanobis norm `sqrt(νᵀ S⁻¹ ν)` of a centre innovation.
pub fn mahalanobis_distance(innovation: &Vector3<f64>, s: &Matrix3<f64>) -> Result<f64> {
    let chol = s.cholesky().ok_or(Error::SingularInnovation)?;
    let w = chol.solve(innovation);
    Ok(innovation.dot(&w).max(0.0).sqrt())
}

fn lerp(track: f64, det: f64, alpha: f64) -> f64 {
    if track == det {
        track
    } else {
        alpha * det + (1.0 - alpha) * track
    }
}

/// Exponential smoothing of extents and yaw towards a detection.
///
/// The centre is returned unchanged: it is owned by the filter.
pub fn ema_smooth(track_box: &OrientedBox3D, det_box: &OrientedBox3D, alpha: f64) -> OrientedBox3D {
    let (t, d) = (track_box.extent(), det_box.extent());
    let extent = [
        lerp(t[0], d[0], alpha),
        lerp(t[1], d[1], alpha),
        lerp(t[2], d[2], alpha),
    ];
    let residual = yaw_residual(track_box.yaw(), det_box.yaw());
    let yaw = if residual == 0.0 {
        track_box.yaw()
    } else if alpha == 1.0 {
        // detection heading, folded onto the track's half-plane
        if wrap_angle(det_box.yaw() - track_box.yaw()).abs() <= FRAC_PI_2 {
            det_box.yaw()
        } else {
            wrap_angle(det_box.yaw() + PI)
        }
    } else {
        wrap_angle(track_box.yaw() + alpha * residual)
    };
    OrientedBox3D::from_arrays(track_box.center(), extent, yaw).expect("convex mix of valid extents")
}
