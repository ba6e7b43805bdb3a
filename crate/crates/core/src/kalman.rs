//! Constant-velocity Kalman filter over box center, width and height.
//!
//! The state is `[xc, yc, w, h, vxc, vyc, vw, vh]` with a unit time step.
//! Noise standard deviations scale with the current box size: x-like
//! components use the width, y-like components the height.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

pub type StateVector = SVector<f64, 8>;
pub type StateMatrix = SMatrix<f64, 8, 8>;
pub type MeasurementVector = SVector<f64, 4>;
pub type MeasurementMatrix = SMatrix<f64, 4, 4>;

/// 95th percentile of the chi-square distribution with 4 degrees of freedom.
pub const CHI2_95_4DOF: f64 = 9.4877;

/// Smallest width/height kept in the mean after an update.
pub const MIN_SIZE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KalmanConfig {
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        KalmanConfig {
            std_weight_position: 1.0 / 20.0,
            std_weight_velocity: 1.0 / 160.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateMatrix,
}

impl KalmanState {
    /// Box for the current mean; negative sizes read as zero.
    pub fn to_box(&self) -> BoundingBox {
        let m = &self.mean;
        BoundingBox::from_center(m[0], m[1], m[2].max(0.0), m[3].max(0.0))
    }

    pub fn center(&self) -> (f64, f64) {
        (self.mean[0], self.mean[1])
    }
}

pub fn measurement_of(b: &BoundingBox) -> MeasurementVector {
    let (cx, cy) = b.center();
    MeasurementVector::new(cx, cy, b.w, b.h)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KalmanFilter {
    pub config: KalmanConfig,
}

impl KalmanFilter {
    pub fn new(config: KalmanConfig) -> Self {
        KalmanFilter { config }
    }

    fn size_scaled(w: f64, h: f64, weight: f64) -> [f64; 4] {
        [weight * w, weight * h, weight * w, weight * h]
    }

    pub fn initiate(&self, measurement: &BoundingBox) -> Result<KalmanState> {
        measurement.validate()?;
        let z = measurement_of(measurement);
        let mut mean = StateVector::zeros();
        mean.fixed_rows_mut::<4>(0).copy_from(&z);

        let (w, h) = (z[2], z[3]);
        let pos = Self::size_scaled(w, h, 2.0 * self.config.std_weight_position);
        let vel = Self::size_scaled(w, h, 10.0 * self.config.std_weight_velocity);
        let mut covariance = StateMatrix::zeros();
        for i in 0..4 {
            covariance[(i, i)] = pos[i] * pos[i];
            covariance[(i + 4, i + 4)] = vel[i] * vel[i];
        }
        Ok(KalmanState { mean, covariance })
    }

    fn motion_matrix() -> StateMatrix {
        let mut f = StateMatrix::identity();
        for i in 0..4 {
            f[(i, i + 4)] = 1.0;
        }
        f
    }

    pub fn predict(&self, state: &KalmanState) -> KalmanState {
        let (w, h) = (state.mean[2], state.mean[3]);
        let pos = Self::size_scaled(w, h, self.config.std_weight_position);
        let vel = Self::size_scaled(w, h, self.config.std_weight_velocity);
        let mut q = StateMatrix::zeros();
        for i in 0..4 {
            q[(i, i)] = pos[i] * pos[i];
            q[(i + 4, i + 4)] = vel[i] * vel[i];
        }
        let f = Self::motion_matrix();
        let mean = f * state.mean;
        let covariance = symmetrize(&(f * state.covariance * f.transpose() + q));
        KalmanState { mean, covariance }
    }

    fn measurement_noise(&self, state: &KalmanState) -> MeasurementMatrix {
        let (w, h) = (state.mean[2], state.mean[3]);
        let std = Self::size_scaled(w, h, self.config.std_weight_position);
        MeasurementMatrix::from_diagonal(&MeasurementVector::from_iterator(
            std.iter().map(|s| s * s),
        ))
    }

    /// Measurement-space mean and covariance, measurement noise included.
    pub fn project(&self, state: &KalmanState) -> (MeasurementVector, MeasurementMatrix) {
        let mean = state.mean.fixed_rows::<4>(0).into_owned();
        let cov =
            state.covariance.fixed_view::<4, 4>(0, 0).into_owned() + self.measurement_noise(state);
        (mean, cov)
    }

    pub fn update(&self, state: &KalmanState, measurement: &BoundingBox) -> Result<KalmanState> {
        measurement.validate()?;
        let (proj_mean, proj_cov) = self.project(state);
        let chol = proj_cov.cholesky().ok_or(Error::SingularCovariance)?;

        // K = P H^T S^-1, with H selecting the first four components.
        let pht: SMatrix<f64, 8, 4> = state.covariance.fixed_columns::<4>(0).into_owned();
        let gain: SMatrix<f64, 8, 4> = chol.solve(&pht.transpose()).transpose();
        if !gain.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularCovariance);
        }
        let innovation = measurement_of(measurement) - proj_mean;
        let mut mean = state.mean + gain * innovation;
        mean[2] = mean[2].max(MIN_SIZE);
        mean[3] = mean[3].max(MIN_SIZE);

        // Joseph form keeps the posterior symmetric PSD.
        let mut i_kh = StateMatrix::identity();
        {
            let mut cols = i_kh.fixed_columns_mut::<4>(0);
            cols -= &gain;
        }
        let r = self.measurement_noise(state);
        let covariance =
            symmetrize(&(i_kh * state.covariance * i_kh.transpose() + gain * r * gain.transpose()));
        Ok(KalmanState { mean, covariance })
    }

    /// Squared Mahalanobis distance of each candidate in measurement space.
    pub fn gating_distance(
        &self,
        state: &KalmanState,
        candidates: &[BoundingBox],
    ) -> Result<Vec<f64>> {
        let (mean, cov) = self.project(state);
        let chol = cov.cholesky().ok_or(Error::SingularCovariance)?;
        let l = chol.l();
        candidates
            .iter()
            .map(|c| {
                let d = measurement_of(c) - mean;
                let z = l
                    .solve_lower_triangular(&d)
                    .ok_or(Error::SingularCovariance)?;
                Ok(z.norm_squared())
            })
            .collect()
    }
}

pub(crate) fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}
