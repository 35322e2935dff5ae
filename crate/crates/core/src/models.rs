//! Range / range-rate / azimuth sensor and constant-velocity target model.
//!
//! Track state order is `(ξ, v_ξ, η, v_η)`; registration is `(ξ₀, η₀, ψ₀)`
//! with `ψ₀` in radians. A sensor at `(ξ₀, η₀)` with boresight `ψ₀` sees a
//! target at relative offset `(dx, dy)` with
//!
//! ```text
//! r = √(dx² + dy²),  ṙ = (v_ξ dx + v_η dy) / r,  θ = atan2(dy, dx) − ψ₀
//! ```
//!
//! so a target moving away from the sensor has `ṙ > 0`.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::info::SquareRootInfo;
use crate::matrix::Matrix;

pub const TRACK_DIM: usize = 4;
pub const REG_DIM: usize = 3;
pub const MEAS_DIM: usize = 3;

/// Targets closer than this to a sensor are rejected.
pub const R_MIN: f64 = 0.1;

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let two_pi = 2.0 * PI;
    let mut w = libm::fmod(a + PI, two_pi);
    if w <= 0.0 {
        w += two_pi;
    }
    w - PI
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackState {
    pub xi: f64,
    pub v_xi: f64,
    pub eta: f64,
    pub v_eta: f64,
}

impl TrackState {
    pub const fn new(xi: f64, v_xi: f64, eta: f64, v_eta: f64) -> Self {
        Self { xi, v_xi, eta, v_eta }
    }

    pub fn to_array(self) -> [f64; TRACK_DIM] {
        [self.xi, self.v_xi, self.eta, self.v_eta]
    }

    /// Panics unless `s` has four entries.
    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(s[0], s[1], s[2], s[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Registration {
    pub xi0: f64,
    pub eta0: f64,
    /// Radians.
    pub psi0: f64,
}

impl Registration {
    /// Wraps `psi0` into `(−π, π]`.
    pub fn new(xi0: f64, eta0: f64, psi0: f64) -> Self {
        Self { xi0, eta0, psi0: wrap_angle(psi0) }
    }

    pub fn from_degrees(xi0: f64, eta0: f64, psi0_deg: f64) -> Self {
        Self::new(xi0, eta0, psi0_deg.to_radians())
    }

    pub fn to_array(self) -> [f64; REG_DIM] {
        [self.xi0, self.eta0, self.psi0]
    }

    /// Takes `psi0` as is; used for solved estimates, which are not wrapped.
    pub fn from_slice(s: &[f64]) -> Self {
        Self { xi0: s[0], eta0: s[1], psi0: s[2] }
    }
}

/// Standard deviations of the three measurement channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSigmas {
    pub r: f64,
    pub rdot: f64,
    /// Radians.
    pub theta: f64,
}

impl NoiseSigmas {
    pub fn new(r: f64, rdot: f64, theta: f64) -> Result<Self> {
        let s = Self { r, rdot, theta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.r, self.rdot, self.theta].iter().all(|s| *s > 0.0 && s.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonPositiveSigma)
        }
    }

    pub fn to_array(self) -> [f64; MEAS_DIM] {
        [self.r, self.rdot, self.theta]
    }
}

/// Noise-free `(r, ṙ, θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub r: f64,
    pub rdot: f64,
    pub theta: f64,
}

impl Observation {
    pub fn to_array(self) -> [f64; MEAS_DIM] {
        [self.r, self.rdot, self.theta]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub r: f64,
    pub rdot: f64,
    /// Sensor frame, radians.
    pub theta: f64,
    pub sensor_id: usize,
    pub t: f64,
    pub sigmas: NoiseSigmas,
}

impl Measurement {
    pub fn observation(&self) -> Observation {
        Observation { r: self.r, rdot: self.rdot, theta: self.theta }
    }

    /// Target position implied by `(r, θ)` through registration `a`.
    pub fn back_project(&self, a: &Registration) -> (f64, f64) {
        let bearing = self.theta + a.psi0;
        (a.xi0 + self.r * libm::cos(bearing), a.eta0 + self.r * libm::sin(bearing))
    }
}

pub fn predict_measurement(x: &TrackState, a: &Registration) -> Result<Observation> {
    let dx = x.xi - a.xi0;
    let dy = x.eta - a.eta0;
    let r = libm::hypot(dx, dy);
    if !(r > R_MIN) {
        return Err(Error::SingularGeometry { range: r });
    }
    Ok(Observation {
        r,
        rdot: (x.v_xi * dx + x.v_eta * dy) / r,
        theta: wrap_angle(libm::atan2(dy, dx) - a.psi0),
    })
}

/// First-order model `h(x, a) ≈ C_x x + C_a a + u₁` about a linearization
/// point. Rows are `(r, ṙ, θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub cx: [[f64; TRACK_DIM]; MEAS_DIM],
    pub ca: [[f64; REG_DIM]; MEAS_DIM],
    pub u1: [f64; MEAS_DIM],
    /// `h(x*, a*)`.
    pub h: Observation,
}

pub fn jacobians(x: &TrackState, a: &Registration) -> Result<Linearization> {
    let h = predict_measurement(x, a)?;
    let dx = x.xi - a.xi0;
    let dy = x.eta - a.eta0;
    let r = h.r;
    let r2 = r * r;
    let (ux, uy) = (dx / r, dy / r);
    let drd_xi = x.v_xi / r - h.rdot * dx / r2;
    let drd_eta = x.v_eta / r - h.rdot * dy / r2;

    let cx = [
        [ux, 0.0, uy, 0.0],
        [drd_xi, ux, drd_eta, uy],
        [-dy / r2, 0.0, dx / r2, 0.0],
    ];
    let ca = [
        [-ux, -uy, 0.0],
        [-drd_xi, -drd_eta, 0.0],
        [dy / r2, -dx / r2, -1.0],
    ];
    let xs = x.to_array();
    let as_ = a.to_array();
    let hv = h.to_array();
    let mut u1 = [0.0; MEAS_DIM];
    for i in 0..MEAS_DIM {
        let lin: f64 = cx[i].iter().zip(&xs).map(|(c, v)| c * v).sum::<f64>()
            + ca[i].iter().zip(&as_).map(|(c, v)| c * v).sum::<f64>();
        u1[i] = hv[i] - lin;
    }
    Ok(Linearization { cx, ca, u1, h })
}

/// Three linear measurement rows `C_x x + C_a a = rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementBlock {
    pub cx: [[f64; TRACK_DIM]; MEAS_DIM],
    pub ca: [[f64; REG_DIM]; MEAS_DIM],
    pub rhs: [f64; MEAS_DIM],
}

impl MeasurementBlock {
    /// `rhs = o − u₁`, with the angle innovation `θ − h_θ` wrapped so that a
    /// target near the ±π seam does not produce a 2π jump.
    pub fn from_observation(lin: &Linearization, o: &Observation) -> Self {
        let innov = [o.r - lin.h.r, o.rdot - lin.h.rdot, wrap_angle(o.theta - lin.h.theta)];
        let hv = lin.h.to_array();
        let mut rhs = [0.0; MEAS_DIM];
        for i in 0..MEAS_DIM {
            rhs[i] = innov[i] + (hv[i] - lin.u1[i]);
        }
        Self { cx: lin.cx, ca: lin.ca, rhs }
    }

    /// Divides each row by its channel sigma, giving unit measurement noise.
    pub fn whiten(&self, sigmas: &NoiseSigmas) -> Result<Self> {
        sigmas.validate()?;
        Ok(self.scaled(&sigmas.to_array().map(|s| 1.0 / s)))
    }

    pub fn unwhiten(&self, sigmas: &NoiseSigmas) -> Result<Self> {
        sigmas.validate()?;
        Ok(self.scaled(&sigmas.to_array()))
    }

    fn scaled(&self, f: &[f64; MEAS_DIM]) -> Self {
        let mut out = *self;
        for i in 0..MEAS_DIM {
            out.cx[i].iter_mut().for_each(|v| *v *= f[i]);
            out.ca[i].iter_mut().for_each(|v| *v *= f[i]);
            out.rhs[i] *= f[i];
        }
        out
    }
}

/// Which square-root information array is used for the process noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProcessNoise {
    /// `R_w = diag(q_ξ W, q_η W)` with the printed `W`.
    #[default]
    Verbatim,
    /// Upper Cholesky factor of `(q² WᵀW)⁻¹` per axis, i.e. the information
    /// square root of the usual white-acceleration covariance
    /// `q² [[ΔT³/3, ΔT²/2], [ΔT²/2, ΔT]]`.
    StandardCv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvModel {
    pub dt: f64,
    pub q_xi: f64,
    pub q_eta: f64,
    pub noise: ProcessNoise,
}

impl CvModel {
    pub fn new(dt: f64, q_xi: f64, q_eta: f64) -> Result<Self> {
        let m = Self { dt, q_xi, q_eta, noise: ProcessNoise::Verbatim };
        m.validate()?;
        Ok(m)
    }

    pub fn with_noise(mut self, noise: ProcessNoise) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument("time step must be positive"));
        }
        if !(self.q_xi > 0.0 && self.q_eta > 0.0) {
            return Err(Error::InvalidArgument("random-walk intensities must be positive"));
        }
        Ok(())
    }

    /// Per-axis 2×2 block `W` over (position, velocity).
    pub fn w_block(&self) -> [[f64; 2]; 2] {
        let dt = self.dt;
        [[libm::sqrt(dt * dt * dt / 3.0), libm::sqrt(3.0 * dt / 4.0)], [0.0, libm::sqrt(dt / 4.0)]]
    }

    /// Per-axis white-acceleration covariance `q² WᵀW`.
    pub fn axis_covariance(&self, q: f64) -> [[f64; 2]; 2] {
        let dt = self.dt;
        let q2 = q * q;
        [[q2 * dt * dt * dt / 3.0, q2 * dt * dt / 2.0], [q2 * dt * dt / 2.0, q2 * dt]]
    }
}

pub struct CvTransition {
    pub phi: Matrix,
    pub g: Matrix,
    pub u2: [f64; TRACK_DIM],
    pub phi_inv: Matrix,
}

pub fn cv_transition(m: &CvModel) -> CvTransition {
    let phi = |dt: f64| {
        Matrix::from_rows(&[
            [1.0, dt, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, dt],
            [0.0, 0.0, 0.0, 1.0],
        ])
    };
    CvTransition { phi: phi(m.dt), g: Matrix::identity(TRACK_DIM), u2: [0.0; TRACK_DIM], phi_inv: phi(-m.dt) }
}

pub fn process_noise_info(m: &CvModel) -> SquareRootInfo {
    let mut r = Matrix::zeros(TRACK_DIM, TRACK_DIM);
    for (axis, q) in [m.q_xi, m.q_eta].into_iter().enumerate() {
        let block = match m.noise {
            ProcessNoise::Verbatim => {
                let w = m.w_block();
                [[q * w[0][0], q * w[0][1]], [0.0, q * w[1][1]]]
            }
            ProcessNoise::StandardCv => standard_axis_info(&m.axis_covariance(q)),
        };
        let o = 2 * axis;
        for i in 0..2 {
            for j in 0..2 {
                r[(o + i, o + j)] = block[i][j];
            }
        }
    }
    SquareRootInfo { r, z: alloc::vec![0.0; TRACK_DIM] }
}

/// Upper `U` with `UᵀU = P⁻¹` for a 2×2 SPD `P`.
fn standard_axis_info(p: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let (a, b, c) = (p[1][1] / det, -p[0][1] / det, p[0][0] / det);
    let u00 = libm::sqrt(a);
    let u01 = b / u00;
    let u11 = libm::sqrt(c - u01 * u01);
    [[u00, u01], [0.0, u11]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn on_boresight_static_target() {
        let a = Registration::new(1.0, -2.0, 0.0);
        let o = predict_measurement(&TrackState::new(6.0, 0.0, -2.0, 0.0), &a).unwrap();
        assert_eq!((o.r, o.theta, o.rdot), (5.0, 0.0, 0.0));
    }

    #[test]
    fn mount_angle_shifts_bearing() {
        let a = Registration::from_degrees(0.5, 0.5, 10.0);
        let o = predict_measurement(&TrackState::new(1.5, 0.0, 0.5, 0.0), &a).unwrap();
        assert!(close(o.theta, -10f64.to_radians(), 1e-15));
        assert!(close(o.theta, -0.174533, 1e-6));
    }

    #[test]
    fn opening_range_is_positive() {
        let x = TrackState::new(10.0, 1.0, 0.0, 0.0);
        let a = Registration::default();
        let o = predict_measurement(&x, &a).unwrap();
        assert_eq!(o.rdot, 1.0);
        let later = TrackState::new(10.001, 1.0, 0.0, 0.0);
        let fd = (predict_measurement(&later, &a).unwrap().r - o.r) / 0.001;
        assert!(close(fd, o.rdot, 1e-9));
    }

    #[test]
    fn too_close_is_singular() {
        let err = predict_measurement(&TrackState::new(0.05, 0.0, 0.0, 0.0), &Registration::default());
        assert!(matches!(err, Err(Error::SingularGeometry { .. })));
    }

    #[test]
    fn dead_ahead_jacobian() {
        let lin = jacobians(&TrackState::new(10.0, 0.0, 0.0, 0.0), &Registration::default()).unwrap();
        assert_eq!(lin.cx[0][0], 1.0);
        assert_eq!(lin.cx[0][2], 0.0);
        assert!(close(lin.cx[2][2], 0.1, 1e-16));
        assert_eq!(lin.ca[2][2], -1.0);
    }

    #[test]
    fn u1_reproduces_prediction() {
        let x = TrackState::new(7.0, -0.4, 3.0, 1.2);
        let a = Registration::from_degrees(2.0, 0.6, 10.0);
        let lin = jacobians(&x, &a).unwrap();
        let xs = x.to_array();
        let as_ = a.to_array();
        for i in 0..3 {
            let v: f64 = lin.cx[i].iter().zip(&xs).map(|(c, v)| c * v).sum::<f64>()
                + lin.ca[i].iter().zip(&as_).map(|(c, v)| c * v).sum::<f64>()
                + lin.u1[i];
            assert!(close(v, lin.h.to_array()[i], 1e-13));
        }
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!(close(wrap_angle(-PI), PI, 1e-15));
        assert!(close(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, 1e-15));
        assert!(close(wrap_angle(-7.0), -7.0 + 2.0 * PI, 1e-15));
    }

    #[test]
    fn whitening_scales_rows() {
        let lin = jacobians(&TrackState::new(5.0, 0.0, 1.0, 0.0), &Registration::default()).unwrap();
        let block = MeasurementBlock::from_observation(&lin, &lin.h);
        let unit = block.whiten(&NoiseSigmas::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(unit, block);
        let w = block.whiten(&NoiseSigmas::new(0.1, 0.2, 1f64.to_radians()).unwrap()).unwrap();
        assert!(close(w.cx[0][0], block.cx[0][0] * 10.0, 1e-14));
        assert!(close(w.rhs[1], block.rhs[1] * 5.0, 1e-12));
        assert!(block.whiten(&NoiseSigmas { r: 0.0, rdot: 1.0, theta: 1.0 }).is_err());
    }

    #[test]
    fn cv_step_and_inverse() {
        let t = cv_transition(&CvModel::new(0.1, 1.0, 1.0).unwrap());
        assert_eq!(t.phi.mul_vec(&[0.0, 1.0, 0.0, 0.0]), alloc::vec![0.1, 1.0, 0.0, 0.0]);
        assert_eq!(t.phi.mul(&t.phi_inv), Matrix::identity(4));
        assert_eq!(t.g, Matrix::identity(4));
    }

    #[test]
    fn printed_w_at_unit_step() {
        let m = CvModel::new(1.0, 1.0, 1.0).unwrap();
        let info = process_noise_info(&m);
        assert!(close(info.r[(0, 0)], 0.57735, 1e-5));
        assert!(close(info.r[(0, 1)], 0.86603, 1e-5));
        assert!(close(info.r[(1, 1)], 0.5, 1e-15));
        assert_eq!(info.r[(0, 2)], 0.0);
        assert_eq!(info.r[(1, 3)], 0.0);
        assert!(info.z.iter().all(|z| *z == 0.0));
    }

    #[test]
    fn standard_noise_inverts_axis_covariance() {
        let m = CvModel::new(0.1, 0.3, 0.3).unwrap().with_noise(ProcessNoise::StandardCv);
        let info = process_noise_info(&m);
        let p = info.covariance().unwrap();
        let want = m.axis_covariance(0.3);
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(p[(i, j)], want[i][j], 1e-12 * want[1][1]));
                assert!(close(p[(2 + i, 2 + j)], want[i][j], 1e-12 * want[1][1]));
            }
        }
    }
}
