//! Equations of motion, the three integrals of motion, numerical integration
//! with drift monitoring, and the relativistic field rescaling.
//!
//! The state stays in the cylindrical chart throughout (internally the
//! integrator propagates the conserved-momentum form of the same equations;
//! see the note at [`integrate`]). Axis crossings and chart-boundary
//! approaches terminate integration with a flagged reason on the returned
//! trajectory rather than silently switching charts; trajectories with
//! `I != 0` never reach the axis, so this only affects genuinely degenerate
//! runs. Analytic continuation across the axis, when needed, is a caller
//! concern.

use crate::error::{Error, Result};
use crate::field::FieldStrengthB;
use crate::geometry::{validate_point, CylPoint, SpaceModel, R_MIN};
use std::f64::consts::PI;

/// Chart position plus coordinate velocities `(dr/dt, dphi/dt, dz/dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylState {
    pub point: CylPoint,
    pub vr: f64,
    pub vphi: f64,
    pub vz: f64,
}

impl CylState {
    pub fn new(point: CylPoint, vr: f64, vphi: f64, vz: f64) -> Self {
        CylState {
            point,
            vr,
            vphi,
            vz,
        }
    }
}

/// The three integrals of motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionConstants {
    /// Squared speed (energy), `epsilon`.
    pub epsilon: f64,
    /// Azimuthal integral `I` from the cyclic phi coordinate.
    pub i_phi: f64,
    /// Transversal integral `A >= 0`.
    pub a_transverse: f64,
}

impl MotionConstants {
    fn abs_delta(&self, other: &MotionConstants) -> MotionConstants {
        MotionConstants {
            epsilon: (self.epsilon - other.epsilon).abs(),
            i_phi: (self.i_phi - other.i_phi).abs(),
            a_transverse: (self.a_transverse - other.a_transverse).abs(),
        }
    }

    fn max_with(&mut self, other: &MotionConstants) {
        self.epsilon = self.epsilon.max(other.epsilon);
        self.i_phi = self.i_phi.max(other.i_phi);
        self.a_transverse = self.a_transverse.max(other.a_transverse);
    }

    pub fn max_component(&self) -> f64 {
        self.epsilon.max(self.i_phi).max(self.a_transverse)
    }
}

/// Step-size policy for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    FixedStep {
        h: f64,
    },
    Adaptive {
        rel_tol: f64,
        abs_tol: f64,
        h_min: f64,
        h_max: f64,
    },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Adaptive {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_min: 1e-12,
            h_max: 0.1,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepControl::FixedStep { h } => {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::InvalidParams(format!("fixed step h = {h}")));
                }
            }
            StepControl::Adaptive {
                rel_tol,
                abs_tol,
                h_min,
                h_max,
            } => {
                if !(rel_tol > 0.0 && abs_tol > 0.0 && h_min > 0.0 && h_min <= h_max) {
                    return Err(Error::InvalidParams(format!("adaptive control {self:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Why [`integrate`] stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminationReason {
    /// Reached `t_end`.
    Completed,
    /// Approach to the azimuth-degenerate axis (`1/sinh r` terms blow up).
    AxisSingularity { t: f64 },
    /// Approach to the S3 chart boundary `|z| = pi/2`.
    ChartBoundary { t: f64 },
    /// Adaptive step fell below `h_min`.
    StepUnderflow { t: f64 },
}

impl TerminationReason {
    pub fn is_completed(&self) -> bool {
        matches!(self, TerminationReason::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            TerminationReason::Completed => "completed",
            TerminationReason::AxisSingularity { .. } => "axis-singularity",
            TerminationReason::ChartBoundary { .. } => "chart-boundary",
            TerminationReason::StepUnderflow { .. } => "step-underflow",
        }
    }
}

/// An integrated trajectory: samples at accepted steps plus the per-integral
/// maximum drift away from the initial constants.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, CylState)>,
    pub drift: MotionConstants,
    pub initial_constants: MotionConstants,
    pub termination: TerminationReason,
}

impl Trajectory {
    pub fn final_state(&self) -> &CylState {
        &self.samples.last().expect("trajectory has samples").1
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().expect("trajectory has samples").0
    }
}

/// Right-hand sides `(dV^r/dt, dV^phi/dt, dV^z/dt)` of the equations of
/// motion in the chart, with `B` absorbing all physical constants.
///
/// Errors with [`Error::AxisSingularity`] when a `1/sinh r` (or `1/sin r`,
/// `1/r`) term is actually required within `R_MIN` of the axis; terms with a
/// vanishing prefactor are dropped instead so field-free radial rays through
/// the origin remain integrable.
pub fn eom_rhs(model: SpaceModel, b: FieldStrengthB, s: &CylState) -> Result<[f64; 3]> {
    validate_point(model, &s.point)?;
    let CylState {
        point,
        vr,
        vphi,
        vz,
    } = *s;
    match model {
        SpaceModel::Hyperbolic => {
            let (sr, cr) = (point.r.sinh(), point.r.cosh());
            let tz = point.z.tanh();
            let c2z = point.z.cosh().powi(2);
            let szcz = point.z.sinh() * point.z.cosh();
            let a_r = -2.0 * tz * vr * vz + sr * cr * vphi * vphi + b.0 * sr / c2z * vphi;
            let coupling = vphi * vr;
            let lorentz = b.0 * vr;
            let a_phi = if sr.abs() <= R_MIN {
                // Gamma^phi_r_phi diverges: any azimuthal velocity on the
                // axis is chart-degenerate, not just the coupled terms.
                if vphi != 0.0 || lorentz != 0.0 {
                    return Err(Error::AxisSingularity { r: point.r });
                }
                0.0
            } else {
                -2.0 * cr / sr * coupling - 2.0 * tz * vphi * vz - lorentz / (c2z * sr)
            };
            let a_z = szcz * (vr * vr + sr * sr * vphi * vphi);
            Ok([a_r, a_phi, a_z])
        }
        SpaceModel::Spherical => {
            let (sr, cr) = point.r.sin_cos();
            let tz = point.z.tan();
            let c2z = point.z.cos().powi(2);
            let szcz = point.z.sin() * point.z.cos();
            let a_r = 2.0 * tz * vr * vz + sr * cr * vphi * vphi + b.0 * sr / c2z * vphi;
            let coupling = vphi * vr;
            let lorentz = b.0 * vr;
            let a_phi = if sr.abs() <= R_MIN {
                if vphi != 0.0 || lorentz != 0.0 {
                    return Err(Error::AxisSingularity { r: point.r });
                }
                0.0
            } else {
                -2.0 * cr / sr * coupling + 2.0 * tz * vphi * vz - lorentz / (c2z * sr)
            };
            let a_z = -szcz * (vr * vr + sr * sr * vphi * vphi);
            Ok([a_r, a_phi, a_z])
        }
        SpaceModel::Euclidean => {
            let r = point.r;
            let a_r = r * vphi * vphi + b.0 * r * vphi;
            let coupling = vphi * vr;
            let lorentz = b.0 * vr;
            let a_phi = if r <= R_MIN {
                if vphi != 0.0 || lorentz != 0.0 {
                    return Err(Error::AxisSingularity { r });
                }
                0.0
            } else {
                -2.0 * coupling / r - lorentz / r
            };
            Ok([a_r, a_phi, 0.0])
        }
    }
}

/// Evaluate the three integrals of motion at a state.
///
/// `A` and `epsilon` are assembled from the momentum products `cosh^2 z vr`
/// and `cosh^2 z sinh r vphi`: on H3 runs with large `|z|` the velocities
/// underflow and `cosh^4 z` overflows while those products stay O(1).
pub fn invariants_of(model: SpaceModel, b: FieldStrengthB, s: &CylState) -> MotionConstants {
    let CylState {
        point,
        vr,
        vphi,
        vz,
    } = *s;
    let (sr, c2z, potential) = match model {
        SpaceModel::Hyperbolic => (
            point.r.sinh(),
            point.z.cosh().powi(2),
            b.0 * (point.r.cosh() - 1.0),
        ),
        SpaceModel::Spherical => (
            point.r.sin(),
            point.z.cos().powi(2),
            -b.0 * (point.r.cos() - 1.0),
        ),
        SpaceModel::Euclidean => (point.r, 1.0, b.0 * point.r * point.r / 2.0),
    };
    let p_r = c2z * vr;
    let p_phi_over_sr = c2z * sr * vphi;
    MotionConstants {
        epsilon: p_r * vr + p_phi_over_sr * (sr * vphi) + vz * vz,
        i_phi: p_phi_over_sr * sr + potential,
        a_transverse: p_r * p_r + p_phi_over_sr * p_phi_over_sr,
    }
}

/// Relativistic reduction: the non-relativistic solution machinery applies
/// verbatim with `B -> lambda B`, `lambda = mc^2/E in (0, 1)`. Runs using the
/// rescaled field must additionally keep `epsilon < 1`.
pub fn effective_relativistic_b(b: FieldStrengthB, lambda: f64) -> Result<FieldStrengthB> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidLambda(lambda));
    }
    Ok(FieldStrengthB(lambda * b.0))
}

// Guards at which integration aborts rather than stepping into a singular
// region; kept well above R_MIN so the RHS stays finite at the last sample.
const AXIS_GUARD: f64 = 1e-8;
const BOUNDARY_GUARD: f64 = 1e-8;

fn boundary_check(model: SpaceModel, y: &[f64; 6], t: f64) -> Option<TerminationReason> {
    match model {
        SpaceModel::Hyperbolic | SpaceModel::Euclidean => {
            if y[0] <= AXIS_GUARD {
                return Some(TerminationReason::AxisSingularity { t });
            }
        }
        SpaceModel::Spherical => {
            if y[0] <= AXIS_GUARD || y[0] >= PI - AXIS_GUARD {
                return Some(TerminationReason::AxisSingularity { t });
            }
            if y[2].abs() >= PI / 2.0 - BOUNDARY_GUARD {
                return Some(TerminationReason::ChartBoundary { t });
            }
        }
    }
    None
}

// The integrator works in the momentum variables of the Lagrange form,
// y = [r, phi, z, p_r, p_phi, vz] with p_r = g_rr dr/dt and
// p_phi = g_phiphi dphi/dt. The chart velocities decay like sech^2 z when
// z runs away on H3 while the momenta stay O(1), so error control keeps
// their relative accuracy and the integrals of motion stay conditioned.

/// Metric factors at a chart position: `(sr, cr, c2z, szcz)` standing for
/// sinh/sin/identity of r, cosh/cos/1 of r, the transverse conformal factor,
/// and the z-force factor.
fn metric_factors(model: SpaceModel, r: f64, z: f64) -> (f64, f64, f64, f64) {
    match model {
        SpaceModel::Hyperbolic => (r.sinh(), r.cosh(), z.cosh().powi(2), z.sinh() * z.cosh()),
        SpaceModel::Spherical => {
            let (sr, cr) = r.sin_cos();
            (sr, cr, z.cos().powi(2), -z.sin() * z.cos())
        }
        SpaceModel::Euclidean => (r, 1.0, 1.0, 0.0),
    }
}

fn to_momentum(model: SpaceModel, s: &CylState) -> [f64; 6] {
    let (sr, _, c2z, _) = metric_factors(model, s.point.r, s.point.z);
    [
        s.point.r,
        s.point.phi,
        s.point.z,
        c2z * s.vr,
        c2z * sr * sr * s.vphi,
        s.vz,
    ]
}

fn state_of(model: SpaceModel, y: &[f64; 6]) -> CylState {
    let (sr, _, c2z, _) = metric_factors(model, y[0], y[2]);
    CylState::new(
        CylPoint::new(y[0], y[1], y[2]),
        y[3] / c2z,
        y[4] / (c2z * sr * sr),
        y[5],
    )
}

fn rhs6(model: SpaceModel, b: FieldStrengthB, y: &[f64; 6]) -> Result<[f64; 6]> {
    let (sr, cr, c2z, szcz) = metric_factors(model, y[0], y[2]);
    let (p_r, p_phi, vz) = (y[3], y[4], y[5]);
    if sr.abs() <= R_MIN {
        // Only the azimuthal momentum carries 1/sr singularities; a pure
        // radial ray through the axis stays evaluable.
        if p_phi != 0.0 {
            return Err(Error::AxisSingularity { r: y[0] });
        }
        // szcz / c2z = tanh z (tan z on S3), so c2z never appears squared.
        return Ok([
            p_r / c2z,
            0.0,
            vz,
            0.0,
            -b.0 * sr * p_r / c2z,
            szcz / c2z * p_r * p_r / c2z,
        ]);
    }
    let transverse = p_r * p_r + (p_phi / sr) * (p_phi / sr);
    Ok([
        p_r / c2z,
        p_phi / (c2z * sr * sr),
        vz,
        (cr * p_phi * p_phi / (sr * sr * sr) + b.0 * p_phi / sr) / c2z,
        -b.0 * sr * p_r / c2z,
        szcz / c2z * transverse / c2z,
    ])
}

fn add_scaled(y: &[f64; 6], terms: &[(f64, &[f64; 6])]) -> [f64; 6] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..6 {
            out[i] += c * k[i];
        }
    }
    out
}

fn rk4_step(model: SpaceModel, b: FieldStrengthB, y: &[f64; 6], h: f64) -> Result<[f64; 6]> {
    let k1 = rhs6(model, b, y)?;
    let k2 = rhs6(model, b, &add_scaled(y, &[(h / 2.0, &k1)]))?;
    let k3 = rhs6(model, b, &add_scaled(y, &[(h / 2.0, &k2)]))?;
    let k4 = rhs6(model, b, &add_scaled(y, &[(h, &k3)]))?;
    Ok(add_scaled(
        y,
        &[
            (h / 6.0, &k1),
            (h / 3.0, &k2),
            (h / 3.0, &k3),
            (h / 6.0, &k4),
        ],
    ))
}

// Dormand-Prince 5(4) coefficients. The system is autonomous, so the stage
// times never enter.
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct DpResult {
    y5: [f64; 6],
    err: f64,
    k_last: [f64; 6],
}

fn dp_step(
    model: SpaceModel,
    b: FieldStrengthB,
    y: &[f64; 6],
    k1: &[f64; 6],
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<DpResult> {
    let mut k = [[0.0; 6]; 7];
    k[0] = *k1;
    for stage in 0..6 {
        let mut yi = *y;
        for (j, kj) in k.iter().enumerate().take(stage + 1) {
            let a = DP_A[stage][j];
            if a != 0.0 {
                for i in 0..6 {
                    yi[i] += h * a * kj[i];
                }
            }
        }
        k[stage + 1] = rhs6(model, b, &yi)?;
    }
    let mut y5 = *y;
    let mut y4 = *y;
    for (j, kj) in k.iter().enumerate() {
        for i in 0..6 {
            y5[i] += h * DP_B5[j] * kj[i];
            y4[i] += h * DP_B4[j] * kj[i];
        }
    }
    let mut err = 0.0;
    for i in 0..6 {
        let scale = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
        let e = (y5[i] - y4[i]) / scale;
        err += e * e;
    }
    Ok(DpResult {
        y5,
        err: (err / 6.0).sqrt(),
        k_last: k[6],
    })
}

/// Integrate the equations of motion from `s0` to `t_end`.
///
/// Samples are recorded at every accepted step. On axis, chart-boundary or
/// step-underflow trouble the partial trajectory up to the last good state is
/// returned with the reason flagged in `termination`.
///
/// Internally the ODE is propagated in the conserved-momentum variables
/// (`p_r`, `p_phi`): on H3 the chart velocities decay like `sech^2 z` when
/// `z` runs away, and momentum components keep the step controller's error
/// norm meaningful there. Samples are converted back to chart velocities.
pub fn integrate(
    model: SpaceModel,
    b: FieldStrengthB,
    s0: &CylState,
    t_end: f64,
    ctl: &StepControl,
) -> Result<Trajectory> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParams(format!("t_end = {t_end}")));
    }
    ctl.validate()?;
    if let StepControl::FixedStep { h } = *ctl {
        if t_end / h > 1e9 {
            return Err(Error::InvalidParams(format!(
                "fixed step h = {h} needs more than 1e9 steps for t_end = {t_end}"
            )));
        }
    }
    validate_point(model, &s0.point)?;
    // Azimuthal velocity on the axis is chart-degenerate and must not be
    // silently zeroed by the momentum transform.
    let sr0 = metric_factors(model, s0.point.r, s0.point.z).0;
    if sr0.abs() <= R_MIN && s0.vphi != 0.0 {
        return Err(Error::AxisSingularity { r: s0.point.r });
    }
    let mut y = to_momentum(model, s0);
    // The RHS must be evaluable at the initial state.
    rhs6(model, b, &y)?;

    let initial_constants = invariants_of(model, b, s0);
    let mut drift = MotionConstants {
        epsilon: 0.0,
        i_phi: 0.0,
        a_transverse: 0.0,
    };
    let mut samples = Vec::new();
    let mut t = 0.0;
    samples.push((t, *s0));

    let mut record = |t: f64, y: &[f64; 6], samples: &mut Vec<(f64, CylState)>| {
        let st = state_of(model, y);
        drift.max_with(&invariants_of(model, b, &st).abs_delta(&initial_constants));
        samples.push((t, st));
    };

    let termination = match *ctl {
        StepControl::FixedStep { h } => {
            let mut reason = TerminationReason::Completed;
            let n_full = (t_end / h).floor() as u64;
            let mut step_index = 0u64;
            loop {
                let remaining = t_end - t;
                if remaining <= 1e-14 * t_end.max(1.0) {
                    break;
                }
                let hh = if step_index < n_full { h } else { remaining };
                match rk4_step(model, b, &y, hh) {
                    Ok(y_new) => {
                        step_index += 1;
                        t = if step_index <= n_full {
                            step_index as f64 * h
                        } else {
                            t_end
                        };
                        y = y_new;
                        record(t, &y, &mut samples);
                        if let Some(r) = boundary_check(model, &y, t) {
                            reason = r;
                            break;
                        }
                    }
                    Err(_) => {
                        reason = TerminationReason::AxisSingularity { t };
                        break;
                    }
                }
            }
            reason
        }
        StepControl::Adaptive {
            rel_tol,
            abs_tol,
            h_min,
            h_max,
        } => {
            let mut reason = TerminationReason::Completed;
            let mut h = (t_end / 100.0).min(h_max).max(h_min);
            let mut k1 = rhs6(model, b, &y)?;
            loop {
                let remaining = t_end - t;
                if remaining <= 1e-14 * t_end.max(1.0) {
                    break;
                }
                h = h.min(remaining);
                match dp_step(model, b, &y, &k1, h, rel_tol, abs_tol) {
                    Ok(res) if res.err <= 1.0 => {
                        t += h;
                        y = res.y5;
                        k1 = res.k_last; // FSAL
                        record(t, &y, &mut samples);
                        if let Some(r) = boundary_check(model, &y, t) {
                            reason = r;
                            break;
                        }
                        let factor = if res.err == 0.0 {
                            5.0
                        } else {
                            (0.9 * res.err.powf(-0.2)).clamp(0.2, 5.0)
                        };
                        h = (h * factor).min(h_max);
                    }
                    Ok(res) => {
                        let factor = (0.9 * res.err.powf(-0.2)).clamp(0.1, 1.0);
                        h *= factor;
                        if h < h_min {
                            reason = TerminationReason::StepUnderflow { t };
                            break;
                        }
                    }
                    Err(_) => {
                        h *= 0.2;
                        if h < h_min {
                            reason = TerminationReason::AxisSingularity { t };
                            break;
                        }
                    }
                }
            }
            reason
        }
    };

    Ok(Trajectory {
        samples,
        drift,
        initial_constants,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    const ARCCOSH_2: f64 = 1.316_957_896_924_816_6;

    fn fixed_radius_state_h3() -> CylState {
        // B = 2, cosh r0 = 2: vphi = alpha = -1 at z = 0.
        CylState::new(CylPoint::new(ARCCOSH_2, 0.0, 0.0), 0.0, -1.0, 0.0)
    }

    #[test]
    fn eom_fixed_radius_equilibrium() {
        let acc = eom_rhs(
            SpaceModel::Hyperbolic,
            FieldStrengthB(2.0),
            &fixed_radius_state_h3(),
        )
        .unwrap();
        assert_abs_diff_eq!(acc[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(acc[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(acc[2], 0.0, epsilon = 1e-14);

        // S3 analogue: B = 2, cos r0 = 1/2, vphi = -B/cos r0 = -4.
        let s = CylState::new(CylPoint::new(PI / 3.0, 0.0, 0.0), 0.0, -4.0, 0.0);
        let acc = eom_rhs(SpaceModel::Spherical, FieldStrengthB(2.0), &s).unwrap();
        assert_abs_diff_eq!(acc[0], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn eom_field_free_radial_ray() {
        for model in [
            SpaceModel::Hyperbolic,
            SpaceModel::Spherical,
            SpaceModel::Euclidean,
        ] {
            let s = CylState::new(CylPoint::new(0.4, 0.0, 0.0), 0.7, 0.0, 0.0);
            let acc = eom_rhs(model, FieldStrengthB(0.0), &s).unwrap();
            assert_abs_diff_eq!(acc[0], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(acc[1], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn eom_matches_christoffel_contraction() {
        // a^i = -Gamma^i_jk v^j v^k + Lorentz^i, with the connection taken
        // from the geometry tables and the force from the field module.
        use crate::field::field_strength;
        use crate::geometry::christoffel;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for model in [
            SpaceModel::Hyperbolic,
            SpaceModel::Spherical,
            SpaceModel::Euclidean,
        ] {
            for _ in 0..300 {
                let s = CylState::new(
                    CylPoint::new(
                        rng.gen_range(0.15..1.9),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                        rng.gen_range(-1.1..1.1),
                    ),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let b = FieldStrengthB(rng.gen_range(-2.5..2.5));
                let table = christoffel(model, &s.point).unwrap().gamma;
                let v = [s.vr, s.vphi, s.vz];
                let (sr2, c2z) = match model {
                    SpaceModel::Hyperbolic => (s.point.r.sinh().powi(2), s.point.z.cosh().powi(2)),
                    SpaceModel::Spherical => (s.point.r.sin().powi(2), s.point.z.cos().powi(2)),
                    SpaceModel::Euclidean => (s.point.r * s.point.r, 1.0),
                };
                let f = field_strength(model, b, s.point.r);
                let force = [f * s.vphi / c2z, -f * s.vr / (c2z * sr2), 0.0];
                let got = eom_rhs(model, b, &s).unwrap();
                for i in 0..3 {
                    let mut contraction = 0.0;
                    for j in 0..3 {
                        for k in 0..3 {
                            contraction += table[i][j][k] * v[j] * v[k];
                        }
                    }
                    assert_abs_diff_eq!(got[i], -contraction + force[i], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn eom_axis_guard() {
        let s = CylState::new(CylPoint::new(0.0, 0.0, 0.0), 0.5, 0.3, 0.0);
        assert!(matches!(
            eom_rhs(SpaceModel::Hyperbolic, FieldStrengthB(1.0), &s),
            Err(Error::AxisSingularity { .. })
        ));
        // Azimuthal velocity on the axis is degenerate even with vr = 0.
        let s = CylState::new(CylPoint::new(0.0, 0.0, 0.0), 0.0, 0.3, 0.0);
        assert!(matches!(
            eom_rhs(SpaceModel::Euclidean, FieldStrengthB(0.0), &s),
            Err(Error::AxisSingularity { .. })
        ));
        // Field-free ray through the origin stays evaluable.
        let s = CylState::new(CylPoint::new(0.0, 0.0, 0.0), 0.5, 0.0, 0.2);
        assert!(eom_rhs(SpaceModel::Hyperbolic, FieldStrengthB(0.0), &s).is_ok());
    }

    #[test]
    fn invariants_hand_values() {
        let b = FieldStrengthB(2.0);
        let c = invariants_of(SpaceModel::Hyperbolic, b, &fixed_radius_state_h3());
        assert_abs_diff_eq!(c.i_phi, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.a_transverse, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.epsilon, 3.0, epsilon = 1e-14);

        // Adding axial velocity raises epsilon but leaves A untouched.
        let mut s = fixed_radius_state_h3();
        s.vz = 1.0;
        let c = invariants_of(SpaceModel::Hyperbolic, b, &s);
        assert_abs_diff_eq!(c.epsilon, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.a_transverse, 3.0, epsilon = 1e-14);

        // Zero-velocity states: only the potential part of I survives.
        let rest = CylState::new(CylPoint::new(0.8, 0.3, 0.1), 0.0, 0.0, 0.0);
        let c = invariants_of(SpaceModel::Hyperbolic, b, &rest);
        assert_eq!((c.epsilon, c.a_transverse), (0.0, 0.0));
        assert_abs_diff_eq!(c.i_phi, 2.0 * (0.8_f64.cosh() - 1.0), epsilon = 1e-15);
        let c = invariants_of(SpaceModel::Spherical, b, &rest);
        assert_abs_diff_eq!(c.i_phi, -2.0 * (0.8_f64.cos() - 1.0), epsilon = 1e-15);
    }

    #[test]
    fn a_transverse_identity() {
        // A = cosh^2 z (eps - vz^2) on H3, cos^2 z (eps - vz^2) on S3.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = CylState::new(
                CylPoint::new(
                    rng.gen_range(0.1..2.0),
                    rng.gen_range(0.0..6.0),
                    rng.gen_range(-1.0..1.0),
                ),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let b = FieldStrengthB(rng.gen_range(-2.0..2.0));
            let c = invariants_of(SpaceModel::Hyperbolic, b, &s);
            assert_abs_diff_eq!(
                c.a_transverse,
                s.point.z.cosh().powi(2) * (c.epsilon - s.vz * s.vz),
                epsilon = 1e-12
            );
            let c = invariants_of(SpaceModel::Spherical, b, &s);
            assert_abs_diff_eq!(
                c.a_transverse,
                s.point.z.cos().powi(2) * (c.epsilon - s.vz * s.vz),
                epsilon = 1e-12
            );
            assert!(c.a_transverse >= 0.0);
        }
    }

    /// Independent Euler-Lagrange route: solve g(q) vdot = F for the
    /// accelerations, with the generalized forces assembled from the
    /// Lagrangian rather than from the expanded chart equations.
    fn el_rhs(model: SpaceModel, b: FieldStrengthB, s: &CylState) -> [f64; 3] {
        let (r, z) = (s.point.r, s.point.z);
        let (vr, vphi, vz) = (s.vr, s.vphi, s.vz);
        // Metric diagonal and its r/z partials.
        let (g_r, g_phi, dgr_dz, dgphi_dr, dgphi_dz, pot_r) = match model {
            SpaceModel::Hyperbolic => {
                let c2z = z.cosh().powi(2);
                (
                    c2z,
                    c2z * r.sinh().powi(2),
                    (2.0 * z).sinh(),
                    c2z * (2.0 * r).sinh(),
                    (2.0 * z).sinh() * r.sinh().powi(2),
                    b.0 * r.sinh(),
                )
            }
            SpaceModel::Spherical => {
                let c2z = z.cos().powi(2);
                (
                    c2z,
                    c2z * r.sin().powi(2),
                    -(2.0 * z).sin(),
                    c2z * (2.0 * r).sin(),
                    -(2.0 * z).sin() * r.sin().powi(2),
                    b.0 * r.sin(),
                )
            }
            SpaceModel::Euclidean => (1.0, r * r, 0.0, 2.0 * r, 0.0, b.0 * r),
        };
        // d/dt (g_r vr) = dL/dr ; the phi momentum is conserved; g_z = 1.
        let dl_dr = 0.5 * dgphi_dr * vphi * vphi + pot_r * vphi;
        let a_r = (dl_dr - dgr_dz * vz * vr) / g_r;
        let dl_dz = 0.5 * dgr_dz * vr * vr + 0.5 * dgphi_dz * vphi * vphi;
        let a_z = dl_dz;
        // d/dt (g_phi vphi + pot(r)) = 0 with d pot/dr = pot_r.
        let dgphi_dt = dgphi_dr * vr + dgphi_dz * vz;
        let a_phi = -(pot_r * vr + dgphi_dt * vphi) / g_phi;
        [a_r, a_phi, a_z]
    }

    #[test]
    fn eom_matches_lagrange_route() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for model in [
            SpaceModel::Hyperbolic,
            SpaceModel::Spherical,
            SpaceModel::Euclidean,
        ] {
            for _ in 0..10_000 {
                let z_range = if model == SpaceModel::Spherical {
                    1.2
                } else {
                    1.5
                };
                let s = CylState::new(
                    CylPoint::new(
                        rng.gen_range(0.1..2.0),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                        rng.gen_range(-z_range..z_range),
                    ),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let b = FieldStrengthB(rng.gen_range(-2.5..2.5));
                let got = eom_rhs(model, b, &s).unwrap();
                let want = el_rhs(model, b, &s);
                for i in 0..3 {
                    assert_abs_diff_eq!(got[i], want[i], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn integrate_fixed_radius_orbit() {
        let b = FieldStrengthB(2.0);
        let traj = integrate(
            SpaceModel::Hyperbolic,
            b,
            &fixed_radius_state_h3(),
            10.0,
            &StepControl::default(),
        )
        .unwrap();
        assert!(traj.termination.is_completed());
        for (t, s) in &traj.samples {
            assert_abs_diff_eq!(s.point.r, ARCCOSH_2, epsilon = 1e-8);
            assert_abs_diff_eq!(s.point.phi, -t, epsilon = 1e-7);
        }
        assert!(traj.samples.windows(2).all(|w| w[1].0 > w[0].0));
    }

    #[test]
    fn integrate_free_geodesic_conserves_energy() {
        for model in [
            SpaceModel::Hyperbolic,
            SpaceModel::Spherical,
            SpaceModel::Euclidean,
        ] {
            let s0 = CylState::new(CylPoint::new(0.01, 0.0, 0.0), 0.3, 0.0, 0.0);
            let traj = integrate(
                model,
                FieldStrengthB(0.0),
                &s0,
                10.0,
                &StepControl::default(),
            )
            .unwrap();
            assert!(
                traj.drift.epsilon <= 1e-10,
                "{model:?}: {:e}",
                traj.drift.epsilon
            );
        }
    }

    #[test]
    fn integrate_s3_axial_closed_form() {
        // B = 2, cos r0 = 1/2, eps = 16 > A = 12: sin z = 0.5 sin 4t.
        let s0 = CylState::new(CylPoint::new(PI / 3.0, 0.0, 0.0), 0.0, -4.0, 2.0);
        let b = FieldStrengthB(2.0);
        let ctl = StepControl::Adaptive {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_min: 1e-12,
            h_max: 0.01,
        };
        let traj = integrate(SpaceModel::Spherical, b, &s0, PI / 2.0, &ctl).unwrap();
        assert!(traj.termination.is_completed());
        for (t, s) in &traj.samples {
            assert_abs_diff_eq!(s.point.z.sin(), 0.5 * (4.0 * t).sin(), epsilon = 1e-6);
        }
    }

    #[test]
    fn integrate_aborts_on_axis_crossing() {
        // I = 0 trajectory heading straight at the axis with B != 0:
        // vphi = 0.1 (cosh 0.6 - 1) / sinh^2 0.6 makes I vanish at B = -0.1.
        let vphi = 0.1 * (0.6_f64.cosh() - 1.0) / 0.6_f64.sinh().powi(2);
        let s0 = CylState::new(CylPoint::new(0.6, 0.0, 0.0), -0.5, vphi, 0.0);
        let traj = integrate(
            SpaceModel::Hyperbolic,
            FieldStrengthB(-0.1),
            &s0,
            5.0,
            &StepControl::default(),
        )
        .unwrap();
        assert!(
            matches!(
                traj.termination,
                TerminationReason::AxisSingularity { .. } | TerminationReason::StepUnderflow { .. }
            ),
            "termination {:?}",
            traj.termination
        );
        assert!(traj.final_state().point.r < 0.6);
    }

    #[test]
    fn long_runaway_run_keeps_invariants_finite() {
        // At t = 50 this state has driven z to ~ -184, where cosh^4 z
        // overflows; the momentum-product form of the invariants must stay
        // finite and conserved.
        let s0 = CylState::new(
            CylPoint::new(1.9917511061410103, 2.5277199345720844, -0.7793148947049575),
            -0.7250496901448433,
            0.7484198858394835,
            -0.2894031560346243,
        );
        let b = FieldStrengthB(-1.606930);
        let traj = integrate(
            SpaceModel::Hyperbolic,
            b,
            &s0,
            50.0,
            &StepControl::default(),
        )
        .unwrap();
        assert!(traj.termination.is_completed());
        assert!(traj.final_state().point.z < -150.0);
        assert!(traj.drift.max_component().is_finite());
        assert!(traj.drift.max_component() <= 1e-7, "{:?}", traj.drift);
    }

    #[test]
    fn fixed_step_drift_scales_as_h4() {
        let s0 = CylState::new(CylPoint::new(1.1, 0.0, 0.2), 0.2, -0.8, 0.4);
        let b = FieldStrengthB(1.5);
        let drift_at = |h: f64| {
            integrate(
                SpaceModel::Hyperbolic,
                b,
                &s0,
                50.0,
                &StepControl::FixedStep { h },
            )
            .unwrap()
            .drift
            .max_component()
        };
        let d1 = drift_at(0.04);
        let d2 = drift_at(0.02);
        let ratio = d1 / d2;
        assert!(
            (ratio - 16.0).abs() <= 0.3 * 16.0,
            "drift ratio {ratio} (d1 = {d1:e}, d2 = {d2:e})"
        );
    }

    #[test]
    fn relativistic_rescaling() {
        let b = FieldStrengthB(2.0);
        assert_eq!(effective_relativistic_b(b, 0.5).unwrap().0, 1.0);
        assert_abs_diff_eq!(
            effective_relativistic_b(FieldStrengthB(3.0), 1.0 - 1e-12)
                .unwrap()
                .0,
            3.0,
            epsilon = 1e-9
        );
        assert!(matches!(
            effective_relativistic_b(b, 1.5),
            Err(Error::InvalidLambda(_))
        ));
        assert!(matches!(
            effective_relativistic_b(b, 0.0),
            Err(Error::InvalidLambda(_))
        ));
    }

    #[test]
    fn quadrature_relations_along_trajectory() {
        // dphi/dt and (dz/dt)^2 match their first-integral expressions.
        let s0 = CylState::new(CylPoint::new(1.3, 0.2, 0.1), 0.3, -0.5, 0.6);
        let b = FieldStrengthB(2.0);
        for model in [SpaceModel::Hyperbolic, SpaceModel::Spherical] {
            let c0 = invariants_of(model, b, &s0);
            let traj = integrate(model, b, &s0, 3.0, &StepControl::default()).unwrap();
            for (_, s) in &traj.samples {
                let (sr2, c2z, pot) = match model {
                    SpaceModel::Hyperbolic => (
                        s.point.r.sinh().powi(2),
                        s.point.z.cosh().powi(2),
                        b.0 * (s.point.r.cosh() - 1.0),
                    ),
                    SpaceModel::Spherical => (
                        s.point.r.sin().powi(2),
                        s.point.z.cos().powi(2),
                        -b.0 * (s.point.r.cos() - 1.0),
                    ),
                    SpaceModel::Euclidean => unreachable!(),
                };
                let dphi = (c0.i_phi - pot) / (c2z * sr2);
                assert_abs_diff_eq!(s.vphi, dphi, epsilon = 1e-8);
                let dz2 = c0.epsilon - c0.a_transverse / c2z;
                assert_abs_diff_eq!(s.vz * s.vz, dz2, epsilon = 1e-8);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn invariant_directional_derivatives_vanish(
            r in 0.2_f64..1.8,
            phi in 0.0_f64..std::f64::consts::TAU,
            z in -1.0_f64..1.0,
            vr in -0.8_f64..0.8,
            vphi in -0.8_f64..0.8,
            vz in -0.8_f64..0.8,
            bval in -2.0_f64..2.0,
            spherical in proptest::bool::ANY,
        ) {
            let model = if spherical { SpaceModel::Spherical } else { SpaceModel::Hyperbolic };
            let b = FieldStrengthB(bval);
            let s = CylState::new(CylPoint::new(r, phi, z), vr, vphi, vz);
            let acc = eom_rhs(model, b, &s).unwrap();
            let h = 1e-6;
            let advance = |tau: f64| {
                CylState::new(
                    CylPoint::new(r + tau * vr, phi + tau * vphi, z + tau * vz),
                    vr + tau * acc[0],
                    vphi + tau * acc[1],
                    vz + tau * acc[2],
                )
            };
            let cp = invariants_of(model, b, &advance(h));
            let cm = invariants_of(model, b, &advance(-h));
            prop_assert!(((cp.epsilon - cm.epsilon) / (2.0 * h)).abs() <= 1e-6);
            prop_assert!(((cp.i_phi - cm.i_phi) / (2.0 * h)).abs() <= 1e-6);
            prop_assert!(((cp.a_transverse - cm.a_transverse) / (2.0 * h)).abs() <= 1e-6);
        }
    }
}
