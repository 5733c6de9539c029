//! Cross-check harness: finite-difference oracles, randomized
//! conservation/closed-form/symmetry sweeps, and convergence-order
//! measurement. Used by the test suite and by the CLI `verify` command.
//!
//! Sweeps are deterministic for a given seed: the case list is generated
//! sequentially, then evaluated (in parallel when the `parallel` feature is
//! on) and reduced by a pure maximum.

use crate::analytic::{
    axial_critical_exp, axial_solution, azimuth_critical_exp, azimuth_solution,
    canonical_parameters, classify, fixed_radius_orbit, radial_quadratic, radial_solution,
    transform_parameters, RadialClass, Sign,
};
use crate::dynamics::{integrate, invariants_of, CylState, StepControl};
use crate::error::{Error, Result};
use crate::field::{
    self, gauge_function, plane03_induced_f_phi_z, pullback_potential_components,
    verify_field_invariance, FieldStrengthB,
};
use crate::geometry::{
    shift_jacobian, shift_pullback_cyl, CylPoint, ShiftPlane, SpaceModel, TransversalShift,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

/// Outcome of one named check over a batch of random cases.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    pub worst_error: f64,
    pub threshold: f64,
    pub passed: bool,
    pub details: Option<String>,
    pub seed: u64,
}

impl CheckReport {
    fn new(
        name: impl Into<String>,
        seed: u64,
        threshold: f64,
        samples: usize,
        worst_error: f64,
        details: Option<String>,
    ) -> Self {
        CheckReport {
            name: name.into(),
            samples,
            worst_error,
            threshold,
            passed: worst_error <= threshold,
            details,
            seed,
        }
    }

    /// One structured, human-readable line per report.
    pub fn to_line(&self) -> String {
        format!(
            "check={} samples={} seed={} worst_error={:.3e} threshold={:.3e} status={}{}",
            self.name,
            self.samples,
            self.seed,
            self.worst_error,
            self.threshold,
            if self.passed { "PASS" } else { "FAIL" },
            match &self.details {
                Some(d) => format!(" details=\"{d}\""),
                None => String::new(),
            }
        )
    }
}

fn map_errors<C, F, T>(cases: &[C], f: F) -> Vec<T>
where
    C: Sync,
    T: Send,
    F: Fn(&C) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cases.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        cases.iter().map(f).collect()
    }
}

fn map_errors_seq<C, F, T>(cases: &[C], f: F) -> Vec<T>
where
    F: Fn(&C) -> T,
{
    cases.iter().map(f).collect()
}

fn worst_of(errors: &[f64]) -> (usize, f64) {
    let mut idx = 0;
    let mut worst = f64::NEG_INFINITY;
    for (i, &e) in errors.iter().enumerate() {
        if e > worst {
            worst = e;
            idx = i;
        }
    }
    (idx, worst)
}

/// Symmetric central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Angle difference wrapped into `[-pi, pi)`, for differencing azimuths that
/// are normalized to `[0, 2*pi)`.
pub fn wrap_angle_diff(a: f64, b: f64) -> f64 {
    (a - b + PI).rem_euclid(TAU) - PI
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Finite-difference oracle for the shift Jacobian: the 2x2 determinant
/// `det d(r, phi)/d(r', phi')` of the inverse pullback, evaluated at the
/// shifted point with central differences.
pub fn shift_jacobian_fd(
    model: SpaceModel,
    s: &TransversalShift,
    p_shifted: &CylPoint,
) -> Result<f64> {
    let inv = s.inverse();
    let h = 1e-5;
    let back = |r: f64, phi: f64| -> Result<CylPoint> {
        shift_pullback_cyl(model, &inv, &CylPoint::new(r, phi, p_shifted.z))
    };
    let rp = back(p_shifted.r + h, p_shifted.phi)?;
    let rm = back(p_shifted.r - h, p_shifted.phi)?;
    let pp = back(p_shifted.r, p_shifted.phi + h)?;
    let pm = back(p_shifted.r, p_shifted.phi - h)?;
    let dr_dr = (rp.r - rm.r) / (2.0 * h);
    let dphi_dr = wrap_angle_diff(rp.phi, rm.phi) / (2.0 * h);
    let dr_dphi = (pp.r - pm.r) / (2.0 * h);
    let dphi_dphi = wrap_angle_diff(pp.phi, pm.phi) / (2.0 * h);
    Ok(dr_dr * dphi_dphi - dr_dphi * dphi_dr)
}

// ---------------------------------------------------------------------------
// Conservation sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct ConservationCase {
    b: f64,
    state: CylState,
}

fn draw_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Draw a random physical initial state whose constants keep the trajectory
/// away from the chart axes. Returns the rejection count alongside.
fn draw_conservation_cases(
    model: SpaceModel,
    n_cases: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<ConservationCase>, usize) {
    let mut cases = Vec::with_capacity(n_cases);
    let mut rejected = 0;
    while cases.len() < n_cases {
        let b = draw_sign(rng) * rng.gen_range(0.5..2.5);
        let point = match model {
            SpaceModel::Spherical => CylPoint::new(
                rng.gen_range(0.4..PI - 0.45),
                rng.gen_range(0.0..TAU),
                rng.gen_range(-0.9..0.9),
            ),
            _ => CylPoint::new(
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.0..TAU),
                rng.gen_range(-1.0..1.0),
            ),
        };
        let state = CylState::new(
            point,
            rng.gen_range(-0.8..0.8),
            rng.gen_range(-0.8..0.8),
            rng.gen_range(-0.8..0.8),
        );
        let c = invariants_of(model, FieldStrengthB(b), &state);
        // I bounded away from zero keeps the orbit off the r = 0 axis; on S3
        // |I - 2B| away from zero keeps it off the antipodal axis r = pi.
        let ok = c.i_phi.abs() >= 0.1
            && c.a_transverse >= 0.05
            && (model != SpaceModel::Spherical || (c.i_phi - 2.0 * b).abs() >= 0.1);
        if ok {
            cases.push(ConservationCase { b, state });
        } else {
            rejected += 1;
        }
    }
    (cases, rejected)
}

fn conservation_case_error(
    model: SpaceModel,
    t_end: f64,
    ctl: &StepControl,
    case: &ConservationCase,
) -> f64 {
    match integrate(model, FieldStrengthB(case.b), &case.state, t_end, ctl) {
        Ok(traj) if traj.termination.is_completed() => traj.drift.max_component(),
        _ => f64::INFINITY,
    }
}

fn conservation_report(
    model: SpaceModel,
    n_cases: usize,
    t_end: f64,
    ctl: &StepControl,
    seed: u64,
    sequential: bool,
) -> Result<CheckReport> {
    if n_cases == 0 {
        return Err(Error::InvalidParams("n_cases must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cases, rejected) = draw_conservation_cases(model, n_cases, &mut rng);
    let eval = |c: &ConservationCase| conservation_case_error(model, t_end, ctl, c);
    let errors = if sequential {
        map_errors_seq(&cases, eval)
    } else {
        map_errors(&cases, eval)
    };
    let (idx, worst) = worst_of(&errors);
    let detail = format!(
        "rejected={} worst case: B={:.6} state={:?}",
        rejected, cases[idx].b, cases[idx].state
    );
    Ok(CheckReport::new(
        format!("conservation/{}", model.name()),
        seed,
        1e-7,
        n_cases,
        worst,
        Some(detail),
    ))
}

/// Max drift of the three integrals over `n_cases` random trajectories.
pub fn run_conservation_sweep(
    model: SpaceModel,
    n_cases: usize,
    t_end: f64,
    ctl: &StepControl,
    seed: u64,
) -> Result<CheckReport> {
    conservation_report(model, n_cases, t_end, ctl, seed, false)
}

/// Sequential variant of [`run_conservation_sweep`], for benchmarking the
/// parallel speedup against.
pub fn run_conservation_sweep_seq(
    model: SpaceModel,
    n_cases: usize,
    t_end: f64,
    ctl: &StepControl,
    seed: u64,
) -> Result<CheckReport> {
    conservation_report(model, n_cases, t_end, ctl, seed, true)
}

// ---------------------------------------------------------------------------
// Closed-form sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum AxialRegime {
    TypeI { eps: f64, sz: Sign },
    TypeII { eps: f64, side: Sign },
    CriticalPlane,
    CriticalExp { z0: f64, sign: Sign },
}

#[derive(Debug, Clone, Copy)]
enum ClosedFormCase {
    FixedRadius {
        b: f64,
        r0: f64,
        regime: AxialRegime,
    },
    General {
        b: f64,
        i_phi: f64,
        a: f64,
        eps: f64,
        sx: Sign,
        sz: Sign,
    },
}

#[derive(Debug, Clone, Copy, Default)]
struct ClosedFormErrors {
    axial: f64,
    azimuth: f64,
    radial: f64,
    fixed_r: f64,
    period: f64,
}

fn draw_closed_form_cases(
    model: SpaceModel,
    n_cases: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<ClosedFormCase>, usize) {
    let mut cases = Vec::with_capacity(n_cases);
    let mut rejected = 0;
    while cases.len() < n_cases {
        let k = cases.len();
        if k % 2 == 0 {
            // Fixed-radius family.
            let b = draw_sign(rng) * rng.gen_range(0.5..2.5);
            let r0 = match model {
                SpaceModel::Spherical => {
                    let r = rng.gen_range(0.2..1.25);
                    if rng.gen_bool(0.3) {
                        PI - r // orbits beyond the equator r = pi/2
                    } else {
                        r
                    }
                }
                _ => rng.gen_range(0.2..1.8),
            };
            let orbit = match fixed_radius_orbit(model, FieldStrengthB(b), r0) {
                Ok(o) => o,
                Err(_) => {
                    rejected += 1;
                    continue;
                }
            };
            if orbit.a_transverse < 0.05 {
                rejected += 1;
                continue;
            }
            let a = orbit.a_transverse;
            let regime = match (model, k % 8) {
                (SpaceModel::Hyperbolic, 2) => AxialRegime::TypeII {
                    eps: a * rng.gen_range(0.35..0.9),
                    side: if rng.gen_bool(0.5) {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    },
                },
                (SpaceModel::Hyperbolic, 4) => AxialRegime::CriticalExp {
                    z0: draw_sign(rng) * rng.gen_range(0.3..0.9),
                    sign: if rng.gen_bool(0.5) {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    },
                },
                (_, 6) => AxialRegime::CriticalPlane,
                _ => AxialRegime::TypeI {
                    eps: a + rng.gen_range(0.3..2.5),
                    sz: if rng.gen_bool(0.5) {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    },
                },
            };
            cases.push(ClosedFormCase::FixedRadius { b, r0, regime });
        } else {
            // General vertex-start family, Type I only.
            let b = draw_sign(rng) * rng.gen_range(0.5..2.5);
            let exact_parabolic = model == SpaceModel::Hyperbolic && k % 6 == 1;
            let i_phi = draw_sign(rng) * rng.gen_range(0.3..2.0);
            let a = if exact_parabolic {
                b * b
            } else {
                rng.gen_range(0.3..3.0)
            };
            let eps = a + rng.gen_range(0.3..2.5);
            let class = match classify(model, FieldStrengthB(b), i_phi, a, eps) {
                Ok(c) => c,
                Err(_) => {
                    rejected += 1;
                    continue;
                }
            };
            if class.radial == RadialClass::NonPhysical {
                rejected += 1;
                continue;
            }
            if exact_parabolic && class.radial != RadialClass::InfiniteCritical {
                rejected += 1;
                continue;
            }
            let q = radial_quadratic(model, FieldStrengthB(b), i_phi, a).unwrap();
            if class.radial != RadialClass::InfiniteCritical && q.disc < 1e-4 {
                rejected += 1;
                continue;
            }
            // Keep the radial start (and on S3 the whole turning band) away
            // from the degenerate axes, where the chart velocities blow up.
            let clear_of_axes = match (model, radial_start(model, b, i_phi, a, eps)) {
                (SpaceModel::Hyperbolic, Ok(x0)) => x0 >= 1.05,
                (SpaceModel::Spherical, Ok(x0)) => {
                    x0.abs() <= 0.92 && (i_phi - 2.0 * b).abs() >= 0.3
                }
                _ => false,
            };
            if !clear_of_axes {
                rejected += 1;
                continue;
            }
            cases.push(ClosedFormCase::General {
                b,
                i_phi,
                a,
                eps,
                sx: if rng.gen_bool(0.5) {
                    Sign::Plus
                } else {
                    Sign::Minus
                },
                sz: if rng.gen_bool(0.5) {
                    Sign::Plus
                } else {
                    Sign::Minus
                },
            });
        }
    }
    (cases, rejected)
}

fn tight_control(h_max: f64) -> StepControl {
    StepControl::Adaptive {
        rel_tol: 1e-11,
        abs_tol: 1e-13,
        h_min: 1e-13,
        h_max,
    }
}

/// Starting radial coordinate (as `x = cosh r` / `cos r`) for the displayed
/// time parameterizations: the vertex for finite classes, the turning point
/// for infinite ones.
fn radial_start(model: SpaceModel, b: f64, i_phi: f64, a: f64, eps: f64) -> Result<f64> {
    let class = classify(model, FieldStrengthB(b), i_phi, a, eps)?;
    let q = radial_quadratic(model, FieldStrengthB(b), i_phi, a)?;
    Ok(match class.radial {
        RadialClass::FixedRadius | RadialClass::FiniteTwoTurning | RadialClass::SphericalFinite => {
            q.vertex()
        }
        RadialClass::InfiniteOneTurning => q.roots.expect("a > 0 has real roots").1,
        RadialClass::InfiniteCritical => -q.c / q.b,
        RadialClass::NonPhysical => {
            return Err(Error::RegimeMismatch("non-physical parameters".into()))
        }
    })
}

/// Build the state matching the closed-form initial conditions: `z(0) = 0`,
/// radial start per [`radial_start`], velocity signs `(sx, sz)`.
#[allow(clippy::too_many_arguments)]
fn matched_state(
    model: SpaceModel,
    b: f64,
    i_phi: f64,
    a: f64,
    eps: f64,
    sx: Sign,
    sz: Sign,
    phi0: f64,
) -> Result<CylState> {
    let x0 = radial_start(model, b, i_phi, a, eps)?;
    let q = radial_quadratic(model, FieldStrengthB(b), i_phi, a)?;
    let (r0, vphi, vr) = match model {
        SpaceModel::Hyperbolic => {
            let r0 = x0.acosh();
            let sr = r0.sinh();
            let vphi = (i_phi - b * (x0 - 1.0)) / (sr * sr);
            let vr = sx.factor() * q.eval(x0).max(0.0).sqrt() / sr;
            (r0, vphi, vr)
        }
        SpaceModel::Spherical => {
            // dx/dt = -sin r dr/dt: the radial-direction sign flips.
            let r0 = x0.clamp(-1.0, 1.0).acos();
            let sr = r0.sin();
            let vphi = (i_phi + b * (x0 - 1.0)) / (sr * sr);
            let vr = -sx.factor() * q.eval(x0).max(0.0).sqrt() / sr;
            (r0, vphi, vr)
        }
        SpaceModel::Euclidean => return Err(Error::Unsupported("curved models only".into())),
    };
    let vz = sz.factor() * (eps - a).max(0.0).sqrt();
    Ok(CylState::new(CylPoint::new(r0, phi0, 0.0), vr, vphi, vz))
}

fn closed_form_case_errors(model: SpaceModel, case: &ClosedFormCase) -> ClosedFormErrors {
    let mut out = ClosedFormErrors::default();
    let bad = ClosedFormErrors {
        axial: f64::INFINITY,
        azimuth: f64::INFINITY,
        radial: f64::INFINITY,
        fixed_r: f64::INFINITY,
        period: f64::INFINITY,
    };
    match *case {
        ClosedFormCase::FixedRadius { b, r0, regime } => {
            let orbit = match fixed_radius_orbit(model, FieldStrengthB(b), r0) {
                Ok(o) => o,
                Err(_) => return bad,
            };
            let a = orbit.a_transverse;
            let alpha = orbit.alpha;
            let (state, eps, t_end) = match regime {
                AxialRegime::TypeI { eps, sz } => (
                    CylState::new(
                        CylPoint::new(r0, 0.0, 0.0),
                        0.0,
                        alpha,
                        sz.factor() * (eps - a).sqrt(),
                    ),
                    eps,
                    2.0 / eps.sqrt(),
                ),
                AxialRegime::TypeII { eps, side } => {
                    let z0 = side.factor() * (a / eps - 1.0).sqrt().asinh();
                    let c2 = z0.cosh().powi(2);
                    (
                        CylState::new(CylPoint::new(r0, 0.0, z0), 0.0, alpha / c2, 0.0),
                        eps,
                        2.0 / eps.sqrt(),
                    )
                }
                AxialRegime::CriticalPlane => (
                    CylState::new(CylPoint::new(r0, 0.0, 0.0), 0.0, alpha, 0.0),
                    a,
                    2.0,
                ),
                AxialRegime::CriticalExp { z0, sign } => {
                    let c2 = z0.cosh().powi(2);
                    let vz = sign.factor() * a.sqrt() * z0.tanh();
                    (
                        CylState::new(CylPoint::new(r0, 0.0, z0), 0.0, alpha / c2, vz),
                        a,
                        1.5,
                    )
                }
            };
            let traj = match integrate(
                model,
                FieldStrengthB(b),
                &state,
                t_end,
                &tight_control(t_end / 60.0),
            ) {
                Ok(t) if t.termination.is_completed() => t,
                _ => return bad,
            };
            for (t, s) in &traj.samples {
                out.fixed_r = out.fixed_r.max((s.point.r - r0).abs());
                let (z_meas, z_ref, phi_ref) = match regime {
                    AxialRegime::TypeI { sz, .. } => (
                        axial_measure(model, s.point.z),
                        axial_solution(model, eps, a, *t, sz),
                        azimuth_solution(model, eps, a, alpha, *t),
                    ),
                    AxialRegime::TypeII { side, .. } => (
                        axial_measure(model, s.point.z),
                        axial_solution(model, eps, a, *t, side),
                        azimuth_solution(model, eps, a, alpha, *t),
                    ),
                    AxialRegime::CriticalPlane => {
                        (axial_measure(model, s.point.z), Ok(0.0), Ok(alpha * *t))
                    }
                    AxialRegime::CriticalExp { z0, sign } => (
                        axial_measure(model, s.point.z),
                        axial_critical_exp(eps, z0, sign, *t),
                        azimuth_critical_exp(eps, alpha, z0, sign, *t),
                    ),
                };
                match (z_ref, phi_ref) {
                    (Ok(zr), Ok(pr)) => {
                        out.axial = out.axial.max((z_meas - zr).abs());
                        out.azimuth = out.azimuth.max((s.point.phi - pr).abs());
                    }
                    _ => return bad,
                }
            }
            if model == SpaceModel::Spherical {
                if let AxialRegime::TypeI { .. } = regime {
                    match measured_axial_period(model, b, &state, eps) {
                        Ok(t_meas) => {
                            out.period = (t_meas - PI / eps.sqrt()).abs();
                        }
                        Err(_) => return bad,
                    }
                }
            }
        }
        ClosedFormCase::General {
            b,
            i_phi,
            a,
            eps,
            sx,
            sz,
        } => {
            let state = match matched_state(model, b, i_phi, a, eps, sx, sz, 0.0) {
                Ok(s) => s,
                Err(_) => return bad,
            };
            let t_end = match model {
                SpaceModel::Spherical => 2.2 * PI / eps.sqrt(),
                _ => 3.0 / eps.sqrt(),
            };
            let traj = match integrate(
                model,
                FieldStrengthB(b),
                &state,
                t_end,
                &tight_control(t_end / 60.0),
            ) {
                Ok(t) if t.termination.is_completed() => t,
                _ => return bad,
            };
            for (t, s) in &traj.samples {
                let x_meas = match model {
                    SpaceModel::Hyperbolic => s.point.r.cosh(),
                    SpaceModel::Spherical => s.point.r.cos(),
                    SpaceModel::Euclidean => unreachable!(),
                };
                match radial_solution(model, FieldStrengthB(b), i_phi, a, eps, *t, sx) {
                    Ok(x_ref) => out.radial = out.radial.max((x_meas - x_ref).abs()),
                    Err(_) => return bad,
                }
            }
        }
    }
    out
}

fn axial_measure(model: SpaceModel, z: f64) -> f64 {
    match model {
        SpaceModel::Hyperbolic => z.sinh(),
        SpaceModel::Spherical => z.sin(),
        SpaceModel::Euclidean => z,
    }
}

/// First return of `z` to zero after the start, by bisection on short
/// re-integrations from the bracketing sample. For S3 Type I motion this is
/// the axial period `T = pi/sqrt(eps)`.
pub fn measured_axial_period(model: SpaceModel, b: f64, s0: &CylState, eps: f64) -> Result<f64> {
    let t_expect = PI / eps.sqrt();
    let ctl = tight_control(t_expect / 40.0);
    let bfield = FieldStrengthB(b);
    let traj = integrate(model, bfield, s0, 1.4 * t_expect, &ctl)?;
    let start_sign = s0.vz.signum();
    let mut bracket = None;
    for w in traj.samples.windows(2) {
        let (t0, ref a0) = w[0];
        let (_, ref a1) = w[1];
        if t0 > 0.25 * t_expect
            && (a0.point.z * start_sign) > 0.0
            && (a1.point.z * start_sign) <= 0.0
        {
            bracket = Some((t0, *a0, w[1].0 - t0));
            break;
        }
    }
    let (t_low, s_low, width) = bracket.ok_or_else(|| {
        Error::InsufficientData("no axial zero crossing within 1.4 expected periods".into())
    })?;
    let z_at = |tau: f64| -> Result<f64> {
        if tau <= 0.0 {
            return Ok(s_low.point.z);
        }
        let t = integrate(model, bfield, &s_low, tau, &ctl)?;
        Ok(t.final_state().point.z)
    };
    let (mut lo, mut hi) = (0.0, width);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if z_at(mid)? * start_sign > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(t_low + 0.5 * (lo + hi))
}

/// Closed forms vs. integration: axial, azimuthal and radial time courses,
/// fixed-radius constancy, and (on S3) the axial period.
pub fn run_closed_form_sweep(
    model: SpaceModel,
    n_cases: usize,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    if n_cases == 0 {
        return Err(Error::InvalidParams("n_cases must be >= 1".into()));
    }
    if !model.is_curved() {
        return Err(Error::Unsupported(
            "closed-form sweeps cover the curved models".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cases, rejected) = draw_closed_form_cases(model, n_cases, &mut rng);
    let errors = map_errors(&cases, |c| closed_form_case_errors(model, c));
    let pick = |name: &str, get: fn(&ClosedFormErrors) -> f64, threshold: f64| {
        let vals: Vec<f64> = errors.iter().map(get).collect();
        let (idx, worst) = worst_of(&vals);
        CheckReport::new(
            format!("closed-form/{}/{}", model.name(), name),
            seed,
            threshold,
            n_cases,
            worst,
            Some(format!(
                "rejected={} worst case: {:?}",
                rejected, cases[idx]
            )),
        )
    };
    let mut reports = vec![
        pick("axial", |e| e.axial, 1e-6),
        pick("azimuth", |e| e.azimuth, 1e-6),
        pick("radial", |e| e.radial, 1e-6),
        pick("fixed-radius", |e| e.fixed_r, 1e-8),
    ];
    if model == SpaceModel::Spherical {
        reports.push(pick("period", |e| e.period, 1e-9));
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Symmetry sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct SymmetryCase {
    plane: ShiftPlane,
    amount: f64,
    b: f64,
    p: CylPoint,
    p_gauge: CylPoint,
    i_phi: f64,
    a: f64,
    amount3: f64,
    p3: CylPoint,
}

fn draw_symmetry_cases(
    model: SpaceModel,
    n_cases: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<SymmetryCase>, usize) {
    let mut cases = Vec::with_capacity(n_cases);
    let mut rejected = 0;
    let r_hi = if model == SpaceModel::Spherical {
        1.6
    } else {
        1.8
    };
    while cases.len() < n_cases {
        let plane = if rng.gen_bool(0.5) {
            ShiftPlane::Plane01
        } else {
            ShiftPlane::Plane02
        };
        let amount = draw_sign(rng) * rng.gen_range(0.1..1.2);
        let b = draw_sign(rng) * rng.gen_range(0.5..2.5);
        let p = CylPoint::new(
            rng.gen_range(0.2..r_hi),
            rng.gen_range(0.0..TAU),
            rng.gen_range(-0.9..0.9),
        );
        // Gauge evaluation point: keep the arctan branch away from its cut.
        let phi_g = rng.gen_range(0.0..TAU);
        let chi = match plane {
            ShiftPlane::Plane01 => phi_g,
            ShiftPlane::Plane02 => phi_g - PI / 2.0,
            ShiftPlane::Plane03 => unreachable!(),
        };
        if chi.sin().abs() < 0.15 {
            rejected += 1;
            continue;
        }
        let p_gauge = CylPoint::new(rng.gen_range(0.3..r_hi), phi_g, rng.gen_range(-0.5..0.5));
        // Parameters with a real trajectory surface.
        let i_phi = draw_sign(rng) * rng.gen_range(0.2..2.0);
        let a = rng.gen_range(0.05..3.0);
        if canonical_parameters(model, FieldStrengthB(b), i_phi, a).is_err() {
            rejected += 1;
            continue;
        }
        let amount3 = draw_sign(rng) * rng.gen_range(0.3..1.0);
        let p3 = CylPoint::new(
            rng.gen_range(0.4..1.5),
            rng.gen_range(0.0..TAU),
            draw_sign(rng) * rng.gen_range(0.1..0.8),
        );
        cases.push(SymmetryCase {
            plane,
            amount,
            b,
            p,
            p_gauge,
            i_phi,
            a,
            amount3,
            p3,
        });
    }
    (cases, rejected)
}

#[derive(Debug, Clone, Copy, Default)]
struct SymmetryErrors {
    field_invariance: f64,
    jacobian_fd: f64,
    param_invariant: f64,
    composition: f64,
    gauge_fd: f64,
    gauge_relation: f64,
    gauge_integrability: f64,
    /// `1e-6 - |F_phi'z'|`: nonpositive iff the induced component is visibly
    /// nonzero, which is the expected (pass) outcome.
    plane03_shortfall: f64,
}

fn symmetry_case_errors(model: SpaceModel, case: &SymmetryCase) -> SymmetryErrors {
    let b = FieldStrengthB(case.b);
    let s = TransversalShift::new(case.plane, case.amount);
    let bad = SymmetryErrors {
        field_invariance: f64::INFINITY,
        jacobian_fd: f64::INFINITY,
        param_invariant: f64::INFINITY,
        composition: f64::INFINITY,
        gauge_fd: f64::INFINITY,
        gauge_relation: f64::INFINITY,
        gauge_integrability: f64::INFINITY,
        plane03_shortfall: f64::INFINITY,
    };

    // Field invariance and the Jacobian against its finite-difference oracle.
    let field_invariance = match verify_field_invariance(model, &s, b, &case.p) {
        Ok(e) => e,
        Err(_) => return bad,
    };
    let p_shifted = match shift_pullback_cyl(model, &s, &case.p) {
        Ok(p) => p,
        Err(_) => return bad,
    };
    let jacobian_fd = match (
        shift_jacobian(model, &s, &p_shifted, &case.p),
        shift_jacobian_fd(model, &s, &p_shifted),
    ) {
        (Ok(j), Ok(j_fd)) => (j - j_fd).abs(),
        _ => return bad,
    };

    // Parameter-transform invariant and shift composition.
    let cp = match canonical_parameters(model, b, case.i_phi, case.a) {
        Ok(cp) => cp,
        Err(_) => return bad,
    };
    let full = transform_parameters(model, &s, &cp).unwrap();
    let param_invariant =
        (full.invariant_value - cp.invariant_value).abs() / cp.invariant_value.abs().max(1.0);
    let s_half = TransversalShift::new(case.plane, case.amount / 2.0);
    let two = transform_parameters(
        model,
        &s_half,
        &transform_parameters(model, &s_half, &cp).unwrap(),
    )
    .unwrap();
    let composition = ((two.j - full.j).abs()).max((two.c_par - full.c_par).abs());

    // Gauge function: partials vs. central differences of the value, the
    // potential-pullback relation, and the integrability condition.
    let h = 1e-5;
    let g_at =
        |r: f64, phi: f64| gauge_function(model, &s, b, &CylPoint::new(r, phi, case.p_gauge.z));
    let g0 = match g_at(case.p_gauge.r, case.p_gauge.phi) {
        Ok(g) => g,
        Err(_) => return bad,
    };
    let quad = (
        g_at(case.p_gauge.r + h, case.p_gauge.phi),
        g_at(case.p_gauge.r - h, case.p_gauge.phi),
        g_at(case.p_gauge.r, case.p_gauge.phi + h),
        g_at(case.p_gauge.r, case.p_gauge.phi - h),
    );
    let (grp, grm, gpp, gpm) = match quad {
        (Ok(a1), Ok(a2), Ok(a3), Ok(a4)) => (a1, a2, a3, a4),
        _ => return bad,
    };
    let fd_r = (grp.lambda_value - grm.lambda_value) / (2.0 * h);
    let fd_phi = (gpp.lambda_value - gpm.lambda_value) / (2.0 * h);
    let gauge_fd = (g0.d_lambda_dr - fd_r)
        .abs()
        .max((g0.d_lambda_dphi - fd_phi).abs());
    let gauge_integrability = ((gpp.d_lambda_dr - gpm.d_lambda_dr) / (2.0 * h)
        - (grp.d_lambda_dphi - grm.d_lambda_dphi) / (2.0 * h))
        .abs();
    let gauge_relation = match pullback_potential_components(model, &s, b, &case.p_gauge) {
        Ok((ar, aphi)) => (ar - g0.d_lambda_dr)
            .abs()
            .max((aphi - field::potential_phi(model, b, case.p_gauge.r) - g0.d_lambda_dphi).abs()),
        Err(_) => return bad,
    };

    // Plane03 non-invariance: the induced axial component must be visible.
    let s3 = TransversalShift::new(ShiftPlane::Plane03, case.amount3);
    let plane03_shortfall = match plane03_induced_f_phi_z(model, &s3, b, &case.p3) {
        Ok(f) => 1e-6 - f.abs(),
        Err(_) => return bad,
    };
    SymmetryErrors {
        field_invariance,
        jacobian_fd,
        param_invariant,
        composition,
        gauge_fd,
        gauge_relation,
        gauge_integrability,
        plane03_shortfall,
    }
}

/// Shift symmetries: field invariance, the Jacobian identity, the parameter
/// transform, gauge-function consistency, and Plane03 non-invariance.
pub fn run_symmetry_sweep(
    model: SpaceModel,
    n_cases: usize,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    if n_cases == 0 {
        return Err(Error::InvalidParams("n_cases must be >= 1".into()));
    }
    if !model.is_curved() {
        return Err(Error::Unsupported(
            "symmetry sweeps cover the curved models".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cases, rejected) = draw_symmetry_cases(model, n_cases, &mut rng);
    let errors = map_errors(&cases, |c| symmetry_case_errors(model, c));
    let pick = |name: &str, get: fn(&SymmetryErrors) -> f64, threshold: f64| {
        let vals: Vec<f64> = errors.iter().map(get).collect();
        let (idx, worst) = worst_of(&vals);
        CheckReport::new(
            format!("symmetry/{}/{}", model.name(), name),
            seed,
            threshold,
            n_cases,
            worst,
            Some(format!(
                "rejected={} worst case: {:?}",
                rejected, cases[idx]
            )),
        )
    };
    Ok(vec![
        pick("field-invariance", |e| e.field_invariance, 1e-9),
        pick("jacobian-fd", |e| e.jacobian_fd, 1e-6),
        pick("param-invariant", |e| e.param_invariant, 1e-12),
        pick("shift-composition", |e| e.composition, 1e-10),
        pick("gauge-fd", |e| e.gauge_fd, 1e-6),
        pick("gauge-relation", |e| e.gauge_relation, 1e-8),
        pick("gauge-integrability", |e| e.gauge_integrability, 1e-5),
        pick("plane03-noninvariance", |e| e.plane03_shortfall, 0.0),
    ])
}

/// Sequential variant of [`run_symmetry_sweep`], for benchmarking.
pub fn run_symmetry_sweep_seq(
    model: SpaceModel,
    n_cases: usize,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    if n_cases == 0 {
        return Err(Error::InvalidParams("n_cases must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cases, rejected) = draw_symmetry_cases(model, n_cases, &mut rng);
    let errors = map_errors_seq(&cases, |c| symmetry_case_errors(model, c));
    let vals: Vec<f64> = errors.iter().map(|e| e.field_invariance).collect();
    let (idx, worst) = worst_of(&vals);
    Ok(vec![CheckReport::new(
        format!("symmetry/{}/field-invariance", model.name()),
        seed,
        1e-9,
        n_cases,
        worst,
        Some(format!(
            "rejected={} worst case: {:?}",
            rejected, cases[idx]
        )),
    )])
}

// ---------------------------------------------------------------------------
// Convergence order
// ---------------------------------------------------------------------------

/// Reference cases with full closed-form solutions for fixed-step
/// convergence measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceCase {
    /// H3 fixed-radius orbit with Type I axial motion (B=2, cosh r0 = 2,
    /// eps = 4, A = 3).
    HyperbolicAxial,
    /// S3 periodic orbit (B=2, cos r0 = 1/2, eps = 16, A = 12).
    SphericalPeriodic,
}

/// Fitted order of the fixed-step integrator against the closed forms over a
/// ladder of step sizes (at least three, decreasing).
pub fn measure_convergence_order(case: ConvergenceCase, steps: &[f64]) -> Result<f64> {
    if steps.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need >= 3 step sizes, got {}",
            steps.len()
        )));
    }
    if steps.windows(2).any(|w| w[1] >= w[0]) || steps.iter().any(|&h| h <= 0.0) {
        return Err(Error::InvalidParams(
            "step sizes must be positive and strictly decreasing".into(),
        ));
    }
    let (model, b, r0, eps, a, alpha, t_end): (SpaceModel, f64, f64, f64, f64, f64, f64) =
        match case {
            ConvergenceCase::HyperbolicAxial => (
                SpaceModel::Hyperbolic,
                2.0,
                2.0_f64.acosh(),
                4.0,
                3.0,
                -1.0,
                1.2,
            ),
            ConvergenceCase::SphericalPeriodic => (
                SpaceModel::Spherical,
                2.0,
                0.5_f64.acos(),
                16.0,
                12.0,
                -4.0,
                PI / 4.0,
            ),
        };
    let s0 = CylState::new(CylPoint::new(r0, 0.0, 0.0), 0.0, alpha, (eps - a).sqrt());
    let mut pts = Vec::with_capacity(steps.len());
    for &h in steps {
        let traj = integrate(
            model,
            FieldStrengthB(b),
            &s0,
            t_end,
            &StepControl::FixedStep { h },
        )?;
        let mut err = 0.0_f64;
        for (t, s) in &traj.samples {
            let z_ref = axial_solution(model, eps, a, *t, Sign::Plus)?;
            let phi_ref = azimuth_solution(model, eps, a, alpha, *t)?;
            err = err
                .max((axial_measure(model, s.point.z) - z_ref).abs())
                .max((s.point.phi - phi_ref).abs())
                .max((s.point.r - r0).abs());
        }
        pts.push((h, err.max(1e-16)));
    }
    Ok(fit_loglog_slope(&pts))
}
