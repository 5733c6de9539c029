//! Closed-form solutions and their classification: the radial quadratic in
//! `x = cosh r` (H3) or `x = cos r` (S3), fixed-radius orbits, axial and
//! azimuthal time courses, radial time courses, trajectory-surface equations,
//! and the shift-covariant canonical parameters `(J, C)`.
//!
//! Sign and branch choices are explicit arguments everywhere; nothing picks a
//! square-root branch silently.

use crate::error::{Error, Result};
use crate::field::FieldStrengthB;
use crate::geometry::{CylPoint, ShiftPlane, SpaceModel, TransversalShift};
use std::f64::consts::PI;

/// Relative tolerance treating the discriminant (and `epsilon - A`) as zero;
/// the degenerate cases are parameter-codimension-1 and must stay detectable.
const DEGENERATE_REL_TOL: f64 = 1e-12;

/// Explicit sign/branch selector for the `+/-` choices in the quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// The quadratic `a x^2 + b x + c` governing radial turning points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub disc: f64,
    /// Real roots ordered `x1 <= x2`, present iff `disc >= 0`.
    pub roots: Option<(f64, f64)>,
}

impl RadialQuadratic {
    /// Discriminant treated as zero within the degeneracy band.
    pub fn is_degenerate(&self) -> bool {
        self.disc.abs() <= DEGENERATE_REL_TOL * (self.b * self.b).max((4.0 * self.a * self.c).abs())
    }

    /// Vertex `-b/(2a)`; for a degenerate quadratic this is the double root.
    pub fn vertex(&self) -> f64 {
        -self.b / (2.0 * self.a)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }
}

/// Radial character of the motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialClass {
    /// Degenerate segment: circular orbit at the double root.
    FixedRadius,
    /// H3, `a < 0`: `cosh r` oscillates between two turning points `> 1`.
    FiniteTwoTurning,
    /// H3, `a = 0`: the parabolic borderline, infinite with one turning point.
    InfiniteCritical,
    /// H3, `a > 0`: infinite motion with one turning point.
    InfiniteOneTurning,
    /// S3: `cos r` oscillates between two turning points inside `[-1, 1]`.
    SphericalFinite,
    /// The constraints exclude any motion.
    NonPhysical,
}

/// Axial regime by the sign of `epsilon - A`.
///
/// `classify` never returns `CriticalExp`: from the constants alone the
/// `epsilon = A` case is reported as `CriticalPlane` (the planar solution);
/// the exponential off-plane solutions of the same constants are served by
/// [`axial_critical_exp`], which needs the starting height.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxialClass {
    /// `epsilon > A`: the trajectory crosses the `z = 0` plane.
    TypeI,
    /// `epsilon < A` (H3 only): repelled from the plane, `|z|` bounded below.
    TypeII,
    /// `epsilon = A`, `z = 0` identically.
    CriticalPlane,
    /// `epsilon = A`, exponential approach/escape with `z != 0` (H3 only).
    CriticalExp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryClass {
    pub radial: RadialClass,
    pub axial: AxialClass,
}

/// Shift-covariant trajectory parameters: the surface equation reads
/// `J cosh r - C sinh r cos phi = B` on H3 and `J cos r + C sin r cos phi = B`
/// on S3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalParams {
    pub j: f64,
    pub c_par: f64,
    /// `J^2 - C^2 = B^2 - A` (H3) or `J^2 + C^2 = A + B^2` (S3).
    pub invariant_value: f64,
}

/// Parameters of a fixed-radius orbit: azimuthal integral, angular rate at
/// `z = 0`, and transversal integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedRadiusOrbit {
    pub i_phi: f64,
    pub alpha: f64,
    pub a_transverse: f64,
}

fn require_curved(model: SpaceModel, what: &str) -> Result<()> {
    if model.is_curved() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "{what} is defined on the curved models only"
        )))
    }
}

/// Coefficients of the radial quadratic from `(B, I, A)`.
///
/// H3: `a = A - B^2`, `b = 2B(I + B)`, `c = -A - (I + B)^2` in `x = cosh r`;
/// S3: `a = -A - B^2`, `b = -2B(I - B)`, `c = A - (I - B)^2` in `x = cos r`.
/// Roots use the cancellation-free formulation (the large-magnitude root
/// first, the other from `c/q`), since `a -> 0` is a physical regime.
pub fn radial_quadratic(
    model: SpaceModel,
    b_field: FieldStrengthB,
    i_phi: f64,
    a_transverse: f64,
) -> Result<RadialQuadratic> {
    require_curved(model, "the radial quadratic")?;
    let b = b_field.0;
    let (qa, qb, qc) = match model {
        SpaceModel::Hyperbolic => (
            a_transverse - b * b,
            2.0 * b * (i_phi + b),
            -a_transverse - (i_phi + b) * (i_phi + b),
        ),
        SpaceModel::Spherical => (
            -a_transverse - b * b,
            -2.0 * b * (i_phi - b),
            a_transverse - (i_phi - b) * (i_phi - b),
        ),
        SpaceModel::Euclidean => unreachable!(),
    };
    let disc = qb * qb - 4.0 * qa * qc;
    // No real roots, or a linear polynomial whose turning point -c/b the
    // callers handle directly.
    let roots = if disc < 0.0 || qa == 0.0 {
        None
    } else if disc == 0.0 {
        let x = -qb / (2.0 * qa);
        Some((x, x))
    } else {
        let sq = disc.sqrt();
        let q = -0.5 * (qb + qb.signum() * sq);
        let (x1, x2) = (q / qa, qc / q);
        Some((x1.min(x2), x1.max(x2)))
    };
    Ok(RadialQuadratic {
        a: qa,
        b: qb,
        c: qc,
        disc,
        roots,
    })
}

fn a_is_zero(q: &RadialQuadratic, b: f64, a_transverse: f64) -> bool {
    q.a.abs() <= DEGENERATE_REL_TOL * (b * b).max(a_transverse).max(1.0)
}

fn axial_class(model: SpaceModel, epsilon: f64, a_transverse: f64) -> AxialClass {
    let tol = DEGENERATE_REL_TOL * epsilon.abs().max(a_transverse).max(1.0);
    if (epsilon - a_transverse).abs() <= tol {
        AxialClass::CriticalPlane
    } else if epsilon > a_transverse {
        AxialClass::TypeI
    } else {
        debug_assert!(model == SpaceModel::Hyperbolic || model == SpaceModel::Euclidean);
        AxialClass::TypeII
    }
}

/// Classify the motion for given constants. `NonPhysical` is a value, not an
/// error: it means the constraint inequalities exclude any real trajectory.
pub fn classify(
    model: SpaceModel,
    b_field: FieldStrengthB,
    i_phi: f64,
    a_transverse: f64,
    epsilon: f64,
) -> Result<TrajectoryClass> {
    require_curved(model, "classification")?;
    if !(a_transverse >= 0.0 && epsilon >= 0.0) || !a_transverse.is_finite() || !epsilon.is_finite()
    {
        return Err(Error::InvalidParams(format!(
            "A = {a_transverse}, epsilon = {epsilon} must be finite and nonnegative"
        )));
    }
    let q = radial_quadratic(model, b_field, i_phi, a_transverse)?;
    let b = b_field.0;
    let radial = match model {
        SpaceModel::Hyperbolic => {
            if a_is_zero(&q, b, a_transverse) {
                // a = 0: infinite motion needs b > 0, i.e. B(I + B) > 0.
                if q.b > 0.0 {
                    RadialClass::InfiniteCritical
                } else {
                    RadialClass::NonPhysical
                }
            } else if q.is_degenerate() {
                if q.vertex() > 1.0 {
                    RadialClass::FixedRadius
                } else {
                    RadialClass::NonPhysical
                }
            } else if q.disc < 0.0 {
                RadialClass::NonPhysical
            } else if q.a < 0.0 {
                // Finite band above the axis requires B I + A > 0 (the
                // quadratic rises through x = 1); otherwise both roots sit
                // below cosh r = 1 and no motion exists.
                if b * i_phi + a_transverse > 0.0 {
                    RadialClass::FiniteTwoTurning
                } else {
                    RadialClass::NonPhysical
                }
            } else {
                RadialClass::InfiniteOneTurning
            }
        }
        SpaceModel::Spherical => {
            // eps < A admits no axial motion at all on S3.
            let tol = DEGENERATE_REL_TOL * epsilon.max(a_transverse).max(1.0);
            if epsilon < a_transverse - tol {
                RadialClass::NonPhysical
            } else if q.is_degenerate() {
                if q.vertex().abs() < 1.0 {
                    RadialClass::FixedRadius
                } else {
                    RadialClass::NonPhysical
                }
            } else if q.disc < 0.0 {
                RadialClass::NonPhysical
            } else {
                RadialClass::SphericalFinite
            }
        }
        SpaceModel::Euclidean => unreachable!(),
    };
    let axial = if model == SpaceModel::Spherical && radial == RadialClass::NonPhysical {
        AxialClass::CriticalPlane
    } else {
        axial_class(model, epsilon, a_transverse)
    };
    Ok(TrajectoryClass { radial, axial })
}

/// Constants of the circular orbit at radius `r0`.
///
/// H3: `I = B(1 - cosh r0)/cosh r0`, `alpha = -B/cosh r0`,
/// `A = B^2 tanh^2 r0`; S3 with `cosh -> cos`, `tanh -> tan`. The resulting
/// quadratic is degenerate with double root `cosh r0` (resp. `cos r0`).
pub fn fixed_radius_orbit(
    model: SpaceModel,
    b_field: FieldStrengthB,
    r0: f64,
) -> Result<FixedRadiusOrbit> {
    require_curved(model, "fixed-radius orbits")?;
    let b = b_field.0;
    match model {
        SpaceModel::Hyperbolic => {
            if !(r0 > 0.0 && r0.is_finite()) {
                return Err(Error::InvalidRadius(r0));
            }
            let ch = r0.cosh();
            Ok(FixedRadiusOrbit {
                i_phi: b * (1.0 - ch) / ch,
                alpha: -b / ch,
                a_transverse: (b * r0.tanh()).powi(2),
            })
        }
        SpaceModel::Spherical => {
            let cs = r0.cos();
            if !(r0 > 0.0 && r0 < PI) || cs.abs() <= 1e-12 {
                return Err(Error::InvalidRadius(r0));
            }
            Ok(FixedRadiusOrbit {
                i_phi: b * (cs - 1.0) / cs,
                alpha: -b / cs,
                a_transverse: (b * r0.tan()).powi(2),
            })
        }
        SpaceModel::Euclidean => unreachable!(),
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "{name} = {v} must be positive"
        )))
    }
}

/// Axial closed form: returns `sinh z(t)` (H3) or `sin z(t)` (S3).
///
/// Type I starts on the plane (`z(0) = 0`); Type II starts at the turning
/// height `sinh z0 = sign sqrt(A/eps - 1)`. At `epsilon = A` the planar
/// solution `z = 0` is returned; the exponential branches with `z0 != 0`
/// live in [`axial_critical_exp`].
pub fn axial_solution(
    model: SpaceModel,
    epsilon: f64,
    a_transverse: f64,
    t: f64,
    branch: Sign,
) -> Result<f64> {
    require_curved(model, "the axial closed forms")?;
    check_positive("epsilon", epsilon)?;
    let tol = DEGENERATE_REL_TOL * epsilon.max(a_transverse).max(1.0);
    let s = branch.factor();
    match model {
        SpaceModel::Hyperbolic => {
            if (epsilon - a_transverse).abs() <= tol {
                Ok(0.0)
            } else if epsilon > a_transverse {
                Ok(s * ((epsilon - a_transverse) / epsilon).sqrt() * (epsilon.sqrt() * t).sinh())
            } else {
                Ok(s * ((a_transverse - epsilon) / epsilon).sqrt() * (epsilon.sqrt() * t).cosh())
            }
        }
        SpaceModel::Spherical => {
            if (epsilon - a_transverse).abs() <= tol {
                Ok(0.0)
            } else if epsilon > a_transverse {
                Ok(s * ((epsilon - a_transverse) / epsilon).sqrt() * (epsilon.sqrt() * t).sin())
            } else {
                Err(Error::RegimeMismatch("S3 admits only epsilon > A".into()))
            }
        }
        SpaceModel::Euclidean => unreachable!(),
    }
}

/// H3 critical-case (`epsilon = A`) exponential branch:
/// `sinh z(t) = sinh z0 exp(sign sqrt(eps) t)` with `z0 != 0`.
pub fn axial_critical_exp(epsilon: f64, z0: f64, sign: Sign, t: f64) -> Result<f64> {
    check_positive("epsilon", epsilon)?;
    if z0 == 0.0 {
        return Err(Error::InvalidParams(
            "the exponential branch needs z0 != 0; z = 0 is the planar solution".into(),
        ));
    }
    Ok(z0.sinh() * (sign.factor() * epsilon.sqrt() * t).exp())
}

/// Continued inverse-tangent: `atan(k tan u)` extended continuously and
/// monotonically across the poles of `tan`.
fn atan_continued(k: f64, u: f64) -> f64 {
    let n = (u / PI).round();
    n * PI + (k * (u - n * PI).tan()).atan()
}

/// Azimuthal closed form `phi(t) - phi_0` for fixed-radius orbits with axial
/// motion (`alpha` is the angular rate at `z = 0`).
///
/// H3 uses the inverse hyperbolic tangent of `sqrt(A/eps) tanh(sqrt(eps) t)`
/// (resp. `sqrt(eps/A)` for Type II), approaching a finite rotation angle as
/// `t -> infinity`. S3 uses the arctangent with branch continuation across
/// the poles of `tan(sqrt(eps) t)`. At `epsilon = A` the planar value
/// `alpha t` is returned.
pub fn azimuth_solution(
    model: SpaceModel,
    epsilon: f64,
    a_transverse: f64,
    alpha: f64,
    t: f64,
) -> Result<f64> {
    require_curved(model, "the azimuthal closed forms")?;
    check_positive("epsilon", epsilon)?;
    check_positive("A", a_transverse)?;
    let tol = DEGENERATE_REL_TOL * epsilon.max(a_transverse).max(1.0);
    if (epsilon - a_transverse).abs() <= tol {
        return Ok(alpha * t);
    }
    let sq_eps = epsilon.sqrt();
    let sq_a = a_transverse.sqrt();
    match model {
        SpaceModel::Hyperbolic => {
            let k = if epsilon > a_transverse {
                (a_transverse / epsilon).sqrt()
            } else {
                (epsilon / a_transverse).sqrt()
            };
            Ok(alpha / sq_a * (k * (sq_eps * t).tanh()).atanh())
        }
        SpaceModel::Spherical => {
            if epsilon < a_transverse {
                return Err(Error::RegimeMismatch("S3 admits only epsilon > A".into()));
            }
            let k = (a_transverse / epsilon).sqrt();
            Ok(alpha / sq_a * atan_continued(k, sq_eps * t))
        }
        SpaceModel::Euclidean => unreachable!(),
    }
}

/// H3 critical-case azimuth for the exponential axial branches.
pub fn azimuth_critical_exp(epsilon: f64, alpha: f64, z0: f64, sign: Sign, t: f64) -> Result<f64> {
    check_positive("epsilon", epsilon)?;
    if z0 == 0.0 {
        return Err(Error::InvalidParams(
            "the exponential branch needs z0 != 0".into(),
        ));
    }
    let s2 = z0.sinh().powi(2);
    let sq_eps = epsilon.sqrt();
    match sign {
        Sign::Plus => {
            Ok(alpha / (2.0 * sq_eps) * ((s2 + 1.0) / (s2 + (-2.0 * sq_eps * t).exp())).ln())
        }
        Sign::Minus => {
            Ok(-alpha / (2.0 * sq_eps) * ((s2 + 1.0) / (s2 + (2.0 * sq_eps * t).exp())).ln())
        }
    }
}

/// The `sqrt(A) * integral of dt/cosh^2 z` phase entering the radial time
/// courses, for the Type I axial motion starting at `z(0) = 0`.
fn radial_phase(model: SpaceModel, epsilon: f64, a_transverse: f64, t: f64) -> f64 {
    let sq_eps = epsilon.sqrt();
    let k = (a_transverse / epsilon).sqrt();
    match model {
        SpaceModel::Hyperbolic => (k * (sq_eps * t).tanh()).atanh(),
        SpaceModel::Spherical => atan_continued(k, sq_eps * t),
        SpaceModel::Euclidean => unreachable!(),
    }
}

/// Radial closed form: `x(t)` with `x = cosh r` (H3) or `x = cos r` (S3).
///
/// Implements the time parameterizations with `epsilon > A` and the Type I
/// axial start `z(0) = 0`; the radial phase starts at the quadratic's vertex
/// (finite classes) or at the turning point (infinite classes). `branch` is
/// the initial sign of `dx/dt`. Fixed-radius parameters return the constant
/// double root for any regime. The `epsilon <= A` time courses are served by
/// the numerical integrator and the `F(r, z)` surfaces instead.
pub fn radial_solution(
    model: SpaceModel,
    b_field: FieldStrengthB,
    i_phi: f64,
    a_transverse: f64,
    epsilon: f64,
    t: f64,
    branch: Sign,
) -> Result<f64> {
    let class = classify(model, b_field, i_phi, a_transverse, epsilon)?;
    let q = radial_quadratic(model, b_field, i_phi, a_transverse)?;
    if class.radial == RadialClass::FixedRadius {
        return Ok(q.vertex());
    }
    if class.radial == RadialClass::NonPhysical {
        return Err(Error::RegimeMismatch(format!(
            "no physical radial motion for these parameters: {class:?}"
        )));
    }
    if epsilon <= a_transverse {
        return Err(Error::Unsupported(
            "radial time courses are only written out for epsilon > A".into(),
        ));
    }
    check_positive("A", a_transverse)?;
    let phase = radial_phase(model, epsilon, a_transverse, t);
    match class.radial {
        RadialClass::FiniteTwoTurning | RadialClass::SphericalFinite => {
            let half_width = q.disc.sqrt() / (-2.0 * q.a);
            Ok(q.vertex()
                + branch.factor()
                    * half_width
                    * ((-q.a).sqrt() / a_transverse.sqrt() * phase).sin())
        }
        RadialClass::InfiniteOneTurning => {
            let sq = q.disc.sqrt();
            Ok((-q.b + sq * (q.a.sqrt() / a_transverse.sqrt() * phase).cosh()) / (2.0 * q.a))
        }
        RadialClass::InfiniteCritical => {
            // a = 0: x(t) = -c/b + (b/4) (phase/sqrt A)^2, starting at the
            // turning point.
            Ok(-q.c / q.b + q.b / 4.0 * (phase / a_transverse.sqrt()).powi(2))
        }
        RadialClass::FixedRadius | RadialClass::NonPhysical => unreachable!(),
    }
}

/// Residual of the trajectory-surface equation `F(r, phi) = 0`:
/// `(I+B) cosh r - sqrt((I+B)^2 + A - B^2) sinh r cos phi - B` on H3,
/// `(B-I) cos r + sqrt(A + B^2 - (I-B)^2) sin r cos phi - B` on S3.
/// Vanishes identically along true trajectories (with the azimuth origin at
/// a radial turning point).
pub fn trajectory_surface_rphi(
    model: SpaceModel,
    b_field: FieldStrengthB,
    i_phi: f64,
    a_transverse: f64,
    p: &CylPoint,
) -> Result<f64> {
    let cp = canonical_parameters(model, b_field, i_phi, a_transverse)?;
    let b = b_field.0;
    match model {
        SpaceModel::Hyperbolic => Ok(cp.j * p.r.cosh() - cp.c_par * p.r.sinh() * p.phi.cos() - b),
        SpaceModel::Spherical => Ok(cp.j * p.r.cos() + cp.c_par * p.r.sin() * p.phi.cos() - b),
        SpaceModel::Euclidean => unreachable!("canonical_parameters rejects Euclidean"),
    }
}

/// The axial phase `w(z)` appearing in the `F(r, z)` surfaces: the value of
/// `sqrt(A) * integral dt / cosh^2 z` expressed through `z` alone.
fn axial_phase_of_z(model: SpaceModel, epsilon: f64, a_transverse: f64, z: f64) -> Result<f64> {
    let tol = DEGENERATE_REL_TOL * epsilon.max(a_transverse).max(1.0);
    if (epsilon - a_transverse).abs() <= tol {
        return Err(Error::RegimeMismatch(
            "the F(r, z) surfaces need epsilon != A".into(),
        ));
    }
    match model {
        SpaceModel::Hyperbolic => {
            if epsilon > a_transverse {
                let k = (a_transverse / (epsilon - a_transverse)).sqrt();
                Ok((k * z.tanh()).asinh())
            } else {
                let arg = (a_transverse / (a_transverse - epsilon)).sqrt() * z.tanh().abs();
                if arg < 1.0 - 1e-9 {
                    return Err(Error::OutsideDomain(format!(
                        "|z| below the Type II turning height (arccosh argument {arg})"
                    )));
                }
                Ok(arg.max(1.0).acosh())
            }
        }
        SpaceModel::Spherical => {
            if epsilon < a_transverse {
                return Err(Error::RegimeMismatch("S3 admits only epsilon > A".into()));
            }
            let arg = (a_transverse / (epsilon - a_transverse)).sqrt() * z.tan();
            if arg.abs() > 1.0 + 1e-9 {
                return Err(Error::OutsideDomain(format!(
                    "|z| above the axial turning height (arcsin argument {arg})"
                )));
            }
            Ok(arg.clamp(-1.0, 1.0).asin())
        }
        SpaceModel::Euclidean => Err(Error::Unsupported(
            "the F(r, z) surfaces are defined on the curved models only".into(),
        )),
    }
}

/// Residual of the trajectory-surface equation `F(r, z) = 0`, covering the
/// four H3 cases (finite/infinite radial x Type I/II axial) and the single
/// S3 case.
///
/// The arcsin/arccosh relations are compared after applying `sin` (finite
/// radial classes) or `cosh` (infinite classes) to both sides, which removes
/// the principal-branch bookkeeping: the residual then vanishes along the
/// whole matched trajectory (H3) or its first axial quarter-period (S3).
/// `branch` is the relative sign of the radial and axial directions,
/// `sign(dx/dt) * sign(dz/dt)` at the matched start.
pub fn trajectory_surface_rz(
    model: SpaceModel,
    b_field: FieldStrengthB,
    i_phi: f64,
    a_transverse: f64,
    epsilon: f64,
    p: &CylPoint,
    branch: Sign,
) -> Result<f64> {
    require_curved(model, "the F(r, z) surfaces")?;
    check_positive("A", a_transverse)?;
    let q = radial_quadratic(model, b_field, i_phi, a_transverse)?;
    let x = match model {
        SpaceModel::Hyperbolic => p.r.cosh(),
        SpaceModel::Spherical => p.r.cos(),
        SpaceModel::Euclidean => unreachable!(),
    };
    if q.is_degenerate() && !a_is_zero(&q, b_field.0, a_transverse) {
        return Ok(x - q.vertex());
    }
    let w = axial_phase_of_z(model, epsilon, a_transverse, p.z)?;
    let sq_a = a_transverse.sqrt();
    if a_is_zero(&q, b_field.0, a_transverse) {
        // Parabolic borderline (H3, a = 0, necessarily epsilon > A = B^2).
        if q.b <= 0.0 {
            return Err(Error::RegimeMismatch("a = 0 needs B(I + B) > 0".into()));
        }
        let shifted = x + q.c / q.b;
        if shifted < -1e-9 {
            return Err(Error::OutsideDomain(format!(
                "cosh r = {x} below the a = 0 turning point"
            )));
        }
        return Ok(2.0 / q.b.sqrt() * shifted.max(0.0).sqrt() - w.abs() / sq_a);
    }
    if q.disc <= 0.0 {
        return Err(Error::RegimeMismatch(
            "no real turning points for these parameters".into(),
        ));
    }
    let sq_disc = q.disc.sqrt();
    if q.a < 0.0 {
        // Finite radial classes (H3 cases Ia/IIa and the S3 case).
        let u = (x - q.vertex()) / (sq_disc / (-2.0 * q.a));
        if u.abs() > 1.0 + 1e-9 {
            return Err(Error::OutsideDomain(format!(
                "radial coordinate outside the turning band (u = {u})"
            )));
        }
        Ok(u.clamp(-1.0, 1.0) - (branch.factor() * (-q.a).sqrt() / sq_a * w).sin())
    } else {
        // Infinite radial classes (H3 cases Ib/IIb); cosh is even, so the
        // branch sign drops out.
        let v = (2.0 * q.a * x + q.b) / sq_disc;
        if v < 1.0 - 1e-9 {
            return Err(Error::OutsideDomain(format!(
                "radial coordinate below the turning point (v = {v})"
            )));
        }
        Ok(v.max(1.0) - (q.a.sqrt() / sq_a * w).cosh())
    }
}

/// The shift-covariant parameters `(J, C)` and the conserved combination.
pub fn canonical_parameters(
    model: SpaceModel,
    b_field: FieldStrengthB,
    i_phi: f64,
    a_transverse: f64,
) -> Result<CanonicalParams> {
    require_curved(model, "canonical parameters")?;
    let b = b_field.0;
    match model {
        SpaceModel::Hyperbolic => {
            let j = i_phi + b;
            let c2 = j * j + a_transverse - b * b;
            if c2 < -DEGENERATE_REL_TOL * (j * j).max(b * b).max(a_transverse).max(1.0) {
                return Err(Error::InvalidParams(format!(
                    "(I+B)^2 + A - B^2 = {c2} < 0: no trajectory surface"
                )));
            }
            Ok(CanonicalParams {
                j,
                c_par: c2.max(0.0).sqrt(),
                invariant_value: b * b - a_transverse,
            })
        }
        SpaceModel::Spherical => {
            let j = b - i_phi;
            let c2 = a_transverse + b * b - j * j;
            if c2 < -DEGENERATE_REL_TOL * (j * j).max(b * b).max(a_transverse).max(1.0) {
                return Err(Error::InvalidParams(format!(
                    "A + B^2 - (I-B)^2 = {c2} < 0: no trajectory surface"
                )));
            }
            Ok(CanonicalParams {
                j,
                c_par: c2.max(0.0).sqrt(),
                invariant_value: a_transverse + b * b,
            })
        }
        SpaceModel::Euclidean => unreachable!(),
    }
}

/// Action of a Plane01/Plane02 shift on the canonical parameters: a boost of
/// `(J, C)` on H3, a rotation on S3. The invariant combination is preserved.
pub fn transform_parameters(
    model: SpaceModel,
    s: &TransversalShift,
    cp: &CanonicalParams,
) -> Result<CanonicalParams> {
    require_curved(model, "the parameter transform")?;
    if s.plane == ShiftPlane::Plane03 {
        return Err(Error::Unsupported(
            "Plane03 shifts do not act on the (J, C) pair".into(),
        ));
    }
    match model {
        SpaceModel::Hyperbolic => {
            let (sh, ch) = (s.amount.sinh(), s.amount.cosh());
            let j = cp.j * ch + cp.c_par * sh;
            let c_par = cp.j * sh + cp.c_par * ch;
            Ok(CanonicalParams {
                j,
                c_par,
                invariant_value: j * j - c_par * c_par,
            })
        }
        SpaceModel::Spherical => {
            let (sn, cs) = s.amount.sin_cos();
            let j = cp.j * cs + cp.c_par * sn;
            let c_par = -cp.j * sn + cp.c_par * cs;
            Ok(CanonicalParams {
                j,
                c_par,
                invariant_value: j * j + c_par * c_par,
            })
        }
        SpaceModel::Euclidean => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    const ARCCOSH_2: f64 = 1.316_957_896_924_816_6;
    const B2: FieldStrengthB = FieldStrengthB(2.0);

    #[test]
    fn quadratic_hand_values() {
        let q = radial_quadratic(SpaceModel::Hyperbolic, B2, -1.0, 3.0).unwrap();
        assert_eq!((q.a, q.b, q.c, q.disc), (-1.0, 4.0, -4.0, 0.0));
        assert_eq!(q.roots, Some((2.0, 2.0)));

        let q = radial_quadratic(SpaceModel::Hyperbolic, B2, -1.0, 3.5).unwrap();
        assert_eq!((q.a, q.b, q.c), (-0.5, 4.0, -4.5));
        assert_abs_diff_eq!(q.disc, 7.0, epsilon = 1e-14);
        let (x1, x2) = q.roots.unwrap();
        assert_abs_diff_eq!(x1, 4.0 - 7.0_f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(x2, 4.0 + 7.0_f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(q.a + q.b + q.c, -1.0, epsilon = 1e-14);

        let q = radial_quadratic(SpaceModel::Spherical, B2, -2.0, 12.0).unwrap();
        assert_eq!((q.a, q.b, q.c, q.disc), (-16.0, 16.0, -4.0, 0.0));
        assert_eq!(q.roots, Some((0.5, 0.5)));
    }

    #[test]
    fn classify_worked_examples() {
        let c = classify(SpaceModel::Hyperbolic, B2, -1.0, 3.0, 4.0).unwrap();
        assert_eq!(c.radial, RadialClass::FixedRadius);
        assert_eq!(c.axial, AxialClass::TypeI);

        let c = classify(SpaceModel::Hyperbolic, FieldStrengthB(1.0), 0.0, 2.0, 3.0).unwrap();
        assert_eq!(c.radial, RadialClass::InfiniteOneTurning);
        let q = radial_quadratic(SpaceModel::Hyperbolic, FieldStrengthB(1.0), 0.0, 2.0).unwrap();
        let (x1, x2) = q.roots.unwrap();
        assert_abs_diff_eq!(x1, -3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x2, 1.0, epsilon = 1e-14);

        let c = classify(SpaceModel::Hyperbolic, B2, -1.0, 2.0, 3.0).unwrap();
        assert_eq!(c.radial, RadialClass::NonPhysical);

        // a = 0 borderline: B = 1, I = 0, A = 1.
        let c = classify(SpaceModel::Hyperbolic, FieldStrengthB(1.0), 0.0, 1.0, 2.0).unwrap();
        assert_eq!(c.radial, RadialClass::InfiniteCritical);

        // Type II needs the hyperbolic model.
        let c = classify(SpaceModel::Hyperbolic, B2, -1.0, 3.5, 2.0).unwrap();
        assert_eq!(c.axial, AxialClass::TypeII);
        let c = classify(SpaceModel::Spherical, B2, -2.0, 12.0, 4.0).unwrap();
        assert_eq!(c.radial, RadialClass::NonPhysical);
        assert_ne!(c.axial, AxialClass::TypeII);
    }

    #[test]
    fn spherical_radial_classes_are_finite() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let b = FieldStrengthB(rng.gen_range(-3.0..3.0));
            let i = rng.gen_range(-4.0..4.0);
            let a = rng.gen_range(0.0..5.0);
            let eps = rng.gen_range(0.0..6.0);
            let c = classify(SpaceModel::Spherical, b, i, a, eps).unwrap();
            assert!(
                matches!(
                    c.radial,
                    RadialClass::FixedRadius
                        | RadialClass::SphericalFinite
                        | RadialClass::NonPhysical
                ),
                "unexpected {c:?}"
            );
            assert_ne!(c.axial, AxialClass::TypeII);
            if c.radial == RadialClass::SphericalFinite {
                // Both turning points lie within the cos r range.
                let q = radial_quadratic(SpaceModel::Spherical, b, i, a).unwrap();
                let (x1, x2) = q.roots.unwrap();
                assert!(x1 >= -1.0 - 1e-9 && x2 <= 1.0 + 1e-9, "roots {x1}, {x2}");
            }
        }
    }

    #[test]
    fn fixed_radius_worked_examples() {
        let o = fixed_radius_orbit(SpaceModel::Hyperbolic, B2, ARCCOSH_2).unwrap();
        assert_abs_diff_eq!(o.i_phi, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.alpha, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.a_transverse, 3.0, epsilon = 1e-12);

        let o = fixed_radius_orbit(SpaceModel::Spherical, B2, PI / 3.0).unwrap();
        assert_abs_diff_eq!(o.i_phi, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.alpha, -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.a_transverse, 12.0, epsilon = 1e-12);

        // r0 -> 0 approaches the flat cyclotron: alpha -> -B, A -> 0.
        let o = fixed_radius_orbit(SpaceModel::Hyperbolic, B2, 1e-8).unwrap();
        assert_abs_diff_eq!(o.alpha, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.a_transverse, 0.0, epsilon = 1e-12);

        assert!(fixed_radius_orbit(SpaceModel::Hyperbolic, B2, 0.0).is_err());
        assert!(fixed_radius_orbit(SpaceModel::Spherical, B2, PI / 2.0).is_err());
    }

    #[test]
    fn fixed_radius_orbit_degenerates_quadratic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let (model, r0) = if rng.gen_bool(0.5) {
                (SpaceModel::Hyperbolic, rng.gen_range(0.1..2.0))
            } else {
                let r = rng.gen_range(0.1..PI - 0.1);
                if (r - PI / 2.0).abs() < 0.05 {
                    continue;
                }
                (SpaceModel::Spherical, r)
            };
            let b = FieldStrengthB(
                rng.gen_range(0.2..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            );
            let o = fixed_radius_orbit(model, b, r0).unwrap();
            let q = radial_quadratic(model, b, o.i_phi, o.a_transverse).unwrap();
            let scale = (q.b * q.b).max((4.0 * q.a * q.c).abs());
            assert!(
                q.disc.abs() <= 1e-10 * scale.max(1.0),
                "disc = {:e}",
                q.disc
            );
            let x0 = q.vertex();
            match model {
                SpaceModel::Hyperbolic => {
                    assert_abs_diff_eq!(x0, r0.cosh(), epsilon = 1e-8);
                    // Eq-(5.17)-style inequality: B/(I+B) > 1.
                    assert!(b.0 / (o.i_phi + b.0) > 1.0);
                }
                SpaceModel::Spherical => {
                    assert_abs_diff_eq!(x0, r0.cos(), epsilon = 1e-8);
                }
                SpaceModel::Euclidean => unreachable!(),
            }
        }
    }

    #[test]
    fn axial_hand_values() {
        // eps = 4, A = 3: sinh z = 0.5 sinh 2t.
        let v = axial_solution(SpaceModel::Hyperbolic, 4.0, 3.0, 0.7, Sign::Plus).unwrap();
        assert_abs_diff_eq!(v, 0.5 * (1.4_f64).sinh(), epsilon = 1e-14);
        // Critical plane.
        assert_eq!(
            axial_solution(SpaceModel::Hyperbolic, 3.0, 3.0, 1.0, Sign::Plus).unwrap(),
            0.0
        );
        // S3: eps = 16, A = 12: sin z = 0.5 sin 4t.
        let v = axial_solution(SpaceModel::Spherical, 16.0, 12.0, 0.3, Sign::Plus).unwrap();
        assert_abs_diff_eq!(v, 0.5 * (1.2_f64).sin(), epsilon = 1e-14);
        assert!(axial_solution(SpaceModel::Spherical, 3.0, 4.0, 0.3, Sign::Plus).is_err());
        // Type II turning height at t = 0.
        let v = axial_solution(SpaceModel::Hyperbolic, 2.0, 3.0, 0.0, Sign::Minus).unwrap();
        assert_abs_diff_eq!(v, -(3.0_f64 / 2.0 - 1.0).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn azimuth_hand_values() {
        for model in [SpaceModel::Hyperbolic, SpaceModel::Spherical] {
            assert_eq!(azimuth_solution(model, 4.0, 3.0, -1.0, 0.0).unwrap(), 0.0);
        }
        // Finite rotation angle as t -> infinity (eps = 4, A = 3, alpha = -1).
        let inf = azimuth_solution(SpaceModel::Hyperbolic, 4.0, 3.0, -1.0, 100.0).unwrap();
        let expect = -1.0 / 3.0_f64.sqrt() * (3.0_f64 / 4.0).sqrt().atanh();
        assert_abs_diff_eq!(inf, expect, epsilon = 1e-8);

        // One full arctan branch advanced at t = T = pi/4 (eps = 16, A = 12).
        let v = azimuth_solution(SpaceModel::Spherical, 16.0, 12.0, -4.0, PI / 4.0).unwrap();
        assert_abs_diff_eq!(v, -4.0 / 12.0_f64.sqrt() * PI, epsilon = 1e-12);
    }

    #[test]
    fn azimuth_critical_exp_limits() {
        // Contracting branch: phi runs off linearly at late times.
        let eps = 2.0;
        let alpha = -0.7;
        let z0 = 0.8;
        assert_eq!(
            azimuth_critical_exp(eps, alpha, z0, Sign::Plus, 0.0).unwrap(),
            0.0
        );
        let late = azimuth_critical_exp(eps, alpha, z0, Sign::Plus, 50.0).unwrap();
        let expect =
            alpha / (2.0 * eps.sqrt()) * ((z0.sinh().powi(2) + 1.0) / z0.sinh().powi(2)).ln();
        assert_abs_diff_eq!(late, expect, epsilon = 1e-10);
        assert!(azimuth_critical_exp(eps, alpha, 0.0, Sign::Plus, 1.0).is_err());
    }

    #[test]
    fn radial_solution_hand_values() {
        // Degenerate segment stays at the double root.
        for t in [0.0, 0.4, 2.0] {
            let x =
                radial_solution(SpaceModel::Hyperbolic, B2, -1.0, 3.0, 4.0, t, Sign::Plus).unwrap();
            assert_abs_diff_eq!(x, 2.0, epsilon = 1e-12);
        }
        // Finite band containment.
        let q = radial_quadratic(SpaceModel::Hyperbolic, B2, -1.0, 3.5).unwrap();
        let (x1, x2) = q.roots.unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.05;
            let x =
                radial_solution(SpaceModel::Hyperbolic, B2, -1.0, 3.5, 4.0, t, Sign::Plus).unwrap();
            assert!(
                x >= x1 - 1e-9 && x <= x2 + 1e-9,
                "x = {x} outside [{x1}, {x2}]"
            );
        }
        // a = 0 borderline: x(0) = -c/b = 1.
        let x = radial_solution(
            SpaceModel::Hyperbolic,
            FieldStrengthB(1.0),
            0.0,
            1.0,
            2.0,
            0.0,
            Sign::Plus,
        )
        .unwrap();
        assert_abs_diff_eq!(x, 1.0, epsilon = 1e-12);
        let x = radial_solution(
            SpaceModel::Hyperbolic,
            FieldStrengthB(1.0),
            0.0,
            1.0,
            2.0,
            3.0,
            Sign::Plus,
        )
        .unwrap();
        assert!(x > 1.0);
    }

    #[test]
    fn surface_rphi_hand_values() {
        // Degenerate case: (I+B) cosh r = B on the orbit radius, any phi.
        for phi in [0.0, 1.0, 4.0] {
            let res = trajectory_surface_rphi(
                SpaceModel::Hyperbolic,
                B2,
                -1.0,
                3.0,
                &CylPoint::new(ARCCOSH_2, phi, 0.7),
            )
            .unwrap();
            assert_abs_diff_eq!(res, 0.0, epsilon = 1e-12);
        }
        let res = trajectory_surface_rphi(
            SpaceModel::Spherical,
            B2,
            -2.0,
            12.0,
            &CylPoint::new(PI / 3.0, 2.2, 0.1),
        )
        .unwrap();
        assert_abs_diff_eq!(res, 0.0, epsilon = 1e-12);

        // Generic off-surface point gives a nonzero residual.
        let res = trajectory_surface_rphi(
            SpaceModel::Hyperbolic,
            B2,
            -1.0,
            3.5,
            &CylPoint::new(1.0, 0.3, 0.0),
        )
        .unwrap();
        assert!(res.abs() > 1e-3);
    }

    #[test]
    fn canonical_hand_values() {
        let cp = canonical_parameters(SpaceModel::Hyperbolic, B2, -1.0, 3.0).unwrap();
        assert_abs_diff_eq!(cp.j, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cp.c_par, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(cp.invariant_value, 1.0, epsilon = 1e-14);

        let cp =
            canonical_parameters(SpaceModel::Hyperbolic, FieldStrengthB(1.0), 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(cp.j, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cp.c_par, 2.0_f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(cp.invariant_value, -1.0, epsilon = 1e-14);

        let cp = canonical_parameters(SpaceModel::Spherical, B2, -2.0, 12.0).unwrap();
        assert_abs_diff_eq!(cp.j, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cp.c_par, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(cp.invariant_value, 16.0, epsilon = 1e-14);
    }

    #[test]
    fn transform_hand_values() {
        let cp = CanonicalParams {
            j: 4.0,
            c_par: 0.0,
            invariant_value: 16.0,
        };
        let s = TransversalShift::new(ShiftPlane::Plane01, PI / 2.0);
        let out = transform_parameters(SpaceModel::Spherical, &s, &cp).unwrap();
        assert_abs_diff_eq!(out.j, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.c_par, -4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.invariant_value, 16.0, epsilon = 1e-12);

        let id = TransversalShift::new(ShiftPlane::Plane01, 0.0);
        let cp2 = CanonicalParams {
            j: 1.3,
            c_par: 0.4,
            invariant_value: 1.3 * 1.3 - 0.16,
        };
        let out = transform_parameters(SpaceModel::Hyperbolic, &id, &cp2).unwrap();
        assert_eq!(out.j, cp2.j);
        assert_eq!(out.c_par, cp2.c_par);
    }

    #[test]
    fn s3_axial_period() {
        // z and the azimuth advance repeat with T = pi/sqrt(eps).
        let (eps, a) = (16.0_f64, 12.0);
        let period = PI / eps.sqrt();
        for i in 0..40 {
            let t = i as f64 * 0.037;
            let z1 = axial_solution(SpaceModel::Spherical, eps, a, t, Sign::Plus).unwrap();
            let z2 = axial_solution(SpaceModel::Spherical, eps, a, t + period, Sign::Plus).unwrap();
            assert_abs_diff_eq!(z1.abs(), z2.abs(), epsilon = 1e-9);
            let z3 = axial_solution(SpaceModel::Spherical, eps, a, t + 2.0 * period, Sign::Plus)
                .unwrap();
            assert_abs_diff_eq!(z1, z3, epsilon = 1e-9);
            let p1 = azimuth_solution(SpaceModel::Spherical, eps, a, -4.0, t).unwrap();
            let p2 = azimuth_solution(SpaceModel::Spherical, eps, a, -4.0, t + period).unwrap();
            assert_abs_diff_eq!(p2 - p1, -4.0 / a.sqrt() * PI, epsilon = 1e-9);
        }
    }

    #[test]
    fn canonical_reduction_to_shifted_circle() {
        // For finite motion (B^2 > A) a boost with tanh beta = -C/J sends
        // (J, C) to (J0, 0) with J0^2 = B^2 - A; the reduced surface is the
        // circle J0 cosh r0 = B.
        let (b, i, a) = (2.0_f64, -0.5, 2.0);
        let cp = canonical_parameters(SpaceModel::Hyperbolic, FieldStrengthB(b), i, a).unwrap();
        assert!(cp.invariant_value > 0.0);
        let beta = (-cp.c_par / cp.j).atanh();
        let s = TransversalShift::new(ShiftPlane::Plane01, beta);
        let reduced = transform_parameters(SpaceModel::Hyperbolic, &s, &cp).unwrap();
        assert_abs_diff_eq!(reduced.c_par, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(reduced.j * reduced.j, b * b - a, epsilon = 1e-12);
        let cosh_r0 = b / reduced.j;
        assert!(cosh_r0 > 1.0);
        // The reduced circle carries the fixed-radius constants.
        let orbit =
            fixed_radius_orbit(SpaceModel::Hyperbolic, FieldStrengthB(b), cosh_r0.acosh()).unwrap();
        let qd = radial_quadratic(
            SpaceModel::Hyperbolic,
            FieldStrengthB(b),
            orbit.i_phi,
            orbit.a_transverse,
        )
        .unwrap();
        assert_abs_diff_eq!(qd.vertex(), cosh_r0, epsilon = 1e-10);
    }

    #[test]
    fn surface_rz_vanishes_at_matched_symmetry_point() {
        // Case Ia at z = 0 with cosh r at the quadratic's vertex: both sides
        // of the F(r, z) relation are zero.
        let (b, i, a, eps) = (FieldStrengthB(2.0), -1.0, 3.5, 4.0);
        let q = radial_quadratic(SpaceModel::Hyperbolic, b, i, a).unwrap();
        let p = CylPoint::new(q.vertex().acosh(), 0.3, 0.0);
        for sign in [Sign::Plus, Sign::Minus] {
            let res =
                trajectory_surface_rz(SpaceModel::Hyperbolic, b, i, a, eps, &p, sign).unwrap();
            assert_abs_diff_eq!(res, 0.0, epsilon = 1e-12);
        }
        // epsilon = A has no F(r, z) quadrature form.
        assert!(matches!(
            trajectory_surface_rz(SpaceModel::Hyperbolic, b, i, 4.0, eps, &p, Sign::Plus),
            Err(Error::RegimeMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn h3_sum_identity(
            b in -3.0_f64..3.0,
            i in -3.0_f64..3.0,
            a in 0.0_f64..4.0,
        ) {
            let q = radial_quadratic(SpaceModel::Hyperbolic, FieldStrengthB(b), i, a).unwrap();
            let scale = (i * i).max(1.0);
            prop_assert!((q.a + q.b + q.c + i * i).abs() <= 1e-13 * scale * 10.0);
        }

        #[test]
        fn h3_radial_class_matches_root_geometry(
            b in -3.0_f64..3.0,
            i in -3.0_f64..3.0,
            a in 0.0_f64..4.0,
            eps in 0.0_f64..5.0,
        ) {
            let bf = FieldStrengthB(b);
            let class = classify(SpaceModel::Hyperbolic, bf, i, a, eps).unwrap();
            let q = radial_quadratic(SpaceModel::Hyperbolic, bf, i, a).unwrap();
            match class.radial {
                RadialClass::FiniteTwoTurning => {
                    let (x1, _) = q.roots.unwrap();
                    prop_assert!(q.a < 0.0);
                    prop_assert!(x1 >= 1.0 - 1e-9, "inner turning {x1} below the axis");
                }
                RadialClass::InfiniteOneTurning => {
                    let (_, x2) = q.roots.unwrap();
                    prop_assert!(q.a > 0.0);
                    prop_assert!(x2 >= 1.0 - 1e-9, "turning {x2} below the axis");
                }
                RadialClass::FixedRadius => prop_assert!(q.vertex() > 1.0),
                RadialClass::InfiniteCritical => {
                    prop_assert!(q.b > 0.0);
                    prop_assert!(-q.c / q.b >= 1.0 - 1e-9);
                }
                RadialClass::SphericalFinite => prop_assert!(false, "not a hyperbolic class"),
                RadialClass::NonPhysical => {}
            }
        }

        #[test]
        fn s3_sum_identity(
            b in -3.0_f64..3.0,
            i in -3.0_f64..3.0,
            a in 0.0_f64..4.0,
        ) {
            // The same identity a + b + c = -I^2 holds on S3: the quadratic
            // evaluated at cos r = 1 measures the squared azimuthal integral
            // on the axis just as on H3.
            let q = radial_quadratic(SpaceModel::Spherical, FieldStrengthB(b), i, a).unwrap();
            let scale = (i * i).max(1.0);
            prop_assert!((q.a + q.b + q.c + i * i).abs() <= 1e-13 * scale * 10.0);
        }

        #[test]
        fn invariant_preserved_under_shifts(
            b in 0.3_f64..3.0,
            i in -3.0_f64..3.0,
            a in 0.01_f64..4.0,
            amount in -2.0_f64..2.0,
            spherical in proptest::bool::ANY,
        ) {
            let model = if spherical { SpaceModel::Spherical } else { SpaceModel::Hyperbolic };
            let cp = match canonical_parameters(model, FieldStrengthB(b), i, a) {
                Ok(cp) => cp,
                Err(_) => return Ok(()), // radicand negative: no surface to transform
            };
            let s = TransversalShift::new(ShiftPlane::Plane01, amount);
            let out = transform_parameters(model, &s, &cp).unwrap();
            prop_assert!((out.invariant_value - cp.invariant_value).abs()
                <= 1e-12 * cp.invariant_value.abs().max(1.0));
            // Composition additivity on (J, C).
            let s1 = TransversalShift::new(ShiftPlane::Plane01, amount / 3.0);
            let s2 = TransversalShift::new(ShiftPlane::Plane01, 2.0 * amount / 3.0);
            let two = transform_parameters(model, &s2, &transform_parameters(model, &s1, &cp).unwrap()).unwrap();
            prop_assert!((two.j - out.j).abs() <= 1e-10 * out.j.abs().max(1.0));
            prop_assert!((two.c_par - out.c_par).abs() <= 1e-10 * out.c_par.abs().max(1.0));
        }

        #[test]
        fn degenerate_detection_on_fixed_radius(
            b in 0.3_f64..3.0,
            r0 in 0.1_f64..1.8,
            spherical in proptest::bool::ANY,
        ) {
            let model = if spherical { SpaceModel::Spherical } else { SpaceModel::Hyperbolic };
            if model == SpaceModel::Spherical && (r0 - PI / 2.0).abs() < 0.05 {
                return Ok(());
            }
            let o = fixed_radius_orbit(model, FieldStrengthB(b), r0).unwrap();
            let eps = o.a_transverse * 1.5 + 0.1;
            let c = classify(model, FieldStrengthB(b), o.i_phi, o.a_transverse, eps).unwrap();
            prop_assert_eq!(c.radial, RadialClass::FixedRadius);
        }
    }
}
