//! Cylindrical charts on the three constant-curvature space models, the
//! ambient embeddings, Christoffel symbols, and the one-parameter transversal
//! shift isometries (Lorentz boosts on H3, rotations on S3).
//!
//! Conventions: all coordinates are dimensionless (lengths in units of the
//! curvature radius). Azimuths returned by chart operations are normalized to
//! `[0, 2*pi)`. On the azimuth-degenerate axis `u1 = u2 = 0` the convention
//! `phi = 0` is used instead of erroring, so that axis-crossing trajectories
//! can still be mapped.

use crate::error::{Error, Result};
use std::f64::consts::{PI, TAU};

/// Singularity guard below which `coth r` / `cot r` / `1/r` entries error.
pub const R_MIN: f64 = 1e-10;

/// Coordinate indices into [`ChristoffelTable`].
pub const IDX_R: usize = 0;
pub const IDX_PHI: usize = 1;
pub const IDX_Z: usize = 2;

/// Which of the three constant-curvature backgrounds applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceModel {
    Hyperbolic,
    Spherical,
    Euclidean,
}

impl SpaceModel {
    pub fn is_curved(self) -> bool {
        !matches!(self, SpaceModel::Euclidean)
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceModel::Hyperbolic => "hyperbolic",
            SpaceModel::Spherical => "spherical",
            SpaceModel::Euclidean => "euclidean",
        }
    }
}

/// Cylindrical-chart position `(r, phi, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylPoint {
    pub r: f64,
    pub phi: f64,
    pub z: f64,
}

impl CylPoint {
    pub fn new(r: f64, phi: f64, z: f64) -> Self {
        CylPoint { r, phi, z }
    }
}

/// Embedding coordinates on the unit hyperboloid (H3) or unit 3-sphere (S3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientPoint {
    pub u0: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

impl AmbientPoint {
    pub fn new(u0: f64, u1: f64, u2: f64, u3: f64) -> Self {
        AmbientPoint { u0, u1, u2, u3 }
    }

    /// Residual of the model's quadratic-form invariant
    /// (`u0^2 - u1^2 - u2^2 - u3^2 - 1` on H3, `|u|^2 - 1` on S3).
    pub fn embedding_residual(&self, model: SpaceModel) -> f64 {
        match model {
            SpaceModel::Hyperbolic => {
                self.u0 * self.u0 - self.u1 * self.u1 - self.u2 * self.u2 - self.u3 * self.u3 - 1.0
            }
            SpaceModel::Spherical => {
                self.u0 * self.u0 + self.u1 * self.u1 + self.u2 * self.u2 + self.u3 * self.u3 - 1.0
            }
            SpaceModel::Euclidean => f64::NAN,
        }
    }
}

/// Plane selector for the one-parameter shift families.
///
/// `Plane01` and `Plane02` mix the timelike/0-axis with a transverse
/// direction and leave the magnetic field invariant; `Plane03` mixes it with
/// the cylinder axis and does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShiftPlane {
    Plane01,
    Plane02,
    Plane03,
}

/// A transversal shift: rapidity `beta` on H3, angle `alpha` on S3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransversalShift {
    pub plane: ShiftPlane,
    pub amount: f64,
}

impl TransversalShift {
    pub fn new(plane: ShiftPlane, amount: f64) -> Self {
        TransversalShift { plane, amount }
    }

    pub fn inverse(self) -> Self {
        TransversalShift {
            plane: self.plane,
            amount: -self.amount,
        }
    }
}

/// Connection coefficients, indexed `gamma[upper][lower][lower]` over
/// `(r, phi, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelTable {
    pub gamma: [[[f64; 3]; 3]; 3],
}

/// Normalize an azimuth into `[0, 2*pi)`.
pub fn normalize_phi(phi: f64) -> f64 {
    let p = phi.rem_euclid(TAU);
    // rem_euclid can return TAU itself when phi is a tiny negative number.
    if p >= TAU {
        p - TAU
    } else {
        p
    }
}

/// Chart validity: `r >= 0` always; on S3 additionally `r <= pi` and
/// `|z| < pi/2` (open chart in z).
pub fn validate_point(model: SpaceModel, p: &CylPoint) -> Result<()> {
    if !(p.r.is_finite() && p.phi.is_finite() && p.z.is_finite()) {
        return Err(Error::ChartDomain(format!("non-finite coordinates {p:?}")));
    }
    if p.r < 0.0 {
        return Err(Error::ChartDomain(format!("r = {} < 0", p.r)));
    }
    if model == SpaceModel::Spherical {
        if p.r > PI {
            return Err(Error::ChartDomain(format!("r = {} > pi", p.r)));
        }
        if p.z.abs() >= PI / 2.0 {
            return Err(Error::ChartDomain(format!("|z| = {} >= pi/2", p.z.abs())));
        }
    }
    Ok(())
}

/// Map a chart point to its ambient embedding. Not defined for E3.
pub fn to_ambient(model: SpaceModel, p: &CylPoint) -> Result<AmbientPoint> {
    validate_point(model, p)?;
    match model {
        SpaceModel::Hyperbolic => {
            let (sr, cr) = (p.r.sinh(), p.r.cosh());
            let (sz, cz) = (p.z.sinh(), p.z.cosh());
            Ok(AmbientPoint::new(
                cz * cr,
                cz * sr * p.phi.cos(),
                cz * sr * p.phi.sin(),
                sz,
            ))
        }
        SpaceModel::Spherical => {
            let (sr, cr) = p.r.sin_cos();
            let (sz, cz) = p.z.sin_cos();
            Ok(AmbientPoint::new(
                cz * cr,
                cz * sr * p.phi.cos(),
                cz * sr * p.phi.sin(),
                sz,
            ))
        }
        SpaceModel::Euclidean => Err(Error::Unsupported(
            "flat space has no ambient quadric embedding".into(),
        )),
    }
}

/// Invert the embedding. The input must satisfy the embedding invariant to
/// `1e-9`; on the azimuth-degenerate axis `phi = 0` is returned.
pub fn from_ambient(model: SpaceModel, u: &AmbientPoint) -> Result<CylPoint> {
    let residual = u.embedding_residual(model);
    if residual.abs() > 1e-9 || residual.is_nan() {
        return Err(Error::EmbeddingViolation { residual });
    }
    let rho = u.u1.hypot(u.u2);
    // Within rounding noise of the azimuth-degenerate axis the convention
    // phi = 0 applies (e.g. sin(pi) = 1.2e-16 after an exact pi rotation).
    let phi = if rho <= 1e-14 {
        0.0
    } else {
        normalize_phi(u.u2.atan2(u.u1))
    };
    match model {
        SpaceModel::Hyperbolic => {
            if u.u0 < 1.0 - 1e-9 {
                return Err(Error::ChartDomain(format!(
                    "u0 = {} on the lower sheet",
                    u.u0
                )));
            }
            let z = u.u3.asinh();
            // cosh z * sinh r = rho is exact on the embedding, and asinh is
            // well conditioned near the axis where acosh(u0/cosh z) is not.
            let r = (rho / z.cosh()).asinh();
            Ok(CylPoint::new(r, phi, z))
        }
        SpaceModel::Spherical => {
            if u.u3.abs() >= 1.0 - 1e-12 {
                return Err(Error::ChartDomain(
                    "point at the |z| = pi/2 pole, outside the open chart".into(),
                ));
            }
            let z = u.u3.asin();
            let r = rho.atan2(u.u0);
            Ok(CylPoint::new(r, phi, z))
        }
        SpaceModel::Euclidean => Err(Error::Unsupported(
            "flat space has no ambient quadric embedding".into(),
        )),
    }
}

/// Christoffel symbols of the spatial metric at `p`.
///
/// Errors with [`Error::AxisSingularity`] when the `coth r` / `cot r` / `1/r`
/// entries are requested within `R_MIN` of the degenerate axis.
pub fn christoffel(model: SpaceModel, p: &CylPoint) -> Result<ChristoffelTable> {
    validate_point(model, p)?;
    let mut g = [[[0.0; 3]; 3]; 3];
    match model {
        SpaceModel::Hyperbolic => {
            if p.r <= R_MIN {
                return Err(Error::AxisSingularity { r: p.r });
            }
            let (sr, cr) = (p.r.sinh(), p.r.cosh());
            let (sz, cz) = (p.z.sinh(), p.z.cosh());
            let tz = p.z.tanh();
            g[IDX_R][IDX_R][IDX_Z] = tz;
            g[IDX_R][IDX_Z][IDX_R] = tz;
            g[IDX_R][IDX_PHI][IDX_PHI] = -sr * cr;
            g[IDX_PHI][IDX_R][IDX_PHI] = cr / sr;
            g[IDX_PHI][IDX_PHI][IDX_R] = cr / sr;
            g[IDX_PHI][IDX_PHI][IDX_Z] = tz;
            g[IDX_PHI][IDX_Z][IDX_PHI] = tz;
            g[IDX_Z][IDX_R][IDX_R] = -cz * sz;
            g[IDX_Z][IDX_PHI][IDX_PHI] = -sz * cz * sr * sr;
        }
        SpaceModel::Spherical => {
            let (sr, cr) = p.r.sin_cos();
            if sr.abs() <= R_MIN {
                return Err(Error::AxisSingularity { r: p.r });
            }
            let (sz, cz) = p.z.sin_cos();
            let tz = p.z.tan();
            g[IDX_R][IDX_R][IDX_Z] = -tz;
            g[IDX_R][IDX_Z][IDX_R] = -tz;
            g[IDX_R][IDX_PHI][IDX_PHI] = -sr * cr;
            g[IDX_PHI][IDX_R][IDX_PHI] = cr / sr;
            g[IDX_PHI][IDX_PHI][IDX_R] = cr / sr;
            g[IDX_PHI][IDX_PHI][IDX_Z] = -tz;
            g[IDX_PHI][IDX_Z][IDX_PHI] = -tz;
            g[IDX_Z][IDX_R][IDX_R] = sz * cz;
            g[IDX_Z][IDX_PHI][IDX_PHI] = sz * cz * sr * sr;
        }
        SpaceModel::Euclidean => {
            if p.r <= R_MIN {
                return Err(Error::AxisSingularity { r: p.r });
            }
            g[IDX_R][IDX_PHI][IDX_PHI] = -p.r;
            g[IDX_PHI][IDX_R][IDX_PHI] = 1.0 / p.r;
            g[IDX_PHI][IDX_PHI][IDX_R] = 1.0 / p.r;
        }
    }
    Ok(ChristoffelTable { gamma: g })
}

fn shift_matrix(model: SpaceModel, s: &TransversalShift) -> Result<[[f64; 4]; 4]> {
    // Row-major matrix acting on (u0, u1, u2, u3).
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let k = match s.plane {
        ShiftPlane::Plane01 => 1,
        ShiftPlane::Plane02 => 2,
        ShiftPlane::Plane03 => 3,
    };
    match model {
        SpaceModel::Hyperbolic => {
            let (sh, ch) = (s.amount.sinh(), s.amount.cosh());
            m[0][0] = ch;
            m[0][k] = sh;
            m[k][0] = sh;
            m[k][k] = ch;
        }
        SpaceModel::Spherical => {
            let (sn, cs) = s.amount.sin_cos();
            m[0][0] = cs;
            m[0][k] = sn;
            m[k][0] = -sn;
            m[k][k] = cs;
        }
        SpaceModel::Euclidean => {
            return Err(Error::Unsupported(
                "transversal shifts act on the curved models only".into(),
            ))
        }
    }
    Ok(m)
}

/// Apply the shift to an ambient point: a Lorentz boost (H3) or rotation (S3)
/// in the selected plane.
pub fn apply_shift(
    model: SpaceModel,
    s: &TransversalShift,
    u: &AmbientPoint,
) -> Result<AmbientPoint> {
    let m = shift_matrix(model, s)?;
    let v = [u.u0, u.u1, u.u2, u.u3];
    let mut w = [0.0; 4];
    for (i, row) in m.iter().enumerate() {
        w[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    Ok(AmbientPoint::new(w[0], w[1], w[2], w[3]))
}

/// Image of a chart point under a Plane01/Plane02 shift, in chart
/// coordinates. `z` is unchanged; `phi` is normalized to `[0, 2*pi)`.
pub fn shift_pullback_cyl(
    model: SpaceModel,
    s: &TransversalShift,
    p: &CylPoint,
) -> Result<CylPoint> {
    validate_point(model, p)?;
    if s.plane == ShiftPlane::Plane03 {
        return Err(Error::Unsupported(
            "Plane03 shifts do not preserve the (r, phi) pair; use apply_shift".into(),
        ));
    }
    // Transverse components of sinh r' (cos phi', sin phi') resp.
    // sin r' (cos phi', sin phi'); the z factor drops out of the 2x2 block.
    let (t_cos, t_sin, x_new) = match model {
        SpaceModel::Hyperbolic => {
            let (sh, ch) = (s.amount.sinh(), s.amount.cosh());
            let (sr, cr) = (p.r.sinh(), p.r.cosh());
            match s.plane {
                ShiftPlane::Plane01 => (
                    sh * cr + ch * sr * p.phi.cos(),
                    sr * p.phi.sin(),
                    ch * cr + sh * sr * p.phi.cos(),
                ),
                ShiftPlane::Plane02 => (
                    sr * p.phi.cos(),
                    sh * cr + ch * sr * p.phi.sin(),
                    ch * cr + sh * sr * p.phi.sin(),
                ),
                ShiftPlane::Plane03 => unreachable!(),
            }
        }
        SpaceModel::Spherical => {
            let (sn, cs) = s.amount.sin_cos();
            let (sr, cr) = p.r.sin_cos();
            match s.plane {
                ShiftPlane::Plane01 => (
                    -sn * cr + cs * sr * p.phi.cos(),
                    sr * p.phi.sin(),
                    cs * cr + sn * sr * p.phi.cos(),
                ),
                ShiftPlane::Plane02 => (
                    sr * p.phi.cos(),
                    -sn * cr + cs * sr * p.phi.sin(),
                    cs * cr + sn * sr * p.phi.sin(),
                ),
                ShiftPlane::Plane03 => unreachable!(),
            }
        }
        SpaceModel::Euclidean => {
            return Err(Error::Unsupported(
                "transversal shifts act on the curved models only".into(),
            ))
        }
    };
    let rho = t_cos.hypot(t_sin);
    let phi_new = if rho <= 1e-14 {
        0.0
    } else {
        normalize_phi(t_sin.atan2(t_cos))
    };
    let r_new = match model {
        SpaceModel::Hyperbolic => rho.asinh(),
        SpaceModel::Spherical => rho.atan2(x_new),
        SpaceModel::Euclidean => unreachable!(),
    };
    let out = CylPoint::new(r_new, phi_new, p.z);
    validate_point(model, &out)?;
    Ok(out)
}

/// Jacobian of the `(r, phi)` block of a Plane01/Plane02 shift,
/// `det d(r, phi)/d(r', phi')`: `sinh r'/sinh r` on H3, `sin r'/sin r` on S3.
pub fn shift_jacobian(
    model: SpaceModel,
    s: &TransversalShift,
    p_shifted: &CylPoint,
    p: &CylPoint,
) -> Result<f64> {
    if s.plane == ShiftPlane::Plane03 {
        return Err(Error::Unsupported(
            "the Jacobian identity holds for Plane01/Plane02 shifts".into(),
        ));
    }
    match model {
        SpaceModel::Hyperbolic => {
            if p.r <= R_MIN || p_shifted.r <= R_MIN {
                return Err(Error::AxisSingularity {
                    r: p.r.min(p_shifted.r),
                });
            }
            Ok(p_shifted.r.sinh() / p.r.sinh())
        }
        SpaceModel::Spherical => {
            let (srp, sr) = (p_shifted.r.sin(), p.r.sin());
            if sr.abs() <= R_MIN || srp.abs() <= R_MIN {
                return Err(Error::AxisSingularity { r: p.r });
            }
            Ok(srp / sr)
        }
        SpaceModel::Euclidean => Err(Error::Unsupported(
            "transversal shifts act on the curved models only".into(),
        )),
    }
}
