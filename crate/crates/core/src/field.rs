//! The uniform magnetic field on each space model: 4-potential, field
//! strength, a numeric Maxwell check, and the gauge functions generated by
//! transversal shifts.
//!
//! The dimensionless amplitude `B` absorbs charge, mass, light speed and the
//! curvature radius. `A_phi = -B (cosh r - 1)` on H3, `B (cos r - 1)` on S3
//! and `-B r^2 / 2` in flat space; the only field component is
//! `F_phi_r = B sinh r`, `B sin r`, `B r` respectively.

use crate::error::{Error, Result};
use crate::geometry::{self, validate_point, CylPoint, ShiftPlane, SpaceModel, TransversalShift};
use std::f64::consts::FRAC_PI_2;

/// Dimensionless magnetic-field amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStrengthB(pub f64);

/// A gauge function value together with its closed-form partials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeEvaluation {
    pub lambda_value: f64,
    pub d_lambda_dr: f64,
    pub d_lambda_dphi: f64,
}

/// Azimuthal covariant potential component `A_phi(r)`.
pub fn potential_phi(model: SpaceModel, b: FieldStrengthB, r: f64) -> f64 {
    match model {
        SpaceModel::Hyperbolic => -b.0 * (r.cosh() - 1.0),
        SpaceModel::Spherical => b.0 * (r.cos() - 1.0),
        SpaceModel::Euclidean => -b.0 * r * r / 2.0,
    }
}

/// The field-strength component `F_phi_r(r) = -d A_phi / d r`.
pub fn field_strength(model: SpaceModel, b: FieldStrengthB, r: f64) -> f64 {
    match model {
        SpaceModel::Hyperbolic => b.0 * r.sinh(),
        SpaceModel::Spherical => b.0 * r.sin(),
        SpaceModel::Euclidean => b.0 * r,
    }
}

fn sqrt_metric_density(model: SpaceModel, p: &CylPoint) -> f64 {
    match model {
        SpaceModel::Hyperbolic => p.z.cosh().powi(2) * p.r.sinh(),
        SpaceModel::Spherical => p.z.cos().powi(2) * p.r.sin(),
        SpaceModel::Euclidean => p.r,
    }
}

/// Contravariant component `F^{r phi} = g^{rr} g^{phi phi} F_{r phi}`.
fn field_upper_r_phi(model: SpaceModel, b: FieldStrengthB, p: &CylPoint) -> f64 {
    match model {
        SpaceModel::Hyperbolic => -b.0 / (p.z.cosh().powi(4) * p.r.sinh()),
        SpaceModel::Spherical => -b.0 / (p.z.cos().powi(4) * p.r.sin()),
        SpaceModel::Euclidean => -b.0 / p.r,
    }
}

/// Numeric residual of the source-free Maxwell equation,
/// `(1/sqrt g) d_r (sqrt g F^{r phi})` by central differences.
///
/// Identically zero for the uniform field on every model; the numeric check
/// also exercises the metric-density code path.
pub fn maxwell_residual(model: SpaceModel, b: FieldStrengthB, p: &CylPoint) -> Result<f64> {
    validate_point(model, p)?;
    let h = 1e-6;
    if p.r <= 2.0 * h {
        return Err(Error::AxisSingularity { r: p.r });
    }
    if model == SpaceModel::Spherical && p.r >= std::f64::consts::PI - 2.0 * h {
        return Err(Error::AxisSingularity { r: p.r });
    }
    let density_flux = |r: f64| {
        let q = CylPoint::new(r, p.phi, p.z);
        sqrt_metric_density(model, &q) * field_upper_r_phi(model, b, &q)
    };
    let d = (density_flux(p.r + h) - density_flux(p.r - h)) / (2.0 * h);
    Ok(d / sqrt_metric_density(model, p))
}

/// `(cosh/cos of the shift amount, sinh/sin of it)` for the curved models.
fn shift_cs(model: SpaceModel, amount: f64) -> Result<(f64, f64)> {
    match model {
        SpaceModel::Hyperbolic => Ok((amount.cosh(), amount.sinh())),
        SpaceModel::Spherical => Ok((amount.cos(), amount.sin())),
        SpaceModel::Euclidean => Err(Error::Unsupported(
            "transversal shifts act on the curved models only".into(),
        )),
    }
}

/// Gauge function `Lambda(r', phi')` generated by a Plane01 or Plane02 shift,
/// with the gauge constant fixed to zero.
///
/// Plane02 is evaluated by composing the Plane01 closed form with a quarter
/// azimuth turn. The arctan term is multivalued across `sin(phi') = 0`; the
/// value is taken on the local branch (the partials are regular there).
pub fn gauge_function(
    model: SpaceModel,
    s: &TransversalShift,
    b: FieldStrengthB,
    p_shifted: &CylPoint,
) -> Result<GaugeEvaluation> {
    validate_point(model, p_shifted)?;
    if s.amount == 0.0 {
        return Err(Error::DegenerateShift);
    }
    let chi = match s.plane {
        ShiftPlane::Plane01 => p_shifted.phi,
        ShiftPlane::Plane02 => p_shifted.phi - FRAC_PI_2,
        ShiftPlane::Plane03 => {
            return Err(Error::Unsupported(
                "Plane03 shifts do not leave the field invariant; no gauge function exists".into(),
            ))
        }
    };
    if b.0 == 0.0 {
        return Ok(GaugeEvaluation {
            lambda_value: 0.0,
            d_lambda_dr: 0.0,
            d_lambda_dphi: 0.0,
        });
    }
    let (c, sn) = shift_cs(model, s.amount)?;
    let (sin_chi, cos_chi) = chi.sin_cos();
    match model {
        SpaceModel::Hyperbolic => {
            let (shr, chr) = (p_shifted.r.sinh(), p_shifted.r.cosh());
            let denom = 1.0 + c * chr - sn * shr * cos_chi;
            let d_lambda_dr = b.0 * sn * sin_chi / denom;
            let d_lambda_dphi = b.0 * ((chr - 1.0) * (1.0 - c) + sn * shr * cos_chi) / denom;
            if sin_chi == 0.0 {
                return Err(Error::BranchSingularity);
            }
            let num = (c - 1.0) * (chr - 1.0) - sn * shr * cos_chi;
            let lambda_value = 2.0 * b.0 * (num / (sn * shr * sin_chi)).atan() - 2.0 * b.0 * chi;
            Ok(GaugeEvaluation {
                lambda_value,
                d_lambda_dr,
                d_lambda_dphi,
            })
        }
        SpaceModel::Spherical => {
            let (shr, chr) = p_shifted.r.sin_cos();
            let denom = 1.0 + c * chr - sn * shr * cos_chi;
            let d_lambda_dr = -b.0 * sn * sin_chi / denom;
            let d_lambda_dphi = -b.0 * ((chr - 1.0) * (1.0 - c) + sn * shr * cos_chi) / denom;
            if sin_chi == 0.0 {
                return Err(Error::BranchSingularity);
            }
            let num = (1.0 - c) * (1.0 - chr) - sn * shr * cos_chi;
            let lambda_value = -2.0 * b.0 * (num / (sn * shr * sin_chi)).atan() + 2.0 * b.0 * chi;
            Ok(GaugeEvaluation {
                lambda_value,
                d_lambda_dr,
                d_lambda_dphi,
            })
        }
        SpaceModel::Euclidean => unreachable!("shift_cs rejects Euclidean"),
    }
}

/// Pullback of the 4-potential under a Plane01/Plane02 shift, evaluated at
/// the shifted point: `(A'_r', A'_phi')`.
///
/// Computed from the closed-form partials of the coordinate change, so it is
/// an independent route against `potential_phi` plus the gauge partials
/// (`A'_r' = dLambda/dr'` and `A'_phi' = A_phi(r') + dLambda/dphi'`).
pub fn pullback_potential_components(
    model: SpaceModel,
    s: &TransversalShift,
    b: FieldStrengthB,
    p_shifted: &CylPoint,
) -> Result<(f64, f64)> {
    validate_point(model, p_shifted)?;
    if s.plane == ShiftPlane::Plane03 {
        return Err(Error::Unsupported(
            "Plane03 pullback mixes in an axial component; see plane03_induced_f_phi_z".into(),
        ));
    }
    let chi = match s.plane {
        ShiftPlane::Plane01 => p_shifted.phi,
        ShiftPlane::Plane02 => p_shifted.phi - FRAC_PI_2,
        ShiftPlane::Plane03 => unreachable!(),
    };
    let (c, sn) = shift_cs(model, s.amount)?;
    let (sin_chi, cos_chi) = chi.sin_cos();
    match model {
        SpaceModel::Hyperbolic => {
            let (shr, chr) = (p_shifted.r.sinh(), p_shifted.r.cosh());
            let cosh_r = c * chr - sn * shr * cos_chi;
            let sinh2_r = cosh_r * cosh_r - 1.0;
            if sinh2_r <= 0.0 {
                return Err(Error::AxisSingularity { r: 0.0 });
            }
            let a_phi = potential_phi(model, b, cosh_r.acosh());
            let dphi_dphi = shr * (c * shr - sn * chr * cos_chi) / sinh2_r;
            let dphi_dr = -sn * sin_chi / sinh2_r;
            Ok((dphi_dr * a_phi, dphi_dphi * a_phi))
        }
        SpaceModel::Spherical => {
            let (shr, chr) = p_shifted.r.sin_cos();
            let cos_r = c * chr - sn * shr * cos_chi;
            let sin2_r = 1.0 - cos_r * cos_r;
            if sin2_r <= 0.0 {
                return Err(Error::AxisSingularity { r: 0.0 });
            }
            let a_phi = potential_phi(model, b, cos_r.acos());
            let dphi_dphi = shr * (sn * chr * cos_chi + c * shr) / sin2_r;
            let dphi_dr = sn * sin_chi / sin2_r;
            Ok((dphi_dr * a_phi, dphi_dphi * a_phi))
        }
        SpaceModel::Euclidean => unreachable!("shift_cs rejects Euclidean"),
    }
}

/// Relative mismatch `|J F_phi_r(r) - F_phi'_r'(r')| / |F_phi'_r'(r')|` under
/// a Plane01/Plane02 shift; analytically zero since the field is invariant.
pub fn verify_field_invariance(
    model: SpaceModel,
    s: &TransversalShift,
    b: FieldStrengthB,
    p: &CylPoint,
) -> Result<f64> {
    let p_shifted = geometry::shift_pullback_cyl(model, s, p)?;
    let jac = geometry::shift_jacobian(model, s, &p_shifted, p)?;
    let f = field_strength(model, b, p.r);
    let f_shifted = field_strength(model, b, p_shifted.r);
    let scale = f_shifted.abs().max(1e-300);
    Ok((jac * f - f_shifted).abs() / scale)
}

/// Axial field component `F_phi'_z' = (dr/dz') F_phi_r` induced by a Plane03
/// shift, computed by central differences of the inverse coordinate map.
///
/// Nonzero at generic points: the uniform field is not invariant under
/// Plane03 shifts.
pub fn plane03_induced_f_phi_z(
    model: SpaceModel,
    s: &TransversalShift,
    b: FieldStrengthB,
    p_shifted: &CylPoint,
) -> Result<f64> {
    if s.plane != ShiftPlane::Plane03 {
        return Err(Error::Unsupported(
            "the induced axial component is a Plane03 effect".into(),
        ));
    }
    let inv = s.inverse();
    let h = 1e-6;
    let r_of = |z: f64| -> Result<f64> {
        let q = CylPoint::new(p_shifted.r, p_shifted.phi, z);
        let u = geometry::to_ambient(model, &q)?;
        let w = geometry::apply_shift(model, &inv, &u)?;
        Ok(geometry::from_ambient(model, &w)?.r)
    };
    let dr_dz = (r_of(p_shifted.z + h)? - r_of(p_shifted.z - h)?) / (2.0 * h);
    let r = r_of(p_shifted.z)?;
    Ok(dr_dz * field_strength(model, b, r))
}
