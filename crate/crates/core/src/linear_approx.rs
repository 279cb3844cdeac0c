//! Closed-form geometry of the separatrix linearized at the saddle.
//!
//! The stable manifold of `(q, q)` is replaced by its tangent lines: slope
//! `-2(1-q)nu` below the diagonal and the reciprocal slope above it. Below
//! the diagonal that line cuts either the bottom edge (the recovery region in
//! `[q, 1] × [0, q]` is a triangle) or the right edge (a trapezoid).

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EpidemicParams, PhasePoint};
use crate::output::fmt_num;

/// Half-width of the band around `nu = q / (2(1-q)^2)` reported as
/// [`RegionCase::Boundary`].
pub const BOUNDARY_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionCase {
    Triangle,
    Trapezoid,
    Boundary,
}

impl RegionCase {
    pub fn name(self) -> &'static str {
        match self {
            RegionCase::Triangle => "triangle",
            RegionCase::Trapezoid => "trapezoid",
            RegionCase::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSeparatrix {
    pub slope_sub: f64,
    pub slope_super: f64,
    pub anchor: PhasePoint,
}

impl LinearSeparatrix {
    pub fn new(params: &EpidemicParams) -> Result<Self> {
        params.require_symmetric("linear separatrix")?;
        let (nu, q) = (params.nu(), params.q());
        let slope_sub = -2.0 * (1.0 - q) * nu;
        Ok(Self {
            slope_sub,
            slope_super: 1.0 / slope_sub,
            anchor: PhasePoint::new(q, q),
        })
    }

    /// `x_b` on the sub-diagonal half (`x_a >= q`).
    pub fn sub_at(&self, x_a: f64) -> f64 {
        self.slope_sub * (x_a - self.anchor.x_a) + self.anchor.x_b
    }

    /// `x_b` on the super-diagonal half (`x_a <= q`).
    pub fn super_at(&self, x_a: f64) -> f64 {
        self.slope_super * (x_a - self.anchor.x_a) + self.anchor.x_b
    }

    /// Perpendicular distance from `p` to the sub-diagonal line.
    pub fn distance_to_sub(&self, p: PhasePoint) -> f64 {
        (p.x_b - self.sub_at(p.x_a)).abs() / (1.0 + self.slope_sub * self.slope_sub).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionGeometry {
    pub case: RegionCase,
    pub p_minus: PhasePoint,
    pub area: f64,
    pub ratio: f64,
}

/// `q / (2(1-q)^2)`: the contagiousness at which the linearized separatrix
/// hits the corner `(1, 0)`.
pub fn nu_threshold(q: f64) -> f64 {
    q / (2.0 * (1.0 - q) * (1.0 - q))
}

/// `(1 + 4nu - sqrt(8nu + 1)) / (4nu)`: the same boundary solved for `q`.
pub fn q_threshold(nu: f64) -> f64 {
    (1.0 + 4.0 * nu - (8.0 * nu + 1.0).sqrt()) / (4.0 * nu)
}

/// Compares `nu` against [`nu_threshold`].
pub fn case_condition(params: &EpidemicParams) -> Result<RegionCase> {
    params.require_symmetric("linear separatrix")?;
    let (nu, q) = (params.nu(), params.q());
    let gap = nu - nu_threshold(q);
    let case = if gap.abs() <= BOUNDARY_BAND {
        RegionCase::Boundary
    } else if gap > 0.0 {
        RegionCase::Triangle
    } else {
        RegionCase::Trapezoid
    };
    debug_assert!(
        case == RegionCase::Boundary
            || (q - q_threshold(nu)).abs() <= 1e-9
            || case == case_condition_q_form(params)?,
        "nu- and q-forms of the case condition disagree at nu = {nu}, q = {q}"
    );
    Ok(case)
}

/// The case condition evaluated through [`q_threshold`] instead.
pub fn case_condition_q_form(params: &EpidemicParams) -> Result<RegionCase> {
    params.require_symmetric("linear separatrix")?;
    let (nu, q) = (params.nu(), params.q());
    let gap = q - q_threshold(nu);
    Ok(if gap == 0.0 {
        RegionCase::Boundary
    } else if gap > 0.0 {
        RegionCase::Trapezoid
    } else {
        RegionCase::Triangle
    })
}

fn p_minus_for(case: RegionCase, nu: f64, q: f64) -> PhasePoint {
    match case {
        RegionCase::Triangle | RegionCase::Boundary => {
            PhasePoint::new(q / (2.0 * nu * (1.0 - q)) + q, 0.0)
        }
        RegionCase::Trapezoid => PhasePoint::new(1.0, -2.0 * nu * (1.0 - q) * (1.0 - q) + q),
    }
}

/// Where the sub-diagonal tangent line leaves the unit square.
pub fn p_minus(params: &EpidemicParams) -> Result<PhasePoint> {
    let case = case_condition(params)?;
    Ok(p_minus_for(case, params.nu(), params.q()))
}

/// Mirror image of [`p_minus`] above the diagonal.
pub fn p_plus(params: &EpidemicParams) -> Result<PhasePoint> {
    p_minus(params).map(PhasePoint::swapped)
}

fn area_for(case: RegionCase, nu: f64, q: f64) -> f64 {
    match case {
        RegionCase::Triangle | RegionCase::Boundary => q * q / (4.0 * nu * (1.0 - q)),
        RegionCase::Trapezoid => (1.0 - q) * (q - nu * (1.0 - q) * (1.0 - q)),
    }
}

/// Area under the sub-diagonal tangent line inside `[q, 1] × [0, q]`.
pub fn region_area(params: &EpidemicParams) -> Result<f64> {
    let case = case_condition(params)?;
    Ok(area_for(case, params.nu(), params.q()))
}

/// [`region_area`] as a fraction of the rectangle `[q, 1] × [0, q]`.
pub fn ratio_tilde(params: &EpidemicParams) -> Result<f64> {
    let q = params.q();
    let r = region_area(params)? / (q * (1.0 - q));
    Ok(if (-1e-15..0.0).contains(&r) { 0.0 } else { r })
}

/// Partial derivatives of [`ratio_tilde`] with respect to `q` and `nu`.
pub fn ratio_tilde_derivatives(params: &EpidemicParams) -> Result<(f64, f64)> {
    let (nu, q) = (params.nu(), params.q());
    match case_condition(params)? {
        RegionCase::Boundary => Err(Error::AtBoundary),
        RegionCase::Triangle => {
            let om = 1.0 - q;
            Ok((
                (1.0 + q) / (4.0 * nu * om * om * om),
                -q / (4.0 * om * om * nu * nu),
            ))
        }
        RegionCase::Trapezoid => Ok(((1.0 / (q * q) - 1.0) * nu, -(1.0 - q) * (1.0 - q) / q)),
    }
}

/// `d/dq` of [`region_area`].
pub fn region_area_dq(params: &EpidemicParams) -> Result<f64> {
    let (nu, q) = (params.nu(), params.q());
    match case_condition(params)? {
        RegionCase::Boundary => Err(Error::AtBoundary),
        RegionCase::Triangle => Ok(q * (2.0 - q) / (4.0 * nu * (1.0 - q) * (1.0 - q))),
        RegionCase::Trapezoid => Ok(1.0 - 2.0 * q + 3.0 * nu * (1.0 - q) * (1.0 - q)),
    }
}

/// Whether the trapezoid area grows with `q` at these parameters: the sign
/// of `1 - 2q + 3nu(1-q)^2`, i.e. `nu > (2q - 1) / (3(1-q)^2)`. Always true
/// for `q <= 1/2`. `None` outside the trapezoid case.
#[allow(non_snake_case)]
pub fn dAQ_dq_positive(params: &EpidemicParams) -> Result<Option<bool>> {
    let (nu, q) = (params.nu(), params.q());
    Ok(match case_condition(params)? {
        RegionCase::Trapezoid => Some(nu > (2.0 * q - 1.0) / (3.0 * (1.0 - q) * (1.0 - q))),
        _ => None,
    })
}

/// Approximate area of the whole basin of `(0, 0)`: `2 * region_area + q^2`.
pub fn area_report_tilde(params: &EpidemicParams) -> Result<f64> {
    let q = params.q();
    Ok(2.0 * region_area(params)? + q * q)
}

pub fn region_geometry(params: &EpidemicParams) -> Result<RegionGeometry> {
    let case = case_condition(params)?;
    Ok(RegionGeometry {
        case,
        p_minus: p_minus(params)?,
        area: region_area(params)?,
        ratio: ratio_tilde(params)?,
    })
}

/// Writes the linearized separatrix as the polyline `P+ -> (q, q) -> P-`.
pub fn write_linear_csv<W: Write>(params: &EpidemicParams, mut w: W) -> io::Result<()> {
    let to_io = |e: Error| io::Error::new(io::ErrorKind::InvalidInput, e.to_string());
    let plus = p_plus(params).map_err(to_io)?;
    let minus = p_minus(params).map_err(to_io)?;
    let q = params.q();
    writeln!(w, "x_a,x_b")?;
    for p in [plus, PhasePoint::new(q, q), minus] {
        writeln!(w, "{},{}", fmt_num(p.x_a), fmt_num(p.x_b))?;
    }
    Ok(())
}
