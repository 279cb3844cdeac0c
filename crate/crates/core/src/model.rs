//! Vector fields of the single-location and two-location epidemic systems.
//!
//! Every field here is a pure evaluation on the whole plane. Restricting
//! states to the unit square is the caller's job; the integrator relies on
//! being able to evaluate slightly outside it.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contagiousness (`nu`) and quarantine (`q`) parameters of both locations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    pub nu_a: f64,
    pub nu_b: f64,
    pub q_a: f64,
    pub q_b: f64,
}

impl EpidemicParams {
    pub fn new(nu_a: f64, nu_b: f64, q_a: f64, q_b: f64) -> Result<Self> {
        for (name, value) in [("nu_a", nu_a), ("nu_b", nu_b), ("q_a", q_a), ("q_b", q_b)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::ParamOutOfRange { name, value });
            }
        }
        Ok(Self {
            nu_a,
            nu_b,
            q_a,
            q_b,
        })
    }

    /// Identical locations.
    pub fn symmetric_pair(nu: f64, q: f64) -> Result<Self> {
        Self::new(nu, nu, q, q)
    }

    pub fn symmetric(&self) -> bool {
        self.nu_a == self.nu_b && self.q_a == self.q_b
    }

    /// Shared `nu` of a symmetric instance (location A's value otherwise).
    pub fn nu(&self) -> f64 {
        self.nu_a
    }

    /// Shared `q` of a symmetric instance (location A's value otherwise).
    pub fn q(&self) -> f64 {
        self.q_a
    }

    pub(crate) fn require_symmetric(&self, regime: &'static str) -> Result<()> {
        if self.symmetric() {
            Ok(())
        } else {
            Err(Error::RegimeParamMismatch { regime })
        }
    }
}

/// A state `(x_a, x_b)` of infected fractions, or a shock vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x_a: f64,
    pub x_b: f64,
}

impl PhasePoint {
    pub const fn new(x_a: f64, x_b: f64) -> Self {
        Self { x_a, x_b }
    }

    pub fn swapped(self) -> Self {
        Self::new(self.x_b, self.x_a)
    }

    pub fn distance(self, other: PhasePoint) -> f64 {
        (self.x_a - other.x_a).hypot(self.x_b - other.x_b)
    }

    pub fn in_unit_square(self) -> bool {
        (0.0..=1.0).contains(&self.x_a) && (0.0..=1.0).contains(&self.x_b)
    }

    pub fn is_finite(self) -> bool {
        self.x_a.is_finite() && self.x_b.is_finite()
    }
}

impl From<[f64; 2]> for PhasePoint {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<PhasePoint> for [f64; 2] {
    fn from(p: PhasePoint) -> Self {
        [p.x_a, p.x_b]
    }
}

pub type PriceFn = Arc<dyn Fn(PhasePoint) -> f64 + Send + Sync>;
pub type CostCdf = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Gross trading utilities of each location and the distributions of the
/// agents' export costs.
#[derive(Clone)]
pub struct PriceCostSpec {
    pub price_a: PriceFn,
    pub price_b: PriceFn,
    pub cost_cdf_a: CostCdf,
    pub cost_cdf_b: CostCdf,
}

impl PriceCostSpec {
    /// Utilities `1 - x` of the own location and costs uniform on `[0, 1]`.
    pub fn linear_uniform() -> Self {
        Self {
            price_a: Arc::new(|p: PhasePoint| 1.0 - p.x_a),
            price_b: Arc::new(|p: PhasePoint| 1.0 - p.x_b),
            cost_cdf_a: Arc::new(uniform_cost_cdf),
            cost_cdf_b: Arc::new(uniform_cost_cdf),
        }
    }
}

impl fmt::Debug for PriceCostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PriceCostSpec { .. }")
    }
}

/// CDF of a cost uniformly distributed on `[0, 1]`.
pub fn uniform_cost_cdf(c: f64) -> f64 {
    c.clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub enum Regime {
    /// The cubic acting on `x_a` alone; `x_b` is passive.
    SingleLocation,
    GeneralTwoLocation(PriceCostSpec),
    /// Identical locations, linear utilities and uniform costs.
    LinearGlobalized,
    /// No trade: two uncoupled cubics.
    Autarky,
    /// Smooth extension of the globalized field off its diagonal piece.
    PieceDiagonal,
    /// Smooth extension of the globalized field below the diagonal (`x_a > x_b`).
    PieceSub,
    /// Smooth extension of the globalized field above the diagonal (`x_a < x_b`).
    PieceSuper,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::SingleLocation => "single",
            Regime::GeneralTwoLocation(_) => "general",
            Regime::LinearGlobalized => "globalized",
            Regime::Autarky => "autarky",
            Regime::PieceDiagonal => "piece-diagonal",
            Regime::PieceSub => "piece-sub",
            Regime::PieceSuper => "piece-super",
        }
    }

    fn needs_symmetric(&self) -> bool {
        matches!(
            self,
            Regime::LinearGlobalized
                | Regime::PieceDiagonal
                | Regime::PieceSub
                | Regime::PieceSuper
        )
    }
}

/// Which smooth piece of the globalized field governs a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Diagonal,
    Sub,
    Super,
}

impl Side {
    pub fn of(p: PhasePoint) -> Side {
        if p.x_a > p.x_b {
            Side::Sub
        } else if p.x_a < p.x_b {
            Side::Super
        } else {
            Side::Diagonal
        }
    }
}

/// `nu * x * (1 - x) * (x - q)`.
pub fn single_location_rhs(x: f64, nu: f64, q: f64) -> f64 {
    nu * x * (1.0 - x) * (x - q)
}

/// Fractions of each location's agents willing to export.
pub fn export_fractions(p: PhasePoint, spec: &PriceCostSpec) -> (f64, f64) {
    let pa = (spec.price_a)(p);
    let pb = (spec.price_b)(p);
    ((spec.cost_cdf_a)(pb - pa), (spec.cost_cdf_b)(pa - pb))
}

#[inline]
fn cubic(x: f64, q: f64) -> f64 {
    x * (1.0 - x) * (x - q)
}

#[inline]
fn mixing(a: f64, b: f64) -> f64 {
    a + b - 2.0 * a * b
}

/// Globalized field below the diagonal, where only A exports.
#[inline]
pub(crate) fn piece_sub(a: f64, b: f64, nu: f64, q: f64) -> [f64; 2] {
    let f = a - b;
    let stay = 1.0 - f;
    [
        nu * stay * (cubic(a, q) * stay) - a * f,
        nu * (cubic(b, q) + mixing(a, b) * f),
    ]
}

/// Globalized field above the diagonal, where only B exports.
#[inline]
pub(crate) fn piece_super(a: f64, b: f64, nu: f64, q: f64) -> [f64; 2] {
    let f = b - a;
    let stay = 1.0 - f;
    [
        nu * (cubic(a, q) + mixing(b, a) * f),
        nu * stay * (cubic(b, q) * stay) - b * f,
    ]
}

#[inline]
pub(crate) fn piece_diagonal(a: f64, b: f64, nu: f64, q: f64) -> [f64; 2] {
    [single_location_rhs(a, nu, q), single_location_rhs(b, nu, q)]
}

/// A validated `(params, regime)` pair ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct VectorField {
    params: EpidemicParams,
    regime: Regime,
}

impl VectorField {
    pub fn new(params: EpidemicParams, regime: Regime) -> Result<Self> {
        if regime.needs_symmetric() {
            params.require_symmetric(regime.name())?;
        }
        Ok(Self { params, regime })
    }

    pub fn params(&self) -> &EpidemicParams {
        &self.params
    }

    pub fn regime(&self) -> &Regime {
        &self.regime
    }

    pub fn eval(&self, p: PhasePoint) -> [f64; 2] {
        let (a, b) = (p.x_a, p.x_b);
        let EpidemicParams {
            nu_a,
            nu_b,
            q_a,
            q_b,
        } = self.params;
        match &self.regime {
            Regime::SingleLocation => [single_location_rhs(a, nu_a, q_a), 0.0],
            Regime::GeneralTwoLocation(spec) => general_field(p, &self.params, spec),
            Regime::LinearGlobalized => self.eval_side(Side::of(p), p),
            Regime::Autarky => [
                single_location_rhs(a, nu_a, q_a),
                single_location_rhs(b, nu_b, q_b),
            ],
            Regime::PieceDiagonal => piece_diagonal(a, b, nu_a, q_a),
            Regime::PieceSub => piece_sub(a, b, nu_a, q_a),
            Regime::PieceSuper => piece_super(a, b, nu_a, q_a),
        }
    }

    /// Evaluates one smooth piece of the globalized field regardless of
    /// where `p` lies. Only meaningful for the globalized family.
    pub(crate) fn eval_side(&self, side: Side, p: PhasePoint) -> [f64; 2] {
        let (nu, q) = (self.params.nu_a, self.params.q_a);
        match side {
            Side::Diagonal => piece_diagonal(p.x_a, p.x_b, nu, q),
            Side::Sub => piece_sub(p.x_a, p.x_b, nu, q),
            Side::Super => piece_super(p.x_a, p.x_b, nu, q),
        }
    }

    /// Signed function whose zero set is where the field switches pieces,
    /// if the regime has one.
    pub(crate) fn switching(&self, p: PhasePoint) -> Option<f64> {
        match &self.regime {
            Regime::LinearGlobalized => Some(p.x_a - p.x_b),
            Regime::GeneralTwoLocation(spec) => Some((spec.price_b)(p) - (spec.price_a)(p)),
            _ => None,
        }
    }
}

fn general_field(p: PhasePoint, params: &EpidemicParams, spec: &PriceCostSpec) -> [f64; 2] {
    let (a, b) = (p.x_a, p.x_b);
    let (fa, fb) = export_fractions(p, spec);
    let m = mixing(a, b);
    [
        params.nu_a * (1.0 - fa) * (cubic(a, params.q_a) * (1.0 - fa) + m * fb) - a * fa,
        params.nu_b * (1.0 - fb) * (cubic(b, params.q_b) * (1.0 - fb) + m * fa) - b * fb,
    ]
}

/// Time derivative of the state under `regime`.
pub fn field(p: PhasePoint, params: &EpidemicParams, regime: &Regime) -> Result<(f64, f64)> {
    let v = VectorField::new(*params, regime.clone())?.eval(p);
    Ok((v[0], v[1]))
}
