//! Fixed points, Jacobians and their 2×2 eigen-structure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EpidemicParams, PhasePoint, Regime, VectorField};

pub type Matrix2 = [[f64; 2]; 2];

pub const DEFAULT_SEED_GRID: usize = 11;
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
pub const DEDUP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityClass {
    StableNode,
    Saddle,
    Source,
}

impl StabilityClass {
    pub fn from_eigenvalues(values: &[f64]) -> Self {
        let negative = values.iter().filter(|&&v| v < 0.0).count();
        let positive = values.iter().filter(|&&v| v > 0.0).count();
        if negative == values.len() {
            StabilityClass::StableNode
        } else if negative == 0 && positive > 0 {
            StabilityClass::Source
        } else {
            StabilityClass::Saddle
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumInfo {
    pub location: PhasePoint,
    /// Descending. One entry for the single-location system, two otherwise.
    pub eigenvalues: Vec<f64>,
    /// Unit vectors paired with `eigenvalues`, second component `>= 0`.
    pub eigenvectors: Vec<[f64; 2]>,
    pub class: StabilityClass,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EquilibriumSet {
    pub equilibria: Vec<EquilibriumInfo>,
    /// Seeds from which Newton did not converge. Not fatal.
    pub unconverged_seeds: Vec<PhasePoint>,
}

impl EquilibriumSet {
    pub fn stable_nodes(&self) -> impl Iterator<Item = &EquilibriumInfo> {
        self.equilibria
            .iter()
            .filter(|e| e.class == StabilityClass::StableNode)
    }

    pub fn find(&self, p: PhasePoint, tol: f64) -> Option<&EquilibriumInfo> {
        self.equilibria
            .iter()
            .find(|e| e.location.distance(p) <= tol)
    }
}

/// Polynomial pieces with an analytic Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothPiece {
    Sub,
    Super,
    /// Also the diagonal piece of the globalized field.
    Autarky,
}

/// Sides of the saddle's stable manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SaddleSide {
    /// Below the diagonal, `x_a > x_b`.
    Sub,
    /// Above the diagonal, `x_a < x_b`.
    Super,
}

/// Derivative of `nu * x * (1 - x) * (x - q)`.
pub fn cubic_derivative(x: f64, nu: f64, q: f64) -> f64 {
    nu * ((2.0 - 3.0 * x) * x + q * (2.0 * x - 1.0))
}

fn cubic(x: f64, q: f64) -> f64 {
    x * (1.0 - x) * (x - q)
}

fn cubic_slope(x: f64, q: f64) -> f64 {
    (2.0 - 3.0 * x) * x + q * (2.0 * x - 1.0)
}

fn sub_jacobian(a: f64, b: f64, nu: f64, q: f64) -> Matrix2 {
    let f = a - b;
    let stay = 1.0 - f;
    let g = cubic(a, q);
    let mix = a + b - 2.0 * a * b;
    [
        [
            nu * stay * (stay * cubic_slope(a, q) - 2.0 * g) - (2.0 * a - b),
            2.0 * nu * stay * g + a,
        ],
        [
            nu * ((1.0 - 2.0 * b) * f + mix),
            nu * (cubic_slope(b, q) + (1.0 - 2.0 * a) * f - mix),
        ],
    ]
}

/// Analytic Jacobian of a smooth piece at `at`.
pub fn jacobian_closed_form(
    at: PhasePoint,
    params: &EpidemicParams,
    piece: SmoothPiece,
) -> Matrix2 {
    let (a, b) = (at.x_a, at.x_b);
    match piece {
        SmoothPiece::Sub => sub_jacobian(a, b, params.nu_a, params.q_a),
        SmoothPiece::Super => {
            // The super piece is the sub piece with both coordinates swapped.
            let m = sub_jacobian(b, a, params.nu_a, params.q_a);
            [[m[1][1], m[1][0]], [m[0][1], m[0][0]]]
        }
        SmoothPiece::Autarky => [
            [cubic_derivative(a, params.nu_a, params.q_a), 0.0],
            [0.0, cubic_derivative(b, params.nu_b, params.q_b)],
        ],
    }
}

/// Central-difference Jacobian of any field.
pub fn jacobian_fd(field: &VectorField, at: PhasePoint, step: f64) -> Matrix2 {
    let mut j = [[0.0; 2]; 2];
    for col in 0..2 {
        let mut plus: [f64; 2] = at.into();
        let mut minus = plus;
        plus[col] += step;
        minus[col] -= step;
        let (fp, fm) = (field.eval(plus.into()), field.eval(minus.into()));
        for row in 0..2 {
            j[row][col] = (fp[row] - fm[row]) / (2.0 * step);
        }
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    /// Descending.
    pub values: [f64; 2],
    pub vectors: [[f64; 2]; 2],
}

fn orient(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    let mut u = [v[0] / n, v[1] / n];
    if u[1] < 0.0 || (u[1] == 0.0 && u[0] < 0.0) {
        u = [-u[0], -u[1]];
    }
    u
}

fn eigenvector(m: &Matrix2, lambda: f64, fallback: [f64; 2]) -> [f64; 2] {
    let r1 = [m[0][0] - lambda, m[0][1]];
    let r2 = [m[1][0], m[1][1] - lambda];
    let n1 = r1[0].hypot(r1[1]);
    let n2 = r2[0].hypot(r2[1]);
    let scale = m
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
        .max(lambda.abs());
    if n1.max(n2) <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return fallback;
    }
    if n1 >= n2 {
        orient([r1[1], -r1[0]])
    } else {
        orient([r2[1], -r2[0]])
    }
}

/// Closed-form eigen-decomposition of a real 2×2 matrix with real spectrum.
pub fn eigen_2x2(m: &Matrix2) -> Result<Eigen2> {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = 0.5 * tr;
    // (a - d)^2 / 4 + bc avoids the cancellation in tr^2 / 4 - det.
    let disc = 0.25 * (m[0][0] - m[1][1]).powi(2) + m[0][1] * m[1][0];
    if disc < 0.0 {
        return Err(Error::ComplexEigenvalues(disc));
    }
    let root = disc.sqrt();
    let big = if half >= 0.0 {
        half + root
    } else {
        half - root
    };
    let other = if big != 0.0 { det / big } else { 0.0 };
    let (l1, l2) = if big >= other {
        (big, other)
    } else {
        (other, big)
    };
    let v1 = eigenvector(m, l1, [1.0, 0.0]);
    let v2 = eigenvector(m, l2, [0.0, 1.0]);
    Ok(Eigen2 {
        values: [l1, l2],
        vectors: [v1, v2],
    })
}

/// Unit stable eigendirection of the saddle `(q, q)` for one side's piece.
pub fn saddle_stable_direction(params: &EpidemicParams, side: SaddleSide) -> Result<[f64; 2]> {
    params.require_symmetric("saddle direction")?;
    let (nu, q) = (params.nu(), params.q());
    let v = match side {
        SaddleSide::Sub => [1.0 / (-2.0 * (1.0 - q) * nu), 1.0],
        SaddleSide::Super => [-2.0 * (1.0 - q) * nu, 1.0],
    };
    Ok(orient(v))
}

/// The saddle's unstable eigendirection, shared by both pieces.
pub fn saddle_unstable_direction() -> [f64; 2] {
    [
        std::f64::consts::FRAC_1_SQRT_2,
        std::f64::consts::FRAC_1_SQRT_2,
    ]
}

enum Jac<'a> {
    Piece(SmoothPiece),
    FiniteDifference(&'a VectorField),
}

impl Jac<'_> {
    fn at(&self, p: PhasePoint, params: &EpidemicParams) -> Matrix2 {
        match self {
            Jac::Piece(piece) => jacobian_closed_form(p, params, *piece),
            Jac::FiniteDifference(field) => jacobian_fd(field, p, 1e-7),
        }
    }
}

fn newton_2d(field: &VectorField, jac: &Jac<'_>, seed: PhasePoint) -> Option<PhasePoint> {
    let params = field.params();
    let mut x = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let f = field.eval(x);
        let j = jac.at(x, params);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dy = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        x = PhasePoint::new(x.x_a - dx, x.x_b - dy);
        if !x.is_finite() || x.x_a.abs() > 1e6 || x.x_b.abs() > 1e6 {
            return None;
        }
        if dx.abs().max(dy.abs()) <= NEWTON_TOL * (1.0 + x.x_a.abs().max(x.x_b.abs())) {
            return Some(x);
        }
    }
    None
}

fn newton_1d(nu: f64, q: f64, seed: f64) -> Option<f64> {
    let mut x = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let d = cubic_derivative(x, nu, q);
        if d == 0.0 {
            return None;
        }
        let dx = nu * cubic(x, q) / d;
        x -= dx;
        if !x.is_finite() || x.abs() > 1e6 {
            return None;
        }
        if dx.abs() <= NEWTON_TOL * (1.0 + x.abs()) {
            return Some(x);
        }
    }
    None
}

/// Reports coordinates within rounding of a corner or edge of the square
/// exactly.
fn tidy(x: f64) -> f64 {
    for r in [0.0, 1.0] {
        if (x - r).abs() <= 1e-14 {
            return r;
        }
    }
    x
}

fn in_square(p: PhasePoint) -> bool {
    let tol = 1e-9;
    p.x_a >= -tol && p.x_a <= 1.0 + tol && p.x_b >= -tol && p.x_b <= 1.0 + tol
}

fn seeds(n: usize) -> Vec<PhasePoint> {
    let n = n.max(2);
    let step = 1.0 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            out.push(PhasePoint::new(i as f64 * step, j as f64 * step));
        }
    }
    out
}

fn push_unique(
    found: &mut Vec<(PhasePoint, Option<SmoothPiece>)>,
    p: PhasePoint,
    piece: Option<SmoothPiece>,
) {
    if !found.iter().any(|(q, _)| q.distance(p) <= DEDUP_TOL) {
        found.push((p, piece));
    }
}

fn describe(location: PhasePoint, j: &Matrix2) -> Result<EquilibriumInfo> {
    let eig = eigen_2x2(j)?;
    Ok(EquilibriumInfo {
        location,
        eigenvalues: eig.values.to_vec(),
        eigenvectors: eig.vectors.to_vec(),
        class: StabilityClass::from_eigenvalues(&eig.values),
    })
}

/// Fixed points of `regime` inside the unit square, found by Newton from an
/// `n × n` seed grid and classified by their Jacobian.
pub fn find_equilibria(
    params: &EpidemicParams,
    regime: &Regime,
    seed_grid_n: usize,
) -> Result<EquilibriumSet> {
    let field = VectorField::new(*params, regime.clone())?;
    let mut set = EquilibriumSet::default();

    if let Regime::SingleLocation = regime {
        let (nu, q) = (params.nu_a, params.q_a);
        let n = seed_grid_n.max(2);
        let mut roots: Vec<f64> = Vec::new();
        for k in 0..n {
            let seed = k as f64 / (n - 1) as f64;
            match newton_1d(nu, q, seed) {
                Some(r) if (-1e-9..=1.0 + 1e-9).contains(&r) => {
                    if !roots.iter().any(|x| (x - r).abs() <= DEDUP_TOL) {
                        roots.push(tidy(r));
                    }
                }
                Some(_) => {}
                None => set.unconverged_seeds.push(PhasePoint::new(seed, 0.0)),
            }
        }
        roots.sort_by(f64::total_cmp);
        set.equilibria = roots
            .into_iter()
            .map(|r| {
                let slope = cubic_derivative(r, nu, q);
                EquilibriumInfo {
                    location: PhasePoint::new(r, 0.0),
                    eigenvalues: vec![slope],
                    eigenvectors: vec![[1.0, 0.0]],
                    class: StabilityClass::from_eigenvalues(&[slope]),
                }
            })
            .collect();
        return Ok(set);
    }

    let mut found: Vec<(PhasePoint, Option<SmoothPiece>)> = Vec::new();
    let mut solve = |piece_field: &VectorField,
                     jac: Jac<'_>,
                     tag: Option<SmoothPiece>,
                     keep: &dyn Fn(PhasePoint) -> bool,
                     seed_ok: &dyn Fn(PhasePoint) -> bool| {
        for seed in seeds(seed_grid_n).into_iter().filter(|s| seed_ok(*s)) {
            match newton_2d(piece_field, &jac, seed) {
                Some(r) if in_square(r) && keep(r) => {
                    push_unique(&mut found, PhasePoint::new(tidy(r.x_a), tidy(r.x_b)), tag)
                }
                Some(_) => {}
                None => set.unconverged_seeds.push(seed),
            }
        }
    };

    let any = |_: PhasePoint| true;
    match regime {
        Regime::LinearGlobalized => {
            let sub = VectorField::new(*params, Regime::PieceSub)?;
            let sup = VectorField::new(*params, Regime::PieceSuper)?;
            let tol = 1e-9;
            let below = |p: PhasePoint| p.x_a >= p.x_b - tol;
            let above = |p: PhasePoint| p.x_a <= p.x_b + tol;
            solve(
                &sub,
                Jac::Piece(SmoothPiece::Sub),
                Some(SmoothPiece::Sub),
                &below,
                &below,
            );
            solve(
                &sup,
                Jac::Piece(SmoothPiece::Super),
                Some(SmoothPiece::Super),
                &above,
                &above,
            );
        }
        Regime::Autarky | Regime::PieceDiagonal => solve(
            &field,
            Jac::Piece(SmoothPiece::Autarky),
            Some(SmoothPiece::Autarky),
            &any,
            &any,
        ),
        Regime::PieceSub => solve(
            &field,
            Jac::Piece(SmoothPiece::Sub),
            Some(SmoothPiece::Sub),
            &any,
            &any,
        ),
        Regime::PieceSuper => solve(
            &field,
            Jac::Piece(SmoothPiece::Super),
            Some(SmoothPiece::Super),
            &any,
            &any,
        ),
        Regime::GeneralTwoLocation(_) => {
            solve(&field, Jac::FiniteDifference(&field), None, &any, &any)
        }
        Regime::SingleLocation => unreachable!("handled above"),
    }

    found.sort_by(|(p, _), (q, _)| p.x_a.total_cmp(&q.x_a).then(p.x_b.total_cmp(&q.x_b)));
    for (p, piece) in found {
        let j = match piece {
            // Points on the diagonal are classified with the sub piece.
            Some(SmoothPiece::Super) if p.x_a >= p.x_b => {
                jacobian_closed_form(p, params, SmoothPiece::Sub)
            }
            Some(piece) => jacobian_closed_form(p, params, piece),
            None => jacobian_fd(&field, p, 1e-7),
        };
        set.equilibria.push(describe(p, &j)?);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(nu: f64, q: f64) -> EpidemicParams {
        EpidemicParams::symmetric_pair(nu, q).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn globalized_census() {
        let set =
            find_equilibria(&sym(0.7, 0.4), &Regime::LinearGlobalized, DEFAULT_SEED_GRID).unwrap();
        let got: Vec<_> = set
            .equilibria
            .iter()
            .map(|e| (e.location, e.class))
            .collect();
        assert_eq!(got.len(), 3);
        assert_eq!(
            got[0],
            (PhasePoint::new(0.0, 0.0), StabilityClass::StableNode)
        );
        assert!(got[1].0.distance(PhasePoint::new(0.4, 0.4)) < 1e-12);
        assert_eq!(got[1].1, StabilityClass::Saddle);
        assert_eq!(
            got[2],
            (PhasePoint::new(1.0, 1.0), StabilityClass::StableNode)
        );
    }

    #[test]
    fn autarky_census() {
        let q = 0.4;
        let set = find_equilibria(&sym(0.7, q), &Regime::Autarky, DEFAULT_SEED_GRID).unwrap();
        assert_eq!(set.equilibria.len(), 9);
        let class_at = |a: f64, b: f64| set.find(PhasePoint::new(a, b), 1e-9).map(|e| e.class);
        use StabilityClass::*;
        for (a, b, c) in [
            (0.0, 0.0, StableNode),
            (1.0, 1.0, StableNode),
            (0.0, 1.0, StableNode),
            (1.0, 0.0, StableNode),
            (0.0, q, Saddle),
            (q, 0.0, Saddle),
            (1.0, q, Saddle),
            (q, 1.0, Saddle),
            (q, q, Source),
        ] {
            assert_eq!(class_at(a, b), Some(c), "({a}, {b})");
        }
    }

    #[test]
    fn single_location_roots() {
        let set =
            find_equilibria(&sym(0.8, 0.2), &Regime::SingleLocation, DEFAULT_SEED_GRID).unwrap();
        let roots: Vec<_> = set
            .equilibria
            .iter()
            .map(|e| (e.location.x_a, e.class))
            .collect();
        assert_eq!(roots.len(), 3);
        assert_eq!(roots[0], (0.0, StabilityClass::StableNode));
        assert!(close(roots[1].0, 0.2, 1e-12));
        assert_eq!(roots[1].1, StabilityClass::Source);
        assert_eq!(roots[2], (1.0, StabilityClass::StableNode));
    }

    #[test]
    fn saddle_eigenvalues_from_closed_form() {
        let (nu, q) = (0.7, 0.4);
        let j = jacobian_closed_form(PhasePoint::new(q, q), &sym(nu, q), SmoothPiece::Sub);
        // Entries as printed for the sub piece at the saddle.
        assert!(close(j[0][0], -q * (1.0 - nu * (1.0 - q)), 1e-15));
        assert!(close(j[0][1], q, 1e-15));
        assert!(close(j[1][0], 2.0 * (1.0 - q) * q * nu, 1e-15));
        assert!(close(j[1][1], -(1.0 - q) * q * nu, 1e-15));
        let e = eigen_2x2(&j).unwrap();
        assert!(close(e.values[0], 0.168, 1e-12));
        assert!(close(e.values[1], -0.568, 1e-12));
    }

    #[test]
    fn corner_eigenvalues() {
        let (nu, q) = (0.7, 0.4);
        let e0 = eigen_2x2(&jacobian_closed_form(
            PhasePoint::new(0.0, 0.0),
            &sym(nu, q),
            SmoothPiece::Sub,
        ))
        .unwrap();
        assert!(close(e0.values[0], -q * nu, 1e-15) && close(e0.values[1], -q * nu, 1e-15));
        let e1 = eigen_2x2(&jacobian_closed_form(
            PhasePoint::new(1.0, 1.0),
            &sym(nu, q),
            SmoothPiece::Sub,
        ))
        .unwrap();
        assert!(close(e1.values[0], -0.42, 1e-12));
        assert!(close(e1.values[1], -1.42, 1e-12));
    }

    #[test]
    fn saddle_directions() {
        let p = sym(0.7, 0.4);
        let sub = saddle_stable_direction(&p, SaddleSide::Sub).unwrap();
        assert!(close(sub[0] / sub[1], -1.0 / 0.84, 1e-12));
        assert!(close(sub[0].hypot(sub[1]), 1.0, 1e-15));
        let sup = saddle_stable_direction(&p, SaddleSide::Super).unwrap();
        assert!(close(sup[0] / sup[1], -0.84, 1e-12));
        let e = eigen_2x2(&jacobian_closed_form(
            PhasePoint::new(0.4, 0.4),
            &p,
            SmoothPiece::Super,
        ))
        .unwrap();
        assert!(close(e.vectors[1][0], sup[0], 1e-12) && close(e.vectors[1][1], sup[1], 1e-12));
        let u = saddle_unstable_direction();
        assert!(close(e.vectors[0][0], u[0], 1e-12) && close(e.vectors[0][1], u[1], 1e-12));
    }

    #[test]
    fn complex_spectrum_is_an_error() {
        assert!(matches!(
            eigen_2x2(&[[0.0, -1.0], [1.0, 0.0]]),
            Err(Error::ComplexEigenvalues(_))
        ));
    }

    #[test]
    fn scalar_matrix_gets_basis_vectors() {
        let e = eigen_2x2(&[[-0.3, 0.0], [0.0, -0.3]]).unwrap();
        assert_eq!(e.vectors, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn asymmetric_params_rejected_for_directions() {
        let p = EpidemicParams::new(0.5, 0.6, 0.4, 0.4).unwrap();
        assert!(saddle_stable_direction(&p, SaddleSide::Sub).is_err());
        assert!(find_equilibria(&p, &Regime::LinearGlobalized, 5).is_err());
    }
}
