//! Adaptive Dormand–Prince 5(4) integration of the planar fields.
//!
//! Steps of a piecewise field are never allowed to straddle its switching
//! curve: a step that would cross it is cut at the crossing, so every
//! accepted step sees a single polynomial piece. For the globalized field the
//! switching curve is the (invariant) diagonal and the state is snapped onto
//! it once reached.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EpidemicParams, PhasePoint, Regime, Side, VectorField};
use crate::output::fmt_num;

/// Smallest step the controller may take before giving up.
pub const MIN_STEP: f64 = 1e-14;
/// Time resolution of event bisections.
pub const EVENT_TIME_TOL: f64 = 1e-12;
/// Coordinate resolution of boundary-crossing refinement.
pub const CROSSING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Overshoot beyond the unit square that forward runs silently clamp.
    pub clamp_tol: f64,
    pub t_max: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 0.1,
            clamp_tol: 1e-9,
            t_max: 5000.0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("clamp_tol", self.clamp_tol),
            ("t_max", self.t_max),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.rel_tol < 1e-14 {
            return Err(Error::InvalidConfig(format!(
                "rel_tol must be at least 1e-14, got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }

    /// Same configuration with both tolerances scaled by `factor`.
    pub fn with_tolerances_scaled(mut self, factor: f64) -> Self {
        self.rel_tol *= factor;
        self.abs_tol *= factor;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Edges of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryEdge {
    /// `x_b = 0`
    Bottom,
    /// `x_b = 1`
    Top,
    /// `x_a = 0`
    Left,
    /// `x_a = 1`
    Right,
}

impl BoundaryEdge {
    pub const ALL: [BoundaryEdge; 4] = [
        BoundaryEdge::Bottom,
        BoundaryEdge::Top,
        BoundaryEdge::Left,
        BoundaryEdge::Right,
    ];

    /// Positive inside the square, negative beyond this edge.
    pub fn signed_distance(self, p: PhasePoint) -> f64 {
        match self {
            BoundaryEdge::Bottom => p.x_b,
            BoundaryEdge::Top => 1.0 - p.x_b,
            BoundaryEdge::Left => p.x_a,
            BoundaryEdge::Right => 1.0 - p.x_a,
        }
    }

    /// The edge `p` violates the most, if it is outside the square.
    pub fn violated_by(p: PhasePoint) -> Option<BoundaryEdge> {
        BoundaryEdge::ALL
            .into_iter()
            .map(|e| (e, e.signed_distance(p)))
            .filter(|&(_, d)| d < 0.0)
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(e, _)| e)
    }
}

/// When to stop besides exhausting `t_max`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StopCondition {
    pub attractors: Vec<PhasePoint>,
    pub proximity: f64,
    pub on_domain_exit: bool,
}

impl StopCondition {
    pub fn time_budget() -> Self {
        Self::default()
    }

    pub fn near(attractors: Vec<PhasePoint>, proximity: f64) -> Self {
        Self {
            attractors,
            proximity,
            on_domain_exit: false,
        }
    }

    pub fn domain_exit() -> Self {
        Self {
            on_domain_exit: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TerminalReason {
    ReachedTMax,
    /// Index into [`StopCondition::attractors`].
    ConvergedToAttractor(usize),
    ExitedDomain {
        point: PhasePoint,
        edge: BoundaryEdge,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, PhasePoint)>,
    pub terminal_reason: TerminalReason,
}

impl Trajectory {
    pub fn last(&self) -> (f64, PhasePoint) {
        *self
            .samples
            .last()
            .expect("trajectory always holds its initial sample")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x_a,x_b")?;
        for (t, p) in &self.samples {
            writeln!(w, "{},{},{}", fmt_num(*t), fmt_num(p.x_a), fmt_num(p.x_b))?;
        }
        Ok(())
    }
}

/// Final state of a run whose intermediate samples were not kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub t: f64,
    pub state: PhasePoint,
    pub terminal_reason: TerminalReason,
}

pub fn integrate(
    x0: PhasePoint,
    params: &EpidemicParams,
    regime: &Regime,
    cfg: &IntegratorConfig,
    direction: Direction,
    stop: &StopCondition,
) -> Result<Trajectory> {
    let field = VectorField::new(*params, regime.clone())?;
    integrate_field(&field, x0, cfg, direction, stop)
}

pub fn integrate_field(
    field: &VectorField,
    x0: PhasePoint,
    cfg: &IntegratorConfig,
    direction: Direction,
    stop: &StopCondition,
) -> Result<Trajectory> {
    let mut samples = Vec::new();
    let end = Stepper::new(field, cfg, direction, stop)?.run(x0, Some(&mut samples))?;
    Ok(Trajectory {
        samples,
        terminal_reason: end.terminal_reason,
    })
}

/// Like [`integrate_field`] but keeps only the final state.
pub fn integrate_to_end(
    field: &VectorField,
    x0: PhasePoint,
    cfg: &IntegratorConfig,
    direction: Direction,
    stop: &StopCondition,
) -> Result<Endpoint> {
    Stepper::new(field, cfg, direction, stop)?.run(x0, None)
}

/// Locates where `traj` first leaves the unit square through `edge`, by
/// bisection on the linear interpolant of the bracketing step.
pub fn refine_boundary_crossing(traj: &Trajectory, edge: BoundaryEdge) -> Result<PhasePoint> {
    let pair = traj
        .samples
        .windows(2)
        .find(|w| edge.signed_distance(w[0].1) >= 0.0 && edge.signed_distance(w[1].1) < 0.0)
        .ok_or(Error::NoCrossing)?;
    let (p0, p1) = (pair[0].1, pair[1].1);
    let lerp = |u: f64| {
        PhasePoint::new(
            p0.x_a + u * (p1.x_a - p0.x_a),
            p0.x_b + u * (p1.x_b - p0.x_b),
        )
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut best = lerp(0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        best = lerp(mid);
        let d = edge.signed_distance(best);
        if d.abs() <= 1e-13 {
            break;
        }
        if d >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if edge.signed_distance(best).abs() > CROSSING_TOL {
        return Err(Error::NoCrossing);
    }
    Ok(best)
}

// Dormand–Prince 5(4) tableau; the fields are autonomous so the stage
// abscissae never enter.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: [f64; 2], h: f64, terms: &[(f64, [f64; 2])]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for i in 0..2 {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
    out
}

struct StepResult {
    y: [f64; 2],
    err: [f64; 2],
    k_end: [f64; 2],
}

struct Stepper<'a> {
    field: &'a VectorField,
    cfg: &'a IntegratorConfig,
    sign: f64,
    stop: &'a StopCondition,
    piecewise_globalized: bool,
    clamp: bool,
}

impl<'a> Stepper<'a> {
    fn new(
        field: &'a VectorField,
        cfg: &'a IntegratorConfig,
        direction: Direction,
        stop: &'a StopCondition,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            field,
            cfg,
            sign: direction.sign(),
            stop,
            piecewise_globalized: matches!(field.regime(), Regime::LinearGlobalized),
            clamp: direction == Direction::Forward && !stop.on_domain_exit,
        })
    }

    #[inline]
    fn eval(&self, side: Option<Side>, y: [f64; 2]) -> [f64; 2] {
        match side {
            Some(s) => self.field.eval_side(s, PhasePoint::from(y)),
            None => self.field.eval(PhasePoint::from(y)),
        }
    }

    fn side_of(&self, y: [f64; 2]) -> Option<Side> {
        self.piecewise_globalized
            .then(|| Side::of(PhasePoint::from(y)))
    }

    /// One Dormand–Prince step of signed size `h` using a fixed piece.
    fn dp_step(&self, side: Option<Side>, y: [f64; 2], k1: [f64; 2], h: f64) -> StepResult {
        let k2 = self.eval(side, axpy(y, h, &[(A21, k1)]));
        let k3 = self.eval(side, axpy(y, h, &[(A31, k1), (A32, k2)]));
        let k4 = self.eval(side, axpy(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
        let k5 = self.eval(
            side,
            axpy(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]),
        );
        let k6 = self.eval(
            side,
            axpy(
                y,
                h,
                &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
            ),
        );
        let y_new = axpy(
            y,
            h,
            &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)],
        );
        let k7 = self.eval(side, y_new);
        let mut err = [0.0; 2];
        for i in 0..2 {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        StepResult {
            y: y_new,
            err,
            k_end: k7,
        }
    }

    fn error_norm(&self, y: [f64; 2], r: &StepResult) -> f64 {
        let acc: f64 = (0..2)
            .map(|i| {
                let sc = self.cfg.abs_tol + self.cfg.rel_tol * y[i].abs().max(r.y[i].abs());
                (r.err[i] / sc).powi(2)
            })
            .sum();
        (acc / 2.0).sqrt()
    }

    fn converged_to(&self, y: [f64; 2]) -> Option<usize> {
        let p = PhasePoint::from(y);
        self.stop
            .attractors
            .iter()
            .position(|a| a.distance(p) < self.stop.proximity)
    }

    fn run(
        &self,
        x0: PhasePoint,
        mut record: Option<&mut Vec<(f64, PhasePoint)>>,
    ) -> Result<Endpoint> {
        let cfg = self.cfg;
        let mut y: [f64; 2] = x0.into();
        if !x0.is_finite() {
            return Err(Error::NonFiniteState { t: 0.0 });
        }
        if self.clamp {
            let restricted = matches!(
                self.field.regime(),
                Regime::LinearGlobalized | Regime::Autarky | Regime::GeneralTwoLocation(_)
            );
            let lo = -cfg.clamp_tol;
            let hi = 1.0 + cfg.clamp_tol;
            if restricted && y.iter().any(|&c| c < lo || c > hi) {
                return Err(Error::InvalidArgument(format!(
                    "initial state ({}, {}) lies outside the unit square",
                    x0.x_a, x0.x_b
                )));
            }
            if y.iter().all(|&c| c >= lo && c <= hi) {
                y = [y[0].clamp(0.0, 1.0), y[1].clamp(0.0, 1.0)];
            }
        }
        let mut t = 0.0_f64;
        let push = |t: f64, y: [f64; 2], record: &mut Option<&mut Vec<(f64, PhasePoint)>>| {
            if let Some(buf) = record.as_deref_mut() {
                buf.push((t, PhasePoint::from(y)));
            }
        };
        push(t, y, &mut record);
        let finish = |t: f64, y: [f64; 2], reason: TerminalReason| Endpoint {
            t,
            state: PhasePoint::from(y),
            terminal_reason: reason,
        };
        if let Some(idx) = self.converged_to(y) {
            return Ok(finish(t, y, TerminalReason::ConvergedToAttractor(idx)));
        }

        let mut h = (0.01_f64).min(cfg.max_step);
        let mut cached_k1: Option<(Option<Side>, [f64; 2])> = None;

        loop {
            let elapsed = t.abs();
            if elapsed >= cfg.t_max {
                return Ok(finish(t, y, TerminalReason::ReachedTMax));
            }
            let remaining = cfg.t_max - elapsed;
            let h_abs = h.min(cfg.max_step).min(remaining);
            let side = self.side_of(y);
            let k1 = match cached_k1 {
                Some((s, k)) if s == side => k,
                _ => self.eval(side, y),
            };
            if !(k1[0].is_finite() && k1[1].is_finite()) {
                return Err(Error::NonFiniteState { t });
            }
            cached_k1 = Some((side, k1));

            let step = self.dp_step(side, y, k1, self.sign * h_abs);
            let err = self.error_norm(y, &step);
            let finite = step.y.iter().all(|c| c.is_finite()) && err.is_finite();
            if !finite || err > 1.0 {
                h = if finite {
                    h_abs * (0.9 * err.powf(-0.2)).max(0.2)
                } else {
                    h_abs * 0.1
                };
                if h < MIN_STEP {
                    return Err(if finite {
                        Error::StepSizeUnderflow {
                            t,
                            state: PhasePoint::from(y),
                        }
                    } else {
                        Error::NonFiniteState { t }
                    });
                }
                continue;
            }

            let mut taken = h_abs;
            let mut y_new = step.y;
            let mut k_next = Some(step.k_end);

            if let Some(s0) = self.field.switching(PhasePoint::from(y)) {
                let s1 = self.field.switching(PhasePoint::from(y_new)).unwrap_or(0.0);
                if s0 != 0.0 && s1.signum() != s0.signum() {
                    let (tau, y_cross) = self.bisect_event(side, y, k1, h_abs, |p| {
                        let s = self.field.switching(p).unwrap_or(0.0);
                        s.signum() == s0.signum() && s != 0.0
                    });
                    taken = tau;
                    y_new = y_cross;
                    if self.piecewise_globalized {
                        let m = 0.5 * (y_new[0] + y_new[1]);
                        y_new = [m, m];
                    }
                    k_next = None;
                }
            }

            if self.clamp {
                let lo = -cfg.clamp_tol;
                let hi = 1.0 + cfg.clamp_tol;
                if y_new.iter().any(|&c| c < lo || c > hi) {
                    h = h_abs * 0.5;
                    if h < MIN_STEP {
                        return Err(Error::StepSizeUnderflow {
                            t,
                            state: PhasePoint::from(y),
                        });
                    }
                    continue;
                }
                let clamped = [y_new[0].clamp(0.0, 1.0), y_new[1].clamp(0.0, 1.0)];
                if clamped != y_new {
                    y_new = clamped;
                    k_next = None;
                }
            }

            if self.stop.on_domain_exit && !PhasePoint::from(y_new).in_unit_square() {
                let (tau, y_out) = self.bisect_event(side, y, k1, taken, |p| p.in_unit_square());
                let t_out = t + self.sign * tau;
                let point = PhasePoint::from(y_out);
                push(t_out, y_out, &mut record);
                let edge =
                    BoundaryEdge::violated_by(point).expect("bisection ends outside the square");
                return Ok(finish(
                    t_out,
                    y_out,
                    TerminalReason::ExitedDomain { point, edge },
                ));
            }

            t += self.sign * taken;
            y = y_new;
            push(t, y, &mut record);
            cached_k1 = k_next.map(|k| (self.side_of(y), k));

            if let Some(idx) = self.converged_to(y) {
                return Ok(finish(t, y, TerminalReason::ConvergedToAttractor(idx)));
            }

            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = h_abs * factor;
        }
    }

    /// Bisects the step length in `(0, h_abs]` for the first point where
    /// `still_before` turns false. Returns the step length just past the event
    /// and the state there.
    fn bisect_event<F>(
        &self,
        side: Option<Side>,
        y: [f64; 2],
        k1: [f64; 2],
        h_abs: f64,
        still_before: F,
    ) -> (f64, [f64; 2])
    where
        F: Fn(PhasePoint) -> bool,
    {
        let (mut lo, mut hi) = (0.0_f64, h_abs);
        let mut y_hi = self.dp_step(side, y, k1, self.sign * hi).y;
        while hi - lo > EVENT_TIME_TOL {
            let mid = 0.5 * (lo + hi);
            let y_mid = self.dp_step(side, y, k1, self.sign * mid).y;
            if still_before(PhasePoint::from(y_mid)) {
                lo = mid;
            } else {
                hi = mid;
                y_hi = y_mid;
            }
        }
        (hi, y_hi)
    }
}
