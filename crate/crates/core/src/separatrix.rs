//! Stable separatrix of the saddle `(q, q)` of the globalized field.
//!
//! Each half is traced by integrating the corresponding smooth piece backward
//! in time from a point just off the saddle along its stable eigendirection,
//! until the curve leaves the unit square.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{saddle_stable_direction, SaddleSide};
use crate::error::{Error, Result};
use crate::integrator::{
    integrate, refine_boundary_crossing, BoundaryEdge, Direction, IntegratorConfig, StopCondition,
    TerminalReason,
};
use crate::model::{EpidemicParams, PhasePoint, Regime};
use crate::output::fmt_num;

pub const DEFAULT_OFFSET: f64 = 1e-6;
/// Resolution in `q` of the exit-type switch.
pub const THRESHOLD_TOL: f64 = 1e-3;

const EDGE_SLACK: f64 = 1e-9;

/// Where a separatrix half leaves the unit square, in the sub-diagonal
/// frame: `Eta` on the bottom edge `[q, 1] × {0}` (value `x_a`), `Zeta` on
/// the right edge `{1} × [0, q]` (value `x_b`). The super-diagonal half
/// reports its mirror image with the same value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum SeparatrixExit {
    Eta(f64),
    Zeta(f64),
}

impl SeparatrixExit {
    pub fn value(self) -> f64 {
        match self {
            SeparatrixExit::Eta(v) | SeparatrixExit::Zeta(v) => v,
        }
    }

    pub fn kind(self) -> &'static str {
        match self {
            SeparatrixExit::Eta(_) => "eta",
            SeparatrixExit::Zeta(_) => "zeta",
        }
    }

    pub fn is_eta(self) -> bool {
        matches!(self, SeparatrixExit::Eta(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixTrace {
    pub side: SaddleSide,
    pub saddle: PhasePoint,
    /// From next to the saddle out to the boundary crossing, one point per
    /// accepted step.
    pub polyline: Vec<PhasePoint>,
    pub exit: SeparatrixExit,
}

impl SeparatrixTrace {
    pub fn exit_point(&self) -> PhasePoint {
        *self.polyline.last().expect("trace is never empty")
    }

    /// The first point of the polyline at distance `r` from the saddle,
    /// interpolated linearly between samples.
    pub fn point_at_radius(&self, r: f64) -> Option<PhasePoint> {
        let d = |p: PhasePoint| p.distance(self.saddle);
        self.polyline.windows(2).find_map(|w| {
            let (d0, d1) = (d(w[0]), d(w[1]));
            (d0 <= r && d1 >= r && d1 > d0).then(|| {
                let u = (r - d0) / (d1 - d0);
                PhasePoint::new(
                    w[0].x_a + u * (w[1].x_a - w[0].x_a),
                    w[0].x_b + u * (w[1].x_b - w[0].x_b),
                )
            })
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x_a,x_b")?;
        for p in &self.polyline {
            writeln!(w, "{},{}", fmt_num(p.x_a), fmt_num(p.x_b))?;
        }
        Ok(())
    }
}

fn classify_exit(
    side: SaddleSide,
    q: f64,
    edge: BoundaryEdge,
    point: PhasePoint,
) -> Result<SeparatrixExit> {
    // Work in the sub-diagonal frame.
    let (p, edge) = match side {
        SaddleSide::Sub => (point, edge),
        SaddleSide::Super => (
            point.swapped(),
            match edge {
                BoundaryEdge::Left => BoundaryEdge::Bottom,
                BoundaryEdge::Top => BoundaryEdge::Right,
                BoundaryEdge::Bottom => BoundaryEdge::Left,
                BoundaryEdge::Right => BoundaryEdge::Top,
            },
        ),
    };
    match edge {
        BoundaryEdge::Bottom if p.x_a >= q - EDGE_SLACK && p.x_a <= 1.0 + EDGE_SLACK => {
            Ok(SeparatrixExit::Eta(p.x_a))
        }
        BoundaryEdge::Right if p.x_b >= -EDGE_SLACK && p.x_b <= q + EDGE_SLACK => {
            Ok(SeparatrixExit::Zeta(p.x_b))
        }
        _ => Err(Error::ExitThroughUnexpectedEdge { point }),
    }
}

/// Traces one half of the saddle's stable manifold out to the boundary of
/// the unit square.
pub fn trace_separatrix(
    params: &EpidemicParams,
    side: SaddleSide,
    offset: f64,
    cfg: &IntegratorConfig,
) -> Result<SeparatrixTrace> {
    params.require_symmetric("separatrix")?;
    if !(1e-9..=1e-3).contains(&offset) {
        return Err(Error::InvalidArgument(format!(
            "offset {offset} outside [1e-9, 1e-3]"
        )));
    }
    let q = params.q();
    let saddle = PhasePoint::new(q, q);
    let dir = saddle_stable_direction(params, side)?;
    // Orient into the side's region: the sub half heads to larger x_a.
    let (dir, regime) = match side {
        SaddleSide::Sub => ([-dir[0], -dir[1]], Regime::PieceSub),
        SaddleSide::Super => (dir, Regime::PieceSuper),
    };
    let start = PhasePoint::new(q + offset * dir[0], q + offset * dir[1]);
    let traj = integrate(
        start,
        params,
        &regime,
        cfg,
        Direction::Backward,
        &StopCondition::domain_exit(),
    )?;
    let edge = match traj.terminal_reason {
        TerminalReason::ExitedDomain { edge, .. } => edge,
        _ => return Err(Error::NoExit),
    };
    let crossing = refine_boundary_crossing(&traj, edge)?;
    let exit = classify_exit(side, q, edge, crossing)?;
    let mut polyline: Vec<PhasePoint> = traj.samples.iter().map(|&(_, p)| p).collect();
    polyline.pop();
    polyline.push(crossing);
    Ok(SeparatrixTrace {
        side,
        saddle,
        polyline,
        exit,
    })
}

/// Area of the part of `[q, 1] × [0, q]` lying between the line `x_a = q`
/// and the sub-diagonal separatrix, i.e. the recovery region there.
pub fn recovery_area(trace: &SeparatrixTrace) -> f64 {
    let trace_sub: Vec<PhasePoint> = match trace.side {
        SaddleSide::Sub => trace.polyline.clone(),
        SaddleSide::Super => trace.polyline.iter().map(|p| p.swapped()).collect(),
    };
    let q = trace.saddle.x_a;
    let mut poly = Vec::with_capacity(trace_sub.len() + 3);
    poly.push(trace.saddle);
    poly.extend(trace_sub);
    if !trace.exit.is_eta() {
        poly.push(PhasePoint::new(1.0, 0.0));
    }
    poly.push(PhasePoint::new(q, 0.0));
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (p, r) = (poly[i], poly[(i + 1) % n]);
            p.x_a * r.x_b - r.x_a * p.x_b
        })
        .sum();
    0.5 * twice.abs()
}

/// Total area of the basin of `(0, 0)` bounded by the traced separatrix:
/// the square `[0, q]²` plus both mirrored recovery regions.
pub fn basin_area_from_separatrix(
    params: &EpidemicParams,
    offset: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let trace = trace_separatrix(params, SaddleSide::Sub, offset, cfg)?;
    let q = params.q();
    Ok(2.0 * recovery_area(&trace) + q * q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub q: f64,
    pub exit: Result<SeparatrixExit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaZetaSweep {
    pub nu: f64,
    /// Ordered by `q`.
    pub points: Vec<SweepPoint>,
    /// Where the exit switches from the bottom edge to the right edge.
    pub threshold: Option<f64>,
}

impl EtaZetaSweep {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "q,exit_type,exit_value")?;
        for pt in &self.points {
            match &pt.exit {
                Ok(e) => writeln!(w, "{},{},{}", fmt_num(pt.q), e.kind(), fmt_num(e.value()))?,
                Err(_) => writeln!(w, "{},error,NaN", fmt_num(pt.q))?,
            }
        }
        Ok(())
    }
}

fn exit_at(nu: f64, q: f64, cfg: &IntegratorConfig) -> Result<SeparatrixExit> {
    let params = EpidemicParams::symmetric_pair(nu, q)?;
    trace_separatrix(&params, SaddleSide::Sub, DEFAULT_OFFSET, cfg).map(|t| t.exit)
}

/// Exit points of the sub-diagonal separatrix over a set of quarantine
/// levels, plus the `q` where the exit moves from the bottom edge to the
/// right edge (bisected to [`THRESHOLD_TOL`]).
pub fn eta_zeta_sweep(nu: f64, q_values: &[f64], cfg: &IntegratorConfig) -> EtaZetaSweep {
    let mut qs = q_values.to_vec();
    qs.sort_by(f64::total_cmp);
    let points: Vec<SweepPoint> = qs
        .par_iter()
        .map(|&q| SweepPoint {
            q,
            exit: exit_at(nu, q, cfg),
        })
        .collect();

    let bracket = points
        .windows(2)
        .find_map(|w| match (&w[0].exit, &w[1].exit) {
            (Ok(a), Ok(b)) if a.is_eta() && !b.is_eta() => Some((w[0].q, w[1].q)),
            _ => None,
        });
    let threshold = bracket.and_then(|(mut lo, mut hi)| {
        while hi - lo > THRESHOLD_TOL {
            let mid = 0.5 * (lo + hi);
            match exit_at(nu, mid, cfg) {
                Ok(e) if e.is_eta() => lo = mid,
                Ok(_) => hi = mid,
                Err(_) => return None,
            }
        }
        Some(0.5 * (lo + hi))
    });

    EtaZetaSweep {
        nu,
        points,
        threshold,
    }
}
