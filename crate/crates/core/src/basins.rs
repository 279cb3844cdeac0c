//! Basin-of-attraction classification on grids and random samples.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{find_equilibria, DEFAULT_SEED_GRID};
use crate::error::{Error, Result};
use crate::integrator::{
    integrate_to_end, Direction, IntegratorConfig, StopCondition, TerminalReason,
};
use crate::model::{EpidemicParams, PhasePoint, Regime, VectorField};
use crate::shocks::{ShockSampler, UniformSquare};

/// Distance to an attractor at which a run counts as converged.
pub const CONVERGENCE_RADIUS: f64 = 1e-4;
pub const DEFAULT_MC_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasinLabel {
    ToOrigin,
    ToOne,
    /// To `(0, 1)`: A recovers, B fully infected.
    ToZeroOne,
    /// To `(1, 0)`.
    ToOneZero,
    Unresolved,
}

impl BasinLabel {
    pub fn code(self) -> u8 {
        match self {
            BasinLabel::ToOrigin => 0,
            BasinLabel::ToOne => 1,
            BasinLabel::ToZeroOne => 2,
            BasinLabel::ToOneZero => 3,
            BasinLabel::Unresolved => 9,
        }
    }

    pub fn is_partial_endemic(self) -> bool {
        matches!(self, BasinLabel::ToZeroOne | BasinLabel::ToOneZero)
    }

    fn for_attractor(p: PhasePoint) -> BasinLabel {
        let near = |a: f64, b: f64| p.distance(PhasePoint::new(a, b)) <= 1e-6;
        if near(0.0, 0.0) {
            BasinLabel::ToOrigin
        } else if near(1.0, 1.0) {
            BasinLabel::ToOne
        } else if near(0.0, 1.0) {
            BasinLabel::ToZeroOne
        } else if near(1.0, 0.0) {
            BasinLabel::ToOneZero
        } else {
            BasinLabel::Unresolved
        }
    }
}

/// Classification of one initial state; `note` says why a run is
/// unresolved when the integrator failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: BasinLabel,
    pub note: Option<String>,
}

/// Forward-integrates initial states until they settle near a stable
/// equilibrium of the regime.
#[derive(Debug, Clone)]
pub struct Classifier {
    field: VectorField,
    cfg: IntegratorConfig,
    stop: StopCondition,
    labels: Vec<BasinLabel>,
}

impl Classifier {
    pub fn new(params: &EpidemicParams, regime: &Regime, cfg: &IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        let field = VectorField::new(*params, regime.clone())?;
        let equilibria = find_equilibria(params, regime, DEFAULT_SEED_GRID)?;
        let attractors: Vec<PhasePoint> = equilibria.stable_nodes().map(|e| e.location).collect();
        let labels = attractors
            .iter()
            .map(|&p| BasinLabel::for_attractor(p))
            .collect();
        Ok(Self {
            field,
            cfg: *cfg,
            stop: StopCondition::near(attractors, CONVERGENCE_RADIUS),
            labels,
        })
    }

    pub fn attractors(&self) -> &[PhasePoint] {
        &self.stop.attractors
    }

    pub fn classify_detailed(&self, x0: PhasePoint) -> Classification {
        match integrate_to_end(&self.field, x0, &self.cfg, Direction::Forward, &self.stop) {
            Ok(end) => match end.terminal_reason {
                TerminalReason::ConvergedToAttractor(i) => Classification {
                    label: self.labels[i],
                    note: None,
                },
                TerminalReason::ReachedTMax => Classification {
                    label: BasinLabel::Unresolved,
                    note: Some(format!("no attractor reached by t = {}", self.cfg.t_max)),
                },
                TerminalReason::ExitedDomain { .. } => Classification {
                    label: BasinLabel::Unresolved,
                    note: Some("left the unit square".into()),
                },
            },
            Err(e) => Classification {
                label: BasinLabel::Unresolved,
                note: Some(e.to_string()),
            },
        }
    }

    pub fn classify(&self, x0: PhasePoint) -> BasinLabel {
        self.classify_detailed(x0).label
    }
}

pub fn classify_point(
    x0: PhasePoint,
    params: &EpidemicParams,
    regime: &Regime,
    cfg: &IntegratorConfig,
) -> Result<BasinLabel> {
    Ok(Classifier::new(params, regime, cfg)?.classify(x0))
}

/// Closed-form basins of the uncoupled system: each coordinate falls to 0
/// below `q` and rises to 1 above it.
pub fn autarky_oracle(x0: PhasePoint, q: f64, margin: f64) -> Result<BasinLabel> {
    if (x0.x_a - q).abs() <= margin || (x0.x_b - q).abs() <= margin {
        return Err(Error::OnBoundary { point: x0 });
    }
    Ok(match (x0.x_a < q, x0.x_b < q) {
        (true, true) => BasinLabel::ToOrigin,
        (false, false) => BasinLabel::ToOne,
        (true, false) => BasinLabel::ToZeroOne,
        (false, true) => BasinLabel::ToOneZero,
    })
}

/// The two off-diagonal rectangles split by the quarantine lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffDiagonalRect {
    /// `[q, 1] × [0, q]`
    Sub,
    /// `[0, q] × [q, 1]`
    Super,
}

impl OffDiagonalRect {
    pub fn contains(self, p: PhasePoint, q: f64) -> bool {
        match self {
            OffDiagonalRect::Sub => p.x_a > q && p.x_b < q,
            OffDiagonalRect::Super => p.x_a < q && p.x_b > q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    pub area_to_origin: f64,
    pub area_to_one: f64,
    /// Share of the off-diagonal rectangles that ends fully infected.
    pub dark_ratio: f64,
    pub unresolved_fraction: f64,
}

impl AreaReport {
    fn from_labelled(points: &[PhasePoint], labels: &[BasinLabel], q: f64) -> Self {
        let total = labels.len() as f64;
        let count = |l: BasinLabel| labels.iter().filter(|&&x| x == l).count() as f64;
        AreaReport {
            area_to_origin: count(BasinLabel::ToOrigin) / total,
            area_to_one: count(BasinLabel::ToOne) / total,
            dark_ratio: dark_ratio(
                points,
                labels,
                q,
                &[OffDiagonalRect::Sub, OffDiagonalRect::Super],
            ),
            unresolved_fraction: count(BasinLabel::Unresolved) / total,
        }
    }
}

fn dark_ratio(
    points: &[PhasePoint],
    labels: &[BasinLabel],
    q: f64,
    rects: &[OffDiagonalRect],
) -> f64 {
    let (mut inside, mut infected) = (0usize, 0usize);
    for (p, l) in points.iter().zip(labels) {
        if rects.iter().any(|r| r.contains(*p, q)) {
            inside += 1;
            if *l == BasinLabel::ToOne {
                infected += 1;
            }
        }
    }
    if inside == 0 {
        0.0
    } else {
        infected as f64 / inside as f64
    }
}

#[derive(Debug, Clone)]
pub struct BasinGrid {
    pub resolution: usize,
    pub params: EpidemicParams,
    pub regime: Regime,
    /// Row-major; row `j` holds `x_b = (j + 0.5) / n`, column `i` holds
    /// `x_a = (i + 0.5) / n`.
    pub labels: Vec<BasinLabel>,
}

/// Center of cell `i` along an axis of `n` cells.
pub fn cell_center(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

/// All `n × n` cell centers in the grid's row-major order.
pub fn cell_centers(n: usize) -> Vec<PhasePoint> {
    (0..n * n)
        .map(|k| PhasePoint::new(cell_center(k % n, n), cell_center(k / n, n)))
        .collect()
}

impl BasinGrid {
    pub fn label(&self, i: usize, j: usize) -> BasinLabel {
        self.labels[j * self.resolution + i]
    }

    pub fn cell_centers(&self) -> Vec<PhasePoint> {
        cell_centers(self.resolution)
    }

    pub fn is_transpose_symmetric(&self) -> bool {
        let n = self.resolution;
        (0..n).all(|j| (0..n).all(|i| self.label(i, j) == self.label(j, i)))
    }

    /// Areas over the full square, with the dark ratio taken over the
    /// quarantine lines of location A.
    pub fn area_report(&self) -> AreaReport {
        AreaReport::from_labelled(&self.cell_centers(), &self.labels, self.params.q_a)
    }

    pub fn dark_ratio_in(&self, rect: OffDiagonalRect) -> f64 {
        dark_ratio(&self.cell_centers(), &self.labels, self.params.q_a, &[rect])
    }

    /// Integer label matrix, first row at the smallest `x_b`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.resolution;
        for row in self.labels.chunks(n) {
            let line: Vec<String> = row.iter().map(|l| l.code().to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Classifies every cell center of an `n × n` grid over the unit square.
/// Cells are independent; the result does not depend on thread count.
pub fn classify_grid(
    params: &EpidemicParams,
    regime: &Regime,
    n: usize,
    cfg: &IntegratorConfig,
) -> Result<BasinGrid> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least 2, got {n}"
        )));
    }
    let classifier = Classifier::new(params, regime, cfg)?;
    let labels = cell_centers(n)
        .into_par_iter()
        .map(|p| classifier.classify(p))
        .collect();
    Ok(BasinGrid {
        resolution: n,
        params: *params,
        regime: regime.clone(),
        labels,
    })
}

/// Basin areas of the globalized system and the fully-infected share of
/// the off-diagonal rectangles, from an `n × n` grid.
pub fn gray_area_ratio(
    params: &EpidemicParams,
    n: usize,
    cfg: &IntegratorConfig,
) -> Result<AreaReport> {
    params.require_symmetric("globalized")?;
    Ok(classify_grid(params, &Regime::LinearGlobalized, n, cfg)?.area_report())
}

/// `samples` shocks uniform on the unit square, reproducible from `seed`.
pub fn uniform_shocks(samples: usize, seed: u64) -> Vec<PhasePoint> {
    UniformSquare::new(seed).sample(samples)
}

/// Monte Carlo counterpart of [`BasinGrid::area_report`].
pub fn monte_carlo_areas(
    params: &EpidemicParams,
    regime: &Regime,
    samples: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<AreaReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let classifier = Classifier::new(params, regime, cfg)?;
    let points = uniform_shocks(samples, seed);
    let labels: Vec<BasinLabel> = points.par_iter().map(|&p| classifier.classify(p)).collect();
    Ok(AreaReport::from_labelled(&points, &labels, params.q_a))
}
