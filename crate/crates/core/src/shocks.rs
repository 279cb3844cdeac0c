//! Comparing autarky and globalization on the same initial shock.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basins::{autarky_oracle, cell_centers, BasinLabel, Classifier, DEFAULT_MC_SEED};
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::model::{EpidemicParams, PhasePoint, Regime};
use crate::output::fmt_num;

/// Distance from the quarantine lines inside which the closed-form autarky
/// answer is not trusted and the point is integrated instead.
pub const ORACLE_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    BothRecover,
    BothInfected,
    /// Autarky stalls in a partial endemic state, globalization recovers.
    GlobAdvantage,
    /// Autarky stalls in a partial endemic state, globalization infects both.
    GlobDisadvantage,
    Indeterminate,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::BothRecover,
        Category::BothInfected,
        Category::GlobAdvantage,
        Category::GlobDisadvantage,
        Category::Indeterminate,
    ];

    pub fn from_labels(autarky: BasinLabel, globalized: BasinLabel) -> Category {
        use BasinLabel::*;
        match (autarky, globalized) {
            (ToOrigin, ToOrigin) => Category::BothRecover,
            (ToOne, ToOne) => Category::BothInfected,
            (a, ToOrigin) if a.is_partial_endemic() => Category::GlobAdvantage,
            (a, ToOne) if a.is_partial_endemic() => Category::GlobDisadvantage,
            // Unresolved runs, and autarky and globalization disagreeing
            // between the two full states, which no shock should produce.
            _ => Category::Indeterminate,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::BothRecover => "BothRecover",
            Category::BothInfected => "BothInfected",
            Category::GlobAdvantage => "GlobAdvantage",
            Category::GlobDisadvantage => "GlobDisadvantage",
            Category::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockOutcome {
    pub shock: PhasePoint,
    pub autarky_label: BasinLabel,
    pub globalized_label: BasinLabel,
    pub category: Category,
}

/// Reusable classifier for many shocks under one parameter set.
#[derive(Debug, Clone)]
pub struct ShockClassifier {
    q: f64,
    autarky: Classifier,
    globalized: Classifier,
}

impl ShockClassifier {
    pub fn new(params: &EpidemicParams, cfg: &IntegratorConfig) -> Result<Self> {
        params.require_symmetric("shock analysis")?;
        Ok(Self {
            q: params.q_a,
            autarky: Classifier::new(params, &Regime::Autarky, cfg)?,
            globalized: Classifier::new(params, &Regime::LinearGlobalized, cfg)?,
        })
    }

    pub fn classify(&self, s: PhasePoint) -> ShockOutcome {
        let autarky_label = match autarky_oracle(s, self.q, ORACLE_MARGIN) {
            Ok(l) => l,
            Err(_) => self.autarky.classify(s),
        };
        let globalized_label = self.globalized.classify(s);
        ShockOutcome {
            shock: s,
            autarky_label,
            globalized_label,
            category: Category::from_labels(autarky_label, globalized_label),
        }
    }
}

pub fn classify_shock(
    s: PhasePoint,
    params: &EpidemicParams,
    cfg: &IntegratorConfig,
) -> Result<ShockOutcome> {
    Ok(ShockClassifier::new(params, cfg)?.classify(s))
}

/// Source of shocks for the Monte Carlo estimator.
pub trait ShockSampler {
    fn sample(&mut self, count: usize) -> Vec<PhasePoint>;
}

/// Shocks uniform on the unit square.
#[derive(Debug, Clone)]
pub struct UniformSquare {
    rng: ChaCha8Rng,
}

impl UniformSquare {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Default for UniformSquare {
    fn default() -> Self {
        Self::new(DEFAULT_MC_SEED)
    }
}

impl ShockSampler for UniformSquare {
    fn sample(&mut self, count: usize) -> Vec<PhasePoint> {
        (0..count)
            .map(|_| {
                let a: f64 = self.rng.gen();
                let b: f64 = self.rng.gen();
                PhasePoint::new(a, b)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Grid(usize),
    MonteCarlo { samples: usize, seed: u64 },
}

impl Estimator {
    fn shocks(self) -> Result<Vec<PhasePoint>> {
        match self {
            Estimator::Grid(n) if n >= 2 => Ok(cell_centers(n)),
            Estimator::Grid(n) => Err(Error::InvalidArgument(format!(
                "grid resolution must be at least 2, got {n}"
            ))),
            Estimator::MonteCarlo { samples, seed } if samples >= 1 => {
                Ok(UniformSquare::new(seed).sample(samples))
            }
            Estimator::MonteCarlo { .. } => {
                Err(Error::InvalidArgument("need at least one sample".into()))
            }
        }
    }
}

/// Classified shocks plus the share of each category.
#[derive(Debug, Clone)]
pub struct ShockTable {
    pub outcomes: Vec<ShockOutcome>,
    pub measures: BTreeMap<Category, f64>,
}

impl ShockTable {
    fn from_outcomes(outcomes: Vec<ShockOutcome>) -> Self {
        let mut counts: BTreeMap<Category, usize> = Category::ALL.iter().map(|&c| (c, 0)).collect();
        for o in &outcomes {
            *counts.get_mut(&o.category).expect("all categories present") += 1;
        }
        let total = outcomes.len() as f64;
        let measures = counts
            .into_iter()
            .map(|(c, k)| (c, k as f64 / total))
            .collect();
        Self { outcomes, measures }
    }

    pub fn measure(&self, c: Category) -> f64 {
        self.measures[&c]
    }

    /// Share of partial-endemic autarky shocks that globalization makes
    /// worse.
    pub fn disadvantage_share(&self) -> f64 {
        let d = self.measure(Category::GlobDisadvantage);
        let a = self.measure(Category::GlobAdvantage);
        if d + a == 0.0 {
            0.0
        } else {
            d / (d + a)
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "s_a,s_b,autarky,globalized,category")?;
        for o in &self.outcomes {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_num(o.shock.x_a),
                fmt_num(o.shock.x_b),
                o.autarky_label.code(),
                o.globalized_label.code(),
                o.category.name()
            )?;
        }
        Ok(())
    }

    /// Category name to measure, in a fixed key order.
    pub fn summary(&self) -> BTreeMap<&'static str, f64> {
        self.measures.iter().map(|(c, &m)| (c.name(), m)).collect()
    }
}

pub fn classify_shocks(
    params: &EpidemicParams,
    shocks: &[PhasePoint],
    cfg: &IntegratorConfig,
) -> Result<ShockTable> {
    let classifier = ShockClassifier::new(params, cfg)?;
    let outcomes = shocks.par_iter().map(|&s| classifier.classify(s)).collect();
    Ok(ShockTable::from_outcomes(outcomes))
}

pub fn category_table(
    params: &EpidemicParams,
    estimator: Estimator,
    cfg: &IntegratorConfig,
) -> Result<ShockTable> {
    classify_shocks(params, &estimator.shocks()?, cfg)
}

pub fn category_measures(
    params: &EpidemicParams,
    estimator: Estimator,
    cfg: &IntegratorConfig,
) -> Result<BTreeMap<Category, f64>> {
    Ok(category_table(params, estimator, cfg)?.measures)
}
