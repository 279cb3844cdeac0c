use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twin_isle::model::{PhasePoint, PriceCostSpec, Regime};
use twin_isle::output::inclusive_range;

#[derive(Debug, Parser)]
#[command(
    name = "twin-isle",
    version,
    about = "Two-location epidemic dynamics: basins, separatrices and shock analysis"
)]
pub struct Cli {
    /// Write every artifact into this directory instead of printing the
    /// primary one to standard output.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Format of what goes to standard output.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Globalized,
    Autarky,
    Single,
    General,
    PieceDiagonal,
    PieceSub,
    PieceSuper,
}

impl RegimeArg {
    pub fn regime(self) -> Regime {
        match self {
            RegimeArg::Globalized => Regime::LinearGlobalized,
            RegimeArg::Autarky => Regime::Autarky,
            RegimeArg::Single => Regime::SingleLocation,
            RegimeArg::General => Regime::GeneralTwoLocation(PriceCostSpec::linear_uniform()),
            RegimeArg::PieceDiagonal => Regime::PieceDiagonal,
            RegimeArg::PieceSub => Regime::PieceSub,
            RegimeArg::PieceSuper => Regime::PieceSuper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Sub,
    Super,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Eta,
    Zeta,
    DarkRatio,
    Area,
    AreaTilde,
    RatioTilde,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ModelArgs {
    /// Contagiousness, shared by both locations.
    #[arg(long)]
    pub nu: f64,
    /// Quarantine level, shared by both locations.
    #[arg(long)]
    pub q: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the vector field at one state.
    Field {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "globalized")]
        regime: RegimeArg,
        #[arg(long, value_parser = parse_point)]
        at: PhasePoint,
    },
    /// Integrate one trajectory.
    Integrate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "globalized")]
        regime: RegimeArg,
        #[arg(long, value_parser = parse_point)]
        x0: PhasePoint,
        #[arg(long, default_value_t = 100.0)]
        t_max: f64,
        #[arg(long)]
        backward: bool,
    },
    /// Locate and classify equilibria.
    Equilibria {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "globalized")]
        regime: RegimeArg,
    },
    /// Trace the stable manifold of the saddle (q, q).
    Separatrix {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = twin_isle::separatrix::DEFAULT_OFFSET)]
        offset: f64,
        #[arg(long, value_enum, default_value = "sub")]
        side: SideArg,
        /// Emit the linearized separatrix instead of the traced one.
        #[arg(long)]
        linear: bool,
    },
    /// Classify a grid of initial states by attractor.
    Basins {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "globalized")]
        regime: RegimeArg,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
    /// Compare autarky and globalization shock by shock.
    Shocks {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, conflicts_with = "samples", required_unless_present = "samples")]
        grid: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = twin_isle::basins::DEFAULT_MC_SEED, requires = "samples")]
        seed: u64,
    },
    /// Tabulate a metric over a grid of (q, nu).
    Sweep {
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(
            long,
            conflicts_with = "nu_range",
            required_unless_present = "nu_range"
        )]
        nu: Option<f64>,
        #[arg(long, value_parser = parse_range)]
        nu_range: Option<Grid1>,
        #[arg(long, value_parser = parse_range)]
        q_range: Grid1,
        /// Grid resolution for the grid-based metrics.
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
    /// Numeric basin area of (0, 0) against its linearized estimate.
    ApproxCompare {
        #[arg(long, value_parser = parse_range)]
        nu_range: Grid1,
        #[arg(long, value_parser = parse_range)]
        q_range: Grid1,
        #[arg(long, default_value_t = 201)]
        resolution: usize,
    },
}

fn parse_point(s: &str) -> Result<PhasePoint, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected XA,XB, got '{s}'"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    let p = PhasePoint::new(num(a)?, num(b)?);
    if !p.is_finite() {
        return Err(format!("non-finite point '{s}'"));
    }
    Ok(p)
}

/// Values of an `A:B:STEP` range flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1(pub Vec<f64>);

/// `A:B:STEP`, inclusive of `B`.
fn parse_range(s: &str) -> Result<Grid1, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts[..] else {
        return Err(format!("expected A:B:STEP, got '{s}'"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if step.is_nan() || step <= 0.0 || !a.is_finite() || !b.is_finite() || b < a {
        return Err(format!("range '{s}' needs A <= B and STEP > 0"));
    }
    Ok(Grid1(inclusive_range(a, b, step)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_points() {
        assert_eq!(parse_range("0.05:0.35:0.05").unwrap().0.len(), 7);
        assert!(parse_range("0.3:0.1:0.1").is_err());
        assert!(parse_range("0.1:0.3").is_err());
        assert!(parse_range("0.1:0.3:0").is_err());
        assert_eq!(parse_point("0.1, 0.5").unwrap(), PhasePoint::new(0.1, 0.5));
        assert!(parse_point("0.1").is_err());
        assert!(parse_point("nan,0").is_err());
    }
}
