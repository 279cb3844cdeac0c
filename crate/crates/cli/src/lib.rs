//! `twin-isle` command-line front end, usable in-process through
//! [`execute`] and [`execute_with_threads`].

mod args;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;

use anyhow::{Context, Result};
use clap::Parser;
use serde::Serialize;
use twin_isle::basins::{classify_grid, gray_area_ratio};
use twin_isle::equilibria::{find_equilibria, SaddleSide, DEFAULT_SEED_GRID};
use twin_isle::integrator::{integrate, Direction, IntegratorConfig, StopCondition};
use twin_isle::linear_approx::{area_report_tilde, ratio_tilde, region_geometry, write_linear_csv};
use twin_isle::model::{field, EpidemicParams, Regime};
use twin_isle::output::fmt_num;
use twin_isle::separatrix::{eta_zeta_sweep, trace_separatrix};
use twin_isle::shocks::{category_table, Estimator};

use args::{Cli, Command, Format, Metric, ModelArgs, SideArg};

/// Bad input caught before any computation; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. `TWIN_ISLE_THREADS` sets the worker count.
pub fn execute<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match thread_setting() {
        Ok(n) => execute_with_threads(args, n),
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Like [`execute`], on a pool of `threads` workers (0 picks the core
/// count). Results do not depend on the worker count.
pub fn execute_with_threads<I, T>(args: I, threads: usize) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building the thread pool")
        .and_then(|pool| pool.install(|| run(&cli)));
    match outcome {
        Ok(()) => 0,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn thread_setting() -> Result<usize> {
    match std::env::var("TWIN_ISLE_THREADS") {
        Ok(raw) => raw.trim().parse().map_err(|_| {
            usage(format!(
                "TWIN_ISLE_THREADS must be a non-negative integer, got '{raw}'"
            ))
        }),
        Err(_) => Ok(0),
    }
}

fn params(m: &ModelArgs) -> Result<EpidemicParams> {
    EpidemicParams::symmetric_pair(m.nu, m.q).map_err(|e| usage(e.to_string()))
}

fn check_resolution(n: usize) -> Result<()> {
    if n < 2 {
        return Err(usage(format!("resolution must be at least 2, got {n}")));
    }
    Ok(())
}

/// One output file; `format` decides which artifact reaches standard
/// output when no directory is given.
struct Artifact {
    file: &'static str,
    format: Format,
    body: String,
}

fn csv(file: &'static str, body: String) -> Artifact {
    Artifact {
        file,
        format: Format::Csv,
        body,
    }
}

fn json<T: Serialize>(file: &'static str, value: &T) -> Result<Artifact> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    Ok(Artifact {
        file,
        format: Format::Json,
        body,
    })
}

fn emit(cli: &Cli, artifacts: Vec<Artifact>) -> Result<()> {
    if let Some(dir) = &cli.output_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for a in &artifacts {
            let path = dir.join(a.file);
            fs::write(&path, &a.body).with_context(|| format!("writing {}", path.display()))?;
        }
        return Ok(());
    }
    let chosen = match cli.format {
        Some(f) => artifacts
            .iter()
            .find(|a| a.format == f)
            .ok_or_else(|| usage(format!("this command has no {f:?} output")))?,
        None => &artifacts[0],
    };
    let mut out = std::io::stdout().lock();
    out.write_all(chosen.body.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn to_string(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

#[derive(Serialize)]
struct Row {
    q: f64,
    nu: f64,
    value: f64,
}

#[derive(Serialize)]
struct CompareRow {
    q: f64,
    nu: f64,
    area_numeric: f64,
    area_tilde: f64,
    abs_diff: f64,
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = IntegratorConfig::default();
    match &cli.command {
        Command::Field { model, regime, at } => {
            let p = params(model)?;
            let (va, vb) = field(*at, &p, &regime.regime()).map_err(|e| usage(e.to_string()))?;
            #[derive(Serialize)]
            struct Value {
                v_a: f64,
                v_b: f64,
            }
            emit(
                cli,
                vec![
                    csv("field.csv", format!("{},{}\n", fmt_num(va), fmt_num(vb))),
                    json("field.json", &Value { v_a: va, v_b: vb })?,
                ],
            )
        }
        Command::Integrate {
            model,
            regime,
            x0,
            t_max,
            backward,
        } => {
            let p = params(model)?;
            if !t_max.is_finite() || *t_max <= 0.0 {
                return Err(usage(format!("--t-max must be positive, got {t_max}")));
            }
            let cfg = IntegratorConfig {
                t_max: *t_max,
                ..cfg
            };
            let (dir, stop) = if *backward {
                (Direction::Backward, StopCondition::domain_exit())
            } else {
                (Direction::Forward, StopCondition::time_budget())
            };
            let traj =
                integrate(*x0, &p, &regime.regime(), &cfg, dir, &stop).map_err(|e| match e {
                    twin_isle::Error::InvalidArgument(_)
                    | twin_isle::Error::RegimeParamMismatch { .. } => usage(e.to_string()),
                    other => anyhow::Error::from(other),
                })?;
            emit(
                cli,
                vec![csv("trajectory.csv", to_string(|w| traj.write_csv(w))?)],
            )
        }
        Command::Equilibria { model, regime } => {
            let p = params(model)?;
            let set = find_equilibria(&p, &regime.regime(), DEFAULT_SEED_GRID)?;
            emit(cli, vec![json("equilibria.json", &set.equilibria)?])
        }
        Command::Separatrix {
            model,
            offset,
            side,
            linear,
        } => {
            let p = params(model)?;
            if *linear {
                let geometry = region_geometry(&p)?;
                return emit(
                    cli,
                    vec![
                        csv(
                            "separatrix_linear.csv",
                            to_string(|w| write_linear_csv(&p, w))?,
                        ),
                        json("separatrix_linear.json", &geometry)?,
                    ],
                );
            }
            if !(1e-9..=1e-3).contains(offset) {
                return Err(usage(format!(
                    "--offset must lie in [1e-9, 1e-3], got {offset}"
                )));
            }
            let side = match side {
                SideArg::Sub => SaddleSide::Sub,
                SideArg::Super => SaddleSide::Super,
            };
            let trace = trace_separatrix(&p, side, *offset, &cfg)?;
            let exit = trace.exit;
            if cli.output_dir.is_none() && cli.format != Some(Format::Json) {
                eprintln!("exit: {}={}", exit.kind(), fmt_num(exit.value()));
            }
            emit(
                cli,
                vec![
                    csv("separatrix.csv", to_string(|w| trace.write_csv(w))?),
                    json("separatrix_exit.json", &exit)?,
                ],
            )
        }
        Command::Basins {
            model,
            regime,
            resolution,
        } => {
            let p = params(model)?;
            check_resolution(*resolution)?;
            let grid = classify_grid(&p, &regime.regime(), *resolution, &cfg)?;
            emit(
                cli,
                vec![
                    csv("basins.csv", to_string(|w| grid.write_csv(w))?),
                    json("area_report.json", &grid.area_report())?,
                ],
            )
        }
        Command::Shocks {
            model,
            grid,
            samples,
            seed,
        } => {
            let p = params(model)?;
            let estimator = match (grid, samples) {
                (Some(n), _) => {
                    check_resolution(*n)?;
                    Estimator::Grid(*n)
                }
                (None, Some(0)) => return Err(usage("--samples must be at least 1")),
                (None, Some(s)) => Estimator::MonteCarlo {
                    samples: *s,
                    seed: *seed,
                },
                (None, None) => return Err(usage("one of --grid or --samples is required")),
            };
            let table = category_table(&p, estimator, &cfg)?;
            emit(
                cli,
                vec![
                    csv("shocks.csv", to_string(|w| table.write_csv(w))?),
                    json("shocks_summary.json", &table.summary())?,
                ],
            )
        }
        Command::Sweep {
            metric,
            nu,
            nu_range,
            q_range,
            resolution,
        } => {
            let nus = match (nu, nu_range) {
                (Some(v), _) => vec![*v],
                (None, Some(r)) => r.0.clone(),
                (None, None) => return Err(usage("one of --nu or --nu-range is required")),
            };
            for &v in &nus {
                for &q in &q_range.0 {
                    EpidemicParams::symmetric_pair(v, q).map_err(|e| usage(e.to_string()))?;
                }
            }
            check_resolution(*resolution)?;
            let rows = sweep(*metric, &nus, &q_range.0, *resolution, &cfg)?;
            let mut body = String::from("q,nu,value\n");
            for r in &rows {
                body.push_str(&format!(
                    "{},{},{}\n",
                    fmt_num(r.q),
                    fmt_num(r.nu),
                    fmt_num(r.value)
                ));
            }
            emit(
                cli,
                vec![csv("sweep.csv", body), json("sweep.json", &rows)?],
            )
        }
        Command::ApproxCompare {
            nu_range,
            q_range,
            resolution,
        } => {
            for &v in &nu_range.0 {
                for &q in &q_range.0 {
                    EpidemicParams::symmetric_pair(v, q).map_err(|e| usage(e.to_string()))?;
                }
            }
            check_resolution(*resolution)?;
            let mut rows = Vec::new();
            for &nu in &nu_range.0 {
                for &q in &q_range.0 {
                    let p = EpidemicParams::symmetric_pair(nu, q)?;
                    let area_numeric = gray_area_ratio(&p, *resolution, &cfg)?.area_to_origin;
                    let area_tilde = area_report_tilde(&p)?;
                    rows.push(CompareRow {
                        q,
                        nu,
                        area_numeric,
                        area_tilde,
                        abs_diff: (area_numeric - area_tilde).abs(),
                    });
                }
            }
            let mut body = String::from("q,nu,area_numeric,area_tilde,abs_diff\n");
            for r in &rows {
                body.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_num(r.q),
                    fmt_num(r.nu),
                    fmt_num(r.area_numeric),
                    fmt_num(r.area_tilde),
                    fmt_num(r.abs_diff)
                ));
            }
            emit(
                cli,
                vec![
                    csv("approx_compare.csv", body),
                    json("approx_compare.json", &rows)?,
                ],
            )
        }
    }
}

/// Long-format rows, `nu` in the outer loop.
fn sweep(
    metric: Metric,
    nus: &[f64],
    qs: &[f64],
    resolution: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<Row>> {
    let mut rows = Vec::with_capacity(nus.len() * qs.len());
    for &nu in nus {
        match metric {
            Metric::Eta | Metric::Zeta => {
                // The sweep sorts by q; look rows up to keep the caller's order.
                let s = eta_zeta_sweep(nu, qs, cfg);
                for &q in qs {
                    let pt = s
                        .points
                        .iter()
                        .find(|pt| pt.q == q)
                        .expect("every q is traced");
                    let value = match &pt.exit {
                        Ok(e) if e.is_eta() == (metric == Metric::Eta) => e.value(),
                        _ => f64::NAN,
                    };
                    rows.push(Row { q, nu, value });
                }
            }
            _ => {
                for &q in qs {
                    let p = EpidemicParams::symmetric_pair(nu, q)?;
                    let value = match metric {
                        Metric::DarkRatio => gray_area_ratio(&p, resolution, cfg)?.dark_ratio,
                        Metric::Area => {
                            classify_grid(&p, &Regime::LinearGlobalized, resolution, cfg)?
                                .area_report()
                                .area_to_origin
                        }
                        Metric::AreaTilde => area_report_tilde(&p)?,
                        Metric::RatioTilde => ratio_tilde(&p)?,
                        Metric::Eta | Metric::Zeta => unreachable!("handled above"),
                    };
                    rows.push(Row { q, nu, value });
                }
            }
        }
    }
    Ok(rows)
}
