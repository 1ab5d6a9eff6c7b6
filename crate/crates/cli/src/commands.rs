use std::fs;
use std::io::Write;
use std::path::Path;

use growthlab::estimators::collapse::{pooled_curve, rescale_series};
use growthlab::estimators::{fit_gamma_tls, CollapseOptions, DayWeighting, TlsOptions};
use growthlab::experiment::{collapse_check, compare_prediction, inverse_uniform_beta_grid, run_sweep, PredictionOptions, SweepConfig};
use growthlab::ingest::{export_events_csv, snapshots_to_events};
use growthlab::sampler::{log_uniform_schedule, synthesize_series};
use growthlab::table::{format_sig, write_histograms, write_snapshots, write_sweep};
use growthlab::theory::{gamma_of_beta, theta_of_gamma, unbounded_sum_exponent};
use growthlab::{Protocol, SamplerConfig};
use serde::Serialize;

use crate::input::{self, Input};
use crate::manifest::RunManifest;
use crate::{plots, Cli, CollapseFlags, Command, Failure, ProtocolArg};

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn table<F>(f: F) -> Result<Vec<u8>, Failure>
where
    F: FnOnce(&mut Vec<u8>) -> growthlab::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Failure::Internal(e.to_string()))?;
    Ok(buf)
}

fn parameters<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialise")
}

fn emit_manifest(cli: &Cli, m: &RunManifest, dir: Option<&Path>) -> Result<(), Failure> {
    let json = m.to_json();
    match (&cli.manifest, dir) {
        (Some(p), _) => write_file(p, json.as_bytes()),
        (None, Some(d)) => write_file(&d.join("manifest.json"), json.as_bytes()),
        (None, None) => {
            eprint!("{json}");
            Ok(())
        }
    }
}

fn protocol(arg: ProtocolArg, upper: Option<f64>) -> Result<Protocol, Failure> {
    match (arg, upper) {
        (ProtocolArg::Fixed, Some(u)) => Ok(Protocol::FixedTruncation { upper_cutoff: u }),
        (ProtocolArg::Fixed, None) => Err(Failure::Usage("--protocol fixed needs --upper".into())),
        (_, Some(_)) => Err(Failure::Usage("--upper only applies to --protocol fixed".into())),
        (ProtocolArg::Coupled, None) => Ok(Protocol::CoupledTruncation),
        (ProtocolArg::Unbounded, None) => Ok(Protocol::Unbounded),
    }
}

fn collapse_options(flags: CollapseFlags, bootstrap: usize, seed: u64) -> CollapseOptions {
    CollapseOptions {
        bins_per_decade: flags.bins_per_decade as usize,
        weighting: if flags.pooled_counts { DayWeighting::PooledCounts } else { DayWeighting::PerDay },
        bootstrap_reps: bootstrap,
        seed,
    }
}

fn load(path: &Path, m: &mut RunManifest) -> Result<Input, Failure> {
    let input = input::load(path)?;
    m.add_input(&input.path, &input.bytes);
    Ok(input)
}

pub fn run(cli: &Cli, args: &[String]) -> Result<(), Failure> {
    let out = &mut std::io::stdout().lock();
    match &cli.command {
        Command::Simulate(a) => {
            if a.pmin == 0 || a.pmin > a.pmax {
                return Err(Failure::Usage(format!("need 1 <= --pmin <= --pmax, got {} and {}", a.pmin, a.pmax)));
            }
            let protocol = protocol(a.protocol, a.upper)?;
            let m = RunManifest::new("simulate", args, parameters(a));
            let cfg = SamplerConfig::new(a.beta, a.c).with_integerize(a.integerize).with_seed(a.seed);
            cfg.validate()?;
            let schedule = log_uniform_schedule(a.days as usize, a.pmin, a.pmax, a.seed)?;
            let series = synthesize_series(&schedule, &cfg, protocol)?;
            if a.integerize {
                let events = snapshots_to_events(&series.days)?;
                write_file(&a.out.join("events.csv"), &table(|b| export_events_csv(&events, b))?)?;
            }
            write_file(&a.out.join("snapshots.tsv"), &table(|b| write_snapshots(&series.days, b))?)?;
            write_file(&a.out.join("histograms.tsv"), &table(|b| write_histograms(&series.days, b))?)?;
            emit_manifest(cli, &m, Some(&a.out))?;
            write!(out, "{}", m.to_json()).map_err(io)?;
        }
        Command::Fit(a) => {
            let mut m = RunManifest::new("fit", args, parameters(a));
            let points = load(&a.input, &mut m)?.data.growth_points();
            let fit = fit_gamma_tls(&points, &TlsOptions { bootstrap_reps: a.bootstrap, seed: a.seed })?;
            writeln!(out, "gamma\ttheta\tci95_low\tci95_high\tadj_r2\tdays").map_err(io)?;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                format_sig(fit.slope),
                format_sig(theta_of_gamma(fit.slope)),
                format_sig(fit.ci95_slope.0),
                format_sig(fit.ci95_slope.1),
                format_sig(fit.adjusted_r2),
                fit.n_points
            )
            .map_err(io)?;
            if let Some(svg) = &a.svg {
                write_file(svg, plots::growth_scatter(&points, &fit).as_bytes())?;
            }
            emit_manifest(cli, &m, None)?;
        }
        Command::Predict(a) => {
            let mut m = RunManifest::new("predict", args, parameters(a));
            let days = load(&a.input, &mut m)?.data.days("predict")?;
            let opts = PredictionOptions {
                collapse: collapse_options(a.collapse, a.bootstrap, a.seed),
                tls: TlsOptions { bootstrap_reps: a.bootstrap, seed: a.seed },
            };
            let p = compare_prediction(&days, &opts)?;
            writeln!(out, "beta_hat\tgamma_prime\tgamma\tci95_low\tci95_high\tconsistent\tdays").map_err(io)?;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                format_sig(p.beta_fit.beta),
                format_sig(p.gamma_theory),
                format_sig(p.gamma_fit.slope),
                format_sig(p.gamma_fit.ci95_slope.0),
                format_sig(p.gamma_fit.ci95_slope.1),
                if p.consistent { "yes" } else { "no" },
                days.len()
            )
            .map_err(io)?;
            emit_manifest(cli, &m, None)?;
        }
        Command::Collapse(a) => {
            let mut m = RunManifest::new("collapse", args, parameters(a));
            let days = load(&a.input, &mut m)?.data.days("collapse")?;
            let opts = collapse_options(a.collapse, a.bootstrap, a.seed);
            let report = collapse_check(&days, a.beta, &opts)?;
            let b = &report.beta_fit;
            writeln!(out, "beta\tci95_low\tci95_high\tadj_r2\tdays\tscored").map_err(io)?;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                format_sig(b.beta),
                format_sig(b.ci95_beta.0),
                format_sig(b.ci95_beta.1),
                format_sig(report.adjusted_r2),
                report.n_days,
                a.beta.map_or("fit".to_string(), |h| format!("beta={}", format_sig(h)))
            )
            .map_err(io)?;
            if let Some(svg) = &a.svg {
                let curve = pooled_curve(&rescale_series(&days)?, &opts)?;
                write_file(svg, plots::collapse_plot(&days, &curve, a.beta.unwrap_or(b.beta)).as_bytes())?;
            }
            emit_manifest(cli, &m, None)?;
        }
        Command::Sweep(a) => {
            let protocol = protocol(a.protocol, a.upper)?;
            let betas = match &a.beta_grid {
                Some(g) => g.clone(),
                None if a.n_beta == 0 => return Err(Failure::Usage("--n-beta must be at least 1".into())),
                None => inverse_uniform_beta_grid(a.n_beta),
            };
            let cs = a.c_grid.clone().unwrap_or_else(|| (1..=10).map(f64::from).collect());
            if betas.is_empty() || cs.is_empty() {
                return Err(Failure::Usage("sweep grid is empty".into()));
            }
            if let Some(b) = betas.iter().find(|b| !(**b > 1.0 && b.is_finite())) {
                return Err(Failure::Usage(format!("every beta must be > 1, got {b}")));
            }
            if let Some(c) = cs.iter().find(|c| !(**c >= 1.0 && c.is_finite())) {
                return Err(Failure::Usage(format!("every C must be >= 1, got {c}")));
            }
            let cfg = SweepConfig {
                c_values: cs.clone(),
                beta_values: betas.clone(),
                days_per_cell: a.days,
                population_range: (a.pmin, a.pmax),
                protocol,
                bootstrap_reps: a.bootstrap,
                seed: a.seed,
            };
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let m = RunManifest::new("sweep", args, parameters(a));
            let cells = run_sweep(&cfg)?;
            write_file(&a.out.join("sweep.tsv"), &table(|b| write_sweep(&cells, b))?)?;
            if let Some(svg) = &a.svg {
                write_file(svg, plots::sweep_plot(&cells, &cs).as_bytes())?;
            }
            let ok = cells.iter().filter(|c| c.result.is_ok()).count();
            writeln!(out, "cells {}, fitted {ok}, failed {}", cells.len(), cells.len() - ok).map_err(io)?;
            // growth law, and the exponent of a sum of iid draws with no cutoff
            writeln!(out, "beta\tgamma_theory\tunbounded_sum\tmedian_gamma_fit\tcells_ok").map_err(io)?;
            for &beta in &betas {
                let mut g: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.beta == beta)
                    .filter_map(|c| c.result.as_ref().ok().map(|f| f.gamma_fit))
                    .collect();
                g.sort_by(f64::total_cmp);
                let median = match g.len() {
                    0 => f64::NAN,
                    n if n % 2 == 1 => g[n / 2],
                    n => 0.5 * (g[n / 2 - 1] + g[n / 2]),
                };
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    format_sig(beta),
                    format_sig(gamma_of_beta(beta)?),
                    format_sig(unbounded_sum_exponent(beta)?),
                    format_sig(median),
                    g.len()
                )
                .map_err(io)?;
            }
            emit_manifest(cli, &m, Some(&a.out))?;
        }
        Command::Report(a) => {
            let mut m = RunManifest::new("report", args, parameters(a));
            let data = load(&a.input, &mut m)?.data;
            let fit = fit_gamma_tls(&data.growth_points(), &TlsOptions { bootstrap_reps: a.bootstrap, seed: a.seed })?;
            writeln!(out, "# growth").map_err(io)?;
            writeln!(out, "gamma\ttheta\tci95_low\tci95_high\tadj_r2\tdays").map_err(io)?;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                format_sig(fit.slope),
                format_sig(theta_of_gamma(fit.slope)),
                format_sig(fit.ci95_slope.0),
                format_sig(fit.ci95_slope.1),
                format_sig(fit.adjusted_r2),
                fit.n_points
            )
            .map_err(io)?;
            match data {
                input::Loaded::Totals(_) => {
                    writeln!(out, "# collapse and prediction need per-user activity; input has totals only").map_err(io)?;
                }
                input::Loaded::Days(days) => {
                    let copts = collapse_options(a.collapse, a.bootstrap, a.seed);
                    let c = collapse_check(&days, None, &copts)?;
                    writeln!(out, "# collapse").map_err(io)?;
                    writeln!(out, "beta\tci95_low\tci95_high\tadj_r2\tdays").map_err(io)?;
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}",
                        format_sig(c.beta_fit.beta),
                        format_sig(c.beta_fit.ci95_beta.0),
                        format_sig(c.beta_fit.ci95_beta.1),
                        format_sig(c.adjusted_r2),
                        c.n_days
                    )
                    .map_err(io)?;
                    let gamma_prime = gamma_of_beta(c.beta_fit.beta)?;
                    let (lo, hi) = fit.ci95_slope;
                    writeln!(out, "# prediction").map_err(io)?;
                    writeln!(out, "beta_hat\tgamma_prime\tgamma\tci95_low\tci95_high\tconsistent").map_err(io)?;
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}\t{}",
                        format_sig(c.beta_fit.beta),
                        format_sig(gamma_prime),
                        format_sig(fit.slope),
                        format_sig(lo),
                        format_sig(hi),
                        if lo <= gamma_prime && gamma_prime <= hi { "yes" } else { "no" }
                    )
                    .map_err(io)?;
                }
            }
            emit_manifest(cli, &m, None)?;
        }
        Command::Replay(a) => {
            let recorded = RunManifest::read(&a.manifest_file)?;
            recorded.verify_inputs()?;
            let argv = std::iter::once(env!("CARGO_BIN_NAME").to_string()).chain(recorded.args.iter().cloned());
            let inner = crate::parse(argv.map(Into::into)).map_err(|e| Failure::Data(format!("manifest arguments do not parse: {e}")))?;
            if matches!(inner.command, Command::Replay(_)) {
                return Err(Failure::Data("a manifest cannot record a replay".into()));
            }
            return run(&inner, &recorded.args);
        }
    }
    Ok(())
}

fn io(e: std::io::Error) -> Failure {
    Failure::Internal(format!("cannot write output: {e}"))
}
