//! Execution of one configured experiment into a run directory.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use kahler::balanced::{self, IterationOptions};
use kahler::bergman::{bergman_density, density_integral, dim_h0, fs_density_scaled, gram};
use kahler::functionals::{s2_explicit, s_j, tilde_s_bc, tilde_s_path, FunctionalLedger};
use kahler::futaki::{invariant_row, lu_lemma_defect, FieldSpec};
use kahler::{build_metric, radial_rule, RadialKahlerMetric, RadialPotential, RadialQuadrature};
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, Window};
use crate::error::{CliError, Context, Result};
use crate::fit::{fit_expansion, FitResult};
use crate::output::{fmt_f64, input_entry, timestamp, RunDir, RunManifest, Table, MANIFEST_NAME};
use crate::suite::{verify_suite, SuiteOptions};

/// Runs the experiment, writes its artifacts and the manifest, and returns
/// the manifest. `inputs` are files whose checksums are recorded.
pub fn run_experiment(config: &ExperimentConfig, inputs: &[PathBuf]) -> Result<RunManifest> {
    config.validate()?;
    let started = timestamp();
    let root = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(config.kind.name()));
    let run = RunDir::create(&root)?;
    let window = config.window();
    let mut seeds = vec![];
    let outcome = match config.kind {
        ExperimentKind::Bergman => bergman(config, window, &run),
        ExperimentKind::Partition => partition(config, window, &run),
        ExperimentKind::Functionals => functionals(config, window, &run),
        ExperimentKind::Futaki => futaki(config, window, &run),
        ExperimentKind::Balanced => balanced_runs(config, window, &run),
        ExperimentKind::Fit => fit_samples(config, &run),
        ExperimentKind::Verify => {
            let opts = SuiteOptions::new(config.tolerance_profile);
            seeds.push(opts.seed);
            let report = verify_suite(&opts);
            run.write_json("report.json", &report)?;
            let failures = report.failures();
            if failures > 0 {
                Err(CliError::VerificationFailed(failures))
            } else {
                Ok(())
            }
        }
    };
    let mut input_checksums = vec![];
    for p in inputs {
        input_checksums.push(input_entry(p)?);
    }
    let manifest = RunManifest {
        config: config.clone(),
        input_checksums,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: timestamp(),
        files: run.list_files()?,
        seeds,
    };
    run.write_json(MANIFEST_NAME, &manifest)?;
    outcome.map(|_| manifest)
}

fn rule_for(window: Window) -> Result<Arc<RadialQuadrature>> {
    Ok(Arc::new(
        radial_rule(window.radial_order).context(|| "radial_order".into())?,
    ))
}

fn metric_for(p: &RadialPotential, rule: &Arc<RadialQuadrature>, i: usize) -> Result<RadialKahlerMetric> {
    build_metric(p, rule).context(|| format!("potentials[{i}]"))
}

fn bergman(config: &ExperimentConfig, window: Window, run: &RunDir) -> Result<()> {
    let rule = rule_for(window)?;
    let n = config.n;
    let fs = metric_for(&RadialPotential::zero(n), &rule, 0)?;
    let scale = (2.0 * PI).powi(n as i32);
    let mut t = Table::new(&[
        "potential",
        "k",
        "d_k",
        "log_det",
        "log_ratio",
        "scaled_density_min",
        "scaled_density_max",
        "fs_scaled_density",
        "integral_defect",
    ]);
    for (i, p) in config.potentials_or_default().iter().enumerate() {
        let m = metric_for(p, &rule, i)?;
        for k in window.ks() {
            let ctx = || format!("potentials[{i}], k = {k}");
            let g = gram(&m, k, &rule).context(ctx)?;
            let g0 = gram(&fs, k, &rule).context(ctx)?;
            let rho = bergman_density(&m, k, &g).context(ctx)?;
            let d = dim_h0(n, k).context(ctx)? as f64;
            let integral = density_integral(&m, &rho).context(ctx)?;
            let (lo, hi) = rho
                .field
                .values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            t.push(vec![
                i.to_string(),
                k.to_string(),
                format!("{d}"),
                fmt_f64(g.log_det),
                fmt_f64(g.log_det - g0.log_det),
                fmt_f64(scale * lo),
                fmt_f64(scale * hi),
                fmt_f64(fs_density_scaled(n, k)),
                fmt_f64((integral - d).abs()),
            ]);
        }
    }
    run.write_csv("bergman.csv", &t)
}

/// Per-k data of a partition-function sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub k: usize,
    pub d_k: f64,
    pub log_ratio: f64,
    /// (2 pi)^n (log Z_k[phi] - log Z_k[0])
    pub value: f64,
    /// k d_k (2 pi)^n S_0[phi, 0]
    pub known: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFit {
    pub fit: FitResult,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s1_relative_error: f64,
    pub s2_relative_error: f64,
}

pub fn partition_sweep(
    potential: &RadialPotential,
    ks: &[usize],
    rule: &Arc<RadialQuadrature>,
    terms: usize,
) -> Result<(Vec<SweepPoint>, SweepFit)> {
    let n = potential.n;
    let m = build_metric(potential, rule).context(|| "potential".into())?;
    let fs = build_metric(&RadialPotential::zero(n), rule).context(|| "reference".into())?;
    let s = |j: usize| s_j(&m, &fs, j).map(|l| l.value).context(|| format!("S_{j}"));
    let (s0, s1, s2) = (s(0)?, s(1)?, s(2)?);
    let scale = (2.0 * PI).powi(n as i32);
    let mut pts = vec![];
    for &k in ks {
        let ctx = || format!("k = {k}");
        let lr = kahler::bergman::log_partition_ratio(&m, &fs, k, rule).context(ctx)?;
        let d = dim_h0(n, k).context(ctx)? as f64;
        pts.push(SweepPoint {
            k,
            d_k: d,
            log_ratio: lr,
            value: scale * lr,
            known: k as f64 * d * scale * s0,
        });
    }
    let samples: Vec<(f64, f64)> = pts.iter().map(|p| (p.k as f64, p.value)).collect();
    let known: Vec<f64> = pts.iter().map(|p| p.known).collect();
    let fit = fit_expansion(&samples, n, terms, &known)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let out = SweepFit {
        s1_relative_error: rel(fit.coefficients[0], s1),
        s2_relative_error: if terms >= 1 { rel(fit.coefficients[1], s2) } else { f64::NAN },
        fit,
        s0,
        s1,
        s2,
    };
    Ok((pts, out))
}

fn partition(config: &ExperimentConfig, window: Window, run: &RunDir) -> Result<()> {
    let rule = rule_for(window)?;
    let mut t = Table::new(&["potential", "k", "d_k", "log_ratio", "value", "known", "residual"]);
    let mut fits = vec![];
    for (i, p) in config.potentials_or_default().iter().enumerate() {
        let (pts, fit) = partition_sweep(p, &window.ks(), &rule, config.fit_terms)
            .map_err(|e| CliError::Format(format!("potentials[{i}]: {e}")))?;
        for (pt, r) in pts.iter().zip(&fit.fit.residuals) {
            t.push(vec![
                i.to_string(),
                pt.k.to_string(),
                format!("{}", pt.d_k),
                fmt_f64(pt.log_ratio),
                fmt_f64(pt.value),
                fmt_f64(pt.known),
                fmt_f64(*r),
            ]);
        }
        fits.push(fit);
    }
    run.write_csv("partition.csv", &t)?;
    run.write_json("fit.json", &fits)
}

fn functionals(config: &ExperimentConfig, window: Window, run: &RunDir) -> Result<()> {
    let rule = rule_for(window)?;
    let n = config.n;
    let fs = metric_for(&RadialPotential::zero(n), &rule, 0)?;
    let mut t = Table::new(&["potential", "j", "route", "normalized", "value", "path_refinement", "endpoints_sha256"]);
    let mut ledgers: Vec<FunctionalLedger> = vec![];
    let mut push = |t: &mut Table, i: usize, normalized: bool, l: FunctionalLedger| {
        let route = serde_json::to_value(l.route).ok().and_then(|v| v.as_str().map(String::from));
        t.push(vec![
            i.to_string(),
            l.j.to_string(),
            route.unwrap_or_default(),
            normalized.to_string(),
            fmt_f64(l.value),
            l.residuals.path_refinement.map(fmt_f64).unwrap_or_default(),
            l.endpoints_checksum.clone(),
        ]);
        ledgers.push(l);
    };
    for (i, p) in config.potentials_or_default().iter().enumerate() {
        let m = metric_for(p, &rule, i)?;
        for j in window.k_min..=window.k_max {
            let ctx = || format!("potentials[{i}], j = {j}");
            push(&mut t, i, false, tilde_s_path(&m, &fs, j).context(ctx)?);
            if j > 0 {
                push(&mut t, i, false, tilde_s_bc(&m, &fs, j).context(ctx)?);
            }
            push(&mut t, i, true, s_j(&m, &fs, j).context(ctx)?);
            if j == 2 {
                push(&mut t, i, true, s2_explicit(&m, &fs).context(ctx)?);
            }
        }
    }
    run.write_csv("functionals.csv", &t)?;
    run.write_json("ledger.json", &ledgers)
}

fn futaki(config: &ExperimentConfig, window: Window, run: &RunDir) -> Result<()> {
    let rule = rule_for(window)?;
    let mut t = Table::new(&["potential", "j", "lhs", "rhs", "defect", "lu_lemma_defect"]);
    for (i, p) in config.potentials_or_default().iter().enumerate() {
        let m = metric_for(p, &rule, i)?;
        let lu = lu_lemma_defect(&m, FieldSpec::Rotation);
        for j in window.k_min..=window.k_max {
            let row = invariant_row(&m, FieldSpec::Rotation, j).context(|| format!("potentials[{i}], j = {j}"))?;
            t.push(vec![
                i.to_string(),
                j.to_string(),
                fmt_f64(row.lhs),
                fmt_f64(row.rhs),
                fmt_f64(row.defect),
                fmt_f64(lu),
            ]);
        }
    }
    run.write_csv("futaki.csv", &t)
}

#[derive(Debug, Clone, Serialize)]
struct BalancedSummary {
    potential_index: usize,
    k: usize,
    converged: bool,
    iterations: usize,
    last_defect: f64,
    round_trip_distance: f64,
    distance_to_reference: Option<f64>,
    trace_file: String,
    balanced_potential: Option<RadialPotential>,
}

fn balanced_runs(config: &ExperimentConfig, window: Window, run: &RunDir) -> Result<()> {
    let rule = rule_for(window)?;
    let opts = IterationOptions {
        max_iter: config.balanced.max_iter,
        tol: config.balanced.tol,
        acceleration: config.balanced.acceleration,
    };
    let mut summaries = vec![];
    for (i, p) in config.potentials_or_default().iter().enumerate() {
        for k in window.ks() {
            let ctx = || format!("potentials[{i}], k = {k}");
            let round_trip = balanced::round_trip_distance(p, k, &rule).context(ctx)?;
            let (defects, potential) = match balanced::t_iteration(p, k, &rule, opts) {
                Ok(res) => (res.trace.defects, Some(res.potential)),
                Err(kahler::Error::NotConverged { defects, .. }) => (defects, None),
                Err(e) => return Err(e).context(ctx),
            };
            let name = format!("trace_p{i}_k{k}.csv");
            let mut t = Table::new(&["iter", "defect"]);
            for (it, d) in defects.iter().enumerate() {
                t.push(vec![it.to_string(), fmt_f64(*d)]);
            }
            run.write_csv(&name, &t)?;
            let distance = match &potential {
                Some(b) => Some(balanced::distance_to_reference(b, &rule).context(ctx)?),
                None => None,
            };
            summaries.push(BalancedSummary {
                potential_index: i,
                k,
                converged: potential.is_some(),
                iterations: defects.len().saturating_sub(1),
                last_defect: defects.last().copied().unwrap_or(f64::NAN),
                round_trip_distance: round_trip,
                distance_to_reference: distance,
                trace_file: name,
                balanced_potential: potential,
            });
        }
    }
    run.write_json("balanced.json", &summaries)
}

/// Reads (k, value[, known]) rows with a header line.
pub fn read_samples(path: &Path) -> Result<(Vec<(f64, f64)>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let mut samples = vec![];
    let mut known = vec![];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| CliError::Format(format!("{} row {}: missing column {i}", path.display(), line + 2)))?
                .trim()
                .parse()
                .map_err(|e| CliError::Format(format!("{} row {}: {e}", path.display(), line + 2)))
        };
        samples.push((field(0)?, field(1)?));
        known.push(if rec.len() > 2 { field(2)? } else { 0.0 });
    }
    Ok((samples, known))
}

fn fit_samples(config: &ExperimentConfig, run: &RunDir) -> Result<()> {
    let path = config.samples.as_ref().ok_or_else(|| CliError::Config(vec!["samples: required for fit".into()]))?;
    let (samples, known) = read_samples(path)?;
    let fit = fit_expansion(&samples, config.n, config.fit_terms, &known)?;
    let mut t = Table::new(&["k", "residual"]);
    for (k, r) in fit.ks.iter().zip(&fit.residuals) {
        t.push(vec![format!("{k}"), fmt_f64(*r)]);
    }
    run.write_csv("fit_residuals.csv", &t)?;
    run.write_json("fit.json", &fit)
}
