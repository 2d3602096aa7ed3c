//! Experiment execution and output emission.

use crate::correlations::CorrelationTable;
use crate::error::Result;
use crate::experiments::config::{ExperimentConfig, ExperimentKind};
use crate::experiments::plot::emit_plot;
use crate::fieldsim::{run_batch, Job, ObservableKind};
use crate::kernels::{kernel_row, lclt_gap, lp_norm, ssrw_kernel, ssrw_kernel_max};
use crate::rng::derive_seed;
use crate::stats::{distance_estimate, fit_rate, standardize, summary};
use crate::variance::{symmetric_regime, var_dn, var_wn, var_y_with};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// One pass/fail verdict recorded in the summary.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: String,
}

impl CriterionResult {
    fn new(name: impl Into<String>, passed: bool, value: f64, threshold: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value,
            threshold: threshold.into(),
        }
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone, Serialize)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub csv_paths: Vec<PathBuf>,
    pub plot_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub criteria: Vec<CriterionResult>,
    pub errors: Vec<String>,
    pub complete: bool,
    pub all_passed: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    all_passed: bool,
    complete: bool,
    criteria: &'a [CriterionResult],
    errors: &'a [String],
    /// provenance: per-table operations and seeds, so every CSV cell traces
    /// back to (module, operation, seed)
    tables: &'a BTreeMap<String, serde_json::Value>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 32 + 64);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Exact mean and variance of a W/D/Y observable at horizon n.
fn exact_moments(
    kind: &ObservableKind,
    n: u64,
    lambda: f64,
    table: &mut CorrelationTable,
) -> Result<(f64, f64)> {
    Ok(match kind {
        ObservableKind::CumulativeOccupation { sites } => (
            n as f64 * lambda * sites.len() as f64,
            var_wn(n, sites, lambda),
        ),
        ObservableKind::DistinctVisitors { sites } => {
            let v = var_dn(n, sites, lambda);
            (v, v) // Poisson count: mean equals variance
        }
        ObservableKind::PathSampled { phi } => {
            let mean = n as f64 * crate::charlier::expectation_poly(phi, lambda)?;
            (mean, var_y_with(table, n, phi, lambda)?)
        }
        ObservableKind::WalkPairSum { .. } => {
            unreachable!("validated out of moment-based experiments")
        }
    })
}

struct Emitter {
    dir: PathBuf,
    csv_paths: Vec<PathBuf>,
    plot_paths: Vec<PathBuf>,
    tables: BTreeMap<String, serde_json::Value>,
}

impl Emitter {
    fn csv(
        &mut self,
        stem: &str,
        header: &[&str],
        rows: &[Vec<String>],
        provenance: serde_json::Value,
    ) -> Result<()> {
        let name = format!("{stem}.csv");
        let path = self.dir.join(&name);
        write_csv(&path, header, rows)?;
        self.csv_paths.push(path);
        self.tables.insert(name, provenance);
        Ok(())
    }

    fn plot(
        &mut self,
        stem: &str,
        series: &[(f64, f64)],
        log_log: bool,
        fit: Option<(f64, f64)>,
    ) -> Result<()> {
        let path = self.dir.join(format!("{stem}.svg"));
        std::fs::write(&path, emit_plot(series, log_log, fit)?)?;
        self.plot_paths.push(path);
        Ok(())
    }
}

/// Run one experiment, writing its bundle into `dir`.
pub fn run_experiment_in(config: &ExperimentConfig, dir: &Path) -> Result<OutputBundle> {
    config.validate()?;
    std::fs::create_dir_all(dir)?;
    let mut emitter = Emitter {
        dir: dir.to_path_buf(),
        csv_paths: Vec::new(),
        plot_paths: Vec::new(),
        tables: BTreeMap::new(),
    };
    let mut criteria = Vec::new();
    let mut errors = Vec::new();

    match config.kind {
        ExperimentKind::VarianceSweep => {
            variance_sweep(config, &mut emitter, &mut criteria, &mut errors)?
        }
        ExperimentKind::CltRate => clt_rate(config, &mut emitter, &mut criteria, &mut errors)?,
        ExperimentKind::SymmetricRegimes => {
            symmetric_regimes(config, &mut emitter, &mut criteria)?
        }
        ExperimentKind::KernelChecks => kernel_checks(config, &mut emitter, &mut criteria)?,
    }

    let complete = errors.is_empty();
    let all_passed = complete && criteria.iter().all(|c| c.passed);
    let summary_path = emitter.dir.join(format!("{}-summary.json", stem_of(config)));
    let doc = Summary {
        config,
        all_passed,
        complete,
        criteria: &criteria,
        errors: &errors,
        tables: &emitter.tables,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    std::fs::write(&summary_path, text)?;

    Ok(OutputBundle {
        dir: emitter.dir,
        csv_paths: emitter.csv_paths,
        plot_paths: emitter.plot_paths,
        summary_path,
        criteria,
        errors,
        complete,
        all_passed,
    })
}

/// Run one experiment; the output directory is the `OUTPUT_DIR` environment
/// variable if set, else the config's `output_dir`, else the working
/// directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<OutputBundle> {
    let dir = std::env::var_os("OUTPUT_DIR")
        .map(PathBuf::from)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    run_experiment_in(config, &dir)
}

fn stem_of(config: &ExperimentConfig) -> String {
    match &config.observable {
        Some(kind) => format!("{}-{}", config.kind.stem(), kind.tag()),
        None => config.kind.stem().to_string(),
    }
}

fn variance_sweep(
    config: &ExperimentConfig,
    emitter: &mut Emitter,
    criteria: &mut Vec<CriterionResult>,
    errors: &mut Vec<String>,
) -> Result<()> {
    let law = config.law()?;
    let kind = config.observable.clone().expect("validated");
    let mut table = CorrelationTable::new(law);
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut seeds = BTreeMap::new();
    for &n in &config.n_grid {
        let seed = derive_seed(config.master_seed, n);
        seeds.insert(format!("N={n}"), serde_json::json!(seed));
        let exact = match exact_moments(&kind, n, config.lambda, &mut table) {
            Ok((_, v)) => v,
            Err(e) => {
                errors.push(format!("N={n}: {e}"));
                continue;
            }
        };
        let job = Job::new(kind.clone(), n, config.lambda, law)?;
        let batch = run_batch(&job, config.replicates, seed);
        let s = summary(&batch.values);
        let z = (s.variance - exact) / s.se_variance;
        rows.push(vec![
            n.to_string(),
            fmt_f64(exact),
            fmt_f64(s.variance),
            fmt_f64(s.se_variance),
            fmt_f64(z),
        ]);
        series.push((n as f64, exact));
        criteria.push(CriterionResult::new(
            format!("variance-z-N{n}"),
            z.abs() <= 4.0,
            z,
            "|z| <= 4",
        ));
    }
    let stem = stem_of(config);
    emitter.csv(
        &stem,
        &["N", "exact_variance", "sample_variance", "se_variance", "z"],
        &rows,
        serde_json::json!({
            "operations": ["variance::var_wn/var_dn/var_y", "fieldsim::run_batch", "stats::summary"],
            "replicates": config.replicates,
            "seeds": seeds,
        }),
    )?;
    if series.len() >= 2 {
        emitter.plot(&stem, &series, true, None)?;
    }
    Ok(())
}

fn clt_rate(
    config: &ExperimentConfig,
    emitter: &mut Emitter,
    criteria: &mut Vec<CriterionResult>,
    errors: &mut Vec<String>,
) -> Result<()> {
    let law = config.law()?;
    let kind = config.observable.clone().expect("validated");
    let mut table = CorrelationTable::new(law);
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut seeds = BTreeMap::new();
    for &n in &config.n_grid {
        let seed = derive_seed(config.master_seed, n);
        seeds.insert(format!("N={n}"), serde_json::json!(seed));
        let job = Job::new(kind.clone(), n, config.lambda, law)?;
        let batch = run_batch(&job, config.replicates, seed);
        let (mean, var) = if config.empirical_standardization {
            let s = summary(&batch.values);
            (s.mean, s.variance)
        } else {
            match exact_moments(&kind, n, config.lambda, &mut table) {
                Ok(mv) => mv,
                Err(e) => {
                    errors.push(format!("N={n}: {e}"));
                    continue;
                }
            }
        };
        let standardized = standardize(&batch.values, mean, var.sqrt());
        match distance_estimate(&standardized, derive_seed(seed, 0xb007)) {
            Ok(est) => {
                rows.push(vec![
                    n.to_string(),
                    fmt_f64(est.d_w),
                    fmt_f64(est.d_k),
                    fmt_f64(est.se_proxy),
                ]);
                points.push((n as f64, est.d_w));
            }
            Err(e) => errors.push(format!("N={n}: {e}")),
        }
    }
    let stem = stem_of(config);
    let mut fit_params = None;
    if points.len() >= 3 {
        match fit_rate(&points) {
            Ok(fit) => {
                criteria.push(CriterionResult::new(
                    "distance-slope-negative",
                    fit.slope < 0.0,
                    fit.slope,
                    "slope < 0",
                ));
                fit_params = Some((fit.slope, fit.intercept));
            }
            Err(e) => errors.push(format!("rate fit: {e}")),
        }
    }
    emitter.csv(
        &stem,
        &["N", "d_w", "d_k", "se_proxy"],
        &rows,
        serde_json::json!({
            "operations": ["fieldsim::run_batch", "stats::distance_estimate", "stats::fit_rate"],
            "replicates": config.replicates,
            "standardization": if config.empirical_standardization { "empirical" } else { "exact" },
            "seeds": seeds,
        }),
    )?;
    if points.len() >= 2 {
        emitter.plot(&stem, &points, true, fit_params)?;
    }
    Ok(())
}

fn symmetric_regimes(
    config: &ExperimentConfig,
    emitter: &mut Emitter,
    criteria: &mut Vec<CriterionResult>,
) -> Result<()> {
    let law = config.law()?;
    let phi = match config.observable.as_ref().expect("validated") {
        ObservableKind::PathSampled { phi } => phi.clone(),
        _ => unreachable!("validated"),
    };
    let regime = symmetric_regime(&phi, config.lambda)?;
    let mut table = CorrelationTable::new(law);
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut exacts = Vec::new();
    for &n in &config.n_grid {
        let exact = var_y_with(&mut table, n, &phi, config.lambda)?;
        let predicted = regime.regime.predicted(regime.constant, n);
        rows.push(vec![
            n.to_string(),
            fmt_f64(exact),
            fmt_f64(predicted),
            fmt_f64(exact / predicted),
        ]);
        series.push((n as f64, exact));
        exacts.push(exact);
    }
    if regime.rank <= 2 {
        let last_ratio = exacts.last().unwrap()
            / regime
                .regime
                .predicted(regime.constant, *config.n_grid.last().unwrap());
        criteria.push(CriterionResult::new(
            format!("rank{}-final-ratio", regime.rank),
            (0.85..=1.15).contains(&last_ratio),
            last_ratio,
            "in [0.85, 1.15]",
        ));
    } else {
        let k = exacts.len();
        let doubling = exacts[k - 1] / exacts[k - 2];
        criteria.push(CriterionResult::new(
            format!("rank{}-doubling-ratio", regime.rank),
            (1.8..=2.2).contains(&doubling),
            doubling,
            "in [1.8, 2.2]",
        ));
    }
    let stem = stem_of(config);
    emitter.csv(
        &stem,
        &["N", "exact", "predicted", "ratio"],
        &rows,
        serde_json::json!({
            "operations": ["variance::var_y", "variance::symmetric_regime"],
            "rank": regime.rank,
            "regime": regime.regime.label(),
            "constant": regime.constant,
            "deterministic": true,
        }),
    )?;
    emitter.plot(&stem, &series, true, None)?;
    Ok(())
}

fn kernel_checks(
    config: &ExperimentConfig,
    emitter: &mut Emitter,
    criteria: &mut Vec<CriterionResult>,
) -> Result<()> {
    let law = config.law()?;
    let n_max = *config.n_grid.last().unwrap();
    let mut rows = Vec::new();
    let push = |criteria: &mut Vec<CriterionResult>,
                    rows: &mut Vec<Vec<String>>,
                    name: &str,
                    value: f64,
                    passed: bool,
                    threshold: &str| {
        rows.push(vec![
            name.to_string(),
            fmt_f64(value),
            threshold.to_string(),
            passed.to_string(),
        ]);
        criteria.push(CriterionResult::new(name, passed, value, threshold));
    };

    let mut worst_sym: f64 = 0.0;
    let mut worst_biased: f64 = 0.0;
    for &n in &config.n_grid {
        worst_sym = worst_sym.max((kernel_row(n, None).mass() - 1.0).abs());
        worst_biased = worst_biased.max((kernel_row(n, Some(law)).mass() - 1.0).abs());
    }
    push(criteria, &mut rows, "row-sum-symmetric", worst_sym, worst_sym <= 1e-12, "<= 1e-12");
    push(criteria, &mut rows, "row-sum-biased", worst_biased, worst_biased <= 1e-12, "<= 1e-12");

    let mut worst_l2: f64 = 0.0;
    for t in 1..=n_max.min(2000) {
        worst_l2 = worst_l2.max((lp_norm(t, 2) - ssrw_kernel(2 * t, 0)).abs());
    }
    push(criteria, &mut rows, "l2-identity", worst_l2, worst_l2 <= 1e-12, "<= 1e-12");

    let mut worst_ck: f64 = 0.0;
    for &(a, b) in &[(3u64, 5u64), (10, 7)] {
        let total = a + b;
        let mut x = -(total as i64);
        while x <= total as i64 {
            let mut conv = 0.0;
            let mut y = -(a as i64);
            while y <= a as i64 {
                conv += ssrw_kernel(a, y) * ssrw_kernel(b, x - y);
                y += 1;
            }
            worst_ck = worst_ck.max((ssrw_kernel(total, x) - conv).abs());
            x += 1;
        }
    }
    push(criteria, &mut rows, "chapman-kolmogorov", worst_ck, worst_ck <= 1e-12, "<= 1e-12");

    let mut worst_mode: f64 = 0.0;
    for n in 1..=n_max.min(10_000) {
        worst_mode = worst_mode.max(ssrw_kernel_max(n) * (n as f64).sqrt());
    }
    push(criteria, &mut rows, "mode-envelope", worst_mode, worst_mode <= 2.0, "<= 2");

    let coarse = lclt_gap((n_max / 64).max(2));
    let fine = lclt_gap(n_max);
    push(criteria, &mut rows, "lclt-gap-decreasing", fine, fine < coarse, "gap(N) < gap(N/64)");

    let stem = stem_of(config);
    emitter.csv(
        &stem,
        &["check", "value", "threshold", "passed"],
        &rows,
        serde_json::json!({
            "operations": ["kernels::kernel_row", "kernels::lp_norm", "kernels::lclt_gap"],
            "deterministic": true,
        }),
    )?;
    // gap decay curve over the grid
    let series: Vec<(f64, f64)> = config
        .n_grid
        .iter()
        .map(|&n| (n as f64, lclt_gap(n.max(1))))
        .collect();
    if series.len() >= 2 {
        emitter.plot(&stem, &series, true, None)?;
    }
    Ok(())
}
