//! End-to-end runs: grid theory, simulated experiment, analysis of scan files.
//!
//! Each run has an in-memory form returning the full result and a `run_*`
//! form that also writes its artifacts under `cfg.output_dir`. Artifacts are
//! rendered completely before the first file is written, so a failing run
//! leaves no partial output.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::apparatus::{
    add_wings, expected_scan, fit_background, sample_counts, scan_variance, slit_correction, ScanMode,
    ScanPlaneDensity, ScanResult,
};
use crate::config::RunConfig;
use crate::criteria::{
    inferred_momentum_variance, inferred_position_variance, theory_predictions, CriteriaReport, Provenance,
};
use crate::engine::{Axis, Density1D, FactorGrids, FactorizedAmplitude, FactorizedDensity};
use crate::error::Result;
use crate::io::{self, ReportDoc, ScanData};
use crate::model::BiphotonModel;

/// Position and momentum densities of the model on its production grids.
pub fn factorized_densities(cfg: &RunConfig, model: &BiphotonModel) -> Result<(FactorizedDensity, FactorizedDensity)> {
    let grids = FactorGrids::for_model(model, cfg.oversample)?.with_min_n(cfg.min_n)?;
    let amp = FactorizedAmplitude::from_model(model, &grids);
    let momentum = amp.density()?;
    let position = amp.to_position().density()?;
    Ok((position, momentum))
}

#[derive(Debug, Clone)]
pub struct TheoryOutput {
    pub report: CriteriaReport,
    /// `P(x1 | x2)` with `x2` attached as the conditioning value.
    pub position_conditional: Density1D,
    /// `P(p1 | p2)`.
    pub momentum_conditional: Density1D,
}

pub fn theory(cfg: &RunConfig) -> Result<TheoryOutput> {
    cfg.validate()?;
    let model = cfg.model()?;
    let (position, momentum) = factorized_densities(cfg, &model)?;

    let x2 = match cfg.condition_x2_mm {
        Some(x) => x,
        None => position.singles_marginal(Axis::Two)?.argmax(),
    };
    let p2 = match cfg.condition_p2_radpermm {
        Some(p) => p,
        None => momentum.singles_marginal(Axis::Two)?.argmax(),
    };
    let position_conditional = position.conditional(Axis::Two, x2)?;
    let momentum_conditional = momentum.conditional(Axis::Two, p2)?;
    let report = CriteriaReport::from_variances(
        inferred_position_variance(&position_conditional)?,
        inferred_momentum_variance(&momentum_conditional)?,
        position.linear_combo_variance(1.0, -1.0),
        momentum.linear_combo_variance(1.0, 1.0),
        theory_predictions(&model)?,
        Provenance::TheoryGrid,
    )?;
    Ok(TheoryOutput {
        report,
        position_conditional,
        momentum_conditional,
    })
}

/// Variance of one scan before and after the slit correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmAnalysis {
    /// After optional background subtraction; mm² or (rad/mm)².
    pub variance_uncorrected: f64,
    pub variance: f64,
    pub background: Option<Vec<f64>>,
}

pub fn analyze_arm(sr: &ScanResult, cfg: &RunConfig) -> Result<ArmAnalysis> {
    let variance_uncorrected = scan_variance(sr, true, cfg.background_subtraction)?;
    let variance = if cfg.slit_correction {
        slit_correction(variance_uncorrected, cfg.slit_width_mm * sr.mapping_scale)?
    } else {
        variance_uncorrected
    };
    let background = if cfg.background_subtraction {
        let counts: Vec<f64> = sr
            .counts
            .as_ref()
            .expect("scan_variance succeeded on counts")
            .iter()
            .map(|&c| c as f64)
            .collect();
        Some(fit_background(&sr.positions_mm, &counts)?)
    } else {
        None
    };
    Ok(ArmAnalysis {
        variance_uncorrected,
        variance,
        background,
    })
}

#[derive(Debug, Clone)]
pub struct ScanAnalysis {
    pub report: CriteriaReport,
    pub position: ArmAnalysis,
    pub momentum: ArmAnalysis,
}

/// Inferred widths from a pair of scans. Slit scans only sample the
/// conditional distributions, so the joint widths reported are the inferred
/// ones.
pub fn analyze_scans(
    cfg: &RunConfig,
    position_scan: &ScanResult,
    momentum_scan: &ScanResult,
    provenance: Provenance,
) -> Result<ScanAnalysis> {
    let position = analyze_arm(position_scan, cfg).map_err(|e| e.context("position scan"))?;
    let momentum = analyze_arm(momentum_scan, cfg).map_err(|e| e.context("momentum scan"))?;
    let report = CriteriaReport::from_variances(
        position.variance,
        momentum.variance,
        position.variance,
        momentum.variance,
        theory_predictions(&cfg.model()?)?,
        provenance,
    )?;
    Ok(ScanAnalysis {
        report,
        position,
        momentum,
    })
}

/// One simulated scan: expected rates, wings, Poisson counts.
pub fn simulate_scan(fd: &FactorizedDensity, cfg: &RunConfig, mode: ScanMode, k: f64) -> Result<ScanResult> {
    let scfg = cfg.scan_config(mode);
    let plane = ScanPlaneDensity::from_factorized(fd, &scfg, k)?;
    let expected = expected_scan(&plane, &scfg)?;
    Ok(sample_counts(&add_wings(&expected, &scfg), &scfg))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub position_scan: ScanResult,
    pub momentum_scan: ScanResult,
    pub analysis: ScanAnalysis,
}

pub fn experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let model = cfg.model()?;
    let (position, momentum) = factorized_densities(cfg, &model)?;
    let k = model.k_degenerate();
    let position_scan = simulate_scan(&position, cfg, ScanMode::Position, k).map_err(|e| e.context("position scan"))?;
    let momentum_scan = simulate_scan(&momentum, cfg, ScanMode::Momentum, k).map_err(|e| e.context("momentum scan"))?;
    let analysis = analyze_scans(cfg, &position_scan, &momentum_scan, Provenance::SimulatedScan)?;
    Ok(ExperimentOutput {
        position_scan,
        momentum_scan,
        analysis,
    })
}

/// Wraps scan-file columns as a scan result. A missing mapping comment
/// falls back to `k/f` from the configuration.
pub fn scan_from_data(data: ScanData, mode: ScanMode, cfg: &RunConfig) -> Result<ScanResult> {
    let k = cfg.model()?.k_degenerate();
    let mut scfg = cfg.scan_config(mode);
    let n = data.positions_mm.len();
    if n >= 2 {
        scfg.scan_start_mm = data.positions_mm[0];
        scfg.scan_step_mm = (data.positions_mm[n - 1] - data.positions_mm[0]) / (n - 1) as f64;
    }
    scfg.scan_points = n;
    Ok(ScanResult {
        mode,
        mapping_scale: data.mapping_scale.unwrap_or_else(|| scfg.mapping_scale(k)),
        positions_mm: data.positions_mm,
        expected_rate: data.expected_rate,
        counts: Some(data.counts),
        fixed_slit_mm: None,
        wing_sigma_mm: None,
        config: scfg,
    })
}

pub fn analyze(cfg: &RunConfig, position_file: &Path, momentum_file: &Path) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let position_scan = scan_from_data(io::read_scan_csv(position_file)?, ScanMode::Position, cfg)?;
    let momentum_scan = scan_from_data(io::read_scan_csv(momentum_file)?, ScanMode::Momentum, cfg)?;
    let analysis = analyze_scans(cfg, &position_scan, &momentum_scan, Provenance::ExternalData)?;
    Ok(ExperimentOutput {
        position_scan,
        momentum_scan,
        analysis,
    })
}

/// Report lines: criteria fields, extras, seed, then the resolved config.
pub fn report_doc(report: &CriteriaReport, cfg: &RunConfig, extras: &[(&str, f64)]) -> ReportDoc {
    let mut doc = ReportDoc::new();
    doc.push_fields("", report);
    doc.push("epr_margin_log10", report.epr_margin.log10());
    doc.push("mancini_margin_log10", report.mancini_margin.log10());
    for (k, v) in extras {
        doc.push(*k, *v);
    }
    doc.push("seed", cfg.seed);
    for (k, v) in cfg.echo() {
        doc.push(format!("config.{k}"), v);
    }
    doc
}

fn report_files(doc: &ReportDoc, prefix: &str) -> Vec<(String, String)> {
    vec![
        (format!("{prefix}report.txt"), doc.to_text()),
        (format!("{prefix}report.json"), doc.to_json()),
    ]
}

fn theory_files(out: &TheoryOutput, cfg: &RunConfig, prefix: &str) -> Vec<(String, String)> {
    let doc = report_doc(
        &out.report,
        cfg,
        &[
            ("conditioning_x2_mm", out.position_conditional.conditioning().unwrap_or(f64::NAN)),
            ("conditioning_p2_radpermm", out.momentum_conditional.conditioning().unwrap_or(f64::NAN)),
        ],
    );
    let mut files = report_files(&doc, prefix);
    files.push((
        format!("{prefix}conditional_position.csv"),
        io::format_density_csv(&out.position_conditional, "x1_mm"),
    ));
    files.push((
        format!("{prefix}conditional_momentum.csv"),
        io::format_density_csv(&out.momentum_conditional, "p1_radpermm"),
    ));
    files
}

fn experiment_doc(out: &ExperimentOutput, cfg: &RunConfig) -> ReportDoc {
    report_doc(
        &out.analysis.report,
        cfg,
        &[
            ("position_variance_uncorrected_mm2", out.analysis.position.variance_uncorrected),
            ("momentum_variance_uncorrected_invmm2", out.analysis.momentum.variance_uncorrected),
        ],
    )
}

fn plot_files(out: &ExperimentOutput, prefix: &str) -> Vec<(String, String)> {
    vec![
        (
            format!("{prefix}plot_position.csv"),
            io::format_plot_csv(&out.position_scan, out.analysis.position.background.as_deref()),
        ),
        (
            format!("{prefix}plot_momentum.csv"),
            io::format_plot_csv(&out.momentum_scan, out.analysis.momentum.background.as_deref()),
        ),
    ]
}

fn experiment_files(out: &ExperimentOutput, cfg: &RunConfig, prefix: &str) -> Vec<(String, String)> {
    let mut files = report_files(&experiment_doc(out, cfg), prefix);
    files.push((format!("{prefix}scan_position.csv"), io::format_scan_csv(&out.position_scan)));
    files.push((format!("{prefix}scan_momentum.csv"), io::format_scan_csv(&out.momentum_scan)));
    files.extend(plot_files(out, prefix));
    files
}

/// Writes `report.{txt,json}` and the two theory conditionals.
pub fn run_theory(cfg: &RunConfig) -> Result<CriteriaReport> {
    let out = theory(cfg).map_err(|e| e.context("theory"))?;
    io::write_files(&cfg.output_dir, &theory_files(&out, cfg, ""))?;
    Ok(out.report)
}

/// Writes the report, both scan files and plot-ready curves.
pub fn run_experiment(cfg: &RunConfig) -> Result<CriteriaReport> {
    let out = experiment(cfg).map_err(|e| e.context("experiment"))?;
    io::write_files(&cfg.output_dir, &experiment_files(&out, cfg, ""))?;
    Ok(out.analysis.report)
}

/// Writes the report and plot-ready curves for user-supplied scan files.
pub fn analyze_external(position_file: &Path, momentum_file: &Path, cfg: &RunConfig) -> Result<CriteriaReport> {
    let out = analyze(cfg, position_file, momentum_file).map_err(|e| e.context("analyze"))?;
    let mut files = report_files(&experiment_doc(&out, cfg), "");
    files.extend(plot_files(&out, ""));
    io::write_files(&cfg.output_dir, &files)?;
    Ok(out.analysis.report)
}

#[derive(Debug, Clone)]
pub struct FullOutput {
    pub theory: CriteriaReport,
    pub experiment: CriteriaReport,
}

fn comparison_doc(theory: &CriteriaReport, experiment: &CriteriaReport) -> ReportDoc {
    let mut doc = ReportDoc::new();
    doc.push("theory_grid_dx_inf_mm", theory.dx_inf_mm);
    doc.push("theory_grid_dp_inf_invmm", theory.dp_inf_invmm);
    doc.push("theory_grid_product_hbar2", theory.product_hbar2);
    doc.push("theory_closed_form_product_hbar2", theory.theory_product_hbar2);
    doc.push("experiment_dx_inf_mm", experiment.dx_inf_mm);
    doc.push("experiment_dp_inf_invmm", experiment.dp_inf_invmm);
    doc.push("experiment_product_hbar2", experiment.product_hbar2);
    doc.push("experiment_over_theory_product", experiment.product_hbar2 / theory.product_hbar2);
    doc.push("theory_epr_violated", theory.epr_violated);
    doc.push("experiment_epr_violated", experiment.epr_violated);
    doc.push("theory_inseparable", theory.inseparable);
    doc.push("experiment_inseparable", experiment.inseparable);
    doc
}

/// Theory under `theory/`, experiment under `experiment/`, plus
/// `comparison.txt`.
pub fn run_full(cfg: &RunConfig) -> Result<FullOutput> {
    let th = theory(cfg).map_err(|e| e.context("theory"))?;
    let ex = experiment(cfg).map_err(|e| e.context("experiment"))?;
    let mut files = theory_files(&th, cfg, "theory/");
    files.extend(experiment_files(&ex, cfg, "experiment/"));
    files.push((
        "comparison.txt".into(),
        comparison_doc(&th.report, &ex.analysis.report).to_text(),
    ));
    io::write_files(&cfg.output_dir, &files)?;
    Ok(FullOutput {
        theory: th.report,
        experiment: ex.analysis.report,
    })
}
