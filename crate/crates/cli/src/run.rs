//! Experiment dispatch and report persistence for `mixsmooth run`.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use mixsmooth::experiments::{
    self, annulus_spectrum_inputs, inputs, CoefficientParams, ExperimentReport, Indices, Input, NegativeIndex, Regime,
    SeparationParams, SharpnessParams, TailParams, Threshold,
};
use mixsmooth::spaces::SpaceSpec;
use mixsmooth::wavelet::WaveletSystem;
use mixsmooth::witnesses::{corpus, WitnessFamily};
use mixsmooth::{Error, Grid, Result};
use serde_json::json;

use crate::config::{Experiment, ExperimentEntry, FamilyConfig, IndexConfig, InputSource, RegimeConfig, RunConfig};

/// Hex digits of the config hash used in file names.
pub const HASH_PREFIX: usize = 12;

/// Result of one experiment entry.
pub struct EntryOutcome {
    pub name: String,
    pub kind: &'static str,
    pub report: Result<ExperimentReport>,
}

impl EntryOutcome {
    pub fn failed_checks(&self) -> usize {
        self.report.as_ref().map_or(0, |r| r.checks.iter().filter(|c| !c.passed).count())
    }
}

fn input_set(source: &InputSource, grid: &Grid) -> Result<Vec<Input>> {
    match source {
        InputSource::Corpus { seed, size } => {
            let (Some(seed), Some(size)) = (seed, size) else {
                return Err(Error::InvalidArgument("corpus inputs were not canonicalized".into()));
            };
            Ok(inputs(&corpus(*seed, *size, grid)?))
        }
        InputSource::AnnulusSpectrum { levels, p } => annulus_spectrum_inputs(levels, p.0, grid),
    }
}

fn family(f: FamilyConfig) -> WitnessFamily {
    match f {
        FamilyConfig::AnnulusFk => WitnessFamily::AnnulusFk,
        FamilyConfig::AnnulusSpectrum => WitnessFamily::AnnulusSpectrum,
        FamilyConfig::ModulatedFm => WitnessFamily::ModulatedFm,
        FamilyConfig::PlateauPacket => WitnessFamily::PlateauPacket,
        FamilyConfig::DilatedGaussian => WitnessFamily::DilatedGaussian,
    }
}

fn missing(what: &str) -> Error {
    Error::InvalidArgument(format!("{what} was not canonicalized"))
}

/// Runs one canonical entry and applies its thresholds.
pub fn run_entry(entry: &ExperimentEntry, config: &RunConfig, system: &WaveletSystem) -> Result<ExperimentReport> {
    let grid_cfg = entry.grid.ok_or_else(|| missing("grid"))?;
    let grid = Grid::new(grid_cfg.dim, grid_cfg.half_width, grid_cfg.points_per_axis)?;
    let settings = entry.tolerances.ok_or_else(|| missing("tolerances"))?.settings();
    let data = match &entry.inputs {
        Some(source) => input_set(source, &grid)?,
        None => Vec::new(),
    };
    let mut report = match &entry.experiment {
        &Experiment::ContinuitySweep { p, r1, r2, regime } => {
            let regime = match regime.ok_or_else(|| missing("regime"))? {
                RegimeConfig::Low => Regime::Low,
                RegimeConfig::High => Regime::High,
            };
            experiments::continuity_sweep(&data, p.0, r1, r2, regime, &settings)?
        }
        Experiment::NoncompactnessSeparation { family: f, p, r1, sigma, levels, shifts } => {
            let params =
                SeparationParams { family: family(*f), p: p.0, r1: *r1, sigma: *sigma, levels: levels.clone(), shifts: shifts.clone() };
            experiments::noncompactness_separation(&params, &grid, system, &settings)?
        }
        Experiment::SharpnessBlowup { p, index, magnitude, levels, dim } => {
            let index = match index {
                IndexConfig::R1 => NegativeIndex::R1,
                IndexConfig::R2 => NegativeIndex::R2,
            };
            let params = SharpnessParams { p: p.0, index, magnitude: *magnitude, levels: levels.clone() };
            experiments::sharpness_blowup(&params, &grid, dim.ok_or_else(|| missing("dim"))?, &settings)?
        }
        Experiment::CompactnessTailProxy { p, r1, r2, levels, radii, control } => {
            let params = TailParams { p: p.0, r1: *r1, r2: *r2, levels: levels.clone(), radii: radii.clone(), control: *control };
            experiments::compactness_tail_proxy(&data, &params, &settings)?
        }
        Experiment::EmbeddingCheck { r, p } => experiments::embedding_check(&data, *r, p.0, &settings)?,
        Experiment::HolderDualityCheck { r, p } => experiments::holder_duality_check(&data, *r, p.0, &settings)?,
        Experiment::CoefficientBoundCheck { max_level, shift_radius, table_levels, table_shifts } => {
            let params = CoefficientParams {
                max_level: max_level.ok_or_else(|| missing("max_level"))?,
                shift_radius: shift_radius.ok_or_else(|| missing("shift_radius"))?,
                table_levels: table_levels.clone().ok_or_else(|| missing("table_levels"))?,
                table_shifts: table_shifts.clone().ok_or_else(|| missing("table_shifts"))?,
            };
            experiments::coefficient_bound_check(&data, system, &params, &settings)?
        }
        Experiment::WaveletEquivalence { indices, level } => {
            let indices: Vec<Indices> = indices.iter().map(|t| Indices { r: t.r, p: t.p.0, q: t.q.0 }).collect();
            experiments::wavelet_equivalence(&data, system, &indices, *level, &settings)?
        }
        Experiment::LiftBracket { sigma, r, p, q } => experiments::lift_bracket(&data, *sigma, *r, p.0, q.0, &settings)?,
        Experiment::SobolevBracket { r, p } => experiments::sobolev_bracket(&data, *r, p.0, &settings)?,
        Experiment::WaveletCheck { axis_grid, level } => {
            let a = axis_grid.ok_or_else(|| missing("axis_grid"))?;
            let axis = Grid::new(a.dim, a.half_width, a.points_per_axis)?;
            let index = experiments::default_gram_index();
            experiments::wavelet_check(system, &index, &axis, &data, level.ok_or_else(|| missing("level"))?)?
        }
        Experiment::NormTable { spaces } => {
            let specs: Vec<SpaceSpec> = spaces.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            experiments::norm_table(&data, &specs, &settings)?
        }
    };
    report.parameters.insert("seed".into(), json!(config.seed));
    report.parameters.insert("name".into(), json!(entry.name));
    if entry.experiment.uses_inputs() {
        report.parameters.insert("input_source".into(), serde_json::to_value(&entry.inputs)?);
    }
    let thresholds: Vec<Threshold> =
        entry.thresholds.iter().map(|t| Threshold { metric: t.metric.clone(), min: t.min, max: t.max }).collect();
    report.apply_thresholds(&thresholds);
    Ok(report)
}

/// Runs every entry of a canonical config in order.
pub fn execute(config: &RunConfig, hash: &str) -> Result<Vec<EntryOutcome>> {
    let system = WaveletSystem::new(config.wavelet_order)?;
    Ok(config
        .experiments
        .iter()
        .map(|e| {
            let report = run_entry(e, config, &system).map(|mut r| {
                r.provenance.config_hash = hash.to_string();
                r
            });
            EntryOutcome { name: e.name.clone().unwrap_or_default(), kind: e.experiment.kind(), report }
        })
        .collect())
}

/// `<dir>/<hash prefix>-<index>-<name>` without extension.
pub fn report_stem(dir: &Path, hash: &str, index: usize, name: &str) -> PathBuf {
    dir.join(format!("{}-{:02}-{name}", &hash[..HASH_PREFIX], index + 1))
}

pub fn summary_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("{}-summary.txt", &hash[..HASH_PREFIX]))
}

pub fn config_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("{}-config.json", &hash[..HASH_PREFIX]))
}

/// Writes the canonical config, one JSON and CSV file per report and the summary.
pub fn write_outputs(dir: &Path, config: &RunConfig, hash: &str, outcomes: &[EntryOutcome]) -> Result<String> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&config.to_value())?;
    text.push('\n');
    fs::write(config_path(dir, hash), text)?;
    for (i, o) in outcomes.iter().enumerate() {
        if let Ok(r) = &o.report {
            let stem = report_stem(dir, hash, i, &o.name);
            r.write_json(BufWriter::new(fs::File::create(stem.with_extension("json"))?))?;
            r.write_csv(BufWriter::new(fs::File::create(stem.with_extension("csv"))?))?;
        }
    }
    let summary = summary(hash, outcomes);
    fs::write(summary_path(dir, hash), &summary)?;
    Ok(summary)
}

fn num(v: f64) -> String {
    format!("{v:.6e}")
}

/// Human-readable digest of a run.
pub fn summary(hash: &str, outcomes: &[EntryOutcome]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mixsmooth {} run {}", env!("CARGO_PKG_VERSION"), &hash[..HASH_PREFIX]);
    let (mut errors, mut failed) = (0, 0);
    for (i, o) in outcomes.iter().enumerate() {
        let _ = writeln!(s, "\n[{:02}] {} ({})", i + 1, o.name, o.kind);
        let r = match &o.report {
            Ok(r) => r,
            Err(e) => {
                errors += 1;
                let _ = writeln!(s, "  error: {e}");
                continue;
            }
        };
        let flagged = r.rows.iter().filter(|row| row.flag.is_some()).count();
        let _ = writeln!(s, "  rows: {} (flagged {flagged})", r.rows.len());
        let stats = [("sup_ratio", r.summary.sup_ratio), ("min_ratio", r.summary.min_ratio), ("min_separation", r.summary.min_separation)];
        for (name, v) in stats {
            if let Some(v) = v {
                let _ = writeln!(s, "  {name}: {}", num(v));
            }
        }
        if !r.summary.growth_factors.is_empty() {
            let g: Vec<String> = r.summary.growth_factors.iter().map(|&v| num(v)).collect();
            let _ = writeln!(s, "  growth_factors: {}", g.join(", "));
        }
        for (name, v) in &r.summary.measured_constants {
            let _ = writeln!(s, "  {name}: {}", num(*v));
        }
        for c in &r.checks {
            let bound = match (c.threshold.min, c.threshold.max) {
                (Some(lo), Some(hi)) => format!("in [{lo}, {hi}]"),
                (Some(lo), None) => format!(">= {lo}"),
                (None, Some(hi)) => format!("<= {hi}"),
                (None, None) => "unbounded".into(),
            };
            let value = c.value.map_or("missing".into(), num);
            let _ = writeln!(s, "  check {} {bound}: {value} {}", c.threshold.metric, if c.passed { "PASS" } else { "FAIL" });
        }
        failed += o.failed_checks();
    }
    let verdict = if errors > 0 {
        "ERROR"
    } else if failed > 0 {
        "FAIL"
    } else {
        "PASS"
    };
    let _ = writeln!(s, "\nresult: {verdict} ({} experiments, {failed} failed checks, {errors} errors)", outcomes.len());
    s
}
