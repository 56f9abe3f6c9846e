//! Desk-scale experiments on the mapping properties of the Fourier transform
//! between spaces of dominating mixed smoothness.
//!
//! Every experiment returns an [`ExperimentReport`]. Operator norms appear as
//! corpus suprema, i.e. empirical lower bounds. Compactness is only ever
//! reported as tail-envelope evidence.

pub mod report;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use report::{config_hash, drift, exponent_value, spread, ExperimentReport, Parameters, Row, RowRole, Threshold};

use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{conjugate_exponent, inner_product, lp_norm, Grid, SampledFunction, Side};
use crate::spaces::{evaluate, lift, piece_norms, tensor_product_norm, Flavor, NormSettings, SpaceSpec, Weight};
use crate::wavelet::{
    admissibility_warning, analyze, fourier_image_b01_norm, fourier_image_b01_norm_on, max_analysis_level, seq_b_norm,
    synthesize, tensor_wavelet, TranslationWindow, WaveletSystem,
};
use crate::witnesses::{
    annulus_spectrum_witness, annulus_witness, boundary_decay, dilated_gaussian, modulated_witness, plateau_packet,
    CorpusMember, WitnessFamily,
};

/// A labelled input function.
#[derive(Debug, Clone, PartialEq)]
pub struct Input {
    pub id: String,
    pub function: SampledFunction,
}

impl From<&CorpusMember> for Input {
    fn from(m: &CorpusMember) -> Self {
        Input { id: m.id.clone(), function: m.function.clone() }
    }
}

pub fn inputs(corpus: &[CorpusMember]) -> Vec<Input> {
    corpus.iter().map(Input::from).collect()
}

/// Which half of the theorem fixes the pair of spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p <= 2`: `S^{2/p-1+r1}_p B -> S^{-r2}_p B`.
    Low,
    /// `p >= 2`: `S^{r1}_p B -> S^{2/p-1-r2}_p B`.
    High,
}

impl Regime {
    pub fn for_exponent(p: f64) -> Regime {
        if p < 2.0 {
            Regime::Low
        } else {
            Regime::High
        }
    }
}

/// Source and target space of `F` for the given indices.
pub fn theorem_spaces(p: f64, r1: f64, r2: f64, regime: Regime) -> Result<(SpaceSpec, SpaceSpec)> {
    crate::grid::check_exponent(p)?;
    match regime {
        Regime::Low if p > 2.0 => return Err(Error::InvalidArgument(format!("the low regime needs p <= 2, got {p}"))),
        Regime::High if p < 2.0 => return Err(Error::InvalidArgument(format!("the high regime needs p >= 2, got {p}"))),
        _ => {}
    }
    let shift = 2.0 / p - 1.0;
    let (s, t) = match regime {
        Regime::Low => (shift + r1, -r2),
        Regime::High => (r1, shift - r2),
    };
    Ok((SpaceSpec::mixed_besov(s, p, p)?, SpaceSpec::mixed_besov(t, p, p)?))
}

fn grid_value(grid: &Grid) -> serde_json::Value {
    serde_json::to_value(grid).expect("grids serialise")
}

fn settings_value(settings: &NormSettings) -> serde_json::Value {
    json!({ "max_level": settings.max_level, "tail_tolerance": settings.tail_tolerance })
}

fn base_parameters(inputs: &[Input], settings: &NormSettings) -> Parameters {
    let mut p = Parameters::new();
    if let Some(first) = inputs.first() {
        p.insert("grid".into(), grid_value(first.function.grid()));
    }
    p.insert("inputs".into(), json!(inputs.iter().map(|i| i.id.clone()).collect::<Vec<_>>()));
    p.insert("norm_settings".into(), settings_value(settings));
    p
}

fn image(f: &SampledFunction) -> Result<SampledFunction> {
    fourier::forward_as_space(f)
}

/// Row for `target(g) / source(f)`; kernel refusals become flags.
fn norm_row(
    id: &str,
    f: &SampledFunction,
    g: &SampledFunction,
    source: &SpaceSpec,
    target: &SpaceSpec,
    settings: &NormSettings,
) -> Row {
    let row = Row::new(id, RowRole::Ratio, source.to_string(), target.to_string());
    let s = match evaluate(f, source, settings) {
        Ok(v) => v,
        Err(e) => return row.flagged(format!("source: {e}")),
    };
    let t = match evaluate(g, target, settings) {
        Ok(v) => v,
        Err(e) => return row.flagged(format!("target: {e}")),
    };
    row.with_norms(s.value, t.value).with_extra("source_tail", s.tail).with_extra("target_tail", t.tail)
}

fn ratio_spread(report: &ExperimentReport) -> Option<f64> {
    spread(report.rows.iter().filter(|r| r.role == RowRole::Ratio).filter_map(|r| r.ratio))
}

fn set_spread(report: &mut ExperimentReport, name: &str) {
    if let Some(s) = ratio_spread(report) {
        report.set_metric(name, s);
    }
}

// ---------------------------------------------------------------- continuity

/// Ratios `||Ff | target|| / ||f | source||` over the inputs.
pub fn continuity_sweep(inputs: &[Input], p: f64, r1: f64, r2: f64, regime: Regime, settings: &NormSettings) -> Result<ExperimentReport> {
    let (source, target) = theorem_spaces(p, r1, r2, regime)?;
    let rows: Vec<Row> = inputs
        .par_iter()
        .map(|i| match image(&i.function) {
            Ok(g) => norm_row(&i.id, &i.function, &g, &source, &target, settings),
            Err(e) => Row::new(&i.id, RowRole::Ratio, source.to_string(), target.to_string()).flagged(e.to_string()),
        })
        .collect();
    let mut params = base_parameters(inputs, settings);
    params.insert("p".into(), exponent_value(p));
    params.insert("r1".into(), json!(r1));
    params.insert("r2".into(), json!(r2));
    params.insert("regime".into(), serde_json::to_value(regime)?);
    let mut report = ExperimentReport::new("continuity_sweep", params, rows);
    set_spread(&mut report, "bracket_width");
    Ok(report)
}

// ---------------------------------------------------------------- non-compactness

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationParams {
    pub family: WitnessFamily,
    /// Integrability of the source space.
    pub p: f64,
    /// Source smoothness.
    #[serde(default)]
    pub r1: f64,
    /// Target smoothness for the modulated family; the annulus family uses `-1/p'`.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// First-axis levels of the annulus witnesses.
    #[serde(default)]
    pub levels: Vec<u32>,
    /// Shifts of the modulated witnesses.
    #[serde(default)]
    pub shifts: Vec<Vec<i64>>,
}

fn witness_list(params: &SeparationParams, grid: &Grid, system: &WaveletSystem) -> Result<Vec<Input>> {
    match params.family {
        WitnessFamily::AnnulusFk => params
            .levels
            .iter()
            .map(|&k| Ok(Input { id: format!("k1={k}"), function: annulus_witness(k, params.p, grid)? }))
            .collect(),
        WitnessFamily::AnnulusSpectrum => params
            .levels
            .iter()
            .map(|&k| {
                let mut levels = vec![0; grid.dim()];
                levels[0] = k;
                Ok(Input { id: format!("k1={k}"), function: annulus_spectrum_witness(&levels, params.p, grid)? })
            })
            .collect(),
        WitnessFamily::ModulatedFm => params
            .shifts
            .iter()
            .map(|m| Ok(Input { id: format!("m={m:?}"), function: modulated_witness(m, system, grid)? }))
            .collect(),
        WitnessFamily::PlateauPacket | WitnessFamily::DilatedGaussian => params
            .levels
            .iter()
            .map(|&k| {
                let levels = vec![k; grid.dim()];
                let function = match params.family {
                    WitnessFamily::PlateauPacket => plateau_packet(&levels, grid)?,
                    _ => dilated_gaussian(&levels, grid)?,
                };
                Ok(Input { id: format!("k={k}"), function })
            })
            .collect(),
    }
}

/// Bounded sources whose Fourier images stay uniformly apart.
///
/// Witness rows carry `(source, image)` norms. Pair rows carry the image
/// distance as `target_norm` and the largest single image norm as `source_norm`.
pub fn noncompactness_separation(
    params: &SeparationParams,
    grid: &Grid,
    system: &WaveletSystem,
    settings: &NormSettings,
) -> Result<ExperimentReport> {
    let witnesses = witness_list(params, grid, system)?;
    separation_report(params, witnesses, settings)
}

/// As [`noncompactness_separation`] on caller supplied witnesses.
pub fn separation_report(params: &SeparationParams, witnesses: Vec<Input>, settings: &NormSettings) -> Result<ExperimentReport> {
    if witnesses.len() < 2 {
        return Err(Error::InvalidArgument("separation needs at least two witnesses".into()));
    }
    let source = SpaceSpec::mixed_besov(params.r1, params.p, params.p)?;
    let sigma = match params.family {
        WitnessFamily::AnnulusFk | WitnessFamily::AnnulusSpectrum => -1.0 / conjugate_exponent(params.p),
        _ => params.sigma.unwrap_or(-1.0),
    };
    let target = SpaceSpec::mixed_holder(sigma)?;
    let images: Vec<SampledFunction> = witnesses.iter().map(|w| image(&w.function)).collect::<Result<_>>()?;
    let mut rows: Vec<Row> = witnesses
        .par_iter()
        .zip(images.par_iter())
        .map(|(w, g)| norm_row(&w.id, &w.function, g, &source, &target, settings))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..witnesses.len()).flat_map(|i| (i + 1..witnesses.len()).map(move |j| (i, j))).collect();
    let distances: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| Ok(evaluate(&images[i].sub(&images[j])?, &target, settings)?.value))
        .collect();
    let max_image = rows.iter().filter_map(|r| r.target_norm).fold(0.0, f64::max);
    for (&(i, j), d) in pairs.iter().zip(distances) {
        let row = Row::new(format!("{}|{}", witnesses[i].id, witnesses[j].id), RowRole::Separation, target.to_string(), target.to_string());
        rows.push(match d {
            Ok(d) => row.with_norms(max_image, d),
            Err(e) => row.flagged(e.to_string()),
        });
    }
    let mut p = base_parameters(&witnesses, settings);
    p.insert("family".into(), serde_json::to_value(params.family)?);
    p.insert("p".into(), exponent_value(params.p));
    p.insert("r1".into(), json!(params.r1));
    p.insert("sigma".into(), json!(sigma));
    let mut report = ExperimentReport::new("noncompactness_separation", p, rows);
    let sources: Vec<f64> = report.rows.iter().filter(|r| r.role == RowRole::Ratio).filter_map(|r| r.source_norm).collect();
    let targets: Vec<f64> = report.rows.iter().filter(|r| r.role == RowRole::Ratio).filter_map(|r| r.target_norm).collect();
    if sources.len() == witnesses.len() {
        if let Some(s) = spread(sources) {
            report.set_metric("source_spread", s);
        }
    }
    if targets.len() == witnesses.len() {
        report.set_metric("max_image_norm", max_image);
        if let Some(s) = spread(targets) {
            report.set_metric("image_spread", s);
        }
        if let Some(sep) = report.summary.min_separation {
            if report.rows.iter().all(|r| r.flag.is_none()) {
                report.set_metric("separation_floor", sep / max_image);
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------- sharpness

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeIndex {
    R1,
    R2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessParams {
    pub p: f64,
    pub index: NegativeIndex,
    /// The chosen index is set to `-magnitude`, the other one to zero.
    pub magnitude: f64,
    pub levels: Vec<u32>,
}

/// Continuity ratios along a witness sequence, with per-level growth factors.
///
/// Levels are taken on the diagonal, `k = (l, ..., l)`, in dimension `dim`. For `r1 < 0`
/// the witnesses are plateau packets (one active band, fixed envelope), for `r2 < 0`
/// dilated Gaussians. Both are tensor products and are evaluated factor by factor on
/// `axis_grid` (see [`tensor_product_norm`]).
pub fn sharpness_blowup(params: &SharpnessParams, axis_grid: &Grid, dim: usize, settings: &NormSettings) -> Result<ExperimentReport> {
    if params.levels.len() < 3 {
        return Err(Error::InvalidArgument("sharpness needs at least three levels".into()));
    }
    if !(params.magnitude >= 0.0 && params.magnitude.is_finite()) {
        return Err(Error::InvalidArgument(format!("magnitude must be a nonnegative number, got {}", params.magnitude)));
    }
    if axis_grid.dim() != 1 || dim == 0 {
        return Err(Error::InvalidArgument("sharpness runs on a one-dimensional axis grid and dim >= 1".into()));
    }
    let (r1, r2) = match params.index {
        NegativeIndex::R1 => (-params.magnitude, 0.0),
        NegativeIndex::R2 => (0.0, -params.magnitude),
    };
    let (source, target) = theorem_spaces(params.p, r1, r2, Regime::for_exponent(params.p))?;
    let rows: Vec<Row> = params
        .levels
        .par_iter()
        .map(|&l| {
            let id = format!("level={l}");
            let row = Row::new(&id, RowRole::Ratio, source.to_string(), target.to_string());
            let factor = match params.index {
                NegativeIndex::R1 => plateau_packet(&[l], axis_grid),
                NegativeIndex::R2 => dilated_gaussian(&[l], axis_grid),
            };
            let pair = factor.and_then(|f| Ok((image(&f)?, f)));
            let boundary = pair.as_ref().map_or(0.0, |(g, f)| boundary_decay(f).max(boundary_decay(g)));
            let (g, f) = match pair {
                Ok(v) => v,
                Err(e) => return row.flagged(e.to_string()),
            };
            let s = match tensor_product_norm(&vec![f; dim], &source, settings) {
                Ok(v) => v,
                Err(e) => return row.flagged(format!("source: {e}")),
            };
            match tensor_product_norm(&vec![g; dim], &target, settings) {
                Ok(t) => row
                    .with_norms(s.value, t.value)
                    .with_extra("source_tail", s.tail)
                    .with_extra("target_tail", t.tail)
                    .with_extra("boundary", boundary),
                Err(e) => row.flagged(format!("target: {e}")),
            }
        })
        .collect();
    let mut p = Parameters::new();
    p.insert("axis_grid".into(), grid_value(axis_grid));
    p.insert("dim".into(), json!(dim));
    p.insert("norm_settings".into(), settings_value(settings));
    p.insert("p".into(), exponent_value(params.p));
    p.insert("index".into(), serde_json::to_value(params.index)?);
    p.insert("magnitude".into(), json!(params.magnitude));
    p.insert("levels".into(), json!(params.levels));
    let mut report = ExperimentReport::new("sharpness_blowup", p, rows);
    let ratios: Vec<Option<f64>> = report.rows.iter().map(|r| r.ratio).collect();
    if ratios.iter().all(Option::is_some) {
        let ratios: Vec<f64> = ratios.into_iter().flatten().collect();
        report.summary.growth_factors = ratios.windows(2).map(|w| w[1] / w[0]).collect();
        report.summary.series.insert("ratio_by_level".into(), params.levels.iter().zip(&ratios).map(|(&l, &r)| [l as f64, r]).collect());
    }
    Ok(report)
}

// ---------------------------------------------------------------- compactness evidence

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    pub p: f64,
    pub r1: f64,
    pub r2: f64,
    /// Cut levels `K'`: the level tail keeps pieces with `max_j k_j >= K'`.
    pub levels: Vec<u32>,
    /// Radii `R`: the spatial tail keeps the image outside `|x| <= R`.
    pub radii: Vec<f64>,
    /// Permits `r1 = 0` or `r2 = 0` for control runs.
    #[serde(default)]
    pub control: bool,
}

/// Level and spatial tails of the Fourier images of unit-normalised inputs.
///
/// For each input `f` with `s = ||f | source||`, `a(K') = ||Ff restricted to
/// pieces with max_j k_j >= K' | target|| / s` and `b(R) = ||1_{|x|>R} Ff||_p / s`.
/// The envelope at `(K', R)` is the supremum over inputs of `max(a(K'), b(R))`.
pub fn compactness_tail_proxy(inputs: &[Input], params: &TailParams, settings: &NormSettings) -> Result<ExperimentReport> {
    if !params.control && !(params.r1 > 0.0 && params.r2 > 0.0) {
        return Err(Error::InvalidArgument(format!("tail evidence needs r1 > 0 and r2 > 0, got ({}, {})", params.r1, params.r2)));
    }
    if params.levels.is_empty() || params.radii.is_empty() {
        return Err(Error::InvalidArgument("tail evidence needs at least one level and one radius".into()));
    }
    let (source, target) = theorem_spaces(params.p, params.r1, params.r2, Regime::for_exponent(params.p))?;
    let p = params.p;
    let rows: Vec<Result<Row>> = inputs
        .par_iter()
        .map(|i| {
            let s = evaluate(&i.function, &source, settings)?;
            let g = image(&i.function)?;
            let pieces = piece_norms(&g, Flavor::Mixed, p, settings)?;
            let mut row = Row::new(&i.id, RowRole::Ratio, source.to_string(), target.to_string())
                .with_norms(s.value, pieces.besov(target.smoothness, p))
                .with_extra("source_tail", s.tail)
                .with_extra("target_tail", pieces.tail);
            for &cut in &params.levels {
                let mut tail = pieces.clone();
                tail.entries.retain(|(k, _)| k.iter().any(|&l| l >= cut));
                row = row.with_extra(&format!("a_{cut}"), tail.besov(target.smoothness, p) / s.value);
            }
            for &r in &params.radii {
                let outside = g.multiply_by(|x| if x.iter().map(|t| t * t).sum::<f64>() > r * r { 1.0 } else { 0.0 });
                row = row.with_extra(&format!("b_{r}"), lp_norm(&outside, p)? / s.value);
            }
            Ok(row)
        })
        .collect();
    let rows: Vec<Row> = rows
        .into_iter()
        .zip(inputs)
        .map(|(r, i)| r.unwrap_or_else(|e| Row::new(&i.id, RowRole::Ratio, source.to_string(), target.to_string()).flagged(e.to_string())))
        .collect();
    let mut par = base_parameters(inputs, settings);
    par.insert("p".into(), exponent_value(p));
    par.insert("r1".into(), json!(params.r1));
    par.insert("r2".into(), json!(params.r2));
    par.insert("levels".into(), json!(params.levels));
    par.insert("radii".into(), json!(params.radii));
    par.insert("control".into(), json!(params.control));
    let mut report = ExperimentReport::new("compactness_tail_proxy", par, rows);
    let clean = report.rows.iter().all(|r| r.flag.is_none());
    let envelope = |key: &str| report.rows.iter().filter_map(|r| r.extra.get(key).copied()).fold(0.0, f64::max);
    let level_curve: Vec<[f64; 2]> = params.levels.iter().map(|&k| [k as f64, envelope(&format!("a_{k}"))]).collect();
    let radius_curve: Vec<[f64; 2]> = params.radii.iter().map(|&r| [r, envelope(&format!("b_{r}"))]).collect();
    // nested tails: monotone for every input, not only for the envelope
    let mut monotone = true;
    for row in &report.rows {
        let a: Vec<f64> = params.levels.iter().filter_map(|k| row.extra.get(&format!("a_{k}")).copied()).collect();
        let b: Vec<f64> = params.radii.iter().filter_map(|r| row.extra.get(&format!("b_{r}")).copied()).collect();
        let sorted_levels = params.levels.windows(2).all(|w| w[0] <= w[1]);
        let sorted_radii = params.radii.windows(2).all(|w| w[0] <= w[1]);
        monotone &= !sorted_levels || a.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        monotone &= !sorted_radii || b.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    }
    let top_level = params.levels.iter().max().unwrap();
    let top_radius = params.radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let at_top = envelope(&format!("a_{top_level}")).max(envelope(&format!("b_{top_radius}")));
    report.summary.series.insert("envelope_by_level".into(), level_curve);
    report.summary.series.insert("envelope_by_radius".into(), radius_curve);
    if clean {
        report.set_metric("envelope_at_top", at_top);
        report.set_metric("monotone", if monotone { 1.0 } else { 0.0 });
    }
    Ok(report)
}

/// Frequency-side annulus witnesses at first-axis `levels`, for control runs.
pub fn annulus_spectrum_inputs(levels: &[u32], p: f64, grid: &Grid) -> Result<Vec<Input>> {
    levels
        .iter()
        .map(|&k| {
            let mut l = vec![0; grid.dim()];
            l[0] = k;
            Ok(Input { id: format!("spectrum-k1={k}"), function: annulus_spectrum_witness(&l, p, grid)? })
        })
        .collect()
}

// ---------------------------------------------------------------- embeddings

/// Measured constants of `B^{rn}_p -> S^r_p B -> B^r_p` and, for `p <= 2`, `S^0_p B -> B^0_p`.
pub fn embedding_check(inputs: &[Input], r: f64, p: f64, settings: &NormSettings) -> Result<ExperimentReport> {
    let dim = inputs.first().map_or(0, |i| i.function.grid().dim());
    if dim < 2 {
        return Err(Error::InvalidArgument("embeddings are compared in dimension n >= 2".into()));
    }
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!("embedding smoothness must be positive, got {r}")));
    }
    let iso_big = SpaceSpec::iso_besov(r * dim as f64, p, p)?;
    let mixed = SpaceSpec::mixed_besov(r, p, p)?;
    let iso = SpaceSpec::iso_besov(r, p, p)?;
    let zero = if p <= 2.0 { Some((SpaceSpec::mixed_besov(0.0, p, p)?, SpaceSpec::iso_besov(0.0, p, p)?)) } else { None };
    let per_input: Vec<Vec<Row>> = inputs
        .par_iter()
        .map(|i| {
            let f = &i.function;
            let mut rows = vec![
                norm_row(&format!("{}/left", i.id), f, f, &iso_big, &mixed, settings),
                norm_row(&format!("{}/right", i.id), f, f, &mixed, &iso, settings),
            ];
            if let Some((m0, i0)) = &zero {
                rows.push(norm_row(&format!("{}/zero", i.id), f, f, m0, i0, settings));
            }
            rows
        })
        .collect();
    let rows: Vec<Row> = per_input.into_iter().flatten().collect();
    let mut par = base_parameters(inputs, settings);
    par.insert("r".into(), json!(r));
    par.insert("p".into(), exponent_value(p));
    let mut report = ExperimentReport::new("embedding_check", par, rows);
    for tag in ["left", "right", "zero"] {
        let suffix = format!("/{tag}");
        let sup = report.rows.iter().filter(|r| r.input_id.ends_with(&suffix)).filter_map(|r| r.ratio).reduce(f64::max);
        if let Some(c) = sup {
            report.set_metric(&format!("c_{tag}"), c);
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------- duality

/// Smallest `C` with `|(f, g)| <= C ||f | S^r_p B|| ||g | S^{-r}_{p'} B||` over all input pairs.
pub fn holder_duality_check(inputs: &[Input], r: f64, p: f64, settings: &NormSettings) -> Result<ExperimentReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let pp = conjugate_exponent(p);
    let a = SpaceSpec::mixed_besov(r, p, p)?;
    let b = SpaceSpec::mixed_besov(-r, pp, pp)?;
    let norms: Vec<(Result<f64>, Result<f64>)> = inputs
        .par_iter()
        .map(|i| (evaluate(&i.function, &a, settings).map(|v| v.value), evaluate(&i.function, &b, settings).map(|v| v.value)))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..inputs.len()).flat_map(|i| (i..inputs.len()).map(move |j| (i, j))).collect();
    let rows: Vec<Row> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let row = Row::new(format!("{}|{}", inputs[i].id, inputs[j].id), RowRole::Ratio, a.to_string(), b.to_string());
            match (&norms[i].0, &norms[j].1) {
                (Ok(na), Ok(nb)) => match inner_product(&inputs[i].function, &inputs[j].function) {
                    Ok(ip) => row.with_norms(na * nb, ip.norm()),
                    Err(e) => row.flagged(e.to_string()),
                },
                (Err(e), _) | (_, Err(e)) => row.flagged(e.to_string()),
            }
        })
        .collect();
    let mut par = base_parameters(inputs, settings);
    par.insert("r".into(), json!(r));
    par.insert("p".into(), exponent_value(p));
    let mut report = ExperimentReport::new("holder_duality_check", par, rows);
    if let Some(c) = report.summary.sup_ratio {
        report.set_metric("c_min_admissible", c);
    }
    Ok(report)
}

// ---------------------------------------------------------------- norm tables

/// Norm of every input in every space. Rows carry `source_norm` only; the
/// metric `max[space]` is the largest norm per space.
pub fn norm_table(inputs: &[Input], spaces: &[SpaceSpec], settings: &NormSettings) -> Result<ExperimentReport> {
    let rows: Vec<Row> = inputs
        .par_iter()
        .map(|i| {
            spaces
                .iter()
                .map(|s| {
                    let row = Row::new(&i.id, RowRole::Ratio, s.to_string(), "");
                    match evaluate(&i.function, s, settings) {
                        Ok(v) => Row { source_norm: Some(v.value), ..row.with_extra("tail", v.tail) },
                        Err(e) => row.flagged(e.to_string()),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let mut params = base_parameters(inputs, settings);
    params.insert("spaces".into(), json!(spaces.iter().map(|s| s.to_string()).collect::<Vec<_>>()));
    let mut report = ExperimentReport::new("norm_table", params, rows);
    for s in spaces {
        let tag = s.to_string();
        let max = report.rows.iter().filter(|r| r.source_space == tag).filter_map(|r| r.source_norm).reduce(f64::max);
        if let Some(m) = max {
            report.set_metric(&format!("max[{tag}]"), m);
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------- coefficient bound

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientParams {
    /// Largest level per axis of the checked coefficients.
    pub max_level: i32,
    /// Shifts `|m_j| <= shift_radius` are checked.
    pub shift_radius: i64,
    /// Levels and shifts of the one-dimensional image table defining `c`.
    pub table_levels: Vec<i32>,
    pub table_shifts: Vec<i64>,
}

impl Default for CoefficientParams {
    fn default() -> Self {
        CoefficientParams { max_level: 3, shift_radius: 4, table_levels: (-1..=6).collect(), table_shifts: vec![0, 1, -1, 5, -5] }
    }
}

/// `out[o, r, i'] = sum_i rows[r][i] data[o, i, i']` along `axis`.
fn contract_complex(data: &[Complex64], shape: &[usize], axis: usize, rows: &[Vec<Complex64>]) -> (Vec<Complex64>, Vec<usize>) {
    let outer: usize = shape[..axis].iter().product();
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * rows.len() * inner];
    for o in 0..outer {
        for (r, w) in rows.iter().enumerate() {
            let dst = &mut out[(o * rows.len() + r) * inner..(o * rows.len() + r + 1) * inner];
            for (i, &wi) in w.iter().enumerate().take(len) {
                let src = &data[(o * len + i) * inner..(o * len + i + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += wi * s;
                }
            }
        }
    }
    let mut s = shape.to_vec();
    s[axis] = rows.len();
    (out, s)
}

/// `max_{k,m} |lambda_{k,m}(Ff)| / 2^{[k]}` and the per-coefficient ratios
/// `|lambda| / (2^{[k]} bound)` for `lambda_{k,m} = 2^{[k]} <f, F psi_{k,m}>`.
fn image_coefficients(f: &SampledFunction, system: &WaveletSystem, params: &CoefficientParams) -> Result<Vec<f64>> {
    let grid = *f.grid();
    let axis = grid.axis(Side::Space);
    let index: Vec<(i32, i64)> =
        (-1..=params.max_level).flat_map(|k| (-params.shift_radius..=params.shift_radius).map(move |m| (k, m))).collect();
    let rows: Vec<Vec<Complex64>> =
        index.iter().map(|&(k, m)| axis.iter().map(|&x| system.wavelet_1d_hat(k, m, x)).collect()).collect();
    let dim = grid.dim();
    let mut data = f.samples().to_vec();
    let mut shape = vec![grid.points_per_axis(); dim];
    for a in (0..dim).rev() {
        let (d, s) = contract_complex(&data, &shape, a, &rows);
        data = d;
        shape = s;
    }
    let vol = grid.cell_volume(Side::Space);
    // |lambda| / 2^{[k]} = |<f, F psi>|
    Ok(data.iter().map(|z| z.norm() * vol).collect())
}

/// Checks `|lambda_{k,m}(Ff)| <= C 2^{[k]} ||f | S^0 C||` with `C = c^n`, where `c`
/// is the largest measured `||F_1 psi_{k,m} | B^0_1||` over the table.
pub fn coefficient_bound_check(inputs: &[Input], system: &WaveletSystem, params: &CoefficientParams, settings: &NormSettings) -> Result<ExperimentReport> {
    let dim = inputs.first().map_or(1, |i| i.function.grid().dim());
    let table: Vec<(i32, i64, f64)> = params
        .table_levels
        .iter()
        .flat_map(|&k| params.table_shifts.iter().map(move |&m| (k, m)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(k, m)| Ok((k, m, fourier_image_b01_norm(system, k, m)?)))
        .collect::<Result<_>>()?;
    let c = table.iter().map(|t| t.2).fold(0.0, f64::max);
    let big_c = c.powi(dim as i32);
    let holder = SpaceSpec::mixed_holder(0.0)?;
    let rows: Vec<(Row, usize)> = inputs
        .par_iter()
        .map(|i| {
            let row = Row::new(&i.id, RowRole::Ratio, holder.to_string(), "max |lambda| 2^-[k]");
            let s = match evaluate(&i.function, &holder, settings) {
                Ok(v) => v.value,
                Err(e) => return (row.flagged(e.to_string()), 0),
            };
            match image_coefficients(&i.function, system, params) {
                Ok(values) => {
                    let max = values.iter().cloned().fold(0.0, f64::max);
                    let violations = values.iter().filter(|&&v| v > big_c * s).count();
                    (row.with_norms(s, max).with_extra("violations", violations as f64), violations)
                }
                Err(e) => (row.flagged(e.to_string()), 0),
            }
        })
        .collect();
    let violations: usize = rows.iter().map(|r| r.1).sum();
    let rows: Vec<Row> = rows.into_iter().map(|r| r.0).collect();
    let mut par = base_parameters(inputs, settings);
    par.insert("coefficients".into(), serde_json::to_value(params)?);
    par.insert("order".into(), json!(system.order()));
    let mut report = ExperimentReport::new("coefficient_bound_check", par, rows);
    report.set_metric("c_one_dimensional", c);
    report.set_metric("c_measured", big_c);
    if let Some(u) = spread(table.iter().map(|t| t.2)) {
        report.set_metric("image_uniformity", u);
    }
    if report.rows.iter().all(|r| r.flag.is_none()) {
        report.set_metric("violations", violations as f64);
        if let Some(s) = report.summary.sup_ratio {
            report.set_metric("bound_utilisation", s / big_c);
        }
    }
    for &m in &params.table_shifts {
        let curve = table.iter().filter(|t| t.1 == m).map(|t| [t.0 as f64, t.2]).collect();
        report.summary.series.insert(format!("b01_m={m}"), curve);
    }
    if dim >= 2 {
        report.set_metric("factorization_error", factorization_error(system, dim)?);
    }
    Ok(report)
}

/// Largest relative gap between `||F psi_{k,m} | S^0_1 B||` on a tensor grid
/// and the product of the one-dimensional norms on its axis grid.
pub fn factorization_error(system: &WaveletSystem, dim: usize) -> Result<f64> {
    let grid = Grid::new(dim, 32.0, 512)?;
    let axis_grid = Grid::new(1, 32.0, 512)?;
    let spec = SpaceSpec::mixed_besov(0.0, 1.0, 1.0)?;
    let cases: Vec<(Vec<i32>, Vec<i64>)> = vec![(vec![-1, 0], vec![0, 2]), (vec![1, 2], vec![-3, 5]), (vec![0, -1], vec![4, -6])];
    let mut worst: f64 = 0.0;
    for (k, m) in cases {
        let (k, m) = (k[..dim.min(2)].iter().cycle().take(dim).cloned().collect::<Vec<_>>(), m[..dim.min(2)].iter().cycle().take(dim).cloned().collect::<Vec<_>>());
        let psi = tensor_wavelet(system, &k, &m, &grid)?;
        let full = evaluate(&image(&psi)?, &spec, &NormSettings::default().with_tail_tolerance(1e-6))?.value;
        let mut product = 1.0;
        for (&kj, &mj) in k.iter().zip(&m) {
            product *= fourier_image_b01_norm_on(system, kj, mj, &axis_grid)?;
        }
        worst = worst.max((full - product).abs() / product);
    }
    Ok(worst)
}

// ---------------------------------------------------------------- wavelet characterisation

/// `(r, p, q)` of one sequence-space comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indices {
    pub r: f64,
    pub p: f64,
    pub q: f64,
}

impl Indices {
    pub fn tag(&self) -> String {
        let e = |v: f64| if v.is_infinite() { "inf".to_string() } else { format!("{v}") };
        format!("r={},p={},q={}", self.r, e(self.p), e(self.q))
    }
}

/// Ratios `||analyze(f) | s^r_{p,q} b|| / ||f | S^r_{p,q} B||` per input and index triple.
pub fn wavelet_equivalence(
    inputs: &[Input],
    system: &WaveletSystem,
    indices: &[Indices],
    level: Option<i32>,
    settings: &NormSettings,
) -> Result<ExperimentReport> {
    let specs: Vec<SpaceSpec> = indices.iter().map(|t| SpaceSpec::mixed_besov(t.r, t.p, t.q)).collect::<Result<_>>()?;
    let per_input: Vec<Vec<Row>> = inputs
        .par_iter()
        .map(|i| {
            let grid = *i.function.grid();
            let k = level.unwrap_or_else(|| max_analysis_level(&grid));
            let coeffs = analyze(&i.function, system, k, &TranslationWindow::domain(&grid));
            indices
                .iter()
                .zip(&specs)
                .map(|(t, spec)| {
                    let row = Row::new(format!("{}/{}", i.id, t.tag()), RowRole::Ratio, spec.to_string(), format!("s:b:{}", t.tag()));
                    let c = match &coeffs {
                        Ok(c) => c,
                        Err(e) => return row.flagged(e.to_string()),
                    };
                    match (evaluate(&i.function, spec, settings), seq_b_norm(c, t.r, t.p, t.q)) {
                        (Ok(n), Ok(s)) => row.with_norms(n.value, s).with_extra("source_tail", n.tail),
                        (Err(e), _) | (_, Err(e)) => row.flagged(e.to_string()),
                    }
                })
                .collect()
        })
        .collect();
    let rows: Vec<Row> = per_input.into_iter().flatten().collect();
    let mut par = base_parameters(inputs, settings);
    par.insert("order".into(), json!(system.order()));
    par.insert("indices".into(), json!(indices.iter().map(|t| t.tag()).collect::<Vec<_>>()));
    par.insert("analysis_level".into(), json!(level));
    let warnings: Vec<String> = indices.iter().filter_map(|t| admissibility_warning(system, t.r, t.p)).collect();
    par.insert("warnings".into(), json!(warnings));
    let mut report = ExperimentReport::new("wavelet_equivalence", par, rows);
    for t in indices {
        let suffix = format!("/{}", t.tag());
        let ratios: Vec<f64> = report.rows.iter().filter(|r| r.input_id.ends_with(&suffix)).filter_map(|r| r.ratio).collect();
        if ratios.len() == inputs.len() {
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            report.set_metric(&format!("min[{}]", t.tag()), lo);
            report.set_metric(&format!("max[{}]", t.tag()), hi);
            if let Some(s) = spread(ratios) {
                report.set_metric(&format!("spread[{}]", t.tag()), s);
            }
        }
    }
    Ok(report)
}

/// `||J_sigma f | S^{r-sigma}_{p,q} B|| / ||f | S^r_{p,q} B||` with the tensor lift `J_sigma`.
pub fn lift_bracket(inputs: &[Input], sigma: f64, r: f64, p: f64, q: f64, settings: &NormSettings) -> Result<ExperimentReport> {
    let source = SpaceSpec::mixed_besov(r, p, q)?;
    let target = SpaceSpec::mixed_besov(r - sigma, p, q)?;
    let rows: Vec<Row> = inputs
        .par_iter()
        .map(|i| match lift(&i.function, Weight::Tensor(sigma), settings) {
            Ok(g) => norm_row(&i.id, &i.function, &g, &source, &target, settings),
            Err(e) => Row::new(&i.id, RowRole::Ratio, source.to_string(), target.to_string()).flagged(e.to_string()),
        })
        .collect();
    let mut par = base_parameters(inputs, settings);
    par.insert("sigma".into(), json!(sigma));
    par.insert("r".into(), json!(r));
    par.insert("p".into(), exponent_value(p));
    par.insert("q".into(), exponent_value(q));
    let mut report = ExperimentReport::new("lift_bracket", par, rows);
    set_spread(&mut report, "spread");
    Ok(report)
}

/// `sum_alpha ||D^alpha f||_p / ||f | S^r_{p,2} F||`.
pub fn sobolev_bracket(inputs: &[Input], r: u32, p: f64, settings: &NormSettings) -> Result<ExperimentReport> {
    let source = SpaceSpec::new(Flavor::Mixed, crate::spaces::Family::F, r as f64, p, 2.0)?;
    let target = SpaceSpec::new(Flavor::Mixed, crate::spaces::Family::W, r as f64, p, p)?;
    let rows: Vec<Row> = inputs.par_iter().map(|i| norm_row(&i.id, &i.function, &i.function, &source, &target, settings)).collect();
    let mut par = base_parameters(inputs, settings);
    par.insert("r".into(), json!(r));
    par.insert("p".into(), exponent_value(p));
    let mut report = ExperimentReport::new("sobolev_bracket", par, rows);
    set_spread(&mut report, "spread");
    Ok(report)
}

/// A 50-element two-dimensional index set with levels `-1..=2`.
pub fn default_gram_index() -> Vec<(Vec<i32>, Vec<i64>)> {
    let shifts: [[i64; 2]; 3] = [[0, 0], [1, -1], [-3, 2]];
    let mut out = Vec::new();
    for k1 in -1..=2 {
        for k2 in -1..=2 {
            for m in shifts {
                out.push((vec![k1, k2], m.to_vec()));
            }
        }
    }
    out.push((vec![2, 2], vec![5, -6]));
    out.push((vec![-1, 2], vec![-6, 9]));
    out
}

/// Gram matrix of `2^{[k]/2} psi_{k,m}` by the rectangle rule on a tensor grid whose
/// axes equal `axis_grid`; it is assembled from one-dimensional products.
pub fn gram_matrix(system: &WaveletSystem, index: &[(Vec<i32>, Vec<i64>)], axis_grid: &Grid) -> Result<Vec<Vec<f64>>> {
    if axis_grid.dim() != 1 {
        return Err(Error::InvalidArgument("the Gram matrix is assembled from a one-dimensional axis grid".into()));
    }
    let mut cache: BTreeMap<(i32, i64), SampledFunction> = BTreeMap::new();
    for (k, m) in index {
        for (&kj, &mj) in k.iter().zip(m) {
            if let std::collections::btree_map::Entry::Vacant(e) = cache.entry((kj, mj)) {
                let psi = tensor_wavelet(system, &[kj], &[mj], axis_grid)?;
                e.insert(psi.scale(Complex64::new((kj as f64 / 2.0).exp2(), 0.0)));
            }
        }
    }
    let mut one_d: BTreeMap<((i32, i64), (i32, i64)), f64> = BTreeMap::new();
    let mut ip = |a: (i32, i64), b: (i32, i64)| -> Result<f64> {
        let key = if a <= b { (a, b) } else { (b, a) };
        if let Some(v) = one_d.get(&key) {
            return Ok(*v);
        }
        let v = inner_product(&cache[&key.0], &cache[&key.1])?.re;
        one_d.insert(key, v);
        Ok(v)
    };
    let mut g = vec![vec![0.0; index.len()]; index.len()];
    for (i, (ki, mi)) in index.iter().enumerate() {
        for (j, (kj, mj)) in index.iter().enumerate() {
            let mut v = 1.0;
            for a in 0..ki.len() {
                v *= ip((ki[a], mi[a]), (kj[a], mj[a]))?;
            }
            g[i][j] = v;
        }
    }
    Ok(g)
}

/// Gram identity error and analysis/synthesis round trips.
pub fn wavelet_check(
    system: &WaveletSystem,
    index: &[(Vec<i32>, Vec<i64>)],
    axis_grid: &Grid,
    inputs: &[Input],
    level: i32,
) -> Result<ExperimentReport> {
    let g = gram_matrix(system, index, axis_grid)?;
    let mut gram_error: f64 = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            gram_error = gram_error.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let rows: Vec<Row> = inputs
        .par_iter()
        .map(|i| {
            let row = Row::new(&i.id, RowRole::Ratio, "L_2", "L_2 round-trip error");
            let grid = *i.function.grid();
            let back = analyze(&i.function, system, level, &TranslationWindow::domain(&grid)).and_then(|c| synthesize(&c, system, &grid));
            match back.and_then(|b| Ok((lp_norm(&i.function, 2.0)?, lp_norm(&b.sub(&i.function)?, 2.0)?))) {
                Ok((n, e)) => row.with_norms(n, e),
                Err(e) => row.flagged(e.to_string()),
            }
        })
        .collect();
    let mut par = Parameters::new();
    par.insert("order".into(), json!(system.order()));
    par.insert("axis_grid".into(), grid_value(axis_grid));
    par.insert("index".into(), json!(index));
    par.insert("inputs".into(), json!(inputs.iter().map(|i| i.id.clone()).collect::<Vec<_>>()));
    par.insert("level".into(), json!(level));
    let mut report = ExperimentReport::new("wavelet_check", par, rows);
    report.set_metric("gram_error", gram_error);
    report.set_metric("gram_size", index.len() as f64);
    if let Some(s) = report.summary.sup_ratio {
        report.set_metric("round_trip_error", s);
    }
    Ok(report)
}
