//! Run configuration: parsing, canonical form and hashing.
//!
//! A config is parsed strictly (unknown keys are errors) and then
//! canonicalized: every optional field that has a default is filled in, so the
//! canonical document states every value the run uses. Canonicalizing a
//! canonical config is the identity.

use std::fmt;

use mixsmooth::experiments::{config_hash, Regime};
use mixsmooth::grid::{check_exponent, conjugate_exponent};
use mixsmooth::spaces::{NormSettings, SpaceSpec, DEFAULT_TAIL_TOLERANCE};
use mixsmooth::wavelet::max_analysis_level;
use mixsmooth::Grid;
use schemars::gen::SchemaGenerator;
use schemars::schema::Schema;
use schemars::JsonSchema;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

/// A configuration problem, with the JSON position when the parser knows it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        ConfigError { message: message.into(), line: None, column: None }
    }

    pub fn diagnostic(&self) -> Value {
        json!({ "kind": "config", "message": self.message, "line": self.line, "column": self.column })
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{} at line {l} column {c}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        let (line, column) = if e.line() > 0 { (Some(e.line()), Some(e.column())) } else { (None, None) };
        // serde appends the position to the message; it is reported separately
        let text = e.to_string();
        let message = match text.rfind(" at line ") {
            Some(i) if line.is_some() => text[..i].to_string(),
            _ => text,
        };
        ConfigError { message, line, column }
    }
}

fn invalid(context: &str, e: impl fmt::Display) -> ConfigError {
    ConfigError::new(format!("{context}: {e}"))
}

// ---------------------------------------------------------------- scalar types

/// Integrability exponent in `[1, inf]`; written as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Exponent {
    pub fn parse(text: &str) -> Result<Self, String> {
        let v = match text.trim() {
            "inf" | "infinity" => f64::INFINITY,
            t => t.parse::<f64>().map_err(|_| format!("`{t}` is neither a number nor `inf`"))?,
        };
        check_exponent(v).map_err(|e| e.to_string())?;
        Ok(Exponent(v))
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Number(v) => check_exponent(v).map(|_| Exponent(v)).map_err(|e| e.to_string()),
            Raw::Text(t) if t == "inf" => Ok(Exponent(f64::INFINITY)),
            Raw::Text(t) => Err(format!("exponent `{t}` must be a number or \"inf\"")),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

impl JsonSchema for Exponent {
    fn schema_name() -> String {
        "Exponent".into()
    }

    fn json_schema(_: &mut SchemaGenerator) -> Schema {
        serde_json::from_value(json!({
            "description": "Integrability exponent in [1, inf].",
            "anyOf": [{ "type": "number", "minimum": 1.0 }, { "type": "string", "enum": ["inf"] }]
        }))
        .expect("static schema")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.dim, self.half_width, self.points_per_axis).map_err(|e| invalid("grid", e))
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { dim: 2, half_width: 16.0, points_per_axis: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest relative spectral mass allowed outside the covered band.
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
    /// Cap on the partition depth; `null` uses the grid's admissible maximum.
    #[serde(default)]
    pub max_level: Option<u32>,
}

fn default_tail_tolerance() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tail_tolerance: DEFAULT_TAIL_TOLERANCE, max_level: None }
    }
}

impl Tolerances {
    pub fn settings(&self) -> NormSettings {
        NormSettings { max_level: self.max_level, tail_tolerance: self.tail_tolerance }
    }
}

/// Acceptance bound on one report metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum RegimeConfig {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum FamilyConfig {
    AnnulusFk,
    AnnulusSpectrum,
    ModulatedFm,
    PlateauPacket,
    DilatedGaussian,
}

impl FamilyConfig {
    fn is_annulus(self) -> bool {
        matches!(self, FamilyConfig::AnnulusFk | FamilyConfig::AnnulusSpectrum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum IndexConfig {
    R1,
    R2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct IndicesConfig {
    pub r: f64,
    pub p: Exponent,
    pub q: Exponent,
}

// ---------------------------------------------------------------- inputs

/// Functions an experiment is evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSource {
    /// Seeded test corpus; `seed` and `size` default to the run values.
    Corpus {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        size: Option<usize>,
    },
    /// Functions whose spectra are annulus profiles on the first axis.
    AnnulusSpectrum { levels: Vec<u32>, p: Exponent },
}

// ---------------------------------------------------------------- experiments

/// Experiment selection and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    ContinuitySweep {
        p: Exponent,
        #[serde(default)]
        r1: f64,
        #[serde(default)]
        r2: f64,
        /// Defaults to `low` for `p < 2` and `high` otherwise.
        #[serde(default)]
        regime: Option<RegimeConfig>,
    },
    NoncompactnessSeparation {
        family: FamilyConfig,
        p: Exponent,
        #[serde(default)]
        r1: f64,
        /// Target smoothness; fixed to `-1/p'` for the annulus families, `-1` by default otherwise.
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        levels: Vec<u32>,
        #[serde(default)]
        shifts: Vec<Vec<i64>>,
    },
    /// The experiment grid is the one-dimensional axis grid of the tensor witnesses.
    SharpnessBlowup {
        p: Exponent,
        index: IndexConfig,
        magnitude: f64,
        levels: Vec<u32>,
        /// Defaults to the dimension of the run grid.
        #[serde(default)]
        dim: Option<usize>,
    },
    CompactnessTailProxy {
        p: Exponent,
        r1: f64,
        r2: f64,
        levels: Vec<u32>,
        radii: Vec<f64>,
        #[serde(default)]
        control: bool,
    },
    EmbeddingCheck {
        r: f64,
        p: Exponent,
    },
    HolderDualityCheck {
        r: f64,
        p: Exponent,
    },
    CoefficientBoundCheck {
        #[serde(default)]
        max_level: Option<i32>,
        #[serde(default)]
        shift_radius: Option<i64>,
        #[serde(default)]
        table_levels: Option<Vec<i32>>,
        #[serde(default)]
        table_shifts: Option<Vec<i64>>,
    },
    WaveletEquivalence {
        indices: Vec<IndicesConfig>,
        /// Analysis depth; defaults to the deepest level the grid resolves.
        #[serde(default)]
        level: Option<i32>,
    },
    LiftBracket {
        sigma: f64,
        r: f64,
        p: Exponent,
        q: Exponent,
    },
    SobolevBracket {
        r: u32,
        p: Exponent,
    },
    /// Gram identity on `axis_grid` and analysis/synthesis round trips of the inputs.
    WaveletCheck {
        #[serde(default)]
        axis_grid: Option<GridConfig>,
        #[serde(default)]
        level: Option<i32>,
    },
    /// Norms of every input in each listed space (space spec strings).
    NormTable {
        spaces: Vec<String>,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::ContinuitySweep { .. } => "continuity_sweep",
            Experiment::NoncompactnessSeparation { .. } => "noncompactness_separation",
            Experiment::SharpnessBlowup { .. } => "sharpness_blowup",
            Experiment::CompactnessTailProxy { .. } => "compactness_tail_proxy",
            Experiment::EmbeddingCheck { .. } => "embedding_check",
            Experiment::HolderDualityCheck { .. } => "holder_duality_check",
            Experiment::CoefficientBoundCheck { .. } => "coefficient_bound_check",
            Experiment::WaveletEquivalence { .. } => "wavelet_equivalence",
            Experiment::LiftBracket { .. } => "lift_bracket",
            Experiment::SobolevBracket { .. } => "sobolev_bracket",
            Experiment::WaveletCheck { .. } => "wavelet_check",
            Experiment::NormTable { .. } => "norm_table",
        }
    }

    /// Whether the experiment consumes an input set.
    pub fn uses_inputs(&self) -> bool {
        !matches!(self, Experiment::NoncompactnessSeparation { .. } | Experiment::SharpnessBlowup { .. })
    }
}

/// One experiment of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentEntry {
    /// Label used in file names; defaults to the experiment kind.
    #[serde(default)]
    pub name: Option<String>,
    /// Defaults to the run grid.
    #[serde(default)]
    pub grid: Option<GridConfig>,
    /// Defaults to the run tolerances.
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    /// Defaults to the run corpus; not allowed for witness experiments.
    #[serde(default)]
    pub inputs: Option<InputSource>,
    #[serde(default)]
    pub thresholds: Vec<ThresholdConfig>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_corpus_size")]
    pub corpus_size: usize,
    /// Order of the Daubechies system used by wavelet experiments.
    #[serde(default = "default_wavelet_order")]
    pub wavelet_order: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Directory for reports; not part of the config hash.
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub experiments: Vec<ExperimentEntry>,
}

fn default_seed() -> u64 {
    7
}

fn default_corpus_size() -> usize {
    20
}

fn default_wavelet_order() -> usize {
    4
}

fn default_output_dir() -> String {
    "out".into()
}

/// JSON schema of [`RunConfig`].
pub fn schema() -> Value {
    serde_json::to_value(schemars::schema_for!(RunConfig)).expect("schemas serialise")
}

impl RunConfig {
    /// Strict parse without canonicalization.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Parses and canonicalizes.
    pub fn load(text: &str) -> Result<Self, ConfigError> {
        Self::parse(text)?.canonical()
    }

    /// Validated copy with every default filled in.
    pub fn canonical(&self) -> Result<Self, ConfigError> {
        self.grid.build()?;
        if self.corpus_size == 0 {
            return Err(ConfigError::new("corpus_size must be at least 1"));
        }
        mixsmooth::wavelet::WaveletSystem::new(self.wavelet_order).map_err(|e| invalid("wavelet_order", e))?;
        check_tolerances(&self.tolerances, "tolerances")?;
        if self.experiments.is_empty() {
            return Err(ConfigError::new("experiments must not be empty"));
        }
        let experiments =
            self.experiments.iter().enumerate().map(|(i, e)| self.canonical_entry(e).map_err(|err| prefixed(i, e, err))).collect::<Result<_, _>>()?;
        Ok(RunConfig { experiments, ..self.clone() })
    }

    fn canonical_entry(&self, e: &ExperimentEntry) -> Result<ExperimentEntry, ConfigError> {
        let kind = e.experiment.kind();
        let name = e.name.clone().unwrap_or_else(|| kind.to_string());
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(ConfigError::new(format!("name `{name}` must be nonempty ASCII letters, digits, `_` or `-`")));
        }
        let grid = match (&e.grid, &e.experiment) {
            (Some(g), _) => *g,
            (None, Experiment::SharpnessBlowup { .. }) => GridConfig { dim: 1, ..self.grid },
            (None, _) => self.grid,
        };
        let built = grid.build()?;
        let tolerances = e.tolerances.unwrap_or(self.tolerances);
        check_tolerances(&tolerances, "tolerances")?;
        let inputs = match (&e.inputs, e.experiment.uses_inputs()) {
            (Some(_), false) => return Err(ConfigError::new(format!("{kind} builds its own witnesses and takes no inputs"))),
            (None, false) => None,
            (None, true) => Some(InputSource::Corpus { seed: Some(self.seed), size: Some(self.corpus_size) }),
            (Some(InputSource::Corpus { seed, size }), true) => {
                let size = size.unwrap_or(self.corpus_size);
                if size == 0 {
                    return Err(ConfigError::new("inputs.size must be at least 1"));
                }
                Some(InputSource::Corpus { seed: Some(seed.unwrap_or(self.seed)), size: Some(size) })
            }
            (Some(s @ InputSource::AnnulusSpectrum { levels, .. }), true) => {
                if levels.is_empty() {
                    return Err(ConfigError::new("inputs.levels must not be empty"));
                }
                Some(s.clone())
            }
        };
        for t in &e.thresholds {
            if t.min.is_none() && t.max.is_none() {
                return Err(ConfigError::new(format!("threshold on `{}` needs min or max", t.metric)));
            }
        }
        let experiment = canonical_experiment(&e.experiment, &built, self.grid.dim)?;
        Ok(ExperimentEntry { name: Some(name), grid: Some(grid), tolerances: Some(tolerances), inputs, thresholds: e.thresholds.clone(), experiment })
    }

    /// Canonical JSON document.
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("configs serialise")
    }

    /// Hash of the canonical document without `output_dir`.
    pub fn hash(&self) -> Result<String, ConfigError> {
        let mut v = self.canonical()?.to_value();
        if let Value::Object(m) = &mut v {
            m.remove("output_dir");
        }
        Ok(config_hash(&v))
    }
}

fn prefixed(i: usize, e: &ExperimentEntry, err: ConfigError) -> ConfigError {
    ConfigError { message: format!("experiments[{i}] ({}): {}", e.experiment.kind(), err.message), ..err }
}

fn check_tolerances(t: &Tolerances, context: &str) -> Result<(), ConfigError> {
    if !(t.tail_tolerance > 0.0 && t.tail_tolerance.is_finite()) {
        return Err(ConfigError::new(format!("{context}.tail_tolerance must be positive, got {}", t.tail_tolerance)));
    }
    Ok(())
}

fn canonical_experiment(e: &Experiment, grid: &Grid, run_dim: usize) -> Result<Experiment, ConfigError> {
    let mut e = e.clone();
    match &mut e {
        Experiment::ContinuitySweep { p, regime, .. } => {
            let r = regime.unwrap_or(if Regime::for_exponent(p.0) == Regime::Low { RegimeConfig::Low } else { RegimeConfig::High });
            let bad = (r == RegimeConfig::Low && p.0 > 2.0) || (r == RegimeConfig::High && p.0 < 2.0);
            if bad {
                return Err(ConfigError::new(format!("regime {r:?} does not cover p = {}", p.0)));
            }
            *regime = Some(r);
        }
        Experiment::NoncompactnessSeparation { family, p, sigma, levels, shifts, .. } => {
            let fixed = -1.0 / conjugate_exponent(p.0);
            if family.is_annulus() {
                if sigma.is_some_and(|s| s != fixed) {
                    return Err(ConfigError::new(format!("annulus families use sigma = -1/p' = {fixed}")));
                }
                *sigma = Some(fixed);
            } else {
                sigma.get_or_insert(-1.0);
            }
            let count = if *family == FamilyConfig::ModulatedFm { shifts.len() } else { levels.len() };
            if count < 2 {
                return Err(ConfigError::new("separation needs at least two witnesses"));
            }
        }
        Experiment::SharpnessBlowup { dim, magnitude, levels, .. } => {
            if grid.dim() != 1 {
                return Err(ConfigError::new("sharpness_blowup needs a one-dimensional axis grid"));
            }
            let d = dim.get_or_insert(run_dim);
            if !(1..=mixsmooth::grid::MAX_DIM).contains(d) {
                return Err(ConfigError::new(format!("dim must lie in 1..={}", mixsmooth::grid::MAX_DIM)));
            }
            if !(*magnitude >= 0.0 && magnitude.is_finite()) {
                return Err(ConfigError::new("magnitude must be a nonnegative number"));
            }
            if levels.len() < 3 {
                return Err(ConfigError::new("sharpness needs at least three levels"));
            }
        }
        Experiment::CoefficientBoundCheck { max_level, shift_radius, table_levels, table_shifts } => {
            let d = mixsmooth::experiments::CoefficientParams::default();
            max_level.get_or_insert(d.max_level);
            shift_radius.get_or_insert(d.shift_radius);
            table_levels.get_or_insert(d.table_levels);
            table_shifts.get_or_insert(d.table_shifts);
        }
        Experiment::WaveletEquivalence { indices, level } => {
            if indices.is_empty() {
                return Err(ConfigError::new("indices must not be empty"));
            }
            level.get_or_insert(max_analysis_level(grid));
        }
        Experiment::WaveletCheck { axis_grid, level } => {
            let a = axis_grid.get_or_insert(GridConfig { dim: 1, half_width: 16.0, points_per_axis: 1 << 15 }).build()?;
            if a.dim() != 1 {
                return Err(ConfigError::new("axis_grid must be one-dimensional"));
            }
            level.get_or_insert(max_analysis_level(grid));
        }
        Experiment::NormTable { spaces } => {
            if spaces.is_empty() {
                return Err(ConfigError::new("spaces must not be empty"));
            }
            for s in spaces.iter_mut() {
                *s = s.parse::<SpaceSpec>().map_err(|e| invalid("spaces", e))?.to_string();
            }
        }
        Experiment::CompactnessTailProxy { .. }
        | Experiment::EmbeddingCheck { .. }
        | Experiment::HolderDualityCheck { .. }
        | Experiment::LiftBracket { .. }
        | Experiment::SobolevBracket { .. } => {}
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{ "experiments": [ { "experiment": { "kind": "continuity_sweep", "p": 2 } } ] }"#
    }

    #[test]
    fn defaults_become_explicit() {
        let c = RunConfig::load(minimal()).unwrap();
        let e = &c.experiments[0];
        assert_eq!(e.name.as_deref(), Some("continuity_sweep"));
        assert_eq!(e.grid, Some(GridConfig::default()));
        assert_eq!(e.inputs, Some(InputSource::Corpus { seed: Some(7), size: Some(20) }));
        assert!(matches!(e.experiment, Experiment::ContinuitySweep { regime: Some(RegimeConfig::High), .. }));
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let once = RunConfig::load(minimal()).unwrap();
        let text = serde_json::to_string(&once).unwrap();
        let twice = RunConfig::load(&text).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.hash().unwrap(), twice.hash().unwrap());
        assert_eq!(RunConfig::parse(minimal()).unwrap().hash().unwrap(), once.hash().unwrap());
    }

    #[test]
    fn output_dir_does_not_enter_the_hash() {
        let a = RunConfig::load(minimal()).unwrap();
        let b = RunConfig { output_dir: "elsewhere".into(), ..a.clone() };
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let c = RunConfig { seed: 8, ..a.clone() };
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let top = r#"{ "experiments": [], "sed": 3 }"#;
        assert!(RunConfig::parse(top).unwrap_err().message.contains("unknown field"));
        let inner = r#"{ "experiments": [ { "experiment": { "kind": "embedding_check", "r": 1, "p": 2, "q": 2 } } ] }"#;
        let err = RunConfig::parse(inner).unwrap_err();
        assert!(err.message.contains("unknown field"), "{err}");
        assert!(err.line.is_some());
    }

    #[test]
    fn exponents() {
        assert_eq!(serde_json::from_str::<Exponent>("\"inf\"").unwrap().0, f64::INFINITY);
        assert_eq!(serde_json::from_str::<Exponent>("1.5").unwrap().0, 1.5);
        assert!(serde_json::from_str::<Exponent>("0.5").is_err());
        assert!(serde_json::from_str::<Exponent>("\"two\"").is_err());
        assert_eq!(serde_json::to_string(&Exponent(f64::INFINITY)).unwrap(), "\"inf\"");
        assert_eq!(Exponent::parse("infinity").unwrap().0, f64::INFINITY);
        assert!(Exponent::parse("0.9").is_err());
    }

    #[test]
    fn semantic_errors() {
        let cases = [
            r#"{ "experiments": [] }"#,
            r#"{ "grid": { "dim": 2, "half_width": 16, "points_per_axis": 500 }, "experiments": [ { "experiment": { "kind": "embedding_check", "r": 1, "p": 2 } } ] }"#,
            r#"{ "experiments": [ { "experiment": { "kind": "continuity_sweep", "p": 1, "regime": "high" } } ] }"#,
            r#"{ "experiments": [ { "experiment": { "kind": "sharpness_blowup", "p": "inf", "index": "r1", "magnitude": 0.5, "levels": [3, 4] } } ] }"#,
            r#"{ "experiments": [ { "inputs": { "source": "corpus" }, "experiment": { "kind": "sharpness_blowup", "p": "inf", "index": "r1", "magnitude": 0.5, "levels": [3, 4, 5] } } ] }"#,
            r#"{ "experiments": [ { "experiment": { "kind": "noncompactness_separation", "family": "annulus_fk", "p": "inf", "sigma": -2, "levels": [3, 4] } } ] }"#,
            r#"{ "experiments": [ { "experiment": { "kind": "norm_table", "spaces": ["S:B:p=0.5"] } } ] }"#,
            r#"{ "experiments": [ { "thresholds": [ { "metric": "sup_ratio" } ], "experiment": { "kind": "embedding_check", "r": 1, "p": 2 } } ] }"#,
            r#"{ "experiments": [ { "name": "a b", "experiment": { "kind": "embedding_check", "r": 1, "p": 2 } } ] }"#,
        ];
        for c in cases {
            assert!(RunConfig::load(c).is_err(), "{c}");
        }
    }

    #[test]
    fn space_specs_are_normalised() {
        let text = r#"{ "experiments": [ { "experiment": { "kind": "norm_table", "spaces": ["S:C:r=-1", "iso:Lp:p=2"] } } ] }"#;
        let c = RunConfig::load(text).unwrap();
        let Experiment::NormTable { spaces } = &c.experiments[0].experiment else { panic!() };
        assert_eq!(spaces, &["S:C:r=-1".to_string(), "iso:Lp:p=2".to_string()]);
    }

    #[test]
    fn sharpness_defaults_to_the_axis_of_the_run_grid() {
        let text = r#"{ "experiments": [ { "experiment": { "kind": "sharpness_blowup", "p": "inf", "index": "r2", "magnitude": 0.5, "levels": [3, 4, 5] } } ] }"#;
        let c = RunConfig::load(text).unwrap();
        let e = &c.experiments[0];
        assert_eq!(e.grid.unwrap().dim, 1);
        assert!(e.inputs.is_none());
        assert!(matches!(e.experiment, Experiment::SharpnessBlowup { dim: Some(2), .. }));
    }

    #[test]
    fn schema_lists_every_kind() {
        let text = schema().to_string();
        for kind in ["continuity_sweep", "sharpness_blowup", "norm_table", "wavelet_check"] {
            assert!(text.contains(kind), "{kind}");
        }
    }
}
