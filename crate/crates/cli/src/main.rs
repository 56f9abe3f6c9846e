use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mixsmooth::experiments::{default_gram_index, inputs, wavelet_check, ExperimentReport, Threshold};
use mixsmooth::spaces::{evaluate, NormSettings, SpaceSpec, DEFAULT_TAIL_TOLERANCE};
use mixsmooth::wavelet::WaveletSystem;
use mixsmooth::witnesses::{annulus_spectrum_witness, annulus_witness_at, corpus, dilated_gaussian, modulated_witness, plateau_packet};
use mixsmooth::{fourier, Grid, SampledFunction};
use mixsmooth_cli::config::{ConfigError, Exponent, RunConfig};
use mixsmooth_cli::run;
use serde_json::{json, Value};

/// Worker count cap for parallel experiment rows.
const THREADS_VAR: &str = "MIXSMOOTH_THREADS";

const EXIT_ERROR: u8 = 1;
const EXIT_THRESHOLD: u8 = 2;

#[derive(Parser)]
#[command(name = "mixsmooth", version, about = "Fourier analysis in spaces of dominating mixed smoothness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a config file and write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print the norm of a sampled function in a space, e.g. `S:B:r=0.5:p=2:q=2`.
    Norm {
        file: PathBuf,
        space: String,
        #[arg(long, default_value_t = DEFAULT_TAIL_TOLERANCE)]
        tail_tolerance: f64,
        #[arg(long)]
        max_level: Option<u32>,
    },
    /// Fourier transform of a sampled function file.
    Fourier {
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Frequency samples back to space samples.
        #[arg(long, conflicts_with = "as_space")]
        inverse: bool,
        /// Store the transform as a space function on the dual grid.
        #[arg(long)]
        as_space: bool,
    },
    /// Gram identity and analysis/synthesis round trips of the wavelet system.
    WaveletCheck {
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// One-dimensional grid for the Gram quadrature, `dim,half_width,points`.
        #[arg(long, default_value = "1,16,32768", value_parser = parse_grid)]
        axis_grid: Grid,
        #[arg(long, default_value = "1,16,16384", value_parser = parse_grid)]
        member_grid: Grid,
        #[arg(long, default_value_t = 10)]
        members: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        level: i32,
        #[arg(long, default_value_t = 1e-5)]
        gram_tolerance: f64,
        #[arg(long, default_value_t = 1e-6)]
        round_trip_tolerance: f64,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a witness or corpus member to a sampled function file.
    Witness {
        family: WitnessKind,
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
        #[arg(long)]
        output: PathBuf,
        /// Levels per axis; a single level applies to every axis.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<u32>,
        #[arg(long, default_value = "inf", value_parser = Exponent::parse)]
        p: Exponent,
        /// Translation per axis of the modulated witness.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        shift: Vec<i64>,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Corpus member index.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Flatten the series of a report into `series,x,y` CSV.
    EmitPlotdata {
        report: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the JSON schema of run configs.
    Schema,
}

#[derive(Clone, Copy, ValueEnum)]
enum WitnessKind {
    AnnulusFk,
    AnnulusSpectrum,
    ModulatedFm,
    PlateauPacket,
    DilatedGaussian,
    Corpus,
}

/// Failure of a subcommand, printed as one JSON line on stderr.
struct Failure(Value);

impl From<mixsmooth::Error> for Failure {
    fn from(e: mixsmooth::Error) -> Self {
        Failure(json!({ "kind": e.kind(), "message": e.to_string() }))
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure(e.diagnostic())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        mixsmooth::Error::from(e).into()
    }
}

fn failure(kind: &str, message: impl Into<String>) -> Failure {
    Failure(json!({ "kind": kind, "message": message.into() }))
}

fn diagnostic(level: &str, mut body: Value) {
    if let Value::Object(m) = &mut body {
        m.insert("level".into(), json!(level));
    }
    eprintln!("{body}");
}

fn parse_grid(text: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [d, l, n] = parts[..] else {
        return Err("expected `dim,half_width,points_per_axis`".into());
    };
    let dim = d.parse::<usize>().map_err(|e| format!("dim: {e}"))?;
    let half_width = l.parse::<f64>().map_err(|e| format!("half_width: {e}"))?;
    let points = n.parse::<usize>().map_err(|e| format!("points_per_axis: {e}"))?;
    Grid::new(dim, half_width, points).map_err(|e| e.to_string())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = text.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| failure("environment", format!("{THREADS_VAR} must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| failure("environment", e.to_string()))
}

fn read_function(path: &Path) -> Result<(SampledFunction, Option<Value>), Failure> {
    let file = fs::File::open(path).map_err(|e| failure("io", format!("{}: {e}", path.display())))?;
    Ok(SampledFunction::read_with_provenance(io::BufReader::new(file))?)
}

fn write_function(path: &Path, f: &SampledFunction, provenance: &Value) -> Result<(), Failure> {
    let file = fs::File::create(path).map_err(|e| failure("io", format!("{}: {e}", path.display())))?;
    f.write_with_provenance(BufWriter::new(file), provenance)?;
    Ok(())
}

fn cmd_run(config: &Path, output_dir: Option<PathBuf>) -> Result<u8, Failure> {
    let text = fs::read_to_string(config).map_err(|e| failure("io", format!("{}: {e}", config.display())))?;
    let mut cfg = RunConfig::load(&text)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir.to_string_lossy().into_owned();
    }
    let hash = cfg.hash()?;
    let outcomes = run::execute(&cfg, &hash)?;
    let summary = run::write_outputs(Path::new(&cfg.output_dir), &cfg, &hash, &outcomes)?;
    print!("{summary}");
    let mut code = 0;
    for o in &outcomes {
        match &o.report {
            Err(e) => {
                diagnostic("error", json!({ "experiment": o.name, "kind": e.kind(), "message": e.to_string() }));
                code = EXIT_ERROR;
            }
            Ok(r) => {
                for c in r.checks.iter().filter(|c| !c.passed) {
                    diagnostic(
                        "threshold",
                        json!({ "experiment": o.name, "metric": c.threshold.metric, "value": c.value, "min": c.threshold.min, "max": c.threshold.max }),
                    );
                    if code == 0 {
                        code = EXIT_THRESHOLD;
                    }
                }
            }
        }
    }
    Ok(code)
}

fn cmd_norm(file: &Path, space: &str, tail_tolerance: f64, max_level: Option<u32>) -> Result<u8, Failure> {
    let spec: SpaceSpec = space.parse()?;
    let (f, _) = read_function(file)?;
    let settings = NormSettings { max_level, tail_tolerance };
    let v = evaluate(&f, &spec, &settings)?;
    println!("norm {:.11e}", v.value);
    println!("tail {:.3e}", v.tail);
    println!("space {}", spec.canonical());
    Ok(0)
}

fn cmd_fourier(input: &Path, output: &Path, inverse: bool, as_space: bool) -> Result<u8, Failure> {
    let (f, _) = read_function(input)?;
    let (g, op) = match (inverse, as_space) {
        (true, _) => (fourier::inverse(&f)?, "inverse"),
        (false, true) => (fourier::forward_as_space(&f)?, "forward_as_space"),
        (false, false) => (fourier::forward(&f)?, "forward"),
    };
    write_function(output, &g, &json!({ "transform": op, "source": input.display().to_string() }))?;
    Ok(0)
}

struct WaveletCheckArgs {
    order: usize,
    axis_grid: Grid,
    member_grid: Grid,
    members: usize,
    seed: u64,
    level: i32,
    gram_tolerance: f64,
    round_trip_tolerance: f64,
    report: Option<PathBuf>,
}

fn cmd_wavelet_check(a: WaveletCheckArgs) -> Result<u8, Failure> {
    let system = WaveletSystem::new(a.order)?;
    let members = inputs(&corpus(a.seed, a.members, &a.member_grid)?);
    let mut r: ExperimentReport = wavelet_check(&system, &default_gram_index(), &a.axis_grid, &members, a.level)?;
    r.parameters.insert("seed".into(), json!(a.seed));
    r.apply_thresholds(&[Threshold::at_most("gram_error", a.gram_tolerance), Threshold::at_most("round_trip_error", a.round_trip_tolerance)]);
    for c in &r.checks {
        let value = c.value.map_or("missing".into(), |v| format!("{v:.3e}"));
        println!("{} {value} (max {:e}) {}", c.threshold.metric, c.threshold.max.unwrap_or(f64::NAN), if c.passed { "PASS" } else { "FAIL" });
    }
    if let Some(path) = &a.report {
        r.write_json(BufWriter::new(fs::File::create(path)?))?;
    }
    Ok(if r.passed() { 0 } else { EXIT_THRESHOLD })
}

struct WitnessArgs {
    family: WitnessKind,
    grid: Grid,
    output: PathBuf,
    levels: Vec<u32>,
    p: Exponent,
    shift: Vec<i64>,
    order: usize,
    seed: u64,
    index: usize,
}

fn per_axis<T: Copy>(values: &[T], dim: usize, what: &str) -> Result<Vec<T>, Failure> {
    match values.len() {
        1 => Ok(vec![values[0]; dim]),
        n if n == dim => Ok(values.to_vec()),
        n => Err(failure("invalid_argument", format!("{what}: expected 1 or {dim} values, got {n}"))),
    }
}

fn cmd_witness(a: WitnessArgs) -> Result<u8, Failure> {
    let dim = a.grid.dim();
    let p = a.p.0;
    let exponent = if p.is_infinite() { json!("inf") } else { json!(p) };
    let (f, provenance) = match a.family {
        WitnessKind::Corpus => {
            let members = corpus(a.seed, a.index + 1, &a.grid)?;
            let m = members.into_iter().last().expect("nonempty corpus");
            (m.function, json!({ "family": "corpus", "seed": a.seed, "index": a.index, "id": m.id }))
        }
        WitnessKind::ModulatedFm => {
            let shift = per_axis(&a.shift, dim, "--shift")?;
            let system = WaveletSystem::new(a.order)?;
            (modulated_witness(&shift, &system, &a.grid)?, json!({ "family": "modulated_fm", "shift": shift, "order": a.order }))
        }
        kind => {
            let levels = per_axis(&a.levels, dim, "--levels")?;
            let (f, name) = match kind {
                WitnessKind::AnnulusFk => (annulus_witness_at(&levels, p, &a.grid)?, "annulus_fk"),
                WitnessKind::AnnulusSpectrum => (annulus_spectrum_witness(&levels, p, &a.grid)?, "annulus_spectrum"),
                WitnessKind::PlateauPacket => (plateau_packet(&levels, &a.grid)?, "plateau_packet"),
                _ => (dilated_gaussian(&levels, &a.grid)?, "dilated_gaussian"),
            };
            (f, json!({ "family": name, "levels": levels, "p": exponent }))
        }
    };
    if f.max_abs() == 0.0 {
        return Err(failure("invalid_argument", "the witness vanishes on this grid; refine it"));
    }
    write_function(&a.output, &f, &provenance)?;
    Ok(0)
}

fn cmd_emit_plotdata(report: &Path, output: Option<PathBuf>) -> Result<u8, Failure> {
    let file = fs::File::open(report).map_err(|e| failure("io", format!("{}: {e}", report.display())))?;
    let r = ExperimentReport::read_json(io::BufReader::new(file))?;
    match output {
        Some(path) => r.write_plotdata(BufWriter::new(fs::File::create(path)?))?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            r.write_plotdata(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, output_dir } => cmd_run(&config, output_dir),
        Command::Norm { file, space, tail_tolerance, max_level } => cmd_norm(&file, &space, tail_tolerance, max_level),
        Command::Fourier { input, output, inverse, as_space } => cmd_fourier(&input, &output, inverse, as_space),
        Command::WaveletCheck { order, axis_grid, member_grid, members, seed, level, gram_tolerance, round_trip_tolerance, report } => {
            cmd_wavelet_check(WaveletCheckArgs { order, axis_grid, member_grid, members, seed, level, gram_tolerance, round_trip_tolerance, report })
        }
        Command::Witness { family, grid, output, levels, p, shift, order, seed, index } => {
            cmd_witness(WitnessArgs { family, grid, output, levels, p, shift, order, seed, index })
        }
        Command::EmitPlotdata { report, output } => cmd_emit_plotdata(&report, output),
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&mixsmooth_cli::config::schema()).expect("schemas serialise"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(body)) => {
            diagnostic("error", body);
            ExitCode::from(EXIT_ERROR)
        }
    }
}
