use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mixsmooth::experiments::{ExperimentReport, Parameters};
use mixsmooth::SampledFunction;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mixsmooth"))
}

fn mixsmooth(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).env_remove("MIXSMOOTH_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Parsed JSON diagnostics on stderr.
fn diagnostics(o: &Output) -> Vec<Value> {
    String::from_utf8(o.stderr.clone()).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn workspace_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn reports(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json") && !p.to_string_lossy().ends_with("-config.json"))
        .collect();
    v.sort();
    v
}

const QUICK: &str = r#"{
  "grid": { "dim": 2, "half_width": 16, "points_per_axis": 256 },
  "corpus_size": 4,
  "experiments": [
    {
      "thresholds": [{ "metric": "bracket_width", "max": 4 }],
      "experiment": { "kind": "continuity_sweep", "p": 2 }
    },
    {
      "name": "tail",
      "experiment": { "kind": "compactness_tail_proxy", "p": 2, "r1": 0.5, "r2": 0.5, "levels": [1, 2, 3], "radii": [4, 8] }
    }
  ]
}"#;

fn sharpness_config(magnitude: f64) -> String {
    let axis = 256.0 * PI;
    format!(
        r#"{{ "experiments": [ {{
            "name": "sharpness",
            "grid": {{ "dim": 1, "half_width": {axis:?}, "points_per_axis": 32768 }},
            "thresholds": [{{ "metric": "min_growth", "min": 1.5 }}],
            "experiment": {{ "kind": "sharpness_blowup", "p": "inf", "index": "r1", "magnitude": {magnitude:?}, "levels": [3, 4, 5] }}
        }} ] }}"#
    )
}

#[test]
fn default_config_runs_clean_into_out() {
    let dir = tempfile::tempdir().unwrap();
    let config = workspace_file("configs/default.json");
    let o = mixsmooth(&["run", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}\n{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("result: PASS"));
    let out = dir.path().join("out");
    let files = reports(&out);
    assert_eq!(files.len(), 13);
    for f in &files {
        let text = fs::read_to_string(f).unwrap();
        let r = ExperimentReport::read_json(text.as_bytes()).unwrap();
        let mut again = Vec::new();
        r.write_json(&mut again).unwrap();
        assert_eq!(String::from_utf8(again).unwrap(), text, "{}", f.display());
        assert!(f.with_extension("csv").exists());
    }
}

#[test]
fn reports_are_deterministic_and_canonical_configs_keep_their_hash() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "quick.json", QUICK);
    let o = mixsmooth(&["run", "--config", config.to_str().unwrap(), "--output-dir", "a"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = dir.path().join("a");
    let canonical = fs::read_dir(&a).unwrap().map(|e| e.unwrap().path()).find(|p| p.to_string_lossy().ends_with("-config.json")).unwrap();
    let o = mixsmooth(&["run", "--config", canonical.to_str().unwrap(), "--output-dir", "b"], dir.path());
    assert_eq!(code(&o), 0);
    let b = dir.path().join("b");
    let names = |d: &Path| reports(d).iter().map(|p| p.file_name().unwrap().to_owned()).collect::<Vec<_>>();
    assert_eq!(names(&a), names(&b));
    for (x, y) in reports(&a).iter().zip(reports(&b)) {
        assert_eq!(fs::read(x).unwrap(), fs::read(&y).unwrap(), "{}", x.display());
        assert_eq!(fs::read(x.with_extension("csv")).unwrap(), fs::read(y.with_extension("csv")).unwrap());
    }
    let first: Value = serde_json::from_slice(&fs::read(&reports(&a)[0]).unwrap()).unwrap();
    let hash = first["provenance"]["config_hash"].as_str().unwrap();
    assert!(names(&a)[0].to_string_lossy().starts_with(&hash[..12]));
    assert_eq!(first["parameters"]["seed"], 7);
}

#[test]
fn malformed_configs_exit_one_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.json", "{ \"experiments\": [ "),
        ("unknown.json", r#"{ "experiments": [ { "experiment": { "kind": "continuity_sweep", "p": 2, "bogus": 1 } } ] }"#),
        ("kind.json", r#"{ "experiments": [ { "experiment": { "kind": "compact_claim" } } ] }"#),
        ("exponent.json", r#"{ "experiments": [ { "experiment": { "kind": "continuity_sweep", "p": 0.5 } } ] }"#),
    ];
    for (name, text) in cases {
        let p = write(dir.path(), name, text);
        let o = mixsmooth(&["run", "--config", p.to_str().unwrap()], dir.path());
        assert_eq!(code(&o), 1, "{name}");
        let d = diagnostics(&o);
        assert_eq!(d[0]["kind"], "config", "{name}");
        assert_eq!(d[0]["level"], "error");
        assert!(d[0]["line"].is_u64(), "{name}: {}", d[0]);
    }
    assert!(!dir.path().join("out").exists());
    let o = mixsmooth(&["run", "--config", "missing.json"], dir.path());
    assert_eq!(code(&o), 1);
    assert_eq!(diagnostics(&o)[0]["kind"], "io");
}

#[test]
fn sharpness_without_magnitude_fails_its_growth_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "zero.json", &sharpness_config(0.0));
    let o = mixsmooth(&["run", "--config", p.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let d = diagnostics(&o);
    assert_eq!(d[0]["level"], "threshold");
    assert_eq!(d[0]["metric"], "min_growth");
    assert!((d[0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(stdout(&o).contains("result: FAIL"));
    assert_eq!(reports(&dir.path().join("out")).len(), 1);

    let p = write(dir.path(), "half.json", &sharpness_config(0.5));
    let o = mixsmooth(&["run", "--config", p.to_str().unwrap(), "--output-dir", "half"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{ "experiments": [
        { "experiment": { "kind": "noncompactness_separation", "family": "plateau_packet", "p": "inf", "levels": [2, 3] } },
        { "grid": { "dim": 1, "half_width": 16, "points_per_axis": 512 }, "inputs": { "source": "corpus", "size": 2 },
          "experiment": { "kind": "continuity_sweep", "p": 2 } }
    ] }"#;
    let p = write(dir.path(), "high.json", text);
    let o = mixsmooth(&["run", "--config", p.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    let d = diagnostics(&o);
    assert_eq!(d[0]["kind"], "invalid_argument");
    assert_eq!(d.len(), 1);
    // the failing entry does not stop the others
    assert_eq!(reports(&dir.path().join("out")).len(), 1);
    assert!(stdout(&o).contains("result: ERROR"));
}

fn norm_output(o: &Output) -> (f64, f64, String) {
    let text = stdout(o);
    let field = |key: &str| text.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim().to_string();
    (field("norm ").parse().unwrap(), field("tail ").parse().unwrap(), field("space "))
}

#[test]
fn norm_of_the_unit_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    let o = mixsmooth(&["witness", "corpus", "--grid", "1,16,512", "--index", "0", "--output", "g.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, provenance) = SampledFunction::read_with_provenance(fs::File::open(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(provenance.unwrap()["id"], "c00-unit-gaussian");

    let o = mixsmooth(&["norm", "g.json", "iso:Lp:p=2"], dir.path());
    assert_eq!(code(&o), 0);
    let (v, tail, space) = norm_output(&o);
    assert!((v - PI.powf(0.25)).abs() < 1e-6, "{v}");
    assert_eq!(tail, 0.0);
    assert_eq!(space, "iso:Lp:p=2");
    let digits = stdout(&o).lines().next().unwrap().trim_start_matches("norm ").split('e').next().unwrap().replace('.', "").len();
    assert_eq!(digits, 12);

    let o = mixsmooth(&["norm", "g.json", "S:C:r=-1"], dir.path());
    assert_eq!(code(&o), 0);
    let (c, _, space) = norm_output(&o);
    assert_eq!(space, "S:B:r=-1:p=inf:q=inf");
    let o = mixsmooth(&["norm", "g.json", "S:B:r=-1:p=inf:q=inf"], dir.path());
    assert_eq!(norm_output(&o).0, c);
}

#[test]
fn invalid_norm_requests_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    mixsmooth(&["witness", "corpus", "--grid", "1,16,256", "--output", "g.json"], dir.path());
    for spec in ["S:B:p=0.5", "S:B:r=0:p=0.5:q=1", "S:Q:r=1:p=2"] {
        let o = mixsmooth(&["norm", "g.json", spec], dir.path());
        assert_eq!(code(&o), 1, "{spec}");
        assert_eq!(diagnostics(&o)[0]["kind"], "space_spec");
    }
    assert!(String::from_utf8(mixsmooth(&["norm", "g.json", "S:B:p=0.5"], dir.path()).stderr).unwrap().contains("p < 1"));
    let o = mixsmooth(&["norm", "absent.json", "iso:Lp:p=2"], dir.path());
    assert_eq!(code(&o), 1);
    write(dir.path(), "junk.json", "{}");
    assert_eq!(code(&mixsmooth(&["norm", "junk.json", "iso:Lp:p=2"], dir.path())), 1);
    assert_eq!(code(&mixsmooth(&["norm", "g.json"], dir.path())), 1);
}

#[test]
fn fourier_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    mixsmooth(&["witness", "corpus", "--grid", "2,16,64", "--index", "2", "--output", "f.json"], dir.path());
    assert_eq!(code(&mixsmooth(&["fourier", "f.json", "--output", "hat.json"], dir.path())), 0);
    assert_eq!(code(&mixsmooth(&["fourier", "hat.json", "--inverse", "--output", "back.json"], dir.path())), 0);
    let f = SampledFunction::load(&dir.path().join("f.json")).unwrap();
    let back = SampledFunction::load(&dir.path().join("back.json")).unwrap();
    let err = f.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-13, "{err}");
    // the spectrum is not a space function
    assert_eq!(code(&mixsmooth(&["fourier", "hat.json", "--output", "x.json"], dir.path())), 1);
    assert_eq!(code(&mixsmooth(&["norm", "hat.json", "iso:Lp:p=2"], dir.path())), 1);
    assert_eq!(code(&mixsmooth(&["fourier", "f.json", "--as-space", "--output", "img.json"], dir.path())), 0);
    let img = SampledFunction::load(&dir.path().join("img.json")).unwrap();
    assert_eq!(img.grid(), &f.grid().dual());
    let o = mixsmooth(&["norm", "img.json", "iso:Lp:p=2"], dir.path());
    let o2 = mixsmooth(&["norm", "f.json", "iso:Lp:p=2"], dir.path());
    assert!((norm_output(&o).0 - norm_output(&o2).0).abs() < 1e-10);
}

#[test]
fn witness_files() {
    let dir = tempfile::tempdir().unwrap();
    let ok = [
        vec!["annulus-fk", "--grid", "1,128,4096", "--levels", "3"],
        vec!["annulus-spectrum", "--grid", "2,64,256", "--levels", "2,0", "--p", "2"],
        vec!["modulated-fm", "--grid", "1,100.53096491487338,1024", "--shift", "-8"],
        vec!["plateau-packet", "--grid", "1,201.06192982974676,4096", "--levels", "3"],
        vec!["dilated-gaussian", "--grid", "2,64,256", "--levels", "1"],
    ];
    for args in ok {
        let mut a = vec!["witness"];
        a.extend(&args);
        a.extend(["--output", "w.json"]);
        let o = mixsmooth(&a, dir.path());
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let (g, prov) = SampledFunction::read_with_provenance(fs::File::open(dir.path().join("w.json")).unwrap()).unwrap();
        assert!(g.max_abs() > 0.0);
        assert!(prov.unwrap()["family"].is_string());
    }
    let bad = [
        vec!["plateau-packet", "--grid", "1,64,4096", "--levels", "2"],
        vec!["annulus-spectrum", "--grid", "2,16,128", "--levels", "2,0"],
        vec!["annulus-fk", "--grid", "2,64,256", "--levels", "1,2,3"],
        vec!["annulus-fk", "--grid", "1,64,4000", "--levels", "1"],
        vec!["annulus-fk", "--grid", "1,64,4096", "--levels", "1", "--p", "0.5"],
    ];
    for args in bad {
        let mut a = vec!["witness"];
        a.extend(&args);
        a.extend(["--output", "w.json"]);
        assert_eq!(code(&mixsmooth(&a, dir.path())), 1, "{args:?}");
    }
}

#[test]
fn plot_data_series() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "quick.json", QUICK);
    assert_eq!(code(&mixsmooth(&["run", "--config", config.to_str().unwrap()], dir.path())), 0);
    let tail = reports(&dir.path().join("out")).into_iter().find(|p| p.to_string_lossy().ends_with("-tail.json")).unwrap();
    let o = mixsmooth(&["emit-plotdata", tail.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("series,x,y"));
    let levels: Vec<f64> = text.lines().filter(|l| l.starts_with("envelope_by_level,")).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(levels, [1.0, 2.0, 3.0]);

    let p = write(dir.path(), "sharp.json", &sharpness_config(0.5));
    mixsmooth(&["run", "--config", p.to_str().unwrap(), "--output-dir", "sharp"], dir.path());
    let sharp = &reports(&dir.path().join("sharp"))[0];
    let o = mixsmooth(&["emit-plotdata", sharp.to_str().unwrap(), "--output", "s.csv"], dir.path());
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("ratio_by_level,")).count(), 3);

    let empty = ExperimentReport::new("empty", Parameters::new(), Vec::new());
    let mut buf = Vec::new();
    empty.write_json(&mut buf).unwrap();
    fs::write(dir.path().join("empty.json"), buf).unwrap();
    let o = mixsmooth(&["emit-plotdata", "empty.json"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "series,x,y\n");
    assert_eq!(code(&mixsmooth(&["emit-plotdata", "quick.json"], dir.path())), 1);
}

#[test]
fn wavelet_check_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let o = mixsmooth(&["wavelet-check", "--members", "2", "--report", "w.json"], dir.path());
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("gram_error"));
    let r = ExperimentReport::read_json(fs::File::open(dir.path().join("w.json")).unwrap()).unwrap();
    assert!(r.passed());
    // a grid too coarse for the Gram quadrature fails the tolerance
    let o = mixsmooth(&["wavelet-check", "--members", "1", "--axis-grid", "1,16,256"], dir.path());
    assert_eq!(code(&o), 2);
    assert_eq!(code(&mixsmooth(&["wavelet-check", "--order", "1"], dir.path())), 1);
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["norm", "x.json", "iso:Lp:p=2"]).current_dir(dir.path()).env("MIXSMOOTH_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 1);
    assert_eq!(diagnostics(&o)[0]["kind"], "environment");
    mixsmooth(&["witness", "corpus", "--grid", "1,16,256", "--output", "g.json"], dir.path());
    let o = bin().args(["norm", "g.json", "iso:Lp:p=2"]).current_dir(dir.path()).env("MIXSMOOTH_THREADS", "1").output().unwrap();
    assert_eq!(code(&o), 0);
}

#[test]
fn published_schema_is_current() {
    let dir = tempfile::tempdir().unwrap();
    let o = mixsmooth(&["schema"], dir.path());
    assert_eq!(code(&o), 0);
    let published = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/run-config.schema.json")).unwrap();
    assert_eq!(stdout(&o), published);
}
