use std::path::{Path, PathBuf};
use std::process::Command;

use sfde::cli::{config_hash, resolve, Check, ExperimentConfig, ModelRef};
use sfde::models::builtin;
use sfde::models::ModelDef;
use sfde::segment::{write_segment_csv, Segment, TailMode};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn sfde(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sfde")).args(args).env("SFDE_WORKERS", "2").output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// `SFDE_BLESS=1` rewrites the files instead of comparing.
#[test]
fn shipped_model_files_match_builtins() {
    let dir = repo().join("configs/models");
    let bless = std::env::var_os("SFDE_BLESS").is_some();
    for (name, def) in builtin::shipped() {
        let p = dir.join(format!("{name}.json"));
        if bless {
            std::fs::write(&p, serde_json::to_string_pretty(&def).unwrap() + "\n").unwrap();
        }
        let on_disk = ModelDef::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(on_disk, def, "{name}");
    }
}

#[test]
fn example_configs_parse() {
    for e in std::fs::read_dir(repo().join("configs")).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "json") {
            let cfg = ExperimentConfig::load(&p).unwrap();
            resolve(cfg, p.parent().unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

#[test]
fn simulate_zero_model_writes_one_constant_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"model": "zero", "xi": {{"constant": [0.75]}}, "solver": {{"horizon": 1.0}},
               "output_dir": "{}", "checks": [{{"kind": "simulate"}}]}}"#,
            out.display()
        ),
    );
    let (code, _, err) = sfde(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let paths: Vec<_> = std::fs::read_dir(out.join("paths")).unwrap().collect();
    assert_eq!(paths.len(), 1);
    let mut rdr = csv::Reader::from_path(out.join("paths/simulate.csv")).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[1].parse::<f64>().unwrap(), 0.75);
        rows += 1;
    }
    assert_eq!(rows, 101);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["versions"]["sfde"].is_string());
}

#[test]
fn oversized_step_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": "linear", "xi": {"constant": [1, 0]}, "solver": {"dt": 0.8, "horizon": 8.0},
            "output_dir": "unused", "checks": [{"kind": "simulate"}]}"#,
    );
    let (code, _, err) = sfde(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("e^(r dt) <= 2"), "{err}");
}

#[test]
fn errors_have_distinct_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let kind = write(
        dir.path(),
        "k.json",
        r#"{"model": {"name": "m", "kind": "quantum", "rate": 1, "diffusion": []},
            "xi": {"constant": [1]}, "checks": [{"kind": "simulate"}]}"#,
    );
    let (code, _, err) = sfde(&["run", kind.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown variant `quantum`"), "{err}");

    let (code, _, err) = sfde(&["simulate", "--model", "nosuch", "--xi", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown model 'nosuch'"), "{err}");

    let (code, _, err) = sfde(&["simulate", "--model", "missing/m.json", "--xi", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("does not exist"), "{err}");

    let (code, _, err) = sfde(&["constants", "--l1", "1", "--l2", "0", "--beta", "-1", "--r", "0.5"]);
    assert_eq!(code, 1);
    assert!(err.contains("beta"), "{err}");

    let (code, _, err) = sfde(&["run", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("absent.json"), "{err}");
}

#[test]
fn linear_decay_example_recovers_the_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = repo().join("configs/linear_decay.json");
    let (code, stdout, err) = sfde(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}{err}");
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("reports/decay.json")).unwrap()).unwrap();
    let rate = rep["reports"][0]["estimate"].as_f64().unwrap();
    assert!((rate - 1.0).abs() < 0.05, "{rate}");
    assert!(out.join("paths/decay_moments.csv").exists());
}

#[test]
fn diagonal_couple_has_zero_density() {
    let dir = tempfile::tempdir().unwrap();
    let m = builtin::linear(Default::default()).unwrap();
    let seg = Segment::from_fn(2, 0.01, 2000, TailMode::Constant, |t, row| {
        row[0] = (2.0 * t).sin();
        row[1] = 0.3;
    })
    .unwrap();
    let a = dir.path().join("a.csv");
    write_segment_csv(&seg, m.rate(), &a).unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = sfde(&[
        "couple", "--model", "linear", "--xi", a.to_str().unwrap(), "--eta", a.to_str().unwrap(),
        "--horizon", "2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let mut rdr = csv::Reader::from_path(out.join("paths/couple.csv")).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "logR").unwrap();
    let mut n = 0;
    for rec in rdr.records() {
        assert_eq!(rec.unwrap()[col].parse::<f64>().unwrap(), 0.0);
        n += 1;
    }
    assert_eq!(n, 201);
}

#[test]
fn constants_subcommand_prints_the_table() {
    let (code, out, _) = sfde(&["constants", "--l1", "1", "--l2", "0", "--beta", "1", "--r", "0.5"]);
    assert_eq!(code, 0);
    let get = |key: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(key)).unwrap();
        line.split('=').nth(1).unwrap().trim().parse().unwrap()
    };
    assert!((get("p0") - 2.3650520069974522).abs() < 1e-6);
    assert!((get("alpha0") - 0.46398051649898112).abs() < 1e-6);
    assert!((get("Lambda").ln() - 8.611312553283206).abs() < 1e-6);
    assert!((get("threshold") / 3312734.251016619 - 1.0).abs() < 1e-5);
    assert!(get("mu") > 0.0);
}

#[test]
fn validate_subcommand_reports_and_flags_violations() {
    let dir = tempfile::tempdir().unwrap();
    let model = repo().join("configs/models/neutral.json");
    let out = dir.path().join("ok");
    let (code, _, err) = sfde(&[
        "validate", "--model", model.to_str().unwrap(), "--trials", "10000", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("reports/validate.json")).unwrap()).unwrap();
    assert_eq!(rep["trials"], 10000);
    assert_eq!(rep["pass"], true);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&builtin::neutral_injected_def(1.5)).unwrap()).unwrap();
    let out = dir.path().join("bad");
    let (code, stdout, _) = sfde(&[
        "validate", "--model", bad.to_str().unwrap(), "--trials", "2000", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{stdout}");
    assert!(stdout.contains("VIOLATION"));
}

#[test]
fn reruns_are_byte_identical_and_workers_do_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, workers: &str| -> String {
        let out = dir.path().join(tag);
        let (code, _, err) = sfde(&[
            "alh", "--model", "linear", "--xi", "0.5,0", "--eta", "0,0.2", "--n-paths", "200", "--workers", workers,
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        std::fs::read_to_string(out.join("reports/alh.json")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
}

fn parsed(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

fn hash(cfg: ExperimentConfig) -> String {
    let r = resolve(cfg, Path::new(".")).unwrap();
    r.hash
}

#[test]
fn config_hash_tracks_meaningful_fields_only() {
    let base = r#"{"model": "linear", "xi": {"constant": [1, 0]}, "eta": {"constant": [0, 0]},
                   "checks": [{"kind": "alh", "mc": {"n_paths": 100}}]}"#;
    let h0 = hash(parsed(base));

    // Spelling out defaults, moving the output, or changing the worker count
    // leaves the hash alone.
    let same = [
        r#"{"model": "linear", "xi": {"constant": [1, 0]}, "eta": {"constant": [0, 0]},
            "solver": {"dt": 0.01}, "coupling": {"measure": "Q"}, "seed": 1,
            "checks": [{"kind": "alh", "mc": {"n_paths": 100, "dt": 0.02}}]}"#,
        r#"{"model": "linear", "xi": {"constant": [1, 0]}, "eta": {"constant": [0, 0]},
            "output_dir": "elsewhere", "workers": 7,
            "checks": [{"kind": "alh", "mc": {"n_paths": 100}}]}"#,
    ];
    for s in same {
        assert_eq!(hash(parsed(s)), h0);
    }
    let mut inline = parsed(base);
    inline.model = Some(ModelRef::Inline(Box::new(builtin::shipped().remove(0).1)));
    assert_eq!(hash(inline), h0);

    let changed = [
        base.replace(r#""n_paths": 100"#, r#""n_paths": 101"#),
        base.replace(r#"[0, 0]"#, r#"[0, 0.1]"#),
        base.replace(r#""model": "linear""#, r#""model": "linear_mult""#),
        base.replace(r#""checks""#, r#""seed": 2, "checks""#),
        base.replace(r#""checks""#, r#""coupling": {"lambda": 7}, "checks""#),
    ];
    for s in &changed {
        assert_ne!(hash(parsed(s)), h0, "{s}");
    }
}

#[test]
fn hash_follows_segment_file_contents() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let cfg = parsed(&format!(
        r#"{{"model": "linear", "xi": {{"csv": "{}"}}, "checks": [{{"kind": "simulate"}}]}}"#,
        a.display()
    ));
    write_segment_csv(&Segment::constant(&[1.0, 0.0], 0.01, 2000, TailMode::Constant).unwrap(), 1.0, &a).unwrap();
    let h1 = config_hash(&cfg, None, Path::new(".")).unwrap();
    write_segment_csv(&Segment::constant(&[1.0, 0.5], 0.01, 2000, TailMode::Constant).unwrap(), 1.0, &a).unwrap();
    let h2 = config_hash(&cfg, None, Path::new(".")).unwrap();
    assert_ne!(h1, h2);
}

#[test]
fn configuration_preconditions() {
    let cases = [
        (r#"{"model": "linear", "xi": {"constant": [1, 0]}, "seed": 0, "checks": [{"kind": "simulate"}]}"#, "seed"),
        (r#"{"model": "linear", "xi": {"constant": [1, 0]}, "workers": 0, "checks": [{"kind": "simulate"}]}"#, "worker"),
        (r#"{"model": "linear", "xi": {"constant": [1, 0]}, "checks": []}"#, "no checks"),
        (r#"{"model": "linear", "xi": {"constant": [1, 0]}, "checks": [{"kind": "alh"}]}"#, "eta"),
        (r#"{"model": "linear", "checks": [{"kind": "simulate"}]}"#, "xi"),
        (r#"{"xi": {"constant": [1]}, "checks": [{"kind": "simulate"}]}"#, "model"),
        (r#"{"model": "linear", "xi": {"constant": [1]}, "checks": [{"kind": "simulate"}]}"#, "dimension"),
        (
            r#"{"model": "linear", "xi": {"constant": [1, 0]}, "eta": {"constant": [0, 0]},
                "checks": [{"kind": "alh", "mc": {"dt": 1.0}}]}"#,
            "e^(r dt)",
        ),
    ];
    for (text, needle) in cases {
        let err = resolve(parsed(text), Path::new(".")).err().unwrap().to_string();
        assert!(err.contains(needle), "{needle}: {err}");
    }
    assert!(ExperimentConfig::from_json(r#"{"checks": [{"kind": "alh", "bogus": 1}]}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"checks": [], "extra": 1}"#).is_err());
    let ok = parsed(r#"{"checks": [{"kind": "constants", "l1": 1, "l2": 0, "beta": 1, "r": 0.5}]}"#);
    assert!(matches!(ok.checks[0], Check::Constants(_)));
    resolve(ok, Path::new(".")).unwrap();
}
