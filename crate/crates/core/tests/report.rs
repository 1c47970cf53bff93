use std::process::Command as Process;

use clap::Parser;
use toda_spectra::report::cli::{main_with_args, Cli};
use toda_spectra::report::csv::{num, SPECTRA_HEADER};
use toda_spectra::report::{compute, input_hash, summary_json, write_artifacts, Command, RunConfig};
use toda_spectra::Error;

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_toda-spectra"))
}

fn config_key(r: Result<RunConfig, Error>) -> (String, String) {
    match r {
        Err(Error::Config { key, expected }) => (key, expected),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn toml_round_trip_and_json_echo() {
    let text = r#"
command = "scan"
leaf = [3, 6]
zeta = [0.0, 0.01]
[renorm]
J = 40
alpha = 2.5
[scan]
bracket = [0.05, 0.2]
q = [1, 2]
points = 7
"#;
    let cfg = RunConfig::from_toml_str(text).unwrap();
    assert_eq!(cfg.command, Command::Scan);
    assert_eq!(cfg.renorm.j_max, 40);
    assert_eq!(cfg.renorm.beta, 1.0);
    cfg.validate().unwrap();
    assert_eq!(RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    let echo = summary_json(&cfg, &compute(&RunConfig::demo(Command::Series)).unwrap());
    let back = RunConfig::from_json_str(&echo["config"].to_string()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn config_errors_name_the_offending_key() {
    let (k, e) = config_key(RunConfig::from_toml_str("[renorm]\nalpha = \"two\"\n"));
    assert_eq!(k, "renorm.alpha");
    assert!(e.contains("f64"), "{e}");
    let (k, _) = config_key(RunConfig::from_toml_str("ordr = 3\n"));
    assert!(k == "ordr" || k == "<root>", "{k}");
    let (k, _) = config_key(RunConfig::from_toml_str("[scan]\npoints = -1\n"));
    assert_eq!(k, "scan.points");
    let (k, _) = config_key(RunConfig::from_toml_str("command = \"plot\"\n"));
    assert_eq!(k, "command");

    let mut c = RunConfig::demo(Command::Scan);
    c.scan.delta_lo = 0.5;
    assert_eq!(config_key(c.validate().map(|_| c.clone())).0, "scan.delta_lo");
    let mut c = RunConfig::demo(Command::Spectrum);
    c.renorm.alpha = 0.5;
    assert_eq!(config_key(c.validate().map(|_| c.clone())).0, "renorm.alpha");
    let mut c = RunConfig::demo(Command::Series);
    c.zeta = vec![0.1, 0.2];
    assert_eq!(config_key(c.validate().map(|_| c.clone())).0, "zeta");
    let mut c = RunConfig::demo(Command::Series);
    c.leaf = vec![1];
    assert_eq!(config_key(c.validate().map(|_| c.clone())).0, "leaf");
}

#[test]
fn input_hash_ignores_location_and_threads() {
    let a = RunConfig::demo(Command::Char);
    let b = RunConfig { out: Some("elsewhere".into()), threads: Some(3), ..a.clone() };
    assert_eq!(input_hash(&a), input_hash(&b));
    let c = RunConfig { zeta: vec![0.21], ..a.clone() };
    assert_ne!(input_hash(&a), input_hash(&c));
    assert!(input_hash(&a).starts_with("sha256:") && input_hash(&a).len() == 7 + 64);
}

#[test]
fn float_format_is_fixed() {
    assert_eq!(num(0.1), "1.0000000000000001e-1");
    assert_eq!(num(-2.5), "-2.5000000000000000e0");
    assert_eq!(SPECTRA_HEADER.join(","), "delta,epsilon,L,q,k,mu,mu_over_L,gamma,c_norm,c_hs,status");
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let mut cfg = RunConfig::demo(Command::Spectrum);
    cfg.leaf = vec![3, 6];
    cfg.zeta = vec![0.1, 0.01];
    cfg.renorm.j_max = 30;
    let a = compute(&RunConfig { threads: Some(1), ..cfg.clone() }).unwrap();
    let b = compute(&RunConfig { threads: Some(3), ..cfg.clone() }).unwrap();
    assert_eq!(a, b);
    let body = a.file("spectrum.csv").unwrap();
    assert!(body.starts_with(&SPECTRA_HEADER.join(",")));

    let mut lv = RunConfig::demo(Command::Leaves);
    lv.leaves.b.n = 12;
    lv.leaves.y.n = 10;
    let a = compute(&RunConfig { threads: Some(1), ..lv.clone() }).unwrap();
    let b = compute(&RunConfig { threads: Some(4), ..lv }).unwrap();
    assert_eq!(a.file("phase.csv"), b.file("phase.csv"));
    assert_eq!(a.file("contour.csv"), b.file("contour.csv"));
}

#[test]
fn artifacts_are_written_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::demo(Command::Char);
    let art = compute(&cfg).unwrap();
    let files = write_artifacts(dir.path(), &cfg, &art).unwrap();
    assert_eq!(files.last().unwrap().file_name().unwrap(), "summary.json");
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["command"], "char");
    assert_eq!(summary["failed_points"], 0);
    assert_eq!(std::fs::read_to_string(dir.path().join("char.csv")).unwrap(), art.file("char.csv").unwrap());
    // no temporary files are left behind
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), art.files.len() + 1);
}

#[test]
fn cli_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "leaf = [3]\nzeta = [0.1]\n[renorm]\nJ = 20\n").unwrap();
    let cli = Cli::try_parse_from([
        "toda-spectra", "--config", path.to_str().unwrap(), "spectrum", "--zeta", "0.12", "--alpha", "3",
    ])
    .unwrap();
    let (cfg, out) = cli.resolve(Some("2".into())).unwrap();
    assert_eq!(cfg.command, Command::Spectrum);
    assert_eq!(cfg.leaf, vec![3]);
    assert_eq!(cfg.zeta, vec![0.12]);
    assert_eq!(cfg.renorm.j_max, 20);
    assert_eq!(cfg.renorm.alpha, 3.0);
    assert_eq!(cfg.threads, Some(2));
    assert_eq!(out, std::path::PathBuf::from("out/spectrum"));

    let cli = Cli::try_parse_from(["toda-spectra", "--threads", "5", "char"]).unwrap();
    assert_eq!(cli.resolve(Some("2".into())).unwrap().0.threads, Some(5));
    let cli = Cli::try_parse_from(["toda-spectra", "char"]).unwrap();
    assert!(matches!(cli.resolve(Some("many".into())), Err(Error::Config { .. })));
    let cli = Cli::try_parse_from(["toda-spectra", "leaves", "--b", "0,1"]).unwrap();
    assert_eq!(config_key(cli.resolve(None).map(|r| r.0)).0, "leaves.b");
    // --log without --b moves the b axis into (0, 1)
    let cli = Cli::try_parse_from(["toda-spectra", "leaves", "--log"]).unwrap();
    let b = cli.resolve(None).unwrap().0.leaves.b;
    assert!(b.lo > 0.0 && b.hi < 1.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ok");
    assert_eq!(main_with_args(["toda-spectra", "--out", out.to_str().unwrap(), "char"]), 0);
    assert!(out.join("summary.json").exists());
    assert_eq!(main_with_args(["toda-spectra", "char", "--alpha", "2"]), 1);
    assert_eq!(main_with_args(["toda-spectra", "--out", out.to_str().unwrap(), "series", "--order", "10"]), 1);

    // one degenerate cell out of two: partial failure
    let part = dir.path().join("part");
    let st = bin()
        .args(["--out", part.to_str().unwrap(), "leaves", "--pole", "--b", "0.4,0.4,1", "--grid", "0.04,0.1,2"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(part.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["failed_points"], 1);

    let st = bin().args(["series", "--leaf", "1"]).current_dir(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(1));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[lg]\ndt = \"fast\"\n").unwrap();
    let o = bin().args(["--config", bad.to_str().unwrap(), "lg"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lg.dt"));
}

#[test]
fn small_alpha_is_a_warning_not_an_error() {
    let mut cfg = RunConfig::demo(Command::Spectrum);
    cfg.leaf = vec![2];
    cfg.zeta = vec![0.2];
    cfg.renorm.alpha = 1.1;
    let art = compute(&cfg).unwrap();
    assert_eq!(art.failed(), 0);
    assert_eq!(art.results["admissibility"]["ok"], false);
    assert_eq!(art.results["warnings"].as_array().unwrap().len(), 1);

    cfg.renorm.alpha = 3.0;
    let art = compute(&cfg).unwrap();
    assert_eq!(art.results["admissibility"]["ok"], true);
    assert!(art.results["warnings"].as_array().unwrap().is_empty());

    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["--out", dir.path().to_str().unwrap(), "spectrum", "--leaf", "2", "--zeta", "0.2", "--alpha", "1.1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: alpha"));
}
