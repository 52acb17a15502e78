use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use molqudit::budget::{circuit_budget, ErrorBudget, NoiseSpec};
use molqudit::circuit::{deutsch_run, LogicalMapping};
use molqudit::{Engine, MoleculeSpec, QuditPlan};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_molqudit")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn plan_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("plans").join(name)
}

#[test]
fn levels_of_one_manifold() {
    let o = run(&["levels", "--molecule", "caf", "--manifold", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rows.headers().unwrap().iter().collect::<Vec<_>>()[3], "energy_MHz");
    assert_eq!(rows.records().count(), 4);
}

#[test]
fn usage_errors_exit_2() {
    let o = run(&["zeeman-map", "--molecule", "caf", "--from", "10", "--to", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["deutsch", "--molecule", "caf", "--plan", "x.json", "--oracle", "5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["levels"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn schema_violation_exits_3_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    let text = molqudit::molecule::CAF_TOML.replace("g_S = {", "g_Z = {");
    std::fs::write(&p, text).unwrap();
    let o = run(&["levels", "--molecule", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    let line = molqudit::molecule::CAF_TOML.lines().position(|l| l.starts_with("g_S")).unwrap() + 1;
    assert!(err.contains(&format!("bad.toml:{line}:")), "{err}");
}

#[test]
fn search_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&[
            "search",
            "--molecule",
            "caf",
            "--primary-N",
            "1",
            "--aux-N",
            "0",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let plan = QuditPlan::load(&a).unwrap();
    assert_eq!(plan.to_json().unwrap().as_bytes(), &bytes[..]);
    assert_eq!(QuditPlan::from_json(&plan.to_json().unwrap()).unwrap(), plan);
}

#[test]
fn single_level_plan_warns() {
    let o = run(&[
        "search",
        "--molecule",
        "caf",
        "--primary-N",
        "1",
        "--aux-N",
        "0",
        "--p-loss-max",
        "0",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("single level"));
    let plan = QuditPlan::from_json(&stdout(&o)).unwrap();
    assert_eq!(plan.dimension(), 1);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "molecule = \"caf\"\nb_gauss = 50.0\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_cfg = stdout(&run(&["--config", cfg, "levels"]));
    let direct = stdout(&run(&["levels", "--molecule", "caf", "--B", "50"]));
    assert_eq!(from_cfg, direct);
    let flag = stdout(&run(&["--config", cfg, "levels", "--B", "60"]));
    assert_eq!(flag, stdout(&run(&["levels", "--molecule", "caf", "--B", "60"])));
    assert_ne!(flag, from_cfg);
}

#[test]
fn deutsch_report_carries_circuit_budget() {
    let plan = plan_path("caf_n1.json");
    let o = run(&[
        "deutsch",
        "--molecule",
        "caf",
        "--plan",
        plan.to_str().unwrap(),
        "--oracle",
        "3",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["verdict"], "balanced");
    let from_cli: ErrorBudget = serde_json::from_value(v["budget"].clone()).unwrap();

    let spec = MoleculeSpec::builtin("caf").unwrap();
    let plan = QuditPlan::load(&plan).unwrap();
    let spectrum = Engine::new(&spec, 2).unwrap().diagonalize(&plan.field).unwrap();
    let report = deutsch_run(&plan, &LogicalMapping::from_plan(&plan), 3).unwrap();
    let direct = circuit_budget(&spectrum, &spec, &plan, &report.schedule, &NoiseSpec::from_spec(&spec)).unwrap();
    assert_eq!(from_cli, direct);
}

#[test]
fn plan_for_other_molecule_is_rejected() {
    let plan = plan_path("rbcs_n1.json");
    let o = run(&["budget", "--molecule", "caf", "--plan", plan.to_str().unwrap(), "--oracle", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn compile_writes_pulse_table_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pulses.csv");
    let plan = plan_path("rbcs_n1.json");
    let o = run(&[
        "compile",
        "--molecule",
        "rbcs",
        "--plan",
        plan.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "H:1,2",
        "R:3:0.25",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("step,tone,frequency_MHz,rabi_Hz,phase_rad,polarization,duration_s\n"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    let o = run(&["compile", "--molecule", "rbcs", "--plan", plan.to_str().unwrap(), "H:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn transitions_in_khz() {
    let o = run(&[
        "transitions",
        "--molecule",
        "rbcs",
        "--from-N",
        "0",
        "--to-N",
        "1",
        "--unit",
        "khz",
        "--strength-min",
        "0.5",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().contains("f_kHz"));
    assert!(text.lines().count() > 1);
}
