use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dhams(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dhams"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn tiny(out: &Path, extra: &str) -> String {
    format!(
        r#"{{
            "target": {{"kind": "discrete_gaussian", "dim": 2, "k": 1, "sigma": 1.0, "rho": 0.2}},
            "sampler": {{"kind": "vdhams", "delta": 1.0, "epsilon": 0.8, "phi": 0.5}},
            "chains": 2, "draws": 10, "seed": 5, "output_dir": {:?}{extra}
        }}"#,
        out.display().to_string()
    )
}

fn run_ok(args: &[&str]) -> Output {
    let o = dhams(args);
    assert!(
        o.status.success(),
        "{:?}\n{}",
        o.status,
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

#[test]
fn sample_writes_one_row_per_draw() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "c.json", &tiny(&out, ""));
    run_ok(&["sample", "--config", cfg.to_str().unwrap()]);
    let draws = std::fs::read_to_string(out.join("draws.csv")).unwrap();
    let mut lines = draws.lines();
    assert_eq!(lines.next().unwrap(), "chain,iter,s_1,s_2,f,accepted");
    assert_eq!(lines.count(), 20);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 5);
    assert_eq!(manifest["summary"]["acceptance_rates"].as_array().unwrap().len(), 2);
    assert!(manifest["summary"]["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn same_seed_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &tiny(&dir.path().join("unused"), ""));
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        run_ok(&[
            "sample", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--chains", "5", "--threads", threads,
        ]);
        outputs.push(std::fs::read(out.join("draws.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let other = dir.path().join("other");
    run_ok(&[
        "sample", "--config", cfg.to_str().unwrap(), "--out", other.to_str().unwrap(),
        "--chains", "5", "--seed", "6",
    ]);
    assert_ne!(std::fs::read(other.join("draws.csv")).unwrap(), outputs[0]);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let text = tiny(&out, "").replace("\"phi\": 0.5", "\"phi\": 0.5, \"gamma\": 3");
    let cfg = write_config(dir.path(), "unknown.json", &text);
    let o = dhams(&["sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));

    let text = tiny(&out, "").replace("\"phi\": 0.5", "\"phi\": 0.5, \"beta\": 2");
    let cfg = write_config(dir.path(), "beta.json", &text);
    let o = dhams(&["sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sampler.beta"));

    let o = dhams(&["sample", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(dir.path(), "ok.json", &tiny(&out, ""));
    let o = dhams(&["sample", "--config", cfg.to_str().unwrap(), "--chains", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dhams(&["tune", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "no tuning section");
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "c.json", &tiny(&out, r#", "diagnostics": ["pip"]"#));
    let o = dhams(&["sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "pip on a non-binary lattice");

    let cfg = write_config(dir.path(), "d.json", &tiny(&out, r#", "enumeration_cap": 4"#));
    let o = dhams(&["tv", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "exact joint over the cap");

    let empty = dir.path().join("empty");
    let o = dhams(&["ess", "--config", cfg.to_str().unwrap(), "--out", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "no draws.csv to read");
}

#[test]
fn tune_emits_tuning_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let extra = r#", "tuning": {"method": "target_acceptance", "target_alpha": 0.6, "m_max": 8, "probe_len": 100}"#;
    let cfg = write_config(dir.path(), "c.json", &tiny(&out, extra));
    let o = run_ok(&["tune", "--config", cfg.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("best delta="));
    let text = std::fs::read_to_string(out.join("tuning.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "probe,delta,epsilon,phi,beta,criterion,value,selected");
    assert_eq!(text.lines().count(), 9);
    assert_eq!(text.lines().filter(|l| l.ends_with(",1")).count(), 1);
}

#[test]
fn tv_is_zero_when_empirical_matches_exact() {
    // A zero linear potential is uniform on {0, 1}; one visit to each value matches it exactly.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(
        out.join("draws.csv"),
        "chain,iter,s_1,f,accepted\n0,0,0,0,1\n0,1,1,0,1\n1,0,1,0,0\n1,1,0,0,1\n",
    )
    .unwrap();
    let body = format!(
        r#"{{"target": {{"kind": "linear", "coefficients": [0.0], "support": [0.0, 1.0]}},
            "sampler": {{"kind": "metropolis"}}, "draws": 2, "output_dir": {:?},
            "tv": {{"subset_size": 1, "every": 2}}}}"#,
        out.display().to_string()
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    run_ok(&["tv", "--config", cfg.to_str().unwrap()]);
    let text = std::fs::read_to_string(out.join("tv_curve.csv")).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row, vec![2.0, 0.0, 0.0]);
}

#[test]
fn ess_of_frozen_chains_is_zero_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir_all(&out).unwrap();
    let mut draws = String::from("chain,iter,s_1,s_2,f,accepted\n");
    for m in 0..2 {
        for t in 0..5 {
            draws.push_str(&format!("{m},{t},1,-1,-0.5,0\n"));
        }
    }
    std::fs::write(out.join("draws.csv"), draws).unwrap();
    let cfg = write_config(dir.path(), "c.json", &tiny(&out, ""));
    let o = run_ok(&["ess", "--config", cfg.to_str().unwrap()]);
    let text = std::fs::read_to_string(out.join("ess.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "quantity,ess");
    for l in &lines[1..] {
        let v: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.0, "{l}");
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("WARN"));
}

#[test]
fn bayesian_demo_pip_peaks_on_duplicated_pair() {
    let dir = tempfile::tempdir().unwrap();
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/regression_demo.json");
    let out = dir.path().join("demo");
    let demo = demo.to_str().unwrap();
    run_ok(&["sample", "--config", demo, "--out", out.to_str().unwrap(), "--chains", "2"]);
    let text = std::fs::read_to_string(out.join("pip.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "coordinate,mean_pip,sd_pip");
    let pip: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(pip.len(), 60);
    let pair = pip[0] + pip[30];
    assert!((pair - 1.0).abs() < 0.1, "pair sum {pair}");
    let rest = pip.iter().enumerate().filter(|(i, _)| *i != 0 && *i != 30).map(|(_, p)| *p);
    assert!(rest.fold(0.0, f64::max) < pip[0].min(pip[30]));

    run_ok(&["pip", "--config", demo, "--out", out.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(out.join("pip.csv")).unwrap(), text);
}
