use std::path::Path;
use std::process::{Command, Output};

use linas_cli::runlog::TrialLog;
use linas_core::SpaceKind;

fn linas(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linas")).args(args).current_dir(cwd).env_remove("LINAS_OUTPUT_ROOT").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn spacecheck_reports_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let t = linas(&["spacecheck", "transformer"], dir.path());
    assert!(t.status.success());
    assert!(stdout(&t).contains("40 variables, feature length 101, log10 size ≈ 14.62"));
    let m = linas(&["spacecheck", "mobilenetv3"], dir.path());
    assert!(stdout(&m).contains("45 variables, feature length 135, log10 size ≈ 19.34"));
    let bad = linas(&["spacecheck", "resnet"], dir.path());
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("transformer") && stderr(&bad).contains("mobilenetv3"));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "space = \"mobilenetv3\"\nalgorithm = \"nsga2\"\n[ga]\npopulation = 51\n");
    let o = linas(&["search", "--config", &cfg], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("ga.population"), "{}", stderr(&o));
    let cfg = write(dir.path(), "d.toml", "space = \"mobilenetv3\"\nalgorithm = \"nsga2\"\ncrossover = 0.5\n");
    let o = linas(&["search", "--config", &cfg], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("crossover"), "{}", stderr(&o));
}

#[test]
fn linas_five_seeds_give_five_full_logs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "l.toml",
        "space = \"mobilenetv3\"\nalgorithm = \"linas\"\nseeds = [0, 1, 2, 3, 4]\nworkers = 5\nevaluator = \"synthetic-mobilenetv3\"\n[ga]\npopulation = 50\n[linas]\niterations = 10\n",
    );
    let o = linas(&["search", "--config", &cfg, "--out", "runs"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for seed in 0..5 {
        let log = TrialLog::read(&dir.path().join(format!("runs/linas-seed{seed}.csv"))).unwrap();
        assert_eq!(log.rows.len(), 500);
        assert_eq!(log.trial, seed);
        assert!(log.rows.iter().enumerate().all(|(i, r)| r.evaluation == i + 1 && r.step == i / 50));
        let progress = std::fs::read_to_string(dir.path().join(format!("runs/linas-seed{seed}.progress.json"))).unwrap();
        let progress: Vec<serde_json::Value> = serde_json::from_str(&progress).unwrap();
        assert_eq!(progress.len(), 10);
        assert_eq!(progress[9]["evaluations"], 500);
    }
}

#[test]
fn reruns_are_byte_identical_and_defaults_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g.toml", "space = \"transformer\"\nalgorithm = \"nsga2\"\nseeds = [5, 6]\nbudget = 300\n");
    for out in ["a", "b"] {
        assert!(linas(&["search", "--config", &cfg, "--out", out], dir.path()).status.success());
    }
    for seed in [5, 6] {
        let name = format!("nsga2-seed{seed}.csv");
        assert_eq!(std::fs::read(dir.path().join("a").join(&name)).unwrap(), std::fs::read(dir.path().join("b").join(&name)).unwrap());
    }
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["ga"]["crossover"], 0.9);
    assert_eq!(meta["config"]["ga"]["mutation"], 0.02);
    assert_eq!(meta["config"]["ga"]["population"], 50);
    assert!(meta["wall_time_secs"].is_number());

    // The echoed config alone reproduces the logs.
    let o = linas(&["search", "--config", "a/config.toml", "--out", "c"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(dir.path().join("a/nsga2-seed5.csv")).unwrap(), std::fs::read(dir.path().join("c/nsga2-seed5.csv")).unwrap());
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let root = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.toml", "space = \"mobilenetv3\"\nalgorithm = \"random\"\nbudget = 20\n");
    let o = Command::new(env!("CARGO_BIN_EXE_linas"))
        .args(["search", "--config", &cfg, "--out", "rel"])
        .current_dir(dir.path())
        .env("LINAS_OUTPUT_ROOT", root.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(root.path().join("rel/random-seed0.csv").exists());
    assert!(!dir.path().join("rel").exists());
}

#[test]
fn compare_uses_reference_and_rejects_mixed_spaces() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.toml", "space = \"transformer\"\nalgorithm = \"random\"\nbudget = 100\nseeds = [1]\n");
    let m = write(dir.path(), "m.toml", "space = \"mobilenetv3\"\nalgorithm = \"random\"\nbudget = 100\nseeds = [1]\n");
    assert!(linas(&["search", "--config", &t, "--out", "t"], dir.path()).status.success());
    assert!(linas(&["search", "--config", &m, "--out", "m"], dir.path()).status.success());

    let o = linas(&["compare", "t/random-seed1.csv", "--out", "cmp", "--checkpoints", "50,100"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(dir.path().join("cmp/hv_curves.svg")).unwrap();
    assert!(svg.contains("bleu=20, latency_ms=200"));
    let mut rd = csv::Reader::from_path(dir.path().join("cmp/hv_curves.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    // Single trial: zero-width band.
    assert!(rows.iter().all(|r| &r[3] == "0.0" && &r[4] == "1"));
    // The last checkpoint equals the log's final cumulative HV.
    let log = TrialLog::read(&dir.path().join("t/random-seed1.csv")).unwrap();
    assert_eq!(rows[1][2].parse::<f64>().unwrap(), log.rows[99].cumulative_hv);
    let per_alg = std::fs::read_to_string(dir.path().join("cmp/hv_random.csv")).unwrap();
    assert!(per_alg.starts_with("checkpoint,mean_hv,stderr,trials\n50,"));

    let o = linas(&["compare", "m", "--out", "cmp-m"], dir.path());
    assert!(stdout(&o).contains("HV at 100"));
    let svg = std::fs::read_to_string(dir.path().join("cmp-m/hv_curves.svg")).unwrap();
    assert!(svg.contains("top1=70, latency_ms=70"));

    let o = linas(&["compare", "t", "m"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("different spaces"), "{}", stderr(&o));
}

#[test]
fn scatter_plots_each_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "space = \"transformer\"\nalgorithm = \"random\"\nbudget = 300\n");
    assert!(linas(&["search", "--config", &cfg, "--out", "s"], dir.path()).status.success());
    let o = linas(&["scatter", "s/random-seed0.csv", "--cutoffs", "100,250", "--out", "plots"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("plots/scatter-random-seed0-100.svg").exists());
    assert!(dir.path().join("plots/scatter-random-seed0-250.svg").exists());

    let o = linas(&["scatter", "s/random-seed0.csv"], dir.path());
    assert!(o.status.success());
    let svg = std::fs::read_to_string(dir.path().join("s/scatter-random-seed0-300.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 300);
    assert!(!linas(&["scatter", "s/random-seed0.csv", "--cutoffs", "301"], dir.path()).status.success());
}

#[test]
fn transformer_latency_bands_by_decoder_layers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "space = \"transformer\"\nalgorithm = \"random\"\nbudget = 600\n");
    assert!(linas(&["search", "--config", &cfg, "--out", "s"], dir.path()).status.success());
    let log = TrialLog::read(&dir.path().join("s/random-seed0.csv")).unwrap();
    let space = SpaceKind::Transformer.space();
    let count = space.position("decoder-layer-count").unwrap();
    let mut groups = vec![Vec::new(); 6];
    for r in &log.rows {
        groups[r.genotype[count]].push(r.values[1]);
    }
    let means: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    for w in means.windows(2) {
        // Roughly 20 ms per layer on average (layer variables uniform).
        assert!(w[1] - w[0] > 10.0, "{means:?}");
    }
}

#[test]
fn evaluator_failure_keeps_partial_logs() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("flaky.sh");
    std::fs::write(&script, format!("#!/bin/sh\nhead -n 30 | {} serve --space mobilenetv3\n", env!("CARGO_BIN_EXE_linas"))).unwrap();
    use std::os::unix::fs::PermissionsExt;
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    let cfg = write(
        dir.path(),
        "f.toml",
        &format!(
            "space = \"mobilenetv3\"\nalgorithm = \"random\"\nbudget = 60\n[evaluator]\nkind = \"external\"\ncommand = \"{}\"\ntimeout_secs = 10\n",
            script.display()
        ),
    );
    let o = linas(&["search", "--config", &cfg, "--out", "f"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("partial logs"), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("f/random-seed0.csv")).unwrap();
    assert!(csv.lines().count() <= 31);
    let meta = std::fs::read_to_string(dir.path().join("f/metadata.json")).unwrap();
    assert!(meta.contains("\"error\": \""));
}

#[test]
fn mape_study_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["mape-study", "--space", "mobilenetv3", "--sizes", "50,200", "--trials", "3", "--holdout", "100", "--seed", "2"];
    for out in ["a", "b"] {
        let mut a = args.to_vec();
        a.extend(["--out", out]);
        assert!(linas(&a, dir.path()).status.success());
    }
    let a = std::fs::read_to_string(dir.path().join("a/mape.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(dir.path().join("b/mape.csv")).unwrap());
    assert_eq!(a.lines().count(), 3);
    assert!(a.starts_with("space,predictor,objective,size,mean_mape,stddev,trials\nmobilenetv3,ridge,top1,50,"));
}
