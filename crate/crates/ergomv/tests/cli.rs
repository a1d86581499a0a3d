use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ergomv");

fn ergomv(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("ERGOMV_WORKERS", w),
        None => cmd.env_remove("ERGOMV_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

const HEADER: &str = "algorithm,t,n,N,M,schedule,seed,estimate,reference,abs_error,kernel_evals,noise_draws,wall_time_s";

const ENSEMBLE: &str = r#"
[model]
alpha = 1.0
beta = 0.5
[model.initial]
kind = "gaussian"
mean = [1.0]
variance = [0.25]
[dynamics]
t = 2.0
n = 10
N = 12
M = 3
[estimator]
algorithm = "C_AEA"
observable = "x^2"
reference = "invariant"
[execution]
seed = 42
replications = 6
"#;

#[test]
fn zero_dynamics_rows_equal_the_initial_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "zero.toml",
        r#"
[model]
name = "zero"
[model.initial]
x0 = [1.0]
[dynamics]
t = 1.0
n = 4
N = 3
[estimator]
algorithm = "AEA"
observable = "x"
[execution]
replications = 3
"#,
    );
    let out = ergomv(&["run", cfg.to_str().unwrap()], Some("2"));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next().unwrap(), HEADER);
    let rows = rows(&csv);
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[7], "1.0");
        assert_eq!(r[8], "");
        assert_eq!(r[12], "");
    }
    let summary: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["mean"], 1.0);
    assert_eq!(summary["std"], 0.0);
}

#[test]
fn output_is_byte_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ens.toml", ENSEMBLE);
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "4", "4", "1"].iter().enumerate() {
        let csv = dir.path().join(format!("out{i}.csv"));
        let out = ergomv(
            &[
                "run",
                cfg.to_str().unwrap(),
                "--output",
                csv.to_str().unwrap(),
            ],
            Some(workers),
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push((
            std::fs::read(&csv).unwrap(),
            std::fs::read(csv.with_extension("json")).unwrap(),
        ));
    }
    for o in &outputs[1..] {
        assert_eq!(o, &outputs[0]);
    }
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    let rows = rows(&csv);
    assert_eq!(rows.len(), 6);
    let seeds: Vec<&str> = rows.iter().map(|r| r[6].as_str()).collect();
    assert_eq!(seeds, ["42", "43", "44", "45", "46", "47"]);
    // 3 ensembles x 20 steps x 12^2 pairwise evaluations
    assert!(rows.iter().all(|r| r[10] == "8640"));
}

#[test]
fn workers_flag_overrides_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ens.toml", ENSEMBLE);
    let a = ergomv(
        &["run", cfg.to_str().unwrap(), "--workers", "3"],
        Some("not-a-number"),
    );
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = ergomv(&["run", cfg.to_str().unwrap()], Some("not-a-number"));
    assert_eq!(b.status.code(), Some(1));
}

#[test]
fn planned_mca_rows_carry_the_invariant_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mca.toml",
        r#"
[model]
alpha = 1.0
beta = 0.5
[model.initial]
x0 = [1.0]
[estimator]
algorithm = "MCA"
observable = "x^2"
reference = "invariant"
[planner]
epsilon = 0.2
lambda = 0.5
[execution]
replications = 2
timing = true
"#,
    );
    let out = ergomv(&["run", cfg.to_str().unwrap()], Some("1"));
    assert!(out.status.success());
    for r in rows(&String::from_utf8(out.stdout).unwrap()) {
        assert_eq!(r[8], "0.5");
        let est: f64 = r[7].parse().unwrap();
        let err: f64 = r[9].parse().unwrap();
        assert_eq!(err, (est - 0.5).abs());
        assert!(r[12].parse::<f64>().unwrap() >= 0.0);
    }
    let summary: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["consistency"]["matches"], true);
    assert_eq!(summary["plan"]["N"], 25);
}

#[test]
fn trajectory_dump_lists_every_state() {
    let dir = tempfile::tempdir().unwrap();
    let text = ENSEMBLE.replace(
        "replications = 6",
        "replications = 1\ndump_trajectory = true",
    ) + "output = \"run.csv\"\n";
    let cfg = write(dir.path(), "dump.toml", &text);
    let out = Command::new(BIN)
        .current_dir(dir.path())
        .args(["run", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let traj = std::fs::read_to_string(dir.path().join("run.trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(
        lines.next().unwrap(),
        "replication,ensemble,step,time,particle,x0"
    );
    // 3 ensembles x 21 states x 12 particles
    assert_eq!(lines.count(), 3 * 21 * 12);
    assert!(dir.path().join("run.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(
        ergomv(&["run", missing.to_str().unwrap()], None)
            .status
            .code(),
        Some(3)
    );

    let bad = write(
        dir.path(),
        "bad.toml",
        &ENSEMBLE.replace("beta = 0.5", "beta = 2.0"),
    );
    let out = ergomv(&["run", bad.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));

    let explosive = write(
        dir.path(),
        "boom.toml",
        r#"
[model]
name = "polynomial"
coefficients = [0.0, 0.0, 0.0, 4.0]
[model.initial]
x0 = [2.0]
[dynamics]
t = 5.0
n = 2
N = 2
[estimator]
algorithm = "MCA"
observable = "x"
[execution]
seed = 11
"#,
    );
    let out = ergomv(&["run", explosive.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed 11"));

    let unwritable = dir.path().join("file.txt");
    std::fs::write(&unwritable, "x").unwrap();
    let target = unwritable.join("out.csv");
    let cfg = write(dir.path(), "ens.toml", ENSEMBLE);
    let out = ergomv(
        &[
            "run",
            cfg.to_str().unwrap(),
            "--output",
            target.to_str().unwrap(),
        ],
        Some("1"),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn plan_prints_json() {
    let out = ergomv(
        &[
            "plan",
            "--algorithm",
            "MCA",
            "--epsilon",
            "0.1",
            "--lambda",
            "1",
        ],
        None,
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["algorithm"], "MCA");
    assert_eq!(v["N"], 100);
    assert_eq!(v["n"], 10);
    assert!((v["t"].as_f64().unwrap() - 10f64.ln()).abs() < 1e-12);
    let cost = v["t"].as_f64().unwrap() * 10.0 * 10_000.0;
    assert!((v["predicted_cost"].as_f64().unwrap() - cost).abs() < 1e-9 * cost);

    let out = ergomv(
        &[
            "plan",
            "--algorithm",
            "AEA",
            "--epsilon",
            "1.5",
            "--lambda",
            "1",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let free = write(
        dir.path(),
        "free.toml",
        r#"
[model]
alpha = 1.0
beta = 0.0
[model.initial]
x0 = [1.0]
[dynamics]
t = 1.0
n = 4
N = 4
[estimator]
algorithm = "MCA"
observable = "x"
reference = "transient"
[execution]
replications = 2
antithetic = true
"#,
    );
    let out = ergomv(
        &[
            "sweep",
            free.to_str().unwrap(),
            "--axis",
            "n",
            "--values",
            "4,8,16",
        ],
        Some("2"),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fit: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    let slope = fit["fit"]["slope"].as_f64().unwrap();
    assert!((-1.3..=-0.7).contains(&slope), "slope {slope}");

    let out = ergomv(
        &[
            "sweep",
            free.to_str().unwrap(),
            "--axis",
            "N",
            "--values",
            "8",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(1));

    let aea = write(
        dir.path(),
        "aea.toml",
        r#"
[model]
alpha = 1.0
beta = 0.5
[model.initial]
x0 = [1.0]
[dynamics]
evaluation = "fast"
[estimator]
algorithm = "AEA"
observable = "x"
[planner]
epsilon = 0.2
lambda = 0.5
"#,
    );
    let csv_path = dir.path().join("sweep.csv");
    let out = ergomv(
        &[
            "sweep",
            aea.to_str().unwrap(),
            "--axis",
            "epsilon",
            "--values",
            "0.2,0.1,0.05",
            "--output",
            csv_path.to_str().unwrap(),
        ],
        Some("2"),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "predicted_cost").unwrap();
    for (line, eps) in csv.lines().skip(1).zip([0.2f64, 0.1, 0.05]) {
        let cost: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        let ratio = cost / eps.powi(-4);
        assert!((0.1..=10.0).contains(&ratio), "eps {eps}: ratio {ratio}");
    }
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(csv_path.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(fit["target"], "predicted_cost");
}

#[test]
fn quick_bench_passes() {
    let out = ergomv(&["bench", "--quick"], None);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{csv}");
    assert_eq!(
        csv.lines().next().unwrap(),
        "check_name,expected,observed,pass"
    );
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}
