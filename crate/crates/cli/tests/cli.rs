use std::path::Path;
use std::process::{Command, Output};

fn bonabeau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bonabeau"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const STAR: &str = r#"
model = "bonabeau_full"
seed = 42
steps = 5000
replicates = 3
graph.family = "star"
graph.n = 20
params.eta = 1.0
params.F = 1.0
sweep.mu = [0.2, 0.4, 0.9]
"#;

#[test]
fn validation_errors_exit_1_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            STAR.replace("params.F = 1.0", "params.F = 1.0\nparams.mu = 1.0"),
            "mu must lie in (0,1)",
        ),
        (format!("{STAR}\nwarmup = 10000"), "warmup + measure_window"),
        (format!("{STAR}\nparams.bogus = 1"), "bogus"),
        (STAR.replace("bonabeau_full", "ising"), "unknown model"),
        (
            STAR.replace("graph.family = \"star\"\ngraph.n = 20", ""),
            "graph",
        ),
    ];
    for (k, (text, needle)) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{k}.toml"), text);
        let out = bonabeau(&["sweep", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(1), "case {k}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "case {k}: {err}");
    }
    let out = bonabeau(&["sweep"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "star.toml", STAR);
    let a = bonabeau(&["sweep", "--config", &cfg, "--threads", "1"]);
    let b = bonabeau(&["sweep", "--config", &cfg, "--threads", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let csv = String::from_utf8(a.stdout).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("graph_id,n,model,F,eta,mu,"));
    // every row carries the seed and its cell key
    assert!(csv.lines().skip(1).all(|l| l.contains(",42,")));

    let c = bonabeau(&["sweep", "--config", &cfg, "--seed", "43"]);
    assert_ne!(csv.as_bytes(), c.stdout.as_slice());
}

#[test]
fn out_dir_receives_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "star.toml", STAR);
    let out = dir.path().join("out");
    let o = bonabeau(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    for f in ["sweep.csv", "sweep_replicates.csv", "sweep.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let replicates = std::fs::read_to_string(out.join("sweep_replicates.csv")).unwrap();
    assert_eq!(replicates.lines().count(), 1 + 3 * 3);

    let p = bonabeau(&["plot", "--out", out.to_str().unwrap()]);
    assert!(p.status.success());
    assert_eq!(
        std::fs::read(out.join("plot.svg")).unwrap(),
        std::fs::read(out.join("sweep.svg")).unwrap()
    );
}

#[test]
fn plot_rejects_nan_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "s.csv",
        "graph_id,n,eta,mu,rho,F,mean_sigma\nstar-5,5,1,0.2,1,1,0.3\nstar-5,5,1,0.4,1,1,NaN\n",
    );
    let o = bonabeau(&["plot", "--input", &csv]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-finite"));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let base = r#"
model = "competing"
seed = 1
graph.family = "cycle"
graph.n = 3
params.ell = 1
params.eta = 1.0
verify.samples = 10000
"#;
    let good = write(dir.path(), "good.toml", base);
    let o = bonabeau(&["verify", "--config", &good]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.contains("submartingale"));
    assert_eq!(
        bonabeau(&["verify", "--config", &good]).stdout,
        report.as_bytes()
    );

    let bad = write(
        dir.path(),
        "bad.toml",
        &format!("{base}verify.loser_loss = 2\n"),
    );
    let o = bonabeau(&["verify", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("submartingale"));
}

#[test]
fn competing_two_agent_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "k2.toml",
        r#"
model = "competing"
graph.family = "complete"
graph.n = 2
params.ell = 1
params.eta = 1.0
replicates = 5
"#,
    );
    let out = dir.path().join("out");
    assert!(bonabeau(&[
        "competing",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let runs = std::fs::read_to_string(out.join("competing.csv")).unwrap();
    let header: Vec<&str> = runs.lines().next().unwrap().split(',').collect();
    let col = |name| header.iter().position(|h| *h == name).unwrap();
    for line in runs.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[col("terminal")], "true");
        assert_eq!(f[col("fights")], "1");
    }
    let summary = std::fs::read_to_string(out.join("competing_summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().contains(",5,5,1,1,1,1,1,"));
}

#[test]
fn edge_list_graphs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tri.txt", "# triangle\n0 1\n1 2\n2 0\n");
    let cfg = write(
        dir.path(),
        "tri.toml",
        r#"
model = "bonabeau_full"
graph.edge_list = "tri.txt"
params.eta = 1.0
params.F = 1.0
params.mu = 0.5
"#,
    );
    let o = bonabeau(&["stability", "--config", &cfg]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("edges-tri,3,3,"));

    write(dir.path(), "tri.txt", "0 0\n");
    let o = bonabeau(&["stability", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("self-loop"));
}
