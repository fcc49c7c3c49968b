use std::path::Path;
use std::process::{Command, Output};

fn qm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmoments"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn moments_auto_shots_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = qm(&["moments", "--state", "gibbs-z:0.5", "--k", "4", "--eps", "0.01", "--seed", "7"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("copies: 254248"));
    let csv = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("order,estimate,stderr,exact"));
    assert_eq!(lines.count(), 3);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("moments.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 7);
    assert_eq!(json["results"]["shots"], 63562);
    assert_eq!(json["config"]["subcommand"], "moments");
    let exact = json["results"]["exact"][1].as_f64().unwrap();
    assert!((exact - 0.41016).abs() < 1e-5);
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["renyi", "--shots", "5000", "--seed", "3"];
    assert!(qm(&args, a.path()).status.success());
    assert!(qm(&args, b.path()).status.success());
    for f in ["renyi.csv", "renyi.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing_seed = qm(&["moments", "--state", "gibbs-z:1", "--k", "2"], dir.path());
    assert_eq!(missing_seed.status.code(), Some(2));
    assert!(stderr(&missing_seed).starts_with("error kind=config"));

    let preset = qm(&["moments", "--state", "warm:1", "--k", "2", "--seed", "1"], dir.path());
    assert_eq!(preset.status.code(), Some(2));
    assert!(stderr(&preset).contains("unknown preset"));

    let obs = dir.path().join("bad.txt");
    std::fs::write(&obs, "0.5 XQ\n").unwrap();
    let malformed = qm(
        &["weighted", "--state", "gibbs-z:1", "--observable", obs.to_str().unwrap(), "--k", "2", "--shots", "10", "--seed", "1"],
        dir.path(),
    );
    assert_eq!(malformed.status.code(), Some(2));

    let budget = qm(&["qvc", "--n", "3", "--seed", "1", "--budget", "1000"], dir.path());
    assert_eq!(budget.status.code(), Some(3));
    assert!(stderr(&budget).contains("kind=budget"));

    // One shot whose Tr ρ⁴ estimate is −1.
    let numerical = qm(&["renyi", "--beta", "0", "--alpha", "4", "--shots", "1", "--seed", "5"], dir.path());
    assert_eq!(numerical.status.code(), Some(4), "{}", stderr(&numerical));
    assert!(stderr(&numerical).contains("increase the number of shots"));
}

#[test]
fn every_error_is_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = qm(&["qsf", "--state", "max-mixed:1", "--coeffs", "a,b", "--shots", "10", "--seed", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    let errors: Vec<&str> = e.lines().filter(|l| l.starts_with("error")).collect();
    assert_eq!(errors.len(), 1, "{e}");
}

#[test]
fn qvc_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = qm(&["qvc", "--n", "2", "--k", "3", "--shots", "2000", "--runs", "3", "--baseline", "--seed", "9"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["qvc.csv", "qvc_baseline.csv"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(text.starts_with("n,k,mean_E,sigma_E,mad,exact_E"));
        assert_eq!(text.lines().count(), 4);
    }
}
