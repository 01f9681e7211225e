use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn odtn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odtn"))
        .args(args)
        .env_remove("ODTN_ENUM_CAP")
        .env_remove("ODTN_DP_STATE_CAP")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["-o", path.to_str().unwrap()]);
    let o = odtn(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn low_noise(dir: &Path) -> PathBuf {
    gen(dir, "ln.json", &["--kind", "low-noise", "--m", "6", "--n", "8", "--c", "2", "--r", "2", "--seed", "5"])
}

#[test]
fn help_for_every_subcommand() {
    assert!(odtn(&["--help"]).status.success());
    for sub in ["gen", "run", "bounds", "interactive", "regress"] {
        let o = odtn(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
}

#[test]
fn gen_is_byte_identical_per_seed() {
    let args = ["gen", "--kind", "sparse", "--m", "16", "--n", "24", "--alpha", "0.5", "--seed", "9"];
    let a = odtn(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, odtn(&args).stdout);
    assert!(stdout(&a).contains("odtn.instance/1"));
    let mut other = args;
    other[10] = "10";
    assert_ne!(a.stdout, odtn(&other).stdout);
}

#[test]
fn run_reports_one_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let inst = low_noise(dir.path());
    let args = ["run", "--algo", "meta", "--instance", inst.to_str().unwrap(), "--trials", "200", "--seed", "3"];
    let a = odtn(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("instance_id,policy,trials,mean_cost"));
    assert!(lines[1].starts_with("ln,meta:"));
    assert!(lines[1].ends_with("odtn.report/1"));
    assert_eq!(a.stdout, odtn(&args).stdout);
}

#[test]
fn sampling_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let inst = low_noise(dir.path());
    let o = odtn(&["run", "--algo", "adaptive-c", "--instance", inst.to_str().unwrap(), "--trials", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = odtn(&["run", "--algo", "nonadaptive", "--instance", inst.to_str().unwrap(), "--samples", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(odtn(&["run", "--algo", "adaptive-c", "--instance", inst.to_str().unwrap()]).status.success());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = low_noise(dir.path());
    let inst = inst.to_str().unwrap();
    assert_eq!(odtn(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(odtn(&["run", "--algo", "nope", "--instance", inst]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(odtn(&["bounds", "--instance", bad.to_str().unwrap()]).status.code(), Some(3));
    let missing = dir.path().join("missing.json");
    assert_eq!(odtn(&["bounds", "--instance", missing.to_str().unwrap()]).status.code(), Some(3));
    let o = odtn(&["run", "--algo", "adaptive-c", "--instance", inst, "--exact", "--enum-cap", "0"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bounds_of_uniform_noiseless() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "nl.json", &["--kind", "noiseless", "--m", "8", "--n", "6", "--seed", "1"]);
    let o = odtn(&["bounds", "--instance", inst.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["entropy_lb"].as_f64(), Some(3.0));
}

#[test]
fn interactive_session() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "nl.json", &["--kind", "noiseless", "--m", "4", "--n", "4", "--seed", "2"]);
    let run = |input: &str| {
        let mut child = Command::new(env!("CARGO_BIN_EXE_odtn"))
            .args(["interactive", "--instance", inst.to_str().unwrap()])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .unwrap();
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
        child.wait_with_output().unwrap()
    };
    let o = run("+\n+\n+\n+\n");
    assert!(o.status.success());
    assert!(stdout(&o).contains("after"));
    assert_eq!(run("q\n").status.code(), Some(1));
}

#[test]
fn regress_detects_drift() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path();
    gen(corpus, "a.json", &["--kind", "low-noise", "--m", "5", "--n", "6", "--seed", "1"]);
    fs::write(
        corpus.join("corpus.json"),
        r#"{"schema":"odtn.corpus/1","seed":1,"trials":50,"entries":[{"instance":"a.json","algorithms":["adaptive-c","nonadaptive"]}]}"#,
    )
    .unwrap();
    let c = corpus.to_str().unwrap();
    assert!(odtn(&["regress", "--corpus", c, "--bless"]).status.success());
    let first = odtn(&["regress", "--corpus", c]);
    assert!(first.status.success(), "{}", stdout(&first));
    assert_eq!(first.stdout, odtn(&["regress", "--corpus", c]).stdout);
    let expected = fs::read_to_string(corpus.join("expected.csv")).unwrap();
    let header_len = expected.find('\n').unwrap() + 1;
    let tampered = expected[..header_len].to_string() + &expected[header_len..].replacen(",50,", ",51,", 1);
    fs::write(corpus.join("expected.csv"), tampered).unwrap();
    let o = odtn(&["regress", "--corpus", c]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAILED"));
}
