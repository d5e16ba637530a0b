use std::path::PathBuf;
use std::process::{Command, Output};

use rdlp_cli::record::{fingerprint, RecordValue, ResultRecord};

fn instance(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn rdlp(args: &[&str]) -> Output {
    rdlp_env(args, None)
}

fn rdlp_env(args: &[&str], mode: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rdlp"));
    cmd.args(args).env_remove("RDLP_MODE");
    if let Some(m) = mode {
        cmd.env("RDLP_MODE", m);
    }
    cmd.output().expect("runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn records(o: &Output) -> Vec<ResultRecord> {
    stdout(o).lines().map(|l| serde_json::from_str(l).expect("record line")).collect()
}

fn temp_file(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rdlp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn odd_cycle_binary_matches() {
    let o = rdlp(&["odd-cycle", "--m", "5", "--flavor", "binary"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "upper=5/2 lower=5/2 MATCH\n");
}

#[test]
fn odd_cycle_gaussian_matches() {
    let o = rdlp(&["odd-cycle", "--m", "5", "--flavor", "gaussian", "--D", "0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "upper=2.5 lower=2.5 MATCH\n");
}

#[test]
fn odd_cycle_from_file_and_json() {
    let p = instance("five-cycle-binary.json");
    let o = rdlp(&["odd-cycle", "--instance", p.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let recs = records(&o);
    let half = RecordValue::Rational { numerator: "5".into(), denominator: "2".into() };
    for bound in ["achievable", "blasiak", "relaxed-index"] {
        let r = recs.iter().find(|r| r.bound == bound).unwrap();
        assert_eq!(r.value, half, "{bound}");
        assert_eq!(r.mode, "rational");
    }
    // (m − 1)/2 from the permutation bound.
    let mm = recs.iter().find(|r| r.bound == "minimax").unwrap();
    assert!(matches!(mm.value, RecordValue::Float { value } if (value - 2.0).abs() < 1e-9));
}

#[test]
fn odd_cycle_gaussian_records() {
    let o = rdlp(&["odd-cycle", "--m", "5", "--flavor", "gaussian", "--D", "0.1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let recs = records(&o);
    let closed = 1.25 * 10f64.log2();
    let value = |b: &str| match recs.iter().find(|r| r.bound == b).unwrap().value {
        RecordValue::Float { value } => value,
        _ => panic!("float expected"),
    };
    assert!((value("achievable") - closed).abs() < 1e-9);
    assert!((value("lattice-limit") - closed).abs() < 1e-6);
    let eps: Vec<f64> = recs.iter().filter(|r| r.bound == "lattice").map(|r| r.eps).collect();
    assert_eq!(eps, vec![1e-3, 1e-4, 1e-5]);
}

#[test]
fn compare_reports_sandwich() {
    for (file, line) in [
        ("five-cycle-binary.json", "upper=5/2 lower=5/2 MATCH"),
        ("five-cycle-gaussian.json", "upper=2.5 lower=2.5 MATCH"),
        ("five-cycle-index.json", "upper=5 lower=5/2 GAP"),
        ("gaussian-exchange.json", "upper=1 lower=1 MATCH"),
    ] {
        let o = rdlp(&["compare", "--instance", instance(file).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{file}: {}", stderr(&o));
        assert_eq!(stdout(&o).lines().last(), Some(line), "{file}");
    }
}

#[test]
fn heuristic_lattice_is_not_a_sandwich() {
    let o = rdlp(&["compare", "--instance", instance("two-bit-exchange.json").to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let recs = records(&o);
    assert!(recs.iter().any(|r| r.bound == "lattice" && r.heuristic));
    assert!(!recs.iter().any(|r| r.bound.starts_with("gap")));
    assert!(stderr(&o).contains("no sandwich"));
}

#[test]
fn wyner_ziv_upper_is_conditional_information() {
    let o = rdlp(&["upper", "--instance", instance("wyner-ziv.json").to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r = &records(&o)[0];
    // I(X;U|Y) with U = X through BSC(0.1), Y = X through BSC(0.25):
    // H(U|Y) − H(U|X) = h(0.1 ⋆ 0.25) − h(0.1).
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    let expected = h(0.1 * 0.75 + 0.9 * 0.25) - h(0.1);
    match r.value {
        RecordValue::Float { value } => assert!((value - expected).abs() < 1e-9, "{value} vs {expected}"),
        _ => panic!(),
    }
}

#[test]
fn json_lines_round_trip() {
    for file in ["five-cycle-binary.json", "gaussian-exchange.json", "wyner-ziv.json"] {
        let o = rdlp(&["compare", "--instance", instance(file).to_str().unwrap(), "--json"]);
        let text = stdout(&o);
        for line in text.lines() {
            let r: ResultRecord = serde_json::from_str(line).unwrap();
            assert_eq!(r.to_json(), line);
            assert_eq!(serde_json::from_str::<ResultRecord>(&r.to_json()).unwrap(), r);
        }
    }
}

#[test]
fn output_is_deterministic() {
    for file in ["five-cycle-gaussian.json", "two-bit-exchange.json", "gaussian-exchange.json"] {
        let p = instance(file);
        let args = ["compare", "--instance", p.to_str().unwrap()];
        let (a, b) = (rdlp(&args), rdlp(&args));
        assert_eq!(a.stdout, b.stdout, "{file}");
        let mut json = args.to_vec();
        json.push("--json");
        assert_eq!(rdlp(&json).stdout, rdlp(&json).stdout, "{file}");
    }
}

#[test]
fn fingerprint_matches_dump() {
    let p = instance("five-cycle-binary.json");
    let p = p.to_str().unwrap();
    let rec = &records(&rdlp(&["upper", "--instance", p, "--json"]))[0];
    let dump = stdout(&rdlp(&["dump-lp", "--instance", p]));
    assert_eq!(rec.fingerprint, fingerprint(&dump));
    assert!(dump.contains(">="));
    let rec = &records(&rdlp(&["lower-index", "--instance", p, "--json"]))[0];
    let dump = stdout(&rdlp(&["dump-lp", "--instance", p, "--program", "blasiak"]));
    assert_eq!(rec.fingerprint, fingerprint(&dump));
}

#[test]
fn mode_from_flag_and_environment() {
    let p = instance("five-cycle-gaussian.json");
    let args = ["upper", "--instance", p.to_str().unwrap(), "--json"];
    assert_eq!(records(&rdlp(&args))[0].mode, "float");
    let exact = records(&rdlp_env(&args, Some("rational")));
    assert_eq!(exact[0].mode, "rational");
    let mut flagged = args.to_vec();
    flagged.extend(["--mode", "float"]);
    assert_eq!(records(&rdlp_env(&flagged, Some("rational")))[0].mode, "float");
    let bad = rdlp_env(&args, Some("decimal"));
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("unknown mode"));
}

#[test]
fn orderings_flag_sweeps() {
    let p = instance("five-cycle-binary.json");
    let given = &records(&rdlp(&["upper", "--instance", p.to_str().unwrap(), "--json"]))[0];
    let all = &records(&rdlp(&["upper", "--instance", p.to_str().unwrap(), "--orderings", "all", "--json"]))[0];
    assert_eq!(given.stats.orderings, 1);
    assert_eq!(all.stats.orderings, 120);
    assert_eq!(given.value, all.value);
}

#[test]
fn relaxed_index_with_eps() {
    let p = instance("five-cycle-index.json");
    let recs = records(&rdlp(&["lower-index", "--instance", p.to_str().unwrap(), "--eps", "0.01", "--json"]));
    let r = recs.iter().find(|r| r.bound == "relaxed-index").unwrap();
    assert_eq!(r.eps, 0.01);
    assert_eq!(r.mode, "rational");
}

#[test]
fn usage_errors_exit_2() {
    let o = rdlp(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    let o = rdlp(&["upper", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    let o = rdlp(&["upper"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--instance"));
    let p = instance("wyner-ziv.json");
    let o = rdlp(&["upper", "--instance", p.to_str().unwrap(), "--eps", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rdlp(&["upper-gauss", "--instance", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = rdlp(&["lower-index", "--instance", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = rdlp(&["odd-cycle", "--m", "6"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rdlp(&["odd-cycle", "--m", "5", "--flavor", "gaussian"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_instances_exit_2() {
    let cases = [
        ("not-json.json", "{ kind: ", "key must be a string"),
        ("kind.json", r#"{"kind": "quantum"}"#, "unknown variant `quantum`"),
        ("missing.json", r#"{"kind": "odd-cycle", "flavor": "binary"}"#, "missing field `m`"),
        ("extra.json", r#"{"kind": "odd-cycle", "m": 5, "flavor": "binary", "colour": 1}"#, "unknown field `colour`"),
        (
            "pmf.json",
            r#"{"kind": "discrete", "variables": [{"name": "X", "size": 2}], "pmf": [0.5, 0.6],
               "source": ["X"], "decoders": [{"distortion": "hamming", "max_distortion": 0.1}]}"#,
            "invalid distribution",
        ),
        (
            "psd.json",
            r#"{"kind": "gaussian", "blocks": [{"name": "X"}], "covariance": [[-1]], "source": ["X"],
               "decoders": [{"max_distortion": [0.5]}]}"#,
            "positive semidefinite",
        ),
        (
            "bits.json",
            r#"{"kind": "index-coding", "k": 3, "decoders": [{"side_info": [4], "demand": [1]}]}"#,
            "bit 4",
        ),
    ];
    for (name, text, needle) in cases {
        let p = temp_file(name, text);
        let o = rdlp(&["upper", "--instance", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn oversized_programs_exit_3() {
    let k = 13;
    let decoders: Vec<String> =
        (0..k).map(|i| format!(r#"{{"side_info": [{}], "demand": [{}]}}"#, (i + 1) % k + 1, i + 1)).collect();
    let text = format!(r#"{{"kind": "index-coding", "k": {k}, "decoders": [{}]}}"#, decoders.join(","));
    let p = temp_file("big.json", &text);
    let o = rdlp(&["lower-index", "--instance", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("limit"));
}

#[test]
fn minimax_needs_auxiliaries() {
    let p = instance("two-bit-exchange.json");
    let o = rdlp(&["minimax", "--instance", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let p = instance("gaussian-exchange.json");
    let o = rdlp(&["minimax", "--instance", p.to_str().unwrap(), "--eps", "0.01", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = &records(&o)[0];
    assert_eq!(r.stats.orderings, 2);
    assert_eq!(r.eps, 0.01);
}
