use std::process::{Command, Output};

fn pathsens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathsens"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn simulate_additive_five_rows() {
    let o = pathsens(&[
        "simulate", "--model", "additive", "--theta", "0.3", "--N", "4", "--T", "1", "--seed", "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,S,dS,ddS");
    assert_eq!(lines.len(), 6);
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first, vec![0.0, 1.0, 0.0, 0.0]);
    for (n, line) in lines[1..].iter().enumerate() {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[0] - 0.25 * n as f64).abs() < 1e-15);
        assert!((f[2] - f[0]).abs() < 1e-15);
        assert_eq!(f[3], 0.0);
    }
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn floats_carry_seventeen_digits() {
    let o = pathsens(&["simulate", "--N", "3", "--seed", "1"]);
    let text = stdout(&o);
    let field = text.lines().nth(2).unwrap().split(',').nth(1).unwrap();
    let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{field}");
}

#[test]
fn models_lists_builtins() {
    let o = pathsens(&["models"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("id,description,constants,l_a,l_b\n"));
    for id in ["gbm", "trig", "additive"] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{id},"))),
            "{id}"
        );
    }
}

#[test]
fn validate_gbm_passes() {
    let o = pathsens(&[
        "validate", "--model", "gbm", "--seed", "1", "--paths", "1000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains(",false"));
}

#[test]
fn lemma_all_hold() {
    let o = pathsens(&[
        "lemma", "--k", "2", "--p", "2", "--trials", "1000", "--seed", "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,k,p,lhs,rhs,holds"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1000);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn converge_prints_fit_summary() {
    let o = pathsens(&[
        "converge",
        "--levels",
        "1..4",
        "--paths",
        "2000",
        "--quantity",
        "tangent1",
        "--seed",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("level,h,p,quantity,estimate,std_error,n_paths\n"));
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.contains(",tangent1,")));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("slope") && err.contains("CI"), "{err}");
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let o = pathsens(&[
        "mlmc",
        "--levels",
        "1..3",
        "--paths",
        "500",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("level,h,mean_dP,var_dP,n_paths\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# study\nmodel = additive\ntheta = 0.05\nN = 2\n").unwrap();
    let o = pathsens(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--theta",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    // additive: dS_T = T regardless of θ; θ shows up in the drift of S
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(last[2], 1.0);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["converge", "--levels", "9..4"][..],
        &["simulate", "--theta", "abc"],
        &["simulate", "--model", "nope"],
        &["frobnicate"],
        &["lemma"],
        &["simulate", "--N", "0"],
    ] {
        let o = pathsens(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn divergence_exits_three() {
    let o = pathsens(&["simulate", "--model", "gbm", "--theta", "1e200", "--N", "4"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stderr).unwrap().contains("diverge"));
}

#[test]
fn output_independent_of_workers() {
    let args = [
        "converge", "--levels", "1..3", "--p", "2,4", "--paths", "1500", "--seed", "8",
    ];
    let base = pathsens(&[&args[..], &["--workers", "1"]].concat()).stdout;
    for w in ["3", "0"] {
        assert_eq!(
            pathsens(&[&args[..], &["--workers", w]].concat()).stdout,
            base
        );
    }
}
