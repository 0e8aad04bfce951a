//! Cross-module checks of the solver pipeline that the unit tests do not
//! cover: chain/limit comparability in both directions, the operator-norm
//! contraction of the periodic operator, and trace emission to disk.

use ordfix::cli::{emit_trace, OutputFormat};
use ordfix::{
    solve, square, ConeSpec, Direction, GridFunction, GridOperator, KernelRule, Modulus,
    PairSampler, PeriodicBVPOperator, SignalFeedbackOperator, SolveConfig,
};

fn spec() -> ConeSpec {
    ConeSpec::default()
}

fn signal_cfg() -> SolveConfig {
    SolveConfig {
        tol: 1e-10,
        record_trace: true,
        ..SolveConfig::default()
    }
}

#[test]
fn increasing_chain_stays_below_its_limit() {
    let n = 300;
    let op = SignalFeedbackOperator::analytic(1, n).unwrap();
    let modulus = Modulus::constant(0.15).unwrap();
    let u0 = GridFunction::constant(n, 0.0).unwrap();
    let res = solve(&op, &u0, &modulus, &spec(), &signal_cfg()).unwrap();
    let trace = res.trace.as_ref().unwrap();
    assert_eq!(trace.direction, Direction::Increasing);

    // replay the chain and compare every iterate against the limit
    let squared = square(&op);
    let mut x = u0;
    for _ in &trace.steps {
        assert!(x.leq(&res.fixed_point, &spec()).unwrap());
        x = squared.apply(&x).unwrap();
    }
}

#[test]
fn decreasing_chain_from_a_large_start_meets_the_same_limit() {
    let n = 300;
    let op = SignalFeedbackOperator::analytic(1, n).unwrap();
    let modulus = Modulus::constant(0.15).unwrap();

    let from_below = solve(
        &op,
        &GridFunction::constant(n, 0.0).unwrap(),
        &modulus,
        &spec(),
        &signal_cfg(),
    )
    .unwrap();
    let from_above = solve(
        &op,
        &GridFunction::constant(n, 1.0).unwrap(),
        &modulus,
        &spec(),
        &signal_cfg(),
    )
    .unwrap();

    assert_eq!(
        from_above.trace.as_ref().unwrap().direction,
        Direction::Decreasing
    );
    // the decreasing chain stays above its limit
    let squared = square(&op);
    let mut x = GridFunction::constant(n, 1.0).unwrap();
    for _ in &from_above.trace.as_ref().unwrap().steps {
        assert!(from_above.fixed_point.leq(&x, &spec()).unwrap());
        x = squared.apply(&x).unwrap();
    }
    // both directions meet at the unique fixed point
    let gap = from_below
        .fixed_point
        .sup_distance(&from_above.fixed_point)
        .unwrap();
    assert!(gap <= 1e-9, "limits disagree by {gap}");
}

#[test]
fn periodic_operator_norm_contraction_chain() {
    // for a hypothesis-satisfying nonlinearity, comparable pairs satisfy
    // ||T(u) - T(v)|| <= N * f(||u - v||) * ||u - v|| in the native norm
    let n = 100;
    let s = spec();
    let lam = 1.0;
    let op = PeriodicBVPOperator::new(
        lam,
        lam,
        n,
        KernelRule::SplitAtDiagonal,
        move |_t, z| 2.0 - lam * z,
        &s,
    )
    .unwrap();
    let modulus = Modulus::logarithmic();
    let pairs = PairSampler::new(n, 30, 0.0, 2.0, 13).unwrap().generate();
    for (u, v) in &pairs {
        let gap = u.sup_distance(v).unwrap();
        if gap == 0.0 {
            continue;
        }
        let tu = op.apply(u).unwrap();
        let tv = op.apply(v).unwrap();
        let lhs = tu.sup_distance(&tv).unwrap();
        let rhs = s.normal_constant * modulus.eval(gap).unwrap() * gap;
        assert!(lhs <= rhs + s.order_tol, "{lhs} > {rhs}");
    }
}

#[test]
fn retightened_rate_never_loosens_the_run() {
    let n = 200;
    let op = SignalFeedbackOperator::analytic(1, n).unwrap();
    let modulus = Modulus::constant(0.15).unwrap();
    let u0 = GridFunction::constant(n, 0.0).unwrap();

    let default_run = solve(&op, &u0, &modulus, &spec(), &signal_cfg()).unwrap();
    let tightened = solve(
        &op,
        &u0,
        &modulus,
        &spec(),
        &SolveConfig {
            retighten_rate: true,
            ..signal_cfg()
        },
    )
    .unwrap();

    assert!(tightened.iterations <= default_run.iterations);
    let gap = tightened
        .fixed_point
        .sup_distance(&default_run.fixed_point)
        .unwrap();
    assert!(gap <= 2e-10, "fixed points disagree by {gap}");
    // the retightened certificate is at least as sharp
    assert!(tightened.lambda.unwrap() <= default_run.lambda.unwrap());
}

#[test]
fn emitted_trace_files_round_trip() {
    let n = 150;
    let op = SignalFeedbackOperator::analytic(1, n).unwrap();
    let modulus = Modulus::constant(0.15).unwrap();
    let u0 = GridFunction::constant(n, 0.0).unwrap();
    let res = solve(&op, &u0, &modulus, &spec(), &signal_cfg()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("trace.csv");
    let json_path = dir.path().join("trace.json");
    emit_trace(&res, OutputFormat::Csv, &csv_path).unwrap();
    emit_trace(&res, OutputFormat::Json, &json_path).unwrap();

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let steps = &res.trace.as_ref().unwrap().steps;
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), steps.len());
    assert_eq!(json.as_array().unwrap().len(), steps.len());
    for (i, step) in steps.iter().enumerate() {
        let fields: Vec<&str> = rows[i].split(',').collect();
        // both renderings reproduce the doubles exactly
        assert_eq!(fields[1].parse::<f64>().unwrap(), step.step_norm);
        assert_eq!(fields[2].parse::<f64>().unwrap(), step.a_priori);
        assert_eq!(fields[3].parse::<f64>().unwrap(), step.a_posteriori);
        assert_eq!(json[i]["step_norm"].as_f64().unwrap(), step.step_norm);
        assert_eq!(json[i]["a_priori"].as_f64().unwrap(), step.a_priori);
        assert_eq!(json[i]["a_posteriori"].as_f64().unwrap(), step.a_posteriori);
    }
}

#[test]
fn unwritable_trace_path_is_an_error() {
    let n = 50;
    let op = SignalFeedbackOperator::analytic(1, n).unwrap();
    let res = solve(
        &op,
        &GridFunction::constant(n, 0.0).unwrap(),
        &Modulus::constant(0.15).unwrap(),
        &spec(),
        &signal_cfg(),
    )
    .unwrap();
    let missing_dir = std::path::Path::new("/nonexistent-dir/trace.csv");
    assert!(emit_trace(&res, OutputFormat::Csv, missing_dir).is_err());
}
