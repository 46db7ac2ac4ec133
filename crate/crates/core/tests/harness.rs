use phase_lab::bounds::{self, BoundName};
use phase_lab::harness::{
    load_config, output, random_instance, run_experiment, table_csv, write_outputs,
    ExperimentResult,
};
use phase_lab::harness::config::RandomInstance;

fn inline_diag(phases: &[f64]) -> String {
    let d = phases.len();
    let mut entries = Vec::new();
    for r in 0..d {
        for c in 0..d {
            let v = if r == c { 2.0 * std::f64::consts::PI * phases[r] } else { 0.0 };
            entries.push(format!("[{v:?}, 0.0]"));
        }
    }
    format!(
        r#"{{"inline": {{"model": {{"dim": {d}, "terms": [[{}]]}}}}}}"#,
        entries.join(", ")
    )
}

fn run(text: &str, threads: usize) -> ExperimentResult {
    let config = load_config(text).unwrap();
    run_experiment(&config, threads).unwrap()
}

#[test]
fn dyadic_phase_never_fails() {
    let text = format!(
        r#"{{"kind": "E1_exact", "instance": {}, "register": {{"n": 2}},
            "sweep": {{"parameter": "t", "values": [3, 4, 5, 6, 8]}}}}"#,
        inline_diag(&[0.25, 0.625])
    );
    let result = run(&text, 2);
    assert_eq!(result.rows.len(), 5);
    for row in &result.rows {
        assert!(row.is_ok(), "{}", row.status);
        assert_eq!(row.measured, Some(0.0));
    }
}

#[test]
fn theorem1_register_meets_eps() {
    let text = r#"{"kind": "E1_exact",
        "instance": {"random": {"dim": 4, "num_terms": 2, "seed": 5, "eigen_index": 2}},
        "register": {"n": 3},
        "sweep": {"parameter": "eps", "values": [0.05, 0.1, 0.25, 0.5]}}"#;
    let result = run(text, 0);
    for row in &result.rows {
        let eps = row.sweep_value.unwrap();
        assert_eq!(row.t.unwrap(), bounds::thm1_qubits(3, eps).unwrap());
        assert!(row.measured.unwrap() <= eps);
        assert!(row.diagnostics["simulation_max_diff"] < 1e-10);
    }
}

#[test]
fn single_term_qdrift_matches_exact_run() {
    let instance = r#"{"random": {"dim": 4, "num_terms": 1, "seed": 8, "eigen_index": 1}}"#;
    let sweep = r#""sweep": {"parameter": "t", "values": [3, 4, 5]}"#;
    let e1 = run(
        &format!(r#"{{"kind": "E1_exact", "instance": {instance}, "register": {{"n": 1}}, {sweep}}}"#),
        1,
    );
    let e4 = run(
        &format!(
            r#"{{"kind": "E4_qdrift", "instance": {instance}, "register": {{"n": 1}}, {sweep},
                "steps": 8, "realizations": 3}}"#
        ),
        1,
    );
    for (a, b) in e1.rows.iter().zip(&e4.rows) {
        assert!(b.is_ok(), "{}", b.status);
        assert!((a.measured.unwrap() - b.measured.unwrap()).abs() < 1e-12);
        assert!(b.mse.unwrap() < 1e-20);
    }
}

#[test]
fn residual_sweep_respects_combined_bound() {
    let text = r#"{"kind": "E2_residual",
        "instance": {"random": {"dim": 6, "num_terms": 2, "seed": 11, "eigen_index": 3}},
        "register": {"n": 3, "eps": 0.2},
        "residual_relative": true,
        "sweep": {"parameter": "residual", "values": [0.0, 0.01, 0.05, 0.1]}}"#;
    let result = run(text, 2);
    for row in &result.rows {
        assert!(row.is_ok(), "{}", row.status);
        let combined = row
            .bounds
            .iter()
            .find(|b| b.name == BoundName::Thm2 && b.quantity == "failure" && b.inputs["combined"] == 1.0)
            .unwrap();
        assert!(row.measured.unwrap() <= combined.value);
        let lemma = row.bounds.iter().find(|b| b.name == BoundName::Lemma1Overlap).unwrap();
        assert!(lemma.satisfied_by.unwrap() >= lemma.value - 1e-12);
        for b in &row.bounds {
            assert_eq!(b.recompute().unwrap(), b.value);
        }
    }
}

#[test]
fn trotter_sweep_reports_orders_and_one_polyline_per_series() {
    let text = r#"{"kind": "E3_trotter",
        "instance": {"random": {"dim": 4, "num_terms": 3, "seed": 2, "eigen_index": 0}},
        "register": {"t": 6, "n": 3}, "trotter_order": 2,
        "sweep": {"parameter": "steps", "values": [8, 16, 32, 64]}}"#;
    let result = run(text, 2);
    let slope = result.summary["local_err_slope_vs_tau"];
    assert!((slope - 3.0).abs() < 0.3, "{slope}");
    let global = result.summary["onestep_err_slope_vs_tau"];
    assert!((global - 2.0).abs() < 0.3, "{global}");

    let plot = output::result_plot(&result);
    let svg = plot.to_svg();
    // one measured failure series, then each bound and its measured counterpart
    let labels: std::collections::BTreeSet<String> = result
        .rows
        .iter()
        .flat_map(|r| r.bounds.iter().map(output::bound_label))
        .collect();
    let with_measured = labels
        .iter()
        .filter(|l| {
            result.rows.iter().any(|r| {
                r.bounds.iter().any(|b| {
                    &output::bound_label(b) == *l && b.satisfied_by.is_some() && b.satisfied_by != r.measured
                })
            })
        })
        .count();
    assert_eq!(svg.matches("<polyline").count(), 1 + labels.len() + with_measured);
    assert_eq!(plot.series.len(), 1 + labels.len() + with_measured);
    assert!(plot.log_x);
}

#[test]
fn outputs_are_deterministic() {
    let text = r#"{"kind": "E4_qdrift",
        "instance": {"random": {"dim": 4, "num_terms": 2, "seed": 3, "eigen_index": 1}},
        "register": {"t": 4, "n": 2, "eps": 0.5}, "shots": 200,
        "sweep": {"parameter": "steps", "values": [16, 32]}, "realizations": 12, "master_seed": 99}"#;
    let a = run(text, 1);
    let b = run(text, 4);
    assert_eq!(table_csv(&a).unwrap(), table_csv(&b).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let first = write_outputs(&a, dir.path()).unwrap();
    let csv1 = std::fs::read(&first.csv).unwrap();
    let json1 = std::fs::read(&first.json).unwrap();
    let second = write_outputs(&a, dir.path()).unwrap();
    assert_eq!(csv1, std::fs::read(&second.csv).unwrap());
    assert_eq!(json1, std::fs::read(&second.json).unwrap());
    assert!(std::fs::read_to_string(&first.svg).unwrap().starts_with("<svg"));
    let parsed: serde_json::Value = serde_json::from_slice(&json1).unwrap();
    assert_eq!(parsed["provenance"]["master_seed"], 99);

    let c = run(&text.replace("\"master_seed\": 99", "\"master_seed\": 100"), 2);
    assert_ne!(table_csv(&a).unwrap(), table_csv(&c).unwrap());
}

#[test]
fn empty_sweep_writes_header_only() {
    let text = format!(
        r#"{{"kind": "E1_exact", "instance": {}, "register": {{"t": 4}},
            "sweep": {{"parameter": "t", "values": []}}}}"#,
        inline_diag(&[0.3, 0.7])
    );
    let result = run(&text, 1);
    let csv = table_csv(&result).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("index,sweep_value,t,n,ell"));
}

#[test]
fn failing_points_become_marker_rows() {
    // the largest residual is unreachable; the others still run
    let text = r#"{"kind": "E2_residual",
        "instance": {"random": {"dim": 4, "num_terms": 2, "seed": 1}},
        "register": {"t": 5, "n": 2},
        "sweep": {"parameter": "residual", "values": [0.01, 1000.0]}}"#;
    let result = run(text, 1);
    assert!(result.rows[0].is_ok());
    assert!(result.rows[1].status.starts_with("error:"), "{}", result.rows[1].status);
    assert_eq!(result.failed_rows(), 1);
    let csv = table_csv(&result).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn random_instance_is_replayable() {
    let spec = RandomInstance {
        dim: 5,
        num_terms: 2,
        norm_scale: 0.5,
        seed: 12,
        eigen_index: 0,
    };
    let a = random_instance(&spec).unwrap();
    let b = random_instance(&spec).unwrap();
    assert_eq!(a.model.total(), b.model.total());
    assert_eq!(a.eigenvector, b.eigenvector);
}
