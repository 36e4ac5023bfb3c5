use stochbohm::experiments::{parse_config, run_experiment, sweep};
use stochbohm::verify::DEFAULT_CONFIGS;

fn shipped(name: &str) -> &'static str {
    DEFAULT_CONFIGS.iter().find(|(n, _)| *n == name).unwrap().1
}

#[test]
fn shipped_configs_round_trip() {
    for (name, text) in DEFAULT_CONFIGS {
        let cfg = parse_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_config(&cfg.to_json()).unwrap(), cfg, "{name}");
    }
}

#[test]
fn stern_gerlach_frequencies_hold_across_replications() {
    let text = shipped("stern_gerlach_half").replace("\"count\": 10000", "\"count\": 2000");
    let mut within = 0;
    for seed in 0..100u64 {
        let mut cfg = parse_config(&text).unwrap();
        cfg.seed = seed;
        let r = run_experiment(&cfg).unwrap();
        within += usize::from(r.checks.iter().filter(|c| c.name.starts_with("frequency:")).all(|c| c.pass));
    }
    assert!(within >= 99, "{within} of 100 replications inside the 3σ envelope");
}

#[test]
fn two_slit_visibility_falls_with_the_spread() {
    let text = shipped("two_slit").replace(
        "\"timings\"",
        r#""stochastic": {"density": {
            "etas": [{"kind": "gaussian", "mean": 0.0, "std": 0.1}, {"kind": "gaussian", "mean": 0.0, "std": 0.1}],
            "y": {"kind": "fixed", "value": 0.0}}},
        "timings""#,
    );
    let stds = [0.01, 0.3, 1.0, 2.0, 4.0, 8.0];
    let table = sweep(&text, "stochastic.density.etas.0.std", &stds).unwrap();
    let col = table.header.iter().position(|h| h == "visibility:averaged").unwrap();
    let vis: Vec<f64> = table.rows.iter().map(|r| r[col]).collect();
    assert!(vis.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{vis:?}");
    assert!(vis[0] > 0.9 && vis[stds.len() - 1] < 0.05, "{vis:?}");
}

#[test]
fn positive_plateau_pushes_packets_back() {
    let r = run_experiment(&parse_config(shipped("point_localisation")).unwrap()).unwrap();
    assert!(r.passed());
    assert!(r.scalar("momentum_change").unwrap() < 0.0);
    assert!(r.scalar("reflected_fraction").unwrap() > 0.0);
}

#[test]
fn epr_particle_two_statistics_are_local() {
    for alpha in [0.0, 0.7, 2.0, 3.0] {
        let text = shipped("epr").replace("\"alpha\": 1.0", &format!("\"alpha\": {alpha}"));
        let r = run_experiment(&parse_config(&text).unwrap()).unwrap();
        assert!(r.passed());
        for row in &r.tables["incoherent_after"] {
            assert!(row.iter().all(|p| (p - 0.5).abs() < 1e-12));
        }
        assert!(r.scalar("averaged_marginal_deviation").unwrap() < 1e-10);
    }
}

#[test]
fn errors_carry_their_stage() {
    // the spin-down branch now ends on the detector edge
    let text = shipped("stern_gerlach_half").replace("\"lower\": [-96.0], \"upper\": [0.0]", "\"lower\": [-96.0], \"upper\": [-48.0]");
    let text = text.replace("\"lower\": [0.0], \"upper\": [96.0]", "\"lower\": [-48.0], \"upper\": [96.0]");
    let err = run_experiment(&parse_config(&text).unwrap()).unwrap_err();
    assert!(err.to_string().contains("coincidence"), "{err}");
}

/// Every key of `value` is declared at the matching place in `schema`.
fn keys_declared(value: &serde_json::Value, schema: &serde_json::Value, root: &serde_json::Value, path: &str) {
    let schema = match schema.get("$ref").and_then(|r| r.as_str()) {
        Some(r) => root.pointer(r.trim_start_matches('#')).unwrap(),
        None => schema,
    };
    match value {
        serde_json::Value::Object(map) => {
            if let Some(props) = schema.get("properties") {
                for (k, v) in map {
                    let sub = props.get(k).unwrap_or_else(|| panic!("{path}.{k} missing from schema"));
                    keys_declared(v, sub, root, &format!("{path}.{k}"));
                }
            }
        }
        serde_json::Value::Array(items) => {
            if let Some(item) = schema.get("items") {
                for (i, v) in items.iter().enumerate() {
                    keys_declared(v, item, root, &format!("{path}.{i}"));
                }
            }
        }
        _ => {}
    }
}

#[test]
fn schema_declares_every_resolved_key() {
    let schema: serde_json::Value = serde_json::from_str(include_str!("../../../configs/schema.json")).unwrap();
    for (name, text) in DEFAULT_CONFIGS {
        let resolved: serde_json::Value = serde_json::from_str(&parse_config(text).unwrap().to_json()).unwrap();
        keys_declared(&resolved, &schema, &schema, name);
    }
}
