use serde_json::Value;

use super::{parse_config, run_experiment, ExperimentResult};
use crate::io::Table;
use crate::{Error, Result};

/// Replaces the value at a dotted path (`"stochastic.density.etas.0.upper"`);
/// numeric segments index arrays.
pub fn set_path(root: &mut Value, path: &str, new: Value) -> Result<()> {
    let bad = |msg: String| Error::Schema { path: path.to_string(), message: msg };
    let mut cur = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), new);
                    return Ok(());
                }
                map.get_mut(*seg).ok_or_else(|| bad(format!("no key '{seg}'")))?
            }
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| bad(format!("'{seg}' is not an array index")))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| bad(format!("index {idx} out of range ({len})")))?;
                if last {
                    *slot = new;
                    return Ok(());
                }
                slot
            }
            _ => return Err(bad(format!("cannot descend into '{seg}'"))),
        };
    }
    Err(bad("empty path".into()))
}

fn row_values(r: &ExperimentResult) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = Vec::new();
    out.extend(r.visibility.iter().map(|(k, v)| (format!("visibility:{k}"), *v)));
    out.extend(r.frequencies().into_iter().map(|(k, v)| (format!("frequency:{k}"), v)));
    out.extend(r.scalars.iter().map(|(k, v)| (k.clone(), *v)));
    if let Some(m) = &r.decoherence {
        out.push(("max_off_diagonal".into(), m.max_off_diagonal()));
    }
    if let Some(e) = &r.equivariance {
        out.push(("ks_distance".into(), e.ks_distance));
    }
    out.push(("flagged".into(), r.flagged as f64));
    out
}

/// Runs the config once per value of `path` and tabulates scalar outputs.
/// Every variant is parsed and validated before the first run.
pub fn sweep(text: &str, path: &str, values: &[f64]) -> Result<Table> {
    let base: Value = serde_json::from_str(text).map_err(|e| Error::Schema { path: String::new(), message: e.to_string() })?;
    let configs = values
        .iter()
        .map(|&v| {
            let mut doc = base.clone();
            set_path(&mut doc, path, Value::from(v))?;
            parse_config(&doc.to_string())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header: Option<Vec<String>> = None;
    let mut table = Table::new(["value"]);
    for (cfg, &v) in configs.iter().zip(values) {
        let r = run_experiment(cfg)?;
        let cells = row_values(&r);
        let names = header.get_or_insert_with(|| {
            let names: Vec<String> = cells.iter().map(|(k, _)| k.clone()).collect();
            table.header.extend(names.iter().cloned());
            names
        });
        let mut row = vec![v];
        row.extend(names.iter().map(|n| cells.iter().find(|(k, _)| k == n).map_or(f64::NAN, |(_, x)| *x)));
        table.push(row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn dotted_paths() {
        let mut v = json!({"a": {"b": [1, {"c": 2}]}});
        set_path(&mut v, "a.b.1.c", json!(5.0)).unwrap();
        set_path(&mut v, "a.b.0", json!(3)).unwrap();
        set_path(&mut v, "a.d", json!(true)).unwrap();
        assert_eq!(v, json!({"a": {"b": [3, {"c": 5.0}], "d": true}}));
        assert!(set_path(&mut v, "a.b.7", json!(0)).is_err());
        assert!(set_path(&mut v, "a.x.y", json!(0)).is_err());
    }

    #[test]
    fn epr_alpha_sweep() {
        let text = r#"{"scenario": "epr", "seed": 1, "epr": {"alpha": 0.0}}"#;
        let t = sweep(text, "epr.alpha", &[0.0, std::f64::consts::PI]).unwrap();
        assert_eq!(t.rows.len(), 2);
        let col = t.header.iter().position(|h| h == "bell_gap_after").unwrap();
        assert!((t.rows[0][col] - 0.25).abs() < 1e-12);
        assert!((t.rows[1][col] - 0.25).abs() < 1e-12);
    }
}
