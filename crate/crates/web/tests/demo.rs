use meshtube_web::{boundary_field, design, simulate, BUNDLED_CONFIG};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

fn quick_config() -> String {
    let mut doc: Value = serde_json::from_str(BUNDLED_CONFIG).unwrap();
    doc["sim"]["dt"] = 2e-5.into();
    doc.to_string()
}

#[test]
fn design_reports_feasible_gains() {
    let v = parse(design(BUNDLED_CONFIG).unwrap());
    assert_eq!(v["feasible"], true);
    assert_eq!(v["gains"]["k"].as_array().unwrap().len(), 6);
    assert!(v["certificates"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn design_rejects_bad_config() {
    assert!(design("{}").unwrap_err().contains("missing required keys"));
}

#[test]
fn simulation_series_are_aligned() {
    let v = parse(simulate(&quick_config(), 0.02, 50).unwrap());
    let t = v["t"].as_array().unwrap().len();
    assert!((50..=52).contains(&t), "{t}");
    for key in ["v", "z", "barrier", "sigma_d"] {
        let series = v[key].as_array().unwrap();
        assert_eq!(series.len(), 6);
        assert!(series.iter().all(|s| s.as_array().unwrap().len() == t));
    }
    assert_eq!(v["bounds"][0], serde_json::json!([103.5, 115.5]));
    assert_eq!(v["report"]["constraint_violations"]["count"], 0);
}

#[test]
fn boundary_field_points_inward() {
    let v = parse(boundary_field(BUNDLED_CONFIG, 6, 110.0, 72).unwrap());
    let worst = v["worst"].as_array().unwrap();
    assert_eq!(worst.len(), 72);
    assert!(worst.iter().all(|w| w.as_f64().unwrap() < 0.0));
    assert!((v["radius"].as_f64().unwrap() - 0.2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn boundary_field_checks_node_index() {
    assert!(boundary_field(BUNDLED_CONFIG, 0, 110.0, 8).is_err());
    assert!(boundary_field(BUNDLED_CONFIG, 7, 110.0, 8).is_err());
}
