use std::path::PathBuf;

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// Every key of `doc` is declared under the matching `properties` of `schema`.
fn check(doc: &Value, schema: &Value, at: &str) {
    let Value::Object(map) = doc else { return };
    let props = schema["properties"]
        .as_object()
        .unwrap_or_else(|| panic!("{at}: no properties"));
    for (k, v) in map {
        let sub = props
            .get(k)
            .unwrap_or_else(|| panic!("{at}.{k} missing from the schema"));
        check(v, sub, &format!("{at}.{k}"));
    }
}

#[test]
fn bundled_scenarios_only_use_declared_keys() {
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(root().join("../../docs/scenario.schema.json")).unwrap(),
    )
    .unwrap();
    for name in ["microgrid.toml", "pv_injection.toml"] {
        let doc: toml::Value =
            toml::from_str(&std::fs::read_to_string(root().join("examples").join(name)).unwrap())
                .unwrap();
        check(&serde_json::to_value(doc).unwrap(), &schema, name);
    }
}

#[test]
fn schema_requires_what_the_loader_requires() {
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(root().join("../../docs/scenario.schema.json")).unwrap(),
    )
    .unwrap();
    let required: Vec<&str> = schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(
        required,
        [
            "application",
            "timeseries",
            "components",
            "battery",
            "dispatch"
        ]
    );
    let err = bess_sizer::config::ScenarioFile::from_str_at(
        "application = \"microgrid\"\n",
        &root().join("x.toml"),
    )
    .unwrap_err();
    assert!(err.to_string().contains("timeseries"), "{err}");
}
