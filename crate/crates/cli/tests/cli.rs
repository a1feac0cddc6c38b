use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orthovoronoi"))
}

fn compute(dir: &Path, input: &str, extra: &[&str]) -> Output {
    let inp = dir.join("in.json");
    std::fs::write(&inp, input).unwrap();
    bin()
        .args(["compute", "--input"])
        .arg(&inp)
        .arg("--output")
        .arg(dir.join("out.json"))
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn unit_square_has_five_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let out = compute(dir.path(), r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(doc["nodes"].as_array().unwrap().len(), 5);
    assert_eq!(doc["edges"].as_array().unwrap().len(), 4);
}

#[test]
fn non_manifold_input_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bowtie = r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[2,1],[2,2],[1,2],[1,1],[0,1]]}"#;
    let out = compute(dir.path(), bowtie, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-manifold"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn stats_report_sites_and_cells() {
    let dir = tempfile::tempdir().unwrap();
    let twelve = r#"{"dimension":2,"outer":[[0,0],[6,0],[6,2],[4,2],[4,4],[6,4],[6,6],[0,6],[0,4],[2,4],[2,2],[0,2]]}"#;
    let out = compute(dir.path(), twelve, &["--stats"]);
    assert!(out.status.success());
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["sites"], 12);
    assert!(stats["cells"].as_u64().unwrap() >= 1);
}

#[test]
fn svg_and_obj_need_matching_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("d.svg");
    let out = compute(dir.path(), r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#, &["--svg", svg.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<line").count(), 4);
    let obj = dir.path().join("d.obj");
    let out = compute(dir.path(), r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#, &["--obj", obj.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_then_compute() {
    let dir = tempfile::tempdir().unwrap();
    let shape = dir.path().join("g.json");
    let st = bin()
        .args(["generate", "--seed", "4", "--dim", "2", "--sites", "30", "--holes", "1", "--out"])
        .arg(&shape)
        .status()
        .unwrap();
    assert!(st.success());
    let out = bin()
        .args(["compute", "--input"])
        .arg(&shape)
        .arg("--output")
        .arg(dir.path().join("o.json"))
        .args(["--contract", "--grid-check", "16"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["compute", "--input"])
        .arg(dir.path().join("absent.json"))
        .arg("--output")
        .arg(dir.path().join("o.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
