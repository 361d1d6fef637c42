use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};

fn run(args: &[&str], stdin: &str, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_axdecomp"));
    cmd.args(args)
        .env_remove("AXDECOMP_TOLERANCE")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().expect("spawn axdecomp");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdin(args: &[&str], doc: &Value) -> Output {
    let mut full = args.to_vec();
    full.push("-");
    run(&full, &doc.to_string(), &[])
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn out_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "bad stdout ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn err_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("JSON diagnostic on stderr")
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn axis_of_standard_basis() {
    let o = stdin(
        &["axis"],
        &json!({"dim": 3, "basis": [[1,0,0],[0,1,0],[0,0,1]]}),
    );
    assert_eq!(code(&o), 0);
    let v = out_json(&o);
    for a in floats(&v["axial"]) {
        assert!((a - 1.0).abs() < 1e-12);
    }
    let angle = v["vertex_angle"].as_f64().unwrap();
    assert!((angle - (1.0 / 3f64.sqrt()).acos()).abs() < 1e-12);
    let dir = floats(&v["axis_dir"]);
    assert!((dir.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn axis_of_skewed_plane_basis() {
    let o = stdin(&["axis"], &json!({"dim": 2, "basis": [[1,0],[1,1]]}));
    let a = floats(&out_json(&o)["axial"]);
    assert!((a[1] / a[0] - (2f64.sqrt() - 1.0)).abs() < 1e-12);
}

#[test]
fn axis_rejects_dependent_basis() {
    let o = stdin(&["axis"], &json!({"dim": 2, "basis": [[1,2],[2,4]]}));
    assert_eq!(code(&o), 3);
    assert_eq!(err_json(&o)["exit_code"], 3);
}

#[test]
fn parse_errors_exit_2() {
    for text in [
        "not json",
        "{\"dim\": 2}",
        "{\"dim\": 2, \"basis\": [[1,0]]}",
    ] {
        let o = run(&["axis", "-"], text, &[]);
        assert_eq!(code(&o), 2, "{text}");
    }
    let o = run(&["decompose", "--mode", "sideways", "-"], "{}", &[]);
    assert_eq!(code(&o), 2);
    let o = run(&["axis", "/nonexistent/file.json"], "", &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn decompose_negative_identity() {
    let o = stdin(
        &["decompose", "--mode", "orthogonal"],
        &json!({"dim": 3, "matrix": [[-1,0,0],[0,-1,0],[0,0,-1]]}),
    );
    assert_eq!(code(&o), 0);
    let v = out_json(&o);
    assert_eq!(v["convention"], "apply-left-to-right");
    assert_eq!(v["factors"].as_array().unwrap().len(), 2);
    assert!(v["residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn decompose_precondition_failure_exits_4() {
    let o = stdin(
        &["decompose", "--mode", "conformal"],
        &json!({"dim": 2, "matrix": [[1,0],[0,2]]}),
    );
    assert_eq!(code(&o), 4);
    let diag = err_json(&o);
    assert_eq!(diag["error"], "precondition");
    assert!(o.stdout.is_empty());
}

#[test]
fn decompose_identity_in_invertible_mode() {
    let o = stdin(
        &["decompose", "--mode", "invertible"],
        &json!({"dim": 3, "matrix": [[1,0,0],[0,1,0],[0,0,1]]}),
    );
    let v = out_json(&o);
    let kinds: Vec<&str> = v["factors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, ["rotational", "general_axonal", "diagonal_in_basis"]);
    assert_eq!(v["factors"][0]["theta"], 0.0);
    for e in floats(&v["factors"][2]["entries"]) {
        assert!((e - 1.0).abs() < 1e-12);
    }
}

#[test]
fn decompose_singular_input_is_degenerate() {
    let o = stdin(
        &["decompose", "--mode", "invertible"],
        &json!({"dim": 2, "matrix": [[1,2],[2,4]]}),
    );
    assert_eq!(code(&o), 3);
}

fn decompose_then_verify(doc: &Value, mode: &str) -> (Value, Output) {
    let d = stdin(&["decompose", "--mode", mode], doc);
    assert_eq!(code(&d), 0, "{}", String::from_utf8_lossy(&d.stderr));
    let mut combined = doc.clone();
    combined["decomposition"] = out_json(&d);
    let v = stdin(&["verify", "--claim", mode], &combined);
    (combined, v)
}

#[test]
fn verify_round_trip_and_tampering() {
    let doc = json!({"dim": 3, "matrix": [[0,-1,0],[1,0,0],[0,0,1]]});
    let (mut combined, v) = decompose_then_verify(&doc, "orthogonal");
    assert_eq!(code(&v), 0);
    assert_eq!(out_json(&v)["passed"], true);

    let factors = combined["decomposition"]["factors"].as_array_mut().unwrap();
    let i = factors
        .iter()
        .position(|f| f["kind"] == "rotational" && f["theta"].as_f64().unwrap().abs() > 0.1)
        .unwrap();
    let theta = factors[i]["theta"].as_f64().unwrap();
    factors[i]["theta"] = json!(theta + 1e-5);
    let v = stdin(&["verify", "--claim", "orthogonal"], &combined);
    assert_eq!(code(&v), 1);
    let report = out_json(&v);
    assert!(report["violations"]
        .as_array()
        .unwrap()
        .iter()
        .any(|x| x["invariant"] == "residual"));
}

#[test]
fn verify_claim_mismatch_is_structural() {
    let doc = json!({"dim": 2, "matrix": [[0,-2],[2,0]]});
    let (combined, v) = decompose_then_verify(&doc, "conformal");
    assert_eq!(code(&v), 0);
    let v = stdin(&["verify", "--claim", "orthogonal"], &combined);
    assert_eq!(code(&v), 1);
    let report = out_json(&v);
    assert!(report["violations"]
        .as_array()
        .unwrap()
        .iter()
        .any(|x| x["invariant"].as_str().unwrap().starts_with("structure")));
}

#[test]
fn verify_accepts_bare_factor_list() {
    let doc = json!({
        "dim": 2,
        "matrix": [[3,0],[0,3]],
        "decomposition": [
            {"kind": "rotational", "plane_u": [1,0], "plane_v": [0,1], "theta": 0.0},
            {"kind": "scalar", "c": 3.0}
        ]
    });
    let v = stdin(&["verify", "--claim", "conformal"], &doc);
    assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stdout));
}

#[test]
fn verify_malformed_factor_exits_2() {
    for factor in [
        json!({"kind": "spiral", "c": 1}),
        json!({"kind": "scalar"}),
        json!({"kind": "reflectional", "negated": [1, 0, 0]}),
    ] {
        let doc = json!({"dim": 2, "matrix": [[1,0],[0,1]], "decomposition": [factor]});
        let v = stdin(&["verify", "--claim", "orthogonal"], &doc);
        assert_eq!(code(&v), 2, "{factor}");
    }
    let doc = json!({"dim": 2, "matrix": [[1,0],[0,1]]});
    assert_eq!(code(&stdin(&["verify", "--claim", "orthogonal"], &doc)), 2);
}

#[test]
fn generate_is_byte_deterministic() {
    let args = [
        "generate",
        "--kind",
        "orthogonal",
        "--dim",
        "4",
        "--seed",
        "7",
    ];
    let a = run(&args, "", &[]);
    let b = run(&args, "", &[]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = run(
        &[
            "generate",
            "--kind",
            "orthogonal",
            "--dim",
            "4",
            "--seed",
            "8",
        ],
        "",
        &[],
    );
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn generate_axonal_witness_is_sound() {
    use axdecomp::operators::is_axonal_witness;
    use axdecomp::{Basis, Matrix, Space, Vector};
    for seed in 0..5 {
        let o = run(
            &[
                "generate",
                "--kind",
                "axonal_witness",
                "--dim",
                "4",
                "--seed",
                &seed.to_string(),
            ],
            "",
            &[],
        );
        let v = out_json(&o);
        let rows = |key: &str| -> Vec<Vec<f64>> {
            v[key].as_array().unwrap().iter().map(floats).collect()
        };
        let space = Space::euclidean(4).unwrap();
        let m = Matrix::from_rows(&rows("matrix")).unwrap();
        let basis =
            Basis::new(&space, rows("basis").into_iter().map(Vector::new).collect()).unwrap();
        assert!(is_axonal_witness(&space, &m, &basis));
    }
}

#[test]
fn generate_usage_errors() {
    let o = run(&["generate", "--kind", "orthogonal", "--dim", "0"], "", &[]);
    assert_eq!(code(&o), 2);
    let o = run(&["generate", "--kind", "cubic", "--dim", "2"], "", &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn generate_with_gram_file() {
    let dir = std::env::temp_dir().join(format!("axdecomp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("gram.json");
    std::fs::write(&good, "[[2,1],[1,2]]").unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"gram": [[1,2],[2,1]]}"#).unwrap();

    let o = run(
        &[
            "generate",
            "--kind",
            "orthogonal",
            "--dim",
            "2",
            "--seed",
            "3",
            "--gram-file",
            good.to_str().unwrap(),
        ],
        "",
        &[],
    );
    assert_eq!(code(&o), 0);
    let doc = out_json(&o);
    assert_eq!(doc["gram"], json!([[2.0, 1.0], [1.0, 2.0]]));
    let c = stdin(&["classify"], &doc);
    assert_eq!(out_json(&c)["orthogonal"], true);

    let o = run(
        &[
            "generate",
            "--kind",
            "orthogonal",
            "--dim",
            "2",
            "--gram-file",
            bad.to_str().unwrap(),
        ],
        "",
        &[],
    );
    assert_eq!(code(&o), 2);
    let o = run(
        &[
            "generate",
            "--kind",
            "orthogonal",
            "--dim",
            "3",
            "--gram-file",
            good.to_str().unwrap(),
        ],
        "",
        &[],
    );
    assert_eq!(code(&o), 2);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn classify_examples() {
    let (s, c) = 0.7f64.sin_cos();
    let givens = json!({"dim": 4, "matrix": [[1,0,0,0],[0,c,-s,0],[0,s,c,0],[0,0,0,1]]});
    let v = out_json(&stdin(&["classify"], &givens));
    assert_eq!(v["orthogonal"], true);
    assert_eq!(v["rotational"], true);
    assert_eq!(v["reflectional"], false);
    assert!((v["conformal"]["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let v = out_json(&stdin(
        &["classify"],
        &json!({"dim": 2, "matrix": [[2,0],[0,2]]}),
    ));
    assert_eq!(v["orthogonal"], false);
    assert!((v["conformal"]["lambda"].as_f64().unwrap() - 4.0).abs() < 1e-12);

    let o = run(
        &[
            "generate",
            "--kind",
            "invertible",
            "--dim",
            "4",
            "--seed",
            "1",
        ],
        "",
        &[],
    );
    let v = out_json(&stdin(&["classify"], &out_json(&o)));
    assert_eq!(v["invertible"], true);
    assert_eq!(v["orthogonal"], false);
    assert_eq!(v["conformal"], false);
}

#[test]
fn tolerance_flag_and_environment() {
    let doc = json!({"dim": 2, "matrix": [[1,0],[0,1.000001]]}).to_string();
    let strict = out_json(&run(&["classify", "-"], &doc, &[]));
    assert_eq!(strict["orthogonal"], false);
    let loose = out_json(&run(
        &["classify", "-"],
        &doc,
        &[("AXDECOMP_TOLERANCE", "1e-4")],
    ));
    assert_eq!(loose["orthogonal"], true);
    let flag = out_json(&run(
        &["classify", "--tolerance", "1e-9", "-"],
        &doc,
        &[("AXDECOMP_TOLERANCE", "1e-4")],
    ));
    assert_eq!(flag["orthogonal"], false);
    let o = run(&["classify", "--tolerance", "-1", "-"], &doc, &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn decompose_then_verify_round_trips_generated_instances() {
    for (kind, mode) in [
        ("invertible", "invertible"),
        ("conformal", "conformal"),
        ("orthogonal", "orthogonal"),
    ] {
        for seed in 0..100u64 {
            let dim = 2 + seed % 7;
            let g = run(
                &[
                    "generate",
                    "--kind",
                    kind,
                    "--dim",
                    &dim.to_string(),
                    "--seed",
                    &seed.to_string(),
                ],
                "",
                &[],
            );
            let (_, v) = decompose_then_verify(&out_json(&g), mode);
            assert_eq!(
                code(&v),
                0,
                "{kind} dim {dim} seed {seed}: {}",
                String::from_utf8_lossy(&v.stdout)
            );
        }
    }
}
