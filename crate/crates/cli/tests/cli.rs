use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn desloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_desloc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn desloc_with_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_desloc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn without_name(json: &str) -> String {
    json.lines()
        .filter(|l| !l.trim_start().starts_with("\"name\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes the AGV corpus and runs the pipeline on it.
fn agv(root: &Path) -> (PathBuf, PathBuf) {
    let fx = root.join("fx");
    let out = root.join("out");
    assert_eq!(
        desloc(&["fixtures", "agv", "--dir", p(&fx)]).status.code(),
        Some(0)
    );
    let manifest = fx.join("agv.json");
    let run = desloc(&["pipeline", p(&manifest), "--out", p(&out)]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stdout(&run).contains("verification passed"));
    (manifest, out)
}

const PLANT: &str = r#"{
  "name": "P",
  "states": 3,
  "initial": 0,
  "marker": [0],
  "events": [
    {"id":1,"controllable":true,"observable":true},
    {"id":2,"controllable":false,"observable":true},
    {"id":3,"controllable":true,"observable":true}
  ],
  "transitions": [
    [0,1,1],
    [1,2,2],
    [1,3,0],
    [2,3,0]
  ]
}
"#;

const SPEC: &str = r#"{
  "name": "S",
  "states": 3,
  "initial": 0,
  "marker": [0],
  "events": [
    {"id":1,"controllable":true,"observable":true},
    {"id":2,"controllable":false,"observable":true},
    {"id":3,"controllable":true,"observable":true}
  ],
  "transitions": [
    [0,1,1],
    [1,2,2],
    [2,3,0]
  ]
}
"#;

fn small_problem(root: &Path) -> (PathBuf, PathBuf) {
    let plant = root.join("P.json");
    let spec = root.join("S.json");
    std::fs::write(&plant, PLANT).unwrap();
    std::fs::write(&spec, SPEC).unwrap();
    (plant, spec)
}

#[test]
fn suprco_without_hidden_events_equals_supcon() {
    let dir = tempfile::tempdir().unwrap();
    let (plant, spec) = small_problem(dir.path());
    let con = desloc(&["supcon", "--plant", p(&plant), "--spec", p(&spec)]);
    assert_eq!(con.status.code(), Some(0));
    for ambient in ["spec", "controllable"] {
        let rco = desloc(&[
            "suprco",
            "--plant",
            p(&plant),
            "--spec",
            p(&spec),
            "--ambient",
            ambient,
        ]);
        assert_eq!(rco.status.code(), Some(0));
        assert_eq!(without_name(&stdout(&rco)), without_name(&stdout(&con)));
    }
}

#[test]
fn hiding_an_event_can_only_shrink_the_result() {
    let dir = tempfile::tempdir().unwrap();
    let (plant, spec) = small_problem(dir.path());
    let rco = dir.path().join("rco.json");
    let con = dir.path().join("con.json");
    let args = ["--plant", p(&plant), "--spec", p(&spec)];
    let mut a = vec!["suprco"];
    a.extend(args);
    a.extend(["--unobservable", "2", "--out", p(&rco)]);
    assert_eq!(desloc(&a).status.code(), Some(0));
    let mut b = vec!["supcon"];
    b.extend(args);
    b.extend(["--out", p(&con)]);
    assert_eq!(desloc(&b).status.code(), Some(0));
    let states = |path: &Path| {
        let text = std::fs::read_to_string(path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["states"].as_u64().unwrap()
    };
    assert!(states(&rco) <= states(&con));
    assert!(states(&con) > 1);
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let o = desloc(&["trim", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let missing = dir.path().join("nowhere.json");
    assert_eq!(desloc(&["dot", p(&missing)]).status.code(), Some(2));
}

#[test]
fn observer_check_reports_through_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let (plant, _) = small_problem(dir.path());
    let all = desloc(&["observer-check", p(&plant), "--keep", "1,2,3"]);
    assert_eq!(all.status.code(), Some(0));
    assert_eq!(stdout(&all).trim(), "observer: yes");
    let branching = dir.path().join("B.json");
    std::fs::write(
        &branching,
        r#"{
  "name": "B",
  "states": 5,
  "initial": 0,
  "marker": [3],
  "events": [
    {"id":1,"controllable":true,"observable":true},
    {"id":2,"controllable":true,"observable":true},
    {"id":3,"controllable":true,"observable":true}
  ],
  "transitions": [
    [0,1,1],
    [0,2,2],
    [1,3,3],
    [2,3,4]
  ]
}
"#,
    )
    .unwrap();
    let o = desloc(&["observer-check", p(&branching), "--keep", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("observer: no"));
}

#[test]
fn dot_output_marks_controllable_edges() {
    let dir = tempfile::tempdir().unwrap();
    let (plant, _) = small_problem(dir.path());
    let o = desloc(&["dot", p(&plant)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("digraph"));
    assert!(text.contains("doublecircle"));
    assert!(text.contains("style=bold"));
}

#[test]
fn pipeline_output_verifies_and_a_broken_controller_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, out) = agv(dir.path());
    for kind in [
        "supervisors",
        "coordinators",
        "merged",
        "controllers",
        "abstractions",
    ] {
        assert!(out.join(kind).is_dir(), "{kind} missing");
    }
    assert!(out.join("report.json").is_file());
    assert!(out.join("index.json").is_file());
    assert!(!out.join("merged/LOC_53.json").exists());

    let ok = desloc(&["verify", p(&manifest), p(&out)]);
    assert_eq!(ok.status.code(), Some(0));

    // a controller for 33 that never disables it
    std::fs::write(
        out.join("merged/LOC_33.json"),
        r#"{
  "name": "LOC_33",
  "states": 1,
  "initial": 0,
  "marker": [0],
  "events": [
    {"id":33,"controllable":true,"observable":true}
  ],
  "transitions": [
    [0,33,0]
  ],
  "annotations": {"controls":33}
}
"#,
    )
    .unwrap();
    let broken = desloc(&["verify", p(&manifest), p(&out)]);
    assert_eq!(broken.status.code(), Some(1));

    let missing = dir.path().join("absent");
    assert_eq!(
        desloc(&["verify", p(&manifest), p(&missing)]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_replays_the_zone_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let (_, out) = agv(dir.path());
    let fx = dir.path().join("fx");
    let mut args: Vec<String> = vec!["simulate".into()];
    for a in ["A1", "A2", "A3", "A4", "A5"] {
        args.push("--plant".into());
        args.push(fx.join(format!("{a}.json")).to_string_lossy().into_owned());
    }
    let mut merged: Vec<PathBuf> = std::fs::read_dir(out.join("merged"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    merged.sort();
    args.extend(merged.iter().map(|p| p.to_string_lossy().into_owned()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();

    let refused = desloc_with_stdin(&args, "11\n10\n13\n12\n21\n18\n20\n22\n33\n");
    let text = stdout(&refused);
    assert!(text.contains("33 refuse (disabled by LOC_33)"), "{text}");

    let accepted = desloc_with_stdin(&args, "11\n10\n13\n12\n21\n18\n20\n22\n23\n24\n26\n33\n");
    let text = stdout(&accepted);
    assert!(text.lines().any(|l| l == "33 accept"), "{text}");
    assert!(!text.contains("refuse"), "{text}");
}

#[test]
fn localize_then_equiv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let hidden = |text: &str| {
        text.replace(
            r#"{"id":2,"controllable":false,"observable":true}"#,
            r#"{"id":2,"controllable":false,"observable":false}"#,
        )
    };
    let plant = dir.path().join("P.json");
    let spec = dir.path().join("S.json");
    std::fs::write(&plant, hidden(PLANT)).unwrap();
    std::fs::write(&spec, hidden(SPEC)).unwrap();
    let sup = dir.path().join("sup.json");
    let o = desloc(&[
        "posup",
        "--plant",
        p(&plant),
        "--spec",
        p(&spec),
        "--out",
        p(&sup),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let locs = dir.path().join("locs");
    let o = desloc(&[
        "localize",
        "--plant",
        p(&plant),
        "--sup",
        p(&sup),
        "--dir",
        p(&locs),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let files: Vec<PathBuf> = std::fs::read_dir(&locs)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert!(!files.is_empty());
    let mut args = vec!["equiv", "--plant", p(&plant), "--sup", p(&sup)];
    args.extend(files.iter().map(|f| p(f)));
    assert_eq!(desloc(&args).status.code(), Some(0));
}
