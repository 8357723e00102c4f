use std::path::Path;
use std::process::{Command, Output};

use abpkit::harness::{parse_csv, parse_json, RowStatus};

const SMALL: &str = r#"
seed = 11

[solver]
h = 0.1

[[case]]
id = "flat-disk"
theorem = "sobolev_domain"
manifold = { preset = "euclidean" }
domain = { kind = "ball", radius = 1.0 }
density = { coeffs = [1.0] }

[[case]]
id = "cone-disk"
theorem = "isoperimetric"
manifold = { preset = "cone_smoothed", alpha = 0.5 }
domain = { kind = "ball", radius = 2.0 }

[[case]]
id = "flat-patch"
theorem = "michael_simon"
sigma = { preset = "flat_disk", radius = 1.0 }
density = { coeffs_sq = [1.0] }
"#;

fn abpkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abpkit")).args(args).output().expect("spawn abpkit")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn list_presets_names_every_preset() {
    let out = abpkit(&["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["euclidean", "cone_smoothed", "capped_paraboloid", "spline", "polynomial", "flat_disk", "hemisphere"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn check_sobolev_writes_domain_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = abpkit(&["check-sobolev", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let ids: Vec<&str> = rows.iter().map(|r| r.case_id.as_str()).collect();
    assert_eq!(ids, ["flat-disk", "cone-disk"]);
    assert!(rows.iter().all(|r| r.status == RowStatus::Pass && r.seed == 11));
    assert!((rows[1].theta - 0.5).abs() < 1e-12);
}

#[test]
fn michael_simon_json_to_file_with_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let report = dir.path().join("nested/out.json");
    let out = abpkit(&[
        "check-michael-simon",
        "--config",
        &cfg,
        "--out",
        report.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let rows = parse_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].case_id, "flat-patch");
    assert_eq!(rows[0].seed, 99);
    assert_eq!(rows[0].status, RowStatus::Pass);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let one = abpkit(&["check-sobolev", "--config", &cfg, "--threads", "1", "--format", "json"]);
    let four = abpkit(&["check-sobolev", "--config", &cfg, "--threads", "4", "--format", "json"]);
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn failing_rows_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        r#"
seed = 1
[[case]]
id = "negative-density"
theorem = "sobolev_domain"
manifold = { preset = "euclidean" }
domain = { kind = "ball", radius = 1.0 }
density = { coeffs = [-1.0] }
"#,
    );
    let out = abpkit(&["check-sobolev", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows[0].status, RowStatus::Fail);
    assert!(String::from_utf8_lossy(&out.stderr).contains("negative-density"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "a.toml", "seed = 1\nsurprise = 2\n");
    let missing_seed = write(dir.path(), "b.toml", "[solver]\nh = 0.1\n");
    let bad_h = write(dir.path(), "c.toml", "seed = 1\n[solver]\nh = 1.5\n");
    let duplicate = write(
        dir.path(),
        "d.toml",
        &format!("{SMALL}\n[[case]]\nid = \"flat-disk\"\ntheorem = \"isoperimetric\"\nmanifold = {{ preset = \"euclidean\" }}\ndomain = {{ kind = \"ball\", radius = 1.0 }}\n"),
    );
    let extra_field = write(
        dir.path(),
        "e.toml",
        "seed = 1\n[[case]]\nid = \"x\"\ntheorem = \"isoperimetric\"\nmanifold = { preset = \"euclidean\", alpha = 0.5 }\ndomain = { kind = \"ball\", radius = 1.0 }\n",
    );
    for cfg in [&unknown, &missing_seed, &bad_h, &duplicate, &extra_field] {
        let out = abpkit(&["check-sobolev", "--config", cfg]);
        assert_eq!(out.status.code(), Some(2), "{cfg}: {}", String::from_utf8_lossy(&out.stdout));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let out = abpkit(&["check-sobolev", "--config", &dir.path().join("absent.toml").display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn convergence_on_a_ball_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = abpkit(&["convergence", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",exact")), "{text}");
}
