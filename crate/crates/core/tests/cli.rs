use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use artinv::codebook::Codebook;

fn artinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_artinv")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Working directory with a coarse codebook and prototypes made by the CLI.
struct Workdir {
    dir: PathBuf,
    codebook: PathBuf,
    prototypes: PathBuf,
}

fn workdir() -> &'static Workdir {
    static W: OnceLock<Workdir> = OnceLock::new();
    W.get_or_init(|| {
        let dir = std::env::temp_dir().join(format!("artinv-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let codebook = dir.join("coarse.aacb");
        let prototypes = dir.join("prototypes.csv");
        let o = artinv(&["codebook", "build", "--max-depth", "1", "--out", path_str(&codebook)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = artinv(&["calibrate", "--samples", "20", "--out", path_str(&prototypes)]);
        assert!(o.status.success(), "{}", stderr(&o));
        Workdir { dir, codebook, prototypes }
    })
}

fn reachable_track(frames: usize) -> PathBuf {
    let w = workdir();
    let f = Codebook::load(&w.codebook).unwrap().cube(0).center_formants;
    let mut text = String::from("t_ms,f1,f2,f3\n");
    for i in 0..frames {
        text.push_str(&format!("{},{},{},{}\n", 10 * i, f.f1, f.f2, f.f3));
    }
    let path = w.dir.join(format!("track{frames}.csv"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn synth_neutral_vector() {
    let o = artinv(&["synth", "--vector", "0,0,0,0,0,0,0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("f1,f2,f3"));
    let f: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    for (got, want) in f.iter().zip([500.0, 1500.0, 2500.0]) {
        assert!((got - want).abs() <= 0.02 * want);
    }
    assert_eq!(out.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count(), 1 + 32);
}

#[test]
fn synth_area_to_file() {
    let path = workdir().dir.join("area.csv");
    let o = artinv(&["synth", "--vector", "-1,0.5,0,0,1,2,0", "--area-out", path_str(&path)]);
    assert_eq!(o.status.code(), Some(0));
    let area = std::fs::read_to_string(&path).unwrap();
    assert!(area.starts_with("section,x_cm,length_cm,area_cm2\n"));
    assert_eq!(area.lines().count(), 33);
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn usage_errors_exit_one() {
    for args in [&["--bogus"][..], &["synth"], &["synth", "--vector", "1,2"], &["nonsense"]] {
        let o = artinv(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).starts_with("error:"), "{args:?}: {}", stderr(&o));
    }
    assert!(stderr(&artinv(&["--bogus"])).contains("Usage"));
}

#[test]
fn data_errors_exit_two() {
    let missing = workdir().dir.join("missing.aacb");
    let bad_cfg = workdir().dir.join("bad.toml");
    std::fs::write(&bad_cfg, "[model]\nunknown_key = 1\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["codebook", "info", path_str(&missing)],
        vec!["synth", "--vector", "0,0,3,0,0,0,0"],
        vec!["--config", path_str(&bad_cfg), "synth", "--vector", "0,0,0,0,0,0,0"],
        vec!["classify", "--prototypes", path_str(&missing), "--formants", "300,2000,2800"],
    ];
    for args in cases {
        let o = artinv(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error:"));
    }
}

#[test]
fn codebook_info_reports_stats() {
    let o = artinv(&["codebook", "info", path_str(&workdir().codebook)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("cube_count="));
    assert!(out.contains("max_depth=1"));
}

#[test]
fn classify_and_score() {
    let w = workdir();
    let o = artinv(&["classify", "--prototypes", path_str(&w.prototypes), "--formants", "300,2000,2800"]);
    assert_eq!(o.status.code(), Some(0));
    let vowel = stdout(&o).trim().to_string();
    assert!(vowel.parse::<artinv::vowel::Vowel>().is_ok());
    let o = artinv(&["score", "--vector", "0,-1,0,0,2,-2,0", "--vowel", "i"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "i");
    for x in &row[1..] {
        assert!((0.0..=1.0).contains(&x.parse::<f64>().unwrap()));
    }
}

#[test]
fn consistency_prints_confusion_matrix() {
    let w = workdir();
    let o = artinv(&["consistency", "--prototypes", path_str(&w.prototypes), "--samples", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 11);
    assert!(out.starts_with("vowel,i,e,E,a,y,2,9,u,o,O,own_rate\n"));
}

#[test]
fn invert_constant_track_velocity_only() {
    let w = workdir();
    let track = reachable_track(5);
    let args = [
        "invert",
        "--codebook",
        path_str(&w.codebook),
        "--prototypes",
        path_str(&w.prototypes),
        "--track",
        path_str(&track),
        "--phon-weight",
        "0",
        "--dyn-weight",
        "1",
        "--candidates",
        "16",
        "--tolerance-bark",
        "0.3",
    ];
    let o = artinv(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert_eq!(r[1..8], rows[0][1..8]);
    }
    assert_eq!(stdout(&artinv(&args)), out, "identical runs differ");
}

#[test]
fn invert_unreachable_exits_three() {
    let w = workdir();
    let track = w.dir.join("far.csv");
    std::fs::write(&track, "t_ms,f1,f2,f3\n0,150,5000,5900\n").unwrap();
    let o = artinv(&[
        "invert",
        "--codebook",
        path_str(&w.codebook),
        "--prototypes",
        path_str(&w.prototypes),
        "--track",
        path_str(&track),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error: frame 0"));
}

#[test]
fn scatter_rows_sorted_by_score() {
    let w = workdir();
    let f = Codebook::load(&w.codebook).unwrap().cube(0).center_formants;
    let formants = format!("{},{},{}", f.f1, f.f2, f.f3);
    let o = artinv(&[
        "constriction-scatter",
        "--codebook",
        path_str(&w.codebook),
        "--prototypes",
        path_str(&w.prototypes),
        "--formants",
        &formants,
        "--seed",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("place_cm,area_cm2,score\n"));
    let rows: Vec<[f64; 3]> = out
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    assert!(!rows.is_empty());
    for w in rows.windows(2) {
        assert!(w[0][2] >= w[1][2]);
    }
    for r in &rows {
        assert!((0.0..=1.0).contains(&r[2]) && r[1] >= 0.0 && r[0] > 0.0);
    }
}

#[test]
fn seed_controls_calibration() {
    let a = stdout(&artinv(&["calibrate", "--samples", "12", "--seed", "3"]));
    let b = stdout(&artinv(&["calibrate", "--samples", "12", "--seed", "3"]));
    let c = stdout(&artinv(&["calibrate", "--samples", "12", "--seed", "4"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let default = stdout(&artinv(&["calibrate", "--samples", "12"]));
    assert_eq!(default, stdout(&artinv(&["calibrate", "--samples", "12", "--seed", "1"])));
}
