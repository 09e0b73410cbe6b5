use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_prnu-sda"));
    cmd.env_remove("PRNU_SDA_JOBS").env_remove("RUST_LOG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small corpus with held-out queries and impostors. `extra` holds flag and
/// value pairs that replace the defaults.
fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("synth");
    let mut opts = vec![
        ("--width", "128"),
        ("--height", "96"),
        ("--frames", "40"),
        ("--queries", "3"),
        ("--impostors", "3"),
        ("--seed", "5"),
    ];
    for pair in extra.chunks(2) {
        match opts.iter_mut().find(|(k, _)| *k == pair[0]) {
            Some(slot) => slot.1 = pair[1],
            None => opts.push((pair[0], pair[1])),
        }
    }
    let mut args = vec!["synth", "-o", s(&out)];
    args.extend(opts.iter().flat_map(|(k, v)| [*k, *v]));
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn extract(corpus: &Path, fp: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["extract", s(corpus), "-o", s(fp)];
    args.extend_from_slice(extra);
    run(&args)
}

/// Reads `key=value` pairs from a one-line report.
fn field(line: &str, key: &str) -> String {
    line.split_whitespace()
        .find_map(|t| t.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {line:?}"))
        .trim_end_matches('s')
        .to_string()
}

#[test]
fn synth_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let a = synth(&tmp.path().join("a"), &[]);
    let b = synth(&tmp.path().join("b"), &[]);
    for name in ["corpus.y4m", "queries.y4m", "impostors.y4m", "truth.fp"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let c = synth(&tmp.path().join("c"), &["--seed", "6"]);
    assert_ne!(
        std::fs::read(a.join("corpus.y4m")).unwrap(),
        std::fs::read(c.join("corpus.y4m")).unwrap()
    );
}

#[test]
fn synth_pgm_frames_feed_extract() {
    let tmp = TempDir::new().unwrap();
    let out = synth(tmp.path(), &["--format", "pgm", "--frames", "6"]);
    let mut frames: Vec<PathBuf> = std::fs::read_dir(out.join("frames"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    frames.sort();
    assert_eq!(frames.len(), 6);
    let fp = tmp.path().join("k.fp");
    let mut args = vec!["extract".to_string()];
    args.extend(frames.iter().map(|p| s(p).to_string()));
    args.extend([
        "-o".to_string(),
        s(&fp).to_string(),
        "--depth".to_string(),
        "3".to_string(),
    ]);
    let o = bin().args(&args).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert_eq!(field(&line, "frames"), "6");
    assert_eq!(field(&line, "denoise_ops"), "2");
}

#[test]
fn zero_frames_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["synth", "-o", s(tmp.path()), "--frames", "0"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn depth_one_writes_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let corpus = synth(tmp.path(), &[]).join("corpus.y4m");
    let conv = tmp.path().join("conv.fp");
    let sda = tmp.path().join("sda.fp");
    assert_eq!(code(&extract(&corpus, &conv, &[])), 0);
    assert_eq!(
        code(&extract(&corpus, &sda, &["--mode", "sda", "--depth", "1"])),
        0
    );
    assert_eq!(std::fs::read(conv).unwrap(), std::fs::read(sda).unwrap());
}

#[test]
fn extract_reports_counts_and_rejects_oversized_depth() {
    let tmp = TempDir::new().unwrap();
    let corpus = synth(tmp.path(), &[]).join("corpus.y4m");
    let fp = tmp.path().join("k.fp");
    let o = extract(&corpus, &fp, &["--depth", "10"]);
    assert_eq!(code(&o), 0);
    assert_eq!(field(&stdout(&o), "denoise_ops"), "4");
    let o = extract(&corpus, &fp, &["--stride", "10"]);
    assert_eq!(field(&stdout(&o), "frames"), "4");
    let o = extract(&corpus, &tmp.path().join("bad.fp"), &["--depth", "5000"]);
    assert_eq!(code(&o), 1);
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    assert!(!tmp.path().join("bad.fp").exists());
}

#[test]
fn match_exit_codes_and_threshold() {
    let tmp = TempDir::new().unwrap();
    let out = synth(tmp.path(), &[]);
    let fp = tmp.path().join("k.fp");
    assert_eq!(code(&extract(&out.join("corpus.y4m"), &fp, &[])), 0);
    let queries = out.join("queries.y4m");
    let hit = run(&["match", s(&fp), s(&queries)]);
    assert_eq!(code(&hit), 0, "{}", stdout(&hit));
    let line = stdout(&hit);
    assert_eq!(field(&line, "decision"), "match");
    assert_eq!(
        (field(&line, "dx"), field(&line, "dy")),
        ("0".into(), "0".into())
    );
    let miss = run(&[
        "match",
        s(&fp),
        s(&out.join("impostors.y4m")),
        "--frame",
        "2",
    ]);
    assert_eq!(code(&miss), 2);
    assert_eq!(field(&stdout(&miss), "decision"), "no-match");

    let score: f64 = field(&line, "pce").parse().unwrap();
    let below = format!("{}", score - 1.0);
    let above = format!("{}", score + 1.0);
    assert_eq!(
        code(&run(&["match", s(&fp), s(&queries), "--threshold", &below])),
        0
    );
    assert_eq!(
        code(&run(&["match", s(&fp), s(&queries), "--threshold", &above])),
        2
    );

    assert_eq!(
        code(&run(&["match", s(&fp), s(&tmp.path().join("missing.y4m"))])),
        1
    );
}

#[test]
fn size_mismatch_needs_search_shift() {
    let tmp = TempDir::new().unwrap();
    let out = synth(tmp.path(), &[]);
    let fp = tmp.path().join("k.fp");
    assert_eq!(code(&extract(&out.join("corpus.y4m"), &fp, &[])), 0);
    let small = synth(
        &tmp.path().join("small"),
        &["--width", "64", "--height", "48"],
    );
    let query = small.join("queries.y4m");
    assert_eq!(code(&run(&["match", s(&fp), s(&query)])), 1);
    let o = run(&["match", s(&fp), s(&query), "--search-shift"]);
    assert!(
        matches!(code(&o), 0 | 2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).starts_with("pce="));
}

#[test]
fn blockwise_csv_has_one_row_per_tile() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("big");
    let o = run(&[
        "synth",
        "-o",
        s(&out),
        "--width",
        "1000",
        "--height",
        "1000",
        "--frames",
        "4",
        "--queries",
        "1",
    ]);
    assert_eq!(code(&o), 0);
    let fp = tmp.path().join("k.fp");
    assert_eq!(
        code(&extract(&out.join("corpus.y4m"), &fp, &["--depth", "4"])),
        0
    );
    let o = run(&["match", s(&fp), s(&out.join("queries.y4m")), "--blockwise"]);
    assert!(matches!(code(&o), 0 | 2));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,width,height,pce,ncc_peak,dx,dy,decision");
    assert_eq!(lines.len(), 5, "{text}");
    for row in &lines[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 9);
        assert_eq!((cells[2], cells[3]), ("500", "500"));
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    let out = synth(tmp.path(), &[]);
    let fp = tmp.path().join("k.fp");
    assert_eq!(code(&extract(&out.join("corpus.y4m"), &fp, &[])), 0);
    let cfg = tmp.path().join("run.conf");
    std::fs::write(&cfg, "# strict\nthreshold = 1e9\n").unwrap();
    let q = out.join("queries.y4m");
    assert_eq!(
        code(&run(&["match", s(&fp), s(&q), "--config", s(&cfg)])),
        2
    );
    assert_eq!(
        code(&run(&[
            "match",
            s(&fp),
            s(&q),
            "--config",
            s(&cfg),
            "--threshold",
            "60"
        ])),
        0
    );
    std::fs::write(&cfg, "threshold = lots\n").unwrap();
    assert_eq!(
        code(&run(&["match", s(&fp), s(&q), "--config", s(&cfg)])),
        1
    );
}

#[test]
fn jobs_come_from_environment() {
    let tmp = TempDir::new().unwrap();
    let corpus = synth(tmp.path(), &[]).join("corpus.y4m");
    let run_with = |jobs: &str, fp: &str| {
        bin()
            .env("PRNU_SDA_JOBS", jobs)
            .args([
                "extract",
                s(&corpus),
                "-o",
                s(&tmp.path().join(fp)),
                "--depth",
                "4",
            ])
            .output()
            .unwrap()
    };
    let o = run_with("3", "a.fp");
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("jobs=3"));
    assert_eq!(code(&run_with("1", "b.fp")), 0);
    assert_eq!(
        std::fs::read(tmp.path().join("a.fp")).unwrap(),
        std::fs::read(tmp.path().join("b.fp")).unwrap()
    );
    assert_eq!(code(&run_with("0", "c.fp")), 1);
    assert_eq!(code(&run_with("many", "c.fp")), 1);
}

#[test]
fn bench_rows_follow_depth_order_and_feed_roc() {
    let tmp = TempDir::new().unwrap();
    let out = synth(tmp.path(), &[]);
    let scores = tmp.path().join("scores");
    let o = run(&[
        "bench",
        s(&out.join("corpus.y4m")),
        "--depths",
        "1,5,20",
        "--queries",
        s(&out.join("queries.y4m")),
        "--impostors",
        s(&out.join("impostors.y4m")),
        "--scores-dir",
        s(&scores),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "mode,depth,frames,denoise_ops,time_s,mean_pce,pce_ratio,tpr,fpr,speedup"
    );
    assert_eq!(lines.len(), 4);
    let depth_and_ops: Vec<(String, String)> = lines[1..]
        .iter()
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[1].to_string(), c[3].to_string())
        })
        .collect();
    let want = [("1", "40"), ("5", "8"), ("20", "2")].map(|(a, b)| (a.to_string(), b.to_string()));
    assert_eq!(depth_and_ops, want);

    let roc = run(&["roc", s(&scores)]);
    assert_eq!(code(&roc), 0, "{}", String::from_utf8_lossy(&roc.stderr));
    let text = stdout(&roc);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("threshold,fpr,tpr"));
    let last: Vec<f64> = lines
        .last()
        .unwrap()
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last, [1.0, 1.0]);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["extract"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&run(&["roc", s(tmp.path())])), 1);
}
