use std::path::Path;
use std::process::{Command, Output};

use q2d2::{QuantizerConfig, TilingKind};

fn q2d2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_q2d2")).args(args).env_remove("Q2D2_SEED").output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn grid_dump_rhombic_csv() {
    let text = stdout(&q2d2(&["grid", "build", "--kind", "rhombic", "--levels", "7,7", "--dump", "csv"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,x,y");
    assert_eq!(lines.len(), 1 + 98);
    assert_eq!(lines[1], "0,-3,-3");
}

#[test]
fn grid_dump_svg_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.svg");
    stdout(&q2d2(&["grid", "dump", "--kind", "hex", "--levels", "5", "--format", "svg", "--out", p(&out)]));
    let svg = std::fs::read_to_string(out).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<circle").count(), 25);
}

#[test]
fn quantize_then_dequantize_lands_on_grid_points() {
    let dir = tempfile::tempdir().unwrap();
    let latents = dir.path().join("z.csv");
    let tokens = dir.path().join("t.q2d2");
    let points = dir.path().join("p.csv");
    let rows: Vec<String> = q2d2::analytics::uniform_latents(4, 300, 6)
        .iter()
        .map(|z| z.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
        .collect();
    std::fs::write(&latents, rows.join("\n")).unwrap();
    stdout(&q2d2(&[
        "quantize",
        "--kinds",
        "rhombic,hex,rect",
        "--levels",
        "7,7,5,5,3,4",
        "--latents",
        p(&latents),
        "-o",
        p(&tokens),
        "--tps",
        "75",
    ]));
    stdout(&q2d2(&["dequantize", "-i", p(&tokens), "-o", p(&points)]));

    let cfg = QuantizerConfig::new(
        vec![7, 7, 5, 5, 3, 4],
        vec![TilingKind::Rhombic, TilingKind::Hexagon, TilingKind::Rectangle],
    )
    .unwrap();
    let text = std::fs::read_to_string(points).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("frame,v0,v1,v2,v3,v4,v5"));
    let mut n = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        for j in 0..3 {
            assert!(cfg.grid(j).points().iter().any(|g| g.x == v[2 * j] && g.y == v[2 * j + 1]), "{line}");
        }
        n += 1;
    }
    assert_eq!(n, 300);

    let report = stdout(&q2d2(&["analyze", "--tokens", p(&tokens)]));
    assert!(report.contains("frames=300\n"));
    assert!(report.contains("codebook_size=29400\n"));
    assert!(report.contains("tokens_per_second=75\n"));
}

#[test]
fn analyze_latents_reports_mse_mi_and_packing() {
    let dir = tempfile::tempdir().unwrap();
    let latents = dir.path().join("z.csv");
    let table = dir.path().join("pairs.csv");
    let rows: Vec<String> = q2d2::analytics::uniform_latents(5, 2000, 4)
        .iter()
        .map(|z| z.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
        .collect();
    std::fs::write(&latents, rows.join("\n")).unwrap();
    let text = stdout(&q2d2(&[
        "analyze",
        "--latents",
        p(&latents),
        "--kinds",
        "hex,rect",
        "--levels",
        "7,7,7,7",
        "--packing-samples",
        "20000",
        "--csv",
        p(&table),
    ]));
    assert!(text.contains("frames=2000\n"));
    assert!(text.contains("mse_latent="));
    assert!(text.contains("mi_units=bits\n"));
    let csv = std::fs::read_to_string(table).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("0,hex,7,7,49,"));
}

#[test]
fn sweep_is_a_three_row_table_and_deterministic() {
    let args = ["sweep", "--kinds", "rect,hex,rhombic", "--levels", "7", "--frames", "20000"];
    let a = stdout(&q2d2(&args));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].contains("mse_latent") && lines[0].contains("pair_utilization"));
    assert!(lines[1].starts_with("rect,"));
    assert!(lines[3].starts_with("rhombic,"));
    assert_eq!(a, stdout(&q2d2(&args)));

    let seeded = Command::new(env!("CARGO_BIN_EXE_q2d2")).args(args).env("Q2D2_SEED", "99").output().unwrap();
    assert_ne!(a, stdout(&seeded));
    assert_eq!(stdout(&seeded), stdout(&q2d2(&[&args[..], &["--seed", "99"]].concat())));
}

#[test]
fn sweep_matched_adds_rectangle_rows() {
    let text = stdout(&q2d2(&["sweep", "--kinds", "rhombic", "--levels", "7", "--frames", "5000", "--matched"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("rect-matched-rhombic,rect rect rect,7 14 7 14 7 14,98 98 98,"));
}

#[test]
fn train_toy_writes_curve_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("loss.csv");
    let summary = stdout(&q2d2(&["train-toy", "--steps", "200", "--frames", "1000", "--loss-csv", p(&curve)]));
    assert!(summary.contains("final_loss="));
    assert!(summary.contains("pair_utilization="));
    let csv = std::fs::read_to_string(&curve).unwrap();
    assert_eq!(csv.lines().next(), Some("step,loss"));
    assert_eq!(csv.lines().count(), 1 + 3);

    let again = dir.path().join("loss2.csv");
    stdout(&q2d2(&["train-toy", "--steps", "200", "--frames", "1000", "--loss-csv", p(&again)]));
    assert_eq!(std::fs::read(curve).unwrap(), std::fs::read(again).unwrap());
}

#[test]
fn bench_reports_throughput() {
    let text = stdout(&q2d2(&["bench", "--frames", "2000", "--repeats", "1", "--kinds", "hex"]));
    assert!(text.starts_with("kind,mode,frames,seconds,frames_per_second\n"));
    assert!(text.contains("hex,sequential,2000,"));
    assert!(text.contains("hex,batch,2000,"));
}

#[test]
fn usage_errors_exit_2_and_other_errors_exit_1() {
    assert_eq!(q2d2(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(q2d2(&["grid", "build", "--kind", "triangle", "--levels", "3"]).status.code(), Some(2));
    assert_eq!(q2d2(&["analyze"]).status.code(), Some(2));

    let bad_hex = q2d2(&["grid", "build", "--kind", "hex", "--levels", "7,5"]);
    assert_eq!(bad_hex.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_hex.stderr).starts_with("error:"));

    let dir = tempfile::tempdir().unwrap();
    let latents = dir.path().join("z.csv");
    std::fs::write(&latents, "0,0\n1.5,0\n").unwrap();
    let out = q2d2(&[
        "quantize",
        "--kinds",
        "rect",
        "--levels",
        "3,3",
        "--latents",
        p(&latents),
        "-o",
        p(&dir.path().join("t")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));

    let garbage = dir.path().join("g.q2d2");
    std::fs::write(&garbage, b"NOPE").unwrap();
    assert_eq!(q2d2(&["dequantize", "-i", p(&garbage)]).status.code(), Some(1));
}

#[test]
fn raw_latents_with_tanh() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("z.f32");
    let tokens = dir.path().join("t.q2d2");
    let bytes: Vec<u8> = [1.5f32, -3.0, 0.0, 0.2].iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(&raw, bytes).unwrap();
    let base = ["quantize", "--kinds", "rect", "--levels", "7,7", "--raw", "--latents", p(&raw), "-o", p(&tokens)];
    assert_eq!(q2d2(&base).status.code(), Some(1));
    stdout(&q2d2(&[&base[..], &["--apply-tanh"]].concat()));
    let text = stdout(&q2d2(&["dequantize", "-i", p(&tokens), "--unbound"]));
    assert_eq!(text.lines().count(), 3);
}
