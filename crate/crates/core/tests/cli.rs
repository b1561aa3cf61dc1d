mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::bin;
use perceptkit::harness::synth::{synth_image, SynthVideo};
use perceptkit::harness::video::write_synth_video;
use perceptkit::harness::ImageFormatKind;
use perceptkit::pdq::hash_file;

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_images(dir: &Path, n: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        let bytes = ImageFormatKind::Png.encode(&synth_image(i, 80, 60)).unwrap();
        std::fs::write(dir.join(format!("img{i}.png")), bytes).unwrap();
    }
}

#[test]
fn hash_and_compare_images() {
    let dir = tempfile::tempdir().unwrap();
    write_images(dir.path(), 2);
    let img = dir.path().join("img0.png");
    let out = stdout(&run(&["hash-image", p(&img)]));
    let h = hash_file(&img).unwrap();
    assert_eq!(out.trim(), format!("{} {}", h.bits.to_hex(), h.quality));

    let hex = h.bits.to_hex();
    assert_eq!(stdout(&run(&["compare-hashes", &hex, &hex])).trim(), "0 MATCH");
    let other = hash_file(dir.path().join("img1.png")).unwrap().bits.to_hex();
    let out = stdout(&run(&["compare-hashes", &hex, &other, "--threshold", "0"]));
    assert!(out.trim().ends_with(" NO MATCH"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"junk").unwrap();
    let code = |o: Output| o.status.code().unwrap();
    assert_eq!(code(run(&["no-such-command"])), 2);
    assert_eq!(code(run(&["compare-hashes", "00", "11"])), 2);
    assert_eq!(code(run(&["compare-hashes", &"0".repeat(64), &"0".repeat(64), "--threshold", "300"])), 2);
    assert_eq!(code(run(&["hash-image", "/nonexistent/file.png"])), 3);
    assert_eq!(code(run(&["hash-image", p(&junk)])), 4);
    assert_eq!(code(run(&["compare-videos", p(&junk), p(&junk)])), 4);
    assert_eq!(code(run(&["index", "query", p(&junk), &"0".repeat(64)])), 4);
    assert_eq!(code(run(&["hash-video", p(&junk), "--decode", "exit 7"])), 5);
    let o = run(&["hash-image", p(&junk)]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("decode"));
}

#[test]
fn video_signatures_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.rfv");
    let b = dir.path().join("b.rfv");
    write_synth_video(&SynthVideo::new(1, 32, 24, 15.0, 6.0), &a).unwrap();
    write_synth_video(&SynthVideo::new(2, 32, 24, 15.0, 6.0), &b).unwrap();
    let sa = dir.path().join("a.tmk");
    assert_eq!(stdout(&run(&["hash-video", p(&a), "-o", p(&sa)])).trim(), p(&sa));
    assert_eq!(std::fs::metadata(&sa).unwrap().len(), 263_232);
    stdout(&run(&["hash-video", p(&b)]));
    let sb = dir.path().join("b.rfv.tmk");
    assert!(sb.is_file());

    let out = stdout(&run(&["compare-videos", p(&sa), p(&sa)]));
    let f: Vec<&str> = out.split_whitespace().collect();
    assert!((f[0].parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
    assert!((f[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(f[2], "MATCH");

    let out = stdout(&run(&["compare-videos", p(&sa), p(&sb), "--force"]));
    let f: Vec<&str> = out.split_whitespace().collect();
    assert!(f[1].parse::<f64>().is_ok(), "{out}");
    assert!(out.trim().ends_with("NO MATCH"));
    let out = stdout(&run(&["compare-videos", p(&sa), p(&sb), "--t1", "1", "--t2", "0"]));
    if !out.starts_with("1 ") {
        assert!(out.contains(" - NO MATCH"), "{out}");
    }

    // a decode template that just cats the raw file gives the same signature
    let sc = dir.path().join("c.tmk");
    stdout(&run(&["hash-video", p(&a), "-o", p(&sc), "--decode", "cat {input}"]));
    assert_eq!(std::fs::read(&sa).unwrap(), std::fs::read(&sc).unwrap());
}

#[test]
fn index_query_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let imgs = dir.path().join("imgs");
    write_images(&imgs, 12);
    let idx = dir.path().join("x.mih");
    assert_eq!(stdout(&run(&["index", "build", p(&idx), "--images", p(&imgs)])).trim(), "12 entries");
    let h = hash_file(imgs.join("img3.png")).unwrap().bits.to_hex();
    let id = stdout(&run(&["index", "insert", p(&idx), &h, "dup"]));
    assert_eq!(id.trim(), "12");
    for radius in ["0", "30", "128", "256"] {
        let fast = stdout(&run(&["index", "query", p(&idx), &h, "--radius", radius]));
        let slow = stdout(&run(&["index", "query", p(&idx), &h, "--radius", radius, "--oracle"]));
        assert_eq!(fast, slow, "radius {radius}");
    }
    let lines = stdout(&run(&["index", "query", p(&idx), &h, "--radius", "0"]));
    assert!(lines.contains("0 img3.png") && lines.contains("12 0 dup"), "{lines}");

    let list = dir.path().join("hashes.txt");
    std::fs::write(&list, format!("# comment\n{h} first\n\n{h}\n")).unwrap();
    let idx2 = dir.path().join("y.mih");
    assert_eq!(stdout(&run(&["index", "build", p(&idx2), "--hashes", p(&list)])).trim(), "2 entries");
    std::fs::write(&list, "nothex\n").unwrap();
    assert_eq!(run(&["index", "build", p(&idx2), "--hashes", p(&list)]).status.code(), Some(4));
}

#[test]
fn harness_and_bench_commands() {
    let dir = tempfile::tempdir().unwrap();
    let imgs = dir.path().join("imgs");
    stdout(&run(&["harness", "synth-images", "--out", p(&imgs), "--count", "3", "--width", "120", "--height", "90", "--seed", "5"]));
    let out1 = dir.path().join("r1");
    let out2 = dir.path().join("r2");
    stdout(&run(&["harness", "run-images", p(&imgs), "--out", p(&out1), "--seed", "7"]));
    stdout(&run(&["harness", "run-images", p(&imgs), "--out", p(&out2), "--seed", "7"]));
    for f in ["rows.csv", "summary.csv"] {
        assert_eq!(std::fs::read(out1.join(f)).unwrap(), std::fs::read(out2.join(f)).unwrap(), "{f}");
    }
    assert!(out1.join("timings.csv").is_file());

    let vids = dir.path().join("vids");
    stdout(&run(&[
        "harness", "synth-videos", "--out", p(&vids), "--count", "1", "--duration", "12", "--width", "32", "--height", "24",
    ]));
    let cfg = dir.path().join("h.toml");
    std::fs::write(&cfg, "seed = 3\nworkers = 1\n").unwrap();
    let vout = dir.path().join("v");
    stdout(&run(&["harness", "run-videos", p(&vids), "--out", p(&vout), "--config", p(&cfg)]));
    let rows = std::fs::read_to_string(vout.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 9, "{rows}");
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(run(&["harness", "run-videos", p(&vids), "--out", p(&vout), "--config", p(&cfg)]).status.code(), Some(2));

    let t = stdout(&run(&["bench", "time", p(&imgs), "--out", p(&dir.path().join("t.csv"))]));
    assert!(t.contains("pdq p50") && t.contains("md5 p50"));
    let e = stdout(&run(&["bench", "entropy", p(&imgs), "--out", p(&dir.path().join("e.csv"))]));
    assert!(e.starts_with("hashes 3"));
    assert_eq!(std::fs::read_to_string(dir.path().join("e.csv")).unwrap().lines().count(), 257);
}

#[test]
fn help_lists_commands() {
    let help = stdout(&run(&["--help"]));
    for c in ["hash-image", "hash-video", "compare-hashes", "compare-videos", "index", "harness", "bench", "serve"] {
        assert!(help.contains(c), "{c}");
    }
}
