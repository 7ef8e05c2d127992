mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use choreo::model::Checkpoint;
use choreo::numerics::io::load_tensor;
use choreo::signal::{write_wav_pcm16, AudioClip};
use choreo::skeleton::{read_coordinate_csv, write_coordinate_csv, JointFrame};

fn choreo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_choreo")).args(args).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes `frames` of periodic motion and matching clicks as clip `name`.
fn write_clip(dir: &Path, name: &str, frames: usize, period: f64) -> (PathBuf, PathBuf) {
    let pose = dir.join(format!("{name}.csv"));
    common::write_pose_csv(&pose, &common::periodic_joints(frames, period));
    let wav = dir.join(format!("{name}.wav"));
    let mut audio = common::click_track(frames, period);
    audio
        .samples
        .truncate((frames as f64 / common::FPS * common::SAMPLE_RATE as f64) as usize);
    write_wav_pcm16(&wav, &audio).unwrap();
    (pose, wav)
}

fn write_manifest(dir: &Path, clips: &[(&str, &str, &str)]) -> PathBuf {
    let entries: Vec<serde_json::Value> = clips
        .iter()
        .map(|(n, sk, au)| serde_json::json!({"name": n, "skeleton": sk, "audio": au}))
        .collect();
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::json!({ "clips": entries }).to_string()).unwrap();
    path
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

struct Trained {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Trained {
    fn data(&self) -> PathBuf {
        self.root.join("data")
    }

    fn run_dir(&self) -> PathBuf {
        self.root.join("run")
    }
}

fn trained() -> Trained {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    write_clip(&root, "a", 60, 15.0);
    let manifest = write_manifest(&root, &[("a", "a.csv", "a.wav")]);
    let data = root.join("data");
    ok(&choreo(&["prepare", "--manifest", s(&manifest), "--out", s(&data)]));
    let run = root.join("run");
    let out = ok(&choreo(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&run),
        "--encoder-channels",
        "8",
        "--decoder-channels",
        "4",
        "--window",
        "16",
        "--batch",
        "2",
        "--steps",
        "3",
        "--checkpoint-interval",
        "2",
        "--log-every",
        "1",
        "--seed",
        "4",
    ]));
    for step in 1..=3 {
        assert!(out.contains(&format!("step {step} total ")), "{out}");
    }
    Trained { _tmp: tmp, root }
}

#[test]
fn help_lists_flags() {
    let out = ok(&choreo(&["train", "--help"]));
    for flag in [
        "--data",
        "--out",
        "--resume",
        "--window",
        "--batch",
        "--lr",
        "--limb-weight",
        "--steps",
        "--checkpoint-interval",
        "--fps",
        "--sample-rate",
        "--seed",
    ] {
        assert!(out.contains(flag), "missing {flag}");
    }
    let top = ok(&choreo(&["--help"]));
    for cmd in ["prepare", "train", "generate", "analyze", "render"] {
        assert!(top.contains(cmd));
    }
}

#[test]
fn prepare_aligns_isolates_failures_and_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    write_clip(root, "good", 300, 30.0);
    let manifest = write_manifest(
        root,
        &[("good", "good.csv", "good.wav"), ("bad", "good.csv", "missing.wav")],
    );
    let out_dir = root.join("data");
    let first = choreo(&["prepare", "--manifest", s(&manifest), "--out", s(&out_dir)]);
    assert_eq!(first.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert!(
        stdout.contains("good: skeleton 300 frames, mel 300 frames, kept 300"),
        "{stdout}"
    );
    assert!(String::from_utf8_lossy(&first.stderr).contains("bad: failed"));

    let skel = load_tensor(out_dir.join("good.skeleton.l2d")).unwrap();
    let mel = load_tensor(out_dir.join("good.mel.l2d")).unwrap();
    assert_eq!(skel.shape(), (44, 300));
    assert_eq!(mel.shape(), (80, 300));

    let before = dir_bytes(&out_dir);
    let second = choreo(&["prepare", "--manifest", s(&manifest), "--out", s(&out_dir)]);
    assert_eq!(second.status.code(), Some(1));
    assert_eq!(before, dir_bytes(&out_dir));
}

#[test]
fn prepare_reads_keypoint_json_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let poses = root.join("poses");
    fs::create_dir(&poses).unwrap();
    // BODY_25 order: 0 nose, 1 neck, 2-4 right arm, 5-7 left arm, 8 mid hip,
    // 9-11 right leg, 12-14 left leg
    for (t, frame) in common::periodic_joints(45, 15.0).iter().enumerate() {
        let mut kp = vec![0.0f64; 75];
        let src = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14];
        for (j, &k) in src.iter().enumerate() {
            kp[3 * k] = frame.joints[j].x;
            kp[3 * k + 1] = frame.joints[j].y;
            kp[3 * k + 2] = 0.8;
        }
        let doc = serde_json::json!({"people": [{"pose_keypoints_2d": kp}]});
        fs::write(poses.join(format!("clip_{t:012}_keypoints.json")), doc.to_string()).unwrap();
    }
    let (_, wav) = write_clip(root, "music", 45, 15.0);
    let manifest = write_manifest(root, &[("json", "poses", wav.file_name().unwrap().to_str().unwrap())]);
    let out = ok(&choreo(&[
        "prepare",
        "--manifest",
        s(&manifest),
        "--out",
        s(&root.join("data")),
    ]));
    assert!(out.contains("json: skeleton 45 frames"), "{out}");
}

#[test]
fn train_resume_generate_analyze_render() {
    let t = trained();
    let run = t.run_dir();
    for f in [
        "final.l2dc",
        "final.json",
        "step-000002.l2dc",
        "step-000002.json",
        "loss.csv",
    ] {
        assert!(run.join(f).exists(), "{f}");
    }

    let resumed = ok(&choreo(&[
        "train",
        "--data",
        s(&t.data()),
        "--out",
        s(&run),
        "--resume",
        s(&run.join("step-000002.l2dc")),
        "--steps",
        "4",
        "--log-every",
        "1",
    ]));
    assert!(
        resumed.contains("step 3 total") && resumed.contains("step 4 total"),
        "{resumed}"
    );
    assert!(!resumed.contains("step 2 total"));
    let log = fs::read_to_string(run.join("loss.csv")).unwrap();
    assert_eq!(log.lines().next().unwrap(), "step,total,l1,limb");
    assert_eq!(log.lines().count(), 5);

    // 16 s of audio at 30 fps
    let wav = t.root.join("song.wav");
    let mut clip = common::click_track(480, 20.0);
    clip.samples.truncate(16 * common::SAMPLE_RATE as usize);
    write_wav_pcm16(&wav, &clip).unwrap();
    let ckpt_path = run.join("final.l2dc");
    let gen_a = t.root.join("gen_a.l2d");
    let gen_b = t.root.join("gen_b.l2d");
    for out in [&gen_a, &gen_b] {
        ok(&choreo(&[
            "generate",
            "--checkpoint",
            s(&ckpt_path),
            "--audio",
            s(&wav),
            "--out",
            s(out),
        ]));
    }
    let a = load_tensor(&gen_a).unwrap();
    assert_eq!(a.shape(), (44, 480));
    assert_eq!(fs::read(&gen_a).unwrap(), fs::read(&gen_b).unwrap());
    assert_eq!(
        fs::read(gen_a.with_extension("csv")).unwrap(),
        fs::read(gen_b.with_extension("csv")).unwrap()
    );
    let ckpt = Checkpoint::load(&ckpt_path).unwrap();
    assert_eq!(a.column(0), ckpt.mean_seed_pose);
    let coords = read_coordinate_csv(gen_a.with_extension("csv")).unwrap();
    assert_eq!(coords.len(), 480);

    // explicit seed pose and the reference loop
    let seed_path = t.root.join("seed.json");
    let seed: Vec<f32> = (0..44).map(|i| 0.3 + 0.005 * i as f32).collect();
    fs::write(&seed_path, serde_json::to_string(&seed).unwrap()).unwrap();
    let short_wav = t.root.join("short.wav");
    let mut short = common::click_track(40, 20.0);
    short.samples.truncate(common::SAMPLE_RATE as usize);
    write_wav_pcm16(&short_wav, &short).unwrap();
    let fast = t.root.join("fast.l2d");
    let naive = t.root.join("naive.l2d");
    ok(&choreo(&[
        "generate",
        "--checkpoint",
        s(&ckpt_path),
        "--audio",
        s(&short_wav),
        "--out",
        s(&fast),
        "--seed-pose",
        s(&seed_path),
    ]));
    ok(&choreo(&[
        "generate",
        "--checkpoint",
        s(&ckpt_path),
        "--audio",
        s(&short_wav),
        "--out",
        s(&naive),
        "--seed-pose",
        s(&seed_path),
        "--naive",
    ]));
    assert_eq!(fs::read(&fast).unwrap(), fs::read(&naive).unwrap());
    assert_eq!(load_tensor(&fast).unwrap().column(0), seed);

    let report = t.root.join("report.json");
    let plot = t.root.join("report.svg");
    ok(&choreo(&[
        "analyze",
        "--motion",
        s(&gen_a),
        "--bpm",
        "90",
        "--out",
        s(&report),
        "--plot",
        s(&plot),
    ]));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for key in ["frames", "max_lag", "beat_period", "beat_grid", "x", "y", "tolerance"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["beat_period"], 20.0);
    assert!(fs::read_to_string(&plot).unwrap().starts_with("<svg"));

    let frames_dir = t.root.join("frames");
    ok(&choreo(&[
        "render",
        "--motion",
        s(&gen_a.with_extension("csv")),
        "--out",
        s(&frames_dir),
    ]));
    assert_eq!(fs::read_dir(&frames_dir).unwrap().count(), 480);
}

#[test]
fn analyze_periodic_fixture_and_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("motion.csv");
    write_coordinate_csv(&csv, &common::periodic_joints(300, 30.0)).unwrap();
    let report = tmp.path().join("r.json");
    let out = ok(&choreo(&[
        "analyze",
        "--motion",
        s(&csv),
        "--bpm",
        "60",
        "--out",
        s(&report),
    ]));
    assert!(out.contains("Y: Matched"), "{out}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["y"]["alignment"]["verdict"], "matched");
    assert_eq!(json["y"]["peak_lags"][0], 30);

    let beats = tmp.path().join("beats.txt");
    fs::write(&beats, "0\n30\n60\n90\n120\n").unwrap();
    ok(&choreo(&[
        "analyze",
        "--motion",
        s(&csv),
        "--beats",
        s(&beats),
        "--out",
        s(&report),
    ]));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["beat_grid"]["source"], "explicit");

    let missing = choreo(&["analyze", "--motion", s(&csv), "--out", s(&report)]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_file = choreo(&[
        "analyze",
        "--motion",
        s(&tmp.path().join("nope.csv")),
        "--bpm",
        "60",
        "--out",
        s(&report),
    ]);
    assert_eq!(bad_file.status.code(), Some(1));
}

#[test]
fn render_svg_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("motion.csv");
    let mut frames = common::periodic_joints(5, 10.0);
    frames.push(JointFrame::from_coords(&[(7.0, 7.0); 15]));
    write_coordinate_csv(&csv, &frames).unwrap();
    let out = tmp.path().join("svg");
    ok(&choreo(&["render", "--motion", s(&csv), "--out", s(&out)]));
    let files = dir_bytes(&out);
    assert_eq!(files.len(), 6);
    for (_, bytes) in &files {
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text.matches("<line").count(), 14);
        assert_eq!(text.matches("<circle").count(), 15);
    }

    let only_degenerate = tmp.path().join("still.csv");
    write_coordinate_csv(&only_degenerate, &[JointFrame::from_coords(&[(1.0, 2.0); 15])]).unwrap();
    ok(&choreo(&[
        "render",
        "--motion",
        s(&only_degenerate),
        "--out",
        s(&tmp.path().join("still")),
    ]));

    let seg = tmp.path().join("seg");
    ok(&choreo(&[
        "render",
        "--motion",
        s(&csv),
        "--out",
        s(&seg),
        "--format",
        "csv",
    ]));
    let text = fs::read_to_string(seg.join("segments.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 6 * 14);

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "1,2,3\n").unwrap();
    assert_eq!(
        choreo(&["render", "--motion", s(&bad), "--out", s(&seg)]).status.code(),
        Some(1)
    );
}

#[test]
fn generate_rejects_bad_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let ckpt = tmp.path().join("x.l2dc");
    fs::write(&ckpt, b"nope").unwrap();
    let wav = tmp.path().join("a.wav");
    write_wav_pcm16(&wav, &AudioClip::new(vec![0.0; 22050], 22050).unwrap()).unwrap();
    let out = choreo(&[
        "generate",
        "--checkpoint",
        s(&ckpt),
        "--audio",
        s(&wav),
        "--out",
        s(&tmp.path().join("g.l2d")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
