use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use latnet_lbm::dataset::load_dataset;
use latnet_lbm::snapshot::Snapshot;
use tempfile::TempDir;

fn latnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latnet"))
        .args(args)
        .env_remove("LATNET_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ok(args: &[&str]) -> String {
    let out = latnet(args);
    assert_eq!(
        code(&out),
        0,
        "{args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL_DATA: &[&str] = &[
    "--runs", "2", "--size", "32", "--objects", "1", "--min-size", "4", "--max-size", "8", "--frames", "6",
    "--interval", "20", "--seed", "3",
];

const TINY_MODEL: &[&str] = &[
    "--down-blocks", "1", "--base-filters", "4", "--comp-blocks", "1", "--batch-size", "2",
];

fn small_dataset(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    let mut args = vec!["generate", "--out", p(&data)];
    args.extend_from_slice(SMALL_DATA);
    ok(&args);
    data
}

fn train(data: &Path, out: &Path, steps: &str, resume: Option<&Path>) -> String {
    let mut args = vec!["train", "--data", p(data), "--out", p(out), "--max-steps", steps];
    args.extend_from_slice(TINY_MODEL);
    if let Some(r) = resume {
        args.extend_from_slice(&["--resume", p(r)]);
    }
    ok(&args)
}

#[test]
fn generate_writes_a_loadable_dataset() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(dir.path());
    let ds = load_dataset(&data).unwrap();
    assert_eq!(ds.runs.len(), 2);
    assert_eq!(ds.runs[0].frames.len(), 6);
    assert_eq!((ds.config.nx, ds.config.ny), (32, 32));

    let empty = dir.path().join("empty");
    let out = latnet(&["generate", "--out", p(&empty), "--runs", "0", "--size", "32"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty dataset"));
    assert!(load_dataset(&empty).unwrap().runs.is_empty());
}

#[test]
fn unwritable_output_is_a_user_error() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = latnet(&["generate", "--out", p(&blocker.join("data")), "--runs", "1", "--size", "16", "--frames", "2"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes_follow_the_error_class() {
    assert_eq!(code(&latnet(&["--help"])), 0);
    assert_eq!(code(&latnet(&["generate", "--no-such-flag"])), 1);
    assert_eq!(code(&latnet(&["train"])), 1);
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.lnck");
    let out = latnet(&["rollout", "--checkpoint", p(&missing), "--out", p(dir.path())]);
    assert_eq!(code(&out), 1);

    let garbage = dir.path().join("garbage.lnck");
    fs::write(&garbage, b"LNCKnot really").unwrap();
    let out = latnet(&["rollout", "--checkpoint", p(&garbage), "--out", p(dir.path())]);
    assert_eq!(code(&out), 1);

    // An inlet this fast at nearly zero viscosity blows up every scene.
    let out = latnet(&[
        "generate", "--out", p(&dir.path().join("bad")), "--runs", "1", "--size", "16", "--objects", "1",
        "--min-size", "2", "--max-size", "4", "--tau", "0.501", "--inlet", "0.4", "--warmup", "3000",
        "--frames", "2",
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));

    assert_eq!(code(&latnet(&["--threads", "0", "bench", "--inject-seconds", "1"])), 1);
}

#[test]
fn training_resumes_with_continuous_step_numbers() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(dir.path());

    let zero = dir.path().join("zero");
    train(&data, &zero, "0", None);
    assert!(zero.join("checkpoint.lnck").exists());
    assert_eq!(fs::read_to_string(zero.join("loss.csv")).unwrap().lines().count(), 1);

    let run = dir.path().join("run");
    train(&data, &run, "2", None);
    let ck = run.join("checkpoint.lnck");
    train(&data, &run, "4", Some(&ck));
    let csv = fs::read_to_string(run.join("loss.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step,total_loss,mse,gdl,wall_seconds");
    let steps: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["0", "1", "2", "3"]);

    // One uninterrupted run follows the same trajectory.
    let straight = dir.path().join("straight");
    train(&data, &straight, "4", None);
    let losses = |csv: &str| -> Vec<String> {
        csv.lines().skip(1).map(|l| l.split(',').take(4).collect::<Vec<_>>().join(",")).collect()
    };
    assert_eq!(losses(&csv), losses(&fs::read_to_string(straight.join("loss.csv")).unwrap()));
}

#[test]
fn rollout_patch_matches_the_full_frame() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(dir.path());
    let run = dir.path().join("run");
    train(&data, &run, "1", None);
    let ck = run.join("checkpoint.lnck");

    let full = dir.path().join("full");
    ok(&["rollout", "--checkpoint", p(&ck), "--data", p(&data), "--run", "1", "--steps", "32", "--out", p(&full)]);
    for t in 1..=32 {
        assert!(full.join(format!("frame_{t:04}.lblt")).exists());
    }
    assert!(!full.join("frame_0033.lblt").exists());
    let mask = Snapshot::read(full.join("mask.lblt")).unwrap().to_mask().unwrap();
    assert_eq!(mask, load_dataset(&data).unwrap().runs[1].mask);

    let part = dir.path().join("part");
    ok(&[
        "rollout", "--checkpoint", p(&ck), "--data", p(&data), "--run", "1", "--steps", "3", "--out", p(&part),
        "--patch", "5,7,12,9",
    ]);
    for t in 1..=3 {
        let name = format!("frame_{t:04}.lblt");
        let whole = Snapshot::read(full.join(&name)).unwrap();
        let patch = Snapshot::read(part.join(&name)).unwrap();
        assert_eq!(patch.dims, vec![7, 2, 9]);
        let ny = whole.dims[1] as usize;
        for (i, x) in (5..12).enumerate() {
            for (j, y) in (7..9).enumerate() {
                for c in 0..9 {
                    let a = patch.values[(i * 2 + j) * 9 + c];
                    let b = whole.values[(x * ny + y) * 9 + c];
                    assert!((a - b).abs() <= 1e-6, "t {t} ({x},{y},{c}): {a} vs {b}");
                }
            }
        }
    }

    let out = latnet(&["rollout", "--checkpoint", p(&ck), "--size", "31", "--objects", "1", "--min-size", "2", "--max-size", "4", "--out", p(&dir.path().join("odd"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("multiples of"));
}

#[test]
fn self_check_scores_zero() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(dir.path());
    let out = dir.path().join("eval");
    ok(&["eval", "--self-check", "--data", p(&data), "--horizon", "5", "--out", p(&out)]);
    let runs = fs::read_to_string(out.join("eval_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 5);
    for line in runs.lines().skip(1) {
        let mse: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(mse, 0.0);
    }
    let agg = fs::read_to_string(out.join("eval_aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 5);

    let out = latnet(&["eval", "--self-check", "--data", p(&data), "--horizon", "6", "--out", p(&dir.path().join("e"))]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bench_reports_injected_throughput() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bench.csv");
    let stdout = ok(&[
        "bench", "--inject-seconds", "0.0231", "--dims", "160x160x160", "--steps-equivalent", "60", "--out", p(&csv),
    ]);
    assert_eq!(stdout, fs::read_to_string(&csv).unwrap());
    let row: Vec<&str> = stdout.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..4], ["injected", "160x160x160", "4096000", "60"]);
    let mlups: f64 = row[5].parse().unwrap();
    assert!((mlups - 10_638.96).abs() < 0.01, "{mlups}");

    let stdout = ok(&["bench", "--size", "32", "--steps", "2", "--warmup", "0", "--no-surrogate"]);
    assert!(stdout.lines().nth(1).unwrap().starts_with("solver,32x32,1024,2,"));
    assert_eq!(code(&latnet(&["bench", "--size", "32", "--reps", "4"])), 1);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("latnet.cfg");
    fs::write(&cfg, "runs=1\nsize=16\nframes=3\ninterval=5\nobjects=1\nmin-size=2\nmax-size=4\n").unwrap();
    let a = dir.path().join("a");
    ok(&["--config", p(&cfg), "generate", "--out", p(&a)]);
    let ds = load_dataset(&a).unwrap();
    assert_eq!((ds.runs.len(), ds.config.nx, ds.runs[0].frames.len()), (1, 16, 3));

    let b = dir.path().join("b");
    ok(&["--config", p(&cfg), "generate", "--out", p(&b), "--frames", "2", "--nx", "24"]);
    let ds = load_dataset(&b).unwrap();
    assert_eq!((ds.config.nx, ds.config.ny, ds.runs[0].frames.len()), (24, 16, 2));

    fs::write(&cfg, "frames=many\n").unwrap();
    let out = latnet(&["--config", p(&cfg), "generate", "--out", p(&dir.path().join("c"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("frames"));
}
