use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_egostereo"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth_sequence(dir: &Path) -> PathBuf {
    let traj = dir.join("short.traj");
    fs::write(&traj, "frames = 4\nstart = 0 0 0\nstep = 0 0 0.15\n").unwrap();
    let seq = dir.join("seq");
    ok(bin()
        .args(["synth", "--seed", "3", "--image-noise", "2", "--out"])
        .arg(&seq)
        .arg("--scene")
        .arg(data("dolly.scene"))
        .arg("--trajectory")
        .arg(&traj)
        .output()
        .unwrap());
    seq
}

fn disk_config(dir: &Path, seq: &Path) -> PathBuf {
    let cfg = dir.join("disk.kv");
    fs::write(
        &cfg,
        format!(
            "source = kitti\nkitti.left_dir = {0}/image_0\nkitti.right_dir = {0}/image_1\n\
             kitti.calib = {0}/calib.txt\nkitti.poses = {0}/poses_reported.txt\nkitti.gt_dir = {0}/disp_gt\n\
             max_disparity = 64\noutput.error_maps = true\n",
            seq.display()
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn synth_run_eval_render() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = synth_sequence(tmp.path());
    for sub in ["image_0", "image_1", "disp_gt"] {
        assert_eq!(fs::read_dir(seq.join(sub)).unwrap().count(), 4, "{sub}");
    }
    let cfg = disk_config(tmp.path(), &seq);
    let out = tmp.path().join("out");
    let summary = ok(bin().arg("run").arg("-c").arg(&cfg).arg("-o").arg(&out).output().unwrap());
    assert!(summary.contains("frames=4"), "{summary}");
    assert!(summary.contains("gt_frames=4"), "{summary}");
    for sub in ["disparity", "interpolated", "errors"] {
        assert_eq!(fs::read_dir(out.join(sub)).unwrap().count(), 4, "{sub}");
    }
    assert_eq!(fs::read_to_string(out.join("summary.txt")).unwrap(), summary);
    assert_eq!(fs::read_to_string(out.join("frames.txt")).unwrap().lines().count(), 4);

    let eval_out = ok(bin()
        .arg("eval")
        .arg("--estimated")
        .arg(out.join("disparity"))
        .arg("--ground-truth")
        .arg(seq.join("disp_gt"))
        .output()
        .unwrap());
    assert!(eval_out.contains("files=4") && eval_out.contains("mean_bad_or_rate="), "{eval_out}");
    assert_eq!(eval_out.lines().filter(|l| l.starts_with("file=")).count(), 4);

    let errors = tmp.path().join("errors");
    ok(bin()
        .args(["render-errors", "--mode", "and", "--estimated"])
        .arg(out.join("disparity"))
        .arg("--ground-truth")
        .arg(seq.join("disp_gt"))
        .arg("-o")
        .arg(&errors)
        .output()
        .unwrap());
    assert_eq!(fs::read_dir(&errors).unwrap().count(), 4);
}

#[test]
fn overrides_and_baseline_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = synth_sequence(tmp.path());
    let cfg = disk_config(tmp.path(), &seq);
    let run = |extra: &[&str]| {
        ok(bin()
            .arg("run")
            .arg("-c")
            .arg(&cfg)
            .arg("-o")
            .arg(tmp.path().join("o"))
            .args(extra)
            .output()
            .unwrap())
    };
    let base = run(&["--baseline-sgm"]);
    assert!(base.contains("baseline_sgm=true") && base.contains("mean_search_fraction=1.000000"), "{base}");
    let and = run(&["--set", "metric.mode=and", "--set", "sgm.p2=120"]);
    assert!(and.contains("metric_mode=and"), "{and}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = data("dolly.kv");
    let mut trees = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        ok(bin()
            .arg("run")
            .arg("-c")
            .arg(&cfg)
            .arg("-o")
            .arg(&out)
            .args(["--set", "synth.image_noise=5", "--set", "synth.rotation_noise_deg=0.1"])
            .output()
            .unwrap());
        let mut files = Vec::new();
        for sub in ["disparity", "interpolated"] {
            let mut names: Vec<_> = fs::read_dir(out.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
            names.sort();
            files.extend(names.into_iter().map(|p| fs::read(p).unwrap()));
        }
        files.push(fs::read(out.join("frames.txt")).unwrap());
        files.push(fs::read(out.join("summary.txt")).unwrap());
        trees.push(files);
    }
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn errors_exit_nonzero_with_a_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = bin().args(["run", "-c", "/nonexistent/cfg.kv", "-o"]).arg(tmp.path()).output().unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error:"));

    let bad = tmp.path().join("bad.kv");
    fs::write(&bad, "source = synthetic\nsgm.p9 = 3\n").unwrap();
    let out = bin().arg("run").arg("-c").arg(&bad).arg("-o").arg(tmp.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sgm.p9"));

    let unpaired = bin()
        .arg("eval")
        .arg("--estimated")
        .arg(tmp.path())
        .arg("--ground-truth")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(!unpaired.status.success());
}
