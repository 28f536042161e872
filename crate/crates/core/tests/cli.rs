use std::path::Path;
use std::process::Command;

use modclass::harness::{QUANTITY_HEADER, RESULT_HEADER};

const SMALL: &str = "\
experiment.trials = 10
experiment.snr_grid = 0, 10
svm.training_per_class = 20
";

fn modclass(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_modclass"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn successful_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", SMALL);
    let out = dir.path().join("out.csv");
    let o = modclass(&[
        "run",
        "--preset",
        "fig5",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(&format!("{RESULT_HEADER}\n")));
    assert!(text.ends_with('\n'));
    // two classifiers at two SNRs
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 9));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", SMALL);
    let mut outputs = Vec::new();
    for threads in ["1", "2"] {
        let out = dir.path().join(format!("out{threads}.csv"));
        let o = modclass(&[
            "run",
            "--preset",
            "fig3",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn crb_preset_uses_quantity_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "crb.cfg",
        "experiment.snr_grid = 10\nmc.n_channels = 5\nmc.n_mc = 100\n",
    );
    let out = dir.path().join("crb.csv");
    let o = modclass(&[
        "run",
        "--preset",
        "fig6",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], QUANTITY_HEADER);
    let names: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(names, ["crb_da", "crb_blind", "mse_ls", "mse_jade"]);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let out = out.to_str().unwrap();
    let cases = [
        ("unknown.cfg", "experiment.colour = blue\n", "experiment.colour"),
        ("bad_value.cfg", "experiment.trials = many\n", "experiment.trials"),
        ("invalid.cfg", "system.transmit = 5\nsystem.receive = 4\n", "system"),
        ("kernel.cfg", "svm.kernel = rbf\n", "svm.kernel"),
    ];
    for (name, text, needle) in cases {
        let cfg = write(dir.path(), name, text);
        let o = modclass(&["run", "--config", &cfg, "--out", out]);
        assert_eq!(o.status.code(), Some(1), "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{name}: {err}");
    }
    let o = modclass(&["run", "--config", "/nonexistent/run.cfg", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    let cfg = write(dir.path(), "ok.cfg", SMALL);
    let o = modclass(&["run", "--config", &cfg, "--out", out, "--threads", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!Path::new(out).exists());
}

#[test]
fn runtime_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ok.cfg",
        "experiment.trials = 2\nexperiment.snr_grid = 10\n",
    );
    let o = modclass(&["run", "--config", &cfg, "--out", "/nonexistent-dir/out.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent-dir/out.csv"));
}
