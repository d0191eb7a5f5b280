//! End-to-end checks of the `bsnc` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const GOLDEN_HEADER: &str = include_str!("golden/metrics_header.csv");

fn bsnc(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsnc"))
        .args(args)
        .env("BSNC_OUT_DIR", out)
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn small_spec(dir: &Path, values: &str) -> String {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        format!(
            "node_count = 6\nerasure_rates = [0.1, 0.4, 0.2, 0.3, 0.1]\n\
             rtt_per_hop = [20, 20, 20, 20, 20]\nhorizon = 600\ndelivery_window = 100\n\
             sweep_parameter = \"eps2\"\nsweep_values = {values}\nseeds = 2\n"
        ),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_header_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), "[0.2, 0.5]");
    let out = dir.path().join("out");
    ok(&bsnc(&["sweep", "--spec", &spec], &out));
    let text = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(text.starts_with(GOLDEN_HEADER), "{text}");
    // 2 values × 4 protocols × 2 seeds
    assert_eq!(text.lines().count(), 2 + 16);
    for panel in ["usage.svg", "rate.svg", "delay_mean.svg", "delay_max.svg"] {
        let svg = fs::read_to_string(out.join(panel)).unwrap();
        assert!(svg.starts_with("<svg"), "{panel}");
    }
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), "[]");
    let out = dir.path().join("out");
    ok(&bsnc(&["sweep", "--spec", &spec], &out));
    assert_eq!(
        fs::read_to_string(out.join("metrics.csv")).unwrap(),
        GOLDEN_HEADER
    );
    assert!(out.join("usage.svg").exists());
}

#[test]
fn charts_depend_only_on_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), "[0.3, 0.6]");
    let a = dir.path().join("a");
    ok(&bsnc(&["sweep", "--spec", &spec], &a));
    let b = dir.path().join("b");
    fs::create_dir_all(&b).unwrap();
    fs::copy(a.join("metrics.csv"), b.join("metrics.csv")).unwrap();
    ok(&bsnc(&["plot"], &b));
    for panel in ["usage.svg", "rate.svg", "delay_mean.svg", "delay_max.svg"] {
        assert_eq!(
            fs::read(a.join(panel)).unwrap(),
            fs::read(b.join(panel)).unwrap(),
            "{panel}"
        );
    }
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--seed", "1", "--protocol", "bs", "--slots", "1000"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&bsnc(&args, &a));
    ok(&bsnc(&args, &b));
    let ra = fs::read_to_string(a.join("run.csv")).unwrap();
    assert_eq!(ra, fs::read_to_string(b.join("run.csv")).unwrap());
    assert_eq!(ra.lines().count(), 3);
    assert!(ra.lines().nth(2).unwrap().starts_with("bs,,1,"));
}

#[test]
fn out_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (env_dir, flag_dir) = (dir.path().join("env"), dir.path().join("flag"));
    let o = bsnc(
        &[
            "run",
            "--protocol",
            "srarq",
            "--slots",
            "300",
            "--out",
            flag_dir.to_str().unwrap(),
        ],
        &env_dir,
    );
    ok(&o);
    assert!(flag_dir.join("run.csv").exists());
    assert!(!env_dir.exists());
}

#[test]
fn traces_list_every_slot_and_node() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&bsnc(
        &["run", "--protocol", "bs", "--slots", "400", "--traces"],
        &out,
    ));
    let text = fs::read_to_string(out.join("traces").join("bs_seed1.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("slot,node,action"));
    let codes = [
        "NEW", "FEC_AP", "FEC_PO", "FEC_EOW", "BSP_IDLE", "NNF_IDLE", "PRE_OP",
    ];
    let mut n = 0;
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0].parse::<usize>().unwrap(), i / 5, "{line}");
        assert_eq!(f[1].parse::<usize>().unwrap(), i % 5, "{line}");
        assert!(codes.contains(&f[2]), "{line}");
        n += 1;
    }
    assert_eq!(n, 400 * 5);
}

#[test]
fn verify_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = bsnc(
        &[
            "verify",
            "--slots",
            "500",
            "--nodes",
            "3",
            "--instances",
            "3",
        ],
        &out,
    );
    ok(&o);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("9 runs"), "{stdout}");
    assert!(stdout.contains("agreement"), "{stdout}");
    let rows = fs::read_to_string(out.join("verify.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 9);
}

#[test]
fn errors_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = bsnc(&["run", "--protocol", "tcp"], &out);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("tcp"));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = bsnc(&["run", "--slots", "300"], &blocker);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot create"));

    let spec = dir.path().join("bad.toml");
    fs::write(
        &spec,
        "node_count = 3\nerasure_rates = [0.1]\nrtt_per_hop = [20]\n",
    )
    .unwrap();
    let o = bsnc(&["sweep", "--spec", spec.to_str().unwrap()], &out);
    assert!(!o.status.success());
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());

    let o = bsnc(&["plot", "--csv", spec.to_str().unwrap()], &out);
    assert!(!o.status.success());
}
