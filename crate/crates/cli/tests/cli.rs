use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_brickwork");

fn brickwork(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Data rows as cell vectors, without the trailing timing column.
fn rows(csv: &str) -> Vec<Vec<String>> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().expect("column line").split(',').collect();
    assert_eq!(header.last(), Some(&"seconds"));
    lines
        .map(|l| {
            let mut cells: Vec<String> = l.split(',').map(str::to_string).collect();
            cells.pop();
            cells
        })
        .collect()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let header: Vec<&str> = csv.lines().find(|l| !l.starts_with('#')).unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    rows(csv).into_iter().map(|r| r[i].clone()).collect()
}

#[test]
fn empty_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "empty.toml",
        "mode = \"lattice\"\nchannel = \"depolarizing(gamma=0.1)\"\n[sweep]\nn = [8]\nt = []\nr = [0.25]\n",
    );
    let out = brickwork(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.t"));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_fields_and_figures_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "typo.toml", "mode = \"frame\"\nsamplez = 5\n[sweep]\nn = [8]\nt = [1]\n");
    assert_eq!(brickwork(&["run", &cfg]).status.code(), Some(1));
    assert_eq!(brickwork(&["reproduce", "fig9"]).status.code(), Some(1));
}

#[test]
fn rm_holevo_kink_at_three_quarters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "kink.toml",
        "mode = \"rm\"\nchannel = \"depolarizing(gamma=0.1)\"\n[sweep]\nn = [64]\nr = [0.25]\nh2 = [0.5, 0.7, 0.75, 0.8, 0.9]\n",
    );
    let out = brickwork(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let chi: Vec<f64> = column(&csv, "chi").iter().map(|c| c.parse().unwrap()).collect();
    let per_site: Vec<f64> = chi.iter().map(|c| c / 64.0).collect();
    for (got, want) in per_site.iter().zip([0.25, 0.25, 0.25, 0.2, 0.1]) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    assert_eq!(column(&csv, "regime"), ["protected", "protected", "critical", "lost", "lost"]);
}

#[test]
fn rm_command_matches_config_run() {
    let out = brickwork(&["rm", "--channel", "depolarizing(gamma=0.1)", "--r", "0.25", "--gamma-grid", "0:0.3:0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(column(&csv, "gamma"), ["0", "0.1", "0.2", "0.3"]);
    assert_eq!(column(&csv, "N"), ["64"; 4]);
}

const ORACLE: &str = r#"
mode = "oracle"
setup = "II"
channel = "amplitude_damping(gamma=0.2)"
samples = 100
seed = 11
[sweep]
n = [4]
t = [1, 2]
r = [0.5]
"#;

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "oracle.toml", ORACLE);
    let a = brickwork(&["--threads", "1", "run", &cfg]);
    let b = brickwork(&["--threads", "2", "run", &cfg]);
    assert_eq!(a.status.code(), Some(0));
    let (a, b) = (String::from_utf8(a.stdout).unwrap(), String::from_utf8(b.stdout).unwrap());
    assert_eq!(rows(&a), rows(&b));
    assert_eq!(rows(&a).len(), 2);
    let c = String::from_utf8(brickwork(&["--seed", "12", "run", &cfg]).stdout).unwrap();
    assert_ne!(column(&a, "purity_b_mean"), column(&c, "purity_b_mean"));
    assert!(c.contains("# seed = 12"));
}

#[test]
fn csv_header_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "oracle.toml", ORACLE);
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    assert_eq!(brickwork(&["--out", first.to_str().unwrap(), "run", &cfg]).status.code(), Some(0));
    assert_eq!(
        brickwork(&["--out", second.to_str().unwrap(), "run", first.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let (a, b) = (std::fs::read_to_string(&first).unwrap(), std::fs::read_to_string(&second).unwrap());
    let header = |s: &str| s.lines().take_while(|l| l.starts_with('#')).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(header(&a), header(&b));
    assert_eq!(rows(&a), rows(&b));
}

#[test]
fn memory_ceiling_exits_three_and_keeps_other_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "big.toml",
        "mode = \"lattice\"\nchannel = \"depolarizing(gamma=0.05)\"\ndirection = \"time\"\nmax_entries_log2 = 10\n\
         [sweep]\nn = [4, 40]\nt = [3]\nr = [0.5]\n",
    );
    let out = brickwork(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(rows(&csv).len(), 1);
    assert!(csv.contains("# failed point 1"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too large"));
}

#[test]
fn fit_mode_reports_fits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fit.toml",
        r#"
mode = "fit"
setup = "II"
channel = "depolarizing(gamma=0.01)"
direction = "time"
[sweep]
n = [12]
t = [4, 6, 8, 10]
r = [0.25]
f2 = [0.5]
[[fits]]
model = "N_over_t"
window = "all"
"#,
    );
    let csv = dir.path().join("fit.csv");
    let out = brickwork(&["--out", csv.to_str().unwrap(), "run", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("fit N=12 r=0.25 f2=0.500000 quantity=coherent model=N_over_t"), "{stdout}");
    let text = std::fs::read_to_string(csv).unwrap();
    for f2 in column(&text, "f2") {
        assert!((f2.parse::<f64>().unwrap() - 0.5).abs() < 1e-9);
    }
    assert!(text.lines().any(|l| l.starts_with("# fit ")));
}

#[test]
fn frame_potential_approaches_haar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "frame.toml", "mode = \"frame\"\n[sweep]\nn = [8]\nt = [2, 6, 10]\n");
    let out = brickwork(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let delta: Vec<f64> = column(&csv, "delta_f").iter().map(|c| c.parse().unwrap()).collect();
    assert!(delta.windows(2).all(|w| w[1] < w[0]), "{delta:?}");
    assert!(delta[2] > 0.0 && delta[2] < 0.05);
}
