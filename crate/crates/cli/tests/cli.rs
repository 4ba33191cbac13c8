use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cnnpart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cnnpart"))
        .args(args)
        .env("NEUPART_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn schedule_header_and_rows() {
    let o = cnnpart(&["schedule"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "layer_id,f_i,z_i,y_i,y_o,X_i,X_o,Y_i,Y_o,N,exception");
    assert_eq!(lines.count(), 11);
}

#[test]
fn energy_with_explicit_files() {
    let o = cnnpart(&[
        "energy",
        "--network",
        &fixture("alexnet.json"),
        "--accel",
        &fixture("eyeriss.json"),
        "--tech",
        &fixture("tech_45nm_16b.json"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 11);
    let cumulative: Vec<f64> = rows.iter().map(|r| r[9].parse().unwrap()).collect();
    assert!(cumulative.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn partition_reports_optimum() {
    let o = cnnpart(&["partition", "--sparsity-in", "0.608", "--tx-power", "1.14"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("candidate,layer_id,E_L_mJ,E_Trans_mJ,E_Cost_mJ\n0,In,"));
    let err = stderr(&o);
    assert!(err.contains("L_opt = 4 (P2)"), "{err}");
    assert!(err.contains("vs FCC") && err.contains("vs FISC"));
}

#[test]
fn scan_writes_intervals_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let plot = dir.path().join("scan.dat");
    let o = cnnpart(&[
        "scan-bitrate",
        "--bitrates",
        "10M:200M:10M",
        "--tx-power",
        "0.78",
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let ids: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ids, vec!["FC8", "P3", "P2", "P1"]);
    let data = fs::read_to_string(&plot).unwrap();
    assert_eq!(data.split("\n\n").count(), 12);
    assert_eq!(data.lines().filter(|l| !l.is_empty() && !l.starts_with('#')).count(), 12 * 20);
}

#[test]
fn output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = cnnpart(&["energy", "--network", &fixture("squeezenet_v1_1.json"), "-o", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn sweep_marks_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    fs::write(&curve, "size_bytes,e_access_pj\n16,0.5\n1048576,40\n").unwrap();
    let o = cnnpart(&["sweep-glb", "--sizes", "16,32kB,80kB", "--glb-curve", curve.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "size_bytes,total_energy_mj,feasible");
    assert_eq!(lines[1], "16,,false");
    assert!(lines[2].starts_with("32768,") && lines[2].ends_with(",true"));
    assert!(lines[3].starts_with("81920,") && lines[3].ends_with(",true"));
}

#[test]
fn sweep_outside_curve_is_validation_error() {
    let o = cnnpart(&["sweep-glb", "--sizes", "1kB"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn delay_fisc_ignores_bitrate() {
    let last = |b: &str| {
        let o = cnnpart(&["delay", "--bitrate", b]);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o).lines().last().unwrap().to_string()
    };
    assert_eq!(last("1e6"), last("1e9"));
}

#[test]
fn missing_file_exits_2_naming_path() {
    let o = cnnpart(&["energy", "--network", "/definitely/missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/missing.json"));
}

#[test]
fn invalid_network_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    let text = fs::read_to_string(fixture("alexnet.json")).unwrap().replace("\"E\": 55", "\"E\": 54");
    fs::write(&p, text).unwrap();
    let o = cnnpart(&["schedule", "--network", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.json"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(cnnpart(&["scan-bitrate", "--bitrates", "5:1:1"]).status.code(), Some(2));
    assert_eq!(cnnpart(&["partition", "--sparsity-in", "1.5"]).status.code(), Some(2));
    assert_eq!(cnnpart(&["energy", "--bit-width", "12"]).status.code(), Some(2));
    assert_eq!(cnnpart(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn oracle_matches_for_small_layer() {
    let o = cnnpart(&["oracle", "--layer", "P1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",true")));
}
