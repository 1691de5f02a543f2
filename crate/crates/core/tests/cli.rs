use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mltide"))
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("mltide-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn fr_sweep_writes_csv() {
    let out = scratch("fr.csv");
    let status = bin()
        .args(["--experiment", "fr-sweep", "--mesh-sizes", "4,8", "--layers", "2", "--fr", "0.5,1"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "N,0.5,1.0,all_converged");
    assert_eq!(rows.len(), 3);
    for r in &rows[1..] {
        let cells: Vec<&str> = r.split(',').collect();
        assert_eq!(cells.len(), 4);
        assert!(cells[1].parse::<usize>().unwrap() > 0);
        assert_eq!(cells[3], "1");
    }
}

#[test]
fn config_file_with_flag_override() {
    let cfg = scratch("sweep.cfg");
    std::fs::write(
        &cfg,
        "# small layer sweep\nexperiment = layer-sweep\nmesh-sizes = 4\nlayers = 2,3\ncfl = 1\n",
    )
    .unwrap();
    let output = bin().arg("--config").arg(&cfg).args(["--layers", "2"]).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("Nlayers,ilu,wtd_norm_lu"));
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("2,"));
}

#[test]
fn verify_passes_on_small_mesh() {
    let output = bin()
        .args(["--experiment", "verify", "--mesh-sizes", "4", "--layers", "2,3"])
        .output()
        .unwrap();
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(output.status.success(), "{text}");
    assert!(!text.contains("[FAIL]"));
    assert!(text.contains("energy conservation"));
}

#[test]
fn bad_arguments_are_reported() {
    let output = bin().args(["--experiment", "fr-sweep", "--pc", "jacobi"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("jacobi"));

    let output = bin()
        .args(["--experiment", "fr-sweep", "--layers", "2,3"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    let output = bin()
        .args(["--experiment", "verify", "--layers", "3"])
        .args(["--config", "/nonexistent/mltide.cfg"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}
