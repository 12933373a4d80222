use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn ptdual(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptdual")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn spectrum_two_level_rows() {
    let o = ptdual(&["spectrum", "--model", "matrix2", "--r", "1", "--s", "1", "--theta", "pi/6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    let e: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(e[0].abs() < 1e-12);
    assert!((e[1] - 3f64.sqrt()).abs() < 1e-12);
    assert_eq!(rows[0][4], "-1");
    assert_eq!(rows[1][4], "+1");
    assert!(rows.iter().all(|r| r[3] == "real"));
}

#[test]
fn spectrum_harmonic_grid() {
    let o = ptdual(&["spectrum", "--nu", "0", "--L", "12", "--N", "801", "--levels", "4"]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 801);
    for n in 0..4 {
        let e: f64 = rows[n][1].parse().unwrap();
        let exact = 2.0 * n as f64 + 1.0;
        assert!((e - exact).abs() / exact < 1e-3);
        assert_eq!(rows[n][4], if n % 2 == 0 { "+1" } else { "-1" });
    }
}

#[test]
fn even_grid_is_a_config_error() {
    let o = ptdual(&["spectrum", "--nu", "1", "--L", "8", "--N", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("parity center"), "{}", stderr(&o));
}

#[test]
fn spectrum_json() {
    let o = ptdual(&["spectrum", "--model", "matrix2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["phase"], "unbroken");
    assert_eq!(doc["eigenvalues"][0]["signature"], -1);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unbroken = ptdual(&["verify", "--model", "matrix2", "--r", "1", "--s", "1", "--theta", "pi/6"]);
    assert_eq!(unbroken.status.code(), Some(0), "{}", stderr(&unbroken));
    let report: serde_json::Value = serde_json::from_str(&stdout(&unbroken)).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["timestamp"].is_u64());

    let broken = ptdual(&["verify", "--model", "matrix2", "--r", "1", "--s", "0.5", "--theta", "pi/2"]);
    assert_eq!(broken.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&broken)).unwrap();
    assert_eq!(report["phase"], "broken");
    assert_eq!(report["c_squared.status"], "not_applicable");

    let cfg = write(
        dir.path(),
        "bad.cfg",
        "model = explicit\nh = 1, 0.5i; 0.5i, 2\np = 1, 1; 0, 1\n",
    );
    let corrupted = ptdual(&["verify", "--config", &cfg]);
    assert_eq!(corrupted.status.code(), Some(2));

    let strict = ptdual(&["verify", "--model", "matrix2", "--tol.gram_tol", "1e-300", "--tol.c_tol", "1e-300"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "# two-level model\nmodel = matrix2\nr = 1\ns = 0.5\ntheta = pi/2\nformat = csv\n",
    );
    let broken = ptdual(&["verify", "--config", &cfg, "--no-timestamp"]);
    assert!(stdout(&broken).contains("\nphase,broken\n"));
    let fixed = ptdual(&["verify", "--config", &cfg, "--s", "2", "--no-timestamp"]);
    assert!(stdout(&fixed).contains("\nphase,unbroken\n"));
    assert!(!stdout(&fixed).contains("timestamp"));

    let typo = write(dir.path(), "typo.cfg", "modle = grid\n");
    assert_eq!(ptdual(&["verify", "--config", &typo]).status.code(), Some(2));
    assert_eq!(ptdual(&["verify", "--config", "/nonexistent.cfg"]).status.code(), Some(2));
    assert_eq!(ptdual(&["verify", "--model", "matrix2", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(ptdual(&["verify", "--model", "matrix2", "--tol.pt_tol", "0"]).status.code(), Some(2));
}

#[test]
fn out_file_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = ptdual(&["verify", "--model", "matrix2", "--no-timestamp", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn sweep_brackets_discriminant_zero() {
    let o = ptdual(&[
        "sweep", "--model", "matrix2", "--r", "1", "--theta", "pi/2", "--param", "s", "--from", "0", "--to", "2",
        "--steps", "9",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows = data_rows(&text);
    assert_eq!(rows.iter().filter(|r| r[0] == "point").count(), 9);
    let boundary: Vec<_> = rows.iter().filter(|r| r[0] == "boundary").collect();
    assert_eq!(boundary.len(), 1);
    let lo: f64 = boundary[0][3].parse().unwrap();
    let hi: f64 = boundary[0][4].parse().unwrap();
    assert!(hi - lo <= 1e-6 && lo <= 1.0 && 1.0 <= hi);

    let o = ptdual(&[
        "sweep", "--model", "matrix2", "--r", "1", "--s", "0.5", "--param", "theta", "--from", "0", "--to", "pi/2",
    ]);
    let rows = data_rows(&stdout(&o));
    let b = rows.iter().find(|r| r[0] == "boundary").unwrap();
    let mid: f64 = b[2].parse().unwrap();
    assert!((mid - PI / 6.0).abs() <= 1e-6);
}

#[test]
fn sweep_errors() {
    let o = ptdual(&["sweep", "--model", "matrix2", "--param", "nu", "--from", "0", "--to", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not apply"));
    let o = ptdual(&["sweep", "--model", "matrix2", "--param", "s", "--from", "1", "--to", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ptdual(&["sweep", "--model", "matrix2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn grid_sweep_low_levels_stay_real() {
    let o = ptdual(&[
        "sweep", "--nu", "0", "--L", "6", "--N", "121", "--levels", "4", "--param", "nu", "--from", "0", "--to",
        "1", "--steps", "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[0] == "point" && r[5] == "true" && r[7] == "+1 -1 +1 -1"));
}

#[test]
fn cmatrix_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "diag.cfg", "model = explicit\nh = 1, 0; 0, 2\np = 1, 0; 0, 1\n");
    let o = ptdual(&["cmatrix", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# dimension=2\n"));
    for r in data_rows(&text) {
        let want = if r[0] == r[1] { 1.0 } else { 0.0 };
        assert_eq!(r[2].parse::<f64>().unwrap(), want);
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
    }

    // C² = I from the file alone.
    let o = ptdual(&["cmatrix", "--model", "matrix2"]);
    let rows = data_rows(&stdout(&o));
    let c: Vec<(f64, f64)> = rows.iter().map(|r| (r[2].parse().unwrap(), r[3].parse().unwrap())).collect();
    let mul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    for i in 0..2 {
        for j in 0..2 {
            let (x, y) = (mul(c[2 * i], c[j]), mul(c[2 * i + 1], c[2 + j]));
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((x.0 + y.0 - want).abs() < 1e-12 && (x.1 + y.1).abs() < 1e-12);
        }
    }

    let o = ptdual(&["cmatrix", "--model", "matrix2", "--s", "0.5", "--theta", "pi/2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("broken"));
}

#[test]
fn cmatrix_cubic_grid() {
    let o = ptdual(&["cmatrix", "--nu", "1", "--L", "2", "--N", "201"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("# dimension=201\n"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 201 * 201);
    let entry = |i: usize, j: usize| -> (f64, f64) {
        let r = &rows[i * 201 + j];
        (r[2].parse().unwrap(), r[3].parse().unwrap())
    };
    let trace: f64 = (0..201).map(|i| entry(i, i).0).sum();
    let signatures = ptdual(&["spectrum", "--nu", "1", "--L", "2", "--N", "201", "--levels", "201"]);
    let sum: f64 = data_rows(&stdout(&signatures)).iter().map(|r| r[4].parse::<f64>().unwrap()).sum();
    assert!((trace - sum).abs() < 1e-6, "{trace} vs {sum}");
    let (mut sym, mut anti) = (0.0, 0.0);
    for i in 0..201 {
        for j in 0..201 {
            let (a, b) = (entry(i, j), entry(j, i));
            sym += ((a.0 + b.0) / 2.0).powi(2) + ((a.1 + b.1) / 2.0).powi(2);
            anti += ((a.0 - b.0) / 2.0).powi(2) + ((a.1 - b.1) / 2.0).powi(2);
        }
    }
    assert!(anti < 1e-12 * sym);
    // Continuum columns are the unit-metric ones divided by dx.
    let dx = 4.0 / 200.0;
    let r = &rows[100 * 201 + 100];
    let (unit, cont): (f64, f64) = (r[2].parse().unwrap(), r[4].parse().unwrap());
    assert!((cont - unit / dx).abs() <= 1e-12 * cont.abs());
}
