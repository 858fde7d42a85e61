use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nsk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsk"))
        .args(args)
        .env_remove("NSK_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn vphi_prints_closed_form_and_quadrature() {
    let o = nsk(&["vphi", "--activation", "id", "--sigma", "1,0.5,1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("closed_form 0.5\n"), "{text}");
    let q: f64 = text.lines().nth(1).unwrap().split(' ').nth(1).unwrap().parse().unwrap();
    assert!((q - 0.5).abs() < 1e-10);
}

#[test]
fn signature_kernel_of_the_unit_line() {
    let dir = tempfile::tempdir().unwrap();
    let line = write(dir.path(), "line.csv", "t,x\n0,0\n1,1\n");
    let out = dir.path().join("surface.csv");
    let o = nsk(&["kernel", "sig", "--x", s(&line), "--y", s(&line), "--grid", "512", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# nsk "));
    let corner: f64 = text.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((corner - 2.2795853).abs() <= 5e-3, "{corner}");
}

#[test]
fn oracle_defaults_to_the_unit_line() {
    let o = nsk(&["kernel", "oracle", "--level", "12"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).lines().next().unwrap().split(' ').nth(1).unwrap().parse().unwrap();
    assert!((v - 2.2795853023).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    assert_eq!(nsk(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(nsk(&["vphi", "--sigma", "1,2"]).status.code(), Some(1));
    assert_eq!(nsk(&["reproduce", "fig-unknown"]).status.code(), Some(1));
    assert_eq!(nsk(&["--help"]).status.code(), Some(0));
    // invalid input is a usage error, a blown-up network a numerical one
    assert_eq!(nsk(&["vphi", "--sigma", "1,5,1"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let steep = write(dir.path(), "steep.csv", "0,0\n1,1000\n");
    let o = nsk(&[
        "simulate", "--paths", s(&steep), "--width", "20", "--depth", "200", "--activation", "id", "--params", "1,30,0",
        "--realizations", "2",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let bad = write(dir.path(), "bad.csv", "0,0\n1,abc\n");
    let o = nsk(&["kernel", "sig", "--x", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-numeric"));
}

fn simulate_to(dir: &Path, name: &str, threads: &str, path: &Path) -> Vec<u8> {
    let out = dir.join(name);
    let o = nsk(&[
        "--seed", "7", "--threads", threads, "simulate", "--paths", &format!("{},{}", s(path), s(path)), "--width", "30",
        "--depth", "40", "--realizations", "25", "--activation", "relu", "--params", "0.5,1,1.2", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn simulate_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", "0,0,0\n0.3,0.5,-0.2\n0.8,0.1,0.4\n1,0.6,0.3\n");
    let a = simulate_to(dir.path(), "a.csv", "1", &p);
    let b = simulate_to(dir.path(), "b.csv", "1", &p);
    let c = simulate_to(dir.path(), "c.csv", "8", &p);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().next().unwrap().contains("seed=7"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 25 * 3);
}

#[test]
fn seed_precedence_flag_file_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 11\nsamples = 5\n");
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_nsk"));
        cmd.args(extra).args(["paths", "synth", "--kind", "gp_rbf"]).env_remove("NSK_SEED");
        if let Some(v) = env {
            cmd.env("NSK_SEED", v);
        }
        stdout(&cmd.output().unwrap())
    };
    let header = |t: &str| t.lines().next().unwrap().to_string();
    assert!(header(&run(&["--config", s(&cfg)], Some("3"))).contains("seed=11"));
    assert!(header(&run(&["--config", s(&cfg), "--seed", "4"], Some("3"))).contains("seed=4"));
    assert!(header(&run(&[], Some("3"))).contains("seed=3"));
    assert!(header(&run(&[], None)).contains("seed=0"));
    // samples from the config file
    let text = run(&["--config", s(&cfg)], None);
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 5);
}

#[test]
fn synthesized_paths_round_trip_through_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(nsk(&["paths", "synth", "--kind", "paper_2d", "--out", s(&a)]).status.success());
    assert!(nsk(&["paths", "ingest", "--input", s(&a), "--out", s(&b)]).status.success());
    let body = |p: &Path| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(String::from)
            .collect::<Vec<_>>()
    };
    assert_eq!(body(&a), body(&b));
    assert_eq!(body(&a).len(), 101);
}

#[test]
fn gram_is_written_as_a_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "0,0\n1,1\n");
    let y = write(dir.path(), "y.csv", "0,0\n0.5,1\n1,0\n");
    let paths = format!("{},{}", s(&x), s(&y));
    for family in ["hom", "inhom"] {
        let o = nsk(&["gram", "--paths", &paths, "--family", family, "--activation", "erf", "--grid", "64", "--steps", "100"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let rows: Vec<Vec<f64>> = stdout(&o)
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0][1], rows[1][0]);
    }
}

#[test]
fn inhom_trajectory_of_the_unit_line() {
    let dir = tempfile::tempdir().unwrap();
    let line = write(dir.path(), "line.csv", "0,0\n1,1\n");
    let o = nsk(&["kernel", "inhom", "--x", s(&line), "--steps", "1000", "--method", "rk4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!((last[2] - std::f64::consts::E).abs() < 1e-9);
}
