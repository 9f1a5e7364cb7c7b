use std::fs;
use std::process::{Command, Output};

fn qrand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrand")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn sweep_csv_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = qrand(&["sweep", "--grid", "0.6:0.2:1", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let records = qrand_cli::sweep::parse_sweep_csv(std::str::from_utf8(&ta).unwrap()).unwrap();
    assert_eq!(records.len(), 3);
    let last = &records[2];
    assert_eq!(last.values[0], Some(1.0));
    for h in [last.values[2], last.values[4], last.values[6]] {
        assert!((h.unwrap() - 2.0).abs() < 1e-6);
    }
    assert!(records.iter().all(|r| r.note == "ok"));
}

#[test]
fn functional_sweep_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("f.svg");
    let o = qrand(&["functional", "--mode", "chsh", "--grid", "0.9:0.1:1", "--svg", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("V,functional,G_di,Hmin_di,status"));
    assert_eq!(text.lines().count(), 3);
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn configuration_errors_exit_with_code_three() {
    assert_eq!(qrand(&["sweep", "--grid", "1:0.1:0"]).status.code(), Some(3));
    assert_eq!(qrand(&["sweep", "--preset", "nope"]).status.code(), Some(3));
    assert_eq!(qrand(&["sweep", "--level", "7"]).status.code(), Some(3));
    assert_eq!(qrand(&["sweep", "--preset", "chsh3"]).status.code(), Some(3));
    assert_eq!(qrand(&["povm"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "[sweep]\ngrid = 3\n").unwrap();
    assert_eq!(qrand(&["sweep", "--config", bad.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn povm_presets_report_their_bounds() {
    for (name, bound) in [("sic", "1.000000000000"), ("trine", "0.584962500721"), ("projective", "0.000000000000")] {
        let o = qrand(&["povm", "--preset", name]);
        assert_eq!(o.status.code(), Some(0), "{name}");
        let text = stdout(&o);
        assert!(text.contains(&format!("min-entropy upper bound (bits): {bound}")), "{name}: {text}");
        assert!(text.contains("bound respected: true"));
    }
}

#[test]
fn white_noise_table_lists_each_size() {
    let o = qrand(&["white-noise", "--n", "2,3", "--restarts", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("2  0.7071068")));
    assert!(text.lines().any(|l| l.starts_with("3  0.5773503")));
}

#[test]
fn solve_reports_the_optimum_of_an_sdpa_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.dat-s");
    // max <diag(1, 2), Y> over tr Y = 1.
    fs::write(&file, "1\n1\n2\n1.0\n0 1 1 1 1.0\n0 1 2 2 2.0\n1 1 1 1 1.0\n1 1 2 2 1.0\n").unwrap();
    let o = qrand(&["solve", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("status: Optimal"));
    let primal: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("primal objective:"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((primal - 2.0).abs() < 1e-8);
    fs::write(&file, "1\n1\n2\n1.0\n0 1 x 1 1.0\n").unwrap();
    assert_eq!(qrand(&["solve", file.to_str().unwrap()]).status.code(), Some(3));
}
