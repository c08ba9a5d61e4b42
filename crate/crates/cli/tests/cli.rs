use std::path::Path;
use std::process::{Command, Output};

use sha2::Digest;

use tempfile::TempDir;

fn elastid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastid"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("ELASTID_OUT")
        .output()
        .expect("spawn elastid")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn write_conf(dir: &Path, text: &str) -> String {
    let p = dir.join("run.conf");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn derive_pohozhaev_n3_prints_interior() {
    let t = TempDir::new().unwrap();
    let o = elastid(t.path(), &["derive", "--identity", "pohozhaev", "--n", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.contains("1/2*u1*F_u1 + 1/2*u2*F_u2 + 1/2*u3*F_u3 - 3*F"), "{s}");
    assert!(s.contains("verdict: agree"));
    let log = read(t.path(), "derivation_pohozhaev_n3.txt");
    assert_eq!(log, s.trim_end_matches('\n').to_string() + "\n");
}

#[test]
fn derive_morawetz_and_hamiltonian() {
    let t = TempDir::new().unwrap();
    let o = elastid(t.path(), &["derive", "--identity", "morawetz", "--n", "2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("verdict: differ"));

    let o = elastid(t.path(), &["derive", "--identity", "hamiltonian", "--n", "2", "--a", "1/2", "--b", "3/2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("H_u1"));
}

#[test]
fn invalid_inputs_exit_2() {
    let t = TempDir::new().unwrap();
    let bad = write_conf(t.path(), "n = 2\nnot.a.key = 1\n");
    assert_eq!(code(&elastid(t.path(), &["derive", "-c", &bad])), 2);

    let syntax = write_conf(t.path(), "n 2\n");
    assert_eq!(code(&elastid(t.path(), &["derive", "-c", &syntax])), 2);

    let o = elastid(t.path(), &["derive", "--identity", "hamiltonian", "--a", "1", "--b", "3/2"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&elastid(t.path(), &["derive", "--identity", "hamiltonian", "--n", "3"])), 2);
    assert_eq!(code(&elastid(t.path(), &["derive", "--n", "4"])), 2);
    assert_eq!(code(&elastid(t.path(), &["verify-static", "--h", "1/16", "--set", "moduli.mu=-1"])), 2);
}

#[test]
fn star_shape_requirement_rejects_annulus() {
    let t = TempDir::new().unwrap();
    let o = elastid(
        t.path(),
        &["verify-static", "--require-star-shaped", "--set", "domain.kind=annulus", "--h", "1/16"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_static_eigen_disk_passes() {
    let t = TempDir::new().unwrap();
    let o = elastid(t.path(), &["verify-static", "--mode", "eigen", "--h", "1/16,1/32,1/64"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = read(t.path(), "refinement.csv");
    assert_eq!(csv.lines().count(), 4, "{csv}");
    assert!(read(t.path(), "report.txt").contains("PASS"));
}

#[test]
fn manufactured_needs_rectangle() {
    let t = TempDir::new().unwrap();
    let o = elastid(t.path(), &["verify-static", "--mode", "manufactured", "--h", "1/16"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn solver_cap_exits_3() {
    let t = TempDir::new().unwrap();
    let o = elastid(
        t.path(),
        &[
            "verify-static",
            "--mode",
            "solve",
            "--h",
            "1/16",
            "--set",
            "potential.kind=quadratic",
            "--set",
            "static.init_amplitude=1",
            "--set",
            "static.max_iter=1",
        ],
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(t.path(), "manifest.txt").contains("exit = 3"));
}

#[test]
fn certify_exit_codes() {
    let t = TempDir::new().unwrap();
    let o = elastid(t.path(), &["certify", "--n", "3", "--set", "potential.kind=power", "--set", "potential.p=8"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(!read(t.path(), "certificate.txt").is_empty());

    let o = elastid(t.path(), &["certify", "--n", "3", "--set", "potential.kind=power", "--set", "potential.p=2"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("failed clause: (ii)"), "{}", stdout(&o));

    let o = elastid(
        t.path(),
        &["certify", "--set", "domain.kind=annulus", "--set", "potential.kind=power", "--set", "potential.p=8"],
    );
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("failed clause: (iv)"), "{}", stdout(&o));
}

#[test]
fn verify_dynamic_hamiltonian_writes_series() {
    let t = TempDir::new().unwrap();
    let o = elastid(
        t.path(),
        &[
            "verify-dynamic",
            "--identity",
            "hamiltonian",
            "--h",
            "1/16",
            "--set",
            "domain.kind=rectangle",
            "--set",
            "domain.lo=0,0",
            "--set",
            "domain.hi=1,1",
            "--set",
            "dynamic.horizon=1/4",
            "--set",
            "dynamic.samples=4",
            "--set",
            "tolerance.relative_gap=0.1",
        ],
    );
    assert_eq!(code(&o), 0, "{}\n{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    for j in 0..3 {
        let ts = read(t.path(), &format!("timeseries_h0_dt{j}.csv"));
        assert_eq!(ts.lines().count(), 5, "{ts}");
    }
    assert!(read(t.path(), "reports.csv").lines().count() >= 2);
}

#[test]
fn free_space_past_contact_is_rejected() {
    let t = TempDir::new().unwrap();
    let o = elastid(
        t.path(),
        &[
            "verify-dynamic",
            "--identity",
            "morawetz",
            "--h",
            "1/16",
            "--set",
            "dynamic.free_space=true",
            "--set",
            "initial.kind=bump",
            "--set",
            "dynamic.horizon=4",
        ],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn manifest_is_reproducible_and_hashes_outputs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["derive", "--identity", "pohozhaev", "--n", "2", "--seed", "7"];
    assert_eq!(code(&elastid(a.path(), &args)), 0);
    assert_eq!(code(&elastid(b.path(), &args)), 0);
    let ma = read(a.path(), "manifest.txt");
    assert_eq!(ma, read(b.path(), "manifest.txt"));
    assert!(ma.contains("command = derive"));
    assert!(ma.contains("seed = 7"));
    let log = read(a.path(), "derivation_pohozhaev_n2.txt");
    let digest: String = sha2::Sha256::digest(log.as_bytes()).iter().map(|x| format!("{x:02x}")).collect();
    assert!(ma.contains(&format!("derivation_pohozhaev_n2.txt sha256 = {digest}")), "{ma}");
}

#[test]
fn resolved_config_replays_the_run() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(code(&elastid(a.path(), &["derive", "--identity", "morawetz", "--n", "3"])), 0);
    let replay = a.path().join("config.resolved");
    let o = elastid(b.path(), &["derive", "-c", replay.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(a.path(), "derivation_morawetz_n3.txt"), read(b.path(), "derivation_morawetz_n3.txt"));
}

#[test]
fn output_dir_precedence() {
    let t = TempDir::new().unwrap();
    let env_dir = t.path().join("from-env");
    let cfg_dir = t.path().join("from-config");
    let flag_dir = t.path().join("from-flag");
    let conf = write_conf(t.path(), &format!("output.dir = {}\n", cfg_dir.display()));
    let run = |extra: &[&str], env: Option<&Path>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_elastid"));
        c.args(["derive", "-c", &conf]).args(extra).env_remove("ELASTID_OUT");
        if let Some(e) = env {
            c.env("ELASTID_OUT", e);
        }
        c.output().unwrap()
    };
    assert_eq!(code(&run(&[], None)), 0);
    assert!(cfg_dir.join("manifest.txt").exists());
    assert_eq!(code(&run(&[], Some(&env_dir))), 0);
    assert!(env_dir.join("manifest.txt").exists());
    assert_eq!(code(&run(&["--out", flag_dir.to_str().unwrap()], Some(&env_dir))), 0);
    assert!(flag_dir.join("manifest.txt").exists());
}

#[test]
fn selftest_passes() {
    let t = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_elastid")).args(["selftest", "--out"]).arg(t.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(t.path().join("selftest.txt").exists());
}
