//! Derivation logs against checked-in golden files.
//! Regenerate with `UPDATE_GOLDEN=1 cargo test -p elastid --test derivation`.

use std::path::PathBuf;

use elastid::derivation::{derivation_log, DerivationTarget};
use elastid::symbolic::rat;

fn golden(name: &str, log: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, log).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(log, want, "derivation log drifted from {}", path.display());
}

fn hamiltonian() -> DerivationTarget {
    DerivationTarget::Hamiltonian { a: rat(1, 1), b: rat(1, 1) }
}

#[test]
fn morawetz_log_matches_golden() {
    golden("derivation_morawetz_n2.txt", &derivation_log(&DerivationTarget::Morawetz, 2).unwrap());
}

#[test]
fn hamiltonian_log_matches_golden() {
    golden("derivation_hamiltonian_n2.txt", &derivation_log(&hamiltonian(), 2).unwrap());
}

#[test]
fn pohozhaev_log_matches_golden() {
    golden("derivation_pohozhaev_n3.txt", &derivation_log(&DerivationTarget::Pohozhaev, 3).unwrap());
}

#[test]
fn logs_are_deterministic() {
    for t in [DerivationTarget::Morawetz, hamiltonian()] {
        assert_eq!(derivation_log(&t, 2).unwrap(), derivation_log(&t, 2).unwrap());
    }
}

#[test]
fn logs_carry_diff_tables_and_verdicts() {
    let m = derivation_log(&DerivationTarget::Morawetz, 2).unwrap();
    let h = derivation_log(&hamiltonian(), 2).unwrap();
    for log in [&m, &h] {
        assert!(log.contains("printed") && log.contains("derived"));
        assert!(log.contains("verdict: differ"), "expected at least one disagreement");
    }
    assert!(derivation_log(&DerivationTarget::Pohozhaev, 3).unwrap().matches("verdict: differ").count() == 0);
}

#[test]
fn hamiltonian_requires_even_dimension() {
    assert!(derivation_log(&hamiltonian(), 3).is_err());
}
