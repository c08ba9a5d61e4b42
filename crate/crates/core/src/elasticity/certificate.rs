use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::moduli::ElasticModuli;
use super::potential::{deficit_sign, scaling_deficit, BodyForcePotential, DeficitSign, PotentialKind};
use crate::domain::{is_star_shaped, BoundaryMesh, DomainSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct ClauseResult {
    pub name: &'static str,
    pub holds: bool,
    /// False when the verdict rests on sampling alone.
    pub proven: bool,
    pub detail: String,
}

/// Four-clause report; the certificate holds when every clause holds.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub clauses: Vec<ClauseResult>,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.clauses.iter().all(|c| c.holds)
    }

    /// First failing clause, if any.
    pub fn failed_clause(&self) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| !c.holds)
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            let verdict = if c.holds { "PASS" } else { "FAIL" };
            let basis = if c.proven { "proven" } else { "sampled, not proven" };
            writeln!(f, "{:<28} {verdict} ({basis}): {}", c.name, c.detail)?;
        }
        write!(f, "certificate: {}", if self.holds() { "HOLDS" } else { "FAILS" })
    }
}

fn sample_deficit(fp: &BodyForcePotential, n: usize, seed: u64) -> (f64, f64, usize) {
    let r_max = match fp.kind() {
        PotentialKind::Tabulated(t) => t.r_max(),
        _ => 10.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut min_value = f64::INFINITY;
    let mut count = 0;
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .flat_map(|k| {
            [-1.0, 1.0].into_iter().map(move |s| {
                let mut d = vec![0.0; n];
                d[k] = s;
                d
            })
        })
        .collect();
    for _ in 0..200 {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-6 {
            dirs.push(v.into_iter().map(|x| x / r).collect());
        }
    }
    for step in 0..=40 {
        let r = r_max * 10f64.powf(-4.0 * (1.0 - step as f64 / 40.0));
        for d in &dirs {
            let s: Vec<f64> = d.iter().map(|x| x * r).collect();
            let v = scaling_deficit(fp, &s, n);
            min_value = min_value.min(v);
            min_ratio = min_ratio.min(v / r.powi(2).max(f64::MIN_POSITIVE));
            count += 1;
        }
    }
    (min_value, min_ratio, count)
}

/// Check the hypotheses of the non-existence theorem for a potential, moduli and domain.
pub fn nonexistence_certificate(
    fp: &BodyForcePotential,
    c: &ElasticModuli,
    domain: &DomainSpec,
    seed: u64,
) -> Certificate {
    let n = c.n();
    let f0 = fp.value(&vec![0.0; n]);
    let normalization = ClauseResult {
        name: "(i) F(0) = 0",
        holds: f0 == 0.0,
        proven: !matches!(fp.kind(), PotentialKind::Tabulated(_)) || f0 == 0.0,
        detail: format!("F(0) = {f0:e}"),
    };

    let (sign, why) = deficit_sign(fp, n);
    let (min_value, _min_ratio, count) = sample_deficit(fp, n, seed);
    let sampled_ok = min_value > 0.0;
    let deficit = match sign {
        DeficitSign::PositiveDefinite => ClauseResult {
            name: "(ii) scaling deficit > 0",
            holds: true,
            proven: true,
            detail: format!("{why}; {count} samples, min {min_value:e}"),
        },
        DeficitSign::Negative => ClauseResult {
            name: "(ii) scaling deficit > 0",
            holds: false,
            proven: true,
            detail: format!("{why}: negative away from the origin"),
        },
        DeficitSign::Degenerate => ClauseResult {
            name: "(ii) scaling deficit > 0",
            holds: false,
            proven: true,
            detail: format!("{why}: equality holds away from the origin"),
        },
        DeficitSign::Unknown => ClauseResult {
            name: "(ii) scaling deficit > 0",
            holds: sampled_ok,
            proven: !sampled_ok,
            detail: if sampled_ok {
                format!("{why}; {count} samples all positive, min {min_value:e}")
            } else {
                format!("{why}; sample with deficit {min_value:e} ≤ 0 found")
            },
        },
    };

    let pos = c.check_positivity(1000, seed ^ 0x5eed);
    let positivity = ClauseResult {
        name: "(iii) moduli positivity",
        holds: pos.pass,
        proven: true,
        detail: format!("min eigenvalue {:e}, min sample {:e}", pos.min_eigenvalue, pos.min_sample),
    };

    let (lo, hi) = domain.bounds();
    let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let star = match BoundaryMesh::new(domain, extent / 400.0) {
        Ok(mesh) => {
            let s = is_star_shaped(&mesh);
            ClauseResult {
                name: "(iv) star-shaped",
                holds: s.star_shaped,
                proven: true,
                detail: format!("min (x, nu) over facets = {:e}", s.min_x_dot_nu),
            }
        }
        Err(e) => ClauseResult { name: "(iv) star-shaped", holds: false, proven: false, detail: e.to_string() },
    };

    Certificate { clauses: vec![normalization, deficit, positivity, star] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::{IsotropicModuli, RadialTable};
    use crate::symbolic::rat;

    fn iso3() -> ElasticModuli {
        ElasticModuli::from_lame(&IsotropicModuli::from_f64(1.0, 0.0).unwrap(), 3)
    }

    #[test]
    fn eighth_power_in_the_ball_passes() {
        let f = BodyForcePotential::power(rat(1, 1), rat(8, 1)).unwrap();
        let cert = nonexistence_certificate(&f, &iso3(), &DomainSpec::ball(1.0, vec![0.0; 3]).unwrap(), 7);
        assert!(cert.holds(), "{cert}");
        assert!(cert.clauses.iter().all(|c| c.proven));
    }

    #[test]
    fn quadratic_fails_deficit() {
        let f = BodyForcePotential::power(rat(1, 1), rat(2, 1)).unwrap();
        let cert = nonexistence_certificate(&f, &iso3(), &DomainSpec::ball(1.0, vec![0.0; 3]).unwrap(), 7);
        assert_eq!(cert.failed_clause().unwrap().name, "(ii) scaling deficit > 0");
    }

    #[test]
    fn annulus_fails_star_shape() {
        let c = ElasticModuli::from_lame(&IsotropicModuli::from_f64(1.0, 0.0).unwrap(), 2);
        let f = BodyForcePotential::power(rat(-1, 1), rat(4, 1)).unwrap();
        let cert = nonexistence_certificate(&f, &c, &DomainSpec::annulus(0.5, 1.0).unwrap(), 7);
        assert!(!cert.holds());
        assert!(!cert.clauses[3].holds);
    }

    #[test]
    fn tabulated_is_never_proven() {
        let rs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let t = RadialTable::new(
            rs.clone(),
            rs.iter().map(|r| r.powi(8)).collect(),
            rs.iter().map(|r| 8.0 * r.powi(7)).collect(),
        )
        .unwrap();
        let f = BodyForcePotential::tabulated(t);
        let cert = nonexistence_certificate(&f, &iso3(), &DomainSpec::ball(1.0, vec![0.0; 3]).unwrap(), 7);
        assert!(cert.clauses[1].holds);
        assert!(!cert.clauses[1].proven);
    }
}
