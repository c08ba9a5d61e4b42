//! Config sections to core model objects, with admissibility checks up front.

use std::path::Path;
use std::sync::Arc;

use elastid::domain::{is_star_shaped, BoundaryMesh, DomainSpec, Grid, GridField};
use elastid::dynamics::{DynamicState, InitialData};
use elastid::elasticity::{
    BodyForcePotential, CouplingPotential, ElasticModuli, IsotropicModuli, RadialTable,
};
use num_rational::BigRational;

use crate::config::{parse_f64, parse_rational, Config};
use crate::CliError;

pub fn dimension(cfg: &Config) -> Result<usize, CliError> {
    match cfg.usize_or("n", 2)? {
        n @ (2 | 3) => Ok(n),
        n => Err(CliError::Input(format!("n must be 2 or 3, got {n}"))),
    }
}

fn vector(cfg: &Config, key: &str, default: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let v = cfg.f64_list_or(key, default)?;
    if v.len() != n {
        return Err(CliError::Input(format!("{key} needs {n} components, got {}", v.len())));
    }
    Ok(v)
}

fn fill(x: &str, n: usize) -> String {
    vec![x; n].join(",")
}

pub fn domain(cfg: &Config, n: usize) -> Result<DomainSpec, CliError> {
    let d = match cfg.str_or("domain.kind", "ball").as_str() {
        "ball" => DomainSpec::ball(cfg.f64_or("domain.radius", 1.0)?, vector(cfg, "domain.center", &fill("0", n), n)?),
        "rectangle" => DomainSpec::rectangle(
            vector(cfg, "domain.lo", &fill("0", n), n)?,
            vector(cfg, "domain.hi", &fill("1", n), n)?,
        ),
        "star-polygon" => {
            if n != 2 {
                return Err(CliError::Input("star polygons need n = 2".into()));
            }
            let mut verts = vec![];
            for p in cfg.require("domain.vertices")?.split(';').map(str::trim).filter(|p| !p.is_empty()) {
                let xy: Vec<f64> = p.split(',').map(parse_f64).collect::<Result<_, _>>().map_err(CliError::Input)?;
                if xy.len() != 2 {
                    return Err(CliError::Input(format!("vertex `{p}` needs two coordinates")));
                }
                verts.push([xy[0], xy[1]]);
            }
            DomainSpec::star_polygon(verts)
        }
        "annulus" => {
            if n != 2 {
                return Err(CliError::Input("annuli need n = 2".into()));
            }
            DomainSpec::annulus(cfg.f64_or("domain.r_in", 0.5)?, cfg.f64_or("domain.r_out", 1.0)?)
        }
        other => return Err(CliError::Input(format!("unknown domain.kind `{other}`"))),
    }
    .map_err(|e| CliError::Input(e.to_string()))?;
    if d.n() != n {
        return Err(CliError::Input(format!("domain has dimension {}, n = {n}", d.n())));
    }
    Ok(d)
}

/// Rejects domains that are not star-shaped when the config asks for it.
pub fn check_star_shape(cfg: &Config, d: &DomainSpec, h: f64) -> Result<(), CliError> {
    if cfg.bool_or("domain.require_star_shaped", false)? {
        let mesh = BoundaryMesh::new(d, h).map_err(|e| CliError::Input(e.to_string()))?;
        let s = is_star_shaped(&mesh);
        if !s.star_shaped {
            return Err(CliError::Input(format!(
                "domain is not star-shaped about the origin: min (x, nu) = {:e}",
                s.min_x_dot_nu
            )));
        }
    }
    Ok(())
}

/// Moduli with symmetry checks; `require_ellipticity` adds the rank-one check.
pub fn moduli(cfg: &Config, n: usize, require_ellipticity: bool, seed: u64) -> Result<ElasticModuli, CliError> {
    let c = match cfg.str_or("moduli.kind", "isotropic").as_str() {
        "isotropic" => {
            let iso = IsotropicModuli::new(cfg.rational_or("moduli.mu", "1")?, cfg.rational_or("moduli.lambda", "0")?)
                .map_err(|e| CliError::Input(e.to_string()))?;
            ElasticModuli::from_lame(&iso, n)
        }
        "laplacian" => ElasticModuli::laplacian(n),
        "explicit" => {
            let entries = cfg.rational_list_or("moduli.entries", "")?;
            ElasticModuli::explicit(n, entries).map_err(|e| CliError::Input(e.to_string()))?
        }
        other => return Err(CliError::Input(format!("unknown moduli.kind `{other}`"))),
    };
    c.check_symmetries().map_err(|e| CliError::Input(e.to_string()))?;
    if require_ellipticity {
        let r = c.check_legendre_hadamard(200, seed);
        if !r.pass {
            return Err(CliError::Input(format!(
                "moduli fail the Legendre-Hadamard condition (min acoustic eigenvalue {:e})",
                r.min_eigenvalue
            )));
        }
    }
    Ok(c)
}

fn read_table(path: &Path) -> Result<RadialTable, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let (mut r, mut v, mut s) = (vec![], vec![], vec![]);
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols[0] == "r" {
            continue;
        }
        let vals: Vec<f64> = cols.iter().map(|c| parse_f64(c)).collect::<Result<_, _>>().map_err(CliError::Input)?;
        if vals.len() != 3 {
            return Err(CliError::Input(format!("{}: rows need r,value,slope", path.display())));
        }
        r.push(vals[0]);
        v.push(vals[1]);
        s.push(vals[2]);
    }
    RadialTable::new(r, v, s).map_err(|e| CliError::Input(e.to_string()))
}

pub fn potential(cfg: &Config, n: usize) -> Result<BodyForcePotential, CliError> {
    let f = match cfg.str_or("potential.kind", "zero").as_str() {
        "zero" => BodyForcePotential::zero(),
        "quadratic" => BodyForcePotential::quadratic(cfg.rational_or("potential.kappa", "1")?),
        "power" => BodyForcePotential::power(cfg.rational_or("potential.c", "1")?, cfg.rational_or("potential.p", "4")?)
            .map_err(|e| CliError::Input(e.to_string()))?,
        "polynomial" => {
            let mut terms = vec![];
            for t in cfg.require("potential.terms")?.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                let (c, e) = t.split_once(':').ok_or_else(|| CliError::Input(format!("term `{t}` needs `c: e1 e2 ...`")))?;
                let c = parse_rational(c).map_err(CliError::Input)?;
                let e: Vec<u32> = e
                    .split_whitespace()
                    .map(|x| x.parse().map_err(|_| CliError::Input(format!("bad exponent `{x}`"))))
                    .collect::<Result<_, _>>()?;
                if e.len() != n {
                    return Err(CliError::Input(format!("term `{t}` needs {n} exponents")));
                }
                terms.push((c, e));
            }
            BodyForcePotential::polynomial(terms).map_err(|e| CliError::Input(e.to_string()))?
        }
        "tabulated" => BodyForcePotential::tabulated(read_table(Path::new(&cfg.require("potential.file")?))?),
        other => return Err(CliError::Input(format!("unknown potential.kind `{other}`"))),
    };
    f.for_dimension(n).map_err(|e| CliError::Input(e.to_string()))
}

pub fn coupling(cfg: &Config) -> Result<CouplingPotential, CliError> {
    Ok(CouplingPotential::new(cfg.rational_list_or("coupling.coefficients", "1")?))
}

/// Weights `(a, b)`; `a + b = 2` and even `n` are checked here.
pub fn weights(cfg: &Config, n: usize) -> Result<(BigRational, BigRational), CliError> {
    let a = cfg.rational_or("hamiltonian.a", "1")?;
    let b = cfg.rational_or("hamiltonian.b", "1")?;
    if &a + &b != BigRational::from_integer(2.into()) {
        return Err(CliError::Input(format!("hamiltonian weights need a + b = 2, got a = {a}, b = {b}")));
    }
    if !n.is_multiple_of(2) {
        return Err(CliError::Input(format!("the coupled identity needs even n, got {n}")));
    }
    Ok((a, b))
}

pub fn h_list(cfg: &Config, default: &str) -> Result<Vec<f64>, CliError> {
    let hs = cfg.f64_list_or("grid.h", default)?;
    if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0)) {
        return Err(CliError::Input("grid.h needs positive mesh widths".into()));
    }
    Ok(hs)
}

pub enum Initial {
    Core(InitialData),
    File(String),
}

pub fn initial(cfg: &Config, n: usize) -> Result<Initial, CliError> {
    Ok(match cfg.str_or("initial.kind", "eigenmode").as_str() {
        "eigenmode" => Initial::Core(InitialData::Eigenmode {
            u_amplitude: cfg.f64_or("initial.u_amplitude", 1.0)?,
            v_amplitude: cfg.f64_or("initial.v_amplitude", 0.5)?,
        }),
        "bump" => {
            let width = cfg.f64_or("initial.width", 0.1)?;
            if !(width > 0.0) {
                return Err(CliError::Input("initial.width must be positive".into()));
            }
            Initial::Core(InitialData::Bump {
                center: vector(cfg, "initial.center", &fill("0", n), n)?,
                width,
                amplitude: vector(cfg, "initial.amplitude", &fill("1", n), n)?,
                v_scale: cfg.f64_or("initial.v_scale", 1.0)?,
            })
        }
        "file" => Initial::File(cfg.require("initial.file")?),
        other => return Err(CliError::Input(format!("unknown initial.kind `{other}`"))),
    })
}

/// Displacement (and partner) data read from a CSV of inside-node samples; velocities start at zero.
pub fn state_from_file(path: &str, grid: Arc<Grid>, coupled: bool) -> Result<DynamicState, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    let n = grid.n();
    let width = if coupled { 3 * n } else { 2 * n };
    let mut u = vec![0.0; grid.len() * n];
    let mut v = vec![0.0; grid.len() * n];
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line.split(',').map(parse_f64).collect::<Result<_, _>>().map_err(CliError::Input)?;
        if vals.len() != width {
            return Err(CliError::Input(format!("{path}:{}: expected {width} columns", i + 1)));
        }
        let node = grid.nearest_node(&vals[..n]);
        let p = grid.point(node);
        if p.iter().zip(&vals[..n]).any(|(a, b)| (a - b).abs() > 0.25 * grid.h()) {
            return Err(CliError::Input(format!("{path}:{}: point is not a grid node at h = {}", i + 1, grid.h())));
        }
        u[node * n..(node + 1) * n].copy_from_slice(&vals[n..2 * n]);
        if coupled {
            v[node * n..(node + 1) * n].copy_from_slice(&vals[2 * n..]);
        }
    }
    let field = |vals| GridField::from_values(grid.clone(), n, vals).map_err(|e| CliError::Input(e.to_string()));
    let zero = GridField::zeros(grid.clone(), n);
    let (pv, pvt) = if coupled { (Some(field(v)?), Some(zero.clone())) } else { (None, None) };
    DynamicState::new(field(u)?, zero, pv, pvt).map_err(|e| CliError::Input(e.to_string()))
}
