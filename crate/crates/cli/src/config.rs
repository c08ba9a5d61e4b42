//! Flat `key = value` configuration with dotted section prefixes.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::CliError;

/// Every accepted key with a one-line description. `SCHEMA.md` documents the same set.
pub const SCHEMA: &[(&str, &str)] = &[
    ("n", "spatial dimension, 2 or 3"),
    ("seed", "seed for every random draw"),
    ("identity", "pohozhaev | morawetz | hamiltonian"),
    ("domain.kind", "ball | rectangle | star-polygon | annulus"),
    ("domain.radius", "ball radius"),
    ("domain.center", "ball center, comma list"),
    ("domain.lo", "rectangle lower corner, comma list"),
    ("domain.hi", "rectangle upper corner, comma list"),
    ("domain.vertices", "star polygon vertices `x,y; x,y; ...` counter-clockwise"),
    ("domain.r_in", "annulus inner radius"),
    ("domain.r_out", "annulus outer radius"),
    ("domain.require_star_shaped", "reject domains that are not star-shaped about the origin"),
    ("moduli.kind", "isotropic | explicit | laplacian"),
    ("moduli.mu", "shear modulus (rational)"),
    ("moduli.lambda", "first Lame parameter (rational)"),
    ("moduli.entries", "n^4 tensor entries C_ijkl in row-major order (rationals)"),
    ("potential.kind", "zero | quadratic | power | polynomial | tabulated"),
    ("potential.kappa", "quadratic potential F = kappa |s|^2 / 2"),
    ("potential.c", "power potential coefficient, F = c |s|^p"),
    ("potential.p", "power potential exponent, p >= 2"),
    ("potential.terms", "polynomial terms `c: e1 e2 ...; ...` with one exponent per component"),
    ("potential.file", "tabulated radial potential CSV with columns r,value,slope"),
    ("coupling.coefficients", "H = sum_m c_m (u.v)^m, comma list c_1, c_2, ..."),
    ("hamiltonian.a", "weight a, with a + b = 2"),
    ("hamiltonian.b", "weight b, with a + b = 2"),
    ("grid.h", "mesh widths, comma list (rationals or decimals)"),
    ("static.mode", "eigen | manufactured | solve"),
    ("static.tau", "manufactured amplitude"),
    ("static.init_amplitude", "random initial amplitude for solve mode"),
    ("static.max_iter", "iteration cap for the static solver"),
    ("dynamic.dt_ratio", "first time step is h / dt_ratio"),
    ("dynamic.dt_levels", "number of time steps, each half the previous"),
    ("dynamic.horizon", "final time, a multiple of every time step"),
    ("dynamic.samples", "number of sample times over the horizon"),
    ("dynamic.cfl", "CFL number"),
    ("dynamic.free_space", "omit the boundary term and require the run to end before wave contact"),
    ("initial.kind", "eigenmode | bump | file"),
    ("initial.u_amplitude", "eigenmode amplitude of u"),
    ("initial.v_amplitude", "eigenmode amplitude of v"),
    ("initial.center", "bump center, comma list"),
    ("initial.width", "bump width"),
    ("initial.amplitude", "bump amplitude per component, comma list"),
    ("initial.v_scale", "v = v_scale * u for coupled bump data"),
    ("initial.file", "CSV with columns x1..xn,u1..un[,v1..vn] on inside nodes"),
    ("tolerance.relative_gap", "pass threshold on the relative gap"),
    ("tolerance.min_order", "minimum fitted order in h"),
    ("tolerance.dt_order", "minimum order in dt"),
    ("tolerance.order_slack", "allowance below tolerance.dt_order"),
    ("certify.solve", "follow a passing certificate with seeded solves"),
    ("certify.h", "mesh width for the solves"),
    ("certify.runs", "number of seeded solves"),
    ("certify.init_amplitude", "random initial amplitude for the solves"),
    ("certify.zero_tol", "max-norm a collapsed solve must reach"),
    ("output.dir", "output directory"),
];

fn known(key: &str) -> bool {
    SCHEMA.iter().any(|(k, _)| *k == key)
}

#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("line {}: expected `key = value`", lineno + 1)))?;
            let k = k.trim();
            if cfg.entries.contains_key(k) {
                return Err(CliError::Input(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
            cfg.insert(k, v.trim())?;
        }
        Ok(cfg)
    }

    fn insert(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !known(key) {
            return Err(CliError::Input(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Later overrides replace earlier values and file entries.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("override `{assignment}` is not `key=value`")))?;
        self.insert(k.trim(), v.trim())
    }

    pub fn set_value(&mut self, key: &str, value: impl ToString) -> Result<(), CliError> {
        self.insert(key, &value.to_string())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<String> {
        let v = self.entries.get(key).cloned();
        if let Some(v) = &v {
            self.resolved.borrow_mut().insert(key.to_string(), v.clone());
        }
        v
    }

    fn record_default(&self, key: &str, value: &str) {
        self.resolved.borrow_mut().insert(key.to_string(), value.to_string());
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or_else(|| {
            self.record_default(key, default);
            default.to_string()
        })
    }

    pub fn require(&self, key: &str) -> Result<String, CliError> {
        self.raw(key).ok_or_else(|| CliError::Input(format!("missing key `{key}`")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            Some(v) => parse_f64(&v).map_err(|e| CliError::Input(format!("{key}: {e}"))),
            None => {
                self.record_default(key, &default.to_string());
                Ok(default)
            }
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.raw(key) {
            Some(v) => v.parse().map_err(|_| CliError::Input(format!("{key}: `{v}` is not a non-negative integer"))),
            None => {
                self.record_default(key, &default.to_string());
                Ok(default)
            }
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        Ok(self.usize_or(key, default as usize)? as u64)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.raw(key).as_deref() {
            None => {
                self.record_default(key, &default.to_string());
                Ok(default)
            }
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(CliError::Input(format!("{key}: `{v}` is not a boolean"))),
        }
    }

    pub fn rational_or(&self, key: &str, default: &str) -> Result<BigRational, CliError> {
        parse_rational(&self.str_or(key, default)).map_err(|e| CliError::Input(format!("{key}: {e}")))
    }

    pub fn f64_list_or(&self, key: &str, default: &str) -> Result<Vec<f64>, CliError> {
        split_list(&self.str_or(key, default))
            .map(|s| parse_f64(s).map_err(|e| CliError::Input(format!("{key}: {e}"))))
            .collect()
    }

    pub fn rational_list_or(&self, key: &str, default: &str) -> Result<Vec<BigRational>, CliError> {
        split_list(&self.str_or(key, default))
            .map(|s| parse_rational(s).map_err(|e| CliError::Input(format!("{key}: {e}"))))
            .collect()
    }

    /// Keys read so far with the values used, defaults included, as config text.
    pub fn echo(&self) -> String {
        let mut all = self.resolved.borrow().clone();
        for (k, v) in &self.entries {
            all.entry(k.clone()).or_insert_with(|| v.clone());
        }
        all.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// Exact rational from `a/b`, an integer, or a decimal such as `-0.125` or `2.5e-3`.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if s.contains('/') {
        return BigRational::from_str(s).map_err(|_| format!("`{s}` is not a rational"));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| format!("`{s}` has a bad exponent"))?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str(&digits).map_err(|_| format!("`{s}` is not a number"))?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(num * ten.pow(scale as u32))
    } else {
        BigRational::new(num, ten.pow((-scale) as u32))
    })
}

/// Float from the same syntax as `parse_rational`.
pub fn parse_f64(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
        let b: f64 = b.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
        return Ok(a / b);
    }
    s.parse().map_err(|_| format!("`{s}` is not a number"))
}
