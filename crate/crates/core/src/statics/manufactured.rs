use std::f64::consts::PI;
use std::fmt;

use crate::elasticity::{BodyForcePotential, ElasticModuli};

/// External source `g(x)` entering the static system `C u_{kl} + f(u) + g = 0`.
pub trait SourceField: fmt::Debug + Send + Sync {
    fn value(&self, x: &[f64], out: &mut [f64]);
    /// `out[k·n + i] = ∂_i g_k`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// Smooth field `u^c(x) = a_c Π_k sin(π m_k (x_k − lo_k)/L_k)`, vanishing on the faces of a box.
#[derive(Clone, Debug, PartialEq)]
pub struct SineProduct {
    pub amplitude: Vec<f64>,
    pub modes: Vec<u32>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SineProduct {
    /// `(sin πx sin πy, 0)`-type field on the given box, first component only.
    pub fn first_component(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let n = lo.len();
        let mut amplitude = vec![0.0; n];
        amplitude[0] = 1.0;
        SineProduct { amplitude, modes: vec![1; n], lo, hi }
    }

    pub fn scaled(&self, tau: f64) -> Self {
        let mut s = self.clone();
        s.amplitude.iter_mut().for_each(|a| *a *= tau);
        s
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }

    /// Derivative of order `d` of each one-dimensional factor.
    fn factors(&self, x: &[f64], d: usize) -> Vec<f64> {
        (0..self.n())
            .map(|k| {
                let w = PI * self.modes[k] as f64 / (self.hi[k] - self.lo[k]);
                let s = w * (x[k] - self.lo[k]);
                let base = match d % 4 {
                    0 => s.sin(),
                    1 => s.cos(),
                    2 => -s.sin(),
                    _ => -s.cos(),
                };
                base * w.powi(d as i32)
            })
            .collect()
    }

    /// Mixed partial derivative of the product with multiplicities `orders[k]`.
    pub fn partial(&self, x: &[f64], orders: &[usize]) -> f64 {
        let mut p = 1.0;
        for k in 0..self.n() {
            p *= self.factors(x, orders[k])[k];
        }
        p
    }

    pub fn value(&self, x: &[f64], out: &mut [f64]) {
        let p = self.partial(x, &vec![0; self.n()]);
        for (o, a) in out.iter_mut().zip(&self.amplitude) {
            *o = a * p;
        }
    }

    /// `out[c·n + k] = ∂_k u^c`.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        for k in 0..n {
            let mut ord = vec![0; n];
            ord[k] = 1;
            let d = self.partial(x, &ord);
            for c in 0..n {
                out[c * n + k] = self.amplitude[c] * d;
            }
        }
    }

    fn orders(n: usize, idx: &[usize]) -> Vec<usize> {
        let mut ord = vec![0; n];
        for &k in idx {
            ord[k] += 1;
        }
        ord
    }
}

/// Source that makes a chosen field an exact solution:
/// `g = −(C^{kl}_{ij} ∂_k∂_l u*^j + f_i(u*))`.
#[derive(Clone, Debug)]
pub struct ManufacturedSource {
    pub exact: SineProduct,
    moduli: ElasticModuli,
    potential: BodyForcePotential,
}

impl ManufacturedSource {
    pub fn new(exact: SineProduct, moduli: ElasticModuli, potential: BodyForcePotential) -> Self {
        ManufacturedSource { exact, moduli, potential }
    }
}

impl SourceField for ManufacturedSource {
    fn value(&self, x: &[f64], out: &mut [f64]) {
        let n = self.exact.n();
        let mut u = vec![0.0; n];
        self.exact.value(x, &mut u);
        self.potential.gradient(&u, out);
        for i in 0..n {
            let mut s = out[i];
            for k in 0..n {
                for l in 0..n {
                    let d = self.exact.partial(x, &SineProduct::orders(n, &[k, l]));
                    for j in 0..n {
                        s += self.moduli.get(i, j, k, l) * self.exact.amplitude[j] * d;
                    }
                }
            }
            out[i] = -s;
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.exact.n();
        let mut u = vec![0.0; n];
        self.exact.value(x, &mut u);
        let mut grad = vec![0.0; n * n];
        self.exact.gradient(x, &mut grad);
        let mut hess = vec![0.0; n * n];
        if !self.potential.is_zero() {
            self.potential.hessian(&u, &mut hess).expect("manufactured forcing needs a differentiable potential");
        }
        for i in 0..n {
            for m in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += hess[i * n + j] * grad[j * n + m];
                }
                for k in 0..n {
                    for l in 0..n {
                        let d = self.exact.partial(x, &SineProduct::orders(n, &[k, l, m]));
                        for j in 0..n {
                            s += self.moduli.get(i, j, k, l) * self.exact.amplitude[j] * d;
                        }
                    }
                }
                out[i * n + m] = -s;
            }
        }
    }
}

/// A source given by closures, for tests and ad hoc forcing.
pub struct FnSource<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> fmt::Debug for FnSource<V, G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnSource")
    }
}

impl<V, G> SourceField for FnSource<V, G>
where
    V: Fn(&[f64], &mut [f64]) + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn value(&self, x: &[f64], out: &mut [f64]) {
        (self.value)(x, out)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }
}
