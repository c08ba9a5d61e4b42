use crate::domain::{gradient_at, Grid, GridField, NodeStatus};
use num_traits::ToPrimitive;

use crate::elasticity::{BodyForcePotential, CouplingPotential, ElasticModuli};
use crate::statics::SourceField;
use crate::symbolic::{Atom, CompiledExpr, DiffExpr, Field, Lame, Var};

use super::VerifyError;

/// Model data needed to give every atom of an identity a numerical value.
#[derive(Clone, Copy)]
pub struct Model<'a> {
    pub moduli: &'a ElasticModuli,
    pub potential: Option<&'a BodyForcePotential>,
    pub coupling: Option<&'a CouplingPotential>,
    pub source: Option<&'a dyn SourceField>,
}

/// Pointwise state. Slices not needed by an expression may be empty.
#[derive(Clone, Copy, Default)]
pub struct PointState<'a> {
    pub x: &'a [f64],
    pub t: f64,
    pub u: &'a [f64],
    pub ut: &'a [f64],
    /// `du[c·n + k] = ∂_k u^c`.
    pub du: &'a [f64],
    pub v: &'a [f64],
    pub vt: &'a [f64],
    pub dv: &'a [f64],
    pub normal: &'a [f64],
    /// Normal derivatives of `u` and `v` on the boundary.
    pub wu: &'a [f64],
    pub wv: &'a [f64],
}

/// A compiled identity term bound to a model.
pub struct Evaluator<'a> {
    expr: CompiledExpr,
    model: Model<'a>,
    n: usize,
    lame: (f64, f64),
    buf: Vec<f64>,
    scratch: Vec<f64>,
}

fn field_slice<'s>(st: &PointState<'s>, f: Field) -> (&'s [f64], &'s [f64], &'s [f64], &'s [f64]) {
    match f {
        Field::U => (st.u, st.ut, st.du, st.wu),
        Field::V => (st.v, st.vt, st.dv, st.wv),
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(e: &DiffExpr, model: Model<'a>) -> Result<Self, VerifyError> {
        let expr = e.compile();
        for a in expr.slots() {
            let ok = match a {
                Atom::F | Atom::Fu(_) => model.potential.is_some(),
                Atom::H | Atom::Hu(_) | Atom::Hv(_) => model.coupling.is_some(),
                Atom::Source(_) | Atom::SourceX(..) => true,
                Atom::Lame(_) => model.moduli.lame().is_some(),
                Atom::Jet2(..) | Atom::Fuu(..) | Atom::Huu(..) | Atom::Huv(..) | Atom::Hvv(..) | Atom::SourceXX(..) => false,
                _ => true,
            };
            if !ok {
                return Err(VerifyError::Unsupported(format!("no numerical value for atom {a}")));
            }
        }
        let lame = model
            .moduli
            .lame()
            .map(|l| (l.mu().to_f64().unwrap_or(f64::NAN), l.lambda().to_f64().unwrap_or(f64::NAN)))
            .unwrap_or((f64::NAN, f64::NAN));
        let slots = expr.slots().len();
        let n = model.moduli.n();
        Ok(Evaluator { expr, model, n, lame, buf: vec![0.0; slots], scratch: vec![0.0; 2 + 4 * n + n * n] })
    }

    pub fn slots(&self) -> &[Atom] {
        self.expr.slots()
    }

    pub fn eval(&mut self, st: &PointState) -> f64 {
        let n = self.n;
        let needs_f = self.expr.slots().iter().any(|a| matches!(a, Atom::F | Atom::Fu(_)));
        let needs_h = self.expr.slots().iter().any(|a| matches!(a, Atom::H | Atom::Hu(_) | Atom::Hv(_)));
        let needs_g = self.expr.slots().iter().any(|a| matches!(a, Atom::Source(_) | Atom::SourceX(..)));
        // scratch layout: [F, H, f(n), Hu(n), Hv(n), g(n), dg(n·n)]
        let (head, rest) = self.scratch.split_at_mut(2);
        let (f, rest) = rest.split_at_mut(n);
        let (hu, rest) = rest.split_at_mut(n);
        let (hv, rest) = rest.split_at_mut(n);
        let (g, dg) = rest.split_at_mut(n);
        if needs_f {
            let p = self.model.potential.expect("checked at construction");
            head[0] = p.value(st.u);
            p.gradient(st.u, f);
        }
        if needs_h {
            let c = self.model.coupling.expect("checked at construction");
            head[1] = c.value(st.u, st.v);
            c.gradients(st.u, st.v, hu, hv);
        }
        if needs_g {
            match self.model.source {
                Some(s) => {
                    s.value(st.x, g);
                    s.gradient(st.x, &mut dg[..n * n]);
                }
                None => {
                    g.fill(0.0);
                    dg.fill(0.0);
                }
            }
        }
        for (slot, a) in self.buf.iter_mut().zip(self.expr.slots()) {
            *slot = match *a {
                Atom::Modulus(i, j, k, l) => self.model.moduli.get(i as usize, j as usize, k as usize, l as usize),
                Atom::Lame(Lame::Mu) => self.lame.0,
                Atom::Lame(Lame::Lambda) => self.lame.1,
                Atom::Time => st.t,
                Atom::Space(k) => st.x[k as usize],
                Atom::Normal(k) => st.normal[k as usize],
                Atom::Dep(fd, k) => field_slice(st, fd).0[k as usize],
                Atom::Jet1(fd, k, Var::T) => field_slice(st, fd).1[k as usize],
                Atom::Jet1(fd, k, Var::X(i)) => field_slice(st, fd).2[k as usize * n + i as usize],
                Atom::NormalDeriv(fd, k) => field_slice(st, fd).3[k as usize],
                Atom::F => head[0],
                Atom::Fu(k) => f[k as usize],
                Atom::H => head[1],
                Atom::Hu(k) => hu[k as usize],
                Atom::Hv(k) => hv[k as usize],
                Atom::Source(k) => g[k as usize],
                Atom::SourceX(k, i) => dg[k as usize * n + i as usize],
                _ => unreachable!("rejected at construction"),
            };
        }
        self.expr.eval(&self.buf)
    }
}

/// Nodal deformation gradients `out[(node·comps + c)·n + k]` at every node carrying
/// quadrature weight; central differences where possible, one-sided next to the boundary.
pub fn nodal_gradients(field: &GridField) -> Result<Vec<f64>, VerifyError> {
    let grid = field.grid();
    let (n, nc, h) = (grid.n(), field.comps(), grid.h());
    let mut out = vec![0.0; grid.len() * nc * n];
    let strides = grid.strides().to_vec();
    let vals = field.values();
    let weights = grid.weights();
    for node in 0..grid.len() {
        if weights[node] == 0.0 || grid.status(node) == NodeStatus::Outside {
            continue;
        }
        if central_ok(grid, node) {
            for k in 0..n {
                let (p, m) = (node + strides[k], node - strides[k]);
                for c in 0..nc {
                    out[(node * nc + c) * n + k] = (vals[p * nc + c] - vals[m * nc + c]) / (2.0 * h);
                }
            }
        } else {
            let g = match gradient_at(field, node) {
                Ok(g) => g,
                Err(_) => arm_gradient(field, node),
            };
            out[node * nc * n..(node + 1) * nc * n].copy_from_slice(&g);
        }
    }
    // outside nodes whose dual cell meets the domain take the value of an in-domain neighbor
    for node in 0..grid.len() {
        if weights[node] == 0.0 || grid.status(node) != NodeStatus::Outside {
            continue;
        }
        let src = (0..n)
            .flat_map(|k| [grid.neighbor(node, k, 1), grid.neighbor(node, k, -1)])
            .flatten()
            .filter(|&m| grid.status(m) != NodeStatus::Outside)
            .max_by(|&a, &b| weights[a].total_cmp(&weights[b]));
        if let Some(m) = src {
            let (a, b) = out.split_at_mut(node.max(m) * nc * n);
            if m < node {
                b[..nc * n].copy_from_slice(&a[m * nc * n..(m + 1) * nc * n]);
            } else {
                a[node * nc * n..(node + 1) * nc * n].copy_from_slice(&b[..nc * n]);
            }
        }
    }
    Ok(out)
}

/// Differences through the nearest values along each axis, using the boundary
/// crossing (where the field vanishes) in place of an outside neighbor.
fn arm_gradient(field: &GridField, node: usize) -> Vec<f64> {
    let grid = field.grid();
    let (n, nc, h) = (grid.n(), field.comps(), grid.h());
    let x = grid.point(node);
    let mut g = vec![0.0; nc * n];
    for k in 0..n {
        let mut arms: Vec<(f64, Option<usize>)> = Vec::new();
        for s in [-1i64, 1] {
            match grid.neighbor(node, k, s) {
                Some(m) if grid.status(m) != NodeStatus::Outside => arms.push((s as f64 * h, Some(m))),
                _ if grid.status(node) == NodeStatus::Inside => {
                    let mut d = vec![0.0; n];
                    d[k] = s as f64 * h;
                    if let Some(t) = grid.domain().crossing(&x, &d) {
                        arms.push((s as f64 * t * h, None));
                    }
                }
                _ => {}
            }
        }
        for c in 0..nc {
            let u0 = field.at(node)[c];
            let val = |a: &(f64, Option<usize>)| a.1.map(|m| field.at(m)[c]).unwrap_or(0.0);
            g[c * n + k] = match arms.as_slice() {
                [a, b] => {
                    // quadratic through (a.0, ua), (0, u0), (b.0, ub)
                    let (ha, hb) = (a.0, b.0);
                    let (ua, ub) = (val(a), val(b));
                    (ua * hb * hb - ub * ha * ha - u0 * (hb * hb - ha * ha)) / (ha * hb * (hb - ha))
                }
                [a] => (val(a) - u0) / a.0,
                _ => 0.0,
            };
        }
    }
    g
}

fn central_ok(grid: &Grid, node: usize) -> bool {
    (0..grid.n()).all(|k| {
        [-1, 1].iter().all(|&s| grid.neighbor(node, k, s).map(|m| grid.status(m) != NodeStatus::Outside).unwrap_or(false))
    })
}
