use std::sync::Arc;

use super::operator::{merge_triplets, ordinals};
use crate::domain::{Grid, NodeStatus};
use crate::elasticity::ElasticModuli;

/// Difference quotient along one lattice edge as a linear form in node values,
/// with the fraction of the edge lying in the domain.
pub(crate) fn edge_form(grid: &Grid, p: usize, k: usize) -> Option<(Vec<(usize, f64)>, f64)> {
    let q = grid.neighbor(p, k, 1)?;
    let h = grid.h();
    let (sp, sq) = (grid.status(p), grid.status(q));
    use NodeStatus::*;
    match (sp, sq) {
        (Inside, Inside) => Some((vec![(p, -1.0 / h), (q, 1.0 / h)], 1.0)),
        (Inside, Boundary) => Some((vec![(p, -1.0 / h)], 1.0)),
        (Boundary, Inside) => Some((vec![(q, 1.0 / h)], 1.0)),
        (Boundary, Boundary) => Some((vec![], 1.0)),
        (Inside, Outside) => {
            let mut d = vec![0.0; grid.n()];
            d[k] = h;
            let t = grid.domain().crossing(&grid.point(p), &d).unwrap_or(1.0).max(1e-12);
            Some((vec![(p, -1.0 / (t * h))], t))
        }
        (Outside, Inside) => {
            let mut d = vec![0.0; grid.n()];
            d[k] = -h;
            let t = grid.domain().crossing(&grid.point(q), &d).unwrap_or(1.0).max(1e-12);
            Some((vec![(q, 1.0 / (t * h))], t))
        }
        _ => None,
    }
}

/// Averaged slope over two parallel edges of a plaquette.
fn averaged(forms: [Option<(Vec<(usize, f64)>, f64)>; 2]) -> Vec<(usize, f64)> {
    let mut acc: Vec<(usize, f64)> = Vec::new();
    let mut total = 0.0;
    for (form, w) in forms.into_iter().flatten() {
        total += w;
        for (a, c) in form {
            match acc.iter_mut().find(|e| e.0 == a) {
                Some(e) => e.1 += w * c,
                None => acc.push((a, w * c)),
            }
        }
    }
    if total > 0.0 {
        acc.iter_mut().for_each(|e| e.1 /= total);
    }
    acc
}

/// Visit every energy term: `visit(weight, k, l, form_k, form_l)` contributes
/// `weight · C^{kl}_{ij} (form_k·u^i)(form_l·u^j)` to `½ uᵀ K u`.
fn for_each_term(grid: &Grid, mut visit: impl FnMut(f64, usize, usize, &[(usize, f64)], &[(usize, f64)])) {
    let n = grid.n();
    let vol = grid.h().powi(n as i32);
    let h = grid.h();
    let any_inside = |nodes: &[usize]| nodes.iter().any(|&m| grid.is_inside(m));
    for p in 0..grid.len() {
        for k in 0..n {
            if let Some((form, w)) = edge_form(grid, p, k) {
                if !form.is_empty() {
                    visit(vol * w, k, k, &form, &form);
                }
            }
        }
        for k in 0..n {
            for l in k + 1..n {
                let (Some(pk), Some(pl)) = (grid.neighbor(p, k, 1), grid.neighbor(p, l, 1)) else { continue };
                let Some(pkl) = grid.neighbor(pk, l, 1) else { continue };
                if !any_inside(&[p, pk, pl, pkl]) {
                    continue;
                }
                let gk = averaged([edge_form(grid, p, k), edge_form(grid, pl, k)]);
                let gl = averaged([edge_form(grid, p, l), edge_form(grid, pk, l)]);
                let rho = grid.domain().square_fraction(&grid.point(p), k, l, h);
                if rho == 0.0 {
                    continue;
                }
                visit(vol * rho, k, l, &gk, &gl);
                visit(vol * rho, l, k, &gl, &gk);
            }
        }
    }
}

/// Symmetric stiffness matrix of the discrete stored energy over the inside
/// unknowns `ordinal(node)·n + comp`: edge terms carry the diagonal moduli,
/// plaquettes the mixed ones, with cut-cell weights near the boundary.
#[derive(Clone, Debug)]
pub struct EnergyMatrix {
    grid: Arc<Grid>,
    n: usize,
    ordinal: Vec<u32>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl EnergyMatrix {
    pub fn new(grid: Arc<Grid>, c: &ElasticModuli) -> Self {
        let n = c.n();
        let ordinal = ordinals(&grid);
        let mut trip = Vec::new();
        for_each_term(&grid, |w, k, l, fk, fl| {
            for i in 0..n {
                for j in 0..n {
                    let cc = c.get(i, j, k, l);
                    if cc == 0.0 {
                        continue;
                    }
                    for &(a, ca) in fk {
                        for &(b, cb) in fl {
                            trip.push((ordinal[a] as usize * n + i, ordinal[b] as usize * n + j, w * cc * ca * cb));
                        }
                    }
                }
            }
        });
        let trip = merge_triplets(trip);
        let size = grid.inside_nodes().len() * n;
        let mut row_ptr = vec![0usize; size + 1];
        for &(r, _, _) in &trip {
            row_ptr[r + 1] += 1;
        }
        for r in 0..size {
            row_ptr[r + 1] += row_ptr[r];
        }
        let cols = trip.iter().map(|e| e.1).collect();
        let vals: Vec<f64> = trip.iter().map(|e| e.2).collect();
        let mut diag = vec![0.0; size];
        for &(r, cidx, v) in &trip {
            if r == cidx {
                diag[r] = v;
            }
        }
        EnergyMatrix { grid, n, ordinal, row_ptr, cols, vals, diag }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn unknowns(&self) -> usize {
        self.diag.len()
    }

    pub fn ordinals(&self) -> &[u32] {
        &self.ordinal
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = K x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[e] * x[self.cols[e]];
            }
            *out = s;
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.diag.len()).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |e| (r, self.cols[e], self.vals[e])))
    }

    /// Gather inside-node values of a full-grid field into the unknown vector.
    pub fn gather(&self, full: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (o, &node) in self.grid.inside_nodes().iter().enumerate() {
            out[o * n..(o + 1) * n].copy_from_slice(&full[node * n..(node + 1) * n]);
        }
    }

    /// Scatter unknowns into a full-grid field; other nodes are set to zero.
    pub fn scatter(&self, x: &[f64], full: &mut [f64]) {
        let n = self.n;
        full.fill(0.0);
        for (o, &node) in self.grid.inside_nodes().iter().enumerate() {
            full[node * n..(node + 1) * n].copy_from_slice(&x[o * n..(o + 1) * n]);
        }
    }
}

/// Gradient of the discrete stored energy `½ uᵀ K u` with respect to inside
/// node values, computed matrix-free from the edge and plaquette sums.
pub fn stored_energy_gradient(grid: &Grid, c: &ElasticModuli, u: &[f64]) -> Vec<f64> {
    let n = c.n();
    let mut out = vec![0.0; grid.len() * n];
    for_each_term(grid, |w, k, l, fk, fl| {
        let mut sl = vec![0.0; n];
        let mut sk = vec![0.0; n];
        for j in 0..n {
            sl[j] = fl.iter().map(|&(b, cb)| cb * u[b * n + j]).sum();
            sk[j] = fk.iter().map(|&(a, ca)| ca * u[a * n + j]).sum();
        }
        // ∂/∂u^i_a of ½ w C^{kl}_{ij} sk^i sl^j, symmetrized by the (l, k) visit
        for i in 0..n {
            let mut t = 0.0;
            for j in 0..n {
                t += c.get(i, j, k, l) * sl[j];
            }
            for &(a, ca) in fk {
                out[a * n + i] += 0.5 * w * t * ca;
            }
            let mut t2 = 0.0;
            for j in 0..n {
                t2 += c.get(j, i, k, l) * sk[j];
            }
            for &(b, cb) in fl {
                out[b * n + i] += 0.5 * w * t2 * cb;
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainSpec, GridField};
    use crate::elasticity::IsotropicModuli;
    use crate::statics::ElasticOperator;

    fn iso(mu: f64, la: f64) -> ElasticModuli {
        ElasticModuli::from_lame(&IsotropicModuli::from_f64(mu, la).unwrap(), 2)
    }

    #[test]
    fn symmetric_and_matches_operator_on_rectangles() {
        let d = DomainSpec::rectangle(vec![0.0, 0.0], vec![1.0, 0.75]).unwrap();
        let grid = Arc::new(Grid::new(d, 1.0 / 16.0).unwrap());
        let c = iso(1.0, 0.7);
        let k = EnergyMatrix::new(grid.clone(), &c);
        let entries: Vec<_> = k.entries().collect();
        for &(r, col, v) in &entries {
            let t = entries.iter().find(|e| e.0 == col && e.1 == r).unwrap().2;
            assert!((v - t).abs() <= 1e-12 * v.abs().max(1.0));
        }
        let f = GridField::from_fn(grid.clone(), 2, |x, o| {
            o[0] = (2.0 * x[0]).sin() * x[1];
            o[1] = x[0] * x[0] - x[1];
        });
        let op = ElasticOperator::new(grid.clone(), &c);
        let mut au = vec![0.0; f.values().len()];
        op.apply(f.values(), &mut au);
        let mut x = vec![0.0; k.unknowns()];
        k.gather(f.values(), &mut x);
        let mut y = vec![0.0; x.len()];
        k.apply(&x, &mut y);
        let vol = grid.h().powi(2);
        let mut ay = vec![0.0; x.len()];
        k.gather(&au, &mut ay);
        for (a, b) in y.iter().zip(&ay) {
            assert!((a / vol - b).abs() <= 1e-10 * b.abs().max(1.0), "{} vs {}", a / vol, b);
        }
    }

    #[test]
    fn matrix_free_gradient_matches_matrix() {
        let d = DomainSpec::ball(1.0, vec![0.0, 0.0]).unwrap();
        let grid = Arc::new(Grid::new(d, 1.0 / 8.0).unwrap());
        let c = iso(1.0, 0.5);
        let k = EnergyMatrix::new(grid.clone(), &c);
        let f = GridField::from_fn(grid.clone(), 2, |x, o| {
            o[0] = x[0] + 0.3 * x[1] * x[1];
            o[1] = (x[0] * x[1]).cos();
        });
        let mut x = vec![0.0; k.unknowns()];
        k.gather(f.values(), &mut x);
        let mut y = vec![0.0; x.len()];
        k.apply(&x, &mut y);
        let g = stored_energy_gradient(&grid, &c, f.values());
        let mut gx = vec![0.0; x.len()];
        k.gather(&g, &mut gx);
        for (a, b) in y.iter().zip(&gx) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
