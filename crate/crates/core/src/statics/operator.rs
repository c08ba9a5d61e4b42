use std::sync::Arc;

use nalgebra::DMatrix;

use crate::domain::{Grid, NodeStatus};
use crate::elasticity::ElasticModuli;

/// Weighted point list `Σ w_q u(q)` over grid nodes.
pub type Stencil = Vec<(usize, f64)>;

/// Second-difference stencils at nodes whose neighborhood is cut by the boundary.
#[derive(Clone, Debug)]
struct IrregularStencil {
    /// Indexed like `StencilTable::pairs`.
    second: Vec<Stencil>,
}

/// Second-derivative stencils `S_kl` for every inside node: the compact
/// three-point and four-point cross stencils at regular nodes, Shortley–Weller
/// differences along cut axes and in-plane least-squares quadratics for the
/// mixed derivatives at irregular nodes. Boundary values are zero and drop out.
#[derive(Clone, Debug)]
pub struct StencilTable {
    grid: Arc<Grid>,
    pairs: Vec<(usize, usize)>,
    /// Per node: `u32::MAX` when regular, else index into `irregular`.
    slot: Vec<u32>,
    irregular: Vec<IrregularStencil>,
}

fn valued(grid: &Grid, node: Option<usize>) -> bool {
    node.map(|m| grid.status(m) != NodeStatus::Outside).unwrap_or(false)
}

impl StencilTable {
    pub fn new(grid: Arc<Grid>) -> Self {
        let n = grid.n();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|k| (k..n).map(move |l| (k, l))).collect();
        let mut slot = vec![u32::MAX; grid.len()];
        let mut irregular = Vec::new();
        let mut x = vec![0.0; n];
        for &node in grid.inside_nodes() {
            let axis_ok = (0..n).all(|k| grid.is_inside_or_boundary(node, k, 1) && grid.is_inside_or_boundary(node, k, -1));
            let diag_ok = pairs.iter().filter(|(k, l)| k != l).all(|&(k, l)| {
                [(-1, -1), (-1, 1), (1, -1), (1, 1)].iter().all(|&(a, b)| {
                    let mut off = vec![0i64; n];
                    off[k] = a;
                    off[l] = b;
                    valued(&grid, grid.offset_node(node, &off))
                })
            });
            if axis_ok && diag_ok {
                continue;
            }
            grid.point_into(node, &mut x);
            let second = pairs
                .iter()
                .map(|&(k, l)| if k == l { shortley_weller(&grid, node, &x, k) } else { mixed_stencil(&grid, node, &x, k, l) })
                .collect();
            slot[node] = irregular.len() as u32;
            irregular.push(IrregularStencil { second });
        }
        StencilTable { grid, pairs, slot, irregular }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_regular(&self, node: usize) -> bool {
        self.slot[node] == u32::MAX
    }

    pub fn irregular_count(&self) -> usize {
        self.irregular.len()
    }

    /// Stencil for pair index `pi` at an inside node.
    pub fn stencil(&self, node: usize, pi: usize) -> Stencil {
        if self.is_regular(node) {
            let grid = &self.grid;
            let h = grid.h();
            let (k, l) = self.pairs[pi];
            let mut st = Vec::new();
            if k == l {
                st.push((node, -2.0 / (h * h)));
                for s in [-1, 1] {
                    let m = grid.neighbor(node, k, s).unwrap();
                    if grid.is_inside(m) {
                        st.push((m, 1.0 / (h * h)));
                    }
                }
            } else {
                for (a, b) in [(-1i64, -1i64), (-1, 1), (1, -1), (1, 1)] {
                    let mut off = vec![0i64; grid.n()];
                    off[k] = a;
                    off[l] = b;
                    let m = grid.offset_node(node, &off).unwrap();
                    if grid.is_inside(m) {
                        st.push((m, (a * b) as f64 / (4.0 * h * h)));
                    }
                }
            }
            st
        } else {
            self.irregular[self.slot[node] as usize].second[pi].clone()
        }
    }
}

impl Grid {
    fn is_inside_or_boundary(&self, node: usize, k: usize, s: i64) -> bool {
        valued(self, self.neighbor(node, k, s))
    }
}

/// Distance fraction to the boundary from `node` along `s·e_k`, or 1 when the
/// neighbor carries a value.
fn arm(grid: &Grid, node: usize, x: &[f64], k: usize, s: i64) -> (f64, Option<usize>) {
    let m = grid.neighbor(node, k, s);
    match m.map(|m| grid.status(m)) {
        Some(NodeStatus::Inside) => (1.0, m),
        Some(NodeStatus::Boundary) => (1.0, None),
        _ => {
            let mut d = vec![0.0; grid.n()];
            d[k] = s as f64 * grid.h();
            let t = grid.domain().crossing(x, &d).unwrap_or(1.0);
            (t.max(1e-12), None)
        }
    }
}

fn shortley_weller(grid: &Grid, node: usize, x: &[f64], k: usize) -> Stencil {
    let h = grid.h();
    let (tp, mp) = arm(grid, node, x, k, 1);
    let (tm, mm) = arm(grid, node, x, k, -1);
    let (hp, hm) = (tp * h, tm * h);
    let mut st = vec![(node, -2.0 / (hp * hm))];
    if let Some(m) = mp {
        st.push((m, 2.0 / (hp * (hp + hm))));
    }
    if let Some(m) = mm {
        st.push((m, 2.0 / (hm * (hp + hm))));
    }
    st
}

/// In-plane weighted least-squares quadratic; returns the `∂_k∂_l` row.
fn mixed_stencil(grid: &Grid, node: usize, x: &[f64], k: usize, l: usize) -> Stencil {
    let n = grid.n();
    let h = grid.h();
    let domain = grid.domain();
    let mut pts: Vec<([f64; 2], Option<usize>)> = Vec::new();
    for a in -2i64..=2 {
        for b in -2i64..=2 {
            if a * a + b * b > 5 {
                continue;
            }
            let mut off = vec![0i64; n];
            off[k] = a;
            off[l] = b;
            if let Some(m) = grid.offset_node(node, &off) {
                if grid.is_inside(m) {
                    pts.push(([a as f64 * h, b as f64 * h], Some(m)));
                }
            }
        }
    }
    for (a, b) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let mut off = vec![0i64; n];
        off[k] = a;
        off[l] = b;
        if grid.offset_node(node, &off).map(|m| grid.is_inside(m)).unwrap_or(false) {
            continue;
        }
        let mut d = vec![0.0; n];
        d[k] = a as f64 * h;
        d[l] = b as f64 * h;
        if let Some(t) = domain.crossing(x, &d) {
            pts.push(([t * d[k], t * d[l]], None));
        }
    }
    let m = pts.len();
    let mut a = DMatrix::zeros(m, 6);
    let mut w = vec![0.0; m];
    for (r, (p, _)) in pts.iter().enumerate() {
        let (dx, dy) = (p[0] / h, p[1] / h);
        w[r] = 1.0 / (1.0 + dx * dx + dy * dy);
        let row = [1.0, dx, dy, 0.5 * dx * dx, dx * dy, 0.5 * dy * dy];
        for (c, v) in row.iter().enumerate() {
            a[(r, c)] = w[r] * v;
        }
    }
    let pinv = a.pseudo_inverse(1e-12).expect("pseudo-inverse of a finite matrix");
    pts.iter()
        .enumerate()
        .filter_map(|(r, (_, node))| node.map(|q| (q, pinv[(4, r)] * w[r] / (h * h))))
        .collect()
}

/// Discrete elastic operator `(A u)^i = −C^{kl}_{ij} (S_kl u^j)` on full-grid vectors.
#[derive(Clone, Debug)]
pub struct ElasticOperator {
    table: StencilTable,
    n: usize,
    /// `csym[(i·n + j)·P + p] = C^{kl}_{ij} (+ C^{lk}_{ij} when k ≠ l)`.
    csym: Vec<f64>,
}

impl ElasticOperator {
    pub fn new(grid: Arc<Grid>, c: &ElasticModuli) -> Self {
        let table = StencilTable::new(grid);
        Self::with_table(table, c)
    }

    pub fn with_table(table: StencilTable, c: &ElasticModuli) -> Self {
        let n = c.n();
        let np = table.pairs.len();
        let mut csym = vec![0.0; n * n * np];
        for i in 0..n {
            for j in 0..n {
                for (p, &(k, l)) in table.pairs.iter().enumerate() {
                    csym[(i * n + j) * np + p] = if k == l { c.get(i, j, k, k) } else { c.get(i, j, k, l) + c.get(i, j, l, k) };
                }
            }
        }
        ElasticOperator { table, n, csym }
    }

    pub fn table(&self) -> &StencilTable {
        &self.table
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.table.grid
    }

    /// `out = A u` on inside nodes, zero elsewhere. Vectors hold `n` components per node.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let grid = &self.table.grid;
        let n = self.n;
        let np = self.table.pairs.len();
        let h2 = grid.h() * grid.h();
        out.fill(0.0);
        let strides = grid.strides();
        let mut d2 = vec![0.0; n * np];
        for &node in grid.inside_nodes() {
            if self.table.is_regular(node) {
                for (p, &(k, l)) in self.table.pairs.iter().enumerate() {
                    let sk = strides[k];
                    if k == l {
                        for j in 0..n {
                            let c = u[node * n + j];
                            d2[j * np + p] = (u[(node + sk) * n + j] - 2.0 * c + u[(node - sk) * n + j]) / h2;
                        }
                    } else {
                        let sl = strides[l];
                        for j in 0..n {
                            d2[j * np + p] = (u[(node + sk + sl) * n + j] + u[(node - sk - sl) * n + j]
                                - u[(node + sk - sl) * n + j]
                                - u[(node - sk + sl) * n + j])
                                / (4.0 * h2);
                        }
                    }
                }
            } else {
                let st = &self.table.irregular[self.table.slot[node] as usize];
                for p in 0..np {
                    for j in 0..n {
                        d2[j * np + p] = st.second[p].iter().map(|&(q, w)| w * u[q * n + j]).sum();
                    }
                }
            }
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    let row = &self.csym[(i * n + j) * np..(i * n + j + 1) * np];
                    for p in 0..np {
                        s += row[p] * d2[j * np + p];
                    }
                }
                out[node * n + i] = -s;
            }
        }
    }

    /// Sparse entries of `A` over unknown indices `ordinal(node)·n + comp`.
    pub fn triplets(&self, ordinal: &[u32]) -> Vec<(usize, usize, f64)> {
        let grid = &self.table.grid;
        let n = self.n;
        let np = self.table.pairs.len();
        let mut out = Vec::new();
        for &node in grid.inside_nodes() {
            let row0 = ordinal[node] as usize * n;
            for p in 0..np {
                for (q, w) in self.table.stencil(node, p) {
                    let col0 = ordinal[q] as usize * n;
                    for i in 0..n {
                        for j in 0..n {
                            let c = self.csym[(i * n + j) * np + p];
                            if c != 0.0 {
                                out.push((row0 + i, col0 + j, -c * w));
                            }
                        }
                    }
                }
            }
        }
        merge_triplets(out)
    }
}

/// Sum duplicate entries and drop zeros; output sorted by (row, col).
pub fn merge_triplets(mut t: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    t.sort_by_key(|a| (a.0, a.1));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
    for (r, c, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|e| e.2 != 0.0);
    out
}

/// Ordinal of each inside node in `grid.inside_nodes()`, `u32::MAX` elsewhere.
pub fn ordinals(grid: &Grid) -> Vec<u32> {
    let mut ord = vec![u32::MAX; grid.len()];
    for (i, &node) in grid.inside_nodes().iter().enumerate() {
        ord[node] = i as u32;
    }
    ord
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainSpec, GridField};
    use crate::elasticity::IsotropicModuli;

    #[test]
    fn exact_on_quadratics_in_the_disk() {
        let d = DomainSpec::ball(1.0, vec![0.0, 0.0]).unwrap();
        let grid = Arc::new(Grid::new(d, 1.0 / 16.0).unwrap());
        let c = ElasticModuli::from_lame(&IsotropicModuli::from_f64(1.0, 0.5).unwrap(), 2);
        let op = ElasticOperator::new(grid.clone(), &c);
        assert!(op.table().irregular_count() > 0);
        // u vanishes on the unit circle: u = (1 − r²)(a + b·x)
        let f = GridField::from_fn(grid.clone(), 2, |x, out| {
            let b = 1.0 - x[0] * x[0] - x[1] * x[1];
            out[0] = b;
            out[1] = 2.0 * b;
        });
        let mut out = vec![0.0; f.values().len()];
        op.apply(f.values(), &mut out);
        // exact: u1 = 1 − r², u2 = 2(1 − r²); Δu = (−4, −8), ∇div u = (−2, −4)... computed directly
        let (mu, la) = (1.0, 0.5);
        let lap = [-4.0, -8.0];
        let grad_div = [-2.0, -4.0];
        for &node in grid.inside_nodes() {
            for i in 0..2 {
                let exact = -(mu * lap[i] + (mu + la) * grad_div[i]);
                assert!((out[node * 2 + i] - exact).abs() < 1e-8, "{} vs {exact}", out[node * 2 + i]);
            }
        }
    }

    #[test]
    fn triplets_match_apply() {
        let d = DomainSpec::ball(1.0, vec![0.0, 0.0]).unwrap();
        let grid = Arc::new(Grid::new(d, 1.0 / 8.0).unwrap());
        let c = ElasticModuli::from_lame(&IsotropicModuli::from_f64(1.0, 1.0).unwrap(), 2);
        let op = ElasticOperator::new(grid.clone(), &c);
        let f = GridField::from_fn(grid.clone(), 2, |x, out| {
            out[0] = (3.0 * x[0]).sin() + x[1];
            out[1] = x[0] * x[1];
        });
        let mut out = vec![0.0; f.values().len()];
        op.apply(f.values(), &mut out);
        let ord = ordinals(&grid);
        let mut y = vec![0.0; grid.inside_nodes().len() * 2];
        for (r, col, v) in op.triplets(&ord) {
            let node = grid.inside_nodes()[col / 2];
            y[r] += v * f.values()[node * 2 + col % 2];
        }
        for (o, &node) in grid.inside_nodes().iter().enumerate() {
            for i in 0..2 {
                assert!((y[o * 2 + i] - out[node * 2 + i]).abs() < 1e-9);
            }
        }
    }
}
