use std::sync::Arc;

use super::geometry::DomainSpec;
use super::DomainError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeStatus {
    Inside,
    /// On the boundary to within `1e-10·h`; carries the Dirichlet value.
    Boundary,
    Outside,
}

/// Sum with a fixed binary tree, independent of any scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Uniform lattice `x = (offset + idx)·h` covering a domain with a two-node margin.
#[derive(Clone, Debug)]
pub struct Grid {
    domain: DomainSpec,
    n: usize,
    h: f64,
    offset: Vec<i64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    status: Vec<NodeStatus>,
    weights: Vec<f64>,
    inside: Vec<usize>,
}

impl Grid {
    pub fn new(domain: DomainSpec, h: f64) -> Result<Self, DomainError> {
        let n = domain.n();
        if !(h > 0.0 && h.is_finite()) {
            return Err(DomainError::Invalid(format!("grid spacing must be positive, got {h}")));
        }
        let (lo, hi) = domain.bounds();
        let mut offset = Vec::with_capacity(n);
        let mut dims = Vec::with_capacity(n);
        for k in 0..n {
            let a = (lo[k] / h - 1e-9).floor() as i64 - 2;
            let b = (hi[k] / h + 1e-9).ceil() as i64 + 2;
            offset.push(a);
            dims.push((b - a + 1) as usize);
        }
        let total: usize = dims.iter().product();
        if total > 60_000_000 {
            return Err(DomainError::Invalid(format!("grid with {total} nodes is too large")));
        }
        let mut strides = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let mut grid = Grid {
            domain,
            n,
            h,
            offset,
            dims,
            strides,
            status: Vec::new(),
            weights: Vec::new(),
            inside: Vec::new(),
        };
        let tol = 1e-10 * h;
        let reach = 0.5 * h * (n as f64).sqrt() * (1.0 + 1e-9);
        let mut status = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut x = vec![0.0; n];
        let mut corner = vec![0.0; n];
        let cell = h.powi(n as i32);
        for node in 0..total {
            grid.point_into(node, &mut x);
            let lv = grid.domain.level(&x);
            status.push(if lv.abs() <= tol {
                NodeStatus::Boundary
            } else if lv < 0.0 {
                NodeStatus::Inside
            } else {
                NodeStatus::Outside
            });
            weights.push(if lv < -reach {
                cell
            } else if lv > reach {
                0.0
            } else {
                for k in 0..n {
                    corner[k] = x[k] - 0.5 * h;
                }
                cell * grid.domain.box_fraction(&corner, h)
            });
        }
        grid.inside = (0..total).filter(|&i| status[i] == NodeStatus::Inside).collect();
        grid.status = status;
        grid.weights = weights;
        if grid.inside.is_empty() {
            return Err(DomainError::EmptyInterior);
        }
        Ok(grid)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.status.len()
    }

    pub fn is_empty(&self) -> bool {
        self.status.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn status(&self, node: usize) -> NodeStatus {
        self.status[node]
    }

    pub fn is_inside(&self, node: usize) -> bool {
        self.status[node] == NodeStatus::Inside
    }

    /// Nodes strictly inside the domain (the unknowns).
    pub fn inside_nodes(&self) -> &[usize] {
        &self.inside
    }

    /// Cut-cell quadrature weights `hⁿ·|dual cell ∩ Ω| / hⁿ`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index_along(&self, node: usize, k: usize) -> usize {
        (node / self.strides[k]) % self.dims[k]
    }

    pub fn coord(&self, node: usize, k: usize) -> f64 {
        (self.offset[k] + self.index_along(node, k) as i64) as f64 * self.h
    }

    pub fn point_into(&self, node: usize, x: &mut [f64]) {
        for (k, xk) in x.iter_mut().enumerate().take(self.n) {
            *xk = self.coord(node, k);
        }
    }

    pub fn point(&self, node: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.point_into(node, &mut x);
        x
    }

    /// Node displaced by `step` along axis `k`, if it lies on the lattice.
    pub fn neighbor(&self, node: usize, k: usize, step: i64) -> Option<usize> {
        let i = self.index_along(node, k) as i64 + step;
        if i < 0 || i >= self.dims[k] as i64 {
            return None;
        }
        Some((node as i64 + step * self.strides[k] as i64) as usize)
    }

    /// Node displaced by an integer offset vector.
    pub fn offset_node(&self, node: usize, off: &[i64]) -> Option<usize> {
        let mut out = node as i64;
        for k in 0..self.n {
            let i = self.index_along(node, k) as i64 + off[k];
            if i < 0 || i >= self.dims[k] as i64 {
                return None;
            }
            out += off[k] * self.strides[k] as i64;
        }
        Some(out as usize)
    }

    /// Nearest lattice node to a point (clamped to the lattice).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let mut node = 0;
        for k in 0..self.n {
            let i = ((x[k] / self.h).round() as i64 - self.offset[k]).clamp(0, self.dims[k] as i64 - 1);
            node += i as usize * self.strides[k];
        }
        node
    }

    /// `Σ w_i dens_i` with the cut-cell weights and fixed-tree summation.
    pub fn volume_integral(&self, dens: &[f64]) -> f64 {
        assert_eq!(dens.len(), self.len(), "density must be sampled on every node");
        let terms: Vec<f64> = self.weights.iter().zip(dens).map(|(w, d)| if *w == 0.0 { 0.0 } else { w * d }).collect();
        pairwise_sum(&terms)
    }

    /// Quadrature of a function sampled at the node coordinates.
    pub fn integrate_fn(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut x = vec![0.0; self.n];
        let dens: Vec<f64> = (0..self.len())
            .map(|i| {
                if self.weights[i] == 0.0 {
                    0.0
                } else {
                    self.point_into(i, &mut x);
                    f(&x)
                }
            })
            .collect();
        self.volume_integral(&dens)
    }
}

/// Vector field sampled on every node; values off the unknown set are zero
/// for homogeneous Dirichlet data.
#[derive(Clone, Debug)]
pub struct GridField {
    grid: Arc<Grid>,
    comps: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Arc<Grid>, comps: usize) -> Self {
        let values = vec![0.0; grid.len() * comps];
        GridField { grid, comps, values }
    }

    /// Sample `f` on inside nodes; every other node is set to zero.
    pub fn from_fn(grid: Arc<Grid>, comps: usize, f: impl Fn(&[f64], &mut [f64])) -> Self {
        let mut field = GridField::zeros(grid.clone(), comps);
        let mut x = vec![0.0; grid.n()];
        for &node in grid.inside_nodes() {
            grid.point_into(node, &mut x);
            f(&x, &mut field.values[node * comps..(node + 1) * comps]);
        }
        field
    }

    pub fn from_values(grid: Arc<Grid>, comps: usize, values: Vec<f64>) -> Result<Self, DomainError> {
        if values.len() != grid.len() * comps {
            return Err(DomainError::Invalid(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len() * comps
            )));
        }
        Ok(GridField { grid, comps, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node * self.comps..(node + 1) * self.comps]
    }

    /// Zero every non-inside node.
    pub fn enforce_dirichlet(&mut self) {
        for node in 0..self.grid.len() {
            if !self.grid.is_inside(node) {
                self.values[node * self.comps..(node + 1) * self.comps].fill(0.0);
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with node coordinates and components.
    pub fn to_csv(&self) -> String {
        let n = self.grid.n();
        let mut s = String::new();
        let head: Vec<String> = (1..=n).map(|k| format!("x{k}")).chain((1..=self.comps).map(|c| format!("u{c}"))).collect();
        s.push_str(&head.join(","));
        s.push('\n');
        for &node in self.grid.inside_nodes() {
            let row: Vec<String> = self.grid.point(node).iter().chain(self.at(node)).map(|v| format!("{v:.16e}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

fn valid(grid: &Grid, node: Option<usize>) -> Option<usize> {
    node.filter(|&m| grid.status(m) != NodeStatus::Outside)
}

/// Deformation gradient `G[c·n + k] = ∂u^c/∂x_k` at a node: central differences
/// where both neighbors are inside or on the boundary, second-order one-sided otherwise.
pub fn gradient_at(field: &GridField, node: usize) -> Result<Vec<f64>, DomainError> {
    let grid = field.grid();
    let (n, h, nc) = (grid.n(), grid.h(), field.comps());
    let mut g = vec![0.0; nc * n];
    for k in 0..n {
        let (p, m) = (valid(grid, grid.neighbor(node, k, 1)), valid(grid, grid.neighbor(node, k, -1)));
        let stencil: Vec<(usize, f64)> = match (p, m) {
            (Some(p), Some(m)) => vec![(p, 0.5 / h), (m, -0.5 / h)],
            _ => {
                let dir = if p.is_some() { 1 } else { -1 };
                let a = valid(grid, grid.neighbor(node, k, dir));
                let b = valid(grid, grid.neighbor(node, k, 2 * dir));
                match (a, b) {
                    (Some(a), Some(b)) => {
                        let s = dir as f64 / (2.0 * h);
                        vec![(node, -3.0 * s), (a, 4.0 * s), (b, -s)]
                    }
                    _ => return Err(DomainError::Stencil(node)),
                }
            }
        };
        for c in 0..nc {
            g[c * n + k] = stencil.iter().map(|&(q, w)| w * field.at(q)[c]).sum();
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn disk(h: f64) -> Arc<Grid> {
        Arc::new(Grid::new(DomainSpec::ball(1.0, vec![0.0, 0.0]).unwrap(), h).unwrap())
    }

    #[test]
    fn area_of_disk() {
        let g = disk(1.0 / 64.0);
        let a = g.integrate_fn(|_| 1.0);
        assert!((a - PI).abs() / PI < 1e-12, "{a}");
        assert!(g.integrate_fn(|x| x[0]).abs() < 1e-12);
    }

    #[test]
    fn rectangle_nodes_on_boundary() {
        let d = DomainSpec::rectangle(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let g = Grid::new(d, 0.125).unwrap();
        assert_eq!(g.inside_nodes().len(), 49);
        let b = (0..g.len()).filter(|&i| g.status(i) == NodeStatus::Boundary).count();
        assert_eq!(b, 32);
        let v = g.integrate_fn(|x| x[0] * x[1]);
        assert!((v - 0.25).abs() < 1e-3);
    }

    #[test]
    fn gradient_of_quadratic() {
        let g = disk(1.0 / 64.0);
        let f = GridField::from_fn(g.clone(), 2, |x, out| {
            out[0] = x[0] * x[0];
            out[1] = 0.0;
        });
        let node = g.nearest_node(&[0.25, 0.0]);
        let grad = gradient_at(&f, node).unwrap();
        assert!((grad[0] - 0.5).abs() < 1e-10);
        let a = GridField::from_fn(g.clone(), 2, |x, out| {
            out[0] = 2.0 * x[0] - x[1];
            out[1] = 0.5 * x[1];
        });
        for &node in g.inside_nodes().iter().step_by(97) {
            if let Ok(grad) = gradient_at(&a, node) {
                let all_inside = (0..2).all(|k| {
                    [-2, -1, 1, 2].iter().all(|&s| g.neighbor(node, k, s).map(|m| g.is_inside(m)).unwrap_or(false))
                });
                if all_inside {
                    for (v, e) in grad.iter().zip([2.0, -1.0, 0.0, 0.5]) {
                        assert!((v - e).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v.clone()));
    }
}
