use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::geometry::DomainSpec;
use super::grid::{pairwise_sum, Grid, GridField};
use super::DomainError;

/// Star-shape tolerance on `min (x, ν)`.
pub const TOL_GEO: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    /// Facet midpoint, on the boundary.
    pub x: Vec<f64>,
    /// Outward unit normal at the midpoint.
    pub normal: Vec<f64>,
    /// Facet measure.
    pub ds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMesh {
    n: usize,
    facets: Vec<Facet>,
}

fn split_segment(a: [f64; 2], b: [f64; 2], h: f64, normal: [f64; 2], out: &mut Vec<Facet>) {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let m = (len / h).ceil().max(1.0) as usize;
    for s in 0..m {
        let t = (s as f64 + 0.5) / m as f64;
        out.push(Facet {
            x: vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
            normal: normal.to_vec(),
            ds: len / m as f64,
        });
    }
}

fn circle_facets(r: f64, h: f64, outward: bool, out: &mut Vec<Facet>) {
    let m = (2.0 * PI * r / h).ceil().max(8.0) as usize;
    let sign = if outward { 1.0 } else { -1.0 };
    for s in 0..m {
        let a = 2.0 * PI * (s as f64 + 0.5) / m as f64;
        let (c, sn) = (a.cos(), a.sin());
        out.push(Facet { x: vec![r * c, r * sn], normal: vec![sign * c, sign * sn], ds: 2.0 * PI * r / m as f64 });
    }
}

impl BoundaryMesh {
    /// Facets of size about `h`.
    pub fn new(domain: &DomainSpec, h: f64) -> Result<Self, DomainError> {
        if !(h > 0.0) {
            return Err(DomainError::Invalid("mesh size must be positive".into()));
        }
        let n = domain.n();
        let mut facets = Vec::new();
        match domain {
            DomainSpec::Ball { radius, center } if n == 2 => {
                circle_facets(*radius, h, true, &mut facets);
                for f in &mut facets {
                    f.x[0] += center[0];
                    f.x[1] += center[1];
                }
            }
            DomainSpec::Ball { radius, center } => {
                let r = *radius;
                let bands = (PI * r / h).ceil().max(4.0) as usize;
                for j in 0..bands {
                    let (t0, t1) = (PI * j as f64 / bands as f64, PI * (j + 1) as f64 / bands as f64);
                    let tm = 0.5 * (t0 + t1);
                    let area = 2.0 * PI * r * r * (t0.cos() - t1.cos());
                    let m = (2.0 * PI * r * tm.sin() / h).ceil().max(3.0) as usize;
                    for s in 0..m {
                        let p = 2.0 * PI * (s as f64 + 0.5) / m as f64;
                        let nu = vec![tm.sin() * p.cos(), tm.sin() * p.sin(), tm.cos()];
                        let x = nu.iter().zip(center).map(|(v, c)| c + r * v).collect();
                        facets.push(Facet { x, normal: nu, ds: area / m as f64 });
                    }
                }
            }
            DomainSpec::Rectangle { lo, hi } => {
                for k in 0..n {
                    for (side, sign) in [(lo[k], -1.0), (hi[k], 1.0)] {
                        let others: Vec<usize> = (0..n).filter(|&m| m != k).collect();
                        let counts: Vec<usize> =
                            others.iter().map(|&m| ((hi[m] - lo[m]) / h).ceil().max(1.0) as usize).collect();
                        let total: usize = counts.iter().product();
                        let ds: f64 = others.iter().zip(&counts).map(|(&m, &c)| (hi[m] - lo[m]) / c as f64).product();
                        for code in 0..total {
                            let mut x = vec![0.0; n];
                            x[k] = side;
                            let mut c = code;
                            for (&m, &cnt) in others.iter().zip(&counts) {
                                let i = c % cnt;
                                c /= cnt;
                                x[m] = lo[m] + (i as f64 + 0.5) * (hi[m] - lo[m]) / cnt as f64;
                            }
                            let mut normal = vec![0.0; n];
                            normal[k] = sign;
                            facets.push(Facet { x, normal, ds });
                        }
                    }
                }
            }
            DomainSpec::StarPolygon { vertices } => {
                let m = vertices.len();
                for i in 0..m {
                    let (a, b) = (vertices[i], vertices[(i + 1) % m]);
                    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    split_segment(a, b, h, [(b[1] - a[1]) / len, -(b[0] - a[0]) / len], &mut facets);
                }
            }
            DomainSpec::Annulus { r_in, r_out } => {
                circle_facets(*r_out, h, true, &mut facets);
                circle_facets(*r_in, h, false, &mut facets);
            }
        }
        Ok(BoundaryMesh { n, facets })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn total_measure(&self) -> f64 {
        let ds: Vec<f64> = self.facets.iter().map(|f| f.ds).collect();
        pairwise_sum(&ds)
    }

    /// Facet midpoint rule.
    pub fn integrate(&self, flux: &[f64]) -> Result<f64, DomainError> {
        if flux.len() != self.facets.len() {
            return Err(DomainError::Invalid(format!(
                "flux has {} samples, mesh has {} facets",
                flux.len(),
                self.facets.len()
            )));
        }
        if let Some(i) = self.facets.iter().position(|f| !(f.ds > 0.0)) {
            return Err(DomainError::DegenerateFacet(i));
        }
        let terms: Vec<f64> = self.facets.iter().zip(flux).map(|(f, v)| f.ds * v).collect();
        Ok(pairwise_sum(&terms))
    }

    pub fn integrate_fn(&self, f: impl Fn(&Facet) -> f64) -> Result<f64, DomainError> {
        let flux: Vec<f64> = self.facets.iter().map(f).collect();
        self.integrate(&flux)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let head: Vec<String> = (1..=self.n)
            .map(|k| format!("x{k}"))
            .chain((1..=self.n).map(|k| format!("nu{k}")))
            .chain(std::iter::once("ds".to_string()))
            .collect();
        s.push_str(&head.join(","));
        s.push('\n');
        for f in &self.facets {
            let row: Vec<String> =
                f.x.iter().chain(&f.normal).chain(std::iter::once(&f.ds)).map(|v| format!("{v:.16e}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Verdict of the star-shape test about the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarShape {
    pub star_shaped: bool,
    pub min_x_dot_nu: f64,
}

pub fn is_star_shaped(mesh: &BoundaryMesh) -> StarShape {
    let min = mesh
        .facets()
        .iter()
        .map(|f| f.x.iter().zip(&f.normal).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    StarShape { star_shaped: min >= -TOL_GEO, min_x_dot_nu: min }
}

/// Boundary normal derivative fits: per facet, weights mapping inside-node
/// values to the gradient at the facet midpoint. Uses a weighted least-squares
/// quadratic through nearby inside nodes and boundary crossing points where
/// the field vanishes.
#[derive(Clone, Debug)]
pub struct BoundaryInterpolator {
    n: usize,
    /// Per facet: (node, weight per direction).
    weights: Vec<Vec<(usize, Vec<f64>)>>,
}

impl BoundaryInterpolator {
    pub fn new(grid: &Grid, mesh: &BoundaryMesh) -> Result<Self, DomainError> {
        let n = grid.n();
        let h = grid.h();
        let domain = grid.domain();
        let reach = 3;
        let mut weights = Vec::with_capacity(mesh.facets().len());
        let mut offsets: Vec<Vec<i64>> = Vec::new();
        let side = (2 * reach + 1) as usize;
        for code in 0..side.pow(n as u32) {
            let mut c = code;
            let mut o = Vec::with_capacity(n);
            for _ in 0..n {
                o.push((c % side) as i64 - reach);
                c /= side;
            }
            offsets.push(o);
        }
        let quad_terms: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
        let cols = n + quad_terms.len();
        for (fi, facet) in mesh.facets().iter().enumerate() {
            let base = grid.nearest_node(&facet.x);
            let mut rows: Vec<(Vec<f64>, Option<usize>)> = Vec::new();
            let mut x = vec![0.0; n];
            for o in &offsets {
                let Some(node) = grid.offset_node(base, o) else { continue };
                grid.point_into(node, &mut x);
                let d: Vec<f64> = x.iter().zip(&facet.x).map(|(a, b)| a - b).collect();
                let r2: f64 = d.iter().map(|v| v * v).sum();
                if r2 > (3.0 * h).powi(2) {
                    continue;
                }
                if grid.is_inside(node) {
                    rows.push((d.clone(), Some(node)));
                    if r2 <= (2.0 * h).powi(2) {
                        for k in 0..n {
                            for s in [-1.0, 1.0] {
                                let mut dir = vec![0.0; n];
                                dir[k] = s * h;
                                let neighbor = grid.neighbor(node, k, s as i64);
                                if neighbor.map(|m| grid.is_inside(m)).unwrap_or(false) {
                                    continue;
                                }
                                if let Some(t) = domain.crossing(&x, &dir) {
                                    let p: Vec<f64> = (0..n).map(|m| x[m] + t * dir[m] - facet.x[m]).collect();
                                    rows.push((p, None));
                                }
                            }
                        }
                    }
                }
            }
            let inside_count = rows.iter().filter(|r| r.1.is_some()).count();
            if inside_count < cols {
                return Err(DomainError::Stencil(fi));
            }
            let m = rows.len();
            let mut a = DMatrix::zeros(m, cols);
            let mut w = vec![0.0; m];
            for (r, (d, _)) in rows.iter().enumerate() {
                let r2: f64 = d.iter().map(|v| v * v).sum();
                w[r] = (-r2 / (2.0 * h * h)).exp();
                for k in 0..n {
                    a[(r, k)] = w[r] * d[k] / h;
                }
                for (c, &(p, q)) in quad_terms.iter().enumerate() {
                    a[(r, n + c)] = w[r] * d[p] * d[q] / (h * h);
                }
            }
            let pinv = a
                .pseudo_inverse(1e-12)
                .map_err(|_| DomainError::Stencil(fi))?;
            let mut fw = Vec::with_capacity(inside_count);
            for (r, (_, node)) in rows.iter().enumerate() {
                if let Some(node) = node {
                    let wk: Vec<f64> = (0..n).map(|k| pinv[(k, r)] * w[r] / h).collect();
                    fw.push((*node, wk));
                }
            }
            weights.push(fw);
        }
        Ok(BoundaryInterpolator { n, weights })
    }

    /// Gradient `G[c·n + k]` of a Dirichlet field at facet `fi`.
    pub fn gradient(&self, field: &GridField, fi: usize, out: &mut [f64]) {
        let (n, nc) = (self.n, field.comps());
        out[..nc * n].fill(0.0);
        for (node, wk) in &self.weights[fi] {
            let u = field.at(*node);
            for c in 0..nc {
                for k in 0..n {
                    out[c * n + k] += wk[k] * u[c];
                }
            }
        }
    }

    pub fn facet_count(&self) -> usize {
        self.weights.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn circle_mesh_measure_and_normals() {
        let d = DomainSpec::ball(1.0, vec![0.0, 0.0]).unwrap();
        let m = BoundaryMesh::new(&d, 1.0 / 64.0).unwrap();
        assert!((m.total_measure() - 2.0 * PI).abs() < 1e-12);
        for f in m.facets() {
            let r: f64 = f.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
        let xnu = m.integrate_fn(|f| f.x.iter().zip(&f.normal).map(|(a, b)| a * b).sum()).unwrap();
        assert!((xnu - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_mesh_measure() {
        let d = DomainSpec::ball(1.0, vec![0.0; 3]).unwrap();
        let m = BoundaryMesh::new(&d, 0.1).unwrap();
        assert!((m.total_measure() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn star_shape_verdicts() {
        let ball = BoundaryMesh::new(&DomainSpec::ball(1.0, vec![0.0, 0.0]).unwrap(), 0.05).unwrap();
        let s = is_star_shaped(&ball);
        assert!(s.star_shaped && (s.min_x_dot_nu - 1.0).abs() < 1e-12);
        let ann = BoundaryMesh::new(&DomainSpec::annulus(0.5, 1.0).unwrap(), 0.05).unwrap();
        let s = is_star_shaped(&ann);
        assert!(!s.star_shaped && (s.min_x_dot_nu + 0.5).abs() < 1e-12);
        let l = DomainSpec::star_polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 0.2], [0.2, 0.2], [0.2, 1.0], [-1.0, 1.0]])
            .unwrap();
        let s = is_star_shaped(&BoundaryMesh::new(&l, 0.05).unwrap());
        assert!(s.star_shaped, "{s:?}");
        let pm = BoundaryMesh::new(&l, 0.05).unwrap();
        assert!((pm.total_measure() - l.boundary_measure()).abs() < 1e-10 * l.boundary_measure());
    }

    #[test]
    fn fitted_gradient_on_exact_field() {
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let d = DomainSpec::ball(1.0, vec![0.0, 0.0]).unwrap();
            let grid = Arc::new(Grid::new(d.clone(), h).unwrap());
            let mesh = BoundaryMesh::new(&d, h).unwrap();
            let interp = BoundaryInterpolator::new(&grid, &mesh).unwrap();
            let f = GridField::from_fn(grid.clone(), 2, |x, out| {
                let b = 1.0 - x[0] * x[0] - x[1] * x[1];
                out[0] = b * (1.0 + x[0]);
                out[1] = b * x[1] * x[1];
            });
            let mut err: f64 = 0.0;
            let mut g = [0.0; 4];
            for (fi, facet) in mesh.facets().iter().enumerate() {
                interp.gradient(&f, fi, &mut g);
                let x = &facet.x;
                let exact = [-2.0 * x[0] * (1.0 + x[0]), -2.0 * x[1] * (1.0 + x[0]), -2.0 * x[0] * x[1] * x[1], -2.0 * x[1].powi(3)];
                for (a, b) in g.iter().zip(exact) {
                    err = err.max((a - b).abs());
                }
            }
            errs.push(err);
        }
        assert!(errs[2] < 1e-2, "{errs:?}");
        assert!(errs[0] / errs[2] > 8.0, "{errs:?}");
    }
}
