use std::f64::consts::PI;

use super::DomainError;

/// Bounded domain in `ℝⁿ`; the origin is the dilation center.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Ball { radius: f64, center: Vec<f64> },
    Rectangle { lo: Vec<f64>, hi: Vec<f64> },
    /// Counter-clockwise simple polygon.
    StarPolygon { vertices: Vec<[f64; 2]> },
    Annulus { r_in: f64, r_out: f64 },
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for i in 0..v.len() {
        let (p, q) = (v[i], v[(i + 1) % v.len()]);
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

/// `∫ √(R² − x²) dx`.
fn circle_primitive(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
}

/// Exact area of `[x0,x1]×[y0,y1] ∩ {|p − c| < r}`.
pub fn disk_box_area(c: [f64; 2], r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let (a, b) = (x0.max(c[0] - r) - c[0], x1.min(c[0] + r) - c[0]);
    if a >= b {
        return 0.0;
    }
    let (ly, uy) = (y0 - c[1], y1 - c[1]);
    let mut cuts = vec![a, b];
    for y in [ly, uy] {
        if y.abs() < r {
            let s = (r * r - y * y).sqrt();
            for x in [-s, s] {
                if x > a && x < b {
                    cuts.push(x);
                }
            }
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q <= p {
            continue;
        }
        let m = 0.5 * (p + q);
        let s = (r * r - m * m).max(0.0).sqrt();
        let upper_const = uy <= s;
        let lower_const = ly >= -s;
        let hi = if upper_const { uy } else { s };
        let lo = if lower_const { ly } else { -s };
        if hi <= lo {
            continue;
        }
        let arc = circle_primitive(q, r) - circle_primitive(p, r);
        let width = q - p;
        area += match (upper_const, lower_const) {
            (true, true) => (uy - ly) * width,
            (true, false) => uy * width + arc,
            (false, true) => arc - ly * width,
            (false, false) => 2.0 * arc,
        };
    }
    area
}

/// Adaptive Simpson quadrature.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 24)
}

/// Area of the intersection of a counter-clockwise polygon with a box.
fn polygon_box_area(poly: &[[f64; 2]], x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let mut pts: Vec<[f64; 2]> = poly.to_vec();
    let planes: [(usize, f64, f64); 4] = [(0, x0, 1.0), (0, x1, -1.0), (1, y0, 1.0), (1, y1, -1.0)];
    for (axis, bound, sign) in planes {
        if pts.is_empty() {
            break;
        }
        let inside = |p: &[f64; 2]| sign * (p[axis] - bound) >= 0.0;
        let mut out = Vec::with_capacity(pts.len() + 4);
        for i in 0..pts.len() {
            let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
            let (ip, iq) = (inside(&p), inside(&q));
            if ip {
                out.push(p);
            }
            if ip != iq {
                let t = (bound - p[axis]) / (q[axis] - p[axis]);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        pts = out;
    }
    if pts.len() < 3 {
        0.0
    } else {
        shoelace(&pts).abs()
    }
}

impl DomainSpec {
    pub fn ball(radius: f64, center: Vec<f64>) -> Result<Self, DomainError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(DomainError::Invalid(format!("ball radius must be positive, got {radius}")));
        }
        if !(2..=3).contains(&center.len()) {
            return Err(DomainError::Invalid(format!(
                "balls are supported in dimensions 2 and 3, got {}",
                center.len()
            )));
        }
        Ok(DomainSpec::Ball { radius, center })
    }

    pub fn rectangle(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, DomainError> {
        if lo.len() != hi.len() || !(2..=4).contains(&lo.len()) {
            return Err(DomainError::Invalid("rectangle corners must share a dimension in 2..=4".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(DomainError::Invalid("rectangle needs lo < hi in every coordinate".into()));
        }
        Ok(DomainSpec::Rectangle { lo, hi })
    }

    /// Simple polygon; clockwise input is reversed.
    pub fn star_polygon(mut vertices: Vec<[f64; 2]>) -> Result<Self, DomainError> {
        let m = vertices.len();
        if m < 3 {
            return Err(DomainError::Invalid("polygon needs at least 3 vertices".into()));
        }
        for i in 0..m {
            for j in i + 1..m {
                let adjacent = j == i + 1 || (i == 0 && j == m - 1);
                if vertices[i] == vertices[j] {
                    return Err(DomainError::Invalid(format!("repeated polygon vertex {}", i + 1)));
                }
                if !adjacent
                    && segments_intersect(vertices[i], vertices[(i + 1) % m], vertices[j], vertices[(j + 1) % m])
                {
                    return Err(DomainError::Invalid(format!("polygon edges {} and {} cross", i + 1, j + 1)));
                }
            }
        }
        if shoelace(&vertices) < 0.0 {
            vertices.reverse();
        }
        Ok(DomainSpec::StarPolygon { vertices })
    }

    pub fn annulus(r_in: f64, r_out: f64) -> Result<Self, DomainError> {
        if !(0.0 < r_in && r_in < r_out) {
            return Err(DomainError::Invalid(format!("annulus needs 0 < r_in < r_out, got {r_in}, {r_out}")));
        }
        Ok(DomainSpec::Annulus { r_in, r_out })
    }

    pub fn n(&self) -> usize {
        match self {
            DomainSpec::Ball { center, .. } => center.len(),
            DomainSpec::Rectangle { lo, .. } => lo.len(),
            DomainSpec::StarPolygon { .. } | DomainSpec::Annulus { .. } => 2,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DomainSpec::Ball { .. } => "ball",
            DomainSpec::Rectangle { .. } => "rectangle",
            DomainSpec::StarPolygon { .. } => "star_polygon",
            DomainSpec::Annulus { .. } => "annulus",
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            DomainSpec::Ball { radius, center } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            DomainSpec::Rectangle { lo, hi } => (lo.clone(), hi.clone()),
            DomainSpec::StarPolygon { vertices } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for d in 0..2 {
                        lo[d] = lo[d].min(v[d]);
                        hi[d] = hi[d].max(v[d]);
                    }
                }
                (lo, hi)
            }
            DomainSpec::Annulus { r_out, .. } => (vec![-r_out; 2], vec![*r_out; 2]),
        }
    }

    /// Negative inside, positive outside, zero on the boundary. Not a true
    /// distance for polygons away from the boundary, but sign-correct.
    pub fn level(&self, x: &[f64]) -> f64 {
        match self {
            DomainSpec::Ball { radius, center } => {
                x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt() - radius
            }
            DomainSpec::Rectangle { lo, hi } => {
                let mut m = f64::NEG_INFINITY;
                for d in 0..lo.len() {
                    m = m.max(lo[d] - x[d]).max(x[d] - hi[d]);
                }
                m
            }
            DomainSpec::StarPolygon { vertices } => {
                let p = [x[0], x[1]];
                let mut dist = f64::INFINITY;
                let mut winding = false;
                let m = vertices.len();
                for i in 0..m {
                    let (a, b) = (vertices[i], vertices[(i + 1) % m]);
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
                    let (qx, qy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
                    dist = dist.min((qx * qx + qy * qy).sqrt());
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let xc = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        if p[0] < xc {
                            winding = !winding;
                        }
                    }
                }
                if winding {
                    -dist
                } else {
                    dist
                }
            }
            DomainSpec::Annulus { r_in, r_out } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                (r - r_out).max(r_in - r)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.level(x) < 0.0
    }

    /// Smallest `θ ∈ (0, 1]` with `x + θ d` on the boundary, for `x` inside.
    pub fn crossing(&self, x: &[f64], d: &[f64]) -> Option<f64> {
        let best = |cands: &mut dyn Iterator<Item = f64>| {
            cands.filter(|t| *t > 0.0 && *t <= 1.0 + 1e-12).fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))))
        };
        let circle = |c: &[f64], r: f64| -> Vec<f64> {
            let p: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
            let a: f64 = d.iter().map(|v| v * v).sum();
            let b: f64 = 2.0 * p.iter().zip(d).map(|(u, v)| u * v).sum::<f64>();
            let cc: f64 = p.iter().map(|v| v * v).sum::<f64>() - r * r;
            let disc = b * b - 4.0 * a * cc;
            if disc < 0.0 {
                return vec![];
            }
            let s = disc.sqrt();
            let q = -0.5 * (b + b.signum() * s);
            let mut roots = vec![];
            if q != 0.0 {
                roots.push(cc / q);
                roots.push(q / a);
            } else {
                roots.push(s / (2.0 * a));
            }
            roots
        };
        let t = match self {
            DomainSpec::Ball { radius, center } => best(&mut circle(center, *radius).into_iter()),
            DomainSpec::Annulus { r_in, r_out } => {
                let o = [0.0, 0.0];
                let mut all = circle(&o, *r_out);
                all.extend(circle(&o, *r_in));
                best(&mut all.into_iter())
            }
            DomainSpec::Rectangle { lo, hi } => {
                let mut all = vec![];
                for k in 0..lo.len() {
                    if d[k] > 0.0 {
                        all.push((hi[k] - x[k]) / d[k]);
                    } else if d[k] < 0.0 {
                        all.push((lo[k] - x[k]) / d[k]);
                    }
                }
                best(&mut all.into_iter())
            }
            DomainSpec::StarPolygon { vertices } => {
                let m = vertices.len();
                let mut all = vec![];
                for i in 0..m {
                    let (a, b) = (vertices[i], vertices[(i + 1) % m]);
                    let e = [b[0] - a[0], b[1] - a[1]];
                    let den = d[0] * e[1] - d[1] * e[0];
                    if den.abs() < 1e-300 {
                        continue;
                    }
                    let w = [a[0] - x[0], a[1] - x[1]];
                    let t = (w[0] * e[1] - w[1] * e[0]) / den;
                    let s = (w[0] * d[1] - w[1] * d[0]) / den;
                    if (-1e-14..=1.0 + 1e-14).contains(&s) {
                        all.push(t);
                    }
                }
                best(&mut all.into_iter())
            }
        };
        t.map(|t| t.min(1.0))
    }

    /// Fraction of the box `lo + [0, h]ⁿ` lying in the domain.
    pub fn box_fraction(&self, lo: &[f64], h: f64) -> f64 {
        let n = self.n();
        let vol = h.powi(n as i32);
        let measure = match self {
            DomainSpec::Rectangle { lo: a, hi: b } => {
                let mut v = 1.0;
                for k in 0..n {
                    v *= (b[k].min(lo[k] + h) - a[k].max(lo[k])).max(0.0);
                }
                v
            }
            DomainSpec::Ball { radius, center } if n == 2 => {
                disk_box_area([center[0], center[1]], *radius, lo[0], lo[0] + h, lo[1], lo[1] + h)
            }
            DomainSpec::Ball { radius, center } => {
                let (r, c) = (*radius, center.clone());
                let (z0, z1) = ((lo[2]).max(c[2] - r), (lo[2] + h).min(c[2] + r));
                if z0 >= z1 {
                    return 0.0;
                }
                let slice = |z: f64| {
                    let rz = (r * r - (z - c[2]) * (z - c[2])).max(0.0).sqrt();
                    disk_box_area([c[0], c[1]], rz, lo[0], lo[0] + h, lo[1], lo[1] + h)
                };
                adaptive_simpson(&slice, z0, z1, 1e-11 * vol)
            }
            DomainSpec::Annulus { r_in, r_out } => {
                let (x0, x1, y0, y1) = (lo[0], lo[0] + h, lo[1], lo[1] + h);
                disk_box_area([0.0, 0.0], *r_out, x0, x1, y0, y1) - disk_box_area([0.0, 0.0], *r_in, x0, x1, y0, y1)
            }
            DomainSpec::StarPolygon { vertices } => polygon_box_area(vertices, lo[0], lo[0] + h, lo[1], lo[1] + h),
        };
        (measure / vol).clamp(0.0, 1.0)
    }

    /// Fraction of the square `p + [0,h] e_k + [0,h] e_l` lying in the domain.
    pub fn square_fraction(&self, p: &[f64], k: usize, l: usize, h: f64) -> f64 {
        let n = self.n();
        if n == 2 {
            return self.box_fraction(&p[..2], h);
        }
        let area = match self {
            DomainSpec::Rectangle { lo, hi } => {
                for m in 0..n {
                    if m != k && m != l && !(lo[m] <= p[m] && p[m] <= hi[m]) {
                        return 0.0;
                    }
                }
                let ov = |m: usize| (hi[m].min(p[m] + h) - lo[m].max(p[m])).max(0.0);
                ov(k) * ov(l)
            }
            DomainSpec::Ball { radius, center } => {
                let off: f64 = (0..n).filter(|&m| m != k && m != l).map(|m| (p[m] - center[m]).powi(2)).sum();
                let rz = (radius * radius - off).max(0.0).sqrt();
                disk_box_area([center[k], center[l]], rz, p[k], p[k] + h, p[l], p[l] + h)
            }
            _ => unreachable!("two-dimensional kinds handled above"),
        };
        (area / (h * h)).clamp(0.0, 1.0)
    }

    pub fn volume(&self) -> f64 {
        match self {
            DomainSpec::Ball { radius, center } => match center.len() {
                2 => PI * radius * radius,
                _ => 4.0 / 3.0 * PI * radius.powi(3),
            },
            DomainSpec::Rectangle { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            DomainSpec::StarPolygon { vertices } => shoelace(vertices),
            DomainSpec::Annulus { r_in, r_out } => PI * (r_out * r_out - r_in * r_in),
        }
    }

    pub fn boundary_measure(&self) -> f64 {
        match self {
            DomainSpec::Ball { radius, center } => match center.len() {
                2 => 2.0 * PI * radius,
                _ => 4.0 * PI * radius * radius,
            },
            DomainSpec::Rectangle { lo, hi } => {
                let n = lo.len();
                let sides: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
                (0..n).map(|k| 2.0 * sides.iter().enumerate().filter(|(m, _)| *m != k).map(|(_, s)| s).product::<f64>()).sum()
            }
            DomainSpec::StarPolygon { vertices } => {
                let m = vertices.len();
                (0..m)
                    .map(|i| {
                        let (a, b) = (vertices[i], vertices[(i + 1) % m]);
                        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
                    })
                    .sum()
            }
            DomainSpec::Annulus { r_in, r_out } => 2.0 * PI * (r_in + r_out),
        }
    }
}
