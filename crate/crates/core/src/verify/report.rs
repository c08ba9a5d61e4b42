use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use super::VerifyError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IdentityId {
    Pohozhaev,
    PohozhaevIsotropic,
    PohozhaevGeneralized,
    Morawetz,
    MorawetzFreespace,
    HamiltonianConformal,
}

impl IdentityId {
    pub const ALL: [IdentityId; 6] = [
        IdentityId::Pohozhaev,
        IdentityId::PohozhaevIsotropic,
        IdentityId::PohozhaevGeneralized,
        IdentityId::Morawetz,
        IdentityId::MorawetzFreespace,
        IdentityId::HamiltonianConformal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityId::Pohozhaev => "pohozhaev",
            IdentityId::PohozhaevIsotropic => "pohozhaev-isotropic",
            IdentityId::PohozhaevGeneralized => "pohozhaev-generalized",
            IdentityId::Morawetz => "morawetz",
            IdentityId::MorawetzFreespace => "morawetz-freespace",
            IdentityId::HamiltonianConformal => "hamiltonian-conformal",
        }
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, IdentityId::Morawetz | IdentityId::MorawetzFreespace | IdentityId::HamiltonianConformal)
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityId {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IdentityId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| VerifyError::Input(format!("unknown identity `{s}`")))
    }
}

/// Per-sample values of a dynamic identity check.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub m: Vec<f64>,
    pub dm_dt: Vec<f64>,
    pub rhs_interior: Vec<f64>,
    pub rhs_boundary: Vec<f64>,
    pub gap: Vec<f64>,
    pub energy: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,M,dM_dt_centered,rhs_interior,rhs_boundary,gap,energy\n");
        for i in 0..self.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                csv_float(self.t[i]),
                csv_float(self.m[i]),
                csv_float(self.dm_dt[i]),
                csv_float(self.rhs_interior[i]),
                csv_float(self.rhs_boundary[i]),
                csv_float(self.gap[i]),
                csv_float(self.energy[i])
            );
        }
        s
    }
}

/// Both sides of one identity at one resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub id: IdentityId,
    pub h: f64,
    pub dt: Option<f64>,
    /// For time series: the values at the sample with the largest gap.
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub scale: f64,
    pub relative_gap: f64,
    /// Right side from the printed coefficients, where they differ from the derived ones.
    pub reference_rhs: Option<f64>,
    pub series: Option<TimeSeries>,
    /// Filled in by a refinement study.
    pub order: Option<f64>,
    pub notes: Vec<String>,
}

impl IdentityReport {
    pub fn new(id: IdentityId, h: f64, lhs: f64, rhs: f64, energy_scale: f64) -> Self {
        let gap = (lhs - rhs).abs();
        let scale = nonzero_scale(lhs.abs().max(rhs.abs()).max(energy_scale.abs()));
        IdentityReport {
            id,
            h,
            dt: None,
            lhs,
            rhs,
            gap,
            scale,
            relative_gap: gap / scale,
            reference_rhs: None,
            series: None,
            order: None,
            notes: Vec::new(),
        }
    }

    pub const CSV_HEADER: &'static str = "identity,h,dt,lhs,rhs,gap,relative_gap,order";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.id,
            csv_float(self.h),
            self.dt.map(csv_float).unwrap_or_default(),
            csv_float(self.lhs),
            csv_float(self.rhs),
            csv_float(self.gap),
            csv_float(self.relative_gap),
            self.order.map(csv_float).unwrap_or_default()
        )
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "identity      {}", self.id)?;
        write!(f, "h             {}", self.h)?;
        if let Some(dt) = self.dt {
            write!(f, "   dt {dt}")?;
        }
        writeln!(f)?;
        writeln!(f, "lhs           {:.10e}", self.lhs)?;
        writeln!(f, "rhs           {:.10e}", self.rhs)?;
        if let Some(r) = self.reference_rhs {
            writeln!(f, "printed rhs   {r:.10e}")?;
        }
        writeln!(f, "gap           {:.3e}", self.gap)?;
        writeln!(f, "scale         {:.3e}", self.scale)?;
        write!(f, "relative gap  {:.3e}", self.relative_gap)?;
        if let Some(o) = self.order {
            write!(f, "\nobserved order {o:.2}")?;
        }
        for note in &self.notes {
            write!(f, "\nnote: {note}")?;
        }
        Ok(())
    }
}

/// Floats in the CSV dialect: 17 significant digits.
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn nonzero_scale(s: f64) -> f64 {
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

/// Relative gaps over a sequence of resolutions.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub reports: Vec<IdentityReport>,
    /// Pairwise orders `log(gap_i/gap_{i+1}) / log(h_i/h_{i+1})`.
    pub pairwise_orders: Vec<f64>,
    /// Least-squares slope of `log gap` against `log h`.
    pub fitted_order: f64,
    pub monotone: bool,
}

impl Refinement {
    pub fn new(mut reports: Vec<IdentityReport>) -> Self {
        let pairwise_orders: Vec<f64> = reports
            .windows(2)
            .map(|w| (w[0].relative_gap / w[1].relative_gap).ln() / (w[0].h / w[1].h).ln())
            .collect();
        let monotone = reports.windows(2).all(|w| w[1].relative_gap < w[0].relative_gap);
        let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.h.ln(), r.relative_gap.ln())).collect();
        let fitted_order = slope(&pts);
        for (i, r) in reports.iter_mut().enumerate().skip(1) {
            r.order = Some(pairwise_orders[i - 1]);
        }
        Refinement { reports, pairwise_orders, fitted_order, monotone }
    }

    /// Pass rule: relative gap within `tol` at the coarsest resolution,
    /// monotone decrease, and fitted order at least `min_order`.
    pub fn passes(&self, tol: f64, min_order: f64) -> bool {
        self.reports.len() >= 2
            && self.monotone
            && self.fitted_order >= min_order
            && self.reports[0].relative_gap <= tol
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(IdentityReport::CSV_HEADER);
        s.push('\n');
        for r in &self.reports {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}
