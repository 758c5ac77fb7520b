//! Uniform space-time grids and sampled solution fields.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{ModelParams, SpatialDomain};

const UNIFORM_RTOL: f64 = 1e-12;

/// Uniform tensor grid over `[0, T] x [x_lo, x_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    times: Vec<f64>,
    positions: Vec<f64>,
}

impl Grid {
    /// Validates monotonicity and uniform spacing of both axes.
    pub fn new(times: Vec<f64>, positions: Vec<f64>) -> Result<Self> {
        check_axis("times", &times, 2)?;
        check_axis("positions", &positions, 3)?;
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "times must start at 0, got {}",
                times[0]
            )));
        }
        Ok(Self { times, positions })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn nt(&self) -> usize {
        self.times.len()
    }

    pub fn nx(&self) -> usize {
        self.positions.len()
    }

    pub fn len(&self) -> usize {
        self.nt() * self.nx()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn dx(&self) -> f64 {
        self.positions[1] - self.positions[0]
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.nt() - 1]
    }

    /// Flat index in time-major layout (space contiguous).
    #[inline]
    pub fn index(&self, it: usize, ix: usize) -> usize {
        it * self.nx() + ix
    }

    /// Same time axis, `nx` positions across `[lo, hi]`.
    pub fn with_positions(&self, lo: f64, hi: f64, nx: usize) -> Result<Self> {
        Grid::new(self.times.clone(), linspace(lo, hi, nx))
    }
}

fn check_axis(name: &str, v: &[f64], min_len: usize) -> Result<()> {
    if v.len() < min_len {
        return Err(Error::InvalidGrid(format!(
            "{name} needs at least {min_len} samples, got {}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid(format!("{name} contains non-finite values")));
    }
    let h = v[1] - v[0];
    if h <= 0.0 {
        return Err(Error::InvalidGrid(format!("{name} must be strictly increasing")));
    }
    let span = v[v.len() - 1] - v[0];
    for (i, w) in v.windows(2).enumerate() {
        let step = w[1] - w[0];
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("{name} must be strictly increasing")));
        }
        // spacing checked against the ideal node position to avoid drift tolerance
        let ideal = v[0] + (i + 1) as f64 * span / (v.len() - 1) as f64;
        if (w[1] - ideal).abs() > UNIFORM_RTOL * span.abs().max(v[0].abs()).max(1.0) * 16.0 {
            return Err(Error::InvalidGrid(format!(
                "{name} is not uniformly spaced (node {} off by {:e})",
                i + 1,
                w[1] - ideal
            )));
        }
    }
    Ok(())
}

/// `n` evenly spaced samples with exact endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * h })
        .collect()
}

/// Uniform grid over the domain (or its reporting window) and `[0, T]`.
pub fn make_grid(domain: &SpatialDomain, params: &ModelParams, nx: usize, nt: usize) -> Result<Grid> {
    domain.validate()?;
    if nx < 3 {
        return Err(Error::InvalidGrid(format!("nx must be >= 3, got {nx}")));
    }
    if nt < 2 {
        return Err(Error::InvalidGrid(format!("nt must be >= 2, got {nt}")));
    }
    if !(params.horizon > 0.0) {
        return Err(Error::InvalidGrid("horizon must be > 0".into()));
    }
    let (lo, hi) = domain.extent();
    Grid::new(linspace(0.0, params.horizon, nt), linspace(lo, hi, nx))
}

/// Which solver produced a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    AspatialClosedForm,
    SpectralLocal,
    SpectralGlobal,
    GreensLocal,
    GreensGlobal,
    FdOracleLocal,
    FdOracleGlobal,
    /// Diagnostic evaluation of a printed closed form that is not an exact solution.
    PrintedClosedForm,
    /// Forward solve under an externally supplied tax schedule.
    FdOracleForward,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::AspatialClosedForm => "aspatial",
            Provenance::SpectralLocal => "spectral_local",
            Provenance::SpectralGlobal => "spectral_global",
            Provenance::GreensLocal => "greens_local",
            Provenance::GreensGlobal => "greens_global",
            Provenance::FdOracleLocal => "oracle_local",
            Provenance::FdOracleGlobal => "oracle_global",
            Provenance::PrintedClosedForm => "printed",
            Provenance::FdOracleForward => "oracle_forward",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative floor below which the tax `u / p` is reported as absent.
pub const TAX_GUARD: f64 = 1e-12;

/// Pollution, abatement and tax sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub grid: Grid,
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    /// `u / p`, or `None` where `p` is below the guard.
    pub tau: Vec<Option<f64>>,
    pub provenance: Provenance,
}

impl SolutionField {
    /// Builds the tax from `u / p`, absent where `p <= TAX_GUARD * max p(., 0)`.
    pub fn from_pu(grid: Grid, p: Vec<f64>, u: Vec<f64>, provenance: Provenance) -> Self {
        assert_eq!(p.len(), grid.len());
        assert_eq!(u.len(), grid.len());
        let p0_max = p[..grid.nx()].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let floor = TAX_GUARD * p0_max;
        let tau = p
            .iter()
            .zip(&u)
            .map(|(&pv, &uv)| if pv > floor { Some(uv / pv) } else { None })
            .collect();
        Self {
            grid,
            p,
            u,
            tau,
            provenance,
        }
    }

    pub fn p_at(&self, it: usize, ix: usize) -> f64 {
        self.p[self.grid.index(it, ix)]
    }

    pub fn u_at(&self, it: usize, ix: usize) -> f64 {
        self.u[self.grid.index(it, ix)]
    }

    pub fn tau_at(&self, it: usize, ix: usize) -> Option<f64> {
        self.tau[self.grid.index(it, ix)]
    }

    /// Spatial slice of `p` at time index `it`.
    pub fn p_row(&self, it: usize) -> &[f64] {
        let nx = self.grid.nx();
        &self.p[it * nx..(it + 1) * nx]
    }

    pub fn u_row(&self, it: usize) -> &[f64] {
        let nx = self.grid.nx();
        &self.u[it * nx..(it + 1) * nx]
    }

    pub fn tau_row(&self, it: usize) -> &[Option<f64>] {
        let nx = self.grid.nx();
        &self.tau[it * nx..(it + 1) * nx]
    }

    pub fn p_sup(&self) -> f64 {
        self.p.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Smallest reported tax over the grid.
    pub fn tau_min(&self) -> Option<f64> {
        self.tau.iter().flatten().copied().reduce(f64::min)
    }

    /// `max |a - b| / max(‖a‖∞, ‖b‖∞)` over `p` and `u` jointly.
    pub fn relative_gap(&self, other: &SolutionField) -> f64 {
        assert_eq!(self.grid.len(), other.grid.len());
        let scale = self.p_sup().max(other.p_sup()).max(f64::MIN_POSITIVE);
        let gp = max_abs_diff(&self.p, &other.p);
        let gu = max_abs_diff(&self.u, &other.u);
        gp.max(gu) / scale
    }

    /// Relative gap in `p` alone.
    pub fn relative_gap_p(&self, other: &SolutionField) -> f64 {
        let scale = self.p_sup().max(other.p_sup()).max(f64::MIN_POSITIVE);
        max_abs_diff(&self.p, &other.p) / scale
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(&self.u).all(|v| v.is_finite())
            && self.tau.iter().flatten().all(|v| v.is_finite())
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// A solution that can be evaluated at any `(x, t)`.
pub trait PointSolution: Sync {
    /// `(p, u)` at position `x` and time `t`.
    fn eval(&self, x: f64, t: f64) -> (f64, f64);

    fn provenance(&self) -> Provenance;

    /// Fills one time row; implementors override this to reuse per-time work.
    fn eval_row(&self, t: f64, xs: &[f64], p: &mut [f64], u: &mut [f64]) {
        for (i, &x) in xs.iter().enumerate() {
            let (pv, uv) = self.eval(x, t);
            p[i] = pv;
            u[i] = uv;
        }
    }

    /// Samples the solution on `grid`, one time row per work item.
    fn sample(&self, grid: &Grid, exec: crate::par::Execution) -> SolutionField {
        let nx = grid.nx();
        let mut buf = vec![0.0; 2 * grid.len()];
        crate::par::for_each_chunk(exec, &mut buf, 2 * nx, |it, row| {
            let (p, u) = row.split_at_mut(nx);
            self.eval_row(grid.times()[it], grid.positions(), p, u);
        });
        let mut p = Vec::with_capacity(grid.len());
        let mut u = Vec::with_capacity(grid.len());
        for row in buf.chunks(2 * nx) {
            p.extend_from_slice(&row[..nx]);
            u.extend_from_slice(&row[nx..]);
        }
        SolutionField::from_pu(grid.clone(), p, u, self.provenance())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let params = ModelParams::paper_2015();
        let g = make_grid(&SpatialDomain::bounded(-1.0, 1.0).unwrap(), &params, 5, 4).unwrap();
        assert_eq!(g.positions(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.times(), &[0.0, 10.0, 20.0, 30.0]);
        let g = make_grid(&SpatialDomain::unbounded(3.0).unwrap(), &params, 7, 2).unwrap();
        assert_eq!(g.positions(), &[-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(*g.positions().last().unwrap(), 3.0);
    }

    #[test]
    fn grid_rejects_bad_counts() {
        let params = ModelParams::paper_2015();
        let d = SpatialDomain::bounded(-1.0, 1.0).unwrap();
        assert!(make_grid(&d, &params, 2, 4).is_err());
        assert!(make_grid(&d, &params, 0, 4).is_err());
        assert!(make_grid(&d, &params, 5, 1).is_err());
    }

    #[test]
    fn grid_rejects_nonuniform() {
        assert!(Grid::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.5]).is_err());
        assert!(Grid::new(vec![0.0, 1.0, 3.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(Grid::new(vec![0.5, 1.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(Grid::new(vec![0.0, 1.0], vec![0.0, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn tax_guard() {
        let g = Grid::new(vec![0.0, 1.0], vec![0.0, 1.0, 2.0]).unwrap();
        let p = vec![1.0, 2.0, 4.0, 1.0, 1e-14, 0.0];
        let u = vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5];
        let f = SolutionField::from_pu(g, p, u, Provenance::SpectralLocal);
        assert_eq!(f.tau_at(0, 2), Some(0.125));
        assert_eq!(f.tau_at(1, 1), None);
        assert_eq!(f.tau_at(1, 2), None);
        assert_eq!(f.tau_min(), Some(0.125));
    }
}
