//! Cosine-series solutions on a bounded interval with zero-flux boundaries.
//!
//! Both bases use `cos(n k₁ (x - x_a))`, with `k₁ = π / L` (full Neumann
//! basis) or `k₁ = 2π / L` (even-only basis, which spans profiles symmetric
//! about the midpoint). A series is `A_0 / 2 + Σ A_n cos(n k₁ (x - x_a))`.
//!
//! The local solution multiplies the decaying heat series by the a-spatial
//! integrating factor. The global solution solves each mode of the coupled
//! optimality system exactly (see [`ModeSolution`]).

use std::f64::consts::PI;

use crate::aspatial::{tau_star, tax_integral};
use crate::error::{Error, Result};
use crate::grid::{Grid, PointSolution, Provenance, SolutionField};
use crate::matexp::{terminal_coupling, MatExp2, ModeSolution};
use crate::model::{InitialProfile, ModelParams, SpatialDomain};
use crate::par::Execution;
use crate::quadrature::simpson;

/// Default truncation of the series.
pub const DEFAULT_MODES: usize = 64;

/// Minimum quadrature sample count for coefficient projection.
pub const MIN_QUADRATURE_POINTS: usize = 801;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CosineBasis {
    /// Modes `cos(2nπ(x - x_a)/L)`.
    PaperEven,
    /// Modes `cos(nπ(x - x_a)/L)`.
    #[default]
    FullNeumann,
}

impl CosineBasis {
    /// Fundamental wavenumber `k₁` on an interval of length `len`.
    pub fn fundamental(&self, len: f64) -> f64 {
        match self {
            CosineBasis::PaperEven => 2.0 * PI / len,
            CosineBasis::FullNeumann => PI / len,
        }
    }
}

/// `Σ c_n cos(nθ)` by Clenshaw recurrence.
fn cos_sum(coeffs: &[f64], theta: f64) -> f64 {
    let c = theta.cos();
    let (mut b1, mut b2) = (0.0, 0.0);
    for &a in coeffs.iter().skip(1).rev() {
        let b0 = a + 2.0 * c * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or(0.0) + b1 * c - b2
}

/// `Σ c_n sin(nθ)` by Clenshaw recurrence.
fn sin_sum(coeffs: &[f64], theta: f64) -> f64 {
    let c = theta.cos();
    let (mut b1, mut b2) = (0.0, 0.0);
    for &a in coeffs.iter().skip(1).rev() {
        let b0 = a + 2.0 * c * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    b1 * theta.sin()
}

/// Truncated cosine expansion of a profile on `[x_a, x_a + L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    pub basis: CosineBasis,
    pub x_a: f64,
    pub len: f64,
    /// `A_0, A_1, ..., A_N`.
    pub coeffs: Vec<f64>,
    /// `sup |p0 - series|` on the projection nodes.
    pub reconstruction_error: f64,
}

impl CosineSeries {
    pub fn modes(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn fundamental(&self) -> f64 {
        self.basis.fundamental(self.len)
    }

    /// Squared wavenumber of mode `n`.
    pub fn k2(&self, n: usize) -> f64 {
        let k = n as f64 * self.fundamental();
        k * k
    }

    fn phase(&self, x: f64) -> f64 {
        self.fundamental() * (x - self.x_a)
    }

    /// Amplitudes with the `A_0 / 2` convention folded in.
    pub fn amplitudes(&self) -> Vec<f64> {
        let mut a = self.coeffs.clone();
        a[0] *= 0.5;
        a
    }

    pub fn eval(&self, x: f64) -> f64 {
        cos_sum(&self.amplitudes(), self.phase(x))
    }

    /// `d/dx` of the series.
    pub fn derivative(&self, x: f64) -> f64 {
        let k1 = self.fundamental();
        let w: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, a)| -a * n as f64 * k1)
            .collect();
        sin_sum(&w, self.phase(x))
    }

    /// Heat-equation evolution `Σ A_n e^{-d k_n² t} cos(...)`.
    pub fn eval_heat(&self, x: f64, d: f64, t: f64) -> f64 {
        let w: Vec<f64> = self
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(n, a)| a * (-d * self.k2(n) * t).exp())
            .collect();
        cos_sum(&w, self.phase(x))
    }

    /// Evaluates `Σ w_n cos(n k₁ (x - x_a))` for caller-supplied weights.
    pub fn eval_weighted(&self, weights: &[f64], x: f64) -> f64 {
        cos_sum(weights, self.phase(x))
    }
}

fn bounded_extent(domain: &SpatialDomain) -> Result<(f64, f64)> {
    match *domain {
        SpatialDomain::Bounded { x_a, x_b } => Ok((x_a, x_b)),
        SpatialDomain::Unbounded { .. } => Err(Error::DomainMismatch(
            "cosine series need a bounded domain".into(),
        )),
    }
}

/// Projects `profile` onto the first `n_modes + 1` basis functions.
pub fn cosine_coeffs(
    profile: &InitialProfile,
    domain: &SpatialDomain,
    basis: CosineBasis,
    n_modes: usize,
) -> Result<CosineSeries> {
    let nq = (64 * n_modes + 1).max(4001);
    cosine_coeffs_with(profile, domain, basis, n_modes, nq)
}

/// As [`cosine_coeffs`] with an explicit quadrature sample count (made odd, at least 801).
pub fn cosine_coeffs_with(
    profile: &InitialProfile,
    domain: &SpatialDomain,
    basis: CosineBasis,
    n_modes: usize,
    quad_points: usize,
) -> Result<CosineSeries> {
    profile.validate()?;
    let (x_a, x_b) = bounded_extent(domain)?;
    if n_modes < 1 {
        return Err(Error::InvalidParameter {
            name: "modes",
            reason: "truncation must be >= 1".into(),
        });
    }
    let nq = quad_points.max(MIN_QUADRATURE_POINTS) | 1;
    let len = x_b - x_a;
    let h = len / (nq - 1) as f64;
    let xs: Vec<f64> = (0..nq).map(|i| x_a + i as f64 * h).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| profile.eval(x)).collect();
    let k1 = basis.fundamental(len);
    let coeffs: Vec<f64> = (0..=n_modes)
        .map(|n| {
            let f: Vec<f64> = xs
                .iter()
                .zip(&vals)
                .map(|(&x, v)| v * (n as f64 * k1 * (x - x_a)).cos())
                .collect();
            2.0 / len * simpson(&f, h)
        })
        .collect();
    let mut series = CosineSeries {
        basis,
        x_a,
        len,
        coeffs,
        reconstruction_error: 0.0,
    };
    let amps = series.amplitudes();
    series.reconstruction_error = xs
        .iter()
        .zip(&vals)
        .step_by(((nq - 1) / 800).max(1))
        .map(|(&x, v)| (v - series.eval_weighted(&amps, x)).abs())
        .fold(0.0, f64::max);
    Ok(series)
}

fn check_grid(grid: &Grid, x_a: f64, x_b: f64, params: &ModelParams) -> Result<()> {
    let pos = grid.positions();
    let slack = 1e-12 * (x_b - x_a);
    if pos[0] < x_a - slack || pos[pos.len() - 1] > x_b + slack {
        return Err(Error::DomainMismatch(format!(
            "grid [{}, {}] leaves the domain [{x_a}, {x_b}]",
            pos[0],
            pos[pos.len() - 1]
        )));
    }
    if (grid.horizon() - params.horizon).abs() > 1e-9 * params.horizon {
        return Err(Error::InvalidGrid(format!(
            "grid ends at {} but the horizon is {}",
            grid.horizon(),
            params.horizon
        )));
    }
    Ok(())
}

/// Locally optimal field: every location applies the a-spatial tax.
#[derive(Debug, Clone)]
pub struct LocalBounded {
    params: ModelParams,
    profile: InitialProfile,
    series: CosineSeries,
}

impl LocalBounded {
    pub fn new(
        params: &ModelParams,
        domain: &SpatialDomain,
        profile: &InitialProfile,
        basis: CosineBasis,
        n_modes: usize,
    ) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params: *params,
            profile: profile.clone(),
            series: cosine_coeffs(profile, domain, basis, n_modes)?,
        })
    }

    pub fn series(&self) -> &CosineSeries {
        &self.series
    }

    fn heat_weights(&self, t: f64) -> Vec<f64> {
        let d = self.params.diffusivity;
        self.series
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(n, a)| a * (-d * self.series.k2(n) * t).exp())
            .collect()
    }
}

impl PointSolution for LocalBounded {
    fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        let mut p = [0.0];
        let mut u = [0.0];
        self.eval_row(t, &[x], &mut p, &mut u);
        (p[0], u[0])
    }

    fn provenance(&self) -> Provenance {
        Provenance::SpectralLocal
    }

    fn eval_row(&self, t: f64, xs: &[f64], p: &mut [f64], u: &mut [f64]) {
        let factor = tax_integral(&self.params, t).exp();
        let tau = tau_star(&self.params, t);
        let exact = self.params.diffusivity * t == 0.0;
        let w = self.heat_weights(t);
        for (i, &x) in xs.iter().enumerate() {
            let h = if exact {
                self.profile.eval(x)
            } else {
                self.series.eval_weighted(&w, x)
            };
            p[i] = factor * h;
            u[i] = tau * p[i];
        }
    }
}

/// Globally optimal field, solved mode by mode.
#[derive(Debug, Clone)]
pub struct GlobalBounded {
    profile: InitialProfile,
    series: CosineSeries,
    modes: Vec<ModeSolution>,
}

impl GlobalBounded {
    pub fn new(
        params: &ModelParams,
        domain: &SpatialDomain,
        profile: &InitialProfile,
        basis: CosineBasis,
        n_modes: usize,
    ) -> Result<Self> {
        params.validate()?;
        let series = cosine_coeffs(profile, domain, basis, n_modes)?;
        let modes = (0..=n_modes)
            .map(|n| ModeSolution::new(params, series.k2(n)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            profile: profile.clone(),
            series,
            modes,
        })
    }

    pub fn series(&self) -> &CosineSeries {
        &self.series
    }

    fn weights(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        self.series
            .amplitudes()
            .iter()
            .zip(&self.modes)
            .map(|(a, m)| {
                let z = m.at(t);
                (a * z[0], a * z[1])
            })
            .unzip()
    }
}

impl PointSolution for GlobalBounded {
    fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        let mut p = [0.0];
        let mut u = [0.0];
        self.eval_row(t, &[x], &mut p, &mut u);
        (p[0], u[0])
    }

    fn provenance(&self) -> Provenance {
        Provenance::SpectralGlobal
    }

    fn eval_row(&self, t: f64, xs: &[f64], p: &mut [f64], u: &mut [f64]) {
        let (wp, wu) = self.weights(t);
        for (i, &x) in xs.iter().enumerate() {
            // initial data is imposed exactly; the series converges slowly there
            p[i] = if t == 0.0 {
                self.profile.eval(x)
            } else {
                self.series.eval_weighted(&wp, x)
            };
            u[i] = self.series.eval_weighted(&wu, x);
        }
    }
}

/// The global pair as typeset: `e^{Θt}` applied to the forward heat series
/// and to a backward series with `B_n = κ A_n e^{-d k_n² T}`. It solves the
/// optimality system only for spatially constant data; diagnostic only.
#[derive(Debug, Clone)]
pub struct PrintedGlobalBounded {
    params: ModelParams,
    series: CosineSeries,
    exp: MatExp2,
    kappa: f64,
}

impl PrintedGlobalBounded {
    pub fn new(
        params: &ModelParams,
        domain: &SpatialDomain,
        profile: &InitialProfile,
        basis: CosineBasis,
        n_modes: usize,
    ) -> Result<Self> {
        params.validate()?;
        let exp = MatExp2::new(params);
        let kappa = terminal_coupling(params, &exp.at(params.horizon))?;
        Ok(Self {
            params: *params,
            series: cosine_coeffs(profile, domain, basis, n_modes)?,
            exp,
            kappa,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `B_0, ..., B_N`.
    pub fn b_coefficients(&self) -> Vec<f64> {
        let (d, big_t) = (self.params.diffusivity, self.params.horizon);
        self.series
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, a)| self.kappa * a * (-d * self.series.k2(n) * big_t).exp())
            .collect()
    }
}

impl PointSolution for PrintedGlobalBounded {
    fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        let (d, big_t) = (self.params.diffusivity, self.params.horizon);
        let b = self.b_coefficients();
        let (mut wa, mut wb): (Vec<f64>, Vec<f64>) = self
            .series
            .coeffs
            .iter()
            .zip(&b)
            .enumerate()
            .map(|(n, (a, b))| {
                let k2 = self.series.k2(n);
                (a * (-d * k2 * t).exp(), b * (-d * k2 * (big_t - t)).exp())
            })
            .unzip();
        wa[0] *= 0.5;
        wb[0] *= 0.5;
        let z0 = self.series.eval_weighted(&wa, x);
        let z1 = self.series.eval_weighted(&wb, x);
        let z = self.exp.at(t).apply([z0, z1]);
        (z[0], z[1])
    }

    fn provenance(&self) -> Provenance {
        Provenance::PrintedClosedForm
    }
}

/// Local field on `grid` with the default basis and truncation.
pub fn local_solution_bounded(
    params: &ModelParams,
    domain: &SpatialDomain,
    profile: &InitialProfile,
    grid: &Grid,
    exec: Execution,
) -> Result<SolutionField> {
    let (x_a, x_b) = bounded_extent(domain)?;
    check_grid(grid, x_a, x_b, params)?;
    let sol = LocalBounded::new(params, domain, profile, CosineBasis::default(), DEFAULT_MODES)?;
    Ok(sol.sample(grid, exec))
}

/// Global field on `grid` with `n_modes` full-Neumann modes.
pub fn global_solution_bounded(
    params: &ModelParams,
    domain: &SpatialDomain,
    profile: &InitialProfile,
    grid: &Grid,
    n_modes: usize,
    exec: Execution,
) -> Result<SolutionField> {
    let (x_a, x_b) = bounded_extent(domain)?;
    check_grid(grid, x_a, x_b, params)?;
    let sol = GlobalBounded::new(params, domain, profile, CosineBasis::default(), n_modes)?;
    Ok(sol.sample(grid, exec))
}

/// Typeset global pair on `grid`; diagnostic only.
pub fn printed_global_bounded(
    params: &ModelParams,
    domain: &SpatialDomain,
    profile: &InitialProfile,
    grid: &Grid,
    n_modes: usize,
    exec: Execution,
) -> Result<SolutionField> {
    let (x_a, x_b) = bounded_extent(domain)?;
    check_grid(grid, x_a, x_b, params)?;
    let sol = PrintedGlobalBounded::new(params, domain, profile, CosineBasis::default(), n_modes)?;
    Ok(sol.sample(grid, exec))
}
