//! Solutions on the real line.
//!
//! The heat kernel `(4π d t)^{-1/2} e^{-(x-y)²/(4dt)}` smooths the initial
//! profile; [`KernelEvaluator`] computes that convolution by Gauss–Hermite
//! quadrature, adaptive quadrature, or as the expectation
//! `E[p0(x + sqrt(2dt) Z)]` by Monte Carlo.
//!
//! The local solution is the integrating factor times the smoothed profile.
//! The global solution is assembled by Fourier inversion of the exact
//! per-wavenumber solutions of the coupled optimality system.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::aspatial::{tau_star, tax_integral};
use crate::error::{Error, Result};
use crate::grid::{Grid, PointSolution, Provenance, SolutionField};
use crate::matexp::{terminal_coupling, MatExp2, ModeSolution};
use crate::model::{InitialProfile, ModelParams};
use crate::par::Execution;
use crate::quadrature::{adaptive_simpson, gauss_hermite, gauss_legendre};

/// Fewest Monte Carlo samples accepted.
pub const MIN_MC_SAMPLES: usize = 1000;

const DEFAULT_GH_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelMethod {
    GaussHermite { order: usize },
    Adaptive { tol: f64 },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for KernelMethod {
    fn default() -> Self {
        KernelMethod::GaussHermite {
            order: DEFAULT_GH_ORDER,
        }
    }
}

/// A kernel integral and, for Monte Carlo, its estimated standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convolution {
    pub value: f64,
    pub std_error: f64,
}

/// Heat-kernel smoother with cached quadrature nodes.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    diffusivity: f64,
    method: KernelMethod,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl KernelEvaluator {
    pub fn new(diffusivity: f64, method: KernelMethod) -> Result<Self> {
        if !(diffusivity.is_finite() && diffusivity >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "diffusivity",
                reason: format!("must be finite and >= 0, got {diffusivity}"),
            });
        }
        let (nodes, weights) = match method {
            KernelMethod::GaussHermite { order } => {
                if order == 0 {
                    return Err(Error::InvalidParameter {
                        name: "order",
                        reason: "Gauss-Hermite order must be >= 1".into(),
                    });
                }
                let (x, w) = gauss_hermite(order);
                let norm = 1.0 / PI.sqrt();
                (x, w.into_iter().map(|w| w * norm).collect())
            }
            KernelMethod::Adaptive { tol } => {
                if !(tol > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "tol",
                        reason: "must be > 0".into(),
                    });
                }
                (Vec::new(), Vec::new())
            }
            KernelMethod::MonteCarlo { samples, .. } => {
                if samples < MIN_MC_SAMPLES {
                    return Err(Error::TooFewSamples {
                        min: MIN_MC_SAMPLES,
                        got: samples,
                    });
                }
                (Vec::new(), Vec::new())
            }
        };
        Ok(Self {
            diffusivity,
            method,
            nodes,
            weights,
        })
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    /// Smoothed profile at `(x, t)`; `t = 0` returns the profile itself.
    pub fn convolve(&self, profile: &InitialProfile, t: f64, x: f64) -> Result<Convolution> {
        let dt = self.diffusivity * t;
        if dt <= 0.0 {
            return Ok(Convolution {
                value: profile.eval(x),
                std_error: 0.0,
            });
        }
        match self.method {
            KernelMethod::GaussHermite { .. } => {
                let scale = 2.0 * dt.sqrt();
                let value = self
                    .nodes
                    .iter()
                    .zip(&self.weights)
                    .map(|(s, w)| w * profile.eval(x + scale * s))
                    .sum();
                Ok(Convolution {
                    value,
                    std_error: 0.0,
                })
            }
            KernelMethod::Adaptive { tol } => {
                let scale = 2.0 * dt.sqrt();
                let norm = 1.0 / PI.sqrt();
                let (lo, hi) = profile.range();
                let f = |s: f64| norm * (-s * s).exp() * profile.eval(x + scale * s);
                // e^{-81} is far below any useful tolerance
                let (value, _) = adaptive_simpson(&f, -9.0, 9.0, tol * hi.abs().max(lo.abs()))?;
                Ok(Convolution {
                    value,
                    std_error: 0.0,
                })
            }
            KernelMethod::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(point_stream(x, t));
                let scale = (2.0 * dt).sqrt();
                let (mut mean, mut m2) = (0.0, 0.0);
                for i in 0..samples {
                    let z: f64 = rng.sample(StandardNormal);
                    let v = profile.eval(x + scale * z);
                    let delta = v - mean;
                    mean += delta / (i + 1) as f64;
                    m2 += delta * (v - mean);
                }
                let var = m2 / (samples - 1) as f64;
                Ok(Convolution {
                    value: mean,
                    std_error: (var / samples as f64).sqrt(),
                })
            }
        }
    }
}

/// Stream id derived from the evaluation point so results do not depend on
/// evaluation order.
fn point_stream(x: f64, t: f64) -> u64 {
    let mut h = x.to_bits() ^ t.to_bits().rotate_left(29) ^ 0x9E37_79B9_7F4A_7C15;
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h
}

/// One-shot convolution; build a [`KernelEvaluator`] for repeated use.
pub fn heat_convolve(
    profile: &InitialProfile,
    d: f64,
    t: f64,
    x: f64,
    method: KernelMethod,
) -> Result<Convolution> {
    KernelEvaluator::new(d, method)?.convolve(profile, t, x)
}

/// Kernel-smoothed terminal value of the costate-side component,
/// `κ · (p0 smoothed to T)`.
#[derive(Debug, Clone)]
pub struct TerminalCoupling {
    pub kappa: f64,
    horizon: f64,
    profile: InitialProfile,
    kernel: KernelEvaluator,
}

impl TerminalCoupling {
    pub fn new(params: &ModelParams, profile: &InitialProfile, method: KernelMethod) -> Result<Self> {
        let kappa = terminal_coupling(params, &MatExp2::new(params).at(params.horizon))?;
        Ok(Self {
            kappa,
            horizon: params.horizon,
            profile: profile.clone(),
            kernel: KernelEvaluator::new(params.diffusivity, method)?,
        })
    }

    /// Value at `x`, smoothed for a further `extra` time units.
    pub fn eval(&self, x: f64, extra: f64) -> Result<f64> {
        Ok(self.kappa * self.kernel.convolve(&self.profile, self.horizon + extra, x)?.value)
    }
}

/// Locally optimal field on the line.
#[derive(Debug, Clone)]
pub struct LocalUnbounded {
    params: ModelParams,
    profile: InitialProfile,
    kernel: KernelEvaluator,
}

impl LocalUnbounded {
    pub fn new(params: &ModelParams, profile: &InitialProfile, method: KernelMethod) -> Result<Self> {
        params.validate()?;
        profile.validate()?;
        Ok(Self {
            params: *params,
            profile: profile.clone(),
            kernel: KernelEvaluator::new(params.diffusivity, method)?,
        })
    }

    fn try_row(&self, t: f64, xs: &[f64], p: &mut [f64], u: &mut [f64]) -> Result<()> {
        let factor = tax_integral(&self.params, t).exp();
        let tau = tau_star(&self.params, t);
        for (i, &x) in xs.iter().enumerate() {
            p[i] = factor * self.kernel.convolve(&self.profile, t, x)?.value;
            u[i] = tau * p[i];
        }
        Ok(())
    }
}

impl PointSolution for LocalUnbounded {
    fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        let (mut p, mut u) = ([0.0], [0.0]);
        self.eval_row(t, &[x], &mut p, &mut u);
        (p[0], u[0])
    }

    fn provenance(&self) -> Provenance {
        Provenance::GreensLocal
    }

    /// Quadrature failures surface as NaN; [`local_solution_unbounded`]
    /// validates first so they cannot occur there.
    fn eval_row(&self, t: f64, xs: &[f64], p: &mut [f64], u: &mut [f64]) {
        if self.try_row(t, xs, p, u).is_err() {
            p.fill(f64::NAN);
            u.fill(f64::NAN);
        }
    }
}

/// Fourier transform `∫ q(x) e^{-ikx} dx` of the profile minus its far field.
#[derive(Debug, Clone)]
enum Transform {
    /// `q̂(k) = a sqrt(π) e^{-k²/4}` for `q = a e^{-x²}`.
    Gaussian { amplitude: f64 },
    /// Piecewise-linear `q` vanishing outside the knots; `q'' = Σ s_j δ(x - x_j)`.
    Kinks { center: f64, offsets: Vec<f64>, jumps: Vec<f64>, radius: f64 },
    Zero,
}

impl Transform {
    fn of(profile: &InitialProfile) -> Result<(f64, Transform)> {
        match profile {
            InitialProfile::Constant { level } => Ok((*level, Transform::Zero)),
            InitialProfile::CenteredBump { level } => Ok((
                0.75 * level,
                Transform::Gaussian {
                    amplitude: 0.5 * level,
                },
            )),
            InitialProfile::Tabulated { positions, values } => {
                let n = values.len();
                if values[0] != values[n - 1] {
                    return Err(Error::Unsupported(format!(
                        "global solution on the line needs equal far-field values, got {} and {}",
                        values[0],
                        values[n - 1]
                    )));
                }
                if profile.is_homogeneous() {
                    return Ok((values[0], Transform::Zero));
                }
                let slopes: Vec<f64> = positions
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0]))
                    .collect();
                let jumps: Vec<f64> = (0..n)
                    .map(|j| {
                        let right = if j + 1 < n { slopes[j] } else { 0.0 };
                        let left = if j > 0 { slopes[j - 1] } else { 0.0 };
                        right - left
                    })
                    .collect();
                let center = 0.5 * (positions[0] + positions[n - 1]);
                let offsets: Vec<f64> = positions.iter().map(|x| x - center).collect();
                let radius = 0.5 * (positions[n - 1] - positions[0]);
                Ok((
                    values[0],
                    Transform::Kinks {
                        center,
                        offsets,
                        jumps,
                        radius,
                    },
                ))
            }
        }
    }

    /// `(Re, Im)` of `q̂(k)`.
    fn at(&self, k: f64) -> (f64, f64) {
        match self {
            Transform::Zero => (0.0, 0.0),
            Transform::Gaussian { amplitude } => (amplitude * PI.sqrt() * (-0.25 * k * k).exp(), 0.0),
            Transform::Kinks {
                center,
                offsets,
                jumps,
                radius,
            } => {
                // transform about the center, then shift
                let (re, im) = if k.abs() * radius < 0.5 {
                    // -Σ s_j Σ_{m≥2} (-i x_j)^m k^{m-2} / m!
                    let (mut re, mut im) = (0.0, 0.0);
                    for (x, s) in offsets.iter().zip(jumps) {
                        let mut term = x * x / 2.0;
                        // (-i)^m cycles 1, -i, -1, i starting from m = 0
                        for m in 2..40 {
                            match m % 4 {
                                0 => re -= s * term,
                                1 => im += s * term,
                                2 => re += s * term,
                                _ => im -= s * term,
                            }
                            term *= x * k / (m + 1) as f64;
                            if term.abs() < 1e-18 * (x * x).max(1e-300) {
                                break;
                            }
                        }
                    }
                    (re, im)
                } else {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (x, s) in offsets.iter().zip(jumps) {
                        re += s * (k * x).cos();
                        im -= s * (k * x).sin();
                    }
                    (-re / (k * k), -im / (k * k))
                };
                let (c, s) = ((k * center).cos(), (k * center).sin());
                (re * c + im * s, im * c - re * s)
            }
        }
    }

    /// Wavenumber beyond which the transform alone is negligible.
    fn cutoff(&self) -> Option<f64> {
        match self {
            Transform::Zero => Some(0.0),
            Transform::Gaussian { .. } => Some(2.0 * 36.0_f64.sqrt()),
            Transform::Kinks { .. } => None,
        }
    }

    /// Largest distance of the transform's phase origin from zero.
    fn reach(&self) -> f64 {
        match self {
            Transform::Kinks { center, radius, .. } => center.abs() + radius,
            _ => 0.0,
        }
    }
}

/// Globally optimal field on the line.
#[derive(Debug, Clone)]
pub struct GlobalUnbounded {
    params: ModelParams,
    profile: InitialProfile,
    far: f64,
    transform: Transform,
    zero_mode: ModeSolution,
}

/// Upper end of the wavenumber integral when only the dynamics damp it.
const MAX_WAVENUMBER: f64 = 4000.0;

impl GlobalUnbounded {
    pub fn new(params: &ModelParams, profile: &InitialProfile) -> Result<Self> {
        params.validate()?;
        profile.validate()?;
        let (far, transform) = Transform::of(profile)?;
        Ok(Self {
            params: *params,
            profile: profile.clone(),
            far,
            transform,
            zero_mode: ModeSolution::new(params, 0.0)?,
        })
    }

    fn cutoff(&self, t: f64) -> f64 {
        let dyn_cut = if self.params.diffusivity * t > 0.0 {
            (36.0 / (self.params.diffusivity * t)).sqrt()
        } else {
            f64::INFINITY
        };
        self.transform
            .cutoff()
            .unwrap_or(f64::INFINITY)
            .min(dyn_cut)
            .min(MAX_WAVENUMBER)
    }

    fn try_row(&self, t: f64, xs: &[f64], p: &mut [f64], u: &mut [f64]) -> Result<()> {
        let z0 = self.zero_mode.at(t);
        if self.params.diffusivity == 0.0 {
            // no coupling across space: every point follows the a-spatial path
            for (i, &x) in xs.iter().enumerate() {
                let v = self.profile.eval(x);
                p[i] = v * z0[0];
                u[i] = v * z0[1];
            }
            return Ok(());
        }
        p.fill(self.far * z0[0]);
        u.fill(self.far * z0[1]);
        let kmax = self.cutoff(t);
        if kmax > 0.0 {
            let reach = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs())) + self.transform.reach();
            let width = (2.0 / (1.0 + reach)).min(1.0);
            let panels = (kmax / width).ceil().max(1.0) as usize;
            let width = kmax / panels as f64;
            let (gx, gw) = gauss_legendre(8);
            let mut nodes = Vec::with_capacity(panels * gx.len());
            for j in 0..panels {
                let lo = j as f64 * width;
                for (s, w) in gx.iter().zip(&gw) {
                    let k = lo + 0.5 * width * (s + 1.0);
                    let weight = 0.5 * width * w / PI;
                    let z = ModeSolution::new(&self.params, k * k)?.at(t);
                    let (qr, qi) = self.transform.at(k);
                    nodes.push((k, weight * qr, weight * qi, z));
                }
            }
            for (i, &x) in xs.iter().enumerate() {
                let (mut sp, mut su) = (0.0, 0.0);
                for &(k, qr, qi, z) in &nodes {
                    let (s, c) = (k * x).sin_cos();
                    let re = qr * c - qi * s;
                    sp += re * z[0];
                    su += re * z[1];
                }
                p[i] += sp;
                u[i] += su;
            }
        }
        if t == 0.0 {
            for (i, &x) in xs.iter().enumerate() {
                p[i] = self.profile.eval(x);
            }
        }
        Ok(())
    }
}

impl PointSolution for GlobalUnbounded {
    fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        let (mut p, mut u) = ([0.0], [0.0]);
        self.eval_row(t, &[x], &mut p, &mut u);
        (p[0], u[0])
    }

    fn provenance(&self) -> Provenance {
        Provenance::GreensGlobal
    }

    fn eval_row(&self, t: f64, xs: &[f64], p: &mut [f64], u: &mut [f64]) {
        if self.try_row(t, xs, p, u).is_err() {
            p.fill(f64::NAN);
            u.fill(f64::NAN);
        }
    }
}

/// The global pair as typeset: `e^{Θt}` applied to the forward-smoothed
/// profile and to the terminal coupling smoothed backward over `T - t`.
/// Exact only for spatially constant data; diagnostic only.
#[derive(Debug, Clone)]
pub struct PrintedGlobalUnbounded {
    profile: InitialProfile,
    kernel: KernelEvaluator,
    coupling: TerminalCoupling,
    exp: MatExp2,
    horizon: f64,
}

impl PrintedGlobalUnbounded {
    pub fn new(params: &ModelParams, profile: &InitialProfile, method: KernelMethod) -> Result<Self> {
        params.validate()?;
        profile.validate()?;
        Ok(Self {
            profile: profile.clone(),
            kernel: KernelEvaluator::new(params.diffusivity, method)?,
            coupling: TerminalCoupling::new(params, profile, method)?,
            exp: MatExp2::new(params),
            horizon: params.horizon,
        })
    }

    fn try_eval(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let z0 = self.kernel.convolve(&self.profile, t, x)?.value;
        let z1 = self.coupling.eval(x, self.horizon - t)?;
        let z = self.exp.at(t).apply([z0, z1]);
        Ok((z[0], z[1]))
    }
}

impl PointSolution for PrintedGlobalUnbounded {
    fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        self.try_eval(x, t).unwrap_or((f64::NAN, f64::NAN))
    }

    fn provenance(&self) -> Provenance {
        Provenance::PrintedClosedForm
    }
}

fn check_horizon(grid: &Grid, params: &ModelParams) -> Result<()> {
    if (grid.horizon() - params.horizon).abs() > 1e-9 * params.horizon {
        return Err(Error::InvalidGrid(format!(
            "grid ends at {} but the horizon is {}",
            grid.horizon(),
            params.horizon
        )));
    }
    Ok(())
}

fn probe<S: PointSolution>(sol: &S, grid: &Grid) -> Result<()> {
    // one point per extreme time catches quadrature failures before sampling
    for &t in [grid.times()[1], grid.horizon()].iter() {
        let (p, u) = sol.eval(grid.positions()[0], t);
        if !(p.is_finite() && u.is_finite()) {
            return Err(Error::Quadrature {
                requested: 0.0,
                achieved: f64::NAN,
            });
        }
    }
    Ok(())
}

/// Local field on the reporting window of `grid`.
pub fn local_solution_unbounded(
    params: &ModelParams,
    profile: &InitialProfile,
    grid: &Grid,
    method: KernelMethod,
    exec: Execution,
) -> Result<SolutionField> {
    check_horizon(grid, params)?;
    let sol = LocalUnbounded::new(params, profile, method)?;
    // surface quadrature errors as errors rather than NaN
    for &t in &[grid.times()[1], grid.horizon()] {
        for &x in &[grid.positions()[0], grid.positions()[grid.nx() - 1]] {
            sol.kernel.convolve(profile, t, x)?;
        }
    }
    let field = sol.sample(grid, exec);
    if !field.is_finite() {
        return Err(Error::Quadrature {
            requested: 0.0,
            achieved: f64::NAN,
        });
    }
    Ok(field)
}

/// Global field on the reporting window of `grid`.
pub fn global_solution_unbounded(
    params: &ModelParams,
    profile: &InitialProfile,
    grid: &Grid,
    exec: Execution,
) -> Result<SolutionField> {
    check_horizon(grid, params)?;
    let sol = GlobalUnbounded::new(params, profile)?;
    probe(&sol, grid)?;
    Ok(sol.sample(grid, exec))
}

/// Typeset global pair on `grid`; diagnostic only.
pub fn printed_global_unbounded(
    params: &ModelParams,
    profile: &InitialProfile,
    grid: &Grid,
    method: KernelMethod,
    exec: Execution,
) -> Result<SolutionField> {
    check_horizon(grid, params)?;
    let sol = PrintedGlobalUnbounded::new(params, profile, method)?;
    probe(&sol, grid)?;
    Ok(sol.sample(grid, exec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aspatial::solve_aspatial_bvp;
    use approx::assert_relative_eq;

    const P0: f64 = ModelParams::PAPER_2015_P0;

    fn gaussian() -> InitialProfile {
        // e^{-y²} as a dense table, plus a unit floor to keep it positive
        let xs: Vec<f64> = (0..=4000).map(|i| -10.0 + i as f64 * 0.005).collect();
        let vs: Vec<f64> = xs.iter().map(|x| 1.0 + (-x * x).exp()).collect();
        InitialProfile::tabulated(xs, vs).unwrap()
    }

    #[test]
    fn mass_is_one() {
        let c = InitialProfile::constant(1.0).unwrap();
        for m in [
            KernelMethod::GaussHermite { order: 64 },
            KernelMethod::Adaptive { tol: 1e-12 },
        ] {
            for (x, t) in [(0.0, 0.5), (3.0, 30.0)] {
                let v = heat_convolve(&c, 0.01, t, x, m).unwrap().value;
                assert!((v - 1.0).abs() < 1e-10, "{m:?} {v}");
            }
        }
        let mc = heat_convolve(&c, 0.01, 1.0, 0.0, KernelMethod::MonteCarlo { samples: 1000, seed: 1 }).unwrap();
        assert_eq!(mc.value, 1.0);
    }

    #[test]
    fn gaussian_convolution_is_analytic() {
        let g = gaussian();
        let d = 0.01;
        for (x, t) in [(0.0, 1.0), (0.7, 10.0), (-1.2, 30.0)] {
            let s: f64 = 1.0 + 4.0 * d * t;
            let want = 1.0 + (-x * x / s).exp() / s.sqrt();
            let got = heat_convolve(&g, d, t, x, KernelMethod::Adaptive { tol: 1e-11 }).unwrap().value;
            // linear interpolation of the table costs ~h²/8 · |f''|
            assert_relative_eq!(got, want, max_relative = 1e-5);
        }
        // the bump's exponential part is exactly such a Gaussian
        let bump = InitialProfile::centered_bump(1.0).unwrap();
        for (x, t) in [(0.0, 1.0), (0.9, 30.0)] {
            let s = 1.0 + 4.0 * d * t;
            let want = 0.75 + 0.5 * (-x * x / s).exp() / s.sqrt();
            let got = heat_convolve(&bump, d, t, x, KernelMethod::default()).unwrap().value;
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn methods_agree_on_bump() {
        let bump = InitialProfile::centered_bump(P0).unwrap();
        let gh = heat_convolve(&bump, 0.01, 5.0, 0.3, KernelMethod::GaussHermite { order: 64 }).unwrap().value;
        let ad = heat_convolve(&bump, 0.01, 5.0, 0.3, KernelMethod::Adaptive { tol: 1e-10 }).unwrap().value;
        assert_relative_eq!(gh, ad, max_relative = 1e-8);
        let mc = heat_convolve(&bump, 0.01, 5.0, 0.3, KernelMethod::MonteCarlo { samples: 100_000, seed: 7 }).unwrap();
        assert!((mc.value - gh).abs() <= 3.0 * mc.std_error);
    }

    #[test]
    fn mc_needs_samples_and_is_deterministic() {
        let bump = InitialProfile::centered_bump(P0).unwrap();
        let e = heat_convolve(&bump, 0.01, 1.0, 0.0, KernelMethod::MonteCarlo { samples: 999, seed: 0 });
        assert!(matches!(e, Err(Error::TooFewSamples { .. })));
        let m = KernelMethod::MonteCarlo { samples: 2000, seed: 3 };
        let a = heat_convolve(&bump, 0.01, 1.0, 0.2, m).unwrap();
        let b = heat_convolve(&bump, 0.01, 1.0, 0.2, m).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_semigroup() {
        // smoothing to s and then by t - s is smoothing to t
        let d = 0.01;
        let (s, t) = (4.0, 11.0);
        let bump = InitialProfile::centered_bump(1.0).unwrap();
        let kern = KernelEvaluator::new(d, KernelMethod::default()).unwrap();
        let xs: Vec<f64> = (0..=8000).map(|i| -8.0 + i as f64 * 0.002).collect();
        let mid: Vec<f64> = xs
            .iter()
            .map(|&x| kern.convolve(&bump, s, x).unwrap().value)
            .collect();
        let table = InitialProfile::tabulated(xs, mid).unwrap();
        for x in [0.0, 0.5, -1.0] {
            let two = heat_convolve(&table, d, t - s, x, KernelMethod::default()).unwrap().value;
            let one = heat_convolve(&bump, d, t, x, KernelMethod::default()).unwrap().value;
            assert_relative_eq!(two, one, max_relative = 1e-6);
        }
    }

    #[test]
    fn kink_transform_matches_quadrature() {
        let prof = InitialProfile::tabulated(vec![-1.0, 0.0, 0.5, 2.0], vec![1.0, 3.0, 1.5, 1.0]).unwrap();
        let (far, tr) = Transform::of(&prof).unwrap();
        assert_eq!(far, 1.0);
        for k in [0.0, 1e-4, 0.1, 0.3, 0.9, 4.0, 25.0] {
            let (re, im) = tr.at(k);
            let (mut wr, mut wi) = (0.0, 0.0);
            let n = 300_000;
            let h = 3.0 / n as f64;
            for i in 0..n {
                let x = -1.0 + (i as f64 + 0.5) * h;
                let q = prof.eval(x) - 1.0;
                wr += h * q * (k * x).cos();
                wi -= h * q * (k * x).sin();
            }
            assert!((re - wr).abs() < 1e-8 && (im - wi).abs() < 1e-8, "k={k}: {re} {im} vs {wr} {wi}");
        }
        let uneven = InitialProfile::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(GlobalUnbounded::new(&ModelParams::paper_2015(), &uneven), Err(Error::Unsupported(_))));
    }

    #[test]
    fn fourier_inversion_reproduces_heat() {
        // with the mode solution replaced by pure diffusion the inversion
        // must return the kernel-smoothed profile
        let prof = InitialProfile::centered_bump(P0).unwrap();
        let (far, tr) = Transform::of(&prof).unwrap();
        let (d, t, x) = (0.01, 3.0, 0.4);
        let (gx, gw) = gauss_legendre(8);
        let mut acc = far;
        let panels = 40;
        let width = tr.cutoff().unwrap() / panels as f64;
        for j in 0..panels {
            for (s, w) in gx.iter().zip(&gw) {
                let k = (j as f64 + 0.5 * (s + 1.0)) * width;
                acc += 0.5 * width * w / PI * tr.at(k).0 * (k * x).cos() * (-d * k * k * t).exp();
            }
        }
        let want = heat_convolve(&prof, d, t, x, KernelMethod::default()).unwrap().value;
        assert_relative_eq!(acc, want, max_relative = 1e-12);
    }

    #[test]
    fn homogeneous_global_is_aspatial() {
        let p = ModelParams::paper_2015();
        let sol = GlobalUnbounded::new(&p, &InitialProfile::constant(P0).unwrap()).unwrap();
        let a = solve_aspatial_bvp(&p, P0).unwrap();
        for t in [0.0, 9.0, 30.0] {
            let (pv, uv) = sol.eval(0.5, t);
            assert_relative_eq!(pv, a.p(t), max_relative = 1e-10);
            assert_relative_eq!(uv, a.u(t), max_relative = 1e-10);
        }
        let loc = LocalUnbounded::new(&p, &InitialProfile::constant(P0).unwrap(), KernelMethod::default()).unwrap();
        assert_relative_eq!(loc.eval(-0.3, 12.0).0, a.p(12.0), max_relative = 1e-9);
    }

    #[test]
    fn global_terminal_condition() {
        let p = ModelParams::paper_2015();
        let sol = GlobalUnbounded::new(&p, &InitialProfile::centered_bump(P0).unwrap()).unwrap();
        for x in [-1.0, 0.0, 0.6] {
            let (pv, uv) = sol.eval(x, p.horizon);
            assert_relative_eq!(uv, p.terminal_ratio() * pv, max_relative = 1e-6);
        }
        let one = ModelParams { theta: 1.0, ..p };
        let sol = GlobalUnbounded::new(&one, &InitialProfile::centered_bump(P0).unwrap()).unwrap();
        assert!(sol.eval(0.0, one.horizon).1.abs() < 1e-9 * P0);
    }

    #[test]
    fn vanishing_diffusion() {
        let p = ModelParams::paper_2015().with_diffusivity(1e-10);
        let prof = InitialProfile::centered_bump(P0).unwrap();
        let loc = LocalUnbounded::new(&p, &prof, KernelMethod::default()).unwrap();
        for (x, t) in [(0.0, 10.0), (0.8, 30.0)] {
            let want = prof.eval(x) * tax_integral(&p, t).exp();
            assert_relative_eq!(loc.eval(x, t).0, want, max_relative = 1e-4);
        }
    }
}
