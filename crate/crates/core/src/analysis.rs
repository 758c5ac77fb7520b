//! Social cost of solution fields and checks of the qualitative results.

use std::fmt;

use crate::error::Result;
use crate::greens::{GlobalUnbounded, KernelEvaluator, KernelMethod, LocalUnbounded};
use crate::grid::{make_grid, Grid, PointSolution, SolutionField};
use crate::model::{InitialProfile, ModelParams, SpatialDomain};
use crate::oracle::{diffuse_forward, TaxSchedule};
use crate::par::Execution;
use crate::quadrature::simpson;
use crate::spectral::{cosine_coeffs, CosineBasis, CosineSeries, GlobalBounded, LocalBounded, DEFAULT_MODES};

/// Running and terminal parts of the social cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub running: f64,
    pub terminal: f64,
    pub total: f64,
}

/// Cost of `p, u` sampled time-major on `grid`: Simpson in `x`, then in `t`.
pub fn field_cost(params: &ModelParams, grid: &Grid, p: &[f64], u: &[f64]) -> CostBreakdown {
    let (nx, dx, dt) = (grid.nx(), grid.dx(), grid.dt());
    let mut buf = vec![0.0; nx];
    let per_time: Vec<f64> = (0..grid.nt())
        .map(|it| {
            for (ix, b) in buf.iter_mut().enumerate() {
                let k = grid.index(it, ix);
                *b = 0.5 * (p[k] * p[k] + u[k] * u[k]);
            }
            simpson(&buf, dx) * (-params.rho * grid.times()[it]).exp()
        })
        .collect();
    let running = simpson(&per_time, dt);
    let last = grid.nt() - 1;
    for (ix, b) in buf.iter_mut().enumerate() {
        let v = p[grid.index(last, ix)];
        *b = 0.5 * v * v;
    }
    let terminal = params.terminal_weight() * simpson(&buf, dx) * (-params.rho * grid.horizon()).exp();
    CostBreakdown {
        running,
        terminal,
        total: running + terminal,
    }
}

/// Social cost of a field over its grid (the reporting window on the line).
pub fn spatial_cost(params: &ModelParams, field: &SolutionField) -> CostBreakdown {
    field_cost(params, &field.grid, &field.p, &field.u)
}

/// `C(a) - C(b)`.
pub fn cost_gap(params: &ModelParams, a: &SolutionField, b: &SolutionField) -> f64 {
    spatial_cost(params, a).total - spatial_cost(params, b).total
}

/// `∫ p(x, t) dx` at every time, by Simpson.
pub fn p_tot(field: &SolutionField) -> Vec<f64> {
    (0..field.grid.nt())
        .map(|it| simpson(field.p_row(it), field.grid.dx()))
        .collect()
}

/// `∫ p(x, t) dx` by the midpoint rule on `cells` cells of `[lo, hi]`.
pub fn p_tot_midpoint<S: PointSolution + ?Sized>(sol: &S, lo: f64, hi: f64, t: f64, cells: usize) -> f64 {
    let h = (hi - lo) / cells as f64;
    (0..cells).map(|i| sol.eval(lo + (i as f64 + 0.5) * h, t).0).sum::<f64>() * h
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct PropositionReport {
    pub name: String,
    /// Whether the hypothesis of the claim is met; when false the verdict is
    /// informational only.
    pub applicable: bool,
    pub holds: bool,
    /// Worst-case signed slack; `holds == (margin >= -tolerance)`.
    pub margin: f64,
    pub tolerance: f64,
    /// Where the margin is attained, as `(x, t)`.
    pub worst: Option<(f64, f64)>,
    /// Further named quantities.
    pub metrics: Vec<(String, f64)>,
    pub details: String,
}

impl PropositionReport {
    fn new(name: &str, applicable: bool, margin: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            applicable,
            holds: margin >= -tolerance,
            margin,
            tolerance,
            worst: None,
            metrics: Vec::new(),
            details: String::new(),
        }
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// Counts as a failure only when applicable.
    pub fn passed(&self) -> bool {
        !self.applicable || self.holds
    }

    pub const CSV_HEADER: &'static str = "name,applicable,holds,margin,tolerance,worst_x,worst_t";

    pub fn csv_row(&self) -> String {
        let (wx, wt) = self
            .worst
            .map(|(x, t)| (format!("{x:?}"), format!("{t:?}")))
            .unwrap_or_default();
        format!(
            "{},{},{},{:?},{:?},{wx},{wt}",
            self.name, self.applicable, self.holds, self.margin, self.tolerance
        )
    }
}

impl fmt::Display for PropositionReport {
    /// One line: `name applicable=.. holds=.. margin=.. tolerance=.. [worst=..] [k=v..] [details]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} applicable={} holds={} margin={:e} tolerance={:e}",
            self.name, self.applicable, self.holds, self.margin, self.tolerance
        )?;
        if let Some((x, t)) = self.worst {
            write!(f, " worst=({x},{t})")?;
        }
        for (k, v) in &self.metrics {
            write!(f, " {k}={v:e}")?;
        }
        if !self.details.is_empty() {
            write!(f, " | {}", self.details)?;
        }
        Ok(())
    }
}

/// Residual of the optimality system at the interior of a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocResidual {
    /// Relative residual of the state equation.
    pub state: f64,
    /// Relative residual of the abatement (costate) equation.
    pub costate: f64,
    pub worst: (f64, f64),
}

impl FocResidual {
    pub fn max(&self) -> f64 {
        self.state.max(self.costate)
    }
}

fn d1(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn d2(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
}

/// Residual of `p_t = d p_xx + (η - δ) p - η u` and
/// `u_t = (ρ - η + δ) u - d u_xx - η p` by fourth-order differences of point
/// evaluations, relative to the largest `|p|` seen. The lattice has `nx × nt`
/// points strictly inside `[x_lo, x_hi] × [T/20, T]`; the initial layer, where
/// a cosine series of data without zero end slopes converges slowly, is left out.
pub fn foc_residual<S: PointSolution + ?Sized>(
    params: &ModelParams,
    sol: &S,
    x_lo: f64,
    x_hi: f64,
    nx: usize,
    nt: usize,
    exec: Execution,
) -> FocResidual {
    let hx = 0.01 * (x_hi - x_lo);
    let ht = 0.002 * params.horizon;
    let d = params.diffusivity;
    let xs: Vec<f64> = (0..nx)
        .map(|i| x_lo + 2.0 * hx + (x_hi - x_lo - 4.0 * hx) * i as f64 / (nx - 1).max(1) as f64)
        .collect();
    let ts: Vec<f64> = (0..nt)
        .map(|i| {
            let t0 = 0.05 * params.horizon + 2.0 * ht;
            t0 + (params.horizon - 2.0 * ht - t0) * i as f64 / (nt - 1).max(1) as f64
        })
        .collect();
    let rows = crate::par::map_range(exec, nt, |it| {
        let t = ts[it];
        let mut best = (0.0_f64, 0.0_f64, 0.0_f64, (0.0, 0.0));
        for &x in &xs {
            let (p, u) = sol.eval(x, t);
            let p_t = d1(&|s| sol.eval(x, s).0, t, ht);
            let u_t = d1(&|s| sol.eval(x, s).1, t, ht);
            let p_xx = d2(&|y| sol.eval(y, t).0, x, hx);
            let u_xx = d2(&|y| sol.eval(y, t).1, x, hx);
            let rs = (p_t - (d * p_xx + (params.eta - params.delta) * p - params.eta * u)).abs();
            let rc = (u_t - ((params.rho - params.eta + params.delta) * u - d * u_xx - params.eta * p)).abs();
            best.0 = best.0.max(p.abs());
            if rs.max(rc) > best.1.max(best.2) {
                best.3 = (x, t);
            }
            best.1 = best.1.max(rs);
            best.2 = best.2.max(rc);
        }
        best
    });
    let scale = rows.iter().fold(0.0_f64, |m, r| m.max(r.0)).max(f64::MIN_POSITIVE);
    let (mut rs, mut rc, mut worst) = (0.0_f64, 0.0_f64, (0.0, 0.0));
    let mut top = -1.0;
    for r in &rows {
        if r.1.max(r.2) > top {
            top = r.1.max(r.2);
            worst = r.3;
        }
        rs = rs.max(r.1);
        rc = rc.max(r.2);
    }
    FocResidual {
        state: rs / scale,
        costate: rc / scale,
        worst,
    }
}

/// `max |u_T - η(1-θ)/θ p_T| / max |p_T|` over `xs`.
pub fn terminal_residual<S: PointSolution + ?Sized>(params: &ModelParams, sol: &S, xs: &[f64]) -> f64 {
    let (mut r, mut s) = (0.0_f64, 0.0_f64);
    for &x in xs {
        let (p, u) = sol.eval(x, params.horizon);
        r = r.max((u - params.terminal_ratio() * p).abs());
        s = s.max(p.abs());
    }
    r / s.max(f64::MIN_POSITIVE)
}

/// Closed-form local and global solutions for either kind of domain.
pub fn closed_form_pair(
    params: &ModelParams,
    domain: &SpatialDomain,
    profile: &InitialProfile,
) -> Result<(Box<dyn PointSolution + Send>, Box<dyn PointSolution + Send>)> {
    Ok(if domain.is_bounded() {
        (
            Box::new(LocalBounded::new(params, domain, profile, CosineBasis::default(), DEFAULT_MODES)?),
            Box::new(GlobalBounded::new(params, domain, profile, CosineBasis::default(), DEFAULT_MODES)?),
        )
    } else {
        (
            Box::new(LocalUnbounded::new(params, profile, KernelMethod::default())?),
            Box::new(GlobalUnbounded::new(params, profile)?),
        )
    })
}

const COMPARE_NX: usize = 101;
const COMPARE_NT: usize = 101;

/// Relative tolerance for local and global solutions to count as equal.
pub const EQUALITY_TOL: f64 = 1e-6;

/// Compares the local and global closed forms on a 101×101 grid. They should
/// coincide for spatially constant data and differ otherwise, with the
/// global solution strictly cheaper.
pub fn check_local_equals_global(
    params: &ModelParams,
    domain: &SpatialDomain,
    profile: &InitialProfile,
    exec: Execution,
) -> Result<PropositionReport> {
    let grid = make_grid(domain, params, COMPARE_NX, COMPARE_NT)?;
    let (local, global) = closed_form_pair(params, domain, profile)?;
    let lf = local.sample(&grid, exec);
    let gf = global.sample(&grid, exec);
    let gap = lf.relative_gap(&gf);
    let c_local = spatial_cost(params, &lf).total;
    let c_global = spatial_cost(params, &gf).total;
    let (lo, hi) = domain.extent();
    let foc = foc_residual(params, local.as_ref(), lo, hi, 21, 11, exec);
    let mut r = PropositionReport::new("local_equals_global", true, EQUALITY_TOL - gap, 0.0);
    r.metrics = vec![
        ("sup_gap".into(), gap),
        ("cost_local".into(), c_local),
        ("cost_global".into(), c_global),
        ("cost_gap".into(), c_local - c_global),
        ("local_foc_residual".into(), foc.max()),
    ];
    r.details = if r.holds {
        "local and global solutions coincide".into()
    } else {
        format!(
            "local solution is not optimal: global FOC residual {:.3e}, cost gap {:.6e}",
            foc.max(),
            c_local - c_global
        )
    };
    Ok(r)
}

/// Additive tolerance of the non-increasing test, as a fraction of `p_tot(0)`.
pub const DECAY_TOL: f64 = 1e-8;

/// Total pollution `p_tot(t)` must not increase when the smallest tax exceeds
/// `(η - δ)/η`.
pub fn check_aggregate_decay(params: &ModelParams, field: &SolutionField) -> PropositionReport {
    let threshold = params.tax_threshold();
    let tau_min = field.tau_min().unwrap_or(f64::NEG_INFINITY);
    let tot = p_tot(field);
    let scale = tot[0].abs().max(f64::MIN_POSITIVE);
    let (mut worst_inc, mut worst_t) = (f64::NEG_INFINITY, 0.0);
    for (i, w) in tot.windows(2).enumerate() {
        let inc = w[1] - w[0];
        if inc > worst_inc {
            worst_inc = inc;
            worst_t = field.grid.times()[i + 1];
        }
    }
    let applicable = tau_min > threshold;
    let mut r = PropositionReport::new("aggregate_decay", applicable, -worst_inc / scale, DECAY_TOL);
    r.worst = Some((f64::NAN, worst_t));
    r.metrics = vec![
        ("tau_min".into(), tau_min),
        ("threshold".into(), threshold),
        ("p_tot_start".into(), tot[0]),
        ("p_tot_end".into(), tot[tot.len() - 1]),
    ];
    r.details = if applicable {
        format!("tau_min {tau_min:.6} exceeds {threshold:.6}")
    } else {
        format!("threshold not met: tau_min {tau_min:.6} <= {threshold:.6}")
    };
    r
}

/// Heat-equation evolution of the initial profile: `h(x, t)`.
pub enum HeatReference {
    Series { series: CosineSeries, profile: InitialProfile, d: f64 },
    Kernel { kernel: KernelEvaluator, profile: InitialProfile },
}

impl HeatReference {
    /// `t_min` is the smallest positive time to be evaluated; it sets the
    /// series truncation.
    pub fn new(params: &ModelParams, domain: &SpatialDomain, profile: &InitialProfile, t_min: f64) -> Result<Self> {
        let d = params.diffusivity;
        Ok(match *domain {
            SpatialDomain::Bounded { x_a, x_b } => {
                let len = x_b - x_a;
                let modes = if d * t_min > 0.0 {
                    ((len / std::f64::consts::PI) * (40.0 / (d * t_min)).sqrt()).ceil() as usize
                } else {
                    DEFAULT_MODES
                };
                let series = cosine_coeffs(profile, domain, CosineBasis::FullNeumann, modes.clamp(DEFAULT_MODES, 20_000))?;
                HeatReference::Series {
                    series,
                    profile: profile.clone(),
                    d,
                }
            }
            SpatialDomain::Unbounded { .. } => HeatReference::Kernel {
                kernel: KernelEvaluator::new(d, KernelMethod::default())?,
                profile: profile.clone(),
            },
        })
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        match self {
            HeatReference::Series { series, profile, d } => Ok(if d * t == 0.0 {
                profile.eval(x)
            } else {
                series.eval_heat(x, *d, t)
            }),
            HeatReference::Kernel { kernel, profile } => Ok(kernel.convolve(profile, t, x)?.value),
        }
    }

    /// One time row, reusing per-time mode weights.
    pub fn eval_row(&self, xs: &[f64], t: f64) -> Result<Vec<f64>> {
        match self {
            HeatReference::Series { series, profile, d } => {
                if d * t == 0.0 {
                    return Ok(xs.iter().map(|&x| profile.eval(x)).collect());
                }
                let w: Vec<f64> = series
                    .amplitudes()
                    .iter()
                    .enumerate()
                    .map(|(n, a)| a * (-d * series.k2(n) * t).exp())
                    .collect();
                Ok(xs.iter().map(|&x| series.eval_weighted(&w, x)).collect())
            }
            HeatReference::Kernel { .. } => xs.iter().map(|&x| self.eval(x, t)).collect(),
        }
    }
}

/// Tolerance of the pointwise bound, as a fraction of `‖p‖∞`.
pub const BOUND_TOL: f64 = 1e-8;

/// `e^{(η - δ - η τ_min) t} h(x, t)` on the field's grid.
pub fn upper_bound_surface(
    params: &ModelParams,
    domain: &SpatialDomain,
    profile: &InitialProfile,
    grid: &Grid,
    tau_min: f64,
    exec: Execution,
) -> Result<Vec<f64>> {
    let t_min = grid.times()[1];
    let heat = HeatReference::new(params, domain, profile, t_min)?;
    let rate = params.eta - params.delta - params.eta * tau_min;
    let rows = crate::par::map_range(exec, grid.nt(), |it| {
        let t = grid.times()[it];
        heat.eval_row(grid.positions(), t)
            .map(|h| h.into_iter().map(|v| (rate * t).exp() * v).collect::<Vec<_>>())
    });
    let mut out = Vec::with_capacity(grid.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Pointwise bound `p ≤ e^{(η - δ - η τ_min) t} h` with `h` the heat
/// evolution of `p0` and `τ_min` the smallest tax on the field.
pub fn check_upper_bound(
    params: &ModelParams,
    domain: &SpatialDomain,
    field: &SolutionField,
    profile: &InitialProfile,
    exec: Execution,
) -> Result<PropositionReport> {
    let tau_min = field.tau_min().unwrap_or(0.0);
    let bound = upper_bound_surface(params, domain, profile, &field.grid, tau_min, exec)?;
    let scale = field.p_sup().max(f64::MIN_POSITIVE);
    let (mut margin, mut slack, mut worst) = (f64::INFINITY, 0.0_f64, 0);
    for (k, (b, p)) in bound.iter().zip(&field.p).enumerate() {
        let m = (b - p) / scale;
        if m < margin {
            margin = m;
            worst = k;
        }
        slack = slack.max(m);
    }
    let nx = field.grid.nx();
    let mut r = PropositionReport::new("upper_bound", true, margin, BOUND_TOL);
    r.worst = Some((field.grid.positions()[worst % nx], field.grid.times()[worst / nx]));
    r.metrics = vec![("tau_min".into(), tau_min), ("max_slack".into(), slack)];
    Ok(r)
}

/// Policy whose terminal pollution is tracked across horizons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CleanupPolicy {
    /// The globally optimal policy for each horizon.
    GlobalOptimal,
    /// A constant tax, propagated by the finite-difference solver.
    FixedTax(f64),
}

const CLEANUP_NX: usize = 101;

/// Relative tolerance of the peak bound for finite-difference paths.
pub const FD_BOUND_TOL: f64 = 1e-4;

/// `max_x p(x, T)` must fall along increasing horizons and stay below
/// `e^{(η - δ - η τ_min) T} max_x h(x, T)`, provided every horizon's smallest
/// tax exceeds `(η - δ)/η`.
pub fn check_longrun_cleanup(
    params: &ModelParams,
    domain: &SpatialDomain,
    profile: &InitialProfile,
    horizons: &[f64],
    policy: CleanupPolicy,
    exec: Execution,
) -> Result<PropositionReport> {
    let threshold = params.tax_threshold();
    let mut applicable = true;
    let mut peaks = Vec::with_capacity(horizons.len());
    let mut bound_margin = f64::INFINITY;
    let mut metrics = Vec::new();
    for &big_t in horizons {
        let p = params.with_horizon(big_t);
        p.validate()?;
        let nt = ((big_t * 8.0).ceil() as usize).max(41) + 1;
        let grid = make_grid(domain, &p, CLEANUP_NX, nt)?;
        let field = match policy {
            CleanupPolicy::GlobalOptimal => {
                let (_, global) = closed_form_pair(&p, domain, profile)?;
                global.sample(&grid, exec)
            }
            CleanupPolicy::FixedTax(tau) => {
                diffuse_forward(profile, &p, domain, &grid, TaxSchedule::Constant(tau))?.field
            }
        };
        let tau_min = field.tau_min().unwrap_or(f64::NEG_INFINITY);
        applicable &= tau_min > threshold;
        let last = field.p_row(grid.nt() - 1);
        let peak = last.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let heat = HeatReference::new(&p, domain, profile, grid.times()[1])?;
        let h_max = heat
            .eval_row(grid.positions(), big_t)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let bound = ((p.eta - p.delta - p.eta * tau_min) * big_t).exp() * h_max;
        bound_margin = bound_margin.min((bound - peak) / peak.abs().max(f64::MIN_POSITIVE));
        metrics.push((format!("peak_T{big_t}"), peak));
        metrics.push((format!("bound_T{big_t}"), bound));
        metrics.push((format!("tau_min_T{big_t}"), tau_min));
        peaks.push(peak);
    }
    let mut decrease_margin = f64::INFINITY;
    for w in peaks.windows(2) {
        decrease_margin = decrease_margin.min((w[0] - w[1]) / w[0].abs().max(f64::MIN_POSITIVE));
    }
    // the fixed-tax path is a finite-difference solution, so the bound
    // (attained with equality for a constant tax) is checked to its accuracy
    let bound_tol = match policy {
        CleanupPolicy::GlobalOptimal => BOUND_TOL,
        CleanupPolicy::FixedTax(_) => FD_BOUND_TOL,
    };
    let mut r = PropositionReport::new("longrun_cleanup", applicable, decrease_margin.min(bound_margin), bound_tol);
    // strict decrease: a zero margin is a failure
    r.holds = decrease_margin > 0.0 && bound_margin >= -bound_tol;
    metrics.push(("decrease_margin".into(), decrease_margin));
    metrics.push(("bound_margin".into(), bound_margin));
    r.metrics = metrics;
    r.details = if applicable {
        "smallest tax exceeds the threshold at every horizon".into()
    } else {
        "threshold not met at some horizon; verdict not asserted".into()
    };
    Ok(r)
}
