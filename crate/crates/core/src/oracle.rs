//! Finite-difference reference solver.
//!
//! Space: second differences with ghost-point zero-flux closure,
//! `(Lp)_0 = 2(p_1 - p_0)/dx²`. `L` is self-adjoint in the trapezoid-weighted
//! inner product, so the backward costate solve is the discrete adjoint of
//! the forward solve. Time: Crank–Nicolson, with the first step replaced by
//! two implicit Euler half steps (Rannacher start-up) to damp the
//! high-frequency content of data that does not satisfy the boundary
//! condition.
//!
//! On the line, the reporting window is padded by `6 sqrt(2 d T)` on each
//! side and closed with the same zero-flux condition.

use crate::analysis::field_cost;
use crate::aspatial::tau_star;
use crate::error::{Error, Result};
use crate::grid::{Grid, Provenance, SolutionField};
use crate::model::{InitialProfile, ModelParams, SpatialDomain};
use crate::quadrature::trapezoid_weights;

/// Tridiagonal matrix; `sub[0]` and `sup[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// `alpha I + beta self`.
    pub fn affine(&self, alpha: f64, beta: f64) -> Tridiagonal {
        Tridiagonal {
            sub: self.sub.iter().map(|v| beta * v).collect(),
            diag: self.diag.iter().map(|v| alpha + beta * v).collect(),
            sup: self.sup.iter().map(|v| beta * v).collect(),
        }
    }

    /// Thomas elimination, kept for repeated solves.
    pub fn factor(&self) -> Result<ThomasFactor> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let den = self.diag[i] - if i > 0 { self.sub[i] * prev_c } else { 0.0 };
            if den.abs() <= 1e-300 {
                return Err(Error::InvalidGrid(format!(
                    "tridiagonal system is singular at row {i}"
                )));
            }
            inv[i] = 1.0 / den;
            c[i] = if i + 1 < n { self.sup[i] * inv[i] } else { 0.0 };
            prev_c = c[i];
        }
        Ok(ThomasFactor {
            sub: self.sub.clone(),
            c,
            inv,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.factor()?.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Forward-eliminated form of a [`Tridiagonal`].
#[derive(Debug, Clone)]
pub struct ThomasFactor {
    sub: Vec<f64>,
    c: Vec<f64>,
    inv: Vec<f64>,
}

impl ThomasFactor {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        x[0] *= self.inv[0];
        for i in 1..n {
            x[i] = (x[i] - self.sub[i] * x[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c[i] * x[i + 1];
        }
    }
}

/// Zero-flux second-difference operator on `n` nodes with spacing `dx`.
pub fn neumann_laplacian(n: usize, dx: f64) -> Tridiagonal {
    let s = 1.0 / (dx * dx);
    let mut sub = vec![s; n];
    let diag = vec![-2.0 * s; n];
    let mut sup = vec![s; n];
    sub[0] = 0.0;
    sup[n - 1] = 0.0;
    sup[0] = 2.0 * s;
    sub[n - 1] = 2.0 * s;
    Tridiagonal { sub, diag, sup }
}

/// `W⁻¹ Lᵀ W λ`, the adjoint of `L` under trapezoid weights `W`.
pub fn laplacian_adjoint_apply(lap: &Tridiagonal, dx: f64, lambda: &[f64]) -> Vec<f64> {
    let n = lap.len();
    let w = trapezoid_weights(n, dx);
    let wl: Vec<f64> = lambda.iter().zip(&w).map(|(l, w)| l * w).collect();
    // Lᵀ has sub/sup swapped and shifted
    let lt: Vec<f64> = (0..n)
        .map(|j| {
            let mut v = lap.diag[j] * wl[j];
            if j > 0 {
                v += lap.sup[j - 1] * wl[j - 1];
            }
            if j + 1 < n {
                v += lap.sub[j + 1] * wl[j + 1];
            }
            v
        })
        .collect();
    lt.iter().zip(&w).map(|(v, w)| v / w).collect()
}

/// Trapezoid-weighted inner product.
pub fn weighted_dot(a: &[f64], b: &[f64], dx: f64) -> f64 {
    trapezoid_weights(a.len(), dx)
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x * y)
        .sum()
}

/// Tax applied by the forward solver.
#[derive(Clone, Copy)]
pub enum TaxSchedule<'a> {
    Constant(f64),
    /// The a-spatial optimal path `τ*_t`.
    Optimal,
    Path(&'a (dyn Fn(f64) -> f64 + Sync)),
    /// Values on the reporting grid, time-major; linear in time between rows.
    Field(&'a [f64]),
}

/// Computational mesh: the reporting grid, padded on the line.
#[derive(Debug, Clone)]
struct Mesh {
    positions: Vec<f64>,
    /// First reporting column inside `positions`.
    offset: usize,
    report_nx: usize,
}

impl Mesh {
    fn new(domain: &SpatialDomain, params: &ModelParams, grid: &Grid) -> Result<Self> {
        let pos = grid.positions();
        let dx = grid.dx();
        match *domain {
            SpatialDomain::Bounded { x_a, x_b } => {
                let tol = 1e-9 * (x_b - x_a);
                if (pos[0] - x_a).abs() > tol || (pos[pos.len() - 1] - x_b).abs() > tol {
                    return Err(Error::DomainMismatch(format!(
                        "oracle grid must span [{x_a}, {x_b}] exactly, got [{}, {}]",
                        pos[0],
                        pos[pos.len() - 1]
                    )));
                }
                Ok(Self {
                    positions: pos.to_vec(),
                    offset: 0,
                    report_nx: pos.len(),
                })
            }
            SpatialDomain::Unbounded { .. } => {
                let pad = 6.0 * (2.0 * params.diffusivity * params.horizon).sqrt();
                let extra = (pad / dx).ceil() as usize;
                let n = pos.len() + 2 * extra;
                let lo = pos[0] - extra as f64 * dx;
                let positions = (0..n).map(|i| lo + i as f64 * dx).collect();
                Ok(Self {
                    positions,
                    offset: extra,
                    report_nx: pos.len(),
                })
            }
        }
    }

    fn len(&self) -> usize {
        self.positions.len()
    }

    fn report<'a>(&self, row: &'a [f64]) -> &'a [f64] {
        &row[self.offset..self.offset + self.report_nx]
    }

    /// Reporting-grid values extended by their edge values.
    fn extend(&self, row: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| row[i.saturating_sub(self.offset).min(self.report_nx - 1)])
            .collect()
    }
}

fn check_grid(grid: &Grid, params: &ModelParams) -> Result<()> {
    if (grid.horizon() - params.horizon).abs() > 1e-9 * params.horizon {
        return Err(Error::InvalidGrid(format!(
            "grid ends at {} but the horizon is {}",
            grid.horizon(),
            params.horizon
        )));
    }
    Ok(())
}

/// Output of [`diffuse_forward`].
#[derive(Debug, Clone)]
pub struct ForwardSolve {
    pub field: SolutionField,
    /// Trapezoid mass over the whole computational mesh at each time.
    pub mass: Vec<f64>,
    pub warnings: Vec<String>,
}

/// `d dt / dx²`; Crank–Nicolson damps poorly once this is large.
pub fn stiffness(d: f64, dt: f64, dx: f64) -> f64 {
    d * dt / (dx * dx)
}

const STIFFNESS_WARNING: f64 = 1e4;

/// Sub-steps used on reporting interval `it`; graded so the start-up layer
/// of data that violates the boundary condition is resolved in time.
fn startup_substeps(it: usize) -> usize {
    (STARTUP_SUBSTEPS >> (2 * it).min(usize::BITS as usize - 1)).max(1)
}

const STARTUP_SUBSTEPS: usize = 64;

fn stiffness_warnings(params: &ModelParams, grid: &Grid) -> Vec<String> {
    let s = stiffness(params.diffusivity, grid.dt(), grid.dx());
    if s > STIFFNESS_WARNING {
        vec![format!(
            "d·dt/dx² = {s:.3e}: stiff modes are damped only by the start-up steps"
        )]
    } else {
        Vec::new()
    }
}

/// Solves `p_t = d p_xx + (η - δ - η τ) p` from `profile` with Strang
/// splitting: exact reaction half steps around a diffusion step.
pub fn diffuse_forward(
    profile: &InitialProfile,
    params: &ModelParams,
    domain: &SpatialDomain,
    grid: &Grid,
    schedule: TaxSchedule<'_>,
) -> Result<ForwardSolve> {
    params.validate()?;
    profile.validate()?;
    check_grid(grid, params)?;
    let mesh = Mesh::new(domain, params, grid)?;
    let (n, nt, dt, dx) = (mesh.len(), grid.nt(), grid.dt(), grid.dx());
    if let TaxSchedule::Field(f) = schedule {
        if f.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "tax field has {} values, grid has {}",
                f.len(),
                grid.len()
            )));
        }
    }
    let lap = neumann_laplacian(n, dx).affine(0.0, params.diffusivity);
    let cn_lhs = lap.affine(1.0, -0.5 * dt).factor()?;
    let cn_rhs = lap.affine(1.0, 0.5 * dt);
    // the first interval is split into sub-steps, the first of them two
    // implicit Euler halves, to resolve the layer of incompatible data
    let mut startup = Vec::new();
    for it in 0..nt - 1 {
        let m = startup_substeps(it);
        if m == 1 {
            break;
        }
        let sub = dt / m as f64;
        startup.push((m, lap.affine(1.0, -0.5 * sub).factor()?, lap.affine(1.0, 0.5 * sub)));
    }
    let g = params.eta - params.delta;
    let times = grid.times();

    // reaction exponent over [a, b] at every mesh node
    let reaction = |it: usize, first_half: bool| -> Vec<f64> {
        let (a, b) = if first_half {
            (times[it], times[it] + 0.5 * dt)
        } else {
            (times[it] + 0.5 * dt, times[it + 1])
        };
        let h = b - a;
        let scalar = |tau: &dyn Fn(f64) -> f64| {
            h * (g - params.eta * (tau(a) + 4.0 * tau(0.5 * (a + b)) + tau(b)) / 6.0)
        };
        match schedule {
            TaxSchedule::Constant(c) => vec![h * (g - params.eta * c); n],
            TaxSchedule::Optimal => vec![scalar(&|t| tau_star(params, t)); n],
            TaxSchedule::Path(f) => vec![scalar(f); n],
            TaxSchedule::Field(f) => {
                let nx = grid.nx();
                let r0 = mesh.extend(&f[it * nx..(it + 1) * nx]);
                let r1 = mesh.extend(&f[(it + 1) * nx..(it + 2) * nx]);
                let (w0, w1) = if first_half { (0.75, 0.25) } else { (0.25, 0.75) };
                r0.iter()
                    .zip(&r1)
                    .map(|(x, y)| h * (g - params.eta * (w0 * x + w1 * y)))
                    .collect()
            }
        }
    };

    let mut p: Vec<f64> = mesh.positions.iter().map(|&x| profile.eval(x)).collect();
    let weights = trapezoid_weights(n, dx);
    let mass_of = |p: &[f64]| p.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>();
    let mut out = Vec::with_capacity(grid.len());
    let mut mass = Vec::with_capacity(nt);
    out.extend_from_slice(mesh.report(&p));
    mass.push(mass_of(&p));
    for it in 0..nt - 1 {
        for (v, r) in p.iter_mut().zip(reaction(it, true)) {
            *v *= r.exp();
        }
        if let Some((m, lhs, rhs_op)) = startup.get(it) {
            let mut first = 0;
            if it == 0 {
                lhs.solve_in_place(&mut p);
                lhs.solve_in_place(&mut p);
                first = 1;
            }
            for _ in first..*m {
                let mut rhs = rhs_op.apply(&p);
                lhs.solve_in_place(&mut rhs);
                p = rhs;
            }
        } else {
            let mut rhs = cn_rhs.apply(&p);
            cn_lhs.solve_in_place(&mut rhs);
            p = rhs;
        }
        for (v, r) in p.iter_mut().zip(reaction(it, false)) {
            *v *= r.exp();
        }
        out.extend_from_slice(mesh.report(&p));
        mass.push(mass_of(&p));
    }

    let u: Vec<f64> = match schedule {
        TaxSchedule::Field(f) => out.iter().zip(f).map(|(p, t)| p * t).collect(),
        _ => {
            let nx = grid.nx();
            out.iter()
                .enumerate()
                .map(|(i, p)| {
                    let t = times[i / nx];
                    let tau = match schedule {
                        TaxSchedule::Constant(c) => c,
                        TaxSchedule::Optimal => tau_star(params, t),
                        TaxSchedule::Path(f) => f(t),
                        TaxSchedule::Field(_) => unreachable!(),
                    };
                    p * tau
                })
                .collect()
        }
    };
    let provenance = match schedule {
        TaxSchedule::Optimal => Provenance::FdOracleLocal,
        _ => Provenance::FdOracleForward,
    };
    Ok(ForwardSolve {
        field: SolutionField::from_pu(grid.clone(), out, u, provenance),
        mass,
        warnings: stiffness_warnings(params, grid),
    })
}

/// Local field: the forward solve under the a-spatial optimal tax.
pub fn local_solution_oracle(
    params: &ModelParams,
    domain: &SpatialDomain,
    profile: &InitialProfile,
    grid: &Grid,
) -> Result<SolutionField> {
    Ok(diffuse_forward(profile, params, domain, grid, TaxSchedule::Optimal)?.field)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    /// Weight of the new control in `u ← (1 - w) u + w η λ`.
    pub relaxation: f64,
    pub max_iters: usize,
    /// Converged when `sup |Δu| <= tol · sup |u|`.
    pub tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            relaxation: 0.5,
            max_iters: 200,
            tol: 1e-10,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "relaxation",
                reason: format!("must lie in (0, 1], got {}", self.relaxation),
            });
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: "must be > 0".into(),
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Costate `λ` on the reporting grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CostateField {
    pub grid: Grid,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub field: SolutionField,
    pub costate: CostateField,
    pub iterations: usize,
    /// Social cost of each control iterate, starting with the initial guess,
    /// integrated over the computational mesh.
    pub cost_history: Vec<f64>,
    /// Relaxation in force when the sweep stopped.
    pub relaxation: f64,
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Forward and backward Crank–Nicolson operators shared by all sweeps.
struct SweepOps {
    fwd_lhs: ThomasFactor,
    fwd_rhs: Tridiagonal,
    /// Sub-step count and operators of the graded start-up intervals.
    fwd_startup: Vec<(usize, ThomasFactor, Tridiagonal)>,
    bwd_lhs: ThomasFactor,
    bwd_rhs: Tridiagonal,
    bwd_half: ThomasFactor,
    eta: f64,
    dt: f64,
}

impl SweepOps {
    fn new(params: &ModelParams, n: usize, nt: usize, dt: f64, dx: f64) -> Result<Self> {
        let lap = neumann_laplacian(n, dx).affine(0.0, params.diffusivity);
        let fwd = lap.affine(params.eta - params.delta, 1.0);
        // in reversed time s = T - t: λ_s = d λ_xx - (ρ - η + δ) λ + p
        let bwd = lap.affine(-(params.rho - params.eta + params.delta), 1.0);
        let mut fwd_startup = Vec::new();
        for it in 0..nt - 1 {
            let m = startup_substeps(it);
            if m == 1 {
                break;
            }
            let sub = dt / m as f64;
            fwd_startup.push((m, fwd.affine(1.0, -0.5 * sub).factor()?, fwd.affine(1.0, 0.5 * sub)));
        }
        Ok(Self {
            fwd_lhs: fwd.affine(1.0, -0.5 * dt).factor()?,
            fwd_rhs: fwd.affine(1.0, 0.5 * dt),
            fwd_startup,
            bwd_lhs: bwd.affine(1.0, -0.5 * dt).factor()?,
            bwd_rhs: bwd.affine(1.0, 0.5 * dt),
            bwd_half: bwd.affine(1.0, -0.5 * dt).factor()?,
            eta: params.eta,
            dt,
        })
    }

    /// `p` on every time level for control `u` (both time-major on the mesh).
    fn forward(&self, p0: &[f64], u: &[f64], nt: usize) -> Vec<f64> {
        let n = p0.len();
        let mut out = Vec::with_capacity(n * nt);
        out.extend_from_slice(p0);
        let (eta, dt) = (self.eta, self.dt);
        for it in 0..nt - 1 {
            let prev = &out[it * n..(it + 1) * n];
            let (u0, u1) = (&u[it * n..(it + 1) * n], &u[(it + 1) * n..(it + 2) * n]);
            let next = if let Some((m, lhs, rhs)) = self.fwd_startup.get(it) {
                // control linear in time across the interval
                let at = |i: usize, s: f64| (1.0 - s) * u0[i] + s * u1[i];
                let h = dt / *m as f64;
                let mut x = prev.to_vec();
                for j in 0..*m {
                    let (a, b) = (j as f64 / *m as f64, (j + 1) as f64 / *m as f64);
                    if it == 0 && j == 0 {
                        // two implicit Euler halves
                        for i in 0..n {
                            x[i] -= 0.5 * h * eta * at(i, 0.75 * a + 0.25 * b);
                        }
                        lhs.solve_in_place(&mut x);
                        for i in 0..n {
                            x[i] -= 0.5 * h * eta * at(i, 0.25 * a + 0.75 * b);
                        }
                        lhs.solve_in_place(&mut x);
                    } else {
                        let mut y = rhs.apply(&x);
                        for i in 0..n {
                            y[i] -= 0.5 * h * eta * (at(i, a) + at(i, b));
                        }
                        lhs.solve_in_place(&mut y);
                        x = y;
                    }
                }
                x
            } else {
                let mut x = self.fwd_rhs.apply(prev);
                for i in 0..n {
                    x[i] -= 0.5 * dt * eta * (u0[i] + u1[i]);
                }
                self.fwd_lhs.solve_in_place(&mut x);
                x
            };
            out.extend_from_slice(&next);
        }
        out
    }

    /// `λ` on every time level, integrated backward from `λ_T = w p_T`.
    fn backward(&self, p: &[f64], n: usize, nt: usize, weight: f64) -> Vec<f64> {
        let dt = self.dt;
        let mut out = vec![0.0; n * nt];
        let last = (nt - 1) * n;
        for i in 0..n {
            out[last + i] = weight * p[last + i];
        }
        for it in (1..nt).rev() {
            let cur = out[it * n..(it + 1) * n].to_vec();
            let (p1, p0) = (&p[it * n..(it + 1) * n], &p[(it - 1) * n..it * n]);
            let next = if it == nt - 1 {
                let mut x: Vec<f64> = (0..n)
                    .map(|i| cur[i] + 0.5 * dt * (0.75 * p1[i] + 0.25 * p0[i]))
                    .collect();
                self.bwd_half.solve_in_place(&mut x);
                for i in 0..n {
                    x[i] += 0.5 * dt * (0.25 * p1[i] + 0.75 * p0[i]);
                }
                self.bwd_half.solve_in_place(&mut x);
                x
            } else {
                let mut x = self.bwd_rhs.apply(&cur);
                for i in 0..n {
                    x[i] += 0.5 * dt * (p1[i] + p0[i]);
                }
                self.bwd_lhs.solve_in_place(&mut x);
                x
            };
            out[(it - 1) * n..it * n].copy_from_slice(&next);
        }
        out
    }
}

/// Solves the coupled optimality system by relaxed forward-backward sweeps,
/// starting from the local policy `u = τ*_t p`.
pub fn forward_backward_sweep(
    profile: &InitialProfile,
    params: &ModelParams,
    domain: &SpatialDomain,
    grid: &Grid,
    config: &SweepConfig,
) -> Result<SweepResult> {
    config.validate()?;
    params.validate()?;
    profile.validate()?;
    check_grid(grid, params)?;
    let mesh = Mesh::new(domain, params, grid)?;
    let (n, nt, dt, dx) = (mesh.len(), grid.nt(), grid.dt(), grid.dx());
    let mesh_grid = Grid::new(grid.times().to_vec(), mesh.positions.clone())?;
    let ops = SweepOps::new(params, n, nt, dt, dx)?;
    let p0: Vec<f64> = mesh.positions.iter().map(|&x| profile.eval(x)).collect();

    // initial guess: the local policy on the whole mesh
    let local_domain = SpatialDomain::Bounded {
        x_a: mesh.positions[0],
        x_b: mesh.positions[n - 1],
    };
    let local = diffuse_forward(profile, params, &local_domain, &mesh_grid, TaxSchedule::Optimal)?;
    let mut u = local.field.u;

    let weight = params.terminal_weight();
    let mut relax = config.relaxation;
    let mut halvings = 0;
    let mut prev_res = f64::INFINITY;
    let mut history = Vec::new();
    let mut p = ops.forward(&p0, &u, nt);
    history.push(field_cost(params, &mesh_grid, &p, &u).total);
    let mut lambda;
    let mut iterations = 0;
    let residual = loop {
        lambda = ops.backward(&p, n, nt, weight);
        let scale = u.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let res = u
            .iter()
            .zip(&lambda)
            .fold(0.0_f64, |m, (u, l)| m.max((params.eta * l - u).abs()))
            / scale;
        if !res.is_finite() {
            return Err(Error::NonConvergence {
                iterations,
                residual: res,
            });
        }
        if res <= config.tol {
            break res;
        }
        if iterations >= config.max_iters {
            return Err(Error::NonConvergence {
                iterations,
                residual: res,
            });
        }
        if res > prev_res && halvings < 4 {
            relax *= 0.5;
            halvings += 1;
        }
        prev_res = res;
        for (u, l) in u.iter_mut().zip(&lambda) {
            *u = (1.0 - relax) * *u + relax * params.eta * l;
        }
        p = ops.forward(&p0, &u, nt);
        history.push(field_cost(params, &mesh_grid, &p, &u).total);
        iterations += 1;
    };

    let nx = grid.nx();
    let mut rp = Vec::with_capacity(grid.len());
    let mut ru = Vec::with_capacity(grid.len());
    let mut rl = Vec::with_capacity(grid.len());
    for it in 0..nt {
        let row = it * n..(it + 1) * n;
        rp.extend_from_slice(mesh.report(&p[row.clone()]));
        ru.extend_from_slice(mesh.report(&u[row.clone()]));
        rl.extend_from_slice(mesh.report(&lambda[row]));
    }
    debug_assert_eq!(rp.len(), nt * nx);
    Ok(SweepResult {
        field: SolutionField::from_pu(grid.clone(), rp, ru, Provenance::FdOracleGlobal),
        costate: CostateField {
            grid: grid.clone(),
            lambda: rl,
        },
        iterations,
        cost_history: history,
        relaxation: relax,
        residual,
        warnings: stiffness_warnings(params, grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aspatial::solve_aspatial_bvp;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P0: f64 = ModelParams::PAPER_2015_P0;

    fn unit() -> SpatialDomain {
        SpatialDomain::bounded(-1.0, 1.0).unwrap()
    }

    #[test]
    fn thomas_solves_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50;
        let m = Tridiagonal {
            sub: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            diag: (0..n).map(|_| rng.random_range(3.0..4.0)).collect(),
            sup: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = m.apply(&x);
        let y = m.solve(&b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn discrete_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n, dx) = (37, 0.05);
        let lap = neumann_laplacian(n, dx);
        for _ in 0..5 {
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let l: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs = weighted_dot(&lap.apply(&p), &l, dx);
            let rhs = weighted_dot(&p, &laplacian_adjoint_apply(&lap, dx, &l), dx);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
            let direct = lap.apply(&l);
            let adj = laplacian_adjoint_apply(&lap, dx, &l);
            for (a, b) in direct.iter().zip(&adj) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn heat_conserves_mass_and_flattens() {
        let p = ModelParams::new(0.05, 0.05, 0.04, 0.5, 30.0, 0.01).unwrap();
        let g = make_grid(&unit(), &p, 101, 101).unwrap();
        let prof = InitialProfile::centered_bump(P0).unwrap();
        let f = diffuse_forward(&prof, &p, &unit(), &g, TaxSchedule::Constant(0.0)).unwrap();
        let m0 = f.mass[0];
        assert!(f.mass.iter().all(|m| (m - m0).abs() <= 1e-10 * m0));
        let spread = |it: usize| {
            let r = f.field.p_row(it);
            r.iter().cloned().fold(f64::MIN, f64::max) - r.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert!(spread(100) < spread(0));
    }

    #[test]
    fn no_diffusion_is_exact_exponential() {
        let p = ModelParams::paper_2015().with_diffusivity(0.0);
        let g = make_grid(&unit(), &p, 21, 31).unwrap();
        let prof = InitialProfile::centered_bump(P0).unwrap();
        let f = diffuse_forward(&prof, &p, &unit(), &g, TaxSchedule::Constant(0.3)).unwrap();
        let rate = p.eta - p.delta - p.eta * 0.3;
        for it in [0, 10, 30] {
            for ix in [0, 7, 10] {
                let x = g.positions()[ix];
                let want = prof.eval(x) * (rate * g.times()[it]).exp();
                assert_relative_eq!(f.field.p_at(it, ix), want, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn sweep_homogeneous_matches_aspatial() {
        let p = ModelParams::paper_2015();
        let g = make_grid(&unit(), &p, 21, 201).unwrap();
        let r = forward_backward_sweep(&InitialProfile::constant(P0).unwrap(), &p, &unit(), &g, &SweepConfig::default()).unwrap();
        let a = solve_aspatial_bvp(&p, P0).unwrap();
        for it in [0, 50, 200] {
            let t = g.times()[it];
            for ix in [0, 10, 20] {
                assert_relative_eq!(r.field.p_at(it, ix), a.p(t), max_relative = 1e-4);
                assert_relative_eq!(r.field.u_at(it, ix), a.u(t), max_relative = 1e-4);
            }
        }
        assert!(r.iterations <= 200);
        assert!(r.cost_history.last().unwrap() <= &r.cost_history[0]);
    }

    #[test]
    fn sweep_theta_one_has_no_terminal_abatement() {
        let p = ModelParams { theta: 1.0, ..ModelParams::paper_2015() };
        let g = make_grid(&unit(), &p, 21, 101).unwrap();
        let r = forward_backward_sweep(&InitialProfile::centered_bump(P0).unwrap(), &p, &unit(), &g, &SweepConfig::default()).unwrap();
        assert!(r.field.u_row(100).iter().all(|u| u.abs() < 1e-9 * P0));
    }

    #[test]
    fn sweep_rejects_bad_config_and_reports_nonconvergence() {
        let p = ModelParams::paper_2015();
        let g = make_grid(&unit(), &p, 11, 21).unwrap();
        let prof = InitialProfile::centered_bump(P0).unwrap();
        let bad = SweepConfig { relaxation: 0.0, ..SweepConfig::default() };
        assert!(forward_backward_sweep(&prof, &p, &unit(), &g, &bad).is_err());
        let short = SweepConfig { max_iters: 1, tol: 1e-14, ..SweepConfig::default() };
        match forward_backward_sweep(&prof, &p, &unit(), &g, &short) {
            Err(Error::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oracle_grid_must_span_domain() {
        let p = ModelParams::paper_2015();
        let g = make_grid(&SpatialDomain::bounded(-0.5, 1.0).unwrap(), &p, 11, 5).unwrap();
        let e = diffuse_forward(&InitialProfile::constant(1.0).unwrap(), &p, &unit(), &g, TaxSchedule::Optimal);
        assert!(matches!(e, Err(Error::DomainMismatch(_))));
    }
}
