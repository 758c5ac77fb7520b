//! The a-spatial problem: optimal tax, optimal paths and social cost.
//!
//! With `u = p τ` the first-order conditions are the linear system
//! `ṗ = (η - δ) p - η u`, `u̇ = (ρ - η + δ) u - η p`, closed by
//! `u_T = η (1 - θ)/θ · p_T`. Its solution is `z_t = p0 e^{Θt} [1; κ]`.

use crate::error::{Error, Result};
use crate::matexp::{terminal_coupling, MatExp2};
use crate::model::ModelParams;
use crate::quadrature::{simpson, simpson_fn};

/// Sample count used by [`aspatial_cost`].
pub const COST_SAMPLES: usize = 4001;

fn tanh_remaining(params: &ModelParams, xi: f64, t: f64) -> f64 {
    (0.5 * xi * (params.horizon - t)).tanh()
}

/// Optimal tax rate at time `t`; independent of the initial pollution level.
pub fn tau_star(params: &ModelParams, t: f64) -> f64 {
    let (eta, th) = (params.eta, params.theta);
    let b = params.skew();
    let xi = crate::matexp::xi(params);
    let h = tanh_remaining(params, xi, t);
    let num = eta * ((1.0 - th) * xi - ((1.0 - th) * b - 2.0 * th) * h);
    let den = th * xi + th * b * h + 2.0 * eta * eta * (1.0 - th) * h;
    num / den
}

/// The tanh expression exactly as typeset, whose `θ b` term lacks the tanh
/// factor. It matches [`tau_star`] only when `b = 0` or `t = T`.
pub fn tau_star_printed(params: &ModelParams, t: f64) -> f64 {
    let (eta, th) = (params.eta, params.theta);
    let b = params.skew();
    let xi = crate::matexp::xi(params);
    let h = tanh_remaining(params, xi, t);
    let num = eta * ((1.0 - th) * xi - ((1.0 - th) * b - 2.0 * th) * h);
    let den = th * b + 2.0 * eta * eta * (1.0 - th) * h + th * xi;
    num / den
}

/// Both closed forms of the optimal tax at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaxForms {
    pub tanh: f64,
    /// `None` when the arctanh argument leaves `(-1, 1)`.
    pub arctanh: Option<f64>,
}

impl TaxForms {
    /// Relative disagreement of the two forms, if both exist.
    pub fn disagreement(&self) -> Option<f64> {
        self.arctanh
            .map(|a| (a - self.tanh).abs() / self.tanh.abs().max(f64::MIN_POSITIVE))
    }
}

/// `τ_t = (a + ξ tanh(ξ(T - t)/2 + artanh z)) / (2η)` with `a = 2(η - δ) - ρ`.
pub fn tax_forms(params: &ModelParams, t: f64) -> TaxForms {
    let (eta, th) = (params.eta, params.theta);
    let a = -params.skew();
    let xi = crate::matexp::xi(params);
    let z = (2.0 * (1.0 - th) * eta * eta - a * th) / (th * xi);
    let arctanh = (z.abs() < 1.0).then(|| {
        let arg = 0.5 * xi * (params.horizon - t) + z.atanh();
        (a + xi * arg.tanh()) / (2.0 * eta)
    });
    TaxForms {
        tanh: tau_star(params, t),
        arctanh,
    }
}

/// `∫₀ᵗ (η - δ - η τ*_s) ds` by composite Simpson on the tax path.
pub fn tax_integral(params: &ModelParams, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let panels = ((t / params.horizon * 2000.0).ceil() as usize).max(64);
    let growth = params.eta - params.delta;
    simpson_fn(|s| growth - params.eta * tau_star(params, s), 0.0, t, panels)
}

/// Optimal a-spatial pair `(p, u)` built from the terminal coupling `κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AspatialSolution {
    params: ModelParams,
    p0: f64,
    kappa: f64,
    exp: MatExp2,
}

impl AspatialSolution {
    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `[p_t, u_t]`.
    pub fn state(&self, t: f64) -> [f64; 2] {
        let z = self.exp.at(t).apply([1.0, self.kappa]);
        [self.p0 * z[0], self.p0 * z[1]]
    }

    pub fn p(&self, t: f64) -> f64 {
        self.state(t)[0]
    }

    pub fn u(&self, t: f64) -> f64 {
        self.state(t)[1]
    }

    pub fn tau(&self, t: f64) -> f64 {
        let z = self.exp.at(t).apply([1.0, self.kappa]);
        z[1] / z[0]
    }

    /// `|u_T / p_T - η(1 - θ)/θ|`.
    pub fn terminal_ratio_residual(&self) -> f64 {
        (self.tau(self.params.horizon) - self.params.terminal_ratio()).abs()
    }

    /// Paths on `n` uniform times in `[0, T]`: `(t, p, u)`.
    pub fn sample(&self, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let ts = crate::grid::linspace(0.0, self.params.horizon, n);
        let (p, u) = ts.iter().map(|&t| {
            let z = self.state(t);
            (z[0], z[1])
        }).unzip();
        (ts, p, u)
    }
}

/// Solves the two-point boundary problem in closed form.
pub fn solve_aspatial_bvp(params: &ModelParams, p0: f64) -> Result<AspatialSolution> {
    params.validate()?;
    if !(p0.is_finite() && p0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "p0",
            reason: format!("must be finite and > 0, got {p0}"),
        });
    }
    let exp = MatExp2::new(params);
    let kappa = terminal_coupling(params, &exp.at(params.horizon))?;
    Ok(AspatialSolution {
        params: *params,
        p0,
        kappa,
        exp,
    })
}

/// Discounted running cost plus weighted terminal damage of sampled paths on
/// a uniform time axis with step `dt`.
pub fn sampled_cost(params: &ModelParams, p: &[f64], u: &[f64], dt: f64) -> f64 {
    assert_eq!(p.len(), u.len());
    let integrand: Vec<f64> = p
        .iter()
        .zip(u)
        .enumerate()
        .map(|(i, (pv, uv))| 0.5 * (pv * pv + uv * uv) * (-params.rho * i as f64 * dt).exp())
        .collect();
    let t_end = dt * (p.len() - 1) as f64;
    let pt = p[p.len() - 1];
    simpson(&integrand, dt) + params.terminal_weight() * 0.5 * pt * pt * (-params.rho * t_end).exp()
}

/// Social cost of arbitrary paths, Simpson on `nt` samples (at least 201).
pub fn path_cost<P, U>(params: &ModelParams, p: P, u: U, nt: usize) -> f64
where
    P: Fn(f64) -> f64,
    U: Fn(f64) -> f64,
{
    let nt = nt.max(201);
    let ts = crate::grid::linspace(0.0, params.horizon, nt);
    let ps: Vec<f64> = ts.iter().map(|&t| p(t)).collect();
    let us: Vec<f64> = ts.iter().map(|&t| u(t)).collect();
    sampled_cost(params, &ps, &us, ts[1] - ts[0])
}

/// Social cost of the closed-form optimum.
pub fn aspatial_cost(params: &ModelParams, sol: &AspatialSolution) -> f64 {
    path_cost(params, |t| sol.p(t), |t| sol.u(t), COST_SAMPLES)
}

/// Cost of an arbitrary abatement path `u(t)`, with pollution propagated from
/// `p0` by classical RK4 on `nt - 1` steps.
pub fn cost_of_control<U: Fn(f64) -> f64>(params: &ModelParams, p0: f64, u: U, nt: usize) -> f64 {
    let nt = nt.max(201);
    let dt = params.horizon / (nt - 1) as f64;
    let g = params.eta - params.delta;
    let f = |t: f64, p: f64| g * p - params.eta * u(t);
    let mut ps = Vec::with_capacity(nt);
    let mut us = Vec::with_capacity(nt);
    let mut p = p0;
    for i in 0..nt {
        let t = i as f64 * dt;
        ps.push(p);
        us.push(u(t));
        if i + 1 < nt {
            let k1 = f(t, p);
            let k2 = f(t + 0.5 * dt, p + 0.5 * dt * k1);
            let k3 = f(t + 0.5 * dt, p + 0.5 * dt * k2);
            let k4 = f(t + dt, p + dt * k3);
            p += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    sampled_cost(params, &ps, &us, dt)
}

fn printed_denominator(params: &ModelParams, xi: f64) -> f64 {
    let (eta, th) = (params.eta, params.theta);
    let b = params.skew();
    (0.5 * params.rho * params.horizon).exp()
        * (th * xi + th * b + 2.0 * eta * eta * (1.0 - th) * (0.5 * xi * params.horizon).tanh())
}

/// The abatement path as typeset; diagnostic only.
pub fn printed_u(params: &ModelParams, p0: f64, t: f64) -> f64 {
    let (eta, th) = (params.eta, params.theta);
    let b = params.skew();
    let xi = crate::matexp::xi(params);
    let h = tanh_remaining(params, xi, t);
    eta * ((1.0 - th) * xi - ((1.0 - th) * b - 2.0 * th) * h) * p0 / printed_denominator(params, xi)
}

/// The pollution path as typeset; diagnostic only.
pub fn printed_p(params: &ModelParams, p0: f64, t: f64) -> f64 {
    let (eta, th) = (params.eta, params.theta);
    let b = params.skew();
    let xi = crate::matexp::xi(params);
    let h = tanh_remaining(params, xi, t);
    (th * b + 2.0 * eta * eta * (1.0 - th) * h + th * xi) * p0 / printed_denominator(params, xi)
}

/// Gaps between the typeset scalar paths and the exact solution, all relative
/// to the sup norm of the exact quantity over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormDiscrepancy {
    /// `2(δ - η) + ρ`; the ratio gap vanishes when this is zero.
    pub skew: f64,
    /// `printed_u / printed_p` against the exact tax.
    pub ratio_gap: f64,
    pub p_level_gap: f64,
    pub u_level_gap: f64,
}

pub fn closed_form_discrepancy(params: &ModelParams, p0: f64, nt: usize) -> Result<ClosedFormDiscrepancy> {
    let sol = solve_aspatial_bvp(params, p0)?;
    let ts = crate::grid::linspace(0.0, params.horizon, nt.max(2));
    let (mut dr, mut dp, mut du) = (0.0_f64, 0.0_f64, 0.0_f64);
    let (mut sr, mut sp, mut su) = (0.0_f64, 0.0_f64, 0.0_f64);
    for &t in &ts {
        let [p, u] = sol.state(t);
        let (pp, pu) = (printed_p(params, p0, t), printed_u(params, p0, t));
        dr = dr.max((pu / pp - u / p).abs());
        dp = dp.max((pp - p).abs());
        du = du.max((pu - u).abs());
        sr = sr.max((u / p).abs());
        sp = sp.max(p.abs());
        su = su.max(u.abs());
    }
    Ok(ClosedFormDiscrepancy {
        skew: params.skew(),
        ratio_gap: dr / sr.max(f64::MIN_POSITIVE),
        p_level_gap: dp / sp,
        u_level_gap: du / su.max(f64::MIN_POSITIVE),
    })
}
