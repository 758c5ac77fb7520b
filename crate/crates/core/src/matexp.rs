//! Closed-form exponential of the 2x2 state/control generator.
//!
//! After the change of variables `u = p·τ` the optimality system of every
//! spatial mode with wavenumber `k` reads `ż = Θ_k z` with
//!
//! ```text
//! Θ_k = [ η - δ - d k²        -η           ]
//!       [ -η            ρ - η + δ + d k²   ]
//! ```
//!
//! `Θ_k` is symmetric with trace `ρ`, so its eigenvalues are `(ρ ± ξ_k) / 2`
//! with `ξ_k = sqrt(b_k² + 4η²)` and `b_k = 2(δ - η) + ρ + 2 d k²`. The
//! a-spatial generator is `Θ = Θ_0`.

use std::ops::Mul;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn e11(&self) -> f64 {
        self.0[0][0]
    }
    pub fn e12(&self) -> f64 {
        self.0[0][1]
    }
    pub fn e21(&self) -> f64 {
        self.0[1][0]
    }
    pub fn e22(&self) -> f64 {
        self.0[1][1]
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let m = &self.0;
        Mat2([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }

    pub fn sub(&self, other: &Mat2) -> Mat2 {
        let (a, b) = (&self.0, &other.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }

    /// Max-abs entry norm.
    pub fn max_norm(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

/// `ξ = sqrt([2(δ - η) + ρ]² + 4η²)`.
pub fn xi(params: &ModelParams) -> f64 {
    params.skew().hypot(2.0 * params.eta)
}

/// `sinh(ξ t / 2) / ξ`, with its Taylor limit for tiny `ξ t`.
fn sinh_over_xi(xi: f64, t: f64) -> f64 {
    let arg = 0.5 * xi * t;
    if arg.abs() < 1e-8 {
        0.5 * t * (1.0 + arg * arg / 6.0)
    } else {
        arg.sinh() / xi
    }
}

/// Closed-form `e^{Θ_k t}` for one wavenumber (k = 0 is the a-spatial `Θ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatExp2 {
    eta: f64,
    rho: f64,
    /// `b_k`, the diagonal asymmetry.
    skew: f64,
    /// `ξ_k`.
    xi: f64,
}

impl MatExp2 {
    pub fn new(params: &ModelParams) -> Self {
        Self::for_mode(params, 0.0)
    }

    /// Generator of the cosine/Fourier mode with squared wavenumber `k2`.
    pub fn for_mode(params: &ModelParams, k2: f64) -> Self {
        let skew = params.skew() + 2.0 * params.diffusivity * k2;
        Self {
            eta: params.eta,
            rho: params.rho,
            skew,
            xi: skew.hypot(2.0 * params.eta),
        }
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn skew(&self) -> f64 {
        self.skew
    }

    /// The generator `Θ_k` itself.
    pub fn generator(&self) -> Mat2 {
        let half = 0.5 * self.rho;
        Mat2([
            [half - 0.5 * self.skew, -self.eta],
            [-self.eta, half + 0.5 * self.skew],
        ])
    }

    /// `e^{Θ_k t}` from the cosh/sinh closed form.
    pub fn at(&self, t: f64) -> Mat2 {
        let growth = (0.5 * self.rho * t).exp();
        let c = (0.5 * self.xi * t).cosh();
        let s = sinh_over_xi(self.xi, t);
        let off = -2.0 * self.eta * growth * s;
        Mat2([
            [growth * (c - self.skew * s), off],
            [off, growth * (c + self.skew * s)],
        ])
    }

    /// The matrix exactly as typeset in the source derivation, which is half of
    /// [`MatExp2::at`]. Kept for diagnostics only.
    pub fn printed_at(&self, t: f64) -> Mat2 {
        let growth = (0.5 * self.rho * t).exp();
        let c = (0.5 * self.xi * t).cosh();
        let s = sinh_over_xi(self.xi, t);
        let off = -self.eta * growth * s;
        Mat2([
            [0.5 * growth * (c - self.skew * s), off],
            [off, 0.5 * growth * (c + self.skew * s)],
        ])
    }
}

/// Terminal coupling `κ` such that `z_T = e^{Θ T}[1; κ]` obeys
/// `u_T = η (1 - θ)/θ · p_T`.
pub fn terminal_coupling(params: &ModelParams, exp_t: &Mat2) -> Result<f64> {
    let w = params.eta * (1.0 - params.theta);
    let th = params.theta;
    let num = th * exp_t.e21() - w * exp_t.e11();
    let den = w * exp_t.e12() - th * exp_t.e22();
    let scale = exp_t.max_norm().max(1.0);
    if den.abs() <= 1e-12 * scale {
        return Err(Error::DegenerateCoupling { denominator: den });
    }
    Ok(num / den)
}

/// Exact solution of one mode of the coupled optimality system with unit
/// initial pollution and the terminal condition `u_T = γ p_T`.
///
/// Written in the eigenbasis of `Θ_k` as
/// `z(t) = α v₊ e^{-μ₊ (T - t)} + β v₋ e^{μ₋ t}`, so every exponential is
/// bounded by one (up to the mild `e^{ρT/2}`) and stiff modes do not overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    horizon: f64,
    mu_plus: f64,
    mu_minus: f64,
    v_plus: [f64; 2],
    v_minus: [f64; 2],
    alpha: f64,
    beta: f64,
}

impl ModeSolution {
    pub fn new(params: &ModelParams, k2: f64) -> Result<Self> {
        let m = MatExp2::for_mode(params, k2);
        let (b, xi, eta) = (m.skew, m.xi, params.eta);
        // xi - b and xi + b without cancellation
        let xi_minus_b = if b <= 0.0 {
            xi - b
        } else {
            4.0 * eta * eta / (xi + b)
        };
        let v_minus = [eta, 0.5 * xi_minus_b];
        let v_plus = [-0.5 * xi_minus_b, eta];
        let mu_plus = 0.5 * (params.rho + xi);
        let mu_minus = 0.5 * (params.rho - xi);
        let big_t = params.horizon;
        let gamma = params.terminal_ratio();

        let a11 = v_plus[0] * (-mu_plus * big_t).exp();
        let a12 = v_minus[0];
        let a21 = v_plus[1] - gamma * v_plus[0];
        let a22 = (mu_minus * big_t).exp() * (v_minus[1] - gamma * v_minus[0]);
        let det = a11 * a22 - a12 * a21;
        let scale = (a11.abs() + a12.abs()) * (a21.abs() + a22.abs());
        if det.abs() <= 1e-14 * scale {
            return Err(Error::DegenerateCoupling { denominator: det });
        }
        let alpha = a22 / det;
        let beta = -a21 / det;
        Ok(Self {
            horizon: big_t,
            mu_plus,
            mu_minus,
            v_plus,
            v_minus,
            alpha,
            beta,
        })
    }

    /// `(p, u)` of this mode at time `t` per unit initial amplitude.
    #[inline]
    pub fn at(&self, t: f64) -> [f64; 2] {
        let fp = self.alpha * (-self.mu_plus * (self.horizon - t)).exp();
        let fm = self.beta * (self.mu_minus * t).exp();
        [
            fp * self.v_plus[0] + fm * self.v_minus[0],
            fp * self.v_plus[1] + fm * self.v_minus[1],
        ]
    }
}
