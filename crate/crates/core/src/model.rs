//! Model constants, spatial domains and initial pollution profiles.

use crate::error::{Error, Result};

/// Economic and environmental constants of the pollution control problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Emission rate per unit of output growth.
    pub eta: f64,
    /// Natural decay rate of the pollution stock.
    pub delta: f64,
    /// Discount rate.
    pub rho: f64,
    /// Weight of the running social loss; `(1 - theta) / theta` weighs terminal damage.
    pub theta: f64,
    /// Planning horizon `T`.
    pub horizon: f64,
    /// Diffusion coefficient `d`.
    pub diffusivity: f64,
}

impl ModelParams {
    pub fn new(
        eta: f64,
        delta: f64,
        rho: f64,
        theta: f64,
        horizon: f64,
        diffusivity: f64,
    ) -> Result<Self> {
        let params = Self {
            eta,
            delta,
            rho,
            theta,
            horizon,
            diffusivity,
        };
        params.validate()?;
        Ok(params)
    }

    /// The calibration used for the 2015 CO2 illustration.
    pub fn paper_2015() -> Self {
        Self {
            eta: 0.051,
            delta: 0.05,
            rho: 0.04,
            theta: 0.5,
            horizon: 30.0,
            diffusivity: 0.01,
        }
    }

    /// Initial concentration used alongside [`ModelParams::paper_2015`] (ppm).
    pub const PAPER_2015_P0: f64 = 400.23;

    pub fn validate(&self) -> Result<()> {
        fn check(name: &'static str, ok: bool, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: reason.to_string(),
                })
            }
        }
        let finite = [
            self.eta,
            self.delta,
            self.rho,
            self.theta,
            self.horizon,
            self.diffusivity,
        ]
        .iter()
        .all(|v| v.is_finite());
        check("params", finite, "all parameters must be finite")?;
        check("eta", self.eta > 0.0, "must be > 0")?;
        check("delta", self.delta > 0.0, "must be > 0")?;
        check("rho", self.rho > 0.0, "must be > 0")?;
        check(
            "theta",
            self.theta > 0.0 && self.theta <= 1.0,
            "must lie in (0, 1]",
        )?;
        check("horizon", self.horizon > 0.0, "must be > 0")?;
        check("diffusivity", self.diffusivity >= 0.0, "must be >= 0")
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_diffusivity(mut self, diffusivity: f64) -> Self {
        self.diffusivity = diffusivity;
        self
    }

    /// `2(delta - eta) + rho`, the asymmetry of the generator's diagonal.
    pub fn skew(&self) -> f64 {
        2.0 * (self.delta - self.eta) + self.rho
    }

    /// Required ratio `u_T / p_T = eta (1 - theta) / theta`.
    pub fn terminal_ratio(&self) -> f64 {
        self.eta * (1.0 - self.theta) / self.theta
    }

    /// Terminal damage weight `(1 - theta) / theta`.
    pub fn terminal_weight(&self) -> f64 {
        (1.0 - self.theta) / self.theta
    }

    /// Tax level `(eta - delta) / eta` above which aggregate pollution cannot grow.
    pub fn tax_threshold(&self) -> f64 {
        (self.eta - self.delta) / self.eta
    }
}

/// Spatial support of the problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialDomain {
    /// Interval `[x_a, x_b]` with zero-flux (Neumann) boundaries.
    Bounded { x_a: f64, x_b: f64 },
    /// The real line; `half_width` only sets the reporting window `[-w, w]`.
    Unbounded { half_width: f64 },
}

impl SpatialDomain {
    pub fn bounded(x_a: f64, x_b: f64) -> Result<Self> {
        let d = SpatialDomain::Bounded { x_a, x_b };
        d.validate()?;
        Ok(d)
    }

    pub fn unbounded(half_width: f64) -> Result<Self> {
        let d = SpatialDomain::Unbounded { half_width };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpatialDomain::Bounded { x_a, x_b } => {
                if !(x_a.is_finite() && x_b.is_finite() && x_a < x_b) {
                    return Err(Error::InvalidParameter {
                        name: "domain",
                        reason: format!("bounded domain needs x_a < x_b, got [{x_a}, {x_b}]"),
                    });
                }
            }
            SpatialDomain::Unbounded { half_width } => {
                if !(half_width.is_finite() && half_width > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "domain",
                        reason: format!("window half-width must be > 0, got {half_width}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Interval covered by grids: the domain itself or the reporting window.
    pub fn extent(&self) -> (f64, f64) {
        match *self {
            SpatialDomain::Bounded { x_a, x_b } => (x_a, x_b),
            SpatialDomain::Unbounded { half_width } => (-half_width, half_width),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, SpatialDomain::Bounded { .. })
    }
}

/// Initial pollution distribution `p0(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    Constant { level: f64 },
    /// `(3/4) level + (1/2) level · exp(-x²)`, a peak at the origin.
    CenteredBump { level: f64 },
    /// Piecewise-linear through the samples, constant beyond the first and last.
    Tabulated { positions: Vec<f64>, values: Vec<f64> },
}

impl InitialProfile {
    pub fn constant(level: f64) -> Result<Self> {
        let p = InitialProfile::Constant { level };
        p.validate()?;
        Ok(p)
    }

    pub fn centered_bump(level: f64) -> Result<Self> {
        let p = InitialProfile::CenteredBump { level };
        p.validate()?;
        Ok(p)
    }

    pub fn tabulated(positions: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let p = InitialProfile::Tabulated { positions, values };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialProfile::Constant { level } | InitialProfile::CenteredBump { level } => {
                if !(level.is_finite() && *level > 0.0) {
                    return Err(Error::InvalidProfile(format!(
                        "level must be finite and > 0, got {level}"
                    )));
                }
            }
            InitialProfile::Tabulated { positions, values } => {
                if positions.len() != values.len() {
                    return Err(Error::InvalidProfile(format!(
                        "{} positions but {} values",
                        positions.len(),
                        values.len()
                    )));
                }
                if positions.len() < 3 {
                    return Err(Error::InvalidProfile(
                        "tabulated profile needs at least 3 samples".into(),
                    ));
                }
                if positions.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidProfile(
                        "tabulated positions must be strictly increasing".into(),
                    ));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::InvalidProfile(format!(
                        "tabulated values must be finite and > 0, found {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialProfile::Constant { level } => *level,
            InitialProfile::CenteredBump { level } => 0.75 * level + 0.5 * level * (-x * x).exp(),
            InitialProfile::Tabulated { positions, values } => {
                let n = positions.len();
                if x <= positions[0] {
                    return values[0];
                }
                if x >= positions[n - 1] {
                    return values[n - 1];
                }
                let i = positions.partition_point(|&p| p <= x) - 1;
                let w = (x - positions[i]) / (positions[i + 1] - positions[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    /// Spatially constant profile (Tabulated counts only when every sample is equal).
    pub fn is_homogeneous(&self) -> bool {
        match self {
            InitialProfile::Constant { .. } => true,
            InitialProfile::CenteredBump { .. } => false,
            InitialProfile::Tabulated { values, .. } => values.iter().all(|v| *v == values[0]),
        }
    }

    /// Limits `(p0(-inf), p0(+inf))`.
    pub fn far_field(&self) -> (f64, f64) {
        match self {
            InitialProfile::Constant { level } => (*level, *level),
            InitialProfile::CenteredBump { level } => (0.75 * level, 0.75 * level),
            InitialProfile::Tabulated { values, .. } => (values[0], values[values.len() - 1]),
        }
    }

    /// Largest and smallest values the profile takes anywhere on the line.
    pub fn range(&self) -> (f64, f64) {
        match self {
            InitialProfile::Constant { level } => (*level, *level),
            InitialProfile::CenteredBump { level } => (0.75 * level, 1.25 * level),
            InitialProfile::Tabulated { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                }),
        }
    }
}
