//! Surface data for the three illustrations: homogeneous and bump profiles on
//! `[-1, 1]`, and the bump on the line.

use std::fmt::Write as _;
use std::str::FromStr;

use transpol::greens::{GlobalUnbounded, LocalUnbounded};
use transpol::spectral::{GlobalBounded, LocalBounded};
use transpol::{make_grid, Execution, PointSolution, SolutionField};

use crate::error::{InputError, RunError};
use crate::run::{is_input_error, surface_csv, ArtifactWriter};
use crate::scenario::Scenario;

/// Display resolution of every figure surface.
pub const DISPLAY_N: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
    FigUnbounded,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::Fig1, Figure::Fig2, Figure::FigUnbounded];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::FigUnbounded => "fig_unbounded",
        }
    }

    /// The shipped scenario text for this figure.
    pub fn canonical_text(self) -> &'static str {
        match self {
            Figure::Fig1 => include_str!("../scenarios/fig1.scn"),
            Figure::Fig2 => include_str!("../scenarios/fig2.scn"),
            Figure::FigUnbounded => include_str!("../scenarios/fig_unbounded.scn"),
        }
    }

    pub fn canonical(self) -> Scenario {
        let mut s = Scenario::parse(self.canonical_text(), false).expect("shipped scenario parses");
        s.name = self.name().into();
        s
    }

    /// Rejects scenarios whose domain or profile does not fit the figure.
    pub fn check_compatible(self, s: &Scenario) -> Result<(), InputError> {
        let homogeneous = s.profile.is_homogeneous();
        let problem = match self {
            Figure::Fig1 if !s.domain.is_bounded() => Some("fig1 needs a bounded domain, scenario has an unbounded one"),
            Figure::Fig1 if !homogeneous => Some("fig1 needs a spatially constant profile, scenario profile varies in x"),
            Figure::Fig2 if !s.domain.is_bounded() => Some("fig2 needs a bounded domain, scenario has an unbounded one"),
            Figure::Fig2 if homogeneous => Some("fig2 needs a heterogeneous profile, scenario profile is constant"),
            Figure::FigUnbounded if s.domain.is_bounded() => {
                Some("fig_unbounded needs an unbounded domain, scenario has a bounded one")
            }
            _ => None,
        };
        match problem {
            Some(m) => Err(InputError::Incompatible(m.into())),
            None => Ok(()),
        }
    }
}

impl FromStr for Figure {
    type Err = InputError;

    fn from_str(s: &str) -> Result<Self, InputError> {
        Figure::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            InputError::Incompatible(format!("unknown figure `{s}`; expected fig1, fig2 or fig_unbounded"))
        })
    }
}

/// Shape measurements of the figure surfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureShape {
    /// `x` where the global tax at `t = 0` is smallest.
    pub global_tau0_argmin: f64,
    /// `(max - min) / mean` of the global tax at `t = 0` over `[-1, 1]`.
    pub global_tau0_variation: f64,
    /// Largest one-step rise of global pollution, relative to its sup; `<= 0`
    /// means non-increasing in `t` at every `x`.
    pub global_max_rise: f64,
    /// `(p(0, T) - p(0, 0)) / p(0, 0)` of the local surface.
    pub local_center_change: f64,
    /// Largest `(max_x - min_x) / max_x` over time rows of the global surface.
    pub global_spatial_spread: f64,
}

impl FigureShape {
    pub fn measure(local: &SolutionField, global: &SolutionField) -> Self {
        let g = &global.grid;
        let (nx, nt) = (g.nx(), g.nt());
        let inside: Vec<usize> = (0..nx).filter(|&i| g.positions()[i].abs() <= 1.0 + 1e-12).collect();
        let tau0: Vec<(f64, f64)> = inside
            .iter()
            .filter_map(|&i| global.tau_at(0, i).map(|t| (g.positions()[i], t)))
            .collect();
        let (argmin, min) = tau0.iter().fold((f64::NAN, f64::INFINITY), |a, &(x, t)| if t < a.1 { (x, t) } else { a });
        let max = tau0.iter().fold(f64::NEG_INFINITY, |m, &(_, t)| m.max(t));
        let mean = tau0.iter().map(|&(_, t)| t).sum::<f64>() / tau0.len() as f64;
        let sup = global.p_sup();
        let mut rise = f64::NEG_INFINITY;
        let mut spread = 0.0_f64;
        for it in 0..nt {
            let row = global.p_row(it);
            if it > 0 {
                let prev = global.p_row(it - 1);
                for ix in 0..nx {
                    rise = rise.max((row[ix] - prev[ix]) / sup);
                }
            }
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            spread = spread.max((hi - lo) / hi.abs());
        }
        let lg = &local.grid;
        let c = lg
            .positions()
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |a, (i, x)| if x.abs() < a.1 { (i, x.abs()) } else { a })
            .0;
        let (start, end) = (local.p_at(0, c), local.p_at(lg.nt() - 1, c));
        Self {
            global_tau0_argmin: argmin,
            global_tau0_variation: (max - min) / mean,
            global_max_rise: rise,
            local_center_change: (end - start) / start,
            global_spatial_spread: spread,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "global_tau0_argmin {:?}", self.global_tau0_argmin);
        let _ = writeln!(s, "global_tau0_variation {:e}", self.global_tau0_variation);
        let _ = writeln!(s, "global_max_rise {:e}", self.global_max_rise);
        let _ = writeln!(s, "local_center_change {:e}", self.local_center_change);
        let _ = writeln!(s, "global_spatial_spread {:e}", self.global_spatial_spread);
        s
    }
}

/// Local and global closed-form surfaces on the 101×101 display grid.
pub fn figure_fields(fig: Figure, s: &Scenario, exec: Execution) -> Result<(SolutionField, SolutionField), RunError> {
    fig.check_compatible(s)?;
    let map = |e: transpol::Error| -> RunError {
        if is_input_error(&e) {
            InputError::Incompatible(e.to_string()).into()
        } else {
            RunError::Solver(e.to_string())
        }
    };
    let grid = make_grid(&s.domain, &s.params, DISPLAY_N, DISPLAY_N).map_err(map)?;
    let (local, global): (Box<dyn PointSolution>, Box<dyn PointSolution>) = if s.domain.is_bounded() {
        (
            Box::new(LocalBounded::new(&s.params, &s.domain, &s.profile, s.basis, s.modes).map_err(map)?),
            Box::new(GlobalBounded::new(&s.params, &s.domain, &s.profile, s.basis, s.modes).map_err(map)?),
        )
    } else {
        (
            Box::new(LocalUnbounded::new(&s.params, &s.profile, s.kernel).map_err(map)?),
            Box::new(GlobalUnbounded::new(&s.params, &s.profile).map_err(map)?),
        )
    };
    let (l, g) = (local.sample(&grid, exec), global.sample(&grid, exec));
    if !(l.is_finite() && g.is_finite()) {
        return Err(RunError::Solver(format!("{}: non-finite surface values", fig.name())));
    }
    Ok((l, g))
}

/// Writes the figure CSVs, a shape summary and a MANIFEST into `s.out_dir`.
///
/// * `fig1`: `fig1_p.csv`, `fig1_tau.csv` (local and global coincide)
/// * `fig2`, `fig_unbounded`: `{name}_{local,global}_{p,tau}.csv`
pub fn emit_figure_data(fig: Figure, s: &Scenario, exec: Execution) -> Result<FigureShape, RunError> {
    let (local, global) = figure_fields(fig, s, exec)?;
    let mut w = ArtifactWriter::new(&s.out_dir)?;
    let name = fig.name();
    let p = |f: &SolutionField| surface_csv(&f.grid, f.p.iter().map(|&v| Some(v)));
    let tau = |f: &SolutionField| surface_csv(&f.grid, f.tau.iter().copied());
    match fig {
        Figure::Fig1 => {
            w.write(&format!("{name}_p.csv"), &p(&global))?;
            w.write(&format!("{name}_tau.csv"), &tau(&global))?;
        }
        Figure::Fig2 | Figure::FigUnbounded => {
            w.write(&format!("{name}_local_p.csv"), &p(&local))?;
            w.write(&format!("{name}_local_tau.csv"), &tau(&local))?;
            w.write(&format!("{name}_global_p.csv"), &p(&global))?;
            w.write(&format!("{name}_global_tau.csv"), &tau(&global))?;
        }
    }
    let shape = FigureShape::measure(&local, &global);
    w.write(&format!("{name}_shape.txt"), &shape.render())?;
    w.finish()?;
    Ok(shape)
}
