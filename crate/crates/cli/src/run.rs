//! Runs a scenario's solvers and checks and writes their artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use transpol::analysis::{
    check_aggregate_decay, check_local_equals_global, check_longrun_cleanup, check_upper_bound, spatial_cost,
    CleanupPolicy, CostBreakdown, PropositionReport,
};
use transpol::aspatial::{closed_form_discrepancy, solve_aspatial_bvp, ClosedFormDiscrepancy};
use transpol::greens::{global_solution_unbounded, local_solution_unbounded};
use transpol::oracle::{forward_backward_sweep, local_solution_oracle};
use transpol::spectral::{GlobalBounded, LocalBounded};
use transpol::{make_grid, Error, Execution, Grid, PointSolution, Provenance, SolutionField};

use crate::error::{InputError, RunError};
use crate::scenario::{Check, Scenario, Solver};

/// Errors caused by what the scenario asks for, as opposed to numerical failure.
pub fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidProfile(_)
            | Error::DomainMismatch(_)
            | Error::TooFewSamples { .. }
            | Error::Unsupported(_)
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Run independent solvers concurrently and sample fields in parallel.
    pub parallel: bool,
}

impl RunOptions {
    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub solver: Solver,
    pub field: SolutionField,
    pub cost: CostBreakdown,
    /// Sweep iterations, for the coupled oracle.
    pub iterations: Option<usize>,
    pub notes: Vec<String>,
}

/// Aspatial optimum applied column by column: `p0(x)` times the unit path.
fn aspatial_field(s: &Scenario, grid: &Grid) -> Result<SolutionField, Error> {
    let sol = solve_aspatial_bvp(&s.params, 1.0)?;
    let levels: Vec<f64> = grid.positions().iter().map(|&x| s.profile.eval(x)).collect();
    let (mut p, mut u) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
    for &t in grid.times() {
        let [zp, zu] = sol.state(t);
        for &l in &levels {
            p.push(l * zp);
            u.push(l * zu);
        }
    }
    Ok(SolutionField::from_pu(grid.clone(), p, u, Provenance::AspatialClosedForm))
}

pub fn solve(s: &Scenario, solver: Solver, exec: Execution) -> Result<SolverOutput, Error> {
    let grid = make_grid(&s.domain, &s.params, s.nx, s.nt)?;
    let mut iterations = None;
    let mut notes = Vec::new();
    let field = match solver {
        Solver::Aspatial => aspatial_field(s, &grid)?,
        Solver::SpectralLocal => {
            LocalBounded::new(&s.params, &s.domain, &s.profile, s.basis, s.modes)?.sample(&grid, exec)
        }
        Solver::SpectralGlobal => {
            GlobalBounded::new(&s.params, &s.domain, &s.profile, s.basis, s.modes)?.sample(&grid, exec)
        }
        Solver::GreensLocal => local_solution_unbounded(&s.params, &s.profile, &grid, s.kernel, exec)?,
        Solver::GreensGlobal => global_solution_unbounded(&s.params, &s.profile, &grid, exec)?,
        Solver::OracleLocal => local_solution_oracle(&s.params, &s.domain, &s.profile, &grid)?,
        Solver::OracleGlobal => {
            let r = forward_backward_sweep(&s.profile, &s.params, &s.domain, &grid, &s.sweep)?;
            iterations = Some(r.iterations);
            notes.push(format!(
                "sweep: relaxation {} residual {:e} cost first {:.12e} last {:.12e}",
                r.relaxation,
                r.residual,
                r.cost_history[0],
                r.cost_history[r.cost_history.len() - 1]
            ));
            notes.extend(r.warnings);
            r.field
        }
    };
    if !field.is_finite() {
        return Err(Error::Quadrature {
            requested: 0.0,
            achieved: f64::NAN,
        });
    }
    Ok(SolverOutput {
        solver,
        cost: spatial_cost(&s.params, &field),
        field,
        iterations,
        notes,
    })
}

/// Runs every requested solver; concurrently when `parallel`.
pub fn solve_all(s: &Scenario, opts: RunOptions) -> Vec<(Solver, Result<SolverOutput, Error>)> {
    let exec = opts.execution();
    if !opts.parallel {
        return s.solvers.iter().map(|&v| (v, solve(s, v, exec))).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = s
            .solvers
            .iter()
            .map(|&v| (v, scope.spawn(move || solve(s, v, exec))))
            .collect();
        handles
            .into_iter()
            .map(|(v, h)| (v, h.join().expect("solver thread panicked")))
            .collect()
    })
}

/// Runs one check. Field checks run on every output; the upper bound skips
/// the aspatial field unless it solves the spatial problem.
pub fn run_check(s: &Scenario, check: Check, outputs: &[SolverOutput], exec: Execution) -> Result<Vec<PropositionReport>, Error> {
    let named = |mut r: PropositionReport, o: &SolverOutput| {
        r.name = format!("{}[{}]", r.name, o.solver);
        r
    };
    Ok(match check {
        Check::LocalEqualsGlobal => vec![check_local_equals_global(&s.params, &s.domain, &s.profile, exec)?],
        Check::AggregateDecay => outputs
            .iter()
            .map(|o| named(check_aggregate_decay(&s.params, &o.field), o))
            .collect(),
        Check::UpperBound => {
            let mut v = Vec::new();
            for o in outputs {
                if o.solver == Solver::Aspatial && !(s.profile.is_homogeneous() || s.params.diffusivity == 0.0) {
                    continue;
                }
                v.push(named(check_upper_bound(&s.params, &s.domain, &o.field, &s.profile, exec)?, o));
            }
            v
        }
        Check::LongrunCleanup => {
            let policy = match s.cleanup_tax {
                Some(t) => CleanupPolicy::FixedTax(t),
                None => CleanupPolicy::GlobalOptimal,
            };
            vec![check_longrun_cleanup(&s.params, &s.domain, &s.profile, &s.horizons, policy, exec)?]
        }
    })
}

/// `x,t,value` rows in full round-trip precision; undefined taxes are skipped.
pub fn surface_csv(grid: &Grid, values: impl Iterator<Item = Option<f64>>) -> String {
    let mut out = String::from("x,t,value\n");
    let nx = grid.nx();
    for (k, v) in values.enumerate() {
        if let Some(v) = v {
            debug_assert!(v.is_finite());
            let (x, t) = (grid.positions()[k % nx], grid.times()[k / nx]);
            let _ = writeln!(out, "{x:?},{t:?},{v:?}");
        }
    }
    out
}

/// Collects written files for the MANIFEST.
#[derive(Debug, Default)]
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<(String, String)>,
    failures: Vec<String>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            ..Default::default()
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Output { path, source })?;
        self.files.push((name.to_string(), hex::encode(Sha256::digest(contents.as_bytes()))));
        Ok(())
    }

    pub fn fail(&mut self, what: String) {
        self.failures.push(what);
    }

    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes `MANIFEST`: one `sha256  name` line per file, then failures.
    pub fn finish(self) -> Result<(), RunError> {
        let mut m = String::new();
        for (name, hash) in &self.files {
            let _ = writeln!(m, "sha256 {hash}  {name}");
        }
        for f in &self.failures {
            let _ = writeln!(m, "failed {f}");
        }
        let path = self.dir.join("MANIFEST");
        fs::write(&path, m).map_err(|source| RunError::Output { path, source })
    }
}

pub fn write_surfaces(w: &mut ArtifactWriter, prefix: &str, field: &SolutionField) -> Result<(), RunError> {
    let g = &field.grid;
    w.write(&format!("{prefix}_p.csv"), &surface_csv(g, field.p.iter().map(|&v| Some(v))))?;
    w.write(&format!("{prefix}_u.csv"), &surface_csv(g, field.u.iter().map(|&v| Some(v))))?;
    w.write(&format!("{prefix}_tau.csv"), &surface_csv(g, field.tau.iter().copied()))
}

/// Everything a run produced, for callers that want more than the files.
#[derive(Debug)]
pub struct RunSummary {
    pub outputs: Vec<SolverOutput>,
    pub failures: Vec<(Solver, Error)>,
    pub reports: Vec<PropositionReport>,
    pub discrepancy: ClosedFormDiscrepancy,
    pub report: String,
}

fn fmt_cost(c: &CostBreakdown) -> String {
    format!("running {:.12e} terminal {:.12e} total {:.12e}", c.running, c.terminal, c.total)
}

/// Renders `report.txt`.
pub fn render_report(s: &Scenario, summary: &RunSummary) -> String {
    let mut r = String::new();
    let p = &s.params;
    let _ = writeln!(r, "scenario {}", s.name);
    let _ = writeln!(
        r,
        "params eta={} delta={} rho={} theta={} horizon={} diffusivity={}",
        p.eta, p.delta, p.rho, p.theta, p.horizon, p.diffusivity
    );
    let _ = writeln!(r, "domain {:?}", s.domain);
    let _ = writeln!(r, "profile {:?}", s.profile);
    let _ = writeln!(r, "grid nx={} nt={}", s.nx, s.nt);
    let _ = writeln!(r, "tax_threshold {:e}", p.tax_threshold());

    let _ = writeln!(r, "\n[costs]");
    for o in &summary.outputs {
        let _ = writeln!(r, "{} {}", o.solver, fmt_cost(&o.cost));
    }
    for (v, e) in &summary.failures {
        let _ = writeln!(r, "{v} FAILED: {e}");
    }
    let local = summary.outputs.iter().find(|o| !o.solver.is_global() && o.solver != Solver::Aspatial);
    let global = summary.outputs.iter().find(|o| o.solver.is_global());
    if let (Some(l), Some(g)) = (local, global) {
        let gap = l.cost.total - g.cost.total;
        let verdict = if gap > 0.0 {
            "C(global) < C(local)"
        } else if gap == 0.0 {
            "C(global) = C(local)"
        } else {
            "C(global) > C(local)"
        };
        let _ = writeln!(r, "cost_gap {}-{} {:.6e}: {verdict}", l.solver, g.solver, gap);
    }

    let _ = writeln!(r, "\n[iterations]");
    for o in &summary.outputs {
        if let Some(i) = o.iterations {
            let _ = writeln!(r, "{} {i}", o.solver);
        }
        for n in &o.notes {
            let _ = writeln!(r, "{} note: {n}", o.solver);
        }
    }

    let _ = writeln!(r, "\n[cross_gaps]");
    for (i, a) in summary.outputs.iter().enumerate() {
        for b in &summary.outputs[i + 1..] {
            let _ = writeln!(r, "{} {} sup_rel {:.6e}", a.solver, b.solver, a.field.relative_gap(&b.field));
        }
    }

    let _ = writeln!(r, "\n[trends]");
    for o in &summary.outputs {
        let f = &o.field;
        let (nt, nx) = (f.grid.nt(), f.grid.nx());
        let c = nx / 2;
        let (start, end) = (f.p_at(0, c), f.p_at(nt - 1, c));
        let mut rise = f64::NEG_INFINITY;
        for ix in 0..nx {
            for it in 1..nt {
                rise = rise.max(f.p_at(it, ix) - f.p_at(it - 1, ix));
            }
        }
        let trend = if end > start { "increases" } else { "decreases" };
        let mono = if rise <= 0.0 { "non-increasing in t at every x" } else { "not monotone in t" };
        let _ = writeln!(
            r,
            "{}: center pollution {trend} over [0, T] ({start:.6e} -> {end:.6e}); surface {mono} (max step rise {rise:.3e})",
            o.solver,
        );
    }

    let d = &summary.discrepancy;
    let _ = writeln!(r, "\n[closed_form_discrepancy]");
    let _ = writeln!(r, "skew {:e}", d.skew);
    let _ = writeln!(r, "ratio_gap {:e}", d.ratio_gap);
    let _ = writeln!(r, "p_level_gap {:e}", d.p_level_gap);
    let _ = writeln!(r, "u_level_gap {:e}", d.u_level_gap);

    let _ = writeln!(r, "\n[propositions]");
    for rep in &summary.reports {
        let _ = writeln!(r, "{rep}");
    }
    r
}

/// Solves, checks and writes everything into the scenario's output directory.
/// A solver failure keeps the artifacts written so far and notes it in MANIFEST.
pub fn run_scenario(s: &Scenario, opts: RunOptions) -> Result<RunSummary, RunError> {
    let exec = opts.execution();
    let mut w = ArtifactWriter::new(&s.out_dir)?;
    let mut outputs = Vec::new();
    let mut failures = Vec::new();
    for (v, res) in solve_all(s, opts) {
        match res {
            Ok(o) => {
                write_surfaces(&mut w, v.name(), &o.field)?;
                outputs.push(o);
            }
            Err(e) => {
                w.fail(format!("{v}: {e}"));
                failures.push((v, e));
            }
        }
    }
    let mut reports = Vec::new();
    let mut check_failure = None;
    for &c in &s.checks {
        match run_check(s, c, &outputs, exec) {
            Ok(mut r) => reports.append(&mut r),
            Err(e) => {
                w.fail(format!("check {}: {e}", c.name()));
                check_failure.get_or_insert(e);
            }
        }
    }
    let level = s.profile.range().1;
    let discrepancy = closed_form_discrepancy(&s.params, level, 2001).map_err(|e| RunError::Solver(e.to_string()))?;
    let mut summary = RunSummary {
        outputs,
        failures,
        reports,
        discrepancy,
        report: String::new(),
    };
    summary.report = render_report(s, &summary);
    w.write("report.txt", &summary.report)?;
    w.finish()?;

    let first = summary.failures.first().map(|(_, e)| e.clone()).or(check_failure);
    match first {
        None => Ok(summary),
        Some(e) if is_input_error(&e) => Err(InputError::Incompatible(e.to_string()).into()),
        Some(e) => Err(RunError::Solver(e.to_string())),
    }
}
