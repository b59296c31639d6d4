//! Subcommands. Each returns a summary on success; reports are written to
//! the output directory before a failing verdict is returned as an error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chg_core::coefficients::extension::{
    self, extend_divfree, extend_reflect, extension_divergence_max, sphere_points, BallFieldSample,
};
use chg_core::coefficients::{
    check_divergence_free, check_tangency, scan_epsilon, CoefficientError,
};
use chg_core::grid::BcKind;
use chg_core::potential::GrowthReport;
use chg_core::solver::{
    energy, stationary_residual, EquilibriumReport, Mode, SolverError, SteadyDetector, StepOptions,
    Stepper,
};
use chg_core::symbol::{
    largest_sector_angle, lower_bound_scan, mikhlin_scan, ratio_scan, sector_sigma, SectorGrid,
    SymbolParams,
};
use chg_core::{CellField, CoefficientSet, DiagnosticsRecord, GridSpec, Potential, SourceData};
use rayon::prelude::*;

use crate::builtins::{self, NormalDerivative};
use crate::config::{ConfigErrors, RunConfig, RunMode};
use crate::output::{self, real, verdict, DiagnosticsWriter, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Usage(String),
    #[error("validation failed: {0}")]
    Rejected(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 4,
            CliError::Rejected(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Linear(_) | SolverError::NonFinite(_) | SolverError::Tau(_) => {
                CliError::Solver(e.to_string())
            }
            SolverError::Coefficients(_)
            | SolverError::Compatibility(_)
            | SolverError::Divergence { .. }
            | SolverError::Tangency { .. }
            | SolverError::Shape => CliError::Rejected(e.to_string()),
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub snapshot_every: Option<usize>,
    pub quiet: bool,
}

impl Options {
    fn out_dir(&self, config: &RunConfig) -> io::Result<PathBuf> {
        let dir = self
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(&config.output.dir));
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn say(&self, text: impl AsRef<str>) {
        if !self.quiet {
            let mut out = io::stdout().lock();
            let _ = writeln!(out, "{}", text.as_ref());
        }
    }
}

// ---------------------------------------------------------------------------
// Shared setup
// ---------------------------------------------------------------------------

/// Everything needed to start a trajectory.
pub struct Problem {
    pub grid: GridSpec,
    pub coefficients: CoefficientSet,
    pub potential: Potential,
    pub data: SourceData,
    pub psi0: CellField,
    pub normal_derivative: Option<NormalDerivative>,
    /// Mean removed from `ψ₀` (zero unless `initial.mean_zero`).
    pub shift: f64,
    pub mode: Mode,
}

fn require_simulation(config: &RunConfig) -> Result<(), CliError> {
    if config.grid.is_none() || config.time.is_none() {
        return Err(CliError::Usage(
            "this command needs [grid] and [time] sections".to_string(),
        ));
    }
    Ok(())
}

/// Builds the grid, coefficients, potential, data and initial field. The
/// potential is not yet certified.
pub fn build_problem(config: &RunConfig, seed: u64) -> Result<Problem, CliError> {
    require_simulation(config)?;
    let g = config.grid.as_ref().expect("checked");
    let data_cfg = &config.data;
    let bc = if data_cfg.h1.name == "zero" && data_cfg.h2.name == "zero" {
        BcKind::NeumannHomogeneous
    } else {
        BcKind::NeumannData
    };
    let grid = GridSpec::new(g.dimension, &g.extents, &g.cells, bc)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let c = &config.coefficients;
    let coefficients = CoefficientSet {
        beta: c.beta,
        a: builtins::vector_coeff(&c.a, &grid, c.scale),
        c: builtins::vector_coeff(&c.c, &grid, c.scale),
        b: builtins::scalar_coeff(&c.b),
        epsilon: None,
    };
    let mut potential = builtins::potential(&config.potential.kind);
    if let Some(s) = config.potential.stabilization {
        potential = potential
            .with_stabilization(s)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let (mut psi0, normal_derivative) = builtins::initial_field(&config.initial.kind, &grid, seed);
    let mut shift = 0.0;
    if config.initial.mean_zero {
        shift = grid.mean(&psi0);
        psi0 = psi0.map(|v| v - shift);
        potential = potential.shifted(shift);
    }
    let mode = match c.mode {
        RunMode::Semilinear => Mode::Semilinear,
        RunMode::Quasilinear => Mode::Quasilinear,
    };
    Ok(Problem {
        grid,
        coefficients,
        potential,
        data: builtins::source_data(data_cfg),
        psi0,
        normal_derivative,
        shift,
        mode,
    })
}

fn growth_report(config: &RunConfig, problem: &Problem) -> Result<GrowthReport, CliError> {
    problem
        .potential
        .validate_growth(
            config.potential.scan_range,
            problem.grid.dimension(),
            config.potential.eta,
            Some(problem.grid.neumann_lambda1()),
        )
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn growth_rows(table: &mut Table, report: &GrowthReport) {
    let l = &report.lower;
    table.push(vec![
        "potential.lower_bound".into(),
        real(l.eta),
        format!(
            "eta_min={} c0={} witness={}",
            real(l.eta_min),
            real(l.c0),
            real(l.witness)
        ),
        verdict(l.pass),
    ]);
    let d = &report.derivative;
    table.push(vec![
        "potential.derivative_bound".into(),
        real(d.theta),
        format!(
            "c1={} c2={} c3={} worst_ratio={}",
            real(d.c1),
            real(d.c2),
            real(d.c3),
            real(d.worst_ratio)
        ),
        verdict(d.pass),
    ]);
    for (name, p) in [
        ("potential.second_derivative", &report.second),
        ("potential.third_derivative", &report.third),
    ] {
        table.push(vec![
            name.into(),
            real(p.exponent),
            format!(
                "constant={} worst_ratio={} witness={}",
                real(p.constant),
                real(p.worst_ratio),
                real(p.witness)
            ),
            verdict(p.pass),
        ]);
    }
}

fn failed_growth(report: &GrowthReport) -> Vec<&'static str> {
    let mut failed = Vec::new();
    if !report.lower.pass {
        failed.push("lower bound");
    }
    if !report.derivative.pass {
        failed.push("derivative bound");
    }
    if !report.second.pass {
        failed.push("second-derivative growth");
    }
    if !report.third.pass {
        failed.push("third-derivative growth");
    }
    failed
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SimulationSummary {
    pub out_dir: PathBuf,
    pub steps: usize,
    pub t: f64,
    pub epsilon: f64,
    pub stabilization: f64,
    pub last: DiagnosticsRecord,
    pub equilibrium: Option<EquilibriumReport>,
    pub psi: CellField,
}

fn initial_record(
    grid: &GridSpec,
    psi: &CellField,
    mu: &CellField,
    potential: &Potential,
) -> DiagnosticsRecord {
    DiagnosticsRecord {
        mass: grid.integrate(psi),
        energy: energy(grid, psi, potential),
        mean_mu: grid.mean(mu),
        stationary_residual: stationary_residual(grid, psi, potential),
        ..DiagnosticsRecord::default()
    }
}

fn write_equilibrium(path: &Path, eq: &EquilibriumReport, shift: f64) -> io::Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "step = {}", eq.step)?;
    writeln!(out, "t = {}", real(eq.t))?;
    writeln!(out, "mu_inf = {}", real(eq.mu_inf))?;
    writeln!(out, "mu_deviation = {}", real(eq.mu_deviation))?;
    writeln!(
        out,
        "stationary_residual = {}",
        real(eq.stationary_residual)
    )?;
    writeln!(out, "rate_psi = {}", real(eq.rate_psi))?;
    writeln!(out, "grad_mu = {}", real(eq.grad_mu))?;
    writeln!(out, "immediate = {}", eq.immediate)?;
    writeln!(out, "mean_shift = {}", real(shift))?;
    out.flush()
}

pub fn cmd_simulate(config: &RunConfig, opts: &Options) -> Result<SimulationSummary, CliError> {
    require_simulation(config)?;
    let seed = opts.seed.unwrap_or(config.output.seed);
    let time = config.time.as_ref().expect("checked");
    let snapshot_every = opts.snapshot_every.unwrap_or(config.output.snapshot_every);
    let mut problem = build_problem(config, seed)?;

    let report = growth_report(config, &problem)?;
    if !report.passed() {
        return Err(CliError::Rejected(format!(
            "potential fails the growth conditions: {}",
            failed_growth(&report).join(", ")
        )));
    }
    problem.potential.certify(&report);
    problem
        .potential
        .check_certificates(problem.grid.dimension(), problem.grid.neumann_lambda1())
        .map_err(|e| CliError::Rejected(e.to_string()))?;

    let out_dir = opts.out_dir(config)?;
    let options = StepOptions {
        picard_iterations: time.picard,
        ..StepOptions::default()
    };
    let mut stepper = Stepper::new(
        problem.grid.clone(),
        problem.coefficients.clone(),
        problem.potential.clone(),
        problem.data.clone(),
        problem.mode,
        options,
    );
    let init = stepper.init(
        problem.psi0.clone(),
        problem
            .normal_derivative
            .as_deref()
            .map(|f| f as &dyn Fn(&_) -> f64),
    );
    let mut state = match init {
        Ok(s) => s,
        Err(SolverError::Coefficients(CoefficientError::Hypothesis { epsilon, at })) => {
            return Err(CliError::Rejected(format!(
                "hypothesis (H) fails: epsilon = {} at ({}, {})",
                real(epsilon),
                real(at[0]),
                real(at[1])
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let grid = problem.grid.clone();
    let potential = stepper.potential().clone();
    opts.say(format!(
        "epsilon = {}  stabilization = {}  cells = {}",
        real(stepper.epsilon()),
        real(potential.stabilization()),
        grid.cell_count()
    ));

    let mut diagnostics = DiagnosticsWriter::create(&out_dir.join("diagnostics.csv"))?;
    let mut last = initial_record(&grid, &state.psi, &state.mu, &potential);
    diagnostics.record(&last)?;
    if snapshot_every > 0 {
        output::write_snapshot(
            &out_dir.join("snapshot_000000.csv"),
            &grid,
            0.0,
            &state.psi,
            &state.mu,
        )?;
    }
    let mut detector = SteadyDetector::new(time.tol_rate, time.tol_station);
    let mut equilibrium: Option<EquilibriumReport> = None;
    for _ in 0..time.steps {
        let (next, record) = match stepper.step(&state, time.tau) {
            Ok(v) => v,
            Err(e) => {
                diagnostics.finish()?;
                return Err(e.into());
            }
        };
        diagnostics.record(&record)?;
        if !record.is_finite() || !next.psi.is_finite() || !next.mu.is_finite() {
            diagnostics.finish()?;
            return Err(CliError::Solver(format!(
                "non-finite values after step {}",
                record.step
            )));
        }
        state = next;
        last = record;
        if snapshot_every > 0 && state.step % snapshot_every == 0 {
            let path = out_dir.join(format!("snapshot_{:06}.csv", state.step));
            output::write_snapshot(&path, &grid, state.t, &state.psi, &state.mu)?;
        }
        if equilibrium.is_none() {
            if let Some(eq) = detector.observe(&grid, &state, &potential) {
                write_equilibrium(&out_dir.join("equilibrium.txt"), &eq, problem.shift)?;
                output::write_snapshot(
                    &out_dir.join("equilibrium.csv"),
                    &grid,
                    eq.t,
                    &state.psi,
                    &state.mu,
                )?;
                opts.say(format!(
                    "steady state at step {} (t = {}): mu_inf = {}, stationary residual = {}",
                    eq.step,
                    real(eq.t),
                    real(eq.mu_inf),
                    real(eq.stationary_residual)
                ));
                equilibrium = Some(eq);
                if time.stop_on_steady {
                    break;
                }
            }
        }
    }
    diagnostics.finish()?;
    output::write_snapshot(
        &out_dir.join("final.csv"),
        &grid,
        state.t,
        &state.psi,
        &state.mu,
    )?;
    for a in &stepper.advisories {
        opts.say(format!("advisory at step {}: {}", a.step, a.message));
    }
    opts.say(format!(
        "completed {} steps, t = {}, mass = {}, energy = {}",
        state.step,
        real(state.t),
        real(last.mass),
        real(last.energy)
    ));
    Ok(SimulationSummary {
        out_dir,
        steps: state.step,
        t: state.t,
        epsilon: stepper.epsilon(),
        stabilization: potential.stabilization(),
        last,
        equilibrium,
        psi: state.psi,
    })
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CheckSummary {
    pub rows: Vec<Vec<String>>,
    pub pass: bool,
}

pub fn cmd_check(config: &RunConfig, opts: &Options) -> Result<CheckSummary, CliError> {
    let seed = opts.seed.unwrap_or(config.output.seed);
    let problem = build_problem(config, seed)?;
    let grid = &problem.grid;
    let psi0 = &problem.psi0;
    let mut table = Table::new(&["check", "value", "location", "verdict"]);
    let mut pass = true;
    let mut push = |table: &mut Table, row: Vec<String>| {
        pass &= row[3] == "PASS";
        table.push(row);
    };

    let frozen_at = match problem.mode {
        Mode::Semilinear => "coefficients at t = 0",
        Mode::Quasilinear => "frozen at psi0",
    };
    match scan_epsilon(&problem.coefficients, grid, psi0) {
        Ok(scan) => push(
            &mut table,
            vec![
                "epsilon".into(),
                real(scan.min),
                format!("({} {}) {frozen_at}", real(scan.at[0]), real(scan.at[1])),
                verdict(scan.min > 0.0),
            ],
        ),
        Err(e) => push(
            &mut table,
            vec![
                "epsilon".into(),
                "nan".into(),
                e.to_string(),
                verdict(false),
            ],
        ),
    }
    let tol = chg_core::solver::STRUCTURE_TOLERANCE;
    for (name, vc) in [
        ("a", &problem.coefficients.a),
        ("c", &problem.coefficients.c),
    ] {
        let div =
            check_divergence_free(vc, grid, psi0).map_err(|e| CliError::Usage(e.to_string()))?;
        push(
            &mut table,
            vec![
                format!("divergence.{name}"),
                real(div),
                frozen_at.into(),
                verdict(div <= tol),
            ],
        );
        let tan = check_tangency(vc, grid, psi0).map_err(|e| CliError::Usage(e.to_string()))?;
        push(
            &mut table,
            vec![
                format!("tangency.{name}"),
                real(tan),
                "boundary faces".into(),
                verdict(tan <= tol),
            ],
        );
    }
    if let Some(dn) = &problem.normal_derivative {
        let h2 = problem.data.h2.clone();
        let gap = grid.boundary_faces().iter().fold(0.0_f64, |m, bf| {
            let h = h2.as_ref().map_or(0.0, |h| h(0.0, bf));
            m.max((dn(bf) - h).abs())
        });
        push(
            &mut table,
            vec![
                "compatibility.h2".into(),
                real(gap),
                "boundary faces".into(),
                verdict(gap <= tol),
            ],
        );
    }
    let report = growth_report(config, &problem)?;
    growth_rows(&mut table, &report);
    pass &= report.passed();
    table.push(vec![
        "potential.stabilization".into(),
        real(problem.potential.stabilization()),
        String::new(),
        "INFO".into(),
    ]);
    table.push(vec![
        "potential.analyticity".into(),
        "assumed".into(),
        String::new(),
        "INFO".into(),
    ]);

    let out_dir = opts.out_dir(config)?;
    table.write(&out_dir.join("check.csv"))?;
    opts.say(table.render());
    let summary = CheckSummary {
        rows: table.rows().to_vec(),
        pass,
    };
    if pass {
        opts.say("all checks passed");
        Ok(summary)
    } else {
        let failed: Vec<String> = summary
            .rows
            .iter()
            .filter(|r| r[3] == "FAIL")
            .map(|r| r[0].clone())
            .collect();
        Err(CliError::Rejected(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

// ---------------------------------------------------------------------------
// symbol-scan
// ---------------------------------------------------------------------------

fn fmt_point(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| real(x)).collect();
    format!("({})", parts.join(" "))
}

fn fmt_complex(re: f64, im: f64) -> String {
    format!("{}{:+.16e}i", real(re), im)
}

pub fn cmd_symbol_scan(config: &RunConfig, opts: &Options) -> Result<Vec<Vec<String>>, CliError> {
    let s = config
        .symbol
        .as_ref()
        .ok_or_else(|| CliError::Usage("symbol-scan needs a [symbol] section".to_string()))?;
    let n = s.dimension;
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        b[i * n + i] = s.b;
    }
    let p = SymbolParams {
        beta: s.beta,
        a: s.a.clone(),
        c: s.c.clone(),
        b,
        n,
    };
    let phi = s.phi * std::f64::consts::PI;
    let mut table = Table::new(&["scan", "quantity", "value", "location", "verdict"]);
    let eps = p.epsilon();
    let admissible = eps > 0.0;
    table.push(vec![
        "hypothesis".into(),
        "epsilon".into(),
        real(eps),
        String::new(),
        verdict(admissible),
    ]);
    let grid = SectorGrid::standard(phi, n);
    let sigma = sector_sigma(&p, &grid.xis);
    table.push(vec![
        "sector".into(),
        "sigma".into(),
        real(sigma.sigma),
        format!("margin={}", real(sigma.margin)),
        verdict(sigma.pass),
    ]);
    let lb = lower_bound_scan(&p, phi);
    let mut pass = admissible && sigma.pass && lb.pass;
    table.push(vec![
        "lower_bound".into(),
        "c_min".into(),
        real(lb.scan.c_min),
        format!(
            "lambda={} xi={}",
            fmt_complex(lb.scan.lambda_at.re, lb.scan.lambda_at.im),
            fmt_point(&lb.scan.xi_at)
        ),
        verdict(lb.pass),
    ]);
    table.push(vec![
        "lower_bound".into(),
        "c_min_refined".into(),
        real(lb.c_min_refined),
        format!("relative_change={}", real(lb.refinement_change)),
        verdict(lb.refinement_change < chg_core::symbol::REFINEMENT_TOLERANCE),
    ]);
    let mut real_axis = grid.clone();
    for l in real_axis.lambdas.iter_mut() {
        *l = l.norm().into();
    }
    let on_axis = ratio_scan(&p, &real_axis);
    table.push(vec![
        "real_axis".into(),
        "c_min".into(),
        real(on_axis.c_min),
        format!(
            "lambda={} xi={}",
            real(on_axis.lambda_at.re),
            fmt_point(&on_axis.xi_at)
        ),
        "INFO".into(),
    ]);
    table.push(vec![
        "lower_bound".into(),
        "c_max".into(),
        real(lb.scan.c_hi),
        String::new(),
        "INFO".into(),
    ]);
    table.push(vec![
        "lower_bound".into(),
        "min_abs_m".into(),
        real(lb.scan.min_abs_m),
        String::new(),
        "INFO".into(),
    ]);
    if admissible {
        match largest_sector_angle(&p, s.c_floor, 12) {
            Some(a) => table.push(vec![
                "angle".into(),
                "phi_max_over_pi".into(),
                real(a / std::f64::consts::PI),
                format!("c_floor={}", real(s.c_floor)),
                "INFO".into(),
            ]),
            None => table.push(vec![
                "angle".into(),
                "phi_max_over_pi".into(),
                "none".into(),
                format!("c_floor={}", real(s.c_floor)),
                "INFO".into(),
            ]),
        }
    }
    if s.mikhlin && n <= 2 {
        let report = mikhlin_scan(&p, &grid).map_err(|e| CliError::Usage(e.to_string()))?;
        for e in &report.entries {
            table.push(vec![
                "mikhlin".into(),
                format!("alpha=({} {})", e.alpha[0], e.alpha[1]),
                real(e.sup),
                format!(
                    "lambda={} xi={} half_step={}",
                    fmt_complex(e.lambda.re, e.lambda.im),
                    fmt_point(&e.xi_at),
                    real(e.sup_half_step)
                ),
                verdict(e.stable),
            ]);
        }
        pass &= report.pass;
    }
    let out_dir = opts.out_dir(config)?;
    table.write(&out_dir.join("symbol.csv"))?;
    opts.say(table.render());
    if pass {
        Ok(table.rows().to_vec())
    } else if !admissible {
        Err(CliError::Rejected(format!(
            "hypothesis (H) fails: epsilon = {}",
            real(eps)
        )))
    } else {
        Err(CliError::Rejected(
            "symbol scan verdicts failed".to_string(),
        ))
    }
}

// ---------------------------------------------------------------------------
// extend
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ExtendSummary {
    pub divergence: Vec<(f64, f64)>,
    pub observed_order: Option<f64>,
    pub continuity: f64,
    pub deviation: Vec<(f64, f64)>,
    pub samples: usize,
    pub pass: bool,
}

/// Divergence certificate: observed order at least this, or values at the floor.
pub const EXTENSION_ORDER: f64 = 1.8;
pub const EXTENSION_FLOOR: f64 = 1e-8;
pub const CONTINUITY_TOLERANCE: f64 = 1e-9;

fn embed<const N: usize>(x: &[f64; N]) -> [f64; 3] {
    let mut y = [0.0; 3];
    y[..N].copy_from_slice(x);
    y
}

fn run_extend<const N: usize>(
    e: &crate::config::ExtendConfig,
    table: &mut Table,
    samples: &mut Vec<String>,
) -> Result<ExtendSummary, CliError> {
    let field3 = builtins::ball_field(&e.field);
    let scalar3 = builtins::ball_scalar(&e.scalar);
    let field = move |x: &[f64; N]| {
        let v = field3(&embed(x));
        let mut out = [0.0; N];
        out.copy_from_slice(&v[..N]);
        out
    };
    let scalar = move |x: &[f64; N]| scalar3(&embed(x));
    let ext_err = |err: extension::ExtensionError| CliError::Solver(err.to_string());
    let sample = BallFieldSample::new(e.radius, field.clone());
    let ssample = BallFieldSample::new(e.radius, scalar);
    let ext = |x: &[f64; N]| extend_divfree(&sample, x);

    let shells = 11;
    for s in 0..shells {
        let r = 0.5 * e.radius + (e.r_out - 0.5 * e.radius) * s as f64 / (shells - 1) as f64;
        for x in sphere_points::<N>(r, 16) {
            let a = ext(&x).map_err(ext_err)?;
            let b = extend_reflect(&ssample, &x);
            let cols: Vec<String> = x
                .iter()
                .chain(&a)
                .map(|&v| real(v))
                .chain([real(b), real(r)])
                .collect();
            samples.push(cols.join(","));
        }
    }

    let mut continuity = 0.0_f64;
    let delta = 1e-10;
    for x in sphere_points::<N>(e.radius, 64) {
        let mut outer = x;
        outer.iter_mut().for_each(|v| *v *= 1.0 + delta);
        let mut inner = x;
        inner.iter_mut().for_each(|v| *v *= 1.0 - delta);
        let (po, pi) = (ext(&outer).map_err(ext_err)?, ext(&inner).map_err(ext_err)?);
        let jump: f64 = po
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        continuity = continuity.max(jump);
    }
    table.push(vec![
        "continuity".into(),
        real(continuity),
        format!("|x|={}", real(e.radius)),
        verdict(continuity <= CONTINUITY_TOLERANCE),
    ]);

    let mut divergence = Vec::new();
    for k in 0..e.refinements {
        let h = e.spacing / 2f64.powi(k as i32);
        let probe =
            extension_divergence_max::<N>(ext, e.radius, e.r_out, e.spacing, h).map_err(ext_err)?;
        divergence.push((h, probe.max));
        table.push(vec![
            "divergence".into(),
            real(probe.max),
            format!("h={} points={}", real(h), probe.points),
            "INFO".into(),
        ]);
    }
    let mut observed_order = None;
    if let [.., (_, d1), (_, d2)] = divergence[..] {
        if d1 > EXTENSION_FLOOR && d2 > 0.0 {
            observed_order = Some((d1 / d2).log2());
        }
    }
    let floor_reached = divergence
        .last()
        .is_some_and(|&(_, d)| d <= EXTENSION_FLOOR);
    let div_pass = floor_reached || observed_order.is_some_and(|o| o >= EXTENSION_ORDER);
    table.push(vec![
        "divergence_order".into(),
        observed_order.map_or("none".to_string(), real),
        format!("floor={}", real(EXTENSION_FLOOR)),
        verdict(div_pass),
    ]);

    let mut deviation = Vec::new();
    let base = field(&[0.0; N]);
    for &r in &e.radii {
        let s = BallFieldSample::new(r, field.clone());
        let pts: Vec<[f64; N]> = (1..=4)
            .flat_map(|j| sphere_points::<N>(r * (1.0 + 0.5 * j as f64), 32))
            .collect();
        let d =
            extension::deviation_bound(|x| extend_divfree(&s, x), base, &pts).map_err(ext_err)?;
        deviation.push((r, d));
        table.push(vec![
            "deviation".into(),
            real(d),
            format!("r={} annulus=[r 3r]", real(r)),
            "INFO".into(),
        ]);
    }
    let pass = div_pass && continuity <= CONTINUITY_TOLERANCE;
    Ok(ExtendSummary {
        divergence,
        observed_order,
        continuity,
        deviation,
        samples: samples.len(),
        pass,
    })
}

pub fn cmd_extend(config: &RunConfig, opts: &Options) -> Result<ExtendSummary, CliError> {
    let e = config
        .extend
        .as_ref()
        .ok_or_else(|| CliError::Usage("extend needs an [extend] section".to_string()))?;
    let mut table = Table::new(&["quantity", "value", "location", "verdict"]);
    let mut samples = Vec::new();
    let summary = match e.dimension {
        2 => run_extend::<2>(e, &mut table, &mut samples)?,
        _ => run_extend::<3>(e, &mut table, &mut samples)?,
    };
    let out_dir = opts.out_dir(config)?;
    let header = if e.dimension == 2 {
        "x1,x2,a1,a2,b,r"
    } else {
        "x1,x2,x3,a1,a2,a3,b,r"
    };
    let mut text = String::from(header);
    for row in &samples {
        text.push('\n');
        text.push_str(row);
    }
    text.push('\n');
    fs::write(out_dir.join("extend.csv"), text)?;
    table.write(&out_dir.join("extend_summary.csv"))?;
    opts.say(table.render());
    if summary.pass {
        Ok(summary)
    } else {
        Err(CliError::Rejected(
            "extension certificate failed".to_string(),
        ))
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<SimulationSummary, CliError>,
}

pub const SWEEP_COLUMNS: [&str; 13] = [
    "parameter",
    "value",
    "status",
    "exit_code",
    "steps",
    "t",
    "mass",
    "energy",
    "mean_mu",
    "stationary_residual",
    "steady_step",
    "delta_next",
    "message",
];

/// Runs one simulation per parameter value concurrently and writes
/// `sweep.csv` with rows in ascending parameter order. A `time.tau` sweep
/// keeps the template's final time and reports the RMS difference of final `ψ` between
/// neighbouring rows.
pub fn cmd_sweep(config: &RunConfig, opts: &Options) -> Result<Vec<SweepRow>, CliError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Usage("sweep needs a [sweep] section".to_string()))?;
    require_simulation(config)?;
    let out_dir = opts.out_dir(config)?;
    let mut values = sweep.values.clone();
    values.sort_by(|a, b| a.total_cmp(b));
    let final_time = config
        .time
        .as_ref()
        .map(|t| t.tau * t.steps as f64)
        .unwrap_or(0.0);

    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let run = || -> Result<SimulationSummary, CliError> {
                let mut c = config
                    .with_parameter(&sweep.parameter, value)
                    .map_err(CliError::Usage)?;
                if sweep.parameter == "time.tau" {
                    let t = c.time.as_mut().expect("checked");
                    t.steps = ((final_time / value).round() as usize).max(1);
                }
                let o = Options {
                    out_dir: Some(out_dir.join(format!("run_{i:03}"))),
                    quiet: true,
                    ..opts.clone()
                };
                cmd_simulate(&c, &o)
            };
            SweepRow {
                value,
                outcome: run(),
            }
        })
        .collect();

    let mut table = Table::new(&SWEEP_COLUMNS);
    for (i, row) in rows.iter().enumerate() {
        let mut cols = vec![sweep.parameter.clone(), real(row.value)];
        match &row.outcome {
            Ok(s) => {
                let delta = rows.get(i + 1).and_then(|next| match &next.outcome {
                    Ok(n) if sweep.parameter == "time.tau" && n.psi.len() == s.psi.len() => Some(
                        s.psi
                            .values
                            .iter()
                            .zip(&n.psi.values)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt()
                            / (s.psi.len() as f64).sqrt(),
                    ),
                    _ => None,
                });
                cols.extend([
                    "ok".to_string(),
                    "0".to_string(),
                    s.steps.to_string(),
                    real(s.t),
                    real(s.last.mass),
                    real(s.last.energy),
                    real(s.last.mean_mu),
                    real(s.last.stationary_residual),
                    s.equilibrium
                        .as_ref()
                        .map_or(String::new(), |e| e.step.to_string()),
                    delta.map_or(String::new(), real),
                    String::new(),
                ]);
            }
            Err(e) => {
                cols.extend(["failed".to_string(), e.exit_code().to_string()]);
                cols.extend(std::iter::repeat(String::new()).take(8));
                cols.push(e.to_string());
            }
        }
        table.push(cols);
    }
    table.write(&out_dir.join("sweep.csv"))?;
    opts.say(table.render());
    Ok(rows)
}
