//! Acceptance run: one PASS/FAIL line per criterion, with the measured
//! values, the tolerance and the wall time.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chg_core::coefficients::extension::{
    extend_divfree, extension_divergence_max, sphere_points, BallFieldSample,
};
use chg_core::coefficients::{hypothesis_h_epsilon, StreamFamily};
use chg_core::grid::{BcKind, BoundaryFace};
use chg_core::solver::{
    assemble_rhs, assemble_system, dissipation_check, Mode, SolverState, SteadyDetector,
    StepOptions, Stepper,
};
use chg_core::symbol::{
    admissible_presets, angle_constant, lower_bound_scan, ratio_scan, sector_sigma, SectorGrid,
    SymbolParams, DEFAULT_PHI,
};
use chg_core::{
    CellField, CoefficientSet, FaceField, GridSpec, Potential, ScalarCoeff, SourceData, VectorCoeff,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    let in_time = elapsed < limit;
    let pass = o.pass && in_time;
    println!(
        "{} [{id:>2}] {name}: {}; {:.2} s (limit {} s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

// ---------------------------------------------------------------------------
// 1. Discrete calculus
// ---------------------------------------------------------------------------

fn random_cells(grid: &GridSpec, rng: &mut ChaCha8Rng) -> CellField {
    CellField::new(
        (0..grid.cell_count())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect(),
    )
}

fn random_faces(grid: &GridSpec, rng: &mut ChaCha8Rng) -> FaceField {
    let mut f = grid.face_zeros();
    for axis in 0..grid.dimension() {
        for v in f.axes[axis].iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    f
}

fn dot_cells(grid: &GridSpec, u: &CellField, w: &CellField) -> f64 {
    u.values
        .iter()
        .zip(&w.values)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * grid.cell_volume()
}

fn discrete_calculus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grids = [
        GridSpec::new(1, &[1.3], &[256], BcKind::NeumannHomogeneous).unwrap(),
        GridSpec::new(2, &[1.0, 0.7], &[64, 64], BcKind::NeumannHomogeneous).unwrap(),
    ];
    let mut worst = 0.0_f64;
    for grid in &grids {
        for _ in 0..100 {
            let (u, w) = (random_cells(grid, &mut rng), random_cells(grid, &mut rng));
            let flux = random_faces(grid, &mut rng);

            let div = grid.divergence(&flux);
            let lhs = grid.integrate(&div);
            let rhs = grid.boundary_flux(&flux);
            let scale = div.values.iter().map(|v| v.abs()).sum::<f64>() * grid.cell_volume();
            worst = worst.max((lhs - rhs).abs() / scale);

            let mut interior = flux.clone();
            for bf in grid.boundary_faces() {
                interior.axes[bf.axis][bf.face] = 0.0;
            }
            let ud = dot_cells(grid, &u, &grid.divergence(&interior));
            let gu = grid.inner(&grid.gradient(&u), &interior);
            worst = worst.max((ud + gu).abs() / (ud.abs() + gu.abs()));

            let (lu, lw) = (grid.laplacian(&u), grid.laplacian(&w));
            let (a, b) = (dot_cells(grid, &lu, &w), dot_cells(grid, &u, &lw));
            let gg = grid.inner(&grid.gradient(&u), &grid.gradient(&w));
            let s = a.abs() + b.abs();
            worst = worst.max((a - b).abs() / s).max((a + gg).abs() / s);
        }
    }
    outcome(
        worst <= 1e-12,
        format!("worst relative defect {worst:.3e} (tol 1e-12), 200 pairs"),
    )
}

// ---------------------------------------------------------------------------
// 2. (H) implies the matrix inequality
// ---------------------------------------------------------------------------

/// Smallest eigenvalue of a symmetric 2×2 or 3×3 matrix in closed form.
fn closed_form_min_eigenvalue(m: &[f64], n: usize) -> f64 {
    if n == 2 {
        let (a, b, d) = (m[0], m[1], m[3]);
        return 0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt();
    }
    let q = (m[0] + m[4] + m[8]) / 3.0;
    let p1 = m[1] * m[1] + m[2] * m[2] + m[5] * m[5];
    let p2 = (m[0] - q).powi(2) + (m[4] - q).powi(2) + (m[8] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return q;
    }
    let b: Vec<f64> = (0..9)
        .map(|k| (m[k] - if k % 4 == 0 { q } else { 0.0 }) / p)
        .collect();
    let det = b[0] * (b[4] * b[8] - b[5] * b[7]) - b[1] * (b[3] * b[8] - b[5] * b[6])
        + b[2] * (b[3] * b[7] - b[4] * b[6]);
    let phi = (0.5 * det).clamp(-1.0, 1.0).acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos()
}

fn hypothesis_implies_matrix_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut accepted, mut worst) = (0, f64::INFINITY);
    while accepted < 1000 {
        let n = 2 + accepted % 2;
        let beta = rng.gen_range(0.1..3.0);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let m: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                b[i * n + j] = (0..n).map(|k| m[i * n + k] * m[j * n + k]).sum::<f64>()
                    + if i == j { 0.1 } else { 0.0 };
            }
        }
        let eps = hypothesis_h_epsilon(beta, &a, &c, &b);
        if !(eps > 0.0) {
            continue;
        }
        accepted += 1;
        let mut form = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                form[i * n + j] = beta * b[i * n + j]
                    - 0.5 * (a[i] * c[j] + c[i] * a[j])
                    - if i == j { eps * beta } else { 0.0 };
            }
        }
        worst = worst.min(closed_form_min_eigenvalue(&form, n));
    }
    outcome(
        worst >= -1e-10,
        format!("min eigenvalue {worst:.3e} over 1000 tuples (tol -1e-10)"),
    )
}

// ---------------------------------------------------------------------------
// 3. Symbol lower bound
// ---------------------------------------------------------------------------

fn symbol_estimate() -> Outcome {
    let id = SymbolParams::identity(2);
    let mut axis = SectorGrid::standard(DEFAULT_PHI, 2);
    for l in axis.lambdas.iter_mut() {
        *l = Complex64::new(l.norm(), 0.0);
    }
    let real_axis = ratio_scan(&id, &axis);
    let mut pass = real_axis.c_min == 1.0 && real_axis.c_hi == 1.0;
    let mut detail = format!("identity c_min = {} on the real axis", real_axis.c_min);
    for (name, p) in admissible_presets() {
        let lb = lower_bound_scan(&p, DEFAULT_PHI);
        let sigma = sector_sigma(&p, &SectorGrid::standard(DEFAULT_PHI, p.n).xis);
        pass &= lb.scan.c_min > 0.0 && lb.refinement_change < 0.1 && sigma.sigma < PI / 2.0;
        detail += &format!(
            "; {name}: c_min {:.4} (refined change {:.2}%), sigma {:.4}",
            lb.scan.c_min,
            100.0 * lb.refinement_change,
            sigma.sigma
        );
    }
    outcome(pass, detail)
}

// ---------------------------------------------------------------------------
// 4. Angle-sum inequality
// ---------------------------------------------------------------------------

fn angle_sum() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let phi1 = rng.gen_range(-PI..PI);
        let phi2 = phi1 + rng.gen_range(-PI + 1e-9..PI - 1e-9);
        let r1 = 10f64.powf(rng.gen_range(-3.0..3.0));
        let r2 = 10f64.powf(rng.gen_range(-3.0..3.0));
        let z1 = Complex64::from_polar(r1, phi1);
        let z2 = Complex64::from_polar(r2, phi2);
        let c = angle_constant(phi1, phi2);
        let margin = ((z1 + z2).norm() - c * (r1 + r2)) / (r1 + r2);
        worst = worst.min(margin);
    }
    outcome(
        worst >= -1e-12,
        format!("min relative margin {worst:.3e} over 1e4 pairs (tol -1e-12)"),
    )
}

// ---------------------------------------------------------------------------
// 5. Extension operator
// ---------------------------------------------------------------------------

fn extension_operator() -> Outcome {
    let constant = BallFieldSample::new(1.0, |_: &[f64; 2]| [0.3, -0.7]);
    let mut const_err = 0.0_f64;
    for r in [1.0, 1.3, 2.0, 2.9] {
        for x in sphere_points::<2>(r, 64) {
            let v = extend_divfree(&constant, &x).unwrap();
            const_err = const_err.max((v[0] - 0.3).abs()).max((v[1] + 0.7).abs());
        }
    }
    let constant3 = BallFieldSample::new(1.0, |_: &[f64; 3]| [0.1, 0.2, -0.4]);
    for x in sphere_points::<3>(2.0, 64) {
        let v = extend_divfree(&constant3, &x).unwrap();
        const_err = const_err
            .max((v[0] - 0.1).abs())
            .max((v[1] - 0.2).abs())
            .max((v[2] + 0.4).abs());
    }

    let rotation = BallFieldSample::new(1.0, |x: &[f64; 2]| [-x[1], x[0]]);
    let ext = |x: &[f64; 2]| extend_divfree(&rotation, x);
    let divs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            extension_divergence_max::<2>(ext, 1.0, 3.0, 0.1, h)
                .unwrap()
                .max
        })
        .collect();
    let order = (divs[1] / divs[2]).log2();
    let div_ok = order >= 1.8 || divs[2] <= 1e-8;

    let mut jump = 0.0_f64;
    for x in sphere_points::<2>(1.0, 64) {
        let out = ext(&[x[0] * (1.0 + 1e-10), x[1] * (1.0 + 1e-10)]).unwrap();
        let inn = ext(&[x[0] * (1.0 - 1e-10), x[1] * (1.0 - 1e-10)]).unwrap();
        jump = jump.max(((out[0] - inn[0]).powi(2) + (out[1] - inn[1]).powi(2)).sqrt());
    }
    outcome(
        const_err <= 1e-12 && div_ok && jump <= 1e-9,
        format!(
            "constant error {const_err:.2e} (tol 1e-12); divergence {:.3e}, {:.3e}, {:.3e} at h = 0.1/0.05/0.025, order {order:.3} (min 1.8); jump {jump:.2e} (tol 1e-9)",
            divs[0], divs[1], divs[2]
        ),
    )
}

// ---------------------------------------------------------------------------
// 6, 7, 9. Spinodal run
// ---------------------------------------------------------------------------

const SPINODAL_SEED: u64 = 20_240_617;

fn spinodal_grid() -> GridSpec {
    GridSpec::new(1, &[4.0], &[256], BcKind::NeumannHomogeneous).unwrap()
}

fn spinodal_noise(grid: &GridSpec) -> CellField {
    let mut rng = ChaCha8Rng::seed_from_u64(SPINODAL_SEED);
    let v: Vec<f64> = (0..grid.cell_count())
        .map(|_| 0.1 * rng.gen_range(-1.0..1.0))
        .collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    CellField::new(v.into_iter().map(|x| x - mean).collect())
}

fn spinodal_stepper(grid: &GridSpec) -> (Stepper, SolverState) {
    let mut potential = Potential::double_well();
    let report = potential
        .validate_growth(10.0, 1, None, Some(grid.neumann_lambda1()))
        .unwrap();
    assert!(report.passed());
    potential.certify(&report);
    let mut s = Stepper::new(
        grid.clone(),
        CoefficientSet::viscous(0.1, 2.0),
        potential,
        SourceData::homogeneous(),
        Mode::Semilinear,
        StepOptions::default(),
    );
    let st = s.init(spinodal_noise(grid), None).unwrap();
    (s, st)
}

struct SpinodalLedger {
    steps: usize,
    elapsed: Duration,
    mass_drift: f64,
    mean_mu: f64,
    max_de: f64,
    dissipation_failures: usize,
    min_margin: f64,
    epsilon: f64,
}

fn spinodal_ledgers(
    stepper: &mut Stepper,
    state: &mut SolverState,
    steps: usize,
) -> SpinodalLedger {
    let start = Instant::now();
    let grid = stepper.grid().clone();
    let m0 = grid.integrate(&state.psi);
    let scale = m0
        .abs()
        .max(state.psi.values.iter().map(|v| v.abs()).sum::<f64>() * grid.cell_volume());
    let eps = stepper.epsilon();
    let mut ledger = SpinodalLedger {
        steps,
        elapsed: Duration::ZERO,
        mass_drift: 0.0,
        mean_mu: 0.0,
        max_de: f64::NEG_INFINITY,
        dissipation_failures: 0,
        min_margin: f64::INFINITY,
        epsilon: eps,
    };
    let mut energy = chg_core::solver::energy(&grid, &state.psi, stepper.potential());
    for _ in 0..steps {
        let (next, rec) = stepper.step(state, 1e-3).unwrap();
        ledger.mass_drift = ledger.mass_drift.max((rec.mass - m0).abs() / scale);
        ledger.mean_mu = ledger.mean_mu.max(rec.mean_mu_residual);
        ledger.max_de = ledger.max_de.max(rec.energy - energy);
        match dissipation_check(&rec, eps, true) {
            chg_core::solver::DissipationVerdict::Pass { margin } => {
                ledger.min_margin = ledger.min_margin.min(margin)
            }
            _ => ledger.dissipation_failures += 1,
        }
        energy = rec.energy;
        *state = next;
    }
    ledger.elapsed = start.elapsed();
    ledger
}

// ---------------------------------------------------------------------------
// 8. Energy identity residual is first order in τ
// ---------------------------------------------------------------------------

fn energy_identity_order() -> Outcome {
    let grid = spinodal_grid();
    let residuals: Vec<f64> = [2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&tau| {
            let (mut s, mut st) = spinodal_stepper(&grid);
            let steps = (1.0_f64 / tau).round() as usize;
            let mut last = 0.0;
            for _ in 0..steps {
                let (next, rec) = s.step(&st, tau).unwrap();
                last = rec.energy_identity_residual;
                st = next;
            }
            last
        })
        .collect();
    let r1 = residuals[0] / residuals[1];
    let r2 = residuals[1] / residuals[2];
    let ok = |r: f64| (1.5..=2.5).contains(&r);
    outcome(
        ok(r1) && ok(r2),
        format!(
            "residual at t = 1: {:.3e}, {:.3e}, {:.3e} for tau = 2e-3/1e-3/5e-4; ratios {r1:.3}, {r2:.3} (expect 2 +/- 25%)",
            residuals[0], residuals[1], residuals[2]
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. Viscous specialization
// ---------------------------------------------------------------------------

fn viscous_specialization() -> Outcome {
    let n = 64;
    let len = 2.0;
    let (beta, tau, s) = (0.7, 1e-2, 5.75);
    let grid = GridSpec::new(1, &[len], &[n], BcKind::NeumannHomogeneous).unwrap();
    let frozen = CoefficientSet::viscous(beta, 1.0)
        .freeze(&grid, &grid.zeros())
        .unwrap();
    let matrix = assemble_system(&grid, &frozen, tau, s);

    // Viscous Cahn-Hilliard, linearly implicit with stabilization:
    //   (ψ' − ψ)/τ = Δμ',   μ' = −Δψ' + β(ψ' − ψ)/τ + Φ′(ψ) + S(ψ' − ψ),
    // unknowns ordered [ψ'; μ'].
    let h = len / n as f64;
    let lap = |i: usize, j: usize| -> f64 {
        let neighbours = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
        if i == j {
            -neighbours / (h * h)
        } else if i.abs_diff(j) == 1 {
            1.0 / (h * h)
        } else {
            0.0
        }
    };
    let mut dense = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        dense[i][i] = 1.0 / tau;
        dense[n + i][n + i] = 1.0;
        for j in 0..n {
            dense[i][n + j] -= lap(i, j);
            dense[n + i][j] += lap(i, j);
        }
        dense[n + i][i] -= beta / tau + s;
    }
    let mut worst = 0.0_f64;
    for (r, row) in dense.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            worst = worst.max((matrix.get(r, c) - v).abs());
        }
    }

    let potential = Potential::double_well().with_stabilization(s).unwrap();
    let psi = grid.sample(|p| (0.9 * p[0]).sin());
    let rhs = assemble_rhs(
        &grid,
        &frozen,
        tau,
        &potential,
        &psi,
        &psi,
        &SourceData::homogeneous(),
        tau,
    );
    let mut rhs_worst = 0.0_f64;
    for i in 0..n {
        let u = psi.values[i];
        rhs_worst = rhs_worst.max((rhs[i] - u / tau).abs());
        rhs_worst = rhs_worst.max((rhs[n + i] - (u * u * u - u - s * u - beta * u / tau)).abs());
    }
    outcome(
        worst <= 1e-12 && rhs_worst <= 1e-12,
        format!("max entry difference {worst:.2e}, rhs difference {rhs_worst:.2e} (tol 1e-12)"),
    )
}

// ---------------------------------------------------------------------------
// 11. Manufactured solution in 2D with drift and cross coupling
// ---------------------------------------------------------------------------

const MMS_BETA: f64 = 0.5;
const OMEGA_A: f64 = 0.1;
const OMEGA_C: f64 = 0.05;

fn psi_exact(t: f64, x: f64, y: f64) -> f64 {
    (-t).exp() * (PI * x).cos() * (PI * y).cos() + 0.1 * x * x
}

/// Outward normal derivatives of ψ* and μ* on the unit square.
fn mms_normal(bf: &BoundaryFace, t: f64) -> (f64, f64) {
    let [x, y] = bf.center;
    let sign = bf.side.outward_sign();
    let e = (-t).exp();
    if bf.axis == 0 {
        let dpsi = -PI * e * (PI * x).sin() * (PI * y).cos() + 0.2 * x;
        let dmu = -PI * (PI * x).sin() * (PI * y).cos();
        (sign * dpsi, sign * dmu)
    } else {
        let dpsi = -PI * e * (PI * x).cos() * (PI * y).sin();
        let dmu = -PI * (PI * x).cos() * (PI * y).sin() + 0.1;
        (sign * dpsi, sign * dmu)
    }
}

fn mms_data() -> SourceData {
    // ψ_t − a·∇ψ_t − Δμ = f,   μ − c·∇μ = −Δψ + βψ_t + Φ′(ψ) + g, with
    // a, c the single convection cell of amplitude ω on the unit square.
    let f = move |t: f64, p: [f64; 2]| {
        let (sx, cx, sy, cy) = (
            (PI * p[0]).sin(),
            (PI * p[0]).cos(),
            (PI * p[1]).sin(),
            (PI * p[1]).cos(),
        );
        let e = (-t).exp();
        let a_grad_psi_t = OMEGA_A * PI * PI * e * (sx * sx * cy * cy - cx * cx * sy * sy);
        -e * cx * cy - a_grad_psi_t + 2.0 * PI * PI * cx * cy
    };
    let g = move |t: f64, p: [f64; 2]| {
        let (sx, cx, sy, cy) = (
            (PI * p[0]).sin(),
            (PI * p[0]).cos(),
            (PI * p[1]).sin(),
            (PI * p[1]).cos(),
        );
        let e = (-t).exp();
        let psi = psi_exact(t, p[0], p[1]);
        let mu = cx * cy + 0.1 * p[1];
        let c_grad_mu =
            OMEGA_C * PI * (-PI * sx * sx * cy * cy + PI * cx * cx * sy * sy - 0.1 * cx * sy);
        let lap_psi = -2.0 * PI * PI * e * cx * cy + 0.2;
        let psi_t = -e * cx * cy;
        mu - c_grad_mu + lap_psi - MMS_BETA * psi_t - (psi * psi * psi - psi)
    };
    SourceData {
        f: Some(Arc::new(f)),
        g: Some(Arc::new(g)),
        h1: Some(Arc::new(|t, bf: &BoundaryFace| mms_normal(bf, t).1)),
        h2: Some(Arc::new(|t, bf: &BoundaryFace| mms_normal(bf, t).0)),
    }
}

fn mms_error(cells: usize, tau: f64, t_end: f64) -> f64 {
    let grid = GridSpec::new(2, &[1.0, 1.0], &[cells, cells], BcKind::NeumannData).unwrap();
    let coeffs = CoefficientSet {
        beta: MMS_BETA,
        a: VectorCoeff::Stream(StreamFamily::Cellular {
            omega: OMEGA_A,
            extents: [1.0, 1.0],
        }),
        c: VectorCoeff::Stream(StreamFamily::Cellular {
            omega: OMEGA_C,
            extents: [1.0, 1.0],
        }),
        b: ScalarCoeff::Constant(1.0),
        epsilon: None,
    };
    let mut s = Stepper::new(
        grid.clone(),
        coeffs,
        Potential::double_well(),
        mms_data(),
        Mode::Semilinear,
        StepOptions::default(),
    );
    let mut st = s
        .init(grid.sample(|p| psi_exact(0.0, p[0], p[1])), None)
        .unwrap();
    let steps = (t_end / tau).round() as usize;
    for _ in 0..steps {
        st = s.step(&st, tau).unwrap().0;
    }
    let exact = grid.sample(|p| psi_exact(st.t, p[0], p[1]));
    let diff = CellField::new(
        st.psi
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, e)| a - e)
            .collect(),
    );
    grid.norm(&diff)
}

fn manufactured_solution() -> Outcome {
    let et: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&tau| mms_error(64, tau, 1.0))
        .collect();
    let ot = [(et[0] / et[1]).log2(), (et[1] / et[2]).log2()];
    let eh: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let h = 1.0 / n as f64;
            mms_error(n, 0.25 * h * h, 0.02)
        })
        .collect();
    let oh = [(eh[0] / eh[1]).log2(), (eh[1] / eh[2]).log2()];
    let pass =
        ot.iter().all(|o| (o - 1.0).abs() <= 0.2) && oh.iter().all(|o| (o - 2.0).abs() <= 0.2);
    outcome(
        pass,
        format!(
            "temporal errors {:.3e}, {:.3e}, {:.3e} orders {:.3}, {:.3} (1.0 +/- 0.2); spatial errors {:.3e}, {:.3e}, {:.3e} orders {:.3}, {:.3} (2.0 +/- 0.2)",
            et[0], et[1], et[2], ot[0], ot[1], eh[0], eh[1], eh[2], oh[0], oh[1]
        ),
    )
}

// ---------------------------------------------------------------------------
// 12. Potential certificates
// ---------------------------------------------------------------------------

fn potential_certificates() -> Outcome {
    let dw = Potential::double_well();
    let mut pass = true;
    let mut detail = String::new();
    for n in 1..=3 {
        let r = dw.validate_growth(10.0, n, None, None).unwrap();
        let exps = (r.second.exponent, r.third.exponent, r.derivative.theta);
        pass &= r.passed() && exps == (2.0, 1.0, 0.75);
        if n == 3 {
            detail += &format!(
                "double well n = 3: passed {}, (alpha, gamma, theta) = {exps:?}",
                r.passed()
            );
        }
    }
    let s6 = Potential::polynomial(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let r = s6.validate_growth(10.0, 3, None, None).unwrap();
    pass &= !r.third.pass;
    detail += &format!(
        "; s^6 n = 3: third-derivative condition passes = {} (gamma = {})",
        r.third.pass, r.third.exponent
    );
    outcome(pass, detail)
}

fn main() {
    let mut results = Vec::new();
    results.push(run(
        1,
        "discrete calculus identities",
        secs(1),
        discrete_calculus,
    ));
    results.push(run(
        2,
        "ellipticity margin implies the matrix bound",
        secs(1),
        hypothesis_implies_matrix_bound,
    ));
    results.push(run(
        3,
        "symbol lower bound on the sector",
        secs(10),
        symbol_estimate,
    ));
    results.push(run(4, "angle-sum inequality", secs(1), angle_sum));
    results.push(run(5, "extension operator", secs(30), extension_operator));

    let grid = spinodal_grid();
    let (mut stepper, mut state) = spinodal_stepper(&grid);
    let m0 = grid.mean(&state.psi);
    let ledger = spinodal_ledgers(&mut stepper, &mut state, 10_000);
    results.push(run(6, "conservation on the spinodal run", secs(60), || {
        let pass = ledger.mass_drift <= 1e-10 && ledger.mean_mu <= 1e-10 && ledger.elapsed < secs(60);
        outcome(
            pass,
            format!(
                "{} steps in {:.1} s: max relative mass drift {:.2e}, max mean-mu residual {:.2e} (tol 1e-10)",
                ledger.steps,
                ledger.elapsed.as_secs_f64(),
                ledger.mass_drift,
                ledger.mean_mu
            ),
        )
    }));
    results.push(run(7, "Lyapunov decay and dissipation", secs(60), || {
        outcome(
            ledger.max_de <= 1e-12 && ledger.dissipation_failures == 0,
            format!(
                "max energy increase {:.2e} (tol 1e-12); dissipation check with epsilon = {} failed on {} steps, min margin {:.2e}",
                ledger.max_de, ledger.epsilon, ledger.dissipation_failures, ledger.min_margin
            ),
        )
    }));
    results.push(run(
        8,
        "energy identity residual order",
        secs(60),
        energy_identity_order,
    ));
    results.push(run(9, "equilibrium of the spinodal run", secs(600), || {
        let start = Instant::now();
        let mut detector = SteadyDetector::new(2e-9, 1e-6);
        let mut found = None;
        while state.step < 100_000 {
            state = stepper.step(&state, 1e-3).unwrap().0;
            if let Some(eq) = detector.observe(&grid, &state, stepper.potential()) {
                found = Some(eq);
                break;
            }
        }
        let total = start.elapsed() + ledger.elapsed;
        match found {
            Some(eq) => {
                let mean_gap = (grid.mean(&state.psi) - m0).abs();
                let pass = eq.grad_mu < 1e-8 && eq.mu_deviation <= 1e-8 && eq.stationary_residual <= 1e-6 && mean_gap <= 1e-10;
                outcome(
                    pass && total < secs(600),
                    format!(
                        "steady at step {}: |grad mu| {:.2e}, max|mu - mu_inf| {:.2e} (tol 1e-8), stationary residual {:.2e} (tol 1e-6), mean gap {:.2e} (tol 1e-10), run time {:.1} s",
                        eq.step,
                        eq.grad_mu,
                        eq.mu_deviation,
                        eq.stationary_residual,
                        mean_gap,
                        total.as_secs_f64()
                    ),
                )
            }
            None => outcome(
                false,
                format!(
                    "not steady within 1e5 steps; last rates {:.2e}, {:.2e}",
                    detector.last_rates.0, detector.last_rates.1
                ),
            ),
        }
    }));
    results.push(run(
        10,
        "viscous specialization of the assembly",
        secs(1),
        viscous_specialization,
    ));
    results.push(run(
        11,
        "manufactured solution with drift",
        secs(120),
        manufactured_solution,
    ));
    results.push(run(
        12,
        "potential growth certificates",
        secs(1),
        potential_certificates,
    ));

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
