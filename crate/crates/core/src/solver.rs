//! Stabilized linearly-implicit Euler stepping and the discrete ledgers.
//!
//! Each step solves one sparse system for `(ψⁿ⁺¹, μⁿ⁺¹)` with `v = (ψⁿ⁺¹ − ψⁿ)/τ`:
//!
//! ```text
//! v − D(a·avg v) − D(b G μⁿ⁺¹)                      = f
//! μⁿ⁺¹ − D(c·avg μⁿ⁺¹) + D G ψⁿ⁺¹ − βv − Φ′(ψⁿ) − S(ψⁿ⁺¹ − ψⁿ) = g
//! ```
//!
//! `D`, `G` are the finite-volume divergence and gradient. Advective face
//! fluxes use face-normal coefficient samples times the two-cell average and
//! vanish on boundary faces; Neumann data enter through boundary fluxes.
//! Summing rows telescopes, so the mass law and the mean-μ identity hold to
//! rounding.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::coefficients::{
    check_divergence_free, check_tangency, field_epsilon, CoefficientError, CoefficientSet,
    FrozenCoefficients, VectorCoeff,
};
use crate::grid::{BoundaryFace, CellField, FaceField, GridSpec};
use crate::linalg::{CsrMatrix, GmresOptions, LinearError, LinearSolver, SolverKind};
use crate::potential::{Certificates, Potential};
use crate::Point;

pub type CellSource = Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>;
/// Outward boundary datum on one face at time `t`.
pub type BoundarySource = Arc<dyn Fn(f64, &BoundaryFace) -> f64 + Send + Sync>;

/// Right-hand sides `f, g` and Neumann data `h₁ = b∂_νμ`, `h₂ = ∂_νψ`.
/// Absent entries are zero.
#[derive(Clone, Default)]
pub struct SourceData {
    pub f: Option<CellSource>,
    pub g: Option<CellSource>,
    pub h1: Option<BoundarySource>,
    pub h2: Option<BoundarySource>,
}

impl fmt::Debug for SourceData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceData")
            .field("f", &self.f.is_some())
            .field("g", &self.g.is_some())
            .field("h1", &self.h1.is_some())
            .field("h2", &self.h2.is_some())
            .finish()
    }
}

impl SourceData {
    pub fn homogeneous() -> Self {
        Self::default()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.f.is_none() && self.g.is_none() && self.h1.is_none() && self.h2.is_none()
    }

    fn cells(src: &Option<CellSource>, grid: &GridSpec, t: f64) -> CellField {
        match src {
            Some(f) => grid.sample(|p| f(t, p)),
            None => grid.zeros(),
        }
    }

    fn faces(src: &Option<BoundarySource>, faces: &[BoundaryFace], t: f64) -> Vec<f64> {
        match src {
            Some(h) => faces.iter().map(|bf| h(t, bf)).collect(),
            None => vec![0.0; faces.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Coefficients frozen once at `ψ₀`.
    Semilinear,
    /// Coefficients refrozen at `ψⁿ` before every step.
    Quasilinear,
}

#[derive(Debug, Clone)]
pub struct StepOptions {
    /// Extra fixed-point passes on `Φ′` (0 disables).
    pub picard_iterations: usize,
    pub picard_tolerance: f64,
    pub linear: GmresOptions,
    /// Defaults to banded elimination in 1D and Krylov in 2D.
    pub solver: Option<SolverKind>,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            picard_iterations: 0,
            picard_tolerance: 1e-10,
            linear: GmresOptions::default(),
            solver: None,
        }
    }
}

/// Structural tolerance for divergence, tangency and data compatibility.
pub const STRUCTURE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Coefficients(#[from] CoefficientError),
    #[error("linear solve failed: {0}")]
    Linear(#[from] LinearError),
    #[error("time step must be positive, got {0}")]
    Tau(f64),
    #[error("non-finite values after step {0}")]
    NonFinite(usize),
    #[error("initial data violate the Neumann compatibility condition by {0:e}")]
    Compatibility(f64),
    #[error("coefficient {name} has discrete divergence {value:e}")]
    Divergence { name: &'static str, value: f64 },
    #[error("coefficient {name} has boundary normal component {value:e}")]
    Tangency { name: &'static str, value: f64 },
    #[error("initial field does not match the grid")]
    Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub step: usize,
    pub t: f64,
    pub psi: CellField,
    pub mu: CellField,
    /// `(ψⁿ − ψⁿ⁻¹)/τ` of the step that produced this state.
    pub dpsi_dt: CellField,
    /// Point at which `Φ′` was evaluated in that step.
    pub psi_lin: CellField,
    /// Coefficients used by that step.
    pub frozen: FrozenCoefficients,
    pub mass_initial: f64,
    /// `Σ τ(∫f + ∮h₁)` so far.
    pub mass_source: f64,
}

/// One row of the per-step ledger.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub de_dt: f64,
    pub diss_beta: f64,
    pub diss_cross: f64,
    pub diss_mobility: f64,
    pub mean_mu: f64,
    pub mean_mu_residual: f64,
    pub energy_identity_residual: f64,
    pub stationary_residual: f64,
    pub mass_balance_residual: f64,
    /// `|v|₂`.
    pub rate_psi: f64,
    /// `|∇μ|₂`.
    pub grad_mu: f64,
    pub picard_passes: usize,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.mass,
            self.energy,
            self.de_dt,
            self.diss_beta,
            self.diss_cross,
            self.diss_mobility,
            self.mean_mu,
            self.mean_mu_residual,
            self.energy_identity_residual,
            self.stationary_residual,
            self.mass_balance_residual,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Interior-face flux `coeff_f · avg(u)`; zero on boundary faces.
pub fn advective_flux(grid: &GridSpec, coeff: &FaceField, u: &CellField) -> FaceField {
    let mut out = grid.face_zeros();
    for axis in 0..grid.dimension() {
        for (f, slot) in out.axes[axis].iter_mut().enumerate() {
            if let (Some(l), Some(r)) = grid.face_cells(axis, f) {
                *slot = coeff.axes[axis][f] * 0.5 * (u.values[l] + u.values[r]);
            }
        }
    }
    out
}

/// Interior-face flux `coeff_f · (Gu)_f`; zero on boundary faces.
pub fn diffusive_flux(grid: &GridSpec, coeff: &FaceField, u: &CellField) -> FaceField {
    let mut out = grid.gradient(u);
    for axis in 0..grid.dimension() {
        for (v, c) in out.axes[axis].iter_mut().zip(&coeff.axes[axis]) {
            *v *= c;
        }
    }
    out
}

/// `Σ_interior V·p_f·q_f`.
fn interior_pairing(grid: &GridSpec, p: &FaceField, q: &FaceField) -> f64 {
    let mut sum = 0.0;
    for axis in 0..grid.dimension() {
        for f in 0..grid.face_count(axis) {
            if !grid.is_boundary_face(axis, f) {
                sum += p.axes[axis][f] * q.axes[axis][f];
            }
        }
    }
    sum * grid.cell_volume()
}

/// Block matrix in `[ψ; μ]` order.
pub fn assemble_system(
    grid: &GridSpec,
    frozen: &FrozenCoefficients,
    tau: f64,
    stabilization: f64,
) -> CsrMatrix {
    let n = grid.cell_count();
    let mut trip = Vec::with_capacity(n * 14);
    let (p, m) = (|k: usize| k, |k: usize| n + k);
    for k in 0..n {
        trip.push((p(k), p(k), 1.0 / tau));
        trip.push((m(k), m(k), 1.0));
        trip.push((m(k), p(k), -(frozen.beta / tau + stabilization)));
    }
    for axis in 0..grid.dimension() {
        let h = grid.spacing()[axis];
        for f in 0..grid.face_count(axis) {
            let (Some(l), Some(r)) = grid.face_cells(axis, f) else {
                continue;
            };
            let a = frozen.a_faces.axes[axis][f];
            let c = frozen.c_faces.axes[axis][f];
            let b = frozen.b_faces.axes[axis][f];
            // −D(a avg ψ)/τ: the face flux leaves l and enters r.
            let wa = 0.5 * a / (h * tau);
            for col in [l, r] {
                trip.push((p(l), p(col), -wa));
                trip.push((p(r), p(col), wa));
            }
            // −D(b G μ).
            let wb = b / (h * h);
            trip.push((p(l), m(r), -wb));
            trip.push((p(l), m(l), wb));
            trip.push((p(r), m(r), wb));
            trip.push((p(r), m(l), -wb));
            // −D(c avg μ).
            let wc = 0.5 * c / h;
            for col in [l, r] {
                trip.push((m(l), m(col), -wc));
                trip.push((m(r), m(col), wc));
            }
            // D G ψ.
            let wl = 1.0 / (h * h);
            trip.push((m(l), p(r), wl));
            trip.push((m(l), p(l), -wl));
            trip.push((m(r), p(r), -wl));
            trip.push((m(r), p(l), wl));
        }
    }
    CsrMatrix::from_triplets(2 * n, 2 * n, &trip)
}

/// Right-hand side for the step `t → t_new`, linearizing `Φ′` at `psi_lin`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_rhs(
    grid: &GridSpec,
    frozen: &FrozenCoefficients,
    tau: f64,
    potential: &Potential,
    psi: &CellField,
    psi_lin: &CellField,
    data: &SourceData,
    t_new: f64,
) -> Vec<f64> {
    let n = grid.cell_count();
    let s = potential.stabilization();
    let f = SourceData::cells(&data.f, grid, t_new);
    let g = SourceData::cells(&data.g, grid, t_new);
    let adv = grid.divergence(&advective_flux(grid, &frozen.a_faces, psi));
    let mut rhs = vec![0.0; 2 * n];
    for k in 0..n {
        rhs[k] = f.values[k] + (psi.values[k] - adv.values[k]) / tau;
        let lin = psi_lin.values[k];
        rhs[n + k] =
            g.values[k] + potential.derivative(lin) - s * lin - frozen.beta / tau * psi.values[k];
    }
    let faces = grid.boundary_faces();
    let h1 = SourceData::faces(&data.h1, &faces, t_new);
    let h2 = SourceData::faces(&data.h2, &faces, t_new);
    for (i, bf) in faces.iter().enumerate() {
        let h = grid.spacing()[bf.axis];
        rhs[bf.cell] += h1[i] / h;
        rhs[n + bf.cell] -= h2[i] / h;
    }
    rhs
}

fn solver_kind(grid: &GridSpec, options: &StepOptions) -> SolverKind {
    options.solver.unwrap_or(if grid.dimension() == 1 {
        SolverKind::BandedDirect
    } else {
        SolverKind::Krylov
    })
}

/// `ψ_k → 2k`, `μ_k → 2k + 1`.
fn interleave(n: usize) -> Vec<usize> {
    (0..n)
        .map(|k| 2 * k)
        .chain((0..n).map(|k| 2 * k + 1))
        .collect()
}

/// `E(ψ) = ½|Gψ|² + ∫Φ(ψ)`.
pub fn energy(grid: &GridSpec, psi: &CellField, potential: &Potential) -> f64 {
    let g = grid.gradient(psi);
    0.5 * grid.inner(&g, &g) + grid.integrate(&psi.map(|s| potential.value(s)))
}

/// `−(η/2)|ψ|² − c₀|Ω|`.
pub fn energy_lower_bound(grid: &GridSpec, psi: &CellField, cert: &Certificates) -> f64 {
    -0.5 * cert.eta * grid.inner(psi, psi) - cert.c0 * grid.measure()
}

/// `|−Δψ + Φ′(ψ) − mean Φ′(ψ)|₂`.
pub fn stationary_residual(grid: &GridSpec, psi: &CellField, potential: &Potential) -> f64 {
    let dphi = psi.map(|s| potential.derivative(s));
    let mean = grid.mean(&dphi);
    let lap = grid.laplacian(psi);
    let r = CellField::new(
        lap.values
            .iter()
            .zip(&dphi.values)
            .map(|(l, d)| -l + d - mean)
            .collect(),
    );
    grid.norm(&r)
}

/// Terms of the discrete energy balance of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    pub de_dt: f64,
    pub diss_beta: f64,
    pub diss_cross: f64,
    pub diss_mobility: f64,
    /// `∫μf + ∮μh₁ + ∮v h₂ − ∫g v`.
    pub work: f64,
    /// `de_dt + dissipation − work`.
    pub residual: f64,
    /// `½τ|Gv|²`.
    pub numerical_dissipation: f64,
    /// `[(Φ′(ψ_lin) + S(ψ′ − ψ_lin))δψ − (Φ(ψ′) − Φ(ψ))]/τ`.
    pub splitting_defect: f64,
    /// `(μv, D c)`, zero for solenoidal `c`.
    pub divergence_term: f64,
}

impl EnergyBalance {
    /// The residual predicted by the scheme's algebra:
    /// `−numerical_dissipation − splitting_defect − divergence_term`.
    pub fn predicted_residual(&self) -> f64 {
        -self.numerical_dissipation - self.splitting_defect - self.divergence_term
    }
}

pub fn energy_balance(
    grid: &GridSpec,
    old: &SolverState,
    new: &SolverState,
    tau: f64,
    potential: &Potential,
    data: &SourceData,
) -> EnergyBalance {
    let fr = &new.frozen;
    let v = &new.dpsi_dt;
    let gmu = grid.gradient(&new.mu);
    let gv = grid.gradient(v);
    let de_dt = (energy(grid, &new.psi, potential) - energy(grid, &old.psi, potential)) / tau;
    let diss_beta = fr.beta * grid.inner(v, v);
    let mut ac = fr.a_faces.clone();
    for (x, y) in ac.axes.iter_mut().zip(&fr.c_faces.axes) {
        for (p, q) in x.iter_mut().zip(y) {
            *p += q;
        }
    }
    let diss_cross = interior_pairing(grid, &advective_flux(grid, &ac, v), &gmu);
    let diss_mobility = interior_pairing(grid, &diffusive_flux(grid, &fr.b_faces, &new.mu), &gmu);

    let f = SourceData::cells(&data.f, grid, new.t);
    let g = SourceData::cells(&data.g, grid, new.t);
    let faces = grid.boundary_faces();
    let h1 = SourceData::faces(&data.h1, &faces, new.t);
    let h2 = SourceData::faces(&data.h2, &faces, new.t);
    let mut boundary = 0.0;
    for (i, bf) in faces.iter().enumerate() {
        boundary +=
            grid.face_area(bf.axis) * (h1[i] * new.mu.values[bf.cell] + h2[i] * v.values[bf.cell]);
    }
    let work = grid.inner(&new.mu, &f) + boundary - grid.inner(&g, v);
    let residual = de_dt + diss_beta + diss_cross + diss_mobility - work;

    let s = potential.stabilization();
    let mut defect = 0.0;
    for k in 0..grid.cell_count() {
        let (p0, p1, pl) = (old.psi.values[k], new.psi.values[k], new.psi_lin.values[k]);
        let force = potential.derivative(pl) + s * (p1 - pl);
        defect += force * (p1 - p0) - (potential.value(p1) - potential.value(p0));
    }
    let mut c_interior = fr.c_faces.clone();
    for bf in &faces {
        c_interior.axes[bf.axis][bf.face] = 0.0;
    }
    let div_c = grid.divergence(&c_interior);
    let mv = CellField::new(
        new.mu
            .values
            .iter()
            .zip(&v.values)
            .map(|(a, b)| a * b)
            .collect(),
    );
    EnergyBalance {
        de_dt,
        diss_beta,
        diss_cross,
        diss_mobility,
        work,
        residual,
        numerical_dissipation: 0.5 * tau * grid.inner(&gv, &gv),
        splitting_defect: defect * grid.cell_volume() / tau,
        divergence_term: grid.inner(&mv, &div_c),
    }
}

/// `|energy_balance(..).residual|`.
pub fn energy_identity_residual(
    grid: &GridSpec,
    old: &SolverState,
    new: &SolverState,
    tau: f64,
    potential: &Potential,
    data: &SourceData,
) -> f64 {
    energy_balance(grid, old, new, tau, potential, data)
        .residual
        .abs()
}

/// Residual of `∫μ = ∫(Φ′(ψ_lin) + S(ψ − ψ_lin)) + ∫g + β(∫f + ∮h₁) − ∮h₂`
/// at the state produced by a step.
pub fn mean_mu_identity_residual(
    grid: &GridSpec,
    state: &SolverState,
    potential: &Potential,
    data: &SourceData,
) -> f64 {
    let s = potential.stabilization();
    let force = CellField::new(
        state
            .psi
            .values
            .iter()
            .zip(&state.psi_lin.values)
            .map(|(&p, &l)| potential.derivative(l) + s * (p - l))
            .collect(),
    );
    let t = state.t;
    let f = grid.integrate(&SourceData::cells(&data.f, grid, t));
    let g = grid.integrate(&SourceData::cells(&data.g, grid, t));
    let faces = grid.boundary_faces();
    let flux = |h: &[f64]| -> f64 {
        faces
            .iter()
            .zip(h)
            .map(|(bf, v)| grid.face_area(bf.axis) * v)
            .sum()
    };
    let h1 = flux(&SourceData::faces(&data.h1, &faces, t));
    let h2 = flux(&SourceData::faces(&data.h2, &faces, t));
    let rhs = grid.integrate(&force) + g + state.frozen.beta * (f + h1) - h2;
    (grid.integrate(&state.mu) - rhs).abs()
}

/// `|∫ψ − ∫ψ₀ − Σ τ(∫f + ∮h₁)|`.
pub fn mass_balance_residual(grid: &GridSpec, state: &SolverState) -> f64 {
    (grid.integrate(&state.psi) - state.mass_initial - state.mass_source).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DissipationVerdict {
    /// Forced runs are out of scope.
    Skipped,
    /// `margin = −ε(|v|² + |∇μ|²) + tol − dE/dt ≥ 0`.
    Pass {
        margin: f64,
    },
    Fail {
        margin: f64,
    },
}

impl DissipationVerdict {
    pub fn passed(&self) -> bool {
        !matches!(self, DissipationVerdict::Fail { .. })
    }
}

/// `dE/dt ≤ −ε(|v|² + |∇μ|²) + 10·(energy identity residual)`.
pub fn dissipation_check(
    record: &DiagnosticsRecord,
    epsilon: f64,
    homogeneous: bool,
) -> DissipationVerdict {
    if !homogeneous {
        return DissipationVerdict::Skipped;
    }
    let tol = 10.0 * record.energy_identity_residual;
    let margin = -epsilon * (record.rate_psi.powi(2) + record.grad_mu.powi(2)) + tol - record.de_dt;
    if margin >= 0.0 {
        DissipationVerdict::Pass { margin }
    } else {
        DissipationVerdict::Fail { margin }
    }
}

/// Frozen-state structure warning recorded in quasilinear runs after `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Advisory {
    pub step: usize,
    pub message: String,
}

fn structure_checks(grid: &GridSpec, frozen: &FrozenCoefficients) -> Result<(), SolverError> {
    let psi = grid.zeros();
    for (name, faces) in [("a", &frozen.a_faces), ("c", &frozen.c_faces)] {
        let vc = VectorCoeff::Faces(faces.clone());
        let div = check_divergence_free(&vc, grid, &psi)?;
        if div > STRUCTURE_TOLERANCE {
            return Err(SolverError::Divergence { name, value: div });
        }
        let tan = check_tangency(&vc, grid, &psi)?;
        if tan > STRUCTURE_TOLERANCE {
            return Err(SolverError::Tangency { name, value: tan });
        }
    }
    Ok(())
}

/// Owns the run data and caches the factored step matrix.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: GridSpec,
    coeffs: CoefficientSet,
    potential: Potential,
    data: SourceData,
    mode: Mode,
    options: StepOptions,
    cache: Option<(f64, FrozenCoefficients, LinearSolver)>,
    epsilon: f64,
    pub advisories: Vec<Advisory>,
}

impl Stepper {
    pub fn new(
        grid: GridSpec,
        coeffs: CoefficientSet,
        potential: Potential,
        data: SourceData,
        mode: Mode,
        options: StepOptions,
    ) -> Self {
        Self {
            grid,
            coeffs,
            potential,
            data,
            mode,
            options,
            cache: None,
            epsilon: f64::NAN,
            advisories: Vec::new(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn data(&self) -> &SourceData {
        &self.data
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    /// Ellipticity margin certified at the initial state.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Validates the data and builds the `t = 0` state. `normal_derivative`
    /// is the outward `∂_νψ₀` on boundary faces when it is known analytically;
    /// it is then compared with `h₂(0)`.
    pub fn init(
        &mut self,
        psi0: CellField,
        normal_derivative: Option<&dyn Fn(&BoundaryFace) -> f64>,
    ) -> Result<SolverState, SolverError> {
        let grid = &self.grid;
        if psi0.len() != grid.cell_count() {
            return Err(SolverError::Shape);
        }
        if !psi0.is_finite() {
            return Err(SolverError::NonFinite(0));
        }
        self.epsilon = field_epsilon(&mut self.coeffs, grid, &psi0)?;
        let frozen = self.coeffs.freeze(grid, &psi0)?;
        structure_checks(grid, &frozen)?;
        let faces = grid.boundary_faces();
        if let Some(dn) = normal_derivative {
            let h2 = SourceData::faces(&self.data.h2, &faces, 0.0);
            let gap = faces
                .iter()
                .zip(&h2)
                .fold(0.0_f64, |m, (bf, h)| m.max((dn(bf) - h).abs()));
            if gap > STRUCTURE_TOLERANCE {
                return Err(SolverError::Compatibility(gap));
            }
        }

        // μ − D(c avg μ) = g + Φ′(ψ₀) − Δψ₀ with ∂_νψ₀ = h₂(0).
        let n = grid.cell_count();
        let h2 = SourceData::faces(&self.data.h2, &faces, 0.0);
        let lap = grid.laplacian_with(&psi0, |bf| {
            faces
                .iter()
                .position(|x| x.axis == bf.axis && x.face == bf.face)
                .map_or(0.0, |i| h2[i])
        });
        let g = SourceData::cells(&self.data.g, grid, 0.0);
        let rhs: Vec<f64> = (0..n)
            .map(|k| g.values[k] + self.potential.derivative(psi0.values[k]) - lap.values[k])
            .collect();
        let mu = if frozen.c_faces.max_abs() == 0.0 {
            CellField::new(rhs)
        } else {
            let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|k| (k, k, 1.0)).collect();
            for axis in 0..grid.dimension() {
                let h = grid.spacing()[axis];
                for f in 0..grid.face_count(axis) {
                    if let (Some(l), Some(r)) = grid.face_cells(axis, f) {
                        let wc = 0.5 * frozen.c_faces.axes[axis][f] / h;
                        for col in [l, r] {
                            trip.push((l, col, -wc));
                            trip.push((r, col, wc));
                        }
                    }
                }
            }
            let matrix = CsrMatrix::from_triplets(n, n, &trip);
            let solver = LinearSolver::new(
                matrix,
                None,
                solver_kind(grid, &self.options),
                self.options.linear,
            )?;
            CellField::new(solver.solve(&rhs, None)?)
        };
        let mass = grid.integrate(&psi0);
        Ok(SolverState {
            step: 0,
            t: 0.0,
            mu,
            dpsi_dt: grid.zeros(),
            psi_lin: psi0.clone(),
            psi: psi0,
            frozen,
            mass_initial: mass,
            mass_source: 0.0,
        })
    }

    fn prepare(
        &mut self,
        state: &SolverState,
        tau: f64,
    ) -> Result<FrozenCoefficients, SolverError> {
        let frozen = match self.mode {
            Mode::Semilinear => state.frozen.clone(),
            Mode::Quasilinear => {
                let fr = self.coeffs.freeze(&self.grid, &state.psi)?;
                if fr != state.frozen {
                    if let Err(e) = structure_checks(&self.grid, &fr) {
                        self.advisories.push(Advisory {
                            step: state.step + 1,
                            message: alloc::format!("{e}"),
                        });
                    }
                }
                fr
            }
        };
        let reuse = matches!(&self.cache, Some((t, fr, _)) if *t == tau && *fr == frozen);
        if !reuse {
            let matrix = assemble_system(&self.grid, &frozen, tau, self.potential.stabilization());
            let perm = interleave(self.grid.cell_count());
            let solver = LinearSolver::new(
                matrix,
                Some(perm),
                solver_kind(&self.grid, &self.options),
                self.options.linear,
            )?;
            self.cache = Some((tau, frozen.clone(), solver));
        }
        Ok(frozen)
    }

    /// Advances `state` by `τ`.
    pub fn step(
        &mut self,
        state: &SolverState,
        tau: f64,
    ) -> Result<(SolverState, DiagnosticsRecord), SolverError> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(SolverError::Tau(tau));
        }
        let frozen = self.prepare(state, tau)?;
        let grid = &self.grid;
        let n = grid.cell_count();
        let t_new = state.t + tau;
        let solver = &self.cache.as_ref().expect("prepared").2;
        let mut guess: Vec<f64> = state
            .psi
            .values
            .iter()
            .chain(&state.mu.values)
            .copied()
            .collect();
        let mut psi_lin = state.psi.clone();
        let mut passes = 0;
        let x = loop {
            let rhs = assemble_rhs(
                grid,
                &frozen,
                tau,
                &self.potential,
                &state.psi,
                &psi_lin,
                &self.data,
                t_new,
            );
            let x = solver.solve(&rhs, Some(&guess))?;
            if passes >= self.options.picard_iterations {
                break x;
            }
            let change = x[..n]
                .iter()
                .zip(&psi_lin.values)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            if change <= self.options.picard_tolerance {
                break x;
            }
            passes += 1;
            psi_lin = CellField::new(x[..n].to_vec());
            guess = x;
        };
        if !x.iter().all(|v| v.is_finite()) {
            return Err(SolverError::NonFinite(state.step + 1));
        }
        let psi = CellField::new(x[..n].to_vec());
        let mu = CellField::new(x[n..].to_vec());
        let dpsi_dt = CellField::new(
            psi.values
                .iter()
                .zip(&state.psi.values)
                .map(|(a, b)| (a - b) / tau)
                .collect(),
        );
        let faces = grid.boundary_faces();
        let inflow: f64 = SourceData::faces(&self.data.h1, &faces, t_new)
            .iter()
            .zip(&faces)
            .map(|(h, bf)| grid.face_area(bf.axis) * h)
            .sum();
        let source = grid.integrate(&SourceData::cells(&self.data.f, grid, t_new)) + inflow;
        let next = SolverState {
            step: state.step + 1,
            t: t_new,
            psi,
            mu,
            dpsi_dt,
            psi_lin,
            frozen,
            mass_initial: state.mass_initial,
            mass_source: state.mass_source + tau * source,
        };
        let record = self.diagnostics(state, &next, tau, passes);
        if !record.is_finite() {
            return Err(SolverError::NonFinite(next.step));
        }
        Ok((next, record))
    }

    fn diagnostics(
        &self,
        old: &SolverState,
        new: &SolverState,
        tau: f64,
        passes: usize,
    ) -> DiagnosticsRecord {
        let grid = &self.grid;
        let bal = energy_balance(grid, old, new, tau, &self.potential, &self.data);
        DiagnosticsRecord {
            step: new.step,
            t: new.t,
            mass: grid.integrate(&new.psi),
            energy: energy(grid, &new.psi, &self.potential),
            de_dt: bal.de_dt,
            diss_beta: bal.diss_beta,
            diss_cross: bal.diss_cross,
            diss_mobility: bal.diss_mobility,
            mean_mu: grid.mean(&new.mu),
            mean_mu_residual: mean_mu_identity_residual(grid, new, &self.potential, &self.data),
            energy_identity_residual: bal.residual.abs(),
            stationary_residual: stationary_residual(grid, &new.psi, &self.potential),
            mass_balance_residual: mass_balance_residual(grid, new),
            rate_psi: grid.norm(&new.dpsi_dt),
            grad_mu: grid.norm(&grid.gradient(&new.mu)),
            picard_passes: passes,
        }
    }
}

/// One-shot initialization without a compatibility check.
pub fn init_state(
    grid: &GridSpec,
    psi0: CellField,
    coeffs: &CoefficientSet,
    potential: &Potential,
    data: &SourceData,
) -> Result<SolverState, SolverError> {
    let mut s = Stepper::new(
        grid.clone(),
        coeffs.clone(),
        potential.clone(),
        data.clone(),
        Mode::Semilinear,
        StepOptions::default(),
    );
    s.init(psi0, None)
}

/// One-shot step with the state's frozen coefficients.
pub fn step(
    grid: &GridSpec,
    state: &SolverState,
    tau: f64,
    coeffs: &CoefficientSet,
    potential: &Potential,
    data: &SourceData,
) -> Result<(SolverState, DiagnosticsRecord), SolverError> {
    let mut s = Stepper::new(
        grid.clone(),
        coeffs.clone(),
        potential.clone(),
        data.clone(),
        Mode::Semilinear,
        StepOptions::default(),
    );
    s.step(state, tau)
}

/// Equilibrium found by [`SteadyDetector`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub step: usize,
    pub t: f64,
    pub psi: CellField,
    pub mu_inf: f64,
    pub stationary_residual: f64,
    /// `max |μ − μ∞|`.
    pub mu_deviation: f64,
    pub rate_psi: f64,
    pub grad_mu: f64,
    /// Whether the step was an exact fixed point.
    pub immediate: bool,
}

/// Declares equilibrium once `|v|₂` and `|∇μ|₂` stay below `tol_rate` for
/// `window` consecutive steps and the stationary residual is at most
/// `tol_station`. A step that reproduces its input to rounding is accepted
/// at once.
#[derive(Debug, Clone)]
pub struct SteadyDetector {
    pub tol_rate: f64,
    pub tol_station: f64,
    pub window: usize,
    streak: usize,
    pub last_rates: (f64, f64),
}

pub const STEADY_WINDOW: usize = 50;

impl SteadyDetector {
    pub fn new(tol_rate: f64, tol_station: f64) -> Self {
        Self {
            tol_rate,
            tol_station,
            window: STEADY_WINDOW,
            streak: 0,
            last_rates: (f64::INFINITY, f64::INFINITY),
        }
    }

    pub fn observe(
        &mut self,
        grid: &GridSpec,
        state: &SolverState,
        potential: &Potential,
    ) -> Option<EquilibriumReport> {
        let rate = grid.norm(&state.dpsi_dt);
        let gmu = grid.gradient(&state.mu);
        let grad = grid.norm(&gmu);
        self.last_rates = (rate, grad);
        if rate < self.tol_rate && grad < self.tol_rate {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        let tau = state.t / state.step.max(1) as f64;
        let psi_scale = state.psi.max_abs().max(f64::MIN_POSITIVE);
        let mu_scale = state.mu.max_abs().max(f64::MIN_POSITIVE);
        let h = grid.spacing().iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let rounding = 16.0 * f64::EPSILON;
        let fixed = state.step > 0
            && state.dpsi_dt.max_abs() * tau <= rounding * psi_scale
            && gmu.max_abs() * h <= rounding * mu_scale;
        if self.streak < self.window && !fixed {
            return None;
        }
        let residual = stationary_residual(grid, &state.psi, potential);
        if residual > self.tol_station {
            return None;
        }
        let mu_inf = grid.mean(&state.mu);
        let mu_deviation = state
            .mu
            .values
            .iter()
            .fold(0.0_f64, |m, v| m.max((v - mu_inf).abs()));
        Some(EquilibriumReport {
            step: state.step,
            t: state.t,
            psi: state.psi.clone(),
            mu_inf,
            stationary_residual: residual,
            mu_deviation,
            rate_psi: rate,
            grad_mu: grad,
            immediate: fixed && self.streak < self.window,
        })
    }
}

/// Runs a detector over a recorded trajectory tail.
pub fn detect_steady(
    grid: &GridSpec,
    tail: &[SolverState],
    potential: &Potential,
    tol_rate: f64,
    tol_station: f64,
) -> Option<EquilibriumReport> {
    let mut d = SteadyDetector::new(tol_rate, tol_station);
    tail.iter().find_map(|s| d.observe(grid, s, potential))
}

/// Least-squares slope `k` of `ln(E − E∞) ≈ c − k t`, over samples with
/// `E − E∞` above rounding. Report-only.
pub fn fit_decay_rate(times: &[f64], energies: &[f64], e_inf: f64) -> Option<f64> {
    let floor = 1e-13 * e_inf.abs().max(1.0);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(energies)
        .filter(|(_, &e)| e - e_inf > floor)
        .map(|(&t, &e)| (t, (e - e_inf).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (mt, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| {
        (a + (t - mt) * (y - my), b + (t - mt) * (t - mt))
    });
    (sxx > 0.0).then(|| -sxy / sxx)
}
