//! Constitutive data `(β, a, c, b)` and the structural checks on them.
//!
//! Vector coefficients enter the finite-volume fluxes through their
//! face-normal components. The built-in families are given by a stream
//! function `s` with `a = (∂_y s, −∂_x s)`; their face values are the exact
//! face averages `Δs / h`, which makes the discrete divergence vanish to
//! rounding. Pointwise validators sample cells and faces.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{CellField, FaceField, GridSpec, Side};
use crate::linalg::sym_min_eigenvalue;
use crate::Point;

pub mod extension;

pub use extension::{
    adaptive_simpson, deviation_bound, extend_divfree, extend_reflect, extension_divergence_max,
    BallFieldSample, DivergenceProbe, ExtensionError,
};

pub type Vec2 = [f64; 2];

/// Callable of position only.
pub type PointFn<T> = Arc<dyn Fn(Point) -> T + Send + Sync>;
/// Callable of `(x, ψ, ∇ψ)`; used by quasilinear runs.
pub type StateFn<T> = Arc<dyn Fn(Point, f64, Vec2) -> T + Send + Sync>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoefficientError {
    #[error("kinetic modulus beta must be positive, got {0}")]
    Beta(f64),
    #[error("hypothesis (H) fails: smallest eigenvalue {epsilon:e} at ({}, {})", at[0], at[1])]
    Hypothesis { epsilon: f64, at: Point },
    #[error("tabulated coefficient does not match the grid")]
    Shape,
}

/// Divergence-free families generated by a stream function.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamFamily {
    /// Uniform field.
    Constant(Vec2),
    /// Rigid rotation `ω(−(y − c_y), x − c_x)`.
    Rotational { omega: f64, center: Point },
    /// `ω(sin 2πy, sin 2πx)`.
    Shear { omega: f64 },
    /// One convection cell filling `[0, Lx] × [0, Ly]`; tangential on the
    /// boundary of that rectangle.
    Cellular { omega: f64, extents: Vec2 },
}

impl StreamFamily {
    pub fn stream(&self, p: Point) -> f64 {
        let [x, y] = p;
        match *self {
            StreamFamily::Constant([vx, vy]) => vx * y - vy * x,
            StreamFamily::Rotational { omega, center } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                -0.5 * omega * (dx * dx + dy * dy)
            }
            StreamFamily::Shear { omega } => {
                omega * ((2.0 * PI * x).cos() - (2.0 * PI * y).cos()) / (2.0 * PI)
            }
            StreamFamily::Cellular { omega, extents } => {
                omega * (PI * x / extents[0]).sin() * (PI * y / extents[1]).sin()
            }
        }
    }

    pub fn value(&self, p: Point) -> Vec2 {
        let [x, y] = p;
        match *self {
            StreamFamily::Constant(v) => v,
            StreamFamily::Rotational { omega, center } => {
                [-omega * (y - center[1]), omega * (x - center[0])]
            }
            StreamFamily::Shear { omega } => {
                [omega * (2.0 * PI * y).sin(), omega * (2.0 * PI * x).sin()]
            }
            StreamFamily::Cellular { omega, extents } => {
                let (kx, ky) = (PI / extents[0], PI / extents[1]);
                [
                    omega * ky * (kx * x).sin() * (ky * y).cos(),
                    -omega * kx * (kx * x).cos() * (ky * y).sin(),
                ]
            }
        }
    }

    /// Same family with its amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> StreamFamily {
        match *self {
            StreamFamily::Constant([vx, vy]) => StreamFamily::Constant([factor * vx, factor * vy]),
            StreamFamily::Rotational { omega, center } => StreamFamily::Rotational {
                omega: factor * omega,
                center,
            },
            StreamFamily::Shear { omega } => StreamFamily::Shear {
                omega: factor * omega,
            },
            StreamFamily::Cellular { omega, extents } => StreamFamily::Cellular {
                omega: factor * omega,
                extents,
            },
        }
    }
}

#[derive(Clone)]
pub enum VectorCoeff {
    Stream(StreamFamily),
    /// Arbitrary field, sampled pointwise at face centers.
    Field(PointFn<Vec2>),
    /// Face-normal values given directly.
    Faces(FaceField),
    State(StateFn<Vec2>),
}

impl VectorCoeff {
    pub fn zero() -> Self {
        VectorCoeff::Stream(StreamFamily::Constant([0.0, 0.0]))
    }

    pub fn is_state_dependent(&self) -> bool {
        matches!(self, VectorCoeff::State(_))
    }
}

impl fmt::Debug for VectorCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorCoeff::Stream(s) => f.debug_tuple("Stream").field(s).finish(),
            VectorCoeff::Field(_) => f.write_str("Field(<fn>)"),
            VectorCoeff::Faces(_) => f.write_str("Faces(..)"),
            VectorCoeff::State(_) => f.write_str("State(<fn>)"),
        }
    }
}

#[derive(Clone)]
pub enum ScalarCoeff {
    Constant(f64),
    Field(PointFn<f64>),
    Faces(FaceField),
    /// `b₀(1 + κψ²)`.
    QuadraticMobility {
        base: f64,
        kappa: f64,
    },
    State(StateFn<f64>),
}

impl ScalarCoeff {
    pub fn is_state_dependent(&self) -> bool {
        matches!(
            self,
            ScalarCoeff::State(_) | ScalarCoeff::QuadraticMobility { .. }
        )
    }
}

impl fmt::Debug for ScalarCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarCoeff::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            ScalarCoeff::Field(_) => f.write_str("Field(<fn>)"),
            ScalarCoeff::Faces(_) => f.write_str("Faces(..)"),
            ScalarCoeff::QuadraticMobility { base, kappa } => f
                .debug_struct("QuadraticMobility")
                .field("base", base)
                .field("kappa", kappa)
                .finish(),
            ScalarCoeff::State(_) => f.write_str("State(<fn>)"),
        }
    }
}

/// The constitutive moduli with `B = bI`.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub beta: f64,
    pub a: VectorCoeff,
    pub c: VectorCoeff,
    pub b: ScalarCoeff,
    /// Certified ellipticity margin, filled by [`field_epsilon`].
    pub epsilon: Option<f64>,
}

impl CoefficientSet {
    /// Viscous Cahn-Hilliard coefficients: `a = c = 0`, constant mobility.
    pub fn viscous(beta: f64, mobility: f64) -> Self {
        Self {
            beta,
            a: VectorCoeff::zero(),
            c: VectorCoeff::zero(),
            b: ScalarCoeff::Constant(mobility),
            epsilon: None,
        }
    }

    pub fn is_state_dependent(&self) -> bool {
        self.a.is_state_dependent() || self.c.is_state_dependent() || self.b.is_state_dependent()
    }

    /// Samples every coefficient on faces and cells, with state-dependent
    /// entries evaluated at `psi`.
    pub fn freeze(
        &self,
        grid: &GridSpec,
        psi: &CellField,
    ) -> Result<FrozenCoefficients, CoefficientError> {
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(CoefficientError::Beta(self.beta));
        }
        let probe = StateProbe::new(grid, psi);
        Ok(FrozenCoefficients {
            beta: self.beta,
            a_faces: vector_faces(&self.a, grid, &probe)?,
            c_faces: vector_faces(&self.c, grid, &probe)?,
            b_faces: scalar_faces(&self.b, grid, &probe)?,
            a_cells: vector_cells(&self.a, grid, &probe),
            c_cells: vector_cells(&self.c, grid, &probe),
            b_cells: scalar_cells(&self.b, grid, &probe),
        })
    }
}

/// Coefficient samples used by one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenCoefficients {
    pub beta: f64,
    /// Face-normal components of `a`, including boundary faces (which the
    /// flux assembly ignores; tangency makes them zero).
    pub a_faces: FaceField,
    pub c_faces: FaceField,
    /// Mobility at face centers.
    pub b_faces: FaceField,
    pub a_cells: Vec<Vec2>,
    pub c_cells: Vec<Vec2>,
    pub b_cells: Vec<f64>,
}

/// Reconstructed `ψ` and `∇ψ` at cell and face centers.
struct StateProbe<'a> {
    grid: &'a GridSpec,
    psi: &'a CellField,
    face_grad: FaceField,
    cell_grad: Vec<Vec2>,
}

impl<'a> StateProbe<'a> {
    fn new(grid: &'a GridSpec, psi: &'a CellField) -> Self {
        let face_grad = grid.gradient(psi);
        let cell_grad = (0..grid.cell_count())
            .map(|k| {
                let mut g = [0.0; 2];
                for (axis, slot) in g.iter_mut().enumerate().take(grid.dimension()) {
                    let lo = face_grad.axes[axis][grid.cell_face(k, axis, Side::Low)];
                    let hi = face_grad.axes[axis][grid.cell_face(k, axis, Side::High)];
                    *slot = 0.5 * (lo + hi);
                }
                g
            })
            .collect();
        Self {
            grid,
            psi,
            face_grad,
            cell_grad,
        }
    }

    fn cell(&self, k: usize) -> (f64, Vec2) {
        (self.psi.values[k], self.cell_grad[k])
    }

    fn face(&self, axis: usize, f: usize) -> (f64, Vec2) {
        let (lo, hi) = self.grid.face_cells(axis, f);
        let cells: Vec<usize> = lo.into_iter().chain(hi).collect();
        let n = cells.len() as f64;
        let value = cells.iter().map(|&k| self.psi.values[k]).sum::<f64>() / n;
        let mut grad = [0.0; 2];
        for (t, slot) in grad.iter_mut().enumerate().take(self.grid.dimension()) {
            *slot = if t == axis {
                self.face_grad.axes[axis][f]
            } else {
                cells.iter().map(|&k| self.cell_grad[k][t]).sum::<f64>() / n
            };
        }
        (value, grad)
    }
}

fn check_faces(grid: &GridSpec, faces: &FaceField) -> Result<(), CoefficientError> {
    let ok = faces.axes.len() == grid.dimension()
        && (0..grid.dimension()).all(|axis| faces.axes[axis].len() == grid.face_count(axis));
    if ok {
        Ok(())
    } else {
        Err(CoefficientError::Shape)
    }
}

fn vector_faces(
    coeff: &VectorCoeff,
    grid: &GridSpec,
    probe: &StateProbe<'_>,
) -> Result<FaceField, CoefficientError> {
    if let VectorCoeff::Faces(faces) = coeff {
        check_faces(grid, faces)?;
        return Ok(faces.clone());
    }
    let mut out = grid.face_zeros();
    for axis in 0..grid.dimension() {
        for f in 0..grid.face_count(axis) {
            let center = grid.face_center(axis, f);
            out.axes[axis][f] = match coeff {
                VectorCoeff::Stream(s) if grid.dimension() == 2 => {
                    let [hx, hy] = [grid.spacing()[0], grid.spacing()[1]];
                    let [x, y] = center;
                    if axis == 0 {
                        (s.stream([x, y + 0.5 * hy]) - s.stream([x, y - 0.5 * hy])) / hy
                    } else {
                        -(s.stream([x + 0.5 * hx, y]) - s.stream([x - 0.5 * hx, y])) / hx
                    }
                }
                VectorCoeff::Stream(s) => s.value(center)[axis],
                VectorCoeff::Field(field) => field(center)[axis],
                VectorCoeff::State(field) => {
                    let (psi, grad) = probe.face(axis, f);
                    field(center, psi, grad)[axis]
                }
                VectorCoeff::Faces(_) => unreachable!(),
            };
        }
    }
    Ok(out)
}

fn vector_cells(coeff: &VectorCoeff, grid: &GridSpec, probe: &StateProbe<'_>) -> Vec<Vec2> {
    (0..grid.cell_count())
        .map(|k| {
            let center = grid.cell_center(k);
            match coeff {
                VectorCoeff::Stream(s) => s.value(center),
                VectorCoeff::Field(field) => field(center),
                VectorCoeff::State(field) => {
                    let (psi, grad) = probe.cell(k);
                    field(center, psi, grad)
                }
                VectorCoeff::Faces(faces) => {
                    let mut v = [0.0; 2];
                    for (axis, slot) in v.iter_mut().enumerate().take(grid.dimension()) {
                        let lo = faces.axes[axis][grid.cell_face(k, axis, Side::Low)];
                        let hi = faces.axes[axis][grid.cell_face(k, axis, Side::High)];
                        *slot = 0.5 * (lo + hi);
                    }
                    v
                }
            }
        })
        .collect()
}

fn scalar_at(coeff: &ScalarCoeff, center: Point, state: (f64, Vec2)) -> f64 {
    match coeff {
        ScalarCoeff::Constant(v) => *v,
        ScalarCoeff::Field(field) => field(center),
        ScalarCoeff::QuadraticMobility { base, kappa } => base * (1.0 + kappa * state.0 * state.0),
        ScalarCoeff::State(field) => field(center, state.0, state.1),
        ScalarCoeff::Faces(_) => unreachable!(),
    }
}

fn scalar_faces(
    coeff: &ScalarCoeff,
    grid: &GridSpec,
    probe: &StateProbe<'_>,
) -> Result<FaceField, CoefficientError> {
    if let ScalarCoeff::Faces(faces) = coeff {
        check_faces(grid, faces)?;
        return Ok(faces.clone());
    }
    let mut out = grid.face_zeros();
    for axis in 0..grid.dimension() {
        for f in 0..grid.face_count(axis) {
            out.axes[axis][f] = scalar_at(coeff, grid.face_center(axis, f), probe.face(axis, f));
        }
    }
    Ok(out)
}

fn scalar_cells(coeff: &ScalarCoeff, grid: &GridSpec, probe: &StateProbe<'_>) -> Vec<f64> {
    (0..grid.cell_count())
        .map(|k| match coeff {
            ScalarCoeff::Faces(faces) => {
                let mut sum = 0.0;
                for axis in 0..grid.dimension() {
                    sum += faces.axes[axis][grid.cell_face(k, axis, Side::Low)]
                        + faces.axes[axis][grid.cell_face(k, axis, Side::High)];
                }
                sum / (2 * grid.dimension()) as f64
            }
            _ => scalar_at(coeff, grid.cell_center(k), probe.cell(k)),
        })
        .collect()
}

/// Largest `ε` for which `β z₀² + (a+c|z₁) z₀ + (B z₁|z₁) ≥ ε (z₀² + |z₁|²)`,
/// i.e. the smallest eigenvalue of the symmetric matrix
/// `[[β, (a+c)ᵀ/2], [(a+c)/2, (B+Bᵀ)/2]]`. `b_matrix` is row-major `n × n`.
/// A negative value means the hypothesis fails.
pub fn hypothesis_h_epsilon(beta: f64, a: &[f64], c: &[f64], b_matrix: &[f64]) -> f64 {
    let n = a.len();
    assert!(
        c.len() == n && b_matrix.len() == n * n,
        "inconsistent coefficient dimensions"
    );
    if let Some(b) = isotropic_part(b_matrix, n) {
        let d2: f64 = a.iter().zip(c).map(|(x, y)| (x + y) * (x + y)).sum();
        return isotropic_epsilon(beta, d2, b, n);
    }
    let m = n + 1;
    let mut form = vec![0.0; m * m];
    form[0] = beta;
    for i in 0..n {
        let half = 0.5 * (a[i] + c[i]);
        form[i + 1] = half;
        form[(i + 1) * m] = half;
        for j in 0..n {
            form[(i + 1) * m + j + 1] = 0.5 * (b_matrix[i * n + j] + b_matrix[j * n + i]);
        }
    }
    sym_min_eigenvalue(&form, m)
}

fn isotropic_part(b_matrix: &[f64], n: usize) -> Option<f64> {
    let b = b_matrix[0];
    let isotropic =
        (0..n).all(|i| (0..n).all(|j| b_matrix[i * n + j] == if i == j { b } else { 0.0 }));
    isotropic.then_some(b)
}

/// Closed form for `B = bI`: the roots of `(β − λ)(b − λ) = |d|²/4`, plus the
/// eigenvalue `b` (multiplicity `n − 1`) on the complement of `d`.
fn isotropic_epsilon(beta: f64, d2: f64, b: f64, n: usize) -> f64 {
    let mean = 0.5 * (beta + b);
    let half_gap = 0.5 * (beta - b);
    let root = mean - (half_gap * half_gap + 0.25 * d2).sqrt();
    if n > 1 {
        root.min(b)
    } else {
        root
    }
}

/// Margin of the matrix inequality `βB − ½(a⊗c + c⊗a) ≥ εβ I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaVerdict {
    /// `λ_min(sym(βB − ½(a⊗c + c⊗a))) − εβ`.
    pub margin: f64,
    pub holds: bool,
}

pub const HA_TOLERANCE: f64 = 1e-10;

pub fn check_ha(beta: f64, a: &[f64], c: &[f64], b_matrix: &[f64], epsilon: f64) -> HaVerdict {
    let n = a.len();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let sym_b = 0.5 * (b_matrix[i * n + j] + b_matrix[j * n + i]);
            m[i * n + j] = beta * sym_b - 0.5 * (a[i] * c[j] + c[i] * a[j]);
        }
    }
    let margin = sym_min_eigenvalue(&m, n) - epsilon * beta;
    HaVerdict {
        margin,
        holds: margin >= -HA_TOLERANCE,
    }
}

/// Minimum of the pointwise ellipticity margin and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonScan {
    pub min: f64,
    pub at: Point,
}

/// Scans [`hypothesis_h_epsilon`] over cell centers and face centers.
pub fn scan_epsilon(
    coeffs: &CoefficientSet,
    grid: &GridSpec,
    psi: &CellField,
) -> Result<EpsilonScan, CoefficientError> {
    let frozen = coeffs.freeze(grid, psi)?;
    let n = grid.dimension();
    let probe = StateProbe::new(grid, psi);
    let mut best = EpsilonScan {
        min: f64::INFINITY,
        at: [0.0; 2],
    };
    let mut visit = |a: Vec2, c: Vec2, b: f64, at: Point| {
        let eps = pointwise_epsilon(coeffs.beta, &a[..n], &c[..n], b);
        if eps < best.min || eps.is_nan() {
            best = EpsilonScan { min: eps, at };
        }
    };
    for k in 0..grid.cell_count() {
        visit(
            frozen.a_cells[k],
            frozen.c_cells[k],
            frozen.b_cells[k],
            grid.cell_center(k),
        );
    }
    let pointwise = |coeff: &VectorCoeff, axis: usize, f: usize| -> Option<Vec2> {
        let center = grid.face_center(axis, f);
        match coeff {
            VectorCoeff::Stream(s) => Some(s.value(center)),
            VectorCoeff::Field(field) => Some(field(center)),
            VectorCoeff::State(field) => {
                let (psi, grad) = probe.face(axis, f);
                Some(field(center, psi, grad))
            }
            VectorCoeff::Faces(_) => None,
        }
    };
    for axis in 0..n {
        for f in 0..grid.face_count(axis) {
            if let (Some(a), Some(c)) =
                (pointwise(&coeffs.a, axis, f), pointwise(&coeffs.c, axis, f))
            {
                visit(
                    a,
                    c,
                    frozen.b_faces.axes[axis][f],
                    grid.face_center(axis, f),
                );
            }
        }
    }
    Ok(best)
}

fn pointwise_epsilon(beta: f64, a: &[f64], c: &[f64], b: f64) -> f64 {
    let d2: f64 = a.iter().zip(c).map(|(x, y)| (x + y) * (x + y)).sum();
    isotropic_epsilon(beta, d2, b, a.len())
}

/// Grid minimum of the ellipticity margin; stores it into `coeffs.epsilon`.
/// Fails when the minimum is not positive.
pub fn field_epsilon(
    coeffs: &mut CoefficientSet,
    grid: &GridSpec,
    psi: &CellField,
) -> Result<f64, CoefficientError> {
    let scan = scan_epsilon(coeffs, grid, psi)?;
    if !(scan.min > 0.0) {
        coeffs.epsilon = None;
        return Err(CoefficientError::Hypothesis {
            epsilon: scan.min,
            at: scan.at,
        });
    }
    coeffs.epsilon = Some(scan.min);
    Ok(scan.min)
}

/// Max-norm of the discrete divergence of the face-normal samples of `vf`.
pub fn check_divergence_free(
    vf: &VectorCoeff,
    grid: &GridSpec,
    psi: &CellField,
) -> Result<f64, CoefficientError> {
    let probe = StateProbe::new(grid, psi);
    let faces = vector_faces(vf, grid, &probe)?;
    Ok(grid.divergence(&faces).max_abs())
}

/// Max `|(vf|ν)|` over boundary faces.
pub fn check_tangency(
    vf: &VectorCoeff,
    grid: &GridSpec,
    psi: &CellField,
) -> Result<f64, CoefficientError> {
    let probe = StateProbe::new(grid, psi);
    let faces = vector_faces(vf, grid, &probe)?;
    Ok(grid
        .boundary_faces()
        .iter()
        .fold(0.0, |m, bf| m.max(faces.axes[bf.axis][bf.face].abs())))
}

/// Sum of two vector coefficients evaluated on the same grid (used for the
/// cross term `a + c`).
pub fn add_faces(a: &FaceField, c: &FaceField) -> FaceField {
    FaceField {
        axes: a
            .axes
            .iter()
            .zip(&c.axes)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
            .collect(),
    }
}

/// Wraps a position-only vector callable.
pub fn vector_field(f: impl Fn(Point) -> Vec2 + Send + Sync + 'static) -> VectorCoeff {
    VectorCoeff::Field(Arc::new(f))
}

pub fn scalar_field(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> ScalarCoeff {
    ScalarCoeff::Field(Arc::new(f))
}

pub fn state_vector_field(
    f: impl Fn(Point, f64, Vec2) -> Vec2 + Send + Sync + 'static,
) -> VectorCoeff {
    VectorCoeff::State(Arc::new(f))
}
