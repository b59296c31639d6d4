//! Uniform cell-centered finite-volume meshes on rectangles.
//!
//! Cell values live at cell centers, face values are face-normal components
//! along the positive axis direction. Boundary faces never carry an unknown;
//! they hold the imposed Neumann datum. The gradient/divergence pair is
//! built so that discrete summation by parts is exact algebra:
//! `inner(gradient(u), F) = -inner(u, divergence(F))` whenever `F` vanishes
//! on boundary faces.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::Point;

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    /// Zero flux on every boundary face.
    NeumannHomogeneous,
    /// Boundary faces carry prescribed flux data.
    NeumannData,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("expected {expected} entries for `{what}`, got {got}")]
    Arity {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("extent along axis {axis} must be positive, got {value}")]
    Extent { axis: usize, value: f64 },
    #[error("axis {axis} has {cells} cells; at least {MIN_CELLS} are required")]
    Undersized { axis: usize, cells: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

impl Side {
    /// Sign of the outward normal relative to the positive axis direction.
    pub fn outward_sign(self) -> f64 {
        match self {
            Side::Low => -1.0,
            Side::High => 1.0,
        }
    }
}

/// A boundary face together with the cell it closes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub axis: usize,
    pub side: Side,
    /// Index into the face array of `axis`.
    pub face: usize,
    /// Index of the adjacent cell.
    pub cell: usize,
    pub center: Point,
}

/// One real per cell, row-major with the x index running fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub values: Vec<f64>,
}

impl CellField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> CellField {
        CellField::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Face-normal components, one array per active axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub axes: Vec<Vec<f64>>,
}

impl FaceField {
    pub fn max_abs(&self) -> f64 {
        self.axes.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Rectangular mesh with per-axis uniform spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dimension: usize,
    extents: [f64; 2],
    cells: [usize; 2],
    spacing: [f64; 2],
    bc: BcKind,
}

impl GridSpec {
    /// Builds a grid; the stored extents are recomputed as `spacing * cells`
    /// so that identity holds exactly in floating point.
    pub fn new(
        dimension: usize,
        extents: &[f64],
        cells: &[usize],
        bc: BcKind,
    ) -> Result<Self, GridError> {
        if !(1..=2).contains(&dimension) {
            return Err(GridError::Dimension(dimension));
        }
        if extents.len() != dimension {
            return Err(GridError::Arity {
                what: "extents",
                expected: dimension,
                got: extents.len(),
            });
        }
        if cells.len() != dimension {
            return Err(GridError::Arity {
                what: "cells",
                expected: dimension,
                got: cells.len(),
            });
        }
        let mut grid = GridSpec {
            dimension,
            extents: [1.0; 2],
            cells: [1; 2],
            spacing: [1.0; 2],
            bc,
        };
        for axis in 0..dimension {
            let (length, n) = (extents[axis], cells[axis]);
            if !(length > 0.0 && length.is_finite()) {
                return Err(GridError::Extent {
                    axis,
                    value: length,
                });
            }
            if n < MIN_CELLS {
                return Err(GridError::Undersized { axis, cells: n });
            }
            let h = length / n as f64;
            grid.spacing[axis] = h;
            grid.cells[axis] = n;
            grid.extents[axis] = h * n as f64;
        }
        Ok(grid)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dimension]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dimension]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dimension]
    }

    pub fn bc(&self) -> BcKind {
        self.bc
    }

    pub fn cell_count(&self) -> usize {
        self.cells().iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Measure of the domain.
    pub fn measure(&self) -> f64 {
        self.extents().iter().product()
    }

    /// Area of a face normal to `axis` (1 in one dimension).
    pub fn face_area(&self, axis: usize) -> f64 {
        self.spacing()
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != axis)
            .map(|(_, h)| *h)
            .product()
    }

    pub fn face_count(&self, axis: usize) -> usize {
        let [nx, ny] = self.cells;
        match axis {
            0 => (nx + 1) * ny,
            _ => nx * (ny + 1),
        }
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.cells[0] + i
    }

    pub fn cell_ij(&self, k: usize) -> (usize, usize) {
        (k % self.cells[0], k / self.cells[0])
    }

    pub fn cell_center(&self, k: usize) -> Point {
        let (i, j) = self.cell_ij(k);
        let x = (i as f64 + 0.5) * self.spacing[0];
        if self.dimension == 1 {
            [x, 0.0]
        } else {
            [x, (j as f64 + 0.5) * self.spacing[1]]
        }
    }

    /// Lattice position `(i, j)` of face `f` normal to `axis`; the face sits
    /// on the low side of cell `(i, j)`.
    pub fn face_ij(&self, axis: usize, f: usize) -> (usize, usize) {
        let nx = self.cells[0];
        match axis {
            0 => (f % (nx + 1), f / (nx + 1)),
            _ => (f % nx, f / nx),
        }
    }

    pub fn face_center(&self, axis: usize, f: usize) -> Point {
        let (i, j) = self.face_ij(axis, f);
        let [hx, hy] = self.spacing;
        let y = |jj: f64| if self.dimension == 1 { 0.0 } else { jj * hy };
        match axis {
            0 => [i as f64 * hx, y(j as f64 + 0.5)],
            _ => [(i as f64 + 0.5) * hx, j as f64 * hy],
        }
    }

    /// The cells on the low and high side of a face (`None` outside).
    pub fn face_cells(&self, axis: usize, f: usize) -> (Option<usize>, Option<usize>) {
        let (i, j) = self.face_ij(axis, f);
        let n = self.cells[axis];
        let along = if axis == 0 { i } else { j };
        let low = (along > 0).then(|| match axis {
            0 => self.cell_index(i - 1, j),
            _ => self.cell_index(i, j - 1),
        });
        let high = (along < n).then(|| self.cell_index(i, j));
        (low, high)
    }

    /// Face on the low/high side of cell `k` along `axis`.
    pub fn cell_face(&self, k: usize, axis: usize, side: Side) -> usize {
        let (i, j) = self.cell_ij(k);
        let nx = self.cells[0];
        let shift = usize::from(side == Side::High);
        match axis {
            0 => j * (nx + 1) + i + shift,
            _ => (j + shift) * nx + i,
        }
    }

    pub fn is_boundary_face(&self, axis: usize, f: usize) -> bool {
        let (low, high) = self.face_cells(axis, f);
        low.is_none() || high.is_none()
    }

    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        let mut out = Vec::new();
        for axis in 0..self.dimension {
            for f in 0..self.face_count(axis) {
                match self.face_cells(axis, f) {
                    (None, Some(cell)) => out.push(BoundaryFace {
                        axis,
                        side: Side::Low,
                        face: f,
                        cell,
                        center: self.face_center(axis, f),
                    }),
                    (Some(cell), None) => out.push(BoundaryFace {
                        axis,
                        side: Side::High,
                        face: f,
                        cell,
                        center: self.face_center(axis, f),
                    }),
                    _ => {}
                }
            }
        }
        out
    }

    pub fn zeros(&self) -> CellField {
        CellField::new(vec![0.0; self.cell_count()])
    }

    pub fn constant(&self, value: f64) -> CellField {
        CellField::new(vec![value; self.cell_count()])
    }

    pub fn face_zeros(&self) -> FaceField {
        FaceField {
            axes: (0..self.dimension)
                .map(|axis| vec![0.0; self.face_count(axis)])
                .collect(),
        }
    }

    /// Samples `f` at cell centers.
    pub fn sample(&self, f: impl Fn(Point) -> f64) -> CellField {
        CellField::new(
            (0..self.cell_count())
                .map(|k| f(self.cell_center(k)))
                .collect(),
        )
    }

    /// Discrete gradient with homogeneous Neumann closure.
    pub fn gradient(&self, u: &CellField) -> FaceField {
        self.gradient_with(u, |_| 0.0)
    }

    /// Discrete gradient; `outward(face)` gives the outward normal derivative
    /// imposed on each boundary face.
    pub fn gradient_with(
        &self,
        u: &CellField,
        outward: impl Fn(&BoundaryFace) -> f64,
    ) -> FaceField {
        debug_assert_eq!(u.len(), self.cell_count());
        let mut g = self.face_zeros();
        for axis in 0..self.dimension {
            let h = self.spacing[axis];
            for (f, slot) in g.axes[axis].iter_mut().enumerate() {
                if let (Some(l), Some(r)) = self.face_cells(axis, f) {
                    *slot = (u.values[r] - u.values[l]) / h;
                }
            }
        }
        for bf in self.boundary_faces() {
            g.axes[bf.axis][bf.face] = bf.side.outward_sign() * outward(&bf);
        }
        g
    }

    /// Signed face sums divided by the spacing, per axis.
    pub fn divergence(&self, flux: &FaceField) -> CellField {
        let mut d = self.zeros();
        for axis in 0..self.dimension {
            let h = self.spacing[axis];
            for (k, slot) in d.values.iter_mut().enumerate() {
                let lo = flux.axes[axis][self.cell_face(k, axis, Side::Low)];
                let hi = flux.axes[axis][self.cell_face(k, axis, Side::High)];
                *slot += (hi - lo) / h;
            }
        }
        d
    }

    /// `divergence ∘ gradient` with homogeneous Neumann closure.
    pub fn laplacian(&self, u: &CellField) -> CellField {
        self.divergence(&self.gradient(u))
    }

    pub fn laplacian_with(
        &self,
        u: &CellField,
        outward: impl Fn(&BoundaryFace) -> f64,
    ) -> CellField {
        self.divergence(&self.gradient_with(u, outward))
    }

    pub fn integrate(&self, u: &CellField) -> f64 {
        u.values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn mean(&self, u: &CellField) -> f64 {
        self.integrate(u) / self.measure()
    }

    /// Signed sum of outward boundary fluxes times face area.
    pub fn boundary_flux(&self, flux: &FaceField) -> f64 {
        self.boundary_faces()
            .iter()
            .map(|bf| {
                bf.side.outward_sign() * flux.axes[bf.axis][bf.face] * self.face_area(bf.axis)
            })
            .sum()
    }

    /// Volume-weighted pairing of two cell or face fields.
    pub fn inner<T: Pairing + ?Sized>(&self, u: &T, v: &T) -> f64 {
        u.pair(v, self)
    }

    pub fn norm<T: Pairing + ?Sized>(&self, u: &T) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// First nontrivial eigenvalue of the negative Neumann Laplacian.
    pub fn neumann_lambda1(&self) -> f64 {
        let longest = self.extents().iter().fold(0.0_f64, |m, &l| m.max(l));
        (PI / longest).powi(2)
    }
}

/// Fields that carry a volume-weighted L2 pairing on a grid.
pub trait Pairing {
    fn pair(&self, other: &Self, grid: &GridSpec) -> f64;
}

impl Pairing for CellField {
    fn pair(&self, other: &Self, grid: &GridSpec) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * grid.cell_volume()
    }
}

/// Interior faces carry one cell volume of weight, boundary faces half of one
/// (the dual cell is cut by the boundary).
impl Pairing for FaceField {
    fn pair(&self, other: &Self, grid: &GridSpec) -> f64 {
        let vol = grid.cell_volume();
        let mut total = 0.0;
        for axis in 0..grid.dimension() {
            for (f, (a, b)) in self.axes[axis].iter().zip(&other.axes[axis]).enumerate() {
                let w = if grid.is_boundary_face(axis, f) {
                    0.5 * vol
                } else {
                    vol
                };
                total += w * a * b;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> GridSpec {
        GridSpec::new(1, &[1.0], &[n], BcKind::NeumannHomogeneous).unwrap()
    }

    #[test]
    fn spacing_from_extents() {
        assert_eq!(line(8).spacing(), &[0.125]);
        let g = GridSpec::new(2, &[1.0, 2.0], &[8, 16], BcKind::NeumannHomogeneous).unwrap();
        assert_eq!(g.spacing(), &[0.125, 0.125]);
        for axis in 0..2 {
            assert_eq!(
                g.spacing()[axis] * g.cells()[axis] as f64,
                g.extents()[axis]
            );
        }
        let odd = GridSpec::new(1, &[0.7], &[13], BcKind::NeumannHomogeneous).unwrap();
        assert_eq!(odd.spacing()[0] * 13.0, odd.extents()[0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(
            GridSpec::new(1, &[1.0], &[2], BcKind::NeumannHomogeneous),
            Err(GridError::Undersized { axis: 0, cells: 2 })
        );
        assert!(matches!(
            GridSpec::new(1, &[-1.0], &[8], BcKind::NeumannHomogeneous),
            Err(GridError::Extent { .. })
        ));
        assert!(matches!(
            GridSpec::new(3, &[1.0; 3], &[8; 3], BcKind::NeumannHomogeneous),
            Err(GridError::Dimension(3))
        ));
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let g = line(16);
        assert_eq!(g.gradient(&g.constant(3.5)).max_abs(), 0.0);
        let grad = g.gradient(&g.sample(|p| p[0]));
        let faces = &grad.axes[0];
        assert_eq!(faces[0], 0.0);
        assert_eq!(faces[16], 0.0);
        for v in &faces[1..16] {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let lap = g.laplacian(&g.sample(|p| p[0]));
        assert!((lap.values[0] - 16.0).abs() < 1e-9);
        assert!((lap.values[15] + 16.0).abs() < 1e-9);
        for v in &lap.values[1..15] {
            assert!(v.abs() < 1e-9);
        }
    }

    fn interior_gradient_error(n: usize) -> f64 {
        let g = line(n);
        let grad = g.gradient(&g.sample(|p| (PI * p[0]).cos()));
        (1..n)
            .map(|f| {
                let x = g.face_center(0, f)[0];
                (grad.axes[0][f] + PI * (PI * x).sin()).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn gradient_second_order() {
        let ratio = interior_gradient_error(32) / interior_gradient_error(64);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    fn laplacian_error(n: usize) -> f64 {
        let g = line(n);
        let lap = g.laplacian(&g.sample(|p| (PI * p[0]).cos()));
        (0..n)
            .map(|k| {
                let x = g.cell_center(k)[0];
                (lap.values[k] + PI * PI * (PI * x).cos()).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn laplacian_second_order() {
        // cos(πx) has zero slope at both ends, so the closure is consistent.
        let order = (laplacian_error(32) / laplacian_error(64)).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
        let order = (laplacian_error(64) / laplacian_error(128)).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn integrate_examples() {
        let g = line(10);
        assert_eq!(g.integrate(&g.constant(1.0)), 1.0);
        assert_eq!(g.integrate(&g.zeros()), 0.0);
        let g = line(256);
        assert_eq!(g.integrate(&g.sample(|p| p[0])), 0.5);
        let sq = GridSpec::new(2, &[1.0, 1.0], &[8, 8], BcKind::NeumannHomogeneous).unwrap();
        assert_eq!(sq.inner(&sq.constant(1.0), &sq.constant(1.0)), 1.0);
    }

    fn random_face_field(g: &GridSpec, rng: &mut ChaCha8Rng, boundary: bool) -> FaceField {
        let mut f = g.face_zeros();
        for axis in 0..g.dimension() {
            for (k, v) in f.axes[axis].iter_mut().enumerate() {
                if boundary || !g.is_boundary_face(axis, k) {
                    *v = rng.gen_range(-1.0..1.0);
                }
            }
        }
        f
    }

    #[test]
    fn adjointness_and_divergence_theorem_2d() {
        let g = GridSpec::new(2, &[1.0, 1.5], &[12, 9], BcKind::NeumannHomogeneous).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = CellField::new(
                (0..g.cell_count())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect(),
            );
            let f = random_face_field(&g, &mut rng, false);
            let lhs = g.inner(&g.gradient(&u), &f);
            let rhs = -g.inner(&u, &g.divergence(&f));
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            let fb = random_face_field(&g, &mut rng, true);
            let total = g.integrate(&g.divergence(&fb));
            assert!((total - g.boundary_flux(&fb)).abs() < 1e-12);
        }
        let zero = g.face_zeros();
        assert_eq!(g.divergence(&zero).max_abs(), 0.0);
    }

    #[test]
    fn boundary_datum_sign_convention() {
        let g = line(8);
        let u = g.zeros();
        // Outward slope 1 on both ends: the low face stores -1.
        let grad = g.gradient_with(&u, |_| 1.0);
        assert_eq!(grad.axes[0][0], -1.0);
        assert_eq!(grad.axes[0][8], 1.0);
        assert!((g.boundary_flux(&grad) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lambda1_examples() {
        assert!((line(8).neumann_lambda1() - PI * PI).abs() < 1e-14);
        let g = GridSpec::new(1, &[2.0], &[8], BcKind::NeumannHomogeneous).unwrap();
        assert!((g.neumann_lambda1() - PI * PI / 4.0).abs() < 1e-14);
        let sq = GridSpec::new(2, &[1.0, 1.0], &[8, 8], BcKind::NeumannHomogeneous).unwrap();
        assert!((sq.neumann_lambda1() - PI * PI).abs() < 1e-14);
    }

    #[test]
    fn boundary_face_enumeration() {
        let g = GridSpec::new(2, &[1.0, 1.0], &[4, 5], BcKind::NeumannHomogeneous).unwrap();
        let faces = g.boundary_faces();
        assert_eq!(faces.len(), 2 * 5 + 2 * 4);
        for bf in faces {
            let c = g.cell_center(bf.cell);
            let d = (c[bf.axis] - bf.center[bf.axis]).abs();
            assert!((d - 0.5 * g.spacing()[bf.axis]).abs() < 1e-14);
        }
    }

    proptest::proptest! {
        #[test]
        fn inner_is_nonnegative(values in proptest::collection::vec(-10.0f64..10.0, 16)) {
            let g = line(16);
            let u = CellField::new(values);
            proptest::prop_assert!(g.inner(&u, &u) >= 0.0);
            let grad = g.gradient(&u);
            proptest::prop_assert!(g.inner(&grad, &grad) >= 0.0);
        }
    }
}
