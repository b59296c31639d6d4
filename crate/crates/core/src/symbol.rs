//! The Fourier-Laplace symbol of the linearized constant-coefficient problem
//! and scans certifying its parabolicity and multiplier bounds.
//!
//! With `A = (a|ξ)`, `C = (c|ξ)` and `q = (Bξ|ξ)` the determinant is
//! `m(λ, ξ) = λ(1 − iA)(1 − iC) + q(βλ + |ξ|²)`, and
//! `m = λ(z₁ + z₂)` with `z₁ = 1 − AC + βq − i(A + C)` and `z₂ = q|ξ|²/λ`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::coefficients::hypothesis_h_epsilon;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SymbolError {
    #[error("symbol parameters need beta > 0 and consistent dimensions")]
    Shape,
    #[error("hypothesis (H) fails for the constant data: epsilon = {0:e}")]
    Hypothesis(f64),
    #[error("mikhlin scan supports n <= 2, got {0}")]
    Dimension(usize),
}

/// Constant-coefficient data `(β, a, c, B)`; `b` is row-major `n × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolParams {
    pub beta: f64,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub n: usize,
}

impl SymbolParams {
    pub fn new(beta: f64, a: Vec<f64>, c: Vec<f64>, b: Vec<f64>) -> Result<Self, SymbolError> {
        let n = a.len();
        if !(beta > 0.0) || n == 0 || c.len() != n || b.len() != n * n {
            return Err(SymbolError::Shape);
        }
        let eps = hypothesis_h_epsilon(beta, &a, &c, &b);
        if !(eps > 0.0) {
            return Err(SymbolError::Hypothesis(eps));
        }
        Ok(Self { beta, a, c, b, n })
    }

    /// `β = 1`, `a = c = 0`, `B = I`.
    pub fn identity(n: usize) -> Self {
        let mut b = vec![0.0; n * n];
        for i in 0..n {
            b[i * n + i] = 1.0;
        }
        Self {
            beta: 1.0,
            a: vec![0.0; n],
            c: vec![0.0; n],
            b,
            n,
        }
    }

    pub fn epsilon(&self) -> f64 {
        hypothesis_h_epsilon(self.beta, &self.a, &self.c, &self.b)
    }

    /// `((a|ξ), (c|ξ), (Bξ|ξ), |ξ|²)`.
    fn forms(&self, xi: &[f64]) -> (f64, f64, f64, f64) {
        let n = self.n;
        let mut a = 0.0;
        let mut c = 0.0;
        let mut q = 0.0;
        let mut xx = 0.0;
        for i in 0..n {
            a += self.a[i] * xi[i];
            c += self.c[i] * xi[i];
            xx += xi[i] * xi[i];
            let mut row = 0.0;
            for j in 0..n {
                row += self.b[i * n + j] * xi[j];
            }
            q += xi[i] * row;
        }
        (a, c, q, xx)
    }
}

pub fn symbol_m(p: &SymbolParams, lambda: Complex64, xi: &[f64]) -> Complex64 {
    let (a, c, q, xx) = p.forms(xi);
    lambda * Complex64::new(1.0, -a) * Complex64::new(1.0, -c) + (lambda * p.beta + xx) * q
}

pub fn z_parts(p: &SymbolParams, lambda: Complex64, xi: &[f64]) -> (Complex64, Complex64) {
    let (a, c, q, xx) = p.forms(xi);
    let z1 = Complex64::new(1.0 - a * c + p.beta * q, -(a + c));
    let z2 = Complex64::new(q * xx, 0.0) / lambda;
    (z1, z2)
}

/// `(1/√2) min{1, (1 + cos(φ₁ − φ₂))^{1/2}}`.
pub fn angle_constant(phi1: f64, phi2: f64) -> f64 {
    FRAC_1_SQRT_2 * (1.0 + (phi1 - phi2).cos()).max(0.0).sqrt().min(1.0)
}

/// `|λ|(1 + |ξ|²) + |ξ|⁴`.
fn majorant(lambda: Complex64, xx: f64) -> f64 {
    let l = lambda.norm();
    l + (l + xx) * xx
}

/// `Ŝ = (λ(1 + |ξ|²) + |ξ|⁴) / m(λ, ξ)`.
pub fn eval_s_hat(p: &SymbolParams, lambda: Complex64, xi: &[f64]) -> Complex64 {
    let xx: f64 = xi.iter().map(|v| v * v).sum();
    (lambda + (lambda + xx) * xx) / symbol_m(p, lambda, xi)
}

/// Named constant-coefficient sets satisfying (H), two in the plane and one
/// in space.
pub fn admissible_presets() -> Vec<(&'static str, SymbolParams)> {
    let diag = |d: &[f64]| {
        let n = d.len();
        let mut b = vec![0.0; n * n];
        for (i, v) in d.iter().enumerate() {
            b[i * n + i] = *v;
        }
        b
    };
    [
        (
            "drift",
            1.0,
            vec![0.3, 0.0],
            vec![0.0, 0.2],
            diag(&[1.0, 1.0]),
        ),
        (
            "coupled",
            2.0,
            vec![0.5, 0.5],
            vec![-0.3, 0.4],
            diag(&[1.5, 1.5]),
        ),
        (
            "anisotropic3",
            1.0,
            vec![0.2, 0.1, 0.0],
            vec![0.0, 0.1, 0.3],
            diag(&[1.0, 2.0, 1.5]),
        ),
    ]
    .into_iter()
    .map(|(name, beta, a, c, b)| {
        (
            name,
            SymbolParams::new(beta, a, c, b).expect("preset satisfies (H)"),
        )
    })
    .collect()
}

/// Samples of `λ ∈ Σ_φ` and `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorGrid {
    pub phi: f64,
    pub lambdas: Vec<Complex64>,
    pub xis: Vec<Vec<f64>>,
}

pub const DEFAULT_PHI: f64 = 0.55 * PI;
pub const MODULUS_RANGE: (f64, f64) = (1e-3, 1e3);

fn log_space(count: usize) -> Vec<f64> {
    let (lo, hi) = (MODULUS_RANGE.0.ln(), MODULUS_RANGE.1.ln());
    (0..count)
        .map(|k| (lo + (hi - lo) * k as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

/// Unit vectors: `±1` for `n = 1`, uniform angles for `n = 2`, a Fibonacci
/// lattice for `n = 3`.
pub fn directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => (0..count)
            .map(|k| {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let t = PI * (3.0 - 5.0_f64.sqrt()) * k as f64;
                let mut v = vec![rho * t.cos(), rho * t.sin(), z];
                v.resize(n, 0.0);
                v
            })
            .collect(),
    }
}

impl SectorGrid {
    pub fn new(
        phi: f64,
        n: usize,
        rays: usize,
        moduli: usize,
        dirs: usize,
        xi_moduli: usize,
    ) -> Self {
        let radii = log_space(moduli);
        let mut lambdas = Vec::with_capacity(rays * moduli);
        for k in 0..rays {
            let arg = -phi + (k as f64 + 0.5) * 2.0 * phi / rays as f64;
            for &r in &radii {
                lambdas.push(Complex64::from_polar(r, arg));
            }
        }
        let mut xis = Vec::new();
        for d in directions(n, dirs) {
            for &r in &log_space(xi_moduli) {
                xis.push(d.iter().map(|v| r * v).collect());
            }
        }
        Self { phi, lambdas, xis }
    }

    /// 24 rays × 25 moduli in `λ`, 16 directions × 25 moduli in `ξ`.
    pub fn standard(phi: f64, n: usize) -> Self {
        Self::new(phi, n, 24, 25, 16, 25)
    }

    /// Every sampling axis doubled.
    pub fn doubled(phi: f64, n: usize) -> Self {
        Self::new(phi, n, 48, 50, 32, 50)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaReport {
    pub sigma: f64,
    pub margin: f64,
    pub pass: bool,
}

/// `σ = max |arg z₁(ξ)|` over the samples.
pub fn sector_sigma(p: &SymbolParams, xis: &[Vec<f64>]) -> SigmaReport {
    let sigma = xis
        .iter()
        .map(|xi| z_parts(p, Complex64::new(1.0, 0.0), xi).0.arg().abs())
        .fold(0.0, f64::max);
    SigmaReport {
        sigma,
        margin: FRAC_PI_2 - sigma,
        pass: sigma < FRAC_PI_2,
    }
}

/// Extremes of `|m| / (|λ|(1 + |ξ|²) + |ξ|⁴)` over one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioScan {
    pub c_min: f64,
    pub lambda_at: Complex64,
    pub xi_at: Vec<f64>,
    pub c_hi: f64,
    pub min_abs_m: f64,
}

pub fn ratio_scan(p: &SymbolParams, grid: &SectorGrid) -> RatioScan {
    let mut out = RatioScan {
        c_min: f64::INFINITY,
        lambda_at: Complex64::new(0.0, 0.0),
        xi_at: vec![0.0; p.n],
        c_hi: 0.0,
        min_abs_m: f64::INFINITY,
    };
    for &lambda in &grid.lambdas {
        for xi in &grid.xis {
            let xx: f64 = xi.iter().map(|v| v * v).sum();
            let m = symbol_m(p, lambda, xi).norm();
            let ratio = m / majorant(lambda, xx);
            if ratio < out.c_min || ratio.is_nan() {
                out.c_min = ratio;
                out.lambda_at = lambda;
                out.xi_at.clone_from(xi);
            }
            out.c_hi = out.c_hi.max(ratio);
            out.min_abs_m = out.min_abs_m.min(m);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport {
    pub scan: RatioScan,
    pub c_min_refined: f64,
    /// Relative change of `c_min` when every axis is doubled.
    pub refinement_change: f64,
    pub pass: bool,
}

pub const REFINEMENT_TOLERANCE: f64 = 0.1;

/// Scans the standard grid at angle `phi` and its doubling.
pub fn lower_bound_scan(p: &SymbolParams, phi: f64) -> LowerBoundReport {
    let scan = ratio_scan(p, &SectorGrid::standard(phi, p.n));
    let refined = ratio_scan(p, &SectorGrid::doubled(phi, p.n));
    let change = (refined.c_min - scan.c_min).abs() / scan.c_min.abs().max(f64::MIN_POSITIVE);
    let pass = scan.c_min > 0.0 && refined.c_min > 0.0 && change < REFINEMENT_TOLERANCE;
    LowerBoundReport {
        scan,
        c_min_refined: refined.c_min,
        refinement_change: change,
        pass,
    }
}

/// Largest `φ ∈ (π/2, π)` found by bisection for which the standard-grid
/// `c_min` stays at or above `c_floor`; `None` if even `φ → π/2` fails.
pub fn largest_sector_angle(p: &SymbolParams, c_floor: f64, iterations: usize) -> Option<f64> {
    let ok = |phi: f64| ratio_scan(p, &SectorGrid::standard(phi, p.n)).c_min >= c_floor;
    let (mut lo, mut hi) = (FRAC_PI_2, PI);
    if !ok(lo + 1e-9) {
        return None;
    }
    if ok(hi - 1e-9) {
        return Some(hi - 1e-9);
    }
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Multi-indices with `|α| ≤ 2`.
pub fn multi_indices(n: usize) -> Vec<[usize; 2]> {
    if n == 1 {
        vec![[0, 0], [1, 0], [2, 0]]
    } else {
        vec![[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    }
}

/// Centered-difference estimate of `∂_ξ^α Ŝ` with step `h`.
pub fn s_hat_derivative(
    p: &SymbolParams,
    lambda: Complex64,
    xi: &[f64],
    alpha: [usize; 2],
    h: f64,
) -> Complex64 {
    let at = |d0: f64, d1: f64| {
        let mut x = xi.to_vec();
        x[0] += d0;
        if x.len() > 1 {
            x[1] += d1;
        }
        eval_s_hat(p, lambda, &x)
    };
    match alpha {
        [0, 0] => at(0.0, 0.0),
        [1, 0] => (at(h, 0.0) - at(-h, 0.0)) / (2.0 * h),
        [0, 1] => (at(0.0, h) - at(0.0, -h)) / (2.0 * h),
        [2, 0] => (at(h, 0.0) - at(0.0, 0.0) * 2.0 + at(-h, 0.0)) / (h * h),
        [0, 2] => (at(0.0, h) - at(0.0, 0.0) * 2.0 + at(0.0, -h)) / (h * h),
        [1, 1] => (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h),
        _ => panic!("multi-index {alpha:?} outside |alpha| <= 2"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MikhlinEntry {
    pub alpha: [usize; 2],
    pub lambda: Complex64,
    /// `sup_ξ |ξ|^{|α|} |∂_ξ^α Ŝ|`.
    pub sup: f64,
    pub xi_at: Vec<f64>,
    pub sup_half_step: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MikhlinReport {
    pub entries: Vec<MikhlinEntry>,
    pub pass: bool,
}

pub const MIKHLIN_STEP: f64 = 1e-4;
pub const MIKHLIN_STABILITY: f64 = 0.05;
/// Entries below this are rounding noise and exempt from the halving test.
pub const MIKHLIN_FLOOR: f64 = 1e-10;

pub fn mikhlin_scan(p: &SymbolParams, grid: &SectorGrid) -> Result<MikhlinReport, SymbolError> {
    if p.n > 2 {
        return Err(SymbolError::Dimension(p.n));
    }
    let mut entries = Vec::new();
    for alpha in multi_indices(p.n) {
        let order = (alpha[0] + alpha[1]) as i32;
        for &lambda in &grid.lambdas {
            let mut entry = MikhlinEntry {
                alpha,
                lambda,
                sup: 0.0,
                xi_at: vec![0.0; p.n],
                sup_half_step: 0.0,
                stable: true,
            };
            for xi in &grid.xis {
                let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                let h = MIKHLIN_STEP * (1.0 + r);
                let weight = r.powi(order);
                let full = weight * s_hat_derivative(p, lambda, xi, alpha, h).norm();
                let half = weight * s_hat_derivative(p, lambda, xi, alpha, 0.5 * h).norm();
                if full > entry.sup || full.is_nan() {
                    entry.sup = full;
                    entry.xi_at.clone_from(xi);
                }
                entry.sup_half_step = entry.sup_half_step.max(half);
            }
            let scale = entry.sup.max(entry.sup_half_step);
            entry.stable = entry.sup.is_finite()
                && (scale < MIKHLIN_FLOOR
                    || (entry.sup - entry.sup_half_step).abs() < MIKHLIN_STABILITY * scale);
            entries.push(entry);
        }
    }
    let pass = entries.iter().all(|e| e.stable);
    Ok(MikhlinReport { entries, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn presets_are_admissible() {
        let presets = admissible_presets();
        assert_eq!(presets.len(), 3);
        assert!(presets.iter().all(|(_, p)| p.epsilon() > 0.0));
    }

    fn sample_params() -> SymbolParams {
        SymbolParams::new(
            1.0,
            vec![0.3, 0.0],
            vec![0.0, 0.2],
            vec![1.0, 0.0, 0.0, 1.0],
        )
        .unwrap()
    }

    /// `det [[λ(1 − iA), q], [−(βλ + |ξ|²), 1 − iC]]`, assembled entrywise.
    fn det_oracle(p: &SymbolParams, lambda: Complex64, xi: &[f64]) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let dot = |u: &[f64]| u.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
        let bxi: Vec<f64> = (0..p.n)
            .map(|r| (0..p.n).map(|c| p.b[r * p.n + c] * xi[c]).sum())
            .collect();
        let q = dot(&bxi);
        let xx = dot(xi);
        let m11 = lambda * (1.0 - i * dot(&p.a));
        let m12 = Complex64::new(q, 0.0);
        let m21 = -(lambda * p.beta + xx);
        let m22 = 1.0 - i * dot(&p.c);
        m11 * m22 - m12 * m21
    }

    #[test]
    fn symbol_examples() {
        let id = SymbolParams::identity(2);
        let lambda = Complex64::new(0.7, -0.4);
        let xi = [0.5, -1.5];
        let xx = 0.25 + 2.25;
        let expect = lambda * (1.0 + xx) + xx * xx;
        assert!((symbol_m(&id, lambda, &xi) - expect).norm() < 1e-14);
        let p = sample_params();
        assert_eq!(symbol_m(&p, lambda, &[0.0, 0.0]), lambda);
        let l = Complex64::new(1.0, 1.0);
        let m = symbol_m(&p, l, &[1.0, 1.0]);
        assert!((m - det_oracle(&p, l, &[1.0, 1.0])).norm() < 1e-14 * m.norm());
    }

    #[test]
    fn z_part_examples() {
        let id = SymbolParams::identity(2);
        let (z1, _) = z_parts(&id, Complex64::new(2.0, 1.0), &[0.3, 0.4]);
        assert_eq!(z1.im, 0.0);
        assert!((z1.re - 1.25).abs() < 1e-15);
        let (_, z2) = z_parts(&sample_params(), Complex64::new(3.0, 0.0), &[0.3, 0.4]);
        assert_eq!(z2.arg(), 0.0);
    }

    fn random_params(rng: &mut ChaCha8Rng) -> SymbolParams {
        loop {
            let n = rng.gen_range(1..=3);
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = vec![0.0; n * n];
            for i in 0..n {
                b[i * n + i] = rng.gen_range(0.5..2.0);
            }
            if let Ok(p) = SymbolParams::new(rng.gen_range(0.5..2.0), a, c, b) {
                return p;
            }
        }
    }

    #[test]
    fn determinant_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let p = random_params(&mut rng);
            let lambda = Complex64::from_polar(
                10f64.powf(rng.gen_range(-3.0..3.0)),
                rng.gen_range(-0.55..0.55) * PI,
            );
            let xi: Vec<f64> = (0..p.n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let m = symbol_m(&p, lambda, &xi);
            let (z1, z2) = z_parts(&p, lambda, &xi);
            let scale = lambda.norm() * (z1.norm() + z2.norm());
            assert!((lambda * (z1 + z2) - m).norm() <= 1e-12 * scale.max(m.norm()));
            assert!((det_oracle(&p, lambda, &xi) - m).norm() <= 1e-12 * scale.max(m.norm()));
        }
    }

    #[test]
    fn angle_constant_examples() {
        assert!((angle_constant(0.3, 0.3) - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(angle_constant(PI, 0.0).abs() < 1e-8);
        assert!((angle_constant(FRAC_PI_2, 0.0) - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn angle_sum_lemma() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 10_000 {
            let z1 = Complex64::from_polar(rng.gen_range(0.0..10.0), rng.gen_range(-PI..PI));
            let z2 = Complex64::from_polar(rng.gen_range(0.0..10.0), rng.gen_range(-PI..PI));
            let mut gap = (z1.arg() - z2.arg()).abs();
            if gap > PI {
                gap = 2.0 * PI - gap;
            }
            if gap >= PI {
                continue;
            }
            checked += 1;
            let bound = angle_constant(z1.arg(), z2.arg()) * (z1.norm() + z2.norm());
            assert!((z1 + z2).norm() >= bound * (1.0 - 1e-12) - 1e-12);
        }
    }

    #[test]
    fn sigma_reports() {
        let id = SymbolParams::identity(2);
        let grid = SectorGrid::standard(DEFAULT_PHI, 2);
        assert_eq!(sector_sigma(&id, &grid.xis).sigma, 0.0);
        let s = sector_sigma(&sample_params(), &grid.xis);
        assert!(s.pass && s.margin > 0.0);
        // Outside (H): 1 − (a|ξ)(c|ξ) turns negative for large ξ.
        let bad = SymbolParams {
            beta: 0.01,
            a: vec![5.0, 0.0],
            c: vec![5.0, 0.0],
            b: vec![0.01, 0.0, 0.0, 0.01],
            n: 2,
        };
        assert!(!sector_sigma(&bad, &grid.xis).pass);
    }

    #[test]
    fn identity_ratio_is_one_on_the_real_axis() {
        let id = SymbolParams::identity(2);
        let grid = SectorGrid {
            phi: DEFAULT_PHI,
            lambdas: log_space(25)
                .into_iter()
                .map(|r| Complex64::new(r, 0.0))
                .collect(),
            xis: SectorGrid::standard(DEFAULT_PHI, 2).xis,
        };
        let scan = ratio_scan(&id, &grid);
        assert_eq!(scan.c_min, 1.0);
        assert_eq!(scan.c_hi, 1.0);
    }

    #[test]
    fn lower_bound_on_the_sector() {
        let id = SymbolParams::identity(2);
        let r = lower_bound_scan(&id, DEFAULT_PHI);
        assert!(r.pass && r.scan.c_min > 0.0 && r.scan.c_min <= 1.0);
        assert!(r.scan.min_abs_m > 0.0 && r.scan.c_hi.is_finite());
        let p = sample_params();
        let r = lower_bound_scan(&p, DEFAULT_PHI);
        assert!(r.pass);
        let grid = SectorGrid::standard(DEFAULT_PHI, 2);
        for &l in grid.lambdas.iter().step_by(7) {
            for xi in grid.xis.iter().step_by(5) {
                assert!(eval_s_hat(&p, l, xi).norm() <= (1.0 + 1e-12) / r.scan.c_min);
            }
        }
    }

    #[test]
    fn c_min_decreases_with_drift() {
        let mut last = f64::INFINITY;
        for s in [0.0, 0.2, 0.4, 0.6] {
            let p = SymbolParams::new(1.0, vec![s, 0.0], vec![s, 0.0], vec![1.0, 0.0, 0.0, 1.0])
                .unwrap();
            let c = ratio_scan(&p, &SectorGrid::standard(DEFAULT_PHI, 2)).c_min;
            assert!(c > 0.0 && c <= last + 1e-12, "{s}: {c} vs {last}");
            last = c;
        }
    }

    #[test]
    fn s_hat_examples() {
        let id = SymbolParams::identity(2);
        assert_eq!(
            eval_s_hat(&id, Complex64::new(0.3, 2.0), &[1.5, -0.5]),
            Complex64::new(1.0, 0.0)
        );
        let l = Complex64::new(-0.1, 0.4);
        assert_eq!(
            eval_s_hat(&sample_params(), l, &[0.0, 0.0]),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn mikhlin_identity_is_trivial() {
        let id = SymbolParams::identity(2);
        let grid = SectorGrid::new(DEFAULT_PHI, 2, 4, 5, 4, 6);
        let r = mikhlin_scan(&id, &grid).unwrap();
        assert!(r.pass);
        for e in &r.entries {
            if e.alpha == [0, 0] {
                assert_eq!(e.sup, 1.0);
            } else {
                assert_eq!(e.sup, 0.0);
            }
        }
        assert!(mikhlin_scan(&SymbolParams::identity(3), &grid).is_err());
    }

    #[test]
    fn mikhlin_bounded_for_admissible_params() {
        let p = sample_params();
        let grid = SectorGrid::new(DEFAULT_PHI, 2, 8, 9, 8, 13);
        let c_min = lower_bound_scan(&p, DEFAULT_PHI).scan.c_min;
        let r = mikhlin_scan(&p, &grid).unwrap();
        assert!(r.pass);
        assert!(r.entries.iter().all(|e| e.sup <= 100.0 / c_min));
    }

    #[test]
    fn high_frequency_tail_levels_off() {
        let p = sample_params();
        let l = Complex64::new(1.0, 0.5);
        let tail: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&r| {
                let xi = [r * 0.6, r * 0.8];
                let h = MIKHLIN_STEP * (1.0 + r);
                r * s_hat_derivative(&p, l, &xi, [1, 0], h).norm()
            })
            .collect();
        assert!(tail.iter().all(|v| v.is_finite()));
        assert!(tail[2] <= tail[1] && tail[1] <= tail[0], "{tail:?}");
    }

    #[test]
    fn largest_angle_is_past_right_angle() {
        let phi = largest_sector_angle(&sample_params(), 1e-3, 12).unwrap();
        assert!(phi > FRAC_PI_2 && phi < PI);
    }

    proptest! {
        #[test]
        fn zero_only_at_origin(lr in -3.0..3.0f64, la in -0.54..0.54f64, x0 in -10.0..10.0f64, x1 in -10.0..10.0f64) {
            let p = sample_params();
            let lambda = Complex64::from_polar(10f64.powf(lr), la * PI);
            prop_assert!(symbol_m(&p, lambda, &[x0, x1]).norm() > 0.0);
        }
    }
}
