//! Extensions of coefficients given on a ball `|x| ≤ r_k` to all of `ℝⁿ`.
//!
//! Vector fields are extended by reflecting through the sphere and adding a
//! radial correction `R(r, ξ) ξ` that keeps the extension divergence-free;
//! scalars are extended by inversion `x ↦ r_k² x / |x|²`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// A field known on the closed ball of the given radius.
#[derive(Debug, Clone, Copy)]
pub struct BallFieldSample<F> {
    pub radius: f64,
    pub field: F,
}

impl<F> BallFieldSample<F> {
    pub fn new(radius: f64, field: F) -> Self {
        Self { radius, field }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ExtensionError {
    #[error("radial quadrature did not converge (achieved error estimate {achieved:e})")]
    Quadrature { achieved: f64 },
    #[error("extension is defined for n = 2 or 3, got {0}")]
    Dimension(usize),
    #[error("ball radius must be positive, got {0}")]
    Radius(f64),
}

pub const QUADRATURE_TOLERANCE: f64 = 1e-10;
pub const QUADRATURE_DEPTH: usize = 40;
/// Queries this close to the sphere are answered from the inside.
pub const SPHERE_SNAP: f64 = 1e-14;

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance
/// `tol`, refining at most `max_depth` levels.
pub fn adaptive_simpson(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> Result<f64, ExtensionError> {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut unresolved = 0.0;
    let value = simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth, &mut unresolved);
    if unresolved > tol || !value.is_finite() {
        Err(ExtensionError::Quadrature {
            achieved: unresolved,
        })
    } else {
        Ok(value)
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    unresolved: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let settled = delta.abs() <= 15.0 * tol
        || delta.abs() <= 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if settled {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *unresolved += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, unresolved)
        + simpson_step(
            f,
            m,
            b,
            fm,
            frm,
            fb,
            right,
            0.5 * tol,
            depth - 1,
            unresolved,
        )
}

fn dot<const N: usize>(u: &[f64; N], v: &[f64; N]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm<const N: usize>(u: &[f64; N]) -> f64 {
    dot(u, u).sqrt()
}

fn scale<const N: usize>(s: f64, u: &[f64; N]) -> [f64; N] {
    let mut out = *u;
    for v in out.iter_mut() {
        *v *= s;
    }
    out
}

/// Divergence-preserving extension of a solenoidal field on the ball.
pub fn extend_divfree<const N: usize, F>(
    sample: &BallFieldSample<F>,
    x: &[f64; N],
) -> Result<[f64; N], ExtensionError>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    if N != 2 && N != 3 {
        return Err(ExtensionError::Dimension(N));
    }
    let rk = sample.radius;
    if !(rk > 0.0) {
        return Err(ExtensionError::Radius(rk));
    }
    let r = norm(x);
    if r <= rk + SPHERE_SNAP {
        return Ok((sample.field)(x));
    }
    let xi = scale(1.0 / r, x);
    let reflected = (sample.field)(&scale(rk * rk / r, &xi));
    let n1 = (N - 1) as i32;
    let boundary = (rk / r).powi(n1) * 2.0 * dot(&(sample.field)(&scale(rk, &xi)), &xi);
    let integral = adaptive_simpson(
        |s| s.powi(n1 - 1) * dot(&(sample.field)(&scale(rk * rk / s, &xi)), &xi),
        rk,
        r,
        QUADRATURE_TOLERANCE,
        QUADRATURE_DEPTH,
    )?;
    let radial = boundary + 2.0 * f64::from(n1) / r.powi(n1) * integral;
    let normal = dot(&xi, &reflected);
    let mut out = reflected;
    for (o, e) in out.iter_mut().zip(&xi) {
        *o += (radial - 2.0 * normal) * e;
    }
    Ok(out)
}

/// Scalar extension by inversion in the sphere.
pub fn extend_reflect<const N: usize, F>(sample: &BallFieldSample<F>, x: &[f64; N]) -> f64
where
    F: Fn(&[f64; N]) -> f64,
{
    let rk = sample.radius;
    let r2 = dot(x, x);
    if r2.sqrt() <= rk + SPHERE_SNAP {
        (sample.field)(x)
    } else {
        (sample.field)(&scale(rk * rk / r2, x))
    }
}

/// Supremum over `points` of `|ext(x) − base|`.
pub fn deviation_bound<const N: usize, const M: usize>(
    ext: impl Fn(&[f64; N]) -> Result<[f64; M], ExtensionError>,
    base: [f64; M],
    points: &[[f64; N]],
) -> Result<f64, ExtensionError> {
    let mut sup = 0.0_f64;
    for p in points {
        let v = ext(p)?;
        let d: f64 = v.iter().zip(&base).map(|(a, b)| (a - b) * (a - b)).sum();
        sup = sup.max(d.sqrt());
    }
    Ok(sup)
}

/// Centered-difference divergence of an extended field on a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceProbe {
    pub max: f64,
    pub points: usize,
}

/// Max centered-difference divergence of `ext`, with stencil half-width
/// `h`, over lattice points `spacing·ℤⁿ` lying at distance more than
/// `spacing` inside the open annulus `r_in < |x| < r_out`. Keeping the point
/// set fixed while `h ≤ spacing` shrinks isolates the stencil error.
pub fn extension_divergence_max<const N: usize>(
    ext: impl Fn(&[f64; N]) -> Result<[f64; N], ExtensionError>,
    r_in: f64,
    r_out: f64,
    spacing: f64,
    h: f64,
) -> Result<DivergenceProbe, ExtensionError> {
    let m = (r_out / spacing).ceil() as i64;
    let mut probe = DivergenceProbe {
        max: 0.0,
        points: 0,
    };
    let mut index = [-m; N];
    loop {
        let mut x = [0.0; N];
        for (xi, &i) in x.iter_mut().zip(&index) {
            *xi = i as f64 * spacing;
        }
        let r = norm(&x);
        if r - spacing > r_in && r + spacing < r_out {
            let mut div = 0.0;
            for axis in 0..N {
                let (mut plus, mut minus) = (x, x);
                plus[axis] += h;
                minus[axis] -= h;
                div += (ext(&plus)?[axis] - ext(&minus)?[axis]) / (2.0 * h);
            }
            probe.max = probe.max.max(div.abs());
            probe.points += 1;
        }
        let mut axis = 0;
        loop {
            if axis == N {
                return Ok(probe);
            }
            index[axis] += 1;
            if index[axis] <= m {
                break;
            }
            index[axis] = -m;
            axis += 1;
        }
    }
}

/// Points on the sphere of radius `r`: uniform angles for `n = 2`, a
/// Fibonacci lattice for `n = 3`.
pub fn sphere_points<const N: usize>(r: f64, count: usize) -> Vec<[f64; N]> {
    use core::f64::consts::PI;
    (0..count)
        .map(|k| {
            let mut p = [0.0; N];
            if N == 2 {
                let t = 2.0 * PI * k as f64 / count as f64;
                p[0] = r * t.cos();
                p[1] = r * t.sin();
            } else {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let t = PI * (3.0 - 5.0_f64.sqrt()) * k as f64;
                p[0] = r * rho * t.cos();
                p[1] = r * rho * t.sin();
                p[2] = r * z;
            }
            p
        })
        .collect()
}
