//! Polynomial free-energy densities `Φ`, the stabilized splitting used by the
//! stepper, and growth certificates.
//!
//! Growth verdicts for polynomials come from degree bookkeeping; the finite
//! scan only supplies constants and the worst-ratio witness, so enlarging the
//! scan range cannot flip a verdict.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `¼(s² − 1)²`.
    DoubleWell,
    /// `c₀ + c₁s + c₂s² + c₃s³ + c₄s⁴`.
    QuarticGeneral([f64; 5]),
    /// Ascending coefficients.
    Polynomial(Vec<f64>),
}

/// Certified constants of the growth conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificates {
    pub eta: f64,
    pub c0: f64,
    pub theta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub alpha: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("stabilization must be nonnegative and finite, got {0}")]
    Stabilization(f64),
    #[error("scan range must be at least 10, got {0}")]
    ScanRange(f64),
    #[error("dimension must be 1, 2 or 3, got {0}")]
    Dimension(usize),
    #[error("certificate invalid: {0}")]
    Certificate(&'static str),
}

/// `Φ` and its first three derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    coeffs: Vec<f64>,
    stabilization: f64,
    pub certificates: Option<Certificates>,
}

/// Interval intersected with the scan range to pick the default `S`.
pub const STABILIZATION_WINDOW: f64 = 1.5;

impl Potential {
    pub fn new(kind: PotentialKind) -> Self {
        let mut coeffs = match &kind {
            PotentialKind::DoubleWell => vec![0.25, 0.0, -0.5, 0.0, 0.25],
            PotentialKind::QuarticGeneral(c) => c.to_vec(),
            PotentialKind::Polynomial(c) => c.clone(),
        };
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        let mut p = Self {
            kind,
            coeffs,
            stabilization: 0.0,
            certificates: None,
        };
        p.stabilization = p.default_stabilization(STABILIZATION_WINDOW);
        p
    }

    pub fn double_well() -> Self {
        Self::new(PotentialKind::DoubleWell)
    }

    pub fn polynomial(coeffs: &[f64]) -> Self {
        Self::new(PotentialKind::Polynomial(coeffs.to_vec()))
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// Ascending coefficients with trailing zeros removed.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn stabilization(&self) -> f64 {
        self.stabilization
    }

    pub fn with_stabilization(mut self, s: f64) -> Result<Self, PotentialError> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(PotentialError::Stabilization(s));
        }
        self.stabilization = s;
        Ok(self)
    }

    /// Max of `Φ″` on `[−w, w]`, sampled at 3001 points.
    pub fn default_stabilization(&self, window: f64) -> f64 {
        let n = 3000;
        (0..=n)
            .map(|k| self.eval(-window + 2.0 * window * k as f64 / n as f64).d2)
            .fold(0.0, f64::max)
    }

    /// Horner evaluation of `Φ, Φ′, Φ″, Φ‴`.
    pub fn eval(&self, s: f64) -> Derivatives {
        let (mut p0, mut p1, mut p2, mut p3) = (0.0, 0.0, 0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            p3 = p3 * s + p2;
            p2 = p2 * s + p1;
            p1 = p1 * s + p0;
            p0 = p0 * s + c;
        }
        Derivatives {
            value: p0,
            d1: p1,
            d2: 2.0 * p2,
            d3: 6.0 * p3,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.eval(s).value
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.eval(s).d1
    }

    /// `(Φ′(s_old), S)`: the stepper uses `Φ′(ψⁿ) + S(ψⁿ⁺¹ − ψⁿ)`.
    pub fn split_linearized(&self, s_old: f64) -> (f64, f64) {
        (self.derivative(s_old), self.stabilization)
    }

    /// `s ↦ Φ(s + shift)`, keeping the stabilization.
    pub fn shifted(&self, shift: f64) -> Potential {
        let d = self.degree();
        let mut out = vec![0.0; d + 1];
        // Taylor coefficients: Φ(s + c) = Σ_k Φ⁽ᵏ⁾(c)/k! s^k.
        let mut binom = vec![0.0; d + 1];
        for (j, &cj) in self.coeffs.iter().enumerate() {
            binom.iter_mut().for_each(|b| *b = 0.0);
            binom[0] = 1.0;
            for i in 1..=j {
                for k in (1..=i).rev() {
                    binom[k] += binom[k - 1];
                }
            }
            for (k, slot) in out.iter_mut().enumerate().take(j + 1) {
                *slot += cj * binom[k] * shift.powi((j - k) as i32);
            }
        }
        Potential {
            kind: PotentialKind::Polynomial(out.clone()),
            coeffs: out,
            stabilization: self.stabilization,
            certificates: None,
        }
    }

    fn derivative_coeffs(coeffs: &[f64]) -> Vec<f64> {
        coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect()
    }

    /// Checks the stored certificates against the run's dimension and the
    /// grid's first Neumann eigenvalue.
    pub fn check_certificates(&self, dimension: usize, lambda1: f64) -> Result<(), PotentialError> {
        let Some(c) = self.certificates else {
            return Ok(());
        };
        if !(c.eta > 0.0 && c.eta < lambda1) {
            return Err(PotentialError::Certificate("eta must lie in (0, lambda1)"));
        }
        if !(c.theta > 0.0 && c.theta < 1.0) {
            return Err(PotentialError::Certificate("theta must lie in (0, 1)"));
        }
        if dimension == 3 && !(c.alpha < 4.0) {
            return Err(PotentialError::Certificate(
                "alpha must be below 4 in three dimensions",
            ));
        }
        if dimension == 3 && !(c.gamma < 3.0) {
            return Err(PotentialError::Certificate(
                "gamma must be below 3 in three dimensions",
            ));
        }
        Ok(())
    }

    /// Lower bound `Φ(s) ≥ −(η/2)s² − c₀` for which `η` can work:
    /// `(η_min, attained)`, where `attained` says whether `η = η_min` itself
    /// is admissible.
    fn eta_threshold(&self) -> (f64, bool) {
        let d = self.degree();
        let lead = self.coeffs[d];
        match d {
            0 | 1 => (0.0, false),
            2 => {
                let q2 = lead;
                let need = (-2.0 * q2).max(0.0);
                // η/2 + q2 = 0 leaves a linear term, unbounded unless it vanishes.
                let attained = need > 0.0 && self.coeffs[1] == 0.0;
                (need, attained)
            }
            _ if d % 2 == 0 && lead > 0.0 => (0.0, false),
            _ => (f64::INFINITY, false),
        }
    }

    /// Certifies the four growth conditions on `[−R, R]` for spatial
    /// dimension `n`. `eta` is the user's choice (picked automatically when
    /// absent); `lambda1` enables the admissibility check `η < λ₁`.
    pub fn validate_growth(
        &self,
        scan_range: f64,
        n: usize,
        eta: Option<f64>,
        lambda1: Option<f64>,
    ) -> Result<GrowthReport, PotentialError> {
        if !(scan_range >= 10.0) {
            return Err(PotentialError::ScanRange(scan_range));
        }
        if !(1..=3).contains(&n) {
            return Err(PotentialError::Dimension(n));
        }
        let d = self.degree();
        let lead = self.coeffs[d];
        let points = 4001;
        let grid: Vec<f64> = (0..points)
            .map(|k| -scan_range + 2.0 * scan_range * k as f64 / (points - 1) as f64)
            .collect();
        let samples: Vec<(f64, Derivatives)> = grid.iter().map(|&s| (s, self.eval(s))).collect();
        // c₁Φ + c₂s² + c₃ stays positive at infinity.
        let base_positive = d <= 2 || (d % 2 == 0 && lead > 0.0);

        // Lower bound on Φ.
        let (eta_min, attained) = self.eta_threshold();
        let eta_used = eta.unwrap_or_else(|| {
            if attained {
                eta_min
            } else if let Some(l1) = lambda1 {
                if eta_min.is_finite() && eta_min < l1 {
                    0.5 * (eta_min + l1)
                } else {
                    eta_min + 1.0
                }
            } else {
                eta_min + 1.0
            }
        });
        let asymptotic_ok = eta_used > eta_min || (attained && eta_used == eta_min);
        let mut need_c0 = 0.0_f64;
        let mut witness = 0.0;
        for &(s, v) in &samples {
            let deficit = -v.value - 0.5 * eta_used * s * s;
            if deficit > need_c0 {
                need_c0 = deficit;
                witness = s;
            }
        }
        let c0 = need_c0 * (1.0 + 1e-12) + 1e-12;
        let admissible = eta_used > 0.0 && lambda1.map_or(true, |l| eta_used < l);
        let lower = LowerBoundReport {
            eta: eta_used,
            eta_min,
            eta_min_attained: attained,
            c0,
            witness,
            admissible,
            pass: asymptotic_ok && admissible,
        };

        // Derivative bound |Φ′| ≤ (c₁Φ + c₂s² + c₃)^θ.
        let (theta, c1, c2) = if d >= 3 {
            let th = (d as f64 - 1.0) / d as f64;
            let c1 = if lead > 0.0 {
                2.0 * (d as f64 * lead).powf(d as f64 / (d as f64 - 1.0)) / lead
            } else {
                1.0
            };
            (th, c1, 1.0)
        } else {
            let q2 = if d == 2 { self.coeffs[2] } else { 0.0 };
            (0.5, 1.0, 1.0 + 8.0 * q2 * q2 + q2.abs())
        };
        let base = |s: f64, v: &Derivatives| c1 * v.value + c2 * s * s;
        let power = 1.0 / theta;
        let c3_need = samples
            .iter()
            .map(|(s, v)| v.d1.abs().powf(power) - base(*s, v))
            .fold(0.0_f64, f64::max);
        let c3 = c3_need * (1.0 + 1e-9) + 1.0;
        let (mut worst, mut worst_at) = (0.0_f64, 0.0);
        for (s, v) in &samples {
            let ratio = v.d1.abs() / (base(*s, v) + c3).max(f64::MIN_POSITIVE).powf(theta);
            if ratio > worst {
                worst = ratio;
                worst_at = *s;
            }
        }
        let derivative = DerivativeBoundReport {
            theta,
            c1,
            c2,
            c3,
            worst_ratio: worst,
            witness: worst_at,
            pass: base_positive && theta > 0.0 && theta < 1.0 && worst <= 1.0,
        };

        let d1 = Self::derivative_coeffs(&self.coeffs);
        let d2 = Self::derivative_coeffs(&d1);
        let d3 = Self::derivative_coeffs(&d2);
        let alpha = d.saturating_sub(2) as f64;
        let gamma = (d.saturating_sub(3) as f64).max(1.0);
        let second = power_bound(&d2, alpha, &samples, |v| v.d2, n == 3 && alpha >= 4.0);
        let third = power_bound(&d3, gamma, &samples, |v| v.d3, n == 3 && gamma >= 3.0);

        Ok(GrowthReport {
            scan_range,
            dimension: n,
            degree: d,
            lower,
            derivative,
            second,
            third,
            analyticity_assumed: true,
        })
    }

    /// Certificates record built from a passing report.
    pub fn certify(&mut self, report: &GrowthReport) {
        self.certificates = Some(Certificates {
            eta: report.lower.eta,
            c0: report.lower.c0,
            theta: report.derivative.theta,
            c1: report.derivative.c1,
            c2: report.derivative.c2,
            c3: report.derivative.c3,
            alpha: report.second.exponent,
            gamma: report.third.exponent,
        });
    }
}

fn power_bound(
    coeffs: &[f64],
    exponent: f64,
    samples: &[(f64, Derivatives)],
    pick: impl Fn(&Derivatives) -> f64,
    exponent_violation: bool,
) -> PowerBoundReport {
    // |p(s)| ≤ Σ|p_k| (1 + |s|^m) for every s when deg p ≤ m.
    let constant = coeffs
        .iter()
        .map(|c| c.abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let (mut worst, mut witness) = (0.0_f64, 0.0);
    for (s, v) in samples {
        let ratio = pick(v).abs() / (constant * (1.0 + s.abs().powf(exponent)));
        if ratio > worst {
            worst = ratio;
            witness = *s;
        }
    }
    PowerBoundReport {
        exponent,
        constant,
        worst_ratio: worst,
        witness,
        pass: !exponent_violation && worst <= 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundReport {
    pub eta: f64,
    /// Infimum of workable `η` (`∞` when Φ is unbounded below faster than quadratically).
    pub eta_min: f64,
    pub eta_min_attained: bool,
    pub c0: f64,
    pub witness: f64,
    /// `0 < η < λ₁` (only the lower end when `λ₁` is unknown).
    pub admissible: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBoundReport {
    pub theta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub worst_ratio: f64,
    pub witness: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBoundReport {
    pub exponent: f64,
    pub constant: f64,
    pub worst_ratio: f64,
    pub witness: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub scan_range: f64,
    pub dimension: usize,
    pub degree: usize,
    /// `Φ(s) ≥ −(η/2)s² − c₀`.
    pub lower: LowerBoundReport,
    /// `|Φ′(s)| ≤ (c₁Φ(s) + c₂s² + c₃)^θ`.
    pub derivative: DerivativeBoundReport,
    /// `|Φ″(s)| ≤ C(1 + |s|^α)`.
    pub second: PowerBoundReport,
    /// `|Φ‴(s)| ≤ C(1 + |s|^γ)`.
    pub third: PowerBoundReport,
    /// Real analyticity is taken for granted (polynomials), not checked.
    pub analyticity_assumed: bool,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.lower.pass && self.derivative.pass && self.second.pass && self.third.pass
    }
}
