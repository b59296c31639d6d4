//! Registries of named built-ins and their translation to solver objects.

use std::f64::consts::PI;
use std::sync::Arc;

use chg_core::coefficients::StreamFamily;
use chg_core::grid::BoundaryFace;
use chg_core::potential::PotentialKind;
use chg_core::{CellField, GridSpec, Potential, ScalarCoeff, SourceData, VectorCoeff};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Builtin;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Registry {
    Vector,
    Scalar,
    Initial,
    Potential,
    Source,
    BallField,
    BallScalar,
}

impl Registry {
    pub fn label(self) -> &'static str {
        match self {
            Registry::Vector => "vector fields",
            Registry::Scalar => "scalar fields",
            Registry::Initial => "initial conditions",
            Registry::Potential => "potentials",
            Registry::Source => "data sources",
            Registry::BallField => "ball vector fields",
            Registry::BallScalar => "ball scalar fields",
        }
    }

    /// `(name, min args, max args)`.
    pub fn entries(self) -> &'static [(&'static str, usize, usize)] {
        match self {
            Registry::Vector => &[
                ("zero", 0, 0),
                ("constant", 1, 2),
                ("rotational", 1, 3),
                ("shear", 1, 1),
                ("cellular", 1, 1),
            ],
            Registry::Scalar => &[("constant", 1, 1), ("quadratic", 2, 2), ("affine", 2, 3)],
            Registry::Initial => &[
                ("constant", 1, 1),
                ("cosine", 1, 2),
                ("noise", 1, 1),
                ("linear", 1, 1),
            ],
            Registry::Potential => &[
                ("double_well", 0, 0),
                ("quartic", 5, 5),
                ("polynomial", 1, 16),
            ],
            Registry::Source => &[("zero", 0, 0), ("constant", 1, 1), ("decay", 2, 2)],
            Registry::BallField => &[("constant", 2, 3), ("rotation", 0, 1), ("shear", 0, 1)],
            Registry::BallScalar => &[("constant", 1, 1), ("radial", 2, 2)],
        }
    }
}

/// Checks the name and arity of `b` against `registry`.
pub fn check(registry: Registry, b: &Builtin) -> Result<(), String> {
    let entries = registry.entries();
    let Some(&(_, lo, hi)) = entries.iter().find(|e| e.0 == b.name) else {
        let names: Vec<&str> = entries.iter().map(|e| e.0).collect();
        return Err(format!(
            "unknown built-in `{}`; registry of {}: {}",
            b.name,
            registry.label(),
            names.join(", ")
        ));
    };
    if b.args.len() < lo || b.args.len() > hi {
        let range = if lo == hi {
            lo.to_string()
        } else {
            format!("{lo} to {hi}")
        };
        return Err(format!(
            "built-in `{}` takes {range} argument(s), got {}",
            b.name,
            b.args.len()
        ));
    }
    Ok(())
}

fn extents2(grid: &GridSpec) -> [f64; 2] {
    let e = grid.extents();
    [e[0], e.get(1).copied().unwrap_or(1.0)]
}

/// Vector coefficient with amplitude multiplied by `scale`.
pub fn vector_coeff(b: &Builtin, grid: &GridSpec, scale: f64) -> VectorCoeff {
    let [lx, ly] = extents2(grid);
    let family = match b.name.as_str() {
        "zero" => StreamFamily::Constant([0.0, 0.0]),
        "constant" => StreamFamily::Constant([b.arg(0, 0.0), b.arg(1, 0.0)]),
        "rotational" => StreamFamily::Rotational {
            omega: b.arg(0, 0.0),
            center: [b.arg(1, 0.5 * lx), b.arg(2, 0.5 * ly)],
        },
        "shear" => StreamFamily::Shear {
            omega: b.arg(0, 0.0),
        },
        "cellular" => StreamFamily::Cellular {
            omega: b.arg(0, 0.0),
            extents: [lx, ly],
        },
        other => unreachable!("unchecked vector built-in {other}"),
    };
    VectorCoeff::Stream(family.scaled(scale))
}

pub fn scalar_coeff(b: &Builtin) -> ScalarCoeff {
    match b.name.as_str() {
        "constant" => ScalarCoeff::Constant(b.arg(0, 1.0)),
        "quadratic" => ScalarCoeff::QuadraticMobility {
            base: b.arg(0, 1.0),
            kappa: b.arg(1, 0.0),
        },
        "affine" => {
            let (b0, gx, gy) = (b.arg(0, 1.0), b.arg(1, 0.0), b.arg(2, 0.0));
            ScalarCoeff::Field(Arc::new(move |p| b0 + gx * p[0] + gy * p[1]))
        }
        other => unreachable!("unchecked scalar built-in {other}"),
    }
}

pub fn potential(b: &Builtin) -> Potential {
    match b.name.as_str() {
        "double_well" => Potential::double_well(),
        "quartic" => {
            let mut c = [0.0; 5];
            c.copy_from_slice(&b.args);
            Potential::new(PotentialKind::QuarticGeneral(c))
        }
        "polynomial" => Potential::polynomial(&b.args),
        other => unreachable!("unchecked potential built-in {other}"),
    }
}

/// Outward normal derivative of an initial condition on a boundary face.
pub type NormalDerivative = Box<dyn Fn(&BoundaryFace) -> f64 + Send + Sync>;

/// Samples the initial field. Noise is drawn from ChaCha8 seeded with
/// `seed`, one uniform draw per cell in storage order. The normal derivative
/// is returned when the kind has a closed form.
pub fn initial_field(
    b: &Builtin,
    grid: &GridSpec,
    seed: u64,
) -> (CellField, Option<NormalDerivative>) {
    let [lx, ly] = extents2(grid);
    let dim = grid.dimension();
    let amp = b.arg(0, 0.0);
    match b.name.as_str() {
        "constant" => (grid.constant(amp), Some(Box::new(|_: &BoundaryFace| 0.0))),
        "cosine" => {
            let k = b.arg(1, 1.0);
            let (kx, ky) = (k * PI / lx, k * PI / ly);
            let field = grid.sample(|p| {
                let y = if dim == 2 { (ky * p[1]).cos() } else { 1.0 };
                amp * (kx * p[0]).cos() * y
            });
            let dn = move |bf: &BoundaryFace| {
                let [x, y] = bf.center;
                let (fx, fy) = ((kx * x).cos(), if dim == 2 { (ky * y).cos() } else { 1.0 });
                let d = if bf.axis == 0 {
                    -amp * kx * (kx * x).sin() * fy
                } else {
                    -amp * ky * (ky * y).sin() * fx
                };
                bf.side.outward_sign() * d
            };
            (field, Some(Box::new(dn)))
        }
        "linear" => {
            let field = grid.sample(|p| amp * (p[0] - 0.5 * lx));
            let dn = move |bf: &BoundaryFace| {
                if bf.axis == 0 {
                    bf.side.outward_sign() * amp
                } else {
                    0.0
                }
            };
            (field, Some(Box::new(dn)))
        }
        "noise" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..grid.cell_count())
                .map(|_| amp * rng.gen_range(-1.0..1.0))
                .collect();
            (CellField::new(values), None)
        }
        other => unreachable!("unchecked initial built-in {other}"),
    }
}

fn cell_source(b: &Builtin) -> Option<chg_core::solver::CellSource> {
    match b.name.as_str() {
        "zero" => None,
        "constant" => {
            let v = b.arg(0, 0.0);
            Some(Arc::new(move |_, _| v))
        }
        "decay" => {
            let (v, rate) = (b.arg(0, 0.0), b.arg(1, 0.0));
            Some(Arc::new(move |t, _| v * (-rate * t).exp()))
        }
        other => unreachable!("unchecked source built-in {other}"),
    }
}

fn boundary_source(b: &Builtin) -> Option<chg_core::solver::BoundarySource> {
    match b.name.as_str() {
        "zero" => None,
        "constant" => {
            let v = b.arg(0, 0.0);
            Some(Arc::new(move |_, _| v))
        }
        "decay" => {
            let (v, rate) = (b.arg(0, 0.0), b.arg(1, 0.0));
            Some(Arc::new(move |t, _| v * (-rate * t).exp()))
        }
        other => unreachable!("unchecked source built-in {other}"),
    }
}

pub fn source_data(d: &crate::config::DataConfig) -> SourceData {
    SourceData {
        f: cell_source(&d.f),
        g: cell_source(&d.g),
        h1: boundary_source(&d.h1),
        h2: boundary_source(&d.h2),
    }
}

/// Divergence-free field on a ball in `ℝ²` or `ℝ³`, as a function of a
/// point given by its first `dim` coordinates (the rest are zero).
pub fn ball_field(b: &Builtin) -> impl Fn(&[f64; 3]) -> [f64; 3] + Clone {
    let name = b.name.clone();
    let args = b.args.clone();
    move |x: &[f64; 3]| {
        let arg = |i: usize, d: f64| args.get(i).copied().unwrap_or(d);
        match name.as_str() {
            "constant" => [arg(0, 0.0), arg(1, 0.0), arg(2, 0.0)],
            "rotation" => {
                let w = arg(0, 1.0);
                [-w * x[1], w * x[0], 0.0]
            }
            "shear" => [arg(0, 1.0) * x[1], 0.0, 0.0],
            other => unreachable!("unchecked ball field {other}"),
        }
    }
}

pub fn ball_scalar(b: &Builtin) -> impl Fn(&[f64; 3]) -> f64 + Clone {
    let b0 = b.arg(0, 1.0);
    let slope = if b.name == "radial" {
        b.arg(1, 0.0)
    } else {
        0.0
    };
    move |x: &[f64; 3]| b0 * (1.0 + slope * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chg_core::grid::BcKind;

    #[test]
    fn arity_errors() {
        assert!(check(Registry::Vector, &Builtin::new("cellular", &[]))
            .unwrap_err()
            .contains("takes 1"));
        assert!(check(Registry::Scalar, &Builtin::new("affine", &[1.0, 2.0, 3.0])).is_ok());
        assert!(check(Registry::Potential, &Builtin::new("double_well", &[1.0])).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let grid = GridSpec::new(1, &[1.0], &[16], BcKind::NeumannHomogeneous).unwrap();
        let b = Builtin::new("noise", &[0.1]);
        let (u, dn) = initial_field(&b, &grid, 7);
        assert!(dn.is_none());
        assert_eq!(u, initial_field(&b, &grid, 7).0);
        assert_ne!(u, initial_field(&b, &grid, 8).0);
        assert!(u.max_abs() <= 0.1);
    }

    #[test]
    fn cosine_normal_derivative_vanishes() {
        let grid = GridSpec::new(2, &[2.0, 1.0], &[8, 8], BcKind::NeumannHomogeneous).unwrap();
        let (_, dn) = initial_field(&Builtin::new("cosine", &[0.3, 2.0]), &grid, 0);
        let dn = dn.unwrap();
        for bf in grid.boundary_faces() {
            assert!(dn(&bf).abs() < 1e-14);
        }
        let (_, dn) = initial_field(&Builtin::new("linear", &[0.5]), &grid, 0);
        let bf = grid.boundary_faces()[0];
        assert_eq!(dn.unwrap()(&bf).abs(), if bf.axis == 0 { 0.5 } else { 0.0 });
    }

    #[test]
    fn rotational_center_defaults_to_domain_center() {
        let grid = GridSpec::new(2, &[2.0, 1.0], &[8, 8], BcKind::NeumannHomogeneous).unwrap();
        match vector_coeff(&Builtin::new("rotational", &[1.0]), &grid, 2.0) {
            VectorCoeff::Stream(StreamFamily::Rotational { omega, center }) => {
                assert_eq!(omega, 2.0);
                assert_eq!(center, [1.0, 0.5]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
