//! Small worked examples used by the command-line front end and the test suites.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};
use crate::groups::GroupSpec;
use crate::linalg::{kron, kron_all, ComplexMatrix, C64};

#[derive(Clone, Debug)]
pub struct Example {
    pub index: u8,
    pub c: ComplexMatrix,
    pub a: ComplexMatrix,
    pub group: GroupSpec,
    pub summary: &'static str,
}

/// `[[0, 1], [-1, 0]]`.
pub fn quarter_turn() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).expect("2x2")
}

/// The skew generator with `e^{omega} = quarter_turn()`.
pub fn quarter_turn_generator() -> ComplexMatrix {
    quarter_turn().scale_real(FRAC_PI_2)
}

/// `[[a, b], [b, -a]]`.
pub fn reflection(a: f64, b: f64) -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[a, b], &[b, -a]]).expect("2x2")
}

/// `E_21 + E_31 + E_41`.
pub fn star_nilpotent() -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(4);
    for k in 1..4 {
        a[(k, 0)] = C64::new(1.0, 0.0);
    }
    a
}

pub fn example(index: u8) -> Result<Example> {
    let p1 = ComplexMatrix::real_diag(&[1.0, 0.0]);
    let ex = match index {
        1 => {
            let e21 = ComplexMatrix::unit(2, 1, 0);
            Example {
                index,
                c: e21.clone(),
                a: e21,
                group: "torus(1,-1)".parse()?,
                summary: "unit circle from a one-parameter torus",
            }
        }
        2 => {
            let a1 = ComplexMatrix::real_diag(&[1.0, -1.0]);
            let a2 = ComplexMatrix::diag(&[C64::new(1.0, 1.0), C64::new(1.0, -1.0)]);
            Example {
                index,
                c: kron(&p1, &p1),
                a: kron(&a1, &a2),
                group: "prod(u(2),u(2))".parse()?,
                summary: "product of a segment and a vertical segment: a non-convex butterfly",
            }
        }
        3 => {
            let f = ComplexMatrix::diag(&[C64::new(1.0, 0.0), C64::from_polar(1.0, TAU / 3.0)]);
            Example {
                index,
                c: kron_all([&p1, &p1, &p1]),
                a: kron_all([&f, &f, &f]),
                group: "prod(prod(u(2),u(2)),u(2))".parse()?,
                summary: "triple product of a chord: not star-shaped, origin excluded",
            }
        }
        4 => {
            let a = star_nilpotent();
            Example {
                index,
                c: a.clone(),
                a,
                group: "loc(2)".parse()?,
                summary: "block-shift matrix whose local orbit is not rotationally symmetric",
            }
        }
        5 => {
            let a = reflection(1.0, 1.0);
            Example {
                index,
                c: a.clone(),
                a,
                group: "u(2)".parse()?,
                summary: "discrete rotation symmetry without an ad-eigenvector",
            }
        }
        _ => return Err(Error::InvalidArgument(format!("no example {index}; choose 1 to 5"))),
    };
    Ok(ex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, expm_skew, I};

    #[test]
    fn examples_are_consistent() {
        for k in 1..=5 {
            let ex = example(k).unwrap();
            assert_eq!(ex.c.dim(), ex.group.ambient_dim());
            assert_eq!(ex.a.dim(), ex.group.ambient_dim());
        }
        assert!(example(0).is_err());
        assert!(example(6).is_err());
    }

    #[test]
    fn quarter_turn_negates_reflections() {
        let u0 = expm_skew(&quarter_turn_generator(), 1.0).unwrap();
        assert!(u0.distance(&quarter_turn()) < 1e-15);
        for (a, b) in [(1.0, 1.0), (0.3, -2.0)] {
            let m = reflection(a, b);
            assert!(u0.conjugate(&m).distance(&-&m) <= 1e-12);
            let miss = commutator(&quarter_turn_generator(), &m).unwrap() + m.scale(I * std::f64::consts::PI);
            assert!(miss.frobenius_norm() >= 0.5 * m.frobenius_norm());
        }
    }
}
