//! The homotopy between a rotation circle of the local range and its reverse.
//!
//! With `Omega = i diag(mu)` a rational local torus witness, `e^{t Omega} A e^{-t Omega}
//! = e^{it} A`, so `t -> tr(C^† e^{t Omega} A e^{-t Omega})` winds `m` times around
//! the origin over `[0, 2 m pi]`. Conjugating the flow by `R(s)^{(x)n}`,
//! `R(s)` the real rotation by `s`, turns it into the reverse flow at `s = pi/2`.
//! Loops of winding `m` and `-m` are only homotopic through the origin.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::rational::{dot, q, to_f64, Q};
use super::{tloc_feasibility, z_diagonal};
use crate::config::TAU_EXACT;
use crate::error::{Error, Result};
use crate::geometry::winding_number;
use crate::linalg::{frobenius_inner, kron_all, ComplexMatrix, C64};

/// `lambda_j` with `mu = sum_j lambda_j z_j`, or `None` if `mu` is not of that form.
pub fn local_torus_coordinates(mu: &[Q], n: usize) -> Option<Vec<Q>> {
    let dim = 1usize << n;
    if mu.len() != dim {
        return None;
    }
    let zs: Vec<Vec<Q>> = (0..n).map(|j| z_diagonal(j, n).into_iter().map(q).collect()).collect();
    let lambdas: Vec<Q> = zs.iter().map(|z| dot(z, mu) / q(dim as i64)).collect();
    let mut back = vec![Q::zero(); dim];
    for (l, z) in lambdas.iter().zip(&zs) {
        for (b, zi) in back.iter_mut().zip(z) {
            *b += l * zi;
        }
    }
    (back == mu).then_some(lambdas)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomotopyCheck {
    pub lambdas: Vec<f64>,
    /// Least common multiple of the denominators of the `lambda_j`.
    pub m: u64,
    pub predicted_winding: i64,
    pub winding_start: i64,
    pub winding_end: i64,
    pub min_modulus: f64,
    pub max_modulus: f64,
}

fn rotation_power(s: f64, n: usize) -> ComplexMatrix {
    let (c, sn) = (s.cos(), s.sin());
    let r = ComplexMatrix::from_real_rows(&[&[c, sn], &[-sn, c]]).expect("2x2");
    kron_all(std::iter::repeat_n(&r, n))
}

/// Evaluates `h(t, s) = tr(C^† H A H^†)`, `H = U(s)^† e^{t Omega} U(s)`, on a grid
/// of `t_steps x s_steps` intervals over `[0, 2 m pi] x [0, pi/2]`.
pub fn homotopy_check(
    c: &ComplexMatrix,
    a: &ComplexMatrix,
    n: usize,
    t_steps: usize,
    s_steps: usize,
) -> Result<HomotopyCheck> {
    c.ensure_same_dim(a)?;
    if t_steps < 3 || s_steps < 1 {
        return Err(Error::InvalidArgument("grid too coarse".into()));
    }
    let cert = tloc_feasibility(a, n)?;
    let Some(mu) = cert.mu.filter(|_| cert.certificate.verdict) else {
        return Err(Error::Precondition("A is not in E(t_loc)".into()));
    };
    let lambdas = local_torus_coordinates(&mu, n)
        .ok_or_else(|| Error::Precondition("witness outside the local torus".into()))?;
    let m = super::rational::denominator_lcm(&lambdas)
        .to_u64()
        .ok_or_else(|| Error::InvalidArgument("period too long".into()))?;
    let start = frobenius_inner(c, a)?;
    if start.norm() <= TAU_EXACT * c.frobenius_norm() * a.frobenius_norm() {
        return Err(Error::Precondition("tr(C^† A) must not vanish".into()));
    }
    let mu_f: Vec<f64> = mu.iter().map(to_f64).collect();
    let period = TAU * m as f64;
    let mut min_modulus = f64::INFINITY;
    let mut max_modulus = 0.0f64;
    let mut first = Vec::new();
    let mut last = Vec::new();
    for si in 0..=s_steps {
        let s = FRAC_PI_2 * si as f64 / s_steps as f64;
        let u = rotation_power(s, n);
        // conjugating C and A by U(s) once replaces conjugating the flow
        let cs = u.conjugate(c);
        let as_ = u.conjugate(a);
        let mut row = Vec::with_capacity(t_steps);
        for ti in 0..t_steps {
            let t = period * ti as f64 / t_steps as f64;
            let ph: Vec<C64> = mu_f.iter().map(|&x| C64::from_polar(1.0, t * x)).collect();
            let mut z = C64::new(0.0, 0.0);
            let dim = ph.len();
            for k in 0..dim {
                for l in 0..dim {
                    z += cs[(k, l)].conj() * ph[k] * as_[(k, l)] * ph[l].conj();
                }
            }
            min_modulus = min_modulus.min(z.norm());
            max_modulus = max_modulus.max(z.norm());
            row.push(z);
        }
        if si == 0 {
            first = row;
        } else if si == s_steps {
            last = row;
        }
    }
    Ok(HomotopyCheck {
        lambdas: lambdas.iter().map(to_f64).collect(),
        m,
        predicted_winding: m as i64,
        winding_start: winding_number(&first, C64::new(0.0, 0.0))?,
        winding_end: winding_number(&last, C64::new(0.0, 0.0))?,
        min_modulus,
        max_modulus,
    })
}
