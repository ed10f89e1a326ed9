//! Linear error dynamics of the two observer blocks and pole-placement checks.

use super::gains::{elementary_symmetric, gains, GainSet};
use crate::error::{Error, Result};

/// Relative coefficient error below which a spectrum counts as placed.
pub const PLACEMENT_TOLERANCE: f64 = 1e-9;

/// Error matrix of the `(z1, z2, delta, rho)` block.
pub fn assemble_m1(g: &GainSet) -> [[f64; 4]; 4] {
    let k = &g.k;
    [
        [-k[0], 0.0, 1.0, -1.0],
        [-k[1], 0.0, 0.0, -1.0],
        [-k[2], 0.0, 0.0, 0.0],
        [-k[3], -1.0, 0.0, 0.0],
    ]
}

/// Error matrix of the `(y1, v, k)` block; the error obeys `e' = y1(t) M2 e`.
pub fn assemble_m2(g: &GainSet, population: f64) -> [[f64; 3]; 3] {
    let k = &g.k;
    [
        [-k[4], 1.0, 0.0],
        [-k[5], 0.0, -1.0 / population],
        [-k[6] * population, 0.0, 0.0],
    ]
}

type Poly = Vec<f64>; // ascending powers of s

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add_scaled(acc: &mut Poly, p: &Poly, sign: f64) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (a, x) in acc.iter_mut().zip(p) {
        *a += sign * x;
    }
}

/// Determinant of a matrix of polynomials by cofactor expansion along the first row.
fn poly_det(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut det = vec![0.0];
    for col in 0..n {
        if m[0][col].iter().all(|c| *c == 0.0) {
            continue;
        }
        let minor: Vec<Vec<Poly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        poly_add_scaled(&mut det, &poly_mul(&m[0][col], &poly_det(&minor)), sign);
    }
    det
}

/// Coefficients of `det(sI - M)`, highest power first (leading entry 1).
pub fn char_poly<const D: usize>(m: &[[f64; D]; D]) -> Result<Vec<f64>> {
    if D == 0 || D > 4 {
        return Err(Error::InvalidArgument(format!(
            "characteristic polynomial supported for dimensions 1..=4, got {D}"
        )));
    }
    let shifted: Vec<Vec<Poly>> = (0..D)
        .map(|i| {
            (0..D)
                .map(|j| if i == j { vec![-m[i][j], 1.0] } else { vec![-m[i][j]] })
                .collect()
        })
        .collect();
    let mut coeffs = poly_det(&shifted);
    coeffs.resize(D + 1, 0.0);
    coeffs.reverse();
    Ok(coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolePlacementReport {
    pub m1_ok: bool,
    pub m2_ok: bool,
    /// Largest coefficientwise relative error over both blocks.
    pub max_coeff_error: f64,
}

fn max_rel_error(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| if *w == 0.0 { g.abs() } else { ((g - w) / w).abs() })
        .fold(0.0, f64::max)
}

/// Checks that the gains in `g` place the spectra at `{-lambda_i}` and `{-mu_j}`.
pub fn check_gain_set(g: &GainSet, population: f64) -> PolePlacementReport {
    let e1 = max_rel_error(
        &char_poly(&assemble_m1(g)).expect("4x4 supported"),
        &elementary_symmetric(&g.lambda),
    );
    let e2 = max_rel_error(
        &char_poly(&assemble_m2(g, population)).expect("3x3 supported"),
        &elementary_symmetric(&g.mu),
    );
    PolePlacementReport {
        m1_ok: e1 < PLACEMENT_TOLERANCE,
        m2_ok: e2 < PLACEMENT_TOLERANCE,
        max_coeff_error: e1.max(e2),
    }
}

pub fn verify_pole_placement(lambda: [f64; 4], mu: [f64; 3], population: f64) -> Result<PolePlacementReport> {
    Ok(check_gain_set(&gains(lambda, mu)?, population))
}
