use crate::error::{Error, Result};

/// Elementary symmetric polynomial of order `k` in `values`: the sum over all
/// `k`-subsets of the product of their entries.
pub fn sigma(values: &[f64], k: usize) -> Result<f64> {
    let n = values.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "symmetric polynomial order {k} out of range 1..={n}"
        )));
    }
    Ok(elementary_symmetric(values)[k])
}

/// All elementary symmetric polynomials `[e0 = 1, e1, ..., en]`, i.e. the
/// coefficients of `prod (s + x_i)` from the highest power down.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (m, &x) in values.iter().enumerate() {
        for j in (1..=m + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// Observer gains designed from the desired error-decay rates.
///
/// `lambda` sets the spectrum `{-lambda_i}` of the 4-state block; `mu` sets
/// `{-mu_j}` for the 3-state block, whose error dynamics are additionally
/// scaled by `y1(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    pub lambda: [f64; 4],
    pub mu: [f64; 3],
    /// `K1..K7`, stored zero-based.
    pub k: [f64; 7],
    /// Smallest of all `lambda_i` and `mu_j`.
    pub decay_bound: f64,
}

impl GainSet {
    /// Smallest `mu_j`: the rate in the second-block error envelope.
    pub fn mu_min(&self) -> f64 {
        self.mu.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn gains(lambda: [f64; 4], mu: [f64; 3]) -> Result<GainSet> {
    for (name, v) in lambda
        .iter()
        .map(|v| ("lambda", *v))
        .chain(mu.iter().map(|v| ("mu", *v)))
    {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!("{name} poles must be > 0, got {v}")));
        }
    }
    let l = elementary_symmetric(&lambda);
    let m = elementary_symmetric(&mu);
    let k = [
        l[1],
        l[1] + l[3],
        -l[4],
        -(l[2] + l[4] + 1.0),
        m[1],
        m[2],
        -m[3],
    ];
    let decay_bound = lambda.iter().chain(&mu).copied().fold(f64::INFINITY, f64::min);
    Ok(GainSet {
        lambda,
        mu,
        k,
        decay_bound,
    })
}
