//! Fuss–Catalan moments `alpha_k(m) = binom(k(m+1), k) / (mk + 1)`.
//!
//! Everything here is exact big-integer arithmetic; conversion to `f64`
//! happens only through [`MomentTable::to_f64`] and the edge estimate.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default upper bound on the moment index.
pub const DEFAULT_KMAX_CAP: usize = 64;

/// Moments `alpha_0(m) ..= alpha_kmax(m)` for one power `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentTable {
    m: u32,
    values: Vec<BigUint>,
}

impl MomentTable {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn values(&self) -> &[BigUint] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn kmax(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<&BigUint> {
        self.values.get(k)
    }

    /// Lossy conversion; moments beyond ~10^308 become `inf`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(big_to_f64).collect()
    }

    /// Table built from the closed form, entry by entry.
    pub fn closed(m: u32, kmax: usize) -> Result<Self> {
        Self::closed_with_cap(m, kmax, DEFAULT_KMAX_CAP)
    }

    pub fn closed_with_cap(m: u32, kmax: usize, cap: usize) -> Result<Self> {
        check_m(m)?;
        check_cap(kmax, cap)?;
        let values = (0..=kmax).map(|k| closed_unchecked(m, k)).collect();
        Ok(MomentTable { m, values })
    }
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("power m must be at least 1"));
    }
    Ok(())
}

fn check_cap(k: usize, cap: usize) -> Result<()> {
    if k > cap {
        return Err(Error::ResourceLimit {
            what: "moment index",
            requested: k,
            cap,
        });
    }
    Ok(())
}

fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    // Each partial product acc * (n - i) / (i + 1) is itself a binomial
    // coefficient, so the division is exact at every step.
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn closed_unchecked(m: u32, k: usize) -> BigUint {
    let m = u64::from(m);
    let k = k as u64;
    let b = binomial(k * (m + 1), k);
    let d = BigUint::from(m * k + 1);
    debug_assert!((&b % &d).is_zero());
    b / d
}

/// `alpha_k(m)` by the closed form, with the default index cap.
pub fn fuss_catalan_closed(m: u32, k: usize) -> Result<BigUint> {
    fuss_catalan_closed_with_cap(m, k, DEFAULT_KMAX_CAP)
}

pub fn fuss_catalan_closed_with_cap(m: u32, k: usize, cap: usize) -> Result<BigUint> {
    check_m(m)?;
    check_cap(k, cap)?;
    Ok(closed_unchecked(m, k))
}

/// Moments from the convolution recurrence
/// `alpha_k = sum_{k_0 + ... + k_m = k - 1} prod_nu alpha_{k_nu}`, seeded by
/// `alpha_0 = 1`.
///
/// The inner sum is the `(k-1)`-th coefficient of the `(m+1)`-fold
/// self-convolution of the sequence. The partial convolution powers are
/// extended by one coefficient per step, so every entry costs `O(m k)` big
/// multiplications instead of a sum over all compositions of `k - 1`.
pub fn fuss_catalan_recurrence(m: u32, kmax: usize) -> Result<MomentTable> {
    fuss_catalan_recurrence_with_cap(m, kmax, DEFAULT_KMAX_CAP)
}

pub fn fuss_catalan_recurrence_with_cap(m: u32, kmax: usize, cap: usize) -> Result<MomentTable> {
    check_m(m)?;
    check_cap(kmax, cap)?;
    let folds = m as usize + 1;

    let mut alpha: Vec<BigUint> = Vec::with_capacity(kmax + 1);
    alpha.push(BigUint::one());
    // powers[j] holds coefficients of alpha^{*(j+2)}, j = 0..m-1.
    let mut powers: Vec<Vec<BigUint>> = vec![Vec::with_capacity(kmax); folds - 1];

    for k in 1..=kmax {
        let idx = k - 1;
        // Coefficient idx of each power only needs alpha[0..=idx], all known.
        for j in 0..folds - 1 {
            let coeff = {
                let prev: &[BigUint] = if j == 0 { &alpha } else { &powers[j - 1] };
                (0..=idx).fold(BigUint::zero(), |acc, i| acc + &alpha[i] * &prev[idx - i])
            };
            powers[j].push(coeff);
        }
        let next = if folds == 1 {
            alpha[idx].clone()
        } else {
            powers[folds - 2][idx].clone()
        };
        alpha.push(next);
    }
    Ok(MomentTable { m, values: alpha })
}

/// Upper edge of the support, `(m+1)^{m+1} / m^m`.
pub fn support_edge(m: u32) -> f64 {
    let m = f64::from(m);
    (m + 1.0).powf(m + 1.0) / m.powf(m)
}

/// Estimate the support edge as the limit of `alpha_{k+1} / alpha_k`.
///
/// The ratios behave like `L (1 - 3/(2k) + O(k^-2))`, so the limit is taken
/// by polynomial (Richardson) extrapolation in `1/k` over the last few
/// ratios of the table.
pub fn support_edge_estimate(table: &MomentTable) -> Result<f64> {
    const MIN_ENTRIES: usize = 8;
    const ORDER: usize = 4;
    if table.len() < MIN_ENTRIES {
        return Err(Error::invalid(format!(
            "edge estimate needs at least {MIN_ENTRIES} moments, got {}",
            table.len()
        )));
    }
    let v = table.to_f64();
    let last = v.len() - 2;
    let first = last + 1 - ORDER.min(last);
    let pts: Vec<(f64, f64)> = (first..=last)
        .map(|k| (1.0 / k as f64, v[k + 1] / v[k]))
        .collect();
    Ok(neville_at_zero(&pts))
}

/// Value at 0 of the interpolating polynomial through `pts`.
fn neville_at_zero(pts: &[(f64, f64)]) -> f64 {
    let mut p: Vec<f64> = pts.iter().map(|&(_, y)| y).collect();
    let n = pts.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (pts[i].0, pts[i + level].0);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}
