//! Simulated spectra against the limiting law.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::density::{cdf_from_density, density_grid, CdfTable, DEFAULT_POINTS, DEFAULT_V_OFFSET};
use crate::error::{Error, Result};
use crate::moments::MomentTable;
use crate::rmt_sim::{simulate_trial, trial_seed, EntryDistribution, Spectrum, Trial, TruncationPolicy};
use crate::stieltjes::{equation_residual, Form};

/// Highest empirical moment worth estimating from one run.
pub const MAX_EMPIRICAL_MOMENT: usize = 8;
/// Moments reported per convergence row.
pub const REPORTED_MOMENTS: usize = 6;
pub const MIN_STUDY_N: usize = 32;

/// Residual probes `i`, `1 + i`, `3 + i`.
pub const PROBES: [Complex64; 3] = [
    Complex64::new(0.0, 1.0),
    Complex64::new(1.0, 1.0),
    Complex64::new(3.0, 1.0),
];

/// `sup_x |F(x) - G(x)|` for the step CDF `F` of `values` (any order).
///
/// The supremum is attained at the jumps of `F`; a run of equal values is
/// one jump spanning all of them.
pub fn kolmogorov_distance_values(values: &[f64], cdf: &CdfTable) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("Kolmogorov distance of an empty spectrum"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let g = cdf.eval(v[i]);
        let below = i as f64 / n;
        let above = (j + 1) as f64 / n;
        worst = worst.max((g - below).abs()).max((g - above).abs());
        i = j + 1;
    }
    Ok(worst)
}

pub fn kolmogorov_distance(spec: &Spectrum, cdf: &CdfTable) -> Result<f64> {
    kolmogorov_distance_values(spec.values(), cdf)
}

/// `n^{-1} sum_j 1 / (lambda_j - z)`.
pub fn empirical_stieltjes_values(values: &[f64], z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::invalid(format!("z = {z} is not in the upper half-plane")));
    }
    if values.is_empty() {
        return Err(Error::invalid("Stieltjes transform of an empty spectrum"));
    }
    let sum: Complex64 = values.iter().map(|&l| (l - z).inv()).sum();
    Ok(sum / values.len() as f64)
}

pub fn empirical_stieltjes(spec: &Spectrum, z: Complex64) -> Result<Complex64> {
    empirical_stieltjes_values(spec.values(), z)
}

/// Squared-form residual of the empirical transform at each probe.
pub fn residual_profile(spec: &Spectrum, m: u32, probes: &[Complex64]) -> Result<Vec<Complex64>> {
    residual_profile_values(spec.values(), m, probes)
}

pub fn residual_profile_values(values: &[f64], m: u32, probes: &[Complex64]) -> Result<Vec<Complex64>> {
    probes
        .iter()
        .map(|&z| Ok(equation_residual(m, z, empirical_stieltjes_values(values, z)?, Form::Squared)))
        .collect()
}

/// `m_k = n^{-1} sum lambda_j^k` for `k = 1..=kmax`.
pub fn empirical_moments(spec: &Spectrum, kmax: usize) -> Result<Vec<f64>> {
    empirical_moments_values(spec.values(), kmax)
}

pub fn empirical_moments_values(values: &[f64], kmax: usize) -> Result<Vec<f64>> {
    if kmax > MAX_EMPIRICAL_MOMENT {
        return Err(Error::invalid(format!(
            "empirical moments above order {MAX_EMPIRICAL_MOMENT} are not supported (asked {kmax})"
        )));
    }
    if values.is_empty() {
        return Err(Error::invalid("moments of an empty spectrum"));
    }
    let n = values.len() as f64;
    Ok((1..=kmax as i32)
        .map(|k| values.iter().map(|v| v.powi(k)).sum::<f64>() / n)
        .collect())
}

/// Limiting CDF of the squared singular values, on the default grid.
pub fn limit_cdf(m: u32) -> Result<CdfTable> {
    cdf_from_density(&density_grid(m, DEFAULT_POINTS, DEFAULT_V_OFFSET)?)
}

/// Parameters of a multi-`n` convergence study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub m: u32,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub dist: EntryDistribution,
    pub seed: u64,
    pub truncation: TruncationPolicy,
}

/// One `(n, m)` cell of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub m: u32,
    pub trials: usize,
    /// Mean over trials of the Kolmogorov distance to the limit.
    pub delta_mean: f64,
    /// Spread of the single-trial Kolmogorov distances.
    pub delta_std: f64,
    /// Kolmogorov distance of the pooled spectra of all trials.
    pub delta_pooled: f64,
    /// `|mean_k - alpha_k|` for `k = 1..=6`, trial-averaged moments.
    pub moment_err: Vec<f64>,
    /// Standard deviation of the single-trial moments, `k = 1..=6`.
    pub moment_trial_std: Vec<f64>,
    /// Mean over trials of `|delta_n(z)|` at [`PROBES`].
    pub residual_mean: Vec<f64>,
    /// `|delta_n(z)|` of the trial-averaged transform at [`PROBES`].
    pub residual_pooled: Vec<f64>,
    /// `L_n(tau_n)`, averaged over trials.
    pub lindeberg_value: f64,
    /// `||W||_2^2 / n`, averaged over trials.
    pub frobenius_per_n: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run the study, building the limiting CDF from scratch.
pub fn convergence_study(cfg: &StudyConfig) -> Result<Vec<ConvergenceRow>> {
    validate_study(cfg)?;
    let cdf = limit_cdf(cfg.m)?;
    convergence_study_with_cdf(cfg, &cdf)
}

fn validate_study(cfg: &StudyConfig) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::invalid("a convergence study needs at least one trial"));
    }
    if cfg.n_list.is_empty() {
        return Err(Error::invalid("a convergence study needs at least one n"));
    }
    if let Some(&n) = cfg.n_list.iter().find(|&&n| n < MIN_STUDY_N) {
        return Err(Error::invalid(format!("n = {n} below the minimum {MIN_STUDY_N}")));
    }
    if cfg.m == 0 {
        return Err(Error::invalid("power m must be at least 1"));
    }
    Ok(())
}

/// Run the study against a precomputed limiting CDF for `cfg.m`.
pub fn convergence_study_with_cdf(cfg: &StudyConfig, cdf: &CdfTable) -> Result<Vec<ConvergenceRow>> {
    validate_study(cfg)?;
    let alpha = MomentTable::closed(cfg.m, REPORTED_MOMENTS)?.to_f64();
    cfg.n_list
        .iter()
        .map(|&n| {
            // Trials depend on (seed, m, n, trial) only, not on list order.
            let cell = (u64::from(cfg.m) << 32) | n as u64;
            let trials = (0..cfg.trials)
                .into_par_iter()
                .map(|t| simulate_trial(n, cfg.m, &cfg.dist, trial_seed(cfg.seed, cell, t as u64), cfg.truncation))
                .collect::<Result<Vec<Trial>>>()?;
            summarize(n, cfg.m, &trials, cdf, &alpha)
        })
        .collect()
}

fn summarize(n: usize, m: u32, trials: &[Trial], cdf: &CdfTable, alpha: &[f64]) -> Result<ConvergenceRow> {
    let pooled: Vec<f64> = trials
        .iter()
        .flat_map(|t| t.spectrum.values().iter().copied())
        .collect();
    let delta_pooled = kolmogorov_distance_values(&pooled, cdf)?;
    let per_trial = trials
        .iter()
        .map(|t| kolmogorov_distance(&t.spectrum, cdf))
        .collect::<Result<Vec<f64>>>()?;
    let (delta_mean, delta_std) = mean_std(&per_trial);

    let trial_moments = trials
        .iter()
        .map(|t| empirical_moments(&t.spectrum, REPORTED_MOMENTS))
        .collect::<Result<Vec<_>>>()?;
    let (moment_err, moment_trial_std) = (0..REPORTED_MOMENTS)
        .map(|k| {
            let col: Vec<f64> = trial_moments.iter().map(|v| v[k]).collect();
            let (mean, std) = mean_std(&col);
            ((mean - alpha[k + 1]).abs(), std)
        })
        .unzip();

    let residual_pooled = residual_profile_values(&pooled, m, &PROBES)?
        .iter()
        .map(|d| d.norm())
        .collect();
    let mut residual_mean = vec![0.0; PROBES.len()];
    for t in trials {
        for (acc, d) in residual_mean.iter_mut().zip(residual_profile(&t.spectrum, m, &PROBES)?) {
            *acc += d.norm() / trials.len() as f64;
        }
    }
    let lindeberg_value = trials.iter().map(|t| t.lindeberg).sum::<f64>() / trials.len() as f64;
    let frobenius_per_n = trials.iter().map(|t| t.frobenius_per_n).sum::<f64>() / trials.len() as f64;

    Ok(ConvergenceRow {
        n,
        m,
        trials: trials.len(),
        delta_mean,
        delta_std,
        delta_pooled,
        moment_err,
        moment_trial_std,
        residual_mean,
        residual_pooled,
        lindeberg_value,
        frobenius_per_n,
    })
}
