//! Random matrices with i.i.d. standardized entries, the truncation and
//! centering reduction, scaled powers `n^{-m/2} X^m`, and their spectra.

use std::fmt;
use std::str::FromStr;

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, MatRef, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};

/// Eigenvalues of `W W*` below `-NEGATIVE_TOL * max(1, lambda_max)` are
/// treated as an eigensolver failure rather than rounding.
const NEGATIVE_TOL: f64 = 1e-10;

/// Default exponent of the truncation schedule `tau_n = n^{-tau_exp}`.
pub const DEFAULT_TAU_EXP: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistKind {
    /// Real and imaginary parts independent `N(0, 1/2)`.
    ComplexGaussian,
    RealGaussian,
    Rademacher,
    /// `(B - p) / sqrt(p (1 - p))` with `B ~ Bernoulli(p)`.
    CenteredBernoulli { p: f64 },
    /// Student t rescaled to unit variance; needs `df > 4`.
    StudentT { df: f64 },
}

/// Entry law with mean 0, `E|X|^2 = 1` and a finite fourth moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryDistribution {
    kind: DistKind,
    fourth_moment_bound: f64,
}

impl EntryDistribution {
    pub fn new(kind: DistKind) -> Result<Self> {
        let fourth = match kind {
            DistKind::ComplexGaussian => 2.0,
            DistKind::RealGaussian => 3.0,
            DistKind::Rademacher => 1.0,
            DistKind::CenteredBernoulli { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::invalid(format!("bernoulli p = {p} outside (0, 1)")));
                }
                let q = 1.0 - p;
                (q.powi(3) + p.powi(3)) / (p * q)
            }
            DistKind::StudentT { df } => {
                if !(df > 4.0) || !df.is_finite() {
                    return Err(Error::invalid(format!(
                        "student_t needs df > 4 for a finite fourth moment, got {df}"
                    )));
                }
                3.0 + 6.0 / (df - 4.0)
            }
        };
        Ok(EntryDistribution {
            kind,
            fourth_moment_bound: fourth,
        })
    }

    pub fn complex_gaussian() -> Self {
        EntryDistribution {
            kind: DistKind::ComplexGaussian,
            fourth_moment_bound: 2.0,
        }
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    /// `E|X|^4` for this law.
    pub fn fourth_moment_bound(&self) -> f64 {
        self.fourth_moment_bound
    }

    /// Laws invariant under `X -> -X`, whose truncated mean is always zero.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self.kind, DistKind::CenteredBernoulli { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> c64 {
        match self.kind {
            DistKind::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
            DistKind::RealGaussian => c64::new(rng.sample(StandardNormal), 0.0),
            DistKind::Rademacher => c64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0),
            DistKind::CenteredBernoulli { p } => {
                let sd = (p * (1.0 - p)).sqrt();
                let b = if rng.gen::<f64>() < p { 1.0 } else { 0.0 };
                c64::new((b - p) / sd, 0.0)
            }
            DistKind::StudentT { df } => {
                // df > 4 was checked at construction.
                let t: f64 = StudentT::new(df).expect("df > 4").sample(rng);
                c64::new(t * ((df - 2.0) / df).sqrt(), 0.0)
            }
        }
    }

    /// `E[X 1{|X| < threshold}]`, in closed form for every supported law.
    pub fn truncated_mean(&self, threshold: f64) -> c64 {
        match self.kind {
            DistKind::CenteredBernoulli { p } => {
                let sd = (p * (1.0 - p)).sqrt();
                let hi = (1.0 - p) / sd;
                let lo = -p / sd;
                let mut mean = 0.0;
                if hi.abs() < threshold {
                    mean += p * hi;
                }
                if lo.abs() < threshold {
                    mean += (1.0 - p) * lo;
                }
                c64::new(mean, 0.0)
            }
            _ => c64::new(0.0, 0.0),
        }
    }

    pub fn tag(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DistKind::ComplexGaussian => f.write_str("complex_gaussian"),
            DistKind::RealGaussian => f.write_str("real_gaussian"),
            DistKind::Rademacher => f.write_str("rademacher"),
            DistKind::CenteredBernoulli { p } => write!(f, "centered_bernoulli({p})"),
            DistKind::StudentT { df } => write!(f, "student_t({df})"),
        }
    }
}

impl FromStr for EntryDistribution {
    type Err = Error;

    /// Accepts `name`, `name(param)` or `name:param`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, param) = match s.find(['(', ':']) {
            Some(i) => {
                let rest = s[i + 1..].trim_end_matches(')');
                let v: f64 = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad distribution parameter in {s:?}")))?;
                (&s[..i], Some(v))
            }
            None => (s, None),
        };
        let need = |p: Option<f64>| p.ok_or_else(|| Error::invalid(format!("{name} needs a parameter")));
        let kind = match (name, param) {
            ("complex_gaussian", None) => DistKind::ComplexGaussian,
            ("real_gaussian", None) => DistKind::RealGaussian,
            ("rademacher", None) => DistKind::Rademacher,
            ("centered_bernoulli", p) => DistKind::CenteredBernoulli { p: need(p)? },
            ("student_t", p) => DistKind::StudentT { df: need(p)? },
            _ => return Err(Error::invalid(format!("unknown distribution {s:?}"))),
        };
        EntryDistribution::new(kind)
    }
}

/// Seed of trial `trial` in cell `cell` under `master`: SplitMix64 applied to
/// each key in turn, so trials are reproducible in isolation.
pub fn trial_seed(master: u64, cell: u64, trial: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ cell) ^ trial)
}

/// An `n x n` sample with the steps applied to it so far.
#[derive(Debug, Clone)]
pub struct RandomMatrix {
    n: usize,
    entries: Mat<c64>,
    dist: EntryDistribution,
    seed: u64,
    truncation: Option<f64>,
    centered: bool,
}

impl RandomMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn dist(&self) -> &EntryDistribution {
        &self.dist
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The `tau` of a previous [`truncate_entries`], if any.
    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn into_entries(self) -> Mat<c64> {
        self.entries
    }
}

/// Entries filled row by row from a ChaCha8 stream keyed by `seed`.
pub fn sample_matrix(n: usize, dist: &EntryDistribution, seed: u64) -> Result<RandomMatrix> {
    if n == 0 {
        return Err(Error::invalid("matrix dimension must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            entries[(i, j)] = dist.sample(&mut rng);
        }
    }
    Ok(RandomMatrix {
        n,
        entries,
        dist: *dist,
        seed,
        truncation: None,
        centered: false,
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

/// Zero every entry with `|x| >= tau sqrt(n)`.
pub fn truncate_entries(x: &RandomMatrix, tau: f64) -> Result<RandomMatrix> {
    check_tau(tau)?;
    let threshold = tau * (x.n as f64).sqrt();
    let mut out = x.clone();
    for j in 0..x.n {
        for i in 0..x.n {
            if out.entries[(i, j)].norm() >= threshold {
                out.entries[(i, j)] = c64::new(0.0, 0.0);
            }
        }
    }
    out.truncation = Some(tau);
    Ok(out)
}

/// Subtract the mean of the truncated entry law from every entry.
pub fn center(x: &RandomMatrix, dist: &EntryDistribution, tau: f64) -> Result<RandomMatrix> {
    check_tau(tau)?;
    if x.dist != *dist || x.truncation != Some(tau) || x.centered {
        return Err(Error::invalid(format!(
            "center expects a {dist} matrix truncated at tau = {tau} and not yet centered \
             (got {}, truncation {:?}, centered {})",
            x.dist, x.truncation, x.centered
        )));
    }
    let shift = dist.truncated_mean(tau * (x.n as f64).sqrt());
    let mut out = x.clone();
    if shift != c64::new(0.0, 0.0) {
        for j in 0..x.n {
            for i in 0..x.n {
                out.entries[(i, j)] -= shift;
            }
        }
    }
    out.centered = true;
    Ok(out)
}

/// Plug-in `n^{-2} sum |x_jk|^4 1{|x_jk| > tau sqrt(n)}`.
pub fn lindeberg_functional(x: &RandomMatrix, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(lindeberg_of(x.entries(), tau))
}

fn lindeberg_of(a: MatRef<'_, c64>, tau: f64) -> f64 {
    let n = a.nrows() as f64;
    let threshold = tau * n.sqrt();
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let r = a[(i, j)].norm();
            if r > threshold {
                acc += r.powi(4);
            }
        }
    }
    acc / (n * n)
}

/// `W = n^{-m/2} X^m`, scaling each factor by `n^{-1/2}` before multiplying.
pub fn matrix_power_scaled(x: MatRef<'_, c64>, m: u32) -> Result<Mat<c64>> {
    if m == 0 {
        return Err(Error::invalid("power m must be at least 1"));
    }
    if x.nrows() != x.ncols() {
        return Err(Error::invalid("matrix power needs a square matrix"));
    }
    let n = x.nrows();
    let scale = c64::new(1.0 / (n as f64).sqrt(), 0.0);
    let factor = Mat::from_fn(n, n, |i, j| x[(i, j)] * scale);
    let mut w = factor.clone();
    let mut tmp = Mat::<c64>::zeros(n, n);
    for _ in 1..m {
        matmul(tmp.as_mut(), Accum::Replace, w.as_ref(), factor.as_ref(), c64::new(1.0, 0.0), Par::Seq);
        std::mem::swap(&mut w, &mut tmp);
    }
    Ok(w)
}

/// `sum |a_ij|^2`.
pub fn frobenius_sq(a: MatRef<'_, c64>) -> f64 {
    a.squared_norm_l2()
}

fn hermitian_eigenvalues(h: MatRef<'_, c64>) -> Result<Vec<f64>> {
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?} (dimension {})", h.nrows())))
}

/// Eigenvalues of `W W*`, nonincreasing, tiny negatives clamped to 0.
pub fn squared_singular_values(w: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if w.nrows() != w.ncols() {
        return Err(Error::invalid("squared singular values need a square matrix"));
    }
    let n = w.nrows();
    let mut gram = Mat::<c64>::zeros(n, n);
    matmul(gram.as_mut(), Accum::Replace, w, w.adjoint(), c64::new(1.0, 0.0), Par::Seq);
    let mut ev = hermitian_eigenvalues(gram.as_ref())?;
    let top = ev.iter().cloned().fold(1.0, f64::max);
    if let Some(&low) = ev.iter().find(|&&v| v < -NEGATIVE_TOL * top) {
        return Err(Error::Eigensolver(format!(
            "eigenvalue {low:e} of a nonnegative matrix (dimension {n})"
        )));
    }
    for v in ev.iter_mut() {
        *v = v.max(0.0);
    }
    ev.reverse();
    Ok(ev)
}

/// Eigenvalues of `[[0, W], [W*, 0]]`, ascending, length `2n`.
pub fn symmetrized_block_spectrum(w: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if w.nrows() != w.ncols() {
        return Err(Error::invalid("block spectrum needs a square matrix"));
    }
    let n = w.nrows();
    let block = Mat::<c64>::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, false) => w[(i, j - n)],
        (false, true) => w[(j, i - n)].conj(),
        _ => c64::new(0.0, 0.0),
    });
    hermitian_eigenvalues(block.as_ref())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub dist: String,
    pub seed: u64,
    pub truncated: bool,
}

/// Squared singular values `s_1^2 >= ... >= s_n^2` of one simulated `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    n: usize,
    m: u32,
    provenance: Provenance,
}

impl Spectrum {
    /// `values` may come in any order; they are stored nonincreasing.
    pub fn new(mut values: Vec<f64>, m: u32, provenance: Provenance) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("spectrum values must be finite and nonnegative"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Spectrum {
            n: values.len(),
            values,
            m,
            provenance,
        })
    }

    pub fn from_matrix(w: MatRef<'_, c64>, m: u32, provenance: Provenance) -> Result<Self> {
        Self::new(squared_singular_values(w)?, m, provenance)
    }

    /// Nonincreasing.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ascending(&self) -> Vec<f64> {
        self.values.iter().rev().copied().collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n as f64
    }
}

/// Whether and how entries are truncated before forming the power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub enabled: bool,
    /// `tau_n = n^{-tau_exp}`.
    pub tau_exp: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            enabled: false,
            tau_exp: DEFAULT_TAU_EXP,
        }
    }
}

impl TruncationPolicy {
    pub fn tau(&self, n: usize) -> f64 {
        (n as f64).powf(-self.tau_exp)
    }
}

/// Everything one simulated trial produces.
#[derive(Debug, Clone)]
pub struct Trial {
    pub spectrum: Spectrum,
    /// `L_n(tau_n)` of the raw (untruncated) sample.
    pub lindeberg: f64,
    /// `||W||_2^2 / n`.
    pub frobenius_per_n: f64,
}

/// Sample, optionally truncate and center, raise to the power, and diagonalize.
pub fn simulate_trial(
    n: usize,
    m: u32,
    dist: &EntryDistribution,
    seed: u64,
    policy: TruncationPolicy,
) -> Result<Trial> {
    let raw = sample_matrix(n, dist, seed)?;
    let tau = policy.tau(n);
    let lindeberg = lindeberg_functional(&raw, tau)?;
    let x = if policy.enabled {
        let t = truncate_entries(&raw, tau)?;
        center(&t, dist, tau)?
    } else {
        raw
    };
    let w = matrix_power_scaled(x.entries(), m)?;
    let frobenius_per_n = frobenius_sq(w.as_ref()) / n as f64;
    let provenance = Provenance {
        dist: dist.tag(),
        seed,
        truncated: policy.enabled,
    };
    let spectrum = Spectrum::from_matrix(w.as_ref(), m, provenance)?;
    Ok(Trial {
        spectrum,
        lindeberg,
        frobenius_per_n,
    })
}
