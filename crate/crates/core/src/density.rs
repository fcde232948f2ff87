//! Limiting density and CDF recovered from the Stieltjes transform.
//!
//! `rho(x) = Im s(x + iv) / pi` is evaluated slightly above the real axis
//! and extrapolated to `v -> 0`. Near the origin the density blows up like
//! `x^{-m/(m+1)}`; the mass below the first grid point is supplied by a
//! two-term Puiseux fit `x^{-a} (c1 + c2 x^b)`, `a = m/(m+1)`, `b = 1/(m+1)`,
//! through the two smallest grid points.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moments::support_edge;
use crate::stieltjes::{Form, StieltjesSolver};

pub const DEFAULT_POINTS: usize = 2048;
pub const DEFAULT_V_OFFSET: f64 = 1e-9;
pub const MIN_POINTS: usize = 64;
pub const V_OFFSET_RANGE: (f64, f64) = (1e-9, 1e-2);

/// Smallest grid point, as a fraction of the edge.
pub const X_MIN_FRACTION: f64 = 1e-6;
/// Where the log-spaced part of the grid hands over to the linear part.
const LOG_BREAK_FRACTION: f64 = 2e-2;
/// Lowest abscissa of the analytic near-zero CDF points, as a fraction of the edge.
const CDF_FLOOR_FRACTION: f64 = 1e-30;
const CDF_FLOOR_PER_DECADE: usize = 32;

/// Allowed drift of the integrated density from unit mass.
pub const NORMALIZATION_TOL: f64 = 1e-3;

/// Power-law behaviour of the density below the first grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearZeroFit {
    /// Decay exponent `a` of the density, `rho ~ x^{-a}`.
    pub exponent: f64,
    pub lead: f64,
    pub correction: f64,
}

impl NearZeroFit {
    fn for_power(m: u32, points: [(f64, f64); 2]) -> Self {
        let a = f64::from(m) / f64::from(m + 1);
        let b = 1.0 - a;
        let [(x0, r0), (x1, r1)] = points;
        let y0 = r0 * x0.powf(a);
        let y1 = r1 * x1.powf(a);
        let (u0, u1) = (x0.powf(b), x1.powf(b));
        let correction = (y1 - y0) / (u1 - u0);
        let lead = y0 - correction * u0;
        let fit = NearZeroFit {
            exponent: a,
            lead,
            correction,
        };
        // An ill-conditioned fit must not turn the tail mass negative.
        if fit.lead > 0.0 && fit.mass_below(x0) > 0.0 {
            fit
        } else {
            NearZeroFit {
                exponent: a,
                lead: y0,
                correction: 0.0,
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let b = 1.0 - self.exponent;
        x.powf(-self.exponent) * (self.lead + self.correction * x.powf(b))
    }

    /// `int_0^x t^k rho(t) dt` under the fitted form.
    pub fn moment_below(&self, x: f64, k: u32) -> f64 {
        let b = 1.0 - self.exponent;
        let k = f64::from(k);
        self.lead * x.powf(k + b) / (k + b) + self.correction * x.powf(k + 2.0 * b) / (k + 2.0 * b)
    }

    pub fn mass_below(&self, x: f64) -> f64 {
        self.moment_below(x, 0)
    }
}

/// Density of the limiting squared-singular-value law on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    m: u32,
    x: Vec<f64>,
    rho: Vec<f64>,
    v_offset: f64,
    edge: f64,
    near_zero: Option<NearZeroFit>,
}

impl SpectralDensity {
    /// Density from explicit samples, with no mass assumed below `x[0]`.
    pub fn from_parts(m: u32, x: Vec<f64>, rho: Vec<f64>, v_offset: f64, edge: f64) -> Result<Self> {
        if x.len() != rho.len() || x.len() < 2 {
            return Err(Error::invalid("density needs matching x and rho with at least 2 points"));
        }
        if x[0] < 0.0 || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("density grid must be nonnegative and strictly increasing"));
        }
        if rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid("density values must be finite and nonnegative"));
        }
        Ok(SpectralDensity {
            m,
            x,
            rho,
            v_offset,
            edge,
            near_zero: None,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn v_offset(&self) -> f64 {
        self.v_offset
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }

    pub fn near_zero(&self) -> Option<&NearZeroFit> {
        self.near_zero.as_ref()
    }

    /// `int x^k rho(x) dx`: power-law segments on the grid plus the fitted tail below it.
    pub fn moment(&self, k: u32) -> f64 {
        let tail = self
            .near_zero
            .map_or(0.0, |f| f.moment_below(self.x[0], k));
        let body: f64 = self
            .x
            .windows(2)
            .zip(self.rho.windows(2))
            .map(|(x, r)| segment_integral(self.edge, x[0], x[1], x[0].powi(k as i32) * r[0], x[1].powi(k as i32) * r[1]))
            .sum();
        tail + body
    }

    pub fn total_mass(&self) -> f64 {
        self.moment(0)
    }
}

/// `int_{x0}^{x1} f`. Below `LOG_BREAK_FRACTION * edge` the integrand is
/// interpolated as `c x^p`, which is exact on the blow-up at the origin;
/// elsewhere the trapezoid rule applies.
fn segment_integral(edge: f64, x0: f64, x1: f64, f0: f64, f1: f64) -> f64 {
    if !(x0 > 0.0 && f0 > 0.0 && f1 > 0.0 && x1 <= LOG_BREAK_FRACTION * edge) {
        return 0.5 * (x1 - x0) * (f0 + f1);
    }
    let lx = (x1 / x0).ln();
    let p1 = (f1 / f0).ln() / lx + 1.0;
    if p1.abs() < 1e-9 {
        f0 * x0 * lx
    } else {
        (f1 * x1 - f0 * x0) / p1
    }
}

fn check_offset(v_offset: f64) -> Result<()> {
    let (lo, hi) = V_OFFSET_RANGE;
    if !(lo..=hi).contains(&v_offset) {
        return Err(Error::invalid(format!(
            "v offset {v_offset:e} outside [{lo:e}, {hi:e}]"
        )));
    }
    Ok(())
}

/// `Im s(x + iv) / pi`, Richardson-extrapolated from `v` and `v/2`, clamped
/// at zero.
pub fn density_at(solver: &StieltjesSolver, x: f64, v_offset: f64) -> Result<f64> {
    let im = |v: f64| -> Result<f64> { Ok(solver.solve(Complex64::new(x, v))?.s.im / PI) };
    let coarse = im(v_offset)?;
    let fine = im(0.5 * v_offset)?;
    Ok((2.0 * fine - coarse).max(0.0))
}

/// Log-spaced from `1e-6 edge` to `2e-2 edge`, then linear up to `edge`.
pub fn density_abscissae(edge: f64, n_points: usize) -> Vec<f64> {
    let n_log = n_points / 4;
    let n_lin = n_points - n_log;
    let lo = (X_MIN_FRACTION * edge).ln();
    let brk = LOG_BREAK_FRACTION * edge;
    let mut x: Vec<f64> = (0..n_log)
        .map(|i| (lo + (brk.ln() - lo) * i as f64 / n_log as f64).exp())
        .collect();
    x.extend((0..n_lin).map(|i| brk + (edge - brk) * i as f64 / (n_lin - 1) as f64));
    *x.last_mut().unwrap() = edge;
    x
}

/// Density of the squared-singular-value law for power `m`.
pub fn density_grid(m: u32, n_points: usize, v_offset: f64) -> Result<SpectralDensity> {
    if n_points < MIN_POINTS {
        return Err(Error::invalid(format!(
            "density grid needs at least {MIN_POINTS} points, got {n_points}"
        )));
    }
    check_offset(v_offset)?;
    let solver = StieltjesSolver::new(m, Form::Squared)?;
    let edge = support_edge(m);
    let x = density_abscissae(edge, n_points);
    let rho = x
        .par_iter()
        .map(|&xi| density_at(&solver, xi, v_offset))
        .collect::<Result<Vec<f64>>>()?;
    let near_zero = NearZeroFit::for_power(m, [(x[0], rho[0]), (x[1], rho[1])]);
    Ok(SpectralDensity {
        m,
        x,
        rho,
        v_offset,
        edge,
        near_zero: Some(near_zero),
    })
}

/// Piecewise-linear distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    x: Vec<f64>,
    g: Vec<f64>,
}

impl CdfTable {
    /// Validates: `x` strictly increasing, `g` nondecreasing from exactly 0 to exactly 1.
    pub fn new(x: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if x.len() != g.len() || x.len() < 2 {
            return Err(Error::invalid("CDF table needs matching x and G with at least 2 points"));
        }
        if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("CDF grid must be finite and strictly increasing"));
        }
        if g.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("CDF values must be nondecreasing"));
        }
        if g[0] != 0.0 || *g.last().unwrap() != 1.0 {
            return Err(Error::invalid("CDF must start at 0 and end at 1"));
        }
        Ok(CdfTable { x, g })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        cdf_eval(self, x)
    }

    /// Smallest grid-interpolated `x` with `G(x) = p`, for `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let i = self.g.partition_point(|&g| g < p);
        if i == 0 {
            return self.x[0];
        }
        let (g0, g1) = (self.g[i - 1], self.g[i]);
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        x0 + (x1 - x0) * (p - g0) / (g1 - g0)
    }

    /// `int x^k dG` for the piecewise-linear `G`, exact per cell.
    pub fn moment(&self, k: u32) -> f64 {
        let k1 = k as i32 + 1;
        self.x
            .windows(2)
            .zip(self.g.windows(2))
            .filter(|(_, g)| g[1] > g[0])
            .map(|(x, g)| {
                (g[1] - g[0]) / (x[1] - x[0]) * (x[1].powi(k1) - x[0].powi(k1)) / f64::from(k1)
            })
            .sum()
    }
}

/// Cumulative integral of `d`, including the fitted mass near zero,
/// normalized so that `G(edge) = 1`.
///
/// For a fitted density the table is extended below the first grid point
/// with analytic values of the fit down to `1e-30 edge`, so that very small
/// simulated eigenvalues are compared against the power-law tail rather
/// than a straight line to the origin.
pub fn cdf_from_density(d: &SpectralDensity) -> Result<CdfTable> {
    let mut x = vec![0.0];
    let mut g = vec![0.0];
    let x0 = d.x[0];
    if let Some(fit) = d.near_zero {
        let floor = CDF_FLOOR_FRACTION * d.edge;
        if floor < x0 {
            let decades = (x0 / floor).log10();
            let steps = (decades * CDF_FLOOR_PER_DECADE as f64).ceil() as usize;
            for i in 0..steps {
                let xi = floor * 10f64.powf(decades * i as f64 / steps as f64);
                x.push(xi);
                g.push(fit.mass_below(xi));
            }
        }
    }
    let mut acc = d.near_zero.map_or(0.0, |f| f.mass_below(x0));
    if x0 > 0.0 {
        x.push(x0);
        g.push(acc);
    }
    for (xs, rs) in d.x.windows(2).zip(d.rho.windows(2)) {
        acc += segment_integral(d.edge, xs[0], xs[1], rs[0], rs[1]);
        x.push(xs[1]);
        g.push(acc);
    }
    let factor = acc;
    let (lo, hi) = (1.0 - NORMALIZATION_TOL, 1.0 + NORMALIZATION_TOL);
    if !(lo..=hi).contains(&factor) {
        return Err(Error::Normalization { factor, lo, hi });
    }
    let mut running = 0.0f64;
    for gi in g.iter_mut() {
        running = running.max(*gi / factor);
        *gi = running.min(1.0);
    }
    *g.last_mut().unwrap() = 1.0;
    CdfTable::new(x, g)
}

/// `G~(x) = (1 + sgn(x) G(x^2)) / 2` on the signed square-root grid, with
/// `sgn(0) = 0`.
pub fn symmetrize_cdf(t: &CdfTable) -> Result<CdfTable> {
    if t.x[0] < 0.0 {
        return Err(Error::invalid("symmetrization needs a CDF supported on [0, inf)"));
    }
    let positive: Vec<(f64, f64)> = t
        .x
        .iter()
        .zip(&t.g)
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, g)| (x.sqrt(), *g))
        .collect();
    let mut x = Vec::with_capacity(2 * positive.len() + 1);
    let mut g = Vec::with_capacity(2 * positive.len() + 1);
    for &(r, gi) in positive.iter().rev() {
        x.push(-r);
        g.push(0.5 * (1.0 - gi));
    }
    x.push(0.0);
    g.push(0.5);
    for &(r, gi) in &positive {
        x.push(r);
        g.push(0.5 * (1.0 + gi));
    }
    CdfTable::new(x, g)
}

/// Linear interpolation in the table; 0 below the grid, 1 above it.
pub fn cdf_eval(t: &CdfTable, x: f64) -> f64 {
    let n = t.x.len();
    if x <= t.x[0] {
        return if x == t.x[0] { t.g[0] } else { 0.0 };
    }
    if x >= t.x[n - 1] {
        return 1.0;
    }
    let i = t.x.partition_point(|&v| v <= x);
    let (x0, x1) = (t.x[i - 1], t.x[i]);
    if x == x0 {
        return t.g[i - 1];
    }
    let (g0, g1) = (t.g[i - 1], t.g[i]);
    g0 + (g1 - g0) * (x - x0) / (x1 - x0)
}
