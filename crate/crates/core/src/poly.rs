//! Dense complex polynomials and a simultaneous root finder.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Polynomial with complex coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    /// Trailing zero coefficients are dropped so the leading one is nonzero.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == Complex64::new(0.0, 0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// `(p(x), p'(x))` by a single Horner pass.
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// Fujiwara's bound on the modulus of every root.
    fn root_bound(&self) -> f64 {
        let n = self.degree();
        let lead = self.coeffs[n].norm();
        (1..=n)
            .map(|j| {
                let c = self.coeffs[n - j].norm() / lead;
                let c = if j == n { c / 2.0 } else { c };
                c.powf(1.0 / j as f64)
            })
            .fold(0.0, f64::max)
            * 2.0
    }

    /// All roots, by Aberth–Ehrlich iteration from a circle of starting points.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = self.degree();
        let r = self.root_bound().max(f64::MIN_POSITIVE);
        // Offset angle avoids starting on a symmetry axis of real polynomials.
        let start: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(r, 2.0 * std::f64::consts::PI * (j as f64 + 0.25) / n as f64 + 0.4))
            .collect();
        self.roots_from(&start)
    }

    /// All roots, warm-started from `guess` (one entry per root).
    pub fn roots_from(&self, guess: &[Complex64]) -> Result<Vec<Complex64>> {
        const MAX_ITER: usize = 500;
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        if guess.len() != n {
            return Err(Error::invalid(format!(
                "need {n} starting points, got {}",
                guess.len()
            )));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::RootFinder("non-finite coefficient".into()));
        }
        let mut z = guess.to_vec();
        let mut done = vec![false; n];
        for _ in 0..MAX_ITER {
            for i in 0..n {
                if done[i] {
                    continue;
                }
                let (p, dp) = self.eval_with_derivative(z[i]);
                if p == Complex64::new(0.0, 0.0) {
                    done[i] = true;
                    continue;
                }
                let ratio = p / dp;
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (z[i] - z[j]).inv())
                    .sum();
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if !step.is_finite() {
                    return Err(Error::RootFinder(format!("non-finite Aberth step at {}", z[i])));
                }
                z[i] -= step;
                if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                    done[i] = true;
                }
            }
            if done.iter().all(|&d| d) {
                return Ok(z);
            }
        }
        // Slow (linear) convergence toward clustered roots still lands close;
        // accept if every point is a near-root by the backward-error test.
        if z.iter().all(|&zi| self.is_near_root(zi)) {
            Ok(z)
        } else {
            Err(Error::RootFinder(format!(
                "Aberth iteration did not converge in {MAX_ITER} sweeps (degree {n})"
            )))
        }
    }

    /// Residual small relative to the size of the summed terms.
    fn is_near_root(&self, x: Complex64) -> bool {
        let scale: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * x.norm().powi(k as i32))
            .sum();
        self.eval(x).norm() <= 1e-10 * scale
    }
}
