//! Stieltjes transform of the limiting law as the Herglotz root of an
//! algebraic equation.
//!
//! With `c = (-1)^{m+1}` the transform of the squared-singular-value law
//! solves `1 + z s + c z^m s^{m+1} = 0`, and the transform of its symmetrized
//! law solves `1 + z s + c z^{m-1} s^{m+1} = 0`. For `m >= 2` several roots
//! may lie in the upper half-plane, so the physical one is singled out by
//! continuation from `z0 = iV` (where it is the root closest to `-1/z0`)
//! along the segment to the target.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moments::support_edge;
use crate::poly::Polynomial;

/// Imaginary offset used when a symmetrized evaluation lands on the negative
/// real axis.
pub const REAL_AXIS_OFFSET: f64 = 1e-9;

/// Which of the two fixed-point equations is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Form {
    /// Law of the squared singular values, supported on `[0, edge]`.
    Squared,
    /// Symmetric law of `±` singular values, supported on `[-sqrt(edge), sqrt(edge)]`.
    Symmetrized,
}

impl Form {
    fn z_exponent(self, m: u32) -> i32 {
        match self {
            Form::Squared => m as i32,
            Form::Symmetrized => m as i32 - 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Form::Squared => "squared",
            Form::Symmetrized => "symmetrized",
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(Form::Squared),
            "symmetrized" => Ok(Form::Symmetrized),
            other => Err(Error::invalid(format!(
                "unknown form {other:?} (expected squared or symmetrized)"
            ))),
        }
    }
}

/// One solved point of the transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesSample {
    pub z: Complex64,
    pub s: Complex64,
    /// `|P(z, s)|` for the equation of `form`.
    pub residual_mag: f64,
    pub form: Form,
}

fn sign(m: u32) -> f64 {
    // (-1)^{m+1}
    if m % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `1 + z s + (-1)^{m+1} z^e s^{m+1}` with `e = m` (squared) or `m - 1`
/// (symmetrized).
pub fn equation_residual(m: u32, z: Complex64, s: Complex64, form: Form) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    one + z * s + sign(m) * z.powi(form.z_exponent(m)) * s.powi(m as i32 + 1)
}

/// The fixed-point equation as a polynomial in `s` for fixed `z`.
pub fn equation_polynomial(m: u32, z: Complex64, form: Form) -> Polynomial {
    let zero = Complex64::new(0.0, 0.0);
    let mut coeffs = vec![zero; m as usize + 2];
    coeffs[0] = Complex64::new(1.0, 0.0);
    coeffs[1] += z;
    coeffs[m as usize + 1] += sign(m) * z.powi(form.z_exponent(m));
    Polynomial::new(coeffs)
}

/// Partial derivatives `(dP/dz, dP/ds)`.
fn equation_gradient(m: u32, z: Complex64, s: Complex64, form: Form) -> (Complex64, Complex64) {
    let e = form.z_exponent(m);
    let c = sign(m);
    let sm = s.powi(m as i32);
    let dz = if e == 0 {
        s
    } else {
        s + c * f64::from(e) * z.powi(e - 1) * sm * s
    };
    let ds = z + c * f64::from(m + 1) * z.powi(e) * sm;
    (dz, ds)
}

/// Tolerances and step control for branch tracking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Height `V` of the anchor point `z0 = iV`.
    pub anchor_height: f64,
    /// Largest accepted `|P(z, s)|` at the target.
    pub residual_tol: f64,
    /// Two roots closer than this count as colliding.
    pub collision_guard: f64,
    /// Largest step, as a fraction of the path.
    pub max_step: f64,
    /// Smallest step, relative to the largest one allowed near singular
    /// points, before tracking is declared lost.
    pub min_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            anchor_height: 100.0,
            residual_tol: 1e-12,
            collision_guard: 1e-9,
            max_step: 0.125,
            min_step: 1e-12,
        }
    }
}

/// Branch-tracking solver for one `(m, form)`.
#[derive(Debug, Clone, Copy)]
pub struct StieltjesSolver {
    m: u32,
    form: Form,
    config: SolverConfig,
}

impl StieltjesSolver {
    pub fn new(m: u32, form: Form) -> Result<Self> {
        Self::with_config(m, form, SolverConfig::default())
    }

    pub fn with_config(m: u32, form: Form, config: SolverConfig) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("power m must be at least 1"));
        }
        Ok(StieltjesSolver { m, form, config })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn solve(&self, z: Complex64) -> Result<StieltjesSample> {
        if !z.is_finite() {
            return Err(Error::invalid(format!("z = {z} is not finite")));
        }
        if z.im <= 0.0 {
            return Err(Error::invalid(format!(
                "z = {z} is not in the upper half-plane"
            )));
        }
        let s = self.track(z)?;
        let s = self.polish(z, s);
        let residual_mag = equation_residual(self.m, z, s, self.form).norm();
        if residual_mag >= self.config.residual_tol {
            return Err(Error::RootFinder(format!(
                "residual {residual_mag:e} at z = {z} (m = {}, {}) above tolerance {:e}",
                self.m, self.form, self.config.residual_tol
            )));
        }
        Ok(StieltjesSample {
            z,
            s,
            residual_mag,
            form: self.form,
        })
    }

    fn roots_at(&self, z: Complex64, warm: Option<&[Complex64]>) -> Result<Vec<Complex64>> {
        let p = equation_polynomial(self.m, z, self.form);
        match warm {
            Some(g) if g.len() == p.degree() => p.roots_from(g).or_else(|_| p.roots()),
            _ => p.roots(),
        }
    }

    /// Points where the equation degenerates: the leading coefficient
    /// vanishes at 0 and two roots merge at the support edge(s).
    fn singular_points(&self) -> Vec<Complex64> {
        let edge = support_edge(self.m);
        let mut pts = vec![Complex64::new(0.0, 0.0)];
        match self.form {
            Form::Squared => pts.push(Complex64::new(edge, 0.0)),
            Form::Symmetrized => {
                pts.push(Complex64::new(edge.sqrt(), 0.0));
                pts.push(Complex64::new(-edge.sqrt(), 0.0));
            }
        }
        pts
    }

    fn track(&self, target: Complex64) -> Result<Complex64> {
        let cfg = &self.config;
        let z0 = Complex64::new(0.0, cfg.anchor_height);
        let mut roots = self.roots_at(z0, None)?;
        let asymptotic = -z0.inv();
        let mut idx = nearest(&roots, asymptotic).0;
        let singular = self.singular_points();

        let path = target - z0;
        let mut t = 0.0;
        let mut z = z0;
        let mut h = cfg.max_step;
        while t < 1.0 {
            // The root varies on the length scale of the distance to the
            // nearest singular point; never step further than a fraction of it.
            let reach = singular.iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min);
            let h_reach = 0.25 * reach / path.norm();
            let h_step = h.min(h_reach);
            let t_next = (t + h_step).min(1.0);
            if t_next <= t {
                return Err(self.lost(z, target));
            }
            let z_next = z0 + path * t_next;
            let s = roots[idx];
            let old_gap = separation(&roots, idx);
            let (pz, ps) = equation_gradient(self.m, z, s, self.form);
            let predicted = s - pz / ps * (z_next - z);

            let accepted = self
                .roots_at(z_next, Some(&roots))
                .ok()
                .and_then(|next| {
                    let (j, miss) = nearest(&next, predicted);
                    let gap = separation(&next, j);
                    let clear = gap >= cfg.collision_guard
                        && miss.is_finite()
                        && miss < 0.25 * gap.min(old_gap);
                    clear.then_some((next, j))
                });

            match accepted {
                Some((next, j)) => {
                    roots = next;
                    idx = j;
                    t = t_next;
                    z = z_next;
                    h = (2.0 * h_step).min(cfg.max_step);
                }
                None => {
                    h = 0.5 * h_step;
                    if h < cfg.min_step * h_reach.min(1.0) {
                        return Err(self.lost(z_next, target));
                    }
                }
            }
        }
        Ok(roots[idx])
    }

    fn lost(&self, z: Complex64, target: Complex64) -> Error {
        Error::BranchTracking {
            z,
            detail: format!(
                "roots collide or step underflow while continuing toward {target} (m = {}, {})",
                self.m, self.form
            ),
        }
    }

    /// A few Newton steps, kept only while they reduce the residual.
    fn polish(&self, z: Complex64, mut s: Complex64) -> Complex64 {
        let mut best = equation_residual(self.m, z, s, self.form).norm();
        for _ in 0..4 {
            let (_, ds) = equation_gradient(self.m, z, s, self.form);
            let cand = s - equation_residual(self.m, z, s, self.form) / ds;
            if !cand.is_finite() {
                break;
            }
            let r = equation_residual(self.m, z, cand, self.form).norm();
            if r < best {
                best = r;
                s = cand;
            } else {
                break;
            }
        }
        s
    }
}

/// Distance from `points[i]` to the closest other point.
fn separation(points: &[Complex64], i: usize) -> f64 {
    points
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, r)| (r - points[i]).norm())
        .fold(f64::INFINITY, f64::min)
}

fn nearest(points: &[Complex64], target: Complex64) -> (usize, f64) {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p - target).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, f64::INFINITY))
}

/// Solve for the Herglotz root at `z` with the default configuration.
pub fn solve_stieltjes(m: u32, z: Complex64, form: Form) -> Result<StieltjesSample> {
    StieltjesSolver::new(m, form)?.solve(z)
}

/// `z s(z^2)`, the symmetrized transform built from the squared-form solve.
///
/// `z` must lie in the open first quadrant, or on the positive imaginary
/// axis; in the latter case `z^2` is on the negative real axis, outside the
/// support, and `s` is evaluated just above it.
pub fn symmetrize_stieltjes(m: u32, z: Complex64) -> Result<Complex64> {
    if !z.is_finite() || z.im <= 0.0 || z.re < 0.0 {
        return Err(Error::invalid(format!(
            "z = {z} is outside the closed first quadrant (Re z >= 0, Im z > 0)"
        )));
    }
    let w = z * z;
    if z.re == 0.0 || w.im <= 0.0 {
        // w sits on the negative real axis, off the support, where s is real
        // analytic: s(w + i eps) = s(w) + i eps s'(w) + O(eps^2), so the real
        // part is the limit to second order.
        let sample = solve_stieltjes(m, Complex64::new(w.re, REAL_AXIS_OFFSET), Form::Squared)?;
        return Ok(z * sample.s.re);
    }
    Ok(z * solve_stieltjes(m, w, Form::Squared)?.s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MomentTable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Marchenko–Pastur (ratio 1) transform: root of z s^2 + z s + 1 with
    /// positive imaginary part.
    fn mp_oracle(z: Complex64) -> Complex64 {
        let disc = (z * z - 4.0 * z).sqrt();
        let a = (-z + disc) / (2.0 * z);
        let b = (-z - disc) / (2.0 * z);
        assert!((a.im > 0.0) != (b.im > 0.0), "exactly one MP root in C+ at {z}");
        if a.im > 0.0 {
            a
        } else {
            b
        }
    }

    #[test]
    fn mp_at_i() {
        let s = solve_stieltjes(1, c(0.0, 1.0), Form::Squared).unwrap().s;
        assert!((s - c(0.3003, 0.6248)).norm() < 1e-4, "{s}");
        assert!((s - mp_oracle(c(0.0, 1.0))).norm() < 1e-12);
    }

    #[test]
    fn mp_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let z = c(rng.gen_range(-10.0..10.0), rng.gen_range(1e-3..10.0));
            let s = solve_stieltjes(1, z, Form::Squared).unwrap().s;
            assert!((s - mp_oracle(z)).norm() < 1e-10, "z={z} s={s}");
        }
    }

    #[test]
    fn m2_large_z_near_series() {
        let z = c(0.0, 10.0);
        let s = solve_stieltjes(2, z, Form::Squared).unwrap().s;
        assert!((s - c(0.0, 0.1)).norm() <= 0.01);
    }

    #[test]
    fn symmetrized_m1_at_2i() {
        let s = solve_stieltjes(1, c(0.0, 2.0), Form::Symmetrized).unwrap().s;
        assert!((s - c(0.0, 2f64.sqrt() - 1.0)).norm() < 1e-12, "{s}");
    }

    #[test]
    fn residual_examples() {
        let z = c(0.0, 10.0);
        let r = equation_residual(3, z, -z.inv(), Form::Squared);
        assert!((r - c(0.0, -0.1)).norm() < 1e-15);
        assert!((r.norm() - 0.1).abs() < 1e-15);
        let r = equation_residual(2, c(0.0, 1.0), c(0.0, 0.0), Form::Symmetrized);
        assert_eq!(r, c(1.0, 0.0));
    }

    #[test]
    fn lower_half_plane_rejected() {
        assert!(matches!(
            solve_stieltjes(2, c(1.0, 0.0), Form::Squared),
            Err(Error::InvalidArgument(_))
        ));
        assert!(solve_stieltjes(2, c(1.0, -1.0), Form::Symmetrized).is_err());
        assert!(solve_stieltjes(0, c(1.0, 1.0), Form::Squared).is_err());
    }

    #[test]
    fn herglotz_and_residual_on_grid() {
        for m in 1..=4 {
            for form in [Form::Squared, Form::Symmetrized] {
                let solver = StieltjesSolver::new(m, form).unwrap();
                for i in 0..=20 {
                    for j in 0..=8 {
                        let re = -10.0 + i as f64;
                        let im = 1e-3 * 10f64.powf(j as f64 / 2.0);
                        let sample = solver.solve(c(re, im)).unwrap();
                        assert!(sample.s.im > 0.0, "m={m} {form} z={}", sample.z);
                        assert!(sample.residual_mag < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn reflection_through_conjugate() {
        // Real coefficients: conj(s(z)) solves the equation at conj(z).
        for m in 1..=4 {
            for &z in &[c(0.5, 0.2), c(3.0, 1.0), c(-2.0, 0.5)] {
                let s = solve_stieltjes(m, z, Form::Squared).unwrap().s;
                let r = equation_residual(m, z.conj(), s.conj(), Form::Squared);
                assert!(r.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_law_is_odd() {
        // For a symmetric law, s(-conj z) = -conj s(z).
        for m in 1..=4 {
            for &z in &[c(0.7, 0.3), c(2.0, 1.5)] {
                let a = solve_stieltjes(m, z, Form::Symmetrized).unwrap().s;
                let b = solve_stieltjes(m, -z.conj(), Form::Symmetrized).unwrap().s;
                assert!((b + a.conj()).norm() < 1e-10, "m={m} z={z}");
            }
        }
    }

    #[test]
    fn large_v_asymptotics() {
        for m in 1..=5 {
            let alpha1 = MomentTable::closed(m, 1).unwrap().to_f64()[1];
            for j in 0..=12 {
                let v = 10f64 * 10f64.powf(j as f64 / 4.0);
                let z = c(0.0, v);
                let s = solve_stieltjes(m, z, Form::Squared).unwrap().s;
                assert!((s + z.inv()).norm() <= alpha1 / (v * v), "m={m} v={v}");
            }
        }
    }

    #[test]
    fn symmetrize_examples() {
        let s = symmetrize_stieltjes(1, c(0.0, 2.0)).unwrap();
        assert!((s - c(0.0, 2f64.sqrt() - 1.0)).norm() < 1e-8, "{s}");

        let z = c(1.0, 1.0);
        let a = symmetrize_stieltjes(1, z).unwrap();
        let b = solve_stieltjes(1, z, Form::Symmetrized).unwrap().s;
        assert!((a - b).norm() < 1e-10);

        // Odd-moment series of the symmetric law, m = 2: -1/z - 1/z^3 - 3/z^5.
        let z = c(0.0, 10.0);
        let s = symmetrize_stieltjes(2, z).unwrap();
        let series = -z.inv() - z.powi(-3);
        assert!((s - series).norm() <= 2.0 * 3.0 * z.norm().powi(-5), "{s}");
    }

    #[test]
    fn symmetrize_rejects_other_quadrants() {
        assert!(symmetrize_stieltjes(2, c(-1.0, 1.0)).is_err());
        assert!(symmetrize_stieltjes(2, c(1.0, -1.0)).is_err());
        assert!(symmetrize_stieltjes(2, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn symmetrize_matches_direct_solve_on_grid() {
        for m in 1..=4 {
            for i in 1..=6 {
                for j in 1..=6 {
                    let z = c(0.5 * i as f64, 0.25 * j as f64);
                    let a = symmetrize_stieltjes(m, z).unwrap();
                    let b = solve_stieltjes(m, z, Form::Symmetrized).unwrap().s;
                    assert!((a - b).norm() < 1e-10, "m={m} z={z}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn double_root_at_support_edge() {
        // P and dP/ds vanish together at z = edge, s = -(m+1)/(m z).
        for m in 1..=5 {
            let z = c(support_edge(m), 0.0);
            let s = -f64::from(m + 1) / (f64::from(m) * z);
            let p = equation_residual(m, z, s, Form::Squared);
            let (_, ps) = equation_gradient(m, z, s, Form::Squared);
            assert!(p.norm() < 1e-12 && ps.norm() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn picks_branch_when_several_roots_are_herglotz() {
        // For m >= 2 there are points where more than one root has Im > 0;
        // the tracked root must still agree with the moment series far out.
        let mut found = false;
        for m in 2..=4 {
            for i in 0..=40 {
                let z = c(-10.0 + 0.5 * i as f64, 0.5);
                let roots = equation_polynomial(m, z, Form::Squared).roots().unwrap();
                if roots.iter().filter(|r| r.im > 0.0).count() >= 2 {
                    found = true;
                    let s = solve_stieltjes(m, z, Form::Squared).unwrap().s;
                    assert!(s.im > 0.0);
                }
            }
        }
        assert!(found, "expected a point with two upper-half-plane roots");
    }

    #[test]
    fn form_round_trips_through_str() {
        for f in [Form::Squared, Form::Symmetrized] {
            assert_eq!(f.to_string().parse::<Form>().unwrap(), f);
        }
        assert!("both".parse::<Form>().is_err());
    }
}
