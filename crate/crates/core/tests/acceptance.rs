//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use fusscat::analysis::{convergence_study_with_cdf, limit_cdf, StudyConfig};
use fusscat::density::{cdf_from_density, density_at, density_grid, symmetrize_cdf, DEFAULT_POINTS, DEFAULT_V_OFFSET};
use fusscat::moments::{fuss_catalan_closed, fuss_catalan_recurrence, MomentTable};
use fusscat::rmt_sim::{
    frobenius_sq, lindeberg_functional, matrix_power_scaled, sample_matrix, simulate_trial, squared_singular_values,
    symmetrized_block_spectrum, trial_seed, truncate_entries, EntryDistribution, TruncationPolicy,
};
use fusscat::stieltjes::{symmetrize_stieltjes, Form, StieltjesSolver};

#[derive(Deserialize)]
struct Thresholds {
    moments: MomentsCfg,
    mp_oracle: MpCfg,
    solver: SolverCfg,
    density: DensityCfg,
    symmetrization: SymCfg,
    convergence: ConvCfg,
    identities: IdCfg,
    norm_growth: NormCfg,
}

#[derive(Deserialize)]
struct MomentsCfg {
    m_max: u32,
    k_max: usize,
    max_seconds: f64,
}

#[derive(Deserialize)]
struct MpCfg {
    transform_points: usize,
    transform_seed: u64,
    transform_tol: f64,
    density_tol: f64,
    n: usize,
    trials: usize,
    sim_seed: u64,
    delta_max: f64,
    max_seconds: f64,
}

#[derive(Deserialize)]
struct SolverCfg {
    m_max: u32,
    residual_tol: f64,
    im_min: f64,
    im_max: f64,
    re_min: f64,
    re_max: f64,
    re_points: usize,
    im_points: usize,
    max_seconds: f64,
}

#[derive(Deserialize)]
struct DensityCfg {
    m_max: u32,
    k_max: u32,
    mass_tol: f64,
    moment_rel_tol: f64,
    max_seconds: f64,
}

#[derive(Deserialize)]
struct SymCfg {
    m_max: u32,
    transform_tol: f64,
    cdf_tol: f64,
}

#[derive(Deserialize)]
struct ConvCfg {
    m: u32,
    n: Vec<usize>,
    trials: usize,
    seed: u64,
    delta_1024_max: f64,
}

#[derive(Deserialize)]
struct IdCfg {
    seed: u64,
    mean_tol: f64,
    block_tol: f64,
}

#[derive(Deserialize)]
struct NormCfg {
    m_max: u32,
    n: Vec<usize>,
    seeds: u64,
    seed: u64,
    lo: f64,
    hi: f64,
    slope_tol: f64,
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_time(start: Instant, limit: f64, detail: String) -> Outcome {
    let secs = start.elapsed().as_secs_f64();
    check(secs < limit, format!("{detail}; {secs:.2}s (limit {limit}s)"))
}

fn mp_transform(z: Complex64) -> Complex64 {
    let r = (z * z - 4.0 * z).sqrt();
    let a = (-z + r) / (2.0 * z);
    if a.im > 0.0 {
        a
    } else {
        (-z - r) / (2.0 * z)
    }
}

fn moment_exactness(t: &MomentsCfg) -> Outcome {
    let start = Instant::now();
    for m in 1..=t.m_max {
        let rec = fuss_catalan_recurrence(m, t.k_max).map_err(|e| e.to_string())?;
        for k in 0..=t.k_max {
            let closed = fuss_catalan_closed(m, k).map_err(|e| e.to_string())?;
            if Some(&closed) != rec.get(k) {
                return Err(format!("m={m} k={k}: closed {closed} vs recurrence {:?}", rec.get(k)));
            }
        }
    }
    let prefix: Vec<String> = MomentTable::closed(2, 5)
        .map_err(|e| e.to_string())?
        .values()
        .iter()
        .map(|v| v.to_string())
        .collect();
    if prefix != ["1", "1", "3", "12", "55", "273"] {
        return Err(format!("m=2 prefix {prefix:?}"));
    }
    within_time(start, t.max_seconds, format!("m<= {}, k<= {} exact; prefix {}", t.m_max, t.k_max, prefix.join(",")))
}

fn mp_oracle(t: &MpCfg) -> Outcome {
    let start = Instant::now();
    let solver = StieltjesSolver::new(1, Form::Squared).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(t.transform_seed);
    let mut worst = 0.0f64;
    for _ in 0..t.transform_points {
        let z = Complex64::new(rng.gen_range(-10.0..10.0), 10f64.powf(rng.gen_range(-3.0..1.0)));
        let s = solver.solve(z).map_err(|e| e.to_string())?.s;
        worst = worst.max((s - mp_transform(z)).norm());
    }
    let rho2 = density_at(&solver, 2.0, DEFAULT_V_OFFSET).map_err(|e| e.to_string())?;
    let rho_err = (rho2 - 1.0 / (2.0 * PI)).abs();

    let cdf = limit_cdf(1).map_err(|e| e.to_string())?;
    let cfg = StudyConfig {
        m: 1,
        n_list: vec![t.n],
        trials: t.trials,
        dist: EntryDistribution::complex_gaussian(),
        seed: t.sim_seed,
        truncation: TruncationPolicy::default(),
    };
    let delta = convergence_study_with_cdf(&cfg, &cdf).map_err(|e| e.to_string())?[0].delta_mean;
    let detail = format!(
        "max |s - s_MP| = {worst:.2e} (tol {:e}); |rho(2) - 1/2pi| = {rho_err:.2e} (tol {:e}); \
         Delta(n={}, {} trials) = {delta:.4} (max {})",
        t.transform_tol, t.density_tol, t.n, t.trials, t.delta_max
    );
    if worst < t.transform_tol && rho_err < t.density_tol && delta < t.delta_max {
        within_time(start, t.max_seconds, detail)
    } else {
        Err(detail)
    }
}

fn solver_contract(t: &SolverCfg) -> Outcome {
    let start = Instant::now();
    let (mut worst_res, mut min_im, mut count) = (0.0f64, f64::INFINITY, 0usize);
    let (lmin, lmax) = (t.im_min.ln(), t.im_max.ln());
    for m in 1..=t.m_max {
        for form in [Form::Squared, Form::Symmetrized] {
            let solver = StieltjesSolver::new(m, form).map_err(|e| e.to_string())?;
            for i in 0..t.im_points {
                let im = (lmin + (lmax - lmin) * i as f64 / (t.im_points - 1) as f64).exp();
                for j in 0..t.re_points {
                    let re = t.re_min + (t.re_max - t.re_min) * j as f64 / (t.re_points - 1) as f64;
                    let p = solver
                        .solve(Complex64::new(re, im))
                        .map_err(|e| format!("m={m} {form} z={re}+{im}i: {e}"))?;
                    worst_res = worst_res.max(p.residual_mag);
                    min_im = min_im.min(p.s.im);
                    count += 1;
                }
            }
        }
    }
    let detail = format!(
        "{count} points, m<= {}, both forms: max residual {worst_res:.2e} (tol {:e}), min Im s {min_im:.3e}",
        t.m_max, t.residual_tol
    );
    if worst_res < t.residual_tol && min_im > 0.0 {
        within_time(start, t.max_seconds, detail)
    } else {
        Err(detail)
    }
}

fn density_closure(t: &DensityCfg) -> Outcome {
    let start = Instant::now();
    let (mut worst_mass, mut worst_mom) = (0.0f64, 0.0f64);
    for m in 1..=t.m_max {
        let d = density_grid(m, DEFAULT_POINTS, DEFAULT_V_OFFSET).map_err(|e| e.to_string())?;
        worst_mass = worst_mass.max((d.total_mass() - 1.0).abs());
        let alpha = MomentTable::closed(m, t.k_max as usize).map_err(|e| e.to_string())?.to_f64();
        for k in 1..=t.k_max {
            worst_mom = worst_mom.max((d.moment(k) / alpha[k as usize] - 1.0).abs());
        }
    }
    let detail = format!(
        "m<= {}: max |mass - 1| = {worst_mass:.2e} (tol {:e}), max rel moment err k<= {} = {worst_mom:.2e} (tol {:e})",
        t.m_max, t.mass_tol, t.k_max, t.moment_rel_tol
    );
    if worst_mass <= t.mass_tol && worst_mom <= t.moment_rel_tol {
        within_time(start, t.max_seconds, detail)
    } else {
        Err(detail)
    }
}

fn symmetrization(t: &SymCfg) -> Outcome {
    let mut worst_s = 0.0f64;
    let mut worst_g = 0.0f64;
    for m in 1..=t.m_max {
        let solver = StieltjesSolver::new(m, Form::Symmetrized).map_err(|e| e.to_string())?;
        for i in 0..12 {
            for j in 1..=12 {
                let z = Complex64::new(0.25 * i as f64, 0.25 * j as f64);
                let via = symmetrize_stieltjes(m, z).map_err(|e| e.to_string())?;
                let direct = solver.solve(z).map_err(|e| e.to_string())?.s;
                worst_s = worst_s.max((via - direct).norm());
            }
        }
        let g = symmetrize_cdf(&cdf_from_density(&density_grid(m, 512, DEFAULT_V_OFFSET).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
        for &x in g.x() {
            worst_g = worst_g.max((g.eval(x) + g.eval(-x) - 1.0).abs());
        }
    }
    check(
        worst_s < t.transform_tol && worst_g <= t.cdf_tol,
        format!(
            "m<= {}: max |z s(z^2) - s~(z)| = {worst_s:.2e} (tol {:e}); max |G~(x) + G~(-x) - 1| = {worst_g:.2e}",
            t.m_max, t.transform_tol
        ),
    )
}

fn convergence_trend(t: &ConvCfg) -> Outcome {
    let start = Instant::now();
    let cdf = limit_cdf(t.m).map_err(|e| e.to_string())?;
    let cfg = StudyConfig {
        m: t.m,
        n_list: t.n.clone(),
        trials: t.trials,
        dist: EntryDistribution::complex_gaussian(),
        seed: t.seed,
        truncation: TruncationPolicy::default(),
    };
    let rows = convergence_study_with_cdf(&cfg, &cdf).map_err(|e| e.to_string())?;
    let deltas: Vec<f64> = rows.iter().map(|r| r.delta_mean).collect();
    // Probe index 1 is z = 1 + i.
    let res: Vec<f64> = rows.iter().map(|r| r.residual_mean[1]).collect();
    let decreasing = deltas.windows(2).all(|w| w[1] < w[0]);
    let last = *deltas.last().unwrap();
    let res_drop = res.last().unwrap() < res.first().unwrap();
    check(
        decreasing && last < t.delta_1024_max && res_drop,
        format!(
            "m={}, n={:?}, {} trials: mean Delta {:?} (last < {}), mean |delta(1+i)| {:?}; {:.1}s",
            t.m,
            t.n,
            t.trials,
            deltas.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>(),
            t.delta_1024_max,
            res.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>(),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn exact_identities(t: &IdCfg) -> Outcome {
    let mut worst_mean = 0.0f64;
    let mut worst_block = 0.0f64;
    let mut worst_lind = 0.0f64;
    let laws = ["complex_gaussian", "real_gaussian", "rademacher", "centered_bernoulli(0.2)", "student_t(5)"];
    for (c, law) in laws.iter().enumerate() {
        let dist: EntryDistribution = law.parse().map_err(|e: fusscat::Error| e.to_string())?;
        for m in 1..=3u32 {
            let n = 64;
            let seed = trial_seed(t.seed, c as u64, u64::from(m));
            let trial = simulate_trial(n, m, &dist, seed, TruncationPolicy { enabled: true, ..Default::default() })
                .map_err(|e| e.to_string())?;
            worst_mean = worst_mean.max((trial.spectrum.mean() - trial.frobenius_per_n).abs());

            let x = sample_matrix(n, &dist, seed).map_err(|e| e.to_string())?;
            let w = matrix_power_scaled(x.entries(), m).map_err(|e| e.to_string())?;
            let sv2 = squared_singular_values(w.as_ref()).map_err(|e| e.to_string())?;
            let mut expect: Vec<f64> = sv2.iter().flat_map(|v| [v.sqrt(), -v.sqrt()]).collect();
            expect.sort_by(f64::total_cmp);
            let block = symmetrized_block_spectrum(w.as_ref()).map_err(|e| e.to_string())?;
            for (a, b) in block.iter().zip(&expect) {
                worst_block = worst_block.max((a - b).abs());
            }

            // A threshold low enough that truncation actually bites.
            for tau in [0.05, 0.1, 0.125] {
                let tr = truncate_entries(&x, tau).map_err(|e| e.to_string())?;
                worst_lind = worst_lind.max(lindeberg_functional(&tr, tau).map_err(|e| e.to_string())?);
            }
        }
    }
    check(
        worst_mean <= t.mean_tol && worst_block <= t.block_tol && worst_lind == 0.0,
        format!(
            "max |mean - ||W||^2/n| = {worst_mean:.2e} (tol {:e}); max block-spectrum err = {worst_block:.2e} (tol {:e}); \
             max post-truncation Lindeberg = {worst_lind}",
            t.mean_tol, t.block_tol
        ),
    )
}

fn norm_growth(t: &NormCfg) -> Outcome {
    let dist = EntryDistribution::complex_gaussian();
    let mut report = Vec::new();
    let mut ok = true;
    for m in 1..=t.m_max {
        let mut means = Vec::new();
        for &n in &t.n {
            let mut acc = 0.0;
            for s in 0..t.seeds {
                let x = sample_matrix(n, &dist, trial_seed(t.seed, (u64::from(m) << 32) | n as u64, s))
                    .map_err(|e| e.to_string())?;
                let w = matrix_power_scaled(x.entries(), m).map_err(|e| e.to_string())?;
                let v = frobenius_sq(w.as_ref()) / n as f64;
                ok &= (t.lo..=t.hi).contains(&v);
                acc += v;
            }
            means.push(acc / t.seeds as f64);
        }
        let lx: Vec<f64> = t.n.iter().map(|&n| (n as f64).ln()).collect();
        let ly: Vec<f64> = means.iter().map(|v| v.ln()).collect();
        let (mx, my) = (lx.iter().sum::<f64>() / lx.len() as f64, ly.iter().sum::<f64>() / ly.len() as f64);
        let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        ok &= slope.abs() <= t.slope_tol;
        report.push(format!("m={m}: means {:?} slope {slope:+.4}", means.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()));
    }
    check(
        ok,
        format!("{} (range [{}, {}], |slope| <= {})", report.join("; "), t.lo, t.hi, t.slope_tol),
    )
}

fn main() {
    faer::set_global_parallelism(faer::Par::Seq);
    let t: Thresholds =
        toml::from_str(include_str!("../calibration/thresholds.toml")).expect("calibration/thresholds.toml");

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("moment exactness", Box::new(|| moment_exactness(&t.moments))),
        ("m=1 oracle", Box::new(|| mp_oracle(&t.mp_oracle))),
        ("solver contract", Box::new(|| solver_contract(&t.solver))),
        ("density closure", Box::new(|| density_closure(&t.density))),
        ("symmetrization consistency", Box::new(|| symmetrization(&t.symmetrization))),
        ("convergence trend", Box::new(|| convergence_trend(&t.convergence))),
        ("exact identities", Box::new(|| exact_identities(&t.identities))),
        ("norm growth", Box::new(|| norm_growth(&t.norm_growth))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
