//! Brute-force spread of the m = 1 Kolmogorov distance over many master seeds.
//!
//! Usage: `cargo run --release -p fusscat --example calibrate [seeds]`

use fusscat::analysis::{convergence_study_with_cdf, limit_cdf, StudyConfig};
use fusscat::rmt_sim::{EntryDistribution, TruncationPolicy};

fn main() -> fusscat::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    faer::set_global_parallelism(faer::Par::Seq);
    let cdf = limit_cdf(1)?;
    let mut deltas = Vec::new();
    for seed in 0..seeds {
        let cfg = StudyConfig {
            m: 1,
            n_list: vec![1024],
            trials: 8,
            dist: EntryDistribution::complex_gaussian(),
            seed,
            truncation: TruncationPolicy::default(),
        };
        deltas.push(convergence_study_with_cdf(&cfg, &cdf)?[0].delta_mean);
    }
    deltas.sort_by(f64::total_cmp);
    let q = |p: f64| deltas[((deltas.len() - 1) as f64 * p).round() as usize];
    println!("seeds = {seeds}");
    println!("min = {}", q(0.0));
    println!("median = {}", q(0.5));
    println!("p99 = {}", q(0.99));
    println!("max = {}", q(1.0));
    Ok(())
}
