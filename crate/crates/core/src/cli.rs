//! Command-line front end: argument parsing, thread budget, CSV emission.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::analysis::{convergence_study, StudyConfig, PROBES, REPORTED_MOMENTS};
use crate::density::{cdf_from_density, density_grid, DEFAULT_POINTS, DEFAULT_V_OFFSET};
use crate::error::{Error, Result};
use crate::moments::MomentTable;
use crate::rmt_sim::{simulate_trial, trial_seed, EntryDistribution, TruncationPolicy, DEFAULT_TAU_EXP};
use crate::stieltjes::{Form, StieltjesSolver};

pub const THREADS_ENV: &str = "FUSSCAT_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fusscat", version, about = "Spectra of powers of random matrices")]
pub struct Cli {
    /// Output file (a directory for `simulate`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads, or `auto`. `FUSSCAT_THREADS` takes precedence.
    #[arg(long, global = true, default_value = "auto")]
    pub threads: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact Fuss-Catalan moments.
    Moments(MomentsArgs),
    /// Stieltjes transform of the limiting law.
    Stieltjes(StieltjesArgs),
    /// Limiting density and distribution function.
    Density(DensityArgs),
    /// Simulated squared singular values, one CSV per trial.
    Simulate(SimulateArgs),
    /// Convergence of simulated spectra toward the limit.
    Converge(ConvergeArgs),
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub kmax: usize,
}

#[derive(Debug, Args)]
pub struct StieltjesArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long, default_value = "squared")]
    pub form: Form,
    /// Single point `re,im`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub z: Option<Complex64>,
    /// Rectangular grid `re0:re1:nre,im0:im1:nim`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub points: usize,
    #[arg(long, default_value_t = DEFAULT_V_OFFSET)]
    pub v: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "complex_gaussian")]
    pub dist: EntryDistribution,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub truncate: bool,
    #[arg(long, default_value_t = DEFAULT_TAU_EXP)]
    pub tau_exp: f64,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub m: u32,
    /// Comma-separated matrix sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
    #[arg(long, default_value = "complex_gaussian")]
    pub dist: EntryDistribution,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// `re0:re1:nre,im0:im1:nim`, endpoints inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub re: (f64, f64, usize),
    pub im: (f64, f64, usize),
}

impl GridSpec {
    pub fn points(&self) -> Vec<Complex64> {
        let im = linspace(self.im);
        let re = linspace(self.re);
        im.iter()
            .flat_map(|&y| re.iter().map(move |&x| Complex64::new(x, y)))
            .collect()
    }
}

fn linspace((a, b, n): (f64, f64, usize)) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{s:?} is not a finite number"))
}

pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected re,im but got {s:?}"))?;
    Ok(Complex64::new(parse_f64(re)?, parse_f64(im)?))
}

pub fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let axis = |part: &str| -> std::result::Result<(f64, f64, usize), String> {
        let f: Vec<&str> = part.split(':').collect();
        if f.len() != 3 {
            return Err(format!("expected lo:hi:count but got {part:?}"));
        }
        let n: usize = f[2].trim().parse().map_err(|_| format!("bad count {:?}", f[2]))?;
        if n == 0 {
            return Err("grid count must be positive".into());
        }
        Ok((parse_f64(f[0])?, parse_f64(f[1])?, n))
    };
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected re-axis,im-axis but got {s:?}"))?;
    Ok(GridSpec {
        re: axis(re)?,
        im: axis(im)?,
    })
}

/// Thread budget from `FUSSCAT_THREADS` or `--threads`; `None` means auto.
pub fn resolve_threads(flag: &str, env: Option<&str>) -> Result<Option<usize>> {
    let raw = env.unwrap_or(flag).trim();
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    match raw.parse::<usize>() {
        Ok(0) | Err(_) => Err(Error::invalid(format!(
            "thread count {raw:?} is neither a positive integer nor auto"
        ))),
        Ok(n) => Ok(Some(n)),
    }
}

/// One CSV file produced by a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    /// File name used when writing into an output directory.
    pub name: String,
    pub body: String,
}

fn header(schema: &str, config: &str) -> String {
    format!("# schema={schema},version=1\n# config={config}\n")
}

impl Command {
    /// Flags in sorted, normalized form; `--out` and `--threads` are
    /// excluded since they do not affect the numbers.
    pub fn canonical(&self) -> String {
        let mut flags: Vec<(&str, String)> = match self {
            Command::Moments(a) => vec![("m", a.m.to_string()), ("kmax", a.kmax.to_string())],
            Command::Stieltjes(a) => {
                let mut f = vec![("m", a.m.to_string()), ("form", a.form.to_string())];
                if let Some(z) = a.z {
                    f.push(("z", format!("{},{}", z.re, z.im)));
                }
                if let Some(g) = a.grid {
                    f.push((
                        "grid",
                        format!("{}:{}:{},{}:{}:{}", g.re.0, g.re.1, g.re.2, g.im.0, g.im.1, g.im.2),
                    ));
                }
                f
            }
            Command::Density(a) => vec![
                ("m", a.m.to_string()),
                ("points", a.points.to_string()),
                ("v", a.v.to_string()),
            ],
            Command::Simulate(a) => vec![
                ("m", a.m.to_string()),
                ("n", a.n.to_string()),
                ("dist", a.dist.to_string()),
                ("trials", a.trials.to_string()),
                ("seed", a.seed.to_string()),
                ("truncate", a.truncate.to_string()),
                ("tau-exp", a.tau_exp.to_string()),
            ],
            Command::Converge(a) => vec![
                ("m", a.m.to_string()),
                (
                    "n",
                    a.n.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
                ),
                ("trials", a.trials.to_string()),
                ("dist", a.dist.to_string()),
                ("seed", a.seed.to_string()),
            ],
        };
        flags.sort();
        let mut s = self.name().to_string();
        for (k, v) in flags {
            let _ = write!(s, " --{k}={v}");
        }
        s
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Moments(_) => "moments",
            Command::Stieltjes(_) => "stieltjes",
            Command::Density(_) => "density",
            Command::Simulate(_) => "simulate",
            Command::Converge(_) => "converge",
        }
    }

    /// Run the command and render its CSV output.
    pub fn execute(&self) -> Result<Vec<Document>> {
        let config = self.canonical();
        let single = |schema: &str, body: String| {
            vec![Document {
                name: format!("{schema}.csv"),
                body: header(schema, &config) + &body,
            }]
        };
        match self {
            Command::Moments(a) => {
                let t = MomentTable::closed(a.m, a.kmax)?;
                let mut body = String::from("k,alpha\n");
                for (k, v) in t.values().iter().enumerate() {
                    let _ = writeln!(body, "{k},{v}");
                }
                Ok(single("moments", body))
            }
            Command::Stieltjes(a) => {
                let mut zs: Vec<Complex64> = a.z.into_iter().collect();
                if let Some(g) = a.grid {
                    zs.extend(g.points());
                }
                if zs.is_empty() {
                    return Err(Error::invalid("stieltjes needs --z or --grid"));
                }
                let solver = StieltjesSolver::new(a.m, a.form)?;
                let mut body = String::from("re_z,im_z,re_s,im_s,residual\n");
                for z in zs {
                    let p = solver.solve(z)?;
                    let _ = writeln!(body, "{},{},{},{},{}", z.re, z.im, p.s.re, p.s.im, p.residual_mag);
                }
                Ok(single("stieltjes", body))
            }
            Command::Density(a) => {
                let d = density_grid(a.m, a.points, a.v)?;
                let cdf = cdf_from_density(&d)?;
                let mut body = String::from("x,rho,G\n");
                for (&x, &r) in d.x().iter().zip(d.rho()) {
                    let _ = writeln!(body, "{x},{r},{}", cdf.eval(x));
                }
                Ok(single("density", body))
            }
            Command::Simulate(a) => simulate(a, &config),
            Command::Converge(a) => {
                let cfg = StudyConfig {
                    m: a.m,
                    n_list: a.n.clone(),
                    trials: a.trials,
                    dist: a.dist,
                    seed: a.seed,
                    truncation: TruncationPolicy::default(),
                };
                let rows = convergence_study(&cfg)?;
                let mut body = String::from("n,m,trials,delta_mean,delta_std");
                for k in 1..=REPORTED_MOMENTS {
                    let _ = write!(body, ",mom_err_{k}");
                }
                body.push_str(",res_i,res_1p1i,res_3p1i,lindeberg\n");
                debug_assert_eq!(PROBES.len(), 3);
                for r in rows {
                    let _ = write!(body, "{},{},{},{},{}", r.n, r.m, r.trials, r.delta_mean, r.delta_std);
                    for e in r.moment_err.iter().chain(&r.residual_mean) {
                        let _ = write!(body, ",{e}");
                    }
                    let _ = writeln!(body, ",{}", r.lindeberg_value);
                }
                Ok(single("converge", body))
            }
        }
    }
}

fn simulate(a: &SimulateArgs, config: &str) -> Result<Vec<Document>> {
    use rayon::prelude::*;
    if a.trials == 0 {
        return Err(Error::invalid("simulate needs at least one trial"));
    }
    if !(a.tau_exp > 0.0 && a.tau_exp.is_finite()) {
        return Err(Error::invalid(format!("tau exponent {} must be positive", a.tau_exp)));
    }
    let policy = TruncationPolicy {
        enabled: a.truncate,
        tau_exp: a.tau_exp,
    };
    // Same cell keying as the convergence study, so trials line up.
    let cell = (u64::from(a.m) << 32) | a.n as u64;
    (0..a.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(a.seed, cell, t as u64);
            let trial = simulate_trial(a.n, a.m, &a.dist, seed, policy)?;
            let p = trial.spectrum.provenance();
            let mut body = header("spectrum", config);
            let _ = writeln!(
                body,
                "# n={},m={},dist={},seed={},truncated={}",
                a.n, a.m, p.dist, p.seed, p.truncated
            );
            body.push_str("index,value\n");
            for (i, v) in trial.spectrum.values().iter().enumerate() {
                let _ = writeln!(body, "{},{v}", i + 1);
            }
            Ok(Document {
                name: format!("trial_{t:04}.csv"),
                body,
            })
        })
        .collect()
}

fn write_documents(docs: &[Document], out: Option<&Path>, many: bool) -> Result<()> {
    match out {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for d in docs {
                lock.write_all(d.body.as_bytes())?;
            }
            lock.flush()?;
        }
        Some(dir) if many => {
            std::fs::create_dir_all(dir)?;
            for d in docs {
                std::fs::write(dir.join(&d.name), &d.body)?;
            }
        }
        Some(path) => {
            let body: String = docs.iter().map(|d| d.body.as_str()).collect();
            std::fs::write(path, body)?;
        }
    }
    Ok(())
}

/// Parse `argv` (program name first), run, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let line = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{line}");
            return EXIT_INVALID;
        }
    };
    let env = std::env::var(THREADS_ENV).ok();
    match run_parsed(&cli, env.as_deref()) {
        Ok(()) => EXIT_OK,
        Err(e) if e.is_numerical() => {
            eprintln!("numerical failure: {e} [{}]", cli.command.canonical());
            EXIT_NUMERICAL
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn run_parsed(cli: &Cli, env_threads: Option<&str>) -> Result<()> {
    let threads = resolve_threads(&cli.threads, env_threads)?;
    // Dense linear algebra stays sequential inside each worker; all
    // parallelism comes from the pool below.
    faer::set_global_parallelism(faer::Par::Seq);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))?;
    let docs = pool.install(|| cli.command.execute())?;
    let many = matches!(cli.command, Command::Simulate(_));
    write_documents(&docs, cli.out.as_deref(), many)
}
