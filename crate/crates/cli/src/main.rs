//! Command-line surface: compute tail constants, correct p-values, run the
//! tail simulation protocol, evaluate error bounds, and estimate K_g from
//! p-value files.
//!
//! Exit codes: 0 success, 2 malformed spec/input, 3 divergence or failed
//! numeric route, 4 degenerate sample, 5 sample budget exceeded, 6
//! finite-difference instability, 7 empty exceedance set.

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::PathBuf;
use tailcorrect::density::JointDensitySpec;
use tailcorrect::kg::{self, KgOptions, KgResult, TestSpec};
use tailcorrect::sim::{self, SimConfig};
use tailcorrect::stats;
use tailcorrect::Error as CoreError;

const SCHEMA: &str = "tailcorrect/1";

#[derive(Parser)]
#[command(name = "tailcorrect", version, about = "Tail constants and corrected p-values for t-, F-, and Welch statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the tail constant K_g for a statistic and a density.
    Kg(KgArgs),
    /// Raw and corrected one-sided p-values from a statistic value or data.
    Pval(PvalArgs),
    /// Run the tail simulation protocol and write the eCDF CSV.
    Simulate(SimulateArgs),
    /// Absolute error bound d(u) and relative-rate constant C3.
    Bounds(BoundsArgs),
    /// Estimate K_g from a file of p-values (origin slope).
    Estimate(EstimateArgs),
    /// List the built-in simulation scenarios.
    Scenarios(ScenariosArgs),
}

#[derive(Args, Clone)]
struct TestArgs {
    /// Statistic: ost | tst | welch | f
    #[arg(long)]
    test: TestKind,
    /// Sample size (one-sample t).
    #[arg(long)]
    n: Option<usize>,
    /// First sample size (two-sample statistics).
    #[arg(long)]
    n1: Option<usize>,
    /// Second sample size (two-sample statistics).
    #[arg(long)]
    n2: Option<usize>,
}

#[derive(Copy, Clone, ValueEnum)]
enum TestKind {
    Ost,
    Tst,
    Welch,
    F,
}

impl TestArgs {
    fn to_spec(&self) -> Result<TestSpec, Failure> {
        let need = |v: Option<usize>, what: &str| {
            v.ok_or_else(|| Failure::input(format!("--{what} is required for this test")))
        };
        let spec = match self.test {
            TestKind::Ost => TestSpec::OneSampleT { n: need(self.n, "n")? },
            TestKind::Tst => {
                TestSpec::TwoSampleT { n1: need(self.n1, "n1")?, n2: need(self.n2, "n2")? }
            }
            TestKind::Welch => {
                TestSpec::Welch { n1: need(self.n1, "n1")?, n2: need(self.n2, "n2")? }
            }
            TestKind::F => TestSpec::FTest { n1: need(self.n1, "n1")?, n2: need(self.n2, "n2")? },
        };
        spec.validate().map_err(Failure::from)?;
        Ok(spec)
    }
}

#[derive(Args)]
struct KgArgs {
    #[command(flatten)]
    test: TestArgs,
    /// Density spec: inline JSON or a path to a JSON file.
    #[arg(long)]
    density: String,
    /// Force a route instead of auto-selection.
    #[arg(long)]
    method: Option<MethodArg>,
    /// Quadrature relative tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Monte Carlo sample count (F-statistic route).
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: u64,
    #[arg(long, default_value_t = 20130610)]
    seed: u64,
    /// Write the JSON result here as well as to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum MethodArg {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Args)]
struct PvalArgs {
    #[command(flatten)]
    test: TestArgs,
    /// Statistic value t*.
    #[arg(long)]
    t_star: Option<f64>,
    /// Whitespace/CSV data file; each line is one data vector.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Use this K_g instead of computing one.
    #[arg(long)]
    kg: Option<f64>,
    /// Density spec (to compute K_g when --kg is absent).
    #[arg(long)]
    density: Option<String>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: u64,
    #[arg(long, default_value_t = 20130610)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in scenario name (see `scenarios`).
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    test: Option<TestKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    density: Option<String>,
    /// Zoom factor r; the eCDF window is [0, 1/r].
    #[arg(long)]
    zoom: Option<u64>,
    /// Simulated vectors N (default 10000 * zoom).
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 20130610)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    grid_points: usize,
    /// Use this K_g instead of computing one.
    #[arg(long)]
    kg: Option<f64>,
    /// eCDF CSV destination; the sidecar lands at <out>.json.
    #[arg(long, short)]
    out: PathBuf,
    /// Also dump every raw p-value, one per line.
    #[arg(long)]
    pvalues_out: Option<PathBuf>,
    /// Refuse runs drawing more than this many scalars (N * dim).
    #[arg(long, default_value_t = 100_000_000)]
    max_samples: u64,
    /// Run even past the sample budget.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    test: TestArgs,
    #[arg(long)]
    density: String,
    /// Tail threshold u.
    #[arg(long)]
    u: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: u64,
    #[arg(long, default_value_t = 20130610)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// File of p-values (whitespace or newline separated).
    #[arg(long)]
    pvalues: PathBuf,
    /// Slope threshold; defaults to the documented N-dependent rule.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScenariosArgs {
    #[arg(long, default_value = "json")]
    format: String,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::InvalidParameter(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::NotSpd(_)
            | CoreError::ExpansionOutOfRange(_)
            | CoreError::InvalidInput(_) => 2,
            CoreError::QuadratureFailure(_) | CoreError::Divergent(_) | CoreError::MonteCarlo(_) => 3,
            CoreError::DegenerateSample(_) => 4,
            CoreError::FiniteDifference(_) => 6,
            CoreError::EmptyExceedance(_) => 7,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: 2, message: e.to_string() }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        // Thread count must never change results; it only changes speed.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let result = match cli.command {
        Command::Kg(args) => cmd_kg(args),
        Command::Pval(args) => cmd_pval(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Scenarios(args) => cmd_scenarios(args),
    };
    if let Err(f) = result {
        eprintln!("error: {}", f.message);
        std::process::exit(f.code);
    }
}

fn load_density(arg: &str) -> Result<JointDensitySpec, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| Failure::input(format!("cannot read density file {arg}: {e}")))?
    };
    JointDensitySpec::from_json_str(&text).map_err(Failure::from)
}

fn provenance(
    spec: Option<&TestSpec>,
    density: Option<&JointDensitySpec>,
    seed: u64,
) -> Result<serde_json::Value, Failure> {
    let mut hasher = Sha256::new();
    if let Some(s) = spec {
        hasher.update(serde_json::to_string(s).expect("test spec serializes").as_bytes());
    }
    if let Some(d) = density {
        hasher.update(d.to_json().map_err(Failure::from)?.to_string().as_bytes());
    }
    let hash = hex_string(&hasher.finalize());
    Ok(serde_json::json!({
        "spec_hash": hash,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
    }))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn emit(value: &serde_json::Value, output: Option<&PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    println!("{text}");
    if let Some(path) = output {
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}

fn kg_options(tol: f64, mc_samples: u64, seed: u64) -> KgOptions {
    KgOptions {
        rel_tol: tol,
        abs_tol: (tol * 1e-2).max(1e-14),
        mc_samples,
        seed,
        se_ceiling: None,
    }
}

fn compute_kg(
    spec: &TestSpec,
    density: &JointDensitySpec,
    method: Option<MethodArg>,
    opts: &KgOptions,
) -> Result<KgResult, Failure> {
    let res = match method {
        None => kg::kg_auto(spec, density, opts)?,
        Some(MethodArg::ClosedForm) => kg::kg_closed_form(spec, density)?.ok_or_else(|| {
            Failure::input("no closed form is known for this statistic/density pair")
        })?,
        Some(MethodArg::Quadrature) => match *spec {
            TestSpec::OneSampleT { n } => kg::kg_ost_quadrature(density, n, opts)?,
            TestSpec::TwoSampleT { .. } | TestSpec::Welch { .. } => {
                if let Some(cov) = density.as_zero_mean_gaussian() {
                    kg::kg_tst_gaussian(&cov, spec, opts)?
                } else {
                    kg::kg_tst_quadrature(density, spec, opts)?
                }
            }
            TestSpec::FTest { n1, n2 } => {
                if n1 == 2 {
                    kg::kg_f_quadrature_n1_2(density, n2, opts)?
                } else {
                    return Err(Failure::input(
                        "deterministic quadrature for the F statistic needs n1 = 2",
                    ));
                }
            }
        },
        Some(MethodArg::MonteCarlo) => match *spec {
            TestSpec::FTest { n1, n2 } => kg::kg_f_integral(density, n1, n2, opts)?,
            _ => return Err(Failure::input("the monte-carlo route applies to the F statistic")),
        },
    };
    Ok(res)
}

fn cmd_kg(args: KgArgs) -> Result<(), Failure> {
    let spec = args.test.to_spec()?;
    let density = load_density(&args.density)?;
    let opts = kg_options(args.tol, args.mc_samples, args.seed);
    let res = compute_kg(&spec, &density, args.method, &opts)?;
    let mut value = serde_json::to_value(&res).expect("kg result serializes");
    let obj = value.as_object_mut().expect("kg result is an object");
    obj.insert("schema".into(), SCHEMA.into());
    obj.insert("test".into(), serde_json::to_value(spec).expect("spec"));
    obj.insert("provenance".into(), provenance(Some(&spec), Some(&density), args.seed)?);
    emit(&value, args.output.as_ref())
}

fn parse_numbers(text: &str) -> Vec<f64> {
    text.split([',', ';', ' ', '\t'])
        .filter(|t| !t.trim().is_empty())
        .filter_map(|t| t.trim().parse::<f64>().ok())
        .collect()
}

fn cmd_pval(args: PvalArgs) -> Result<(), Failure> {
    let spec = args.test.to_spec()?;
    let opts = kg_options(args.tol, args.mc_samples, args.seed);
    let (kg_res, density) = match (args.kg, args.density.as_deref()) {
        (Some(v), _) => {
            if !(v.is_finite() && v > 0.0) {
                return Err(Failure::input("--kg must be a positive number"));
            }
            (KgResult::exact(v), None)
        }
        (None, Some(d)) => {
            let density = load_density(d)?;
            let res = kg::kg_auto(&spec, &density, &opts)?;
            (res, Some(density))
        }
        (None, None) => {
            return Err(Failure::input("pval needs either --kg or --density to correct with"))
        }
    };

    let stats: Vec<stats::StatisticValue> = match (args.t_star, args.data.as_ref()) {
        (Some(t), None) => {
            vec![stats::StatisticValue { t_star: t, spec, welch_df: None }]
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let mut out = Vec::new();
            for (ln, line) in text.lines().enumerate() {
                let nums = parse_numbers(line);
                if nums.is_empty() {
                    continue;
                }
                let s = stats::compute_statistic(&spec, &nums).map_err(|e| {
                    let mut f = Failure::from(e);
                    f.message = format!("line {}: {}", ln + 1, f.message);
                    f
                })?;
                out.push(s);
            }
            if out.is_empty() {
                return Err(Failure::input("data file holds no data vectors"));
            }
            out
        }
        _ => return Err(Failure::input("pval needs exactly one of --t-star or --data")),
    };

    let mut results = Vec::new();
    for s in &stats {
        let p = stats::pvalues(s, &kg_res)?;
        let mut row = serde_json::json!({
            "t_star": s.t_star,
            "p_raw": p.p_raw,
            "p_corrected": p.p_corrected,
            "outside_approximation_regime": p.outside_approximation_regime(),
        });
        if let Some(pw) = p.p_welch {
            row.as_object_mut().unwrap().insert("p_welch".into(), pw.into());
        }
        if let Some(df) = s.welch_df {
            row.as_object_mut().unwrap().insert("welch_df".into(), df.into());
        }
        results.push(row);
    }
    let value = serde_json::json!({
        "schema": SCHEMA,
        "test": spec,
        "kg": kg_res.value,
        "results": results,
        "provenance": provenance(Some(&spec), density.as_ref(), args.seed)?,
    });
    emit(&value, args.output.as_ref())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let started = std::time::Instant::now();
    let mut cfg: SimConfig = match (&args.scenario, &args.density) {
        (Some(name), _) => sim::find_scenario(name)
            .ok_or_else(|| Failure::input(format!("unknown scenario '{name}'")))?
            .config,
        (None, Some(d)) => {
            let test = args.test.ok_or_else(|| Failure::input("--test is required"))?;
            let spec = TestArgs { test, n: args.n, n1: args.n1, n2: args.n2 }.to_spec()?;
            let density = load_density(d)?;
            SimConfig::new(spec, density, args.zoom.unwrap_or(1000))
        }
        (None, None) => {
            return Err(Failure::input("simulate needs --scenario or --test/--density"))
        }
    };
    if let Some(z) = args.zoom {
        cfg.zoom_factor = z;
        cfg.n_samples = 10_000 * z;
    }
    if let Some(n) = args.samples {
        cfg.n_samples = n;
    }
    cfg.seed = args.seed;
    cfg.grid_points = args.grid_points;
    cfg.keep_pvalues = args.pvalues_out.is_some();
    cfg.validate().map_err(Failure::from)?;

    let scalar_draws = cfg.n_samples.saturating_mul(cfg.spec.dim() as u64);
    if scalar_draws > args.max_samples && !args.force {
        return Err(Failure {
            code: 5,
            message: format!(
                "run would draw {scalar_draws} scalars, above the budget of {} \
                 (raise --max-samples or pass --force)",
                args.max_samples
            ),
        });
    }

    let opts = kg_options(1e-9, 1_000_000, cfg.seed);
    let kg_res = match args.kg {
        Some(v) if v.is_finite() && v > 0.0 => KgResult::exact(v),
        Some(_) => return Err(Failure::input("--kg must be a positive number")),
        None => kg::kg_auto(&cfg.spec, &cfg.density, &opts)?,
    };
    eprintln!(
        "simulating {} vectors (zoom {}, K_g = {:.6})",
        cfg.n_samples, cfg.zoom_factor, kg_res.value
    );
    let series = sim::run_simulation(&cfg, &kg_res)?;

    let mut csv = Vec::new();
    series.write_csv(&mut csv)?;
    std::fs::write(&args.out, &csv)?;

    if let (Some(path), Some(ps)) = (args.pvalues_out.as_ref(), series.pvalues_raw.as_ref()) {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for p in ps {
            writeln!(w, "{}", sim::fmt_g(*p, 12))?;
        }
    }

    let sidecar = serde_json::json!({
        "schema": SCHEMA,
        "config": {
            "test": cfg.spec,
            "density": cfg.density.to_json().map_err(Failure::from)?,
            "zoom_factor": cfg.zoom_factor,
            "n_samples": cfg.n_samples,
            "seed": cfg.seed,
            "grid_points": cfg.grid_points,
        },
        "kg": kg_res,
        "counts": series.counts,
        "degeneracy_count": series.degeneracy_count,
        "runtime_seconds": started.elapsed().as_secs_f64(),
        "provenance": provenance(Some(&cfg.spec), Some(&cfg.density), cfg.seed)?,
    });
    let sidecar_path = {
        let mut s = args.out.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    };
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar).expect("sidecar") + "\n")?;
    eprintln!(
        "wrote {} and {} ({} degenerate draws resampled)",
        args.out.display(),
        sidecar_path.display(),
        series.degeneracy_count
    );
    Ok(())
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), Failure> {
    let spec = args.test.to_spec()?;
    let density = load_density(&args.density)?;
    let opts = kg_options(args.tol, args.mc_samples, args.seed);
    let b = kg::error_bounds(&spec, &density, args.u, &opts)?;
    let value = serde_json::json!({
        "schema": SCHEMA,
        "test": spec,
        "u": b.u,
        "d_value": b.d_value,
        "c3": b.c3,
        "triple": [b.alpha, b.m, b.k],
        "kg": b.kg,
        "grad_sup_norm": b.grad_sup_norm,
        "hess_trace": b.hess_trace,
        "provenance": provenance(Some(&spec), Some(&density), args.seed)?,
    });
    emit(&value, args.output.as_ref())
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.pvalues)?;
    let ps: Vec<f64> = text.split_whitespace().filter_map(|t| t.parse::<f64>().ok()).collect();
    if ps.is_empty() {
        return Err(Failure::input("p-value file holds no numbers"));
    }
    if let Some(&bad) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Failure::input(format!("p-value {bad} outside [0,1]")));
    }
    let tau = args.tau.unwrap_or_else(|| sim::default_tau(ps.len() as u64));
    let est = sim::estimate_kg_slope(&ps, tau)?;
    let value = serde_json::json!({
        "schema": SCHEMA,
        "n_pvalues": ps.len(),
        "tau": est.tau,
        "kg_hat": est.kg_hat,
        "count_below": est.count_below,
        "standard_error": est.standard_error,
        "consistency_flag": est.consistency_flag,
    });
    emit(&value, args.output.as_ref())
}

fn cmd_scenarios(args: ScenariosArgs) -> Result<(), Failure> {
    let list = sim::builtin_scenarios();
    match args.format.as_str() {
        "json" => {
            let rows: Vec<serde_json::Value> = list
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "name": s.name,
                        "description": s.description,
                        "test": s.config.spec,
                        "zoom_factor": s.config.zoom_factor,
                        "n_samples": s.config.n_samples,
                    })
                })
                .collect();
            let value = serde_json::json!({ "schema": SCHEMA, "scenarios": rows });
            emit(&value, None)
        }
        "csv" => {
            println!("name,test,zoom_factor,n_samples,description");
            for s in list {
                println!(
                    "{},{},{},{},\"{}\"",
                    s.name,
                    s.config.spec.name(),
                    s.config.zoom_factor,
                    s.config.n_samples,
                    s.description
                );
            }
            Ok(())
        }
        other => Err(Failure::input(format!("unknown format '{other}' (json or csv)"))),
    }
}
