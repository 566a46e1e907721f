use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use pac_mcts::confidence::{
    graceful_degradation_cap, lower_bound_samples, sample_complexity_lambert,
    sample_complexity_upper, u_dist, u_stat, ComplexityInputs, ConfidenceConfig, LowerBound,
    SampleBound,
};
use pac_mcts::harness::{
    run_sweep, write_record_lines, write_sweep_csv, ExperimentConfig, RunConfig,
};
use pac_mcts::oracle::VerifySuite;

#[derive(Parser)]
#[command(
    name = "pac-mcts",
    version,
    about = "Bias-aware PAC pruning simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single replication and write run_record.json.
    Run(FileArgs),
    /// Run an experiment grid and write sweep.csv and records.jsonl.
    Sweep(FileArgs),
    /// Run the oracle suite and write verify_report.json.
    Verify(VerifyArgs),
    /// Print radii, sample complexities and bounds for one parameter set.
    Theory(TheoryArgs),
}

#[derive(Args)]
struct Output {
    /// Output directory, created if absent.
    #[arg(long, env = "PAC_MCTS_OUT", default_value = "results")]
    out: PathBuf,
    /// Overwrite existing result files.
    #[arg(long)]
    force: bool,
    /// Override the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct FileArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite config; the default suite is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long)]
    gap: f64,
    #[arg(long, default_value_t = 0.0)]
    bias: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Frontier size M.
    #[arg(long, default_value_t = 2)]
    arms: usize,
    #[arg(long, default_value_t = 1.0)]
    radius_factor: f64,
    /// Sample count at which the radii are evaluated.
    #[arg(long, default_value_t = 1)]
    samples: u64,
}

/// Errors that map to exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn read_config(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn prepare_out(output: &Output, files: &[&str]) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(&output.out)
        .with_context(|| format!("cannot create {}", output.out.display()))?;
    let paths: Vec<PathBuf> = files.iter().map(|f| output.out.join(f)).collect();
    if !output.force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(usage(format!(
                "{} exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    Ok(paths)
}

fn with_pool<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> anyhow::Result<T> + Send,
) -> anyhow::Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    builder.build()?.install(f)
}

fn cmd_run(args: FileArgs) -> anyhow::Result<ExitCode> {
    let text = read_config(&args.config)?;
    let config = RunConfig::from_json(&text)
        .map_err(|e| usage(format!("{}: {e}", args.config.display())))?;
    let paths = prepare_out(&args.output, &["run_record.json"])?;
    let record = config.run(args.output.seed)?;
    let mut json = serde_json::to_string_pretty(&record)?;
    json.push('\n');
    fs::write(&paths[0], json)?;
    println!(
        "selected arm {} (true value {}, optimum {}): {}",
        record.selected_arm,
        record.selected_true_mu,
        record.optimal_mu,
        if record.correct {
            "correct"
        } else {
            "incorrect"
        }
    );
    println!(
        "{} samples over {} epochs, {} arms pruned, stopped by {:?}",
        record.total_samples,
        record.epochs,
        record.pruned(),
        record.termination
    );
    println!("wrote {}", paths[0].display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: FileArgs) -> anyhow::Result<ExitCode> {
    let text = read_config(&args.config)?;
    let mut config = ExperimentConfig::from_json(&text)
        .map_err(|e| usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.output.seed {
        config.base_seed = seed;
    }
    let paths = prepare_out(&args.output, &["sweep.csv", "records.jsonl"])?;
    eprintln!(
        "running {} cells x {} policies x {} replications",
        config.cell_count(),
        config.policies.len(),
        config.replications
    );
    let result = with_pool(args.output.workers, || Ok(run_sweep(&config)?))?;
    let mut csv = BufWriter::new(fs::File::create(&paths[0])?);
    write_sweep_csv(&mut csv, &result.rows)?;
    csv.flush()?;
    let mut jsonl = BufWriter::new(fs::File::create(&paths[1])?);
    write_record_lines(&mut jsonl, &result.records)?;
    jsonl.flush()?;
    for row in &result.rows {
        eprintln!(
            "{:<18} L={:<8} sigma={:<6} N={:<6} c={:<5} pcs={:.3} pruning={:.3}",
            row.policy,
            row.bias_bound,
            row.sigma,
            row.budget,
            row.radius_factor,
            row.pcs,
            row.pruning_rate
        );
    }
    println!("wrote {} and {}", paths[0].display(), paths[1].display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let mut suite = match &args.config {
        Some(path) => VerifySuite::from_json(&read_config(path)?)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => VerifySuite::default(),
    };
    if let Some(seed) = args.output.seed {
        if let Some(c) = suite.coverage.as_mut() {
            c.seed = seed;
        }
        if let Some(s) = suite.safety.as_mut() {
            s.base_seed = seed;
        }
        if let Some(m) = suite.minimality.as_mut() {
            m.seed = seed;
        }
    }
    let paths = prepare_out(&args.output, &["verify_report.json"])?;
    eprintln!("running verification suite");
    let report = with_pool(args.output.workers, || Ok(suite.run()?))?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    fs::write(&paths[0], json)?;
    if let Some(c) = &report.coverage {
        println!(
            "coverage     {}  rate {} (allowance {:.6})",
            verdict(c.passed),
            c.rate,
            c.allowance
        );
    }
    if let Some(s) = &report.safety {
        println!(
            "safety       {}  strict: {} optimal prunes under the event ({} of {} replays held it); proportion: {} eliminations of the optimum when the condition held",
            verdict(s.passed),
            s.strict.optimal_pruned_under_event,
            s.strict.event_held,
            s.strict.replays,
            s.proportion.optimal_eliminated_when_held
        );
    }
    if let Some(m) = &report.minimality {
        println!(
            "minimality   {}  {} failures, {} solver disagreements over {} inputs",
            verdict(m.passed),
            m.minimality_failures,
            m.solver_disagreements,
            m.trials
        );
    }
    println!("wrote {}", paths[0].display());
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failed: {}", report.failures.join(", "));
        Ok(ExitCode::from(1))
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_theory(a: TheoryArgs) -> anyhow::Result<ExitCode> {
    let config = ConfidenceConfig::new(a.sigma, a.delta)
        .with_bias(a.bias)
        .with_epsilon(a.epsilon)
        .with_radius_factor(a.radius_factor);
    config.validate().map_err(|e| usage(e.to_string()))?;
    if a.arms < 1 || a.samples < 1 {
        bail!(usage("--arms and --samples must be at least 1"));
    }
    if !(a.gap > 0.0 && a.gap.is_finite()) {
        bail!(usage("--gap must be finite and positive"));
    }
    let inputs = ComplexityInputs::new(a.gap, a.arms, config);
    let n = a.samples;
    let upper = |b: SampleBound| match b {
        SampleBound::Finite(n) => n.to_string(),
        SampleBound::Infeasible => "infeasible separation".into(),
    };
    println!(
        "gap {}  L {}  sigma {}  delta {}  epsilon {}  M {}  c_stat {}",
        a.gap, a.bias, a.sigma, a.delta, a.epsilon, a.arms, a.radius_factor
    );
    println!("u_stat(n={n})              {}", u_stat(n, a.arms, &config)?);
    println!("u_dist(n={n})              {}", u_dist(n, a.arms, &config)?);
    println!("effective gap            {}", inputs.effective_gap());
    println!("separation margin        {}", inputs.separation_margin());
    println!(
        "upper bound (search)     {}",
        upper(sample_complexity_upper(&inputs)?)
    );
    let lambert = match sample_complexity_lambert(&inputs) {
        Ok(b) => upper(b),
        Err(e) => format!("not evaluated ({e})"),
    };
    println!("upper bound (Lambert W)  {lambert}");
    let lower = match lower_bound_samples(a.gap, &config)? {
        LowerBound::Finite(v) => v.to_string(),
        LowerBound::GapReversed => "gap structurally reversed".into(),
    };
    println!("lower bound E[N]         {lower}");
    println!(
        "degradation cap          {}",
        graceful_degradation_cap(&config)
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Theory(a) => cmd_theory(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
