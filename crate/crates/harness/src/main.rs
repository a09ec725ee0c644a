use std::path::PathBuf;
use std::process::ExitCode;

use cies_core::weighting::SchemeParams;
use cies_core::SchemeRegistry;
use cies_harness::confound::{confound_analysis, write_confound};
use cies_harness::data::{synthesize, write_csv};
use cies_harness::report::{ensure_dir, write_json};
use cies_harness::schemes::{weighting_comparison, write_schemes};
use cies_harness::sweep::{epsilon_sweep, write_sweep};
use cies_harness::table_stats::{read_columns, table_stats};
use cies_harness::verify::{verify, write_verify};
use cies_harness::{
    run_pipeline, write_run, Condition, CsvSource, DatasetSource, HarnessError, Result, RunConfig,
    SyntheticSpec,
};
use cies_models::{ExplainerRegistry, ModelRegistry};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cies",
    version,
    about = "Stability scores for feature attributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score sampled test instances for every model and condition.
    Run(Common),
    /// Repeat the run over a grid of noise levels with shared draws.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated noise levels, ascending.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Check score range, identity, the Lipschitz bound and convergence.
    Verify(Common),
    /// Compare all weighting schemes on the same run.
    Schemes(Common),
    /// Correlate scores with prediction stability.
    Confound(Common),
    /// Paired tests on two columns of an existing score table.
    Stats {
        /// Per-instance score table (CSV).
        table: PathBuf,
        #[arg(long, default_value = "cies_harmonic")]
        a: String,
        #[arg(long, default_value = "baseline")]
        b: String,
        #[arg(long, default_value_t = 10_000)]
        resamples: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also write the result as JSON into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic two-class dataset as CSV.
    Synth {
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        numerical: Option<usize>,
        #[arg(long)]
        categorical: Option<usize>,
        #[arg(long)]
        positive_fraction: Option<f64>,
        #[arg(long)]
        missing_fraction: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV input; replaces the configured dataset.
    #[arg(long, requires = "target")]
    data: Option<PathBuf>,
    /// Target column of `--data`.
    #[arg(long)]
    target: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate the oversampled condition next to the raw one.
    #[arg(long)]
    smote: bool,
    /// Comma-separated model names.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long)]
    explainer: Option<String>,
    /// harmonic, exponential, log, topk, uniform or all.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let (Some(path), Some(target)) = (&self.data, &self.target) {
            cfg.dataset = DatasetSource::Csv(CsvSource {
                path: path.clone(),
                target: target.clone(),
                ..Default::default()
            });
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.neighbors {
            cfg.neighbors = v;
        }
        if let Some(v) = self.instances {
            cfg.instances = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.smote {
            cfg.conditions = vec![Condition::Raw, Condition::Smote];
        }
        if let Some(names) = &self.models {
            let reg = ModelRegistry::default();
            cfg.models = names
                .iter()
                .map(|n| reg.lookup(n))
                .collect::<std::result::Result<_, _>>()?;
        }
        if let Some(name) = &self.explainer {
            cfg.explainer = ExplainerRegistry::default().lookup(name)?;
        }
        if let Some(sel) = &self.scheme {
            cfg.schemes = SchemeRegistry::default()
                .select(sel, SchemeParams::default())
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.config()?;
            let out = run_pipeline(&cfg)?;
            write_run(&cfg, &out, &cfg.out_dir)?;
            for c in &out.report.configurations {
                println!(
                    "{:<8} {:<6} {:<10} n={:<4} cies={:.4} baseline={:.4}",
                    c.model,
                    c.condition,
                    c.explainer,
                    c.n_instances,
                    c.primary_mean().unwrap_or(f64::NAN),
                    c.baseline.as_ref().map_or(f64::NAN, |b| b.mean),
                );
            }
            if out.report.bound_violations() > 0 {
                return Err(HarnessError::Invariant(format!(
                    "{} instances fell below their Lipschitz bound",
                    out.report.bound_violations()
                )));
            }
        }
        Command::Sweep { common, grid } => {
            let mut cfg = common.config()?;
            if let Some(grid) = grid {
                cfg.sweep_grid = grid;
                cfg.validate()?;
            }
            let report = epsilon_sweep(&cfg)?;
            write_sweep(&report, &cfg.out_dir)?;
            for r in &report.rows {
                println!(
                    "{:<8} {:<6} eps={:<6} mean={:.4} std={:.4}",
                    r.model, r.condition, r.epsilon, r.mean_cies, r.std_cies
                );
            }
            if report.bound_violations() > 0 {
                return Err(HarnessError::Invariant(format!(
                    "{} bound monotonicity violations",
                    report.bound_violations()
                )));
            }
        }
        Command::Verify(common) => {
            let cfg = common.config()?;
            let report = verify(&cfg)?;
            write_verify(&report, &cfg.out_dir)?;
            println!(
                "range {}/{} identity {}/{} bound violations {}/{}",
                report.range.cies_in_range,
                report.range.cies_checked,
                report.identity.exact_ones,
                report.identity.instances,
                report.bound.violations,
                report.bound.checked
            );
            if let Some(c) = &report.convergence {
                for p in &c.points {
                    println!("K={:<3} std={:.5}", p.k, p.std);
                }
            }
            if report.has_violations() {
                return Err(HarnessError::Invariant(
                    "verification found violations".into(),
                ));
            }
        }
        Command::Schemes(common) => {
            let cfg = common.config()?;
            let report = weighting_comparison(&cfg)?;
            write_schemes(&report, &cfg.out_dir)?;
            for r in &report.rankings {
                for (scheme, order) in &r.rankings {
                    println!(
                        "{:<6} {:<10} {:<12} {}",
                        r.condition,
                        r.explainer,
                        scheme,
                        order.join(" > ")
                    );
                }
            }
        }
        Command::Confound(common) => {
            let cfg = common.config()?;
            let report = confound_analysis(&cfg)?;
            write_confound(&report, &cfg.out_dir)?;
            for r in &report.rows {
                println!(
                    "{:<8} {:<6} rho={} jaccard={}",
                    r.model,
                    r.condition,
                    r.confound
                        .rho
                        .map_or("undefined".into(), |v| format!("{v:.3}")),
                    r.confound
                        .mean_jaccard
                        .map_or("-".into(), |v| format!("{v:.3}")),
                );
            }
        }
        Command::Stats {
            table,
            a,
            b,
            resamples,
            level,
            seed,
            out,
        } => {
            let (xs, ys) = read_columns(&table, &a, &b)?;
            let stats = table_stats(&a, &b, &xs, &ys, resamples, level, seed);
            match &out {
                Some(dir) => {
                    ensure_dir(dir)?;
                    write_json(&dir.join("stats.json"), &stats)?;
                }
                None => print!("{}", cies_harness::report::to_json(&stats)),
            }
        }
        Command::Synth {
            out,
            rows,
            numerical,
            categorical,
            positive_fraction,
            missing_fraction,
            seed,
        } => {
            let d = SyntheticSpec::default();
            let spec = SyntheticSpec {
                n_rows: rows.unwrap_or(d.n_rows),
                n_numerical: numerical.unwrap_or(d.n_numerical),
                n_informative: d.n_informative.min(numerical.unwrap_or(d.n_numerical)),
                n_categorical: categorical.unwrap_or(d.n_categorical),
                positive_fraction: positive_fraction.unwrap_or(d.positive_fraction),
                missing_fraction: missing_fraction.unwrap_or(d.missing_fraction),
                seed: seed.unwrap_or(d.seed),
                ..d
            };
            write_csv(&synthesize(&spec)?, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { 1 } else { 0 };
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
