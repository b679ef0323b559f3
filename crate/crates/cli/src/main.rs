use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maskscope_core::pipeline::{self, PipelineConfig};
use maskscope_core::{Error, Result};

#[derive(Parser)]
#[command(name = "maskscope", version, about = "Attitude fusion, ideology projection and model fitting for interaction logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive per-user comment and like attitudes from an event log.
    Ingest(ConfigArgs),
    /// Fuse comment and like attitudes and tabulate the cohort.
    Fuse(ConfigArgs),
    /// Score profiles on the ideology scale and assign groups.
    Ideology(ConfigArgs),
    /// Fit the pure-types model to an observations CSV.
    FitPuretypes(ConfigArgs),
    /// Fit the logistic regression to a regression-rows CSV.
    FitLogit(ConfigArgs),
    /// Generate a seeded synthetic cohort, regression rows and event log.
    Simulate(ConfigArgs),
    /// Run the full pipeline and write the report bundle.
    Report(ConfigArgs),
}

/// Every flag overrides the matching key of the config file.
#[derive(Args, Default)]
struct ConfigArgs {
    /// Key-value config file (`key = value`, `#` comments).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generic override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    events: Option<String>,
    #[arg(long)]
    profiles: Option<String>,
    #[arg(long)]
    bias_table: Option<String>,
    #[arg(long)]
    observations: Option<String>,
    #[arg(long)]
    regression_rows: Option<String>,
    #[arg(long, short = 'o')]
    output_dir: Option<String>,
    #[arg(long)]
    post_lexicon: Option<String>,
    #[arg(long)]
    comment_lexicon: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    grid_resolution: Option<String>,
    #[arg(long)]
    grid_exponent: Option<String>,
    #[arg(long)]
    min_subscriptions: Option<String>,
    /// An age, or `none` to disable the age filter.
    #[arg(long)]
    max_age: Option<String>,
    #[arg(long)]
    apply_age_to_puretypes: Option<String>,
    #[arg(long)]
    min_support: Option<String>,
    #[arg(long)]
    cutoff_low: Option<String>,
    #[arg(long)]
    cutoff_high: Option<String>,
    #[arg(long)]
    age_bin_width: Option<String>,
    #[arg(long)]
    x_bin_width: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    p_true: Option<String>,
    #[arg(long)]
    q_true: Option<String>,
    #[arg(long)]
    logit_n: Option<String>,
    /// Five comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    logit_coefficients: Option<String>,
}

impl ConfigArgs {
    fn flags(&self) -> [(&'static str, &Option<String>); 25] {
        [
            ("events", &self.events),
            ("profiles", &self.profiles),
            ("bias_table", &self.bias_table),
            ("observations", &self.observations),
            ("regression_rows", &self.regression_rows),
            ("output_dir", &self.output_dir),
            ("post_lexicon", &self.post_lexicon),
            ("comment_lexicon", &self.comment_lexicon),
            ("delta", &self.delta),
            ("grid_resolution", &self.grid_resolution),
            ("grid_exponent", &self.grid_exponent),
            ("min_subscriptions", &self.min_subscriptions),
            ("max_age", &self.max_age),
            ("apply_age_to_puretypes", &self.apply_age_to_puretypes),
            ("min_support", &self.min_support),
            ("cutoff_low", &self.cutoff_low),
            ("cutoff_high", &self.cutoff_high),
            ("age_bin_width", &self.age_bin_width),
            ("x_bin_width", &self.x_bin_width),
            ("seed", &self.seed),
            ("n", &self.n),
            ("p_true", &self.p_true),
            ("q_true", &self.q_true),
            ("logit_n", &self.logit_n),
            ("logit_coefficients", &self.logit_coefficients),
        ]
    }

    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v)?;
        }
        for (key, value) in self.flags() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    let stage = |args: &ConfigArgs, f: fn(&PipelineConfig) -> Result<pipeline::StageOutput>| -> Result<()> {
        let out = f(&args.resolve()?)?;
        println!("{}", out.summary.trim_end());
        print_files(&out.files);
        Ok(())
    };
    match &cli.command {
        Command::Ingest(a) => stage(a, pipeline::run_ingest),
        Command::Fuse(a) => stage(a, pipeline::run_fuse),
        Command::Ideology(a) => stage(a, pipeline::run_ideology),
        Command::FitPuretypes(a) => stage(a, pipeline::run_fit_puretypes),
        Command::FitLogit(a) => stage(a, pipeline::run_fit_logit),
        Command::Simulate(a) => {
            let files = pipeline::simulate(&a.resolve()?)?;
            print_files(&files);
            Ok(())
        }
        Command::Report(a) => {
            let bundle = pipeline::run_report(&a.resolve()?)?;
            let fit = &bundle.analysis.puretypes;
            println!(
                "users {}, pure-types sample {}, regression rows {}, p = {:.3}, q = {:.3}",
                bundle.analysis.stages.puretypes[0].count,
                bundle.analysis.observations.len(),
                bundle.analysis.logit.n_used,
                fit.params.p,
                fit.params.q
            );
            print_files(&bundle.files);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.class());
            ExitCode::FAILURE
        }
    }
}
