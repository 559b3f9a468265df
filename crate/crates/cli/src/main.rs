use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use smoothlearn::bracket::{bracketing_from_text, verify_bracketing};
use smoothlearn::cover::{build_cover, default_sample_size};
use smoothlearn::harness::{
    all_criteria, replicate_suite, run_experiment, ExperimentConfig, ExperimentKind, RunRecord, Verdict,
    DEFAULT_BASE_SEED,
};
use smoothlearn::hypothesis::{hypothesis_to_token, threshold_grid};
use smoothlearn::{stream, Dist, Domain, HypothesisClass};

/// Smoothed online learning and smooth private query release experiments.
#[derive(Parser)]
#[command(name = "smoothlearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hedge over a cover against a smooth adaptive adversary; per-round regret rows.
    OnlineRun(ExpArgs),
    /// MWEM or smooth MWEM on threshold queries; per-seed max error.
    DpAnswer(ExpArgs),
    /// Projected smooth MWEM; per-seed error and smoothness of the release.
    DpRelease(ExpArgs),
    /// Subsampled net mechanism; per-seed score of the released dataset.
    Smalldb(ExpArgs),
    /// Any experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Builds an empirical cover and writes one hypothesis token per line.
    CoverBuild(CoverArgs),
    /// Builds and checks threshold brackets, or checks a bracketing file.
    BracketVerify {
        /// Bracketing text to check against every threshold on the grid.
        #[arg(long)]
        file: Option<PathBuf>,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Runs a pinned replication check: appendixB, regret-sublinear,
    /// mwem-bound, projection-oracle, privacy-ratio, bracket-verify, or all.
    Replicate {
        suite: String,
        #[arg(long, default_value_t = DEFAULT_BASE_SEED)]
        seed: u64,
    },
}

/// Every flag maps to the config field of the same name.
#[derive(Args, Default)]
struct ExpArgs {
    /// Config file to start from; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the effective config here before running.
    #[arg(long)]
    save_config: Option<PathBuf>,
    /// Extra `key=value` settings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(short = 'T', long)]
    horizon: Option<String>,
    #[arg(long, visible_alias = "eps")]
    epsilon: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, visible_alias = "seed")]
    base_seed: Option<String>,
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long)]
    learner: Option<String>,
    #[arg(long)]
    records: Option<String>,
    #[arg(long)]
    queries: Option<String>,
    #[arg(long)]
    mechanism: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    sample_size: Option<String>,
    #[arg(short = 'M', long)]
    net_draws: Option<String>,
    #[arg(short = 'k', long)]
    net_size: Option<String>,
    #[arg(long)]
    family_size: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// CSV path; the record file and any attachments go next to it.
    #[arg(short, long)]
    output: Option<String>,
}

impl ExpArgs {
    fn config(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let cfg = ExperimentConfig::from_text(&text)?;
                if cfg.kind != kind {
                    bail!(
                        "config {} is for `{}`, not `{}`",
                        p.display(),
                        cfg.kind.name(),
                        kind.name()
                    );
                }
                cfg
            }
            None => ExperimentConfig::new(kind),
        };
        let flags = [
            ("n", &self.n),
            ("class", &self.class),
            ("sigma", &self.sigma),
            ("horizon", &self.horizon),
            ("epsilon", &self.epsilon),
            ("delta", &self.delta),
            ("seeds", &self.seeds),
            ("base_seed", &self.base_seed),
            ("adversary", &self.adversary),
            ("learner", &self.learner),
            ("records", &self.records),
            ("queries", &self.queries),
            ("mechanism", &self.mechanism),
            ("window", &self.window),
            ("gamma", &self.gamma),
            ("sample_size", &self.sample_size),
            ("net_draws", &self.net_draws),
            ("net_size", &self.net_size),
            ("family_size", &self.family_size),
            ("trials", &self.trials),
            ("output", &self.output),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("expected KEY=VALUE, got `{kv}`"))?;
            if k.trim() == "kind" {
                bail!("the subcommand fixes `kind`");
            }
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        if let Some(p) = &self.save_config {
            fs::write(p, cfg.to_text()).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value = "threshold1d")]
    class: String,
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    /// Defaults to the sample size the cover lemma asks for.
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long, visible_alias = "base-seed", default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Why the process failed, mapped to the exit code.
enum Failure {
    Invalid(anyhow::Error),
    CheckFailed,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Invalid(e)
    }
}

impl From<smoothlearn::Error> for Failure {
    fn from(e: smoothlearn::Error) -> Self {
        Failure::Invalid(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::CheckFailed) => ExitCode::from(2),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::OnlineRun(a) => experiment(a.config(ExperimentKind::Online)?),
        Command::DpAnswer(a) => experiment(a.config(ExperimentKind::DpAnswer)?),
        Command::DpRelease(a) => experiment(a.config(ExperimentKind::DpRelease)?),
        Command::Smalldb(a) => experiment(a.config(ExperimentKind::SmallDb)?),
        Command::Run { config } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            experiment(ExperimentConfig::from_text(&text)?)
        }
        Command::CoverBuild(a) => cover(a),
        Command::BracketVerify { file: Some(file), exp } => bracket_file(&file, exp.config(ExperimentKind::Brackets)?),
        Command::BracketVerify { file: None, exp } => {
            let record = experiment_record(exp.config(ExperimentKind::Brackets)?)?;
            if record.summary_value("pass") == Some("true") {
                Ok(())
            } else {
                Err(Failure::CheckFailed)
            }
        }
        Command::Replicate { suite, seed } => replicate(&suite, seed),
    }
}

fn experiment(cfg: ExperimentConfig) -> Result<(), Failure> {
    experiment_record(cfg).map(|_| ())
}

fn experiment_record(cfg: ExperimentConfig) -> Result<RunRecord, Failure> {
    let record = run_experiment(&cfg)?;
    match &cfg.output {
        Some(p) => eprintln!("wrote {} ({} rows)", p.display(), record.rows.len()),
        None => print!("{}", record.csv()),
    }
    for (k, v) in &record.summary {
        eprintln!("{k}: {v}");
    }
    eprintln!("config_hash: {}", record.config_hash);
    eprintln!("elapsed: {:.3}s", record.elapsed.as_secs_f64());
    Ok(record)
}

fn cover(a: CoverArgs) -> Result<(), Failure> {
    let d = Domain::unit_grid(a.n)?;
    let class = HypothesisClass::parse(&a.class)?;
    let m = match a.sample_size {
        Some(m) => m,
        None => default_sample_size(class.vc_dim(), a.gamma)?,
    };
    let mut rng = stream(a.seed, 0);
    let cover = build_cover(&class, &d, a.gamma, m, &mut rng)?;
    let mut text = format!(
        "# cover class={} gamma={:?} m={} members={} distinct={} saturated={}\n",
        cover.class_id(),
        cover.gamma(),
        cover.sample_size(),
        cover.len(),
        cover.distinct_points(),
        cover.saturated()
    );
    for h in cover.members() {
        text.push_str(&hypothesis_to_token(h));
        text.push('\n');
    }
    match &a.output {
        Some(p) => {
            fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            eprintln!("wrote {} members to {}", cover.len(), p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn bracket_file(file: &PathBuf, cfg: ExperimentConfig) -> Result<(), Failure> {
    let d = Arc::new(Domain::unit_grid(cfg.n)?);
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let mu = Dist::uniform(d.clone());
    let b = bracketing_from_text(&text, &mu, "threshold1d")?;
    let class = threshold_grid(&d, 0)?
        .iter()
        .map(|h| h.materialize(&d))
        .collect::<smoothlearn::Result<Vec<_>>>()?;
    let report = verify_bracketing(&b, &class);
    println!(
        "brackets: {} epsilon: {} worst_gap: {} bad_brackets: {} uncovered: {}",
        b.len(),
        b.epsilon(),
        report.worst_gap,
        report.bad_brackets.len(),
        report.violations.len()
    );
    if report.pass {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}

fn replicate(suite: &str, seed: u64) -> Result<(), Failure> {
    let verdicts: Vec<Verdict> = if suite == "all" {
        all_criteria(seed).into_iter().collect::<smoothlearn::Result<_>>()?
    } else {
        vec![replicate_suite(suite, seed)?]
    };
    let mut pass = true;
    for v in &verdicts {
        eprintln!("{v}");
        println!("{}", serde_json::to_string(v).context("encoding verdict")?);
        pass &= v.pass;
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}
