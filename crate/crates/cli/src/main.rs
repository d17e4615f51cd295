use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use proximal_core::config::{self, ConfigError};
use proximal_core::estimators::{
    backdoor_g, proximal_g, regression_ate, regression_ate_population, EstimateReport, ProbModel,
};
use proximal_core::experiments::{self, ExperimentConfig, Study, REGRESSION_COVARIATES};
use proximal_core::graph::reference;
use proximal_core::{CausalGraph, Dataset, RoleLabeling};

#[derive(Parser)]
#[command(name = "proximal", version, about = "Proxy-variable causal effect estimation for binary models")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the graphical identification conditions of a graph.
    CheckGraph {
        /// Graph file, or a reference name such as `fig1d`.
        #[arg(long)]
        graph: String,
        /// `canonical` or a list such as `x=X,y=Y,z=Z,w=W,u=Ustar`.
        #[arg(long, default_value = "canonical")]
        labeling: RoleLabeling,
        /// Levels of Z, W and U, e.g. `Z=2,W=2,U=4` (default: all binary).
        #[arg(long)]
        levels: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Sample a dataset from a model spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the proximal, regression and naive estimators.
    Estimate {
        /// Dataset CSV as written by `simulate`.
        #[arg(long, conflicts_with = "population", required_unless_present = "population")]
        data: Option<PathBuf>,
        /// Use the exact observed distribution of `--spec`.
        #[arg(long, requires = "spec")]
        population: bool,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Bias table over the four equivalence-class graphs.
    Table1(StudyArgs),
    /// Bias table for a high-dimensional confounder.
    Table2(StudyArgs),
    /// Condition number of P(W | Z, x) along a parameter grid.
    ScanCondition(StudyArgs),
    /// Bias as the W -> X violation grows.
    ScanViolation(StudyArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// Experiment config (default: built-in defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Exact enumeration instead of sampling.
    #[arg(long)]
    population: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

/// Failure classes with distinct exit codes.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn config_failure(e: ConfigError) -> Failure {
    match e {
        ConfigError::Io { .. } => Failure::Runtime(e.into()),
        other => usage(other),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::CheckGraph { graph, labeling, levels, format } => check_graph(&graph, &labeling, levels, format),
        Command::Simulate { spec, n, seed, out } => {
            let spec = config::load_spec(&spec).map_err(config_failure)?;
            if n == 0 {
                return Err(usage(anyhow!("--n must be positive")));
            }
            let data = spec.sample(n, seed)?;
            let mut w = output(out.as_deref())?;
            data.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Estimate { data, population, spec, out, format } => {
            let reports = if population {
                let spec = spec.expect("clap enforces --spec");
                let spec = config::load_spec(&spec).map_err(config_failure)?;
                let joint = spec.observed_joint()?;
                vec![
                    ProbModel::from_joint(&joint).and_then(|m| proximal_g(&m, 1)),
                    regression_ate_population(&joint, &REGRESSION_COVARIATES),
                    backdoor_g(&joint, "X", "Y", &[], 1),
                ]
            } else {
                let path = data.expect("clap enforces --data");
                let file = File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
                let data = Dataset::read_csv(file)?;
                let freq = data.frequencies(&["X", "Y"])?;
                vec![
                    ProbModel::fit(&data).and_then(|m| proximal_g(&m, 1)),
                    regression_ate(&data, &REGRESSION_COVARIATES),
                    backdoor_g(&freq, "X", "Y", &[], 1),
                ]
            };
            let mut ok: Vec<EstimateReport> = Vec::new();
            let mut failed = false;
            for (name, r) in ["proximal", "regression", "naive"].iter().zip(reports) {
                match r {
                    Ok(r) => ok.push(r),
                    Err(e) => {
                        eprintln!("{name}: {e}");
                        failed = true;
                    }
                }
            }
            let mut w = output(out.as_deref())?;
            write_reports(&mut w, &ok, format)?;
            w.flush()?;
            if failed {
                return Err(Failure::Runtime(anyhow!("some estimators failed")));
            }
            Ok(())
        }
        Command::Table1(a) => study(Study::Table1, a),
        Command::Table2(a) => study(Study::Table2, a),
        Command::ScanCondition(a) => study(Study::ConditionScan, a),
        Command::ScanViolation(a) => study(Study::ViolationScan, a),
    }
}

fn write_reports(w: &mut dyn Write, reports: &[EstimateReport], format: Format) -> anyhow::Result<()> {
    let records: Vec<_> = reports.iter().map(EstimateReport::record).collect();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, &records)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(w);
            for r in &records {
                c.serialize(r)?;
            }
            c.flush()?;
        }
        Format::Text => {
            for r in reports {
                write!(w, "{:<11} ate = {:+.6}  P(Y=1|do(X=0)) = {:.6}  P(Y=1|do(X=1)) = {:.6}", r.method.to_string(), r.ate, r.p_do[0], r.p_do[1])?;
                if let Some([c0, c1]) = r.condition_numbers {
                    write!(w, "  cond = ({c0:.3}, {c1:.3})")?;
                }
                if let Some((lo, hi)) = r.ci95 {
                    write!(w, "  95% CI = [{lo:+.6}, {hi:+.6}]")?;
                }
                for warning in &r.warnings {
                    write!(w, "  warning: {warning}")?;
                }
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

fn load_graph(arg: &str) -> Result<CausalGraph, Failure> {
    if let Some(g) = reference::by_name(arg) {
        if !Path::new(arg).exists() {
            return Ok(g);
        }
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("cannot read graph {arg}"))?;
    CausalGraph::parse(&text).map_err(usage)
}

fn parse_levels(spec: &str) -> Result<BTreeMap<String, usize>, Failure> {
    spec.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| usage(anyhow!("malformed level `{kv}`")))?;
            let v: usize = v.trim().parse().map_err(|_| usage(anyhow!("malformed level `{kv}`")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn check_graph(graph: &str, roles: &RoleLabeling, levels: Option<String>, format: Format) -> Result<(), Failure> {
    let g = load_graph(graph)?;
    let mut lv: BTreeMap<String, usize> =
        [&roles.z, &roles.w, &roles.u].iter().map(|n| (n.as_str().to_string(), 2)).collect();
    if let Some(spec) = levels {
        for (k, v) in parse_levels(&spec)? {
            let key = match k.as_str() {
                "Z" | "z" => roles.z.as_str(),
                "W" | "w" => roles.w.as_str(),
                "U" | "u" => roles.u.as_str(),
                other => return Err(usage(anyhow!("--levels takes Z, W and U, got `{other}`"))),
            };
            lv.insert(key.to_string(), v);
        }
    }
    let class = g.check_equivalence_class(roles).map_err(usage)?;
    let proxy = g.check_proxy_conditions(roles, &lv).map_err(usage)?;
    let mut w = output(None)?;
    match format {
        Format::Json => {
            let both = serde_json::json!({ "equivalence_class": class, "proxy_conditions": proxy });
            serde_json::to_writer_pretty(&mut w, &both)?;
            writeln!(w)?;
        }
        _ => {
            writeln!(w, "equivalence-class conditions:")?;
            write!(w, "{class}")?;
            writeln!(w, "proxy conditions:")?;
            write!(w, "{proxy}")?;
            let verdict = if class.all_hold() { "identified" } else { "not identified by these conditions" };
            writeln!(w, "proximal g-formula: {verdict}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn study(kind: Study, args: StudyArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(path) => config::load_experiment(path).map_err(config_failure)?,
        None => ExperimentConfig::new(kind),
    };
    if cfg.study != kind {
        return Err(usage(anyhow!("config runs `{}`, not `{kind}`", cfg.study)));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.population {
        cfg.population = true;
    }
    if args.format == Format::Text {
        return Err(usage(anyhow!("studies write csv or json")));
    }
    let result = experiments::run_study(&cfg).map_err(|e| match e {
        experiments::ExperimentError::Config { .. } => usage(e),
        other => Failure::Runtime(other.into()),
    })?;
    let mut w = output(args.out.as_deref())?;
    match args.format {
        Format::Json => result.write_json(&mut w)?,
        _ => result.write_csv(&mut w)?,
    }
    w.flush()?;
    Ok(())
}
