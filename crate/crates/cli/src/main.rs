use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use succ_lab::experiment::{compare_models, run, Experiment, ExperimentConfig};
use succ_lab::models::ModelKind;
use succ_lab::plot::{emit_comparison_plot, emit_plots};
use succ_lab::report::{emit_report, load_report};
use succ_lab::repr::{AngleDispersion, MdsPointSet};
use succ_lab::stats::Tail;

#[derive(Parser)]
#[command(
    name = "succ-lab",
    version,
    about = "Successor-function learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.json, CSVs and SVG figures.
    Run(RunArgs),
    /// Render the SVG figures for an existing report.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-model t-tests between a count-list and a place-value report.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        tail: Option<String>,
        /// Also write comparison.json and comparison.svg here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key=value or JSON file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// count-list, place-value or curriculum
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    sims: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    /// Epochs per run (per stage for the curriculum).
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    split: Option<String>,
    /// one or two
    #[arg(long)]
    tail: Option<String>,
    /// boundary or all
    #[arg(long = "mds-points")]
    mds_points: Option<String>,
    /// circular or linear
    #[arg(long = "angle-stat")]
    angle_stat: Option<String>,
    /// 1-based hidden layer for the representation analyses.
    #[arg(long)]
    layer: Option<String>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Config(m) => {
                eprintln!("config error: {m}");
                ExitCode::from(1)
            }
            Failure::Runtime(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
        }
    }
}

type Outcome = Result<(), Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

const RUN_KEYS: [&str; 11] = [
    "experiment",
    "sims",
    "seed",
    "out",
    "lr",
    "epochs",
    "split",
    "tail",
    "mds-points",
    "angle-stat",
    "layer",
];

/// Reads a config file as a JSON object or as `key = value` lines.
/// Underscores in keys are accepted in place of dashes.
fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Failure::Config(format!("{}: expected an object", path.display())))?;
        for (k, v) in obj {
            let v = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                other => {
                    return Err(Failure::Config(format!(
                        "{}: unsupported value for {k}: {other}",
                        path.display()
                    )))
                }
            };
            map.insert(k.replace('_', "-"), v);
        }
    } else {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Failure::Config(format!("{}:{}: expected key=value", path.display(), i + 1))
            })?;
            map.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
    }
    if let Some(k) = map.keys().find(|k| !RUN_KEYS.contains(&k.as_str())) {
        return Err(Failure::Config(format!(
            "{}: unknown key {k}",
            path.display()
        )));
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| Failure::Config(format!("--{key} {raw:?}: {e}")))
}

fn parse_experiment(raw: &str) -> Result<Experiment, Failure> {
    match raw {
        "count-list" | "count_list" => Ok(Experiment::CountList),
        "place-value" | "place_value" => Ok(Experiment::PlaceValue),
        "curriculum" => Ok(Experiment::Curriculum),
        _ => Err(Failure::Config(format!(
            "--experiment {raw:?}: expected count-list, place-value or curriculum"
        ))),
    }
}

fn parse_tail(raw: &str) -> Result<Tail, Failure> {
    match raw {
        "one" => Ok(Tail::OneTailed),
        "two" => Ok(Tail::TwoTailed),
        _ => Err(Failure::Config(format!(
            "--tail {raw:?}: expected one or two"
        ))),
    }
}

/// Merges flags over the config file and builds the experiment config.
fn resolve_run(args: RunArgs) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let mut values = match &args.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    let flags = [
        ("experiment", args.experiment),
        ("sims", args.sims),
        ("seed", args.seed),
        ("out", args.out),
        ("lr", args.lr),
        ("epochs", args.epochs),
        ("split", args.split),
        ("tail", args.tail),
        ("mds-points", args.mds_points),
        ("angle-stat", args.angle_stat),
        ("layer", args.layer),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            values.insert(k.to_string(), v);
        }
    }
    let get = |k: &str| values.get(k).map(String::as_str);

    let experiment = parse_experiment(
        get("experiment").ok_or_else(|| Failure::Config("--experiment is required".into()))?,
    )?;
    let out = PathBuf::from(get("out").ok_or_else(|| Failure::Config("--out is required".into()))?);
    let mut config = ExperimentConfig::new(experiment);
    if let Some(v) = get("sims") {
        config.n_sims = parse("sims", v)?;
    }
    if let Some(v) = get("seed") {
        config.base_seed = parse("seed", v)?;
    }
    if let Some(v) = get("lr") {
        config.learning_rate = Some(parse("lr", v)?);
    }
    if let Some(v) = get("epochs") {
        config.epochs = Some(parse("epochs", v)?);
    }
    if let Some(v) = get("split") {
        config.split_fraction = parse("split", v)?;
    }
    if let Some(v) = get("tail") {
        config.tail = parse_tail(v)?;
    }
    if let Some(v) = get("mds-points") {
        config.mds_point_set = match v {
            "boundary" => MdsPointSet::Boundary18,
            "all" => MdsPointSet::All,
            _ => {
                return Err(Failure::Config(format!(
                    "--mds-points {v:?}: expected boundary or all"
                )))
            }
        };
    }
    if let Some(v) = get("angle-stat") {
        config.angle_dispersion = match v {
            "circular" => AngleDispersion::Circular,
            "linear" => AngleDispersion::Linear,
            _ => {
                return Err(Failure::Config(format!(
                    "--angle-stat {v:?}: expected circular or linear"
                )))
            }
        };
    }
    if let Some(v) = get("layer") {
        config.representation_layer = Some(parse("layer", v)?);
    }
    config
        .validate()
        .map_err(|e| Failure::Config(e.to_string()))?;
    Ok((config, out))
}

fn cmd_run(args: RunArgs) -> Outcome {
    let (config, out) = resolve_run(args)?;
    let report = run(&config).map_err(runtime)?;
    info!(
        "{} sims finished ({} excluded), learning rate {}",
        report.simulations.len(),
        report.excluded.len(),
        report.config.learning_rate
    );
    emit_report(&report, &out).map_err(runtime)?;
    emit_plots(&report, &out).map_err(runtime)?;
    println!(
        "{}: train {:.3}, test {:.3}, R² {:.3}, similarity {:.3} -> {}",
        report.config.experiment.label(),
        report.accuracy.train.mean,
        report.accuracy.test.mean,
        report.regression.r_squared,
        report.similarity.per_sim_mean.mean,
        out.display()
    );
    Ok(())
}

fn cmd_plot(report: &Path, out: &Path) -> Outcome {
    let report = load_report(report).map_err(runtime)?;
    for path in emit_plots(&report, out).map_err(runtime)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_compare(a: &Path, b: &Path, tail: Option<String>, out: Option<PathBuf>) -> Outcome {
    let tail = tail.as_deref().map(parse_tail).transpose()?;
    let a = load_report(a).map_err(runtime)?;
    let b = load_report(b).map_err(runtime)?;
    let (cl, pv) = match (a.config.model, b.config.model) {
        (ModelKind::CountList, ModelKind::PlaceValue) => (&a, &b),
        (ModelKind::PlaceValue, ModelKind::CountList) => (&b, &a),
        _ => {
            return Err(Failure::Runtime(
                "compare needs one count-list and one place-value report".into(),
            ))
        }
    };
    let tail = tail.unwrap_or(cl.config.tail);
    let comparison = compare_models(cl, pv, tail).map_err(runtime)?;
    let mut json = serde_json::to_string_pretty(&comparison).map_err(runtime)?;
    json.push('\n');
    print!("{json}");
    if let Some(dir) = out {
        fs::create_dir_all(&dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
        let path = dir.join("comparison.json");
        fs::write(&path, &json).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        emit_comparison_plot(cl, pv, &dir).map_err(runtime)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Plot { report, out } => cmd_plot(&report, &out),
        Command::Compare { a, b, tail, out } => cmd_compare(&a, &b, tail, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
