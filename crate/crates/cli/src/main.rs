use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use neosift_core::pipeline::{
    eval_gold, eval_recall, load_report, read_candidates, read_gold, read_reference, run, CascadeReport,
    Layout, PipelineConfig, RunOptions, StageLedger, Step, KEYS, PATH_KEYS,
};

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn pipeline_args(cmd: Command) -> Command {
    let mut cmd = cmd
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .value_parser(value_parser!(PathBuf))
                .help("key = value config file; relative paths in it resolve against its directory"),
        )
        .arg(
            Arg::new("set")
                .long("set")
                .value_name("KEY=VALUE")
                .action(ArgAction::Append)
                .help("override any key, including endpoint.<name>.<field>"),
        )
        .arg(
            Arg::new("tsv")
                .long("tsv")
                .action(ArgAction::SetTrue)
                .help("also write candidates.tsv"),
        )
        .arg(
            Arg::new("show-config")
                .long("show-config")
                .action(ArgAction::SetTrue)
                .help("print the effective configuration and exit"),
        );
    for key in KEYS {
        cmd = cmd.arg(
            Arg::new(*key)
                .long(flag(key))
                .value_name("VALUE")
                .help_heading("Config keys"),
        );
    }
    cmd
}

fn cli() -> Command {
    let steps: Vec<&'static str> = Step::ALL.iter().map(|s| s.id()).collect();
    let json = || {
        Arg::new("json")
            .long("json")
            .action(ArgAction::SetTrue)
            .help("print JSON instead of a table")
    };
    let work_dir = || {
        Arg::new("work-dir")
            .long("work-dir")
            .value_name("DIR")
            .value_parser(value_parser!(PathBuf))
    };
    Command::new("neosift")
        .about("Neologism candidate extraction from Reddit dumps")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("verbose")
                .long("verbose")
                .short('v')
                .action(ArgAction::Count)
                .global(true)
                .help("more logging (-v info, -vv debug)"),
        )
        .subcommand(
            pipeline_args(Command::new("run").about("Run the cascade, resuming from current checkpoints"))
                .arg(
                    Arg::new("stop-after")
                        .long("stop-after")
                        .value_name("STEP")
                        .value_parser(steps.clone()),
                ),
        )
        .subcommand(pipeline_args(
            Command::new("contexts").about("Run up to context harvesting for the language-gate survivors"),
        ))
        .subcommand(pipeline_args(
            Command::new("classify").about("Run up to the majority vote; resumes per-endpoint results"),
        ))
        .subcommand(pipeline_args(
            Command::new("verify").about("Run through verification"),
        ))
        .subcommand(
            Command::new("report")
                .about("Print a cascade report from a work directory or a counts file")
                .arg(work_dir())
                .arg(
                    Arg::new("counts")
                        .long("counts")
                        .value_name("FILE")
                        .value_parser(value_parser!(PathBuf))
                        .conflicts_with("work-dir")
                        .help("stage<TAB>remaining[<TAB>reintegrated] rows"),
                )
                .arg(json()),
        )
        .subcommand(
            Command::new("eval-gold")
                .about("Compare exported candidates with a gold annotation file")
                .arg(
                    Arg::new("gold")
                        .long("gold")
                        .required(true)
                        .value_name("FILE")
                        .value_parser(value_parser!(PathBuf)),
                )
                .arg(
                    Arg::new("candidates")
                        .long("candidates")
                        .value_name("FILE")
                        .value_parser(value_parser!(PathBuf))
                        .conflicts_with("work-dir"),
                )
                .arg(work_dir())
                .arg(json()),
        )
        .subcommand(
            Command::new("eval-recall")
                .about("Recall over a reference list; with a work directory, misses are traced to stages")
                .arg(
                    Arg::new("reference")
                        .long("reference")
                        .required(true)
                        .value_name("FILE")
                        .value_parser(value_parser!(PathBuf)),
                )
                .arg(work_dir())
                .arg(json()),
        )
}

/// Relative paths typed on the command line mean the current directory,
/// not the config file's.
fn from_cwd(key: &str, value: &str) -> Result<String> {
    let is_path = PATH_KEYS.contains(&key)
        || key.ends_with(".mock_labels")
        || (key == "rule_pack" && !value.starts_with("builtin:"));
    if !is_path {
        return Ok(value.to_string());
    }
    let parts: Result<Vec<String>> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| Ok(std::path::absolute(p)?.display().to_string()))
        .collect();
    Ok(parts?.join(","))
}

fn load_config(m: &ArgMatches) -> Result<PipelineConfig> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig {
            base_dir: std::env::current_dir()?,
            ..Default::default()
        },
    };
    cfg.apply_env(std::env::vars())?;
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got `{kv}`");
        };
        let k = k.trim();
        cfg.set(k, &from_cwd(k, v.trim())?)
            .with_context(|| format!("--set {kv}"))?;
    }
    for key in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, &from_cwd(key, v)?)
                .with_context(|| format!("--{}", flag(key)))?;
        }
    }
    Ok(cfg)
}

fn run_pipeline(m: &ArgMatches, stop_after: Option<Step>) -> Result<()> {
    let cfg = load_config(m)?;
    if m.get_flag("show-config") {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    if cfg.corpus.is_empty() {
        bail!("no corpus given (set `corpus` or pass --corpus)");
    }
    let summary = run(
        &cfg,
        &RunOptions {
            stop_after,
            tsv: m.get_flag("tsv"),
        },
    )?;
    print!("{}", summary.report.to_text());
    let resumed: Vec<&str> = summary
        .steps
        .iter()
        .filter(|s| s.resumed)
        .map(|s| s.step.id())
        .collect();
    if !resumed.is_empty() {
        eprintln!("resumed from checkpoints: {}", resumed.join(", "));
    }
    eprintln!(
        "{} candidates written to {}",
        summary.exported,
        Layout::new(&summary.work_dir).candidates().display()
    );
    Ok(())
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn report(m: &ArgMatches) -> Result<()> {
    let report = if let Some(p) = m.get_one::<PathBuf>("counts") {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        CascadeReport::parse_counts(&text).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?
    } else {
        let dir = m
            .get_one::<PathBuf>("work-dir")
            .map_or(Path::new("work"), |p| p.as_path());
        load_report(dir)?
    };
    if m.get_flag("json") {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn eval_gold_cmd(m: &ArgMatches) -> Result<()> {
    let cands_path = match (
        m.get_one::<PathBuf>("candidates"),
        m.get_one::<PathBuf>("work-dir"),
    ) {
        (Some(p), _) => p.clone(),
        (None, Some(w)) => Layout::new(w).candidates(),
        (None, None) => Layout::new("work").candidates(),
    };
    let candidates = read_candidates(&cands_path)?;
    let gold = read_gold(m.get_one::<PathBuf>("gold").expect("required"))?;
    let e = eval_gold(&candidates, &gold)?;
    if m.get_flag("json") {
        print_json(&e)
    } else {
        print!("{}", e.to_text());
        Ok(())
    }
}

fn eval_recall_cmd(m: &ArgMatches) -> Result<()> {
    let reference = read_reference(m.get_one::<PathBuf>("reference").expect("required"))?;
    let ledger = m
        .get_one::<PathBuf>("work-dir")
        .map(|w| StageLedger::load(w))
        .transpose()?;
    let e = eval_recall(&reference, ledger.as_ref())?;
    if m.get_flag("json") {
        print_json(&e)
    } else {
        print!("{}", e.to_text());
        Ok(())
    }
}

fn main() -> ExitCode {
    let m = cli().get_matches();
    let level = match m.get_count("verbose") {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match m.subcommand() {
        Some(("run", sub)) => {
            let stop = sub
                .get_one::<String>("stop-after")
                .map(|s| s.parse().expect("validated by clap"));
            run_pipeline(sub, stop)
        }
        Some(("contexts", sub)) => run_pipeline(sub, Some(Step::Contexts)),
        Some(("classify", sub)) => run_pipeline(sub, Some(Step::Vote)),
        Some(("verify", sub)) => run_pipeline(sub, Some(Step::Verify)),
        Some(("report", sub)) => report(sub),
        Some(("eval-gold", sub)) => eval_gold_cmd(sub),
        Some(("eval-recall", sub)) => eval_recall_cmd(sub),
        _ => unreachable!("subcommand required"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
