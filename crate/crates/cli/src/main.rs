use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use fuzzwell::dsl::{parse_config, validate, Config, Severity};
use fuzzwell::ingest::{date_of_day, load_user_log, uuid_from_path, ActivityLog};
use fuzzwell::pipeline::{
    Pipeline, PipelineError, PipelineSettings, WellnessReport, DEFAULT_FZC, DEFAULT_SETTINGS,
};
use fuzzwell::stl::stl_decompose;

mod table;

/// Fuzzy wellness scoring from self-reported activity labels.
#[derive(Parser, Debug)]
#[command(name = "fuzzwell", version)]
struct Cli {
    /// Rule configuration (.fzc). Settings are read from a .toml file with the
    /// same stem when present. Defaults to the built-in configuration.
    #[arg(long, global = true, env = "FUZZWELL_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output layout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and check a configuration; warnings do not fail.
    Validate {
        /// Overrides --config.
        path: Option<PathBuf>,
    },
    /// Score every user log in a directory.
    Analyze(RunArgs),
    /// Seasonal-trend decomposition of one user's category series.
    Decompose {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        uuid: String,
        #[arg(long)]
        category: String,
    },
    /// Sampled membership functions of one variable.
    Memberships {
        #[arg(long)]
        variable: String,
    },
    /// Daily coverage and category fractions of one user.
    Series {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        uuid: String,
    },
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Directory of per-user label CSV files (optionally gzip-compressed).
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    /// Inclusive day window, START:END in YYYY-MM-DD; either side may be empty.
    #[arg(long, value_name = "START:END", value_parser = parse_window)]
    window: Option<Window>,
    /// Seasonal period in days.
    #[arg(long, value_name = "N")]
    period: Option<usize>,
    /// STL seasonal smoother window (odd).
    #[arg(long, value_name = "N")]
    seasonal_window: Option<usize>,
    /// STL trend smoother window (odd); derived from period and seasonal window by default.
    #[arg(long, value_name = "N")]
    trend_window: Option<usize>,
    #[arg(long, value_name = "N")]
    inner_iters: Option<usize>,
    /// Robustness passes; 0 disables outlier reweighting.
    #[arg(long, value_name = "N")]
    outer_iters: Option<usize>,
    /// Minimum fraction of a day's minutes with a report for the day to count.
    #[arg(long, value_name = "F")]
    coverage_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Window {
    start: Option<NaiveDate>,
    end: Option<NaiveDate>,
}

fn parse_window(s: &str) -> Result<Window, String> {
    let (a, b) = s.split_once(':').ok_or("expected START:END")?;
    let date = |t: &str| -> Result<Option<NaiveDate>, String> {
        if t.is_empty() {
            Ok(None)
        } else {
            NaiveDate::parse_from_str(t, "%Y-%m-%d")
                .map(Some)
                .map_err(|e| format!("bad date `{t}`: {e}"))
        }
    };
    let w = Window { start: date(a)?, end: date(b)? };
    if let (Some(s), Some(e)) = (w.start, w.end) {
        if s > e {
            return Err(format!("window start {s} is after end {e}"));
        }
    }
    Ok(w)
}

/// Failure with its exit status: 1 for usage and configuration problems, 2
/// for data problems.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn usage(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, err: err.into() }
}

fn data(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, err: err.into() }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(p) = &cli.config {
        if !p.is_file() {
            return Err(usage(anyhow!("config file {} not found", p.display())));
        }
    }
    match &cli.command {
        Command::Validate { path } => cmd_validate(path.as_ref().or(cli.config.as_ref()), &cli),
        Command::Analyze(run) => cmd_analyze(&cli, run),
        Command::Decompose { run, uuid, category } => cmd_decompose(&cli, run, uuid, category),
        Command::Memberships { variable } => cmd_memberships(&cli, variable),
        Command::Series { run, uuid } => cmd_series(&cli, run, uuid),
    }
}

fn emit(cli: &Cli, text: &str) -> Outcome {
    match &cli.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(usage),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(data(e)),
                _ => Ok(()),
            }
        }
    }
}

fn render(cli: &Cli, header: &[&str], rows: &[Vec<String>]) -> String {
    match cli.format {
        Format::Csv => table::csv(header, rows),
        Format::Table => table::aligned(header, rows),
    }
}

fn read_config(path: Option<&PathBuf>) -> Result<(String, String, String), Failure> {
    match path {
        None => Ok(("built-in".into(), DEFAULT_FZC.into(), DEFAULT_SETTINGS.into())),
        Some(p) => {
            let fzc = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(usage)?;
            let toml_path = p.with_extension("toml");
            let settings = if toml_path.is_file() {
                fs::read_to_string(&toml_path)
                    .with_context(|| format!("reading {}", toml_path.display()))
                    .map_err(usage)?
            } else {
                DEFAULT_SETTINGS.to_string()
            };
            Ok((p.display().to_string(), fzc, settings))
        }
    }
}

fn parsed_config(cli: &Cli) -> Result<Config, Failure> {
    let (name, fzc, _) = read_config(cli.config.as_ref())?;
    parse_config(&fzc).map_err(|e| usage(anyhow!("{name}:{e}")))
}

fn pipeline(cli: &Cli, run: &RunArgs) -> Result<Pipeline, Failure> {
    let (name, fzc, settings) = read_config(cli.config.as_ref())?;
    let mut settings = PipelineSettings::from_toml(&settings).map_err(usage)?;
    let stl = &mut settings.stl;
    if let Some(p) = run.period {
        stl.period = p;
    }
    if let Some(w) = run.seasonal_window {
        stl.seasonal_window = w;
    }
    if run.trend_window.is_some() {
        stl.trend_window = run.trend_window;
    }
    if let Some(n) = run.inner_iters {
        stl.inner_iters = n;
    }
    if let Some(n) = run.outer_iters {
        stl.outer_iters = n;
    }
    if let Some(c) = run.coverage_min {
        settings.coverage_min = c;
    }
    let cfg = parse_config(&fzc).map_err(|e| usage(anyhow!("{name}:{e}")))?;
    Pipeline::new(cfg, settings).map_err(|e| usage(anyhow!("{name}: {e}")))
}

fn cmd_validate(path: Option<&PathBuf>, cli: &Cli) -> Outcome {
    if let Some(p) = path {
        if !p.is_file() {
            return Err(usage(anyhow!("config file {} not found", p.display())));
        }
    }
    let (name, fzc, _) = read_config(path)?;
    let cfg = parse_config(&fzc).map_err(|e| usage(anyhow!("{name}:{e}")))?;
    let diags = validate(&cfg);
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
    let mut text: String = diags.iter().map(|d| format!("{d}\n")).collect();
    text += &format!("{name}: {errors} error(s), {} warning(s)\n", diags.len() - errors);
    emit(cli, &text)?;
    if errors > 0 {
        return Err(usage(anyhow!("{name} has {errors} error(s)")));
    }
    Ok(())
}

fn user_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !dir.is_dir() {
        return Err(usage(anyhow!("data directory {} not found", dir.display())));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))
        .map_err(data)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| {
                    n.ends_with(".csv") || n.ends_with(".csv.gz")
                })
        })
        .collect();
    files.sort();
    Ok(files)
}

fn find_user(dir: &Path, uuid: &str) -> Result<ActivityLog, Failure> {
    let files = user_files(dir)?;
    let path = files
        .iter()
        .find(|p| uuid_from_path(p).as_deref() == Some(uuid))
        .ok_or_else(|| data(anyhow!("no log for user {uuid} in {}", dir.display())))?;
    load_user_log(path).map_err(data)
}

fn windowed(log: &ActivityLog, run: &RunArgs) -> ActivityLog {
    let w = run.window.unwrap_or_default();
    log.window(w.start, w.end)
}

fn cmd_analyze(cli: &Cli, run: &RunArgs) -> Outcome {
    let pipeline = pipeline(cli, run)?;
    let files = user_files(&run.data)?;
    if files.is_empty() {
        return Err(data(anyhow!("no user logs (*.csv, *.csv.gz) in {}", run.data.display())));
    }
    let w = run.window.unwrap_or_default();
    let mut results: Vec<(String, Result<WellnessReport, String>)> = files
        .par_iter()
        .map(|path| {
            let uuid = uuid_from_path(path).unwrap_or_else(|| path.display().to_string());
            let report = load_user_log(path)
                .map_err(PipelineError::from)
                .and_then(|log| pipeline.analyze_user(&log, w.start, w.end))
                .map_err(|e| e.to_string());
            (uuid, report)
        })
        .collect();
    results.sort_by(|a, b| a.0.cmp(&b.0));

    let mut seen = std::collections::BTreeSet::new();
    let mut rows = Vec::new();
    for (uuid, r) in &results {
        match r {
            Ok(rep) if seen.insert(uuid.clone()) => rows.push(report_row(rep)),
            Ok(_) => eprintln!("warning: {uuid}: duplicate log skipped"),
            Err(e) => eprintln!("warning: skipped: {e}"),
        }
    }
    if rows.is_empty() {
        return Err(data(anyhow!("all {} user logs failed", results.len())));
    }
    let header = ["uuid", "total", "health", "productive", "social", "mood1", "mood2", "mood3"];
    emit(cli, &render(cli, &header, &rows))
}

fn report_row(r: &WellnessReport) -> Vec<String> {
    let mut row = vec![
        r.uuid.clone(),
        format!("{:.3}", r.total),
        format!("{:.3}", r.components.health),
        format!("{:.3}", r.components.productive),
        format!("{:.3}", r.components.social),
    ];
    row.extend((0..3).map(|i| r.moods.get(i).cloned().unwrap_or_default()));
    row
}

fn cmd_decompose(cli: &Cli, run: &RunArgs, uuid: &str, category: &str) -> Outcome {
    let pipeline = pipeline(cli, run)?;
    if pipeline.settings().categories.iter().all(|c| c.def.name != category) {
        return Err(usage(anyhow!("unknown category `{category}`")));
    }
    let log = windowed(&find_user(&run.data, uuid)?, run);
    let series = pipeline.series(&log);
    let values = pipeline
        .category_values(&series, category)
        .map_err(|e| data(anyhow!("{uuid}: {e}")))?;
    let d = stl_decompose(&values, pipeline.stl_params())
        .map_err(|e| data(anyhow!("{uuid}/{category}: {e}")))?;
    let rows: Vec<Vec<String>> = (0..values.len())
        .map(|i| {
            [values[i], d.trend[i], d.seasonal[i], d.remainder[i]]
                .iter()
                .map(|v| v.to_string())
                .collect()
        })
        .collect();
    emit(cli, &render(cli, &["value", "trend", "seasonal", "remainder"], &rows))
}

fn cmd_memberships(cli: &Cli, variable: &str) -> Outcome {
    let cfg = parsed_config(cli)?;
    let var = cfg
        .variable(variable)
        .ok_or_else(|| usage(anyhow!("unknown variable `{variable}`")))?
        .to_linguistic(fuzzwell::fuzzy::DEFAULT_RESOLUTION)
        .map_err(usage)?;
    let mut header = vec!["x"];
    header.extend(var.terms.iter().map(|t| t.name.as_str()));
    let samples: Vec<_> = var.terms.iter().map(|t| t.mf.sample(&var.universe)).collect();
    let rows: Vec<Vec<String>> = var
        .universe
        .points()
        .enumerate()
        .map(|(i, x)| {
            let mut row = vec![x.to_string()];
            row.extend(samples.iter().map(|s| s.degrees()[i].to_string()));
            row
        })
        .collect();
    emit(cli, &render(cli, &header, &rows))
}

fn cmd_series(cli: &Cli, run: &RunArgs, uuid: &str) -> Outcome {
    let pipeline = pipeline(cli, run)?;
    let log = windowed(&find_user(&run.data, uuid)?, run);
    let s = pipeline.series(&log);
    let mut header = vec!["date", "coverage", "excluded"];
    header.extend(s.fractions.keys().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..s.days())
        .map(|d| {
            let date = date_of_day(s.start_day + d as i64).map(|d| d.to_string()).unwrap_or_default();
            let mut row = vec![date, format!("{:.6}", s.coverage[d]), s.excluded[d].to_string()];
            row.extend(s.fractions.values().map(|f| format!("{:.6}", f[d])));
            row
        })
        .collect();
    emit(cli, &render(cli, &header, &rows))
}
