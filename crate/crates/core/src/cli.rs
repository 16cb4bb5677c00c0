//! Command-line front end: `dispersion`, `fit`, `rank`, `simulate`.
//!
//! Exit codes: 0 success, 2 load or usage failure, 3 empty selection,
//! 4 unknown team, 5 insufficient matches, 6 nothing rankable.
//!
//! Table output rounds to two decimals (four for probabilities); CSV and
//! JSON carry full precision with a fixed column/key order.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmp::{dispersion_index, Cmp, CmpParams, Dispersion, SeriesControl};
use crate::data::{self, DataError, Dataset, Direction, InputFormat, MatchFilter};
use crate::fitting::{compare_models, empirical_moments, pmf_overlay, GoalSeries, ModelComparison, OverlayRow};
use crate::strength::{rank_teams, team_strength};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    LoadFailure = 2,
    EmptySelection = 3,
    UnknownTeam = 4,
    InsufficientMatches = 5,
    NothingRankable = 6,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "cmprank", version, about = "Conway-Maxwell-Poisson goal models and team strength rankings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pooled and per-team dispersion index of goal counts.
    Dispersion(InputArgs),
    /// Fit CMP, Gaussian and Negative Binomial to one team's goals.
    Fit(FitArgs),
    /// Rank teams by CMP-derived overall strength.
    Rank(InputArgs),
    /// Empirical means of CMP draws over a (λ, ν) grid.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Match file in the canonical CSV schema.
    #[arg(long)]
    pub input: PathBuf,
    /// First date included (YYYY-MM-DD).
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last date included (YYYY-MM-DD).
    #[arg(long)]
    pub to: Option<NaiveDate>,
    /// Restrict to these competitions (repeatable).
    #[arg(long = "competition")]
    pub competitions: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub min_matches: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    #[arg(long, default_value_t = SeriesControl::DEFAULT_REL_TOL)]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub team: String,
    #[arg(long, value_enum, default_value_t = Direction::Scored)]
    pub direction: Direction,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub nu_grid: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub n_per_cell: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    #[arg(long, default_value_t = SeriesControl::DEFAULT_REL_TOL)]
    pub rel_tol: f64,
}

/// Validated settings shared by the data-driven subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub filter: MatchFilter,
    pub min_matches: usize,
    pub ctrl: SeriesControl,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn from_args(args: &InputArgs) -> Result<Self, CliError> {
        if args.min_matches < 2 {
            return Err(usage(format!("--min-matches must be at least 2, got {}", args.min_matches)));
        }
        if let (Some(from), Some(to)) = (args.from, args.to) {
            if from > to {
                return Err(usage(format!("--from {from} is after --to {to}")));
            }
        }
        let competitions = (!args.competitions.is_empty()).then(|| args.competitions.iter().cloned().collect());
        Ok(Self {
            input_path: args.input.clone(),
            filter: MatchFilter {
                from: args.from,
                to: args.to,
                competitions,
            },
            min_matches: args.min_matches,
            ctrl: series_control(args.rel_tol)?,
            format: args.format,
        })
    }

    fn has_filter(&self) -> bool {
        self.filter != MatchFilter::default()
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::new(ExitCode::LoadFailure, message)
}

fn series_control(rel_tol: f64) -> Result<SeriesControl, CliError> {
    SeriesControl::new(rel_tol, SeriesControl::DEFAULT_MAX_TERMS).map_err(|e| usage(e.to_string()))
}

/// What a subcommand produced: the report plus notes meant for stderr.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub notes: Vec<String>,
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Dispersion(args) => cmd_dispersion(&RunConfig::from_args(args)?),
        Command::Fit(args) => cmd_fit(&RunConfig::from_args(&args.input)?, &args.team, args.direction),
        Command::Rank(args) => cmd_rank(&RunConfig::from_args(args)?),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

/// Parses `args` (program name first) and runs; returns the exit code with
/// whatever should go to stdout and stderr.
pub fn run_from_args<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::LoadFailure as i32 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 { (0, text, String::new()) } else { (code, String::new(), text) };
        }
    };
    match run(&cli) {
        Ok(out) => {
            let stderr = out.notes.iter().map(|n| format!("warning: {n}\n")).collect();
            (0, out.stdout, stderr)
        }
        Err(e) => (e.code as i32, String::new(), format!("error: {}\n", e.message)),
    }
}

struct Loaded {
    dataset: Dataset,
    notes: Vec<String>,
}

fn load(config: &RunConfig) -> Result<Loaded, CliError> {
    let file = File::open(&config.input_path)
        .map_err(|e| usage(format!("cannot open {}: {e}", config.input_path.display())))?;
    let report = data::load_matches(BufReader::new(file), InputFormat::Csv).map_err(|e| match e {
        DataError::NoValidRows { rejected } => usage(format!(
            "no valid rows in {}: {}",
            config.input_path.display(),
            rejected.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("; ")
        )),
        other => usage(format!("cannot load {}: {other}", config.input_path.display())),
    })?;
    let mut notes: Vec<String> = report.rejected.iter().map(|r| format!("rejected {r}")).collect();
    notes.extend(report.warnings.iter().map(|r| r.to_string()));
    if report.duplicates > 0 {
        notes.push(format!("dropped {} duplicate fixture(s)", report.duplicates));
    }
    Ok(Loaded {
        dataset: report.dataset,
        notes,
    })
}

fn selected(config: &RunConfig, dataset: &Dataset) -> Result<Dataset, CliError> {
    let subset = if config.has_filter() {
        dataset.filtered(&config.filter)
    } else {
        dataset.clone()
    };
    if subset.is_empty() {
        return Err(CliError::new(ExitCode::EmptySelection, "no matches left after filtering"));
    }
    Ok(subset)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("report rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
}

/// Left-aligns the first `text_cols` columns and right-aligns the rest.
fn render_table(header: &[&str], text_cols: usize, rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            let pad = w - cell.chars().count();
            if i > 0 {
                out.push_str("  ");
            }
            if i < text_cols {
                out.push_str(cell);
                out.push_str(&" ".repeat(pad));
            } else {
                out.push_str(&" ".repeat(pad));
                out.push_str(cell);
            }
        }
        out.trim_end().to_string() + "\n"
    };
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let mut out = line(header.to_vec());
    out.push_str(&line(rule.iter().map(String::as_str).collect()));
    for row in rows {
        out.push_str(&line(row.iter().map(|s| s.as_str()).collect()));
    }
    out
}

fn fmt2(x: f64) -> String {
    format!("{x:.2}")
}

fn fmt_opt2(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), fmt2)
}

// ---------------------------------------------------------------- dispersion

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    pub scope: String,
    pub direction: Option<Direction>,
    pub n: usize,
    pub mean: f64,
    /// Sample variance (divisor `n − 1`); absent for a single observation.
    pub variance: Option<f64>,
    pub dispersion_index: Option<f64>,
    pub classification: Option<Dispersion>,
    pub degenerate: bool,
}

impl DispersionRow {
    fn from_counts(scope: String, direction: Option<Direction>, counts: Vec<u64>) -> Self {
        let n = counts.len();
        match GoalSeries::new(counts.clone(), scope.clone()) {
            Ok(series) => {
                let (mean, variance) = empirical_moments(&series);
                let index = dispersion_index(mean, variance).ok();
                Self {
                    scope,
                    direction,
                    n,
                    mean,
                    variance: Some(variance),
                    dispersion_index: index,
                    classification: index.map(Dispersion::classify),
                    degenerate: index.is_none(),
                }
            }
            Err(_) => Self {
                scope,
                direction,
                n,
                mean: counts.iter().sum::<u64>() as f64 / n.max(1) as f64,
                variance: None,
                dispersion_index: None,
                classification: None,
                degenerate: true,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub pooled: DispersionRow,
    pub teams: Vec<DispersionRow>,
}

pub fn dispersion_report(dataset: &Dataset) -> DispersionReport {
    let pooled_counts = dataset
        .matches()
        .iter()
        .flat_map(|m| [u64::from(m.home_goals), u64::from(m.away_goals)])
        .collect();
    let pooled = DispersionRow::from_counts("pooled".into(), None, pooled_counts);
    let teams = dataset
        .teams()
        .iter()
        .flat_map(|team| {
            [Direction::Scored, Direction::Conceded].map(|direction| {
                let counts = data::team_counts(dataset, team, direction, None).unwrap_or_default();
                DispersionRow::from_counts(team.clone(), Some(direction), counts)
            })
        })
        .collect();
    DispersionReport { pooled, teams }
}

pub fn cmd_dispersion(config: &RunConfig) -> Result<Output, CliError> {
    let loaded = load(config)?;
    let dataset = selected(config, &loaded.dataset)?;
    let report = dispersion_report(&dataset);
    let stdout = match config.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => {
            let mut rows = vec![report.pooled.clone()];
            rows.extend(report.teams.iter().cloned());
            to_csv(&rows)
        }
        OutputFormat::Table => {
            let row = |r: &DispersionRow| {
                vec![
                    r.scope.clone(),
                    r.direction.map_or_else(|| "all".to_string(), |d| d.to_string()),
                    r.n.to_string(),
                    fmt2(r.mean),
                    fmt_opt2(r.variance),
                    fmt_opt2(r.dispersion_index),
                    r.classification.map_or("degenerate", |c| c.label()).to_string(),
                ]
            };
            let mut rows = vec![row(&report.pooled)];
            rows.extend(report.teams.iter().map(row));
            render_table(&["scope", "goals", "n", "mean", "variance", "DI", "classification"], 2, &rows)
        }
    };
    Ok(Output {
        stdout,
        notes: loaded.notes,
    })
}

// ----------------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub team: String,
    pub direction: Direction,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub comparison: ModelComparison,
    /// Observed frequency against the fitted CMP pmf over the observed range.
    pub overlay: Vec<OverlayRow>,
}

#[derive(Debug, Clone, Serialize)]
struct ModelCsvRow<'a> {
    family: &'a str,
    param_1: Option<f64>,
    param_2: f64,
    log_likelihood: f64,
    aic: f64,
    converged: bool,
    iterations: usize,
}

fn model_rows(comparison: &ModelComparison) -> Vec<ModelCsvRow<'_>> {
    use crate::fitting::FitParams;
    comparison
        .reports
        .iter()
        .map(|r| {
            let (p1, p2) = match r.params {
                FitParams::Cmp { lambda, nu } => (Some(lambda), nu),
                FitParams::Gaussian { mean, sd } => (Some(mean), sd),
                FitParams::NegativeBinomial { size, prob } => (size, prob),
            };
            ModelCsvRow {
                family: r.family.name(),
                param_1: p1,
                param_2: p2,
                log_likelihood: r.log_likelihood,
                aic: r.aic,
                converged: r.converged,
                iterations: r.iterations,
            }
        })
        .collect()
}

pub fn fit_team(dataset: &Dataset, config: &RunConfig, team: &str, direction: Direction) -> Result<FitOutput, CliError> {
    if !dataset.teams().contains(team) {
        return Err(CliError::new(ExitCode::UnknownTeam, format!("unknown team `{team}`")));
    }
    let counts = data::team_counts(dataset, team, direction, config.has_filter().then_some(&config.filter))
        .map_err(|e| CliError::new(ExitCode::EmptySelection, e.to_string()))?;
    if counts.len() < config.min_matches {
        return Err(CliError::new(
            ExitCode::InsufficientMatches,
            format!("`{team}` has {} matches, fewer than --min-matches {}", counts.len(), config.min_matches),
        ));
    }
    let series = GoalSeries::new(counts, format!("{team} {direction}"))
        .map_err(|e| CliError::new(ExitCode::InsufficientMatches, e.to_string()))?;
    let (mean, variance) = empirical_moments(&series);
    let comparison = compare_models(&series, &config.ctrl);
    let overlay = comparison
        .get(crate::fitting::Family::Cmp)
        .and_then(|r| r.cmp_params())
        .and_then(|p| pmf_overlay(&series, p, &config.ctrl).ok())
        .unwrap_or_default();
    Ok(FitOutput {
        team: team.to_string(),
        direction,
        n: series.len(),
        mean,
        variance,
        comparison,
        overlay,
    })
}

pub fn cmd_fit(config: &RunConfig, team: &str, direction: Direction) -> Result<Output, CliError> {
    let loaded = load(config)?;
    let fit = fit_team(&loaded.dataset, config, team, direction)?;
    let mut notes = loaded.notes;
    notes.extend(fit.comparison.failures.iter().map(|f| format!("{} fit failed: {}", f.family.name(), f.error)));
    let stdout = match config.format {
        OutputFormat::Json => to_json(&fit),
        OutputFormat::Csv => format!("{}\n{}", to_csv(&model_rows(&fit.comparison)), to_csv(&fit.overlay)),
        OutputFormat::Table => {
            let mut out = format!(
                "{} goals {}: n = {}, mean = {}, variance = {}\n\n",
                fit.team,
                fit.direction,
                fit.n,
                fmt2(fit.mean),
                fmt2(fit.variance)
            );
            let rows: Vec<Vec<String>> = model_rows(&fit.comparison)
                .iter()
                .map(|r| {
                    vec![
                        r.family.to_string(),
                        fmt_opt2(r.param_1),
                        fmt2(r.param_2),
                        fmt2(r.log_likelihood),
                        fmt2(r.aic),
                        if r.converged { "yes" } else { "no" }.to_string(),
                    ]
                })
                .collect();
            out.push_str(&render_table(&["distribution", "param 1", "param 2", "log-likelihood", "AIC", "converged"], 1, &rows));
            if !fit.overlay.is_empty() {
                out.push('\n');
                let rows: Vec<Vec<String>> = fit
                    .overlay
                    .iter()
                    .map(|r| vec![r.goals.to_string(), format!("{:.4}", r.empirical), format!("{:.4}", r.fitted)])
                    .collect();
                out.push_str(&render_table(&["goals", "empirical", "CMP pmf"], 0, &rows));
            }
            out
        }
    };
    Ok(Output { stdout, notes })
}

// ---------------------------------------------------------------------- rank

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    pub team: String,
    pub avg_scored: f64,
    pub avg_conceded: f64,
    pub attack_strength: f64,
    pub defense_strength: f64,
    pub strength: f64,
    pub matches: usize,
    pub lambda_attack: f64,
    pub nu_attack: f64,
    pub lambda_defense: f64,
    pub nu_defense: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub team: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOutput {
    pub rows: Vec<RankRow>,
    pub excluded: Vec<Exclusion>,
}

pub fn rank_dataset(dataset: &Dataset, config: &RunConfig) -> RankOutput {
    let teams: Vec<&String> = dataset.teams().iter().collect();
    let outcomes: Vec<Result<_, Exclusion>> = teams
        .par_iter()
        .map(|&team| {
            let exclude = |reason: String| Exclusion {
                team: team.clone(),
                reason,
            };
            let played = dataset.matches().iter().filter(|m| m.goals_for(team).is_some()).count();
            if played < config.min_matches {
                return Err(exclude(format!(
                    "{played} match(es), fewer than --min-matches {}",
                    config.min_matches
                )));
            }
            let series = |direction| {
                data::team_series(dataset, team, direction, None).map_err(|e| exclude(e.to_string()))
            };
            let scored = series(Direction::Scored)?;
            let conceded = series(Direction::Conceded)?;
            team_strength(team, &scored, &conceded, &config.ctrl).map_err(|e| exclude(e.to_string()))
        })
        .collect();

    let mut strengths = Vec::new();
    let mut excluded = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(s) => strengths.push(s),
            Err(e) => excluded.push(e),
        }
    }
    let table = rank_teams(strengths);
    let rows = table
        .rows
        .into_iter()
        .map(|row| {
            let s = row.strength;
            let (a, d) = (
                s.attack_fit.cmp_params().expect("ranked teams carry CMP fits"),
                s.defense_fit.cmp_params().expect("ranked teams carry CMP fits"),
            );
            RankRow {
                rank: row.rank,
                team: s.team,
                avg_scored: s.avg_scored,
                avg_conceded: s.avg_conceded,
                attack_strength: s.attack,
                defense_strength: s.defense,
                strength: s.overall,
                matches: s.matches_used,
                lambda_attack: a.lambda(),
                nu_attack: a.nu(),
                lambda_defense: d.lambda(),
                nu_defense: d.nu(),
            }
        })
        .collect();
    RankOutput { rows, excluded }
}

pub fn cmd_rank(config: &RunConfig) -> Result<Output, CliError> {
    let loaded = load(config)?;
    let dataset = selected(config, &loaded.dataset)?;
    let ranking = rank_dataset(&dataset, config);
    if ranking.rows.is_empty() {
        let reasons: Vec<String> = ranking.excluded.iter().map(|e| format!("{}: {}", e.team, e.reason)).collect();
        return Err(CliError::new(
            ExitCode::NothingRankable,
            format!("no team could be ranked ({})", reasons.join("; ")),
        ));
    }
    let stdout = match config.format {
        OutputFormat::Json => to_json(&ranking),
        OutputFormat::Csv => {
            let mut out = to_csv(&ranking.rows);
            if !ranking.excluded.is_empty() {
                out.push('\n');
                out.push_str(&to_csv(&ranking.excluded));
            }
            out
        }
        OutputFormat::Table => {
            let rows: Vec<Vec<String>> = ranking
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.rank.to_string(),
                        r.team.clone(),
                        fmt2(r.avg_scored),
                        fmt2(r.avg_conceded),
                        fmt2(r.attack_strength),
                        fmt2(r.defense_strength),
                        fmt2(r.strength),
                    ]
                })
                .collect();
            let mut out = render_table(
                &["rank", "team", "avg. scored", "avg. conceded", "attack strength", "defense strength", "strength"],
                2,
                &rows,
            );
            if !ranking.excluded.is_empty() {
                out.push_str("\nexcluded:\n");
                for e in &ranking.excluded {
                    let _ = writeln!(out, "  {}: {}", e.team, e.reason);
                }
            }
            out
        }
    };
    Ok(Output {
        stdout,
        notes: loaded.notes,
    })
}

// ------------------------------------------------------------------ simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub lambda: f64,
    pub nu: f64,
    pub emp_mean: f64,
}

/// One row per `(λ, ν)` cell, `λ` varying slowest. Cell `i` draws from
/// stream `i` of a ChaCha8 generator seeded with `seed`.
pub fn simulate_grid(
    lambdas: &[f64],
    nus: &[f64],
    n_per_cell: usize,
    seed: u64,
    ctrl: &SeriesControl,
) -> Result<Vec<SimulationRow>, CliError> {
    if lambdas.is_empty() || nus.is_empty() {
        return Err(usage("invalid grid: --lambda-grid and --nu-grid must be non-empty"));
    }
    if n_per_cell == 0 {
        return Err(usage("invalid grid: --n-per-cell must be positive"));
    }
    let cells: Vec<(f64, f64)> = lambdas.iter().flat_map(|&l| nus.iter().map(move |&n| (l, n))).collect();
    let dists = cells
        .iter()
        .map(|&(lambda, nu)| {
            CmpParams::new(lambda, nu)
                .and_then(|p| Cmp::new(p, ctrl))
                .map_err(|e| usage(format!("invalid grid cell (λ = {lambda}, ν = {nu}): {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(dists
        .par_iter()
        .enumerate()
        .map(|(i, dist)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let draws = dist.sample(n_per_cell, &mut rng);
            SimulationRow {
                lambda: cells[i].0,
                nu: cells[i].1,
                emp_mean: draws.iter().sum::<u64>() as f64 / n_per_cell as f64,
            }
        })
        .collect())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Output, CliError> {
    let ctrl = series_control(args.rel_tol)?;
    let rows = simulate_grid(&args.lambda_grid, &args.nu_grid, args.n_per_cell, args.seed, &ctrl)?;
    let stdout = match args.format {
        OutputFormat::Json => to_json(&rows),
        OutputFormat::Csv => to_csv(&rows),
        OutputFormat::Table => {
            let rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.lambda.to_string(), r.nu.to_string(), fmt2(r.emp_mean)])
                .collect();
            render_table(&["lambda", "nu", "emp_mean"], 0, &rows)
        }
    };
    Ok(Output {
        stdout,
        notes: Vec::new(),
    })
}
