use clap::{Args, Parser, Subcommand, ValueEnum};
use j1sim_core::goal_models::{bin_history, fit_m5, FitOptions, GoalModel, LeagueParams, Regressor, Weighting};
use j1sim_core::io;
use j1sim_core::montecarlo::{run_simulation, SimConfig, SimReport, DEFAULT_REPLICATIONS};
use j1sim_core::postseason::{
    build_bracket_official, build_bracket_proposed, classify_overlap, team_count, BracketJson, DrawRule,
    QualifierSet,
};
use j1sim_core::schedule::{generate_season_schedule, validate_schedule};
use j1sim_core::{Error, TeamId};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_ARGS: u8 = 2;
const EXIT_MALFORMED: u8 = 3;
const EXIT_INSUFFICIENT: u8 = 4;
const DEFAULT_LAMBDA_ALL: f64 = 1.35;

#[derive(Parser)]
#[command(name = "j1sim", version, about = "Two-stage league season simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimate of postseason overlap cases and field sizes.
    Simulate(SimulateArgs),
    /// Fit the linear expected-goals model to match history.
    Fit(FitArgs),
    /// Classify one standings scenario and show both brackets.
    Classify(ClassifyArgs),
    /// Generate a season schedule as CSV, or validate an existing one.
    Schedule(ScheduleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl From<ModelArg> for GoalModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::M1 => GoalModel::M1,
            ModelArg::M2 => GoalModel::M2,
            ModelArg::M3 => GoalModel::M3,
            ModelArg::M4 => GoalModel::M4,
            ModelArg::M5 => GoalModel::M5,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum DrawRuleArg {
    HigherRank,
    CoinFlip,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegressorArg {
    CellCenter,
    CellMean,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "m1")]
    model: ModelArg,
    /// Team parameter CSV. Required for m2..m5.
    #[arg(long)]
    teams: Option<PathBuf>,
    /// League-wide rate. Defaults to 1.35, or the mean of lambda_gf when --teams is given.
    #[arg(long)]
    lambda_all: Option<f64>,
    /// League size when no team file is given.
    #[arg(long, default_value_t = 18)]
    n_teams: usize,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: u64,
    /// Master seed. Drawn from system entropy when absent and recorded in the manifest.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Regression coefficients JSON, as written by `fit`. Required for m5.
    #[arg(long)]
    coeffs: Option<PathBuf>,
    /// Drop stage winners finishing in the bottom three of the total table.
    #[arg(long)]
    exclude_low_winners: bool,
    /// Use one schedule for every replication.
    #[arg(long)]
    fixed_schedule: bool,
    /// Also play out each postseason and count champions.
    #[arg(long)]
    simulate_postseason: bool,
    #[arg(long, value_enum, default_value = "higher-rank")]
    draw_rule: DrawRuleArg,
    #[arg(long, value_enum, default_value = "table")]
    emit: Emit,
    /// Write report files and manifest.json here instead of stdout/stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    history: PathBuf,
    #[arg(long, default_value_t = 0.4)]
    bin_width: f64,
    #[arg(long, default_value_t = 30)]
    min_games: usize,
    #[arg(long, value_enum, default_value = "cell-center")]
    regressor: RegressorArg,
    /// Weight each cell by its game count.
    #[arg(long)]
    weighted: bool,
    /// Output JSON file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Team ids in total-table order, comma separated. Defaults to 0..n-1.
    #[arg(long, value_delimiter = ',')]
    total_ranks: Option<Vec<u32>>,
    /// League size when --total-ranks is absent.
    #[arg(long, default_value_t = 18)]
    n_teams: u32,
    #[arg(long)]
    stage1_winner: u32,
    #[arg(long)]
    stage2_winner: u32,
    #[arg(long)]
    exclude_low_winners: bool,
    /// Print brackets as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, default_value_t = 18)]
    teams: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Validate this schedule CSV instead of generating one.
    #[arg(long)]
    validate: Option<PathBuf>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn args(message: impl Into<String>) -> Self {
        Failure { code: EXIT_ARGS, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) => EXIT_ARGS,
            Error::Malformed { .. } => EXIT_MALFORMED,
            Error::InsufficientData { .. } => EXIT_INSUFFICIENT,
            Error::UndefinedStatistic(_) | Error::Io(_) => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    master_seed: u64,
    seed_from_entropy: bool,
    config: &'a C,
    inputs: Vec<InputDigest>,
    wall_clock_seconds: f64,
}

/// Read an input file, recording its digest.
fn read_input(path: &Path, inputs: &mut Vec<InputDigest>) -> Result<Vec<u8>, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::args(format!("cannot read {}: {e}", path.display())))?;
    inputs.push(InputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
    Ok(bytes)
}

fn in_file(path: &Path, e: Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn pick_seed(seed: Option<u64>) -> (u64, bool) {
    match seed {
        Some(s) => (s, false),
        None => (rand::random(), true),
    }
}

/// Write to stdout; a closed pipe downstream is not an error.
fn write_stdout(bytes: &[u8]) -> CmdResult {
    match std::io::stdout().lock().write_all(bytes) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> j1sim_core::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let started = Instant::now();
    let model = GoalModel::from(a.model);
    if model == GoalModel::M5 && a.coeffs.is_none() {
        return Err(Failure::args("model m5 needs --coeffs FILE"));
    }
    let mut inputs = Vec::new();

    let league = match &a.teams {
        Some(path) => {
            let bytes = read_input(path, &mut inputs)?;
            let teams = io::read_teams_csv(bytes.as_slice()).map_err(|e| in_file(path, e))?;
            let lambda_all = a.lambda_all.unwrap_or_else(|| {
                teams.iter().map(|t| t.lambda_gf).sum::<f64>() / teams.len() as f64
            });
            LeagueParams::new(lambda_all, teams)?
        }
        None if model == GoalModel::M1 => {
            LeagueParams::identical(a.n_teams, a.lambda_all.unwrap_or(DEFAULT_LAMBDA_ALL))?
        }
        None => return Err(Failure::args(format!("model {model} needs --teams FILE"))),
    };
    let coeffs = match &a.coeffs {
        Some(path) => {
            let bytes = read_input(path, &mut inputs)?;
            Some(io::read_coeffs_json(bytes.as_slice()).map_err(|e| in_file(path, e))?)
        }
        None => None,
    };
    if coeffs.is_some() && model != GoalModel::M5 {
        return Err(Failure::args("--coeffs only applies to model m5"));
    }

    let (master_seed, seed_from_entropy) = pick_seed(a.seed);
    let mut cfg = SimConfig::new(model, league);
    cfg.n_replications = a.reps;
    cfg.master_seed = master_seed;
    cfg.coeffs = coeffs;
    cfg.exclude_low_winners = a.exclude_low_winners;
    cfg.fixed_schedule = a.fixed_schedule;
    cfg.simulate_postseason = a.simulate_postseason;
    cfg.n_workers = a.workers;
    cfg.draw_rule = match a.draw_rule {
        DrawRuleArg::HigherRank => DrawRule::HigherRank,
        DrawRuleArg::CoinFlip => DrawRule::CoinFlip,
    };

    let report = run_simulation(&cfg)?;
    for problem in report.consistency_errors() {
        eprintln!("warning: {problem}");
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "simulate",
        master_seed,
        seed_from_entropy,
        config: &cfg,
        inputs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    emit_report(&report, a.emit, a.out.as_deref(), &to_json(&manifest)?)
}

fn emit_report(report: &SimReport, emit: Emit, out: Option<&Path>, manifest: &str) -> CmdResult {
    let files: Vec<(&str, Vec<u8>)> = match emit {
        Emit::Json => vec![("report.json", to_json(report)?.into_bytes())],
        Emit::Table => vec![("report.txt", report.render_table().into_bytes())],
        Emit::Csv => vec![
            ("cases.csv", csv_bytes(|w| io::write_case_csv(w, report))?),
            ("team_counts.csv", csv_bytes(|w| io::write_team_count_csv(w, report))?),
        ],
    };
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (name, bytes) in &files {
                fs::write(dir.join(name), bytes)?;
            }
            fs::write(dir.join("manifest.json"), manifest)?;
        }
        None => {
            for (_, bytes) in &files {
                write_stdout(bytes)?;
            }
            eprint!("{manifest}");
        }
    }
    Ok(())
}

fn cmd_fit(a: FitArgs) -> CmdResult {
    if !(a.bin_width.is_finite() && a.bin_width > 0.0) {
        return Err(Failure::args(format!("--bin-width must be positive, got {}", a.bin_width)));
    }
    if a.min_games == 0 {
        return Err(Failure::args("--min-games must be at least 1"));
    }
    let bytes = read_input(&a.history, &mut Vec::new())?;
    let history = io::read_history_csv(bytes.as_slice()).map_err(|e| in_file(&a.history, e))?;
    let opts = FitOptions {
        bin_width: a.bin_width,
        min_games: a.min_games,
        regressor: match a.regressor {
            RegressorArg::CellCenter => Regressor::CellCenter,
            RegressorArg::CellMean => Regressor::CellMean,
        },
        weighting: if a.weighted { Weighting::GameCount } else { Weighting::Unweighted },
    };
    let coeffs = match fit_m5(&history, &opts) {
        Ok(c) => c,
        Err(e @ Error::InsufficientData { .. }) => {
            eprintln!("cells (gf_bin, ga_bin, games):");
            for c in bin_history(&history, a.bin_width)? {
                let mark = if c.games >= a.min_games { "" } else { "  (below --min-games)" };
                eprintln!("  ({}, {}) {}{mark}", c.gf_bin, c.ga_bin, c.games);
            }
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let json = to_json(&coeffs)?;
    match a.out {
        Some(path) => fs::write(path, json)?,
        None => write_stdout(json.as_bytes())?,
    }
    Ok(())
}

fn cmd_classify(a: ClassifyArgs) -> CmdResult {
    let order: Vec<TeamId> = match a.total_ranks {
        Some(ids) => ids.into_iter().map(TeamId).collect(),
        None => (0..a.n_teams).map(TeamId).collect(),
    };
    let mut sorted = order.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != order.len() {
        return Err(Failure::args("--total-ranks lists a team more than once"));
    }
    if order.len() < 4 {
        return Err(Failure::args("--total-ranks needs at least four teams"));
    }
    let rank = |id: u32, flag: &str| {
        order
            .iter()
            .position(|t| t.0 == id)
            .map(|p| p + 1)
            .ok_or_else(|| Failure::args(format!("{flag} {id} is not in the total table")))
    };
    let r1 = rank(a.stage1_winner, "--stage1-winner")?;
    let r2 = rank(a.stage2_winner, "--stage2-winner")?;
    let q = QualifierSet::from_ranks(&order, r1, r2, a.exclude_low_winners)?;
    let case = classify_overlap(&q);
    let official = build_bracket_official(&q, case)?;
    let proposed = build_bracket_proposed(&q);
    let verdict = if official.equivalent(&proposed) { "brackets equivalent" } else { "brackets differ" };

    if a.json {
        #[derive(Serialize)]
        struct Out {
            case: String,
            team_count: usize,
            equivalent: bool,
            official: BracketJson,
            proposed: BracketJson,
        }
        let out = Out {
            case: case.to_string(),
            team_count: team_count(case),
            equivalent: official.equivalent(&proposed),
            official: BracketJson::from(&official),
            proposed: BracketJson::from(&proposed),
        };
        return write_stdout(to_json(&out)?.as_bytes());
    }
    let mut s = format!("{case}, {} teams, {verdict}\n", team_count(case));
    for (label, b) in [("official", &official), ("proposed", &proposed)] {
        s += &format!("\n{label}:\n");
        for round in BracketJson::from(b).rounds {
            s += &format!("  {}\n", round.name);
            for e in round.entries {
                s += &match (e.away, e.bye) {
                    (_, true) => format!("    {} (bye)\n", e.home),
                    (Some(away), false) => format!("    {} v {}\n", e.home, away),
                    (None, false) => format!("    {}\n", e.home),
                };
            }
        }
    }
    write_stdout(s.as_bytes())
}

fn cmd_schedule(a: ScheduleArgs) -> CmdResult {
    if let Some(path) = a.validate {
        let bytes = read_input(&path, &mut Vec::new())?;
        let schedule = io::read_schedule_csv(bytes.as_slice()).map_err(|e| in_file(&path, e))?;
        let violations = validate_schedule(&schedule);
        if violations.is_empty() {
            eprintln!("valid: {} teams, {} fixtures", schedule.n_teams, schedule.fixtures.len());
            return Ok(());
        }
        for v in &violations {
            eprintln!("violation: {v}");
        }
        return Err(Failure { code: EXIT_MALFORMED, message: format!("{} violations", violations.len()) });
    }
    let (seed, from_entropy) = pick_seed(a.seed);
    if from_entropy {
        eprintln!("seed: {seed}");
    }
    let schedule = generate_season_schedule(a.teams, seed)?;
    let violations = validate_schedule(&schedule);
    write_stdout(&csv_bytes(|w| io::write_schedule_csv(w, &schedule))?)?;
    if violations.is_empty() {
        eprintln!("valid: {} teams, {} fixtures", schedule.n_teams, schedule.fixtures.len());
        Ok(())
    } else {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        Err(Failure { code: 1, message: "generated schedule failed validation".into() })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Schedule(a) => cmd_schedule(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
