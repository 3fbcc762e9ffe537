//! `runlens`: batch ingestion, processing and exports over an artifact store.
//!
//! Exit codes: 0 success, 1 runtime error, 2 invalid input, 3 some matches
//! failed during `process`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use runlens_core::aggregation::team::STYLE_COLUMNS;
use runlens_core::aggregation::{compare_lineups, style_pca, LineupEntry, Season};
use runlens_core::config::EngineConfig;
use runlens_core::io::{
    export, ingest, load_season, run_pipeline, write_match_dir, Filters, IngestError, LintReport, MatchFiles,
    MatchStatus, Store, Table, ANALYSES,
};
use runlens_core::io::ingest::META_FILE;
use runlens_core::model::{Direction, PlayerId, Role, TeamId};
use runlens_core::synth::{full_match, generate, sprint_trace_script, FullMatchOptions, Script, TeamSpec};

#[derive(Parser, Debug)]
#[command(name = "runlens", version, about = "Off-ball run analysis from tracking and event data")]
struct Cli {
    /// Engine configuration (JSON). Defaults to the store's configuration,
    /// or the built-in defaults for a new store.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact store directory.
    #[arg(long, global = true, default_value = "store")]
    store: PathBuf,
    /// Worker threads for `process`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Read and lint match directories without processing them.
    Ingest {
        /// Match directories, or directories containing match directories.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Analyse match directories into the store.
    Process {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
    /// Print a player's season profile(s) as JSON.
    Profile {
        player: String,
        #[arg(long)]
        role: Option<String>,
    },
    /// Print team style metrics.
    TeamStyle {
        #[arg(long)]
        team: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Principal components of team style metrics, as JSON.
    Pca,
    /// Compare two 11-player lineups (JSON arrays of {player_id, role}).
    LineupCompare { lineup_a: PathBuf, lineup_b: PathBuf },
    /// Write one analysis table.
    Export {
        analysis: String,
        #[arg(long)]
        player: Option<String>,
        #[arg(long)]
        role: Option<String>,
        #[arg(long)]
        team: Option<String>,
        #[arg(long)]
        lineup_a: Option<PathBuf>,
        #[arg(long)]
        lineup_b: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic match directory from a script, with its ground
    /// truth in `truth.json`.
    Synth {
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the effective engine configuration.
    Config,
    /// Print a ready-made synthetic match script.
    Script {
        #[arg(value_enum)]
        kind: ScriptKind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "synthetic")]
        match_id: String,
        /// Home team as ID:FORMATION.
        #[arg(long, default_value = "home:4-3-3")]
        home: String,
        /// Away team as ID:FORMATION.
        #[arg(long, default_value = "away:4-4-2")]
        away: String,
        /// Length of each half in minutes.
        #[arg(long, default_value_t = 45.0)]
        half_minutes: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScriptKind {
    SprintTrace,
    FullMatch,
}

enum Failure {
    Runtime(anyhow::Error),
    Invalid(anyhow::Error),
    Partial(usize, usize),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Invalid(e.into())
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Partial(failed, total)) => {
            eprintln!("{failed} of {total} matches failed");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Ingest { dirs, format } => cmd_ingest(&cli, dirs, *format),
        Command::Process { dirs } => cmd_process(&cli, dirs),
        Command::Profile { player, role } => cmd_profile(&cli, player, role.as_deref()),
        Command::TeamStyle { team, format } => {
            let season = open_season(&cli)?;
            let filters = Filters {
                team: team.as_deref().map(TeamId::new),
                ..Filters::default()
            };
            if let Some(t) = &filters.team {
                if season.team(t).is_none() {
                    return Err(invalid(anyhow!("unknown team {t}")));
                }
            }
            let table = export(&season, "team_style", &filters).map_err(anyhow::Error::from)?;
            emit_table(&table, *format, None)
        }
        Command::Pca => cmd_pca(&cli),
        Command::LineupCompare { lineup_a, lineup_b } => {
            let season = open_season(&cli)?;
            let a = read_lineup(lineup_a)?;
            let b = read_lineup(lineup_b)?;
            let cmp = compare_lineups(&a, &b, &season.profiles).map_err(invalid)?;
            print_json(&serde_json::to_value(cmp).expect("comparison serializes"))
        }
        Command::Export {
            analysis,
            player,
            role,
            team,
            lineup_a,
            lineup_b,
            format,
            out,
        } => {
            if !ANALYSES.contains(&analysis.as_str()) {
                return Err(invalid(anyhow!("unknown analysis {analysis}; valid names: {}", ANALYSES.join(", "))));
            }
            let lineups = match (lineup_a, lineup_b) {
                (Some(a), Some(b)) => Some((read_lineup(a)?, read_lineup(b)?)),
                (None, None) => None,
                _ => return Err(invalid(anyhow!("--lineup-a and --lineup-b go together"))),
            };
            let filters = Filters {
                player: player.as_deref().map(PlayerId::new),
                role: role.as_deref().map(parse_role).transpose()?,
                team: team.as_deref().map(TeamId::new),
                lineups,
            };
            let season = open_season(&cli)?;
            let table = export(&season, analysis, &filters).map_err(|e| match e {
                runlens_core::io::ExportError::Io(_) | runlens_core::io::ExportError::Csv(_) => {
                    Failure::Runtime(e.into())
                }
                _ => invalid(e),
            })?;
            emit_table(&table, *format, out.as_deref())
        }
        Command::Synth { script, out } => cmd_synth(script, out),
        Command::Config => {
            println!("{}", engine_config(&cli)?.to_json());
            Ok(())
        }
        Command::Script {
            kind,
            seed,
            match_id,
            home,
            away,
            half_minutes,
        } => {
            let script = match kind {
                ScriptKind::SprintTrace => sprint_trace_script(),
                ScriptKind::FullMatch => {
                    let (hid, hf) = parse_team(home)?;
                    let (aid, af) = parse_team(away)?;
                    if !(*half_minutes > 0.0) {
                        return Err(invalid(anyhow!("--half-minutes must be positive")));
                    }
                    let mut opts = FullMatchOptions::new(
                        *seed,
                        match_id,
                        TeamSpec::new(hid, hf, Direction::PositiveX),
                        TeamSpec::new(aid, af, Direction::NegativeX),
                    );
                    opts.half_ms = (half_minutes * 60_000.0).round() as i64;
                    full_match(&opts)
                }
            };
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{}", script.to_json()).context("writing script")?;
            Ok(())
        }
    }
}

fn parse_role(s: &str) -> Result<Role, Failure> {
    Role::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Role::ALL.iter().map(|r| r.name()).collect();
        invalid(anyhow!("unknown role {s}; valid roles: {}", names.join(", ")))
    })
}

fn parse_team(s: &str) -> Result<(&str, &str), Failure> {
    s.split_once(':')
        .filter(|(id, f)| !id.is_empty() && !f.is_empty())
        .ok_or_else(|| invalid(anyhow!("team {s:?} is not ID:FORMATION")))
}

fn load_config(path: &Path) -> Result<EngineConfig, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    EngineConfig::from_json(&text).map_err(|e| invalid(anyhow!("{}: {e}", path.display())))
}

/// Configuration for reading: `--config` if given, else the store's own.
fn engine_config(cli: &Cli) -> Result<EngineConfig, Failure> {
    match &cli.config {
        Some(path) => load_config(path),
        None => match Store::open(&cli.store) {
            Ok(store) => store.config().map_err(invalid),
            Err(_) => Ok(EngineConfig::default()),
        },
    }
}

/// A directory holding `meta.json` is a match; otherwise its immediate
/// subdirectories that hold one are.
fn expand_inputs(dirs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for d in dirs {
        if d.join(META_FILE).exists() {
            out.push(d.clone());
            continue;
        }
        if !d.is_dir() {
            return Err(invalid(anyhow!("{} is not a directory", d.display())));
        }
        let mut found: Vec<PathBuf> = fs::read_dir(d)
            .with_context(|| format!("listing {}", d.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(META_FILE).exists())
            .collect();
        if found.is_empty() {
            return Err(invalid(anyhow!("{} holds no match ({META_FILE} missing)", d.display())));
        }
        found.sort();
        out.extend(found);
    }
    Ok(out)
}

fn print_report(r: &LintReport) {
    println!(
        "{}: {} frames, {} events, {} sequence(s), {} error(s), {} warning(s)",
        r.match_id,
        r.frames,
        r.events,
        r.sequences.len(),
        r.errors().count(),
        r.warnings().count()
    );
    for i in &r.issues {
        let level = match i.severity {
            runlens_core::io::Severity::Error => "error",
            runlens_core::io::Severity::Warning => "warning",
        };
        println!("  {level} [{}:{}] {}", i.period, i.t_ms, i.message);
    }
}

fn cmd_ingest(cli: &Cli, dirs: &[PathBuf], format: Format) -> CmdResult {
    let cfg = engine_config(cli)?;
    let inputs = expand_inputs(dirs)?;
    let mut bad = 0usize;
    let mut reports = Vec::new();
    for dir in &inputs {
        let result = ingest(&MatchFiles::in_dir(dir), cfg.kinematics.max_gap_ms, cfg.kinematics.nominal_dt_ms);
        let (report, error) = match result {
            Ok(i) => (Some(i.report), None),
            Err(IngestError::Invalid { report, .. }) => {
                bad += 1;
                (Some(*report), None)
            }
            Err(e) => {
                bad += 1;
                (None, Some(e.to_string()))
            }
        };
        match format {
            Format::Json => reports.push(json!({
                "source": dir.display().to_string(),
                "report": report,
                "error": error,
            })),
            _ => {
                if let Some(r) = &report {
                    print_report(r);
                }
                if let Some(e) = &error {
                    println!("{}: unreadable: {e}", dir.display());
                }
            }
        }
    }
    if format == Format::Json {
        print_json(&serde_json::Value::Array(reports))?;
    }
    if bad > 0 {
        return Err(invalid(anyhow!("{bad} of {} match(es) failed validation", inputs.len())));
    }
    Ok(())
}

fn cmd_process(cli: &Cli, dirs: &[PathBuf]) -> CmdResult {
    let inputs = expand_inputs(dirs)?;
    let cfg = engine_config(cli)?;
    let mut store = Store::create(&cli.store, &cfg).map_err(invalid)?;
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    log::info!("processing {} match(es) on {jobs} worker(s)", inputs.len());
    let run = run_pipeline(&inputs, &cfg, &mut store, jobs).map_err(anyhow::Error::from)?;
    for o in &run.outcomes {
        match o.status {
            MatchStatus::Ok => println!("ok      {} ({} warning(s))", o.match_id, o.warnings.len()),
            MatchStatus::Failed => {
                println!("failed  {}: {}", o.match_id, o.error.as_deref().unwrap_or(""))
            }
        }
    }
    match run.failed() {
        0 => Ok(()),
        n => Err(Failure::Partial(n, run.outcomes.len())),
    }
}

fn open_season(cli: &Cli) -> Result<Season, Failure> {
    let store = Store::open(&cli.store).map_err(invalid)?;
    if let Some(path) = &cli.config {
        let cfg = load_config(path)?;
        if cfg.hash() != store.manifest().config_hash {
            return Err(invalid(anyhow!(
                "store {} was built with a different configuration than {}",
                cli.store.display(),
                path.display()
            )));
        }
    }
    load_season(&store).map_err(|e| Failure::Runtime(e.into()))
}

fn cmd_profile(cli: &Cli, player: &str, role: Option<&str>) -> CmdResult {
    let role = role.map(parse_role).transpose()?;
    let season = open_season(cli)?;
    let id = PlayerId::new(player);
    let found: Vec<_> =
        season.profiles.iter().filter(|p| p.player_id == id && role.is_none_or(|r| r == p.role)).collect();
    if found.is_empty() {
        let known = season.roster.iter().any(|r| r.player_id == id && role.is_none_or(|x| x == r.role));
        return Err(invalid(if known {
            anyhow!("player {player} has no qualifying profile (below the minutes threshold)")
        } else {
            anyhow!("unknown player {player}")
        }));
    }
    let value = if role.is_some() {
        serde_json::to_value(found[0])
    } else {
        serde_json::to_value(&found)
    };
    print_json(&value.expect("profile serializes"))
}

fn cmd_pca(cli: &Cli) -> CmdResult {
    let season = open_season(cli)?;
    let columns: Vec<String> = STYLE_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows: Vec<(String, Vec<Option<f64>>)> = season
        .teams
        .iter()
        .filter(|t| t.enough_matches)
        .map(|t| (t.team_id.to_string(), columns.iter().map(|c| t.metric(c)).collect()))
        .collect();
    let pca = style_pca(&rows, &columns).map_err(invalid)?;
    print_json(&serde_json::to_value(pca).expect("pca serializes"))
}

fn read_lineup(path: &Path) -> Result<Vec<LineupEntry>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| invalid(anyhow!("{}: {e}", path.display())))
}

fn cmd_synth(script_path: &Path, out: &Path) -> CmdResult {
    let text = fs::read_to_string(script_path).with_context(|| format!("reading {}", script_path.display()))?;
    let script = Script::from_json(&text).map_err(|e| invalid(anyhow!("{}: {e}", script_path.display())))?;
    let m = generate(&script).map_err(|e| invalid(anyhow!("{}: {e}", script_path.display())))?;
    write_match_dir(out, &m.meta, &m.frames, &m.events).with_context(|| format!("writing {}", out.display()))?;
    let truth = serde_json::to_vec_pretty(&m.truth).expect("truth serializes");
    fs::write(out.join("truth.json"), truth).with_context(|| format!("writing {}", out.display()))?;
    println!("{}: {} frames, {} events", m.meta.match_id, m.frames.len(), m.events.len());
    Ok(())
}

fn print_json(v: &serde_json::Value) -> CmdResult {
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, v).context("writing output")?;
    writeln!(stdout).context("writing output")?;
    Ok(())
}

fn emit_table(table: &Table, format: Format, out: Option<&Path>) -> CmdResult {
    let bytes = match format {
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&table.to_json()).expect("table serializes");
            b.push(b'\n');
            b
        }
        Format::Csv | Format::Text => table.to_csv().into_bytes(),
    };
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().lock().write_all(&bytes).context("writing output")?,
    }
    Ok(())
}
