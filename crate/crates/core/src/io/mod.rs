//! Ingestion, batch processing into the artifact store, and table exports.

pub mod export;
pub mod ingest;
pub mod store;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::aggregation::{build_season, Season};
use crate::config::EngineConfig;
use crate::model::format::{write_events, write_meta, write_tracking, FormatError};
use crate::model::{Event, Frame, MatchMeta};
use crate::pipeline::analyze_match;

pub use export::{export, ExportError, Filters, Table, ANALYSES};
pub use ingest::{ingest, lint, IngestError, Ingested, LintIssue, LintKind, LintReport, MatchFiles, SequenceSpan, Severity};
pub use store::{write_artifacts, ArtifactEntry, MatchEntry, MatchStatus, Manifest, Store, StoreError, ARTIFACT_KINDS};

/// Result of processing one input directory.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub match_id: String,
    pub source: PathBuf,
    pub status: MatchStatus,
    pub error: Option<String>,
    pub warnings: Vec<LintIssue>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineRun {
    /// In match-id order.
    pub outcomes: Vec<MatchOutcome>,
}

impl PipelineRun {
    pub fn failed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.status == MatchStatus::Failed).count()
    }
}

fn fallback_id(dir: &Path) -> String {
    dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| dir.display().to_string())
}

fn process_one(dir: &Path, cfg: &EngineConfig, root: &Path) -> (MatchOutcome, MatchEntry) {
    let files = MatchFiles::in_dir(dir);
    let fail = |id: String, msg: String, warnings: Vec<LintIssue>| {
        let entry = MatchEntry {
            status: MatchStatus::Failed,
            error: Some(msg.clone()),
            source: dir.display().to_string(),
            lint_warnings: warnings.len(),
            artifacts: Default::default(),
        };
        let outcome = MatchOutcome {
            match_id: id,
            source: dir.to_path_buf(),
            status: MatchStatus::Failed,
            error: Some(msg),
            warnings,
        };
        (outcome, entry)
    };
    let ingested = match ingest(&files, cfg.kinematics.max_gap_ms, cfg.kinematics.nominal_dt_ms) {
        Ok(i) => i,
        Err(e) => {
            let id = match &e {
                IngestError::Invalid { match_id, .. } => match_id.clone(),
                _ => fallback_id(dir),
            };
            return fail(id, e.to_string(), Vec::new());
        }
    };
    let id = ingested.bundle.meta.match_id.clone();
    let warnings: Vec<LintIssue> = ingested.report.warnings().cloned().collect();
    let artifacts = match analyze_match(&ingested.bundle, cfg) {
        Ok(a) => a,
        Err(e) => return fail(id, e.to_string(), warnings),
    };
    drop(ingested);
    match write_artifacts(root, &artifacts) {
        Ok(files) => {
            let entry = MatchEntry {
                status: MatchStatus::Ok,
                error: None,
                source: dir.display().to_string(),
                lint_warnings: warnings.len(),
                artifacts: files,
            };
            let outcome = MatchOutcome {
                match_id: id,
                source: dir.to_path_buf(),
                status: MatchStatus::Ok,
                error: None,
                warnings,
            };
            (outcome, entry)
        }
        Err(e) => fail(id, e.to_string(), warnings),
    }
}

/// Ingests, analyses and stores every match directory on a pool of `jobs`
/// workers. A failing match is recorded as failed in the manifest; the
/// others still complete.
pub fn run_pipeline(inputs: &[PathBuf], cfg: &EngineConfig, store: &mut Store, jobs: usize) -> Result<PipelineRun, StoreError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("worker pool starts");
    let root = store.root().to_path_buf();
    let mut results: Vec<(MatchOutcome, MatchEntry)> =
        pool.install(|| inputs.par_iter().map(|dir| process_one(dir, cfg, &root)).collect());
    results.sort_by(|a, b| a.0.match_id.cmp(&b.0.match_id).then_with(|| a.0.source.cmp(&b.0.source)));
    let mut run = PipelineRun::default();
    for (outcome, entry) in results {
        store.record(&outcome.match_id, entry);
        run.outcomes.push(outcome);
    }
    store.save()?;
    Ok(run)
}

/// Season over every successfully processed match in the store, using the
/// configuration the store was built with.
pub fn load_season(store: &Store) -> Result<Season, StoreError> {
    let cfg = store.config()?;
    let artifacts = store.load_all()?;
    Ok(build_season(&artifacts, &cfg.aggregation, cfg.valuation.min_cell_samples))
}

/// Writes a match in the input layout read by [`ingest`].
pub fn write_match_dir(dir: &Path, meta: &MatchMeta, frames: &[Frame], events: &[Event]) -> Result<(), FormatError> {
    fs::create_dir_all(dir)?;
    let create = |name: &str| fs::File::create(dir.join(name)).map(BufWriter::new);
    let mut w = create(ingest::META_FILE)?;
    write_meta(&mut w, meta)?;
    w.flush()?;
    let mut w = create(ingest::TRACKING_FILE)?;
    write_tracking(&mut w, frames)?;
    w.flush()?;
    let mut w = create(ingest::EVENTS_FILE)?;
    write_events(&mut w, events)?;
    w.flush()?;
    Ok(())
}
