//! `ingest`: validate label files and write a normalized corpus store.

use std::path::{Path, PathBuf};

use framelab::corpus::{
    parse_strong_tsv, parse_weak_csv, write_strong_tsv, write_weak_csv, Corpus, CorpusStats,
};
use framelab::ontology::{load_ontology, Ontology};
use serde::Serialize;

use crate::config::Config;
use crate::errors::{CliError, CliResult};
use crate::store::{read_to_string, timestamp, write_file, STATS_FILE, STRONG_FILE, WEAK_FILE};

#[derive(Debug, clap::Args)]
pub struct IngestArgs {
    /// Weak-label CSV to ingest.
    #[arg(long)]
    pub weak: Option<PathBuf>,
    /// Strong-label TSV to ingest.
    #[arg(long)]
    pub strong: Option<PathBuf>,
    /// Ontology JSON, required by --collapse-music.
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// Rewrite positive labels under the configured music subtree root to
    /// the root itself (explicit negatives for proper descendants are
    /// dropped, with a count reported).
    #[arg(long, requires = "ontology")]
    pub collapse_music: bool,
}

#[derive(Serialize)]
struct StatsSidecar {
    schema: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weak: Option<CorpusStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    strong: Option<CorpusStats>,
}

fn report_warnings(name: &str, corpus: &Corpus, dropped_negatives: usize) {
    if corpus.is_empty() {
        eprintln!("warning: {name} input has no data rows");
    }
    let w = corpus.warnings();
    if w.duplicate_annotations > 0 {
        eprintln!("warning: {name}: {} duplicate annotations collapsed", w.duplicate_annotations);
    }
    if w.clamped_segments > 0 {
        eprintln!("warning: {name}: {} segments clamped to clip bounds", w.clamped_segments);
    }
    if w.rejected_segments > 0 {
        eprintln!("warning: {name}: {} segments entirely outside their clip dropped", w.rejected_segments);
    }
    if dropped_negatives > 0 {
        eprintln!("warning: {name}: {dropped_negatives} explicit negatives dropped by --collapse-music");
    }
}

pub fn run(args: &IngestArgs, config: &Config, out: &Path, no_timestamp: bool) -> CliResult<()> {
    if args.weak.is_none() && args.strong.is_none() {
        return Err(CliError::validation(
            "ingest needs at least one of --weak or --strong",
        ));
    }
    let ontology: Option<Ontology> = match (&args.ontology, args.collapse_music) {
        (Some(path), true) => Some(
            load_ontology(&read_to_string(path)?).map_err(|e| CliError::in_file(path, e))?,
        ),
        _ => None,
    };

    let mut ingest_one = |path: &PathBuf,
                          kind: &str,
                          parse: fn(&str) -> framelab::Result<Corpus>|
     -> CliResult<Corpus> {
        let mut corpus = parse(&read_to_string(path)?).map_err(|e| CliError::in_file(path, e))?;
        let mut dropped = 0;
        if let Some(ont) = &ontology {
            let (collapsed, n) = corpus
                .collapse_subtree_labels(ont, &config.music_id)
                .map_err(|e| CliError::in_file(path, e))?;
            corpus = collapsed;
            dropped = n;
        }
        report_warnings(kind, &corpus, dropped);
        Ok(corpus)
    };

    let weak = args
        .weak
        .as_ref()
        .map(|p| ingest_one(p, "weak", parse_weak_csv))
        .transpose()?;
    let strong = args
        .strong
        .as_ref()
        .map(|p| ingest_one(p, "strong", parse_strong_tsv))
        .transpose()?;

    if let Some(c) = &weak {
        write_file(&out.join(WEAK_FILE), &write_weak_csv(c))?;
        println!(
            "weak: {} clips, {} annotations, {} classes",
            c.n_clips(),
            c.weak().len(),
            c.stats().n_classes
        );
    }
    if let Some(c) = &strong {
        write_file(&out.join(STRONG_FILE), &write_strong_tsv(c))?;
        println!(
            "strong: {} clips, {} segments, {} classes",
            c.n_clips(),
            c.strong().len(),
            c.stats().n_classes
        );
    }
    let sidecar = StatsSidecar {
        schema: 1,
        generated_at_unix: timestamp(no_timestamp),
        weak: weak.as_ref().map(Corpus::stats),
        strong: strong.as_ref().map(Corpus::stats),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| CliError::validation(format!("stats serialization: {e}")))?;
    write_file(&out.join(STATS_FILE), &format!("{json}\n"))?;
    println!("store written to {}", out.display());
    Ok(())
}
