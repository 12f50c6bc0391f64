//! `frame`: project a store's strong labels onto the frame grid and emit
//! the framed-label TSV with complementary and explicit negatives.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use framelab::corpus::ClipStrong;
use framelab::framing::{
    complementary_negatives, make_grid, project_explicit_negatives, project_positives,
    write_framed_tsv, FrameLabelSet,
};
use framelab::types::ClipId;

use crate::config::Config;
use crate::errors::{CliError, CliResult};
use crate::store::{read_store, timestamp, write_file};

pub const FRAMED_FILE: &str = "framed.tsv";

#[derive(Debug, clap::Args)]
pub struct FrameArgs {
    /// Corpus store directory (needs strong labels; weak explicit
    /// negatives are projected too when present).
    #[arg(long)]
    pub store: PathBuf,
    /// Suppress complementary-negative generation.
    #[arg(long)]
    pub no_comp_neg: bool,
}

pub fn run(args: &FrameArgs, config: &Config, out: &Path, no_timestamp: bool) -> CliResult<()> {
    let store = read_store(&args.store)?;
    let strong = store.strong.as_ref().ok_or_else(|| {
        CliError::validation(format!(
            "store {} has no strong labels to frame",
            args.store.display()
        ))
    })?;

    let mut views: BTreeMap<ClipId, ClipStrong> = strong
        .strong_clip_views()
        .into_iter()
        .map(|v| (v.clip.clone(), v))
        .collect();
    let negatives: BTreeMap<ClipId, Vec<framelab::Mid>> = store
        .weak
        .as_ref()
        .map(|w| {
            w.explicit_negatives_by_clip()
                .into_iter()
                .map(|(clip, classes)| {
                    (clip.clone(), classes.into_iter().cloned().collect())
                })
                .collect()
        })
        .unwrap_or_default();
    // explicit-negative-only clips still get framed
    for clip in negatives.keys() {
        views.entry(clip.clone()).or_insert_with(|| ClipStrong {
            clip: clip.clone(),
            by_class: BTreeMap::new(),
        });
    }

    let mut sets: Vec<FrameLabelSet> = Vec::with_capacity(views.len());
    let mut conflicts = 0usize;
    for (clip, view) in &views {
        let grid = make_grid(clip.duration(), &config.framing)?;
        let mut set = project_positives(view, &grid, &config.framing);
        if !args.no_comp_neg {
            complementary_negatives(&mut set, &grid);
        }
        if let Some(classes) = negatives.get(clip) {
            let outcome = project_explicit_negatives(&mut set, classes.iter(), &grid);
            conflicts += outcome.conflicts;
        }
        if !set.is_empty() {
            sets.push(set);
        }
    }

    let mut text = String::from("# schema=1\n");
    if let Some(ts) = timestamp(no_timestamp) {
        let _ = writeln!(text, "# generated_at_unix={ts}");
    }
    text.push_str(&write_framed_tsv(&sets));
    write_file(&out.join(FRAMED_FILE), &text)?;

    let rows: usize = sets.iter().map(FrameLabelSet::len).sum();
    if conflicts > 0 {
        eprintln!("warning: {conflicts} clip-level negatives conflicted with strong positives (positives kept)");
    }
    println!(
        "framed {} clips into {rows} rows -> {}",
        sets.len(),
        out.join(FRAMED_FILE).display()
    );
    Ok(())
}
