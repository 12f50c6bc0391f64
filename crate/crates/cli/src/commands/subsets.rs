//! `build-subsets`: derive the three aligned training sets from a weak and
//! a strong store — the weak labels restricted to the shared clips, the
//! strong labels on those clips, and their diffuse (full-clip) expansion.
//!
//! All three manifests cover exactly the same clip set: the intersection of
//! the two stores. Strong clips missing from the weak store are reported.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use framelab::corpus::{build_diffuse, write_strong_tsv, write_weak_csv};
use framelab::types::ClipId;
use serde::Serialize;

use crate::config::Config;
use crate::errors::{CliError, CliResult};
use crate::store::{read_store, timestamp, write_file};

pub const WEAK_SUBSET_FILE: &str = "weak_subset.csv";
pub const STRONG_SUBSET_FILE: &str = "strong_subset.tsv";
pub const DIFFUSE_SUBSET_FILE: &str = "diffuse_subset.tsv";
pub const SUBSETS_STATS_FILE: &str = "subsets.json";

#[derive(Debug, clap::Args)]
pub struct SubsetsArgs {
    #[arg(long)]
    pub weak_store: PathBuf,
    #[arg(long)]
    pub strong_store: PathBuf,
}

#[derive(Serialize)]
struct SubsetsStats {
    schema: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
    n_shared_clips: usize,
    n_weak_store_clips: usize,
    n_strong_store_clips: usize,
    /// Strong-store clips absent from the weak store, excluded from all
    /// three subsets.
    missing_from_weak: Vec<String>,
}

pub fn run(args: &SubsetsArgs, _config: &Config, out: &Path, no_timestamp: bool) -> CliResult<()> {
    let weak = read_store(&args.weak_store)?.weak.ok_or_else(|| {
        CliError::validation(format!("{} has no weak corpus", args.weak_store.display()))
    })?;
    let strong = read_store(&args.strong_store)?.strong.ok_or_else(|| {
        CliError::validation(format!(
            "{} has no strong corpus",
            args.strong_store.display()
        ))
    })?;

    let shared: BTreeSet<ClipId> = weak
        .clips()
        .intersection(strong.clips())
        .cloned()
        .collect();
    if shared.is_empty() {
        return Err(CliError::validation(
            "weak and strong stores share no clips; cannot build aligned subsets",
        ));
    }
    let missing: Vec<String> = strong
        .clips()
        .difference(weak.clips())
        .map(ClipId::segment_id)
        .collect();

    let weak_subset = weak.restrict_to_clips(&shared);
    let strong_subset = strong.restrict_to_clips(&shared);
    let diffuse_subset = build_diffuse(&strong_subset)?;
    debug_assert_eq!(weak_subset.clips(), strong_subset.clips());
    debug_assert_eq!(weak_subset.clips(), diffuse_subset.clips());

    write_file(&out.join(WEAK_SUBSET_FILE), &write_weak_csv(&weak_subset))?;
    write_file(&out.join(STRONG_SUBSET_FILE), &write_strong_tsv(&strong_subset))?;
    write_file(&out.join(DIFFUSE_SUBSET_FILE), &write_strong_tsv(&diffuse_subset))?;

    let stats = SubsetsStats {
        schema: 1,
        generated_at_unix: timestamp(no_timestamp),
        n_shared_clips: shared.len(),
        n_weak_store_clips: weak.n_clips(),
        n_strong_store_clips: strong.n_clips(),
        missing_from_weak: missing,
    };
    let json = serde_json::to_string_pretty(&stats)
        .map_err(|e| CliError::validation(format!("stats serialization: {e}")))?;
    write_file(&out.join(SUBSETS_STATS_FILE), &format!("{json}\n"))?;

    if !stats.missing_from_weak.is_empty() {
        eprintln!(
            "warning: {} strong clips missing from the weak store were excluded",
            stats.missing_from_weak.len()
        );
    }
    println!(
        "subsets over {} shared clips written to {}",
        shared.len(),
        out.display()
    );
    Ok(())
}
