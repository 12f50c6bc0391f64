//! `analyze`: priors scatter and top-K cross-set odds-ratio tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use framelab::analysis::{priors_scatter, top_cross_odds, LabelSet, OddsRow};

use crate::config::Config;
use crate::errors::{CliError, CliResult};
use crate::store::{read_store, timestamp, write_file};

pub const SCATTER_FILE: &str = "priors_scatter.csv";
pub const ODDS_W2S_FILE: &str = "odds_weak_to_strong.csv";
pub const ODDS_S2W_FILE: &str = "odds_strong_to_weak.csv";

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// Store holding the weak corpus.
    #[arg(long)]
    pub weak_store: PathBuf,
    /// Store holding the strong corpus.
    #[arg(long)]
    pub strong_store: PathBuf,
    /// Outcome classes reported per condition class.
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
}

fn odds_csv(rows: &[OddsRow], n_shared: usize, ts: Option<u64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# n_shared_clips={n_shared}");
    if let Some(ts) = ts {
        let _ = writeln!(out, "# generated_at_unix={ts}");
    }
    out.push_str("condition_class,outcome_class,odds_ratio,a,b,c,d\n");
    for r in rows {
        let t = r.table;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.condition_class, r.outcome_class, r.odds_ratio, t.a, t.b, t.c, t.d
        );
    }
    out
}

pub fn run(args: &AnalyzeArgs, _config: &Config, out: &Path, no_timestamp: bool) -> CliResult<()> {
    let weak = read_store(&args.weak_store)?.weak.ok_or_else(|| {
        CliError::validation(format!("{} has no weak corpus", args.weak_store.display()))
    })?;
    let strong = read_store(&args.strong_store)?.strong.ok_or_else(|| {
        CliError::validation(format!(
            "{} has no strong corpus",
            args.strong_store.display()
        ))
    })?;

    let ts = timestamp(no_timestamp);

    let mut scatter = String::new();
    if let Some(ts) = ts {
        let _ = writeln!(scatter, "# generated_at_unix={ts}");
    }
    scatter.push_str("class_id,weak_prior,strong_prior,ratio\n");
    let rows = priors_scatter(&weak, &strong);
    let n_rows = rows.len();
    for r in &rows {
        let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            scatter,
            "{},{},{},{ratio}",
            r.class_id, r.weak_prior, r.strong_prior
        );
    }
    write_file(&out.join(SCATTER_FILE), &scatter)?;

    let (w2s, shared) = top_cross_odds(&weak, &strong, LabelSet::Weak, args.top_k)?;
    write_file(&out.join(ODDS_W2S_FILE), &odds_csv(&w2s, shared, ts))?;
    let (s2w, _) = top_cross_odds(&weak, &strong, LabelSet::Strong, args.top_k)?;
    write_file(&out.join(ODDS_S2W_FILE), &odds_csv(&s2w, shared, ts))?;

    println!(
        "analyzed {n_rows} classes over {shared} shared clips -> {}, {}, {}",
        out.join(SCATTER_FILE).display(),
        out.join(ODDS_W2S_FILE).display(),
        out.join(ODDS_S2W_FILE).display()
    );
    Ok(())
}
