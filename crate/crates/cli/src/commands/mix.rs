//! `mix-manifest`: per-row Bernoulli mixture of a weak manifest and a
//! strong-like manifest, with a fresh random one-frame crop per row.
//!
//! Row draw order is fixed (source, then clip index, then crop position),
//! so output is byte-identical for a given (seed, epoch). The epoch selects
//! an independent ChaCha stream over the same seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use framelab::corpus::{parse_strong_tsv, parse_weak_csv, ClipStrong, Corpus, WeakPolarity};
use framelab::framing::sample_crop_with_rng;
use framelab::time::format_seconds;
use framelab::types::{ClipId, Mid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::errors::{CliError, CliResult};
use crate::store::{read_to_string, timestamp, write_file};

pub const MANIFEST_FILE: &str = "mix_manifest.tsv";

#[derive(Debug, clap::Args)]
pub struct MixArgs {
    /// Weak manifest (weak CSV, e.g. `weak_subset.csv`).
    #[arg(long)]
    pub weak: PathBuf,
    /// Strong-like manifest (strong TSV: `strong_subset.tsv` or
    /// `diffuse_subset.tsv`).
    #[arg(long)]
    pub strong: PathBuf,
    /// Probability of drawing a row from the strong-like source.
    #[arg(long)]
    pub mu: f64,
    /// Output rows (default: number of weak-manifest clips).
    #[arg(long)]
    pub rows: Option<usize>,
    /// Epoch number; selects an independent random stream per epoch.
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
}

/// Seed plus epoch pin down the generator: the seed keys ChaCha8 and the
/// epoch selects its stream.
fn manifest_rng(seed: u64, epoch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    rng
}

fn check_croppable(clips: &[&ClipId], frame_dur: std::time::Duration) -> CliResult<()> {
    for clip in clips {
        if clip.duration() < frame_dur {
            return Err(CliError::validation(format!(
                "clip {clip} ({}s) is shorter than one frame; cannot crop",
                clip.duration().as_secs_f64()
            )));
        }
    }
    Ok(())
}

pub fn run(
    args: &MixArgs,
    config: &Config,
    out: &Path,
    seed: u64,
    no_timestamp: bool,
) -> CliResult<()> {
    if !(args.mu >= 0.0 && args.mu <= 1.0) {
        return Err(CliError::validation(format!(
            "--mu must be in [0, 1], found {}",
            args.mu
        )));
    }
    let weak: Corpus =
        parse_weak_csv(&read_to_string(&args.weak)?).map_err(|e| CliError::in_file(&args.weak, e))?;
    let strong: Corpus = parse_strong_tsv(&read_to_string(&args.strong)?)
        .map_err(|e| CliError::in_file(&args.strong, e))?;

    let weak_clips: Vec<&ClipId> = weak.clips().iter().collect();
    let weak_classes: BTreeMap<&ClipId, Vec<&Mid>> = {
        let mut map: BTreeMap<&ClipId, Vec<&Mid>> = BTreeMap::new();
        for a in weak.weak() {
            if a.polarity == WeakPolarity::Present {
                map.entry(&a.clip).or_default().push(&a.class_id);
            }
        }
        map
    };
    let strong_views: Vec<ClipStrong> = strong.strong_clip_views();

    let rows = args.rows.unwrap_or(weak_clips.len());
    if rows > 0 {
        if args.mu > 0.0 {
            if strong_views.is_empty() {
                return Err(CliError::validation(
                    "strong manifest is empty but --mu > 0 would draw from it",
                ));
            }
            let clips: Vec<&ClipId> = strong_views.iter().map(|v| &v.clip).collect();
            check_croppable(&clips, config.framing.frame_dur)?;
        }
        if args.mu < 1.0 {
            if weak_clips.is_empty() {
                return Err(CliError::validation(
                    "weak manifest is empty but --mu < 1 would draw from it",
                ));
            }
            check_croppable(&weak_clips, config.framing.frame_dur)?;
        }
    }

    let mut rng = manifest_rng(seed, args.epoch);
    let mut body = String::from("clip_id\tsource\tcrop_start_s\tlabels\n");
    let mut n_strong_rows = 0usize;
    for _ in 0..rows {
        let strong_like = rng.random::<f64>() < args.mu;
        if strong_like {
            n_strong_rows += 1;
            let view = &strong_views[rng.random_range(0..strong_views.len())];
            let crop = sample_crop_with_rng(view, &config.framing, &mut rng)?;
            let labels = crop
                .classes
                .iter()
                .map(Mid::as_str)
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(
                body,
                "{}\tSTRONG_LIKE\t{}\t{labels}",
                view.clip.segment_id(),
                format_seconds(crop.crop_start)
            );
        } else {
            let clip = weak_clips[rng.random_range(0..weak_clips.len())];
            let max_start = (clip.duration() - config.framing.frame_dur).as_nanos() as u64;
            let start = std::time::Duration::from_nanos(rng.random_range(0..=max_start));
            let labels = weak_classes
                .get(clip)
                .map(|classes| {
                    classes
                        .iter()
                        .map(|m| m.as_str())
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .unwrap_or_default();
            let _ = writeln!(
                body,
                "{}\tWEAK\t{}\t{labels}",
                clip.segment_id(),
                format_seconds(start)
            );
        }
    }

    let realized = if rows > 0 {
        n_strong_rows as f64 / rows as f64
    } else {
        0.0
    };
    let mut text = String::new();
    let _ = writeln!(
        text,
        "# schema=1 mu={} seed={seed} epoch={} rows={rows} realized_strong_fraction={realized}",
        args.mu, args.epoch
    );
    if let Some(ts) = timestamp(no_timestamp) {
        let _ = writeln!(text, "# generated_at_unix={ts}");
    }
    text.push_str(&body);
    write_file(&out.join(MANIFEST_FILE), &text)?;

    println!(
        "mixed {rows} rows (strong-like fraction {realized:.4}) -> {}",
        out.join(MANIFEST_FILE).display()
    );
    Ok(())
}
