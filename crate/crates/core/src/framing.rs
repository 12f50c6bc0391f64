//! Projection of variable-duration strong labels onto a fixed frame grid,
//! plus the negative-generation rules and random training-crop labeling.
//!
//! A frame is positive for a class when its overlap with the class's merged
//! segments is at least half the frame (480 ms at the default 960 ms frame),
//! or at least half the class's total labeled duration in the clip — so
//! events shorter than 480 ms still surface. Both comparisons are inclusive.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{merge_class_segments, union_duration, ClipStrong};
use crate::error::{Error, Result};
use crate::types::{ClipId, Mid, Polarity, Segment};

/// Default frame length.
pub const DEFAULT_FRAME_DUR: Duration = Duration::from_millis(960);

/// Thresholds governing frame projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramingParams {
    /// Frame length.
    pub frame_dur: Duration,
    /// Fraction of the frame that must be filled (absolute rule).
    pub fill_fraction: f64,
    /// Fraction of the class's total labeled duration the frame must
    /// contain (relative rule).
    pub duration_fraction: f64,
}

impl Default for FramingParams {
    fn default() -> Self {
        FramingParams {
            frame_dur: DEFAULT_FRAME_DUR,
            fill_fraction: 0.5,
            duration_fraction: 0.5,
        }
    }
}

impl FramingParams {
    pub fn validate(&self) -> Result<()> {
        if self.frame_dur.is_zero() {
            return Err(Error::validation("frame_dur must be positive"));
        }
        for (name, v) in [
            ("fill_fraction", self.fill_fraction),
            ("duration_fraction", self.duration_fraction),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::validation(format!("{name} must be in (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Contiguous non-overlapping frames starting at zero. The trailing
/// remainder shorter than one frame is not framed; clips shorter than one
/// frame get a single frame spanning the whole clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGrid {
    frame_dur: Duration,
    num_frames: u32,
    clip_dur: Duration,
}

/// Lay a frame grid over a clip of the given duration.
pub fn make_grid(clip_dur: Duration, params: &FramingParams) -> Result<FrameGrid> {
    if clip_dur.is_zero() {
        return Err(Error::validation("clip duration must be positive"));
    }
    let n = (clip_dur.as_nanos() / params.frame_dur.as_nanos()) as u32;
    Ok(FrameGrid {
        frame_dur: params.frame_dur,
        num_frames: n.max(1),
        clip_dur,
    })
}

impl FrameGrid {
    pub fn num_frames(&self) -> u32 {
        self.num_frames
    }

    pub fn clip_dur(&self) -> Duration {
        self.clip_dur
    }

    /// Span of frame `k` (short clips yield one whole-clip frame).
    pub fn frame_span(&self, k: u32) -> Segment {
        debug_assert!(k < self.num_frames);
        if self.clip_dur < self.frame_dur {
            return Segment {
                start: Duration::ZERO,
                end: self.clip_dur,
            };
        }
        Segment {
            start: self.frame_dur * k,
            end: self.frame_dur * (k + 1),
        }
    }

    pub fn frames(&self) -> impl Iterator<Item = (u32, Segment)> + '_ {
        (0..self.num_frames).map(|k| (k, self.frame_span(k)))
    }
}

/// Per-clip frame labels: at most one polarity per (frame, class).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabelSet {
    pub clip: ClipId,
    entries: BTreeMap<(u32, Mid), Polarity>,
}

impl FrameLabelSet {
    pub fn new(clip: ClipId) -> Self {
        FrameLabelSet {
            clip,
            entries: BTreeMap::new(),
        }
    }

    pub fn polarity(&self, frame: u32, class: &Mid) -> Option<Polarity> {
        self.entries.get(&(frame, class.clone())).copied()
    }

    /// Entries in (frame, class) order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, &Mid, Polarity)> {
        self.entries.iter().map(|((f, m), p)| (*f, m, *p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, polarity: Polarity) -> usize {
        self.entries.values().filter(|p| **p == polarity).count()
    }

    /// Classes with at least one positive frame.
    pub fn positive_classes(&self) -> BTreeSet<&Mid> {
        self.entries
            .iter()
            .filter(|(_, p)| **p == Polarity::Positive)
            .map(|((_, m), _)| m)
            .collect()
    }

    fn is_positive(&self, frame: u32, class: &Mid) -> bool {
        self.polarity(frame, class) == Some(Polarity::Positive)
    }
}

/// The dual inclusive 50% rule for one frame and one class.
///
/// `segments` must be merged (disjoint) and `total_class_dur` must be the
/// union duration of the class's segments within the clip.
pub fn is_frame_positive(
    frame: Segment,
    segments: &[Segment],
    total_class_dur: Duration,
    params: &FramingParams,
) -> bool {
    if segments.is_empty() || total_class_dur.is_zero() {
        return false;
    }
    let overlap: Duration = segments.iter().map(|s| frame.overlap(s)).sum();
    // Nanosecond counts are far below 2^53, so these products and
    // comparisons are exact in f64.
    let overlap_ns = overlap.as_nanos() as f64;
    let fill_threshold = params.fill_fraction * frame.duration().as_nanos() as f64;
    let duration_threshold = params.duration_fraction * total_class_dur.as_nanos() as f64;
    overlap_ns >= fill_threshold || overlap_ns >= duration_threshold
}

/// Sum of a frame's overlap with a set of merged segments.
pub fn frame_overlap(frame: Segment, segments: &[Segment]) -> Duration {
    segments.iter().map(|s| frame.overlap(s)).sum()
}

/// Project one clip's strong labels onto the grid, producing positives only.
pub fn project_positives(
    view: &ClipStrong,
    grid: &FrameGrid,
    params: &FramingParams,
) -> FrameLabelSet {
    let mut set = FrameLabelSet::new(view.clip.clone());
    for (class, raw) in &view.by_class {
        let merged = merge_class_segments(raw);
        let total = union_duration(&merged);
        for (k, span) in grid.frames() {
            if is_frame_positive(span, &merged, total, params) {
                set.entries.insert((k, class.clone()), Polarity::Positive);
            }
        }
    }
    set
}

/// For every class with at least one positive frame, mark every other frame
/// of the clip as a complementary negative. Returns the number of entries
/// added.
pub fn complementary_negatives(set: &mut FrameLabelSet, grid: &FrameGrid) -> usize {
    let classes: Vec<Mid> = set.positive_classes().into_iter().cloned().collect();
    let mut added = 0;
    for class in classes {
        for k in 0..grid.num_frames() {
            set.entries.entry((k, class.clone())).or_insert_with(|| {
                added += 1;
                Polarity::ComplementaryNegative
            });
        }
    }
    added
}

/// Outcome of projecting clip-level explicit negatives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExplicitNegOutcome {
    /// Frame entries set to `ExplicitNegative`.
    pub added: usize,
    /// (clip, class) pairs where strong positives contradicted the
    /// clip-level negative; the positives win.
    pub conflicts: usize,
}

/// Project clip-level explicit negatives onto every frame, except frames
/// already positive for the same class (the strong annotation is the more
/// precise pass and is kept; the disagreement is counted).
pub fn project_explicit_negatives<'a>(
    set: &mut FrameLabelSet,
    classes: impl IntoIterator<Item = &'a Mid>,
    grid: &FrameGrid,
) -> ExplicitNegOutcome {
    let mut outcome = ExplicitNegOutcome::default();
    for class in classes {
        let mut conflicted = false;
        for k in 0..grid.num_frames() {
            if set.is_positive(k, class) {
                conflicted = true;
                continue;
            }
            let prev = set
                .entries
                .insert((k, class.clone()), Polarity::ExplicitNegative);
            if prev != Some(Polarity::ExplicitNegative) {
                outcome.added += 1;
            }
        }
        if conflicted {
            outcome.conflicts += 1;
        }
    }
    outcome
}

/// A randomly placed one-frame training crop with its classes.
#[derive(Debug, Clone, PartialEq)]
pub struct CropLabel {
    pub clip: ClipId,
    pub crop_start: Duration,
    pub classes: BTreeSet<Mid>,
}

/// Sample a uniform crop start and label the window by the same dual 50%
/// rule as grid frames. Deterministic for a fixed seed.
pub fn sample_crop(view: &ClipStrong, params: &FramingParams, seed: u64) -> Result<CropLabel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_crop_with_rng(view, params, &mut rng)
}

/// As [`sample_crop`], drawing from a caller-owned generator (two draws:
/// crop position only).
pub fn sample_crop_with_rng(
    view: &ClipStrong,
    params: &FramingParams,
    rng: &mut impl Rng,
) -> Result<CropLabel> {
    let clip_dur = view.clip.duration();
    if clip_dur < params.frame_dur {
        return Err(Error::validation(format!(
            "clip {} ({}s) is shorter than one frame",
            view.clip,
            clip_dur.as_secs_f64()
        )));
    }
    let max_start = (clip_dur - params.frame_dur).as_nanos() as u64;
    let start = Duration::from_nanos(rng.random_range(0..=max_start));
    let window = Segment {
        start,
        end: start + params.frame_dur,
    };
    let mut classes = BTreeSet::new();
    for (class, raw) in &view.by_class {
        let merged = merge_class_segments(raw);
        let total = union_duration(&merged);
        if is_frame_positive(window, &merged, total, params) {
            classes.insert(class.clone());
        }
    }
    Ok(CropLabel {
        clip: view.clip.clone(),
        crop_start: start,
        classes,
    })
}

/// One row of the framed-label TSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramedRow {
    pub segment_id: String,
    pub frame: u32,
    pub class_id: Mid,
    pub polarity: Polarity,
}

/// Serialize framed label sets as TSV (`segment_id  frame_index  label
/// polarity`), sorted by clip, frame, class.
pub fn write_framed_tsv(sets: &[FrameLabelSet]) -> String {
    let mut out = String::from("segment_id\tframe_index\tlabel\tpolarity\n");
    let mut ordered: Vec<&FrameLabelSet> = sets.iter().collect();
    ordered.sort_by(|a, b| a.clip.cmp(&b.clip));
    for set in ordered {
        let segment_id = set.clip.segment_id();
        for (frame, class, polarity) in set.entries() {
            let _ = writeln!(out, "{segment_id}\t{frame}\t{class}\t{polarity}");
        }
    }
    out
}

/// Parse a framed-label TSV. Duplicate (segment, frame, class) rows with
/// conflicting polarity are rejected.
pub fn parse_framed_tsv(text: &str) -> Result<Vec<FramedRow>> {
    const HEADER: [&str; 4] = ["segment_id", "frame_index", "label", "polarity"];
    let mut rows = Vec::new();
    let mut seen: BTreeMap<(String, u32, Mid), Polarity> = BTreeMap::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !saw_header {
            if fields != HEADER {
                return Err(Error::parse(
                    lineno,
                    format!("expected header {:?}", HEADER.join("\t")),
                ));
            }
            saw_header = true;
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let frame: u32 = fields[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid frame index {:?}", fields[1])))?;
        let polarity: Polarity = fields[3]
            .parse()
            .map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
        let class = Mid::from(fields[2]);
        let key = (fields[0].to_owned(), frame, class.clone());
        match seen.get(&key) {
            Some(p) if *p == polarity => continue,
            Some(_) => {
                return Err(Error::validation(format!(
                    "row {lineno}: conflicting polarity for {} frame {frame} class {class}",
                    fields[0]
                )))
            }
            None => {
                seen.insert(key, polarity);
            }
        }
        rows.push(FramedRow {
            segment_id: fields[0].to_owned(),
            frame,
            class_id: class,
            polarity,
        });
    }
    Ok(rows)
}
