//! Weak and strong label corpora: file parsing, canonical re-serialization,
//! derived corpora (diffuse expansion, restriction), priors, and
//! class-balanced clip selection.
//!
//! Two text formats are supported:
//!
//! * weak labels: CSV with `#`-prefixed comment/header lines and rows
//!   `YTID, start_seconds, end_seconds, positive_labels` where
//!   `positive_labels` is a double-quoted comma-separated MID list. An
//!   optional fifth `polarity` column (`present` / `negative`) marks
//!   clip-level explicit negatives; absent means `present`.
//! * strong labels: TSV with header
//!   `segment_id<TAB>start_time_seconds<TAB>end_time_seconds<TAB>label`,
//!   where `segment_id` is `<ytid>_<clip start in milliseconds>` and times
//!   are seconds relative to the clip start.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::time::{format_seconds, parse_seconds, parse_signed_seconds};
use crate::types::{ClipId, Mid, Segment};

/// Clip-level label polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WeakPolarity {
    Present,
    ExplicitNegative,
}

/// One clip-level annotation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct WeakAnnotation {
    pub clip: ClipId,
    pub class_id: Mid,
    pub polarity: WeakPolarity,
}

/// One temporally-strong annotation: a class present over `span`,
/// relative to the clip start.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LabeledSegment {
    pub clip: ClipId,
    pub class_id: Mid,
    pub span: Segment,
}

/// What a corpus holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    Weak,
    Strong,
    Diffuse,
}

impl CorpusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusKind::Weak => "weak",
            CorpusKind::Strong => "strong",
            CorpusKind::Diffuse => "diffuse",
        }
    }
}

/// Counters for tolerated input irregularities. Nonzero values are worth
/// surfacing to users but do not invalidate the load.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ParseWarnings {
    /// Identical (clip, class, polarity) annotations collapsed into one.
    pub duplicate_annotations: usize,
    /// Segments with times slightly outside the clip, clamped to it.
    pub clamped_segments: usize,
    /// Segments entirely outside the clip, dropped.
    pub rejected_segments: usize,
}

impl ParseWarnings {
    pub fn any(&self) -> bool {
        self.duplicate_annotations > 0 || self.clamped_segments > 0 || self.rejected_segments > 0
    }
}

/// An immutable set of clips with their weak and/or strong annotations.
///
/// Internal storage is sorted, so equality is structural and serialization
/// is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    kind: CorpusKind,
    clips: BTreeSet<ClipId>,
    weak: Vec<WeakAnnotation>,
    strong: Vec<LabeledSegment>,
    warnings: ParseWarnings,
}

impl Corpus {
    pub fn new(kind: CorpusKind) -> Self {
        Corpus {
            kind,
            clips: BTreeSet::new(),
            weak: Vec::new(),
            strong: Vec::new(),
            warnings: ParseWarnings::default(),
        }
    }

    pub fn kind(&self) -> CorpusKind {
        self.kind
    }

    pub fn clips(&self) -> &BTreeSet<ClipId> {
        &self.clips
    }

    pub fn n_clips(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn weak(&self) -> &[WeakAnnotation] {
        &self.weak
    }

    pub fn strong(&self) -> &[LabeledSegment] {
        &self.strong
    }

    pub fn warnings(&self) -> ParseWarnings {
        self.warnings
    }

    /// Register a clip with no annotations yet.
    pub fn add_clip(&mut self, clip: ClipId) {
        self.clips.insert(clip);
    }

    /// Add a clip-level annotation. Exact duplicates are dropped (counted);
    /// a (clip, class) pair with both polarities is rejected.
    pub fn add_weak(&mut self, clip: ClipId, class_id: Mid, polarity: WeakPolarity) -> Result<()> {
        match self
            .weak
            .iter()
            .find(|a| a.clip == clip && a.class_id == class_id)
        {
            Some(existing) if existing.polarity == polarity => {
                self.warnings.duplicate_annotations += 1;
                return Ok(());
            }
            Some(_) => {
                return Err(Error::validation(format!(
                    "conflicting polarity for clip {clip} class {class_id}"
                )));
            }
            None => {}
        }
        self.clips.insert(clip.clone());
        self.weak.push(WeakAnnotation {
            clip,
            class_id,
            polarity,
        });
        self.weak.sort();
        Ok(())
    }

    /// Add a strong segment. The span must lie within the clip.
    pub fn add_segment(&mut self, clip: ClipId, class_id: Mid, span: Segment) -> Result<()> {
        if span.end > clip.duration() {
            return Err(Error::validation(format!(
                "segment end {} exceeds clip {clip} duration {}",
                format_seconds(span.end),
                format_seconds(clip.duration())
            )));
        }
        self.clips.insert(clip.clone());
        self.strong.push(LabeledSegment {
            clip,
            class_id,
            span,
        });
        self.strong.sort();
        Ok(())
    }

    /// Distinct (clip, class) pairs with a positive label: a `Present` weak
    /// annotation or at least one strong segment.
    pub fn positive_instances(&self) -> BTreeSet<(&ClipId, &Mid)> {
        let mut out = BTreeSet::new();
        for a in &self.weak {
            if a.polarity == WeakPolarity::Present {
                out.insert((&a.clip, &a.class_id));
            }
        }
        for s in &self.strong {
            out.insert((&s.clip, &s.class_id));
        }
        out
    }

    /// All classes with at least one positive instance.
    pub fn present_classes(&self) -> BTreeSet<&Mid> {
        self.positive_instances().into_iter().map(|(_, c)| c).collect()
    }

    /// Positive classes of one clip.
    pub fn clip_positive_classes(&self, clip: &ClipId) -> BTreeSet<&Mid> {
        self.positive_instances()
            .into_iter()
            .filter(|(c, _)| *c == clip)
            .map(|(_, m)| m)
            .collect()
    }

    /// Clip-level explicit negatives, grouped by clip.
    pub fn explicit_negatives_by_clip(&self) -> BTreeMap<&ClipId, BTreeSet<&Mid>> {
        let mut out: BTreeMap<&ClipId, BTreeSet<&Mid>> = BTreeMap::new();
        for a in &self.weak {
            if a.polarity == WeakPolarity::ExplicitNegative {
                out.entry(&a.clip).or_default().insert(&a.class_id);
            }
        }
        out
    }

    /// Per-clip strong segments grouped by class, for every clip in the
    /// corpus (clips without segments get an empty map). Raw spans, in
    /// load order within each class.
    pub fn strong_clip_views(&self) -> Vec<ClipStrong> {
        let mut by_clip: BTreeMap<&ClipId, BTreeMap<&Mid, Vec<Segment>>> = BTreeMap::new();
        for clip in &self.clips {
            by_clip.entry(clip).or_default();
        }
        for seg in &self.strong {
            by_clip
                .entry(&seg.clip)
                .or_default()
                .entry(&seg.class_id)
                .or_default()
                .push(seg.span);
        }
        by_clip
            .into_iter()
            .map(|(clip, by_class)| ClipStrong {
                clip: clip.clone(),
                by_class: by_class
                    .into_iter()
                    .map(|(m, v)| (m.clone(), v))
                    .collect(),
            })
            .collect()
    }

    /// Same-kind corpus containing only clips in `keep`.
    pub fn restrict_to_clips(&self, keep: &BTreeSet<ClipId>) -> Corpus {
        Corpus {
            kind: self.kind,
            clips: self.clips.intersection(keep).cloned().collect(),
            weak: self
                .weak
                .iter()
                .filter(|a| keep.contains(&a.clip))
                .cloned()
                .collect(),
            strong: self
                .strong
                .iter()
                .filter(|s| keep.contains(&s.clip))
                .cloned()
                .collect(),
            warnings: ParseWarnings::default(),
        }
    }

    /// Mean number of positive classes per clip.
    pub fn mean_positive_classes_per_clip(&self) -> f64 {
        if self.clips.is_empty() {
            return 0.0;
        }
        self.positive_instances().len() as f64 / self.clips.len() as f64
    }

    /// Summary statistics for the stats sidecar.
    pub fn stats(&self) -> CorpusStats {
        let instances = self.positive_instances();
        let mut per_class: BTreeMap<Mid, usize> = BTreeMap::new();
        for (_, class) in &instances {
            *per_class.entry((*class).clone()).or_insert(0) += 1;
        }
        let mut counts: Vec<usize> = per_class.values().copied().collect();
        counts.sort_unstable();
        let mean = if counts.is_empty() {
            0.0
        } else {
            counts.iter().sum::<usize>() as f64 / counts.len() as f64
        };
        let median = match counts.len() {
            0 => 0.0,
            n if n % 2 == 1 => counts[n / 2] as f64,
            n => (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0,
        };
        CorpusStats {
            kind: self.kind.as_str().to_owned(),
            n_clips: self.clips.len(),
            n_classes: per_class.len(),
            n_positive_instances: instances.len(),
            n_explicit_negative_instances: self
                .weak
                .iter()
                .filter(|a| a.polarity == WeakPolarity::ExplicitNegative)
                .count(),
            n_segments: self.strong.len(),
            mean_positive_classes_per_clip: self.mean_positive_classes_per_clip(),
            mean_clips_per_class: mean,
            median_clips_per_class: median,
            per_class_clip_counts: per_class,
            warnings: self.warnings,
        }
    }
}

/// Strong segments of one clip, grouped by class.
#[derive(Debug, Clone)]
pub struct ClipStrong {
    pub clip: ClipId,
    pub by_class: BTreeMap<Mid, Vec<Segment>>,
}

/// Stats sidecar payload for one corpus.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusStats {
    pub kind: String,
    pub n_clips: usize,
    pub n_classes: usize,
    pub n_positive_instances: usize,
    pub n_explicit_negative_instances: usize,
    pub n_segments: usize,
    pub mean_positive_classes_per_clip: f64,
    pub mean_clips_per_class: f64,
    pub median_clips_per_class: f64,
    pub per_class_clip_counts: BTreeMap<Mid, usize>,
    pub warnings: ParseWarnings,
}

/// Split `<ytid>_<milliseconds>` at the last underscore. The ytid itself may
/// contain underscores.
pub fn decode_segment_id(segment_id: &str) -> Result<(String, Duration)> {
    let (ytid, suffix) = segment_id.rsplit_once('_').ok_or_else(|| {
        Error::validation(format!(
            "malformed segment_id {segment_id:?}: expected <ytid>_<milliseconds>"
        ))
    })?;
    if ytid.is_empty() {
        return Err(Error::validation(format!(
            "malformed segment_id {segment_id:?}: empty ytid"
        )));
    }
    if suffix.is_empty() || !suffix.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::validation(format!(
            "malformed segment_id {segment_id:?}: suffix {suffix:?} is not a millisecond count"
        )));
    }
    let millis: u64 = suffix
        .parse()
        .map_err(|_| Error::validation(format!("segment_id suffix {suffix:?} overflows")))?;
    Ok((ytid.to_owned(), Duration::from_millis(millis)))
}

/// Split one CSV line on commas outside double quotes, trimming whitespace
/// and stripping one pair of surrounding quotes per field.
fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut in_quotes = false;
    for ch in line.chars() {
        match ch {
            '"' => in_quotes = !in_quotes,
            ',' if !in_quotes => {
                fields.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        if ch != '"' {
            current.push(ch);
        }
    }
    fields.push(current);
    fields.iter().map(|f| f.trim().to_owned()).collect()
}

/// Parse a weak-label CSV document.
pub fn parse_weak_csv(text: &str) -> Result<Corpus> {
    let mut corpus = Corpus::new(CorpusKind::Weak);
    let mut seen: HashMap<(ClipId, Mid), WeakPolarity> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_csv_line(line);
        if fields.len() < 4 || fields.len() > 5 {
            return Err(Error::parse(
                lineno,
                format!("expected 4 or 5 comma-separated fields, found {}", fields.len()),
            ));
        }
        let start = parse_seconds(&fields[1])
            .map_err(|e| Error::parse(lineno, format!("start_seconds: {e}")))?;
        let end = parse_seconds(&fields[2])
            .map_err(|e| Error::parse(lineno, format!("end_seconds: {e}")))?;
        let labels: Vec<&str> = fields[3]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        if labels.is_empty() {
            return Err(Error::parse(lineno, "empty label list"));
        }
        let polarity = match fields.get(4) {
            None => WeakPolarity::Present,
            Some(p) if p.eq_ignore_ascii_case("present") => WeakPolarity::Present,
            Some(p) if p.eq_ignore_ascii_case("negative") => WeakPolarity::ExplicitNegative,
            Some(p) => {
                return Err(Error::parse(
                    lineno,
                    format!("polarity must be `present` or `negative`, found {p:?}"),
                ))
            }
        };
        let clip = ClipId::new(&fields[0], start, end)
            .map_err(|e| Error::validation(format!("row {lineno}: {e}")))?;
        corpus.clips.insert(clip.clone());
        for label in labels {
            let class = Mid::from(label);
            match seen.get(&(clip.clone(), class.clone())) {
                Some(existing) if *existing == polarity => {
                    corpus.warnings.duplicate_annotations += 1;
                }
                Some(_) => {
                    return Err(Error::validation(format!(
                        "row {lineno}: clip {clip} class {class} already has the opposite polarity"
                    )));
                }
                None => {
                    seen.insert((clip.clone(), class.clone()), polarity);
                    corpus.weak.push(WeakAnnotation {
                        clip: clip.clone(),
                        class_id: class,
                        polarity,
                    });
                }
            }
        }
    }
    corpus.weak.sort();
    Ok(corpus)
}

/// Parse a strong-label TSV document.
///
/// Segment times a little outside the clip are clamped (annotator timing
/// noise); segments entirely outside are dropped. Both are counted in the
/// corpus warnings.
pub fn parse_strong_tsv(text: &str) -> Result<Corpus> {
    const HEADER: [&str; 4] = [
        "segment_id",
        "start_time_seconds",
        "end_time_seconds",
        "label",
    ];
    let mut corpus = Corpus::new(CorpusKind::Strong);
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
        let (ytid, clip_start) =
            decode_segment_id(fields[0]).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let clip = ClipId::ten_second(ytid, clip_start)
            .map_err(|e| Error::validation(format!("row {lineno}: {e}")))?;
        let start = parse_signed_seconds(fields[1])
            .map_err(|e| Error::parse(lineno, format!("start_time_seconds: {e}")))?;
        let end = parse_signed_seconds(fields[2])
            .map_err(|e| Error::parse(lineno, format!("end_time_seconds: {e}")))?;
        if fields[3].is_empty() {
            return Err(Error::parse(lineno, "empty label"));
        }
        if end <= start {
            return Err(Error::validation(format!(
                "row {lineno}: segment end ({end}) must exceed start ({start})"
            )));
        }
        let dur = clip.duration().as_secs_f64();
        if end <= 0.0 || start >= dur {
            corpus.warnings.rejected_segments += 1;
            continue;
        }
        let (clamped_start, clamped_end) = (start.max(0.0), end.min(dur));
        if clamped_start != start || clamped_end != end {
            corpus.warnings.clamped_segments += 1;
        }
        let span = Segment::new(
            Duration::from_secs_f64(clamped_start),
            Duration::from_secs_f64(clamped_end).min(clip.duration()),
        )?;
        corpus.clips.insert(clip.clone());
        corpus.strong.push(LabeledSegment {
            clip,
            class_id: Mid::from(fields[3]),
            span,
        });
    }
    corpus.strong.sort();
    Ok(corpus)
}

/// Canonical weak CSV form: one row per (clip, polarity) with sorted labels.
/// The polarity column is emitted only when explicit negatives exist.
pub fn write_weak_csv(corpus: &Corpus) -> String {
    let has_negatives = corpus
        .weak()
        .iter()
        .any(|a| a.polarity == WeakPolarity::ExplicitNegative);
    let mut out = String::from("# YTID, start_seconds, end_seconds, positive_labels");
    if has_negatives {
        out.push_str(", polarity");
    }
    out.push('\n');

    let mut groups: BTreeMap<(&ClipId, WeakPolarity), BTreeSet<&Mid>> = BTreeMap::new();
    for a in corpus.weak() {
        groups
            .entry((&a.clip, a.polarity))
            .or_default()
            .insert(&a.class_id);
    }
    for ((clip, polarity), labels) in groups {
        let joined = labels
            .iter()
            .map(|m| m.as_str())
            .collect::<Vec<_>>()
            .join(",");
        let _ = write!(
            out,
            "{}, {}, {}, \"{}\"",
            clip.ytid(),
            format_seconds(clip.start()),
            format_seconds(clip.end()),
            joined
        );
        if has_negatives {
            let tag = match polarity {
                WeakPolarity::Present => "present",
                WeakPolarity::ExplicitNegative => "negative",
            };
            let _ = write!(out, ", {tag}");
        }
        out.push('\n');
    }
    out
}

/// Canonical strong TSV form: sorted rows, exact decimal times.
pub fn write_strong_tsv(corpus: &Corpus) -> String {
    let mut out = String::from("segment_id\tstart_time_seconds\tend_time_seconds\tlabel\n");
    for seg in corpus.strong() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            seg.clip.segment_id(),
            format_seconds(seg.span.start),
            format_seconds(seg.span.end),
            seg.class_id
        );
    }
    out
}

/// Expand every (clip, class) with at least one segment to a single
/// full-clip segment.
pub fn build_diffuse(strong: &Corpus) -> Result<Corpus> {
    if strong.kind() != CorpusKind::Strong {
        return Err(Error::validation(format!(
            "diffuse expansion requires a strong corpus, found {}",
            strong.kind().as_str()
        )));
    }
    let mut pairs: BTreeSet<(&ClipId, &Mid)> = BTreeSet::new();
    for seg in strong.strong() {
        pairs.insert((&seg.clip, &seg.class_id));
    }
    let mut out = Corpus::new(CorpusKind::Diffuse);
    out.clips = strong.clips.clone();
    for (clip, class) in pairs {
        let span = Segment::new(Duration::ZERO, clip.duration())?;
        out.strong.push(LabeledSegment {
            clip: clip.clone(),
            class_id: class.clone(),
            span,
        });
    }
    out.strong.sort();
    Ok(out)
}

/// Per-class fraction of corpus clips bearing the class. Classes absent
/// from the corpus query as zero.
#[derive(Debug, Clone)]
pub struct ClassPriors {
    n_clips: usize,
    counts: BTreeMap<Mid, usize>,
}

impl ClassPriors {
    pub fn n_clips(&self) -> usize {
        self.n_clips
    }

    pub fn clip_count(&self, class: &Mid) -> usize {
        self.counts.get(class).copied().unwrap_or(0)
    }

    pub fn prior(&self, class: &Mid) -> f64 {
        self.clip_count(class) as f64 / self.n_clips as f64
    }

    pub fn classes(&self) -> impl Iterator<Item = &Mid> {
        self.counts.keys()
    }
}

pub fn class_priors(corpus: &Corpus) -> Result<ClassPriors> {
    if corpus.is_empty() {
        return Err(Error::undefined("priors of an empty corpus"));
    }
    let mut counts: BTreeMap<Mid, usize> = BTreeMap::new();
    for (_, class) in corpus.positive_instances() {
        *counts.entry(class.clone()).or_insert(0) += 1;
    }
    Ok(ClassPriors {
        n_clips: corpus.n_clips(),
        counts,
    })
}

/// Greedy class-balanced clip selection.
///
/// Classes are visited in ascending order of availability (rarest first;
/// ties by id). For each class, random clips bearing it are added until the
/// class reaches `target_per_class` within the selection or no candidates
/// remain. Clips picked for earlier classes count toward later ones, so
/// co-occurring labels share examples. Deterministic for a fixed seed.
pub fn select_balanced_subset(
    corpus: &Corpus,
    target_per_class: usize,
    seed: u64,
) -> BTreeSet<ClipId> {
    let mut clips_of_class: BTreeMap<&Mid, Vec<&ClipId>> = BTreeMap::new();
    let mut classes_of_clip: BTreeMap<&ClipId, Vec<&Mid>> = BTreeMap::new();
    for (clip, class) in corpus.positive_instances() {
        clips_of_class.entry(class).or_default().push(clip);
        classes_of_clip.entry(clip).or_default().push(class);
    }

    let mut order: Vec<(&Mid, usize)> = clips_of_class
        .iter()
        .map(|(class, clips)| (*class, clips.len()))
        .collect();
    order.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected: BTreeSet<ClipId> = BTreeSet::new();
    let mut tally: HashMap<&Mid, usize> = HashMap::new();

    for (class, _) in order {
        let have = tally.get(class).copied().unwrap_or(0);
        if have >= target_per_class {
            continue;
        }
        let mut candidates: Vec<&ClipId> = clips_of_class[class]
            .iter()
            .copied()
            .filter(|c| !selected.contains(*c))
            .collect();
        candidates.shuffle(&mut rng);
        let mut have = have;
        for clip in candidates {
            if have >= target_per_class {
                break;
            }
            selected.insert(clip.clone());
            for c in &classes_of_clip[clip] {
                *tally.entry(c).or_insert(0) += 1;
            }
            have = tally[class];
        }
    }
    selected
}

impl Corpus {
    /// Rewrite positive labels at or below `root` (per `ontology`) to `root`
    /// itself. Explicit negatives for proper descendants of `root` cannot be
    /// soundly relabeled and are dropped; the count of dropped negatives is
    /// returned alongside the new corpus.
    pub fn collapse_subtree_labels(
        &self,
        ontology: &crate::ontology::Ontology,
        root: &Mid,
    ) -> Result<(Corpus, usize)> {
        let mut mapped: HashMap<&Mid, Mid> = HashMap::new();
        let mut map_class = |class: &Mid| -> Result<Mid> {
            if let Some(m) = mapped.get(class) {
                return Ok(m.clone());
            }
            let out = if class == root || ontology.ancestors(class)?.contains(root) {
                root.clone()
            } else {
                class.clone()
            };
            mapped.insert(class, out.clone());
            Ok(out)
        };

        let mut out = Corpus::new(self.kind);
        out.clips = self.clips.clone();
        out.warnings = self.warnings;
        let mut dropped = 0usize;
        let mut seen: HashMap<(&ClipId, Mid), WeakPolarity> = HashMap::new();
        for a in &self.weak {
            let class = map_class(&a.class_id)?;
            if a.polarity == WeakPolarity::ExplicitNegative
                && class == *root
                && a.class_id != *root
            {
                dropped += 1;
                continue;
            }
            match seen.get(&(&a.clip, class.clone())) {
                Some(p) if *p == a.polarity => {
                    out.warnings.duplicate_annotations += 1;
                    continue;
                }
                Some(_) => {
                    return Err(Error::validation(format!(
                        "collapse produces conflicting polarities for clip {} class {class}",
                        a.clip
                    )))
                }
                None => {
                    seen.insert((&a.clip, class.clone()), a.polarity);
                }
            }
            out.weak.push(WeakAnnotation {
                clip: a.clip.clone(),
                class_id: class,
                polarity: a.polarity,
            });
        }
        for s in &self.strong {
            out.strong.push(LabeledSegment {
                clip: s.clip.clone(),
                class_id: map_class(&s.class_id)?,
                span: s.span,
            });
        }
        out.weak.sort();
        out.strong.sort();
        Ok((out, dropped))
    }
}

/// Merge overlapping or touching segments of one (clip, class) into sorted
/// disjoint segments covering the same union of time.
pub fn merge_class_segments(segments: &[Segment]) -> Vec<Segment> {
    let mut sorted: Vec<Segment> = segments.to_vec();
    sorted.sort();
    let mut out: Vec<Segment> = Vec::with_capacity(sorted.len());
    for seg in sorted {
        match out.last_mut() {
            Some(last) if seg.start <= last.end => {
                last.end = last.end.max(seg.end);
            }
            _ => out.push(seg),
        }
    }
    out
}

/// Total duration of the union of `segments` (need not be disjoint).
pub fn union_duration(segments: &[Segment]) -> Duration {
    merge_class_segments(segments)
        .iter()
        .map(Segment::duration)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: u64) -> Duration {
        Duration::from_millis(v)
    }

    fn seg(start_ms: u64, end_ms: u64) -> Segment {
        Segment::new(ms(start_ms), ms(end_ms)).unwrap()
    }

    #[test]
    fn weak_row_single_label() {
        let corpus = parse_weak_csv("abc, 30.000, 40.000, \"/m/09x0r\"\n").unwrap();
        assert_eq!(corpus.n_clips(), 1);
        assert_eq!(corpus.weak().len(), 1);
        let a = &corpus.weak()[0];
        assert_eq!(a.clip.ytid(), "abc");
        assert_eq!(a.clip.start(), Duration::from_secs(30));
        assert_eq!(a.clip.end(), Duration::from_secs(40));
        assert_eq!(a.class_id, Mid::from("/m/09x0r"));
        assert_eq!(a.polarity, WeakPolarity::Present);
    }

    #[test]
    fn weak_comment_only_file_is_empty() {
        let corpus = parse_weak_csv("# created 2017\n# YTID, start_seconds, ...\n").unwrap();
        assert!(corpus.is_empty());
        assert!(corpus.weak().is_empty());
    }

    #[test]
    fn weak_row_three_labels() {
        let corpus =
            parse_weak_csv("abc, 0.000, 10.000, \"/m/09x0r, /m/04rlf,/m/0dgw9r\"\n").unwrap();
        assert_eq!(corpus.n_clips(), 1);
        assert_eq!(corpus.weak().len(), 3);
        assert!(corpus
            .weak()
            .iter()
            .all(|a| a.clip == corpus.weak()[0].clip));
    }

    #[test]
    fn weak_non_numeric_time_is_parse_error_with_row() {
        let err = parse_weak_csv("# header\nabc, x, 40.0, \"/m/09x0r\"\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn weak_empty_label_list_rejected() {
        assert!(parse_weak_csv("abc, 0.0, 10.0, \"\"\n").is_err());
    }

    #[test]
    fn weak_duplicates_counted() {
        let corpus =
            parse_weak_csv("abc, 0.0, 10.0, \"/m/09x0r\"\nabc, 0.0, 10.0, \"/m/09x0r\"\n").unwrap();
        assert_eq!(corpus.weak().len(), 1);
        assert_eq!(corpus.warnings().duplicate_annotations, 1);
    }

    #[test]
    fn weak_polarity_conflict_rejected() {
        let text = "abc, 0.0, 10.0, \"/m/09x0r\", present\nabc, 0.0, 10.0, \"/m/09x0r\", negative\n";
        assert!(matches!(parse_weak_csv(text), Err(Error::Validation(_))));
    }

    #[test]
    fn weak_polarity_column() {
        let corpus = parse_weak_csv("abc, 0.0, 10.0, \"/m/09x0r\", negative\n").unwrap();
        assert_eq!(corpus.weak()[0].polarity, WeakPolarity::ExplicitNegative);
    }

    #[test]
    fn strong_row_example() {
        let text = "segment_id\tstart_time_seconds\tend_time_seconds\tlabel\nabc_30000\t1.2\t3.4\t/m/09x0r\n";
        let corpus = parse_strong_tsv(text).unwrap();
        assert_eq!(corpus.n_clips(), 1);
        let s = &corpus.strong()[0];
        assert_eq!(s.clip.ytid(), "abc");
        assert_eq!(s.clip.start(), Duration::from_secs(30));
        assert_eq!(s.clip.end(), Duration::from_secs(40));
        assert_eq!(s.span, seg(1200, 3400));
    }

    #[test]
    fn strong_header_only_is_empty() {
        let corpus =
            parse_strong_tsv("segment_id\tstart_time_seconds\tend_time_seconds\tlabel\n").unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn strong_full_clip_segment_valid() {
        let text = "segment_id\tstart_time_seconds\tend_time_seconds\tlabel\nabc_0\t0.0\t10.0\t/m/09x0r\n";
        let corpus = parse_strong_tsv(text).unwrap();
        assert_eq!(corpus.strong()[0].span, seg(0, 10_000));
        assert_eq!(corpus.warnings().clamped_segments, 0);
    }

    #[test]
    fn strong_end_before_start_rejected() {
        let text = "segment_id\tstart_time_seconds\tend_time_seconds\tlabel\nabc_0\t3.0\t1.0\t/m/09x0r\n";
        let err = parse_strong_tsv(text).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn strong_out_of_range_clamped() {
        let text = "segment_id\tstart_time_seconds\tend_time_seconds\tlabel\nabc_0\t9.5\t10.3\t/m/09x0r\n";
        let corpus = parse_strong_tsv(text).unwrap();
        assert_eq!(corpus.strong()[0].span, seg(9500, 10_000));
        assert_eq!(corpus.warnings().clamped_segments, 1);
    }

    #[test]
    fn strong_entirely_outside_dropped() {
        let text = "segment_id\tstart_time_seconds\tend_time_seconds\tlabel\nabc_0\t10.5\t11.0\t/m/09x0r\n";
        let corpus = parse_strong_tsv(text).unwrap();
        assert!(corpus.strong().is_empty());
        assert_eq!(corpus.warnings().rejected_segments, 1);
        assert_eq!(corpus.n_clips(), 0);
    }

    #[test]
    fn decode_segment_id_examples() {
        let (ytid, start) = decode_segment_id("abc_30000").unwrap();
        assert_eq!((ytid.as_str(), start), ("abc", Duration::from_secs(30)));
        let (ytid, start) = decode_segment_id("a_b_0").unwrap();
        assert_eq!((ytid.as_str(), start), ("a_b", Duration::ZERO));
        assert!(decode_segment_id("abc").is_err());
        assert!(decode_segment_id("abc_").is_err());
        assert!(decode_segment_id("abc_12x").is_err());
    }

    fn strong_fixture() -> Corpus {
        let mut c = Corpus::new(CorpusKind::Strong);
        let clip = ClipId::ten_second("abc", Duration::from_secs(30)).unwrap();
        c.add_segment(clip.clone(), Mid::from("/m/a"), seg(1000, 2000))
            .unwrap();
        c.add_segment(clip.clone(), Mid::from("/m/a"), seg(5000, 6000))
            .unwrap();
        c.add_segment(clip, Mid::from("/m/b"), seg(0, 500)).unwrap();
        c
    }

    #[test]
    fn diffuse_merges_to_full_clip() {
        let diffuse = build_diffuse(&strong_fixture()).unwrap();
        assert_eq!(diffuse.kind(), CorpusKind::Diffuse);
        // two distinct (clip, class) pairs -> two full-clip segments
        assert_eq!(diffuse.strong().len(), 2);
        for s in diffuse.strong() {
            assert_eq!(s.span, seg(0, 10_000));
        }
    }

    #[test]
    fn diffuse_empty_corpus() {
        let empty = Corpus::new(CorpusKind::Strong);
        assert!(build_diffuse(&empty).unwrap().is_empty());
    }

    #[test]
    fn diffuse_preserves_presence_relation() {
        let strong = strong_fixture();
        let diffuse = build_diffuse(&strong).unwrap();
        assert_eq!(strong.positive_instances(), diffuse.positive_instances());
        assert_eq!(
            diffuse.strong().len(),
            strong.positive_instances().len()
        );
    }

    #[test]
    fn diffuse_requires_strong_kind() {
        let weak = Corpus::new(CorpusKind::Weak);
        assert!(build_diffuse(&weak).is_err());
    }

    #[test]
    fn priors_single_clip() {
        let mut c = Corpus::new(CorpusKind::Weak);
        let clip = ClipId::ten_second("a", Duration::ZERO).unwrap();
        c.add_weak(clip, Mid::from("/m/x"), WeakPolarity::Present)
            .unwrap();
        let priors = class_priors(&c).unwrap();
        assert_eq!(priors.prior(&Mid::from("/m/x")), 1.0);
        assert_eq!(priors.prior(&Mid::from("/m/unseen")), 0.0);
    }

    #[test]
    fn priors_target_fraction() {
        // 250 labeled clips of c out of 67000 total
        let mut c = Corpus::new(CorpusKind::Weak);
        for i in 0..67_000u32 {
            let clip = ClipId::ten_second(format!("c{i}"), Duration::ZERO).unwrap();
            if i < 250 {
                c.add_weak(clip, Mid::from("/m/x"), WeakPolarity::Present)
                    .unwrap();
            } else {
                c.add_clip(clip);
            }
        }
        let p = class_priors(&c).unwrap().prior(&Mid::from("/m/x"));
        assert!((p - 0.00373).abs() < 2e-5, "prior {p}");
    }

    #[test]
    fn priors_empty_corpus_undefined() {
        assert!(matches!(
            class_priors(&Corpus::new(CorpusKind::Weak)),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn merge_overlapping() {
        assert_eq!(
            merge_class_segments(&[seg(1000, 3000), seg(2000, 4000)]),
            vec![seg(1000, 4000)]
        );
    }

    #[test]
    fn merge_disjoint_unchanged() {
        assert_eq!(
            merge_class_segments(&[seg(1000, 2000), seg(3000, 4000)]),
            vec![seg(1000, 2000), seg(3000, 4000)]
        );
    }

    #[test]
    fn merge_touching_and_contained() {
        assert_eq!(
            merge_class_segments(&[seg(0, 1000), seg(1000, 2000), seg(500, 3000)]),
            vec![seg(0, 3000)]
        );
    }

    #[test]
    fn balanced_subset_no_cooccurrence() {
        // every clip has exactly one label, 8 clips per class, target 5
        let mut c = Corpus::new(CorpusKind::Weak);
        for class in ["/m/a", "/m/b", "/m/c"] {
            for i in 0..8 {
                let clip = ClipId::ten_second(format!("{class}-{i}"), Duration::ZERO).unwrap();
                c.add_weak(clip, Mid::from(class), WeakPolarity::Present)
                    .unwrap();
            }
        }
        let picked = select_balanced_subset(&c, 5, 7);
        assert_eq!(picked.len(), 15);
        for class in ["/m/a", "/m/b", "/m/c"] {
            let n = picked
                .iter()
                .filter(|clip| clip.ytid().starts_with(class))
                .count();
            assert_eq!(n, 5, "{class}");
        }
    }

    #[test]
    fn balanced_subset_exhausts_scarce_class() {
        let mut c = Corpus::new(CorpusKind::Weak);
        for i in 0..3 {
            let clip = ClipId::ten_second(format!("rare{i}"), Duration::ZERO).unwrap();
            c.add_weak(clip, Mid::from("/m/rare"), WeakPolarity::Present)
                .unwrap();
        }
        let picked = select_balanced_subset(&c, 250, 0);
        assert_eq!(picked.len(), 3);
    }

    #[test]
    fn balanced_subset_shares_cooccurring_clips() {
        let mut c = Corpus::new(CorpusKind::Weak);
        for i in 0..40 {
            let clip = ClipId::ten_second(format!("c{i}"), Duration::ZERO).unwrap();
            c.add_weak(clip.clone(), Mid::from("/m/a"), WeakPolarity::Present)
                .unwrap();
            c.add_weak(clip, Mid::from("/m/b"), WeakPolarity::Present)
                .unwrap();
        }
        let picked = select_balanced_subset(&c, 25, 1);
        assert_eq!(picked.len(), 25);
    }

    #[test]
    fn balanced_subset_deterministic_per_seed() {
        let mut c = Corpus::new(CorpusKind::Weak);
        for i in 0..50 {
            let clip = ClipId::ten_second(format!("c{i}"), Duration::ZERO).unwrap();
            c.add_weak(clip, Mid::from("/m/a"), WeakPolarity::Present)
                .unwrap();
        }
        assert_eq!(
            select_balanced_subset(&c, 10, 99),
            select_balanced_subset(&c, 10, 99)
        );
        assert_ne!(
            select_balanced_subset(&c, 10, 99),
            select_balanced_subset(&c, 10, 100),
            "different seeds should generally differ"
        );
    }

    #[test]
    fn collapse_rewrites_positives_and_drops_descendant_negatives() {
        let ont = crate::ontology::load_ontology(
            r#"[{"id":"/m/music","name":"Music","child_ids":["/m/guitar"]},
                {"id":"/m/guitar","name":"Guitar","child_ids":[]},
                {"id":"/m/speech","name":"Speech","child_ids":[]}]"#,
        )
        .unwrap();
        let root = Mid::from("/m/music");
        let mut c = Corpus::new(CorpusKind::Weak);
        let clip = ClipId::ten_second("a", Duration::ZERO).unwrap();
        c.add_weak(clip.clone(), Mid::from("/m/guitar"), WeakPolarity::Present)
            .unwrap();
        c.add_weak(clip.clone(), Mid::from("/m/music"), WeakPolarity::Present)
            .unwrap();
        c.add_weak(clip.clone(), Mid::from("/m/speech"), WeakPolarity::Present)
            .unwrap();
        let clip2 = ClipId::ten_second("b", Duration::ZERO).unwrap();
        c.add_weak(clip2, Mid::from("/m/guitar"), WeakPolarity::ExplicitNegative)
            .unwrap();
        let (collapsed, dropped) = c.collapse_subtree_labels(&ont, &root).unwrap();
        assert_eq!(dropped, 1);
        // guitar+music merge into one positive; speech untouched
        assert_eq!(collapsed.weak().len(), 2);
        assert_eq!(collapsed.warnings().duplicate_annotations, 1);
        assert!(collapsed
            .weak()
            .iter()
            .all(|a| a.class_id == root || a.class_id == Mid::from("/m/speech")));
    }

    #[test]
    fn strong_round_trip_is_identity() {
        let text = "segment_id\tstart_time_seconds\tend_time_seconds\tlabel\n\
                    abc_30000\t1.2\t3.4\t/m/09x0r\n\
                    abc_30000\t0.5\t9.999\t/m/04rlf\n\
                    x_y_0\t0.0\t10.0\t/m/09x0r\n";
        let first = parse_strong_tsv(text).unwrap();
        let emitted = write_strong_tsv(&first);
        let second = parse_strong_tsv(&emitted).unwrap();
        assert_eq!(first, second);
        assert_eq!(emitted, write_strong_tsv(&second));
    }

    #[test]
    fn weak_round_trip_preserves_annotations() {
        let text = "abc, 30.0, 40.0, \"/m/09x0r,/m/04rlf\"\nzzz, 0.0, 10.0, \"/m/a\", negative\n";
        let first = parse_weak_csv(text).unwrap();
        let second = parse_weak_csv(&write_weak_csv(&first)).unwrap();
        assert_eq!(first.weak(), second.weak());
        assert_eq!(first.clips(), second.clips());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_segments() -> impl Strategy<Value = Vec<Segment>> {
            proptest::collection::vec((0u64..9_900, 1u64..2_000), 1..12).prop_map(|raw| {
                raw.into_iter()
                    .map(|(start, len)| seg(start, (start + len).min(10_000)))
                    .collect()
            })
        }

        /// 1 ms boolean-timeline oracle for the union measure.
        fn timeline_union_ms(segments: &[Segment]) -> u64 {
            let mut line = vec![false; 10_000];
            for s in segments {
                for cell in line
                    .iter_mut()
                    .take(s.end.as_millis() as usize)
                    .skip(s.start.as_millis() as usize)
                {
                    *cell = true;
                }
            }
            line.iter().filter(|b| **b).count() as u64
        }

        proptest! {
            #[test]
            fn merged_union_matches_timeline(segments in arb_segments()) {
                let merged = merge_class_segments(&segments);
                // disjoint and sorted
                for pair in merged.windows(2) {
                    prop_assert!(pair[0].end < pair[1].start);
                }
                let total = union_duration(&segments);
                prop_assert_eq!(total.as_millis() as u64, timeline_union_ms(&segments));
            }

            #[test]
            fn balanced_subset_covers_min_target(target in 1usize..6, seed in 0u64..50) {
                let mut c = Corpus::new(CorpusKind::Weak);
                for i in 0..30u32 {
                    let clip = ClipId::ten_second(format!("c{i}"), Duration::ZERO).unwrap();
                    let class = format!("/m/{}", i % 7);
                    c.add_weak(clip, Mid::from(class.as_str()), WeakPolarity::Present).unwrap();
                }
                let picked = select_balanced_subset(&c, target, seed);
                let priors = class_priors(&c).unwrap();
                let restricted = c.restrict_to_clips(&picked);
                for class in priors.classes() {
                    let available = priors.clip_count(class);
                    let got = restricted
                        .positive_instances()
                        .iter()
                        .filter(|(_, m)| *m == class)
                        .count();
                    prop_assert!(got >= target.min(available));
                }
            }
        }
    }
}
