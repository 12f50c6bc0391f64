//! Cross-label-set analytics: per-class priors from two corpora side by
//! side, and odds ratios measuring how a label in one set shifts the odds
//! of a label in the other.
//!
//! Corpora are joined on exact clip identity; every cross-set statistic is
//! computed over the clip intersection and reports its size.

use std::collections::BTreeMap;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::types::{ClipId, Mid};

/// 2x2 contingency counts: `a` condition+outcome, `b` condition only,
/// `c` outcome only, `d` neither. `a+b+c+d` equals the joined clip count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contingency2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

/// Odds ratio `(a*d)/(b*c)`, Haldane-Anscombe corrected (+0.5 on every
/// cell) whenever any cell is zero, so the statistic is always finite.
pub fn odds_ratio(t: &Contingency2x2) -> f64 {
    if t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0 {
        let (a, b, c, d) = (
            t.a as f64 + 0.5,
            t.b as f64 + 0.5,
            t.c as f64 + 0.5,
            t.d as f64 + 0.5,
        );
        (a * d) / (b * c)
    } else {
        (t.a as f64 * t.d as f64) / (t.b as f64 * t.c as f64)
    }
}

/// Which corpus a class is drawn from in a cross-set query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSet {
    Weak,
    Strong,
}

/// A contingency table plus the join size it was computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossTable {
    pub table: Contingency2x2,
    pub n_shared_clips: usize,
}

/// Fixed-size bit set over the joined clip list.
#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn count(&self) -> u64 {
        self.0.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn and_count(&self, other: &Bits) -> u64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(x, y)| (x & y).count_ones() as u64)
            .sum()
    }
}

/// Per-class presence bit sets over a fixed clip ordering.
struct PresenceIndex {
    n_clips: usize,
    classes: BTreeMap<Mid, Bits>,
}

impl PresenceIndex {
    fn build(corpus: &Corpus, shared: &[&ClipId]) -> Self {
        let index: BTreeMap<&ClipId, usize> =
            shared.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let mut classes: BTreeMap<Mid, Bits> = BTreeMap::new();
        for (clip, class) in corpus.positive_instances() {
            if let Some(&i) = index.get(clip) {
                classes
                    .entry(class.clone())
                    .or_insert_with(|| Bits::new(shared.len()))
                    .set(i);
            }
        }
        PresenceIndex {
            n_clips: shared.len(),
            classes,
        }
    }

    fn table_against(&self, class: &Mid, other: &PresenceIndex, other_class: &Mid) -> Contingency2x2 {
        let empty = Bits::new(self.n_clips);
        let cond = self.classes.get(class).unwrap_or(&empty);
        let out = other.classes.get(other_class).unwrap_or(&empty);
        let a = cond.and_count(out);
        let b = cond.count() - a;
        let c = out.count() - a;
        let d = self.n_clips as u64 - a - b - c;
        Contingency2x2 { a, b, c, d }
    }
}

fn shared_clips<'a>(weak: &'a Corpus, strong: &'a Corpus) -> Vec<&'a ClipId> {
    weak.clips().intersection(strong.clips()).collect()
}

fn pick<'a>(weak: &'a Corpus, strong: &'a Corpus, set: LabelSet) -> &'a Corpus {
    match set {
        LabelSet::Weak => weak,
        LabelSet::Strong => strong,
    }
}

/// Contingency table for one (condition, outcome) class pair over the clip
/// intersection of the two corpora.
pub fn cross_label_table(
    weak: &Corpus,
    strong: &Corpus,
    condition: (LabelSet, &Mid),
    outcome: (LabelSet, &Mid),
) -> Result<CrossTable> {
    let shared = shared_clips(weak, strong);
    if shared.is_empty() {
        return Err(Error::undefined(
            "corpora share no clips; cross-label statistics need a non-empty join",
        ));
    }
    let cond_index = PresenceIndex::build(pick(weak, strong, condition.0), &shared);
    let out_index = PresenceIndex::build(pick(weak, strong, outcome.0), &shared);
    Ok(CrossTable {
        table: cond_index.table_against(condition.1, &out_index, outcome.1),
        n_shared_clips: shared.len(),
    })
}

/// Odds ratio for one (condition, outcome) class pair.
pub fn cross_label_odds(
    weak: &Corpus,
    strong: &Corpus,
    condition: (LabelSet, &Mid),
    outcome: (LabelSet, &Mid),
) -> Result<f64> {
    Ok(odds_ratio(
        &cross_label_table(weak, strong, condition, outcome)?.table,
    ))
}

/// One outcome class in a top-K odds listing.
#[derive(Debug, Clone)]
pub struct OddsRow {
    pub condition_class: Mid,
    pub outcome_class: Mid,
    pub odds_ratio: f64,
    pub table: Contingency2x2,
}

/// For every class of the condition set, the `k` outcome-set classes with
/// the largest odds ratio, ordered by condition class then descending OR.
/// `condition_set` names the corpus the condition classes come from; the
/// outcome classes come from the other corpus.
pub fn top_cross_odds(
    weak: &Corpus,
    strong: &Corpus,
    condition_set: LabelSet,
    k: usize,
) -> Result<(Vec<OddsRow>, usize)> {
    let shared = shared_clips(weak, strong);
    if shared.is_empty() {
        return Err(Error::undefined(
            "corpora share no clips; cross-label statistics need a non-empty join",
        ));
    }
    let outcome_set = match condition_set {
        LabelSet::Weak => LabelSet::Strong,
        LabelSet::Strong => LabelSet::Weak,
    };
    let cond_index = PresenceIndex::build(pick(weak, strong, condition_set), &shared);
    let out_index = PresenceIndex::build(pick(weak, strong, outcome_set), &shared);

    let mut rows = Vec::new();
    for cond_class in cond_index.classes.keys() {
        let mut candidates: Vec<OddsRow> = out_index
            .classes
            .keys()
            .map(|out_class| {
                let table = cond_index.table_against(cond_class, &out_index, out_class);
                OddsRow {
                    condition_class: cond_class.clone(),
                    outcome_class: out_class.clone(),
                    odds_ratio: odds_ratio(&table),
                    table,
                }
            })
            .collect();
        candidates.sort_by(|x, y| {
            y.odds_ratio
                .total_cmp(&x.odds_ratio)
                .then_with(|| x.outcome_class.cmp(&y.outcome_class))
        });
        rows.extend(candidates.into_iter().take(k));
    }
    Ok((rows, shared.len()))
}

/// One class in the priors scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorsRow {
    pub class_id: Mid,
    pub weak_prior: f64,
    pub strong_prior: f64,
    /// `strong_prior / weak_prior`; absent when the weak prior is zero.
    pub ratio: Option<f64>,
}

fn prior_counts(corpus: &Corpus) -> BTreeMap<Mid, usize> {
    let mut counts: BTreeMap<Mid, usize> = BTreeMap::new();
    for (_, class) in corpus.positive_instances() {
        *counts.entry(class.clone()).or_insert(0) += 1;
    }
    counts
}

/// Per-class priors of both corpora over the union of their class sets.
/// Classes missing from a corpus get prior zero on that side.
pub fn priors_scatter(weak: &Corpus, strong: &Corpus) -> Vec<PriorsRow> {
    let weak_counts = prior_counts(weak);
    let strong_counts = prior_counts(strong);
    let prior = |counts: &BTreeMap<Mid, usize>, n: usize, class: &Mid| -> f64 {
        if n == 0 {
            0.0
        } else {
            counts.get(class).copied().unwrap_or(0) as f64 / n as f64
        }
    };
    let mut classes: Vec<Mid> = weak_counts.keys().cloned().collect();
    classes.extend(strong_counts.keys().cloned());
    classes.sort();
    classes.dedup();
    classes
        .into_iter()
        .map(|class| {
            let weak_prior = prior(&weak_counts, weak.n_clips(), &class);
            let strong_prior = prior(&strong_counts, strong.n_clips(), &class);
            let ratio = if weak_prior > 0.0 {
                Some(strong_prior / weak_prior)
            } else {
                None
            };
            PriorsRow {
                class_id: class,
                weak_prior,
                strong_prior,
                ratio,
            }
        })
        .collect()
}
