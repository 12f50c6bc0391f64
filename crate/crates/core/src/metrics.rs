//! Classifier-score evaluation: ROC AUC over weighted samples, d′,
//! balanced pooling of explicit and complementary negatives, and
//! label-weighted label-ranking average precision (lwlrap).
//!
//! d′ is derived from AUC as `sqrt(2) * probit(auc)`, with the AUC clamped
//! away from 0 and 1 so perfectly separated classes report a finite value.
//! Negative pooling defaults to balanced mode: explicit and complementary
//! negatives each contribute half the total negative weight regardless of
//! their counts.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{Mid, Polarity};

/// AUC clamp applied before the probit, bounding reported d′ at ~±6.72.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-6;

/// A score with a positive pooling weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSample {
    pub score: f64,
    pub weight: f64,
}

impl WeightedSample {
    pub fn new(score: f64, weight: f64) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::validation(format!("non-finite score {score}")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::validation(format!(
                "sample weight must be positive and finite, found {weight}"
            )));
        }
        Ok(WeightedSample { score, weight })
    }

    pub fn unit(score: f64) -> Result<Self> {
        WeightedSample::new(score, 1.0)
    }
}

/// One classifier output being evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub unit_id: String,
    pub class_id: Mid,
    pub score: f64,
}

/// One labeled evaluation unit (a clip for weak evaluation, a clip frame
/// for strong evaluation).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitLabel {
    pub unit_id: String,
    pub class_id: Mid,
    pub polarity: Polarity,
}

/// How explicit and complementary negatives are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolingMode {
    /// Each non-empty source is scaled to total weight 0.5 (1.0 when the
    /// other source is empty).
    Balanced,
    /// Unit weights; sources mix in proportion to their counts.
    Pooled,
}

impl PoolingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolingMode::Balanced => "balanced",
            PoolingMode::Pooled => "pooled",
        }
    }
}

impl std::str::FromStr for PoolingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(PoolingMode::Balanced),
            "pooled" => Ok(PoolingMode::Pooled),
            other => Err(Error::validation(format!(
                "pooling mode must be `balanced` or `pooled`, found {other:?}"
            ))),
        }
    }
}

/// Knobs for report evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub clamp_eps: f64,
    pub pooling: PoolingMode,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            clamp_eps: DEFAULT_CLAMP_EPS,
            pooling: PoolingMode::Balanced,
        }
    }
}

fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Weighted ROC AUC: the probability (weighted by sample weights) that a
/// random positive outscores a random negative, ties counting half.
///
/// Equivalent to exhaustive pair counting, computed in O(n log n) by a
/// sorted sweep with midrank tie handling.
pub fn roc_auc(positives: &[WeightedSample], negatives: &[WeightedSample]) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::undefined(
            "AUC requires at least one positive and one negative",
        ));
    }
    for s in positives.iter().chain(negatives) {
        if !s.score.is_finite() || !(s.weight > 0.0 && s.weight.is_finite()) {
            return Err(Error::validation(format!(
                "invalid sample (score {}, weight {})",
                s.score, s.weight
            )));
        }
    }

    let mut pos: Vec<WeightedSample> = positives.to_vec();
    let mut neg: Vec<WeightedSample> = negatives.to_vec();
    pos.sort_by(|a, b| a.score.total_cmp(&b.score));
    neg.sort_by(|a, b| a.score.total_cmp(&b.score));

    let w_pos = neumaier_sum(pos.iter().map(|s| s.weight));
    let w_neg = neumaier_sum(neg.iter().map(|s| s.weight));

    let mut below = 0usize; // negatives with score < current positive
    let mut w_below = 0.0f64;
    let mut tied_at = f64::NAN;
    let mut w_tied = 0.0f64;
    let mut terms = Vec::with_capacity(pos.len());
    for p in &pos {
        while below < neg.len() && neg[below].score < p.score {
            w_below += neg[below].weight;
            below += 1;
        }
        if p.score != tied_at {
            tied_at = p.score;
            w_tied = neg[below..]
                .iter()
                .take_while(|n| n.score == p.score)
                .map(|n| n.weight)
                .sum();
        }
        terms.push(p.weight * (w_below + 0.5 * w_tied));
    }
    Ok(neumaier_sum(terms) / (w_pos * w_neg))
}

// AS241 coefficients (Wichura), accurate to well below the documented 1e-8.
const PROBIT_A: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946_1e4,
    4.592_195_393_154_987_2e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const PROBIT_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545_5e3,
];
const PROBIT_C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_545,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const PROBIT_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_8,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const PROBIT_E: [f64; 8] = [
    6.657_904_643_501_103_8,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_9e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const PROBIT_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

fn poly(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc.mul_add(x, *c))
}

/// Inverse standard-normal CDF.
pub fn probit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::validation(format!(
            "probit requires p in (0, 1), found {p}"
        )));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * poly(&PROBIT_A, r) / poly(&PROBIT_B, r));
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        let t = r - 1.6;
        poly(&PROBIT_C, t) / poly(&PROBIT_D, t)
    } else {
        let t = r - 5.0;
        poly(&PROBIT_E, t) / poly(&PROBIT_F, t)
    };
    Ok(if q < 0.0 { -x } else { x })
}

/// d′ from an AUC, clamped to `[eps, 1 - eps]` before the probit.
pub fn dprime_clamped(auc: f64, eps: f64) -> Result<f64> {
    if auc.is_nan() || !(0.0..=1.0).contains(&auc) {
        return Err(Error::validation(format!(
            "d-prime requires an AUC in [0, 1], found {auc}"
        )));
    }
    Ok(std::f64::consts::SQRT_2 * probit(auc.clamp(eps, 1.0 - eps))?)
}

/// d′ with the default clamp.
pub fn dprime(auc: f64) -> Result<f64> {
    dprime_clamped(auc, DEFAULT_CLAMP_EPS)
}

/// Combine explicit and complementary negative scores into one weighted
/// pool.
pub fn pool_negatives(
    explicit: &[f64],
    complementary: &[f64],
    mode: PoolingMode,
) -> Result<Vec<WeightedSample>> {
    if explicit.is_empty() && complementary.is_empty() {
        return Err(Error::undefined("no negatives to pool"));
    }
    let mut out = Vec::with_capacity(explicit.len() + complementary.len());
    match mode {
        PoolingMode::Pooled => {
            for &s in explicit.iter().chain(complementary) {
                out.push(WeightedSample::unit(s)?);
            }
        }
        PoolingMode::Balanced => {
            let sources = [explicit, complementary];
            let n_nonempty = sources.iter().filter(|s| !s.is_empty()).count();
            let source_mass = 1.0 / n_nonempty as f64;
            for scores in sources {
                if scores.is_empty() {
                    continue;
                }
                let w = source_mass / scores.len() as f64;
                for &s in scores {
                    out.push(WeightedSample::new(s, w)?);
                }
            }
        }
    }
    Ok(out)
}

/// Per-class evaluation metrics.
#[derive(Debug, Clone, Serialize)]
pub struct ClassMetrics {
    pub auc: f64,
    pub dprime: f64,
    pub n_pos: usize,
    pub n_exp_neg: usize,
    pub n_comp_neg: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lrap: Option<f64>,
}

/// Corpus-level aggregates.
#[derive(Debug, Clone, Serialize)]
pub struct MacroMetrics {
    /// Unweighted mean of per-class d′ over evaluable classes.
    pub dprime_macro: f64,
    pub dprime_aggregation: String,
    pub evaluated_classes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lwlrap: Option<f64>,
    pub lwlrap_weights: BTreeMap<Mid, f64>,
}

/// A class left out of the macro average, and why.
#[derive(Debug, Clone, Serialize)]
pub struct ExcludedClass {
    pub class_id: Mid,
    pub reason: String,
}

/// Full evaluation output; serializes to the versioned report JSON.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub schema: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_kind: Option<String>,
    pub negatives_mode: String,
    #[serde(rename = "macro")]
    pub macro_metrics: MacroMetrics,
    pub per_class: BTreeMap<Mid, ClassMetrics>,
    pub excluded_classes: Vec<ExcludedClass>,
    /// Labeled (unit, class) pairs with no score.
    pub missing_scores: usize,
}

struct ClassAccum {
    pos: Vec<f64>,
    exp: Vec<f64>,
    comp: Vec<f64>,
}

fn index_labels(labels: &[UnitLabel]) -> Result<BTreeMap<(&str, &Mid), Polarity>> {
    let mut map: BTreeMap<(&str, &Mid), Polarity> = BTreeMap::new();
    for l in labels {
        match map.insert((l.unit_id.as_str(), &l.class_id), l.polarity) {
            Some(prev) if prev != l.polarity => {
                return Err(Error::validation(format!(
                    "conflicting polarities for unit {} class {}",
                    l.unit_id, l.class_id
                )));
            }
            _ => {}
        }
    }
    Ok(map)
}

fn index_scores(scores: &[ScoreRecord]) -> Result<HashMap<(&str, &Mid), f64>> {
    let mut map: HashMap<(&str, &Mid), f64> = HashMap::with_capacity(scores.len());
    for r in scores {
        if !r.score.is_finite() {
            return Err(Error::validation(format!(
                "non-finite score for unit {} class {}",
                r.unit_id, r.class_id
            )));
        }
        if map.insert((r.unit_id.as_str(), &r.class_id), r.score).is_some() {
            return Err(Error::validation(format!(
                "duplicate score for unit {} class {}",
                r.unit_id, r.class_id
            )));
        }
    }
    Ok(map)
}

/// Per-class d′ over explicit/complementary negative pools, plus the macro
/// average. Implicit negatives (unlabeled units) are never used.
pub fn evaluate_dprime(
    scores: &[ScoreRecord],
    labels: &[UnitLabel],
    params: &EvalParams,
) -> Result<EvalReport> {
    let score_of = index_scores(scores)?;
    let label_of = index_labels(labels)?;

    let mut accum: BTreeMap<&Mid, ClassAccum> = BTreeMap::new();
    let mut missing = 0usize;
    for ((unit, class), polarity) in &label_of {
        let entry = accum.entry(class).or_insert_with(|| ClassAccum {
            pos: Vec::new(),
            exp: Vec::new(),
            comp: Vec::new(),
        });
        match score_of.get(&(*unit, *class)) {
            None => missing += 1,
            Some(&s) => match polarity {
                Polarity::Positive => entry.pos.push(s),
                Polarity::ExplicitNegative => entry.exp.push(s),
                Polarity::ComplementaryNegative => entry.comp.push(s),
            },
        }
    }

    let mut per_class = BTreeMap::new();
    let mut excluded = Vec::new();
    for (class, acc) in &accum {
        if acc.pos.is_empty() {
            excluded.push(ExcludedClass {
                class_id: (*class).clone(),
                reason: "no scored positives".to_owned(),
            });
            continue;
        }
        if acc.exp.is_empty() && acc.comp.is_empty() {
            excluded.push(ExcludedClass {
                class_id: (*class).clone(),
                reason: "no scored explicit or complementary negatives".to_owned(),
            });
            continue;
        }
        let positives: Vec<WeightedSample> = acc
            .pos
            .iter()
            .map(|&s| WeightedSample::unit(s))
            .collect::<Result<_>>()?;
        let negatives = pool_negatives(&acc.exp, &acc.comp, params.pooling)?;
        let auc = roc_auc(&positives, &negatives)?;
        per_class.insert(
            (*class).clone(),
            ClassMetrics {
                auc,
                dprime: dprime_clamped(auc, params.clamp_eps)?,
                n_pos: acc.pos.len(),
                n_exp_neg: acc.exp.len(),
                n_comp_neg: acc.comp.len(),
                lrap: None,
            },
        );
    }

    if per_class.is_empty() {
        return Err(Error::undefined(
            "no class has both scored positives and scored negatives",
        ));
    }
    let dprime_macro =
        neumaier_sum(per_class.values().map(|m| m.dprime)) / per_class.len() as f64;
    Ok(EvalReport {
        schema: 1,
        generated_at_unix: None,
        eval_kind: None,
        negatives_mode: params.pooling.as_str().to_owned(),
        macro_metrics: MacroMetrics {
            dprime_macro,
            dprime_aggregation: "unweighted_mean".to_owned(),
            evaluated_classes: per_class.len(),
            lwlrap: None,
            lwlrap_weights: BTreeMap::new(),
        },
        per_class,
        excluded_classes: excluded,
        missing_scores: missing,
    })
}

/// lwlrap decomposed per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LwlrapResult {
    pub overall: f64,
    pub per_class: BTreeMap<Mid, f64>,
    /// Per-class share of positive occurrences; sums to 1.
    pub weights: BTreeMap<Mid, f64>,
}

/// Label-weighted label-ranking average precision.
///
/// For each unit and each of its positive classes `c`, the precision is the
/// number of positive classes ranked at or above `c` divided by the rank of
/// `c` (1 + the number of classes scored strictly higher). Per-class values
/// average over occurrences; the overall value weights each class by its
/// share of positive occurrences, so every positive label counts equally.
/// Scores are compared across classes, so relative calibration matters.
pub fn lwlrap(
    scores: &BTreeMap<String, BTreeMap<Mid, f64>>,
    positives: &BTreeMap<String, BTreeSet<Mid>>,
) -> Result<LwlrapResult> {
    let mut sum_per_class: BTreeMap<&Mid, (f64, usize)> = BTreeMap::new();
    for (unit, pos_classes) in positives {
        if pos_classes.is_empty() {
            continue;
        }
        let unit_scores = scores.get(unit).ok_or_else(|| {
            Error::validation(format!("unit {unit} has positives but no scores"))
        })?;
        let mut all: Vec<f64> = unit_scores.values().copied().collect();
        all.sort_by(f64::total_cmp);
        let mut pos_scores = Vec::with_capacity(pos_classes.len());
        for class in pos_classes {
            let s = unit_scores.get(class).ok_or_else(|| {
                Error::validation(format!("unit {unit} class {class} has no score"))
            })?;
            pos_scores.push(*s);
        }
        pos_scores.sort_by(f64::total_cmp);
        for class in pos_classes {
            let s = unit_scores[class];
            let rank = 1 + all.len() - all.partition_point(|x| *x <= s);
            let hits = pos_scores.len() - pos_scores.partition_point(|x| *x < s);
            let entry = sum_per_class.entry(class).or_insert((0.0, 0));
            entry.0 += hits as f64 / rank as f64;
            entry.1 += 1;
        }
    }

    let total: usize = sum_per_class.values().map(|(_, n)| n).sum();
    if total == 0 {
        return Err(Error::undefined("lwlrap requires at least one positive"));
    }
    let mut per_class = BTreeMap::new();
    let mut weights = BTreeMap::new();
    let mut overall = 0.0;
    for (class, (sum, n)) in &sum_per_class {
        per_class.insert((*class).clone(), sum / *n as f64);
        weights.insert((*class).clone(), *n as f64 / total as f64);
        overall += sum;
    }
    Ok(LwlrapResult {
        overall: overall / total as f64,
        per_class,
        weights,
    })
}

/// Full evaluation: per-class d′ plus lwlrap in one report.
pub fn evaluate(
    scores: &[ScoreRecord],
    labels: &[UnitLabel],
    params: &EvalParams,
) -> Result<EvalReport> {
    let mut report = evaluate_dprime(scores, labels, params)?;

    let mut unit_scores: BTreeMap<String, BTreeMap<Mid, f64>> = BTreeMap::new();
    for r in scores {
        unit_scores
            .entry(r.unit_id.clone())
            .or_default()
            .insert(r.class_id.clone(), r.score);
    }
    // only positives that actually have a score take part in the ranking
    let mut positives: BTreeMap<String, BTreeSet<Mid>> = BTreeMap::new();
    for l in labels {
        if l.polarity == Polarity::Positive {
            if let Some(u) = unit_scores.get(l.unit_id.as_str()) {
                if u.contains_key(&l.class_id) {
                    positives
                        .entry(l.unit_id.clone())
                        .or_default()
                        .insert(l.class_id.clone());
                }
            }
        }
    }
    let ranking = lwlrap(&unit_scores, &positives)?;
    for (class, lrap) in &ranking.per_class {
        if let Some(m) = report.per_class.get_mut(class) {
            m.lrap = Some(*lrap);
        }
    }
    report.macro_metrics.lwlrap = Some(ranking.overall);
    report.macro_metrics.lwlrap_weights = ranking.weights;
    Ok(report)
}

/// Parse a score CSV (`unit_id,class_id,score`), tolerating an optional
/// header row and `#` comments.
pub fn parse_scores_csv(text: &str) -> Result<Vec<ScoreRecord>> {
    let mut out = Vec::new();
    let mut seen: BTreeSet<(String, Mid)> = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with("unit_id") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected `unit_id,class_id,score`, found {} fields", fields.len()),
            ));
        }
        let score: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid score {:?}", fields[2])))?;
        if !score.is_finite() {
            return Err(Error::parse(lineno, format!("non-finite score {score}")));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::parse(lineno, "empty unit_id or class_id"));
        }
        let class = Mid::from(fields[1]);
        if !seen.insert((fields[0].to_owned(), class.clone())) {
            return Err(Error::validation(format!(
                "row {lineno}: duplicate score for unit {} class {}",
                fields[0], fields[1]
            )));
        }
        out.push(ScoreRecord {
            unit_id: fields[0].to_owned(),
            class_id: class,
            score,
        });
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod test_oracles {
    //! High-precision oracles, independent of the implementation paths they
    //! check: erfc by series/continued fraction, probit by bisection.

    pub fn erf_series(z: f64) -> f64 {
        let mut term = z;
        let mut sum = z;
        let mut n = 0u32;
        loop {
            n += 1;
            term *= -z * z / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    pub fn erfc(z: f64) -> f64 {
        if z < 0.0 {
            return 2.0 - erfc(-z);
        }
        if z < 2.0 {
            return 1.0 - erf_series(z);
        }
        // modified Lentz on erfc(z) = exp(-z^2)/sqrt(pi) *
        //   1/(z + (1/2)/(z + 1/(z + (3/2)/(z + 2/(z + ...)))))
        let tiny = 1e-300;
        let mut f = tiny;
        let mut c = f;
        let mut d = 0.0;
        for n in 1..500 {
            let a = if n == 1 { 1.0 } else { (n - 1) as f64 / 2.0 };
            let b = z;
            d = b + a * d;
            if d == 0.0 {
                d = tiny;
            }
            c = b + a / c;
            if c == 0.0 {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        (-z * z).exp() / std::f64::consts::PI.sqrt() * f
    }

    pub fn norm_cdf(x: f64) -> f64 {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }

    pub fn probit_bisect(p: f64) -> f64 {
        let (mut lo, mut hi) = (-9.0f64, 9.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Exhaustive weighted pair counting, the dumb O(n^2) reference.
    pub fn brute_force_auc(pos: &[(f64, f64)], neg: &[(f64, f64)]) -> f64 {
        let mut num = 0.0;
        for &(ps, pw) in pos {
            for &(ns, nw) in neg {
                if ps > ns {
                    num += pw * nw;
                } else if ps == ns {
                    num += 0.5 * pw * nw;
                }
            }
        }
        let wp: f64 = pos.iter().map(|(_, w)| w).sum();
        let wn: f64 = neg.iter().map(|(_, w)| w).sum();
        num / (wp * wn)
    }
}

#[cfg(test)]
mod tests {
    use super::test_oracles::*;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_samples(scores: &[f64]) -> Vec<WeightedSample> {
        scores.iter().map(|&s| WeightedSample::unit(s).unwrap()).collect()
    }

    #[test]
    fn auc_perfect_separation() {
        let auc = roc_auc(&unit_samples(&[0.9]), &unit_samples(&[0.1])).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn auc_full_tie_is_half() {
        let auc = roc_auc(&unit_samples(&[0.5]), &unit_samples(&[0.5])).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn auc_three_quarters() {
        let auc = roc_auc(&unit_samples(&[0.8, 0.4]), &unit_samples(&[0.6, 0.2])).unwrap();
        assert!((auc - 0.75).abs() < 1e-15, "{auc}");
    }

    #[test]
    fn auc_empty_side_undefined() {
        assert!(matches!(
            roc_auc(&[], &unit_samples(&[0.1])),
            Err(Error::Undefined(_))
        ));
        assert!(matches!(
            roc_auc(&unit_samples(&[0.1]), &[]),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn auc_matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_101);
        for case in 0..200 {
            let n_pos = rng.random_range(1..=50);
            let n_neg = rng.random_range(1..=50);
            // coarse score lattice forces ties
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for _ in 0..n_pos {
                pos.push((
                    rng.random_range(0..=8) as f64 / 8.0,
                    rng.random_range(0.1..2.0),
                ));
            }
            for _ in 0..n_neg {
                neg.push((
                    rng.random_range(0..=8) as f64 / 8.0,
                    rng.random_range(0.1..2.0),
                ));
            }
            let fast = roc_auc(
                &pos.iter()
                    .map(|&(s, w)| WeightedSample::new(s, w).unwrap())
                    .collect::<Vec<_>>(),
                &neg.iter()
                    .map(|&(s, w)| WeightedSample::new(s, w).unwrap())
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let brute = brute_force_auc(&pos, &neg);
            assert!(
                (fast - brute).abs() <= 1e-12,
                "case {case}: fast {fast} vs brute {brute}"
            );
        }
    }

    #[test]
    fn oracle_cdf_sanity() {
        // the oracle itself against published constants
        let known = [
            (0.0, 0.5),
            (1.0, 0.841_344_746_068_542_9),
            (2.0, 0.977_249_868_051_820_8),
            (3.0, 0.998_650_101_968_369_9),
            (4.0, 0.999_968_328_758_166_9),
            (-1.0, 0.158_655_253_931_457_07),
        ];
        for (x, phi) in known {
            assert!(
                (norm_cdf(x) - phi).abs() < 1e-14,
                "x={x}: {} vs {phi}",
                norm_cdf(x)
            );
        }
    }

    #[test]
    fn probit_center_is_zero() {
        assert_eq!(probit(0.5).unwrap(), 0.0);
    }

    #[test]
    fn probit_spot_values() {
        assert!((probit(0.841_344_7).unwrap() - 1.0).abs() < 1e-4);
        assert!((probit(0.975).unwrap() - 1.959_964).abs() < 1e-5);
        assert!((probit(1e-6).unwrap() + 4.753_424_308_8).abs() < 1e-8);
    }

    #[test]
    fn probit_domain_errors() {
        for p in [0.0, 1.0, -0.1, 1.1, f64::NAN] {
            assert!(probit(p).is_err(), "{p}");
        }
    }

    #[test]
    fn probit_within_1e8_of_oracle() {
        // log-spaced near both tails plus a linear sweep of the center
        let mut grid = Vec::new();
        let mut p = 1e-6;
        while p < 0.5 {
            grid.push(p);
            grid.push(1.0 - p);
            p *= 1.7;
        }
        for i in 1..100 {
            grid.push(i as f64 / 100.0);
        }
        for &p in &grid {
            let got = probit(p).unwrap();
            let want = probit_bisect(p);
            assert!(
                (got - want).abs() < 1e-8,
                "p={p}: got {got}, oracle {want}"
            );
        }
    }

    #[test]
    fn dprime_chance_level() {
        assert_eq!(dprime(0.5).unwrap(), 0.0);
    }

    #[test]
    fn dprime_spot_value() {
        assert!((dprime(0.841_344_7).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-3);
    }

    #[test]
    fn dprime_antisymmetric_and_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let a = i as f64 / 100.0;
            let d = dprime(a).unwrap();
            assert!(d > prev, "not increasing at {a}");
            prev = d;
            let mirrored = dprime(1.0 - a).unwrap();
            assert!((d + mirrored).abs() < 1e-12, "a={a}: {d} vs {mirrored}");
        }
    }

    #[test]
    fn dprime_rejects_nan_and_out_of_range() {
        assert!(dprime(f64::NAN).is_err());
        assert!(dprime(-0.1).is_err());
        assert!(dprime(1.1).is_err());
    }

    #[test]
    fn dprime_clamp_caps_perfect_separation() {
        let d = dprime(1.0).unwrap();
        assert!((d - 6.722_318).abs() < 1e-3, "{d}");
        assert_eq!(d, dprime_clamped(1.0 - 1e-6, DEFAULT_CLAMP_EPS).unwrap());
    }

    #[test]
    fn gaussian_recovery_smoke() {
        use rand_distr::{Distribution, Normal};
        let d_true = 1.39;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pos_dist = Normal::new(d_true, 1.0).unwrap();
        let neg_dist = Normal::new(0.0, 1.0).unwrap();
        let pos: Vec<WeightedSample> = (0..20_000)
            .map(|_| WeightedSample::unit(pos_dist.sample(&mut rng)).unwrap())
            .collect();
        let neg: Vec<WeightedSample> = (0..20_000)
            .map(|_| WeightedSample::unit(neg_dist.sample(&mut rng)).unwrap())
            .collect();
        let measured = dprime(roc_auc(&pos, &neg).unwrap()).unwrap();
        assert!((measured - d_true).abs() < 0.05, "measured {measured}");
    }

    #[test]
    fn pooling_balanced_equal_sources() {
        let samples = pool_negatives(&[0.1; 10], &[0.2; 10], PoolingMode::Balanced).unwrap();
        assert_eq!(samples.len(), 20);
        for s in &samples {
            assert!((s.weight - 0.05).abs() < 1e-15);
        }
    }

    #[test]
    fn pooling_single_source_gets_all_mass() {
        let samples = pool_negatives(&[0.1, 0.2], &[], PoolingMode::Balanced).unwrap();
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pooling_unbalanced_counts() {
        let comp = vec![0.5; 99];
        let samples = pool_negatives(&[0.9], &comp, PoolingMode::Balanced).unwrap();
        assert!((samples[0].weight - 0.5).abs() < 1e-15);
        for s in &samples[1..] {
            assert!((s.weight - 0.5 / 99.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pooling_both_empty_undefined() {
        assert!(matches!(
            pool_negatives(&[], &[], PoolingMode::Balanced),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn balanced_auc_invariant_to_duplicating_a_source() {
        let exp = [0.3, 0.7, 0.5];
        let comp = [0.2, 0.9];
        let comp_doubled = [0.2, 0.9, 0.2, 0.9];
        let pos = unit_samples(&[0.6, 0.8]);
        let a = roc_auc(
            &pos,
            &pool_negatives(&exp, &comp, PoolingMode::Balanced).unwrap(),
        )
        .unwrap();
        let b = roc_auc(
            &pos,
            &pool_negatives(&exp, &comp_doubled, PoolingMode::Balanced).unwrap(),
        )
        .unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    fn label(unit: &str, class: &str, polarity: Polarity) -> UnitLabel {
        UnitLabel {
            unit_id: unit.to_owned(),
            class_id: Mid::from(class),
            polarity,
        }
    }

    fn record(unit: &str, class: &str, score: f64) -> ScoreRecord {
        ScoreRecord {
            unit_id: unit.to_owned(),
            class_id: Mid::from(class),
            score,
        }
    }

    #[test]
    fn evaluate_perfect_class_hits_clamp() {
        let labels = vec![
            label("u1", "/m/a", Polarity::Positive),
            label("u2", "/m/a", Polarity::ExplicitNegative),
        ];
        let scores = vec![record("u1", "/m/a", 0.9), record("u2", "/m/a", 0.1)];
        let report = evaluate_dprime(&scores, &labels, &EvalParams::default()).unwrap();
        let m = &report.per_class[&Mid::from("/m/a")];
        assert_eq!(m.auc, 1.0);
        assert!((m.dprime - 6.722_318).abs() < 1e-3);
    }

    #[test]
    fn evaluate_excludes_class_without_negatives() {
        let labels = vec![
            label("u1", "/m/a", Polarity::Positive),
            label("u2", "/m/a", Polarity::ExplicitNegative),
            label("u3", "/m/b", Polarity::Positive),
        ];
        let scores = vec![
            record("u1", "/m/a", 0.9),
            record("u2", "/m/a", 0.1),
            record("u3", "/m/b", 0.8),
        ];
        let report = evaluate_dprime(&scores, &labels, &EvalParams::default()).unwrap();
        assert_eq!(report.macro_metrics.evaluated_classes, 1);
        assert_eq!(report.excluded_classes.len(), 1);
        assert_eq!(report.excluded_classes[0].class_id, Mid::from("/m/b"));
    }

    #[test]
    fn evaluate_macro_averages_two_classes() {
        // class a: AUC 0.5 (tie); class b: AUC 0.8413 via 10000 negatives
        let mut labels = vec![
            label("p", "/m/a", Polarity::Positive),
            label("n", "/m/a", Polarity::ExplicitNegative),
            label("p", "/m/b", Polarity::Positive),
        ];
        let mut scores = vec![
            record("p", "/m/a", 0.5),
            record("n", "/m/a", 0.5),
            record("p", "/m/b", 0.5),
        ];
        for i in 0..10_000 {
            let unit = format!("n{i}");
            labels.push(label(&unit, "/m/b", Polarity::ExplicitNegative));
            // 8413 below the positive, 1587 above
            let s = if i < 8413 { 0.1 } else { 0.9 };
            scores.push(record(&unit, "/m/b", s));
        }
        let report = evaluate_dprime(&scores, &labels, &EvalParams::default()).unwrap();
        assert!((report.per_class[&Mid::from("/m/a")].dprime).abs() < 1e-12);
        assert!(
            (report.macro_metrics.dprime_macro - 0.707).abs() < 1e-3,
            "macro {}",
            report.macro_metrics.dprime_macro
        );
    }

    #[test]
    fn evaluate_counts_missing_scores() {
        let labels = vec![
            label("u1", "/m/a", Polarity::Positive),
            label("u2", "/m/a", Polarity::ExplicitNegative),
            label("u3", "/m/a", Polarity::ExplicitNegative),
        ];
        let scores = vec![record("u1", "/m/a", 0.9), record("u2", "/m/a", 0.1)];
        let report = evaluate_dprime(&scores, &labels, &EvalParams::default()).unwrap();
        assert_eq!(report.missing_scores, 1);
        assert_eq!(report.per_class[&Mid::from("/m/a")].n_exp_neg, 1);
    }

    #[test]
    fn evaluate_no_evaluable_class_errors() {
        let labels = vec![label("u1", "/m/a", Polarity::Positive)];
        let scores = vec![record("u1", "/m/a", 0.9)];
        assert!(matches!(
            evaluate_dprime(&scores, &labels, &EvalParams::default()),
            Err(Error::Undefined(_))
        ));
    }

    fn lwlrap_inputs(
        rows: &[(&str, &[(&str, f64)], &[&str])],
    ) -> (
        BTreeMap<String, BTreeMap<Mid, f64>>,
        BTreeMap<String, BTreeSet<Mid>>,
    ) {
        let mut scores = BTreeMap::new();
        let mut positives = BTreeMap::new();
        for (unit, class_scores, pos) in rows {
            scores.insert(
                unit.to_string(),
                class_scores
                    .iter()
                    .map(|(c, s)| (Mid::from(*c), *s))
                    .collect(),
            );
            positives.insert(
                unit.to_string(),
                pos.iter().map(|c| Mid::from(*c)).collect(),
            );
        }
        (scores, positives)
    }

    #[test]
    fn lwlrap_perfect_ranking_is_one() {
        let (scores, positives) = lwlrap_inputs(&[
            ("u1", &[("a", 0.9), ("b", 0.8), ("c", 0.1)], &["a", "b"]),
            ("u2", &[("a", 0.7), ("b", 0.2), ("c", 0.1)], &["a"]),
        ]);
        let r = lwlrap(&scores, &positives).unwrap();
        assert_eq!(r.overall, 1.0);
    }

    #[test]
    fn lwlrap_three_class_fixture() {
        let (scores, positives) =
            lwlrap_inputs(&[("u", &[("c0", 0.9), ("c1", 0.5), ("c2", 0.1)], &["c0", "c2"])]);
        let r = lwlrap(&scores, &positives).unwrap();
        assert!((r.overall - 5.0 / 6.0).abs() < 1e-12, "{}", r.overall);
        assert_eq!(r.per_class[&Mid::from("c0")], 1.0);
        assert!((r.per_class[&Mid::from("c2")] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lwlrap_single_positive_ranked_last() {
        for c in [2usize, 5, 11] {
            let class_scores: Vec<(String, f64)> = (0..c)
                .map(|i| (format!("c{i}"), 1.0 - i as f64 / c as f64))
                .collect();
            let refs: Vec<(&str, f64)> =
                class_scores.iter().map(|(n, s)| (n.as_str(), *s)).collect();
            let worst = format!("c{}", c - 1);
            let (scores, positives) = lwlrap_inputs(&[("u", &refs, &[worst.as_str()])]);
            let r = lwlrap(&scores, &positives).unwrap();
            assert_eq!(r.overall, 1.0 / c as f64, "C={c}");
        }
    }

    #[test]
    fn lwlrap_no_positives_undefined() {
        let (scores, positives) = lwlrap_inputs(&[("u", &[("a", 0.9)], &[])]);
        assert!(matches!(
            lwlrap(&scores, &positives),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn lwlrap_weights_sum_to_one() {
        let (scores, positives) = lwlrap_inputs(&[
            ("u1", &[("a", 0.9), ("b", 0.8), ("c", 0.1)], &["a", "c"]),
            ("u2", &[("a", 0.7), ("b", 0.9), ("c", 0.1)], &["b"]),
        ]);
        let r = lwlrap(&scores, &positives).unwrap();
        let total: f64 = r.weights.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lwlrap_shared_monotone_transform_invariant() {
        let rows: &[(&str, &[(&str, f64)], &[&str])] = &[
            ("u", &[("a", 0.6), ("b", 0.5), ("c", 0.4)], &["a", "c"]),
        ];
        let (scores, positives) = lwlrap_inputs(rows);
        let before = lwlrap(&scores, &positives).unwrap().overall;
        let transformed: BTreeMap<String, BTreeMap<Mid, f64>> = scores
            .iter()
            .map(|(u, m)| {
                (
                    u.clone(),
                    m.iter().map(|(c, s)| (c.clone(), s * s)).collect(),
                )
            })
            .collect();
        let after = lwlrap(&transformed, &positives).unwrap().overall;
        assert_eq!(before, after);
    }

    #[test]
    fn lwlrap_per_class_rescaling_changes_result() {
        // dropping only class b's score below c flips c's rank
        let (scores_a, positives) = lwlrap_inputs(&[(
            "u",
            &[("a", 0.6), ("b", 0.5), ("c", 0.4)],
            &["a", "c"],
        )]);
        let (scores_b, _) = lwlrap_inputs(&[(
            "u",
            &[("a", 0.6), ("b", 0.3), ("c", 0.4)],
            &["a", "c"],
        )]);
        let before = lwlrap(&scores_a, &positives).unwrap().overall;
        let after = lwlrap(&scores_b, &positives).unwrap().overall;
        assert!((before - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(after, 1.0);
    }

    #[test]
    fn evaluate_combined_fills_lwlrap() {
        let labels = vec![
            label("u1", "/m/a", Polarity::Positive),
            label("u1", "/m/b", Polarity::ExplicitNegative),
            label("u2", "/m/a", Polarity::ExplicitNegative),
        ];
        let scores = vec![
            record("u1", "/m/a", 0.9),
            record("u1", "/m/b", 0.2),
            record("u2", "/m/a", 0.3),
        ];
        let report = evaluate(&scores, &labels, &EvalParams::default()).unwrap();
        assert_eq!(report.macro_metrics.lwlrap, Some(1.0));
        assert_eq!(report.per_class[&Mid::from("/m/a")].lrap, Some(1.0));
    }

    #[test]
    fn parse_scores_rejects_duplicates_and_bad_rows() {
        assert!(parse_scores_csv("u,c,0.5\nu,c,0.6\n").is_err());
        assert!(parse_scores_csv("u,c,abc\n").is_err());
        assert!(parse_scores_csv("u,c\n").is_err());
        let ok = parse_scores_csv("# comment\nunit_id,class_id,score\nu,/m/a,0.5\n").unwrap();
        assert_eq!(ok.len(), 1);
    }
}
