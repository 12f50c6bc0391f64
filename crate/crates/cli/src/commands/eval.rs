//! `eval`: score a classifier output file against framed or clip-level
//! labels and write the evaluation report JSON.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use framelab::corpus::{parse_weak_csv, WeakPolarity};
use framelab::framing::parse_framed_tsv;
use framelab::metrics::{evaluate, parse_scores_csv, PoolingMode, UnitLabel};
use framelab::types::Polarity;

use crate::config::Config;
use crate::errors::{CliError, CliResult};
use crate::store::{read_to_string, timestamp, write_file};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalKind {
    /// Clip-level units (`segment_id`).
    Weak,
    /// Frame-level units (`segment_id:frame_index`).
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum NegativesMode {
    Balanced,
    Pooled,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Score CSV (`unit_id,class_id,score`).
    #[arg(long)]
    pub scores: PathBuf,
    /// Label file: framed TSV for --eval-kind strong, weak CSV for
    /// --eval-kind weak.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum)]
    pub eval_kind: EvalKind,
    /// Negative pooling mode (defaults to the config value).
    #[arg(long, value_enum)]
    pub negatives: Option<NegativesMode>,
}

fn load_labels(path: &Path, kind: EvalKind) -> CliResult<Vec<UnitLabel>> {
    let text = read_to_string(path)?;
    match kind {
        EvalKind::Strong => {
            let rows = parse_framed_tsv(&text).map_err(|e| CliError::in_file(path, e))?;
            Ok(rows
                .into_iter()
                .map(|r| UnitLabel {
                    unit_id: format!("{}:{}", r.segment_id, r.frame),
                    class_id: r.class_id,
                    polarity: r.polarity,
                })
                .collect())
        }
        EvalKind::Weak => {
            let corpus = parse_weak_csv(&text).map_err(|e| CliError::in_file(path, e))?;
            Ok(corpus
                .weak()
                .iter()
                .map(|a| UnitLabel {
                    unit_id: a.clip.segment_id(),
                    class_id: a.class_id.clone(),
                    polarity: match a.polarity {
                        WeakPolarity::Present => Polarity::Positive,
                        WeakPolarity::ExplicitNegative => Polarity::ExplicitNegative,
                    },
                })
                .collect())
        }
    }
}

pub fn run(args: &EvalArgs, config: &Config, out: &Path, no_timestamp: bool) -> CliResult<()> {
    let scores =
        parse_scores_csv(&read_to_string(&args.scores)?).map_err(|e| CliError::in_file(&args.scores, e))?;
    let labels = load_labels(&args.labels, args.eval_kind)?;

    let scored: HashSet<(&str, &str)> = scores
        .iter()
        .map(|r| (r.unit_id.as_str(), r.class_id.as_str()))
        .collect();
    let resolvable = labels
        .iter()
        .filter(|l| scored.contains(&(l.unit_id.as_str(), l.class_id.as_str())))
        .count();
    if resolvable == 0 {
        return Err(CliError::validation(format!(
            "no labeled unit resolves against {} ({} labels, {} scores); check --eval-kind and unit id formats",
            args.scores.display(),
            labels.len(),
            scores.len()
        )));
    }

    let mut params = config.eval;
    if let Some(mode) = args.negatives {
        params.pooling = match mode {
            NegativesMode::Balanced => PoolingMode::Balanced,
            NegativesMode::Pooled => PoolingMode::Pooled,
        };
    }
    let mut report = evaluate(&scores, &labels, &params)?;
    report.generated_at_unix = timestamp(no_timestamp);
    report.eval_kind = Some(
        match args.eval_kind {
            EvalKind::Weak => "weak",
            EvalKind::Strong => "strong",
        }
        .to_owned(),
    );

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::validation(format!("report serialization: {e}")))?;
    write_file(&out.join(REPORT_FILE), &format!("{json}\n"))?;

    println!(
        "evaluated {} classes: macro d' {:.4}, lwlrap {}",
        report.macro_metrics.evaluated_classes,
        report.macro_metrics.dprime_macro,
        report
            .macro_metrics
            .lwlrap
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "n/a".to_owned()),
    );
    if report.missing_scores > 0 {
        eprintln!(
            "warning: {} labeled (unit, class) pairs had no score",
            report.missing_scores
        );
    }
    if !report.excluded_classes.is_empty() {
        eprintln!(
            "warning: {} classes excluded from the macro average",
            report.excluded_classes.len()
        );
    }
    Ok(())
}
