//! Toolkit for turning temporally-strong and temporally-weak audio-event
//! label corpora into frame-level evaluation sets, scoring classifier
//! outputs with d′ and lwlrap, analyzing label-set relationships, and
//! building derived training sets.
//!
//! Modules follow the data path:
//!
//! * [`ontology`] — the sound-class hierarchy: ancestors, label smearing,
//!   subtree collapse.
//! * [`corpus`] — weak CSV / strong TSV ingestion, canonical output,
//!   diffuse expansion, priors, balanced clip selection.
//! * [`framing`] — projection of strong labels onto a 960 ms frame grid,
//!   complementary and explicit negatives, random training crops.
//! * [`metrics`] — weighted ROC AUC, d′, balanced negative pooling, lwlrap,
//!   and the evaluation report.
//! * [`analysis`] — priors scatter and cross-set odds ratios.
//!
//! All randomness is drawn from ChaCha8 streams seeded with explicit 64-bit
//! seeds, so every derived artifact is reproducible byte for byte.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod framing;
pub mod metrics;
pub mod ontology;
pub mod time;
pub mod types;

pub use error::{Error, Result};
pub use types::{ClipId, Mid, Polarity, Segment};
