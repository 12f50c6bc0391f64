pub mod analyze;
pub mod eval;
pub mod frame;
pub mod ingest;
pub mod mix;
pub mod subsets;
