//! Criterion benches for the analysis pipeline; see `benches/`.
