//! Combinatorial sequences, envelopes and parameter choices that the
//! computed iterates are measured against.

pub mod envelope;
pub mod params;
pub mod sequence;

pub use envelope::{envelope, envelope_ratio, f_s, DataNorms, Envelope, EnvelopeVariant};
pub use params::{analytic_norms, choose_parameters, n_min, Condition, ParameterChoice, Scenario, ScenarioKind, ThetaRule};
pub use sequence::{extremal_sequence, seq_a, verify_seq_bound, SeqBoundReport, SeqVariant};
