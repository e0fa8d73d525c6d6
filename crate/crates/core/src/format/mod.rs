//! On-disk formats: JSON model files and line-oriented run transcripts.

mod model_file;
mod transcript;

pub use model_file::{
    parse_model, parse_model_with, serialize_model, ComponentSpec, DirectionSpec, FormatError,
    HvModelSpec, LoadedModel, Metadata, ModelFile, QuantumSpec, ScenarioSpec, StateSpec,
    FORMAT_VERSION,
};
pub use transcript::{parse_transcript, write_transcript};
