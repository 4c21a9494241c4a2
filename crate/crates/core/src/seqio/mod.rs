//! Frame ingestion (binary PGM), synthetic night-sky generation with
//! exported ground truth, and track scoring against that truth.

mod pgm;
mod score;
mod synth;

pub use pgm::{
    frame_file_name, read_pgm, read_sequence_dir, write_pgm, write_sequence_dir, PgmError,
};
pub use score::{score, ScoreReport};
pub use synth::{
    generate, read_truth_csv, write_truth_csv, GroundTruth, MeteorSpec, MeteorTruth, SceneError,
    SceneSpec,
};
