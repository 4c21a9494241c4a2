//! Detection primitives for night-sky meteor streams.
//!
//! The per-frame chain goes: low-threshold binarization ([`imgproc`]) ->
//! connected-component labeling with fused feature analysis and
//! hysteresis/surface filters ([`ccl`]) -> k-nearest-neighbor association
//! of components across consecutive frames ([`assoc`]) -> global rigid
//! camera-motion estimation and registration ([`motion`]) -> temporal
//! tracking of the components still moving after registration
//! ([`tracking`]).
//!
//! [`seqio`] provides PGM frame ingestion, a seeded synthetic night-sky
//! generator with exported ground truth, and track scoring. All functions
//! here are pure except the [`tracking::Tracker`] state machine; the
//! streaming execution layer lives in a separate crate.

pub mod assoc;
pub mod ccl;
pub mod imgproc;
pub mod motion;
pub mod seqio;
pub mod tracking;

pub use assoc::{match_knn, Association, InlierFlag, KnnParams};
pub use ccl::{filter_hysteresis, filter_surface, label_and_analyze, LabelMap, SurfaceParams, CC};
pub use imgproc::{binarize, BinaryMask, GrayFrame, ThresholdParams};
pub use motion::{
    classify_motion, estimate_rigid, estimate_two_pass, register_residuals, MotionClass,
    MotionError, MotionStats, RigidMotion,
};
pub use tracking::{Track, TrackPoint, TrackStatus, Tracker};
