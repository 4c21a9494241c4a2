//! Minimal streaming dataflow runtime.
//!
//! Work is described as [`Task`]s with typed input/output sockets, wired
//! into a [`Sequence`] whose execution order is fixed and validated at
//! construction. A sequence runs either on one thread
//! ([`run_sequential`]) or as a linear multi-stage pipeline
//! ([`run_pipeline`]) where consecutive stages own one thread each,
//! exchange whole frames through bounded buffers (default capacity 1)
//! with passive waiting, and one stage of stateless tasks may be
//! replicated across threads. Frames are re-serialized into source order
//! after a replicated stage, so the sink observes exactly the sequential
//! output. Both executors report throughput and per-frame latency.

mod exec;
mod pipeline;
mod queue;
mod sequence;
mod task;

pub use exec::{run_sequential, FrameSource, SinkFrame, StreamStats};
pub use pipeline::{replicate_stage, run_pipeline, ConfigError, PipelineConfig, StageSpec};
pub use sequence::{BuildError, OutputRef, RunError, Sequence, SequenceBuilder, TaskId};
pub use task::{sock, DataKind, Inputs, SocketDecl, Task, TaskError, Value};
