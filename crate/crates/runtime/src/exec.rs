//! Single-thread execution and the stream statistics shared by both
//! executors.

use std::time::{Duration, Instant};

use crate::sequence::{RunError, Sequence};
use crate::task::Value;

/// Yields the per-frame source values (one per declared source socket)
/// until the stream ends.
pub trait FrameSource: Send {
    fn next_frame(&mut self) -> Option<Vec<Value>>;
}

impl<F: FnMut() -> Option<Vec<Value>> + Send> FrameSource for F {
    fn next_frame(&mut self) -> Option<Vec<Value>> {
        self()
    }
}

/// Values delivered to the sink for one frame, in sink-binding order.
pub struct SinkFrame {
    pub seq: u64,
    pub values: Vec<Value>,
}

/// Throughput/latency probe results of one run.
///
/// Timestamps are captured only at source emission and sink completion,
/// so probe overhead is two clock reads per frame.
#[derive(Debug, Clone, Default)]
pub struct StreamStats {
    pub frames: u64,
    pub elapsed: Duration,
    /// Per-frame latency samples in frame order, milliseconds.
    pub latencies_ms: Vec<f64>,
}

impl StreamStats {
    /// Mean throughput in frames/s; 0 for an empty run.
    pub fn throughput_fps(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if self.frames == 0 || secs <= 0.0 {
            0.0
        } else {
            self.frames as f64 / secs
        }
    }

    /// Mean per-frame latency in milliseconds; 0 for an empty run.
    pub fn latency_mean_ms(&self) -> f64 {
        if self.latencies_ms.is_empty() {
            0.0
        } else {
            self.latencies_ms.iter().sum::<f64>() / self.latencies_ms.len() as f64
        }
    }

    /// 99th-percentile per-frame latency (nearest rank); 0 for an empty
    /// run.
    pub fn latency_p99_ms(&self) -> f64 {
        if self.latencies_ms.is_empty() {
            return 0.0;
        }
        let mut sorted = self.latencies_ms.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((sorted.len() as f64) * 0.99).ceil() as usize;
        sorted[rank.clamp(1, sorted.len()) - 1]
    }
}

/// Process the stream to exhaustion on the calling thread; the sink
/// receives outputs in frame order.
pub fn run_sequential(
    seq: &mut Sequence,
    source: impl FrameSource,
    sink: impl FnMut(SinkFrame),
) -> Result<StreamStats, RunError> {
    run_on_current_thread(seq, source, sink)
}

pub(crate) fn run_on_current_thread(
    seq: &Sequence,
    mut source: impl FrameSource,
    mut sink: impl FnMut(SinkFrame),
) -> Result<StreamStats, RunError> {
    let mut stats = StreamStats::default();
    let started = Instant::now();
    let mut frame_no = 0u64;
    while let Some(values) = source.next_frame() {
        let mut env = seq.new_envelope(frame_no, values)?;
        seq.run_span(None, 0..seq.len(), &mut env)?;
        let values = seq.take_sink_values(&mut env)?;
        sink(SinkFrame {
            seq: frame_no,
            values,
        });
        stats
            .latencies_ms
            .push(env.emitted.elapsed().as_secs_f64() * 1e3);
        frame_no += 1;
    }
    stats.frames = frame_no;
    stats.elapsed = started.elapsed();
    Ok(stats)
}
