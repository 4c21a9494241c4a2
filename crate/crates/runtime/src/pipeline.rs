//! Pipelined execution: consecutive stages on dedicated threads, bounded
//! inter-stage buffers, optional replication of interior stateless
//! stages.
//!
//! Replicated workers compete for whole frames on the shared input
//! buffer and re-serialize their pushes into source order through an
//! ordered gate, so downstream stages (and the sink) observe exactly the
//! sequential stream. Every wait is passive.

use std::ops::Range;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use thiserror::Error;

use crate::exec::{run_on_current_thread, FrameSource, SinkFrame, StreamStats};
use crate::queue::{BoundedQueue, OrderGate};
use crate::sequence::{Envelope, RunError, Sequence};
use crate::task::Task;

/// A contiguous run of execution positions and its thread count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSpec {
    /// Execution positions (see [`Sequence::order`]) owned by the stage.
    pub tasks: Range<usize>,
    /// Worker threads; replicas of the stage's tasks process distinct
    /// frames end-to-end.
    pub replication: usize,
}

/// Stage cut points, replication and buffering of a pipelined run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub stages: Vec<StageSpec>,
    /// Inter-stage buffer capacity in frames (1 minimizes latency).
    pub capacity: usize,
}

impl PipelineConfig {
    /// Uniform-replication-1 pipeline over the given cut points.
    pub fn stages(ranges: Vec<Range<usize>>, capacity: usize) -> Self {
        Self {
            stages: ranges
                .into_iter()
                .map(|tasks| StageSpec {
                    tasks,
                    replication: 1,
                })
                .collect(),
            capacity,
        }
    }

    pub fn validate(&self, seq: &Sequence) -> Result<(), ConfigError> {
        if self.capacity == 0 {
            return Err(ConfigError::ZeroCapacity);
        }
        if self.stages.is_empty() {
            return Err(ConfigError::NoStages);
        }
        let mut next = 0usize;
        for (si, st) in self.stages.iter().enumerate() {
            if st.replication == 0 {
                return Err(ConfigError::ZeroReplication);
            }
            if st.tasks.start != next || st.tasks.end < st.tasks.start {
                return Err(ConfigError::NonContiguous);
            }
            next = st.tasks.end;
            if st.replication > 1 {
                if si == 0 || si == self.stages.len() - 1 {
                    return Err(ConfigError::EdgeStageReplicated);
                }
                for pos in st.tasks.clone() {
                    let task = seq.task_at(pos);
                    if !task.is_stateless() {
                        return Err(ConfigError::ReplicationRefused {
                            task: task.name().to_string(),
                        });
                    }
                }
            }
        }
        if next != seq.len() {
            return Err(ConfigError::NonContiguous);
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("buffer capacity must be at least 1")]
    ZeroCapacity,
    #[error("stage replication must be at least 1")]
    ZeroReplication,
    #[error("a pipeline needs at least one stage")]
    NoStages,
    #[error("stage ranges must cover the sequence contiguously and in order")]
    NonContiguous,
    #[error("only interior stages may be replicated; source and sink stages own one thread each")]
    EdgeStageReplicated,
    #[error("replication refused: task '{task}' is stateful")]
    ReplicationRefused { task: String },
}

/// Clone a stage's tasks `stage.replication` times. Clones share no
/// mutable state; any stateful task refuses replication.
pub fn replicate_stage(seq: &Sequence, stage: &StageSpec) -> Result<Vec<Vec<Task>>, ConfigError> {
    (0..stage.replication)
        .map(|_| {
            stage
                .tasks
                .clone()
                .map(|pos| {
                    let t = seq.task_at(pos);
                    t.try_clone().ok_or_else(|| ConfigError::ReplicationRefused {
                        task: t.name().to_string(),
                    })
                })
                .collect()
        })
        .collect()
}

struct WorkerSpec {
    stage: usize,
    clones: Option<Vec<Task>>,
}

fn abort_all(queues: &[BoundedQueue<Envelope>], gates: &[OrderGate]) {
    for q in queues {
        q.abort();
    }
    for g in gates {
        g.abort();
    }
}

/// Run the sequence as a pipeline. The sink observes frames in source
/// order with payloads identical to a sequential run.
pub fn run_pipeline<S, K>(
    seq: &mut Sequence,
    cfg: &PipelineConfig,
    source: S,
    sink: K,
) -> Result<StreamStats, RunError>
where
    S: FrameSource,
    K: FnMut(SinkFrame) + Send,
{
    cfg.validate(seq)?;
    let seq: &Sequence = seq;
    let n_stages = cfg.stages.len();
    if n_stages == 1 {
        // One stage means no buffers and no extra threads.
        return run_on_current_thread(seq, source, sink);
    }

    // Replica task sets are built up front so configuration problems
    // surface before any thread starts.
    let mut workers: Vec<WorkerSpec> = Vec::new();
    for (si, st) in cfg.stages.iter().enumerate().take(n_stages - 1).skip(1) {
        if st.replication > 1 {
            for clones in replicate_stage(seq, st)? {
                workers.push(WorkerSpec {
                    stage: si,
                    clones: Some(clones),
                });
            }
        } else {
            workers.push(WorkerSpec {
                stage: si,
                clones: None,
            });
        }
    }

    let queues: Vec<BoundedQueue<Envelope>> =
        (0..n_stages - 1).map(|_| BoundedQueue::new(cfg.capacity)).collect();
    let gates: Vec<OrderGate> = (0..n_stages).map(|_| OrderGate::new()).collect();
    let live: Vec<AtomicUsize> = cfg
        .stages
        .iter()
        .map(|st| AtomicUsize::new(st.replication))
        .collect();
    let failure: Mutex<Option<RunError>> = Mutex::new(None);
    let record_failure = |e: RunError| {
        let mut slot = failure.lock().unwrap_or_else(|p| p.into_inner());
        if slot.is_none() {
            *slot = Some(e);
        }
        abort_all(&queues, &gates);
    };

    let mut stats = StreamStats::default();
    let started = Instant::now();
    thread::scope(|s| {
        let queues = &queues;
        let gates = &gates;
        let live = &live;
        let rf = &record_failure;

        // Source + first stage on one thread.
        let first_range = cfg.stages[0].tasks.clone();
        let mut source = source;
        s.spawn(move || {
            let body = AssertUnwindSafe(|| {
                let out_q = &queues[0];
                let mut frame_no = 0u64;
                loop {
                    let Some(values) = source.next_frame() else { break };
                    let mut env = match seq.new_envelope(frame_no, values) {
                        Ok(env) => env,
                        Err(e) => {
                            rf(e);
                            break;
                        }
                    };
                    if let Err(e) = seq.run_span(None, first_range.clone(), &mut env) {
                        rf(e);
                        break;
                    }
                    if out_q.push(env).is_err() {
                        break;
                    }
                    frame_no += 1;
                }
                out_q.close();
            });
            if let Err(p) = catch_unwind(body) {
                abort_all(queues, gates);
                resume_unwind(p);
            }
        });

        // Interior stage workers.
        for spec in workers.drain(..) {
            let range = cfg.stages[spec.stage].tasks.clone();
            let si = spec.stage;
            let clones = spec.clones;
            s.spawn(move || {
                let body = AssertUnwindSafe(|| {
                    let in_q = &queues[si - 1];
                    let out_q = &queues[si];
                    let gate = &gates[si];
                    while let Some(mut env) = in_q.pop() {
                        if let Err(e) = seq.run_span(clones.as_deref(), range.clone(), &mut env)
                        {
                            rf(e);
                            break;
                        }
                        // Re-serialize into source order before handing
                        // the frame downstream.
                        if gate.wait_turn(env.seq).is_err() {
                            break;
                        }
                        let pushed = out_q.push(env);
                        gate.advance();
                        if pushed.is_err() {
                            break;
                        }
                    }
                    if live[si].fetch_sub(1, Ordering::AcqRel) == 1 {
                        out_q.close();
                    }
                });
                if let Err(p) = catch_unwind(body) {
                    abort_all(queues, gates);
                    resume_unwind(p);
                }
            });
        }

        // Last stage + sink + probes on one thread.
        let last_range = cfg.stages[n_stages - 1].tasks.clone();
        let mut sink = sink;
        let stats = &mut stats;
        s.spawn(move || {
            let body = AssertUnwindSafe(|| {
                let in_q = &queues[n_stages - 2];
                while let Some(mut env) = in_q.pop() {
                    if let Err(e) = seq.run_span(None, last_range.clone(), &mut env) {
                        rf(e);
                        break;
                    }
                    let values = match seq.take_sink_values(&mut env) {
                        Ok(v) => v,
                        Err(e) => {
                            rf(e);
                            break;
                        }
                    };
                    sink(SinkFrame {
                        seq: env.seq,
                        values,
                    });
                    stats
                        .latencies_ms
                        .push(env.emitted.elapsed().as_secs_f64() * 1e3);
                    stats.frames += 1;
                }
            });
            if let Err(p) = catch_unwind(body) {
                abort_all(queues, gates);
                resume_unwind(p);
            }
        });
    });
    stats.elapsed = started.elapsed();

    match failure.into_inner().unwrap_or_else(|p| p.into_inner()) {
        Some(e) => Err(e),
        None => Ok(stats),
    }
}
