//! Sequence construction and validation: socket bindings are checked
//! for type agreement, completeness and acyclicity, and the execution
//! order is fixed once at build time (stable topological order,
//! construction index breaking ties).

use std::collections::BTreeSet;
use std::ops::Range;
use std::time::Instant;

use thiserror::Error;

use crate::pipeline::ConfigError;
use crate::task::{Inputs, SocketDecl, Task, TaskError, Value};

/// Handle to a task added to a builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Producer {
    Source(usize),
    Task(usize, usize),
}

/// Reference to a producing socket (a source socket or a task output),
/// used to wire consumers and the sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputRef(pub(crate) Producer);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("input socket {port} of task '{task}' is unbound")]
    UnboundInput { task: String, port: usize },
    #[error("input socket {port} of task '{task}' is bound more than once")]
    DuplicateBinding { task: String, port: usize },
    #[error("type mismatch into '{task}' port {port}: socket expects '{expected}', producer yields '{found}'")]
    TypeMismatch {
        task: String,
        port: usize,
        expected: &'static str,
        found: &'static str,
    },
    #[error("invalid socket reference: {0}")]
    BadSocketRef(String),
    #[error("the same output is bound to the sink twice")]
    DuplicateSink,
    #[error("socket bindings form a cycle through task '{0}'")]
    Cycle(String),
}

/// Errors surfaced while running a sequence.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("task '{task}' failed: {source}")]
    Task {
        task: String,
        #[source]
        source: TaskError,
    },
    #[error("source produced {got} values but the sequence declares {want} source sockets")]
    SourceArity { want: usize, got: usize },
    #[error("no value in the slot feeding task '{task}' (scheduling bug)")]
    MissingInput { task: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Accumulates tasks and socket bindings, validating everything in
/// [`SequenceBuilder::build`].
#[derive(Default)]
pub struct SequenceBuilder {
    tasks: Vec<Task>,
    source: Vec<SocketDecl>,
    bindings: Vec<(usize, usize, Producer)>,
    sink: Vec<Producer>,
}

impl SequenceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a per-frame stream input; the source must yield one value
    /// per declared socket, in declaration order.
    pub fn source(&mut self, decl: SocketDecl) -> OutputRef {
        self.source.push(decl);
        OutputRef(Producer::Source(self.source.len() - 1))
    }

    pub fn add_task(&mut self, task: Task) -> TaskId {
        self.tasks.push(task);
        TaskId(self.tasks.len() - 1)
    }

    /// Reference an output socket of a task for binding.
    pub fn output(&self, task: TaskId, port: usize) -> OutputRef {
        OutputRef(Producer::Task(task.0, port))
    }

    /// Bind a producing socket to a task's input socket.
    pub fn bind(&mut self, from: OutputRef, to: TaskId, port: usize) {
        self.bindings.push((to.0, port, from.0));
    }

    /// Deliver a producing socket's value to the sink each frame.
    pub fn sink(&mut self, from: OutputRef) {
        self.sink.push(from.0);
    }

    pub fn build(self) -> Result<Sequence, BuildError> {
        let n = self.tasks.len();

        // Slot layout: source sockets first, then every task output.
        let mut output_base = vec![0usize; n];
        let mut n_slots = self.source.len();
        for (i, t) in self.tasks.iter().enumerate() {
            output_base[i] = n_slots;
            n_slots += t.outputs().len();
        }

        let producer_info = |p: Producer| -> Result<(usize, &'static str), BuildError> {
            match p {
                Producer::Source(k) => {
                    let d = self.source.get(k).ok_or_else(|| {
                        BuildError::BadSocketRef(format!("source socket {k} does not exist"))
                    })?;
                    Ok((k, d.kind.0))
                }
                Producer::Task(t, port) => {
                    let task = self.tasks.get(t).ok_or_else(|| {
                        BuildError::BadSocketRef(format!("task index {t} does not exist"))
                    })?;
                    let d = task.outputs().get(port).ok_or_else(|| {
                        BuildError::BadSocketRef(format!(
                            "task '{}' has no output port {port}",
                            task.name()
                        ))
                    })?;
                    Ok((output_base[t] + port, d.kind.0))
                }
            }
        };

        // Resolve and type-check bindings; exactly one producer per input.
        let mut input_slots: Vec<Vec<Option<usize>>> = self
            .tasks
            .iter()
            .map(|t| vec![None; t.inputs().len()])
            .collect();
        let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n]; // producer -> consumers
        let mut indegree = vec![0usize; n];
        for &(to, port, from) in &self.bindings {
            let task = self.tasks.get(to).ok_or_else(|| {
                BuildError::BadSocketRef(format!("bound task index {to} does not exist"))
            })?;
            let decl = task.inputs().get(port).ok_or_else(|| {
                BuildError::BadSocketRef(format!(
                    "task '{}' has no input port {port}",
                    task.name()
                ))
            })?;
            let (slot, kind) = producer_info(from)?;
            if kind != decl.kind.0 {
                return Err(BuildError::TypeMismatch {
                    task: task.name().to_string(),
                    port,
                    expected: decl.kind.0,
                    found: kind,
                });
            }
            let cell = &mut input_slots[to][port];
            if cell.is_some() {
                return Err(BuildError::DuplicateBinding {
                    task: task.name().to_string(),
                    port,
                });
            }
            *cell = Some(slot);
            if let Producer::Task(t, _) = from {
                edges[t].push(to);
                indegree[to] += 1;
            }
        }
        let input_slots: Vec<Vec<usize>> = input_slots
            .into_iter()
            .enumerate()
            .map(|(i, ports)| {
                ports
                    .into_iter()
                    .enumerate()
                    .map(|(port, s)| {
                        s.ok_or_else(|| BuildError::UnboundInput {
                            task: self.tasks[i].name().to_string(),
                            port,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;

        // Sink slots, rejecting duplicates (a sunk value is moved out).
        let mut sink_slots = Vec::with_capacity(self.sink.len());
        for &p in &self.sink {
            let (slot, _) = producer_info(p)?;
            if sink_slots.contains(&slot) {
                return Err(BuildError::DuplicateSink);
            }
            sink_slots.push(slot);
        }

        // Stable Kahn: among ready tasks, construction order wins. This
        // fixes the relative order of tasks with no data dependency
        // (e.g. a delayer's load before its save).
        let mut ready: BTreeSet<usize> = indegree
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d == 0)
            .map(|(i, _)| i)
            .collect();
        let mut topo = Vec::with_capacity(n);
        let mut indegree = indegree;
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            topo.push(i);
            for &c in &edges[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if topo.len() != n {
            let stuck = (0..n).find(|i| indegree[*i] > 0).unwrap();
            return Err(BuildError::Cycle(self.tasks[stuck].name().to_string()));
        }

        let output_slots: Vec<Vec<usize>> = self
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (0..t.outputs().len()).map(|p| output_base[i] + p).collect())
            .collect();
        let mut position = vec![0usize; n];
        for (pos, &t) in topo.iter().enumerate() {
            position[t] = pos;
        }

        Ok(Sequence {
            tasks: self.tasks,
            source: self.source,
            topo,
            position,
            input_slots,
            output_slots,
            sink_slots,
            n_slots,
        })
    }
}

/// A validated task list with a fixed execution order.
pub struct Sequence {
    tasks: Vec<Task>,
    source: Vec<SocketDecl>,
    /// Execution order (task indices).
    topo: Vec<usize>,
    /// Inverse of `topo`: task index -> execution position.
    position: Vec<usize>,
    input_slots: Vec<Vec<usize>>,
    output_slots: Vec<Vec<usize>>,
    sink_slots: Vec<usize>,
    n_slots: usize,
}

impl std::fmt::Debug for Sequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let order: Vec<&str> = self.topo.iter().map(|&i| self.tasks[i].name()).collect();
        f.debug_struct("Sequence")
            .field("tasks", &self.tasks.len())
            .field("order", &order)
            .finish()
    }
}

/// One frame in flight: its sequence number, emission timestamp and the
/// value slots of every producing socket.
pub(crate) struct Envelope {
    pub seq: u64,
    pub emitted: Instant,
    pub slots: Vec<Option<Value>>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Fixed execution order as task indices.
    pub fn order(&self) -> &[usize] {
        &self.topo
    }

    /// Execution position of a task.
    pub fn position(&self, id: TaskId) -> usize {
        self.position[id.0]
    }

    pub fn task(&self, idx: usize) -> &Task {
        &self.tasks[idx]
    }

    /// Task at an execution position.
    pub fn task_at(&self, pos: usize) -> &Task {
        &self.tasks[self.topo[pos]]
    }

    pub fn source_arity(&self) -> usize {
        self.source.len()
    }

    pub(crate) fn new_envelope(&self, seq: u64, source_values: Vec<Value>) -> Result<Envelope, RunError> {
        if source_values.len() != self.source.len() {
            return Err(RunError::SourceArity {
                want: self.source.len(),
                got: source_values.len(),
            });
        }
        let mut slots: Vec<Option<Value>> = Vec::with_capacity(self.n_slots);
        slots.extend(source_values.into_iter().map(Some));
        slots.resize_with(self.n_slots, || None);
        Ok(Envelope {
            seq,
            emitted: Instant::now(),
            slots,
        })
    }

    /// Run the tasks at execution positions `span` against an envelope.
    /// `clones`, when given, replaces the span's tasks one-for-one
    /// (replica execution).
    pub(crate) fn run_span(
        &self,
        clones: Option<&[Task]>,
        span: Range<usize>,
        env: &mut Envelope,
    ) -> Result<(), RunError> {
        for pos in span.clone() {
            let idx = self.topo[pos];
            let task = match clones {
                Some(cs) => &cs[pos - span.start],
                None => &self.tasks[idx],
            };
            let mut refs: Vec<&Value> = Vec::with_capacity(self.input_slots[idx].len());
            for &slot in &self.input_slots[idx] {
                refs.push(env.slots[slot].as_ref().ok_or_else(|| RunError::MissingInput {
                    task: task.name().to_string(),
                })?);
            }
            let outs = task
                .run(&Inputs::new(task.name(), &refs))
                .map_err(|e| RunError::Task {
                    task: task.name().to_string(),
                    source: e,
                })?;
            for (&slot, v) in self.output_slots[idx].iter().zip(outs) {
                env.slots[slot] = Some(v);
            }
        }
        Ok(())
    }

    /// Move the sink-bound values out of a finished envelope.
    pub(crate) fn take_sink_values(&self, env: &mut Envelope) -> Result<Vec<Value>, RunError> {
        self.sink_slots
            .iter()
            .map(|&s| {
                env.slots[s].take().ok_or_else(|| RunError::MissingInput {
                    task: "<sink>".to_string(),
                })
            })
            .collect()
    }
}
