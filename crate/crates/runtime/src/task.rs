//! Tasks and their typed sockets.

use std::any::Any;
use std::sync::{Arc, Mutex};

use thiserror::Error;

/// Type-erased frame payload handed between tasks.
pub type Value = Box<dyn Any + Send>;

/// Datatype tag of a socket; bindings are checked tag-against-tag when a
/// sequence is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataKind(pub &'static str);

/// Declaration of one input or output socket.
#[derive(Debug, Clone)]
pub struct SocketDecl {
    pub name: &'static str,
    pub kind: DataKind,
}

/// Shorthand socket constructor.
pub fn sock(name: &'static str, kind: DataKind) -> SocketDecl {
    SocketDecl { name, kind }
}

/// Failure raised by a task's work function.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct TaskError(pub String);

impl TaskError {
    pub fn new(msg: impl Into<String>) -> Self {
        TaskError(msg.into())
    }
}

/// Read-only view of a task's bound input values for one frame.
pub struct Inputs<'a> {
    task: &'a str,
    values: &'a [&'a Value],
}

impl<'a> Inputs<'a> {
    pub(crate) fn new(task: &'a str, values: &'a [&'a Value]) -> Self {
        Self { task, values }
    }

    /// Downcast the value on input port `port`.
    pub fn get<T: 'static>(&self, port: usize) -> Result<&'a T, TaskError> {
        let v = self.values.get(port).ok_or_else(|| {
            TaskError::new(format!(
                "task '{}' read missing input port {port}",
                self.task
            ))
        })?;
        v.downcast_ref::<T>().ok_or_else(|| {
            TaskError::new(format!(
                "task '{}' input port {port} holds an unexpected payload type",
                self.task
            ))
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

enum Work {
    /// Pure function of its inputs; may be shared across replicas.
    Stateless(Arc<dyn Fn(&Inputs) -> Result<Vec<Value>, TaskError> + Send + Sync>),
    /// Carries internal state; runs on exactly one thread per run.
    Stateful(Mutex<Box<dyn FnMut(&Inputs) -> Result<Vec<Value>, TaskError> + Send>>),
}

/// One processing step with declared sockets.
pub struct Task {
    name: String,
    inputs: Vec<SocketDecl>,
    outputs: Vec<SocketDecl>,
    work: Work,
}

impl Task {
    /// A task whose outputs depend only on its current inputs. Only
    /// stateless tasks may be replicated.
    pub fn stateless(
        name: impl Into<String>,
        inputs: Vec<SocketDecl>,
        outputs: Vec<SocketDecl>,
        work: impl Fn(&Inputs) -> Result<Vec<Value>, TaskError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            inputs,
            outputs,
            work: Work::Stateless(Arc::new(work)),
        }
    }

    /// A task with internal state (delayers, trackers). Never replicated;
    /// the executor runs it on a single thread.
    pub fn stateful(
        name: impl Into<String>,
        inputs: Vec<SocketDecl>,
        outputs: Vec<SocketDecl>,
        work: impl FnMut(&Inputs) -> Result<Vec<Value>, TaskError> + Send + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            inputs,
            outputs,
            work: Work::Stateful(Mutex::new(Box::new(work))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_stateless(&self) -> bool {
        matches!(self.work, Work::Stateless(_))
    }

    pub fn inputs(&self) -> &[SocketDecl] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[SocketDecl] {
        &self.outputs
    }

    /// Clone for replication; `None` for stateful tasks. Clones of a
    /// stateless task share only the immutable work function.
    pub(crate) fn try_clone(&self) -> Option<Task> {
        match &self.work {
            Work::Stateless(f) => Some(Task {
                name: self.name.clone(),
                inputs: self.inputs.clone(),
                outputs: self.outputs.clone(),
                work: Work::Stateless(Arc::clone(f)),
            }),
            Work::Stateful(_) => None,
        }
    }

    pub(crate) fn run(&self, inputs: &Inputs) -> Result<Vec<Value>, TaskError> {
        let out = match &self.work {
            Work::Stateless(f) => f(inputs)?,
            Work::Stateful(f) => {
                let mut f = f.lock().unwrap_or_else(|e| e.into_inner());
                f(inputs)?
            }
        };
        if out.len() != self.outputs.len() {
            return Err(TaskError::new(format!(
                "task '{}' produced {} outputs but declares {}",
                self.name,
                out.len(),
                self.outputs.len()
            )));
        }
        Ok(out)
    }
}

impl std::fmt::Debug for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Task")
            .field("name", &self.name)
            .field("inputs", &self.inputs.len())
            .field("outputs", &self.outputs.len())
            .field("stateless", &self.is_stateless())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NUM: DataKind = DataKind("num");

    #[test]
    fn stateless_task_runs_and_clones() {
        let t = Task::stateless("double", vec![sock("in", NUM)], vec![sock("out", NUM)], |i| {
            let v: &u64 = i.get(0)?;
            Ok(vec![Box::new(v * 2)])
        });
        let value: Value = Box::new(3u64);
        let refs = [&value];
        let out = t.run(&Inputs::new("double", &refs)).unwrap();
        assert_eq!(*out[0].downcast_ref::<u64>().unwrap(), 6);
        assert!(t.try_clone().is_some());
    }

    #[test]
    fn stateful_task_keeps_state_and_refuses_clone() {
        let mut count = 0u64;
        let t = Task::stateful("counter", vec![], vec![sock("n", NUM)], move |_| {
            count += 1;
            Ok(vec![Box::new(count)])
        });
        let refs: [&Value; 0] = [];
        let a = t.run(&Inputs::new("counter", &refs)).unwrap();
        let b = t.run(&Inputs::new("counter", &refs)).unwrap();
        assert_eq!(*a[0].downcast_ref::<u64>().unwrap(), 1);
        assert_eq!(*b[0].downcast_ref::<u64>().unwrap(), 2);
        assert!(t.try_clone().is_none());
        assert!(!t.is_stateless());
    }

    #[test]
    fn wrong_arity_and_bad_downcast_are_task_errors() {
        let t = Task::stateless("bad", vec![sock("in", NUM)], vec![sock("a", NUM), sock("b", NUM)], |i| {
            let _: &u64 = i.get(0)?;
            Ok(vec![Box::new(1u64)]) // declares 2, yields 1
        });
        let value: Value = Box::new(3u64);
        let refs = [&value];
        let err = t.run(&Inputs::new("bad", &refs)).unwrap_err();
        assert!(err.0.contains("declares 2"));

        let t2 = Task::stateless("cast", vec![sock("in", NUM)], vec![], |i| {
            let _: &String = i.get(0)?; // payload is u64
            Ok(vec![])
        });
        let err = t2.run(&Inputs::new("cast", &refs)).unwrap_err();
        assert!(err.0.contains("unexpected payload type"));
    }
}
