//! Bounded producer-consumer buffer and the ordered-push gate used
//! behind a replicated stage. Both wait passively (condvar blocking), so
//! the OS can hand a sleeping thread's core to another worker.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};

#[derive(Debug, PartialEq, Eq)]
pub(crate) struct Disconnected;

struct QueueState<T> {
    buf: VecDeque<T>,
    closed: bool,
    aborted: bool,
}

pub(crate) struct BoundedQueue<T> {
    capacity: usize,
    state: Mutex<QueueState<T>>,
    not_full: Condvar,
    not_empty: Condvar,
}

impl<T> BoundedQueue<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "queue capacity must be at least 1");
        Self {
            capacity,
            state: Mutex::new(QueueState {
                buf: VecDeque::with_capacity(capacity),
                closed: false,
                aborted: false,
            }),
            not_full: Condvar::new(),
            not_empty: Condvar::new(),
        }
    }

    /// Blocks while the buffer is full. Fails if the queue was closed or
    /// aborted (the item is dropped).
    pub fn push(&self, item: T) -> Result<(), Disconnected> {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            if st.closed || st.aborted {
                return Err(Disconnected);
            }
            if st.buf.len() < self.capacity {
                st.buf.push_back(item);
                self.not_empty.notify_one();
                return Ok(());
            }
            st = self.not_full.wait(st).unwrap_or_else(|e| e.into_inner());
        }
    }

    /// Blocks while the buffer is empty. `None` once the queue is closed
    /// and drained, or immediately after an abort.
    pub fn pop(&self) -> Option<T> {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            if st.aborted {
                return None;
            }
            if let Some(item) = st.buf.pop_front() {
                self.not_full.notify_one();
                return Some(item);
            }
            if st.closed {
                return None;
            }
            st = self.not_empty.wait(st).unwrap_or_else(|e| e.into_inner());
        }
    }

    /// Graceful end of stream: no more pushes; consumers drain the rest.
    pub fn close(&self) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        st.closed = true;
        self.not_empty.notify_all();
        self.not_full.notify_all();
    }

    /// Emergency stop: wakes everyone, discards buffered items on the
    /// consumer side.
    pub fn abort(&self) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        st.aborted = true;
        self.not_empty.notify_all();
        self.not_full.notify_all();
    }
}

/// Serializes pushes of a replicated stage back into frame order: a
/// worker that finished frame `n` sleeps until every frame before `n`
/// has been pushed downstream. At most one completed frame waits per
/// replica, so the reorder window is the replication count.
pub(crate) struct OrderGate {
    state: Mutex<(u64, bool)>, // (next expected seq, aborted)
    turn: Condvar,
}

impl OrderGate {
    pub fn new() -> Self {
        Self {
            state: Mutex::new((0, false)),
            turn: Condvar::new(),
        }
    }

    pub fn wait_turn(&self, seq: u64) -> Result<(), Disconnected> {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            if st.1 {
                return Err(Disconnected);
            }
            if st.0 == seq {
                return Ok(());
            }
            st = self.turn.wait(st).unwrap_or_else(|e| e.into_inner());
        }
    }

    pub fn advance(&self) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        st.0 += 1;
        self.turn.notify_all();
    }

    pub fn abort(&self) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        st.1 = true;
        self.turn.notify_all();
    }
}
