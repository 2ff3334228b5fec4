use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::Arc;
use std::thread::JoinHandle;

use crate::scalar::Real;

use super::{load_sequence, LoadedSequence, LoaderError, SequenceSpec};

/// Loaded sequences in completion order, tagged with their index in the input.
pub struct Prefetcher<T: Real> {
    rx: Option<Receiver<(usize, Result<LoadedSequence<T>, LoaderError>)>>,
    workers: Vec<JoinHandle<()>>,
}

impl<T: Real> Iterator for Prefetcher<T> {
    type Item = (usize, Result<LoadedSequence<T>, LoaderError>);

    fn next(&mut self) -> Option<Self::Item> {
        self.rx.as_ref()?.recv().ok()
    }
}

impl<T: Real> Drop for Prefetcher<T> {
    fn drop(&mut self) {
        // Blocked senders fail once the receiver is gone.
        self.rx.take();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

/// Loads `specs` on `workers` threads; at most `capacity` finished sequences
/// wait in the queue before producers block. Each sequence is read in order
/// by a single worker.
pub fn prefetch<T: Real>(specs: Vec<SequenceSpec>, workers: usize, capacity: usize) -> Prefetcher<T> {
    let (tx, rx) = sync_channel(capacity.max(1));
    let specs = Arc::new(specs);
    let next = Arc::new(AtomicUsize::new(0));
    let workers = (0..workers.max(1))
        .map(|_| {
            let (tx, specs, next) = (tx.clone(), Arc::clone(&specs), Arc::clone(&next));
            std::thread::spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(spec) = specs.get(i) else { break };
                if tx.send((i, load_sequence(spec))).is_err() {
                    break;
                }
            })
        })
        .collect();
    Prefetcher { rx: Some(rx), workers }
}
