//! Shared mutable access to the embedding tables for lock-free parallel SGD.
//!
//! Workers update disjoint-in-expectation rows without synchronization;
//! last writer wins per scalar. Correctness of training under this contract
//! is statistical, and anything that must be reproducible runs on a single
//! thread instead. Do not hold references across a phase barrier.

use std::cell::UnsafeCell;
use std::sync::Arc;

#[derive(Clone)]
pub(crate) struct Hogwild<T>(Arc<UnsafeCell<T>>);

unsafe impl<T: Send> Send for Hogwild<T> {}
unsafe impl<T: Send> Sync for Hogwild<T> {}

impl<T> Hogwild<T> {
    pub fn new(value: T) -> Self {
        Hogwild(Arc::new(UnsafeCell::new(value)))
    }

    /// Unsynchronized mutable access; races on float cells are accepted.
    #[allow(clippy::mut_from_ref)]
    pub fn get_mut(&self) -> &mut T {
        unsafe { &mut *self.0.get() }
    }

    /// Reclaim the value once all workers are done.
    pub fn into_inner(self) -> T {
        match Arc::try_unwrap(self.0) {
            Ok(cell) => cell.into_inner(),
            Err(_) => panic!("hogwild value still shared at phase barrier"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concurrent_disjoint_writes_land() {
        let shared = Hogwild::new(vec![0u64; 64]);
        rayon::scope(|s| {
            for w in 0..4usize {
                let handle = shared.clone();
                s.spawn(move |_| {
                    let data = handle.get_mut();
                    for i in (w..64).step_by(4) {
                        data[i] = w as u64 + 1;
                    }
                });
            }
        });
        let data = shared.into_inner();
        for (i, v) in data.iter().enumerate() {
            assert_eq!(*v, (i % 4) as u64 + 1);
        }
    }
}
