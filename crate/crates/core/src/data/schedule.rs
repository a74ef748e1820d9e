//! The persistent-minibatch scheduler.
//!
//! An epoch schedule permutes the dataset indices, partitions them into
//! `ceil(N / m)` contiguous minibatches, and emits each minibatch at `K`
//! consecutive positions with reuse index `k = 1..=K`. With `K = 1` this is
//! exactly the standard shuffled disposable-minibatch schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, XorShift64Star};

/// Minibatch reuse policy: reuse each minibatch of size `m` for `K`
/// consecutive optimizer steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistencyPolicy {
    persistency: usize,
    batch_size: usize,
    reshuffle_each_epoch: bool,
}

impl PersistencyPolicy {
    /// `persistency` is the paper's K, `batch_size` the minibatch size m;
    /// both must be at least 1. Reshuffling each epoch defaults to on.
    pub fn new(persistency: usize, batch_size: usize) -> Result<Self> {
        if persistency < 1 {
            return Err(Error::Config("persistency K must be at least 1".into()));
        }
        if batch_size < 1 {
            return Err(Error::Config("batch size m must be at least 1".into()));
        }
        Ok(Self {
            persistency,
            batch_size,
            reshuffle_each_epoch: true,
        })
    }

    pub fn with_reshuffle(mut self, reshuffle_each_epoch: bool) -> Self {
        self.reshuffle_each_epoch = reshuffle_each_epoch;
        self
    }

    /// K: the number of consecutive steps each minibatch is used for.
    pub fn persistency(&self) -> usize {
        self.persistency
    }

    /// m: the minibatch size (the final minibatch of an epoch may be smaller).
    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn reshuffle_each_epoch(&self) -> bool {
        self.reshuffle_each_epoch
    }

    /// Distinct minibatches per epoch for a dataset of `n` examples.
    pub fn batches_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size)
    }

    /// Optimizer steps per epoch: `K * ceil(n / m)`.
    pub fn updates_per_epoch(&self, n: usize) -> usize {
        self.persistency * self.batches_per_epoch(n)
    }
}

/// One position in an epoch schedule: use minibatch `minibatch_id` (the
/// listed dataset indices) for the `reuse_index`-th time (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub minibatch_id: usize,
    pub example_indices: Vec<usize>,
    pub reuse_index: usize,
}

/// Builds the schedule for one epoch over `n` examples.
///
/// The permutation is a pure function of `(seed, epoch)` when the policy
/// reshuffles each epoch, and of `seed` alone otherwise. Consecutive
/// entries for a minibatch carry `reuse_index` 1..=K; the union of indices
/// over distinct minibatches is exactly `0..n`, disjoint. `m > n` yields a
/// single minibatch of size `n`.
pub fn make_epoch_schedule(
    n: usize,
    policy: &PersistencyPolicy,
    epoch: usize,
    seed: u64,
) -> Vec<ScheduleEntry> {
    assert!(n >= 1, "schedule needs a non-empty dataset");
    let mut order: Vec<usize> = (0..n).collect();
    let effective_epoch = if policy.reshuffle_each_epoch { epoch as u64 } else { 0 };
    let shuffle_seed = rng::derive_seed(
        rng::derive_seed(seed, rng::stream::SCHEDULE),
        effective_epoch,
    );
    XorShift64Star::new(shuffle_seed).shuffle(&mut order);

    let k = policy.persistency;
    let mut entries = Vec::with_capacity(policy.updates_per_epoch(n));
    for (id, chunk) in order.chunks(policy.batch_size).enumerate() {
        for reuse in 1..=k {
            entries.push(ScheduleEntry {
                minibatch_id: id,
                example_indices: chunk.to_vec(),
                reuse_index: reuse,
            });
        }
    }
    entries
}
