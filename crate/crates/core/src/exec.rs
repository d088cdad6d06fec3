//! Switch between rayon and plain iteration for the data-parallel loops.
//!
//! Every parallel loop in the crate is written so that the output does not
//! depend on the schedule: work items carry their own RNG streams and results
//! are combined in index order (or by integer addition).

/// How a data-parallel loop is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon global pool. Without the `parallel` feature this falls
    /// back to sequential execution.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Maps `f` over `0..n` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Runs `f` for each index in `0..n`, each producing a vector of length
    /// `len`, and sums them elementwise.
    pub fn sum_vectors<F>(self, n: usize, len: usize, f: F) -> Vec<u64>
    where
        F: Fn(usize, &mut [u64]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n)
                    .into_par_iter()
                    .fold(
                        || vec![0u64; len],
                        |mut acc, i| {
                            f(i, &mut acc);
                            acc
                        },
                    )
                    .reduce(
                        || vec![0u64; len],
                        |mut a, b| {
                            for (x, y) in a.iter_mut().zip(b) {
                                *x += y;
                            }
                            a
                        },
                    )
            }
            _ => {
                let mut acc = vec![0u64; len];
                for i in 0..n {
                    f(i, &mut acc);
                }
                acc
            }
        }
    }
}

/// Derives an independent seed for sub-task `tag` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let v = exec.map(100, |i| i * i);
            assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn sum_vectors_matches_between_modes() {
        let f = |i: usize, acc: &mut [u64]| acc[i % 7] += i as u64;
        let a = Execution::Sequential.sum_vectors(1000, 7, f);
        let b = Execution::Parallel.sum_vectors(1000, 7, f);
        assert_eq!(a, b);
    }
}
