//! Parallel Riemann sum of f(x) = x over [0, 1].
//!
//! The domain splits into fixed-size blocks; workers take contiguous block
//! ranges and the block sums fold in block order, so the total is identical
//! for any thread count. The midpoint rule integrates a linear function
//! exactly, leaving the 1/(2n) bound of a one-sided sum as pure margin.

use std::time::Instant;

use super::{KernelError, KernelId, KernelResult, KernelSpec, checksum_of_values};

const BLOCK: usize = 65_536;

pub(crate) fn run(spec: &KernelSpec) -> Result<KernelResult, KernelError> {
    let n = spec.size;
    let h = 1.0 / n as f64;
    let nblocks = n.div_ceil(BLOCK);
    let workers = spec.threads.min(nblocks).max(1);
    let blocks_per_worker = nblocks.div_ceil(workers);

    let mut block_sums = vec![0.0f64; nblocks];
    let mut total = 0.0f64;

    let start = Instant::now();
    for _ in 0..spec.repeat {
        std::thread::scope(|scope| {
            for (w, sums) in block_sums.chunks_mut(blocks_per_worker).enumerate() {
                scope.spawn(move || {
                    let first_block = w * blocks_per_worker;
                    for (b, slot) in sums.iter_mut().enumerate() {
                        let begin = (first_block + b) * BLOCK;
                        let end = (begin + BLOCK).min(n);
                        let mut local = 0.0f64;
                        let mut i = begin;
                        while i < end {
                            let x = (i as f64 + 0.5) * h;
                            local += x * h;
                            i += 1;
                        }
                        *slot = local;
                    }
                });
            }
        });
        total = block_sums.iter().sum();
    }
    let wall_time_s = start.elapsed().as_secs_f64();

    let bound = 1.0 / (2.0 * n as f64);
    if !((total - 0.5).abs() <= bound) {
        return Err(KernelError::OracleMismatch {
            kernel: KernelId::Riemann,
            detail: format!("sum {total} misses 0.5 by more than {bound}"),
        });
    }

    Ok(KernelResult {
        wall_time_s,
        checksum: checksum_of_values(&[total]),
        ops_performed: n as u64 * spec.repeat as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{KernelId, run_kernel};
    use super::*;

    #[test]
    fn integrates_within_the_stated_bound() {
        for n in [1usize, 7, 1000, 1_000_000] {
            let mut spec = KernelSpec::new(KernelId::Riemann);
            spec.size = n;
            spec.threads = 3;
            assert!(run_kernel(&spec).is_ok(), "n = {n}");
        }
    }

    #[test]
    fn checksum_independent_of_thread_count() {
        let mut checksums = Vec::new();
        for threads in [1, 2, 4, 16] {
            let mut spec = KernelSpec::new(KernelId::Riemann);
            spec.size = 500_000;
            spec.threads = threads;
            checksums.push(run_kernel(&spec).unwrap().checksum);
        }
        assert!(checksums.windows(2).all(|w| w[0] == w[1]));
    }
}
