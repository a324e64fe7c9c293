//! Parallel string sort: each worker sorts a slice, then a k-way merge
//! combines the runs. The sorted sequence is unique regardless of the
//! chunking, so the checksum is thread-count independent.

use std::time::Instant;

use rand::Rng;

use super::{Fnv64, KernelError, KernelId, KernelResult, KernelSpec, seeded_rng};

/// Seeded input corpus; public so an external reference sort can verify the
/// kernel's output digest.
pub fn generate_strings(n: usize, seed: u64) -> Vec<String> {
    let mut rng = seeded_rng(seed, 5);
    (0..n)
        .map(|_| {
            let len = rng.random_range(4..=12);
            (0..len)
                .map(|_| rng.random_range(b'a'..=b'z') as char)
                .collect()
        })
        .collect()
}

/// Digest of a sorted sequence, order-sensitive.
pub fn checksum_of_sorted(sorted: &[String]) -> u64 {
    let mut h = Fnv64::new();
    for s in sorted {
        h.write_bytes(s.as_bytes());
        h.write_bytes(&[0xff]);
    }
    h.finish()
}

/// Order-insensitive fingerprint, used to verify the sort is a permutation.
fn multiset_fingerprint(strings: &[String]) -> u64 {
    strings
        .iter()
        .map(|s| {
            let mut h = Fnv64::new();
            h.write_bytes(s.as_bytes());
            h.finish()
        })
        .fold(0u64, |acc, h| acc.wrapping_add(h))
}

pub(crate) fn run(spec: &KernelSpec) -> Result<KernelResult, KernelError> {
    let n = spec.size;
    let strings = generate_strings(n, spec.seed);
    let fingerprint = multiset_fingerprint(&strings);

    let start = Instant::now();
    let mut sorted = Vec::new();
    for _ in 0..spec.repeat {
        sorted = parallel_sort(strings.clone(), spec.threads);
    }
    let wall_time_s = start.elapsed().as_secs_f64();

    if sorted.len() != n {
        return Err(KernelError::OracleMismatch {
            kernel: KernelId::Sortstr,
            detail: format!("output length {} != input length {n}", sorted.len()),
        });
    }
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(KernelError::OracleMismatch {
            kernel: KernelId::Sortstr,
            detail: "output not in non-decreasing order".into(),
        });
    }
    if multiset_fingerprint(&sorted) != fingerprint {
        return Err(KernelError::OracleMismatch {
            kernel: KernelId::Sortstr,
            detail: "output is not a permutation of the input".into(),
        });
    }

    let log_n = usize::BITS - n.max(2).leading_zeros();
    Ok(KernelResult {
        wall_time_s,
        checksum: checksum_of_sorted(&sorted),
        ops_performed: n as u64 * log_n as u64 * spec.repeat as u64,
    })
}

fn parallel_sort(v: Vec<String>, threads: usize) -> Vec<String> {
    if threads <= 1 || v.len() < 2 * threads {
        let mut v = v;
        v.sort_unstable();
        return v;
    }

    let chunk_len = v.len().div_ceil(threads);
    let mut runs: Vec<Vec<String>> = Vec::with_capacity(threads);
    let mut rest = v;
    while rest.len() > chunk_len {
        let tail = rest.split_off(chunk_len);
        runs.push(rest);
        rest = tail;
    }
    runs.push(rest);

    std::thread::scope(|scope| {
        for run in runs.iter_mut() {
            scope.spawn(|| run.sort_unstable());
        }
    });

    merge_runs(runs)
}

/// Linear k-way merge; ties go to the lowest run index, so the output is
/// deterministic for any chunking.
fn merge_runs(runs: Vec<Vec<String>>) -> Vec<String> {
    let total: usize = runs.iter().map(Vec::len).sum();
    let mut tails: Vec<std::vec::IntoIter<String>> =
        runs.into_iter().map(|r| r.into_iter()).collect();
    let mut fronts: Vec<Option<String>> = tails.iter_mut().map(|it| it.next()).collect();

    let mut out = Vec::with_capacity(total);
    loop {
        let mut best: Option<usize> = None;
        for (i, front) in fronts.iter().enumerate() {
            if let Some(s) = front {
                let better = match best {
                    Some(b) => s < fronts[b].as_ref().unwrap(),
                    None => true,
                };
                if better {
                    best = Some(i);
                }
            }
        }
        match best {
            Some(i) => {
                out.push(fronts[i].take().unwrap());
                fronts[i] = tails[i].next();
            }
            None => break,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{KernelId, run_kernel};
    use super::*;

    #[test]
    fn matches_reference_sort() {
        let mut spec = KernelSpec::new(KernelId::Sortstr);
        spec.size = 5_000;
        spec.threads = 4;
        spec.repeat = 1;
        let result = run_kernel(&spec).unwrap();

        let mut reference = generate_strings(spec.size, spec.seed);
        reference.sort();
        assert_eq!(result.checksum, checksum_of_sorted(&reference));
    }

    #[test]
    fn checksum_independent_of_thread_count() {
        let mut checksums = Vec::new();
        for threads in [1, 2, 3, 8] {
            let mut spec = KernelSpec::new(KernelId::Sortstr);
            spec.size = 3_000;
            spec.threads = threads;
            checksums.push(run_kernel(&spec).unwrap().checksum);
        }
        assert!(checksums.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn merge_handles_duplicate_heavy_runs() {
        let runs = vec![
            vec!["aa".to_string(), "bb".to_string(), "bb".to_string()],
            vec!["aa".to_string(), "bb".to_string(), "cc".to_string()],
        ];
        let merged = merge_runs(runs);
        assert_eq!(merged, vec!["aa", "aa", "bb", "bb", "bb", "cc"]);
    }
}
