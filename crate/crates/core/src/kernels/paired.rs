//! The four paired base/opt loop kernels.
//!
//! Each pair computes the same result two ways; the base form carries a
//! deliberate source-level inefficiency and the opt form the corresponding
//! hand optimization. Checksums of both variants are equal by construction,
//! which is what makes the measured runtime and power comparison meaningful.
//! The runtime gap comes from memory locality and loop bookkeeping, so it is
//! widest in unoptimized builds; an optimizing compiler narrows some pairs.

use std::hint::black_box;
use std::time::Instant;

use rand::Rng;

use super::{Fnv64, KernelError, KernelId, KernelResult, KernelSpec, Variant, seeded_rng};

pub(crate) const STRIDE: usize = 100;

/// Inner loop bounds for the nest-flattening kernels; short inner loops make
/// the per-level bookkeeping visible.
const NEST_MID: u64 = 4;
const NEST_INNER: u64 = 4;

/// The flattening kernels accumulate `addend` once per iteration into a
/// u64; sizes that would overflow are rejected up front.
pub(crate) fn check_accumulator_bounds(
    kernel: KernelId,
    size: usize,
    repeat: usize,
) -> Result<(), KernelError> {
    let (addend, iterations) = match kernel {
        KernelId::NestedLoops => (
            (size as u128) * NEST_MID as u128,
            size as u128 * (NEST_MID * NEST_INNER) as u128 * repeat as u128,
        ),
        KernelId::Refactor => (
            REFACTOR_A as u128 * REFACTOR_B as u128,
            size as u128 * (NEST_MID * NEST_INNER) as u128 * repeat as u128,
        ),
        _ => return Ok(()),
    };
    if addend.saturating_mul(iterations) > u64::MAX as u128 {
        return Err(KernelError::InvalidSpec(format!(
            "{kernel}: size {size} x repeat {repeat} overflows the accumulator"
        )));
    }
    Ok(())
}

pub(crate) fn run(spec: &KernelSpec) -> Result<KernelResult, KernelError> {
    let variant = spec.variant.expect("validated: paired kernels carry a variant");
    match spec.kernel {
        KernelId::Copy => copy(variant, spec.size, spec.repeat, spec.seed),
        KernelId::StridedSum => strided_sum(variant, spec.size, spec.repeat, spec.seed),
        KernelId::NestedLoops => nested_loops(variant, spec.size, spec.repeat),
        KernelId::Refactor => refactor(variant, spec.size, spec.repeat),
        _ => unreachable!("not a paired kernel"),
    }
}

fn mismatch(kernel: KernelId, detail: String) -> KernelError {
    KernelError::OracleMismatch { kernel, detail }
}

/// Element-wise loop copy (base) vs one block copy (opt).
fn copy(variant: Variant, n: usize, repeat: usize, seed: u64) -> Result<KernelResult, KernelError> {
    let mut rng = seeded_rng(seed, 1);
    let src: Vec<u64> = (0..n).map(|_| rng.random()).collect();
    let mut dst = vec![0u64; n];

    let start = Instant::now();
    for _ in 0..repeat {
        match variant {
            Variant::Base => {
                let mut i = 0;
                while i < n {
                    dst[i] = src[i];
                    i += 1;
                }
            }
            Variant::Opt => dst.copy_from_slice(&src),
        }
        black_box(dst.as_slice());
    }
    let wall_time_s = start.elapsed().as_secs_f64();

    if dst != src {
        return Err(mismatch(KernelId::Copy, "destination differs from source".into()));
    }
    let mut h = Fnv64::new();
    for &v in &dst {
        h.write_u64(v);
    }
    Ok(KernelResult {
        wall_time_s,
        checksum: h.finish(),
        ops_performed: n as u64 * repeat as u64,
    })
}

/// Summing every 100th element of a large array (base) vs the same values
/// packed contiguously (opt). Both variants read identical values; only the
/// memory layout differs.
fn strided_sum(
    variant: Variant,
    n: usize,
    repeat: usize,
    seed: u64,
) -> Result<KernelResult, KernelError> {
    let touched = n / STRIDE;
    let mut rng = seeded_rng(seed, 2);
    let points: Vec<u64> = (0..touched).map(|_| rng.random_range(0..1_000_000)).collect();
    let mut sparse: Vec<u64> = (0..n).map(|_| rng.random()).collect();
    for (i, &v) in points.iter().enumerate() {
        sparse[i * STRIDE] = v;
    }
    let dense = points.clone();
    let per_pass: u64 = points.iter().fold(0u64, |a, &v| a.wrapping_add(v));

    let start = Instant::now();
    let mut acc = 0u64;
    for _ in 0..repeat {
        let mut sum = 0u64;
        match variant {
            Variant::Base => {
                let mut x = 0;
                while x < touched * STRIDE {
                    sum = sum.wrapping_add(sparse[x]);
                    x += STRIDE;
                }
            }
            Variant::Opt => {
                let mut x = 0;
                while x < touched {
                    sum = sum.wrapping_add(dense[x]);
                    x += 1;
                }
            }
        }
        acc = acc.wrapping_add(black_box(sum));
    }
    let wall_time_s = start.elapsed().as_secs_f64();

    let expected = per_pass.wrapping_mul(repeat as u64);
    if acc != expected {
        return Err(mismatch(
            KernelId::StridedSum,
            format!("sum {acc:#x} != expected {expected:#x}"),
        ));
    }
    let mut h = Fnv64::new();
    h.write_u64(acc);
    Ok(KernelResult {
        wall_time_s,
        checksum: h.finish(),
        ops_performed: touched as u64 * repeat as u64,
    })
}

/// Triple loop nest (base) vs one flattened loop (opt); both add the product
/// of the outer bounds once per innermost iteration.
fn nested_loops(variant: Variant, size: usize, repeat: usize) -> Result<KernelResult, KernelError> {
    let a = size as u64;
    let (b, c) = (NEST_MID, NEST_INNER);
    let addend = a * b;
    let mut result = 0u64;

    let start = Instant::now();
    for _ in 0..repeat {
        match variant {
            Variant::Base => {
                let mut q1 = 0u64;
                while q1 < a {
                    let mut q2 = 0u64;
                    while q2 < b {
                        let mut q3 = 0u64;
                        while q3 < c {
                            result += addend;
                            q3 += 1;
                        }
                        q2 += 1;
                    }
                    q1 += 1;
                }
            }
            Variant::Opt => {
                let total = a * b * c;
                let mut q1 = 0u64;
                while q1 < total {
                    result += addend;
                    q1 += 1;
                }
            }
        }
    }
    let wall_time_s = start.elapsed().as_secs_f64();
    black_box(result);

    let expected = addend * (a * b * c) * repeat as u64;
    if result != expected {
        return Err(mismatch(
            KernelId::NestedLoops,
            format!("accumulator {result} != expected {expected}"),
        ));
    }
    let mut h = Fnv64::new();
    h.write_u64(result);
    Ok(KernelResult {
        wall_time_s,
        checksum: h.finish(),
        ops_performed: a * b * c * repeat as u64,
    })
}

const REFACTOR_A: u64 = 10_000;
const REFACTOR_B: u64 = 10_000;

/// Reference indirection plus a re-evaluated compound condition inside a
/// loop nest (base) vs value access, a precomputed condition prefix, and a
/// flattened loop (opt). The compound condition is false in both variants,
/// so results stay identical.
fn refactor(variant: Variant, size: usize, repeat: usize) -> Result<KernelResult, KernelError> {
    let bound = size as u64;
    let (b, c) = (NEST_MID, NEST_INNER);
    let a_val: u64 = REFACTOR_A;
    let b_val: u64 = REFACTOR_B;
    let addend = a_val * b_val;
    let mut result = 0u64;

    let start = Instant::now();
    for _ in 0..repeat {
        match variant {
            Variant::Base => {
                let reference = black_box(&a_val);
                let mut q1 = 0u64;
                while q1 < bound {
                    let mut q2 = 0u64;
                    while q2 < b {
                        let mut q3 = 0u64;
                        while q3 < c {
                            if *reference != 0 {
                                result += addend;
                            }
                            let cond = (q1 as i64) < 1 - 100
                                && (a_val as i64) + 2 < q1 as i64
                                && (b_val as i64) * 10 != -1;
                            if cond {
                                result += addend;
                            }
                            q3 += 1;
                        }
                        q2 += 1;
                    }
                    q1 += 1;
                }
            }
            Variant::Opt => {
                let value = black_box(a_val);
                let prefix = 1i64 < 1 - 100;
                let total = bound * b * c;
                let mut q1 = 0u64;
                while q1 < total {
                    if value != 0 {
                        result += addend;
                    }
                    if prefix && (a_val as i64) + 2 < q1 as i64 && (b_val as i64) * 10 != -1 {
                        result += addend;
                    }
                    q1 += 1;
                }
            }
        }
    }
    let wall_time_s = start.elapsed().as_secs_f64();
    black_box(result);

    let expected = addend * (bound * b * c) * repeat as u64;
    if result != expected {
        return Err(mismatch(
            KernelId::Refactor,
            format!("accumulator {result} != expected {expected}"),
        ));
    }
    let mut h = Fnv64::new();
    h.write_u64(result);
    Ok(KernelResult {
        wall_time_s,
        checksum: h.finish(),
        ops_performed: bound * b * c * repeat as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{ALL_KERNELS, PAIRED_KERNELS, run_kernel};
    use super::*;

    fn result_for(kernel: KernelId, variant: Variant, size: usize, seed: u64) -> KernelResult {
        let mut spec = KernelSpec::new(kernel).with_variant(variant);
        spec.size = size;
        spec.repeat = 2;
        spec.seed = seed;
        run_kernel(&spec).unwrap()
    }

    #[test]
    fn variants_agree_on_checksums() {
        for kernel in PAIRED_KERNELS {
            for (size, seed) in [(500, 1u64), (2_000, 42), (10_000, 7)] {
                let base = result_for(kernel, Variant::Base, size, seed);
                let opt = result_for(kernel, Variant::Opt, size, seed);
                assert_eq!(base.checksum, opt.checksum, "{kernel} at size {size}");
                assert_eq!(base.ops_performed, opt.ops_performed, "{kernel}");
            }
        }
    }

    #[test]
    fn checksum_depends_on_seed() {
        let a = result_for(KernelId::Copy, Variant::Base, 1_000, 1);
        let b = result_for(KernelId::Copy, Variant::Base, 1_000, 2);
        assert_ne!(a.checksum, b.checksum);
    }

    #[test]
    fn overflow_guard_rejects_huge_flatten_specs() {
        let mut spec = KernelSpec::new(KernelId::NestedLoops);
        spec.size = usize::MAX / 2;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn paired_set_is_consistent() {
        for kernel in ALL_KERNELS {
            assert_eq!(kernel.is_paired(), PAIRED_KERNELS.contains(&kernel));
        }
    }
}
