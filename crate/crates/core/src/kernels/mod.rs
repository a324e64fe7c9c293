//! Workload corpus.
//!
//! Eight desk-scale kernels: four paired base/opt loop kernels demonstrating
//! source-level optimizations (element-wise vs block copy, strided vs
//! contiguous summation, nested vs flattened loops, reference/expression
//! refactoring) and four parallel algorithms (string sort, dense-graph
//! shortest paths, Euler integration, Riemann summation). Inputs derive from
//! a fixed seed, every kernel self-checks against a cheap oracle, and the
//! checksum of a run depends only on (kernel, size, seed) — never on the
//! thread count.

mod dijkstra;
mod koshi;
mod paired;
mod riemann;
mod sortstr;

pub use dijkstra::{DenseGraph, checksum_of_distances, generate_graph};
pub use sortstr::{checksum_of_sorted, generate_strings};

/// Digest of a float sequence by bit pattern; the numeric kernels hash
/// their outputs this way, so independent reimplementations can verify a
/// kernel checksum from values they computed themselves.
pub fn checksum_of_values(values: &[f64]) -> u64 {
    let mut h = Fnv64::new();
    for &v in values {
        h.write_u64(v.to_bits());
    }
    h.finish()
}

use std::fmt;

pub const DEFAULT_SEED: u64 = 0x706f_7765_7270_726f;
pub const DEFAULT_TAU: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelId {
    Copy,
    StridedSum,
    NestedLoops,
    Refactor,
    Sortstr,
    Dijkstra,
    Koshi,
    Riemann,
}

pub const ALL_KERNELS: [KernelId; 8] = [
    KernelId::Copy,
    KernelId::StridedSum,
    KernelId::NestedLoops,
    KernelId::Refactor,
    KernelId::Sortstr,
    KernelId::Dijkstra,
    KernelId::Koshi,
    KernelId::Riemann,
];

pub const PAIRED_KERNELS: [KernelId; 4] = [
    KernelId::Copy,
    KernelId::StridedSum,
    KernelId::NestedLoops,
    KernelId::Refactor,
];

impl KernelId {
    pub fn parse(s: &str) -> Option<KernelId> {
        match s {
            "copy" => Some(KernelId::Copy),
            "strided_sum" => Some(KernelId::StridedSum),
            "nested_loops" => Some(KernelId::NestedLoops),
            "refactor" => Some(KernelId::Refactor),
            "sortstr" => Some(KernelId::Sortstr),
            "dijkstra" => Some(KernelId::Dijkstra),
            "koshi" => Some(KernelId::Koshi),
            "riemann" => Some(KernelId::Riemann),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            KernelId::Copy => "copy",
            KernelId::StridedSum => "strided_sum",
            KernelId::NestedLoops => "nested_loops",
            KernelId::Refactor => "refactor",
            KernelId::Sortstr => "sortstr",
            KernelId::Dijkstra => "dijkstra",
            KernelId::Koshi => "koshi",
            KernelId::Riemann => "riemann",
        }
    }

    /// Paired kernels come in base/opt variants; the parallel algorithms do
    /// not.
    pub fn is_paired(&self) -> bool {
        PAIRED_KERNELS.contains(self)
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Base,
    Opt,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "base" => Some(Variant::Base),
            "opt" => Some(Variant::Opt),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Opt => "opt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub kernel: KernelId,
    /// Required for paired kernels, rejected otherwise.
    pub variant: Option<Variant>,
    /// Problem size; meaning is kernel-specific (elements, vertices,
    /// components, subintervals).
    pub size: usize,
    pub threads: usize,
    pub repeat: usize,
    pub seed: u64,
    /// Integration step for the Euler kernel.
    pub tau: f64,
}

impl KernelSpec {
    /// Spec with the documented default size for the kernel, chosen so a
    /// default run lasts a few seconds on a desktop machine.
    pub fn new(kernel: KernelId) -> KernelSpec {
        let (size, threads, repeat) = match kernel {
            KernelId::Copy => (1_000_000, 1, 400),
            KernelId::StridedSum => (4_000_000, 1, 4_000),
            KernelId::NestedLoops => (60_000_000, 1, 1),
            KernelId::Refactor => (40_000_000, 1, 1),
            KernelId::Sortstr => (2_000_000, 4, 1),
            KernelId::Dijkstra => (2_000, 4, 15),
            KernelId::Koshi => (80_000, 4, 1),
            KernelId::Riemann => (1_200_000_000, 4, 1),
        };
        KernelSpec {
            kernel,
            variant: if kernel.is_paired() { Some(Variant::Base) } else { None },
            size,
            threads,
            repeat,
            seed: DEFAULT_SEED,
            tau: DEFAULT_TAU,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> KernelSpec {
        self.variant = Some(variant);
        self
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let fail = |msg: String| Err(KernelError::InvalidSpec(msg));
        if self.size < 1 {
            return fail("size must be at least 1".into());
        }
        if self.threads < 1 || self.threads > 256 {
            return fail(format!("threads must be in 1..=256, got {}", self.threads));
        }
        if self.repeat < 1 {
            return fail("repeat must be at least 1".into());
        }
        match (self.kernel.is_paired(), self.variant) {
            (true, None) => return fail(format!("kernel {} requires --variant", self.kernel)),
            (false, Some(_)) => {
                return fail(format!("kernel {} does not take a variant", self.kernel))
            }
            _ => {}
        }
        match self.kernel {
            KernelId::StridedSum if self.size < paired::STRIDE => {
                return fail(format!(
                    "strided_sum needs size >= {} (the stride)",
                    paired::STRIDE
                ));
            }
            KernelId::NestedLoops | KernelId::Refactor => {
                paired::check_accumulator_bounds(self.kernel, self.size, self.repeat)?;
            }
            KernelId::Dijkstra if self.size > 4096 => {
                return fail("dijkstra caps at 4096 vertices (dense adjacency)".into());
            }
            KernelId::Koshi => {
                if !(self.tau > 0.0 && self.tau <= 0.5) {
                    return fail(format!("tau must be in (0, 0.5], got {}", self.tau));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelResult {
    /// Seconds spent in the kernel body, excluding input generation and
    /// verification.
    pub wall_time_s: f64,
    /// Deterministic digest of the kernel's output.
    pub checksum: u64,
    /// Nominal work units executed (kernel-specific).
    pub ops_performed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum KernelError {
    #[error("invalid kernel spec: {0}")]
    InvalidSpec(String),
    #[error("kernel {kernel} failed its oracle: {detail}")]
    OracleMismatch { kernel: KernelId, detail: String },
}

pub fn run_kernel(spec: &KernelSpec) -> Result<KernelResult, KernelError> {
    spec.validate()?;
    match spec.kernel {
        KernelId::Copy | KernelId::StridedSum | KernelId::NestedLoops | KernelId::Refactor => {
            paired::run(spec)
        }
        KernelId::Sortstr => sortstr::run(spec),
        KernelId::Dijkstra => dijkstra::run(spec),
        KernelId::Koshi => koshi::run(spec),
        KernelId::Riemann => riemann::run(spec),
    }
}

/// FNV-1a, 64-bit. Stable across platforms and cheap enough to digest whole
/// kernel outputs.
#[derive(Debug, Clone)]
pub(crate) struct Fnv64(u64);

impl Fnv64 {
    pub(crate) fn new() -> Fnv64 {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub(crate) fn write_u64(&mut self, v: u64) {
        self.write_bytes(&v.to_le_bytes());
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

pub(crate) fn seeded_rng(seed: u64, tag: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}
