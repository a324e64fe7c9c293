//! Euler integration of the test equation y' = y over [0, 1].
//!
//! Integrates one component per unknown: component 0 starts at exactly 1 and
//! the rest at seeded values in [0.5, 1.5). Components are independent, so
//! splitting them across threads cannot change any result. The step tau
//! fixes the accuracy: the forward Euler solution (1 + tau)^steps lands
//! within a factor (1 + tau) of the exact c * e^(steps * tau).

use std::time::Instant;

use rand::Rng;

use super::{KernelError, KernelId, KernelResult, KernelSpec, checksum_of_values, seeded_rng};

pub(crate) fn run(spec: &KernelSpec) -> Result<KernelResult, KernelError> {
    let n = spec.size;
    let tau = spec.tau;
    let steps = (1.0 / tau).round().max(1.0) as u64;

    let mut rng = seeded_rng(spec.seed, 7);
    let initial: Vec<f64> = (0..n)
        .map(|i| if i == 0 { 1.0 } else { 0.5 + rng.random::<f64>() })
        .collect();
    let mut finals = vec![0.0f64; n];

    let workers = spec.threads.min(n).max(1);
    let chunk = n.div_ceil(workers);

    let start = Instant::now();
    for _ in 0..spec.repeat {
        std::thread::scope(|scope| {
            for (out, init) in finals.chunks_mut(chunk).zip(initial.chunks(chunk)) {
                scope.spawn(move || {
                    for (slot, &c) in out.iter_mut().zip(init) {
                        let mut y = c;
                        let mut k = 0u64;
                        while k < steps {
                            y += tau * y;
                            k += 1;
                        }
                        *slot = y;
                    }
                });
            }
        });
    }
    let wall_time_s = start.elapsed().as_secs_f64();

    // Analytic oracle: relative error of (1+tau)^steps against
    // e^(steps*tau) is about tau/2 at steps*tau = 1; tau is a safe bound.
    let horizon = steps as f64 * tau;
    let growth = horizon.exp();
    for (i, (&y, &c)) in finals.iter().zip(&initial).enumerate() {
        let target = c * growth;
        if !((y - target).abs() <= target * (tau + 1e-9)) {
            return Err(KernelError::OracleMismatch {
                kernel: KernelId::Koshi,
                detail: format!("component {i}: {y} vs analytic {target}"),
            });
        }
    }

    Ok(KernelResult {
        wall_time_s,
        checksum: checksum_of_values(&finals),
        ops_performed: n as u64 * steps * spec.repeat as u64,
    })
}
