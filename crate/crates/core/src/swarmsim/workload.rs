//! Seeded workload sampling. Every worker gets its own RNG streams derived
//! from the experiment seed and the worker id, so samples do not depend on
//! roster order or on how many iterations ran before.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::definitions::WorkloadGenerator;
use crate::model::{AgentId, WorkloadSample};

use super::SimError;

/// splitmix64 finalizer
fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a, stable across platforms and toolchains.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub struct WorkloadSampler {
    generator: WorkloadGenerator,
    stream: u64,
    baseline: [f64; 4],
}

impl WorkloadSampler {
    pub fn new(
        generator: &WorkloadGenerator,
        seed: u64,
        worker: &AgentId,
    ) -> Result<Self, SimError> {
        let stream = mix(seed, fnv1a(worker.as_str().as_bytes()));
        let baseline = match generator {
            WorkloadGenerator::Fixed { beta } => *beta,
            WorkloadGenerator::UniformNoise {
                center, half_width, ..
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(stream, 0));
                center.map(|c| spread(&mut rng, c, *half_width))
            }
            WorkloadGenerator::Trace { samples, .. } => {
                if samples.is_empty() {
                    return Err(SimError::Config(format!(
                        "worker `{worker}`: trace generator has no samples loaded"
                    )));
                }
                samples[0]
            }
        };
        Ok(Self {
            generator: generator.clone(),
            stream,
            baseline,
        })
    }

    pub fn sample(&self, iteration: usize) -> WorkloadSample {
        let beta = match &self.generator {
            WorkloadGenerator::Fixed { .. } => self.baseline,
            WorkloadGenerator::UniformNoise { jitter, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(self.stream, iteration as u64 + 1));
                self.baseline.map(|b| spread(&mut rng, b, *jitter))
            }
            WorkloadGenerator::Trace { samples, .. } => samples[iteration % samples.len()],
        };
        WorkloadSample {
            cpu: beta[0],
            vram: beta[1],
            swap: beta[2],
            bandwidth: beta[3],
            timestamp: iteration as u64,
        }
    }
}

/// Uniform draw from `center ± half_width`, clipped to `[0, 1]`.
fn spread(rng: &mut ChaCha8Rng, center: f64, half_width: f64) -> f64 {
    let u: f64 = rng.random();
    (center + half_width * (2.0 * u - 1.0)).clamp(0.0, 1.0)
}
