//! Forward simulation and coupling from the past.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::FunctionMeasure;
use crate::partition::Partition;
use crate::scalar::Scalar;

use super::exact::exact_coalescence;

/// Draws atoms by inverting the cumulative weights, in atom order.
#[derive(Clone, Debug)]
pub struct AtomSampler {
    maps: Vec<Vec<usize>>,
    cumulative: Vec<f64>,
}

impl AtomSampler {
    pub fn new<T: Scalar>(mu: &FunctionMeasure<T>) -> Self {
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(mu.len());
        let mut maps = Vec::with_capacity(mu.len());
        for (f, w) in mu.atoms() {
            acc += w.to_f64();
            cumulative.push(acc);
            maps.push(f.image().to_vec());
        }
        Self { maps, cumulative }
    }

    pub fn draw_index<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty measure");
        let u: f64 = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.maps.len() - 1)
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> &[usize] {
        &self.maps[self.draw_index(rng)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    /// The coalescence number was reached after this many steps.
    Stable(u64),
    DidNotStabilize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForwardOutcome {
    pub partition: Partition,
    pub stability: Stability,
}

/// `50 n / min weight`, rounded up.
pub fn default_horizon<T: Scalar>(mu: &FunctionMeasure<T>) -> u64 {
    let w = mu.min_weight().to_f64();
    (50.0 * mu.n() as f64 / w).ceil().min(u64::MAX as f64) as u64
}

/// Reusable forward simulator; the target class count is computed once.
#[derive(Clone, Debug)]
pub struct ForwardSimulator {
    n: usize,
    sampler: AtomSampler,
    target_k: usize,
}

impl ForwardSimulator {
    pub fn new<T: Scalar>(mu: &FunctionMeasure<T>) -> Result<Self> {
        let k = exact_coalescence(mu)?.k;
        Ok(Self::with_target(mu, k))
    }

    pub fn with_target<T: Scalar>(mu: &FunctionMeasure<T>, target_k: usize) -> Self {
        Self {
            n: mu.n(),
            sampler: AtomSampler::new(mu),
            target_k,
        }
    }

    pub fn target_k(&self) -> usize {
        self.target_k
    }

    pub fn run(&self, seed: u64, horizon: u64) -> ForwardOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z: Vec<usize> = (0..self.n).collect();
        let mut seen = vec![false; self.n];
        let distinct = |z: &[usize], seen: &mut [bool]| {
            seen.iter_mut().for_each(|s| *s = false);
            z.iter().filter(|&&x| !std::mem::replace(&mut seen[x], true)).count()
        };
        let mut stability = Stability::DidNotStabilize;
        if distinct(&z, &mut seen) <= self.target_k {
            stability = Stability::Stable(0);
        } else {
            for t in 1..=horizon {
                let f = self.sampler.draw(&mut rng);
                z.iter_mut().for_each(|x| *x = f[*x]);
                if distinct(&z, &mut seen) <= self.target_k {
                    stability = Stability::Stable(t);
                    break;
                }
            }
        }
        ForwardOutcome {
            partition: Partition::from_labels(&z),
            stability,
        }
    }
}

/// Runs the chains from every start until they merge into the coalescence
/// number of classes, returning the limiting equality pattern.
pub fn simulate_forward<T: Scalar>(
    mu: &FunctionMeasure<T>,
    seed: u64,
    horizon: Option<u64>,
) -> Result<ForwardOutcome> {
    let sim = ForwardSimulator::new(mu)?;
    Ok(sim.run(seed, horizon.unwrap_or_else(|| default_horizon(mu))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CftpOutcome {
    /// 0-based state sampled from the stationary law.
    Coalesced { sample: usize, steps: u64 },
    DidNotCoalesce { steps: u64 },
}

/// Propp-Wilson: `G_t = F_1 ∘ ... ∘ F_t`, with each new function applied
/// innermost, until `G_t` is constant.
pub fn simulate_cftp<T: Scalar>(mu: &FunctionMeasure<T>, seed: u64, horizon: u64) -> Result<CftpOutcome> {
    if mu.is_empty() {
        return Err(Error::InvalidMeasure("empty support".into()));
    }
    let sampler = AtomSampler::new(mu);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g: Vec<usize> = (0..mu.n()).collect();
    for t in 1..=horizon {
        let f = sampler.draw(&mut rng);
        g = f.iter().map(|&x| g[x]).collect();
        if g.iter().all(|&x| x == g[0]) {
            return Ok(CftpOutcome::Coalesced {
                sample: g[0],
                steps: t,
            });
        }
    }
    Ok(CftpOutcome::DidNotCoalesce { steps: horizon })
}
