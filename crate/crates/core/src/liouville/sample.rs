//! Exact sampling through the stochastic representation `X = R·Y` with
//! `Y ~ Dirichlet(a)` independent of the radial part `R`.
//!
//! Seed contract: draws are grouped in blocks of [`BLOCK_SIZE`]; block `b`
//! of a batch with seed `s` uses `ChaCha8Rng::seed_from_u64(s)` on stream
//! `b`. A batch is therefore identical however its blocks are scheduled.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01};

use super::radial::RadialSampler;
use super::LiouvilleModel;
use crate::error::{Error, Result};

pub const BLOCK_SIZE: usize = 1 << 16;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct LiouvilleSampler {
    model: LiouvilleModel,
    gammas: Vec<Gamma<f64>>,
    radial: RadialSampler,
}

impl LiouvilleSampler {
    pub fn new(model: &LiouvilleModel) -> Result<Self> {
        let gammas = model
            .shapes()
            .iter()
            .map(|&a| {
                Gamma::new(a, 1.0).map_err(|e| Error::invalid("shapes", alloc::format!("{e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let radial = RadialSampler::new(model.driving(), model.shape_sum())?;
        Ok(LiouvilleSampler {
            model: model.clone(),
            gammas,
            radial,
        })
    }

    pub fn model(&self) -> &LiouvilleModel {
        &self.model
    }

    pub fn radial(&self) -> &RadialSampler {
        &self.radial
    }

    pub fn dim(&self) -> usize {
        self.gammas.len()
    }

    pub fn draw_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = Open01.sample(rng);
            let r = self.radial.inverse_cdf(u);
            if r > 0.0 && r.is_finite() {
                return r;
            }
        }
    }

    /// Writes one draw into `out` (length `d`).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        let r = self.draw_radius(rng);
        if out.len() == 1 {
            out[0] = r;
            return;
        }
        loop {
            let mut sum = 0.0;
            for (slot, gamma) in out.iter_mut().zip(&self.gammas) {
                let g = gamma.sample(rng);
                *slot = g;
                sum += g;
            }
            if sum > 0.0 && out.iter().all(|&g| g > 0.0) {
                let scale = r / sum;
                for v in out.iter_mut() {
                    *v *= scale;
                }
                if out.iter().all(|&v| v > 0.0 && v.is_finite()) {
                    return;
                }
            }
        }
    }

    /// Fills `out` (row-major, `count × d`) with block `block` of the batch
    /// seeded by `seed`.
    pub fn fill_block(&self, seed: u64, block: u64, out: &mut [f64]) {
        let d = self.dim();
        let mut rng = stream_rng(seed, block);
        for row in out.chunks_exact_mut(d) {
            self.draw(&mut rng, row);
        }
    }
}

/// `n × d` draws, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub points: Vec<f64>,
    pub dim: usize,
    pub seed: u64,
    pub model: LiouvilleModel,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }
}

/// Draws `n` points sequentially, block by block.
pub fn sample(model: &LiouvilleModel, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::invalid("n", "sample size must be at least 1"));
    }
    let sampler = LiouvilleSampler::new(model)?;
    let d = model.dim();
    let mut points = vec![0.0; n * d];
    for (block, chunk) in points.chunks_mut(BLOCK_SIZE * d).enumerate() {
        sampler.fill_block(seed, block as u64, chunk);
    }
    Ok(SampleBatch {
        points,
        dim: d,
        seed,
        model: model.clone(),
    })
}
