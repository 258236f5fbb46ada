//! Monte Carlo estimate of `P(X ∈ t^E B) / V(t)`.
//!
//! Draws are split into the sampler's blocks; each block yields one hit
//! count per grid scale, and counts are summed, so the estimate does not
//! depend on how blocks are scheduled.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::limit::{limiting_measure, ln_scale_function_v};
use super::{check_grid, BoxRegion, ConvergenceReport, ScalingSpec};
use crate::error::{Error, Result};
use crate::liouville::{LiouvilleModel, LiouvilleSampler, BLOCK_SIZE};

/// Expected hit count below which a scale is flagged as unreliable.
pub const MIN_HITS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailProbOptions {
    pub samples: usize,
    pub seed: u64,
    /// Pass when the final ratio is within this many standard errors of `μ(B)`.
    pub sigmas: f64,
}

impl Default for TailProbOptions {
    fn default() -> Self {
        TailProbOptions {
            samples: 1_000_000,
            seed: 0,
            sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TailProbExperiment {
    sampler: LiouvilleSampler,
    spec: ScalingSpec,
    region: BoxRegion,
    t_grid: Vec<f64>,
    /// `(lower, upper)` of `t^E B` per grid scale.
    bounds: Vec<(Vec<f64>, Vec<f64>)>,
    measure: f64,
    options: TailProbOptions,
}

impl TailProbExperiment {
    pub fn new(
        m: &LiouvilleModel,
        s: &ScalingSpec,
        b: &BoxRegion,
        t_grid: &[f64],
        options: TailProbOptions,
    ) -> Result<Self> {
        check_grid(t_grid)?;
        if options.samples == 0 {
            return Err(Error::invalid("samples", "need at least one draw"));
        }
        if !(options.sigmas > 0.0) {
            return Err(Error::invalid("sigmas", "must be positive"));
        }
        let measure = limiting_measure(m, s, b)?;
        if !measure.is_finite() {
            return Err(Error::Divergent("μ(B) is infinite for this box".into()));
        }
        let bounds = t_grid
            .iter()
            .map(|&t| {
                let sb = b.scaled(t, s.exponents());
                (sb.lower().to_vec(), sb.upper().to_vec())
            })
            .collect();
        Ok(TailProbExperiment {
            sampler: LiouvilleSampler::new(m)?,
            spec: s.clone(),
            region: b.clone(),
            t_grid: t_grid.to_vec(),
            bounds,
            measure,
            options,
        })
    }

    pub fn blocks(&self) -> u64 {
        self.options.samples.div_ceil(BLOCK_SIZE) as u64
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    /// Hit counts per grid scale for one block of draws.
    pub fn count_block(&self, block: u64) -> Vec<u64> {
        let start = block as usize * BLOCK_SIZE;
        let len = BLOCK_SIZE.min(self.options.samples.saturating_sub(start));
        let d = self.sampler.dim();
        let mut points = vec![0.0; len * d];
        self.sampler.fill_block(self.options.seed, block, &mut points);
        let mut counts = vec![0u64; self.t_grid.len()];
        for x in points.chunks_exact(d) {
            for (c, (lo, hi)) in counts.iter_mut().zip(&self.bounds) {
                if x.iter().zip(lo.iter().zip(hi)).all(|(&v, (&l, &u))| v >= l && v <= u) {
                    *c += 1;
                }
            }
        }
        counts
    }

    /// Turns summed hit counts into the report against `μ(B)`. Errors when
    /// the largest scale saw no hits at all.
    pub fn finish(&self, counts: &[u64]) -> Result<ConvergenceReport> {
        self.finish_against(counts, self.measure)
    }

    /// As [`finish`](Self::finish) with an externally supplied target.
    pub fn finish_against(&self, counts: &[u64], target: f64) -> Result<ConvergenceReport> {
        if !(target > 0.0) || !target.is_finite() {
            return Err(Error::invalid("target", format!("must be positive and finite, got {target}")));
        }
        if counts.len() != self.t_grid.len() {
            return Err(Error::DimensionMismatch {
                expected: self.t_grid.len(),
                got: counts.len(),
            });
        }
        let n = self.options.samples as f64;
        let usable: Vec<f64> = self
            .t_grid
            .iter()
            .zip(counts)
            .filter(|(_, &c)| c >= MIN_HITS)
            .map(|(&t, _)| t)
            .collect();
        let range = match (usable.first(), usable.last()) {
            (Some(lo), Some(hi)) => format!("usable t with ≥ {MIN_HITS} hits: [{lo:e}, {hi:e}]"),
            _ => format!("no grid scale reached {MIN_HITS} hits with n = {n:e}"),
        };
        if counts[counts.len() - 1] == 0 {
            return Err(Error::Domain(format!(
                "zero hits at t = {:e}; {range}",
                self.t_grid[self.t_grid.len() - 1]
            )));
        }
        let mut ratios = Vec::with_capacity(counts.len());
        let mut std_errors = Vec::with_capacity(counts.len());
        let mut diagnostics: Vec<String> = vec![range];
        for (&t, &c) in self.t_grid.iter().zip(counts) {
            let v = libm::exp(ln_scale_function_v(self.sampler.model(), &self.spec, t)?);
            let p = c as f64 / n;
            ratios.push(p / v);
            std_errors.push(libm::sqrt(p * (1.0 - p) / n) / v);
            if c < MIN_HITS {
                diagnostics.push(format!("t = {t:e}: only {c} hits; ratio unreliable"));
            }
        }
        let targets = vec![target; counts.len()];
        let last_se = std_errors[std_errors.len() - 1];
        let tolerance = self.options.sigmas * last_se / target;
        let mut report =
            ConvergenceReport::from_curve(self.t_grid.clone(), ratios, targets, tolerance, diagnostics)?;
        report.passed = report.final_rel_error <= tolerance;
        let last = report.ratios[report.ratios.len() - 1];
        report.diagnostics.push(format!(
            "final ratio {last} is {:.2} standard errors from the target {target}",
            (last - target).abs() / last_se
        ));
        if target != self.measure {
            report.diagnostics.push(format!(
                "computed μ(B) = {}; final ratio is {:.2} standard errors from it",
                self.measure,
                (last - self.measure).abs() / last_se
            ));
        }
        report.std_errors = std_errors;
        Ok(report)
    }
}

/// Sequential run of a [`TailProbExperiment`].
pub fn tail_prob_ratio(
    m: &LiouvilleModel,
    s: &ScalingSpec,
    b: &BoxRegion,
    t_grid: &[f64],
    options: TailProbOptions,
) -> Result<ConvergenceReport> {
    let exp = TailProbExperiment::new(m, s, b, t_grid, options)?;
    let mut totals = vec![0u64; t_grid.len()];
    for block in 0..exp.blocks() {
        for (t, c) in totals.iter_mut().zip(exp.count_block(block)) {
            *t += c;
        }
    }
    exp.finish(&totals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driving::DrivingFunction;

    fn reference() -> LiouvilleModel {
        LiouvilleModel::normalize(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(3.0).unwrap())
            .unwrap()
    }

    #[test]
    fn finite_scale_probability() {
        // P(X_1 > t, X_2 > t) = 1/(1+2t) exactly for the reference law
        let m = reference();
        let s = ScalingSpec::isotropic(&m).unwrap();
        let b = BoxRegion::orthant_corner(vec![1.0, 1.0]).unwrap();
        let opts = TailProbOptions {
            samples: 200_000,
            seed: 3,
            sigmas: 3.0,
        };
        let r = tail_prob_ratio(&m, &s, &b, &[1.0, 5.0, 20.0], opts).unwrap();
        for (i, &t) in r.t_grid.iter().enumerate() {
            let v = libm::pow(1.0 + t, -3.0) * t * t;
            let exact = 1.0 / (1.0 + 2.0 * t) / v;
            assert!((r.ratios[i] - exact).abs() < 4.0 * r.std_errors[i], "t = {t}");
        }
    }

    #[test]
    fn block_counts_sum_to_sequential() {
        let m = reference();
        let s = ScalingSpec::isotropic(&m).unwrap();
        let b = BoxRegion::new(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap();
        let opts = TailProbOptions {
            samples: BLOCK_SIZE + 1000,
            seed: 11,
            sigmas: 3.0,
        };
        let exp = TailProbExperiment::new(&m, &s, &b, &[1.0, 2.0], opts).unwrap();
        assert_eq!(exp.blocks(), 2);
        let mut reversed = vec![0u64; 2];
        for block in (0..exp.blocks()).rev() {
            for (t, c) in reversed.iter_mut().zip(exp.count_block(block)) {
                *t += c;
            }
        }
        let seq = tail_prob_ratio(&m, &s, &b, &[1.0, 2.0], opts).unwrap();
        assert_eq!(exp.finish(&reversed).unwrap(), seq);
    }

    #[test]
    fn zero_hits_reports_range() {
        let m = reference();
        let s = ScalingSpec::isotropic(&m).unwrap();
        let b = BoxRegion::orthant_corner(vec![1.0, 1.0]).unwrap();
        let opts = TailProbOptions {
            samples: 1000,
            seed: 1,
            sigmas: 3.0,
        };
        match tail_prob_ratio(&m, &s, &b, &[1.0, 1e9], opts) {
            Err(Error::Domain(msg)) => assert!(msg.contains("zero hits"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}
