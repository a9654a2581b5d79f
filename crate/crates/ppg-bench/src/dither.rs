//! Fast sampling of the dither distribution: the integer pixel value
//! `clamp(round(Normal(target, sigma^2)), 0, 255)`.
//!
//! The distribution over at most a few dozen integer bins is precomputed
//! once per (target, sigma) and sampled with Walker's alias method — one
//! uniform draw per pixel.

use crate::rng::SimRng;

/// Abramowitz & Stegun 7.1.26 complementary-error-function approximation,
/// absolute error < 1.5e-7.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z
        - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398
                                + t * (1.48851587
                                    + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Standard normal CDF.
fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Alias-method sampler for the rounded-and-clamped normal pixel value.
pub struct DitherSampler {
    base: u8,
    prob: Vec<f64>,
    alias: Vec<u8>,
}

impl DitherSampler {
    /// Build the sampler for one channel target. Caller guarantees
    /// `sigma > 0` and the target inside `[4*sigma, 255 - 4*sigma]`.
    pub fn new(target: f64, sigma: f64) -> Self {
        // Bins beyond 8 sigma carry < 1e-15 each; absorb the tails into the
        // end bins, which is exactly what clamping does near 0/255 anyway.
        let lo = ((target - 8.0 * sigma).floor().max(0.0)) as i32;
        let hi = ((target + 8.0 * sigma).ceil().min(255.0)) as i32;
        let n = (hi - lo + 1) as usize;
        let mut weights = Vec::with_capacity(n);
        for k in lo..=hi {
            let upper = if k == hi {
                1.0
            } else {
                phi((k as f64 + 0.5 - target) / sigma)
            };
            let lower = if k == lo {
                0.0
            } else {
                phi((k as f64 - 0.5 - target) / sigma)
            };
            weights.push((upper - lower).max(0.0));
        }
        let total: f64 = weights.iter().sum();

        // Walker alias construction.
        let mut prob: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
        let mut alias = vec![0u8; n];
        let mut small: Vec<usize> = (0..n).filter(|&i| prob[i] < 1.0).collect();
        let mut large: Vec<usize> = (0..n).filter(|&i| prob[i] >= 1.0).collect();
        let mut final_prob = vec![1.0f64; n];
        while let (Some(s), Some(l)) = (small.pop(), large.last().copied()) {
            final_prob[s] = prob[s];
            alias[s] = l as u8;
            prob[l] -= 1.0 - prob[s];
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        for &l in &large {
            final_prob[l] = 1.0;
        }
        Self {
            base: lo as u8,
            prob: final_prob,
            alias,
        }
    }

    /// One pixel value; a single RNG draw.
    #[inline(always)]
    pub fn sample(&self, rng: &mut SimRng) -> u8 {
        let r = rng.next();
        let n = self.prob.len() as u64;
        // High bits pick the bin, low 32 bits the acceptance uniform.
        let j = ((((r >> 32) * n) >> 32) as usize).min(self.prob.len() - 1);
        let u = (r & 0xFFFF_FFFF) as f64 * (1.0 / 4294967296.0);
        // branchless select keeps the pipeline fed
        let take_j = (u < self.prob[j]) as u8;
        take_j * j as u8 + (1 - take_j) * self.alias[j] + self.base
    }

    /// Exact probability of each pixel value, for distribution tests.
    #[cfg(test)]
    pub fn analytic_pmf(target: f64, sigma: f64) -> Vec<(u8, f64)> {
        let s = Self::new(target, sigma);
        let n = s.prob.len();
        // reconstruct from alias table
        let mut pmf = vec![0.0f64; n];
        for j in 0..n {
            pmf[j] += s.prob[j] / n as f64;
            pmf[s.alias[j] as usize] += (1.0 - s.prob[j]) / n as f64;
        }
        pmf.iter()
            .enumerate()
            .map(|(i, &p)| (s.base + i as u8, p))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfc_reference_values() {
        assert!((erfc(0.0) - 1.0).abs() < 1e-7);
        assert!((erfc(1.0) - 0.15729920705028513).abs() < 1e-6);
        assert!((erfc(-1.0) - 1.8427007929497148).abs() < 1e-6);
    }

    #[test]
    fn sampler_matches_normal_moments() {
        let target = 128.3;
        let sigma = 2.0;
        let sampler = DitherSampler::new(target, sigma);
        let mut rng = SimRng::new(99);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = sampler.sample(&mut rng) as f64;
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((mean - target).abs() < 0.01, "mean {mean}");
        // rounding adds 1/12 to the variance
        let expect_var = sigma * sigma + 1.0 / 12.0;
        assert!((var - expect_var).abs() < 0.05, "var {var} vs {expect_var}");
    }

    #[test]
    fn sampler_tracks_analytic_pmf() {
        let target = 100.0;
        let sigma = 2.0;
        let sampler = DitherSampler::new(target, sigma);
        let mut rng = SimRng::new(7);
        let n = 2_000_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            *counts.entry(sampler.sample(&mut rng)).or_insert(0u64) += 1;
        }
        for (value, p) in DitherSampler::analytic_pmf(target, sigma) {
            if p < 1e-4 {
                continue;
            }
            let observed = *counts.get(&value).unwrap_or(&0) as f64 / n as f64;
            // ~5 sigma binomial band
            let tol = 5.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (observed - p).abs() <= tol,
                "value {value}: observed {observed}, expected {p}"
            );
        }
    }
}
