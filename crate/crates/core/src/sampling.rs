//! Seeded random model parameters spanning all three slope cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ModelParams, SlopeCase};

/// Ranges for random parameter draws.
#[derive(Debug, Clone, Copy)]
pub struct SampleRanges {
    pub k2: (f64, f64),
    /// Couplings are drawn from `(0, g_max]`.
    pub g_max: f64,
    pub beta_abs: (f64, f64),
    pub min_slope_gap: f64,
}

impl Default for SampleRanges {
    fn default() -> Self {
        Self {
            k2: (0.0, 2.0),
            g_max: 1.5,
            beta_abs: (0.1, 1.0),
            min_slope_gap: 0.05,
        }
    }
}

/// Deterministic parameter generator; identical seeds give identical draws.
pub struct ParamSampler {
    rng: ChaCha8Rng,
    ranges: SampleRanges,
}

impl ParamSampler {
    pub fn new(seed: u64) -> Self {
        Self::with_ranges(seed, SampleRanges::default())
    }

    pub fn with_ranges(seed: u64, ranges: SampleRanges) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            ranges,
        }
    }

    fn coupling(&mut self) -> f64 {
        // (0, g_max]
        self.ranges.g_max * (1.0 - self.rng.gen::<f64>())
    }

    /// Draws one parameter set in the requested slope case.
    pub fn draw(&mut self, case: SlopeCase) -> ModelParams {
        let r = self.ranges;
        loop {
            let k2 = self.rng.gen_range(r.k2.0..=r.k2.1);
            let g1 = self.coupling();
            let g2 = self.coupling();
            let m1 = self.rng.gen_range(r.beta_abs.0..=r.beta_abs.1);
            let m2 = self.rng.gen_range(r.beta_abs.0..=r.beta_abs.1);
            let (lo, hi) = (m1.min(m2), m1.max(m2));
            let (b1, b2) = match case {
                SlopeCase::BothPositive => (lo, hi),
                SlopeCase::Mixed => (-m1, m2),
                SlopeCase::BothNegative => (-hi, -lo),
            };
            if (b1 - b2).abs() < r.min_slope_gap {
                continue;
            }
            if let Ok(p) = ModelParams::new(k2, g1, g2, b1, b2) {
                return p;
            }
        }
    }

    /// Draws `n` sets cycling through the three slope cases.
    pub fn draw_cycled(&mut self, n: usize) -> Vec<ModelParams> {
        (0..n).map(|i| self.draw(SlopeCase::ALL[i % 3])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_respect_ranges_and_cases() {
        let mut s = ParamSampler::new(11);
        for (i, p) in s.draw_cycled(90).into_iter().enumerate() {
            assert_eq!(p.case(), SlopeCase::ALL[i % 3]);
            assert!((0.0..=2.0).contains(&p.k2()));
            assert!(p.g1() > 0.0 && p.g1() <= 1.5 && p.g2() > 0.0 && p.g2() <= 1.5);
            assert!((p.beta1() - p.beta2()).abs() >= 0.05);
            for b in [p.beta1(), p.beta2()] {
                assert!((0.1..=1.0).contains(&b.abs()));
            }
        }
    }

    #[test]
    fn seeded_determinism() {
        let a = ParamSampler::new(7).draw_cycled(12);
        let b = ParamSampler::new(7).draw_cycled(12);
        assert_eq!(a, b);
    }
}
