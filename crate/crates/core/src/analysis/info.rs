//! Mutual-information machinery for the consistent-Gaussian LLR model:
//! the J-function and its inverse, the check-node transform phi, histogram
//! MI estimation, and consistent-Gaussian prior synthesis.

use rand_distr::{Distribution, Normal};

use crate::error::CoreError;
use crate::grid::SymbolPage;
use crate::llr::{clip_llr, LlrGrid, LLR_CLIP};
use crate::seed::rng_from_seed;
use crate::Result;

/// Composite-Simpson integration of `f` against the standard normal weight
/// over t in [-12, 12].
fn gauss_expect(f: impl Fn(f64) -> f64) -> f64 {
    const HALF_RANGE: f64 = 12.0;
    const STEPS: usize = 2400; // even
    let h = 2.0 * HALF_RANGE / STEPS as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let g = |t: f64| norm * (-0.5 * t * t).exp() * f(t);
    let mut acc = g(-HALF_RANGE) + g(HALF_RANGE);
    for k in 1..STEPS {
        let t = -HALF_RANGE + k as f64 * h;
        acc += if k % 2 == 1 { 4.0 * g(t) } else { 2.0 * g(t) };
    }
    acc * h / 3.0
}

/// `log2(1 + exp(-z))`, stable for large |z|.
fn log2_1p_exp_neg(z: f64) -> f64 {
    let ln = if z >= 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    };
    ln / std::f64::consts::LN_2
}

/// Mutual information between an equiprobable binary symbol and a
/// consistent-Gaussian LLR with standard deviation `sigma`
/// (mean `sigma^2 / 2` conditioned on +1).
pub fn j_function(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let s2 = sigma * sigma;
    let i = 1.0 - gauss_expect(|t| log2_1p_exp_neg(s2 / 2.0 + sigma * t));
    i.clamp(0.0, 1.0)
}

/// Inverse of [`j_function`] by bisection; accepts `i` in [0, 1).
pub fn j_inverse(i: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&i) {
        return Err(CoreError::invalid(format!("mutual information {i} outside [0,1]")));
    }
    if i == 0.0 {
        return Ok(0.0);
    }
    if i >= 1.0 {
        return Err(CoreError::invalid("j_inverse undefined at exactly 1"));
    }
    let mut lo = 0.0f64;
    let mut hi = 30.0f64;
    debug_assert!(j_function(hi) > i);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if j_function(mid) < i {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Check-node transform `phi(x) = 1 - E[tanh(u/2)]` for
/// `u ~ Normal(x, 2x)`. Quadrature of the defining integral for x <= 50,
/// asymptotic expansion `sqrt(pi/x) exp(-x/4) (1 - pi^2/(4x))` beyond.
pub fn phi(x: f64) -> f64 {
    assert!(x >= 0.0, "phi domain is x >= 0");
    if x == 0.0 {
        return 1.0;
    }
    if x > 50.0 {
        return (std::f64::consts::PI / x).sqrt()
            * (-x / 4.0).exp()
            * (1.0 - std::f64::consts::PI.powi(2) / (4.0 * x));
    }
    let sd = (2.0 * x).sqrt();
    // 1 - tanh(u/2) = 2 / (1 + e^u), evaluated without cancellation.
    gauss_expect(|t| {
        let u = x + sd * t;
        if u >= 0.0 {
            let e = (-u).exp();
            2.0 * e / (1.0 + e)
        } else {
            2.0 / (1.0 + u.exp())
        }
    })
}

/// Inverse of [`phi`] by bisection on its strictly decreasing branch.
pub fn phi_inverse(y: f64) -> f64 {
    assert!(y > 0.0 && y <= 1.0, "phi_inverse domain is (0, 1]");
    if y >= 1.0 {
        return 0.0;
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while phi(hi) > y {
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Streaming symmetrized histogram estimator of I(L; X) for equiprobable
/// binary X: 100 uniform bins over the clipped LLR range, each sample
/// counted once as observed and once sign-flipped.
#[derive(Debug, Clone)]
pub struct MiEstimator {
    bins: usize,
    // Counts conditioned on x = +1 after symmetrization. Fractional because
    // an LLR of exactly zero is split across the two center bins.
    counts: Vec<f64>,
    total: u64,
}

impl Default for MiEstimator {
    fn default() -> Self {
        Self::new()
    }
}

impl MiEstimator {
    pub fn new() -> Self {
        MiEstimator {
            bins: 100,
            counts: vec![0.0; 100],
            total: 0,
        }
    }

    #[inline]
    fn bin_of(&self, l: f64) -> usize {
        let clipped = clip_llr(l);
        let t = (clipped + LLR_CLIP) / (2.0 * LLR_CLIP);
        ((t * self.bins as f64) as usize).min(self.bins - 1)
    }

    /// Adds one (LLR, symbol) observation.
    #[inline]
    pub fn push(&mut self, llr: f64, symbol: i8) {
        // Fold onto the x = +1 condition; the mirrored sample lands in the
        // mirrored bin, so both conditionals are represented by one table.
        let l = if symbol >= 0 { llr } else { -llr };
        let bin = self.bin_of(l);
        if l == 0.0 {
            // Zero sits on the bin boundary; keep the folded table symmetric.
            self.counts[bin] += 0.5;
            self.counts[self.bins - 1 - bin] += 0.5;
        } else {
            self.counts[bin] += 1.0;
        }
        self.total += 1;
    }

    pub fn merge(&mut self, other: &MiEstimator) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// The mutual-information estimate in [0, 1].
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        let mut i = 0.0;
        for b in 0..self.bins {
            // p(b | +1) from the folded table; p(b | -1) is its mirror.
            let p_pos = self.counts[b] / n;
            let p_neg = self.counts[self.bins - 1 - b] / n;
            if p_pos > 0.0 {
                i += 0.5 * p_pos * (2.0 * p_pos / (p_pos + p_neg)).log2();
            }
            if p_neg > 0.0 {
                i += 0.5 * p_neg * (2.0 * p_neg / (p_pos + p_neg)).log2();
            }
        }
        i.clamp(0.0, 1.0)
    }
}

/// Histogram MI of an LLR set against the true symbols.
pub fn measure_mi(llrs: &[f64], truth: &[i8]) -> Result<f64> {
    if llrs.len() != truth.len() {
        return Err(CoreError::mismatch("LLR/truth length mismatch"));
    }
    let mut est = MiEstimator::new();
    for (&l, &x) in llrs.iter().zip(truth) {
        est.push(l, x);
    }
    Ok(est.value())
}

/// Blind surrogate for the time-average MI estimator when the true symbols
/// are unknown: hard decisions stand in for the truth, so the value is
/// optimistic at low information but monotone in the underlying quality,
/// which is all the scheme switch needs.
pub fn blind_mi_surrogate(llrs: &[f64]) -> f64 {
    if llrs.is_empty() {
        return 0.0;
    }
    let sum: f64 = llrs.iter().map(|&l| 1.0 - log2_1p_exp_neg(l.abs())).sum();
    (sum / llrs.len() as f64).clamp(0.0, 1.0)
}

/// Expected value of the blind surrogate for a consistent-Gaussian LLR with
/// standard deviation `sigma` (mean `sigma^2 / 2` given +1). Strictly
/// increasing in sigma, so it can be inverted for calibration.
fn surrogate_expectation(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let s2 = sigma * sigma;
    gauss_expect(|t| 1.0 - log2_1p_exp_neg((s2 / 2.0 + sigma * t).abs()))
}

/// Debiased blind MI estimate: inverts the surrogate's expectation under the
/// consistent-Gaussian model and maps the recovered sigma through the
/// J-function. This removes the optimistic hard-decision bias of
/// [`blind_mi_surrogate`] at low information (the raw surrogate is what the
/// scheme switch would see; uncorrected it flips schemes far too early).
/// Still approximate when the LLR population is far from Gaussian.
pub fn blind_mi_calibrated(llrs: &[f64]) -> f64 {
    let raw = blind_mi_surrogate(llrs);
    if raw <= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0f64;
    let mut hi = 60.0f64;
    if surrogate_expectation(hi) <= raw {
        return 1.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if surrogate_expectation(mid) < raw {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    j_function(0.5 * (lo + hi))
}

/// Draws consistent-Gaussian prior LLRs `L ~ Normal(x sigma^2/2, sigma^2)`
/// with sigma chosen so the prior mutual information is `i_i`.
pub fn synth_prior_llrs(i_i: f64, truth: &[i8], seed: u64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&i_i) {
        return Err(CoreError::invalid(format!("I_i = {i_i} outside [0,1]")));
    }
    if i_i == 0.0 {
        return Ok(vec![0.0; truth.len()]);
    }
    if i_i >= 1.0 {
        return Ok(truth.iter().map(|&x| f64::from(x) * LLR_CLIP).collect());
    }
    let sigma = j_inverse(i_i)?;
    synth_prior_llrs_mean(sigma * sigma / 2.0, truth, seed)
}

/// Draws consistent-Gaussian prior LLRs with conditional mean `m`
/// (variance `2m`).
pub fn synth_prior_llrs_mean(m: f64, truth: &[i8], seed: u64) -> Result<Vec<f64>> {
    if m < 0.0 {
        return Err(CoreError::invalid("prior mean must be >= 0"));
    }
    if m == 0.0 {
        return Ok(vec![0.0; truth.len()]);
    }
    let normal = Normal::new(0.0, (2.0 * m).sqrt())
        .map_err(|e| CoreError::invalid(format!("bad prior parameters: {e}")))?;
    let mut rng = rng_from_seed(seed);
    Ok(truth
        .iter()
        .map(|&x| clip_llr(f64::from(x) * m + normal.sample(&mut rng)))
        .collect())
}

/// Grid wrapper around [`synth_prior_llrs`].
pub fn synth_priors(i_i: f64, truth: &SymbolPage, seed: u64) -> Result<LlrGrid> {
    let values = synth_prior_llrs(i_i, truth.symbols(), seed)?;
    LlrGrid::from_values(truth.height(), truth.width(), values)
}
