//! Brute-force reference implementations used to validate the fast paths.
//!
//! Everything here is deliberately independent of the production algorithms:
//! exhaustive enumeration instead of message passing, direct summation over
//! all symbol pages instead of linear filtering, and the published curve fit
//! for the check-node transform. Exposed as a normal module so the CLI
//! `selftest` subcommand can run the same checks as the test suite.

use crate::error::CoreError;
use crate::grid::{convolve2d_real, PsfKernel};
use crate::ldpc::LdpcCode;
use crate::Result;

/// Exact posterior LLRs of a (coset) code by enumerating all 2^n words.
/// Only feasible for n <= 20.
pub fn exhaustive_posterior_llrs(code: &LdpcCode, prior: &[f64]) -> Result<Vec<f64>> {
    let n = code.n();
    if n > 20 {
        return Err(CoreError::invalid("exhaustive oracle limited to n <= 20"));
    }
    if prior.len() != n {
        return Err(CoreError::mismatch("prior length != n"));
    }
    // Parity each check must take: the coset's parity on that check.
    let target_parity: Vec<u8> = (0..code.num_checks())
        .map(|c| {
            code.edges_of_check(c)
                .iter()
                .fold(0u8, |p, &e| p ^ code.coset()[code.var_of_edge(e)])
        })
        .collect();

    // log-sum-exp accumulators per (variable, bit value).
    let mut max_score = f64::NEG_INFINITY;
    let mut scores = Vec::new();
    'words: for word in 0u32..(1u32 << n) {
        for c in 0..code.num_checks() {
            let parity = code
                .edges_of_check(c)
                .iter()
                .fold(0u8, |p, &e| p ^ ((word >> code.var_of_edge(e)) & 1) as u8);
            if parity != target_parity[c] {
                continue 'words;
            }
        }
        // Word weight: sum over bits of (+L/2 for bit 0, -L/2 for bit 1).
        let mut score = 0.0;
        for (v, &l) in prior.iter().enumerate() {
            let sign = if (word >> v) & 1 == 0 { 1.0 } else { -1.0 };
            score += sign * l / 2.0;
        }
        max_score = max_score.max(score);
        scores.push((word, score));
    }
    if scores.is_empty() {
        return Err(CoreError::invalid("coset code has no valid words"));
    }

    let mut llrs = Vec::with_capacity(n);
    for v in 0..n {
        let mut num = 0.0; // bit 0 (symbol +1)
        let mut den = 0.0; // bit 1 (symbol -1)
        for &(word, score) in &scores {
            let w = (score - max_score).exp();
            if (word >> v) & 1 == 0 {
                num += w;
            } else {
                den += w;
            }
        }
        llrs.push((num / den).ln());
    }
    Ok(llrs)
}

/// Exact conditional-mean estimate of the center symbol of a small page,
/// enumerating every symbol configuration: the MMSE-optimal (nonlinear)
/// estimator the Wiener filter is benchmarked against.
///
/// `prior_mean[k]` is the prior mean of symbol k (row-major over the
/// `side x side` page, center symbol's prior ignored), `received` are the
/// full-convolution samples of the page, `sigma_w` the noise level.
pub fn conditional_mean_center(
    psf: &PsfKernel,
    side: usize,
    prior_mean: &[f64],
    received: &[f64],
    sigma_w: f64,
) -> Result<f64> {
    let n = side * side;
    if n > 20 {
        return Err(CoreError::invalid("conditional-mean oracle limited to 20 symbols"));
    }
    if prior_mean.len() != n {
        return Err(CoreError::mismatch("prior_mean length mismatch"));
    }
    let l = psf.size();
    let out_dim = (side + l - 1) * (side + l - 1);
    if received.len() != out_dim {
        return Err(CoreError::mismatch("received length mismatch"));
    }
    let center = n / 2;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut max_log = f64::NEG_INFINITY;
    let mut terms = Vec::with_capacity(1 << n);
    for assign in 0u32..(1u32 << n) {
        let sym = |k: usize| -> f64 {
            if (assign >> k) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        // Prior log-probability (center symbol equiprobable).
        let mut logp = 0.0;
        for k in 0..n {
            let p = if k == center {
                0.5
            } else {
                (1.0 + sym(k) * prior_mean[k]) / 2.0
            };
            if p <= 0.0 {
                logp = f64::NEG_INFINITY;
                break;
            }
            logp += p.ln();
        }
        if logp == f64::NEG_INFINITY {
            continue;
        }
        let grid = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i as usize >= side || j as usize >= side {
                0.0
            } else {
                sym(i as usize * side + j as usize)
            }
        };
        let clean = convolve2d_real(side, side, &grid, psf);
        let mut loglik = 0.0;
        for (r, c) in received.iter().zip(clean.samples()) {
            let d = r - c;
            loglik -= d * d / (2.0 * sigma_w * sigma_w);
        }
        let log_term = logp + loglik;
        max_log = max_log.max(log_term);
        terms.push((sym(center), log_term));
    }
    for (x, log_term) in terms {
        let w = (log_term - max_log).exp();
        num += x * w;
        den += w;
    }
    Ok(num / den)
}

/// Published curve-fit approximation of the check-node transform, used as a
/// test oracle for the quadrature implementation. Stated validity range
/// roughly 0 < x < 10.
pub fn phi_curve_fit(x: f64) -> f64 {
    (-0.4527 * x.powf(0.86) + 0.0218).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    #[test]
    fn exhaustive_oracle_respects_symmetry() {
        // Even check degrees make the code complement-closed, so negating
        // every prior must negate every posterior.
        let code = LdpcCode::build_regular(8, 2, 4, 4)
            .unwrap()
            .with_coset(vec![0; 8])
            .unwrap();
        let mut rng = rng_from_seed(2);
        let prior: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let pos = exhaustive_posterior_llrs(&code, &prior).unwrap();
        let neg_prior: Vec<f64> = prior.iter().map(|l| -l).collect();
        let neg = exhaustive_posterior_llrs(&code, &neg_prior).unwrap();
        for (a, b) in pos.iter().zip(&neg) {
            assert!((a + b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn exhaustive_oracle_matches_single_check_formula() {
        // One parity check over three bits: the extrinsic part of the
        // posterior is the tanh rule.
        let code = LdpcCode::from_edge_list(3, 1, 3, vec![0, 0, 0]).unwrap();
        let prior = [0.9f64, -0.4, 1.7];
        let post = exhaustive_posterior_llrs(&code, &prior).unwrap();
        for v in 0..3 {
            let others: Vec<f64> = (0..3).filter(|&u| u != v).map(|u| prior[u]).collect();
            let ext = 2.0 * ((others[0] / 2.0).tanh() * (others[1] / 2.0).tanh()).atanh();
            assert!((post[v] - (prior[v] + ext)).abs() < 1e-9, "bit {v}");
        }
    }

    #[test]
    fn conditional_mean_sign_follows_strong_observation() {
        let psf = PsfKernel::make_psf(0.2).unwrap();
        let side = 3;
        let prior = vec![0.0; 9];
        // Transmit all +1, tiny noise: posterior mean of the center ~ +1.
        let grid = |i: isize, j: isize| {
            if (0..3).contains(&i) && (0..3).contains(&j) {
                1.0
            } else {
                0.0
            }
        };
        let clean = convolve2d_real(3, 3, &grid, &psf);
        let m =
            conditional_mean_center(&psf, side, &prior, clean.samples(), 0.05).unwrap();
        assert!(m > 0.99, "conditional mean {m}");
    }
}
