//! Regular LDPC coset codes and flooding sum-product decoding.
//!
//! Codes come from the permutation-based regular ensemble (socket model),
//! with double edges removed by local socket swaps. The decoder takes
//! external a-priori LLRs and returns extrinsic LLRs, so it can sit inside
//! a turbo loop. The coset is handled by sign-flipping LLRs at entry and
//! exit; internally the decoder always sees the zero-coset code.

pub mod alist;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::CoreError;
use crate::grid::{convolve2d, snr_to_sigma, PsfKernel, SymbolPage};
use crate::llr::clip_llr;
use crate::seed::{derive_seed, rng_from_seed};
use crate::Result;

/// Sparse bipartite graph of a regular (dv, dc) code plus a coset vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LdpcCode {
    n: usize,
    dv: usize,
    dc: usize,
    num_checks: usize,
    /// Per-edge endpoint arrays. Edge `e` connects `edge_var[e]` to
    /// `edge_chk[e]`. Edges are grouped by variable: variable `v` owns
    /// edges `v*dv .. (v+1)*dv`.
    edge_chk: Vec<usize>,
    /// Edge ids grouped by check: check `c` owns `chk_edges[c*dc .. (c+1)*dc]`.
    chk_edges: Vec<usize>,
    coset: Vec<u8>,
}

impl LdpcCode {
    /// Samples a code from the regular ensemble: a random permutation
    /// matches variable sockets to check sockets, then double edges are
    /// removed by swapping sockets. The coset vector is drawn uniformly.
    /// Reproducible for a fixed seed.
    pub fn build_regular(n: usize, dv: usize, dc: usize, seed: u64) -> Result<Self> {
        if n == 0 || dv == 0 || dc == 0 {
            return Err(CoreError::invalid("n, dv, dc must be positive"));
        }
        if (n * dv) % dc != 0 {
            return Err(CoreError::invalid(format!(
                "n*dv = {} not divisible by dc = {dc}",
                n * dv
            )));
        }
        let num_edges = n * dv;
        let num_checks = num_edges / dc;
        if dc > n {
            return Err(CoreError::invalid(format!("dc = {dc} exceeds n = {n}")));
        }

        let mut rng = rng_from_seed(derive_seed(seed, &[0xC0DE]));
        // edge e (variable socket e, owned by variable e/dv) attaches to
        // check socket perm[e] (owned by check perm[e]/dc).
        let mut perm: Vec<usize> = (0..num_edges).collect();
        perm.shuffle(&mut rng);

        // Remove parallel edges by socket swaps.
        let edge_of = |perm: &[usize], e: usize| (e / dv, perm[e] / dc);
        let mut rounds = 0;
        loop {
            let mut seen = std::collections::HashSet::with_capacity(num_edges);
            let mut dups = Vec::new();
            for e in 0..num_edges {
                if !seen.insert(edge_of(&perm, e)) {
                    dups.push(e);
                }
            }
            if dups.is_empty() {
                break;
            }
            rounds += 1;
            if rounds > 1000 {
                return Err(CoreError::invalid(
                    "could not remove double edges; parameters too dense",
                ));
            }
            for &e in &dups {
                let other = rng.gen_range(0..num_edges);
                perm.swap(e, other);
            }
        }

        let edge_chk: Vec<usize> = (0..num_edges).map(|e| perm[e] / dc).collect();
        let mut chk_edges = vec![0usize; num_edges];
        let mut cursor = vec![0usize; num_checks];
        for (e, &c) in edge_chk.iter().enumerate() {
            chk_edges[c * dc + cursor[c]] = e;
            cursor[c] += 1;
        }
        debug_assert!(cursor.iter().all(|&k| k == dc));

        let coset: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();

        Ok(LdpcCode {
            n,
            dv,
            dc,
            num_checks,
            edge_chk,
            chk_edges,
            coset,
        })
    }

    /// Builds a code from per-variable check attachments (edges grouped by
    /// variable, `edge_chk[v*dv + k]` = check of the k-th edge of variable v).
    /// Used by the alist reader.
    pub fn from_edge_list(n: usize, dv: usize, dc: usize, edge_chk: Vec<usize>) -> Result<Self> {
        if n == 0 || dv == 0 || dc == 0 {
            return Err(CoreError::invalid("n, dv, dc must be positive"));
        }
        if edge_chk.len() != n * dv || (n * dv) % dc != 0 {
            return Err(CoreError::mismatch("edge list inconsistent with (n, dv, dc)"));
        }
        let num_checks = n * dv / dc;
        let mut chk_edges = vec![0usize; n * dv];
        let mut cursor = vec![0usize; num_checks];
        for (e, &c) in edge_chk.iter().enumerate() {
            if c >= num_checks {
                return Err(CoreError::invalid(format!("check index {c} out of range")));
            }
            if cursor[c] >= dc {
                return Err(CoreError::invalid(format!("check {c} exceeds degree {dc}")));
            }
            chk_edges[c * dc + cursor[c]] = e;
            cursor[c] += 1;
        }
        if cursor.iter().any(|&k| k != dc) {
            return Err(CoreError::invalid("not all checks reached degree dc"));
        }
        Ok(LdpcCode {
            n,
            dv,
            dc,
            num_checks,
            edge_chk,
            chk_edges,
            coset: vec![0; n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dv(&self) -> usize {
        self.dv
    }

    pub fn dc(&self) -> usize {
        self.dc
    }

    pub fn num_checks(&self) -> usize {
        self.num_checks
    }

    pub fn num_edges(&self) -> usize {
        self.n * self.dv
    }

    /// Design rate `1 - dv/dc`.
    pub fn rate(&self) -> f64 {
        1.0 - self.dv as f64 / self.dc as f64
    }

    pub fn coset(&self) -> &[u8] {
        &self.coset
    }

    /// Replaces the coset vector (used by tests and by alist loading).
    pub fn with_coset(mut self, coset: Vec<u8>) -> Result<Self> {
        if coset.len() != self.n {
            return Err(CoreError::mismatch("coset length != n"));
        }
        if coset.iter().any(|&b| b > 1) {
            return Err(CoreError::invalid("coset entries must be bits"));
        }
        self.coset = coset;
        Ok(self)
    }

    /// Check index on the other end of edge `e`.
    #[inline]
    pub fn check_of_edge(&self, e: usize) -> usize {
        self.edge_chk[e]
    }

    /// Variable index on the other end of edge `e`.
    #[inline]
    pub fn var_of_edge(&self, e: usize) -> usize {
        e / self.dv
    }

    /// Edge ids incident to check `c`.
    #[inline]
    pub fn edges_of_check(&self, c: usize) -> &[usize] {
        &self.chk_edges[c * self.dc..(c + 1) * self.dc]
    }

    /// The simulation transmit word: the all-zero codeword XOR the coset,
    /// mapped to antipodal symbols (bit b -> 1 - 2b). With a uniform coset
    /// the transmitted symbols are i.i.d. equiprobable.
    pub fn encode_coset(&self) -> Vec<i8> {
        self.coset.iter().map(|&b| 1 - 2 * (b as i8)).collect()
    }

    /// Runs `num_iters` flooding sum-product iterations with the exact
    /// tanh-product check rule. Returns extrinsic LLRs (posterior minus
    /// prior per variable), posterior LLRs, and whether the hard decision
    /// satisfies every check. Pass `None` for fresh message state.
    pub fn decode_iterations(
        &self,
        prior_llr: &[f64],
        num_iters: usize,
        state: Option<DecoderState>,
    ) -> Result<(DecodeOutput, DecoderState)> {
        if prior_llr.len() != self.n {
            return Err(CoreError::mismatch(format!(
                "prior length {} != n {}",
                prior_llr.len(),
                self.n
            )));
        }
        if prior_llr.iter().any(|l| !l.is_finite()) {
            return Err(CoreError::invalid("prior LLRs must be finite"));
        }
        if num_iters == 0 {
            return Err(CoreError::invalid("num_iters must be >= 1"));
        }

        // Enter the zero-coset domain.
        let adj: Vec<f64> = prior_llr
            .iter()
            .zip(&self.coset)
            .map(|(&l, &b)| if b == 1 { -l } else { l })
            .collect();

        let num_edges = self.num_edges();
        let mut state = match state {
            Some(s) => {
                if s.c2v.len() != num_edges {
                    return Err(CoreError::mismatch("decoder state edge count mismatch"));
                }
                s
            }
            None => DecoderState {
                v2c: vec![0.0; num_edges],
                c2v: vec![0.0; num_edges],
                iteration: 0,
                posterior: vec![0.0; self.n],
            },
        };

        let mut tanh_buf = vec![0.0f64; self.dc];
        let mut prefix = vec![0.0f64; self.dc + 1];
        let mut suffix = vec![0.0f64; self.dc + 1];

        for _ in 0..num_iters {
            // Variable update (flooding: every edge from the same frozen c2v).
            for v in 0..self.n {
                let base = v * self.dv;
                let sum: f64 = state.c2v[base..base + self.dv].iter().sum();
                for k in 0..self.dv {
                    state.v2c[base + k] = clip_llr(adj[v] + sum - state.c2v[base + k]);
                }
            }
            // Check update, exact tanh-product rule with exclusion via
            // prefix/suffix products.
            for c in 0..self.num_checks {
                let edges = &self.chk_edges[c * self.dc..(c + 1) * self.dc];
                for (k, &e) in edges.iter().enumerate() {
                    tanh_buf[k] = (state.v2c[e] / 2.0).tanh();
                }
                prefix[0] = 1.0;
                for k in 0..self.dc {
                    prefix[k + 1] = prefix[k] * tanh_buf[k];
                }
                suffix[self.dc] = 1.0;
                for k in (0..self.dc).rev() {
                    suffix[k] = suffix[k + 1] * tanh_buf[k];
                }
                for (k, &e) in edges.iter().enumerate() {
                    let prod = prefix[k] * suffix[k + 1];
                    state.c2v[e] = clip_llr(2.0 * prod.atanh());
                }
            }
            state.iteration += 1;
        }

        // Posterior and extrinsic in the zero-coset domain.
        let mut extrinsic = vec![0.0; self.n];
        for v in 0..self.n {
            let base = v * self.dv;
            let ext: f64 = state.c2v[base..base + self.dv].iter().sum();
            extrinsic[v] = clip_llr(ext);
            state.posterior[v] = clip_llr(adj[v] + ext);
        }

        // Hard-decision syndrome (zero-coset domain: even parity per check).
        let hard: Vec<u8> = state.posterior.iter().map(|&l| u8::from(l < 0.0)).collect();
        let syndrome_ok = (0..self.num_checks).all(|c| {
            self.edges_of_check(c)
                .iter()
                .fold(0u8, |p, &e| p ^ hard[self.var_of_edge(e)])
                == 0
        });

        // Leave the zero-coset domain.
        let mut posterior = state.posterior.clone();
        for v in 0..self.n {
            if self.coset[v] == 1 {
                extrinsic[v] = -extrinsic[v];
                posterior[v] = -posterior[v];
            }
        }

        Ok((
            DecodeOutput {
                extrinsic,
                posterior,
                syndrome_ok,
            },
            state,
        ))
    }
}

/// Per-edge message state of the sum-product decoder. Confined to one
/// decode call at a time; distinct decodes may run concurrently.
#[derive(Debug, Clone)]
pub struct DecoderState {
    pub v2c: Vec<f64>,
    pub c2v: Vec<f64>,
    pub iteration: usize,
    posterior: Vec<f64>,
}

/// Soft outputs of one decode call (coset-domain LLRs).
#[derive(Debug, Clone)]
pub struct DecodeOutput {
    pub extrinsic: Vec<f64>,
    pub posterior: Vec<f64>,
    pub syndrome_ok: bool,
}

/// One Monte Carlo BER measurement.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub trials: u64,
}

/// Reference curve: BPSK over plain AWGN (identity PSF), channel LLR
/// `2 r / sigma^2`, decoded with the same sum-product decoder. `snr_db`
/// follows the rate-adjusted convention (energy per information bit).
pub fn ldpc_awgn_reference(
    code: &LdpcCode,
    snr_db: f64,
    trials: u64,
    iters: usize,
    seed: u64,
) -> Result<BerPoint> {
    let psf = PsfKernel::make_psf(0.0)?;
    let sigma = snr_to_sigma(snr_db, &psf, Some(code.rate()))?;
    let sigma2 = sigma * sigma;
    let mut bit_errors = 0u64;
    for t in 0..trials {
        let trial_seed = derive_seed(seed, &[t]);
        let tx = code.encode_coset();
        // Identity PSF: received sample k equals symbol k plus noise; reuse
        // the channel machinery so the noise path is shared.
        let page = SymbolPage::from_symbols(1, code.n(), tx.clone())?;
        let clean = convolve2d(&page, &psf);
        let noise = crate::grid::NoiseSpec {
            sigma_w: sigma,
            snr_db,
            rate_adjusted: true,
        };
        let received = crate::grid::add_awgn(&clean, &noise, derive_seed(trial_seed, &[1]))?;
        // Identity PSF centers the symbol response at offset (1,1).
        let prior: Vec<f64> = (0..code.n())
            .map(|k| clip_llr(2.0 * received.get(1, k + 1) / sigma2))
            .collect();
        let (out, _) = code.decode_iterations(&prior, iters, None)?;
        bit_errors += out
            .posterior
            .iter()
            .zip(&tx)
            .filter(|(&l, &x)| (l < 0.0) != (x < 0))
            .count() as u64;
    }
    let bits = trials * code.n() as u64;
    Ok(BerPoint {
        snr_db,
        bit_errors,
        bits,
        ber: bit_errors as f64 / bits as f64,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_code_degree_accounting() {
        let code = LdpcCode::build_regular(6, 1, 3, 5).unwrap();
        assert_eq!(code.num_checks(), 2);
        assert_eq!(code.num_edges(), 6);
        // Each variable in exactly one check.
        let mut counts = vec![0; 2];
        for e in 0..6 {
            counts[code.check_of_edge(e)] += 1;
        }
        assert_eq!(counts, vec![3, 3]);
    }

    #[test]
    fn large_code_shape_and_determinism() {
        let a = LdpcCode::build_regular(10000, 3, 6, 7).unwrap();
        assert_eq!(a.num_checks(), 5000);
        assert_eq!(a.num_edges(), 30000);
        let b = LdpcCode::build_regular(10000, 3, 6, 7).unwrap();
        assert_eq!(a, b);
        let c = LdpcCode::build_regular(10000, 3, 6, 8).unwrap();
        assert_ne!(a, c);
        // No parallel edges.
        let mut seen = std::collections::HashSet::new();
        for e in 0..a.num_edges() {
            assert!(seen.insert((a.var_of_edge(e), a.check_of_edge(e))));
        }
    }

    #[test]
    fn incompatible_parameters_rejected() {
        assert!(LdpcCode::build_regular(10, 3, 4, 1).is_err());
        assert!(LdpcCode::build_regular(0, 3, 6, 1).is_err());
        assert!(LdpcCode::build_regular(4, 3, 6, 1).is_err());
    }

    #[test]
    fn encode_coset_maps_bits_to_symbols() {
        let code = LdpcCode::build_regular(12, 2, 4, 3)
            .unwrap()
            .with_coset(vec![0; 12])
            .unwrap();
        assert!(code.encode_coset().iter().all(|&s| s == 1));
        let code = code.with_coset(vec![1; 12]).unwrap();
        assert!(code.encode_coset().iter().all(|&s| s == -1));
    }

    #[test]
    fn uniform_coset_gives_balanced_symbols() {
        let code = LdpcCode::build_regular(100_000, 3, 6, 9).unwrap();
        let mean: f64 = code.encode_coset().iter().map(|&s| f64::from(s)).sum::<f64>()
            / code.n() as f64;
        assert!(mean.abs() < 0.02, "symbol mean {mean}");
    }

    #[test]
    fn noiseless_priors_decode_in_one_iteration() {
        let code = LdpcCode::build_regular(120, 3, 6, 11).unwrap();
        let tx = code.encode_coset();
        let prior: Vec<f64> = tx.iter().map(|&x| 40.0 * f64::from(x)).collect();
        let (out, _) = code.decode_iterations(&prior, 1, None).unwrap();
        assert!(out.syndrome_ok);
        for (e, &x) in out.extrinsic.iter().zip(&tx) {
            assert!(e * f64::from(x) > 0.0, "extrinsic sign wrong");
        }
    }

    #[test]
    fn zero_priors_are_a_fixed_point() {
        let code = LdpcCode::build_regular(60, 3, 6, 13).unwrap();
        let prior = vec![0.0; 60];
        for iters in [1, 5, 20] {
            let (out, _) = code.decode_iterations(&prior, iters, None).unwrap();
            assert!(out.extrinsic.iter().all(|&e| e == 0.0));
        }
    }

    #[test]
    fn message_symmetry_under_prior_negation() {
        let code = LdpcCode::build_regular(60, 3, 6, 17)
            .unwrap()
            .with_coset(vec![0; 60])
            .unwrap();
        let mut rng = rng_from_seed(21);
        let prior: Vec<f64> = (0..60).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let neg: Vec<f64> = prior.iter().map(|l| -l).collect();
        let (a, _) = code.decode_iterations(&prior, 8, None).unwrap();
        let (b, _) = code.decode_iterations(&neg, 8, None).unwrap();
        for (x, y) in a.extrinsic.iter().zip(&b.extrinsic) {
            // libm tanh/atanh are not guaranteed exactly odd, so allow a
            // few ulps.
            assert!((x + y).abs() < 1e-12 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn coset_transparency() {
        let base = LdpcCode::build_regular(60, 3, 6, 19).unwrap();
        let zero = base.clone().with_coset(vec![0; 60]).unwrap();
        let mut rng = rng_from_seed(23);
        let coset: Vec<u8> = (0..60).map(|_| rng.gen_range(0..2u8)).collect();
        let shifted = base.with_coset(coset.clone()).unwrap();
        let prior: Vec<f64> = (0..60).map(|_| rng.gen_range(-5.0..5.0)).collect();
        // Decode with coset c and priors L...
        let (a, _) = shifted.decode_iterations(&prior, 6, None).unwrap();
        // ...equals zero-coset decoding of sign-adjusted priors, re-adjusted.
        let adj: Vec<f64> = prior
            .iter()
            .zip(&coset)
            .map(|(&l, &b)| if b == 1 { -l } else { l })
            .collect();
        let (z, _) = zero.decode_iterations(&adj, 6, None).unwrap();
        for v in 0..60 {
            let want = if coset[v] == 1 { -z.extrinsic[v] } else { z.extrinsic[v] };
            assert_eq!(a.extrinsic[v], want);
            let want_p = if coset[v] == 1 { -z.posterior[v] } else { z.posterior[v] };
            assert_eq!(a.posterior[v], want_p);
        }
        assert_eq!(a.syndrome_ok, z.syndrome_ok);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let code = LdpcCode::build_regular(12, 2, 4, 3).unwrap();
        assert!(code.decode_iterations(&vec![0.0; 11], 1, None).is_err());
        assert!(code.decode_iterations(&vec![0.0; 12], 0, None).is_err());
        assert!(code
            .decode_iterations(&vec![f64::INFINITY; 12], 1, None)
            .is_err());
    }

    #[test]
    fn awgn_reference_extremes() {
        let code = LdpcCode::build_regular(1000, 3, 6, 31).unwrap();
        let hi = ldpc_awgn_reference(&code, 8.0, 20, 20, 1).unwrap();
        assert_eq!(hi.bit_errors, 0);
        let lo = ldpc_awgn_reference(&code, -30.0, 20, 5, 1).unwrap();
        assert!((lo.ber - 0.5).abs() < 0.05, "ber {}", lo.ber);
    }
}
