//! Turbo receiver: iterative exchange of extrinsic LLRs between the page
//! equalizer and the LDPC decoder, plus the Monte Carlo BER sweep driver.
//!
//! One outer iteration equalizes the whole page with the decoder's frozen
//! extrinsic output as priors, then runs a fixed number of sum-product
//! iterations from fresh message state. The loop stops early once the hard
//! decisions satisfy every check.

use rayon::prelude::*;

use crate::analysis::blind_mi_calibrated;
use crate::equalizer::{equalize_page, hybrid_select, EqualizerWindow, Scheme};
use crate::error::CoreError;
use crate::grid::{add_awgn, convolve2d, NoiseSpec, PsfKernel, ReceivedPage, SymbolPage};
use crate::ldpc::LdpcCode;
use crate::llr::LlrGrid;
use crate::seed::derive_seed;
use crate::Result;

/// Receiver scheme: the three fixed equalizers plus the hybrid that switches
/// between the two approximations as the decoder output improves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverScheme {
    Exact,
    Approx1,
    Approx2,
    Hybrid,
}

impl ReceiverScheme {
    /// The fixed equalizer scheme, if this is not the hybrid.
    pub fn fixed(self) -> Option<Scheme> {
        match self {
            ReceiverScheme::Exact => Some(Scheme::Exact),
            ReceiverScheme::Approx1 => Some(Scheme::Approx1),
            ReceiverScheme::Approx2 => Some(Scheme::Approx2),
            ReceiverScheme::Hybrid => None,
        }
    }
}

/// Knobs of the iterative receiver.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ReceiverConfig {
    pub scheme: ReceiverScheme,
    /// Equalizer window half-width N.
    pub n_half: usize,
    /// Maximum equalizer/decoder alternations.
    pub outer_iters: usize,
    /// Sum-product iterations per decoder activation.
    pub inner_iters: usize,
    /// Hybrid fallback: switch from approximation I to II once the measured
    /// decoder information reaches this value (used when no EXIT tables are
    /// supplied).
    pub crossover: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            scheme: ReceiverScheme::Exact,
            n_half: 2,
            outer_iters: 10,
            inner_iters: 20,
            crossover: 0.5,
        }
    }
}

/// Cached EXIT tables used by the hybrid to pick the better approximation
/// at the current decoder information. `(i_i, i_o)` pairs sorted by `i_i`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct HybridTables {
    pub approx1: Vec<(f64, f64)>,
    pub approx2: Vec<(f64, f64)>,
}

/// Outcome of one codeword transmission through the iterative receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub bit_errors: u64,
    /// Outer iterations actually executed.
    pub iterations_used: usize,
    /// Whether the syndrome check passed (early stop).
    pub converged: bool,
    /// Blind information estimate of the decoder extrinsics per outer
    /// iteration.
    pub mi_trace: Vec<f64>,
    /// Scheme the equalizer ran with per outer iteration.
    pub schemes: Vec<Scheme>,
}

/// Page dimensions for a codeword of length `n`: the factor pair closest to
/// square, `height <= width`.
pub fn map_codeword_to_page(n: usize) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(CoreError::invalid("codeword length must be positive"));
    }
    let mut height = 1;
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            height = d;
        }
        d += 1;
    }
    let width = n / height;
    if height == 1 && n > 64 {
        return Err(CoreError::invalid(format!(
            "codeword length {n} has no two-dimensional factorization"
        )));
    }
    Ok((height, width))
}

/// Transmits one codeword over the channel: row-major page mapping,
/// convolution with the kernel, additive noise.
pub fn transmit(
    code: &LdpcCode,
    psf: &PsfKernel,
    sigma_w: f64,
    seed: u64,
) -> Result<(Vec<i8>, ReceivedPage)> {
    let tx = code.encode_coset();
    let (height, width) = map_codeword_to_page(code.n())?;
    let page = SymbolPage::from_symbols(height, width, tx.clone())?;
    let clean = convolve2d(&page, psf);
    let noise = NoiseSpec {
        sigma_w,
        snr_db: 0.0,
        rate_adjusted: false,
    };
    let received = add_awgn(&clean, &noise, seed)?;
    Ok((tx, received))
}

/// Runs the full iterative receiver on one transmitted codeword.
pub fn run_trial(
    code: &LdpcCode,
    psf: &PsfKernel,
    config: &ReceiverConfig,
    sigma_w: f64,
    tables: Option<&HybridTables>,
    seed: u64,
) -> Result<TrialResult> {
    if config.outer_iters == 0 {
        return Err(CoreError::invalid("outer_iters must be >= 1"));
    }
    let (height, width) = map_codeword_to_page(code.n())?;
    let window = EqualizerWindow::build(psf, config.n_half);
    let (tx, received) = transmit(code, psf, sigma_w, derive_seed(seed, &[0]))?;

    let mut decoder_ext = vec![0.0f64; code.n()];
    let mut mi_trace = Vec::with_capacity(config.outer_iters);
    let mut schemes = Vec::with_capacity(config.outer_iters);
    let mut converged = false;
    let mut iterations_used = 0;
    let mut posterior = vec![0.0f64; code.n()];

    for _ in 0..config.outer_iters {
        iterations_used += 1;
        let scheme = match config.scheme.fixed() {
            Some(s) => s,
            None => {
                let i_i = blind_mi_calibrated(&decoder_ext);
                let t = tables.map(|t| (t.approx1.as_slice(), t.approx2.as_slice()));
                hybrid_select(i_i, t, config.crossover)
            }
        };
        schemes.push(scheme);
        let prior = LlrGrid::from_values(height, width, decoder_ext.clone())?;
        let eq_out = equalize_page(&received, &prior, scheme, &window, sigma_w)?;
        // Fresh message state every activation: the decoder restarts from
        // the new equalizer output rather than resuming stale messages.
        let (out, _) = code.decode_iterations(eq_out.values(), config.inner_iters, None)?;
        mi_trace.push(blind_mi_calibrated(&out.extrinsic));
        decoder_ext = out.extrinsic;
        posterior = out.posterior;
        if out.syndrome_ok {
            converged = true;
            break;
        }
    }

    let bit_errors = posterior
        .iter()
        .zip(&tx)
        .filter(|(&l, &x)| (l < 0.0) != (x < 0))
        .count() as u64;

    Ok(TrialResult {
        bit_errors,
        iterations_used,
        converged,
        mi_trace,
        schemes,
    })
}

/// One point of a BER sweep, with a Wilson 95% interval on the bit error
/// probability.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub sigma_w: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub ber_lo: f64,
    pub ber_hi: f64,
    pub avg_iters: f64,
    pub frame_errors: u64,
}

/// Wilson score interval for `k` successes out of `n` at z = 1.96.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96f64;
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Measures the BER of the iterative receiver at one rate-adjusted SNR.
/// Trials run in deterministic chunks (seeded by trial index, independent of
/// worker count); the sweep stops once `min_errors` bit errors have
/// accumulated or `max_trials` is reached.
pub fn ber_point(
    code: &LdpcCode,
    psf: &PsfKernel,
    config: &ReceiverConfig,
    snr_db: f64,
    max_trials: u64,
    min_errors: u64,
    tables: Option<&HybridTables>,
    seed: u64,
) -> Result<SweepPoint> {
    let sigma_w = crate::grid::snr_to_sigma(snr_db, psf, Some(code.rate()))?;
    const CHUNK: u64 = 32;
    let mut trials = 0u64;
    let mut bit_errors = 0u64;
    let mut frame_errors = 0u64;
    let mut iters_sum = 0u64;
    while trials < max_trials {
        let batch = CHUNK.min(max_trials - trials);
        let results: Vec<TrialResult> = (trials..trials + batch)
            .into_par_iter()
            .map(|t| run_trial(code, psf, config, sigma_w, tables, derive_seed(seed, &[t])))
            .collect::<Result<Vec<_>>>()?;
        for r in &results {
            bit_errors += r.bit_errors;
            frame_errors += u64::from(r.bit_errors > 0);
            iters_sum += r.iterations_used as u64;
        }
        trials += batch;
        if bit_errors >= min_errors {
            break;
        }
    }
    let bits = trials * code.n() as u64;
    let (ber_lo, ber_hi) = wilson_interval(bit_errors, bits);
    Ok(SweepPoint {
        snr_db,
        sigma_w,
        trials,
        bit_errors,
        bits,
        ber: bit_errors as f64 / bits as f64,
        ber_lo,
        ber_hi,
        avg_iters: iters_sum as f64 / trials as f64,
        frame_errors,
    })
}

/// Runs [`ber_point`] across an SNR grid.
#[allow(clippy::too_many_arguments)]
pub fn ber_sweep(
    code: &LdpcCode,
    psf: &PsfKernel,
    config: &ReceiverConfig,
    snrs_db: &[f64],
    max_trials: u64,
    min_errors: u64,
    tables: Option<&HybridTables>,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    snrs_db
        .iter()
        .enumerate()
        .map(|(k, &snr)| {
            ber_point(
                code,
                psf,
                config,
                snr,
                max_trials,
                min_errors,
                tables,
                derive_seed(seed, &[0xBE5, k as u64]),
            )
        })
        .collect()
}
