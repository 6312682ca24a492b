//! Gaussian-approximation density evolution of the iterative receiver and
//! bisection for its convergence threshold.
//!
//! LLR densities are tracked by the conditional mean of a consistent
//! Gaussian. The decoder stage is closed-form through the check-node
//! transform; the equalizer stage is measured by Monte Carlo on synthetic
//! pages. Thresholds use common random numbers: the stage seeds depend only
//! on the alternation and repeat indices, never on the probed SNR, so the
//! convergent/divergent decision flips cleanly at one point.

use crate::analysis::info::{j_inverse, phi, phi_inverse, synth_prior_llrs_mean, MiEstimator};
use crate::equalizer::{equalize_page, EqualizerWindow, Scheme};
use crate::error::CoreError;
use crate::grid::{add_awgn, convolve2d, snr_to_sigma, NoiseSpec, PsfKernel, SymbolPage};
use crate::seed::derive_seed;
use crate::turbo::ReceiverScheme;
use crate::Result;

/// Density-evolution controls.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DeOptions {
    /// Side of the synthetic page per equalizer-stage repeat.
    pub page_side: usize,
    /// Equalizer-stage Monte Carlo repeats averaged per alternation.
    pub repeats: usize,
    /// Equalizer window half-width N.
    pub n_half: usize,
    /// Variable and check degrees of the code ensemble.
    pub dv: usize,
    pub dc: usize,
    /// Decoder iterations per alternation.
    pub inner_iters: usize,
    /// Maximum equalizer/decoder alternations per convergence probe.
    pub max_alternations: usize,
    /// Decoder output mean declaring convergence.
    pub divergence_cap: f64,
    /// Alternations without progress before declaring divergence.
    pub stall_window: usize,
    /// Minimum decoder-mean improvement counted as progress.
    pub stall_tol: f64,
    /// Bisection stops when the bracket is this narrow (dB).
    pub tol_db: f64,
    /// Initial SNR bracket (dB, rate-adjusted); widened if needed.
    pub bracket: (f64, f64),
}

impl Default for DeOptions {
    fn default() -> Self {
        DeOptions {
            page_side: 300,
            repeats: 3,
            n_half: 2,
            dv: 3,
            dc: 6,
            inner_iters: 20,
            max_alternations: 200,
            divergence_cap: 100.0,
            stall_window: 10,
            stall_tol: 1e-3,
            tol_db: 0.04,
            bracket: (0.0, 10.0),
        }
    }
}

/// Decoder density-evolution stage: channel mean in, extrinsic mean out
/// after `inner_iters` flooding iterations of the regular (dv, dc)
/// ensemble from reset messages. The output excludes the channel term.
pub fn de_ldpc_stage(m_ch: f64, dv: usize, dc: usize, inner_iters: usize) -> f64 {
    de_ldpc_stage_resumed(m_ch, dv, dc, inner_iters, 0.0).0
}

/// Like [`de_ldpc_stage`], but resuming from the check-message mean of a
/// previous activation and returning the new one alongside the extrinsic
/// output. Carrying the message state across activations models a decoder
/// that keeps working between equalizer refreshes; without it, the
/// alternation schedule caps the decoder at `inner_iters` total iterations
/// whenever the equalizer gains little from priors (small spreads), which
/// inflates the threshold toward the finite-iteration one.
pub fn de_ldpc_stage_resumed(
    m_ch: f64,
    dv: usize,
    dc: usize,
    inner_iters: usize,
    m_c0: f64,
) -> (f64, f64) {
    assert!(m_ch >= 0.0 && m_c0 >= 0.0, "means must be nonnegative");
    assert!(dv >= 2 && dc >= 2, "degrees must be at least 2");
    let mut m_c = m_c0;
    for _ in 0..inner_iters {
        let m_v = m_ch + (dv - 1) as f64 * m_c;
        let p = phi(m_v);
        let y = (1.0 - (1.0 - p).powi(dc as i32 - 1)).max(1e-300);
        m_c = phi_inverse(y.min(1.0));
    }
    (dv as f64 * m_c, m_c)
}

/// Equalizer density-evolution stage: draw a random page, transmit it,
/// synthesize consistent-Gaussian priors of mean `m_in`, equalize, measure
/// the extrinsic mutual information by histogram (pooled over repeats), and
/// return the equivalent consistent-Gaussian mean `j_inverse(I)^2 / 2`.
///
/// Measuring information rather than the raw mean `E[x L]` matters for the
/// approximate schemes: their fixed filter gains mis-scale the LLRs, which
/// inflates or deflates the raw mean without changing the information
/// actually carried, and the raw-mean recursion then evolves garbage.
pub fn de_equalizer_stage(
    m_in: f64,
    scheme: Scheme,
    psf: &PsfKernel,
    sigma_w: f64,
    options: &DeOptions,
    seed: u64,
) -> Result<f64> {
    if options.page_side == 0 || options.repeats == 0 {
        return Err(CoreError::invalid("page_side and repeats must be positive"));
    }
    let window = EqualizerWindow::build(psf, options.n_half);
    let side = options.page_side;
    let mut est = MiEstimator::new();
    for r in 0..options.repeats {
        let s = derive_seed(seed, &[r as u64]);
        let page = SymbolPage::random(side, side, derive_seed(s, &[0]));
        let clean = convolve2d(&page, psf);
        let noise = NoiseSpec {
            sigma_w,
            snr_db: 0.0,
            rate_adjusted: false,
        };
        let received = add_awgn(&clean, &noise, derive_seed(s, &[1]))?;
        let prior_vals = synth_prior_llrs_mean(m_in, page.symbols(), derive_seed(s, &[2]))?;
        let prior = crate::llr::LlrGrid::from_values(side, side, prior_vals)?;
        let out = equalize_page(&received, &prior, scheme, &window, sigma_w)?;
        for (&l, &x) in out.values().iter().zip(page.symbols()) {
            est.push(l, x);
        }
    }
    // j_inverse is undefined at exactly 1; the ceiling corresponds to a
    // conditional mean of ~37, far past any decoder pinch point.
    let i = est.value().min(0.9999);
    let sigma_llr = j_inverse(i)?;
    Ok(0.5 * sigma_llr * sigma_llr)
}

fn stage_for_scheme(
    m_in: f64,
    scheme: ReceiverScheme,
    psf: &PsfKernel,
    sigma_w: f64,
    options: &DeOptions,
    seed: u64,
) -> Result<f64> {
    match scheme.fixed() {
        Some(s) => de_equalizer_stage(m_in, s, psf, sigma_w, options, seed),
        None => {
            // The hybrid runs whichever approximation transfers better at
            // the current density; its evolution is the pointwise maximum.
            let a1 = de_equalizer_stage(m_in, Scheme::Approx1, psf, sigma_w, options, seed)?;
            let a2 = de_equalizer_stage(m_in, Scheme::Approx2, psf, sigma_w, options, seed)?;
            Ok(a1.max(a2))
        }
    }
}

/// Whether density evolution converges at the given rate-adjusted SNR:
/// alternate the two stages from zero priors until the decoder mean passes
/// the cap (convergent) or stops improving (divergent).
pub fn converges(
    scheme: ReceiverScheme,
    psf: &PsfKernel,
    snr_db: f64,
    options: &DeOptions,
    seed: u64,
) -> Result<bool> {
    let rate = 1.0 - options.dv as f64 / options.dc as f64;
    let sigma_w = snr_to_sigma(snr_db, psf, Some(rate))?;
    let mut m = 0.0f64;
    let mut m_c = 0.0f64;
    let mut best = 0.0f64;
    let mut stalled = 0usize;
    for alt in 0..options.max_alternations {
        let seed_alt = derive_seed(seed, &[alt as u64]);
        let m_eq = stage_for_scheme(m, scheme, psf, sigma_w, options, seed_alt)?;
        let (m_dec, m_c_next) =
            de_ldpc_stage_resumed(m_eq, options.dv, options.dc, options.inner_iters, m_c);
        m_c = m_c_next;
        if m_dec > options.divergence_cap {
            return Ok(true);
        }
        if m_dec > best + options.stall_tol {
            best = m_dec;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= options.stall_window {
                return Ok(false);
            }
        }
        m = m_dec;
    }
    Ok(false)
}

/// Outcome of a threshold search.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ThresholdResult {
    /// Lowest rate-adjusted SNR (dB) found convergent.
    pub threshold_snr_db: f64,
    /// Half of this below the reported value is still possible.
    pub tolerance_db: f64,
    /// Every probed `(snr_db, convergent)` pair in probe order.
    pub trace: Vec<(f64, bool)>,
}

/// Bisects the convergence threshold of the given receiver over the kernel.
pub fn find_threshold(
    scheme: ReceiverScheme,
    psf: &PsfKernel,
    options: &DeOptions,
    seed: u64,
) -> Result<ThresholdResult> {
    if options.tol_db <= 0.0 {
        return Err(CoreError::invalid("tol_db must be positive"));
    }
    let mut trace = Vec::new();
    let probe = |snr: f64, trace: &mut Vec<(f64, bool)>| -> Result<bool> {
        let ok = converges(scheme, psf, snr, options, seed)?;
        trace.push((snr, ok));
        Ok(ok)
    };

    let (mut lo, mut hi) = options.bracket;
    if lo >= hi {
        return Err(CoreError::invalid("bracket must satisfy lo < hi"));
    }
    let mut widen = 0;
    while probe(lo, &mut trace)? {
        lo -= 2.0;
        widen += 1;
        if widen > 8 {
            return Err(CoreError::invalid("no divergent lower bracket found"));
        }
    }
    widen = 0;
    while !probe(hi, &mut trace)? {
        hi += 2.0;
        widen += 1;
        if widen > 8 {
            return Err(CoreError::invalid("no convergent upper bracket found"));
        }
    }
    while hi - lo > options.tol_db {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut trace)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        threshold_snr_db: hi,
        tolerance_db: options.tol_db,
        trace,
    })
}
