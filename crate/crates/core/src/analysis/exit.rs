//! EXIT curve measurement: feed a component synthetic consistent-Gaussian
//! priors at a prescribed input information and measure the information of
//! its extrinsic output against the true symbols.

use crate::analysis::info::{synth_prior_llrs, synth_priors, MiEstimator};
use crate::equalizer::{equalize_page, EqualizerWindow, Scheme};
use crate::error::CoreError;
use crate::grid::{add_awgn, convolve2d, NoiseSpec, PsfKernel, SymbolPage};
use crate::ldpc::LdpcCode;
use crate::seed::derive_seed;
use crate::Result;

/// Which transfer characteristic a curve describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentTag {
    EqualizerExact,
    EqualizerApprox1,
    EqualizerApprox2,
    LdpcDecoder,
}

impl ComponentTag {
    pub fn for_scheme(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Exact => ComponentTag::EqualizerExact,
            Scheme::Approx1 => ComponentTag::EqualizerApprox1,
            Scheme::Approx2 => ComponentTag::EqualizerApprox2,
        }
    }
}

/// One measured transfer point with a standard error across repeats.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ExitPoint {
    pub i_i: f64,
    pub i_o: f64,
    pub i_o_stderr: f64,
}

/// A measured EXIT curve.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExitCurve {
    pub tag: ComponentTag,
    pub points: Vec<ExitPoint>,
}

impl ExitCurve {
    /// `(i_i, i_o)` pairs for interpolation.
    pub fn table(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.i_i, p.i_o)).collect()
    }
}

/// Sample sizes for equalizer curve measurement.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ExitTraceOptions {
    /// Side of the random square page per repeat.
    pub page_side: usize,
    /// Independent repeats (pages, noise, priors) pooled per point.
    pub repeats: usize,
    /// Equalizer window half-width N.
    pub n_half: usize,
}

impl Default for ExitTraceOptions {
    fn default() -> Self {
        ExitTraceOptions {
            page_side: 300,
            repeats: 4,
            n_half: 2,
        }
    }
}

fn summarize(per_repeat: &[f64], pooled: &MiEstimator) -> (f64, f64) {
    let i_o = pooled.value();
    let r = per_repeat.len();
    if r < 2 {
        return (i_o, 0.0);
    }
    let mean: f64 = per_repeat.iter().sum::<f64>() / r as f64;
    let var: f64 =
        per_repeat.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r as f64 - 1.0);
    (i_o, (var / r as f64).sqrt())
}

/// Measures the equalizer transfer `I_o(I_i)` at a fixed noise level for
/// each input information in `i_grid`.
pub fn trace_exit_equalizer(
    scheme: Scheme,
    psf: &PsfKernel,
    sigma_w: f64,
    i_grid: &[f64],
    options: &ExitTraceOptions,
    seed: u64,
) -> Result<ExitCurve> {
    if options.page_side == 0 || options.repeats == 0 {
        return Err(CoreError::invalid("page_side and repeats must be positive"));
    }
    let window = EqualizerWindow::build(psf, options.n_half);
    let side = options.page_side;
    let mut points = Vec::with_capacity(i_grid.len());
    for (k, &i_i) in i_grid.iter().enumerate() {
        let mut pooled = MiEstimator::new();
        let mut per_repeat = Vec::with_capacity(options.repeats);
        for r in 0..options.repeats {
            let s = derive_seed(seed, &[k as u64, r as u64]);
            let page = SymbolPage::random(side, side, derive_seed(s, &[0]));
            let clean = convolve2d(&page, psf);
            let noise = NoiseSpec {
                sigma_w,
                snr_db: 0.0,
                rate_adjusted: false,
            };
            let received = add_awgn(&clean, &noise, derive_seed(s, &[1]))?;
            let prior = synth_priors(i_i, &page, derive_seed(s, &[2]))?;
            let out = equalize_page(&received, &prior, scheme, &window, sigma_w)?;
            let mut est = MiEstimator::new();
            for (&l, &x) in out.values().iter().zip(page.symbols()) {
                est.push(l, x);
            }
            per_repeat.push(est.value());
            pooled.merge(&est);
        }
        let (i_o, i_o_stderr) = summarize(&per_repeat, &pooled);
        points.push(ExitPoint {
            i_i,
            i_o,
            i_o_stderr,
        });
    }
    Ok(ExitCurve {
        tag: ComponentTag::for_scheme(scheme),
        points,
    })
}

/// Measures the LDPC decoder transfer: priors at information `i_i`, a full
/// decoder activation (`inner_iters` flooding iterations from fresh state),
/// extrinsic output measured against the transmitted word.
#[allow(clippy::too_many_arguments)]
pub fn trace_exit_ldpc(
    n: usize,
    dv: usize,
    dc: usize,
    code_seed: u64,
    inner_iters: usize,
    i_grid: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<ExitCurve> {
    if repeats == 0 {
        return Err(CoreError::invalid("repeats must be positive"));
    }
    let code = LdpcCode::build_regular(n, dv, dc, code_seed)?;
    let tx = code.encode_coset();
    let mut points = Vec::with_capacity(i_grid.len());
    for (k, &i_i) in i_grid.iter().enumerate() {
        let mut pooled = MiEstimator::new();
        let mut per_repeat = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let s = derive_seed(seed, &[k as u64, r as u64]);
            let prior = synth_prior_llrs(i_i, &tx, s)?;
            let (out, _) = code.decode_iterations(&prior, inner_iters, None)?;
            let mut est = MiEstimator::new();
            for (&l, &x) in out.extrinsic.iter().zip(&tx) {
                est.push(l, x);
            }
            per_repeat.push(est.value());
            pooled.merge(&est);
        }
        let (i_o, i_o_stderr) = summarize(&per_repeat, &pooled);
        points.push(ExitPoint {
            i_i,
            i_o,
            i_o_stderr,
        });
    }
    Ok(ExitCurve {
        tag: ComponentTag::LdpcDecoder,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::snr_to_sigma;

    fn quick_options() -> ExitTraceOptions {
        ExitTraceOptions {
            page_side: 60,
            repeats: 2,
            n_half: 2,
        }
    }

    #[test]
    fn equalizer_curve_monotone_and_bounded() {
        let psf = PsfKernel::make_psf(0.4).unwrap();
        let sigma = snr_to_sigma(0.0, &psf, None).unwrap();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let curve =
            trace_exit_equalizer(Scheme::Exact, &psf, sigma, &grid, &quick_options(), 3).unwrap();
        assert_eq!(curve.tag, ComponentTag::EqualizerExact);
        let mut last = -1.0;
        for p in &curve.points {
            assert!(p.i_o >= 0.0 && p.i_o <= 1.0);
            assert!(p.i_o > last - 0.02, "roughly nondecreasing");
            last = p.i_o;
        }
        // Better priors help: full side information beats none clearly.
        assert!(curve.points[4].i_o > curve.points[0].i_o + 0.05);
    }

    #[test]
    fn approximations_bracket_the_interference_extremes() {
        // Approximation I assumes no priors, so it matches the exact scheme
        // at I_i = 0; approximation II assumes perfect priors, matching at
        // I_i = 1 where approximation I falls behind.
        let psf = PsfKernel::make_psf(0.4).unwrap();
        let sigma = snr_to_sigma(0.0, &psf, None).unwrap();
        let opts = quick_options();
        let grid = [0.0, 1.0];
        let exact = trace_exit_equalizer(Scheme::Exact, &psf, sigma, &grid, &opts, 5).unwrap();
        let a1 = trace_exit_equalizer(Scheme::Approx1, &psf, sigma, &grid, &opts, 5).unwrap();
        let a2 = trace_exit_equalizer(Scheme::Approx2, &psf, sigma, &grid, &opts, 5).unwrap();
        assert!((a1.points[0].i_o - exact.points[0].i_o).abs() < 1e-12, "identical at I_i = 0");
        assert!((a2.points[1].i_o - exact.points[1].i_o).abs() < 0.01, "matched filter at I_i = 1");
        assert!(a1.points[0].i_o > a2.points[0].i_o, "I beats II with no priors");
        assert!(a2.points[1].i_o > a1.points[1].i_o, "II beats I with full priors");
    }

    #[test]
    fn ldpc_curve_shape() {
        let grid = [0.0, 0.3, 0.6, 0.9];
        let curve = trace_exit_ldpc(2000, 3, 6, 7, 10, &grid, 2, 9).unwrap();
        assert_eq!(curve.tag, ComponentTag::LdpcDecoder);
        // Zero input is a decoder fixed point.
        assert_eq!(curve.points[0].i_o, 0.0);
        let mut last = -1.0;
        for p in &curve.points {
            assert!(p.i_o >= last, "nondecreasing");
            last = p.i_o;
        }
        assert!(curve.points[3].i_o > 0.95, "strong priors nearly decode");
    }

    #[test]
    fn traces_are_deterministic() {
        let psf = PsfKernel::make_psf(0.4).unwrap();
        let grid = [0.4];
        let a = trace_exit_equalizer(Scheme::Approx1, &psf, 0.6, &grid, &quick_options(), 11)
            .unwrap();
        let b = trace_exit_equalizer(Scheme::Approx1, &psf, 0.6, &grid, &quick_options(), 11)
            .unwrap();
        assert_eq!(a.points[0].i_o, b.points[0].i_o);
        assert_eq!(a.points[0].i_o_stderr, b.points[0].i_o_stderr);
    }
}
