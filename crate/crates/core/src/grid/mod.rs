//! Symbol pages, point spread functions, and the 2D ISI channel with AWGN.

pub mod io;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::CoreError;
use crate::seed::rng_from_seed;
use crate::Result;

/// An L×L real point spread function, the channel's 2D impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct PsfKernel {
    size: usize,
    taps: Vec<f64>, // row-major, taps[l1 * size + l2]
}

impl PsfKernel {
    /// Builds a kernel from explicit row-major taps.
    pub fn from_taps(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size == 0 {
            return Err(CoreError::invalid("kernel size must be positive"));
        }
        if taps.len() != size * size {
            return Err(CoreError::mismatch(format!(
                "kernel size {} needs {} taps, got {}",
                size,
                size * size,
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(CoreError::invalid("kernel taps must be finite"));
        }
        Ok(PsfKernel { size, taps })
    }

    /// The unit-energy 3×3 interference family parameterized by `s`:
    /// center `a = 1/sqrt(1 + s^2 + s^4)`, edge `b = a*s/2`, corner
    /// `c = a*s^2/2`. `s = 0` is the interference-free identity channel.
    pub fn make_psf(s: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(CoreError::invalid(format!(
                "interference parameter must be finite and >= 0, got {s}"
            )));
        }
        let a = 1.0 / (1.0 + s * s + s.powi(4)).sqrt();
        let b = a * s / 2.0;
        let c = a * s * s / 2.0;
        let taps = vec![c, b, c, b, a, b, c, b, c];
        Ok(PsfKernel { size: 3, taps })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn tap(&self, l1: usize, l2: usize) -> f64 {
        self.taps[l1 * self.size + l2]
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Total tap energy `sum h^2`.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    /// Fraction of kernel energy outside the center tap, in `[0, 1]`.
    pub fn interference_energy(&self) -> Result<f64> {
        let total = self.energy();
        if total == 0.0 {
            return Err(CoreError::invalid(
                "interference energy undefined for all-zero kernel",
            ));
        }
        let c = (self.size - 1) / 2;
        let center = self.tap(c, c);
        Ok((total - center * center) / total)
    }
}

/// A 2D array of antipodal symbols in `{+1, -1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPage {
    height: usize,
    width: usize,
    symbols: Vec<i8>, // row-major, each +1 or -1
}

impl SymbolPage {
    pub fn from_symbols(height: usize, width: usize, symbols: Vec<i8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(CoreError::invalid("page dimensions must be positive"));
        }
        if symbols.len() != height * width {
            return Err(CoreError::mismatch(format!(
                "page {}x{} needs {} symbols, got {}",
                height,
                width,
                height * width,
                symbols.len()
            )));
        }
        if symbols.iter().any(|&s| s != 1 && s != -1) {
            return Err(CoreError::invalid("page symbols must be +1 or -1"));
        }
        Ok(SymbolPage {
            height,
            width,
            symbols,
        })
    }

    /// Page of all `+1` symbols.
    pub fn all_plus(height: usize, width: usize) -> Self {
        SymbolPage {
            height,
            width,
            symbols: vec![1; height * width],
        }
    }

    /// Uniformly random equiprobable page.
    pub fn random(height: usize, width: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let symbols = (0..height * width)
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        SymbolPage {
            height,
            width,
            symbols,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.symbols[i * self.width + j]
    }

    pub fn symbols(&self) -> &[i8] {
        &self.symbols
    }

    /// Symbol amplitude with the blank guard band outside the page.
    #[inline]
    pub fn amplitude(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i as usize >= self.height || j as usize >= self.width {
            0.0
        } else {
            f64::from(self.symbols[i as usize * self.width + j as usize])
        }
    }
}

/// Channel output samples: the full linear convolution geometry,
/// `(page height + L - 1) × (page width + L - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedPage {
    height: usize,
    width: usize,
    samples: Vec<f64>,
}

impl ReceivedPage {
    pub fn from_samples(height: usize, width: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != height * width {
            return Err(CoreError::mismatch(format!(
                "received page {}x{} needs {} samples, got {}",
                height,
                width,
                height * width,
                samples.len()
            )));
        }
        Ok(ReceivedPage {
            height,
            width,
            samples,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.samples[i * self.width + j]
    }

    /// Sample value, treating indices outside the grid as unobserved (zero).
    /// Out-of-grid observations carry only guard-band noise and receive
    /// exactly zero filter weight, so the placeholder never leaks.
    #[inline]
    pub fn sample_or_zero(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i as usize >= self.height || j as usize >= self.width {
            0.0
        } else {
            self.samples[i as usize * self.width + j as usize]
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// Noise level and its SNR bookkeeping. `sigma_w` and `snr_db` are kept
/// consistent under the SNR definition `10*log10(E_h / (2 sigma_w^2))`,
/// with an additional `1/R` factor inside the ratio when `rate_adjusted`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma_w: f64,
    pub snr_db: f64,
    pub rate_adjusted: bool,
}

impl NoiseSpec {
    /// Builds a spec from an SNR in dB. `code_rate` of `Some(R)` selects the
    /// rate-adjusted convention (energy per information bit).
    pub fn from_snr(snr_db: f64, psf: &PsfKernel, code_rate: Option<f64>) -> Result<Self> {
        let sigma_w = snr_to_sigma(snr_db, psf, code_rate)?;
        Ok(NoiseSpec {
            sigma_w,
            snr_db,
            rate_adjusted: code_rate.is_some(),
        })
    }
}

/// Converts SNR in dB to a noise standard deviation:
/// `sigma_w = sqrt(E_h / (2 * 10^(SNR/10)))`, or with rate `R`,
/// `sigma_w = sqrt(E_h / (2 R * 10^(SNR/10)))`.
pub fn snr_to_sigma(snr_db: f64, psf: &PsfKernel, code_rate: Option<f64>) -> Result<f64> {
    let energy = psf.energy();
    if energy <= 0.0 {
        return Err(CoreError::invalid("PSF energy must be positive"));
    }
    let rate = match code_rate {
        Some(r) if r <= 0.0 || r > 1.0 => {
            return Err(CoreError::invalid(format!("code rate must be in (0,1], got {r}")))
        }
        Some(r) => r,
        None => 1.0,
    };
    let snr_lin = 10f64.powf(snr_db / 10.0);
    Ok((energy / (2.0 * rate * snr_lin)).sqrt())
}

/// Inverse of [`snr_to_sigma`].
pub fn sigma_to_snr(sigma_w: f64, psf: &PsfKernel, code_rate: Option<f64>) -> Result<f64> {
    if sigma_w <= 0.0 {
        return Err(CoreError::invalid("sigma_w must be positive"));
    }
    let energy = psf.energy();
    if energy <= 0.0 {
        return Err(CoreError::invalid("PSF energy must be positive"));
    }
    let rate = match code_rate {
        Some(r) if r <= 0.0 || r > 1.0 => {
            return Err(CoreError::invalid(format!("code rate must be in (0,1], got {r}")))
        }
        Some(r) => r,
        None => 1.0,
    };
    Ok(10.0 * (energy / (2.0 * rate * sigma_w * sigma_w)).log10())
}

/// Noiseless full linear 2D convolution of a page with a kernel, in the
/// orientation `out(i,j) = sum_{l1,l2} x(i-l1, j-l2) h(l1,l2)` with symbols
/// outside the page contributing zero amplitude.
pub fn convolve2d(page: &SymbolPage, psf: &PsfKernel) -> ReceivedPage {
    convolve2d_real(
        page.height(),
        page.width(),
        &|i, j| page.amplitude(i, j),
        psf,
    )
}

/// Convolution of an arbitrary real-valued grid; used by linearity tests and
/// by [`convolve2d`].
pub fn convolve2d_real(
    height: usize,
    width: usize,
    amplitude: &dyn Fn(isize, isize) -> f64,
    psf: &PsfKernel,
) -> ReceivedPage {
    let l = psf.size();
    let out_h = height + l - 1;
    let out_w = width + l - 1;
    let mut samples = vec![0.0; out_h * out_w];
    for i in 0..out_h {
        for j in 0..out_w {
            let mut acc = 0.0;
            for l1 in 0..l {
                for l2 in 0..l {
                    let x = amplitude(i as isize - l1 as isize, j as isize - l2 as isize);
                    if x != 0.0 {
                        acc += x * psf.tap(l1, l2);
                    }
                }
            }
            samples[i * out_w + j] = acc;
        }
    }
    ReceivedPage {
        height: out_h,
        width: out_w,
        samples,
    }
}

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation
/// `noise.sigma_w`; deterministic for a fixed seed.
pub fn add_awgn(clean: &ReceivedPage, noise: &NoiseSpec, seed: u64) -> Result<ReceivedPage> {
    if noise.sigma_w <= 0.0 {
        return Err(CoreError::invalid("sigma_w must be positive"));
    }
    let normal = Normal::new(0.0, noise.sigma_w)
        .map_err(|e| CoreError::invalid(format!("bad noise parameters: {e}")))?;
    let mut rng = rng_from_seed(seed);
    let samples = clean.samples.iter().map(|&s| s + normal.sample(&mut rng)).collect();
    Ok(ReceivedPage {
        height: clean.height,
        width: clean.width,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_psf_identity_at_zero() {
        let k = PsfKernel::make_psf(0.0).unwrap();
        assert_eq!(k.tap(1, 1), 1.0);
        assert_eq!(k.tap(0, 0), 0.0);
        assert_eq!(k.tap(0, 1), 0.0);
        assert!((k.energy() - 1.0).abs() < 1e-12);
        assert_eq!(k.interference_energy().unwrap(), 0.0);
    }

    #[test]
    fn make_psf_s04_taps() {
        let k = PsfKernel::make_psf(0.4).unwrap();
        assert!((k.tap(1, 1) - 0.918398).abs() < 1e-6);
        assert!((k.tap(0, 1) - 0.183680).abs() < 1e-6);
        assert!((k.tap(0, 0) - 0.073472).abs() < 1e-6);
    }

    #[test]
    fn energy_normalized_across_s() {
        for i in 0..=20 {
            let s = i as f64 * 0.05;
            let k = PsfKernel::make_psf(s).unwrap();
            assert!((k.energy() - 1.0).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn interference_energy_matches_reference_table() {
        // (s, interference energy %) for the eight tabulated kernels.
        let table = [
            (0.1, 1.00),
            (0.2, 3.99),
            (0.3, 8.93),
            (0.4, 15.65),
            (0.5, 23.81),
            (0.6, 32.87),
            (0.7, 42.20),
            (0.8, 51.21),
        ];
        for (s, pct) in table {
            let k = PsfKernel::make_psf(s).unwrap();
            let frac = k.interference_energy().unwrap();
            assert!(
                (frac - pct / 100.0).abs() < 0.005,
                "s={s}: got {frac}, want {}",
                pct / 100.0
            );
            // Analytic form (s^2 + s^4) / (1 + s^2 + s^4).
            let analytic = (s * s + s.powi(4)) / (1.0 + s * s + s.powi(4));
            assert!((frac - analytic).abs() < 1e-12);
        }
    }

    #[test]
    fn make_psf_rejects_bad_s() {
        assert!(PsfKernel::make_psf(-0.1).is_err());
        assert!(PsfKernel::make_psf(f64::NAN).is_err());
        assert!(PsfKernel::make_psf(f64::INFINITY).is_err());
    }

    #[test]
    fn interference_energy_rejects_zero_kernel() {
        let k = PsfKernel::from_taps(3, vec![0.0; 9]).unwrap();
        assert!(k.interference_energy().is_err());
    }

    #[test]
    fn delta_response_reproduces_kernel() {
        let k = PsfKernel::make_psf(0.4).unwrap();
        let page = SymbolPage::all_plus(1, 1);
        let out = convolve2d(&page, &k);
        assert_eq!(out.height(), 3);
        assert_eq!(out.width(), 3);
        // out(i,j) = h(i,j) for the 1x1 delta page.
        for l1 in 0..3 {
            for l2 in 0..3 {
                assert!((out.get(l1, l2) - k.tap(l1, l2)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn all_plus_interior_sample() {
        let k = PsfKernel::make_psf(0.4).unwrap();
        let page = SymbolPage::all_plus(8, 8);
        let out = convolve2d(&page, &k);
        let a = k.tap(1, 1);
        let b = k.tap(0, 1);
        let c = k.tap(0, 0);
        let expect = a + 4.0 * b + 4.0 * c;
        assert!((expect - 1.947).abs() < 1e-3);
        assert!((out.get(4, 4) - expect).abs() < 1e-12);
    }

    #[test]
    fn checkerboard_interior_sample() {
        let k = PsfKernel::make_psf(0.4).unwrap();
        let symbols: Vec<i8> = (0..64)
            .map(|idx| if (idx / 8 + idx % 8) % 2 == 0 { 1 } else { -1 })
            .collect();
        let page = SymbolPage::from_symbols(8, 8, symbols).unwrap();
        let out = convolve2d(&page, &k);
        let a = k.tap(1, 1);
        let b = k.tap(0, 1);
        let c = k.tap(0, 0);
        // Interior sample centered on a +1 symbol: edges flip sign, corners keep it.
        let expect = a - 4.0 * b + 4.0 * c;
        // out(i,j) centers on symbol (i-1, j-1); pick i=j=5 -> symbol (4,4), +1.
        assert!((out.get(5, 5) - expect).abs() < 1e-12);
    }

    #[test]
    fn convolution_is_linear() {
        let k = PsfKernel::make_psf(0.7).unwrap();
        let mut rng = crate::seed::rng_from_seed(11);
        let g1: Vec<f64> = (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g2: Vec<f64> = (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (alpha, beta) = (0.7, -1.3);
        let f1 = |i: isize, j: isize| {
            if (0..6).contains(&i) && (0..6).contains(&j) {
                g1[i as usize * 6 + j as usize]
            } else {
                0.0
            }
        };
        let f2 = |i: isize, j: isize| {
            if (0..6).contains(&i) && (0..6).contains(&j) {
                g2[i as usize * 6 + j as usize]
            } else {
                0.0
            }
        };
        let combo = |i: isize, j: isize| alpha * f1(i, j) + beta * f2(i, j);
        let o1 = convolve2d_real(6, 6, &f1, &k);
        let o2 = convolve2d_real(6, 6, &f2, &k);
        let oc = convolve2d_real(6, 6, &combo, &k);
        for idx in 0..o1.samples().len() {
            let want = alpha * o1.samples()[idx] + beta * o2.samples()[idx];
            assert!((oc.samples()[idx] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_covariance_away_from_boundaries() {
        let k = PsfKernel::make_psf(0.5).unwrap();
        let inner = SymbolPage::random(6, 6, 99);
        // Embed the same 6x6 pattern at offsets (2,2) and (3,4) of a 12x12 page of +1s.
        let embed = |di: usize, dj: usize| {
            let mut symbols = vec![1i8; 144];
            for i in 0..6 {
                for j in 0..6 {
                    symbols[(i + di) * 12 + (j + dj)] = inner.get(i, j);
                }
            }
            SymbolPage::from_symbols(12, 12, symbols).unwrap()
        };
        let o1 = convolve2d(&embed(2, 2), &k);
        let o2 = convolve2d(&embed(3, 4), &k);
        // Compare the interior of the shifted outputs.
        for i in 0..4 {
            for j in 0..4 {
                let a = o1.get(4 + i, 4 + j);
                let b = o2.get(5 + i, 6 + j);
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn awgn_deterministic_and_calibrated() {
        let k = PsfKernel::make_psf(0.0).unwrap();
        let page = SymbolPage::all_plus(1000, 1000);
        let clean = convolve2d(&page, &k);
        let noise = NoiseSpec {
            sigma_w: 0.5,
            snr_db: sigma_to_snr(0.5, &k, None).unwrap(),
            rate_adjusted: false,
        };
        let a = add_awgn(&clean, &noise, 42).unwrap();
        let b = add_awgn(&clean, &noise, 42).unwrap();
        assert_eq!(a, b);
        let n = a.samples().len() as f64;
        let mean_diff: f64 =
            a.samples().iter().zip(clean.samples()).map(|(x, c)| x - c).sum::<f64>() / n;
        let var: f64 = a
            .samples()
            .iter()
            .zip(clean.samples())
            .map(|(x, c)| (x - c - mean_diff).powi(2))
            .sum::<f64>()
            / n;
        assert!((var - 0.25).abs() < 0.002, "sample variance {var}");
        assert!(mean_diff.abs() < 4.0 * 0.5 / n.sqrt(), "mean {mean_diff}");
    }

    #[test]
    fn awgn_rejects_nonpositive_sigma() {
        let k = PsfKernel::make_psf(0.0).unwrap();
        let clean = convolve2d(&SymbolPage::all_plus(2, 2), &k);
        let noise = NoiseSpec {
            sigma_w: 0.0,
            snr_db: 0.0,
            rate_adjusted: false,
        };
        assert!(add_awgn(&clean, &noise, 1).is_err());
    }

    #[test]
    fn snr_sigma_conversions() {
        let k = PsfKernel::make_psf(0.3).unwrap(); // unit energy
        let s0 = snr_to_sigma(0.0, &k, None).unwrap();
        assert!((s0 - (0.5f64).sqrt()).abs() < 1e-12);
        let s0r = snr_to_sigma(0.0, &k, Some(0.5)).unwrap();
        assert!((s0r - 1.0).abs() < 1e-12);
        for snr in [-2.0, 0.0, 5.0] {
            let sig = snr_to_sigma(snr, &k, Some(0.5)).unwrap();
            let back = sigma_to_snr(sig, &k, Some(0.5)).unwrap();
            assert!((back - snr).abs() < 1e-12);
        }
        assert!(snr_to_sigma(0.0, &k, Some(0.0)).is_err());
        assert!(snr_to_sigma(0.0, &k, Some(-0.5)).is_err());
    }
}
