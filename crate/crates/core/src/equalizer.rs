//! Soft-in soft-out linear MMSE equalization of a received page using
//! prior LLRs.
//!
//! Three schemes share one Wiener machinery:
//!
//! * `Exact` — per-bit time-varying filters from the Wiener-Hopf equations
//!   with the current symbol variances.
//! * `Approx1` — time-invariant coefficients computed once assuming no
//!   prior information (unit variances inside the page).
//! * `Approx2` — time-invariant coefficients assuming perfect prior
//!   information on the interferers; closed form, the matched filter.
//!
//! The target bit's own prior is always zeroed (mean 0, variance 1) so the
//! output carries only extrinsic information. Guard-band symbols outside
//! the page enter with mean 0 and variance 0 (known absent).

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

use crate::error::CoreError;
use crate::grid::{PsfKernel, ReceivedPage};
use crate::llr::{clip_llr, LlrGrid, LLR_CLIP};
use crate::Result;

/// Equalization scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Exact,
    Approx1,
    Approx2,
}

/// Per-symbol means and variances derived from prior LLRs.
#[derive(Debug, Clone)]
pub struct PriorStats {
    height: usize,
    width: usize,
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl PriorStats {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Symbol mean; guard-band positions are 0.
    #[inline]
    pub fn mean_at(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i as usize >= self.height || j as usize >= self.width {
            0.0
        } else {
            self.mean[i as usize * self.width + j as usize]
        }
    }

    /// Symbol variance; guard-band positions are 0 (known absent).
    #[inline]
    pub fn variance_at(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i as usize >= self.height || j as usize >= self.width {
            0.0
        } else {
            self.variance[i as usize * self.width + j as usize]
        }
    }
}

/// Converts prior LLRs to symbol statistics: `mean = tanh(L/2)`,
/// `variance = 1 - mean^2`.
pub fn llr_to_stats(prior: &LlrGrid) -> PriorStats {
    let mean: Vec<f64> = prior.values().iter().map(|&l| (l / 2.0).tanh()).collect();
    let variance: Vec<f64> = mean.iter().map(|&m| 1.0 - m * m).collect();
    PriorStats {
        height: prior.height(),
        width: prior.width(),
        mean,
        variance,
    }
}

/// Fixed window geometry shared by every bit: the sparse convolution matrix
/// H mapping the `(2N+L)^2` involved symbols to the `(2N+1)^2` observations.
/// Depends only on (psf, N), never on data.
#[derive(Debug, Clone)]
pub struct EqualizerWindow {
    n_half: usize,
    l: usize,
    /// Kernel center offset: symbol (i,j)'s response is centered at received
    /// sample (i + center, j + center).
    center: usize,
    /// Left reach of the symbol window per axis (L-1-center).
    reach_lo: usize,
    obs_side: usize,
    sym_side: usize,
    /// Sparse columns of H: `h_cols[s]` lists `(obs_index, tap)`.
    h_cols: Vec<Vec<(usize, f64)>>,
    /// Dense target column of H.
    h_target: Vec<f64>,
    /// Index of the target symbol in the symbol raster.
    target_sym: usize,
    /// `||h_target||^2`.
    target_energy: f64,
}

impl EqualizerWindow {
    /// Builds the window for a given kernel and support half-width `N`.
    /// Observations are the `(2N+1)^2` received samples centered on the
    /// target symbol's response.
    pub fn build(psf: &PsfKernel, n_half: usize) -> Self {
        let l = psf.size();
        let center = (l - 1) / 2;
        let reach_lo = l - 1 - center;
        let obs_side = 2 * n_half + 1;
        let sym_side = 2 * n_half + l;
        let obs_dim = obs_side * obs_side;
        let sym_dim = sym_side * sym_side;

        let mut h_cols = vec![Vec::new(); sym_dim];
        for op in 0..obs_side {
            for oq in 0..obs_side {
                let p = op as isize - n_half as isize;
                let q = oq as isize - n_half as isize;
                let obs_idx = op * obs_side + oq;
                // Observation (p,q) sits at received offset (center+p, center+q)
                // from the target and involves symbols at offsets
                // (center+p-l1, center+q-l2).
                for l1 in 0..l {
                    for l2 in 0..l {
                        let u = center as isize + p - l1 as isize;
                        let v = center as isize + q - l2 as isize;
                        let su = (u + n_half as isize + reach_lo as isize) as usize;
                        let sv = (v + n_half as isize + reach_lo as isize) as usize;
                        let tap = psf.tap(l1, l2);
                        if tap != 0.0 {
                            h_cols[su * sym_side + sv].push((obs_idx, tap));
                        }
                    }
                }
            }
        }
        let target_sym =
            (n_half + reach_lo) * sym_side + (n_half + reach_lo);
        let mut h_target = vec![0.0; obs_dim];
        for &(o, t) in &h_cols[target_sym] {
            h_target[o] += t;
        }
        let target_energy = h_target.iter().map(|t| t * t).sum();
        EqualizerWindow {
            n_half,
            l,
            center,
            reach_lo,
            obs_side,
            sym_side,
            h_cols,
            h_target,
            target_sym,
            target_energy,
        }
    }

    pub fn n_half(&self) -> usize {
        self.n_half
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_side * self.obs_side
    }

    pub fn sym_dim(&self) -> usize {
        self.sym_side * self.sym_side
    }

    pub fn target_sym(&self) -> usize {
        self.target_sym
    }

    pub fn target_energy(&self) -> f64 {
        self.target_energy
    }

    pub fn h_target(&self) -> &[f64] {
        &self.h_target
    }

    /// Sparse column `s` of H.
    pub fn h_col(&self, s: usize) -> &[(usize, f64)] {
        &self.h_cols[s]
    }

    /// Symbol offset (u, v) relative to the target for raster index `s`.
    #[inline]
    pub fn sym_offset(&self, s: usize) -> (isize, isize) {
        let shift = (self.n_half + self.reach_lo) as isize;
        (
            (s / self.sym_side) as isize - shift,
            (s % self.sym_side) as isize - shift,
        )
    }

    /// Received-page coordinates of observation raster index `o` for target
    /// bit (i, j).
    #[inline]
    pub fn obs_position(&self, o: usize, i: usize, j: usize) -> (isize, isize) {
        let p = (o / self.obs_side) as isize - self.n_half as isize;
        let q = (o % self.obs_side) as isize - self.n_half as isize;
        (
            i as isize + self.center as isize + p,
            j as isize + self.center as isize + q,
        )
    }

    /// Fills `out` with the windowed received samples for bit (i, j).
    /// Observations outside the grid read as zero; they receive exactly zero
    /// filter weight because all their symbols have zero variance.
    pub fn gather_received(&self, received: &ReceivedPage, i: usize, j: usize, out: &mut [f64]) {
        for o in 0..self.obs_dim() {
            let (ri, rj) = self.obs_position(o, i, j);
            out[o] = received.sample_or_zero(ri, rj);
        }
    }

    /// Fills symbol means and variances for bit (i, j), with the target's
    /// prior overridden to mean 0 / variance 1 (extrinsic discipline).
    pub fn gather_stats(
        &self,
        stats: &PriorStats,
        i: usize,
        j: usize,
        means: &mut [f64],
        vars: &mut [f64],
    ) {
        for s in 0..self.sym_dim() {
            let (u, v) = self.sym_offset(s);
            let (si, sj) = (i as isize + u, j as isize + v);
            means[s] = stats.mean_at(si, sj);
            vars[s] = stats.variance_at(si, sj);
        }
        means[self.target_sym] = 0.0;
        vars[self.target_sym] = 1.0;
    }

    /// In-page variance mask for bit (i, j): 1 inside the page, 0 in the
    /// guard band, target forced to 1. This is the "no prior information"
    /// variance pattern used by the approximate-I scheme.
    fn unit_mask(&self, i: usize, j: usize, height: usize, width: usize, vars: &mut [f64]) {
        for s in 0..self.sym_dim() {
            let (u, v) = self.sym_offset(s);
            let (si, sj) = (i as isize + u, j as isize + v);
            let inside =
                si >= 0 && sj >= 0 && (si as usize) < height && (sj as usize) < width;
            vars[s] = if inside { 1.0 } else { 0.0 };
        }
        vars[self.target_sym] = 1.0;
    }

    /// Pattern key identifying the guard-band mask of bit (i, j); bits with
    /// equal keys have identical masks.
    fn mask_key(&self, i: usize, j: usize, height: usize, width: usize) -> (usize, usize, usize, usize) {
        let row_reach = self.n_half + self.reach_lo;
        let row_reach_hi = self.n_half + self.center;
        (
            i.min(row_reach),
            (height - 1 - i).min(row_reach_hi),
            j.min(row_reach),
            (width - 1 - j).min(row_reach_hi),
        )
    }
}

/// Solved Wiener filter for one bit: coefficients `c`, the conditional mean
/// `mu = E[x_hat | x = +1]`, and `sigma2 = mu (1 - mu)`.
#[derive(Debug, Clone)]
pub struct FilterSolution {
    pub coeffs: Vec<f64>,
    pub mu: f64,
    pub sigma2: f64,
}

/// Solves `(sigma^2 I + H V H^T) c = H e_t` for the given diagonal variance
/// pattern (target variance must already be 1) and returns `(c, mu)`.
fn solve_wiener(window: &EqualizerWindow, vars: &[f64], sigma_w: f64) -> Result<(Vec<f64>, f64)> {
    if sigma_w <= 0.0 {
        return Err(CoreError::invalid("sigma_w must be positive"));
    }
    let dim = window.obs_dim();
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    for o in 0..dim {
        k[(o, o)] = sigma_w * sigma_w;
    }
    // K += sum_s v_s h_s h_s^T, exploiting column sparsity.
    for (s, &v) in vars.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let col = window.h_col(s);
        for (a, &(oa, ta)) in col.iter().enumerate() {
            let va = v * ta;
            for &(ob, tb) in &col[a..] {
                k[(oa, ob)] += va * tb;
            }
        }
    }
    // Mirror the upper triangle (oa <= ob held by sorted column order is not
    // guaranteed, so accumulate was done one-sided per pair; fix up here).
    for a in 0..dim {
        for b in (a + 1)..dim {
            let s = k[(a, b)] + k[(b, a)];
            k[(a, b)] = s;
            k[(b, a)] = s;
        }
    }
    let rhs = DVector::from_column_slice(window.h_target());
    let chol = Cholesky::new(k)
        .ok_or_else(|| CoreError::invalid("covariance not positive definite"))?;
    let c = chol.solve(&rhs);
    let mu: f64 = c.iter().zip(window.h_target()).map(|(a, b)| a * b).sum();
    Ok((c.as_slice().to_vec(), mu))
}

/// Applies coefficients: `x_hat = c . (r - H mean)` with the target mean
/// already zeroed in `means`.
fn apply_filter(
    window: &EqualizerWindow,
    coeffs: &[f64],
    means: &[f64],
    received_win: &[f64],
) -> f64 {
    let mut x_hat: f64 = coeffs
        .iter()
        .zip(received_win)
        .map(|(c, r)| c * r)
        .sum();
    for (s, &m) in means.iter().enumerate() {
        if m != 0.0 {
            let mut g = 0.0;
            for &(o, t) in window.h_col(s) {
                g += coeffs[o] * t;
            }
            x_hat -= m * g;
        }
    }
    x_hat
}

/// Extrinsic LLR from the Gaussian model: `L_E = 2 x_hat mu / sigma^2`
/// with `sigma^2 = mu (1 - mu)`, clipped.
fn extrinsic_llr(x_hat: f64, mu: f64) -> f64 {
    let denom = 1.0 - mu;
    if denom <= 1e-12 {
        if x_hat == 0.0 {
            0.0
        } else {
            x_hat.signum() * LLR_CLIP
        }
    } else {
        clip_llr(2.0 * x_hat / denom)
    }
}

/// Exact per-bit MMSE solve: time-varying Wiener filter using the current
/// prior variances, target prior zeroed. Returns the estimate and the
/// filter solution.
pub fn solve_exact(
    window: &EqualizerWindow,
    stats: &PriorStats,
    target: (usize, usize),
    sigma_w: f64,
    received: &ReceivedPage,
) -> Result<(f64, FilterSolution)> {
    let (i, j) = target;
    if i >= stats.height() || j >= stats.width() {
        return Err(CoreError::invalid("target outside page"));
    }
    let mut means = vec![0.0; window.sym_dim()];
    let mut vars = vec![0.0; window.sym_dim()];
    let mut recv = vec![0.0; window.obs_dim()];
    window.gather_stats(stats, i, j, &mut means, &mut vars);
    window.gather_received(received, i, j, &mut recv);
    let (coeffs, mu) = solve_wiener(window, &vars, sigma_w)?;
    let x_hat = apply_filter(window, &coeffs, &means, &recv);
    Ok((
        x_hat,
        FilterSolution {
            coeffs,
            mu,
            sigma2: mu * (1.0 - mu),
        },
    ))
}

/// A time-invariant coefficient set: one Wiener solution per guard-band
/// mask pattern (interior bits share a single entry).
#[derive(Debug, Clone)]
pub struct FixedCoefficients {
    scheme: Scheme,
    by_mask: HashMap<(usize, usize, usize, usize), FilterSolution>,
    height: usize,
    width: usize,
}

impl FixedCoefficients {
    /// Filter for bit (i, j).
    pub fn for_bit(&self, i: usize, j: usize, window: &EqualizerWindow) -> &FilterSolution {
        let key = window.mask_key(i, j, self.height, self.width);
        &self.by_mask[&key]
    }

    /// The interior-bit solution.
    pub fn interior(&self, window: &EqualizerWindow) -> &FilterSolution {
        let row = window.n_half + window.reach_lo;
        let hi = window.n_half + window.center;
        &self.by_mask[&(row, hi, row, hi)]
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
}

/// Approximate-I scheme: coefficients computed once from the exact system
/// with unit variances inside the page ("no prior information"). One
/// solution per edge-mask pattern so boundary bits match the exact scheme
/// bit-for-bit under zero priors.
pub fn solve_approx1(
    window: &EqualizerWindow,
    sigma_w: f64,
    height: usize,
    width: usize,
) -> Result<FixedCoefficients> {
    let mut by_mask = HashMap::new();
    let mut vars = vec![0.0; window.sym_dim()];
    for i in 0..height {
        for j in 0..width {
            let key = window.mask_key(i, j, height, width);
            if by_mask.contains_key(&key) {
                continue;
            }
            window.unit_mask(i, j, height, width, &mut vars);
            let (coeffs, mu) = solve_wiener(window, &vars, sigma_w)?;
            by_mask.insert(
                key,
                FilterSolution {
                    coeffs,
                    mu,
                    sigma2: mu * (1.0 - mu),
                },
            );
        }
    }
    Ok(FixedCoefficients {
        scheme: Scheme::Approx1,
        by_mask,
        height,
        width,
    })
}

/// Approximate-II scheme: coefficients assuming perfect prior information
/// on all interferers. Rank-one closed form, the matched filter:
/// `c = h_t / (||h_t||^2 + sigma^2)`, `mu = E / (E + sigma^2)`.
pub fn solve_approx2(
    window: &EqualizerWindow,
    sigma_w: f64,
    height: usize,
    width: usize,
) -> Result<FixedCoefficients> {
    if sigma_w <= 0.0 {
        return Err(CoreError::invalid("sigma_w must be positive"));
    }
    let energy = window.target_energy();
    let denom = energy + sigma_w * sigma_w;
    let coeffs: Vec<f64> = window.h_target().iter().map(|&t| t / denom).collect();
    let mu = energy / denom;
    let solution = FilterSolution {
        coeffs,
        mu,
        sigma2: mu * (1.0 - mu),
    };
    // Same solution for every mask; register the keys that occur.
    let mut by_mask = HashMap::new();
    for i in 0..height {
        for j in 0..width {
            by_mask
                .entry(window.mask_key(i, j, height, width))
                .or_insert_with(|| solution.clone());
        }
    }
    Ok(FixedCoefficients {
        scheme: Scheme::Approx2,
        by_mask,
        height,
        width,
    })
}

/// Equalizes a whole page under one frozen prior grid (Jacobi schedule) and
/// returns the extrinsic LLR grid. Bits are processed data-parallel; output
/// is bit-exact regardless of worker count.
pub fn equalize_page(
    received: &ReceivedPage,
    prior: &LlrGrid,
    scheme: Scheme,
    window: &EqualizerWindow,
    sigma_w: f64,
) -> Result<LlrGrid> {
    let height = prior.height();
    let width = prior.width();
    if received.height() != height + window.l - 1 || received.width() != width + window.l - 1 {
        return Err(CoreError::mismatch(format!(
            "received {}x{} inconsistent with page {}x{} and L={}",
            received.height(),
            received.width(),
            height,
            width,
            window.l
        )));
    }
    let stats = llr_to_stats(prior);
    let fixed = match scheme {
        Scheme::Exact => None,
        Scheme::Approx1 => Some(solve_approx1(window, sigma_w, height, width)?),
        Scheme::Approx2 => Some(solve_approx2(window, sigma_w, height, width)?),
    };

    let rows: Vec<Vec<f64>> = (0..height)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut means = vec![0.0; window.sym_dim()];
            let mut vars = vec![0.0; window.sym_dim()];
            let mut recv = vec![0.0; window.obs_dim()];
            let mut row = vec![0.0; width];
            for j in 0..width {
                window.gather_stats(&stats, i, j, &mut means, &mut vars);
                window.gather_received(received, i, j, &mut recv);
                let (x_hat, mu) = match &fixed {
                    None => {
                        let (coeffs, mu) = solve_wiener(window, &vars, sigma_w)?;
                        (apply_filter(window, &coeffs, &means, &recv), mu)
                    }
                    Some(f) => {
                        let sol = f.for_bit(i, j, window);
                        (apply_filter(window, &sol.coeffs, &means, &recv), sol.mu)
                    }
                };
                row[j] = extrinsic_llr(x_hat, mu);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(height * width);
    for row in rows {
        values.extend(row);
    }
    LlrGrid::from_values(height, width, values)
}

/// Chooses between the two approximate equalizers from cached EXIT tables:
/// the one with the larger interpolated output mutual information at the
/// current input `i_i` wins. With no tables, falls back to a fixed
/// crossover: approximate I below it, approximate II at or above.
pub fn hybrid_select(
    i_i: f64,
    tables: Option<(&[(f64, f64)], &[(f64, f64)])>,
    crossover: f64,
) -> Scheme {
    match tables {
        Some((approx1, approx2)) => {
            let io1 = interp_curve(approx1, i_i);
            let io2 = interp_curve(approx2, i_i);
            if io1 >= io2 {
                Scheme::Approx1
            } else {
                Scheme::Approx2
            }
        }
        None => {
            if i_i < crossover {
                Scheme::Approx1
            } else {
                Scheme::Approx2
            }
        }
    }
}

/// Piecewise-linear interpolation of an (x, y) curve sorted by x, clamped
/// at the ends.
pub fn interp_curve(points: &[(f64, f64)], x: f64) -> f64 {
    assert!(!points.is_empty(), "empty curve");
    if x <= points[0].0 {
        return points[0].1;
    }
    if let Some(&(last_x, last_y)) = points.last() {
        if x >= last_x {
            return last_y;
        }
    }
    for w in points.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x <= x1 {
            if x1 == x0 {
                return y1;
            }
            let t = (x - x0) / (x1 - x0);
            return y0 + t * (y1 - y0);
        }
    }
    points.last().unwrap().1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{add_awgn, convolve2d, NoiseSpec, PsfKernel, SymbolPage};

    fn psf04() -> PsfKernel {
        PsfKernel::make_psf(0.4).unwrap()
    }

    #[test]
    fn llr_to_stats_values() {
        let g = LlrGrid::from_values(1, 3, vec![0.0, 40.0, 2.0]).unwrap();
        let s = llr_to_stats(&g);
        assert_eq!(s.mean_at(0, 0), 0.0);
        assert_eq!(s.variance_at(0, 0), 1.0);
        assert!((s.mean_at(0, 1) - 1.0).abs() < 1e-12);
        assert!(s.variance_at(0, 1) < 1e-12);
        assert!((s.mean_at(0, 2) - 0.76159).abs() < 1e-5);
        assert!((s.variance_at(0, 2) - 0.41997).abs() < 1e-5);
        // variance = 1 - mean^2 exactly.
        for j in 0..3 {
            let m = s.mean_at(0, j);
            assert!((s.variance_at(0, j) - (1.0 - m * m)).abs() < 1e-12);
        }
    }

    #[test]
    fn window_shapes() {
        let w0 = EqualizerWindow::build(&psf04(), 0);
        assert_eq!(w0.obs_dim(), 1);
        assert_eq!(w0.sym_dim(), 9);
        // The single H row holds the 9 PSF taps.
        let taps: f64 = (0..9).map(|s| w0.h_col(s).iter().map(|&(_, t)| t).sum::<f64>()).sum();
        let kernel_sum: f64 = psf04().taps().iter().sum();
        assert!((taps - kernel_sum).abs() < 1e-12);

        let w2 = EqualizerWindow::build(&psf04(), 2);
        assert_eq!(w2.obs_dim(), 25);
        assert_eq!(w2.sym_dim(), 49);
        // Column sparsity: <= 25 nonzeros per column, exactly 9 for the target.
        for s in 0..49 {
            assert!(w2.h_col(s).len() <= 25);
        }
        assert_eq!(w2.h_col(w2.target_sym()).len(), 9);
        assert!((w2.target_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_neighbor_priors_give_closed_form_mu() {
        let window = EqualizerWindow::build(&psf04(), 2);
        let page = SymbolPage::random(20, 20, 3);
        let rec = convolve2d(&page, &psf04());
        // Priors: neighbors perfectly known (LLR = sign * clip), target irrelevant.
        let mut prior = LlrGrid::zeros(20, 20);
        for i in 0..20 {
            for j in 0..20 {
                prior.set(i, j, f64::from(page.get(i, j)) * LLR_CLIP);
            }
        }
        let stats = llr_to_stats(&prior);
        for sigma in [0.3, 0.7, 1.5] {
            let (_, sol) = solve_exact(&window, &stats, (10, 10), sigma, &rec).unwrap();
            let want = 1.0 / (1.0 + sigma * sigma);
            // Neighbor variances are ~4e-18 after tanh saturation, not exactly 0.
            assert!((sol.mu - want).abs() < 1e-10, "sigma={sigma}: {} vs {want}", sol.mu);
            assert!((sol.sigma2 - sol.mu * (1.0 - sol.mu)).abs() < 1e-10);
        }
    }

    #[test]
    fn uninformative_limit_high_noise() {
        let window = EqualizerWindow::build(&psf04(), 2);
        let page = SymbolPage::random(12, 12, 5);
        let rec = convolve2d(&page, &psf04());
        let prior = LlrGrid::zeros(12, 12);
        let stats = llr_to_stats(&prior);
        let (x_hat, sol) = solve_exact(&window, &stats, (6, 6), 1e4, &rec).unwrap();
        assert!(sol.mu < 1e-6);
        assert!(x_hat.abs() < 1e-4);
        assert!(sol.coeffs.iter().all(|c| c.abs() < 1e-6));
    }

    #[test]
    fn mu_bounds_and_monotone_in_sigma() {
        let window = EqualizerWindow::build(&psf04(), 2);
        let page = SymbolPage::random(12, 12, 5);
        let rec = convolve2d(&page, &psf04());
        let prior = LlrGrid::zeros(12, 12);
        let stats = llr_to_stats(&prior);
        let mut last = 1.0;
        for sigma in [0.1, 0.3, 0.5, 1.0, 2.0, 4.0] {
            let (_, sol) = solve_exact(&window, &stats, (6, 6), sigma, &rec).unwrap();
            assert!(sol.mu > 0.0 && sol.mu < 1.0);
            assert!(sol.mu < last, "mu must decrease with sigma");
            last = sol.mu;
        }
    }

    #[test]
    fn sigma_zero_rejected() {
        let window = EqualizerWindow::build(&psf04(), 1);
        let page = SymbolPage::random(6, 6, 5);
        let rec = convolve2d(&page, &psf04());
        let stats = llr_to_stats(&LlrGrid::zeros(6, 6));
        assert!(solve_exact(&window, &stats, (3, 3), 0.0, &rec).is_err());
    }

    #[test]
    fn approx1_matches_exact_under_zero_priors() {
        let window = EqualizerWindow::build(&psf04(), 2);
        let page = SymbolPage::random(10, 10, 8);
        let rec = {
            let clean = convolve2d(&page, &psf04());
            let noise = NoiseSpec {
                sigma_w: 0.6,
                snr_db: 0.0,
                rate_adjusted: false,
            };
            add_awgn(&clean, &noise, 2).unwrap()
        };
        let prior = LlrGrid::zeros(10, 10);
        let a = equalize_page(&rec, &prior, Scheme::Exact, &window, 0.6).unwrap();
        let b = equalize_page(&rec, &prior, Scheme::Approx1, &window, 0.6).unwrap();
        assert_eq!(a, b, "exact and approx1 must agree bit-for-bit at zero priors");
    }

    #[test]
    fn approx1_time_invariant_in_the_interior() {
        let window = EqualizerWindow::build(&psf04(), 2);
        let fixed = solve_approx1(&window, 0.5, 20, 20).unwrap();
        let interior = fixed.for_bit(10, 10, &window);
        let other = fixed.for_bit(11, 12, &window);
        assert_eq!(interior.coeffs, other.coeffs);
        assert_eq!(interior.mu, other.mu);
    }

    #[test]
    fn approx2_is_matched_filter() {
        let window = EqualizerWindow::build(&psf04(), 2);
        let fixed = solve_approx2(&window, 0.5, 10, 10).unwrap();
        let sol = fixed.interior(&window);
        let energy = window.target_energy();
        let mu_want = energy / (energy + 0.25);
        assert!((sol.mu - mu_want).abs() < 1e-12);
        // c proportional to the target column of H.
        for (c, h) in sol.coeffs.iter().zip(window.h_target()) {
            assert!((c - h / (energy + 0.25)).abs() < 1e-12);
        }
        assert!((sol.sigma2 - sol.mu * (1.0 - sol.mu)).abs() < 1e-12);
    }

    #[test]
    fn extrinsic_llr_formula() {
        // x_hat = 0.3, mu = 0.5 -> sigma2 = 0.25, L = 2*0.3*0.5/0.25 = 1.2
        assert!((extrinsic_llr(0.3, 0.5) - 1.2).abs() < 1e-12);
        // mu -> 1 saturates to the clip.
        assert_eq!(extrinsic_llr(0.2, 1.0), LLR_CLIP);
        assert_eq!(extrinsic_llr(-0.2, 1.0), -LLR_CLIP);
        assert_eq!(extrinsic_llr(0.0, 1.0), 0.0);
    }

    #[test]
    fn noiseless_all_plus_page_gives_positive_extrinsics() {
        let window = EqualizerWindow::build(&psf04(), 2);
        let page = SymbolPage::all_plus(12, 12);
        let rec = convolve2d(&page, &psf04()); // zero noise realization
        let prior = LlrGrid::zeros(12, 12);
        let out = equalize_page(&rec, &prior, Scheme::Exact, &window, 0.4).unwrap();
        for i in 3..9 {
            for j in 3..9 {
                assert!(out.get(i, j) > 0.0, "interior extrinsic at ({i},{j})");
            }
        }
    }

    #[test]
    fn extrinsic_exclusion_is_exact() {
        let window = EqualizerWindow::build(&psf04(), 2);
        let page = SymbolPage::random(10, 10, 12);
        let clean = convolve2d(&page, &psf04());
        let noise = NoiseSpec {
            sigma_w: 0.5,
            snr_db: 0.0,
            rate_adjusted: false,
        };
        let rec = add_awgn(&clean, &noise, 3).unwrap();
        let mut prior = LlrGrid::zeros(10, 10);
        let mut rng = crate::seed::rng_from_seed(9);
        for v in prior.values_mut() {
            *v = rand::Rng::gen_range(&mut rng, -3.0..3.0);
        }
        for scheme in [Scheme::Exact, Scheme::Approx1, Scheme::Approx2] {
            let base = equalize_page(&rec, &prior, scheme, &window, 0.5).unwrap();
            let mut changed = prior.clone();
            changed.set(5, 5, 17.0); // only the target's own prior changes
            let after = equalize_page(&rec, &changed, scheme, &window, 0.5).unwrap();
            assert_eq!(base.get(5, 5), after.get(5, 5), "{scheme:?}");
        }
    }

    #[test]
    fn symmetric_kernel_gives_symmetric_interior_coefficients() {
        let window = EqualizerWindow::build(&psf04(), 2);
        let fixed = solve_approx1(&window, 0.5, 20, 20).unwrap();
        let c = &fixed.interior(&window).coeffs;
        let side = 5;
        let at = |p: usize, q: usize| c[p * side + q];
        for p in 0..side {
            for q in 0..side {
                let (rp, rq) = (side - 1 - p, side - 1 - q);
                assert!((at(p, q) - at(q, p)).abs() < 1e-12, "transpose");
                assert!((at(p, q) - at(rp, q)).abs() < 1e-12, "vertical flip");
                assert!((at(p, q) - at(p, rq)).abs() < 1e-12, "horizontal flip");
            }
        }
    }

    #[test]
    fn hybrid_select_rules() {
        let t1: Vec<(f64, f64)> = vec![(0.0, 0.6), (0.5, 0.65), (1.0, 0.7)];
        let t2: Vec<(f64, f64)> = vec![(0.0, 0.4), (0.5, 0.66), (1.0, 0.95)];
        assert_eq!(hybrid_select(0.0, Some((&t1, &t2)), 0.5), Scheme::Approx1);
        assert_eq!(hybrid_select(1.0, Some((&t1, &t2)), 0.5), Scheme::Approx2);
        // Dominant approx1 wins everywhere.
        let lo: Vec<(f64, f64)> = vec![(0.0, 0.1), (1.0, 0.2)];
        for ii in [0.0, 0.3, 0.7, 1.0] {
            assert_eq!(hybrid_select(ii, Some((&t1, &lo)), 0.5), Scheme::Approx1);
        }
        // Fallback crossover.
        assert_eq!(hybrid_select(0.2, None, 0.5), Scheme::Approx1);
        assert_eq!(hybrid_select(0.7, None, 0.5), Scheme::Approx2);
    }
}
