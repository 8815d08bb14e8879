//! Slow, direct reference computations. Each one follows the defining
//! integral or sum literally so that the fast kernels can be checked against
//! something that shares none of their shortcuts.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(2) + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Fourier-series coefficient `(1/T) int_0^T p(t) exp(-j 2 pi l t / T) dt`
/// of the piecewise-constant sign sequence, by Simpson quadrature per chip.
pub fn mixing_coefficient_quadrature(signs: &[i8], l: i64) -> Complex64 {
    let nc = signs.len() as f64;
    let mut acc = ZERO;
    for (k, &s) in signs.iter().enumerate() {
        let a = k as f64 / nc;
        let b = (k + 1) as f64 / nc;
        let w = 2.0 * PI * l as f64;
        let re = simpson(|t| (w * t).cos(), a, b, 200);
        let im = simpson(|t| -(w * t).sin(), a, b, 200);
        acc += Complex64::new(re, im) * s as f64;
    }
    acc
}

/// Time-domain MWC: channel spectra over `[-f_s/2, f_s/2)` obtained by
/// multiplying `x(t)` with each `p_i(t)` on a dense grid, ideal low-pass
/// filtering, decimating to `f_s` and transforming back.
///
/// `spectrum` is the Nyquist-grid spectrum (length `n_slices * n_grid`,
/// signed bin `k` stored at `k mod L`) with `x(t) = (1/L) sum_k X[k]
/// exp(j 2 pi k f_p t / n_grid)`. `r` is the number of dense samples per chip.
/// Returns one row per channel with `q * n_grid` columns, column `g` at
/// signed bin `g - q n_grid / 2`, scaled like `X`.
pub fn mwc_time_domain(
    spectrum: &[Complex64],
    signs: &[Vec<i8>],
    n_grid: usize,
    q: usize,
    r: usize,
) -> Vec<Vec<Complex64>> {
    let l = spectrum.len();
    let nc = signs[0].len();
    // one observation period holds n_grid periods of the mixing waveform
    let ld = n_grid * nc * r;
    assert!(ld >= 2 * l, "dense grid too coarse");
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(ld);
    let fft = planner.plan_fft_forward(ld);

    // x at the midpoints t_m = (m + 1/2) T / ld
    let mut x = vec![ZERO; ld];
    for (pos, &v) in spectrum.iter().enumerate() {
        let k = if pos < l / 2 {
            pos as i64
        } else {
            pos as i64 - l as i64
        };
        let shift = Complex64::from_polar(1.0, PI * k as f64 / ld as f64);
        x[k.rem_euclid(ld as i64) as usize] = v * shift;
    }
    ifft.process(&mut x);
    for v in x.iter_mut() {
        *v /= l as f64;
    }

    let cols = q * n_grid;
    let half = (cols / 2) as i64;
    let dec = planner.plan_fft_forward(cols);
    let idec = planner.plan_fft_inverse(cols);
    signs
        .iter()
        .map(|row| {
            let mut y: Vec<Complex64> = (0..ld)
                .map(|m| {
                    let chip = (m / r) % nc;
                    x[m] * row[chip] as f64
                })
                .collect();
            fft.process(&mut y);
            // Fourier-series coefficients of the product, midpoint-rule
            // quadrature with the half-sample phase removed
            let coef = |k: i64| -> Complex64 {
                y[k.rem_euclid(ld as i64) as usize] / ld as f64
                    * Complex64::from_polar(1.0, -PI * k as f64 / ld as f64)
            };
            // ideal low-pass, then samples at rate f_s: z[n] = sum_k Y_k e^{j 2 pi k n / cols}
            let mut samples = vec![ZERO; cols];
            for k in -half..half {
                samples[k.rem_euclid(cols as i64) as usize] = coef(k);
            }
            idec.process(&mut samples);
            // spectrum of the decimated sequence, rescaled to the X convention
            let mut spec = samples;
            dec.process(&mut spec);
            (0..cols)
                .map(|g| {
                    let k = g as i64 - half;
                    spec[k.rem_euclid(cols as i64) as usize] / cols as f64 * l as f64
                })
                .collect()
        })
        .collect()
}

/// Direct `O(K P^2)` Doppler focusing:
/// `Psi[k][q] = tau / (P H[k]) sum_p c[k][p] exp(j 2 pi nu_q p tau)`.
pub fn doppler_focus_direct(
    coeffs: &[Vec<Complex64>],
    h_kappa: &[Complex64],
    tau: f64,
    p: usize,
) -> Vec<Vec<Complex64>> {
    coeffs
        .iter()
        .zip(h_kappa)
        .map(|(row, &h)| {
            (0..p)
                .map(|q| {
                    let nu = -0.5 / tau + q as f64 / (p as f64 * tau);
                    let s: Complex64 = (0..p)
                        .map(|pi| {
                            row[pi] * Complex64::from_polar(1.0, 2.0 * PI * nu * pi as f64 * tau)
                        })
                        .sum();
                    s * tau / (p as f64 * h)
                })
                .collect()
        })
        .collect()
}

/// Echo coefficients summed target by target:
/// `c_p[k] = (1/tau) H[k] sum_l alpha_l exp(-j 2 pi k tau_l / tau) exp(-j 2 pi nu_l p tau)`.
pub fn radar_coeffs_direct(
    targets: &[(f64, f64, Complex64)],
    h: &[(i64, Complex64)],
    tau: f64,
    p: usize,
) -> Vec<Vec<Complex64>> {
    h.iter()
        .map(|&(k, hk)| {
            (0..p)
                .map(|pi| {
                    let mut s = ZERO;
                    for &(t, nu, a) in targets {
                        let ph = -2.0 * PI * (k as f64 * t / tau + nu * pi as f64 * tau);
                        s += a * Complex64::from_polar(1.0, ph);
                    }
                    s * hk / tau
                })
                .collect()
        })
        .collect()
}

/// Monte-Carlo upper quantile of the noncentral chi-square with two degrees
/// of freedom: the value exceeded by a fraction `alpha` of `draws` samples.
pub fn chi2_2_quantile_mc(alpha: f64, lambda: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = lambda.max(0.0).sqrt();
    let mut v: Vec<f64> = (0..draws)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            (a + mu) * (a + mu) + b * b
        })
        .collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let idx = ((1.0 - alpha) * draws as f64).floor() as usize;
    v[idx.min(draws - 1)]
}

/// Fraction of `draws` noncentral chi-square samples above `x`.
pub fn chi2_2_tail_mc(x: f64, lambda: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = lambda.max(0.0).sqrt();
    let hits = (0..draws)
        .filter(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            (a + mu) * (a + mu) + b * b > x
        })
        .count();
    hits as f64 / draws as f64
}

/// Lebesgue measure of a union of `[lo, hi)` pairs estimated by counting
/// midpoints of `n` cells tiling `[a, b)`.
pub fn grid_measure(pairs: &[[f64; 2]], a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let hits = (0..n)
        .filter(|&i| {
            let t = a + (i as f64 + 0.5) * h;
            pairs.iter().any(|p| p[0] <= t && t < p[1])
        })
        .count();
    hits as f64 * h
}

/// Every subset of `0..p` (as sorted index lists) with at most `max_blocks`
/// runs of consecutive indices.
pub fn enumerate_block_supports(p: usize, max_blocks: usize) -> Vec<Vec<usize>> {
    assert!(p < 24, "enumeration is exponential in p");
    (0u32..(1 << p))
        .filter_map(|mask| {
            let idx: Vec<usize> = (0..p).filter(|&j| mask >> j & 1 == 1).collect();
            let runs = (0..p)
                .filter(|&j| mask >> j & 1 == 1 && (j == 0 || mask >> (j - 1) & 1 == 0))
                .count();
            (runs <= max_blocks).then_some(idx)
        })
        .collect()
}

/// Exhaustive joint-sparse support search: the size-`k` column subset of
/// `a` (column-major, `m` rows) minimizing the least-squares residual of
/// `y` (columns of length `m`). Residuals come from modified Gram-Schmidt.
pub fn best_support(a: &[Vec<Complex64>], y: &[Vec<Complex64>], k: usize) -> (Vec<usize>, f64) {
    let n = a.len();
    let mut best = (Vec::new(), f64::INFINITY);
    let mut comb: Vec<usize> = (0..k).collect();
    loop {
        let res = residual_energy(a, y, &comb);
        if res < best.1 {
            best = (comb.clone(), res);
        }
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if comb[i] < n - k + i {
                comb[i] += 1;
                for j in i + 1..k {
                    comb[j] = comb[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Squared least-squares residual of `y` on the columns `cols` of `a`, by
/// modified Gram-Schmidt.
pub fn residual_energy(a: &[Vec<Complex64>], y: &[Vec<Complex64>], cols: &[usize]) -> f64 {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for &c in cols {
        let mut v = a[c].clone();
        for b in &basis {
            let d: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= d * bi;
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-12 {
            basis.push(v.into_iter().map(|z| z / nrm).collect());
        }
    }
    y.iter()
        .map(|col| {
            let mut r = col.clone();
            for b in &basis {
                let d: Complex64 = b.iter().zip(&r).map(|(x, y)| x.conj() * y).sum();
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= d * bi;
                }
            }
            r.iter().map(|z| z.norm_sqr()).sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|t| t * t * t - t, 0.0, 2.0, 4);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_counts() {
        // all subsets of 4 elements
        assert_eq!(enumerate_block_supports(4, 4).len(), 16);
        // empty set plus the 10 runs of a 4-element line
        assert_eq!(enumerate_block_supports(4, 1).len(), 11);
    }

    #[test]
    fn grid_measure_counts_cells() {
        let m = grid_measure(&[[0.0, 1.0], [2.0, 3.5]], -1.0, 4.0, 5000);
        assert!((m - 2.5).abs() < 1e-3);
    }
}
