//! Sub-Nyquist pulse-Doppler receiver: coefficient index sets, Doppler
//! focusing, GLRT-stopped OMP over the delay-Doppler grid, feasibility
//! bounds and the hit-or-miss score.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::freqset::FrequencySet;
use crate::grid::ceil_tol;
use crate::linalg::{least_squares, CMat, ZERO};
use crate::signal::{doppler_grid_value, signed_index, PulseTrainSpec, TargetScene};

/// Sorted DFT indices of the Fourier coefficients the receiver processes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaSet {
    indices: Vec<usize>,
    n: usize,
}

impl KappaSet {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return invalid("coefficient set is empty");
        }
        if let Some(&bad) = indices.iter().find(|&&k| k >= n) {
            return invalid(format!("coefficient index {bad} outside 0..{n}"));
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { indices, n })
    }

    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            n,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Coefficient count `K`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Delay-bin count `N`.
    pub fn n(&self) -> usize {
        self.n
    }
}

/// Coefficients whose frequency `k B_h / N` lies in `f_r`.
pub fn make_kappa(f_r: &FrequencySet, b_h: f64, n: usize) -> Result<KappaSet> {
    if f_r.is_empty() {
        return invalid("transmit support is empty");
    }
    if n == 0 || !(b_h > 0.0) {
        return invalid("need n >= 1 and b_h > 0");
    }
    let lo = f_r.intervals()[0].lo();
    let hi = f_r.intervals()[f_r.len() - 1].hi();
    let tol = 1e-9 * b_h;
    if lo < -b_h / 2.0 - tol || hi > b_h / 2.0 + tol {
        return invalid(format!("support {f_r} exceeds [-B_h/2, B_h/2)"));
    }
    let df = b_h / n as f64;
    let idx: Vec<usize> = (0..n)
        .filter(|&i| f_r.contains(signed_index(i, n) as f64 * df))
        .collect();
    KappaSet::new(idx, n)
}

/// Partial DFT matrix `F_kappa`, entries `exp(-j 2 pi k r / N)`.
pub fn partial_fourier(kappa: &KappaSet) -> CMat {
    let n = kappa.n() as i64;
    CMat::from_fn(kappa.len(), kappa.n(), |row, r| {
        let ph = ((kappa.indices()[row] as i64 * r as i64) % n) as f64 / n as f64;
        Complex64::from_polar(1.0, -2.0 * PI * ph)
    })
}

/// Doppler-focused, normalized measurements: column `q` corresponds to
/// `nu_q = -1/(2 tau) + q/(P tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusedMatrix {
    pub psi: CMat,
    pub doppler_grid: Vec<f64>,
}

/// `Psi[k, q] = tau / (P H[k]) sum_p c_p[k] exp(j 2 pi nu_q p tau)`, one
/// inverse FFT per coefficient row.
///
/// `h` is the transmitted spectrum in DFT order (length `N`).
pub fn doppler_focus(
    coeffs: &CMat,
    h: &[Complex64],
    kappa: &KappaSet,
    train: &PulseTrainSpec,
) -> Result<FocusedMatrix> {
    let p = train.n_pulses;
    if coeffs.nrows() != kappa.len() || coeffs.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "coefficients are {}x{}, expected {}x{p}",
            coeffs.nrows(),
            coeffs.ncols(),
            kappa.len()
        )));
    }
    if h.len() != kappa.n() {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has {} samples, expected {}",
            h.len(),
            kappa.n()
        )));
    }
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(p);
    let mut psi = CMat::zeros(kappa.len(), p);
    let mut buf = vec![ZERO; p];
    for (row, &k) in kappa.indices().iter().enumerate() {
        if h[k] == ZERO {
            return Err(Error::ZeroSpectrum(signed_index(k, kappa.n())));
        }
        // exp(j 2 pi nu_q p tau) = (-1)^p exp(j 2 pi q p / P)
        for (pi, b) in buf.iter_mut().enumerate() {
            let c = coeffs[(row, pi)];
            *b = if pi % 2 == 0 { c } else { -c };
        }
        ifft.process(&mut buf);
        let norm = train.pri / (p as f64 * h[k]);
        for q in 0..p {
            psi[(row, q)] = buf[q] * norm;
        }
    }
    let doppler_grid = (0..p).map(|q| doppler_grid_value(q, train)).collect();
    Ok(FocusedMatrix { psi, doppler_grid })
}

/// Per-entry variance of `Psi` for coefficient noise variance `sigma_c2`,
/// averaged over the processed coefficients.
pub fn focused_noise_var(
    sigma_c2: f64,
    h: &[Complex64],
    kappa: &KappaSet,
    train: &PulseTrainSpec,
) -> f64 {
    focused_noise_var_with(|_| sigma_c2, h, kappa, train)
}

/// [`focused_noise_var`] for coefficient noise whose variance depends on the
/// DFT index, `var_of(k)`.
pub fn focused_noise_var_with(
    var_of: impl Fn(usize) -> f64,
    h: &[Complex64],
    kappa: &KappaSet,
    train: &PulseTrainSpec,
) -> f64 {
    let mean: f64 = kappa
        .indices()
        .iter()
        .map(|&k| var_of(k) / h[k].norm_sqr())
        .sum::<f64>()
        / kappa.len() as f64;
    train.pri * train.pri / train.n_pulses as f64 * mean
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub tau_hat: f64,
    pub nu_hat: f64,
    pub alpha_hat: Complex64,
    pub statistic: f64,
    pub delay_bin: usize,
    pub doppler_bin: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionList {
    pub detections: Vec<Detection>,
    /// The iteration cap ended the search before the test stopped it.
    pub truncated: bool,
    /// Test statistic of every iteration, including the final rejected one.
    pub statistics: Vec<f64>,
}

impl DetectionList {
    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// `F_kappa^H r` for one residual column via a zero-filled inverse FFT.
fn backproject(
    col: &[Complex64],
    kappa: &KappaSet,
    ifft: &dyn rustfft::Fft<f64>,
) -> Vec<Complex64> {
    let mut buf = vec![ZERO; kappa.n()];
    for (row, &k) in kappa.indices().iter().enumerate() {
        buf[k] = col[row];
    }
    ifft.process(&mut buf);
    buf
}

/// GLRT-stopped OMP over the `N x P` delay-Doppler grid.
///
/// Each iteration picks the cell maximizing `|f_r^H R_q|^2`, tests
/// `Gamma = |f_r^H R_q|^2 / ((sigma2 / 2) ||f_r||^2)` against `gamma`, and on
/// acceptance refits the amplitudes of that Doppler column by least squares.
/// `sigma2` is the per-entry variance of `Psi`, which makes `Gamma`
/// chi-square with two degrees of freedom on noise alone.
pub fn focused_omp(
    psi: &FocusedMatrix,
    kappa: &KappaSet,
    train: &PulseTrainSpec,
    gamma: f64,
    sigma2: f64,
    max_iter: usize,
) -> Result<DetectionList> {
    focused_omp_with(
        psi,
        kappa,
        train,
        gamma,
        sigma2,
        max_iter,
        RadarOmpOptions::default(),
    )
}

/// Settings of [`focused_omp_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadarOmpOptions {
    /// After each accepted cell, swap single delays of that Doppler column
    /// while the least-squares residual strictly drops.
    pub exchange: bool,
    /// When one Doppler column holds more than `K / 2` delays (where the fit
    /// stops being unique), look for a sparser support by restarting the
    /// greedy search from every delay.
    pub restart: bool,
    /// Drop atoms whose refit amplitude would fail the test on its own;
    /// dropped cells are not selected again.
    pub prune: bool,
}

impl Default for RadarOmpOptions {
    fn default() -> Self {
        Self {
            exchange: true,
            restart: true,
            prune: true,
        }
    }
}

/// Orthonormal basis of the columns `cols` of `f` (modified Gram-Schmidt).
fn orthonormal_columns(f: &CMat, cols: &[usize]) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for &c in cols {
        let mut v: Vec<Complex64> = f.column(c).iter().copied().collect();
        for b in &basis {
            let d: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            v.iter_mut().zip(b).for_each(|(y, x)| *y -= d * x);
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-12 {
            basis.push(v.into_iter().map(|z| z / nrm).collect());
        }
    }
    basis
}

fn project_out(basis: &[Vec<Complex64>], v: &mut [Complex64]) {
    for b in basis {
        let d: Complex64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
        v.iter_mut().zip(b).for_each(|(y, x)| *y -= d * x);
    }
}

/// Single-atom exchange: repeatedly applies the best swap of one selected
/// delay for an unselected one while the residual energy strictly drops.
fn exchange_delays(f: &CMat, y: &[Complex64], sel: &mut [usize]) {
    let n = f.ncols();
    let energy = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let residual_of = |sel: &[usize]| {
        let mut r = y.to_vec();
        project_out(&orthonormal_columns(f, sel), &mut r);
        energy(&r)
    };
    let mut current = residual_of(sel);
    for _ in 0..4 * sel.len().max(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for pos in 0..sel.len() {
            let others: Vec<usize> = sel
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != pos)
                .map(|(_, &d)| d)
                .collect();
            let basis = orthonormal_columns(f, &others);
            let mut r0 = y.to_vec();
            project_out(&basis, &mut r0);
            let e0 = energy(&r0);
            for cand in 0..n {
                if sel.contains(&cand) {
                    continue;
                }
                let mut a: Vec<Complex64> = f.column(cand).iter().copied().collect();
                project_out(&basis, &mut a);
                let aa = energy(&a);
                if aa <= 1e-12 * f.nrows() as f64 {
                    continue;
                }
                let d: Complex64 = a.iter().zip(&r0).map(|(x, z)| x.conj() * z).sum();
                let e = e0 - d.norm_sqr() / aa;
                if best.is_none_or(|b| e < b.2) {
                    best = Some((pos, cand, e));
                }
            }
        }
        match best {
            Some((pos, cand, e)) if e < current * (1.0 - 1e-9) => {
                sel[pos] = cand;
                current = e;
            }
            _ => break,
        }
    }
}

/// Next delay of an order-recursive greedy step: the column whose
/// projection off `sel` best matches the residual.
fn ormp_step(f: &CMat, y: &[Complex64], sel: &[usize]) -> Option<usize> {
    let basis = orthonormal_columns(f, sel);
    let mut r = y.to_vec();
    project_out(&basis, &mut r);
    let mut best: Option<(usize, f64)> = None;
    for c in (0..f.ncols()).filter(|c| !sel.contains(c)) {
        let mut a: Vec<Complex64> = f.column(c).iter().copied().collect();
        project_out(&basis, &mut a);
        let aa: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        if aa <= 1e-12 * f.nrows() as f64 {
            continue;
        }
        let d: Complex64 = a.iter().zip(&r).map(|(x, z)| x.conj() * z).sum();
        let score = d.norm_sqr() / aa;
        if best.is_none_or(|b| score > b.1) {
            best = Some((c, score));
        }
    }
    best.map(|b| b.0)
}

/// Sparsest support (at most `k_max` delays) found by greedy runs started
/// from every single delay, then from every pair, whose residual passes
/// `accept`.
fn restart_search(
    f: &CMat,
    y: &[Complex64],
    k_max: usize,
    accept: impl Fn(&[Complex64]) -> bool,
) -> Option<Vec<usize>> {
    let n = f.ncols();
    let passes = |sel: &[usize]| {
        let mut r = y.to_vec();
        project_out(&orthonormal_columns(f, sel), &mut r);
        accept(&r)
    };
    let mut starts: Vec<Vec<Vec<usize>>> = vec![(0..n).map(|r| vec![r]).collect()];
    if k_max >= 3 {
        starts.push(
            (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| vec![a, b]))
                .collect(),
        );
    }
    for mut runs in starts {
        for size in runs[0].len()..=k_max {
            for sel in runs.iter_mut() {
                if sel.len() < size {
                    if let Some(c) = ormp_step(f, y, sel) {
                        sel.push(c);
                    }
                }
                if passes(sel) {
                    return Some(sel.clone());
                }
            }
        }
    }
    None
}

/// [`focused_omp`] with explicit settings.
pub fn focused_omp_with(
    psi: &FocusedMatrix,
    kappa: &KappaSet,
    train: &PulseTrainSpec,
    gamma: f64,
    sigma2: f64,
    max_iter: usize,
    opts: RadarOmpOptions,
) -> Result<DetectionList> {
    let (k_len, p) = (psi.psi.nrows(), psi.psi.ncols());
    if k_len != kappa.len() || p != train.n_pulses {
        return Err(Error::DimensionMismatch(format!(
            "focused matrix is {k_len}x{p}, expected {}x{}",
            kappa.len(),
            train.n_pulses
        )));
    }
    let n = kappa.n();
    let f = partial_fourier(kappa);
    let col_energy = k_len as f64;
    let denom = if sigma2 > 0.0 {
        0.5 * sigma2 * col_energy
    } else {
        f64::MIN_POSITIVE
    };
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);

    let mut resid = psi.psi.clone();
    // phi[q][r] = |F^H R|^2 for Doppler column q
    let mut phi: Vec<Vec<f64>> = (0..p)
        .map(|q| {
            let col: Vec<Complex64> = resid.column(q).iter().copied().collect();
            backproject(&col, kappa, ifft.as_ref())
                .iter()
                .map(|z| z.norm_sqr())
                .collect()
        })
        .collect();
    let mut delays: Vec<Vec<usize>> = vec![Vec::new(); p];
    let mut pruned: Vec<Vec<usize>> = vec![Vec::new(); p];
    let mut alphas: Vec<Vec<Complex64>> = vec![Vec::new(); p];
    let mut order: Vec<(usize, usize, f64)> = Vec::new();
    let mut out = DetectionList::default();

    loop {
        if order.len() >= max_iter {
            out.truncated = true;
            break;
        }
        // lexicographic (delay, Doppler) tie-break
        let mut best: Option<(usize, usize, f64)> = None;
        for r in 0..n {
            for q in 0..p {
                if delays[q].contains(&r) || pruned[q].contains(&r) {
                    continue;
                }
                let v = phi[q][r];
                if best.is_none_or(|b| v > b.2) {
                    best = Some((r, q, v));
                }
            }
        }
        let Some((r, q, energy)) = best else { break };
        let stat = energy / denom;
        out.statistics.push(stat);
        if !(stat > gamma) {
            break;
        }
        delays[q].push(r);
        order.push((r, q, stat));
        if opts.exchange && delays[q].len() > 1 {
            let y: Vec<Complex64> = psi.psi.column(q).iter().copied().collect();
            let before = delays[q].clone();
            exchange_delays(&f, &y, &mut delays[q]);
            // keep the detection order consistent with swapped delays
            for (old, new) in before.iter().zip(delays[q].clone()) {
                if *old != new {
                    if let Some(o) = order.iter_mut().find(|o| o.1 == q && o.0 == *old) {
                        o.0 = new;
                    }
                }
            }
        }
        if opts.restart && 2 * delays[q].len() > k_len {
            let y: Vec<Complex64> = psi.psi.column(q).iter().copied().collect();
            let accept = |r: &[Complex64]| {
                let peak = backproject(r, kappa, ifft.as_ref())
                    .iter()
                    .map(|z| z.norm_sqr())
                    .fold(0.0, f64::max);
                !(peak / denom > gamma)
            };
            if let Some(sparse) = restart_search(&f, &y, k_len / 2, accept) {
                let mf = backproject(&y, kappa, ifft.as_ref());
                order.retain(|o| o.1 != q);
                for &d in &sparse {
                    order.push((d, q, mf[d].norm_sqr() / denom));
                }
                delays[q] = sparse;
            }
        }
        let cols: Vec<usize> = delays[q].clone();
        let a = CMat::from_fn(k_len, cols.len(), |i, j| f[(i, cols[j])]);
        let y = CMat::from_fn(k_len, 1, |i, _| psi.psi[(i, q)]);
        let x = match least_squares(&a, &y) {
            Ok(x) => x,
            Err(_) => {
                // dependent atoms: the new cell adds nothing
                delays[q].pop();
                order.pop();
                break;
            }
        };
        let mut x = x;
        let mut a = a;
        if opts.prune {
            let weak: Vec<usize> = (0..cols.len())
                .filter(|&j| col_energy * col_energy * x[(j, 0)].norm_sqr() / denom <= gamma)
                .collect();
            if !weak.is_empty() && weak.len() < cols.len() {
                for &j in &weak {
                    pruned[q].push(cols[j]);
                    order.retain(|o| !(o.1 == q && o.0 == cols[j]));
                }
                delays[q].retain(|d| !pruned[q].contains(d));
                let keep = delays[q].clone();
                a = CMat::from_fn(k_len, keep.len(), |i, j| f[(i, keep[j])]);
                x = least_squares(&a, &y)?;
            }
        }
        alphas[q] = x.iter().copied().collect();
        let fitted = &a * &x;
        for i in 0..k_len {
            resid[(i, q)] = psi.psi[(i, q)] - fitted[(i, 0)];
        }
        let col: Vec<Complex64> = resid.column(q).iter().copied().collect();
        phi[q] = backproject(&col, kappa, ifft.as_ref())
            .iter()
            .map(|z| z.norm_sqr())
            .collect();
    }

    for (r, q, stat) in order {
        let pos = delays[q]
            .iter()
            .position(|&d| d == r)
            .expect("selected delay");
        out.detections.push(Detection {
            tau_hat: train.pri * r as f64 / n as f64,
            nu_hat: doppler_grid_value(q, train),
            alpha_hat: alphas[q][pos],
            statistic: stat,
            delay_bin: r,
            doppler_bin: q,
        });
    }
    Ok(out)
}

/// Sample-count bounds for recovering `l` targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Requirements {
    pub k_min: usize,
    pub p_min: usize,
    pub total: usize,
    /// Coefficients available in the transmitted bands, `sum ceil(N B_i / B_h)`.
    pub b_tot: usize,
    pub feasible: bool,
}

pub fn min_requirements(l: usize, n: usize, b_h: f64, band_widths: &[f64]) -> Requirements {
    let b_tot: usize = band_widths
        .iter()
        .map(|&b| ceil_tol(n as f64 * b / b_h).max(0.0) as usize)
        .sum();
    Requirements {
        k_min: 2 * l,
        p_min: 2 * l,
        total: 4 * l * l,
        b_tot,
        feasible: b_tot >= 2 * l,
    }
}

/// Per-target outcome of the hit-or-miss score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitOrMiss {
    pub hit_rate: f64,
    pub per_target: Vec<bool>,
    /// Matched estimate index for every target.
    pub matched: Vec<Option<usize>>,
    /// Delay error (seconds) of every matched target.
    pub delay_errors: Vec<f64>,
}

fn wrapped(d: f64, period: f64) -> f64 {
    let x = d.rem_euclid(period);
    if x > period / 2.0 {
        x - period
    } else {
        x
    }
}

/// A target is hit when an unused estimate falls inside the ellipse with
/// semi-axes of three delay bins (`3 / B_h`) and three Doppler bins
/// (`3 / (P tau)`). Pairs are matched nearest first. Delay and Doppler are
/// compared modulo their unambiguous ranges `tau` and `1 / tau`.
pub fn hit_or_miss(
    est: &DetectionList,
    truth: &TargetScene,
    b_h: f64,
    train: &PulseTrainSpec,
) -> HitOrMiss {
    let l = truth.len();
    let tau_ax = 3.0 / b_h;
    let nu_ax = 3.0 * train.doppler_resolution();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (t, tgt) in truth.targets.iter().enumerate() {
        for (e, d) in est.detections.iter().enumerate() {
            let dt = wrapped(d.tau_hat - tgt.tau, train.pri) / tau_ax;
            let dn = wrapped(d.nu_hat - tgt.nu, 1.0 / train.pri) / nu_ax;
            let dist = dt * dt + dn * dn;
            if dist <= 1.0 {
                pairs.push((dist, t, e));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut matched = vec![None; l];
    let mut used = vec![false; est.len()];
    for (_, t, e) in pairs {
        if matched[t].is_none() && !used[e] {
            matched[t] = Some(e);
            used[e] = true;
        }
    }
    let per_target: Vec<bool> = matched.iter().map(Option::is_some).collect();
    let hits = per_target.iter().filter(|&&h| h).count();
    let delay_errors = matched
        .iter()
        .enumerate()
        .filter_map(|(t, m)| {
            m.map(|e| wrapped(est.detections[e].tau_hat - truth.targets[t].tau, train.pri))
        })
        .collect();
    HitOrMiss {
        hit_rate: if l == 0 { 1.0 } else { hits as f64 / l as f64 },
        per_target,
        matched,
        delay_errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_examples() {
        let n = 100;
        let b_h = 100.0;
        let full = FrequencySet::from_pairs(&[[-50.0, 50.0]]).unwrap();
        assert_eq!(make_kappa(&full, b_h, n).unwrap(), KappaSet::full(n));
        let one = FrequencySet::from_pairs(&[[3.2, 4.2]]).unwrap();
        assert_eq!(make_kappa(&one, b_h, n).unwrap().indices(), &[4]);
        let neg = FrequencySet::from_pairs(&[[-2.5, -0.5]]).unwrap();
        assert_eq!(make_kappa(&neg, b_h, n).unwrap().indices(), &[98, 99]);
        assert!(make_kappa(&FrequencySet::empty(), b_h, n).is_err());
    }

    #[test]
    fn infinite_threshold_detects_nothing() {
        let kappa = KappaSet::full(8);
        let train = PulseTrainSpec::new(1.0, 4).unwrap();
        let psi = FocusedMatrix {
            psi: CMat::from_element(8, 4, Complex64::new(1.0, 0.0)),
            doppler_grid: vec![0.0; 4],
        };
        let out = focused_omp(&psi, &kappa, &train, f64::INFINITY, 1.0, 10).unwrap();
        assert!(out.is_empty());
        assert!(!out.truncated);
    }

    #[test]
    fn requirements() {
        let r = min_requirements(10, 1620, 1.62e9, &[81e6; 4]);
        assert_eq!((r.k_min, r.p_min, r.total), (20, 20, 400));
        assert_eq!(r.b_tot, 324);
        assert!(r.feasible);
        assert!(min_requirements(0, 10, 1.0, &[]).feasible);
        assert!(!min_requirements(3, 10, 1.0, &[0.4]).feasible);
    }

    #[test]
    fn displaced_estimate_misses() {
        let train = PulseTrainSpec::new(1e-6, 10).unwrap();
        let b_h = 100e6;
        let truth = TargetScene::new(
            vec![crate::signal::Target {
                tau: 0.3e-6,
                nu: 0.0,
                alpha: Complex64::new(1.0, 0.0),
            }],
            &train,
        )
        .unwrap();
        let mk = |tau: f64| DetectionList {
            detections: vec![Detection {
                tau_hat: tau,
                nu_hat: 0.0,
                alpha_hat: Complex64::new(1.0, 0.0),
                statistic: 1.0,
                delay_bin: 0,
                doppler_bin: 0,
            }],
            ..Default::default()
        };
        assert_eq!(hit_or_miss(&mk(0.3e-6), &truth, b_h, &train).hit_rate, 1.0);
        assert_eq!(
            hit_or_miss(&mk(0.3e-6 + 4.0 / b_h), &truth, b_h, &train).hit_rate,
            0.0
        );
        assert_eq!(
            hit_or_miss(&mk(0.3e-6 + 2.0 / b_h), &truth, b_h, &train).hit_rate,
            1.0
        );
    }
}
