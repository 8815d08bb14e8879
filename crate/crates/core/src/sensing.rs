//! Comm spectrum sensing from MWC samples: frame construction, greedy
//! joint-sparse support recovery (plain and seeded with the radar slices),
//! slice recovery and conversion back to frequencies.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::freqset::{FrequencyInterval, FrequencySet};
use crate::grid::GridSpec;
use crate::linalg::{condition_number, fro, least_squares, select_columns, CMat, ZERO};
use crate::mwc::SensingMatrix;

/// Default relative eigenvalue floor for [`build_frame`].
pub const EIG_TOL: f64 = 1e-6;

/// Largest tolerated condition number of the known-support submatrix.
pub const MAX_COND: f64 = 1e12;

/// Sorted set of slice indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SliceSupport {
    indices: Vec<usize>,
}

impl SliceSupport {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates that every index is below `n`; duplicates are dropped.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return invalid(format!("slice index {bad} out of range 0..{n}"));
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { indices })
    }

    pub(crate) fn from_unchecked(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn union(&self, other: &SliceSupport) -> SliceSupport {
        let mut v = self.indices.clone();
        v.extend_from_slice(&other.indices);
        Self::from_unchecked(v)
    }

    pub fn difference(&self, other: &SliceSupport) -> SliceSupport {
        Self {
            indices: self
                .indices
                .iter()
                .copied()
                .filter(|&i| !other.contains(i))
                .collect(),
        }
    }

    pub fn intersection_len(&self, other: &SliceSupport) -> usize {
        self.indices.iter().filter(|&&i| other.contains(i)).count()
    }

    /// Adds the mirror of every index (real signals occupy both).
    pub fn symmetrized(&self, grid: &GridSpec) -> SliceSupport {
        let mut v = self.indices.clone();
        v.extend(self.indices.iter().filter_map(|&i| grid.mirror_slice(i)));
        Self::from_unchecked(v)
    }
}

/// Fraction of true indices present in the detection (1 for an empty truth).
pub fn detection_ratio(detected: &SliceSupport, truth: &SliceSupport) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    detected.intersection_len(truth) as f64 / truth.len() as f64
}

/// Frame `V` with `V V^H = Q` on the retained eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    pub v: CMat,
}

impl FrameMatrix {
    pub fn rank(&self) -> usize {
        self.v.ncols()
    }
}

/// Correlation `Q = sum_n z[n] z[n]^H` and its eigen-frame.
///
/// Works on either the per-bin spectra or the time samples of the channels;
/// both span the same subspace.
pub fn build_frame(z: &CMat, eig_tol: f64) -> FrameMatrix {
    let m = z.nrows();
    let q = z * z.adjoint();
    let q = (&q + q.adjoint()) * Complex64::new(0.5, 0.0);
    if q.iter().all(|x| *x == ZERO) {
        return FrameMatrix {
            v: CMat::zeros(m, 0),
        };
    }
    let eig = SymmetricEigen::new(q);
    let lmax = eig.eigenvalues.max();
    let mut keep: Vec<usize> = (0..m)
        .filter(|&i| eig.eigenvalues[i] > eig_tol * lmax)
        .collect();
    // descending eigenvalue order
    keep.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let v = CMat::from_fn(m, keep.len(), |r, c| {
        eig.eigenvectors[(r, keep[c])] * eig.eigenvalues[keep[c]].sqrt()
    });
    FrameMatrix { v }
}

/// Atom scoring in the greedy loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    /// `||a_j^H R||^2 / ||a_j||^2`, the classical simultaneous OMP rule.
    #[default]
    Correlation,
    /// Columns projected off the current support and scored against an
    /// orthonormal basis of the residual range (rank-aware order-recursive
    /// matching pursuit). Exact whenever the signal matrix has full row rank
    /// on its support.
    RankAware,
}

/// Settings shared by [`somp`] and [`omp_pks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyOptions {
    pub rule: SelectionRule,
    /// Select a slice together with its mirror.
    pub mirror_pairs: bool,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            rule: SelectionRule::Correlation,
            mirror_pairs: false,
        }
    }
}

/// Greedy joint-sparse support recovery of `V = A X` with at most
/// `max_sparsity` selected atoms. Stops early once the residual falls below
/// `res_tol * ||V||`.
pub fn somp(
    v: &FrameMatrix,
    a: &SensingMatrix,
    max_sparsity: usize,
    res_tol: f64,
) -> Result<SliceSupport> {
    somp_with(v, a, max_sparsity, res_tol, GreedyOptions::default(), None)
}

pub fn somp_with(
    v: &FrameMatrix,
    a: &SensingMatrix,
    max_sparsity: usize,
    res_tol: f64,
    opts: GreedyOptions,
    grid: Option<&GridSpec>,
) -> Result<SliceSupport> {
    if max_sparsity > a.m() {
        return invalid(format!(
            "sparsity budget {max_sparsity} exceeds channel count {}",
            a.m()
        ));
    }
    greedy(v, a, &[], max_sparsity, res_tol, opts, grid)
}

/// OMP seeded with the known radar slices `s_r`: the residual starts as
/// `V - A_R A_R^+ V` and up to `k_extra` further atoms are added.
pub fn omp_pks(
    v: &FrameMatrix,
    a: &SensingMatrix,
    s_r: &SliceSupport,
    k_extra: usize,
    res_tol: f64,
) -> Result<SliceSupport> {
    omp_pks_with(v, a, s_r, k_extra, res_tol, GreedyOptions::default(), None)
}

pub fn omp_pks_with(
    v: &FrameMatrix,
    a: &SensingMatrix,
    s_r: &SliceSupport,
    k_extra: usize,
    res_tol: f64,
    opts: GreedyOptions,
    grid: Option<&GridSpec>,
) -> Result<SliceSupport> {
    if let Some(&bad) = s_r.indices().iter().find(|&&i| i >= a.n()) {
        return invalid(format!("radar slice {bad} outside 0..{}", a.n()));
    }
    if s_r.len() + 1 > a.m() {
        return invalid(format!(
            "{} channels cannot host {} known slices plus one unknown",
            a.m(),
            s_r.len()
        ));
    }
    if !s_r.is_empty() {
        let cond = condition_number(&select_columns(&a.a, s_r.indices()));
        if !(cond <= MAX_COND) {
            return Err(Error::IllConditioned(cond));
        }
    }
    greedy(v, a, s_r.indices(), k_extra, res_tol, opts, grid)
}

fn residual(v: &CMat, a: &CMat, support: &[usize]) -> Result<CMat> {
    if support.is_empty() {
        return Ok(v.clone());
    }
    let a_s = select_columns(a, support);
    let x = least_squares(&a_s, v)?;
    Ok(v - a_s * x)
}

/// Orthonormal basis for the column range of `m` (relative floor 1e-10).
fn range_basis(m: &CMat) -> CMat {
    if m.ncols() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > 1e-10 * smax)
        .collect();
    select_columns(&u, &keep)
}

fn greedy(
    v: &FrameMatrix,
    a: &SensingMatrix,
    seed_support: &[usize],
    budget: usize,
    res_tol: f64,
    opts: GreedyOptions,
    grid: Option<&GridSpec>,
) -> Result<SliceSupport> {
    let a_mat = &a.a;
    let (m, n) = (a.m(), a.n());
    if v.v.nrows() != m {
        return Err(Error::DimensionMismatch(format!(
            "frame has {} rows, sensing matrix {}",
            v.v.nrows(),
            m
        )));
    }
    let mut support: Vec<usize> = seed_support.to_vec();
    let v_norm = fro(&v.v);
    if v.rank() == 0 || v_norm == 0.0 {
        return Ok(SliceSupport::from_unchecked(support));
    }
    // candidate atoms: single columns or mirror pairs
    let atoms: Vec<Vec<usize>> = match (opts.mirror_pairs, grid) {
        (true, Some(g)) => (0..n)
            .filter_map(|i| match g.mirror_slice(i) {
                Some(j) if j < i => None,
                Some(j) if j != i => Some(vec![i, j]),
                _ => Some(vec![i]),
            })
            .collect(),
        (true, None) => return invalid("mirror pairing needs the slice grid"),
        _ => (0..n).map(|i| vec![i]).collect(),
    };
    let col_norms: Vec<f64> = (0..n).map(|j| a_mat.column(j).norm()).collect();
    let mut r = residual(&v.v, a_mat, &support)?;
    let mut added = 0;
    while added < budget {
        if fro(&r) <= res_tol * v_norm {
            break;
        }
        let scores: Vec<f64> = match opts.rule {
            SelectionRule::Correlation => {
                let corr = a_mat.adjoint() * &r;
                (0..n)
                    .map(|j| {
                        let e: f64 = corr.row(j).iter().map(|z| z.norm_sqr()).sum();
                        if col_norms[j] > 0.0 {
                            e / (col_norms[j] * col_norms[j])
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            SelectionRule::RankAware => {
                let q_s = range_basis(&select_columns(a_mat, &support));
                let a_perp = a_mat - &q_s * (q_s.adjoint() * a_mat);
                let u_r = range_basis(&r);
                let corr = u_r.adjoint() * &a_perp;
                (0..n)
                    .map(|j| {
                        let nn = a_perp.column(j).norm_squared();
                        if nn > 1e-20 * col_norms[j] * col_norms[j] {
                            corr.column(j).norm_squared() / nn
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        };
        let mut best: Option<(usize, f64)> = None;
        for (idx, atom) in atoms.iter().enumerate() {
            if atom.iter().all(|j| support.contains(j)) {
                continue;
            }
            let s: f64 = atom
                .iter()
                .filter(|j| !support.contains(j))
                .map(|&j| scores[j])
                .sum();
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((idx, s));
            }
        }
        let Some((idx, score)) = best else { break };
        if !(score > 1e-24) {
            break;
        }
        let before = support.len();
        support.extend(
            atoms[idx]
                .iter()
                .filter(|j| !support.contains(j))
                .copied()
                .collect::<Vec<_>>(),
        );
        if support.len() > m {
            support.truncate(before);
            break;
        }
        match residual(&v.v, a_mat, &support) {
            Ok(next) => r = next,
            Err(_) => {
                support.truncate(before);
                break;
            }
        }
        added += 1;
    }
    Ok(SliceSupport::from_unchecked(support))
}

/// Slices a known band set leaks into: `n` with
/// `|n - f/f_p - ceil(N/2)| < (f_s + B) / (2 f_p)` for some band of centre
/// `f` and width `B`, plus the mirror slices.
pub fn radar_slice_support(f_r: &FrequencySet, grid: &GridSpec) -> SliceSupport {
    let mut idx = Vec::new();
    let half = grid.half() as f64;
    for iv in f_r.intervals() {
        let reach = (grid.f_s() + iv.width()) / (2.0 * grid.f_p());
        let centre = iv.center() / grid.f_p() + half;
        for n in 0..grid.n_slices() {
            if (n as f64 - centre).abs() < reach {
                idx.push(n);
            }
        }
    }
    SliceSupport::from_unchecked(idx).symmetrized(grid)
}

/// Least-squares slice estimate, zero outside the support.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceEstimate {
    /// `N x T` rows; for frequency-domain input `T` is the in-channel bin count.
    pub x_hat: CMat,
    pub support: SliceSupport,
}

/// `x_S = A_S^+ z`, other rows zero.
pub fn recover_slices(z: &CMat, a: &SensingMatrix, s: &SliceSupport) -> Result<SliceEstimate> {
    if z.nrows() != a.m() {
        return Err(Error::DimensionMismatch(format!(
            "samples have {} channels, sensing matrix {}",
            z.nrows(),
            a.m()
        )));
    }
    let mut x_hat = CMat::zeros(a.n(), z.ncols());
    if !s.is_empty() {
        if let Some(&bad) = s.indices().iter().find(|&&i| i >= a.n()) {
            return invalid(format!("slice {bad} outside 0..{}", a.n()));
        }
        let xs = least_squares(&select_columns(&a.a, s.indices()), z)?;
        for (row, &i) in s.indices().iter().enumerate() {
            x_hat.set_row(i, &xs.row(row));
        }
    }
    Ok(SliceEstimate {
        x_hat,
        support: s.clone(),
    })
}

/// Union of the slice bands `[(i - ceil(N/2)) f_p - f_p/2, ... + f_p/2)`.
pub fn support_to_freqs(s: &SliceSupport, grid: &GridSpec) -> FrequencySet {
    s.indices()
        .iter()
        .filter_map(|&i| FrequencyInterval::centered(grid.slice_center(i), grid.f_p()).ok())
        .collect()
}

/// Energy detection inside the recovered slices.
///
/// The PSD of each slice's own bins is smoothed over three bins; bins within
/// `thresh_db` of the strongest bin are kept, gaps of at most two bins are
/// closed and each kept bin `k` contributes `[k - 1/2, k + 1/2)` bin widths.
/// An infinite threshold returns whole slices.
pub fn refine_support_by_energy(
    x_hat: &SliceEstimate,
    s: &SliceSupport,
    grid: &GridSpec,
    thresh_db: f64,
) -> FrequencySet {
    refine_support_by_energy_excluding(x_hat, s, grid, thresh_db, &FrequencySet::empty())
}

/// Union of the bin extents `[k - 1/2, k + 1/2)` that meet `f`.
pub fn touched_bins(f: &FrequencySet, grid: &GridSpec) -> FrequencySet {
    let w = grid.bin_width();
    f.intervals()
        .iter()
        .filter_map(|iv| {
            let lo = (iv.lo() / w + 0.5).floor();
            let hi = (iv.hi() / w - 0.5).ceil();
            FrequencyInterval::new((lo - 0.5) * w, (hi + 0.5) * w).ok()
        })
        .collect()
}

/// [`refine_support_by_energy`] with the bins meeting `exclude` left out of
/// the smoothing, the peak and the result (another emitter occupies them).
pub fn refine_support_by_energy_excluding(
    x_hat: &SliceEstimate,
    s: &SliceSupport,
    grid: &GridSpec,
    thresh_db: f64,
    exclude: &FrequencySet,
) -> FrequencySet {
    let blocked = touched_bins(exclude, grid);
    if thresh_db == f64::INFINITY {
        return support_to_freqs(s, grid).difference(&blocked);
    }
    let g = grid.n_grid();
    let off = (grid.bins_per_channel() - g) / 2;
    let w = grid.bin_width();
    let mut psd: Vec<(i64, f64)> = Vec::new();
    for &i in s.indices() {
        let row = x_hat.x_hat.row(i);
        let (lo, _) = grid.slice_bins(i);
        let raw: Vec<Option<f64>> = (0..g)
            .map(|c| {
                (!blocked.contains((lo + c as i64) as f64 * w)).then(|| row[off + c].norm_sqr())
            })
            .collect();
        for c in 0..g {
            if raw[c].is_none() {
                continue;
            }
            let a = c.saturating_sub(1);
            let b = (c + 1).min(g - 1);
            let near: Vec<f64> = raw[a..=b].iter().flatten().copied().collect();
            psd.push((lo + c as i64, near.iter().sum::<f64>() / near.len() as f64));
        }
    }
    let peak = psd.iter().map(|p| p.1).fold(0.0, f64::max);
    if peak <= 0.0 {
        return FrequencySet::empty();
    }
    let floor = peak * 10f64.powf(-thresh_db / 10.0);
    let mut kept: Vec<i64> = psd.iter().filter(|p| p.1 >= floor).map(|p| p.0).collect();
    kept.sort_unstable();
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < kept.len() {
        let start = kept[i];
        let mut end = start;
        while i + 1 < kept.len() && kept[i + 1] - end <= 3 {
            i += 1;
            end = kept[i];
        }
        if let Ok(iv) = FrequencyInterval::new((start as f64 - 0.5) * w, (end as f64 + 0.5) * w) {
            intervals.push(iv);
        }
        i += 1;
    }
    FrequencySet::from_intervals(intervals).difference(&blocked)
}

/// Nyquist-rate time samples `x[n]`, `n = 0..N G`, rebuilt from a
/// frequency-domain slice estimate: each slice's own bins are interpolated to
/// the Nyquist grid, modulated to the slice centre and summed.
pub fn nyquist_reconstruct(x_hat: &SliceEstimate, grid: &GridSpec) -> Vec<Complex64> {
    let g = grid.n_grid();
    let len = grid.nyquist_len();
    let off = (grid.bins_per_channel() - g) / 2;
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(len);
    let mut out = vec![ZERO; len];
    let scale = 1.0 / len as f64;
    let half = (g / 2) as i64;
    for &i in x_hat.support.indices() {
        let row = x_hat.x_hat.row(i);
        if row.iter().all(|z| *z == ZERO) {
            continue;
        }
        // zero-padded baseband spectrum of this slice
        let mut buf = vec![ZERO; len];
        for c in 0..g {
            let k = c as i64 - half;
            buf[k.rem_euclid(len as i64) as usize] = row[off + c];
        }
        ifft.process(&mut buf);
        let shift = (i as i64 - grid.half()) * g as i64;
        for (n, s) in buf.iter().enumerate() {
            let ph = 2.0 * PI * ((shift * n as i64).rem_euclid(len as i64)) as f64 / len as f64;
            out[n] += s * Complex64::from_polar(scale, ph);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn touched_bins_cover_partial_overlaps() {
        let grid = GridSpec::new(1.0e9, 50e6, 50e6, 16).unwrap();
        let w = grid.bin_width();
        let f = FrequencySet::from_pairs(&[[0.2 * w, 1.2 * w]]).unwrap();
        assert_eq!(touched_bins(&f, &grid), FrequencySet::from_pairs(&[[-0.5 * w, 1.5 * w]]).unwrap());
        let exact = FrequencySet::from_pairs(&[[0.5 * w, 1.5 * w]]).unwrap();
        assert_eq!(touched_bins(&exact, &grid), exact);
    }

    #[test]
    fn excluded_bins_leave_the_peak_and_the_result() {
        let grid = GridSpec::new(1.0e9, 50e6, 50e6, 16).unwrap();
        let (g, w) = (grid.n_grid(), grid.bin_width());
        let off = (grid.bins_per_channel() - g) / 2;
        let i = 3;
        let lo = grid.slice_bins(i).0;
        let mut x_hat = CMat::zeros(grid.n_slices(), grid.bins_per_channel());
        for c in 4..8 {
            x_hat[(i, off + c)] = Complex64::new(1.0, 0.0);
        }
        x_hat[(i, off + 12)] = Complex64::new(10.0, 0.0);
        let est = SliceEstimate {
            x_hat,
            support: SliceSupport::new(vec![i], grid.n_slices()).unwrap(),
        };
        let bin = |k: i64| FrequencySet::from_pairs(&[[(k as f64 - 0.5) * w, (k as f64 + 0.5) * w]]).unwrap();
        // the strong bin hides the weak band
        let plain = refine_support_by_energy(&est, &est.support, &grid, 10.0);
        assert!(!plain.intersects(&bin(lo + 5)));
        let strong = FrequencySet::from_pairs(&[[(lo + 12) as f64 * w - 1.0, (lo + 12) as f64 * w + 1.0]]).unwrap();
        let got = refine_support_by_energy_excluding(&est, &est.support, &grid, 10.0, &strong);
        let want = FrequencySet::from_pairs(&[[(lo as f64 + 2.5) * w, (lo as f64 + 8.5) * w]]).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn support_basics() {
        let s = SliceSupport::new(vec![5, 1, 5, 3], 6).unwrap();
        assert_eq!(s.indices(), &[1, 3, 5]);
        assert!(SliceSupport::new(vec![6], 6).is_err());
        let t = SliceSupport::new(vec![3, 4], 6).unwrap();
        assert_eq!(s.union(&t).indices(), &[1, 3, 4, 5]);
        assert_eq!(s.intersection_len(&t), 1);
        assert_eq!(detection_ratio(&s, &t), 0.5);
        assert_eq!(detection_ratio(&s, &SliceSupport::empty()), 1.0);
    }

    #[test]
    fn zero_input_gives_rank_zero_frame() {
        let z = CMat::zeros(4, 10);
        assert_eq!(build_frame(&z, EIG_TOL).rank(), 0);
    }

    #[test]
    fn rank_one_frame_reproduces_q() {
        let col = CMat::from_fn(4, 1, |r, _| Complex64::new(r as f64 + 1.0, -(r as f64)));
        let row = CMat::from_fn(1, 6, |_, c| Complex64::new(1.0, c as f64));
        let z = &col * &row;
        let f = build_frame(&z, EIG_TOL);
        assert_eq!(f.rank(), 1);
        let q = &z * z.adjoint();
        assert!(fro(&(&f.v * f.v.adjoint() - &q)) < 1e-10 * fro(&q));
    }

    #[test]
    fn center_slice_is_baseband() {
        let g = GridSpec::new(1e9, 20e6, 20e6, 8).unwrap();
        let s = SliceSupport::new(vec![g.half() as usize], g.n_slices()).unwrap();
        assert_eq!(support_to_freqs(&s, &g).to_pairs(), vec![[-10e6, 10e6]]);
        let adj = SliceSupport::new(vec![30, 31], g.n_slices()).unwrap();
        assert_eq!(support_to_freqs(&adj, &g).len(), 1);
    }
}
