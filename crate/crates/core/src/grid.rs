use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Number of spectral slices `N = 2 * ceil((f_nyq + f_s) / (2 f_p))`.
pub fn compute_n_slices(f_nyq: f64, f_s: f64, f_p: f64) -> Result<usize> {
    if !(f_nyq > 0.0 && f_s > 0.0 && f_p > 0.0) {
        return invalid(format!(
            "rates must be positive (f_nyq={f_nyq}, f_s={f_s}, f_p={f_p})"
        ));
    }
    if f_s < f_p {
        return invalid(format!("f_s ({f_s}) must be at least f_p ({f_p})"));
    }
    let ratio = (f_nyq + f_s) / (2.0 * f_p);
    Ok(2 * ceil_tol(ratio) as usize)
}

/// `ceil` that ignores floating-point fuzz just above an integer.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Discretization of the two-sided comm spectrum into `N` slices of width
/// `f_p`, each sampled on `n_grid` frequency bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridParams", into = "GridParams")]
pub struct GridSpec {
    f_nyq: f64,
    f_p: f64,
    f_s: f64,
    n_grid: usize,
    n_slices: usize,
}

/// Serialized form of [`GridSpec`]; `n_slices` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub f_nyq: f64,
    pub f_p: f64,
    pub f_s: f64,
    pub n_grid: usize,
}

impl GridSpec {
    pub fn new(f_nyq: f64, f_p: f64, f_s: f64, n_grid: usize) -> Result<Self> {
        let n_slices = compute_n_slices(f_nyq, f_s, f_p)?;
        if n_grid < 2 || n_grid % 2 != 0 {
            return invalid(format!("n_grid must be even and >= 2, got {n_grid}"));
        }
        let q = f_s / f_p;
        if (q - q.round()).abs() > 1e-9 * q {
            return invalid(format!(
                "f_s/f_p must be an integer oversampling factor, got {q}"
            ));
        }
        Ok(Self {
            f_nyq,
            f_p,
            f_s,
            n_grid,
            n_slices,
        })
    }

    pub fn f_nyq(&self) -> f64 {
        self.f_nyq
    }

    pub fn f_p(&self) -> f64 {
        self.f_p
    }

    pub fn f_s(&self) -> f64 {
        self.f_s
    }

    /// Bins per slice width `f_p`.
    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    /// Slice count `N`.
    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    /// Integer ratio `f_s / f_p`.
    pub fn oversampling(&self) -> usize {
        (self.f_s / self.f_p).round() as usize
    }

    /// Bins spanning `F_s = [-f_s/2, f_s/2)`.
    pub fn bins_per_channel(&self) -> usize {
        self.oversampling() * self.n_grid
    }

    pub fn bin_width(&self) -> f64 {
        self.f_p / self.n_grid as f64
    }

    /// Length of the Nyquist-grid spectrum holding all slices.
    pub fn nyquist_len(&self) -> usize {
        self.n_slices * self.n_grid
    }

    /// Rate of the Nyquist-grid time samples, `N f_p`.
    pub fn grid_rate(&self) -> f64 {
        self.n_slices as f64 * self.f_p
    }

    pub fn half(&self) -> i64 {
        self.n_slices.div_ceil(2) as i64
    }

    /// Centre frequency `(i - ceil(N/2)) f_p` of slice `i`.
    pub fn slice_center(&self, i: usize) -> f64 {
        (i as i64 - self.half()) as f64 * self.f_p
    }

    /// Slice whose centre is the negative of slice `i`'s, if it exists.
    pub fn mirror_slice(&self, i: usize) -> Option<usize> {
        let m = 2 * self.half() - i as i64;
        (0..self.n_slices as i64).contains(&m).then_some(m as usize)
    }

    /// Signed Nyquist-grid bin index of in-channel bin `g` of slice `i`.
    pub fn global_bin(&self, i: usize, g: usize) -> i64 {
        (i as i64 - self.half()) * self.n_grid as i64 + g as i64
            - (self.bins_per_channel() / 2) as i64
    }

    /// Position of a signed bin index in a length-`nyquist_len` array.
    pub fn wrap(&self, k: i64) -> usize {
        k.rem_euclid(self.nyquist_len() as i64) as usize
    }

    /// Frequency of a signed bin index.
    pub fn bin_freq(&self, k: i64) -> f64 {
        k as f64 * self.bin_width()
    }

    /// Signed bin index nearest to `f`.
    pub fn freq_bin(&self, f: f64) -> i64 {
        (f / self.bin_width()).round() as i64
    }

    /// Signed bin range `[k_lo, k_hi)` covered by slice `i`'s own width `f_p`.
    pub fn slice_bins(&self, i: usize) -> (i64, i64) {
        let c = (i as i64 - self.half()) * self.n_grid as i64;
        let h = (self.n_grid / 2) as i64;
        (c - h, c + h)
    }

    /// Slice owning a signed bin index (each bin belongs to exactly one slice).
    pub fn slice_of_bin(&self, k: i64) -> Option<usize> {
        let g = self.n_grid as i64;
        let i = (k + g / 2).div_euclid(g) + self.half();
        (0..self.n_slices as i64).contains(&i).then_some(i as usize)
    }
}

impl TryFrom<GridParams> for GridSpec {
    type Error = crate::Error;

    fn try_from(p: GridParams) -> Result<Self> {
        GridSpec::new(p.f_nyq, p.f_p, p.f_s, p.n_grid)
    }
}

impl From<GridSpec> for GridParams {
    fn from(g: GridSpec) -> Self {
        GridParams {
            f_nyq: g.f_nyq,
            f_p: g.f_p,
            f_s: g.f_s,
            n_grid: g.n_grid,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_slices_examples() {
        assert_eq!(compute_n_slices(10e9, 20e6, 20e6).unwrap(), 502);
        assert_eq!(compute_n_slices(1.0, 1.0, 1.0).unwrap(), 2);
        assert_eq!(compute_n_slices(5.0, 5.0, 5.0).unwrap(), 2);
        // the 10 GHz / 154 MHz configuration with f_s = f_p
        assert_eq!(compute_n_slices(10e9, 154e6, 154e6).unwrap(), 66);
    }

    #[test]
    fn n_slices_rejects_bad_rates() {
        assert!(compute_n_slices(10e9, 10e6, 20e6).is_err());
        assert!(compute_n_slices(0.0, 1.0, 1.0).is_err());
        assert!(compute_n_slices(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn grid_rejects_fs_below_fp() {
        assert!(GridSpec::new(1e9, 20e6, 10e6, 16).is_err());
        assert!(GridSpec::new(1e9, 20e6, 30e6, 16).is_err());
        assert!(GridSpec::new(1e9, 20e6, 20e6, 15).is_err());
        let g = GridSpec::new(1e9, 20e6, 60e6, 16).unwrap();
        assert_eq!(g.oversampling(), 3);
        assert!(g.n_slices() as f64 * g.f_p() >= g.f_nyq());
    }

    #[test]
    fn slice_geometry() {
        let g = GridSpec::new(1e9, 20e6, 20e6, 8).unwrap();
        let n = g.n_slices();
        assert_eq!(n, 52);
        assert_eq!(g.slice_center(n / 2), 0.0);
        assert_eq!(g.mirror_slice(n / 2 + 3), Some(n / 2 - 3));
        assert_eq!(g.mirror_slice(0), None);
        for i in 0..n {
            let (lo, hi) = g.slice_bins(i);
            for k in lo..hi {
                assert_eq!(g.slice_of_bin(k), Some(i));
            }
            assert_eq!(g.global_bin(i, 0), lo);
        }
    }

    #[test]
    fn serde_roundtrip_derives_n() {
        let g = GridSpec::new(1e9, 20e6, 20e6, 8).unwrap();
        let js = serde_json::to_string(&g).unwrap();
        assert!(!js.contains("n_slices"));
        let back: GridSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back, g);
    }
}
