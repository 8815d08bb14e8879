//! Modulated wideband converter model: periodic ±1 mixing sequences, the
//! sensing matrix of their Fourier coefficients, channel outputs and rate
//! accounting.

use std::f64::consts::PI;
use std::io::{BufRead, Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::linalg::{CMat, ZERO};
use crate::rng::{complex_gaussian, rng_from_seed};
use crate::signal::SliceSpectrum;

/// One period of each channel's piecewise-constant ±1 mixing waveform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingSequenceSet {
    m: usize,
    n_chips: usize,
    /// Row-major `m x n_chips` signs.
    signs: Vec<i8>,
}

impl MixingSequenceSet {
    /// User-supplied sign patterns, one row per channel.
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let m = rows.len();
        let n_chips = rows.first().map_or(0, Vec::len);
        if m == 0 || n_chips == 0 {
            return invalid("mixing sequences need at least one channel and one chip");
        }
        if rows.iter().any(|r| r.len() != n_chips) {
            return invalid("mixing sequence rows differ in length");
        }
        if rows.iter().flatten().any(|&s| s != 1 && s != -1) {
            return invalid("mixing sequence entries must be +1 or -1");
        }
        Ok(Self {
            m,
            n_chips,
            signs: rows.concat(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_chips(&self) -> usize {
        self.n_chips
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.signs[i * self.n_chips..(i + 1) * self.n_chips]
    }

    pub fn rows(&self) -> Vec<Vec<i8>> {
        (0..self.m).map(|i| self.row(i).to_vec()).collect()
    }
}

/// I.i.d. equiprobable ±1 chips.
pub fn gen_mixing_sequences(m: usize, n_chips: usize, seed: u64) -> Result<MixingSequenceSet> {
    if m == 0 || n_chips == 0 {
        return invalid(format!(
            "need m >= 1 and n_chips >= 1 (m={m}, n_chips={n_chips})"
        ));
    }
    let mut rng = rng_from_seed(seed);
    let signs = (0..m * n_chips)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    Ok(MixingSequenceSet { m, n_chips, signs })
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// `M x N` matrix `A` with `A_il = conj(c_il)`, column `j` ↔ harmonic
/// `l = j - ceil(N/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    pub a: CMat,
}

impl SensingMatrix {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Keeps only the listed channels.
    pub fn rows(&self, idx: &[usize]) -> SensingMatrix {
        SensingMatrix {
            a: CMat::from_fn(idx.len(), self.n(), |r, c| self.a[(idx[r], c)]),
        }
    }
}

/// Fourier-series coefficients `c_il` of the piecewise-constant sequences for
/// `l = -ceil(N/2) .. ceil(N/2) - 1`.
///
/// `c_il = d_il exp(-j pi l / Nc) sinc(l / Nc)` with `d_il` the length-`Nc`
/// DFT of the sign row divided by `Nc`.
pub fn fourier_coefficients(seqs: &MixingSequenceSet, n: usize) -> Result<CMat> {
    let nc = seqs.n_chips();
    if n > nc {
        return invalid(format!("{n} slices need at least as many chips, got {nc}"));
    }
    let half = n.div_ceil(2) as i64;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nc);
    let mut c = CMat::zeros(seqs.m(), n);
    for i in 0..seqs.m() {
        let mut buf: Vec<Complex64> = seqs
            .row(i)
            .iter()
            .map(|&s| Complex64::new(s as f64, 0.0))
            .collect();
        fft.process(&mut buf);
        for j in 0..n {
            let l = j as i64 - half;
            let d = buf[l.rem_euclid(nc as i64) as usize] / nc as f64;
            let x = l as f64 / nc as f64;
            c[(i, j)] = d * Complex64::from_polar(sinc(x), -PI * x);
        }
    }
    Ok(c)
}

pub fn build_sensing_matrix(seqs: &MixingSequenceSet, n: usize) -> Result<SensingMatrix> {
    Ok(SensingMatrix {
        a: fourier_coefficients(seqs, n)?.map(|z| z.conj()),
    })
}

/// Channel spectra `z(f)` over `F_s`, one row per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSamples {
    pub z: CMat,
    pub grid: GridSpec,
}

impl ChannelSamples {
    /// Time samples `z_i[m]` at rate `f_s`, the inverse DFT of each channel
    /// spectrum scaled by the Nyquist-grid length (matching `x[n] =
    /// (1/L) sum_k X[k] exp(j 2 pi k n / L)`).
    pub fn time_samples(&self) -> CMat {
        let cols = self.z.ncols();
        let half = (cols / 2) as i64;
        let mut planner = FftPlanner::new();
        let ifft = planner.plan_fft_inverse(cols);
        let scale = 1.0 / self.grid.nyquist_len() as f64;
        let mut out = CMat::zeros(self.z.nrows(), cols);
        for i in 0..self.z.nrows() {
            // column g sits at signed frequency index g - cols/2
            let mut buf = vec![ZERO; cols];
            for g in 0..cols {
                let k = g as i64 - half;
                buf[k.rem_euclid(cols as i64) as usize] = self.z[(i, g)];
            }
            ifft.process(&mut buf);
            for (t, v) in buf.into_iter().enumerate() {
                out[(i, t)] = v * scale;
            }
        }
        out
    }

    /// Inverse of [`ChannelSamples::time_samples`].
    pub fn from_time_samples(t: &CMat, grid: GridSpec) -> Result<Self> {
        let cols = grid.bins_per_channel();
        if t.ncols() != cols {
            return Err(Error::DimensionMismatch(format!(
                "{} time samples per channel, grid expects {cols}",
                t.ncols()
            )));
        }
        let half = (cols / 2) as i64;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(cols);
        let scale = grid.nyquist_len() as f64 / cols as f64;
        let mut z = CMat::zeros(t.nrows(), cols);
        for i in 0..t.nrows() {
            let mut buf: Vec<Complex64> = t.row(i).iter().copied().collect();
            fft.process(&mut buf);
            for g in 0..cols {
                let k = g as i64 - half;
                z[(i, g)] = buf[k.rem_euclid(cols as i64) as usize] * scale;
            }
        }
        Ok(Self { z, grid })
    }
}

/// `z(f) = A x(f) + w(f)` applied bin-wise, with circular white noise of
/// variance `noise_var` per channel bin.
pub fn xample(
    x: &SliceSpectrum,
    a: &SensingMatrix,
    noise_var: f64,
    seed: u64,
) -> Result<ChannelSamples> {
    if a.n() != x.grid().n_slices() {
        return Err(Error::DimensionMismatch(format!(
            "sensing matrix has {} columns, spectrum {} slices",
            a.n(),
            x.grid().n_slices()
        )));
    }
    let mut z = &a.a * x.values();
    if noise_var > 0.0 {
        let mut rng = rng_from_seed(seed);
        for v in z.iter_mut() {
            *v += complex_gaussian(&mut rng, noise_var);
        }
    }
    Ok(ChannelSamples { z, grid: *x.grid() })
}

/// Aggregate sampling-rate accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLine {
    pub m: usize,
    pub f_s: f64,
    /// `M f_s`.
    pub f_tot: f64,
    pub n_slices: usize,
    /// `M / N`, the rate relative to the slice grid rate `N f_p`.
    pub ratio: f64,
    /// `f_tot / f_nyq`.
    pub nyquist_fraction: f64,
}

pub fn total_rate(m: usize, f_s: f64) -> f64 {
    m as f64 * f_s
}

pub fn rate_line(m: usize, grid: &GridSpec) -> RateLine {
    let f_tot = total_rate(m, grid.f_s());
    RateLine {
        m,
        f_s: grid.f_s(),
        f_tot,
        n_slices: grid.n_slices(),
        ratio: m as f64 / grid.n_slices() as f64,
        nyquist_fraction: f_tot / grid.f_nyq(),
    }
}

/// Channel-for-rate trade: `m_physical` branches at `q f_p` behave as
/// `m_physical q` branches at `f_p`.
pub fn collapse_channels(m_physical: usize, q: usize, f_p: f64) -> Result<(usize, f64)> {
    if q == 0 || q % 2 == 0 {
        return invalid(format!("collapse factor must be odd and positive, got {q}"));
    }
    Ok((m_physical * q, q as f64 * f_p))
}

/// Writes a complex matrix as row-major little-endian `f64` (re, im) pairs.
pub fn write_matrix_bin<W: Write>(a: &CMat, mut w: W) -> std::io::Result<()> {
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            w.write_all(&a[(r, c)].re.to_le_bytes())?;
            w.write_all(&a[(r, c)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_bin<R: Read>(mut r: R, rows: usize, cols: usize) -> Result<CMat> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::InvalidParameter(format!("reading matrix: {e}")))?;
    if bytes.len() != rows * cols * 16 {
        return Err(Error::DimensionMismatch(format!(
            "{} bytes cannot hold a {rows}x{cols} complex matrix",
            bytes.len()
        )));
    }
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let o = (i * cols + j) * 16;
        Complex64::new(f(o), f(o + 8))
    }))
}

/// Text form: one row per line, entries `re,im` separated by spaces.
pub fn write_matrix_text<W: Write>(a: &CMat, mut w: W) -> std::io::Result<()> {
    for r in 0..a.nrows() {
        let line: Vec<String> = a
            .row(r)
            .iter()
            .map(|z| format!("{:e},{:e}", z.re, z.im))
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix_text<R: BufRead>(r: R) -> Result<CMat> {
    let bad = |msg: String| Error::InvalidParameter(msg);
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for line in r.lines() {
        let line = line.map_err(|e| bad(format!("reading matrix: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                let (re, im) = tok
                    .split_once(',')
                    .ok_or_else(|| bad(format!("bad entry {tok}")))?;
                Ok(Complex64::new(
                    re.parse().map_err(|_| bad(format!("bad number {re}")))?,
                    im.parse().map_err(|_| bad(format!("bad number {im}")))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence_is_dc_only() {
        let seqs = MixingSequenceSet::from_rows(&[vec![1; 8]]).unwrap();
        let a = build_sensing_matrix(&seqs, 6).unwrap();
        for j in 0..6 {
            let expect = if j == 3 { 1.0 } else { 0.0 };
            assert!((a.a[(0, j)] - Complex64::new(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn sequences_are_reproducible() {
        let a = gen_mixing_sequences(1, 4, 11).unwrap();
        assert_eq!(a, gen_mixing_sequences(1, 4, 11).unwrap());
        assert!(a.row(0).iter().all(|&s| s == 1 || s == -1));
        assert!(gen_mixing_sequences(0, 4, 1).is_err());
    }

    #[test]
    fn too_few_chips_rejected() {
        let seqs = gen_mixing_sequences(2, 4, 1).unwrap();
        assert!(build_sensing_matrix(&seqs, 5).is_err());
    }

    #[test]
    fn collapse_and_rate() {
        assert_eq!(collapse_channels(4, 5, 24e6).unwrap(), (20, 120e6));
        assert_eq!(collapse_channels(3, 1, 1.0).unwrap(), (3, 1.0));
        assert!(collapse_channels(4, 2, 1.0).is_err());
        assert_eq!(total_rate(25, 154e6), 3.85e9);
        assert_eq!(total_rate(1, 7.0), 7.0);
        assert!((total_rate(4, 120e6) / 6e9 - 0.08).abs() < 1e-15);
    }

    #[test]
    fn matrix_dumps_round_trip() {
        let a = CMat::from_fn(3, 4, |r, c| {
            Complex64::new(r as f64 * 0.1, -(c as f64) / 3.0)
        });
        let mut bin = Vec::new();
        write_matrix_bin(&a, &mut bin).unwrap();
        assert_eq!(bin.len(), 3 * 4 * 16);
        assert_eq!(read_matrix_bin(bin.as_slice(), 3, 4).unwrap(), a);
        let mut txt = Vec::new();
        write_matrix_text(&a, &mut txt).unwrap();
        assert_eq!(read_matrix_text(txt.as_slice()).unwrap(), a);
    }
}
