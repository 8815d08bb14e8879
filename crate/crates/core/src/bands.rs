//! Radar transmit-band selection: REM masking, inversion and a structured
//! greedy (block-sparse) search that favours few contiguous blocks.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::freqset::{FrequencyInterval, FrequencySet};

/// Radio environment map: typical interference energy per band of width
/// `b_y` tiling `span`. Masked bands hold `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemGrid {
    #[serde(with = "extended")]
    pub y: Vec<f64>,
    pub span: FrequencyInterval,
}

/// `+inf` travels as the string `"inf"`.
mod extended {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Ext {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Ext> = v
            .iter()
            .map(|&x| {
                if x.is_finite() {
                    Ext::Num(x)
                } else {
                    Ext::Text("inf".into())
                }
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Ext>::deserialize(d)?
            .into_iter()
            .map(|e| match e {
                Ext::Num(x) => Ok(x),
                Ext::Text(t) if t == "inf" => Ok(f64::INFINITY),
                Ext::Text(t) => Err(serde::de::Error::custom(format!("bad REM entry {t}"))),
            })
            .collect()
    }
}

impl RemGrid {
    pub fn new(y: Vec<f64>, span: FrequencyInterval) -> Result<Self> {
        if y.is_empty() {
            return invalid("REM needs at least one band");
        }
        if y.iter().any(|&v| v.is_nan() || v < 0.0) {
            return invalid("REM energies must be >= 0 or +inf");
        }
        Ok(Self { y, span })
    }

    pub fn q(&self) -> usize {
        self.y.len()
    }

    /// Width of one REM band.
    pub fn b_y(&self) -> f64 {
        self.span.width() / self.q() as f64
    }

    pub fn band(&self, i: usize) -> FrequencyInterval {
        let lo = self.span.lo() + i as f64 * self.b_y();
        FrequencyInterval::new(lo, lo + self.b_y()).expect("positive band width")
    }

    /// Floors finite entries at `eps` so the inversion stays bounded.
    pub fn floored(&self, eps: f64) -> RemGrid {
        RemGrid {
            y: self.y.iter().map(|&v| v.max(eps)).collect(),
            span: self.span,
        }
    }
}

/// Sets every REM band intersecting `f_c` to `+inf`.
pub fn mask_comm(y: &RemGrid, f_c: &FrequencySet) -> RemGrid {
    let mut out = y.clone();
    for (i, v) in out.y.iter_mut().enumerate() {
        if f_c.intersects_interval(&y.band(i)) {
            *v = f64::INFINITY;
        }
    }
    out
}

/// Element-wise reciprocal with `1/inf = 0`.
pub fn invert_rem(y: &RemGrid) -> Result<Vec<f64>> {
    y.y.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v == 0.0 {
                invalid(format!("REM band {i} has zero energy; floor the map first"))
            } else {
                Ok(1.0 / v)
            }
        })
        .collect()
}

/// Assignment of each of the `p` fine frequencies to one REM band.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingMatrix {
    q: usize,
    rows: Vec<usize>,
}

impl MappingMatrix {
    pub fn identity(p: usize) -> Self {
        Self {
            q: p,
            rows: (0..p).collect(),
        }
    }

    /// Contiguous uniform mapping; needs `p` to be a multiple of `q`.
    pub fn uniform(q: usize, p: usize) -> Result<Self> {
        if q == 0 || p == 0 || p % q != 0 {
            return invalid(format!(
                "uniform mapping needs p a multiple of q (q={q}, p={p})"
            ));
        }
        let per = p / q;
        Ok(Self {
            q,
            rows: (0..p).map(|j| j / per).collect(),
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.rows.len()
    }

    /// REM band of fine frequency `j`.
    pub fn row_of(&self, j: usize) -> usize {
        self.rows[j]
    }

    /// Dense `q x p` 0/1 matrix.
    pub fn dense(&self) -> Vec<Vec<u8>> {
        let mut d = vec![vec![0; self.p()]; self.q];
        for (j, &i) in self.rows.iter().enumerate() {
            d[i][j] = 1;
        }
        d
    }
}

/// Non-negative weights on the fine frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSparseVector {
    pub w: Vec<f64>,
    pub b_w: f64,
}

impl BlockSparseVector {
    pub fn support(&self) -> Vec<usize> {
        (0..self.w.len()).filter(|&j| self.w[j] != 0.0).collect()
    }
}

/// Maximal runs of nonzero entries.
pub fn count_blocks(w: &BlockSparseVector) -> usize {
    let mut g = 0;
    let mut prev = false;
    for &v in &w.w {
        let on = v != 0.0;
        if on && !prev {
            g += 1;
        }
        prev = on;
    }
    g
}

/// Runs of consecutive indices in a sorted, deduplicated index list.
pub fn blocks_of(idx: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &j in idx {
        match out.last_mut() {
            Some(last) if last.1 + 1 == j => last.1 = j,
            _ => out.push((j, j)),
        }
    }
    out
}

/// `c(F) = g ln p + |F|` with `g` the number of connected runs of `F`.
pub fn coding_complexity(f_idx: &[usize], p: usize) -> f64 {
    let mut v = f_idx.to_vec();
    v.sort_unstable();
    v.dedup();
    blocks_of(&v).len() as f64 * (p as f64).ln() + v.len() as f64
}

/// Optional shape constraints, applied while choosing candidates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BandConstraints {
    /// Longest allowed block, in fine bins.
    pub max_block_len: Option<usize>,
    /// Fewest empty bins between two blocks.
    pub min_separation: Option<usize>,
}

impl BandConstraints {
    fn admits(&self, blocks: &[(usize, usize)]) -> bool {
        if let Some(m) = self.max_block_len {
            if blocks.iter().any(|b| b.1 - b.0 + 1 > m) {
                return false;
            }
        }
        if let Some(s) = self.min_separation {
            if blocks.windows(2).any(|w| w[1].0 - w[0].1 - 1 < s) {
                return false;
            }
        }
        true
    }
}

/// Outcome of [`struct_omp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSelection {
    pub w: BlockSparseVector,
    /// Selected fine indices in selection order.
    pub order: Vec<usize>,
    pub f_r: FrequencySet,
}

impl BandSelection {
    pub fn support(&self) -> Vec<usize> {
        let mut s = self.order.clone();
        s.sort_unstable();
        s
    }
}

/// Contiguous regions of fine indices with positive preference.
pub fn feasible_regions(y_inv: &[f64], d: &MappingMatrix) -> usize {
    let idx: Vec<usize> = (0..d.p()).filter(|&j| y_inv[d.row_of(j)] > 0.0).collect();
    blocks_of(&idx).len()
}

/// Most blocks the positive-preference regions can host: a region of `len`
/// bins holds `ceil(len / (1 + s))` blocks when blocks must be `s >= 1`
/// bins apart (touching blocks would merge).
pub fn feasible_blocks(y_inv: &[f64], d: &MappingMatrix, constraints: &BandConstraints) -> usize {
    let s = constraints.min_separation.unwrap_or(1).max(1);
    let idx: Vec<usize> = (0..d.p()).filter(|&j| y_inv[d.row_of(j)] > 0.0).collect();
    blocks_of(&idx)
        .iter()
        .map(|b| (b.1 - b.0 + 1).div_ceil(1 + s))
        .sum()
}

/// Least-squares fit `w_F` of `D_F w = y_inv` (minimum norm: the target of
/// each touched REM band is split evenly over its selected fine indices).
fn refit(y_inv: &[f64], d: &MappingMatrix, support: &[usize]) -> Vec<f64> {
    let mut count = vec![0usize; d.q()];
    for &j in support {
        count[d.row_of(j)] += 1;
    }
    let mut w = vec![0.0; d.p()];
    for &j in support {
        let i = d.row_of(j);
        w[j] = y_inv[i] / count[i] as f64;
    }
    w
}

/// Greedy structured selection of at most `n_b` blocks.
///
/// Each step adds the single fine index maximizing the projected residual
/// energy per unit of added coding complexity, then refits. An index whose
/// addition merges two blocks lowers the complexity and is taken first when
/// it carries any energy. Once `n_b` blocks exist, indices that would open
/// another one are skipped and the existing blocks keep growing, across
/// bins of already fitted REM bands when nothing else is left. The search
/// ends when no admissible index remains. The run is repeated from every
/// admissible first index, the lowest residual wins and a swap/add local
/// search polishes it. Bands are
/// `[lo + j b_w, lo + (j + 1) b_w)` over `span`.
pub fn struct_omp(
    y_inv: &[f64],
    d: &MappingMatrix,
    n_b: usize,
    span: &FrequencyInterval,
    constraints: &BandConstraints,
) -> Result<BandSelection> {
    let p = d.p();
    if y_inv.len() != d.q() {
        return Err(Error::DimensionMismatch(format!(
            "preference vector has {} entries, mapping expects {}",
            y_inv.len(),
            d.q()
        )));
    }
    if n_b == 0 || p < n_b {
        return invalid(format!("need 1 <= n_b <= p (n_b={n_b}, p={p})"));
    }
    if y_inv.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return invalid("preferences must be finite and non-negative");
    }
    let available = feasible_blocks(y_inv, d, constraints);
    if available < n_b {
        return Err(Error::InsufficientBlocks {
            available,
            requested: n_b,
        });
    }
    // plain greedy first; restarts from every admissible first index replace
    // it only when they fit strictly better
    let (mut order, mut w) = grow(y_inv, d, n_b, constraints, None);
    let mut best = selection_residual(y_inv, d, &sorted(&order));
    for j in 0..p {
        if !(y_inv[d.row_of(j)] > 0.0) || !constraints.admits(&[(j, j)]) {
            continue;
        }
        let (o, v) = grow(y_inv, d, n_b, constraints, Some(j));
        let r = selection_residual(y_inv, d, &sorted(&o));
        if r < best - 1e-12 * best.max(1e-300) {
            (order, w, best) = (o, v, r);
        }
    }
    if polish(y_inv, d, n_b, constraints, &mut order, best) {
        w = refit(y_inv, d, &order);
    }
    let b_w = span.width() / p as f64;
    let f_r = FrequencySet::from_intervals(order.iter().map(|&j| {
        let lo = span.lo() + j as f64 * b_w;
        FrequencyInterval::new(lo, lo + b_w).expect("positive bin width")
    }));
    Ok(BandSelection {
        w: BlockSparseVector { w, b_w },
        order,
        f_r,
    })
}

/// Local search on a finished selection: moves that drop up to two selected
/// indices and add one or two positive-preference indices; the best strict
/// residual drop within the block budget and constraints is taken until none
/// is left. Returns whether anything changed.
fn polish(
    y_inv: &[f64],
    d: &MappingMatrix,
    n_b: usize,
    constraints: &BandConstraints,
    order: &mut Vec<usize>,
    mut best: f64,
) -> bool {
    let subsets = |v: &[usize]| -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for (i, &a) in v.iter().enumerate() {
            out.push(vec![a]);
            out.extend(v[i + 1..].iter().map(|&b| vec![a, b]));
        }
        out
    };
    let mut changed = false;
    loop {
        let tol = 1e-12 * best.max(1e-300);
        let free: Vec<usize> = (0..d.p())
            .filter(|&j| y_inv[d.row_of(j)] > 0.0 && !order.contains(&j))
            .collect();
        let drops = subsets(order);
        let mut step: Option<(Vec<usize>, f64)> = None;
        for add in subsets(&free).into_iter().filter(|a| !a.is_empty()) {
            for drop in &drops {
                let mut cand: Vec<usize> = order.iter().copied().filter(|j| !drop.contains(j)).collect();
                cand.extend(&add);
                let s = sorted(&cand);
                let blocks = blocks_of(&s);
                if blocks.len() > n_b || !constraints.admits(&blocks) {
                    continue;
                }
                let r = selection_residual(y_inv, d, &s);
                if r < step.as_ref().map_or(best, |x| x.1) - tol {
                    step = Some((cand, r));
                }
            }
        }
        match step {
            Some((o, r)) => {
                *order = o;
                best = r;
                changed = true;
            }
            None => return changed,
        }
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

/// One greedy run, optionally forced to start at `first`; returns the
/// selection order and the refit weights.
fn grow(
    y_inv: &[f64],
    d: &MappingMatrix,
    n_b: usize,
    constraints: &BandConstraints,
    first: Option<usize>,
) -> (Vec<usize>, Vec<f64>) {
    let p = d.p();
    let ln_p = (p as f64).ln();
    let mut order: Vec<usize> = first.into_iter().collect();
    let mut selected = vec![false; p];
    for &j in &order {
        selected[j] = true;
    }
    let mut w = refit(y_inv, d, &order);
    loop {
        // residual r = y_inv - D w, per REM band
        let mut fitted = vec![0.0; d.q()];
        for j in 0..p {
            fitted[d.row_of(j)] += w[j];
        }
        let mut support: Vec<usize> = order.clone();
        support.sort_unstable();
        let blocks = blocks_of(&support).len();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..p {
            if selected[j] {
                continue;
            }
            let i = d.row_of(j);
            let r = y_inv[i] - fitted[i];
            let gain = r * r;
            let left = j > 0 && selected[j - 1];
            let right = j + 1 < p && selected[j + 1];
            let dg = match (left, right) {
                (true, true) => -1.0,
                (false, false) => 1.0,
                _ => 0.0,
            };
            // zero-gain bins may only extend blocks across an already fitted band
            if !(gain > 0.0) && (dg > 0.0 || !(y_inv[i] > 0.0)) {
                continue;
            }
            if dg > 0.0 && blocks >= n_b {
                continue;
            }
            let dc = dg * ln_p + 1.0;
            let phi = if !(gain > 0.0) {
                0.0
            } else if dc > 0.0 {
                gain / dc
            } else {
                f64::INFINITY
            };
            if constraints != &BandConstraints::default() {
                let mut trial = support.clone();
                let pos = trial.partition_point(|&x| x < j);
                trial.insert(pos, j);
                if !constraints.admits(&blocks_of(&trial)) {
                    continue;
                }
            }
            if best.is_none_or(|(_, b)| phi > b) {
                best = Some((j, phi));
            }
        }
        let Some((j, _)) = best else { break };
        let mut trial = support.clone();
        let pos = trial.partition_point(|&x| x < j);
        trial.insert(pos, j);
        selected[j] = true;
        order.push(j);
        w = refit(y_inv, d, &trial);
    }
    (order, w)
}

/// Squared residual `||D w - y_inv||^2` of the least-squares fit on `support`.
pub fn selection_residual(y_inv: &[f64], d: &MappingMatrix, support: &[usize]) -> f64 {
    let w = refit(y_inv, d, support);
    let mut fitted = vec![0.0; d.q()];
    for j in 0..d.p() {
        fitted[d.row_of(j)] += w[j];
    }
    y_inv
        .iter()
        .zip(&fitted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}
