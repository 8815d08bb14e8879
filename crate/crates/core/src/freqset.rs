//! Finite unions of half-open frequency intervals.
//!
//! Every set is kept in normal form: intervals sorted by their lower edge,
//! pairwise disjoint and non-adjacent (touching intervals are merged). All
//! frequencies are in Hz.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Half-open interval `[lo, hi)` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct FrequencyInterval {
    lo: f64,
    hi: f64,
}

impl FrequencyInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return invalid(format!("interval edges must be finite, got [{lo}, {hi})"));
        }
        if lo >= hi {
            return invalid(format!("interval requires lo < hi, got [{lo}, {hi})"));
        }
        Ok(Self { lo, hi })
    }

    /// Interval of width `width` centred on `center`.
    pub fn centered(center: f64, width: f64) -> Result<Self> {
        Self::new(center - width / 2.0, center + width / 2.0)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, f: f64) -> bool {
        self.lo <= f && f < self.hi
    }

    pub fn intersects(&self, other: &FrequencyInterval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }
}

impl TryFrom<[f64; 2]> for FrequencyInterval {
    type Error = crate::Error;

    fn try_from(pair: [f64; 2]) -> Result<Self> {
        Self::new(pair[0], pair[1])
    }
}

impl From<FrequencyInterval> for [f64; 2] {
    fn from(iv: FrequencyInterval) -> Self {
        [iv.lo, iv.hi]
    }
}

/// Normalized union of disjoint half-open intervals.
///
/// Serializes as a list of `[lo_hz, hi_hz]` pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<FrequencyInterval>", into = "Vec<FrequencyInterval>")]
pub struct FrequencySet {
    intervals: Vec<FrequencyInterval>,
}

impl FrequencySet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_interval(iv: FrequencyInterval) -> Self {
        Self {
            intervals: vec![iv],
        }
    }

    /// Builds a set from arbitrary (possibly overlapping, unsorted) intervals.
    pub fn from_intervals(intervals: impl IntoIterator<Item = FrequencyInterval>) -> Self {
        Self {
            intervals: normalize(intervals.into_iter().collect()),
        }
    }

    /// Builds a set from `[lo, hi)` pairs, rejecting degenerate pairs.
    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        let intervals = pairs
            .iter()
            .map(|p| FrequencyInterval::new(p[0], p[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_intervals(intervals))
    }

    pub fn intervals(&self) -> &[FrequencyInterval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    /// Total length in Hz.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(FrequencyInterval::width).sum()
    }

    pub fn contains(&self, f: f64) -> bool {
        // intervals are sorted, so a binary search on the lower edge suffices
        let idx = self.intervals.partition_point(|iv| iv.lo <= f);
        idx > 0 && self.intervals[idx - 1].contains(f)
    }

    pub fn union(&self, other: &FrequencySet) -> FrequencySet {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        FrequencySet {
            intervals: normalize(all),
        }
    }

    pub fn intersect(&self, other: &FrequencySet) -> FrequencySet {
        let (a, b) = (&self.intervals, &other.intervals);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let lo = a[i].lo.max(b[j].lo);
            let hi = a[i].hi.min(b[j].hi);
            if lo < hi {
                out.push(FrequencyInterval { lo, hi });
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        FrequencySet {
            intervals: normalize(out),
        }
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &FrequencySet) -> FrequencySet {
        let mut out = Vec::new();
        for iv in &self.intervals {
            let mut lo = iv.lo;
            for cut in &other.intervals {
                if cut.hi <= lo || cut.lo >= iv.hi {
                    continue;
                }
                if cut.lo > lo {
                    out.push(FrequencyInterval { lo, hi: cut.lo });
                }
                lo = lo.max(cut.hi);
                if lo >= iv.hi {
                    break;
                }
            }
            if lo < iv.hi {
                out.push(FrequencyInterval { lo, hi: iv.hi });
            }
        }
        FrequencySet {
            intervals: normalize(out),
        }
    }

    pub fn intersects(&self, other: &FrequencySet) -> bool {
        !self.intersect(other).is_empty()
    }

    pub fn intersects_interval(&self, iv: &FrequencyInterval) -> bool {
        self.intervals.iter().any(|own| own.intersects(iv))
    }

    /// Translates every interval by `offset` Hz.
    pub fn shifted(&self, offset: f64) -> FrequencySet {
        FrequencySet {
            intervals: self
                .intervals
                .iter()
                .map(|iv| FrequencyInterval {
                    lo: iv.lo + offset,
                    hi: iv.hi + offset,
                })
                .collect(),
        }
    }

    /// Reflection `f -> -f`. Half-open edges are kept as `[-hi, -lo)`.
    pub fn mirrored(&self) -> FrequencySet {
        FrequencySet::from_intervals(self.intervals.iter().map(|iv| FrequencyInterval {
            lo: -iv.hi,
            hi: -iv.lo,
        }))
    }

    /// Restriction to `[lo, hi)`.
    pub fn clipped(&self, lo: f64, hi: f64) -> FrequencySet {
        match FrequencyInterval::new(lo, hi) {
            Ok(iv) => self.intersect(&FrequencySet::from_interval(iv)),
            Err(_) => FrequencySet::empty(),
        }
    }

    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.intervals.iter().map(|&iv| iv.into()).collect()
    }
}

impl From<Vec<FrequencyInterval>> for FrequencySet {
    fn from(v: Vec<FrequencyInterval>) -> Self {
        Self::from_intervals(v)
    }
}

impl From<FrequencySet> for Vec<FrequencyInterval> {
    fn from(s: FrequencySet) -> Self {
        s.intervals
    }
}

impl FromIterator<FrequencyInterval> for FrequencySet {
    fn from_iter<I: IntoIterator<Item = FrequencyInterval>>(iter: I) -> Self {
        Self::from_intervals(iter)
    }
}

impl fmt::Display for FrequencySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|iv| format!("[{}, {})", iv.lo, iv.hi))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

fn normalize(mut v: Vec<FrequencyInterval>) -> Vec<FrequencyInterval> {
    v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<FrequencyInterval> = Vec::with_capacity(v.len());
    for iv in v {
        match out.last_mut() {
            // touching half-open intervals merge
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}
