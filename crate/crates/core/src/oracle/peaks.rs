//! Peak detection and matching against known source centers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::RealField;
use crate::sources::PeakSpec;

/// Fraction of the global maximum a local maximum must exceed.
pub const DETECTION_THRESHOLD: f64 = 0.1;

/// A local maximum of `|μ|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detection {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// A true peak paired with a detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakMatch {
    pub truth: (f64, f64),
    pub detection: Detection,
    pub distance: f64,
    pub sign_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakReport {
    /// One entry per true peak, in input order.
    pub matches: Vec<Option<PeakMatch>>,
    pub detections: Vec<Detection>,
    pub sign_hits: usize,
    pub spurious: usize,
}

impl PeakReport {
    pub fn matched(&self) -> usize {
        self.matches.iter().flatten().count()
    }

    /// Distance per true peak; `None` when unmatched.
    pub fn distances(&self) -> Vec<Option<f64>> {
        self.matches.iter().map(|m| m.map(|m| m.distance)).collect()
    }

    /// Every true peak matched within `radius` with the right sign.
    pub fn all_within(&self, radius: f64) -> bool {
        self.matches
            .iter()
            .all(|m| m.is_some_and(|m| m.distance <= radius && m.sign_hit))
    }
}

/// Local maxima of `|μ|` over 3×3 neighbourhoods above
/// [`DETECTION_THRESHOLD`] of the global maximum. Of two equal neighbours
/// only the one with the lower index counts.
pub fn detect_peaks(mu: &RealField) -> Vec<Detection> {
    let g = *mu.grid();
    let n = g.n() as isize;
    let v = mu.values();
    let max = mu.max_abs();
    if max == 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (idx, x, y) in g.nodes() {
        let a = v[idx].abs();
        if a <= DETECTION_THRESHOLD * max {
            continue;
        }
        let (i, j) = g.ij(idx);
        let (i, j) = (i as isize, j as isize);
        let is_peak = (-1..=1).all(|dj| {
            (-1..=1).all(|di| {
                let (p, q) = (i + di, j + dj);
                if (di, dj) == (0, 0) || p < 0 || q < 0 || p >= n || q >= n {
                    return true;
                }
                let other = g.index(p as usize, q as usize);
                let b = v[other].abs();
                b < a || (b == a && other > idx)
            })
        });
        if is_peak {
            out.push(Detection {
                index: idx,
                x,
                y,
                value: v[idx],
            });
        }
    }
    out
}

/// Detects peaks in `mu` and pairs them with `truth`, closest pairs first.
pub fn peak_match(mu: &RealField, truth: &[PeakSpec]) -> Result<PeakReport> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter(
            "peak matching needs at least one true peak".into(),
        ));
    }
    let detections = detect_peaks(mu);
    let mut pairs: Vec<(f64, usize, usize)> = truth
        .iter()
        .enumerate()
        .flat_map(|(t, p)| {
            detections
                .iter()
                .enumerate()
                .map(move |(d, det)| ((det.x - p.center.0).hypot(det.y - p.center.1), t, d))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut matches: Vec<Option<PeakMatch>> = vec![None; truth.len()];
    let mut used = vec![false; detections.len()];
    for (distance, t, d) in pairs {
        if matches[t].is_some() || used[d] {
            continue;
        }
        used[d] = true;
        let det = detections[d];
        matches[t] = Some(PeakMatch {
            truth: truth[t].center,
            detection: det,
            distance,
            sign_hit: det.value.signum() == truth[t].sign.signum(),
        });
    }
    let sign_hits = matches.iter().flatten().filter(|m| m.sign_hit).count();
    let spurious = used.iter().filter(|&&u| !u).count();
    Ok(PeakReport {
        matches,
        detections,
        sign_hits,
        spurious,
    })
}
