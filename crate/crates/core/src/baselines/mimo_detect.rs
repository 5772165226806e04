//! 2x2 spatial-multiplexing detectors for QPSK streams.

use super::modulation::{ConstellationMap, Modulation};
use crate::channel::{cx_mag_sq, cx_mul, ChannelRealization};
use crate::{Error, Result};

/// Condition-number guard for zero forcing.
const ZF_MAX_CONDITION: f64 = 1e8;

fn check_shape(y: &[(f64, f64)], h: &ChannelRealization) -> Result<()> {
    if h.rx() != 2 || h.tx() != 2 {
        return Err(Error::contract(format!(
            "detector expects a 2x2 channel, got {}x{}",
            h.rx(),
            h.tx()
        )));
    }
    if y.len() != 2 {
        return Err(Error::contract(format!(
            "detector expects one sample per receive antenna, got {}",
            y.len()
        )));
    }
    Ok(())
}

/// Exhaustive maximum-likelihood detection over all 16 QPSK symbol pairs.
///
/// Returns the four bits [s1b0, s1b1, s2b0, s2b1] of the pair minimizing
/// ||y - H x||²; exact ties break toward the lexicographically smallest bit
/// pattern.
pub fn mimo_ml_detect(y: &[(f64, f64)], h: &ChannelRealization) -> Result<[u8; 4]> {
    check_shape(y, h)?;
    let map = ConstellationMap::new(Modulation::Qpsk);
    let mut best_pattern = 0usize;
    let mut best_metric = f64::INFINITY;
    for pattern in 0..16usize {
        let x1 = map.point(pattern >> 2);
        let x2 = map.point(pattern & 3);
        let mut metric = 0.0;
        for i in 0..2 {
            let pred = add(
                cx_mul(h.tap(i, 0), x1),
                cx_mul(h.tap(i, 1), x2),
            );
            metric += cx_mag_sq((y[i].0 - pred.0, y[i].1 - pred.1));
        }
        if metric < best_metric {
            best_metric = metric;
            best_pattern = pattern;
        }
    }
    Ok(pattern_bits(best_pattern))
}

/// Zero-forcing detection: per-stream QPSK slicing of H⁻¹ y.
///
/// Near-singular channels (condition number above 1e8) yield a
/// detection-failure error; the caller resamples the trial and counts the
/// failure.
pub fn mimo_zf_detect(y: &[(f64, f64)], h: &ChannelRealization) -> Result<[u8; 4]> {
    check_shape(y, h)?;
    if condition_number(h) > ZF_MAX_CONDITION {
        return Err(Error::DetectionFailure(
            "channel matrix is near-singular for zero forcing".into(),
        ));
    }
    let (a, b, c, d) = (h.tap(0, 0), h.tap(0, 1), h.tap(1, 0), h.tap(1, 1));
    let det = sub(cx_mul(a, d), cx_mul(b, c));
    let det_sq = cx_mag_sq(det);
    // H⁻¹ = [[d, -b], [-c, a]] / det; multiply by conj(det)/|det|².
    let inv = |z: (f64, f64)| -> (f64, f64) {
        let w = cx_mul(z, (det.0, -det.1));
        (w.0 / det_sq, w.1 / det_sq)
    };
    let x1 = inv(sub(cx_mul(d, y[0]), cx_mul(b, y[1])));
    let x2 = inv(sub(cx_mul(a, y[1]), cx_mul(c, y[0])));
    let map = ConstellationMap::new(Modulation::Qpsk);
    let pattern = (map.slice(x1) << 2) | map.slice(x2);
    Ok(pattern_bits(pattern))
}

fn pattern_bits(pattern: usize) -> [u8; 4] {
    [
        ((pattern >> 3) & 1) as u8,
        ((pattern >> 2) & 1) as u8,
        ((pattern >> 1) & 1) as u8,
        (pattern & 1) as u8,
    ]
}

fn add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

fn sub(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 - b.0, a.1 - b.1)
}

/// 2-norm condition number via the eigenvalues of HᴴH.
fn condition_number(h: &ChannelRealization) -> f64 {
    // HᴴH is Hermitian 2x2 with real trace t and determinant |det H|².
    let (a, b, c, d) = (h.tap(0, 0), h.tap(0, 1), h.tap(1, 0), h.tap(1, 1));
    let t = cx_mag_sq(a) + cx_mag_sq(b) + cx_mag_sq(c) + cx_mag_sq(d);
    let det = sub(cx_mul(a, d), cx_mul(b, c));
    let det_sq = cx_mag_sq(det);
    let disc = (t * t - 4.0 * det_sq).max(0.0).sqrt();
    let lam_max = 0.5 * (t + disc);
    let lam_min = 0.5 * (t - disc);
    if lam_min <= 0.0 {
        f64::INFINITY
    } else {
        (lam_max / lam_min).sqrt()
    }
}
