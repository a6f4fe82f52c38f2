//! Tap position and effective regulator ratio algebra.
//!
//! A type-B regulator maps a tap `t` to `r = 1 - step * t` and satisfies
//! `v_primary = r * v_secondary`. A type-A regulator mirrors both: `r = 1 + step * t`
//! and `v_secondary = r * v_primary`.

use serde::{Deserialize, Serialize};

pub const DEFAULT_TAP_MIN: i32 = -16;
pub const DEFAULT_TAP_MAX: i32 = 16;
pub const DEFAULT_STEP: f64 = 0.00625;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SvrKind {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapRange {
    pub min: i32,
    pub max: i32,
}

impl Default for TapRange {
    fn default() -> Self {
        TapRange {
            min: DEFAULT_TAP_MIN,
            max: DEFAULT_TAP_MAX,
        }
    }
}

impl TapRange {
    pub fn contains(&self, tap: i32) -> bool {
        (self.min..=self.max).contains(&tap)
    }

    pub fn count(&self) -> usize {
        (self.max - self.min + 1).max(0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TapError {
    #[error("tap {tap} outside [{min}, {max}]")]
    OutOfRange { tap: i32, min: i32, max: i32 },
}

pub fn tap_to_ratio(tap: i32, kind: SvrKind, step: f64, range: TapRange) -> Result<f64, TapError> {
    if !range.contains(tap) {
        return Err(TapError::OutOfRange {
            tap,
            min: range.min,
            max: range.max,
        });
    }
    Ok(match kind {
        SvrKind::B => 1.0 - step * tap as f64,
        SvrKind::A => 1.0 + step * tap as f64,
    })
}

/// Nearest tap for a continuous ratio, ties away from zero, clamped into `range`.
pub fn ratio_to_tap(ratio: f64, kind: SvrKind, step: f64, range: TapRange) -> i32 {
    let raw = match kind {
        SvrKind::B => (1.0 - ratio) / step,
        SvrKind::A => (ratio - 1.0) / step,
    };
    // f64::round rounds half away from zero
    let t = raw.round();
    if t.is_nan() {
        return 0;
    }
    (t.clamp(range.min as f64, range.max as f64)) as i32
}

/// `(r_min, r_max)` reachable by the tap range.
pub fn ratio_bounds(kind: SvrKind, step: f64, range: TapRange) -> (f64, f64) {
    match kind {
        SvrKind::B => (1.0 - step * range.max as f64, 1.0 - step * range.min as f64),
        SvrKind::A => (1.0 + step * range.min as f64, 1.0 + step * range.max as f64),
    }
}

/// Per-phase voltage gain `g` with `v_secondary = g * v_primary`.
pub fn secondary_gain(kind: SvrKind, ratio: f64) -> f64 {
    match kind {
        SvrKind::B => 1.0 / ratio,
        SvrKind::A => ratio,
    }
}
