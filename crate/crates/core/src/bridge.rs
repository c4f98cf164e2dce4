//! The C-infinity bridge used by every cutoff and frequency multiplier.
//!
//! `b(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})` on (0,1), extended by 0 and 1.
//! It is reproducible bit-for-bit and all derived profiles inherit its
//! smoothness.

/// Smooth step: 0 for t <= 0, 1 for t >= 1, strictly increasing in between.
pub fn bridge(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Derivative of the bridge (0 outside (0,1)).
pub fn bridge_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    let da = a / (t * t);
    let db = -b / ((1.0 - t) * (1.0 - t));
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Derivative of `bump_profile`.
pub fn bump_profile_deriv(u: f64) -> f64 {
    -bridge_deriv((u - 0.25) / 0.75) / 0.75
}

/// Low-pass profile `m_{<=0}`: equals 1 for r <= 1, vanishes for r >= 2.
pub fn m_le0(r: f64) -> f64 {
    1.0 - bridge(r - 1.0)
}

/// Dilated low-pass `m_{<=k}(r) = m_{<=0}(r / 2^k)`.
pub fn m_le(k: i32, r: f64) -> f64 {
    m_le0(r / (k as f64).exp2())
}

/// Dyadic shell multiplier `m_k = m_{<=k} - m_{<=k-1}`, supported in
/// `[2^{k-1}, 2^{k+1}]`.
pub fn m_shell(k: i32, r: f64) -> f64 {
    m_le(k, r) - m_le(k - 1, r)
}

/// Smooth plateau bump on [0,1): 1 for u <= 1/2, 0 for u >= 1.
/// Used for normalized bump functions on balls.
pub fn plateau(u: f64) -> f64 {
    1.0 - bridge(2.0 * u - 1.0)
}

/// Wide-transition bump: 1 for u <= 1/4, 0 for u >= 1, with the bridge
/// spread over three quarters of the radius. Better resolved on coarse
/// grids than `plateau`.
pub fn bump_profile(u: f64) -> f64 {
    1.0 - bridge((u - 0.25) / 0.75)
}

/// Two-sided ramp: 1 on [lo1, hi1], 0 outside (lo0, hi0), smooth bridges in
/// between. Requires lo0 <= lo1 <= hi1 <= hi0.
pub fn window(t: f64, lo0: f64, lo1: f64, hi1: f64, hi0: f64) -> f64 {
    let up = if lo1 > lo0 {
        bridge((t - lo0) / (lo1 - lo0))
    } else if t >= lo1 {
        1.0
    } else {
        0.0
    };
    let down = if hi0 > hi1 {
        1.0 - bridge((t - hi1) / (hi0 - hi1))
    } else if t <= hi1 {
        1.0
    } else {
        0.0
    };
    up * down
}
