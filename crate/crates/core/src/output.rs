//! Plain-text number formatting shared by every CSV writer.

/// Shortest decimal that round-trips to the same `f64` (at most 17
/// significant digits). Magnitudes outside `[1e-5, 1e16)` use exponent
/// notation. Negative zero prints as `0`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_nan() {
        "NaN".to_string()
    } else if (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Evenly spaced values `start, start + step, ..` up to `end` inclusive
/// (within a hundredth of a step). Values are rounded to 12 decimals so that
/// `0.05:0.35:0.05` yields `0.15` rather than `0.15000000000000002`.
pub fn inclusive_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || end < start {
        return Vec::new();
    }
    let count = ((end - start) / step + 0.01).floor() as usize + 1;
    (0..count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect()
}
