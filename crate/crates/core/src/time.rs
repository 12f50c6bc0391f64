//! Time parsing and formatting.
//!
//! All interior arithmetic uses [`std::time::Duration`] (integer nanoseconds)
//! so interval overlaps and threshold comparisons are exact for any input
//! given at millisecond-or-coarser resolution. Text formats carry seconds;
//! the helpers here convert both ways without losing digits.

use std::time::Duration;

use crate::error::{Error, Result};

/// Parse a non-negative decimal seconds value into a `Duration`.
///
/// Plain decimal forms (`"1.2"`, `"30"`, `".5"`) take an exact digit path;
/// anything else falls back to `f64` parsing rounded to the nearest
/// nanosecond.
pub fn parse_seconds(text: &str) -> Result<Duration> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::validation("empty time field"));
    }
    if let Some(d) = parse_decimal(t) {
        return Ok(d);
    }
    let secs: f64 = t
        .parse()
        .map_err(|_| Error::validation(format!("invalid time value {t:?}")))?;
    if !secs.is_finite() || secs < 0.0 {
        return Err(Error::validation(format!(
            "time value out of range: {secs}"
        )));
    }
    Ok(Duration::from_secs_f64(secs))
}

/// Parse a possibly negative decimal seconds value, in whole seconds as `f64`.
///
/// Used where raw annotator times may lie slightly outside the clip and get
/// clamped before conversion to `Duration`.
pub fn parse_signed_seconds(text: &str) -> Result<f64> {
    let t = text.trim();
    let secs: f64 = t
        .parse()
        .map_err(|_| Error::validation(format!("invalid time value {t:?}")))?;
    if !secs.is_finite() {
        return Err(Error::validation(format!("non-finite time value {t:?}")));
    }
    Ok(secs)
}

fn parse_decimal(t: &str) -> Option<Duration> {
    let (int_part, frac_part) = match t.split_once('.') {
        Some((i, f)) => (i, f),
        None => (t, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || frac_part.len() > 9 {
        return None;
    }
    if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let secs: u64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().ok()?
    };
    let mut nanos: u32 = 0;
    for (i, b) in frac_part.bytes().enumerate() {
        nanos += u32::from(b - b'0') * 10u32.pow(8 - i as u32);
    }
    Some(Duration::new(secs, nanos))
}

/// Format a `Duration` as decimal seconds with at least three and at most
/// nine fractional digits, trimming trailing zeros. Exact: goes through the
/// integer nanosecond count, never through `f64`.
pub fn format_seconds(d: Duration) -> String {
    let secs = d.as_secs();
    let nanos = d.subsec_nanos();
    let mut frac = format!("{nanos:09}");
    while frac.len() > 3 && frac.ends_with('0') {
        frac.pop();
    }
    format!("{secs}.{frac}")
}
