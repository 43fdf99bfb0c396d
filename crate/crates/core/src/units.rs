//! Unit conversions between file-level human units (GB, Gbps, ms) and the
//! internal unit system (bytes, bytes/second, seconds).
//!
//! Everything inside the library is bytes and seconds; conversion happens
//! exactly once at the I/O boundary.

/// Bytes per gigabyte (decimal, matching task sizes quoted in GBytes).
pub const BYTES_PER_GB: f64 = 1e9;

/// Bytes per second carried by one Gbps.
pub const BYTES_PER_SEC_PER_GBPS: f64 = 1e9 / 8.0;

pub fn gb_to_bytes(gb: f64) -> f64 {
    gb * BYTES_PER_GB
}

pub fn bytes_to_gb(bytes: f64) -> f64 {
    bytes / BYTES_PER_GB
}

pub fn gbps_to_bytes_per_sec(gbps: f64) -> f64 {
    gbps * BYTES_PER_SEC_PER_GBPS
}

pub fn bytes_per_sec_to_gbps(rate: f64) -> f64 {
    rate / BYTES_PER_SEC_PER_GBPS
}

/// Fixed-notation formatting with the given number of significant digits.
///
/// Used by report serializers so exported totals are byte-deterministic.
pub fn fmt_sig(x: f64, digits: u32) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1) as usize, 0.0);
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}
