//! Epoch-millisecond time axis and timestamp normalization.
//!
//! Every raw source carries its own clock representation (world clock with a
//! zone, epoch seconds, epoch milliseconds). This module converts all of them
//! onto a single signed epoch-millisecond axis using proleptic-Gregorian
//! calendar arithmetic. Leap seconds are ignored (POSIX epoch); zone offsets
//! are fixed numeric offsets, never named zones with DST rules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Milliseconds since 1970-01-01T00:00:00 UTC. Ordering is integer ordering.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct EpochMillis(pub i64);

impl EpochMillis {
    pub fn value(self) -> i64 {
        self.0
    }
}

impl std::fmt::Display for EpochMillis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Timestamp text layouts accepted by [`to_epoch_ms`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeFormat {
    /// `YYYY:MM:DD:HH:MM:SS`, whole-second resolution, no zone in the text.
    WorldClockColon,
    /// `YYYY-MM-DDTHH:MM:SS[.fff]` with an optional `±HH:MM` / `Z` suffix.
    Iso8601,
    /// Integer seconds since the epoch.
    EpochSeconds,
    /// Integer milliseconds since the epoch.
    EpochMillis,
}

/// How to interpret timestamp text: the layout plus a fixed zone offset used
/// only when the text itself carries no zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeSpec {
    pub format: TimeFormat,
    /// Signed minutes east of UTC; |offset| must not exceed 18 hours.
    pub zone_offset_min: i32,
}

pub const MAX_ZONE_OFFSET_MIN: i32 = 18 * 60;

impl TimeSpec {
    pub fn new(format: TimeFormat, zone_offset_min: i32) -> Result<Self, TimeError> {
        if zone_offset_min.abs() > MAX_ZONE_OFFSET_MIN {
            return Err(TimeError::BadZoneOffset {
                minutes: zone_offset_min,
            });
        }
        Ok(Self {
            format,
            zone_offset_min,
        })
    }

    pub fn utc(format: TimeFormat) -> Self {
        Self {
            format,
            zone_offset_min: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimeError {
    #[error("timestamp {text:?} does not match the {expected} layout")]
    BadFormat { text: String, expected: String },
    #[error("calendar field {field} out of range: {value}")]
    FieldOutOfRange { field: &'static str, value: i64 },
    #[error("zone offset {minutes} min exceeds +/-18:00")]
    BadZoneOffset { minutes: i32 },
}

/// Days from 1970-01-01 for a proleptic-Gregorian civil date.
fn days_from_civil(year: i64, month: u32, day: u32) -> i64 {
    let y = if month <= 2 { year - 1 } else { year };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400; // [0, 399]
    let mp = (month + 9) % 12; // Mar=0 .. Feb=11
    let doy = (153 * mp as i64 + 2) / 5 + day as i64 - 1; // [0, 365]
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy; // [0, 146096]
    era * 146_097 + doe - 719_468
}

/// Civil date from days since 1970-01-01 (inverse of [`days_from_civil`]).
fn civil_from_days(days: i64) -> (i64, u32, u32) {
    let z = days + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097; // [0, 146096]
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365; // [0, 399]
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100); // [0, 365]
    let mp = (5 * doy + 2) / 153; // [0, 11]
    let day = (doy - (153 * mp + 2) / 5 + 1) as u32; // [1, 31]
    let month = if mp < 10 { mp + 3 } else { mp - 9 } as u32; // [1, 12]
    (if month <= 2 { y + 1 } else { y }, month, day)
}

fn is_leap_year(year: i64) -> bool {
    year % 4 == 0 && (year % 100 != 0 || year % 400 == 0)
}

fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap_year(year) => 29,
        2 => 28,
        _ => 0,
    }
}

struct CivilTime {
    year: i64,
    month: u32,
    day: u32,
    hour: u32,
    minute: u32,
    second: u32,
    millis: u32,
}

impl CivilTime {
    fn validate(&self) -> Result<(), TimeError> {
        let check = |field: &'static str, value: i64, lo: i64, hi: i64| {
            if value < lo || value > hi {
                Err(TimeError::FieldOutOfRange { field, value })
            } else {
                Ok(())
            }
        };
        check("month", self.month as i64, 1, 12)?;
        check(
            "day",
            self.day as i64,
            1,
            days_in_month(self.year, self.month) as i64,
        )?;
        check("hour", self.hour as i64, 0, 23)?;
        check("minute", self.minute as i64, 0, 59)?;
        // POSIX epoch: leap seconds do not exist, so second 60 is rejected.
        check("second", self.second as i64, 0, 59)?;
        Ok(())
    }

    fn to_epoch_ms(&self, zone_offset_min: i32) -> EpochMillis {
        let days = days_from_civil(self.year, self.month, self.day);
        let local_ms = days * 86_400_000
            + (self.hour as i64 * 3600 + self.minute as i64 * 60 + self.second as i64) * 1000
            + self.millis as i64;
        EpochMillis(local_ms - zone_offset_min as i64 * 60_000)
    }
}

fn bad_format(text: &str, expected: &str) -> TimeError {
    TimeError::BadFormat {
        text: text.to_string(),
        expected: expected.to_string(),
    }
}

fn parse_fixed_u32(s: &str, width: usize) -> Option<u32> {
    if s.len() != width || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// `YYYY:MM:DD:HH:MM:SS`, all fields fixed-width decimal.
fn parse_world_clock_colon(text: &str) -> Result<CivilTime, TimeError> {
    const EXPECTED: &str = "YYYY:MM:DD:HH:MM:SS";
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 6 {
        return Err(bad_format(text, EXPECTED));
    }
    let widths = [4usize, 2, 2, 2, 2, 2];
    let mut fields = [0u32; 6];
    for (i, (part, width)) in parts.iter().zip(widths).enumerate() {
        fields[i] = parse_fixed_u32(part, width).ok_or_else(|| bad_format(text, EXPECTED))?;
    }
    Ok(CivilTime {
        year: fields[0] as i64,
        month: fields[1],
        day: fields[2],
        hour: fields[3],
        minute: fields[4],
        second: fields[5],
        millis: 0,
    })
}

/// `±HH:MM` offset suffix, in minutes east of UTC.
fn parse_offset_suffix(text: &str) -> Result<i32, TimeError> {
    const EXPECTED: &str = "+HH:MM or -HH:MM zone offset";
    let sign = match text.as_bytes().first() {
        Some(b'+') => 1,
        Some(b'-') => -1,
        _ => return Err(bad_format(text, EXPECTED)),
    };
    let rest = &text[1..];
    let (h, m) = rest
        .split_once(':')
        .ok_or_else(|| bad_format(text, EXPECTED))?;
    let hours = parse_fixed_u32(h, 2).ok_or_else(|| bad_format(text, EXPECTED))?;
    let minutes = parse_fixed_u32(m, 2).ok_or_else(|| bad_format(text, EXPECTED))?;
    if minutes > 59 {
        return Err(TimeError::FieldOutOfRange {
            field: "offset-minute",
            value: minutes as i64,
        });
    }
    let total = sign * (hours * 60 + minutes) as i32;
    if total.abs() > MAX_ZONE_OFFSET_MIN {
        return Err(TimeError::BadZoneOffset { minutes: total });
    }
    Ok(total)
}

/// `YYYY-MM-DDTHH:MM:SS[.fff]` with optional `Z` / `±HH:MM`. Returns the
/// civil fields and the offset carried by the text (if any).
fn parse_iso8601(text: &str) -> Result<(CivilTime, Option<i32>), TimeError> {
    const EXPECTED: &str = "YYYY-MM-DDTHH:MM:SS[.fff][+HH:MM]";
    let bytes = text.as_bytes();
    if bytes.len() < 19 || bytes[4] != b'-' || bytes[7] != b'-' || bytes[10] != b'T' {
        return Err(bad_format(text, EXPECTED));
    }
    let year = parse_fixed_u32(&text[0..4], 4).ok_or_else(|| bad_format(text, EXPECTED))?;
    let month = parse_fixed_u32(&text[5..7], 2).ok_or_else(|| bad_format(text, EXPECTED))?;
    let day = parse_fixed_u32(&text[8..10], 2).ok_or_else(|| bad_format(text, EXPECTED))?;
    if bytes[13] != b':' || bytes[16] != b':' {
        return Err(bad_format(text, EXPECTED));
    }
    let hour = parse_fixed_u32(&text[11..13], 2).ok_or_else(|| bad_format(text, EXPECTED))?;
    let minute = parse_fixed_u32(&text[14..16], 2).ok_or_else(|| bad_format(text, EXPECTED))?;
    let second = parse_fixed_u32(&text[17..19], 2).ok_or_else(|| bad_format(text, EXPECTED))?;

    let mut rest = &text[19..];
    let mut millis = 0u32;
    if let Some(stripped) = rest.strip_prefix('.') {
        let digits: String = stripped
            .chars()
            .take_while(|c| c.is_ascii_digit())
            .collect();
        if digits.is_empty() || digits.len() > 3 {
            return Err(bad_format(text, EXPECTED));
        }
        // Right-pad to millisecond resolution: ".1" means 100 ms.
        let mut value = digits.parse::<u32>().unwrap();
        for _ in digits.len()..3 {
            value *= 10;
        }
        millis = value;
        rest = &stripped[digits.len()..];
    }

    let offset = if rest.is_empty() {
        None
    } else if rest == "Z" {
        Some(0)
    } else {
        Some(parse_offset_suffix(rest)?)
    };

    Ok((
        CivilTime {
            year: year as i64,
            month,
            day,
            hour,
            minute,
            second,
            millis,
        },
        offset,
    ))
}

fn parse_epoch_int(text: &str) -> Option<i64> {
    let t = text.strip_prefix('+').unwrap_or(text);
    if t.is_empty() {
        return None;
    }
    let digits = t.strip_prefix('-').unwrap_or(t);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    t.parse().ok()
}

/// Convert timestamp text to the UTC epoch-millisecond instant.
///
/// When the text carries its own zone (ISO-8601 suffix), that zone wins;
/// otherwise `spec.zone_offset_min` applies.
pub fn to_epoch_ms(text: &str, spec: &TimeSpec) -> Result<EpochMillis, TimeError> {
    match spec.format {
        TimeFormat::WorldClockColon => {
            let civil = parse_world_clock_colon(text)?;
            civil.validate()?;
            Ok(civil.to_epoch_ms(spec.zone_offset_min))
        }
        TimeFormat::Iso8601 => {
            let (civil, text_offset) = parse_iso8601(text)?;
            civil.validate()?;
            Ok(civil.to_epoch_ms(text_offset.unwrap_or(spec.zone_offset_min)))
        }
        TimeFormat::EpochSeconds => {
            let secs =
                parse_epoch_int(text).ok_or_else(|| bad_format(text, "integer epoch seconds"))?;
            Ok(seconds_to_ms(secs))
        }
        TimeFormat::EpochMillis => {
            let ms = parse_epoch_int(text)
                .ok_or_else(|| bad_format(text, "integer epoch milliseconds"))?;
            Ok(EpochMillis(ms))
        }
    }
}

/// Epoch seconds to epoch milliseconds: exactly `s * 1000`.
pub fn seconds_to_ms(s: i64) -> EpochMillis {
    EpochMillis(s * 1000)
}

/// Format an instant as `YYYY-MM-DDTHH:MM:SS.fff±HH:MM` at a fixed offset.
pub fn format_iso8601(t: EpochMillis, zone_offset_min: i32) -> String {
    let local = t.0 + zone_offset_min as i64 * 60_000;
    let days = local.div_euclid(86_400_000);
    let ms_of_day = local.rem_euclid(86_400_000);
    let (year, month, day) = civil_from_days(days);
    let hour = ms_of_day / 3_600_000;
    let minute = ms_of_day % 3_600_000 / 60_000;
    let second = ms_of_day % 60_000 / 1000;
    let millis = ms_of_day % 1000;
    let sign = if zone_offset_min < 0 { '-' } else { '+' };
    let off = zone_offset_min.unsigned_abs();
    format!(
        "{year:04}-{month:02}-{day:02}T{hour:02}:{minute:02}:{second:02}.{millis:03}{sign}{:02}:{:02}",
        off / 60,
        off % 60
    )
}

/// Format an instant as `YYYY:MM:DD:HH:MM:SS` local to a fixed offset.
/// Whole-second resolution; sub-second parts are truncated.
pub fn format_world_clock_colon(t: EpochMillis, zone_offset_min: i32) -> String {
    let local = t.0 + zone_offset_min as i64 * 60_000;
    let days = local.div_euclid(86_400_000);
    let ms_of_day = local.rem_euclid(86_400_000);
    let (year, month, day) = civil_from_days(days);
    format!(
        "{year:04}:{month:02}:{day:02}:{:02}:{:02}:{:02}",
        ms_of_day / 3_600_000,
        ms_of_day % 3_600_000 / 60_000,
        ms_of_day % 60_000 / 1000
    )
}

/// One out-of-cadence gap: `index` is the position of the later timestamp
/// (equivalently the 1-based ordinal of the gap), `gap_ms` the observed gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CadenceDeviation {
    pub index: usize,
    pub gap_ms: i64,
}

/// Report every adjacent gap deviating from the expected interval by more
/// than the tolerance. Fewer than two timestamps conform vacuously.
pub fn cadence_check(
    timestamps: &[EpochMillis],
    expected_interval_ms: i64,
    tolerance_ms: i64,
) -> Vec<CadenceDeviation> {
    debug_assert!(expected_interval_ms > 0);
    debug_assert!(tolerance_ms >= 0);
    timestamps
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let gap = w[1].0 - w[0].0;
            ((gap - expected_interval_ms).abs() > tolerance_ms).then_some(CadenceDeviation {
                index: i + 1,
                gap_ms: gap,
            })
        })
        .collect()
}
