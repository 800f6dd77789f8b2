use core::fmt;
use core::ops::{Add, AddAssign, Sub};

/// A point or span on the simulation time axis.
///
/// Stored as whole microseconds so that ordering and sums are exact; the
/// public unit everywhere else is the millisecond.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_us(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000)
    }

    /// Rounds a fractional millisecond value to the nearest microsecond.
    /// Negative and NaN inputs map to zero.
    pub fn from_ms_f64(ms: f64) -> Self {
        let us = libm::round(ms * 1_000.0);
        if us.is_nan() || us <= 0.0 {
            SimTime(0)
        } else if us >= u64::MAX as f64 {
            SimTime(u64::MAX)
        } else {
            SimTime(us as u64)
        }
    }

    pub const fn as_us(self) -> u64 {
        self.0
    }

    pub fn as_ms_f64(self) -> f64 {
        self.0 as f64 / 1_000.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1_000_000.0
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_add(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_add(rhs.0).map(SimTime)
    }
}

impl Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;

    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl core::iter::Sum for SimTime {
    fn sum<I: Iterator<Item = SimTime>>(iter: I) -> SimTime {
        iter.fold(SimTime::ZERO, |a, b| a + b)
    }
}

/// Milliseconds with exactly three decimals, e.g. `85.000`.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.0 / 1_000, self.0 % 1_000)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseSimTimeError;

impl fmt::Display for ParseSimTimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected milliseconds with at most three decimals")
    }
}

impl core::error::Error for ParseSimTimeError {}

impl core::str::FromStr for SimTime {
    type Err = ParseSimTimeError;

    /// Inverse of the `Display` form; accepts up to three decimals.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() || frac.len() > 3 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseSimTimeError);
        }
        let ms: u64 = whole.parse().map_err(|_| ParseSimTimeError)?;
        let mut us = 0u64;
        for (i, b) in frac.bytes().enumerate() {
            us += u64::from(b - b'0') * [100, 10, 1][i];
        }
        ms.checked_mul(1_000).and_then(|v| v.checked_add(us)).map(SimTime).ok_or(ParseSimTimeError)
    }
}
