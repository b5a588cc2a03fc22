//! Exact scalar types shared by the rank statistics.
//!
//! Mid-ranks of tied observations are half-integers, and so are the
//! statistics built from them. [`HalfInt`] stores twice the value as an
//! integer, which keeps every comparison exact. [`Rho`] keeps the trimmed
//! proportion as a reduced fraction so `floor(rho * n)` never suffers from
//! binary rounding (e.g. `0.29 * 100`).

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use num_integer::Integer;

use crate::error::{Error, Result};

/// A number of the form `m / 2` for integer `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_int(v: i64) -> Self {
        HalfInt(2 * v)
    }

    /// Builds the value `doubled / 2`.
    pub const fn from_doubled(doubled: i64) -> Self {
        HalfInt(doubled)
    }

    pub const fn doubled(self) -> i64 {
        self.0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Numerator of the reduced fraction.
    pub fn numer(self) -> i64 {
        if self.is_integer() {
            self.0 / 2
        } else {
            self.0
        }
    }

    /// Denominator of the reduced fraction (1 or 2).
    pub fn denom(self) -> i64 {
        if self.is_integer() {
            1
        } else {
            2
        }
    }

    /// Inverse of (`numer`, `denom`); accepts any denominator dividing 2.
    pub fn from_fraction(numer: i64, denom: i64) -> Option<Self> {
        match denom {
            1 => Some(HalfInt(numer.checked_mul(2)?)),
            2 => Some(HalfInt(numer)),
            _ => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl AddAssign for HalfInt {
    fn add_assign(&mut self, rhs: HalfInt) {
        self.0 += rhs.0;
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl From<i64> for HalfInt {
    fn from(v: i64) -> Self {
        HalfInt::from_int(v)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            // -1/2 has integer part 0 but must keep its sign
            let sign = if self.0 < 0 { "-" } else { "" };
            write!(f, "{}{}.5", sign, self.0.abs() / 2)
        }
    }
}

/// Trimmed proportion `0 <= rho < 1`, held as a reduced fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rho {
    num: u64,
    den: u64,
}

impl Rho {
    pub const ZERO: Rho = Rho { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num >= den {
            return Err(Error::invalid(format!(
                "trimmed proportion {num}/{den} must lie in [0, 1)"
            )));
        }
        let g = num.gcd(&den);
        Ok(Rho {
            num: num / g,
            den: den / g,
        })
    }

    /// Uses the shortest decimal representation of `x`, so `0.15` means
    /// exactly 15/100.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::invalid(format!("trimmed proportion {x} is not finite")));
        }
        format!("{x}").parse()
    }

    /// `floor(rho * n)`.
    pub fn trim_count(self, n: usize) -> usize {
        ((self.num as u128 * n as u128) / self.den as u128) as usize
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn numer(self) -> u64 {
        self.num
    }

    pub fn denom(self) -> u64 {
        self.den
    }
}

impl Default for Rho {
    fn default() -> Self {
        Rho::ZERO
    }
}

impl PartialOrd for Rho {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rho {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl FromStr for Rho {
    type Err = Error;

    /// Accepts `0.15`, `.15`, `3/20` and `0`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("cannot parse trimmed proportion {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Rho::new(n, d);
        }
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        let int_part = if int_part.is_empty() { "0" } else { int_part };
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
            || frac_part.len() > 18
        {
            return Err(bad());
        }
        let int: u64 = int_part.parse().map_err(|_| bad())?;
        let den = 10u64.pow(frac_part.len() as u32);
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad())?
        };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
        Rho::new(num, den)
    }
}
