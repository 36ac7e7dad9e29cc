//! Exponent calculators for lower and upper bounds on the box problem.
//!
//! Every bound is reported as a parameter `alpha`, meaning an edge count of
//! order `n^(d - 1/alpha)`. All values are exact big rationals.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("uniformity must be at least 2, got {0}")]
    Uniformity(u32),
    #[error("invalid range {0}..={1}")]
    Range(u32, u32),
    #[error("r_max must be at least 1")]
    RMax,
}

fn mersenne(d: u32) -> BigInt {
    (BigInt::one() << d as usize) - 1
}

fn check_d(d: u32) -> Result<(), BoundsError> {
    if d < 2 {
        Err(BoundsError::Uniformity(d))
    } else {
        Ok(())
    }
}

/// `2^(d-1)`, the exponent parameter of the classical upper bound.
pub fn upper_alpha(d: u32) -> Result<BigRational, BoundsError> {
    check_d(d)?;
    Ok(BigRational::from_integer(BigInt::one() << (d as usize - 1)))
}

/// `(2^d - 1)/d`, from random hypergraphs plus deletion.
pub fn deletion_alpha(d: u32) -> Result<BigRational, BoundsError> {
    check_d(d)?;
    Ok(BigRational::new(mersenne(d), BigInt::from(d)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GrsAlpha {
    #[serde(serialize_with = "ser_display")]
    pub s: BigInt,
    #[serde(serialize_with = "ser_display")]
    pub alpha: BigRational,
}

/// The random-hyperplane bound: the least `s >= 1` with
/// `s d = 1 (mod 2^d - 1)` and `alpha = s (2^d - 1) / (s d - 1)`. Absent when
/// `gcd(d, 2^d - 1) > 1`.
pub fn grs_alpha(d: u32) -> Result<Option<GrsAlpha>, BoundsError> {
    check_d(d)?;
    let m = mersenne(d);
    let dd = BigInt::from(d);
    let eg = dd.extended_gcd(&m);
    if !eg.gcd.is_one() {
        return Ok(None);
    }
    // d^{-1} mod m, as a representative in [1, m - 1]
    let mut s = eg.x.mod_floor(&m);
    if s.is_zero() {
        s = m.clone();
    }
    let alpha = BigRational::new(&s * &m, &s * &dd - 1);
    Ok(Some(GrsAlpha { s, alpha }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NewAlpha {
    pub r: u64,
    #[serde(serialize_with = "ser_display")]
    pub s: BigInt,
    #[serde(serialize_with = "ser_display")]
    pub alpha: BigRational,
}

/// `d (s - 1) < (2^d - 1) r`, exactly.
pub fn check_params(d: u32, r: u64, s: u64) -> bool {
    check_params_big(d, r, &BigInt::from(s))
}

fn check_params_big(d: u32, r: u64, s: &BigInt) -> bool {
    BigInt::from(d) * (s - 1) < mersenne(d) * BigInt::from(r)
}

/// Largest `s` allowed for a given `r`: `d (s - 1) <= (2^d - 1) r - 1`.
fn max_s(d: u32, r: u64) -> BigInt {
    (mersenne(d) * BigInt::from(r) - 1u32).div_floor(&BigInt::from(d)) + 1
}

/// Best `s / r` over `1 <= r <= r_max` with `(r, s)` admissible, ties going to
/// the smaller `r`.
pub fn new_alpha(d: u32, r_max: u64) -> Result<NewAlpha, BoundsError> {
    check_d(d)?;
    if r_max == 0 {
        return Err(BoundsError::RMax);
    }
    let mut best: Option<NewAlpha> = None;
    for r in 1..=r_max {
        let s = max_s(d, r);
        debug_assert!(check_params_big(d, r, &s) && !check_params_big(d, r, &(&s + 1)));
        let alpha = BigRational::new(s.clone(), BigInt::from(r));
        if best.as_ref().is_none_or(|b| alpha > b.alpha) {
            best = Some(NewAlpha { r, s, alpha });
        }
    }
    Ok(best.expect("r_max >= 1"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsRow {
    pub d: u32,
    #[serde(serialize_with = "ser_display")]
    pub alpha_upper: BigRational,
    #[serde(serialize_with = "ser_display")]
    pub alpha_deletion: BigRational,
    pub alpha_grs: Option<GrsAlpha>,
    pub alpha_new: NewAlpha,
}

impl BoundsRow {
    pub fn new(d: u32, r_max: u64) -> Result<BoundsRow, BoundsError> {
        Ok(BoundsRow {
            d,
            alpha_upper: upper_alpha(d)?,
            alpha_deletion: deletion_alpha(d)?,
            alpha_grs: grs_alpha(d)?,
            alpha_new: new_alpha(d, r_max)?,
        })
    }

    /// The four displayed cells `d`, deletion, GRS (possibly empty), new.
    pub fn cells(&self, mode: Rounding) -> [String; 4] {
        [
            self.d.to_string(),
            format_fixed(&self.alpha_deletion, 2, mode),
            self.alpha_grs
                .as_ref()
                .map(|g| format_fixed(&g.alpha, 2, mode))
                .unwrap_or_default(),
            format_fixed(&self.alpha_new.alpha, 2, mode),
        ]
    }
}

pub fn comparison_table(d_min: u32, d_max: u32, r_max: u64) -> Result<Vec<BoundsRow>, BoundsError> {
    if d_min < 2 || d_min > d_max {
        return Err(BoundsError::Range(d_min, d_max));
    }
    (d_min..=d_max).map(|d| BoundsRow::new(d, r_max)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    /// Drop digits past the last place; this is how the published table
    /// was printed.
    #[default]
    Truncate,
    HalfUp,
}

/// Decimal rendering of a nonnegative rational with `places` digits.
pub fn format_fixed(x: &BigRational, places: u32, mode: Rounding) -> String {
    assert!(!x.is_negative(), "only nonnegative values are rendered");
    let scale = BigInt::from(10u32).pow(places);
    let scaled = x * BigRational::from_integer(scale.clone());
    let units = match mode {
        Rounding::Truncate => scaled.floor().to_integer(),
        Rounding::HalfUp => (scaled + BigRational::new(BigInt::one(), BigInt::from(2)))
            .floor()
            .to_integer(),
    };
    let (int, frac) = units.div_rem(&scale);
    if places == 0 {
        return int.to_string();
    }
    format!(
        "{int}.{:0>width$}",
        frac.to_string(),
        width = places as usize
    )
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn ser_display<T: fmt::Display, S: serde::Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(x)
}
