//! Iterated exponentials `tow(x)` and `tow_a(x)`.
//!
//! `tow(x) = 1` on `[0, 1)` and `tow(1 + x) = 2^{tow(x)}`. For a general base
//! the recursion is ambiguous in its inner call, so both readings exist:
//! `Literal` uses `a^{tow(x)}` (base-2 inner tower), `SelfReferential` uses
//! `a^{tow_a(x)}`. They coincide for `a = 2`.

use num_bigint::BigUint;
use serde::{Serialize, Serializer};

/// Largest exact result kept as an integer, in bits.
pub const EXACT_BIT_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TowerReading {
    Literal,
    SelfReferential,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TowerValue {
    Exact(BigUint),
    Real(f64),
    /// `base^exponent`, kept symbolic because it does not fit.
    Power { base: f64, exponent: Box<TowerValue> },
}

impl TowerValue {
    /// Number of symbolic exponentiation layers.
    pub fn height(&self) -> usize {
        match self {
            TowerValue::Power { exponent, .. } => 1 + exponent.height(),
            _ => 0,
        }
    }

    pub fn to_f64(&self) -> Option<f64> {
        match self {
            TowerValue::Exact(v) => {
                let f = v.to_string().parse::<f64>().ok()?;
                f.is_finite().then_some(f)
            }
            TowerValue::Real(v) => Some(*v),
            TowerValue::Power { base, exponent } => {
                let v = base.powf(exponent.to_f64()?);
                v.is_finite().then_some(v)
            }
        }
    }

    /// Number of decimal digits of the integer part, when representable.
    pub fn decimal_digits(&self) -> Option<f64> {
        match self {
            TowerValue::Exact(v) => Some(v.to_string().len() as f64),
            TowerValue::Real(v) if *v >= 1.0 => Some(v.log10().floor() + 1.0),
            TowerValue::Real(_) => Some(1.0),
            TowerValue::Power { base, exponent } => {
                let digits = exponent.to_f64()? * base.log10();
                digits.is_finite().then(|| digits.floor() + 1.0)
            }
        }
    }

    fn power(base: f64, exponent: TowerValue) -> TowerValue {
        match exponent.to_f64() {
            Some(e) if base.powf(e).is_finite() => TowerValue::Real(base.powf(e)),
            _ => TowerValue::Power {
                base,
                exponent: Box::new(exponent),
            },
        }
    }
}

impl Serialize for TowerValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(rename_all = "lowercase")]
        enum Repr<'a> {
            Exact(String),
            Real(f64),
            Power { base: f64, exponent: &'a TowerValue },
        }
        match self {
            TowerValue::Exact(v) => Repr::Exact(v.to_string()).serialize(s),
            TowerValue::Real(v) => Repr::Real(*v).serialize(s),
            TowerValue::Power { base, exponent } => Repr::Power {
                base: *base,
                exponent,
            }
            .serialize(s),
        }
    }
}

/// Base-2 tower.
pub fn tower(x: f64) -> TowerValue {
    assert!(x >= 0.0, "tower argument must be nonnegative");
    let height = x.floor() as u64;
    let mut v = TowerValue::Exact(BigUint::from(1u32));
    for _ in 0..height {
        v = match v {
            TowerValue::Exact(e) if e < BigUint::from(EXACT_BIT_LIMIT) => {
                let bits = u64::try_from(&e).expect("bounded above");
                TowerValue::Exact(BigUint::from(1u32) << bits)
            }
            other => TowerValue::Power {
                base: 2.0,
                exponent: Box::new(other),
            },
        };
    }
    v
}

/// `tow_a(x)` for `a > 1`, `x ≥ 0`.
pub fn tower_value(a: f64, x: f64, reading: TowerReading) -> TowerValue {
    assert!(a > 1.0, "tower base must exceed 1");
    assert!(x >= 0.0, "tower argument must be nonnegative");
    if a == 2.0 {
        return tower(x);
    }
    if x < 1.0 {
        return TowerValue::Real(1.0);
    }
    let inner = match reading {
        TowerReading::Literal => tower(x - 1.0),
        TowerReading::SelfReferential => tower_value(a, x - 1.0, reading),
    };
    TowerValue::power(a, inner)
}
