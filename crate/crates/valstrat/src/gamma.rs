//! The multiplicative value group.
//!
//! Values live in `Γ = Γ^× ∪ {Zero}`, extended by a top element `Inf`.
//! `Γ^×` is modelled as `{θ^e : e ∈ ℚ}` for a formal base `0 < θ < 1`, so a
//! value is stored as its exact rational exponent and the order is the
//! *reverse* of the exponent order: `θ^e < θ^e' ⟺ e > e'`.  `Zero` sits below
//! all of `Γ^×` (the value of 0) and `Inf` above (the distance to an empty
//! set).

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero as NumZero};

use crate::error::{Error, Result};

/// Exact rational exponent of a value-group element.
pub type Exp = BigRational;

/// Builds the exponent `num/den`.
pub fn exp(num: i64, den: i64) -> Exp {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds the integer exponent `n`.
pub fn exp_int(n: i64) -> Exp {
    BigRational::from(BigInt::from(n))
}

/// An element of `Γ ∪ {Inf}` with the total order
/// `Zero < ... < ⟨1⟩ < ⟨0⟩ = 1 < ⟨-1⟩ < ... < Inf`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GammaValue {
    /// Value of 0; absorbing for multiplication, bottom of the order.
    Zero,
    /// `⟨e⟩ = θ^e` for an exact rational exponent `e`.
    Finite(Exp),
    /// Top element; the conventional value of a distance to the empty set.
    Inf,
}

impl GammaValue {
    pub fn finite(num: i64, den: i64) -> Self {
        GammaValue::Finite(exp(num, den))
    }

    pub fn finite_int(n: i64) -> Self {
        GammaValue::Finite(exp_int(n))
    }

    /// The group identity `⟨0⟩ = 1`.
    pub fn one() -> Self {
        GammaValue::Finite(BigRational::zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, GammaValue::Finite(e) if e.is_zero())
    }

    pub fn exponent(&self) -> Option<&Exp> {
        match self {
            GammaValue::Finite(e) => Some(e),
            _ => None,
        }
    }

    /// Multiplication in the extended group. `Zero` and `Inf` absorb;
    /// their mutual product is rejected.
    pub fn mul(&self, other: &GammaValue) -> Result<GammaValue> {
        use GammaValue::*;
        match (self, other) {
            (Zero, Inf) | (Inf, Zero) => Err(Error::UndefinedProduct),
            (Zero, _) | (_, Zero) => Ok(Zero),
            (Inf, _) | (_, Inf) => Ok(Inf),
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
        }
    }

    /// Multiplicative inverse of a finite value.
    pub fn inv(&self) -> Result<GammaValue> {
        match self {
            GammaValue::Finite(e) => Ok(GammaValue::Finite(-e)),
            GammaValue::Zero => Err(Error::Domain("inverse of zero value".into())),
            GammaValue::Inf => Err(Error::Domain("inverse of inf".into())),
        }
    }

    /// `self / other` with the convention `γ / Inf = Zero` used for the
    /// distance bounds of Lipschitz chains.
    pub fn div_conv(&self, other: &GammaValue) -> Result<GammaValue> {
        match other {
            GammaValue::Inf => match self {
                GammaValue::Inf => Err(Error::Domain("inf / inf".into())),
                _ => Ok(GammaValue::Zero),
            },
            GammaValue::Zero => Err(Error::Domain("division by zero value".into())),
            GammaValue::Finite(_) => self.mul(&other.clone().inv()?),
        }
    }

    /// Rational power. `Zero` and `Inf` only admit positive exponents.
    pub fn pow(&self, r: &Exp) -> Result<GammaValue> {
        match self {
            GammaValue::Finite(e) => Ok(GammaValue::Finite(e * r)),
            GammaValue::Zero | GammaValue::Inf => {
                if r.is_positive() {
                    Ok(self.clone())
                } else {
                    Err(Error::Domain(
                        "zero/inf admit only positive powers".into(),
                    ))
                }
            }
        }
    }

    pub fn pow_i(&self, r: i64) -> Result<GammaValue> {
        self.pow(&exp_int(r))
    }
}

impl PartialOrd for GammaValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GammaValue {
    fn cmp(&self, other: &Self) -> Ordering {
        use GammaValue::*;
        match (self, other) {
            (Zero, Zero) | (Inf, Inf) => Ordering::Equal,
            (Zero, _) => Ordering::Less,
            (_, Zero) => Ordering::Greater,
            (Inf, _) => Ordering::Greater,
            (_, Inf) => Ordering::Less,
            // reversed order on exponents
            (Finite(a), Finite(b)) => b.cmp(a),
        }
    }
}

impl fmt::Display for GammaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaValue::Zero => write!(f, "0"),
            GammaValue::Inf => write!(f, "inf"),
            GammaValue::Finite(e) => {
                if e.is_integer() {
                    write!(f, "<{}>", e.numer())
                } else {
                    write!(f, "<{}/{}>", e.numer(), e.denom())
                }
            }
        }
    }
}

/// Comparison of two values: `compare(a, b)`.
pub fn gamma_compare(a: &GammaValue, b: &GammaValue) -> Ordering {
    a.cmp(b)
}

pub fn gamma_mul(a: &GammaValue, b: &GammaValue) -> Result<GammaValue> {
    a.mul(b)
}

pub fn gamma_pow(a: &GammaValue, r: &Exp) -> Result<GammaValue> {
    a.pow(r)
}

/// Maximum of an iterator of values (`Zero` if empty).
pub fn gamma_max<'a, I: IntoIterator<Item = &'a GammaValue>>(vals: I) -> GammaValue {
    let mut best = GammaValue::Zero;
    for v in vals {
        if *v > best {
            best = v.clone();
        }
    }
    best
}

/// Minimum of an iterator of values (`Inf` if empty).
pub fn gamma_min<'a, I: IntoIterator<Item = &'a GammaValue>>(vals: I) -> GammaValue {
    let mut best = GammaValue::Inf;
    for v in vals {
        if *v < best {
            best = v.clone();
        }
    }
    best
}

impl GammaValue {
    /// JSON encoding: `{"kind":"zero"}`, `{"kind":"inf"}` or
    /// `{"kind":"finite","num":n,"den":d}` with `d > 0` and `gcd(n,d) = 1`.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            GammaValue::Zero => serde_json::json!({"kind": "zero"}),
            GammaValue::Inf => serde_json::json!({"kind": "inf"}),
            GammaValue::Finite(e) => serde_json::json!({
                "kind": "finite",
                "num": e.numer().to_string().parse::<i64>().map(serde_json::Value::from)
                    .unwrap_or_else(|_| serde_json::Value::String(e.numer().to_string())),
                "den": e.denom().to_string().parse::<i64>().map(serde_json::Value::from)
                    .unwrap_or_else(|_| serde_json::Value::String(e.denom().to_string())),
            }),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<GammaValue> {
        let kind = v
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| Error::Input("gamma value needs a \"kind\" field".into()))?;
        match kind {
            "zero" => Ok(GammaValue::Zero),
            "inf" => Ok(GammaValue::Inf),
            "finite" => {
                let num = json_bigint(v.get("num"))?;
                let den = json_bigint(v.get("den"))?;
                if den <= BigInt::from(0) {
                    return Err(Error::Input("gamma denominator must be positive".into()));
                }
                Ok(GammaValue::Finite(BigRational::new(num, den)))
            }
            other => Err(Error::Input(format!("unknown gamma kind {other:?}"))),
        }
    }
}

fn json_bigint(v: Option<&serde_json::Value>) -> Result<BigInt> {
    match v {
        Some(serde_json::Value::Number(n)) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| Error::Input("non-integer exponent component".into())),
        Some(serde_json::Value::String(s)) => s
            .parse::<BigInt>()
            .map_err(|_| Error::Input(format!("bad integer {s:?}"))),
        _ => Err(Error::Input("missing exponent component".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(num: i64, den: i64) -> GammaValue {
        GammaValue::finite(num, den)
    }

    #[test]
    fn order_examples() {
        // t lies in the maximal ideal, so v(t) < 1
        assert!(g(1, 1) < g(0, 1));
        // 0 < Γ^×
        assert!(GammaValue::Zero < g(-5, 1));
        // inf is the top element
        assert!(GammaValue::Inf > g(100, 1));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(g(1, 1).mul(&g(1, 2)).unwrap(), g(3, 2));
        assert_eq!(GammaValue::Zero.mul(&g(3, 1)).unwrap(), GammaValue::Zero);
        assert_eq!(g(-2, 1).mul(&g(2, 1)).unwrap(), GammaValue::one());
        assert_eq!(
            GammaValue::Zero.mul(&GammaValue::Inf),
            Err(Error::UndefinedProduct)
        );
    }

    #[test]
    fn pow_examples() {
        assert_eq!(g(2, 1).pow(&exp(3, 2)).unwrap(), g(3, 1));
        // exponent b/a = 2/3 applied to <-3>
        assert_eq!(g(-3, 1).pow(&exp(2, 3)).unwrap(), g(-2, 1));
        assert_eq!(g(5, 1).pow(&exp(0, 1)).unwrap(), GammaValue::one());
        assert!(GammaValue::Zero.pow(&exp(-1, 1)).is_err());
        assert_eq!(
            GammaValue::Inf.pow(&exp(1, 2)).unwrap(),
            GammaValue::Inf
        );
    }

    #[test]
    fn div_convention() {
        assert_eq!(
            g(3, 1).div_conv(&GammaValue::Inf).unwrap(),
            GammaValue::Zero
        );
        assert_eq!(g(3, 1).div_conv(&g(1, 1)).unwrap(), g(2, 1));
    }

    #[test]
    fn json_round_trip() {
        for v in [GammaValue::Zero, GammaValue::Inf, g(-7, 3), g(4, 1)] {
            let back = GammaValue::from_json(&v.to_json()).unwrap();
            assert_eq!(v, back);
        }
        assert!(GammaValue::from_json(&serde_json::json!({"kind":"finite","num":1,"den":0})).is_err());
    }

    proptest! {
        #[test]
        fn mul_associative(a in -40i64..40, b in -40i64..40, c in -40i64..40,
                           da in 1i64..7, db in 1i64..7, dc in 1i64..7) {
            let (x, y, z) = (g(a, da), g(b, db), g(c, dc));
            let left = x.mul(&y).unwrap().mul(&z).unwrap();
            let right = x.mul(&y.mul(&z).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn order_translation_invariant(a in -40i64..40, b in -40i64..40, c in -40i64..40,
                                       d in 1i64..7) {
            let (x, y, z) = (g(a, d), g(b, d), g(c, d));
            if x < y {
                prop_assert!(x.mul(&z).unwrap() < y.mul(&z).unwrap());
            }
        }

        #[test]
        fn pow_round_trip(a in -40i64..40, d in 1i64..7, rn in 1i64..9, rd in 1i64..9) {
            let x = g(a, d);
            let r = exp(rn, rd);
            let rinv = exp(rd, rn);
            prop_assert_eq!(x.pow(&r).unwrap().pow(&rinv).unwrap(), x);
        }
    }
}
