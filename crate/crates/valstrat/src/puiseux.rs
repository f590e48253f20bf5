//! Truncated Puiseux series over approximate complex coefficients.
//!
//! A series is a finite, strictly increasing list of exponent/coefficient
//! pairs together with a precision marker: the series is known modulo terms
//! of exponent `>= prec`.  All exponents are exact rationals; coefficients
//! are `f64` complex numbers with a relative floor below which a coefficient
//! is treated as an exact cancellation.  This is the concrete valued field
//! the rest of the crate works over: `v(Σ c_e t^e) = ⟨min e⟩`.

use std::fmt;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero as NumZero};

use crate::error::{Error, Result};
use crate::gamma::{exp_int, Exp, GammaValue};

/// Complex coefficient type.
pub type Coeff = Complex64;

/// Relative floor under which a coefficient counts as a numerical zero.
pub const COEFF_EPS: f64 = 1e-9;

/// Default truncation depth, counted in exponent levels past the leading
/// exponent.
pub const DEFAULT_DEPTH: i64 = 24;

/// Cap on exponent denominators; exceeding it signals a runaway root loop.
pub const MAX_EXP_DEN: u64 = 1_000_000;

/// Precision marker: the series is known modulo `t^e` terms with `e >= prec`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prec {
    Exp(Exp),
    Inf,
}

impl Prec {
    pub fn min(&self, other: &Prec) -> Prec {
        match (self, other) {
            (Prec::Inf, p) | (p, Prec::Inf) => p.clone(),
            (Prec::Exp(a), Prec::Exp(b)) => Prec::Exp(a.min(b).clone()),
        }
    }

    pub fn shift(&self, by: &Exp) -> Prec {
        match self {
            Prec::Inf => Prec::Inf,
            Prec::Exp(e) => Prec::Exp(e + by),
        }
    }

    pub fn allows(&self, e: &Exp) -> bool {
        match self {
            Prec::Inf => true,
            Prec::Exp(p) => e < p,
        }
    }
}

/// A truncated Puiseux series.
#[derive(Debug, Clone, PartialEq)]
pub struct PSeries {
    /// Sorted by strictly increasing exponent; all coefficients above the
    /// relative floor; all exponents below `prec`.
    terms: Vec<(Exp, Coeff)>,
    prec: Prec,
}

impl PSeries {
    /// The exact zero series.
    pub fn zero() -> Self {
        PSeries { terms: Vec::new(), prec: Prec::Inf }
    }

    /// Zero up to precision `e`: nothing is known below `t^e`.
    pub fn zero_with_prec(e: Exp) -> Self {
        PSeries { terms: Vec::new(), prec: Prec::Exp(e) }
    }

    pub fn constant(c: Coeff) -> Self {
        Self::monomial(Exp::zero(), c)
    }

    pub fn one() -> Self {
        Self::constant(Coeff::new(1.0, 0.0))
    }

    /// `c * t^e`, exact.
    pub fn monomial(e: Exp, c: Coeff) -> Self {
        let terms = if c.norm() == 0.0 { Vec::new() } else { vec![(e, c)] };
        PSeries { terms, prec: Prec::Inf }
    }

    /// The uniformizer `t`.
    pub fn var() -> Self {
        Self::monomial(Exp::one(), Coeff::new(1.0, 0.0))
    }

    /// Builds a series from `(num, den, re, im)` tuples, exact precision.
    pub fn from_terms(terms: &[(i64, i64, f64, f64)]) -> Self {
        let raw: Vec<(Exp, Coeff)> = terms
            .iter()
            .map(|&(n, d, re, im)| (BigRational::new(n.into(), d.into()), Coeff::new(re, im)))
            .collect();
        Self::build(raw, Prec::Inf).expect("exact construction")
    }

    pub fn terms(&self) -> &[(Exp, Coeff)] {
        &self.terms
    }

    pub fn prec(&self) -> &Prec {
        &self.prec
    }

    pub fn with_prec(mut self, prec: Prec) -> Self {
        self.prec = prec;
        self.truncate_to_prec();
        self
    }

    fn truncate_to_prec(&mut self) {
        let prec = self.prec.clone();
        self.terms.retain(|(e, _)| prec.allows(e));
    }

    /// Normalizing constructor: sorts, merges equal exponents, applies the
    /// precision cut and the coefficient floor.  A merged coefficient is
    /// dropped as a numerical zero when it is below `COEFF_EPS` relative to
    /// the magnitude that accumulated in its exponent slot, so genuine
    /// cancellations vanish while honest small terms survive.
    fn build(mut raw: Vec<(Exp, Coeff)>, prec: Prec) -> Result<Self> {
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let mut slots: Vec<(Exp, Coeff, f64)> = Vec::with_capacity(raw.len());
        for (e, c) in raw {
            if !prec.allows(&e) {
                continue;
            }
            match slots.last_mut() {
                Some((le, lc, lm)) if *le == e => {
                    *lc += c;
                    *lm += c.norm();
                }
                _ => {
                    let mag = c.norm();
                    slots.push((e, c, mag));
                }
            }
        }
        let mut terms: Vec<(Exp, Coeff)> = Vec::with_capacity(slots.len());
        for (e, c, mag) in slots {
            if c.norm() <= COEFF_EPS * mag {
                continue;
            }
            if *e.denom() > num_bigint::BigInt::from(MAX_EXP_DEN) {
                return Err(Error::Resource(format!(
                    "exponent denominator {} exceeds cap",
                    e.denom()
                )));
            }
            terms.push((e, c));
        }
        Ok(PSeries { terms, prec })
    }

    /// True when the series is exactly zero (no terms, infinite precision).
    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.prec == Prec::Inf
    }

    /// True when nothing is visible at the current precision.
    pub fn is_zero_at_prec(&self) -> bool {
        self.terms.is_empty()
    }

    /// Leading exponent, if any term is visible.
    pub fn leading(&self) -> Option<(&Exp, &Coeff)> {
        self.terms.first().map(|(e, c)| (e, c))
    }

    /// Valuation. `Zero` for the exact zero; an error when the series is
    /// indistinguishable from zero at finite precision.
    pub fn val(&self) -> Result<GammaValue> {
        match self.terms.first() {
            Some((e, _)) => Ok(GammaValue::Finite(e.clone())),
            None => match self.prec {
                Prec::Inf => Ok(GammaValue::Zero),
                Prec::Exp(_) => Err(Error::PrecisionExhausted(
                    "series is zero up to its precision".into(),
                )),
            },
        }
    }

    /// Coefficient at a given exponent (0 if absent); errors when the
    /// precision does not reach the requested exponent.
    pub fn coeff_at(&self, e: &Exp) -> Result<Coeff> {
        if !self.prec.allows(e) {
            return Err(Error::PrecisionExhausted(format!(
                "coefficient at t^{e} is beyond precision"
            )));
        }
        Ok(self
            .terms
            .iter()
            .find(|(te, _)| te == e)
            .map(|(_, c)| *c)
            .unwrap_or_else(|| Coeff::new(0.0, 0.0)))
    }

    pub fn add(&self, other: &PSeries) -> Result<PSeries> {
        let mut raw = self.terms.clone();
        raw.extend(other.terms.iter().cloned());
        PSeries::build(raw, self.prec.min(&other.prec))
    }

    pub fn sub(&self, other: &PSeries) -> Result<PSeries> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> PSeries {
        PSeries {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
            prec: self.prec.clone(),
        }
    }

    pub fn scale(&self, c: Coeff) -> PSeries {
        if c.norm() == 0.0 {
            // an exact constant zero annihilates, but unknown tails stay unknown
            return match &self.prec {
                Prec::Inf => PSeries::zero(),
                Prec::Exp(_) => PSeries { terms: Vec::new(), prec: self.prec.clone() },
            };
        }
        PSeries {
            terms: self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect(),
            prec: self.prec.clone(),
        }
    }

    /// Multiplication by the exact monomial `c * t^e`.
    pub fn mul_monomial(&self, e: &Exp, c: Coeff) -> PSeries {
        let scaled = self.scale(c);
        PSeries {
            terms: scaled
                .terms
                .into_iter()
                .map(|(te, tc)| (te + e, tc))
                .collect(),
            prec: scaled.prec.shift(e),
        }
    }

    /// Effective leading exponent used for precision bookkeeping: for an
    /// empty series this is its precision bound.
    fn lead_for_prec(&self) -> Prec {
        match self.terms.first() {
            Some((e, _)) => Prec::Exp(e.clone()),
            None => self.prec.clone(),
        }
    }

    pub fn mul(&self, other: &PSeries) -> Result<PSeries> {
        if self.is_exact_zero() || other.is_exact_zero() {
            return Ok(PSeries::zero());
        }
        // combined precision: min over cross terms of lead + other's prec
        let p1 = match (&self.lead_for_prec(), &other.prec) {
            (Prec::Exp(l), Prec::Exp(p)) => Prec::Exp(l + p),
            _ => Prec::Inf,
        };
        let p2 = match (&other.lead_for_prec(), &self.prec) {
            (Prec::Exp(l), Prec::Exp(p)) => Prec::Exp(l + p),
            _ => Prec::Inf,
        };
        let prec = p1.min(&p2);
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea + eb;
                if prec.allows(&e) {
                    raw.push((e, ca * cb));
                }
            }
        }
        PSeries::build(raw, prec)
    }

    pub fn pow_int(&self, n: u32) -> Result<PSeries> {
        let mut result = PSeries::one();
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Splits a nonzero series as `c * t^e * (1 + u)` with `v(u) < 1`.
    fn split_leading(&self) -> Result<(Exp, Coeff, PSeries)> {
        let (e, c) = self
            .leading()
            .map(|(e, c)| (e.clone(), *c))
            .ok_or_else(|| match self.prec {
                Prec::Inf => Error::Domain("leading part of exact zero".into()),
                Prec::Exp(_) => {
                    Error::PrecisionExhausted("series indistinguishable from zero".into())
                }
            })?;
        let unit = self.mul_monomial(&-e.clone(), Coeff::new(1.0, 0.0) / c);
        let tail = unit.sub(&PSeries::one())?;
        Ok((e, c, tail))
    }

    /// Relative precision depth (prec minus leading exponent), capped by
    /// `depth`.
    fn relative_depth(&self, depth: i64, lead: &Exp) -> Exp {
        match &self.prec {
            Prec::Inf => exp_int(depth),
            Prec::Exp(p) => {
                let rel = p - lead;
                rel.min(exp_int(depth))
            }
        }
    }

    /// Multiplicative inverse truncated `depth` exponent levels past the
    /// leading exponent.  Inverting an exact monomial is exact.
    pub fn inv(&self, depth: i64) -> Result<PSeries> {
        let (e, c, u) = self.split_leading()?;
        if u.is_exact_zero() && self.prec == Prec::Inf {
            return Ok(PSeries::monomial(-e, Coeff::new(1.0, 0.0) / c));
        }
        let rel = self.relative_depth(depth, &e);
        // 1/(1+u) = Σ (-u)^k, truncated at relative depth
        let cut = Prec::Exp(rel.clone());
        let mut acc = PSeries::one();
        let mut pw = PSeries::one();
        let neg_u = u.neg().with_prec(cut.min(u.prec()));
        loop {
            pw = pw.mul(&neg_u)?.with_prec(cut.clone());
            if pw.is_zero_at_prec() {
                break;
            }
            acc = acc.add(&pw)?;
        }
        let acc = acc.with_prec(cut);
        Ok(acc.mul_monomial(&-e, Coeff::new(1.0, 0.0) / c))
    }

    /// `(1 + u)^r` for rational `r`, via the binomial series.
    fn binomial_power(u: &PSeries, r: f64, rel: &Exp) -> Result<PSeries> {
        let cut = Prec::Exp(rel.clone());
        let u = u.clone().with_prec(cut.min(u.prec()));
        let mut acc = PSeries::one();
        let mut pw = PSeries::one();
        let mut coeff = 1.0f64;
        let mut k = 0u32;
        loop {
            coeff *= (r - k as f64) / (k as f64 + 1.0);
            k += 1;
            pw = pw.mul(&u)?.with_prec(cut.clone());
            if pw.is_zero_at_prec() || coeff == 0.0 {
                break;
            }
            acc = acc.add(&pw.scale(Coeff::new(coeff, 0.0)))?;
            if k > 4096 {
                return Err(Error::Resource("binomial expansion does not terminate".into()));
            }
        }
        Ok(acc.with_prec(cut))
    }

    /// k-th root; `branch` selects the leading coefficient
    /// `|c|^{1/k} exp(i (arg c + 2π branch)/k)`.
    pub fn nth_root(&self, k: u32, branch: u32, depth: i64) -> Result<PSeries> {
        if k == 0 {
            return Err(Error::Domain("0th root".into()));
        }
        let (e, c, u) = self.split_leading()?;
        let root_exp = &e / BigRational::from_integer(k.into());
        if *root_exp.denom() > num_bigint::BigInt::from(MAX_EXP_DEN) {
            return Err(Error::Resource("root exponent denominator exceeds cap".into()));
        }
        let modulus = c.norm().powf(1.0 / k as f64);
        let arg = (c.arg() + 2.0 * std::f64::consts::PI * branch as f64) / k as f64;
        let root_c = Coeff::from_polar(modulus, arg);
        if u.is_exact_zero() && self.prec == Prec::Inf {
            return Ok(PSeries::monomial(root_exp, root_c));
        }
        let rel = self.relative_depth(depth, &e);
        let tail = Self::binomial_power(&u, 1.0 / k as f64, &rel)?;
        Ok(tail.mul_monomial(&root_exp, root_c))
    }

    /// Square root shorthand, branch 0.
    pub fn sqrt(&self, depth: i64) -> Result<PSeries> {
        self.nth_root(2, 0, depth)
    }

    /// Residue map: the coefficient at exponent 0 of an element of the
    /// valuation ring.
    pub fn res(&self) -> Result<ResElement> {
        match self.terms.first() {
            Some((e, _)) if e.is_negative() => Err(Error::NotInValuationRing),
            _ => {
                let c = self.coeff_at(&Exp::zero())?;
                Ok(ResElement { coeff: c })
            }
        }
    }

    /// Leading-term class of a scalar.
    pub fn rv(&self) -> Result<RVClass> {
        RVClass::of_parts(std::slice::from_ref(self))
    }

    /// True when `v(self - other)` is beyond both precisions (the series are
    /// indistinguishable), treating exact equality as equal.
    pub fn approx_eq(&self, other: &PSeries) -> bool {
        match self.sub(other) {
            Ok(d) => d.is_zero_at_prec(),
            Err(_) => false,
        }
    }

    /// Evaluates the polynomial `Σ coeffs[i] z^i` at `z = self`.
    pub fn eval_poly(coeffs: &[PSeries], z: &PSeries) -> Result<PSeries> {
        let mut acc = PSeries::zero();
        for c in coeffs.iter().rev() {
            acc = acc.mul(z)?.add(c)?;
        }
        Ok(acc)
    }
}

impl fmt::Display for PSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        } else {
            for (i, (e, c)) in self.terms.iter().enumerate() {
                if i > 0 {
                    write!(f, " + ")?;
                }
                if c.im == 0.0 {
                    write!(f, "{}", c.re)?;
                } else {
                    write!(f, "({}+{}i)", c.re, c.im)?;
                }
                if !e.is_zero() {
                    write!(f, "*t^{}", e)?;
                }
            }
        }
        if let Prec::Exp(p) = &self.prec {
            write!(f, " + O(t^{})", p)?;
        }
        Ok(())
    }
}

/// Residue of an element of the valuation ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResElement {
    pub coeff: Coeff,
}

impl ResElement {
    pub fn approx_eq(&self, other: &ResElement) -> bool {
        coeff_close(self.coeff, other.coeff)
    }
}

pub(crate) fn coeff_close(a: Coeff, b: Coeff) -> bool {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        return true;
    }
    (a - b).norm() <= COEFF_EPS * scale.max(1.0)
}

/// Leading-term class of a scalar or tuple: the valuation together with the
/// homogeneous leading slice (per-coordinate coefficient at the minimal
/// exponent).  Two elements have the same class iff their difference has
/// strictly smaller valuation, or both are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RVClass {
    pub value: GammaValue,
    pub slice: Vec<Coeff>,
}

impl RVClass {
    /// Class of a tuple of series.  Requires every coordinate to be readable
    /// at the leading exponent of the tuple.
    pub fn of_parts(parts: &[PSeries]) -> Result<RVClass> {
        let mut lead: Option<Exp> = None;
        for p in parts {
            if let Some((e, _)) = p.leading() {
                lead = Some(match lead {
                    None => e.clone(),
                    Some(l) => l.min(e.clone()),
                });
            }
        }
        match lead {
            None => {
                // all-zero tuple: exact zero only if every part is exact
                for p in parts {
                    if !p.is_exact_zero() {
                        return Err(Error::PrecisionExhausted(
                            "tuple indistinguishable from zero".into(),
                        ));
                    }
                }
                Ok(RVClass {
                    value: GammaValue::Zero,
                    slice: vec![Coeff::new(0.0, 0.0); parts.len()],
                })
            }
            Some(e0) => {
                let mut slice = Vec::with_capacity(parts.len());
                for p in parts {
                    slice.push(p.coeff_at(&e0)?);
                }
                Ok(RVClass { value: GammaValue::Finite(e0), slice })
            }
        }
    }

    pub fn approx_eq(&self, other: &RVClass) -> bool {
        if self.value != other.value || self.slice.len() != other.slice.len() {
            return false;
        }
        let scale = self
            .slice
            .iter()
            .chain(other.slice.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return true;
        }
        self.slice
            .iter()
            .zip(other.slice.iter())
            .all(|(a, b)| (a - b).norm() <= COEFF_EPS * scale)
    }

    /// Product of scalar classes (slices multiply).
    pub fn mul(&self, other: &RVClass) -> Result<RVClass> {
        if self.slice.len() != 1 || other.slice.len() != 1 {
            return Err(Error::Domain("rv product is for scalars".into()));
        }
        Ok(RVClass {
            value: self.value.mul(&other.value)?,
            slice: vec![self.slice[0] * other.slice[0]],
        })
    }
}

/// Contraction-based root solver: runs the update `z ← z - F(z)/F'(z)` from
/// the monomial determined by `seed`, insisting that the increments shrink
/// strictly in valuation.  Stops once the increment falls `depth` levels
/// below the seed scale.
pub fn newton_solve(coeffs: &[PSeries], seed: &RVClass, depth: i64) -> Result<PSeries> {
    if seed.slice.len() != 1 {
        return Err(Error::Domain("newton seed must be a scalar class".into()));
    }
    let seed_exp = match &seed.value {
        GammaValue::Finite(e) => e.clone(),
        _ => return Err(Error::Domain("newton seed must be finite".into())),
    };
    let mut z = PSeries::monomial(seed_exp.clone(), seed.slice[0]);
    let deriv: Vec<PSeries> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c.scale(Coeff::new(i as f64, 0.0)))
        .collect();
    let target = &seed_exp + exp_int(depth);
    let budget = (depth as f64).log2().ceil() as usize + 8;
    let mut last_inc: Option<Exp> = None;
    for _ in 0..budget {
        let fz = PSeries::eval_poly(coeffs, &z)?;
        if fz.is_zero_at_prec() {
            return Ok(z.with_prec(Prec::Exp(target)).clone());
        }
        let fz_lead = fz.leading().map(|(e, _)| e.clone()).unwrap_or_else(|| target.clone());
        if fz_lead >= target {
            return Ok(z.with_prec(Prec::Exp(target)).clone());
        }
        let dfz = PSeries::eval_poly(&deriv, &z)?;
        if dfz.is_zero_at_prec() {
            return Err(Error::SingularSeed);
        }
        let inc = fz.mul(&dfz.inv(depth)?)?.neg();
        let inc_exp = match inc.leading() {
            Some((e, _)) => e.clone(),
            None => return Ok(z.with_prec(Prec::Exp(target)).clone()),
        };
        if let Some(prev) = &last_inc {
            if inc_exp <= *prev {
                return Err(Error::NoConvergence(format!(
                    "increment valuation stalled at t^{inc_exp}"
                )));
            }
        } else if inc_exp < seed_exp {
            return Err(Error::NoConvergence(
                "first increment larger than the seed scale".into(),
            ));
        }
        last_inc = Some(inc_exp.clone());
        z = z.add(&inc)?.with_prec(Prec::Exp(target.clone())).clone();
        if inc_exp >= target {
            return Ok(z);
        }
    }
    Err(Error::NoConvergence("iteration budget exhausted".into()))
}

impl PSeries {
    /// JSON encoding `{"terms":[[num,den,re,im],...],"prec":{"num":..,"den":..}|"inf"}`.
    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(e, c)| {
                serde_json::json!([
                    e.numer().to_i64().unwrap_or(i64::MAX),
                    e.denom().to_i64().unwrap_or(i64::MAX),
                    c.re,
                    c.im
                ])
            })
            .collect();
        let prec = match &self.prec {
            Prec::Inf => serde_json::Value::String("inf".into()),
            Prec::Exp(e) => serde_json::json!({
                "num": e.numer().to_i64().unwrap_or(i64::MAX),
                "den": e.denom().to_i64().unwrap_or(i64::MAX),
            }),
        };
        serde_json::json!({"terms": terms, "prec": prec})
    }

    pub fn from_json(v: &serde_json::Value) -> Result<PSeries> {
        let terms = v
            .get("terms")
            .and_then(|t| t.as_array())
            .ok_or_else(|| Error::Input("series needs a \"terms\" array".into()))?;
        let mut raw = Vec::with_capacity(terms.len());
        for t in terms {
            let a = t
                .as_array()
                .filter(|a| a.len() == 4)
                .ok_or_else(|| Error::Input("series term must be [num,den,re,im]".into()))?;
            let num = a[0]
                .as_i64()
                .ok_or_else(|| Error::Input("bad term exponent numerator".into()))?;
            let den = a[1]
                .as_i64()
                .filter(|d| *d > 0)
                .ok_or_else(|| Error::Input("bad term exponent denominator".into()))?;
            let re = a[2]
                .as_f64()
                .ok_or_else(|| Error::Input("bad term coefficient".into()))?;
            let im = a[3]
                .as_f64()
                .ok_or_else(|| Error::Input("bad term coefficient".into()))?;
            raw.push((BigRational::new(num.into(), den.into()), Coeff::new(re, im)));
        }
        let prec = match v.get("prec") {
            None => Prec::Inf,
            Some(serde_json::Value::String(s)) if s == "inf" => Prec::Inf,
            Some(p) => {
                let num = p
                    .get("num")
                    .and_then(|n| n.as_i64())
                    .ok_or_else(|| Error::Input("bad prec".into()))?;
                let den = p
                    .get("den")
                    .and_then(|n| n.as_i64())
                    .filter(|d| *d > 0)
                    .ok_or_else(|| Error::Input("bad prec denominator".into()))?;
                Prec::Exp(BigRational::new(num.into(), den.into()))
            }
        };
        PSeries::build(raw, prec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn t() -> PSeries {
        PSeries::var()
    }

    fn re(x: f64) -> Coeff {
        Coeff::new(x, 0.0)
    }

    #[test]
    fn add_cancellation() {
        let s = t().add(&t().neg()).unwrap();
        assert!(s.is_exact_zero());
    }

    #[test]
    fn mul_half_exponents() {
        let h = PSeries::monomial(crate::gamma::exp(1, 2), re(1.0));
        let p = h.mul(&h).unwrap();
        assert!(p.approx_eq(&t()));
    }

    #[test]
    fn inv_matches_geometric_series() {
        // oracle: 1/(1+t) = Σ (-1)^k t^k
        let one_plus_t = PSeries::one().add(&t()).unwrap();
        let inv = one_plus_t.inv(DEFAULT_DEPTH).unwrap();
        let mut oracle = PSeries::zero();
        for k in 0..DEFAULT_DEPTH {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            oracle = oracle
                .add(&PSeries::monomial(exp_int(k), re(sign)))
                .unwrap();
        }
        let oracle = oracle.with_prec(Prec::Exp(exp_int(DEFAULT_DEPTH)));
        assert!(inv.approx_eq(&oracle), "got {inv}");
        // and mul(inv(1+t), 1+t) = 1 within precision
        let prod = inv.mul(&one_plus_t).unwrap();
        assert!(prod.sub(&PSeries::one()).unwrap().is_zero_at_prec());
    }

    #[test]
    fn val_examples() {
        assert_eq!(PSeries::zero().val().unwrap(), GammaValue::Zero);
        let s = PSeries::from_terms(&[(3, 2, 1.0, 0.0), (2, 1, 1.0, 0.0)]);
        assert_eq!(s.val().unwrap(), GammaValue::finite(3, 2));
        assert!(PSeries::zero_with_prec(exp_int(5)).val().is_err());
    }

    #[test]
    fn rv_examples() {
        let a = t().add(&PSeries::monomial(exp_int(3), re(1.0))).unwrap();
        assert!(a.rv().unwrap().approx_eq(&t().rv().unwrap()));
        // rv of a tuple: coordinate 2 has exponent 2 > 1, contributes 0
        let cls = RVClass::of_parts(&[t(), t().mul(&t()).unwrap()]).unwrap();
        assert_eq!(cls.value, GammaValue::finite_int(1));
        assert!(coeff_close(cls.slice[0], re(1.0)));
        assert!(coeff_close(cls.slice[1], re(0.0)));
        // rv(x) != rv(-x) for x != 0
        assert!(!t().rv().unwrap().approx_eq(&t().neg().rv().unwrap()));
    }

    #[test]
    fn res_examples() {
        let s = PSeries::constant(re(3.0)).add(&t()).unwrap();
        assert!(coeff_close(s.res().unwrap().coeff, re(3.0)));
        let half = PSeries::monomial(crate::gamma::exp(1, 2), re(1.0));
        assert!(coeff_close(half.res().unwrap().coeff, re(0.0)));
        let neg = PSeries::monomial(exp_int(-1), re(1.0));
        assert_eq!(neg.res(), Err(Error::NotInValuationRing));
    }

    #[test]
    fn newton_square_root() {
        // F(z) = z^2 - (1+t), seed rv = 1; oracle: binomial series for (1+t)^{1/2}
        let one_plus_t = PSeries::one().add(&t()).unwrap();
        let coeffs = vec![one_plus_t.neg(), PSeries::zero(), PSeries::one()];
        let seed = PSeries::one().rv().unwrap();
        let z = newton_solve(&coeffs, &seed, DEFAULT_DEPTH).unwrap();
        let mut oracle = PSeries::zero();
        let mut c = 1.0f64;
        for k in 0..DEFAULT_DEPTH {
            oracle = oracle.add(&PSeries::monomial(exp_int(k), re(c))).unwrap();
            c *= (0.5 - k as f64) / (k as f64 + 1.0);
        }
        let oracle = oracle.with_prec(Prec::Exp(exp_int(DEFAULT_DEPTH)));
        assert!(z.approx_eq(&oracle), "newton gave {z}");
    }

    #[test]
    fn newton_geometric_fixed_point() {
        // F(z) = z - (t z + c): unique fixed point c (1 + t + t^2 + ...)
        let c = re(2.5);
        let coeffs = vec![
            PSeries::constant(c).neg(),
            PSeries::one().sub(&t()).unwrap(),
        ];
        let seed = PSeries::constant(c).rv().unwrap();
        let z = newton_solve(&coeffs, &seed, DEFAULT_DEPTH).unwrap();
        let mut oracle = PSeries::zero();
        for k in 0..DEFAULT_DEPTH {
            oracle = oracle
                .add(&PSeries::monomial(exp_int(k), c))
                .unwrap();
        }
        let oracle = oracle.with_prec(Prec::Exp(exp_int(DEFAULT_DEPTH)));
        assert!(z.approx_eq(&oracle), "newton gave {z}");
    }

    #[test]
    fn newton_rejects_wrong_seed() {
        // F(z) = z^2 - t has no root with v(z) = 1
        let coeffs = vec![t().neg(), PSeries::zero(), PSeries::one()];
        let seed = PSeries::one().rv().unwrap();
        match newton_solve(&coeffs, &seed, DEFAULT_DEPTH) {
            Err(Error::NoConvergence(_)) => {}
            other => panic!("expected no-convergence, got {other:?}"),
        }
    }

    #[test]
    fn nth_root_examples() {
        let t2 = t().mul(&t()).unwrap();
        assert!(t2.nth_root(2, 0, DEFAULT_DEPTH).unwrap().approx_eq(&t()));
        // primitive cube root of unity
        let z = PSeries::one().nth_root(3, 1, DEFAULT_DEPTH).unwrap();
        let (_, c) = z.leading().map(|(e, c)| (e.clone(), *c)).unwrap();
        let zeta = Coeff::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!(coeff_close(c, zeta));
        // t^3 (1+t): root exponent splits off, tail via the solver oracle
        let x = t()
            .pow_int(3)
            .unwrap()
            .mul(&PSeries::one().add(&t()).unwrap())
            .unwrap();
        let r = x.nth_root(2, 0, DEFAULT_DEPTH).unwrap();
        assert_eq!(r.val().unwrap(), GammaValue::finite(3, 2));
        let sq = r.mul(&r).unwrap();
        assert!(sq.sub(&x).unwrap().is_zero_at_prec(), "square {sq} vs {x}");
    }

    fn random_series(rng: &mut StdRng, allow_negative: bool) -> PSeries {
        let nterms = rng.gen_range(1..4usize);
        let mut s = PSeries::zero();
        let lo = if allow_negative { -6i64 } else { 0 };
        for _ in 0..nterms {
            let e = crate::gamma::exp(rng.gen_range(lo..12), rng.gen_range(1..4));
            let c = Coeff::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            if c.norm() < 0.1 {
                continue;
            }
            s = s.add(&PSeries::monomial(e, c)).unwrap();
        }
        if s.is_zero_at_prec() {
            PSeries::one()
        } else {
            s
        }
    }

    #[test]
    fn valuation_axioms_random() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0001);
        for _ in 0..500 {
            let x = random_series(&mut rng, true);
            let y = random_series(&mut rng, true);
            let vx = x.val().unwrap();
            let vy = y.val().unwrap();
            // multiplicativity, exact on exponents
            let vxy = x.mul(&y).unwrap().val().unwrap();
            assert_eq!(vxy, vx.mul(&vy).unwrap());
            // ultrametric inequality with equality for distinct valuations
            let sum = x.add(&y).unwrap();
            let vsum = sum.val().unwrap_or(GammaValue::Zero);
            let bound = crate::gamma::gamma_max([&vx, &vy]);
            assert!(vsum <= bound);
            if vx != vy {
                assert_eq!(vsum, bound);
            }
        }
    }

    #[test]
    fn rv_multiplicative_random() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0002);
        for _ in 0..200 {
            let x = random_series(&mut rng, true);
            let y = random_series(&mut rng, true);
            let lhs = x.rv().unwrap().mul(&y.rv().unwrap()).unwrap();
            let rhs = x.mul(&y).unwrap().rv().unwrap();
            assert!(lhs.approx_eq(&rhs), "{x} * {y}");
        }
    }

    #[test]
    fn res_is_multiplicative_on_valuation_ring() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0003);
        for _ in 0..200 {
            let x = random_series(&mut rng, false);
            let y = random_series(&mut rng, false);
            let lhs = x.mul(&y).unwrap().res().unwrap().coeff;
            let rhs = x.res().unwrap().coeff * y.res().unwrap().coeff;
            assert!(coeff_close(lhs, rhs));
        }
    }

    #[test]
    fn nth_root_round_trip_random() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0004);
        for _ in 0..120 {
            let x = random_series(&mut rng, true);
            let k = rng.gen_range(1..=6u32);
            let b = rng.gen_range(0..k);
            let r = x.nth_root(k, b, DEFAULT_DEPTH).unwrap();
            let back = r.pow_int(k).unwrap();
            let diff = back.sub(&x).unwrap();
            assert!(
                diff.is_zero_at_prec(),
                "root^{k} mismatch: x={x} back={back}"
            );
        }
    }

    #[test]
    fn denominator_cap_enforced() {
        let tiny = PSeries::monomial(crate::gamma::exp(1, 999_983), re(1.0));
        // one more root pushes the denominator past the cap
        assert!(matches!(tiny.nth_root(5, 0, 8), Err(Error::Resource(_))));
    }

    #[test]
    fn json_round_trip() {
        let s = PSeries::from_terms(&[(-1, 2, 1.5, 0.0), (2, 3, 0.0, -2.0)])
            .with_prec(Prec::Exp(crate::gamma::exp(7, 2)));
        let back = PSeries::from_json(&s.to_json()).unwrap();
        assert!(s.approx_eq(&back));
        assert_eq!(s.prec(), back.prec());
    }
}
