//! Exact multivariate polynomials over the integers and the expression trees that evaluate to
//! them on finite structures.

mod expr;

pub use expr::{
    card_power, eval_expr, factorial_of_card, falling_factorial, CompiledExpr, PolyExpr, PolyParser,
    DEFAULT_ARITY_CAP,
};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::LogicError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("no value for indeterminate `{0}`")]
    MissingIndeterminate(String),
    #[error("cannot parse polynomial: {0}")]
    Parse(String),
    #[error("renaming is not injective: {0}")]
    NotInjective(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

/// A power product: indeterminate names (sorted) with positive exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(BTreeMap<String, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(name: &str) -> Self {
        Monomial([(name.to_string(), 1)].into_iter().collect())
    }

    pub fn exponent(&self, name: &str) -> u32 {
        self.0.get(name).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> &BTreeMap<String, u32> {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (v, e) in &other.0 {
            *out.entry(v.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }
}

/// Lexicographic with names in ascending order and larger exponents first, so `X^2 > X*Y > Y > 1`
/// sort as `X^2, X*Y, Y, 1`.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.0.iter().peekable();
        let mut b = other.0.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (Some((na, ea)), Some((nb, eb))) => match na.cmp(nb) {
                    // `self` has a variable `other` lacks at this position.
                    Ordering::Less => return Ordering::Less,
                    Ordering::Greater => return Ordering::Greater,
                    Ordering::Equal => match eb.cmp(ea) {
                        Ordering::Equal => {
                            a.next();
                            b.next();
                        }
                        o => return o,
                    },
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> =
            self.0.iter().map(|(v, &e)| if e == 1 { v.clone() } else { format!("{v}^{e}") }).collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// A polynomial with integer coefficients. No zero coefficient is ever stored, so structural
/// equality is polynomial equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, BigInt>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn var(name: &str) -> Self {
        Self::term(1, Monomial::var(name))
    }

    pub fn term(c: impl Into<BigInt>, m: Monomial) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Polynomial { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&Monomial::one()).is_some_and(|c| c.is_one())
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn indeterminates(&self) -> Vec<String> {
        let mut out: Vec<String> = self.terms.keys().flat_map(|m| m.0.keys().cloned()).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn degree_in(&self, name: &str) -> u32 {
        self.terms.keys().map(|m| m.exponent(name)).max().unwrap_or(0)
    }

    /// Every coefficient is positive.
    pub fn has_natural_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.is_positive())
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        (0..k).fold(Polynomial::one(), |acc, _| &acc * self)
    }

    /// Exact integer value with every indeterminate replaced by the given integer.
    pub fn substitute(&self, values: &BTreeMap<String, BigInt>) -> Result<BigInt, PolyError> {
        let mut total = BigInt::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, &e) in &m.0 {
                let x = values.get(v).ok_or_else(|| PolyError::MissingIndeterminate(v.clone()))?;
                t *= num_traits::pow(x.clone(), e as usize);
            }
            total += t;
        }
        Ok(total)
    }

    /// Replaces some indeterminates by polynomials; the others stay.
    pub fn compose(&self, values: &BTreeMap<String, Polynomial>) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut t = Polynomial::constant(c.clone());
            for (v, &e) in &m.0 {
                let x = values.get(v).cloned().unwrap_or_else(|| Polynomial::var(v));
                t = &t * &x.pow(e);
            }
            out = &out + &t;
        }
        out
    }

    /// Renames indeterminates. The map must be injective on the indeterminates present.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Result<Polynomial, PolyError> {
        let present = self.indeterminates();
        let mut images: Vec<&str> = present.iter().map(|v| map.get(v).map_or(v.as_str(), String::as_str)).collect();
        images.sort();
        if images.windows(2).any(|w| w[0] == w[1]) {
            return Err(PolyError::NotInjective(format!("{map:?}")));
        }
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let renamed = Monomial(m.0.iter().map(|(v, e)| (map.get(v).cloned().unwrap_or_else(|| v.clone()), *e)).collect());
            out.add_term(renamed, c.clone());
        }
        Ok(out)
    }

    /// Machine format: `[{"coeff":"3","exps":{"X":2}}, ...]` in canonical order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_machine()).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Polynomial, PolyError> {
        let terms: Vec<MachineTerm> = serde_json::from_str(text).map_err(|e| PolyError::Parse(e.to_string()))?;
        Self::from_machine(&terms)
    }

    pub fn to_machine(&self) -> Vec<MachineTerm> {
        self.terms.iter().map(|(m, c)| MachineTerm { coeff: c.to_string(), exps: m.0.clone() }).collect()
    }

    pub fn from_machine(terms: &[MachineTerm]) -> Result<Polynomial, PolyError> {
        let mut out = Polynomial::zero();
        for t in terms {
            let c = BigInt::from_str(&t.coeff).map_err(|e| PolyError::Parse(format!("coefficient `{}`: {e}", t.coeff)))?;
            out.add_term(Monomial(t.exps.iter().filter(|(_, &e)| e > 0).map(|(v, e)| (v.clone(), *e)).collect()), c);
        }
        Ok(out)
    }

    /// Small integer constant, if the polynomial is one.
    pub fn as_i64(&self) -> Option<i64> {
        match self.terms.len() {
            0 => Some(0),
            1 => self.terms.get(&Monomial::one()).and_then(|c| c.to_i64()),
            _ => None,
        }
    }
}

/// One term of the machine format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineTerm {
    pub coeff: String,
    pub exps: BTreeMap<String, u32>,
}

impl From<i64> for Polynomial {
    fn from(c: i64) -> Self {
        Polynomial::constant(c)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.times(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&self).$f(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl std::iter::Sum for Polynomial {
    fn sum<I: Iterator<Item = Polynomial>>(iter: I) -> Polynomial {
        iter.fold(Polynomial::zero(), |a, b| &a + &b)
    }
}

impl std::iter::Product for Polynomial {
    fn product<I: Iterator<Item = Polynomial>>(iter: I) -> Polynomial {
        iter.fold(Polynomial::one(), |a, b| &a * &b)
    }
}

/// Canonical text, e.g. `X^3 - 3*X^2 + 2*X` or `q^2 + q*v`; zero prints as `0`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.0.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Parses sums of products of integers and powers of indeterminates, e.g. `3*X^2*Y - q + 1`.
/// Products may repeat a factor and terms need not be in canonical order.
impl FromStr for Polynomial {
    type Err = PolyError;

    fn from_str(text: &str) -> Result<Self, PolyError> {
        let err = |m: &str| PolyError::Parse(format!("{m} in `{text}`"));
        let mut out = Polynomial::zero();
        let mut chars = text.chars().filter(|c| !c.is_whitespace()).peekable();
        if chars.peek().is_none() {
            return Err(err("empty input"));
        }
        loop {
            let mut sign = BigInt::one();
            while let Some(&c) = chars.peek() {
                if c == '-' {
                    sign = -sign;
                } else if c != '+' {
                    break;
                }
                chars.next();
            }
            let mut coeff = sign;
            let mut mono = Monomial::one();
            loop {
                let Some(&c) = chars.peek() else { return Err(err("missing factor")) };
                if c.is_ascii_digit() {
                    let mut digits = String::new();
                    while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                        digits.push(d);
                        chars.next();
                    }
                    coeff *= BigInt::from_str(&digits).map_err(|_| err("bad integer"))?;
                } else if c.is_alphabetic() || c == '_' {
                    let mut name = String::new();
                    while let Some(&d) = chars.peek().filter(|d| d.is_alphanumeric() || **d == '_') {
                        name.push(d);
                        chars.next();
                    }
                    let mut e = 1u32;
                    if chars.peek() == Some(&'^') {
                        chars.next();
                        let mut digits = String::new();
                        while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                            digits.push(d);
                            chars.next();
                        }
                        e = digits.parse().map_err(|_| err("bad exponent"))?;
                    }
                    if e > 0 {
                        mono = mono.times(&Monomial([(name, e)].into_iter().collect()));
                    }
                } else {
                    return Err(err(&format!("unexpected `{c}`")));
                }
                match chars.peek() {
                    Some('*') => {
                        chars.next();
                    }
                    _ => break,
                }
            }
            out.add_term(mono, coeff);
            match chars.peek() {
                None => return Ok(out),
                Some('+') | Some('-') => {}
                Some(c) => return Err(err(&format!("unexpected `{c}`"))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Polynomial {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_text() {
        assert_eq!(p("q*v + q^2").to_string(), "q^2 + q*v");
        assert_eq!(p("2*X - 3*X^2 + X^3").to_string(), "X^3 - 3*X^2 + 2*X");
        assert_eq!(p("Z + X*Y + X^2").to_string(), "X^2 + X*Y + Z");
        assert_eq!(p("X - X").to_string(), "0");
        assert_eq!(p("-1").to_string(), "-1");
        assert_eq!(p("1 + Y + X").to_string(), "X + Y + 1");
        assert_eq!(p("3*X^2*Y + q*v").to_string(), "3*X^2*Y + q*v");
    }

    #[test]
    fn ring_examples() {
        let (x, y) = (Polynomial::var("X"), Polynomial::var("Y"));
        assert_eq!(&(&x + &y) * &(&x - &y), p("X^2 - Y^2"));
        assert_eq!(p("X + Y"), p("Y + X"));
        assert_eq!(-&x + x.clone(), Polynomial::zero());
    }

    #[test]
    fn substitution() {
        let t = p("X^2 + X + Y");
        let vals: BTreeMap<String, BigInt> = [("X".to_string(), BigInt::from(1)), ("Y".to_string(), BigInt::from(1))].into();
        assert_eq!(t.substitute(&vals).unwrap(), BigInt::from(3));
        let only_x: BTreeMap<String, BigInt> = [("X".to_string(), BigInt::from(1))].into();
        assert_eq!(t.substitute(&only_x), Err(PolyError::MissingIndeterminate("Y".into())));
    }

    #[test]
    fn machine_format() {
        let t = p("3*X^2 - Y + 7");
        assert_eq!(t.to_json(), r#"[{"coeff":"3","exps":{"X":2}},{"coeff":"-1","exps":{"Y":1}},{"coeff":"7","exps":{}}]"#);
        assert_eq!(Polynomial::from_json(&t.to_json()).unwrap(), t);
        assert!(Polynomial::from_json(r#"[{"coeff":"x","exps":{}}]"#).is_err());
    }

    #[test]
    fn renaming() {
        let t = p("X^2 + X*Y");
        let swap: BTreeMap<String, String> = [("X".into(), "Y".into()), ("Y".into(), "X".into())].into();
        assert_eq!(t.rename(&swap).unwrap(), p("Y^2 + X*Y"));
        let clash: BTreeMap<String, String> = [("X".into(), "Y".into())].into();
        assert!(matches!(t.rename(&clash), Err(PolyError::NotInjective(_))));
    }

    #[test]
    fn big_coefficients() {
        let t = p("2*X + 1").pow(80);
        let vals: BTreeMap<String, BigInt> = [("X".to_string(), BigInt::from(1))].into();
        assert_eq!(t.substitute(&vals).unwrap(), num_traits::pow(BigInt::from(3), 80));
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "X +", "X ** 2", "3X)", "X^"] {
            assert!(bad.parse::<Polynomial>().is_err(), "{bad}");
        }
    }
}
