//! Truncated arithmetic in the universal Novikov ring over `ℚ`.
//!
//! A scalar is a finite sum `Σ aᵢ T^{λᵢ} e^{nᵢ}` with rational energies
//! `λᵢ` and integer exponents `nᵢ`. `T` has degree 0 and `e` is invertible
//! of degree 2, so every scalar is even and the graded commutativity signs
//! are trivial. Infinite series are never stored: completeness is modelled
//! by always working modulo `F^E = T^E Λ₀`, see [`NovikovScalar::truncate`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::levels::{Level, LevelKind, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NovikovError {
    #[error("scalar {value} is not in the ring {variant}")]
    NotInRing { value: String, variant: RingVariant },
}

/// Which coefficient ring the scalars are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RingVariant {
    /// `Λ_nov`: arbitrary rational energies.
    Nov,
    /// `Λ_{0,nov}`: non-negative energies.
    Nov0,
    /// Plain `ℚ`: the trivial Novikov ring, energy and exponent zero.
    Plain,
}

impl fmt::Display for RingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RingVariant::Nov => "nov",
            RingVariant::Nov0 => "nov0",
            RingVariant::Plain => "plain",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: Rational,
    pub energy: Rational,
    pub expo: i64,
}

impl Term {
    fn key_cmp(&self, other: &Term) -> Ordering {
        self.energy.cmp(&other.energy).then(self.expo.cmp(&other.expo))
    }
}

/// A normalized finite Novikov sum: sorted by `(energy, expo)`, like terms
/// merged, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct NovikovScalar {
    terms: Vec<Term>,
}

impl NovikovScalar {
    pub fn zero() -> Self {
        NovikovScalar { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, Rational::zero(), 0)
    }

    pub fn monomial(coeff: Rational, energy: Rational, expo: i64) -> Self {
        Self::from_terms(vec![Term { coeff, energy, expo }])
    }

    pub fn from_terms(mut terms: Vec<Term>) -> Self {
        terms.sort_by(Term::key_cmp);
        let mut out: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if last.key_cmp(&t) == Ordering::Equal => last.coeff += t.coeff,
                _ => out.push(t),
            }
        }
        out.retain(|t| !t.coeff.is_zero());
        NovikovScalar { terms: out }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self.terms[0].coeff.is_one()
            && self.terms[0].energy.is_zero()
            && self.terms[0].expo == 0
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        NovikovScalar {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: &t.coeff * c, ..t.clone() })
                .collect(),
        }
    }

    /// Smallest energy among the terms, `None` for zero.
    pub fn min_energy(&self) -> Option<&Rational> {
        self.terms.first().map(|t| &t.energy)
    }

    /// The filtration level: minimum energy, or `Infinity` for zero. It is
    /// the largest `l` with `x ∈ F^l Λ`.
    pub fn level(&self, kind: LevelKind) -> Level {
        match self.min_energy() {
            None => Level::Infinity,
            Some(e) => kind.energy(e),
        }
    }

    /// Drops every term lying in `F^cutoff`.
    pub fn truncate(&self, kind: LevelKind, cutoff: &Level) -> Self {
        self.truncate_shifted(kind, &kind.zero(), cutoff)
    }

    /// Keeps the terms with `offset + energy < cutoff`.
    pub fn truncate_shifted(&self, kind: LevelKind, offset: &Level, cutoff: &Level) -> Self {
        NovikovScalar {
            terms: self
                .terms
                .iter()
                .filter(|t| !offset.plus(&kind.energy(&t.energy)).ge(cutoff))
                .cloned()
                .collect(),
        }
    }

    /// Splits into homogeneous pieces keyed by degree `2n`.
    pub fn homogeneous_parts(&self) -> Vec<(i64, NovikovScalar)> {
        let mut by_deg: std::collections::BTreeMap<i64, Vec<Term>> = Default::default();
        for t in &self.terms {
            by_deg.entry(2 * t.expo).or_default().push(t.clone());
        }
        by_deg
            .into_iter()
            .map(|(d, ts)| (d, NovikovScalar::from_terms(ts)))
            .collect()
    }

    pub fn in_ring(&self, variant: RingVariant) -> bool {
        self.terms.iter().all(|t| match variant {
            RingVariant::Nov => true,
            RingVariant::Nov0 => !t.energy.is_negative(),
            RingVariant::Plain => t.energy.is_zero() && t.expo == 0,
        })
    }
}

impl RingVariant {
    fn check(self, x: &NovikovScalar) -> Result<(), NovikovError> {
        if x.in_ring(self) {
            Ok(())
        } else {
            Err(NovikovError::NotInRing { value: x.to_string(), variant: self })
        }
    }

    /// The level instance that naturally filters this ring.
    pub fn natural_levels(self) -> LevelKind {
        match self {
            RingVariant::Nov => LevelKind::Rat,
            RingVariant::Nov0 => LevelKind::RatPlus,
            RingVariant::Plain => LevelKind::Discrete,
        }
    }
}

pub fn nov_add(
    variant: RingVariant,
    x: &NovikovScalar,
    y: &NovikovScalar,
) -> Result<NovikovScalar, NovikovError> {
    variant.check(x)?;
    variant.check(y)?;
    Ok(x + y)
}

pub fn nov_mul(
    variant: RingVariant,
    x: &NovikovScalar,
    y: &NovikovScalar,
) -> Result<NovikovScalar, NovikovError> {
    variant.check(x)?;
    variant.check(y)?;
    Ok(x * y)
}

pub fn nov_truncate(x: &NovikovScalar, kind: LevelKind, cutoff: &Level) -> NovikovScalar {
    x.truncate(kind, cutoff)
}

pub fn nov_level(x: &NovikovScalar, kind: LevelKind) -> Level {
    x.level(kind)
}

impl<'a> Add<&'a NovikovScalar> for &'a NovikovScalar {
    type Output = NovikovScalar;
    fn add(self, rhs: &NovikovScalar) -> NovikovScalar {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        NovikovScalar::from_terms(terms)
    }
}

impl<'a> Sub<&'a NovikovScalar> for &'a NovikovScalar {
    type Output = NovikovScalar;
    fn sub(self, rhs: &NovikovScalar) -> NovikovScalar {
        self + &(-rhs)
    }
}

impl<'a> Neg for &'a NovikovScalar {
    type Output = NovikovScalar;
    fn neg(self) -> NovikovScalar {
        NovikovScalar {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: -&t.coeff, ..t.clone() })
                .collect(),
        }
    }
}

impl Neg for NovikovScalar {
    type Output = NovikovScalar;
    fn neg(self) -> NovikovScalar {
        -&self
    }
}

impl<'a> Mul<&'a NovikovScalar> for &'a NovikovScalar {
    type Output = NovikovScalar;
    fn mul(self, rhs: &NovikovScalar) -> NovikovScalar {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(Term {
                    coeff: &a.coeff * &b.coeff,
                    energy: &a.energy + &b.energy,
                    expo: a.expo + b.expo,
                });
            }
        }
        NovikovScalar::from_terms(terms)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*T^{{{}}}*e^{{{}}}", self.coeff, self.energy, self.expo)
    }
}

impl fmt::Display for NovikovScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::{int, rat};
    use proptest::prelude::*;

    fn m(c: Rational, e: Rational, n: i64) -> NovikovScalar {
        NovikovScalar::monomial(c, e, n)
    }

    /// Schoolbook product over an explicit dense table, independent of the
    /// sorted-merge normal form.
    fn schoolbook(x: &NovikovScalar, y: &NovikovScalar) -> Vec<(Rational, i64, Rational)> {
        let mut table: Vec<(Rational, i64, Rational)> = Vec::new();
        for a in x.terms() {
            for b in y.terms() {
                let key = (&a.energy + &b.energy, a.expo + b.expo);
                let c = &a.coeff * &b.coeff;
                match table.iter_mut().find(|(e, n, _)| (e, *n) == (&key.0, key.1)) {
                    Some(slot) => slot.2 += c,
                    None => table.push((key.0, key.1, c)),
                }
            }
        }
        table.retain(|t| !t.2.is_zero());
        table.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        table
    }

    fn flatten(x: &NovikovScalar) -> Vec<(Rational, i64, Rational)> {
        x.terms().iter().map(|t| (t.energy.clone(), t.expo, t.coeff.clone())).collect()
    }

    #[test]
    fn additive_examples() {
        let x = m(int(1), rat(1, 2), 1);
        assert!((&x + &(-&x)).is_zero());
        assert_eq!(&x + &NovikovScalar::zero(), x);
        let s = &NovikovScalar::constant(int(2)) + &NovikovScalar::constant(int(3));
        assert_eq!(s, NovikovScalar::constant(int(5)));
    }

    #[test]
    fn product_examples() {
        let p = &NovikovScalar::constant(int(3)) * &m(int(2), rat(1, 2), 1);
        assert_eq!(p, m(int(6), rat(1, 2), 1));
        let x = m(int(-4), rat(3, 7), -2);
        assert_eq!(&NovikovScalar::one() * &x, x);
        let q = &m(int(1), int(1), 1) * &m(int(1), int(1), -1);
        assert_eq!(q, m(int(1), int(2), 0));
        assert_eq!(flatten(&q), schoolbook(&m(int(1), int(1), 1), &m(int(1), int(1), -1)));
    }

    #[test]
    fn truncation_examples() {
        let cut = Level::Rat(int(1));
        assert!(nov_truncate(&m(int(1), rat(3, 2), 1), LevelKind::Rat, &cut).is_zero());
        let x = &m(int(2), rat(1, 2), 0) + &m(int(1), int(2), 0);
        let t = nov_truncate(&x, LevelKind::Rat, &cut);
        assert_eq!(t, m(int(2), rat(1, 2), 0));
        assert_eq!(nov_truncate(&t, LevelKind::Rat, &cut), t);
    }

    #[test]
    fn level_examples() {
        assert_eq!(nov_level(&NovikovScalar::zero(), LevelKind::Rat), Level::Infinity);
        let x = &m(int(2), rat(1, 2), 1) + &m(int(1), int(3), 0);
        assert_eq!(nov_level(&x, LevelKind::Rat), Level::Rat(rat(1, 2)));
        let t = m(int(1), int(1), 0);
        assert_eq!(nov_level(&(&t * &t), LevelKind::Rat), Level::Rat(int(2)));
    }

    #[test]
    fn variant_mismatch() {
        let neg = m(int(1), int(-1), 0);
        assert!(nov_add(RingVariant::Nov0, &neg, &NovikovScalar::one()).is_err());
        assert!(nov_mul(RingVariant::Nov, &neg, &neg).is_ok());
        let e = m(int(1), int(0), 1);
        assert!(nov_mul(RingVariant::Plain, &e, &NovikovScalar::one()).is_err());
    }

    #[test]
    fn homogeneous_split() {
        let x = &(&m(int(1), int(0), 1) + &m(int(2), int(1), 1)) + &m(int(5), int(0), -1);
        let parts = x.homogeneous_parts();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].0, -2);
        assert_eq!(parts[1].0, 2);
        assert_eq!(parts[1].1.terms().len(), 2);
    }

    fn scalar() -> impl Strategy<Value = NovikovScalar> {
        prop::collection::vec((-5i64..6, 0i64..8, 1i64..3, -2i64..3), 0..4).prop_map(|v| {
            NovikovScalar::from_terms(
                v.into_iter()
                    .map(|(c, e, d, n)| Term { coeff: int(c), energy: rat(e, d), expo: n })
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(x in scalar(), y in scalar(), z in scalar()) {
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
            prop_assert_eq!(flatten(&(&x * &y)), schoolbook(&x, &y));
        }

        #[test]
        fn level_is_multiplicative(x in scalar(), y in scalar()) {
            let k = LevelKind::RatPlus;
            prop_assert!((&x * &y).level(k).ge(&x.level(k).plus(&y.level(k))));
        }

        #[test]
        fn truncation_is_a_congruence(x in scalar(), y in scalar(), c in 1i64..6) {
            let k = LevelKind::RatPlus;
            let cut = Level::RatPlus(rat(c, 2));
            let lhs = (&x * &y).truncate(k, &cut);
            let rhs = (&x.truncate(k, &cut) * &y.truncate(k, &cut)).truncate(k, &cut);
            prop_assert_eq!(lhs, rhs);
            let once = x.truncate(k, &cut);
            prop_assert_eq!(once.truncate(k, &cut), once);
        }
    }
}
