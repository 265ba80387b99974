//! The partially ordered commutative monoid of filtration levels.
//!
//! Three instances are built in: the group of rationals, the non-negative
//! rationals, and the two-element monoid `{0, ∞}` with `0 < ∞` and
//! `∞ + ∞ = ∞`. A synthetic top element [`Level::Infinity`] is adjoined in
//! every instance and serves as the level of the zero element.
//!
//! Every instance satisfies three conditions beyond being an ordered
//! monoid: any two levels have a common upper bound, any two levels have a
//! common lower bound, and for all `a`, `b` there is a `c` with
//! `a + c ≥ b` (see [`Level::dominate`]). Downstream code must not depend
//! on which witness `dominate` picks.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational numbers used for levels, energies and coefficients.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("levels from different monoids: {0} and {1}")]
    InstanceMismatch(String, String),
    #[error("invalid level for instance {kind}: {reason}")]
    Invalid { kind: LevelKind, reason: String },
}

/// Which built-in monoid a level belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LevelKind {
    /// `𝕃 = ℚ`, the dense stand-in for `ℝ`.
    Rat,
    /// `𝕃 = ℚ≥0`.
    RatPlus,
    /// `𝕃 = {0, ∞}`.
    Discrete,
}

impl fmt::Display for LevelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LevelKind::Rat => "rat",
            LevelKind::RatPlus => "ratplus",
            LevelKind::Discrete => "discrete",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiscreteLevel {
    Zero,
    Inf,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Level {
    Rat(Rational),
    RatPlus(Rational),
    Discrete(DiscreteLevel),
    /// Adjoined top element; the level of `0`.
    Infinity,
}

impl LevelKind {
    pub fn zero(self) -> Level {
        match self {
            LevelKind::Rat => Level::Rat(Rational::zero()),
            LevelKind::RatPlus => Level::RatPlus(Rational::zero()),
            LevelKind::Discrete => Level::Discrete(DiscreteLevel::Zero),
        }
    }

    /// A distinguished element of `𝕃₊₊ = {l > 0}`.
    pub fn positive(self) -> Level {
        match self {
            LevelKind::Rat => Level::Rat(Rational::one()),
            LevelKind::RatPlus => Level::RatPlus(Rational::one()),
            LevelKind::Discrete => Level::Discrete(DiscreteLevel::Inf),
        }
    }

    /// Builds a level of this instance from a rational value. In the
    /// discrete instance only `0` is representable this way.
    pub fn level(self, q: Rational) -> Result<Level, LevelError> {
        match self {
            LevelKind::Rat => Ok(Level::Rat(q)),
            LevelKind::RatPlus if q.is_negative() => Err(LevelError::Invalid {
                kind: self,
                reason: format!("{q} is negative"),
            }),
            LevelKind::RatPlus => Ok(Level::RatPlus(q)),
            LevelKind::Discrete if q.is_zero() => Ok(Level::Discrete(DiscreteLevel::Zero)),
            LevelKind::Discrete => Err(LevelError::Invalid {
                kind: self,
                reason: format!("energy {q} has no discrete counterpart"),
            }),
        }
    }

    /// The level carried by the coefficient energy `q`. Energies are
    /// validated against the instance when structures are built, so this
    /// never fails for admitted data.
    pub fn energy(self, q: &Rational) -> Level {
        self.level(q.clone())
            .unwrap_or_else(|e| panic!("energy outside level instance: {e}"))
    }
}

impl Level {
    /// The instance this level belongs to; `None` for [`Level::Infinity`].
    pub fn kind(&self) -> Option<LevelKind> {
        match self {
            Level::Rat(_) => Some(LevelKind::Rat),
            Level::RatPlus(_) => Some(LevelKind::RatPlus),
            Level::Discrete(_) => Some(LevelKind::Discrete),
            Level::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Level::Infinity)
    }

    fn check_pair(&self, other: &Level) -> Result<(), LevelError> {
        match (self.kind(), other.kind()) {
            (Some(a), Some(b)) if a != b => Err(LevelError::InstanceMismatch(
                self.to_string(),
                other.to_string(),
            )),
            _ => Ok(()),
        }
    }

    /// Monoid sum. `Infinity` absorbs.
    pub fn add(&self, other: &Level) -> Result<Level, LevelError> {
        self.check_pair(other)?;
        Ok(match (self, other) {
            (Level::Infinity, _) | (_, Level::Infinity) => Level::Infinity,
            (Level::Rat(a), Level::Rat(b)) => Level::Rat(a + b),
            (Level::RatPlus(a), Level::RatPlus(b)) => Level::RatPlus(a + b),
            (Level::Discrete(a), Level::Discrete(b)) => Level::Discrete((*a).max(*b)),
            _ => unreachable!(),
        })
    }

    /// Comparison in the instance order. All three instances are totally
    /// ordered, so this succeeds whenever the instances agree.
    pub fn compare(&self, other: &Level) -> Result<Ordering, LevelError> {
        self.check_pair(other)?;
        Ok(match (self, other) {
            (Level::Infinity, Level::Infinity) => Ordering::Equal,
            (Level::Infinity, _) => Ordering::Greater,
            (_, Level::Infinity) => Ordering::Less,
            (Level::Rat(a), Level::Rat(b)) | (Level::RatPlus(a), Level::RatPlus(b)) => a.cmp(b),
            (Level::Discrete(a), Level::Discrete(b)) => a.cmp(b),
            _ => unreachable!(),
        })
    }

    pub fn leq(&self, other: &Level) -> Result<bool, LevelError> {
        Ok(self.compare(other)? != Ordering::Greater)
    }

    /// Returns `c` with `self + c ≥ b`. Group instance: `b - a`;
    /// non-negative rationals: `max(b - a, 0)`; discrete: `∞` exactly when
    /// `a = 0` and `b = ∞`.
    pub fn dominate(&self, b: &Level) -> Result<Level, LevelError> {
        self.check_pair(b)?;
        match (self, b) {
            (Level::Infinity, _) => Err(LevelError::Invalid {
                kind: b.kind().unwrap_or(LevelKind::Rat),
                reason: "dominate is undefined for an infinite left argument".into(),
            }),
            (_, Level::Infinity) => Ok(Level::Infinity),
            (Level::Rat(a), Level::Rat(b)) => Ok(Level::Rat(b - a)),
            (Level::RatPlus(a), Level::RatPlus(b)) => {
                let d = b - a;
                Ok(Level::RatPlus(if d.is_negative() { Rational::zero() } else { d }))
            }
            (Level::Discrete(DiscreteLevel::Zero), Level::Discrete(DiscreteLevel::Inf)) => {
                Ok(Level::Discrete(DiscreteLevel::Inf))
            }
            (Level::Discrete(_), Level::Discrete(_)) => Ok(Level::Discrete(DiscreteLevel::Zero)),
            _ => unreachable!(),
        }
    }

    /// `n · self`.
    pub fn times(&self, n: u64) -> Level {
        match self {
            Level::Rat(a) => Level::Rat(a * int(n as i64)),
            Level::RatPlus(a) => Level::RatPlus(a * int(n as i64)),
            Level::Discrete(_) if n == 0 => Level::Discrete(DiscreteLevel::Zero),
            other => other.clone(),
        }
    }

    /// `self > 0` in its instance. `Infinity` counts as positive.
    pub fn is_positive(&self) -> bool {
        match self {
            Level::Rat(a) | Level::RatPlus(a) => a.is_positive(),
            Level::Discrete(d) => *d == DiscreteLevel::Inf,
            Level::Infinity => true,
        }
    }

    /// The rational value, when the level has one.
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Level::Rat(a) | Level::RatPlus(a) => Some(a),
            _ => None,
        }
    }

    // Internal arithmetic on levels that were validated against one
    // instance when their structures were built.

    pub(crate) fn plus(&self, other: &Level) -> Level {
        self.add(other).expect("level instance mismatch")
    }

    pub(crate) fn ge(&self, other: &Level) -> bool {
        self.compare(other).expect("level instance mismatch") != Ordering::Less
    }

    pub(crate) fn min_of(self, other: Level) -> Level {
        if other.ge(&self) {
            self
        } else {
            other
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Rat(q) => write!(f, "rat:{q}"),
            Level::RatPlus(q) => write!(f, "ratplus:{q}"),
            Level::Discrete(DiscreteLevel::Zero) => f.write_str("discrete:0"),
            Level::Discrete(DiscreteLevel::Inf) => f.write_str("discrete:inf"),
            Level::Infinity => f.write_str("infinity"),
        }
    }
}

pub fn level_add(a: &Level, b: &Level) -> Result<Level, LevelError> {
    a.add(b)
}

pub fn level_leq(a: &Level, b: &Level) -> Result<bool, LevelError> {
    a.leq(b)
}

pub fn dominate(a: &Level, b: &Level) -> Result<Level, LevelError> {
    a.dominate(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(q: Rational) -> Level {
        Level::Rat(q)
    }

    #[test]
    fn rational_addition() {
        assert_eq!(level_add(&r(rat(1, 2)), &r(rat(1, 3))).unwrap(), r(rat(5, 6)));
        let a = r(rat(-7, 4));
        assert_eq!(level_add(&LevelKind::Rat.zero(), &a).unwrap(), a);
    }

    #[test]
    fn discrete_addition_and_order() {
        let zero = Level::Discrete(DiscreteLevel::Zero);
        let inf = Level::Discrete(DiscreteLevel::Inf);
        assert_eq!(level_add(&zero, &inf).unwrap(), inf);
        assert_eq!(level_add(&inf, &inf).unwrap(), inf);
        assert!(!level_leq(&inf, &zero).unwrap());
        assert!(level_leq(&zero, &inf).unwrap());
    }

    #[test]
    fn order_examples() {
        assert!(level_leq(&r(int(-1)), &r(int(0))).unwrap());
        assert!(level_leq(&r(int(100)), &Level::Infinity).unwrap());
        assert!(level_leq(&Level::Discrete(DiscreteLevel::Inf), &Level::Infinity).unwrap());
        assert!(!level_leq(&Level::Infinity, &Level::Discrete(DiscreteLevel::Inf)).unwrap());
    }

    #[test]
    fn infinity_absorbs() {
        assert_eq!(level_add(&Level::Infinity, &r(int(3))).unwrap(), Level::Infinity);
        assert_eq!(
            level_add(&Level::RatPlus(int(2)), &Level::Infinity).unwrap(),
            Level::Infinity
        );
    }

    #[test]
    fn mismatch_is_an_error() {
        let err = level_add(&r(int(1)), &Level::RatPlus(int(1))).unwrap_err();
        assert!(matches!(err, LevelError::InstanceMismatch(..)));
        assert!(level_leq(&Level::Discrete(DiscreteLevel::Zero), &r(int(0))).is_err());
        assert!(dominate(&r(int(0)), &Level::RatPlus(int(0))).is_err());
    }

    #[test]
    fn dominate_examples() {
        assert_eq!(dominate(&r(int(2)), &r(int(5))).unwrap(), r(int(3)));
        assert_eq!(
            dominate(&Level::RatPlus(int(7)), &Level::RatPlus(int(3))).unwrap(),
            Level::RatPlus(int(0))
        );
    }

    #[test]
    fn discrete_dominate_exhaustive() {
        // Oracle: brute force the smallest witness over the whole carrier.
        let carrier = [DiscreteLevel::Zero, DiscreteLevel::Inf];
        for a in carrier {
            for b in carrier {
                let (la, lb) = (Level::Discrete(a), Level::Discrete(b));
                let brute = carrier
                    .iter()
                    .map(|&c| Level::Discrete(c))
                    .find(|c| la.add(c).unwrap().ge(&lb))
                    .unwrap();
                assert_eq!(dominate(&la, &lb).unwrap(), brute, "{a:?} {b:?}");
            }
        }
        assert_eq!(
            dominate(&Level::Discrete(DiscreteLevel::Zero), &Level::Discrete(DiscreteLevel::Inf))
                .unwrap(),
            Level::Discrete(DiscreteLevel::Inf)
        );
    }

    #[test]
    fn rat_plus_rejects_negative() {
        assert!(LevelKind::RatPlus.level(rat(-1, 2)).is_err());
        assert!(LevelKind::Discrete.level(rat(1, 2)).is_err());
    }

    fn small_rat() -> impl Strategy<Value = Rational> {
        (-20i64..20, 1i64..6).prop_map(|(n, d)| rat(n, d))
    }

    fn level_of(kind: LevelKind) -> BoxedStrategy<Level> {
        match kind {
            LevelKind::Rat => small_rat().prop_map(Level::Rat).boxed(),
            LevelKind::RatPlus => small_rat().prop_map(|q| Level::RatPlus(q.abs())).boxed(),
            LevelKind::Discrete => prop_oneof![
                Just(Level::Discrete(DiscreteLevel::Zero)),
                Just(Level::Discrete(DiscreteLevel::Inf))
            ]
            .boxed(),
        }
    }

    fn triple() -> impl Strategy<Value = (Level, Level, Level)> {
        prop_oneof![Just(LevelKind::Rat), Just(LevelKind::RatPlus), Just(LevelKind::Discrete)]
            .prop_flat_map(|k| (level_of(k), level_of(k), level_of(k)))
    }

    proptest! {
        #[test]
        fn monoid_laws((a, b, c) in triple()) {
            let zero = a.kind().unwrap().zero();
            prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
            prop_assert_eq!(a.add(&zero).unwrap(), a.clone());
        }

        #[test]
        fn addition_is_monotone((a, b, c) in triple()) {
            if a.leq(&b).unwrap() {
                prop_assert!(a.add(&c).unwrap().leq(&b.add(&c).unwrap()).unwrap());
                prop_assert!(c.add(&a).unwrap().leq(&c.add(&b).unwrap()).unwrap());
            }
        }

        #[test]
        fn directed_both_ways((a, b, _c) in triple()) {
            let up = a.clone().min_of(b.clone());
            prop_assert!(up.leq(&a).unwrap() && up.leq(&b).unwrap());
            let hi = if a.ge(&b) { a.clone() } else { b.clone() };
            prop_assert!(a.leq(&hi).unwrap() && b.leq(&hi).unwrap());
        }

        #[test]
        fn dominate_witnesses((a, b, _c) in triple()) {
            let c = a.dominate(&b).unwrap();
            prop_assert!(a.add(&c).unwrap().ge(&b));
        }

        #[test]
        fn positive_multiples_unbounded(bound in small_rat(), plus in any::<bool>()) {
            let kind = if plus { LevelKind::RatPlus } else { LevelKind::Rat };
            let p = kind.positive();
            prop_assert!(p.is_positive());
            let target = kind.level(bound.abs()).unwrap();
            let n = (0u64..).find(|&n| p.times(n).ge(&target)).unwrap();
            prop_assert!(n <= 20);
        }
    }
}
