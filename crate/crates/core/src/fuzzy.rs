//! Triangular fuzzy numbers and the five-level linguistic scale.
//!
//! Every fuzzified quantity in the engine (importances, stakeholder weights,
//! propagated impacts) is a [`Tfn`]. The operations here are the small subset
//! the analysis needs: signed scaling, addition, componentwise weighting,
//! vertex distance and centroid defuzzification.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("fuzzy number components must satisfy l <= m <= u, got ({0}, {1}, {2})")]
    Unordered(f64, f64, f64),
    #[error("fuzzy number components must be finite, got ({0}, {1}, {2})")]
    NonFinite(f64, f64, f64),
    #[error("componentwise product requires non-negative components")]
    NegativeComponent,
}

/// A triangular fuzzy number `(l, m, u)` with `l <= m <= u`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Tfn {
    pub l: f64,
    pub m: f64,
    pub u: f64,
}

impl Tfn {
    pub const ZERO: Tfn = Tfn { l: 0.0, m: 0.0, u: 0.0 };
    pub const ONE: Tfn = Tfn { l: 1.0, m: 1.0, u: 1.0 };

    /// Checked constructor.
    pub fn new(l: f64, m: f64, u: f64) -> Result<Self, FuzzyError> {
        if !(l.is_finite() && m.is_finite() && u.is_finite()) {
            return Err(FuzzyError::NonFinite(l, m, u));
        }
        if !(l <= m && m <= u) {
            return Err(FuzzyError::Unordered(l, m, u));
        }
        Ok(Tfn { l, m, u })
    }

    /// A crisp number `(x, x, x)`.
    pub const fn crisp(x: f64) -> Self {
        Tfn { l: x, m: x, u: x }
    }

    pub fn is_ordered(&self) -> bool {
        self.l <= self.m && self.m <= self.u
    }

    pub fn is_crisp(&self) -> bool {
        self.l == self.m && self.m == self.u
    }

    pub fn components(&self) -> [f64; 3] {
        [self.l, self.m, self.u]
    }

    /// Largest absolute component.
    pub fn abs_max(&self) -> f64 {
        self.l.abs().max(self.m.abs()).max(self.u.abs())
    }

    /// Signed scalar multiplication. A negative factor swaps the bounds so the
    /// result stays ordered.
    pub fn scale(self, w: f64) -> Tfn {
        if w >= 0.0 {
            Tfn { l: w * self.l, m: w * self.m, u: w * self.u }
        } else {
            Tfn { l: w * self.u, m: w * self.m, u: w * self.l }
        }
    }

    /// Componentwise product of two non-negative fuzzy numbers.
    pub fn checked_mul(self, other: Tfn) -> Result<Tfn, FuzzyError> {
        if self.l < 0.0 || other.l < 0.0 {
            return Err(FuzzyError::NegativeComponent);
        }
        Ok(Tfn { l: self.l * other.l, m: self.m * other.m, u: self.u * other.u })
    }

    /// Vertex distance `sqrt(((l1-l2)^2 + (m1-m2)^2 + (u1-u2)^2) / 3)`.
    pub fn distance(&self, other: &Tfn) -> f64 {
        let dl = self.l - other.l;
        let dm = self.m - other.m;
        let du = self.u - other.u;
        ((dl * dl + dm * dm + du * du) / 3.0).sqrt()
    }

    /// Centroid `(l + m + u) / 3`.
    pub fn defuzzify(&self) -> f64 {
        (self.l + self.m + self.u) / 3.0
    }
}

impl Add for Tfn {
    type Output = Tfn;

    fn add(self, rhs: Tfn) -> Tfn {
        Tfn { l: self.l + rhs.l, m: self.m + rhs.m, u: self.u + rhs.u }
    }
}

impl std::ops::AddAssign for Tfn {
    fn add_assign(&mut self, rhs: Tfn) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for Tfn {
    fn sum<I: Iterator<Item = Tfn>>(iter: I) -> Tfn {
        iter.fold(Tfn::ZERO, Add::add)
    }
}

impl fmt::Display for Tfn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.l, self.m, self.u)
    }
}

impl Serialize for Tfn {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.l, self.m, self.u].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Tfn {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [l, m, u] = <[f64; 3]>::deserialize(deserializer)?;
        Tfn::new(l, m, u).map_err(serde::de::Error::custom)
    }
}

/// Five-point qualitative scale used for importance, confidence and
/// stakeholder weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    VeryLow,
    Low,
    Medium,
    High,
    VeryHigh,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::VeryLow, Level::Low, Level::Medium, Level::High, Level::VeryHigh];

    /// Ordinal index `0..=4`.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::VeryLow => "VeryLow",
            Level::Low => "Low",
            Level::Medium => "Medium",
            Level::High => "High",
            Level::VeryHigh => "VeryHigh",
        }
    }

    /// The base triangular number of this level on `[0, 1]`.
    pub fn scale_tfn(self) -> Tfn {
        match self {
            Level::VeryLow => Tfn { l: 0.0, m: 0.0, u: 0.25 },
            Level::Low => Tfn { l: 0.0, m: 0.25, u: 0.5 },
            Level::Medium => Tfn { l: 0.25, m: 0.5, u: 0.75 },
            Level::High => Tfn { l: 0.5, m: 0.75, u: 1.0 },
            Level::VeryHigh => Tfn { l: 0.75, m: 1.0, u: 1.0 },
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown level '{0}' (expected VeryLow, Low, Medium, High or VeryHigh)")]
pub struct ParseLevelError(pub String);

impl std::str::FromStr for Level {
    type Err = ParseLevelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Level::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ParseLevelError(s.to_string()))
    }
}

/// Fuzzifies an importance level and narrows it around its mode according to
/// the confidence level: full spread at `VeryLow` confidence, crisp at
/// `VeryHigh`.
pub fn fuzzify(importance: Level, confidence: Level) -> Tfn {
    let base = importance.scale_tfn();
    let spread = 1.0 - confidence.index() as f64 / 4.0;
    Tfn {
        l: base.m - spread * (base.m - base.l),
        m: base.m,
        u: base.m + spread * (base.u - base.m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(l: f64, m: f64, u: f64) -> Tfn {
        Tfn::new(l, m, u).unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(Tfn::ZERO + t(1.0, 2.0, 3.0), t(1.0, 2.0, 3.0));
        assert_eq!(t(1.0, 2.0, 3.0) + t(2.0, 3.0, 4.0), t(3.0, 5.0, 7.0));
        assert_eq!(t(-1.0, 0.0, 1.0) + Tfn::crisp(0.5), t(-0.5, 0.5, 1.5));
    }

    #[test]
    fn scale_examples() {
        assert_eq!(t(1.0, 2.0, 3.0).scale(2.0), t(2.0, 4.0, 6.0));
        assert_eq!(t(1.0, 2.0, 3.0).scale(-1.0), t(-3.0, -2.0, -1.0));
        assert_eq!(t(5.0, 6.0, 7.0).scale(0.0), Tfn::ZERO);
    }

    #[test]
    fn mul_examples() {
        let x = t(0.2, 0.5, 0.8);
        assert_eq!(Tfn::ONE.checked_mul(x).unwrap(), x);
        assert_eq!(t(0.5, 0.75, 1.0).checked_mul(t(0.75, 1.0, 1.0)).unwrap(), t(0.375, 0.75, 1.0));
        assert_eq!(Tfn::ZERO.checked_mul(x).unwrap(), Tfn::ZERO);
        assert_eq!(t(-0.1, 0.0, 1.0).checked_mul(x), Err(FuzzyError::NegativeComponent));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(Tfn::ZERO.distance(&Tfn::ONE), 1.0);
        let x = t(0.2, 0.5, 0.8);
        assert_eq!(x.distance(&x), 0.0);
        // sqrt((0.04 + 0.04 + 0.01) / 3) = sqrt(0.03)
        let d = x.distance(&t(0.4, 0.7, 0.9));
        assert!((d - 0.173_205_080_756_887_7).abs() < 1e-12, "{d}");
    }

    #[test]
    fn fuzzify_examples() {
        assert_eq!(fuzzify(Level::High, Level::VeryLow), t(0.5, 0.75, 1.0));
        assert_eq!(fuzzify(Level::High, Level::VeryHigh), Tfn::crisp(0.75));
        assert_eq!(fuzzify(Level::High, Level::Medium), t(0.625, 0.75, 0.875));
        assert_eq!(fuzzify(Level::Medium, Level::VeryHigh), Tfn::crisp(0.5));
        assert_eq!(fuzzify(Level::VeryLow, Level::VeryHigh), Tfn::ZERO);
    }

    #[test]
    fn defuzzify_examples() {
        assert_eq!(Tfn::ZERO.defuzzify(), 0.0);
        assert_eq!(Tfn::crisp(3.0).defuzzify(), 3.0);
        assert_eq!(t(0.625, 0.75, 0.875).defuzzify(), 0.75);
    }

    #[test]
    fn constructor_rejects_bad_triples() {
        assert_eq!(Tfn::new(1.0, 0.0, 2.0), Err(FuzzyError::Unordered(1.0, 0.0, 2.0)));
        assert!(matches!(Tfn::new(f64::NAN, 0.0, 1.0), Err(FuzzyError::NonFinite(..))));
    }

    #[test]
    fn serde_is_three_element_array() {
        let json = serde_json::to_string(&t(0.25, 0.5, 0.75)).unwrap();
        assert_eq!(json, "[0.25,0.5,0.75]");
        let back: Tfn = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t(0.25, 0.5, 0.75));
        assert!(serde_json::from_str::<Tfn>("[1.0,0.0,2.0]").is_err());
        assert!(serde_json::from_str::<Tfn>("[1.0,2.0]").is_err());
    }

    #[test]
    fn level_parsing() {
        assert_eq!("veryhigh".parse::<Level>().unwrap(), Level::VeryHigh);
        assert_eq!("Medium".parse::<Level>().unwrap(), Level::Medium);
        assert!("Gigantic".parse::<Level>().is_err());
        assert_eq!(serde_json::to_string(&Level::VeryLow).unwrap(), "\"VeryLow\"");
    }

    fn arb_tfn() -> impl Strategy<Value = Tfn> {
        prop::array::uniform3(-10.0f64..10.0).prop_map(|mut c| {
            c.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Tfn { l: c[0], m: c[1], u: c[2] }
        })
    }

    fn arb_level() -> impl Strategy<Value = Level> {
        prop::sample::select(Level::ALL.to_vec())
    }

    fn close(a: Tfn, b: Tfn, tol: f64) -> bool {
        (a.l - b.l).abs() <= tol && (a.m - b.m).abs() <= tol && (a.u - b.u).abs() <= tol
    }

    proptest! {
        #[test]
        fn closure(a in arb_tfn(), b in arb_tfn(), w in -5.0f64..5.0) {
            prop_assert!((a + b).is_ordered());
            prop_assert!(a.scale(w).is_ordered());
        }

        #[test]
        fn add_commutative_associative(a in arb_tfn(), b in arb_tfn(), c in arb_tfn()) {
            prop_assert_eq!(a + b, b + a);
            prop_assert!(close((a + b) + c, a + (b + c), 1e-12));
            prop_assert_eq!(a + Tfn::ZERO, a);
        }

        #[test]
        fn scale_composes(a in arb_tfn(), w1 in -5.0f64..5.0, w2 in -5.0f64..5.0) {
            prop_assert!(close(a.scale(w2).scale(w1), a.scale(w1 * w2), 1e-9));
        }

        #[test]
        fn fuzzify_endpoints_and_bounds(i in arb_level(), c in arb_level()) {
            prop_assert!(fuzzify(i, Level::VeryHigh).is_crisp());
            prop_assert_eq!(fuzzify(i, Level::VeryHigh).m, i.scale_tfn().m);
            prop_assert_eq!(fuzzify(i, Level::VeryLow), i.scale_tfn());
            let f = fuzzify(i, c);
            prop_assert!(f.is_ordered() && f.l >= 0.0 && f.u <= 1.0);
        }

        #[test]
        fn distance_is_a_metric(a in arb_tfn(), b in arb_tfn(), c in arb_tfn()) {
            prop_assert!((a.distance(&b) - b.distance(&a)).abs() < 1e-12);
            prop_assert!(a.distance(&c) <= a.distance(&b) + b.distance(&c) + 1e-12);
        }

        #[test]
        fn defuzzify_additive(a in arb_tfn(), b in arb_tfn()) {
            prop_assert!(((a + b).defuzzify() - (a.defuzzify() + b.defuzzify())).abs() < 1e-12);
        }
    }
}
