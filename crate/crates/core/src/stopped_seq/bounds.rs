use num_traits::{Float, Num};
use serde::{Deserialize, Serialize};

use super::BitString;
use crate::prob::{mutual_information, mutual_information_bounds, ExactInterval, JointPmf};
use crate::scalar::ExactScalar;
use crate::Rational;

/// A protocol guarantee: the keys equal an ideal key except with probability
/// `epsilon`, and `E[|K| 1{K_A = K_B = K}] >= ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorLengthPair<T> {
    pub epsilon: T,
    pub ell: T,
}

impl<T> ErrorLengthPair<T> {
    pub fn new(epsilon: T, ell: T) -> Self {
        Self { epsilon, ell }
    }
}

/// Running two protocols back to back and concatenating keys achieves
/// `(min(e1 + e2, 1), (1 - e2) l1 + (1 - e1) l2)`.
pub fn compose_error_length<T>(a: &ErrorLengthPair<T>, b: &ErrorLengthPair<T>) -> ErrorLengthPair<T>
where
    T: Num + PartialOrd + Clone,
{
    let sum = a.epsilon.clone() + b.epsilon.clone();
    let epsilon = if sum > T::one() { T::one() } else { sum };
    let ell = (T::one() - b.epsilon.clone()) * a.ell.clone()
        + (T::one() - a.epsilon.clone()) * b.ell.clone();
    ErrorLengthPair { epsilon, ell }
}

/// A closed real interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<F> {
    pub lo: F,
    pub hi: F,
}

impl<F: Float> Interval<F> {
    pub fn new(lo: F, hi: F) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: F) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: F) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// [`compose_error_length`] lifted to intervals. The composed length is
/// decreasing in both errors and increasing in both lengths, so the endpoints
/// come from the matching corners.
pub fn compose_intervals<F: Float>(
    a: &ErrorLengthPair<Interval<F>>,
    b: &ErrorLengthPair<Interval<F>>,
) -> ErrorLengthPair<Interval<F>> {
    let one = F::one();
    let epsilon = Interval::new((a.epsilon.lo + b.epsilon.lo).min(one), (a.epsilon.hi + b.epsilon.hi).min(one));
    let lo = (one - b.epsilon.hi) * a.ell.lo + (one - a.epsilon.hi) * b.ell.lo;
    let hi = (one - b.epsilon.lo) * a.ell.hi + (one - a.epsilon.lo) * b.ell.hi;
    ErrorLengthPair { epsilon, ell: Interval::new(lo, hi) }
}

/// `I(X;Y) + log2 3 + 1`: no protocol achieves a larger `ell`.
pub fn converse_bound<F: Float, Q: ExactScalar>(j: &JointPmf<Q>) -> F {
    let i: F = mutual_information(j);
    let three = F::from(3.0).expect("float");
    i + three.log2() + F::one()
}

/// Rigorous interval for [`converse_bound`].
pub fn converse_bound_interval<Q: ExactScalar>(j: &JointPmf<Q>) -> ExactInterval {
    let i = mutual_information_bounds(j);
    let three = crate::prob::log2_bounds(&Rational::from_integer(3.into()), crate::prob::INTERVAL_BITS);
    let one = Rational::from_integer(1.into());
    ExactInterval { lower: i.lower + three.lower + &one, upper: i.upper + three.upper + one }
}

/// One protocol outcome: the ideal key and the two parties' keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RunOutcome {
    pub ideal: BitString,
    pub alice: BitString,
    pub bob: BitString,
}

impl RunOutcome {
    pub fn agreed(&self) -> bool {
        self.alice == self.ideal && self.bob == self.ideal
    }

    /// `|K| 1{K_A = K_B = K}`.
    pub fn agreed_length(&self) -> usize {
        if self.agreed() {
            self.ideal.len()
        } else {
            0
        }
    }
}

/// `E[|K| 1{K_A = K_B = K}]` for an exact joint law of outcomes.
///
/// Agreement-gated: disagreeing outcomes contribute nothing, however long
/// their keys are.
pub fn expected_agreed_length<'a, Q: ExactScalar>(
    law: impl IntoIterator<Item = (&'a RunOutcome, &'a Q)>,
) -> Q {
    law.into_iter().fold(Q::zero(), |acc, (o, m)| {
        acc + m.clone() * Q::from_ratio(o.agreed_length() as i64, 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{JointPmf, Pmf, Rational};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn compose_examples() {
        let z = compose_error_length(&ErrorLengthPair::new(q(0, 1), q(3, 1)), &ErrorLengthPair::new(q(0, 1), q(5, 1)));
        assert_eq!(z, ErrorLengthPair::new(q(0, 1), q(8, 1)));
        let c = compose_error_length(&ErrorLengthPair::new(q(1, 10), q(3, 1)), &ErrorLengthPair::new(q(1, 5), q(5, 1)));
        assert_eq!(c, ErrorLengthPair::new(q(3, 10), q(69, 10)));
        let e = q(1, 7);
        let d = compose_error_length(&ErrorLengthPair::new(e.clone(), q(0, 1)), &ErrorLengthPair::new(e.clone(), q(0, 1)));
        assert_eq!(d, ErrorLengthPair::new(e.clone() + e, q(0, 1)));
        let capped = compose_error_length(&ErrorLengthPair::new(q(3, 4), q(1, 1)), &ErrorLengthPair::new(q(1, 2), q(1, 1)));
        assert_eq!(capped.epsilon, q(1, 1));
        let f = compose_error_length(&ErrorLengthPair::new(0.1f64, 3.0), &ErrorLengthPair::new(0.2, 5.0));
        assert!((f.ell - 6.9).abs() < 1e-12);
    }

    #[test]
    fn interval_compose_contains_point_compose() {
        let a = ErrorLengthPair::new(Interval::new(0.05, 0.15), Interval::new(2.5, 3.5));
        let b = ErrorLengthPair::new(Interval::new(0.1, 0.3), Interval::new(4.0, 6.0));
        let c = compose_intervals(&a, &b);
        let p = compose_error_length(&ErrorLengthPair::new(0.1, 3.0), &ErrorLengthPair::new(0.2, 5.0));
        assert!(c.epsilon.contains(p.epsilon));
        assert!(c.ell.contains(p.ell));
    }

    #[test]
    fn converse_examples() {
        let bit = Pmf::uniform(2);
        let c: f64 = converse_bound(&JointPmf::product(&bit, &bit).unwrap());
        assert!((c - (3f64.log2() + 1.0)).abs() < 1e-12);
        let c: f64 = converse_bound(&JointPmf::diagonal(&Pmf::uniform(4)));
        assert!((c - (3.0 + 3f64.log2())).abs() < 1e-12);
        let iv = converse_bound_interval(&JointPmf::diagonal(&Pmf::uniform(4)));
        assert!(iv.contains_f64(c));
    }

    #[test]
    fn agreed_length_examples() {
        let perfect: Vec<(RunOutcome, Rational)> = [("0", q(1, 2)), ("10", q(1, 4)), ("11", q(1, 4))]
            .into_iter()
            .map(|(k, m)| {
                let k = BitString::from(k);
                (RunOutcome { ideal: k.clone(), alice: k.clone(), bob: k }, m)
            })
            .collect();
        assert_eq!(expected_agreed_length(perfect.iter().map(|(o, m)| (o, m))), q(3, 2));

        let never = [(RunOutcome { ideal: "01".into(), alice: "01".into(), bob: "00".into() }, q(1, 1))];
        assert_eq!(expected_agreed_length(never.iter().map(|(o, m)| (o, m))), q(0, 1));

        // agreement w.p. 1/2, independent of a uniform length-1 key
        let mut half = Vec::new();
        for k in ["0", "1"] {
            let k = BitString::from(k);
            half.push((RunOutcome { ideal: k.clone(), alice: k.clone(), bob: k.clone() }, q(1, 4)));
            let other = BitString::from(if k.bits()[0] { "0" } else { "1" });
            half.push((RunOutcome { ideal: k.clone(), alice: k, bob: other }, q(1, 4)));
        }
        assert_eq!(expected_agreed_length(half.iter().map(|(o, m)| (o, m))), q(1, 2));
    }
}
