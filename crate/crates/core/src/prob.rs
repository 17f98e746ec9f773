//! Exact probability mass functions and information measures.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, Zero};

use crate::scalar::{pow2_neg_big, ExactScalar};
use crate::{Error, Result};

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn check_normalized<Q: ExactScalar>(masses: &[Q]) -> Result<()> {
    for (i, m) in masses.iter().enumerate() {
        if m.is_negative() {
            return Err(Error::NegativeMass { symbol: i, mass: m.to_string() });
        }
    }
    let sum = masses.iter().fold(Q::zero(), |acc, m| acc + m.clone());
    if !sum.is_one() {
        let deficit = Q::one() - sum.clone();
        return Err(Error::NotNormalized { sum: sum.to_string(), deficit: deficit.to_string() });
    }
    Ok(())
}

/// Descending mass, ties by ascending index; zero masses are skipped.
pub(crate) fn sorted_support_of<Q: ExactScalar>(masses: &[Q]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..masses.len()).filter(|&i| masses[i].is_positive()).collect();
    order.sort_by(|&a, &b| masses[b].cmp_value(&masses[a]).then(a.cmp(&b)));
    order
}

/// A probability mass function over symbols `0..n`, masses summing to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pmf<Q> {
    labels: Vec<String>,
    mass: Vec<Q>,
}

impl<Q: ExactScalar> Pmf<Q> {
    pub fn new(mass: Vec<Q>) -> Result<Self> {
        let labels = default_labels(mass.len());
        Self::with_labels(labels, mass)
    }

    pub fn with_labels(labels: Vec<String>, mass: Vec<Q>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        if labels.len() != mass.len() {
            return Err(Error::LabelMismatch { labels: labels.len(), masses: mass.len() });
        }
        check_labels(&labels)?;
        check_normalized(&mass)?;
        Ok(Self { labels, mass })
    }

    /// Normalizes nonnegative integer weights.
    pub fn from_weights(weights: &[u64]) -> Result<Self> {
        let total: u128 = weights.iter().map(|&w| u128::from(w)).sum();
        if weights.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        if total == 0 {
            return Err(Error::ZeroMass);
        }
        let total = i64::try_from(total)
            .map_err(|_| Error::InvalidParameter("weight total exceeds i64".into()))?;
        let mass = weights.iter().map(|&w| Q::from_ratio(w as i64, total)).collect();
        Self::new(mass)
    }

    pub fn point(n: usize, symbol: usize) -> Self {
        assert!(symbol < n, "point mass outside alphabet");
        let mass = (0..n).map(|i| if i == symbol { Q::one() } else { Q::zero() }).collect();
        Self { labels: default_labels(n), mass }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform pmf over empty alphabet");
        let mass = vec![Q::from_ratio(1, n as i64); n];
        Self { labels: default_labels(n), mass }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self, symbol: usize) -> &Q {
        &self.mass[symbol]
    }

    pub fn masses(&self) -> &[Q] {
        &self.mass
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, symbol: usize) -> &str {
        &self.labels[symbol]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Resolves a label, falling back to a numeric index.
    pub fn resolve(&self, symbol: &str) -> Result<usize> {
        self.index_of(symbol)
            .or_else(|| symbol.parse::<usize>().ok().filter(|&i| i < self.len()))
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mass.len()).filter(|&i| self.mass[i].is_positive())
    }

    /// Support sorted by descending mass, ties by ascending index.
    pub fn sorted_support(&self) -> Vec<usize> {
        sorted_support_of(&self.mass)
    }

    pub fn relabel(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.mass.len() {
            return Err(Error::LabelMismatch { labels: labels.len(), masses: self.mass.len() });
        }
        check_labels(&labels)?;
        self.labels = labels;
        Ok(self)
    }

    pub fn map_scalar<R: ExactScalar>(&self) -> Option<Pmf<R>> {
        let mass = self
            .mass
            .iter()
            .map(|m| R::from_rational(&m.to_rational()))
            .collect::<Option<Vec<_>>>()?;
        Some(Pmf { labels: self.labels.clone(), mass })
    }
}

/// Nonnegative masses with an explicit deficiency: `sum(mass) + deficiency = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubPmf<Q> {
    mass: Vec<Q>,
    deficiency: Q,
}

impl<Q: ExactScalar> SubPmf<Q> {
    pub fn new(mass: Vec<Q>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        for (i, m) in mass.iter().enumerate() {
            if m.is_negative() {
                return Err(Error::NegativeMass { symbol: i, mass: m.to_string() });
            }
        }
        let total = mass.iter().fold(Q::zero(), |acc, m| acc + m.clone());
        if total > Q::one() {
            return Err(Error::NotNormalized {
                sum: total.to_string(),
                deficit: (Q::one() - total).to_string(),
            });
        }
        let deficiency = Q::one() - total;
        Ok(Self { mass, deficiency })
    }

    pub(crate) fn from_parts(mass: Vec<Q>, deficiency: Q) -> Self {
        Self { mass, deficiency }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self, symbol: usize) -> &Q {
        &self.mass[symbol]
    }

    pub fn masses(&self) -> &[Q] {
        &self.mass
    }

    pub fn deficiency(&self) -> &Q {
        &self.deficiency
    }

    pub fn total(&self) -> Q {
        Q::one() - self.deficiency.clone()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mass.len()).filter(|&i| self.mass[i].is_positive())
    }

    pub fn sorted_support(&self) -> Vec<usize> {
        sorted_support_of(&self.mass)
    }

    /// The normalized pmf; fails on zero total mass.
    pub fn normalized(&self) -> Result<Pmf<Q>> {
        let total = self.total();
        if total.is_zero() {
            return Err(Error::ZeroMass);
        }
        let mass = self.mass.iter().map(|m| m.clone() / total.clone()).collect();
        Pmf::new(mass)
    }
}

impl<Q: ExactScalar> From<Pmf<Q>> for SubPmf<Q> {
    fn from(p: Pmf<Q>) -> Self {
        Self { mass: p.mass, deficiency: Q::zero() }
    }
}

/// Joint pmf of `(X, Y)` stored row-major over `|X| x |Y|`.
///
/// Symbols of `X` and `Y` are identified through their labels: `X = Y` holds
/// exactly when the two labels coincide. The union alphabet lists the `X`
/// labels first, then the `Y` labels not already present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPmf<Q> {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    mass: Vec<Q>,
    union_labels: Vec<String>,
    y_union: Vec<usize>,
}

impl<Q: ExactScalar> JointPmf<Q> {
    pub fn new(x_labels: Vec<String>, y_labels: Vec<String>, rows: Vec<Vec<Q>>) -> Result<Self> {
        if x_labels.is_empty() || y_labels.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        if rows.len() != x_labels.len() {
            return Err(Error::LabelMismatch { labels: x_labels.len(), masses: rows.len() });
        }
        if let Some(row) = rows.iter().find(|r| r.len() != y_labels.len()) {
            return Err(Error::LabelMismatch { labels: y_labels.len(), masses: row.len() });
        }
        check_labels(&x_labels)?;
        check_labels(&y_labels)?;
        let mass: Vec<Q> = rows.into_iter().flatten().collect();
        check_normalized(&mass)?;
        let mut union_labels = x_labels.clone();
        let y_union = y_labels
            .iter()
            .map(|l| match x_labels.iter().position(|x| x == l) {
                Some(i) => i,
                None => {
                    union_labels.push(l.clone());
                    union_labels.len() - 1
                }
            })
            .collect();
        Ok(Self { x_labels, y_labels, mass, union_labels, y_union })
    }

    /// Joint over index-labelled alphabets: `x = y` iff the indices match.
    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        Self::new(default_labels(nx), default_labels(ny), rows)
    }

    /// `X = Y ~ p`.
    pub fn diagonal(p: &Pmf<Q>) -> Self {
        let n = p.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { p.mass(i).clone() } else { Q::zero() }).collect())
            .collect();
        Self::new(p.labels().to_vec(), p.labels().to_vec(), rows).expect("diagonal of a valid pmf")
    }

    /// Independent `X ~ px`, `Y ~ py`.
    pub fn product(px: &Pmf<Q>, py: &Pmf<Q>) -> Result<Self> {
        let rows = px
            .masses()
            .iter()
            .map(|a| py.masses().iter().map(|b| a.clone() * b.clone()).collect())
            .collect();
        Self::new(px.labels().to_vec(), py.labels().to_vec(), rows)
    }

    pub fn x_len(&self) -> usize {
        self.x_labels.len()
    }

    pub fn y_len(&self) -> usize {
        self.y_labels.len()
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn union_labels(&self) -> &[String] {
        &self.union_labels
    }

    pub fn union_len(&self) -> usize {
        self.union_labels.len()
    }

    /// Union index of an `X` symbol (identical to the `X` index).
    pub fn x_union(&self, x: usize) -> usize {
        x
    }

    pub fn y_union(&self, y: usize) -> usize {
        self.y_union[y]
    }

    /// The `X` index carrying the same label as `y`, if any.
    pub fn y_as_x(&self, y: usize) -> Option<usize> {
        let u = self.y_union[y];
        (u < self.x_labels.len()).then_some(u)
    }

    pub fn same_symbol(&self, x: usize, y: usize) -> bool {
        self.y_union[y] == x
    }

    pub fn get(&self, x: usize, y: usize) -> &Q {
        &self.mass[x * self.y_labels.len() + y]
    }

    pub fn masses(&self) -> &[Q] {
        &self.mass
    }

    /// Nonzero cells `(x, y, mass)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, &Q)> + '_ {
        let ny = self.y_labels.len();
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_positive())
            .map(move |(i, m)| (i / ny, i % ny, m))
    }

    pub fn marginal_x(&self) -> Pmf<Q> {
        let ny = self.y_labels.len();
        let mass = self
            .mass
            .chunks(ny)
            .map(|row| row.iter().fold(Q::zero(), |a, m| a + m.clone()))
            .collect();
        Pmf { labels: self.x_labels.clone(), mass }
    }

    pub fn marginal_y(&self) -> Pmf<Q> {
        let ny = self.y_labels.len();
        let mut mass = vec![Q::zero(); ny];
        for (i, m) in self.mass.iter().enumerate() {
            mass[i % ny] = mass[i % ny].clone() + m.clone();
        }
        Pmf { labels: self.y_labels.clone(), mass }
    }

    /// Flattened cell pmf, used for sampling `(X, Y)` jointly.
    pub fn cell_pmf(&self) -> Pmf<Q> {
        Pmf { labels: default_labels(self.mass.len()), mass: self.mass.clone() }
    }

    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index / self.y_labels.len(), index % self.y_labels.len())
    }
}

fn float_of<F: Float, Q: ExactScalar>(q: &Q) -> F {
    F::from(q.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(F::nan)
}

fn entropy_of<F: Float, Q: ExactScalar>(masses: &[Q]) -> F {
    masses
        .iter()
        .filter(|m| m.is_positive())
        .map(|m| {
            let p: F = float_of(m);
            -p * p.log2()
        })
        .fold(F::zero(), |a, b| a + b)
}

/// Shannon entropy in bits, evaluated in floating point.
pub fn entropy<F: Float, Q: ExactScalar>(p: &Pmf<Q>) -> F {
    entropy_of(p.masses())
}

/// `I(X;Y) = H(X) + H(Y) - H(X,Y)` in bits, floating point.
pub fn mutual_information<F: Float, Q: ExactScalar>(j: &JointPmf<Q>) -> F {
    let hx: F = entropy(&j.marginal_x());
    let hy: F = entropy(&j.marginal_y());
    let hxy: F = entropy_of(j.masses());
    hx + hy - hxy
}

/// Exact entropy of a dyadic pmf (every nonzero mass `2^-k` contributes
/// `k 2^-k`); `None` if some nonzero mass is not a power of two.
pub fn dyadic_entropy<Q: ExactScalar>(masses: &[Q]) -> Option<Q> {
    let mut h = Q::zero();
    for m in masses.iter().filter(|m| m.is_positive()) {
        let e = m.dyadic_exponent()?;
        h = h + m.clone() * Q::from_ratio(-e, 1);
    }
    Some(h)
}

/// Closed interval with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactInterval {
    pub lower: BigRational,
    pub upper: BigRational,
}

impl ExactInterval {
    pub fn contains_f64(&self, v: f64) -> bool {
        match BigRational::from_float(v) {
            Some(r) => self.lower <= r && r <= self.upper,
            None => false,
        }
    }

    pub fn lower_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self.lower).unwrap_or(f64::NAN)
    }

    pub fn upper_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self.upper).unwrap_or(f64::NAN)
    }
}

/// Default number of fractional bits resolved by the interval mode.
pub const INTERVAL_BITS: u32 = 40;

/// Rigorous bounds `lower < log2(r) < upper` for rational `r > 0`.
///
/// The fractional part is resolved bit by bit by repeated squaring in
/// outward-rounded fixed point; both endpoints are then pushed out by a
/// further `2^-bits` so that a correctly rounded float lies strictly inside.
pub fn log2_bounds(r: &BigRational, bits: u32) -> ExactInterval {
    assert!(r.is_positive(), "log2 of a nonpositive number");
    let e = r.floor_log2().expect("positive");
    let y = r.mul_pow2(-e); // in [1, 2)
    let guard = u64::from(2 * bits + 16);
    let scale = BigInt::one() << guard;
    let two = BigInt::from(2) << guard;
    let floor_div = |n: &BigInt, d: &BigInt| num_integer::Integer::div_floor(n, d);
    let ceil_div = |n: &BigInt, d: &BigInt| -num_integer::Integer::div_floor(&-n, d);
    let scaled = y.numer() * &scale;
    let mut lo = floor_div(&scaled, y.denom());
    let mut hi = ceil_div(&scaled, y.denom());
    let mut digits = BigInt::zero();
    let mut resolved = 0u32;
    for _ in 0..bits {
        lo = floor_div(&(&lo * &lo), &scale);
        hi = ceil_div(&(&hi * &hi), &scale);
        let digit = if lo >= two {
            lo = floor_div(&lo, &BigInt::from(2));
            hi = ceil_div(&hi, &BigInt::from(2));
            1
        } else if hi < two {
            0
        } else {
            break;
        };
        digits = (digits << 1) + digit;
        resolved += 1;
    }
    let frac = BigRational::new(digits, BigInt::one() << resolved);
    let unit = pow2_neg_big(u64::from(resolved));
    let margin = pow2_neg_big(u64::from(bits));
    let base = BigRational::from_integer(BigInt::from(e)) + frac;
    ExactInterval { lower: &base - &margin, upper: base + unit + margin }
}

/// Entropy bracketed by exact rationals; the float [`entropy`] lies inside.
pub fn entropy_bounds<Q: ExactScalar>(p: &Pmf<Q>) -> ExactInterval {
    entropy_bounds_of(p.masses(), INTERVAL_BITS)
}

pub(crate) fn entropy_bounds_of<Q: ExactScalar>(masses: &[Q], bits: u32) -> ExactInterval {
    let mut lower = BigRational::zero();
    let mut upper = BigRational::zero();
    for m in masses.iter().filter(|m| m.is_positive()) {
        let r = m.to_rational();
        let lg = log2_bounds(&r, bits);
        lower -= &r * &lg.upper;
        upper -= &r * &lg.lower;
    }
    if lower.is_negative() {
        lower = BigRational::zero();
    }
    ExactInterval { lower, upper }
}

/// Interval version of [`mutual_information`].
pub fn mutual_information_bounds<Q: ExactScalar>(j: &JointPmf<Q>) -> ExactInterval {
    let hx = entropy_bounds(&j.marginal_x());
    let hy = entropy_bounds(&j.marginal_y());
    let hxy = entropy_bounds_of(j.masses(), INTERVAL_BITS);
    let mut lower = &hx.lower + &hy.lower - &hxy.upper;
    if lower.is_negative() {
        lower = BigRational::zero();
    }
    ExactInterval { lower, upper: hx.upper + hy.upper - hxy.lower }
}

/// Smallest `alpha >= 0` with `2^-alpha <= r`, for `0 < r <= 1`.
///
/// Decided by one exact integer comparison on `r = n/d`, never by a
/// floating-point logarithm.
pub fn ceil_neg_log2<Q: ExactScalar>(r: &Q) -> Result<u32> {
    if !r.is_positive() || *r > Q::one() {
        return Err(Error::OutsideUnitInterval(r.to_string()));
    }
    let e = r.floor_log2().expect("positive");
    u32::try_from(-e).map_err(|_| Error::OutsideUnitInterval(r.to_string()))
}

/// True iff every nonzero mass is `2^-j` for some `j >= 0`.
pub fn is_dyadic<Q: ExactScalar>(p: &Pmf<Q>) -> bool {
    p.masses().iter().filter(|m| m.is_positive()).all(|m| m.dyadic_exponent().is_some())
}

/// `p = P(X=Y)` and, when `p > 0`, the law of `X` given `X = Y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementStats<Q> {
    pub p: Q,
    pub conditional: Option<Pmf<Q>>,
}

pub fn agreement_stats<Q: ExactScalar>(j: &JointPmf<Q>) -> AgreementStats<Q> {
    let mut diag = vec![Q::zero(); j.x_len()];
    for y in 0..j.y_len() {
        if let Some(x) = j.y_as_x(y) {
            diag[x] = j.get(x, y).clone();
        }
    }
    let p = diag.iter().fold(Q::zero(), |a, m| a + m.clone());
    let conditional = if p.is_zero() {
        None
    } else {
        let mass = diag.into_iter().map(|m| m / p.clone()).collect();
        Some(Pmf { labels: j.x_labels().to_vec(), mass })
    };
    AgreementStats { p, conditional }
}
