//! Exact real polynomial map germs `f: (R^m, 0) -> (R, 0)`.
//!
//! Coefficients are stored as exact rationals so that term cancellation and
//! weight checks are exact; evaluation, gradients and Hessians run in `f64`
//! through a cached copy of the coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{check_dim, Error, Result};
use crate::linalg::SymMatrix;

pub type Rational = BigRational;

/// One term `c * x1^e1 * ... * xm^em` with `c != 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    exponents: Vec<u32>,
    coefficient: Rational,
}

impl Monomial {
    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn coefficient(&self) -> &Rational {
        &self.coefficient
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Graded lexicographic order: total degree first, then exponent vectors in
/// descending lexicographic order (`x^2`, `x*y`, `y^2`).
fn grlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| b.cmp(a))
}

#[derive(Clone)]
pub struct PolynomialGerm {
    n_vars: usize,
    terms: Vec<Monomial>,
    coeffs_f64: Vec<f64>,
}

impl PartialEq for PolynomialGerm {
    fn eq(&self, other: &Self) -> bool {
        self.n_vars == other.n_vars && self.terms == other.terms
    }
}

impl Eq for PolynomialGerm {}

impl PolynomialGerm {
    /// Builds a germ from `(exponents, coefficient)` pairs. Repeated exponent
    /// vectors are summed, zero terms dropped, and a surviving constant term
    /// is rejected.
    pub fn new<I>(n_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        if n_vars == 0 {
            return Err(Error::InvalidArgument(
                "germ needs at least one variable".into(),
            ));
        }
        let mut acc: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (exps, c) in terms {
            check_dim(n_vars, exps.len())?;
            *acc.entry(exps).or_insert_with(Rational::zero) += c;
        }
        let mut terms: Vec<Monomial> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(exponents, coefficient)| Monomial {
                exponents,
                coefficient,
            })
            .collect();
        if terms.iter().any(|t| t.degree() == 0) {
            return Err(Error::ConstantTerm);
        }
        terms.sort_by(|a, b| grlex(&a.exponents, &b.exponents));
        let coeffs_f64 = terms
            .iter()
            .map(|t| t.coefficient.to_f64().unwrap_or(f64::NAN))
            .collect();
        Ok(PolynomialGerm {
            n_vars,
            terms,
            coeffs_f64,
        })
    }

    /// Convenience constructor with integer coefficients.
    pub fn from_integer_terms(n_vars: usize, terms: &[(i64, &[u32])]) -> Result<Self> {
        Self::new(
            n_vars,
            terms
                .iter()
                .map(|(c, e)| (e.to_vec(), Rational::from_integer(BigInt::from(*c)))),
        )
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of two germs in the same variables.
    pub fn add(&self, other: &PolynomialGerm) -> Result<PolynomialGerm> {
        check_dim(self.n_vars, other.n_vars)?;
        Self::new(
            self.n_vars,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|t| (t.exponents.clone(), t.coefficient.clone())),
        )
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n_vars, x.len())?;
        Ok(self.value_unchecked(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_vars, x.len())?;
        Ok(self.gradient_unchecked(x))
    }

    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        check_dim(self.n_vars, x.len())?;
        Ok(self.hessian_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .zip(&self.coeffs_f64)
            .map(|(t, &c)| {
                t.exponents
                    .iter()
                    .zip(x)
                    .fold(c, |acc, (&e, &xi)| acc * xi.powi(e as i32))
            })
            .sum()
    }

    pub(crate) fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let m = self.n_vars;
        let mut g = vec![0.0; m];
        let mut powers = vec![0.0; m];
        for (t, &c) in self.terms.iter().zip(&self.coeffs_f64) {
            for (p, (&e, &xi)) in powers.iter_mut().zip(t.exponents.iter().zip(x)) {
                *p = xi.powi(e as i32);
            }
            for i in 0..m {
                let e = t.exponents[i];
                if e == 0 {
                    continue;
                }
                let mut v = c * e as f64 * x[i].powi(e as i32 - 1);
                for (j, p) in powers.iter().enumerate() {
                    if j != i {
                        v *= p;
                    }
                }
                g[i] += v;
            }
        }
        g
    }

    pub(crate) fn hessian_unchecked(&self, x: &[f64]) -> SymMatrix {
        let m = self.n_vars;
        let mut h = SymMatrix::zeros(m);
        for (t, &c) in self.terms.iter().zip(&self.coeffs_f64) {
            let e = &t.exponents;
            for i in 0..m {
                for j in i..m {
                    // d^2/dxi dxj of prod xk^ek
                    let mut v = c;
                    if i == j {
                        if e[i] < 2 {
                            continue;
                        }
                        v *= (e[i] * (e[i] - 1)) as f64 * x[i].powi(e[i] as i32 - 2);
                    } else {
                        if e[i] == 0 || e[j] == 0 {
                            continue;
                        }
                        v *= e[i] as f64 * x[i].powi(e[i] as i32 - 1);
                        v *= e[j] as f64 * x[j].powi(e[j] as i32 - 1);
                    }
                    for (k, &ek) in e.iter().enumerate() {
                        if k != i && k != j {
                            v *= x[k].powi(ek as i32);
                        }
                    }
                    h.add_sym(i, j, v);
                }
            }
        }
        h
    }

    /// True iff every monomial has weighted degree exactly one.
    pub fn is_quasi_homogeneous(&self, w: &WeightVector) -> Result<bool> {
        check_dim(self.n_vars, w.len())?;
        Ok(self
            .terms
            .iter()
            .all(|t| w.weighted_degree(&t.exponents).is_one()))
    }
}

fn var_name(i: usize, m: usize) -> String {
    const NAMES: [&str; 4] = ["x", "y", "z", "w"];
    if m <= NAMES.len() {
        NAMES[i].to_string()
    } else {
        format!("x{}", i + 1)
    }
}

impl fmt::Display for PolynomialGerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest degree first reads more naturally
        for (k, t) in self.terms.iter().rev().enumerate() {
            let c = &t.coefficient;
            let neg = c.is_negative();
            let abs = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut factors = Vec::new();
            for (i, &e) in t.exponents.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(var_name(i, self.n_vars)),
                    _ => factors.push(format!("{}^{}", var_name(i, self.n_vars), e)),
                }
            }
            if !abs.is_one() {
                write!(f, "{}", abs)?;
                if !factors.is_empty() {
                    write!(f, "*")?;
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for PolynomialGerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolynomialGerm({})", self)
    }
}

/// Weights `w` with `f(a^w1 x1, ..., a^wm xm) = a f(x)`; used as the plaintext
/// of the cipher.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightVector {
    weights: Vec<Rational>,
}

impl WeightVector {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        for w in &weights {
            if !w.is_positive() || *w > Rational::one() {
                return Err(Error::InvalidWeights(format!("weight {} not in (0, 1]", w)));
            }
        }
        Ok(WeightVector { weights })
    }

    pub fn from_ratios(pairs: &[(i64, i64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(p, q)| Rational::new(BigInt::from(p), BigInt::from(q)))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn weighted_degree(&self, exponents: &[u32]) -> Rational {
        self.weights
            .iter()
            .zip(exponents)
            .map(|(w, &e)| w * Rational::from_integer(BigInt::from(e)))
            .fold(Rational::zero(), |a, b| a + b)
    }

    /// The point `(a^w1 x1, ..., a^wm xm)`.
    pub fn scale_point(&self, a: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.len(), x.len())?;
        Ok(self
            .weights
            .iter()
            .zip(x)
            .map(|(w, xi)| a.powf(w.to_f64().unwrap_or(f64::NAN)) * xi)
            .collect())
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl FromStr for WeightVector {
    type Err = Error;

    /// Accepts `1/4,1/2`, `1/4 1/2` or `(1/4, 1/2)`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let weights = inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()?;
        WeightVector::new(weights)
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    Rational::from_str(s.trim()).map_err(|_| Error::Parse {
        line: 0,
        message: format!("not a rational: {:?}", s),
    })
}

/// Exact conversion of a finite `f64` into a rational.
pub fn rational_from_f64(v: f64) -> Result<Rational> {
    Rational::from_float(v).ok_or_else(|| Error::InvalidArgument(format!("{} is not finite", v)))
}

/// Parses the germ text format:
///
/// ```text
/// vars 2
/// 1 4 0
/// -1 0 2
/// weights 1/4 1/2
/// ```
///
/// Blank lines and `#` comments are ignored.
pub fn parse_germ_text(text: &str) -> Result<(PolynomialGerm, Option<WeightVector>)> {
    let mut n_vars: Option<usize> = None;
    let mut terms = Vec::new();
    let mut weights = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let mut fields = line.split_whitespace();
        let head = fields.next().unwrap();
        match (head, n_vars) {
            ("vars", None) => {
                let m: usize = fields
                    .next()
                    .and_then(|v| v.parse().ok())
                    .filter(|&m| m > 0)
                    .ok_or_else(|| perr("expected `vars <positive integer>`".into()))?;
                if fields.next().is_some() {
                    return Err(perr("trailing tokens after `vars m`".into()));
                }
                n_vars = Some(m);
            }
            (_, None) => return Err(perr("first line must be `vars m`".into())),
            ("vars", Some(_)) => return Err(perr("duplicate `vars` line".into())),
            ("weights", Some(m)) => {
                let ws = fields
                    .map(|f| parse_rational(f).map_err(|_| perr(format!("bad weight {:?}", f))))
                    .collect::<Result<Vec<_>>>()?;
                if ws.len() != m {
                    return Err(perr(format!("expected {} weights, got {}", m, ws.len())));
                }
                weights = Some(WeightVector::new(ws).map_err(|e| perr(e.to_string()))?);
            }
            (coeff, Some(m)) => {
                let c = parse_rational(coeff)
                    .map_err(|_| perr(format!("bad coefficient {:?}", coeff)))?;
                let exps = fields
                    .map(|f| {
                        f.parse::<u32>()
                            .map_err(|_| perr(format!("bad exponent {:?}", f)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if exps.len() != m {
                    return Err(perr(format!(
                        "expected {} exponents, got {}",
                        m,
                        exps.len()
                    )));
                }
                if exps.iter().all(|&e| e == 0) && !c.is_zero() {
                    return Err(perr("constant term not allowed".into()));
                }
                terms.push((exps, c));
            }
        }
    }
    let m = n_vars.ok_or(Error::Parse {
        line: 0,
        message: "missing `vars m` line".into(),
    })?;
    let germ = PolynomialGerm::new(m, terms)?;
    Ok((germ, weights))
}

/// Inverse of [`parse_germ_text`].
pub fn write_germ_text(f: &PolynomialGerm, weights: Option<&WeightVector>) -> String {
    let mut out = format!("vars {}\n", f.n_vars());
    for t in f.terms() {
        out.push_str(&t.coefficient.to_string());
        for e in &t.exponents {
            out.push_str(&format!(" {}", e));
        }
        out.push('\n');
    }
    if let Some(w) = weights {
        out.push_str("weights");
        for x in w.weights() {
            out.push_str(&format!(" {}", x));
        }
        out.push('\n');
    }
    out
}

/// Germs that appear throughout the worked examples.
pub mod standard {
    use super::*;

    fn unit(m: usize, i: usize, e: u32) -> Vec<u32> {
        let mut v = vec![0; m];
        v[i] = e;
        v
    }

    /// `x^k` in one variable.
    pub fn power(k: u32) -> PolynomialGerm {
        PolynomialGerm::from_integer_terms(1, &[(1, &[k])]).expect("valid germ")
    }

    /// `sum_i signs[i] * x_i^2`; `signs` entries are `+1` or `-1`.
    pub fn quadratic_form(signs: &[i64]) -> PolynomialGerm {
        let m = signs.len();
        PolynomialGerm::new(
            m,
            signs
                .iter()
                .enumerate()
                .map(|(i, &s)| (unit(m, i, 2), Rational::from_integer(BigInt::from(s)))),
        )
        .expect("valid germ")
    }

    pub fn sum_of_squares(m: usize) -> PolynomialGerm {
        quadratic_form(&vec![1; m])
    }

    /// `x^4 - y^2`, weights `(1/4, 1/2)`.
    pub fn x4_minus_y2() -> PolynomialGerm {
        PolynomialGerm::from_integer_terms(2, &[(1, &[4, 0]), (-1, &[0, 2])]).expect("valid germ")
    }
}

#[cfg(test)]
mod tests {
    use super::standard::*;
    use super::*;

    #[test]
    fn evaluate_examples() {
        let f = sum_of_squares(2);
        assert_eq!(f.evaluate(&[1.0, 2.0]).unwrap(), 5.0);
        assert_eq!(f.evaluate(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(x4_minus_y2().evaluate(&[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(x4_minus_y2().evaluate(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = sum_of_squares(2);
        assert_eq!(
            f.evaluate(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        assert!(f.gradient(&[1.0, 2.0, 3.0]).is_err());
        assert!(f.hessian(&[]).is_err());
        let w = WeightVector::from_ratios(&[(1, 2)]).unwrap();
        assert!(f.is_quasi_homogeneous(&w).is_err());
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(
            x4_minus_y2().gradient(&[1.0, 1.0]).unwrap(),
            vec![4.0, -2.0]
        );
        assert_eq!(sum_of_squares(3).gradient(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        // x^2 + x at x = -1/2
        let f = PolynomialGerm::from_integer_terms(1, &[(1, &[2]), (1, &[1])]).unwrap();
        assert_eq!(f.gradient(&[-0.5]).unwrap(), vec![0.0]);
    }

    #[test]
    fn hessian_examples() {
        let f = quadratic_form(&[1, 1, -1]);
        let h = f.hessian(&[0.3, -0.7, 1.1]).unwrap();
        assert_eq!(h, SymMatrix::from_diagonal(&[2.0, 2.0, -2.0]));

        let fs =
            PolynomialGerm::from_integer_terms(2, &[(1, &[4, 0]), (-1, &[0, 2]), (2, &[2, 0])])
                .unwrap();
        assert_eq!(
            fs.hessian(&[0.0, 0.0]).unwrap(),
            SymMatrix::from_diagonal(&[4.0, -2.0])
        );

        assert_eq!(
            power(3).hessian(&[0.0]).unwrap(),
            SymMatrix::from_diagonal(&[0.0])
        );
    }

    #[test]
    fn mixed_hessian_entry() {
        // x^2 y^3: d2/dxdy = 6 x y^2
        let f = PolynomialGerm::from_integer_terms(2, &[(1, &[2, 3])]).unwrap();
        let h = f.hessian(&[2.0, 3.0]).unwrap();
        assert_eq!(h.get(0, 1), 6.0 * 2.0 * 9.0);
        assert_eq!(h.get(0, 0), 2.0 * 27.0);
        assert_eq!(h.get(1, 1), 4.0 * 6.0 * 3.0);
        assert!(h.is_symmetric());
    }

    #[test]
    fn quasi_homogeneity_examples() {
        let w = WeightVector::from_ratios(&[(1, 4), (1, 2)]).unwrap();
        assert!(x4_minus_y2().is_quasi_homogeneous(&w).unwrap());
        let half3 = WeightVector::from_ratios(&[(1, 2); 3]).unwrap();
        assert!(sum_of_squares(3).is_quasi_homogeneous(&half3).unwrap());
        let g = PolynomialGerm::from_integer_terms(2, &[(1, &[2, 0]), (1, &[0, 3])]).unwrap();
        let half2 = WeightVector::from_ratios(&[(1, 2); 2]).unwrap();
        assert!(!g.is_quasi_homogeneous(&half2).unwrap());
    }

    #[test]
    fn constant_terms_are_rejected_and_cancellation_is_exact() {
        assert_eq!(
            PolynomialGerm::from_integer_terms(1, &[(1, &[0])]),
            Err(Error::ConstantTerm)
        );
        // terms cancelling to zero vanish entirely
        let f = PolynomialGerm::from_integer_terms(2, &[(3, &[1, 1]), (-3, &[1, 1]), (1, &[2, 0])])
            .unwrap();
        assert_eq!(f.terms().len(), 1);
        // a constant that cancels is fine
        assert!(PolynomialGerm::from_integer_terms(1, &[(1, &[0]), (-1, &[0]), (1, &[1])]).is_ok());
    }

    #[test]
    fn canonical_order_makes_equality_structural() {
        let a = PolynomialGerm::from_integer_terms(2, &[(1, &[4, 0]), (-1, &[0, 2])]).unwrap();
        let b = PolynomialGerm::from_integer_terms(2, &[(-1, &[0, 2]), (1, &[4, 0])]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "x^4 - y^2");
        let exps: Vec<&[u32]> = a.terms().iter().map(|t| t.exponents()).collect();
        assert_eq!(exps, vec![&[0, 2][..], &[4, 0][..]]);
    }

    #[test]
    fn weights_must_lie_in_unit_interval() {
        assert!(WeightVector::from_ratios(&[(0, 1)]).is_err());
        assert!(WeightVector::from_ratios(&[(3, 2)]).is_err());
        assert!(WeightVector::from_ratios(&[(1, 1)]).is_ok());
        assert_eq!(
            "(1/4, 1/2)".parse::<WeightVector>().unwrap(),
            WeightVector::from_ratios(&[(1, 4), (1, 2)]).unwrap()
        );
    }

    #[test]
    fn text_format_roundtrip_and_errors() {
        let text = "# x^4 - y^2\nvars 2\n1 4 0\n-1 0 2\nweights 1/4 1/2\n";
        let (f, w) = parse_germ_text(text).unwrap();
        assert_eq!(f, x4_minus_y2());
        assert_eq!(
            w,
            Some(WeightVector::from_ratios(&[(1, 4), (1, 2)]).unwrap())
        );
        let again = parse_germ_text(&write_germ_text(&f, w.as_ref())).unwrap();
        assert_eq!(again.0, f);
        assert_eq!(again.1, w);

        let (g, _) = parse_germ_text("vars 1\n3/2 2\n").unwrap();
        assert_eq!(g.evaluate(&[2.0]).unwrap(), 6.0);

        assert!(matches!(
            parse_germ_text("vars 1\n1 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_germ_text("1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_germ_text("vars 2\n1 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_germ_text("vars 2\n1 2 0\nweights 1/2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(parse_germ_text("").is_err());
    }
}
