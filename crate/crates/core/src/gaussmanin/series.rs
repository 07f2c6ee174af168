use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::germ::Rational;

use super::operator::DifferentialOperator;

const REL_TOL: f64 = 1e-15;
const MAX_TERMS: usize = 100_000;

/// `(q)_l = q (q+1) ... (q+l-1)`, exactly.
pub fn pochhammer(q: &Rational, l: u32) -> Rational {
    let mut acc = Rational::one();
    let mut factor = q.clone();
    for _ in 0..l {
        acc *= &factor;
        factor += Rational::one();
    }
    acc
}

/// Parameters `(a, b; c)` of the Gauss hypergeometric series.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergeometricParams {
    a: Rational,
    b: Rational,
    c: Rational,
    f: [f64; 3],
}

impl HypergeometricParams {
    pub fn new(a: Rational, b: Rational, c: Rational) -> Result<Self> {
        if c.is_integer() && c <= Rational::zero() {
            return Err(Error::InvalidArgument(format!(
                "c = {} is a non-positive integer",
                c
            )));
        }
        let f = [to_f64(&a), to_f64(&b), to_f64(&c)];
        Ok(HypergeometricParams { a, b, c, f })
    }

    pub fn from_ratios(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> Result<Self> {
        let r = |(n, d): (i64, i64)| {
            if d == 0 {
                Err(Error::InvalidArgument("zero denominator".into()))
            } else {
                Ok(Rational::new(n.into(), d.into()))
            }
        };
        Self::new(r(a)?, r(b)?, r(c)?)
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn c(&self) -> &Rational {
        &self.c
    }

    /// `(a, b, c)` as floats.
    pub fn as_f64(&self) -> (f64, f64, f64) {
        (self.f[0], self.f[1], self.f[2])
    }

    /// Ratio `coef_{l+1} / coef_l` of consecutive series coefficients.
    fn ratio(&self, l: usize) -> f64 {
        let [a, b, c] = self.f;
        let l = l as f64;
        (a + l) * (b + l) / ((c + l) * (l + 1.0))
    }
}

fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn check_disc(z: f64) -> Result<()> {
    if !(z.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "|z| = {} is outside the unit disc",
            z.abs()
        )));
    }
    Ok(())
}

fn small(term: f64, sum: f64) -> bool {
    term.abs() < REL_TOL * sum.abs() || term == 0.0
}

/// Sums the series `2F1(a, b; c; z)` by its term recurrence.
pub fn hyp2f1(p: &HypergeometricParams, z: f64) -> Result<f64> {
    Ok(hyp2f1_with_derivatives(p, z)?[0])
}

/// `[F, F', F'']` at `z`, each summed term by term.
pub fn hyp2f1_with_derivatives(p: &HypergeometricParams, z: f64) -> Result<[f64; 3]> {
    check_disc(z)?;
    let mut sums = [0.0f64; 3];
    let mut coef = 1.0f64;
    // z^l, z^(l-1), z^(l-2)
    let (mut zl, mut zl1, mut zl2) = (1.0f64, 0.0f64, 0.0f64);
    for l in 0..MAX_TERMS {
        let lf = l as f64;
        let terms = [
            coef * zl,
            if l >= 1 { lf * coef * zl1 } else { 0.0 },
            if l >= 2 {
                lf * (lf - 1.0) * coef * zl2
            } else {
                0.0
            },
        ];
        for (s, t) in sums.iter_mut().zip(terms) {
            *s += t;
        }
        if coef == 0.0 || (l >= 2 && terms.iter().zip(&sums).all(|(t, s)| small(*t, *s))) {
            return Ok(sums);
        }
        coef *= p.ratio(l);
        zl2 = zl1;
        zl1 = zl;
        zl *= z;
    }
    if z.abs() > 0.95 {
        return Err(Error::NoConvergence {
            terms: MAX_TERMS,
            z,
        });
    }
    Ok(sums)
}

/// Residual of the hypergeometric equation
/// `z(1-z) F'' + (c - (a+b+1) z) F' - ab F` at `z`.
pub fn gauss_ode_residual(p: &HypergeometricParams, z: f64) -> Result<f64> {
    let d = hyp2f1_with_derivatives(p, z)?;
    Ok(DifferentialOperator::hypergeometric(p).apply(z, &d).abs())
}

/// The period `u(x, t) = x F(1, 1/k; 1 + 1/k; x^k / t) / t` of `f = x^k`
/// together with `u_x` and `u_xx`, all from the term-wise differentiated series.
pub fn x_power_period(k: u32, x: f64, t: f64) -> Result<[f64; 3]> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k = {} must be at least 2",
            k
        )));
    }
    if !(t > 0.0) || x == 0.0 {
        return Err(Error::Domain(format!(
            "need t > 0 and x != 0, got x = {}, t = {}",
            x, t
        )));
    }
    let z = x.powi(k as i32) / t;
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::Domain(format!("x^k/t = {} is outside (0, 1)", z)));
    }
    let kf = k as f64;
    let p = HypergeometricParams::from_ratios((1, 1), (1, k as i64), (k as i64 + 1, k as i64))?;
    // u = sum c_l x^(kl+1) / t^(l+1)
    let mut sums = [0.0f64; 3];
    let mut coef = 1.0f64;
    let mut zl = 1.0f64;
    for l in 0..MAX_TERMS {
        let e = kf * l as f64 + 1.0;
        let base = coef * zl / t;
        let terms = [base * x, base * e, base * e * (e - 1.0) / x];
        for (s, term) in sums.iter_mut().zip(terms) {
            *s += term;
        }
        if l >= 1 && terms.iter().zip(&sums).all(|(term, s)| small(*term, *s)) {
            return Ok(sums);
        }
        coef *= p.ratio(l);
        zl *= z;
    }
    if z > 0.95 {
        return Err(Error::NoConvergence {
            terms: MAX_TERMS,
            z,
        });
    }
    Ok(sums)
}

/// Absolute value of the left side of the printed `x^k` period equation
/// applied to [`x_power_period`].
pub fn x_power_printed_residual(k: u32, x: f64, t: f64) -> Result<f64> {
    let u = x_power_period(k, x, t)?;
    Ok(DifferentialOperator::x_power_printed(k, t)
        .apply(x, &u)
        .abs())
}

/// Residual of `(t - x^k) D_xx - k x^(k-1) D_x` on the same period; the
/// period's `x`-derivative is `1/(t - x^k)`, which this operator kills.
pub fn x_power_corrected_residual(k: u32, x: f64, t: f64) -> Result<f64> {
    let u = x_power_period(k, x, t)?;
    Ok(DifferentialOperator::x_power_corrected(k, t)
        .apply(x, &u)
        .abs())
}

/// `Gamma(k/2)` for `k >= 1`.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k >= 1, "Gamma(0) is a pole");
    let (mut g, mut j) = if k % 2 == 1 {
        (std::f64::consts::PI.sqrt(), 1)
    } else {
        (1.0, 2)
    };
    while j < k {
        g *= j as f64 / 2.0;
        j += 2;
    }
    g
}

/// `pi^(d/2) / Gamma(d/2 + 1) * eta^(d/2)`.
pub fn ball_volume(d: u32, eta: f64) -> f64 {
    ball_volume_signed(d as i32, eta)
}

/// Same formula, allowing `d = -1` through `Gamma(1/2)`.
pub(crate) fn ball_volume_signed(d: i32, eta: f64) -> f64 {
    assert!(d >= -1);
    let half = d as f64 / 2.0;
    std::f64::consts::PI.powf(half) / gamma_half((d + 2) as u32) * eta.powf(half)
}

/// Area of the radius-`r` sphere `S^d` in `R^(d+1)`.
pub fn sphere_area(d: u32, r: f64) -> f64 {
    2.0 * std::f64::consts::PI.powf((d + 1) as f64 / 2.0) / gamma_half(d + 1) * r.powi(d as i32)
}

/// `2 pi V_(n - lambda - 1)(eta) / (t - eta)` with `n = m - 1`.
pub fn closed_form_u(m: usize, lambda: usize, eta: f64, t: f64) -> Result<f64> {
    if lambda >= m {
        return Err(Error::InvalidArgument(format!(
            "lambda = {} must be below m = {}",
            lambda, m
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eta = {} must be positive",
            eta
        )));
    }
    if t == eta {
        return Err(Error::Pole { t });
    }
    let d = m as i32 - 2 - lambda as i32;
    Ok(2.0 * std::f64::consts::PI * ball_volume_signed(d, eta) / (t - eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(&q(7, 3), 0), q(1, 1));
        assert_eq!(pochhammer(&q(1, 1), 5), q(120, 1));
        assert_eq!(pochhammer(&q(1, 2), 2), q(3, 4));
        assert_eq!(pochhammer(&q(-2, 1), 3), q(0, 1));
    }

    #[test]
    fn params_reject_nonpositive_integer_c() {
        assert!(HypergeometricParams::from_ratios((1, 1), (1, 1), (0, 1)).is_err());
        assert!(HypergeometricParams::from_ratios((1, 1), (1, 1), (-3, 1)).is_err());
        assert!(HypergeometricParams::from_ratios((1, 1), (1, 1), (-1, 2)).is_ok());
    }

    #[test]
    fn hyp2f1_examples() {
        let p = HypergeometricParams::from_ratios((5, 2), (1, 3), (7, 4)).unwrap();
        assert_eq!(hyp2f1(&p, 0.0).unwrap(), 1.0);
        let log = HypergeometricParams::from_ratios((1, 1), (1, 1), (2, 1)).unwrap();
        let v = hyp2f1(&log, 0.5).unwrap();
        assert!((v - 1.3862943611198906).abs() < 1e-14);
        let geo = HypergeometricParams::from_ratios((1, 1), (2, 3), (2, 3)).unwrap();
        assert!((hyp2f1(&geo, 0.3).unwrap() - 1.0 / 0.7).abs() < 1e-14);
    }

    #[test]
    fn hyp2f1_terminates_for_negative_integer_a() {
        // F(-2, b; c; z) = 1 - 2bz/c + b(b+1)z^2/(c(c+1))
        let p = HypergeometricParams::from_ratios((-2, 1), (1, 1), (3, 1)).unwrap();
        let z = 0.7;
        let expect = 1.0 - 2.0 * z / 3.0 + 2.0 * z * z / 12.0;
        assert!((hyp2f1(&p, z).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn hyp2f1_domain_errors() {
        let p = HypergeometricParams::from_ratios((1, 1), (1, 1), (2, 1)).unwrap();
        assert!(matches!(hyp2f1(&p, 1.0), Err(Error::Domain(_))));
        assert!(matches!(hyp2f1(&p, -1.5), Err(Error::Domain(_))));
        // terms decay like z^l / l, so the cap is hit just inside the disc
        assert!(matches!(
            hyp2f1(&p, 0.9999999),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn derivatives_match_log_closed_form() {
        // F(1,1;2;z) = -ln(1-z)/z
        let p = HypergeometricParams::from_ratios((1, 1), (1, 1), (2, 1)).unwrap();
        let z: f64 = 0.4;
        let d = hyp2f1_with_derivatives(&p, z).unwrap();
        let f = -(1.0 - z).ln() / z;
        let f1 = 1.0 / (z * (1.0 - z)) + (1.0 - z).ln() / (z * z);
        assert!((d[0] - f).abs() < 1e-14);
        assert!((d[1] - f1).abs() < 1e-13);
        assert!(gauss_ode_residual(&p, z).unwrap() < 1e-13);
    }

    #[test]
    fn x_power_period_derivative_is_resolvent() {
        for &(k, x, t) in &[(2u32, 0.5, 2.0), (3, 0.4, 1.5), (4, 0.3, 1.0)] {
            let u = x_power_period(k, x, t).unwrap();
            let xk = x.powi(k as i32);
            assert!((u[1] - 1.0 / (t - xk)).abs() < 1e-14);
            let u2 = k as f64 * x.powi(k as i32 - 1) / (t - xk).powi(2);
            assert!((u[2] - u2).abs() < 1e-13);
            assert!(x_power_corrected_residual(k, x, t).unwrap() < 1e-12);
        }
        assert!(matches!(x_power_period(2, 2.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(
            x_power_period(3, -0.5, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ball_volumes_and_areas() {
        assert_eq!(ball_volume(0, 3.7), 1.0);
        assert!((ball_volume(1, 1.0) - 2.0).abs() < 1e-15);
        assert!((ball_volume(2, 1.0) - PI).abs() < 1e-15);
        assert!((ball_volume(3, 1.0) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((sphere_area(2, 1.0) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(1, 2.0) - 4.0 * PI).abs() < 1e-14);
        assert_eq!(sphere_area(0, 5.0), 2.0);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_examples() {
        assert!((closed_form_u(3, 0, 1.0, 2.0).unwrap() - 4.0 * PI).abs() < 1e-13);
        assert!((closed_form_u(2, 0, 1.0, 3.0).unwrap() - PI).abs() < 1e-14);
        assert!(closed_form_u(3, 1, 1.0, 1e12).unwrap().abs() < 1e-10);
        assert!(matches!(
            closed_form_u(3, 0, 1.0, 1.0),
            Err(Error::Pole { .. })
        ));
        assert!(closed_form_u(2, 2, 1.0, 3.0).is_err());
    }
}
