use std::fmt;

use crate::error::{Error, Result};

use super::series::HypergeometricParams;

/// A real rational function `num(v) / den(v)`; coefficients ascend by power.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    num: Vec<f64>,
    den: Vec<f64>,
}

fn horner(c: &[f64], v: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * v + a)
}

impl RationalFn {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if den.iter().all(|&d| d == 0.0) {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(RationalFn { num, den })
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        RationalFn {
            num: coeffs,
            den: vec![1.0],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial(vec![c])
    }

    /// `v^power` with `power` possibly negative, times `c`.
    pub fn monomial(c: f64, power: i32) -> Self {
        let mut p = vec![0.0; power.unsigned_abs() as usize + 1];
        if power >= 0 {
            *p.last_mut().unwrap() = c;
            Self::polynomial(p)
        } else {
            *p.last_mut().unwrap() = 1.0;
            RationalFn {
                num: vec![c],
                den: p,
            }
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        horner(&self.num, v) / horner(&self.den, v)
    }
}

/// `sum_j c_j(v) D^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialOperator {
    terms: Vec<(usize, RationalFn)>,
    name: String,
}

impl DifferentialOperator {
    pub fn new(name: &str, mut terms: Vec<(usize, RationalFn)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("operator has no terms".into()));
        }
        terms.sort_by_key(|(j, _)| *j);
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("repeated derivative order".into()));
        }
        Ok(DifferentialOperator {
            terms,
            name: name.to_string(),
        })
    }

    fn build(name: &str, terms: Vec<(usize, RationalFn)>) -> Self {
        Self::new(name, terms).expect("well-formed operator")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[(usize, RationalFn)] {
        &self.terms
    }

    pub fn order(&self) -> usize {
        self.terms.last().map_or(0, |(j, _)| *j)
    }

    /// Applies the operator at `v` given `derivs[j] = D^j u (v)`.
    pub fn apply(&self, v: f64, derivs: &[f64]) -> f64 {
        self.terms.iter().map(|(j, c)| c.eval(v) * derivs[*j]).sum()
    }

    /// `D_t`.
    pub fn d_t() -> Self {
        Self::build("D_t", vec![(1, RationalFn::constant(1.0))])
    }

    /// `(t - eta) D_t + 1`.
    pub fn shifted_euler(eta: f64) -> Self {
        Self::build(
            "(t-eta)D_t+1",
            vec![
                (0, RationalFn::constant(1.0)),
                (1, RationalFn::polynomial(vec![-eta, 1.0])),
            ],
        )
    }

    /// The hypergeometric operator `z(1-z) D^2 + (c - (a+b+1) z) D - ab`.
    pub fn hypergeometric(p: &HypergeometricParams) -> Self {
        let (a, b, c) = p.as_f64();
        Self::build(
            "hypergeometric",
            vec![
                (0, RationalFn::constant(-a * b)),
                (1, RationalFn::polynomial(vec![c, -(a + b + 1.0)])),
                (2, RationalFn::polynomial(vec![0.0, 1.0, -1.0])),
            ],
        )
    }

    /// The printed operator `S` for `f = x^k`, in `x` with parameter `t`:
    /// `2x^(k-3)(x^k/t - 1) D_xx - ((k+1)/k t/x^2 - (2k+1)/k x^(k-2)) D_x - t/(k x)`.
    pub fn x_power_printed(k: u32, t: f64) -> Self {
        let kf = k as f64;
        let k = k as usize;
        let mut c2 = vec![0.0; 2 * k + 1];
        c2[k] = -2.0;
        c2[2 * k] = 2.0 / t;
        let mut c1 = vec![0.0; k + 1];
        c1[0] = -(kf + 1.0) / kf * t;
        c1[k] = (2.0 * kf + 1.0) / kf;
        Self::build(
            "S",
            vec![
                (0, RationalFn::monomial(-t / kf, -1)),
                (
                    1,
                    RationalFn {
                        num: c1,
                        den: vec![0.0, 0.0, 1.0],
                    },
                ),
                (
                    2,
                    RationalFn {
                        num: c2,
                        den: vec![0.0, 0.0, 0.0, 1.0],
                    },
                ),
            ],
        )
    }

    /// `(t - x^k) D_xx - k x^(k-1) D_x`, which annihilates the `x^k` period.
    pub fn x_power_corrected(k: u32, t: f64) -> Self {
        let kf = k as f64;
        let mut c2 = vec![0.0; k as usize + 1];
        c2[0] = t;
        c2[k as usize] = -1.0;
        Self::build(
            "(t-x^k)D_xx-kx^(k-1)D_x",
            vec![
                (1, RationalFn::monomial(-kf, k as i32 - 1)),
                (2, RationalFn::polynomial(c2)),
            ],
        )
    }
}

impl fmt::Display for DifferentialOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A uniform grid `start + i * step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 || !(end > start) {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points on a nonempty interval, got {} on [{}, {}]",
                len, start, end
            )));
        }
        Ok(UniformGrid {
            start,
            step: (end - start) / (len - 1) as f64,
            len,
        })
    }

    /// 513 points on `[eta + 1/2, eta + 9/2]`.
    pub fn default_for(eta: f64) -> Self {
        Self::new(eta + 0.5, eta + 4.5, 513).expect("valid default grid")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }
}

/// Largest residual `|sum_j c_j(t) D_t^j u|` over interior grid points, with
/// central second-order differences, divided by `max |u|` when that is nonzero.
pub fn annihilator_residual(
    op: &DifferentialOperator,
    grid: &UniformGrid,
    u: &[f64],
    eta: f64,
) -> Result<f64> {
    if grid.len() < 9 {
        return Err(Error::InvalidArgument(format!(
            "need at least 9 grid points, got {}",
            grid.len()
        )));
    }
    crate::error::check_dim(grid.len(), u.len())?;
    if op.order() > 2 {
        return Err(Error::InvalidArgument(format!(
            "stencils cover order <= 2, operator has order {}",
            op.order()
        )));
    }
    let h = grid.step();
    for i in 0..grid.len() {
        let t = grid.point(i);
        if (t - eta).abs() < 10.0 * h {
            return Err(Error::PoleProximity {
                t,
                eta,
                distance: (t - eta).abs(),
            });
        }
    }
    let mut worst = 0.0f64;
    for i in 1..grid.len() - 1 {
        let d = [
            u[i],
            (u[i + 1] - u[i - 1]) / (2.0 * h),
            (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h),
        ];
        worst = worst.max(op.apply(grid.point(i), &d).abs());
    }
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// A candidate Gauss-Manin system: an operator, the number of copies of
/// `D/opD` in the sum, and the label the system is known by.
#[derive(Debug, Clone, PartialEq)]
pub struct GMSystemDescriptor {
    pub operator: DifferentialOperator,
    pub multiplicity: u32,
    pub label: String,
}

impl GMSystemDescriptor {
    /// `D/SD` for `x^k`, doubled for odd `k`.
    pub fn x_power(k: u32, t: f64) -> Self {
        GMSystemDescriptor {
            operator: DifferentialOperator::x_power_printed(k, t),
            multiplicity: if k % 2 == 0 { 1 } else { 2 },
            label: "D/SD".to_string(),
        }
    }

    /// Picks the first candidate whose residual on `u` is at most `tol`.
    pub fn validated(
        label: &str,
        candidates: &[DifferentialOperator],
        grid: &UniformGrid,
        u: &[f64],
        eta: f64,
        tol: f64,
    ) -> Result<Option<Self>> {
        for op in candidates {
            if annihilator_residual(op, grid, u, eta)? <= tol {
                return Ok(Some(GMSystemDescriptor {
                    operator: op.clone(),
                    multiplicity: 1,
                    label: label.to_string(),
                }));
            }
        }
        Ok(None)
    }
}
