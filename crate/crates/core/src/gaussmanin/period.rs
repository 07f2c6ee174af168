use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::operator::UniformGrid;
use super::series::sphere_area;

const SHARDS: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }
}

/// Mean of `g` over the radius-`radius` sphere in `R^dim`, from `n`
/// uniform draws (normalized Gaussians). Returns the mean and its standard
/// error. Shard `i` draws from ChaCha stream `i + 1` of `seed`, and shards are
/// merged in order, so the result does not depend on the thread count.
pub fn sphere_mean<G>(dim: usize, radius: f64, n: usize, seed: u64, g: G) -> Result<(f64, f64)>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    if dim == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "sphere sampling needs dim >= 1 and at least one sample".into(),
        ));
    }
    let per = n as u64 / SHARDS;
    let extra = n as u64 % SHARDS;
    let parts: Vec<Moments> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let count = per + u64::from(shard < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard + 1);
            let mut p = vec![0.0; dim];
            let mut acc = Moments::default();
            for _ in 0..count {
                let norm = loop {
                    for v in p.iter_mut() {
                        *v = StandardNormal.sample(&mut rng);
                    }
                    let s = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if s > 0.0 {
                        break s;
                    }
                };
                for v in p.iter_mut() {
                    *v *= radius / norm;
                }
                acc.push(g(&p));
            }
            acc
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let var = if total.n > 1.0 {
        total.m2 / (total.n - 1.0)
    } else {
        0.0
    };
    Ok((total.mean, (var / total.n).sqrt()))
}

/// Monte Carlo estimate of the period of `dx / (t - f)` over the vanishing
/// cycle of `f = x_1^2 + ... + x_(m-lambda)^2 - ... - x_m^2` at level `eta`:
/// the radius-`sqrt(eta)` sphere in the positive coordinate subspace.
pub fn quadratic_period(
    m: usize,
    lambda: usize,
    eta: f64,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<PeriodEstimate> {
    if lambda >= m {
        return Err(Error::InvalidArgument(format!(
            "lambda = {} must be below m = {}",
            lambda, m
        )));
    }
    if !(eta > 0.0 && t > eta) {
        return Err(Error::Domain(format!(
            "need t > eta > 0, got t = {}, eta = {}",
            t, eta
        )));
    }
    let dim = m - lambda;
    let (mean, se) = sphere_mean(dim, eta.sqrt(), n_samples, seed, |p| {
        // the negative coordinates vanish on the cycle
        let f: f64 = p.iter().map(|v| v * v).sum();
        1.0 / (t - f)
    })?;
    let area = sphere_area(dim as u32 - 1, eta.sqrt());
    let value = mean * area;
    // the integrand is nearly constant on the cycle; keep an honest floor for
    // the rounding in |p|^2 and the area
    let rounding = 8.0 * f64::EPSILON * value.abs();
    Ok(PeriodEstimate {
        value,
        std_error: (se * area).hypot(rounding),
        n_samples,
    })
}

/// Period samples on a t-grid, all drawn with the same seed.
pub fn period_on_grid(
    m: usize,
    lambda: usize,
    eta: f64,
    grid: &UniformGrid,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<PeriodEstimate>> {
    grid.points()
        .into_iter()
        .map(|t| quadratic_period(m, lambda, eta, t, n_samples, seed))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaRow {
    pub eta: f64,
    pub period: f64,
    pub stderr: f64,
}

/// Fitted exponent `alpha` in `period ~ eta^alpha` at a fixed gap `t - eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaScaling {
    pub m: usize,
    pub lambda: usize,
    pub gap: f64,
    pub rows: Vec<EtaRow>,
    pub alpha: f64,
    pub ci_half_width: f64,
    /// `(n - lambda - 1)/2` with `n = m - 1`.
    pub printed_exponent: f64,
    /// `(n - lambda)/2`, the scaling of the sphere's area.
    pub geometric_exponent: f64,
}

impl EtaScaling {
    pub fn ci_width(&self) -> f64 {
        2.0 * self.ci_half_width
    }

    pub fn distance_to_printed(&self) -> f64 {
        (self.alpha - self.printed_exponent).abs()
    }

    pub fn distance_to_geometric(&self) -> f64 {
        (self.alpha - self.geometric_exponent).abs()
    }

    /// `eta,period,stderr` rows followed by one summary line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eta,period,stderr\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{}\n",
                crate::morse::fmt_num(r.eta),
                crate::morse::fmt_num(r.period),
                crate::morse::fmt_num(r.stderr)
            ));
        }
        s.push_str(&format!(
            "# alpha={} ci95=[{},{}] printed={} dist_printed={} geometric={} dist_geometric={}\n",
            crate::morse::fmt_num(self.alpha),
            crate::morse::fmt_num(self.alpha - self.ci_half_width),
            crate::morse::fmt_num(self.alpha + self.ci_half_width),
            self.printed_exponent,
            crate::morse::fmt_num(self.distance_to_printed()),
            self.geometric_exponent,
            crate::morse::fmt_num(self.distance_to_geometric()),
        ));
        s
    }
}

/// Two-sided 97.5% Student t quantiles for 1..=30 degrees of freedom.
const T975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052, 2.048, 2.045, 2.042,
];

fn t_quantile(df: usize) -> f64 {
    T975.get(df.wrapping_sub(1)).copied().unwrap_or(1.960)
}

/// Least-squares slope of `ln period` against `ln eta`. The interval
/// combines the fit residuals with the Monte Carlo error of each point.
pub fn eta_scaling(
    m: usize,
    lambda: usize,
    etas: &[f64],
    gap: f64,
    n_samples: usize,
    seed: u64,
) -> Result<EtaScaling> {
    if etas.len() < 3 {
        return Err(Error::InvalidArgument("need at least 3 eta values".into()));
    }
    if !(gap > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gap t - eta = {} must be positive",
            gap
        )));
    }
    let rows = etas
        .iter()
        .map(|&eta| {
            let p = quadratic_period(m, lambda, eta, eta + gap, n_samples, seed)?;
            Ok(EtaRow {
                eta,
                period: p.value,
                stderr: p.std_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.eta.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.period.ln()).collect();
    let sy: Vec<f64> = rows.iter().map(|r| r.stderr / r.period.abs()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "eta values must not all coincide".into(),
        ));
    }
    let alpha = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum::<f64>()
        / sxx;
    let intercept = ybar - alpha * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - alpha * x).powi(2))
        .sum();
    let df = xs.len() - 2;
    let se_fit2 = ssr / df as f64 / sxx;
    let se_mc2 = xs
        .iter()
        .zip(&sy)
        .map(|(x, s)| ((x - xbar) * s).powi(2))
        .sum::<f64>()
        / (sxx * sxx);
    let dn = (m - 1 - lambda) as f64;
    Ok(EtaScaling {
        m,
        lambda,
        gap,
        rows,
        alpha,
        ci_half_width: t_quantile(df) * (se_fit2 + se_mc2).sqrt(),
        printed_exponent: (dn - 1.0) / 2.0,
        geometric_exponent: dn / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert!((merged.mean - whole.mean).abs() < 1e-15);
        assert!((merged.m2 - whole.m2).abs() < 1e-12);
    }

    #[test]
    fn period_of_two_sphere() {
        for &(t, expect) in &[(2.0, 4.0 * PI), (3.0, 2.0 * PI)] {
            let p = quadratic_period(3, 0, 1.0, t, 20_000, 1).unwrap();
            assert!((p.value - expect).abs() <= 3.0 * p.std_error, "{:?}", p);
            assert!(p.std_error > 0.0);
            assert_eq!(p.n_samples, 20_000);
        }
    }

    #[test]
    fn zero_sphere_period_is_two_points() {
        let p = quadratic_period(2, 1, 1.0, 2.0, 1000, 3).unwrap();
        assert!((p.value - 2.0).abs() <= 3.0 * p.std_error, "{:?}", p);
    }

    #[test]
    fn negative_squares_reduce_to_subspace() {
        let a = quadratic_period(4, 1, 0.7, 1.9, 5000, 11).unwrap();
        let b = quadratic_period(3, 0, 0.7, 1.9, 5000, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn period_argument_checks() {
        assert!(quadratic_period(3, 3, 1.0, 2.0, 10, 0).is_err());
        assert!(matches!(
            quadratic_period(3, 0, 1.0, 0.5, 10, 0),
            Err(Error::Domain(_))
        ));
        assert!(quadratic_period(3, 0, 1.0, 2.0, 0, 0).is_err());
    }

    #[test]
    fn sphere_mean_is_reproducible_and_unbiased() {
        let g = |p: &[f64]| p[0] * p[0];
        let a = sphere_mean(3, 1.0, 40_000, 5, g).unwrap();
        assert_eq!(a, sphere_mean(3, 1.0, 40_000, 5, g).unwrap());
        // E[x_1^2] = 1/3 on the unit 2-sphere
        assert!((a.0 - 1.0 / 3.0).abs() < 4.0 * a.1, "{:?}", a);
        assert_ne!(a, sphere_mean(3, 1.0, 40_000, 6, g).unwrap());
    }

    #[test]
    fn eta_scaling_of_two_sphere() {
        let r = eta_scaling(3, 0, &[0.25, 0.5, 1.0, 2.0], 1.0, 10_000, 7).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!((r.alpha - 1.0).abs() < 1e-6, "{:?}", r);
        assert!(r.ci_width() < 0.05);
        assert_eq!(r.printed_exponent, 0.5);
        assert_eq!(r.geometric_exponent, 1.0);
        let csv = r.to_csv();
        assert!(csv.starts_with("eta,period,stderr\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}
