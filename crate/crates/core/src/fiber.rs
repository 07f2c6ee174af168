//! Real Milnor fibrations: choice of Milnor data, fiber sampling, degree-zero
//! component counts, and the top homology rank of the positive Milnor fiber
//! read off a morsification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cluster;
use crate::error::{Error, Result};
use crate::germ::PolynomialGerm;
use crate::morse::{
    self, critical_locations, find_critical_points, MorseOptions, Morsification, SearchBox,
};

/// Which half of the Milnor fibration, `f^{-1}((0, eps])` or `f^{-1}([-eps, 0))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FiberSign {
    Positive,
    Negative,
}

impl FiberSign {
    pub fn factor(self) -> f64 {
        match self {
            FiberSign::Positive => 1.0,
            FiberSign::Negative => -1.0,
        }
    }
}

/// Ball radius `delta`, interval length `epsilon`, regular value `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilnorData {
    pub delta: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub sign: FiberSign,
}

impl MilnorData {
    pub fn new(delta: f64, epsilon: f64, eta: f64, sign: FiberSign) -> Result<Self> {
        if !(delta > 0.0 && epsilon > 0.0 && eta > 0.0 && eta <= epsilon) {
            return Err(Error::InvalidArgument(format!(
                "need delta > 0 and 0 < eta <= epsilon, got ({}, {}, {})",
                delta, epsilon, eta
            )));
        }
        Ok(MilnorData {
            delta,
            epsilon,
            eta,
            sign,
        })
    }

    /// The level `sign * eta` the fiber lives on.
    pub fn level(&self) -> f64 {
        self.sign.factor() * self.eta
    }
}

/// Knobs for [`choose_milnor_data`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilnorSearch {
    /// Largest ball radius tried; halved until the origin is the only critical point.
    pub max_delta: f64,
    pub halvings: u32,
    /// `epsilon = min(c * delta^2, 1)` before the transversality check.
    pub epsilon_factor: f64,
    pub grid_per_axis: usize,
    pub boundary_samples: usize,
    pub seed: u64,
}

impl Default for MilnorSearch {
    fn default() -> Self {
        MilnorSearch {
            max_delta: 1.0,
            halvings: 12,
            epsilon_factor: 0.25,
            grid_per_axis: 16,
            boundary_samples: 4000,
            seed: DEFAULT_SEED,
        }
    }
}

/// Root seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5EED_2024_0001;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn grid_for(m: usize, requested: usize) -> usize {
    // keep the seed count bounded in higher dimensions
    match m {
        1 | 2 => requested,
        3 => requested.min(12),
        _ => 8,
    }
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

fn random_direction<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Heuristic Milnor data: the largest `delta` in `{max_delta, max_delta/2, ...}`
/// such that the origin is the only critical point of `f` in `B_delta`, then
/// `epsilon = min(c delta^2, 1)`, shrunk until sampled boundary points of the
/// fibers over `(0, epsilon]` are transverse to the sphere, and `eta = epsilon/2`.
pub fn choose_milnor_data(
    f: &PolynomialGerm,
    sign: FiberSign,
    search: &MilnorSearch,
) -> Result<MilnorData> {
    let m = f.n_vars();
    let opts = MorseOptions::default();
    let grid = grid_for(m, search.grid_per_axis);
    let mut delta = search.max_delta;
    let mut last_offender = None;
    let mut chosen = None;
    for _ in 0..=search.halvings {
        let region = SearchBox::cube(m, -delta, delta)?;
        let locs = critical_locations(f, &region, grid, &opts)?;
        // degenerate singularities make Newton land in a small cloud around 0
        let offender = locs
            .into_iter()
            .find(|p| norm(p) <= delta && norm(p) > 1e-2 * delta);
        match offender {
            None => {
                chosen = Some(delta);
                break;
            }
            Some(p) => last_offender = Some(p),
        }
        delta *= 0.5;
    }
    let delta = match chosen {
        Some(d) => d,
        None => {
            return Err(Error::NotIsolated {
                location: last_offender.unwrap_or_default(),
            })
        }
    };

    let mut epsilon = (search.epsilon_factor * delta * delta).min(1.0);
    let boundary: Vec<Vec<f64>> = {
        let mut rng = shard_rng(search.seed, 0);
        (0..search.boundary_samples)
            .map(|_| {
                random_direction(&mut rng, m)
                    .into_iter()
                    .map(|x| x * delta)
                    .collect()
            })
            .collect()
    };
    for _ in 0..20 {
        let transverse = boundary.iter().all(|p| {
            let v = sign.factor() * f.value_unchecked(p);
            if !(v > 0.0 && v <= epsilon) {
                return true;
            }
            let g = f.gradient_unchecked(p);
            let gn = norm(&g);
            if gn == 0.0 {
                return false;
            }
            // in one variable the sphere is two points and never meets a fiber
            // transversally; the fiber must simply avoid it
            if m == 1 {
                return false;
            }
            let cos = g.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() / (gn * delta);
            cos.abs() < 0.999
        });
        if transverse {
            return MilnorData::new(delta, epsilon, epsilon / 2.0, sign);
        }
        epsilon *= 0.5;
    }
    Err(Error::Domain(format!(
        "no transverse fibration found in B_{} (epsilon shrunk to {})",
        delta, epsilon
    )))
}

/// Points on `{f = sign * eta} ∩ B_delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSample {
    pub points: Vec<Vec<f64>>,
    pub eta: f64,
    pub level: f64,
    pub delta: f64,
    pub tolerance: f64,
}

impl FiberSample {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// CSV with header `x1..xm`.
    pub fn to_csv(&self, m: usize) -> String {
        let mut out: String = (1..=m)
            .map(|i| format!("x{}", i))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| morse::fmt_num(*v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

const PROJECTION_TOL: f64 = 1e-10;
const SHARDS: u64 = 16;

fn project_to_level(
    f: &PolynomialGerm,
    mut p: Vec<f64>,
    level: f64,
    delta: f64,
) -> Option<Vec<f64>> {
    for _ in 0..60 {
        let r = f.value_unchecked(&p) - level;
        if r.abs() <= 0.1 * PROJECTION_TOL {
            break;
        }
        let g = f.gradient_unchecked(&p);
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 == 0.0 || !g2.is_finite() {
            return None;
        }
        for (x, gi) in p.iter_mut().zip(&g) {
            *x -= r * gi / g2;
        }
    }
    let ok = (f.value_unchecked(&p) - level).abs() <= PROJECTION_TOL && norm(&p) <= delta;
    ok.then_some(p)
}

/// Rejection-samples `B_delta` uniformly, keeps draws with
/// `|f - sign eta| < 0.1 eta`, and Newton-projects them along `grad f` onto the
/// level set. Projections leaving the ball are discarded. Draws are split
/// into fixed shards with independent ChaCha streams, so the output depends
/// only on `seed`.
pub fn sample_fiber(
    f: &PolynomialGerm,
    md: &MilnorData,
    n_points: usize,
    seed: u64,
) -> FiberSample {
    let m = f.n_vars();
    let level = md.level();
    let window = 0.1 * md.eta;
    let per_shard = n_points.div_ceil(SHARDS as usize);
    let max_draws = per_shard.max(1) * 2000;
    let shards: Vec<Vec<Vec<f64>>> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = shard_rng(seed, shard + 1);
            let mut pts = Vec::with_capacity(per_shard);
            let mut draws = 0;
            while pts.len() < per_shard && draws < max_draws {
                draws += 1;
                let dir = random_direction(&mut rng, m);
                let u: f64 = rng.random();
                let r = md.delta * u.powf(1.0 / m as f64);
                let p: Vec<f64> = dir.into_iter().map(|x| x * r).collect();
                if (f.value_unchecked(&p) - level).abs() >= window {
                    continue;
                }
                if let Some(q) = project_to_level(f, p, level, md.delta) {
                    pts.push(q);
                }
            }
            pts
        })
        .collect();
    let mut points: Vec<Vec<f64>> = shards.into_iter().flatten().collect();
    points.truncate(n_points);
    FiberSample {
        points,
        eta: md.eta,
        level,
        delta: md.delta,
        tolerance: PROJECTION_TOL,
    }
}

/// Components of the `link_radius`-neighbor graph of the sample; 0 for an
/// empty fiber.
pub fn count_components(fs: &FiberSample, link_radius: f64) -> usize {
    cluster::count_components(&fs.points, link_radius)
}

/// Three times the median nearest-neighbor distance, floored at
/// `1e-6 * delta` so that fibers of dimension zero (whose samples collapse
/// onto a few points) still get a positive radius.
pub fn default_link_radius(fs: &FiberSample) -> f64 {
    let mut nn = cluster::nearest_neighbor_distances(&fs.points);
    let med = cluster::median(&mut nn)
        .filter(|v| v.is_finite())
        .unwrap_or(0.0);
    (3.0 * med).max(1e-6 * fs.delta)
}

/// Component count together with the radius range over which it is stable.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub components: usize,
    pub link_radius: f64,
    /// `(radius, count)` checkpoints across `[link_radius, 3 link_radius]`.
    pub plateau: Vec<(f64, usize)>,
    pub stable: bool,
    pub n_points: usize,
}

/// Counts at `r, sqrt(3) r, 3 r`.
pub fn plateau_counts(fs: &FiberSample, r: f64) -> Vec<(f64, usize)> {
    [1.0, 3f64.sqrt(), 3.0]
        .iter()
        .map(|k| (k * r, count_components(fs, k * r)))
        .collect()
}

/// Starts at [`default_link_radius`] and doubles the radius until the count
/// is constant over a 3x range (or the radius exceeds the ball diameter).
pub fn components_with_plateau(fs: &FiberSample) -> ComponentReport {
    let n_points = fs.len();
    if fs.is_empty() {
        return ComponentReport {
            components: 0,
            link_radius: 0.0,
            plateau: Vec::new(),
            stable: true,
            n_points,
        };
    }
    let mut r = default_link_radius(fs);
    loop {
        let plateau = plateau_counts(fs, r);
        let stable = plateau.windows(2).all(|w| w[0].1 == w[1].1);
        if stable || r > 2.0 * fs.delta {
            return ComponentReport {
                components: plateau[0].1,
                link_radius: r,
                plateau,
                stable,
                n_points,
            };
        }
        r *= 2.0;
    }
}

/// Number of index-zero critical points of `f_s` in `region`, which is the
/// rank of the top homology of the positive Milnor fiber of the base germ.
pub fn top_homology_rank(
    morsification: &Morsification,
    s: f64,
    region: &SearchBox,
    grid_per_axis: usize,
    opts: &MorseOptions,
) -> Result<usize> {
    let fs = morsification.realize(s)?;
    let pts = find_critical_points(&fs, region, grid_per_axis, opts)?;
    let (_, zeros) = morse::morse_vectors(&pts);
    Ok(zeros.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BettiDatum {
    pub degree: usize,
    pub rank: usize,
}

/// Betti data of the positive Milnor fiber of a nondegenerate quadratic form
/// in `m` variables with `lambda` negative squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticBetti {
    pub m: usize,
    pub lambda: usize,
    /// The non-constant generator: degree `(m - 1) - lambda`, rank 1.
    pub datum: BettiDatum,
    /// Set when `lambda = m`: the positive fiber is empty and no Betti table
    /// is assigned (`datum` is then rank 0 at degree 0).
    pub empty_positive_fiber: bool,
}

impl QuadraticBetti {
    /// Betti numbers `b_0..b_{m-1}` of the fiber, i.e. the coefficients of
    /// `1 + u^{(m-1)-lambda}`; all zero for the empty fiber.
    pub fn betti_numbers(&self) -> Vec<usize> {
        let mut b = vec![0; self.m.max(1)];
        if !self.empty_positive_fiber {
            b[0] += 1;
            b[self.datum.degree] += self.datum.rank;
        }
        b
    }
}

pub fn betti_quadratic(m: usize, lambda: usize) -> Result<QuadraticBetti> {
    if m == 0 || lambda > m {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= lambda <= m with m >= 1, got m = {}, lambda = {}",
            m, lambda
        )));
    }
    if lambda == m {
        return Ok(QuadraticBetti {
            m,
            lambda,
            datum: BettiDatum { degree: 0, rank: 0 },
            empty_positive_fiber: true,
        });
    }
    Ok(QuadraticBetti {
        m,
        lambda,
        datum: BettiDatum {
            degree: (m - 1) - lambda,
            rank: 1,
        },
        empty_positive_fiber: false,
    })
}
