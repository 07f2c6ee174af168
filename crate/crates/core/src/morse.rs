//! Morsifications `f_s`, critical point search and Morse indices.
//!
//! Critical points are located by dense grid seeding followed by Newton
//! iteration on `grad f_s = 0` with the exact Hessian as Jacobian. Seeds are
//! refined independently (in parallel) and merged sequentially afterwards.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::germ::{rational_from_f64, PolynomialGerm};
use crate::linalg::SymMatrix;

/// Tolerances of the critical point solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub dedup_radius: f64,
    /// Relative threshold below which a Hessian eigenvalue counts as zero.
    pub degeneracy_tol: f64,
}

impl Default for MorseOptions {
    fn default() -> Self {
        MorseOptions {
            grad_tol: 1e-10,
            max_iter: 50,
            dedup_radius: 1e-6,
            degeneracy_tol: 1e-8,
        }
    }
}

/// The family `f_s = f + s * sum_i q_i x_i^2 + s * sum_i l_i x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Morsification {
    base: PolynomialGerm,
    quadratic_coeffs: Vec<f64>,
    linear_coeffs: Vec<f64>,
}

impl Morsification {
    pub fn new(base: PolynomialGerm, quadratic_coeffs: Vec<f64>) -> Result<Self> {
        let m = base.n_vars();
        Self::with_linear(base, quadratic_coeffs, vec![0.0; m])
    }

    pub fn with_linear(
        base: PolynomialGerm,
        quadratic_coeffs: Vec<f64>,
        linear_coeffs: Vec<f64>,
    ) -> Result<Self> {
        check_dim(base.n_vars(), quadratic_coeffs.len())?;
        check_dim(base.n_vars(), linear_coeffs.len())?;
        if quadratic_coeffs
            .iter()
            .chain(&linear_coeffs)
            .any(|c| !c.is_finite())
        {
            return Err(Error::InvalidArgument(
                "morsification coefficients must be finite".into(),
            ));
        }
        Ok(Morsification {
            base,
            quadratic_coeffs,
            linear_coeffs,
        })
    }

    /// `f + s * sum x_i^2`, the scalar family.
    pub fn scalar(base: PolynomialGerm) -> Self {
        let m = base.n_vars();
        Self::new(base, vec![1.0; m]).expect("lengths agree")
    }

    pub fn base(&self) -> &PolynomialGerm {
        &self.base
    }

    pub fn quadratic_coeffs(&self) -> &[f64] {
        &self.quadratic_coeffs
    }

    pub fn linear_coeffs(&self) -> &[f64] {
        &self.linear_coeffs
    }

    pub fn n_vars(&self) -> usize {
        self.base.n_vars()
    }

    /// The germ `f_s`. Floating coefficients are converted exactly, so
    /// `realize(0.0)` is structurally equal to the base germ.
    pub fn realize(&self, s: f64) -> Result<PolynomialGerm> {
        let m = self.n_vars();
        let s_q = rational_from_f64(s)?;
        let mut terms = Vec::new();
        for i in 0..m {
            let q = rational_from_f64(self.quadratic_coeffs[i])?;
            let l = rational_from_f64(self.linear_coeffs[i])?;
            let mut e2 = vec![0; m];
            e2[i] = 2;
            terms.push((e2, &s_q * q));
            let mut e1 = vec![0; m];
            e1[i] = 1;
            terms.push((e1, &s_q * l));
        }
        let perturbation = PolynomialGerm::new(m, terms)?;
        self.base.add(&perturbation)
    }
}

/// Axis-aligned search region.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() || lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidArgument(
                "box must be nonempty with lower < upper".into(),
            ));
        }
        Ok(SearchBox { lower, upper })
    }

    /// `[lo, hi]^m`.
    pub fn cube(m: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; m], vec![hi; m])
    }

    /// `[-2 delta, 2 delta]^m`, the default region around a Milnor ball.
    pub fn around_ball(m: usize, delta: f64) -> Result<Self> {
        Self::cube(m, -2.0 * delta, 2.0 * delta)
    }

    /// Parses `lo:hi` (a cube) or `lo:hi,lo:hi,...` (one pair per axis).
    pub fn parse(text: &str, m: usize) -> Result<Self> {
        let bad = |message: String| Error::Parse { line: 0, message };
        let axes = text
            .split(',')
            .map(|a| {
                let (lo, hi) = a
                    .split_once(':')
                    .ok_or_else(|| bad(format!("box axis {:?} is not lo:hi", a)))?;
                let num = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad box bound {:?}", v)))
                };
                Ok((num(lo)?, num(hi)?))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let axes = match axes.len() {
            1 => vec![axes[0]; m],
            n if n == m => axes,
            n => return Err(bad(format!("box has {} axes, germ has {} variables", n, m))),
        };
        Self::new(
            axes.iter().map(|a| a.0).collect(),
            axes.iter().map(|a| a.1).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= l - slack && *v <= u + slack)
    }

    /// Cell centers of a `grid^m` lattice, plus the origin when it lies in
    /// the box.
    fn seeds(&self, grid: usize) -> Vec<Vec<f64>> {
        let m = self.dim();
        let total = grid.pow(m as u32);
        let origin = vec![0.0; m];
        let mut seeds: Vec<Vec<f64>> = (0..total)
            .map(|mut idx| {
                (0..m)
                    .map(|d| {
                        let k = idx % grid;
                        idx /= grid;
                        let h = (self.upper[d] - self.lower[d]) / grid as f64;
                        self.lower[d] + (k as f64 + 0.5) * h
                    })
                    .collect()
            })
            .collect();
        if self.contains(&origin, 0.0) {
            seeds.push(origin);
        }
        seeds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub value: f64,
    /// Ascending.
    pub hessian_eigenvalues: Vec<f64>,
    pub morse_index: usize,
}

/// Sorted multiset of Morse indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MorseVector {
    indices: Vec<usize>,
}

impl MorseVector {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        MorseVector { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Entry count `|v|`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn count_zero(&self) -> usize {
        self.indices.iter().filter(|&&i| i == 0).count()
    }
}

impl fmt::Display for MorseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Levenberg-Marquardt step `(H^2 + mu I)^{-1} H g` for a singular Hessian;
/// it moves along the range of `H` only, so seeds near a critical manifold
/// land on it instead of being lost.
fn damped_step(h: &SymMatrix, g: &[f64]) -> Vec<f64> {
    let n = h.dim();
    let mut a = SymMatrix::zeros(n);
    let mut frob = 0.0;
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|k| h.get(i, k) * h.get(k, j)).sum();
            a.set(i, j, v);
        }
        frob += (0..n).map(|k| h.get(i, k).powi(2)).sum::<f64>();
    }
    let mu = 1e-10 * frob.max(1e-300);
    for i in 0..n {
        a.set(i, i, a.get(i, i) + mu);
    }
    let rhs: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| h.get(i, k) * g[k]).sum())
        .collect();
    a.solve(&rhs).unwrap_or_else(|| vec![0.0; n])
}

/// Newton on `grad f = 0` from one seed. Iterates until the step stalls or
/// `max_iter` is reached, then accepts the point if `|grad| <= grad_tol`.
/// Polishing past the first acceptable iterate lets degenerate critical
/// points (where Newton is only linearly convergent) drift onto the
/// singularity, where the Hessian test then sees them.
fn newton_from(f: &PolynomialGerm, seed: &[f64], opts: &MorseOptions) -> Option<(Vec<f64>, f64)> {
    let mut x = seed.to_vec();
    for _ in 0..opts.max_iter {
        let g = f.gradient_unchecked(&x);
        if g.iter().all(|v| *v == 0.0) {
            break;
        }
        let h = f.hessian_unchecked(&x);
        let step = match h.solve(&g) {
            Some(step) => step,
            None => damped_step(&h, &g),
        };
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi -= si;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if norm(&step) <= 1e-14 * (1.0 + norm(&x)) {
            break;
        }
    }
    let gn = norm(&f.gradient_unchecked(&x));
    (gn <= opts.grad_tol).then_some((x, gn))
}

/// Converged Newton limits inside the box, merged within `dedup_radius`
/// (keeping the representative with the smaller gradient) and sorted
/// lexicographically. No Morse check is applied.
pub fn critical_locations(
    f: &PolynomialGerm,
    region: &SearchBox,
    grid_per_axis: usize,
    opts: &MorseOptions,
) -> Result<Vec<Vec<f64>>> {
    check_dim(f.n_vars(), region.dim())?;
    if grid_per_axis < 8 {
        return Err(Error::InvalidArgument(format!(
            "grid_per_axis must be at least 8, got {}",
            grid_per_axis
        )));
    }
    let seeds = region.seeds(grid_per_axis);
    let mut found: Vec<(Vec<f64>, f64)> = seeds
        .par_iter()
        .filter_map(|seed| newton_from(f, seed, opts))
        .filter(|(x, _)| region.contains(x, 1e-12))
        .collect();
    found.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)));
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for (x, _) in found {
        if kept.iter().all(|k| dist(k, &x) > opts.dedup_radius) {
            kept.push(x);
        }
    }
    kept.sort_by(|a, b| lex_cmp(a, b));
    Ok(kept)
}

/// All critical points of `f` in `region`, each checked to be Morse.
pub fn find_critical_points(
    f: &PolynomialGerm,
    region: &SearchBox,
    grid_per_axis: usize,
    opts: &MorseOptions,
) -> Result<Vec<CriticalPoint>> {
    critical_locations(f, region, grid_per_axis, opts)?
        .into_iter()
        .map(|location| {
            let h = f.hessian_unchecked(&location);
            let eig = h.eigenvalues();
            let morse_index = index_from_eigenvalues(&eig, opts.degeneracy_tol).map_err(|_| {
                Error::DegenerateCritical {
                    location: location.clone(),
                    eigenvalues: eig.clone(),
                }
            })?;
            Ok(CriticalPoint {
                value: f.value_unchecked(&location),
                location,
                hessian_eigenvalues: eig,
                morse_index,
            })
        })
        .collect()
}

fn index_from_eigenvalues(eig: &[f64], degeneracy_tol: f64) -> Result<usize> {
    let scale = eig.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = degeneracy_tol * scale;
    if eig.iter().any(|v| v.abs() <= tol) {
        return Err(Error::DegenerateCritical {
            location: Vec::new(),
            eigenvalues: eig.to_vec(),
        });
    }
    Ok(eig.iter().filter(|&&v| v < -tol).count())
}

/// Number of negative eigenvalues of a symmetric matrix; fails when some
/// eigenvalue is within `degeneracy_tol * max(1, max |eigenvalue|)` of zero.
pub fn morse_index(h: &SymMatrix, degeneracy_tol: f64) -> Result<usize> {
    index_from_eigenvalues(&h.eigenvalues(), degeneracy_tol)
}

/// `(lambda_s, lambda_{0,s})`: all indices, and the index-zero sub-multiset.
pub fn morse_vectors(points: &[CriticalPoint]) -> (MorseVector, MorseVector) {
    let all = MorseVector::new(points.iter().map(|p| p.morse_index).collect());
    let zeros = MorseVector::new(all.indices().iter().copied().filter(|&i| i == 0).collect());
    (all, zeros)
}

/// CSV with columns `x1..xm,value,index,eig1..eigm`.
pub fn critical_points_csv(points: &[CriticalPoint], m: usize) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = (1..=m).map(|i| format!("x{}", i)).collect();
    header.push("value".into());
    header.push("index".into());
    header.extend((1..=m).map(|i| format!("eig{}", i)));
    out.push_str(&header.join(","));
    out.push('\n');
    for p in points {
        let mut row: Vec<String> = p.location.iter().map(|v| fmt_num(*v)).collect();
        row.push(fmt_num(p.value));
        row.push(p.morse_index.to_string());
        row.extend(p.hessian_eigenvalues.iter().map(|v| fmt_num(*v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Fixed-precision number formatting shared by all CSV writers; rounds away
/// last-ulp noise and normalizes `-0`.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{:.12e}", v);
    if v == 0.0 || s.starts_with("-0.000000000000e") {
        "0.000000000000e0".to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::standard::*;

    fn opts() -> MorseOptions {
        MorseOptions::default()
    }

    #[test]
    fn realize_examples() {
        let m = Morsification::new(x4_minus_y2(), vec![2.0, 0.0]).unwrap();
        let expected =
            PolynomialGerm::from_integer_terms(2, &[(1, &[4, 0]), (-1, &[0, 2]), (2, &[2, 0])])
                .unwrap();
        assert_eq!(m.realize(1.0).unwrap(), expected);
        assert_eq!(m.realize(0.0).unwrap(), x4_minus_y2());

        let lin = Morsification::with_linear(power(2), vec![0.0], vec![1.0]).unwrap();
        let expected = PolynomialGerm::from_integer_terms(1, &[(1, &[2]), (1, &[1])]).unwrap();
        assert_eq!(lin.realize(1.0).unwrap(), expected);
    }

    #[test]
    fn morsification_rejects_bad_lengths() {
        assert!(Morsification::new(x4_minus_y2(), vec![1.0]).is_err());
        assert!(Morsification::with_linear(power(2), vec![1.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn positive_s_gives_single_saddle() {
        let f = Morsification::new(x4_minus_y2(), vec![2.0, 0.0])
            .unwrap()
            .realize(1.0)
            .unwrap();
        let pts =
            find_critical_points(&f, &SearchBox::cube(2, -2.0, 2.0).unwrap(), 32, &opts()).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(norm(&pts[0].location) < 1e-12);
        assert_eq!(pts[0].morse_index, 1);
    }

    #[test]
    fn negative_s_gives_three_points() {
        let f = Morsification::new(x4_minus_y2(), vec![2.0, 0.0])
            .unwrap()
            .realize(-1.0)
            .unwrap();
        let pts =
            find_critical_points(&f, &SearchBox::cube(2, -2.0, 2.0).unwrap(), 32, &opts()).unwrap();
        // 4x^3 - 4x = 0, -2y = 0; Hessian diag(12x^2 - 4, -2)
        assert_eq!(pts.len(), 3);
        assert!(dist(&pts[0].location, &[-1.0, 0.0]) < 1e-12);
        assert!(dist(&pts[1].location, &[0.0, 0.0]) < 1e-12);
        assert!(dist(&pts[2].location, &[1.0, 0.0]) < 1e-12);
        let idx: Vec<usize> = pts.iter().map(|p| p.morse_index).collect();
        assert_eq!(idx, vec![1, 2, 1]);
        assert!((pts[0].value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_perturbation_minimum() {
        let f = Morsification::with_linear(power(2), vec![0.0], vec![1.0])
            .unwrap()
            .realize(1.0)
            .unwrap();
        let pts =
            find_critical_points(&f, &SearchBox::cube(1, -2.0, 2.0).unwrap(), 32, &opts()).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].location[0] + 0.5).abs() < 1e-12);
        assert_eq!(pts[0].morse_index, 0);
    }

    #[test]
    fn degenerate_points_are_rejected() {
        let err = find_critical_points(
            &power(3),
            &SearchBox::cube(1, -1.0, 1.0).unwrap(),
            16,
            &opts(),
        );
        assert!(matches!(err, Err(Error::DegenerateCritical { .. })));
        let err = find_critical_points(
            &x4_minus_y2(),
            &SearchBox::cube(2, -1.0, 1.0).unwrap(),
            8,
            &opts(),
        );
        assert!(matches!(err, Err(Error::DegenerateCritical { .. })));
    }

    #[test]
    fn grid_must_be_fine_enough() {
        let r = find_critical_points(
            &power(2),
            &SearchBox::cube(1, -1.0, 1.0).unwrap(),
            4,
            &opts(),
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
        assert!(SearchBox::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn morse_index_examples() {
        assert_eq!(
            morse_index(&SymMatrix::from_diagonal(&[2.0, 2.0, 2.0]), 1e-8).unwrap(),
            0
        );
        assert_eq!(
            morse_index(&SymMatrix::from_diagonal(&[2.0, 2.0, -2.0]), 1e-8).unwrap(),
            1
        );
        assert_eq!(
            morse_index(&SymMatrix::from_diagonal(&[4.0, -2.0]), 1e-8).unwrap(),
            1
        );
        assert!(morse_index(&SymMatrix::from_diagonal(&[4.0, 0.0]), 1e-8).is_err());
        assert!(morse_index(&SymMatrix::from_diagonal(&[1e3, 1e-3]), 1e-8).is_ok());
        assert!(morse_index(&SymMatrix::from_diagonal(&[1e9, 1.0]), 1e-8).is_err());
    }

    fn cp(index: usize) -> CriticalPoint {
        CriticalPoint {
            location: vec![0.0],
            value: 0.0,
            hessian_eigenvalues: vec![1.0],
            morse_index: index,
        }
    }

    #[test]
    fn morse_vector_examples() {
        let (all, zero) = morse_vectors(&[cp(1)]);
        assert_eq!(all.indices(), &[1]);
        assert!(zero.is_empty());
        let (all, zero) = morse_vectors(&[cp(0)]);
        assert_eq!((all.indices(), zero.indices()), (&[0][..], &[0][..]));
        let (all, zero) = morse_vectors(&[cp(2), cp(1), cp(1)]);
        assert_eq!(all.indices(), &[1, 1, 2]);
        assert!(zero.is_empty());
        assert_eq!(all.to_string(), "(1,1,2)");
    }

    #[test]
    fn csv_layout() {
        let f = Morsification::new(x4_minus_y2(), vec![2.0, 0.0])
            .unwrap()
            .realize(1.0)
            .unwrap();
        let pts =
            find_critical_points(&f, &SearchBox::cube(2, -2.0, 2.0).unwrap(), 16, &opts()).unwrap();
        let csv = critical_points_csv(&pts, 2);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x1,x2,value,index,eig1,eig2");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].contains(",1,"));
    }
}
