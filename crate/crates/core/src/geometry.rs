//! Points, datasets, center sets and the potentials computed over them.
//!
//! Everything here is immutable after construction. The brute-force optimum
//! is an exact oracle for tiny instances and is guarded accordingly.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::LocalDensity;
use crate::error::{Error, Result};

/// Largest dataset accepted by [`brute_force_optimum`].
pub const BRUTE_FORCE_MAX_POINTS: usize = 14;

/// A finite point in `R^d`, `d >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {bad}")));
        }
        Ok(Self(coords))
    }

    /// Builds a point without validation. Callers guarantee finiteness.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Self(coords)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d.max(1)])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<f64> for Point {
    /// One-dimensional point; panics on non-finite input.
    fn from(x: f64) -> Self {
        Point::new(vec![x]).expect("finite coordinate")
    }
}

/// An ordered, nonempty collection of points sharing one dimension, with
/// optional strictly positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<Point>,
    weights: Option<Vec<f64>>,
    dim: usize,
}

impl Dataset {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyDataset)?;
        let dim = first.dim();
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }
        Ok(Self {
            points,
            weights: None,
            dim,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let points = rows
            .iter()
            .map(|r| Point::new(r.as_ref().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    /// One-dimensional dataset from scalars.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        let points = xs
            .iter()
            .map(|&x| Point::new(vec![x]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.points.len()
            || weights.iter().any(|w| !(*w > 0.0 && w.is_finite()))
        {
            return Err(Error::InvalidWeights);
        }
        self.weights = Some(weights);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false: datasets are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights
            .as_ref()
            .map_or(self.points.len() as f64, |w| w.iter().sum())
    }

    /// Dataset made of the given indices, in order, carrying weights along.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySubset);
        }
        let points = indices.iter().map(|&i| self.points[i].clone()).collect();
        let weights = self
            .weights
            .as_ref()
            .map(|w| indices.iter().map(|&i| w[i]).collect());
        Ok(Self {
            points,
            weights,
            dim: self.dim,
        })
    }

    /// Concatenates two datasets of equal dimension (weights dropped unless
    /// both carry them).
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        let weights = match (&self.weights, &other.weights) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Ok(Self {
            points,
            weights,
            dim: self.dim,
        })
    }

    /// Copy with point `i` replaced, i.e. a neighbouring dataset.
    pub fn replace_point(&self, i: usize, p: Point) -> Result<Self> {
        check_dim(self.dim, p.dim())?;
        let mut out = self.clone();
        out.points[i] = p;
        Ok(out)
    }

    pub(crate) fn from_parts_unchecked(points: Vec<Point>, weights: Option<Vec<f64>>) -> Self {
        let dim = points[0].dim();
        Self {
            points,
            weights,
            dim,
        }
    }
}

/// Where a center came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// 1-based seeding iteration.
    pub iteration: usize,
    /// Index of the reference point in the input the sampler drew from
    /// (dataset, synopsis set, or stream), when there is one.
    pub reference: Option<usize>,
    /// Peer, synopsis or minibatch identifier, when relevant.
    pub source: Option<usize>,
    /// True when the center was drawn from a non-Dirac density.
    pub noisy: bool,
}

/// Ordered centers with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    centers: Vec<Point>,
    provenance: Vec<Provenance>,
}

impl CenterSet {
    pub fn new() -> Self {
        Self {
            centers: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn with_capacity(k: usize) -> Self {
        Self {
            centers: Vec::with_capacity(k),
            provenance: Vec::with_capacity(k),
        }
    }

    /// Centers with bare provenance (iteration index only).
    pub fn from_points(points: Vec<Point>) -> Self {
        let provenance = (1..=points.len())
            .map(|iteration| Provenance {
                iteration,
                reference: None,
                source: None,
                noisy: false,
            })
            .collect();
        Self {
            centers: points,
            provenance,
        }
    }

    pub fn push(&mut self, center: Point, provenance: Provenance) {
        self.centers.push(center);
        self.provenance.push(provenance);
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// Reference indices in draw order (`None` entries skipped).
    pub fn reference_indices(&self) -> Vec<usize> {
        self.provenance.iter().filter_map(|p| p.reference).collect()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.centers
    }
}

impl Default for CenterSet {
    fn default() -> Self {
        Self::new()
    }
}

impl AsRef<[Point]> for CenterSet {
    fn as_ref(&self) -> &[Point] {
        &self.centers
    }
}

/// Caller-provided convex valuation.
pub type GeneratorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Convex scalar valuation used by the total Jensen distortion.
#[derive(Clone)]
pub enum Generator {
    /// `x -> ||x||^2`.
    SquaredNorm,
    /// `x -> sum_i exp(x_i)`.
    SumExp,
    /// Caller-provided convex function.
    Custom(GeneratorFn),
}

impl Generator {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Generator::SquaredNorm => x.iter().map(|v| v * v).sum(),
            Generator::SumExp => x.iter().map(|v| v.exp()).sum(),
            Generator::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::SquaredNorm => f.write_str("SquaredNorm"),
            Generator::SumExp => f.write_str("SumExp"),
            Generator::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Distortion between a point and a center.
#[derive(Debug, Clone, Default)]
pub enum Distortion {
    #[default]
    SquaredL2,
    TotalJensen {
        alpha: f64,
        generator: Generator,
    },
}

impl Distortion {
    pub fn total_jensen(alpha: f64, generator: Generator) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "total Jensen alpha must lie in (0,1), got {alpha}"
            )));
        }
        Ok(Distortion::TotalJensen { alpha, generator })
    }

    /// Distortion of `a` to center `c`; slices must share a dimension.
    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], c: &[f64]) -> f64 {
        match self {
            Distortion::SquaredL2 => sq_dist_unchecked(a, c),
            Distortion::TotalJensen { alpha, generator } => {
                total_jensen_unchecked(a, c, *alpha, generator).unwrap_or(f64::INFINITY)
            }
        }
    }

    pub fn eval(&self, a: &Point, c: &Point) -> Result<f64> {
        check_dim(a.dim(), c.dim())?;
        match self {
            Distortion::SquaredL2 => Ok(sq_dist_unchecked(a.coords(), c.coords())),
            Distortion::TotalJensen { alpha, generator } => {
                total_jensen_unchecked(a.coords(), c.coords(), *alpha, generator)
            }
        }
    }
}

/// Terms of the k-variates++ approximation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialBreakdown {
    pub phi_opt: f64,
    pub phi_bias: f64,
    pub phi_variance: f64,
    pub eta: f64,
    /// `(6 + 4 eta) phi_opt + 2 phi_bias + 2 phi_variance`.
    pub phi: f64,
}

impl PotentialBreakdown {
    pub fn new(phi_opt: f64, phi_bias: f64, phi_variance: f64, eta: f64) -> Self {
        let phi = (6.0 + 4.0 * eta) * phi_opt + 2.0 * phi_bias + 2.0 * phi_variance;
        Self {
            phi_opt,
            phi_bias,
            phi_variance,
            eta,
            phi,
        }
    }

    /// `(2 + ln k) * phi`.
    pub fn bound(&self, k: usize) -> f64 {
        log_factor(k) * self.phi
    }
}

/// The `(2 + ln k)` factor shared by every seeding bound.
pub fn log_factor(k: usize) -> f64 {
    2.0 + (k as f64).ln()
}

#[inline]
pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[inline]
pub(crate) fn sq_dist_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Squared Euclidean distance.
pub fn sq_dist(a: &Point, b: &Point) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(sq_dist_unchecked(a.coords(), b.coords()))
}

pub(crate) fn l1_dist_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Index of the nearest center under squared L2, ties to the lowest index.
#[inline]
pub(crate) fn nearest_unchecked(a: &[f64], centers: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist_unchecked(a, c.coords());
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Index of the nearest center and its squared distance.
pub fn nearest_center(a: &Point, centers: &[Point]) -> Result<(usize, f64)> {
    let first = centers.first().ok_or(Error::EmptyCenters)?;
    check_dim(a.dim(), first.dim())?;
    Ok(nearest_unchecked(a.coords(), centers))
}

/// Weighted potential `sum_a w_a min_c dist(a, c)`.
pub fn potential<C: AsRef<[Point]>>(data: &Dataset, centers: C, dist: &Distortion) -> Result<f64> {
    let centers = centers.as_ref();
    let first = centers.first().ok_or(Error::EmptyCenters)?;
    check_dim(data.dim(), first.dim())?;
    for c in centers {
        check_dim(data.dim(), c.dim())?;
    }
    Ok(potential_unchecked(data, centers, dist))
}

pub(crate) fn potential_unchecked(data: &Dataset, centers: &[Point], dist: &Distortion) -> f64 {
    data.points()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let d = centers
                .iter()
                .map(|c| dist.eval_unchecked(a.coords(), c.coords()))
                .fold(f64::INFINITY, f64::min);
            data.weight(i) * d
        })
        .sum()
}

/// Squared-L2 potential of the whole dataset.
pub fn kmeans_potential<C: AsRef<[Point]>>(data: &Dataset, centers: C) -> Result<f64> {
    potential(data, centers, &Distortion::SquaredL2)
}

/// Weighted arithmetic mean of the whole dataset.
pub fn centroid(data: &Dataset) -> Point {
    let all: Vec<usize> = (0..data.len()).collect();
    centroid_of(data, &all).expect("datasets are nonempty")
}

/// Weighted arithmetic mean of the given indices.
pub fn centroid_of(data: &Dataset, indices: &[usize]) -> Result<Point> {
    if indices.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut acc = vec![0.0; data.dim()];
    let mut total = 0.0;
    for &i in indices {
        let w = data.weight(i);
        total += w;
        for (s, x) in acc.iter_mut().zip(data.point(i).coords()) {
            *s += w * x;
        }
    }
    acc.iter_mut().for_each(|s| *s /= total);
    Ok(Point::from_vec_unchecked(acc))
}

/// Unweighted mean of a list of points.
pub fn mean_of_points(points: &[Point]) -> Result<Point> {
    let first = points.first().ok_or(Error::EmptySubset)?;
    let d = first.dim();
    let mut acc = vec![0.0; d];
    for p in points {
        check_dim(d, p.dim())?;
        for (s, x) in acc.iter_mut().zip(p.coords()) {
            *s += x;
        }
    }
    let n = points.len() as f64;
    acc.iter_mut().for_each(|s| *s /= n);
    Ok(Point::from_vec_unchecked(acc))
}

/// Exact k-means optimum by enumerating every partition of the data into
/// `k` nonempty blocks (restricted growth strings, lexicographic order; the
/// first strict minimum wins). Returns the block centroids and `phi_opt`.
pub fn brute_force_optimum(data: &Dataset, k: usize) -> Result<(CenterSet, f64)> {
    let m = data.len();
    if m > BRUTE_FORCE_MAX_POINTS {
        return Err(Error::GuardExceeded {
            what: "brute_force_optimum points",
            limit: BRUTE_FORCE_MAX_POINTS,
            got: m,
        });
    }
    if k == 0 || k > m {
        return Err(Error::InvalidK { k, m });
    }
    let d = data.dim();
    let mut search = PartitionSearch {
        data,
        k,
        labels: vec![0; m],
        sums: vec![vec![0.0; d]; k],
        sq: vec![0.0; k],
        wsum: vec![0.0; k],
        best_cost: f64::INFINITY,
        best_labels: Vec::new(),
    };
    search.recurse(0, 0);
    let labels = search.best_labels;
    let mut centers = Vec::with_capacity(k);
    for b in 0..k {
        let members: Vec<usize> = (0..m).filter(|&i| labels[i] == b).collect();
        centers.push(centroid_of(data, &members)?);
    }
    let phi = potential_unchecked(data, &centers, &Distortion::SquaredL2);
    Ok((CenterSet::from_points(centers), phi))
}

struct PartitionSearch<'a> {
    data: &'a Dataset,
    k: usize,
    labels: Vec<usize>,
    sums: Vec<Vec<f64>>,
    sq: Vec<f64>,
    wsum: Vec<f64>,
    best_cost: f64,
    best_labels: Vec<usize>,
}

impl PartitionSearch<'_> {
    fn block_cost(&self, b: usize) -> f64 {
        if self.wsum[b] == 0.0 {
            return 0.0;
        }
        let norm: f64 = self.sums[b].iter().map(|s| s * s).sum();
        (self.sq[b] - norm / self.wsum[b]).max(0.0)
    }

    fn recurse(&mut self, i: usize, used: usize) {
        let m = self.data.len();
        // Not enough points left to open the remaining blocks.
        if m - i < self.k - used {
            return;
        }
        if i == m {
            let cost: f64 = (0..self.k).map(|b| self.block_cost(b)).sum();
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best_labels = self.labels.clone();
            }
            return;
        }
        let w = self.data.weight(i);
        let coords = self.data.point(i).coords().to_vec();
        let norm: f64 = coords.iter().map(|x| x * x).sum();
        let limit = (used + 1).min(self.k);
        for b in 0..limit {
            self.labels[i] = b;
            for (acc, x) in self.sums[b].iter_mut().zip(&coords) {
                *acc += w * x;
            }
            self.sq[b] += w * norm;
            self.wsum[b] += w;
            self.recurse(i + 1, used.max(b + 1));
            for (acc, x) in self.sums[b].iter_mut().zip(&coords) {
                *acc -= w * x;
            }
            self.sq[b] -= w * norm;
            self.wsum[b] -= w;
        }
    }
}

/// Assigns every point to its nearest center and returns the labels.
pub fn assign(data: &Dataset, centers: &[Point]) -> Result<Vec<usize>> {
    let first = centers.first().ok_or(Error::EmptyCenters)?;
    check_dim(data.dim(), first.dim())?;
    Ok(data
        .points()
        .iter()
        .map(|a| nearest_unchecked(a.coords(), centers).0)
        .collect())
}

/// `sum_a w_a ||mu_a - c_opt(a)||^2` where `c_opt(a)` is the optimal center
/// nearest to `a` itself.
pub fn phi_bias(data: &Dataset, densities: &[LocalDensity], optimal: &CenterSet) -> Result<f64> {
    if densities.len() != data.len() {
        return Err(Error::InvalidParameter(format!(
            "expected {} densities, got {}",
            data.len(),
            densities.len()
        )));
    }
    let labels = assign(data, optimal.centers())?;
    let mut total = 0.0;
    for (i, dens) in densities.iter().enumerate() {
        let mu = dens.mean()?;
        let c = &optimal.centers()[labels[i]];
        total += data.weight(i) * sq_dist(&mu, c)?;
    }
    Ok(total)
}

/// `sum_a tr(Sigma_a)` over the local densities.
pub fn phi_variance(densities: &[LocalDensity]) -> Result<f64> {
    densities.iter().map(|d| d.trace_covariance()).sum()
}

/// Norm used by [`enclosing_radius`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadiusNorm {
    L1,
    L2,
}

/// `L2`: the diameter `max ||a - a'||_2`. `L1`: an upper bound on the
/// smallest enclosing L1-ball radius, the largest L1 distance to the
/// coordinate-wise midrange.
pub fn enclosing_radius(data: &Dataset, norm: RadiusNorm) -> f64 {
    let pts = data.points();
    match norm {
        RadiusNorm::L2 => l2_diameter(pts),
        RadiusNorm::L1 => {
            let center = midrange(data);
            pts.iter()
                .map(|p| l1_dist_unchecked(p.coords(), &center))
                .fold(0.0, f64::max)
        }
    }
}

/// Exact diameter. Pairs are scanned by decreasing distance to the
/// midrange and cut off once `r_i + r_j` cannot beat the current best.
fn l2_diameter(pts: &[Point]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let center = midrange_of(pts);
    let mut order: Vec<(f64, usize)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (sq_dist_unchecked(p.coords(), &center).sqrt(), i))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let slack = 1.0 - 1e-9;
    let mut best_sq: f64 = 0.0;
    for (pos, &(ri, i)) in order.iter().enumerate() {
        if 2.0 * ri < best_sq.sqrt() * slack {
            break;
        }
        for &(rj, j) in &order[pos + 1..] {
            if ri + rj < best_sq.sqrt() * slack {
                break;
            }
            best_sq = best_sq.max(sq_dist_unchecked(pts[i].coords(), pts[j].coords()));
        }
    }
    best_sq.sqrt()
}

/// Coordinate-wise midpoint of the bounding box.
pub fn midrange(data: &Dataset) -> Vec<f64> {
    midrange_of(data.points())
}

fn midrange_of(pts: &[Point]) -> Vec<f64> {
    let d = pts[0].dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in pts {
        for (j, x) in p.coords().iter().enumerate() {
            lo[j] = lo[j].min(*x);
            hi[j] = hi[j].max(*x);
        }
    }
    lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect()
}

/// Total Jensen divergence `J_alpha / sqrt(1 + U^2)`.
pub fn total_jensen(a: &Point, b: &Point, alpha: f64, generator: &Generator) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "total Jensen alpha must lie in (0,1), got {alpha}"
        )));
    }
    total_jensen_unchecked(a.coords(), b.coords(), alpha, generator)
}

fn total_jensen_unchecked(a: &[f64], b: &[f64], alpha: f64, generator: &Generator) -> Result<f64> {
    let norm = sq_dist_unchecked(a, b).sqrt();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let fa = generator.eval(a);
    let fb = generator.eval(b);
    let mix: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| alpha * x + (1.0 - alpha) * y)
        .collect();
    let fm = generator.eval(&mix);
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(Error::NonFinite("generator output".into()));
    }
    let jensen = alpha * fa + (1.0 - alpha) * fb - fm;
    let u = (fa - fb) / norm;
    // Convex generators give J >= 0; clamp rounding noise.
    Ok(jensen.max(0.0) / (1.0 + u * u).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(xs: &[f64]) -> Point {
        Point::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn sq_dist_examples() {
        assert_eq!(sq_dist(&p(&[0.0, 0.0]), &p(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(sq_dist(&p(&[0.0, 0.0]), &p(&[3.0, 4.0])).unwrap(), 25.0);
        assert!(matches!(
            sq_dist(&p(&[0.0]), &p(&[0.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sq_dist_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..5.0)).collect();
            let b: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut oracle = 0.0;
            for i in 0..5 {
                oracle += (a[i] - b[i]) * (a[i] - b[i]);
            }
            let got = sq_dist(&p(&a), &p(&b)).unwrap();
            assert!((got - oracle).abs() <= 1e-9 * oracle.max(1.0));
        }
    }

    #[test]
    fn point_rejects_bad_input() {
        assert!(matches!(Point::new(vec![]), Err(Error::ZeroDimension)));
        assert!(matches!(
            Point::new(vec![f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn dataset_invariants() {
        assert!(matches!(Dataset::new(vec![]), Err(Error::EmptyDataset)));
        assert!(Dataset::new(vec![p(&[0.0]), p(&[0.0, 1.0])]).is_err());
        let ds = Dataset::from_scalars(&[1.0, 2.0]).unwrap();
        assert!(ds.clone().with_weights(vec![1.0, 0.0]).is_err());
        assert!(ds.clone().with_weights(vec![1.0]).is_err());
        assert_eq!(ds.with_weights(vec![1.0, 3.0]).unwrap().total_weight(), 4.0);
    }

    #[test]
    fn potential_examples() {
        let a = Dataset::from_rows(&[[0.0, 0.0]]).unwrap();
        assert_eq!(kmeans_potential(&a, [p(&[0.0, 0.0])]).unwrap(), 0.0);
        let a = Dataset::from_rows(&[[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]]).unwrap();
        let c = [p(&[0.0, 0.0]), p(&[4.0, 0.0])];
        assert_eq!(kmeans_potential(&a, c).unwrap(), 4.0);
        let empty: [Point; 0] = [];
        assert!(matches!(
            kmeans_potential(&a, empty),
            Err(Error::EmptyCenters)
        ));
    }

    #[test]
    fn potential_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..10)
                .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                .collect();
            let centers: Vec<Vec<f64>> = (0..2)
                .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                .collect();
            let mut oracle = 0.0;
            for r in &rows {
                let mut best = f64::INFINITY;
                for c in &centers {
                    let d = (r[0] - c[0]).powi(2) + (r[1] - c[1]).powi(2);
                    if d < best {
                        best = d;
                    }
                }
                oracle += best;
            }
            let ds = Dataset::from_rows(&rows).unwrap();
            let cs: Vec<Point> = centers.iter().map(|c| p(c)).collect();
            let got = kmeans_potential(&ds, &cs).unwrap();
            assert!((got - oracle).abs() <= 1e-9 * oracle);
        }
    }

    #[test]
    fn weighted_potential_scales() {
        let ds = Dataset::from_scalars(&[0.0, 2.0])
            .unwrap()
            .with_weights(vec![1.0, 3.0])
            .unwrap();
        assert_eq!(kmeans_potential(&ds, [p(&[0.0])]).unwrap(), 12.0);
    }

    #[test]
    fn centroid_examples() {
        let ds = Dataset::from_rows(&[[0.0, 0.0]]).unwrap();
        assert_eq!(centroid(&ds), p(&[0.0, 0.0]));
        let ds = Dataset::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(centroid(&ds), p(&[1.0, 0.0]));
        let ds = Dataset::from_rows(&[[1.0, 1.0], [3.0, 5.0], [5.0, 3.0]]).unwrap();
        assert_eq!(centroid(&ds), p(&[3.0, 3.0]));
        assert!(matches!(centroid_of(&ds, &[]), Err(Error::EmptySubset)));
    }

    #[test]
    fn brute_force_examples() {
        let ds = Dataset::from_scalars(&[0.0, 1.0, 4.0]).unwrap();
        let (c, phi) = brute_force_optimum(&ds, 2).unwrap();
        assert!((phi - 0.5).abs() < 1e-12);
        assert_eq!(c.centers(), &[p(&[0.5]), p(&[4.0])]);

        let (_, phi) = brute_force_optimum(&ds, 3).unwrap();
        assert_eq!(phi, 0.0);

        let (c, phi) = brute_force_optimum(&ds, 1).unwrap();
        let expected = kmeans_potential(&ds, [centroid(&ds)]).unwrap();
        assert!((phi - expected).abs() < 1e-12);
        assert_eq!(c.len(), 1);

        assert!(matches!(
            brute_force_optimum(&ds, 4),
            Err(Error::InvalidK { .. })
        ));
        let big = Dataset::from_scalars(&[0.0; 15]).unwrap();
        assert!(matches!(
            brute_force_optimum(&big, 2),
            Err(Error::GuardExceeded { .. })
        ));
    }

    /// Every k-partition's centroids are worse or equal to the optimum,
    /// checked by enumerating labelings `k^m` directly.
    #[test]
    fn brute_force_dominates_every_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let m = 7;
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| vec![rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)])
                .collect();
            let ds = Dataset::from_rows(&rows).unwrap();
            for k in 1..=3usize {
                let (_, opt) = brute_force_optimum(&ds, k).unwrap();
                let total = k.pow(m as u32);
                for code in 0..total {
                    let mut c = code;
                    let labels: Vec<usize> = (0..m)
                        .map(|_| {
                            let l = c % k;
                            c /= k;
                            l
                        })
                        .collect();
                    let mut centers = vec![];
                    for b in 0..k {
                        let idx: Vec<usize> = (0..m).filter(|&i| labels[i] == b).collect();
                        if !idx.is_empty() {
                            centers.push(centroid_of(&ds, &idx).unwrap());
                        }
                    }
                    if centers.len() != k {
                        continue;
                    }
                    let phi = kmeans_potential(&ds, &centers).unwrap();
                    assert!(opt <= phi + 1e-9);
                }
            }
        }
    }

    #[test]
    fn enclosing_radius_examples() {
        let one = Dataset::from_rows(&[[1.0, 2.0]]).unwrap();
        assert_eq!(enclosing_radius(&one, RadiusNorm::L1), 0.0);
        assert_eq!(enclosing_radius(&one, RadiusNorm::L2), 0.0);
        let two = Dataset::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(enclosing_radius(&two, RadiusNorm::L2), 2.0);
    }

    #[test]
    fn l2_diameter_matches_all_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for case in 0..200 {
            let d = 1 + case % 6;
            let rows: Vec<Vec<f64>> = (0..2 + case % 40)
                .map(|_| (0..d).map(|_| rng.random_range(-4.0..4.0)).collect())
                .collect();
            let ds = Dataset::from_rows(&rows).unwrap();
            let mut best: f64 = 0.0;
            for a in &rows {
                for b in &rows {
                    best = best.max(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum());
                }
            }
            assert_eq!(enclosing_radius(&ds, RadiusNorm::L2), best.sqrt());
        }
    }

    #[test]
    fn l1_radius_dominates_half_pairwise_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..3).map(|_| rng.random_range(-4.0..4.0)).collect())
                .collect();
            let ds = Dataset::from_rows(&rows).unwrap();
            let mut pair_max: f64 = 0.0;
            for a in &rows {
                for b in &rows {
                    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
                    pair_max = pair_max.max(d);
                }
            }
            let r = enclosing_radius(&ds, RadiusNorm::L1);
            assert!(r >= pair_max / 2.0 - 1e-12);
        }
    }

    #[test]
    fn total_jensen_examples() {
        let g = Generator::SquaredNorm;
        assert_eq!(total_jensen(&p(&[1.0]), &p(&[1.0]), 0.5, &g).unwrap(), 0.0);
        let tj = total_jensen(&p(&[0.0]), &p(&[2.0]), 0.5, &g).unwrap();
        assert!((tj - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!(total_jensen(&p(&[0.0]), &p(&[2.0]), 1.0, &g).is_err());
        let bad = Generator::Custom(Arc::new(|_| f64::NAN));
        assert!(matches!(
            total_jensen(&p(&[0.0]), &p(&[2.0]), 0.5, &bad),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn breakdown_reduces_to_av_for_diracs() {
        let b = PotentialBreakdown::new(3.0, 3.0, 0.0, 0.0);
        assert_eq!(b.phi, 24.0);
        assert!((b.bound(1) - 48.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn adding_a_center_never_increases_potential(
            pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..30),
            cs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..5),
            extra in (-10.0f64..10.0, -10.0f64..10.0),
        ) {
            let ds = Dataset::from_rows(&pts.iter().map(|(x, y)| vec![*x, *y]).collect::<Vec<_>>()).unwrap();
            let mut centers: Vec<Point> = cs.iter().map(|(x, y)| p(&[*x, *y])).collect();
            let before = kmeans_potential(&ds, &centers).unwrap();
            centers.push(p(&[extra.0, extra.1]));
            let after = kmeans_potential(&ds, &centers).unwrap();
            prop_assert!(after <= before);
        }

        #[test]
        fn total_jensen_nonnegative_and_below_jensen(
            a in prop::collection::vec(-3.0f64..3.0, 3),
            b in prop::collection::vec(-3.0f64..3.0, 3),
            alpha in 0.01f64..0.99,
        ) {
            for g in [Generator::SquaredNorm, Generator::SumExp] {
                let tj = total_jensen(&p(&a), &p(&b), alpha, &g).unwrap();
                let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect();
                let j = alpha * g.eval(&a) + (1.0 - alpha) * g.eval(&b) - g.eval(&mix);
                prop_assert!(tj >= 0.0);
                prop_assert!(tj <= j.max(0.0) + 1e-12);
            }
        }
    }
}
