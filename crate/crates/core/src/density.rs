//! Local densities `p_(mu_a, theta_a)` that turn a sampled reference point
//! into an actual center.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, mean_of_points, sq_dist_unchecked, Dataset, Point};
use crate::sampling::{laplace, laplace_pdf, pick_uniform};

/// Shape of a single local density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DensityKind {
    /// Point mass at `mu`.
    Dirac { mu: Point },
    /// Product of independent `Lap(scale)` coordinates centered at `mu`.
    ProductLaplace { mu: Point, scale: f64 },
    /// Uniform over a finite set of points.
    UniformOnSubset { members: Vec<Point> },
}

/// Density attached to the point with index `owner`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDensity {
    pub owner: usize,
    pub kind: DensityKind,
}

impl LocalDensity {
    pub fn dirac(owner: usize, mu: Point) -> Self {
        Self {
            owner,
            kind: DensityKind::Dirac { mu },
        }
    }

    pub fn product_laplace(owner: usize, mu: Point, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Laplace scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            owner,
            kind: DensityKind::ProductLaplace { mu, scale },
        })
    }

    pub fn uniform_on_subset(owner: usize, members: Vec<Point>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptySubset);
        }
        let d = members[0].dim();
        for p in &members {
            check_dim(d, p.dim())?;
        }
        Ok(Self {
            owner,
            kind: DensityKind::UniformOnSubset { members },
        })
    }

    /// Expectation `mu_a`.
    pub fn mean(&self) -> Result<Point> {
        match &self.kind {
            DensityKind::Dirac { mu } | DensityKind::ProductLaplace { mu, .. } => Ok(mu.clone()),
            DensityKind::UniformOnSubset { members } => mean_of_points(members),
        }
    }

    /// `tr(Sigma_a)`.
    pub fn trace_covariance(&self) -> Result<f64> {
        match &self.kind {
            DensityKind::Dirac { .. } => Ok(0.0),
            DensityKind::ProductLaplace { mu, scale } => Ok(mu.dim() as f64 * 2.0 * scale * scale),
            DensityKind::UniformOnSubset { members } => {
                let c = mean_of_points(members)?;
                let n = members.len() as f64;
                Ok(members
                    .iter()
                    .map(|p| sq_dist_unchecked(p.coords(), c.coords()))
                    .sum::<f64>()
                    / n)
            }
        }
    }

    pub fn is_noisy(&self) -> bool {
        !matches!(self.kind, DensityKind::Dirac { .. })
    }

    /// Draws a center. Dirac densities never touch the generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.kind {
            DensityKind::Dirac { mu } => mu.clone(),
            DensityKind::ProductLaplace { mu, scale } => laplace_around(mu, *scale, rng),
            DensityKind::UniformOnSubset { members } => {
                members[pick_uniform(rng, members.len())].clone()
            }
        }
    }

    /// Density (Laplace) or probability mass (Dirac, uniform subset) at `x`.
    pub fn pdf(&self, x: &Point) -> f64 {
        match &self.kind {
            DensityKind::Dirac { mu } => f64::from(mu == x),
            DensityKind::ProductLaplace { mu, scale } => laplace_product_pdf(mu, *scale, x),
            DensityKind::UniformOnSubset { members } => {
                members.iter().filter(|p| *p == x).count() as f64 / members.len() as f64
            }
        }
    }
}

pub(crate) fn laplace_around<R: Rng + ?Sized>(mu: &Point, scale: f64, rng: &mut R) -> Point {
    let coords = mu
        .coords()
        .iter()
        .map(|m| m + laplace(rng, scale))
        .collect();
    Point::from_vec_unchecked(coords)
}

pub(crate) fn laplace_product_pdf(mu: &Point, scale: f64, x: &Point) -> f64 {
    mu.coords()
        .iter()
        .zip(x.coords())
        .map(|(m, v)| laplace_pdf(v - m, scale))
        .product()
}

/// Assignment of a local density to every point of a dataset, stored
/// compactly for the common cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DensityModel {
    /// `p_a` is the point mass at `a` (k-means++).
    Dirac,
    /// `p_a` is a product of `Lap(scale)` centered at `a`.
    ProductLaplace { scale: f64 },
    /// `p_a` is uniform over the group containing `a` (distributed reduction).
    UniformOnGroups { groups: Vec<Vec<usize>> },
    /// One explicit density per point, indexed like the dataset.
    Explicit(Vec<LocalDensity>),
}

impl DensityModel {
    /// Laplace model whose per-coordinate variance is `sigma^2`.
    pub fn laplace_with_sigma(sigma: f64) -> Self {
        DensityModel::ProductLaplace {
            scale: sigma / std::f64::consts::SQRT_2,
        }
    }

    /// Groups from a label per point; labels need not be contiguous.
    pub fn from_labels(labels: &[usize]) -> Self {
        let n_groups = labels.iter().copied().max().map_or(0, |l| l + 1);
        let mut groups = vec![Vec::new(); n_groups];
        for (i, &l) in labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups.retain(|g| !g.is_empty());
        DensityModel::UniformOnGroups { groups }
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        match self {
            DensityModel::Dirac => Ok(()),
            DensityModel::ProductLaplace { scale } => {
                if *scale > 0.0 && scale.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "Laplace scale must be positive, got {scale}"
                    )))
                }
            }
            DensityModel::UniformOnGroups { groups } => {
                let mut seen = vec![false; data.len()];
                for g in groups {
                    if g.is_empty() {
                        return Err(Error::EmptySubset);
                    }
                    for &i in g {
                        if i >= data.len() || seen[i] {
                            return Err(Error::InvalidParameter(
                                "groups must partition the dataset".into(),
                            ));
                        }
                        seen[i] = true;
                    }
                }
                if seen.iter().all(|s| *s) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "groups must partition the dataset".into(),
                    ))
                }
            }
            DensityModel::Explicit(ds) => {
                if ds.len() != data.len() {
                    return Err(Error::InvalidParameter(format!(
                        "expected {} densities, got {}",
                        data.len(),
                        ds.len()
                    )));
                }
                for d in ds {
                    check_dim(data.dim(), d.mean()?.dim())?;
                }
                Ok(())
            }
        }
    }

    pub fn is_dirac(&self) -> bool {
        match self {
            DensityModel::Dirac => true,
            DensityModel::Explicit(ds) => ds.iter().all(|d| !d.is_noisy()),
            _ => false,
        }
    }

    /// Group of every point, for [`DensityModel::UniformOnGroups`].
    fn group_of(groups: &[Vec<usize>], i: usize) -> usize {
        groups
            .iter()
            .position(|g| g.contains(&i))
            .expect("validated partition")
    }

    /// Draws the center for reference point `i`. Returns the center, whether
    /// it is noisy, and the group id when the model has groups.
    pub(crate) fn sample_for<R: Rng + ?Sized>(
        &self,
        i: usize,
        data: &Dataset,
        rng: &mut R,
    ) -> (Point, bool, Option<usize>) {
        match self {
            DensityModel::Dirac => (data.point(i).clone(), false, None),
            DensityModel::ProductLaplace { scale } => {
                (laplace_around(data.point(i), *scale, rng), true, None)
            }
            DensityModel::UniformOnGroups { groups } => {
                let g = Self::group_of(groups, i);
                let members = &groups[g];
                let j = members[pick_uniform(rng, members.len())];
                (data.point(j).clone(), true, Some(g))
            }
            DensityModel::Explicit(ds) => {
                let d = &ds[i];
                (d.sample(rng), d.is_noisy(), None)
            }
        }
    }

    /// Density or mass of reference point `i`'s local density at `x`.
    pub fn pdf_for(&self, i: usize, data: &Dataset, x: &Point) -> f64 {
        match self {
            DensityModel::Dirac => f64::from(data.point(i) == x),
            DensityModel::ProductLaplace { scale } => laplace_product_pdf(data.point(i), *scale, x),
            DensityModel::UniformOnGroups { groups } => {
                let members = &groups[Self::group_of(groups, i)];
                members.iter().filter(|&&j| data.point(j) == x).count() as f64
                    / members.len() as f64
            }
            DensityModel::Explicit(ds) => ds[i].pdf(x),
        }
    }

    /// One [`LocalDensity`] per point.
    pub fn materialize(&self, data: &Dataset) -> Result<Vec<LocalDensity>> {
        self.validate(data)?;
        Ok(match self {
            DensityModel::Dirac => data
                .points()
                .iter()
                .enumerate()
                .map(|(i, p)| LocalDensity::dirac(i, p.clone()))
                .collect(),
            DensityModel::ProductLaplace { scale } => data
                .points()
                .iter()
                .enumerate()
                .map(|(i, p)| LocalDensity::product_laplace(i, p.clone(), *scale))
                .collect::<Result<_>>()?,
            DensityModel::UniformOnGroups { groups } => {
                let mut out: Vec<Option<LocalDensity>> = vec![None; data.len()];
                for g in groups {
                    let members: Vec<Point> = g.iter().map(|&j| data.point(j).clone()).collect();
                    for &i in g {
                        out[i] = Some(LocalDensity::uniform_on_subset(i, members.clone())?);
                    }
                }
                out.into_iter().map(|d| d.expect("partition")).collect()
            }
            DensityModel::Explicit(ds) => ds.clone(),
        })
    }

    /// `phi_variance` without materializing per-point densities.
    pub fn phi_variance(&self, data: &Dataset) -> Result<f64> {
        self.validate(data)?;
        match self {
            DensityModel::Dirac => Ok(0.0),
            DensityModel::ProductLaplace { scale } => {
                Ok(data.total_weight() * data.dim() as f64 * 2.0 * scale * scale)
            }
            DensityModel::UniformOnGroups { .. } | DensityModel::Explicit(_) => {
                let ds = self.materialize(data)?;
                Ok(ds
                    .iter()
                    .enumerate()
                    .map(|(i, d)| d.trace_covariance().map(|t| data.weight(i) * t))
                    .sum::<Result<f64>>()?)
            }
        }
    }
}
