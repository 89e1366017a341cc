//! k-variates++ seeding with pluggable probes and local densities, the
//! classical k-means++ specialization, Lloyd refinement and an empirical
//! estimator of the stretching factor `eta` of a probe.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::geometry::{
    assign, check_dim, nearest_unchecked, potential_unchecked, CenterSet, Dataset, Distortion,
    Point, Provenance,
};
use crate::sampling::{normalize, pick_uniform, pick_weighted, rng_from_seed, sample_distinct};

/// Custom probe `(index, point, iteration) -> image`.
pub type ProbeMap = Arc<dyn Fn(usize, &Point, usize) -> Point + Send + Sync>;

/// Map applied to data points before the `D_t` weights are computed.
#[derive(Clone, Default)]
pub enum ProbeFunction {
    #[default]
    Identity,
    /// Every point is replaced by its nearest synopsis.
    NearestSynopsis(Vec<Point>),
    /// Points of minibatch `t - 1` (at iteration `t`) map to themselves;
    /// every other point maps to its nearest current center.
    MinibatchGate { batch_of: Vec<usize> },
    /// Caller-supplied `(index, point, iteration) -> image`.
    Custom {
        map: ProbeMap,
        iteration_aware: bool,
    },
}

impl fmt::Debug for ProbeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeFunction::Identity => f.write_str("Identity"),
            ProbeFunction::NearestSynopsis(s) => write!(f, "NearestSynopsis({} synopses)", s.len()),
            ProbeFunction::MinibatchGate { .. } => f.write_str("MinibatchGate"),
            ProbeFunction::Custom {
                iteration_aware, ..
            } => write!(f, "Custom(iteration_aware={iteration_aware})"),
        }
    }
}

impl ProbeFunction {
    pub fn is_iteration_aware(&self) -> bool {
        match self {
            ProbeFunction::Identity | ProbeFunction::NearestSynopsis(_) => false,
            ProbeFunction::MinibatchGate { .. } => true,
            ProbeFunction::Custom {
                iteration_aware, ..
            } => *iteration_aware,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, ProbeFunction::Identity)
    }

    /// Image of point `i` at 1-based iteration `t` given the current centers.
    pub fn apply<'a>(&self, i: usize, a: &'a Point, t: usize, centers: &[Point]) -> Cow<'a, Point> {
        match self {
            ProbeFunction::Identity => Cow::Borrowed(a),
            ProbeFunction::NearestSynopsis(s) => {
                Cow::Owned(s[nearest_unchecked(a.coords(), s).0].clone())
            }
            ProbeFunction::MinibatchGate { batch_of } => {
                if batch_of[i] + 1 == t || centers.is_empty() {
                    Cow::Borrowed(a)
                } else {
                    Cow::Owned(centers[nearest_unchecked(a.coords(), centers).0].clone())
                }
            }
            ProbeFunction::Custom { map, .. } => Cow::Owned(map(i, a, t)),
        }
    }

    fn validate(&self, data: &Dataset) -> Result<()> {
        match self {
            ProbeFunction::NearestSynopsis(s) => {
                let first = s.first().ok_or(Error::EmptySubset)?;
                check_dim(data.dim(), first.dim())
            }
            ProbeFunction::MinibatchGate { batch_of } if batch_of.len() != data.len() => {
                Err(Error::InvalidParameter(format!(
                    "minibatch gate needs {} labels, got {}",
                    data.len(),
                    batch_of.len()
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Inputs of [`kvariates_seed`].
#[derive(Debug, Clone)]
pub struct SeedingConfig {
    pub k: usize,
    pub distortion: Distortion,
    pub seed: u64,
    pub probes: ProbeFunction,
    pub densities: DensityModel,
}

impl SeedingConfig {
    /// k-means++ configuration: Dirac densities, identity probes, squared L2.
    pub fn kmeanspp(k: usize, seed: u64) -> Self {
        Self {
            k,
            distortion: Distortion::SquaredL2,
            seed,
            probes: ProbeFunction::Identity,
            densities: DensityModel::Dirac,
        }
    }

    pub fn with_densities(mut self, densities: DensityModel) -> Self {
        self.densities = densities;
        self
    }

    pub fn with_probes(mut self, probes: ProbeFunction) -> Self {
        self.probes = probes;
        self
    }

    pub fn with_distortion(mut self, distortion: Distortion) -> Self {
        self.distortion = distortion;
        self
    }
}

/// Sampling distributions observed at every draw, in draw order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DrawLog {
    pub probabilities: Vec<Vec<f64>>,
    /// Draws that fell back to uniform because every weight was zero.
    pub uniform_fallbacks: usize,
}

impl DrawLog {
    pub(crate) fn record_weights(&mut self, weights: &[f64]) {
        self.probabilities.push(normalize(weights));
    }

    pub(crate) fn record_uniform(&mut self, n: usize) {
        self.probabilities.push(vec![1.0 / n as f64; n]);
    }
}

pub(crate) fn record(trace: &mut Option<&mut DrawLog>, weights: &[f64]) {
    if let Some(t) = trace.as_deref_mut() {
        t.record_weights(weights);
    }
}

pub(crate) fn record_uniform(trace: &mut Option<&mut DrawLog>, n: usize, fallback: bool) {
    if let Some(t) = trace.as_deref_mut() {
        t.record_uniform(n);
        if fallback {
            t.uniform_fallbacks += 1;
        }
    }
}

/// First reference point: uniform, or proportional to weight when the
/// dataset is weighted.
pub(crate) fn first_pick(
    data: &Dataset,
    rng: &mut crate::sampling::SeedRng,
    trace: &mut Option<&mut DrawLog>,
) -> usize {
    match data.weights() {
        Some(w) => {
            record(trace, w);
            pick_weighted(rng, w).expect("weights are positive")
        }
        None => {
            record_uniform(trace, data.len(), false);
            pick_uniform(rng, data.len())
        }
    }
}

/// k-variates++: `k` centers drawn by D_t-weighted reference sampling
/// followed by a draw from the reference point's local density.
pub fn kvariates_seed(data: &Dataset, cfg: &SeedingConfig) -> Result<CenterSet> {
    kvariates_seed_traced(data, cfg, None)
}

pub fn kvariates_seed_traced(
    data: &Dataset,
    cfg: &SeedingConfig,
    mut trace: Option<&mut DrawLog>,
) -> Result<CenterSet> {
    let m = data.len();
    if cfg.k == 0 || (cfg.densities.is_dirac() && cfg.k > m) {
        return Err(Error::InvalidK { k: cfg.k, m });
    }
    cfg.densities.validate(data)?;
    cfg.probes.validate(data)?;

    let mut rng = rng_from_seed(cfg.seed);
    let mut out = CenterSet::with_capacity(cfg.k);
    let iteration_aware = cfg.probes.is_iteration_aware();
    // Static probe images, computed once.
    let images: Option<Vec<Point>> = match (&cfg.probes, iteration_aware) {
        (ProbeFunction::Identity, _) | (_, true) => None,
        (p, false) => Some(
            data.points()
                .iter()
                .enumerate()
                .map(|(i, a)| p.apply(i, a, 1, &[]).into_owned())
                .collect(),
        ),
    };
    let image = |i: usize| -> &Point { images.as_ref().map_or(data.point(i), |v| &v[i]) };
    let mut d_cache = vec![f64::INFINITY; m];
    let mut weights = vec![0.0; m];

    for t in 1..=cfg.k {
        let idx = if t == 1 {
            first_pick(data, &mut rng, &mut trace)
        } else {
            if iteration_aware {
                for (i, a) in data.points().iter().enumerate() {
                    let probed = cfg.probes.apply(i, a, t, out.centers());
                    d_cache[i] = out
                        .centers()
                        .iter()
                        .map(|c| cfg.distortion.eval_unchecked(probed.coords(), c.coords()))
                        .fold(f64::INFINITY, f64::min);
                }
            }
            for i in 0..m {
                weights[i] = data.weight(i) * d_cache[i];
            }
            match pick_weighted(&mut rng, &weights) {
                Some(i) => {
                    record(&mut trace, &weights);
                    i
                }
                None => {
                    record_uniform(&mut trace, m, true);
                    pick_uniform(&mut rng, m)
                }
            }
        };
        let (x, noisy, group) = cfg.densities.sample_for(idx, data, &mut rng);
        if !iteration_aware {
            for (i, d) in d_cache.iter_mut().enumerate() {
                let v = cfg.distortion.eval_unchecked(image(i).coords(), x.coords());
                if v < *d {
                    *d = v;
                }
            }
        }
        out.push(
            x,
            Provenance {
                iteration: t,
                reference: Some(idx),
                source: group,
                noisy,
            },
        );
    }
    Ok(out)
}

/// Classical k-means++ seeding (uniform first pick, then D^2 sampling),
/// written independently of [`kvariates_seed`] so each can check the other.
pub fn kmeanspp_seed(data: &Dataset, k: usize, seed: u64) -> Result<CenterSet> {
    kmeanspp_seed_traced(data, k, seed, None)
}

pub fn kmeanspp_seed_traced(
    data: &Dataset,
    k: usize,
    seed: u64,
    mut trace: Option<&mut DrawLog>,
) -> Result<CenterSet> {
    let m = data.len();
    if k == 0 || k > m {
        return Err(Error::InvalidK { k, m });
    }
    let mut rng = rng_from_seed(seed);
    let mut out = CenterSet::with_capacity(k);
    let mut min_d2 = vec![f64::INFINITY; m];
    let mut weights = vec![0.0; m];
    let pts = data.points();

    let mut idx = first_pick(data, &mut rng, &mut trace);
    for t in 1..=k {
        if t > 1 {
            for i in 0..m {
                weights[i] = data.weight(i) * min_d2[i];
            }
            idx = match pick_weighted(&mut rng, &weights) {
                Some(i) => {
                    record(&mut trace, &weights);
                    i
                }
                None => {
                    record_uniform(&mut trace, m, true);
                    pick_uniform(&mut rng, m)
                }
            };
        }
        let c = &pts[idx];
        for (i, a) in pts.iter().enumerate() {
            let d = crate::geometry::sq_dist_unchecked(a.coords(), c.coords());
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
        out.push(
            c.clone(),
            Provenance {
                iteration: t,
                reference: Some(idx),
                source: None,
                noisy: false,
            },
        );
    }
    Ok(out)
}

/// Lloyd iterations (assign, recompute weighted centroids). Empty clusters
/// keep their previous center; stops early at a fixed point.
pub fn lloyd_refine(data: &Dataset, centers: &CenterSet, iters: usize) -> Result<CenterSet> {
    Ok(lloyd_refine_with_history(data, centers, iters)?.0)
}

/// Like [`lloyd_refine`], also returning the potential before the first
/// iteration and after each one.
pub fn lloyd_refine_with_history(
    data: &Dataset,
    centers: &CenterSet,
    iters: usize,
) -> Result<(CenterSet, Vec<f64>)> {
    let first = centers.centers().first().ok_or(Error::EmptyCenters)?;
    check_dim(data.dim(), first.dim())?;
    let k = centers.len();
    let d = data.dim();
    let mut current: Vec<Point> = centers.centers().to_vec();
    let mut history = vec![potential_unchecked(data, &current, &Distortion::SquaredL2)];
    let mut labels = assign(data, &current)?;
    for _ in 0..iters {
        let mut sums = vec![vec![0.0; d]; k];
        let mut mass = vec![0.0; k];
        for (i, a) in data.points().iter().enumerate() {
            let w = data.weight(i);
            mass[labels[i]] += w;
            for (s, x) in sums[labels[i]].iter_mut().zip(a.coords()) {
                *s += w * x;
            }
        }
        for j in 0..k {
            if mass[j] > 0.0 {
                let c: Vec<f64> = sums[j].iter().map(|s| s / mass[j]).collect();
                current[j] = Point::from_vec_unchecked(c);
            }
        }
        history.push(potential_unchecked(data, &current, &Distortion::SquaredL2));
        let next = assign(data, &current)?;
        if next == labels {
            break;
        }
        labels = next;
    }
    let provenance = centers.provenance().to_vec();
    let mut out = CenterSet::with_capacity(k);
    for (c, p) in current.into_iter().zip(provenance) {
        out.push(c, p);
    }
    Ok((out, history))
}

/// Result of [`estimate_eta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaEstimate {
    pub eta: f64,
    pub valid_samples: usize,
    pub skipped_samples: usize,
    /// No sample survived the probed-denominator guard.
    pub degenerate: bool,
}

/// Empirical stretching factor of a probe over the optimal clusters.
///
/// Each trial draws an optimal cluster, an anchor in it and a candidate set
/// of `1..=k` data points, then compares relative potentials before and
/// after probing. Candidates are data points only, so the result
/// under-estimates the true `eta`. Iteration-aware probes are evaluated at
/// iteration 1 with no centers.
pub fn estimate_eta(
    data: &Dataset,
    probe: &ProbeFunction,
    optimal: &CenterSet,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<EtaEstimate> {
    if trials == 0 || k == 0 {
        return Err(Error::NoValidSample("trials and k must be positive".into()));
    }
    probe.validate(data)?;
    let labels = assign(data, optimal.centers())?;
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); optimal.len()];
    for (i, &l) in labels.iter().enumerate() {
        clusters[l].push(i);
    }
    clusters.retain(|c| !c.is_empty());
    let images: Vec<Point> = data
        .points()
        .iter()
        .enumerate()
        .map(|(i, a)| probe.apply(i, a, 1, &[]).into_owned())
        .collect();

    let m = data.len();
    let kmax = k.min(m);
    let mut rng = rng_from_seed(seed);
    let mut eta: f64 = 0.0;
    let mut valid = 0usize;
    let mut skipped = 0usize;
    let cluster_potential = |members: &[usize], pts: &[Point], cs: &[&Point]| {
        members
            .iter()
            .map(|&i| {
                let a = pts[i].coords();
                data.weight(i)
                    * cs.iter()
                        .map(|c| crate::geometry::sq_dist_unchecked(a, c.coords()))
                        .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
    };
    let raw = data.points();
    let probed = images.as_slice();

    for _ in 0..trials {
        let cluster = &clusters[pick_uniform(&mut rng, clusters.len())];
        let a0 = cluster[pick_uniform(&mut rng, cluster.len())];
        let size = 1 + pick_uniform(&mut rng, kmax);
        let cand = sample_distinct(&mut rng, m, size);
        let cand_pts: Vec<&Point> = cand.iter().map(|&i| data.point(i)).collect();

        let raw_anchor = cluster_potential(cluster, raw, &[data.point(a0)]);
        let probed_anchor = cluster_potential(cluster, probed, &[&images[a0]]);
        if raw_anchor == 0.0 || probed_anchor == 0.0 {
            skipped += 1;
            continue;
        }
        let raw_c = cluster_potential(cluster, raw, &cand_pts);
        let probed_c = cluster_potential(cluster, probed, &cand_pts);
        let lhs = raw_c / raw_anchor;
        let rhs = probed_c / probed_anchor;
        valid += 1;
        let ratio = if rhs == 0.0 {
            if lhs == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            lhs / rhs
        };
        eta = eta.max(ratio - 1.0);
    }
    Ok(EtaEstimate {
        eta: eta.max(0.0),
        valid_samples: valid,
        skipped_samples: skipped,
        degenerate: valid == 0,
    })
}
