//! Streaming seeding over synopses (skmeans) and online minibatch seeding
//! (okmeans), with the spread statistics their bounds use.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    assign, enclosing_radius, nearest_unchecked, sq_dist_unchecked, CenterSet, Dataset, Point,
    Provenance, RadiusNorm,
};
use crate::sampling::{mix_seed, pick_uniform, pick_weighted, rng_from_seed, sample_distinct};
use crate::seeding::{first_pick, record, record_uniform, DrawLog};

/// Weighted summary points `(s_j, m_j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynopsisSet {
    points: Vec<Point>,
    counts: Vec<usize>,
    capacity: usize,
}

impl SynopsisSet {
    /// Synopses at the given points with nearest-assignment counts over the
    /// stream; points whose cell is empty are dropped.
    pub fn from_points(stream: &Dataset, points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyCenters)?;
        crate::geometry::check_dim(stream.dim(), first.dim())?;
        let capacity = points.len();
        let mut counts = vec![0usize; capacity];
        for a in stream.points() {
            counts[nearest_unchecked(a.coords(), &points).0] += 1;
        }
        let (points, counts) = points
            .into_iter()
            .zip(counts)
            .filter(|(_, c)| *c > 0)
            .unzip();
        Ok(Self {
            points,
            counts,
            capacity,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of stream points summarized.
    pub fn consumed(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Synopses as a dataset weighted by their counts.
    pub fn to_weighted_dataset(&self) -> Result<Dataset> {
        Dataset::new(self.points.clone())?
            .with_weights(self.counts.iter().map(|&c| c as f64).collect())
    }
}

/// How synopses are built from the stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum SynopsisBuilder {
    /// Single pass, nearest running mean.
    #[default]
    Online,
    /// Reservoir sample plus a counting pass.
    Uniform,
}

/// Seeds with the first `n` distinct points, then folds every later point
/// into its nearest synopsis by running mean.
pub fn build_synopses_online(stream: &Dataset, n: usize) -> Result<SynopsisSet> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "synopsis capacity must be positive".into(),
        ));
    }
    let mut points: Vec<Point> = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::with_capacity(n);
    for a in stream.points() {
        let near = (!points.is_empty()).then(|| nearest_unchecked(a.coords(), &points));
        match near {
            Some((j, d)) if d == 0.0 || points.len() == n => {
                counts[j] += 1;
                let mj = counts[j] as f64;
                let updated = points[j]
                    .coords()
                    .iter()
                    .zip(a.coords())
                    .map(|(s, x)| s + (x - s) / mj)
                    .collect();
                points[j] = Point::from_vec_unchecked(updated);
            }
            _ => {
                points.push(a.clone());
                counts.push(1);
            }
        }
    }
    Ok(SynopsisSet {
        points,
        counts,
        capacity: n,
    })
}

/// Reservoir of `n` stream points (Algorithm R) with Voronoi counts from a
/// second pass; entries whose cell is empty are dropped.
pub fn build_synopses_uniform(stream: &Dataset, n: usize, seed: u64) -> Result<SynopsisSet> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "synopsis capacity must be positive".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut reservoir: Vec<usize> = Vec::with_capacity(n);
    for i in 0..stream.len() {
        if i < n {
            reservoir.push(i);
        } else {
            let j = pick_uniform(&mut rng, i + 1);
            if j < n {
                reservoir[j] = i;
            }
        }
    }
    let sampled: Vec<Point> = reservoir.iter().map(|&i| stream.point(i).clone()).collect();
    let mut out = SynopsisSet::from_points(stream, sampled)?;
    out.capacity = n;
    Ok(out)
}

pub fn build_synopses(
    stream: &Dataset,
    n: usize,
    builder: SynopsisBuilder,
    seed: u64,
) -> Result<SynopsisSet> {
    match builder {
        SynopsisBuilder::Online => build_synopses_online(stream, n),
        SynopsisBuilder::Uniform => build_synopses_uniform(stream, n, seed),
    }
}

/// skmeans: summarize the stream into at most `n` synopses, then seed on
/// the synopses with count-weighted D^2 sampling.
pub fn skmeans(
    stream: &Dataset,
    n: usize,
    k: usize,
    builder: SynopsisBuilder,
    seed: u64,
) -> Result<CenterSet> {
    let synopses = build_synopses(stream, n, builder, mix_seed(seed, 1))?;
    skmeans_on_synopses(&synopses, k, seed, None)
}

/// Seeding step of [`skmeans`] on prebuilt synopses. The first center is
/// uniform over synopses; later ones use weights `m_j D_t(s_j)`.
pub fn skmeans_on_synopses(
    synopses: &SynopsisSet,
    k: usize,
    seed: u64,
    mut trace: Option<&mut DrawLog>,
) -> Result<CenterSet> {
    let live = synopses.len();
    if k == 0 || k > live {
        return Err(Error::NotEnoughSynopses {
            needed: k,
            got: live,
        });
    }
    let mut rng = rng_from_seed(seed);
    let pts = synopses.points();
    let mut dists = vec![f64::INFINITY; live];
    let mut weights = vec![0.0; live];
    let mut out = CenterSet::with_capacity(k);
    for t in 1..=k {
        let j = if t == 1 {
            record_uniform(&mut trace, live, false);
            pick_uniform(&mut rng, live)
        } else {
            for i in 0..live {
                weights[i] = synopses.counts[i] as f64 * dists[i];
            }
            match pick_weighted(&mut rng, &weights) {
                Some(j) => {
                    record(&mut trace, &weights);
                    j
                }
                None => {
                    record_uniform(&mut trace, live, true);
                    pick_uniform(&mut rng, live)
                }
            }
        };
        let c = &pts[j];
        for (i, s) in pts.iter().enumerate() {
            let d = sq_dist_unchecked(s.coords(), c.coords());
            if d < dists[i] {
                dists[i] = d;
            }
        }
        out.push(
            c.clone(),
            Provenance {
                iteration: t,
                reference: Some(j),
                source: Some(j),
                noisy: false,
            },
        );
    }
    Ok(out)
}

/// Spread of the nearest-synopsis probe: `sum_a w_a |probe(a) - a|^2`.
pub fn probe_spread(stream: &Dataset, synopses: &SynopsisSet) -> Result<f64> {
    let first = synopses.points.first().ok_or(Error::EmptyCenters)?;
    crate::geometry::check_dim(stream.dim(), first.dim())?;
    Ok(stream
        .points()
        .iter()
        .enumerate()
        .map(|(i, a)| stream.weight(i) * nearest_unchecked(a.coords(), &synopses.points).1)
        .sum())
}

/// A stream split, in order, into nonempty minibatches.
#[derive(Debug, Clone, PartialEq)]
pub struct MinibatchStream {
    batches: Vec<Dataset>,
}

impl MinibatchStream {
    pub fn new(batches: Vec<Dataset>) -> Result<Self> {
        let dim = batches.first().ok_or(Error::EmptyDataset)?.dim();
        for b in &batches {
            crate::geometry::check_dim(dim, b.dim())?;
        }
        Ok(Self { batches })
    }

    /// Consecutive batches of `size` points (the last may be shorter).
    pub fn fixed_size(stream: &Dataset, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter(
                "batch size must be positive".into(),
            ));
        }
        let idx: Vec<usize> = (0..stream.len()).collect();
        let batches = idx
            .chunks(size)
            .map(|c| stream.subset(c))
            .collect::<Result<_>>()?;
        Self::new(batches)
    }

    /// Default policy: batch size `ceil(m / k)`.
    pub fn for_k(stream: &Dataset, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidK { k, m: stream.len() });
        }
        Self::fixed_size(stream, stream.len().div_ceil(k))
    }

    pub fn batches(&self) -> &[Dataset] {
        &self.batches
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn batch_sizes(&self) -> Vec<usize> {
        self.batches.iter().map(Dataset::len).collect()
    }

    /// Zero-based batch of every stream point, in stream order.
    pub fn batch_labels(&self) -> Vec<usize> {
        self.batches
            .iter()
            .enumerate()
            .flat_map(|(j, b)| std::iter::repeat_n(j, b.len()))
            .collect()
    }

    /// The whole stream as one dataset.
    pub fn union(&self) -> Dataset {
        let mut out = self.batches[0].clone();
        for b in &self.batches[1..] {
            out = out.concat(b).expect("dimensions checked");
        }
        out
    }
}

/// okmeans: one center per minibatch, uniform in the first batch and
/// D^2-weighted within each later batch. Batch sizes (the weights of the
/// centers) are recoverable from the provenance source id.
pub fn okmeans_run(stream: &MinibatchStream, k: usize, seed: u64) -> Result<CenterSet> {
    okmeans_traced(stream, k, seed, None)
}

pub fn okmeans_traced(
    stream: &MinibatchStream,
    k: usize,
    seed: u64,
    mut trace: Option<&mut DrawLog>,
) -> Result<CenterSet> {
    if k == 0 || stream.len() < k {
        return Err(Error::NotEnoughBatches {
            needed: k,
            got: stream.len(),
        });
    }
    if stream.len() > k {
        log::warn!(
            "okmeans consumes {k} minibatches; ignoring {} extra",
            stream.len() - k
        );
    }
    let mut rng = rng_from_seed(seed);
    let mut out = CenterSet::with_capacity(k);
    let mut offset = 0;
    for (j, batch) in stream.batches.iter().take(k).enumerate() {
        let local = if j == 0 {
            first_pick(batch, &mut rng, &mut trace)
        } else {
            let weights: Vec<f64> = batch
                .points()
                .iter()
                .enumerate()
                .map(|(i, s)| batch.weight(i) * nearest_unchecked(s.coords(), out.centers()).1)
                .collect();
            match pick_weighted(&mut rng, &weights) {
                Some(i) => {
                    record(&mut trace, &weights);
                    i
                }
                None => {
                    record_uniform(&mut trace, batch.len(), true);
                    pick_uniform(&mut rng, batch.len())
                }
            }
        };
        out.push(
            batch.point(local).clone(),
            Provenance {
                iteration: j + 1,
                reference: Some(offset + local),
                source: Some(j),
                noisy: false,
            },
        );
        offset += batch.len();
    }
    Ok(out)
}

/// Result of [`estimate_varsigma`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarsigmaEstimate {
    /// Clamped to `(0, 1]`.
    pub varsigma: f64,
    /// Smallest pairwise-spread ratio over optimal clusters.
    pub pairwise: f64,
    /// Smallest batch-coverage ratio over sampled center sets.
    pub coverage: f64,
    pub coverage_samples: usize,
    /// A condition ratio was 0 (or no cluster qualified).
    pub degenerate: bool,
}

/// Empirical width parameter of the minibatch bound.
///
/// The pairwise condition uses unordered pairs against `C(|A|, 2) R^2`
/// with `R` the stream diameter. The coverage condition is evaluated only
/// on batches that intersect the cluster, over `trials` random center sets
/// of `1..=k` data points. Singleton clusters are skipped.
pub fn estimate_varsigma(
    stream: &MinibatchStream,
    optimal: &CenterSet,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<VarsigmaEstimate> {
    if k == 0 {
        return Err(Error::InvalidK { k, m: 0 });
    }
    let data = stream.union();
    let labels = assign(&data, optimal.centers())?;
    let batch_of = stream.batch_labels();
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); optimal.len()];
    for (i, &l) in labels.iter().enumerate() {
        clusters[l].push(i);
    }
    clusters.retain(|c| c.len() >= 2);
    let diameter = enclosing_radius(&data, RadiusNorm::L2);
    if clusters.is_empty() || diameter == 0.0 {
        return Ok(VarsigmaEstimate {
            varsigma: f64::MIN_POSITIVE,
            pairwise: 0.0,
            coverage: 0.0,
            coverage_samples: 0,
            degenerate: true,
        });
    }
    let r2 = diameter * diameter;
    let mut pairwise = f64::INFINITY;
    for c in &clusters {
        let mut sum = 0.0;
        for (x, &i) in c.iter().enumerate() {
            for &j in &c[x + 1..] {
                sum += sq_dist_unchecked(data.point(i).coords(), data.point(j).coords());
            }
        }
        let pairs = (c.len() * (c.len() - 1) / 2) as f64;
        pairwise = pairwise.min(sum / (pairs * r2));
    }

    let mut rng = rng_from_seed(seed);
    let kmax = k.min(data.len());
    let mut coverage = f64::INFINITY;
    let mut samples = 0;
    let n_batches = stream.len();
    for _ in 0..trials {
        let cluster = &clusters[pick_uniform(&mut rng, clusters.len())];
        let size = 1 + pick_uniform(&mut rng, kmax);
        let centers: Vec<Point> = sample_distinct(&mut rng, data.len(), size)
            .into_iter()
            .map(|i| data.point(i).clone())
            .collect();
        let mut per_batch = vec![0.0; n_batches];
        let mut present = vec![false; n_batches];
        for &i in cluster {
            let d = nearest_unchecked(data.point(i).coords(), &centers).1;
            per_batch[batch_of[i]] += d;
            present[batch_of[i]] = true;
        }
        let total: f64 = per_batch.iter().sum();
        if total == 0.0 {
            continue;
        }
        samples += 1;
        for j in (0..n_batches).filter(|&j| present[j]) {
            coverage = coverage.min(per_batch[j] / total);
        }
    }
    let raw = if samples > 0 {
        pairwise.min(coverage)
    } else {
        pairwise
    };
    let degenerate = !(raw > 0.0);
    Ok(VarsigmaEstimate {
        varsigma: if degenerate {
            f64::MIN_POSITIVE
        } else {
            raw.min(1.0)
        },
        pairwise,
        coverage: if samples > 0 { coverage } else { f64::NAN },
        coverage_samples: samples,
        degenerate,
    })
}
