//! Synthetic data following the hyperrectangle-cluster protocol, peer
//! constructions and the point-migration process.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{nearest_unchecked, Dataset, Point};
use crate::sampling::{pick_uniform, rng_from_seed, sample_distinct};
use crate::seeding::kmeanspp_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperrectClusterSpec {
    pub d: usize,
    /// Clusters are appended until at least this many points exist.
    pub target_m: usize,
    pub max_points_per_cluster: usize,
    /// Corners are uniform in `[0, domain]^d`.
    pub domain: f64,
    /// Edge lengths are uniform in `(0, max_edge]`.
    pub max_edge: f64,
    pub seed: u64,
}

impl HyperrectClusterSpec {
    pub fn new(d: usize, target_m: usize, seed: u64) -> Self {
        Self {
            d,
            target_m,
            max_points_per_cluster: 1000,
            domain: 10.0,
            max_edge: 2.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::ZeroDimension);
        }
        if self.target_m == 0 || self.max_points_per_cluster == 0 {
            return Err(Error::InvalidParameter(
                "target_m and max_points_per_cluster must be positive".into(),
            ));
        }
        if !(self.domain >= 0.0 && self.max_edge > 0.0)
            || !self.domain.is_finite()
            || !self.max_edge.is_finite()
        {
            return Err(Error::InvalidParameter(
                "domain and edge range must be finite and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Axis-aligned box `[lower, upper]` that generated a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperrect {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub count: usize,
}

impl Hyperrect {
    pub fn contains(&self, p: &Point) -> bool {
        p.coords()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    pub fn edges(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeerOrigin {
    TrueCluster,
    KppVoronoi(usize),
    ForgyVoronoi(usize),
}

/// Peer id of every point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerAssignment {
    peers: Vec<usize>,
    n_peers: usize,
    origin: PeerOrigin,
}

impl PeerAssignment {
    pub fn new(peers: Vec<usize>, n_peers: usize, origin: PeerOrigin) -> Result<Self> {
        if peers.iter().any(|&p| p >= n_peers) {
            return Err(Error::InvalidParameter(format!(
                "peer id out of range 0..{n_peers}"
            )));
        }
        Ok(Self {
            peers,
            n_peers,
            origin,
        })
    }

    pub fn peers(&self) -> &[usize] {
        &self.peers
    }

    pub fn n_peers(&self) -> usize {
        self.n_peers
    }

    pub fn origin(&self) -> PeerOrigin {
        self.origin
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_peers];
        for &p in &self.peers {
            s[p] += 1;
        }
        s
    }
}

/// Generated dataset with its generating boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub data: Dataset,
    pub peers: PeerAssignment,
    pub boxes: Vec<Hyperrect>,
}

/// Clusters of points uniform in random boxes; each cluster is one peer.
pub fn gen_hyperrect_clusters(spec: &HyperrectClusterSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let mut points: Vec<Point> = Vec::with_capacity(spec.target_m + spec.max_points_per_cluster);
    let mut peers = Vec::with_capacity(points.capacity());
    let mut boxes = Vec::new();
    while points.len() < spec.target_m {
        let lower: Vec<f64> = (0..spec.d)
            .map(|_| rng.random::<f64>() * spec.domain)
            .collect();
        let upper: Vec<f64> = lower
            .iter()
            .map(|l| l + spec.max_edge * (1.0 - rng.random::<f64>()))
            .collect();
        let count = 1 + pick_uniform(&mut rng, spec.max_points_per_cluster);
        for _ in 0..count {
            let coords = lower
                .iter()
                .zip(&upper)
                .map(|(l, u)| l + rng.random::<f64>() * (u - l))
                .collect();
            points.push(Point::from_vec_unchecked(coords));
            peers.push(boxes.len());
        }
        boxes.push(Hyperrect {
            lower,
            upper,
            count,
        });
    }
    let n = boxes.len();
    Ok(SyntheticData {
        data: Dataset::new(points)?,
        peers: PeerAssignment::new(peers, n, PeerOrigin::TrueCluster)?,
        boxes,
    })
}

/// Every point moves with probability `p / 100` to a uniformly drawn peer
/// (possibly its own).
pub fn migrate_points(assign: &PeerAssignment, p: f64, seed: u64) -> Result<PeerAssignment> {
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "migration percentage {p} outside [0, 100]"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let prob = p / 100.0;
    let peers = assign
        .peers
        .iter()
        .map(|&cur| {
            if rng.random::<f64>() < prob {
                pick_uniform(&mut rng, assign.n_peers)
            } else {
                cur
            }
        })
        .collect();
    Ok(PeerAssignment {
        peers,
        n_peers: assign.n_peers,
        origin: assign.origin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeerMode {
    Kpp,
    Forgy,
}

/// Peers as the 1-NN cells of `n` peer centers picked by k-means++ or
/// uniformly; ties go to the lowest center index.
pub fn peers_from_real(
    data: &Dataset,
    n: usize,
    mode: PeerMode,
    seed: u64,
) -> Result<PeerAssignment> {
    let m = data.len();
    if n == 0 || n > m {
        return Err(Error::InvalidK { k: n, m });
    }
    let centers: Vec<Point> = match mode {
        PeerMode::Kpp => kmeanspp_seed(data, n, seed)?.into_points(),
        PeerMode::Forgy => {
            let mut rng = rng_from_seed(seed);
            sample_distinct(&mut rng, m, n)
                .into_iter()
                .map(|i| data.point(i).clone())
                .collect()
        }
    };
    let peers = data
        .points()
        .iter()
        .map(|a| nearest_unchecked(a.coords(), &centers).0)
        .collect();
    let origin = match mode {
        PeerMode::Kpp => PeerOrigin::KppVoronoi(n),
        PeerMode::Forgy => PeerOrigin::ForgyVoronoi(n),
    };
    PeerAssignment::new(peers, n, origin)
}
