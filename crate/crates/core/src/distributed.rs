//! In-process simulation of the Forgy-node / special-node protocol
//! (dkmeans++ and its private variant), its message ledger, the Forgy
//! spread statistic, and the k-means|| baseline.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::geometry::{
    centroid, check_dim, potential_unchecked, sq_dist_unchecked, CenterSet, Dataset, Distortion,
    Point, Provenance,
};
use crate::sampling::{mix_seed, normalize, pick_uniform, pick_weighted, rng_from_seed};
use crate::seeding::{first_pick, kmeanspp_seed, DrawLog};

/// One data-holding peer.
#[derive(Debug, Clone)]
pub struct ForgyNode {
    pub id: usize,
    data: Dataset,
    /// Index of every local point in the union dataset.
    global_index: Vec<usize>,
    d_cache: Vec<f64>,
}

impl ForgyNode {
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn global_index(&self) -> &[usize] {
        &self.global_index
    }

    pub fn d_cache(&self) -> &[f64] {
        &self.d_cache
    }

    fn reset(&mut self) {
        self.d_cache.iter_mut().for_each(|d| *d = f64::INFINITY);
    }

    /// Round 3: fold the new center into the cache and report the total.
    fn update(&mut self, center: &Point) -> f64 {
        let mut total = 0.0;
        for (i, a) in self.data.points().iter().enumerate() {
            let d = sq_dist_unchecked(a.coords(), center.coords());
            if d < self.d_cache[i] {
                self.d_cache[i] = d;
            }
            total += self.data.weight(i) * self.d_cache[i];
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Endpoint {
    Node(usize),
    Special,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RoundKind {
    /// Special node asks the selected peer for a center.
    Select,
    /// Selected peer broadcasts the center to the other peers.
    Broadcast,
    /// Peers report their potential totals to the special node.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PayloadKind {
    Control,
    Point,
    Scalar,
}

/// Flat ledger entry; `round` is the 1-based seeding iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRecord {
    pub round: usize,
    pub kind: RoundKind,
    pub src: Endpoint,
    pub dst: Endpoint,
    pub payload: PayloadKind,
}

/// Message accounting for one protocol run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MessageLog {
    pub records: Vec<LedgerRecord>,
    pub control_messages: usize,
    pub point_messages: usize,
    pub scalar_messages: usize,
    /// Distinct data points (or noisy versions) revealed to peers.
    pub data_points_shared: usize,
    /// Broadcasts counted as all-pairs exchanges, `n (n - 1)` each.
    pub all_pairs_messages: usize,
    pub special_scalar_receipts: usize,
}

impl MessageLog {
    fn send(&mut self, record: LedgerRecord) -> Result<()> {
        match record.payload {
            PayloadKind::Point if record.dst == Endpoint::Special => {
                return Err(Error::LedgerViolation(format!(
                    "data point routed to the special node in round {}",
                    record.round
                )))
            }
            PayloadKind::Control => self.control_messages += 1,
            PayloadKind::Point => self.point_messages += 1,
            PayloadKind::Scalar => {
                self.scalar_messages += 1;
                if record.dst == Endpoint::Special {
                    self.special_scalar_receipts += 1;
                }
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// Round 2: one shared data point, `n - 1` point messages.
    fn broadcast(&mut self, round: usize, src: usize, n: usize) -> Result<()> {
        self.data_points_shared += 1;
        self.all_pairs_messages += n * (n - 1);
        for dst in (0..n).filter(|&j| j != src) {
            self.send(LedgerRecord {
                round,
                kind: RoundKind::Broadcast,
                src: Endpoint::Node(src),
                dst: Endpoint::Node(dst),
                payload: PayloadKind::Point,
            })?;
        }
        Ok(())
    }

    /// Number of messages sent during each iteration.
    pub fn messages_per_round(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for r in &self.records {
            *out.entry(r.round).or_insert(0) += 1;
        }
        out
    }
}

/// Partition of a dataset into Forgy nodes plus the special node state.
#[derive(Debug, Clone)]
pub struct PeerNetwork {
    nodes: Vec<ForgyNode>,
    totals: Vec<f64>,
    ledger: MessageLog,
    m: usize,
}

impl PeerNetwork {
    /// One node per part; the union dataset is the parts concatenated.
    pub fn new(parts: Vec<Dataset>) -> Result<Self> {
        let dim = parts.first().ok_or(Error::EmptyDataset)?.dim();
        let mut offset = 0;
        let mut nodes = Vec::with_capacity(parts.len());
        for (id, data) in parts.into_iter().enumerate() {
            check_dim(dim, data.dim())?;
            let len = data.len();
            nodes.push(ForgyNode {
                id,
                global_index: (offset..offset + len).collect(),
                d_cache: vec![f64::INFINITY; len],
                data,
            });
            offset += len;
        }
        Ok(Self {
            totals: vec![0.0; nodes.len()],
            nodes,
            ledger: MessageLog::default(),
            m: offset,
        })
    }

    /// Nodes from a peer label per point. Labels without points are dropped,
    /// so node ids are the surviving labels in increasing order.
    pub fn from_assignment(data: &Dataset, peers: &[usize]) -> Result<Self> {
        if peers.len() != data.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} peer labels, got {}",
                data.len(),
                peers.len()
            )));
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &p) in peers.iter().enumerate() {
            groups.entry(p).or_default().push(i);
        }
        let mut nodes = Vec::with_capacity(groups.len());
        for (id, members) in groups.into_values().enumerate() {
            nodes.push(ForgyNode {
                id,
                data: data.subset(&members)?,
                d_cache: vec![f64::INFINITY; members.len()],
                global_index: members,
            });
        }
        Ok(Self {
            totals: vec![0.0; nodes.len()],
            nodes,
            ledger: MessageLog::default(),
            m: data.len(),
        })
    }

    pub fn nodes(&self) -> &[ForgyNode] {
        &self.nodes
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn total_points(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].data.dim()
    }

    pub fn ledger(&self) -> &MessageLog {
        &self.ledger
    }

    /// Totals last reported to the special node.
    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    /// Node groups as index lists into the union dataset.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        self.nodes.iter().map(|n| n.global_index.clone()).collect()
    }

    /// The union dataset, in global index order.
    pub fn union(&self) -> Dataset {
        let mut points = vec![Point::zeros(self.dim()); self.m];
        let mut weights = vec![1.0; self.m];
        for node in &self.nodes {
            for (j, &g) in node.global_index.iter().enumerate() {
                points[g] = node.data.point(j).clone();
                weights[g] = node.data.weight(j);
            }
        }
        let weighted = self.nodes.iter().any(|n| n.data.is_weighted());
        Dataset::from_parts_unchecked(points, weighted.then_some(weights))
    }

    fn reset(&mut self) {
        self.nodes.iter_mut().for_each(ForgyNode::reset);
        self.totals.iter_mut().for_each(|t| *t = 0.0);
        self.ledger = MessageLog::default();
    }
}

/// Round-1 node probabilities: uniform at the first iteration, otherwise
/// proportional to the reported totals.
pub fn node_selection_probabilities(totals: &[f64], iteration: usize) -> Vec<f64> {
    if iteration == 1 || totals.iter().sum::<f64>() <= 0.0 {
        vec![1.0 / totals.len() as f64; totals.len()]
    } else {
        normalize(totals)
    }
}

/// dkmeans++: only node-level totals reach the special node; the selected
/// node reveals one of its own points.
pub fn dkmeans_protected(net: &mut PeerNetwork, k: usize, seed: u64) -> Result<CenterSet> {
    run_dkmeans(net, k, &DensityModel::Dirac, seed, None)
}

/// Private dkmeans++: the selected node broadcasts a draw from the density
/// template centered at its uniformly chosen point.
pub fn dkmeans_private(
    net: &mut PeerNetwork,
    k: usize,
    template: &DensityModel,
    seed: u64,
) -> Result<CenterSet> {
    run_dkmeans(net, k, template, seed, None)
}

/// [`dkmeans_private`] recording the Round-1 node distribution of each
/// iteration.
pub fn dkmeans_traced(
    net: &mut PeerNetwork,
    k: usize,
    template: &DensityModel,
    seed: u64,
    trace: &mut DrawLog,
) -> Result<CenterSet> {
    run_dkmeans(net, k, template, seed, Some(trace))
}

fn run_dkmeans(
    net: &mut PeerNetwork,
    k: usize,
    template: &DensityModel,
    seed: u64,
    mut trace: Option<&mut DrawLog>,
) -> Result<CenterSet> {
    match template {
        DensityModel::Dirac => {
            if k == 0 || k > net.m {
                return Err(Error::InvalidK { k, m: net.m });
            }
        }
        DensityModel::ProductLaplace { .. } => {
            template.validate(&net.nodes[0].data)?;
            if k == 0 {
                return Err(Error::InvalidK { k, m: net.m });
            }
        }
        _ => {
            return Err(Error::InvalidParameter(
                "density template must be Dirac or ProductLaplace".into(),
            ))
        }
    }
    net.reset();
    let n = net.n();
    let mut rng = rng_from_seed(seed);
    let mut out = CenterSet::with_capacity(k);
    let sizes: Vec<f64> = net.nodes.iter().map(|nd| nd.data.total_weight()).collect();

    for t in 1..=k {
        // Round 1.
        let chosen = if t == 1 {
            if let Some(tr) = trace.as_deref_mut() {
                tr.record_uniform(n);
            }
            pick_uniform(&mut rng, n)
        } else {
            match pick_weighted(&mut rng, &net.totals) {
                Some(i) => {
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.record_weights(&net.totals);
                    }
                    i
                }
                None => {
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.record_weights(&sizes);
                        tr.uniform_fallbacks += 1;
                    }
                    pick_weighted(&mut rng, &sizes).expect("nodes are nonempty")
                }
            }
        };
        net.ledger.send(LedgerRecord {
            round: t,
            kind: RoundKind::Select,
            src: Endpoint::Special,
            dst: Endpoint::Node(chosen),
            payload: PayloadKind::Control,
        })?;

        // Round 2.
        let node = &net.nodes[chosen];
        let local = pick_local(node, &mut rng);
        let (x, noisy, _) = template.sample_for(local, &node.data, &mut rng);
        let reference = node.global_index[local];
        net.ledger.broadcast(t, chosen, n)?;

        // Round 3.
        for (i, nd) in net.nodes.iter_mut().enumerate() {
            net.totals[i] = nd.update(&x);
            net.ledger.send(LedgerRecord {
                round: t,
                kind: RoundKind::Report,
                src: Endpoint::Node(i),
                dst: Endpoint::Special,
                payload: PayloadKind::Scalar,
            })?;
        }
        out.push(
            x,
            Provenance {
                iteration: t,
                reference: Some(reference),
                source: Some(chosen),
                noisy,
            },
        );
    }
    Ok(out)
}

/// Uniform local point (weight-proportional on weighted nodes).
fn pick_local<R: Rng + ?Sized>(node: &ForgyNode, rng: &mut R) -> usize {
    match node.data.weights() {
        Some(w) => pick_weighted(rng, w).expect("weights are positive"),
        None => pick_uniform(rng, node.data.len()),
    }
}

/// Total within-node spread: sum of each node's potential to its centroid.
pub fn forgy_spread(net: &PeerNetwork) -> f64 {
    net.nodes
        .iter()
        .map(|nd| potential_unchecked(&nd.data, &[centroid(&nd.data)], &Distortion::SquaredL2))
        .sum()
}

/// Diagnostics of a k-means|| run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KmeansParallelStats {
    pub phi_first: f64,
    pub rounds: usize,
    pub oversampling: f64,
    /// Distinct candidates produced by the oversampling rounds.
    pub candidates: usize,
    /// Uniform picks added because fewer than `k` candidates were found.
    pub top_up: usize,
}

/// k-means|| with `l = 2k` and `ceil(ln phi_1)` rounds, reclustered with
/// weighted k-means++.
pub fn kmeans_parallel_baseline(data: &Dataset, k: usize, seed: u64) -> Result<CenterSet> {
    Ok(kmeans_parallel_with_stats(data, k, seed)?.0)
}

pub fn kmeans_parallel_with_stats(
    data: &Dataset,
    k: usize,
    seed: u64,
) -> Result<(CenterSet, KmeansParallelStats)> {
    let m = data.len();
    if k == 0 || k > m {
        return Err(Error::InvalidK { k, m });
    }
    let oversampling = 2.0 * k as f64;
    let mut rng = rng_from_seed(seed);
    let first = first_pick(data, &mut rng, &mut None);
    let mut chosen = vec![false; m];
    let mut candidates = vec![first];
    chosen[first] = true;
    let mut dists: Vec<f64> = data
        .points()
        .iter()
        .map(|a| sq_dist_unchecked(a.coords(), data.point(first).coords()))
        .collect();
    let phi_of = |dists: &[f64]| -> f64 { (0..m).map(|i| data.weight(i) * dists[i]).sum() };
    let phi_first = phi_of(&dists);
    let rounds = if phi_first > 1.0 {
        phi_first.ln().ceil() as usize
    } else {
        1
    }
    .max(1);

    for _ in 0..rounds {
        let phi = phi_of(&dists);
        if phi <= 0.0 {
            break;
        }
        let fresh: Vec<usize> = (0..m)
            .filter(|&i| {
                let p = (oversampling * data.weight(i) * dists[i] / phi).min(1.0);
                let u: f64 = rng.random();
                !chosen[i] && u < p
            })
            .collect();
        for &i in &fresh {
            chosen[i] = true;
            let c = data.point(i).coords();
            for (j, a) in data.points().iter().enumerate() {
                let d = sq_dist_unchecked(a.coords(), c);
                if d < dists[j] {
                    dists[j] = d;
                }
            }
        }
        candidates.extend(fresh);
    }

    // Coordinate-level dedupe keeps Voronoi weights well defined.
    let mut distinct: Vec<usize> = Vec::with_capacity(candidates.len());
    for &c in &candidates {
        if !distinct.iter().any(|&o| data.point(o) == data.point(c)) {
            distinct.push(c);
        }
    }
    let found = distinct.len();
    let mut top_up = 0;
    if distinct.len() < k {
        let mut pool: Vec<usize> = (0..m)
            .filter(|&i| !distinct.iter().any(|&o| data.point(o) == data.point(i)))
            .collect();
        while distinct.len() < k {
            if pool.is_empty() {
                // Fewer than k distinct points in the data: repeat some.
                distinct.push(pick_uniform(&mut rng, m));
            } else {
                let j = pick_uniform(&mut rng, pool.len());
                let i = pool.swap_remove(j);
                pool.retain(|&o| data.point(o) != data.point(i));
                distinct.push(i);
            }
            top_up += 1;
        }
    }

    let cand_points: Vec<Point> = distinct.iter().map(|&i| data.point(i).clone()).collect();
    let mut voronoi = vec![0.0; cand_points.len()];
    for (i, a) in data.points().iter().enumerate() {
        let (j, _) = crate::geometry::nearest_unchecked(a.coords(), &cand_points);
        voronoi[j] += data.weight(i);
    }
    // Repeated top-up picks can leave a zero cell; keep weights positive.
    for v in voronoi.iter_mut() {
        if *v <= 0.0 {
            *v = f64::MIN_POSITIVE;
        }
    }
    let weighted = Dataset::new(cand_points)?.with_weights(voronoi)?;
    let picked = kmeanspp_seed(&weighted, k, mix_seed(seed, 1))?;
    let mut out = CenterSet::with_capacity(k);
    for (c, p) in picked.centers().iter().zip(picked.provenance()) {
        out.push(
            c.clone(),
            Provenance {
                iteration: p.iteration,
                reference: p.reference.map(|j| distinct[j]),
                source: None,
                noisy: false,
            },
        );
    }
    Ok((
        out,
        KmeansParallelStats {
            phi_first,
            rounds,
            oversampling,
            candidates: found,
            top_up,
        },
    ))
}
