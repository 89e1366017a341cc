//! Fixtures shared by the criterion benches.

use kvariates::datagen::{gen_hyperrect_clusters, HyperrectClusterSpec};
use kvariates::distributed::PeerNetwork;
use kvariates::Dataset;

/// Hyperrectangle clusters with at least `m` points in `d` dimensions.
pub fn clusters(d: usize, m: usize) -> Dataset {
    gen_hyperrect_clusters(&HyperrectClusterSpec::new(d, m, 17))
        .expect("valid spec")
        .data
}

/// The same data split into its generating clusters, one per peer.
pub fn cluster_network(d: usize, m: usize) -> PeerNetwork {
    let s = gen_hyperrect_clusters(&HyperrectClusterSpec::new(d, m, 17)).expect("valid spec");
    PeerNetwork::from_assignment(&s.data, s.peers.peers()).expect("nonempty peers")
}
