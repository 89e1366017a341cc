use proptest::prelude::*;

use kvariates::distributed::{dkmeans_traced, PeerNetwork};
use kvariates::seeding::{kmeanspp_seed_traced, kvariates_seed_traced};
use kvariates::streaming::{build_synopses_online, build_synopses_uniform, MinibatchStream};
use kvariates::{
    kmeans_potential, kvariates_seed, lloyd_refine, CenterSet, Dataset, DensityModel, DrawLog,
    SeedingConfig,
};

fn dataset(max_m: usize, max_d: usize) -> impl Strategy<Value = Dataset> {
    (1..=max_d).prop_flat_map(move |d| {
        prop::collection::vec(prop::collection::vec(-100.0f64..100.0, d), 1..=max_m)
            .prop_map(|rows| Dataset::from_rows(&rows).unwrap())
    })
}

fn dataset_with_k(max_m: usize) -> impl Strategy<Value = (Dataset, usize)> {
    dataset(max_m, 4).prop_flat_map(|ds| {
        let m = ds.len();
        (Just(ds), 1..=m)
    })
}

fn labels_for(m: usize, groups: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..groups, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seeding_is_deterministic((ds, k) in dataset_with_k(30), seed in any::<u64>(), sigma in 0.0f64..5.0) {
        let cfg = SeedingConfig::kmeanspp(k, seed).with_densities(DensityModel::laplace_with_sigma(sigma));
        prop_assert_eq!(kvariates_seed(&ds, &cfg).unwrap(), kvariates_seed(&ds, &cfg).unwrap());
    }

    #[test]
    fn dirac_trace_equals_kmeanspp_trace((ds, k) in dataset_with_k(30), seed in any::<u64>()) {
        let mut a = DrawLog::default();
        let mut b = DrawLog::default();
        let ca = kvariates_seed_traced(&ds, &SeedingConfig::kmeanspp(k, seed), Some(&mut a)).unwrap();
        let cb = kmeanspp_seed_traced(&ds, k, seed, Some(&mut b)).unwrap();
        prop_assert_eq!(a.probabilities, b.probabilities);
        prop_assert_eq!(ca.reference_indices(), cb.reference_indices());
    }

    #[test]
    fn dkmeans_emits_union_points_and_obeys_ledger(
        (ds, labels) in dataset(24, 3).prop_flat_map(|ds| {
            let m = ds.len();
            (Just(ds), labels_for(m, 4))
        }),
        seed in any::<u64>(),
        k in 1usize..6,
    ) {
        prop_assume!(k <= ds.len());
        let mut net = PeerNetwork::from_assignment(&ds, &labels).unwrap();
        let mut log = DrawLog::default();
        let c = dkmeans_traced(&mut net, k, &DensityModel::Dirac, seed, &mut log).unwrap();
        prop_assert_eq!(c.len(), k);
        prop_assert!(c.centers().iter().all(|x| ds.points().contains(x)));
        for p in &log.probabilities {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let ledger = net.ledger();
        prop_assert_eq!(ledger.data_points_shared, k);
        prop_assert_eq!(ledger.special_scalar_receipts, net.n() * k);
    }

    #[test]
    fn group_densities_emit_only_group_members(
        (ds, labels) in dataset(24, 3).prop_flat_map(|ds| {
            let m = ds.len();
            (Just(ds), labels_for(m, 3))
        }),
        seed in any::<u64>(),
        k in 1usize..5,
    ) {
        let model = DensityModel::from_labels(&labels);
        let c = kvariates_seed(&ds, &SeedingConfig::kmeanspp(k, seed).with_densities(model)).unwrap();
        for (center, prov) in c.centers().iter().zip(c.provenance()) {
            let r = prov.reference.unwrap();
            let ok = ds.points().iter().zip(&labels).any(|(p, &l)| l == labels[r] && p == center);
            prop_assert!(ok);
        }
    }

    #[test]
    fn peer_partition_is_exact(
        (ds, labels) in dataset(40, 3).prop_flat_map(|ds| {
            let m = ds.len();
            (Just(ds), labels_for(m, 6))
        }),
    ) {
        let net = PeerNetwork::from_assignment(&ds, &labels).unwrap();
        let mut seen: Vec<usize> = net.groups().concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..ds.len()).collect::<Vec<_>>());
        prop_assert_eq!(net.total_points(), ds.len());
        prop_assert!(net.nodes().iter().all(|n| !n.data().is_empty()));
    }

    #[test]
    fn synopsis_counts_cover_stream(ds in dataset(50, 3), n in 1usize..20, seed in any::<u64>()) {
        let n = n.min(ds.len());
        for syn in [build_synopses_online(&ds, n).unwrap(), build_synopses_uniform(&ds, n, seed).unwrap()] {
            prop_assert_eq!(syn.counts().iter().sum::<usize>(), ds.len());
            prop_assert!(syn.len() <= n);
            prop_assert!(syn.counts().iter().all(|&c| c > 0));
        }
    }

    #[test]
    fn minibatches_preserve_stream(ds in dataset(50, 2), size in 1usize..12) {
        let s = MinibatchStream::fixed_size(&ds, size).unwrap();
        prop_assert_eq!(s.union(), ds.clone());
        prop_assert_eq!(s.batch_sizes().iter().sum::<usize>(), ds.len());
        prop_assert!(s.batch_sizes().iter().all(|&b| b > 0 && b <= size));
    }

    #[test]
    fn lloyd_never_increases_potential((ds, k) in dataset_with_k(30), seed in any::<u64>()) {
        let start = kvariates_seed(&ds, &SeedingConfig::kmeanspp(k, seed)).unwrap();
        let before = kmeans_potential(&ds, &start).unwrap();
        let after: CenterSet = lloyd_refine(&ds, &start, 10).unwrap();
        prop_assert!(kmeans_potential(&ds, &after).unwrap() <= before * (1.0 + 1e-12) + 1e-9);
    }
}
