//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use kvariates::datagen::{gen_hyperrect_clusters, migrate_points, HyperrectClusterSpec};
use kvariates::distributed::{dkmeans_protected, forgy_spread, PeerNetwork};
use kvariates::geometry::{
    brute_force_optimum, enclosing_radius, kmeans_potential, log_factor, phi_bias, RadiusNorm,
};
use kvariates::harness::{fit_log_model, median, rho_prime_phi, trial_seed};
use kvariates::privacy::{
    delta_s_exact, delta_s_randomized, delta_w_exact, delta_w_randomized, dp_kvariates,
    epsilon_tilde, forgy_dp_baseline, likelihood_exact, lr_bound_rhs, rho_laplace, DpConfig,
    DpMode, SpreadMethod, SpreadReport,
};
use kvariates::sampling::mix_seed;
use kvariates::seeding::{kmeanspp_seed, kvariates_seed, DrawLog, SeedingConfig};
use kvariates::streaming::{
    build_synopses_online, okmeans_traced, skmeans, skmeans_on_synopses, MinibatchStream,
    SynopsisBuilder,
};
use kvariates::{Dataset, DensityModel, Point};

use common::{blobs, rng, uniform_dataset};

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Criterion 1: Dirac + identity k-variates++ draws the same reference
/// indices as k-means++.
fn reduction_equality() -> Check {
    let mut r = rng(101);
    for case in 0..100 {
        let m = r.random_range(2..=50);
        let d = r.random_range(1..=4);
        let k = r.random_range(1..=5usize).min(m);
        let seed: u64 = r.random();
        let ds = uniform_dataset(&mut r, m, d, -5.0, 5.0);
        let a =
            kvariates_seed(&ds, &SeedingConfig::kmeanspp(k, seed)).map_err(|e| e.to_string())?;
        let b = kmeanspp_seed(&ds, k, seed).map_err(|e| e.to_string())?;
        ensure(
            a.reference_indices() == b.reference_indices() && a.centers() == b.centers(),
            format!("case {case}: sequences differ"),
        )?;
    }
    Ok("100/100 identical index sequences".into())
}

fn instances_12(seed: u64) -> Vec<Dataset> {
    let mut r = rng(seed);
    (0..20).map(|_| blobs(&mut r, 3, 4, 2).0).collect()
}

/// Criterion 2: k-means++ mean potential below `8 (2 + ln k) phi_opt`.
fn av_bound() -> Check {
    let instances = instances_12(202);
    let mut worst: f64 = 0.0;
    for k in [2usize, 3] {
        for (i, ds) in instances.iter().enumerate() {
            let (_, phi_opt) = brute_force_optimum(ds, k).map_err(|e| e.to_string())?;
            let bound = 8.0 * log_factor(k) * phi_opt;
            let mean = mean_over(2000, mix_seed(2, i as u64 * 10 + k as u64), |s| {
                kmeans_potential(ds, kmeanspp_seed(ds, k, s).unwrap()).unwrap()
            });
            worst = worst.max(mean / bound);
            ensure(
                mean <= bound,
                format!("k={k} instance {i}: mean {mean:.4} > bound {bound:.4}"),
            )?;
        }
    }
    Ok(format!(
        "40/40 instances within bound, max mean/bound = {worst:.3}"
    ))
}

fn mean_over(runs: usize, base: u64, f: impl Fn(u64) -> f64 + Sync) -> f64 {
    let total: f64 = (0..runs)
        .into_par_iter()
        .map(|i| f(trial_seed(base, i)))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    total / runs as f64
}

/// Criterion 3: product-Laplace densities with `phi_variance ~ phi_opt`.
fn noisy_bound() -> Check {
    let instances = instances_12(202);
    let mut worst: f64 = 0.0;
    for k in [2usize, 3] {
        for (i, ds) in instances.iter().enumerate() {
            let (opt, phi_opt) = brute_force_optimum(ds, k).map_err(|e| e.to_string())?;
            let sigma = (phi_opt / (ds.len() * ds.dim()) as f64).sqrt();
            let model = DensityModel::laplace_with_sigma(sigma);
            let dens = model.materialize(ds).map_err(|e| e.to_string())?;
            let bias = phi_bias(ds, &dens, &opt).map_err(|e| e.to_string())?;
            let variance = model.phi_variance(ds).map_err(|e| e.to_string())?;
            let bound = log_factor(k) * (6.0 * phi_opt + 2.0 * bias + 2.0 * variance);
            let cfg = SeedingConfig::kmeanspp(k, 0).with_densities(model);
            let mean = mean_over(2000, mix_seed(3, i as u64 * 10 + k as u64), |s| {
                let c = kvariates_seed(
                    ds,
                    &SeedingConfig {
                        seed: s,
                        ..cfg.clone()
                    },
                )
                .unwrap();
                kmeans_potential(ds, c).unwrap()
            });
            worst = worst.max(mean / bound);
            ensure(
                mean <= bound,
                format!("k={k} instance {i}: mean {mean:.4} > bound {bound:.4}"),
            )?;
        }
    }
    Ok(format!(
        "40/40 instances within bound, max mean/bound = {worst:.3}"
    ))
}

/// Criterion 4: dkmeans++ protected bound and ledger law.
fn distributed_bound() -> Check {
    let mut r = rng(404);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 20 {
        let (ds, labels) = blobs(&mut r, 3, 4, 2);
        // Alternate aligned peers and peers scrambled by migration.
        let peers = if checked % 2 == 0 {
            labels
        } else {
            labels
                .iter()
                .map(|&l| {
                    if r.random::<f64>() < 0.5 {
                        r.random_range(0..3)
                    } else {
                        l
                    }
                })
                .collect()
        };
        let net = PeerNetwork::from_assignment(&ds, &peers).map_err(|e| e.to_string())?;
        if net.n() != 3 {
            continue;
        }
        let spread = forgy_spread(&net);
        for k in [2usize, 3] {
            let (_, phi_opt) = brute_force_optimum(&ds, k).map_err(|e| e.to_string())?;
            let bound = log_factor(k) * (10.0 * phi_opt + 6.0 * spread);
            let results: Vec<(f64, bool)> = (0..2000)
                .into_par_iter()
                .map(|i| {
                    let mut local = net.clone();
                    let c = dkmeans_protected(
                        &mut local,
                        k,
                        trial_seed(checked as u64 * 7 + k as u64, i),
                    )
                    .unwrap();
                    let log = local.ledger();
                    let ok = log.data_points_shared == k && log.special_scalar_receipts == 3 * k;
                    (kmeans_potential(&ds, c).unwrap(), ok)
                })
                .collect();
            ensure(
                results.iter().all(|r| r.1),
                format!("instance {checked}: ledger law broken"),
            )?;
            let mean = results.iter().map(|r| r.0).sum::<f64>() / results.len() as f64;
            worst = worst.max(mean / bound);
            ensure(
                mean <= bound,
                format!("instance {checked} k={k}: mean {mean:.4} > bound {bound:.4}"),
            )?;
        }
        checked += 1;
    }
    Ok(format!(
        "40/40 (instance, k) within bound, max mean/bound = {worst:.3}; ledger exact in 80000 runs"
    ))
}

/// Criterion 5: exact likelihood ratios against the ratio bound.
fn likelihood_ratio_bound() -> Check {
    let outcomes: Vec<Result<(usize, f64), String>> = (0..100u64)
        .into_par_iter()
        .map(|inst| {
            let mut r = rng(mix_seed(505, inst));
            let m = r.random_range(3..=6);
            let d = r.random_range(1..=2);
            let a = uniform_dataset(&mut r, m, d, 0.0, 4.0);
            let replaced = r.random_range(0..m);
            let a2 = a
                .replace_point(replaced, common::random_point(&mut r, d, 0.0, 4.0))
                .map_err(|e| e.to_string())?;
            let k = 2;
            let dw = delta_w_exact(&a, k).map_err(|e| e.to_string())?;
            let ds = delta_s_exact(&a, k).map_err(|e| e.to_string())?;
            let both = a.concat(&a2).map_err(|e| e.to_string())?;
            let radius = enclosing_radius(&both, RadiusNorm::L1);
            let sigma = radius * r.random_range(0.5..2.0);
            let model = DensityModel::laplace_with_sigma(sigma);
            let rhs = lr_bound_rhs(dw, ds, k, rho_laplace(radius, sigma));
            let mut violations = 0;
            let mut worst: f64 = 0.0;
            for s in 0..20u64 {
                let source = if s % 2 == 0 { &a } else { &a2 };
                let cfg =
                    SeedingConfig::kmeanspp(k, mix_seed(inst, s)).with_densities(model.clone());
                let c = kvariates_seed(source, &cfg).map_err(|e| e.to_string())?;
                let la = likelihood_exact(&c, &a, &model, k).map_err(|e| e.to_string())?;
                let la2 = likelihood_exact(&c, &a2, &model, k).map_err(|e| e.to_string())?;
                let ratio = la2 / la;
                worst = worst.max(ratio / rhs);
                if ratio.is_nan() || ratio > rhs {
                    violations += 1;
                }
            }
            Ok((violations, worst))
        })
        .collect();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for o in outcomes {
        let (v, w) = o?;
        violations += v;
        worst = worst.max(w);
    }
    ensure(
        violations == 0,
        format!("{violations} violations over 2000 outputs"),
    )?;
    Ok(format!(
        "0 violations over 100 instances x 20 outputs, max ratio/bound = {worst:.3e}"
    ))
}

/// Criterion 6: epsilon-tilde grows with m on the hyperrectangle protocol.
fn epsilon_tilde_regime() -> Check {
    let synthetic = gen_hyperrect_clusters(&HyperrectClusterSpec::new(10, 20_000, 606))
        .map_err(|e| e.to_string())?;
    let full = synthetic.data;
    let sizes = [1000usize, 2000, 4000, 8000, 12_000, 16_000, full.len()];
    let mut r = rng(606);
    let mut points = Vec::new();
    let mut last = None;
    for &m in &sizes {
        let data = if m == full.len() {
            full.clone()
        } else {
            let idx = kvariates::sampling::sample_distinct(&mut r, full.len(), m);
            full.subset(&idx).map_err(|e| e.to_string())?
        };
        let dw =
            delta_w_randomized(&data, 3, 5000, mix_seed(6, m as u64)).map_err(|e| e.to_string())?;
        let ds =
            delta_s_randomized(&data, 3, 5000, mix_seed(7, m as u64)).map_err(|e| e.to_string())?;
        if let Ok(e) = epsilon_tilde(1.0, dw, ds, 3) {
            points.push((m as f64, e));
            last = Some((m, e));
        }
    }
    ensure(
        points.len() >= 3,
        format!("epsilon-tilde defined at only {} sizes", points.len()),
    )?;
    let fit = fit_log_model(&points).map_err(|e| e.to_string())?;
    let (m_last, e_last) = last.unwrap();
    ensure(
        m_last == full.len(),
        "epsilon-tilde undefined at the largest size",
    )?;
    ensure(
        fit.b > 0.0,
        format!("slope b = {:.3} is not positive", fit.b),
    )?;
    ensure(
        e_last >= 2.0,
        format!("epsilon-tilde/epsilon = {e_last:.3} < 2 at m = {m_last}"),
    )?;
    let band = (2.25..=6.75).contains(&e_last);
    ensure(
        band,
        format!("epsilon-tilde/epsilon = {e_last:.3} outside the 4.5 +/- 50% band"),
    )?;
    Ok(format!(
        "fit a = {:.3}, b = {:.3} (rms {:.3}); epsilon-tilde/epsilon = {e_last:.3} at m = {m_last}, inside 4.5 +/- 50%",
        fit.a, fit.b, fit.residual_rms
    ))
}

/// Criterion 7: migration inflates the Forgy spread.
fn migration_spread() -> Check {
    let synthetic = gen_hyperrect_clusters(&HyperrectClusterSpec::new(50, 20_000, 707))
        .map_err(|e| e.to_string())?;
    let base = PeerNetwork::from_assignment(&synthetic.data, synthetic.peers.peers())
        .map_err(|e| e.to_string())?;
    let moved = migrate_points(&synthetic.peers, 50.0, 708).map_err(|e| e.to_string())?;
    let mixed =
        PeerNetwork::from_assignment(&synthetic.data, moved.peers()).map_err(|e| e.to_string())?;
    let (s0, s50) = (forgy_spread(&base), forgy_spread(&mixed));
    let ratio = s50 / s0;
    ensure(ratio >= 10.0, format!("spread ratio {ratio:.2} < 10"))?;
    Ok(format!(
        "phi_F(p=50%)/phi_F(p=0%) = {ratio:.1} (m = {}, {} peers)",
        synthetic.data.len(),
        base.n()
    ))
}

/// Criterion 8: F-DP loses to DP k-variates++ in median.
fn dp_direction() -> Check {
    let synthetic = gen_hyperrect_clusters(&HyperrectClusterSpec {
        target_m: 100_000,
        ..HyperrectClusterSpec::new(15, 100_000, 808)
    })
    .map_err(|e| e.to_string())?;
    let data = synthetic.data;
    let (k, epsilon) = (2usize, 1.0);
    let spread = SpreadReport::compute(&data, k, SpreadMethod::Randomized { n_est: 5000 }, 808)
        .map_err(|e| e.to_string())?
        .with_epsilon(epsilon);
    let cfg = DpConfig {
        epsilon,
        mode: DpMode::Auto,
        r_l1: spread.r_l1,
        k,
    };
    let ratios: Vec<f64> = (0..30u64)
        .into_par_iter()
        .map(|i| {
            let kv = dp_kvariates(&data, &cfg, &spread, mix_seed(1, i)).unwrap();
            let fdp = forgy_dp_baseline(&data, k, epsilon, spread.r_l1, mix_seed(2, i)).unwrap();
            let p_kv = kmeans_potential(&data, &kv.centers).unwrap();
            let p_fdp = kmeans_potential(&data, fdp).unwrap();
            rho_prime_phi(p_fdp, p_kv).unwrap()
        })
        .collect();
    let med = median(&ratios);
    let mode = dp_kvariates(&data, &cfg, &spread, 0)
        .map_err(|e| e.to_string())?
        .mode;
    ensure(med > 1.0, format!("median rho'(F-DP) = {med:.3} <= 1"))?;
    Ok(format!(
        "median rho'(F-DP) = {med:.1} over 30 runs (m = {}, epsilon-tilde = {:.3}, mode {mode:?})",
        data.len(),
        spread.epsilon_tilde.unwrap_or(f64::NAN)
    ))
}

/// Criterion 9: sampled delta_w never exceeds the exact one; delta_s >= 0.
fn estimator_dominance() -> Check {
    let mut r = rng(909);
    for inst in 0..50u64 {
        let m = r.random_range(4..=10);
        let d = r.random_range(1..=3);
        let k = r.random_range(2..=3usize).min(m - 1);
        let ds = uniform_dataset(&mut r, m, d, -3.0, 3.0);
        let exact = delta_w_exact(&ds, k).map_err(|e| e.to_string())?;
        for n_est in [1, 10, 100, 1000] {
            let sampled = delta_w_randomized(&ds, k, n_est, mix_seed(inst, n_est as u64))
                .map_err(|e| e.to_string())?;
            ensure(
                sampled <= exact,
                format!("instance {inst}: {sampled} > {exact}"),
            )?;
        }
        let s_exact = delta_s_exact(&ds, k).map_err(|e| e.to_string())?;
        let s_rand = delta_s_randomized(&ds, k, 500, inst).map_err(|e| e.to_string())?;
        ensure(
            s_exact >= 0.0 && s_rand >= 0.0,
            format!("instance {inst}: negative delta_s"),
        )?;
    }
    Ok("50/50 instances: randomized delta_w <= exact, delta_s >= 0".into())
}

/// Criterion 10: streaming and online sampling contracts.
fn streaming_contracts() -> Check {
    let mut r = rng(1010);
    let mut draws = 0;
    for case in 0..50u64 {
        let m = r.random_range(10..=60);
        let stream = uniform_dataset(&mut r, m, 2, 0.0, 10.0);
        let k = r.random_range(1..=5usize);
        let n = r.random_range(k..=m);
        let syn = build_synopses_online(&stream, n).map_err(|e| e.to_string())?;
        let mut log = DrawLog::default();
        skmeans_on_synopses(&syn, k.min(syn.len()), case, Some(&mut log))
            .map_err(|e| e.to_string())?;
        let batches = MinibatchStream::for_k(&stream, k).map_err(|e| e.to_string())?;
        okmeans_traced(&batches, k.min(batches.len()), case, Some(&mut log))
            .map_err(|e| e.to_string())?;
        for p in &log.probabilities {
            let s: f64 = p.iter().sum();
            ensure(
                (s - 1.0).abs() < 1e-12,
                format!("case {case}: weights sum to {s}"),
            )?;
            draws += 1;
        }
        let a = skmeans(&stream, m, k, SynopsisBuilder::Online, case).map_err(|e| e.to_string())?;
        let b = kmeanspp_seed(&stream, k, case).map_err(|e| e.to_string())?;
        ensure(
            a.centers() == b.centers(),
            format!("case {case}: identity-synopsis skmeans differs from k-means++"),
        )?;
        let singles = MinibatchStream::fixed_size(&stream, 1).map_err(|e| e.to_string())?;
        let c = okmeans_traced(&singles, k, case, None).map_err(|e| e.to_string())?;
        let first: Vec<Point> = stream.points()[..k].to_vec();
        ensure(
            c.centers() == first.as_slice(),
            format!("case {case}: singleton okmeans differs"),
        )?;
    }
    Ok(format!(
        "{draws} draws normalized; 50/50 reduction and singleton-batch checks exact"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "1 reduction equality",
            Duration::from_secs(5),
            reduction_equality,
        ),
        ("2 k-means++ bound", Duration::from_secs(120), av_bound),
        (
            "3 noisy k-variates++ bound",
            Duration::from_secs(120),
            noisy_bound,
        ),
        (
            "4 distributed bound + ledger",
            Duration::from_secs(120),
            distributed_bound,
        ),
        (
            "5 likelihood-ratio bound",
            Duration::from_secs(600),
            likelihood_ratio_bound,
        ),
        (
            "6 epsilon-tilde regime",
            Duration::from_secs(600),
            epsilon_tilde_regime,
        ),
        (
            "7 migration spread trend",
            Duration::from_secs(60),
            migration_spread,
        ),
        (
            "8 DP comparison direction",
            Duration::from_secs(300),
            dp_direction,
        ),
        (
            "9 estimator dominance",
            Duration::from_secs(60),
            estimator_dominance,
        ),
        (
            "10 streaming/online contracts",
            Duration::from_secs(60),
            streaming_contracts,
        ),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => {
                Err(format!("{msg}; took {elapsed:.1?}, limit {limit:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("[PASS] criterion {name}: {msg} ({elapsed:.1?})"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] criterion {name}: {msg} ({elapsed:.1?})");
            }
        }
    }
    println!("acceptance: {}/10 passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
