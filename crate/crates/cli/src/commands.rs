use anyhow::{bail, Context, Result};
use serde_json::json;

use kvariates::datagen::{
    gen_hyperrect_clusters, migrate_points, peers_from_real, HyperrectClusterSpec, PeerMode,
};
use kvariates::distributed::{dkmeans_private, kmeans_parallel_baseline, PeerNetwork};
use kvariates::harness::{run_trials, TrialReport};
use kvariates::io::load_dataset;
use kvariates::privacy::{
    dp_kvariates, forgy_dp_baseline, gupt_style_baseline, DpConfig, DpMode, SpreadMethod,
    SpreadReport,
};
use kvariates::streaming::{okmeans_run, skmeans, MinibatchStream, SynopsisBuilder};
use kvariates::{
    enclosing_radius, kmeans_potential, kmeanspp_seed, kvariates_seed, Dataset, DensityModel,
    RadiusNorm, SeedingConfig,
};

use crate::args::{Baseline, BenchAlgorithm, Builder, Command, Common, DataArgs, Mode};
use crate::output::{centers_report, key_value_report, Report};

pub fn run(command: &Command, common: &Common) -> Result<Report> {
    let seed = common.seed;
    match command {
        Command::Seed { data, sigma } => {
            let ds = load(data)?;
            let mut cfg = SeedingConfig::kmeanspp(data.k, seed);
            if *sigma > 0.0 {
                cfg = cfg.with_densities(DensityModel::laplace_with_sigma(*sigma));
            }
            let centers = kvariates_seed(&ds, &cfg)?;
            let name = if *sigma > 0.0 {
                "kvariates"
            } else {
                "kmeanspp"
            };
            Ok(centers_report(
                name,
                data.k,
                seed,
                kmeans_potential(&ds, &centers)?,
                &centers,
                json!({ "sigma": sigma }),
            ))
        }
        Command::Dkm {
            data,
            peers,
            p,
            sigma,
        } => {
            let ds = load(data)?;
            let assignment = peers_from_real(&ds, *peers, PeerMode::Kpp, seed)?;
            let assignment = migrate_points(&assignment, *p, seed.wrapping_add(1))?;
            let mut net = PeerNetwork::from_assignment(&ds, assignment.peers())?;
            let template = if *sigma > 0.0 {
                DensityModel::laplace_with_sigma(*sigma)
            } else {
                DensityModel::Dirac
            };
            let centers = dkmeans_private(&mut net, data.k, &template, seed)?;
            let ledger = net.ledger();
            let extra = json!({
                "peers": net.n(),
                "migration_percent": p,
                "sigma": sigma,
                "ledger": {
                    "control_messages": ledger.control_messages,
                    "point_messages": ledger.point_messages,
                    "scalar_messages": ledger.scalar_messages,
                    "data_points_shared": ledger.data_points_shared,
                    "special_scalar_receipts": ledger.special_scalar_receipts,
                },
            });
            Ok(centers_report(
                "dkmeans",
                data.k,
                seed,
                kmeans_potential(&ds, &centers)?,
                &centers,
                extra,
            ))
        }
        Command::Skm { data, n, builder } => {
            let ds = load(data)?;
            let b = match builder {
                Builder::Online => SynopsisBuilder::Online,
                Builder::Uniform => SynopsisBuilder::Uniform,
            };
            let centers = skmeans(&ds, *n, data.k, b, seed)?;
            Ok(centers_report(
                "skmeans",
                data.k,
                seed,
                kmeans_potential(&ds, &centers)?,
                &centers,
                json!({ "synopses": n }),
            ))
        }
        Command::Okm { data, batch } => {
            let ds = load(data)?;
            let stream = match batch {
                Some(size) => MinibatchStream::fixed_size(&ds, *size)?,
                None => MinibatchStream::for_k(&ds, data.k)?,
            };
            let centers = okmeans_run(&stream, data.k, seed)?;
            let extra = json!({ "batches": stream.len(), "batch_sizes": stream.batch_sizes() });
            Ok(centers_report(
                "okmeans",
                data.k,
                seed,
                kmeans_potential(&ds, &centers)?,
                &centers,
                extra,
            ))
        }
        Command::Dp {
            data,
            epsilon,
            mode,
            nest,
        } => {
            let ds = load(data)?;
            let spread = SpreadReport::compute(
                &ds,
                data.k,
                SpreadMethod::Randomized { n_est: *nest },
                seed,
            )?
            .with_epsilon(*epsilon);
            let cfg = DpConfig {
                epsilon: *epsilon,
                mode: match mode {
                    Mode::Calibrated => DpMode::Calibrated,
                    Mode::Mechanism => DpMode::LaplaceMechanism,
                    Mode::Auto => DpMode::Auto,
                },
                r_l1: spread.r_l1,
                k: data.k,
            };
            let run = dp_kvariates(&ds, &cfg, &spread, seed).context("private seeding failed")?;
            let extra = json!({
                "epsilon": epsilon,
                "mode": run.mode,
                "sigma": run.sigma,
                "epsilon_tilde": run.epsilon_tilde,
                "phi_noise_term": run.phi_noise_term,
                "spread": spread,
            });
            Ok(centers_report(
                "dp-kvariates",
                data.k,
                seed,
                kmeans_potential(&ds, &run.centers)?,
                &run.centers,
                extra,
            ))
        }
        Command::Estimate {
            data,
            epsilon,
            nest,
            exact,
        } => {
            let ds = load(data)?;
            let method = if *exact {
                SpreadMethod::Exact
            } else {
                SpreadMethod::Randomized { n_est: *nest }
            };
            let mut spread = SpreadReport::compute(&ds, data.k, method, seed)?;
            if let Some(e) = epsilon {
                spread = spread.with_epsilon(*e);
            }
            Ok(key_value_report(serde_json::to_value(&spread)?))
        }
        Command::Baseline {
            data,
            algorithm,
            epsilon,
        } => {
            let ds = load(data)?;
            let need_epsilon = || epsilon.context("--epsilon is required for private baselines");
            let r = enclosing_radius(&ds, RadiusNorm::L1);
            let (name, centers) = match algorithm {
                Baseline::KmeansParallel => (
                    "kmeans-parallel",
                    kmeans_parallel_baseline(&ds, data.k, seed)?,
                ),
                Baseline::ForgyDp => (
                    "forgy-dp",
                    forgy_dp_baseline(&ds, data.k, need_epsilon()?, r, seed)?,
                ),
                Baseline::Gupt => (
                    "gupt",
                    gupt_style_baseline(&ds, data.k, need_epsilon()?, r, seed)?,
                ),
            };
            let extra = json!({ "epsilon": epsilon, "R_l1": r });
            Ok(centers_report(
                name,
                data.k,
                seed,
                kmeans_potential(&ds, &centers)?,
                &centers,
                extra,
            ))
        }
        Command::Gen { d, m, p } => {
            let synthetic = gen_hyperrect_clusters(&HyperrectClusterSpec::new(*d, *m, seed))?;
            let peers = migrate_points(&synthetic.peers, *p, seed.wrapping_add(1))?;
            let points: Vec<&[f64]> = synthetic.data.points().iter().map(|a| a.coords()).collect();
            let json = json!({
                "d": d,
                "m": synthetic.data.len(),
                "clusters": synthetic.boxes.len(),
                "points": points,
                "peers": peers.peers(),
                "boxes": synthetic.boxes,
            });
            let mut header: Vec<String> = (0..*d).map(|j| format!("x{j}")).collect();
            header.push("peer".into());
            let rows = points
                .iter()
                .zip(peers.peers())
                .map(|(a, peer)| {
                    a.iter()
                        .map(f64::to_string)
                        .chain([peer.to_string()])
                        .collect()
                })
                .collect();
            Ok(Report { json, header, rows })
        }
        Command::Bench {
            data,
            trials,
            algorithms,
        } => {
            let ds = load(data)?;
            let name = data.data.display().to_string();
            let algorithms = if algorithms.is_empty() {
                vec![
                    BenchAlgorithm::Kmeanspp,
                    BenchAlgorithm::KmeansParallel,
                    BenchAlgorithm::Forgy,
                ]
            } else {
                algorithms.clone()
            };
            let reports = algorithms
                .iter()
                .map(|&a| bench_one(&ds, &name, data.k, *trials, seed, a))
                .collect::<Result<Vec<_>>>()?;
            let rows = reports
                .iter()
                .flat_map(|r| {
                    r.seeds
                        .iter()
                        .zip(&r.potentials)
                        .enumerate()
                        .map(move |(t, (s, p))| {
                            vec![
                                r.algorithm.clone(),
                                t.to_string(),
                                s.to_string(),
                                p.to_string(),
                            ]
                        })
                })
                .collect();
            Ok(Report {
                json: serde_json::to_value(&reports)?,
                header: ["algorithm", "trial", "seed", "potential"]
                    .map(String::from)
                    .to_vec(),
                rows,
            })
        }
    }
}

fn load(args: &DataArgs) -> Result<Dataset> {
    let ds = load_dataset(&args.data)
        .with_context(|| format!("cannot read dataset {}", args.data.display()))?;
    if args.k == 0 || args.k > ds.len() {
        bail!(
            "--k must lie in 1..={} for this dataset, got {}",
            ds.len(),
            args.k
        );
    }
    Ok(ds)
}

fn bench_one(
    ds: &Dataset,
    name: &str,
    k: usize,
    trials: usize,
    seed: u64,
    algorithm: BenchAlgorithm,
) -> Result<TrialReport> {
    let report = match algorithm {
        BenchAlgorithm::Kmeanspp => run_trials("kmeanspp", name, k, trials, seed, |s| {
            kmeans_potential(ds, kmeanspp_seed(ds, k, s)?)
        }),
        BenchAlgorithm::KmeansParallel => {
            run_trials("kmeans-parallel", name, k, trials, seed, |s| {
                kmeans_potential(ds, kmeans_parallel_baseline(ds, k, s)?)
            })
        }
        BenchAlgorithm::Forgy => run_trials("forgy", name, k, trials, seed, |s| {
            kmeans_potential(ds, forgy_dp_baseline(ds, k, f64::INFINITY, 0.0, s)?)
        }),
        BenchAlgorithm::Okm => {
            let stream = MinibatchStream::for_k(ds, k)?;
            run_trials("okmeans", name, k, trials, seed, |s| {
                kmeans_potential(ds, okmeans_run(&stream, k, s)?)
            })
        }
    };
    Ok(report?)
}
