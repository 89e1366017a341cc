//! Trial runner, comparison metrics, the log-model regression and the
//! approximation bound calculator.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{log_factor, PotentialBreakdown};
use crate::privacy::{phi1, phi2};
use crate::sampling::mix_seed;

/// Seed of trial `index` under `base`.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    mix_seed(base, index as u64)
}

/// Aggregated outcome of repeated randomized runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub algorithm: String,
    pub dataset: String,
    pub k: usize,
    pub trials: usize,
    pub mean_potential: f64,
    pub stdev: f64,
    pub bound_phi: Option<f64>,
    pub bound_value: Option<f64>,
    /// Runs whose potential exceeds `bound_value` (informational: the
    /// bound holds in expectation only).
    pub violations: Option<usize>,
    pub seeds: Vec<u64>,
    pub potentials: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct TrialRow<'a> {
    algorithm: &'a str,
    dataset: &'a str,
    k: usize,
    trial: usize,
    seed: u64,
    potential: f64,
}

impl TrialReport {
    /// Attaches `Phi` and the bound `(2 + ln k) Phi`.
    pub fn with_bound(mut self, phi: f64) -> Self {
        let value = log_factor(self.k) * phi;
        self.bound_phi = Some(phi);
        self.bound_value = Some(value);
        self.violations = Some(self.potentials.iter().filter(|&&p| p > value).count());
        self
    }

    pub fn within_bound(&self) -> Option<bool> {
        self.bound_value.map(|b| self.mean_potential <= b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One CSV row per trial.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        for (trial, (&seed, &potential)) in self.seeds.iter().zip(&self.potentials).enumerate() {
            csv.serialize(TrialRow {
                algorithm: &self.algorithm,
                dataset: &self.dataset,
                k: self.k,
                trial,
                seed,
                potential,
            })?;
        }
        csv.flush()?;
        Ok(())
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (0 for fewer than two values).
pub fn stdev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs `run(seed)` for `trials` derived seeds in parallel. Results are
/// collected in trial order so the aggregates are reproducible.
pub fn run_trials<F>(
    algorithm: &str,
    dataset: &str,
    k: usize,
    trials: usize,
    base_seed: u64,
    run: F,
) -> Result<TrialReport>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..trials).map(|i| trial_seed(base_seed, i)).collect();
    let potentials: Vec<f64> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &s)| {
            run(s).map_err(|e| Error::Trial {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TrialReport {
        algorithm: algorithm.to_string(),
        dataset: dataset.to_string(),
        k,
        trials,
        mean_potential: mean(&potentials),
        stdev: stdev(&potentials),
        bound_phi: None,
        bound_value: None,
        violations: None,
        seeds,
        potentials,
    })
}

/// `100 (phi_dkm - phi_h) / phi_h`; negative when dkmeans++ wins.
pub fn rho_phi(phi_dkm: f64, phi_h: f64) -> Result<f64> {
    if !(phi_h > 0.0) {
        return Err(Error::InvalidParameter(
            "reference potential must be positive".into(),
        ));
    }
    Ok(100.0 * (phi_dkm - phi_h) / phi_h)
}

/// `phi_h / phi_kv`; above 1 when k-variates++ wins.
pub fn rho_prime_phi(phi_h: f64, phi_kv: f64) -> Result<f64> {
    if !(phi_kv > 0.0) {
        return Err(Error::InvalidParameter(
            "k-variates potential must be positive".into(),
        ));
    }
    Ok(phi_h / phi_kv)
}

/// Least-squares fit of `y = a + b ln m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    pub a: f64,
    pub b: f64,
    pub residual_rms: f64,
}

impl RegressionFit {
    pub fn predict(&self, m: f64) -> f64 {
        self.a + self.b * m.ln()
    }
}

pub fn fit_log_model(points: &[(f64, f64)]) -> Result<RegressionFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 points".into()));
    }
    if points.iter().any(|(m, y)| !(*m > 0.0) || !y.is_finite()) {
        return Err(Error::InvalidParameter(
            "sizes must be positive and values finite".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|(m, _)| m.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-12 * xs.iter().map(|x| x * x).sum::<f64>().max(1.0)) {
        return Err(Error::Degenerate("sizes must not all be equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum();
    Ok(RegressionFit {
        a,
        b,
        residual_rms: (rss / xs.len() as f64).sqrt(),
    })
}

/// Measured quantities entering each bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "setting", rename_all = "snake_case")]
pub enum BoundInputs {
    /// General k-variates++.
    General { breakdown: PotentialBreakdown },
    /// Distributed, protected: `10 phi_opt + 6 phi_F`.
    DistributedProtected { phi_opt: f64, forgy_spread: f64 },
    /// Distributed, private: `10 phi_opt + 4 phi_F + 2 phi_variance`.
    DistributedPrivate {
        phi_opt: f64,
        forgy_spread: f64,
        phi_variance: f64,
    },
    /// Streaming: `(8 + 4 eta) phi_opt + 2 phi_probe`.
    Streaming {
        phi_opt: f64,
        eta: f64,
        probe_spread: f64,
    },
    /// Online: `(4 + 32 / varsigma^2) phi_opt`.
    Online { phi_opt: f64, varsigma: f64 },
    /// DP, calibrated noise: `8 (phi_opt + m R^2 / eps_tilde^2)`.
    PrivateCalibrated {
        phi_opt: f64,
        m: usize,
        r_l1: f64,
        epsilon_tilde: f64,
    },
    /// DP, Laplace mechanism: `8 (phi_opt + m k^2 R^2 / eps^2)`.
    PrivateMechanism {
        phi_opt: f64,
        m: usize,
        r_l1: f64,
        epsilon: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub phi: f64,
    pub bound_value: f64,
}

pub fn bound_report(inputs: &BoundInputs, k: usize) -> Result<BoundReport> {
    let bad = |what: &str| {
        Err(Error::InvalidParameter(format!(
            "{what} must be finite and nonnegative"
        )))
    };
    let ok = |x: f64| x.is_finite() && x >= 0.0;
    let phi = match *inputs {
        BoundInputs::General { breakdown: b } => {
            if ![b.phi_opt, b.phi_bias, b.phi_variance, b.eta]
                .into_iter()
                .all(ok)
            {
                return bad("potential terms");
            }
            b.phi
        }
        BoundInputs::DistributedProtected {
            phi_opt,
            forgy_spread,
        } => {
            if !(ok(phi_opt) && ok(forgy_spread)) {
                return bad("phi_opt and forgy_spread");
            }
            10.0 * phi_opt + 6.0 * forgy_spread
        }
        BoundInputs::DistributedPrivate {
            phi_opt,
            forgy_spread,
            phi_variance,
        } => {
            if !(ok(phi_opt) && ok(forgy_spread) && ok(phi_variance)) {
                return bad("phi_opt, forgy_spread and phi_variance");
            }
            10.0 * phi_opt + 4.0 * forgy_spread + 2.0 * phi_variance
        }
        BoundInputs::Streaming {
            phi_opt,
            eta,
            probe_spread,
        } => {
            if !(ok(phi_opt) && ok(eta) && ok(probe_spread)) {
                return bad("phi_opt, eta and probe_spread");
            }
            (8.0 + 4.0 * eta) * phi_opt + 2.0 * probe_spread
        }
        BoundInputs::Online { phi_opt, varsigma } => {
            if !ok(phi_opt) || !(varsigma > 0.0 && varsigma <= 1.0) {
                return Err(Error::InvalidParameter(
                    "need phi_opt >= 0 and varsigma in (0, 1]".into(),
                ));
            }
            (4.0 + 32.0 / (varsigma * varsigma)) * phi_opt
        }
        BoundInputs::PrivateCalibrated {
            phi_opt,
            m,
            r_l1,
            epsilon_tilde,
        } => {
            if !(ok(phi_opt) && ok(r_l1) && epsilon_tilde > 0.0) {
                return bad("phi_opt, R and epsilon_tilde");
            }
            phi1(phi_opt, m, r_l1, epsilon_tilde)
        }
        BoundInputs::PrivateMechanism {
            phi_opt,
            m,
            r_l1,
            epsilon,
        } => {
            if !(ok(phi_opt) && ok(r_l1) && epsilon > 0.0) {
                return bad("phi_opt, R and epsilon");
            }
            phi2(phi_opt, m, k, r_l1, epsilon)
        }
    };
    Ok(BoundReport {
        phi,
        bound_value: log_factor(k) * phi,
    })
}
