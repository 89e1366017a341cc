//! Differential privacy for k-variates++: neighborhood spread estimators,
//! calibration of the effective privacy parameter, Laplace-noised seeding,
//! an exact likelihood oracle with its ratio bound, and two DP baselines.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::geometry::{
    enclosing_radius, sq_dist_unchecked, CenterSet, Dataset, Point, Provenance, RadiusNorm,
};
use crate::sampling::{
    mix_seed, pick_uniform, rng_from_seed, sample_distinct, sample_product_laplace,
};
use crate::seeding::{kmeanspp_seed, kvariates_seed, lloyd_refine, SeedingConfig};

/// Largest dataset accepted by the exact spread estimators.
pub const SPREAD_EXACT_MAX_POINTS: usize = 12;
/// Guards of [`likelihood_exact`].
pub const LIKELIHOOD_MAX_POINTS: usize = 7;
pub const LIKELIHOOD_MAX_K: usize = 3;
/// Lloyd iterations run inside every GUPT-style block.
pub const GUPT_LLOYD_ITERS: usize = 20;

/// `f(k) = 4^(2k - 4)`.
pub fn f_k(k: usize) -> f64 {
    4f64.powi(2 * k as i32 - 4)
}

fn ln_f_k(k: usize) -> f64 {
    (2.0 * k as f64 - 4.0) * 4f64.ln()
}

/// All `r`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::with_capacity(r), &mut out);
    out
}

/// Per-point squared distance to the nearest of `centers`.
fn nn_dists(data: &Dataset, centers: &[&Point]) -> Vec<f64> {
    data.points()
        .iter()
        .map(|a| {
            centers
                .iter()
                .map(|c| sq_dist_unchecked(a.coords(), c.coords()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn check_spread_inputs(data: &Dataset, k: usize) -> Result<()> {
    if k < 2 || k > data.len() {
        return Err(Error::InvalidK { k, m: data.len() });
    }
    Ok(())
}

fn guard_exact(data: &Dataset) -> Result<()> {
    if data.len() > SPREAD_EXACT_MAX_POINTS {
        return Err(Error::GuardExceeded {
            what: "exact spread enumeration",
            limit: SPREAD_EXACT_MAX_POINTS,
            got: data.len(),
        });
    }
    Ok(())
}

fn delta_w_from_min(data: &Dataset, min_sum: f64) -> Result<f64> {
    let r = enclosing_radius(data, RadiusNorm::L2);
    if min_sum <= 0.0 || r == 0.0 {
        return Err(Error::Degenerate(
            "residual potential can vanish, delta_w is infinite".into(),
        ));
    }
    Ok(r * r / min_sum)
}

/// Residual potential of `N` after dropping the point that contributes most.
fn residual_min(data: &Dataset, n_set: &[usize]) -> f64 {
    let centers: Vec<&Point> = n_set.iter().map(|&i| data.point(i)).collect();
    let d = nn_dists(data, &centers);
    (0..d.len())
        .map(|dropped| sum_without(&d, dropped))
        .fold(f64::INFINITY, f64::min)
}

/// Sum in index order skipping `dropped`.
fn sum_without(d: &[f64], dropped: usize) -> f64 {
    d.iter()
        .enumerate()
        .filter(|(i, _)| *i != dropped)
        .map(|(_, x)| x)
        .sum()
}

/// Exact `delta_w = R^2 / min_{N, B} sum_{a in B} |a - nn_N(a)|^2` with
/// `|N| = k - 1`, `|B| = m - 1` and `R` the L2 diameter.
pub fn delta_w_exact(data: &Dataset, k: usize) -> Result<f64> {
    check_spread_inputs(data, k)?;
    guard_exact(data)?;
    let min_sum = combinations(data.len(), k - 1)
        .iter()
        .map(|n| residual_min(data, n))
        .fold(f64::INFINITY, f64::min);
    delta_w_from_min(data, min_sum)
}

/// `delta_w` over `n_est` random `(N, B)` pairs. Never exceeds the exact
/// value since the minimum runs over fewer pairs.
pub fn delta_w_randomized(data: &Dataset, k: usize, n_est: usize, seed: u64) -> Result<f64> {
    check_spread_inputs(data, k)?;
    if n_est == 0 {
        return Err(Error::NoValidSample("n_est must be positive".into()));
    }
    let m = data.len();
    let min_sum = (0..n_est as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_from_seed(mix_seed(seed, trial));
            let n_set = sample_distinct_fast(&mut rng, m, k - 1);
            let dropped = pick_uniform(&mut rng, m);
            let centers: Vec<&Point> = n_set.iter().map(|&i| data.point(i)).collect();
            sum_without(&nn_dists(data, &centers), dropped)
        })
        .reduce(|| f64::INFINITY, f64::min);
    delta_w_from_min(data, min_sum)
}

fn sample_distinct_fast(rng: &mut crate::sampling::SeedRng, n: usize, k: usize) -> Vec<usize> {
    crate::sampling::sample_distinct_sparse(rng, n, k)
}

/// Sufficient test that `subset` is packed against `n_set`: its centroid
/// is strictly closer to every member than any point of `n_set` is.
pub fn n_packed_check(subset: &[Point], n_set: &[Point]) -> bool {
    let Ok(x) = crate::geometry::mean_of_points(subset) else {
        return false;
    };
    subset.iter().all(|a| {
        let own = sq_dist_unchecked(a.coords(), x.coords());
        n_set
            .iter()
            .all(|n| own < sq_dist_unchecked(a.coords(), n.coords()))
    })
}

/// Potential ratio before/after adding `x`; `None` when only the added
/// center drives the potential to zero.
fn monotonic_ratio(before: &[f64], x: &Point, data: &Dataset) -> Option<f64> {
    let num: f64 = before.iter().sum();
    let den: f64 = data
        .points()
        .iter()
        .zip(before)
        .map(|(a, b)| b.min(sq_dist_unchecked(a.coords(), x.coords())))
        .sum();
    if den > 0.0 {
        Some(num / den)
    } else if num == 0.0 {
        Some(1.0)
    } else {
        None
    }
}

/// Exact `delta_s`: every `N` with `1 <= |N| <= k - 1` and every nonempty
/// subset of the remaining points that passes [`n_packed_check`]
/// (singletons always qualify unless they coincide with a point of `N`).
/// Configurations whose added center zeroes the potential are skipped.
pub fn delta_s_exact(data: &Dataset, k: usize) -> Result<f64> {
    check_spread_inputs(data, k)?;
    guard_exact(data)?;
    let m = data.len();
    let mut best: f64 = 1.0;
    for size in 1..k {
        for n_set in combinations(m, size) {
            let n_pts: Vec<Point> = n_set.iter().map(|&i| data.point(i).clone()).collect();
            let refs: Vec<&Point> = n_pts.iter().collect();
            let before = nn_dists(data, &refs);
            let rest: Vec<usize> = (0..m).filter(|i| !n_set.contains(i)).collect();
            for mask in 1u32..(1u32 << rest.len()) {
                let members: Vec<Point> = rest
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask & (1 << b) != 0)
                    .map(|(_, &i)| data.point(i).clone())
                    .collect();
                if !n_packed_check(&members, &n_pts) {
                    continue;
                }
                let x = crate::geometry::mean_of_points(&members)?;
                if let Some(r) = monotonic_ratio(&before, &x, data) {
                    best = best.max(r);
                }
            }
        }
    }
    Ok(best - 1.0)
}

/// `delta_s` over `n_est` random `(N, x)` pairs with `x` a data point
/// outside `N` and no packing test, which can only over-estimate.
pub fn delta_s_randomized(data: &Dataset, k: usize, n_est: usize, seed: u64) -> Result<f64> {
    check_spread_inputs(data, k)?;
    let m = data.len();
    let best = (0..n_est as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_from_seed(mix_seed(seed, trial));
            let size = 1 + pick_uniform(&mut rng, (k - 1).min(m - 1));
            let n_set = sample_distinct_fast(&mut rng, m, size);
            let x = loop {
                let i = pick_uniform(&mut rng, m);
                if !n_set.contains(&i) {
                    break i;
                }
            };
            let centers: Vec<&Point> = n_set.iter().map(|&i| data.point(i)).collect();
            let before = nn_dists(data, &centers);
            monotonic_ratio(&before, data.point(x), data)
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(f64::max(x, y)),
                (x, None) => x,
                (None, y) => y,
            },
        );
    best.map(|r| (r - 1.0).max(0.0))
        .ok_or_else(|| Error::NoValidSample("every delta_s trial had a zero denominator".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadMethod {
    Exact,
    Randomized { n_est: usize },
}

/// Neighborhood spread summary feeding privacy calibration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadReport {
    pub delta_w: f64,
    pub delta_s: f64,
    /// L1 enclosing radius, used by the noise calibration.
    #[serde(rename = "R_l1")]
    pub r_l1: f64,
    /// L2 diameter, used inside `delta_w`.
    #[serde(rename = "R_l2_diam")]
    pub r_l2_diam: f64,
    pub k: usize,
    pub method: &'static str,
    pub n_est: Option<usize>,
    pub f_k: f64,
    pub epsilon: Option<f64>,
    pub epsilon_tilde: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
}

impl SpreadReport {
    pub fn compute(data: &Dataset, k: usize, method: SpreadMethod, seed: u64) -> Result<Self> {
        let (delta_w, delta_s, n_est) = match method {
            SpreadMethod::Exact => (delta_w_exact(data, k)?, delta_s_exact(data, k)?, None),
            SpreadMethod::Randomized { n_est } => (
                delta_w_randomized(data, k, n_est, mix_seed(seed, 0))?,
                delta_s_randomized(data, k, n_est, mix_seed(seed, 1))?,
                Some(n_est),
            ),
        };
        Ok(Self {
            delta_w,
            delta_s,
            r_l1: enclosing_radius(data, RadiusNorm::L1),
            r_l2_diam: enclosing_radius(data, RadiusNorm::L2),
            k,
            method: if n_est.is_some() {
                "randomized"
            } else {
                "exact"
            },
            n_est,
            f_k: f_k(k),
            epsilon: None,
            epsilon_tilde: None,
            sigma1: None,
            sigma2: None,
        })
    }

    /// Fills the privacy fields for budget `epsilon`; `epsilon_tilde` and
    /// `sigma1` stay empty when the calibration is undefined.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self.epsilon_tilde = epsilon_tilde(epsilon, self.delta_w, self.delta_s, self.k)
            .ok()
            .filter(|e| *e > 0.0);
        self.sigma1 = self.epsilon_tilde.map(|e| sigma1(self.r_l1, e));
        self.sigma2 = Some(sigma2(self.k, self.r_l1, epsilon));
        self
    }
}

/// Effective privacy parameter
/// `ln((e^eps - (1 + dw)^(k-1)) / (f(k) dw (1 + ds)^(k-1)))`.
pub fn epsilon_tilde(epsilon: f64, delta_w: f64, delta_s: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidK { k, m: 0 });
    }
    if !(epsilon > 0.0) || !(delta_w > 0.0) || !(delta_s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need epsilon > 0, delta_w > 0, delta_s >= 0; got {epsilon}, {delta_w}, {delta_s}"
        )));
    }
    let km1 = (k - 1) as f64;
    let spread_term = (km1 * delta_w.ln_1p()).exp();
    let numerator = epsilon.exp() - spread_term;
    if !(numerator > 0.0) {
        return Err(Error::EpsilonTildeUndefined {
            reason: format!(
                "exp(epsilon) = {} <= (1 + delta_w)^(k-1) = {spread_term}",
                epsilon.exp()
            ),
        });
    }
    Ok(numerator.ln() - ln_f_k(k) - delta_w.ln() - km1 * delta_s.ln_1p())
}

/// Calibrated noise level `2 sqrt(2) R / epsilon_tilde`.
pub fn sigma1(r_l1: f64, epsilon_tilde: f64) -> f64 {
    2.0 * SQRT_2 * r_l1 / epsilon_tilde
}

/// Laplace-mechanism noise level `2 sqrt(2) k R / epsilon`.
pub fn sigma2(k: usize, r_l1: f64, epsilon: f64) -> f64 {
    2.0 * SQRT_2 * k as f64 * r_l1 / epsilon
}

/// `Phi_1 = 8 (phi_opt + m R^2 / epsilon_tilde^2)`.
pub fn phi1(phi_opt: f64, m: usize, r_l1: f64, epsilon_tilde: f64) -> f64 {
    8.0 * (phi_opt + m as f64 * r_l1 * r_l1 / (epsilon_tilde * epsilon_tilde))
}

/// `Phi_2 = 8 (phi_opt + m k^2 R^2 / epsilon^2)`.
pub fn phi2(phi_opt: f64, m: usize, k: usize, r_l1: f64, epsilon: f64) -> f64 {
    let k = k as f64;
    8.0 * (phi_opt + m as f64 * k * k * r_l1 * r_l1 / (epsilon * epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DpMode {
    /// Noise `sigma1` from the calibrated `epsilon_tilde`.
    Calibrated,
    /// Noise `sigma2`, the plain Laplace mechanism.
    LaplaceMechanism,
    /// Calibrated when `epsilon_tilde > epsilon`, otherwise the mechanism.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpConfig {
    pub epsilon: f64,
    pub mode: DpMode,
    /// L1 enclosing radius of the data.
    pub r_l1: f64,
    pub k: usize,
}

/// Output of [`dp_kvariates`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpRun {
    pub centers: CenterSet,
    /// Mode actually applied (never `Auto`).
    pub mode: DpMode,
    pub sigma: f64,
    pub epsilon_tilde: Option<f64>,
    /// `Phi - 8 phi_opt`: the noise part of the matching bound.
    pub phi_noise_term: f64,
}

impl DpRun {
    /// Bound potential `Phi_1` or `Phi_2` for a known `phi_opt`.
    pub fn phi(&self, phi_opt: f64) -> f64 {
        8.0 * phi_opt + self.phi_noise_term
    }
}

/// k-variates++ with identity probes and product-Laplace densities whose
/// per-coordinate standard deviation is `sigma1` or `sigma2`.
pub fn dp_kvariates(
    data: &Dataset,
    cfg: &DpConfig,
    spread: &SpreadReport,
    seed: u64,
) -> Result<DpRun> {
    if spread.k != cfg.k {
        return Err(Error::InvalidParameter(format!(
            "spread report computed for k={}, config has k={}",
            spread.k, cfg.k
        )));
    }
    if !(cfg.r_l1 > 0.0) || !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidParameter(
            "epsilon and the L1 radius must be positive".into(),
        ));
    }
    let tilde = epsilon_tilde(cfg.epsilon, spread.delta_w, spread.delta_s, cfg.k).and_then(|e| {
        if e > 0.0 {
            Ok(e)
        } else {
            Err(Error::EpsilonTildeUndefined {
                reason: format!("epsilon_tilde = {e} is not positive"),
            })
        }
    });
    let mode = match (cfg.mode, &tilde) {
        (DpMode::Calibrated, Err(_)) => return Err(tilde.unwrap_err()),
        (DpMode::Calibrated, Ok(_)) => DpMode::Calibrated,
        (DpMode::LaplaceMechanism, _) => DpMode::LaplaceMechanism,
        (DpMode::Auto, Ok(e)) if *e > cfg.epsilon => DpMode::Calibrated,
        (DpMode::Auto, _) => DpMode::LaplaceMechanism,
    };
    let m = data.len();
    let (sigma, phi_noise_term) = match mode {
        DpMode::Calibrated => {
            let e = *tilde.as_ref().expect("calibrated mode has epsilon_tilde");
            (sigma1(cfg.r_l1, e), phi1(0.0, m, cfg.r_l1, e))
        }
        _ => (
            sigma2(cfg.k, cfg.r_l1, cfg.epsilon),
            phi2(0.0, m, cfg.k, cfg.r_l1, cfg.epsilon),
        ),
    };
    let seeding = SeedingConfig::kmeanspp(cfg.k, seed)
        .with_densities(DensityModel::laplace_with_sigma(sigma));
    Ok(DpRun {
        centers: kvariates_seed(data, &seeding)?,
        mode,
        sigma,
        epsilon_tilde: tilde.ok(),
        phi_noise_term,
    })
}

/// All orderings of `0..k`.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Exact density (or mass, for discrete densities) of the unordered output
/// `centers` of k-variates++ with identity probes on `data`.
///
/// Sums, over the distinct orderings of `centers`, the product of the
/// per-step mixtures `sum_a q_t(a) p_a(c_t)`, where `q_t` is recomputed
/// from the prefix of emitted centers exactly as the sampler does
/// (uniform or weight-proportional first pick, uniform fallback when every
/// weight vanishes).
pub fn likelihood_exact(
    centers: &CenterSet,
    data: &Dataset,
    densities: &DensityModel,
    k: usize,
) -> Result<f64> {
    let m = data.len();
    if m > LIKELIHOOD_MAX_POINTS {
        return Err(Error::GuardExceeded {
            what: "likelihood enumeration (points)",
            limit: LIKELIHOOD_MAX_POINTS,
            got: m,
        });
    }
    if k > LIKELIHOOD_MAX_K {
        return Err(Error::GuardExceeded {
            what: "likelihood enumeration (k)",
            limit: LIKELIHOOD_MAX_K,
            got: k,
        });
    }
    if k == 0 || centers.len() != k {
        return Err(Error::InvalidK { k, m });
    }
    densities.validate(data)?;
    let cs = centers.centers();
    for c in cs {
        crate::geometry::check_dim(data.dim(), c.dim())?;
    }
    let mut seen: Vec<Vec<&Point>> = Vec::new();
    let mut total = 0.0;
    for perm in permutations(k) {
        let order: Vec<&Point> = perm.iter().map(|&i| &cs[i]).collect();
        if seen.contains(&order) {
            continue;
        }
        total += ordered_likelihood(&order, data, densities);
        seen.push(order);
    }
    Ok(total)
}

fn ordered_likelihood(order: &[&Point], data: &Dataset, densities: &DensityModel) -> f64 {
    let m = data.len();
    let mut dists = vec![f64::INFINITY; m];
    let mut product = 1.0;
    for (t, c) in order.iter().enumerate() {
        let q: Vec<f64> = if t == 0 {
            let tw = data.total_weight();
            (0..m).map(|i| data.weight(i) / tw).collect()
        } else {
            let w: Vec<f64> = (0..m).map(|i| data.weight(i) * dists[i]).collect();
            let s: f64 = w.iter().sum();
            if s > 0.0 {
                w.iter().map(|x| x / s).collect()
            } else {
                vec![1.0 / m as f64; m]
            }
        };
        let step: f64 = (0..m)
            .filter(|&i| q[i] > 0.0)
            .map(|i| q[i] * densities.pdf_for(i, data, c))
            .sum();
        product *= step;
        if product == 0.0 {
            return 0.0;
        }
        for (i, a) in data.points().iter().enumerate() {
            dists[i] = dists[i].min(sq_dist_unchecked(a.coords(), c.coords()));
        }
    }
    product
}

/// Right-hand side of the likelihood-ratio bound:
/// `(1 + dw)^(k-1) + f(k) dw (1 + ds)^(k-1) rho`.
pub fn lr_bound_rhs(delta_w: f64, delta_s: f64, k: usize, rho: f64) -> f64 {
    let km1 = (k as f64) - 1.0;
    (km1 * delta_w.ln_1p()).exp() + f_k(k) * delta_w * (km1 * delta_s.ln_1p()).exp() * rho
}

/// Pointwise likelihood-ratio constant of product-Laplace densities with
/// per-coordinate standard deviation `sigma` on an L1 ball of radius `r`.
pub fn rho_laplace(r_l1: f64, sigma: f64) -> f64 {
    (2.0 * SQRT_2 * r_l1 / sigma).exp()
}

/// High-probability likelihood ratio for i.i.d. samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IidRatioReport {
    pub g: f64,
    /// Whether `k <= (delta^2 / (4 rho_D)) sqrt(m)`.
    pub condition_holds: bool,
    pub k_max: f64,
    /// `1 + rho_D^k g`.
    pub ratio_bound: f64,
}

/// `g = 4 / m^(1/4 + 1/(d+1)) + (64 / k^(2/d))^k rho(2R) / m`.
pub fn iid_ratio_g(m: f64, k: usize, d: usize, rho_2r: f64) -> f64 {
    let (kf, df) = (k as f64, d as f64);
    4.0 / m.powf(0.25 + 1.0 / (df + 1.0)) + (64.0 / kf.powf(2.0 / df)).powi(k as i32) * rho_2r / m
}

/// Evaluates the i.i.d. likelihood-ratio bound, with `rho(2R)` taken from
/// product-Laplace densities of standard deviation `sigma`.
pub fn iid_ratio_report(
    m: usize,
    k: usize,
    d: usize,
    r: f64,
    sigma: f64,
    rho_d: f64,
    delta: f64,
) -> Result<IidRatioReport> {
    if !(delta > 0.0 && delta < 0.5)
        || !(rho_d >= 1.0)
        || m == 0
        || k == 0
        || d == 0
        || !(sigma > 0.0)
    {
        return Err(Error::InvalidParameter(
            "need m, k, d >= 1, sigma > 0, rho_D >= 1 and delta in (0, 1/2)".into(),
        ));
    }
    Ok(iid_ratio_from_rho(
        m,
        k,
        d,
        rho_laplace(2.0 * r, sigma),
        rho_d,
        delta,
    ))
}

/// [`iid_ratio_report`] with `rho(2R)` given directly.
pub fn iid_ratio_from_rho(
    m: usize,
    k: usize,
    d: usize,
    rho_2r: f64,
    rho_d: f64,
    delta: f64,
) -> IidRatioReport {
    let mf = m as f64;
    let g = iid_ratio_g(mf, k, d, rho_2r);
    let k_max = delta * delta / (4.0 * rho_d) * mf.sqrt();
    IidRatioReport {
        g,
        condition_holds: k as f64 <= k_max * (1.0 + 1e-12),
        k_max,
        ratio_bound: 1.0 + rho_d.powi(k as i32) * g,
    }
}

/// Forgy initialization inside the Laplace mechanism: `k` distinct data
/// points, each noised with standard deviation `sigma2`.
pub fn forgy_dp_baseline(
    data: &Dataset,
    k: usize,
    epsilon: f64,
    r_l1: f64,
    seed: u64,
) -> Result<CenterSet> {
    let m = data.len();
    if k == 0 || k > m {
        return Err(Error::InvalidK { k, m });
    }
    let sigma = sigma2(k, r_l1, epsilon);
    let mut rng = rng_from_seed(seed);
    let mut out = CenterSet::with_capacity(k);
    for (t, i) in sample_distinct(&mut rng, m, k).into_iter().enumerate() {
        let x = if sigma > 0.0 {
            sample_product_laplace(data.point(i), sigma, &mut rng)
        } else {
            data.point(i).clone()
        };
        out.push(
            x,
            Provenance {
                iteration: t + 1,
                reference: Some(i),
                source: None,
                noisy: sigma > 0.0,
            },
        );
    }
    Ok(out)
}

/// Number of GUPT-style blocks, `ceil(m^0.4)`.
pub fn gupt_blocks(m: usize) -> usize {
    ((m as f64).powf(0.4) - 1e-9).ceil().max(1.0) as usize
}

/// Greedy matching of `centers` onto `reference`: repeatedly pairs the
/// closest unmatched couple. Returns, for every reference slot, the index
/// of its matched center.
fn greedy_align(reference: &[Point], centers: &[Point]) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(reference.len() * centers.len());
    for (i, r) in reference.iter().enumerate() {
        for (j, c) in centers.iter().enumerate() {
            pairs.push((sq_dist_unchecked(r.coords(), c.coords()), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut slot = vec![usize::MAX; reference.len()];
    let mut used = vec![false; centers.len()];
    for (_, i, j) in pairs {
        if slot[i] == usize::MAX && !used[j] {
            slot[i] = j;
            used[j] = true;
        }
    }
    slot
}

/// Subsample-and-aggregate baseline: `ceil(m^0.4)` random blocks each
/// clustered by k-means++ and Lloyd, aligned to block 1, averaged, then
/// noised with standard deviation `2 sqrt(2) k R / (l epsilon)`.
pub fn gupt_style_baseline(
    data: &Dataset,
    k: usize,
    epsilon: f64,
    r_l1: f64,
    seed: u64,
) -> Result<CenterSet> {
    let m = data.len();
    let blocks = gupt_blocks(m);
    if k == 0 || m / blocks < k {
        return Err(Error::InvalidParameter(format!(
            "{blocks} blocks of {} points cannot hold k={k} clusters",
            m / blocks
        )));
    }
    let mut rng = rng_from_seed(seed);
    let order = sample_distinct(&mut rng, m, m);
    let base = m / blocks;
    let extra = m % blocks;
    let mut parts = Vec::with_capacity(blocks);
    let mut start = 0;
    for b in 0..blocks {
        let len = base + usize::from(b < extra);
        parts.push(&order[start..start + len]);
        start += len;
    }
    let solutions: Vec<Vec<Point>> = parts
        .par_iter()
        .enumerate()
        .map(|(b, idx)| -> Result<Vec<Point>> {
            let block = data.subset(idx)?;
            let s = mix_seed(seed, b as u64 + 1);
            let init = kmeanspp_seed(&block, k, s)?;
            Ok(lloyd_refine(&block, &init, GUPT_LLOYD_ITERS)?.into_points())
        })
        .collect::<Result<_>>()?;

    let reference = &solutions[0];
    let mut sums: Vec<Vec<f64>> = reference.iter().map(|p| p.coords().to_vec()).collect();
    for sol in &solutions[1..] {
        for (slot, j) in greedy_align(reference, sol).into_iter().enumerate() {
            for (s, x) in sums[slot].iter_mut().zip(sol[j].coords()) {
                *s += x;
            }
        }
    }
    let sigma = sigma2(k, r_l1, epsilon) / blocks as f64;
    let mut out = CenterSet::with_capacity(k);
    for (t, s) in sums.into_iter().enumerate() {
        let mean = Point::new(s.into_iter().map(|x| x / blocks as f64).collect())?;
        let x = if sigma > 0.0 {
            sample_product_laplace(&mean, sigma, &mut rng)
        } else {
            mean
        };
        out.push(
            x,
            Provenance {
                iteration: t + 1,
                reference: None,
                source: None,
                noisy: sigma > 0.0,
            },
        );
    }
    Ok(out)
}
