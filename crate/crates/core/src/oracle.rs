//! Property and oracle checks across modules, each reduced to a
//! [`OracleReport`]. Failures are report entries, never panics.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::airphy::{air_local_gain, exact_aggregate, Aggregation, AirChannel, PilotBank};
use crate::baselines::{grid_search, wmmse, Wmmse};
use crate::error::{Error, Result};
use crate::evalmetrics::{format_percent, weighted_sum_rate, LinkBudget, OverheadConfig, Scheme};
use crate::gnn::{BatchInput, GainScale, PolicyKind, PolicyModel};
use crate::netgen::{derive_seed, ChannelEpisode, ChannelParams, GainMatrix, RhoMode};
use crate::train::{batch_loss, compute_norm_stats};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub name: String,
    pub instances: usize,
    /// Worst deviation over instances; statistical checks store their statistic.
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    fn new(name: impl Into<String>, instances: usize, max_deviation: f64, tolerance: f64) -> Self {
        let passed = max_deviation.is_finite() && max_deviation <= tolerance;
        Self { name: name.into(), instances, max_deviation, tolerance, passed }
    }

    fn failed(name: impl Into<String>, err: &Error) -> Self {
        Self { name: format!("{} ({err})", name.into()), instances: 0, max_deviation: f64::NAN, tolerance: 0.0, passed: false }
    }
}

/// Instance counts: `Full` follows the documented defaults, `Small` is a
/// quick smoke pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleScale {
    Small,
    Full,
}

impl OracleScale {
    fn exact_instances(self) -> usize {
        match self {
            OracleScale::Small => 20,
            OracleScale::Full => 100,
        }
    }

    fn permutation_instances(self) -> usize {
        match self {
            OracleScale::Small => 10,
            OracleScale::Full => 50,
        }
    }

    fn statistical_instances(self) -> usize {
        match self {
            OracleScale::Small => 3,
            OracleScale::Full => 10,
        }
    }
}

impl FromStr for OracleScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(OracleScale::Small),
            "full" => Ok(OracleScale::Full),
            _ => Err(Error::usage(format!("unknown oracle scale {s:?}; expected small or full"))),
        }
    }
}

/// Every check, in a fixed order.
pub fn run_all(seed: u64, scale: OracleScale) -> Vec<OracleReport> {
    let s = |stream| derive_seed(seed, 0, stream);
    let mut out = vec![
        pilot_orthonormality(s(1), scale.exact_instances()),
        noiseless_aggregation(s(2), scale.exact_instances()),
        noiseless_direct_gain(s(3), scale.exact_instances()),
    ];
    for k in [5, 20, 50] {
        out.push(noisy_aggregation(s(4), k, scale.statistical_instances()));
    }
    out.push(noisy_direct_gain(s(5), 20, scale.statistical_instances()));
    for kind in PolicyKind::ALL {
        out.push(policy_permutation(s(6), kind, scale.permutation_instances()));
    }
    out.push(estimator_permutation(s(7), scale.permutation_instances()));
    for kind in PolicyKind::ALL {
        out.push(gradient_check(s(8), kind));
    }
    out.push(wmmse_monotone(s(9), scale.exact_instances()));
    out.push(wmmse_near_grid(s(10), scale.exact_instances()));
    out.push(overhead_table());
    out.push(parameter_counts());
    out
}

pub fn to_text(reports: &[OracleReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "{} {:<40} n={:<5} dev={:.3e} tol={:.1e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.instances,
            r.max_deviation,
            r.tolerance
        );
    }
    out
}

pub fn to_csv(reports: &[OracleReport]) -> String {
    let mut out = String::from("name,instances,max_deviation,tolerance,passed\n");
    for r in reports {
        let _ = writeln!(out, "{},{},{:e},{:e},{}", r.name.replace(',', ";"), r.instances, r.max_deviation, r.tolerance, r.passed);
    }
    out
}

/// Default channel with `k` pairs at the default link density.
pub fn reference_params(k: usize, frames: usize) -> ChannelParams {
    let base = ChannelParams::default();
    let field = (k as f64 / base.link_density()).sqrt();
    ChannelParams { pairs: k, frames, field_length_m: field, ..base }
}

fn episode(k: usize, frames: usize, seed: u64) -> Result<ChannelEpisode> {
    let params = ChannelParams { rho: RhoMode::Fixed(0.7), ..reference_params(k, frames) };
    Ok(params.generate_episode(seed, 0)?.1)
}

fn random_perm(k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(rng);
    perm
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Random pilot powers in `[0, P]` over a random default-channel frame.
struct AirInstance {
    k: usize,
    powers: Vec<f64>,
    coeffs: Vec<Complex64>,
    gains: GainMatrix,
}

fn air_instance(k: usize, rng: &mut ChaCha8Rng) -> Result<AirInstance> {
    let params = reference_params(k, 1);
    let ep = params.generate_episode(rng.random(), 0)?.1;
    let p = params.max_power_mw();
    let powers = (0..k).map(|_| p * rng.random::<f64>()).collect();
    Ok(AirInstance { k, powers, coeffs: ep.coefficients(0), gains: ep.power_gains(0) })
}

/// Relative error of the air sum at each receiver; `noise` in mW.
fn aggregation_errors(inst: &AirInstance, noise: f64, seed: u64) -> Result<Vec<f64>> {
    let k = inst.k;
    let mut air = AirChannel::new(PilotBank::new(k, k, seed)?, noise, false, seed ^ 1);
    let ys = air.broadcast(&inst.powers, |j, i| inst.coeffs[j * k + i])?;
    Ok(ys
        .iter()
        .map(|y| rel(air.sum_estimate(y), exact_aggregate(&inst.powers, &inst.gains.column(y.owner), y.owner, Aggregation::Sum)))
        .collect())
}

fn direct_gain_errors(inst: &AirInstance, noise: f64, seed: u64) -> Result<Vec<f64>> {
    let k = inst.k;
    let mut air = AirChannel::new(PilotBank::new(k, k, seed)?, noise, false, seed ^ 1);
    let ys = air.broadcast(&inst.powers, |j, i| inst.coeffs[j * k + i])?;
    ys.iter()
        .map(|y| {
            let est = air_local_gain(y, air.bank().sequence(y.owner), inst.powers[y.owner])?;
            Ok(rel(est, inst.gains.direct(y.owner)))
        })
        .collect()
}

pub fn pilot_orthonormality(seed: u64, instances: usize) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let k = rng.random_range(1..=8);
        let len = k + rng.random_range(0..=4);
        match PilotBank::new(k, len, rng.random()) {
            Ok(bank) => worst = worst.max(bank.orthonormality_error()),
            Err(e) => return OracleReport::failed("pilot-orthonormality", &e),
        }
    }
    OracleReport::new("pilot-orthonormality", instances, worst, 1e-12)
}

/// Noiseless air sums equal the closed-form aggregate (K <= 8).
pub fn noiseless_aggregation(seed: u64, instances: usize) -> OracleReport {
    let name = "noiseless-aggregation";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let k = rng.random_range(2..=8);
        let errs = air_instance(k, &mut rng).and_then(|inst| aggregation_errors(&inst, 0.0, rng.random()));
        match errs {
            Ok(e) => worst = e.into_iter().fold(worst, f64::max),
            Err(e) => return OracleReport::failed(name, &e),
        }
    }
    OracleReport::new(name, instances, worst, 1e-10)
}

/// Noiseless own-pilot projection recovers the direct gain (K <= 8).
pub fn noiseless_direct_gain(seed: u64, instances: usize) -> OracleReport {
    let name = "noiseless-direct-gain";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let k = rng.random_range(1..=8);
        let errs = air_instance(k, &mut rng).and_then(|inst| direct_gain_errors(&inst, 0.0, rng.random()));
        match errs {
            Ok(e) => worst = e.into_iter().fold(worst, f64::max),
            Err(e) => return OracleReport::failed(name, &e),
        }
    }
    OracleReport::new(name, instances, worst, 1e-10)
}

/// Median relative error of the air sum at the default noise level.
pub fn noisy_aggregation(seed: u64, k: usize, instances: usize) -> OracleReport {
    let name = format!("noisy-median-error-k{k}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = ChannelParams::default().noise_mw();
    let mut errs = Vec::new();
    for _ in 0..instances {
        match air_instance(k, &mut rng).and_then(|inst| aggregation_errors(&inst, noise, rng.random())) {
            Ok(e) => errs.extend(e),
            Err(e) => return OracleReport::failed(name, &e),
        }
    }
    OracleReport::new(name, instances, median(errs), 0.01)
}

/// Median relative error of the direct-gain estimate at the default noise level.
pub fn noisy_direct_gain(seed: u64, k: usize, instances: usize) -> OracleReport {
    let name = format!("noisy-median-direct-error-k{k}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = ChannelParams::default().noise_mw();
    let mut errs = Vec::new();
    for _ in 0..instances {
        match air_instance(k, &mut rng).and_then(|inst| direct_gain_errors(&inst, noise, rng.random())) {
            Ok(e) => errs.extend(e),
            Err(e) => return OracleReport::failed(name, &e),
        }
    }
    OracleReport::new(name, instances, median(errs), 0.01)
}

fn trained_norm(seed: u64) -> Result<crate::gnn::NormStats> {
    let params = reference_params(8, 2);
    let eps: Vec<ChannelEpisode> =
        (0..20).map(|n| params.generate_episode(seed, n).map(|(_, ep)| ep)).collect::<Result<_>>()?;
    compute_norm_stats(&eps, GainScale::Log, params.noise_mw() / params.max_power_mw())
}

/// Relabelling pairs relabels the powers, for every frame.
pub fn policy_permutation(seed: u64, kind: PolicyKind, instances: usize) -> OracleReport {
    let name = format!("permutation-equivariance-{kind}");
    let run = || -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = PolicyModel::<f64>::new(kind, 3, trained_norm(seed)?, &mut rng)?;
        let mut worst = 0.0f64;
        for _ in 0..instances {
            let k = rng.random_range(2..=8);
            let frames = if kind.is_recurrent() { 4 } else { 1 };
            let ep = episode(k, frames, rng.random())?;
            let perm = random_perm(k, &mut rng);
            let base = model.episode_powers(&ep, None, 0)?;
            let moved = model.episode_powers(&ep.permuted(&perm), None, 0)?;
            for (pb, pm) in base.iter().zip(&moved) {
                for (a, &src) in perm.iter().enumerate() {
                    worst = worst.max((pm[a] - pb[src]).abs());
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => OracleReport::new(name, instances, worst, 1e-9),
        Err(e) => OracleReport::failed(name, &e),
    }
}

/// Air sum and direct-gain estimates follow a relabelling of the pairs
/// (pilots travel with their owners).
pub fn estimator_permutation(seed: u64, instances: usize) -> OracleReport {
    let name = "permutation-invariance-air-estimators";
    let run = || -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..instances {
            let k = rng.random_range(2..=8);
            let inst = air_instance(k, &mut rng)?;
            let perm = random_perm(k, &mut rng);
            let bank = PilotBank::new(k, k, rng.random())?;
            let estimates = |bank: PilotBank, powers: &[f64], coeff: &dyn Fn(usize, usize) -> Complex64| -> Result<Vec<(f64, f64)>> {
                let mut air = AirChannel::new(bank, 0.0, false, 0);
                let ys = air.broadcast(powers, coeff)?;
                ys.iter()
                    .map(|y| Ok((air.sum_estimate(y), air_local_gain(y, air.bank().sequence(y.owner), powers[y.owner])?)))
                    .collect()
            };
            let base = estimates(bank.clone(), &inst.powers, &|j, i| inst.coeffs[j * k + i])?;
            let powers: Vec<f64> = perm.iter().map(|&j| inst.powers[j]).collect();
            let moved = estimates(bank.permuted(&perm), &powers, &|a, b| inst.coeffs[perm[a] * k + perm[b]])?;
            for (a, &src) in perm.iter().enumerate() {
                worst = worst.max(rel(moved[a].0, base[src].0)).max(rel(moved[a].1, base[src].1));
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => OracleReport::new(name, instances, worst, 1e-9),
        Err(e) => OracleReport::failed(name, &e),
    }
}

/// Worst relative gap between the analytic batch-loss gradient and central
/// differences on K = 4 (10-frame unroll for the recurrent kind). Parameters
/// whose gradient is below 1e-4 are skipped: there the central difference of
/// an O(10) loss is dominated by rounding.
pub fn gradient_check(seed: u64, kind: PolicyKind) -> OracleReport {
    let name = format!("gradient-fd-{kind}");
    let run = || -> Result<(usize, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = PolicyModel::<f64>::new(kind, 3, trained_norm(seed)?, &mut rng)?;
        let frames = if kind.is_recurrent() { 10 } else { 1 };
        let eps: Vec<ChannelEpisode> = (0..2).map(|_| episode(4, frames, rng.random())).collect::<Result<_>>()?;
        let xs: Vec<BatchInput<f64>> = (0..frames)
            .map(|t| {
                let gains: Vec<GainMatrix> = eps.iter().map(|e| e.power_gains(t)).collect();
                let refs: Vec<&GainMatrix> = gains.iter().collect();
                BatchInput::new(&refs, &model.norm)
            })
            .collect::<Result<_>>()?;
        let params = ChannelParams::default();
        let snr = params.max_power_mw() / params.noise_mw();
        let analytic: Vec<f64> = batch_loss(&model, &xs, snr)?.1.into_iter().flat_map(|t| t.into_data()).collect();
        let total = analytic.len();
        let h = 1e-5;
        let (mut checked, mut worst) = (0, 0.0f64);
        for idx in (0..total).step_by(7) {
            let mut plus = model.clone();
            let mut minus = model.clone();
            nudge(&mut plus, idx, h);
            nudge(&mut minus, idx, -h);
            let fd = (batch_loss(&plus, &xs, snr)?.0 - batch_loss(&minus, &xs, snr)?.0) / (2.0 * h);
            let scale = analytic[idx].abs().max(fd.abs());
            if scale > 1e-4 {
                worst = worst.max((analytic[idx] - fd).abs() / scale);
                checked += 1;
            }
        }
        Ok((checked, worst))
    };
    match run() {
        Ok((checked, worst)) if checked > 0 => OracleReport::new(name, checked, worst, 1e-4),
        Ok(_) => OracleReport::new(name, 0, f64::NAN, 1e-4),
        Err(e) => OracleReport::failed(name, &e),
    }
}

/// Adds `h` to flat parameter `idx` in [`PolicyModel::mlps`] order.
fn nudge(model: &mut PolicyModel<f64>, mut idx: usize, h: f64) {
    for mlp in model.mlps_mut() {
        for t in mlp.params_mut() {
            if idx < t.len() {
                t.data_mut()[idx] += h;
                return;
            }
            idx -= t.len();
        }
    }
}

/// Rayleigh-faded SNRs with direct mean 10 dB and cross mean -10 dB, unit
/// power and noise: the weak-interference family where WMMSE from full
/// power is reliably near the global optimum.
pub fn weak_interference_instance(k: usize, rng: &mut ChaCha8Rng) -> GainMatrix {
    GainMatrix::from_fn(k, |j, i| {
        let mean = if i == j { 10.0 } else { 0.1 };
        mean * rng.sample::<f64, _>(rand_distr::Exp1)
    })
}

const UNIT: LinkBudget<f64> = LinkBudget { max_power: 1.0, noise: 1.0 };

/// Largest per-iteration drop of the WMMSE sum-rate.
pub fn wmmse_monotone(seed: u64, instances: usize) -> OracleReport {
    let name = "wmmse-monotone";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let k = rng.random_range(2..=8);
        let g = weak_interference_instance(k, &mut rng);
        let w = vec![1.0; k];
        let mut state = match Wmmse::new(&g, &w, UNIT) {
            Ok(s) => s,
            Err(e) => return OracleReport::failed(name, &e),
        };
        let mut last = weighted_sum_rate(&state.powers(), g.data(), &w, UNIT, 1.0);
        for _ in 0..100 {
            if let Err(e) = state.step() {
                return OracleReport::failed(name, &e);
            }
            let r = weighted_sum_rate(&state.powers(), g.data(), &w, UNIT, 1.0);
            worst = worst.max(last - r);
            last = r;
        }
    }
    OracleReport::new(name, instances, worst, 1e-9)
}

/// Largest shortfall `1 - WMMSE(100) / grid optimum` for K in {2, 3}.
pub fn wmmse_near_grid(seed: u64, instances: usize) -> OracleReport {
    let name = "wmmse-vs-grid-search";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for n in 0..instances {
        let k = 2 + n % 2;
        let g = weak_interference_instance(k, &mut rng);
        let w = vec![1.0; k];
        let p = match wmmse(&g, &w, UNIT, 100) {
            Ok(p) => p,
            Err(e) => return OracleReport::failed(name, &e),
        };
        let (_, best) = grid_search(&g, &w, UNIT, 51);
        let got = weighted_sum_rate(&p, g.data(), &w, UNIT, 1.0);
        worst = worst.max(1.0 - got / best);
    }
    OracleReport::new(name, instances, worst, 0.02)
}

/// Reference overhead ratios at K = 20: 0 / 13.3% / 23.3% / 2.7% / 0.7%.
pub fn overhead_table() -> OracleReport {
    let cfg = OverheadConfig::default();
    let expected = [(Scheme::Epa, "0"), (Scheme::Wmmse, "13.3%"), (Scheme::Mpnn, "23.3%"), (Scheme::AirMpnn, "2.7%"), (Scheme::AirMprnn, "0.7%")];
    let mismatches = expected.iter().filter(|(s, want)| format_percent(cfg.ratio(*s, 20)) != *want).count();
    OracleReport::new("overhead-ratio-table", expected.len(), mismatches as f64, 0.0)
}

/// Parameter counts of the documented structures: 2377 / 1882 / 2186.
pub fn parameter_counts() -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let norm = crate::gnn::NormStats::default();
    let mut worst = 0.0f64;
    for (kind, want) in [(PolicyKind::Mpnn, 2377), (PolicyKind::AirMpnn, 1882), (PolicyKind::AirMprnn, 2186)] {
        match PolicyModel::<f64>::new(kind, 3, norm, &mut rng) {
            Ok(m) => worst = worst.max((m.param_count() as f64 - want as f64).abs()),
            Err(e) => return OracleReport::failed("parameter-counts", &e),
        }
    }
    OracleReport::new("parameter-counts", 3, worst, 0.0)
}
