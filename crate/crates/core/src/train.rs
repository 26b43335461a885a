//! Centralized unsupervised training and dataset evaluation.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::airphy::{AirChannel, Execution, PilotBank};
use crate::baselines::{air_wmmse, epa, wmmse};
use crate::diffmath::{AdamState, Graph, Tensor};
use crate::error::{Error, Result};
use crate::evalmetrics::{weighted_sum_rate, LinkBudget, OverheadConfig, Scheme};
use crate::gnn::{mean_sum_rate, BatchInput, GainScale, Mode, NormStats, PolicyKind, PolicyModel};
use crate::netgen::{derive_seed, ChannelEpisode, GainMatrix};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    /// Iterations between learning-rate decays.
    pub decay_interval: usize,
    /// Share of layouts held out for the learning curve.
    pub validation_fraction: f64,
    /// Iterations between validation evaluations; 0 disables them.
    pub validation_interval: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            batch_size: 50,
            learning_rate: 0.002,
            lr_decay: 0.9,
            decay_interval: 100,
            validation_fraction: 0.1,
            validation_interval: 10,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.decay_interval == 0 {
            return Err(Error::config("batch size and decay interval must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::config("learning rate must be positive and decay in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::config("validation fraction must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, iteration: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi((iteration / self.decay_interval) as i32)
    }
}

/// Mean and standard deviation of direct and interference power gains over
/// every layout and frame, in the domain given by `scale`.
pub fn compute_norm_stats(episodes: &[ChannelEpisode], scale: GainScale, floor: f64) -> Result<NormStats> {
    let probe = NormStats { scale, floor, ..NormStats::default() };
    let (mut direct, mut cross) = (Moments::default(), Moments::default());
    for ep in episodes {
        let k = ep.pairs();
        for t in 0..ep.frames() {
            for j in 0..k {
                for i in 0..k {
                    let g = probe.transform(ep.power_gain(t, j, i));
                    if i == j {
                        direct.push(g);
                    } else {
                        cross.push(g);
                    }
                }
            }
        }
    }
    let (direct_mean, direct_std) = direct.finish("direct")?;
    let (cross_mean, cross_std) = cross.finish("interference")?;
    let stats = NormStats { scale, floor, direct_mean, direct_std, cross_mean, cross_std };
    stats.validate()?;
    Ok(stats)
}

#[derive(Default)]
struct Moments {
    values: Vec<f64>,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.values.push(v);
    }

    /// Two-pass population statistics; sorting makes them order-independent.
    fn finish(mut self, what: &str) -> Result<(f64, f64)> {
        if self.values.is_empty() {
            return Err(Error::Degenerate(format!("no {what} links in the training data")));
        }
        self.values.sort_by(f64::total_cmp);
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 0.0) || !(std > mean.abs() * 1e-12) {
            return Err(Error::Degenerate(format!("{what} gains have zero variance")));
        }
        Ok((mean, std))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub iteration: usize,
    pub loss: f64,
    /// Mean sum-rate on the held-out layouts, without overhead; NaN when not evaluated.
    pub validation: f64,
    pub learning_rate: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<S> {
    pub model: PolicyModel<S>,
    pub curve: Vec<CurvePoint>,
}

/// Splits `episodes` into (training, validation) by position.
pub fn split_validation(episodes: &[ChannelEpisode], fraction: f64) -> (&[ChannelEpisode], &[ChannelEpisode]) {
    let held = ((episodes.len() as f64) * fraction).round() as usize;
    let held = held.min(episodes.len().saturating_sub(1));
    episodes.split_at(episodes.len() - held)
}

/// Trains `model` in place against the negative mean weighted sum-rate.
///
/// Single-frame kinds see one random frame per sampled layout; the
/// recurrent kind unrolls the whole episode.
pub fn train<S: Scalar>(
    mut model: PolicyModel<S>,
    episodes: &[ChannelEpisode],
    budget: LinkBudget<f64>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<S>> {
    cfg.validate()?;
    let (train_set, val_set) = split_validation(episodes, cfg.validation_fraction);
    if train_set.is_empty() {
        return Err(Error::config("training needs at least one layout"));
    }
    let snr = budget.max_power / budget.noise;
    let mut adam = AdamState::new(model.mlps().into_iter().flat_map(|(_, m)| m.params()));
    let mut curve = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let batch_seed = derive_seed(cfg.seed, it as u64, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(batch_seed);
        let b = cfg.batch_size.min(train_set.len());
        let picks: Vec<&ChannelEpisode> = index::sample(&mut rng, train_set.len(), b).iter().map(|n| &train_set[n]).collect();

        let xs = if model.kind().is_recurrent() {
            (0..picks[0].frames()).map(|t| batch_frame(&picks, |_| t, &model.norm)).collect::<Result<Vec<_>>>()?
        } else {
            vec![batch_frame(&picks, |ep| rng.random_range(0..ep.frames()), &model.norm)?]
        };
        let (loss_value, flat) = batch_loss(&model, &xs, snr).map_err(|e| match e {
            Error::NonFinite { op } => Error::Diverged { iteration: it, batch_seed, op },
            other => other,
        })?;
        let lr = cfg.learning_rate_at(it);
        adam.step(model.mlps_mut().into_iter().flat_map(|m| m.params_mut()), &flat, S::of(lr))?;

        let validation = if cfg.validation_interval > 0
            && !val_set.is_empty()
            && ((it + 1) % cfg.validation_interval == 0 || it + 1 == cfg.iterations)
        {
            mean_ideal_rate(&model, val_set, budget)?
        } else {
            f64::NAN
        };
        curve.push(CurvePoint { iteration: it + 1, loss: loss_value, validation, learning_rate: lr });
    }
    Ok(TrainOutcome { model, curve })
}

fn batch_frame<S: Scalar>(picks: &[&ChannelEpisode], mut frame: impl FnMut(&ChannelEpisode) -> usize, norm: &NormStats) -> Result<BatchInput<S>> {
    let gains: Vec<GainMatrix> = picks.iter().map(|ep| ep.power_gains(frame(ep))).collect();
    let refs: Vec<&GainMatrix> = gains.iter().collect();
    BatchInput::new(&refs, norm)
}

/// Negative mean sum-rate of one batch in ideal mode, and its gradient per
/// parameter tensor in [`PolicyModel::mlps`] order. Single-frame kinds use
/// `frames[0]`; the recurrent kind unrolls all frames and averages them.
pub fn batch_loss<S: Scalar>(model: &PolicyModel<S>, frames: &[BatchInput<S>], snr: f64) -> Result<(f64, Vec<Tensor<S>>)> {
    let first = frames.first().ok_or_else(|| Error::config("a batch needs at least one frame"))?;
    let mut g = Graph::new();
    let bp = model.bind(&mut g)?;
    let ones = |g: &mut Graph<S>, x: &BatchInput<S>| g.constant(Tensor::filled(x.nodes(), 1, S::one()));
    let rate = if model.kind().is_recurrent() {
        let mut state = model.bootstrap(&mut g, first);
        let mut total = None;
        for x in frames {
            let (p, next) = model.step(&mut g, &bp, state, x, &mut Mode::Ideal)?;
            state = next;
            let w = ones(&mut g, x);
            let r = mean_sum_rate(&mut g, p, x, w, snr)?;
            total = Some(match total {
                None => r,
                Some(acc) => g.add(acc, r)?,
            });
        }
        let total = total.expect("nonempty frames");
        g.scale(total, S::one() / S::of(frames.len() as f64))
    } else {
        let p = model.forward(&mut g, &bp, first, &mut Mode::Ideal)?;
        let w = ones(&mut g, first);
        mean_sum_rate(&mut g, p, first, w, snr)?
    };
    let loss = g.scale(rate, -S::one());
    let value = g.value(loss).data()[0].as_f64();
    let grads = g.backward(loss)?;
    let flat = bp.mlps().iter().zip(model.mlps()).flat_map(|(b, (_, m))| b.grads(m, &grads)).collect();
    Ok((value, flat))
}

/// Mean over layouts and frames of the overhead-free sum-rate, ideal mode.
pub fn mean_ideal_rate<S: Scalar>(model: &PolicyModel<S>, episodes: &[ChannelEpisode], budget: LinkBudget<f64>) -> Result<f64> {
    let mut total = 0.0;
    for ep in episodes {
        let powers = model.episode_powers(ep, None, 0)?;
        total += frame_average(ep, &powers, budget, 1.0);
    }
    Ok(total / episodes.len() as f64)
}

fn frame_average(ep: &ChannelEpisode, powers: &[Vec<f64>], budget: LinkBudget<f64>, efficiency: f64) -> f64 {
    let w = vec![1.0; ep.pairs()];
    let sum: f64 = powers
        .iter()
        .enumerate()
        .map(|(t, p)| weighted_sum_rate(p, ep.power_gains(t).data(), &w, budget, efficiency))
        .sum();
    sum / powers.len() as f64
}

/// A policy to evaluate.
#[derive(Clone, Copy, Debug)]
pub enum Policy<'a, S> {
    Epa,
    Wmmse { iterations: usize },
    AirWmmse,
    Gnn(&'a PolicyModel<S>),
}

impl<S> Policy<'_, S> {
    pub fn scheme(&self) -> Scheme
    where
        S: Scalar,
    {
        match self {
            Policy::Epa => Scheme::Epa,
            Policy::Wmmse { .. } => Scheme::Wmmse,
            Policy::AirWmmse => Scheme::AirWmmse,
            Policy::Gnn(m) => m.kind().scheme(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Over-the-air schemes use simulated pilot signals instead of closed forms.
    pub physical: bool,
    /// Subtract the expected noise energy from received pilot energy.
    pub noise_bias_correction: bool,
    /// Pilot length; 0 means one symbol per pair.
    pub pilot_length: usize,
    /// Extra recurrent rounds on the first frame.
    pub warm_start: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { physical: true, noise_bias_correction: false, pilot_length: 0, warm_start: 0, seed: 17 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub scheme: Scheme,
    pub pairs: usize,
    pub overhead_symbols: u64,
    pub overhead_ratio: f64,
    pub mean_sum_rate: f64,
    /// Frame-averaged sum-rate of each layout.
    pub per_layout: Vec<f64>,
}

/// Mean overhead-discounted sum-rate of `policy` over `episodes`.
pub fn evaluate<S: Scalar>(
    policy: Policy<'_, S>,
    episodes: &[ChannelEpisode],
    budget: LinkBudget<f64>,
    overhead: &OverheadConfig,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    overhead.validate()?;
    let first = episodes.first().ok_or_else(|| Error::usage("evaluation needs at least one layout"))?;
    let k = first.pairs();
    if episodes.iter().any(|ep| ep.pairs() != k) {
        return Err(Error::usage("all evaluation layouts must have the same number of pairs"));
    }
    let scheme = policy.scheme();
    let efficiency = overhead.prefactor(scheme, k as u64);
    let pilot_len = if opts.pilot_length == 0 { k } else { opts.pilot_length };
    let bank = PilotBank::new(k, pilot_len, derive_seed(opts.seed, 0, 4))?;
    let noise = budget.noise;
    let mut per_layout = Vec::with_capacity(episodes.len());
    for (n, ep) in episodes.iter().enumerate() {
        let mut air = AirChannel::new(bank.clone(), noise, opts.noise_bias_correction, derive_seed(opts.seed, n as u64, 3));
        let w = vec![1.0; k];
        let powers: Vec<Vec<f64>> = match policy {
            Policy::Epa => (0..ep.frames()).map(|_| epa(k)).collect(),
            Policy::Wmmse { iterations } => (0..ep.frames())
                .map(|t| wmmse(&ep.power_gains(t), &w, budget, iterations))
                .collect::<Result<_>>()?,
            Policy::AirWmmse => (0..ep.frames())
                .map(|t| {
                    let coeffs = ep.coefficients(t);
                    let exec = if opts.physical { Execution::Physical(&mut air) } else { Execution::Ideal };
                    air_wmmse(&coeffs, &w, budget, exec)
                })
                .collect::<Result<_>>()?,
            Policy::Gnn(model) => {
                let physical = opts.physical && model.kind() != PolicyKind::Mpnn;
                let channel = physical.then_some((&mut air, budget.max_power));
                model.episode_powers(ep, channel, opts.warm_start)?
            }
        };
        per_layout.push(frame_average(ep, &powers, budget, efficiency));
    }
    let mean_sum_rate = per_layout.iter().sum::<f64>() / per_layout.len() as f64;
    Ok(EvalReport {
        scheme,
        pairs: k,
        overhead_symbols: overhead.symbols(scheme, k as u64),
        overhead_ratio: overhead.ratio(scheme, k as u64),
        mean_sum_rate,
        per_layout,
    })
}
