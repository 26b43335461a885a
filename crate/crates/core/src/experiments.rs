//! Evaluation sweeps behind the result tables and figures.
//!
//! Every experiment yields CSV text whose first line is
//! `# schema=<name> v<SCHEMA_VERSION> experiment=<id>`, followed by a header
//! row and data rows sorted by grid key. Nothing time-dependent is written,
//! so identical specs and seeds give byte-identical files.
//!
//! Sweep schema (`airgnn-sweep`):
//! `scheme,pairs,delta_csi,delta_mp,frame_symbols,rho,gamma,mean_sum_rate,overhead_ratio,normalized,seed`.
//! `rho` and `gamma` are empty unless swept; `normalized` is the sum-rate
//! divided by Air-MPNN's at the same grid point.
//!
//! Curve schema (`airgnn-curve`):
//! `scheme,iteration,pairs,delta_csi,delta_mp,frame_symbols,sum_rate,learning_rate,seed`.
//! Baseline rows repeat at every validated iteration with an empty learning rate.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::{load_model, save_model};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evalmetrics::{OverheadConfig, Scheme};
use crate::gnn::{PolicyKind, PolicyModel};
use crate::netgen::{field_length_for_density_factor, ChannelEpisode, ChannelParams, Dataset, RhoMode};
use crate::train::{compute_norm_stats, evaluate, split_validation, train, Policy, TrainOutcome};

pub const SCHEMA_VERSION: u32 = 1;

/// WMMSE iterations used by every experiment.
pub const WMMSE_ITERATIONS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    Table3,
    Fig5Curve,
    Fig6SizeSweep,
    Fig7OverheadSweep,
    Fig8FramelenSweep,
    Table4RhoSweep,
    Fig9DensitySweep,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::Table3,
        ExperimentId::Fig5Curve,
        ExperimentId::Fig6SizeSweep,
        ExperimentId::Fig7OverheadSweep,
        ExperimentId::Fig8FramelenSweep,
        ExperimentId::Table4RhoSweep,
        ExperimentId::Fig9DensitySweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Table3 => "table3",
            ExperimentId::Fig5Curve => "fig5-curve",
            ExperimentId::Fig6SizeSweep => "fig6-size-sweep",
            ExperimentId::Fig7OverheadSweep => "fig7-overhead-sweep",
            ExperimentId::Fig8FramelenSweep => "fig8-framelen-sweep",
            ExperimentId::Table4RhoSweep => "table4-rho-sweep",
            ExperimentId::Fig9DensitySweep => "fig9-density-sweep",
        }
    }

    /// Schemes reported by the experiment, in row order.
    pub fn schemes(self) -> &'static [Scheme] {
        const TABLE: &[Scheme] = &[Scheme::Epa, Scheme::Wmmse, Scheme::Mpnn, Scheme::AirMpnn, Scheme::AirMprnn];
        match self {
            ExperimentId::Table3 | ExperimentId::Fig5Curve => TABLE,
            ExperimentId::Table4RhoSweep => &[Scheme::AirMpnn, Scheme::AirMprnn],
            _ => &Scheme::ALL,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL.into_iter().find(|id| id.name() == s).ok_or_else(|| {
            let known: Vec<&str> = ExperimentId::ALL.iter().map(|id| id.name()).collect();
            Error::usage(format!("unknown experiment {s:?}; expected one of {}", known.join(", ")))
        })
    }
}

/// Grid of one experiment. Axes an experiment does not sweep hold a single
/// value taken from the run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub pairs: Vec<usize>,
    /// `(δ_csi, δ_mp)` settings.
    pub overheads: Vec<(u64, u64)>,
    pub frame_symbols: Vec<u64>,
    /// Fixed test-set correlation; empty keeps the configured ρ mode.
    pub rhos: Vec<f64>,
    /// Density factors `β_train / β_test`; empty keeps the configured field.
    pub gammas: Vec<f64>,
    pub test_layouts: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn defaults(id: ExperimentId, cfg: &RunConfig) -> Self {
        let oh = &cfg.overhead;
        let base = (oh.csi_symbols, oh.mp_symbols);
        let mut spec = ExperimentSpec {
            id,
            pairs: vec![cfg.channel.pairs],
            overheads: vec![base],
            frame_symbols: vec![oh.frame_symbols],
            rhos: Vec::new(),
            gammas: Vec::new(),
            test_layouts: cfg.data.test_layouts,
            seed: cfg.data.test_seed,
        };
        match id {
            ExperimentId::Table3 | ExperimentId::Fig5Curve => {}
            ExperimentId::Fig6SizeSweep => {
                spec.pairs = vec![10, 20, 30, 40, 50];
                spec.overheads = vec![(0, 0), (1, 5), (2, 20)];
            }
            ExperimentId::Fig7OverheadSweep => {
                spec.overheads = vec![(0, 0), (1, 5), (1, 10), (2, 10), (2, 20), (4, 40)];
            }
            ExperimentId::Fig8FramelenSweep => {
                spec.pairs = vec![30];
                spec.frame_symbols = vec![250, 500, 1000, 2000, 3000, 4000, 6000, 8000];
            }
            ExperimentId::Table4RhoSweep => {
                spec.pairs = vec![30];
                spec.rhos = vec![0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.99];
            }
            ExperimentId::Fig9DensitySweep => {
                spec.gammas = vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
            }
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() || self.overheads.is_empty() || self.frame_symbols.is_empty() {
            return Err(Error::usage("experiment grids must be nonempty"));
        }
        if self.pairs.contains(&0) || self.frame_symbols.contains(&0) {
            return Err(Error::usage("pair counts and frame lengths must be positive"));
        }
        if self.rhos.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::usage("correlation values must lie in [0, 1)"));
        }
        if self.gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::usage("density factors must be positive"));
        }
        if self.test_layouts == 0 {
            return Err(Error::usage("experiments need at least one test layout"));
        }
        Ok(())
    }
}

/// Directory holding one checkpoint per policy kind, named `<kind>.ckpt`.
#[derive(Clone, Debug)]
pub struct Checkpoints {
    dir: PathBuf,
}

impl Checkpoints {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, kind: PolicyKind) -> PathBuf {
        self.dir.join(format!("{kind}.ckpt"))
    }

    pub fn load(&self, kind: PolicyKind) -> Result<PolicyModel<f64>> {
        let path = self.path(kind);
        if !path.exists() {
            return Err(Error::data(format!(
                "missing checkpoint {}; create it with `airgnn train --kind {kind} --out {}` \
                 or run `airgnn experiment fig5-curve --checkpoints {}`",
                path.display(),
                path.display(),
                self.dir.display()
            )));
        }
        load_model(&path)
    }
}

/// Normalization from `episodes`, a fresh model per the configuration, and
/// a full training run.
pub fn fit(cfg: &RunConfig, kind: PolicyKind, episodes: &[ChannelEpisode]) -> Result<TrainOutcome<f64>> {
    let budget = cfg.budget();
    let (train_set, _) = split_validation(episodes, cfg.train.validation_fraction);
    let norm = compute_norm_stats(train_set, cfg.model.gain_scale, budget.noise / budget.max_power)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.model.init_seed);
    let mut model = PolicyModel::new(kind, cfg.model.layers, norm, &mut rng)?;
    model.aggregation = cfg.model.aggregation_for(kind);
    train(model, episodes, budget, &cfg.train)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub pairs: usize,
    pub delta_csi: u64,
    pub delta_mp: u64,
    pub frame_symbols: u64,
    pub rho: Option<f64>,
    pub gamma: Option<f64>,
    pub mean_sum_rate: f64,
    pub overhead_ratio: f64,
    pub normalized: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub scheme: Scheme,
    pub iteration: usize,
    pub pairs: usize,
    pub delta_csi: u64,
    pub delta_mp: u64,
    pub frame_symbols: u64,
    pub sum_rate: f64,
    pub learning_rate: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentTable {
    Sweep(Vec<SweepRow>),
    Curve(Vec<CurveRow>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub id: ExperimentId,
    pub table: ExperimentTable,
}

impl ExperimentOutput {
    pub fn sweep_rows(&self) -> &[SweepRow] {
        match &self.table {
            ExperimentTable::Sweep(rows) => rows,
            ExperimentTable::Curve(_) => &[],
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        match &self.table {
            ExperimentTable::Sweep(rows) => {
                let _ = writeln!(out, "# schema=airgnn-sweep v{SCHEMA_VERSION} experiment={}", self.id);
                out.push_str("scheme,pairs,delta_csi,delta_mp,frame_symbols,rho,gamma,mean_sum_rate,overhead_ratio,normalized,seed\n");
                for r in rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{:.6},{:.6},{},{}",
                        r.scheme,
                        r.pairs,
                        r.delta_csi,
                        r.delta_mp,
                        r.frame_symbols,
                        opt(r.rho),
                        opt(r.gamma),
                        r.mean_sum_rate,
                        r.overhead_ratio,
                        r.normalized.map(|v| format!("{v:.6}")).unwrap_or_default(),
                        r.seed
                    );
                }
            }
            ExperimentTable::Curve(rows) => {
                let _ = writeln!(out, "# schema=airgnn-curve v{SCHEMA_VERSION} experiment={}", self.id);
                out.push_str("scheme,iteration,pairs,delta_csi,delta_mp,frame_symbols,sum_rate,learning_rate,seed\n");
                for r in rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{:.6},{},{}",
                        r.scheme,
                        r.iteration,
                        r.pairs,
                        r.delta_csi,
                        r.delta_mp,
                        r.frame_symbols,
                        r.sum_rate,
                        opt(r.learning_rate),
                        r.seed
                    );
                }
            }
        }
        out
    }
}

/// Runs one experiment. `fig5-curve` trains every kind (writing checkpoints
/// into `checkpoints`); the others load the checkpoints they need.
pub fn run_experiment(spec: &ExperimentSpec, cfg: &RunConfig, checkpoints: &Checkpoints) -> Result<ExperimentOutput> {
    spec.validate()?;
    cfg.validate()?;
    let table = match spec.id {
        ExperimentId::Fig5Curve => ExperimentTable::Curve(learning_curves(spec, cfg, checkpoints)?),
        _ => ExperimentTable::Sweep(sweep(spec, cfg, checkpoints)?),
    };
    Ok(ExperimentOutput { id: spec.id, table })
}

fn learning_curves(spec: &ExperimentSpec, cfg: &RunConfig, checkpoints: &Checkpoints) -> Result<Vec<CurveRow>> {
    let k = spec.pairs[0];
    let (delta_csi, delta_mp) = spec.overheads[0];
    let frame_symbols = spec.frame_symbols[0];
    let overhead = OverheadConfig { csi_symbols: delta_csi, mp_symbols: delta_mp, frame_symbols, ..cfg.overhead };
    let params = ChannelParams { pairs: k, ..cfg.channel.clone() };
    let data = Dataset::generate(&params, cfg.data.train_layouts, cfg.data.train_seed)?;
    let (_, validation) = split_validation(&data.episodes, cfg.train.validation_fraction);
    let budget = cfg.budget();
    let seed = cfg.data.train_seed;
    let row = |scheme, iteration, sum_rate, learning_rate| CurveRow {
        scheme,
        iteration,
        pairs: k,
        delta_csi,
        delta_mp,
        frame_symbols,
        sum_rate,
        learning_rate,
        seed,
    };

    let mut rows = Vec::new();
    let mut validated = Vec::new();
    std::fs::create_dir_all(checkpoints.dir())?;
    for kind in PolicyKind::ALL {
        let outcome = fit(cfg, kind, &data.episodes)?;
        save_model(&outcome.model, &checkpoints.path(kind))?;
        let factor = overhead.prefactor(kind.scheme(), k as u64);
        for p in outcome.curve.iter().filter(|p| !p.validation.is_nan()) {
            rows.push(row(kind.scheme(), p.iteration, factor * p.validation, Some(p.learning_rate)));
            validated.push(p.iteration);
        }
    }
    validated.sort_unstable();
    validated.dedup();
    let ideal = crate::train::EvalOptions { physical: false, ..cfg.eval };
    for (policy, scheme) in [(Policy::Epa, Scheme::Epa), (Policy::Wmmse { iterations: WMMSE_ITERATIONS }, Scheme::Wmmse)] {
        let rate = evaluate::<f64>(policy, validation, budget, &overhead, &ideal)?.mean_sum_rate;
        rows.extend(validated.iter().map(|&it| row(scheme, it, rate, None)));
    }
    rows.sort_by(|a, b| (a.scheme, a.iteration).cmp(&(b.scheme, b.iteration)));
    Ok(rows)
}

/// One test set in a sweep.
#[derive(Clone, Copy, Debug)]
struct Point {
    pairs: usize,
    rho: Option<f64>,
    gamma: Option<f64>,
}

fn sweep(spec: &ExperimentSpec, cfg: &RunConfig, checkpoints: &Checkpoints) -> Result<Vec<SweepRow>> {
    let schemes = spec.id.schemes();
    let mut models = Vec::new();
    for kind in PolicyKind::ALL {
        if schemes.contains(&kind.scheme()) {
            models.push(checkpoints.load(kind)?);
        }
    }
    let rhos: Vec<Option<f64>> = if spec.rhos.is_empty() { vec![None] } else { spec.rhos.iter().copied().map(Some).collect() };
    let gammas: Vec<Option<f64>> =
        if spec.gammas.is_empty() { vec![None] } else { spec.gammas.iter().copied().map(Some).collect() };
    let mut points = Vec::new();
    for &pairs in &spec.pairs {
        for &rho in &rhos {
            for &gamma in &gammas {
                points.push(Point { pairs, rho, gamma });
            }
        }
    }

    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(points.len());
    let results: Vec<Result<Vec<SweepRow>>> = if workers <= 1 {
        points.iter().map(|p| sweep_point(spec, cfg, &models, *p)).collect()
    } else {
        let chunk = points.len().div_ceil(workers);
        std::thread::scope(|s| {
            let handles: Vec<_> = points
                .chunks(chunk)
                .map(|part| {
                    let models = &models;
                    s.spawn(move || part.iter().map(|p| sweep_point(spec, cfg, models, *p)).collect::<Vec<_>>())
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
        })
    };
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| sort_key(a).partial_cmp(&sort_key(b)).expect("finite grid keys"));
    Ok(rows)
}

type SortKey = (usize, u64, u64, u64, f64, f64, Scheme);

fn sort_key(r: &SweepRow) -> SortKey {
    (r.pairs, r.delta_csi, r.delta_mp, r.frame_symbols, r.rho.unwrap_or(-1.0), r.gamma.unwrap_or(-1.0), r.scheme)
}

/// Overhead-free rates per scheme on one test set, then one row per
/// overhead setting and frame length (the overhead only rescales).
fn sweep_point(spec: &ExperimentSpec, cfg: &RunConfig, models: &[PolicyModel<f64>], point: Point) -> Result<Vec<SweepRow>> {
    let mut params = ChannelParams { pairs: point.pairs, ..cfg.channel.clone() };
    if let Some(rho) = point.rho {
        params.rho = RhoMode::Fixed(rho);
    }
    if let Some(gamma) = point.gamma {
        params.field_length_m = field_length_for_density_factor(cfg.channel.field_length_m, gamma);
    }
    let data = Dataset::generate(&params, spec.test_layouts, spec.seed)?;
    let budget = cfg.budget();
    let free = OverheadConfig::free(cfg.overhead.frame_symbols);

    let mut raw = Vec::new();
    for &scheme in spec.id.schemes() {
        let policy = match scheme {
            Scheme::Epa => Policy::Epa,
            Scheme::Wmmse => Policy::Wmmse { iterations: WMMSE_ITERATIONS },
            Scheme::AirWmmse => Policy::AirWmmse,
            _ => Policy::Gnn(models.iter().find(|m| m.kind().scheme() == scheme).expect("model loaded for scheme")),
        };
        raw.push((scheme, evaluate(policy, &data.episodes, budget, &free, &cfg.eval)?.mean_sum_rate));
    }

    let k = point.pairs as u64;
    let mut rows = Vec::new();
    for &(delta_csi, delta_mp) in &spec.overheads {
        for &frame_symbols in &spec.frame_symbols {
            let oh = OverheadConfig { csi_symbols: delta_csi, mp_symbols: delta_mp, frame_symbols, ..cfg.overhead };
            let rated: Vec<(Scheme, f64)> = raw.iter().map(|&(s, r)| (s, oh.prefactor(s, k) * r)).collect();
            let reference = rated.iter().find(|(s, _)| *s == Scheme::AirMpnn).map(|&(_, r)| r).filter(|r| *r > 0.0);
            for &(scheme, rate) in &rated {
                rows.push(SweepRow {
                    scheme,
                    pairs: point.pairs,
                    delta_csi,
                    delta_mp,
                    frame_symbols,
                    rho: point.rho,
                    gamma: point.gamma,
                    mean_sum_rate: rate,
                    overhead_ratio: oh.ratio(scheme, k),
                    normalized: reference.map(|r| rate / r),
                    seed: spec.seed,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.channel.pairs = 4;
        cfg.channel.frames = 3;
        cfg.channel.field_length_m = 150.0;
        cfg.data.train_layouts = 20;
        cfg.data.test_layouts = 4;
        cfg.train.iterations = 3;
        cfg.train.batch_size = 5;
        cfg.train.validation_interval = 1;
        cfg
    }

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
        }
        assert!(matches!("fig99".parse::<ExperimentId>(), Err(Error::Usage(_))));
    }

    #[test]
    fn missing_checkpoint_names_the_training_command() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config();
        let spec = ExperimentSpec::defaults(ExperimentId::Table3, &cfg);
        let err = run_experiment(&spec, &cfg, &Checkpoints::new(dir.path())).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err:?}");
        assert!(err.to_string().contains("airgnn train --kind mpnn"), "{err}");
    }

    #[test]
    fn table3_ratios_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config();
        let ck = Checkpoints::new(dir.path());
        let curve = run_experiment(&ExperimentSpec::defaults(ExperimentId::Fig5Curve, &cfg), &cfg, &ck).unwrap();
        assert!(curve.to_csv().starts_with("# schema=airgnn-curve v1 experiment=fig5-curve\n"));
        cfg.channel.pairs = 20;
        cfg.data.test_layouts = 2;
        let spec = ExperimentSpec::defaults(ExperimentId::Table3, &cfg);
        let a = run_experiment(&spec, &cfg, &ck).unwrap();
        let b = run_experiment(&spec, &cfg, &ck).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let ratios: Vec<String> = a.sweep_rows().iter().map(|r| format!("{:.1}", 100.0 * r.overhead_ratio)).collect();
        assert_eq!(ratios, ["0.0", "13.3", "23.3", "2.7", "0.7"]);
    }

    #[test]
    fn validation_rejects_empty_grids() {
        let cfg = tiny_config();
        let mut spec = ExperimentSpec::defaults(ExperimentId::Fig6SizeSweep, &cfg);
        spec.pairs.clear();
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::defaults(ExperimentId::Table4RhoSweep, &cfg);
        spec.rhos.push(1.0);
        assert!(spec.validate().is_err());
    }
}
