//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary
//! (`harness = false`) so the lines appear in `cargo test` output; exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use airgnn::checkpoint::save_model;
use airgnn::config::RunConfig;
use airgnn::evalmetrics::{format_percent, OverheadConfig, Scheme};
use airgnn::experiments::{fit, run_experiment, Checkpoints, ExperimentId, ExperimentSpec, WMMSE_ITERATIONS};
use airgnn::gnn::PolicyKind;
use airgnn::netgen::{ChannelParams, Dataset};
use airgnn::oracle::{self, OracleReport};
use airgnn::train::{evaluate, Policy};
use airgnn::PolicyModelF64;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn from_reports(reports: &[OracleReport]) -> Outcome {
    let detail = reports.iter().map(|r| format!("{} {:.2e}/{:.0e}", r.name, r.max_deviation, r.tolerance)).collect::<Vec<_>>();
    outcome(reports.iter().all(|r| r.passed), detail.join("; "))
}

fn report(id: usize, title: &str, started: Instant, o: &Outcome) -> bool {
    println!(
        "criterion {id} {}: {title} [{:.1}s] {}",
        if o.passed { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        o.detail
    );
    o.passed
}

fn parameter_counts() -> Outcome {
    let r = oracle::parameter_counts();
    outcome(r.passed, "mpnn 2377, air-mpnn 1882, air-mprnn 2186 (reference count 2258; the configured layer sizes give 2186)")
}

fn overhead_ratios() -> Outcome {
    let cfg = OverheadConfig::default();
    let schemes = [Scheme::Epa, Scheme::Wmmse, Scheme::Mpnn, Scheme::AirMpnn, Scheme::AirMprnn];
    let got: Vec<String> = schemes.iter().map(|&s| format_percent(cfg.ratio(s, 20))).collect();
    outcome(got == ["0", "13.3%", "23.3%", "2.7%", "0.7%"], got.join(" / "))
}

struct Trained {
    cfg: RunConfig,
    mpnn: PolicyModelF64,
    air_mpnn: PolicyModelF64,
    air_mprnn: PolicyModelF64,
}

fn train_all() -> Result<Trained, airgnn::Error> {
    let mut cfg = RunConfig::default();
    cfg.train.validation_interval = 0;
    let data = Dataset::generate(&cfg.channel, cfg.data.train_layouts, cfg.data.train_seed)?;
    let mut models = Vec::new();
    for kind in PolicyKind::ALL {
        let t = Instant::now();
        models.push(fit(&cfg, kind, &data.episodes)?.model);
        println!("  trained {kind} on {} layouts x {} iterations in {:.1}s", data.len(), cfg.train.iterations, t.elapsed().as_secs_f64());
    }
    let air_mprnn = models.pop().expect("three kinds");
    let air_mpnn = models.pop().expect("three kinds");
    let mpnn = models.pop().expect("three kinds");
    Ok(Trained { cfg, mpnn, air_mpnn, air_mprnn })
}

fn end_to_end(t: &Trained) -> Result<Outcome, airgnn::Error> {
    let cfg = &t.cfg;
    let test = Dataset::generate(&cfg.channel, cfg.data.test_layouts, cfg.data.test_seed)?;
    let free = OverheadConfig::free(cfg.overhead.frame_symbols);
    let policies = [
        Policy::Epa,
        Policy::Wmmse { iterations: WMMSE_ITERATIONS },
        Policy::Gnn(&t.mpnn),
        Policy::Gnn(&t.air_mpnn),
        Policy::Gnn(&t.air_mprnn),
    ];
    let mut with = Vec::new();
    let mut without = Vec::new();
    for p in policies {
        with.push(evaluate(p, &test.episodes, cfg.budget(), &cfg.overhead, &cfg.eval)?.mean_sum_rate);
        without.push(evaluate(p, &test.episodes, cfg.budget(), &free, &cfg.eval)?.mean_sum_rate);
    }
    let [epa, wmmse, mpnn, air_mpnn, air_mprnn] = [with[0], with[1], with[2], with[3], with[4]];
    let ordering = air_mprnn >= air_mpnn && air_mpnn > wmmse && wmmse > epa && epa > mpnn;
    let within = |x: f64, target: f64| (x / target - 1.0).abs() <= 0.10;
    let bands = within(air_mpnn, 84.80) && within(air_mprnn, 85.76);
    let near: Vec<f64> = without[2..].iter().map(|r| r / without[1]).collect();
    let near_ok = near.iter().all(|&r| r >= 0.95);
    let detail = format!(
        "with overhead EPA {epa:.2} WMMSE {wmmse:.2} MPNN {mpnn:.2} Air-MPNN {air_mpnn:.2} Air-MPRNN {air_mprnn:.2} \
         (ordering {}, +-10% bands {}); without overhead WMMSE {:.2}, GNN/WMMSE {:.1}% / {:.1}% / {:.1}% (>= 95% {})",
        ok(ordering),
        ok(bands),
        without[1],
        100.0 * near[0],
        100.0 * near[1],
        100.0 * near[2],
        ok(near_ok)
    );
    Ok(outcome(ordering && bands && near_ok, detail))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "violated"
    }
}

fn overhead_cliff(t: &Trained) -> Result<Outcome, airgnn::Error> {
    let cfg = &t.cfg;
    let hard = OverheadConfig { csi_symbols: 2, mp_symbols: 20, ..cfg.overhead };
    let params = ChannelParams { pairs: 30, ..cfg.channel.clone() };
    let test = Dataset::generate(&params, 20, cfg.data.test_seed)?;
    let r = evaluate(Policy::Gnn(&t.mpnn), &test.episodes, cfg.budget(), &hard, &cfg.eval)?;
    let symbols = hard.symbols(Scheme::Mpnn, 30);
    Ok(outcome(
        r.mean_sum_rate == 0.0 && r.per_layout.iter().all(|&v| v == 0.0),
        format!("K=30 MPNN overhead {symbols} of {} symbols, sum-rate {}", hard.frame_symbols, r.mean_sum_rate),
    ))
}

fn rho_sweep(t: &Trained) -> Result<Outcome, airgnn::Error> {
    let dir = tempfile::tempdir()?;
    let ck = Checkpoints::new(dir.path());
    save_model(&t.air_mpnn, &ck.path(PolicyKind::AirMpnn))?;
    save_model(&t.air_mprnn, &ck.path(PolicyKind::AirMprnn))?;
    let mut spec = ExperimentSpec::defaults(ExperimentId::Table4RhoSweep, &t.cfg);
    // The low-rho end of the curve is flat to about 0.05 points; 500 layouts cannot resolve its sign.
    spec.test_layouts = 2000;
    let out = run_experiment(&spec, &t.cfg, &ck)?;
    let ratios: Vec<(f64, f64)> = out
        .sweep_rows()
        .iter()
        .filter(|r| r.scheme == Scheme::AirMprnn)
        .map(|r| (r.rho.unwrap_or(f64::NAN), r.normalized.unwrap_or(f64::NAN)))
        .collect();
    let monotone = ratios.windows(2).all(|w| w[1].1 >= w[0].1);
    let band = ratios.iter().all(|&(_, r)| (1.0..=1.05).contains(&r));
    let shown: Vec<String> = ratios.iter().map(|(rho, r)| format!("{rho}:{:.2}%", 100.0 * r)).collect();
    Ok(outcome(
        monotone && band && ratios.len() == spec.rhos.len(),
        format!("{} (non-decreasing {}, within [100%, 105%] {})", shown.join(" "), ok(monotone), ok(band)),
    ))
}

fn main() -> ExitCode {
    let seed = 1;
    let mut all = true;
    let t = Instant::now();
    all &= report(1, "parameter counts", t, &parameter_counts());
    let t = Instant::now();
    all &= report(2, "overhead ratios at default settings", t, &overhead_ratios());
    let t = Instant::now();
    let c3 = [
        oracle::noiseless_aggregation(seed, 100),
        oracle::noiseless_direct_gain(seed + 1, 100),
        oracle::noisy_aggregation(seed + 2, 20, 10),
    ];
    all &= report(3, "over-the-air estimates: noiseless exactness, noisy median error", t, &from_reports(&c3));
    let t = Instant::now();
    let c4: Vec<OracleReport> = PolicyKind::ALL.iter().map(|&k| oracle::gradient_check(seed, k)).collect();
    all &= report(4, "batch-loss gradients vs central differences", t, &from_reports(&c4));
    let t = Instant::now();
    let mut c5: Vec<OracleReport> = PolicyKind::ALL.iter().map(|&k| oracle::policy_permutation(seed, k, 50)).collect();
    c5.push(oracle::estimator_permutation(seed, 50));
    all &= report(5, "permutation equivariance", t, &from_reports(&c5));
    let t = Instant::now();
    let c6 = [oracle::wmmse_monotone(seed, 100), oracle::wmmse_near_grid(seed, 100)];
    all &= report(6, "WMMSE monotonicity and grid-search quality", t, &from_reports(&c6));

    let t = Instant::now();
    let trained = match train_all() {
        Ok(tr) => tr,
        Err(e) => {
            for (id, title) in [(7, "end-to-end ordering"), (8, "hard-overhead cliff"), (9, "correlation sweep")] {
                report(id, title, t, &outcome(false, format!("training failed: {e}")));
            }
            return ExitCode::FAILURE;
        }
    };
    let e2e = end_to_end(&trained).unwrap_or_else(|e| outcome(false, e.to_string()));
    all &= report(7, "end-to-end ordering at desk scale", t, &e2e);
    let t = Instant::now();
    let cliff = overhead_cliff(&trained).unwrap_or_else(|e| outcome(false, e.to_string()));
    all &= report(8, "hard-overhead cliff", t, &cliff);
    let t = Instant::now();
    let sweep = rho_sweep(&trained).unwrap_or_else(|e| outcome(false, e.to_string()));
    all &= report(9, "correlation sweep trend", t, &sweep);

    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
