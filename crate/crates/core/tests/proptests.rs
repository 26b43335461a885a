use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use airgnn::airphy::{exact_aggregate, Aggregation, AirChannel, PilotBank};
use airgnn::baselines::{epa, wmmse};
use airgnn::checkpoint::{read_model, write_model};
use airgnn::config::RunConfig;
use airgnn::evalmetrics::{weighted_sum_rate, LinkBudget, OverheadConfig, Scheme};
use airgnn::gnn::{NormStats, PolicyKind, PolicyModel};
use airgnn::netgen::{derive_seed, ChannelParams, Dataset, GainMatrix, RhoMode};

const UNIT: LinkBudget<f64> = LinkBudget { max_power: 1.0, noise: 1.0 };

fn gains(k: usize) -> impl Strategy<Value = GainMatrix> {
    prop::collection::vec(1e-3f64..1e2, k * k).prop_map(move |v| GainMatrix::from_vec(k, v).expect("k * k entries"))
}

fn kind() -> impl Strategy<Value = PolicyKind> {
    prop::sample::select(PolicyKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sum_rate_ignores_pair_labels(g in gains(5), p in prop::collection::vec(0.0f64..=1.0, 5), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let w = vec![1.0; 5];
        let base = weighted_sum_rate(&p, g.data(), &w, UNIT, 1.0);
        let moved_p: Vec<f64> = perm.iter().map(|&j| p[j]).collect();
        let moved = weighted_sum_rate(&moved_p, g.permuted(&perm).data(), &w, UNIT, 1.0);
        prop_assert!((base - moved).abs() <= 1e-12 * base.abs().max(1.0));
        prop_assert!(base >= 0.0);
    }

    #[test]
    fn wmmse_never_loses_to_full_power(g in gains(4)) {
        let w = vec![1.0; 4];
        let p = wmmse(&g, &w, UNIT, 30).unwrap();
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let full = weighted_sum_rate(&epa(4), g.data(), &w, UNIT, 1.0);
        prop_assert!(weighted_sum_rate(&p, g.data(), &w, UNIT, 1.0) >= full - 1e-9);
    }

    #[test]
    fn overhead_orders_schemes(k in 1u64..80, csi in 0u64..5, mp in 0u64..30, ns in 1u64..10_000) {
        let oh = OverheadConfig { csi_symbols: csi, mp_symbols: mp, frame_symbols: ns, layers: 3 };
        for s in Scheme::ALL {
            let f = oh.prefactor(s, k);
            prop_assert!((0.0..=1.0).contains(&f));
        }
        prop_assert!(oh.symbols(Scheme::Mpnn, k) >= oh.symbols(Scheme::Wmmse, k));
        prop_assert!(oh.symbols(Scheme::AirMprnn, k) <= oh.symbols(Scheme::AirMpnn, k));
        prop_assert_eq!(oh.prefactor(Scheme::Epa, k), 1.0);
    }

    #[test]
    fn pilot_banks_are_orthonormal(k in 1usize..12, extra in 0usize..6, seed in any::<u64>()) {
        let bank = PilotBank::new(k, k + extra, seed).unwrap();
        prop_assert!(bank.orthonormality_error() < 1e-12);
    }

    #[test]
    fn noiseless_air_sum_is_exact(
        k in 1usize..7,
        seed in any::<u64>(),
        raw in prop::collection::vec((1e-6f64..1.0, 0.0f64..std::f64::consts::TAU), 36),
        powers in prop::collection::vec(0.0f64..10.0, 6),
    ) {
        let coeffs: Vec<Complex64> = (0..k * k).map(|e| Complex64::from_polar(raw[e].0.sqrt(), raw[e].1)).collect();
        let powers = &powers[..k];
        let mut air = AirChannel::new(PilotBank::new(k, k, seed).unwrap(), 0.0, false, 0);
        let ys = air.broadcast(powers, |j, i| coeffs[j * k + i]).unwrap();
        for y in &ys {
            let column: Vec<f64> = (0..k).map(|j| coeffs[j * k + y.owner].norm_sqr()).collect();
            let exact = exact_aggregate(powers, &column, y.owner, Aggregation::Sum);
            prop_assert!((air.sum_estimate(y) - exact).abs() <= 1e-10 * exact.max(1e-12));
        }
    }

    #[test]
    fn datasets_round_trip(k in 1usize..5, frames in 1usize..4, count in 1usize..4, seed in any::<u64>(), rho in prop::option::of(0.0f64..0.99)) {
        let params = ChannelParams {
            pairs: k,
            frames,
            field_length_m: 200.0,
            rho: rho.map_or(RhoMode::Uniform, RhoMode::Fixed),
            ..ChannelParams::default()
        };
        let data = Dataset::generate(&params, count, seed).unwrap();
        let mut bytes = Vec::new();
        data.write_to(&mut bytes).unwrap();
        prop_assert_eq!(Dataset::read_from(bytes.as_slice()).unwrap(), data);
    }

    #[test]
    fn checkpoints_round_trip(kind in kind(), seed in any::<u64>()) {
        let model = PolicyModel::<f64>::new(kind, 3, NormStats::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut bytes = Vec::new();
        write_model(&model, &mut bytes).unwrap();
        let back: PolicyModel<f64> = read_model(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.kind(), kind);
        prop_assert_eq!(back.mlps(), model.mlps());
        if !kind.is_recurrent() {
            let g = GainMatrix::from_fn(3, |j, i| if i == j { 1e-7 } else { 1e-10 });
            prop_assert_eq!(back.powers(&g).unwrap(), model.powers(&g).unwrap());
        }
    }

    #[test]
    fn seed_streams_do_not_collide(master in any::<u64>(), index in 0u64..1000) {
        let a = derive_seed(master, index, 0);
        prop_assert_ne!(a, derive_seed(master, index, 1));
        prop_assert_ne!(a, derive_seed(master, index + 1, 0));
    }

    #[test]
    fn integer_overrides_apply(iterations in 0usize..100_000, pairs in 1usize..200) {
        let cfg = RunConfig::parse("", &[format!("train.iterations={iterations}"), format!("channel.pairs={pairs}")]).unwrap();
        prop_assert_eq!(cfg.train.iterations, iterations);
        prop_assert_eq!(cfg.channel.pairs, pairs);
    }
}
