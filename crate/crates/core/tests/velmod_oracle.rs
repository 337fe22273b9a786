mod common;

use common::oracles::travel_time_scan;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seislink::velmod::{Layer, LayeredModel, Phase};

#[test]
fn two_layer_reference_case() {
    let m = LayeredModel::new(vec![Layer { top_km: 0.0, vp: 5.5, vs: 3.2 }, Layer { top_km: 16.0, vp: 6.3, vs: 3.6 }])
        .unwrap();
    let got = m.travel_time(8.0, 80.0, Phase::P).unwrap();
    let want = travel_time_scan(&m, 8.0, 80.0, Phase::P, 1_000_000);
    assert!((got - want).abs() <= 1e-4, "{got} vs {want}");
}

#[test]
fn random_models_match_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let m = common::fixtures::random_model(&mut rng);
        let depth = rng.gen_range(0.0..30.0);
        let x = rng.gen_range(0.0..100.0);
        let phase = if rng.gen_bool(0.5) { Phase::P } else { Phase::S };
        let got = m.travel_time(depth, x, phase).unwrap();
        let want = travel_time_scan(&m, depth, x, phase, 200_000);
        assert!((got - want).abs() <= 1e-4, "{m:?} depth {depth} x {x}: {got} vs {want}");
    }
}
