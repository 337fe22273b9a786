use rand::Rng;
use seislink::velmod::{Layer, LayeredModel};

/// 1 to 5 layers with arbitrary (not necessarily increasing) velocities.
pub fn random_model(rng: &mut impl Rng) -> LayeredModel {
    let n = rng.gen_range(1..=5);
    let mut top = 0.0;
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let vp = rng.gen_range(3.0..8.5);
        let vs = vp / rng.gen_range(1.5..2.0);
        layers.push(Layer { top_km: top, vp, vs });
        top += rng.gen_range(0.5..12.0);
    }
    LayeredModel::new(layers).unwrap()
}
