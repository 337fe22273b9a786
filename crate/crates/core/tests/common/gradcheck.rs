use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seislink::linker::LinkerModel;
use seislink::window::N_FEATURES;

pub fn random_window(rng: &mut ChaCha8Rng, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let x = (0..steps * N_FEATURES).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y = (0..steps).map(|_| f64::from(rng.gen_bool(0.4))).collect();
    (x, y)
}

pub fn perturbed(model: &LinkerModel, seed: u64) -> LinkerModel {
    let mut m = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Non-zero biases so every bias gradient is exercised.
    for p in m.params_mut() {
        *p += rng.gen_range(-0.3..0.3);
    }
    m
}

/// Worst relative error between the analytic gradient and central
/// differences, per parameter tensor, for a model with `hidden` units on a
/// random window of `steps` rows.
pub fn worst_relative_errors(hidden: usize, steps: usize, seed: u64) -> Vec<(String, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = perturbed(&LinkerModel::init(hidden, seed + 1).unwrap(), seed + 2);
    let (x, y) = random_window(&mut rng, steps);
    let mut grad = vec![0.0; model.n_params()];
    model.accumulate_gradient(&x, &y, 1.0, &mut grad);

    let loss_at = |params: &[f64]| {
        let m = LinkerModel::from_params(N_FEATURES, hidden, params.to_vec()).unwrap();
        let mut scratch = vec![0.0; params.len()];
        m.accumulate_gradient(&x, &y, 1.0, &mut scratch)
    };
    let h = 1e-5;
    let mut out = Vec::new();
    for t in model.layout().tensors() {
        let mut worst: f64 = 0.0;
        for k in t.range() {
            let mut p = model.params().to_vec();
            p[k] += h;
            let up = loss_at(&p);
            p[k] -= 2.0 * h;
            let down = loss_at(&p);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-7);
            worst = worst.max(rel);
        }
        out.push((t.name.clone(), worst));
    }
    out
}
