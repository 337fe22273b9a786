//! Independent reference computations used to check the library.

use seislink::linker::LinkerModel;
use seislink::velmod::{LayeredModel, Phase};

/// Horizontal offset and time of a ray with parameter `p` through layers
/// given as (thickness, velocity) pairs.
fn leg_sums(legs: &[(f64, f64)], p: f64) -> (f64, f64) {
    let mut x = 0.0;
    let mut t = 0.0;
    for &(h, v) in legs {
        let sin = p * v;
        let cos = (1.0 - sin * sin).sqrt();
        x += h * sin / cos;
        t += h / (v * cos);
    }
    (x, t)
}

/// First-arrival time by brute force: the direct branch is sampled at
/// `samples` take-off angles and the time linearly interpolated at the target
/// offset; each head wave is built from its critical ray plus a horizontal
/// run along the refractor.
pub fn travel_time_scan(model: &LayeredModel, depth: f64, x: f64, phase: Phase, samples: usize) -> f64 {
    let layers = model.layers();
    let v: Vec<f64> = layers.iter().map(|l| l.velocity(phase)).collect();
    let top: Vec<f64> = layers.iter().map(|l| l.top_km).collect();
    let k = top.iter().rposition(|&t| t <= depth).unwrap();
    let thick = |i: usize| top[i + 1] - top[i];

    let mut up: Vec<(f64, f64)> = (0..k).map(|i| (thick(i), v[i])).collect();
    up.push((depth - top[k], v[k]));
    up.retain(|&(h, _)| h > 0.0);

    let direct = if up.is_empty() {
        x / v[k]
    } else {
        let vmax = up.iter().map(|&(_, v)| v).fold(0.0, f64::max);
        let mut prev = leg_sums(&up, 0.0);
        let mut found = None;
        for i in 1..=samples {
            let phi = (i as f64 - 0.5) / samples as f64 * std::f64::consts::FRAC_PI_2;
            let cur = leg_sums(&up, phi.sin() / vmax);
            if cur.0 >= x {
                let w = if cur.0 > prev.0 { (x - prev.0) / (cur.0 - prev.0) } else { 0.0 };
                found = Some(prev.1 + w * (cur.1 - prev.1));
                break;
            }
            prev = cur;
        }
        found.expect("offset beyond the sampled direct branch")
    };

    let mut best = direct;
    for j in k + 1..layers.len() {
        if v[..j].iter().all(|&vi| vi < v[j]) {
            let mut legs: Vec<(f64, f64)> = Vec::new();
            legs.push((top[k + 1] - depth, v[k]));
            for i in k + 1..j {
                legs.push((thick(i), v[i]));
            }
            for i in 0..j {
                legs.push((thick(i), v[i]));
            }
            legs.retain(|&(h, _)| h > 0.0);
            let (xc, tc) = leg_sums(&legs, 1.0 / v[j]);
            if x >= xc {
                best = best.min(tc + (x - xc) / v[j]);
            }
        }
    }
    best
}

/// Binary cross-entropy as a plain loop.
pub fn bce_naive(labels: &[f64], probs: &[f64], eps: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..labels.len() {
        let p = probs[i].clamp(eps, 1.0 - eps);
        total += labels[i] * p.ln() + (1.0 - labels[i]) * (1.0 - p).ln();
    }
    -total / labels.len() as f64
}

/// Jaccard index of two index sets, by enumeration.
pub fn jaccard_bruteforce(a: &[usize], b: &[usize]) -> f64 {
    let inter = a.iter().filter(|x| b.contains(x)).count();
    let mut union: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
    union.sort_unstable();
    union.dedup();
    if union.is_empty() {
        0.0
    } else {
        inter as f64 / union.len() as f64
    }
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One GRU direction written out element by element. `w_in` is `3H x in`,
/// `w_hid` is `3H x H`, rows ordered update, reset, candidate.
fn gru_dir_naive(
    w_in: &[f64],
    w_hid: &[f64],
    b: &[f64],
    xs: &[Vec<f64>],
    h_dim: usize,
    reverse: bool,
) -> Vec<Vec<f64>> {
    let n_in = xs[0].len();
    let mut out = vec![vec![0.0; h_dim]; xs.len()];
    let mut h = vec![0.0; h_dim];
    let order: Vec<usize> = if reverse { (0..xs.len()).rev().collect() } else { (0..xs.len()).collect() };
    for t in order {
        let x = &xs[t];
        let mut z = vec![0.0; h_dim];
        let mut r = vec![0.0; h_dim];
        for i in 0..h_dim {
            let mut az = b[i];
            let mut ar = b[h_dim + i];
            for j in 0..n_in {
                az += w_in[i * n_in + j] * x[j];
                ar += w_in[(h_dim + i) * n_in + j] * x[j];
            }
            for j in 0..h_dim {
                az += w_hid[i * h_dim + j] * h[j];
                ar += w_hid[(h_dim + i) * h_dim + j] * h[j];
            }
            z[i] = sig(az);
            r[i] = sig(ar);
        }
        let mut new_h = vec![0.0; h_dim];
        for i in 0..h_dim {
            let mut an = b[2 * h_dim + i];
            for j in 0..n_in {
                an += w_in[(2 * h_dim + i) * n_in + j] * x[j];
            }
            for j in 0..h_dim {
                an += w_hid[(2 * h_dim + i) * h_dim + j] * r[j] * h[j];
            }
            new_h[i] = z[i] * h[i] + (1.0 - z[i]) * an.tanh();
        }
        h = new_h;
        out[t] = h.clone();
    }
    out
}

/// Full network forward from named tensors.
pub fn linker_forward_naive(model: &LinkerModel, xs: &[Vec<f64>]) -> Vec<f64> {
    let h_dim = model.hidden();
    let p = model.params();
    let get = |name: &str| -> &[f64] {
        let t = model.layout().tensors().into_iter().find(|t| t.name == name).unwrap();
        &p[t.range()]
    };
    let layer = |prefix: &str, input: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let f = gru_dir_naive(
            get(&format!("{prefix}.fwd.w_in")),
            get(&format!("{prefix}.fwd.w_hid")),
            get(&format!("{prefix}.fwd.bias")),
            input,
            h_dim,
            false,
        );
        let b = gru_dir_naive(
            get(&format!("{prefix}.bwd.w_in")),
            get(&format!("{prefix}.bwd.w_hid")),
            get(&format!("{prefix}.bwd.bias")),
            input,
            h_dim,
            true,
        );
        f.into_iter()
            .zip(b)
            .map(|(mut a, b)| {
                a.extend(b);
                a
            })
            .collect()
    };
    let y1 = layer("gru1", xs);
    let y2 = layer("gru2", &y1);
    let w = get("dense.w");
    let b0 = get("dense.b")[0];
    y2.iter().map(|y| sig(b0 + y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())).collect()
}
