//! Bidirectional two-layer GRU with a per-step sigmoid head: forward pass
//! with cached activations and backpropagation through time.
//!
//! Per direction and time step, with gates stacked as `[z; r; n]`:
//!
//! ```text
//! z  = sigmoid(Wz x + Uz h + bz)
//! r  = sigmoid(Wr x + Ur h + br)
//! n  = tanh(Wn x + Un (r * h) + bn)
//! h' = z * h + (1 - z) * n
//! ```

use super::params::{DirView, Layout, ModelView};

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `y[i] += sum_j m[i, j] * x[j]` for a row-major `rows x x.len()` matrix.
#[inline]
fn matvec_add(m: &[f64], x: &[f64], y: &mut [f64]) {
    let cols = x.len();
    for (yi, row) in y.iter_mut().zip(m.chunks_exact(cols)) {
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *yi += acc;
    }
}

/// `y += m^T a` for a row-major matrix with `a.len()` rows.
#[inline]
fn matvec_t_add(m: &[f64], a: &[f64], y: &mut [f64]) {
    let cols = y.len();
    for (&ai, row) in a.iter().zip(m.chunks_exact(cols)) {
        if ai != 0.0 {
            for (yj, mj) in y.iter_mut().zip(row) {
                *yj += ai * mj;
            }
        }
    }
}

/// `m += a b^T`.
#[inline]
fn outer_add(m: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (&ai, row) in a.iter().zip(m.chunks_exact_mut(cols)) {
        if ai != 0.0 {
            for (mj, bj) in row.iter_mut().zip(b) {
                *mj += ai * bj;
            }
        }
    }
}

/// Activations of one direction, stored in processing order.
#[derive(Debug, Clone)]
struct DirCache {
    /// Hidden state entering each step, `steps x H`.
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
}

fn dir_forward(
    p: &DirView<'_>,
    x: &[f64],
    steps: usize,
    in_dim: usize,
    hid: usize,
    reverse: bool,
    out: &mut [f64],
    out_stride: usize,
    out_offset: usize,
) -> DirCache {
    let mut cache = DirCache {
        h_prev: vec![0.0; steps * hid],
        z: vec![0.0; steps * hid],
        r: vec![0.0; steps * hid],
        n: vec![0.0; steps * hid],
    };
    let mut h = vec![0.0; hid];
    let mut gx = vec![0.0; 3 * hid];
    let mut gh = vec![0.0; 2 * hid];
    let mut un = vec![0.0; hid];
    let mut rh = vec![0.0; hid];
    for s in 0..steps {
        let t = if reverse { steps - 1 - s } else { s };
        let xt = &x[t * in_dim..(t + 1) * in_dim];
        gx.copy_from_slice(p.bias);
        matvec_add(p.w_in, xt, &mut gx);
        gh.iter_mut().for_each(|v| *v = 0.0);
        matvec_add(&p.w_hid[..2 * hid * hid], &h, &mut gh);

        let row = s * hid..(s + 1) * hid;
        cache.h_prev[row.clone()].copy_from_slice(&h);
        for i in 0..hid {
            let z = sigmoid(gx[i] + gh[i]);
            let r = sigmoid(gx[hid + i] + gh[hid + i]);
            cache.z[s * hid + i] = z;
            cache.r[s * hid + i] = r;
            rh[i] = r * h[i];
        }
        un.iter_mut().for_each(|v| *v = 0.0);
        matvec_add(&p.w_hid[2 * hid * hid..], &rh, &mut un);
        for i in 0..hid {
            let n = (gx[2 * hid + i] + un[i]).tanh();
            cache.n[s * hid + i] = n;
            let z = cache.z[s * hid + i];
            h[i] = z * h[i] + (1.0 - z) * n;
        }
        out[t * out_stride + out_offset..t * out_stride + out_offset + hid].copy_from_slice(&h);
    }
    cache
}

/// Backpropagates `dy` (gradient w.r.t. this direction's outputs, read from
/// a `steps x dy_stride` buffer at `dy_offset`) into the parameter gradient
/// and, when given, into `dx`.
#[allow(clippy::too_many_arguments)]
fn dir_backward(
    p: &DirView<'_>,
    g: &mut [f64],
    layout_in: usize,
    cache: &DirCache,
    x: &[f64],
    steps: usize,
    hid: usize,
    reverse: bool,
    dy: &[f64],
    dy_stride: usize,
    dy_offset: usize,
    mut dx: Option<&mut [f64]>,
) {
    let in_dim = layout_in;
    let (gw_in, rest) = g.split_at_mut(3 * hid * in_dim);
    let (gw_hid, gbias) = rest.split_at_mut(3 * hid * hid);
    let mut dh_next = vec![0.0; hid];
    let mut dh = vec![0.0; hid];
    let mut da = vec![0.0; 3 * hid];
    let mut drh = vec![0.0; hid];
    let mut rh = vec![0.0; hid];
    for s in (0..steps).rev() {
        let t = if reverse { steps - 1 - s } else { s };
        let hp = &cache.h_prev[s * hid..(s + 1) * hid];
        let z = &cache.z[s * hid..(s + 1) * hid];
        let r = &cache.r[s * hid..(s + 1) * hid];
        let n = &cache.n[s * hid..(s + 1) * hid];
        for i in 0..hid {
            dh[i] = dy[t * dy_stride + dy_offset + i] + dh_next[i];
        }
        // Candidate branch.
        for i in 0..hid {
            let dn = dh[i] * (1.0 - z[i]);
            da[2 * hid + i] = dn * (1.0 - n[i] * n[i]);
            rh[i] = r[i] * hp[i];
            dh_next[i] = dh[i] * z[i];
        }
        let un = &p.w_hid[2 * hid * hid..];
        drh.iter_mut().for_each(|v| *v = 0.0);
        matvec_t_add(un, &da[2 * hid..], &mut drh);
        outer_add(&mut gw_hid[2 * hid * hid..], &da[2 * hid..], &rh);
        // Gates.
        for i in 0..hid {
            let dz = dh[i] * (hp[i] - n[i]);
            da[i] = dz * z[i] * (1.0 - z[i]);
            let dr = drh[i] * hp[i];
            da[hid + i] = dr * r[i] * (1.0 - r[i]);
            dh_next[i] += drh[i] * r[i];
        }
        matvec_t_add(&p.w_hid[..2 * hid * hid], &da[..2 * hid], &mut dh_next);
        outer_add(&mut gw_hid[..2 * hid * hid], &da[..2 * hid], hp);

        let xt = &x[t * in_dim..(t + 1) * in_dim];
        outer_add(gw_in, &da, xt);
        for (gb, d) in gbias.iter_mut().zip(&da) {
            *gb += d;
        }
        if let Some(dx) = dx.as_deref_mut() {
            matvec_t_add(p.w_in, &da, &mut dx[t * in_dim..(t + 1) * in_dim]);
        }
    }
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub(crate) struct ForwardCache {
    steps: usize,
    x: Vec<f64>,
    y1: Vec<f64>,
    y2: Vec<f64>,
    c1: [DirCache; 2],
    c2: [DirCache; 2],
    pub probs: Vec<f64>,
}

pub(crate) fn forward(layout: &Layout, params: &[f64], x: &[f64], steps: usize) -> ForwardCache {
    let view = ModelView::new(layout, params);
    let hid = layout.hidden;
    let input = layout.input;
    let mut y1 = vec![0.0; steps * 2 * hid];
    let f1 = dir_forward(&view.l1[0], x, steps, input, hid, false, &mut y1, 2 * hid, 0);
    let b1 = dir_forward(&view.l1[1], x, steps, input, hid, true, &mut y1, 2 * hid, hid);
    let mut y2 = vec![0.0; steps * 2 * hid];
    let f2 = dir_forward(&view.l2[0], &y1, steps, 2 * hid, hid, false, &mut y2, 2 * hid, 0);
    let b2 = dir_forward(&view.l2[1], &y1, steps, 2 * hid, hid, true, &mut y2, 2 * hid, hid);
    let probs = y2
        .chunks_exact(2 * hid)
        .map(|row| {
            let logit: f64 = row.iter().zip(view.dense_w).map(|(a, b)| a * b).sum::<f64>() + view.dense_b;
            sigmoid(logit)
        })
        .collect();
    ForwardCache { steps, x: x.to_vec(), y1, y2, c1: [f1, b1], c2: [f2, b2], probs }
}

/// Accumulates into `grad` the gradient of a loss whose derivative w.r.t.
/// the pre-sigmoid logits is `dlogits`.
pub(crate) fn backward(layout: &Layout, params: &[f64], cache: &ForwardCache, dlogits: &[f64], grad: &mut [f64]) {
    let view = ModelView::new(layout, params);
    let hid = layout.hidden;
    let steps = cache.steps;
    let two = 2 * hid;

    let mut dy2 = vec![0.0; steps * two];
    {
        let (gd_w, gd_b) = layout.dense_grad(grad);
        for (t, &dl) in dlogits.iter().enumerate() {
            let y = &cache.y2[t * two..(t + 1) * two];
            for i in 0..two {
                gd_w[i] += dl * y[i];
                dy2[t * two + i] = dl * view.dense_w[i];
            }
            *gd_b += dl;
        }
    }

    let mut dy1 = vec![0.0; steps * two];
    for (d, reverse) in [(0usize, false), (1, true)] {
        let range = layout.l2[d].range();
        dir_backward(
            &view.l2[d],
            &mut grad[range],
            two,
            &cache.c2[d],
            &cache.y1,
            steps,
            hid,
            reverse,
            &dy2,
            two,
            d * hid,
            Some(&mut dy1),
        );
    }
    for (d, reverse) in [(0usize, false), (1, true)] {
        let range = layout.l1[d].range();
        dir_backward(
            &view.l1[d],
            &mut grad[range],
            layout.input,
            &cache.c1[d],
            &cache.x,
            steps,
            hid,
            reverse,
            &dy1,
            two,
            d * hid,
            None,
        );
    }
}
