//! Flat parameter vector layout for the linker network.
//!
//! Order: layer 1 forward, layer 1 backward, layer 2 forward, layer 2
//! backward, dense weights, dense bias. Each direction stores `w_in`
//! (`3H x in`), `w_hid` (`3H x H`) and `bias` (`3H`), gate rows ordered
//! update, reset, candidate.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirLayout {
    pub offset: usize,
    pub in_dim: usize,
    pub hidden: usize,
}

impl DirLayout {
    pub fn w_in_len(&self) -> usize {
        3 * self.hidden * self.in_dim
    }

    pub fn w_hid_len(&self) -> usize {
        3 * self.hidden * self.hidden
    }

    pub fn len(&self) -> usize {
        self.w_in_len() + self.w_hid_len() + 3 * self.hidden
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub input: usize,
    pub hidden: usize,
    pub l1: [DirLayout; 2],
    pub l2: [DirLayout; 2],
    pub dense_w: usize,
    pub dense_b: usize,
    pub total: usize,
}

/// Named contiguous block of the parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

impl Layout {
    pub fn new(input: usize, hidden: usize) -> Self {
        let mut offset = 0;
        let mut dir = |in_dim: usize| {
            let d = DirLayout { offset, in_dim, hidden };
            offset += d.len();
            d
        };
        let l1 = [dir(input), dir(input)];
        let l2 = [dir(2 * hidden), dir(2 * hidden)];
        let dense_w = offset;
        let dense_b = dense_w + 2 * hidden;
        Self { input, hidden, l1, l2, dense_w, dense_b, total: dense_b + 1 }
    }

    pub fn tensors(&self) -> Vec<TensorInfo> {
        let mut out = Vec::new();
        for (layer, dirs) in [("gru1", &self.l1), ("gru2", &self.l2)] {
            for (dname, d) in ["fwd", "bwd"].iter().zip(dirs.iter()) {
                let h = d.hidden;
                out.push(TensorInfo {
                    name: format!("{layer}.{dname}.w_in"),
                    shape: vec![3 * h, d.in_dim],
                    offset: d.offset,
                });
                out.push(TensorInfo {
                    name: format!("{layer}.{dname}.w_hid"),
                    shape: vec![3 * h, h],
                    offset: d.offset + d.w_in_len(),
                });
                out.push(TensorInfo {
                    name: format!("{layer}.{dname}.bias"),
                    shape: vec![3 * h],
                    offset: d.offset + d.w_in_len() + d.w_hid_len(),
                });
            }
        }
        out.push(TensorInfo { name: "dense.w".into(), shape: vec![2 * self.hidden], offset: self.dense_w });
        out.push(TensorInfo { name: "dense.b".into(), shape: vec![1], offset: self.dense_b });
        out
    }

    pub(crate) fn dense_grad<'a>(&self, grad: &'a mut [f64]) -> (&'a mut [f64], &'a mut f64) {
        let (w, b) = grad[self.dense_w..].split_at_mut(2 * self.hidden);
        (w, &mut b[0])
    }
}

pub(crate) struct DirView<'a> {
    pub w_in: &'a [f64],
    pub w_hid: &'a [f64],
    pub bias: &'a [f64],
}

impl<'a> DirView<'a> {
    fn new(d: &DirLayout, params: &'a [f64]) -> Self {
        let p = &params[d.range()];
        let (w_in, rest) = p.split_at(d.w_in_len());
        let (w_hid, bias) = rest.split_at(d.w_hid_len());
        Self { w_in, w_hid, bias }
    }
}

pub(crate) struct ModelView<'a> {
    pub l1: [DirView<'a>; 2],
    pub l2: [DirView<'a>; 2],
    pub dense_w: &'a [f64],
    pub dense_b: f64,
}

impl<'a> ModelView<'a> {
    pub fn new(layout: &Layout, params: &'a [f64]) -> Self {
        Self {
            l1: [DirView::new(&layout.l1[0], params), DirView::new(&layout.l1[1], params)],
            l2: [DirView::new(&layout.l2[0], params), DirView::new(&layout.l2[1], params)],
            dense_w: &params[layout.dense_w..layout.dense_b],
            dense_b: params[layout.dense_b],
        }
    }
}
