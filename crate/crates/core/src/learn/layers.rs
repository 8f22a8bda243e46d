//! Network building blocks.
//!
//! Every layer maps a `[batch, features]` matrix to another; convolutional
//! layers carry their spatial geometry internally and flatten on the way
//! out. `backward` consumes the loss gradient at the output and returns the
//! gradient at the input, accumulating parameter gradients for the
//! optimizer.

use ndarray::{Array2, Axis};
use rand_distr::{Distribution, StandardNormal};

use crate::seed::derive_rng;

pub trait Layer: Send + Sync {
    fn forward(&mut self, x: Array2<f64>) -> Array2<f64>;
    fn backward(&mut self, g: Array2<f64>) -> Array2<f64>;
    /// Parameter tensors paired with their gradient accumulators.
    fn params(&mut self) -> Vec<(&mut Array2<f64>, &mut Array2<f64>)> {
        Vec::new()
    }
    fn zero_grads(&mut self) {
        for (_, g) in self.params() {
            g.fill(0.0);
        }
    }
    /// Feature count produced per sample.
    fn out_len(&self) -> usize;
}

fn gaussian_init(rows: usize, cols: usize, std: f64, seed: u64, tag: u64) -> Array2<f64> {
    let mut rng = derive_rng(seed, &[0x494e, tag]);
    Array2::from_shape_fn((rows, cols), |_| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v * std
    })
}

/// Fully connected layer.
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array2<f64>,
    gw: Array2<f64>,
    gb: Array2<f64>,
    x: Array2<f64>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, seed: u64, tag: u64) -> Self {
        let std = (1.0 / inputs as f64).sqrt();
        Self {
            w: gaussian_init(inputs, outputs, std, seed, tag),
            b: Array2::zeros((1, outputs)),
            gw: Array2::zeros((inputs, outputs)),
            gb: Array2::zeros((1, outputs)),
            x: Array2::zeros((0, 0)),
        }
    }

    /// Accumulates the gradient of the ridge penalty `lambda/2 * sum(w^2)`.
    /// Biases are left alone.
    pub fn add_weight_decay_grad(&mut self, lambda: f64) {
        self.gw.scaled_add(lambda, &self.w);
    }
}

impl Layer for Dense {
    fn forward(&mut self, x: Array2<f64>) -> Array2<f64> {
        let out = x.dot(&self.w) + &self.b;
        self.x = x;
        out
    }

    fn backward(&mut self, g: Array2<f64>) -> Array2<f64> {
        self.gw += &self.x.t().dot(&g);
        self.gb += &g.sum_axis(Axis(0)).insert_axis(Axis(0));
        g.dot(&self.w.t())
    }

    fn params(&mut self) -> Vec<(&mut Array2<f64>, &mut Array2<f64>)> {
        vec![(&mut self.w, &mut self.gw), (&mut self.b, &mut self.gb)]
    }

    fn out_len(&self) -> usize {
        self.w.ncols()
    }
}

/// Elementwise hyperbolic tangent.
pub struct Tanh {
    y: Array2<f64>,
    width: usize,
}

impl Tanh {
    pub fn new(width: usize) -> Self {
        Self {
            y: Array2::zeros((0, 0)),
            width,
        }
    }
}

impl Layer for Tanh {
    fn forward(&mut self, x: Array2<f64>) -> Array2<f64> {
        self.y = x.mapv(f64::tanh);
        self.y.clone()
    }

    fn backward(&mut self, g: Array2<f64>) -> Array2<f64> {
        g * self.y.mapv(|y| 1.0 - y * y)
    }

    fn out_len(&self) -> usize {
        self.width
    }
}

/// Elementwise logistic function.
pub struct Sigmoid {
    y: Array2<f64>,
    width: usize,
}

impl Sigmoid {
    pub fn new(width: usize) -> Self {
        Self {
            y: Array2::zeros((0, 0)),
            width,
        }
    }

    /// Activations from the most recent forward pass.
    pub fn last_output(&self) -> &Array2<f64> {
        &self.y
    }
}

impl Layer for Sigmoid {
    fn forward(&mut self, x: Array2<f64>) -> Array2<f64> {
        self.y = x.mapv(|v| 1.0 / (1.0 + (-v).exp()));
        self.y.clone()
    }

    fn backward(&mut self, g: Array2<f64>) -> Array2<f64> {
        g * self.y.mapv(|y| y * (1.0 - y))
    }

    fn out_len(&self) -> usize {
        self.width
    }
}

/// Square 2-D convolution, stride 1, no padding, via im2col.
pub struct Conv2d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub k: usize,
    pub in_h: usize,
    pub in_w: usize,
    /// `[out_ch, in_ch * k * k]`
    pub w: Array2<f64>,
    pub b: Array2<f64>,
    gw: Array2<f64>,
    gb: Array2<f64>,
    cols: Vec<Array2<f64>>,
}

impl Conv2d {
    pub fn new(
        in_ch: usize,
        out_ch: usize,
        k: usize,
        in_h: usize,
        in_w: usize,
        seed: u64,
        tag: u64,
    ) -> Self {
        let fan_in = in_ch * k * k;
        let std = (1.0 / fan_in as f64).sqrt();
        Self {
            in_ch,
            out_ch,
            k,
            in_h,
            in_w,
            w: gaussian_init(out_ch, fan_in, std, seed, tag),
            b: Array2::zeros((1, out_ch)),
            gw: Array2::zeros((out_ch, fan_in)),
            gb: Array2::zeros((1, out_ch)),
            cols: Vec::new(),
        }
    }

    pub fn out_h(&self) -> usize {
        self.in_h - self.k + 1
    }

    pub fn out_w(&self) -> usize {
        self.in_w - self.k + 1
    }

    fn im2col(&self, sample: &[f64]) -> Array2<f64> {
        let (k, w, oh, ow) = (self.k, self.in_w, self.out_h(), self.out_w());
        let mut cols = Array2::zeros((self.in_ch * k * k, oh * ow));
        for c in 0..self.in_ch {
            let plane = &sample[c * self.in_h * w..(c + 1) * self.in_h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k + ky) * k + kx;
                    for oy in 0..oh {
                        let src = (oy + ky) * w + kx;
                        for ox in 0..ow {
                            cols[[row, oy * ow + ox]] = plane[src + ox];
                        }
                    }
                }
            }
        }
        cols
    }
}

impl Layer for Conv2d {
    fn forward(&mut self, x: Array2<f64>) -> Array2<f64> {
        let batch = x.nrows();
        let (oh, ow) = (self.out_h(), self.out_w());
        let mut out = Array2::zeros((batch, self.out_ch * oh * ow));
        self.cols.clear();
        for s in 0..batch {
            let cols = self.im2col(x.row(s).as_slice().expect("row is contiguous"));
            let y = self.w.dot(&cols);
            let dst = out.row_mut(s);
            let dst = dst.into_slice().expect("row is contiguous");
            for oc in 0..self.out_ch {
                let bias = self.b[[0, oc]];
                for p in 0..oh * ow {
                    dst[oc * oh * ow + p] = y[[oc, p]] + bias;
                }
            }
            self.cols.push(cols);
        }
        out
    }

    fn backward(&mut self, g: Array2<f64>) -> Array2<f64> {
        let batch = g.nrows();
        let (k, oh, ow) = (self.k, self.out_h(), self.out_w());
        let mut gx = Array2::zeros((batch, self.in_ch * self.in_h * self.in_w));
        for s in 0..batch {
            let gs = g
                .row(s)
                .to_shape((self.out_ch, oh * ow))
                .expect("row reshapes to channel planes")
                .to_owned();
            self.gw += &gs.dot(&self.cols[s].t());
            self.gb += &gs.sum_axis(Axis(1)).insert_axis(Axis(0));
            let gcols = self.w.t().dot(&gs);
            let dst = gx.row_mut(s);
            let dst = dst.into_slice().expect("row is contiguous");
            for c in 0..self.in_ch {
                for ky in 0..k {
                    for kx in 0..k {
                        let row = (c * k + ky) * k + kx;
                        for oy in 0..oh {
                            let base = c * self.in_h * self.in_w + (oy + ky) * self.in_w + kx;
                            for ox in 0..ow {
                                dst[base + ox] += gcols[[row, oy * ow + ox]];
                            }
                        }
                    }
                }
            }
        }
        gx
    }

    fn params(&mut self) -> Vec<(&mut Array2<f64>, &mut Array2<f64>)> {
        vec![(&mut self.w, &mut self.gw), (&mut self.b, &mut self.gb)]
    }

    fn out_len(&self) -> usize {
        self.out_ch * self.out_h() * self.out_w()
    }
}

/// Non-overlapping 2-D max pooling.
pub struct MaxPool2d {
    pub ch: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub pool: usize,
    argmax: Vec<usize>,
    batch: usize,
}

impl MaxPool2d {
    pub fn new(ch: usize, in_h: usize, in_w: usize, pool: usize) -> Self {
        assert!(
            in_h % pool == 0 && in_w % pool == 0,
            "pooling must tile the plane exactly"
        );
        Self {
            ch,
            in_h,
            in_w,
            pool,
            argmax: Vec::new(),
            batch: 0,
        }
    }

    pub fn out_h(&self) -> usize {
        self.in_h / self.pool
    }

    pub fn out_w(&self) -> usize {
        self.in_w / self.pool
    }
}

impl Layer for MaxPool2d {
    fn forward(&mut self, x: Array2<f64>) -> Array2<f64> {
        let batch = x.nrows();
        let (p, oh, ow) = (self.pool, self.out_h(), self.out_w());
        let mut out = Array2::zeros((batch, self.ch * oh * ow));
        self.argmax = vec![0; batch * self.ch * oh * ow];
        self.batch = batch;
        for s in 0..batch {
            let src = x.row(s);
            let src = src.as_slice().expect("row is contiguous");
            let dst = out.row_mut(s);
            let dst = dst.into_slice().expect("row is contiguous");
            for c in 0..self.ch {
                let plane = c * self.in_h * self.in_w;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = f64::NEG_INFINITY;
                        let mut at = 0;
                        for dy in 0..p {
                            for dx in 0..p {
                                let idx = plane + (oy * p + dy) * self.in_w + ox * p + dx;
                                if src[idx] > best {
                                    best = src[idx];
                                    at = idx;
                                }
                            }
                        }
                        let o = c * oh * ow + oy * ow + ox;
                        dst[o] = best;
                        self.argmax[s * self.ch * oh * ow + o] = at;
                    }
                }
            }
        }
        out
    }

    fn backward(&mut self, g: Array2<f64>) -> Array2<f64> {
        let per = self.ch * self.out_h() * self.out_w();
        let mut gx = Array2::zeros((self.batch, self.ch * self.in_h * self.in_w));
        for s in 0..self.batch {
            let gr = g.row(s);
            let dst = gx.row_mut(s);
            let dst = dst.into_slice().expect("row is contiguous");
            for o in 0..per {
                dst[self.argmax[s * per + o]] += gr[o];
            }
        }
        gx
    }

    fn out_len(&self) -> usize {
        self.ch * self.out_h() * self.out_w()
    }
}

/// 1-D convolution with stride, no padding, via im2col.
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub k: usize,
    pub stride: usize,
    pub in_len: usize,
    /// `[out_ch, in_ch * k]`
    pub w: Array2<f64>,
    pub b: Array2<f64>,
    gw: Array2<f64>,
    gb: Array2<f64>,
    cols: Vec<Array2<f64>>,
}

impl Conv1d {
    pub fn new(
        in_ch: usize,
        out_ch: usize,
        k: usize,
        stride: usize,
        in_len: usize,
        seed: u64,
        tag: u64,
    ) -> Self {
        let fan_in = in_ch * k;
        let std = (1.0 / fan_in as f64).sqrt();
        Self {
            in_ch,
            out_ch,
            k,
            stride,
            in_len,
            w: gaussian_init(out_ch, fan_in, std, seed, tag),
            b: Array2::zeros((1, out_ch)),
            gw: Array2::zeros((out_ch, fan_in)),
            gb: Array2::zeros((1, out_ch)),
            cols: Vec::new(),
        }
    }

    pub fn out_positions(&self) -> usize {
        (self.in_len - self.k) / self.stride + 1
    }
}

impl Layer for Conv1d {
    fn forward(&mut self, x: Array2<f64>) -> Array2<f64> {
        let batch = x.nrows();
        let ol = self.out_positions();
        let mut out = Array2::zeros((batch, self.out_ch * ol));
        self.cols.clear();
        for s in 0..batch {
            let src = x.row(s);
            let src = src.as_slice().expect("row is contiguous");
            let mut cols = Array2::zeros((self.in_ch * self.k, ol));
            for c in 0..self.in_ch {
                let plane = &src[c * self.in_len..(c + 1) * self.in_len];
                for kk in 0..self.k {
                    for o in 0..ol {
                        cols[[c * self.k + kk, o]] = plane[o * self.stride + kk];
                    }
                }
            }
            let y = self.w.dot(&cols);
            let dst = out.row_mut(s);
            let dst = dst.into_slice().expect("row is contiguous");
            for oc in 0..self.out_ch {
                for o in 0..ol {
                    dst[oc * ol + o] = y[[oc, o]] + self.b[[0, oc]];
                }
            }
            self.cols.push(cols);
        }
        out
    }

    fn backward(&mut self, g: Array2<f64>) -> Array2<f64> {
        let batch = g.nrows();
        let ol = self.out_positions();
        let mut gx = Array2::zeros((batch, self.in_ch * self.in_len));
        for s in 0..batch {
            let gs = g
                .row(s)
                .to_shape((self.out_ch, ol))
                .expect("row reshapes to channel planes")
                .to_owned();
            self.gw += &gs.dot(&self.cols[s].t());
            self.gb += &gs.sum_axis(Axis(1)).insert_axis(Axis(0));
            let gcols = self.w.t().dot(&gs);
            let dst = gx.row_mut(s);
            let dst = dst.into_slice().expect("row is contiguous");
            for c in 0..self.in_ch {
                for kk in 0..self.k {
                    for o in 0..ol {
                        dst[c * self.in_len + o * self.stride + kk] +=
                            gcols[[c * self.k + kk, o]];
                    }
                }
            }
        }
        gx
    }

    fn params(&mut self) -> Vec<(&mut Array2<f64>, &mut Array2<f64>)> {
        vec![(&mut self.w, &mut self.gw), (&mut self.b, &mut self.gb)]
    }

    fn out_len(&self) -> usize {
        self.out_ch * self.out_positions()
    }
}

/// Non-overlapping 1-D max pooling; a ragged tail is dropped.
pub struct MaxPool1d {
    pub ch: usize,
    pub in_len: usize,
    pub pool: usize,
    argmax: Vec<usize>,
    batch: usize,
}

impl MaxPool1d {
    pub fn new(ch: usize, in_len: usize, pool: usize) -> Self {
        Self {
            ch,
            in_len,
            pool,
            argmax: Vec::new(),
            batch: 0,
        }
    }

    pub fn out_positions(&self) -> usize {
        self.in_len / self.pool
    }
}

impl Layer for MaxPool1d {
    fn forward(&mut self, x: Array2<f64>) -> Array2<f64> {
        let batch = x.nrows();
        let ol = self.out_positions();
        let mut out = Array2::zeros((batch, self.ch * ol));
        self.argmax = vec![0; batch * self.ch * ol];
        self.batch = batch;
        for s in 0..batch {
            let src = x.row(s);
            let src = src.as_slice().expect("row is contiguous");
            let dst = out.row_mut(s);
            let dst = dst.into_slice().expect("row is contiguous");
            for c in 0..self.ch {
                for o in 0..ol {
                    let mut best = f64::NEG_INFINITY;
                    let mut at = 0;
                    for d in 0..self.pool {
                        let idx = c * self.in_len + o * self.pool + d;
                        if src[idx] > best {
                            best = src[idx];
                            at = idx;
                        }
                    }
                    dst[c * ol + o] = best;
                    self.argmax[s * self.ch * ol + c * ol + o] = at;
                }
            }
        }
        out
    }

    fn backward(&mut self, g: Array2<f64>) -> Array2<f64> {
        let per = self.ch * self.out_positions();
        let mut gx = Array2::zeros((self.batch, self.ch * self.in_len));
        for s in 0..self.batch {
            let gr = g.row(s);
            let dst = gx.row_mut(s);
            let dst = dst.into_slice().expect("row is contiguous");
            for o in 0..per {
                dst[self.argmax[s * per + o]] += gr[o];
            }
        }
        gx
    }

    fn out_len(&self) -> usize {
        self.ch * self.out_positions()
    }
}
