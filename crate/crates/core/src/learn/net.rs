//! Layer stacks, the softmax cross-entropy head, and the optimizer.

use ndarray::Array2;

use super::layers::Layer;
use crate::error::{Error, Result};

/// A plain sequential stack.
pub struct Network {
    pub layers: Vec<Box<dyn Layer>>,
}

impl Network {
    pub fn new(layers: Vec<Box<dyn Layer>>) -> Self {
        Self { layers }
    }

    pub fn forward(&mut self, x: &Array2<f64>) -> Array2<f64> {
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward(h);
        }
        h
    }

    pub fn backward(&mut self, g: Array2<f64>) -> Array2<f64> {
        let mut g = g;
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(g);
        }
        g
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            layer.zero_grads();
        }
    }

    pub fn params(&mut self) -> Vec<(&mut Array2<f64>, &mut Array2<f64>)> {
        self.layers.iter_mut().flat_map(|l| l.params()).collect()
    }

    pub fn out_len(&self) -> usize {
        self.layers.last().expect("nonempty network").out_len()
    }
}

/// Mean cross-entropy of softmaxed logits against integer labels, with the
/// gradient at the logits.
pub fn softmax_ce(logits: &Array2<f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let batch = logits.nrows();
    if batch != labels.len() {
        return Err(Error::InvalidConfig(format!(
            "{batch} logit rows vs {} labels",
            labels.len()
        )));
    }
    let classes = logits.ncols();
    let mut grad = Array2::zeros((batch, classes));
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::InvalidConfig(format!(
                "label {label} outside {classes} classes"
            )));
        }
        let row = logits.row(i);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|&v| (v - m).exp()).sum();
        let log_z = z.ln() + m;
        loss += log_z - row[label];
        for j in 0..classes {
            let p = (row[j] - log_z).exp();
            grad[[i, j]] = (p - ((j == label) as u8 as f64)) / batch as f64;
        }
    }
    Ok((loss / batch as f64, grad))
}

/// Row-wise softmax probabilities.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    out
}

/// Argmax per row.
pub fn argmax_rows(scores: &Array2<f64>) -> Vec<usize> {
    scores
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite scores"))
                .map(|(i, _)| i)
                .expect("nonempty row")
        })
        .collect()
}

/// Stochastic gradient descent with classical momentum.
pub struct Sgd {
    pub lr: f64,
    pub momentum: f64,
    velocity: Vec<Array2<f64>>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64) -> Self {
        Self {
            lr,
            momentum,
            velocity: Vec::new(),
        }
    }

    /// Applies one update from the accumulated gradients.
    pub fn step(&mut self, net: &mut Network) {
        let params = net.params();
        if self.velocity.is_empty() {
            self.velocity = params
                .iter()
                .map(|(p, _)| Array2::zeros(p.raw_dim()))
                .collect();
        }
        assert_eq!(self.velocity.len(), params.len(), "parameter set changed");
        for (v, (p, g)) in self.velocity.iter_mut().zip(params) {
            v.zip_mut_with(g, |v, &g| *v = self.momentum * *v - self.lr * g);
            *p += &*v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::layers::{Dense, Tanh};
    use ndarray::array;

    #[test]
    fn softmax_ce_of_uniform_logits_is_log_classes() {
        let logits = Array2::zeros((2, 4));
        let (loss, grad) = softmax_ce(&logits, &[0, 3]).unwrap();
        assert!((loss - 4.0f64.ln()).abs() < 1e-12);
        // gradient rows sum to zero
        for row in grad.rows() {
            assert!(row.sum().abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_ce_gradient_matches_finite_differences() {
        let logits = array![[0.3, -0.7, 1.2], [2.0, 0.1, -0.4]];
        let labels = [2usize, 0];
        let (_, grad) = softmax_ce(&logits, &labels).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..3 {
                let mut lp = logits.clone();
                lp[[i, j]] += h;
                let mut lm = logits.clone();
                lm[[i, j]] -= h;
                let fp = softmax_ce(&lp, &labels).unwrap().0;
                let fm = softmax_ce(&lm, &labels).unwrap().0;
                let num = (fp - fm) / (2.0 * h);
                assert!(
                    (num - grad[[i, j]]).abs() < 1e-9,
                    "at [{i},{j}]: {num} vs {}",
                    grad[[i, j]]
                );
            }
        }
    }

    #[test]
    fn sgd_with_momentum_learns_a_linear_map()  {
        // fit y = 2x - 1 with a single dense layer and squared loss
        let mut net = Network::new(vec![Box::new(Dense::new(1, 1, 3, 0))]);
        let mut opt = Sgd::new(0.05, 0.9);
        for step in 0..300 {
            let x = array![[(step % 5) as f64 - 2.0]];
            let want = 2.0 * x[[0, 0]] - 1.0;
            let y = net.forward(&x);
            let g = array![[y[[0, 0]] - want]];
            net.zero_grads();
            net.backward(g);
            opt.step(&mut net);
        }
        let y = net.forward(&array![[3.0]]);
        assert!((y[[0, 0]] - 5.0).abs() < 1e-3, "got {}", y[[0, 0]]);
    }

    #[test]
    fn argmax_breaks_out_the_best_column() {
        let s = array![[0.1, 0.9, 0.0], [0.5, 0.2, 0.3]];
        assert_eq!(argmax_rows(&s), vec![1, 0]);
    }

    #[test]
    fn stack_runs_forward_and_backward_with_matching_shapes() {
        let mut net = Network::new(vec![
            Box::new(Dense::new(4, 8, 5, 0)),
            Box::new(Tanh::new(8)),
            Box::new(Dense::new(8, 3, 5, 1)),
        ]);
        let x = Array2::from_shape_fn((6, 4), |(i, j)| ((i + j) as f64).sin());
        let y = net.forward(&x);
        assert_eq!(y.dim(), (6, 3));
        let gx = net.backward(Array2::ones((6, 3)));
        assert_eq!(gx.dim(), (6, 4));
        assert_eq!(net.out_len(), 3);
    }
}
