//! Small fully connected network with tanh hidden layers and a linear output,
//! flat parameter storage and manual backpropagation.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Multilayer perceptron. Parameters are stored per layer as a row-major
/// `out x in` weight block followed by the `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Activations retained by a forward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    /// Layer inputs; `acts[0]` is the network input and the last entry its output.
    pub acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("non-empty cache")
    }
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl Mlp {
    /// Glorot-normal weights and zero biases.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidArgument("network needs at least an input and an output layer".into()));
        }
        let mut params = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let std = (2.0 / (fan_in + fan_out).max(1) as f64).sqrt();
            let n = Normal::new(0.0, std).expect("finite std");
            params.extend((0..fan_in * fan_out).map(|_| n.sample(rng)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        if params.len() != param_count(sizes) {
            return Err(Error::Dimension(format!(
                "{} parameters for layout {:?} (expected {})",
                params.len(),
                sizes,
                param_count(sizes)
            )));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("sizes")
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn forward_cached(&self, x: &[f64]) -> Cache {
        assert_eq!(x.len(), self.input_dim(), "input width");
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(x.to_vec());
        let mut off = 0;
        for l in 0..self.layers() {
            let (ni, no) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + ni * no];
            let b = &self.params[off + ni * no..off + ni * no + no];
            off += ni * no + no;
            let input = acts.last().expect("input");
            let last = l + 1 == self.layers();
            let out: Vec<f64> = (0..no)
                .map(|o| {
                    let row = &w[o * ni..(o + 1) * ni];
                    let z = b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
        }
        Cache { acts }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).acts.pop().expect("output")
    }

    /// Accumulate `dL/dparams` into `grad` and return `dL/dinput`, given `dL/doutput`.
    pub fn backward(&self, cache: &Cache, grad_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        assert_eq!(grad.len(), self.params.len());
        let mut delta = grad_out.to_vec();
        let mut offsets = Vec::with_capacity(self.layers());
        let mut off = 0;
        for l in 0..self.layers() {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        for l in (0..self.layers()).rev() {
            let (ni, no) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            if l + 1 != self.layers() {
                let a = &cache.acts[l + 1];
                for o in 0..no {
                    delta[o] *= 1.0 - a[o] * a[o];
                }
            }
            let input = &cache.acts[l];
            for o in 0..no {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let g = &mut grad[off + o * ni..off + (o + 1) * ni];
                for (gi, xi) in g.iter_mut().zip(input) {
                    *gi += d * xi;
                }
                grad[off + ni * no + o] += d;
            }
            let w = &self.params[off..off + ni * no];
            let mut prev = vec![0.0; ni];
            for o in 0..no {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (p, wi) in prev.iter_mut().zip(&w[o * ni..(o + 1) * ni]) {
                    *p += d * wi;
                }
            }
            delta = prev;
        }
        delta
    }

    /// Plain gradient step `params -= lr * grad`.
    pub fn sgd_step(&mut self, grad: &[f64], lr: f64) {
        for (p, g) in self.params.iter_mut().zip(grad) {
            *p -= lr * g;
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn layout() {
        assert_eq!(param_count(&[1, 1, 4]), 10);
        let mut r = rng::substream(0, &[]);
        let m = Mlp::new(&[3, 5, 2], &mut r).unwrap();
        assert_eq!(m.num_params(), 3 * 5 + 5 + 5 * 2 + 2);
        assert_eq!(m.forward(&[0.1, 0.2, 0.3]).len(), 2);
        assert!(Mlp::from_params(&[3, 5, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut r = rng::substream(1, &[]);
        let m = Mlp::new(&[3, 4, 4, 2], &mut r).unwrap();
        let x = [0.3, -0.7, 1.1];
        let target = [0.5, -0.2];
        let loss = |net: &Mlp, x: &[f64]| -> f64 {
            net.forward(x).iter().zip(&target).map(|(o, t)| (o - t).powi(2)).sum()
        };
        let cache = m.forward_cached(&x);
        let gout: Vec<f64> = cache.output().iter().zip(&target).map(|(o, t)| 2.0 * (o - t)).collect();
        let mut g = vec![0.0; m.num_params()];
        let gin = m.backward(&cache, &gout, &mut g);
        let h = 1e-6;
        for i in 0..m.num_params() {
            let mut a = m.clone();
            a.params[i] += h;
            let mut b = m.clone();
            b.params[i] -= h;
            let fd = (loss(&a, &x) - loss(&b, &x)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * fd.abs().max(1e-3), "param {i}: {fd} vs {}", g[i]);
        }
        for i in 0..3 {
            let mut xa = x;
            xa[i] += h;
            let mut xb = x;
            xb[i] -= h;
            let fd = (loss(&m, &xa) - loss(&m, &xb)) / (2.0 * h);
            assert!((fd - gin[i]).abs() <= 1e-6 * fd.abs().max(1e-3));
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
