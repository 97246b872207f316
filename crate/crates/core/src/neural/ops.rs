//! Tensor primitives: valid 1-D cross-correlation with dilation, and
//! non-overlapping max pooling.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A (length × channels) grid, position-major: `data[p * channels + c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor1D {
    pub data: Vec<f64>,
    pub len: usize,
    pub channels: usize,
}

impl Tensor1D {
    pub fn zeros(len: usize, channels: usize) -> Self {
        Tensor1D { data: vec![0.0; len * channels], len, channels }
    }

    pub fn from_samples(samples: &[f64]) -> Self {
        Tensor1D { data: samples.to_vec(), len: samples.len(), channels: 1 }
    }

    #[inline]
    pub fn get(&self, pos: usize, ch: usize) -> f64 {
        self.data[pos * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, pos: usize, ch: usize, v: f64) {
        self.data[pos * self.channels + ch] = v;
    }
}

/// Valid (no padding) cross-correlation.
///
/// `weights` is filter-major: `weights[f][c][k]` flattened as
/// `f * (in_channels * kernel) + c * kernel + k`. Output length is
/// `len - (kernel - 1) * dilation`; inputs smaller than the receptive
/// field are rejected.
pub fn conv1d_forward(
    input: &Tensor1D,
    weights: &[f64],
    bias: &[f64],
    filters: usize,
    kernel: usize,
    dilation: usize,
) -> Result<Tensor1D> {
    let receptive = (kernel - 1) * dilation + 1;
    if input.len < receptive {
        return Err(Error::Validation(format!(
            "input of length {} is smaller than the receptive field {receptive}",
            input.len
        )));
    }
    let in_ch = input.channels;
    debug_assert_eq!(weights.len(), filters * in_ch * kernel);
    debug_assert_eq!(bias.len(), filters);
    let out_len = input.len - (kernel - 1) * dilation;
    let mut out = Tensor1D::zeros(out_len, filters);
    for p in 0..out_len {
        for f in 0..filters {
            let mut acc = bias[f];
            let w_base = f * in_ch * kernel;
            for c in 0..in_ch {
                let w_row = w_base + c * kernel;
                for k in 0..kernel {
                    acc += weights[w_row + k] * input.get(p + k * dilation, c);
                }
            }
            out.set(p, f, acc);
        }
    }
    Ok(out)
}

/// Non-overlapping max pooling; a trailing window shorter than
/// `pool_size` is truncated. Returns the pooled tensor and, per output
/// cell, the input position that held the maximum (for backprop).
pub fn maxpool1d(input: &Tensor1D, pool_size: usize) -> (Tensor1D, Vec<usize>) {
    assert!(pool_size >= 1);
    let out_len = input.len / pool_size;
    let mut out = Tensor1D::zeros(out_len, input.channels);
    let mut argmax = vec![0usize; out_len * input.channels];
    for p in 0..out_len {
        for c in 0..input.channels {
            let mut best = f64::NEG_INFINITY;
            let mut best_pos = p * pool_size;
            for i in 0..pool_size {
                let pos = p * pool_size + i;
                let v = input.get(pos, c);
                if v > best {
                    best = v;
                    best_pos = pos;
                }
            }
            out.set(p, c, best);
            argmax[p * input.channels + c] = best_pos;
        }
    }
    (out, argmax)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_reproduces_interior() {
        let x = Tensor1D::from_samples(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let weights = vec![0.0, 1.0, 0.0]; // one filter, one channel, kernel 3
        let y = conv1d_forward(&x, &weights, &[0.0], 1, 3, 1).unwrap();
        assert_eq!(y.data, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn dilated_difference_kernel_by_hand() {
        // {1,2,3,4,5} * {1,0,-1} at dilation 2: single valid position,
        // x0 - x4 = -4.
        let x = Tensor1D::from_samples(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let weights = vec![1.0, 0.0, -1.0];
        let y = conv1d_forward(&x, &weights, &[0.0], 1, 3, 2).unwrap();
        assert_eq!(y.len, 1);
        assert_eq!(y.data, vec![-4.0]);
    }

    #[test]
    fn receptive_field_overflow_is_rejected() {
        let x = Tensor1D::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert!(conv1d_forward(&x, &[1.0, 0.0, -1.0], &[0.0], 1, 3, 2).is_err());
    }

    #[test]
    fn random_case_matches_triple_loop_reference() {
        use crate::util::seeded_rng;
        use rand::Rng;
        let mut rng = seeded_rng(11, 0);
        let (len, in_ch, filters, kernel, dilation) = (17, 3, 4, 3, 2);
        let mut x = Tensor1D::zeros(len, in_ch);
        for v in x.data.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let weights: Vec<f64> =
            (0..filters * in_ch * kernel).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bias: Vec<f64> = (0..filters).map(|_| rng.random_range(-0.5..0.5)).collect();
        let y = conv1d_forward(&x, &weights, &bias, filters, kernel, dilation).unwrap();

        let out_len = len - (kernel - 1) * dilation;
        for p in 0..out_len {
            for f in 0..filters {
                let mut want = bias[f];
                for c in 0..in_ch {
                    for k in 0..kernel {
                        want += weights[f * in_ch * kernel + c * kernel + k]
                            * x.get(p + k * dilation, c);
                    }
                }
                assert!((y.get(p, f) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pool_identities() {
        let x = Tensor1D::from_samples(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]);
        let (y, _) = maxpool1d(&x, 2);
        assert_eq!(y.data, vec![3.0, 4.0, 9.0]);

        let (id, _) = maxpool1d(&x, 1);
        assert_eq!(id.data, x.data);

        let c = Tensor1D::from_samples(&[7.0; 9]);
        let (yc, _) = maxpool1d(&c, 3);
        assert_eq!(yc.data, vec![7.0, 7.0, 7.0]);
    }

    #[test]
    fn pool_truncates_remainder_and_caches_argmax() {
        let x = Tensor1D::from_samples(&[1.0, 8.0, 2.0, 3.0, 99.0]);
        let (y, argmax) = maxpool1d(&x, 2);
        assert_eq!(y.data, vec![8.0, 3.0]); // the trailing 99 is cut
        assert_eq!(argmax, vec![1, 3]);
    }
}
