//! Network assembly: Conv→ReLU→Pool blocks, Flatten, Dense(ReLU),
//! Dense(1, sigmoid), with exact gradients for every parameter.

use super::ops::{conv1d_forward, maxpool1d, Tensor1D};
use super::CnnSpec;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Shape bookkeeping and flat-parameter offsets for one concrete input
/// length. Invalid (length-underflowing) specs are rejected here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnLayout {
    pub input_len: usize,
    /// Per block: (conv output length, pooled length, channels out).
    pub shapes: Vec<(usize, usize, usize)>,
    pub flatten: usize,
    conv_w_off: Vec<usize>,
    conv_b_off: Vec<usize>,
    dense_w_off: usize,
    dense_b_off: usize,
    out_w_off: usize,
    out_b_off: usize,
    pub n_params: usize,
}

impl CnnLayout {
    pub fn new(spec: &CnnSpec, input_len: usize) -> Result<CnnLayout> {
        spec.validate()?;
        let mut len = input_len;
        let mut ch = 1usize;
        let mut shapes = Vec::new();
        let mut conv_w_off = Vec::new();
        let mut conv_b_off = Vec::new();
        let mut off = 0usize;
        for (i, b) in spec.blocks.iter().enumerate() {
            let receptive = (b.kernel_size - 1) * b.dilation + 1;
            if len < receptive {
                return Err(Error::Validation(format!(
                    "block {i}: input length {len} is smaller than the receptive field {receptive}"
                )));
            }
            let conv_len = len - (b.kernel_size - 1) * b.dilation;
            let pooled = conv_len / b.pool_size;
            if pooled == 0 {
                return Err(Error::Validation(format!(
                    "block {i}: pool size {} empties the {conv_len}-sample feature map",
                    b.pool_size
                )));
            }
            conv_w_off.push(off);
            off += b.filters * ch * b.kernel_size;
            conv_b_off.push(off);
            off += b.filters;
            shapes.push((conv_len, pooled, b.filters));
            len = pooled;
            ch = b.filters;
        }
        let flatten = len * ch;
        let dense_w_off = off;
        off += spec.dense_units * flatten;
        let dense_b_off = off;
        off += spec.dense_units;
        let out_w_off = off;
        off += spec.dense_units;
        let out_b_off = off;
        off += 1;
        Ok(CnnLayout {
            input_len,
            shapes,
            flatten,
            conv_w_off,
            conv_b_off,
            dense_w_off,
            dense_b_off,
            out_w_off,
            out_b_off,
            n_params: off,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnNetwork {
    pub spec: CnnSpec,
    pub layout: CnnLayout,
    pub params: Vec<f64>,
}

struct BlockCache {
    input: Tensor1D,
    pre_relu: Tensor1D,
    argmax: Vec<usize>,
}

struct ForwardCache {
    blocks: Vec<BlockCache>,
    flat: Vec<f64>,
    dense_pre: Vec<f64>,
    dense_act: Vec<f64>,
    logit: f64,
}

impl CnnNetwork {
    /// Zero-initialized network (useful for the closed-form sanity
    /// checks); call `init_glorot` before training.
    pub fn new(spec: CnnSpec, input_len: usize) -> Result<CnnNetwork> {
        let layout = CnnLayout::new(&spec, input_len)?;
        let params = vec![0.0; layout.n_params];
        Ok(CnnNetwork { spec, layout, params })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_glorot<R: Rng>(&mut self, rng: &mut R) {
        let mut ch = 1usize;
        for (i, b) in self.spec.blocks.iter().enumerate() {
            let fan_in = ch * b.kernel_size;
            let fan_out = b.filters * b.kernel_size;
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let start = self.layout.conv_w_off[i];
            for w in &mut self.params[start..start + b.filters * ch * b.kernel_size] {
                *w = rng.random_range(-limit..limit);
            }
            ch = b.filters;
        }
        let limit = (6.0 / (self.layout.flatten + self.spec.dense_units) as f64).sqrt();
        let start = self.layout.dense_w_off;
        for w in &mut self.params[start..start + self.spec.dense_units * self.layout.flatten] {
            *w = rng.random_range(-limit..limit);
        }
        let limit = (6.0 / (self.spec.dense_units + 1) as f64).sqrt();
        let start = self.layout.out_w_off;
        for w in &mut self.params[start..start + self.spec.dense_units] {
            *w = rng.random_range(-limit..limit);
        }
    }

    fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.layout.input_len {
            return Err(Error::Dimension { expected: self.layout.input_len, got: x.len() });
        }
        let mut t = Tensor1D::from_samples(x);
        let mut blocks = Vec::with_capacity(self.spec.blocks.len());
        let mut ch = 1usize;
        for (i, b) in self.spec.blocks.iter().enumerate() {
            let w_start = self.layout.conv_w_off[i];
            let b_start = self.layout.conv_b_off[i];
            let weights = &self.params[w_start..w_start + b.filters * ch * b.kernel_size];
            let bias = &self.params[b_start..b_start + b.filters];
            let pre = conv1d_forward(&t, weights, bias, b.filters, b.kernel_size, b.dilation)?;
            let mut act = pre.clone();
            for v in act.data.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let (pooled, argmax) = maxpool1d(&act, b.pool_size);
            blocks.push(BlockCache { input: t, pre_relu: pre, argmax });
            t = pooled;
            ch = b.filters;
        }
        let flat = t.data.clone();
        debug_assert_eq!(flat.len(), self.layout.flatten);

        let du = self.spec.dense_units;
        let mut dense_pre = vec![0.0f64; du];
        let wd = &self.params[self.layout.dense_w_off..self.layout.dense_w_off + du * flat.len()];
        let bd = &self.params[self.layout.dense_b_off..self.layout.dense_b_off + du];
        for u in 0..du {
            let row = &wd[u * flat.len()..(u + 1) * flat.len()];
            dense_pre[u] = bd[u] + row.iter().zip(&flat).map(|(a, b)| a * b).sum::<f64>();
        }
        let dense_act: Vec<f64> = dense_pre.iter().map(|&v| v.max(0.0)).collect();
        let wo = &self.params[self.layout.out_w_off..self.layout.out_w_off + du];
        let logit =
            self.params[self.layout.out_b_off] + wo.iter().zip(&dense_act).map(|(a, b)| a * b).sum::<f64>();
        Ok(ForwardCache { blocks, flat, dense_pre, dense_act, logit })
    }

    pub fn forward_logit(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward_cached(x)?.logit)
    }

    /// Probability of the positive class.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.forward_logit(x)?))
    }

    pub fn predict_proba(&self, xs: &[&[f64]]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.forward(x)).collect()
    }

    /// Mean binary cross-entropy over the batch and its gradient with
    /// respect to every parameter.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[f64]) -> Result<(f64, Vec<f64>)> {
        assert_eq!(xs.len(), ys.len());
        assert!(!xs.is_empty());
        let mut grad = vec![0.0f64; self.layout.n_params];
        let mut loss = 0.0f64;
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let cache = self.forward_cached(x)?;
            let z = cache.logit;
            loss += scale * (z.max(0.0) - z * y + (-z.abs()).exp().ln_1p());
            let dz = scale * (sigmoid(z) - y);
            self.backward(&cache, dz, &mut grad);
        }
        if !loss.is_finite() {
            return Err(Error::Convergence("non-finite loss in CNN forward pass".into()));
        }
        Ok((loss, grad))
    }

    fn backward(&self, cache: &ForwardCache, dz: f64, grad: &mut [f64]) {
        let du = self.spec.dense_units;
        let flat_len = cache.flat.len();

        // Output layer.
        grad[self.layout.out_b_off] += dz;
        let wo = self.layout.out_w_off;
        for u in 0..du {
            grad[wo + u] += dz * cache.dense_act[u];
        }

        // Hidden dense layer.
        let mut d_flat = vec![0.0f64; flat_len];
        for u in 0..du {
            if cache.dense_pre[u] <= 0.0 {
                continue;
            }
            let d_pre = dz * self.params[wo + u];
            grad[self.layout.dense_b_off + u] += d_pre;
            let w_row = self.layout.dense_w_off + u * flat_len;
            for (j, df) in d_flat.iter_mut().enumerate() {
                grad[w_row + j] += d_pre * cache.flat[j];
                *df += d_pre * self.params[w_row + j];
            }
        }

        // Conv blocks, last to first.
        let mut d_out = d_flat; // gradient w.r.t. the pooled output of the last block
        for (i, b) in self.spec.blocks.iter().enumerate().rev() {
            let blockc = &cache.blocks[i];
            let (conv_len, pooled_len, filters) = self.layout.shapes[i];
            let in_ch = blockc.input.channels;

            // Un-pool: route gradient to the argmax positions, then apply
            // the ReLU mask from the pre-activation.
            let mut d_conv = vec![0.0f64; conv_len * filters];
            for p in 0..pooled_len {
                for c in 0..filters {
                    let src = blockc.argmax[p * filters + c];
                    if blockc.pre_relu.get(src, c) > 0.0 {
                        d_conv[src * filters + c] += d_out[p * filters + c];
                    }
                }
            }

            // Conv parameter and input gradients.
            let w_start = self.layout.conv_w_off[i];
            let b_start = self.layout.conv_b_off[i];
            let mut d_in = vec![0.0f64; blockc.input.len * in_ch];
            for p in 0..conv_len {
                for f in 0..filters {
                    let g = d_conv[p * filters + f];
                    if g == 0.0 {
                        continue;
                    }
                    grad[b_start + f] += g;
                    let w_base = w_start + f * in_ch * b.kernel_size;
                    for c in 0..in_ch {
                        let w_row = w_base + c * b.kernel_size;
                        for k in 0..b.kernel_size {
                            let pos = p + k * b.dilation;
                            grad[w_row + k] += g * blockc.input.get(pos, c);
                            d_in[pos * in_ch + c] += g * self.params[w_row + k];
                        }
                    }
                }
            }
            d_out = d_in;
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{CnnSpec, ConvBlock, DilationSchedule, EarlyStopping, OptimizerKind};
    use crate::util::seeded_rng;
    use rand::Rng;

    fn tiny_spec(blocks: Vec<ConvBlock>, dense: usize) -> CnnSpec {
        CnnSpec {
            blocks,
            dense_units: dense,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            batch_size: 4,
            epochs: 2,
            early_stopping: EarlyStopping::default(),
        }
    }

    #[test]
    fn zero_network_outputs_one_half() {
        let spec = tiny_spec(
            vec![ConvBlock { filters: 3, kernel_size: 3, dilation: 1, pool_size: 2 }],
            4,
        );
        let net = CnnNetwork::new(spec, 12).unwrap();
        let x = vec![0.0; 12];
        assert_eq!(net.forward(&x).unwrap(), 0.5);
    }

    #[test]
    fn hand_computed_single_conv_forward() {
        // One filter, kernel 3, identity-ish weights on a length-6 input,
        // pool 2, dense 1 with unit weight: every intermediate value is
        // computed by hand.
        let spec = tiny_spec(
            vec![ConvBlock { filters: 1, kernel_size: 3, dilation: 1, pool_size: 2 }],
            1,
        );
        let mut net = CnnNetwork::new(spec, 6).unwrap();
        // conv weights [1, 2, -1], bias 0.5
        net.params[0] = 1.0;
        net.params[1] = 2.0;
        net.params[2] = -1.0;
        net.params[3] = 0.5;
        // dense w (1×2) = [1, 1], b = 0; out w = [1], b = 0.
        let l = net.layout.clone();
        net.params[l.dense_w_off] = 1.0;
        net.params[l.dense_w_off + 1] = 1.0;
        net.params[l.out_w_off] = 1.0;

        let x = [1.0, 0.0, -1.0, 2.0, 1.0, 0.0];
        // conv: p0: 1*1+0*2-(-1)... = 1 + 0 + 1 + 0.5 = 2.5
        //       p1: 0 - 2 - 2 + 0.5 = -3.5 -> relu 0
        //       p2: -1 + 4 - 1 + 0.5 = 2.5
        //       p3: 2 + 2 - 0 + 0.5 = 4.5
        // relu: [2.5, 0, 2.5, 4.5]; pool2: [2.5, 4.5]
        // dense: relu(2.5 + 4.5) = 7.0; out: 7.0
        let z = net.forward_logit(&x).unwrap();
        assert!((z - 7.0).abs() < 1e-12, "logit {z}");
    }

    fn finite_diff_check(spec: CnnSpec, input_len: usize, seed: u64) {
        let mut net = CnnNetwork::new(spec, input_len).unwrap();
        let mut rng = seeded_rng(seed, 0);
        net.init_glorot(&mut rng);
        // Nonzero biases exercise every gradient path.
        for p in net.params.iter_mut() {
            if *p == 0.0 {
                *p = rng.random_range(-0.1..0.1);
            }
        }
        let xs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..input_len).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let ys = vec![1.0, 0.0, 1.0];

        let (_, grad) = net.loss_and_grad(&refs, &ys).unwrap();
        let h = 1e-4;
        for i in 0..net.params.len() {
            let orig = net.params[i];
            net.params[i] = orig + h;
            let (lp, _) = net.loss_and_grad(&refs, &ys).unwrap();
            net.params[i] = orig - h;
            let (lm, _) = net.loss_and_grad(&refs, &ys).unwrap();
            net.params[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            let denom = fd.abs().max(grad[i].abs()).max(1e-6);
            assert!(
                (fd - grad[i]).abs() / denom < 1e-4,
                "param {i}: analytic {} vs fd {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences_one_layer() {
        let spec = tiny_spec(
            vec![ConvBlock { filters: 3, kernel_size: 5, dilation: 1, pool_size: 2 }],
            4,
        );
        finite_diff_check(spec, 14, 21);
    }

    #[test]
    fn gradients_match_finite_differences_three_dilated_layers() {
        let spec = tiny_spec(
            vec![
                ConvBlock { filters: 2, kernel_size: 3, dilation: 1, pool_size: 1 },
                ConvBlock { filters: 3, kernel_size: 3, dilation: 2, pool_size: 1 },
                ConvBlock { filters: 2, kernel_size: 3, dilation: 4, pool_size: 2 },
            ],
            3,
        );
        finite_diff_check(spec, 24, 22);
    }

    #[test]
    fn underflowing_spec_is_rejected_at_construction() {
        let spec = CnnSpec::dilated(4, DilationSchedule::Exponential).unwrap();
        // Receptive field needs 31 samples; 30 must be rejected.
        assert!(CnnNetwork::new(spec.clone(), 30).is_err());
        assert!(CnnNetwork::new(spec, 40).is_ok());
    }

    #[test]
    fn declared_shapes_match_computed_tensors() {
        for (spec, len) in [
            (CnnSpec::plain(1).unwrap(), 30),
            (CnnSpec::plain(2).unwrap(), 30),
            (CnnSpec::plain(3).unwrap(), 30),
            (CnnSpec::plain(4).unwrap(), 30),
            (CnnSpec::dilated(1, DilationSchedule::Exponential).unwrap(), 30),
            (CnnSpec::dilated(2, DilationSchedule::Exponential).unwrap(), 30),
            (CnnSpec::dilated(3, DilationSchedule::Exponential).unwrap(), 30),
            (CnnSpec::dilated(4, DilationSchedule::Exponential).unwrap(), 40),
            (CnnSpec::dilated(4, DilationSchedule::Linear).unwrap(), 30),
        ] {
            let net = CnnNetwork::new(spec, len).unwrap();
            let x = vec![0.25; len];
            // Forward must succeed and agree with the layout's flatten size.
            assert!(net.forward(&x).is_ok());
            let (last_len, last_pool, last_ch) = *net.layout.shapes.last().unwrap();
            assert!(last_len >= last_pool);
            assert_eq!(net.layout.flatten, last_pool * last_ch);
        }
    }
}
