//! Convolutional classifier for single-channel range-Doppler images.
//!
//! A stack of `blocks` identical stages (same-padded 3×3 convolution, ReLU,
//! 2×2 max-pool with floor semantics) feeds a ReLU dense layer, inverted
//! dropout and a single sigmoid output. Feature maps are stored
//! channels-last (`y, x, c`) so the innermost loops run over output channels.
//!
//! All parameters live in one flat vector; [`Layout`] records where each
//! layer's weights and biases sit. Gradients use the same layout, which keeps
//! the optimizer oblivious to the network structure.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{real, Real, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// Side length of the square input image.
    pub input_size: usize,
    pub blocks: usize,
    /// Kernels per convolution layer.
    pub kernels: usize,
    pub dense_units: usize,
    pub dropout: f64,
}

impl Default for Architecture {
    /// Six 16-kernel blocks on 200×200 inputs, 16 dense units, dropout 0.5.
    fn default() -> Self {
        Architecture {
            input_size: 200,
            blocks: 6,
            kernels: 16,
            dense_units: 16,
            dropout: 0.5,
        }
    }
}

impl Architecture {
    /// Spatial side length at the input of each block, followed by the final
    /// pooled size.
    pub fn spatial_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_size];
        for _ in 0..self.blocks {
            let last = *sizes.last().unwrap();
            sizes.push(last / 2);
        }
        sizes
    }

    pub fn flatten_len(&self) -> usize {
        let s = *self.spatial_sizes().last().unwrap();
        s * s * self.kernels
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.kernels == 0 || self.dense_units == 0 {
            return Err(Error::Config(format!("degenerate architecture {self:?}")));
        }
        if self.flatten_len() == 0 {
            return Err(Error::Config(format!(
                "input {} too small for {} pooling stages",
                self.input_size, self.blocks
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} not in [0,1)", self.dropout)));
        }
        Ok(())
    }

    fn in_channels(&self, block: usize) -> usize {
        if block == 0 {
            1
        } else {
            self.kernels
        }
    }
}

/// Offsets of every layer inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub conv_weights: Vec<Range<usize>>,
    pub conv_biases: Vec<Range<usize>>,
    pub dense1_weights: Range<usize>,
    pub dense1_bias: Range<usize>,
    pub dense2_weights: Range<usize>,
    pub dense2_bias: Range<usize>,
    pub total: usize,
}

impl Layout {
    pub fn new(arch: &Architecture) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let mut conv_weights = Vec::new();
        let mut conv_biases = Vec::new();
        for b in 0..arch.blocks {
            conv_weights.push(take(9 * arch.in_channels(b) * arch.kernels));
            conv_biases.push(take(arch.kernels));
        }
        let dense1_weights = take(arch.flatten_len() * arch.dense_units);
        let dense1_bias = take(arch.dense_units);
        let dense2_weights = take(arch.dense_units);
        let dense2_bias = take(1);
        Layout {
            conv_weights,
            conv_biases,
            dense1_weights,
            dense1_bias,
            dense2_weights,
            dense2_bias,
            total: at,
        }
    }

    /// Named parameter groups, for reporting and gradient checks.
    pub fn groups(&self) -> Vec<(String, Range<usize>)> {
        let mut g = Vec::new();
        for (i, (w, b)) in self.conv_weights.iter().zip(&self.conv_biases).enumerate() {
            g.push((format!("conv{}.weight", i + 1), w.clone()));
            g.push((format!("conv{}.bias", i + 1), b.clone()));
        }
        g.push(("dense1.weight".into(), self.dense1_weights.clone()));
        g.push(("dense1.bias".into(), self.dense1_bias.clone()));
        g.push(("dense2.weight".into(), self.dense2_weights.clone()));
        g.push(("dense2.bias".into(), self.dense2_bias.clone()));
        g
    }
}

/// Architecture plus its flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub arch: Architecture,
    pub layout: Layout,
    pub values: Vec<T>,
}

impl<T: Real> NetworkParams<T> {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let layout = Layout::new(&arch);
        let values = vec![T::zero(); layout.total];
        Ok(NetworkParams {
            arch,
            layout,
            values,
        })
    }

    /// He-uniform weights (limit `sqrt(6 / fan_in)`), zero biases.
    pub fn he_uniform<R: Rng>(arch: Architecture, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        let mut fill = |range: Range<usize>, fan_in: usize, values: &mut [T]| {
            let limit = (6.0 / fan_in as f64).sqrt();
            for v in &mut values[range] {
                *v = real(rng.random_range(-limit..limit));
            }
        };
        for b in 0..arch.blocks {
            let r = p.layout.conv_weights[b].clone();
            fill(r, 9 * arch.in_channels(b), &mut p.values);
        }
        let r = p.layout.dense1_weights.clone();
        fill(r, arch.flatten_len(), &mut p.values);
        let r = p.layout.dense2_weights.clone();
        fill(r, arch.dense_units, &mut p.values);
        Ok(p)
    }

    pub fn from_values(arch: Architecture, values: Vec<T>) -> Result<Self> {
        arch.validate()?;
        let layout = Layout::new(&arch);
        if values.len() != layout.total {
            return Err(Error::Data(format!(
                "architecture needs {} parameters, got {}",
                layout.total,
                values.len()
            )));
        }
        Ok(NetworkParams {
            arch,
            layout,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cast<U: Real>(&self) -> NetworkParams<U> {
        NetworkParams {
            arch: self.arch,
            layout: self.layout.clone(),
            values: self
                .values
                .iter()
                .map(|v| U::from(*v).expect("finite parameter"))
                .collect(),
        }
    }
}

/// Intermediate values of one sample's forward pass.
#[derive(Debug, Clone)]
pub struct SampleCache<T> {
    input: Vec<T>,
    /// Post-ReLU convolution output of every block.
    conv_out: Vec<Vec<T>>,
    /// Pooled output of every block; the last one is the flattened vector.
    pooled: Vec<Vec<T>>,
    /// For each pooled cell, the index into `conv_out` it was taken from.
    pool_src: Vec<Vec<u32>>,
    hidden: Vec<T>,
    /// Dropout multipliers (0 or 1/(1-rate)); all ones in inference mode.
    dropout_scale: Vec<T>,
    pub logit: T,
}

#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub samples: Vec<SampleCache<T>>,
}

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Sigmoid clamped into the open unit interval.
pub fn probability<T: Real>(z: T) -> T {
    let eps = T::epsilon();
    sigmoid(z).max(eps).min(T::one() - eps)
}

/// Binary cross-entropy of a logit against a 0/1 label, computed without
/// forming the probability.
pub fn bce_from_logit<T: Real>(z: T, label: T) -> T {
    let softplus = z.max(T::zero()) + (T::one() + (-z.abs()).exp()).ln();
    softplus - label * z
}

fn conv3x3_same<T: Real>(
    input: &[T],
    size: usize,
    cin: usize,
    weights: &[T],
    bias: &[T],
    out: &mut [T],
) {
    match bias.len() {
        16 => conv3x3_fixed::<T, 16>(input, size, cin, weights, bias, out),
        8 => conv3x3_fixed::<T, 8>(input, size, cin, weights, bias, out),
        4 => conv3x3_fixed::<T, 4>(input, size, cin, weights, bias, out),
        _ => conv3x3_dyn(input, size, cin, weights, bias, out),
    }
}

/// Input-neighbourhood taps of output pixel `(y, x)`: `(tap, input pixel)`.
#[inline(always)]
fn taps(y: usize, x: usize, size: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..3).flat_map(move |ky| {
        (0..3).filter_map(move |kx| {
            let (iy, ix) = (y + ky, x + kx);
            if iy == 0 || iy > size || ix == 0 || ix > size {
                None
            } else {
                Some((ky * 3 + kx, (iy - 1) * size + ix - 1))
            }
        })
    })
}

fn conv3x3_fixed<T: Real, const CO: usize>(
    input: &[T],
    size: usize,
    cin: usize,
    weights: &[T],
    bias: &[T],
    out: &mut [T],
) {
    let bias: [T; CO] = bias.try_into().expect("bias length");
    for y in 0..size {
        for x in 0..size {
            let mut acc = bias;
            for (tap, pix) in taps(y, x, size) {
                let inp = &input[pix * cin..][..cin];
                let wk = &weights[tap * cin * CO..][..cin * CO];
                for (&a, wrow) in inp.iter().zip(wk.chunks_exact(CO)) {
                    if a == T::zero() {
                        continue;
                    }
                    for c in 0..CO {
                        acc[c] += a * wrow[c];
                    }
                }
            }
            let o = &mut out[(y * size + x) * CO..][..CO];
            for c in 0..CO {
                o[c] = acc[c].max(T::zero());
            }
        }
    }
}

fn conv3x3_dyn<T: Real>(
    input: &[T],
    size: usize,
    cin: usize,
    weights: &[T],
    bias: &[T],
    out: &mut [T],
) {
    let cout = bias.len();
    for y in 0..size {
        for x in 0..size {
            let o = &mut out[(y * size + x) * cout..][..cout];
            o.copy_from_slice(bias);
            for (tap, pix) in taps(y, x, size) {
                let inp = &input[pix * cin..][..cin];
                let wk = &weights[tap * cin * cout..][..cin * cout];
                for (&a, wrow) in inp.iter().zip(wk.chunks_exact(cout)) {
                    for (acc, &w) in o.iter_mut().zip(wrow) {
                        *acc += a * w;
                    }
                }
            }
            for v in o.iter_mut() {
                *v = v.max(T::zero());
            }
        }
    }
}

fn split_conv_grad<'a, T>(
    grad: &'a mut [T],
    weights: &Range<usize>,
    bias: &Range<usize>,
) -> (&'a mut [T], &'a mut [T]) {
    debug_assert_eq!(weights.end, bias.start);
    let (w, rest) = grad[weights.start..bias.end].split_at_mut(weights.len());
    (w, rest)
}

/// Accumulates weight, bias and (optionally) input gradients of a
/// same-padded 3×3 convolution given the gradient at its pre-activation
/// output. Positions whose output gradient is entirely zero are skipped.
#[allow(clippy::too_many_arguments)]
fn conv3x3_backward<T: Real>(
    x: &[T],
    size: usize,
    cin: usize,
    weights: &[T],
    dout: &[T],
    gw: &mut [T],
    gb: &mut [T],
    dx: Option<&mut [T]>,
) {
    match gb.len() {
        16 => conv3x3_backward_fixed::<T, 16>(x, size, cin, weights, dout, gw, gb, dx),
        8 => conv3x3_backward_fixed::<T, 8>(x, size, cin, weights, dout, gw, gb, dx),
        4 => conv3x3_backward_fixed::<T, 4>(x, size, cin, weights, dout, gw, gb, dx),
        k => conv3x3_backward_dyn(x, size, cin, k, weights, dout, gw, gb, dx),
    }
}

#[allow(clippy::too_many_arguments)]
fn conv3x3_backward_fixed<T: Real, const CO: usize>(
    x: &[T],
    size: usize,
    cin: usize,
    weights: &[T],
    dout: &[T],
    gw: &mut [T],
    gb: &mut [T],
    mut dx: Option<&mut [T]>,
) {
    // Weights as [tap][cout][cin] for the input-gradient scatter.
    let mut wt = Vec::new();
    if dx.is_some() {
        assert_eq!(cin, CO);
        wt = vec![T::zero(); weights.len()];
        for tap in 0..9 {
            for ci in 0..CO {
                for co in 0..CO {
                    wt[(tap * CO + co) * CO + ci] = weights[(tap * CO + ci) * CO + co];
                }
            }
        }
    }
    for y in 0..size {
        for xx in 0..size {
            let d: [T; CO] = dout[(y * size + xx) * CO..][..CO].try_into().unwrap();
            if d.iter().all(|v| *v == T::zero()) {
                continue;
            }
            for c in 0..CO {
                gb[c] += d[c];
            }
            for (tap, pix) in taps(y, xx, size) {
                let inp = &x[pix * cin..][..cin];
                let gtap = &mut gw[tap * cin * CO..][..cin * CO];
                for (&a, grow) in inp.iter().zip(gtap.chunks_exact_mut(CO)) {
                    if a == T::zero() {
                        continue;
                    }
                    for c in 0..CO {
                        grow[c] += a * d[c];
                    }
                }
                if let Some(dx) = dx.as_deref_mut() {
                    // Input gradients only exist for inner blocks, where cin == CO.
                    let wtap = &wt[tap * CO * CO..][..CO * CO];
                    let dxi: &mut [T; CO] = (&mut dx[pix * CO..][..CO]).try_into().unwrap();
                    for (&dv, wcol) in d.iter().zip(wtap.chunks_exact(CO)) {
                        if dv == T::zero() {
                            continue;
                        }
                        for c in 0..CO {
                            dxi[c] += dv * wcol[c];
                        }
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv3x3_backward_dyn<T: Real>(
    x: &[T],
    size: usize,
    cin: usize,
    cout: usize,
    weights: &[T],
    dout: &[T],
    gw: &mut [T],
    gb: &mut [T],
    mut dx: Option<&mut [T]>,
) {
    for y in 0..size {
        for xx in 0..size {
            let d = &dout[(y * size + xx) * cout..][..cout];
            if d.iter().all(|v| *v == T::zero()) {
                continue;
            }
            for (g, &dv) in gb.iter_mut().zip(d) {
                *g += dv;
            }
            for (tap, pix) in taps(y, xx, size) {
                let inp = &x[pix * cin..][..cin];
                let gtap = &mut gw[tap * cin * cout..][..cin * cout];
                for (&a, grow) in inp.iter().zip(gtap.chunks_exact_mut(cout)) {
                    for (g, &dv) in grow.iter_mut().zip(d) {
                        *g += a * dv;
                    }
                }
                if let Some(dx) = dx.as_deref_mut() {
                    let wtap = &weights[tap * cin * cout..][..cin * cout];
                    let dxi = &mut dx[pix * cin..][..cin];
                    for (g, wrow) in dxi.iter_mut().zip(wtap.chunks_exact(cout)) {
                        let mut acc = T::zero();
                        for (&wv, &dv) in wrow.iter().zip(d) {
                            acc += wv * dv;
                        }
                        *g += acc;
                    }
                }
            }
        }
    }
}

/// 2×2 stride-2 max-pool, floor semantics. Ties go to the first position in
/// scan order.
fn max_pool<T: Real>(input: &[T], size: usize, ch: usize, out: &mut [T], src: &mut [u32]) {
    let half = size / 2;
    for y in 0..half {
        for x in 0..half {
            for c in 0..ch {
                let mut best_idx = ((2 * y) * size + 2 * x) * ch + c;
                let mut best = input[best_idx];
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = ((2 * y + dy) * size + 2 * x + dx) * ch + c;
                    if input[idx] > best {
                        best = input[idx];
                        best_idx = idx;
                    }
                }
                let o = (y * half + x) * ch + c;
                out[o] = best;
                src[o] = best_idx as u32;
            }
        }
    }
}

impl<T: Real> NetworkParams<T> {
    /// Forward pass of one flattened `input_size²` image.
    ///
    /// `dropout_keep` is the per-unit keep mask for training mode; `None`
    /// runs inference.
    pub fn forward_sample(&self, input: &[T], dropout_keep: Option<&[bool]>) -> SampleCache<T> {
        let arch = &self.arch;
        let sizes = arch.spatial_sizes();
        let k = arch.kernels;
        let mut conv_out = Vec::with_capacity(arch.blocks);
        let mut pooled: Vec<Vec<T>> = Vec::with_capacity(arch.blocks);
        let mut pool_src = Vec::with_capacity(arch.blocks);

        for b in 0..arch.blocks {
            let s = sizes[b];
            let cin = arch.in_channels(b);
            let x: &[T] = if b == 0 { input } else { &pooled[b - 1] };
            let mut c = vec![T::zero(); s * s * k];
            conv3x3_same(
                x,
                s,
                cin,
                &self.values[self.layout.conv_weights[b].clone()],
                &self.values[self.layout.conv_biases[b].clone()],
                &mut c,
            );
            let h = sizes[b + 1];
            let mut p = vec![T::zero(); h * h * k];
            let mut src = vec![0u32; h * h * k];
            max_pool(&c, s, k, &mut p, &mut src);
            conv_out.push(c);
            pooled.push(p);
            pool_src.push(src);
        }

        let flat = pooled.last().unwrap();
        let units = arch.dense_units;
        let w1 = &self.values[self.layout.dense1_weights.clone()];
        let mut hidden = self.values[self.layout.dense1_bias.clone()].to_vec();
        for (f, &a) in flat.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            for (h, &w) in hidden.iter_mut().zip(&w1[f * units..(f + 1) * units]) {
                *h += a * w;
            }
        }
        for h in hidden.iter_mut() {
            if *h < T::zero() {
                *h = T::zero();
            }
        }

        let keep_scale: T = real(1.0 / (1.0 - arch.dropout));
        let dropout_scale: Vec<T> = match dropout_keep {
            Some(mask) => mask
                .iter()
                .map(|&kept| if kept { keep_scale } else { T::zero() })
                .collect(),
            None => vec![T::one(); units],
        };

        let w2 = &self.values[self.layout.dense2_weights.clone()];
        let mut logit = self.values[self.layout.dense2_bias.start];
        for j in 0..units {
            logit += w2[j] * hidden[j] * dropout_scale[j];
        }

        SampleCache {
            input: input.to_vec(),
            conv_out,
            pooled,
            pool_src,
            hidden,
            dropout_scale,
            logit,
        }
    }

    /// Gradient of `weight · bce(sample)` accumulated into `grad`.
    pub fn backward_sample(&self, cache: &SampleCache<T>, label: T, weight: T, grad: &mut [T]) {
        let arch = &self.arch;
        let sizes = arch.spatial_sizes();
        let k = arch.kernels;
        let units = arch.dense_units;
        let lay = &self.layout;

        let dlogit = (sigmoid(cache.logit) - label) * weight;

        // Output layer and dropout.
        grad[lay.dense2_bias.start] += dlogit;
        let w2 = &self.values[lay.dense2_weights.clone()];
        let mut dhidden = vec![T::zero(); units];
        for j in 0..units {
            let dropped = cache.hidden[j] * cache.dropout_scale[j];
            grad[lay.dense2_weights.start + j] += dlogit * dropped;
            dhidden[j] = if cache.hidden[j] > T::zero() {
                dlogit * w2[j] * cache.dropout_scale[j]
            } else {
                T::zero()
            };
        }

        // Hidden dense layer.
        for (g, &d) in grad[lay.dense1_bias.clone()].iter_mut().zip(&dhidden) {
            *g += d;
        }
        let flat = cache.pooled.last().unwrap();
        let w1 = &self.values[lay.dense1_weights.clone()];
        let mut dflat = vec![T::zero(); flat.len()];
        {
            let gw1 = &mut grad[lay.dense1_weights.clone()];
            for (f, &a) in flat.iter().enumerate() {
                let wrow = &w1[f * units..(f + 1) * units];
                let grow = &mut gw1[f * units..(f + 1) * units];
                let mut acc = T::zero();
                for j in 0..units {
                    grow[j] += a * dhidden[j];
                    acc += wrow[j] * dhidden[j];
                }
                dflat[f] = acc;
            }
        }

        // Convolution blocks, last to first.
        let mut dpooled = dflat;
        for b in (0..arch.blocks).rev() {
            let s = sizes[b];
            let cin = arch.in_channels(b);
            let conv = &cache.conv_out[b];

            let mut dconv = vec![T::zero(); s * s * k];
            for (o, &src) in cache.pool_src[b].iter().enumerate() {
                let src = src as usize;
                if conv[src] > T::zero() {
                    dconv[src] += dpooled[o];
                }
            }

            let x: &[T] = if b == 0 {
                &cache.input
            } else {
                &cache.pooled[b - 1]
            };
            let w = &self.values[lay.conv_weights[b].clone()];
            let (gw, gb) = split_conv_grad(grad, &lay.conv_weights[b], &lay.conv_biases[b]);
            let mut dx = if b > 0 {
                vec![T::zero(); s * s * cin]
            } else {
                Vec::new()
            };
            let dx_slot = if b > 0 { Some(dx.as_mut_slice()) } else { None };
            conv3x3_backward(x, s, cin, w, &dconv, gw, gb, dx_slot);
            dpooled = dx;
        }
    }

    fn check_batch(&self, batch: &Tensor<T>) -> Result<usize> {
        let s = self.arch.input_size;
        match batch.shape() {
            [b, h, w, 1] if *h == s && *w == s => Ok(*b),
            other => Err(Error::Data(format!(
                "expected batch shape [B, {s}, {s}, 1], got {other:?}"
            ))),
        }
    }

    /// Draws the dropout keep-masks for `n` samples.
    pub fn dropout_masks<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Vec<bool>> {
        let keep = 1.0 - self.arch.dropout;
        (0..n)
            .map(|_| {
                (0..self.arch.dense_units)
                    .map(|_| rng.random::<f64>() < keep)
                    .collect()
            })
            .collect()
    }

    /// Batched forward pass. In training mode dropout masks are drawn from
    /// `dropout_rng` in sample order before any parallel work starts.
    pub fn forward<R: Rng>(
        &self,
        batch: &Tensor<T>,
        training: bool,
        dropout_rng: &mut R,
    ) -> Result<(Vec<T>, ForwardCache<T>)> {
        use rayon::prelude::*;
        let n = self.check_batch(batch)?;
        let masks = if training {
            Some(self.dropout_masks(n, dropout_rng))
        } else {
            None
        };
        let samples: Vec<SampleCache<T>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mask = masks.as_ref().map(|m| m[i].as_slice());
                self.forward_sample(batch.item(i), mask)
            })
            .collect();
        let probs = samples.iter().map(|c| probability(c.logit)).collect();
        Ok((probs, ForwardCache { samples }))
    }

    /// Gradient of the mean binary cross-entropy over the cached batch.
    pub fn backward(&self, cache: &ForwardCache<T>, labels: &[T]) -> Result<Vec<T>> {
        use rayon::prelude::*;
        if labels.len() != cache.samples.len() || labels.is_empty() {
            return Err(Error::Data(format!(
                "{} labels for a batch of {}",
                labels.len(),
                cache.samples.len()
            )));
        }
        let weight = T::one() / real(labels.len() as f64);
        let per_sample: Vec<Vec<T>> = cache
            .samples
            .par_iter()
            .zip(labels.par_iter())
            .map(|(c, &y)| {
                let mut g = vec![T::zero(); self.len()];
                self.backward_sample(c, y, weight, &mut g);
                g
            })
            .collect();
        // Summed in sample order so results do not depend on thread count.
        let mut grad = vec![T::zero(); self.len()];
        for g in &per_sample {
            for (acc, &v) in grad.iter_mut().zip(g) {
                *acc += v;
            }
        }
        Ok(grad)
    }

    /// Mean binary cross-entropy of a batch, inference mode unless masks are
    /// given.
    pub fn loss(&self, inputs: &[&[T]], labels: &[T], masks: Option<&[Vec<bool>]>) -> T {
        let mut total = T::zero();
        for (i, (x, &y)) in inputs.iter().zip(labels).enumerate() {
            let c = self.forward_sample(x, masks.map(|m| m[i].as_slice()));
            total += bce_from_logit(c.logit, y);
        }
        total / real(inputs.len() as f64)
    }

    /// Probability of class 1 for a single image, inference mode.
    pub fn predict_one(&self, input: &[T]) -> Result<T> {
        let s = self.arch.input_size;
        if input.len() != s * s {
            return Err(Error::Data(format!(
                "expected {} input values, got {}",
                s * s,
                input.len()
            )));
        }
        Ok(probability(self.forward_sample(input, None).logit))
    }
}
