//! Layer graphs: specification, shape propagation, and a built network with
//! a flat parameter vector.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::{self, Activation, ConvGeom, Dims, PoolKind};
use crate::error::{Error, Result};
use crate::rng::{rng_for, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        filters: usize,
        kernel_h: usize,
        kernel_w: usize,
    },
    MaxPool {
        h: usize,
        w: usize,
    },
    AvgPool {
        h: usize,
        w: usize,
    },
    Flatten,
    Dense {
        units: usize,
    },
    Activation {
        kind: Activation,
    },
    /// One zero column before each listed width index of the input.
    InsertZeroColumns {
        before: Vec<usize>,
    },
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Image(Dims),
    Flat(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match self {
            Shape::Image(d) => d.len(),
            Shape::Flat(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub name: String,
    pub input: Shape,
    pub layers: Vec<LayerSpec>,
}

fn reject(name: &str, i: usize, why: String) -> Error {
    Error::Infeasible(format!("{name}: layer {i}: {why}"))
}

impl NetSpec {
    /// Shapes before and after every layer (`layers.len() + 1` entries).
    /// Fails when any shape would be empty or a layer gets the wrong kind of
    /// input, so a built network cannot hit a shape error at run time.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        if self.input.is_empty() {
            return Err(Error::Infeasible(format!("{}: empty input", self.name)));
        }
        let mut shapes = vec![self.input];
        for (i, layer) in self.layers.iter().enumerate() {
            let cur = *shapes.last().expect("nonempty");
            let next = match (layer, cur) {
                (LayerSpec::Conv2d { filters, kernel_h, kernel_w }, Shape::Image(d)) => {
                    let g = ConvGeom {
                        input: d,
                        filters: *filters,
                        kh: *kernel_h,
                        kw: *kernel_w,
                    };
                    if *filters == 0 || !g.fits() {
                        return Err(reject(
                            &self.name,
                            i,
                            format!("{kernel_h}x{kernel_w} kernel does not fit {}x{} input", d.h, d.w),
                        ));
                    }
                    Shape::Image(g.output())
                }
                (LayerSpec::MaxPool { h, w } | LayerSpec::AvgPool { h, w }, Shape::Image(d)) => {
                    if *h == 0 || *w == 0 || *h > d.h || *w > d.w {
                        return Err(reject(&self.name, i, format!("{h}x{w} pool on {}x{} input", d.h, d.w)));
                    }
                    Shape::Image(layers::pool_output(d, *h, *w))
                }
                (LayerSpec::Flatten, s) => Shape::Flat(s.len()),
                (LayerSpec::Dense { units }, Shape::Flat(_)) if *units > 0 => Shape::Flat(*units),
                (LayerSpec::Activation { .. }, s) => s,
                (LayerSpec::InsertZeroColumns { before }, Shape::Image(d)) => {
                    if before.windows(2).any(|p| p[0] > p[1]) || before.iter().any(|&b| b > d.w) {
                        return Err(reject(&self.name, i, format!("bad column positions {before:?}")));
                    }
                    Shape::Image(Dims::new(d.h, d.w + before.len(), d.d))
                }
                (LayerSpec::Softmax, Shape::Flat(n)) if i + 1 == self.layers.len() && n >= 1 => Shape::Flat(n),
                (layer, shape) => {
                    return Err(reject(&self.name, i, format!("{layer:?} cannot follow {shape:?}")));
                }
            };
            if next.is_empty() {
                return Err(reject(&self.name, i, "output shape collapses to zero".into()));
            }
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn output_len(&self) -> Result<usize> {
        Ok(self.shapes()?.last().expect("input shape").len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct ParamSlot {
    offset: usize,
    weights: usize,
    bias: usize,
}

/// A built network: validated spec, cached shapes, flat parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub spec: NetSpec,
    shapes: Vec<Shape>,
    slots: Vec<Option<ParamSlot>>,
    pub params: Vec<f64>,
}

/// Fixed chunking keeps batch gradient sums identical for any thread count.
const GRAD_CHUNK: usize = 16;

impl Network {
    /// Builds the network and draws weights uniformly in `+-sqrt(3 / fan_in)`;
    /// biases start at zero.
    pub fn new(spec: NetSpec, seed: u64) -> Result<Self> {
        let shapes = spec.shapes()?;
        if !matches!(spec.layers.last(), Some(LayerSpec::Softmax)) {
            return Err(Error::InvalidConfig(format!("{}: last layer must be softmax", spec.name)));
        }
        let mut slots = Vec::with_capacity(spec.layers.len());
        let mut total = 0;
        let mut fan_ins = Vec::new();
        for (i, layer) in spec.layers.iter().enumerate() {
            let slot = match (layer, shapes[i]) {
                (LayerSpec::Conv2d { filters, kernel_h, kernel_w }, Shape::Image(d)) => {
                    let fan_in = kernel_h * kernel_w * d.d;
                    fan_ins.push(fan_in);
                    Some(ParamSlot {
                        offset: total,
                        weights: filters * fan_in,
                        bias: *filters,
                    })
                }
                (LayerSpec::Dense { units }, Shape::Flat(n)) => {
                    fan_ins.push(n);
                    Some(ParamSlot {
                        offset: total,
                        weights: units * n,
                        bias: *units,
                    })
                }
                _ => None,
            };
            if let Some(s) = slot {
                total += s.weights + s.bias;
            }
            slots.push(slot);
        }

        let mut params = vec![0.0; total];
        let mut rng = rng_for(seed, &[stream::INIT]);
        for (slot, fan_in) in slots.iter().flatten().zip(fan_ins) {
            let a = (3.0 / fan_in as f64).sqrt();
            for p in &mut params[slot.offset..slot.offset + slot.weights] {
                *p = rng.random_range(-a..a);
            }
        }
        Ok(Self {
            spec,
            shapes,
            slots,
            params,
        })
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn n_classes(&self) -> usize {
        self.shapes.last().expect("shapes").len()
    }

    pub fn input_len(&self) -> usize {
        self.shapes[0].len()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_len() {
            return Err(Error::ShapeMismatch(format!(
                "{} expects {} input values, got {}",
                self.spec.name,
                self.input_len(),
                input.len()
            )));
        }
        Ok(())
    }

    fn image(&self, i: usize) -> Dims {
        match self.shapes[i] {
            Shape::Image(d) => d,
            Shape::Flat(n) => Dims::new(1, n, 1),
        }
    }

    /// Activations after every layer; entry 0 is the input.
    fn forward_with(&self, params: &[f64], input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.spec.layers.len() + 1);
        acts.push(input.to_vec());
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let x = &acts[i];
            let mut out = vec![0.0; self.shapes[i + 1].len()];
            match layer {
                LayerSpec::Conv2d { filters, kernel_h, kernel_w } => {
                    let slot = self.slots[i].expect("conv slot");
                    let g = ConvGeom {
                        input: self.image(i),
                        filters: *filters,
                        kh: *kernel_h,
                        kw: *kernel_w,
                    };
                    let (k, b) = params[slot.offset..].split_at(slot.weights);
                    layers::conv2d_forward(&g, x, k, &b[..slot.bias], &mut out);
                }
                LayerSpec::MaxPool { h, w } => layers::pool_forward(PoolKind::Max, self.image(i), *h, *w, x, &mut out),
                LayerSpec::AvgPool { h, w } => layers::pool_forward(PoolKind::Avg, self.image(i), *h, *w, x, &mut out),
                LayerSpec::Flatten => out.copy_from_slice(x),
                LayerSpec::Dense { .. } => {
                    let slot = self.slots[i].expect("dense slot");
                    let (w, b) = params[slot.offset..].split_at(slot.weights);
                    layers::dense_forward(w, &b[..slot.bias], x, &mut out);
                }
                LayerSpec::Activation { kind } => kind.forward(x, &mut out),
                LayerSpec::InsertZeroColumns { before } => {
                    layers::insert_columns_forward(self.image(i), before, x, &mut out)
                }
                LayerSpec::Softmax => layers::softmax(x, &mut out),
            }
            acts.push(out);
        }
        acts
    }

    /// Class posteriors for one input.
    pub fn predict_proba(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.forward_with(&self.params, input).pop().expect("output"))
    }

    pub(crate) fn loss_with(&self, params: &[f64], input: &[f64], target: usize) -> f64 {
        let probs = self.forward_with(params, input).pop().expect("output");
        -probs[target].max(f64::MIN_POSITIVE).ln()
    }

    /// Cross-entropy loss of one sample; adds its parameter gradient to `grads`.
    pub(crate) fn backward_with(&self, params: &[f64], input: &[f64], target: usize, grads: &mut [f64]) -> f64 {
        let acts = self.forward_with(params, input);
        let n = self.spec.layers.len();
        let mut dcur = vec![0.0; acts[n].len()];
        let loss = layers::softmax_cross_entropy(&acts[n], target, &mut dcur);

        // The softmax gradient is folded into `dcur` above.
        for i in (0..n - 1).rev() {
            let layer = &self.spec.layers[i];
            let need_din = i > 0;
            let mut din = vec![0.0; if need_din { acts[i].len() } else { 0 }];
            match layer {
                LayerSpec::Conv2d { filters, kernel_h, kernel_w } => {
                    let slot = self.slots[i].expect("conv slot");
                    let g = ConvGeom {
                        input: self.image(i),
                        filters: *filters,
                        kh: *kernel_h,
                        kw: *kernel_w,
                    };
                    let k = &params[slot.offset..slot.offset + slot.weights];
                    let (dk, db) = grads[slot.offset..slot.offset + slot.weights + slot.bias].split_at_mut(slot.weights);
                    layers::conv2d_backward(&g, &acts[i], k, &dcur, dk, db, need_din.then_some(&mut din[..]));
                }
                LayerSpec::MaxPool { h, w } if need_din => {
                    layers::pool_backward(PoolKind::Max, self.image(i), *h, *w, &acts[i], &dcur, &mut din)
                }
                LayerSpec::AvgPool { h, w } if need_din => {
                    layers::pool_backward(PoolKind::Avg, self.image(i), *h, *w, &acts[i], &dcur, &mut din)
                }
                LayerSpec::Flatten if need_din => din.copy_from_slice(&dcur),
                LayerSpec::Dense { .. } => {
                    let slot = self.slots[i].expect("dense slot");
                    let w = &params[slot.offset..slot.offset + slot.weights];
                    let (dw, db) = grads[slot.offset..slot.offset + slot.weights + slot.bias].split_at_mut(slot.weights);
                    layers::dense_backward(w, &acts[i], &dcur, dw, db, need_din.then_some(&mut din[..]));
                }
                LayerSpec::Activation { kind } if need_din => kind.backward(&acts[i + 1], &dcur, &mut din),
                LayerSpec::InsertZeroColumns { before } if need_din => {
                    layers::insert_columns_backward(self.image(i), before, &dcur, &mut din)
                }
                _ => {}
            }
            dcur = din;
        }
        loss
    }

    /// Analytic gradient of the cross-entropy loss for one sample.
    pub fn gradient(&self, input: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
        self.check_input(input)?;
        self.check_target(target)?;
        let mut grads = vec![0.0; self.params.len()];
        let loss = self.backward_with(&self.params, input, target, &mut grads);
        Ok((loss, grads))
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.n_classes() {
            return Err(Error::InvalidConfig(format!(
                "class {target} out of range for {} outputs",
                self.n_classes()
            )));
        }
        Ok(())
    }

    /// Mean loss and mean gradient over a batch.
    pub fn batch_gradient(&self, inputs: &[&[f64]], targets: &[usize]) -> Result<(f64, Vec<f64>)> {
        if inputs.len() != targets.len() || inputs.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} inputs, {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        for (x, &t) in inputs.iter().zip(targets) {
            self.check_input(x)?;
            self.check_target(t)?;
        }
        let np = self.params.len();
        let partials: Vec<(f64, Vec<f64>)> = inputs
            .par_chunks(GRAD_CHUNK)
            .zip(targets.par_chunks(GRAD_CHUNK))
            .map(|(xs, ts)| {
                let mut g = vec![0.0; np];
                let loss = xs
                    .iter()
                    .zip(ts)
                    .map(|(x, &t)| self.backward_with(&self.params, x, t, &mut g))
                    .sum::<f64>();
                (loss, g)
            })
            .collect();
        let mut total_loss = 0.0;
        let mut grads = vec![0.0; np];
        for (loss, g) in partials {
            total_loss += loss;
            for (a, b) in grads.iter_mut().zip(&g) {
                *a += b;
            }
        }
        let n = inputs.len() as f64;
        grads.iter_mut().for_each(|g| *g /= n);
        Ok((total_loss / n, grads))
    }
}
