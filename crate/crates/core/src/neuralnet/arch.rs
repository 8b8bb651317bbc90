//! Builders for the four convolutional architectures. Each stack ends in a
//! `flatten -> dense(n_classes) -> softmax` head. Sizes are parameterized so
//! tests can build reduced variants with the same topology.

use super::layers::{Activation, Dims};
use super::net::{LayerSpec, NetSpec, Shape};
use crate::data::{ChannelMeta, Matrix, SensorKind};
use crate::error::{Error, Result};

fn relu() -> LayerSpec {
    LayerSpec::Activation {
        kind: Activation::Relu,
    }
}

fn head(layers: &mut Vec<LayerSpec>, n_classes: usize) {
    layers.push(LayerSpec::Flatten);
    layers.push(LayerSpec::Dense { units: n_classes });
    layers.push(LayerSpec::Softmax);
}

fn finish(spec: NetSpec, n_classes: usize) -> Result<NetSpec> {
    if n_classes == 0 {
        return Err(Error::InvalidConfig("need at least one class".into()));
    }
    spec.shapes()?;
    Ok(spec)
}

/// Three convolutions (18, 36, 24 filters), each followed by 2x1 max pooling.
/// The first kernel is 12x2 so it spans two neighbouring channels; the others
/// are 12x1.
#[derive(Clone, Debug, PartialEq)]
pub struct ChenXueParams {
    pub filters: [usize; 3],
    pub kernel_h: usize,
    pub first_kernel_w: usize,
    pub pool_h: usize,
}

impl Default for ChenXueParams {
    fn default() -> Self {
        Self {
            filters: [18, 36, 24],
            kernel_h: 12,
            first_kernel_w: 2,
            pool_h: 2,
        }
    }
}

pub fn build_chen_xue(input: Dims, n_classes: usize) -> Result<NetSpec> {
    build_chen_xue_with(input, n_classes, &ChenXueParams::default())
}

pub fn build_chen_xue_with(input: Dims, n_classes: usize, p: &ChenXueParams) -> Result<NetSpec> {
    let mut layers = Vec::new();
    for (i, &filters) in p.filters.iter().enumerate() {
        layers.push(LayerSpec::Conv2d {
            filters,
            kernel_h: p.kernel_h,
            kernel_w: if i == 0 { p.first_kernel_w } else { 1 },
        });
        layers.push(relu());
        layers.push(LayerSpec::MaxPool { h: p.pool_h, w: 1 });
    }
    head(&mut layers, n_classes);
    finish(
        NetSpec {
            name: "chen_xue".into(),
            input: Shape::Image(input),
            layers,
        },
        n_classes,
    )
}

/// Two 5x5 convolutions followed by 4x4 and 2x2 average pooling, applied to
/// the signal image.
#[derive(Clone, Debug, PartialEq)]
pub struct JiangYinParams {
    pub filters: [usize; 2],
    pub kernel: usize,
    pub pools: [usize; 2],
}

impl Default for JiangYinParams {
    fn default() -> Self {
        Self {
            filters: [5, 10],
            kernel: 5,
            pools: [4, 2],
        }
    }
}

pub fn build_jiang_yin(input: Dims, n_classes: usize) -> Result<NetSpec> {
    build_jiang_yin_with(input, n_classes, &JiangYinParams::default())
}

pub fn build_jiang_yin_with(input: Dims, n_classes: usize, p: &JiangYinParams) -> Result<NetSpec> {
    let mut layers = Vec::new();
    for (&filters, &pool) in p.filters.iter().zip(&p.pools) {
        layers.push(LayerSpec::Conv2d {
            filters,
            kernel_h: p.kernel,
            kernel_w: p.kernel,
        });
        layers.push(relu());
        layers.push(LayerSpec::AvgPool { h: pool, w: pool });
    }
    head(&mut layers, n_classes);
    finish(
        NetSpec {
            name: "jiang_yin".into(),
            input: Shape::Image(input),
            layers,
        },
        n_classes,
    )
}

/// Channel indices grouped by sensor kind, in order of first appearance.
pub fn modality_groups(channels: &[ChannelMeta]) -> Vec<Vec<usize>> {
    let mut kinds: Vec<SensorKind> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, ch) in channels.iter().enumerate() {
        match kinds.iter().position(|&k| k == ch.sensor_kind) {
            Some(g) => groups[g].push(i),
            None => {
                kinds.push(ch.sensor_kind);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Width of the modality-separated input: all channels plus one zero column
/// between consecutive groups.
pub fn padded_width(groups: &[Vec<usize>]) -> usize {
    groups.iter().map(Vec::len).sum::<usize>() + groups.len().saturating_sub(1)
}

/// Lays out a window as `[time, padded_width, 1]`, groups left to right with
/// a zero column between them.
pub fn assemble_modalities(data: &Matrix, groups: &[Vec<usize>]) -> Vec<f64> {
    let width = padded_width(groups);
    let mut out = vec![0.0; data.rows() * width];
    for t in 0..data.rows() {
        let mut col = 0;
        for (g, group) in groups.iter().enumerate() {
            if g > 0 {
                col += 1;
            }
            for &c in group {
                out[t * width + col] = data.get(t, c);
                col += 1;
            }
        }
    }
    out
}

/// Input-column index of each zero separator.
fn separator_columns(groups: &[Vec<usize>]) -> Vec<usize> {
    let mut cols = Vec::new();
    let mut pos = 0;
    for (g, group) in groups.iter().enumerate() {
        pos += group.len();
        if g + 1 < groups.len() {
            cols.push(pos);
            pos += 1;
        }
    }
    cols
}

/// Two convolutions (32 and 64 filters of 3x3), each followed by max pooling
/// along time.
#[derive(Clone, Debug, PartialEq)]
pub struct HaParams {
    pub filters: [usize; 2],
    pub kernel: usize,
    pub pool_h: usize,
}

impl Default for HaParams {
    fn default() -> Self {
        Self {
            filters: [32, 64],
            kernel: 3,
            pool_h: 2,
        }
    }
}

pub fn build_ha2015(time_steps: usize, groups: &[Vec<usize>], n_classes: usize) -> Result<NetSpec> {
    build_ha(time_steps, groups, n_classes, &HaParams::default(), false)
}

/// As [`build_ha2015`], plus zero columns re-inserted into the first feature
/// map at the modality boundaries so the second convolution keeps the
/// modalities apart.
pub fn build_ha2016(time_steps: usize, groups: &[Vec<usize>], n_classes: usize) -> Result<NetSpec> {
    build_ha(time_steps, groups, n_classes, &HaParams::default(), true)
}

pub fn build_ha(
    time_steps: usize,
    groups: &[Vec<usize>],
    n_classes: usize,
    p: &HaParams,
    reinsert: bool,
) -> Result<NetSpec> {
    if groups.len() < 2 || groups.iter().any(Vec::is_empty) {
        return Err(Error::Infeasible(format!(
            "modality padding needs >= 2 nonempty sensor groups, got {}",
            groups.len()
        )));
    }
    let width = padded_width(groups);
    let mut layers = vec![
        LayerSpec::Conv2d {
            filters: p.filters[0],
            kernel_h: p.kernel,
            kernel_w: p.kernel,
        },
        relu(),
        LayerSpec::MaxPool { h: p.pool_h, w: 1 },
    ];
    if reinsert {
        let first_map_w = (width + 1).saturating_sub(p.kernel);
        let before = separator_columns(groups)
            .into_iter()
            .map(|col| col.saturating_sub((p.kernel - 1) / 2).min(first_map_w))
            .collect();
        layers.push(LayerSpec::InsertZeroColumns { before });
    }
    layers.extend([
        LayerSpec::Conv2d {
            filters: p.filters[1],
            kernel_h: p.kernel,
            kernel_w: p.kernel,
        },
        relu(),
        LayerSpec::MaxPool { h: p.pool_h, w: 1 },
    ]);
    head(&mut layers, n_classes);
    finish(
        NetSpec {
            name: if reinsert { "ha2016" } else { "ha2015" }.into(),
            input: Shape::Image(Dims::new(time_steps, width, 1)),
            layers,
        },
        n_classes,
    )
}
