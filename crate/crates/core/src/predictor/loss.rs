//! Silhouette and residual-depth objectives and their gradients.

use rayon::prelude::*;

use super::model::{network_input, sigmoid, Head, Plane, PredictorModel};
use super::net::{self, Tensor};
use crate::error::{Error, Result};
use crate::odm::Odm;

/// A low-resolution map and the matching ground-truth high-resolution map.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub low: Odm,
    pub high: Odm,
}

/// `V(x) = Σ sqrt((x[i+1,j] - x[i,j])² + (x[i,j+1] - x[i,j])²)` over the
/// indices where both forward differences exist.
pub fn total_variation(x: &Plane) -> f64 {
    let n = x.size;
    let mut v = 0.0;
    for i in 0..n.saturating_sub(1) {
        for j in 0..n - 1 {
            let c = x.data[i * n + j];
            let a = x.data[(i + 1) * n + j] - c;
            let b = x.data[i * n + j + 1] - c;
            v += (a * a + b * b).sqrt();
        }
    }
    v
}

/// Adds `scale · ∂V/∂x` to `grad`. Terms with a zero difference vector
/// contribute nothing (the zero subgradient).
pub fn total_variation_grad(x: &Plane, scale: f64, grad: &mut [f64]) {
    let n = x.size;
    for i in 0..n.saturating_sub(1) {
        for j in 0..n - 1 {
            let c = x.data[i * n + j];
            let a = x.data[(i + 1) * n + j] - c;
            let b = x.data[i * n + j + 1] - c;
            let norm = (a * a + b * b).sqrt();
            if norm == 0.0 {
                continue;
            }
            grad[(i + 1) * n + j] += scale * a / norm;
            grad[i * n + j + 1] += scale * b / norm;
            grad[i * n + j] -= scale * (a + b) / norm;
        }
    }
}

/// Indicator of nonzero ground-truth depth.
pub fn silhouette_target(gt: &Odm) -> Plane {
    Plane {
        size: gt.resolution(),
        data: gt.depths().iter().map(|&d| (d != 0) as u8 as f64).collect(),
    }
}

fn check_size(plane: &Plane, gt: &Odm) -> Result<()> {
    if plane.size != gt.resolution() {
        return Err(Error::shape(format!(
            "prediction is {0}x{0}, ground truth is {1}x{1}",
            plane.size,
            gt.resolution()
        )));
    }
    Ok(())
}

/// Sum of squared differences between a silhouette probability map and the
/// ground-truth silhouette.
pub fn silhouette_error(sil_prob: &Plane, gt: &Odm) -> Result<f64> {
    check_size(sil_prob, gt)?;
    Ok(sil_prob
        .data
        .iter()
        .zip(gt.depths())
        .map(|(&p, &d)| {
            let t = (d != 0) as u8 as f64;
            (p - t) * (p - t)
        })
        .sum())
}

/// `‖C ∘ 1[D ≠ 0] − D‖² + λ·V(C)` for a constrained depth map `C`.
pub fn depth_error(constrained: &Plane, gt: &Odm, lambda_tv: f64) -> Result<f64> {
    check_size(constrained, gt)?;
    let data: f64 = constrained
        .data
        .iter()
        .zip(gt.depths())
        .map(|(&c, &d)| {
            let e = if d != 0 { c - d as f64 } else { 0.0 };
            e * e
        })
        .sum();
    Ok(data + lambda_tv * total_variation(constrained))
}

pub fn loss_sil(model: &PredictorModel, low: &Odm, high: &Odm) -> Result<f64> {
    model.check_pair(low, high)?;
    silhouette_error(&model.predict_sil(low), high)
}

pub fn loss_depth(model: &PredictorModel, low: &Odm, high: &Odm) -> Result<f64> {
    model.check_pair(low, high)?;
    depth_error(&model.predict_depth(low)?, high, model.lambda_tv)
}

/// Loss of one head on one pair together with its parameter gradient,
/// obtained by back-propagating through the output nonlinearity and the
/// network layers.
pub fn loss_and_gradient(model: &PredictorModel, head: Head, low: &Odm, high: &Odm) -> Result<(f64, Vec<f64>)> {
    model.check_pair(low, high)?;
    let params = model.params(head);
    let trace = net::forward(&model.arch, params, network_input(low));
    let raw = &trace.output;
    let n = raw.width;
    let mut grad_out = Tensor::zeros(1, n, n);
    let loss = match head {
        Head::Silhouette => {
            let mut loss = 0.0;
            for ((g, &z), &d) in grad_out.data.iter_mut().zip(&raw.data).zip(high.depths()) {
                let p = sigmoid(z);
                let t = (d != 0) as u8 as f64;
                loss += (p - t) * (p - t);
                *g = 2.0 * (p - t) * p * (1.0 - p);
            }
            loss
        }
        Head::Depth => {
            let raw_plane = Plane {
                size: n,
                data: raw.data.clone(),
            };
            let c = model.constrain(&raw_plane, low)?;
            let mut grad_c = vec![0.0; n * n];
            let mut loss = 0.0;
            for ((g, &cv), &d) in grad_c.iter_mut().zip(&c.data).zip(high.depths()) {
                if d != 0 {
                    let e = cv - d as f64;
                    loss += e * e;
                    *g = 2.0 * e;
                }
            }
            loss += model.lambda_tv * total_variation(&c);
            total_variation_grad(&c, model.lambda_tv, &mut grad_c);
            for ((g, &gc), &z) in grad_out.data.iter_mut().zip(&grad_c).zip(&raw.data) {
                let s = sigmoid(z);
                *g = gc * model.range_r * s * (1.0 - s);
            }
            loss
        }
    };
    let mut grad = vec![0.0; params.len()];
    net::backward(&model.arch, params, &trace, grad_out, &mut grad);
    Ok((loss, grad))
}

/// Summed loss and gradient of one head over a batch. Per-pair gradients are
/// computed in parallel and reduced in batch order, so the result does not
/// depend on scheduling.
pub fn gradient(model: &PredictorModel, head: Head, batch: &[TrainingPair]) -> Result<(f64, Vec<f64>)> {
    let parts: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|p| loss_and_gradient(model, head, &p.low, &p.high))
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; model.params(head).len()];
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    Ok((loss, grad))
}
