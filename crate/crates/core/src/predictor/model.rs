use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::net::{self, Architecture, LayerKind, Tensor};
use crate::error::{Error, Result};
use crate::odm::{Odm, ViewId};

/// Square real-valued map, u-fastest like [`Odm`].
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub size: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(size: usize, data: Vec<f64>) -> Result<Plane> {
        if data.len() != size * size {
            return Err(Error::shape(format!("{} values for a {size}x{size} plane", data.len())));
        }
        Ok(Plane { size, data })
    }

    pub fn filled(size: usize, value: f64) -> Plane {
        Plane {
            size,
            data: vec![value; size * size],
        }
    }

    /// Depth values of an ODM cast to reals.
    pub fn from_odm(odm: &Odm) -> Plane {
        Plane {
            size: odm.resolution(),
            data: odm.depths().iter().map(|&d| d as f64).collect(),
        }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u + self.size * v]
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Which of the two networks an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Silhouette,
    Depth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub factor: usize,
    /// Residual depth range in high-resolution units; `None` means `factor`.
    pub range_r: Option<f64>,
    pub lambda_tv: f64,
    pub width: usize,
    pub convs: usize,
}

impl ModelConfig {
    pub fn new(factor: usize) -> Self {
        ModelConfig {
            factor,
            range_r: None,
            lambda_tv: 0.1,
            width: 16,
            convs: 4,
        }
    }
}

/// The silhouette and residual-depth networks plus their shared constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub factor: usize,
    pub range_r: f64,
    pub lambda_tv: f64,
    pub arch: Architecture,
    pub sil_params: Vec<f64>,
    pub depth_params: Vec<f64>,
}

impl PredictorModel {
    /// He-initialized networks; the final convolution starts at a tenth of
    /// that scale so both heads begin near `sigmoid(0)`.
    pub fn init<R: Rng>(config: &ModelConfig, rng: &mut R) -> Result<PredictorModel> {
        let arch = Architecture::standard(config.factor, config.width, config.convs)?;
        let sil_params = init_params(&arch, rng);
        let depth_params = init_params(&arch, rng);
        PredictorModel::from_parts(
            config.factor,
            config.range_r.unwrap_or(config.factor as f64),
            config.lambda_tv,
            arch,
            sil_params,
            depth_params,
        )
    }

    pub fn from_parts(
        factor: usize,
        range_r: f64,
        lambda_tv: f64,
        arch: Architecture,
        sil_params: Vec<f64>,
        depth_params: Vec<f64>,
    ) -> Result<PredictorModel> {
        if factor == 0 || arch.upscale() != factor {
            return Err(Error::validation(format!(
                "architecture up-scales by {}, model factor is {factor}",
                arch.upscale()
            )));
        }
        if !(range_r.is_finite() && range_r > 0.0) {
            return Err(Error::validation("range r must be positive and finite"));
        }
        if !(lambda_tv.is_finite() && lambda_tv >= 0.0) {
            return Err(Error::validation("lambda must be nonnegative and finite"));
        }
        let n = arch.param_count();
        if sil_params.len() != n || depth_params.len() != n {
            return Err(Error::shape(format!("both parameter vectors must hold {n} values")));
        }
        if sil_params.iter().chain(&depth_params).any(|p| !p.is_finite()) {
            return Err(Error::validation("parameters must be finite"));
        }
        Ok(PredictorModel {
            factor,
            range_r,
            lambda_tv,
            arch,
            sil_params,
            depth_params,
        })
    }

    pub fn params(&self, head: Head) -> &[f64] {
        match head {
            Head::Silhouette => &self.sil_params,
            Head::Depth => &self.depth_params,
        }
    }

    pub fn params_mut(&mut self, head: Head) -> &mut Vec<f64> {
        match head {
            Head::Silhouette => &mut self.sil_params,
            Head::Depth => &mut self.depth_params,
        }
    }

    /// Zeroes the weights and bias of the last convolution of one head.
    pub fn zero_final_layer(&mut self, head: Head) {
        let (i, offset) = self.arch.last_conv().expect("architecture has a convolution");
        let n = self.arch.layers()[i].param_count();
        self.params_mut(head)[offset..offset + n].fill(0.0);
    }

    /// Raw network output (before any sigmoid) for one head.
    pub fn raw_output(&self, head: Head, odm_low: &Odm) -> Plane {
        let out = net::infer(&self.arch, self.params(head), network_input(odm_low));
        Plane {
            size: out.width,
            data: out.data,
        }
    }

    /// Per-pixel silhouette probability at `factor × R`.
    pub fn predict_sil(&self, odm_low: &Odm) -> Plane {
        let mut p = self.raw_output(Head::Silhouette, odm_low);
        p.data.iter_mut().for_each(|v| *v = sigmoid(*v));
        p
    }

    /// Constrained depth `r·σ(raw) + g(D_L)`.
    pub fn predict_depth(&self, odm_low: &Odm) -> Result<Plane> {
        let raw = self.raw_output(Head::Depth, odm_low);
        self.constrain(&raw, odm_low)
    }

    /// Maps a raw depth-network output to the constrained depth map.
    pub fn constrain(&self, raw: &Plane, odm_low: &Odm) -> Result<Plane> {
        let base = Plane::from_odm(&odm_low.upsample_nn(self.factor)?);
        if raw.size != base.size {
            return Err(Error::shape(format!(
                "raw output is {0}x{0}, up-sampled ODM is {1}x{1}",
                raw.size, base.size
            )));
        }
        let data = raw
            .data
            .iter()
            .zip(&base.data)
            .map(|(&z, &g)| self.range_r * sigmoid(z) + g)
            .collect();
        Plane::new(base.size, data)
    }

    /// Checks that a (low, high) pair matches this model's factor.
    pub fn check_pair(&self, low: &Odm, high: &Odm) -> Result<()> {
        if high.resolution() != low.resolution() * self.factor {
            return Err(Error::shape(format!(
                "high-resolution map is {} but low {} x factor {} = {}",
                high.resolution(),
                low.resolution(),
                self.factor,
                low.resolution() * self.factor
            )));
        }
        if high.view() != low.view() {
            return Err(Error::shape("low and high maps come from different views"));
        }
        Ok(())
    }
}

fn init_params<R: Rng>(arch: &Architecture, rng: &mut R) -> Vec<f64> {
    let last = arch.last_conv().map(|(i, _)| i);
    let mut params = Vec::with_capacity(arch.param_count());
    for (i, l) in arch.layers().iter().enumerate() {
        if l.kind != LayerKind::Conv {
            continue;
        }
        let fan_in = (l.in_channels * l.kernel * l.kernel) as f64;
        let mut std = (2.0 / fan_in).sqrt();
        if Some(i) == last {
            std *= 0.1;
        }
        let normal = Normal::new(0.0, std).expect("finite std");
        let nw = l.out_channels * l.in_channels * l.kernel * l.kernel;
        params.extend((0..nw).map(|_| normal.sample(rng)));
        params.extend(std::iter::repeat_n(0.0, l.out_channels));
    }
    params
}

/// Two-channel input: depth normalized by resolution, and the constant view
/// index / 5 as a side channel.
pub fn network_input(odm: &Odm) -> Tensor {
    let r = odm.resolution();
    let mut t = Tensor::zeros(2, r, r);
    let scale = 1.0 / r as f64;
    for (dst, &d) in t.data[..r * r].iter_mut().zip(odm.depths()) {
        *dst = d as f64 * scale;
    }
    let side = odm.view().index() as f64 / 5.0;
    t.data[r * r..].fill(side);
    t
}

/// Final high-resolution ODM: where `sil_prob >= threshold` the constrained
/// depth rounded half away from zero and clamped to `[1, size]`, else 0.
pub fn compose(sil_prob: &Plane, depth: &Plane, threshold: f64, view: ViewId) -> Result<Odm> {
    if sil_prob.size != depth.size {
        return Err(Error::shape("silhouette and depth maps differ in size"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::validation("silhouette threshold must lie in (0, 1)"));
    }
    let max = depth.size as f64;
    let values = sil_prob
        .data
        .iter()
        .zip(&depth.data)
        .map(|(&p, &c)| if p >= threshold { c.round().clamp(1.0, max) as u32 } else { 0 })
        .collect();
    Odm::new(view, depth.size, values)
}
