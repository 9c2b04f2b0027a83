//! A tiny fully-convolutional network with explicit forward and backward passes.
//!
//! Tensors are channel-major `C×H×W` with row-major planes. Convolutions use
//! zero "same" padding; weights are laid out `[out][in][ky][kx]` followed by
//! one bias per output channel.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    Relu,
    /// Sub-pixel rearrangement `C·f² × H × W -> C × fH × fW`; `kernel` holds `f`.
    PixelShuffle,
}

impl LayerKind {
    pub fn code(self) -> u8 {
        match self {
            LayerKind::Conv => 0,
            LayerKind::Relu => 1,
            LayerKind::PixelShuffle => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<LayerKind> {
        match code {
            0 => Some(LayerKind::Conv),
            1 => Some(LayerKind::Relu),
            2 => Some(LayerKind::PixelShuffle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
}

impl LayerSpec {
    pub fn conv(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Conv,
            in_channels,
            out_channels,
            kernel,
        }
    }

    pub fn relu(channels: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Relu,
            in_channels: channels,
            out_channels: channels,
            kernel: 0,
        }
    }

    pub fn pixel_shuffle(out_channels: usize, factor: usize) -> Self {
        LayerSpec {
            kind: LayerKind::PixelShuffle,
            in_channels: out_channels * factor * factor,
            out_channels,
            kernel: factor,
        }
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            LayerKind::Conv => self.out_channels * (self.in_channels * self.kernel * self.kernel + 1),
            _ => 0,
        }
    }
}

/// Layer list of a network mapping a 2-channel `R×R` input to a 1-channel `fR×fR` output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    layers: Vec<LayerSpec>,
}

pub const INPUT_CHANNELS: usize = 2;

impl Architecture {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        let arch = Architecture { layers };
        arch.validate()?;
        Ok(arch)
    }

    /// `convs` 3×3 convolutions of `width` channels with ReLUs in between; the
    /// last one emits `factor²` channels that a pixel shuffle turns into one
    /// up-scaled channel.
    pub fn standard(factor: usize, width: usize, convs: usize) -> Result<Self> {
        if convs < 2 {
            return Err(Error::validation("at least two convolutions are required"));
        }
        let mut layers = vec![LayerSpec::conv(INPUT_CHANNELS, width, 3), LayerSpec::relu(width)];
        for _ in 0..convs - 2 {
            layers.push(LayerSpec::conv(width, width, 3));
            layers.push(LayerSpec::relu(width));
        }
        layers.push(LayerSpec::conv(width, factor * factor, 3));
        layers.push(LayerSpec::pixel_shuffle(1, factor));
        Self::new(layers)
    }

    fn validate(&self) -> Result<()> {
        let mut channels = INPUT_CHANNELS;
        for (i, l) in self.layers.iter().enumerate() {
            if l.in_channels != channels {
                return Err(Error::validation(format!(
                    "layer {i} expects {} channels but receives {channels}",
                    l.in_channels
                )));
            }
            match l.kind {
                LayerKind::Conv => {
                    if l.kernel % 2 == 0 || l.out_channels == 0 {
                        return Err(Error::validation(format!(
                            "layer {i}: convolutions need an odd kernel and at least one output"
                        )));
                    }
                }
                LayerKind::Relu => {
                    if l.out_channels != l.in_channels {
                        return Err(Error::validation(format!("layer {i}: ReLU changes channel count")));
                    }
                }
                LayerKind::PixelShuffle => {
                    if l.kernel == 0 || l.in_channels != l.out_channels * l.kernel * l.kernel {
                        return Err(Error::validation(format!("layer {i}: inconsistent pixel shuffle")));
                    }
                }
            }
            channels = l.out_channels;
        }
        if channels != 1 {
            return Err(Error::validation(format!("network ends with {channels} channels, expected 1")));
        }
        Ok(())
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    /// Overall spatial up-scaling factor.
    pub fn upscale(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.kind == LayerKind::PixelShuffle)
            .map(|l| l.kernel)
            .product()
    }

    /// Index of the last convolution and the parameter offset where it starts.
    pub fn last_conv(&self) -> Option<(usize, usize)> {
        let mut offset = 0;
        let mut last = None;
        for (i, l) in self.layers.iter().enumerate() {
            if l.kind == LayerKind::Conv {
                last = Some((i, offset));
            }
            offset += l.param_count();
        }
        last
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Tensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }
}

/// Inputs of every layer, kept for the backward pass.
pub struct Trace {
    pub inputs: Vec<Tensor>,
    pub output: Tensor,
}

pub fn forward(arch: &Architecture, params: &[f64], input: Tensor) -> Trace {
    debug_assert_eq!(params.len(), arch.param_count());
    let mut inputs = Vec::with_capacity(arch.layers.len());
    let mut x = input;
    let mut offset = 0;
    for l in &arch.layers {
        let y = match l.kind {
            LayerKind::Conv => {
                let n = l.param_count();
                let y = conv_forward(l, &params[offset..offset + n], &x);
                offset += n;
                y
            }
            LayerKind::Relu => {
                let mut y = x.clone();
                y.data.iter_mut().for_each(|v| *v = v.max(0.0));
                y
            }
            LayerKind::PixelShuffle => pixel_shuffle(&x, l.kernel),
        };
        inputs.push(x);
        x = y;
    }
    Trace { inputs, output: x }
}

/// Forward pass without keeping intermediates.
pub fn infer(arch: &Architecture, params: &[f64], input: Tensor) -> Tensor {
    let mut x = input;
    let mut offset = 0;
    for l in &arch.layers {
        x = match l.kind {
            LayerKind::Conv => {
                let n = l.param_count();
                let y = conv_forward(l, &params[offset..offset + n], &x);
                offset += n;
                y
            }
            LayerKind::Relu => {
                x.data.iter_mut().for_each(|v| *v = v.max(0.0));
                x
            }
            LayerKind::PixelShuffle => pixel_shuffle(&x, l.kernel),
        };
    }
    x
}

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
pub fn backward(arch: &Architecture, params: &[f64], trace: &Trace, grad_output: Tensor, grad: &mut [f64]) {
    let mut offsets = Vec::with_capacity(arch.layers.len());
    let mut offset = 0;
    for l in &arch.layers {
        offsets.push(offset);
        offset += l.param_count();
    }
    let mut g = grad_output;
    for (i, l) in arch.layers.iter().enumerate().rev() {
        let input = &trace.inputs[i];
        g = match l.kind {
            LayerKind::Conv => {
                let n = l.param_count();
                let o = offsets[i];
                conv_backward(l, &params[o..o + n], input, &g, &mut grad[o..o + n], i > 0)
            }
            LayerKind::Relu => {
                for (gv, &xv) in g.data.iter_mut().zip(&input.data) {
                    if xv <= 0.0 {
                        *gv = 0.0;
                    }
                }
                g
            }
            LayerKind::PixelShuffle => pixel_unshuffle(&g, l.kernel),
        };
    }
}

/// Clipped ranges so that `y + dy` stays within `0..len`.
#[inline]
fn shifted_range(len: usize, d: isize) -> std::ops::Range<usize> {
    let lo = (-d).max(0) as usize;
    let hi = (len as isize - d).clamp(0, len as isize) as usize;
    lo..hi.max(lo)
}

fn conv_forward(l: &LayerSpec, p: &[f64], x: &Tensor) -> Tensor {
    let (h, w, k) = (x.height, x.width, l.kernel);
    let pad = (k / 2) as isize;
    let (weights, bias) = p.split_at(l.out_channels * l.in_channels * k * k);
    let mut y = Tensor::zeros(l.out_channels, h, w);
    for co in 0..l.out_channels {
        let out = y.plane_mut(co);
        out.fill(bias[co]);
        for ci in 0..l.in_channels {
            let inp = x.plane(ci);
            for ky in 0..k {
                let dy = ky as isize - pad;
                for kx in 0..k {
                    let dx = kx as isize - pad;
                    let wv = weights[((co * l.in_channels + ci) * k + ky) * k + kx];
                    let xs = shifted_range(w, dx);
                    for yy in shifted_range(h, dy) {
                        let src = (yy as isize + dy) as usize * w;
                        let out_row = &mut out[yy * w + xs.start..yy * w + xs.end];
                        let in_row = &inp[(src as isize + xs.start as isize + dx) as usize..][..xs.len()];
                        for (o, &i) in out_row.iter_mut().zip(in_row) {
                            *o += wv * i;
                        }
                    }
                }
            }
        }
    }
    y
}

fn conv_backward(
    l: &LayerSpec,
    p: &[f64],
    x: &Tensor,
    g: &Tensor,
    grad: &mut [f64],
    need_input_grad: bool,
) -> Tensor {
    let (h, w, k) = (x.height, x.width, l.kernel);
    let pad = (k / 2) as isize;
    let nw = l.out_channels * l.in_channels * k * k;
    let (weights, _) = p.split_at(nw);
    let (gw, gb) = grad.split_at_mut(nw);
    let mut gx = Tensor::zeros(l.in_channels, h, w);
    for co in 0..l.out_channels {
        let gout = g.plane(co);
        gb[co] += gout.iter().sum::<f64>();
        for ci in 0..l.in_channels {
            let inp = x.plane(ci);
            let n = h * w;
            let gin = &mut gx.data[ci * n..(ci + 1) * n];
            for ky in 0..k {
                let dy = ky as isize - pad;
                for kx in 0..k {
                    let dx = kx as isize - pad;
                    let wi = ((co * l.in_channels + ci) * k + ky) * k + kx;
                    let wv = weights[wi];
                    let xs = shifted_range(w, dx);
                    let mut acc = 0.0;
                    for yy in shifted_range(h, dy) {
                        let src = ((yy as isize + dy) as usize * w) as isize + xs.start as isize + dx;
                        let src = src as usize;
                        let g_row = &gout[yy * w + xs.start..yy * w + xs.end];
                        let in_row = &inp[src..src + xs.len()];
                        for (&gv, &iv) in g_row.iter().zip(in_row) {
                            acc += gv * iv;
                        }
                        if need_input_grad {
                            let gin_row = &mut gin[src..src + xs.len()];
                            for (gi, &gv) in gin_row.iter_mut().zip(g_row) {
                                *gi += wv * gv;
                            }
                        }
                    }
                    gw[wi] += acc;
                }
            }
        }
    }
    gx
}

fn pixel_shuffle(x: &Tensor, f: usize) -> Tensor {
    let c_out = x.channels / (f * f);
    let (h, w) = (x.height, x.width);
    let mut y = Tensor::zeros(c_out, h * f, w * f);
    let ow = w * f;
    for c in 0..c_out {
        for sy in 0..f {
            for sx in 0..f {
                let src = x.plane(c * f * f + sy * f + sx);
                let n = y.height * y.width;
                let dst = &mut y.data[c * n..(c + 1) * n];
                for yy in 0..h {
                    for xx in 0..w {
                        dst[(yy * f + sy) * ow + xx * f + sx] = src[yy * w + xx];
                    }
                }
            }
        }
    }
    y
}

fn pixel_unshuffle(y: &Tensor, f: usize) -> Tensor {
    let (h, w) = (y.height / f, y.width / f);
    let mut x = Tensor::zeros(y.channels * f * f, h, w);
    let ow = y.width;
    for c in 0..y.channels {
        let src = y.plane(c);
        for sy in 0..f {
            for sx in 0..f {
                let dst = x.plane_mut(c * f * f + sy * f + sx);
                for yy in 0..h {
                    for xx in 0..w {
                        dst[yy * w + xx] = src[(yy * f + sy) * ow + xx * f + sx];
                    }
                }
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_conv(l: &LayerSpec, p: &[f64], x: &Tensor) -> Tensor {
        let k = l.kernel as isize;
        let pad = k / 2;
        let mut y = Tensor::zeros(l.out_channels, x.height, x.width);
        let nw = l.out_channels * l.in_channels * l.kernel * l.kernel;
        for co in 0..l.out_channels {
            for yy in 0..x.height as isize {
                for xx in 0..x.width as isize {
                    let mut s = p[nw + co];
                    for ci in 0..l.in_channels {
                        for ky in 0..k {
                            for kx in 0..k {
                                let (sy, sx) = (yy + ky - pad, xx + kx - pad);
                                if sy < 0 || sx < 0 || sy >= x.height as isize || sx >= x.width as isize {
                                    continue;
                                }
                                let wi = ((co * l.in_channels + ci) * l.kernel + ky as usize) * l.kernel + kx as usize;
                                s += p[wi] * x.data[(ci * x.height + sy as usize) * x.width + sx as usize];
                            }
                        }
                    }
                    y.data[(co * x.height + yy as usize) * x.width + xx as usize] = s;
                }
            }
        }
        y
    }

    #[test]
    fn conv_matches_naive_loops() {
        let l = LayerSpec::conv(2, 3, 3);
        let p: Vec<f64> = (0..l.param_count()).map(|i| ((i * 37 % 17) as f64 - 8.0) / 7.0).collect();
        let mut x = Tensor::zeros(2, 4, 5);
        for (i, v) in x.data.iter_mut().enumerate() {
            *v = ((i * 13 % 11) as f64 - 5.0) / 3.0;
        }
        let fast = conv_forward(&l, &p, &x);
        let slow = naive_conv(&l, &p, &x);
        for (a, b) in fast.data.iter().zip(&slow.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn shuffle_round_trip() {
        let mut x = Tensor::zeros(4, 2, 3);
        for (i, v) in x.data.iter_mut().enumerate() {
            *v = i as f64;
        }
        let y = pixel_shuffle(&x, 2);
        assert_eq!((y.channels, y.height, y.width), (1, 4, 6));
        // sub-pixel (1, 0) of low-res pixel (0, 0) comes from channel 1
        assert_eq!(y.data[1], x.data[6]);
        assert_eq!(pixel_unshuffle(&y, 2), x);
    }

    #[test]
    fn architecture_validation() {
        let a = Architecture::standard(4, 8, 3).unwrap();
        assert_eq!(a.upscale(), 4);
        assert_eq!(a.param_count(), (2 * 9 + 1) * 8 + (8 * 9 + 1) * 8 + (8 * 9 + 1) * 16);
        assert!(Architecture::new(vec![LayerSpec::conv(2, 4, 3)]).is_err());
        assert!(Architecture::new(vec![LayerSpec::conv(3, 1, 3)]).is_err());
        assert!(Architecture::new(vec![LayerSpec::conv(2, 1, 2)]).is_err());
        assert!(Architecture::standard(2, 8, 1).is_err());
    }
}
