#![allow(dead_code)]

use mvd::predictor::net::{self, LayerKind};
use mvd::predictor::model::network_input;
use mvd::predictor::{loss_and_gradient, loss_depth, loss_sil, Head, ModelConfig, Plane, PredictorModel};
use mvd::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-4;
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Denominator floor for the relative error, so gradients that are zero up
/// to rounding are compared absolutely.
pub const GRAD_FLOOR: f64 = 1e-3;

#[derive(Debug, Default)]
pub struct GradCheck {
    pub param_count: usize,
    pub compared: usize,
    pub skipped_at_kinks: usize,
    pub max_rel_error: f64,
    pub worst: Option<(Head, f64, f64)>,
}

pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRAD_FLOOR)
}

fn relu_pattern(model: &PredictorModel, params: &[f64], low: &Odm) -> Vec<bool> {
    let trace = net::forward(&model.arch, params, network_input(low));
    model
        .arch
        .layers()
        .iter()
        .zip(&trace.inputs)
        .filter(|(l, _)| l.kind == LayerKind::Relu)
        .flat_map(|(_, t)| t.data.iter().map(|&v| v > 0.0))
        .collect()
}

fn tv_differences(c: &Plane) -> Vec<(f64, f64)> {
    let n = c.size;
    let mut out = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let v = c.data[i * n + j];
            out.push((c.data[(i + 1) * n + j] - v, c.data[i * n + j + 1] - v));
        }
    }
    out
}

/// True when a total-variation term's difference vector comes within a few
/// finite-difference steps of zero, where the norm is not smooth.
fn near_tv_kink(model: &PredictorModel, plus: &PredictorModel, minus: &PredictorModel, low: &Odm) -> bool {
    let d0 = tv_differences(&model.predict_depth(low).unwrap());
    let dp = tv_differences(&plus.predict_depth(low).unwrap());
    let dm = tv_differences(&minus.predict_depth(low).unwrap());
    d0.iter().zip(&dp).zip(&dm).any(|((&(a0, b0), &(ap, bp)), &(am, bm))| {
        let moved = (ap - am).abs().max((bp - bm).abs());
        moved > 0.0 && a0.hypot(b0) < 100.0 * moved
    })
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Odm, Odm) {
    let mut high = VoxelGrid::new(8).unwrap();
    let fill = rng.gen_range(0.2..0.7);
    for c in high.cells_mut() {
        *c = rng.gen_bool(fill);
    }
    let low = high.downsample_any(2).unwrap();
    let view = ViewId::ALL[rng.gen_range(0..6)];
    (extract_odm(&low, view), extract_odm(&high, view))
}

/// Compares analytic gradients of both losses against central finite
/// differences over every parameter of freshly initialized small models.
/// Parameters whose perturbation flips a ReLU or passes near a total-variation
/// kink are counted and skipped.
pub fn gradient_check(trials: usize, seed: u64) -> GradCheck {
    let mut out = GradCheck::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let cfg = ModelConfig { width: 8, convs: 3, ..ModelConfig::new(2) };
        let mut model = PredictorModel::init(&cfg, &mut rng).unwrap();
        // undo the damped final-layer init so outputs span the sigmoid
        let spread: f64 = rng.gen_range(1.0..20.0);
        for head in [Head::Silhouette, Head::Depth] {
            model.params_mut(head).iter_mut().for_each(|p| *p *= spread.powf(1.0 / 3.0));
        }
        out.param_count = model.arch.param_count();
        let (low, high) = random_pair(&mut rng);
        for head in [Head::Silhouette, Head::Depth] {
            let loss = |m: &PredictorModel| match head {
                Head::Silhouette => loss_sil(m, &low, &high).unwrap(),
                Head::Depth => loss_depth(m, &low, &high).unwrap(),
            };
            let (_, grad) = loss_and_gradient(&model, head, &low, &high).unwrap();
            let base_pattern = relu_pattern(&model, model.params(head), &low);
            for i in 0..grad.len() {
                let mut plus = model.clone();
                plus.params_mut(head)[i] += FD_STEP;
                let mut minus = model.clone();
                minus.params_mut(head)[i] -= FD_STEP;
                if relu_pattern(&plus, plus.params(head), &low) != base_pattern
                    || relu_pattern(&minus, minus.params(head), &low) != base_pattern
                {
                    out.skipped_at_kinks += 1;
                    continue;
                }
                if head == Head::Depth && near_tv_kink(&model, &plus, &minus, &low) {
                    out.skipped_at_kinks += 1;
                    continue;
                }
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
                let e = rel_error(grad[i], numeric);
                if e > out.max_rel_error {
                    out.max_rel_error = e;
                    out.worst = Some((head, grad[i], numeric));
                }
                out.compared += 1;
            }
        }
    }
    out
}

pub fn golden(name: &str) -> Vec<u8> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Three axis-parallel bars through the center of a 3³ grid.
pub fn cross3() -> VoxelGrid {
    VoxelGrid::from_fn(3, |x, y, z| [x == 1, y == 1, z == 1].iter().filter(|&&c| c).count() >= 2).unwrap()
}

pub fn cross3_z_neg() -> Odm {
    Odm::new(ViewId::from_index(5).unwrap(), 3, vec![0, 2, 0, 2, 1, 2, 0, 2, 0]).unwrap()
}

/// A 1×1 convolution from two channels to four, shuffled to one channel at
/// twice the resolution.
pub fn tiny_x2() -> PredictorModel {
    let arch = net::Architecture::new(vec![net::LayerSpec::conv(2, 4, 1), net::LayerSpec::pixel_shuffle(1, 2)]).unwrap();
    let sil = (0..12).map(|i| i as f64 / 16.0).collect();
    let depth = (0..12).map(|i| -(i as f64) / 8.0).collect();
    PredictorModel::from_parts(2, 2.0, 0.1, arch, sil, depth).unwrap()
}
