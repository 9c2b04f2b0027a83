//! MVDM model checkpoints.
//!
//! Layout (little-endian): `"MVDM"`, version u16, factor u32, range r f64,
//! lambda f64, layer count u32, then per layer kind u8 / in u32 / out u32 /
//! kernel u32. The silhouette network's parameters follow as f64 in layer
//! order, then the depth network's; both share the one architecture.

use super::model::PredictorModel;
use super::net::{Architecture, LayerKind, LayerSpec};
use crate::codec::{Reader, Writer};
use crate::error::Result;

const MODEL_MAGIC: &[u8; 4] = b"MVDM";
const MODEL_VERSION: u16 = 1;

impl PredictorModel {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MODEL_MAGIC);
        w.u16(MODEL_VERSION);
        w.u32(self.factor as u32);
        w.f64(self.range_r);
        w.f64(self.lambda_tv);
        w.u32(self.arch.layers().len() as u32);
        for l in self.arch.layers() {
            w.u8(l.kind.code());
            w.u32(l.in_channels as u32);
            w.u32(l.out_channels as u32);
            w.u32(l.kernel as u32);
        }
        for &p in self.sil_params.iter().chain(&self.depth_params) {
            w.f64(p);
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<PredictorModel> {
        let mut rd = Reader::new(bytes);
        rd.magic(MODEL_MAGIC)?;
        rd.version(MODEL_VERSION)?;
        let factor = rd.u32("factor")? as usize;
        let range_r = rd.f64("range r")?;
        let lambda = rd.f64("lambda")?;
        let count_offset = rd.offset();
        let count = rd.u32("layer count")? as usize;
        if count > 1024 {
            return Err(rd.error_at(count_offset, format!("implausible layer count {count}")));
        }
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let at = rd.offset();
            let code = rd.u8("layer kind")?;
            let kind = LayerKind::from_code(code)
                .ok_or_else(|| rd.error_at(at, format!("unknown layer kind {code}")))?;
            let in_channels = rd.u32("in-channels")? as usize;
            let out_channels = rd.u32("out-channels")? as usize;
            let kernel = rd.u32("kernel")? as usize;
            layers.push(LayerSpec {
                kind,
                in_channels,
                out_channels,
                kernel,
            });
        }
        let params_offset = rd.offset();
        let arch = Architecture::new(layers).map_err(|e| rd.error_at(params_offset, e.to_string()))?;
        let n = arch.param_count();
        if rd.remaining() != 2 * n * 8 {
            return Err(rd.error(format!(
                "expected {} parameter bytes, found {}",
                2 * n * 8,
                rd.remaining()
            )));
        }
        let read = |rd: &mut Reader| (0..n).map(|_| rd.f64("parameter")).collect::<Result<Vec<_>>>();
        let sil = read(&mut rd)?;
        let depth = read(&mut rd)?;
        PredictorModel::from_parts(factor, range_r, lambda, arch, sil, depth)
            .map_err(|e| rd.error_at(params_offset, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::predictor::model::ModelConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut cfg = ModelConfig::new(3);
        cfg.width = 4;
        cfg.convs = 3;
        cfg.lambda_tv = 0.25;
        let m = PredictorModel::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let bytes = m.encode();
        let back = PredictorModel::decode(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.encode(), bytes);
    }

    #[test]
    fn corrupt_checkpoints_rejected() {
        let cfg = ModelConfig {
            width: 2,
            convs: 2,
            ..ModelConfig::new(2)
        };
        let bytes = PredictorModel::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap().encode();
        assert!(matches!(PredictorModel::decode(&bytes[..bytes.len() - 8]), Err(Error::Format { .. })));
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(matches!(PredictorModel::decode(&bad), Err(Error::Format { offset: 0, .. })));
        let mut bad_kind = bytes.clone();
        bad_kind[30] = 7;
        assert!(matches!(PredictorModel::decode(&bad_kind), Err(Error::Format { offset: 30, .. })));
    }
}
