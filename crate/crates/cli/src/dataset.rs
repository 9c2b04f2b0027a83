//! Directory layouts for depth maps, training pairs and synthetic datasets.
//!
//! A map directory holds one `<view>.mvdo` per view (`x_pos.mvdo`, ...). A
//! training dataset holds `low/` and `high/` with identically named map
//! files, each name pairing a low-resolution map with its ground truth.

use std::path::Path;

use anyhow::{Context, Result};
use mvd::pipeline::SyntheticObject;
use mvd::predictor::TrainingPair;
use mvd::{extract_all, Odm, OdmSet, ViewId};

use crate::config::ConfigError;
use crate::{read, write};

pub fn write_odm_dir(dir: &Path, maps: &OdmSet) -> Result<()> {
    for odm in maps.iter() {
        write(&dir.join(format!("{}.mvdo", odm.view().name())), odm.encode())?;
    }
    Ok(())
}

fn read_odm(path: &Path) -> Result<Odm> {
    Odm::decode(&read(path)?).with_context(|| format!("decoding {}", path.display()))
}

pub fn read_odm_dir(dir: &Path) -> Result<OdmSet> {
    let maps = ViewId::ALL
        .iter()
        .map(|v| read_odm(&dir.join(format!("{}.mvdo", v.name()))))
        .collect::<Result<Vec<_>>>()?;
    Ok(OdmSet::new(maps)?)
}

fn mvdo_names(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let entry = entry.with_context(|| format!("listing {}", dir.display()))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".mvdo") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

pub fn read_pairs(dataset: &Path) -> Result<Vec<TrainingPair>> {
    let low_dir = dataset.join("low");
    let high_dir = dataset.join("high");
    let low = mvdo_names(&low_dir)?;
    let high = mvdo_names(&high_dir)?;
    if low != high {
        let missing = low.iter().chain(&high).find(|n| !low.contains(n) || !high.contains(n));
        return Err(ConfigError(format!("low/ and high/ differ; {} has no partner", missing.map_or("?", |s| s))).into());
    }
    if low.is_empty() {
        return Err(ConfigError(format!("no .mvdo pairs under {}", dataset.display())).into());
    }
    low.iter()
        .map(|n| {
            Ok(TrainingPair {
                low: read_odm(&low_dir.join(n))?,
                high: read_odm(&high_dir.join(n))?,
            })
        })
        .collect()
}

/// Writes `grids/NNNN_{low,high}.mvdv`, `specs/NNNN.json` and the training
/// layout `low/NNNN_<view>.mvdo`, `high/NNNN_<view>.mvdo`.
pub fn write_synthetic(out: &Path, objects: &[SyntheticObject]) -> Result<()> {
    for sub in ["grids", "specs", "low", "high"] {
        let d = out.join(sub);
        std::fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
    }
    for (i, o) in objects.iter().enumerate() {
        write(&out.join(format!("grids/{i:04}_low.mvdv")), o.low.encode())?;
        write(&out.join(format!("grids/{i:04}_high.mvdv")), o.high.encode())?;
        write(&out.join(format!("specs/{i:04}.json")), serde_json::to_string_pretty(&o.spec)?)?;
        for (res, grid) in [("low", &o.low), ("high", &o.high)] {
            for odm in extract_all(grid).iter() {
                write(&out.join(format!("{res}/{i:04}_{}.mvdo", odm.view().name())), odm.encode())?;
            }
        }
    }
    Ok(())
}
