//! On-disk layout:
//!
//! ```text
//! <root>/meta.json                          round, counts, format version, dataset order
//! <root>/algorithms.json                    list of AlgoMeta
//! <root>/datasets/<name>/meta.json          DatasetMeta
//! <root>/datasets/<name>/curves/<id>.json   R1: {times, valid, test}
//!                                           R2: {p, cost, train, valid, test}
//! ```
//!
//! All files are UTF-8 JSON with LF line endings. Floats are written in
//! shortest round-trip form, so `load(save(md)) == md` bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{AlgoMeta, CurveTable, DatasetMeta, MetaDataset, Round, TimeCurvePair};
use crate::error::{Error, Result};
use crate::lc::{Anchor, GridFraction, SizeCurveTriplet, TimeCurve};

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RootMeta {
    round: Round,
    n_datasets: usize,
    n_algorithms: usize,
    format_version: u32,
    /// Dataset order. Optional; a sorted directory listing is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    datasets: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct R1File {
    times: Vec<f64>,
    valid: Vec<f64>,
    test: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct R2File {
    p: Vec<f64>,
    cost: Vec<f64>,
    train: Vec<f64>,
    valid: Vec<f64>,
    test: Vec<f64>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn curve_path(root: &Path, dataset: &str, algo_id: u32) -> PathBuf {
    root.join("datasets").join(dataset).join("curves").join(format!("{algo_id}.json"))
}

/// Reads and fully validates a meta-dataset directory.
pub fn load(root: impl AsRef<Path>) -> Result<MetaDataset> {
    let root = root.as_ref();
    let meta_path = root.join("meta.json");
    let meta: RootMeta = read_json(&meta_path)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Validation {
            context: meta_path.display().to_string(),
            index: None,
            reason: format!("unsupported format_version {}", meta.format_version),
        });
    }

    let algo_path = root.join("algorithms.json");
    let algorithms: Vec<AlgoMeta> = read_json(&algo_path)?;
    if algorithms.len() != meta.n_algorithms {
        return Err(Error::Validation {
            context: algo_path.display().to_string(),
            index: None,
            reason: format!("{} algorithms listed, meta.json says {}", algorithms.len(), meta.n_algorithms),
        });
    }

    let names = match meta.datasets {
        Some(names) => names,
        None => list_datasets(&root.join("datasets"))?,
    };
    if names.len() != meta.n_datasets {
        return Err(Error::Validation {
            context: meta_path.display().to_string(),
            index: None,
            reason: format!("{} datasets found, meta.json says {}", names.len(), meta.n_datasets),
        });
    }

    let mut datasets = Vec::with_capacity(names.len());
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    for name in &names {
        let dmeta_path = root.join("datasets").join(name).join("meta.json");
        let dmeta: DatasetMeta = read_json(&dmeta_path)?;
        if &dmeta.name != name {
            return Err(Error::Validation {
                context: dmeta_path.display().to_string(),
                index: None,
                reason: format!("name '{}' does not match directory '{name}'", dmeta.name),
            });
        }
        dmeta
            .validate()
            .map_err(|e| e.in_context(dmeta_path.display().to_string()))?;

        for algo in &algorithms {
            let path = curve_path(root, name, algo.algo_id);
            if !path.is_file() {
                return Err(Error::Incomplete {
                    dataset: name.clone(),
                    algo: algo.algo_id.to_string(),
                });
            }
            let ctx = |e: Error| e.in_context(path.display().to_string());
            match meta.round {
                Round::R1 => {
                    let f: R1File = read_json(&path)?;
                    let valid = TimeCurve::from_columns(&f.times, &f.valid, &dmeta.metric_name).map_err(ctx)?;
                    let test = TimeCurve::from_columns(&f.times, &f.test, &dmeta.metric_name).map_err(ctx)?;
                    r1.push(TimeCurvePair { valid, test });
                }
                Round::R2 => {
                    let f: R2File = read_json(&path)?;
                    r2.push(triplet_from_file(&f).map_err(ctx)?);
                }
            }
        }
        datasets.push(dmeta);
    }

    let curves = match meta.round {
        Round::R1 => CurveTable::R1(r1),
        Round::R2 => CurveTable::R2(r2),
    };
    MetaDataset::new(datasets, algorithms, curves).map_err(|e| e.in_context(root.display().to_string()))
}

fn list_datasets(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.path().is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

fn triplet_from_file(f: &R2File) -> Result<SizeCurveTriplet<f64>> {
    let n = f.p.len();
    if [f.cost.len(), f.train.len(), f.valid.len(), f.test.len()].iter().any(|&l| l != n) {
        return Err(Error::validation(None, "p/cost/train/valid/test arrays differ in length"));
    }
    let anchors = (0..n)
        .map(|i| {
            let p = GridFraction::from_fraction(f.p[i])
                .ok_or_else(|| Error::validation(Some(i), format!("fraction {} is not on the 0.1 grid", f.p[i])))?;
            Ok(Anchor {
                p,
                cost: f.cost[i],
                train: f.train[i],
                valid: f.valid[i],
                test: f.test[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SizeCurveTriplet::new(anchors)
}

/// Writes `md` in the directory layout read by [`load`]. Output is canonical:
/// saving the same value twice produces byte-identical files.
pub fn save(md: &MetaDataset, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    create_dir(root)?;
    write_json(
        &root.join("meta.json"),
        &RootMeta {
            round: md.round(),
            n_datasets: md.n_datasets(),
            n_algorithms: md.n_algorithms(),
            format_version: FORMAT_VERSION,
            datasets: Some(md.datasets().iter().map(|d| d.name.clone()).collect()),
        },
    )?;
    write_json(&root.join("algorithms.json"), md.algorithms())?;

    for (i, dmeta) in md.datasets().iter().enumerate() {
        let ddir = root.join("datasets").join(&dmeta.name);
        create_dir(&ddir.join("curves"))?;
        write_json(&ddir.join("meta.json"), dmeta)?;
        for (j, algo) in md.algorithms().iter().enumerate() {
            let path = curve_path(root, &dmeta.name, algo.algo_id);
            match md.round() {
                Round::R1 => {
                    let pair = md.r1(i, j).expect("R1 table is total");
                    write_json(
                        &path,
                        &R1File {
                            times: pair.valid.points().iter().map(|p| p.t).collect(),
                            valid: pair.valid.points().iter().map(|p| p.s).collect(),
                            test: pair.test.points().iter().map(|p| p.s).collect(),
                        },
                    )?;
                }
                Round::R2 => {
                    let a = md.r2(i, j).expect("R2 table is total").anchors();
                    write_json(
                        &path,
                        &R2File {
                            p: a.iter().map(|x| x.p.fraction()).collect(),
                            cost: a.iter().map(|x| x.cost).collect(),
                            train: a.iter().map(|x| x.train).collect(),
                            valid: a.iter().map(|x| x.valid).collect(),
                            test: a.iter().map(|x| x.test).collect(),
                        },
                    )?;
                }
            }
        }
    }
    Ok(())
}
