//! Dataset directories (JSON manifest + CSV shards) and the alloy CSV layout.
//!
//! A dataset directory contains:
//!
//! * `manifest.json`: format tag, version, problem, provenance, effective seed,
//!   shape (`num_vars`, `num_constraints`, `num_features`) and split indices.
//! * `features.csv`, `rho.csv`, `fixed.csv`, `objective.csv`, `x_star.csv`:
//!   one row per instance, first column `instance`, then `f0..`, `r0..`,
//!   `c0..`, `q0..`, `x0..` respectively. Matrix-shaped parameters are
//!   flattened constraint-major (`i * N + n`). A missing optimum is an empty
//!   row tail.
//!
//! Files are UTF-8 with LF line endings and `.` as decimal separator; floats
//! use the shortest representation that round-trips.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, Problem, Provenance, SplitSizes, Splits, ALLOY_REQUIREMENTS};
use crate::cop::{Assignment, ConstraintSystem, CopInstance, Family, ParameterVector};
use crate::error::{Error, Result};
use crate::solve::{CopSolver, ExactSolver, SolveStatus};

pub const DATASET_FORMAT: &str = "odece-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub problem: Problem,
    pub family: Family,
    pub provenance: Provenance,
    pub effective_seed: u64,
    pub num_instances: usize,
    pub num_vars: usize,
    pub num_constraints: usize,
    pub num_features: usize,
    pub splits: Splits,
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn write_rows<'a>(
    path: &Path,
    prefix: &str,
    width: usize,
    rows: impl Iterator<Item = Option<&'a [f64]>>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut header = vec!["instance".to_string()];
    header.extend((0..width).map(|j| format!("{prefix}{j}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (k, row) in rows.enumerate() {
        let mut rec = vec![k.to_string()];
        match row {
            Some(vals) => rec.extend(vals.iter().map(|&v| fmt_f64(v))),
            None => rec.extend(std::iter::repeat_n(String::new(), width)),
        }
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parse a shard; rows with all-empty payload yield `None`.
fn read_rows(path: &Path, width: usize, expected_rows: usize) -> Result<Vec<Option<Vec<f64>>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut out = Vec::with_capacity(expected_rows);
    for (idx, rec) in r.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row,
            detail: e.to_string(),
        })?;
        if rec.len() != width + 1 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                detail: format!("expected {} columns, found {}", width + 1, rec.len()),
            });
        }
        if rec.iter().skip(1).all(|f| f.is_empty()) && width > 0 {
            out.push(None);
            continue;
        }
        let vals = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(col, f)| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    detail: format!("column {}: cannot parse {f:?} as a number", col + 1),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(Some(vals));
    }
    if out.len() != expected_rows {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: out.len(),
            detail: format!("expected {expected_rows} rows, found {}", out.len()),
        });
    }
    Ok(out)
}

/// Write `dataset` into `dir` (created if needed).
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let first = dataset
        .instances
        .first()
        .ok_or_else(|| Error::config("cannot write an empty dataset"))?;
    let sys = &first.system;
    let manifest = Manifest {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        problem: dataset.problem,
        family: sys.family(),
        provenance: dataset.provenance.clone(),
        effective_seed: dataset.effective_seed,
        num_instances: dataset.instances.len(),
        num_vars: sys.num_vars(),
        num_constraints: sys.num_constraints(),
        num_features: first.features.len(),
        splits: dataset.splits.clone(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;

    let inst = &dataset.instances;
    write_rows(
        &dir.join("features.csv"),
        "f",
        manifest.num_features,
        inst.iter().map(|i| Some(i.features.as_slice())),
    )?;
    write_rows(
        &dir.join("rho.csv"),
        "r",
        sys.predicted_slot_count(),
        inst.iter().map(|i| Some(i.rho_true.as_slice())),
    )?;
    write_rows(
        &dir.join("fixed.csv"),
        "c",
        sys.fixed_params().len(),
        inst.iter().map(|i| Some(i.system.fixed_params())),
    )?;
    write_rows(
        &dir.join("objective.csv"),
        "q",
        sys.num_vars(),
        inst.iter().map(|i| Some(i.objective.as_slice())),
    )?;
    write_rows(
        &dir.join("x_star.csv"),
        "x",
        sys.num_vars(),
        inst.iter().map(|i| i.x_star.as_ref().map(|x| x.values())),
    )?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    if manifest.format != DATASET_FORMAT || manifest.version != DATASET_VERSION {
        return Err(Error::config(format!(
            "{}: unsupported dataset {} v{}",
            path.display(),
            manifest.format,
            manifest.version
        )));
    }
    Ok(manifest)
}

/// Read a dataset directory written by [`write_dataset`].
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let m = read_manifest(dir)?;
    let k = m.num_instances;
    let template = ConstraintSystem::new(
        m.family,
        m.num_vars,
        m.num_constraints,
        vec![
            0.0;
            match m.family {
                Family::KnapsackCapacities => m.num_vars * m.num_constraints,
                _ => m.num_constraints,
            }
        ],
    )?;
    let features = read_rows(&dir.join("features.csv"), m.num_features, k)?;
    let rho = read_rows(&dir.join("rho.csv"), template.predicted_slot_count(), k)?;
    let fixed = read_rows(&dir.join("fixed.csv"), template.fixed_params().len(), k)?;
    let objective = read_rows(&dir.join("objective.csv"), m.num_vars, k)?;
    let x_star = read_rows(&dir.join("x_star.csv"), m.num_vars, k)?;

    let missing = |name: &str, row: usize| Error::Parse {
        path: dir.join(name),
        row: row + 1,
        detail: "row has no values".into(),
    };
    let mut instances = Vec::with_capacity(k);
    for (idx, ((((f, r), c), q), x)) in features
        .into_iter()
        .zip(rho)
        .zip(fixed)
        .zip(objective)
        .zip(x_star)
        .enumerate()
    {
        let system = template.with_fixed_params(c.ok_or_else(|| missing("fixed.csv", idx))?)?;
        let mut inst = CopInstance::new(
            system,
            f.ok_or_else(|| missing("features.csv", idx))?,
            ParameterVector::new(r.ok_or_else(|| missing("rho.csv", idx))?),
            q.ok_or_else(|| missing("objective.csv", idx))?,
        )?;
        if let Some(x) = x {
            inst.set_x_star(Assignment::new(x, m.family.var_domain())?)?;
        }
        instances.push(inst);
    }
    Ok(Dataset {
        problem: m.problem,
        provenance: m.provenance,
        effective_seed: m.effective_seed,
        instances,
        splits: m.splits,
    })
}

/// Result of [`load_alloy_csv`]: the parsed dataset plus validation warnings.
#[derive(Debug, Clone)]
pub struct AlloyCsvLoad {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

fn alloy_header(num_suppliers: usize, num_metals: usize, feature_dim: usize) -> Vec<String> {
    let mut h = Vec::new();
    for i in 0..num_metals {
        for n in 0..num_suppliers {
            for f in 0..feature_dim {
                h.push(format!("phi_m{i}_s{n}_f{f}"));
            }
        }
    }
    for i in 0..num_metals {
        for n in 0..num_suppliers {
            h.push(format!("rho_m{i}_s{n}"));
        }
    }
    for n in 0..num_suppliers {
        h.push(format!("price_s{n}"));
    }
    h
}

/// Export covering instances in the alloy CSV layout.
///
/// One row per instance: the `M x N x F` feature block (`phi_m{i}_s{n}_f{f}`,
/// metal-major), then true contents `rho_m{i}_s{n}`, then prices `price_s{n}`.
pub fn write_alloy_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let first = dataset
        .instances
        .first()
        .ok_or_else(|| Error::config("cannot export an empty dataset"))?;
    if first.system.family() != Family::CoveringLhs {
        return Err(Error::config("alloy CSV export needs covering instances"));
    }
    let (n, m) = (first.system.num_vars(), first.system.num_constraints());
    let f = first.features.len() / (n * m);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(alloy_header(n, m, f))
        .map_err(|e| csv_err(path, e))?;
    for inst in &dataset.instances {
        let rec: Vec<String> = inst
            .features
            .iter()
            .chain(inst.rho_true.as_slice())
            .chain(&inst.objective)
            .map(|&v| fmt_f64(v))
            .collect();
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn count_prefix(header: &csv::StringRecord, prefix: &str) -> usize {
    header.iter().filter(|h| h.starts_with(prefix)).count()
}

/// Load covering instances from an alloy-layout CSV; optima are computed with
/// the simplex solver. Requirements are the brass values (627.54, 369.72) for
/// two metals; other metal counts are rejected.
pub fn load_alloy_csv(path: &Path) -> Result<AlloyCsvLoad> {
    let parse_err = |row: usize, detail: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        detail,
    };
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let n = count_prefix(&header, "price_s");
    let nm = count_prefix(&header, "rho_m");
    if n == 0 || !nm.is_multiple_of(n) {
        return Err(parse_err(0, "header must contain price_s* and rho_m* groups".into()));
    }
    let m = nm / n;
    if m != ALLOY_REQUIREMENTS.len() {
        return Err(parse_err(0, format!("expected {} metals, header has {m}", ALLOY_REQUIREMENTS.len())));
    }
    let nphi = count_prefix(&header, "phi_m");
    if nphi == 0 || !nphi.is_multiple_of(nm) {
        return Err(parse_err(0, format!("{nphi} feature columns do not split over {nm} pairs")));
    }
    let f = nphi / nm;
    let expected = alloy_header(n, m, f);
    if header.len() != expected.len() || header.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(parse_err(0, "header columns are not in the documented order".into()));
    }
    let system = ConstraintSystem::new(Family::CoveringLhs, n, m, ALLOY_REQUIREMENTS.to_vec())?;

    let mut warnings = Vec::new();
    let mut instances = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| parse_err(row, e.to_string()))?;
        if rec.len() != expected.len() {
            return Err(parse_err(
                row,
                format!("expected {} columns, found {}", expected.len(), rec.len()),
            ));
        }
        let vals = rec
            .iter()
            .enumerate()
            .map(|(col, s)| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(row, format!("column {}: cannot parse {s:?}", expected[col])))
            })
            .collect::<Result<Vec<f64>>>()?;
        let (features, rest) = vals.split_at(nphi);
        let (contents, prices) = rest.split_at(nm);
        let offenders: Vec<String> = contents
            .iter()
            .enumerate()
            .filter(|(_, v)| !(v.is_finite() && **v >= 0.0))
            .map(|(j, v)| format!("{}={v}", expected[nphi + j]))
            .collect();
        if !offenders.is_empty() {
            let msg = format!("row {row}: invalid contents {}", offenders.join(", "));
            log::warn!("{}: {msg}", path.display());
            warnings.push(msg);
        }
        let features: Vec<f64> = features.to_vec();
        if !features.iter().chain(prices).all(|v| v.is_finite()) {
            return Err(parse_err(row, "features and prices must be finite".into()));
        }
        let rho = ParameterVector::new(contents.to_vec());
        let mut inst = CopInstance::new(system.clone(), features, rho.clone(), prices.to_vec())?;
        if rho.is_finite() {
            let out = ExactSolver.solve(&system, prices, &rho)?;
            match (out.status, out.assignment) {
                (SolveStatus::Optimal, Some(x)) => inst.set_x_star(x)?,
                (status, _) => {
                    let msg = format!("row {row}: true problem is {status:?}");
                    log::warn!("{}: {msg}", path.display());
                    warnings.push(msg);
                }
            }
        }
        instances.push(inst);
    }
    if instances.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }
    let k = instances.len();
    let split = if k == 500 {
        SplitSizes {
            train: 350,
            validation: 50,
            test: 100,
        }
    } else {
        let train = k * 7 / 10;
        let validation = k / 10;
        SplitSizes {
            train,
            validation,
            test: k - train - validation,
        }
    };
    Ok(AlloyCsvLoad {
        dataset: Dataset {
            problem: Problem::Alloy,
            provenance: Provenance::AlloyCsv {
                source: path.display().to_string(),
            },
            effective_seed: 0,
            instances,
            splits: split.indices(),
        },
        warnings,
    })
}

/// Paths of every file a dataset directory contains, in a fixed order.
pub fn dataset_files(dir: &Path) -> Vec<PathBuf> {
    [
        "manifest.json",
        "features.csv",
        "rho.csv",
        "fixed.csv",
        "objective.csv",
        "x_star.csv",
    ]
    .iter()
    .map(|f| dir.join(f))
    .collect()
}
