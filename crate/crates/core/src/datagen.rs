//! Synthetic datasets, dataset CSV files and partition directories.
//!
//! Generators use ChaCha8 seeded from a `u64`, so a `(distribution, n, d,
//! seed)` quadruple fixes the dataset bit for bit on every platform.
//!
//! A partition directory holds `list_1.csv ... list_d.csv` (header `id,value`,
//! ascending) and a `meta.json` with `distribution`, `n`, `d`, `seed` and
//! `attr_max`.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Tuple};
use crate::source::{write_list_csv, Pull, SortedAccess, SortedSource};
use crate::MAX_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Uni,
    Ant,
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uni" => Ok(Distribution::Uni),
            "ant" => Ok(Distribution::Ant),
            _ => Err(Error::Config(format!(
                "unknown distribution `{s}` (expected uni or ant)"
            ))),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Uni => "uni",
            Distribution::Ant => "ant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub distribution: Distribution,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(distribution: Distribution, n: usize, d: usize, seed: u64) -> Result<Self> {
        let spec = GenSpec {
            distribution,
            n,
            d,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.d == 0 {
            return Err(Error::ZeroDimension);
        }
        if self.d > MAX_DIM {
            return Err(Error::TooManyDimensions(self.d));
        }
        Ok(())
    }
}

fn tuple_id(i: usize) -> String {
    format!("t{:06}", i + 1)
}

fn unit_dataset(d: usize, tuples: Vec<Tuple>) -> Dataset {
    Dataset::new(d, tuples, Some(vec![1.0; d])).expect("generated values lie in [0, 1]")
}

/// i.i.d. uniform values in `[0, 1)`.
pub fn gen_uniform(spec: &GenSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tuples = (0..spec.n)
        .map(|i| {
            Tuple::new(
                tuple_id(i),
                (0..spec.d).map(|_| rng.random::<f64>()).collect(),
            )
        })
        .collect();
    Ok(unit_dataset(spec.d, tuples))
}

/// The usual skyline-benchmark anticorrelated construction: pick a plane
/// `sum x = c * d` with `c` peaked around 0.5, then move mass between
/// neighbouring coordinates by uniform amounts, rejecting points that leave
/// the unit cube.
pub fn gen_anticorrelated(spec: &GenSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.d;
    let mut x = vec![0.0; d];
    let tuples = (0..spec.n)
        .map(|i| {
            loop {
                let c = peak(&mut rng, 0.25, 0.75);
                let spread = c.min(1.0 - c);
                x.fill(c);
                for j in 0..d {
                    let h = spread * (2.0 * rng.random::<f64>() - 1.0);
                    x[j] += h;
                    x[(j + 1) % d] -= h;
                }
                if x.iter().all(|v| (0.0..=1.0).contains(v)) {
                    break;
                }
            }
            Tuple::new(tuple_id(i), x.clone())
        })
        .collect();
    Ok(unit_dataset(d, tuples))
}

/// Mean of 12 uniforms mapped onto `[lo, hi]`: a bell-shaped value on a bounded range.
fn peak(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let mean = (0..12).map(|_| rng.random::<f64>()).sum::<f64>() / 12.0;
    lo + mean * (hi - lo)
}

pub fn generate(spec: &GenSpec) -> Result<Dataset> {
    match spec.distribution {
        Distribution::Uni => gen_uniform(spec),
        Distribution::Ant => gen_anticorrelated(spec),
    }
}

/// Reads a dataset CSV (`id,a1,...,ad`).
pub fn load_dataset_csv(path: impl AsRef<Path>, attr_max: Option<Vec<f64>>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "id" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            message: "expected header `id,a1,...,ad`".into(),
        });
    }
    let dim = headers.len() - 1;

    let mut tuples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            row,
            message,
        };
        let values = record
            .iter()
            .skip(1)
            .map(|field| {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(format!("invalid value `{field}`")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(parse_err(format!("value {v} is negative or not finite")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        tuples.push(Tuple::new(&record[0], values));
    }
    Dataset::new(dim, tuples, attr_max)
}

pub fn write_dataset_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        let header: Vec<String> = (1..=ds.dim()).map(|i| format!("a{i}")).collect();
        writeln!(out, "id,{}", header.join(","))?;
        for t in ds.tuples() {
            write!(out, "{}", t.id)?;
            for v in &t.values {
                write!(out, ",{v:?}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Rescales every attribute onto `[0, 1]` by its observed range.
pub fn normalize(ds: &Dataset) -> Dataset {
    let dim = ds.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for t in ds.tuples() {
        for (j, &v) in t.values.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let tuples = ds
        .tuples()
        .iter()
        .map(|t| {
            let values = t
                .values
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    let range = hi[j] - lo[j];
                    if range > 0.0 {
                        ((v - lo[j]) / range).clamp(0.0, 1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            Tuple::new(t.id.clone(), values)
        })
        .collect();
    Dataset::new(dim, tuples, Some(vec![1.0; dim])).expect("normalized values lie in [0, 1]")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub distribution: Option<Distribution>,
    pub n: usize,
    pub d: usize,
    pub seed: Option<u64>,
    pub attr_max: Vec<f64>,
}

impl Meta {
    pub fn for_dataset(ds: &Dataset, spec: Option<&GenSpec>) -> Self {
        Meta {
            distribution: spec.map(|s| s.distribution),
            n: ds.len(),
            d: ds.dim(),
            seed: spec.map(|s| s.seed),
            attr_max: ds.attr_max().to_vec(),
        }
    }
}

pub fn list_path(dir: &Path, attr: usize) -> PathBuf {
    dir.join(format!("list_{}.csv", attr + 1))
}

/// Fails unless `dir` is missing or empty, then creates it.
pub fn prepare_empty_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        let mut entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        if entries.next().is_some() {
            return Err(Error::DirectoryNotEmpty(dir.to_path_buf()));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes one ranked list per attribute plus `meta.json` into an empty directory.
pub fn export_partition(ds: &Dataset, dir: impl AsRef<Path>, spec: Option<&GenSpec>) -> Result<()> {
    let dir = dir.as_ref();
    prepare_empty_dir(dir)?;
    write_partition(ds, dir, spec)
}

pub(crate) fn write_partition(ds: &Dataset, dir: &Path, spec: Option<&GenSpec>) -> Result<()> {
    for (attr, mut source) in ds.vertical_partition().into_iter().enumerate() {
        let mut pairs = Vec::with_capacity(ds.len());
        while let Pull::Entry(id, v) = source.pull() {
            pairs.push((id, v));
        }
        write_list_csv(
            list_path(dir, attr),
            pairs.iter().map(|(id, v)| (id.as_str(), *v)),
        )?;
    }
    let meta_path = dir.join("meta.json");
    let meta = serde_json::to_string_pretty(&Meta::for_dataset(ds, spec))?;
    std::fs::write(&meta_path, meta + "\n").map_err(|e| Error::io(&meta_path, e))
}

/// Opens a partition directory. Without `meta.json`, the lists are discovered
/// as `list_1.csv, list_2.csv, ...` and the maxima are the last value of each.
pub fn open_partition(dir: impl AsRef<Path>) -> Result<(Vec<SortedSource>, Meta)> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let meta: Option<Meta> = if meta_path.exists() {
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        Some(serde_json::from_str(&text)?)
    } else {
        None
    };

    let d = match &meta {
        Some(m) => m.d,
        None => (0..).take_while(|&a| list_path(dir, a).exists()).count(),
    };
    if d == 0 {
        return Err(Error::Config(format!("no list_1.csv in {}", dir.display())));
    }
    let mut sources = Vec::with_capacity(d);
    let mut maxima = Vec::with_capacity(d);
    let mut n = 0;
    for attr in 0..d {
        let path = list_path(dir, attr);
        let source = SortedSource::open_csv(&path)?;
        let (len, last) = scan_tail(&path)?;
        n = n.max(len);
        maxima.push(last);
        sources.push(source);
    }
    let meta = meta.unwrap_or(Meta {
        distribution: None,
        n,
        d,
        seed: None,
        attr_max: maxima,
    });
    if meta.attr_max.len() != d {
        return Err(Error::InvalidAttrMax(format!(
            "meta.json lists {} maxima for {d} lists",
            meta.attr_max.len()
        )));
    }
    Ok((sources, meta))
}

// Row count and last value of an already validated list file.
fn scan_tail(path: &Path) -> Result<(usize, f64)> {
    let mut source = SortedSource::open_csv(path)?;
    let mut last = 0.0;
    while let Pull::Entry(_, v) = source.pull() {
        last = v;
    }
    Ok((source.depth() as usize, last))
}
