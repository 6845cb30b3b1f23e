//! Sorted access over ranked lists.
//!
//! A [`SortedSource`] hands out its `(id, value)` pairs one at a time in
//! ascending value order. There is deliberately no way to look a value up by
//! id: the engine only ever sees what sorted access has revealed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Pull {
    Entry(String, f64),
    Exhausted,
}

/// Anything the engine can read by sorted access.
pub trait SortedAccess {
    /// Next pair in ascending value order, or [`Pull::Exhausted`] forever after
    /// the last one.
    fn pull(&mut self) -> Pull;

    /// Number of pairs emitted so far.
    fn depth(&self) -> u64;

    fn is_exhausted(&self) -> bool;
}

#[derive(Debug, Clone)]
pub struct SortedSource {
    entries: Vec<(String, f64)>,
    cursor: usize,
}

impl SortedSource {
    /// Sorts `pairs` by value, ties by id.
    pub fn from_unsorted(mut pairs: Vec<(String, f64)>) -> Self {
        pairs.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        SortedSource {
            entries: pairs,
            cursor: 0,
        }
    }

    pub fn empty() -> Self {
        SortedSource {
            entries: Vec::new(),
            cursor: 0,
        }
    }

    /// Loads a ranked-list CSV (`id,value`), rejecting rows that break the
    /// ascending order.
    pub fn open_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);

        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "id" || &headers[1] != "value" {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: 0,
                message: format!(
                    "expected header `id,value`, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }

        let mut entries: Vec<(String, f64)> = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record?;
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                row,
                message,
            };
            if record.len() != 2 {
                return Err(parse_err(format!(
                    "expected 2 fields, found {}",
                    record.len()
                )));
            }
            let id = record[0].to_string();
            let value: f64 = record[1]
                .parse()
                .map_err(|_| parse_err(format!("invalid value `{}`", &record[1])))?;
            if !value.is_finite() || value < 0.0 {
                return Err(parse_err(format!(
                    "value {value} is negative or not finite"
                )));
            }
            if let Some(&(_, previous)) = entries.last() {
                if value < previous {
                    return Err(Error::SortOrder {
                        path: path.to_path_buf(),
                        row,
                        value,
                        previous,
                    });
                }
            }
            entries.push((id, value));
        }
        Ok(SortedSource { entries, cursor: 0 })
    }
}

impl SortedAccess for SortedSource {
    fn pull(&mut self) -> Pull {
        match self.entries.get(self.cursor) {
            Some((id, v)) => {
                self.cursor += 1;
                Pull::Entry(id.clone(), *v)
            }
            None => Pull::Exhausted,
        }
    }

    fn depth(&self) -> u64 {
        self.cursor as u64
    }

    fn is_exhausted(&self) -> bool {
        self.cursor >= self.entries.len()
    }
}

pub fn open_csv_source(path: impl AsRef<Path>) -> Result<SortedSource> {
    SortedSource::open_csv(path)
}

/// Writes a ranked list in the `id,value` CSV format.
pub fn write_list_csv<'a>(
    path: impl AsRef<Path>,
    pairs: impl IntoIterator<Item = (&'a str, f64)>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = || -> std::io::Result<()> {
        writeln!(out, "id,value")?;
        for (id, v) in pairs {
            writeln!(out, "{id},{v:?}")?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Growing,
    Shrinking,
}

/// Per-list depth counters split by the phase that made each access.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessLog {
    growing: Vec<u64>,
    shrinking: Vec<u64>,
}

impl AccessLog {
    pub fn new(lists: usize) -> Self {
        AccessLog {
            growing: vec![0; lists],
            shrinking: vec![0; lists],
        }
    }

    pub fn record(&mut self, list: usize, phase: Phase) {
        match phase {
            Phase::Growing => self.growing[list] += 1,
            Phase::Shrinking => self.shrinking[list] += 1,
        }
    }

    pub fn lists(&self) -> usize {
        self.growing.len()
    }

    pub fn growing(&self) -> &[u64] {
        &self.growing
    }

    pub fn shrinking(&self) -> &[u64] {
        &self.shrinking
    }

    pub fn depth(&self, list: usize) -> u64 {
        self.growing[list] + self.shrinking[list]
    }

    pub fn depths(&self) -> Vec<u64> {
        (0..self.lists()).map(|i| self.depth(i)).collect()
    }

    pub fn phase_total(&self, phase: Phase) -> u64 {
        match phase {
            Phase::Growing => self.growing.iter().sum(),
            Phase::Shrinking => self.shrinking.iter().sum(),
        }
    }

    pub fn max_depth(&self) -> u64 {
        (0..self.lists()).map(|i| self.depth(i)).max().unwrap_or(0)
    }
}

/// Total sorted accesses over all lists.
pub fn sum_depths(log: &AccessLog) -> u64 {
    log.phase_total(Phase::Growing) + log.phase_total(Phase::Shrinking)
}
