//! Write-through on-disk embedding cache.
//!
//! One cache file serves one model (the file records a single dimension).
//! Records are stored sorted by key so the file bytes are a pure function
//! of the cache contents.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::binfmt::{read_records, write_records, BinfmtError, Record};

pub(crate) const CACHE_MAGIC: &str = "RGEMB1";

/// Content-addressed vector cache backed by a binary file.
pub struct EmbeddingCache {
    path: PathBuf,
    dimension: Option<u32>,
    map: BTreeMap<String, Vec<f64>>,
    dirty: bool,
}

impl EmbeddingCache {
    /// Open a cache file, or start empty when the file does not exist.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, BinfmtError> {
        let path = path.into();
        if !path.exists() {
            return Ok(Self {
                path,
                dimension: None,
                map: BTreeMap::new(),
                dirty: false,
            });
        }
        let (dimension, records) = read_records(&path, CACHE_MAGIC)?;
        let map = records
            .into_iter()
            .map(|r| (r.key, r.values.into_iter().map(f64::from).collect()))
            .collect();
        Ok(Self {
            path,
            dimension: Some(dimension),
            map,
            dirty: false,
        })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.map.get(key).map(Vec::as_slice)
    }

    /// Insert a unit vector under `key`. The first insert fixes the cache
    /// dimension; later inserts must match it.
    pub fn insert(&mut self, key: String, values: &[f64]) -> Result<(), BinfmtError> {
        let dim = values.len() as u32;
        match self.dimension {
            None => self.dimension = Some(dim),
            Some(d) if d != dim => {
                return Err(BinfmtError::Io(std::io::Error::new(
                    std::io::ErrorKind::InvalidInput,
                    format!("cache dimension {d} does not accept vector of length {dim}"),
                )));
            }
            Some(_) => {}
        }
        self.map.insert(key, values.to_vec());
        self.dirty = true;
        Ok(())
    }

    /// Persist the cache when anything changed since open/save.
    pub fn save(&mut self) -> Result<(), BinfmtError> {
        if !self.dirty {
            return Ok(());
        }
        let dimension = self.dimension.unwrap_or(0);
        let records: Vec<Record> = self
            .map
            .iter()
            .map(|(key, values)| Record {
                key: key.clone(),
                values: values.iter().map(|&v| v as f32).collect(),
            })
            .collect();
        write_records(&self.path, CACHE_MAGIC, dimension, &records)?;
        self.dirty = false;
        Ok(())
    }
}
