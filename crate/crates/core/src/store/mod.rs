//! Single-file profile store: a JSONL file of profiles sorted by id plus a
//! sidecar index (`<store>.idx`) holding one sorted row permutation per
//! attribute.
//!
//! Ingests are atomic: the new store is written to temporary files and
//! renamed into place, so readers always see the last committed state.

mod query;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use self::query::{Attribute, Comparator, Predicate, ProfileQuery, SortOrder};
use crate::pipeline::{read_jsonl, write_jsonl, CrossTrafficProfile, JsonlError};

const INDEX_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed profile on line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("bad query {0}")]
    BadQuery(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// On-disk form of the sidecar index.
#[derive(Debug, Serialize, Deserialize)]
struct SidecarIndex {
    version: u32,
    /// SHA-256 of the JSONL file the index was built for.
    digest: String,
    profiles: usize,
    columns: BTreeMap<Attribute, Vec<u32>>,
}

#[derive(Debug, Default)]
pub struct ProfileStore {
    path: Option<PathBuf>,
    /// Sorted by id, ids unique.
    profiles: Vec<CrossTrafficProfile>,
    /// Per attribute, row numbers sorted by (value, id); rows with an unset
    /// value are left out.
    columns: BTreeMap<Attribute, Vec<u32>>,
}

pub fn sidecar_path(store: &Path) -> PathBuf {
    let mut s = store.as_os_str().to_owned();
    s.push(".idx");
    PathBuf::from(s)
}

impl ProfileStore {
    /// A store that is never persisted.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens a store file, creating nothing until the first ingest. The
    /// sidecar index is used when it matches the JSONL digest and rebuilt
    /// in memory otherwise.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut store = Self {
            path: Some(path.clone()),
            ..Default::default()
        };
        if !path.exists() {
            return Ok(store);
        }
        let mut raw = Vec::new();
        File::open(&path)
            .and_then(|mut f| f.read_to_end(&mut raw))
            .map_err(io_err(&path))?;
        let profiles = parse_lines(&raw)?;
        store.set_profiles(profiles.into_iter());

        let digest = hex::encode(Sha256::digest(&raw));
        let sidecar = sidecar_path(&path);
        let loaded = fs::read(&sidecar)
            .ok()
            .and_then(|b| serde_json::from_slice::<SidecarIndex>(&b).ok())
            .filter(|idx| {
                idx.version == INDEX_VERSION
                    && idx.digest == digest
                    && idx.profiles == store.profiles.len()
            });
        match loaded {
            Some(idx) => store.columns = idx.columns,
            None => store.rebuild_index(),
        }
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[CrossTrafficProfile] {
        &self.profiles
    }

    pub fn get(&self, id: &str) -> Option<&CrossTrafficProfile> {
        self.profiles
            .binary_search_by(|p| p.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.profiles[i])
    }

    /// Ingests a JSONL stream. Every line is parsed before anything is
    /// committed; on error the store is left untouched. Duplicate ids keep
    /// the last occurrence. Returns the number of stored profiles.
    pub fn ingest<R: Read>(&mut self, mut reader: R) -> Result<usize, StoreError> {
        let mut raw = Vec::new();
        reader.read_to_end(&mut raw).map_err(|source| StoreError::Io {
            path: "<input>".into(),
            source,
        })?;
        let incoming = parse_lines(&raw)?;
        self.ingest_profiles(incoming)
    }

    pub fn ingest_profiles(
        &mut self,
        incoming: impl IntoIterator<Item = CrossTrafficProfile>,
    ) -> Result<usize, StoreError> {
        let mut merged: BTreeMap<String, CrossTrafficProfile> = self
            .profiles
            .iter()
            .map(|p| (p.id.clone(), p.clone()))
            .collect();
        for p in incoming {
            merged.insert(p.id.clone(), p);
        }
        let mut next = Self {
            path: self.path.clone(),
            ..Default::default()
        };
        next.set_profiles(merged.into_values());
        next.rebuild_index();
        next.persist()?;
        *self = next;
        Ok(self.profiles.len())
    }

    fn set_profiles(&mut self, profiles: impl Iterator<Item = CrossTrafficProfile>) {
        let mut by_id: BTreeMap<String, CrossTrafficProfile> = BTreeMap::new();
        for p in profiles {
            by_id.insert(p.id.clone(), p);
        }
        self.profiles = by_id.into_values().collect();
    }

    fn rebuild_index(&mut self) {
        self.columns = Attribute::ALL
            .into_iter()
            .map(|attr| {
                let mut rows: Vec<(f64, u32)> = self
                    .profiles
                    .iter()
                    .enumerate()
                    .filter_map(|(i, p)| attr.value(p).map(|v| (v, i as u32)))
                    .collect();
                // rows are already in id order, so a stable sort keeps ties by id
                rows.sort_by(|a, b| a.0.total_cmp(&b.0));
                (attr, rows.into_iter().map(|(_, i)| i).collect())
            })
            .collect();
    }

    fn persist(&self) -> Result<(), StoreError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let mut raw = Vec::new();
        write_jsonl(&mut raw, &self.profiles).map_err(io_err(path))?;
        let index = SidecarIndex {
            version: INDEX_VERSION,
            digest: hex::encode(Sha256::digest(&raw)),
            profiles: self.profiles.len(),
            columns: self.columns.clone(),
        };
        let sidecar = sidecar_path(path);
        write_atomically(path, &raw)?;
        let idx = serde_json::to_vec(&index).expect("index serializes");
        write_atomically(&sidecar, &idx)
    }

    /// Rows whose `attr` value satisfies `cmp value`, via binary search on the
    /// attribute's sorted column.
    fn candidate_rows(&self, pred: &Predicate) -> &[u32] {
        let Some(col) = self.columns.get(&pred.attribute) else {
            return &[];
        };
        let val = |row: &u32| {
            pred.attribute
                .value(&self.profiles[*row as usize])
                .expect("indexed rows have values")
        };
        let lo_eq = col.partition_point(|r| val(r) < pred.value);
        let hi_eq = col.partition_point(|r| val(r) <= pred.value);
        match pred.comparator {
            Comparator::Lt => &col[..lo_eq],
            Comparator::Le => &col[..hi_eq],
            Comparator::Eq => &col[lo_eq..hi_eq],
            Comparator::Ge => &col[lo_eq..],
            Comparator::Gt => &col[hi_eq..],
        }
    }

    /// Profiles satisfying every predicate, ordered and truncated per the query.
    pub fn select(&self, q: &ProfileQuery) -> Vec<CrossTrafficProfile> {
        let rows: Vec<u32> = match q
            .predicates
            .iter()
            .map(|p| self.candidate_rows(p))
            .min_by_key(|rows| rows.len())
        {
            Some(rows) => rows.to_vec(),
            None => (0..self.profiles.len() as u32).collect(),
        };
        q.scan(
            rows.into_iter()
                .map(|r| &self.profiles[r as usize])
                .filter(|p| q.matches(p)),
        )
    }
}

fn parse_lines(raw: &[u8]) -> Result<Vec<CrossTrafficProfile>, StoreError> {
    read_jsonl(BufReader::new(raw)).map_err(|e| match e {
        JsonlError::Parse { line, source } => StoreError::MalformedLine {
            line,
            reason: source.to_string(),
        },
        JsonlError::Invalid { line, source } => StoreError::MalformedLine {
            line,
            reason: source.to_string(),
        },
        JsonlError::Io(source) => StoreError::Io {
            path: "<input>".into(),
            source,
        },
    })
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.into_inner()
            .map_err(|e| e.into_error())
            .and_then(|f| f.sync_all())
            .map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Direction;
    use crate::pipeline::WindowContext;

    fn profile(tag: u64, bins: Vec<u64>) -> CrossTrafficProfile {
        CrossTrafficProfile::new(
            format!("t{tag}"),
            "10.0.0.0/8".parse().unwrap(),
            Direction::Down,
            0.0,
            100,
            bins,
            &WindowContext::default(),
        )
        .unwrap()
    }

    fn jsonl(profiles: &[CrossTrafficProfile]) -> Vec<u8> {
        let mut v = Vec::new();
        write_jsonl(&mut v, profiles).unwrap();
        v
    }

    #[test]
    fn pmr95_filter() {
        let with_pmr95 = |tag, v| {
            let mut p = profile(tag, vec![tag, 1]);
            p.metrics.pmr95 = v;
            p
        };
        let (a, b, c) = (with_pmr95(1, 0.5), with_pmr95(2, 1.2), with_pmr95(3, 3.0));
        let mut store = ProfileStore::in_memory();
        store.ingest_profiles([a, b.clone(), c.clone()]).unwrap();
        let got: Vec<String> = store
            .select(&ProfileQuery::parse("pmr95>=1").unwrap())
            .into_iter()
            .map(|p| p.id)
            .collect();
        let mut expected = vec![b.id, c.id];
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn dedup_and_count() {
        let p = profile(1, vec![1, 2, 3]);
        let mut store = ProfileStore::in_memory();
        assert_eq!(store.ingest(jsonl(&[p.clone(), p.clone()]).as_slice()).unwrap(), 1);
        assert_eq!(store.ingest(jsonl(&[p]).as_slice()).unwrap(), 1);
    }

    #[test]
    fn malformed_line_leaves_store_unchanged() {
        let good: Vec<_> = (0..6).map(|i| profile(i, vec![i, 1])).collect();
        let mut store = ProfileStore::in_memory();
        store.ingest_profiles(good[..2].to_vec()).unwrap();
        let mut bytes = jsonl(&good);
        bytes.extend_from_slice(b"{\"id\": 7}\n");
        match store.ingest(bytes.as_slice()) {
            Err(StoreError::MalformedLine { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn empty_store_selects_nothing() {
        let store = ProfileStore::in_memory();
        assert!(store.select(&ProfileQuery::parse("pmr>0").unwrap()).is_empty());
        assert!(store.select(&ProfileQuery::default()).is_empty());
    }

    #[test]
    fn persisted_store_reopens_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profiles.jsonl");
        let ps: Vec<_> = (0..20).map(|i| profile(i, vec![i * 10, 5, i])).collect();
        let mut store = ProfileStore::open(&path).unwrap();
        store.ingest_profiles(ps).unwrap();
        assert!(sidecar_path(&path).exists());

        let reopened = ProfileStore::open(&path).unwrap();
        assert_eq!(reopened.len(), 20);
        assert_eq!(reopened.columns, store.columns);

        // stale sidecar: rebuilt in memory, same answers
        fs::write(sidecar_path(&path), b"garbage").unwrap();
        let rebuilt = ProfileStore::open(&path).unwrap();
        let q = ProfileQuery::parse("mean_throughput_bps>1000").unwrap();
        assert_eq!(rebuilt.select(&q), store.select(&q));
    }

    #[test]
    fn order_and_limit() {
        let ps: Vec<_> = (1..=5).map(|i| profile(i, vec![i * 100, 0])).collect();
        let mut store = ProfileStore::in_memory();
        store.ingest_profiles(ps).unwrap();
        let q = ProfileQuery::default()
            .with_order(Attribute::MeanThroughputBps, SortOrder::Desc)
            .with_limit(2);
        let got = store.select(&q);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].bins[0], 500);
        assert_eq!(got[1].bins[0], 400);
    }
}
