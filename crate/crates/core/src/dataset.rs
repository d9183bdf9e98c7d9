//! Dataset container: a flat binary data file plus a TOML manifest.
//!
//! Data file layout (little-endian):
//!
//! ```text
//! "SMNV1"                                  5 bytes
//! per sample:
//!   sample_id                              u64
//!   digit, order, speed, blink             4 × u8
//!   frames                                 48·64·64 bytes, frame-major
//! ```
//!
//! The manifest carries the per-sample index (id, byte offset, labels) and
//! the generation parameters needed to rebuild each trajectory exactly.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mnist::{DigitPool, NUM_CLASSES};
use crate::video::{
    is_valid_pair, sample_seed, simulate_trajectory, GenOptions, GenParams, LabeledVideo,
    FRAME_COUNT, FRAME_SIDE, MAX_START, QUADRANT_ORDERS, VIDEO_BYTES,
};

pub const DATA_MAGIC: &[u8; 5] = b"SMNV1";
pub const FORMAT_VERSION: &str = "SMNV1";
pub const RECORD_HEADER_BYTES: usize = 12;
pub const RECORD_BYTES: usize = RECORD_HEADER_BYTES + VIDEO_BYTES;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("bad magic: expected \"SMNV1\"")]
    BadMagic,
    #[error("manifest does not match data file: {0}")]
    ManifestMismatch(String),
    #[error("truncated data file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: u64, found: u64 },
    #[error("invalid sample {sample_id}: {reason}")]
    InvalidSample { sample_id: u64, reason: String },
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("unknown sample id {0}")]
    UnknownSample(u64),
    #[error("dataset is empty")]
    Empty,
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

mod u64_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub sample_id: u64,
    pub byte_offset: u64,
    pub digit_label: u8,
    pub order_label: u8,
    pub speed_label: u8,
    pub blink_v: u8,
    pub digit_index: u64,
    pub direction: f64,
    pub start_x: f64,
    pub start_y: f64,
}

impl SampleEntry {
    pub fn params(&self, master_seed: u64) -> GenParams {
        GenParams {
            speed: self.speed_label,
            blink: self.blink_v,
            order_class: self.order_label,
            direction: self.direction,
            start: [self.start_x, self.start_y],
            digit_index: self.digit_index as usize,
            sample_seed: sample_seed(master_seed, self.sample_id),
        }
    }

    fn header_bytes(&self) -> [u8; RECORD_HEADER_BYTES] {
        let mut h = [0u8; RECORD_HEADER_BYTES];
        h[..8].copy_from_slice(&self.sample_id.to_le_bytes());
        h[8..].copy_from_slice(&[self.digit_label, self.order_label, self.speed_label, self.blink_v]);
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    #[serde(with = "u64_string")]
    pub master_seed: u64,
    pub sample_count: usize,
    pub frame_count: usize,
    pub frame_size: usize,
    pub split_name: String,
    pub data_file: String,
    pub data_sha256: String,
    pub generation: BTreeMap<String, String>,
    pub samples: Vec<SampleEntry>,
}

impl DatasetManifest {
    pub fn from_toml(text: &str) -> Result<Self, DatasetError> {
        let m: DatasetManifest =
            toml::from_str(text).map_err(|e| DatasetError::InvalidManifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields are all TOML-representable")
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::IoFailure {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn entry(&self, sample_id: u64) -> Option<&SampleEntry> {
        self.samples.iter().find(|e| e.sample_id == sample_id)
    }

    /// Reconstructs the generation switches recorded at write time.
    pub fn gen_options(&self) -> GenOptions {
        let parse = |key: &str| self.generation.get(key).and_then(|v| v.parse::<u8>().ok());
        GenOptions {
            fixed_speed: parse("fixed_speed"),
            fixed_blink: parse("fixed_blink"),
            masking: self.generation.get("masking").map(String::as_str) != Some("off"),
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidManifest(m));
        if self.format_version != FORMAT_VERSION {
            return bad(format!("unsupported format_version {:?}", self.format_version));
        }
        if self.frame_count != FRAME_COUNT || self.frame_size != FRAME_SIDE {
            return bad(format!(
                "frame geometry {}x{}x{} is not 48x64x64",
                self.frame_count, self.frame_size, self.frame_size
            ));
        }
        if self.sample_count != self.samples.len() {
            return Err(DatasetError::ManifestMismatch(format!(
                "sample_count {} but {} index entries",
                self.sample_count,
                self.samples.len()
            )));
        }
        let mut ids = HashSet::with_capacity(self.samples.len());
        let mut last_offset = None;
        for e in &self.samples {
            if !ids.insert(e.sample_id) {
                return bad(format!("duplicate sample_id {}", e.sample_id));
            }
            if last_offset.is_some_and(|o| e.byte_offset <= o) {
                return bad(format!("offset of sample {} is not increasing", e.sample_id));
            }
            last_offset = Some(e.byte_offset);
            check_labels(e).map_err(|reason| DatasetError::InvalidSample {
                sample_id: e.sample_id,
                reason,
            })?;
        }
        Ok(())
    }
}

fn check_labels(e: &SampleEntry) -> Result<(), String> {
    if e.digit_label as usize >= NUM_CLASSES {
        return Err(format!("digit label {}", e.digit_label));
    }
    if e.order_label as usize >= QUADRANT_ORDERS.len() {
        return Err(format!("order label {}", e.order_label));
    }
    if !is_valid_pair(e.speed_label, e.blink_v) {
        return Err(format!("(S, V) = ({}, {})", e.speed_label, e.blink_v));
    }
    let in_box = |c: f64| (0.0..=MAX_START).contains(&c);
    if !in_box(e.start_x) || !in_box(e.start_y) {
        return Err(format!("start ({}, {})", e.start_x, e.start_y));
    }
    if !e.direction.is_finite() {
        return Err("non-finite direction".into());
    }
    if e.sample_id > i64::MAX as u64 {
        return Err("sample_id above 2^63 - 1".into());
    }
    Ok(())
}

/// Dataset-level values written into the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub master_seed: u64,
    pub split_name: String,
    pub generation: BTreeMap<String, String>,
}

/// Key-value record of every generation decision, sufficient to regenerate
/// the dataset from the same master seed and digit pool.
pub fn describe_generation(options: &GenOptions, pool: &DigitPool, mnist_source: &str) -> BTreeMap<String, String> {
    let mut g = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        g.insert(k.to_string(), v);
    };
    put("generator", format!("stmnist {}", env!("CARGO_PKG_VERSION")));
    put("quadrant_convention", "1=top-left,2=top-right,3=bottom-left,4=bottom-right".into());
    put("quadrant_orders", "1234,1243,1423,1432,1324,1342".into());
    put("blink_phase", "visible iff t mod V == 0".into());
    put(
        "reflection_rule",
        "mirror component about wall [0,36] and flip its velocity; corners flip both".into(),
    );
    put("direction", "uniform angle in [0, 2pi)".into());
    put("speed_blink", "uniform over admissible pairs with S*V < 50".into());
    put(
        "rng",
        "ChaCha8 seed_from_u64(mix64(mix64(master) ^ (index+1)*0x9e3779b97f4a7c15)); draws: pair, angle, x, y, order, digit"
            .into(),
    );
    put("render", "round half away from zero to integer top-left".into());
    put("masking", if options.masking { "on" } else { "off" }.into());
    if let Some(s) = options.fixed_speed {
        put("fixed_speed", s.to_string());
    }
    if let Some(v) = options.fixed_blink {
        put("fixed_blink", v.to_string());
    }
    put("mnist_source", mnist_source.to_string());
    put("pool_size", pool.len().to_string());
    put("pool_sha256", pool.content_hash());
    g
}

/// Streams sample records into `W`, maintaining the running checksum and index.
pub struct DatasetWriter<W: Write> {
    out: W,
    hasher: Sha256,
    entries: Vec<SampleEntry>,
    ids: HashSet<u64>,
    offset: u64,
}

impl<W: Write> DatasetWriter<W> {
    pub fn new(mut out: W) -> Result<Self, DatasetError> {
        out.write_all(DATA_MAGIC)?;
        let mut hasher = Sha256::new();
        hasher.update(DATA_MAGIC);
        Ok(DatasetWriter {
            out,
            hasher,
            entries: Vec::new(),
            ids: HashSet::new(),
            offset: DATA_MAGIC.len() as u64,
        })
    }

    pub fn push(&mut self, sample: &LabeledVideo) -> Result<(), DatasetError> {
        let p = &sample.params;
        let entry = SampleEntry {
            sample_id: sample.sample_id,
            byte_offset: self.offset,
            digit_label: sample.digit_label,
            order_label: p.order_class,
            speed_label: p.speed,
            blink_v: p.blink,
            digit_index: p.digit_index as u64,
            direction: p.direction,
            start_x: p.start[0],
            start_y: p.start[1],
        };
        let invalid = |reason: String| DatasetError::InvalidSample {
            sample_id: sample.sample_id,
            reason,
        };
        check_labels(&entry).map_err(invalid)?;
        if sample.frames.len() != VIDEO_BYTES {
            return Err(invalid(format!("{} frame bytes, expected {VIDEO_BYTES}", sample.frames.len())));
        }
        if !self.ids.insert(sample.sample_id) {
            return Err(invalid("duplicate sample_id".into()));
        }
        let header = entry.header_bytes();
        self.out.write_all(&header)?;
        self.out.write_all(&sample.frames)?;
        self.hasher.update(header);
        self.hasher.update(&sample.frames);
        self.offset += RECORD_BYTES as u64;
        self.entries.push(entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn finish(mut self, meta: &DatasetMeta, data_file: &str) -> Result<(W, DatasetManifest), DatasetError> {
        self.out.flush()?;
        let manifest = DatasetManifest {
            format_version: FORMAT_VERSION.to_string(),
            master_seed: meta.master_seed,
            sample_count: self.entries.len(),
            frame_count: FRAME_COUNT,
            frame_size: FRAME_SIDE,
            split_name: meta.split_name.clone(),
            data_file: data_file.to_string(),
            data_sha256: hex::encode(self.hasher.finalize()),
            generation: meta.generation.clone(),
            samples: self.entries,
        };
        Ok((self.out, manifest))
    }
}

pub fn data_path(dir: &Path, split: &str) -> PathBuf {
    dir.join(format!("{split}.smnv"))
}

pub fn manifest_path(dir: &Path, split: &str) -> PathBuf {
    dir.join(format!("{split}.manifest.toml"))
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `<dir>/<split>.smnv` and `<dir>/<split>.manifest.toml`.
pub fn write_dataset<I>(dir: &Path, meta: &DatasetMeta, samples: I) -> Result<DatasetManifest, DatasetError>
where
    I: IntoIterator,
    I::Item: std::borrow::Borrow<LabeledVideo>,
{
    use std::borrow::Borrow;
    let data = data_path(dir, &meta.split_name);
    let file = File::create(&data).map_err(io_at(&data))?;
    let mut writer = DatasetWriter::new(BufWriter::new(file))?;
    for s in samples {
        writer.push(s.borrow())?;
    }
    if writer.is_empty() {
        return Err(DatasetError::Empty);
    }
    let file_name = data.file_name().unwrap().to_string_lossy().into_owned();
    let (_, manifest) = writer.finish(meta, &file_name)?;
    write_manifest(&manifest_path(dir, &meta.split_name), &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<(), DatasetError> {
    std::fs::write(path, manifest.to_toml()).map_err(io_at(path))
}

fn decode_record(
    manifest: &DatasetManifest,
    entry: &SampleEntry,
    record: &[u8],
) -> Result<LabeledVideo, DatasetError> {
    if record[..RECORD_HEADER_BYTES] != entry.header_bytes() {
        let id = u64::from_le_bytes(record[..8].try_into().unwrap());
        return Err(DatasetError::ManifestMismatch(format!(
            "record at offset {} (id {id}, labels {:?}) disagrees with manifest entry for sample {}",
            entry.byte_offset,
            &record[8..12],
            entry.sample_id
        )));
    }
    let params = entry.params(manifest.master_seed);
    Ok(LabeledVideo {
        sample_id: entry.sample_id,
        digit_label: entry.digit_label,
        params,
        trajectory: simulate_trajectory(&params),
        frames: record[RECORD_HEADER_BYTES..].to_vec(),
    })
}

fn check_layout(manifest: &DatasetManifest, data_len: u64) -> Result<(), DatasetError> {
    let expected = DATA_MAGIC.len() as u64 + manifest.sample_count as u64 * RECORD_BYTES as u64;
    for (i, e) in manifest.samples.iter().enumerate() {
        let want = DATA_MAGIC.len() as u64 + (i * RECORD_BYTES) as u64;
        if e.byte_offset != want {
            return Err(DatasetError::ManifestMismatch(format!(
                "sample {} offset {} but record {i} starts at {want}",
                e.sample_id, e.byte_offset
            )));
        }
    }
    if data_len == expected {
        return Ok(());
    }
    let body = data_len.saturating_sub(DATA_MAGIC.len() as u64);
    if body % RECORD_BYTES as u64 != 0 && data_len < expected {
        return Err(DatasetError::TruncatedFile {
            expected,
            found: data_len,
        });
    }
    Err(DatasetError::ManifestMismatch(format!(
        "manifest lists {} samples, data file holds {} records",
        manifest.sample_count,
        body as f64 / RECORD_BYTES as f64
    )))
}

/// Sequential decoder over any byte stream laid out as a data file.
pub struct RecordReader<'m, R: Read> {
    manifest: &'m DatasetManifest,
    input: R,
    next: usize,
    buf: Vec<u8>,
}

impl<'m, R: Read> RecordReader<'m, R> {
    pub fn new(manifest: &'m DatasetManifest, mut input: R) -> Result<Self, DatasetError> {
        let mut magic = [0u8; 5];
        input.read_exact(&mut magic).map_err(|_| DatasetError::BadMagic)?;
        if &magic != DATA_MAGIC {
            return Err(DatasetError::BadMagic);
        }
        Ok(RecordReader {
            manifest,
            input,
            next: 0,
            buf: vec![0u8; RECORD_BYTES],
        })
    }
}

impl<R: Read> Iterator for RecordReader<'_, R> {
    type Item = Result<LabeledVideo, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        let entry = self.manifest.samples.get(self.next)?;
        self.next += 1;
        if let Err(e) = self.input.read_exact(&mut self.buf) {
            return Some(Err(match e.kind() {
                std::io::ErrorKind::UnexpectedEof => DatasetError::TruncatedFile {
                    expected: entry.byte_offset + RECORD_BYTES as u64,
                    found: entry.byte_offset,
                },
                _ => e.into(),
            }));
        }
        Some(decode_record(self.manifest, entry, &self.buf))
    }
}

/// On-disk dataset opened through its manifest.
pub struct DatasetReader {
    manifest: DatasetManifest,
    data_path: PathBuf,
    by_id: HashMap<u64, usize>,
    file: Mutex<File>,
}

impl DatasetReader {
    pub fn open(manifest_path: &Path) -> Result<Self, DatasetError> {
        let manifest = DatasetManifest::load(manifest_path)?;
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let data_path = dir.join(&manifest.data_file);
        let mut file = File::open(&data_path).map_err(io_at(&data_path))?;
        let len = file.metadata()?.len();
        let mut magic = [0u8; 5];
        if file.read_exact(&mut magic).is_err() || &magic != DATA_MAGIC {
            return Err(DatasetError::BadMagic);
        }
        check_layout(&manifest, len)?;
        let by_id = manifest
            .samples
            .iter()
            .enumerate()
            .map(|(i, e)| (e.sample_id, i))
            .collect();
        Ok(DatasetReader {
            manifest,
            data_path,
            by_id,
            file: Mutex::new(file),
        })
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn data_path(&self) -> &Path {
        &self.data_path
    }

    pub fn len(&self) -> usize {
        self.manifest.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.samples.is_empty()
    }

    pub fn get(&self, sample_id: u64) -> Result<LabeledVideo, DatasetError> {
        let &i = self.by_id.get(&sample_id).ok_or(DatasetError::UnknownSample(sample_id))?;
        let entry = &self.manifest.samples[i];
        let mut buf = vec![0u8; RECORD_BYTES];
        {
            let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
            f.seek(SeekFrom::Start(entry.byte_offset))?;
            f.read_exact(&mut buf)?;
        }
        decode_record(&self.manifest, entry, &buf)
    }

    /// Streams every sample in file order through an independent file handle.
    pub fn iter(&self) -> Result<RecordReader<'_, BufReader<File>>, DatasetError> {
        let f = File::open(&self.data_path).map_err(io_at(&self.data_path))?;
        RecordReader::new(&self.manifest, BufReader::with_capacity(1 << 20, f))
    }

    /// Recomputes the data file SHA-256 and compares it against the manifest.
    pub fn verify_checksum(&self) -> Result<String, DatasetError> {
        let mut f = BufReader::new(File::open(&self.data_path).map_err(io_at(&self.data_path))?);
        let mut hasher = Sha256::new();
        std::io::copy(&mut f, &mut hasher)?;
        let sum = hex::encode(hasher.finalize());
        if sum != self.manifest.data_sha256 {
            return Err(DatasetError::ManifestMismatch(format!(
                "data checksum {sum} != manifest {}",
                self.manifest.data_sha256
            )));
        }
        Ok(sum)
    }
}

pub fn read_dataset(manifest_path: &Path) -> Result<DatasetReader, DatasetError> {
    DatasetReader::open(manifest_path)
}
