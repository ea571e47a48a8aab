//! On-disk attention dump: a directory holding `header.json` and
//! `tensors.bin`.
//!
//! `tensors.bin` is the raw little-endian `f32` payload of every tensor the
//! header lists, each at its declared byte offset:
//!
//! - `cross`, shape `[Q, H*W]`
//! - `self`, shape `[N, T, Q]`, C order (last index fastest)
//!
//! The writer always places `cross` at offset 0 followed by `self`. The
//! reader accepts any non-overlapping placement that covers the file exactly.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use attnground_core::tensor::FORMAT_VERSION;
use attnground_core::{AttentionDump, CrossAttention, PatchGrid, SelfAttentionSlice, TokenRecord};
use serde::{Deserialize, Serialize};

use crate::error::DumpError;

pub const HEADER_FILE: &str = "header.json";
pub const TENSORS_FILE: &str = "tensors.bin";
pub const DTYPE_F32LE: &str = "f32le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub dtype: String,
    pub shape: Vec<usize>,
    pub offset_bytes: u64,
    pub length_bytes: u64,
}

/// `header.json` contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub version: u32,
    pub q_count: usize,
    pub head_count: usize,
    pub token_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_total: Option<u64>,
    pub grid: PatchGrid,
    pub tokens: Vec<TokenRecord>,
    pub tensors: Vec<TensorEntry>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DumpError + '_ {
    move |source| {
        if source.kind() == io::ErrorKind::NotFound {
            DumpError::MissingFile(path.to_path_buf())
        } else {
            DumpError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

fn f32_bytes(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Header describing `dump` with the canonical tensor layout.
pub fn header_for(dump: &AttentionDump) -> DumpHeader {
    let cross_len = (dump.cross.values().len() * 4) as u64;
    let self_len = (dump.self_slices.values().len() * 4) as u64;
    DumpHeader {
        version: dump.version,
        q_count: dump.cross.q_count(),
        head_count: dump.self_slices.head_count(),
        token_count: dump.self_slices.token_count(),
        m_total: dump.m_total,
        grid: *dump.grid(),
        tokens: dump.tokens.clone(),
        tensors: vec![
            TensorEntry {
                name: "cross".into(),
                dtype: DTYPE_F32LE.into(),
                shape: vec![dump.cross.q_count(), dump.cross.cell_count()],
                offset_bytes: 0,
                length_bytes: cross_len,
            },
            TensorEntry {
                name: "self".into(),
                dtype: DTYPE_F32LE.into(),
                shape: vec![
                    dump.self_slices.head_count(),
                    dump.self_slices.token_count(),
                    dump.self_slices.q_count(),
                ],
                offset_bytes: cross_len,
                length_bytes: self_len,
            },
        ],
        source: dump.source.clone(),
    }
}

/// Writes `dump` into directory `dir`, creating it if needed.
pub fn write_dump(dump: &AttentionDump, dir: impl AsRef<Path>) -> Result<(), DumpError> {
    let dir = dir.as_ref();
    let wrap = |path: PathBuf| {
        move |source| DumpError::Io {
            path: path.clone(),
            source,
        }
    };
    fs::create_dir_all(dir).map_err(wrap(dir.to_path_buf()))?;

    let mut payload = f32_bytes(dump.cross.values());
    payload.extend(f32_bytes(dump.self_slices.values()));
    let bin = dir.join(TENSORS_FILE);
    fs::write(&bin, payload).map_err(wrap(bin.clone()))?;

    let header = header_for(dump);
    let mut json = serde_json::to_string_pretty(&header).expect("header serializes");
    json.push('\n');
    let head = dir.join(HEADER_FILE);
    let mut f = fs::File::create(&head).map_err(wrap(head.clone()))?;
    f.write_all(json.as_bytes()).map_err(wrap(head.clone()))?;
    Ok(())
}

fn tensor<'a>(header: &'a DumpHeader, name: &str) -> Result<&'a TensorEntry, DumpError> {
    let mut found = header.tensors.iter().filter(|t| t.name == name);
    let entry = found
        .next()
        .ok_or_else(|| DumpError::MalformedHeader(format!("no {name:?} tensor declared")))?;
    if found.next().is_some() {
        return Err(DumpError::MalformedHeader(format!("{name:?} declared twice")));
    }
    Ok(entry)
}

fn check_entry(entry: &TensorEntry, expected_shape: &[usize]) -> Result<(), DumpError> {
    if entry.dtype != DTYPE_F32LE {
        return Err(DumpError::MalformedHeader(format!(
            "tensor {:?} has dtype {:?}, only {DTYPE_F32LE:?} is supported",
            entry.name, entry.dtype
        )));
    }
    if entry.shape != expected_shape {
        return Err(DumpError::ShapeMismatch(format!(
            "tensor {:?} has shape {:?}, header implies {:?}",
            entry.name, entry.shape, expected_shape
        )));
    }
    let bytes = expected_shape
        .iter()
        .try_fold(4u64, |acc, &d| acc.checked_mul(d as u64))
        .ok_or_else(|| DumpError::MalformedHeader(format!("tensor {:?} is too large", entry.name)))?;
    if entry.length_bytes != bytes {
        return Err(DumpError::ShapeMismatch(format!(
            "tensor {:?} declares {} bytes for shape {:?} ({bytes} bytes of f32)",
            entry.name, entry.length_bytes, entry.shape
        )));
    }
    Ok(())
}

fn decode(bytes: &[u8], entry: &TensorEntry) -> Vec<f32> {
    let start = entry.offset_bytes as usize;
    let end = start + entry.length_bytes as usize;
    bytes[start..end]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

/// Parses and validates a dump already loaded into memory.
pub fn parse_dump(header_json: &[u8], payload: &[u8]) -> Result<AttentionDump, DumpError> {
    let header: DumpHeader =
        serde_json::from_slice(header_json).map_err(|e| DumpError::MalformedHeader(e.to_string()))?;
    if header.version != FORMAT_VERSION {
        return Err(DumpError::MalformedHeader(format!(
            "unsupported version {} (expected {FORMAT_VERSION})",
            header.version
        )));
    }
    if let Some(t) = header.tensors.iter().find(|t| t.name != "cross" && t.name != "self") {
        return Err(DumpError::MalformedHeader(format!("unknown tensor {:?}", t.name)));
    }
    header.grid.check()?;
    if header.token_count != header.tokens.len() {
        return Err(DumpError::ShapeMismatch(format!(
            "token_count {} but {} token records",
            header.token_count,
            header.tokens.len()
        )));
    }

    let cross = tensor(&header, "cross")?;
    let slice = tensor(&header, "self")?;
    check_entry(cross, &[header.q_count, header.grid.cell_count()])?;
    check_entry(slice, &[header.head_count, header.token_count, header.q_count])?;

    let span = |t: &TensorEntry| {
        t.offset_bytes
            .checked_add(t.length_bytes)
            .map(|end| (t.offset_bytes, end))
            .ok_or_else(|| DumpError::MalformedHeader(format!("tensor {:?} offset overflows", t.name)))
    };
    let mut spans = [span(cross)?, span(slice)?];
    spans.sort_unstable();
    if spans[0].1 > spans[1].0 {
        return Err(DumpError::MalformedHeader("tensor payloads overlap".into()));
    }
    let covered = cross.length_bytes + slice.length_bytes;
    let end = spans[1].1;
    if end > payload.len() as u64 {
        return Err(DumpError::ShapeMismatch(format!(
            "{TENSORS_FILE} has {} bytes but tensors extend to {end}",
            payload.len()
        )));
    }
    if covered != payload.len() as u64 {
        return Err(DumpError::ShapeMismatch(format!(
            "{TENSORS_FILE} has {} bytes, tensors cover {covered}",
            payload.len()
        )));
    }

    let cross = CrossAttention::new(header.grid, header.q_count, decode(payload, cross))?;
    let slice = SelfAttentionSlice::new(header.head_count, header.token_count, header.q_count, decode(payload, slice))?;
    let mut dump = AttentionDump::new(cross, slice, header.tokens, header.m_total, header.source)?;
    dump.version = header.version;
    Ok(dump.into_validated()?)
}

/// Reads and validates the dump in directory `dir`.
pub fn read_dump(dir: impl AsRef<Path>) -> Result<AttentionDump, DumpError> {
    let dir = dir.as_ref();
    let head = dir.join(HEADER_FILE);
    let bin = dir.join(TENSORS_FILE);
    let header_json = fs::read(&head).map_err(io_err(&head))?;
    let payload = fs::read(&bin).map_err(io_err(&bin))?;
    parse_dump(&header_json, &payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use attnground_core::synth::{random_instance, InstanceLimits};

    fn sample() -> AttentionDump {
        random_instance(5, &InstanceLimits::default())
    }

    fn encoded(d: &AttentionDump) -> (DumpHeader, Vec<u8>) {
        let mut payload = f32_bytes(d.cross.values());
        payload.extend(f32_bytes(d.self_slices.values()));
        (header_for(d), payload)
    }

    fn parse(h: &DumpHeader, p: &[u8]) -> Result<AttentionDump, DumpError> {
        parse_dump(&serde_json::to_vec(h).unwrap(), p)
    }

    #[test]
    fn small_shapes_round_trip() {
        // Q=2, N=2, T=1, 2x2 grid: 8 + 4 f32 values
        let grid = PatchGrid::new(2, 2, 14, 28, 28).unwrap();
        let cross = CrossAttention::new(grid, 2, vec![0.25; 8]).unwrap();
        let slice = SelfAttentionSlice::new(2, 1, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let tokens = vec![TokenRecord {
            index: 0,
            text: "hi".into(),
            char_start: 0,
            char_end: 2,
        }];
        let d = AttentionDump::new(cross, slice, tokens, None, String::new()).unwrap();
        let (h, p) = encoded(&d);
        assert_eq!(p.len(), 48);
        assert_eq!(parse(&h, &p).unwrap(), d);
    }

    #[test]
    fn payload_is_little_endian_in_order() {
        let d = sample();
        let (_, p) = encoded(&d);
        let first = f32::from_le_bytes(p[0..4].try_into().unwrap());
        assert_eq!(first, d.cross.values()[0]);
        let off = d.cross.values().len() * 4;
        let s0 = f32::from_le_bytes(p[off..off + 4].try_into().unwrap());
        assert_eq!(s0, d.self_slices.values()[0]);
    }

    #[test]
    fn rejects_wrong_version_dtype_and_names() {
        let d = sample();
        let (h, p) = encoded(&d);
        let mut v = h.clone();
        v.version = 2;
        assert!(matches!(parse(&v, &p), Err(DumpError::MalformedHeader(_))));
        let mut t = h.clone();
        t.tensors[0].dtype = "f16".into();
        assert!(matches!(parse(&t, &p), Err(DumpError::MalformedHeader(_))));
        let mut n = h.clone();
        n.tensors[1].name = "cross".into();
        assert!(matches!(parse(&n, &p), Err(DumpError::MalformedHeader(_))));
        let mut extra = h;
        extra.tensors.push(TensorEntry {
            name: "full".into(),
            dtype: DTYPE_F32LE.into(),
            shape: vec![1],
            offset_bytes: 0,
            length_bytes: 4,
        });
        assert!(matches!(parse(&extra, &p), Err(DumpError::MalformedHeader(_))));
        assert!(matches!(parse_dump(b"{not json", &p), Err(DumpError::MalformedHeader(_))));
    }

    #[test]
    fn rejects_size_disagreements() {
        let d = sample();
        let (h, p) = encoded(&d);
        assert!(matches!(parse(&h, &p[..p.len() - 4]), Err(DumpError::ShapeMismatch(_))));
        let mut longer = p.clone();
        longer.extend([0u8; 4]);
        assert!(matches!(parse(&h, &longer), Err(DumpError::ShapeMismatch(_))));
        let mut q = h.clone();
        q.q_count += 1;
        assert!(matches!(parse(&q, &p), Err(DumpError::ShapeMismatch(_))));
        let mut t = h;
        t.token_count += 1;
        assert!(matches!(parse(&t, &p), Err(DumpError::ShapeMismatch(_))));
    }

    #[test]
    fn overlapping_tensors_rejected() {
        let d = sample();
        let (mut h, p) = encoded(&d);
        h.tensors[1].offset_bytes = 4;
        assert!(matches!(parse(&h, &p), Err(DumpError::MalformedHeader(_))));
    }

    #[test]
    fn swapped_placement_is_accepted() {
        let d = sample();
        let mut h = header_for(&d);
        let self_len = h.tensors[1].length_bytes;
        h.tensors[1].offset_bytes = 0;
        h.tensors[0].offset_bytes = self_len;
        let mut p = f32_bytes(d.self_slices.values());
        p.extend(f32_bytes(d.cross.values()));
        assert_eq!(parse(&h, &p).unwrap(), d);
    }

    #[test]
    fn row_sum_violation_surfaces() {
        let grid = PatchGrid::new(2, 2, 14, 28, 28).unwrap();
        let cross = CrossAttention::new(grid, 1, vec![0.6, 0.6, 0.0, 0.0]).unwrap();
        let slice = SelfAttentionSlice::new(1, 1, 1, vec![0.5]).unwrap();
        let tokens = vec![TokenRecord {
            index: 0,
            text: "a".into(),
            char_start: 0,
            char_end: 1,
        }];
        let d = AttentionDump::new(cross, slice, tokens, None, String::new()).unwrap();
        let (h, p) = encoded(&d);
        assert!(matches!(
            parse(&h, &p),
            Err(DumpError::InvariantViolation { tensor: "cross", index: 0, .. })
        ));
    }

    #[test]
    fn missing_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_dump(dir.path()), Err(DumpError::MissingFile(p)) if p.ends_with(HEADER_FILE)));
        write_dump(&sample(), dir.path()).unwrap();
        fs::remove_file(dir.path().join(TENSORS_FILE)).unwrap();
        assert!(matches!(read_dump(dir.path()), Err(DumpError::MissingFile(p)) if p.ends_with(TENSORS_FILE)));
    }
}
