//! On-disk formats.
//!
//! | file            | layout                                                     |
//! |-----------------|------------------------------------------------------------|
//! | id map          | TSV `external_id  internal_id`                             |
//! | pairs           | TSV `i  j  y`, `y ∈ {+1, -1}`, external ids                |
//! | labels          | TSV `node_id  class_id`                                    |
//! | embedding (TSV) | external id followed by `k` values                         |
//! | embedding (bin) | `FUSE`, u16 version, u64 n, u32 k, u8 precision, values    |
//! | trace           | CSV `iteration,J`                                          |
//! | probe weights   | one value per line, `w_1 .. w_2k, b`                       |
//!
//! Text readers skip blank lines and lines starting with `#`. Binary
//! integers and values are little-endian; precision `0` is `f64`, `1` is
//! `f32`, values are row-major.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::IdMap;
use crate::optimizer::{EmbeddingMatrix, Precision};
use crate::pairs::{NodeLabels, Pair, PairSet, Sign};

pub const EMBEDDING_MAGIC: &[u8; 4] = b"FUSE";
pub const EMBEDDING_VERSION: u16 = 1;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Calls `f(line_number, fields)` for every data line.
fn for_each_record(
    path: &Path,
    mut f: impl FnMut(usize, Vec<&str>) -> std::result::Result<(), String>,
) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        f(idx + 1, trimmed.split_whitespace().collect()).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        })?;
    }
    Ok(())
}

fn field<T: FromStr>(fields: &[&str], idx: usize, what: &str) -> std::result::Result<T, String> {
    let raw = fields
        .get(idx)
        .ok_or_else(|| format!("missing column {what}"))?;
    raw.parse()
        .map_err(|_| format!("invalid {what} {raw:?}"))
}

pub fn write_id_map(path: impl AsRef<Path>, ids: &IdMap) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = String::from("# external_id\tinternal_id\n");
    for (internal, external) in ids.externals().iter().enumerate() {
        body.push_str(&format!("{external}\t{internal}\n"));
    }
    w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

pub fn read_id_map(path: impl AsRef<Path>) -> Result<IdMap> {
    let path = path.as_ref();
    let mut rows: Vec<(usize, u64)> = Vec::new();
    for_each_record(path, |_, f| {
        rows.push((field(&f, 1, "internal_id")?, field(&f, 0, "external_id")?));
        Ok(())
    })?;
    rows.sort_unstable();
    if rows.iter().enumerate().any(|(i, &(r, _))| i != r) {
        return Err(Error::invalid(format!(
            "{}: internal ids are not 0..n",
            path.display()
        )));
    }
    IdMap::from_rows(rows.into_iter().map(|(_, e)| e).collect())
}

/// Writes pairs with external ids, one direction per pair.
pub fn write_pairs(path: impl AsRef<Path>, pairs: &PairSet, ids: &IdMap) -> Result<()> {
    write_pairs_with_header(path, pairs, ids, &[])
}

/// As [`write_pairs`], with extra `# `-prefixed comment lines first.
pub fn write_pairs_with_header(
    path: impl AsRef<Path>,
    pairs: &PairSet,
    ids: &IdMap,
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body: String = comments.iter().map(|c| format!("# {c}\n")).collect();
    body.push_str("# i\tj\ty\n");
    for p in pairs.pairs() {
        let y = match p.sign {
            Sign::Positive => "+1",
            Sign::Negative => "-1",
        };
        body.push_str(&format!(
            "{}\t{}\t{}\n",
            ids.external(p.i as usize),
            ids.external(p.j as usize),
            y
        ));
    }
    w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

/// Reads a pairs file, translating external ids through `ids`. Repeated
/// pairs with equal sign collapse (count returned); conflicting signs are
/// an error.
pub fn read_pairs(path: impl AsRef<Path>, ids: &IdMap) -> Result<(PairSet, usize)> {
    let path = path.as_ref();
    let mut pairs = Vec::new();
    for_each_record(path, |_, f| {
        let lookup = |idx, what| -> std::result::Result<usize, String> {
            let ext: u64 = field(&f, idx, what)?;
            ids.internal(ext)
                .ok_or_else(|| format!("node id {ext} is not in the graph"))
        };
        let i = lookup(0, "i")?;
        let j = lookup(1, "j")?;
        let y: i64 = field(&f, 2, "y")?;
        let sign = Sign::from_i64(y).ok_or_else(|| format!("label y must be +1 or -1, got {y}"))?;
        pairs.push(Pair::new(i, j, sign));
        Ok(())
    })?;
    PairSet::collapse(ids.len(), pairs)
}

/// Labels file with arbitrary integer node and class ids. Nodes are
/// indexed in ascending id order; class ids are remapped to `0..C` in
/// ascending order.
pub fn read_labels(path: impl AsRef<Path>) -> Result<(NodeLabels, IdMap)> {
    let path = path.as_ref();
    let mut rows: Vec<(u64, i64, usize)> = Vec::new();
    for_each_record(path, |line, f| {
        rows.push((field(&f, 0, "node_id")?, field(&f, 1, "class_id")?, line));
        Ok(())
    })?;
    if rows.is_empty() {
        return Err(Error::invalid(format!("{}: no labels", path.display())));
    }
    rows.sort_unstable_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: w[1].2,
            message: format!("node {} labelled twice", w[1].0),
        });
    }
    let mut classes: Vec<i64> = rows.iter().map(|r| r.1).collect();
    classes.sort_unstable();
    classes.dedup();
    let labels = rows
        .iter()
        .map(|r| classes.binary_search(&r.1).unwrap())
        .collect();
    let ids = IdMap::from_rows(rows.iter().map(|r| r.0).collect())?;
    Ok((NodeLabels::new(labels)?, ids))
}

pub fn write_labels(path: impl AsRef<Path>, labels: &NodeLabels, ids: &IdMap) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = String::from("# node_id\tclass_id\n");
    for (node, class) in labels.labels().iter().enumerate() {
        body.push_str(&format!("{}\t{}\n", ids.external(node), class));
    }
    w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

fn format_value(v: f64, precision: Precision) -> String {
    match precision {
        Precision::F64 => v.to_string(),
        Precision::F32 => (v as f32).to_string(),
    }
}

pub fn write_embedding_tsv(path: impl AsRef<Path>, s: &EmbeddingMatrix, ids: &IdMap) -> Result<()> {
    write_embedding_tsv_with_header(path, s, ids, &[])
}

/// As [`write_embedding_tsv`], preceded by `# `-prefixed comment lines.
pub fn write_embedding_tsv_with_header(
    path: impl AsRef<Path>,
    s: &EmbeddingMatrix,
    ids: &IdMap,
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    if ids.len() != s.n() {
        return Err(Error::shape(format!("{} ids", s.n()), format!("{} ids", ids.len())));
    }
    let mut w = create(path)?;
    for c in comments {
        writeln!(w, "# {c}").map_err(|e| Error::io(path, e))?;
    }
    for (r, row) in s.view().rows().into_iter().enumerate() {
        let mut line = ids.external(r).to_string();
        for &v in row {
            line.push('\t');
            line.push_str(&format_value(v, s.precision()));
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

pub fn read_embedding_tsv(path: impl AsRef<Path>) -> Result<(EmbeddingMatrix, IdMap)> {
    let path = path.as_ref();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut k = None;
    for_each_record(path, |_, f| {
        let width = f.len() - 1;
        if width == 0 {
            return Err("row has no values".into());
        }
        match k {
            None => k = Some(width),
            Some(k) if k != width => return Err(format!("row has {width} values, expected {k}")),
            _ => {}
        }
        ids.push(field::<u64>(&f, 0, "node id")?);
        for idx in 1..f.len() {
            values.push(field::<f64>(&f, idx, "value")?);
        }
        Ok(())
    })?;
    let k = k.ok_or_else(|| Error::invalid(format!("{}: empty embedding", path.display())))?;
    let data = Array2::from_shape_vec((ids.len(), k), values).expect("row widths checked");
    Ok((EmbeddingMatrix::new(data, Precision::F64)?, IdMap::from_rows(ids)?))
}

pub fn write_embedding_binary(path: impl AsRef<Path>, s: &EmbeddingMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut bytes = Vec::with_capacity(19 + s.n() * s.k() * 8);
    bytes.extend_from_slice(EMBEDDING_MAGIC);
    bytes.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(s.n() as u64).to_le_bytes());
    bytes.extend_from_slice(&(s.k() as u32).to_le_bytes());
    match s.precision() {
        Precision::F64 => {
            bytes.push(0);
            for &v in s.view().iter() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        Precision::F32 => {
            bytes.push(1);
            for &v in s.view().iter() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

pub fn read_embedding_binary(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_embedding(&bytes)
}

pub fn decode_embedding(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    const HEADER: usize = 4 + 2 + 8 + 4 + 1;
    if bytes.len() < HEADER || &bytes[..4] != EMBEDDING_MAGIC {
        return Err(Error::BadFormat("missing FUSE header".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != EMBEDDING_VERSION {
        return Err(Error::BadFormat(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[6..14].try_into().unwrap()) as usize;
    let k = u32::from_le_bytes(bytes[14..18].try_into().unwrap()) as usize;
    let (precision, width) = match bytes[18] {
        0 => (Precision::F64, 8),
        1 => (Precision::F32, 4),
        other => return Err(Error::BadFormat(format!("unknown precision flag {other}"))),
    };
    let body = &bytes[HEADER..];
    let expected = n
        .checked_mul(k)
        .and_then(|c| c.checked_mul(width))
        .ok_or_else(|| Error::BadFormat("shape overflows".into()))?;
    if body.len() != expected {
        return Err(Error::BadFormat(format!(
            "expected {expected} payload bytes for {n}x{k}, found {}",
            body.len()
        )));
    }
    let values: Vec<f64> = match precision {
        Precision::F64 => body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Precision::F32 => body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    let data = Array2::from_shape_vec((n, k), values)
        .map_err(|e| Error::BadFormat(e.to_string()))?;
    EmbeddingMatrix::new(data, precision)
}

/// Reads either embedding format, detected by the `FUSE` magic. Binary
/// files carry no ids, so rows map to `0..n`.
pub fn read_embedding(path: impl AsRef<Path>) -> Result<(EmbeddingMatrix, Option<IdMap>)> {
    let path = path.as_ref();
    let mut head = [0u8; 4];
    let is_binary = File::open(path)
        .and_then(|mut f| f.read(&mut head))
        .map_err(|e| Error::io(path, e))?
        == 4
        && &head == EMBEDDING_MAGIC;
    if is_binary {
        Ok((read_embedding_binary(path)?, None))
    } else {
        let (s, ids) = read_embedding_tsv(path)?;
        Ok((s, Some(ids)))
    }
}

pub fn write_trace(path: impl AsRef<Path>, trace: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = String::from("iteration,J\n");
    for (t, j) in trace.iter().enumerate() {
        body.push_str(&format!("{t},{j}\n"));
    }
    w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

pub fn write_vector(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let body: String = values.iter().map(|v| format!("{v}\n")).collect();
    w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for_each_record(path, |_, f| {
        out.push(field(&f, 0, "value")?);
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::init_embedding;

    #[test]
    fn binary_header_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.bin");
        let s = init_embedding(3, 2, 1).unwrap();
        write_embedding_binary(&path, &s).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"FUSE");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u64::from_le_bytes(bytes[6..14].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[14..18].try_into().unwrap()), 2);
        assert_eq!(bytes[18], 0);
        assert_eq!(bytes.len(), 19 + 3 * 2 * 8);
        assert_eq!(read_embedding_binary(&path).unwrap(), s);
        assert!(decode_embedding(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_embedding(b"NOPE").is_err());
    }

    #[test]
    fn f32_binary_uses_four_byte_values() {
        let s = init_embedding(4, 3, 2).unwrap();
        let s32 = EmbeddingMatrix::new(s.as_array().mapv(|v| v as f32 as f64), Precision::F32).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e32.bin");
        write_embedding_binary(&path, &s32).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes[18], 1);
        assert_eq!(bytes.len(), 19 + 4 * 3 * 4);
        assert_eq!(read_embedding_binary(&path).unwrap(), s32);
    }

    #[test]
    fn pairs_file_uses_external_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        let ids = IdMap::from_external(vec![10, 20, 30]);
        let set = PairSet::new(3, vec![Pair::new(2, 0, Sign::Negative), Pair::new(0, 1, Sign::Positive)]).unwrap();
        write_pairs(&path, &set, &ids).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# i\tj\ty\n30\t10\t-1\n10\t20\t+1\n");
        let (back, collapsed) = read_pairs(&path, &ids).unwrap();
        assert_eq!(back.pairs(), set.pairs());
        assert_eq!(collapsed, 0);

        std::fs::write(&path, "10 20 1\n10 99 1\n").unwrap();
        assert!(matches!(read_pairs(&path, &ids), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&path, "10 20 0\n").unwrap();
        assert!(matches!(read_pairs(&path, &ids), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn labels_are_remapped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.tsv");
        std::fs::write(&path, "# node class\n5 7\n1 -3\n3 7\n").unwrap();
        let (labels, ids) = read_labels(&path).unwrap();
        assert_eq!(ids.externals(), &[1, 3, 5]);
        assert_eq!(labels.labels(), &[0, 1, 1]);
        std::fs::write(&path, "1 0\nfoo 1\n").unwrap();
        assert!(matches!(read_labels(&path), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&path, "1 0\n1 1\n").unwrap();
        assert!(matches!(read_labels(&path), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn tsv_embedding_and_id_map() {
        let dir = tempfile::tempdir().unwrap();
        let s = init_embedding(3, 2, 7).unwrap();
        let ids = IdMap::from_external(vec![4, 8, 15]);
        let path = dir.path().join("e.tsv");
        write_embedding_tsv(&path, &s, &ids).unwrap();
        let (back, back_ids) = read_embedding(&path).unwrap();
        assert_eq!(back, s);
        assert_eq!(back_ids.unwrap(), ids);

        let map = dir.path().join("ids.tsv");
        write_id_map(&map, &ids).unwrap();
        assert_eq!(read_id_map(&map).unwrap(), ids);
    }

    #[test]
    fn trace_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace(&path, &[1.5, 2.0]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "iteration,J\n0,1.5\n1,2\n");
    }
}
