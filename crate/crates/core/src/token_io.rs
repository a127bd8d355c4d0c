//! Token stream files and latent ingestion.
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "Q2D2"
//! 4       2     version (1)
//! 6       2     d, latent dimension (even)
//! 8       P     tiling tag per pair (0 = rect, 1 = hex, 2 = rhombic), P = d / 2
//! 8+P     d     levels per dimension
//! 8+P+d   4     tokens per second (0 = unspecified)
//! 12+P+d  8     frame count
//! 20+P+d  32    SHA-256 of every preceding header byte
//! 52+P+d  ...   payload: per frame, P pair codes, pair j in ceil(ceil(log2 L_j) / 8) bytes
//! ```
//!
//! `L_j` is the realized point count of pair `j`'s grid. Codes are stored per pair rather
//! than as a composed global code, so each pair is independently decodable.

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use crate::codebook::CodebookLayout;
use crate::error::{Error, Result};
use crate::grid::TilingKind;
use crate::quantizer::{LatentVector, QuantizerConfig};

pub const MAGIC: [u8; 4] = *b"Q2D2";
pub const FORMAT_VERSION: u16 = 1;
pub const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct TokenStreamHeader {
    pub version: u16,
    pub tilings: Vec<TilingKind>,
    pub levels: Vec<usize>,
    pub tokens_per_second: u32,
    pub frame_count: u64,
}

impl TokenStreamHeader {
    pub fn new(config: &QuantizerConfig, tokens_per_second: u32, frame_count: u64) -> Self {
        TokenStreamHeader {
            version: FORMAT_VERSION,
            tilings: config.tilings().to_vec(),
            levels: config.levels().to_vec(),
            tokens_per_second,
            frame_count,
        }
    }

    pub fn config(&self) -> Result<QuantizerConfig> {
        QuantizerConfig::new(self.levels.clone(), self.tilings.clone())
    }

    /// Header bytes up to, not including, the digest.
    fn fields(&self) -> Result<Vec<u8>> {
        let d = u16::try_from(self.levels.len()).map_err(|_| Error::InvalidDimension(self.levels.len()))?;
        let mut out = Vec::with_capacity(20 + self.tilings.len() + self.levels.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&d.to_le_bytes());
        out.extend(self.tilings.iter().map(|t| t.tag()));
        for &l in &self.levels {
            out.push(u8::try_from(l).map_err(|_| Error::InvalidLevels(l))?);
        }
        out.extend_from_slice(&self.tokens_per_second.to_le_bytes());
        out.extend_from_slice(&self.frame_count.to_le_bytes());
        Ok(out)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.config()?;
        let mut out = self.fields()?;
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }
}

/// Bytes used on the wire for a code in `0..pair_size`.
pub fn code_width(pair_size: u64) -> usize {
    let bits = 64 - (pair_size.max(2) - 1).leading_zeros() as usize;
    bits.div_ceil(8)
}

/// Writes header and payload; returns the number of bytes written.
pub fn write_stream<W: Write>(header: &TokenStreamHeader, frames: &[Vec<u32>], mut sink: W) -> Result<u64> {
    if header.frame_count != frames.len() as u64 {
        return Err(Error::InvalidStream(format!(
            "header announces {} frames, got {}",
            header.frame_count,
            frames.len()
        )));
    }
    let layout = CodebookLayout::from_config(&header.config()?)?;
    let widths: Vec<usize> = layout.pair_sizes().iter().map(|&s| code_width(s)).collect();
    let mut buf = header.to_bytes()?;
    buf.reserve(frames.len() * widths.iter().sum::<usize>());
    for frame in frames {
        layout.check_pair_codes(frame)?;
        for (&code, &w) in frame.iter().zip(&widths) {
            buf.extend_from_slice(&code.to_le_bytes()[..w]);
        }
    }
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(buf.len() as u64)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(format_error(
                self.bytes.len(),
                format!("truncated {what}: need {n} bytes, {} left", self.bytes.len() - self.pos),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
}

fn format_error(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format { offset: offset as u64, reason: reason.into() }
}

pub fn read_stream<R: Read>(mut source: R) -> Result<(TokenStreamHeader, Vec<Vec<u32>>)> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    parse_stream(&bytes)
}

pub fn parse_stream(bytes: &[u8]) -> Result<(TokenStreamHeader, Vec<Vec<u32>>)> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(format_error(0, "bad magic"));
    }
    let version = cur.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(format_error(4, format!("unsupported version {version}")));
    }
    let d = cur.u16("dimension")? as usize;
    if d == 0 || !d.is_multiple_of(2) {
        return Err(format_error(6, format!("dimension {d} is not a positive even number")));
    }
    let tiling_offset = cur.pos;
    let tilings = cur
        .take(d / 2, "tilings")?
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            TilingKind::from_tag(t).ok_or_else(|| format_error(tiling_offset + j, format!("unknown tiling tag {t}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let levels_offset = cur.pos;
    let levels: Vec<usize> = cur.take(d, "levels")?.iter().map(|&l| l as usize).collect();
    let tokens_per_second = u32::from_le_bytes(cur.take(4, "tokens per second")?.try_into().unwrap());
    let frame_count = u64::from_le_bytes(cur.take(8, "frame count")?.try_into().unwrap());
    let fields_end = cur.pos;
    let digest_offset = cur.pos;
    let stored = cur.take(DIGEST_LEN, "digest")?;
    if Sha256::digest(&bytes[..fields_end]).as_slice() != stored {
        return Err(format_error(digest_offset, "config digest mismatch"));
    }
    let header = TokenStreamHeader { version, tilings, levels, tokens_per_second, frame_count };
    let config = header.config().map_err(|e| format_error(levels_offset, format!("invalid config: {e}")))?;
    let layout = CodebookLayout::from_config(&config)?;
    let widths: Vec<usize> = layout.pair_sizes().iter().map(|&s| code_width(s)).collect();
    let frame_bytes: usize = widths.iter().sum();
    let payload = bytes.len() - cur.pos;
    let expected = usize::try_from(frame_count)
        .ok()
        .and_then(|n| n.checked_mul(frame_bytes))
        .ok_or_else(|| format_error(fields_end - 8, format!("frame count {frame_count} too large")))?;
    if payload < expected {
        return Err(format_error(
            bytes.len(),
            format!("truncated payload: {expected} bytes expected, {payload} present"),
        ));
    }
    if payload > expected {
        return Err(format_error(cur.pos + expected, format!("{} trailing bytes", payload - expected)));
    }
    let mut frames = Vec::with_capacity(frame_count as usize);
    for _ in 0..frame_count {
        let mut codes = Vec::with_capacity(widths.len());
        for (j, (&w, &size)) in widths.iter().zip(layout.pair_sizes()).enumerate() {
            let at = cur.pos;
            let mut word = [0u8; 4];
            word[..w].copy_from_slice(cur.take(w, "code")?);
            let code = u32::from_le_bytes(word);
            if code as u64 >= size {
                return Err(format_error(at, format!("pair {j} code {code} out of range {size}")));
            }
            codes.push(code);
        }
        frames.push(codes);
    }
    Ok((header, frames))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentFormat {
    /// Comma-separated rows of `d` numbers, no header line.
    Csv,
    /// Row-major little-endian `f32`, `d` values per row.
    RawF32,
}

/// Reads a latent stream. With `apply_tanh` every value is passed through `tanh` first;
/// without it values must already lie in `[-1, 1]`.
pub fn ingest_latents<R: Read>(
    source: R,
    format: LatentFormat,
    d: usize,
    apply_tanh: bool,
) -> Result<Vec<LatentVector>> {
    if d == 0 || !d.is_multiple_of(2) {
        return Err(Error::InvalidDimension(d));
    }
    let rows = match format {
        LatentFormat::Csv => read_csv_rows(source, d)?,
        LatentFormat::RawF32 => read_raw_rows(source, d)?,
    };
    rows.into_iter().enumerate().map(|(row, values)| finish_row(row, values, apply_tanh)).collect()
}

fn read_csv_rows<R: Read>(source: R, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(source);
    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Ingest { row, reason: e.to_string() })?;
        if record.len() != d {
            return Err(Error::Ingest { row, reason: format!("expected {d} values, found {}", record.len()) });
        }
        let values = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Ingest { row, reason: format!("{f:?}: {e}") }))
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
    }
    Ok(rows)
}

fn read_raw_rows<R: Read>(mut source: R, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let row_bytes = 4 * d;
    if bytes.len() % row_bytes != 0 {
        return Err(Error::Ingest {
            row: bytes.len() / row_bytes,
            reason: format!("incomplete row: {} of {row_bytes} bytes", bytes.len() % row_bytes),
        });
    }
    Ok(bytes
        .chunks_exact(row_bytes)
        .map(|r| r.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64).collect())
        .collect())
}

fn finish_row(row: usize, mut values: Vec<f64>, apply_tanh: bool) -> Result<LatentVector> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Ingest { row, reason: format!("non-finite value {v}") });
    }
    if apply_tanh {
        values.iter_mut().for_each(|v| *v = v.tanh());
    }
    LatentVector::new(values).map_err(|e| Error::Ingest { row, reason: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> QuantizerConfig {
        QuantizerConfig::new(vec![7, 7, 3, 2], vec![TilingKind::Rhombic, TilingKind::Rectangle]).unwrap()
    }

    #[test]
    fn code_widths() {
        assert_eq!(code_width(2), 1);
        assert_eq!(code_width(256), 1);
        assert_eq!(code_width(257), 2);
        assert_eq!(code_width(98), 1);
        assert_eq!(code_width(65536), 2);
        assert_eq!(code_width(130050), 3);
    }

    #[test]
    fn header_layout() {
        let h = TokenStreamHeader::new(&config(), 75, 0);
        let bytes = h.to_bytes().unwrap();
        assert_eq!(bytes.len(), 20 + 2 + 4 + 32);
        assert_eq!(&bytes[..8], b"Q2D2\x01\x00\x04\x00");
        assert_eq!(&bytes[8..14], &[2, 0, 7, 7, 3, 2]);
        assert_eq!(&bytes[14..18], &75u32.to_le_bytes());
    }

    #[test]
    fn empty_stream_is_header_only() {
        let h = TokenStreamHeader::new(&config(), 0, 0);
        let mut buf = Vec::new();
        let n = write_stream(&h, &[], &mut buf).unwrap();
        assert_eq!(n as usize, buf.len());
        assert_eq!(buf, h.to_bytes().unwrap());
        assert_eq!(read_stream(buf.as_slice()).unwrap(), (h, vec![]));
    }

    #[test]
    fn round_trip_and_payload_width() {
        let frames = vec![vec![97, 5], vec![0, 0], vec![42, 3]];
        let h = TokenStreamHeader::new(&config(), 50, 3);
        let mut buf = Vec::new();
        write_stream(&h, &frames, &mut buf).unwrap();
        assert_eq!(buf.len(), h.to_bytes().unwrap().len() + 3 * 2);
        assert_eq!(read_stream(buf.as_slice()).unwrap(), (h, frames));
    }

    #[test]
    fn corruption_is_reported_with_offsets() {
        let h = TokenStreamHeader::new(&config(), 50, 1);
        let mut good = Vec::new();
        write_stream(&h, &[vec![1, 2]], &mut good).unwrap();
        let header_len = good.len() - 2;

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(parse_stream(&bad), Err(Error::Format { offset: 0, .. })));

        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(parse_stream(&bad), Err(Error::Format { offset: 4, .. })));

        for i in 8..header_len {
            let mut bad = good.clone();
            bad[i] ^= 0x01;
            assert!(parse_stream(&bad).is_err(), "flip at {i} accepted");
        }
        let mut bad = good.clone();
        bad[header_len - 1] ^= 0x80;
        assert!(matches!(parse_stream(&bad), Err(Error::Format { reason, .. }) if reason.contains("digest")));

        assert!(matches!(parse_stream(&good[..good.len() - 1]), Err(Error::Format { .. })));
        assert!(matches!(parse_stream(&good[..10]), Err(Error::Format { offset: 10, .. })));

        let mut bad = good.clone();
        bad.push(0);
        assert!(matches!(parse_stream(&bad), Err(Error::Format { .. })));

        let mut bad = good.clone();
        bad[header_len] = 98;
        assert!(matches!(parse_stream(&bad), Err(Error::Format { offset, .. }) if offset as usize == header_len));
    }

    #[test]
    fn writer_rejects_inconsistent_frames() {
        let h = TokenStreamHeader::new(&config(), 0, 1);
        assert!(write_stream(&h, &[], Vec::new()).is_err());
        assert!(write_stream(&h, &[vec![98, 0]], Vec::new()).is_err());
        assert!(write_stream(&h, &[vec![1]], Vec::new()).is_err());
    }

    #[test]
    fn csv_ingest() {
        let z = ingest_latents("0,0\n0, 0\n".as_bytes(), LatentFormat::Csv, 2, false).unwrap();
        assert_eq!(z.len(), 2);
        assert!(z.iter().all(|v| v.iter().all(|&x| x == 0.0)));

        let err = ingest_latents("0,0\n1.5,0\n".as_bytes(), LatentFormat::Csv, 2, false).unwrap_err();
        assert!(matches!(err, Error::Ingest { row: 1, .. }));
        let err = ingest_latents("0,0\n0,0,0\n".as_bytes(), LatentFormat::Csv, 2, false).unwrap_err();
        assert!(matches!(err, Error::Ingest { row: 1, .. }));
        let err = ingest_latents("NaN,0\n".as_bytes(), LatentFormat::Csv, 2, true).unwrap_err();
        assert!(matches!(err, Error::Ingest { row: 0, .. }));
    }

    #[test]
    fn raw_ingest_with_tanh() {
        let bytes: Vec<u8> = [1.5f32, 0.0, -0.25, 0.5].iter().flat_map(|v| v.to_le_bytes()).collect();
        let z = ingest_latents(bytes.as_slice(), LatentFormat::RawF32, 2, true).unwrap();
        assert!((z[0][0] - 0.9051482536448664).abs() < 1e-12);
        assert!(matches!(
            ingest_latents(bytes.as_slice(), LatentFormat::RawF32, 2, false),
            Err(Error::Ingest { row: 0, .. })
        ));
        assert!(matches!(
            ingest_latents(&bytes[..12], LatentFormat::RawF32, 2, true),
            Err(Error::Ingest { row: 1, .. })
        ));
    }
}
