//! Binary PGM ("P5") reader/writer and directory-of-frames ingestion.
//!
//! Only 8-bit binary graymaps are supported; the writer emits a single
//! canonical header form so write/read round trips are byte-exact.
//! Sequences are directories of zero-padded numeric filenames read in
//! lexicographic order, with frame indices assigned 0..N-1.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::imgproc::GrayFrame;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{msg} at byte {offset}")]
    Format { offset: usize, msg: String },
}

fn format_err<T>(offset: usize, msg: impl Into<String>) -> Result<T, PgmError> {
    Err(PgmError::Format {
        offset,
        msg: msg.into(),
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skip whitespace and `#` comments (to end of line).
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn read_number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_separators();
        let start = self.pos;
        let mut value: u64 = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            value = value * 10 + (self.bytes[self.pos] - b'0') as u64;
            if value > u32::MAX as u64 {
                return format_err(start, format!("{what} out of range"));
            }
            self.pos += 1;
        }
        if self.pos == start {
            return format_err(self.pos, format!("expected {what}"));
        }
        Ok(value as u32)
    }
}

/// Read a binary PGM file. The frame index is set to 0; sequence readers
/// re-stamp it.
pub fn read_pgm(path: &Path) -> Result<GrayFrame, PgmError> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes)
}

fn parse_pgm(bytes: &[u8]) -> Result<GrayFrame, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return format_err(0, "not a binary PGM (magic \"P5\" expected)");
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.read_number("width")?;
    let height = cur.read_number("height")?;
    let maxval_at = {
        cur.skip_separators();
        cur.pos
    };
    let maxval = cur.read_number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return format_err(maxval_at, format!("unsupported maxval {maxval} (8-bit only)"));
    }
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return format_err(cur.pos, "expected single whitespace before pixel data");
    }
    cur.pos += 1;
    let want = width as usize * height as usize;
    let got = bytes.len() - cur.pos;
    if got < want {
        return format_err(
            bytes.len(),
            format!("truncated pixel data: expected {want} bytes, found {got}"),
        );
    }
    let data = bytes[cur.pos..cur.pos + want].to_vec();
    GrayFrame::new(width, height, 0, data)
        .map_err(|e| PgmError::Format {
            offset: 2,
            msg: e.to_string(),
        })
}

/// Write a frame as binary PGM with the canonical header
/// `P5\n{width} {height}\n255\n`.
pub fn write_pgm(frame: &GrayFrame, path: &Path) -> Result<(), PgmError> {
    let mut out = Vec::with_capacity(frame.data.len() + 32);
    write!(out, "P5\n{} {}\n255\n", frame.width, frame.height)?;
    out.extend_from_slice(&frame.data);
    fs::write(path, out)?;
    Ok(())
}

/// Canonical sequence member name, e.g. `frame_000017.pgm`.
pub fn frame_file_name(t: u64) -> String {
    format!("frame_{t:06}.pgm")
}

/// Read all `.pgm` files of a directory in lexicographic filename order,
/// assigning frame indices 0..N-1.
pub fn read_sequence_dir(dir: &Path) -> Result<Vec<GrayFrame>, PgmError> {
    let mut names: Vec<_> = fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().map_or(false, |e| e == "pgm"))
        .collect();
    names.sort();
    let mut frames = Vec::with_capacity(names.len());
    for (t, path) in names.iter().enumerate() {
        let mut frame = read_pgm(path)?;
        frame.t = t as u64;
        frames.push(frame);
    }
    Ok(frames)
}

/// Write frames under canonical names into `dir` (created if missing).
pub fn write_sequence_dir(frames: &[GrayFrame], dir: &Path) -> Result<(), PgmError> {
    fs::create_dir_all(dir)?;
    for frame in frames {
        write_pgm(frame, &dir.join(frame_file_name(frame.t)))?;
    }
    Ok(())
}
