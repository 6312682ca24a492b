//! Flat binary and CSV serialization for pages and received grids.
//!
//! Binary layout (little-endian): 4-byte magic `PG2D`, u8 dtype
//! (0 = i8 symbols, 1 = f64 samples), u64 height, u64 width, then the
//! row-major payload.

use std::io::{Read, Write};

use super::{ReceivedPage, SymbolPage};
use crate::error::CoreError;
use crate::Result;

const MAGIC: &[u8; 4] = b"PG2D";
const DTYPE_I8: u8 = 0;
const DTYPE_F64: u8 = 1;

fn write_header(w: &mut impl Write, dtype: u8, height: usize, width: usize) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[dtype])?;
    w.write_all(&(height as u64).to_le_bytes())?;
    w.write_all(&(width as u64).to_le_bytes())?;
    Ok(())
}

fn read_header(r: &mut impl Read, want_dtype: u8) -> Result<(usize, usize)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CoreError::Parse("bad magic, not a PG2D file".into()));
    }
    let mut dtype = [0u8; 1];
    r.read_exact(&mut dtype)?;
    if dtype[0] != want_dtype {
        return Err(CoreError::Parse(format!(
            "dtype mismatch: file has {}, expected {}",
            dtype[0], want_dtype
        )));
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let height = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let width = u64::from_le_bytes(buf) as usize;
    Ok((height, width))
}

pub fn write_symbol_page(page: &SymbolPage, w: &mut impl Write) -> Result<()> {
    write_header(w, DTYPE_I8, page.height(), page.width())?;
    let bytes: Vec<u8> = page.symbols().iter().map(|&s| s as u8).collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_symbol_page(r: &mut impl Read) -> Result<SymbolPage> {
    let (height, width) = read_header(r, DTYPE_I8)?;
    let mut bytes = vec![0u8; height * width];
    r.read_exact(&mut bytes)?;
    SymbolPage::from_symbols(height, width, bytes.into_iter().map(|b| b as i8).collect())
}

pub fn write_received_page(page: &ReceivedPage, w: &mut impl Write) -> Result<()> {
    write_header(w, DTYPE_F64, page.height(), page.width())?;
    for &s in page.samples() {
        w.write_all(&s.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_received_page(r: &mut impl Read) -> Result<ReceivedPage> {
    let (height, width) = read_header(r, DTYPE_F64)?;
    let mut samples = Vec::with_capacity(height * width);
    let mut buf = [0u8; 8];
    for _ in 0..height * width {
        r.read_exact(&mut buf)?;
        samples.push(f64::from_le_bytes(buf));
    }
    ReceivedPage::from_samples(height, width, samples)
}

/// Debug CSV dump of a received grid, one row per grid row.
pub fn write_received_csv(page: &ReceivedPage, w: &mut impl Write) -> Result<()> {
    for i in 0..page.height() {
        let row: Vec<String> = (0..page.width())
            .map(|j| format!("{:.9e}", page.get(i, j)))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Debug CSV dump of a symbol page.
pub fn write_symbol_csv(page: &SymbolPage, w: &mut impl Write) -> Result<()> {
    for i in 0..page.height() {
        let row: Vec<String> = (0..page.width())
            .map(|j| format!("{}", page.get(i, j)))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
