//! Minimal binary PGM (P5) writer.

use std::io::{self, Write};

/// Write a P5 raster, one byte per pixel, row-major. An optional comment line
/// is embedded after the magic number (readers skip `#` lines).
pub fn write_pgm<W: Write>(
    out: &mut W,
    width: usize,
    height: usize,
    pixels: &[u8],
    comment: Option<&str>,
) -> io::Result<()> {
    assert_eq!(pixels.len(), width * height, "pixel buffer size");
    out.write_all(b"P5\n")?;
    if let Some(c) = comment {
        for line in c.lines() {
            out.write_all(b"# ")?;
            out.write_all(line.as_bytes())?;
            out.write_all(b"\n")?;
        }
    }
    out.write_all(format!("{width} {height}\n255\n").as_bytes())?;
    out.write_all(pixels)
}
