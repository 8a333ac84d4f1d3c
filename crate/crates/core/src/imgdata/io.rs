//! Readers and writers for the raster formats used on disk.
//!
//! * Images: 8-bit PNG (grayscale or RGB) and binary PGM/PPM (`P5`/`P6`).
//! * Masks: single-channel PGM or PNG; written as `P5` with values {0, 255}.
//! * Probability maps: `PMAPv1 <width> <height>\n` followed by row-major
//!   little-endian `f32` values.

use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgdata::{Image, Mask, ProbMap};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";
const PMAP_MAGIC: &str = "PMAPv1";

/// Raw 8-bit raster as decoded from disk.
struct RawRaster {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let raw = read_raster(path.as_ref())?;
    Image::from_u8(raw.height, raw.width, raw.channels, &raw.data)
}

/// Reads a single-channel raster; a pixel is foreground iff its raw value exceeds 127.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let raw = read_raster(path)?;
    if raw.channels != 1 {
        return Err(Error::format(format!(
            "{}: masks must be single-channel, found {} channels",
            path.display(),
            raw.channels
        )));
    }
    Mask::new(
        raw.height,
        raw.width,
        raw.data.iter().map(|&v| (v > 127) as u8).collect(),
    )
}

/// Writes an image as PNG (`.png` extension) or binary PNM otherwise.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = img.to_u8();
    if has_extension(path, "png") {
        write_png(path, img.height(), img.width(), img.channels(), &bytes)
    } else {
        write_pnm(path, img.height(), img.width(), img.channels(), &bytes)
    }
}

/// Writes a mask as binary PGM with values {0, 255}.
pub fn save_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = mask.data().iter().map(|&v| v * 255).collect();
    write_pnm(path.as_ref(), mask.height(), mask.width(), 1, &bytes)
}

pub fn load_pmap(path: impl AsRef<Path>) -> Result<ProbMap> {
    let bytes = fs::read(path.as_ref())?;
    decode_pmap(&bytes)
}

pub fn save_pmap(map: &ProbMap, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path.as_ref())?);
    out.write_all(&encode_pmap(map))?;
    out.flush()?;
    Ok(())
}

pub fn encode_pmap(map: &ProbMap) -> Vec<u8> {
    let header = format!("{PMAP_MAGIC} {} {}\n", map.width(), map.height());
    let mut bytes = Vec::with_capacity(header.len() + 4 * map.data().len());
    bytes.extend_from_slice(header.as_bytes());
    for v in map.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

pub fn decode_pmap(bytes: &[u8]) -> Result<ProbMap> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format("PMAP header is not newline-terminated"))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::format("PMAP header is not ASCII"))?;
    let mut fields = header.split(' ');
    if fields.next() != Some(PMAP_MAGIC) {
        return Err(Error::format("missing PMAPv1 magic"));
    }
    let mut dim = |name: &str| -> Result<usize> {
        fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(format!("PMAP header has no valid {name}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    if fields.next().is_some() {
        return Err(Error::format("trailing fields in PMAP header"));
    }
    let body = &bytes[newline + 1..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format("PMAP dimensions overflow"))?;
    if body.len() != expected {
        return Err(Error::format(format!(
            "PMAP body has {} bytes, expected {expected}",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    ProbMap::new(height, width, data)
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn read_raster(path: &Path) -> Result<RawRaster> {
    let bytes = fs::read(path)?;
    let decoded = if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(&bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(&bytes)
    } else {
        Err(Error::format("not a PNG, binary PGM or binary PPM file"))
    };
    decoded.map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn decode_png(bytes: &[u8]) -> Result<RawRaster> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(format!("png: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format("png: image too large"))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(format!("png: {e}")))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::format(format!(
            "unsupported PNG bit depth {:?}",
            info.bit_depth
        )));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(Error::format(format!(
                "unsupported PNG color type {other:?}"
            )))
        }
    };
    let (width, height) = (info.width as usize, info.height as usize);
    let mut data = Vec::with_capacity(width * height * channels);
    for row in buf.chunks(info.line_size).take(height) {
        data.extend_from_slice(&row[..width * channels]);
    }
    Ok(RawRaster {
        height,
        width,
        channels,
        data,
    })
}

fn decode_pnm(bytes: &[u8]) -> Result<RawRaster> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Whitespace and comments may precede every header field.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format("malformed PNM header"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(format!(
            "unsupported PNM maxval {maxval}; only 8-bit samples are supported"
        )));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format("malformed PNM header"));
    }
    pos += 1;
    let n = width * height * channels;
    let body = bytes
        .get(pos..pos + n)
        .ok_or_else(|| Error::format("truncated PNM body"))?;
    let data = if maxval == 255 {
        body.to_vec()
    } else {
        body.iter()
            .map(|&v| ((v.min(maxval as u8) as usize * 255 + maxval / 2) / maxval) as u8)
            .collect()
    };
    Ok(RawRaster {
        height,
        width,
        channels,
        data,
    })
}

fn write_pnm(path: &Path, height: usize, width: usize, channels: usize, data: &[u8]) -> Result<()> {
    let magic = match channels {
        1 => "P5",
        3 => "P6",
        n => return Err(Error::format(format!("PNM cannot store {n} channels"))),
    };
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "{magic}\n{width} {height}\n255\n")?;
    out.write_all(data)?;
    out.flush()?;
    Ok(())
}

fn write_png(path: &Path, height: usize, width: usize, channels: usize, data: &[u8]) -> Result<()> {
    let color = match channels {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        n => return Err(Error::format(format!("PNG writer cannot store {n} channels"))),
    };
    let file = BufWriter::new(fs::File::create(path)?);
    let mut encoder = png::Encoder::new(file, width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::format(format!("png: {e}")))?;
    writer
        .write_image_data(data)
        .map_err(|e| Error::format(format!("png: {e}")))?;
    writer
        .finish()
        .map_err(|e| Error::format(format!("png: {e}")))?;
    Ok(())
}
