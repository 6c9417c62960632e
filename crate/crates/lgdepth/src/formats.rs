//! On-disk encodings.
//!
//! * Depth, PNG: 16-bit grayscale in millimeters, 0 = no measurement.
//! * Depth, raw: `b"DGRD"`, `u32` LE width, `u32` LE height, then
//!   `width * height` little-endian `f32` meters, row-major, NaN = invalid.
//! * Segmentation: 16-bit grayscale PNG of instance ids (0 = unlabelled)
//!   plus a JSON sidecar `{"scene": str, "instances": [{"id", "class"}]}`.
//! * RGB: 8-bit RGB PNG.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Cursor;

use serde::{Deserialize, Serialize};

pub const DGRD_MAGIC: &[u8; 4] = b"DGRD";
const PNG_SIGNATURE: &[u8; 8] = b"\x89PNG\r\n\x1a\n";
const DGRD_HEADER: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    pub field: &'static str,
    pub offset: Option<u64>,
    pub message: String,
}

impl FormatError {
    fn at(field: &'static str, offset: u64, message: impl Into<String>) -> Self {
        Self {
            field,
            offset: Some(offset),
            message: message.into(),
        }
    }

    fn png(err: impl fmt::Display) -> Self {
        Self {
            field: "png stream",
            offset: None,
            message: err.to_string(),
        }
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.offset {
            Some(offset) => write!(
                f,
                "malformed {} at byte offset {offset}: {}",
                self.field, self.message
            ),
            None => write!(f, "malformed {}: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for FormatError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthEncoding {
    /// 16-bit PNG, millimeters.
    Png16,
    /// `DGRD` float grid, meters.
    Raw,
}

/// A depth raster exactly as stored, converted to meters.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDepth {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub encoding: DepthEncoding,
}

/// Sniffs the encoding from the leading bytes.
pub fn decode_depth(bytes: &[u8]) -> Result<RawDepth, FormatError> {
    if bytes.starts_with(PNG_SIGNATURE) {
        let (width, height, mm) = decode_gray16(bytes)?;
        let values = mm.into_iter().map(|v| v as f64 / 1000.0).collect();
        Ok(RawDepth {
            width,
            height,
            values,
            encoding: DepthEncoding::Png16,
        })
    } else if bytes.starts_with(DGRD_MAGIC) {
        decode_dgrd(bytes)
    } else {
        Err(FormatError::at(
            "magic",
            0,
            "expected a PNG signature or \"DGRD\"",
        ))
    }
}

pub fn decode_dgrd(bytes: &[u8]) -> Result<RawDepth, FormatError> {
    if bytes.len() < 4 || &bytes[..4] != DGRD_MAGIC {
        return Err(FormatError::at("magic", 0, "expected \"DGRD\""));
    }
    let read_u32 = |offset: usize, field| -> Result<usize, FormatError> {
        bytes
            .get(offset..offset + 4)
            .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
            .ok_or_else(|| FormatError::at(field, offset as u64, "truncated header"))
    };
    let width = read_u32(4, "width")?;
    let height = read_u32(8, "height")?;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| FormatError::at("height", 8, "width * height overflows"))?;
    let expected = n
        .checked_mul(4)
        .and_then(|b| b.checked_add(DGRD_HEADER))
        .ok_or_else(|| FormatError::at("height", 8, "payload size overflows"))?;
    if bytes.len() < expected {
        let full = (bytes.len() - DGRD_HEADER) / 4;
        return Err(FormatError::at(
            "payload",
            (DGRD_HEADER + full * 4) as u64,
            format!(
                "truncated: {width}x{height} grid needs {expected} bytes, file has {}",
                bytes.len()
            ),
        ));
    }
    if bytes.len() > expected {
        return Err(FormatError::at(
            "payload",
            expected as u64,
            format!("{} trailing bytes", bytes.len() - expected),
        ));
    }
    let values = bytes[DGRD_HEADER..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Ok(RawDepth {
        width,
        height,
        values,
        encoding: DepthEncoding::Raw,
    })
}

pub fn encode_dgrd(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(DGRD_HEADER + values.len() * 4);
    out.extend_from_slice(DGRD_MAGIC);
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    for v in values {
        let v = if v.is_nan() { f32::NAN } else { *v as f32 };
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Meters → millimeter PNG. Non-finite and non-positive values become 0;
/// values past 65.535 m saturate.
pub fn encode_depth_png(
    width: usize,
    height: usize,
    values: &[f64],
) -> Result<Vec<u8>, FormatError> {
    let mm: Vec<u16> = values
        .iter()
        .map(|v| {
            if v.is_finite() && *v > 0.0 {
                (v * 1000.0).round().min(u16::MAX as f64) as u16
            } else {
                0
            }
        })
        .collect();
    encode_gray16(width, height, &mm)
}

pub fn encode_depth(
    width: usize,
    height: usize,
    values: &[f64],
    encoding: DepthEncoding,
) -> Result<Vec<u8>, FormatError> {
    match encoding {
        DepthEncoding::Png16 => encode_depth_png(width, height, values),
        DepthEncoding::Raw => Ok(encode_dgrd(width, height, values)),
    }
}

fn png_reader(bytes: &[u8]) -> Result<png::Reader<Cursor<&[u8]>>, FormatError> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    decoder.read_info().map_err(FormatError::png)
}

fn read_frame(reader: &mut png::Reader<Cursor<&[u8]>>) -> Result<(Vec<u8>, usize), FormatError> {
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| FormatError::png("image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(FormatError::png)?;
    buf.truncate(info.buffer_size());
    Ok((buf, info.line_size))
}

pub fn decode_gray16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>), FormatError> {
    let mut reader = png_reader(bytes)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(FormatError {
            field: "png header (IHDR)",
            offset: Some(16),
            message: format!(
                "expected 16-bit grayscale, found {:?} at {:?}",
                info.color_type, info.bit_depth
            ),
        });
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let (buf, line) = read_frame(&mut reader)?;
    let mut out = Vec::with_capacity(width * height);
    for row in buf.chunks(line).take(height) {
        out.extend(
            row[..width * 2]
                .chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]])),
        );
    }
    Ok((width, height, out))
}

fn encode_png(
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(color);
        encoder.set_depth(depth);
        let mut writer = encoder.write_header().map_err(FormatError::png)?;
        writer.write_image_data(data).map_err(FormatError::png)?;
        writer.finish().map_err(FormatError::png)?;
    }
    Ok(out)
}

pub fn encode_gray16(width: usize, height: usize, values: &[u16]) -> Result<Vec<u8>, FormatError> {
    let data: Vec<u8> = values.iter().flat_map(|v| v.to_be_bytes()).collect();
    encode_png(
        width,
        height,
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &data,
    )
}

pub fn decode_rgb8(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), FormatError> {
    let mut reader = png_reader(bytes)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(FormatError {
            field: "png header (IHDR)",
            offset: Some(16),
            message: format!(
                "expected 8-bit RGB, found {:?} at {:?}",
                info.color_type, info.bit_depth
            ),
        });
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let (buf, line) = read_frame(&mut reader)?;
    let mut out = Vec::with_capacity(width * height * 3);
    for row in buf.chunks(line).take(height) {
        out.extend_from_slice(&row[..width * 3]);
    }
    Ok((width, height, out))
}

pub fn encode_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Vec<u8>, FormatError> {
    encode_png(
        width,
        height,
        png::ColorType::Rgb,
        png::BitDepth::Eight,
        data,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarInstance {
    pub id: u32,
    pub class: String,
}

/// JSON sidecar describing a segmentation PNG.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationSidecar {
    pub scene: String,
    pub instances: Vec<SidecarInstance>,
}

impl SegmentationSidecar {
    pub fn class_map(&self) -> Result<BTreeMap<u16, String>, String> {
        let mut map = BTreeMap::new();
        for (i, inst) in self.instances.iter().enumerate() {
            let id = u16::try_from(inst.id)
                .map_err(|_| format!("instances[{i}].id: {} exceeds 16 bits", inst.id))?;
            if id == 0 {
                return Err(format!("instances[{i}].id: 0 is reserved for unlabelled"));
            }
            if map.insert(id, inst.class.clone()).is_some() {
                return Err(format!("instances[{i}].id: duplicate id {id}"));
            }
        }
        Ok(map)
    }

    pub fn from_class_map(scene: &str, class_of: &BTreeMap<u16, String>) -> Self {
        Self {
            scene: scene.to_string(),
            instances: class_of
                .iter()
                .map(|(id, class)| SidecarInstance {
                    id: *id as u32,
                    class: class.clone(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dgrd_errors_name_offsets() {
        let err = decode_depth(b"XXXX").unwrap_err();
        assert_eq!((err.field, err.offset), ("magic", Some(0)));
        let err = decode_dgrd(b"DGRD\x02\x00").unwrap_err();
        assert_eq!((err.field, err.offset), ("width", Some(4)));
        let mut bytes = encode_dgrd(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        bytes.truncate(bytes.len() - 5);
        let err = decode_dgrd(&bytes).unwrap_err();
        assert_eq!((err.field, err.offset), ("payload", Some(20)));
        assert!(err.to_string().contains("byte offset 20"));
        let mut bytes = encode_dgrd(1, 1, &[1.0]);
        bytes.push(0);
        assert_eq!(decode_dgrd(&bytes).unwrap_err().offset, Some(16));
    }

    #[test]
    fn dgrd_layout() {
        let bytes = encode_dgrd(2, 1, &[1.5, f64::NAN]);
        assert_eq!(&bytes[..4], b"DGRD");
        assert_eq!(&bytes[4..12], &[2, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &1.5f32.to_le_bytes());
        let raw = decode_depth(&bytes).unwrap();
        assert_eq!(raw.values[0], 1.5);
        assert!(raw.values[1].is_nan());
    }

    #[test]
    fn png_depth_is_millimeters() {
        let bytes = encode_depth_png(3, 1, &[1.234, 0.0, 70.0]).unwrap();
        let (_, _, mm) = decode_gray16(&bytes).unwrap();
        assert_eq!(mm, vec![1234, 0, 65535]);
        let raw = decode_depth(&bytes).unwrap();
        assert_eq!(raw.encoding, DepthEncoding::Png16);
        assert_eq!(raw.values[0], 1.234);
    }

    #[test]
    fn rgb_where_gray_expected() {
        let rgb = encode_rgb8(1, 1, &[1, 2, 3]).unwrap();
        let err = decode_gray16(&rgb).unwrap_err();
        assert!(err.message.contains("16-bit grayscale"));
        assert!(decode_rgb8(&encode_gray16(1, 1, &[5]).unwrap()).is_err());
        assert_eq!(decode_rgb8(&rgb).unwrap(), (1, 1, vec![1, 2, 3]));
    }

    #[test]
    fn sidecar_rules() {
        let s: SegmentationSidecar =
            serde_json::from_str(r#"{"scene":"bedroom","instances":[{"id":1,"class":"bed"}]}"#)
                .unwrap();
        assert_eq!(s.class_map().unwrap().get(&1).unwrap(), "bed");
        let zero = SegmentationSidecar {
            scene: "x".into(),
            instances: vec![SidecarInstance {
                id: 0,
                class: "wall".into(),
            }],
        };
        assert!(zero.class_map().is_err());
        let big = SegmentationSidecar {
            scene: "x".into(),
            instances: vec![SidecarInstance {
                id: 70000,
                class: "wall".into(),
            }],
        };
        assert!(big.class_map().is_err());
    }

    proptest! {
        #[test]
        fn gray16_roundtrip(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
            let values: Vec<u16> = (0..w * h)
                .map(|i| (seed.wrapping_mul(i as u64 + 1) >> 17) as u16)
                .collect();
            let bytes = encode_gray16(w, h, &values).unwrap();
            prop_assert_eq!(decode_gray16(&bytes).unwrap(), (w, h, values));
        }

        #[test]
        fn dgrd_roundtrip_bytes(values in proptest::collection::vec(0.0f32..20.0, 1..64)) {
            let v: Vec<f64> = values.iter().map(|x| *x as f64).collect();
            let bytes = encode_dgrd(v.len(), 1, &v);
            let raw = decode_dgrd(&bytes).unwrap();
            prop_assert_eq!(encode_dgrd(raw.width, raw.height, &raw.values), bytes);
        }
    }
}
