//! Minimal NPY v1.0 container support.
//!
//! Only the three element types this toolkit stores are understood:
//! little-endian `f32` (weights, activations, salient triples), `i8`
//! (quantization codes) and little-endian `i64` (mask indices). Arrays are
//! always C-order. Anything else is rejected rather than converted.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    I8,
    I64,
}

impl Dtype {
    pub fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::I8 => "|i1",
            Dtype::I64 => "<i8",
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::I8 => 1,
            Dtype::I64 => 8,
        }
    }

    fn from_descr(descr: &str) -> Option<Self> {
        match descr {
            "<f4" => Some(Dtype::F32),
            "|i1" | "<i1" => Some(Dtype::I8),
            "<i8" => Some(Dtype::I64),
            _ => None,
        }
    }
}

/// A decoded NPY file: element type, shape and the raw little-endian payload.
#[derive(Debug, Clone)]
pub struct RawArray {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub payload: Vec<u8>,
}

impl RawArray {
    pub fn to_f32(&self) -> Vec<f32> {
        debug_assert_eq!(self.dtype, Dtype::F32);
        self.payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect()
    }

    pub fn to_i8(&self) -> Vec<i8> {
        debug_assert_eq!(self.dtype, Dtype::I8);
        self.payload.iter().map(|&b| b as i8).collect()
    }

    pub fn to_i64(&self) -> Vec<i64> {
        debug_assert_eq!(self.dtype, Dtype::I64);
        self.payload
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    }
}

/// Builds the complete preamble (magic, version, length, padded header).
pub fn header_bytes(dtype: Dtype, shape: &[usize]) -> Vec<u8> {
    let shape_str = match shape {
        [n] => format!("({n},)"),
        dims => {
            let parts: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
            format!("({})", parts.join(", "))
        }
    };
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        dtype.descr(),
        shape_str
    );
    // magic(6) + version(2) + len(2) + dict + '\n' must land on a 64-byte boundary
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');

    let mut out = Vec::with_capacity(10 + dict.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

pub fn encode(dtype: Dtype, shape: &[usize], payload: &[u8]) -> Vec<u8> {
    debug_assert_eq!(shape.iter().product::<usize>() * dtype.size(), payload.len());
    let mut out = header_bytes(dtype, shape);
    out.extend_from_slice(payload);
    out
}

pub fn write_file(path: &Path, dtype: Dtype, shape: &[usize], payload: &[u8]) -> Result<()> {
    let bytes = encode(dtype, shape, payload);
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<RawArray> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(path, &bytes)
}

pub fn decode(path: &Path, bytes: &[u8]) -> Result<RawArray> {
    let fmt_err = |field: &'static str, detail: String| Error::Format {
        path: path.to_path_buf(),
        field,
        detail,
    };

    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(fmt_err("magic", "missing \\x93NUMPY prefix".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, header_start) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 => {
            if bytes.len() < 12 {
                return Err(fmt_err("header_len", "truncated length field".into()));
            }
            (
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
                12,
            )
        }
        _ => return Err(fmt_err("version", format!("unsupported version {major}.{minor}"))),
    };
    let header_end = header_start + header_len;
    if header_end > bytes.len() {
        return Err(fmt_err(
            "header_len",
            format!("declares {header_len} bytes but file has {}", bytes.len() - header_start),
        ));
    }
    let text = std::str::from_utf8(&bytes[header_start..header_end])
        .map_err(|_| fmt_err("header", "not ASCII".into()))?;
    let dict = parse_header_dict(text).map_err(|(field, detail)| fmt_err(field, detail))?;

    let descr = dict.descr.ok_or_else(|| fmt_err("descr", "missing".into()))?;
    let fortran = dict
        .fortran_order
        .ok_or_else(|| fmt_err("fortran_order", "missing".into()))?;
    let shape = dict.shape.ok_or_else(|| fmt_err("shape", "missing".into()))?;

    let dtype = Dtype::from_descr(&descr).ok_or_else(|| Error::UnsupportedLayout {
        path: path.to_path_buf(),
        detail: format!("dtype `{descr}` is not one of <f4, |i1, <i8"),
    })?;
    if fortran {
        return Err(Error::UnsupportedLayout {
            path: path.to_path_buf(),
            detail: "fortran_order arrays are not supported".into(),
        });
    }

    let count = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| fmt_err("shape", "element count overflows".into()))?;
    let payload = &bytes[header_end..];
    let expected = count * dtype.size();
    if payload.len() != expected {
        return Err(fmt_err(
            "shape",
            format!(
                "shape {shape:?} needs {expected} payload bytes, found {}",
                payload.len()
            ),
        ));
    }

    Ok(RawArray {
        dtype,
        shape,
        payload: payload.to_vec(),
    })
}

#[derive(Default)]
struct HeaderDict {
    descr: Option<String>,
    fortran_order: Option<bool>,
    shape: Option<Vec<usize>>,
}

type ParseErr = (&'static str, String);

/// Parses the Python dict literal in an NPY header.
fn parse_header_dict(text: &str) -> Result<HeaderDict, ParseErr> {
    let mut p = Cursor {
        s: text.trim_end().as_bytes(),
        i: 0,
    };
    let mut dict = HeaderDict::default();

    p.expect(b'{', "header")?;
    loop {
        p.skip_ws();
        if p.eat(b'}') {
            break;
        }
        let key = p.string("header")?;
        p.skip_ws();
        p.expect(b':', "header")?;
        p.skip_ws();
        match key.as_str() {
            "descr" => dict.descr = Some(p.string("descr")?),
            "fortran_order" => dict.fortran_order = Some(p.boolean("fortran_order")?),
            "shape" => dict.shape = Some(p.tuple("shape")?),
            other => return Err(("header", format!("unexpected key `{other}`"))),
        }
        p.skip_ws();
        if !p.eat(b',') {
            p.skip_ws();
            p.expect(b'}', "header")?;
            break;
        }
    }
    p.skip_ws();
    if p.i != p.s.len() {
        return Err(("header", "trailing characters after dict".into()));
    }
    Ok(dict)
}

struct Cursor<'a> {
    s: &'a [u8],
    i: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8, field: &'static str) -> Result<(), ParseErr> {
        if self.eat(c) {
            Ok(())
        } else {
            Err((field, format!("expected `{}` at offset {}", c as char, self.i)))
        }
    }

    fn string(&mut self, field: &'static str) -> Result<String, ParseErr> {
        let quote = match self.s.get(self.i) {
            Some(&q @ (b'\'' | b'"')) => q,
            _ => return Err((field, format!("expected string at offset {}", self.i))),
        };
        self.i += 1;
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i] != quote {
            self.i += 1;
        }
        if self.i == self.s.len() {
            return Err((field, "unterminated string".into()));
        }
        let out = String::from_utf8_lossy(&self.s[start..self.i]).into_owned();
        self.i += 1;
        Ok(out)
    }

    fn boolean(&mut self, field: &'static str) -> Result<bool, ParseErr> {
        let rest = &self.s[self.i..];
        if rest.starts_with(b"True") {
            self.i += 4;
            Ok(true)
        } else if rest.starts_with(b"False") {
            self.i += 5;
            Ok(false)
        } else {
            Err((field, "expected True or False".into()))
        }
    }

    fn tuple(&mut self, field: &'static str) -> Result<Vec<usize>, ParseErr> {
        self.expect(b'(', field)?;
        let mut dims = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b')') {
                break;
            }
            let start = self.i;
            while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                self.i += 1;
            }
            if start == self.i {
                return Err((field, format!("expected integer at offset {}", self.i)));
            }
            let digits = std::str::from_utf8(&self.s[start..self.i]).unwrap();
            dims.push(
                digits
                    .parse()
                    .map_err(|_| (field, format!("dimension `{digits}` too large")))?,
            );
            self.skip_ws();
            if !self.eat(b',') {
                self.skip_ws();
                self.expect(b')', field)?;
                break;
            }
        }
        Ok(dims)
    }
}
