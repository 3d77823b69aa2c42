//! Binary tensor and observation files, 8-bit PPM images, and the
//! block tensorization used for image inpainting.
//!
//! Both binary formats are little-endian with a 5-byte magic. Parse
//! failures report the byte offset of the offending field and never
//! panic, so arbitrary input is safe to feed in.

use crate::error::{Error, Result};
use crate::sampling::ObservationSet;
use crate::tensor::{checked_numel, invert_multi_index, multi_index, DenseTensor};
use std::fs;
use std::path::Path;

pub const TENSOR_MAGIC: &[u8; 5] = b"RTEN1";
pub const OBSERVATIONS_MAGIC: &[u8; 5] = b"ROBS1";

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, offset: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.offset.checked_add(n).ok_or_else(|| {
            Error::parse(self.offset as u64, format!("{what}: length overflows"))
        })?;
        if end > self.bytes.len() {
            return Err(Error::parse(
                self.offset as u64,
                format!(
                    "{what}: need {n} bytes, only {} left",
                    self.bytes.len() - self.offset
                ),
            ));
        }
        let out = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(out)
    }

    fn magic(&mut self, expected: &[u8; 5]) -> Result<()> {
        let got = self.take(5, "magic")?;
        if got != expected {
            return Err(Error::parse(
                0,
                format!("bad magic {got:?}, expected {expected:?}"),
            ));
        }
        Ok(())
    }

    fn u32_le(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64_le(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn f64_le(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn usize_field(&mut self, what: &str) -> Result<usize> {
        let at = self.offset as u64;
        let v = self.u64_le(what)?;
        usize::try_from(v)
            .map_err(|_| Error::parse(at, format!("{what} {v} exceeds the address space")))
    }

    fn finish(&self, what: &str) -> Result<()> {
        if self.offset != self.bytes.len() {
            return Err(Error::parse(
                self.offset as u64,
                format!(
                    "{what}: {} trailing bytes after the payload",
                    self.bytes.len() - self.offset
                ),
            ));
        }
        Ok(())
    }

    /// Guards against allocating from a forged header: the remaining
    /// input must actually hold `count` items of `item_size` bytes.
    fn expect_items(&self, count: usize, item_size: usize, what: &str) -> Result<()> {
        let need = count
            .checked_mul(item_size)
            .ok_or_else(|| Error::parse(self.offset as u64, format!("{what}: size overflows")))?;
        if self.bytes.len() - self.offset < need {
            return Err(Error::parse(
                self.offset as u64,
                format!(
                    "{what}: header promises {need} payload bytes, only {} left",
                    self.bytes.len() - self.offset
                ),
            ));
        }
        Ok(())
    }
}

fn read_extents(r: &mut Reader<'_>) -> Result<Vec<usize>> {
    let at = r.offset as u64;
    let order = r.u32_le("order")? as usize;
    r.expect_items(order, 8, "extents")?;
    let dims = (0..order)
        .map(|_| r.usize_field("extent"))
        .collect::<Result<Vec<usize>>>()?;
    checked_numel(&dims).map_err(|e| Error::parse(at, e.to_string()))?;
    Ok(dims)
}

fn push_extents(out: &mut Vec<u8>, dims: &[usize]) {
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
}

pub fn tensor_to_bytes(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + 4 + 8 * t.order() + 8 * t.numel());
    out.extend_from_slice(TENSOR_MAGIC);
    push_extents(&mut out, t.dims());
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn tensor_from_bytes(bytes: &[u8]) -> Result<DenseTensor> {
    let mut r = Reader::new(bytes);
    r.magic(TENSOR_MAGIC)?;
    let dims = read_extents(&mut r)?;
    let numel: usize = dims.iter().product();
    r.expect_items(numel, 8, "tensor payload")?;
    let data = (0..numel)
        .map(|_| r.f64_le("tensor value"))
        .collect::<Result<Vec<f64>>>()?;
    r.finish("tensor file")?;
    DenseTensor::new(dims, data)
}

pub fn observations_to_bytes(obs: &ObservationSet) -> Vec<u8> {
    let k = obs.dims().len();
    let n = obs.len();
    let mut out = Vec::with_capacity(5 + 4 + 8 * k + 8 + 8 * n * (k + 1));
    out.extend_from_slice(OBSERVATIONS_MAGIC);
    push_extents(&mut out, obs.dims());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for &lin in obs.linear_indices() {
        let idx = invert_multi_index(lin, obs.dims()).expect("stored index is in bounds");
        for i in idx {
            out.extend_from_slice(&(i as u64).to_le_bytes());
        }
    }
    for &v in obs.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn observations_from_bytes(bytes: &[u8]) -> Result<ObservationSet> {
    let mut r = Reader::new(bytes);
    r.magic(OBSERVATIONS_MAGIC)?;
    let dims = read_extents(&mut r)?;
    let k = dims.len();
    let n = r.usize_field("observation count")?;
    r.expect_items(n, 8 * (k + 1), "observations payload")?;
    let mut linear = Vec::with_capacity(n);
    for _ in 0..n {
        let at = r.offset as u64;
        let idx = (0..k)
            .map(|_| r.usize_field("index component"))
            .collect::<Result<Vec<usize>>>()?;
        let lin = multi_index(&idx, &dims).map_err(|e| Error::parse(at, e.to_string()))?;
        linear.push(lin);
    }
    let value_base = r.offset as u64;
    let values = (0..n)
        .map(|_| r.f64_le("observed value"))
        .collect::<Result<Vec<f64>>>()?;
    r.finish("observations file")?;
    ObservationSet::new(dims, linear, values).map_err(|e| Error::parse(value_base, e.to_string()))
}

pub fn read_tensor_file<P: AsRef<Path>>(path: P) -> Result<DenseTensor> {
    tensor_from_bytes(&fs::read(path)?)
}

pub fn write_tensor_file<P: AsRef<Path>>(path: P, t: &DenseTensor) -> Result<()> {
    Ok(fs::write(path, tensor_to_bytes(t))?)
}

pub fn read_observations_file<P: AsRef<Path>>(path: P) -> Result<ObservationSet> {
    observations_from_bytes(&fs::read(path)?)
}

pub fn write_observations_file<P: AsRef<Path>>(path: P, obs: &ObservationSet) -> Result<()> {
    Ok(fs::write(path, observations_to_bytes(obs))?)
}

fn skip_ppm_separator(r: &mut Reader<'_>) -> Result<()> {
    // Whitespace, with '#' starting a comment that runs to end of line.
    let mut seen = false;
    while r.offset < r.bytes.len() {
        match r.bytes[r.offset] {
            b' ' | b'\t' | b'\r' | b'\n' => {
                r.offset += 1;
                seen = true;
            }
            b'#' if seen => {
                while r.offset < r.bytes.len() && r.bytes[r.offset] != b'\n' {
                    r.offset += 1;
                }
            }
            _ => break,
        }
    }
    if !seen {
        return Err(Error::parse(r.offset as u64, "expected whitespace in image header"));
    }
    Ok(())
}

fn ppm_number(r: &mut Reader<'_>) -> Result<usize> {
    let at = r.offset;
    let mut v: usize = 0;
    let mut any = false;
    while r.offset < r.bytes.len() && r.bytes[r.offset].is_ascii_digit() {
        v = v
            .checked_mul(10)
            .and_then(|x| x.checked_add((r.bytes[r.offset] - b'0') as usize))
            .ok_or_else(|| Error::parse(at as u64, "image header number overflows"))?;
        r.offset += 1;
        any = true;
    }
    if !any {
        return Err(Error::parse(r.offset as u64, "expected a number in image header"));
    }
    Ok(v)
}

/// Parses a binary 8-bit PPM into an H x W x 3 tensor with values in
/// `[0, 1]` (byte / 255).
pub fn ppm_from_bytes(bytes: &[u8]) -> Result<DenseTensor> {
    let mut r = Reader::new(bytes);
    let magic = r.take(2, "image magic")?;
    if magic != b"P6" {
        return Err(Error::parse(0, "not a binary PPM (missing P6)"));
    }
    skip_ppm_separator(&mut r)?;
    let w = ppm_number(&mut r)?;
    skip_ppm_separator(&mut r)?;
    let h = ppm_number(&mut r)?;
    skip_ppm_separator(&mut r)?;
    let at = r.offset as u64;
    let maxval = ppm_number(&mut r)?;
    if maxval != 255 {
        return Err(Error::parse(at, format!("unsupported max value {maxval}, want 255")));
    }
    if w == 0 || h == 0 {
        return Err(Error::parse(2, "image extents must be positive"));
    }
    // Exactly one whitespace byte before the raster.
    let sep = r.take(1, "raster separator")?;
    if !matches!(sep[0], b' ' | b'\t' | b'\r' | b'\n') {
        return Err(Error::parse(r.offset as u64 - 1, "expected whitespace before raster"));
    }
    r.expect_items(h.checked_mul(w).ok_or_else(|| Error::parse(2, "image size overflows"))?, 3, "raster")?;
    let mut t = DenseTensor::zeros(&[h, w, 3])?;
    for i in 0..h {
        for j in 0..w {
            let px = r.take(3, "pixel")?;
            for (c, &b) in px.iter().enumerate() {
                t.data_mut()[i + j * h + c * h * w] = b as f64 / 255.0;
            }
        }
    }
    r.finish("image file")?;
    Ok(t)
}

/// Serializes an H x W x 3 tensor as binary PPM, clamping to `[0, 1]`
/// and rounding half away from zero to 8 bits.
pub fn ppm_to_bytes(t: &DenseTensor) -> Result<Vec<u8>> {
    if t.order() != 3 || t.dims()[2] != 3 {
        return Err(Error::shape("image tensor must be H x W x 3"));
    }
    let (h, w) = (t.dims()[0], t.dims()[1]);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * h * w);
    for i in 0..h {
        for j in 0..w {
            for c in 0..3 {
                let v = t.data()[i + j * h + c * h * w].clamp(0.0, 1.0);
                out.push((v * 255.0).round() as u8);
            }
        }
    }
    Ok(out)
}

pub fn read_ppm_file<P: AsRef<Path>>(path: P) -> Result<DenseTensor> {
    ppm_from_bytes(&fs::read(path)?)
}

pub fn write_ppm_file<P: AsRef<Path>>(path: P, t: &DenseTensor) -> Result<()> {
    Ok(fs::write(path, ppm_to_bytes(t)?)?)
}

/// Splits an H x W x 3 image into spatial blocks, producing the
/// fifth-order tensor (h1, w1, h2, w2, 3) with H = h1 h2, W = w1 w2.
/// The first factors index the position inside a block; a 512 x 512
/// image is typically split with `h1 = w1 = 16`.
pub fn vdt_tensorize(t: &DenseTensor, h1: usize, w1: usize) -> Result<DenseTensor> {
    if t.order() != 3 || t.dims()[2] != 3 {
        return Err(Error::shape("tensorization expects an H x W x 3 tensor"));
    }
    let (h, w) = (t.dims()[0], t.dims()[1]);
    if h1 == 0 || w1 == 0 || h % h1 != 0 || w % w1 != 0 {
        return Err(Error::invalid(format!(
            "block extents ({h1}, {w1}) must divide the image extents ({h}, {w})"
        )));
    }
    t.reshape(&[h1, h / h1, w1, w / w1, 3])?.permute(&[1, 3, 2, 4, 5])
}

/// Inverse of [`vdt_tensorize`]: (h1, w1, h2, w2, 3) back to
/// (h1 h2) x (w1 w2) x 3.
pub fn vdt_detensorize(t: &DenseTensor) -> Result<DenseTensor> {
    if t.order() != 5 || t.dims()[4] != 3 {
        return Err(Error::shape("detensorization expects an (h1, w1, h2, w2, 3) tensor"));
    }
    let d = t.dims().to_vec();
    t.permute(&[1, 3, 2, 4, 5])?.reshape(&[d[0] * d[2], d[1] * d[3], 3])
}
