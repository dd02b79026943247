//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    4 bytes  b"DMCK"
//! version  u32      currently 1
//! n_dims   u32      number of layer widths, input and output included
//! dims     u32 × n_dims
//! act      u8       0 = tanh, 1 = sigmoid, 2 = softplus, 3 = scaled-tanh
//! params   f64 × n  every weight column-major in layer order, then biases
//! ```
//!
//! The parameter block is exactly the network's flattened form, so a
//! load/save round trip is bit-identical.

use std::io::{Read, Write};
use std::path::Path;

use deepmc::fcnn::{Activation, NetworkParams};
use deepmc::{Error, Result};

const MAGIC: [u8; 4] = *b"DMCK";
const VERSION: u32 = 1;

fn activation_tag(act: Activation) -> u8 {
    match act {
        Activation::Tanh => 0,
        Activation::Sigmoid => 1,
        Activation::Softplus => 2,
        Activation::ScaledTanh => 3,
    }
}

fn activation_from_tag(tag: u8) -> Result<Activation> {
    match tag {
        0 => Ok(Activation::Tanh),
        1 => Ok(Activation::Sigmoid),
        2 => Ok(Activation::Softplus),
        3 => Ok(Activation::ScaledTanh),
        other => Err(Error::data(format!("checkpoint has unknown activation tag {other}"))),
    }
}

/// Writes a network to `path` in the format above.
pub fn save_checkpoint(path: &Path, params: &NetworkParams) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let dims = params.dims();
    buf.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        let d32 = u32::try_from(d)
            .map_err(|_| Error::data(format!("layer width {d} does not fit a checkpoint field")))?;
        buf.extend_from_slice(&d32.to_le_bytes());
    }
    buf.push(activation_tag(params.activation));
    for v in params.flatten() {
        buf.extend_from_slice(&v.to_le_bytes());
    }

    let mut file = std::fs::File::create(path)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(&buf)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Reads a network back from `path`, validating the header.
pub fn load_checkpoint(path: &Path) -> Result<NetworkParams> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let mut cursor = Cursor::new(&bytes, path);

    if cursor.take(4)? != MAGIC {
        return Err(Error::data(format!(
            "{} is not a model checkpoint (bad magic)",
            path.display()
        )));
    }
    let version = u32::from_le_bytes(cursor.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::data(format!(
            "{}: unsupported checkpoint version {version} (expected {VERSION})",
            path.display()
        )));
    }
    let n_dims = u32::from_le_bytes(cursor.take(4)?.try_into().unwrap()) as usize;
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        dims.push(u32::from_le_bytes(cursor.take(4)?.try_into().unwrap()) as usize);
    }
    let activation = activation_from_tag(cursor.take(1)?[0])?;

    let remaining = cursor.rest();
    if remaining.len() % 8 != 0 {
        return Err(Error::data(format!(
            "{}: parameter block is {} bytes, not a multiple of 8",
            path.display(),
            remaining.len()
        )));
    }
    let theta: Vec<f64> = remaining
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();

    if dims.len() >= 2 {
        let needed: usize = (0..dims.len() - 1).map(|l| dims[l + 1] * (dims[l] + 1)).sum();
        if theta.len() != needed {
            return Err(Error::data(format!(
                "{}: checkpoint holds {} parameters but the {} network needs {needed}",
                path.display(),
                theta.len(),
                dims.iter().map(ToString::to_string).collect::<Vec<_>>().join("-"),
            )));
        }
    }
    NetworkParams::unflatten(&dims, activation, &theta)
        .map_err(|e| Error::data(format!("{}: invalid checkpoint structure: {e}", path.display())))
}

/// Byte reader that reports truncation as a data error.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        Cursor { bytes, pos: 0, path }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::data(format!(
                "{}: checkpoint truncated at byte {}",
                self.path.display(),
                self.bytes.len()
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

// ─── tests ───
