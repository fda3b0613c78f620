//! Named-parameter access and the binary parameter payload.
//!
//! Payload layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "LNMAP001"
//! entry*  u16 name length, UTF-8 name,
//!         u32 rank, rank * u32 dims,
//!         row-major f64 values
//! ```
//!
//! Entry order is fixed by the owner of the parameters (see
//! `model::LatentMapModel::MANIFEST` for the trained model), which makes
//! encoded payloads byte-for-byte reproducible.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Error;
use crate::Result;

/// File magic for parameter payloads.
pub const PARAM_MAGIC: &[u8; 8] = b"LNMAP001";

/// Visitor receiving `(name, dims, values, grads)` per tensor.
pub type ParamVisitor<'a> = dyn FnMut(&str, &[usize], &[f64], &[f64]) + 'a;
/// Mutable variant of [`ParamVisitor`].
pub type ParamVisitorMut<'a> = dyn FnMut(&str, &[usize], &mut [f64], &mut [f64]) + 'a;

/// Anything that exposes named parameter tensors with gradients.
pub trait Parameters {
    /// Visits every tensor in a stable order.
    fn visit(&self, f: &mut ParamVisitor<'_>);

    /// Mutable variant of [`Parameters::visit`]; must use the same order.
    fn visit_mut(&mut self, f: &mut ParamVisitorMut<'_>);
}

/// Total number of scalar parameters.
pub fn param_count(p: &impl Parameters) -> usize {
    let mut n = 0;
    p.visit(&mut |_, _, values, _| n += values.len());
    n
}

/// `(name, scalar count)` per tensor, in visit order.
pub fn layout(p: &impl Parameters) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    p.visit(&mut |name, _, values, _| out.push((name.to_string(), values.len())));
    out
}

/// All parameters concatenated in visit order.
pub fn flatten_params(p: &impl Parameters) -> Vec<f64> {
    let mut out = Vec::new();
    p.visit(&mut |_, _, values, _| out.extend_from_slice(values));
    out
}

/// All gradients concatenated in visit order.
pub fn flatten_grads(p: &impl Parameters) -> Vec<f64> {
    let mut out = Vec::new();
    p.visit(&mut |_, _, _, grads| out.extend_from_slice(grads));
    out
}

/// Writes a flat parameter vector back (inverse of [`flatten_params`]).
pub fn load_flat_params(p: &mut impl Parameters, flat: &[f64]) -> Result<()> {
    let mut offset = 0;
    let mut overrun = false;
    p.visit_mut(&mut |_, _, values, _| {
        if offset + values.len() <= flat.len() {
            values.copy_from_slice(&flat[offset..offset + values.len()]);
        } else {
            overrun = true;
        }
        offset += values.len();
    });
    if overrun || offset != flat.len() {
        return Err(Error::ParameterMismatch {
            name: String::from("<flat>"),
            reason: alloc::format!("expected {offset} scalars, got {}", flat.len()),
        });
    }
    Ok(())
}

/// Zeroes every gradient accumulator.
pub fn zero_grads(p: &mut impl Parameters) {
    p.visit_mut(&mut |_, _, _, grads| grads.fill(0.0));
}

/// One named tensor of an encoded payload.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

/// Snapshot of all parameters as named tensors, in visit order.
pub fn export_tensors(p: &impl Parameters) -> Vec<NamedTensor> {
    let mut out = Vec::new();
    p.visit(&mut |name, dims, values, _| {
        out.push(NamedTensor {
            name: name.to_string(),
            dims: dims.to_vec(),
            values: values.to_vec(),
        })
    });
    out
}

/// Loads named tensors back into `p`. Every visited tensor must be present
/// with matching dims, and no extra tensors may remain.
pub fn import_tensors(p: &mut impl Parameters, tensors: &[NamedTensor]) -> Result<()> {
    let mut used = alloc::vec![false; tensors.len()];
    let mut error: Option<Error> = None;
    p.visit_mut(&mut |name, dims, values, _| {
        if error.is_some() {
            return;
        }
        let found = tensors
            .iter()
            .enumerate()
            .find(|(i, t)| !used[*i] && t.name == name);
        match found {
            Some((i, t)) => {
                if t.dims != dims || t.values.len() != values.len() {
                    error = Some(Error::ParameterMismatch {
                        name: name.to_string(),
                        reason: alloc::format!("dims {:?} do not match expected {:?}", t.dims, dims),
                    });
                    return;
                }
                values.copy_from_slice(&t.values);
                used[i] = true;
            }
            None => {
                error = Some(Error::ParameterMismatch {
                    name: name.to_string(),
                    reason: String::from("missing from payload"),
                });
            }
        }
    });
    if let Some(e) = error {
        return Err(e);
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(Error::ParameterMismatch {
            name: tensors[i].name.clone(),
            reason: String::from("unexpected tensor in payload"),
        });
    }
    Ok(())
}

/// Encodes named tensors into the binary payload.
pub fn encode_payload(tensors: &[NamedTensor]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(PARAM_MAGIC);
    for t in tensors {
        let name = t.name.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
        for &d in &t.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &t.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decodes a binary payload back into named tensors.
pub fn decode_payload(bytes: &[u8]) -> Result<Vec<NamedTensor>> {
    let mut cursor = Cursor { bytes, offset: 0 };
    let magic = cursor.take(8, "magic")?;
    if magic != PARAM_MAGIC {
        return Err(Error::MalformedPayload {
            offset: 0,
            reason: String::from("bad magic, expected LNMAP001"),
        });
    }
    let mut tensors = Vec::new();
    while !cursor.done() {
        let name_len = u16::from_le_bytes(cursor.take_array::<2>("name length")?) as usize;
        let name_bytes = cursor.take(name_len, "name")?;
        let name = core::str::from_utf8(name_bytes)
            .map_err(|_| Error::MalformedPayload {
                offset: cursor.offset,
                reason: String::from("name is not UTF-8"),
            })?
            .to_string();
        let rank = u32::from_le_bytes(cursor.take_array::<4>("rank")?) as usize;
        if rank > 4 {
            return Err(Error::MalformedPayload {
                offset: cursor.offset,
                reason: alloc::format!("implausible rank {rank}"),
            });
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(u32::from_le_bytes(cursor.take_array::<4>("dim")?) as usize);
        }
        let count: usize = dims.iter().product();
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(f64::from_le_bytes(cursor.take_array::<8>("value")?));
        }
        tensors.push(NamedTensor { name, dims, values });
    }
    Ok(tensors)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn done(&self) -> bool {
        self.offset == self.bytes.len()
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.offset + n > self.bytes.len() {
            return Err(Error::MalformedPayload {
                offset: self.offset,
                reason: alloc::format!("truncated while reading {what}"),
            });
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn take_array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let slice = self.take(N, what)?;
        let mut arr = [0u8; N];
        arr.copy_from_slice(slice);
        Ok(arr)
    }
}
