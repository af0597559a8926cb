//! Flow model checkpoints.
//!
//! A checkpoint is a single little-endian binary file:
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"LAMFLOW1"
//! 8       4     version (u32, currently 1)
//! 12      4     dim (u32)
//! 16      4     flow_width (u32)
//! 20      4     hidden_width (u32)
//! 24      4     n_steps (u32)
//! 28      8     t_start (f64)
//! 36      8     t_end (f64)
//! 44      —     data_shift   dim × f64
//!         —     data_scale   dim × f64
//!         —     weights_in   hidden_width × f64
//!         —     bias_in      hidden_width × f64
//!         —     weights_out  (flow_width·(2·dim+1)) × hidden_width × f64, row-major
//!         —     bias_out     (flow_width·(2·dim+1)) × f64
//! ```
//!
//! Floats are stored bit-for-bit, so save/load round-trips are exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{FlowModel, HyperNetwork};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LAMFLOW1";
const VERSION: u32 = 1;

impl FlowModel {
    /// Serialize to `path` (written atomically: temp file + rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(64 + 8 * self.hypernet.n_params());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        for v in [
            self.dim,
            self.hypernet.flow_width,
            self.hypernet.hidden_width,
            self.n_steps,
        ] {
            buf.extend_from_slice(&(v as u32).to_le_bytes());
        }
        buf.extend_from_slice(&self.t_start.to_le_bytes());
        buf.extend_from_slice(&self.t_end.to_le_bytes());
        let arrays: [&[f64]; 6] = [
            self.data_shift.as_slice().expect("contiguous"),
            self.data_scale.as_slice().expect("contiguous"),
            self.hypernet.weights_in.as_slice().expect("contiguous"),
            self.hypernet.bias_in.as_slice().expect("contiguous"),
            self.hypernet.weights_out.as_slice().expect("contiguous"),
            self.hypernet.bias_out.as_slice().expect("contiguous"),
        ];
        for arr in arrays {
            for v in arr {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        write_atomic(path, &buf)
    }

    /// Load a checkpoint written by [`Self::save`].
    pub fn load(path: &Path) -> Result<FlowModel> {
        let bytes = fs::read(path)?;
        let mut cur = Cursor {
            bytes: &bytes,
            pos: 0,
        };
        if cur.take(8)? != MAGIC {
            return Err(Error::BadFormat(format!(
                "{}: not a flow checkpoint",
                path.display()
            )));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(Error::BadFormat(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let dim = cur.u32()? as usize;
        let flow_width = cur.u32()? as usize;
        let hidden_width = cur.u32()? as usize;
        let n_steps = cur.u32()? as usize;
        let t_start = cur.f64()?;
        let t_end = cur.f64()?;
        let o = flow_width * (2 * dim + 1);
        let data_shift = Array1::from_vec(cur.f64s(dim)?);
        let data_scale = Array1::from_vec(cur.f64s(dim)?);
        let weights_in = Array1::from_vec(cur.f64s(hidden_width)?);
        let bias_in = Array1::from_vec(cur.f64s(hidden_width)?);
        let weights_out = Array2::from_shape_vec((o, hidden_width), cur.f64s(o * hidden_width)?)
            .expect("shape follows from header");
        let bias_out = Array1::from_vec(cur.f64s(o)?);
        if cur.pos != bytes.len() {
            return Err(Error::BadFormat(format!(
                "{} trailing bytes after checkpoint payload",
                bytes.len() - cur.pos
            )));
        }
        Ok(FlowModel {
            hypernet: HyperNetwork {
                dim,
                flow_width,
                hidden_width,
                weights_in,
                bias_in,
                weights_out,
                bias_out,
            },
            dim,
            t_start,
            t_end,
            n_steps,
            data_shift,
            data_scale,
        })
    }
}

/// Write `bytes` to `path` via a temp file in the same directory plus rename,
/// so readers never observe a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default()
        )),
        None => Path::new(&format!(".{}.tmp", path.display())).to_path_buf(),
    };
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::BadFormat("checkpoint truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("length 4"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("length 8"),
        ))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * n)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("length 8")))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = HyperNetwork::init(3, 4, 6, &mut rng);
        let mut model = FlowModel::with_identity_standardization(net, 48);
        model.data_shift = ndarray::array![0.1, -2.5, 3.75];
        model.data_scale = ndarray::array![1.5, 0.25, 2.0];
        let dir = std::env::temp_dir().join("laminar_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        model.save(&path).unwrap();
        let loaded = FlowModel::load(&path).unwrap();
        assert_eq!(model.hypernet.params_flat(), loaded.hypernet.params_flat());
        assert_eq!(model.data_shift, loaded.data_shift);
        assert_eq!(model.data_scale, loaded.data_scale);
        assert_eq!(model.n_steps, loaded.n_steps);
        assert_eq!(model.t_start.to_bits(), loaded.t_start.to_bits());
        // byte-identical re-save
        let bytes1 = std::fs::read(&path).unwrap();
        loaded.save(&path).unwrap();
        let bytes2 = std::fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn rejects_garbage() {
        let dir = std::env::temp_dir().join("laminar_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("garbage.ckpt");
        std::fs::write(&path, b"not a checkpoint at all").unwrap();
        assert!(matches!(FlowModel::load(&path), Err(Error::BadFormat(_))));
    }
}
