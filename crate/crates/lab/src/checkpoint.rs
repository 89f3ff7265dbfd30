//! Bit-exact `KGZL` checkpoints.
//!
//! Layout (little-endian): `"KGZL"`, `u32` version, `u64 nr`, `f64 dr`,
//! `f64 dt`, `f64 t`, `u32` component count, then per component a 16-byte
//! NUL-padded ASCII name, `nr` amplitudes and `nr` time derivatives. The time
//! derivative is the solver's backward velocity `(w^n - w^{n-1}) / dt`, so
//! the record pins the latest two levels exactly.

use std::path::Path;

use kgz_core::evolve::{KgzTrajectory, SolverConfig, SolverState};
use kgz_core::radial::RadialGrid;

use crate::error::{LabError, LabResult};

pub const MAGIC: &[u8; 4] = b"KGZL";
pub const VERSION: u32 = 1;
const NAME_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointComponent {
    pub name: String,
    pub w: Vec<f64>,
    pub wt: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub nr: u64,
    pub dr: f64,
    pub dt: f64,
    pub t: f64,
    pub components: Vec<CheckpointComponent>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("bad magic bytes (not a KGZL checkpoint)")]
    Magic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("{0} trailing bytes after the last component")]
    Trailing(usize),
    #[error("component name `{0}` is not ASCII or longer than 16 bytes")]
    Name(String),
    #[error("array length {got} differs from nr = {nr}")]
    Length { nr: u64, got: usize },
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        let end = end.ok_or(CheckpointError::Truncated(self.buf.len()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn array(&mut self, n: u64) -> Result<Vec<f64>, CheckpointError> {
        let bytes = usize::try_from(n)
            .ok()
            .and_then(|n| n.checked_mul(8))
            .ok_or(CheckpointError::Truncated(self.buf.len()))?;
        let raw = self.take(bytes)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

impl Checkpoint {
    pub fn from_state(state: &SolverState) -> Self {
        Self {
            nr: state.grid.nr() as u64,
            dr: state.grid.dr(),
            dt: state.dt,
            t: state.t,
            components: state
                .names
                .iter()
                .zip(state.w.iter().zip(&state.v))
                .map(|(n, (w, v))| CheckpointComponent {
                    name: n.clone(),
                    w: w.clone(),
                    wt: v.clone(),
                })
                .collect(),
        }
    }

    pub fn from_trajectory(traj: &KgzTrajectory) -> Self {
        Self::from_state(&traj.final_state)
    }

    /// Solver state for a run described by `cfg`; the level is recovered
    /// from `t`.
    pub fn to_state(&self, cfg: &SolverConfig) -> LabResult<SolverState> {
        let grid = RadialGrid::new(self.nr as usize, self.dr).map_err(|e| LabError::numerical("checkpoint", e))?;
        let level = ((self.t - cfg.t0) / self.dt).round() as i64;
        Ok(SolverState {
            grid,
            dt: self.dt,
            t: self.t,
            level,
            names: self.components.iter().map(|c| c.name.clone()).collect(),
            w: self.components.iter().map(|c| c.w.clone()).collect(),
            v: self.components.iter().map(|c| c.wt.clone()).collect(),
        })
    }

    pub fn encode(&self) -> Result<Vec<u8>, CheckpointError> {
        let nr = self.nr as usize;
        let mut out = Vec::with_capacity(40 + self.components.len() * (NAME_LEN + 16 * nr));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.nr.to_le_bytes());
        out.extend_from_slice(&self.dr.to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&(self.components.len() as u32).to_le_bytes());
        for c in &self.components {
            if !c.name.is_ascii() || c.name.len() > NAME_LEN || c.name.contains('\0') {
                return Err(CheckpointError::Name(c.name.clone()));
            }
            let mut name = [0u8; NAME_LEN];
            name[..c.name.len()].copy_from_slice(c.name.as_bytes());
            out.extend_from_slice(&name);
            for a in [&c.w, &c.wt] {
                if a.len() != nr {
                    return Err(CheckpointError::Length {
                        nr: self.nr,
                        got: a.len(),
                    });
                }
                for x in a.iter() {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn decode(buf: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4).map_err(|_| CheckpointError::Magic)? != MAGIC {
            return Err(CheckpointError::Magic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let nr = r.u64()?;
        let (dr, dt, t) = (r.f64()?, r.f64()?, r.f64()?);
        let count = r.u32()?;
        let mut components = Vec::new();
        for _ in 0..count {
            let raw = r.take(NAME_LEN)?;
            let end = raw.iter().position(|b| *b == 0).unwrap_or(NAME_LEN);
            let name = std::str::from_utf8(&raw[..end])
                .ok()
                .filter(|s| s.is_ascii())
                .ok_or_else(|| CheckpointError::Name(String::from_utf8_lossy(raw).into_owned()))?
                .to_string();
            let w = r.array(nr)?;
            let wt = r.array(nr)?;
            components.push(CheckpointComponent { name, w, wt });
        }
        if r.pos != buf.len() {
            return Err(CheckpointError::Trailing(buf.len() - r.pos));
        }
        Ok(Self {
            nr,
            dr,
            dt,
            t,
            components,
        })
    }
}

fn format_err(path: &Path, e: CheckpointError) -> LabError {
    LabError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

pub fn checkpoint_save(traj: &KgzTrajectory, path: &Path) -> LabResult<()> {
    save(&Checkpoint::from_trajectory(traj), path)
}

pub fn save(ck: &Checkpoint, path: &Path) -> LabResult<()> {
    let bytes = ck.encode().map_err(|e| format_err(path, e))?;
    std::fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

pub fn checkpoint_load(path: &Path) -> LabResult<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| LabError::io(path, e))?;
    Checkpoint::decode(&bytes).map_err(|e| format_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            nr: 3,
            dr: 0.1,
            dt: 0.09,
            t: 1.25,
            components: vec![
                CheckpointComponent {
                    name: "e".into(),
                    w: vec![1.0, -0.0, f64::MIN_POSITIVE],
                    wt: vec![0.5, 1e-300, -2.0],
                },
                CheckpointComponent {
                    name: "n0".into(),
                    w: vec![0.0; 3],
                    wt: vec![3.0; 3],
                },
            ],
        }
    }

    #[test]
    fn header_layout() {
        let b = sample().encode().unwrap();
        assert_eq!(&b[..4], b"KGZL");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(b[8..16].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(b[16..24].try_into().unwrap()), 0.1);
        assert_eq!(u32::from_le_bytes(b[40..44].try_into().unwrap()), 2);
        assert_eq!(&b[44..46], b"e\0");
        assert_eq!(b.len(), 44 + 2 * (16 + 2 * 3 * 8));
    }

    #[test]
    fn decode_encode_is_identity() {
        let b = sample().encode().unwrap();
        let d = Checkpoint::decode(&b).unwrap();
        assert_eq!(d.encode().unwrap(), b);
        assert_eq!(d.components[0].w[1].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn corrupt_inputs_are_explicit_errors() {
        let mut b = sample().encode().unwrap();
        assert_eq!(
            Checkpoint::decode(&b[..b.len() - 1]),
            Err(CheckpointError::Truncated(b.len() - 1))
        );
        assert_eq!(Checkpoint::decode(b"KG"), Err(CheckpointError::Magic));
        b[4] = 2;
        assert_eq!(Checkpoint::decode(&b), Err(CheckpointError::Version(2)));
        b[4] = 1;
        b[0] = b'X';
        assert_eq!(Checkpoint::decode(&b), Err(CheckpointError::Magic));
    }

    #[test]
    fn long_names_are_rejected() {
        let mut c = sample();
        c.components[0].name = "a_name_longer_than_16".into();
        assert!(matches!(c.encode(), Err(CheckpointError::Name(_))));
    }
}
