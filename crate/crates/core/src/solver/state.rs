use std::io::Read;

use super::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ERCT";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub fields: Vec<Field>,
    pub t: f64,
    /// Step size proposed for the next attempt.
    pub dt: f64,
    pub accepted: u64,
    pub rejected: u64,
}

impl SimulationState {
    pub fn grid(&self) -> Grid {
        *self.fields[0].grid()
    }

    pub fn values(&self) -> Vec<&[f64]> {
        self.fields.iter().map(|f| f.values()).collect()
    }

    /// Concentrations in one cell.
    pub fn cell(&self, idx: usize) -> Vec<f64> {
        self.fields.iter().map(|f| f.values()[idx]).collect()
    }
}

/// Samples every initial profile at cell centres.
pub fn init_state(config: &SimulationConfig) -> Result<SimulationState> {
    config.validate()?;
    let fields = config
        .initial
        .iter()
        .enumerate()
        .map(|(i, p)| p.sample(config.grid, config.seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationState {
        fields,
        t: 0.0,
        dt: config.control.dt_init,
        accepted: 0,
        rejected: 0,
    })
}

/// Layout, all little-endian: magic, version u16, dim u8, nx u64, ny u64,
/// lx f64, ly f64, t f64, dt f64, accepted u64, rejected u64, species u64,
/// cell data species by species, CRC-32 of everything before it.
pub fn save_checkpoint(state: &SimulationState) -> Vec<u8> {
    let grid = state.grid();
    let mut out = Vec::with_capacity(80 + 8 * grid.n_cells() * state.fields.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(grid.dim() as u8);
    for n in grid.cells() {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for l in grid.lengths() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&state.t.to_le_bytes());
    out.extend_from_slice(&state.dt.to_le_bytes());
    out.extend_from_slice(&state.accepted.to_le_bytes());
    out.extend_from_slice(&state.rejected.to_le_bytes());
    out.extend_from_slice(&(state.fields.len() as u64).to_le_bytes());
    for f in &state.fields {
        for v in f.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::CheckpointPayload("unexpected end of data".into()))?;
        self.pos = end;
        Ok(chunk.try_into().expect("length checked"))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<SimulationState> {
    if bytes.len() < 6 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::CheckpointMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    if bytes.len() < 10 {
        return Err(Error::CheckpointChecksum);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("four bytes"));
    if crc32fast::hash(body) != stored {
        return Err(Error::CheckpointChecksum);
    }
    let mut c = Cursor { bytes: body, pos: 6 };
    let [dim] = c.take::<1>()?;
    let nx = c.u64()? as usize;
    let ny = c.u64()? as usize;
    let lx = c.f64()?;
    let ly = c.f64()?;
    let grid = match dim {
        1 => Grid::interval(lx, nx)?,
        2 => Grid::rectangle(lx, ly, nx, ny)?,
        d => return Err(Error::CheckpointPayload(format!("dimension {d}"))),
    };
    if dim == 1 && ny != 1 {
        return Err(Error::CheckpointPayload("one-dimensional grid with ny != 1".into()));
    }
    let t = c.f64()?;
    let dt = c.f64()?;
    let accepted = c.u64()?;
    let rejected = c.u64()?;
    let species = c.u64()? as usize;
    let cells = grid.n_cells();
    let expected = species
        .checked_mul(cells)
        .and_then(|k| k.checked_mul(8))
        .ok_or_else(|| Error::CheckpointPayload("size overflow".into()))?;
    if species == 0 || body.len() - c.pos != expected {
        return Err(Error::CheckpointPayload(format!(
            "expected {expected} bytes of cell data for {species} species, found {}",
            body.len() - c.pos
        )));
    }
    let mut fields = Vec::with_capacity(species);
    for _ in 0..species {
        let values = (0..cells).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
        fields.push(Field::new(grid, values).map_err(|e| Error::CheckpointPayload(e.to_string()))?);
    }
    Ok(SimulationState {
        fields,
        t,
        dt,
        accepted,
        rejected,
    })
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<SimulationState> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    load_checkpoint(&bytes)
}
