use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{GridSpec, SpectralParams, TurbulenceBox, TurbulenceError};

pub const BOX_MAGIC: [u8; 8] = *b"MANNBOX\0";
pub const BOX_FORMAT_VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> TurbulenceError {
    TurbulenceError::Io(e.to_string())
}

/// Writes the little-endian box format: magic, version, `N1 N2 N3` (u64),
/// extents, `(αε^{2/3}, L, Γ)`, seed (u64), then component-major f64 data.
pub fn write_box<W: Write>(mut w: W, b: &TurbulenceBox) -> Result<(), TurbulenceError> {
    w.write_all(&BOX_MAGIC).map_err(io_err)?;
    w.write_u32::<LittleEndian>(BOX_FORMAT_VERSION).map_err(io_err)?;
    for n in b.grid.counts {
        w.write_u64::<LittleEndian>(n as u64).map_err(io_err)?;
    }
    for l in b.grid.extents {
        w.write_f64::<LittleEndian>(l).map_err(io_err)?;
    }
    for x in [b.params.energy_coefficient, b.params.length_scale, b.params.anisotropy] {
        w.write_f64::<LittleEndian>(x).map_err(io_err)?;
    }
    w.write_u64::<LittleEndian>(b.seed).map_err(io_err)?;
    for &x in b.data() {
        w.write_f64::<LittleEndian>(x).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_box<R: Read>(mut r: R) -> Result<TurbulenceBox, TurbulenceError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if magic != BOX_MAGIC {
        return Err(TurbulenceError::Format("bad magic".into()));
    }
    let version = r.read_u32::<LittleEndian>().map_err(io_err)?;
    if version != BOX_FORMAT_VERSION {
        return Err(TurbulenceError::Format(format!("unsupported version {version}")));
    }
    let mut counts = [0usize; 3];
    for n in counts.iter_mut() {
        let v = r.read_u64::<LittleEndian>().map_err(io_err)?;
        *n = usize::try_from(v).map_err(|_| TurbulenceError::Format("grid count overflow".into()))?;
    }
    let mut extents = [0.0; 3];
    for l in extents.iter_mut() {
        *l = r.read_f64::<LittleEndian>().map_err(io_err)?;
    }
    let mut p = [0.0; 3];
    for x in p.iter_mut() {
        *x = r.read_f64::<LittleEndian>().map_err(io_err)?;
    }
    let seed = r.read_u64::<LittleEndian>().map_err(io_err)?;
    let grid = GridSpec::new(counts, extents).map_err(|e| TurbulenceError::Format(e.to_string()))?;
    let params = SpectralParams::new(p[0], p[1], p[2]).map_err(|e| TurbulenceError::Format(e.to_string()))?;
    let mut data = vec![0.0; 3 * grid.len()];
    r.read_f64_into::<LittleEndian>(&mut data).map_err(io_err)?;
    TurbulenceBox::from_data(grid, params, seed, data)
}

pub fn write_box_file(path: &Path, b: &TurbulenceBox) -> Result<(), TurbulenceError> {
    let f = std::fs::File::create(path).map_err(io_err)?;
    write_box(std::io::BufWriter::new(f), b)
}

pub fn read_box_file(path: &Path) -> Result<TurbulenceBox, TurbulenceError> {
    let f = std::fs::File::open(path).map_err(io_err)?;
    read_box(std::io::BufReader::new(f))
}
