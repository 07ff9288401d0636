//! Binary containers for boundary fields, half-space fields and cached
//! propagators, plus CSV import and export of boundary fields.
//!
//! Every container starts with the same header: the magic `HSBMO1`, then
//! `d`, `N` as little-endian `u64`, `h` as a little-endian `f64`, and the
//! component count `M` as `u64`. Complex values follow as `(re, im)` double
//! pairs in row-major node order with components innermost.
//!
//! * Boundary field: header, then `N^d·M` values.
//! * Half-space field: header, then a level table (`u64` count, the levels
//!   as `f64`), a `u64` gradient flag, the values level-major, and when the
//!   flag is 1 the gradient channels `∂_1 … ∂_d, ∂_t` per level.
//! * Propagator cache: header with `M` the component count, then one
//!   row-major `M×M` solvent block per frequency.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use hsbmo_core::extension::HalfSpaceField;
use hsbmo_core::grid::{BoundaryGrid, SampledField};
use hsbmo_core::kernels::{EllipticSystem, PoissonPropagator};
use hsbmo_core::C64;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 6] = b"HSBMO1";

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u64<R: Read>(r: &mut R) -> CliResult<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| bad(format!("truncated container: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> CliResult<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| bad(format!("truncated container: {e}")))?;
    Ok(f64::from_le_bytes(b))
}

fn write_values<W: Write>(w: &mut W, values: &[C64]) -> std::io::Result<()> {
    for z in values {
        write_f64(w, z.re)?;
        write_f64(w, z.im)?;
    }
    Ok(())
}

fn read_values<R: Read>(r: &mut R, count: usize) -> CliResult<Vec<C64>> {
    let mut bytes = vec![0u8; count * 16];
    r.read_exact(&mut bytes)
        .map_err(|e| bad(format!("container holds fewer than {count} values: {e}")))?;
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect())
}

fn expect_end<R: Read>(r: &mut R) -> CliResult<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(()),
        Ok(_) => Err(bad("trailing bytes after container payload")),
        Err(e) => Err(bad(format!("read failure: {e}"))),
    }
}

fn write_header<W: Write>(w: &mut W, grid: &BoundaryGrid, m: usize) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    write_u64(w, grid.dim() as u64)?;
    write_u64(w, grid.n() as u64)?;
    write_f64(w, grid.h())?;
    write_u64(w, m as u64)
}

/// Largest component count accepted from a header.
const MAX_COMPONENTS: u64 = 64;

fn read_header<R: Read>(r: &mut R) -> CliResult<(BoundaryGrid, usize)> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(|_| bad("file too short for a header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic, not an HSBMO1 container"));
    }
    let d = read_u64(r)?;
    let n = read_u64(r)?;
    let h = read_f64(r)?;
    let m = read_u64(r)?;
    if m == 0 || m > MAX_COMPONENTS {
        return Err(bad(format!("component count {m} out of range")));
    }
    if n > 1 << 20 {
        return Err(bad(format!("grid size {n} out of range")));
    }
    let grid = BoundaryGrid::new(d as usize, n as usize, h)?;
    Ok((grid, m as usize))
}

pub fn write_field<W: Write>(w: &mut W, f: &SampledField) -> std::io::Result<()> {
    write_header(w, f.grid(), f.components())?;
    write_values(w, f.values())
}

pub fn read_field<R: Read>(r: &mut R) -> CliResult<SampledField> {
    let (grid, m) = read_header(r)?;
    let values = read_values(r, grid.node_count() * m)?;
    expect_end(r)?;
    Ok(SampledField::new(grid, m, values)?)
}

pub fn write_half_space<W: Write>(w: &mut W, u: &HalfSpaceField) -> std::io::Result<()> {
    write_header(w, u.grid(), u.components())?;
    write_u64(w, u.levels().len() as u64)?;
    for &t in u.levels() {
        write_f64(w, t)?;
    }
    write_u64(w, u.has_gradient() as u64)?;
    write_values(w, u.values())?;
    if let Some(g) = u.gradient() {
        write_values(w, g)?;
    }
    Ok(())
}

/// Largest level count accepted from a level table.
const MAX_LEVELS: u64 = 4096;

pub fn read_half_space<R: Read>(r: &mut R) -> CliResult<HalfSpaceField> {
    let (grid, m) = read_header(r)?;
    let count = read_u64(r)?;
    if count == 0 || count > MAX_LEVELS {
        return Err(bad(format!("level count {count} out of range")));
    }
    let levels = (0..count).map(|_| read_f64(r)).collect::<CliResult<Vec<_>>>()?;
    let flag = read_u64(r)?;
    if flag > 1 {
        return Err(bad(format!("gradient flag {flag} is not 0 or 1")));
    }
    let size = grid.node_count() * m * levels.len();
    let values = read_values(r, size)?;
    let gradient = if flag == 1 {
        Some(read_values(r, size * (grid.dim() + 1))?)
    } else {
        None
    };
    expect_end(r)?;
    Ok(HalfSpaceField::new(grid, m, levels, values, gradient)?)
}

pub fn write_propagator_cache<W: Write>(w: &mut W, prop: &PoissonPropagator) -> std::io::Result<()> {
    write_header(w, prop.grid(), prop.components())?;
    write_values(w, prop.solvents())
}

/// Reads cached solvents for `system` and re-certifies them.
pub fn read_propagator_cache<R: Read>(r: &mut R, system: &EllipticSystem) -> CliResult<PoissonPropagator> {
    let (grid, m) = read_header(r)?;
    if m != system.components() {
        return Err(bad(format!(
            "cache holds {m}×{m} solvents, system `{}` has {} components",
            system.name(),
            system.components()
        )));
    }
    let solvents = read_values(r, grid.node_count() * m * m)?;
    expect_end(r)?;
    Ok(PoissonPropagator::from_solvents(system, &grid, solvents)?)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| CliError::io(path, e))?))
}

/// Writes through a buffered file and flushes.
pub fn save(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let mut w = create(path)?;
    write(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn load_field(path: &Path) -> CliResult<SampledField> {
    read_field(&mut open(path)?).map_err(|e| e.context(&path.display().to_string()))
}

pub fn load_half_space(path: &Path) -> CliResult<HalfSpaceField> {
    read_half_space(&mut open(path)?).map_err(|e| e.context(&path.display().to_string()))
}

pub fn load_propagator_cache(path: &Path, system: &EllipticSystem) -> CliResult<PoissonPropagator> {
    read_propagator_cache(&mut open(path)?, system).map_err(|e| e.context(&path.display().to_string()))
}

/// One row per node: coordinates `x1[,x2]`, then `re_β, im_β` per component.
pub fn write_field_csv<W: Write>(w: W, f: &SampledField) -> CliResult<()> {
    let grid = f.grid();
    let d = grid.dim();
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    for c in 0..f.components() {
        header.push(format!("re{c}"));
        header.push(format!("im{c}"));
    }
    out.write_record(&header).map_err(csv_err)?;
    for node in 0..grid.node_count() {
        let x = grid.coords(node);
        let mut row: Vec<String> = x[..d].iter().map(|v| format!("{v:e}")).collect();
        for z in f.node_values(node) {
            row.push(format!("{:e}", z.re));
            row.push(format!("{:e}", z.im));
        }
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush().map_err(|e| bad(format!("csv write failed: {e}")))
}

fn csv_err(e: csv::Error) -> CliError {
    bad(format!("csv: {e}"))
}

/// Reads a CSV written by [`write_field_csv`]; the grid is recovered from
/// the coordinate columns and must match the node layout exactly.
pub fn read_field_csv<R: Read>(r: R) -> CliResult<SampledField> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let d = header.iter().take_while(|c| c.starts_with('x')).count();
    if !(1..=2).contains(&d) {
        return Err(bad(format!("expected 1 or 2 coordinate columns, found {d}")));
    }
    let rest = header.len() - d;
    if rest == 0 || rest % 2 != 0 {
        return Err(bad("value columns must come in re/im pairs"));
    }
    let m = rest / 2;
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let nums = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("csv row {}: {e}", line + 2)))?;
        if nums.len() != header.len() {
            return Err(bad(format!("csv row {} has {} fields", line + 2, nums.len())));
        }
        coords.push([nums[0], if d == 2 { nums[1] } else { 0.0 }]);
        values.extend(nums[d..].chunks_exact(2).map(|p| C64::new(p[0], p[1])));
    }
    let rows = coords.len();
    let n = if d == 1 { rows } else { (rows as f64).sqrt().round() as usize };
    if n.pow(d as u32) != rows || n < 2 {
        return Err(bad(format!("{rows} rows do not form an N^{d} grid")));
    }
    // Node 1 sits one step along the last axis in either dimension.
    let h = coords[1][d - 1] - coords[0][d - 1];
    let grid = BoundaryGrid::new(d, n, h)?;
    let tol = 1e-9 * (n as f64 * h).max(1.0);
    for (node, x) in coords.iter().enumerate() {
        let want = grid.coords(node);
        if (0..d).any(|j| (want[j] - x[j]).abs() > tol) {
            return Err(bad(format!("csv row {} is not at the expected node", node + 2)));
        }
    }
    Ok(SampledField::new(grid, m, values)?)
}
