use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VOXG";
const FORMAT_VERSION: u32 = 1;

/// Periodic two-phase voxel microstructure. Phase ids are 0 and 1; voxels are
/// stored with the first index running fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    cell: [f64; 3],
    phases: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InclusionShape {
    Sphere,
    /// Circular cylinder spanning the cell along the given axis.
    Cylinder { axis: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub dims: [usize; 3],
    pub cell_size: [f64; 3],
    pub phase_count: u32,
    pub fractions: [f64; 2],
    pub payload_sha256: String,
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], cell: [f64; 3], phases: Vec<u8>) -> Result<Self> {
        if dims.iter().any(|&n| n == 0) {
            return Err(Error::InvalidInput(format!("grid dimensions {dims:?} must be positive")));
        }
        if cell.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidInput(format!("cell lengths {cell:?} must be positive")));
        }
        if phases.len() != dims.iter().product::<usize>() {
            return Err(Error::InvalidInput(format!(
                "{} phase ids for a {dims:?} grid",
                phases.len()
            )));
        }
        if let Some(p) = phases.iter().find(|&&p| p > 1) {
            return Err(Error::InvalidInput(format!("phase id {p} outside {{0, 1}}")));
        }
        Ok(Self { dims, cell, phases })
    }

    pub fn uniform(dims: [usize; 3], phase: u8) -> Result<Self> {
        Self::new(dims, [1.0; 3], vec![phase; dims.iter().product()])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell(&self) -> [f64; 3] {
        self.cell
    }

    pub fn with_cell(mut self, cell: [f64; 3]) -> Result<Self> {
        self.cell = cell;
        Self::new(self.dims, self.cell, self.phases)
    }

    pub fn phases(&self) -> &[u8] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Volume fraction of a phase id.
    pub fn fraction(&self, phase: u8) -> f64 {
        self.phases.iter().filter(|&&p| p == phase).count() as f64 / self.len() as f64
    }

    /// Cyclic shift by `offset` voxels along each axis.
    pub fn shifted(&self, offset: [usize; 3]) -> Self {
        let [n0, n1, n2] = self.dims;
        let mut phases = vec![0; self.len()];
        for k in 0..n2 {
            for j in 0..n1 {
                for i in 0..n0 {
                    let to = self.index((i + offset[0]) % n0, (j + offset[1]) % n1, (k + offset[2]) % n2);
                    phases[to] = self.phases[self.index(i, j, k)];
                }
            }
        }
        Self { dims: self.dims, cell: self.cell, phases }
    }

    /// Layers normal to `axis`; the first `round(c₁·N)` layers carry phase 0.
    pub fn laminate(dims: [usize; 3], axis: usize, fraction0: f64) -> Result<Self> {
        check_axis(axis)?;
        check_fraction(fraction0)?;
        let layers = (fraction0 * dims[axis] as f64).round() as usize;
        let mut grid = Self::uniform(dims, 1)?;
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    if [i, j, k][axis] < layers {
                        let at = grid.index(i, j, k);
                        grid.phases[at] = 0;
                    }
                }
            }
        }
        Ok(grid)
    }

    /// Centered inclusion of phase 0 in a phase-1 matrix, built from the
    /// `round(f·N)` voxels closest to the center (or to the cylinder axis).
    pub fn inclusion(dims: [usize; 3], cell: [f64; 3], shape: InclusionShape, fraction0: f64) -> Result<Self> {
        check_fraction(fraction0)?;
        let limit = packing_limit(shape, cell)?;
        if fraction0 > limit {
            return Err(Error::InvalidInput(format!(
                "fraction {fraction0} exceeds the packing limit {limit:.4} of the inclusion"
            )));
        }
        let mut grid = Self::new(dims, cell, vec![1; dims.iter().product()])?;
        let center = |m: usize, a: usize| ((m as f64 + 0.5) / dims[a] as f64 - 0.5) * cell[a];
        let mut ranked: Vec<(f64, usize, usize, usize)> = Vec::with_capacity(grid.len());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let x = [center(i, 0), center(j, 1), center(k, 2)];
                    let at = grid.index(i, j, k);
                    let (dist, across, along) = match shape {
                        InclusionShape::Sphere => (x.iter().map(|v| v * v).sum::<f64>(), at, 0),
                        InclusionShape::Cylinder { axis } => {
                            let d = (0..3).filter(|&a| a != axis).map(|a| x[a] * x[a]).sum::<f64>();
                            let ijk = [i, j, k];
                            let across = (0..3).filter(|&a| a != axis).fold(0, |acc, a| acc * dims[a] + ijk[a]);
                            (d, across, ijk[axis])
                        }
                    };
                    ranked.push((dist, across, along, at));
                }
            }
        }
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let count = (fraction0 * grid.len() as f64).round() as usize;
        for (.., at) in &ranked[..count] {
            grid.phases[*at] = 0;
        }
        Ok(grid)
    }

    /// Writes the binary grid file and a JSON sidecar next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        for n in self.dims {
            out.write_all(&(n as u32).to_le_bytes())?;
        }
        for l in self.cell {
            out.write_all(&l.to_le_bytes())?;
        }
        out.write_all(&2u32.to_le_bytes())?;
        out.write_all(&self.phases)?;
        out.flush()?;
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&self.sidecar())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let schema = |msg: &str| Error::Schema(format!("{}: {msg}", path.display()));
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let header = 4 + 4 + 12 + 24 + 4;
        if bytes.len() < header || &bytes[..4] != MAGIC {
            return Err(schema("not a voxel grid file"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        if u32_at(4) != FORMAT_VERSION {
            return Err(schema("unsupported format version"));
        }
        let dims = [u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize];
        let cell = [f64_at(20), f64_at(28), f64_at(36)];
        if u32_at(44) != 2 {
            return Err(schema("only two-phase grids are supported"));
        }
        let grid = Self::new(dims, cell, bytes[header..].to_vec()).map_err(|e| schema(&e.to_string()))?;
        let sidecar = sidecar_path(path);
        if sidecar.exists() {
            let meta: GridSidecar = serde_json::from_str(&std::fs::read_to_string(&sidecar)?)
                .map_err(|e| schema(&format!("sidecar: {e}")))?;
            if meta.payload_sha256 != grid.sidecar().payload_sha256 {
                return Err(schema("payload checksum does not match the sidecar"));
            }
        }
        Ok(grid)
    }

    pub fn sidecar(&self) -> GridSidecar {
        GridSidecar {
            dims: self.dims,
            cell_size: self.cell,
            phase_count: 2,
            fractions: [self.fraction(0), self.fraction(1)],
            payload_sha256: hex::encode(Sha256::digest(&self.phases)),
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn check_axis(axis: usize) -> Result<()> {
    if axis > 2 {
        return Err(Error::InvalidInput(format!("axis {axis} outside 0..=2")));
    }
    Ok(())
}

fn check_fraction(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidInput(format!("volume fraction {f} outside [0, 1]")));
    }
    Ok(())
}

fn packing_limit(shape: InclusionShape, cell: [f64; 3]) -> Result<f64> {
    Ok(match shape {
        InclusionShape::Sphere => {
            let d = cell.iter().copied().fold(f64::INFINITY, f64::min);
            PI / 6.0 * d.powi(3) / cell.iter().product::<f64>()
        }
        InclusionShape::Cylinder { axis } => {
            check_axis(axis)?;
            let across: Vec<f64> = (0..3).filter(|&a| a != axis).map(|a| cell[a]).collect();
            let d = across[0].min(across[1]);
            PI / 4.0 * d * d / (across[0] * across[1])
        }
    })
}
