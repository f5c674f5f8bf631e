//! Artifact files: one line of compact JSON header, a newline, then the
//! payload as little-endian `f64` values in row-major order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Grid, ImagingGrid};
use crate::imaging::{Image, ImageKind, ImageParams};
use crate::internal::SnapshotBasis;
use crate::linalg::Matrix;
use crate::rom::BlockMatrix;
use crate::scalar::Real;
use crate::solver::DataTensor;

pub const FORMAT: &str = "romimg-1";

/// Name of the marker file present while a pipeline run is incomplete.
pub const PARTIAL_MARKER: &str = ".partial";

/// Placement of an imaging grid in physical coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub x0: f64,
    pub z0: f64,
    pub spacing: f64,
    pub nx: usize,
    pub nz: usize,
}

impl GridInfo {
    pub fn of<T: Real>(g: &ImagingGrid<T>) -> Self {
        let (x0, z0) = g.coords(0);
        Self { x0: x0.f64(), z0: z0.f64(), spacing: g.spacing().f64(), nx: g.ni, nz: g.nk }
    }

    /// Standalone imaging grid with the same points; the solver lattice is the grid itself.
    pub fn to_grid(&self) -> Result<ImagingGrid<f64>> {
        Ok(ImagingGrid::full(Grid::new(self.nx, self.nz, self.spacing, self.x0, self.z0)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub kind: String,
    pub dims: Vec<usize>,
    pub tau: f64,
    pub n: usize,
    pub m: usize,
    pub omega_c: f64,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridInfo>,
    /// Names of the payload rows when they are not self-evident.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<String>,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl Header {
    pub fn new(kind: &str, dims: Vec<usize>) -> Self {
        Self {
            format: FORMAT.into(),
            kind: kind.into(),
            dims,
            tau: 0.0,
            n: 0,
            m: 0,
            omega_c: 0.0,
            config_hash: String::new(),
            grid: None,
            fields: Vec::new(),
            params: serde_json::Value::Null,
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_line(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn parse(line: &str) -> Result<Self> {
        let h: Self = serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("header: {e}")))?;
        if h.format != FORMAT {
            return Err(Error::Format(format!("unsupported format '{}'", h.format)));
        }
        Ok(h)
    }
}

/// Hex SHA-256 of the JSON serialization of `value`.
pub fn config_hash<S: Serialize>(value: &S) -> Result<String> {
    let json = serde_json::to_vec(value).map_err(|e| Error::Format(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(&json)))
}

/// Hex SHA-256 of a file's contents.
pub fn file_hash(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn write_array<T: Real>(path: &Path, header: &Header, data: &[T]) -> Result<()> {
    if header.len() != data.len() {
        return Err(Error::dim(format!(
            "header declares {} values, payload has {}",
            header.len(),
            data.len()
        )));
    }
    let mut out = Vec::with_capacity(data.len() * 8 + 256);
    out.extend_from_slice(header.to_line()?.as_bytes());
    out.push(b'\n');
    for v in data {
        out.extend_from_slice(&v.f64().to_le_bytes());
    }
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

pub fn read_header(path: &Path) -> Result<Header> {
    let mut line = String::new();
    BufReader::new(fs::File::open(path)?).read_line(&mut line)?;
    Header::parse(&line)
}

pub fn read_array(path: &Path) -> Result<(Header, Vec<f64>)> {
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header = Header::parse(&line)?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != header.len() * 8 {
        return Err(Error::Format(format!(
            "{}: payload has {} bytes, header declares {} values",
            path.display(),
            bytes.len(),
            header.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((header, data))
}

/// Data tensor as `[2n, m, m]`.
pub fn data_header<T: Real>(d: &DataTensor<T>, omega_c: T, config_hash: &str) -> Header {
    let mut h = Header::new("data", vec![d.len(), d.m, d.m]);
    h.tau = d.tau.f64();
    h.n = d.n();
    h.m = d.m;
    h.omega_c = omega_c.f64();
    h.config_hash = config_hash.into();
    h
}

pub fn write_data<T: Real>(path: &Path, d: &DataTensor<T>, header: &Header) -> Result<()> {
    let flat: Vec<T> = d.mats.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
    write_array(path, header, &flat)
}

pub fn read_data(path: &Path) -> Result<(Header, DataTensor<f64>)> {
    let (h, v) = read_array(path)?;
    if h.dims.len() != 3 || h.dims[1] != h.dims[2] {
        return Err(Error::Format("data tensor must be [2n, m, m]".into()));
    }
    let m = h.dims[1];
    let mats = v
        .chunks_exact(m * m)
        .map(|c| Matrix::from_vec(m, m, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let d = DataTensor::new(h.tau, mats)?;
    Ok((h, d))
}

/// Block matrix as `[nm, nm]`, with `n` and `m` in the header.
pub fn write_block<T: Real>(path: &Path, b: &BlockMatrix<T>, mut header: Header) -> Result<()> {
    header.dims = vec![b.size(), b.size()];
    header.n = b.n;
    header.m = b.m;
    header.params = serde_json::json!({ "structure": b.structure });
    write_array(path, &header, b.mat.as_slice())
}

pub fn read_block(path: &Path) -> Result<(Header, BlockMatrix<f64>)> {
    let (h, v) = read_array(path)?;
    if h.dims.len() != 2 || h.dims[0] != h.n * h.m {
        return Err(Error::Format("block matrix header inconsistent".into()));
    }
    let structure = serde_json::from_value(h.params["structure"].clone())
        .map_err(|e| Error::Format(format!("structure: {e}")))?;
    let mat = Matrix::from_vec(h.dims[0], h.dims[1], v)?;
    let b = BlockMatrix::new(h.n, h.m, structure, mat)?;
    Ok((h, b))
}

/// Orthonormal reference snapshots as `[n·m, n_z, n_x]`: one grid field per
/// `v_o[j][s]`, fields in the order `j·m + s`.
pub fn write_basis<T: Real>(path: &Path, basis: &SnapshotBasis<T>, mut header: Header) -> Result<()> {
    let w = basis.width();
    let npts = basis.grid.len();
    header.dims = vec![w, basis.grid.nk, basis.grid.ni];
    header.n = basis.n;
    header.m = basis.m;
    header.grid = Some(GridInfo::of(&basis.grid));
    header.fields = (0..basis.n)
        .flat_map(|j| (0..basis.m).map(move |s| format!("v_o[{j}][{s}]")))
        .collect();
    let mut flat = Vec::with_capacity(w * npts);
    for c in 0..w {
        flat.extend((0..npts).map(|p| basis.values[p * w + c]));
    }
    write_array(path, &header, &flat)
}

/// Image as `[n_z, n_x]`.
pub fn write_image<T: Real>(path: &Path, img: &Image<T>, mut header: Header) -> Result<()> {
    header.kind = format!("image/{}", img.kind.name());
    header.dims = vec![img.grid.nk, img.grid.ni];
    header.grid = Some(GridInfo::of(&img.grid));
    header.params = serde_json::to_value(&img.params).map_err(|e| Error::Format(e.to_string()))?;
    write_array(path, &header, &img.values)
}

pub fn read_image(path: &Path) -> Result<Image<f64>> {
    let (h, v) = read_array(path)?;
    let name = h
        .kind
        .strip_prefix("image/")
        .ok_or_else(|| Error::Format(format!("{} is not an image", path.display())))?;
    let kind = ImageKind::from_name(name).ok_or_else(|| Error::Format(format!("unknown image kind '{name}'")))?;
    let grid = h.grid.ok_or_else(|| Error::Format("image header lacks a grid".into()))?.to_grid()?;
    let params: ImageParams = serde_json::from_value(h.params).map_err(|e| Error::Format(format!("params: {e}")))?;
    Image::new(grid, v, kind, params)
}

/// Reads a basis written by [`write_basis`]; `r_o` is the reference factor it came with.
pub fn read_basis(path: &Path, r_o: BlockMatrix<f64>) -> Result<(Header, SnapshotBasis<f64>)> {
    let (h, v) = read_array(path)?;
    let grid = h.grid.ok_or_else(|| Error::Format("basis header lacks a grid".into()))?.to_grid()?;
    let w = h.n * h.m;
    let npts = grid.len();
    if h.dims != vec![w, grid.nk, grid.ni] || r_o.size() != w {
        return Err(Error::Format("basis dimensions inconsistent".into()));
    }
    let mut values = vec![0.0; w * npts];
    for c in 0..w {
        for p in 0..npts {
            values[p * w + c] = v[c * npts + p];
        }
    }
    let basis = SnapshotBasis { grid, n: h.n, m: h.m, values, r_o };
    Ok((h, basis))
}

/// `x,z,value` lines.
pub fn write_image_csv<T: Real>(path: &Path, img: &Image<T>) -> Result<()> {
    let mut s = String::from("x,z,value\n");
    for (p, v) in img.values.iter().enumerate() {
        let (x, z) = img.grid.coords(p);
        s.push_str(&format!("{},{},{:e}\n", x.f64(), z.f64(), v.f64()));
    }
    fs::write(path, s)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub kind: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn new(config_hash: &str) -> Self {
        Self { config_hash: config_hash.into(), artifacts: Vec::new() }
    }

    /// Records a file written under `dir`, by its relative path.
    pub fn add(&mut self, dir: &Path, name: &str, kind: &str) -> Result<()> {
        let sha256 = file_hash(&dir.join(name))?;
        self.artifacts.push(Artifact { path: name.into(), kind: kind.into(), sha256 });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(path, s + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Format(e.to_string()))
    }
}
