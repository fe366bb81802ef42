//! Binary array format and CSV export.
//!
//! Layout (little-endian): magic `FTSA`, version `u32`, rank `u32`, dims
//! `u32 × rank`, grid size `u32`, weights `f64 × P`, then interleaved
//! `(re, im)` pairs of `f64` in row-major order.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use super::function::GridFn;
use super::grid::Grid;
use super::operator::HSOp;
use super::tensor::GridTensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FTSA";
pub const VERSION: u32 = 1;

/// Generic array record: arbitrary dims over one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayRecord {
    pub dims: Vec<usize>,
    pub grid: Arc<Grid>,
    pub data: Vec<Complex64>,
}

impl ArrayRecord {
    pub fn new(dims: Vec<usize>, grid: Arc<Grid>, data: Vec<Complex64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::Dimension(format!("dims {dims:?} hold {n} entries, got {}", data.len())));
        }
        Ok(ArrayRecord { dims, grid, data })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dims.len() as u32).to_le_bytes())?;
        for d in &self.dims {
            w.write_all(&(*d as u32).to_le_bytes())?;
        }
        w.write_all(&(self.grid.len() as u32).to_le_bytes())?;
        for x in self.grid.weights() {
            w.write_all(&x.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 16);
        for v in &self.data {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let rank = read_u32(r)? as usize;
        if rank == 0 || rank > 8 {
            return Err(Error::Format(format!("implausible rank {rank}")));
        }
        let dims = (0..rank).map(|_| read_u32(r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let p = read_u32(r)? as usize;
        let weights = (0..p).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
        let grid = Grid::from_weights(weights)?;
        let n: usize = dims.iter().product();
        let mut bytes = vec![0u8; n * 16];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(ArrayRecord { dims, grid, data })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to memory");
        v
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }

    /// CSV with index columns followed by `re,im`. Only rank 1 and 2.
    pub fn to_csv(&self, index_names: &[&str]) -> Result<String> {
        if self.dims.len() > 2 || index_names.len() != self.dims.len() {
            return Err(Error::Dimension("CSV export covers 1-D and 2-D arrays".into()));
        }
        let mut s = index_names.join(",");
        s.push_str(",re,im\n");
        match self.dims.as_slice() {
            [n] => {
                for i in 0..*n {
                    let v = self.data[i];
                    s.push_str(&format!("{i},{:e},{:e}\n", v.re, v.im));
                }
            }
            [n, m] => {
                for i in 0..*n {
                    for j in 0..*m {
                        let v = self.data[i * m + j];
                        s.push_str(&format!("{i},{j},{:e},{:e}\n", v.re, v.im));
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(s)
    }

    pub fn into_function(self) -> Result<GridFn> {
        if self.dims != [self.grid.len()] {
            return Err(Error::Format(format!("dims {:?} are not a grid function", self.dims)));
        }
        GridFn::new(self.grid, self.data)
    }

    pub fn into_operator(self) -> Result<HSOp> {
        let p = self.grid.len();
        if self.dims != [p, p] {
            return Err(Error::Format(format!("dims {:?} are not an operator", self.dims)));
        }
        GridTensor::new(self.grid, 2, self.data)?.to_operator()
    }

    pub fn into_tensor(self) -> Result<GridTensor> {
        let p = self.grid.len();
        if self.dims.iter().any(|d| *d != p) {
            return Err(Error::Format(format!("dims {:?} are not a grid tensor", self.dims)));
        }
        GridTensor::new(self.grid, self.dims.len(), self.data)
    }

    /// Rows of a `[n, P]` record as functions.
    pub fn into_functions(self) -> Result<Vec<GridFn>> {
        let p = self.grid.len();
        if self.dims.len() != 2 || self.dims[1] != p {
            return Err(Error::Format(format!("dims {:?} are not a function series", self.dims)));
        }
        self.data.chunks(p).map(|c| GridFn::new(self.grid.clone(), c.to_vec())).collect()
    }
}

impl From<&GridFn> for ArrayRecord {
    fn from(f: &GridFn) -> Self {
        ArrayRecord { dims: vec![f.len()], grid: f.grid().clone(), data: f.values().iter().cloned().collect() }
    }
}

impl From<&HSOp> for ArrayRecord {
    fn from(a: &HSOp) -> Self {
        let t = GridTensor::from_operator(a);
        ArrayRecord { dims: vec![a.dim(), a.dim()], grid: a.grid().clone(), data: t.data().to_vec() }
    }
}

impl From<&GridTensor> for ArrayRecord {
    fn from(t: &GridTensor) -> Self {
        ArrayRecord { dims: vec![t.grid().len(); t.rank()], grid: t.grid().clone(), data: t.data().to_vec() }
    }
}

/// Stack functions on one grid into a `[n, P]` record.
pub fn series_record(grid: &Arc<Grid>, rows: &[GridFn]) -> ArrayRecord {
    let mut data = Vec::with_capacity(rows.len() * grid.len());
    for r in rows {
        data.extend(r.values().iter().cloned());
    }
    ArrayRecord { dims: vec![rows.len(), grid.len()], grid: grid.clone(), data }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = Grid::uniform(2).unwrap();
        let f = GridFn::new(g, vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5)]).unwrap();
        let bytes = ArrayRecord::from(&f).to_bytes();
        assert_eq!(&bytes[..4], b"FTSA");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 0.5);
        assert_eq!(f64::from_le_bytes(bytes[36..44].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[44..52].try_into().unwrap()), 2.0);
        assert_eq!(bytes.len(), 20 + 16 + 32);
    }

    #[test]
    fn round_trips() {
        let g = Grid::gauss_legendre(5).unwrap();
        let a = HSOp::from_real_fn(&g, |x, y| x * y + 0.25);
        let back = ArrayRecord::read_from(&mut ArrayRecord::from(&a).to_bytes().as_slice())
            .unwrap()
            .into_operator()
            .unwrap();
        assert_eq!(back.kernel(), a.kernel());
        assert_eq!(back.grid().points(), a.grid().points());
    }

    #[test]
    fn rejects_garbage() {
        assert!(ArrayRecord::read_from(&mut &b"NOPE\x01\x00\x00\x00"[..]).is_err());
    }

    #[test]
    fn csv_export() {
        let g = Grid::uniform(2).unwrap();
        let a = HSOp::from_real_fn(&g, |x, y| x + y);
        let csv = ArrayRecord::from(&a).to_csv(&["i", "j"]).unwrap();
        assert!(csv.starts_with("i,j,re,im\n0,0,"));
        assert_eq!(csv.lines().count(), 5);
    }
}
