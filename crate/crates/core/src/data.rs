//! Synthetic datasets and the on-disk index bundle.
//!
//! A bundle stores the input points and build parameters; structures are
//! rebuilt on load, which is deterministic.
//!
//! Layout (little-endian): magic `RCLUSTB\0`, format version `u32`, build
//! parameters, `n: u64`, `d: u32`, normalizer offset (`d` x `f64`) and
//! scale (`f64`), then `n * d` coordinates as `f64`.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Normalizer, Point, MAX_DIM};
use crate::index::{BuildParams, RangeIndex};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mixture {
    /// Uniform in the unit cube.
    Uniform,
    /// `m` isotropic Gaussians with standard deviation `sigma`, centers uniform in the unit cube.
    Gaussians { m: usize, sigma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub d: usize,
    pub mixture: Mixture,
    pub seed: u64,
}

/// Draws a reproducible synthetic dataset.
pub fn generate(spec: &GenSpec) -> Result<Vec<Point>> {
    if spec.n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(2..=MAX_DIM).contains(&spec.d) {
        return Err(Error::Dimension(spec.d));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.d;
    let mut coords = [0.0; MAX_DIM];
    match spec.mixture {
        Mixture::Uniform => Ok((0..spec.n)
            .map(|_| {
                for c in coords.iter_mut().take(d) {
                    *c = rng.random::<f64>();
                }
                Point::new(&coords[..d])
            })
            .collect()),
        Mixture::Gaussians { m, sigma } => {
            if m == 0 {
                return Err(Error::InvalidParameter("mixture needs at least one component".into()));
            }
            let normal = Normal::new(0.0, sigma)
                .map_err(|_| Error::InvalidParameter(format!("sigma = {sigma} must be nonnegative and finite")))?;
            let centers: Vec<Point> = (0..m)
                .map(|_| {
                    for c in coords.iter_mut().take(d) {
                        *c = rng.random::<f64>();
                    }
                    Point::new(&coords[..d])
                })
                .collect();
            Ok((0..spec.n)
                .map(|_| {
                    let c = &centers[rng.random_range(0..m)];
                    for (i, x) in coords.iter_mut().take(d).enumerate() {
                        *x = c[i] + normal.sample(&mut rng);
                    }
                    Point::new(&coords[..d])
                })
                .collect())
        }
    }
}

const MAGIC: &[u8; 8] = b"RCLUSTB\0";
pub const BUNDLE_VERSION: u32 = 1;

fn write_params<W: Write>(w: &mut W, p: &BuildParams) -> std::io::Result<()> {
    w.write_f64::<LittleEndian>(p.delta)?;
    w.write_u32::<LittleEndian>(p.k_max as u32)?;
    w.write_u64::<LittleEndian>(p.seed)?;
    w.write_f64::<LittleEndian>(p.c1)?;
    w.write_u32::<LittleEndian>(p.swap_width as u32)?;
    w.write_f64::<LittleEndian>(p.tol)?;
    w.write_u64::<LittleEndian>(p.coreset_min_node as u64)?;
    w.write_u8(p.coreset_tree as u8)
}

fn read_params<R: Read>(r: &mut R) -> std::io::Result<BuildParams> {
    Ok(BuildParams {
        delta: r.read_f64::<LittleEndian>()?,
        k_max: r.read_u32::<LittleEndian>()? as usize,
        seed: r.read_u64::<LittleEndian>()?,
        c1: r.read_f64::<LittleEndian>()?,
        swap_width: r.read_u32::<LittleEndian>()? as usize,
        tol: r.read_f64::<LittleEndian>()?,
        coreset_min_node: r.read_u64::<LittleEndian>()? as usize,
        coreset_tree: r.read_u8()? != 0,
    })
}

/// Writes the dataset and parameters of `index`.
pub fn write_bundle<W: Write>(w: &mut W, index: &RangeIndex) -> Result<()> {
    let pts = index.points();
    let d = index.dim();
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(BUNDLE_VERSION)?;
    write_params(w, index.params())?;
    w.write_u64::<LittleEndian>(pts.len() as u64)?;
    w.write_u32::<LittleEndian>(d as u32)?;
    let nz = index.normalizer();
    for &x in nz.offset().coords() {
        w.write_f64::<LittleEndian>(x)?;
    }
    w.write_f64::<LittleEndian>(nz.scale())?;
    for p in pts {
        for &x in p.coords() {
            w.write_f64::<LittleEndian>(x)?;
        }
    }
    Ok(())
}

/// Reads a bundle and rebuilds the index.
pub fn read_bundle<R: Read>(r: &mut R) -> Result<RangeIndex> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an index bundle".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != BUNDLE_VERSION {
        return Err(Error::Format(format!("unsupported bundle version {version}")));
    }
    let params = read_params(r)?;
    let n = r.read_u64::<LittleEndian>()? as usize;
    let d = r.read_u32::<LittleEndian>()? as usize;
    if !(2..=MAX_DIM).contains(&d) {
        return Err(Error::Dimension(d));
    }
    let mut offset = [0.0; MAX_DIM];
    for x in offset.iter_mut().take(d) {
        *x = r.read_f64::<LittleEndian>()?;
    }
    let stored = Normalizer::from_parts(Point::new(&offset[..d]), r.read_f64::<LittleEndian>()?);
    let mut pts = Vec::with_capacity(n.min(1 << 24));
    let mut c = [0.0; MAX_DIM];
    for _ in 0..n {
        for x in c.iter_mut().take(d) {
            *x = r.read_f64::<LittleEndian>()?;
        }
        pts.push(Point::new(&c[..d]));
    }
    let index = RangeIndex::build(&pts, params)?;
    let nz = index.normalizer();
    if nz.offset() != stored.offset() || nz.scale() != stored.scale() {
        return Err(Error::Format("normalizer does not match the stored data".into()));
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    #[test]
    fn generation_is_reproducible() {
        let spec = GenSpec { n: 100, d: 2, mixture: Mixture::Uniform, seed: 1 };
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        assert!(a.iter().all(|p| p.coords().iter().all(|&x| (0.0..1.0).contains(&x))));
        let g = GenSpec { mixture: Mixture::Gaussians { m: 5, sigma: 0.01 }, ..spec };
        assert_ne!(generate(&g).unwrap(), a);
        assert!(generate(&GenSpec { n: 0, ..spec }).is_err());
    }

    #[test]
    fn bundle_round_trip() {
        let pts = generate(&GenSpec { n: 300, d: 3, mixture: Mixture::Uniform, seed: 7 }).unwrap();
        let params = BuildParams { coreset_tree: false, ..BuildParams::default() };
        let idx = RangeIndex::build(&pts, params).unwrap();
        let mut buf = Vec::new();
        write_bundle(&mut buf, &idx).unwrap();
        let back = read_bundle(&mut buf.as_slice()).unwrap();
        assert_eq!(back.points(), idx.points());
        let q = Rect::new(&[0.1, 0.2, 0.0], &[0.7, 0.9, 0.5]).unwrap();
        let a = idx.kcenter_query(&q, 3, 0.2).unwrap();
        let b = back.kcenter_query(&q, 3, 0.2).unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.cost, b.cost);
        buf[0] = b'X';
        assert!(read_bundle(&mut buf.as_slice()).is_err());
    }
}
