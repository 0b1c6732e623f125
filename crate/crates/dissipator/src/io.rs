//! Output formats: binary grid snapshots, binary path dumps, CSV tables and
//! TOML manifests.

use crate::characteristics::PathEnsemble;
use crate::error::{Error, Result};
use crate::flow_fields::{sample_velocity, VelocityField};
use crate::grid::{Domain, Grid, ScalarField};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"DSNP";
pub const ENSEMBLE_MAGIC: [u8; 4] = *b"DPTH";
pub const FORMAT_VERSION: u32 = 1;

/// Header of a grid snapshot. The payload holds `components` planes of
/// `nx * ny` row-major little-endian `f64` values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub nx: u32,
    pub ny: u32,
    pub time: f64,
    pub alpha: f64,
    /// `VelocityField::field_id` for velocity snapshots, 0 for scalars.
    pub field_id: u32,
    pub components: u32,
}

impl SnapshotHeader {
    pub const BYTES: usize = 4 + 4 * 4 + 8 * 2 + 4;

    fn grid_len(&self) -> usize {
        self.nx as usize * self.ny as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub planes: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn scalar(field: &ScalarField, time: f64, alpha: f64) -> Self {
        let header = SnapshotHeader {
            nx: field.grid.nx as u32,
            ny: field.grid.ny as u32,
            time,
            alpha,
            field_id: 0,
            components: 1,
        };
        Snapshot { header, planes: vec![field.data.clone()] }
    }

    /// Both velocity components of `field` at time `t` on the cell centres.
    pub fn velocity(field: &dyn VelocityField, t: f64, grid: &Grid, alpha: f64) -> Self {
        let (u, v) = sample_velocity(field, t, grid);
        let header = SnapshotHeader {
            nx: grid.nx as u32,
            ny: grid.ny as u32,
            time: t,
            alpha,
            field_id: field.field_id(),
            components: 2,
        };
        Snapshot { header, planes: vec![u, v] }
    }

    pub fn to_field(&self, component: usize, domain: Domain) -> Result<ScalarField> {
        let grid = Grid::new(self.header.nx as usize, self.header.ny as usize)?;
        let data = self
            .planes
            .get(component)
            .ok_or_else(|| Error::Format(format!("snapshot has no component {component}")))?
            .clone();
        Ok(ScalarField { grid, domain, data, time: self.header.time })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let h = &self.header;
        if self.planes.len() != h.components as usize || self.planes.iter().any(|p| p.len() != h.grid_len()) {
            return Err(Error::Format("snapshot planes do not match the header".into()));
        }
        w.write_all(&SNAPSHOT_MAGIC)?;
        for x in [FORMAT_VERSION, h.nx, h.ny] {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&h.time.to_le_bytes())?;
        w.write_all(&h.alpha.to_le_bytes())?;
        w.write_all(&h.field_id.to_le_bytes())?;
        w.write_all(&h.components.to_le_bytes())?;
        for plane in &self.planes {
            for v in plane {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != SNAPSHOT_MAGIC {
            return Err(Error::Format("not a snapshot file".into()));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let (nx, ny) = (read_u32(r)?, read_u32(r)?);
        let (time, alpha) = (read_f64(r)?, read_f64(r)?);
        let (field_id, components) = (read_u32(r)?, read_u32(r)?);
        let header = SnapshotHeader { nx, ny, time, alpha, field_id, components };
        if components == 0 || components > 2 {
            return Err(Error::Format(format!("unsupported component count {components}")));
        }
        let planes = (0..components)
            .map(|_| (0..header.grid_len()).map(|_| read_f64(r)).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        Ok(Snapshot { header, planes })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(fs::File::open(path)?))
    }
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

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(fs::File::create(path)?)
}

/// Path endpoints as records `(x, y, exited, tau)`: magic, version, count, then
/// per path two `f64`, one byte and one `f64`, little-endian.
pub fn write_ensemble(ens: &PathEnsemble, w: &mut impl Write) -> Result<()> {
    w.write_all(&ENSEMBLE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(ens.samples as u64).to_le_bytes())?;
    for k in 0..ens.samples {
        let p = ens.endpoints[k];
        w.write_all(&p.x.to_le_bytes())?;
        w.write_all(&p.y.to_le_bytes())?;
        w.write_all(&[ens.exited[k] as u8])?;
        w.write_all(&ens.exit_times[k].to_le_bytes())?;
    }
    Ok(())
}

pub type PathRecord = (f64, f64, bool, f64);

pub fn read_ensemble(r: &mut impl Read) -> Result<Vec<PathRecord>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != ENSEMBLE_MAGIC || read_u32(r)? != FORMAT_VERSION {
        return Err(Error::Format("not a path dump".into()));
    }
    let mut n = [0u8; 8];
    r.read_exact(&mut n)?;
    (0..u64::from_le_bytes(n))
        .map(|_| {
            let (x, y) = (read_f64(r)?, read_f64(r)?);
            let mut flag = [0u8; 1];
            r.read_exact(&mut flag)?;
            Ok((x, y, flag[0] != 0, read_f64(r)?))
        })
        .collect()
}

pub fn save_ensemble(ens: &PathEnsemble, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    write_ensemble(ens, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    r.deserialize().map(|row| row.map_err(|e| Error::Format(format!("{}: {e}", path.display())))).collect()
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    create(path)?.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::Point;

    #[test]
    fn snapshot_round_trip() {
        let g = Grid::new(16, 11).unwrap();
        let f = ScalarField::from_fn(g, Domain::Torus, |p| p.x - 2.0 * p.y);
        let s = Snapshot::scalar(&f, 0.25, 0.5);
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), SnapshotHeader::BYTES + 8 * g.len());
        assert_eq!(&buf[..4], b"DSNP");
        let back = Snapshot::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_field(0, Domain::Torus).unwrap().data, f.data);
    }

    #[test]
    fn truncated_snapshot_is_a_format_error() {
        let g = Grid::new(16, 11).unwrap();
        let mut buf = Vec::new();
        Snapshot::scalar(&ScalarField::zeros(g, Domain::Box), 0.0, 0.5).write_to(&mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(Snapshot::read_from(&mut buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn ensemble_round_trip() {
        let ens = PathEnsemble {
            x: Point::new(0.5, 0.5),
            samples: 2,
            seed: 1,
            dt: 0.1,
            kappa: 1e-3,
            start: 0.0,
            end: 1.0,
            domain: Domain::Box,
            direction: crate::characteristics::Direction::Backward,
            endpoints: vec![Point::new(0.1, 0.2), Point::new(0.0, 0.7)],
            exited: vec![false, true],
            exit_times: vec![f64::NAN, 0.3],
        };
        let mut buf = Vec::new();
        write_ensemble(&ens, &mut buf).unwrap();
        let back = read_ensemble(&mut buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!((back[1].0, back[1].1, back[1].2, back[1].3), (0.0, 0.7, true, 0.3));
        assert!(back[0].3.is_nan());
    }
}
