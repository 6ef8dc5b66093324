//! Scene point clouds and their CSV format (`id,x,y,z`).

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::Error;
use crate::Result;

/// World-frame scene points with optional stable ids.
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    pub ids: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Point3<f64>>) -> Result<Self> {
        let cloud = PointCloud { points, ids: None };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::argument("empty point cloud"));
        }
        if self.points.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::argument("point cloud contains non-finite values"));
        }
        if let Some(ids) = &self.ids {
            if ids.len() != self.points.len() {
                return Err(Error::argument("id/point count mismatch"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reads `id,x,y,z` CSV (header required).
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "id,x,y,z" => {}
            _ => return Err(Error::Parse("cloud CSV must start with 'id,x,y,z'".into())),
        }
        let mut points = Vec::new();
        let mut ids = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!(
                    "cloud CSV line {}: expected 4 fields",
                    lineno + 2
                )));
            }
            let id: usize = fields[0]
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("cloud CSV line {}: {e}", lineno + 2)))?;
            let mut xyz = [0.0; 3];
            for (k, f) in fields[1..].iter().enumerate() {
                xyz[k] = f
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("cloud CSV line {}: {e}", lineno + 2)))?;
            }
            ids.push(id);
            points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
        }
        let cloud = PointCloud {
            points,
            ids: Some(ids),
        };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "id,x,y,z")?;
        for (i, p) in self.points.iter().enumerate() {
            let id = self.ids.as_ref().map_or(i, |ids| ids[i]);
            writeln!(w, "{},{},{},{}", id, p.x, p.y, p.z)?;
        }
        Ok(())
    }
}
