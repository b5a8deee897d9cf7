//! Plain-text artifacts: PGM rasters over the service grid and CSV tables.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{PlanError, Result};
use crate::scenario::RasterLayout;

/// Gray levels used in every raster.
pub const GRAY_COVERED: u8 = 255;
pub const GRAY_INDIRECT: u8 = 128;
pub const GRAY_OUTAGE: u8 = 0;
/// Cells inside building footprints (no service point).
pub const GRAY_BUILDING: u8 = 64;

/// Plain (P2) PGM with north up: the first row is the largest y.
/// `cells[j]` is the raster cell of value `values[j]`; other cells are buildings.
pub fn pgm_string(layout: &RasterLayout, cells: &[usize], values: &[u8]) -> Result<String> {
    if cells.len() != values.len() {
        return Err(PlanError::Dimension(format!(
            "{} cells but {} values",
            cells.len(),
            values.len()
        )));
    }
    let (nx, ny) = (layout.nx, layout.ny);
    let mut img = vec![GRAY_BUILDING; nx * ny];
    for (&c, &v) in cells.iter().zip(values) {
        if c >= nx * ny {
            return Err(PlanError::Dimension(format!(
                "cell {c} outside a {nx}x{ny} raster"
            )));
        }
        img[c] = v;
    }
    let mut s = format!(
        "P2\n# {nx} x {ny}, {} m cells\n{nx} {ny}\n255\n",
        layout.resolution
    );
    for row in 0..ny {
        let iy = ny - 1 - row;
        let line: Vec<String> = (0..nx).map(|ix| img[ix + iy * nx].to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    Ok(s)
}

pub fn write_pgm(path: &Path, layout: &RasterLayout, cells: &[usize], values: &[u8]) -> Result<()> {
    fs::write(path, pgm_string(layout, cells, values)?)
        .map_err(|e| PlanError::io(path.display().to_string(), e))
}

/// Serializes `rows` as CSV with a header taken from the row type's field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush()
        .map_err(|e| PlanError::io(path.display().to_string(), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| PlanError::Contract(e.to_string()))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| PlanError::io(path.display().to_string(), e))
}

fn csv_err(path: &Path, e: csv::Error) -> PlanError {
    PlanError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Reads `index,weight` rows; unlisted indices get weight 0.
pub fn read_weights(path: &Path, len: usize) -> Result<Vec<f64>> {
    #[derive(serde::Deserialize)]
    struct W {
        index: usize,
        weight: f64,
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut w = vec![0.0; len];
    for rec in r.deserialize::<W>() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.index >= len {
            return Err(PlanError::Dimension(format!(
                "weight for index {} but the service grid has {len} points",
                rec.index
            )));
        }
        w[rec.index] = rec.weight;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_is_north_up() {
        let layout = RasterLayout {
            nx: 2,
            ny: 2,
            origin: [0.0, 0.0],
            resolution: 1.0,
        };
        // cells 0,1 are the bottom row; cell 3 is top-right
        let s = pgm_string(&layout, &[0, 1, 3], &[255, 128, 0]).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "P2");
        assert_eq!(lines[2], "2 2");
        assert_eq!(lines[4], "64 0");
        assert_eq!(lines[5], "255 128");
        assert!(pgm_string(&layout, &[4], &[1]).is_err());
    }
}
