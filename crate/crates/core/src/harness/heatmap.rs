//! Φ laid out on the grid, walls as `NaN`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mdp::{Cell, GridLayout};
use crate::shaping::PotentialTable;

#[derive(Debug, Clone)]
pub struct HeatmapGrid {
    width: usize,
    height: usize,
    /// Row-major, `y * width + x`.
    values: Vec<f64>,
}

impl PartialEq for HeatmapGrid {
    /// Cell-wise equality with `NaN == NaN`.
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.values.iter().zip(&other.values).all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

impl HeatmapGrid {
    pub fn from_potential(phi: &PotentialTable, layout: &GridLayout) -> Result<Self> {
        if phi.len() != layout.num_states() {
            return Err(Error::DimensionMismatch { expected: layout.num_states(), actual: phi.len() });
        }
        let (width, height) = (layout.width(), layout.height());
        let mut values = vec![f64::NAN; width * height];
        for s in 0..layout.num_states() {
            let (x, y) = layout.position(s);
            values[y * width + x] = phi.get(s);
        }
        Ok(HeatmapGrid { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// `(x, y)` of the largest finite value.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        Some((i % self.width, i / self.width))
    }

    /// Header `y,x0,…,x{w-1}`, then one line per grid row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y");
        for x in 0..self.width {
            let _ = write!(out, ",x{x}");
        }
        out.push('\n');
        for y in 0..self.height {
            let _ = write!(out, "{y}");
            for x in 0..self.width {
                let _ = write!(out, ",{}", self.get(x, y));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty heatmap"))?;
        let mut cols = header.split(',');
        if cols.next() != Some("y") {
            return Err(Error::parse(1, "expected header starting with `y`"));
        }
        let width = cols.count();
        let mut values = Vec::new();
        let mut height = 0;
        for (i, line) in lines.enumerate() {
            let mut cells = line.split(',');
            let y: usize = cells.next().unwrap_or("").trim().parse().map_err(|_| Error::parse(i + 2, "bad row index"))?;
            if y != height {
                return Err(Error::parse(i + 2, format!("expected row {height}, found {y}")));
            }
            let row: Vec<f64> = cells
                .map(|c| c.trim().parse::<f64>().map_err(|_| Error::parse(i + 2, format!("bad value {c:?}"))))
                .collect::<Result<_>>()?;
            if row.len() != width {
                return Err(Error::parse(i + 2, format!("expected {width} values, found {}", row.len())));
            }
            values.extend(row);
            height += 1;
        }
        Ok(HeatmapGrid { width, height, values })
    }

    /// Checks the grid against a layout: walls missing, free cells finite.
    pub fn matches_layout(&self, layout: &GridLayout) -> bool {
        self.width == layout.width()
            && self.height == layout.height()
            && (0..self.height).all(|y| {
                (0..self.width).all(|x| (layout.cell(x, y) == Cell::Wall) == !self.get(x, y).is_finite())
            })
    }
}

/// 64-bit FNV-1a; stable across builds, used to tag artifact file names.
pub fn config_hash(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

pub fn heatmap_file_name(provenance: &str, hash: u64) -> String {
    format!("phi_{provenance}_{hash:016x}.csv")
}

/// Writes `phi` as a heatmap into `dir` and returns the path.
pub fn emit_heatmap(
    phi: &PotentialTable,
    layout: Option<&GridLayout>,
    env: &str,
    tag: &str,
    config_text: &str,
    dir: &Path,
) -> Result<PathBuf> {
    let layout = layout.ok_or_else(|| Error::NotAGrid(env.to_string()))?;
    let grid = HeatmapGrid::from_potential(phi, layout)?;
    std::fs::create_dir_all(dir)?;
    let path = dir.join(heatmap_file_name(tag, config_hash(config_text)));
    std::fs::write(&path, grid.to_csv())?;
    Ok(path)
}
