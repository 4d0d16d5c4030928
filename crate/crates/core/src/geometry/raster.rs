//! Instance-labeled masks and scanline polygon rasterization.

use super::layout::FieldLayout;
use super::poly::{open_ring, Point};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Per-pixel instance labels: 0 = background, k = nucleus id k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMask {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl InstanceMask {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("zero-size mask {width}x{height}")));
        }
        Ok(Self { width, height, labels: vec![0; width * height] })
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Dimension(format!(
                "labels length {} != {width}x{height}",
                labels.len()
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("zero-size mask {width}x{height}")));
        }
        Ok(Self { width, height, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: u32) {
        self.labels[y * self.width + x] = label;
    }

    /// Pixel count per non-background label, ordered by label.
    pub fn label_areas(&self) -> BTreeMap<u32, usize> {
        let mut areas = BTreeMap::new();
        for &l in &self.labels {
            if l != 0 {
                *areas.entry(l).or_insert(0) += 1;
            }
        }
        areas
    }

    /// Pixel coordinates of one label.
    pub fn label_pixels(&self, label: u32) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) == label {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// True when every labeled region is 4-connected.
    pub fn labels_are_4_connected(&self) -> bool {
        let areas = self.label_areas();
        for (&label, &area) in &areas {
            let pixels = self.label_pixels(label);
            let start = pixels[0];
            let mut seen = std::collections::HashSet::new();
            let mut stack = vec![start];
            seen.insert(start);
            while let Some((x, y)) = stack.pop() {
                let mut push = |nx: isize, ny: isize| {
                    if nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height {
                        let p = (nx as usize, ny as usize);
                        if self.get(p.0, p.1) == label && seen.insert(p) {
                            stack.push(p);
                        }
                    }
                };
                push(x as isize - 1, y as isize);
                push(x as isize + 1, y as isize);
                push(x as isize, y as isize - 1);
                push(x as isize, y as isize + 1);
            }
            if seen.len() != area {
                return false;
            }
        }
        true
    }
}

/// Pixels whose centers fall inside the polygon (even-odd rule at
/// (x+0.5, y+0.5)).
pub fn polygon_pixels(polygon: &[Point], width: usize, height: usize) -> Vec<(usize, usize)> {
    let ring = open_ring(polygon);
    let n = ring.len();
    if n < 3 {
        return Vec::new();
    }
    let y_min = ring.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let y_max = ring.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    let row_lo = (y_min - 0.5).floor().max(0.0) as usize;
    let row_hi = ((y_max - 0.5).ceil() as isize).min(height as isize - 1);
    if row_hi < 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    for y in row_lo..=row_hi as usize {
        let yc = y as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let [x1, y1] = ring[i];
            let [x2, y2] = ring[(i + 1) % n];
            // half-open rule avoids double counting at shared vertices
            if (y1 <= yc && yc < y2) || (y2 <= yc && yc < y1) {
                xs.push(x1 + (yc - y1) * (x2 - x1) / (y2 - y1));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in xs.chunks_exact(2) {
            let x_start = (pair[0] - 0.5).ceil().max(0.0) as usize;
            let x_end_f = (pair[1] - 0.5).ceil();
            if x_end_f <= 0.0 {
                continue;
            }
            let x_end = (x_end_f as usize).min(width);
            for x in x_start..x_end {
                out.push((x, y));
            }
        }
    }
    out
}

/// Fills each nucleus polygon into an instance mask. Earlier ids keep
/// contested pixels (layouts preclude overlap anyway).
pub fn rasterize_mask(layout: &FieldLayout) -> Result<InstanceMask> {
    let mut mask = InstanceMask::new(layout.width, layout.height)?;
    for nucleus in &layout.nuclei {
        for (x, y) in polygon_pixels(&nucleus.boundary, layout.width, layout.height) {
            if mask.get(x, y) == 0 {
                mask.set(x, y, nucleus.id);
            }
        }
    }
    Ok(mask)
}
