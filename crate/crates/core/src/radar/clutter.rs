use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::rng::{rng_for, Stream};

/// Annular ground sector in front of the radar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageRegion {
    pub origin: Vector3<f64>,
    pub min_range: f64,
    pub max_range: f64,
    /// Azimuth half-width about +x, rad.
    pub half_angle: f64,
    /// Height of the clutter points above the origin.
    pub height: f64,
}

impl CoverageRegion {
    pub fn is_empty(&self) -> bool {
        !(self.max_range > self.min_range && self.half_angle > 0.0 && self.min_range >= 0.0)
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let rel = p - self.origin;
        let ground = rel.x.hypot(rel.y);
        ground >= self.min_range - 1e-9
            && ground <= self.max_range + 1e-9
            && rel.y.atan2(rel.x).abs() <= self.half_angle + 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterParams {
    /// Number of independent cells that may each produce a clutter return.
    pub cells: u64,
    /// Per-cell probability.
    pub p: f64,
    /// Amplitude of every clutter point.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClutterField {
    /// Static point returns: position and amplitude.
    pub points: Vec<(Vector3<f64>, f64)>,
    pub cells: u64,
    pub p: f64,
    pub region: Option<CoverageRegion>,
}

impl ClutterField {
    pub fn empty() -> Self {
        ClutterField { points: Vec::new(), cells: 0, p: 0.0, region: None }
    }
}

/// Independent draw for CPI `cpi_index`: Binomial(cells, p) points placed
/// uniformly over the region's area.
pub fn spawn_clutter(
    params: &ClutterParams,
    region: &CoverageRegion,
    seed: u64,
    cpi_index: usize,
) -> ClutterField {
    let mut field = ClutterField {
        points: Vec::new(),
        cells: params.cells,
        p: params.p,
        region: Some(*region),
    };
    if region.is_empty() || params.p <= 0.0 || params.cells == 0 {
        return field;
    }
    let mut rng = rng_for(seed, Stream::Clutter, &[cpi_index as u64]);
    let count = Binomial::new(params.cells, params.p.min(1.0))
        .expect("probability checked")
        .sample(&mut rng);
    let (r0, r1) = (region.min_range * region.min_range, region.max_range * region.max_range);
    for _ in 0..count {
        let r = (r0 + rng.random::<f64>() * (r1 - r0)).sqrt();
        let az = (2.0 * rng.random::<f64>() - 1.0) * region.half_angle;
        let p = region.origin + Vector3::new(r * az.cos(), r * az.sin(), region.height);
        field.points.push((p, params.amplitude));
    }
    field
}
