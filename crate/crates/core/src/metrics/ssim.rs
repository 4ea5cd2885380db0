use super::MetricsError;
use crate::isar::IsarImage;

/// Real-valued image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Grid { rows, cols, data }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    /// Side of the square averaging window, cells; odd.
    pub window: usize,
    pub c1: f64,
    pub c2: f64,
    /// Span of the dB images below their peak.
    pub dynamic_range: f64,
}

impl SsimConfig {
    pub fn for_range(dynamic_range: f64) -> Self {
        SsimConfig {
            window: 7,
            c1: (0.01 * dynamic_range).powi(2),
            c2: (0.03 * dynamic_range).powi(2),
            dynamic_range,
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(MetricsError::InvalidConfig(format!("window {} must be odd and >= 3", self.window)));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.dynamic_range > 0.0) {
            return Err(MetricsError::InvalidConfig("constants must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SsimConfig {
    fn default() -> Self {
        SsimConfig::for_range(40.0)
    }
}

/// Box mean over a `w x w` window, clamped at the borders.
fn box_mean(g: &[f64], rows: usize, cols: usize, w: usize) -> Vec<f64> {
    let h = w / 2;
    let mut tmp = vec![0.0; g.len()];
    for r in 0..rows {
        let row = &g[r * cols..(r + 1) * cols];
        for c in 0..cols {
            let (lo, hi) = (c.saturating_sub(h), (c + h).min(cols - 1));
            tmp[r * cols + c] = row[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
        }
    }
    let mut out = vec![0.0; g.len()];
    for c in 0..cols {
        for r in 0..rows {
            let (lo, hi) = (r.saturating_sub(h), (r + h).min(rows - 1));
            let s: f64 = (lo..=hi).map(|i| tmp[i * cols + c]).sum();
            out[r * cols + c] = s / (hi - lo + 1) as f64;
        }
    }
    out
}

/// Mean windowed structural similarity of two equally sized grids.
pub fn ssim(a: &Grid, b: &Grid, cfg: &SsimConfig) -> Result<f64, MetricsError> {
    cfg.validate()?;
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(MetricsError::DimensionMismatch((a.rows, a.cols), (b.rows, b.cols)));
    }
    if a.data.is_empty() {
        return Err(MetricsError::ZeroImage);
    }
    let (rows, cols, w) = (a.rows, a.cols, cfg.window);
    let mu_a = box_mean(&a.data, rows, cols, w);
    let mu_b = box_mean(&b.data, rows, cols, w);
    let sq = |x: &[f64]| x.iter().map(|v| v * v).collect::<Vec<_>>();
    let aa = box_mean(&sq(&a.data), rows, cols, w);
    let bb = box_mean(&sq(&b.data), rows, cols, w);
    let ab: Vec<f64> = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
    let ab = box_mean(&ab, rows, cols, w);

    let mut total = 0.0;
    for i in 0..a.data.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = (aa[i] - ma * ma).max(0.0);
        let vb = (bb[i] - mb * mb).max(0.0);
        let cov = ab[i] - ma * mb;
        let s = (2.0 * ma * mb + cfg.c1) * (2.0 * cov + cfg.c2)
            / ((ma * ma + mb * mb + cfg.c1) * (va + vb + cfg.c2));
        total += s.clamp(-1.0, 1.0);
    }
    Ok(total / a.data.len() as f64)
}

/// Power in dB relative to the peak, floored at `-floor_db` and shifted so
/// the result spans `[0, floor_db]`.
pub fn to_db(powers: &[f64], floor_db: f64) -> Result<Vec<f64>, MetricsError> {
    let peak = powers.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(MetricsError::ZeroImage);
    }
    Ok(powers
        .iter()
        .map(|p| (10.0 * (p / peak).log10()).max(-floor_db) + floor_db)
        .collect())
}

/// Crossrange (or Doppler when no turn rate is attached) of each row.
fn row_axis(img: &IsarImage) -> &[f64] {
    img.crossrange_axis.as_deref().unwrap_or(&img.doppler_axis)
}

fn frac_index(axis: &[f64], v: f64) -> Option<f64> {
    let n = axis.len();
    if n == 1 {
        return (v == axis[0]).then_some(0.0);
    }
    let step = axis[1] - axis[0];
    let f = (v - axis[0]) / step;
    (f >= 0.0 && f <= (n - 1) as f64).then_some(f)
}

/// dB image of `img` bilinearly sampled at the cell centres of `onto`.
/// Cells outside `img` read as the floor.
pub fn resample_db(img: &IsarImage, onto: &IsarImage, floor_db: f64) -> Result<Grid, MetricsError> {
    let db = to_db(&img.powers(), floor_db)?;
    let (src_rows, src_cols) = (row_axis(img), &img.range_axis);
    let (dst_rows, dst_cols) = (row_axis(onto), &onto.range_axis);
    let mut out = vec![0.0; dst_rows.len() * dst_cols.len()];
    let cols: Vec<Option<f64>> = dst_cols.iter().map(|v| frac_index(src_cols, *v)).collect();
    for (i, rv) in dst_rows.iter().enumerate() {
        let Some(fr) = frac_index(src_rows, *rv) else { continue };
        let r0 = fr.floor() as usize;
        let r1 = (r0 + 1).min(src_rows.len() - 1);
        let tr = fr - r0 as f64;
        for (j, fc) in cols.iter().enumerate() {
            let Some(fc) = *fc else { continue };
            let c0 = fc.floor() as usize;
            let c1 = (c0 + 1).min(src_cols.len() - 1);
            let tc = fc - c0 as f64;
            let v = |r: usize, c: usize| db[r * img.n_range + c];
            out[i * dst_cols.len() + j] = (1.0 - tr) * ((1.0 - tc) * v(r0, c0) + tc * v(r0, c1))
                + tr * ((1.0 - tc) * v(r1, c0) + tc * v(r1, c1));
        }
    }
    Ok(Grid::new(dst_rows.len(), dst_cols.len(), out))
}

/// SSIM between `test` and `reference` on the reference's grid, in dB
/// clipped `cfg.dynamic_range` below each image's peak.
pub fn image_ssim(test: &IsarImage, reference: &IsarImage, cfg: &SsimConfig) -> Result<f64, MetricsError> {
    let floor = cfg.dynamic_range;
    let a = Grid::new(reference.n_doppler, reference.n_range, to_db(&reference.powers(), floor)?);
    let b = resample_db(test, reference, floor)?;
    ssim(&a, &b, cfg)
}
