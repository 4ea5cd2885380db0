use super::{IsarError, IsarImage};
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfarConfig {
    /// Training cells per side along each axis.
    pub train: usize,
    /// Guard cells per side along each axis.
    pub guard: usize,
    /// 1-based rank of the order statistic; `None` means 3/4 of the training set.
    pub rank: Option<usize>,
    pub p_fa: f64,
}

impl Default for CfarConfig {
    fn default() -> Self {
        CfarConfig { train: 16, guard: 4, rank: None, p_fa: 1e-6 }
    }
}

impl CfarConfig {
    pub fn training_cells(&self) -> usize {
        4 * self.train
    }

    pub fn effective_rank(&self) -> usize {
        self.rank.unwrap_or(3 * self.training_cells() / 4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub doppler_bin: usize,
    pub range_bin: usize,
    pub power: f64,
    /// Order-statistic noise estimate of the surrounding cells.
    pub noise: f64,
}

/// Threshold multiplier for an OS-CFAR with `n` training cells and rank `k`
/// in exponential noise: solves `prod_{i<k} (n-i)/(n-i+alpha) = p_fa`.
pub fn os_cfar_scale(n: usize, k: usize, p_fa: f64) -> f64 {
    let log_pfa = |alpha: f64| -> f64 {
        (0..k)
            .map(|i| {
                let m = (n - i) as f64;
                (m / (m + alpha)).ln()
            })
            .sum()
    };
    let target = p_fa.ln();
    let (mut lo, mut hi) = (0.0, 1.0);
    while log_pfa(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log_pfa(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn os_cfar_detect(img: &IsarImage, cfg: &CfarConfig) -> Result<Vec<Detection>, IsarError> {
    os_cfar_detect_with(Exec::default(), img, cfg)
}

/// Two-dimensional OS-CFAR over a cross-shaped window (training strips along
/// both axes), wrapping around the image edges.
pub fn os_cfar_detect_with(
    exec: Exec,
    img: &IsarImage,
    cfg: &CfarConfig,
) -> Result<Vec<Detection>, IsarError> {
    let (nd, nr) = img.dims();
    let reach = cfg.train + cfg.guard;
    if cfg.train == 0 || 2 * reach + 1 > nd || 2 * reach + 1 > nr {
        return Err(IsarError::InvalidConfig(format!(
            "CFAR window of {} cells per side does not fit a {nd}x{nr} image",
            reach
        )));
    }
    if !(cfg.p_fa > 0.0 && cfg.p_fa < 1.0) {
        return Err(IsarError::InvalidConfig(format!("p_fa {} outside (0, 1)", cfg.p_fa)));
    }
    let n = cfg.training_cells();
    let k = cfg.effective_rank();
    if k == 0 || k > n {
        return Err(IsarError::InvalidConfig(format!("rank {k} outside 1..={n}")));
    }
    let alpha = os_cfar_scale(n, k, cfg.p_fa);
    let power = img.powers();
    let offsets: Vec<usize> = (cfg.guard + 1..=reach).collect();

    let rows = exec.map_indexed(nd, |i| {
        let row = &power[i * nr..(i + 1) * nr];
        // The row padded with `reach` wrapped cells on each side.
        let mut ext = Vec::with_capacity(nr + 2 * reach);
        ext.extend_from_slice(&row[nr - reach..]);
        ext.extend_from_slice(row);
        ext.extend_from_slice(&row[..reach]);
        let scaled = |x: f64| alpha * x;
        // cut > alpha * x_(k) exactly when at least k training cells satisfy
        // alpha * x < cut, so cells are screened by counting and the order
        // statistic is only selected for hits.
        let mut below = vec![0u32; nr];
        for &o in &offsets {
            for r in [(i + o) % nd, (i + nd - o) % nd] {
                let other = &power[r * nr..(r + 1) * nr];
                for ((c, &cut), &x) in below.iter_mut().zip(row).zip(other) {
                    *c += u32::from(scaled(x) < cut);
                }
            }
            for (j, c) in below.iter_mut().enumerate() {
                let cut = row[j];
                *c += u32::from(scaled(ext[reach + j + o]) < cut) + u32::from(scaled(ext[reach + j - o]) < cut);
            }
        }
        let mut found = Vec::new();
        let mut cells = Vec::with_capacity(n);
        for (j, &cut) in row.iter().enumerate() {
            if cut <= 0.0 || (below[j] as usize) < k {
                continue;
            }
            cells.clear();
            for &o in &offsets {
                cells.push(ext[reach + j + o]);
                cells.push(ext[reach + j - o]);
                cells.push(power[((i + o) % nd) * nr + j]);
                cells.push(power[((i + nd - o) % nd) * nr + j]);
            }
            let (_, kth, _) = cells.select_nth_unstable_by(k - 1, f64::total_cmp);
            found.push(Detection { doppler_bin: i, range_bin: j, power: cut, noise: *kth });
        }
        found
    });
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{rng_for, Stream};
    use num_complex::Complex64;
    use rand_distr::{Distribution, StandardNormal};

    fn blank(nd: usize, nr: usize) -> IsarImage {
        IsarImage {
            data: vec![Complex64::new(0.0, 0.0); nd * nr],
            n_doppler: nd,
            n_range: nr,
            range_axis: (0..nr).map(|j| j as f64).collect(),
            doppler_axis: (0..nd).map(|i| i as f64).collect(),
            crossrange_axis: None,
            omega: None,
            cpi_index: 0,
            channel: 0,
            wavelength: 0.0039,
        }
    }

    fn noise(nd: usize, nr: usize, seed: u64) -> IsarImage {
        let mut img = blank(nd, nr);
        let mut rng = rng_for(seed, Stream::Sweep, &[]);
        for z in &mut img.data {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z = Complex64::new(re, im);
        }
        img
    }

    #[test]
    fn scale_reproduces_pfa() {
        let a = os_cfar_scale(64, 48, 1e-4);
        let p: f64 = (0..48).map(|i| (64.0 - i as f64) / (64.0 - i as f64 + a)).product();
        assert!((p / 1e-4 - 1.0).abs() < 1e-9);
        // Rank-one statistic with one cell: pfa = 1 / (1 + alpha).
        assert!((os_cfar_scale(1, 1, 0.25) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn silent_image_has_no_detections() {
        assert!(os_cfar_detect(&blank(64, 64), &CfarConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn window_must_fit() {
        assert!(matches!(
            os_cfar_detect(&blank(20, 128), &CfarConfig::default()),
            Err(IsarError::InvalidConfig(_))
        ));
    }

    #[test]
    fn injected_point_is_found() {
        let mut img = noise(128, 128, 3);
        img.data[40 * 128 + 70] = Complex64::new(14.2, 0.0);
        let cfg = CfarConfig { p_fa: 1e-4, ..Default::default() };
        let dets = os_cfar_detect(&img, &cfg).unwrap();
        let (pi, pj, _) = img.peak();
        let hit = dets.iter().any(|d| {
            d.doppler_bin.abs_diff(pi) <= 1 && d.range_bin.abs_diff(pj) <= 1
        });
        assert!(hit);
    }

    #[test]
    fn false_alarm_rate_on_noise() {
        let cfg = CfarConfig { p_fa: 1e-2, ..Default::default() };
        let img = noise(256, 256, 11);
        let n = (256 * 256) as f64;
        let count = os_cfar_detect(&img, &cfg).unwrap().len() as f64;
        let sd = (n * 1e-2 * (1.0 - 1e-2)).sqrt();
        assert!((count - n * 1e-2).abs() < 3.0 * sd, "{count}");
    }

    /// Sort-everything reference of the same detector.
    fn brute_force(img: &IsarImage, cfg: &CfarConfig) -> Vec<Detection> {
        let (nd, nr) = img.dims();
        let alpha = os_cfar_scale(cfg.training_cells(), cfg.effective_rank(), cfg.p_fa);
        let mut out = Vec::new();
        for i in 0..nd {
            for j in 0..nr {
                let mut cells = Vec::new();
                for o in cfg.guard + 1..=cfg.train + cfg.guard {
                    cells.extend([
                        img.power(i, (j + o) % nr),
                        img.power(i, (j + nr - o) % nr),
                        img.power((i + o) % nd, j),
                        img.power((i + nd - o) % nd, j),
                    ]);
                }
                cells.sort_by(f64::total_cmp);
                let noise = cells[cfg.effective_rank() - 1];
                let cut = img.power(i, j);
                if cut > 0.0 && cut > alpha * noise {
                    out.push(Detection { doppler_bin: i, range_bin: j, power: cut, noise });
                }
            }
        }
        out
    }

    #[test]
    fn screening_matches_full_selection() {
        let mut img = noise(48, 40, 9);
        img.data[10 * 40 + 3] = Complex64::new(9.0, 0.0);
        img.data[47 * 40 + 39] = Complex64::new(0.0, 0.0);
        for p_fa in [1e-1, 1e-2, 1e-4] {
            let cfg = CfarConfig { train: 6, guard: 2, rank: None, p_fa };
            assert_eq!(os_cfar_detect(&img, &cfg).unwrap(), brute_force(&img, &cfg));
        }
    }

    #[test]
    fn policies_agree() {
        let img = noise(96, 96, 2);
        let cfg = CfarConfig { p_fa: 1e-2, ..Default::default() };
        assert_eq!(
            os_cfar_detect_with(Exec::Sequential, &img, &cfg).unwrap(),
            os_cfar_detect_with(Exec::Parallel, &img, &cfg).unwrap()
        );
    }
}
