use std::collections::HashMap;

use super::{Detection, Interferogram, IsarImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    /// Detections within this many range bins and `link_doppler_bins`
    /// Doppler bins of each other are linked.
    pub link_bins: usize,
    pub link_doppler_bins: usize,
    /// Measurements beyond the instrumented range are discarded.
    pub max_range: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig { link_bins: 2, link_doppler_bins: 2, max_range: 40.0 }
    }
}

/// Centroid of one cluster of radar detections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarMeasurement {
    pub range: f64,
    pub doppler: f64,
    pub elevation: Option<f64>,
    pub count: usize,
    pub power: f64,
    pub cpi_index: usize,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage clusters (indices into `dets`), largest first. `link` is
/// the (range, Doppler) bin distance; the Doppler axis of length `n_doppler`
/// is circular.
pub fn cluster_detections(
    dets: &[Detection],
    n_doppler: usize,
    link: (usize, usize),
) -> Vec<Vec<usize>> {
    let at: HashMap<(usize, usize), usize> = dets
        .iter()
        .enumerate()
        .map(|(i, d)| ((d.doppler_bin, d.range_bin), i))
        .collect();
    let mut parent: Vec<usize> = (0..dets.len()).collect();
    let (lr, ld) = (link.0 as isize, link.1.min(n_doppler / 2) as isize);
    for (i, d) in dets.iter().enumerate() {
        for di in -ld..=ld {
            let row = (d.doppler_bin as isize + di).rem_euclid(n_doppler.max(1) as isize) as usize;
            for dj in -lr..=lr {
                let col = d.range_bin as isize + dj;
                if col < 0 {
                    continue;
                }
                if let Some(&j) = at.get(&(row, col as usize)) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..dets.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    let total = |g: &Vec<usize>| g.iter().map(|&i| dets[i].power).sum::<f64>();
    out.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then(total(b).total_cmp(&total(a)))
            .then(a[0].cmp(&b[0]))
    });
    out
}

fn centroid(
    members: &[usize],
    dets: &[Detection],
    img: &IsarImage,
    interf: Option<&Interferogram>,
) -> RadarMeasurement {
    let prf = img.doppler_spacing() * img.n_doppler as f64;
    let peak = members
        .iter()
        .copied()
        .max_by(|&a, &b| dets[a].power.total_cmp(&dets[b].power))
        .expect("non-empty cluster");
    let f_peak = img.doppler_axis[dets[peak].doppler_bin];
    let (mut w, mut r, mut f) = (0.0, 0.0, 0.0);
    let (mut we, mut e) = (0.0, 0.0);
    for &m in members {
        let d = &dets[m];
        let p = d.power;
        w += p;
        r += p * img.range_axis[d.range_bin];
        // Doppler offsets are taken relative to the peak so clusters that
        // straddle the folding edge average correctly.
        let mut df = img.doppler_axis[d.doppler_bin] - f_peak;
        if prf > 0.0 {
            df -= prf * (df / prf).round();
        }
        f += p * df;
        if let Some(theta) = interf.and_then(|ig| ig.at(d.doppler_bin, d.range_bin)) {
            we += p;
            e += p * theta;
        }
    }
    let mut doppler = f_peak + f / w;
    if prf > 0.0 {
        doppler -= prf * (doppler / prf).round();
    }
    RadarMeasurement {
        range: r / w,
        doppler,
        elevation: (we > 0.0).then(|| e / we),
        count: members.len(),
        power: w,
        cpi_index: img.cpi_index,
    }
}

/// Power-weighted centroid of every cluster, largest cluster first.
pub fn cluster_measurements(
    dets: &[Detection],
    img: &IsarImage,
    interf: Option<&Interferogram>,
    cfg: &ClusterConfig,
) -> Vec<RadarMeasurement> {
    cluster_detections(dets, img.n_doppler, (cfg.link_bins, cfg.link_doppler_bins))
        .iter()
        .map(|g| centroid(g, dets, img, interf))
        .filter(|m| m.range >= 0.0 && m.range <= cfg.max_range)
        .collect()
}

/// Centroid of the largest cluster.
pub fn cluster_to_measurement(
    dets: &[Detection],
    img: &IsarImage,
    interf: Option<&Interferogram>,
    cfg: &ClusterConfig,
) -> Option<RadarMeasurement> {
    cluster_measurements(dets, img, interf, cfg).into_iter().next()
}
