//! Frame pairing for recorded data, where radar and camera are not
//! triggered together and every detection carries its own timestamp.

/// Start time of CPI `k` is `t0 + k * cpi`; its centre is half a CPI later.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameClock {
    pub t0: f64,
    pub cpi: f64,
    pub frames: usize,
}

impl FrameClock {
    pub fn centre(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) * self.cpi
    }

    /// Frame whose centre is nearest to `t`, if that centre lies within half a
    /// CPI of it.
    pub fn frame_of(&self, t: f64) -> Option<usize> {
        let k = ((t - self.t0) / self.cpi - 0.5).round();
        if !(k >= 0.0 && k < self.frames as f64) {
            return None;
        }
        let k = k as usize;
        ((t - self.centre(k)).abs() <= 0.5 * self.cpi).then_some(k)
    }

    /// Buckets time-stamped items by frame, keeping their order within a
    /// frame. Items outside every frame are dropped.
    pub fn pair<T: Clone>(&self, items: &[(f64, T)]) -> Vec<Vec<T>> {
        let mut out = vec![Vec::new(); self.frames];
        for (t, item) in items {
            if let Some(k) = self.frame_of(*t) {
                out[k].push(item.clone());
            }
        }
        out
    }
}
