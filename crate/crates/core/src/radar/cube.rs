use num_complex::Complex64;

use super::RadarConfig;

/// Complex samples of one CPI, stored `[channel][pulse][fast]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarCube {
    pub config: RadarConfig,
    pub cpi_index: usize,
    pub channels: usize,
    pub pulses: usize,
    pub fast: usize,
    pub data: Vec<Complex64>,
}

impl RadarCube {
    pub fn zeros(config: RadarConfig, cpi_index: usize) -> Self {
        let (channels, pulses, fast) = (config.channels, config.pulses(), config.fast_samples);
        RadarCube {
            config,
            cpi_index,
            channels,
            pulses,
            fast,
            data: vec![Complex64::new(0.0, 0.0); channels * pulses * fast],
        }
    }

    pub fn index(&self, channel: usize, pulse: usize, sample: usize) -> usize {
        (channel * self.pulses + pulse) * self.fast + sample
    }

    pub fn at(&self, channel: usize, pulse: usize, sample: usize) -> Complex64 {
        self.data[self.index(channel, pulse, sample)]
    }

    pub fn channel(&self, channel: usize) -> &[Complex64] {
        let n = self.pulses * self.fast;
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn channel_mut(&mut self, channel: usize) -> &mut [Complex64] {
        let n = self.pulses * self.fast;
        &mut self.data[channel * n..(channel + 1) * n]
    }

    pub fn power(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}
