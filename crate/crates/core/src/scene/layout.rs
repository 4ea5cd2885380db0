use nalgebra::Vector3;

/// Ego vehicle placement and the sensor mounts on it (world frame: x north,
/// y west, z up).
#[derive(Debug, Clone, PartialEq)]
pub struct EgoSensorLayout {
    pub ego_centroid: Vector3<f64>,
    /// length, width, height
    pub ego_dims: Vector3<f64>,
    pub radar_position: Vector3<f64>,
    /// Vertical separation of the two receive elements, m.
    pub baseline: f64,
    pub camera_position: Vector3<f64>,
}

impl EgoSensorLayout {
    /// Ego car facing north in the south road segment; radar on the front
    /// bumper, camera 0.1 m under the roof above the front axle.
    pub fn junction_default(wavelength: f64) -> Self {
        let ego_centroid = Vector3::new(10.0, 42.6, 0.7);
        let ego_dims = Vector3::new(4.7, 1.8, 1.4);
        let front = ego_centroid.x + ego_dims.x / 2.0;
        let roof = ego_centroid.z + ego_dims.z / 2.0;
        let front_overhang = 0.9;
        EgoSensorLayout {
            ego_centroid,
            ego_dims,
            radar_position: Vector3::new(front, ego_centroid.y, 0.1),
            baseline: wavelength / 2.0,
            camera_position: Vector3::new(front - front_overhang, ego_centroid.y, roof - 0.1),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.baseline > 0.0) {
            return Err("receiver baseline must be positive".into());
        }
        if !(self.ego_dims.iter().all(|d| *d > 0.0)) {
            return Err("ego dimensions must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensors_sit_on_the_ego_body() {
        let l = EgoSensorLayout::junction_default(0.0039);
        assert!((l.radar_position.x - 12.35).abs() < 1e-12);
        assert!((l.camera_position.z - 1.3).abs() < 1e-12);
        assert!(l.camera_position.x < l.radar_position.x);
        l.validate().unwrap();
    }
}
