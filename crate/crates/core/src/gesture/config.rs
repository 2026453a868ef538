use serde::{Deserialize, Serialize};

use super::GestureError;

/// Recognizer thresholds. Every value is a tunable default; scenario files
/// may override any subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GestureConfig {
    /// Height above the table past which a proxy counts as picked up.
    pub pickup_z: f64,
    /// Height below which a held proxy counts as placed down again.
    pub place_z: f64,
    pub dwell_ms: u64,
    /// Distance to the backdrop edge that counts as "near the display".
    pub backdrop_near_m: f64,
    pub rotate_deg: f64,
    pub rotate_window_ms: u64,
    pub pitch_deg: f64,
    /// Minimum spacing between two events of the same kind for one proxy.
    pub debounce_ms: u64,
    /// Height that maps to the top edge of the dashboard in shadow space.
    pub shadow_z_span: f64,
}

impl Default for GestureConfig {
    fn default() -> Self {
        Self {
            pickup_z: 0.03,
            place_z: 0.015,
            dwell_ms: 800,
            backdrop_near_m: 0.35,
            rotate_deg: 60.0,
            rotate_window_ms: 1500,
            pitch_deg: 35.0,
            debounce_ms: 150,
            shadow_z_span: 0.40,
        }
    }
}

impl GestureConfig {
    pub fn validate(&self) -> Result<(), GestureError> {
        let angle_ok = |a: f64| a > 0.0 && a < 90.0;
        let ok = self.place_z > 0.0
            && self.pickup_z > self.place_z
            && self.dwell_ms > 0
            && self.rotate_window_ms > 0
            && self.debounce_ms > 0
            && self.backdrop_near_m > 0.0
            && self.shadow_z_span > 0.0
            && angle_ok(self.rotate_deg)
            && angle_ok(self.pitch_deg);
        if ok {
            Ok(())
        } else {
            Err(GestureError::InvalidConfig(format!("{self:?}")))
        }
    }

    pub fn rotate_rad(&self) -> f64 {
        self.rotate_deg.to_radians()
    }

    pub fn pitch_rad(&self) -> f64 {
        self.pitch_deg.to_radians()
    }
}
