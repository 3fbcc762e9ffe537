//! Trapezoidal speed profiles for scripted runs.

/// Accelerate from rest to `cruise` (m/s), hold for `hold_s`, decelerate to
/// rest, all at `accel` (m/s²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub cruise: f64,
    pub hold_s: f64,
    pub accel: f64,
}

impl Trapezoid {
    pub fn ramp_s(&self) -> f64 {
        self.cruise / self.accel
    }

    pub fn duration_s(&self) -> f64 {
        2.0 * self.ramp_s() + self.hold_s
    }

    pub fn speed(&self, tau: f64) -> f64 {
        let r = self.ramp_s();
        if tau <= 0.0 {
            0.0
        } else if tau < r {
            self.accel * tau
        } else if tau < r + self.hold_s {
            self.cruise
        } else {
            (self.cruise - self.accel * (tau - r - self.hold_s)).max(0.0)
        }
    }

    pub fn distance(&self, tau: f64) -> f64 {
        let r = self.ramp_s();
        let tau = tau.clamp(0.0, self.duration_s());
        let ramp_d = 0.5 * self.cruise * r;
        if tau < r {
            0.5 * self.accel * tau * tau
        } else if tau < r + self.hold_s {
            ramp_d + self.cruise * (tau - r)
        } else {
            let u = tau - r - self.hold_s;
            ramp_d + self.cruise * self.hold_s + self.cruise * u - 0.5 * self.accel * u * u
        }
    }

    /// First time the speed reaches `v` on the way up.
    pub fn rise_time(&self, v: f64) -> f64 {
        v / self.accel
    }

    /// Time the speed drops back to `v` on the way down.
    pub fn fall_time(&self, v: f64) -> f64 {
        self.ramp_s() + self.hold_s + (self.cruise - v) / self.accel
    }
}
