//! Small numeric helpers shared across modules.

use core::f64::consts::PI;

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * libm::log10(lin)
}

/// Wrap an angle to (-π, π].
pub fn wrap_pi(mut x: f64) -> f64 {
    // Cheap reduction; inputs here are at most a few hundred radians.
    while x > PI {
        x -= 2.0 * PI;
    }
    while x <= -PI {
        x += 2.0 * PI;
    }
    x
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad * 180.0 / PI
}
