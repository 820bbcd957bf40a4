//! Constant-velocity Kalman filter over image position.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};

use crate::raster::Point;

/// State `[x, y, vx, vy]` in pixels and pixels per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanTrack {
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub q: f64,
    pub r: f64,
}

const INITIAL_VELOCITY_VARIANCE: f64 = 100.0;

fn transition() -> Matrix4<f64> {
    Matrix4::new(
        1.0, 0.0, 1.0, 0.0, //
        0.0, 1.0, 0.0, 1.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

fn observation() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

impl KalmanTrack {
    /// Starts at `pos` at rest; position variance `r`, velocity variance large.
    pub fn new(pos: Point, q: f64, r: f64) -> Self {
        KalmanTrack {
            state: Vector4::new(pos.x, pos.y, 0.0, 0.0),
            covariance: Matrix4::from_diagonal(&Vector4::new(
                r.max(1e-12),
                r.max(1e-12),
                INITIAL_VELOCITY_VARIANCE,
                INITIAL_VELOCITY_VARIANCE,
            )),
            q,
            r,
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> Point {
        Point::new(self.state[2], self.state[3])
    }

    /// Advances one frame; returns the prior position.
    pub fn predict(&mut self) -> Point {
        let f = transition();
        let q = Matrix4::from_diagonal(&Vector4::new(0.25, 0.25, 1.0, 1.0)) * self.q;
        self.state = f * self.state;
        self.covariance = f * self.covariance * f.transpose() + q;
        self.symmetrize();
        self.position()
    }

    /// Folds in a position measurement (Joseph-form covariance update).
    /// Non-finite measurements are ignored. Returns the posterior position.
    pub fn update(&mut self, measurement: Option<Point>) -> Point {
        let Some(m) = measurement.filter(|m| m.is_finite()) else {
            return self.position();
        };
        let h = observation();
        let r = Matrix2::identity() * self.r;
        let p = self.covariance;
        let s = h * p * h.transpose() + r;
        let Some(s_inv) = s.try_inverse() else {
            return self.position();
        };
        let k = p * h.transpose() * s_inv;
        let innovation = Vector2::new(m.x, m.y) - h * self.state;
        self.state += k * innovation;
        let i_kh = Matrix4::identity() - k * h;
        self.covariance = i_kh * p * i_kh.transpose() + k * r * k.transpose();
        self.symmetrize();
        self.position()
    }

    /// Predict then update; the smoothed point is the posterior position, or
    /// the prior when no usable measurement is given.
    pub fn step(&mut self, measurement: Option<Point>) -> Point {
        self.predict();
        self.update(measurement)
    }

    fn symmetrize(&mut self) {
        self.covariance = (self.covariance + self.covariance.transpose()) * 0.5;
    }
}
