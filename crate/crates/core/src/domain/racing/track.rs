//! Closed tracks built from control points with a chordal Catmull-Rom
//! spline, stored as cubic Bezier segments plus a sampled polyline.

use alloc::vec::Vec;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CubicBezier {
    pub p0: Point,
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
}

impl CubicBezier {
    pub fn point(&self, t: f64) -> Point {
        let u = 1.0 - t;
        let (a, b, c, d) = (u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t);
        [
            a * self.p0[0] + b * self.p1[0] + c * self.p2[0] + d * self.p3[0],
            a * self.p0[1] + b * self.p1[1] + c * self.p2[1] + d * self.p3[1],
        ]
    }

    pub fn derivative(&self, t: f64) -> Point {
        let u = 1.0 - t;
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = 3.0 * u * u * (self.p1[i] - self.p0[i])
                + 6.0 * u * t * (self.p2[i] - self.p1[i])
                + 3.0 * t * t * (self.p3[i] - self.p2[i]);
        }
        out
    }

    pub fn second_derivative(&self, t: f64) -> Point {
        let u = 1.0 - t;
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = 6.0 * u * (self.p2[i] - 2.0 * self.p1[i] + self.p0[i])
                + 6.0 * t * (self.p3[i] - 2.0 * self.p2[i] + self.p1[i]);
        }
        out
    }

    /// Unsigned curvature `|x'y'' - y'x''| / |B'|^3`; zero where the speed vanishes.
    pub fn curvature(&self, t: f64) -> f64 {
        let d1 = self.derivative(t);
        let d2 = self.second_derivative(t);
        let speed = libm::hypot(d1[0], d1[1]);
        if speed < 1e-12 {
            return 0.0;
        }
        (d1[0] * d2[1] - d1[1] * d2[0]).abs() / (speed * speed * speed)
    }

    /// Chord length over `samples` uniform parameter steps.
    pub fn length(&self, samples: usize) -> f64 {
        let mut prev = self.p0;
        let mut len = 0.0;
        for j in 1..=samples {
            let p = self.point(j as f64 / samples as f64);
            len += dist(prev, p);
            prev = p;
        }
        len
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    libm::hypot(b[0] - a[0], b[1] - a[1])
}

/// Bezier form of the chordal Catmull-Rom span from `b` to `c`.
///
/// Chordal knots (interval = distance between points) keep the tangent at a
/// point on a straight run of control points close to that run, so tracks
/// whose points sit on the playfield border do not wiggle where the border
/// run meets a corner cut.
pub fn catmull_rom_segment(a: Point, b: Point, c: Point, d: Point) -> CubicBezier {
    let t01 = dist(a, b);
    let t12 = dist(b, c);
    let t23 = dist(c, d);
    let mut p1 = [0.0; 2];
    let mut p2 = [0.0; 2];
    if t01 < 1e-12 || t12 < 1e-12 || t23 < 1e-12 {
        // Degenerate spacing: fall back to the uniform tangent rule.
        for i in 0..2 {
            p1[i] = b[i] + (c[i] - a[i]) / 6.0;
            p2[i] = c[i] - (d[i] - b[i]) / 6.0;
        }
    } else {
        for i in 0..2 {
            let m1 = (c[i] - b[i]) + t12 * ((b[i] - a[i]) / t01 - (c[i] - a[i]) / (t01 + t12));
            let m2 = (c[i] - b[i]) + t12 * ((d[i] - c[i]) / t23 - (d[i] - b[i]) / (t12 + t23));
            p1[i] = b[i] + m1 / 3.0;
            p2[i] = c[i] - m2 / 3.0;
        }
    }
    CubicBezier { p0: b, p1, p2, p3: c }
}

/// A closed track. `polyline` holds `segments.len() * m` points; the curve
/// closes from the last point back to the first.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrackLevel {
    pub control_points: Vec<Point>,
    pub segments: Vec<CubicBezier>,
    pub polyline: Vec<Point>,
    /// Curvature of each segment at `t = 1/2`.
    pub midpoint_curvature: Vec<f64>,
    pub segment_lengths: Vec<f64>,
}

impl TrackLevel {
    /// Closed spline through `points` in the given order, `m` samples per span.
    pub fn through_points(points: &[Point], m: usize) -> TrackLevel {
        let n = points.len();
        let segments: Vec<CubicBezier> = (0..n)
            .map(|i| {
                catmull_rom_segment(
                    points[(i + n - 1) % n],
                    points[i],
                    points[(i + 1) % n],
                    points[(i + 2) % n],
                )
            })
            .collect();
        let mut polyline = Vec::with_capacity(n * m);
        for seg in &segments {
            for j in 0..m {
                polyline.push(seg.point(j as f64 / m as f64));
            }
        }
        let midpoint_curvature = segments.iter().map(|s| s.curvature(0.5)).collect();
        let segment_lengths = segments.iter().map(|s| s.length(m)).collect();
        TrackLevel { control_points: points.to_vec(), segments, polyline, midpoint_curvature, segment_lengths }
    }

    pub fn has_nan(&self) -> bool {
        self.polyline.iter().any(|p| !p[0].is_finite() || !p[1].is_finite())
    }
}

/// Orders points counter-clockwise by angle around their centroid.
pub fn sort_by_angle(points: &mut [Point]) {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    points.sort_by(|a, b| {
        let ta = libm::atan2(a[1] - cy, a[0] - cx);
        let tb = libm::atan2(b[1] - cy, b[0] - cx);
        ta.total_cmp(&tb)
    });
}
