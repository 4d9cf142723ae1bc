//! Geometric track descriptors.

use alloc::vec::Vec;

use super::track::{dist, TrackLevel};
use crate::stats;

pub const NAMES: [&str; 14] = [
    "AreaToLengthRatio",
    "AverageCurvature",
    "CenterOfMassX",
    "CenterOfMassY",
    "CurveDistancesVariance",
    "CurveLength",
    "EnclosedArea",
    "MedianX",
    "MedianY",
    "SignificantAngleChanges",
    "TotalAngleChanges",
    "TotalCurvature",
    "VarianceX",
    "VarianceY",
];

pub const TOTAL_ANGLE_CHANGES: usize = 10;

/// Step lengths of the closed polyline, including the closing edge.
fn step_lengths(level: &TrackLevel) -> Vec<f64> {
    let pts = &level.polyline;
    let n = pts.len();
    (0..n).map(|i| dist(pts[i], pts[(i + 1) % n])).collect()
}

pub fn curve_length(level: &TrackLevel) -> f64 {
    step_lengths(level).iter().sum()
}

/// Shoelace area of the closed polyline.
pub fn enclosed_area(level: &TrackLevel) -> f64 {
    let pts = &level.polyline;
    let n = pts.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    twice.abs() / 2.0
}

/// Absolute turn angle at every vertex, wrapped to `[0, pi]`. A vertex next
/// to a zero-length edge turns by 0.
pub fn turn_angles(level: &TrackLevel) -> Vec<f64> {
    let pts = &level.polyline;
    let n = pts.len();
    (0..n)
        .map(|i| {
            let prev = pts[(i + n - 1) % n];
            let cur = pts[i];
            let next = pts[(i + 1) % n];
            let (ax, ay) = (cur[0] - prev[0], cur[1] - prev[1]);
            let (bx, by) = (next[0] - cur[0], next[1] - cur[1]);
            if libm::hypot(ax, ay) < 1e-12 || libm::hypot(bx, by) < 1e-12 {
                return 0.0;
            }
            let cross = ax * by - ay * bx;
            let dot = ax * bx + ay * by;
            libm::atan2(cross, dot).abs()
        })
        .collect()
}

pub fn total_angle_changes(level: &TrackLevel) -> f64 {
    turn_angles(level).iter().sum()
}

pub fn significant_angle_changes(level: &TrackLevel, threshold: f64) -> f64 {
    turn_angles(level).iter().filter(|&&a| a > threshold).sum()
}

/// Mean curvature at the midpoints of the Bezier segments.
pub fn average_curvature(level: &TrackLevel) -> f64 {
    stats::mean(&level.midpoint_curvature)
}

/// Midpoint curvature of each segment weighted by its length, summed.
pub fn total_curvature(level: &TrackLevel) -> f64 {
    level
        .midpoint_curvature
        .iter()
        .zip(&level.segment_lengths)
        .map(|(k, l)| k * l)
        .sum()
}

/// All descriptors in [`NAMES`] order.
pub fn track_features(level: &TrackLevel, significant_turn: f64) -> Vec<f64> {
    let xs: Vec<f64> = level.polyline.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = level.polyline.iter().map(|p| p[1]).collect();
    let steps = step_lengths(level);
    let length: f64 = steps.iter().sum();
    let area = enclosed_area(level);
    let turns = turn_angles(level);
    let tac: f64 = turns.iter().sum();
    let sac: f64 = turns.iter().filter(|&&a| a > significant_turn).sum();
    let atlr = if length > 0.0 { area / length } else { 0.0 };
    alloc::vec![
        atlr,
        average_curvature(level),
        stats::mean(&xs),
        stats::mean(&ys),
        stats::variance(&steps),
        length,
        area,
        stats::median(&xs),
        stats::median(&ys),
        sac,
        tac,
        total_curvature(level),
        stats::variance(&xs),
        stats::variance(&ys),
    ]
}
