use log::warn;

use super::ObstacleBox;
use crate::geometry::PixelWaypoint;

const MAX_SHIFTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct AvoidResult {
    pub waypoint: PixelWaypoint,
    pub adjusted: bool,
    /// Set when every column on the waypoint's row is blocked.
    pub blocked: bool,
}

/// Moves a waypoint horizontally out of every obstacle box inflated by
/// `margin` pixels. Shifts go to the nearer inflated edge (ties go right);
/// if that keeps landing in other boxes, the waypoint moves to the middle of
/// the widest free horizontal gap on its row. With no free column the
/// waypoint is returned unchanged.
pub fn avoid_adjust(
    wp: PixelWaypoint,
    boxes: &[ObstacleBox],
    margin: f64,
    image_width: f64,
) -> AvoidResult {
    let inflated: Vec<ObstacleBox> = boxes.iter().map(|b| b.inflated(margin)).collect();
    let hit = |p: &PixelWaypoint| inflated.iter().find(|b| b.strictly_contains(p));
    if hit(&wp).is_none() {
        return AvoidResult {
            waypoint: wp,
            adjusted: false,
            blocked: false,
        };
    }

    let mut p = wp;
    for _ in 0..MAX_SHIFTS {
        let Some(b) = hit(&p) else {
            return AvoidResult {
                waypoint: p,
                adjusted: true,
                blocked: false,
            };
        };
        let left_ok = b.x1 >= 0.0;
        let right_ok = b.x2 <= image_width;
        let to_right = (b.x2 - p.u) <= (p.u - b.x1);
        p.u = match (left_ok, right_ok) {
            (true, true) => {
                if to_right {
                    b.x2
                } else {
                    b.x1
                }
            }
            (false, true) => b.x2,
            (true, false) => b.x1,
            (false, false) => break,
        };
    }
    if hit(&p).is_none() {
        return AvoidResult {
            waypoint: p,
            adjusted: true,
            blocked: false,
        };
    }

    match widest_gap(&inflated, wp.v, image_width) {
        Some((lo, hi)) => AvoidResult {
            waypoint: PixelWaypoint::new((lo + hi) / 2.0, wp.v),
            adjusted: true,
            blocked: false,
        },
        None => {
            warn!(
                "no free column on row {:.1}; keeping waypoint ({:.1}, {:.1})",
                wp.v, wp.u, wp.v
            );
            AvoidResult {
                waypoint: wp,
                adjusted: false,
                blocked: true,
            }
        }
    }
}

/// Widest open interval of [0, width] not covered by any box spanning row `v`.
fn widest_gap(inflated: &[ObstacleBox], v: f64, width: f64) -> Option<(f64, f64)> {
    let mut spans: Vec<(f64, f64)> = inflated
        .iter()
        .filter(|b| b.y1 < v && v < b.y2)
        .map(|b| (b.x1.max(0.0), b.x2.min(width)))
        .filter(|(a, b)| a < b)
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<(f64, f64)> = None;
    let mut cursor = 0.0;
    let mut consider = |lo: f64, hi: f64| {
        if hi > lo && best.is_none_or(|(a, b)| hi - lo > b - a) {
            best = Some((lo, hi));
        }
    };
    for (a, b) in spans {
        consider(cursor, a);
        cursor = f64::max(cursor, b);
    }
    consider(cursor, width);
    best
}
