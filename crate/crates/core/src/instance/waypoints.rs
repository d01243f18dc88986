//! Waypoints at coverage-cell corners: Voronoi vertices of the station set
//! inside the service region, and points where Voronoi edges meet the region
//! boundary.
//!
//! Station counts are small (tens), so the diagram is not built explicitly.
//! A circumcenter of three stations is a vertex when no other station is
//! strictly closer; a bisector/boundary crossing lies on an edge when no other
//! station is strictly closer than the two defining ones.

use crate::comm::CommNetwork;
use crate::geometry::{Point, Region};

const DEDUP_TOL_M: f64 = 1e-6;

pub fn generate_waypoints(network: &CommNetwork, region: &Region) -> Vec<Point> {
    let sites = network.positions();
    if sites.len() < 2 {
        return Vec::new();
    }
    let scale = region.diagonal().max(1.0);
    let tie_tol = 1e-9 * scale;
    let mut out: Vec<Point> = Vec::new();
    let mut add = |p: Point| {
        if !out
            .iter()
            .any(|q| (q.x - p.x).abs() <= DEDUP_TOL_M && (q.y - p.y).abs() <= DEDUP_TOL_M)
        {
            out.push(p);
        }
    };

    let n = sites.len();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let Some(cc) = circumcenter(sites[a], sites[b], sites[c]) else {
                    continue;
                };
                if region.contains(&cc, DEDUP_TOL_M) && is_nearest(&sites, cc, &[a, b, c], tie_tol) {
                    add(snap(region, cc));
                }
            }
        }
    }

    for a in 0..n {
        for b in (a + 1)..n {
            for p in bisector_boundary_hits(sites[a], sites[b], region) {
                if is_nearest(&sites, p, &[a, b], tie_tol) {
                    add(p);
                }
            }
        }
    }
    out
}

fn snap(region: &Region, p: Point) -> Point {
    region.clamp(p)
}

fn circumcenter(a: Point, b: Point, c: Point) -> Option<Point> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    let scale = [a, b, c]
        .iter()
        .flat_map(|p| [p.x.abs(), p.y.abs()])
        .fold(1.0, f64::max);
    if d.abs() <= 1e-12 * scale * scale {
        return None;
    }
    let (a2, b2, c2) = (
        a.x * a.x + a.y * a.y,
        b.x * b.x + b.y * b.y,
        c.x * c.x + c.y * c.y,
    );
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    Some(Point::new(ux, uy))
}

/// All sites in `ids` are (within `tol`) at the minimum distance from `p`.
fn is_nearest(sites: &[Point], p: Point, ids: &[usize], tol: f64) -> bool {
    let min = sites.iter().map(|s| s.distance(&p)).fold(f64::INFINITY, f64::min);
    ids.iter().all(|&i| sites[i].distance(&p) - min <= tol)
}

fn bisector_boundary_hits(a: Point, b: Point, region: &Region) -> Vec<Point> {
    let (mx, my) = ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let mut hits = Vec::new();
    if dx == 0.0 && dy == 0.0 {
        return hits;
    }
    // bisector: dx (x - mx) + dy (y - my) = 0
    if dy != 0.0 {
        for x in [0.0, region.width] {
            let y = my - dx * (x - mx) / dy;
            if (-DEDUP_TOL_M..=region.height + DEDUP_TOL_M).contains(&y) {
                hits.push(Point::new(x, y.clamp(0.0, region.height)));
            }
        }
    }
    if dx != 0.0 {
        for y in [0.0, region.height] {
            let x = mx - dy * (y - my) / dx;
            if (-DEDUP_TOL_M..=region.width + DEDUP_TOL_M).contains(&x) {
                hits.push(Point::new(x.clamp(0.0, region.width), y));
            }
        }
    }
    hits
}
