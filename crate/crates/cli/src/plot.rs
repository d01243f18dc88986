//! SVG route maps: coverage cells of the serving stations, node glyphs,
//! trips, and the parts of each arc flown in outage.

use std::fmt::Write as _;

use cddp::arcs::sample_path;
use cddp::comm::CommNetwork;
use cddp::geometry::{Point, Region};
use cddp::instance::{Instance, NodeKind};
use cddp::solution::Plan;
use cddp::Result;

const WIDTH_PX: f64 = 800.0;
const MARGIN_PX: f64 = 30.0;

const CELL_FILLS: [&str; 10] = [
    "#e8f1fa", "#fdf0e1", "#e9f6e8", "#f9e7ea", "#efeaf7", "#f3ece6", "#fbeef6", "#eeeeee", "#f4f6de", "#e4f6f8",
];
const DRONE_COLORS: [&str; 6] = ["#1f4e9c", "#2b8a3e", "#7b3fa0", "#b36b00", "#0b7a80", "#5c5c5c"];

/// Cell of station `k`: the region clipped by every bisector half-plane.
pub fn voronoi_cell(stations: &[Point], k: usize, region: &Region) -> Vec<Point> {
    let mut poly = vec![
        Point::new(0.0, 0.0),
        Point::new(region.width, 0.0),
        Point::new(region.width, region.height),
        Point::new(0.0, region.height),
    ];
    let s = stations[k];
    for (j, &o) in stations.iter().enumerate() {
        if j == k || (o.x == s.x && o.y == s.y) {
            continue;
        }
        // keep points closer to s: (p - m) . (o - s) <= 0
        let m = Point::new((s.x + o.x) / 2.0, (s.y + o.y) / 2.0);
        let n = (o.x - s.x, o.y - s.y);
        let side = |p: &Point| (p.x - m.x) * n.0 + (p.y - m.y) * n.1;
        let mut out = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            let (sa, sb) = (side(&a), side(&b));
            if sa <= 0.0 {
                out.push(a);
            }
            if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
                let t = sa / (sa - sb);
                out.push(a.lerp(&b, t));
            }
        }
        poly = out;
        if poly.is_empty() {
            break;
        }
    }
    poly
}

struct Canvas {
    scale: f64,
    height: f64,
}

impl Canvas {
    fn x(&self, p: Point) -> f64 {
        MARGIN_PX + p.x * self.scale
    }

    fn y(&self, p: Point) -> f64 {
        MARGIN_PX + (self.height - p.y) * self.scale
    }

    fn points(&self, pts: &[Point]) -> String {
        pts.iter()
            .map(|&p| format!("{:.2},{:.2}", self.x(p), self.y(p)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Sub-segments of the straight arc whose both sampled ends are in outage.
pub fn outage_segments(network: &CommNetwork, a: Point, b: Point, r: usize) -> Result<Vec<(Point, Point)>> {
    let pts = sample_path(a, b, r)?;
    let flags: Vec<bool> = pts.iter().map(|&p| network.in_outage(p)).collect();
    Ok((0..pts.len().saturating_sub(1))
        .filter(|&i| flags[i] && flags[i + 1])
        .map(|i| (pts[i], pts[i + 1]))
        .collect())
}

fn label(kind: NodeKind, instance: &Instance, id: usize) -> String {
    let ordinal = instance.nodes[..id].iter().filter(|n| n.kind == kind).count();
    let prefix = match kind {
        NodeKind::Depot => "D",
        NodeKind::Customer => "C",
        NodeKind::ChargingStation => "CS",
        NodeKind::Waypoint => "W",
    };
    format!("{prefix}{ordinal}")
}

pub fn render_svg(instance: &Instance, plan: &Plan) -> Result<String> {
    plan.matches(instance)?;
    let region = instance.region;
    let scale = (WIDTH_PX - 2.0 * MARGIN_PX) / region.width.max(1.0);
    let cv = Canvas {
        scale,
        height: region.height,
    };
    let w = WIDTH_PX;
    let h = region.height * scale + 2.0 * MARGIN_PX;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"#);

    let stations = instance.comm.positions();
    let _ = writeln!(s, r#"<g id="cells">"#);
    for k in 0..stations.len() {
        let cell = voronoi_cell(&stations, k, &region);
        if cell.len() < 3 {
            continue;
        }
        let _ = writeln!(
            s,
            r##"<polygon class="cell" points="{}" fill="{}" stroke="#777777" stroke-width="1" stroke-dasharray="6,4"/>"##,
            cv.points(&cell),
            CELL_FILLS[k % CELL_FILLS.len()]
        );
    }
    let _ = writeln!(s, "</g>");
    let corners = [
        Point::new(0.0, 0.0),
        Point::new(region.width, 0.0),
        Point::new(region.width, region.height),
        Point::new(0.0, region.height),
    ];
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="none" stroke="#333333" stroke-width="1.5"/>"##,
        cv.points(&corners)
    );

    let _ = writeln!(s, r#"<g id="stations">"#);
    for (k, &p) in stations.iter().enumerate() {
        let (x, y) = (cv.x(p), cv.y(p));
        let _ = writeln!(
            s,
            r##"<path class="station" d="M {:.2} {:.2} L {:.2} {:.2} L {:.2} {:.2} Z" fill="#444444"><title>CN{k}</title></path>"##,
            x,
            y - 7.0,
            x - 6.0,
            y + 5.0,
            x + 6.0,
            y + 5.0
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="trips" fill="none" stroke-linejoin="round">"#);
    for (u, trips) in plan.trips_by_drone.iter().enumerate() {
        let color = DRONE_COLORS[u % DRONE_COLORS.len()];
        for (k, t) in trips.iter().enumerate() {
            let pts: Vec<Point> = t.nodes.iter().map(|&n| instance.position(n)).collect();
            let _ = writeln!(
                s,
                r#"<polyline class="trip" data-drone="{u}" data-trip="{k}" points="{}" stroke="{color}" stroke-width="2"/>"#,
                cv.points(&pts)
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g id="outage" stroke="#d62020" stroke-width="6" stroke-linecap="round">"##);
    let r = instance.metric_config.r_segments;
    for (_, _, t) in plan.trips() {
        for (i, j) in t.arcs() {
            for (a, b) in outage_segments(&instance.comm, instance.position(i), instance.position(j), r)? {
                let _ = writeln!(
                    s,
                    r#"<line class="outage" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                    cv.x(a),
                    cv.y(a),
                    cv.x(b),
                    cv.y(b)
                );
            }
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="nodes" font-family="sans-serif" font-size="11">"#);
    for node in &instance.nodes {
        let (x, y) = (cv.x(node.position), cv.y(node.position));
        let name = label(node.kind, instance, node.id);
        match node.kind {
            NodeKind::Depot => {
                let _ = writeln!(
                    s,
                    r##"<rect class="depot" x="{:.2}" y="{:.2}" width="12" height="12" fill="#222222"/>"##,
                    x - 6.0,
                    y - 6.0
                );
            }
            NodeKind::Customer => {
                let _ = writeln!(
                    s,
                    r##"<circle class="customer" cx="{x:.2}" cy="{y:.2}" r="6" fill="#f2c200" stroke="#222222"/>"##
                );
            }
            NodeKind::ChargingStation => {
                let _ = writeln!(
                    s,
                    r##"<path class="charging" d="M {x:.2} {:.2} L {:.2} {y:.2} L {x:.2} {:.2} L {:.2} {y:.2} Z" fill="#3aa655" stroke="#222222"/>"##,
                    y - 7.0,
                    x + 7.0,
                    y + 7.0,
                    x - 7.0
                );
            }
            NodeKind::Waypoint => {
                let _ = writeln!(s, r##"<circle class="waypoint" cx="{x:.2}" cy="{y:.2}" r="2" fill="#888888"/>"##);
                continue;
            }
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{name}</text>"#, x + 8.0, y - 8.0);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}
