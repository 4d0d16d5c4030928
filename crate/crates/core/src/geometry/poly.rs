//! Closed-polygon helpers. Polygons are vertex lists in pixel
//! coordinates; a closed polygon repeats its first vertex at the end.

pub type Point = [f64; 2];

/// Drops the duplicated closing vertex if present.
pub fn open_ring(points: &[Point]) -> &[Point] {
    if points.len() >= 2 && points.first() == points.last() {
        &points[..points.len() - 1]
    } else {
        points
    }
}

/// Appends the first vertex so the ring is explicitly closed.
pub fn close_ring(mut points: Vec<Point>) -> Vec<Point> {
    if points.first() != points.last() {
        if let Some(&first) = points.first() {
            points.push(first);
        }
    }
    points
}

/// Signed shoelace area (positive for counter-clockwise rings).
pub fn signed_area(points: &[Point]) -> f64 {
    let ring = open_ring(points);
    let n = ring.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x1, y1] = ring[i];
        let [x2, y2] = ring[(i + 1) % n];
        acc += x1 * y2 - x2 * y1;
    }
    acc / 2.0
}

pub fn area(points: &[Point]) -> f64 {
    signed_area(points).abs()
}

/// Area centroid of the enclosed region.
pub fn centroid(points: &[Point]) -> Point {
    let ring = open_ring(points);
    let n = ring.len();
    let a = signed_area(points);
    if a.abs() < 1e-12 {
        // degenerate: fall back to vertex mean
        let mut cx = 0.0;
        let mut cy = 0.0;
        for p in ring {
            cx += p[0];
            cy += p[1];
        }
        return [cx / n as f64, cy / n as f64];
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let [x1, y1] = ring[i];
        let [x2, y2] = ring[(i + 1) % n];
        let cross = x1 * y2 - x2 * y1;
        cx += (x1 + x2) * cross;
        cy += (y1 + y2) * cross;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

/// Total perimeter of the closed ring.
pub fn arc_length(points: &[Point]) -> f64 {
    let ring = open_ring(points);
    let n = ring.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x1, y1] = ring[i];
        let [x2, y2] = ring[(i + 1) % n];
        acc += ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
    }
    acc
}

/// Largest distance from `origin` to any vertex.
pub fn max_radius(points: &[Point], origin: Point) -> f64 {
    open_ring(points)
        .iter()
        .map(|p| ((p[0] - origin[0]).powi(2) + (p[1] - origin[1]).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

pub fn translated(points: &[Point], dx: f64, dy: f64) -> Vec<Point> {
    points.iter().map(|p| [p[0] + dx, p[1] + dy]).collect()
}

/// Isotropic scaling about `origin`.
pub fn scaled_about(points: &[Point], origin: Point, factor: f64) -> Vec<Point> {
    points
        .iter()
        .map(|p| {
            [
                origin[0] + (p[0] - origin[0]) * factor,
                origin[1] + (p[1] - origin[1]) * factor,
            ]
        })
        .collect()
}

fn segments_properly_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let orient = |p: Point, q: Point, r: Point| -> f64 {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// True when no two non-adjacent edges cross (O(n^2); intended for tests
/// and validation, not hot paths).
pub fn is_simple(points: &[Point]) -> bool {
    let ring = open_ring(points);
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        for j in i + 1..n {
            // skip adjacent edges (shared vertex)
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let c = ring[j];
            let d = ring[(j + 1) % n];
            if segments_properly_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Regular n-gon of radius `r` centered at `center`, closed.
pub fn regular_polygon(center: Point, r: f64, n: usize) -> Vec<Point> {
    let mut pts = Vec::with_capacity(n + 1);
    for i in 0..n {
        let t = std::f64::consts::TAU * i as f64 / n as f64;
        pts.push([center[0] + r * t.cos(), center[1] + r * t.sin()]);
    }
    close_ring(pts)
}
