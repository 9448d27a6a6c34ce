//! Obstacle maps and exact line-of-sight obstruction.
//!
//! Buildings are axis-aligned rectangles on a 2-D plane. A radio path between
//! two points is characterized by how often it crosses an exterior wall and
//! how much of it runs through building interiors; both are computed in
//! closed form by clipping the segment against each rectangle (no sampling).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// 2-D point, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Axis-aligned rectangle, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Rect { x_min, y_min, x_max, y_max }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    fn is_proper(&self) -> bool {
        self.x_min < self.x_max && self.y_min < self.y_max
    }

    /// Closed containment (boundary included).
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Open containment (strict interior only).
    pub fn contains_interior(&self, p: Point) -> bool {
        p.x > self.x_min && p.x < self.x_max && p.y > self.y_min && p.y < self.y_max
    }

    fn encloses(&self, other: &Rect) -> bool {
        other.x_min >= self.x_min
            && other.y_min >= self.y_min
            && other.x_max <= self.x_max
            && other.y_max <= self.y_max
    }

    fn interiors_overlap(&self, other: &Rect) -> bool {
        self.x_min < other.x_max
            && other.x_min < self.x_max
            && self.y_min < other.y_max
            && other.y_min < self.y_max
    }
}

/// Result of the line-of-sight scan between two points.
///
/// `wall_crossings` counts exterior-wall crossing events summed over all
/// buildings; `interior_len_m` is the total length of the segment spent
/// strictly inside building interiors. Touching a wall or sliding along it
/// without entering the open interior contributes nothing to either.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstruction {
    pub wall_crossings: u32,
    pub interior_len_m: f64,
}

impl Obstruction {
    pub const NONE: Obstruction = Obstruction { wall_crossings: 0, interior_len_m: 0.0 };

    pub fn is_clear(&self) -> bool {
        self.wall_crossings == 0
    }
}

/// Areas of the transmission disc split into clear and shadowed parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionAreas {
    /// Full disc, pi * r^2.
    pub coverage_m2: f64,
    /// Non-shadowed part.
    pub clear_m2: f64,
    /// Shadow-equivalent part, pi * d^2.
    pub shadowed_m2: f64,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("line {line}: expected {expected} numeric fields, got {got}")]
    Parse { line: usize, expected: usize, got: usize },
    #[error("line {line}: invalid number {value:?}")]
    Number { line: usize, value: String },
    #[error("line {line}: degenerate rectangle (requires x_min < x_max and y_min < y_max)")]
    Degenerate { line: usize },
    #[error("line {line}: building extends outside map bounds")]
    OutOfBounds { line: usize },
    #[error("line {line}: building interior overlaps building from line {other}")]
    Overlap { line: usize, other: usize },
    #[error("missing `bounds x_min y_min x_max y_max` header line")]
    MissingBounds,
}

#[derive(Debug, Error)]
#[error("invalid region radii: require radius > 0 and 0 <= shadow radius <= radius, got r={radius}, d={shadow}")]
pub struct RegionError {
    pub radius: f64,
    pub shadow: f64,
}

/// Immutable set of rectangular buildings inside a world rectangle.
///
/// Validated on construction: rectangles are proper, inside the bounds, and
/// pairwise interior-disjoint (touching walls are fine). Immutable after
/// load, so it can be shared freely across concurrent simulation runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMap {
    bounds: Rect,
    buildings: Vec<Rect>,
}

impl ObstacleMap {
    /// Builds a map from already-parsed rectangles, applying the same
    /// validation as the text loader. Line numbers in errors are 1-based
    /// positions in `buildings`.
    pub fn new(bounds: Rect, buildings: Vec<Rect>) -> Result<Self, MapError> {
        if !bounds.is_proper() {
            return Err(MapError::Degenerate { line: 1 });
        }
        for (i, b) in buildings.iter().enumerate() {
            let line = i + 2; // header occupies line 1
            if !b.is_proper() {
                return Err(MapError::Degenerate { line });
            }
            if !bounds.encloses(b) {
                return Err(MapError::OutOfBounds { line });
            }
            for (j, prev) in buildings[..i].iter().enumerate() {
                if b.interiors_overlap(prev) {
                    return Err(MapError::Overlap { line, other: j + 2 });
                }
            }
        }
        Ok(ObstacleMap { bounds, buildings })
    }

    /// Convenience: a map with no buildings.
    pub fn empty(bounds: Rect) -> Self {
        ObstacleMap::new(bounds, Vec::new()).expect("proper bounds")
    }

    /// Parses the line-oriented map format.
    ///
    /// First non-comment line: `bounds x_min y_min x_max y_max`; every
    /// following non-comment line is one rectangle `x_min y_min x_max y_max`
    /// (meters). `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut bounds: Option<Rect> = None;
        let mut buildings: Vec<(usize, Rect)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if bounds.is_none() {
                let rest = content
                    .strip_prefix("bounds")
                    .ok_or(MapError::MissingBounds)?;
                bounds = Some(parse_rect(rest, line)?);
                continue;
            }
            buildings.push((line, parse_rect(content, line)?));
        }
        let bounds = bounds.ok_or(MapError::MissingBounds)?;
        if !bounds.is_proper() {
            return Err(MapError::Degenerate { line: 1 });
        }
        // Re-run the structural validation with real line numbers.
        for (i, (line, b)) in buildings.iter().enumerate() {
            if !b.is_proper() {
                return Err(MapError::Degenerate { line: *line });
            }
            if !bounds.encloses(b) {
                return Err(MapError::OutOfBounds { line: *line });
            }
            for (other_line, prev) in &buildings[..i] {
                if b.interiors_overlap(prev) {
                    return Err(MapError::Overlap { line: *line, other: *other_line });
                }
            }
        }
        Ok(ObstacleMap { bounds, buildings: buildings.into_iter().map(|(_, b)| b).collect() })
    }

    /// Serializes back to the map file format.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "bounds {} {} {} {}\n",
            self.bounds.x_min, self.bounds.y_min, self.bounds.x_max, self.bounds.y_max
        );
        for b in &self.buildings {
            out.push_str(&format!("{} {} {} {}\n", b.x_min, b.y_min, b.x_max, b.y_max));
        }
        out
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn buildings(&self) -> &[Rect] {
        &self.buildings
    }

    pub fn is_clear(&self) -> bool {
        self.buildings.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.bounds.contains(p)
    }

    /// Exact obstruction of the open segment `p1 -> p2`.
    ///
    /// Each building is clipped against the segment with the slab method over
    /// its *open* interior, so tangent contact (running along a wall, corner
    /// touch) contributes neither a crossing nor length. A crossing through a
    /// corner into the interior counts as one wall crossing.
    pub fn obstruction(&self, p1: Point, p2: Point) -> Obstruction {
        debug_assert!(p1 != p2, "degenerate segment");
        let dx = p2.x - p1.x;
        let dy = p2.y - p1.y;
        let len = p1.distance(p2);
        let mut crossings = 0u32;
        let mut inside = 0.0f64;
        let (sx_min, sx_max) = minmax(p1.x, p2.x);
        let (sy_min, sy_max) = minmax(p1.y, p2.y);
        for b in &self.buildings {
            // cheap bbox reject
            if sx_max < b.x_min || sx_min > b.x_max || sy_max < b.y_min || sy_min > b.y_max {
                continue;
            }
            let Some((ax, bx)) = open_slab(p1.x, dx, b.x_min, b.x_max) else { continue };
            let Some((ay, by)) = open_slab(p1.y, dy, b.y_min, b.y_max) else { continue };
            let t_in = ax.max(ay);
            let t_out = bx.min(by);
            if t_in >= t_out {
                continue; // misses the open interior (tangency included)
            }
            let a = t_in.max(0.0);
            let c = t_out.min(1.0);
            if a >= c {
                continue; // interior overlap lies outside the segment
            }
            if t_in >= 0.0 {
                crossings += 1; // entered through a wall
            }
            if t_out <= 1.0 {
                crossings += 1; // exited through a wall
            }
            inside += (c - a) * len;
        }
        Obstruction { wall_crossings: crossings, interior_len_m: inside }
    }
}

impl FromStr for ObstacleMap {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObstacleMap::parse(s)
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Parameter interval of `p + t*d` lying in the open slab `(lo, hi)`, as an
/// ordered pair; `None` when the line never enters the slab.
fn open_slab(p: f64, d: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if d == 0.0 {
        if p > lo && p < hi {
            Some((f64::NEG_INFINITY, f64::INFINITY))
        } else {
            None
        }
    } else {
        let a = (lo - p) / d;
        let b = (hi - p) / d;
        Some(minmax(a, b))
    }
}

fn parse_rect(fields: &str, line: usize) -> Result<Rect, MapError> {
    let parts: Vec<&str> = fields.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(MapError::Parse { line, expected: 4, got: parts.len() });
    }
    let mut vals = [0.0f64; 4];
    for (i, part) in parts.iter().enumerate() {
        vals[i] = part
            .parse()
            .map_err(|_| MapError::Number { line, value: part.to_string() })?;
    }
    Ok(Rect::new(vals[0], vals[1], vals[2], vals[3]))
}

/// Splits the transmission disc of radius `radius_m` into its clear and
/// shadowed parts, where `shadow_m` is the shadow-equivalent radius:
/// coverage = pi r^2, shadowed = pi d^2, clear = coverage - shadowed.
pub fn region_areas(radius_m: f64, shadow_m: f64) -> Result<RegionAreas, RegionError> {
    if !(radius_m > 0.0) || !(0.0..=radius_m).contains(&shadow_m) {
        return Err(RegionError { radius: radius_m, shadow: shadow_m });
    }
    let coverage = std::f64::consts::PI * radius_m * radius_m;
    let shadowed = std::f64::consts::PI * shadow_m * shadow_m;
    Ok(RegionAreas { coverage_m2: coverage, clear_m2: coverage - shadowed, shadowed_m2: shadowed })
}
