//! The 2.5D urban environment (flat terrain plus extruded building footprints)
//! and the discretized point sets derived from it.
//!
//! Point ordering is part of the contract: service grids are emitted row by row
//! (lexicographic in `(y, x)`), gNB candidates follow each building's boundary
//! in footprint order, and surface samples go wall by wall, then roof.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{PlanError, Result};
use crate::geom::{point_in_polygon_strict, segments_intersect, signed_area2, Point3, UnitVec3};

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance used when deciding whether a point lies on a polygon edge.
pub const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] - EDGE_TOL
            && p[0] <= self.max[0] + EDGE_TOL
            && p[1] >= self.min[1] - EDGE_TOL
            && p[1] <= self.max[1] + EDGE_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub id: String,
    /// Counter-clockwise simple polygon, meters.
    pub footprint: Vec<[f64; 2]>,
    #[serde(rename = "height_m")]
    pub height: f64,
    /// Whether this building's faces act as mirrors for specular visibility.
    #[serde(default = "default_true")]
    pub reflective: bool,
}

fn default_true() -> bool {
    true
}

impl Building {
    pub fn perimeter(&self) -> f64 {
        let n = self.footprint.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.footprint[i], self.footprint[(i + 1) % n]);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .sum()
    }

    pub fn area(&self) -> f64 {
        signed_area2(&self.footprint) / 2.0
    }

    pub fn contains_xy(&self, p: [f64; 2]) -> bool {
        point_in_polygon_strict(p, &self.footprint, EDGE_TOL)
    }

    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.footprint {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.footprint.len();
        (0..n).map(move |i| (self.footprint[i], self.footprint[(i + 1) % n]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub bounds: Bounds,
    #[serde(rename = "resolution_m")]
    pub grid_resolution: f64,
    #[serde(rename = "ue_height_m")]
    pub ue_height: f64,
    #[serde(rename = "gnb_mount_offset_m", default)]
    pub gnb_mount_offset: f64,
    #[serde(rename = "pmr_height_band_m")]
    pub pmr_height_band: [f64; 2],
    /// Rooftops participate as specular mirrors when true.
    #[serde(default = "default_true")]
    pub roof_mirrors: bool,
    pub buildings: Vec<Building>,
}

const REFERENCE_JSON: &str = include_str!("../../../scenarios/reference.json");

impl Scenario {
    /// The bundled six-building reference map.
    pub fn reference() -> Scenario {
        Scenario::from_json_str(REFERENCE_JSON, "<reference>").expect("bundled scenario is valid")
    }

    /// An empty map with the given extent; handy for tests.
    pub fn open_field(width: f64, height: f64, resolution: f64) -> Scenario {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: "open-field".into(),
            bounds: Bounds {
                min: [0.0, 0.0],
                max: [width, height],
            },
            grid_resolution: resolution,
            ue_height: 1.5,
            gnb_mount_offset: 0.0,
            pmr_height_band: [5.0, 35.0],
            roof_mirrors: true,
            buildings: Vec::new(),
        }
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| PlanError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PlanError::Validation(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let b = &self.bounds;
        if !(b.min.iter().chain(&b.max).all(|v| v.is_finite())
            && b.min[0] < b.max[0]
            && b.min[1] < b.max[1])
        {
            return bad("bounds must be a non-empty finite rectangle".into());
        }
        if !(self.grid_resolution.is_finite() && self.grid_resolution > 0.0) {
            return bad(format!(
                "resolution_m must be > 0, got {}",
                self.grid_resolution
            ));
        }
        if !(self.ue_height.is_finite() && self.ue_height > 0.0) {
            return bad(format!("ue_height_m must be > 0, got {}", self.ue_height));
        }
        if !(self.gnb_mount_offset.is_finite() && self.gnb_mount_offset >= 0.0) {
            return bad("gnb_mount_offset_m must be >= 0".into());
        }
        let [lo, hi] = self.pmr_height_band;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return bad(format!(
                "pmr_height_band_m must satisfy 0 < low < high, got [{lo}, {hi}]"
            ));
        }
        let mut ids = BTreeSet::new();
        for bld in &self.buildings {
            if !ids.insert(bld.id.as_str()) {
                return bad(format!("duplicate building id '{}'", bld.id));
            }
            self.validate_building(bld)?;
        }
        for (i, a) in self.buildings.iter().enumerate() {
            for bb in &self.buildings[i + 1..] {
                if footprints_overlap(a, bb) {
                    return bad(format!("buildings '{}' and '{}' overlap", a.id, bb.id));
                }
            }
        }
        Ok(())
    }

    fn validate_building(&self, bld: &Building) -> Result<()> {
        let bad = |m: String| Err(PlanError::Validation(format!("building '{}': {m}", bld.id)));
        if !(bld.height.is_finite() && bld.height > 0.0) {
            return bad(format!("height must be > 0, got {}", bld.height));
        }
        let n = bld.footprint.len();
        if n < 3 {
            return bad("footprint needs at least 3 vertices".into());
        }
        if bld
            .footprint
            .iter()
            .any(|v| !(v[0].is_finite() && v[1].is_finite()))
        {
            return bad("footprint has non-finite coordinates".into());
        }
        if signed_area2(&bld.footprint) <= 0.0 {
            return bad("footprint must be counter-clockwise with positive area".into());
        }
        for i in 0..n {
            let (a, b) = (bld.footprint[i], bld.footprint[(i + 1) % n]);
            if a == b {
                return bad(format!("repeated vertex at index {i}"));
            }
            for j in i + 1..n {
                // adjacent edges share a vertex by construction
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (bld.footprint[j], bld.footprint[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return bad(format!("footprint self-intersects (edges {i} and {j})"));
                }
            }
        }
        if !bld.footprint.iter().all(|v| self.bounds.contains(*v)) {
            return bad("footprint extends outside the scenario bounds".into());
        }
        Ok(())
    }

    /// Flat list of every building face, walls first (in footprint order) then the roof.
    pub fn faces(&self) -> Vec<Face> {
        let mut out = Vec::new();
        for (bi, bld) in self.buildings.iter().enumerate() {
            for (ei, (a, b)) in bld.edges().enumerate() {
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                let dir = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
                out.push(Face {
                    id: out.len(),
                    building: bi,
                    kind: FaceKind::Wall { edge: ei },
                    origin: Point3::new(a[0], a[1], 0.0),
                    normal: UnitVec3::new(Point3::new(dir[1], -dir[0], 0.0))
                        .expect("non-degenerate edge"),
                    u_axis: Point3::new(dir[0], dir[1], 0.0),
                    u_len: len,
                    v_len: bld.height,
                    reflective: bld.reflective,
                });
            }
            let v0 = bld.footprint[0];
            out.push(Face {
                id: out.len(),
                building: bi,
                kind: FaceKind::Roof,
                origin: Point3::new(v0[0], v0[1], bld.height),
                normal: UnitVec3::Z,
                u_axis: Point3::new(1.0, 0.0, 0.0),
                u_len: 0.0,
                v_len: 0.0,
                reflective: bld.reflective && self.roof_mirrors,
            });
        }
        out
    }

    /// Total service-area extent (bounds minus footprints), m².
    pub fn service_area_m2(&self) -> f64 {
        self.bounds.width() * self.bounds.height()
            - self.buildings.iter().map(Building::area).sum::<f64>()
    }
}

fn footprints_overlap(a: &Building, b: &Building) -> bool {
    let (alo, ahi) = a.bbox();
    let (blo, bhi) = b.bbox();
    if ahi[0] <= blo[0] || bhi[0] <= alo[0] || ahi[1] <= blo[1] || bhi[1] <= alo[1] {
        return false;
    }
    // proper edge crossings
    for (p, q) in a.edges() {
        for (r, s) in b.edges() {
            if proper_cross(p, q, r, s) {
                return true;
            }
        }
    }
    // containment, including identical footprints
    let centroid = |bld: &Building| {
        let n = bld.footprint.len() as f64;
        let c = bld
            .footprint
            .iter()
            .fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        [c[0] / n, c[1] / n]
    };
    a.footprint.iter().any(|v| b.contains_xy(*v))
        || b.footprint.iter().any(|v| a.contains_xy(*v))
        || (a.contains_xy(centroid(b)) || b.contains_xy(centroid(a)))
        || edge_midpoints_inside(a, b)
        || edge_midpoints_inside(b, a)
}

fn edge_midpoints_inside(a: &Building, b: &Building) -> bool {
    a.edges()
        .any(|(p, q)| b.contains_xy([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]))
}

fn proper_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let (o1, o2, o3, o4) = (
        orient(a, b, c),
        orient(a, b, d),
        orient(c, d, a),
        orient(c, d, b),
    );
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| PlanError::io(path.display().to_string(), e))?;
    Scenario::from_json_str(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaceKind {
    Wall { edge: usize },
    Roof,
}

/// A planar building face. Walls are rectangles spanned by `u_axis` (along the
/// footprint edge) and +z; roofs are the footprint polygon lifted to the building height.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub id: usize,
    pub building: usize,
    pub kind: FaceKind,
    pub origin: Point3,
    /// Outward unit normal.
    pub normal: UnitVec3,
    pub u_axis: Point3,
    pub u_len: f64,
    pub v_len: f64,
    pub reflective: bool,
}

impl Face {
    /// Signed distance of `p` from the face plane (positive on the outward side).
    pub fn plane_distance(&self, p: Point3) -> f64 {
        (p - self.origin).dot(self.normal.get())
    }

    /// Whether a point on the face plane lies strictly inside the face.
    pub fn contains_in_plane(&self, p: Point3, scenario: &Scenario) -> bool {
        match self.kind {
            FaceKind::Wall { .. } => {
                let d = p - self.origin;
                let u = d.dot(self.u_axis);
                let v = d.z;
                u > EDGE_TOL
                    && u < self.u_len - EDGE_TOL
                    && v > EDGE_TOL
                    && v < self.v_len - EDGE_TOL
            }
            FaceKind::Roof => scenario.buildings[self.building].contains_xy([p.x, p.y]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GridRole {
    ServiceArea,
    GnbCandidate,
    BuildingSurface,
    PmrCandidate,
    OutageArea,
}

/// Where a surface sample sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTag {
    pub building: usize,
    pub face: usize,
    pub normal: UnitVec3,
}

/// Raster layout of the service grid: `nx` columns by `ny` rows of square cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterLayout {
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    pub role: GridRole,
    pub resolution: f64,
    pub points: Vec<Point3>,
    /// Surface metadata; filled for `BuildingSurface` and `PmrCandidate` sets.
    pub surface: Vec<SurfaceTag>,
    /// Raster cell (`ix + iy * nx`) per point; filled for `ServiceArea` and `OutageArea` sets.
    pub cells: Vec<usize>,
    pub layout: Option<RasterLayout>,
}

impl GridSet {
    fn new(role: GridRole, resolution: f64) -> Self {
        Self {
            role,
            resolution,
            points: Vec::new(),
            surface: Vec::new(),
            cells: Vec::new(),
            layout: None,
        }
    }

    pub fn empty(role: GridRole, resolution: f64) -> Self {
        Self::new(role, resolution)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The subset at `indices`, keeping per-point metadata, under a new role.
    pub fn subset(&self, indices: &[usize], role: GridRole) -> GridSet {
        GridSet {
            role,
            resolution: self.resolution,
            points: indices.iter().map(|&i| self.points[i]).collect(),
            surface: if self.surface.is_empty() {
                Vec::new()
            } else {
                indices.iter().map(|&i| self.surface[i]).collect()
            },
            cells: if self.cells.is_empty() {
                Vec::new()
            } else {
                indices.iter().map(|&i| self.cells[i]).collect()
            },
            layout: self.layout,
        }
    }
}

/// One ground point per resolution-sized cell whose centroid lies outside every footprint.
pub fn generate_service_grid(s: &Scenario) -> GridSet {
    let res = s.grid_resolution;
    let nx = (s.bounds.width() / res + 1e-9).floor() as usize;
    let ny = (s.bounds.height() / res + 1e-9).floor() as usize;
    let mut g = GridSet::new(GridRole::ServiceArea, res);
    g.layout = Some(RasterLayout {
        nx,
        ny,
        origin: s.bounds.min,
        resolution: res,
    });
    for iy in 0..ny {
        let y = s.bounds.min[1] + (iy as f64 + 0.5) * res;
        for ix in 0..nx {
            let x = s.bounds.min[0] + (ix as f64 + 0.5) * res;
            if s.buildings
                .iter()
                .any(|b| crate::geom::point_in_polygon_closed([x, y], &b.footprint, EDGE_TOL))
            {
                continue;
            }
            g.points.push(Point3::new(x, y, s.ue_height));
            g.cells.push(ix + iy * nx);
        }
    }
    g
}

/// Rooftop-boundary mounting points: each footprint edge is split into
/// `round(len / resolution)` equal pieces and a candidate sits at each piece's midpoint.
pub fn generate_gnb_candidates(s: &Scenario) -> Result<GridSet> {
    if s.buildings.is_empty() {
        return Err(PlanError::NoMountingSurfaces);
    }
    let res = s.grid_resolution;
    let mut g = GridSet::new(GridRole::GnbCandidate, res);
    for bld in &s.buildings {
        let z = bld.height + s.gnb_mount_offset;
        for (a, b) in bld.edges() {
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let n = ((len / res).round() as usize).max(1);
            for k in 0..n {
                let t = (k as f64 + 0.5) / n as f64;
                g.points.push(Point3::new(
                    a[0] + t * (b[0] - a[0]),
                    a[1] + t * (b[1] - a[1]),
                    z,
                ));
            }
        }
    }
    Ok(g)
}

/// Samples tiling every wall and rooftop at spacing `facet`, with outward normals.
pub fn generate_building_surface_grid(s: &Scenario, facet: f64) -> Result<GridSet> {
    if !(facet.is_finite() && facet > 0.0) {
        return Err(PlanError::Domain(format!(
            "facet size must be > 0, got {facet}"
        )));
    }
    let faces = s.faces();
    let mut g = GridSet::new(GridRole::BuildingSurface, facet);
    let count = |len: f64| (len / facet + 1e-9).floor() as usize;
    for face in &faces {
        let bld = &s.buildings[face.building];
        match face.kind {
            FaceKind::Wall { .. } => {
                let (nu, nv) = (count(face.u_len), count(face.v_len));
                let (u0, v0) = (
                    (face.u_len - nu as f64 * facet) / 2.0,
                    (face.v_len - nv as f64 * facet) / 2.0,
                );
                for iv in 0..nv {
                    let z = v0 + (iv as f64 + 0.5) * facet;
                    for iu in 0..nu {
                        let u = u0 + (iu as f64 + 0.5) * facet;
                        let p = face.origin + face.u_axis.scale(u) + Point3::new(0.0, 0.0, z);
                        g.points.push(p);
                        g.surface.push(SurfaceTag {
                            building: face.building,
                            face: face.id,
                            normal: face.normal,
                        });
                    }
                }
            }
            FaceKind::Roof => {
                let (lo, hi) = bld.bbox();
                let (nx, ny) = (count(hi[0] - lo[0]), count(hi[1] - lo[1]));
                let x0 = lo[0] + ((hi[0] - lo[0]) - nx as f64 * facet) / 2.0;
                let y0 = lo[1] + ((hi[1] - lo[1]) - ny as f64 * facet) / 2.0;
                for iy in 0..ny {
                    let y = y0 + (iy as f64 + 0.5) * facet;
                    for ix in 0..nx {
                        let x = x0 + (ix as f64 + 0.5) * facet;
                        if bld.contains_xy([x, y]) {
                            g.points.push(Point3::new(x, y, bld.height));
                            g.surface.push(SurfaceTag {
                                building: face.building,
                                face: face.id,
                                normal: face.normal,
                            });
                        }
                    }
                }
            }
        }
    }
    if g.points.is_empty() {
        return Err(PlanError::FacetTooLarge { facet });
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(id: &str, x0: f64, y0: f64, w: f64, d: f64, h: f64) -> Building {
        Building {
            id: id.into(),
            footprint: vec![[x0, y0], [x0 + w, y0], [x0 + w, y0 + d], [x0, y0 + d]],
            height: h,
            reflective: true,
        }
    }

    #[test]
    fn open_field_grid() {
        let s = Scenario::open_field(10.0, 10.0, 1.0);
        let g = generate_service_grid(&s);
        assert_eq!(g.len(), 100);
        assert!(g.points.iter().all(|p| p.z == 1.5));
        // row-major in (y, x)
        assert_eq!(g.points[0], Point3::new(0.5, 0.5, 1.5));
        assert_eq!(g.points[1], Point3::new(1.5, 0.5, 1.5));
        assert_eq!(g.points[10], Point3::new(0.5, 1.5, 1.5));
        assert!(generate_gnb_candidates(&s).is_err());
    }

    #[test]
    fn fully_built_bounds_has_no_service_points() {
        let mut s = Scenario::open_field(10.0, 10.0, 1.0);
        s.buildings.push(boxed("all", 0.0, 0.0, 10.0, 10.0, 5.0));
        s.validate().unwrap();
        assert!(generate_service_grid(&s).is_empty());
    }

    #[test]
    fn candidates_and_surface_on_a_box() {
        let mut s = Scenario::open_field(30.0, 30.0, 1.0);
        s.buildings.push(boxed("b", 10.0, 10.0, 10.0, 10.0, 10.0));
        let c = generate_gnb_candidates(&s).unwrap();
        assert_eq!(c.len(), 40);
        assert!(c.points.iter().all(|p| p.z == 10.0));
        let surf = generate_building_surface_grid(&s, 1.0).unwrap();
        assert_eq!(surf.len(), 500);
        // east wall is the second edge of the CCW footprint
        let east: Vec<_> = surf
            .points
            .iter()
            .zip(&surf.surface)
            .filter(|(p, _)| (p.x - 20.0).abs() < 1e-12)
            .collect();
        assert_eq!(east.len(), 100);
        assert!(east
            .iter()
            .all(|(_, t)| t.normal.get() == Point3::new(1.0, 0.0, 0.0)));
        assert!(matches!(
            generate_building_surface_grid(&s, 11.0),
            Err(PlanError::FacetTooLarge { .. })
        ));
    }

    #[test]
    fn mount_offset_lifts_candidates() {
        let mut s = Scenario::open_field(60.0, 60.0, 1.0);
        s.buildings.push(boxed("b", 10.0, 10.0, 10.0, 10.0, 25.0));
        s.gnb_mount_offset = 0.0;
        assert!(generate_gnb_candidates(&s)
            .unwrap()
            .points
            .iter()
            .all(|p| p.z == 25.0));
        s.gnb_mount_offset = 2.0;
        assert!(generate_gnb_candidates(&s)
            .unwrap()
            .points
            .iter()
            .all(|p| p.z == 27.0));
    }

    #[test]
    fn validation_names_offender() {
        let mut s = Scenario::open_field(50.0, 50.0, 1.0);
        s.buildings.push(boxed("tower", 1.0, 1.0, 5.0, 5.0, -1.0));
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("tower"), "{err}");

        let mut s = Scenario::open_field(50.0, 50.0, 1.0);
        s.buildings.push(boxed("a", 1.0, 1.0, 10.0, 10.0, 5.0));
        s.buildings.push(boxed("b", 5.0, 5.0, 10.0, 10.0, 5.0));
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("'a'") && err.contains("'b'"), "{err}");

        let mut s = Scenario::open_field(50.0, 50.0, 1.0);
        s.buildings.push(boxed("far", 45.0, 1.0, 10.0, 10.0, 5.0));
        assert!(s.validate().unwrap_err().to_string().contains("far"));

        // touching footprints are fine
        let mut s = Scenario::open_field(50.0, 50.0, 1.0);
        s.buildings.push(boxed("a", 0.0, 0.0, 10.0, 10.0, 5.0));
        s.buildings.push(boxed("b", 10.0, 0.0, 10.0, 10.0, 5.0));
        s.validate().unwrap();
    }

    #[test]
    fn clockwise_footprint_rejected() {
        let mut s = Scenario::open_field(50.0, 50.0, 1.0);
        let mut b = boxed("cw", 1.0, 1.0, 5.0, 5.0, 3.0);
        b.footprint.reverse();
        s.buildings.push(b);
        assert!(s.validate().is_err());
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            Scenario::from_json_str("{\"bounds\": 3}", "x.json"),
            Err(PlanError::Parse { .. })
        ));
    }
}
