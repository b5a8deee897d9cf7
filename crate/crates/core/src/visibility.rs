//! Direct, specular and diffuse visibility over extruded-footprint buildings.
//!
//! A segment is blocked when it passes through the open interior of a building
//! prism. Grazing a wall, running along a roof, or starting on a face is not a
//! blockage, so sources mounted on a building see past their own edge.
//!
//! Specular visibility uses the image method: the source is mirrored across each
//! reflective face plane and the segment from the image to the target gives the
//! reflection point, which is then validated with two occlusion queries.

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::geom::{point_in_polygon_strict, Point3};
use crate::scenario::{Face, GridSet, Scenario, EDGE_TOL};

/// Plane-crossing tolerance, meters.
pub const PLANE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Prism {
    footprint: Vec<[f64; 2]>,
    height: f64,
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Prism {
    /// True iff the open segment `p -> q` spends more than `PLANE_TOL` meters
    /// strictly inside the prism.
    fn blocks(&self, p: Point3, q: Point3) -> bool {
        let d = q - p;
        let seg_len = d.norm();
        if seg_len <= PLANE_TOL {
            return false;
        }
        // parameter range with 0 < z < height
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if d.z.abs() < 1e-15 {
            if !(p.z > 0.0 && p.z < self.height) {
                return false;
            }
        } else {
            let ta = (0.0 - p.z) / d.z;
            let tb = (self.height - p.z) / d.z;
            lo = lo.max(ta.min(tb));
            hi = hi.min(ta.max(tb));
        }
        if (hi - lo) * seg_len <= PLANE_TOL {
            return false;
        }
        // cheap rejection against the footprint bbox
        let (x0, x1) = (p.x + lo * d.x, p.x + hi * d.x);
        let (y0, y1) = (p.y + lo * d.y, p.y + hi * d.y);
        if x0.max(x1) <= self.lo[0]
            || x0.min(x1) >= self.hi[0]
            || y0.max(y1) <= self.lo[1]
            || y0.min(y1) >= self.hi[1]
        {
            return false;
        }

        let mut cuts: Vec<f64> = Vec::with_capacity(8);
        cuts.push(lo);
        let n = self.footprint.len();
        for i in 0..n {
            let a = self.footprint[i];
            let b = self.footprint[(i + 1) % n];
            let e = [b[0] - a[0], b[1] - a[1]];
            let denom = d.x * e[1] - d.y * e[0];
            if denom.abs() < 1e-15 {
                continue;
            }
            let ap = [a[0] - p.x, a[1] - p.y];
            let t = (ap[0] * e[1] - ap[1] * e[0]) / denom;
            let u = (ap[0] * d.y - ap[1] * d.x) / denom;
            if (-1e-12..=1.0 + 1e-12).contains(&u) && t > lo && t < hi {
                cuts.push(t);
            }
        }
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2).any(|w| {
            if (w[1] - w[0]) * seg_len <= PLANE_TOL {
                return false;
            }
            let m = 0.5 * (w[0] + w[1]);
            point_in_polygon_strict([p.x + m * d.x, p.y + m * d.y], &self.footprint, EDGE_TOL)
        })
    }
}

/// Buildings bucketed on a uniform 2D grid for segment queries.
#[derive(Debug, Clone)]
pub struct OcclusionIndex {
    prisms: Vec<Prism>,
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl OcclusionIndex {
    pub fn new(s: &Scenario) -> Self {
        Self::with_cell_size(s, 8.0)
    }

    pub fn with_cell_size(s: &Scenario, cell: f64) -> Self {
        let prisms: Vec<Prism> = s
            .buildings
            .iter()
            .map(|b| {
                let (lo, hi) = b.bbox();
                Prism {
                    footprint: b.footprint.clone(),
                    height: b.height,
                    lo,
                    hi,
                }
            })
            .collect();
        let origin = s.bounds.min;
        let nx = ((s.bounds.width() / cell).ceil() as usize).max(1);
        let ny = ((s.bounds.height() / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (bi, pr) in prisms.iter().enumerate() {
            let (cx0, cy0) = Self::cell_of_raw(origin, cell, nx, ny, pr.lo);
            let (cx1, cy1) = Self::cell_of_raw(origin, cell, nx, ny, pr.hi);
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    buckets[cx + cy * nx].push(bi as u32);
                }
            }
        }
        Self {
            prisms,
            origin,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn cell_of_raw(
        origin: [f64; 2],
        cell: f64,
        nx: usize,
        ny: usize,
        p: [f64; 2],
    ) -> (usize, usize) {
        let fx = ((p[0] - origin[0]) / cell).floor();
        let fy = ((p[1] - origin[1]) / cell).floor();
        (
            (fx.max(0.0) as usize).min(nx - 1),
            (fy.max(0.0) as usize).min(ny - 1),
        )
    }

    pub fn building_count(&self) -> usize {
        self.prisms.len()
    }

    /// Building indices whose buckets the segment's ground track touches.
    fn candidates(&self, p: Point3, q: Point3, out: &mut Vec<u32>) {
        out.clear();
        if self.prisms.len() <= 4 {
            out.extend(0..self.prisms.len() as u32);
            return;
        }
        // small pad so tracks running along bucket borders hit both neighbors
        let pad = 1e-7;
        let (ylo, yhi) = (p.y.min(q.y) - pad, p.y.max(q.y) + pad);
        let (_, cy0) = Self::cell_of_raw(self.origin, self.cell, self.nx, self.ny, [p.x, ylo]);
        let (_, cy1) = Self::cell_of_raw(self.origin, self.cell, self.nx, self.ny, [p.x, yhi]);
        for cy in cy0..=cy1 {
            let row_lo = self.origin[1] + cy as f64 * self.cell - pad;
            let row_hi = row_lo + self.cell + 2.0 * pad;
            let (xa, xb) = x_range_in_slab(p, q, row_lo, row_hi);
            if xa > xb {
                continue;
            }
            let (cx0, _) =
                Self::cell_of_raw(self.origin, self.cell, self.nx, self.ny, [xa - pad, row_lo]);
            let (cx1, _) =
                Self::cell_of_raw(self.origin, self.cell, self.nx, self.ny, [xb + pad, row_lo]);
            for cx in cx0..=cx1 {
                out.extend_from_slice(&self.buckets[cx + cy * self.nx]);
            }
        }
        out.sort_unstable();
        out.dedup();
    }

    /// True iff the open segment `p`–`q` passes through no building interior.
    /// The test is symmetric in its endpoints.
    pub fn segment_clear(&self, p: Point3, q: Point3) -> bool {
        // canonical endpoint order makes the result exactly symmetric
        let (p, q) = if (p.x, p.y, p.z) <= (q.x, q.y, q.z) {
            (p, q)
        } else {
            (q, p)
        };
        thread_local! {
            static SCRATCH: std::cell::RefCell<Vec<u32>> = const { std::cell::RefCell::new(Vec::new()) };
        }
        SCRATCH.with(|cell| {
            let mut cand = cell.borrow_mut();
            self.candidates(p, q, &mut cand);
            !cand.iter().any(|&bi| self.prisms[bi as usize].blocks(p, q))
        })
    }

    /// Same query without the bucket grid.
    pub fn segment_clear_brute(&self, p: Point3, q: Point3) -> bool {
        let (p, q) = if (p.x, p.y, p.z) <= (q.x, q.y, q.z) {
            (p, q)
        } else {
            (q, p)
        };
        !self.prisms.iter().any(|pr| pr.blocks(p, q))
    }
}

fn x_range_in_slab(p: Point3, q: Point3, ylo: f64, yhi: f64) -> (f64, f64) {
    let dy = q.y - p.y;
    let (t0, t1) = if dy.abs() < 1e-15 {
        if p.y < ylo || p.y > yhi {
            return (1.0, 0.0);
        }
        (0.0, 1.0)
    } else {
        let ta = (ylo - p.y) / dy;
        let tb = (yhi - p.y) / dy;
        (ta.min(tb).max(0.0), ta.max(tb).min(1.0))
    };
    if t0 > t1 {
        return (1.0, 0.0);
    }
    let xa = p.x + t0 * (q.x - p.x);
    let xb = p.x + t1 * (q.x - p.x);
    (xa.min(xb), xa.max(xb))
}

/// Mirror image of `p` across the plane of `face`.
pub fn mirror_point(face: &Face, p: Point3) -> Point3 {
    let d = face.plane_distance(p);
    p - face.normal.get().scale(2.0 * d)
}

/// The reflection point on `face` for a path `s -> face -> t`, if both endpoints are
/// strictly in front of the face and the point lies inside it.
pub fn specular_point(face: &Face, scenario: &Scenario, s: Point3, t: Point3) -> Option<Point3> {
    let ds = face.plane_distance(s);
    let dt = face.plane_distance(t);
    if ds <= PLANE_TOL || dt <= PLANE_TOL {
        return None;
    }
    let image = s - face.normal.get().scale(2.0 * ds);
    let b = image.lerp(t, ds / (ds + dt));
    face.contains_in_plane(b, scenario).then_some(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecularWitness {
    pub face: usize,
    pub point: Point3,
}

/// Visibility classes of one source over a target grid.
#[derive(Debug, Clone)]
pub struct VisibilityIndex {
    pub source: Point3,
    pub direct: FixedBitSet,
    pub specular: FixedBitSet,
    /// Absent when the context was built without surface samples.
    pub diffuse: Option<FixedBitSet>,
    pub witnesses: BTreeMap<usize, SpecularWitness>,
}

/// Which indirect set stands in for the reflection indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndirectMode {
    /// No indirect paths.
    Direct,
    #[default]
    Specular,
    Diffuse,
}

impl IndirectMode {
    pub const ALL: [IndirectMode; 3] = [
        IndirectMode::Direct,
        IndirectMode::Specular,
        IndirectMode::Diffuse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndirectMode::Direct => "direct",
            IndirectMode::Specular => "specular",
            IndirectMode::Diffuse => "diffuse",
        }
    }
}

impl std::str::FromStr for IndirectMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" | "none" => Ok(IndirectMode::Direct),
            "specular" => Ok(IndirectMode::Specular),
            "diffuse" => Ok(IndirectMode::Diffuse),
            other => Err(format!(
                "unknown mode '{other}' (direct | specular | diffuse)"
            )),
        }
    }
}

impl VisibilityIndex {
    pub fn indirect(&self, mode: IndirectMode) -> Option<&FixedBitSet> {
        match mode {
            IndirectMode::Direct => None,
            IndirectMode::Specular => Some(&self.specular),
            IndirectMode::Diffuse => self.diffuse.as_ref(),
        }
    }
}

/// Bit `j` set iff target `j` is directly visible from `s`.
pub fn direct_visibility(s: Point3, targets: &GridSet, occ: &OcclusionIndex) -> FixedBitSet {
    let mut bits = FixedBitSet::with_capacity(targets.len());
    for (j, &t) in targets.points.iter().enumerate() {
        if occ.segment_clear(s, t) {
            bits.insert(j);
        }
    }
    bits
}

/// Specular visibility restricted to targets outside `direct`.
pub fn specular_visibility_given_direct(
    s: Point3,
    targets: &GridSet,
    faces: &[Face],
    scenario: &Scenario,
    occ: &OcclusionIndex,
    direct: &FixedBitSet,
) -> (FixedBitSet, BTreeMap<usize, SpecularWitness>) {
    let mut bits = FixedBitSet::with_capacity(targets.len());
    let mut witnesses = BTreeMap::new();
    let mirrors: Vec<&Face> = faces
        .iter()
        .filter(|f| f.reflective && f.plane_distance(s) > PLANE_TOL)
        .collect();
    for (j, &t) in targets.points.iter().enumerate() {
        if direct.contains(j) {
            continue;
        }
        for face in &mirrors {
            let Some(b) = specular_point(face, scenario, s, t) else {
                continue;
            };
            if occ.segment_clear(s, b) && occ.segment_clear(b, t) {
                bits.insert(j);
                witnesses.insert(
                    j,
                    SpecularWitness {
                        face: face.id,
                        point: b,
                    },
                );
                break;
            }
        }
    }
    (bits, witnesses)
}

/// Targets reachable after one mirror reflection (and not directly visible).
pub fn specular_visibility(
    s: Point3,
    targets: &GridSet,
    faces: &[Face],
    scenario: &Scenario,
    occ: &OcclusionIndex,
) -> (FixedBitSet, BTreeMap<usize, SpecularWitness>) {
    let direct = direct_visibility(s, targets, occ);
    specular_visibility_given_direct(s, targets, faces, scenario, occ, &direct)
}

/// Bit set over `surface` for every sample visible from `p`.
pub fn surface_visibility(p: Point3, surface: &GridSet, occ: &OcclusionIndex) -> FixedBitSet {
    direct_visibility(p, surface, occ)
}

/// Targets outside `direct` that share a visible surface sample with `s`.
///
/// `target_surface[j]` must be `surface_visibility(targets[j], ..)`. Specular
/// reflection points are surface points too, so `specular` hits are included.
pub fn diffuse_visibility_given(
    source_surface: &FixedBitSet,
    target_surface: &[FixedBitSet],
    direct: &FixedBitSet,
    specular: Option<&FixedBitSet>,
) -> FixedBitSet {
    let n = target_surface.len();
    let mut bits = FixedBitSet::with_capacity(n);
    for (j, ts) in target_surface.iter().enumerate() {
        if direct.contains(j) {
            continue;
        }
        if specular.is_some_and(|sp| sp.contains(j)) || !source_surface.is_disjoint(ts) {
            bits.insert(j);
        }
    }
    bits
}

/// Diffuse visibility from scratch over an explicit surface sample set.
pub fn diffuse_visibility(
    s: Point3,
    targets: &GridSet,
    surface: &GridSet,
    occ: &OcclusionIndex,
) -> FixedBitSet {
    let direct = direct_visibility(s, targets, occ);
    let src = surface_visibility(s, surface, occ);
    let ts: Vec<FixedBitSet> = targets
        .points
        .iter()
        .map(|&t| surface_visibility(t, surface, occ))
        .collect();
    diffuse_visibility_given(&src, &ts, &direct, None)
}

/// Everything needed to classify many sources against one target grid.
pub struct VisibilityContext<'a> {
    pub scenario: &'a Scenario,
    pub occ: OcclusionIndex,
    pub faces: Vec<Face>,
    pub targets: &'a GridSet,
    pub surface: Option<GridSet>,
    target_surface: Vec<FixedBitSet>,
}

impl<'a> VisibilityContext<'a> {
    /// `surface` is the diffuse-scatter sample grid (a `BuildingSurface` set).
    pub fn new(scenario: &'a Scenario, targets: &'a GridSet, surface: GridSet) -> Self {
        let occ = OcclusionIndex::new(scenario);
        let target_surface = targets
            .points
            .par_iter()
            .map(|&t| surface_visibility(t, &surface, &occ))
            .collect();
        Self {
            scenario,
            faces: scenario.faces(),
            occ,
            targets,
            surface: Some(surface),
            target_surface,
        }
    }

    /// Direct and specular classes only; `diffuse` stays `None`.
    pub fn specular_only(scenario: &'a Scenario, targets: &'a GridSet) -> Self {
        Self {
            scenario,
            faces: scenario.faces(),
            occ: OcclusionIndex::new(scenario),
            targets,
            surface: None,
            target_surface: Vec::new(),
        }
    }

    pub fn target_surface(&self) -> &[FixedBitSet] {
        &self.target_surface
    }

    pub fn classify(&self, s: Point3) -> VisibilityIndex {
        let direct = direct_visibility(s, self.targets, &self.occ);
        let (specular, witnesses) = specular_visibility_given_direct(
            s,
            self.targets,
            &self.faces,
            self.scenario,
            &self.occ,
            &direct,
        );
        let diffuse = self.surface.as_ref().map(|surface| {
            let src = surface_visibility(s, surface, &self.occ);
            diffuse_visibility_given(&src, &self.target_surface, &direct, Some(&specular))
        });
        VisibilityIndex {
            source: s,
            direct,
            specular,
            diffuse,
            witnesses,
        }
    }

    /// Classifies each source independently (in parallel); output order follows `sources`.
    pub fn classify_all(&self, sources: &[Point3]) -> Vec<VisibilityIndex> {
        sources.par_iter().map(|&s| self.classify(s)).collect()
    }
}

/// Per-point class labels used by the raster and CSV exports.
pub fn classify_points(vis: &VisibilityIndex, mode: IndirectMode) -> Vec<PointClass> {
    (0..vis.direct.len())
        .map(|j| {
            if vis.direct.contains(j) {
                PointClass::Direct
            } else if vis.indirect(mode).is_some_and(|b| b.contains(j)) {
                PointClass::Indirect
            } else {
                PointClass::Blocked
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Direct,
    Indirect,
    Blocked,
}

impl PointClass {
    pub fn gray(self) -> u8 {
        match self {
            PointClass::Direct => 255,
            PointClass::Indirect => 128,
            PointClass::Blocked => 0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PointClass::Direct => "direct",
            PointClass::Indirect => "indirect",
            PointClass::Blocked => "blocked",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_building_surface_grid, generate_service_grid, Building};

    fn one_box() -> Scenario {
        let mut s = Scenario::open_field(60.0, 60.0, 1.0);
        s.buildings.push(Building {
            id: "b".into(),
            footprint: vec![[20.0, 20.0], [40.0, 20.0], [40.0, 40.0], [20.0, 40.0]],
            height: 20.0,
            reflective: true,
        });
        s
    }

    #[test]
    fn empty_scenario_is_all_clear() {
        let s = Scenario::open_field(20.0, 20.0, 1.0);
        let occ = OcclusionIndex::new(&s);
        let g = generate_service_grid(&s);
        let v = direct_visibility(Point3::new(3.0, 3.0, 10.0), &g, &occ);
        assert_eq!(v.count_ones(..), g.len());
    }

    #[test]
    fn box_blocks_and_grazes() {
        let s = one_box();
        let occ = OcclusionIndex::new(&s);
        let a = Point3::new(10.0, 30.0, 1.5);
        let b = Point3::new(50.0, 30.0, 1.5);
        assert!(!occ.segment_clear(a, b));
        assert!(!occ.segment_clear(b, a));
        // above the roof
        assert!(occ.segment_clear(Point3::new(10.0, 30.0, 25.0), Point3::new(50.0, 30.0, 25.0)));
        // sliding along a wall
        assert!(occ.segment_clear(Point3::new(20.0, 10.0, 5.0), Point3::new(20.0, 50.0, 5.0)));
        // rooftop edge mount looking outward and down
        let mount = Point3::new(40.0, 30.0, 20.0);
        assert!(occ.segment_clear(mount, Point3::new(55.0, 30.0, 1.5)));
        // same mount looking across its own roof to the far side
        assert!(!occ.segment_clear(mount, Point3::new(5.0, 30.0, 1.5)));
        // right below the roof edge, outside the wall
        assert!(occ.segment_clear(mount, Point3::new(40.5, 30.0, 1.5)));
    }

    #[test]
    fn bucketed_matches_brute_force() {
        let mut s = Scenario::open_field(100.0, 100.0, 1.0);
        for (i, (x, y)) in [
            (5.0, 5.0),
            (40.0, 8.0),
            (70.0, 50.0),
            (20.0, 60.0),
            (55.0, 80.0),
            (80.0, 10.0),
        ]
        .into_iter()
        .enumerate()
        {
            s.buildings.push(Building {
                id: format!("b{i}"),
                footprint: vec![[x, y], [x + 12.0, y], [x + 12.0, y + 9.0], [x, y + 9.0]],
                height: 10.0 + i as f64 * 3.0,
                reflective: true,
            });
        }
        let occ = OcclusionIndex::with_cell_size(&s, 7.0);
        let g = generate_service_grid(&Scenario {
            grid_resolution: 3.0,
            ..s.clone()
        });
        let src = [
            Point3::new(46.0, 17.0, 13.0),
            Point3::new(1.0, 99.0, 30.0),
            Point3::new(50.0, 50.0, 2.0),
        ];
        for s in src {
            for &t in &g.points {
                assert_eq!(
                    occ.segment_clear(s, t),
                    occ.segment_clear_brute(s, t),
                    "{s:?} {t:?}"
                );
            }
        }
    }

    fn wall_and_blocker() -> Scenario {
        let mut s = Scenario::open_field(60.0, 60.0, 1.0);
        s.buildings.push(Building {
            id: "wall".into(),
            footprint: vec![[10.0, 40.0], [50.0, 40.0], [50.0, 41.0], [10.0, 41.0]],
            height: 30.0,
            reflective: true,
        });
        // an opaque blocker between source and target
        s.buildings.push(Building {
            id: "blocker".into(),
            footprint: vec![[29.0, 5.0], [31.0, 5.0], [31.0, 35.0], [29.0, 35.0]],
            height: 30.0,
            reflective: false,
        });
        s.validate().unwrap();
        s
    }

    #[test]
    fn mirror_wall_symmetric_path() {
        // source and target mirror-symmetric about the wall's normal line
        let s = wall_and_blocker();
        let occ = OcclusionIndex::new(&s);
        let faces = s.faces();
        let src = Point3::new(20.0, 20.0, 1.5);
        let tgt = Point3::new(40.0, 20.0, 1.5);
        let targets = GridSet {
            role: crate::scenario::GridRole::ServiceArea,
            resolution: 1.0,
            points: vec![tgt],
            surface: vec![],
            cells: vec![],
            layout: None,
        };
        assert!(!occ.segment_clear(src, tgt));
        let (bits, wit) = specular_visibility(src, &targets, &faces, &s, &occ);
        assert!(bits.contains(0));
        let w = wit[&0];
        assert!(
            (w.point.x - 30.0).abs() < 1e-12
                && (w.point.y - 40.0).abs() < 1e-12
                && (w.point.z - 1.5).abs() < 1e-12
        );
        // a directly visible target is never specular
        let (bits, _) = specular_visibility(
            src,
            &GridSet {
                points: vec![Point3::new(25.0, 25.0, 1.5)],
                ..targets.clone()
            },
            &faces,
            &s,
            &occ,
        );
        assert!(!bits.contains(0));
    }

    #[test]
    fn diffuse_empty_surface_is_empty() {
        let s = one_box();
        let occ = OcclusionIndex::new(&s);
        let g = generate_service_grid(&s);
        let mut surf = generate_building_surface_grid(&s, 2.0).unwrap();
        surf.points.clear();
        surf.surface.clear();
        let d = diffuse_visibility(Point3::new(5.0, 5.0, 10.0), &g, &surf, &occ);
        assert_eq!(d.count_ones(..), 0);
    }

    #[test]
    fn context_sets_are_consistent() {
        let s = wall_and_blocker();
        let g = generate_service_grid(&Scenario {
            grid_resolution: 2.0,
            ..s.clone()
        });
        let surf = generate_building_surface_grid(&s, 2.0).unwrap();
        let ctx = VisibilityContext::new(&s, &g, surf);
        let v = ctx.classify(Point3::new(20.0, 20.0, 1.5));
        assert!(v.direct.is_disjoint(&v.specular));
        let diffuse = v.diffuse.as_ref().unwrap();
        assert!(v.direct.is_disjoint(diffuse));
        assert!(v.specular.is_subset(diffuse));
        assert!(v.specular.count_ones(..) > 0);
        assert!(diffuse.count_ones(..) > v.specular.count_ones(..));
    }
}
