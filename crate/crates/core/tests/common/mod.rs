//! Brute-force reference implementations shared by the integration tests.
//! Scenes are restricted to axis-aligned boxes so the oracles stay simple.
#![allow(dead_code)]

use fixedbitset::FixedBitSet;
use mmwave_plan::bilp::{BilpProblem, Row, Sense};
use mmwave_plan::scenario::{generate_building_surface_grid, generate_service_grid};
use mmwave_plan::scenario::{Bounds, Building, Scenario, SCHEMA_VERSION};
use mmwave_plan::visibility::VisibilityContext;
use mmwave_plan::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct Boxy {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub h: f64,
}

/// Up to three disjoint boxes in a 30 × 20 m area at 2 m resolution (≤ 150 service points).
pub fn random_box_scene(rng: &mut ChaCha8Rng) -> (Scenario, Vec<Boxy>) {
    let n = rng.gen_range(0..=3);
    let mut boxes = Vec::new();
    for i in 0..n {
        let x0 = 10.0 * i as f64 + rng.gen_range(0.5..3.0);
        let x1 = x0 + rng.gen_range(2.0..6.0);
        let y0 = rng.gen_range(1.0..8.0);
        let y1 = y0 + rng.gen_range(2.0..10.0);
        boxes.push(Boxy {
            lo: [x0, y0],
            hi: [x1, y1],
            h: rng.gen_range(3.0..20.0),
        });
    }
    (box_scene(&boxes), boxes)
}

pub fn box_scene(boxes: &[Boxy]) -> Scenario {
    let buildings = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| Building {
            id: format!("b{i}"),
            footprint: vec![
                [b.lo[0], b.lo[1]],
                [b.hi[0], b.lo[1]],
                [b.hi[0], b.hi[1]],
                [b.lo[0], b.hi[1]],
            ],
            height: b.h,
            reflective: true,
        })
        .collect();
    let s = Scenario {
        schema_version: SCHEMA_VERSION,
        name: "boxes".into(),
        bounds: Bounds {
            min: [0.0, 0.0],
            max: [30.0, 20.0],
        },
        grid_resolution: 2.0,
        ue_height: 1.5,
        gnb_mount_offset: 0.0,
        pmr_height_band: [0.5, 100.0],
        roof_mirrors: true,
        buildings,
    };
    s.validate().expect("generated scene is valid");
    s
}

/// A source outside every box, sometimes above the roofs.
pub fn random_source(rng: &mut ChaCha8Rng, boxes: &[Boxy]) -> Point3 {
    loop {
        let p = Point3::new(
            rng.gen_range(0.0..30.0),
            rng.gen_range(0.0..20.0),
            rng.gen_range(2.0..25.0),
        );
        if !boxes.iter().any(|b| inside_closed(b, p)) {
            return p;
        }
    }
}

fn inside_closed(b: &Boxy, p: Point3) -> bool {
    p.x >= b.lo[0] && p.x <= b.hi[0] && p.y >= b.lo[1] && p.y <= b.hi[1] && p.z <= b.h
}

/// Length of segment `p`–`q` inside the open box, by slab clipping.
pub fn inside_length(b: &Boxy, p: Point3, q: Point3) -> f64 {
    let d = q - p;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let lo = [b.lo[0], b.lo[1], 0.0];
    let hi = [b.hi[0], b.hi[1], b.h];
    let pa = [p.x, p.y, p.z];
    let da = [d.x, d.y, d.z];
    for a in 0..3 {
        if da[a] == 0.0 {
            if pa[a] <= lo[a] || pa[a] >= hi[a] {
                return 0.0;
            }
        } else {
            let u = (lo[a] - pa[a]) / da[a];
            let v = (hi[a] - pa[a]) / da[a];
            t0 = t0.max(u.min(v));
            t1 = t1.min(u.max(v));
        }
    }
    ((t1 - t0) * d.norm()).max(0.0)
}

pub fn clear(boxes: &[Boxy], p: Point3, q: Point3) -> bool {
    boxes.iter().all(|b| inside_length(b, p, q) <= TOL)
}

/// A planar mirror: point on the plane, outward normal, and a containment test.
struct Mirror {
    origin: Point3,
    normal: Point3,
    b: Boxy,
    axis: usize,
}

fn mirrors(boxes: &[Boxy]) -> Vec<Mirror> {
    let mut out = Vec::new();
    for &b in boxes {
        let walls = [
            (
                Point3::new(b.lo[0], 0.0, 0.0),
                Point3::new(-1.0, 0.0, 0.0),
                0,
            ),
            (
                Point3::new(b.hi[0], 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                0,
            ),
            (
                Point3::new(0.0, b.lo[1], 0.0),
                Point3::new(0.0, -1.0, 0.0),
                1,
            ),
            (
                Point3::new(0.0, b.hi[1], 0.0),
                Point3::new(0.0, 1.0, 0.0),
                1,
            ),
            (Point3::new(0.0, 0.0, b.h), Point3::new(0.0, 0.0, 1.0), 2),
        ];
        for (origin, normal, axis) in walls {
            out.push(Mirror {
                origin,
                normal,
                b,
                axis,
            });
        }
    }
    out
}

impl Mirror {
    fn contains(&self, p: Point3) -> bool {
        let t = 1e-9;
        let inx = p.x > self.b.lo[0] + t && p.x < self.b.hi[0] - t;
        let iny = p.y > self.b.lo[1] + t && p.y < self.b.hi[1] - t;
        let inz = p.z > t && p.z < self.b.h - t;
        match self.axis {
            0 => iny && inz,
            1 => inx && inz,
            _ => inx && iny,
        }
    }
}

pub fn direct(boxes: &[Boxy], s: Point3, targets: &[Point3]) -> Vec<bool> {
    targets.iter().map(|&t| clear(boxes, s, t)).collect()
}

/// Single-bounce mirror paths to targets not directly visible.
pub fn specular(boxes: &[Boxy], s: Point3, targets: &[Point3]) -> Vec<bool> {
    let ms = mirrors(boxes);
    targets
        .iter()
        .map(|&t| {
            if clear(boxes, s, t) {
                return false;
            }
            ms.iter().any(|m| {
                let ds = (s - m.origin).dot(m.normal);
                let dt = (t - m.origin).dot(m.normal);
                if ds <= TOL || dt <= TOL {
                    return false;
                }
                // reflection point on the segment image(s) -> t
                let image = s - m.normal.scale(2.0 * ds);
                let hit = image + (t - image).scale(ds / (ds + dt));
                m.contains(hit) && clear(boxes, s, hit) && clear(boxes, hit, t)
            })
        })
        .collect()
}

/// Targets not directly visible that share a clear surface sample with `s`, or reach it by a mirror.
pub fn diffuse(boxes: &[Boxy], s: Point3, targets: &[Point3], samples: &[Point3]) -> Vec<bool> {
    let spec = specular(boxes, s, targets);
    let from_s: Vec<bool> = samples.iter().map(|&b| clear(boxes, s, b)).collect();
    targets
        .iter()
        .zip(&spec)
        .map(|(&t, &sp)| {
            if clear(boxes, s, t) {
                return false;
            }
            sp || samples
                .iter()
                .zip(&from_s)
                .any(|(&b, &ok)| ok && clear(boxes, b, t))
        })
        .collect()
}

/// Best objective over every 0/1 assignment satisfying all rows exactly.
pub fn enumerate_best(p: &BilpProblem) -> Option<f64> {
    let mut best: Option<f64> = None;
    for mask in 0u64..(1u64 << p.n) {
        let x: Vec<bool> = (0..p.n).map(|i| mask >> i & 1 == 1).collect();
        let ok = p.rows.iter().all(|r| {
            let a: f64 = r.terms.iter().filter(|(i, _)| x[*i]).map(|(_, c)| c).sum();
            match r.sense {
                Sense::Le => a <= r.rhs,
                Sense::Ge => a >= r.rhs,
                Sense::Eq => a == r.rhs,
            }
        });
        if ok {
            let v: f64 = (0..p.n).filter(|&i| x[i]).map(|i| p.objective[i]).sum();
            if best.map_or(true, |b| v > b) {
                best = Some(v);
            }
        }
    }
    best
}

/// Random program on ≤ 20 binaries: either maximum coverage with a budget, or
/// Big-M indicator rows tying each β to a weighted sum of α. Integer data keeps
/// every comparison exact.
pub fn random_bilp(rng: &mut ChaCha8Rng) -> BilpProblem {
    if rng.gen_bool(0.5) {
        // coverage: columns 0..n pick sites, n..n+m mark points
        let n = rng.gen_range(2..=8);
        let m = rng.gen_range(2..=(20 - n).min(12));
        let mut obj = vec![0.0; n];
        obj.extend((0..m).map(|_| rng.gen_range(1..=9) as f64));
        let mut p = BilpProblem::new(obj);
        p.push(Row::new(
            (0..n).map(|i| (i, 1.0)).collect(),
            Sense::Le,
            rng.gen_range(1..=n) as f64,
        ));
        for j in 0..m {
            let mut terms: Vec<(usize, f64)> = (0..n)
                .filter(|_| rng.gen_bool(0.35))
                .map(|i| (i, -1.0))
                .collect();
            terms.push((n + j, 1.0));
            p.push(Row::new(terms, Sense::Le, 0.0));
        }
        p
    } else {
        // indicator: Σ g α ≥ γ β and Σ g α − M β ≤ γ − 1, with Σ α = k
        let n = rng.gen_range(2..=10);
        let m = rng.gen_range(1..=(20 - n).min(8));
        let gamma = rng.gen_range(3..=12) as f64;
        let mut obj = vec![0.0; n];
        obj.extend((0..m).map(|_| rng.gen_range(1..=5) as f64));
        let mut p = BilpProblem::new(obj);
        p.push(Row::new(
            (0..n).map(|i| (i, 1.0)).collect(),
            Sense::Eq,
            rng.gen_range(1..=n) as f64,
        ));
        for j in 0..m {
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=6) as f64).collect();
            let big = g.iter().sum::<f64>();
            let mut lo: Vec<(usize, f64)> = g
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(i, &c)| (i, c))
                .collect();
            let mut hi = lo.clone();
            lo.push((n + j, -gamma));
            hi.push((n + j, -big));
            p.push(Row::new(lo, Sense::Ge, 0.0));
            p.push(Row::new(hi, Sense::Le, gamma - 1.0));
        }
        if rng.gen_bool(0.5) {
            // pairwise exclusions
            for _ in 0..rng.gen_range(1..=3) {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b {
                    p.push(Row::new(vec![(a, 1.0), (b, 1.0)], Sense::Le, 1.0));
                }
            }
        }
        p
    }
}

fn bits(b: &FixedBitSet) -> Vec<bool> {
    (0..b.len()).map(|j| b.contains(j)).collect()
}

/// Runs the library and the oracles on one random scene; returns a description of the first disagreement.
/// On success returns the sizes of the direct, specular and diffuse sets.
pub fn compare_scene(seed: u64) -> Result<[usize; 3], String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (scenario, boxes) = random_box_scene(&mut rng);
    let sa = generate_service_grid(&scenario);
    let src = random_source(&mut rng, &boxes);
    let surface = if boxes.is_empty() {
        None
    } else {
        Some(generate_building_surface_grid(&scenario, 1.0).unwrap())
    };
    let targets = &sa.points;
    let samples: Vec<Point3> = surface
        .as_ref()
        .map(|g| g.points.clone())
        .unwrap_or_default();
    let ctx = match surface {
        Some(g) => VisibilityContext::new(&scenario, &sa, g),
        None => VisibilityContext::specular_only(&scenario, &sa),
    };
    let vis = ctx.classify(src);
    let d = direct(&boxes, src, targets);
    let s = specular(&boxes, src, targets);
    let f = diffuse(&boxes, src, targets, &samples);
    if bits(&vis.direct) != d {
        return Err(format!("seed {seed}: direct sets differ"));
    }
    if bits(&vis.specular) != s {
        return Err(format!("seed {seed}: specular sets differ"));
    }
    let diffuse = vis
        .diffuse
        .as_ref()
        .map(bits)
        .unwrap_or_else(|| vec![false; targets.len()]);
    if diffuse != f {
        return Err(format!("seed {seed}: diffuse sets differ"));
    }
    if !vis.specular.is_subset(
        vis.diffuse
            .as_ref()
            .unwrap_or(&FixedBitSet::with_capacity(0)),
    ) && !boxes.is_empty()
    {
        return Err(format!(
            "seed {seed}: specular set is not inside the diffuse set"
        ));
    }
    let count = |v: &[bool]| v.iter().filter(|&&b| b).count();
    Ok([count(&d), count(&s), count(&f)])
}
