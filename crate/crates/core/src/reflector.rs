//! Passive flat-plate reflectors: orientation by the law of reflection, facet
//! lattices, the per-facet plate-scattering gain, and the sparse end-to-end gain
//! tensor over (gNB, mount, aim point, served point).

use std::io::Write;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::geom::{Point3, UnitVec3, Vec3};
use crate::scenario::{GridRole, GridSet};
use crate::visibility::OcclusionIndex;

const GRAZING_TOL: f64 = 1e-9;

/// Mirror `i` (propagation direction) about a plane with normal `n`.
pub fn reflect_dir(i: UnitVec3, n: UnitVec3) -> Result<UnitVec3> {
    let c = i.dot(n);
    if c.abs() < GRAZING_TOL {
        return Err(PlanError::DegenerateGeometry(
            "grazing incidence on the reflector plane".into(),
        ));
    }
    UnitVec3::new(i.get() - n.get().scale(2.0 * c))
}

/// Plate normal that reflects propagation direction `i` into `r`, on the side facing the incoming ray.
pub fn orient_normal(i: UnitVec3, r: UnitVec3) -> Result<UnitVec3> {
    let d = i.get() - r.get();
    if d.norm() < 1e-9 {
        return Err(PlanError::DegenerateGeometry(
            "no finite-tilt plate reflects a ray onto its own path".into(),
        ));
    }
    let n = UnitVec3::new(d)?;
    Ok(if i.dot(n) < 0.0 { n } else { -n })
}

/// Rotation matrix (row-major) taking `from` onto `to` about `axis` by `angle` (Euler–Rodrigues).
fn euler_rodrigues(axis: Vec3, angle: f64) -> [[f64; 3]; 3] {
    let a = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    let (b, c, d) = (axis.x * s, axis.y * s, axis.z * s);
    [
        [
            a * a + b * b - c * c - d * d,
            2.0 * (b * c - a * d),
            2.0 * (b * d + a * c),
        ],
        [
            2.0 * (b * c + a * d),
            a * a + c * c - b * b - d * d,
            2.0 * (c * d - a * b),
        ],
        [
            2.0 * (b * d - a * c),
            2.0 * (c * d + a * b),
            a * a + d * d - b * b - c * c,
        ],
    ]
}

fn apply(m: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reflector {
    pub center: Point3,
    pub side: f64,
    pub facet: f64,
    pub normal: UnitVec3,
    /// In-plane lattice axes; `u` is horizontal unless the plate is flat.
    pub u: Vec3,
    pub v: Vec3,
    pub facets: Vec<Point3>,
}

/// Square plate of `side` split into `(side/facet)²` facets, centered at `center`
/// and facing `n`. The lattice is built in the xy-plane, turned about z so one
/// edge lies along the rotation axis, then rotated from +z onto `n`.
pub fn rotate_facets(side: f64, facet: f64, center: Point3, n: UnitVec3) -> Result<Reflector> {
    if !(facet > 0.0 && side >= facet && side.is_finite()) {
        return Err(PlanError::Domain(format!(
            "need side >= facet > 0, got {side} and {facet}"
        )));
    }
    let ratio = side / facet;
    let per_side = ratio.round();
    if (ratio - per_side).abs() > 1e-9 * ratio.max(1.0) {
        return Err(PlanError::Domain(format!(
            "plate side {side} m is not a whole number of {facet} m facets"
        )));
    }
    let per_side = per_side as usize;
    let z = UnitVec3::Z;
    let cos_t = z.dot(n).clamp(-1.0, 1.0);
    let (pre, rot) = if cos_t > 1.0 - 1e-15 {
        (0.0, None)
    } else if cos_t < -1.0 + 1e-15 {
        (
            0.0,
            Some(euler_rodrigues(
                Vec3::new(1.0, 0.0, 0.0),
                std::f64::consts::PI,
            )),
        )
    } else {
        let axis = z.get().cross(n.get());
        let axis = axis.scale(1.0 / axis.norm());
        (
            axis.y.atan2(axis.x),
            Some(euler_rodrigues(axis, cos_t.acos())),
        )
    };
    let (ps, pc) = pre.sin_cos();
    let lattice_u = Vec3::new(pc, ps, 0.0);
    let lattice_v = Vec3::new(-ps, pc, 0.0);
    let (u, v) = match &rot {
        None => (lattice_u, lattice_v),
        Some(m) => (apply(m, lattice_u), apply(m, lattice_v)),
    };
    let half = side / 2.0;
    let mut facets = Vec::with_capacity(per_side * per_side);
    for b in 0..per_side {
        for a in 0..per_side {
            let x = (a as f64 + 0.5) * facet - half;
            let y = (b as f64 + 0.5) * facet - half;
            facets.push(center + u.scale(x) + v.scale(y));
        }
    }
    Ok(Reflector {
        center,
        side,
        facet,
        normal: n,
        u,
        v,
        facets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summation {
    /// Facet powers add.
    #[default]
    Power,
    /// Facet amplitudes add in phase: (Σ √g)².
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainParams {
    pub facet_m: f64,
    pub wavelength_m: f64,
    /// Path-loss exponent on d1·d2.
    pub zeta: f64,
    /// Linear antenna gains.
    pub g_gnb: f64,
    pub g_ue: f64,
    pub summation: Summation,
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Pattern factor η = sinc²(π aR/λ (sin θ_R − sin θ_I)).
pub fn pattern_factor(sin_r: f64, sin_i: f64, facet_m: f64, wavelength_m: f64) -> f64 {
    let s = sinc(std::f64::consts::PI * facet_m / wavelength_m * (sin_r - sin_i));
    s * s
}

fn dist_pow(d2: f64, zeta: f64) -> f64 {
    if zeta == 2.0 {
        d2
    } else {
        d2.powf(zeta / 2.0)
    }
}

/// Target-independent part of one facet's gain.
#[derive(Debug, Clone, Copy)]
struct LitFacet {
    pos: Point3,
    /// G·aR⁴·cos²θ_I / ((4π)² d1^ζ); zero when the gNB is behind the plate.
    amp: f64,
    sin_i: f64,
    /// In-plane direction toward which the specular ray leans; zero at normal incidence.
    lean: Vec3,
}

/// Facets of a plate lit by one gNB, ready to be evaluated toward many targets.
#[derive(Debug, Clone)]
pub struct LitPlate {
    facets: Vec<LitFacet>,
    normal: Vec3,
    k: f64,
    zeta: f64,
    summation: Summation,
}

fn light(gnb: Point3, pos: Point3, n: Vec3, p: &GainParams) -> Result<LitFacet> {
    let a = pos - gnb;
    let d1sq = a.dot(a);
    if !(d1sq > 0.0) {
        return Err(PlanError::Domain(
            "reflector facet coincides with the gNB".into(),
        ));
    }
    let i = a.scale(1.0 / d1sq.sqrt());
    let cos_i = -i.dot(n);
    if cos_i <= 0.0 {
        return Ok(LitFacet {
            pos,
            amp: 0.0,
            sin_i: 0.0,
            lean: Vec3::default(),
        });
    }
    let r = i + n.scale(2.0 * cos_i);
    let rt = r - n.scale(r.dot(n));
    let len = rt.norm();
    let (sin_i, lean) = if len < 1e-12 {
        (0.0, Vec3::default())
    } else {
        (len, rt.scale(1.0 / len))
    };
    let af2 = p.facet_m * p.facet_m;
    let four_pi2 = (4.0 * std::f64::consts::PI).powi(2);
    Ok(LitFacet {
        pos,
        amp: p.g_gnb * p.g_ue * af2 * af2 * cos_i * cos_i / (four_pi2 * dist_pow(d1sq, p.zeta)),
        sin_i,
        lean,
    })
}

impl LitFacet {
    /// Angles are measured from the normal; θ_R is negative when the outgoing
    /// direction leans against the specular side of the plane of incidence.
    /// At normal incidence every direction counts as the specular side.
    fn gain(&self, target: Point3, n: Vec3, k: f64, zeta: f64) -> Result<f64> {
        if self.amp == 0.0 {
            return Ok(0.0);
        }
        let b = target - self.pos;
        let d2sq = b.dot(b);
        if !(d2sq > 0.0) {
            return Err(PlanError::Domain(
                "reflector facet coincides with the target".into(),
            ));
        }
        let d2 = d2sq.sqrt();
        let on = b.dot(n) / d2;
        if on <= 0.0 {
            return Ok(0.0);
        }
        let mut sin_r = (1.0 - on * on).max(0.0).sqrt();
        if b.dot(self.lean) < 0.0 {
            sin_r = -sin_r;
        }
        let s = sinc(k * (sin_r - self.sin_i));
        Ok(self.amp * s * s / dist_pow(d2sq, zeta))
    }
}

impl LitPlate {
    pub fn new(gnb: Point3, r: &Reflector, p: &GainParams) -> Result<LitPlate> {
        let n = r.normal.get();
        let facets = r
            .facets
            .iter()
            .map(|&f| light(gnb, f, n, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(LitPlate {
            facets,
            normal: n,
            k: std::f64::consts::PI * p.facet_m / p.wavelength_m,
            zeta: p.zeta,
            summation: p.summation,
        })
    }

    pub fn gain(&self, target: Point3) -> Result<f64> {
        let mut acc = 0.0;
        for f in &self.facets {
            let g = f.gain(target, self.normal, self.k, self.zeta)?;
            acc += match self.summation {
                Summation::Power => g,
                Summation::Coherent => g.sqrt(),
            };
        }
        Ok(match self.summation {
            Summation::Power => acc,
            Summation::Coherent => acc * acc,
        })
    }
}

/// End-to-end linear gain via one facet; 0 when either end is behind the plate.
pub fn facet_gain(
    gnb: Point3,
    facet: Point3,
    n: UnitVec3,
    target: Point3,
    p: &GainParams,
) -> Result<f64> {
    let k = std::f64::consts::PI * p.facet_m / p.wavelength_m;
    light(gnb, facet, n.get(), p)?.gain(target, n.get(), k, p.zeta)
}

/// Gain through a whole plate: facet gains combined per `p.summation`.
pub fn reflector_gain(gnb: Point3, r: &Reflector, target: Point3, p: &GainParams) -> Result<f64> {
    LitPlate::new(gnb, r, p)?.gain(target)
}

/// Mounts visible from a serving gNB and from an outage point, inside the height band.
pub fn pmr_candidates(
    vgnb: &FixedBitSet,
    vosa: &FixedBitSet,
    surface: &GridSet,
    band: [f64; 2],
) -> GridSet {
    let idx: Vec<usize> = vgnb
        .intersection(vosa)
        .filter(|&k| {
            let z = surface.points[k].z;
            z >= band[0] && z <= band[1]
        })
        .collect();
    if idx.is_empty() {
        log::warn!("no feasible reflector mounts");
    }
    surface.subset(&idx, GridRole::PmrCandidate)
}

/// One (gNB, mount, aim point) choice and the served points it reaches.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub i: usize,
    pub k: usize,
    pub l: usize,
    pub normal: UnitVec3,
    /// (outage index, linear gain), ascending by index.
    pub gains: Vec<(usize, f64)>,
}

impl Triple {
    pub fn gain_to(&self, j: usize) -> f64 {
        self.gains
            .binary_search_by_key(&j, |e| e.0)
            .map_or(0.0, |p| self.gains[p].1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainTensor {
    pub triples: Vec<Triple>,
    pub n_gnb: usize,
    pub n_candidates: usize,
    pub n_outage: usize,
    pub params: GainParams,
    pub plate_m: f64,
    /// Triples skipped for degenerate orientation.
    pub skipped: usize,
    /// Triples whose geometry falls inside ten plate sides.
    pub near_field: usize,
}

impl GainTensor {
    pub fn entry_count(&self) -> usize {
        self.triples.iter().map(|t| t.gains.len()).sum()
    }

    /// Sparse listing `i,k,l,j,gain`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,k,l,j,gain")?;
        for t in &self.triples {
            for &(j, g) in &t.gains {
                writeln!(w, "{},{},{},{},{:e}", t.i, t.k, t.l, j, g)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorOptions {
    pub plate_m: f64,
    /// Use every `orientation_stride`-th visible outage point as an aim point.
    pub orientation_stride: usize,
    /// Entries below this gain are dropped.
    pub floor: f64,
    /// Stand each plate off its mounting surface by one plate side along the
    /// surface normal, leaving room to orient it freely.
    pub standoff: bool,
}

/// Plate center for mount `k`: the surface sample, moved off the surface when requested.
pub fn plate_center(candidates: &GridSet, k: usize, plate_m: f64, standoff: bool) -> Point3 {
    let p = candidates.points[k];
    match candidates.surface.get(k) {
        Some(tag) if standoff => p + tag.normal.get().scale(plate_m),
        _ => p,
    }
}

/// Evaluates every (gNB, mount, aim point) orientation against every visible outage point.
pub fn build_gain_tensor(
    gnbs: &[Point3],
    candidates: &GridSet,
    outage: &GridSet,
    params: &GainParams,
    occ: &OcclusionIndex,
    opts: &TensorOptions,
) -> Result<GainTensor> {
    if gnbs.is_empty() || candidates.is_empty() || outage.is_empty() {
        return Err(PlanError::NothingToPlace(
            "empty gNB, mount or outage set".into(),
        ));
    }
    let stride = opts.orientation_stride.max(1);
    let near = 10.0 * opts.plate_m;
    let per_k: Vec<Result<(Vec<Triple>, usize, usize)>> = (0..candidates.len())
        .into_par_iter()
        .map(|k| {
            let c = plate_center(candidates, k, opts.plate_m, opts.standoff);
            let seen: Vec<usize> = (0..outage.len())
                .filter(|&j| occ.segment_clear(c, outage.points[j]))
                .collect();
            let mut out = Vec::new();
            let (mut skipped, mut near_field) = (0, 0);
            if seen.is_empty() {
                return Ok((out, 0, 0));
            }
            for (i, &g) in gnbs.iter().enumerate() {
                if !occ.segment_clear(g, c) {
                    continue;
                }
                let Ok(inc) = UnitVec3::between(g, c) else {
                    skipped += 1;
                    continue;
                };
                for &l in seen.iter().step_by(stride) {
                    let aim = outage.points[l];
                    let normal = UnitVec3::between(c, aim).and_then(|r| orient_normal(inc, r));
                    let Ok(normal) = normal else {
                        log::debug!("skipping degenerate orientation i={i} k={k} l={l}");
                        skipped += 1;
                        continue;
                    };
                    let plate = rotate_facets(opts.plate_m, params.facet_m, c, normal)?;
                    if (c - g).norm() < near || (aim - c).norm() < near {
                        near_field += 1;
                    }
                    let lit = LitPlate::new(g, &plate, params)?;
                    let mut gains = Vec::new();
                    for &j in &seen {
                        let v = lit.gain(outage.points[j])?;
                        if v >= opts.floor && v > 0.0 {
                            gains.push((j, v));
                        }
                    }
                    if !gains.is_empty() {
                        out.push(Triple {
                            i,
                            k,
                            l,
                            normal,
                            gains,
                        });
                    }
                }
            }
            Ok((out, skipped, near_field))
        })
        .collect();
    let mut triples = Vec::new();
    let (mut skipped, mut near_field) = (0, 0);
    for r in per_k {
        let (t, s, n) = r?;
        triples.extend(t);
        skipped += s;
        near_field += n;
    }
    triples.sort_by_key(|t| (t.i, t.k, t.l));
    if near_field > 0 {
        log::warn!("{near_field} reflector geometries are closer than ten plate sides; far-field gain is approximate");
    }
    Ok(GainTensor {
        triples,
        n_gnb: gnbs.len(),
        n_candidates: candidates.len(),
        n_outage: outage.len(),
        params: *params,
        plate_m: opts.plate_m,
        skipped,
        near_field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uv(x: f64, y: f64, z: f64) -> UnitVec3 {
        UnitVec3::new(Vec3::new(x, y, z)).unwrap()
    }

    fn close(a: Vec3, b: Vec3) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn reflect_examples() {
        let r = reflect_dir(uv(0.0, 0.0, -1.0), UnitVec3::Z).unwrap();
        assert!(close(r.get(), Vec3::new(0.0, 0.0, 1.0)));
        let r = reflect_dir(uv(1.0, 0.0, -1.0), UnitVec3::Z).unwrap();
        assert!(close(r.get(), uv(1.0, 0.0, 1.0).get()));
        assert!(reflect_dir(UnitVec3::X, UnitVec3::Z).is_err());
    }

    #[test]
    fn orient_examples() {
        let n = orient_normal(uv(0.0, 0.0, -1.0), UnitVec3::Z).unwrap();
        assert!(close(n.get(), Vec3::new(0.0, 0.0, 1.0)));
        let n = orient_normal(uv(1.0, 0.0, -1.0), uv(1.0, 0.0, 1.0)).unwrap();
        assert!(close(n.get(), Vec3::new(0.0, 0.0, 1.0)));
        assert!(orient_normal(UnitVec3::X, UnitVec3::X).is_err());
    }

    #[test]
    fn lattice_identity_and_count() {
        let r = rotate_facets(1.0, 0.1, Point3::default(), UnitVec3::Z).unwrap();
        assert_eq!(r.facets.len(), 100);
        assert!(close(r.facets[0], Point3::new(-0.45, -0.45, 0.0)));
        assert!(close(r.facets[99], Point3::new(0.45, 0.45, 0.0)));
        assert!(rotate_facets(1.0, 0.3, Point3::default(), UnitVec3::Z).is_err());
    }

    #[test]
    fn rotated_plate_has_horizontal_edge() {
        let n = uv(0.3, -0.8, 0.5);
        let r = rotate_facets(2.0, 0.5, Point3::new(1.0, 2.0, 3.0), n).unwrap();
        assert!(r.u.z.abs() < 1e-12);
        assert!(r.u.dot(n.get()).abs() < 1e-12 && r.v.dot(n.get()).abs() < 1e-12);
        for f in &r.facets {
            assert!((*f - r.center).dot(n.get()).abs() < 1e-12);
        }
        // wall-like normal: second axis vertical
        let r = rotate_facets(1.0, 0.5, Point3::default(), UnitVec3::X).unwrap();
        assert!(r.u.z.abs() < 1e-12 && (r.v.z.abs() - 1.0).abs() < 1e-12);
        let r = rotate_facets(1.0, 0.5, Point3::default(), -UnitVec3::Z).unwrap();
        assert!(r.facets.iter().all(|f| f.z.abs() < 1e-12));
    }

    fn unit_params() -> GainParams {
        GainParams {
            facet_m: 0.1,
            wavelength_m: crate::channel::SPEED_OF_LIGHT / 28e9,
            zeta: 2.0,
            g_gnb: 1.0,
            g_ue: 1.0,
            summation: Summation::Power,
        }
    }

    #[test]
    fn facet_gain_normal_incidence() {
        let p = unit_params();
        let g = Point3::new(0.0, 0.0, 20.0);
        let v = facet_gain(g, Point3::default(), UnitVec3::Z, g, &p).unwrap();
        let want = 1e-4 / ((4.0 * std::f64::consts::PI).powi(2) * 400.0 * 400.0);
        assert!((v - want).abs() < 1e-24);
        assert!((v - 3.958e-12).abs() < 1e-15);
        // behind the plate
        let v = facet_gain(
            Point3::new(0.0, 0.0, -5.0),
            Point3::default(),
            UnitVec3::Z,
            g,
            &p,
        )
        .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn first_null_of_pattern() {
        let p = unit_params();
        let d = p.wavelength_m / p.facet_m;
        assert!(pattern_factor(0.3 + d, 0.3, p.facet_m, p.wavelength_m) < 1e-25);
        assert_eq!(pattern_factor(0.3, 0.3, p.facet_m, p.wavelength_m), 1.0);
    }

    #[test]
    fn summation_modes_scale() {
        let mut p = unit_params();
        let g = Point3::new(0.0, 0.0, 50.0);
        let t = Point3::new(0.0, 0.0, 50.0);
        let plate = rotate_facets(1.0, 0.1, Point3::default(), UnitVec3::Z).unwrap();
        let power = reflector_gain(g, &plate, t, &p).unwrap();
        p.summation = Summation::Coherent;
        let coherent = reflector_gain(g, &plate, t, &p).unwrap();
        // nearly identical facets: coherent ≈ R × power
        assert!((coherent / power / 100.0 - 1.0).abs() < 1e-2);
        p.summation = Summation::Power;
        let single = rotate_facets(0.1, 0.1, Point3::default(), UnitVec3::Z).unwrap();
        let one = facet_gain(g, single.facets[0], UnitVec3::Z, t, &p).unwrap();
        assert_eq!(reflector_gain(g, &single, t, &p).unwrap(), one);
    }
}
