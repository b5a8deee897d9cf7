//! gNB maximum weighted coverage: pick `n_gnb` candidates so the weighted
//! fraction of service points with path loss strictly below the MAPL is maximal.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::bilp::{solve_branch_and_bound, BilpProblem, BilpStatus, BnbOptions, Row, Sense};
use crate::channel::{gb_plm, ChannelParams};
use crate::error::{PlanError, Result};
use crate::geom::{dist2d, dist3d};
use crate::scenario::{GridRole, GridSet};
use crate::visibility::{IndirectMode, VisibilityIndex};

/// Per-link path loss for every (candidate, service point), dB; `+∞` marks outage.
#[derive(Debug, Clone)]
pub struct PathLossMatrix {
    pub mode: IndirectMode,
    /// `pl[i][j]` for candidate `i` and service point `j`.
    pub pl: Vec<Vec<f64>>,
    /// Links whose ground distance exceeds the LoS break-point distance.
    pub breakpoint_exceeded: usize,
}

impl PathLossMatrix {
    pub fn n(&self) -> usize {
        self.pl.len()
    }

    pub fn m(&self) -> usize {
        self.pl.first().map_or(0, Vec::len)
    }
}

/// Evaluates the visibility-gated path loss for every candidate link.
pub fn build_path_loss(
    gnb: &GridSet,
    sa: &GridSet,
    vis: &[VisibilityIndex],
    ch: &ChannelParams,
    mode: IndirectMode,
) -> Result<PathLossMatrix> {
    if vis.len() != gnb.len() {
        return Err(PlanError::Dimension(format!(
            "{} visibility indices for {} gNB candidates",
            vis.len(),
            gnb.len()
        )));
    }
    if mode == IndirectMode::Diffuse && vis.iter().any(|v| v.diffuse.is_none()) {
        return Err(PlanError::Contract(
            "diffuse mode needs visibility built with surface samples".into(),
        ));
    }
    if let Some(v) = vis.iter().find(|v| v.direct.len() != sa.len()) {
        return Err(PlanError::Dimension(format!(
            "visibility index covers {} points, service grid has {}",
            v.direct.len(),
            sa.len()
        )));
    }
    let rows: Vec<Result<(Vec<f64>, usize)>> = gnb
        .points
        .par_iter()
        .zip(vis)
        .map(|(&g, v)| {
            let bp = ch.breakpoint_m(g.z);
            let mut exceeded = 0;
            let mut row = Vec::with_capacity(sa.len());
            for (j, &s) in sa.points.iter().enumerate() {
                let direct = v.direct.contains(j);
                let indirect = !direct && v.indirect(mode).is_some_and(|b| b.contains(j));
                let d2 = dist2d(g, s);
                if direct && d2 > bp {
                    exceeded += 1;
                }
                row.push(gb_plm(direct, indirect, d2, dist3d(g, s), ch)?);
            }
            Ok((row, exceeded))
        })
        .collect();
    let mut pl = Vec::with_capacity(rows.len());
    let mut breakpoint_exceeded = 0;
    for r in rows {
        let (row, e) = r?;
        pl.push(row);
        breakpoint_exceeded += e;
    }
    if breakpoint_exceeded > 0 {
        log::warn!("{breakpoint_exceeded} direct links lie beyond the LoS break-point distance");
    }
    Ok(PathLossMatrix {
        mode,
        pl,
        breakpoint_exceeded,
    })
}

/// Binary coverage `C_ij = [pl_ij < γ]` with normalized grid weights.
#[derive(Debug, Clone)]
pub struct CoverageMatrix {
    /// One bitset over service points per candidate.
    pub cover: Vec<FixedBitSet>,
    pub weights: Vec<f64>,
    pub gamma_db: f64,
}

impl CoverageMatrix {
    pub fn from_path_loss(
        pl: &PathLossMatrix,
        gamma_db: f64,
        weights: Option<&[f64]>,
    ) -> Result<Self> {
        let m = pl.m();
        let weights = match weights {
            None => uniform_weights(m),
            Some(w) if w.len() == m => normalize_weights(w)?,
            Some(w) => {
                return Err(PlanError::Dimension(format!(
                    "{} weights for {m} service points",
                    w.len()
                )));
            }
        };
        let cover = pl
            .pl
            .iter()
            .map(|row| {
                let mut b = FixedBitSet::with_capacity(m);
                for (j, &v) in row.iter().enumerate() {
                    // strict: pl == γ is not covered, and +∞ never is
                    if v < gamma_db {
                        b.insert(j);
                    }
                }
                b
            })
            .collect();
        Ok(Self {
            cover,
            weights,
            gamma_db,
        })
    }

    pub fn n(&self) -> usize {
        self.cover.len()
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn covered_weight(&self, set: &FixedBitSet) -> f64 {
        if self.uniform() {
            return set.count_ones(..) as f64 / self.m().max(1) as f64;
        }
        set.ones().map(|j| self.weights[j]).sum()
    }

    pub fn union_of(&self, chosen: &[usize]) -> FixedBitSet {
        let mut u = FixedBitSet::with_capacity(self.m());
        for &i in chosen {
            u.union_with(&self.cover[i]);
        }
        u
    }

    fn uniform(&self) -> bool {
        self.weights.windows(2).all(|w| w[0] == w[1])
    }
}

/// Builds the path loss and thresholds it in one call.
#[allow(clippy::too_many_arguments)]
pub fn build_coverage_matrix(
    gnb: &GridSet,
    sa: &GridSet,
    vis: &[VisibilityIndex],
    ch: &ChannelParams,
    gamma_db: f64,
    weights: Option<&[f64]>,
    mode: IndirectMode,
) -> Result<CoverageMatrix> {
    let pl = build_path_loss(gnb, sa, vis, ch, mode)?;
    CoverageMatrix::from_path_loss(&pl, gamma_db, weights)
}

pub fn uniform_weights(m: usize) -> Vec<f64> {
    vec![1.0 / m.max(1) as f64; m]
}

/// Rescales non-negative weights to sum to 1.
pub fn normalize_weights(w: &[f64]) -> Result<Vec<f64>> {
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(PlanError::Config(
            "grid weights must be finite and >= 0".into(),
        ));
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(PlanError::Config("grid weights sum to zero".into()));
    }
    Ok(w.iter().map(|v| v / total).collect())
}

/// `⌈a_SA / (π r²)⌉`, never less than 1.
pub fn estimate_gnb_count(sa_area_m2: f64, cell_radius_m: f64) -> Result<usize> {
    if !(cell_radius_m.is_finite() && cell_radius_m > 0.0)
        || !(sa_area_m2.is_finite() && sa_area_m2 >= 0.0)
    {
        return Err(PlanError::Domain(format!(
            "need area >= 0 and radius > 0, got {sa_area_m2} m² and {cell_radius_m} m"
        )));
    }
    let cell = std::f64::consts::PI * cell_radius_m * cell_radius_m;
    Ok(((sa_area_m2 / cell).ceil() as usize).max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnbOptions {
    /// Exact reductions before building the 0-1 program.
    pub presolve: bool,
    pub node_limit: Option<u64>,
}

impl Default for GnbOptions {
    fn default() -> Self {
        Self {
            presolve: true,
            node_limit: Some(200_000),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GnbSolveStats {
    pub candidates_kept: usize,
    pub patterns: usize,
    pub variables: usize,
    pub rows: usize,
    pub nodes: u64,
    pub status: BilpStatus,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct GnbPlacement {
    /// Selected candidate indices, ascending.
    pub chosen: Vec<usize>,
    /// β_j: service point `j` is covered by a chosen candidate.
    pub covered: FixedBitSet,
    /// Weighted covered fraction Σ w_j β_j.
    pub coverage: f64,
    pub stats: GnbSolveStats,
}

impl GnbPlacement {
    pub fn covered_count(&self) -> usize {
        self.covered.count_ones(..)
    }

    /// Service-point indices left uncovered.
    pub fn outage_indices(&self) -> Vec<usize> {
        self.covered.zeroes().collect()
    }
}

struct Reduced {
    /// Original candidate index per kept column.
    keep: Vec<usize>,
    /// Grid groups with identical covering sets over `keep`: (members of `keep` by position, weight).
    groups: Vec<(Vec<usize>, f64)>,
    /// Weight covered by every kept candidate (any choice earns it).
    constant: f64,
}

fn reduce(cm: &CoverageMatrix, n_gnb: usize, scale: f64) -> Reduced {
    let m = cm.m();
    let mut keep: Vec<usize> = (0..cm.n()).collect();
    loop {
        // group service points by which kept candidates cover them
        let mut groups: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        let mut constant = 0.0;
        for j in 0..m {
            let pat: Vec<u32> = keep
                .iter()
                .enumerate()
                .filter(|(_, &i)| cm.cover[i].contains(j))
                .map(|(p, _)| p as u32)
                .collect();
            if pat.is_empty() {
                continue;
            }
            let w = cm.weights[j] * scale;
            if pat.len() == keep.len() {
                constant += w;
            } else {
                *groups.entry(pat).or_insert(0.0) += w;
            }
        }
        // candidate coverage over groups
        let g_list: Vec<(&Vec<u32>, f64)> = groups.iter().map(|(k, &v)| (k, v)).collect();
        let mut cols = vec![FixedBitSet::with_capacity(g_list.len()); keep.len()];
        for (g, (pat, _)) in g_list.iter().enumerate() {
            for &p in pat.iter() {
                cols[p as usize].insert(g);
            }
        }
        let mut removed = vec![false; keep.len()];
        let mut remaining = keep.len();
        for a in 0..keep.len() {
            if remaining <= n_gnb {
                break;
            }
            let dominated = (0..keep.len()).any(|b| {
                b != a
                    && !removed[b]
                    && cols[a].is_subset(&cols[b])
                    && (cols[a] != cols[b] || b < a)
            });
            if dominated {
                removed[a] = true;
                remaining -= 1;
            }
        }
        if remaining == keep.len() {
            let groups = groups
                .into_iter()
                .map(|(pat, w)| (pat.into_iter().map(|p| p as usize).collect(), w))
                .collect();
            return Reduced {
                keep,
                groups,
                constant,
            };
        }
        keep = keep
            .into_iter()
            .zip(&removed)
            .filter(|(_, &r)| !r)
            .map(|(i, _)| i)
            .collect();
    }
}

/// Solves the weighted maximum-coverage program exactly.
pub fn plan_gnb(cm: &CoverageMatrix, n_gnb: usize, opts: &GnbOptions) -> Result<GnbPlacement> {
    let n = cm.n();
    if n_gnb == 0 || n_gnb > n {
        return Err(PlanError::Domain(format!(
            "need 1 <= n_gnb <= {n}, got {n_gnb}"
        )));
    }
    // uniform weights become unit counts, which keeps the objective integral
    let scale = if cm.uniform() { cm.m() as f64 } else { 1.0 };
    let red = if opts.presolve {
        reduce(cm, n_gnb, scale)
    } else {
        let mut groups = Vec::new();
        for j in 0..cm.m() {
            let pat: Vec<usize> = (0..n).filter(|&i| cm.cover[i].contains(j)).collect();
            if !pat.is_empty() {
                groups.push((pat, cm.weights[j] * scale));
            }
        }
        Reduced {
            keep: (0..n).collect(),
            groups,
            constant: 0.0,
        }
    };
    let nk = red.keep.len();
    let ng = red.groups.len();
    let mut objective = vec![0.0; nk];
    objective.extend(red.groups.iter().map(|(_, w)| *w));
    let mut p = BilpProblem::new(objective);
    p.names = Some(
        red.keep
            .iter()
            .map(|i| format!("alpha_{}", i + 1))
            .chain((0..ng).map(|g| format!("beta_{}", g + 1)))
            .collect(),
    );
    for (g, (pat, _)) in red.groups.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = pat.iter().map(|&c| (c, 1.0)).collect();
        terms.push((nk + g, -1.0));
        p.push(Row::new(terms, Sense::Ge, 0.0));
    }
    p.push(Row::new(
        (0..nk).map(|c| (c, 1.0)).collect(),
        Sense::Eq,
        n_gnb as f64,
    ));

    // greedy warm start over the reduced columns
    let mut cols = vec![FixedBitSet::with_capacity(ng); nk];
    for (g, (pat, _)) in red.groups.iter().enumerate() {
        for &c in pat {
            cols[c].insert(g);
        }
    }
    let gw: Vec<f64> = red.groups.iter().map(|(_, w)| *w).collect();
    let greedy = crate::bilp::greedy_max_coverage(&cols, &gw, n_gnb);
    let mut warm = vec![false; nk + ng];
    for &c in &greedy.chosen {
        warm[c] = true;
    }
    for g in greedy.covered.ones() {
        warm[nk + g] = true;
    }

    let sol = solve_branch_and_bound(
        &p,
        &BnbOptions {
            node_limit: opts.node_limit,
            warm_start: Some(warm),
            ..Default::default()
        },
    )?;
    if sol.status == BilpStatus::Infeasible {
        return Err(PlanError::Verification(
            "gNB program reported infeasible".into(),
        ));
    }
    let chosen: Vec<usize> = {
        let mut c: Vec<usize> = (0..nk).filter(|&c| sol.x[c]).map(|c| red.keep[c]).collect();
        c.sort_unstable();
        c
    };
    let covered = cm.union_of(&chosen);
    let coverage = cm.covered_weight(&covered);
    let expect = (sol.objective + red.constant) / scale;
    if (coverage - expect).abs() > 1e-9 {
        return Err(PlanError::Verification(format!(
            "recomputed coverage {coverage} differs from solver objective {expect}"
        )));
    }
    Ok(GnbPlacement {
        chosen,
        covered,
        coverage,
        stats: GnbSolveStats {
            candidates_kept: nk,
            patterns: ng,
            variables: p.n,
            rows: p.rows.len(),
            nodes: sol.nodes,
            status: sol.status,
            gap: sol.gap / scale,
        },
    })
}

/// The service points left uncovered by `p`, as an outage grid.
pub fn outage_set(p: &GnbPlacement, sa: &GridSet) -> GridSet {
    sa.subset(&p.outage_indices(), GridRole::OutageArea)
}
