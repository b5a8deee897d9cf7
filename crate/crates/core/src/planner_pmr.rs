//! Reflector placement and orientation as a 0-1 program over (gNB, mount, aim point)
//! triples, with the per-grid received gain ξ_j substituted into Big-M indicator rows.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bilp::{solve_branch_and_bound, BilpProblem, BilpStatus, BnbOptions, Row, Sense};
use crate::error::{PlanError, Result};
use crate::geom::{Point3, UnitVec3};
use crate::reflector::GainTensor;

/// Relative margin on the threshold inside the program, so that any β_j = 1 the
/// solver returns satisfies ξ_j ≥ γ despite floating-point row tolerances.
pub const THRESHOLD_MARGIN: f64 = 1e-6;

/// Minimum end-to-end linear gain that meets `gamma_max_db` of path loss between isotropic ports.
pub fn gamma_linear(gamma_max_db: f64, g_gnb_dbi: f64, g_ue_dbi: f64) -> f64 {
    10f64.powf((g_gnb_dbi + g_ue_dbi - gamma_max_db) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BigMPolicy {
    /// One constant for every grid: the sum over triples of each triple's largest gain.
    Global,
    /// Per grid: the sum of the n_pmr largest gains reaching that grid.
    #[default]
    PerGrid,
}

#[derive(Debug, Clone)]
pub struct PmrProblemSpec<'a> {
    pub tensor: &'a GainTensor,
    pub n_pmr: usize,
    pub gamma_lin: f64,
    /// Weights over the outage grids; uniform when `None`.
    pub weights: Option<&'a [f64]>,
    pub big_m: BigMPolicy,
    /// Also cap each gNB at one reflector.
    pub strict_c4: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reductions {
    /// Keep at most this many triples, ranked by stand-alone coverage. Not exact.
    pub max_triples: Option<usize>,
    /// Per coverable grid, always keep its strongest triples.
    pub per_grid_keep: usize,
}

impl Default for Reductions {
    fn default() -> Self {
        Reductions {
            max_triples: Some(400),
            per_grid_keep: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmrOptions {
    pub reductions: Reductions,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Selections of triples (i, k, l) to start from; their triples survive every reduction.
    pub warm_starts: Vec<Vec<(usize, usize, usize)>>,
}

impl Default for PmrOptions {
    fn default() -> Self {
        PmrOptions {
            reductions: Reductions::default(),
            node_limit: Some(20_000),
            time_limit: Some(Duration::from_secs(60)),
            warm_starts: Vec::new(),
        }
    }
}

/// The assembled program and the maps from its columns back to the tensor.
#[derive(Debug, Clone)]
pub struct PmrModel {
    pub problem: BilpProblem,
    /// Tensor triple index per α column.
    pub triples: Vec<usize>,
    /// Outage grid index per β column (columns `triples.len()..`).
    pub grids: Vec<usize>,
    /// Big-M per β column, in units of γ.
    pub big_m: Vec<f64>,
    /// Weight scale applied to the objective.
    pub scale: f64,
    /// Triples before reduction, and whether a non-exact reduction removed any.
    pub triples_total: usize,
    pub heuristic_cut: bool,
}

impl PmrModel {
    pub fn n_alpha(&self) -> usize {
        self.triples.len()
    }
}

fn weights_of(spec: &PmrProblemSpec) -> Result<(Vec<f64>, bool)> {
    let o = spec.tensor.n_outage;
    match spec.weights {
        None => Ok((vec![1.0 / o as f64; o], true)),
        Some(w) => {
            if w.len() != o {
                return Err(PlanError::Dimension(format!(
                    "{} weights for {o} outage grids",
                    w.len()
                )));
            }
            let s: f64 = w.iter().sum();
            if !(s > 0.0) || w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(PlanError::Domain(
                    "weights must be non-negative with a positive sum".into(),
                ));
            }
            Ok((w.iter().map(|x| x / s).collect(), false))
        }
    }
}

fn top_sum(v: &mut [f64], n: usize) -> f64 {
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter().take(n).sum()
}

/// Builds the program; ξ_j never appears as a column.
pub fn assemble_pmr_bilp(
    spec: &PmrProblemSpec,
    red: &Reductions,
    must_keep: &[usize],
) -> Result<PmrModel> {
    let tensor = spec.tensor;
    if tensor.triples.is_empty() {
        return Err(PlanError::NothingToPlace("gain tensor is empty".into()));
    }
    if !(spec.gamma_lin > 0.0 && spec.gamma_lin.is_finite()) {
        return Err(PlanError::Domain(format!(
            "threshold gain must be positive, got {}",
            spec.gamma_lin
        )));
    }
    let n = spec.n_pmr;
    let (w, uniform) = weights_of(spec)?;
    let one = 1.0 + THRESHOLD_MARGIN;
    let nt = tensor.triples.len();
    // scaled, capped coefficients per triple
    let mut coef: Vec<Vec<(usize, f64)>> = tensor
        .triples
        .iter()
        .map(|t| {
            t.gains
                .iter()
                .map(|&(j, g)| (j, (g / spec.gamma_lin).min(one)))
                .collect()
        })
        .collect();

    // entries that cannot help reach the threshold together with n-1 others are dropped
    let mut per_grid: Vec<Vec<f64>> = vec![Vec::new(); tensor.n_outage];
    for c in &coef {
        for &(j, v) in c {
            per_grid[j].push(v);
        }
    }
    let tops: Vec<Vec<f64>> = per_grid
        .into_iter()
        .map(|mut v| {
            v.sort_by(|a, b| b.total_cmp(a));
            v.truncate(n.max(1));
            v
        })
        .collect();
    let reach = |j: usize, v: f64| -> f64 {
        let t = &tops[j];
        let others: f64 = if t.len() >= n && n > 0 && v >= t[n - 1] {
            t.iter().take(n).sum::<f64>() - v
        } else {
            t.iter().take(n.saturating_sub(1)).sum()
        };
        v + others
    };
    if n > 0 {
        for c in coef.iter_mut() {
            c.retain(|&(j, v)| reach(j, v) >= one);
        }
    } else {
        coef.iter_mut().for_each(|c| c.clear());
    }

    // orientations at a mount dominated by another orientation at the same mount
    let mut alive = vec![true; nt];
    let mut by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tr) in tensor.triples.iter().enumerate() {
        by_pair.entry((tr.i, tr.k)).or_default().push(t);
    }
    let must: BTreeSet<usize> = must_keep.iter().copied().collect();
    let dominates = |a: &[(usize, f64)], b: &[(usize, f64)]| -> bool {
        // a >= b componentwise over b's support
        let mut p = 0;
        for &(j, v) in b {
            while p < a.len() && a[p].0 < j {
                p += 1;
            }
            if p == a.len() || a[p].0 != j || a[p].1 < v {
                return false;
            }
        }
        true
    };
    for ts in by_pair.values() {
        for &t in ts {
            if must.contains(&t) {
                continue;
            }
            for &u in ts {
                if u == t || !alive[u] {
                    continue;
                }
                if dominates(&coef[u], &coef[t]) && (!dominates(&coef[t], &coef[u]) || u < t) {
                    alive[t] = false;
                    break;
                }
            }
        }
    }
    for t in 0..nt {
        if coef[t].is_empty() && !must.contains(&t) {
            alive[t] = false;
        }
    }
    let mut kept: Vec<usize> = (0..nt).filter(|&t| alive[t]).collect();

    let mut heuristic_cut = false;
    if let Some(cap) = red.max_triples {
        if kept.len() > cap {
            heuristic_cut = true;
            let score = |t: usize| -> (f64, f64) {
                let solo: f64 = coef[t].iter().filter(|e| e.1 >= one).map(|e| w[e.0]).sum();
                let part: f64 = coef[t].iter().map(|e| w[e.0] * e.1).sum();
                (solo, part)
            };
            let mut keep: BTreeSet<usize> =
                kept.iter().copied().filter(|t| must.contains(t)).collect();
            let mut scores = vec![(0.0, 0.0); nt];
            for &t in &kept {
                scores[t] = score(t);
            }
            let mut best_for: Vec<Vec<(f64, usize)>> = vec![Vec::new(); tensor.n_outage];
            for &t in &kept {
                for &(j, v) in &coef[t] {
                    best_for[j].push((v, t));
                }
            }
            // strongest triples per grid, on distinct mounts so that c5 cannot exclude them all
            for b in best_for.iter_mut() {
                b.sort_by(|x, y| {
                    let (sx, sy) = (scores[x.1], scores[y.1]);
                    y.0.total_cmp(&x.0)
                        .then(sy.0.total_cmp(&sx.0))
                        .then(sy.1.total_cmp(&sx.1))
                        .then(x.1.cmp(&y.1))
                });
                let mut mounts = BTreeSet::new();
                for &(_, t) in b.iter() {
                    if mounts.len() >= red.per_grid_keep {
                        break;
                    }
                    let tr = &tensor.triples[t];
                    if mounts.insert((tr.i, tr.k)) {
                        keep.insert(t);
                    }
                }
            }
            let mut ranked: Vec<(usize, (f64, f64))> =
                kept.iter().map(|&t| (t, scores[t])).collect();
            ranked.sort_by(|a, b| {
                b.1 .0
                    .total_cmp(&a.1 .0)
                    .then(b.1 .1.total_cmp(&a.1 .1))
                    .then(a.0.cmp(&b.0))
            });
            for (t, _) in ranked {
                if keep.len() >= cap {
                    break;
                }
                keep.insert(t);
            }
            kept = keep.into_iter().collect();
        }
    }

    // c3 is an equality: pad with filler triples on unused mounts if needed
    let pairs_of = |ts: &[usize]| -> BTreeSet<(usize, usize)> {
        ts.iter()
            .map(|&t| (tensor.triples[t].i, tensor.triples[t].k))
            .collect()
    };
    // under strict c4 a selection also needs n distinct gNBs
    let hosts = |pairs: &BTreeSet<(usize, usize)>| -> usize {
        if spec.strict_c4 {
            pairs.iter().map(|p| p.0).collect::<BTreeSet<_>>().len()
        } else {
            pairs.len()
        }
    };
    let mut pairs = pairs_of(&kept);
    if hosts(&pairs) < n {
        let mut gnbs: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
        for (pair, ts) in &by_pair {
            if hosts(&pairs) >= n {
                break;
            }
            if !pairs.contains(pair) && !(spec.strict_c4 && gnbs.contains(&pair.0)) {
                kept.push(ts[0]);
                pairs.insert(*pair);
                gnbs.insert(pair.0);
            }
        }
        kept.sort_unstable();
    }
    if hosts(&pairs) < n {
        return Err(PlanError::NothingToPlace(format!(
            "only {} distinct hosts can take {n} reflectors",
            hosts(&pairs)
        )));
    }

    // coverable grids get a β column
    let na = kept.len();
    let mut col_of = vec![usize::MAX; nt];
    for (c, &t) in kept.iter().enumerate() {
        col_of[t] = c;
    }
    let mut terms_of: Vec<Vec<(usize, f64)>> = vec![Vec::new(); tensor.n_outage];
    for &t in &kept {
        for &(j, v) in &coef[t] {
            terms_of[j].push((col_of[t], v));
        }
    }
    let mut grids = Vec::new();
    let mut big_m = Vec::new();
    let global_m: f64 = kept
        .iter()
        .map(|&t| {
            tensor.triples[t]
                .gains
                .iter()
                .map(|e| e.1 / spec.gamma_lin)
                .fold(0.0, f64::max)
        })
        .sum();
    for (j, terms) in terms_of.iter().enumerate() {
        let mut vals: Vec<f64> = terms.iter().map(|e| e.1).collect();
        let best = top_sum(&mut vals, n);
        if best >= one && w[j] > 0.0 {
            grids.push(j);
            big_m.push(match spec.big_m {
                BigMPolicy::PerGrid => (best - one).max(0.0),
                BigMPolicy::Global => global_m,
            });
        }
    }
    let scale = if uniform { tensor.n_outage as f64 } else { 1.0 };
    let mut objective = vec![0.0; na];
    objective.extend(grids.iter().map(|&j| w[j] * scale));
    let mut p = BilpProblem::new(objective);
    p.names = Some(
        kept.iter()
            .map(|&t| {
                let tr = &tensor.triples[t];
                format!("alpha_{}_{}_{}", tr.i + 1, tr.k + 1, tr.l + 1)
            })
            .chain(grids.iter().map(|j| format!("beta_{}", j + 1)))
            .collect(),
    );
    for (b, &j) in grids.iter().enumerate() {
        let col = na + b;
        // β_j = 1 requires ξ_j ≥ γ
        let mut lo = terms_of[j].clone();
        lo.push((col, -one));
        p.push(Row::new(lo, Sense::Ge, 0.0));
        // ξ_j above γ forces β_j = 1; redundant at any optimum, so generated lazily
        if big_m[b] > 0.0 {
            let mut up = terms_of[j].clone();
            up.push((col, -big_m[b]));
            p.push(Row::new(up, Sense::Le, one).lazy());
        }
    }
    p.push(Row::new(
        (0..na).map(|c| (c, 1.0)).collect(),
        Sense::Eq,
        n as f64,
    ));
    let mut kept_pairs: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut per_gnb: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (c, &t) in kept.iter().enumerate() {
        let tr = &tensor.triples[t];
        kept_pairs.entry((tr.i, tr.k)).or_default().push(c);
        per_gnb.entry(tr.i).or_default().push(c);
    }
    for cols in kept_pairs.values().filter(|v| v.len() > 1) {
        p.push(Row::new(
            cols.iter().map(|&c| (c, 1.0)).collect(),
            Sense::Le,
            1.0,
        ));
    }
    if spec.strict_c4 {
        for cols in per_gnb.values() {
            p.push(Row::new(
                cols.iter().map(|&c| (c, 1.0)).collect(),
                Sense::Le,
                1.0,
            ));
        }
    }
    Ok(PmrModel {
        problem: p,
        triples: kept,
        grids,
        big_m,
        scale,
        triples_total: nt,
        heuristic_cut,
    })
}

/// Per-grid ξ from raw tensor gains for a set of triple indices.
pub fn received_gain(tensor: &GainTensor, chosen: &[usize]) -> Vec<f64> {
    let mut xi = vec![0.0; tensor.n_outage];
    for &t in chosen {
        for &(j, g) in &tensor.triples[t].gains {
            xi[j] += g;
        }
    }
    xi
}

/// Greedy completion of `start` to `n` columns, maximizing newly covered weight
/// with the summed remaining deficit as tie-breaker.
fn greedy_fill(
    model: &PmrModel,
    tensor: &GainTensor,
    spec: &PmrProblemSpec,
    start: &[usize],
    n: usize,
) -> Vec<usize> {
    let p = &model.problem;
    let na = model.n_alpha();
    let one = 1.0 + THRESHOLD_MARGIN;
    let mut grid_col = vec![usize::MAX; tensor.n_outage];
    for (b, &j) in model.grids.iter().enumerate() {
        grid_col[j] = b;
    }
    let w: Vec<f64> = model
        .grids
        .iter()
        .enumerate()
        .map(|(b, _)| p.objective[na + b])
        .collect();
    let mut acc = vec![0.0; model.grids.len()];
    let mut chosen: Vec<usize> = Vec::new();
    let mut used_pairs = BTreeSet::new();
    let mut used_gnb = BTreeSet::new();
    let take = |c: usize, acc: &mut Vec<f64>| {
        for &(j, g) in &tensor.triples[model.triples[c]].gains {
            if grid_col[j] != usize::MAX {
                acc[grid_col[j]] += (g / spec.gamma_lin).min(one);
            }
        }
    };
    for &c in start {
        let tr = &tensor.triples[model.triples[c]];
        if chosen.len() < n
            && used_pairs.insert((tr.i, tr.k))
            && (!spec.strict_c4 || used_gnb.insert(tr.i))
        {
            chosen.push(c);
            take(c, &mut acc);
        }
    }
    while chosen.len() < n {
        let mut best: Option<(usize, f64, f64)> = None;
        for c in 0..na {
            let tr = &tensor.triples[model.triples[c]];
            if used_pairs.contains(&(tr.i, tr.k)) || (spec.strict_c4 && used_gnb.contains(&tr.i)) {
                continue;
            }
            let (mut gain, mut part) = (0.0, 0.0);
            for &(j, g) in &tr.gains {
                let b = grid_col[j];
                if b == usize::MAX || acc[b] >= one {
                    continue;
                }
                let v = (g / spec.gamma_lin).min(one);
                if acc[b] + v >= one {
                    gain += w[b];
                } else {
                    part += w[b] * v;
                }
            }
            if best.map_or(true, |(_, bg, bp)| gain > bg || (gain == bg && part > bp)) {
                best = Some((c, gain, part));
            }
        }
        let Some((c, _, _)) = best else { break };
        let tr = &tensor.triples[model.triples[c]];
        used_pairs.insert((tr.i, tr.k));
        used_gnb.insert(tr.i);
        chosen.push(c);
        take(c, &mut acc);
    }
    chosen
}

/// 1-swap local search on a greedy start: replace one selected column by any
/// unselected one while covered weight (then partial progress) improves.
fn improve_swaps(
    model: &PmrModel,
    tensor: &GainTensor,
    spec: &PmrProblemSpec,
    mut cols: Vec<usize>,
) -> Vec<usize> {
    let na = model.n_alpha();
    let mut grid_w = vec![0.0; tensor.n_outage];
    for (b, &j) in model.grids.iter().enumerate() {
        grid_w[j] = model.problem.objective[na + b];
    }
    let one = 1.0 + THRESHOLD_MARGIN;
    let eval = |cols: &[usize]| -> (f64, f64) {
        let mut xi = vec![0.0; tensor.n_outage];
        for &c in cols {
            for &(j, g) in &tensor.triples[model.triples[c]].gains {
                xi[j] += g / spec.gamma_lin;
            }
        }
        let mut full = 0.0;
        let mut part = 0.0;
        for (j, &x) in xi.iter().enumerate() {
            if x >= one {
                full += grid_w[j];
            } else {
                part += grid_w[j] * x;
            }
        }
        (full, part)
    };
    let better = |a: (f64, f64), b: (f64, f64)| {
        a.0 > b.0 + 1e-12 || (a.0 >= b.0 - 1e-12 && a.1 > b.1 * (1.0 + 1e-9) + 1e-15)
    };
    let key = |c: usize| {
        let tr = &tensor.triples[model.triples[c]];
        (tr.i, tr.k)
    };
    let mut xi = vec![0.0; tensor.n_outage];
    for &c in &cols {
        for &(j, g) in &tensor.triples[model.triples[c]].gains {
            xi[j] += g / spec.gamma_lin;
        }
    }
    let contrib = |j: usize, x: f64| -> (f64, f64) {
        if x >= one {
            (grid_w[j], 0.0)
        } else {
            (0.0, grid_w[j] * x)
        }
    };
    let mut cur = eval(&cols);
    let mut delta = vec![0.0; tensor.n_outage];
    let mut touched: Vec<usize> = Vec::new();
    for _ in 0..50 {
        let mut improved = false;
        for pos in 0..cols.len() {
            let out = &tensor.triples[model.triples[cols[pos]]].gains;
            let mut best: Option<(usize, (f64, f64))> = None;
            for c in 0..na {
                if cols.contains(&c) {
                    continue;
                }
                let clash = cols.iter().enumerate().any(|(q, &o)| {
                    q != pos && (key(o) == key(c) || (spec.strict_c4 && key(o).0 == key(c).0))
                });
                if clash {
                    continue;
                }
                for &(j, g) in out {
                    if delta[j] == 0.0 {
                        touched.push(j);
                    }
                    delta[j] -= g / spec.gamma_lin;
                }
                for &(j, g) in &tensor.triples[model.triples[c]].gains {
                    if delta[j] == 0.0 {
                        touched.push(j);
                    }
                    delta[j] += g / spec.gamma_lin;
                }
                touched.sort_unstable();
                touched.dedup();
                let mut v = cur;
                for &j in &touched {
                    let (f0, p0) = contrib(j, xi[j]);
                    let (f1, p1) = contrib(j, xi[j] + delta[j]);
                    v.0 += f1 - f0;
                    v.1 += p1 - p0;
                    delta[j] = 0.0;
                }
                touched.clear();
                if better(v, best.map_or(cur, |b| b.1)) {
                    best = Some((c, v));
                }
            }
            if let Some((c, _)) = best {
                for &(j, g) in out {
                    xi[j] -= g / spec.gamma_lin;
                }
                for &(j, g) in &tensor.triples[model.triples[c]].gains {
                    xi[j] += g / spec.gamma_lin;
                }
                cols[pos] = c;
                cur = eval(&cols);
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    cols
}

fn assignment(
    model: &PmrModel,
    tensor: &GainTensor,
    spec: &PmrProblemSpec,
    cols: &[usize],
) -> (Vec<bool>, f64) {
    let na = model.n_alpha();
    let mut x = vec![false; model.problem.n];
    for &c in cols {
        x[c] = true;
    }
    let xi = received_gain(
        tensor,
        &cols.iter().map(|&c| model.triples[c]).collect::<Vec<_>>(),
    );
    for (b, &j) in model.grids.iter().enumerate() {
        x[na + b] = xi[j] >= spec.gamma_lin * (1.0 + THRESHOLD_MARGIN);
    }
    let v = model.problem.objective_value(&x);
    (x, v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedPmr {
    pub gnb: usize,
    pub mount: usize,
    pub aim: usize,
    pub position: Point3,
    pub normal: UnitVec3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmrSolveStats {
    pub triples_total: usize,
    pub triples_kept: usize,
    /// A non-exact triple cap was applied.
    pub heuristic_cut: bool,
    pub variables: usize,
    pub rows: usize,
    pub lazy_rows: usize,
    pub big_m_max: f64,
    pub nodes: u64,
    pub status: BilpStatus,
    pub gap: f64,
    /// Grids whose ξ lies within the margin above γ and were left uncovered by the solver.
    pub threshold_ties: usize,
    pub mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmrPlacement {
    /// Tensor triple indices, ascending.
    pub triples: Vec<usize>,
    pub selected: Vec<SelectedPmr>,
    /// Linear received gain per outage grid.
    pub xi: Vec<f64>,
    pub beta: Vec<bool>,
    /// Weighted fraction of the outage set now covered.
    pub coverage: f64,
    pub stats: PmrSolveStats,
}

impl PmrPlacement {
    pub fn covered_count(&self) -> usize {
        self.beta.iter().filter(|&&b| b).count()
    }

    pub fn selected_keys(&self) -> Vec<(usize, usize, usize)> {
        self.selected
            .iter()
            .map(|s| (s.gnb, s.mount, s.aim))
            .collect()
    }
}

fn empty_placement(spec: &PmrProblemSpec) -> PmrPlacement {
    let o = spec.tensor.n_outage;
    PmrPlacement {
        triples: Vec::new(),
        selected: Vec::new(),
        xi: vec![0.0; o],
        beta: vec![false; o],
        coverage: 0.0,
        stats: PmrSolveStats {
            triples_total: spec.tensor.triples.len(),
            triples_kept: 0,
            heuristic_cut: false,
            variables: 0,
            rows: 0,
            lazy_rows: 0,
            big_m_max: 0.0,
            nodes: 0,
            status: BilpStatus::Optimal,
            gap: 0.0,
            threshold_ties: 0,
            mismatches: 0,
        },
    }
}

/// Solves the placement and re-checks every β_j against ξ_j recomputed from raw gains.
/// `positions` are the mount coordinates indexed like the tensor's `k`.
pub fn plan_pmr(
    spec: &PmrProblemSpec,
    positions: &[Point3],
    opts: &PmrOptions,
) -> Result<PmrPlacement> {
    let tensor = spec.tensor;
    if positions.len() != tensor.n_candidates {
        return Err(PlanError::Dimension(format!(
            "{} mount positions for {} candidates",
            positions.len(),
            tensor.n_candidates
        )));
    }
    if spec.n_pmr == 0 {
        let (_, _) = weights_of(spec)?;
        return Ok(empty_placement(spec));
    }
    let index: BTreeMap<(usize, usize, usize), usize> = tensor
        .triples
        .iter()
        .enumerate()
        .map(|(t, tr)| ((tr.i, tr.k, tr.l), t))
        .collect();
    let starts: Vec<Vec<usize>> = opts
        .warm_starts
        .iter()
        .map(|ws| {
            ws.iter()
                .filter_map(|key| index.get(key).copied())
                .collect()
        })
        .collect();
    let must: Vec<usize> = starts.iter().flatten().copied().collect();
    let model = assemble_pmr_bilp(spec, &opts.reductions, &must)?;
    let na = model.n_alpha();
    let col_of: BTreeMap<usize, usize> = model
        .triples
        .iter()
        .enumerate()
        .map(|(c, &t)| (t, c))
        .collect();

    // best of plain greedy and every seeded greedy, each polished by swaps
    let mut warm: Option<(Vec<bool>, f64)> = None;
    let seeds = std::iter::once(Vec::new()).chain(starts.iter().map(|s| {
        s.iter()
            .filter_map(|t| col_of.get(t).copied())
            .collect::<Vec<_>>()
    }));
    for seed in seeds {
        let cols = improve_swaps(
            &model,
            tensor,
            spec,
            greedy_fill(&model, tensor, spec, &seed, spec.n_pmr),
        );
        let (x, v) = assignment(&model, tensor, spec, &cols);
        if warm.as_ref().map_or(true, |w| v > w.1) {
            warm = Some((x, v));
        }
    }
    let warm = warm.map(|w| w.0);
    let warm = warm.filter(|w| model.problem.is_feasible(w));

    let sol = solve_branch_and_bound(
        &model.problem,
        &BnbOptions {
            node_limit: opts.node_limit,
            time_limit: opts.time_limit,
            warm_start: warm,
            ..Default::default()
        },
    )?;
    if sol.status == BilpStatus::Infeasible {
        return Err(PlanError::Verification(
            "reflector program reported infeasible".into(),
        ));
    }
    let mut triples: Vec<usize> = (0..na)
        .filter(|&c| sol.x[c])
        .map(|c| model.triples[c])
        .collect();
    triples.sort_unstable();
    let xi = received_gain(tensor, &triples);

    // post-solve re-check, independent of the Big-M rows
    let mut solver_beta = vec![false; tensor.n_outage];
    for (b, &j) in model.grids.iter().enumerate() {
        solver_beta[j] = sol.x[na + b];
    }
    let mut beta = vec![false; tensor.n_outage];
    let (mut ties, mut mismatches) = (0, 0);
    for j in 0..tensor.n_outage {
        let exact = xi[j] >= spec.gamma_lin;
        beta[j] = exact;
        match (solver_beta[j], exact) {
            (true, false) => mismatches += 1,
            (false, true) if xi[j] < spec.gamma_lin * (1.0 + 2.0 * THRESHOLD_MARGIN) => ties += 1,
            (false, true) if model.grids.contains(&j) => mismatches += 1,
            _ => {}
        }
    }
    if mismatches > 0 {
        return Err(PlanError::Verification(format!(
            "{mismatches} outage grids disagree with the recomputed received gain"
        )));
    }
    let (w, uniform) = weights_of(spec)?;
    let coverage: f64 = if uniform {
        beta.iter().filter(|&&b| b).count() as f64 / tensor.n_outage as f64
    } else {
        (0..tensor.n_outage)
            .filter(|&j| beta[j])
            .map(|j| w[j])
            .sum()
    };
    let selected = triples
        .iter()
        .map(|&t| {
            let tr = &tensor.triples[t];
            SelectedPmr {
                gnb: tr.i,
                mount: tr.k,
                aim: tr.l,
                position: positions[tr.k],
                normal: tr.normal,
            }
        })
        .collect();
    let p = &model.problem;
    Ok(PmrPlacement {
        triples,
        selected,
        xi,
        beta,
        coverage,
        stats: PmrSolveStats {
            triples_total: model.triples_total,
            triples_kept: na,
            heuristic_cut: model.heuristic_cut,
            variables: p.n,
            rows: p.rows.len(),
            lazy_rows: p.rows.iter().filter(|r| r.lazy).count(),
            big_m_max: model.big_m.iter().copied().fold(0.0, f64::max),
            nodes: sol.nodes,
            status: sol.status,
            gap: sol.gap / model.scale,
            threshold_ties: ties,
            mismatches,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmrSweepRow {
    pub n_pmr: usize,
    pub coverage: f64,
    pub covered: usize,
    pub status: BilpStatus,
}

/// Solves n_pmr = 0..=max in order, seeding each solve with the previous
/// selection so coverage never drops even when a solve stops at a limit.
/// `seeds[n]`, when given, is an extra start for the n-reflector solve.
pub fn sweep_pmr(
    spec: &PmrProblemSpec,
    positions: &[Point3],
    max_n: usize,
    opts: &PmrOptions,
    seeds: &[Vec<(usize, usize, usize)>],
) -> Result<Vec<(PmrSweepRow, PmrPlacement)>> {
    let mut out: Vec<(PmrSweepRow, PmrPlacement)> = Vec::with_capacity(max_n + 1);
    for n in 0..=max_n {
        let s = PmrProblemSpec {
            n_pmr: n,
            ..spec.clone()
        };
        let mut starts = opts.warm_starts.clone();
        if let Some((_, prev)) = out.last() {
            starts.push(prev.selected_keys());
        }
        if let Some(seed) = seeds.get(n) {
            starts.push(seed.clone());
        }
        let o = PmrOptions {
            warm_starts: starts,
            ..opts.clone()
        };
        let p = plan_pmr(&s, positions, &o)?;
        out.push((
            PmrSweepRow {
                n_pmr: n,
                coverage: p.coverage,
                covered: p.covered_count(),
                status: p.stats.status,
            },
            p,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilp::solve_exhaustive;
    use crate::reflector::{GainParams, Summation, Triple};

    fn tensor(
        triples: Vec<(usize, usize, usize, Vec<(usize, f64)>)>,
        o: usize,
        k: usize,
    ) -> GainTensor {
        GainTensor {
            triples: triples
                .into_iter()
                .map(|(i, k, l, gains)| Triple {
                    i,
                    k,
                    l,
                    normal: UnitVec3::Z,
                    gains,
                })
                .collect(),
            n_gnb: 1,
            n_candidates: k,
            n_outage: o,
            params: GainParams {
                facet_m: 0.1,
                wavelength_m: 0.0107,
                zeta: 2.0,
                g_gnb: 1.0,
                g_ue: 1.0,
                summation: Summation::Power,
            },
            plate_m: 1.0,
            skipped: 0,
            near_field: 0,
        }
    }

    fn spec(t: &GainTensor, n: usize) -> PmrProblemSpec<'_> {
        PmrProblemSpec {
            tensor: t,
            n_pmr: n,
            gamma_lin: 1.0,
            weights: None,
            big_m: BigMPolicy::PerGrid,
            strict_c4: false,
        }
    }

    fn pos(k: usize) -> Vec<Point3> {
        (0..k).map(|i| Point3::new(i as f64, 0.0, 10.0)).collect()
    }

    #[test]
    fn gamma_linear_examples() {
        assert!((gamma_linear(114.0, 21.5, 5.5) - 1.995262e-9).abs() < 1e-14);
        assert_eq!(gamma_linear(0.0, 0.0, 0.0), 1.0);
        assert!((gamma_linear(114.0, 0.0, 0.0) / 10f64.powf(-11.4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_triple() {
        let t = tensor(vec![(0, 0, 0, vec![(0, 2.0)])], 1, 1);
        let p = plan_pmr(&spec(&t, 1), &pos(1), &PmrOptions::default()).unwrap();
        assert_eq!(p.triples, vec![0]);
        assert!(p.beta[0]);
        assert_eq!(p.coverage, 1.0);
    }

    #[test]
    fn weak_gains_still_place_all() {
        let t = tensor(
            vec![
                (0, 0, 0, vec![(0, 0.1)]),
                (0, 1, 0, vec![(0, 0.2)]),
                (0, 2, 0, vec![(1, 0.3)]),
            ],
            2,
            3,
        );
        let p = plan_pmr(&spec(&t, 2), &pos(3), &PmrOptions::default()).unwrap();
        assert_eq!(p.triples.len(), 2);
        assert_eq!(p.coverage, 0.0);
    }

    #[test]
    fn zero_reflectors() {
        let t = tensor(vec![(0, 0, 0, vec![(0, 2.0)])], 1, 1);
        let p = plan_pmr(&spec(&t, 0), &pos(1), &PmrOptions::default()).unwrap();
        assert!(p.triples.is_empty() && p.coverage == 0.0);
    }

    #[test]
    fn pairs_sum_to_threshold() {
        // neither reflector alone reaches grid 0; both together do
        let t = tensor(
            vec![
                (0, 0, 0, vec![(0, 0.6)]),
                (0, 0, 1, vec![(1, 1.5)]),
                (0, 1, 0, vec![(0, 0.6)]),
                (0, 1, 1, vec![(2, 1.2)]),
            ],
            3,
            2,
        );
        let p = plan_pmr(&spec(&t, 2), &pos(2), &PmrOptions::default()).unwrap();
        // one orientation per mount: best is {0,1}-> grid 1, {1,1}-> grid 2 (2 grids) vs grid 0 (1 grid)
        assert_eq!(p.covered_count(), 2);
        let s = p.selected_keys();
        assert_eq!(s.len(), 2);
        assert_ne!(s[0].1, s[1].1);
    }

    #[test]
    fn matches_exhaustive_on_unreduced_model() {
        let t = tensor(
            vec![
                (0, 0, 0, vec![(0, 0.7), (1, 0.4)]),
                (0, 0, 1, vec![(1, 0.8), (2, 0.3)]),
                (0, 1, 0, vec![(0, 0.5), (2, 0.9)]),
                (0, 1, 1, vec![(1, 0.3), (3, 1.1)]),
            ],
            4,
            2,
        );
        for n in 1..=2 {
            let s = spec(&t, n);
            let m = assemble_pmr_bilp(
                &s,
                &Reductions {
                    max_triples: None,
                    per_grid_keep: 0,
                },
                &[],
            )
            .unwrap();
            let ex = solve_exhaustive(&m.problem).unwrap();
            let p = plan_pmr(&s, &pos(2), &PmrOptions::default()).unwrap();
            assert!((ex.objective / m.scale - p.coverage).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn strict_c4_caps_each_gnb() {
        let t = tensor(
            vec![(0, 0, 0, vec![(0, 2.0)]), (0, 1, 0, vec![(1, 2.0)])],
            2,
            2,
        );
        let mut s = spec(&t, 1);
        s.strict_c4 = true;
        let p = plan_pmr(&s, &pos(2), &PmrOptions::default()).unwrap();
        assert_eq!(p.coverage, 0.5);
        s.n_pmr = 2;
        assert!(plan_pmr(&s, &pos(2), &PmrOptions::default()).is_err());
    }

    #[test]
    fn sweep_is_monotone() {
        let t = tensor(
            (0..6)
                .map(|k| (0, k, 0, vec![(k, 1.5), ((k + 1) % 6, 0.5)]))
                .collect(),
            6,
            6,
        );
        let rows = sweep_pmr(&spec(&t, 0), &pos(6), 6, &PmrOptions::default(), &[]).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].0.coverage >= w[0].0.coverage);
        }
        assert_eq!(rows[6].0.coverage, 1.0);
    }
}
