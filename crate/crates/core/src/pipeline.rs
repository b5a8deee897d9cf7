//! Config-driven runs: the stages behind each command-line subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bilp::BilpStatus;
use crate::channel::{
    db_to_lin, lin_to_db, mapl, mapl_check, ChannelParams, LinkBudget, MaplCheck,
};
use crate::error::{PlanError, Result};
use crate::geom::Point3;
use crate::planner_gnb::{
    build_path_loss, outage_set, plan_gnb, CoverageMatrix, GnbOptions, GnbPlacement, GnbSolveStats,
    PathLossMatrix,
};
use crate::planner_pmr::{
    gamma_linear, sweep_pmr, BigMPolicy, PmrOptions, PmrPlacement, PmrProblemSpec, PmrSolveStats,
    Reductions, SelectedPmr,
};
use crate::reflector::{
    build_gain_tensor, plate_center, pmr_candidates, GainParams, Summation, TensorOptions,
};
use crate::report::{
    read_weights, write_csv, write_json, write_pgm, GRAY_COVERED, GRAY_INDIRECT, GRAY_OUTAGE,
};
use crate::scenario::{
    generate_building_surface_grid, generate_gnb_candidates, generate_service_grid, load_scenario,
    GridRole, GridSet, Scenario,
};
use crate::visibility::{
    classify_points, surface_visibility, IndirectMode, OcclusionIndex, PointClass,
    VisibilityContext,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Scenario JSON; the bundled reference map when absent.
    pub scenario: Option<PathBuf>,
    pub mode: IndirectMode,
    pub n_gnb: usize,
    /// Coverage threshold; the link-budget MAPL when absent.
    pub gamma_db: Option<f64>,
    /// CSV of `index,weight` rows over the service grid.
    pub weights: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub out: PathBuf,
    /// For randomized test fixtures only; no solve reads it.
    pub seed: u64,
    /// Spacing of building-surface samples (diffuse scatterers and reflector mounts).
    pub surface_spacing_m: f64,
    pub channel: ChannelParams,
    pub link_budget: LinkBudget,
    pub gnb: GnbConfig,
    pub sweep: SweepConfig,
    pub visibility: VisibilityConfig,
    pub pmr: PmrConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: None,
            mode: IndirectMode::Specular,
            n_gnb: 1,
            gamma_db: None,
            weights: None,
            out: PathBuf::from("out"),
            seed: 0,
            surface_spacing_m: 1.0,
            channel: ChannelParams::default(),
            link_budget: LinkBudget::default(),
            gnb: GnbConfig::default(),
            sweep: SweepConfig::default(),
            visibility: VisibilityConfig::default(),
            pmr: PmrConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnbConfig {
    pub presolve: bool,
    /// Branch-and-bound node budget; 0 means unlimited.
    pub node_limit: u64,
}

impl Default for GnbConfig {
    fn default() -> Self {
        GnbConfig {
            presolve: true,
            node_limit: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma_min_db: f64,
    pub gamma_max_db: f64,
    pub gamma_step_db: f64,
    /// The knee is the smallest γ whose direct coverage reaches this fraction
    /// of the direct coverage at the top of the sweep.
    pub knee_fraction: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gamma_min_db: 85.0,
            gamma_max_db: 125.0,
            gamma_step_db: 1.0,
            knee_fraction: 0.99,
        }
    }
}

impl SweepConfig {
    pub fn gammas(&self) -> Vec<f64> {
        let n =
            ((self.gamma_max_db - self.gamma_min_db) / self.gamma_step_db + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| self.gamma_min_db + i as f64 * self.gamma_step_db)
            .collect()
    }
}

/// Source for the visibility command: an explicit point or a gNB candidate index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisibilityConfig {
    pub source: Option<[f64; 3]>,
    pub candidate: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmrConfig {
    /// Plate side of the reported placement.
    pub plate_m: f64,
    /// Plate sides swept (the reported one is added if missing).
    pub plate_sizes_m: Vec<f64>,
    pub facet_m: f64,
    /// Reflector count of the reported placement.
    pub n_pmr: usize,
    /// Sweep N^PMR over 0..=max_n_pmr.
    pub max_n_pmr: usize,
    pub summation: Summation,
    pub zeta: f64,
    pub orientation_stride: usize,
    /// Tensor entries below gain_floor · γ are dropped.
    pub gain_floor: f64,
    pub standoff: bool,
    pub big_m: BigMPolicy,
    pub strict_c4: bool,
    /// Heuristic cap on triples in each program; 0 keeps all.
    pub max_triples: usize,
    pub per_grid_keep: usize,
    /// 0 means unlimited.
    pub node_limit: u64,
    /// Also write the sparse gain tensor of the reported plate size.
    pub write_tensor: bool,
}

impl Default for PmrConfig {
    fn default() -> Self {
        PmrConfig {
            plate_m: 1.0,
            plate_sizes_m: vec![1.0, 2.0, 3.0],
            facet_m: 0.1,
            n_pmr: 12,
            max_n_pmr: 15,
            summation: Summation::Power,
            zeta: 2.0,
            orientation_stride: 1,
            gain_floor: 1e-3,
            standoff: true,
            big_m: BigMPolicy::PerGrid,
            strict_c4: false,
            max_triples: 400,
            per_grid_keep: 4,
            node_limit: 20_000,
            write_tensor: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| PlanError::Parse {
            path: origin.into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            fs::read_to_string(path).map_err(|e| PlanError::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.link_budget.validate()?;
        if self.n_gnb == 0 {
            return Err(PlanError::Config("n_gnb must be >= 1".into()));
        }
        if let Some(g) = self.gamma_db {
            if !g.is_finite() {
                return Err(PlanError::Config(format!(
                    "gamma_db must be finite, got {g}"
                )));
            }
        }
        if !(self.surface_spacing_m.is_finite() && self.surface_spacing_m > 0.0) {
            return Err(PlanError::Config("surface_spacing_m must be > 0".into()));
        }
        let s = &self.sweep;
        if !(s.gamma_step_db > 0.0
            && s.gamma_max_db >= s.gamma_min_db
            && s.gamma_min_db.is_finite())
        {
            return Err(PlanError::Config(
                "sweep needs gamma_min_db <= gamma_max_db and a positive step".into(),
            ));
        }
        if !(s.knee_fraction > 0.0 && s.knee_fraction <= 1.0) {
            return Err(PlanError::Config("knee_fraction must lie in (0, 1]".into()));
        }
        let p = &self.pmr;
        for &a in p.plate_sizes_m.iter().chain([&p.plate_m]) {
            if !(a.is_finite() && a > 0.0) {
                return Err(PlanError::Config(format!(
                    "plate size must be > 0, got {a}"
                )));
            }
        }
        if !(p.facet_m > 0.0 && p.zeta > 0.0 && p.gain_floor >= 0.0) {
            return Err(PlanError::Config(
                "facet_m and zeta must be > 0, gain_floor >= 0".into(),
            ));
        }
        Ok(())
    }

    /// The coverage threshold in force.
    pub fn gamma(&self) -> f64 {
        self.gamma_db.unwrap_or_else(|| mapl(&self.link_budget))
    }

    /// Plate sizes swept, ascending, including the reported one.
    pub fn plate_sizes(&self) -> Vec<f64> {
        let mut v = self.pmr.plate_sizes_m.clone();
        if !v.iter().any(|&a| a == self.pmr.plate_m) {
            v.push(self.pmr.plate_m);
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn gnb_options(&self) -> GnbOptions {
        GnbOptions {
            presolve: self.gnb.presolve,
            node_limit: limit(self.gnb.node_limit),
        }
    }

    fn pmr_options(&self) -> PmrOptions {
        PmrOptions {
            reductions: Reductions {
                max_triples: (self.pmr.max_triples > 0).then_some(self.pmr.max_triples),
                per_grid_keep: self.pmr.per_grid_keep,
            },
            node_limit: limit(self.pmr.node_limit),
            // wall-clock limits would make reports depend on machine load
            time_limit: None,
            warm_starts: Vec::new(),
        }
    }
}

fn limit(n: u64) -> Option<u64> {
    (n > 0).then_some(n)
}

/// Inputs shared by every command.
pub struct Prepared {
    pub config: RunConfig,
    pub scenario: Scenario,
    pub sa: GridSet,
    /// Raw per-service-point weights, when a weights file is given.
    pub weights: Option<Vec<f64>>,
    pub gamma_db: f64,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    let scenario = match &config.scenario {
        Some(p) => load_scenario(p)?,
        None => Scenario::reference(),
    };
    let sa = generate_service_grid(&scenario);
    if sa.is_empty() {
        return Err(PlanError::NothingToPlace(
            "the service grid is empty".into(),
        ));
    }
    let weights = match &config.weights {
        Some(p) => Some(read_weights(p, sa.len())?),
        None => None,
    };
    Ok(Prepared {
        gamma_db: config.gamma(),
        config: config.clone(),
        scenario,
        sa,
        weights,
    })
}

impl Prepared {
    /// Visibility context over the service grid; surface samples only when diffuse sets are needed.
    pub fn context(&self, diffuse: bool) -> Result<VisibilityContext<'_>> {
        if !diffuse {
            return Ok(VisibilityContext::specular_only(&self.scenario, &self.sa));
        }
        let surface = if self.scenario.buildings.is_empty() {
            GridSet::empty(GridRole::BuildingSurface, self.config.surface_spacing_m)
        } else {
            generate_building_surface_grid(&self.scenario, self.config.surface_spacing_m)?
        };
        Ok(VisibilityContext::new(&self.scenario, &self.sa, surface))
    }

    fn gain_params(&self) -> GainParams {
        let lb = &self.config.link_budget;
        GainParams {
            facet_m: self.config.pmr.facet_m,
            wavelength_m: self.config.channel.wavelength_m(),
            zeta: self.config.pmr.zeta,
            g_gnb: db_to_lin(lb.g_gnb_dbi),
            g_ue: db_to_lin(lb.g_ue_dbi),
            summation: self.config.pmr.summation,
        }
    }

    fn covered_weight(&self, covered: &FixedBitSet) -> f64 {
        match &self.weights {
            None => covered.count_ones(..) as f64 / self.sa.len() as f64,
            Some(w) => covered.ones().map(|j| w[j]).sum::<f64>() / w.iter().sum::<f64>(),
        }
    }
}

pub struct GnbStage {
    pub candidates: GridSet,
    pub path_loss: PathLossMatrix,
    pub placement: GnbPlacement,
    pub outage_idx: Vec<usize>,
    pub outage: GridSet,
}

impl GnbStage {
    pub fn gnb_points(&self) -> Vec<Point3> {
        self.placement
            .chosen
            .iter()
            .map(|&i| self.candidates.points[i])
            .collect()
    }

    /// Best path loss over the chosen gNBs per service point; `None` in outage.
    pub fn best_path_loss(&self) -> Vec<Option<f64>> {
        (0..self.path_loss.m())
            .map(|j| {
                let best = self
                    .placement
                    .chosen
                    .iter()
                    .map(|&i| self.path_loss.pl[i][j])
                    .fold(f64::INFINITY, f64::min);
                best.is_finite().then_some(best)
            })
            .collect()
    }
}

pub fn run_gnb(prep: &Prepared, ctx: &VisibilityContext) -> Result<GnbStage> {
    let cfg = &prep.config;
    let candidates = generate_gnb_candidates(&prep.scenario)?;
    log::info!(
        "classifying {} gNB candidates against {} service points",
        candidates.len(),
        prep.sa.len()
    );
    let vis = ctx.classify_all(&candidates.points);
    let path_loss = build_path_loss(&candidates, &prep.sa, &vis, &cfg.channel, cfg.mode)?;
    drop(vis);
    let cm = CoverageMatrix::from_path_loss(&path_loss, prep.gamma_db, prep.weights.as_deref())?;
    let placement = plan_gnb(&cm, cfg.n_gnb, &cfg.gnb_options())?;
    let outage_idx = placement.outage_indices();
    let outage = outage_set(&placement, &prep.sa);
    log::info!(
        "gNB placement {:?}: coverage {:.4}, {} outage points",
        placement.chosen,
        placement.coverage,
        outage.len()
    );
    Ok(GnbStage {
        candidates,
        path_loss,
        placement,
        outage_idx,
        outage,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmrSweepEntry {
    pub plate_m: f64,
    pub n_pmr: usize,
    pub coverage: f64,
    pub covered: usize,
    pub outage: usize,
    pub status: BilpStatus,
}

/// One plate size: tensor statistics and the placement at every N^PMR.
pub struct PmrSizeRun {
    pub plate_m: f64,
    pub triples: usize,
    pub entries: usize,
    pub near_field: usize,
    pub skipped: usize,
    /// Index n holds the best placement with n reflectors.
    pub placements: Vec<PmrPlacement>,
    pub positions: Vec<Point3>,
    pub tensor_csv: Option<Vec<u8>>,
}

impl PmrSizeRun {
    /// Smallest N^PMR covering every outage point, if any.
    pub fn full_coverage_at(&self, n_outage: usize) -> Option<usize> {
        self.placements
            .iter()
            .position(|p| p.covered_count() == n_outage)
    }
}

pub struct PmrStage {
    pub candidates: GridSet,
    pub gamma_lin: f64,
    pub n_outage: usize,
    pub runs: Vec<PmrSizeRun>,
}

impl PmrStage {
    pub fn sweep_rows(&self) -> Vec<PmrSweepEntry> {
        self.runs
            .iter()
            .flat_map(|r| {
                r.placements
                    .iter()
                    .enumerate()
                    .map(move |(n, p)| PmrSweepEntry {
                        plate_m: r.plate_m,
                        n_pmr: n,
                        coverage: p.coverage,
                        covered: p.covered_count(),
                        outage: self.n_outage,
                        status: p.stats.status,
                    })
            })
            .collect()
    }

    pub fn run_for(&self, plate_m: f64) -> Option<&PmrSizeRun> {
        self.runs.iter().find(|r| r.plate_m == plate_m)
    }
}

/// Builds one gain tensor per plate size and sweeps N^PMR on each. Each size's
/// solves are seeded with the next smaller size's selections (same mounts and aims).
pub fn run_pmr(prep: &Prepared, gnb: &GnbStage, occ: &OcclusionIndex) -> Result<PmrStage> {
    let cfg = &prep.config;
    let lb = &cfg.link_budget;
    let gamma_lin = gamma_linear(prep.gamma_db, lb.g_gnb_dbi, lb.g_ue_dbi);
    let max_n = cfg.pmr.max_n_pmr.max(cfg.pmr.n_pmr);
    let n_outage = gnb.outage.len();
    let sizes = cfg.plate_sizes();
    let candidates = if n_outage == 0 || prep.scenario.buildings.is_empty() {
        GridSet::empty(GridRole::PmrCandidate, cfg.surface_spacing_m)
    } else {
        let surface = generate_building_surface_grid(&prep.scenario, cfg.surface_spacing_m)?;
        let mut vg = FixedBitSet::with_capacity(surface.len());
        for g in gnb.gnb_points() {
            vg.union_with(&surface_visibility(g, &surface, occ));
        }
        let vo = gnb
            .outage
            .points
            .par_iter()
            .map(|&p| surface_visibility(p, &surface, occ))
            .reduce(
                || FixedBitSet::with_capacity(surface.len()),
                |mut a, b| {
                    a.union_with(&b);
                    a
                },
            );
        pmr_candidates(&vg, &vo, &surface, prep.scenario.pmr_height_band)
    };
    log::info!(
        "{} reflector mounts for {n_outage} outage points",
        candidates.len()
    );

    let weights: Option<Vec<f64>> = prep
        .weights
        .as_ref()
        .map(|w| gnb.outage_idx.iter().map(|&j| w[j]).collect());
    let params = prep.gain_params();
    let opts = cfg.pmr_options();
    let mut runs: Vec<PmrSizeRun> = Vec::with_capacity(sizes.len());
    for &plate_m in &sizes {
        if candidates.is_empty() {
            // nothing can be placed; coverage of an empty outage set counts as complete
            let cov = if n_outage == 0 { 1.0 } else { 0.0 };
            runs.push(PmrSizeRun {
                plate_m,
                triples: 0,
                entries: 0,
                near_field: 0,
                skipped: 0,
                placements: (0..=max_n).map(|_| idle_placement(n_outage, cov)).collect(),
                positions: Vec::new(),
                tensor_csv: None,
            });
            continue;
        }
        let topts = TensorOptions {
            plate_m,
            orientation_stride: cfg.pmr.orientation_stride,
            floor: cfg.pmr.gain_floor * gamma_lin,
            standoff: cfg.pmr.standoff,
        };
        let tensor = build_gain_tensor(
            &gnb.gnb_points(),
            &candidates,
            &gnb.outage,
            &params,
            occ,
            &topts,
        )?;
        log::info!(
            "plate {plate_m} m: {} triples, {} gain entries",
            tensor.triples.len(),
            tensor.entry_count()
        );
        let positions: Vec<Point3> = (0..candidates.len())
            .map(|k| plate_center(&candidates, k, plate_m, cfg.pmr.standoff))
            .collect();
        let seeds: Vec<Vec<(usize, usize, usize)>> = runs
            .last()
            .map(|r| r.placements.iter().map(|p| p.selected_keys()).collect())
            .unwrap_or_default();
        let placements = if tensor.triples.is_empty() {
            (0..=max_n).map(|_| idle_placement(n_outage, 0.0)).collect()
        } else {
            let spec = PmrProblemSpec {
                tensor: &tensor,
                n_pmr: 0,
                gamma_lin,
                weights: weights.as_deref(),
                big_m: cfg.pmr.big_m,
                strict_c4: cfg.pmr.strict_c4,
            };
            sweep_pmr(&spec, &positions, max_n, &opts, &seeds)?
                .into_iter()
                .map(|(_, p)| p)
                .collect()
        };
        let tensor_csv = if cfg.pmr.write_tensor && plate_m == cfg.pmr.plate_m {
            let mut buf = Vec::new();
            tensor
                .write_csv(&mut buf)
                .map_err(|e| PlanError::io("gains.csv", e))?;
            Some(buf)
        } else {
            None
        };
        runs.push(PmrSizeRun {
            plate_m,
            triples: tensor.triples.len(),
            entries: tensor.entry_count(),
            near_field: tensor.near_field,
            skipped: tensor.skipped,
            placements,
            positions,
            tensor_csv,
        });
    }
    Ok(PmrStage {
        candidates,
        gamma_lin,
        n_outage,
        runs,
    })
}

fn idle_placement(n_outage: usize, coverage: f64) -> PmrPlacement {
    PmrPlacement {
        triples: Vec::new(),
        selected: Vec::new(),
        xi: vec![0.0; n_outage],
        beta: vec![false; n_outage],
        coverage,
        stats: PmrSolveStats {
            triples_total: 0,
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

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRow {
    pub gamma_db: f64,
    pub direct: f64,
    pub specular: f64,
    pub diffuse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSweep {
    pub rows: Vec<GammaRow>,
    /// Knee of the direct-only curve.
    pub knee_db: Option<f64>,
}

/// Smallest γ whose coverage reaches `fraction` of the last (largest-γ) coverage.
pub fn knee(gammas: &[f64], coverage: &[f64], fraction: f64) -> Option<f64> {
    let top = *coverage.last()?;
    if top <= 0.0 {
        return None;
    }
    gammas
        .iter()
        .zip(coverage)
        .find(|(_, &c)| c >= fraction * top)
        .map(|(&g, _)| g)
}

/// gNB coverage versus γ for the three visibility modes.
pub fn gamma_sweep(prep: &Prepared, ctx: &VisibilityContext) -> Result<GammaSweep> {
    let cfg = &prep.config;
    if ctx.surface.is_none() {
        return Err(PlanError::Contract(
            "the gamma sweep needs diffuse visibility".into(),
        ));
    }
    let candidates = generate_gnb_candidates(&prep.scenario)?;
    let vis = ctx.classify_all(&candidates.points);
    let modes = [
        IndirectMode::Direct,
        IndirectMode::Specular,
        IndirectMode::Diffuse,
    ];
    let pls = modes
        .iter()
        .map(|&m| build_path_loss(&candidates, &prep.sa, &vis, &cfg.channel, m))
        .collect::<Result<Vec<_>>>()?;
    drop(vis);
    let gammas = cfg.sweep.gammas();
    let opts = cfg.gnb_options();
    let mut rows = Vec::with_capacity(gammas.len());
    for &g in &gammas {
        let mut cov = [0.0; 3];
        for (c, pl) in cov.iter_mut().zip(&pls) {
            let cm = CoverageMatrix::from_path_loss(pl, g, prep.weights.as_deref())?;
            *c = plan_gnb(&cm, cfg.n_gnb, &opts)?.coverage;
        }
        log::info!("gamma {g} dB: {cov:?}");
        rows.push(GammaRow {
            gamma_db: g,
            direct: cov[0],
            specular: cov[1],
            diffuse: cov[2],
        });
    }
    let direct: Vec<f64> = rows.iter().map(|r| r.direct).collect();
    Ok(GammaSweep {
        knee_db: knee(&gammas, &direct, cfg.sweep.knee_fraction),
        rows,
    })
}

/// What every report records about the run.
#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub config: RunConfig,
    pub scenario: String,
    pub gamma_db: f64,
    pub mapl: MaplCheck,
    pub service_points: usize,
    pub raster: [usize; 2],
}

impl RunInfo {
    fn new(prep: &Prepared) -> Self {
        let layout = prep.sa.layout.expect("service grid has a layout");
        RunInfo {
            config: prep.config.clone(),
            scenario: prep.scenario.name.clone(),
            gamma_db: prep.gamma_db,
            mapl: mapl_check(&prep.config.link_budget),
            service_points: prep.sa.len(),
            raster: [layout.nx, layout.ny],
        }
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out).map_err(|e| PlanError::io(cfg.out.display().to_string(), e))?;
    Ok(&cfg.out)
}

fn raster(prep: &Prepared, path: &Path, values: &[u8]) -> Result<()> {
    let layout = prep.sa.layout.expect("service grid has a layout");
    write_pgm(path, &layout, &prep.sa.cells, values)
}

#[derive(Serialize)]
struct VisibilityRow {
    index: usize,
    x: f64,
    y: f64,
    class: &'static str,
}

#[derive(Serialize)]
struct VisibilityReport {
    kind: &'static str,
    run: RunInfo,
    source: Point3,
    candidate: Option<usize>,
    direct: usize,
    indirect: usize,
    blocked: usize,
}

/// Classifies the service grid from one source and writes `visibility.csv`,
/// `visibility.pgm` (255 direct, 128 indirect, 0 blocked) and `report.json`.
pub fn cmd_visibility(config: &RunConfig) -> Result<()> {
    let prep = prepare(config)?;
    let (source, candidate) = match (config.visibility.source, config.visibility.candidate) {
        (Some([x, y, z]), None) => (Point3::new(x, y, z), None),
        (None, Some(i)) => {
            let c = generate_gnb_candidates(&prep.scenario)?;
            let p = *c.points.get(i).ok_or_else(|| {
                PlanError::Config(format!(
                    "candidate {i} out of range ({} candidates)",
                    c.len()
                ))
            })?;
            (p, Some(i))
        }
        _ => {
            return Err(PlanError::Config(
                "give exactly one of a source point or a candidate index".into(),
            ))
        }
    };
    if !source.is_finite() {
        return Err(PlanError::Config("source point must be finite".into()));
    }
    let ctx = prep.context(config.mode == IndirectMode::Diffuse)?;
    let classes = classify_points(&ctx.classify(source), config.mode);
    let dir = out_dir(config)?;
    let rows: Vec<VisibilityRow> = classes
        .iter()
        .enumerate()
        .map(|(j, c)| VisibilityRow {
            index: j,
            x: prep.sa.points[j].x,
            y: prep.sa.points[j].y,
            class: c.label(),
        })
        .collect();
    write_csv(&dir.join("visibility.csv"), &rows)?;
    let gray: Vec<u8> = classes.iter().map(|c| c.gray()).collect();
    raster(&prep, &dir.join("visibility.pgm"), &gray)?;
    let count = |k: PointClass| classes.iter().filter(|&&c| c == k).count();
    write_json(
        &dir.join("report.json"),
        &VisibilityReport {
            kind: "visibility",
            run: RunInfo::new(&prep),
            source,
            candidate,
            direct: count(PointClass::Direct),
            indirect: count(PointClass::Indirect),
            blocked: count(PointClass::Blocked),
        },
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct GnbSummary {
    pub chosen: Vec<usize>,
    pub positions: Vec<Point3>,
    pub coverage: f64,
    pub covered: usize,
    pub outage: usize,
    pub breakpoint_exceeded: usize,
    pub stats: GnbSolveStats,
}

impl GnbSummary {
    fn new(g: &GnbStage) -> Self {
        GnbSummary {
            chosen: g.placement.chosen.clone(),
            positions: g.gnb_points(),
            coverage: g.placement.coverage,
            covered: g.placement.covered_count(),
            outage: g.outage.len(),
            breakpoint_exceeded: g.path_loss.breakpoint_exceeded,
            stats: g.placement.stats.clone(),
        }
    }
}

#[derive(Serialize)]
struct GnbCoverageRow {
    index: usize,
    x: f64,
    y: f64,
    covered: u8,
    path_loss_db: Option<f64>,
}

#[derive(Serialize)]
struct GnbReport {
    kind: &'static str,
    run: RunInfo,
    gnb: GnbSummary,
}

/// Places gNBs and writes `report.json`, `coverage.csv` and `coverage.pgm` (255 covered, 0 outage).
pub fn cmd_plan_gnb(config: &RunConfig) -> Result<()> {
    let prep = prepare(config)?;
    let ctx = prep.context(config.mode == IndirectMode::Diffuse)?;
    let gnb = run_gnb(&prep, &ctx)?;
    let dir = out_dir(config)?;
    let best = gnb.best_path_loss();
    let rows: Vec<GnbCoverageRow> = (0..prep.sa.len())
        .map(|j| GnbCoverageRow {
            index: j,
            x: prep.sa.points[j].x,
            y: prep.sa.points[j].y,
            covered: gnb.placement.covered.contains(j) as u8,
            path_loss_db: best[j],
        })
        .collect();
    write_csv(&dir.join("coverage.csv"), &rows)?;
    let gray: Vec<u8> = (0..prep.sa.len())
        .map(|j| {
            if gnb.placement.covered.contains(j) {
                GRAY_COVERED
            } else {
                GRAY_OUTAGE
            }
        })
        .collect();
    raster(&prep, &dir.join("coverage.pgm"), &gray)?;
    write_json(
        &dir.join("report.json"),
        &GnbReport {
            kind: "plan-gnb",
            run: RunInfo::new(&prep),
            gnb: GnbSummary::new(&gnb),
        },
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct PmrSizeSummary {
    pub plate_m: f64,
    pub triples: usize,
    pub gain_entries: usize,
    pub near_field: usize,
    pub skipped: usize,
    pub full_coverage_at: Option<usize>,
    pub mismatches: usize,
    pub threshold_ties: usize,
    pub heuristic_cut: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PmrChosen {
    pub plate_m: f64,
    pub n_pmr: usize,
    /// Weighted fraction of the outage set covered by reflectors.
    pub coverage: f64,
    pub covered: usize,
    /// Weighted fraction of the whole service area covered by gNBs or reflectors.
    pub total_coverage: f64,
    pub reflectors: Vec<SelectedPmr>,
    pub stats: PmrSolveStats,
}

#[derive(Serialize)]
struct PmrReport {
    kind: &'static str,
    run: RunInfo,
    gnb: GnbSummary,
    summation: Summation,
    gamma_lin: f64,
    mounts: usize,
    sizes: Vec<PmrSizeSummary>,
    chosen: PmrChosen,
}

#[derive(Serialize)]
struct PmrCoverageRow {
    index: usize,
    x: f64,
    y: f64,
    gnb_covered: u8,
    pmr_covered: u8,
    /// 10·log10(ξ / γ) at outage points with any reflected power.
    xi_rel_db: Option<f64>,
}

/// Places gNBs, then reflectors for the outage set. Writes `report.json`,
/// `sweep.csv` (coverage per plate size and N^PMR), `coverage.csv` and
/// `coverage.pgm` (255 gNB, 128 reflector, 0 outage) for the configured size and count.
pub fn cmd_plan_pmr(config: &RunConfig) -> Result<()> {
    let prep = prepare(config)?;
    let ctx = prep.context(config.mode == IndirectMode::Diffuse)?;
    let gnb = run_gnb(&prep, &ctx)?;
    let pmr = run_pmr(&prep, &gnb, &ctx.occ)?;
    drop(ctx);
    let dir = out_dir(config)?;

    let run = pmr
        .run_for(config.pmr.plate_m)
        .expect("reported plate size is swept");
    let chosen = &run.placements[config.pmr.n_pmr];
    let mut covered = gnb.placement.covered.clone();
    let mut pmr_cov = vec![false; prep.sa.len()];
    let mut xi_rel = vec![None; prep.sa.len()];
    for (o, &j) in gnb.outage_idx.iter().enumerate() {
        if chosen.beta[o] {
            covered.insert(j);
            pmr_cov[j] = true;
        }
        if chosen.xi[o] > 0.0 {
            xi_rel[j] = Some(lin_to_db(chosen.xi[o] / pmr.gamma_lin));
        }
    }
    let rows: Vec<PmrCoverageRow> = (0..prep.sa.len())
        .map(|j| PmrCoverageRow {
            index: j,
            x: prep.sa.points[j].x,
            y: prep.sa.points[j].y,
            gnb_covered: gnb.placement.covered.contains(j) as u8,
            pmr_covered: pmr_cov[j] as u8,
            xi_rel_db: xi_rel[j],
        })
        .collect();
    write_csv(&dir.join("coverage.csv"), &rows)?;
    write_csv(&dir.join("sweep.csv"), &pmr.sweep_rows())?;
    let gray: Vec<u8> = (0..prep.sa.len())
        .map(|j| {
            if gnb.placement.covered.contains(j) {
                GRAY_COVERED
            } else if pmr_cov[j] {
                GRAY_INDIRECT
            } else {
                GRAY_OUTAGE
            }
        })
        .collect();
    raster(&prep, &dir.join("coverage.pgm"), &gray)?;
    if let Some(buf) = &run.tensor_csv {
        let path = dir.join("gains.csv");
        fs::write(&path, buf).map_err(|e| PlanError::io(path.display().to_string(), e))?;
    }
    let sizes = pmr
        .runs
        .iter()
        .map(|r| PmrSizeSummary {
            plate_m: r.plate_m,
            triples: r.triples,
            gain_entries: r.entries,
            near_field: r.near_field,
            skipped: r.skipped,
            full_coverage_at: r.full_coverage_at(pmr.n_outage),
            mismatches: r.placements.iter().map(|p| p.stats.mismatches).sum(),
            threshold_ties: r.placements.iter().map(|p| p.stats.threshold_ties).sum(),
            heuristic_cut: r.placements.iter().any(|p| p.stats.heuristic_cut),
        })
        .collect();
    let report = PmrReport {
        kind: "plan-pmr",
        gnb: GnbSummary::new(&gnb),
        summation: config.pmr.summation,
        gamma_lin: pmr.gamma_lin,
        mounts: pmr.candidates.len(),
        sizes,
        chosen: PmrChosen {
            plate_m: run.plate_m,
            n_pmr: config.pmr.n_pmr,
            coverage: chosen.coverage,
            covered: chosen.covered_count(),
            total_coverage: prep.covered_weight(&covered),
            reflectors: chosen.selected.clone(),
            stats: chosen.stats.clone(),
        },
        run: RunInfo::new(&prep),
    };
    write_json(&dir.join("report.json"), &report)
}

#[derive(Serialize)]
struct SweepReport {
    kind: &'static str,
    run: RunInfo,
    knee_db: Option<f64>,
    knee_fraction: f64,
    monotone: [bool; 3],
    ordered: bool,
}

/// gNB coverage versus γ in all three modes: `sweep.csv` and `report.json` with the knee.
pub fn cmd_sweep(config: &RunConfig) -> Result<()> {
    let prep = prepare(config)?;
    let ctx = prep.context(true)?;
    let sweep = gamma_sweep(&prep, &ctx)?;
    drop(ctx);
    let dir = out_dir(config)?;
    write_csv(&dir.join("sweep.csv"), &sweep.rows)?;
    let mono = |f: fn(&GammaRow) -> f64| sweep.rows.windows(2).all(|w| f(&w[1]) >= f(&w[0]));
    write_json(
        &dir.join("report.json"),
        &SweepReport {
            kind: "sweep",
            run: RunInfo::new(&prep),
            knee_db: sweep.knee_db,
            knee_fraction: config.sweep.knee_fraction,
            monotone: [
                mono(|r| r.direct),
                mono(|r| r.specular),
                mono(|r| r.diffuse),
            ],
            ordered: sweep
                .rows
                .iter()
                .all(|r| r.diffuse >= r.specular && r.specular >= r.direct),
        },
    )
}
