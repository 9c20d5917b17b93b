//! Plane, path and finite-size convergence scans.
//!
//! A plane scan evaluates the requested quantities on an inclusive linear grid
//! of the complex driving parameter. Rows (fixed imaginary part) are the unit
//! of work; they are computed independently and assembled in row order, so a
//! scan is bit-identical for any thread count.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::fidelity::{FidelityFlags, FidelityKernel};
use crate::linalg2::{eig2x2, Strictness};
use crate::models::{ModelSpec, MomentumGrid};
use crate::par::{map_ordered, Execution};
use crate::spectrum::{gap_crossings, EminOptions, GapSampler};
use crate::zeros::{boundary_estimate, BoundaryEstimate};

/// Default cap on `n_re · n_im`.
pub const DEFAULT_CAP: usize = 4_000_000;

/// Rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Window {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    pub fn square(half: f64) -> Self {
        Window::new(-half, half, -half, half)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.re_min..=self.re_max).contains(&z.re) && (self.im_min..=self.im_max).contains(&z.im)
    }
}

/// `j`-th of `n` inclusive nodes on `[lo, hi]`. Written so that a window
/// symmetric about zero gives exactly negated mirror nodes.
pub fn node(lo: f64, hi: f64, n: usize, j: usize) -> f64 {
    if n == 1 {
        return lo;
    }
    let m = (n - 1) as f64;
    (lo * (n - 1 - j) as f64 + hi * j as f64) / m
}

/// Which fields a plane scan evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quantities {
    pub f_min: bool,
    pub e_min: bool,
    pub total_fidelity: bool,
}

impl Default for Quantities {
    fn default() -> Self {
        Quantities {
            f_min: true,
            e_min: false,
            total_fidelity: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub model: ModelSpec,
    /// System size `L`.
    pub size: usize,
    pub window: Window,
    pub n_re: usize,
    pub n_im: usize,
    pub delta_gamma: Complex64,
    pub quantities: Quantities,
    pub e_min: EminOptions,
    pub mode: Strictness,
    /// Thread count hint; does not affect results.
    pub threads: Option<usize>,
    pub cap: usize,
}

impl ScanConfig {
    /// Defaults: 301×301 nodes, δγ = 0.01(1+i), f_min only, lenient.
    pub fn new(model: ModelSpec, size: usize, window: Window) -> Self {
        ScanConfig {
            model,
            size,
            window,
            n_re: 301,
            n_im: 301,
            delta_gamma: Complex64::new(0.01, 0.01),
            quantities: Quantities::default(),
            e_min: EminOptions::default_for(model.kind()),
            mode: Strictness::Lenient,
            threads: None,
            cap: DEFAULT_CAP,
        }
    }

    pub fn with_resolution(mut self, n_re: usize, n_im: usize) -> Self {
        self.n_re = n_re;
        self.n_im = n_im;
        self
    }

    pub fn with_delta(mut self, delta: Complex64) -> Self {
        self.delta_gamma = delta;
        self
    }

    pub fn with_quantities(mut self, quantities: Quantities) -> Self {
        self.quantities = quantities;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let w = &self.window;
        if ![w.re_min, w.re_max, w.im_min, w.im_max].iter().all(|v| v.is_finite()) {
            return Err(invalid("window", "bounds must be finite"));
        }
        if !(w.re_min < w.re_max && w.im_min < w.im_max) {
            return Err(invalid("window", "expected re_min < re_max and im_min < im_max"));
        }
        if self.n_re < 2 || self.n_im < 2 {
            return Err(invalid("res", "need at least 2 nodes per axis"));
        }
        let nodes = self.n_re.saturating_mul(self.n_im);
        if nodes > self.cap {
            return Err(Error::ResolutionCap { nodes, cap: self.cap });
        }
        if self.delta_gamma == Complex64::new(0.0, 0.0) || !self.delta_gamma.is_finite() {
            return Err(invalid("dgamma", "displacement must be finite and nonzero"));
        }
        let q = &self.quantities;
        if !(q.f_min || q.e_min || q.total_fidelity) {
            return Err(invalid("quantities", "select at least one quantity"));
        }
        crate::models::momentum_grid(&self.model, self.size)?;
        Ok(())
    }

    pub fn re_node(&self, j: usize) -> f64 {
        node(self.window.re_min, self.window.re_max, self.n_re, j)
    }

    pub fn im_node(&self, i: usize) -> f64 {
        node(self.window.im_min, self.window.im_max, self.n_im, i)
    }

    pub fn gamma(&self, row: usize, col: usize) -> Complex64 {
        Complex64::new(self.re_node(col), self.im_node(row))
    }

    pub fn re_step(&self) -> f64 {
        (self.window.re_max - self.window.re_min) / (self.n_re - 1) as f64
    }

    pub fn im_step(&self) -> f64 {
        (self.window.im_max - self.window.im_min) / (self.n_im - 1) as f64
    }

    /// SHA-256 of the result-determining fields (thread hint excluded).
    pub fn digest(&self) -> String {
        let mut canonical = *self;
        canonical.threads = None;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex_digest(&json)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// One computed row of a plane scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub f_min: Vec<f64>,
    pub argmin: Vec<u32>,
    pub e_min: Vec<f64>,
    pub total_fidelity: Vec<f64>,
    pub flags: Vec<u8>,
}

/// Row-major grids (row `i` ↔ `Im γ = im_node(i)`, column `j` ↔ `Re γ = re_node(j)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub config: ScanConfig,
    pub f_min: Option<Vec<f64>>,
    /// Grid index of the smallest mode factor (with `f_min`).
    pub argmin: Option<Vec<u32>>,
    pub e_min: Option<Vec<f64>>,
    pub total_fidelity: Option<Vec<f64>>,
    /// [`FidelityFlags::bits`] per cell.
    pub flags: Vec<u8>,
    /// Row completeness mask; partial scans have unfinished rows zero-filled.
    pub complete_rows: Vec<bool>,
    pub wall_time_s: f64,
}

impl ScanResult {
    pub fn is_complete(&self) -> bool {
        self.complete_rows.iter().all(|&c| c)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.config.n_re + col
    }

    /// Union of all cell flags.
    pub fn flag_summary(&self) -> FidelityFlags {
        let bits = self.flags.iter().fold(0u8, |a, b| a | b);
        FidelityFlags {
            real_part_tie: bits & 1 != 0,
            exceptional_point: bits & 2 != 0,
            lenient: bits & 4 != 0,
        }
    }
}

struct RowContext {
    config: ScanConfig,
    kernel: FidelityKernel,
    sampler: Option<GapSampler>,
}

impl RowContext {
    fn new(config: &ScanConfig) -> Result<Self> {
        config.validate()?;
        let kernel = FidelityKernel::new(config.model, config.size, config.mode)?;
        let sampler = if config.quantities.e_min {
            Some(GapSampler::new(config.model, config.e_min.resolution)?)
        } else {
            None
        };
        Ok(RowContext {
            config: *config,
            kernel,
            sampler,
        })
    }

    fn row(&self, i: usize) -> Result<ScanRow> {
        let cfg = &self.config;
        let q = cfg.quantities;
        let n = cfg.n_re;
        let mut row = ScanRow {
            f_min: Vec::with_capacity(if q.f_min { n } else { 0 }),
            argmin: Vec::with_capacity(if q.f_min { n } else { 0 }),
            e_min: Vec::with_capacity(if q.e_min { n } else { 0 }),
            total_fidelity: Vec::with_capacity(if q.total_fidelity { n } else { 0 }),
            flags: Vec::with_capacity(n),
        };
        let half = cfg.delta_gamma / 2.0;
        for j in 0..n {
            let gamma = cfg.gamma(i, j);
            let mut flags = FidelityFlags::default();
            if q.f_min {
                let r = self.kernel.f_min(gamma, cfg.delta_gamma)?;
                row.f_min.push(r.value);
                row.argmin.push(r.argmin.map_or(0, |(k, _)| k as u32));
                flags = flags.merge(r.flags);
            }
            if q.total_fidelity {
                let r = self.kernel.total(gamma + half, gamma - half)?;
                row.total_fidelity.push(r.value);
                flags = flags.merge(r.flags);
            }
            if let Some(sampler) = &self.sampler {
                row.e_min.push(sampler.e_min(gamma, cfg.e_min.refine).value);
            }
            row.flags.push(flags.bits());
        }
        Ok(row)
    }
}

fn assemble(config: &ScanConfig, rows: Vec<Option<ScanRow>>, wall_time_s: f64) -> ScanResult {
    let q = config.quantities;
    let n = config.n_re;
    let cells = n * config.n_im;
    let mut f_min = q.f_min.then(|| Vec::with_capacity(cells));
    let mut argmin = q.f_min.then(|| Vec::with_capacity(cells));
    let mut e_min = q.e_min.then(|| Vec::with_capacity(cells));
    let mut total = q.total_fidelity.then(|| Vec::with_capacity(cells));
    let mut flags = Vec::with_capacity(cells);
    let mut complete_rows = Vec::with_capacity(config.n_im);
    for row in rows {
        complete_rows.push(row.is_some());
        match row {
            Some(r) => {
                f_min.as_mut().map(|v| v.extend(&r.f_min));
                argmin.as_mut().map(|v| v.extend(&r.argmin));
                e_min.as_mut().map(|v| v.extend(&r.e_min));
                total.as_mut().map(|v| v.extend(&r.total_fidelity));
                flags.extend(&r.flags);
            }
            None => {
                f_min.as_mut().map(|v| v.extend(std::iter::repeat(0.0).take(n)));
                argmin.as_mut().map(|v| v.extend(std::iter::repeat(0).take(n)));
                e_min.as_mut().map(|v| v.extend(std::iter::repeat(0.0).take(n)));
                total.as_mut().map(|v| v.extend(std::iter::repeat(0.0).take(n)));
                flags.extend(std::iter::repeat(0).take(n));
            }
        }
    }
    ScanResult {
        config: *config,
        f_min,
        argmin,
        e_min,
        total_fidelity: total,
        flags,
        complete_rows,
        wall_time_s,
    }
}

/// Evaluates the configured quantities on every grid node.
pub fn run_plane_scan(config: &ScanConfig) -> Result<ScanResult> {
    run_plane_scan_with(config, Execution::from_threads(config.threads))
}

/// [`run_plane_scan`] with an explicit execution strategy.
pub fn run_plane_scan_with(config: &ScanConfig, exec: Execution) -> Result<ScanResult> {
    let start = Instant::now();
    let ctx = RowContext::new(config)?;
    let rows = map_ordered(config.n_im, exec, |i| ctx.row(i));
    let rows = rows.into_iter().map(|r| r.map(Some)).collect::<Result<Vec<_>>>()?;
    Ok(assemble(config, rows, start.elapsed().as_secs_f64()))
}

/// Sidecar file holding the finished rows of an interrupted scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    v: u32,
    config_digest: String,
    rows: BTreeMap<usize, ScanRow>,
}

/// Path of the checkpoint sidecar for `config` inside `dir`.
pub fn checkpoint_path(dir: &Path, config: &ScanConfig) -> PathBuf {
    dir.join(format!("scan-{}.checkpoint.json", &config.digest()[..16]))
}

/// Chunked scan that persists finished rows to a sidecar checkpoint keyed by
/// the config digest and resumes from it. At most `row_budget` new rows are
/// computed per call (`None`: all); the result's completeness mask tells
/// whether the grid is finished. The checkpoint is removed on completion.
pub fn run_plane_scan_resumable(
    config: &ScanConfig,
    dir: &Path,
    chunk_rows: usize,
    row_budget: Option<usize>,
) -> Result<ScanResult> {
    let start = Instant::now();
    let ctx = RowContext::new(config)?;
    let path = checkpoint_path(dir, config);
    let digest = config.digest();
    let mut checkpoint = fs::read(&path)
        .ok()
        .and_then(|bytes| serde_json::from_slice::<Checkpoint>(&bytes).ok())
        .filter(|c| c.v == 1 && c.config_digest == digest)
        .unwrap_or(Checkpoint {
            v: 1,
            config_digest: digest,
            rows: BTreeMap::new(),
        });

    let pending: Vec<usize> = (0..config.n_im).filter(|i| !checkpoint.rows.contains_key(i)).collect();
    let budget = row_budget.unwrap_or(usize::MAX).min(pending.len());
    let exec = Execution::from_threads(config.threads);
    for chunk in pending[..budget].chunks(chunk_rows.max(1)) {
        let rows = map_ordered(chunk.len(), exec, |t| ctx.row(chunk[t]));
        for (&i, row) in chunk.iter().zip(rows) {
            checkpoint.rows.insert(i, row?);
        }
        let bytes = serde_json::to_vec(&checkpoint).map_err(|e| invalid("checkpoint", e.to_string()))?;
        fs::write(&path, bytes).map_err(|e| invalid("checkpoint", e.to_string()))?;
    }

    let rows: Vec<Option<ScanRow>> = (0..config.n_im).map(|i| checkpoint.rows.remove(&i)).collect();
    let result = assemble(config, rows, start.elapsed().as_secs_f64());
    if result.is_complete() {
        let _ = fs::remove_file(&path);
    }
    Ok(result)
}

/// Horizontal path `Im γ = fixed_im`, `Re γ ∈ re_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub fixed_im: f64,
    pub re_range: (f64, f64),
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub re: f64,
    pub total_fidelity: f64,
    /// `Re E+`, `Re E−` for each grid momentum in grid order.
    pub re_energies: Vec<f64>,
    pub flags: u8,
}

/// A zero crossing of the continued real gap between two path points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCrossing {
    /// Crossing lies between rows `step` and `step + 1`.
    pub step: usize,
    pub mode: usize,
    pub re: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub model: ModelSpec,
    pub size: usize,
    pub grid: MomentumGrid,
    pub delta_gamma: Complex64,
    pub rows: Vec<PathRow>,
    pub crossings: Vec<GapCrossing>,
}

impl PathResult {
    pub fn step(&self) -> f64 {
        if self.rows.len() < 2 {
            0.0
        } else {
            self.rows[1].re - self.rows[0].re
        }
    }
}

/// Total fidelity and per-mode `Re E±` along a horizontal path.
pub fn run_path_scan(
    model: &ModelSpec,
    size: usize,
    path: &PathSpec,
    delta_gamma: Complex64,
    mode: Strictness,
) -> Result<PathResult> {
    if path.n_points < 2 {
        return Err(invalid("n_points", "a path needs at least 2 points"));
    }
    let (lo, hi) = path.re_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && path.fixed_im.is_finite()) {
        return Err(invalid("re_range", "expected finite lo < hi"));
    }
    if delta_gamma == Complex64::new(0.0, 0.0) || !delta_gamma.is_finite() {
        return Err(invalid("dgamma", "displacement must be finite and nonzero"));
    }
    let kernel = FidelityKernel::new(*model, size, mode)?;
    let half = delta_gamma / 2.0;
    let point = |j: usize| Complex64::new(node(lo, hi, path.n_points, j), path.fixed_im);

    let rows = (0..path.n_points)
        .map(|j| {
            let gamma = point(j);
            let total = kernel.total(gamma + half, gamma - half)?;
            let re_energies = kernel
                .grid
                .momenta
                .iter()
                .flat_map(|&k| {
                    let sol = eig2x2(&model.d_vector(k, gamma));
                    [sol.e_plus().re, sol.e_minus().re]
                })
                .collect();
            Ok(PathRow {
                re: gamma.re,
                total_fidelity: total.value,
                re_energies,
                flags: total.flags.bits(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut crossings = Vec::new();
    for (m, &k) in kernel.grid.momenta.iter().enumerate() {
        for j in 0..path.n_points - 1 {
            for re in gap_crossings(model, k, path.fixed_im, point(j).re, point(j + 1).re) {
                crossings.push(GapCrossing { step: j, mode: m, re });
            }
        }
    }
    crossings.sort_by(|a, b| a.step.cmp(&b.step).then(a.mode.cmp(&b.mode)));

    Ok(PathResult {
        model: *model,
        size,
        grid: kernel.grid,
        delta_gamma,
        rows,
        crossings,
    })
}

/// Boundary estimates over a list of sizes, plus the continuum bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub model: ModelSpec,
    pub rows: Vec<BoundaryEstimate>,
    pub continuum_bound: f64,
}

pub fn run_convergence_study(model: &ModelSpec, sizes: &[usize]) -> Result<ConvergenceTable> {
    if sizes.is_empty() {
        return Err(invalid("L", "size list is empty"));
    }
    let rows = sizes
        .iter()
        .map(|&l| boundary_estimate(model, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable {
        model: *model,
        rows,
        continuum_bound: model.outer_critical(),
    })
}
