//! Analytic zero lines, numeric zero extraction and boundary estimates.
//!
//! For every discrete momentum the fidelity zeros form a vertical line
//! `Re γ = c(k)` restricted to `|Im γ| ≥ √A(k)` (see [`ModelSpec::zero_locus`]).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fidelity::FidelityKernel;
use crate::linalg2::Strictness;
use crate::models::{momentum_grid, ModelKind, ModelSpec, Momentum};
use crate::par::{map_ordered, Execution};
use crate::scan::{ScanResult, Window};
use crate::spectrum::gap_crossings;

/// Real parts closer than this are the same line.
pub const LINE_MERGE_TOL: f64 = 1e-12;
/// Mode factors below this mark a zero candidate.
pub const DIP_THRESHOLD: f64 = 0.5;
/// Bisected roots of one line agree to far better than this, so distinct
/// lines closer than half a grid step stay separate.
pub const CLUSTER_TOL: f64 = 1e-7;

/// Admissible imaginary parts `{y : |y| ≥ floor}` of a zero line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImRange {
    pub floor: f64,
}

impl ImRange {
    pub fn contains(&self, im: f64) -> bool {
        im.abs() >= self.floor
    }

    /// Whether any `y ∈ [lo, hi]` is admissible.
    pub fn intersects(&self, lo: f64, hi: f64) -> bool {
        lo.abs().max(hi.abs()) >= self.floor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroLine {
    pub kind: ModelKind,
    pub real_part: f64,
    pub im_range: ImRange,
    /// Grid momenta generating this line.
    pub momenta: Vec<Momentum>,
    pub labels: Vec<[i64; 2]>,
}

impl ZeroLine {
    pub fn intersects(&self, window: &Window) -> bool {
        (window.re_min..=window.re_max).contains(&self.real_part)
            && self.im_range.intersects(window.im_min, window.im_max)
    }
}

/// One line per distinct real part over the model's grid of size `L`,
/// ascending. Coincident lines are merged with the union of their ranges.
pub fn analytic_zero_lines(model: &ModelSpec, size: usize) -> Result<Vec<ZeroLine>> {
    model.validate()?;
    let grid = momentum_grid(model, size)?;
    let mut raw: Vec<(f64, f64, Momentum, [i64; 2])> = grid
        .momenta
        .iter()
        .zip(&grid.labels)
        .map(|(&k, &label)| {
            let locus = model.zero_locus(k);
            (locus.real_part, locus.im_floor_sq.max(0.0).sqrt(), k, label)
        })
        .collect();
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut lines: Vec<ZeroLine> = Vec::new();
    for (real_part, floor, k, label) in raw {
        match lines.last_mut() {
            Some(line) if (real_part - line.real_part).abs() <= LINE_MERGE_TOL => {
                line.im_range.floor = line.im_range.floor.min(floor);
                line.momenta.push(k);
                line.labels.push(label);
            }
            _ => lines.push(ZeroLine {
                kind: model.kind(),
                real_part,
                im_range: ImRange { floor },
                momenta: vec![k],
                labels: vec![label],
            }),
        }
    }
    Ok(lines)
}

/// The closed curve `μ(k) = −cos k ± iΔ sin k`, `k ∈ [0, π]`, bounding the
/// Kitaev zero region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KitaevBoundary {
    delta: f64,
}

impl KitaevBoundary {
    pub fn new(delta: f64) -> Result<Self> {
        if delta == 0.0 || !delta.is_finite() {
            return Err(invalid("delta", "pairing amplitude must be finite and nonzero"));
        }
        Ok(KitaevBoundary { delta })
    }

    /// Upper (`+`) and lower (`−`) branch at `k`.
    pub fn at(&self, k: f64) -> [Complex64; 2] {
        let (s, c) = k.sin_cos();
        [Complex64::new(-c, self.delta * s), Complex64::new(-c, -self.delta * s)]
    }

    /// `n ≥ 2` inclusive samples of `k ∈ [0, π]` with both branches.
    pub fn samples(&self, n: usize) -> Vec<(f64, [Complex64; 2])> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let k = PI * i as f64 / (n - 1) as f64;
                (k, self.at(k))
            })
            .collect()
    }
}

pub fn kitaev_region_boundary(delta: f64) -> Result<KitaevBoundary> {
    KitaevBoundary::new(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateSource {
    /// Local row minimum of the scanned `F_min`.
    Dip,
    /// Fidelity between adjacent row nodes.
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub threshold: f64,
    /// Also test the fidelity between neighbouring nodes of each row, so
    /// lines falling between the displaced pairs of the scan are seen.
    pub bridge: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            threshold: DIP_THRESHOLD,
            bridge: true,
        }
    }
}

/// A confirmed zero: the mode's real gap closes at `re + i·im`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroPoint {
    pub re: f64,
    pub im: f64,
    pub mode: usize,
    pub label: [i64; 2],
    pub source: CandidateSource,
}

/// Fidelity dip with no confirmed gap closing in its bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnconfirmedCandidate {
    pub re: f64,
    pub im: f64,
    pub fidelity: f64,
    pub source: CandidateSource,
}

/// Cluster of confirmed points sharing a real coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedLine {
    /// Median real coordinate of the cluster.
    pub real_part: f64,
    /// Max minus min real coordinate in the cluster.
    pub spread: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_points: usize,
    pub labels: Vec<[i64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroExtraction {
    /// Matching tolerance (half the real grid step).
    pub tolerance: f64,
    /// Largest gap between neighbouring roots of one line.
    pub cluster_tolerance: f64,
    pub lines: Vec<DetectedLine>,
    pub points: Vec<ZeroPoint>,
    pub unconfirmed: Vec<UnconfirmedCandidate>,
}

pub fn extract_zeros(scan: &ScanResult) -> Result<ZeroExtraction> {
    extract_zeros_with(scan, &ExtractOptions::default())
}

type RowOutput = (Vec<ZeroPoint>, Vec<UnconfirmedCandidate>);

pub fn extract_zeros_with(scan: &ScanResult, opts: &ExtractOptions) -> Result<ZeroExtraction> {
    let f_min = scan.f_min.as_ref().ok_or(Error::EmptyScan)?;
    let cfg = &scan.config;
    let n = cfg.n_re;
    if f_min.len() != n * cfg.n_im || f_min.is_empty() {
        return Err(Error::EmptyScan);
    }
    let kernel = FidelityKernel::new(cfg.model, cfg.size, Strictness::Lenient)?;
    let half = cfg.delta_gamma / 2.0;
    let reach = (half.re.abs()).max(0.5 * cfg.re_step());
    let clamp = |x: f64| x.clamp(cfg.window.re_min, cfg.window.re_max);

    let row_task = |i: usize| -> Result<RowOutput> {
        let mut points = Vec::new();
        let mut unconfirmed = Vec::new();
        if !scan.complete_rows[i] {
            return Ok((points, unconfirmed));
        }
        let im = cfg.im_node(i);
        let row = &f_min[i * n..(i + 1) * n];
        let mut test = |source, fidelity: f64, lo: f64, hi: f64, ga: Complex64, gb: Complex64| -> Result<()> {
            let before = points.len();
            for (m, f) in kernel.mode_values(ga, gb)?.iter().enumerate() {
                if f.value >= opts.threshold {
                    continue;
                }
                for re in gap_crossings(&cfg.model, kernel.grid.momenta[m], im, lo, hi) {
                    points.push(ZeroPoint {
                        re,
                        im,
                        mode: m,
                        label: kernel.grid.labels[m],
                        source,
                    });
                }
            }
            if points.len() == before {
                unconfirmed.push(UnconfirmedCandidate {
                    re: 0.5 * (lo + hi),
                    im,
                    fidelity,
                    source,
                });
            }
            Ok(())
        };

        for j in 0..n {
            let v = row[j];
            let left = if j > 0 { row[j - 1] } else { f64::INFINITY };
            let right = if j + 1 < n { row[j + 1] } else { f64::INFINITY };
            if v < opts.threshold && v <= left && v <= right {
                let g = cfg.gamma(i, j);
                test(CandidateSource::Dip, v, clamp(g.re - reach), clamp(g.re + reach), g + half, g - half)?;
            }
        }
        if opts.bridge {
            for j in 0..n - 1 {
                let (a, b) = (cfg.gamma(i, j), cfg.gamma(i, j + 1));
                let f = kernel.f_min(0.5 * (a + b), b - a)?;
                if f.value < opts.threshold {
                    test(CandidateSource::Bridge, f.value, a.re, b.re, a, b)?;
                }
            }
        }
        dedup_points(&mut points);
        Ok((points, unconfirmed))
    };

    let rows = map_ordered(cfg.n_im, Execution::from_threads(cfg.threads), row_task);
    let mut points = Vec::new();
    let mut unconfirmed = Vec::new();
    for row in rows {
        let (p, u) = row?;
        points.extend(p);
        unconfirmed.extend(u);
    }
    let tolerance = 0.5 * cfg.re_step();
    let cluster_tolerance = tolerance.min(CLUSTER_TOL);
    let lines = cluster_lines(&points, cluster_tolerance);
    Ok(ZeroExtraction {
        tolerance,
        cluster_tolerance,
        lines,
        points,
        unconfirmed,
    })
}

/// Drops repeated roots of the same mode within one row.
fn dedup_points(points: &mut Vec<ZeroPoint>) {
    points.sort_by(|a, b| a.mode.cmp(&b.mode).then(a.re.total_cmp(&b.re)));
    points.dedup_by(|later, kept| later.mode == kept.mode && (later.re - kept.re).abs() < 1e-9);
    points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.mode.cmp(&b.mode)));
}

fn cluster_lines(points: &[ZeroPoint], tolerance: f64) -> Vec<DetectedLine> {
    let mut sorted: Vec<&ZeroPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut lines = Vec::new();
    let mut start = 0;
    for end in 1..=sorted.len() {
        if end < sorted.len() && sorted[end].re - sorted[end - 1].re <= tolerance {
            continue;
        }
        let group = &sorted[start..end];
        if !group.is_empty() {
            let mut labels: Vec<[i64; 2]> = group.iter().map(|p| p.label).collect();
            labels.sort();
            labels.dedup();
            lines.push(DetectedLine {
                real_part: group[group.len() / 2].re,
                spread: group[group.len() - 1].re - group[0].re,
                im_min: group.iter().map(|p| p.im).fold(f64::INFINITY, f64::min),
                im_max: group.iter().map(|p| p.im).fold(f64::NEG_INFINITY, f64::max),
                n_points: group.len(),
                labels,
            });
        }
        start = end;
    }
    lines
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineMatch {
    pub real_part: f64,
    pub nearest: Option<f64>,
    pub distance: Option<f64>,
    pub matched: bool,
}

/// Two-way matching between analytic lines crossing a window and detected lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub tolerance: f64,
    pub window: Window,
    pub analytic: Vec<LineMatch>,
    pub detected: Vec<LineMatch>,
    /// Largest distance among matched analytic lines.
    pub max_match_distance: Option<f64>,
    pub unmatched_analytic: usize,
    pub unmatched_detected: usize,
}

impl Comparison {
    pub fn agrees(&self) -> bool {
        self.unmatched_analytic == 0 && self.unmatched_detected == 0
    }
}

fn nearest_match(x: f64, targets: &[f64], tolerance: f64) -> LineMatch {
    let nearest = targets.iter().copied().min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()));
    let distance = nearest.map(|t| (t - x).abs());
    LineMatch {
        real_part: x,
        nearest,
        distance,
        matched: distance.is_some_and(|d| d <= tolerance),
    }
}

pub fn compare_lines(analytic: &[ZeroLine], detected: &ZeroExtraction, window: &Window) -> Comparison {
    let tolerance = detected.tolerance;
    let expected: Vec<f64> = analytic
        .iter()
        .filter(|l| l.intersects(window))
        .map(|l| l.real_part)
        .collect();
    let found: Vec<f64> = detected.lines.iter().map(|l| l.real_part).collect();
    let analytic: Vec<LineMatch> = expected.iter().map(|&x| nearest_match(x, &found, tolerance)).collect();
    let detected: Vec<LineMatch> = found.iter().map(|&x| nearest_match(x, &expected, tolerance)).collect();
    let max_match_distance = analytic
        .iter()
        .filter(|m| m.matched)
        .filter_map(|m| m.distance)
        .reduce(f64::max);
    Comparison {
        tolerance,
        window: *window,
        unmatched_analytic: analytic.iter().filter(|m| !m.matched).count(),
        unmatched_detected: detected.iter().filter(|m| !m.matched).count(),
        analytic,
        detected,
        max_match_distance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEstimate {
    pub kind: ModelKind,
    pub size: usize,
    pub max_real: f64,
    pub min_real: f64,
    pub critical_lo: f64,
    pub critical_hi: f64,
    /// `|max_real − critical_hi|`.
    pub gap_to_critical: f64,
}

/// Extremal real parts of the analytic lines at size `L` against the
/// outermost critical values.
pub fn boundary_estimate(model: &ModelSpec, size: usize) -> Result<BoundaryEstimate> {
    let lines = analytic_zero_lines(model, size)?;
    let critical = model.critical_points();
    let (lo, hi) = (critical[0], critical[critical.len() - 1]);
    let min_real = lines.first().map_or(0.0, |l| l.real_part);
    let max_real = lines.last().map_or(0.0, |l| l.real_part);
    Ok(BoundaryEstimate {
        kind: model.kind(),
        size,
        max_real,
        min_real,
        critical_lo: lo,
        critical_hi: hi,
        gap_to_critical: (max_real - hi).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{run_plane_scan, ScanConfig};

    #[test]
    fn kitaev_lines_at_l16() {
        let lines = analytic_zero_lines(&ModelSpec::kitaev(0.6), 16).unwrap();
        assert_eq!(lines.len(), 9);
        for (line, m) in lines.iter().zip(0..=8) {
            // ascending real part ↔ ascending m since −cos is increasing on [0, π]
            let k = 2.0 * PI * m as f64 / 16.0;
            assert!((line.real_part + k.cos()).abs() < 1e-15);
            assert!((line.im_range.floor - 0.6 * k.sin().abs()).abs() < 1e-15);
        }
        let crossing_half: Vec<f64> = lines
            .iter()
            .filter(|l| l.im_range.contains(0.5))
            .map(|l| l.real_part)
            .collect();
        let c8 = (PI / 8.0).cos();
        let c4 = (PI / 4.0).cos();
        let expected = [-1.0, -c8, -c4, c4, c8, 1.0];
        assert_eq!(crossing_half.len(), 6);
        for (a, b) in crossing_half.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn full_zone_kitaev_merges_mirror_modes() {
        let model = ModelSpec::Kitaev {
            delta: 0.6,
            full_zone: true,
        };
        let lines = analytic_zero_lines(&model, 16).unwrap();
        assert_eq!(lines.len(), 9);
        assert_eq!(lines.iter().map(|l| l.momenta.len()).sum::<usize>(), 16);
    }

    #[test]
    fn ssh_lines_mirror_kitaev_real_parts() {
        let lines = analytic_zero_lines(&ModelSpec::ssh(-1.0), 16).unwrap();
        assert_eq!(lines.len(), 9);
        for line in &lines {
            let k = line.momenta[0].kx;
            assert!((line.real_part - k.cos()).abs() < 1e-15);
            assert!((line.im_range.floor - k.sin().abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn qwz_real_axis_line() {
        for l in [2, 4, 8, 16, 32] {
            let lines = analytic_zero_lines(&ModelSpec::Qwz, l).unwrap();
            let centre = lines.iter().find(|x| x.real_part.abs() < 1e-12).unwrap();
            assert!(centre.im_range.contains(0.0), "L = {l}");
        }
    }

    #[test]
    fn haldane_lines_stay_inside_bound() {
        let bound = 3.0 * 3f64.sqrt() / 4.0;
        for l in [4, 8, 16, 32] {
            for line in analytic_zero_lines(&ModelSpec::default_for(ModelKind::Haldane), l).unwrap() {
                assert!(line.real_part.abs() <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn boundary_curve_samples() {
        let b = kitaev_region_boundary(0.6).unwrap();
        assert_eq!(b.at(0.0)[0], Complex64::new(-1.0, 0.0));
        let mid = b.at(PI / 2.0);
        assert!(mid[0].re.abs() < 1e-16 && (mid[0].im - 0.6).abs() < 1e-16);
        assert!((mid[1].im + 0.6).abs() < 1e-16);
        for (_, pts) in b.samples(101) {
            for z in pts {
                assert!((z.re * z.re + (z.im / 0.6).powi(2) - 1.0).abs() < 1e-14);
            }
        }
        assert!(kitaev_region_boundary(0.0).is_err());
    }

    #[test]
    fn boundary_estimates() {
        for l in [2, 4, 16, 64] {
            let k = boundary_estimate(&ModelSpec::kitaev(0.6), l).unwrap();
            assert_eq!((k.min_real, k.max_real), (-1.0, 1.0));
            let q = boundary_estimate(&ModelSpec::Qwz, l).unwrap();
            assert_eq!((q.min_real, q.max_real), (-2.0, 2.0));
        }
    }

    #[test]
    fn extraction_requires_f_min() {
        let mut cfg = ScanConfig::new(ModelSpec::kitaev(0.6), 8, Window::square(1.5)).with_resolution(5, 5);
        cfg.quantities.f_min = false;
        cfg.quantities.e_min = true;
        let scan = run_plane_scan(&cfg).unwrap();
        assert_eq!(extract_zeros(&scan), Err(Error::EmptyScan));
    }

    #[test]
    fn exterior_window_is_empty() {
        let cfg = ScanConfig::new(ModelSpec::kitaev(0.6), 16, Window::new(1.05, 1.5, -1.5, 1.5)).with_resolution(46, 61);
        let z = extract_zeros(&run_plane_scan(&cfg).unwrap()).unwrap();
        assert!(z.points.is_empty() && z.lines.is_empty());
    }

    #[test]
    fn kitaev_detection_matches_analytic() {
        let model = ModelSpec::kitaev(0.6);
        let cfg = ScanConfig::new(model, 16, Window::square(1.5)).with_resolution(151, 61);
        let z = extract_zeros(&run_plane_scan(&cfg).unwrap()).unwrap();
        let cmp = compare_lines(&analytic_zero_lines(&model, 16).unwrap(), &z, &cfg.window);
        assert!(cmp.agrees(), "{cmp:?}");
        for m in &cmp.analytic {
            assert!(m.distance.unwrap() < 1e-6);
        }
    }

    #[test]
    fn comparison_flags_mismatch() {
        let lines = analytic_zero_lines(&ModelSpec::kitaev(0.6), 4).unwrap();
        let fake = ZeroExtraction {
            tolerance: 0.01,
            cluster_tolerance: 1e-7,
            lines: vec![DetectedLine {
                real_part: 0.5,
                spread: 0.0,
                im_min: 0.0,
                im_max: 0.0,
                n_points: 1,
                labels: vec![],
            }],
            points: vec![],
            unconfirmed: vec![],
        };
        let cmp = compare_lines(&lines, &fake, &Window::square(1.5));
        assert_eq!(cmp.unmatched_analytic, 3);
        assert_eq!(cmp.unmatched_detected, 1);
        assert!(!cmp.agrees());
    }
}
