//! Real-part gap diagnostics.
//!
//! `re_gap` is `|Re(E+ − E−)|` at one momentum; `e_min` minimizes it over the
//! continuous Brillouin zone by uniform sampling followed by per-coordinate
//! golden-section refinement. [`ZeroSupport`] answers whether a complex
//! driving value lies in the continuum zero region by eliminating the momentum
//! from the closed-form line loci.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg2::DVector;
use crate::models::{BzCell, ModelKind, ModelSpec, Momentum};

/// Smallest uniform sampling accepted per Brillouin-zone dimension.
pub const MIN_RESOLUTION: usize = 64;
/// Refined gaps below this are reported as exactly zero.
pub const ZERO_SNAP: f64 = 1e-10;
/// A refined `e_min` below this counts as a closed gap.
pub const ZERO_DECLARE: f64 = 1e-8;
const MOMENTUM_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 200;
const REFINE_CANDIDATES: usize = 8;

/// `|Re(E+ − E−)| = 2|Re √(d1² + d2² + d3²)|`.
pub fn re_gap(model: &ModelSpec, k: Momentum, gamma: Complex64) -> f64 {
    gap_of(&model.d_vector(k, gamma))
}

fn gap_of(d: &DVector) -> f64 {
    2.0 * d.radicand().sqrt().re.abs()
}

/// Real part of the gap on a branch whose cut lies along the positive real
/// radicand axis. It is continuous wherever the principal gap touches zero,
/// so it changes sign (instead of bouncing off zero) when a path crosses a
/// zero line. Across the cut it jumps between `±2√r` with `r > 0`.
pub fn signed_re_gap(model: &ModelSpec, k: Momentum, gamma: Complex64) -> f64 {
    let r = model.d_vector(k, gamma).radicand();
    -2.0 * (-r).sqrt().im
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub value: f64,
    pub argmin_momentum: Momentum,
    pub converged: bool,
}

/// Sampling and refinement settings for [`e_min`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EminOptions {
    /// Samples per Brillouin-zone dimension.
    pub resolution: usize,
    pub refine: bool,
}

impl EminOptions {
    /// 1024 samples in 1D, 256×256 in 2D, refined.
    pub fn default_for(kind: ModelKind) -> Self {
        EminOptions {
            resolution: if kind.dimension() == 1 { 1024 } else { 256 },
            refine: true,
        }
    }
}

/// Uniform Brillouin-zone sampling with the γ-independent parts of the
/// d-vector cached. Every catalog model is affine in its driving parameter,
/// so `d(γ) = d(0) + γ (d(1) − d(0))` is exact.
#[derive(Debug, Clone)]
pub struct GapSampler {
    model: ModelSpec,
    cell: BzCell,
    resolution: usize,
    offset: Vec<DVector>,
    slope: Vec<DVector>,
}

impl GapSampler {
    pub fn new(model: ModelSpec, resolution: usize) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(invalid("emin.resolution", format!("needs at least {MIN_RESOLUTION} samples")));
        }
        model.validate()?;
        let cell = model.bz_cell();
        let n2 = if cell.dimension == 2 { resolution } else { 1 };
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let mut offset = Vec::with_capacity(resolution * n2);
        let mut slope = Vec::with_capacity(resolution * n2);
        for i in 0..resolution {
            for j in 0..n2 {
                let k = sample_point(&cell, resolution, i, j);
                let d0 = model.d_vector(k, zero);
                let d1 = model.d_vector(k, one);
                offset.push(d0);
                slope.push(DVector {
                    d0: d1.d0 - d0.d0,
                    d1: d1.d1 - d0.d1,
                    d2: d1.d2 - d0.d2,
                    d3: d1.d3 - d0.d3,
                });
            }
        }
        Ok(GapSampler {
            model,
            cell,
            resolution,
            offset,
            slope,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    fn n2(&self) -> usize {
        if self.cell.dimension == 2 {
            self.resolution
        } else {
            1
        }
    }

    fn sampled(&self, gamma: Complex64) -> Vec<f64> {
        self.offset
            .iter()
            .zip(&self.slope)
            .map(|(o, s)| {
                gap_of(&DVector {
                    d0: o.d0 + gamma * s.d0,
                    d1: o.d1 + gamma * s.d1,
                    d2: o.d2 + gamma * s.d2,
                    d3: o.d3 + gamma * s.d3,
                })
            })
            .collect()
    }

    /// Minimum of the real gap over the zone.
    pub fn e_min(&self, gamma: Complex64, refine: bool) -> GapResult {
        let values = self.sampled(gamma);
        let n1 = self.resolution;
        let n2 = self.n2();
        let point = |idx: usize| sample_point(&self.cell, n1, idx / n2, idx % n2);

        let (best_idx, best) = values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });

        if best < ZERO_SNAP {
            return GapResult {
                value: 0.0,
                argmin_momentum: self.model.reduce_momentum(point(best_idx)),
                converged: true,
            };
        }
        if !refine {
            return GapResult {
                value: best,
                argmin_momentum: self.model.reduce_momentum(point(best_idx)),
                converged: false,
            };
        }

        let step = [
            self.cell.extent[0] / n1 as f64,
            if self.cell.dimension == 2 {
                self.cell.extent[1] / n2 as f64
            } else {
                0.0
            },
        ];
        let mut result = GapResult {
            value: best,
            argmin_momentum: point(best_idx),
            converged: false,
        };
        for idx in local_minima(&values, n1, n2, REFINE_CANDIDATES) {
            let r = refine_from(&self.model, gamma, point(idx), step, self.cell.dimension);
            if r.value < result.value || (r.value == result.value && r.converged && !result.converged) {
                result = r;
            }
            if result.value == 0.0 {
                break;
            }
        }
        result.argmin_momentum = self.model.reduce_momentum(result.argmin_momentum);
        result
    }
}

fn sample_point(cell: &BzCell, n: usize, i: usize, j: usize) -> Momentum {
    let kx = cell.origin[0] + cell.extent[0] * i as f64 / n as f64;
    if cell.dimension == 1 {
        Momentum::d1(kx)
    } else {
        Momentum::d2(kx, cell.origin[1] + cell.extent[1] * j as f64 / n as f64)
    }
}

/// Indices of the smallest local minima (periodic neighbours), best first.
fn local_minima(values: &[f64], n1: usize, n2: usize, count: usize) -> Vec<usize> {
    let at = |i: usize, j: usize| values[i * n2 + j];
    let mut minima: Vec<(f64, usize)> = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            let v = at(i, j);
            let mut neighbours = vec![at((i + 1) % n1, j), at((i + n1 - 1) % n1, j)];
            if n2 > 1 {
                neighbours.push(at(i, (j + 1) % n2));
                neighbours.push(at(i, (j + n2 - 1) % n2));
            }
            if neighbours.iter().all(|&w| v <= w) {
                minima.push((v, i * n2 + j));
            }
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    minima.truncate(count);
    if minima.is_empty() {
        // flat landscape: fall back to the global sample minimum
        let best = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        return vec![best];
    }
    minima.into_iter().map(|(_, i)| i).collect()
}

/// Golden-section minimization of `f` on `[lo, hi]`.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Largest principal gap accepted at a bisected root of the continued gap.
/// A genuine zero gives `O(√tol)` at worst (near a ray endpoint); a branch
/// jump leaves `2√r` with `r > 0` bounded away from zero.
pub const CROSSING_CONFIRM: f64 = 1e-5;
const CROSSING_TOL: f64 = 1e-12;
const CROSSING_SUBDIVISIONS: usize = 8;

/// Bisects a strict sign change of `f` on `[a, b]` down to width `tol`.
pub(crate) fn bisect_sign_change(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if !(fa * fb < 0.0) {
        return None;
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Some(0.5 * (a + b))
}

/// Real coordinates in `[lo, hi]` where mode `k` closes the real gap on the
/// horizontal line `Im γ = im`: sign changes of [`signed_re_gap`], bisected
/// and confirmed against the principal gap.
pub fn gap_crossings(model: &ModelSpec, k: Momentum, im: f64, lo: f64, hi: f64) -> Vec<f64> {
    let g = |x: f64| signed_re_gap(model, k, Complex64::new(x, im));
    let n = CROSSING_SUBDIVISIONS;
    let mut roots: Vec<f64> = Vec::new();
    for s in 0..n {
        let a = (lo * (n - s) as f64 + hi * s as f64) / n as f64;
        let b = (lo * (n - s - 1) as f64 + hi * (s + 1) as f64) / n as f64;
        if let Some(x) = bisect_sign_change(g, a, b, CROSSING_TOL) {
            if re_gap(model, k, Complex64::new(x, im)) < CROSSING_CONFIRM
                && roots.last().map_or(true, |&p| (x - p).abs() > 1e-9)
            {
                roots.push(x);
            }
        }
    }
    roots
}

fn refine_from(model: &ModelSpec, gamma: Complex64, start: Momentum, step: [f64; 2], dim: usize) -> GapResult {
    let eval = |p: [f64; 2]| re_gap(model, Momentum::d2(p[0], p[1]), gamma);
    let mut p = [start.kx, start.ky];
    let mut best = eval(p);
    let mut width = step;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let before = p;
        for axis in 0..dim {
            let centre = p[axis];
            let line = |t: f64| {
                let mut q = p;
                q[axis] = t;
                eval(q)
            };
            let (t, v) = golden_section(line, centre - width[axis], centre + width[axis], MOMENTUM_TOL * 0.1);
            if v < best {
                best = v;
                p[axis] = t;
            }
            if best < ZERO_SNAP {
                return GapResult {
                    value: 0.0,
                    argmin_momentum: Momentum::d2(p[0], p[1]),
                    converged: true,
                };
            }
        }
        let moved = (0..dim).map(|a| (p[a] - before[a]).abs()).fold(0.0, f64::max);
        let max_width = width[..dim].iter().copied().fold(0.0, f64::max);
        // keep the bracket while the search is still travelling along a valley
        if moved < 0.25 * max_width {
            for w in width.iter_mut() {
                *w *= 0.5;
            }
        }
        if width[..dim].iter().all(|&w| w < MOMENTUM_TOL) {
            converged = true;
            break;
        }
    }
    GapResult {
        value: best,
        argmin_momentum: Momentum::d2(p[0], if dim == 1 { 0.0 } else { p[1] }),
        converged,
    }
}

/// `E_min(γ) = min_k |Re(E+ − E−)|` over the continuous zone.
pub fn e_min(model: &ModelSpec, gamma: Complex64, resolution: usize, refine: bool) -> Result<GapResult> {
    Ok(GapSampler::new(*model, resolution)?.e_min(gamma, refine))
}

/// Continuum support of the fidelity zeros in the complex parameter plane.
///
/// 1D models use the closed-form region; 2D models eliminate the momentum by
/// tracing the level set `c(k) = Re γ` of the line locus on a dense grid and
/// testing `(Im γ)² ≥ A(k)` along it.
#[derive(Debug, Clone)]
pub struct ZeroSupport {
    model: ModelSpec,
    resolution: usize,
    /// `(c, A)` on an inclusive `(n+1)×(n+1)` grid of the sampling cell.
    locus: Vec<(f64, f64)>,
}

/// Default momentum resolution of the 2D level-set trace.
pub const SUPPORT_RESOLUTION: usize = 1024;

impl ZeroSupport {
    pub fn new(model: ModelSpec, resolution: usize) -> Result<Self> {
        model.validate()?;
        if resolution < MIN_RESOLUTION {
            return Err(invalid("resolution", format!("needs at least {MIN_RESOLUTION} samples")));
        }
        let mut locus = Vec::new();
        if model.kind().dimension() == 2 {
            let cell = model.bz_cell();
            let n = resolution;
            locus.reserve((n + 1) * (n + 1));
            for i in 0..=n {
                for j in 0..=n {
                    let k = Momentum::d2(
                        cell.origin[0] + cell.extent[0] * i as f64 / n as f64,
                        cell.origin[1] + cell.extent[1] * j as f64 / n as f64,
                    );
                    let l = model.zero_locus(k);
                    locus.push((l.real_part, l.im_floor_sq));
                }
            }
        }
        Ok(ZeroSupport {
            model,
            resolution,
            locus,
        })
    }

    /// Smallest `A(k)` on the level set `c(k) = x`, or `None` if it is empty.
    fn min_floor_on_level(&self, x: f64) -> Option<f64> {
        let m = self.resolution + 1;
        let at = |i: usize, j: usize| self.locus[i * m + j];
        let mut best: Option<f64> = None;
        let mut visit = |(c0, a0): (f64, f64), (c1, a1): (f64, f64)| {
            let (u, v) = (c0 - x, c1 - x);
            if u == 0.0 {
                best = Some(best.map_or(a0, |b: f64| b.min(a0)));
            } else if u * v < 0.0 {
                let t = u / (u - v);
                let a = a0 + t * (a1 - a0);
                best = Some(best.map_or(a, |b: f64| b.min(a)));
            }
        };
        for i in 0..m {
            for j in 0..m {
                let p = at(i, j);
                if j + 1 < m {
                    visit(p, at(i, j + 1));
                }
                if i + 1 < m {
                    visit(p, at(i + 1, j));
                }
                if i + 1 == m && j + 1 == m {
                    visit(p, p);
                }
            }
        }
        best
    }

    pub fn contains(&self, gamma: Complex64) -> bool {
        let (x, y) = (gamma.re, gamma.im);
        match self.model {
            ModelSpec::Kitaev { delta, .. } => x.abs() <= 1.0 && x * x + (y / delta).powi(2) >= 1.0,
            ModelSpec::Ssh { t2 } => x.abs() <= t2.abs() && x * x + y * y >= t2 * t2,
            ModelSpec::Haldane { .. } | ModelSpec::Qwz => self.min_floor_on_level(x).is_some_and(|a| a <= y * y),
        }
    }
}

/// Membership of `gamma` in the continuum zero region. Builds a fresh
/// [`ZeroSupport`]; reuse one directly for repeated queries on 2D models.
pub fn zero_region_membership(model: &ModelSpec, gamma: Complex64) -> Result<bool> {
    Ok(ZeroSupport::new(*model, SUPPORT_RESOLUTION)?.contains(gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn kitaev() -> ModelSpec {
        ModelSpec::kitaev(0.6)
    }

    #[test]
    fn re_gap_examples() {
        assert!(re_gap(&kitaev(), Momentum::d1(PI), c(1.0, 0.0)) < 1e-15);
        assert!(re_gap(&kitaev(), Momentum::d1(PI / 2.0), c(0.0, 0.8)) < 1e-15);
        let g = re_gap(&kitaev(), Momentum::d1(PI / 2.0), c(0.0, 0.3));
        // radicand (0.3i)² + 0.36 = 0.27
        assert!((g - 2.0 * 0.27f64.sqrt()).abs() < 1e-14);
        let sol = crate::linalg2::eig2x2(&kitaev().d_vector(Momentum::d1(PI / 2.0), c(0.0, 0.3)));
        assert!((g - (sol.e_plus() - sol.e_minus()).re.abs()).abs() < 1e-14);
    }

    #[test]
    fn signed_gap_changes_sign_across_a_line() {
        let k = Momentum::d1(PI / 2.0);
        let left = signed_re_gap(&kitaev(), k, c(-1e-3, 0.8));
        let right = signed_re_gap(&kitaev(), k, c(1e-3, 0.8));
        assert!(left * right < 0.0);
        assert!(left.abs() < 0.01 && right.abs() < 0.01);
        // magnitude agrees with the principal gap
        assert!((left.abs() - re_gap(&kitaev(), k, c(-1e-3, 0.8))).abs() < 1e-14);
    }

    #[test]
    fn e_min_inside_region_is_zero() {
        let r = e_min(&kitaev(), c(0.5, 0.9), 1024, true).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn e_min_outside_region_is_positive() {
        let r = e_min(&kitaev(), c(1.5, 0.5), 1024, true).unwrap();
        assert!(r.value > 1e-3);
    }

    #[test]
    fn e_min_at_origin_is_twice_delta() {
        // analytic: min_k 2√(cos²k + Δ² sin²k) = 2Δ at k = π/2 for Δ < 1
        let r = e_min(&kitaev(), c(0.0, 0.0), 1024, true).unwrap();
        assert!((r.value - 1.2).abs() < 1e-12);
        assert!((r.argmin_momentum.kx.abs() - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn low_resolution_rejected() {
        assert!(e_min(&kitaev(), c(0.0, 0.0), 32, true).is_err());
    }

    #[test]
    fn membership_examples() {
        assert!(zero_region_membership(&kitaev(), c(0.5, 0.9)).unwrap());
        assert!(!zero_region_membership(&kitaev(), c(0.5, 0.3)).unwrap());
        assert!(zero_region_membership(&ModelSpec::Qwz, c(0.0, 0.0)).unwrap());
    }

    #[test]
    fn qwz_support_matches_tangent_disks() {
        // a = cos kx, b = cos ky on a + b = −u_R maximize a² + b²:
        // an extreme point has a = ±1, giving u_I² ≥ 1 − (|u_R| − 1)².
        let support = ZeroSupport::new(ModelSpec::Qwz, 512).unwrap();
        let oracle = |x: f64, y: f64| x.abs() <= 2.0 && y * y >= 1.0 - (x.abs() - 1.0).powi(2);
        let mut checked = 0;
        for i in 0..41 {
            for j in 0..41 {
                let (x, y) = (-2.6 + 0.13 * i as f64, -1.3 + 0.065 * j as f64);
                let margin = (y * y - (1.0 - (x.abs() - 1.0).powi(2))).abs().min((x.abs() - 2.0).abs());
                if margin < 1e-3 {
                    continue;
                }
                assert_eq!(support.contains(c(x, y)), oracle(x, y), "u = {x}+{y}i");
                checked += 1;
            }
        }
        assert!(checked > 1500);
    }

    #[test]
    fn sampler_affine_cache_matches_direct_evaluation() {
        for kind in ModelKind::ALL {
            let model = ModelSpec::default_for(kind);
            let sampler = GapSampler::new(model, 64).unwrap();
            let g = c(0.37, -0.81);
            let cached = sampler.sampled(g);
            let n2 = sampler.n2();
            for (idx, v) in cached.iter().enumerate().step_by(97) {
                let k = sample_point(&sampler.cell, 64, idx / n2, idx % n2);
                assert!((v - re_gap(&model, k, g)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, v) = golden_section(|t| (t - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10);
        // a smooth minimum is only resolvable to about √ε
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-15);
    }
}
