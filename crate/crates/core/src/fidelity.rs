//! Biorthogonal ground-state fidelity.
//!
//! Per mode the factor is `√|⟨ψL_g(a)|ψR_g(b)⟩⟨ψL_g(b)|ψR_g(a)⟩|`; the
//! many-body fidelity is the product over the momentum grid and `F_min` is
//! the smallest factor. Reductions run in grid order so results do not depend
//! on how callers distribute work.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg2::{eig2x2, ground_overlap_pair, Degeneracy, ModeSolution, Strictness};
use crate::models::{momentum_grid, ModelSpec, Momentum, MomentumGrid};

/// Degeneracies met while evaluating a fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FidelityFlags {
    pub real_part_tie: bool,
    pub exceptional_point: bool,
    pub lenient: bool,
}

impl FidelityFlags {
    pub fn merge(self, other: FidelityFlags) -> FidelityFlags {
        FidelityFlags {
            real_part_tie: self.real_part_tie || other.real_part_tie,
            exceptional_point: self.exceptional_point || other.exceptional_point,
            lenient: self.lenient || other.lenient,
        }
    }

    pub fn any(&self) -> bool {
        self.real_part_tie || self.exceptional_point
    }

    /// Compact bit encoding used in flag grids.
    pub fn bits(&self) -> u8 {
        (self.real_part_tie as u8) | ((self.exceptional_point as u8) << 1) | ((self.lenient as u8) << 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFidelity {
    pub value: f64,
    pub flags: FidelityFlags,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityResult {
    pub value: f64,
    /// Grid index and momentum of the smallest factor.
    pub argmin: Option<(usize, Momentum)>,
    pub flags: FidelityFlags,
}

/// Fidelity factor between two already diagonalized blocks.
pub fn factor_from_solutions(a: &ModeSolution, b: &ModeSolution, mode: Strictness) -> Result<ModeFidelity> {
    let exceptional = a.degeneracy == Degeneracy::ExceptionalPoint || b.degeneracy == Degeneracy::ExceptionalPoint;
    let tie = a.degeneracy == Degeneracy::RealPartTie || b.degeneracy == Degeneracy::RealPartTie;
    let lenient = mode == Strictness::Lenient;
    if exceptional {
        return match mode {
            Strictness::Strict => Err(Error::Degenerate {
                flag: Degeneracy::ExceptionalPoint,
                detail: "biorthogonal normalization impossible".into(),
            }),
            Strictness::Lenient => Ok(ModeFidelity {
                value: 0.0,
                flags: FidelityFlags {
                    real_part_tie: tie,
                    exceptional_point: true,
                    lenient,
                },
            }),
        };
    }
    // real-part ties carry a tie-broken label and are always evaluated
    let pair = ground_overlap_pair(a, b, Strictness::Lenient)?;
    Ok(ModeFidelity {
        value: pair.product().norm().sqrt(),
        flags: FidelityFlags {
            real_part_tie: tie,
            exceptional_point: false,
            lenient,
        },
    })
}

/// Single-mode fidelity factor between driving values `gamma_a` and `gamma_b`.
pub fn mode_fidelity(
    model: &ModelSpec,
    k: Momentum,
    gamma_a: Complex64,
    gamma_b: Complex64,
    mode: Strictness,
) -> Result<ModeFidelity> {
    let a = eig2x2(&model.d_vector(k, gamma_a));
    let b = eig2x2(&model.d_vector(k, gamma_b));
    factor_from_solutions(&a, &b, mode)
}

/// A model paired with its momentum grid; reusable across many evaluations.
#[derive(Debug, Clone)]
pub struct FidelityKernel {
    pub model: ModelSpec,
    pub grid: MomentumGrid,
    pub mode: Strictness,
}

impl FidelityKernel {
    pub fn new(model: ModelSpec, size: usize, mode: Strictness) -> Result<Self> {
        model.validate()?;
        let grid = momentum_grid(&model, size)?;
        Ok(FidelityKernel { model, grid, mode })
    }

    /// Factor of every grid mode, in grid order.
    pub fn mode_values(&self, gamma_a: Complex64, gamma_b: Complex64) -> Result<Vec<ModeFidelity>> {
        self.grid
            .momenta
            .iter()
            .map(|&k| mode_fidelity(&self.model, k, gamma_a, gamma_b, self.mode))
            .collect()
    }

    /// Product of all mode factors.
    pub fn total(&self, gamma_a: Complex64, gamma_b: Complex64) -> Result<FidelityResult> {
        let mut value = 1.0;
        let mut flags = FidelityFlags::default();
        let mut argmin: Option<(usize, Momentum, f64)> = None;
        for (i, &k) in self.grid.momenta.iter().enumerate() {
            let f = mode_fidelity(&self.model, k, gamma_a, gamma_b, self.mode)?;
            value *= f.value;
            flags = flags.merge(f.flags);
            if argmin.map_or(true, |(_, _, v)| f.value < v) {
                argmin = Some((i, k, f.value));
            }
        }
        Ok(FidelityResult {
            value,
            argmin: argmin.map(|(i, k, _)| (i, k)),
            flags,
        })
    }

    /// Smallest factor across the displacement `gamma ± delta/2`.
    pub fn f_min(&self, gamma: Complex64, delta: Complex64) -> Result<FidelityResult> {
        if delta == Complex64::new(0.0, 0.0) || !delta.is_finite() {
            return Err(invalid("dgamma", "displacement must be finite and nonzero"));
        }
        let (a, b) = (gamma + delta / 2.0, gamma - delta / 2.0);
        let mut best: Option<(usize, Momentum, f64)> = None;
        let mut flags = FidelityFlags::default();
        for (i, &k) in self.grid.momenta.iter().enumerate() {
            let f = mode_fidelity(&self.model, k, a, b, self.mode)?;
            flags = flags.merge(f.flags);
            if best.map_or(true, |(_, _, v)| f.value < v) {
                best = Some((i, k, f.value));
            }
        }
        let (i, k, value) = best.expect("momentum grids are never empty");
        Ok(FidelityResult {
            value,
            argmin: Some((i, k)),
            flags,
        })
    }
}

/// Many-body fidelity over the model's grid of size `L`.
pub fn total_fidelity(
    model: &ModelSpec,
    size: usize,
    gamma_a: Complex64,
    gamma_b: Complex64,
    mode: Strictness,
) -> Result<FidelityResult> {
    FidelityKernel::new(*model, size, mode)?.total(gamma_a, gamma_b)
}

/// Minimum single-mode fidelity `F_min(γ + δγ/2, γ − δγ/2)`.
pub fn f_min(
    model: &ModelSpec,
    size: usize,
    gamma: Complex64,
    delta_gamma: Complex64,
    mode: Strictness,
) -> Result<FidelityResult> {
    FidelityKernel::new(*model, size, mode)?.f_min(gamma, delta_gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg2::inner;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn kitaev() -> ModelSpec {
        ModelSpec::kitaev(0.6)
    }

    /// Independent overlap: explicit vectors from the closed forms, labels
    /// picked by the sign of Re √radicand with the principal branch.
    fn oracle_factor(model: &ModelSpec, k: Momentum, a: Complex64, b: Complex64) -> f64 {
        let ground = |g: Complex64| {
            let d = model.d_vector(k, g);
            let s = d.radicand().sqrt();
            let lam = if s.re > 0.0 { -s } else { s };
            let i = c(0.0, 1.0);
            // second closed form when the first degenerates (d1 = d2 = 0)
            if (d.d3 + lam).norm() > (lam - d.d3).norm() {
                ([d.d3 + lam, d.d1 + i * d.d2], [d.d3 + lam, d.d1 - i * d.d2])
            } else {
                ([d.d1 - i * d.d2, lam - d.d3], [d.d1 + i * d.d2, lam - d.d3])
            }
        };
        let (ra, la) = ground(a);
        let (rb, lb) = ground(b);
        // bilinear row·column products, normalized by each branch's own
        let bil = |x: &[Complex64; 2], y: &[Complex64; 2]| x[0] * y[0] + x[1] * y[1];
        let p = bil(&la, &rb) * bil(&lb, &ra) / (bil(&la, &ra) * bil(&lb, &rb));
        p.norm().sqrt()
    }

    #[test]
    fn identical_points_give_unit_fidelity() {
        let f = mode_fidelity(&kitaev(), Momentum::d1(0.7), c(0.3, 0.4), c(0.3, 0.4), Strictness::Strict).unwrap();
        assert!((f.value - 1.0).abs() < 1e-14);
        let t = total_fidelity(&kitaev(), 8, c(0.3, 0.4), c(0.3, 0.4), Strictness::Strict).unwrap();
        assert!((t.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn straddling_the_zone_edge_zero_line_kills_the_mode() {
        let d = 0.0005 * c(1.0, 1.0);
        let k = Momentum::d1(PI);
        let f = mode_fidelity(&kitaev(), k, c(1.0, 0.0) + d, c(1.0, 0.0) - d, Strictness::Strict).unwrap();
        let oracle = oracle_factor(&kitaev(), k, c(1.0, 0.0) + d, c(1.0, 0.0) - d);
        assert!(f.value < 0.05, "{}", f.value);
        assert!((f.value - oracle).abs() < 1e-9);
    }

    #[test]
    fn far_from_zero_lines_fidelity_stays_near_one() {
        let d = 0.0005 * c(1.0, 1.0);
        let k = Momentum::d1(PI / 2.0);
        let f = mode_fidelity(&kitaev(), k, c(3.0, 0.0) + d, c(3.0, 0.0) - d, Strictness::Strict).unwrap();
        assert!(f.value > 0.999);
        assert!((f.value - oracle_factor(&kitaev(), k, c(3.0, 0.0) + d, c(3.0, 0.0) - d)).abs() < 1e-12);
    }

    #[test]
    fn overlap_across_the_imaginary_axis_line_is_small() {
        let k = Momentum::d1(PI / 2.0);
        let a = eig2x2(&kitaev().d_vector(k, c(0.001, 0.8)));
        let b = eig2x2(&kitaev().d_vector(k, c(-0.001, 0.8)));
        let pair = ground_overlap_pair(&a, &b, Strictness::Strict).unwrap();
        assert!(pair.product().norm() < 1e-2);
        // oracle: the continued Re gap changes sign across Re μ = 0
        let signed = |g: Complex64| -(-kitaev().d_vector(k, g).radicand()).sqrt().im;
        assert!(signed(c(0.001, 0.8)) * signed(c(-0.001, 0.8)) < 0.0);
    }

    #[test]
    fn total_is_product_of_modes() {
        let kernel = FidelityKernel::new(kitaev(), 4, Strictness::Strict).unwrap();
        let g = c(0.70, 0.9);
        let gb = g + 0.001 * c(1.0, 1.0);
        let total = kernel.total(g, gb).unwrap();
        assert_eq!(kernel.grid.len(), 3);
        let product: f64 = kernel
            .grid
            .momenta
            .iter()
            .map(|&k| oracle_factor(&kitaev(), k, g, gb))
            .product();
        assert!((total.value - product).abs() < 1e-12, "{} vs {product}", total.value);
    }

    #[test]
    fn f_min_finds_the_discrete_zero_line() {
        let k2 = 2.0 * PI * 2.0 / 16.0;
        let gamma = c(-k2.cos(), 0.9);
        let r = f_min(&kitaev(), 16, gamma, 0.01 * c(1.0, 1.0), Strictness::Strict).unwrap();
        assert!(r.value < 0.1, "{}", r.value);
        let (_, k) = r.argmin.unwrap();
        assert!((k.kx - k2).abs() < 1e-12);
    }

    #[test]
    fn f_min_below_the_ray_has_no_zero() {
        let k2 = 2.0 * PI * 2.0 / 16.0;
        let r = f_min(&kitaev(), 16, c(-k2.cos(), 0.3), 0.01 * c(1.0, 1.0), Strictness::Strict).unwrap();
        assert!(r.value > 0.9, "{}", r.value);
    }

    #[test]
    fn f_min_without_gap_closing_is_near_one() {
        // E_min > 0 along the whole segment: far outside |μ_R| ≤ 1
        let r = f_min(&kitaev(), 16, c(2.0, 0.4), 0.01 * c(1.0, 1.0), Strictness::Strict).unwrap();
        assert!(r.value > 0.99);
    }

    #[test]
    fn zero_displacement_rejected() {
        assert!(f_min(&kitaev(), 16, c(0.0, 0.0), c(0.0, 0.0), Strictness::Strict).is_err());
    }

    #[test]
    fn exceptional_point_strict_and_lenient() {
        // Kitaev k = π at μ = 1 is a vanishing d-vector
        let k = Momentum::d1(PI);
        let strict = mode_fidelity(&kitaev(), k, c(1.0, 0.0), c(1.1, 0.0), Strictness::Strict);
        assert!(matches!(strict, Err(Error::Degenerate { .. })));
        let lenient = mode_fidelity(&kitaev(), k, c(1.0, 0.0), c(1.1, 0.0), Strictness::Lenient).unwrap();
        assert_eq!(lenient.value, 0.0);
        assert!(lenient.flags.exceptional_point && lenient.flags.lenient);
    }

    #[test]
    fn swap_symmetry_is_exact() {
        let model = ModelSpec::default_for(crate::models::ModelKind::Haldane);
        let k = Momentum::d2(0.4, 1.1);
        for (a, b) in [(c(0.3, 0.2), c(-0.1, 0.9)), (c(1.2, -0.4), c(1.21, -0.41))] {
            let x = mode_fidelity(&model, k, a, b, Strictness::Strict).unwrap().value;
            let y = mode_fidelity(&model, k, b, a, Strictness::Strict).unwrap().value;
            assert_eq!(x, y);
        }
    }

    #[test]
    fn hermitian_limit_bounded_by_one() {
        let model = ModelSpec::Qwz;
        for i in 0..50 {
            let u = -3.0 + 0.12 * i as f64;
            let k = Momentum::d2(0.3 * i as f64, 1.0 - 0.05 * i as f64);
            let f = mode_fidelity(&model, k, c(u, 0.0), c(u + 0.05, 0.0), Strictness::Lenient).unwrap();
            assert!(f.value >= 0.0 && f.value <= 1.0 + 1e-9);
            // Hermitian case reduces to |⟨ψ(a)|ψ(b)⟩|
            let a = eig2x2(&model.d_vector(k, c(u, 0.0)));
            let b = eig2x2(&model.d_vector(k, c(u + 0.05, 0.0)));
            if a.degeneracy == Degeneracy::None && b.degeneracy == Degeneracy::None {
                let plain = inner(&a.ground().right, &b.ground().right).norm();
                assert!((plain - f.value).abs() < 1e-10);
            }
        }
    }
}
