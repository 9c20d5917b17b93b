//! Closed-form eigensystem of a 2×2 Bloch block
//! `H = d0·I + d1·σx + d2·σy + d3·σz` with complex coefficients.
//!
//! Both branches `E± = d0 ± √(d1² + d2² + d3²)` are built with the principal
//! square root. Right eigenvectors have unit Euclidean norm; left eigenvectors
//! solve `H† ψL = E* ψL` and are rescaled so that `⟨ψL|ψR⟩ = 1` on each branch.
//! The ground branch is the one with the smaller real part of the energy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Radicand magnitude (relative to the d-vector scale squared) below which the
/// block is treated as an exceptional point.
pub const EXCEPTIONAL_TOL: f64 = 1e-24;
/// Real-part energy difference below which the branches count as tied.
pub const TIE_TOL: f64 = 1e-12;
/// Component magnitude below which an eigenvector closed form is null.
pub const NULL_VECTOR_TOL: f64 = 1e-13;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The four coefficients of a two-band Bloch Hamiltonian at one momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DVector {
    pub d0: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
}

impl DVector {
    /// Builds a d-vector, rejecting non-finite components.
    pub fn new(d0: Complex64, d1: Complex64, d2: Complex64, d3: Complex64) -> Result<Self> {
        let d = DVector { d0, d1, d2, d3 };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(invalid("d", "all d-vector components must be finite"))
        }
    }

    /// Builds a d-vector from real components.
    pub fn real(d0: f64, d1: f64, d2: f64, d3: f64) -> Self {
        DVector {
            d0: d0.into(),
            d1: d1.into(),
            d2: d2.into(),
            d3: d3.into(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.d0, self.d1, self.d2, self.d3].iter().all(|z| z.is_finite())
    }

    /// `d1² + d2² + d3²` (bilinear, no conjugation).
    pub fn radicand(&self) -> Complex64 {
        self.d1 * self.d1 + self.d2 * self.d2 + self.d3 * self.d3
    }

    /// `|d1|² + |d2|² + |d3|²`, the natural scale of the radicand.
    pub fn scale_sq(&self) -> f64 {
        self.d1.norm_sqr() + self.d2.norm_sqr() + self.d3.norm_sqr()
    }

    /// Matrix form `[[d0 + d3, d1 − i d2], [d1 + i d2, d0 − d3]]`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [self.d0 + self.d3, self.d1 - I * self.d2],
            [self.d1 + I * self.d2, self.d0 - self.d3],
        ]
    }

    /// `H v` for a 2-component vector.
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = self.matrix();
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Componentwise complex conjugate.
    pub fn conj(&self) -> Self {
        DVector {
            d0: self.d0.conj(),
            d1: self.d1.conj(),
            d2: self.d2.conj(),
            d3: self.d3.conj(),
        }
    }
}

/// Energy branch `+` or `−` of `E± = d0 ± √radicand`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchLabel {
    Plus,
    Minus,
}

impl BranchLabel {
    pub fn other(self) -> Self {
        match self {
            BranchLabel::Plus => BranchLabel::Minus,
            BranchLabel::Minus => BranchLabel::Plus,
        }
    }
}

/// Degeneracy classification of one 2×2 block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Degeneracy {
    None,
    /// `Re E+ = Re E−` but the branches are distinct.
    RealPartTie,
    /// The radicand vanishes; no biorthonormal basis exists.
    ExceptionalPoint,
}

/// Eigenvalue with its right and left eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub energy: Complex64,
    pub right: [Complex64; 2],
    pub left: [Complex64; 2],
}

/// Full eigensystem of one 2×2 block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    pub plus: Branch,
    pub minus: Branch,
    pub ground_label: BranchLabel,
    pub degeneracy: Degeneracy,
}

impl ModeSolution {
    pub fn branch(&self, label: BranchLabel) -> &Branch {
        match label {
            BranchLabel::Plus => &self.plus,
            BranchLabel::Minus => &self.minus,
        }
    }

    pub fn ground(&self) -> &Branch {
        self.branch(self.ground_label)
    }

    pub fn excited(&self) -> &Branch {
        self.branch(self.ground_label.other())
    }

    pub fn e_plus(&self) -> Complex64 {
        self.plus.energy
    }

    pub fn e_minus(&self) -> Complex64 {
        self.minus.energy
    }

    /// Returns a copy with the ground label set explicitly.
    pub fn with_ground(mut self, label: BranchLabel) -> Self {
        self.ground_label = label;
        self
    }
}

/// Hermitian inner product `⟨a|b⟩ = Σ conj(a_i) b_i`.
pub fn inner(a: &[Complex64; 2], b: &[Complex64; 2]) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn norm(v: &[Complex64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

/// Rescales to unit norm with the larger-modulus component real and positive.
fn unit_gauge_fixed(v: [Complex64; 2]) -> [Complex64; 2] {
    let n = norm(&v);
    let pivot = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let phase = pivot.conj() / pivot.norm();
    [v[0] * phase / n, v[1] * phase / n]
}

/// Picks the larger of the two proportional closed-form eigenvectors.
/// `q` and `p` are the two off-diagonal combinations (`d1 + i d2`, `d1 − i d2`
/// for right vectors, swapped for left row vectors).
fn eigvec(d3: Complex64, lambda: Complex64, q: Complex64, p: Complex64, tol: f64) -> Option<[Complex64; 2]> {
    let primary = [d3 + lambda, q];
    let fallback = [p, lambda - d3];
    let (np, nf) = (norm(&primary), norm(&fallback));
    let best = if np >= nf { primary } else { fallback };
    if np.max(nf) <= tol {
        None
    } else {
        Some(best)
    }
}

/// Closed-form eigensystem.
pub fn eig2x2(d: &DVector) -> ModeSolution {
    let r = d.radicand();
    let s = r.sqrt();
    let scale_sq = d.scale_sq();
    let scale = scale_sq.sqrt().max(1.0);
    let null_tol = NULL_VECTOR_TOL * scale;

    let q = d.d1 + I * d.d2;
    let p = d.d1 - I * d.d2;

    let exceptional = r.norm() < EXCEPTIONAL_TOL * scale_sq.max(1.0);

    let (e_plus, e_minus) = (d.d0 + s, d.d0 - s);

    if exceptional {
        return exceptional_solution(d, e_plus, e_minus, null_tol);
    }

    let build = |lambda: Complex64, energy: Complex64| -> Option<Branch> {
        let right = unit_gauge_fixed(eigvec(d.d3, lambda, q, p, null_tol)?);
        // H^T is H with d2 -> -d2, so the left row vector swaps q and p.
        let row = eigvec(d.d3, lambda, p, q, null_tol)?;
        let n = (row[0] * right[0] + row[1] * right[1]).conj();
        let left = [row[0].conj() / n, row[1].conj() / n];
        Some(Branch { energy, right, left })
    };
    let (plus, minus) = match (build(s, e_plus), build(-s, e_minus)) {
        (Some(plus), Some(minus)) => (plus, minus),
        _ => return exceptional_solution(d, e_plus, e_minus, null_tol),
    };

    let (ground_label, degeneracy) = label_ground(e_plus, e_minus, s);
    ModeSolution {
        plus,
        minus,
        ground_label,
        degeneracy,
    }
}

fn label_ground(e_plus: Complex64, e_minus: Complex64, s: Complex64) -> (BranchLabel, Degeneracy) {
    let diff = e_plus.re - e_minus.re;
    if diff.abs() <= TIE_TOL * s.norm().max(1.0) {
        let label = if e_plus.im < e_minus.im {
            BranchLabel::Plus
        } else {
            BranchLabel::Minus
        };
        (label, Degeneracy::RealPartTie)
    } else if diff < 0.0 {
        (BranchLabel::Plus, Degeneracy::None)
    } else {
        (BranchLabel::Minus, Degeneracy::None)
    }
}

/// Coalesced block: both branches share the surviving eigenvector, or the
/// standard basis when the block is proportional to the identity.
fn exceptional_solution(d: &DVector, e_plus: Complex64, e_minus: Complex64, null_tol: f64) -> ModeSolution {
    let q = d.d1 + I * d.d2;
    let p = d.d1 - I * d.d2;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let (right_plus, right_minus, left_plus, left_minus) =
        match (eigvec(d.d3, zero, q, p, null_tol), eigvec(d.d3, zero, p, q, null_tol)) {
            (Some(r), Some(l)) => {
                let r = unit_gauge_fixed(r);
                let l = unit_gauge_fixed([l[0].conj(), l[1].conj()]);
                (r, r, l, l)
            }
            _ => {
                let e1 = [one, zero];
                let e2 = [zero, one];
                (e1, e2, e1, e2)
            }
        };
    let (ground_label, _) = label_ground(e_plus, e_minus, (e_plus - e_minus) / 2.0);
    ModeSolution {
        plus: Branch {
            energy: e_plus,
            right: right_plus,
            left: left_plus,
        },
        minus: Branch {
            energy: e_minus,
            right: right_minus,
            left: left_minus,
        },
        ground_label,
        degeneracy: Degeneracy::ExceptionalPoint,
    }
}

/// Strict or lenient handling of degenerate blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

/// The two ground-state overlaps entering one fidelity factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapPair {
    /// `⟨ψL_g(a)|ψR_g(b)⟩`
    pub ab: Complex64,
    /// `⟨ψL_g(b)|ψR_g(a)⟩`
    pub ba: Complex64,
    /// Set when either input was degenerate and the pair was computed anyway.
    pub degenerate: bool,
}

impl OverlapPair {
    pub fn product(&self) -> Complex64 {
        self.ab * self.ba
    }
}

/// Ground-state overlaps between two solutions, each using its own ground label.
pub fn ground_overlap_pair(a: &ModeSolution, b: &ModeSolution, mode: Strictness) -> Result<OverlapPair> {
    let degenerate = [a, b]
        .into_iter()
        .find(|m| m.degeneracy != Degeneracy::None)
        .map(|m| m.degeneracy);
    if let (Some(flag), Strictness::Strict) = (degenerate, mode) {
        return Err(Error::Degenerate {
            flag,
            detail: format!("ground energies {} and {}", a.ground().energy, b.ground().energy),
        });
    }
    let (ga, gb) = (a.ground(), b.ground());
    Ok(OverlapPair {
        ab: inner(&ga.left, &gb.right),
        ba: inner(&gb.left, &ga.right),
        degenerate: degenerate.is_some(),
    })
}
