//! Catalog of the four two-band lattice models and their finite-size
//! momentum grids.
//!
//! Each model maps a momentum and a complex value of its driving parameter to
//! a [`DVector`]. Units: the nearest-neighbour hopping of the Kitaev chain is
//! fixed to 1.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg2::DVector;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Kitaev,
    Ssh,
    Haldane,
    Qwz,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Kitaev, ModelKind::Ssh, ModelKind::Haldane, ModelKind::Qwz];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Kitaev => "kitaev",
            ModelKind::Ssh => "ssh",
            ModelKind::Haldane => "haldane",
            ModelKind::Qwz => "qwz",
        }
    }

    /// Symbol of the complexified driving parameter.
    pub fn driving_parameter(self) -> &'static str {
        match self {
            ModelKind::Kitaev => "mu",
            ModelKind::Ssh => "t1",
            ModelKind::Haldane => "M",
            ModelKind::Qwz => "u",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            ModelKind::Kitaev | ModelKind::Ssh => 1,
            ModelKind::Haldane | ModelKind::Qwz => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kitaev" => Ok(ModelKind::Kitaev),
            "ssh" => Ok(ModelKind::Ssh),
            "haldane" => Ok(ModelKind::Haldane),
            "qwz" => Ok(ModelKind::Qwz),
            other => Err(invalid("model", format!("unknown model `{other}`"))),
        }
    }
}

/// A lattice model with its fixed real parameters. The driving parameter is
/// supplied separately as a complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    /// `d = (0, 0, −Δ sin k, −μ − cos k)`, driven by μ.
    Kitaev {
        delta: f64,
        /// Use the full zone `m = −L/2+1 … L/2` instead of `m = 0 … L/2`.
        #[serde(default)]
        full_zone: bool,
    },
    /// `d = (0, t1 + t2 cos k, t2 sin k, 0)`, driven by t1.
    Ssh { t2: f64 },
    /// Honeycomb Chern insulator, driven by the sublattice potential M.
    Haldane { t1: f64, t2: f64, theta: f64 },
    /// `d = (0, sin kx, sin ky, u + cos kx + cos ky)`, driven by u.
    Qwz,
}

impl ModelSpec {
    pub fn kitaev(delta: f64) -> Self {
        ModelSpec::Kitaev { delta, full_zone: false }
    }

    pub fn ssh(t2: f64) -> Self {
        ModelSpec::Ssh { t2 }
    }

    pub fn haldane(t1: f64, t2: f64, theta: f64) -> Self {
        ModelSpec::Haldane { t1, t2, theta }
    }

    /// Default parameters used throughout: Δ = 0.6, t2 = −1 (SSH),
    /// t1 = 1, t2 = 1/2, θ = π/6 (Haldane).
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Kitaev => ModelSpec::kitaev(0.6),
            ModelKind::Ssh => ModelSpec::ssh(-1.0),
            ModelKind::Haldane => ModelSpec::haldane(1.0, 0.5, PI / 6.0),
            ModelKind::Qwz => ModelSpec::Qwz,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Kitaev { .. } => ModelKind::Kitaev,
            ModelSpec::Ssh { .. } => ModelKind::Ssh,
            ModelSpec::Haldane { .. } => ModelKind::Haldane,
            ModelSpec::Qwz => ModelKind::Qwz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |key: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, "must be finite"))
            }
        };
        match *self {
            ModelSpec::Kitaev { delta, .. } => {
                finite("delta", delta)?;
                if delta == 0.0 {
                    return Err(invalid("delta", "pairing amplitude must be nonzero"));
                }
            }
            ModelSpec::Ssh { t2 } => finite("t2", t2)?,
            ModelSpec::Haldane { t1, t2, theta } => {
                finite("t1", t1)?;
                finite("t2", t2)?;
                finite("theta", theta)?;
            }
            ModelSpec::Qwz => {}
        }
        Ok(())
    }

    /// Bloch d-vector at `k` with the driving parameter set to `gamma`.
    /// Unchecked variant of [`d_vector`] for inner loops.
    #[inline]
    pub fn d_vector(&self, k: Momentum, gamma: Complex64) -> DVector {
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            ModelSpec::Kitaev { delta, .. } => DVector {
                d0: zero,
                d1: zero,
                d2: (-delta * k.kx.sin()).into(),
                d3: -gamma - k.kx.cos(),
            },
            ModelSpec::Ssh { t2 } => DVector {
                d0: zero,
                d1: gamma + t2 * k.kx.cos(),
                d2: (t2 * k.kx.sin()).into(),
                d3: zero,
            },
            ModelSpec::Haldane { t1, t2, theta } => {
                let a = 0.5 * SQRT3 * k.kx;
                let (sa, ca) = a.sin_cos();
                let (s2a, c2a) = (SQRT3 * k.kx).sin_cos();
                let cb = (1.5 * k.ky).cos();
                let (sy, cy) = k.ky.sin_cos();
                let (sy2, cy2) = (0.5 * k.ky).sin_cos();
                DVector {
                    d0: (2.0 * t2 * theta.cos() * (c2a + 2.0 * ca * cb)).into(),
                    d1: (t1 * (cy + 2.0 * ca * cy2)).into(),
                    d2: (t1 * (sy - 2.0 * ca * sy2)).into(),
                    d3: gamma - 2.0 * t2 * theta.sin() * (s2a - 2.0 * sa * cb),
                }
            }
            ModelSpec::Qwz => {
                let (sx, cx) = k.kx.sin_cos();
                let (sy, cy) = k.ky.sin_cos();
                DVector {
                    d0: zero,
                    d1: sx.into(),
                    d2: sy.into(),
                    d3: gamma + cx + cy,
                }
            }
        }
    }

    /// Momentum-resolved zero locus. For real momentum every model has
    /// radicand `(γ − c(k))² + A(k)` with real `c` and `A ≥ 0`, so the real
    /// part of the gap closes exactly on `Re γ = c(k)`, `(Im γ)² ≥ A(k)`.
    pub fn zero_locus(&self, k: Momentum) -> Locus {
        match *self {
            ModelSpec::Kitaev { delta, .. } => {
                let (s, c) = k.kx.sin_cos();
                Locus {
                    real_part: -c,
                    im_floor_sq: delta * delta * s * s,
                }
            }
            ModelSpec::Ssh { t2 } => {
                let (s, c) = k.kx.sin_cos();
                Locus {
                    real_part: -t2 * c,
                    im_floor_sq: t2 * t2 * s * s,
                }
            }
            ModelSpec::Haldane { t1, t2, theta } => {
                let a = 0.5 * SQRT3 * k.kx;
                let (sa, ca) = a.sin_cos();
                let cb = (1.5 * k.ky).cos();
                Locus {
                    real_part: -4.0 * t2 * sa * theta.sin() * (cb - ca),
                    im_floor_sq: (t1 * t1 * (3.0 + 2.0 * (SQRT3 * k.kx).cos() + 4.0 * ca * cb)).max(0.0),
                }
            }
            ModelSpec::Qwz => {
                let (cx, cy) = (k.kx.cos(), k.ky.cos());
                Locus {
                    real_part: -cx - cy,
                    im_floor_sq: (2.0 - cx * cx - cy * cy).max(0.0),
                }
            }
        }
    }

    /// Real-axis critical values of the Hermitian model, ascending.
    pub fn critical_points(&self) -> Vec<f64> {
        match *self {
            ModelSpec::Kitaev { .. } => vec![-1.0, 1.0],
            ModelSpec::Ssh { t2 } => vec![-t2.abs(), t2.abs()],
            ModelSpec::Haldane { t2, theta, .. } => {
                let m = (3.0 * SQRT3 * t2 * theta.sin()).abs();
                vec![-m, m]
            }
            ModelSpec::Qwz => vec![-2.0, 0.0, 2.0],
        }
    }

    /// Outermost critical value; bounds the real part of every zero.
    pub fn outer_critical(&self) -> f64 {
        self.critical_points().into_iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Rectangular sampling cell `[origin, origin + extent)` covering one
    /// Brillouin zone of the spectrum. 1D models leave `ky` unused.
    pub fn bz_cell(&self) -> BzCell {
        match self.kind() {
            ModelKind::Kitaev | ModelKind::Ssh => BzCell {
                dimension: 1,
                origin: [-PI, 0.0],
                extent: [2.0 * PI, 0.0],
            },
            ModelKind::Qwz => BzCell {
                dimension: 2,
                origin: [0.0, 0.0],
                extent: [2.0 * PI, 2.0 * PI],
            },
            ModelKind::Haldane => BzCell {
                dimension: 2,
                origin: [0.0, 0.0],
                extent: [2.0 * PI / SQRT3, 4.0 * PI / 3.0],
            },
        }
    }

    /// Maps a momentum into the sampling cell by a reciprocal lattice vector.
    pub fn reduce_momentum(&self, k: Momentum) -> Momentum {
        let cell = self.bz_cell();
        match self.kind() {
            ModelKind::Kitaev | ModelKind::Ssh => Momentum::d1((k.kx + PI).rem_euclid(2.0 * PI) - PI),
            ModelKind::Qwz => Momentum::d2(k.kx.rem_euclid(2.0 * PI), k.ky.rem_euclid(2.0 * PI)),
            ModelKind::Haldane => {
                // reciprocal basis (2π/√3, 2π/3) and (0, 4π/3)
                let n = (k.kx / cell.extent[0]).floor();
                let kx = k.kx - n * cell.extent[0];
                let ky = (k.ky - n * 2.0 * PI / 3.0).rem_euclid(cell.extent[1]);
                Momentum::d2(kx, ky)
            }
        }
    }
}

/// Sampling cell of the first Brillouin zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BzCell {
    pub dimension: usize,
    pub origin: [f64; 2],
    pub extent: [f64; 2],
}

/// Zero locus of one momentum mode: the vertical line `Re γ = real_part`
/// restricted to `(Im γ)² ≥ im_floor_sq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Locus {
    pub real_part: f64,
    pub im_floor_sq: f64,
}

/// Lattice momentum; `ky` is zero for 1D models.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Momentum {
    pub kx: f64,
    pub ky: f64,
}

impl Momentum {
    pub fn d1(k: f64) -> Self {
        Momentum { kx: k, ky: 0.0 }
    }

    pub fn d2(kx: f64, ky: f64) -> Self {
        Momentum { kx, ky }
    }
}

/// Discrete momenta of a finite system, in lexicographic order of the
/// integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub kind: ModelKind,
    pub size: usize,
    pub momenta: Vec<Momentum>,
    /// Integer labels `m` (1D: `[m, 0]`, 2D: `[m_x, m_y]`).
    pub labels: Vec<[i64; 2]>,
}

impl MomentumGrid {
    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }
}

/// Checked d-vector evaluation.
pub fn d_vector(model: &ModelSpec, k: Momentum, gamma: Complex64) -> Result<DVector> {
    if !gamma.is_finite() {
        return Err(invalid(model_param_key(model.kind()), "driving parameter must be finite"));
    }
    if !(k.kx.is_finite() && k.ky.is_finite()) {
        return Err(invalid("momentum", "must be finite"));
    }
    Ok(model.d_vector(k, gamma))
}

fn model_param_key(kind: ModelKind) -> &'static str {
    kind.driving_parameter()
}

/// Finite-size momentum set of the model:
/// Kitaev `k = 2πm/L`, `m = 0…L/2` (full zone: `m = −L/2+1…L/2`);
/// SSH `m = −L/2+1…L/2`;
/// Haldane `kx = 2πm_x/(√3 L)`, `ky = 4πm_y/(3L)`, `m = 1…L`;
/// QWZ `k = 2πm/L`, `m = 1…L` in each direction.
pub fn momentum_grid(model: &ModelSpec, size: usize) -> Result<MomentumGrid> {
    if size < 2 {
        return Err(invalid("L", "system size must be at least 2"));
    }
    let l = size as i64;
    let lf = size as f64;
    let kind = model.kind();
    let labels: Vec<[i64; 2]> = match *model {
        ModelSpec::Kitaev { full_zone, .. } => {
            if size % 2 != 0 {
                return Err(Error::OddSize(size));
            }
            let lo = if full_zone { -l / 2 + 1 } else { 0 };
            (lo..=l / 2).map(|m| [m, 0]).collect()
        }
        ModelSpec::Ssh { .. } => {
            if size % 2 != 0 {
                return Err(Error::OddSize(size));
            }
            (-l / 2 + 1..=l / 2).map(|m| [m, 0]).collect()
        }
        ModelSpec::Haldane { .. } | ModelSpec::Qwz => (1..=l)
            .flat_map(|mx| (1..=l).map(move |my| [mx, my]))
            .collect(),
    };
    let momenta = labels
        .iter()
        .map(|&[mx, my]| match kind {
            ModelKind::Kitaev | ModelKind::Ssh => Momentum::d1(2.0 * PI * mx as f64 / lf),
            ModelKind::Haldane => Momentum::d2(
                2.0 * PI * mx as f64 / (SQRT3 * lf),
                4.0 * PI * my as f64 / (3.0 * lf),
            ),
            ModelKind::Qwz => Momentum::d2(2.0 * PI * mx as f64 / lf, 2.0 * PI * my as f64 / lf),
        })
        .collect();
    Ok(MomentumGrid {
        kind,
        size,
        momenta,
        labels,
    })
}

/// Reference critical values of the model.
pub fn critical_points(model: &ModelSpec) -> Vec<f64> {
    model.critical_points()
}
