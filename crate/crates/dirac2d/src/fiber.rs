//! The fibered 3×3 symbol of the lattice operator and its band structure.
//!
//! Under the discrete Fourier transform the operator becomes multiplication
//! by the Hermitian matrix
//!
//! ```text
//!            ⎛  m    a(ξ)  b(ξ) ⎞
//!   h₀(ξ) =  ⎜ ā(ξ)  −m     0   ⎟ ,   a(ξ) = −1 + e^{−2πiξ₁},
//!            ⎝ b̄(ξ)   0    −m   ⎠     b(ξ) = −1 + e^{−2πiξ₂},
//! ```
//!
//! with ξ on the unit torus [0,1)². Its characteristic polynomial factors
//! through r_m(ξ) = m² + |a|² + |b|², giving one flat band z₀ ≡ −m and two
//! dispersive bands z±(ξ) = ±√(r_m(ξ)). Critical values of the bands are the
//! spectral thresholds; for m > 0 they sit at ±m, ±√(m²+4), ±√(m²+8), and
//! for m = 0 the two dispersive bands touch conically at ξ = 0.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FiberError {
    #[error("band functions are not differentiable at the Dirac point (m = 0, ξ = 0)")]
    DiracPoint,
    #[error("resolvent evaluated too close to a band: |p_ξ(z)| = {p_abs:.3e}")]
    SingularResolvent { p_abs: f64 },
    #[error("Hessian signature at critical momentum ({xi1}, {xi2}) is degenerate")]
    DegenerateHessian { xi1: f64, xi2: f64 },
}

/// Reduces a coordinate to the fundamental domain [0, 1).
#[inline]
pub fn reduce(x: f64) -> f64 {
    let y = x - x.floor();
    if y == 1.0 {
        0.0
    } else {
        y
    }
}

/// The symbol data at fixed mass, exposing the hopping amplitudes and r_m.
#[derive(Debug, Clone, Copy)]
pub struct FiberSymbol {
    pub m: f64,
}

impl FiberSymbol {
    pub fn new(m: f64) -> Self {
        assert!(m >= 0.0, "mass must be nonnegative");
        FiberSymbol { m }
    }

    pub fn a(&self, xi1: f64) -> Complex64 {
        let t = -2.0 * PI * reduce(xi1);
        Complex64::new(t.cos() - 1.0, t.sin())
    }

    pub fn b(&self, xi2: f64) -> Complex64 {
        self.a(xi2)
    }

    /// r_m(ξ) = m² + |a|² + |b|² = m² + 4sin²(πξ₁) + 4sin²(πξ₂).
    pub fn r(&self, xi: [f64; 2]) -> f64 {
        let s1 = (PI * reduce(xi[0])).sin();
        let s2 = (PI * reduce(xi[1])).sin();
        self.m * self.m + 4.0 * (s1 * s1 + s2 * s2)
    }

    /// ∇r_m(ξ) = 4π(sin 2πξ₁, sin 2πξ₂).
    pub fn grad_r(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            4.0 * PI * (2.0 * PI * reduce(xi[0])).sin(),
            4.0 * PI * (2.0 * PI * reduce(xi[1])).sin(),
        ]
    }
}

/// The three band values at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandTriple {
    pub z_minus: f64,
    pub z_zero: f64,
    pub z_plus: f64,
}

impl BandTriple {
    pub fn sorted(&self) -> [f64; 3] {
        [self.z_minus, self.z_zero, self.z_plus]
    }
}

/// h₀(ξ) as a dense Hermitian 3×3 matrix.
pub fn eval_symbol(xi: [f64; 2], m: f64) -> Array2<Complex64> {
    let sym = FiberSymbol::new(m);
    let a = sym.a(xi[0]);
    let b = sym.b(xi[1]);
    let zr = |x: f64| Complex64::new(x, 0.0);
    let mut h = Array2::zeros((3, 3));
    h[[0, 0]] = zr(m);
    h[[0, 1]] = a;
    h[[0, 2]] = b;
    h[[1, 0]] = a.conj();
    h[[1, 1]] = zr(-m);
    h[[2, 0]] = b.conj();
    h[[2, 2]] = zr(-m);
    h
}

/// Closed-form band triple (z₋, z₀, z₊) = (−√r_m, −m, √r_m).
pub fn band_values(xi: [f64; 2], m: f64) -> BandTriple {
    let r = FiberSymbol::new(m).r(xi);
    let s = r.sqrt();
    BandTriple { z_minus: -s, z_zero: -m, z_plus: s }
}

/// Gradient of the upper band, ∇z₊(ξ) = (2π/√r_m)(sin 2πξ₁, sin 2πξ₂).
/// The lower band's gradient is the negation. At the Dirac point (m = 0,
/// ξ = 0) the bands form a cone and the gradient does not exist.
pub fn band_gradient(xi: [f64; 2], m: f64) -> Result<[f64; 2], FiberError> {
    let sym = FiberSymbol::new(m);
    let r = sym.r(xi);
    if r == 0.0 {
        return Err(FiberError::DiracPoint);
    }
    let c = 2.0 * PI / r.sqrt();
    Ok([
        c * (2.0 * PI * reduce(xi[0])).sin(),
        c * (2.0 * PI * reduce(xi[1])).sin(),
    ])
}

/// p_ξ(z) = (m−z)(m+z)² + (m+z)(|a|² + |b|²) = (m+z)(r_m(ξ) − z²), real z.
pub fn characteristic_poly(xi: [f64; 2], m: f64, z: f64) -> f64 {
    let sym = FiberSymbol::new(m);
    let ab2 = sym.r(xi) - m * m;
    (m - z) * (m + z) * (m + z) + (m + z) * ab2
}

fn characteristic_poly_complex(xi: [f64; 2], m: f64, z: Complex64) -> Complex64 {
    let sym = FiberSymbol::new(m);
    let ab2 = sym.r(xi) - m * m;
    let mp = z + m;
    let mm = -z + m;
    mm * mp * mp + mp * ab2
}

/// Explicit fiber resolvent (h₀(ξ) − z)^{−1}.
///
/// The inverse has the closed form
///
/// ```text
///   1   ⎛ (m+z)²       (m+z)a        (m+z)b       ⎞
///   ─── ⎜ (m+z)ā    z² − m² − |b|²     āb          ⎟
///   p(z) ⎝ (m+z)b̄       ab̄         z² − m² − |a|² ⎠
/// ```
///
/// which the tests verify against the defining identity and a direct
/// inverse. Rejects z with |p_ξ(z)| ≤ 1e−12 as numerically on a band.
pub fn resolvent_fiber(xi: [f64; 2], m: f64, z: Complex64) -> Result<Array2<Complex64>, FiberError> {
    let p = characteristic_poly_complex(xi, m, z);
    if p.norm() <= 1e-12 {
        return Err(FiberError::SingularResolvent { p_abs: p.norm() });
    }
    let sym = FiberSymbol::new(m);
    let a = sym.a(xi[0]);
    let b = sym.b(xi[1]);
    let mz = z + m;
    let z2m2 = z * z - m * m;
    let mut g = Array2::zeros((3, 3));
    g[[0, 0]] = mz * mz;
    g[[0, 1]] = mz * a;
    g[[0, 2]] = mz * b;
    g[[1, 0]] = mz * a.conj();
    g[[1, 1]] = z2m2 - b.norm_sqr();
    g[[1, 2]] = a.conj() * b;
    g[[2, 0]] = mz * b.conj();
    g[[2, 1]] = a * b.conj();
    g[[2, 2]] = z2m2 - a.norm_sqr();
    g.mapv_inplace(|x| x / p);
    Ok(g)
}

/// Threshold kinds, named for the local geometry of the band at the
/// critical momentum that produces the threshold value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Elliptic,
    Hyperbolic,
    FlatBand,
    DiracPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub value: f64,
    pub kind: ThresholdKind,
}

/// The threshold set, ascending in value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSet {
    pub thresholds: Vec<Threshold>,
}

impl ThresholdSet {
    pub fn values(&self) -> Vec<f64> {
        self.thresholds.iter().map(|t| t.value).collect()
    }
}

/// Central finite-difference Hessian of z₊ at ξ, step 1e-5.
fn band_hessian(xi: [f64; 2], m: f64) -> [[f64; 2]; 2] {
    let h = 1e-5;
    let f = |p: [f64; 2]| band_values(p, m).z_plus;
    let dxx = (f([xi[0] + h, xi[1]]) - 2.0 * f(xi) + f([xi[0] - h, xi[1]])) / (h * h);
    let dyy = (f([xi[0], xi[1] + h]) - 2.0 * f(xi) + f([xi[0], xi[1] - h])) / (h * h);
    let dxy = (f([xi[0] + h, xi[1] + h]) - f([xi[0] + h, xi[1] - h]) - f([xi[0] - h, xi[1] + h])
        + f([xi[0] - h, xi[1] - h]))
        / (4.0 * h * h);
    [[dxx, dxy], [dxy, dyy]]
}

/// Kind of the critical point of z₊ at ξ from the Hessian signature:
/// definite ↔ elliptic, indefinite ↔ hyperbolic.
fn hessian_kind(xi: [f64; 2], m: f64) -> Result<ThresholdKind, FiberError> {
    let hess = band_hessian(xi, m);
    let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
    // scale-aware degeneracy guard: FD Hessian entries here are O(1)..O(10)
    if det.abs() < 1e-3 {
        return Err(FiberError::DegenerateHessian { xi1: xi[0], xi2: xi[1] });
    }
    Ok(if det > 0.0 { ThresholdKind::Elliptic } else { ThresholdKind::Hyperbolic })
}

/// Classifies the spectral thresholds of the operator at mass m.
///
/// The candidate values are the critical values of the dispersive bands at
/// the four momenta with ∇z± = 0, namely ξ ∈ {0, 1/2}², plus the flat band
/// at −m. Each dispersive kind is derived from the finite-difference
/// Hessian signature of z₊, never hard-coded. For m > 0 the result is
/// {±m, ±√(m²+4), ±√(m²+8)}; the value −m is labeled flat_band (it is also
/// the maximum of z₋, a coincidence recorded here and exploited nowhere).
/// For m = 0 the conical touching at ξ = 0 is labeled dirac_point and the
/// set degenerates to {0, ±2, ±√8}.
pub fn classify_thresholds(m: f64) -> Result<ThresholdSet, FiberError> {
    assert!(m >= 0.0, "mass must be nonnegative");
    let mut out: Vec<Threshold> = Vec::new();
    // z₊ critical values at the saddle and the interior maximum
    let saddle = (m * m + 4.0).sqrt();
    let top = (m * m + 8.0).sqrt();
    let kind_saddle = hessian_kind([0.5, 0.0], m)?;
    let kind_top = hessian_kind([0.5, 0.5], m)?;
    if m > 0.0 {
        let kind_bottom = hessian_kind([0.0, 0.0], m)?;
        out.push(Threshold { value: m, kind: kind_bottom });
        out.push(Threshold { value: -m, kind: ThresholdKind::FlatBand });
    } else {
        out.push(Threshold { value: 0.0, kind: ThresholdKind::DiracPoint });
    }
    out.push(Threshold { value: saddle, kind: kind_saddle });
    out.push(Threshold { value: -saddle, kind: kind_saddle });
    out.push(Threshold { value: top, kind: kind_top });
    out.push(Threshold { value: -top, kind: kind_top });
    out.sort_by(|s, t| s.value.partial_cmp(&t.value).unwrap());
    Ok(ThresholdSet { thresholds: out })
}
