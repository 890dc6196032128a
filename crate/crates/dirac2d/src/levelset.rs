//! Level-curve quadrature for the band function r(ξ) and the asymptotic
//! constants of the eigenvalue accumulation at the flat band.
//!
//! Everything here reduces to one-dimensional integrals through the
//! substitution t = 4sin²(πξ₁), s = 4sin²(πξ₂).  On the level set
//! r_m = m² + t + s = ρ the admissible t-range is [max(0, ρ̃−4), min(4, ρ̃)]
//! with ρ̃ = ρ − m², one quadrant of the curve is the graph
//! ξ(t) = (arcsin(√t/2)/π, arcsin(√(ρ̃−t)/2)/π), and
//!
//! ```text
//!   dγ/|∇r| = dt / (4π² √( t(4−t)(ρ̃−t)(4−ρ̃+t) ))
//! ```
//!
//! The weight has inverse-square-root singularities at both ends of the
//! t-range; substituting t = end ± σ² removes them exactly, and dyadic
//! quadrature panels toward σ = 0 absorb the remaining near-singularity
//! when ρ̃ approaches the van Hove level 4, where the density grows like
//! ln(1/|ρ̃−4|).

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::quad::{gauss_legendre, integrate_gl_panels, midpoint_torus_2d};

/// Absolute tolerance for deciding that a level sits on a threshold.
pub const THRESHOLD_LEVEL_TOL: f64 = 1e-10;

/// Counting constants of the model weight v₀(μ) = ⟨μ⟩^{−γ} on Z²: the
/// super-level sets are lattice discs, so n₊(λ) ~ π·λ^{−2/γ} and there is
/// no negative part.
pub const POWER_DECAY_C_PLUS: f64 = PI;
pub const POWER_DECAY_C_MINUS: f64 = 0.0;

#[derive(Debug, Error)]
pub enum LevelSetError {
    #[error("level u = {u} sits on a spectral threshold")]
    ThresholdLevel { u: f64 },
    #[error("level u = {u} has u² outside the band range (m², m²+8)")]
    OutOfRange { u: f64 },
    #[error("decay exponent gamma = {gamma} is too weak for the counting law (needs gamma > {needs})")]
    DecayTooWeak { gamma: f64, needs: f64 },
    #[error("amplitude {name} = {value} is negative")]
    NegativeAmplitude { name: &'static str, value: f64 },
    #[error("need at least {need} quadrature nodes, got {got}")]
    TooFewNodes { got: usize, need: usize },
    #[error("symbol grid resolution {got} is below the minimum {need}")]
    GridTooCoarse { got: usize, need: usize },
    #[error("got {symbols} symbol grids but {amplitudes} amplitudes")]
    MismatchedLists { symbols: usize, amplitudes: usize },
    #[error("symbol grid {index} is {rows}×{cols}, expected square grids of one common size")]
    BadGridShape { index: usize, rows: usize, cols: usize },
}

/// Validates the level and returns ρ̃ = u² − m² ∈ (0, 8) \ {4}.
fn reduced_level(m: f64, u: f64) -> Result<f64, LevelSetError> {
    let rho = u * u;
    let m2 = m * m;
    for threshold in [m2, m2 + 4.0, m2 + 8.0] {
        if (rho - threshold).abs() <= THRESHOLD_LEVEL_TOL {
            return Err(LevelSetError::ThresholdLevel { u });
        }
    }
    if rho < m2 || rho > m2 + 8.0 {
        return Err(LevelSetError::OutOfRange { u });
    }
    Ok(rho - m2)
}

/// Dyadic break points 0, a·2^{−k}, a·2^{−k+1}, …, a.
fn dyadic_breaks(a: f64, k: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(k + 2);
    v.push(0.0);
    for j in (0..=k as i32).rev() {
        v.push(a * 2f64.powi(-j));
    }
    v
}

/// ∫ h(t) dt / √(t(4−t)(ρ̃−t)(4−ρ̃+t)) over the admissible t-range.
///
/// The two singular endpoint factors are split off analytically and removed
/// by the σ² substitution, so the panels only have to resolve the smooth
/// remainder and the near-singularity that appears for ρ̃ near 4.
fn weighted_t_integral(rho_t: f64, nodes: usize, h: &dyn Fn(f64) -> f64) -> f64 {
    let lo = (rho_t - 4.0).max(0.0);
    let hi = rho_t.min(4.0);
    let mid = 0.5 * (lo + hi);
    // Nonsingular part of the weight polynomial on [lo, hi]:
    // t(4−t)(ρ̃−t)(4−ρ̃+t) = (t−lo)(hi−t)·smooth(t).
    let smooth = move |t: f64| -> f64 {
        if rho_t <= 4.0 {
            (4.0 - t) * (4.0 - rho_t + t)
        } else {
            t * (rho_t - t)
        }
    };
    let a = (mid - lo).sqrt();
    let breaks = dyadic_breaks(a, 40);
    let lower = integrate_gl_panels(
        |sigma| {
            let t = lo + sigma * sigma;
            2.0 * h(t) / ((hi - t) * smooth(t)).sqrt()
        },
        &breaks,
        nodes,
    );
    let upper = integrate_gl_panels(
        |sigma| {
            let t = hi - sigma * sigma;
            2.0 * h(t) / ((t - lo) * smooth(t)).sqrt()
        },
        &breaks,
        nodes,
    );
    lower + upper
}

fn quadrant_point(rho_t: f64, t: f64) -> (f64, f64) {
    let xi1 = (0.5 * t.sqrt()).clamp(-1.0, 1.0).asin() / PI;
    let xi2 = (0.5 * (rho_t - t).max(0.0).sqrt()).clamp(-1.0, 1.0).asin() / PI;
    (xi1, xi2)
}

/// The density R(u) = ∫_{r^{−1}(u²)} dγ/|∇r| over the full torus curve.
pub fn coarea_density(m: f64, u: f64) -> Result<f64, LevelSetError> {
    coarea_density_with(m, u, 16)
}

/// Same with an explicit Gauss order per panel, for refinement studies.
pub fn coarea_density_with(m: f64, u: f64, nodes: usize) -> Result<f64, LevelSetError> {
    if nodes < 2 {
        return Err(LevelSetError::TooFewNodes { got: nodes, need: 2 });
    }
    let rho_t = reduced_level(m, u)?;
    Ok(weighted_t_integral(rho_t, nodes, &|_| 1.0) / (PI * PI))
}

/// Curve integral ∫ g dγ/|∇r| over the full torus level set, assembled from
/// the first-quadrant parametrization and its three mirror images.
fn curve_integral(rho_t: f64, nodes: usize, g: &dyn Fn(f64, f64) -> f64) -> f64 {
    weighted_t_integral(rho_t, nodes, &|t| {
        let (x1, x2) = quadrant_point(rho_t, t);
        g(x1, x2) + g(1.0 - x1, x2) + g(x1, 1.0 - x2) + g(1.0 - x1, 1.0 - x2)
    }) / (4.0 * PI * PI)
}

/// Convergence report attached to a coarea evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureDiagnostics {
    /// |value − value at the next-lower Gauss order|
    pub refinement_delta: f64,
    /// integrand evaluations spent on the reported value
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoareaIntegral {
    pub value: f64,
    pub diagnostics: QuadratureDiagnostics,
}

/// Breaks for the ρ̃-integration over (0, 8): dyadic refinement toward the
/// band edges 0 and 8 and toward the logarithmic level 4 from both sides.
fn rho_breaks() -> Vec<f64> {
    let k = 36;
    let mut breaks = Vec::new();
    for b in dyadic_breaks(2.0, k) {
        breaks.push(b);
    }
    for b in dyadic_breaks(2.0, k).iter().rev() {
        breaks.push(4.0 - b);
    }
    for b in dyadic_breaks(2.0, k) {
        breaks.push(4.0 + b);
    }
    for b in dyadic_breaks(2.0, k).iter().rev() {
        breaks.push(8.0 - b);
    }
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
    breaks
}

/// Evaluates ∫_{T²} g dξ through the coarea formula: the ρ-integral of the
/// level-curve integrals of g/|∇r|.
///
/// The result carries quadrature diagnostics instead of failing: the value
/// is computed at Gauss orders 12 and 16 per panel and the difference is
/// reported as `refinement_delta`.
pub fn coarea_integral(m: f64, g: impl Fn(f64, f64) -> f64) -> CoareaIntegral {
    // the substitution ρ̃ = u² − m² removes the mass from the full-band
    // integral, so m is only validated here
    debug_assert!(m >= 0.0);
    let breaks = rho_breaks();
    let mut evaluations = std::cell::Cell::new(0usize);
    let run = |nodes: usize, evals: &std::cell::Cell<usize>| {
        integrate_gl_panels(
            |rho_t| {
                curve_integral(rho_t, nodes, &|x1, x2| {
                    evals.set(evals.get() + 1);
                    g(x1, x2)
                })
            },
            &breaks,
            nodes,
        )
    };
    let coarse = run(12, &evaluations);
    evaluations = std::cell::Cell::new(0);
    let value = run(16, &evaluations);
    CoareaIntegral {
        value,
        diagnostics: QuadratureDiagnostics {
            refinement_delta: (value - coarse).abs(),
            evaluations: evaluations.get(),
        },
    }
}

/// One quadrature node of a level-curve parametrization.
#[derive(Debug, Clone, Copy)]
pub struct CurveNode {
    /// parameter t = 4sin²(πξ₁)
    pub t: f64,
    /// first-quadrant point on the curve
    pub xi: (f64, f64),
    /// arc-length weight dγ_i of this node
    pub weight: f64,
}

/// Quadrature nodes for one quadrant of the level curve r^{−1}(ρ); the full
/// curve is this arc plus its mirror images under ξᵢ ↦ 1 − ξᵢ.
#[derive(Debug, Clone)]
pub struct LevelCurve {
    /// the level ρ = u²
    pub level: f64,
    pub nodes: Vec<CurveNode>,
}

impl LevelCurve {
    /// Arc length of the stored quadrant.
    pub fn quadrant_arc_length(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Arc length of the full torus curve.
    pub fn arc_length(&self) -> f64 {
        4.0 * self.quadrant_arc_length()
    }
}

/// Builds the first-quadrant parametrization of r^{−1}(u²) with `n_nodes`
/// Gauss nodes on each of the two segments meeting at the t-midpoint.
pub fn level_curve(m: f64, u: f64, n_nodes: usize) -> Result<LevelCurve, LevelSetError> {
    if n_nodes < 16 {
        return Err(LevelSetError::TooFewNodes { got: n_nodes, need: 16 });
    }
    let rho_t = reduced_level(m, u)?;
    let lo = (rho_t - 4.0).max(0.0);
    let hi = rho_t.min(4.0);
    let mid = 0.5 * (lo + hi);
    let a = (mid - lo).sqrt();
    let (gx, gw) = gauss_legendre(n_nodes);
    // dγ = √(ξ₁'² + ξ₂'²) dt with ξ'(t) = 1/(2π√(q(4−q))) at q = t, ρ̃−t;
    // the σ-substitution keeps the weight finite at the segment ends.
    let arc_weight = |t: f64| -> f64 {
        let q1 = (t * (4.0 - t)).max(0.0);
        let q2 = ((rho_t - t) * (4.0 - rho_t + t)).max(0.0);
        (1.0 / q1 + 1.0 / q2).sqrt() / (2.0 * PI)
    };
    let mut nodes = Vec::with_capacity(2 * n_nodes);
    // lower segment, t = lo + σ²
    for (x, w) in gx.iter().zip(&gw) {
        let sigma = 0.5 * a * (x + 1.0);
        let t = lo + sigma * sigma;
        let dt = 2.0 * sigma * (0.5 * a * w);
        nodes.push(CurveNode { t, xi: quadrant_point(rho_t, t), weight: arc_weight(t) * dt });
    }
    // upper segment, t = hi − σ², reversed so t increases along the arc
    for (x, w) in gx.iter().zip(&gw).rev() {
        let sigma = 0.5 * a * (x + 1.0);
        let t = hi - sigma * sigma;
        let dt = 2.0 * sigma * (0.5 * a * w);
        nodes.push(CurveNode { t, xi: quadrant_point(rho_t, t), weight: arc_weight(t) * dt });
    }
    Ok(LevelCurve { level: u * u, nodes })
}

/// Quadrature resolution for the asymptotic constants.
#[derive(Debug, Clone, Copy)]
pub struct ConstantQuadSpec {
    /// midpoint grid resolution per dimension
    pub resolution: usize,
    /// refine once at double resolution and Richardson-extrapolate the
    /// leading 1/n² error of the midpoint rule
    pub richardson: bool,
}

impl Default for ConstantQuadSpec {
    fn default() -> Self {
        ConstantQuadSpec { resolution: 1024, richardson: true }
    }
}

/// The accumulation constant 𝒞 = π ∫_{T²} ((Γ₂|b|² + Γ₃|a|²)/r)^{2/γ} dξ
/// with a = −1+e^{−2πiξ₁}, b = −1+e^{−2πiξ₂}, r = |a|² + |b|².
///
/// The trace of the matrix power collapses to this scalar integrand because
/// the symbol matrix has a single nonzero column.  At ξ = 0 the integrand
/// is a 0/0 form and is assigned its angular average ((Γ₂+Γ₃)/2)^{2/γ};
/// it is bounded, so the assignment is invisible at quadrature tolerance
/// (and the midpoint grid never samples ξ = 0 anyway).
pub fn asymptotic_constant_c(
    gamma: f64,
    gamma2: f64,
    gamma3: f64,
    spec: &ConstantQuadSpec,
) -> Result<f64, LevelSetError> {
    if !(gamma > 2.0) {
        return Err(LevelSetError::DecayTooWeak { gamma, needs: 2.0 });
    }
    for (name, value) in [("Gamma2", gamma2), ("Gamma3", gamma3)] {
        if value < 0.0 {
            return Err(LevelSetError::NegativeAmplitude { name, value });
        }
    }
    if spec.resolution < 16 {
        return Err(LevelSetError::GridTooCoarse { got: spec.resolution, need: 16 });
    }
    let e = 2.0 / gamma;
    let f = move |x1: f64, x2: f64| -> f64 {
        let t = 4.0 * (PI * x1).sin().powi(2);
        let s = 4.0 * (PI * x2).sin().powi(2);
        let r = t + s;
        if r < 1e-300 {
            (0.5 * (gamma2 + gamma3)).powf(e)
        } else {
            ((gamma2 * s + gamma3 * t) / r).powf(e)
        }
    };
    let v1 = midpoint_torus_2d(f, spec.resolution);
    let value = if spec.richardson {
        let v2 = midpoint_torus_2d(f, 2 * spec.resolution);
        (4.0 * v2 - v1) / 3.0
    } else {
        v1
    };
    Ok(PI * value)
}

/// The sandwiched-symbol counting constants 𝒞_{B±} = c_± ∫_{T^d} (Σ_k Γ_k |B_k(ξ)|²)^{d/γ} dξ
/// from symbol samples on the n×n midpoint grid of the torus.
pub fn asymptotic_constant_cb(
    gamma: f64,
    d: usize,
    c_plus: f64,
    c_minus: f64,
    symbols: &[Array2<Complex64>],
    amplitudes: &[f64],
) -> Result<(f64, f64), LevelSetError> {
    if !(gamma > d as f64) {
        return Err(LevelSetError::DecayTooWeak { gamma, needs: d as f64 });
    }
    if symbols.len() != amplitudes.len() {
        return Err(LevelSetError::MismatchedLists {
            symbols: symbols.len(),
            amplitudes: amplitudes.len(),
        });
    }
    let mut n = 0usize;
    for (index, grid) in symbols.iter().enumerate() {
        let (rows, cols) = grid.dim();
        if rows != cols || (n != 0 && rows != n) {
            return Err(LevelSetError::BadGridShape { index, rows, cols });
        }
        n = rows;
    }
    if n < 64 {
        return Err(LevelSetError::GridTooCoarse { got: n, need: 64 });
    }
    let e = d as f64 / gamma;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut w = 0.0;
            for (grid, amp) in symbols.iter().zip(amplitudes) {
                w += amp * grid[[i, j]].norm_sqr();
            }
            sum += w.powf(e);
        }
    }
    let integral = sum / (n * n) as f64;
    Ok((c_plus * integral, c_minus * integral))
}

/// Record of the evaluated constants for one parameter set.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticConstants {
    pub gamma: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// the gap-side accumulation constant 𝒞
    pub c_value: f64,
    /// sandwiched-symbol constants when symbol samples were supplied
    pub cb_plus: Option<f64>,
    pub cb_minus: Option<f64>,
    /// counting constants of the weight ⟨μ⟩^{−γ}
    pub c_plus: f64,
    pub c_minus: f64,
}

pub fn asymptotic_constants(
    gamma: f64,
    gamma2: f64,
    gamma3: f64,
    spec: &ConstantQuadSpec,
) -> Result<AsymptoticConstants, LevelSetError> {
    let c_value = asymptotic_constant_c(gamma, gamma2, gamma3, spec)?;
    Ok(AsymptoticConstants {
        gamma,
        gamma2,
        gamma3,
        c_value,
        cb_plus: None,
        cb_minus: None,
        c_plus: POWER_DECAY_C_PLUS,
        c_minus: POWER_DECAY_C_MINUS,
    })
}
