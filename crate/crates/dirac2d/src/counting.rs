//! Eigenvalue counting in the spectral gap via matrix inertia.
//!
//! By Sylvester's law of inertia the number of eigenvalues of a symmetric
//! matrix H strictly below λ equals the number of negative pivots in a
//! symmetric indefinite factorization of H − λI.  This costs one sparse
//! factorization per shift instead of a full diagonalization, which is what
//! makes boxes with side length in the hundreds tractable.
//!
//! The factorization backend is chosen per matrix: small or unstructured
//! problems go through the dense Bunch-Kaufman routine, everything else is
//! reordered with reverse Cuthill-McKee and factorized as a band matrix.
//! Shifts that land on an eigenvalue surface as [`CountingError::ShiftCollision`];
//! the series drivers retry with nudged shifts before giving up.

use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{
    assemble_hamiltonian, ComponentSpec, LatticeBox, LatticeError, Potential, Sign,
    SymmetricSparseMatrix,
};
use crate::linalg::{
    band_ldlt_inertia, dense_inertia, permuted_bandwidth, rcm_order, BandError, BandMatrix,
    LinalgError,
};
use crate::series::{CountingSeries, OperatorTag, PowerLawFit, SeriesError, SeriesMeta};

/// Offset of the counting reference point from the band edge +m.  Counting
/// "eigenvalues in (λ, m)" is realized as count(m − ε) − count(λ), so the
/// band edge itself is never included.
pub const GAP_EDGE_EPS: f64 = 1e-8;

/// Shift offsets tried in order when a factorization collides with an
/// eigenvalue: the plain shift plus three retries.
const NUDGE_OFFSETS: [f64; 4] = [0.0, 1e-9, -1e-9, 2e-9];

/// Relative pivot threshold below which a factorization counts as collided.
const PIVOT_REL_TOL: f64 = 1e-13;

/// Dense factorization above this order would need gigabytes; refuse.
const DENSE_MAX_N: usize = 8192;

/// Upper bound on band-factorization storage in bytes.
const BAND_MAX_BYTES: usize = 3_200_000_000;

#[derive(Debug, Error)]
pub enum CountingError {
    #[error("shift {lambda} collides with an eigenvalue within factorization tolerance")]
    ShiftCollision { lambda: f64 },
    #[error("matrix too large to factorize: n = {n}, bandwidth = {bandwidth}")]
    TooLarge { n: usize, bandwidth: usize },
    #[error("power-law fit needs at least 5 usable points, got {got}")]
    FitInsufficientPoints { got: usize },
    #[error("power-law fit window spans only a factor {ratio:.3}, need at least 10")]
    FitSpanTooNarrow { ratio: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("band factorization failed: {0}")]
    Band(BandError),
}

/// Factorization backend selection for [`inertia_count_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountStrategy {
    /// Pick per matrix: dense for small orders, band when the reordered
    /// bandwidth is small enough to pay off.
    Auto,
    Band,
    Dense,
}

enum Plan {
    Dense,
    Band { inv_perm: Vec<usize>, bandwidth: usize },
}

fn make_plan(m: &SymmetricSparseMatrix, strategy: CountStrategy) -> Result<Plan, CountingError> {
    let n = m.n;
    let band_plan = || -> Result<Plan, CountingError> {
        let perm = rcm_order(n, &m.row_ptr, &m.col_idx);
        let bandwidth = permuted_bandwidth(n, &m.row_ptr, &m.col_idx, &perm);
        let bytes = n
            .saturating_mul(bandwidth + 1)
            .saturating_mul(std::mem::size_of::<f64>());
        if bytes > BAND_MAX_BYTES {
            return Err(CountingError::TooLarge { n, bandwidth });
        }
        let mut inv_perm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }
        Ok(Plan::Band { inv_perm, bandwidth })
    };
    match strategy {
        CountStrategy::Dense => {
            if n > DENSE_MAX_N {
                return Err(CountingError::TooLarge { n, bandwidth: n });
            }
            Ok(Plan::Dense)
        }
        CountStrategy::Band => band_plan(),
        CountStrategy::Auto => {
            if n <= 1024 {
                return Ok(Plan::Dense);
            }
            match band_plan()? {
                // A bandwidth of n/2 stores as much as the dense triangle;
                // at that point the band solver has no advantage.
                Plan::Band { bandwidth, .. } if bandwidth + 1 >= n / 2 => {
                    if n > DENSE_MAX_N {
                        return Err(CountingError::TooLarge { n, bandwidth });
                    }
                    Ok(Plan::Dense)
                }
                plan => Ok(plan),
            }
        }
    }
}

fn count_with_plan(
    m: &SymmetricSparseMatrix,
    plan: &Plan,
    lambda: f64,
) -> Result<usize, CountingError> {
    match plan {
        Plan::Dense => {
            let mut a = m.to_dense();
            let mut max_abs = lambda.abs();
            for i in 0..m.n {
                a[[i, i]] -= lambda;
            }
            for v in a.iter() {
                max_abs = max_abs.max(v.abs());
            }
            let (neg, zero, _pos) = dense_inertia(&mut a, PIVOT_REL_TOL * max_abs)?;
            if zero > 0 {
                return Err(CountingError::ShiftCollision { lambda });
            }
            Ok(neg)
        }
        Plan::Band { inv_perm, bandwidth } => {
            let mut band = BandMatrix::zeros(m.n, *bandwidth);
            for i in 0..m.n {
                let ni = inv_perm[i];
                for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                    let nj = inv_perm[m.col_idx[k]];
                    if nj <= ni {
                        band.set(ni, nj, m.values[k]);
                    }
                }
            }
            band.shift_diagonal(lambda);
            match band_ldlt_inertia(&mut band, PIVOT_REL_TOL) {
                Ok(inertia) => Ok(inertia.negative),
                Err(BandError::PivotBreakdown { .. }) => {
                    Err(CountingError::ShiftCollision { lambda })
                }
                Err(e) => Err(CountingError::Band(e)),
            }
        }
    }
}

/// Number of eigenvalues of `m` strictly below `lambda`.
///
/// Fails with [`CountingError::ShiftCollision`] when `lambda` sits on an
/// eigenvalue within factorization tolerance; the caller decides how to
/// nudge.  The series drivers in this module retry automatically.
pub fn inertia_count(m: &SymmetricSparseMatrix, lambda: f64) -> Result<usize, CountingError> {
    inertia_count_with(m, lambda, CountStrategy::Auto)
}

pub fn inertia_count_with(
    m: &SymmetricSparseMatrix,
    lambda: f64,
    strategy: CountStrategy,
) -> Result<usize, CountingError> {
    let plan = make_plan(m, strategy)?;
    count_with_plan(m, &plan, lambda)
}

fn count_below_nudged(
    m: &SymmetricSparseMatrix,
    plan: &Plan,
    lambda: f64,
) -> Result<usize, CountingError> {
    let mut last = CountingError::ShiftCollision { lambda };
    for off in NUDGE_OFFSETS {
        match count_with_plan(m, plan, lambda + off) {
            Ok(c) => return Ok(c),
            Err(e @ CountingError::ShiftCollision { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn potential_meta(potential: Option<&Potential>) -> (Option<f64>, Option<f64>, Option<f64>) {
    let Some(p) = potential else {
        return (None, None, None);
    };
    match (&p.v2, &p.v3) {
        (
            ComponentSpec::PowerDecay { amplitude: a2, decay: d2 },
            ComponentSpec::PowerDecay { amplitude: a3, decay: d3 },
        ) if d2 == d3 => (Some(*d2), Some(*a2), Some(*a3)),
        _ => (None, None, None),
    }
}

/// Counts eigenvalues of H (free or perturbed) in the interval (λ, m) for
/// every λ on the grid: N(λ) = count(m − ε) − count(λ).
///
/// For H₊ with λ ↓ −m this is the accumulation count whose growth rate the
/// power-law fit extracts.  Shift collisions are retried with nudged λ.
pub fn counting_series(
    boxx: &LatticeBox,
    m: f64,
    potential: Option<&Potential>,
    sign: Sign,
    lambda_grid: &[f64],
) -> Result<CountingSeries, CountingError> {
    let h = assemble_hamiltonian(boxx, m, potential, potential.map(|_| sign))?;
    let plan = make_plan(&h, CountStrategy::Auto)?;
    let at_edge = count_below_nudged(&h, &plan, m - GAP_EDGE_EPS)? as i64;
    let counts = lambda_grid
        .par_iter()
        .map(|&lam| count_below_nudged(&h, &plan, lam).map(|c| at_edge - c as i64))
        .collect::<Result<Vec<_>, _>>()?;
    let operator = match (potential, sign) {
        (None, _) => OperatorTag::H0,
        (Some(_), Sign::Plus) => OperatorTag::HPlus,
        (Some(_), Sign::Minus) => OperatorTag::HMinus,
    };
    let (gamma, gamma2, gamma3) = potential_meta(potential);
    let meta = SeriesMeta {
        operator,
        l: boxx.side_length,
        m,
        gamma,
        gamma2,
        gamma3,
    };
    Ok(CountingSeries::new(lambda_grid.to_vec(), counts, meta)?)
}

/// Finite-volume spectral-shift proxy η_L(λ) = count(H₀, λ) − count(H±, λ).
///
/// For V ≥ 0 and sign `Plus` every value is in [0, rank V]; with sign
/// `Minus` the values are nonpositive.  Both operators live on the same box
/// and both counts use the same nudged shift, so a collision on either
/// operator advances the nudge ladder for the pair.
pub fn finite_volume_ssf(
    boxx: &LatticeBox,
    m: f64,
    potential: &Potential,
    sign: Sign,
    lambda_grid: &[f64],
) -> Result<CountingSeries, CountingError> {
    let h0 = assemble_hamiltonian(boxx, m, None, None)?;
    let hs = assemble_hamiltonian(boxx, m, Some(potential), Some(sign))?;
    let plan0 = make_plan(&h0, CountStrategy::Auto)?;
    let plans = make_plan(&hs, CountStrategy::Auto)?;
    let counts = lambda_grid
        .par_iter()
        .map(|&lam| -> Result<i64, CountingError> {
            let mut last = CountingError::ShiftCollision { lambda: lam };
            for off in NUDGE_OFFSETS {
                let c0 = match count_with_plan(&h0, &plan0, lam + off) {
                    Ok(c) => c,
                    Err(e @ CountingError::ShiftCollision { .. }) => {
                        last = e;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                match count_with_plan(&hs, &plans, lam + off) {
                    Ok(cs) => return Ok(c0 as i64 - cs as i64),
                    Err(e @ CountingError::ShiftCollision { .. }) => last = e,
                    Err(e) => return Err(e),
                }
            }
            Err(last)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (gamma, gamma2, gamma3) = potential_meta(Some(potential));
    let meta = SeriesMeta {
        operator: OperatorTag::Ssf,
        l: boxx.side_length,
        m,
        gamma,
        gamma2,
        gamma3,
    };
    Ok(CountingSeries::new(lambda_grid.to_vec(), counts, meta)?)
}

/// Finite-size validity floor for power-law fits on a box of side `l`:
/// counts at |λ − ref| below the momentum-resolution scale (2π/L)²·8 are
/// treated as saturated and excluded.  This is a reported heuristic, not a
/// sharp bound; every fit carries the floor it applied.
pub fn validity_floor(l: usize) -> f64 {
    if l < 2 {
        return 0.0;
    }
    let h = 2.0 * std::f64::consts::PI / l as f64;
    h * h * 8.0
}

/// Least-squares power-law fit N ≈ c·|λ − ref|^{−p} in log-log coordinates.
///
/// Uses only grid points with count ≥ 1 and |λ − ref| at or above the
/// validity floor of the series' box.  Requires at least 5 such points
/// spanning at least one decade of |λ − ref|.
pub fn fit_power_law(
    series: &CountingSeries,
    reference_point: f64,
) -> Result<PowerLawFit, CountingError> {
    let floor = validity_floor(series.meta.l);
    let mut xs = Vec::new();
    let mut logs = Vec::new();
    for (&lam, &n) in series.lambda_grid.iter().zip(&series.counts) {
        let x = (lam - reference_point).abs();
        if n >= 1 && x >= floor && x > 0.0 {
            xs.push(x);
            logs.push((x.ln(), (n as f64).ln()));
        }
    }
    if logs.len() < 5 {
        return Err(CountingError::FitInsufficientPoints { got: logs.len() });
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, 0.0f64);
    for &x in &xs {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
    }
    let ratio = x_max / x_min;
    if ratio < 10.0 {
        return Err(CountingError::FitSpanTooNarrow { ratio });
    }
    let n = logs.len() as f64;
    let mean_u = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_v = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for &(u, v) in &logs {
        cov += (u - mean_u) * (v - mean_v);
        var += (u - mean_u) * (u - mean_u);
    }
    let slope = cov / var;
    let intercept = mean_v - slope * mean_u;
    let mut rss = 0.0;
    for &(u, v) in &logs {
        let r = v - (slope * u + intercept);
        rss += r * r;
    }
    Ok(PowerLawFit {
        exponent: -slope,
        constant: intercept.exp(),
        residual: (rss / n).sqrt(),
        window: (x_min, x_max),
        points_used: logs.len(),
        validity_floor: floor,
    })
}

/// Multiplicity of the flat-band eigenvalue −m of the free operator,
/// computed as the inertia difference across [−m − 1e−6, −m + 1e−6].
pub fn flat_band_multiplicity(boxx: &LatticeBox, m: f64) -> Result<usize, CountingError> {
    let h0 = assemble_hamiltonian(boxx, m, None, None)?;
    let plan = make_plan(&h0, CountStrategy::Auto)?;
    let above = count_below_nudged(&h0, &plan, -m + 1e-6)?;
    let below = count_below_nudged(&h0, &plan, -m - 1e-6)?;
    Ok(above - below)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, Boundary};
    use crate::linalg::eigvalsh;
    use std::collections::BTreeMap;

    fn dense_count(h: &SymmetricSparseMatrix, lambda: f64) -> usize {
        let mut a = h.to_dense();
        let w = eigvalsh(&mut a).unwrap();
        w.iter().filter(|&&x| x < lambda).count()
    }

    fn power_potential(gamma: f64, g2: f64, g3: f64) -> Potential {
        Potential::new(
            ComponentSpec::Zero,
            ComponentSpec::PowerDecay { amplitude: g2, decay: gamma },
            ComponentSpec::PowerDecay { amplitude: g3, decay: gamma },
        )
    }

    #[test]
    fn count_matches_dense_spectrum_on_free_periodic_box() {
        let boxx = build_lattice(4, Boundary::Periodic).unwrap();
        let h0 = assemble_hamiltonian(&boxx, 1.0, None, None).unwrap();
        // 16 lower-band values plus the 16-fold flat band sit below zero.
        assert_eq!(inertia_count(&h0, 0.0).unwrap(), 32);
        for lam in [-3.2, -1.5, -0.5, 0.5, 1.001, 2.7, 3.2] {
            assert_eq!(inertia_count(&h0, lam).unwrap(), dense_count(&h0, lam), "lambda {lam}");
        }
    }

    #[test]
    fn counts_are_zero_below_and_full_above_the_spectrum() {
        let boxx = build_lattice(6, Boundary::Open).unwrap();
        let pot = power_potential(4.0, 1.0, 1.0);
        let h = assemble_hamiltonian(&boxx, 1.0, Some(&pot), Some(Sign::Plus)).unwrap();
        // Spectrum is contained in [−3, 3 + max V] for m = 1.
        assert_eq!(inertia_count(&h, -4.5).unwrap(), 0);
        assert_eq!(inertia_count(&h, 4.5).unwrap(), boxx.total_dim());
    }

    #[test]
    fn band_and_dense_strategies_agree_with_the_spectrum() {
        let boxx = build_lattice(10, Boundary::Open).unwrap();
        let pot = power_potential(3.0, 0.8, 1.3);
        let h = assemble_hamiltonian(&boxx, 0.5, Some(&pot), Some(Sign::Minus)).unwrap();
        for lam in [-2.9, -0.45, -0.1, 0.3, 1.7] {
            let reference = dense_count(&h, lam);
            let via_band = inertia_count_with(&h, lam, CountStrategy::Band).unwrap();
            let via_dense = inertia_count_with(&h, lam, CountStrategy::Dense).unwrap();
            assert_eq!(via_band, reference, "band strategy at lambda {lam}");
            assert_eq!(via_dense, reference, "dense strategy at lambda {lam}");
        }
    }

    #[test]
    fn exact_eigenvalue_shift_reports_a_collision() {
        let boxx = build_lattice(4, Boundary::Periodic).unwrap();
        let h0 = assemble_hamiltonian(&boxx, 1.0, None, None).unwrap();
        // −1 is the flat-band eigenvalue, so the raw count must refuse.
        let err = inertia_count_with(&h0, -1.0, CountStrategy::Dense).unwrap_err();
        assert!(matches!(err, CountingError::ShiftCollision { .. }));
    }

    #[test]
    fn series_driver_nudges_through_an_exact_eigenvalue() {
        let boxx = build_lattice(4, Boundary::Periodic).unwrap();
        // λ = −m collides with the flat band; the nudge ladder resolves it
        // and the gap of the free operator is empty.
        let series =
            counting_series(&boxx, 1.0, None, Sign::Plus, &[-1.0, -0.5, 0.0, 0.9]).unwrap();
        assert_eq!(series.counts, vec![0, 0, 0, 0]);
        assert_eq!(series.meta.operator, OperatorTag::H0);
        assert_eq!(series.meta.gamma, None);
    }

    #[test]
    fn single_site_potential_sheds_at_most_one_gap_eigenvalue() {
        let boxx = build_lattice(8, Boundary::Open).unwrap();
        let mut site = BTreeMap::new();
        site.insert((0, 0), 1.7);
        let pot = Potential::new(
            ComponentSpec::Table(site),
            ComponentSpec::Zero,
            ComponentSpec::Zero,
        );
        let grid: Vec<f64> = (0..9).map(|j| -0.95 + 0.2 * j as f64).collect();
        let series = counting_series(&boxx, 1.0, Some(&pot), Sign::Plus, &grid).unwrap();
        assert!(series.counts.iter().all(|&c| (0..=1).contains(&c)));
        assert_eq!(series.meta.operator, OperatorTag::HPlus);
    }

    #[test]
    fn gap_series_is_nonincreasing_and_matches_dense_counts() {
        let boxx = build_lattice(12, Boundary::Open).unwrap();
        let pot = power_potential(4.0, 1.0, 1.0);
        let m = 1.0;
        let grid: Vec<f64> = (0..9).map(|j| -m + 0.5 * 2f64.powf(-0.5 * j as f64)).collect();
        let series = counting_series(&boxx, m, Some(&pot), Sign::Plus, &grid).unwrap();
        // Grid decreases toward −m, so counts of (λ, m) grow along it.
        for pair in series.counts.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        let h = assemble_hamiltonian(&boxx, m, Some(&pot), Some(Sign::Plus)).unwrap();
        let mut a = h.to_dense();
        let w = eigvalsh(&mut a).unwrap();
        for (lam, &n) in grid.iter().zip(&series.counts) {
            let oracle =
                w.iter().filter(|&&x| x >= *lam && x < m - GAP_EDGE_EPS).count() as i64;
            assert_eq!(n, oracle, "lambda {lam}");
        }
    }

    #[test]
    fn ssf_of_zero_potential_vanishes_identically() {
        let boxx = build_lattice(6, Boundary::Periodic).unwrap();
        let pot = Potential::new(ComponentSpec::Zero, ComponentSpec::Zero, ComponentSpec::Zero);
        let grid: Vec<f64> = (0..11).map(|j| -3.0 + 0.6 * j as f64).collect();
        let series = finite_volume_ssf(&boxx, 1.0, &pot, Sign::Plus, &grid).unwrap();
        assert!(series.counts.iter().all(|&c| c == 0));
        assert_eq!(series.meta.operator, OperatorTag::Ssf);
    }

    #[test]
    fn ssf_is_bounded_by_the_support_size_of_a_compact_potential() {
        let boxx = build_lattice(10, Boundary::Open).unwrap();
        let mut patch = BTreeMap::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                patch.insert((dx, dy), 2.0);
            }
        }
        let pot = Potential::new(
            ComponentSpec::Table(patch),
            ComponentSpec::Zero,
            ComponentSpec::Zero,
        );
        let grid: Vec<f64> = (0..21).map(|j| -2.5 + 0.25 * j as f64).collect();
        let series = finite_volume_ssf(&boxx, 1.0, &pot, Sign::Plus, &grid).unwrap();
        for &eta in &series.counts {
            assert!((0..=9).contains(&eta), "eta {eta} outside [0, rank V]");
        }
        assert!(series.counts.iter().any(|&eta| eta > 0));
    }

    #[test]
    fn counts_are_monotone_in_the_perturbation_sign() {
        let boxx = build_lattice(8, Boundary::Open).unwrap();
        let pot = power_potential(3.0, 1.0, 1.0);
        let m = 1.0;
        let h0 = assemble_hamiltonian(&boxx, m, None, None).unwrap();
        let hp = assemble_hamiltonian(&boxx, m, Some(&pot), Some(Sign::Plus)).unwrap();
        let hm = assemble_hamiltonian(&boxx, m, Some(&pot), Some(Sign::Minus)).unwrap();
        for lam in [-2.3, -1.01, -0.3, 0.45, 0.99, 2.0] {
            let cp = inertia_count(&hp, lam).unwrap();
            let c0 = inertia_count(&h0, lam).unwrap();
            let cm = inertia_count(&hm, lam).unwrap();
            assert!(cp <= c0 && c0 <= cm, "ordering violated at lambda {lam}");
        }
    }

    fn synthetic_meta(l: usize) -> SeriesMeta {
        SeriesMeta {
            operator: OperatorTag::HPlus,
            l,
            m: 1.0,
            gamma: Some(4.0),
            gamma2: Some(1.0),
            gamma3: Some(1.0),
        }
    }

    #[test]
    fn fit_recovers_an_exact_power_law_to_machine_precision() {
        // x_j = 4^{−j} makes 7·x^{−1/2} = 7·2^j an exact integer count.
        let grid: Vec<f64> = (0..8).map(|j| -1.0 + 4f64.powi(-j)).collect();
        let counts: Vec<i64> = (0..8).map(|j| 7 * (1i64 << j)).collect();
        let series = CountingSeries::new(grid, counts, synthetic_meta(0)).unwrap();
        let fit = fit_power_law(&series, -1.0).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        assert!((fit.constant - 7.0).abs() < 1e-12);
        assert!(fit.residual < 1e-13);
        assert_eq!(fit.points_used, 8);
        assert_eq!(fit.validity_floor, 0.0);
    }

    #[test]
    fn fit_tolerates_floored_counts() {
        let grid: Vec<f64> = (0..17).map(|j| -1.0 + 2f64.powf(-0.5 * j as f64)).collect();
        let counts: Vec<i64> = grid
            .iter()
            .map(|lam| (7.0 * (lam + 1.0).abs().powf(-0.5)).floor() as i64)
            .collect();
        let series = CountingSeries::new(grid, counts, synthetic_meta(0)).unwrap();
        let fit = fit_power_law(&series, -1.0).unwrap();
        assert!((fit.exponent - 0.5).abs() < 0.02);
        assert!((fit.constant - 7.0).abs() < 0.05 * 7.0);
    }

    #[test]
    fn fit_discards_points_below_the_validity_floor() {
        let l = 64;
        let floor = validity_floor(l);
        let grid: Vec<f64> = (0..15).map(|j| -1.0 + 2f64.powf(-0.5 * j as f64)).collect();
        let counts: Vec<i64> = grid
            .iter()
            .map(|lam| (7.0 * (lam + 1.0).abs().powf(-0.5)).round() as i64)
            .collect();
        let series = CountingSeries::new(grid, counts, synthetic_meta(l)).unwrap();
        let fit = fit_power_law(&series, -1.0).unwrap();
        assert_eq!(fit.validity_floor, floor);
        assert!(fit.window.0 >= floor);
        let expected = (0..15)
            .filter(|&j| 2f64.powf(-0.5 * j as f64) >= floor)
            .count();
        assert_eq!(fit.points_used, expected);
    }

    #[test]
    fn fit_rejects_thin_windows() {
        let grid: Vec<f64> = (0..3).map(|j| -1.0 + 4f64.powi(-j)).collect();
        let counts = vec![7, 14, 28];
        let series = CountingSeries::new(grid, counts, synthetic_meta(0)).unwrap();
        match fit_power_law(&series, -1.0) {
            Err(CountingError::FitInsufficientPoints { got: 3 }) => {}
            other => panic!("expected insufficient points, got {other:?}"),
        }
        let grid: Vec<f64> = (0..6).map(|j| -1.0 + 1.0 / (1.0 + j as f64)).collect();
        let counts = vec![7, 9, 12, 14, 15, 17];
        let series = CountingSeries::new(grid, counts, synthetic_meta(0)).unwrap();
        match fit_power_law(&series, -1.0) {
            Err(CountingError::FitSpanTooNarrow { ratio }) => assert!(ratio < 10.0),
            other => panic!("expected narrow span, got {other:?}"),
        }
    }

    #[test]
    fn flat_band_multiplicity_matches_the_dense_eigensolver() {
        for (l, boundary) in [(4, Boundary::Periodic), (6, Boundary::Periodic), (6, Boundary::Open)]
        {
            let boxx = build_lattice(l, boundary).unwrap();
            let m = 1.0;
            let got = flat_band_multiplicity(&boxx, m).unwrap();
            let h0 = assemble_hamiltonian(&boxx, m, None, None).unwrap();
            let mut a = h0.to_dense();
            let w = eigvalsh(&mut a).unwrap();
            let oracle = w.iter().filter(|&&x| (x + m).abs() < 1e-8).count();
            assert_eq!(got, oracle, "L {l} {boundary:?}");
        }
    }

    #[test]
    fn flat_band_multiplicity_closed_forms() {
        // Periodic boxes carry the L² flat-band copies plus the lower band
        // touching −m at ξ = 0; open boxes carry the (L−1)² plaquette loops.
        let periodic = build_lattice(6, Boundary::Periodic).unwrap();
        assert_eq!(flat_band_multiplicity(&periodic, 1.0).unwrap(), 37);
        let open = build_lattice(6, Boundary::Open).unwrap();
        assert_eq!(flat_band_multiplicity(&open, 1.0).unwrap(), 25);
        // Independent of m while m > 0; the massless case gains the states
        // of the conical touching at ξ = 0.
        assert_eq!(flat_band_multiplicity(&periodic, 2.0).unwrap(), 37);
        assert_eq!(flat_band_multiplicity(&open, 2.0).unwrap(), 25);
        assert_eq!(flat_band_multiplicity(&periodic, 0.0).unwrap(), 38);
    }
}
