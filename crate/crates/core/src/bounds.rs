//! Upper and lower estimates for `‖X‖` and `‖P − Q‖`, the spectral shifts
//! `δ₋`, `δ₊`, and the full certification report of an instance.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::error::{Error, Result};
use crate::linalg::{self, Subspace, Tolerances};
use crate::model::{assemble, require_valid, BlockOperator, ValidationReport};
use crate::projections::{self, TwoProjectionGeometry};
use crate::riccati::{self, UniquenessVerdict};

/// Slack on every inequality of the two-sided chain.
pub const CHAIN_SLACK: f64 = 1e-9;
/// Relative margin (times `‖B‖`) used when looking for spectrum of `B`
/// inside the gap.
pub const GAP_MARGIN: f64 = 1e-9;

/// How far the spectrum of `B` extends beyond that of `A = A0 ⊕ A1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralShift {
    /// `inf spec(A) − inf spec(B)`.
    pub delta_minus: f64,
    /// `sup spec(B) − sup spec(A)`.
    pub delta_plus: f64,
    pub delta: f64,
    pub spectrum_b: Vec<f64>,
    /// Present when a slightly negative shift was reported as 0.
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
}

/// `δ₋`, `δ₊` and `δ = max(δ₋, δ₊)`. Shifts in `(−w, 0)` are reported as 0
/// (`w` the eigenvalue window), anything lower fails the attached checks.
pub fn spectral_shift(op: &BlockOperator, tol: &Tolerances) -> Result<SpectralShift> {
    let report = require_valid(op, tol)?;
    shift_from(op, &report, tol)
}

fn shift_from(op: &BlockOperator, report: &ValidationReport, tol: &Tolerances) -> Result<SpectralShift> {
    let spectrum_b = linalg::eig_hermitian(&assemble(op), tol)?.evals;
    let inf_a = report.spectrum_a0[0].min(report.spectrum_a1[0]);
    let sup_a = report.spectrum_a0.last().unwrap().max(*report.spectrum_a1.last().unwrap());
    let w = tol.eig_window(op.norm());
    let mut notes = Vec::new();
    let mut clamp = |name: &str, raw: f64| {
        if raw < 0.0 && raw > -w {
            notes.push(format!("{name} = {raw:.3e} reported as 0"));
            0.0
        } else {
            raw
        }
    };
    let delta_minus = clamp("delta_minus", inf_a - spectrum_b[0]);
    let delta_plus = clamp("delta_plus", spectrum_b.last().unwrap() - sup_a);
    let checks = vec![
        Check::at_most("δ₋ ≥ 0", -delta_minus, 0.0),
        Check::at_most("δ₊ ≥ 0", -delta_plus, 0.0),
    ];
    Ok(SpectralShift {
        delta_minus,
        delta_plus,
        delta: delta_minus.max(delta_plus),
        spectrum_b,
        notes,
        checks,
    })
}

fn nonnegative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeInput(format!("{name} = {x}")))
    }
}

/// `(tan θ, sin θ)` with `θ = ½ arctan(2v/d)`; `(1, √2/2)` when `d = 0` and
/// `(0, 0)` when `v = 0`.
pub fn upper_bounds(d: f64, vnorm: f64) -> Result<(f64, f64)> {
    nonnegative("d", d)?;
    nonnegative("vnorm", vnorm)?;
    if vnorm == 0.0 {
        return Ok((0.0, 0.0));
    }
    if d == 0.0 {
        return Ok((1.0, FRAC_1_SQRT_2));
    }
    let theta = 0.5 * (2.0 * vnorm / d).atan();
    Ok((theta.tan(), theta.sin()))
}

/// `(δ/v, δ/√(δ² + v²))`, or `(0, 0)` when `v = 0`. Negative `δ` counts as 0.
pub fn lower_bounds(delta: f64, vnorm: f64) -> (f64, f64) {
    if !(vnorm > 0.0) || !(delta > 0.0) {
        return (0.0, 0.0);
    }
    (delta / vnorm, delta / delta.hypot(vnorm))
}

/// Everything [`certify`] computed and asserted for one instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    pub n0: usize,
    pub n1: usize,
    pub lambda: f64,
    pub norm_b: f64,
    pub d: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub delta: f64,
    pub vnorm: f64,
    #[serde(rename = "norm_X")]
    pub norm_x: f64,
    #[serde(rename = "norm_PQ")]
    pub norm_pq: f64,
    #[serde(rename = "upper_X")]
    pub upper_x: f64,
    #[serde(rename = "upper_PQ")]
    pub upper_pq: f64,
    #[serde(rename = "lower_X")]
    pub lower_x: f64,
    #[serde(rename = "lower_PQ")]
    pub lower_pq: f64,
    pub residual: f64,
    pub mu1_multiplicity: usize,
    pub dim_ker_a0: usize,
    pub dim_ker_a1: usize,
    pub dim_n0: usize,
    pub dim_n1: usize,
    pub dim_k0: usize,
    pub dim_k1: usize,
    pub verdict: UniquenessVerdict,
    pub geometry: TwoProjectionGeometry,
    pub gap_empty: bool,
    pub all_pass: bool,
    pub tolerances: Tolerances,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
}

impl CertificationReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs the whole pipeline on `op` and records every assertion.
pub fn certify(op: &BlockOperator, tol: &Tolerances) -> Result<CertificationReport> {
    tol.validate()?;
    let report = require_valid(op, tol)?;
    let w = tol.eig_window(op.norm());
    let d = if report.d <= w { 0.0 } else { report.d };

    let solved = riccati::solve_detailed(op, tol)?;
    let sol = &solved.solution;
    let kd = &solved.kernels;
    let maximal = riccati::compute_k0_k1(op, tol)?;
    let karkar = riccati::verify_karkar(op, sol, &maximal, tol)?;
    let lemma = riccati::lemma_side_checks(op, sol, tol)?;
    let verdict = riccati::classify_uniqueness(kd, sol, &maximal)?;
    let shift = shift_from(op, &report, tol)?;

    let vnorm = linalg::norm2(op.v());
    let h0 = Subspace::coordinate(op.dim(), &(0..op.n0()).collect::<Vec<_>>());
    let geometry = projections::two_projection_geometry(&h0, &solved.q, tol)?;
    let norm_pq = geometry.norm_p_minus_q;
    let norm_x = sol.norm;
    let (upper_x, upper_pq) = upper_bounds(d, vnorm)?;
    let (lower_x, lower_pq) = lower_bounds(shift.delta, vnorm);

    let margin = GAP_MARGIN * op.scale();
    let gap_empty = !shift
        .spectrum_b
        .iter()
        .any(|&e| e > report.sup_spec_a0 + margin && e < report.inf_spec_a1 - margin);

    let mut checks = riccati::solution_checks(op, &solved, tol)?;
    checks.push(Check::at_most("N0 ⊕ N1 = Ker(B − λ)", kd.canon_defect, tol.tol_sub));
    checks.push(Check::holds("graph criterion M01 = M10 = {0}", geometry.is_graph_pair()));
    checks.push(Check::at_most(
        "‖P − Q‖ = ‖X‖/√(1 + ‖X‖²)",
        (norm_pq - norm_x / norm_x.hypot(1.0)).abs(),
        CHAIN_SLACK,
    ));
    checks.push(Check::at_most("‖P − Q‖ ≤ √2/2", norm_pq, FRAC_1_SQRT_2 + CHAIN_SLACK));
    checks.push(Check::at_most("lower_X ≤ ‖X‖", lower_x - norm_x, CHAIN_SLACK));
    checks.push(Check::at_most("‖X‖ ≤ upper_X", norm_x - upper_x, CHAIN_SLACK));
    checks.push(Check::at_most("lower_PQ ≤ ‖P − Q‖", lower_pq - norm_pq, CHAIN_SLACK));
    checks.push(Check::at_most("‖P − Q‖ ≤ upper_PQ", norm_pq - upper_pq, CHAIN_SLACK));
    checks.extend(shift.checks.iter().cloned());
    checks.push(Check::at_most("δ ≤ ‖V‖·‖X‖", shift.delta - vnorm * norm_x, w));
    checks.push(Check::at_most("δ ≤ ‖V‖", shift.delta - vnorm, w));
    checks.push(Check::at_most("d = dist(spec A0, spec A1)", (d - report.d_set).abs(), w));
    checks.push(Check::holds("d > 0 ⇒ gap empty", d == 0.0 || gap_empty));
    checks.push(Check::holds(
        "μ=1 multiplicity ≤ min kernel dims",
        sol.mu1_multiplicity <= kd.ker_a0.dim().min(kd.ker_a1.dim()),
    ));
    checks.extend(maximal.checks.iter().cloned());
    checks.extend(karkar.checks);
    checks.extend(lemma.checks);
    let all_pass = checks.iter().all(|c| c.passed);

    Ok(CertificationReport {
        n0: op.n0(),
        n1: op.n1(),
        lambda: op.lambda(),
        norm_b: op.norm(),
        d,
        delta_minus: shift.delta_minus,
        delta_plus: shift.delta_plus,
        delta: shift.delta,
        vnorm,
        norm_x,
        norm_pq,
        upper_x,
        upper_pq,
        lower_x,
        lower_pq,
        residual: sol.residual,
        mu1_multiplicity: sol.mu1_multiplicity,
        dim_ker_a0: kd.ker_a0.dim(),
        dim_ker_a1: kd.ker_a1.dim(),
        dim_n0: kd.n0.dim(),
        dim_n1: kd.n1.dim(),
        dim_k0: maximal.k0.dim(),
        dim_k1: maximal.k1.dim(),
        verdict,
        geometry,
        gap_empty,
        all_pass,
        tolerances: *tol,
        notes: shift.notes,
        checks,
    })
}
