//! Block operator data model: `B = [[A0, V], [V*, A1]]` on `H0 ⊕ H1`.

mod generate;
pub mod io;

pub use generate::{generate, random_unitary, GeneratorSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ensure_finite, Matrix, Tolerances};

/// A self-adjoint block operator matrix together with the splitting point λ.
///
/// Shapes and finiteness are enforced on construction. Hermiticity of the
/// diagonal blocks and the spectral ordering are *not*: an instance that
/// violates them is still representable so that [`validate`] can report it.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    a0: Matrix,
    a1: Matrix,
    v: Matrix,
    lambda: f64,
    b_norm: f64,
    meta: Option<serde_json::Value>,
}

impl PartialEq for BlockOperator {
    fn eq(&self, other: &Self) -> bool {
        self.lambda.to_bits() == other.lambda.to_bits()
            && bit_equal(&self.a0, &other.a0)
            && bit_equal(&self.a1, &other.a1)
            && bit_equal(&self.v, &other.v)
            && self.meta == other.meta
    }
}

fn bit_equal(a: &Matrix, b: &Matrix) -> bool {
    a.shape() == b.shape()
        && a.iter().zip(b.iter()).all(|(x, y)| {
            x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
        })
}

impl BlockOperator {
    /// `v` maps `H1 → H0`, so it is `n0 × n1`.
    pub fn new(a0: Matrix, a1: Matrix, v: Matrix, lambda: f64) -> Result<Self> {
        for m in [&a0, &a1, &v] {
            ensure_finite(m)?;
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite);
        }
        if !a0.is_square() || !a1.is_square() || a0.nrows() == 0 || a1.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                expected: "nonempty square A0 and A1".into(),
                found: format!("A0 {:?}, A1 {:?}", a0.shape(), a1.shape()),
            });
        }
        if v.shape() != (a0.nrows(), a1.nrows()) {
            return Err(Error::ShapeMismatch {
                expected: format!("V of shape {}x{}", a0.nrows(), a1.nrows()),
                found: format!("{}x{}", v.nrows(), v.ncols()),
            });
        }
        let mut op = BlockOperator {
            a0,
            a1,
            v,
            lambda,
            b_norm: 0.0,
            meta: None,
        };
        op.b_norm = linalg::norm2(&assemble(&op));
        Ok(op)
    }

    pub fn with_meta(mut self, meta: serde_json::Value) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn n0(&self) -> usize {
        self.a0.nrows()
    }

    pub fn n1(&self) -> usize {
        self.a1.nrows()
    }

    pub fn dim(&self) -> usize {
        self.n0() + self.n1()
    }

    pub fn a0(&self) -> &Matrix {
        &self.a0
    }

    pub fn a1(&self) -> &Matrix {
        &self.a1
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn meta(&self) -> Option<&serde_json::Value> {
        self.meta.as_ref()
    }

    /// Spectral norm of the assembled operator.
    pub fn norm(&self) -> f64 {
        self.b_norm
    }

    /// `max(1, ‖B‖)`: the scale that absolute tolerances are multiplied by.
    pub fn scale(&self) -> f64 {
        self.b_norm.max(1.0)
    }

    /// Same diagonal blocks with `V` replaced by `factor·V`.
    pub fn with_scaled_coupling(&self, factor: f64) -> Result<Self> {
        BlockOperator::new(
            self.a0.clone(),
            self.a1.clone(),
            self.v.scale(factor),
            self.lambda,
        )
    }

    /// Pushes the diagonal spectra apart: `A0 − s/2`, `A1 + s/2`.
    pub fn with_extra_separation(&self, s: f64) -> Result<Self> {
        let shift0 = linalg::identity(self.n0()).scale(0.5 * s);
        let shift1 = linalg::identity(self.n1()).scale(0.5 * s);
        BlockOperator::new(
            &self.a0 - shift0,
            &self.a1 + shift1,
            self.v.clone(),
            self.lambda,
        )
    }

    /// Block-diagonal unitary change of basis `(U0·A0·U0ᴴ, U1·A1·U1ᴴ, U0·V·U1ᴴ)`.
    pub fn conjugated(&self, u0: &Matrix, u1: &Matrix) -> Result<Self> {
        let a0 = u0 * &self.a0 * u0.adjoint();
        let a1 = u1 * &self.a1 * u1.adjoint();
        BlockOperator::new(
            (&a0 + a0.adjoint()).scale(0.5),
            (&a1 + a1.adjoint()).scale(0.5),
            u0 * &self.v * u1.adjoint(),
            self.lambda,
        )
    }
}

/// `B = [[A0, V], [Vᴴ, A1]]`.
pub fn assemble(op: &BlockOperator) -> Matrix {
    let (n0, n1) = (op.n0(), op.n1());
    let mut b = Matrix::zeros(n0 + n1, n0 + n1);
    b.view_mut((0, 0), (n0, n0)).copy_from(&op.a0);
    b.view_mut((0, n0), (n0, n1)).copy_from(&op.v);
    b.view_mut((n0, 0), (n1, n0)).copy_from(&op.v.adjoint());
    b.view_mut((n0, n0), (n1, n1)).copy_from(&op.a1);
    b
}

/// Outcome of checking the block-operator hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub hermitian_ok: bool,
    pub ordering_ok: bool,
    pub sup_spec_a0: f64,
    pub inf_spec_a1: f64,
    /// `max(0, inf spec(A1) − sup spec(A0))`.
    pub d: f64,
    /// Minimal distance between the two computed spectral sets.
    pub d_set: f64,
    pub spectrum_a0: Vec<f64>,
    pub spectrum_a1: Vec<f64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.hermitian_ok && self.ordering_ok
    }

    /// Human-readable reason when the hypothesis fails.
    pub fn violation(&self, lambda: f64) -> Option<String> {
        if !self.hermitian_ok {
            return Some("A0 and A1 must be Hermitian".into());
        }
        if !self.ordering_ok {
            return Some(format!(
                "spectral ordering fails: sup spec(A0) = {:.6e}, lambda = {:.6e}, inf spec(A1) = {:.6e}",
                self.sup_spec_a0, lambda, self.inf_spec_a1
            ));
        }
        None
    }
}

/// Checks Hermiticity of the diagonal blocks and
/// `sup spec(A0) ≤ λ + w`, `inf spec(A1) ≥ λ − w` with
/// `w = tol_eig·max(1, ‖B‖)`.
pub fn validate(op: &BlockOperator, tol: &Tolerances) -> Result<ValidationReport> {
    let hermitian_ok = linalg::check_hermitian(&op.a0, tol).is_ok()
        && linalg::check_hermitian(&op.a1, tol).is_ok();
    let spectrum_a0 = linalg::eig_hermitian_part(&op.a0)?.evals;
    let spectrum_a1 = linalg::eig_hermitian_part(&op.a1)?.evals;
    let sup_spec_a0 = *spectrum_a0.last().expect("n0 ≥ 1");
    let inf_spec_a1 = spectrum_a1[0];
    let w = tol.eig_window(op.scale());
    let ordering_ok = sup_spec_a0 <= op.lambda + w && inf_spec_a1 >= op.lambda - w;
    let d = (inf_spec_a1 - sup_spec_a0).max(0.0);
    let d_set = spectrum_a0
        .iter()
        .flat_map(|a| spectrum_a1.iter().map(move |b| (a - b).abs()))
        .fold(f64::INFINITY, f64::min);
    Ok(ValidationReport {
        hermitian_ok,
        ordering_ok,
        sup_spec_a0,
        inf_spec_a1,
        d,
        d_set,
        spectrum_a0,
        spectrum_a1,
    })
}

/// Validates and turns a failure into [`Error::HypothesisViolated`].
pub fn require_valid(op: &BlockOperator, tol: &Tolerances) -> Result<ValidationReport> {
    let report = validate(op, tol)?;
    match report.violation(op.lambda) {
        Some(reason) => Err(Error::HypothesisViolated(reason)),
        None => Ok(report),
    }
}
