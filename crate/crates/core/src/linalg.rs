//! Dense complex linear algebra used by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`; the SVD and the Hermitian
//! eigensolver run on `faer`. Subspaces carry an
//! orthonormal basis (ambient × k); `k = 0` is the trivial subspace.
//! All rank and clustering decisions go through [`Tolerances`].

use faer::{MatRef, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;

/// Shorthand for a complex scalar.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Real-valued matrix embedded in the complex field.
pub fn from_real(rows: usize, cols: usize, row_major: &[f64]) -> Matrix {
    assert_eq!(row_major.len(), rows * cols);
    Matrix::from_fn(rows, cols, |i, j| c(row_major[i * cols + j], 0.0))
}

/// Numerical knobs shared across the library.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for numerical rank.
    pub tol_rank: f64,
    /// Eigenvalue clustering width, multiplied by `max(1, ‖B‖)`.
    pub tol_eig: f64,
    /// Orthonormality / Hermiticity slack.
    pub tol_orth: f64,
    /// Largest principal angle (radians) at which two subspaces count as equal.
    pub tol_sub: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_rank: 1e-10,
            tol_eig: 1e-8,
            tol_orth: 1e-12,
            tol_sub: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.tol_rank, self.tol_eig, self.tol_orth, self.tol_sub];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidTolerances(
                "all tolerances must be finite and strictly positive".into(),
            ));
        }
        if self.tol_rank >= 1.0 {
            return Err(Error::InvalidTolerances("tol_rank must be < 1".into()));
        }
        Ok(())
    }

    /// Absolute eigenvalue window for an operator of norm `scale`.
    pub fn eig_window(&self, scale: f64) -> f64 {
        self.tol_eig * scale.max(1.0)
    }
}

pub fn ensure_finite(m: &Matrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn to_faer(m: &Matrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, C64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    to_faer(m)
        .singular_values()
        .ok()
        .and_then(|s| s.first().copied())
        .unwrap_or(f64::NAN)
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

/// Checks `‖M − Mᴴ‖_max ≤ tol_orth·‖M‖_max`.
pub fn check_hermitian(m: &Matrix, tol: &Tolerances) -> Result<()> {
    ensure_finite(m)?;
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let asymmetry = max_abs(&(m - m.adjoint()));
    let allowed = tol.tol_orth * max_abs(m);
    if asymmetry > allowed {
        return Err(Error::NonHermitian { asymmetry, allowed });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub evals: Vec<f64>,
    /// Unitary; column `j` belongs to `evals[j]`.
    pub evecs: Matrix,
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn eig_hermitian(m: &Matrix, tol: &Tolerances) -> Result<HermitianEigen> {
    check_hermitian(m, tol)?;
    eig_hermitian_part(m)
}

/// Eigendecomposition of the Hermitian part `(M + Mᴴ)/2`, without the
/// symmetry check.
pub fn eig_hermitian_part(m: &Matrix) -> Result<HermitianEigen> {
    ensure_finite(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            evals: Vec::new(),
            evecs: Matrix::zeros(0, 0),
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = to_faer(&sym)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence("Hermitian eigensolver"))?;
    // Already ascending.
    let evals = (0..n).map(|j| eig.S()[j].re).collect();
    let evecs = from_faer(eig.U());
    Ok(HermitianEigen { evals, evecs })
}

/// Thin singular value decomposition `M = U·diag(sigma)·Wᴴ`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    /// Descending, nonnegative.
    pub sigma: Vec<f64>,
    pub w: Matrix,
}

impl Svd {
    pub fn max_sigma(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values strictly above `cutoff`.
    pub fn rank_above(&self, cutoff: f64) -> usize {
        self.sigma.iter().filter(|&&s| s > cutoff).count()
    }
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: Matrix::zeros(rows, 0),
            sigma: Vec::new(),
            w: Matrix::zeros(cols, 0),
        });
    }
    let dec = to_faer(m)
        .thin_svd()
        .map_err(|_| Error::NoConvergence("SVD"))?;
    // Already descending.
    Ok(Svd {
        u: from_faer(dec.U()),
        sigma: (0..k).map(|j| dec.S()[j].re).collect(),
        w: from_faer(dec.V()),
    })
}

/// Full set of right singular vectors (cols × cols) with the matching
/// singular values, padded with zeros when `rows < cols`.
fn right_singular_full(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let (rows, cols) = m.shape();
    if rows >= cols {
        let s = svd(m)?;
        return Ok((s.sigma, s.w));
    }
    let mut padded = Matrix::zeros(cols, cols);
    padded.rows_mut(0, rows).copy_from(m);
    let s = svd(&padded)?;
    Ok((s.sigma, s.w))
}

/// Column span of `m` restricted to singular values above `cutoff`.
pub fn range_with_cutoff(m: &Matrix, cutoff: f64) -> Result<Subspace> {
    let s = svd(m)?;
    let r = s.rank_above(cutoff);
    Ok(Subspace::from_orthonormal(s.u.columns(0, r).into_owned()))
}

/// Numerical range: singular values above `tol_rank·σ_max`.
pub fn range(m: &Matrix, tol: &Tolerances) -> Result<Subspace> {
    let s = svd(m)?;
    let r = s.rank_above(tol.tol_rank * s.max_sigma());
    Ok(Subspace::from_orthonormal(s.u.columns(0, r).into_owned()))
}

/// Right null space with an absolute singular-value cutoff.
pub fn null_space(m: &Matrix, cutoff: f64) -> Result<Subspace> {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return Ok(Subspace::full(cols));
    }
    let (sigma, w) = right_singular_full(m)?;
    let keep: Vec<usize> = (0..cols).filter(|&j| sigma[j] <= cutoff).collect();
    Ok(Subspace::from_orthonormal(w.select_columns(&keep)))
}

/// Numerical kernel: right singular vectors with `σ ≤ tol_rank·σ_max`.
pub fn kernel(m: &Matrix, tol: &Tolerances) -> Result<Subspace> {
    ensure_finite(m)?;
    let smax = if m.is_empty() { 0.0 } else { norm2(m) };
    null_space(m, tol.tol_rank * smax)
}

/// Partial isometry `S` from the polar decomposition `V* = S(VV*)^{1/2}`.
///
/// With `V = U·Σ·Wᴴ` truncated to numerical rank `r`, `S = W_r·U_rᴴ`.
pub fn polar_isometry(v: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let s = svd(v)?;
    let r = s.rank_above(tol.tol_rank * s.max_sigma());
    let w = s.w.columns(0, r);
    let u = s.u.columns(0, r);
    Ok(w * u.adjoint())
}

/// Positive semidefinite square root of a Hermitian PSD matrix.
pub fn psd_sqrt(m: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let eig = eig_hermitian(m, tol)?;
    let n = m.nrows();
    let mut scaled = eig.evecs.clone();
    for j in 0..n {
        let root = eig.evals[j].max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(root);
    }
    Ok(scaled * eig.evecs.adjoint())
}

/// A subspace of `ℂ^ambient` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    /// Wraps columns that are already orthonormal.
    pub fn from_orthonormal(basis: Matrix) -> Self {
        Subspace { basis }
    }

    /// Wraps columns after checking orthonormality within `tol_orth`
    /// (scaled by the number of columns).
    pub fn try_from_orthonormal(basis: Matrix, tol: &Tolerances) -> Result<Self> {
        ensure_finite(&basis)?;
        let k = basis.ncols();
        let gram = basis.adjoint() * &basis - identity(k);
        let defect = max_abs(&gram);
        let allowed = tol.tol_orth * (k.max(1) as f64) * 100.0;
        if defect > allowed {
            return Err(Error::AssertionFailure {
                clause: "basis orthonormality".into(),
                defect,
                allowed,
            });
        }
        Ok(Subspace { basis })
    }

    /// Span of arbitrary columns, orthonormalized.
    pub fn span(columns: &Matrix, tol: &Tolerances) -> Result<Self> {
        range(columns, tol)
    }

    pub fn trivial(ambient: usize) -> Self {
        Subspace {
            basis: Matrix::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            basis: identity(ambient),
        }
    }

    /// Span of the standard basis vectors `e_i` for `i` in `indices` (0-based).
    pub fn coordinate(ambient: usize, indices: &[usize]) -> Self {
        let mut basis = Matrix::zeros(ambient, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            basis[(i, j)] = c(1.0, 0.0);
        }
        Subspace { basis }
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn into_basis(self) -> Matrix {
        self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_trivial(&self) -> bool {
        self.dim() == 0
    }

    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.adjoint()
    }

    /// Orthogonal complement in the ambient space.
    pub fn complement(&self) -> Self {
        let n = self.ambient_dim();
        if self.dim() == 0 {
            return Subspace::full(n);
        }
        if self.dim() == n {
            return Subspace::trivial(n);
        }
        let (sigma, w) =
            right_singular_full(&self.basis.adjoint()).expect("orthonormal basis is finite");
        // Singular values of an orthonormal basis are 1 on the span, 0 off it.
        let keep: Vec<usize> = (0..n).filter(|&j| sigma[j] < 0.5).collect();
        Subspace::from_orthonormal(w.select_columns(&keep))
    }

    /// Places this subspace of a block factor into a larger ambient space,
    /// starting at row `offset`.
    pub fn embed(&self, ambient: usize, offset: usize) -> Self {
        assert!(offset + self.ambient_dim() <= ambient);
        let mut basis = Matrix::zeros(ambient, self.dim());
        basis
            .view_mut((offset, 0), (self.ambient_dim(), self.dim()))
            .copy_from(&self.basis);
        Subspace { basis }
    }

    /// Distance of `v` from this subspace.
    pub fn distance(&self, v: &Matrix) -> f64 {
        let residual = v - &self.basis * (self.basis.adjoint() * v);
        residual.norm()
    }

    /// Sum of two subspaces (span of the union of the bases).
    pub fn sum(&self, other: &Subspace, tol: &Tolerances) -> Result<Self> {
        check_ambient(self, other)?;
        let joined = Matrix::from_fn(self.ambient_dim(), self.dim() + other.dim(), |i, j| {
            if j < self.dim() {
                self.basis[(i, j)]
            } else {
                other.basis[(i, j - self.dim())]
            }
        });
        if joined.ncols() == 0 {
            return Ok(Subspace::trivial(self.ambient_dim()));
        }
        range(&joined, tol)
    }
}

fn check_ambient(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::AmbientMismatch {
            left: a.ambient_dim(),
            right: b.ambient_dim(),
        });
    }
    Ok(())
}

/// Principal angles in `[0, π/2]`, ascending; `min(dim S1, dim S2)` of them.
///
/// Cosines come from `σ(B1ᴴ·B2)` and sines from `σ((I − P_big)·B_small)`;
/// pairing them through `atan2` keeps small angles accurate.
pub fn principal_angles(s1: &Subspace, s2: &Subspace) -> Result<Vec<f64>> {
    check_ambient(s1, s2)?;
    let (small, big) = if s1.dim() <= s2.dim() {
        (s1, s2)
    } else {
        (s2, s1)
    };
    let k = small.dim();
    if k == 0 {
        return Ok(Vec::new());
    }
    let cosines = svd(&(big.basis.adjoint() * &small.basis))?.sigma;
    let outside = &small.basis - &big.basis * (big.basis.adjoint() * &small.basis);
    let mut sines = svd(&outside)?.sigma;
    sines.reverse();
    let mut angles: Vec<f64> = (0..k)
        .map(|i| {
            let cos = cosines.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            let sin = sines.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            sin.atan2(cos)
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// True when both subspaces have the same dimension and every principal
/// angle is below `tol_sub`.
pub fn same_subspace(s1: &Subspace, s2: &Subspace, tol: &Tolerances) -> Result<bool> {
    if s1.dim() != s2.dim() {
        check_ambient(s1, s2)?;
        return Ok(false);
    }
    Ok(max_angle(s1, s2)? <= tol.tol_sub)
}

/// Largest principal angle when the dimensions agree, `π/2` otherwise.
pub fn equality_defect(s1: &Subspace, s2: &Subspace) -> Result<f64> {
    check_ambient(s1, s2)?;
    if s1.dim() != s2.dim() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    max_angle(s1, s2)
}

/// Largest principal angle (0 when either subspace is trivial).
pub fn max_angle(s1: &Subspace, s2: &Subspace) -> Result<f64> {
    Ok(principal_angles(s1, s2)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Intersection as the common null space of `I − P1` and `I − P2`.
///
/// A unit vector at angle θ from both subspaces' common part produces a
/// stacked singular value of about `√2·sin(θ/2)`, so the cutoff is set to
/// that value at `θ = tol_sub`.
pub fn intersect(s1: &Subspace, s2: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    check_ambient(s1, s2)?;
    let n = s1.ambient_dim();
    if s1.is_trivial() || s2.is_trivial() {
        return Ok(Subspace::trivial(n));
    }
    let c1 = identity(n) - s1.projector();
    let c2 = identity(n) - s2.projector();
    let mut stacked = Matrix::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(&c1);
    stacked.rows_mut(n, n).copy_from(&c2);
    let cutoff = std::f64::consts::SQRT_2 * (0.5 * tol.tol_sub).sin();
    null_space(&stacked, cutoff)
}

/// `‖(I − P_S)·M·basis_S‖₂`.
pub fn invariance_defect(m: &Matrix, s: &Subspace) -> Result<f64> {
    if !m.is_square() || m.nrows() != s.ambient_dim() {
        return Err(Error::AmbientMismatch {
            left: m.nrows(),
            right: s.ambient_dim(),
        });
    }
    if s.is_trivial() {
        return Ok(0.0);
    }
    let image = m * s.basis();
    let outside = &image - s.basis() * (s.basis().adjoint() * &image);
    Ok(norm2(&outside))
}

/// Invariance test `‖(I − P_S)·M·basis_S‖ ≤ tol_rank·‖M‖`.
pub fn is_invariant(m: &Matrix, s: &Subspace, tol: &Tolerances) -> Result<bool> {
    let defect = invariance_defect(m, s)?;
    Ok(defect <= tol.tol_rank * norm2(m))
}
