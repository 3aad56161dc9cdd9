//! Seeded instance factory.
//!
//! All randomness comes from a `ChaCha8Rng` seeded with
//! `SeedableRng::seed_from_u64(seed)`; complex Gaussians are pairs of
//! `StandardNormal` draws scaled by `1/√2`. The stream is consumed in a
//! fixed order (U0, A0 spectrum, U1, A1 spectrum, V, link weights), so an
//! instance is a pure function of its spec.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::BlockOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, Matrix};

/// Recipe for a random block operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n0: usize,
    pub n1: usize,
    /// `dim Ker(A0 − λ)`.
    pub ker0_dim: usize,
    /// `dim Ker(A1 − λ)`.
    pub ker1_dim: usize,
    /// Distance of the non-kernel spectra from λ; must lie in `[0, 2]`.
    pub gap: f64,
    /// Target `‖V‖`.
    pub vnorm: f64,
    /// Force `Ker(A0−λ)∩Ker V*` and `Ker(A1−λ)∩Ker V` to be nontrivial.
    pub couple_kernels: bool,
    /// Number of kernel directions that `V` links isometrically up to a
    /// weight, i.e. `V·w_j = s_j·u_j` with `u_j ∈ Ker(A0−λ)`,
    /// `w_j ∈ Ker(A1−λ)`. These span `K0` and `K1`.
    #[serde(default)]
    pub link_dim: usize,
    #[serde(default)]
    pub lambda: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Nondegenerate `n0 + n1` instance with the given gap and coupling norm.
    pub fn simple(n0: usize, n1: usize, gap: f64, vnorm: f64, seed: u64) -> Self {
        GeneratorSpec {
            n0,
            n1,
            ker0_dim: 0,
            ker1_dim: 0,
            gap,
            vnorm,
            couple_kernels: false,
            link_dim: 0,
            lambda: 0.0,
            seed,
        }
    }

    /// Number of `A0` (resp. `A1`) kernel vectors that `V*` (resp. `V`)
    /// annihilates when `couple_kernels` is set.
    pub fn coupled_dims(&self) -> (usize, usize) {
        if !self.couple_kernels {
            return (0, 0);
        }
        let half = |free: usize| free.div_ceil(2);
        (
            half(self.ker0_dim.saturating_sub(self.link_dim)),
            half(self.ker1_dim.saturating_sub(self.link_dim)),
        )
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InconsistentSpec(msg));
        if self.n0 == 0 || self.n1 == 0 {
            return bad("n0 and n1 must be at least 1".into());
        }
        if self.ker0_dim > self.n0 || self.ker1_dim > self.n1 {
            return bad(format!(
                "kernel dims ({}, {}) exceed block dims ({}, {})",
                self.ker0_dim, self.ker1_dim, self.n0, self.n1
            ));
        }
        if !(self.gap.is_finite() && (0.0..=2.0).contains(&self.gap)) {
            return bad(format!("gap {} outside [0, 2]", self.gap));
        }
        if !(self.vnorm.is_finite() && self.vnorm >= 0.0) {
            return bad(format!("vnorm {} must be finite and ≥ 0", self.vnorm));
        }
        if !self.lambda.is_finite() {
            return bad("lambda must be finite".into());
        }
        if self.link_dim > self.ker0_dim.min(self.ker1_dim) {
            return bad(format!(
                "link_dim {} exceeds min(ker0_dim, ker1_dim)",
                self.link_dim
            ));
        }
        if self.couple_kernels
            && (self.ker0_dim <= self.link_dim || self.ker1_dim <= self.link_dim)
        {
            return bad("couple_kernels needs kernel directions beyond link_dim on both sides".into());
        }
        Ok(())
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = Matrix::zeros(rows, cols);
    // Fill row-major so the draw order does not depend on storage layout.
    for i in 0..rows {
        for j in 0..cols {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(i, j)] = c(s * re, s * im);
        }
    }
    m
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
fn haar_unitary(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let qr = complex_gaussian(rng, n, n).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar unitary of size `n` drawn from its own `seed`.
pub fn random_unitary(n: usize, seed: u64) -> Matrix {
    haar_unitary(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

/// `U·diag(evals)·Uᴴ`, symmetrized so the result is exactly Hermitian.
fn hermitian_from(u: &Matrix, evals: &[f64]) -> Matrix {
    let mut scaled = u.clone();
    for (j, &e) in evals.iter().enumerate() {
        for i in 0..u.nrows() {
            scaled[(i, j)] *= e;
        }
    }
    let m = scaled * u.adjoint();
    (&m + m.adjoint()).scale(0.5)
}

/// Eigenvalues: `ker` copies of λ first, then draws in the band
/// `[λ − 2, λ − gap]` (`side = −1`) or `[λ + gap, λ + 2]` (`side = +1`).
fn spectrum(rng: &mut ChaCha8Rng, n: usize, ker: usize, gap: f64, lambda: f64, side: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i < ker {
                lambda
            } else {
                let u: f64 = rng.random();
                lambda + side * (gap + u * (2.0 - gap))
            }
        })
        .collect()
}

/// Builds a valid block operator from `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<BlockOperator> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lambda = spec.lambda;

    let u0 = haar_unitary(&mut rng, spec.n0);
    let evals0 = spectrum(&mut rng, spec.n0, spec.ker0_dim, spec.gap, lambda, -1.0);
    let u1 = haar_unitary(&mut rng, spec.n1);
    let evals1 = spectrum(&mut rng, spec.n1, spec.ker1_dim, spec.gap, lambda, 1.0);
    let a0 = hermitian_from(&u0, &evals0);
    let a1 = hermitian_from(&u1, &evals1);

    let g = complex_gaussian(&mut rng, spec.n0, spec.n1);
    let weights: Vec<f64> = (0..spec.link_dim)
        .map(|_| 0.5 + rng.random::<f64>())
        .collect();

    let v = if spec.vnorm == 0.0 {
        Matrix::zeros(spec.n0, spec.n1)
    } else {
        let (c0, c1) = spec.coupled_dims();
        // Columns 0..link are linked, link..link+c are annihilated.
        let fixed0 = u0.columns(0, spec.link_dim + c0);
        let fixed1 = u1.columns(0, spec.link_dim + c1);
        let p0 = linalg::identity(spec.n0) - fixed0 * fixed0.adjoint();
        let p1 = linalg::identity(spec.n1) - fixed1 * fixed1.adjoint();
        let mut v = p0 * g * p1;
        for (j, &s) in weights.iter().enumerate() {
            v += (u0.column(j) * u1.column(j).adjoint()).scale(s);
        }
        let norm = linalg::norm2(&v);
        if norm == 0.0 {
            return Err(Error::InconsistentSpec(
                "kernel constraints leave no room for a nonzero V".into(),
            ));
        }
        v.scale(spec.vnorm / norm)
    };

    let meta = serde_json::to_value(spec).expect("spec serializes");
    Ok(BlockOperator::new(a0, a1, v, lambda)?.with_meta(serde_json::json!({ "generator": meta })))
}
