//! Seeded random ensembles and batch certification.
//!
//! Instances are independent, so batches run on the rayon pool when the
//! `parallel` feature is on. Results always come back in input order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{certify, CertificationReport};
use crate::check::Check;
use crate::error::Result;
use crate::linalg::{self, Matrix, Subspace, Tolerances};
use crate::model::{random_unitary, BlockOperator, GeneratorSpec};
use crate::riccati::{self, RESIDUAL_TOL};

/// How a batch is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work stealing; same as `Sequential` without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `items.iter().map(f)` in input order, possibly in parallel.
pub fn map_ordered<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Kind of random instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    /// Positive gap, no kernels at λ.
    Gap,
    /// `d = 0` with exact kernels and generic coupling.
    Touching,
    /// `d = 0` with kernels linked by `V`, so `K0 ≠ {0}`.
    Linked,
    /// `d = 0` with `N0`, `N1` nontrivial.
    CoupledKernels,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Gap,
        Category::Touching,
        Category::Linked,
        Category::CoupledKernels,
    ];

    pub fn is_degenerate(self) -> bool {
        self != Category::Gap
    }
}

/// Shape of a random ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub count: usize,
    /// Upper bound for each of `n0`, `n1`.
    pub max_dim: usize,
    pub seed: u64,
}

/// One drawn instance recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub index: usize,
    pub category: Category,
    pub spec: GeneratorSpec,
}

/// Recipes cycling through the categories. Member `i` depends only on the
/// master seed and `i`.
///
/// Kernel dimensions stay at or below `⌈n/2⌉`. When a kernel fills almost
/// all of its block, `K0` is the orthocomplement of a long Krylov sequence
/// of `VV*`, and whether it is trivial stops being decidable in floating
/// point: singular values of `X` approach 1 geometrically.
pub fn ensemble_specs(cfg: &EnsembleConfig) -> Vec<Member> {
    let max_dim = cfg.max_dim.max(1);
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.count)
        .map(|index| {
            let seed: u64 = master.random();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let category = Category::ALL[index % Category::ALL.len()];
            let n0 = rng.random_range(1..=max_dim);
            let n1 = rng.random_range(1..=max_dim);
            let vnorm = rng.random_range(0.05..3.0);
            let lambda = rng.random_range(-1.0..1.0);
            let mut spec = GeneratorSpec {
                lambda,
                ..GeneratorSpec::simple(n0, n1, 0.0, vnorm, seed)
            };
            match category {
                Category::Gap => spec.gap = rng.random_range(0.05..2.0),
                Category::Touching => {
                    spec.ker0_dim = rng.random_range(1..=n0.div_ceil(2));
                    spec.ker1_dim = rng.random_range(1..=n1.div_ceil(2));
                }
                Category::Linked => {
                    spec.ker0_dim = rng.random_range(1..=n0.div_ceil(2));
                    spec.ker1_dim = rng.random_range(1..=n1.div_ceil(2));
                    spec.link_dim = rng.random_range(1..=spec.ker0_dim.min(spec.ker1_dim));
                }
                Category::CoupledKernels => {
                    // Leave one direction per side outside the kernel so V ≠ 0.
                    spec.n0 = n0.max(2);
                    spec.n1 = n1.max(2);
                    spec.ker0_dim = rng.random_range(1..=spec.n0 / 2);
                    spec.ker1_dim = rng.random_range(1..=spec.n1 / 2);
                    spec.link_dim = rng.random_range(0..spec.ker0_dim.min(spec.ker1_dim));
                    spec.couple_kernels = true;
                }
            }
            Member { index, category, spec }
        })
        .collect()
}

/// Contractive root of `v·x² − (a1 − a0)·x − v̄ = 0` for a `1 + 1` instance:
/// `x = ((a1 − a0) − √((a1 − a0)² + 4|v|²)) / (2v)`.
fn scalar_root(op: &BlockOperator) -> linalg::C64 {
    let (a0, a1, v) = (op.a0()[(0, 0)].re, op.a1()[(0, 0)].re, op.v()[(0, 0)]);
    if v.norm() == 0.0 {
        return linalg::c(0.0, 0.0);
    }
    let d = a1 - a0;
    let r = d - (d * d + 4.0 * v.norm_sqr()).sqrt();
    linalg::c(r, 0.0) / (v * 2.0)
}

/// Checks that `X` and 𝔔 transform covariantly under `U0 ⊕ U1`, with the
/// unitaries drawn from `seed`.
pub fn unitary_invariance(op: &BlockOperator, seed: u64, tol: &Tolerances) -> Result<Vec<Check>> {
    let u0 = random_unitary(op.n0(), seed);
    let u1 = random_unitary(op.n1(), seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let moved = op.conjugated(&u0, &u1)?;
    let before = riccati::solve_detailed(op, tol)?;
    let after = riccati::solve_detailed(&moved, tol)?;

    let x_defect = linalg::norm2(&(&u1 * &before.solution.x * u0.adjoint() - &after.solution.x));
    let (n0, n) = (op.n0(), op.dim());
    let mut u = Matrix::zeros(n, n);
    u.view_mut((0, 0), (n0, n0)).copy_from(&u0);
    u.view_mut((n0, n0), (n - n0, n - n0)).copy_from(&u1);
    let q_moved = Subspace::from_orthonormal(u * before.q.basis());
    Ok(vec![
        Check::at_most("unitary covariance of X", x_defect, RESIDUAL_TOL * op.scale()),
        Check::at_most(
            "unitary covariance of 𝔔",
            linalg::equality_defect(&q_moved, &after.q)?,
            tol.tol_sub,
        ),
    ])
}

/// An instance to run through [`run_suite`].
#[derive(Debug, Clone)]
pub struct Case {
    pub label: String,
    pub category: Option<Category>,
    pub op: BlockOperator,
    /// Seed for the unitary-invariance check.
    pub seed: u64,
}

impl Case {
    pub fn from_member(m: &Member) -> Result<Case> {
        Ok(Case {
            label: format!("#{} {:?}", m.index, m.category),
            category: Some(m.category),
            op: crate::model::generate(&m.spec)?,
            seed: m.spec.seed,
        })
    }
}

/// Certification plus the extra invariants of one case.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub label: String,
    pub category: Option<Category>,
    pub report: Result<CertificationReport>,
    /// Unitary covariance and, for `1 + 1` cases, the scalar oracle.
    pub extra: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(&self.report, Ok(r) if r.all_pass) && self.extra.iter().all(|c| c.passed)
    }

    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.report
            .iter()
            .flat_map(|r| r.checks.iter())
            .chain(self.extra.iter())
    }
}

fn run_case(case: &Case, tol: &Tolerances) -> Outcome {
    let report = certify(&case.op, tol);
    let mut extra = Vec::new();
    if report.is_ok() {
        match unitary_invariance(&case.op, case.seed, tol) {
            Ok(c) => extra.extend(c),
            Err(e) => extra.push(Check {
                name: format!("unitary covariance ({e})"),
                value: f64::NAN,
                allowed: 0.0,
                passed: false,
            }),
        }
        if case.op.n0() == 1 && case.op.n1() == 1 {
            let sol = riccati::solve(&case.op, tol);
            let defect = sol
                .map(|s| (s.x[(0, 0)] - scalar_root(&case.op)).norm())
                .unwrap_or(f64::NAN);
            extra.push(Check::at_most("scalar quadratic root", defect, 1e-12 * case.op.scale()));
        }
    }
    Outcome {
        label: case.label.clone(),
        category: case.category,
        report,
        extra,
    }
}

/// Certifies every case, preserving order.
pub fn run_suite(cases: &[Case], exec: Execution, tol: &Tolerances) -> Vec<Outcome> {
    map_ordered(exec, cases, |c| run_case(c, tol))
}

/// Certifies operators without the extra invariants.
pub fn certify_all(ops: &[BlockOperator], exec: Execution, tol: &Tolerances) -> Vec<Result<CertificationReport>> {
    map_ordered(exec, ops, |op| certify(op, tol))
}

/// Pass/fail counts per check name, plus error counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub instances: usize,
    pub passed_instances: usize,
    /// `name → (passed, failed)`.
    pub checks: BTreeMap<String, (usize, usize)>,
    /// Error message kind → count.
    pub errors: BTreeMap<String, usize>,
}

impl Tally {
    pub fn from_outcomes(outcomes: &[Outcome]) -> Tally {
        let mut t = Tally::default();
        for o in outcomes {
            t.instances += 1;
            if o.passed() {
                t.passed_instances += 1;
            }
            if let Err(e) = &o.report {
                let kind = format!("{e:?}");
                let kind = kind.split([' ', '(', '{']).next().unwrap_or("").to_string();
                *t.errors.entry(kind).or_default() += 1;
            }
            for c in o.checks() {
                let entry = t.checks.entry(c.name.clone()).or_default();
                if c.passed {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
        t
    }

    pub fn all_passed(&self) -> bool {
        self.instances == self.passed_instances
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_are_deterministic_and_valid() {
        let cfg = EnsembleConfig { count: 40, max_dim: 6, seed: 5 };
        let a = ensemble_specs(&cfg);
        assert_eq!(a, ensemble_specs(&cfg));
        for m in &a {
            assert!(m.spec.n0 <= 6 && m.spec.n1 <= 6);
            assert!(m.spec.ker0_dim <= m.spec.n0);
            Case::from_member(m).unwrap();
        }
        let longer = ensemble_specs(&EnsembleConfig { count: 50, ..cfg });
        assert_eq!(&longer[..40], &a[..]);
    }

    #[test]
    fn sequential_matches_parallel() {
        let cfg = EnsembleConfig { count: 12, max_dim: 5, seed: 1 };
        let cases: Vec<Case> = ensemble_specs(&cfg)
            .iter()
            .map(|m| Case::from_member(m).unwrap())
            .collect();
        let tol = Tolerances::default();
        let seq = run_suite(&cases, Execution::Sequential, &tol);
        let par = run_suite(&cases, Execution::Parallel, &tol);
        for (s, p) in seq.iter().zip(&par) {
            assert_eq!(s.label, p.label);
            let (s, p) = (s.report.as_ref().unwrap(), p.report.as_ref().unwrap());
            assert_eq!(s.norm_x.to_bits(), p.norm_x.to_bits());
        }
        let tally = Tally::from_outcomes(&seq);
        assert!(tally.all_passed(), "{tally:?}");
    }

    #[test]
    fn scalar_root_examples() {
        let op = |a0: f64, a1: f64, v: linalg::C64| {
            BlockOperator::new(
                linalg::from_real(1, 1, &[a0]),
                linalg::from_real(1, 1, &[a1]),
                Matrix::from_element(1, 1, v),
                0.0,
            )
            .unwrap()
        };
        assert!((scalar_root(&op(-1.0, 1.0, linalg::c(1.0, 0.0))).re - (1.0 - 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(scalar_root(&op(0.0, 0.0, linalg::c(1.0, 0.0))), linalg::c(-1.0, 0.0));
        assert!((scalar_root(&op(0.0, 0.0, linalg::c(0.0, 2.0))) - linalg::c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn failing_case_is_reported() {
        let bad = BlockOperator::new(
            linalg::from_real(1, 1, &[1.0]),
            linalg::from_real(1, 1, &[-1.0]),
            linalg::from_real(1, 1, &[1.0]),
            0.0,
        )
        .unwrap();
        let case = Case { label: "bad".into(), category: None, op: bad, seed: 0 };
        let out = run_suite(&[case], Execution::Sequential, &Tolerances::default());
        assert!(!out[0].passed());
        let tally = Tally::from_outcomes(&out);
        assert_eq!(tally.errors.get("HypothesisViolated"), Some(&1));
    }
}
