//! Expectation matching between representations: given Hermitian observables
//! with target expectation values and tolerances taken from a state on one
//! space, find a density matrix on another space reproducing all of them.
//! The feasibility search is a projected gradient descent over the density
//! matrix set with eigenvalue projection onto the probability simplex.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QitError, Result};
use crate::hilbert::{
    check_spaces, eigh, expectation, total_number_op, CMatrix, DensityMatrix, FockSpace,
    Operator, DEFAULT_TOL,
};

/// One expectation constraint |tr(rho A) - c| < eps.
#[derive(Debug, Clone)]
pub struct ObservableConstraint {
    pub a: Operator,
    pub target: f64,
    pub epsilon: f64,
}

impl ObservableConstraint {
    pub fn new(a: Operator, target: f64, epsilon: f64, tol: f64) -> Result<Self> {
        if !a.is_hermitian(tol) {
            return Err(QitError::NotHermitian {
                residual: a.hermiticity_residual(),
            });
        }
        if epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(QitError::InvalidInput("epsilon must be positive".into()));
        }
        Ok(ObservableConstraint { a, target, epsilon })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub initial_step: f64,
    pub max_halvings: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 10_000,
            initial_step: 1.0,
            max_halvings: 30,
            restarts: 3,
            seed: 0,
        }
    }
}

/// A feasibility problem on a target space.
#[derive(Debug, Clone)]
pub struct FellProblem {
    space: FockSpace,
    constraints: Vec<ObservableConstraint>,
    pub config: SolverConfig,
}

impl FellProblem {
    pub fn new(
        space: FockSpace,
        constraints: Vec<ObservableConstraint>,
        config: SolverConfig,
    ) -> Result<Self> {
        for c in &constraints {
            check_spaces(space, c.a.space())?;
        }
        Ok(FellProblem {
            space,
            constraints,
            config,
        })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn constraints(&self) -> &[ObservableConstraint] {
        &self.constraints
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FellStatus {
    Feasible,
    ToleranceNotMet,
}

#[derive(Debug, Clone)]
pub struct FellSolution {
    pub rho2: DensityMatrix,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub status: FellStatus,
    pub objective: f64,
    /// Objective values of the accepted descent iterates, non-increasing.
    pub objective_history: Vec<f64>,
}

/// Euclidean projection of a real vector onto the probability simplex.
pub fn simplex_projection(vals: &[f64]) -> Vec<f64> {
    let mut u = vals.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in u.iter().enumerate() {
        cum += v;
        let cand = (cum - 1.0) / (k + 1) as f64;
        if v - cand > 0.0 {
            theta = cand;
        }
    }
    vals.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Nearest density matrix to a Hermitian matrix: project the spectrum onto
/// the simplex, keeping the eigenvectors.
pub fn project_to_density(space: FockSpace, m: &CMatrix) -> DensityMatrix {
    let herm = (m + m.adjoint()).scale(0.5);
    let (vals, vecs) = eigh(&herm);
    let proj = simplex_projection(&vals);
    let mut scaled = vecs.clone();
    for (k, &p) in proj.iter().enumerate() {
        let w = num_complex::Complex64::new(p, 0.0);
        for x in scaled.column_mut(k).iter_mut() {
            *x *= w;
        }
    }
    DensityMatrix::new_unchecked(space, scaled * vecs.adjoint())
}

fn residuals_of(rho: &DensityMatrix, constraints: &[ObservableConstraint]) -> Vec<f64> {
    constraints
        .iter()
        .map(|c| expectation(rho, &c.a).expect("same space").re - c.target)
        .collect()
}

fn objective(residuals: &[f64], constraints: &[ObservableConstraint]) -> f64 {
    residuals
        .iter()
        .zip(constraints)
        .map(|(r, c)| (r / c.epsilon).powi(2))
        .sum()
}

fn all_within(residuals: &[f64], constraints: &[ObservableConstraint]) -> bool {
    residuals
        .iter()
        .zip(constraints)
        .all(|(r, c)| r.abs() < c.epsilon)
}

/// Projected gradient feasibility search. Weighted least squares
/// f(rho) = sum_i (tr(rho A_i) - c_i)^2 / eps_i^2, gradient steps with a
/// backtracking line search (halving, persistent step size across iterates),
/// projection to the density set after every step. Deterministic given the
/// seed; up to `restarts` seeded perturbation restarts when descent stalls.
pub fn solve_fell(problem: &FellProblem) -> Result<FellSolution> {
    let constraints = problem.constraints();
    if constraints.is_empty() {
        return Ok(FellSolution {
            rho2: DensityMatrix::maximally_mixed(problem.space()),
            residuals: Vec::new(),
            iterations: 0,
            status: FellStatus::Feasible,
            objective: 0.0,
            objective_history: Vec::new(),
        });
    }
    // spectral infeasibility pre-check per constraint
    for (i, c) in constraints.iter().enumerate() {
        let spec = c.a.eigenvalues();
        let (lo, hi) = (spec[0], *spec.last().unwrap());
        if c.target < lo - c.epsilon || c.target > hi + c.epsilon {
            return Err(QitError::ProvablyInfeasible {
                index: i,
                target: c.target,
                lo,
                hi,
            });
        }
    }

    let cfg = problem.config;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rho = DensityMatrix::maximally_mixed(problem.space());
    let mut res = residuals_of(&rho, constraints);
    let mut f = objective(&res, constraints);
    let mut best = (rho.clone(), res.clone(), f);
    let mut history = vec![f];
    let mut step = cfg.initial_step;
    let mut restarts_used = 0usize;
    let mut iterations = 0usize;

    while iterations < cfg.max_iters {
        if all_within(&res, constraints) {
            return Ok(FellSolution {
                rho2: rho,
                residuals: res,
                iterations,
                status: FellStatus::Feasible,
                objective: f,
                objective_history: history,
            });
        }
        let d = problem.space().dim();
        let mut grad = CMatrix::zeros(d, d);
        for (r, c) in res.iter().zip(constraints) {
            grad += c.a.entries().scale(2.0 * r / (c.epsilon * c.epsilon));
        }

        let mut t = step;
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            let cand = project_to_density(problem.space(), &(rho.entries() - grad.scale(t)));
            let cand_res = residuals_of(&cand, constraints);
            let cand_f = objective(&cand_res, constraints);
            if cand_f < f {
                rho = cand;
                res = cand_res;
                f = cand_f;
                history.push(f);
                step = t * 2.0;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if f < best.2 {
            best = (rho.clone(), res.clone(), f);
        }
        if !accepted {
            // no descent at any tried step; shrink the base step, and once it
            // underflows perturb from the best iterate
            step = t;
            if step < 1e-300 {
                if restarts_used < cfg.restarts {
                    restarts_used += 1;
                    let h = crate::random::hermitian(problem.space(), &mut rng);
                    let perturbed = best.0.entries() + h.entries().scale(0.01);
                    rho = project_to_density(problem.space(), &perturbed);
                    res = residuals_of(&rho, constraints);
                    f = objective(&res, constraints);
                    step = cfg.initial_step;
                } else {
                    break;
                }
            }
        }
    }

    let status = if all_within(&best.1, constraints) {
        FellStatus::Feasible
    } else {
        FellStatus::ToleranceNotMet
    };
    Ok(FellSolution {
        rho2: best.0,
        residuals: best.1,
        iterations,
        status,
        objective: best.2,
        objective_history: history,
    })
}

/// One certified constraint row.
#[derive(Debug, Clone)]
pub struct CertifyRow {
    pub index: usize,
    pub target: f64,
    pub value: f64,
    pub residual: f64,
    pub epsilon: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct CertifyReport {
    pub rows: Vec<CertifyRow>,
    pub invariants_ok: bool,
    /// Max disagreement between recomputed and solver-reported residuals.
    pub residual_agreement: f64,
    pub reported_residuals_match: bool,
    pub pass: bool,
}

/// Independent re-evaluation of a solution: every residual is recomputed from
/// scratch, the density-matrix invariants are re-checked, and solver-reported
/// residuals are cross-checked at 1e-12.
pub fn certify(problem: &FellProblem, solution: &FellSolution) -> Result<CertifyReport> {
    check_spaces(problem.space(), solution.rho2.space())?;
    let invariants_ok = DensityMatrix::new(
        problem.space(),
        solution.rho2.entries().clone(),
        DEFAULT_TOL,
    )
    .is_ok();
    let mut rows = Vec::with_capacity(problem.constraints().len());
    let mut agreement = 0f64;
    for (i, c) in problem.constraints().iter().enumerate() {
        let value = expectation(&solution.rho2, &c.a)?.re;
        let residual = (value - c.target).abs();
        if let Some(reported) = solution.residuals.get(i) {
            agreement = agreement.max((reported.abs() - residual).abs());
        }
        rows.push(CertifyRow {
            index: i,
            target: c.target,
            value,
            residual,
            epsilon: c.epsilon,
            pass: residual < c.epsilon,
        });
    }
    let reported_residuals_match = agreement <= 1e-12;
    let pass = invariants_ok && rows.iter().all(|r| r.pass);
    Ok(CertifyReport {
        rows,
        invariants_ok,
        residual_agreement: agreement,
        reported_residuals_match,
        pass,
    })
}

/// Two representation spaces with a shared dictionary of named abstract
/// algebra elements realized as Hermitian operators in each.
#[derive(Debug, Clone)]
pub struct RepresentationPair {
    pub source_space: FockSpace,
    pub source_state: DensityMatrix,
    pub target_space: FockSpace,
    elements: Vec<(String, Operator, Operator)>,
}

/// Builds the standard named observables on a space: "number" (total number
/// operator), "number2" (its square) and "quadrature" (sum over modes of
/// (a + a^dag)/sqrt(2)).
pub fn builtin_element(name: &str, space: FockSpace) -> Result<Operator> {
    match name {
        "number" => total_number_op(space),
        "number2" => {
            let n = total_number_op(space)?;
            n.matmul(&n)
        }
        "quadrature" => {
            let mut out = Operator::zeros(space);
            for m in 0..space.modes() {
                let a = crate::hilbert::annihilation_op(space, m)?;
                out = out.add(&a.add(&a.adjoint())?.scale_re(1.0 / 2f64.sqrt()))?;
            }
            Ok(out)
        }
        _ => Err(QitError::UnresolvedElement { name: name.into() }),
    }
}

impl RepresentationPair {
    pub fn new(source_state: DensityMatrix, target_space: FockSpace) -> Self {
        RepresentationPair {
            source_space: source_state.space(),
            source_state,
            target_space,
            elements: Vec::new(),
        }
    }

    pub fn register(&mut self, name: &str, source: Operator, target: Operator) -> Result<()> {
        check_spaces(self.source_space, source.space())?;
        check_spaces(self.target_space, target.space())?;
        for (op, space_name) in [(&source, "source"), (&target, "target")] {
            if !op.is_hermitian(DEFAULT_TOL) {
                return Err(QitError::InvalidInput(format!(
                    "element '{name}' is not Hermitian in the {space_name} representation"
                )));
            }
        }
        self.elements.push((name.to_string(), source, target));
        Ok(())
    }

    pub fn register_builtin(&mut self, name: &str) -> Result<()> {
        let source = builtin_element(name, self.source_space)?;
        let target = builtin_element(name, self.target_space)?;
        self.register(name, source, target)
    }

    fn lookup(&self, name: &str) -> Result<&(String, Operator, Operator)> {
        self.elements
            .iter()
            .find(|(n, _, _)| n == name)
            .ok_or_else(|| QitError::UnresolvedElement { name: name.into() })
    }
}

/// Builds a [`FellProblem`]: targets are the source-state expectations of the
/// named elements, constraints carry the target-space realizations.
pub fn make_constraints(
    pair: &RepresentationPair,
    element_names: &[&str],
    epsilons: &[f64],
    config: SolverConfig,
) -> Result<FellProblem> {
    if element_names.len() != epsilons.len() {
        return Err(QitError::DimensionMismatch {
            expected: element_names.len(),
            found: epsilons.len(),
        });
    }
    let mut constraints = Vec::with_capacity(element_names.len());
    for (name, &eps) in element_names.iter().zip(epsilons) {
        let (_, source, target) = pair.lookup(name)?;
        let c = expectation(&pair.source_state, source)?.re;
        constraints.push(ObservableConstraint::new(target.clone(), c, eps, DEFAULT_TOL)?);
    }
    FellProblem::new(pair.target_space, constraints, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::number_op;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_problem_gives_maximally_mixed() {
        let space = FockSpace::new(1, 3).unwrap();
        let problem = FellProblem::new(space, vec![], SolverConfig::default()).unwrap();
        let sol = solve_fell(&problem).unwrap();
        assert_eq!(sol.status, FellStatus::Feasible);
        let mixed = DensityMatrix::maximally_mixed(space);
        assert!((sol.rho2.entries() - mixed.entries()).norm() < 1e-15);
        assert!(certify(&problem, &sol).unwrap().pass);
    }

    #[test]
    fn single_number_constraint() {
        let space = FockSpace::new(1, 2).unwrap();
        let n = number_op(space, 0).unwrap();
        let c = ObservableConstraint::new(n, 0.5, 1e-6, DEFAULT_TOL).unwrap();
        let problem = FellProblem::new(space, vec![c], SolverConfig::default()).unwrap();
        let sol = solve_fell(&problem).unwrap();
        assert_eq!(sol.status, FellStatus::Feasible);
        assert!(sol.residuals[0].abs() < 1e-6);
    }

    #[test]
    fn spectral_infeasibility_detected() {
        let space = FockSpace::new(1, 2).unwrap();
        let n = number_op(space, 0).unwrap();
        let c = ObservableConstraint::new(n, 3.0, 1e-6, DEFAULT_TOL).unwrap();
        let problem = FellProblem::new(space, vec![c], SolverConfig::default()).unwrap();
        assert!(matches!(
            solve_fell(&problem),
            Err(QitError::ProvablyInfeasible { index: 0, .. })
        ));
    }

    #[test]
    fn hidden_state_instance_is_recovered() {
        let space = FockSpace::new(1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let hidden = random::density_matrix(space, &mut rng);
        let constraints: Vec<ObservableConstraint> = (0..4)
            .map(|_| {
                let a = random::hermitian(space, &mut rng);
                let target = expectation(&hidden, &a).unwrap().re;
                ObservableConstraint::new(a, target, 1e-6, DEFAULT_TOL).unwrap()
            })
            .collect();
        let problem = FellProblem::new(space, constraints, SolverConfig::default()).unwrap();
        let sol = solve_fell(&problem).unwrap();
        assert_eq!(sol.status, FellStatus::Feasible, "residuals {:?}", sol.residuals);
        // monotone objective
        for w in sol.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let report = certify(&problem, &sol).unwrap();
        assert!(report.pass);
        assert!(report.reported_residuals_match);
    }

    #[test]
    fn certify_flags_tampered_solution() {
        let space = FockSpace::new(1, 2).unwrap();
        let n = number_op(space, 0).unwrap();
        let c = ObservableConstraint::new(n.clone(), 0.5, 1e-6, DEFAULT_TOL).unwrap();
        let problem = FellProblem::new(space, vec![c], SolverConfig::default()).unwrap();
        let sol = solve_fell(&problem).unwrap();
        // trace-preserving Hermitian perturbation of norm 1e-2
        let mut pert = CMatrix::zeros(3, 3);
        pert[(1, 1)] = num_complex::Complex64::new(1e-2 / 2f64.sqrt(), 0.0);
        pert[(2, 2)] = num_complex::Complex64::new(-1e-2 / 2f64.sqrt(), 0.0);
        let tampered = FellSolution {
            rho2: DensityMatrix::new_unchecked(space, sol.rho2.entries() + pert),
            ..sol.clone()
        };
        let report = certify(&problem, &tampered).unwrap();
        assert!(!report.pass || !report.reported_residuals_match);
        assert!(report.residual_agreement > 1e-12);
    }

    #[test]
    fn simplex_projection_against_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let v: Vec<f64> = (0..3)
                .map(|_| 4.0 * rand::Rng::random::<f64>(&mut rng) - 2.0)
                .collect();
            let p = simplex_projection(&v);
            assert!(p.iter().all(|&x| x >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let dist: f64 = p.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            // brute-force grid over the simplex
            let steps = 100;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let g = [
                        i as f64 / steps as f64,
                        j as f64 / steps as f64,
                        (steps - i - j) as f64 / steps as f64,
                    ];
                    let gd: f64 = g.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
                    assert!(dist <= gd + 1e-9);
                }
            }
        }
    }

    #[test]
    fn make_constraints_identity_pair() {
        let space = FockSpace::new(1, 2).unwrap();
        let psi = space.basis_state(&[1]).unwrap();
        let rho = DensityMatrix::pure(space, &psi).unwrap();
        let mut pair = RepresentationPair::new(rho, space);
        pair.register_builtin("number").unwrap();
        let problem =
            make_constraints(&pair, &["number"], &[1e-6], SolverConfig::default()).unwrap();
        assert!((problem.constraints()[0].target - 1.0).abs() < 1e-12);
    }

    #[test]
    fn make_constraints_empty_names() {
        let space = FockSpace::new(1, 2).unwrap();
        let pair = RepresentationPair::new(DensityMatrix::maximally_mixed(space), space);
        let problem = make_constraints(&pair, &[], &[], SolverConfig::default()).unwrap();
        assert!(problem.constraints().is_empty());
    }

    #[test]
    fn make_constraints_unresolved_name() {
        let space = FockSpace::new(1, 2).unwrap();
        let pair = RepresentationPair::new(DensityMatrix::maximally_mixed(space), space);
        assert!(matches!(
            make_constraints(&pair, &["momentum"], &[1e-3], SolverConfig::default()),
            Err(QitError::UnresolvedElement { .. })
        ));
    }

    #[test]
    fn cross_cutoff_thermal_targets() {
        // source thermal at cutoff 30, "number" target lands within the tail
        use crate::unruh::{rindler_thermal_state, SqueezingParams};
        let params = SqueezingParams::new(std::f64::consts::TAU, 1.0).unwrap();
        let big = FockSpace::new(1, 30).unwrap();
        let small = FockSpace::new(1, 12).unwrap();
        let source = rindler_thermal_state(big, &params).unwrap();
        let mut pair = RepresentationPair::new(source, small);
        pair.register_builtin("number").unwrap();
        let problem =
            make_constraints(&pair, &["number"], &[1e-3], SolverConfig::default()).unwrap();
        let exact = 1.0 / (std::f64::consts::E - 1.0);
        assert!((problem.constraints()[0].target - exact).abs() < 1e-9);
        let sol = solve_fell(&problem).unwrap();
        assert_eq!(sol.status, FellStatus::Feasible);
    }
}
