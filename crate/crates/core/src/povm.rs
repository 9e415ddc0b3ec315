//! Generalized measurements: POVM axioms and validation, the probability
//! rule, spectral projection-valued measures, constructive Neumark dilation
//! and finite-shot frequency simulation.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QitError, Result};
use crate::hilbert::{check_spaces, eigh, CMatrix, DensityMatrix, FockSpace, Operator, DEFAULT_TOL};

/// Finite discrete outcome set; the sigma-algebra is its power set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSet {
    labels: Vec<String>,
}

impl OutcomeSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(QitError::Empty {
                what: "outcome labels",
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(QitError::DuplicateLabel(l.clone()));
            }
        }
        Ok(OutcomeSet { labels })
    }

    pub fn indexed(n: usize) -> Self {
        OutcomeSet {
            labels: (0..n).map(|k| k.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A positive operator valued measure on a truncated Fock space: one effect
/// per outcome, each positive semidefinite, summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct POVM {
    space: FockSpace,
    outcomes: OutcomeSet,
    effects: Vec<Operator>,
}

impl POVM {
    /// Validates the POVM axioms and returns the measure, or the first
    /// violated axiom with its magnitude.
    pub fn new(outcomes: OutcomeSet, effects: Vec<Operator>, tol: f64) -> Result<Self> {
        if effects.is_empty() {
            return Err(QitError::Empty { what: "effects" });
        }
        if effects.len() != outcomes.len() {
            return Err(QitError::DimensionMismatch {
                expected: outcomes.len(),
                found: effects.len(),
            });
        }
        let space = effects[0].space();
        for e in &effects[1..] {
            check_spaces(space, e.space())?;
        }
        for (label, e) in outcomes.labels().iter().zip(&effects) {
            if !e.is_hermitian(tol) {
                return Err(QitError::NotHermitian {
                    residual: e.hermiticity_residual(),
                });
            }
            let min = e.min_eigenvalue();
            if min < -tol {
                return Err(QitError::NotPositive {
                    label: label.clone(),
                    min_eigenvalue: min,
                });
            }
        }
        let mut sum = Operator::zeros(space);
        for e in &effects {
            sum = sum.add(e)?;
        }
        let residual = sum.sub(&Operator::identity(space))?.norm();
        if residual > tol * (space.dim() as f64).sqrt().max(1.0) {
            return Err(QitError::Incomplete { residual });
        }
        Ok(POVM {
            space,
            outcomes,
            effects,
        })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn outcomes(&self) -> &OutcomeSet {
        &self.outcomes
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn effect(&self, label: &str) -> Option<&Operator> {
        self.outcomes.index_of(label).map(|k| &self.effects[k])
    }

    /// Effect of a label subset: the sum of the member effects (additivity
    /// holds by construction for discrete outcomes).
    pub fn effect_of_subset(&self, labels: &[&str]) -> Result<Operator> {
        let mut out = Operator::zeros(self.space);
        for l in labels {
            let e = self
                .effect(l)
                .ok_or_else(|| QitError::InvalidInput(format!("unknown outcome '{l}'")))?;
            out = out.add(e)?;
        }
        Ok(out)
    }

    /// Outcome probabilities p_k = tr(rho E_k), numerical negatives within
    /// `tol` clipped to zero.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        check_spaces(self.space, rho.space())?;
        let mut out = Vec::with_capacity(self.effects.len());
        for e in &self.effects {
            let p = crate::hilbert::expectation(rho, e)?.re;
            out.push(if p < 0.0 { 0.0 } else { p });
        }
        Ok(out)
    }

    /// Merge two outcomes into one by summing their effects.
    pub fn coarse_grain(&self, first: &str, second: &str, merged: &str) -> Result<POVM> {
        let i = self
            .outcomes
            .index_of(first)
            .ok_or_else(|| QitError::InvalidInput(format!("unknown outcome '{first}'")))?;
        let j = self
            .outcomes
            .index_of(second)
            .ok_or_else(|| QitError::InvalidInput(format!("unknown outcome '{second}'")))?;
        if i == j {
            return Err(QitError::InvalidInput("cannot merge an outcome with itself".into()));
        }
        let mut labels = Vec::new();
        let mut effects = Vec::new();
        for (k, l) in self.outcomes.labels().iter().enumerate() {
            if k == i {
                labels.push(merged.to_string());
                effects.push(self.effects[i].add(&self.effects[j])?);
            } else if k != j {
                labels.push(l.clone());
                effects.push(self.effects[k].clone());
            }
        }
        POVM::new(OutcomeSet::new(labels)?, effects, DEFAULT_TOL)
    }
}

/// A POVM whose effects are mutually orthogonal projections.
#[derive(Debug, Clone, PartialEq)]
pub struct PVM {
    povm: POVM,
}

impl PVM {
    pub fn new(povm: POVM, tol: f64) -> Result<Self> {
        for e in povm.effects() {
            if !e.is_projection(tol) {
                return Err(QitError::InvalidInput(
                    "PVM effect is not a projection".into(),
                ));
            }
        }
        for (i, a) in povm.effects().iter().enumerate() {
            for b in &povm.effects()[i + 1..] {
                if a.matmul(b)?.norm() > tol * (1.0 + a.norm() * b.norm()) {
                    return Err(QitError::InvalidInput(
                        "PVM effects are not mutually orthogonal".into(),
                    ));
                }
            }
        }
        Ok(PVM { povm })
    }

    pub fn as_povm(&self) -> &POVM {
        &self.povm
    }

    pub fn effects(&self) -> &[Operator] {
        self.povm.effects()
    }

    pub fn outcomes(&self) -> &OutcomeSet {
        self.povm.outcomes()
    }
}

/// Spectral PVM of a Hermitian operator: eigenvalues within `cluster_tol` of
/// each other are merged into a single outcome. Returns the PVM and the
/// representative eigenvalue per outcome, ascending.
pub fn spectral_pvm(a: &Operator, cluster_tol: Option<f64>, tol: f64) -> Result<(PVM, Vec<f64>)> {
    if !a.is_hermitian(tol) {
        return Err(QitError::NotHermitian {
            residual: a.hermiticity_residual(),
        });
    }
    let (vals, vecs) = eigh(a.entries());
    let scale = vals
        .iter()
        .fold(0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let ctol = cluster_tol.unwrap_or(1e-8 * scale);

    let d = a.space().dim();
    let mut eigenvalues = Vec::new();
    let mut effects: Vec<Operator> = Vec::new();
    let mut k = 0;
    while k < d {
        let mut j = k + 1;
        while j < d && (vals[j] - vals[j - 1]).abs() <= ctol {
            j += 1;
        }
        let mut proj = CMatrix::zeros(d, d);
        let mut mean = 0.0;
        for col in k..j {
            let v = vecs.column(col);
            proj += &v * v.adjoint();
            mean += vals[col];
        }
        mean /= (j - k) as f64;
        eigenvalues.push(mean);
        effects.push(Operator::new(a.space(), proj)?);
        k = j;
    }
    let labels: Vec<String> = (0..effects.len()).map(|i| format!("ev{i}")).collect();
    let povm = POVM::new(OutcomeSet::new(labels)?, effects, tol.max(1e-8))?;
    let pvm = PVM::new(povm, tol.max(1e-8))?;
    Ok((pvm, eigenvalues))
}

/// Constructive Neumark dilation of a POVM with `m` outcomes on dimension `d`:
/// the isometry `V = sum_k |k> (x) sqrt(E_k)` into C^m (x) H, with projectors
/// `P_k = |k><k| (x) I_d`. Compression recovers the effects: `V^dag P_k V = E_k`.
#[derive(Debug, Clone)]
pub struct NeumarkDilation {
    original: POVM,
    dilation_dim: usize,
    isometry: CMatrix,
    projectors: Vec<CMatrix>,
}

impl NeumarkDilation {
    pub fn original(&self) -> &POVM {
        &self.original
    }

    pub fn dilation_dim(&self) -> usize {
        self.dilation_dim
    }

    /// The (m*d) x d isometry V.
    pub fn isometry(&self) -> &CMatrix {
        &self.isometry
    }

    /// Projectors of the dilated PVM, on the dilation space.
    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// ||V^dag V - I_d||.
    pub fn isometry_residual(&self) -> f64 {
        let d = self.original.space().dim();
        (self.isometry.adjoint() * &self.isometry - CMatrix::identity(d, d)).norm()
    }

    /// ||V^dag P_k V - E_k|| for outcome k.
    pub fn compression_residual(&self, k: usize) -> f64 {
        let e = &self.original.effects()[k];
        (self.isometry.adjoint() * &self.projectors[k] * &self.isometry - e.entries()).norm()
    }

    /// Probabilities computed through the dilation: tr((V rho V^dag) P_k).
    pub fn dilated_probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        check_spaces(self.original.space(), rho.space())?;
        let lifted = &self.isometry * rho.entries() * self.isometry.adjoint();
        Ok(self
            .projectors
            .iter()
            .map(|p| {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..self.dilation_dim {
                    acc += (lifted.row(i) * p.column(i))[(0, 0)];
                }
                acc.re.max(0.0)
            })
            .collect())
    }
}

/// Square-root dilation of a valid POVM (the minimal C^m (x) H form).
pub fn neumark_dilate(povm: &POVM) -> Result<NeumarkDilation> {
    let d = povm.space().dim();
    let m = povm.outcomes().len();
    let dilation_dim = m * d;
    let mut isometry = CMatrix::zeros(dilation_dim, d);
    let mut projectors = Vec::with_capacity(m);
    for (k, e) in povm.effects().iter().enumerate() {
        let root = e.sqrt_psd(DEFAULT_TOL).map_err(|err| match err {
            QitError::NotPositive { min_eigenvalue, .. } => QitError::NotPositive {
                label: povm.outcomes().labels()[k].clone(),
                min_eigenvalue,
            },
            other => other,
        })?;
        isometry
            .view_mut((k * d, 0), (d, d))
            .copy_from(root.entries());
        let mut p = CMatrix::zeros(dilation_dim, dilation_dim);
        p.view_mut((k * d, k * d), (d, d))
            .copy_from(&CMatrix::identity(d, d));
        projectors.push(p);
    }
    Ok(NeumarkDilation {
        original: povm.clone(),
        dilation_dim,
        isometry,
        projectors,
    })
}

/// Finite-shot measurement record: probabilities, counts, frequencies and the
/// five-sigma binomial bound used for the accuracy check.
#[derive(Debug, Clone)]
pub struct FrequencyReport {
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
    pub counts: Vec<u64>,
    pub shots: u64,
    pub frequencies: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub violated: Vec<bool>,
}

impl FrequencyReport {
    pub fn any_violation(&self) -> bool {
        self.violated.iter().any(|&v| v)
    }

    /// CSV body: label,p,count,w,epsilon,violated. 17 significant digits,
    /// '.' decimal, ',' separator.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,p,count,w,epsilon,violated\n");
        for k in 0..self.labels.len() {
            out.push_str(&format!(
                "{},{:.16e},{},{:.16e},{:.16e},{}\n",
                self.labels[k],
                self.probabilities[k],
                self.counts[k],
                self.frequencies[k],
                self.epsilons[k],
                self.violated[k]
            ));
        }
        out
    }
}

/// Samples `shots` outcomes i.i.d. from the POVM probabilities. Deterministic
/// given the seed. The reported bound is eps_j = 5 sqrt(p_j (1-p_j) / N).
pub fn simulate_frequencies(
    povm: &POVM,
    rho: &DensityMatrix,
    shots: u64,
    seed: u64,
) -> Result<FrequencyReport> {
    if shots == 0 {
        return Err(QitError::InvalidInput("shots must be at least 1".into()));
    }
    let probabilities = povm.probabilities(rho)?;
    let total: f64 = probabilities.iter().sum();
    let mut cumulative = Vec::with_capacity(probabilities.len());
    let mut acc = 0.0;
    for p in &probabilities {
        acc += p / total;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; probabilities.len()];
    for _ in 0..shots {
        let u: f64 = rng.random();
        let k = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(probabilities.len() - 1);
        counts[k] += 1;
    }
    let n = shots as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let epsilons: Vec<f64> = probabilities
        .iter()
        .map(|&p| 5.0 * (p * (1.0 - p) / n).sqrt())
        .collect();
    let violated: Vec<bool> = (0..probabilities.len())
        .map(|k| (frequencies[k] - probabilities[k]).abs() > epsilons[k].max(f64::EPSILON))
        .collect();
    Ok(FrequencyReport {
        labels: povm.outcomes().labels().to_vec(),
        probabilities,
        counts,
        shots,
        frequencies,
        epsilons,
        violated,
    })
}
