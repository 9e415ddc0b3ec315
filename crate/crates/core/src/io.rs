//! JSON schemas for every file the toolkit reads or writes, and the
//! conversions between them and the domain types.
//!
//! Matrices are stored as separate row-major real and imaginary parts:
//! `{"dim": d, "re": [[...]], "im": [[...]]}`. Complex scalars elsewhere are
//! two-element `[re, im]` arrays.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::error::{QitError, Result};
use crate::fell::{
    FellProblem, FellSolution, FellStatus, ObservableConstraint, SolverConfig,
};
use crate::hilbert::{CMatrix, DensityMatrix, FockSpace, Operator, DEFAULT_TOL};
use crate::povm::{OutcomeSet, POVM};
use crate::unruh::SqueezeMethod;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FockSpaceJson {
    pub modes: usize,
    pub cutoff: usize,
}

impl FockSpaceJson {
    pub fn to_space(&self) -> Result<FockSpace> {
        FockSpace::new(self.modes, self.cutoff)
    }

    pub fn from_space(space: FockSpace) -> Self {
        FockSpaceJson {
            modes: space.modes(),
            cutoff: space.cutoff(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let re = (0..dim)
            .map(|i| (0..dim).map(|j| m[(i, j)].re).collect())
            .collect();
        let im = (0..dim)
            .map(|i| (0..dim).map(|j| m[(i, j)].im).collect())
            .collect();
        MatrixJson { dim, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.dim;
        if self.re.len() != d || self.im.len() != d {
            return Err(QitError::InvalidInput(format!(
                "matrix field 're'/'im' must have {d} rows"
            )));
        }
        for (name, rows) in [("re", &self.re), ("im", &self.im)] {
            if rows.iter().any(|r| r.len() != d) {
                return Err(QitError::InvalidInput(format!(
                    "matrix field '{name}' has a row of wrong length (expected {d})"
                )));
            }
        }
        Ok(DMatrix::from_fn(d, d, |i, j| {
            Complex64::new(self.re[i][j], self.im[i][j])
        }))
    }

    pub fn to_operator(&self, space: FockSpace) -> Result<Operator> {
        Operator::new(space, self.to_matrix()?)
    }

    pub fn to_density(&self, space: FockSpace, tol: f64) -> Result<DensityMatrix> {
        DensityMatrix::new(space, self.to_matrix()?, tol)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmJson {
    pub space: FockSpaceJson,
    pub outcomes: Vec<String>,
    pub effects: BTreeMap<String, MatrixJson>,
}

impl PovmJson {
    pub fn from_povm(povm: &POVM) -> Self {
        let effects = povm
            .outcomes()
            .labels()
            .iter()
            .zip(povm.effects())
            .map(|(l, e)| (l.clone(), MatrixJson::from_matrix(e.entries())))
            .collect();
        PovmJson {
            space: FockSpaceJson::from_space(povm.space()),
            outcomes: povm.outcomes().labels().to_vec(),
            effects,
        }
    }

    pub fn to_povm(&self, tol: f64) -> Result<POVM> {
        let space = self.space.to_space()?;
        let outcomes = OutcomeSet::new(self.outcomes.clone())?;
        let mut effects = Vec::with_capacity(self.outcomes.len());
        for label in &self.outcomes {
            let m = self.effects.get(label).ok_or_else(|| {
                QitError::InvalidInput(format!("missing effect for outcome '{label}'"))
            })?;
            effects.push(m.to_operator(space)?);
        }
        POVM::new(outcomes, effects, tol)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub space: FockSpaceJson,
    pub kraus: Vec<MatrixJson>,
    pub selective: bool,
}

impl ChannelJson {
    pub fn from_channel(t: &KrausChannel) -> Self {
        ChannelJson {
            space: FockSpaceJson::from_space(t.space()),
            kraus: t
                .kraus_ops()
                .iter()
                .map(|a| MatrixJson::from_matrix(a.entries()))
                .collect(),
            selective: t.is_selective(),
        }
    }

    pub fn to_channel(&self, tol: f64) -> Result<KrausChannel> {
        let space = self.space.to_space()?;
        let kraus = self
            .kraus
            .iter()
            .map(|m| m.to_operator(space))
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(kraus, self.selective, tol)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintJson {
    #[serde(rename = "A")]
    pub a: MatrixJson,
    pub c: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FellProblemJson {
    pub space: FockSpaceJson,
    pub constraints: Vec<ConstraintJson>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_iters() -> usize {
    10_000
}

impl FellProblemJson {
    pub fn to_problem(&self, tol: f64) -> Result<FellProblem> {
        let space = self.space.to_space()?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| ObservableConstraint::new(c.a.to_operator(space)?, c.c, c.eps, tol))
            .collect::<Result<Vec<_>>>()?;
        let config = SolverConfig {
            max_iters: self.max_iters,
            seed: self.seed,
            ..SolverConfig::default()
        };
        FellProblem::new(space, constraints, config)
    }

    pub fn from_problem(problem: &FellProblem) -> Self {
        FellProblemJson {
            space: FockSpaceJson::from_space(problem.space()),
            constraints: problem
                .constraints()
                .iter()
                .map(|c| ConstraintJson {
                    a: MatrixJson::from_matrix(c.a.entries()),
                    c: c.target,
                    eps: c.epsilon,
                })
                .collect(),
            max_iters: problem.config.max_iters,
            seed: problem.config.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FellSolutionJson {
    pub rho: MatrixJson,
    pub residuals: Vec<f64>,
    pub status: String,
    pub iterations: usize,
}

impl FellSolutionJson {
    pub fn from_solution(sol: &FellSolution) -> Self {
        FellSolutionJson {
            rho: MatrixJson::from_matrix(sol.rho2.entries()),
            residuals: sol.residuals.iter().map(|r| r.abs()).collect(),
            status: match sol.status {
                FellStatus::Feasible => "Feasible".into(),
                FellStatus::ToleranceNotMet => "ToleranceNotMet".into(),
            },
            iterations: sol.iterations,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnruhScenarioJson {
    pub a: f64,
    pub omega: f64,
    pub alpha: f64,
    /// Detector mode function as [re, im] pairs.
    pub chi: Vec<[f64; 2]>,
    pub cutoffs: Vec<usize>,
    #[serde(default = "default_method")]
    pub method: String,
}

fn default_method() -> String {
    "series".into()
}

impl UnruhScenarioJson {
    pub fn chi_complex(&self) -> Vec<Complex64> {
        self.chi.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    }

    pub fn method(&self) -> Result<SqueezeMethod> {
        match self.method.as_str() {
            "series" => Ok(SqueezeMethod::Series),
            "generator" => Ok(SqueezeMethod::Generator),
            other => Err(QitError::InvalidInput(format!(
                "unknown method '{other}' (expected 'series' or 'generator')"
            ))),
        }
    }
}

/// Structural tolerance used by the CLI: `CURVEDQIT_TOL` overrides the
/// default 1e-9.
pub fn env_tol() -> f64 {
    std::env::var("CURVEDQIT_TOL")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_TOL)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
