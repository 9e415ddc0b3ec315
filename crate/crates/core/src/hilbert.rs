//! Truncated multimode bosonic Fock spaces and the dense complex-matrix
//! operator algebra on them.
//!
//! Basis ordering is fixed lexicographically in the occupation numbers
//! `|n_1, ..., n_M>` with `n_1` the slowest index, so every matrix built here
//! is bit-comparable across runs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QitError, Result};

/// Default structural tolerance for predicate checks.
pub const DEFAULT_TOL: f64 = 1e-9;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A finite truncated bosonic Hilbert space: `modes` oscillators, each with a
/// hard occupation cutoff `n_max`. Dimension is `(n_max + 1)^modes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockSpace {
    modes: usize,
    cutoff: usize,
    dim: usize,
}

impl FockSpace {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        if modes == 0 {
            return Err(QitError::InvalidInput("modes must be positive".into()));
        }
        if cutoff == 0 {
            return Err(QitError::InvalidInput("cutoff must be positive".into()));
        }
        let per_mode = cutoff + 1;
        let mut dim: usize = 1;
        for _ in 0..modes {
            dim = dim
                .checked_mul(per_mode)
                .ok_or_else(|| QitError::InvalidInput("space dimension overflows".into()))?;
        }
        Ok(FockSpace { modes, cutoff, dim })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lexicographic index of an occupation tuple, `n_1` slowest.
    pub fn basis_index(&self, occ: &[usize]) -> Result<usize> {
        if occ.len() != self.modes {
            return Err(QitError::DimensionMismatch {
                expected: self.modes,
                found: occ.len(),
            });
        }
        let mut idx = 0;
        for &n in occ {
            if n > self.cutoff {
                return Err(QitError::InvalidInput(format!(
                    "occupation {n} exceeds cutoff {}",
                    self.cutoff
                )));
            }
            idx = idx * (self.cutoff + 1) + n;
        }
        Ok(idx)
    }

    /// Occupation tuple of a basis index.
    pub fn occupation(&self, mut index: usize) -> Vec<usize> {
        let per = self.cutoff + 1;
        let mut occ = vec![0usize; self.modes];
        for m in (0..self.modes).rev() {
            occ[m] = index % per;
            index /= per;
        }
        occ
    }

    pub fn basis_state(&self, occ: &[usize]) -> Result<CVector> {
        let idx = self.basis_index(occ)?;
        let mut v = CVector::zeros(self.dim);
        v[idx] = ONE;
        Ok(v)
    }

    pub fn vacuum(&self) -> CVector {
        let mut v = CVector::zeros(self.dim);
        v[0] = ONE;
        v
    }
}

/// Hermitian eigendecomposition with eigenpairs sorted ascending.
/// The input is hermitized first; callers are responsible for checking the
/// residual when that matters.
pub(crate) fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let se = h.symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(k));
    }
    (vals, vecs)
}

/// A dense operator on a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: FockSpace,
    entries: CMatrix,
}

impl Operator {
    pub fn new(space: FockSpace, entries: CMatrix) -> Result<Self> {
        if entries.nrows() != space.dim() || entries.ncols() != space.dim() {
            return Err(QitError::DimensionMismatch {
                expected: space.dim(),
                found: entries.nrows().max(entries.ncols()),
            });
        }
        Ok(Operator { space, entries })
    }

    pub fn zeros(space: FockSpace) -> Self {
        Operator {
            space,
            entries: CMatrix::zeros(space.dim(), space.dim()),
        }
    }

    pub fn identity(space: FockSpace) -> Self {
        Operator {
            space,
            entries: CMatrix::identity(space.dim(), space.dim()),
        }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            space: self.space,
            entries: self.entries.adjoint(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Operator {
        Operator {
            space: self.space,
            entries: &self.entries * c,
        }
    }

    pub fn scale_re(&self, c: f64) -> Operator {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diagonal().iter().sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol * (1.0 + self.norm())
    }

    /// Eigenvalues of the hermitized matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.entries).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.min_eigenvalue() >= -tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.space.dim();
        let res = (&self.entries * self.entries.adjoint() - CMatrix::identity(d, d)).norm();
        res <= tol * (d as f64).sqrt().max(1.0)
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.is_hermitian(tol)
            && (&self.entries * &self.entries - &self.entries).norm()
                <= tol * (1.0 + self.norm())
    }

    /// Principal square root of a positive semidefinite operator. Eigenvalues
    /// below `-tol` are rejected; small negatives within `tol` are clamped.
    pub fn sqrt_psd(&self, tol: f64) -> Result<Operator> {
        let (vals, vecs) = eigh(&self.entries);
        if vals[0] < -tol {
            return Err(QitError::NotPositive {
                label: String::new(),
                min_eigenvalue: vals[0],
            });
        }
        let mut scaled = vecs.clone();
        for (k, &v) in vals.iter().enumerate() {
            let s = Complex64::new(v.max(0.0).sqrt(), 0.0);
            for x in scaled.column_mut(k).iter_mut() {
                *x *= s;
            }
        }
        Ok(Operator {
            space: self.space,
            entries: scaled * vecs.adjoint(),
        })
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        check_spaces(self.space, other.space)?;
        Ok(Operator {
            space: self.space,
            entries: &self.entries * &other.entries,
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        check_spaces(self.space, other.space)?;
        Ok(Operator {
            space: self.space,
            entries: &self.entries + &other.entries,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        check_spaces(self.space, other.space)?;
        Ok(Operator {
            space: self.space,
            entries: &self.entries - &other.entries,
        })
    }
}

pub(crate) fn check_spaces(a: FockSpace, b: FockSpace) -> Result<()> {
    if a != b {
        return Err(QitError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// A density matrix: Hermitian, positive semidefinite and unit trace within
/// the construction tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: FockSpace,
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: FockSpace, entries: CMatrix, tol: f64) -> Result<Self> {
        if entries.nrows() != space.dim() || entries.ncols() != space.dim() {
            return Err(QitError::DimensionMismatch {
                expected: space.dim(),
                found: entries.nrows().max(entries.ncols()),
            });
        }
        let herm = (&entries - entries.adjoint()).norm();
        if herm > tol * (1.0 + entries.norm()) {
            return Err(QitError::InvalidDensityMatrix {
                reason: format!("not Hermitian (residual {herm:.3e})"),
            });
        }
        let tr: Complex64 = entries.diagonal().iter().sum();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(QitError::InvalidDensityMatrix {
                reason: format!("trace {tr} not 1"),
            });
        }
        let (vals, _) = eigh(&entries);
        if vals[0] < -tol {
            return Err(QitError::InvalidDensityMatrix {
                reason: format!("negative eigenvalue {:.3e}", vals[0]),
            });
        }
        Ok(DensityMatrix { space, entries })
    }

    /// Skips the structural checks; for internal construction where the
    /// invariants hold by construction.
    pub fn new_unchecked(space: FockSpace, entries: CMatrix) -> Self {
        DensityMatrix { space, entries }
    }

    /// Projector onto a (normalized copy of a) state vector.
    pub fn pure(space: FockSpace, psi: &CVector) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(QitError::DimensionMismatch {
                expected: space.dim(),
                found: psi.len(),
            });
        }
        let n = psi.norm();
        if n == 0.0 {
            return Err(QitError::InvalidDensityMatrix {
                reason: "zero state vector".into(),
            });
        }
        let v = psi.unscale(n);
        Ok(DensityMatrix {
            space,
            entries: &v * v.adjoint(),
        })
    }

    pub fn maximally_mixed(space: FockSpace) -> Self {
        let d = space.dim();
        DensityMatrix {
            space,
            entries: CMatrix::identity(d, d).scale(1.0 / d as f64),
        }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn as_operator(&self) -> Operator {
        Operator {
            space: self.space,
            entries: self.entries.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.entries).0
    }

    /// Fidelity-free purity check: tr(rho^2).
    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries)
            .diagonal()
            .iter()
            .map(|c| c.re)
            .sum()
    }
}

/// Single-mode annihilation operator embedded at `mode`; `<n-1|a|n> = sqrt(n)`.
/// Truncation only removes the raising action of the adjoint at the top level.
pub fn annihilation_op(space: FockSpace, mode: usize) -> Result<Operator> {
    if mode >= space.modes() {
        return Err(QitError::ModeOutOfRange {
            mode,
            modes: space.modes(),
        });
    }
    let per = space.cutoff() + 1;
    let mut single = CMatrix::zeros(per, per);
    for n in 1..per {
        single[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let mut out = single;
    for _ in 0..mode {
        let id = CMatrix::identity(per, per);
        out = id.kronecker(&out);
    }
    for _ in (mode + 1)..space.modes() {
        let id = CMatrix::identity(per, per);
        out = out.kronecker(&id);
    }
    Operator::new(space, out)
}

pub fn creation_op(space: FockSpace, mode: usize) -> Result<Operator> {
    Ok(annihilation_op(space, mode)?.adjoint())
}

/// Number operator of one mode.
pub fn number_op(space: FockSpace, mode: usize) -> Result<Operator> {
    let a = annihilation_op(space, mode)?;
    a.adjoint().matmul(&a)
}

pub fn total_number_op(space: FockSpace) -> Result<Operator> {
    let mut out = Operator::zeros(space);
    for m in 0..space.modes() {
        out = out.add(&number_op(space, m)?)?;
    }
    Ok(out)
}

/// The smeared annihilation operator `a(chi) = sum_m conj(chi_m) a_m` for a
/// detector mode function `chi` (normalized internally; the recorded factor is
/// returned alongside). Antilinear in `chi`, so `a(chi)^dag a(chi) >= 0`.
pub fn mode_op(space: FockSpace, chi: &[Complex64]) -> Result<(Operator, f64)> {
    if chi.len() != space.modes() {
        return Err(QitError::DimensionMismatch {
            expected: space.modes(),
            found: chi.len(),
        });
    }
    let norm: f64 = chi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(QitError::ZeroModeFunction);
    }
    let mut out = Operator::zeros(space);
    for (m, &c) in chi.iter().enumerate() {
        let a = annihilation_op(space, m)?;
        out = out.add(&a.scale(c.conj() / norm))?;
    }
    Ok((out, norm))
}

/// Kronecker product in the fixed lexicographic ordering (first factor slow).
/// Both factors must share the same per-mode cutoff.
pub fn tensor_product(x: &Operator, y: &Operator) -> Result<Operator> {
    if x.space().cutoff() != y.space().cutoff() {
        return Err(QitError::CutoffMismatch {
            left: x.space().cutoff(),
            right: y.space().cutoff(),
        });
    }
    let space = FockSpace::new(x.space().modes() + y.space().modes(), x.space().cutoff())?;
    Operator::new(space, x.entries().kronecker(y.entries()))
}

/// Partial trace keeping the listed modes (order preserved as given, must be
/// strictly increasing). Trace is preserved exactly up to fp addition.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let space = rho.space();
    let modes = space.modes();
    if keep.is_empty() || keep.iter().any(|&m| m >= modes) {
        return Err(QitError::BadKeepSet);
    }
    let mut sorted = keep.to_vec();
    sorted.dedup();
    if sorted.len() != keep.len() || sorted.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QitError::BadKeepSet);
    }
    let traced: Vec<usize> = (0..modes).filter(|m| !keep.contains(m)).collect();
    let out_space = FockSpace::new(keep.len(), space.cutoff())?;
    if traced.is_empty() {
        return Ok(rho.clone());
    }
    let per = space.cutoff() + 1;
    let mut out = CMatrix::zeros(out_space.dim(), out_space.dim());
    let t_dim = per.pow(traced.len() as u32);

    let combine = |kept_occ: &[usize], t_occ: &[usize]| -> usize {
        let mut occ = vec![0usize; modes];
        for (pos, &m) in keep.iter().enumerate() {
            occ[m] = kept_occ[pos];
        }
        for (pos, &m) in traced.iter().enumerate() {
            occ[m] = t_occ[pos];
        }
        occ.iter().fold(0, |acc, &n| acc * per + n)
    };

    for i in 0..out_space.dim() {
        let occ_i = out_space.occupation(i);
        for j in 0..out_space.dim() {
            let occ_j = out_space.occupation(j);
            let mut acc = ZERO;
            for t in 0..t_dim {
                let mut t_occ = vec![0usize; traced.len()];
                let mut rem = t;
                for pos in (0..traced.len()).rev() {
                    t_occ[pos] = rem % per;
                    rem /= per;
                }
                acc += rho.entries()[(combine(&occ_i, &t_occ), combine(&occ_j, &t_occ))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix::new_unchecked(out_space, out))
}

/// exp(g) for antihermitian g, via eigendecomposition of the Hermitian i*g.
/// The result is unitary to machine precision on the truncated space.
pub fn expm_antihermitian(g: &Operator, tol: f64) -> Result<Operator> {
    let res = (g.entries() + g.entries().adjoint()).norm();
    if res > tol * (1.0 + g.norm()) {
        return Err(QitError::NotAntihermitian { residual: res });
    }
    let h = g.entries().map(|c| Complex64::new(0.0, 1.0) * c);
    let (vals, vecs) = eigh(&h);
    let mut scaled = vecs.clone();
    for (k, &lam) in vals.iter().enumerate() {
        let phase = Complex64::new(0.0, -lam).exp();
        for v in scaled.column_mut(k).iter_mut() {
            *v *= phase;
        }
    }
    Operator::new(g.space(), scaled * vecs.adjoint())
}

/// tr(rho A).
pub fn expectation(rho: &DensityMatrix, a: &Operator) -> Result<Complex64> {
    check_spaces(rho.space(), a.space())?;
    let mut acc = ZERO;
    for i in 0..rho.space().dim() {
        acc += (rho.entries().row(i) * a.entries().column(i))[(0, 0)];
    }
    Ok(acc)
}

/// Trace distance 0.5 * ||rho - sigma||_1 via singular values; in [0, 1].
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_spaces(rho.space(), sigma.space())?;
    let diff = rho.entries() - sigma.entries();
    let sv = diff.singular_values();
    Ok((0.5 * sv.iter().sum::<f64>()).min(1.0))
}
