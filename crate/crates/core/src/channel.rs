//! Completely positive state transformations in Kraus form, Choi-matrix CP
//! certification, channel composition, the dual (Heisenberg) map and the
//! pushforward of algebraic states.
//!
//! Operator ordering convention: a channel acts as `T[rho] = sum_n A_n^dag rho A_n`
//! (adjoints on the left), so trace preservation reads `sum_n A_n A_n^dag = I`
//! and the dual map is `T^dag[B] = sum_n A_n B A_n^dag` with `T^dag[I] = I`
//! exactly when the channel is non-selective.

use num_complex::Complex64;

use crate::error::{QitError, Result};
use crate::hilbert::{
    check_spaces, eigh, expectation, CMatrix, DensityMatrix, FockSpace, Operator, DEFAULT_TOL,
};

/// A CP map given by explicit Kraus operators. Non-selective channels are
/// trace preserving; selective ones may shrink the trace (outcome weight).
#[derive(Debug, Clone)]
pub struct KrausChannel {
    space: FockSpace,
    kraus: Vec<Operator>,
    selective: bool,
}

impl KrausChannel {
    pub fn new(kraus: Vec<Operator>, selective: bool, tol: f64) -> Result<Self> {
        if kraus.is_empty() {
            return Err(QitError::Empty {
                what: "Kraus operators",
            });
        }
        let space = kraus[0].space();
        for a in &kraus[1..] {
            check_spaces(space, a.space())?;
        }
        let mut sum = Operator::zeros(space);
        for a in &kraus {
            sum = sum.add(&a.matmul(&a.adjoint())?)?;
        }
        let scale = (space.dim() as f64).sqrt().max(1.0);
        let residual = sum.sub(&Operator::identity(space))?.norm();
        if !selective {
            if residual > tol * scale {
                return Err(QitError::BadNormalization { residual });
            }
        } else {
            // selective: sum A A^dag <= I
            let max_ev = *sum
                .eigenvalues()
                .last()
                .expect("nonempty spectrum");
            if max_ev > 1.0 + tol {
                return Err(QitError::BadNormalization {
                    residual: max_ev - 1.0,
                });
            }
        }
        Ok(KrausChannel {
            space,
            kraus,
            selective,
        })
    }

    pub fn identity(space: FockSpace) -> Self {
        KrausChannel {
            space,
            kraus: vec![Operator::identity(space)],
            selective: false,
        }
    }

    /// Unitary conjugation channel; under this ordering it sends
    /// rho to U^dag rho U.
    pub fn from_unitary(u: &Operator, tol: f64) -> Result<Self> {
        if !u.is_unitary(tol) {
            return Err(QitError::NotUnitary {
                residual: (u.entries() * u.entries().adjoint()
                    - CMatrix::identity(u.space().dim(), u.space().dim()))
                .norm(),
            });
        }
        Ok(KrausChannel {
            space: u.space(),
            kraus: vec![u.clone()],
            selective: false,
        })
    }

    /// The superscattering exemplar: replaces any input with the fixed state
    /// sigma, `T[rho] = sigma tr(rho)`. Maximally non-unitary but CPTP.
    pub fn replace_with(sigma: &DensityMatrix) -> Result<Self> {
        let space = sigma.space();
        let d = space.dim();
        let (vals, vecs) = eigh(sigma.entries());
        let mut kraus = Vec::new();
        for (k, &s) in vals.iter().enumerate() {
            if s <= 0.0 {
                continue;
            }
            let v = vecs.column(k);
            for l in 0..d {
                // B = sqrt(s) |v_k><l|, stored as A = B^dag
                let mut b = CMatrix::zeros(d, d);
                for i in 0..d {
                    b[(i, l)] = v[i] * s.sqrt();
                }
                kraus.push(Operator::new(space, b.adjoint())?);
            }
        }
        KrausChannel::new(kraus, false, 1e-8)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn kraus_ops(&self) -> &[Operator] {
        &self.kraus
    }

    pub fn is_selective(&self) -> bool {
        self.selective
    }

    /// Residual of the trace-preservation condition `||sum A A^dag - I||`.
    pub fn normalization_residual(&self) -> f64 {
        let mut sum = Operator::zeros(self.space);
        for a in &self.kraus {
            sum = sum.add(&a.matmul(&a.adjoint()).expect("same space")).expect("same space");
        }
        sum.sub(&Operator::identity(self.space))
            .expect("same space")
            .norm()
    }

    fn apply_raw(&self, rho: &CMatrix) -> CMatrix {
        let d = self.space.dim();
        let mut out = CMatrix::zeros(d, d);
        for a in &self.kraus {
            out += a.entries().adjoint() * rho * a.entries();
        }
        out
    }

    /// Applies the channel. Selective channels renormalize the output and
    /// report the outcome weight (the pre-normalization trace); non-selective
    /// channels report weight 1.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<ChannelOutput> {
        check_spaces(self.space, rho.space())?;
        let raw = self.apply_raw(rho.entries());
        let tr: f64 = raw.diagonal().iter().map(|c| c.re).sum();
        if self.selective {
            if tr < DEFAULT_TOL {
                return Err(QitError::NegligibleOutcome { trace: tr });
            }
            Ok(ChannelOutput {
                rho: DensityMatrix::new_unchecked(self.space, raw.unscale(Complex64::new(tr, 0.0).re)),
                weight: tr,
            })
        } else {
            Ok(ChannelOutput {
                rho: DensityMatrix::new_unchecked(self.space, raw),
                weight: 1.0,
            })
        }
    }

    /// The dual (Heisenberg-picture) action on observables:
    /// `T^dag[B] = sum_n A_n B A_n^dag`.
    pub fn apply_dual(&self, b: &Operator) -> Result<Operator> {
        check_spaces(self.space, b.space())?;
        let d = self.space.dim();
        let mut out = CMatrix::zeros(d, d);
        for a in &self.kraus {
            out += a.entries() * b.entries() * a.entries().adjoint();
        }
        Operator::new(self.space, out)
    }

    /// Choi matrix of the channel.
    pub fn choi(&self) -> ChoiMatrix {
        let d = self.space.dim();
        let mut c = CMatrix::zeros(d * d, d * d);
        for a in &self.kraus {
            // C = sum_n vec(A^dag) vec(A^dag)^dag, row-major vec, first index slow
            let adag = a.entries().adjoint();
            let mut w = CMatrix::zeros(d * d, 1);
            for p in 0..d {
                for i in 0..d {
                    w[(p * d + i, 0)] = adag[(p, i)];
                }
            }
            c += &w * w.adjoint();
        }
        ChoiMatrix {
            space: self.space,
            entries: c,
        }
    }
}

/// Result of applying a channel: a (re)normalized state and the outcome
/// weight (1 for non-selective channels).
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub rho: DensityMatrix,
    pub weight: f64,
}

/// The d^2 x d^2 Choi matrix of a linear map; positive semidefinite exactly
/// when the map is completely positive.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    space: FockSpace,
    entries: CMatrix,
}

impl ChoiMatrix {
    pub fn new(space: FockSpace, entries: CMatrix) -> Result<Self> {
        let d2 = space.dim() * space.dim();
        if entries.nrows() != d2 || entries.ncols() != d2 {
            return Err(QitError::DimensionMismatch {
                expected: d2,
                found: entries.nrows().max(entries.ncols()),
            });
        }
        let res = (&entries - entries.adjoint()).norm();
        if res > DEFAULT_TOL * (1.0 + entries.norm()) {
            return Err(QitError::NotHermitian { residual: res });
        }
        Ok(ChoiMatrix { space, entries })
    }

    /// Choi matrix of an arbitrary linear map given by its action on matrix
    /// units: `C = sum_ij f(|i><j|) (x) |i><j|`.
    pub fn from_map<F>(space: FockSpace, f: F) -> Result<Self>
    where
        F: Fn(&CMatrix) -> CMatrix,
    {
        let d = space.dim();
        let mut c = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let mut unit = CMatrix::zeros(d, d);
                unit[(i, j)] = Complex64::new(1.0, 0.0);
                let img = f(&unit);
                if img.nrows() != d || img.ncols() != d {
                    return Err(QitError::DimensionMismatch {
                        expected: d,
                        found: img.nrows().max(img.ncols()),
                    });
                }
                for p in 0..d {
                    for q in 0..d {
                        c[(p * d + i, q * d + j)] += img[(p, q)];
                    }
                }
            }
        }
        ChoiMatrix::new(space, c)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigh(&self.entries).0[0]
    }

    pub fn is_completely_positive(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    pub fn distance(&self, other: &ChoiMatrix) -> f64 {
        (&self.entries - &other.entries).norm()
    }

    /// Extracts a Kraus representation by eigendecomposition. Eigenvalues
    /// below `-rank_tol * lambda_max` reject the map as not completely
    /// positive; eigenvalues below the same threshold are dropped.
    pub fn kraus_channel(&self, rank_tol: f64) -> Result<KrausChannel> {
        let (vals, vecs) = eigh(&self.entries);
        let lam_max = vals.iter().fold(0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let cut = rank_tol * lam_max;
        if vals[0] < -cut {
            return Err(QitError::NotCompletelyPositive {
                min_eigenvalue: vals[0],
            });
        }
        let d = self.space.dim();
        let mut kraus = Vec::new();
        for (k, &lam) in vals.iter().enumerate() {
            if lam <= cut {
                continue;
            }
            let v = vecs.column(k);
            let mut adag = CMatrix::zeros(d, d);
            for p in 0..d {
                for i in 0..d {
                    adag[(p, i)] = v[p * d + i] * lam.sqrt();
                }
            }
            kraus.push(Operator::new(self.space, adag.adjoint())?);
        }
        if kraus.is_empty() {
            return Err(QitError::Empty {
                what: "extracted Kraus operators",
            });
        }
        // classify by the trace-preservation residual
        let mut sum = Operator::zeros(self.space);
        for a in &kraus {
            sum = sum.add(&a.matmul(&a.adjoint())?)?;
        }
        let residual = sum.sub(&Operator::identity(self.space))?.norm();
        let selective = residual > 1e-8 * (self.space.dim() as f64).sqrt();
        KrausChannel::new(kraus, selective, 1e-8)
    }
}

/// Composition t2 after t1. Kraus list is all products `A1_n A2_m`.
pub fn compose(t2: &KrausChannel, t1: &KrausChannel) -> Result<KrausChannel> {
    check_spaces(t2.space(), t1.space())?;
    let mut kraus = Vec::with_capacity(t1.kraus.len() * t2.kraus.len());
    for a1 in &t1.kraus {
        for a2 in &t2.kraus {
            kraus.push(a1.matmul(a2)?);
        }
    }
    KrausChannel::new(kraus, t1.selective || t2.selective, 1e-8)
}

/// A state of the abstract algebra realized as a density matrix on a tagged
/// representation space.
#[derive(Debug, Clone)]
pub struct AlgebraicState {
    tag: String,
    rho: DensityMatrix,
}

impl AlgebraicState {
    pub fn new(tag: impl Into<String>, rho: DensityMatrix) -> Self {
        AlgebraicState {
            tag: tag.into(),
            rho,
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    /// omega(A) = tr(rho A); also how states extend to adjoined POVM effects.
    pub fn evaluate(&self, a: &Operator) -> Result<Complex64> {
        expectation(&self.rho, a)
    }
}

/// One row of a pushforward expectation table: the transformed expectation
/// computed via the dual map and via the transformed state directly.
#[derive(Debug, Clone)]
pub struct PushforwardRow {
    pub dual_value: f64,
    pub direct_value: f64,
    pub residual: f64,
}

/// Transforms an algebraic state by a channel and tabulates the transformed
/// expectations two ways: through the dual map, `tr(rho T^dag[A])`, and
/// directly on the transformed state. The two routes must agree within 1e-10.
pub fn pushforward(
    omega: &AlgebraicState,
    expected_tag: &str,
    t: &KrausChannel,
    algebra_elems: &[Operator],
) -> Result<(AlgebraicState, Vec<PushforwardRow>)> {
    if omega.tag() != expected_tag {
        return Err(QitError::RepresentationMismatch {
            state_tag: omega.tag().to_string(),
            expected_tag: expected_tag.to_string(),
        });
    }
    check_spaces(omega.rho().space(), t.space())?;
    let out = t.apply(omega.rho())?;
    let mut rows = Vec::with_capacity(algebra_elems.len());
    for a in algebra_elems {
        let dual_value = expectation(omega.rho(), &t.apply_dual(a)?)?.re;
        // selective channels renormalize; undo it for the comparison
        let direct_value = expectation(&out.rho, a)?.re * out.weight;
        let residual = (dual_value - direct_value).abs();
        if residual > 1e-10 * (1.0 + dual_value.abs()) {
            return Err(QitError::DualityMismatch { residual });
        }
        rows.push(PushforwardRow {
            dual_value,
            direct_value,
            residual,
        });
    }
    Ok((AlgebraicState::new(omega.tag(), out.rho), rows))
}
