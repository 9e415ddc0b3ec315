//! Seeded random generators for operators, states, POVMs and channels.
//! Used by the test suites and the CLI's self-check paths.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::KrausChannel;
use crate::hilbert::{expm_antihermitian, CMatrix, DensityMatrix, FockSpace, Operator};
use crate::povm::{OutcomeSet, POVM};

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Random Hermitian operator with O(1) entries.
pub fn hermitian<R: Rng>(space: FockSpace, rng: &mut R) -> Operator {
    let g = ginibre(space.dim(), space.dim(), rng);
    let h = (&g + g.adjoint()).scale(0.5);
    Operator::new(space, h).expect("square by construction")
}

/// Random full-rank density matrix (normalized Wishart).
pub fn density_matrix<R: Rng>(space: FockSpace, rng: &mut R) -> DensityMatrix {
    let g = ginibre(space.dim(), space.dim(), rng);
    let w = &g * g.adjoint();
    let tr: f64 = w.diagonal().iter().map(|c| c.re).sum();
    DensityMatrix::new_unchecked(space, w.unscale(tr))
}

/// Haar-ish random unitary: exponential of a random antihermitian generator.
pub fn unitary<R: Rng>(space: FockSpace, rng: &mut R) -> Operator {
    let h = hermitian(space, rng);
    let g = h.scale(Complex64::new(0.0, 1.0));
    expm_antihermitian(&g, 1e-6).expect("antihermitian by construction")
}

/// Random POVM from normalized random positive operators:
/// `E_k = S^{-1/2} G_k S^{-1/2}` with `G_k` Wishart and `S = sum G_k`.
pub fn povm<R: Rng>(space: FockSpace, outcomes: usize, rng: &mut R) -> POVM {
    let d = space.dim();
    let gs: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(d, d, rng);
            &g * g.adjoint()
        })
        .collect();
    let mut s = CMatrix::zeros(d, d);
    for g in &gs {
        s += g;
    }
    let (vals, vecs) = crate::hilbert::eigh(&s);
    let mut inv_root = CMatrix::zeros(d, d);
    for (k, &v) in vals.iter().enumerate() {
        let col = vecs.column(k);
        inv_root += (&col * col.adjoint()).scale(1.0 / v.sqrt());
    }
    let effects: Vec<Operator> = gs
        .iter()
        .map(|g| Operator::new(space, &inv_root * g * &inv_root).expect("square"))
        .collect();
    POVM::new(OutcomeSet::indexed(outcomes), effects, 1e-8).expect("valid by construction")
}

/// Random non-selective channel from a Haar-ish isometry H -> H (x) C^n:
/// blocks `B_k` satisfy `sum B_k^dag B_k = I`; Kraus operators are `A_k = B_k^dag`
/// so that `sum A_k A_k^dag = I` under the adjoint-left ordering.
pub fn kraus_channel<R: Rng>(space: FockSpace, n_ops: usize, rng: &mut R) -> KrausChannel {
    let d = space.dim();
    let g = ginibre(d * n_ops, d, rng);
    let qr = g.qr();
    let q = qr.q(); // (d*n_ops) x d, orthonormal columns
    let kraus: Vec<Operator> = (0..n_ops)
        .map(|k| {
            let block = q.view((k * d, 0), (d, d)).into_owned();
            Operator::new(space, block.adjoint()).expect("square")
        })
        .collect();
    KrausChannel::new(kraus, false, 1e-8).expect("isometry columns")
}
