//! The accelerated-detector worked example: the Minkowski vacuum restricted
//! to a single Rindler frequency is a two-mode squeezed state whose reduction
//! is thermal at temperature a / 2 pi, and a first-order detector POVM whose
//! statistics agree between the two descriptions.

use num_complex::Complex64;

use crate::error::{QitError, Result};
use crate::hilbert::{
    annihilation_op, expm_antihermitian, mode_op, partial_trace, CMatrix, CVector, DensityMatrix,
    FockSpace, Operator, DEFAULT_TOL,
};
use crate::povm::{OutcomeSet, POVM};

/// Acceleration/frequency pair in natural units, with the derived squeezing
/// parameter `tanh r = exp(-pi omega / a)` and temperature `T = a / 2 pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingParams {
    pub acceleration: f64,
    pub omega: f64,
    pub r: f64,
    pub temperature: f64,
}

impl SqueezingParams {
    pub fn new(acceleration: f64, omega: f64) -> Result<Self> {
        if acceleration <= 0.0 || !acceleration.is_finite() {
            return Err(QitError::InvalidInput(
                "acceleration must be positive and finite".into(),
            ));
        }
        if omega <= 0.0 || !omega.is_finite() {
            return Err(QitError::InvalidInput(
                "frequency must be positive and finite".into(),
            ));
        }
        let t = (-std::f64::consts::PI * omega / acceleration).exp();
        let r = t.atanh();
        Ok(SqueezingParams {
            acceleration,
            omega,
            r,
            temperature: acceleration / std::f64::consts::TAU,
        })
    }

    /// Direct construction from the squeezing parameter.
    pub fn from_r(r: f64) -> Result<Self> {
        if r <= 0.0 || !r.is_finite() {
            return Err(QitError::InvalidInput("r must be positive and finite".into()));
        }
        let a = -std::f64::consts::PI / r.tanh().ln();
        SqueezingParams::new(a, 1.0)
    }

    /// Boltzmann factor x = tanh^2 r = exp(-omega / T).
    pub fn boltzmann_x(&self) -> f64 {
        let t = self.r.tanh();
        t * t
    }

    /// Truncation tail weight x^(cutoff+1) left outside the cutoff.
    pub fn truncation_tail(&self, cutoff: usize) -> f64 {
        self.boltzmann_x().powi(cutoff as i32 + 1)
    }
}

/// Construction method for the two-mode squeezed state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqueezeMethod {
    /// Coefficient series sum_n tanh^n r |n,n>, renormalized on the cutoff.
    Series,
    /// exp(r (a1^dag a2^dag - a1 a2)) applied to the vacuum, with the
    /// generator truncated before exponentiating.
    Generator,
}

/// Pure two-mode squeezed vacuum at the given squeezing.
pub fn two_mode_squeezed_state(
    space: FockSpace,
    params: &SqueezingParams,
    method: SqueezeMethod,
) -> Result<DensityMatrix> {
    if space.modes() != 2 {
        return Err(QitError::InvalidInput(format!(
            "two-mode squeezed state needs a 2-mode space, got {}",
            space.modes()
        )));
    }
    match method {
        SqueezeMethod::Series => {
            let t = params.r.tanh();
            let mut psi = CVector::zeros(space.dim());
            let mut coeff = 1.0f64;
            for n in 0..=space.cutoff() {
                let idx = space.basis_index(&[n, n])?;
                psi[idx] = Complex64::new(coeff, 0.0);
                coeff *= t;
            }
            DensityMatrix::pure(space, &psi)
        }
        SqueezeMethod::Generator => {
            let a1 = annihilation_op(space, 0)?;
            let a2 = annihilation_op(space, 1)?;
            let lowering = a1.matmul(&a2)?;
            let raising = lowering.adjoint();
            let g = raising.sub(&lowering)?.scale_re(params.r);
            let u = expm_antihermitian(&g, DEFAULT_TOL)?;
            let psi = u.entries() * space.vacuum();
            DensityMatrix::pure(space, &psi)
        }
    }
}

/// Truncated renormalized Gibbs state, diagonal entries
/// `(1 - x) x^n / (1 - x^(cutoff+1))` with `x = exp(-omega / T)`.
pub fn rindler_thermal_state(space: FockSpace, params: &SqueezingParams) -> Result<DensityMatrix> {
    if space.modes() != 1 {
        return Err(QitError::InvalidInput(format!(
            "thermal state needs a 1-mode space, got {}",
            space.modes()
        )));
    }
    let x = params.boltzmann_x();
    let norm = (1.0 - x) / (1.0 - x.powi(space.cutoff() as i32 + 1));
    let mut m = CMatrix::zeros(space.dim(), space.dim());
    let mut w = norm;
    for n in 0..space.dim() {
        m[(n, n)] = Complex64::new(w, 0.0);
        w *= x;
    }
    Ok(DensityMatrix::new_unchecked(space, m))
}

/// First-order detector measurement: `E_click = alpha a(chi)^dag a(chi)` and
/// its complement. `alpha * n_max <= 1` keeps both effects positive on the
/// truncated space.
#[derive(Debug, Clone)]
pub struct DetectorPOVM {
    pub alpha: f64,
    pub chi: Vec<Complex64>,
    povm: POVM,
}

impl DetectorPOVM {
    pub fn povm(&self) -> &POVM {
        &self.povm
    }

    pub fn click_effect(&self) -> &Operator {
        &self.povm.effects()[0]
    }

    /// Click probability on a state.
    pub fn click_probability(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(self.povm.probabilities(rho)?[0])
    }
}

pub fn detector_povm(space: FockSpace, alpha: f64, chi: &[Complex64]) -> Result<DetectorPOVM> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(QitError::InvalidInput("alpha must be positive".into()));
    }
    if alpha * space.cutoff() as f64 > 1.0 + 1e-15 {
        return Err(QitError::AlphaTooLarge {
            alpha,
            cutoff: space.cutoff(),
        });
    }
    let (a_chi, _) = mode_op(space, chi)?;
    let click = a_chi.adjoint().matmul(&a_chi)?.scale_re(alpha);
    let no_click = Operator::identity(space).sub(&click)?;
    let povm = POVM::new(
        OutcomeSet::new(vec!["click".into(), "no_click".into()])?,
        vec![click, no_click],
        DEFAULT_TOL,
    )?;
    Ok(DetectorPOVM {
        alpha,
        chi: chi.to_vec(),
        povm,
    })
}

/// Heisenberg transport of a POVM by a unitary: every effect maps to
/// `U E U^dag`. Completeness and positivity survive the conjugation.
pub fn conjugate_povm(u: &Operator, povm: &POVM, tol: f64) -> Result<POVM> {
    crate::hilbert::check_spaces(u.space(), povm.space())?;
    if !u.is_unitary(tol) {
        return Err(QitError::NotUnitary {
            residual: (u.entries() * u.entries().adjoint()
                - CMatrix::identity(u.space().dim(), u.space().dim()))
            .norm(),
        });
    }
    let effects: Vec<Operator> = povm
        .effects()
        .iter()
        .map(|e| {
            Operator::new(u.space(), u.entries() * e.entries() * u.entries().adjoint())
                .expect("square")
        })
        .collect();
    POVM::new(povm.outcomes().clone(), effects, tol.max(1e-8))
}

/// One cutoff of the representation-agreement sweep: the click probability
/// computed on the thermal state, on the series-reduced squeezed state and on
/// the generator-method reduced state, with pairwise differences and the
/// truncation tail.
#[derive(Debug, Clone, Copy)]
pub struct AgreementRow {
    pub cutoff: usize,
    pub p_thermal: f64,
    pub p_series: f64,
    pub p_generator: f64,
    pub d12: f64,
    pub d13: f64,
    pub tail: f64,
}

/// Computes the detector click probability three ways at each cutoff:
/// (i) on the truncated Gibbs state, (ii) on the reduction of the
/// series-built two-mode squeezed state, (iii) on the reduction of the
/// generator-built state. (i) and (ii) agree to solver precision; (iii)
/// converges with the cutoff.
pub fn compare_representations(
    params: &SqueezingParams,
    alpha: f64,
    cutoffs: &[usize],
) -> Result<Vec<AgreementRow>> {
    if cutoffs.is_empty() {
        return Err(QitError::Empty { what: "cutoffs" });
    }
    let one = [Complex64::new(1.0, 0.0)];
    let mut rows = Vec::with_capacity(cutoffs.len());
    for &cutoff in cutoffs {
        let single = FockSpace::new(1, cutoff)?;
        let pair = FockSpace::new(2, cutoff)?;
        let detector = detector_povm(single, alpha, &one)?;

        let thermal = rindler_thermal_state(single, params)?;
        let p_thermal = detector.click_probability(&thermal)?;

        let series = two_mode_squeezed_state(pair, params, SqueezeMethod::Series)?;
        let p_series = detector.click_probability(&partial_trace(&series, &[0])?)?;

        let generator = two_mode_squeezed_state(pair, params, SqueezeMethod::Generator)?;
        let p_generator = detector.click_probability(&partial_trace(&generator, &[0])?)?;

        rows.push(AgreementRow {
            cutoff,
            p_thermal,
            p_series,
            p_generator,
            d12: (p_thermal - p_series).abs(),
            d13: (p_thermal - p_generator).abs(),
            tail: params.truncation_tail(cutoff),
        });
    }
    Ok(rows)
}

/// CSV body for the agreement sweep:
/// cutoff,p_thermal,p_series,p_generator,d12,d13,tail.
pub fn agreement_csv(rows: &[AgreementRow]) -> String {
    let mut out = String::from("cutoff,p_thermal,p_series,p_generator,d12,d13,tail\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.cutoff, r.p_thermal, r.p_series, r.p_generator, r.d12, r.d13, r.tail
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expectation, number_op, trace_distance};

    fn unruh_unit_temperature() -> SqueezingParams {
        // a = 2 pi, omega = 1: T = 1, x = 1/e
        SqueezingParams::new(std::f64::consts::TAU, 1.0).unwrap()
    }

    #[test]
    fn derived_parameters() {
        let p = unruh_unit_temperature();
        assert!((p.temperature - 1.0).abs() < 1e-15);
        assert!((p.boltzmann_x() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((p.r - (-0.5f64).exp().atanh()).abs() < 1e-15);
        assert!((p.r - 0.7034).abs() < 1e-4);
    }

    #[test]
    fn zero_squeezing_limit_is_vacuum() {
        let p = SqueezingParams::from_r(1e-8f64.atanh()).unwrap();
        let space = FockSpace::new(2, 4).unwrap();
        let rho = two_mode_squeezed_state(space, &p, SqueezeMethod::Series).unwrap();
        let vac = DensityMatrix::pure(space, &space.vacuum()).unwrap();
        let fidelity = expectation(&rho, &vac.as_operator()).unwrap().re;
        assert!(fidelity > 1.0 - 1e-15);
    }

    #[test]
    fn series_coefficients_match_closed_form() {
        let p = unruh_unit_temperature();
        let space = FockSpace::new(2, 30).unwrap();
        let rho = two_mode_squeezed_state(space, &p, SqueezeMethod::Series).unwrap();
        let x = p.boltzmann_x();
        for n in 0..=5 {
            let idx = space.basis_index(&[n, n]).unwrap();
            let expect = ((1.0 - x).sqrt() * x.powi(n as i32).sqrt()).powi(2);
            assert!((rho.entries()[(idx, idx)].re - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn generator_and_series_agree_at_cutoff_30() {
        let p = unruh_unit_temperature();
        let space = FockSpace::new(2, 30).unwrap();
        let a = two_mode_squeezed_state(space, &p, SqueezeMethod::Series).unwrap();
        let b = two_mode_squeezed_state(space, &p, SqueezeMethod::Generator).unwrap();
        assert!(trace_distance(&a, &b).unwrap() < 1e-6);
        let overlap = expectation(&a, &b.as_operator()).unwrap().re;
        assert!(overlap > 1.0 - 1e-6);
    }

    #[test]
    fn thermal_mean_occupation() {
        let p = unruh_unit_temperature();
        let space = FockSpace::new(1, 30).unwrap();
        let rho = rindler_thermal_state(space, &p).unwrap();
        let n = number_op(space, 0).unwrap();
        let mean = expectation(&rho, &n).unwrap().re;
        assert!((mean - 1.0 / (std::f64::consts::E - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn cold_limit_is_vacuum() {
        let p = SqueezingParams::new(1e-2, 1.0).unwrap();
        let space = FockSpace::new(1, 10).unwrap();
        let rho = rindler_thermal_state(space, &p).unwrap();
        assert!((rho.entries()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduction_of_squeezed_state_is_thermal() {
        let p = unruh_unit_temperature();
        let pair = FockSpace::new(2, 30).unwrap();
        let single = FockSpace::new(1, 30).unwrap();
        let rho = two_mode_squeezed_state(pair, &p, SqueezeMethod::Series).unwrap();
        let reduced = partial_trace(&rho, &[0]).unwrap();
        let thermal = rindler_thermal_state(single, &p).unwrap();
        assert!(trace_distance(&reduced, &thermal).unwrap() < 1e-9);
    }

    #[test]
    fn detector_on_number_state() {
        let space = FockSpace::new(1, 5).unwrap();
        let det = detector_povm(space, 0.01, &[Complex64::new(1.0, 0.0)]).unwrap();
        let psi = space.basis_state(&[1]).unwrap();
        let rho = DensityMatrix::pure(space, &psi).unwrap();
        assert!((det.click_probability(&rho).unwrap() - 0.01).abs() < 1e-14);
    }

    #[test]
    fn detector_boundary_alpha_saturates() {
        let space = FockSpace::new(1, 4).unwrap();
        let det = detector_povm(space, 0.25, &[Complex64::new(1.0, 0.0)]).unwrap();
        let no_click = &det.povm().effects()[1];
        assert!(no_click.min_eigenvalue().abs() < 1e-12);
    }

    #[test]
    fn detector_rejects_large_alpha() {
        let space = FockSpace::new(1, 4).unwrap();
        assert!(matches!(
            detector_povm(space, 0.3, &[Complex64::new(1.0, 0.0)]),
            Err(QitError::AlphaTooLarge { .. })
        ));
    }

    #[test]
    fn detector_on_thermal_state() {
        let p = unruh_unit_temperature();
        let space = FockSpace::new(1, 30).unwrap();
        let det = detector_povm(space, 0.01, &[Complex64::new(1.0, 0.0)]).unwrap();
        let rho = rindler_thermal_state(space, &p).unwrap();
        let expect = 0.01 / (std::f64::consts::E - 1.0);
        assert!((det.click_probability(&rho).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn conjugation_by_identity_is_noop() {
        let space = FockSpace::new(1, 3).unwrap();
        let det = detector_povm(space, 0.1, &[Complex64::new(1.0, 0.0)]).unwrap();
        let out = conjugate_povm(&Operator::identity(space), det.povm(), 1e-10).unwrap();
        for (a, b) in out.effects().iter().zip(det.povm().effects()) {
            assert!(a.sub(b).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn conjugation_covariance() {
        use crate::random;
        use rand::SeedableRng;
        let space = FockSpace::new(1, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u = random::unitary(space, &mut rng);
        let det = detector_povm(space, 0.1, &[Complex64::new(1.0, 0.0)]).unwrap();
        let conj = conjugate_povm(&u, det.povm(), 1e-9).unwrap();
        let rho = random::density_matrix(space, &mut rng);
        let moved = DensityMatrix::new_unchecked(
            space,
            u.entries() * rho.entries() * u.entries().adjoint(),
        );
        let p = det.povm().probabilities(&rho).unwrap();
        let q = conj.probabilities(&moved).unwrap();
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn squeezing_conjugation_preserves_completeness() {
        let p = unruh_unit_temperature();
        let space = FockSpace::new(2, 10).unwrap();
        let a1 = annihilation_op(space, 0).unwrap();
        let a2 = annihilation_op(space, 1).unwrap();
        let lowering = a1.matmul(&a2).unwrap();
        let g = lowering.adjoint().sub(&lowering).unwrap().scale_re(p.r);
        let u = expm_antihermitian(&g, DEFAULT_TOL).unwrap();
        let chi = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let det = detector_povm(space, 0.05, &chi).unwrap();
        let conj = conjugate_povm(&u, det.povm(), 1e-9).unwrap();
        let mut sum = Operator::zeros(space);
        for e in conj.effects() {
            sum = sum.add(e).unwrap();
        }
        assert!(sum.sub(&Operator::identity(space)).unwrap().norm() < 1e-10);
    }

    #[test]
    fn agreement_sweep_converges() {
        let p = unruh_unit_temperature();
        let rows = compare_representations(&p, 0.01, &[5, 10, 20, 30]).unwrap();
        for r in &rows {
            assert!(r.d12 < 1e-9, "d12 = {} at cutoff {}", r.d12, r.cutoff);
        }
        for w in rows.windows(2) {
            assert!(w[1].d13 < w[0].d13);
        }
        assert!(rows.last().unwrap().d13 < 1e-6);
    }

    #[test]
    fn agreement_near_zero_squeezing() {
        let p = SqueezingParams::new(0.1, 1.0).unwrap(); // x ~ e^-62
        let rows = compare_representations(&p, 0.01, &[4]).unwrap();
        let r = &rows[0];
        assert!(r.p_thermal < 1e-12 && r.p_series < 1e-12 && r.p_generator < 1e-12);
    }
}
