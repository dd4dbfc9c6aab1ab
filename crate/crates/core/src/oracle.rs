//! Brute-force evolution with a finite, truncated-Fock reservoir.
//!
//! Each dressed sector evolves under the real-symmetric per-mode Hamiltonian
//! `H_k(s) = ω_k n̂ + F(O_s) c_k (b̂ + b̂†) + F²(O_s) c_k²/ω_k`, and the
//! reservoir-dependent coherence factor is the product over modes of
//! `Tr[e^{−iH_k(s1)t} ρ_k(0) e^{+iH_k(s2)t}]`. This recomputes, without any
//! factorization shortcut, exactly the quantity the closed-form kernels
//! predict, so the two paths can be checked against each other.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{interaction_f, DressedState, ModelParams};
use crate::spectral::{Mode, Temperature};

/// Which counter-term denominator to use in the sector Hamiltonian.
///
/// `OmegaLinear` (c²/ω) makes displaced sectors exactly degenerate, so
/// diagonal coherences are stationary; `OmegaSquared` (c²/ω²) is kept for
/// comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CounterTerm {
    OmegaLinear,
    OmegaSquared,
}

impl Default for CounterTerm {
    fn default() -> Self {
        CounterTerm::OmegaLinear
    }
}

/// A desk-scale reservoir: a handful of modes, each on a truncated Fock space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteReservoirSpec {
    pub modes: Vec<Mode>,
    pub fock_cutoff: usize,
    pub temperature: Temperature,
}

impl FiniteReservoirSpec {
    pub fn new(modes: Vec<Mode>, fock_cutoff: usize, temperature: Temperature) -> Result<Self> {
        if modes.is_empty() || modes.len() > 4 {
            return Err(Error::invalid(
                "reservoir.modes",
                format!("need 1..=4 modes, got {}", modes.len()),
            ));
        }
        if fock_cutoff < 10 {
            return Err(Error::invalid(
                "reservoir.fock_cutoff",
                format!("must be >= 10, got {fock_cutoff}"),
            ));
        }
        for (k, m) in modes.iter().enumerate() {
            if !(m.omega > 0.0) {
                return Err(Error::invalid(
                    &format!("reservoir.modes[{k}].omega"),
                    "must be > 0",
                ));
            }
            if let Temperature::Inverse(beta) = temperature {
                let tail = (-beta * m.omega * (fock_cutoff as f64 + 1.0)).exp();
                if tail >= 1e-8 {
                    return Err(Error::InsufficientCutoff {
                        cutoff: fock_cutoff,
                        tail,
                        tolerance: 1e-8,
                    });
                }
            }
        }
        Ok(FiniteReservoirSpec {
            modes,
            fock_cutoff,
            temperature,
        })
    }
}

fn dim(cutoff: usize) -> usize {
    cutoff + 1
}

/// Truncated displacement operator D(α) = exp(α b̂† − α* b̂).
///
/// Built from the Hermitian eigendecomposition of i(α b̂† − α* b̂). The
/// lower half of the basis must stay displacement-closed: column-norm
/// deficits beyond 1e−10 there mean the cutoff cannot hold |α| and an error
/// is returned.
pub fn displacement_matrix(alpha: Complex64, cutoff: usize) -> Result<DMatrix<Complex64>> {
    let n = dim(cutoff);
    // H = i(α b† − α* b), Hermitian
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for m in 0..n - 1 {
        let root = ((m + 1) as f64).sqrt();
        // b†: (m+1, m) entry; b: (m, m+1)
        h[(m + 1, m)] = Complex64::new(0.0, 1.0) * alpha * root;
        h[(m, m + 1)] = -Complex64::new(0.0, 1.0) * alpha.conj() * root;
    }
    let d = exp_minus_i_hermitian(&h, 1.0);

    let check_cols = n / 2;
    let mut worst = 0.0f64;
    for j in 0..check_cols.max(1) {
        let deficit = (1.0 - d.column(j).norm()).abs();
        worst = worst.max(deficit);
    }
    if worst > 1e-10 {
        return Err(Error::TruncationBudget {
            context: format!(
                "displacement D({alpha}) at cutoff {cutoff}: column-norm deficit"
            ),
            residual: worst,
        });
    }
    Ok(d)
}

/// Thermal single-mode density matrix diag((1−e^{−βω}) e^{−βωn}); the vacuum
/// projector at zero temperature.
pub fn thermal_density(omega: f64, temp: Temperature, cutoff: usize) -> Result<DMatrix<Complex64>> {
    let n = dim(cutoff);
    let mut rho = DMatrix::<Complex64>::zeros(n, n);
    match temp {
        Temperature::Zero => {
            rho[(0, 0)] = Complex64::new(1.0, 0.0);
        }
        Temperature::Inverse(beta) => {
            let x = (-beta * omega).exp();
            let tail = x.powi(n as i32);
            if tail >= 1e-8 {
                return Err(Error::InsufficientCutoff {
                    cutoff,
                    tail,
                    tolerance: 1e-8,
                });
            }
            let norm = 1.0 - x;
            for m in 0..n {
                rho[(m, m)] = Complex64::new(norm * x.powi(m as i32), 0.0);
            }
        }
    }
    Ok(rho)
}

/// Residuals of the displacement-operator identities on the truncated space:
/// the thermal trace formula Tr[D(α)ρ] = exp(−½|α|² coth(βω/2)) and the
/// number-operator conjugation e^{xn̂} D(α) e^{−xn̂} = D(α eˣ) for x = −iωt.
/// Returns the larger of the two residuals.
pub fn verify_trace_identity(
    alpha: Complex64,
    omega: f64,
    temp: Temperature,
    cutoff: usize,
) -> Result<f64> {
    let d = displacement_matrix(alpha, cutoff)?;
    let rho = thermal_density(omega, temp, cutoff)?;

    let numeric = (&d * &rho).trace();
    let coth = temp.coth_factor(omega);
    let closed = Complex64::new((-0.5 * alpha.norm_sqr() * coth).exp(), 0.0);
    let trace_residual = (numeric - closed).norm();

    // conjugation check at x = −iωt with ωt = 0.9
    let x = Complex64::new(0.0, -0.9);
    let n = dim(cutoff);
    let mut conj = DMatrix::<Complex64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            conj[(r, c)] = (x * r as f64).exp() * d[(r, c)] * (-x * c as f64).exp();
        }
    }
    let scaled = displacement_matrix(alpha * x.exp(), cutoff)?;
    let mut conj_residual = 0.0f64;
    for r in 0..n / 2 {
        for c in 0..n / 2 {
            conj_residual = conj_residual.max((conj[(r, c)] - scaled[(r, c)]).norm());
        }
    }
    Ok(trace_residual.max(conj_residual))
}

/// exp(−iHt) for Hermitian H, via eigendecomposition.
fn exp_minus_i_hermitian(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lam| Complex64::new(0.0, -lam * t).exp())
        .collect();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for j in 0..n {
        let p = phases[j];
        for r in 0..n {
            scaled[(r, j)] *= p;
        }
    }
    scaled * v.adjoint()
}

/// Per-mode sector propagator exp(−iH_k(s)t) with H_k real symmetric.
fn sector_propagator(
    mode: &Mode,
    f_val: f64,
    counter: CounterTerm,
    cutoff: usize,
    t: f64,
) -> DMatrix<Complex64> {
    let n = dim(cutoff);
    let shift = match counter {
        CounterTerm::OmegaLinear => f_val * f_val * mode.coupling * mode.coupling / mode.omega,
        CounterTerm::OmegaSquared => {
            f_val * f_val * mode.coupling * mode.coupling / (mode.omega * mode.omega)
        }
    };
    let mut h = DMatrix::<f64>::zeros(n, n);
    for m in 0..n {
        h[(m, m)] = mode.omega * m as f64 + shift;
        if m + 1 < n {
            let off = f_val * mode.coupling * ((m + 1) as f64).sqrt();
            h[(m, m + 1)] = off;
            h[(m + 1, m)] = off;
        }
    }
    let eig = h.symmetric_eigen();
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lam| Complex64::new(0.0, -lam * t).exp())
        .collect();
    let v = &eig.eigenvectors;
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += phases[j] * v[(r, j)] * v[(c, j)];
            }
            u[(r, c)] = acc;
        }
    }
    u
}

fn r_at_cutoff(
    s1: DressedState,
    s2: DressedState,
    params: &ModelParams,
    reservoir: &FiniteReservoirSpec,
    t: f64,
    counter: CounterTerm,
    cutoff: usize,
) -> Result<Complex64> {
    let f1 = interaction_f(s1.op_eigenvalue(), params.d);
    let f2 = interaction_f(s2.op_eigenvalue(), params.d);
    let mut r = Complex64::new(1.0, 0.0);
    for mode in &reservoir.modes {
        let rho = thermal_density(mode.omega, reservoir.temperature, cutoff)?;
        let u1 = sector_propagator(mode, f1, counter, cutoff, t);
        let u2 = sector_propagator(mode, f2, counter, cutoff, t);
        r *= (u1 * rho * u2.adjoint()).trace();
    }
    Ok(r)
}

/// Reservoir-dependent coherence factor R(s1, s2, t) by direct evolution.
///
/// The dynamical phase (E1 − E2)t is not included. Every result is
/// recomputed at cutoff+10; disagreement beyond 1e−8 fails the call instead
/// of returning a silently truncated value.
pub fn brute_force_r(
    s1: DressedState,
    s2: DressedState,
    params: &ModelParams,
    reservoir: &FiniteReservoirSpec,
    t: f64,
    counter: CounterTerm,
) -> Result<Complex64> {
    let base = r_at_cutoff(s1, s2, params, reservoir, t, counter, reservoir.fock_cutoff)?;
    let audit = r_at_cutoff(
        s1,
        s2,
        params,
        reservoir,
        t,
        counter,
        reservoir.fock_cutoff + 10,
    )?;
    let residual = (base - audit).norm();
    if residual > 1e-8 {
        return Err(Error::TruncationBudget {
            context: format!(
                "brute-force R at cutoff {} vs {}",
                reservoir.fock_cutoff,
                reservoir.fock_cutoff + 10
            ),
            residual,
        });
    }
    Ok(audit)
}

/// Closed-form prediction e^{−iδφ} e^{−Γ} from the discrete-sum kernels, for
/// pairing against [`brute_force_r`].
pub fn closed_form_r(
    s1: DressedState,
    s2: DressedState,
    params: &ModelParams,
    modes: &[Mode],
    temp: Temperature,
    t: f64,
) -> Complex64 {
    let f1 = interaction_f(s1.op_eigenvalue(), params.d);
    let f2 = interaction_f(s2.op_eigenvalue(), params.d);
    let q1: f64 = modes
        .iter()
        .map(|m| m.coupling * m.coupling / (m.omega * m.omega) * (m.omega * t).sin())
        .sum();
    let q2: f64 = modes
        .iter()
        .map(|m| {
            let s = (0.5 * m.omega * t).sin();
            2.0 * m.coupling * m.coupling / (m.omega * m.omega) * s * s * temp.coth_factor(m.omega)
        })
        .sum();
    let delta_phi = (f1 * f1 - f2 * f2) * q1;
    let damping = (f1 - f2) * (f1 - f2) * q2;
    Complex64::new(0.0, -delta_phi).exp() * (-damping).exp()
}

/// Convenience vector of thermal occupation diagonal entries, used in tests.
pub fn thermal_diagonal(omega: f64, temp: Temperature, cutoff: usize) -> Result<DVector<f64>> {
    let rho = thermal_density(omega, temp, cutoff)?;
    Ok(DVector::from_iterator(
        cutoff + 1,
        (0..=cutoff).map(|m| rho[(m, m)].re),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn displacement_of_zero_is_identity() {
        let d = displacement_matrix(Complex64::new(0.0, 0.0), 20).unwrap();
        for r in 0..21 {
            for c in 0..21 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((d[(r, c)] - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn vacuum_overlap() {
        let d = displacement_matrix(Complex64::new(1.0, 0.0), 30).unwrap();
        assert_relative_eq!(d[(0, 0)].re, (-0.5f64).exp(), max_relative = 1e-9);
        assert!(d[(0, 0)].im.abs() < 1e-12);
    }

    #[test]
    fn composition_law() {
        // D(α)D(β) = D(α+β) e^{i Im(α β*)}
        let a = Complex64::new(0.3, 0.0);
        let b = Complex64::new(0.0, 0.2);
        let lhs = displacement_matrix(a, 30).unwrap() * displacement_matrix(b, 30).unwrap();
        let phase = Complex64::new(0.0, (a * b.conj()).im).exp();
        let rhs = displacement_matrix(a + b, 30).unwrap() * phase;
        let mut worst = 0.0f64;
        for r in 0..15 {
            for c in 0..15 {
                worst = worst.max((lhs[(r, c)] - rhs[(r, c)]).norm());
            }
        }
        assert!(worst < 1e-9, "worst residual {worst}");
    }

    #[test]
    fn thermal_density_entries() {
        let rho = thermal_density(1.0, Temperature::Zero, 15).unwrap();
        assert_eq!(rho[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(rho[(1, 1)], Complex64::new(0.0, 0.0));

        // βω = ln 2 → geometric entries 1/2, 1/4, 1/8, ...
        let rho = thermal_density(1.0, Temperature::finite(2.0f64.ln()).unwrap(), 40).unwrap();
        assert_relative_eq!(rho[(0, 0)].re, 0.5, max_relative = 1e-12);
        assert_relative_eq!(rho[(1, 1)].re, 0.25, max_relative = 1e-12);
        assert_relative_eq!(rho[(2, 2)].re, 0.125, max_relative = 1e-12);

        // trace deficit is exactly the geometric tail e^{-0.5·41} ≈ 1.25e-9
        let rho = thermal_density(1.0, Temperature::finite(0.5).unwrap(), 40).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn trace_identity_examples() {
        assert!(
            verify_trace_identity(Complex64::new(0.0, 0.0), 1.0, Temperature::Zero, 30).unwrap()
                < 1e-12
        );
        // α = 0.5, zero-T: Tr = e^{−0.125}
        assert!(
            verify_trace_identity(Complex64::new(0.5, 0.0), 1.0, Temperature::Zero, 30).unwrap()
                < 1e-9
        );
        // α = 0.5, βω = 1: Tr = e^{−0.125 coth(0.5)}
        assert!(
            verify_trace_identity(
                Complex64::new(0.5, 0.0),
                1.0,
                Temperature::finite(1.0).unwrap(),
                40
            )
            .unwrap()
                < 1e-9
        );
    }

    fn params(d: f64) -> ModelParams {
        ModelParams::new(1.0, d, 0.1).unwrap()
    }

    #[test]
    fn zero_coupling_gives_unity() {
        let reservoir = FiniteReservoirSpec::new(
            vec![Mode { omega: 1.0, coupling: 0.0 }],
            20,
            Temperature::Zero,
        )
        .unwrap();
        let r = brute_force_r(
            DressedState::new(0, 1).unwrap(),
            DressedState::new(0, 2).unwrap(),
            &params(0.0),
            &reservoir,
            2.7,
            CounterTerm::OmegaLinear,
        )
        .unwrap();
        assert!((r - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_sector_is_stationary() {
        let reservoir = FiniteReservoirSpec::new(
            vec![Mode { omega: 1.3, coupling: 0.4 }],
            30,
            Temperature::Zero,
        )
        .unwrap();
        let s = DressedState::new(1, 1).unwrap();
        for &t in &[0.5, 2.0, 7.9] {
            let r = brute_force_r(s, s, &params(-0.15), &reservoir, t, CounterTerm::OmegaLinear)
                .unwrap();
            assert!(
                (r - Complex64::new(1.0, 0.0)).norm() < 1e-9,
                "R(s,s) = {r} at t = {t}"
            );
        }
    }

    #[test]
    fn single_mode_matches_closed_form() {
        let reservoir = FiniteReservoirSpec::new(
            vec![Mode { omega: 1.0, coupling: 0.5 }],
            30,
            Temperature::Zero,
        )
        .unwrap();
        let s1 = DressedState::new(0, 1).unwrap();
        let s2 = DressedState::new(0, 2).unwrap();
        let p = params(0.0);
        let t = std::f64::consts::PI;
        let brute = brute_force_r(s1, s2, &p, &reservoir, t, CounterTerm::OmegaLinear).unwrap();
        let closed = closed_form_r(s1, s2, &p, &reservoir.modes, Temperature::Zero, t);
        // Γ = 4 · 2 · 0.25 · sin²(π/2) = 2
        assert_relative_eq!(closed.norm(), (-2.0f64).exp(), max_relative = 1e-12);
        assert!((brute - closed).norm() < 1e-6, "brute {brute} vs closed {closed}");
    }

    #[test]
    fn two_modes_factorize() {
        let m1 = Mode { omega: 1.0, coupling: 0.3 };
        let m2 = Mode { omega: 2.3, coupling: 0.2 };
        let s1 = DressedState::new(1, 1).unwrap();
        let s2 = DressedState::new(1, 2).unwrap();
        let p = params(-0.15);
        let t = 1.7;
        let both = brute_force_r(
            s1,
            s2,
            &p,
            &FiniteReservoirSpec::new(vec![m1, m2], 30, Temperature::Zero).unwrap(),
            t,
            CounterTerm::OmegaLinear,
        )
        .unwrap();
        let first = brute_force_r(
            s1,
            s2,
            &p,
            &FiniteReservoirSpec::new(vec![m1], 30, Temperature::Zero).unwrap(),
            t,
            CounterTerm::OmegaLinear,
        )
        .unwrap();
        let second = brute_force_r(
            s1,
            s2,
            &p,
            &FiniteReservoirSpec::new(vec![m2], 30, Temperature::Zero).unwrap(),
            t,
            CounterTerm::OmegaLinear,
        )
        .unwrap();
        assert!((both - first * second).norm() < 1e-10);
    }

    #[test]
    fn modulus_never_exceeds_one() {
        let reservoir = FiniteReservoirSpec::new(
            vec![Mode { omega: 0.9, coupling: 0.35 }],
            30,
            Temperature::finite(1.0).unwrap(),
        )
        .unwrap();
        let s1 = DressedState::new(0, 1).unwrap();
        let s2 = DressedState::new(0, 2).unwrap();
        for i in 1..20 {
            let t = 0.4 * i as f64;
            let r = brute_force_r(s1, s2, &params(-0.1), &reservoir, t, CounterTerm::OmegaLinear)
                .unwrap();
            assert!(r.norm() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(FiniteReservoirSpec::new(vec![], 30, Temperature::Zero).is_err());
        assert!(FiniteReservoirSpec::new(
            vec![Mode { omega: 1.0, coupling: 0.1 }],
            5,
            Temperature::Zero
        )
        .is_err());
        // hot reservoir with tiny cutoff: occupation tail too fat
        assert!(FiniteReservoirSpec::new(
            vec![Mode { omega: 1.0, coupling: 0.1 }],
            10,
            Temperature::finite(0.1).unwrap()
        )
        .is_err());
    }
}
