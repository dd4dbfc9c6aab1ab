//! Dressed-state algebra of the blue-sideband (anti-JC) system Hamiltonian
//! `H_S = g (a† σ₊ + a σ₋)` and the nonlinear interaction function that
//! couples it to the reservoir.
//!
//! The dressed basis is |φ(n,i)⟩ = (|↓,n⟩ − (−1)^i |↑,n+1⟩)/√2 for i ∈ {1,2},
//! plus the decoupled |φ(0,3)⟩ = |↑,0⟩. Energies are ±g√(n+1); the conserved
//! operator O_S = H_S/g has eigenvalues ±√(n+1) on the same states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and coupling constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Sideband coupling rate (1/time).
    pub g: f64,
    /// Nonlinearity deviation; the decay exponent is ν = 2d + 1.
    pub d: f64,
    /// Characteristic decay rate (1/time).
    pub gamma0: f64,
}

impl ModelParams {
    pub fn new(g: f64, d: f64, gamma0: f64) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::invalid("model.g", format!("must be > 0, got {g}")));
        }
        if !(d > -0.5) {
            return Err(Error::invalid(
                "model.d",
                format!("must be > -0.5 (so that nu = 2d+1 > 0), got {d}"),
            ));
        }
        if !(gamma0 >= 0.0) {
            return Err(Error::invalid(
                "model.gamma0",
                format!("must be >= 0, got {gamma0}"),
            ));
        }
        Ok(ModelParams { g, d, gamma0 })
    }

    /// Decay exponent ν = 2d + 1.
    pub fn nu(&self) -> f64 {
        2.0 * self.d + 1.0
    }
}

/// A dressed eigenstate, indexed by motional quantum number `n` and branch
/// `i ∈ {1, 2}`; branch 3 is the decoupled |↑,0⟩ state and only exists at n=0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DressedState {
    n: u64,
    i: u8,
}

impl DressedState {
    pub fn new(n: u64, i: u8) -> Result<Self> {
        match i {
            1 | 2 => Ok(DressedState { n, i }),
            3 if n == 0 => Ok(DressedState { n, i }),
            _ => Err(Error::InvalidDressedState { n, i }),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn branch(&self) -> u8 {
        self.i
    }

    /// Eigenvalue of O_S = a†σ₊ + aσ₋ on this state: ±√(n+1), or 0 for the
    /// decoupled branch.
    pub fn op_eigenvalue(&self) -> f64 {
        match self.i {
            1 => ((self.n + 1) as f64).sqrt(),
            2 => -(((self.n + 1) as f64).sqrt()),
            _ => 0.0,
        }
    }
}

/// Energy of the dressed state: (−1)^(i+1) g √(n+1), with E = 0 for the
/// decoupled branch.
pub fn dressed_energy(s: DressedState, params: &ModelParams) -> f64 {
    params.g * s.op_eigenvalue()
}

/// The nonlinear interaction function F(x) = sign(x)·|x|^(2d+1).
///
/// The odd (sign-preserving) extension is the unique continuous choice that
/// reduces to the plain power for odd-integer exponents and keeps
/// F(x) − F(−x) = 2|x|^(2d+1) for all x.
pub fn interaction_f(x: f64, d: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(2.0 * d + 1.0)
    }
}

/// Damping prefactor of the (n,1)-(n,2) coherence:
/// [F(√(n+1)) − F(−√(n+1))]² = 4(n+1)^(2d+1).
pub fn damping_coefficient(n: u64, d: f64) -> f64 {
    4.0 * ((n + 1) as f64).powf(2.0 * d + 1.0)
}
