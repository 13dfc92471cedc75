//! Engineered squeezed-vacuum reservoir: ramp schedules, the time-dependent
//! decoherence operator `L(t)`, and its dissipator in Lindblad and expanded
//! forms.
//!
//! All rates are expressed in units of the spontaneous decay rate `gamma`,
//! which is fixed to 1. The squeeze parameter and phase ramp linearly,
//! `r(t) = mu t + o`, `theta(t) = nu t`, and the decoherence operator is
//!
//! ```text
//! L = cosh(r) e^{-i theta/2} sigma_-  +  sinh(r) e^{+i theta/2} sigma_+
//! ```
//!
//! The Lindblad form `gamma/2 (2 L rho L^dag - {L^dag L, rho})` is the single
//! source of truth for the dynamics; the four-term expansion is provided as an
//! algebraic cross-check and must agree entrywise.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::qcore::{DensityMatrix, Operator, PureState, QcoreError};

/// Spontaneous decay rate; the unit of all rates in the crate.
pub const GAMMA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ReservoirError {
    #[error("ramp rate mu must be nonnegative and finite (got {0})")]
    BadMu(f64),
    #[error("phase rate nu must be finite (got {0})")]
    BadNu(f64),
    #[error("squeeze offset o must be positive and finite (got {0})")]
    BadOffset(f64),
    #[error("time must be nonnegative (got {0})")]
    NegativeTime(f64),
    #[error("squeeze parameter r must be positive (got {0})")]
    NonPositiveSqueeze(f64),
    #[error("steady state did not converge (slowest mode too slow for the squaring horizon)")]
    SteadyStateNotConverged,
    #[error("steady state is not unique (null space is degenerate, seed mismatch {0:.3e})")]
    DegenerateNullSpace(f64),
    #[error(transparent)]
    State(#[from] QcoreError),
}

/// Linear reservoir ramp `r(t) = mu t + o`, `theta(t) = nu t`.
///
/// `o > 0` keeps `L(t)` non-defective at `t = 0` and the exact control field
/// finite there. `mu = 0` gives a frozen reservoir, used by the stationarity
/// checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeSchedule {
    mu: f64,
    nu: f64,
    o: f64,
}

impl SqueezeSchedule {
    pub fn new(mu: f64, nu: f64, o: f64) -> Result<Self, ReservoirError> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(ReservoirError::BadMu(mu));
        }
        if !nu.is_finite() {
            return Err(ReservoirError::BadNu(nu));
        }
        if !o.is_finite() || o <= 0.0 {
            return Err(ReservoirError::BadOffset(o));
        }
        Ok(Self { mu, nu, o })
    }

    /// Frozen reservoir (`mu = nu = 0`) at squeeze `r`.
    pub fn frozen(r: f64) -> Result<Self, ReservoirError> {
        Self::new(0.0, 0.0, r)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn offset(&self) -> f64 {
        self.o
    }

    pub fn gamma(&self) -> f64 {
        GAMMA
    }

    /// Evaluate the ramp at time `t >= 0`.
    pub fn sample(&self, t: f64) -> Result<ReservoirSample, ReservoirError> {
        if !t.is_finite() || t < 0.0 {
            return Err(ReservoirError::NegativeTime(t));
        }
        ReservoirSample::new(t, self.mu * t + self.o, self.nu * t)
    }
}

impl Default for SqueezeSchedule {
    /// `mu = gamma`, `nu = 2 pi gamma / 3`, `o = 1e-3`.
    fn default() -> Self {
        Self { mu: 1.0, nu: 2.0 * PI / 3.0, o: 1e-3 }
    }
}

/// Reservoir parameters at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirSample {
    /// Time in units of `1/gamma`.
    pub t: f64,
    /// Squeeze parameter, `> 0`.
    pub r: f64,
    /// Squeeze phase in radians.
    pub theta: f64,
    /// Eigenvalue magnitude `sqrt(sinh r cosh r)` of `L`.
    pub c: f64,
}

impl ReservoirSample {
    pub fn new(t: f64, r: f64, theta: f64) -> Result<Self, ReservoirError> {
        if !r.is_finite() || r <= 0.0 {
            return Err(ReservoirError::NonPositiveSqueeze(r));
        }
        Ok(Self { t, r, theta, c: (r.sinh() * r.cosh()).sqrt() })
    }

    /// Frozen sample at `t = 0` (for stationary-reservoir checks).
    pub fn at_squeeze(r: f64, theta: f64) -> Result<Self, ReservoirError> {
        Self::new(0.0, r, theta)
    }
}

/// The decoherence operator `L` for one reservoir sample.
pub fn lindblad_operator(sample: &ReservoirSample) -> Operator {
    let half = sample.theta / 2.0;
    let phase_m = C64::from_polar(1.0, -half);
    let phase_p = C64::from_polar(1.0, half);
    let mut l = Operator::zeros(2);
    l[(0, 1)] = phase_m * sample.r.cosh(); // cosh(r) e^{-i theta/2} sigma_-
    l[(1, 0)] = phase_p * sample.r.sinh(); // sinh(r) e^{+i theta/2} sigma_+
    l
}

/// Dissipator increment in Lindblad form: `gamma/2 (2 L rho L^dag - {L^dag L, rho})`.
pub fn dissipator_lindblad(rho: &DensityMatrix, sample: &ReservoirSample) -> Operator {
    let l = lindblad_operator(sample);
    let ld = l.dagger();
    let r = rho.as_operator();
    let sandwich = l.matmul(&r).and_then(|m| m.matmul(&ld)).expect("dim 2");
    let ldl = ld.matmul(&l).expect("dim 2");
    let anti = ldl.anticommutator(&r).expect("dim 2");
    (&sandwich.scale(C64::new(2.0, 0.0)) - &anti).scale(C64::new(GAMMA / 2.0, 0.0))
}

/// Dissipator increment as the four-term expansion: two sandwich channels with
/// rates `gamma cosh^2` (jump `sigma_-`) and `gamma sinh^2` (jump `sigma_+`)
/// plus the two `gamma sinh cosh e^{-+i theta}` cross terms.
///
/// Agrees with [`dissipator_lindblad`] entrywise to machine precision.
pub fn dissipator_expanded(rho: &DensityMatrix, sample: &ReservoirSample) -> Operator {
    let sm = Operator::sigma_minus();
    let sp = Operator::sigma_plus();
    let r = rho.as_operator();
    let ch2 = sample.r.cosh().powi(2);
    let sh2 = sample.r.sinh().powi(2);
    let sc = sample.r.sinh() * sample.r.cosh();

    let triplet = |jump: &Operator, rate: f64| -> Operator {
        let jd = jump.dagger();
        let sandwich = jump.matmul(&r).and_then(|m| m.matmul(&jd)).expect("dim 2");
        let anti = jd.matmul(jump).expect("dim 2").anticommutator(&r).expect("dim 2");
        (&sandwich - &anti.scale(C64::new(0.5, 0.0))).scale(C64::new(GAMMA * rate, 0.0))
    };

    let cross_m = sm
        .matmul(&r)
        .and_then(|m| m.matmul(&sm))
        .expect("dim 2")
        .scale(C64::from_polar(GAMMA * sc, -sample.theta));
    let cross_p = sp
        .matmul(&r)
        .and_then(|m| m.matmul(&sp))
        .expect("dim 2")
        .scale(C64::from_polar(GAMMA * sc, sample.theta));

    &(&triplet(&sm, ch2) + &triplet(&sp, sh2)) + &(&cross_m + &cross_p)
}

/// Variant of the expansion with the `cosh^2`/`sinh^2` sandwich weights
/// exchanged (the `cosh^2` rate on the raising channel).
///
/// This is not used by the dynamics; the verification report records its
/// deviation from the Lindblad form, since the two weight assignments are a
/// known transcription ambiguity for this dissipator family.
pub fn dissipator_exchanged_weights(rho: &DensityMatrix, sample: &ReservoirSample) -> Operator {
    let sm = Operator::sigma_minus();
    let sp = Operator::sigma_plus();
    let r = rho.as_operator();
    let ch2 = sample.r.cosh().powi(2);
    let sh2 = sample.r.sinh().powi(2);
    let sc = sample.r.sinh() * sample.r.cosh();

    let triplet = |jump: &Operator, rate: f64| -> Operator {
        let jd = jump.dagger();
        let sandwich = jump.matmul(&r).and_then(|m| m.matmul(&jd)).expect("dim 2");
        let anti = jd.matmul(jump).expect("dim 2").anticommutator(&r).expect("dim 2");
        (&sandwich - &anti.scale(C64::new(0.5, 0.0))).scale(C64::new(GAMMA * rate, 0.0))
    };

    let cross_m = sm
        .matmul(&r)
        .and_then(|m| m.matmul(&sm))
        .expect("dim 2")
        .scale(C64::from_polar(GAMMA * sc, -sample.theta));
    let cross_p = sp
        .matmul(&r)
        .and_then(|m| m.matmul(&sp))
        .expect("dim 2")
        .scale(C64::from_polar(GAMMA * sc, sample.theta));

    &(&triplet(&sp, ch2) + &triplet(&sm, sh2)) + &(&cross_m + &cross_p)
}

/// 4x4 superoperator of the dissipator acting on `vec(rho)` (row-major).
///
/// Uses `vec(A rho B) = (A kron B^T) vec(rho)`.
pub fn dissipator_superoperator(sample: &ReservoirSample) -> Operator {
    let l = lindblad_operator(sample);
    let ld = l.dagger();
    let ldl = ld.matmul(&l).expect("dim 2");
    let ident = Operator::identity(2);
    // kron pieces: L (x) (L^dag)^T, (L^dag L) (x) I, I (x) (L^dag L)^T
    let sandwich = l.kron(&ld.transpose());
    let left = ldl.kron(&ident);
    let right = ident.kron(&ldl.transpose());
    (&sandwich.scale(C64::new(2.0, 0.0)) - &(&left + &right)).scale(C64::new(GAMMA / 2.0, 0.0))
}

/// Steady state of the frozen, uncontrolled reservoir.
///
/// Computed by repeated squaring of the propagator `exp(tau D)` until it
/// converges to the spectral projector onto the stationary subspace, then
/// checked for uniqueness with two independent seed states. The analytic
/// populations are `rho00 = cosh^2 r / cosh 2r`, which the tests use as an
/// independent oracle.
pub fn free_steady_state(sample: &ReservoirSample) -> Result<DensityMatrix, ReservoirError> {
    let lsup = dissipator_superoperator(sample);
    let tau = 1.0 / lsup.one_norm().max(1.0);
    let mut prop = lsup.scale(C64::new(tau, 0.0)).expm();
    let mut converged = false;
    for _ in 0..64 {
        let sq = prop.matmul(&prop).expect("dim 4");
        if (&sq - &prop).max_abs() <= 1e-13 {
            prop = sq;
            converged = true;
            break;
        }
        prop = sq;
    }
    if !converged {
        return Err(ReservoirError::SteadyStateNotConverged);
    }

    let settle = |seed: &DensityMatrix| -> [C64; 4] {
        let e = seed.as_operator();
        let v = prop.apply(&[e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]]);
        // resymmetrize and renormalize
        let r00 = C64::new(v[0].re, 0.0);
        let r11 = C64::new(v[3].re, 0.0);
        let r01 = (v[1] + v[2].conj()) * 0.5;
        let tr = (r00 + r11).re;
        [r00 / tr, r01 / tr, r01.conj() / tr, r11 / tr]
    };

    let a = settle(&PureState::ground().projector());
    let plus = PureState::normalized(C64::new(1.0, 0.0), C64::new(1.0, 0.0))
        .expect("nonzero amplitudes")
        .projector();
    let b = settle(&plus);
    let disagreement = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    if disagreement > 1e-8 {
        return Err(ReservoirError::DegenerateNullSpace(disagreement));
    }

    let rho = DensityMatrix::from_entries(a)?;
    // stationarity self-check against the generator
    let resid = dissipator_lindblad(&rho, sample).max_abs();
    if resid > 1e-8 {
        return Err(ReservoirError::SteadyStateNotConverged);
    }
    Ok(rho)
}
