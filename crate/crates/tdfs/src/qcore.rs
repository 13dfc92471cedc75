//! Small dense complex linear algebra and quantum-state primitives.
//!
//! Everything downstream (reservoir operators, frame synthesis, the master
//! equation) is built on [`Operator`], [`DensityMatrix`], [`PureState`] and
//! [`BlochVector`]. Dimensions are tiny (2 for states, 4 for superoperators)
//! so all storage is dense row-major.
//!
//! Conventions fixed here once and used everywhere:
//! `sigma_- = |0><1|` (so `sigma_-|1> = |0>`), `sigma_+ = |1><0|`, and the
//! Bloch convention `bz(|0><0|) = +1` (ground state at the north pole).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use rand::Rng;
use thiserror::Error;

/// Default tolerance for Hermiticity of a density matrix.
pub const HERMITICITY_TOL: f64 = 1e-9;
/// Default tolerance for |Tr rho - 1|.
pub const TRACE_TOL: f64 = 1e-9;
/// Default tolerance for eigenvalue positivity (eigenvalues >= -tol).
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Default tolerance for pure-state normalization.
pub const NORM_TOL: f64 = 1e-12;
/// Default tolerance for the Bloch-vector norm bound.
pub const BLOCH_NORM_TOL: f64 = 1e-9;

/// Validation tolerances for density-matrix construction.
///
/// Defaults match the module constants; callers needing looser or tighter
/// validation pass their own set to the `*_with` constructors.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub positivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: HERMITICITY_TOL,
            trace: TRACE_TOL,
            positivity: POSITIVITY_TOL,
        }
    }
}

#[derive(Debug, Error)]
pub enum QcoreError {
    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),
    #[error("operator dimension must be at least 2 (got {0})")]
    DimensionTooSmall(usize),
    #[error("entries must be finite")]
    NonFiniteEntries,
    #[error("entry count {got} does not match dimension {dim}")]
    BadEntryCount { dim: usize, got: usize },
    #[error("not Hermitian: residual {residual:.3e} exceeds {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },
    #[error("trace deviates from one by {deviation:.3e} (tol {tol:.3e})")]
    TraceNotOne { deviation: f64, tol: f64 },
    #[error("negative eigenvalue {eigenvalue:.3e} (tol {tol:.3e})")]
    NotPositive { eigenvalue: f64, tol: f64 },
    #[error("state norm deviates from one by {deviation:.3e} (tol {tol:.3e})")]
    NotNormalized { deviation: f64, tol: f64 },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("Bloch norm {norm:.6} exceeds 1 (tol {tol:.3e})")]
    BlochNormTooLarge { norm: f64, tol: f64 },
    #[error("singular linear system")]
    SingularSystem,
}

/// Dense `dim x dim` complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 2, "operator dimension must be at least 2");
        Self { dim, entries: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_entries(dim: usize, entries: Vec<C64>) -> Result<Self, QcoreError> {
        if dim < 2 {
            return Err(QcoreError::DimensionTooSmall(dim));
        }
        if entries.len() != dim * dim {
            return Err(QcoreError::BadEntryCount { dim, got: entries.len() });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QcoreError::NonFiniteEntries);
        }
        Ok(Self { dim, entries })
    }

    /// Lowering operator `sigma_- = |0><1|` (annihilates the excitation).
    pub fn sigma_minus() -> Self {
        let mut m = Self::zeros(2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m
    }

    /// Raising operator `sigma_+ = |1><0|`.
    pub fn sigma_plus() -> Self {
        let mut m = Self::zeros(2);
        m[(1, 0)] = C64::new(1.0, 0.0);
        m
    }

    /// `|ket><bra|` built from two vectors of equal length.
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        assert_eq!(ket.len(), bra.len(), "outer: vector lengths differ");
        let dim = ket.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = ket[i] * bra[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(j, i)];
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, QcoreError> {
        if self.dim != other.dim {
            return Err(QcoreError::DimensionMismatch(self.dim, other.dim));
        }
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    m[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(m)
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self, QcoreError> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    /// `{A, B} = AB + BA`.
    pub fn anticommutator(&self, other: &Self) -> Result<Self, QcoreError> {
        Ok(&self.matmul(other)? + &other.matmul(self)?)
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|e| e * z).collect() }
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "apply: vector length differs from dim");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Kronecker product (used to lift 2x2 maps to 4x4 superoperators).
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Induced 1-norm (max column absolute sum).
    pub fn one_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Solve `A X = B` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self, QcoreError> {
        if self.dim != rhs.dim {
            return Err(QcoreError::DimensionMismatch(self.dim, rhs.dim));
        }
        let n = self.dim;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let (piv, piv_abs) = (col..n)
                .map(|r| (r, a[(r, col)].norm()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if piv_abs < f64::MIN_POSITIVE {
                return Err(QcoreError::SingularSystem);
            }
            if piv != col {
                for j in 0..n {
                    a.entries.swap(col * n + j, piv * n + j);
                    b.entries.swap(col * n + j, piv * n + j);
                }
            }
            let inv = C64::new(1.0, 0.0) / a[(col, col)];
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)] * inv;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let acj = a[(col, j)];
                    let bcj = b[(col, j)];
                    a[(r, j)] -= f * acj;
                    b[(r, j)] -= f * bcj;
                }
            }
        }
        for r in 0..n {
            let inv = C64::new(1.0, 0.0) / a[(r, r)];
            for j in 0..n {
                b[(r, j)] *= inv;
            }
        }
        Ok(b)
    }

    /// Matrix exponential by Pade(13) scaling and squaring.
    ///
    /// Norms up to ~1e8 are handled by extra squaring; this is what lets one
    /// exponential step absorb the stiff dissipator rates at large squeeze.
    pub fn expm(&self) -> Self {
        // Higham (2005) coefficients for the degree-13 Pade approximant.
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        const THETA13: f64 = 5.371920351148152;
        let norm = self.one_norm();
        let s = if norm > THETA13 {
            ((norm / THETA13).log2().ceil() as i32).max(0)
        } else {
            0
        };
        let a = self.scale(C64::new((0.5f64).powi(s), 0.0));
        let n = self.dim;
        let ident = Self::identity(n);
        let a2 = a.matmul(&a).expect("same dim");
        let a4 = a2.matmul(&a2).expect("same dim");
        let a6 = a2.matmul(&a4).expect("same dim");
        let u_inner = &(&a6.scale(B[13].into()) + &a4.scale(B[11].into())) + &a2.scale(B[9].into());
        let u = a
            .matmul(
                &(&a6.matmul(&u_inner).expect("same dim")
                    + &(&(&a6.scale(B[7].into()) + &a4.scale(B[5].into()))
                        + &(&a2.scale(B[3].into()) + &ident.scale(B[1].into())))),
            )
            .expect("same dim");
        let v_inner = &(&a6.scale(B[12].into()) + &a4.scale(B[10].into())) + &a2.scale(B[8].into());
        let v = &a6.matmul(&v_inner).expect("same dim")
            + &(&(&a6.scale(B[6].into()) + &a4.scale(B[4].into()))
                + &(&a2.scale(B[2].into()) + &ident.scale(B[0].into())));
        let mut r = (&v - &u).solve(&(&v + &u)).expect("Pade denominator is nonsingular");
        for _ in 0..s {
            r = r.matmul(&r).expect("same dim");
        }
        r
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator addition: dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator subtraction: dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Normalized two-level pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amp: [C64; 2],
}

impl PureState {
    /// Build from amplitudes that are already normalized (within [`NORM_TOL`]).
    pub fn new(a0: C64, a1: C64) -> Result<Self, QcoreError> {
        let n2 = a0.norm_sqr() + a1.norm_sqr();
        if !n2.is_finite() {
            return Err(QcoreError::NonFiniteEntries);
        }
        let dev = (n2.sqrt() - 1.0).abs();
        if dev > NORM_TOL {
            return Err(QcoreError::NotNormalized { deviation: dev, tol: NORM_TOL });
        }
        Ok(Self { amp: [a0, a1] })
    }

    /// Build from arbitrary amplitudes, normalizing them.
    pub fn normalized(a0: C64, a1: C64) -> Result<Self, QcoreError> {
        let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if !n.is_finite() {
            return Err(QcoreError::NonFiniteEntries);
        }
        if n < f64::MIN_POSITIVE {
            return Err(QcoreError::ZeroVector);
        }
        Ok(Self { amp: [a0 / n, a1 / n] })
    }

    pub fn ground() -> Self {
        Self { amp: [C64::new(1.0, 0.0), C64::new(0.0, 0.0)] }
    }

    pub fn excited() -> Self {
        Self { amp: [C64::new(0.0, 0.0), C64::new(1.0, 0.0)] }
    }

    pub fn amp0(&self) -> C64 {
        self.amp[0]
    }

    pub fn amp1(&self) -> C64 {
        self.amp[1]
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.amp
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amp[0].conj() * other.amp[0] + self.amp[1].conj() * other.amp[1]
    }

    /// `|psi><psi|` as a density matrix.
    pub fn projector(&self) -> DensityMatrix {
        let [a, b] = self.amp;
        DensityMatrix {
            entries: [a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj()],
        }
    }
}

/// Bloch vector of a two-level state, `bz(|0><0|) = +1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl BlochVector {
    pub fn new(bx: f64, by: f64, bz: f64) -> Result<Self, QcoreError> {
        let v = Self { bx, by, bz };
        if ![bx, by, bz].iter().all(|x| x.is_finite()) {
            return Err(QcoreError::NonFiniteEntries);
        }
        if v.norm() > 1.0 + BLOCH_NORM_TOL {
            return Err(QcoreError::BlochNormTooLarge { norm: v.norm(), tol: BLOCH_NORM_TOL });
        }
        Ok(v)
    }

    pub fn norm(&self) -> f64 {
        (self.bx * self.bx + self.by * self.by + self.bz * self.bz).sqrt()
    }

    /// Azimuthal angle `atan2(by, bx)`.
    pub fn azimuth(&self) -> f64 {
        self.by.atan2(self.bx)
    }
}

/// Hermitian, unit-trace, positive 2x2 state.
///
/// Entries row-major: `[rho00, rho01, rho10, rho11]`. Invariants are checked
/// at construction; all operations on valid states stay within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: [C64; 4],
}

impl DensityMatrix {
    pub fn from_entries(entries: [C64; 4]) -> Result<Self, QcoreError> {
        Self::from_entries_with(entries, &Tolerances::default())
    }

    pub fn from_entries_with(entries: [C64; 4], tol: &Tolerances) -> Result<Self, QcoreError> {
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QcoreError::NonFiniteEntries);
        }
        let herm = ((entries[1] - entries[2].conj()).norm())
            .max((entries[0].im).abs())
            .max((entries[3].im).abs());
        if herm > tol.hermiticity {
            return Err(QcoreError::NotHermitian { residual: herm, tol: tol.hermiticity });
        }
        let tr_dev = ((entries[0] + entries[3]).re - 1.0).abs();
        if tr_dev > tol.trace {
            return Err(QcoreError::TraceNotOne { deviation: tr_dev, tol: tol.trace });
        }
        let rho = Self { entries };
        let (lo, _) = rho.eigenvalues();
        if lo < -tol.positivity {
            return Err(QcoreError::NotPositive { eigenvalue: lo, tol: tol.positivity });
        }
        Ok(rho)
    }

    pub fn from_operator(op: &Operator) -> Result<Self, QcoreError> {
        if op.dim() != 2 {
            return Err(QcoreError::DimensionMismatch(op.dim(), 2));
        }
        Self::from_entries([op[(0, 0)], op[(0, 1)], op[(1, 0)], op[(1, 1)]])
    }

    pub fn from_bloch(b: BlochVector) -> Result<Self, QcoreError> {
        if b.norm() > 1.0 + BLOCH_NORM_TOL {
            return Err(QcoreError::BlochNormTooLarge { norm: b.norm(), tol: BLOCH_NORM_TOL });
        }
        let half = 0.5;
        Self::from_entries([
            C64::new(half * (1.0 + b.bz), 0.0),
            C64::new(half * b.bx, -half * b.by),
            C64::new(half * b.bx, half * b.by),
            C64::new(half * (1.0 - b.bz), 0.0),
        ])
    }

    pub fn maximally_mixed() -> Self {
        Self {
            entries: [
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.5, 0.0),
            ],
        }
    }

    /// Random valid state: `G G^dag / Tr(G G^dag)` with Gaussian-ish entries.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut g = [C64::new(0.0, 0.0); 4];
        for z in &mut g {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        // rho = G G^dag, then unit trace and exact resymmetrization
        let r00 = g[0] * g[0].conj() + g[1] * g[1].conj();
        let r01 = g[0] * g[2].conj() + g[1] * g[3].conj();
        let r11 = g[2] * g[2].conj() + g[3] * g[3].conj();
        let tr = (r00 + r11).re;
        Self {
            entries: [
                C64::new(r00.re / tr, 0.0),
                r01 / tr,
                r01.conj() / tr,
                C64::new(r11.re / tr, 0.0),
            ],
        }
    }

    pub fn rho00(&self) -> f64 {
        self.entries[0].re
    }

    pub fn rho11(&self) -> f64 {
        self.entries[3].re
    }

    /// Coherence `rho01 = <0|rho|1>`.
    pub fn rho01(&self) -> C64 {
        self.entries[1]
    }

    pub fn as_operator(&self) -> Operator {
        Operator::from_entries(2, self.entries.to_vec()).expect("valid state entries are finite")
    }

    /// Eigenvalues of the Hermitian 2x2 matrix, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.entries[0].re;
        let d = self.entries[3].re;
        let b2 = self.entries[1].norm_sqr();
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b2).sqrt();
        (mid - rad, mid + rad)
    }

    /// `Tr rho^2`, in `[1/2, 1]` for a valid two-level state.
    pub fn purity(&self) -> f64 {
        let a = self.entries[0].re;
        let d = self.entries[3].re;
        a * a + d * d + 2.0 * self.entries[1].norm_sqr()
    }

    /// Bloch vector: `bx = 2 Re rho01`, `by = -2 Im rho01`, `bz = rho00 - rho11`.
    pub fn bloch(&self) -> BlochVector {
        BlochVector {
            bx: 2.0 * self.entries[1].re,
            by: -2.0 * self.entries[1].im,
            bz: self.entries[0].re - self.entries[3].re,
        }
    }

    /// `<psi|rho|psi>`.
    pub fn fidelity(&self, psi: &PureState) -> f64 {
        let v = psi.amplitudes();
        let rv = [
            self.entries[0] * v[0] + self.entries[1] * v[1],
            self.entries[2] * v[0] + self.entries[3] * v[1],
        ];
        (v[0].conj() * rv[0] + v[1].conj() * rv[1]).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_algebra() {
        let sm = Operator::sigma_minus();
        let sp = Operator::sigma_plus();
        // [sigma_+, sigma_-] = |1><1| - |0><0| = diag(-1, +1)
        let com = sp.commutator(&sm).unwrap();
        assert_eq!(com[(0, 0)], c(-1.0, 0.0));
        assert_eq!(com[(1, 1)], c(1.0, 0.0));
        assert_eq!(com[(0, 1)], c(0.0, 0.0));
        // {sigma_+, sigma_-} = identity
        let anti = sp.anticommutator(&sm).unwrap();
        assert!((&anti - &Operator::identity(2)).max_abs() == 0.0);
        assert_eq!(Operator::identity(2).trace(), c(2.0, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Operator::zeros(2);
        let b = Operator::zeros(3);
        assert!(matches!(a.matmul(&b), Err(QcoreError::DimensionMismatch(2, 3))));
        assert!(a.commutator(&b).is_err());
        assert!(a.anticommutator(&b).is_err());
    }

    #[test]
    fn purity_examples() {
        assert_eq!(DensityMatrix::maximally_mixed().purity(), 0.5);
        assert_eq!(PureState::ground().projector().purity(), 1.0);
        // rho00 = 1/2, |rho01| = exp(-0.05)/2 -> purity (1 + exp(-0.1))/2
        let r01 = (-0.05f64).exp() / 2.0;
        let rho = DensityMatrix::from_entries([
            c(0.5, 0.0),
            c(r01, 0.0),
            c(r01, 0.0),
            c(0.5, 0.0),
        ])
        .unwrap();
        let expect = (1.0 + (-0.1f64).exp()) / 2.0;
        assert!((rho.purity() - expect).abs() < 1e-15);
        assert!((expect - 0.9524187090179798).abs() < 1e-15);
    }

    #[test]
    fn bloch_convention_anchors() {
        let b = PureState::ground().projector().bloch();
        assert_eq!((b.bx, b.by, b.bz), (0.0, 0.0, 1.0));
        let b = DensityMatrix::maximally_mixed().bloch();
        assert_eq!((b.bx, b.by, b.bz), (0.0, 0.0, 0.0));
        // rho01 = 1/2, rho00 = 1/2 -> equator pure state (+x)
        let rho = DensityMatrix::from_entries([
            c(0.5, 0.0),
            c(0.5, 0.0),
            c(0.5, 0.0),
            c(0.5, 0.0),
        ])
        .unwrap();
        let b = rho.bloch();
        assert_eq!((b.bx, b.by, b.bz), (1.0, 0.0, 0.0));
    }

    #[test]
    fn fidelity_examples() {
        let plus = PureState::normalized(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((plus.projector().fidelity(&plus) - 1.0).abs() < 1e-15);
        assert!((DensityMatrix::maximally_mixed().fidelity(&plus) - 0.5).abs() < 1e-15);
        assert!((PureState::ground().projector().fidelity(&plus) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_states_are_rejected() {
        // trace 2
        assert!(matches!(
            DensityMatrix::from_entries([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
            Err(QcoreError::TraceNotOne { .. })
        ));
        // non-Hermitian coherence
        assert!(matches!(
            DensityMatrix::from_entries([c(0.5, 0.0), c(0.3, 0.0), c(-0.3, 0.0), c(0.5, 0.0)]),
            Err(QcoreError::NotHermitian { .. })
        ));
        // negative eigenvalue: |rho01| > sqrt(rho00 rho11)
        assert!(matches!(
            DensityMatrix::from_entries([c(0.5, 0.0), c(0.6, 0.0), c(0.6, 0.0), c(0.5, 0.0)]),
            Err(QcoreError::NotPositive { .. })
        ));
        // NaN
        assert!(DensityMatrix::from_entries([
            c(f64::NAN, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0)
        ])
        .is_err());
    }

    #[test]
    fn random_states_satisfy_invariants_and_purity_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let rho = DensityMatrix::random(&mut rng);
            let op = rho.as_operator();
            assert!((&op - &op.dagger()).max_abs() <= 1e-15);
            assert!((op.trace().re - 1.0).abs() <= 1e-12);
            let (lo, _) = rho.eigenvalues();
            assert!(lo >= -1e-12);
            let p = rho.purity();
            assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&p));
            // purity = 1 <=> bloch norm = 1 (identity p = (1 + |b|^2)/2)
            let bn = rho.bloch().norm();
            assert!((p - 0.5 * (1.0 + bn * bn)).abs() < 1e-12);
        }
    }

    #[test]
    fn bloch_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let rho = DensityMatrix::random(&mut rng);
            let back = DensityMatrix::from_bloch(rho.bloch()).unwrap();
            assert!((&back.as_operator() - &rho.as_operator()).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn expm_matches_scalar_and_rotation() {
        // diag(a, b) -> diag(e^a, e^b)
        let a = Operator::from_entries(
            2,
            vec![c(-3.0, 0.5), c(0.0, 0.0), c(0.0, 0.0), c(1.0, -2.0)],
        )
        .unwrap();
        let e = a.expm();
        assert!((e[(0, 0)] - c(-3.0, 0.5).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c(1.0, -2.0).exp()).norm() < 1e-14);
        // exp(-i theta sigma_x) = cos(theta) I - i sin(theta) sigma_x
        let theta = 0.7;
        let mut sx = Operator::zeros(2);
        sx[(0, 1)] = c(1.0, 0.0);
        sx[(1, 0)] = c(1.0, 0.0);
        let e = sx.scale(c(0.0, -theta)).expm();
        assert!((e[(0, 0)] - c(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - c(0.0, -theta.sin())).norm() < 1e-14);
        // large-norm dissipative: exp(diag(-1e7, -1)) -> diag(0, e^-1)
        let a = Operator::from_entries(
            2,
            vec![c(-1e7, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        )
        .unwrap();
        let e = a.expm();
        assert!(e[(0, 0)].norm() < 1e-300);
        assert!((e[(1, 1)].re - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn expm_additivity_cross_check() {
        // exp(A) for random Hermitian-ish A checked against exp(A/2)^2
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut e = vec![c(0.0, 0.0); 16];
            for z in &mut e {
                *z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            }
            let a = Operator::from_entries(4, e).unwrap();
            let whole = a.expm();
            let half = a.scale(c(0.5, 0.0)).expm();
            let sq = half.matmul(&half).unwrap();
            assert!((&whole - &sq).max_abs() < 1e-11 * whole.max_abs().max(1.0));
        }
    }

    #[test]
    fn solve_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut e = vec![c(0.0, 0.0); 16];
            for z in &mut e {
                *z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            }
            let a = Operator::from_entries(4, e).unwrap();
            let x = a.solve(&Operator::identity(4)).unwrap();
            let err = (&a.matmul(&x).unwrap() - &Operator::identity(4)).max_abs();
            assert!(err < 1e-10, "inverse residual {err}");
        }
    }
}
