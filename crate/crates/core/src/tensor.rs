//! Dense complex linear algebra on the small composite spaces used here:
//! two qutrits (the SQUIDs) and one truncated bosonic mode (the cavity).
//!
//! Basis ordering is SQUID1 ⊗ SQUID2 ⊗ cavity with row-major composite
//! index `((s1 * 3) + s2) * n_max + n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Elementwise tolerance on `A - A†` for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Frobenius tolerance on `U†U - I`.
pub const UNITARY_TOL: f64 = 1e-9;
/// Tolerance on state norms.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance on density-matrix traces.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Number of levels kept per SQUID.
pub const SQUID_LEVELS: usize = 3;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Unit-modulus phase factor `e^{i φ}`.
pub fn phase(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// One tensor factor of the composite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Squid1,
    Squid2,
    Cavity,
}

impl Factor {
    pub const ALL: [Factor; 3] = [Factor::Squid1, Factor::Squid2, Factor::Cavity];
}

/// Ordered subset of the factors SQUID1, SQUID2, cavity, together with the
/// Fock cutoff when the cavity is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertLayout {
    factors: Vec<Factor>,
    fock_cutoff: Option<usize>,
}

impl HilbertLayout {
    /// SQUID1 ⊗ SQUID2 ⊗ cavity with Fock states `0..n_max`.
    pub fn composite(n_max: usize) -> Result<Self> {
        check_cutoff(n_max)?;
        Ok(Self { factors: Factor::ALL.to_vec(), fock_cutoff: Some(n_max) })
    }

    /// SQUID1 ⊗ SQUID2 (dimension 9).
    pub fn squid_pair() -> Self {
        Self { factors: vec![Factor::Squid1, Factor::Squid2], fock_cutoff: None }
    }

    pub fn single_squid(which: Factor) -> Result<Self> {
        if which == Factor::Cavity {
            return Err(CoreError::InvalidFactors("a single-SQUID layout cannot hold the cavity".into()));
        }
        Ok(Self { factors: vec![which], fock_cutoff: None })
    }

    pub fn cavity(n_max: usize) -> Result<Self> {
        check_cutoff(n_max)?;
        Ok(Self { factors: vec![Factor::Cavity], fock_cutoff: Some(n_max) })
    }

    /// Sub-layout keeping `keep` (in canonical order). Every kept factor
    /// must be present in `self`.
    pub fn restrict(&self, keep: &[Factor]) -> Result<Self> {
        if keep.is_empty() {
            return Err(CoreError::InvalidFactors("empty factor subset".into()));
        }
        let mut kept: Vec<Factor> = keep.to_vec();
        kept.sort();
        kept.dedup();
        if kept.len() != keep.len() {
            return Err(CoreError::InvalidFactors(format!("duplicate factors in {keep:?}")));
        }
        for f in &kept {
            if !self.factors.contains(f) {
                return Err(CoreError::InvalidFactors(format!("{f:?} is not part of this layout")));
            }
        }
        let fock_cutoff = if kept.contains(&Factor::Cavity) { self.fock_cutoff } else { None };
        Ok(Self { factors: kept, fock_cutoff })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn fock_cutoff(&self) -> Option<usize> {
        self.fock_cutoff
    }

    pub fn has_cavity(&self) -> bool {
        self.fock_cutoff.is_some()
    }

    pub fn factor_dim(&self, f: Factor) -> usize {
        match f {
            Factor::Squid1 | Factor::Squid2 => SQUID_LEVELS,
            Factor::Cavity => self.fock_cutoff.unwrap_or(0),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|&f| self.factor_dim(f)).collect()
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn slot(&self, f: Factor) -> Option<usize> {
        self.factors.iter().position(|&x| x == f)
    }

    /// Row-major composite index of the product basis vector with the given
    /// per-factor labels (one label per factor of this layout).
    pub fn encode(&self, labels: &[usize]) -> usize {
        debug_assert_eq!(labels.len(), self.factors.len());
        self.dims().iter().zip(labels).fold(0, |acc, (&d, &l)| {
            debug_assert!(l < d);
            acc * d + l
        })
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut labels = vec![0; dims.len()];
        for (slot, &d) in dims.iter().enumerate().rev() {
            labels[slot] = index % d;
            index /= d;
        }
        labels
    }

    /// Composite index `((s1 * 3) + s2) * n_max + n` of `|s1, s2, n⟩`.
    /// For the SQUID-pair layout `n` must be 0.
    pub fn index(&self, s1: usize, s2: usize, n: usize) -> usize {
        match self.fock_cutoff {
            Some(n_max) if self.factors.len() == 3 => (s1 * SQUID_LEVELS + s2) * n_max + n,
            _ => {
                debug_assert_eq!(n, 0);
                s1 * SQUID_LEVELS + s2
            }
        }
    }
}

fn check_cutoff(n_max: usize) -> Result<()> {
    if n_max < 2 {
        return Err(CoreError::InvalidParameter {
            name: "n_max",
            reason: format!("Fock cutoff must be at least 2, got {n_max}"),
        });
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Lifts a single-factor operator to `layout`, acting as the identity on
/// every other factor.
pub fn embed(op: &ComplexMatrix, slot: Factor, layout: &HilbertLayout) -> Result<ComplexMatrix> {
    let Some(pos) = layout.slot(slot) else {
        return Err(CoreError::InvalidFactors(format!("{slot:?} is not part of this layout")));
    };
    let expected = layout.factor_dim(slot);
    if op.nrows() != op.ncols() {
        return Err(CoreError::NotSquare { rows: op.nrows(), cols: op.ncols() });
    }
    if op.nrows() != expected {
        return Err(CoreError::DimensionMismatch { expected, got: op.nrows() });
    }
    let mut out = identity(1);
    for (i, &d) in layout.dims().iter().enumerate() {
        out = if i == pos { kron(&out, op) } else { kron(&out, &identity(d)) };
    }
    Ok(out)
}

/// Truncated annihilation operator: `a|n⟩ = √n |n-1⟩` on Fock states `0..n_max`.
pub fn annihilation(n_max: usize) -> Result<ComplexMatrix> {
    check_cutoff(n_max)?;
    let mut a = ComplexMatrix::zeros(n_max, n_max);
    for n in 1..n_max {
        a[(n - 1, n)] = real((n as f64).sqrt());
    }
    Ok(a)
}

pub fn number_operator(n_max: usize) -> Result<ComplexMatrix> {
    check_cutoff(n_max)?;
    Ok(ComplexMatrix::from_diagonal(&ComplexVector::from_fn(n_max, |n, _| real(n as f64))))
}

/// Single-SQUID operators in the `|0⟩, |1⟩, |2⟩` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SquidOp {
    /// `S⁺ = |2⟩⟨0|`
    Raise,
    /// `S⁻ = |0⟩⟨2|`
    Lower,
    Projector(usize),
    /// `|to⟩⟨from|`
    Transition { to: usize, from: usize },
    /// `diag(e^{iφ₀}, e^{iφ₁}, e^{iφ₂})`
    LevelPhase([f64; 3]),
}

pub fn squid_op(kind: SquidOp) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(SQUID_LEVELS, SQUID_LEVELS);
    match kind {
        SquidOp::Raise => m[(2, 0)] = real(1.0),
        SquidOp::Lower => m[(0, 2)] = real(1.0),
        SquidOp::Projector(l) => m[(l, l)] = real(1.0),
        SquidOp::Transition { to, from } => m[(to, from)] = real(1.0),
        SquidOp::LevelPhase(phis) => {
            for (l, &p) in phis.iter().enumerate() {
                m[(l, l)] = phase(p);
            }
        }
    }
    m
}

fn require_square(a: &ComplexMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(CoreError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(a.nrows())
}

/// `max |A - A†|` over all entries.
pub fn hermitian_deviation(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermiticity check at [`HERMITIAN_TOL`], scaled by the largest entry when
/// that exceeds one.
pub fn is_hermitian(a: &ComplexMatrix) -> bool {
    a.is_square() && hermitian_deviation(a) <= HERMITIAN_TOL * a.camax().max(1.0)
}

/// `‖U†U - I‖_F`
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    (u.adjoint() * u - identity(u.ncols())).norm()
}

pub fn is_unitary(u: &ComplexMatrix) -> bool {
    u.is_square() && unitarity_defect(u) <= UNITARY_TOL
}

/// Eigendecomposition `H = V diag(ε) V†` of a Hermitian matrix, reusable for
/// propagators at many times.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub values: DVector<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianSpectrum {
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        require_square(h)?;
        let deviation = hermitian_deviation(h);
        if deviation > HERMITIAN_TOL * h.camax().max(1.0) {
            return Err(CoreError::NotHermitian { deviation });
        }
        // Symmetrize so roundoff in the input cannot leak into the solver.
        let sym = (h + h.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        Ok(Self { values: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    /// `exp(-i H t)`
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        self.map(|e| phase(-e * t))
    }

    /// Applies `f(ε)` to the spectrum: `V diag(f(ε)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &e) in self.values.iter().enumerate() {
            let fe = f(e);
            for x in scaled.column_mut(j).iter_mut() {
                *x *= fe;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(-i h t)` for Hermitian `h`, via eigendecomposition.
pub fn matexp_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(HermitianSpectrum::new(h)?.propagator(t))
}

/// Frobenius norm of `ab - ba`.
pub fn commutator_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let n = require_square(a)?;
    let m = require_square(b)?;
    if n != m {
        return Err(CoreError::DimensionMismatch { expected: n, got: m });
    }
    Ok((a * b - b * a).norm())
}

/// Normalized pure state on a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: HilbertLayout,
    amplitudes: ComplexVector,
}

impl PureState {
    /// Wraps `amplitudes`; fails unless `‖ψ‖₂ = 1` within [`NORM_TOL`].
    pub fn new(layout: HilbertLayout, amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(CoreError::DimensionMismatch { expected: layout.dim(), got: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(CoreError::Unnormalized { norm });
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn normalized(layout: HilbertLayout, amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(CoreError::Unnormalized { norm });
        }
        Self::new(layout, amplitudes.unscale(norm))
    }

    pub fn basis(layout: HilbertLayout, index: usize) -> Result<Self> {
        let dim = layout.dim();
        if index >= dim {
            return Err(CoreError::DimensionMismatch { expected: dim, got: index });
        }
        let mut v = ComplexVector::zeros(dim);
        v[index] = real(1.0);
        Self::new(layout, v)
    }

    /// `|s1, s2⟩` on the SQUID-pair layout.
    pub fn squid_basis(s1: usize, s2: usize) -> Self {
        let layout = HilbertLayout::squid_pair();
        let idx = layout.index(s1, s2, 0);
        Self::basis(layout, idx).expect("SQUID labels are in range")
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Applies `u` and checks the norm afterwards.
    pub fn apply(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.ncols() != self.amplitudes.len() || u.nrows() != u.ncols() {
            return Err(CoreError::DimensionMismatch { expected: self.amplitudes.len(), got: u.ncols() });
        }
        Self::new(self.layout.clone(), u * &self.amplitudes)
    }

    /// Like [`apply`](Self::apply) but without the normalization gate, for
    /// callers that audit norm drift themselves.
    pub fn apply_unchecked(&self, u: &ComplexMatrix) -> Self {
        Self { layout: self.layout.clone(), amplitudes: u * &self.amplitudes }
    }

    pub fn with_global_phase(&self, phi: f64) -> Self {
        Self { layout: self.layout.clone(), amplitudes: self.amplitudes.map(|a| a * phase(phi)) }
    }

    pub fn tensor(&self, other: &PureState, layout: HilbertLayout) -> Result<Self> {
        Self::new(layout, self.amplitudes.kronecker(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { layout: self.layout.clone(), matrix: m }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix on a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: HilbertLayout,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(layout: HilbertLayout, matrix: ComplexMatrix) -> Result<Self> {
        let dim = layout.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(CoreError::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(CoreError::InvalidDensity(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(CoreError::InvalidDensity(format!("trace is {tr}")));
        }
        let rho = Self { layout, matrix };
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(CoreError::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Builds without validation. Used for intermediate results of
    /// structure-preserving maps whose invariants are audited separately.
    pub(crate) fn from_parts(layout: HilbertLayout, matrix: ComplexMatrix) -> Self {
        Self { layout, matrix }
    }

    pub fn maximally_mixed(layout: HilbertLayout) -> Self {
        let d = layout.dim();
        let matrix = identity(d).unscale(d as f64);
        Self { layout, matrix }
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
        self.matrix.norm_squared()
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        let sym = (&self.matrix + self.matrix.adjoint()).scale(0.5);
        SymmetricEigen::new(sym).eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().min()
    }

    /// `U ρ U†`
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        let d = self.matrix.nrows();
        if u.nrows() != d || u.ncols() != d {
            return Err(CoreError::DimensionMismatch { expected: d, got: u.nrows() });
        }
        let m = u * &self.matrix * u.adjoint();
        Ok(Self { layout: self.layout.clone(), matrix: hermitize(m) })
    }

    pub fn tensor(&self, other: &DensityMatrix, layout: HilbertLayout) -> Result<Self> {
        let m = kron(&self.matrix, &other.matrix);
        if m.nrows() != layout.dim() {
            return Err(CoreError::DimensionMismatch { expected: layout.dim(), got: m.nrows() });
        }
        Ok(Self { layout, matrix: m })
    }
}

/// Restores exact Hermiticity after roundoff.
pub(crate) fn hermitize(m: ComplexMatrix) -> ComplexMatrix {
    (&m + m.adjoint()).scale(0.5)
}
