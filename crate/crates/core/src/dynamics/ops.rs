//! Two-level operators and the column-stacking vectorization used by every
//! superoperator in the crate.
//!
//! Basis order is `{|g>, |x>}`: index 0 is the ground state, index 1 the
//! excited state. A 2×2 matrix `ρ` is flattened column by column, so element
//! `ρ[(i, j)]` lives at position `i + 2 j` of `vec(ρ)`. Under this convention
//!
//! * `A ρ` becomes `(I ⊗ A) vec(ρ)` ([`left`]),
//! * `ρ B` becomes `(Bᵀ ⊗ I) vec(ρ)` ([`right`]),
//! * `Tr[X ρ]` becomes `vec(Xᵀ) · vec(ρ)` ([`trace_row`]).

use nalgebra::{Matrix2, Matrix4, RowVector4, Vector4};
use num_complex::Complex64;

pub type C64 = Complex64;
/// Operator on the two-level Hilbert space.
pub type Op2 = Matrix2<C64>;
/// Matrix acting on vectorized 2×2 operators.
pub type Mat4 = Matrix4<C64>;
/// Vectorized 2×2 operator.
pub type Vec4 = Vector4<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Lowering operator `σ = |g><x|`.
pub fn sigma() -> Op2 {
    Op2::new(ZERO, ONE, ZERO, ZERO)
}

/// Raising operator `σ† = |x><g|`.
pub fn sigma_dag() -> Op2 {
    Op2::new(ZERO, ZERO, ONE, ZERO)
}

/// Excited-state projector `σ†σ = |x><x|`.
pub fn excited_projector() -> Op2 {
    Op2::new(ZERO, ZERO, ZERO, ONE)
}

pub fn ground_projector() -> Op2 {
    Op2::new(ONE, ZERO, ZERO, ZERO)
}

pub fn identity() -> Op2 {
    Op2::identity()
}

pub fn dagger(op: &Op2) -> Op2 {
    op.adjoint()
}

/// Column-stacking `vec(ρ)`.
pub fn vectorize(m: &Op2) -> Vec4 {
    Vec4::new(m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)])
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &Vec4) -> Op2 {
    Op2::new(v[0], v[2], v[1], v[3])
}

/// Superoperator for `ρ ↦ A ρ`.
pub fn left(a: &Op2) -> Mat4 {
    Op2::identity().kronecker(a)
}

/// Superoperator for `ρ ↦ ρ B`.
pub fn right(b: &Op2) -> Mat4 {
    b.transpose().kronecker(&Op2::identity())
}

/// Row vector `w` with `w · vec(ρ) = Tr[X ρ]`.
pub fn trace_row(x: &Op2) -> RowVector4<C64> {
    vectorize(&x.transpose()).transpose()
}

/// Hermitian-conjugate-aware maximum absolute entry difference.
pub fn max_abs_diff(a: &Op2, b: &Op2) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
