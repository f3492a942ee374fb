//! Arithmetic on Hermitian operators of a single qubit.
//!
//! Every operator is written in the fixed computational basis `{|0⟩, |1⟩}`
//! and decomposes as `O = ½[Tr(O)·I + r(O)·σ]` with `σ = (X, Y, Z)` and
//! `r(O) = (Tr[OX], Tr[OY], Tr[OZ])`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tol;

/// A real 3-vector in Bloch coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);
    pub const X: Self = Self::new(1.0, 0.0, 0.0);
    pub const Y: Self = Self::new(0.0, 1.0, 0.0);
    pub const Z: Self = Self::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Unit vector at polar angle `theta` from +z and azimuth `phi` from +x.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(st * cp, st * sp, ct)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn component(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("Bloch axis {axis} out of range"),
        }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    /// Euclidean norm.
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self / ‖self‖`, or `None` when the norm does not exceed `tol`.
    pub fn normalized(self, tol: f64) -> Option<Self> {
        let n = self.norm();
        (n > tol).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for BlochVector {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self::new(self.x * c, self.y * c, self.z * c)
    }
}

impl Sum for BlochVector {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.x, self.y, self.z)
    }
}

impl Serialize for BlochVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().map(canonical_zero).serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlochVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(d)?;
        Ok(Self::new(x, y, z))
    }
}

/// A Hermitian operator on the qubit space.
///
/// Stored as its two real diagonal entries and the upper off-diagonal entry,
/// so Hermiticity holds by construction once a value exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianOp {
    d0: f64,
    d1: f64,
    off: Complex64,
}

impl HermitianOp {
    pub const ZERO: Self = Self {
        d0: 0.0,
        d1: 0.0,
        off: Complex64::new(0.0, 0.0),
    };
    pub const IDENTITY: Self = Self {
        d0: 1.0,
        d1: 1.0,
        off: Complex64::new(0.0, 0.0),
    };

    /// Builds an operator from a row-major 2×2 complex matrix, rejecting
    /// inputs that are not Hermitian within [`tol::HERM`].
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        Self::with_tolerance(entries, tol::HERM)
    }

    pub fn with_tolerance(entries: [[Complex64; 2]; 2], tol: f64) -> Result<Self> {
        let dev = (entries[1][0] - entries[0][1].conj())
            .norm()
            .max(entries[0][0].im.abs())
            .max(entries[1][1].im.abs());
        if !(dev <= tol) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self {
            d0: entries[0][0].re,
            d1: entries[1][1].re,
            off: (entries[0][1] + entries[1][0].conj()) * 0.5,
        })
    }

    /// `½[trace·I + r·σ]`.
    pub fn from_bloch(trace: f64, r: BlochVector) -> Self {
        Self {
            d0: 0.5 * (trace + r.z),
            d1: 0.5 * (trace - r.z),
            off: Complex64::new(0.5 * r.x, -0.5 * r.y),
        }
    }

    /// Projector `½(I + n̂·σ)` onto the +1 eigenstate along `direction`.
    pub fn projector(direction: BlochVector) -> Self {
        Self::from_bloch(1.0, direction)
    }

    pub fn diag(d0: f64, d1: f64) -> Self {
        Self {
            d0,
            d1,
            off: Complex64::new(0.0, 0.0),
        }
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.d0, 0.0), self.off],
            [self.off.conj(), Complex64::new(self.d1, 0.0)],
        ]
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries()[row][col]
    }

    pub fn trace(&self) -> f64 {
        self.d0 + self.d1
    }

    /// The Pauli traces `(Tr[OX], Tr[OY], Tr[OZ])`.
    pub fn bloch_vector(&self) -> BlochVector {
        BlochVector::new(2.0 * self.off.re, -2.0 * self.off.im, self.d0 - self.d1)
    }

    /// `Tr[self · other]`, computed from the matrix product entries.
    pub fn trace_product(&self, other: &Self) -> f64 {
        self.d0 * other.d0 + self.d1 * other.d1 + 2.0 * (self.off * other.off.conj()).re
    }

    /// Eigenvalues in descending order with their rank-1 eigenprojectors.
    ///
    /// A degenerate spectrum yields the computational-basis projectors.
    pub fn eig2(&self) -> Eig2 {
        let t = self.trace();
        let r = self.bloch_vector();
        let n = r.norm();
        match r.normalized(tol::DEG) {
            Some(dir) => Eig2 {
                values: [0.5 * (t + n), 0.5 * (t - n)],
                projectors: [Self::projector(dir), Self::projector(-dir)],
            },
            None => Eig2 {
                values: [0.5 * t, 0.5 * t],
                projectors: [Self::diag(1.0, 0.0), Self::diag(0.0, 1.0)],
            },
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        0.5 * (self.trace() - self.bloch_vector().norm())
    }

    /// True iff both eigenvalues are at least `-tol`.
    pub fn psd_check(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.d0 - other.d0)
            .abs()
            .max((self.d1 - other.d1).abs())
            .max((self.off - other.off).norm())
    }

    pub fn is_finite(&self) -> bool {
        self.d0.is_finite() && self.d1.is_finite() && self.off.re.is_finite() && self.off.im.is_finite()
    }
}

/// Result of [`HermitianOp::eig2`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eig2 {
    /// `[λ_max, λ_min]`.
    pub values: [f64; 2],
    pub projectors: [HermitianOp; 2],
}

impl Eig2 {
    pub fn reconstruct(&self) -> HermitianOp {
        self.projectors[0] * self.values[0] + self.projectors[1] * self.values[1]
    }
}

/// Free-function form of [`HermitianOp::bloch_vector`].
pub fn bloch_vector(op: &HermitianOp) -> BlochVector {
    op.bloch_vector()
}

/// Free-function form of [`HermitianOp::from_bloch`].
pub fn from_bloch(trace: f64, r: BlochVector) -> HermitianOp {
    HermitianOp::from_bloch(trace, r)
}

impl Add for HermitianOp {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            d0: self.d0 + o.d0,
            d1: self.d1 + o.d1,
            off: self.off + o.off,
        }
    }
}

impl AddAssign for HermitianOp {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for HermitianOp {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            d0: self.d0 - o.d0,
            d1: self.d1 - o.d1,
            off: self.off - o.off,
        }
    }
}

impl Neg for HermitianOp {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul<f64> for HermitianOp {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self {
            d0: self.d0 * c,
            d1: self.d1 * c,
            off: self.off * c,
        }
    }
}

impl Sum for HermitianOp {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

/// `-0.0` becomes `0.0` so serialized output does not depend on signed zeros.
pub(crate) fn canonical_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

impl Serialize for HermitianOp {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let e = self.entries();
        let rows: [[[f64; 2]; 2]; 2] = std::array::from_fn(|i| {
            std::array::from_fn(|j| [canonical_zero(e[i][j].re), canonical_zero(e[i][j].im)])
        });
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianOp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[[f64; 2]; 2]; 2]>::deserialize(d)?;
        let entries = std::array::from_fn(|i| {
            std::array::from_fn(|j| Complex64::new(rows[i][j][0], rows[i][j][1]))
        });
        Self::new(entries).map_err(serde::de::Error::custom)
    }
}
