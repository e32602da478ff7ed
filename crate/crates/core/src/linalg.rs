//! Small square matrices with either exact rational or `f64` entries, and the
//! exterior-power quantities attached to a periodic orbit's linearization:
//! `tr(∧^ℓ M)`, `det(I − M)` and the orientation sign.
//!
//! Exterior traces are sums of principal minors, enumerated over index
//! subsets. There is no characteristic-polynomial shortcut: on exact input
//! every quantity here is computed without rounding.

use std::fmt;
use std::ops::Mul;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

pub const MAX_DIM: usize = 8;

/// An eigenvalue with `||λ| − 1| < UNIT_CIRCLE_TOL` counts as lying on the unit circle.
pub const UNIT_CIRCLE_TOL: f64 = 1e-9;

/// Relative threshold below which `det(I − M)` is treated as zero.
pub const DET_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn one(exact: bool) -> Self {
        if exact {
            Scalar::Exact(BigRational::one())
        } else {
            Scalar::Float(1.0)
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => rational_to_f64(q),
            Scalar::Float(x) => *x,
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Scalar::Exact(q) => {
                if q.is_zero() {
                    0
                } else if q.is_positive() {
                    1
                } else {
                    -1
                }
            }
            Scalar::Float(x) => {
                if *x == 0.0 {
                    0
                } else if *x > 0.0 {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // ratio of huge integers: fall back to scaled quotient
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Orientation sign ε ∈ {+1, −1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn from_i32(v: i32) -> Option<Self> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_i32() as f64
    }

    pub fn pow(self, m: u32) -> Self {
        if self == Sign::Minus && m % 2 == 1 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    /// `(−1)^k`
    pub fn parity(k: usize) -> Self {
        if k % 2 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Entries {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

/// Row-major square matrix of dimension `1..=MAX_DIM`, uniformly exact or uniformly float.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallMatrix {
    dim: usize,
    entries: Entries,
}

fn check_shape(dim: usize, len: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Parameter(format!("matrix dimension {dim} outside 1..={MAX_DIM}")));
    }
    if len != dim * dim {
        return Err(Error::Parameter(format!("{len} entries given for a {dim}x{dim} matrix")));
    }
    Ok(())
}

impl SmallMatrix {
    pub fn from_rationals(dim: usize, entries: Vec<BigRational>) -> Result<Self> {
        check_shape(dim, entries.len())?;
        Ok(Self { dim, entries: Entries::Exact(entries) })
    }

    pub fn from_integers(dim: usize, entries: &[i64]) -> Result<Self> {
        Self::from_rationals(dim, entries.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
    }

    pub fn from_f64(dim: usize, entries: Vec<f64>) -> Result<Self> {
        check_shape(dim, entries.len())?;
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("non-finite matrix entry".into()));
        }
        Ok(Self { dim, entries: Entries::Float(entries) })
    }

    /// Builds a matrix from scalars; mixing exact and float entries is rejected.
    pub fn from_scalars(dim: usize, entries: Vec<Scalar>) -> Result<Self> {
        check_shape(dim, entries.len())?;
        let exact = entries.first().is_some_and(Scalar::is_exact);
        if entries.iter().any(|s| s.is_exact() != exact) {
            return Err(Error::MixedScalars);
        }
        if exact {
            let v = entries
                .into_iter()
                .map(|s| match s {
                    Scalar::Exact(q) => q,
                    Scalar::Float(_) => unreachable!(),
                })
                .collect();
            Self::from_rationals(dim, v)
        } else {
            Self::from_f64(dim, entries.iter().map(Scalar::to_f64).collect())
        }
    }

    pub fn identity(dim: usize, exact: bool) -> Self {
        let entries = if exact {
            Entries::Exact(
                (0..dim * dim)
                    .map(|k| if k % (dim + 1) == 0 { BigRational::one() } else { BigRational::zero() })
                    .collect(),
            )
        } else {
            Entries::Float((0..dim * dim).map(|k| if k % (dim + 1) == 0 { 1.0 } else { 0.0 }).collect())
        };
        Self { dim, entries }
    }

    pub fn diagonal_f64(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut v = vec![0.0; dim * dim];
        for (i, d) in diag.iter().enumerate() {
            v[i * dim + i] = *d;
        }
        Self::from_f64(dim, v)
    }

    pub fn diagonal_exact(diag: &[BigRational]) -> Result<Self> {
        let dim = diag.len();
        let mut v = vec![BigRational::zero(); dim * dim];
        for (i, d) in diag.iter().enumerate() {
            v[i * dim + i] = d.clone();
        }
        Self::from_rationals(dim, v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.entries, Entries::Exact(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> Scalar {
        match &self.entries {
            Entries::Exact(v) => Scalar::Exact(v[i * self.dim + j].clone()),
            Entries::Float(v) => Scalar::Float(v[i * self.dim + j]),
        }
    }

    pub fn entry_f64(&self, i: usize, j: usize) -> f64 {
        match &self.entries {
            Entries::Exact(v) => rational_to_f64(&v[i * self.dim + j]),
            Entries::Float(v) => v[i * self.dim + j],
        }
    }

    pub fn exact_entries(&self) -> Option<&[BigRational]> {
        match &self.entries {
            Entries::Exact(v) => Some(v),
            Entries::Float(_) => None,
        }
    }

    pub fn to_f64_entries(&self) -> Vec<f64> {
        match &self.entries {
            Entries::Exact(v) => v.iter().map(rational_to_f64).collect(),
            Entries::Float(v) => v.clone(),
        }
    }

    pub fn to_float(&self) -> SmallMatrix {
        SmallMatrix { dim: self.dim, entries: Entries::Float(self.to_f64_entries()) }
    }

    pub fn mul(&self, other: &SmallMatrix) -> Result<SmallMatrix> {
        if self.dim != other.dim {
            return Err(Error::Parameter(format!("dimension mismatch {} vs {}", self.dim, other.dim)));
        }
        let n = self.dim;
        let entries = match (&self.entries, &other.entries) {
            (Entries::Exact(a), Entries::Exact(b)) => {
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = BigRational::zero();
                        for k in 0..n {
                            acc += &a[i * n + k] * &b[k * n + j];
                        }
                        out.push(acc);
                    }
                }
                Entries::Exact(out)
            }
            (Entries::Float(a), Entries::Float(b)) => {
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        out.push((0..n).map(|k| a[i * n + k] * b[k * n + j]).sum());
                    }
                }
                Entries::Float(out)
            }
            _ => return Err(Error::MixedScalars),
        };
        Ok(SmallMatrix { dim: n, entries })
    }

    pub fn pow(&self, m: u32) -> SmallMatrix {
        let mut result = SmallMatrix::identity(self.dim, self.is_exact());
        let mut base = self.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base).expect("same kind and dimension");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("same kind and dimension");
            }
        }
        result
    }

    /// `I − M`
    pub fn one_minus(&self) -> SmallMatrix {
        let n = self.dim;
        let entries = match &self.entries {
            Entries::Exact(v) => Entries::Exact(
                v.iter()
                    .enumerate()
                    .map(|(k, x)| if k % (n + 1) == 0 { BigRational::one() - x } else { -x.clone() })
                    .collect(),
            ),
            Entries::Float(v) => {
                Entries::Float(v.iter().enumerate().map(|(k, x)| if k % (n + 1) == 0 { 1.0 - x } else { -x }).collect())
            }
        };
        SmallMatrix { dim: n, entries }
    }

    pub fn determinant(&self) -> Scalar {
        match &self.entries {
            Entries::Exact(v) => Scalar::Exact(det_exact(v.clone(), self.dim)),
            Entries::Float(v) => Scalar::Float(det_float(v.clone(), self.dim)),
        }
    }

    /// Principal minor on the rows/columns whose bits are set in `mask`.
    pub fn principal_minor(&self, mask: u32) -> Scalar {
        let idx: Vec<usize> = (0..self.dim).filter(|i| mask & (1 << i) != 0).collect();
        let k = idx.len();
        if k == 0 {
            return Scalar::one(self.is_exact());
        }
        match &self.entries {
            Entries::Exact(v) => {
                let sub = idx.iter().flat_map(|&i| idx.iter().map(move |&j| v[i * self.dim + j].clone())).collect();
                Scalar::Exact(det_exact(sub, k))
            }
            Entries::Float(v) => {
                let sub = idx.iter().flat_map(|&i| idx.iter().map(move |&j| v[i * self.dim + j])).collect();
                Scalar::Float(det_float(sub, k))
            }
        }
    }

    pub fn inverse(&self) -> Result<SmallMatrix> {
        let n = self.dim;
        match &self.entries {
            Entries::Exact(v) => {
                let mut a = v.clone();
                let mut inv: Vec<BigRational> = SmallMatrix::identity(n, true).exact_entries().unwrap().to_vec();
                for col in 0..n {
                    let p = (col..n)
                        .find(|&r| !a[r * n + col].is_zero())
                        .ok_or_else(|| Error::Parameter("singular matrix".into()))?;
                    if p != col {
                        for j in 0..n {
                            a.swap(p * n + j, col * n + j);
                            inv.swap(p * n + j, col * n + j);
                        }
                    }
                    let pivot = a[col * n + col].clone();
                    for j in 0..n {
                        a[col * n + j] /= &pivot;
                        inv[col * n + j] /= &pivot;
                    }
                    for r in 0..n {
                        if r != col && !a[r * n + col].is_zero() {
                            let f = a[r * n + col].clone();
                            for j in 0..n {
                                let t = &f * &a[col * n + j];
                                a[r * n + j] -= t;
                                let t = &f * &inv[col * n + j];
                                inv[r * n + j] -= t;
                            }
                        }
                    }
                }
                SmallMatrix::from_rationals(n, inv)
            }
            Entries::Float(v) => {
                let m = DMatrix::from_row_slice(n, n, v);
                let inv = m.try_inverse().ok_or_else(|| Error::Parameter("singular matrix".into()))?;
                SmallMatrix::from_f64(n, inv.transpose().as_slice().to_vec())
            }
        }
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.to_f64_entries());
        m.complex_eigenvalues().iter().copied().collect()
    }

    /// No eigenvalue within `UNIT_CIRCLE_TOL` of the unit circle.
    pub fn is_hyperbolic(&self) -> bool {
        self.eigenvalues().iter().all(|l| (l.norm() - 1.0).abs() >= UNIT_CIRCLE_TOL)
    }

    /// Number of eigenvalues of modulus greater than one.
    pub fn expanding_dimension(&self) -> usize {
        self.eigenvalues().iter().filter(|l| l.norm() > 1.0).count()
    }
}

fn det_exact(mut a: Vec<BigRational>, n: usize) -> BigRational {
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r * n + col].is_zero()) else {
            return BigRational::zero();
        };
        if p != col {
            for j in 0..n {
                a.swap(p * n + j, col * n + j);
            }
            det = -det;
        }
        let pivot = a[col * n + col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if a[r * n + col].is_zero() {
                continue;
            }
            let f = &a[r * n + col] / &pivot;
            for j in col..n {
                let t = &f * &a[col * n + j];
                a[r * n + j] -= t;
            }
        }
    }
    det
}

fn det_float(mut a: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs())).unwrap();
        if a[p * n + col] == 0.0 {
            return 0.0;
        }
        if p != col {
            for j in 0..n {
                a.swap(p * n + j, col * n + j);
            }
            det = -det;
        }
        let pivot = a[col * n + col];
        det *= pivot;
        for r in col + 1..n {
            let f = a[r * n + col] / pivot;
            if f != 0.0 {
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
            }
        }
    }
    det
}

/// `(tr ∧^0 M, …, tr ∧^dim M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorTraceVector {
    pub values: Vec<Scalar>,
}

impl ExteriorTraceVector {
    /// `Σ_ℓ (−1)^ℓ t_ℓ`, which equals `det(I − M)`.
    pub fn alternating_sum(&self) -> Scalar {
        match self.values.first() {
            Some(Scalar::Exact(_)) => {
                let mut acc = BigRational::zero();
                for (l, v) in self.values.iter().enumerate() {
                    if let Scalar::Exact(q) = v {
                        if l % 2 == 0 {
                            acc += q;
                        } else {
                            acc -= q;
                        }
                    }
                }
                Scalar::Exact(acc)
            }
            _ => {
                let acc: NeumaierSum = self
                    .values
                    .iter()
                    .enumerate()
                    .map(|(l, v)| if l % 2 == 0 { v.to_f64() } else { -v.to_f64() })
                    .collect();
                Scalar::Float(acc.value())
            }
        }
    }
}

/// `tr(∧^ℓ M)` as the sum of all `ℓ × ℓ` principal minors.
pub fn exterior_trace(m: &SmallMatrix, ell: usize) -> Result<Scalar> {
    let n = m.dim();
    if ell > n {
        return Err(Error::Parameter(format!("exterior degree {ell} exceeds dimension {n}")));
    }
    if ell == 0 {
        return Ok(Scalar::one(m.is_exact()));
    }
    let masks = (0u32..1 << n).filter(|mask| mask.count_ones() as usize == ell);
    Ok(if m.is_exact() {
        let mut acc = BigRational::zero();
        for mask in masks {
            if let Scalar::Exact(q) = m.principal_minor(mask) {
                acc += q;
            }
        }
        Scalar::Exact(acc)
    } else {
        let acc: NeumaierSum = masks.map(|mask| m.principal_minor(mask).to_f64()).collect();
        Scalar::Float(acc.value())
    })
}

pub fn exterior_traces(m: &SmallMatrix) -> ExteriorTraceVector {
    ExteriorTraceVector { values: (0..=m.dim()).map(|l| exterior_trace(m, l).expect("degree in range")).collect() }
}

/// `det(I − M)`, computed directly by elimination.
pub fn det_one_minus(m: &SmallMatrix) -> Scalar {
    m.one_minus().determinant()
}

/// `Π_i (1 + |row_i(M)|)`, an upper bound for `|det(I − M)|` that stays away from zero.
fn det_scale(m: &SmallMatrix) -> f64 {
    let n = m.dim();
    let v = m.to_f64_entries();
    (0..n).map(|i| 1.0 + (0..n).map(|j| v[i * n + j] * v[i * n + j]).sum::<f64>().sqrt()).product()
}

/// ε = (−1)^{d_s} · sign(det(I − M)).
pub fn orientation_sign(m: &SmallMatrix, ds: usize) -> Result<Sign> {
    let det = det_one_minus(m);
    let degenerate = match &det {
        Scalar::Exact(q) => q.is_zero(),
        Scalar::Float(x) => x.abs() < DET_REL_TOL * det_scale(m),
    };
    if degenerate {
        return Err(Error::NonHyperbolic(format!("det(I - M) = {} is numerically zero", det.to_f64())));
    }
    let s = Sign::from_i32(det.signum()).expect("nonzero determinant");
    Ok(Sign::parity(ds) * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> SmallMatrix {
        SmallMatrix::from_integers(2, &[2, 1, 1, 1]).unwrap()
    }

    fn fib() -> SmallMatrix {
        SmallMatrix::from_integers(2, &[1, 1, 1, 0]).unwrap()
    }

    fn int(v: i64) -> Scalar {
        Scalar::Exact(BigRational::from_integer(v.into()))
    }

    #[test]
    fn exterior_trace_small_cases() {
        let id = SmallMatrix::identity(2, true);
        assert_eq!(exterior_trace(&id, 1).unwrap(), int(2));
        assert_eq!(exterior_trace(&cat(), 1).unwrap(), int(3));
        assert_eq!(exterior_trace(&cat(), 2).unwrap(), int(1));
        assert_eq!(exterior_trace(&cat(), 0).unwrap(), int(1));
    }

    #[test]
    fn exterior_degree_out_of_range() {
        assert!(matches!(exterior_trace(&cat(), 3), Err(Error::Parameter(_))));
    }

    #[test]
    fn det_one_minus_closed_forms() {
        let zero = SmallMatrix::from_integers(3, &[0; 9]).unwrap();
        assert_eq!(det_one_minus(&zero), int(1));
        let inv = cat().inverse().unwrap();
        assert_eq!(det_one_minus(&inv), int(-1));
        assert_eq!(det_one_minus(&inv.pow(3)), int(-16));
    }

    #[test]
    fn orientation_of_cat_and_fibonacci() {
        assert_eq!(orientation_sign(&cat().inverse().unwrap(), 1).unwrap(), Sign::Plus);
        let binv = fib().inverse().unwrap();
        assert_eq!(orientation_sign(&binv, 1).unwrap(), Sign::Minus);
        for n in 1..=12 {
            assert_eq!(orientation_sign(&binv.pow(n), 1).unwrap(), Sign::Minus.pow(n));
        }
    }

    #[test]
    fn degenerate_orientation_rejected() {
        let id = SmallMatrix::identity(2, true);
        assert!(matches!(orientation_sign(&id, 1), Err(Error::NonHyperbolic(_))));
        let near = SmallMatrix::from_f64(2, vec![1.0 + 1e-15, 0.0, 0.0, 3.0]).unwrap();
        assert!(matches!(orientation_sign(&near, 1), Err(Error::NonHyperbolic(_))));
    }

    #[test]
    fn mixed_entries_rejected() {
        let err = SmallMatrix::from_scalars(1, vec![Scalar::Float(1.0)]).map(|_| ());
        assert!(err.is_ok());
        let mixed = SmallMatrix::from_scalars(2, vec![int(1), Scalar::Float(0.5), int(0), int(1)]);
        assert!(matches!(mixed, Err(Error::MixedScalars)));
        let a = cat();
        let b = a.to_float();
        assert!(matches!(a.mul(&b), Err(Error::MixedScalars)));
    }

    #[test]
    fn exact_inverse_and_power() {
        let a = cat();
        let prod = a.mul(&a.inverse().unwrap()).unwrap();
        assert_eq!(prod, SmallMatrix::identity(2, true));
        assert_eq!(a.pow(0), SmallMatrix::identity(2, true));
        assert_eq!(a.pow(2), SmallMatrix::from_integers(2, &[5, 3, 3, 2]).unwrap());
    }

    #[test]
    fn hyperbolicity_and_expanding_dimension() {
        assert!(cat().is_hyperbolic());
        assert_eq!(cat().expanding_dimension(), 1);
        let rot = SmallMatrix::from_f64(2, vec![0.0, -1.0, 1.0, 0.0]).unwrap();
        assert!(!rot.is_hyperbolic());
    }
}
