//! Arithmetic in GF(p^k) and the small amount of linear algebra the
//! constructions need: vectors over the field, independence of pairs,
//! affine lines and coordinates in a spanned subspace.
//!
//! Elements are stored by their index `c_0 + c_1 p + ... + c_{k-1} p^{k-1}`,
//! where `c_0 + c_1 x + ...` is the reduced polynomial representative. The
//! index is canonical, so structural equality of [`Scalar`]s and [`Vector`]s
//! is field equality.

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

/// Fields larger than this are refused; every table is `q * q` entries.
pub const MAX_FIELD_SIZE: u64 = 1 << 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("characteristic {0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field of size {p}^{k} exceeds the supported maximum {max}")]
    TooLarge { p: u32, k: u32, max: u64 },
    #[error("modulus must be monic of degree {expected}, got coefficients {got:?}")]
    BadModulus { expected: u32, got: Vec<u32> },
    #[error("modulus coefficient {coeff} is not a residue mod {p}")]
    BadModulusCoeff { coeff: u32, p: u32 },
    #[error("modulus {0:?} is reducible")]
    Reducible(Vec<u32>),
    #[error("value {value} is not an element of a field of size {q}")]
    NotAnElement { value: u32, q: u32 },
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("binary operation {0:?} needs a second operand")]
    MissingOperand(ArithOp),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("an affine line needs two distinct points")]
    DegenerateLine,
}

/// An element of a finite field, identified by its canonical index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Scalar(pub(crate) u32);

impl Scalar {
    pub const ZERO: Scalar = Scalar(0);
    pub const ONE: Scalar = Scalar(1);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Inv,
    Neg,
}

struct Tables {
    p: u32,
    k: u32,
    q: u32,
    /// Low-to-high coefficients, length k + 1, leading 1.
    modulus: Vec<u32>,
    add: Vec<u32>,
    mul: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
}

/// A finite field GF(p^k) with its reduction polynomial. Cloning is cheap.
#[derive(Clone)]
pub struct Field {
    t: Arc<Tables>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.t, &other.t)
            || (self.t.p == other.t.p && self.t.modulus == other.t.modulus)
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("p", &self.t.p)
            .field("k", &self.t.k)
            .field("modulus", &self.t.modulus)
            .finish()
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2u64;
    while i * i <= n as u64 {
        if (n as u64).is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

// Polynomials over GF(p) as low-to-high coefficient vectors without trailing zeros.

fn poly_trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut a = poly_trim(a.to_vec());
    let m = poly_trim(m.to_vec());
    let dm = m.len() - 1;
    let lead_inv = mod_inv(m[dm], p);
    while a.len() > dm {
        let da = a.len() - 1;
        let factor = (a[da] as u64 * lead_inv as u64 % p as u64) as u32;
        for (i, &mi) in m.iter().enumerate() {
            let j = da - dm + i;
            let sub = (factor as u64 * mi as u64 % p as u64) as u32;
            a[j] = (a[j] + p - sub) % p;
        }
        a = poly_trim(a);
    }
    a
}

fn poly_mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    poly_trim(out.into_iter().map(|c| c as u32).collect())
}

fn mod_inv(a: u32, p: u32) -> u32 {
    // p is prime and small; Fermat.
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    result as u32
}

/// Monic polynomial of degree `deg` whose lower coefficients are the base-p
/// digits of `code` (c_0 least significant).
fn monic_from_code(code: u64, deg: u32, p: u32) -> Vec<u32> {
    let mut c = Vec::with_capacity(deg as usize + 1);
    let mut x = code;
    for _ in 0..deg {
        c.push((x % p as u64) as u32);
        x /= p as u64;
    }
    c.push(1);
    c
}

/// Irreducibility over GF(p) by trial division with every monic polynomial
/// of degree 1..=deg/2.
pub fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let poly = poly_trim(poly.to_vec());
    if poly.len() < 2 {
        return false;
    }
    let deg = (poly.len() - 1) as u32;
    for fd in 1..=deg / 2 {
        let count = (p as u64).pow(fd);
        for code in 0..count {
            let f = monic_from_code(code, fd, p);
            if poly_rem(&poly, &f, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Smallest monic irreducible of degree `k`, ordering candidates by
/// (c_{k-1}, ..., c_0) lexicographically.
pub fn default_modulus(p: u32, k: u32) -> Vec<u32> {
    // c_{k-1} is the most significant base-p digit of the code, so increasing
    // codes walk the lexicographic order.
    let count = (p as u64).pow(k);
    (0..count)
        .map(|code| monic_from_code(code, k, p))
        .find(|m| is_irreducible(m, p))
        .expect("an irreducible polynomial exists in every degree")
}

impl Field {
    /// Builds GF(p^k). When `modulus` is `None` the default irreducible is
    /// used; otherwise it must be monic of degree `k` (low-to-high
    /// coefficients) and irreducible.
    pub fn new(p: u32, k: u32, modulus: Option<&[u32]>) -> Result<Field, GfError> {
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        if k == 0 {
            return Err(GfError::ZeroDegree);
        }
        let q = (p as u64).checked_pow(k).filter(|&q| q <= MAX_FIELD_SIZE);
        let q = match q {
            Some(q) => q as u32,
            None => {
                return Err(GfError::TooLarge {
                    p,
                    k,
                    max: MAX_FIELD_SIZE,
                })
            }
        };
        let modulus = match modulus {
            Some(m) => {
                if m.len() != k as usize + 1 || m[k as usize] != 1 {
                    return Err(GfError::BadModulus {
                        expected: k,
                        got: m.to_vec(),
                    });
                }
                if let Some(&coeff) = m.iter().find(|&&c| c >= p) {
                    return Err(GfError::BadModulusCoeff { coeff, p });
                }
                if !is_irreducible(m, p) {
                    return Err(GfError::Reducible(m.to_vec()));
                }
                m.to_vec()
            }
            None => default_modulus(p, k),
        };
        Ok(Field {
            t: Arc::new(Tables::build(p, k, q, modulus)),
        })
    }

    /// The prime field GF(p).
    pub fn prime(p: u32) -> Result<Field, GfError> {
        Field::new(p, 1, None)
    }

    pub fn p(&self) -> u32 {
        self.t.p
    }

    pub fn k(&self) -> u32 {
        self.t.k
    }

    pub fn q(&self) -> u32 {
        self.t.q
    }

    /// Reduction polynomial, low-to-high, including the leading 1.
    pub fn modulus(&self) -> &[u32] {
        &self.t.modulus
    }

    pub fn zero(&self) -> Scalar {
        Scalar::ZERO
    }

    pub fn one(&self) -> Scalar {
        Scalar::ONE
    }

    /// The element with the given canonical index.
    pub fn element(&self, index: u32) -> Result<Scalar, GfError> {
        if index < self.t.q {
            Ok(Scalar(index))
        } else {
            Err(GfError::NotAnElement {
                value: index,
                q: self.t.q,
            })
        }
    }

    pub fn contains(&self, a: Scalar) -> bool {
        a.0 < self.t.q
    }

    /// Element from polynomial coefficients (low-to-high, at most k of them,
    /// each in `0..p`).
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<Scalar, GfError> {
        let p = self.t.p;
        if coeffs.len() > self.t.k as usize {
            return Err(GfError::DimensionMismatch(coeffs.len(), self.t.k as usize));
        }
        let mut idx = 0u32;
        for &c in coeffs.iter().rev() {
            if c >= p {
                return Err(GfError::NotAnElement { value: c, q: p });
            }
            idx = idx * p + c;
        }
        Ok(Scalar(idx))
    }

    /// Polynomial coefficients of `a`, low-to-high, exactly k residues.
    pub fn coeffs(&self, a: Scalar) -> Vec<u32> {
        let p = self.t.p;
        let mut x = a.0;
        (0..self.t.k)
            .map(|_| {
                let c = x % p;
                x /= p;
                c
            })
            .collect()
    }

    pub fn elements(&self) -> impl Iterator<Item = Scalar> + Clone {
        (0..self.t.q).map(Scalar)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = Scalar> + Clone {
        (1..self.t.q).map(Scalar)
    }

    #[inline]
    pub fn add(&self, a: Scalar, b: Scalar) -> Scalar {
        Scalar(self.t.add[(a.0 * self.t.q + b.0) as usize])
    }

    #[inline]
    pub fn mul(&self, a: Scalar, b: Scalar) -> Scalar {
        Scalar(self.t.mul[(a.0 * self.t.q + b.0) as usize])
    }

    #[inline]
    pub fn neg(&self, a: Scalar) -> Scalar {
        Scalar(self.t.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Scalar, b: Scalar) -> Scalar {
        self.add(a, self.neg(b))
    }

    pub fn inv(&self, a: Scalar) -> Result<Scalar, GfError> {
        if a.is_zero() {
            Err(GfError::ZeroInverse)
        } else {
            Ok(Scalar(self.t.inv[a.0 as usize]))
        }
    }

    /// Checked entry point for a single field operation.
    pub fn arith(&self, op: ArithOp, a: Scalar, b: Option<Scalar>) -> Result<Scalar, GfError> {
        self.check(a)?;
        if let Some(b) = b {
            self.check(b)?;
        }
        let second = || b.ok_or(GfError::MissingOperand(op));
        match op {
            ArithOp::Add => Ok(self.add(a, second()?)),
            ArithOp::Sub => Ok(self.sub(a, second()?)),
            ArithOp::Mul => Ok(self.mul(a, second()?)),
            ArithOp::Neg => Ok(self.neg(a)),
            ArithOp::Inv => self.inv(a),
        }
    }

    fn check(&self, a: Scalar) -> Result<(), GfError> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(GfError::NotAnElement {
                value: a.0,
                q: self.t.q,
            })
        }
    }

    // Vector helpers. Callers guarantee equal lengths.

    pub fn add_vectors(&self, a: &Vector, b: &Vector) -> Vector {
        debug_assert_eq!(a.dim(), b.dim());
        Vector(
            a.0.iter()
                .zip(&b.0)
                .map(|(&x, &y)| self.add(x, y))
                .collect(),
        )
    }

    pub fn sub_vectors(&self, a: &Vector, b: &Vector) -> Vector {
        debug_assert_eq!(a.dim(), b.dim());
        Vector(
            a.0.iter()
                .zip(&b.0)
                .map(|(&x, &y)| self.sub(x, y))
                .collect(),
        )
    }

    pub fn scale(&self, lambda: Scalar, v: &Vector) -> Vector {
        Vector(v.0.iter().map(|&x| self.mul(lambda, x)).collect())
    }

    /// `a + lambda * b`.
    pub fn axpy(&self, a: &Vector, lambda: Scalar, b: &Vector) -> Vector {
        debug_assert_eq!(a.dim(), b.dim());
        Vector(
            a.0.iter()
                .zip(&b.0)
                .map(|(&x, &y)| self.add(x, self.mul(lambda, y)))
                .collect(),
        )
    }

    #[inline]
    pub fn dot(&self, a: &[Scalar], b: &[Scalar]) -> Scalar {
        a.iter()
            .zip(b)
            .fold(Scalar::ZERO, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }

    /// Rank of a list of vectors by Gaussian elimination.
    pub fn rank(&self, vectors: &[Vector]) -> usize {
        let mut rows: Vec<Vec<Scalar>> = vectors.iter().map(|v| v.0.to_vec()).collect();
        let cols = rows.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot) = (rank..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
                continue;
            };
            rows.swap(rank, pivot);
            let inv = self.inv(rows[rank][col]).expect("pivot is nonzero");
            let pivot_row: Vec<Scalar> = rows[rank].iter().map(|&x| self.mul(inv, x)).collect();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && !row[col].is_zero() {
                    let f = row[col];
                    for (x, &y) in row.iter_mut().zip(&pivot_row) {
                        *x = self.sub(*x, self.mul(f, y));
                    }
                }
            }
            rows[rank] = pivot_row;
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    /// True iff the only solution of `lambda v + mu w = 0` is `lambda = mu = 0`.
    pub fn linearly_independent(&self, v: &Vector, w: &Vector) -> Result<bool, GfError> {
        if v.dim() != w.dim() {
            return Err(GfError::DimensionMismatch(v.dim(), w.dim()));
        }
        Ok(self.rank(&[v.clone(), w.clone()]) == 2)
    }

    /// Coordinates of `u` in the basis `basis`, or `None` if `u` is outside
    /// their span. The basis vectors must be independent.
    pub fn coordinates(&self, basis: &[Vector], u: &Vector) -> Option<Vec<Scalar>> {
        let m = basis.len();
        let n = u.dim();
        // Augmented n x (m + 1) system: columns are basis vectors, rhs is u.
        let mut a: Vec<Vec<Scalar>> = (0..n)
            .map(|i| {
                let mut row: Vec<Scalar> = basis.iter().map(|b| b.0[i]).collect();
                row.push(u.0[i]);
                row
            })
            .collect();
        let mut pivots = Vec::with_capacity(m);
        let mut r = 0;
        for col in 0..m {
            let pivot = (r..n).find(|&i| !a[i][col].is_zero())?;
            a.swap(r, pivot);
            let inv = self.inv(a[r][col]).expect("pivot is nonzero");
            for x in a[r].iter_mut() {
                *x = self.mul(inv, *x);
            }
            let pivot_row = a[r].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i != r && !row[col].is_zero() {
                    let f = row[col];
                    for (x, &y) in row.iter_mut().zip(&pivot_row) {
                        *x = self.sub(*x, self.mul(f, y));
                    }
                }
            }
            pivots.push(r);
            r += 1;
        }
        if a[r..].iter().any(|row| !row[m].is_zero()) {
            return None;
        }
        Some(pivots.iter().map(|&row| a[row][m]).collect())
    }

    /// The line through two distinct points, in canonical form.
    pub fn affine_line_through(&self, p0: &Vector, p1: &Vector) -> Result<AffineLine, GfError> {
        if p0.dim() != p1.dim() {
            return Err(GfError::DimensionMismatch(p0.dim(), p1.dim()));
        }
        if p0 == p1 {
            return Err(GfError::DegenerateLine);
        }
        let dir = self.sub_vectors(p1, p0);
        let lead = *dir.0.iter().find(|x| !x.is_zero()).expect("points differ");
        let direction = self.scale(self.inv(lead)?, &dir);
        let mut points: Vec<Vector> = self
            .elements()
            .map(|t| self.axpy(p0, t, &direction))
            .collect();
        points.sort();
        Ok(AffineLine {
            base: points[0].clone(),
            direction,
            points,
        })
    }
}

impl Tables {
    fn build(p: u32, k: u32, q: u32, modulus: Vec<u32>) -> Tables {
        let qs = q as usize;
        let digits = |mut x: u32| -> Vec<u32> {
            (0..k)
                .map(|_| {
                    let c = x % p;
                    x /= p;
                    c
                })
                .collect()
        };
        let index = |c: &[u32]| -> u32 { c.iter().rev().fold(0, |acc, &d| acc * p + d) };
        let polys: Vec<Vec<u32>> = (0..q).map(digits).collect();

        let mut add = vec![0u32; qs * qs];
        let mut mul = vec![0u32; qs * qs];
        for a in 0..qs {
            for b in 0..qs {
                let s: Vec<u32> = polys[a]
                    .iter()
                    .zip(&polys[b])
                    .map(|(&x, &y)| (x + y) % p)
                    .collect();
                add[a * qs + b] = index(&s);
                let mut prod = poly_rem(&poly_mul(&polys[a], &polys[b], p), &modulus, p);
                prod.resize(k as usize, 0);
                mul[a * qs + b] = index(&prod);
            }
        }
        let neg = (0..qs)
            .map(|a| index(&polys[a].iter().map(|&x| (p - x) % p).collect::<Vec<_>>()))
            .collect();
        let mut inv = vec![0u32; qs];
        for a in 1..qs {
            inv[a] = (1..q)
                .find(|&b| mul[a * qs + b as usize] == 1)
                .expect("nonzero elements of a field are invertible");
        }
        Tables {
            p,
            k,
            q,
            modulus,
            add,
            mul,
            neg,
            inv,
        }
    }
}

/// Inline capacity of [`Vector`]; longer vectors spill to the heap.
const INLINE_DIM: usize = 6;

/// A vector of F_q^s.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vector(pub(crate) SmallVec<[Scalar; INLINE_DIM]>);

impl Vector {
    pub fn new(entries: Vec<Scalar>) -> Vector {
        Vector(SmallVec::from_vec(entries))
    }

    pub fn zero(dim: usize) -> Vector {
        Vector(SmallVec::from_elem(Scalar::ZERO, dim))
    }

    /// Vector from element indices, checked against `field`.
    pub fn from_indices(field: &Field, entries: &[u32]) -> Result<Vector, GfError> {
        entries
            .iter()
            .map(|&e| field.element(e))
            .collect::<Result<SmallVec<_>, _>>()
            .map(Vector)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// The ambient space F_q^dim; enumerates its vectors in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorSpace {
    field: Field,
    dim: usize,
}

impl VectorSpace {
    pub fn new(field: Field, dim: usize) -> VectorSpace {
        VectorSpace { field, dim }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `q^dim`, or `None` on overflow.
    pub fn size(&self) -> Option<u64> {
        (self.field.q() as u64).checked_pow(self.dim as u32)
    }

    /// Vector number `i`, with the first coordinate as the most significant
    /// base-q digit.
    pub fn vector(&self, mut i: u64) -> Vector {
        let q = self.field.q() as u64;
        let mut v = Vector::zero(self.dim);
        for e in v.0.iter_mut().rev() {
            *e = Scalar((i % q) as u32);
            i /= q;
        }
        v
    }

    /// Inverse of [`VectorSpace::vector`].
    pub fn index_of(&self, v: &Vector) -> u64 {
        let q = self.field.q() as u64;
        v.0.iter().fold(0u64, |acc, x| acc * q + x.0 as u64)
    }

    /// Index of the vector obtained by scaling `v` so its first nonzero
    /// entry is 1; two nonzero vectors are collinear iff their keys agree.
    /// The zero vector maps to 0.
    pub fn projective_key(&self, v: &Vector) -> u64 {
        match v.0.iter().find(|x| !x.is_zero()) {
            None => 0,
            Some(&lead) => {
                let inv = self.field.inv(lead).expect("nonzero");
                self.index_of(&self.field.scale(inv, v))
            }
        }
    }

    pub fn vectors(&self) -> impl Iterator<Item = Vector> + '_ {
        let n = self.size().expect("space size fits in u64");
        (0..n).map(move |i| self.vector(i))
    }

    pub fn nonzero_vectors(&self) -> impl Iterator<Item = Vector> + '_ {
        self.vectors().skip(1)
    }

    pub fn standard_basis(&self) -> Vec<Vector> {
        (0..self.dim)
            .map(|i| {
                let mut v = Vector::zero(self.dim);
                v.0[i] = Scalar::ONE;
                v
            })
            .collect()
    }
}

/// An affine line `{base + t * direction}` in canonical form: `base` is the
/// lexicographically smallest point and the first nonzero coordinate of
/// `direction` is 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffineLine {
    base: Vector,
    direction: Vector,
    points: Vec<Vector>,
}

impl AffineLine {
    pub fn base(&self) -> &Vector {
        &self.base
    }

    pub fn direction(&self) -> &Vector {
        &self.direction
    }

    /// All q points, sorted.
    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn contains(&self, v: &Vector) -> bool {
        self.points.binary_search(v).is_ok()
    }
}
