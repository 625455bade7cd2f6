//! GF(2^m) arithmetic for the delivery phase.
//!
//! Symbols are m-bit strings; addition is XOR and multiplication is
//! polynomial multiplication modulo a fixed irreducible polynomial of
//! degree m. For m <= 16 multiplication goes through log/antilog tables
//! built on a multiplicative generator; above that it falls back to
//! carryless shift-and-reduce. Every constructed field verifies its
//! reduction polynomial is irreducible, so a bad custom polynomial is
//! rejected up front instead of corrupting arithmetic.
//!
//! The linear solvers (rank, square solve, nullspace) use Gaussian
//! elimination with the first usable pivot in row/column order, so their
//! output is deterministic — decoders depend on that.

use std::sync::Arc;

use rand::Rng;

use crate::SimRng;

/// A single m-bit field symbol. Invariant: the value fits in the owning
/// field's width (enforced by the `Field` operations in debug builds).
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Debug)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GfError {
    #[error("field width {0} is outside 1..=32")]
    InvalidWidth(u32),
    #[error("polynomial {poly:#x} does not have degree {m}")]
    WrongDegree { poly: u64, m: u32 },
    #[error("polynomial {poly:#x} is reducible over GF(2)")]
    Reducible { poly: u64 },
    #[error("no built-in reduction polynomial for width {0}")]
    NoDefaultPolynomial(u32),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("no precoder satisfied the nonzero-projection constraints after {draws} draws")]
    PrecoderNotFound { draws: u64 },
}

/// Default reduction polynomials, degree 1..=32, all primitive. The degree-m
/// bit is included (e.g. degree 4 is x^4 + x + 1 = 0x13). Each entry is
/// re-verified irreducible at construction time.
const DEFAULT_POLY: [u64; 32] = [
    0x3,         // 1:  x + 1
    0x7,         // 2:  x^2 + x + 1
    0xB,         // 3:  x^3 + x + 1
    0x13,        // 4:  x^4 + x + 1
    0x25,        // 5:  x^5 + x^2 + 1
    0x43,        // 6:  x^6 + x + 1
    0x83,        // 7:  x^7 + x + 1
    0x11D,       // 8:  x^8 + x^4 + x^3 + x^2 + 1
    0x211,       // 9:  x^9 + x^4 + 1
    0x409,       // 10: x^10 + x^3 + 1
    0x805,       // 11: x^11 + x^2 + 1
    0x1053,      // 12: x^12 + x^6 + x^4 + x + 1
    0x201B,      // 13: x^13 + x^4 + x^3 + x + 1
    0x4443,      // 14: x^14 + x^10 + x^6 + x + 1
    0x8003,      // 15: x^15 + x + 1
    0x1100B,     // 16: x^16 + x^12 + x^3 + x + 1
    0x20009,     // 17: x^17 + x^3 + 1
    0x40081,     // 18: x^18 + x^7 + 1
    0x80027,     // 19: x^19 + x^5 + x^2 + x + 1
    0x100009,    // 20: x^20 + x^3 + 1
    0x200005,    // 21: x^21 + x^2 + 1
    0x400003,    // 22: x^22 + x + 1
    0x800021,    // 23: x^23 + x^5 + 1
    0x100001B,   // 24: x^24 + x^4 + x^3 + x + 1
    0x2000009,   // 25: x^25 + x^3 + 1
    0x4000047,   // 26: x^26 + x^6 + x^2 + x + 1
    0x8000027,   // 27: x^27 + x^5 + x^2 + x + 1
    0x10000009,  // 28: x^28 + x^3 + 1
    0x20000005,  // 29: x^29 + x^2 + 1
    0x40000053,  // 30: x^30 + x^6 + x^4 + x + 1
    0x80000009,  // 31: x^31 + x^3 + 1
    0x1000000AF, // 32: x^32 + x^7 + x^5 + x^3 + x^2 + x + 1
];

/// Threshold (inclusive) below which multiplication uses log/antilog tables.
const TABLE_WIDTH_MAX: u32 = 16;

struct LogTables {
    /// log[a] for a in 1..q, position 0 unused.
    log: Vec<u32>,
    /// exp[i] = g^i for i in 0..2(q-1), doubled so mul can skip the modulo.
    exp: Vec<u32>,
}

/// A concrete GF(2^m) with its reduction polynomial and, for m <= 16,
/// precomputed discrete-log tables.
#[derive(Clone)]
pub struct Field {
    m: u32,
    poly: u64,
    mask: u32,
    tables: Option<Arc<LogTables>>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Field(2^{}, poly {:#x})", self.m, self.poly)
    }
}

// ---------------------------------------------------------------------------
// raw polynomial arithmetic over GF(2), used for verification and the
// wide-field multiplication path
// ---------------------------------------------------------------------------

fn poly_degree(p: u64) -> i32 {
    63 - p.leading_zeros() as i32
}

/// (a * b) mod f for residues a, b of degree < m, f of degree m.
fn poly_mul_mod(mut a: u64, mut b: u64, f: u64, m: u32) -> u64 {
    let high_bit = 1u64 << m;
    let mut acc = 0u64;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & high_bit != 0 {
            a ^= f;
        }
    }
    acc
}

/// a mod b for polynomials over GF(2), b != 0.
fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = poly_degree(b);
    while poly_degree(a) >= db {
        a ^= b << (poly_degree(a) - db);
    }
    a
}

fn poly_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Irreducibility over GF(2) via the Rabin test: f (degree m) is
/// irreducible iff x^(2^m) == x (mod f) and for every prime p | m,
/// gcd(x^(2^(m/p)) - x, f) == 1.
fn is_irreducible(f: u64, m: u32) -> bool {
    if m == 0 || poly_degree(f) != m as i32 {
        return false;
    }
    let x_residue = poly_rem(0x2, f); // x mod f; differs from x only at m = 1
    // x^(2^k) mod f by repeated squaring of the residue.
    let x_pow_2k = |k: u32| -> u64 {
        let mut t = x_residue;
        for _ in 0..k {
            t = poly_mul_mod(t, t, f, m);
        }
        t
    };
    if x_pow_2k(m) != x_residue {
        return false;
    }
    prime_factors(m)
        .into_iter()
        .all(|p| poly_gcd(x_pow_2k(m / p) ^ x_residue, f) == 1)
}

impl Field {
    /// Field with an explicit reduction polynomial (degree-m bit included).
    /// Rejects widths outside 1..=32 and reducible polynomials.
    pub fn new(m: u32, poly: u64) -> Result<Field, GfError> {
        if m == 0 || m > 32 {
            return Err(GfError::InvalidWidth(m));
        }
        if poly_degree(poly) != m as i32 {
            return Err(GfError::WrongDegree { poly, m });
        }
        if !is_irreducible(poly, m) {
            return Err(GfError::Reducible { poly });
        }
        let mask = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
        let tables = if m <= TABLE_WIDTH_MAX {
            Some(Arc::new(build_tables(m, poly)))
        } else {
            None
        };
        Ok(Field { m, poly, mask, tables })
    }

    /// Field with the built-in polynomial for the given width.
    pub fn with_default_poly(m: u32) -> Result<Field, GfError> {
        if m == 0 || m > 32 {
            return Err(GfError::InvalidWidth(m));
        }
        Field::new(m, DEFAULT_POLY[(m - 1) as usize])
    }

    pub fn width(&self) -> u32 {
        self.m
    }

    /// Field order q = 2^m.
    pub fn order(&self) -> u64 {
        1u64 << self.m
    }

    pub fn modulus(&self) -> u64 {
        self.poly
    }

    /// True when `v` is a valid symbol of this field.
    pub fn contains(&self, v: Fe) -> bool {
        v.0 & !self.mask == 0
    }

    #[inline]
    fn check(&self, v: Fe) {
        debug_assert!(self.contains(v), "symbol {:#x} exceeds width {}", v.0, self.m);
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        self.check(a);
        self.check(b);
        Fe(a.0 ^ b.0)
    }

    /// Subtraction coincides with addition in characteristic 2.
    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, b)
    }

    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        self.check(a);
        self.check(b);
        if a.is_zero() || b.is_zero() {
            return Fe::ZERO;
        }
        match &self.tables {
            Some(t) => {
                let idx = t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize;
                Fe(t.exp[idx])
            }
            None => Fe(poly_mul_mod(a.0 as u64, b.0 as u64, self.poly, self.m) as u32),
        }
    }

    pub fn pow(&self, a: Fe, mut e: u64) -> Fe {
        let mut base = a;
        let mut acc = Fe::ONE;
        while e > 0 {
            if e & 1 != 0 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: Fe) -> Result<Fe, GfError> {
        self.check(a);
        if a.is_zero() {
            return Err(GfError::ZeroInverse);
        }
        match &self.tables {
            Some(t) => {
                let q1 = self.order() - 1;
                Ok(Fe(t.exp[(q1 - t.log[a.0 as usize] as u64) as usize]))
            }
            // a^(q-2) = a^-1 for a != 0.
            None => Ok(self.pow(a, self.order() - 2)),
        }
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Uniform symbol, including zero.
    pub fn random(&self, rng: &mut SimRng) -> Fe {
        Fe(rng.random_range(0..self.order()) as u32)
    }

    /// Uniform nonzero symbol.
    pub fn random_nonzero(&self, rng: &mut SimRng) -> Fe {
        Fe(rng.random_range(1..self.order()) as u32)
    }

    // -- vector helpers ----------------------------------------------------

    pub fn dot(&self, a: &[Fe], b: &[Fe]) -> Result<Fe, GfError> {
        if a.len() != b.len() {
            return Err(GfError::LengthMismatch { left: a.len(), right: b.len() });
        }
        let mut acc = Fe::ZERO;
        for (&x, &y) in a.iter().zip(b) {
            acc = self.add(acc, self.mul(x, y));
        }
        Ok(acc)
    }

    /// acc += c * src, element-wise.
    pub fn axpy(&self, acc: &mut [Fe], c: Fe, src: &[Fe]) {
        assert_eq!(acc.len(), src.len(), "axpy length mismatch");
        if c.is_zero() {
            return;
        }
        for (a, &s) in acc.iter_mut().zip(src) {
            *a = self.add(*a, self.mul(c, s));
        }
    }

    pub fn scale(&self, c: Fe, v: &[Fe]) -> Vec<Fe> {
        v.iter().map(|&x| self.mul(c, x)).collect()
    }

    // -- linear algebra ----------------------------------------------------

    /// Rank via Gaussian elimination, scanning columns left to right and
    /// taking the first nonzero entry below the current row as pivot.
    pub fn rank(&self, mat: &Matrix) -> usize {
        let mut work = mat.clone();
        let mut row = 0;
        for col in 0..work.cols {
            let Some(pivot) = (row..work.rows).find(|&r| !work.get(r, col).is_zero()) else {
                continue;
            };
            work.swap_rows(row, pivot);
            let inv = self.inv(work.get(row, col)).expect("pivot is nonzero");
            for r in 0..work.rows {
                if r != row && !work.get(r, col).is_zero() {
                    let factor = self.mul(work.get(r, col), inv);
                    for c in col..work.cols {
                        let v = self.add(work.get(r, c), self.mul(factor, work.get(row, c)));
                        work.set(r, c, v);
                    }
                }
            }
            row += 1;
            if row == work.rows {
                break;
            }
        }
        row
    }

    /// Solve A x = y for square A. Returns `SingularMatrix` when A has no
    /// unique solution.
    pub fn solve_square(&self, a: &Matrix, y: &[Fe]) -> Result<Vec<Fe>, GfError> {
        if a.rows != a.cols {
            return Err(GfError::NotSquare { rows: a.rows, cols: a.cols });
        }
        if y.len() != a.rows {
            return Err(GfError::LengthMismatch { left: y.len(), right: a.rows });
        }
        let n = a.rows;
        let mut work = a.clone();
        let mut rhs = y.to_vec();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !work.get(r, col).is_zero()) else {
                return Err(GfError::SingularMatrix);
            };
            work.swap_rows(col, pivot);
            rhs.swap(col, pivot);
            let inv = self.inv(work.get(col, col)).expect("pivot is nonzero");
            for r in 0..n {
                if r != col && !work.get(r, col).is_zero() {
                    let factor = self.mul(work.get(r, col), inv);
                    for c in col..n {
                        let v = self.add(work.get(r, c), self.mul(factor, work.get(col, c)));
                        work.set(r, c, v);
                    }
                    rhs[r] = self.add(rhs[r], self.mul(factor, rhs[col]));
                }
            }
        }
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = self.div(*r, work.get(i, i))?;
        }
        Ok(rhs)
    }

    /// Basis of { v : row . v = 0 for every row }, deterministic: rows are
    /// reduced to RREF with lexicographic pivots and each free coordinate
    /// yields one basis vector in coordinate order.
    pub fn nullspace_basis(&self, rows: &[Vec<Fe>], dim: usize) -> Vec<Vec<Fe>> {
        let mut work = Matrix::zero(rows.len(), dim);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), dim, "nullspace row length mismatch");
            for (j, &v) in r.iter().enumerate() {
                work.set(i, j, v);
            }
        }
        // Forward elimination to RREF, remembering pivot columns.
        let mut pivots: Vec<usize> = Vec::new();
        let mut row = 0;
        for col in 0..dim {
            let Some(p) = (row..work.rows).find(|&r| !work.get(r, col).is_zero()) else {
                continue;
            };
            work.swap_rows(row, p);
            let inv = self.inv(work.get(row, col)).expect("pivot is nonzero");
            for c in col..dim {
                work.set(row, c, self.mul(work.get(row, c), inv));
            }
            for r in 0..work.rows {
                if r != row && !work.get(r, col).is_zero() {
                    let factor = work.get(r, col);
                    for c in col..dim {
                        let v = self.add(work.get(r, c), self.mul(factor, work.get(row, c)));
                        work.set(r, c, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
            if row == work.rows {
                break;
            }
        }
        let mut basis = Vec::new();
        for free in 0..dim {
            if pivots.contains(&free) {
                continue;
            }
            let mut v = vec![Fe::ZERO; dim];
            v[free] = Fe::ONE;
            for (r, &pc) in pivots.iter().enumerate() {
                // Pivot rows are normalized, so coordinate pc must cancel
                // the free column's entry.
                v[pc] = work.get(r, free);
            }
            basis.push(v);
        }
        basis
    }

    /// Draw a vector u of length `dim` with u . p = 0 for every `perp` row
    /// and u . a != 0 for every `avoid` row. Candidates are random
    /// combinations over the nullspace basis of `perp`; up to `max_retries`
    /// draws. Returns the vector and the number of extra draws used.
    pub fn constrained_precoder(
        &self,
        perp: &[&[Fe]],
        avoid: &[&[Fe]],
        dim: usize,
        rng: &mut SimRng,
        max_retries: u64,
    ) -> Result<(Vec<Fe>, u64), GfError> {
        let perp_rows: Vec<Vec<Fe>> = perp.iter().map(|r| r.to_vec()).collect();
        let basis = self.nullspace_basis(&perp_rows, dim);
        if basis.is_empty() {
            // perp spans the whole space; only the zero vector remains.
            return Err(GfError::PrecoderNotFound { draws: 0 });
        }
        let mut draws = 0u64;
        while draws <= max_retries {
            draws += 1;
            let mut u = vec![Fe::ZERO; dim];
            for b in &basis {
                let c = self.random(rng);
                self.axpy(&mut u, c, b);
            }
            if u.iter().all(|v| v.is_zero()) {
                continue;
            }
            let ok = avoid
                .iter()
                .all(|a| !self.dot(&u, a).expect("avoid row length").is_zero());
            if ok {
                debug_assert!(perp
                    .iter()
                    .all(|p| self.dot(&u, p).expect("perp row length").is_zero()));
                return Ok((u, draws - 1));
            }
        }
        Err(GfError::PrecoderNotFound { draws })
    }
}

fn build_tables(m: u32, poly: u64) -> LogTables {
    let q = 1usize << m;
    if q == 2 {
        // GF(2): the multiplicative group is trivial.
        return LogTables { log: vec![0, 0], exp: vec![1, 1] };
    }
    // Find a multiplicative generator. For a primitive polynomial, x itself
    // (0x2) works; any irreducible polynomial is accepted by falling back
    // to a search (generators are dense, so this terminates fast).
    'candidates: for g in 2..q as u64 {
        let mut log = vec![0u32; q];
        let mut exp = vec![0u32; 2 * (q - 1)];
        let mut acc = 1u64;
        for (i, e) in exp.iter_mut().enumerate().take(q - 1) {
            if acc == 1 && i > 0 {
                continue 'candidates; // order of g divides i < q-1
            }
            *e = acc as u32;
            log[acc as usize] = i as u32;
            acc = poly_mul_mod(acc, g, poly, m);
        }
        if acc != 1 {
            continue; // not a generator (shouldn't happen when acc stayed != 1)
        }
        // Duplicate the cycle so mul can skip the mod-(q-1) reduction.
        exp.copy_within(0..q - 1, q - 1);
        return LogTables { log, exp };
    }
    unreachable!("every finite field has a multiplicative generator");
}

/// Row-major matrix of field symbols.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Fe>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![Fe::ZERO; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<Fe>>) -> Matrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Fe {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Fe) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Fe] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Fe] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<Fe> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            let (x, y) = (self.get(a, c), self.get(b, c));
            self.set(a, c, y);
            self.set(b, c, x);
        }
    }

    /// Uniform random matrix.
    pub fn random(field: &Field, rows: usize, cols: usize, rng: &mut SimRng) -> Matrix {
        let mut m = Matrix::zero(rows, cols);
        for v in &mut m.data {
            *v = field.random(rng);
        }
        m
    }

    /// self * other.
    pub fn matmul(&self, field: &Field, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = field.add(out.get(r, c), field.mul(a, other.get(k, c)));
                    out.set(r, c, v);
                }
            }
        }
        out
    }
}
