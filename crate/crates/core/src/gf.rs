//! GF(2^8) arithmetic and the coefficient-row codec used in verification mode.
//!
//! Field polynomial `x^8 + x^4 + x^3 + x^2 + 1` (0x11D), generator 2.
//! Multiplication goes through log/antilog tables.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Sub};

use thiserror::Error;

pub const FIELD_POLY: u16 = 0x11D;

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

const fn build_tables() -> Tables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= FIELD_POLY;
        }
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    Tables { exp, log }
}

static TABLES: Tables = build_tables();

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let s = TABLES.log[a as usize] as usize + TABLES.log[b as usize] as usize;
    TABLES.exp[s]
}

/// Multiplicative inverse; `None` for zero.
#[inline]
pub fn inv(a: u8) -> Option<u8> {
    (a != 0).then(|| TABLES.exp[255 - TABLES.log[a as usize] as usize])
}

/// Field element with operator overloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    pub fn inv(self) -> Option<Gf256> {
        inv(self.0).map(Gf256)
    }

    pub fn pow(self, mut e: u32) -> Gf256 {
        let mut base = self;
        let mut acc = Gf256::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

// Characteristic 2: addition and subtraction are both XOR.
impl Add for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf256 {
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl Sub for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    fn mul(self, rhs: Gf256) -> Gf256 {
        Gf256(mul(self.0, rhs.0))
    }
}

impl MulAssign for Gf256 {
    fn mul_assign(&mut self, rhs: Gf256) {
        self.0 = mul(self.0, rhs.0);
    }
}

impl Div for Gf256 {
    type Output = Gf256;
    /// Panics on division by zero.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Gf256) -> Gf256 {
        self * rhs.inv().expect("division by zero in GF(256)")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("nothing to recode")]
    EmptyHold,
}

/// `dst += c · src`, componentwise.
fn axpy_bytes(dst: &mut [u8], c: u8, src: &[u8]) {
    if c == 0 {
        return;
    }
    if c == 1 {
        dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s);
        return;
    }
    let lc = TABLES.log[c as usize] as usize;
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d ^= TABLES.exp[lc + TABLES.log[s as usize] as usize];
        }
    }
}

/// Componentwise `Σ μᵢ · pᵢ`.
pub fn encode(packets: &[&[u8]], coeffs: &[u8]) -> Result<Vec<u8>, CodecError> {
    if packets.len() != coeffs.len() {
        return Err(CodecError::LengthMismatch {
            expected: packets.len(),
            got: coeffs.len(),
        });
    }
    let len = packets.first().map_or(0, |p| p.len());
    let mut out = vec![0u8; len];
    for (p, &c) in packets.iter().zip(coeffs) {
        if p.len() != len {
            return Err(CodecError::LengthMismatch {
                expected: len,
                got: p.len(),
            });
        }
        axpy_bytes(&mut out, c, p);
    }
    Ok(out)
}

/// A coded packet in field terms: coefficients over information packets
/// `lo..lo + coeffs.len()` and the matching combined payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub lo: u64,
    pub coeffs: Vec<u8>,
    pub payload: Vec<u8>,
}

impl Row {
    pub fn new(lo: u64, coeffs: Vec<u8>, payload: Vec<u8>) -> Self {
        let mut r = Row {
            lo,
            coeffs,
            payload,
        };
        r.trim();
        r
    }

    pub fn zero(payload_len: usize) -> Self {
        Row {
            lo: 0,
            coeffs: Vec::new(),
            payload: vec![0; payload_len],
        }
    }

    /// The information packet `index` itself.
    pub fn unit(index: u64, payload: Vec<u8>) -> Self {
        Row {
            lo: index,
            coeffs: vec![1],
            payload,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, col: u64) -> u8 {
        if col < self.lo {
            return 0;
        }
        self.coeffs
            .get((col - self.lo) as usize)
            .copied()
            .unwrap_or(0)
    }

    /// Lowest column with a nonzero coefficient.
    pub fn lead(&self) -> Option<u64> {
        (!self.coeffs.is_empty()).then_some(self.lo)
    }

    /// Highest column with a nonzero coefficient.
    pub fn top(&self) -> Option<u64> {
        (!self.coeffs.is_empty()).then(|| self.lo + self.coeffs.len() as u64 - 1)
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
        let lead = self
            .coeffs
            .iter()
            .position(|&c| c != 0)
            .unwrap_or(self.coeffs.len());
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as u64;
        }
        if self.coeffs.is_empty() {
            self.lo = 0;
        }
    }

    fn scale(&mut self, c: u8) {
        for x in self.coeffs.iter_mut().chain(self.payload.iter_mut()) {
            *x = mul(*x, c);
        }
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: u8, other: &Row) {
        if c == 0 || other.is_zero() {
            if self.payload.len() < other.payload.len() {
                self.payload.resize(other.payload.len(), 0);
            }
            return;
        }
        if self.is_zero() {
            self.lo = other.lo;
        }
        let lo = self.lo.min(other.lo);
        let hi = self
            .top()
            .unwrap_or(other.lo)
            .max(other.top().unwrap_or(lo));
        if lo < self.lo {
            let mut grown = vec![0u8; (self.lo - lo) as usize];
            grown.extend_from_slice(&self.coeffs);
            self.coeffs = grown;
            self.lo = lo;
        }
        self.coeffs.resize((hi - lo + 1) as usize, 0);
        let off = (other.lo - lo) as usize;
        axpy_bytes(
            &mut self.coeffs[off..off + other.coeffs.len()],
            c,
            &other.coeffs,
        );
        if self.payload.len() < other.payload.len() {
            self.payload.resize(other.payload.len(), 0);
        }
        axpy_bytes(&mut self.payload, c, &other.payload);
        self.trim();
    }
}

/// Linear combination `Σ μᵢ · rowᵢ` of held rows.
pub fn recode(rows: &[&Row], mu: &[u8]) -> Result<Row, CodecError> {
    let first = rows.first().ok_or(CodecError::EmptyHold)?;
    if rows.len() != mu.len() {
        return Err(CodecError::LengthMismatch {
            expected: rows.len(),
            got: mu.len(),
        });
    }
    let mut out = Row::zero(first.payload.len());
    for (r, &c) in rows.iter().zip(mu) {
        out.axpy(c, r);
    }
    Ok(out)
}

/// Incremental Gauss-Jordan elimination over information columns.
///
/// Rows are kept in reduced row-echelon form keyed by pivot column, so a
/// column is solved exactly when its pivot row has no other nonzero entry.
#[derive(Debug, Clone, Default)]
pub struct Decoder {
    rows: BTreeMap<u64, Row>,
    prefix: u64,
}

impl Decoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, mut row: Row) -> Row {
        let mut col = row.lo;
        while let Some(top) = row.top() {
            if col > top {
                break;
            }
            let c = row.coeff(col);
            if c != 0 {
                if let Some(pivot) = self.rows.get(&col) {
                    row.axpy(c, pivot);
                }
            }
            col = (col + 1).max(row.lo);
            if row.is_zero() {
                break;
            }
        }
        row
    }

    /// Whether `row` lies in the span of the stored rows.
    pub fn contains(&self, row: &Row) -> bool {
        self.reduce(row.clone()).is_zero()
    }

    /// Add a row; returns whether it increased the rank.
    pub fn insert(&mut self, row: Row) -> bool {
        let mut r = self.reduce(row);
        let Some(lead) = r.lead() else {
            return false;
        };
        let scale = inv(r.coeff(lead)).expect("lead coefficient is nonzero");
        r.scale(scale);
        for other in self.rows.values_mut() {
            let c = other.coeff(lead);
            if c != 0 {
                other.axpy(c, &r);
            }
        }
        self.rows.insert(lead, r);
        while self.is_solved(self.prefix) {
            self.prefix += 1;
        }
        true
    }

    pub fn is_solved(&self, col: u64) -> bool {
        self.rows
            .get(&col)
            .is_some_and(|r| r.lo == col && r.coeffs.len() == 1)
    }

    /// Number of information packets solved in order from index 0.
    pub fn solved_prefix(&self) -> u64 {
        self.prefix
    }

    pub fn payload(&self, col: u64) -> Option<&[u8]> {
        self.is_solved(col)
            .then(|| self.rows[&col].payload.as_slice())
    }

    /// Every solved column with its recovered payload.
    pub fn solved(&self) -> Vec<(u64, Vec<u8>)> {
        self.rows
            .iter()
            .filter(|(c, r)| r.lo == **c && r.coeffs.len() == 1)
            .map(|(c, r)| (*c, r.payload.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elimination {
    pub rank: usize,
    pub solved: Vec<(u64, Vec<u8>)>,
}

/// Reduce a batch of rows and report what it determines.
pub fn eliminate(rows: &[Row]) -> Elimination {
    let mut dec = Decoder::new();
    for r in rows {
        dec.insert(r.clone());
    }
    Elimination {
        rank: dec.rank(),
        solved: dec.solved(),
    }
}
