//! Generic-position reference for the verification cross-check.
//!
//! Every stored symbol on the path is rebuilt over the prime field
//! `2^61 − 1` with fresh random coefficients on its recorded span. A
//! coincidental dependency there has probability about `rows / 2^61`, so
//! the resulting decoded prefix is what DoF counting should predict. When
//! GF(2^8) elimination disagrees with counting but this reference agrees,
//! the disagreement came from the real coefficients, not from the counting.

use std::collections::BTreeMap;

use rand::Rng;

use crate::receiver::Receiver;

const P: u64 = (1 << 61) - 1;

fn mul(a: u64, b: u64) -> u64 {
    let x = a as u128 * b as u128;
    let r = ((x >> 61) as u64) + ((x as u64) & P);
    if r >= P {
        r - P
    } else {
        r
    }
}

fn add(a: u64, b: u64) -> u64 {
    let r = a + b;
    if r >= P {
        r - P
    } else {
        r
    }
}

fn sub(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + P - b
    }
}

fn inv(a: u64) -> u64 {
    let (mut base, mut e, mut acc) = (a, P - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(acc, base);
        }
        base = mul(base, base);
        e >>= 1;
    }
    acc
}

/// Sparse row over consecutive columns starting at `lo`.
#[derive(Debug, Clone, Default)]
struct PRow {
    lo: u64,
    c: Vec<u64>,
}

impl PRow {
    fn get(&self, col: u64) -> u64 {
        col.checked_sub(self.lo)
            .and_then(|i| self.c.get(i as usize).copied())
            .unwrap_or(0)
    }

    fn trim(&mut self) {
        while self.c.last() == Some(&0) {
            self.c.pop();
        }
        let lead = self.c.iter().position(|&x| x != 0).unwrap_or(self.c.len());
        self.c.drain(..lead);
        self.lo += lead as u64;
    }

    /// `self += k · other`.
    fn axpy(&mut self, k: u64, other: &PRow) {
        if k == 0 || other.c.is_empty() {
            return;
        }
        if self.c.is_empty() {
            self.lo = other.lo;
        }
        let lo = self.lo.min(other.lo);
        let hi = (self.lo + self.c.len() as u64).max(other.lo + other.c.len() as u64);
        let mut out = vec![0u64; (hi - lo) as usize];
        for (i, &x) in self.c.iter().enumerate() {
            out[(self.lo - lo) as usize + i] = x;
        }
        for (i, &x) in other.c.iter().enumerate() {
            let j = (other.lo - lo) as usize + i;
            out[j] = add(out[j], mul(k, x));
        }
        self.lo = lo;
        self.c = out;
        self.trim();
    }

    fn scale(&mut self, k: u64) {
        self.c.iter_mut().for_each(|x| *x = mul(*x, k));
    }
}

/// Gauss-Jordan elimination keyed by pivot column.
#[derive(Debug, Default)]
struct PDecoder {
    rows: BTreeMap<u64, PRow>,
}

impl PDecoder {
    fn insert(&mut self, mut r: PRow) {
        let mut col = r.lo;
        while !r.c.is_empty() && col < r.lo + r.c.len() as u64 {
            let x = r.get(col);
            if x != 0 {
                if let Some(p) = self.rows.get(&col) {
                    r.axpy(sub(0, x), p);
                }
            }
            col = (col + 1).max(r.lo);
        }
        if r.c.is_empty() {
            return;
        }
        let lead = r.lo;
        r.scale(inv(r.c[0]));
        for other in self.rows.values_mut() {
            let x = other.get(lead);
            if x != 0 {
                other.axpy(sub(0, x), &r);
            }
        }
        self.rows.insert(lead, r);
    }

    fn solved_prefix(&self) -> u64 {
        let mut k = 0;
        while self
            .rows
            .get(&k)
            .is_some_and(|r| r.lo == k && r.c.len() == 1)
        {
            k += 1;
        }
        k
    }
}

/// Information prefix decodable at the destination under generic
/// coefficients. `path` lists the coded receivers from the first relay to
/// the destination.
pub fn generic_prefix<R: Rng>(path: &[&Receiver], rng: &mut R) -> u64 {
    let mut below: Option<Vec<PRow>> = None;
    for rx in path {
        let rows: Vec<PRow> = rx
            .stored_spans()
            .iter()
            .map(|span| {
                let mu = (0..span.len()).map(|_| rng.random_range(1..P));
                match &below {
                    None => PRow {
                        lo: span.lo,
                        c: mu.collect(),
                    },
                    Some(prev) => {
                        let mut out = PRow::default();
                        for (m, k) in (span.lo..=span.hi).zip(mu) {
                            out.axpy(k, &prev[m as usize]);
                        }
                        out
                    }
                }
            })
            .collect();
        below = Some(rows);
    }
    let mut dec = PDecoder::default();
    for r in below.unwrap_or_default() {
        dec.insert(r);
    }
    dec.solved_prefix()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_ops() {
        assert_eq!(mul(P - 1, P - 1), 1);
        assert_eq!(mul(inv(12345), 12345), 1);
        assert_eq!(add(P - 1, 2), 1);
        assert_eq!(sub(1, 2), P - 1);
    }

    #[test]
    fn staircase_decodes_at_tight_points() {
        let mut d = PDecoder::default();
        d.insert(PRow {
            lo: 0,
            c: vec![3, 5],
        });
        assert_eq!(d.solved_prefix(), 0);
        d.insert(PRow {
            lo: 0,
            c: vec![7, 1, 9],
        });
        assert_eq!(d.solved_prefix(), 0);
        d.insert(PRow {
            lo: 1,
            c: vec![2, 4],
        });
        assert_eq!(d.solved_prefix(), 3);
    }
}
