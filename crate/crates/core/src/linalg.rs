//! Exact rank of sparse rational matrices.
//!
//! Small matrices go straight to fraction-free (Bareiss) elimination. Larger
//! ones are reduced modulo a prime, which gives a lower bound on the rank
//! over the rationals; the bound is then confirmed exactly, either by a known
//! set of kernel vectors whose span has the complementary dimension, or by
//! lifting the modular kernel to the rationals (CRT plus rational
//! reconstruction) and checking it against the matrix. If neither confirms
//! within the prime budget, Bareiss decides.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::geometry::Rational;

/// Sparse integer row: `(column, value)` with nonzero values.
pub type IntRow = Vec<(usize, BigInt)>;

/// Matrices with at most this many `rows * columns` use Bareiss directly.
pub const BAREISS_CUTOFF: usize = 10_000;
const MAX_PRIMES: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    Bareiss,
    ModularFullRank,
    ModularKnownKernel,
    ModularLiftedKernel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankOutcome {
    pub rank: usize,
    pub method: RankMethod,
}

/// Scales each row by the lcm of its denominators; drops zero entries.
pub fn integer_rows(rows: &[Vec<(usize, Rational)>]) -> Vec<IntRow> {
    rows.iter()
        .map(|row| {
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, (_, v)| acc.lcm(v.denom()));
            row.iter()
                .filter(|(_, v)| !v.is_zero())
                .map(|(c, v)| (*c, v.numer() * (&lcm / v.denom())))
                .collect()
        })
        .collect()
}

/// Fraction-free Gaussian elimination over a dense integer matrix.
pub fn bareiss_rank(mut a: Vec<Vec<BigInt>>) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pivot) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, pivot);
        let (head, tail) = a.split_at_mut(r + 1);
        let prow = &head[r];
        for row in tail.iter_mut() {
            for j in c + 1..cols {
                let v = (&prow[c] * &row[j] - &row[c] * &prow[j]) / &prev;
                row[j] = v;
            }
            row[c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}

fn to_dense(rows: &[IntRow], cols: usize) -> Vec<Vec<BigInt>> {
    rows.iter()
        .map(|row| {
            let mut d = vec![BigInt::zero(); cols];
            for (c, v) in row {
                d[*c] = v.clone();
            }
            d
        })
        .collect()
}

/// Primes just below `2^31`, largest first.
fn primes() -> impl Iterator<Item = u64> {
    (1u64 << 20..(1u64 << 31)).rev().filter(|&n| {
        n % 2 == 1 && (3..).step_by(2).take_while(|d| d * d <= n).all(|d| n % d != 0)
    })
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn big_mod(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().expect("reduced below p")
}

fn rational_mod(x: &Rational, p: u64) -> Option<u64> {
    let d = big_mod(x.denom(), p);
    if d == 0 {
        return None;
    }
    Some(big_mod(x.numer(), p) * inv_mod(d, p) % p)
}

/// Reduced row echelon form modulo `p`, built one row at a time.
///
/// Every stored row is zero on the other pivot columns, so reducing an
/// incoming row only touches the free columns.
struct ModRref {
    p: u64,
    rows: Vec<Vec<u64>>,
    pivot_cols: Vec<usize>,
    pivot_row: Vec<Option<usize>>,
    seen: Vec<bool>,
    free: Vec<usize>,
    free_pos: Vec<usize>,
}

impl ModRref {
    fn new(p: u64, cols: usize) -> Self {
        ModRref {
            p,
            rows: Vec::new(),
            pivot_cols: Vec::new(),
            pivot_row: vec![None; cols],
            seen: vec![false; cols],
            free: Vec::new(),
            free_pos: vec![usize::MAX; cols],
        }
    }

    fn remove_free(&mut self, c: usize) {
        let pos = self.free_pos[c];
        let last = *self.free.last().expect("nonempty");
        self.free.swap_remove(pos);
        if last != c {
            self.free_pos[last] = pos;
        }
        self.free_pos[c] = usize::MAX;
    }

    fn insert(&mut self, row: &[(usize, u64)], scratch: &mut [u64]) -> bool {
        let p = self.p;
        for &(c, _) in row {
            if !self.seen[c] {
                self.seen[c] = true;
                self.free_pos[c] = self.free.len();
                self.free.push(c);
            }
        }
        for &c in &self.free {
            scratch[c] = 0;
        }
        let mut pivots_hit = Vec::new();
        for &(c, v) in row {
            match self.pivot_row[c] {
                Some(i) => pivots_hit.push((i, v)),
                None => scratch[c] = (scratch[c] + v) % p,
            }
        }
        for (i, f) in pivots_hit {
            if f == 0 {
                continue;
            }
            let neg = p - f;
            let prow = &self.rows[i];
            for &j in &self.free {
                let s = prow[j];
                if s != 0 {
                    scratch[j] = (scratch[j] + neg * s) % p;
                }
            }
        }
        let Some(&c) = self.free.iter().filter(|&&j| scratch[j] != 0).min() else {
            return false;
        };
        let inv = inv_mod(scratch[c], p);
        let cols = self.pivot_row.len();
        let mut new_row = vec![0u64; cols];
        for &j in &self.free {
            if scratch[j] != 0 {
                new_row[j] = scratch[j] * inv % p;
            }
        }
        self.remove_free(c);
        new_row[c] = 1;
        for r in self.rows.iter_mut() {
            let f = r[c];
            if f == 0 {
                continue;
            }
            let neg = p - f;
            for &j in &self.free {
                let s = new_row[j];
                if s != 0 {
                    r[j] = (r[j] + neg * s) % p;
                }
            }
            r[c] = 0;
        }
        self.pivot_row[c] = Some(self.rows.len());
        self.pivot_cols.push(c);
        self.rows.push(new_row);
        true
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Sorted free columns (seen or not) and pivot columns.
    fn structure(&self) -> (Vec<usize>, Vec<usize>) {
        let mut pivots = self.pivot_cols.clone();
        pivots.sort_unstable();
        let free = (0..self.pivot_row.len()).filter(|&c| self.pivot_row[c].is_none()).collect();
        (free, pivots)
    }

    /// Kernel basis: one vector per free column `f`, equal to 1 at `f`,
    /// `-R[i][f]` at each pivot column, 0 elsewhere. Returned as
    /// `entries[k][i]` = value at pivot column of row `i` for free column `k`.
    fn kernel_entries(&self, free: &[usize]) -> Vec<Vec<u64>> {
        free.iter()
            .map(|&f| {
                self.rows
                    .iter()
                    .map(|r| if self.seen[f] { (self.p - r[f]) % self.p } else { 0 })
                    .collect()
            })
            .collect()
    }
}

fn reduce_rows(rows: &[IntRow], p: u64) -> Vec<Vec<(usize, u64)>> {
    rows.iter()
        .map(|r| r.iter().map(|(c, v)| (*c, big_mod(v, p))).filter(|(_, v)| *v != 0).collect())
        .collect()
}

fn rref_mod(rows: &[IntRow], cols: usize, p: u64) -> ModRref {
    let mut e = ModRref::new(p, cols);
    let mut scratch = vec![0u64; cols];
    for r in reduce_rows(rows, p) {
        e.insert(&r, &mut scratch);
        if e.rank() == cols {
            break;
        }
    }
    e
}

fn rank_mod_vectors(vectors: &[Vec<u64>], cols: usize, p: u64) -> usize {
    let mut e = ModRref::new(p, cols);
    let mut scratch = vec![0u64; cols];
    for v in vectors {
        let sparse: Vec<(usize, u64)> = v.iter().enumerate().filter(|(_, x)| **x != 0).map(|(c, x)| (c, *x)).collect();
        e.insert(&sparse, &mut scratch);
    }
    e.rank()
}

/// Smallest `n/d` with `n = a d (mod m)`, `|n|, d <= sqrt(m/2)`.
fn rational_reconstruct(a: &BigInt, m: &BigInt) -> Option<Rational> {
    let bound = (m / BigInt::from(2)).sqrt();
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    let r = Rational::new(r1, t1);
    (r.denom().gcd(m).is_one()).then_some(r)
}

fn row_dot_is_zero(rows: &[IntRow], v: &[Rational]) -> bool {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let w: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    rows.iter().all(|row| {
        let mut acc = BigInt::zero();
        for (c, x) in row {
            if !w[*c].is_zero() {
                acc += x * &w[*c];
            }
        }
        acc.is_zero()
    })
}

/// Lifts the kernel of the first-prime echelon form to the rationals.
/// Returns `true` once every basis vector reconstructs and annihilates `rows`.
fn lift_kernel(rows: &[IntRow], cols: usize, first: &ModRref, mut more: impl Iterator<Item = u64>) -> bool {
    let (free, pivots) = first.structure();
    if free.is_empty() {
        return true;
    }
    // pivot order of rows in `first`
    let row_pivot: Vec<usize> = first.pivot_cols.clone();
    let mut modulus = BigInt::from(first.p);
    let mut acc: Vec<Vec<BigInt>> = first
        .kernel_entries(&free)
        .into_iter()
        .map(|v| v.into_iter().map(BigInt::from).collect())
        .collect();
    let (mut used, mut next_attempt) = (1usize, 2usize);
    for _ in 1..MAX_PRIMES {
        let Some(p) = more.next() else {
            return false;
        };
        let e = rref_mod(rows, cols, p);
        if e.rank() != first.rank() || e.structure().1 != pivots {
            if e.rank() > first.rank() {
                // the first prime was unlucky; let the caller fall back
                return false;
            }
            continue;
        }
        // map this prime's rows onto the first prime's row order
        let local = e.kernel_entries(&free);
        let order: Vec<usize> = row_pivot.iter().map(|c| e.pivot_row[*c].expect("same pivots")).collect();
        let bp = BigInt::from(p);
        let inv = BigInt::from(inv_mod(big_mod(&modulus, p), p));
        for (k, vec) in acc.iter_mut().enumerate() {
            for (i, x) in vec.iter_mut().enumerate() {
                let r = BigInt::from(local[k][order[i]]);
                // x' = x + modulus * ((r - x) / modulus mod p)
                let t = ((&r - &*x) * &inv).mod_floor(&bp);
                *x += &modulus * t;
            }
        }
        modulus *= bp;
        used += 1;
        if used < next_attempt {
            continue;
        }
        next_attempt = used + used / 2;
        let mut all = true;
        for (k, vec) in acc.iter().enumerate() {
            let mut v = vec![Rational::zero(); cols];
            v[free[k]] = Rational::one();
            for (i, x) in vec.iter().enumerate() {
                match rational_reconstruct(x, &modulus) {
                    Some(r) => v[row_pivot[i]] = r,
                    None => {
                        all = false;
                        break;
                    }
                }
            }
            if !all || !row_dot_is_zero(rows, &v) {
                all = false;
                break;
            }
        }
        if all {
            return true;
        }
    }
    false
}

/// Exact rank of the sparse rational matrix `rows` with `cols` columns.
///
/// `known_kernel` may list vectors (length `cols`) believed to lie in the
/// kernel. Each is checked exactly; those that pass can confirm the modular
/// rank without a kernel lift.
pub fn exact_rank(rows: &[Vec<(usize, Rational)>], cols: usize, known_kernel: &[Vec<Rational>]) -> RankOutcome {
    let int_rows: Vec<IntRow> = integer_rows(rows).into_iter().filter(|r| !r.is_empty()).collect();
    // compress to the columns that actually occur
    let mut used = vec![usize::MAX; cols];
    let mut active = Vec::new();
    for row in &int_rows {
        for (c, _) in row {
            if used[*c] == usize::MAX {
                used[*c] = active.len();
                active.push(*c);
            }
        }
    }
    let n = active.len();
    let compact: Vec<IntRow> = int_rows
        .iter()
        .map(|r| r.iter().map(|(c, v)| (used[*c], v.clone())).collect())
        .collect();
    if compact.is_empty() {
        return RankOutcome {
            rank: 0,
            method: RankMethod::Bareiss,
        };
    }
    if compact.len() * n <= BAREISS_CUTOFF {
        return RankOutcome {
            rank: bareiss_rank(to_dense(&compact, n)),
            method: RankMethod::Bareiss,
        };
    }
    let mut ps = primes();
    let p = ps.next().expect("primes exist");
    let e = rref_mod(&compact, n, p);
    let r = e.rank();
    if r == n || r == compact.len() {
        return RankOutcome {
            rank: r,
            method: RankMethod::ModularFullRank,
        };
    }
    let restricted: Vec<Vec<Rational>> = known_kernel
        .iter()
        .map(|v| active.iter().map(|&c| v[c].clone()).collect::<Vec<_>>())
        .filter(|v| row_dot_is_zero(&compact, v))
        .collect();
    let reduced: Option<Vec<Vec<u64>>> = restricted
        .iter()
        .map(|v| v.iter().map(|x| rational_mod(x, p)).collect())
        .collect();
    if let Some(reduced) = reduced {
        // rank_p(M) <= rank(M) <= n - rank(K) <= n - rank_p(K)
        if r + rank_mod_vectors(&reduced, n, p) == n {
            return RankOutcome {
                rank: r,
                method: RankMethod::ModularKnownKernel,
            };
        }
    }
    if lift_kernel(&compact, n, &e, ps) {
        return RankOutcome {
            rank: r,
            method: RankMethod::ModularLiftedKernel,
        };
    }
    RankOutcome {
        rank: bareiss_rank(to_dense(&compact, n)),
        method: RankMethod::Bareiss,
    }
}

/// Solves the square system `a x = b`; `None` if `a` is singular.
pub fn solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero())?;
        a.swap(c, p);
        b.swap(c, p);
        for i in 0..n {
            if i == c || a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] / &a[c][c];
            for j in c..n {
                let delta = &f * &a[c][j];
                a[i][j] -= delta;
            }
            let delta = &f * &b[c];
            b[i] -= delta;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Rank of a dense rational matrix by Bareiss.
pub fn dense_rank(rows: &[Vec<Rational>]) -> usize {
    let sparse: Vec<Vec<(usize, Rational)>> = rows
        .iter()
        .map(|r| r.iter().cloned().enumerate().filter(|(_, v)| !v.is_zero()).collect())
        .collect();
    let cols = rows.first().map_or(0, Vec::len);
    let ints = integer_rows(&sparse);
    bareiss_rank(to_dense(&ints, cols))
}
