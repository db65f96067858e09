//! Canonical indexing of `l`-subsets of `[n]` in colexicographic order,
//! binomial arithmetic, and symmetric-difference neighbor enumeration.
//!
//! Every matrix in this crate is addressed through [`SubsetIndexer`]: row `r`
//! of an order-`l` matrix is the subset `unrank(r)`, and the colex rank of a
//! subset `{e_0 < e_1 < ...}` is `sum_i C(e_i, i+1)`.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Largest ground-set size supported by the precomputed binomial triangle.
pub const MAX_GROUND_SET: usize = 128;

fn table() -> &'static Vec<Vec<Option<u64>>> {
    static TABLE: OnceLock<Vec<Vec<Option<u64>>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<Option<u64>>> = Vec::with_capacity(MAX_GROUND_SET + 1);
        for n in 0..=MAX_GROUND_SET {
            let mut row = vec![Some(1u64); n + 1];
            for k in 1..n {
                row[k] = match (rows[n - 1][k - 1], rows[n - 1][k]) {
                    (Some(a), Some(b)) => a.checked_add(b),
                    _ => None,
                };
            }
            rows.push(row);
        }
        rows
    })
}

/// `C(n, k)` from the precomputed triangle. Returns `Some(0)` when `k > n`,
/// and `None` when `n` exceeds [`MAX_GROUND_SET`] or the value overflows
/// 64 bits. Callers treat `None` as "too large", never as zero.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    if n > MAX_GROUND_SET {
        return None;
    }
    table()[n][k]
}

/// A subset of `[0, n)` stored as strictly increasing elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    elems: Vec<usize>,
}

impl Subset {
    pub fn new(elems: Vec<usize>) -> Result<Self> {
        if !elems.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Subset(format!(
                "elements must be strictly increasing, got {elems:?}"
            )));
        }
        Ok(Subset { elems })
    }

    pub fn from_slice(elems: &[usize]) -> Result<Self> {
        Self::new(elems.to_vec())
    }

    pub fn elements(&self) -> &[usize] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.elems.binary_search(&e).is_ok()
    }
}

/// Colex rank of a strictly increasing slice: `sum_i C(e_i, i+1)`.
/// The slice is assumed valid (checked by [`SubsetIndexer::rank`]).
fn colex_rank(elems: &[usize]) -> u64 {
    let mut r = 0u64;
    for (i, &e) in elems.iter().enumerate() {
        // Each term is bounded by the total rank, which the indexer
        // guarantees fits in u64, so the lookup cannot be None here.
        r += binomial(e, i + 1).expect("colex term fits by construction");
    }
    r
}

/// Indexes the `C(n, l)` subsets of `[0, n)` of size `l` in colex order.
#[derive(Debug, Clone)]
pub struct SubsetIndexer {
    n: usize,
    ell: usize,
    count: u64,
}

impl SubsetIndexer {
    pub fn new(n: usize, ell: usize) -> Result<Self> {
        if n > MAX_GROUND_SET {
            return Err(Error::Capacity(format!(
                "ground set {n} exceeds supported maximum {MAX_GROUND_SET}"
            )));
        }
        if ell > n {
            return Err(Error::parameter(format!("subset size {ell} exceeds n = {n}")));
        }
        let count = binomial(n, ell).ok_or_else(|| {
            Error::Capacity(format!("C({n}, {ell}) does not fit in 64 bits"))
        })?;
        Ok(SubsetIndexer { n, ell, count })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Number of subsets, `C(n, l)`.
    pub fn count(&self) -> u64 {
        self.count
    }

    fn check_members(&self, elems: &[usize]) -> Result<()> {
        if elems.len() != self.ell {
            return Err(Error::Subset(format!(
                "expected {} elements, got {}",
                self.ell,
                elems.len()
            )));
        }
        if let Some(&last) = elems.last() {
            if last >= self.n {
                return Err(Error::Subset(format!(
                    "element {last} out of range for n = {}",
                    self.n
                )));
            }
        }
        Ok(())
    }

    /// Colex rank in `[0, C(n, l))`.
    pub fn rank(&self, s: &Subset) -> Result<u64> {
        self.check_members(s.elements())?;
        Ok(colex_rank(s.elements()))
    }

    /// Rank of a raw strictly-increasing slice; validates like [`rank`](Self::rank).
    pub fn rank_slice(&self, elems: &[usize]) -> Result<u64> {
        if !elems.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Subset(format!(
                "elements must be strictly increasing, got {elems:?}"
            )));
        }
        self.check_members(elems)?;
        Ok(colex_rank(elems))
    }

    /// Inverse of [`rank`](Self::rank).
    pub fn unrank(&self, r: u64) -> Result<Subset> {
        let mut elems = vec![0usize; self.ell];
        self.unrank_into(r, &mut elems)?;
        Ok(Subset { elems })
    }

    /// Unrank into a caller-provided buffer of length `l`.
    pub fn unrank_into(&self, r: u64, out: &mut [usize]) -> Result<()> {
        if r >= self.count {
            return Err(Error::Index(format!(
                "rank {r} out of range for C({}, {}) = {}",
                self.n, self.ell, self.count
            )));
        }
        debug_assert_eq!(out.len(), self.ell);
        let mut rem = r;
        let mut bound = self.n;
        for i in (1..=self.ell).rev() {
            // Largest e with C(e, i) <= rem; None entries are "too large".
            let mut e = bound - 1;
            loop {
                match binomial(e, i) {
                    Some(v) if v <= rem => {
                        out[i - 1] = e;
                        rem -= v;
                        bound = e;
                        break;
                    }
                    _ => e -= 1,
                }
            }
        }
        Ok(())
    }

    /// Visit all subsets in colex order as `(rank, elements)` without
    /// allocating per subset.
    pub fn for_each_subset(&self, mut f: impl FnMut(u64, &[usize])) {
        if self.ell == 0 {
            f(0, &[]);
            return;
        }
        let mut cur: Vec<usize> = (0..self.ell).collect();
        let mut rank = 0u64;
        loop {
            f(rank, &cur);
            rank += 1;
            if rank == self.count {
                return;
            }
            // Colex successor: bump the first element that can move right,
            // resetting everything below it.
            let mut i = 0;
            loop {
                let limit = if i + 1 < self.ell { cur[i + 1] } else { self.n };
                if cur[i] + 1 < limit {
                    cur[i] += 1;
                    for (j, slot) in cur.iter_mut().enumerate().take(i) {
                        *slot = j;
                    }
                    break;
                }
                i += 1;
            }
        }
    }

    /// Number of subsets `T` reachable from an `l`-subset by dropping `drop`
    /// elements and adding `add` elements from the complement:
    /// `C(l, drop) * C(n - l, add)`.
    pub fn exchange_count(&self, drop: usize, add: usize) -> Option<u64> {
        let a = binomial(self.ell, drop)?;
        let b = binomial(self.n - self.ell, add)?;
        a.checked_mul(b)
    }

    /// Visit every `T = (S \ D) ∪ A` with `|D| = drop`, `|A| = add`,
    /// `D ⊆ S`, `A ⊆ [n] \ S`, together with `E = D ∪ A`. Both slices are
    /// sorted. Enumeration order is deterministic. No allocation per visit.
    pub fn for_each_exchange(
        &self,
        s: &[usize],
        drop: usize,
        add: usize,
        mut f: impl FnMut(&[usize], &[usize]),
    ) {
        debug_assert_eq!(s.len(), self.ell);
        if drop > self.ell || add > self.n - self.ell {
            return;
        }
        let mut complement = Vec::with_capacity(self.n - self.ell);
        let mut it = s.iter().peekable();
        for v in 0..self.n {
            if it.peek() == Some(&&v) {
                it.next();
            } else {
                complement.push(v);
            }
        }

        let t_len = self.ell - drop + add;
        let mut t_buf = vec![0usize; t_len];
        let mut e_buf = vec![0usize; drop + add];

        let mut drop_idx: Vec<usize> = (0..drop).collect();
        loop {
            let mut add_idx: Vec<usize> = (0..add).collect();
            loop {
                // T = (S minus dropped) merged with added, both sorted.
                let mut k = 0;
                {
                    let mut di = 0;
                    let mut ai = 0;
                    let mut si = 0;
                    while si < self.ell || ai < add {
                        let s_next = if si < self.ell {
                            if di < drop && drop_idx[di] == si {
                                di += 1;
                                si += 1;
                                continue;
                            }
                            Some(s[si])
                        } else {
                            None
                        };
                        let a_next = if ai < add {
                            Some(complement[add_idx[ai]])
                        } else {
                            None
                        };
                        match (s_next, a_next) {
                            (Some(sv), Some(av)) => {
                                if sv < av {
                                    t_buf[k] = sv;
                                    si += 1;
                                } else {
                                    t_buf[k] = av;
                                    ai += 1;
                                }
                            }
                            (Some(sv), None) => {
                                t_buf[k] = sv;
                                si += 1;
                            }
                            (None, Some(av)) => {
                                t_buf[k] = av;
                                ai += 1;
                            }
                            (None, None) => break,
                        }
                        k += 1;
                    }
                }
                debug_assert_eq!(k, t_len);
                // E = dropped ∪ added, sorted merge.
                {
                    let mut di = 0;
                    let mut ai = 0;
                    let mut k = 0;
                    while di < drop || ai < add {
                        let dv = if di < drop { Some(s[drop_idx[di]]) } else { None };
                        let av = if ai < add {
                            Some(complement[add_idx[ai]])
                        } else {
                            None
                        };
                        match (dv, av) {
                            (Some(d), Some(a)) if d < a => {
                                e_buf[k] = d;
                                di += 1;
                            }
                            (Some(_), Some(a)) => {
                                e_buf[k] = a;
                                ai += 1;
                            }
                            (Some(d), None) => {
                                e_buf[k] = d;
                                di += 1;
                            }
                            (None, Some(a)) => {
                                e_buf[k] = a;
                                ai += 1;
                            }
                            (None, None) => break,
                        }
                        k += 1;
                    }
                }
                f(&t_buf, &e_buf);

                if !advance_combination(&mut add_idx, self.n - self.ell) {
                    break;
                }
            }
            if !advance_combination(&mut drop_idx, self.ell) {
                break;
            }
        }
    }

    /// All `(T, E)` with `|S Δ T| = p` and `E = S Δ T`, for even `p`.
    /// Count equals [`d_ell`]. Allocates one pair per item; the zero-copy
    /// path used by matvec is [`for_each_exchange`](Self::for_each_exchange).
    pub fn neighbors(&self, s: &Subset, p: usize) -> Result<Vec<(Subset, Subset)>> {
        self.check_members(s.elements())?;
        if !p.is_multiple_of(2) {
            return Err(Error::parameter(format!("p must be even, got {p}")));
        }
        let half = p / 2;
        if half > self.ell || half > self.n - self.ell {
            return Err(Error::parameter(format!(
                "p/2 = {half} out of range for (n, l) = ({}, {})",
                self.n, self.ell
            )));
        }
        let mut out = Vec::new();
        self.for_each_exchange(s.elements(), half, half, |t, e| {
            out.push((Subset { elems: t.to_vec() }, Subset { elems: e.to_vec() }));
        });
        Ok(out)
    }
}

/// Advance sorted index combination `idx` within `[0, limit)`; false when done.
fn advance_combination(idx: &mut [usize], limit: usize) -> bool {
    let k = idx.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        let max_here = limit - (k - i);
        if idx[i] < max_here {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Row regularity of the order-`l` symmetric-difference structure:
/// `d_l = C(n - l, p/2) * C(l, p/2)` for even `p`.
pub fn d_ell(n: usize, ell: usize, p: usize) -> Result<u64> {
    if !p.is_multiple_of(2) {
        return Err(Error::parameter(format!("p must be even, got {p}")));
    }
    if ell > n {
        return Err(Error::parameter(format!("l = {ell} exceeds n = {n}")));
    }
    let half = p / 2;
    if half > ell.min(n - ell) {
        return Err(Error::parameter(format!(
            "p/2 = {half} exceeds min(l, n - l) = {}",
            ell.min(n - ell)
        )));
    }
    let a = binomial(n - ell, half)
        .ok_or_else(|| Error::Capacity(format!("C({}, {half}) overflows", n - ell)))?;
    let b = binomial(ell, half)
        .ok_or_else(|| Error::Capacity(format!("C({ell}, {half}) overflows")))?;
    a.checked_mul(b)
        .ok_or_else(|| Error::Capacity("d_l overflows 64 bits".into()))
}
