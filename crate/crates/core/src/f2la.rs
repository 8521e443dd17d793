//! Dense bit-packed linear algebra over F2.
//!
//! Elimination always picks the lowest-index pivot and sets free variables to
//! zero, so every solve is reproducible.

use std::fmt;

const W: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(W)
}

#[inline]
fn tail_mask(bits: usize) -> u64 {
    match bits % W {
        0 => !0,
        r => (1u64 << r) - 1,
    }
}

/// A fixed-length vector over F2, packed into 64-bit words.
///
/// Bits past `len` in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector { len, words: vec![0; words_for(len)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = BitVector { len, words: vec![!0; words_for(len)] };
        v.clear_tail();
        v
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, idx: I) -> Self {
        let mut v = Self::zeros(len);
        for i in idx {
            v.toggle(i);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_indices(bits.len(), bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i))
    }

    /// Builds from raw words; bits past `len` are cleared.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(words_for(len), 0);
        let mut v = BitVector { len, words };
        v.clear_tail();
        v
    }

    /// Low `len` bits of `x`, bit `i` of the vector is bit `i` of `x`.
    pub fn from_u64(len: usize, x: u64) -> Self {
        assert!(len <= 64);
        Self::from_words(len, vec![x])
    }

    fn clear_tail(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.len);
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len, "bit {i} out of range {}", self.len);
        (self.words[i / W] >> (i % W)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, b: bool) {
        debug_assert!(i < self.len, "bit {i} out of range {}", self.len);
        let m = 1u64 << (i % W);
        if b {
            self.words[i / W] |= m;
        } else {
            self.words[i / W] &= !m;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / W] ^= 1u64 << (i % W);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn and_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn or_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut v = self.clone();
        v.xor_assign(other);
        v
    }

    /// Inner product over F2.
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "length mismatch");
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum::<u32>() & 1 == 1
    }

    /// Size of the intersection of supports.
    pub fn and_weight(&self, other: &BitVector) -> usize {
        assert_eq!(self.len, other.len, "length mismatch");
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * W + t)
            })
        })
    }

    pub fn support(&self) -> Vec<usize> {
        self.iter_ones().collect()
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * W + w.trailing_zeros() as usize)
    }

    /// Entries at the given positions, in order.
    pub fn select(&self, idx: &[usize]) -> BitVector {
        BitVector::from_indices(idx.len(), idx.iter().enumerate().filter(|(_, &j)| self.get(j)).map(|(i, _)| i))
    }

    /// Scatters `self` into a vector of length `len` at positions `idx`.
    pub fn scatter(&self, len: usize, idx: &[usize]) -> BitVector {
        assert_eq!(self.len, idx.len());
        BitVector::from_indices(len, self.iter_ones().map(|i| idx[i]))
    }

    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut v = BitVector::zeros(self.len + other.len);
        for i in self.iter_ones() {
            v.set(i, true);
        }
        for i in other.iter_ones() {
            v.set(self.len + i, true);
        }
        v
    }

    /// Bits `[start, start+len)` as a new vector.
    pub fn slice(&self, start: usize, len: usize) -> BitVector {
        assert!(start + len <= self.len);
        BitVector::from_indices(len, self.iter_ones().filter(|&i| i >= start && i < start + len).map(|i| i - start))
    }

    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64);
        self.words.first().copied().unwrap_or(0)
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A dense F2 matrix stored row-major, each row padded to whole words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[BitVector]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row {i} has wrong length");
            m.row_mut(i).copy_from_slice(r.words());
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(rows: usize, cols: &[BitVector]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "column {j} has wrong length");
            for i in c.iter_ones() {
                m.set(i, j, true);
            }
        }
        m
    }

    /// Builds from (row, col) positions; repeated entries cancel.
    pub fn from_entries<I: IntoIterator<Item = (usize, usize)>>(rows: usize, cols: usize, entries: I) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, j) in entries {
            m.toggle(i, j);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row_vec(&self, i: usize) -> BitVector {
        BitVector::from_words(self.cols, self.row(i).to_vec())
    }

    pub fn col_vec(&self, j: usize) -> BitVector {
        BitVector::from_indices(self.rows, (0..self.rows).filter(|&i| self.get(i, j)))
    }

    pub fn row_support(&self, i: usize) -> Vec<usize> {
        self.row_vec(i).support()
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        (self.data[i * self.stride + j / W] >> (j % W)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, b: bool) {
        debug_assert!(i < self.rows && j < self.cols);
        let m = 1u64 << (j % W);
        let w = &mut self.data[i * self.stride + j / W];
        if b {
            *w |= m;
        } else {
            *w &= !m;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize, j: usize) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.stride + j / W] ^= 1u64 << (j % W);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// `row[dst] ^= row[src]`.
    pub fn add_row(&mut self, src: usize, dst: usize) {
        if src == dst {
            let r = self.row_mut(dst);
            r.iter_mut().for_each(|w| *w = 0);
            return;
        }
        let s = self.stride;
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&lo[src * s..src * s + s], &mut hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&hi[..s] as &[u64], &mut lo[dst * s..dst * s + s])
        };
        for (d, x) in b.iter_mut().zip(a) {
            *d ^= x;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        for k in 0..s {
            self.data.swap(a * s + k, b * s + k);
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.row_iter_ones(i) {
                t.set(j, i, true);
            }
        }
        t
    }

    pub fn row_iter_ones(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * W + t)
            })
        })
    }

    /// `M·x`.
    pub fn mul_vec(&self, x: &BitVector) -> BitVector {
        assert_eq!(x.len(), self.cols, "dimension mismatch in mul_vec");
        let mut out = BitVector::zeros(self.rows);
        for i in 0..self.rows {
            let p = self.row(i).iter().zip(x.words()).map(|(a, b)| (a & b).count_ones()).sum::<u32>();
            if p & 1 == 1 {
                out.set(i, true);
            }
        }
        out
    }

    /// `Mᵀ·y`, computed as the XOR of the rows selected by `y`.
    pub fn tmul_vec(&self, y: &BitVector) -> BitVector {
        assert_eq!(y.len(), self.rows, "dimension mismatch in tmul_vec");
        let mut out = BitVector::zeros(self.cols);
        for i in y.iter_ones() {
            for (o, r) in out.words_mut().iter_mut().zip(self.row(i)) {
                *o ^= r;
            }
        }
        out
    }

    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in self.row_iter_ones(i).collect::<Vec<_>>() {
                let s = out.stride;
                let src = other.row(k);
                for (o, x) in out.data[i * s..(i + 1) * s].iter_mut().zip(src) {
                    *o ^= x;
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &BitMatrix) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in self.row_iter_ones(i) {
                for k in 0..other.rows {
                    for l in other.row_iter_ones(k) {
                        out.set(i * other.rows + k, j * other.cols + l, true);
                    }
                }
            }
        }
        out
    }

    pub fn hstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.rows, other.rows, "row mismatch in hstack");
        let mut out = BitMatrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in self.row_iter_ones(i) {
                out.set(i, j, true);
            }
            for j in other.row_iter_ones(i) {
                out.set(i, self.cols + j, true);
            }
        }
        out
    }

    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols, "column mismatch in vstack");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        BitMatrix { rows: self.rows + other.rows, cols: self.cols, stride: self.stride, data }
    }

    pub fn select_rows(&self, idx: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(idx.len(), self.cols);
        for (k, &i) in idx.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row(i));
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (k, &j) in idx.iter().enumerate() {
                if self.get(i, j) {
                    out.set(i, k, true);
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        Rref::new(self).rank()
    }

    pub fn kernel_basis(&self) -> Vec<BitVector> {
        Rref::new(self).kernel_basis()
    }

    /// Basis of the column space, taken as the pivot columns of `M`.
    pub fn image_basis(&self) -> Vec<BitVector> {
        let r = Rref::new(self);
        r.pivots.iter().map(|&j| self.col_vec(j)).collect()
    }

    pub fn solve(&self, b: &BitVector) -> Option<BitVector> {
        Solver::new(self).solve(b)
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.cols];
        for i in 0..self.rows {
            for j in self.row_iter_ones(i) {
                w[j] += 1;
            }
        }
        w
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {}", self.row_vec(i))?;
        }
        Ok(())
    }
}

/// Reduced row echelon form of a matrix with lowest-index pivots.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: BitMatrix,
    /// Pivot column of each non-zero row, increasing.
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn new(m: &BitMatrix) -> Self {
        let mut a = m.clone();
        let pivots = eliminate(&mut a, None);
        a.rows = pivots.len();
        a.data.truncate(pivots.len() * a.stride);
        Rref { matrix: a, pivots }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn kernel_basis(&self) -> Vec<BitVector> {
        let n = self.matrix.cols;
        let mut is_pivot = vec![false; n];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..n)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = BitVector::unit(n, f);
                for (r, &p) in self.pivots.iter().enumerate() {
                    if self.matrix.get(r, f) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect()
    }
}

/// Gauss-Jordan elimination in place. Row operations are mirrored onto
/// `track` when given. Returns pivot columns; pivot rows end up first.
fn eliminate(a: &mut BitMatrix, mut track: Option<&mut BitMatrix>) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(p) = (r..a.rows).find(|&i| a.get(i, c)) else { continue };
        a.swap_rows(p, r);
        if let Some(t) = track.as_deref_mut() {
            t.swap_rows(p, r);
        }
        for i in 0..a.rows {
            if i != r && a.get(i, c) {
                a.add_row(r, i);
                if let Some(t) = track.as_deref_mut() {
                    t.add_row(r, i);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Cached factorization for repeated solves of `M·x = b`.
///
/// Stores `T` with `T·M` in reduced echelon form, so a solve costs one
/// matrix-vector product.
#[derive(Clone, Debug)]
pub struct Solver {
    rows: usize,
    cols: usize,
    transform: BitMatrix,
    pivots: Vec<usize>,
}

impl Solver {
    pub fn new(m: &BitMatrix) -> Self {
        let mut a = m.clone();
        let mut t = BitMatrix::identity(m.rows);
        let pivots = eliminate(&mut a, Some(&mut t));
        Solver { rows: m.rows, cols: m.cols, transform: t, pivots }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Whether `b` lies in the column space.
    pub fn is_consistent(&self, b: &BitVector) -> bool {
        assert_eq!(b.len(), self.rows, "dimension mismatch in solve");
        let tb = self.transform.mul_vec(b);
        (self.pivots.len()..self.rows).all(|i| !tb.get(i))
    }

    /// The solution with free variables set to zero, or `None` if `b` is
    /// outside the column space.
    pub fn solve(&self, b: &BitVector) -> Option<BitVector> {
        assert_eq!(b.len(), self.rows, "dimension mismatch in solve");
        let tb = self.transform.mul_vec(b);
        if (self.pivots.len()..self.rows).any(|i| tb.get(i)) {
            return None;
        }
        let mut x = BitVector::zeros(self.cols);
        for (r, &p) in self.pivots.iter().enumerate() {
            if tb.get(r) {
                x.set(p, true);
            }
        }
        Some(x)
    }
}

/// Echelon basis of a subspace for fast membership queries.
#[derive(Clone, Debug)]
pub struct Span {
    len: usize,
    rows: Vec<BitVector>,
    leads: Vec<usize>,
}

impl Span {
    pub fn new(len: usize, vectors: &[BitVector]) -> Self {
        let mut s = Span { len, rows: Vec::new(), leads: Vec::new() };
        for v in vectors {
            s.insert(v.clone());
        }
        s
    }

    /// Adds `v`; returns false when it was already in the span.
    pub fn insert(&mut self, v: BitVector) -> bool {
        assert_eq!(v.len(), self.len, "length mismatch");
        let v = self.reduce(v);
        let Some(lead) = v.first_one() else { return false };
        for r in self.rows.iter_mut() {
            if r.get(lead) {
                r.xor_assign(&v);
            }
        }
        let pos = self.leads.partition_point(|&l| l < lead);
        self.leads.insert(pos, lead);
        self.rows.insert(pos, v);
        true
    }

    /// Reduces `v` modulo the span; zero exactly when `v` is a member.
    pub fn reduce(&self, mut v: BitVector) -> BitVector {
        for (r, &l) in self.rows.iter().zip(&self.leads) {
            if v.get(l) {
                v.xor_assign(r);
            }
        }
        v
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        self.reduce(v.clone()).is_zero()
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn basis(&self) -> &[BitVector] {
        &self.rows
    }
}

pub fn rank(m: &BitMatrix) -> usize {
    m.rank()
}

pub fn solve(m: &BitMatrix, b: &BitVector) -> Option<BitVector> {
    m.solve(b)
}

pub fn kernel_basis(m: &BitMatrix) -> Vec<BitVector> {
    m.kernel_basis()
}

pub fn image_basis(m: &BitMatrix) -> Vec<BitVector> {
    m.image_basis()
}

/// Whether `v` lies in the span of `basis`.
pub fn in_coset(v: &BitVector, basis: &[BitVector]) -> bool {
    Span::new(v.len(), basis).contains(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circulant(n: usize) -> BitMatrix {
        BitMatrix::from_entries(n, n, (0..n).flat_map(|i| [(i, i), (i, (i + 1) % n)]))
    }

    fn brute_rank(m: &BitMatrix) -> usize {
        // size of the row span is 2^rank
        let rows: Vec<u64> = (0..m.rows()).map(|i| m.row(i)[0]).collect();
        let mut span = std::collections::HashSet::new();
        for mask in 0u32..(1 << rows.len()) {
            let mut acc = 0u64;
            for (i, r) in rows.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    acc ^= r;
                }
            }
            span.insert(acc);
        }
        span.len().trailing_zeros() as usize
    }

    #[test]
    fn rank_examples() {
        assert_eq!(BitMatrix::identity(3).rank(), 3);
        assert_eq!(BitMatrix::zeros(3, 5).rank(), 0);
        let c = circulant(4);
        assert_eq!(c.rank(), 3);
        assert_eq!(brute_rank(&c), 3);
    }

    #[test]
    fn solve_examples() {
        let b = BitVector::from_indices(5, [0, 3]);
        assert_eq!(BitMatrix::identity(5).solve(&b), Some(b.clone()));
        assert_eq!(BitMatrix::zeros(3, 3).solve(&BitVector::unit(3, 0)), None);
        let d = circulant(6);
        let rhs = d.mul_vec(&BitVector::unit(6, 0));
        let x = d.solve(&rhs).unwrap();
        assert_eq!(d.mul_vec(&x), rhs);
    }

    #[test]
    fn kernel_examples() {
        assert!(BitMatrix::identity(4).kernel_basis().is_empty());
        let ones = BitMatrix::from_rows(7, &[BitVector::ones(7)]);
        assert_eq!(ones.kernel_basis().len(), 6);
        let k = circulant(5).kernel_basis();
        assert_eq!(k, vec![BitVector::ones(5)]);
        // brute force: only 0 and all-ones are in the kernel
        let c = circulant(5);
        let n_ker = (0u64..32).filter(|&x| c.mul_vec(&BitVector::from_u64(5, x)).is_zero()).count();
        assert_eq!(n_ker, 2);
    }

    #[test]
    fn in_coset_examples() {
        let basis = vec![BitVector::from_indices(6, [0, 1]), BitVector::from_indices(6, [2, 3, 4])];
        assert!(in_coset(&BitVector::zeros(6), &basis));
        assert!(in_coset(&basis[0], &basis));
        assert!(!in_coset(&BitVector::unit(6, 5), &basis));
    }

    #[test]
    fn in_coset_matches_span_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let basis: Vec<BitVector> = (0..3).map(|_| BitVector::from_u64(6, rng.gen::<u64>() & 63)).collect();
            let mut span = std::collections::HashSet::new();
            for mask in 0..8u32 {
                let mut acc = BitVector::zeros(6);
                for (i, b) in basis.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        acc.xor_assign(b);
                    }
                }
                span.insert(acc);
            }
            for x in 0..64u64 {
                let v = BitVector::from_u64(6, x);
                assert_eq!(in_coset(&v, &basis), span.contains(&v));
            }
        }
    }

    #[test]
    fn bitvector_basics() {
        let mut v = BitVector::ones(70);
        assert_eq!(v.weight(), 70);
        assert_eq!(v.words()[1], (1 << 6) - 1);
        v.toggle(65);
        assert_eq!(v.iter_ones().filter(|&i| i > 63).collect::<Vec<_>>(), vec![64, 66, 67, 68, 69]);
        let s = BitVector::from_indices(10, [1, 4, 9]);
        assert_eq!(s.select(&[9, 0, 4]), BitVector::from_indices(3, [0, 2]));
        assert_eq!(s.to_string(), "0100100001");
    }

    fn arb_matrix(max: usize) -> impl Strategy<Value = BitMatrix> {
        (1..max, 1..max).prop_flat_map(|(r, c)| {
            proptest::collection::vec(any::<bool>(), r * c).prop_map(move |bits| {
                BitMatrix::from_entries(r, c, bits.iter().enumerate().filter(|(_, b)| **b).map(|(k, _)| (k / c, k % c)))
            })
        })
    }

    proptest! {
        #[test]
        fn rank_of_transpose(m in arb_matrix(90)) {
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }

        #[test]
        fn rank_nullity(m in arb_matrix(90)) {
            let k = m.kernel_basis();
            prop_assert_eq!(m.rank() + k.len(), m.cols());
            for v in &k {
                prop_assert!(m.mul_vec(v).is_zero());
            }
            prop_assert_eq!(BitMatrix::from_rows(m.cols(), &k).rank(), k.len());
        }

        #[test]
        fn solve_reproduces_rhs(m in arb_matrix(70), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = BitVector::from_indices(m.cols(), (0..m.cols()).filter(|_| rng.gen()));
            let b = m.mul_vec(&x);
            let y = m.solve(&b).expect("b is in the image");
            prop_assert_eq!(m.mul_vec(&y), b);
            let junk = BitVector::from_indices(m.rows(), (0..m.rows()).filter(|_| rng.gen()));
            if let Some(z) = m.solve(&junk) {
                prop_assert_eq!(m.mul_vec(&z), junk);
            }
        }

        #[test]
        fn image_of_product_in_image(a in arb_matrix(30), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(1..20);
            let b = BitMatrix::from_entries(a.cols(), k, (0..a.cols()).flat_map(|i| (0..k).map(move |j| (i, j))).filter(|_| rng.gen()).collect::<Vec<_>>());
            let img = a.image_basis();
            prop_assert_eq!(img.len(), a.rank());
            let span = Span::new(a.rows(), &img);
            for v in a.mul(&b).image_basis() {
                prop_assert!(span.contains(&v));
            }
        }

        #[test]
        fn tmul_matches_transpose(m in arb_matrix(80), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let y = BitVector::from_indices(m.rows(), (0..m.rows()).filter(|_| rng.gen()));
            prop_assert_eq!(m.tmul_vec(&y), m.transpose().mul_vec(&y));
        }
    }
}
