//! Haar-random subspaces, flags and sphere points.
//!
//! Every sample is a pure function of `(seed, sample index)`: the index
//! selects an independent ChaCha stream, so results are reproducible no
//! matter how samples are scheduled across workers.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ORTHONORMAL_TOL: f64 = 1e-10;
pub const NESTING_TOL: f64 = 1e-9;

/// Strictly increasing dimensions `1 ≤ i_1 < … < i_r ≤ n-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "IndexSeqRepr", into = "IndexSeqRepr")]
pub struct IndexSeq {
    n: usize,
    indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct IndexSeqRepr {
    n: usize,
    indices: Vec<usize>,
}

impl TryFrom<IndexSeqRepr> for IndexSeq {
    type Error = Error;
    fn try_from(r: IndexSeqRepr) -> Result<Self> {
        IndexSeq::new(r.n, r.indices)
    }
}

impl From<IndexSeq> for IndexSeqRepr {
    fn from(s: IndexSeq) -> Self {
        IndexSeqRepr {
            n: s.n,
            indices: s.indices,
        }
    }
}

impl IndexSeq {
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidIndexSeq(format!(
                "ambient dimension must be at least 2, got {n}"
            )));
        }
        if indices.is_empty() {
            return Err(Error::InvalidIndexSeq("indices must not be empty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndexSeq(
                "indices must be strictly increasing".into(),
            ));
        }
        if indices[0] < 1 || *indices.last().unwrap() > n - 1 {
            return Err(Error::InvalidIndexSeq(format!(
                "indices must lie in [1, {}]",
                n - 1
            )));
        }
        Ok(IndexSeq { n, indices })
    }

    /// The complete flag `(1, 2, …, n-1)`.
    pub fn complete(n: usize) -> Result<Self> {
        IndexSeq::new(n, (1..n).collect())
    }

    /// Every index sequence of ambient dimension `n` with at most `max_len` entries.
    pub fn all(n: usize, max_len: usize) -> Vec<IndexSeq> {
        let mut out = Vec::new();
        for mask in 1u32..(1 << (n - 1)) {
            if mask.count_ones() as usize > max_len {
                continue;
            }
            let indices = (1..n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            out.push(IndexSeq { n, indices });
        }
        out.sort_by(|a, b| (a.len(), &a.indices).cmp(&(b.len(), &b.indices)));
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn last(&self) -> usize {
        *self.indices.last().unwrap()
    }

    /// `i_j` with the conventions `i_0 = 0`, `i_{r+1} = n`; `j` runs over `0..=r+1`.
    pub fn padded(&self, j: usize) -> usize {
        if j == 0 {
            0
        } else if j <= self.len() {
            self.indices[j - 1]
        } else {
            self.n
        }
    }

    /// Exponents `i_{j+1} - i_{j-1}` carried by the `j`-th subspace.
    pub fn exponents(&self) -> Vec<usize> {
        (1..=self.len())
            .map(|j| self.padded(j + 1) - self.padded(j - 1))
            .collect()
    }

    /// `Σ_j i_j (i_{j+1} - i_{j-1})`, which always equals `i_r · n`.
    pub fn weighted_exponent_sum(&self) -> usize {
        self.indices
            .iter()
            .zip(self.exponents())
            .map(|(i, e)| i * e)
            .sum()
    }

    /// Outer degree `i_r · n` of the flag averages.
    pub fn degree(&self) -> usize {
        self.last() * self.n
    }
}

impl fmt::Display for IndexSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Orthonormal basis of a `k`-dimensional subspace of `R^n`, stored as the
/// columns of an `n × k` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    basis: DMatrix<f64>,
}

impl Frame {
    /// Validates column-orthonormality to [`ORTHONORMAL_TOL`].
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let k = basis.ncols();
        if k > basis.nrows() {
            return Err(Error::arg(format!(
                "frame has {k} columns in dimension {}",
                basis.nrows()
            )));
        }
        let gram = basis.transpose() * &basis;
        let err = (gram - DMatrix::<f64>::identity(k, k)).amax();
        if err > ORTHONORMAL_TOL {
            return Err(Error::arg(format!(
                "frame is not orthonormal (|UᵀU - I| = {err:e})"
            )));
        }
        Ok(Frame { basis })
    }

    pub(crate) fn new_unchecked(basis: DMatrix<f64>) -> Self {
        Frame { basis }
    }

    /// Span of the given standard basis vectors.
    pub fn coordinate(n: usize, axes: &[usize]) -> Result<Self> {
        let mut basis = DMatrix::zeros(n, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            if a >= n {
                return Err(Error::arg(format!("axis {a} out of range for n = {n}")));
            }
            basis[(a, c)] = 1.0;
        }
        Frame::new(basis)
    }

    /// Orthonormalises the columns of `m` (which must have full column rank).
    pub fn from_spanning(m: DMatrix<f64>) -> Result<Self> {
        let k = m.ncols();
        let qr = m.clone().qr();
        let r = qr.r();
        if (0..k).any(|i| r[(i, i)].abs() < 1e-12) {
            return Err(Error::arg("spanning vectors are linearly dependent"));
        }
        Frame::new(qr.q().columns(0, k).into_owned())
    }

    /// Orthonormal basis of the hyperplane `φ^⊥` for a unit vector `φ`.
    pub fn orthogonal_complement(phi: &DVector<f64>) -> Result<Self> {
        let norm = phi.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("direction is not a unit vector (|φ| = {norm})")));
        }
        Ok(Frame::new_unchecked(complement_basis(phi)))
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Coordinates `Uᵀx` of the orthogonal projection of `x`.
    pub fn coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(x)
    }

    /// Largest residual of projecting this frame's basis onto `outer`.
    pub fn nesting_residual(&self, outer: &Frame) -> f64 {
        let proj = &outer.basis * outer.basis.tr_mul(&self.basis);
        (&self.basis - proj).amax()
    }

    /// Image under an orthogonal map `R` (columns `R·u_i`).
    pub fn rotated(&self, r: &DMatrix<f64>) -> Frame {
        Frame::new_unchecked(r * &self.basis)
    }
}

/// `n × (n-1)` orthonormal basis of `φ^⊥` from the Householder reflection
/// that maps `e_1` to `φ`.
pub(crate) fn complement_basis(phi: &DVector<f64>) -> DMatrix<f64> {
    let n = phi.len();
    // H = I - 2vvᵀ/|v|² with v = φ - s e_1 sends e_1 to sφ, so its remaining
    // columns span φ^⊥. The sign s avoids cancellation in v.
    let s = if phi[0] >= 0.0 { -1.0 } else { 1.0 };
    let mut v = phi.clone();
    v[0] -= s;
    let vv = v.norm_squared();
    let mut out = DMatrix::zeros(n, n - 1);
    for c in 1..n {
        for r in 0..n {
            let e = if r == c { 1.0 } else { 0.0 };
            out[(r, c - 1)] = e - 2.0 * v[r] * v[c] / vv;
        }
    }
    out
}

/// Nested frames `F_1 ⊂ … ⊂ F_r` with `dim F_j = i_j`.
#[derive(Debug, Clone)]
pub struct Flag {
    seq: IndexSeq,
    frames: Vec<Frame>,
}

impl Flag {
    /// Validates dimensions and the nesting invariant.
    pub fn new(seq: IndexSeq, frames: Vec<Frame>) -> Result<Self> {
        if frames.len() != seq.len() {
            return Err(Error::arg("one frame per index is required"));
        }
        for (f, &i) in frames.iter().zip(seq.indices()) {
            if f.k() != i || f.n() != seq.n() {
                return Err(Error::DimensionMismatch {
                    expected: i,
                    got: f.k(),
                });
            }
        }
        let flag = Flag { seq, frames };
        let res = flag.max_nesting_residual();
        if res > NESTING_TOL {
            return Err(Error::arg(format!("frames are not nested (residual {res:e})")));
        }
        Ok(flag)
    }

    pub fn seq(&self) -> &IndexSeq {
        &self.seq
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn max_nesting_residual(&self) -> f64 {
        self.frames
            .windows(2)
            .map(|w| w[0].nesting_residual(&w[1]))
            .fold(0.0, f64::max)
    }

    /// Sub-flag reading off the frames of dimensions in `sub` (which must be a
    /// subsequence of this flag's indices).
    pub fn restrict(&self, sub: &IndexSeq) -> Result<Flag> {
        let frames = sub
            .indices()
            .iter()
            .map(|i| {
                self.seq
                    .indices()
                    .iter()
                    .position(|j| j == i)
                    .map(|p| self.frames[p].clone())
                    .ok_or_else(|| Error::arg(format!("dimension {i} not present in flag")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Flag {
            seq: sub.clone(),
            frames,
        })
    }
}

/// Seed plus per-sample substream derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec { seed }
    }

    /// Independent generator for sample `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Independent seed for a named sub-computation (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Haar-distributed `n × n` orthogonal matrix: QR of a Gaussian matrix with
/// the columns of `Q` flipped so that `R` has a positive diagonal.
pub fn sample_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(n >= 1, "dimension must be positive");
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Haar frame of `G_{n,k}`: the first `k` columns of a Haar orthogonal matrix.
pub fn sample_frame<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Frame {
    let q = sample_orthogonal(n, rng);
    Frame::new_unchecked(q.columns(0, k).into_owned())
}

/// Haar flag: frame `j` is the first `i_j` columns of one Haar orthogonal matrix.
pub fn sample_flag<R: Rng + ?Sized>(seq: &IndexSeq, rng: &mut R) -> Flag {
    let q = sample_orthogonal(seq.n(), rng);
    flag_from_orthogonal(seq, &q)
}

pub(crate) fn flag_from_orthogonal(seq: &IndexSeq, q: &DMatrix<f64>) -> Flag {
    let frames = seq
        .indices()
        .iter()
        .map(|&i| Frame::new_unchecked(q.columns(0, i).into_owned()))
        .collect();
    Flag {
        seq: seq.clone(),
        frames,
    }
}

/// Haar flag built top-down through nested Grassmannians: `F_r` is Haar in
/// `G_{n,i_r}`, then each `F_{j}` is Haar in the Grassmannian of
/// `i_j`-dimensional subspaces of `F_{j+1}`.
pub fn sample_flag_nested<R: Rng + ?Sized>(seq: &IndexSeq, rng: &mut R) -> Flag {
    let r = seq.len();
    let mut frames: Vec<Frame> = Vec::with_capacity(r);
    let top = sample_frame(seq.n(), seq.last(), rng);
    frames.push(top);
    for j in (0..r - 1).rev() {
        let outer = frames.last().unwrap().basis().clone();
        let inner = sample_orthogonal(outer.ncols(), rng);
        let k = seq.indices()[j];
        let basis = outer * inner.columns(0, k);
        frames.push(Frame::new_unchecked(basis));
    }
    frames.reverse();
    Flag {
        seq: seq.clone(),
        frames,
    }
}

/// Uniform point on `S^{n-1}`.
pub fn sample_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    assert!(n >= 1, "dimension must be positive");
    loop {
        let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 1e-300 {
            return g / norm;
        }
    }
}

/// How flags are drawn by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagSampling {
    /// First columns of one Haar orthogonal matrix.
    #[default]
    Direct,
    /// Nested Grassmannian factorisation, top-down.
    Nested,
    /// A complete flag is drawn and the requested dimensions are read off.
    Complete,
}

/// Immutable sampler: `sample(index)` is a pure function of the seed and index.
#[derive(Debug, Clone)]
pub struct FlagSampler {
    seq: IndexSeq,
    complete: IndexSeq,
    rng: RngSpec,
    method: FlagSampling,
}

impl FlagSampler {
    pub fn new(seq: IndexSeq, seed: u64, method: FlagSampling) -> Self {
        let complete = IndexSeq::complete(seq.n()).expect("n >= 2 already validated");
        FlagSampler {
            seq,
            complete,
            rng: RngSpec::new(seed),
            method,
        }
    }

    pub fn seq(&self) -> &IndexSeq {
        &self.seq
    }

    pub fn sample(&self, index: u64) -> Flag {
        let mut rng = self.rng.stream(index);
        match self.method {
            FlagSampling::Direct => sample_flag(&self.seq, &mut rng),
            FlagSampling::Nested => sample_flag_nested(&self.seq, &mut rng),
            FlagSampling::Complete => {
                let full = sample_flag(&self.complete, &mut rng);
                full.restrict(&self.seq).expect("sub-sequence of complete flag")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_seq_validation() {
        assert!(IndexSeq::new(3, vec![1, 2]).is_ok());
        let e = IndexSeq::new(3, vec![2, 2]).unwrap_err().to_string();
        assert!(e.contains("indices must be strictly increasing"), "{e}");
        assert!(IndexSeq::new(3, vec![0, 2]).is_err());
        assert!(IndexSeq::new(3, vec![3]).is_err());
        assert!(IndexSeq::new(1, vec![1]).is_err());
        assert!(IndexSeq::new(4, vec![]).is_err());
    }

    #[test]
    fn index_identity_exhaustive() {
        for n in 2..=8 {
            let all = IndexSeq::all(n, n);
            assert_eq!(all.len(), (1 << (n - 1)) - 1);
            for s in all {
                assert_eq!(s.weighted_exponent_sum(), s.last() * n, "{s}");
            }
        }
    }

    #[test]
    fn exponents_examples() {
        let s = IndexSeq::new(3, vec![1, 2]).unwrap();
        assert_eq!(s.exponents(), vec![2, 2]);
        let s = IndexSeq::new(4, vec![1, 3]).unwrap();
        assert_eq!(s.exponents(), vec![3, 3]);
        let s = IndexSeq::new(5, vec![2]).unwrap();
        assert_eq!(s.exponents(), vec![5]);
    }

    #[test]
    fn one_dimensional_orthogonal() {
        for i in 0..20 {
            let q = sample_orthogonal(1, &mut RngSpec::new(9).stream(i));
            assert_eq!(q[(0, 0)].abs(), 1.0);
        }
    }

    #[test]
    fn orthogonality_contract() {
        for n in [2, 3, 5, 8] {
            let q = sample_orthogonal(n, &mut RngSpec::new(42).stream(7));
            let err = (q.transpose() * &q - DMatrix::<f64>::identity(n, n)).amax();
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn complete_flag_nests() {
        let seq = IndexSeq::complete(6).unwrap();
        for method in [FlagSampling::Direct, FlagSampling::Nested, FlagSampling::Complete] {
            let s = FlagSampler::new(seq.clone(), 5, method);
            for i in 0..50 {
                let f = s.sample(i);
                assert!(f.max_nesting_residual() <= NESTING_TOL);
                for fr in f.frames() {
                    Frame::new(fr.basis().clone()).unwrap();
                }
            }
        }
    }

    #[test]
    fn single_index_flag_is_one_frame() {
        let seq = IndexSeq::new(4, vec![2]).unwrap();
        let f = sample_flag(&seq, &mut RngSpec::new(1).stream(0));
        assert_eq!(f.frames().len(), 1);
        assert_eq!(f.frames()[0].k(), 2);
    }

    #[test]
    fn streams_are_reproducible() {
        let s = FlagSampler::new(IndexSeq::new(4, vec![1, 3]).unwrap(), 77, FlagSampling::Direct);
        let a = s.sample(123);
        let b = s.sample(123);
        for (x, y) in a.frames().iter().zip(b.frames()) {
            assert_eq!(x.basis(), y.basis());
        }
        let c = s.sample(124);
        assert_ne!(a.frames()[0].basis(), c.frames()[0].basis());
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let mut rng = RngSpec::new(3).stream(0);
        for n in 2..7 {
            let phi = sample_sphere(n, &mut rng);
            let f = Frame::orthogonal_complement(&phi).unwrap();
            Frame::new(f.basis().clone()).unwrap();
            assert!(f.basis().tr_mul(&phi).amax() < 1e-12);
        }
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let f = Frame::orthogonal_complement(&e1).unwrap();
        assert!(f.basis().row(0).amax() < 1e-15);
    }

    #[test]
    fn sphere_points_are_unit() {
        let mut rng = RngSpec::new(11).stream(2);
        for n in 1..6 {
            let x = sample_sphere(n, &mut rng);
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
        let x = sample_sphere(1, &mut rng);
        assert_eq!(x[0].abs(), 1.0);
    }

    #[test]
    fn nesting_rejects_bad_flags() {
        let seq = IndexSeq::new(3, vec![1, 2]).unwrap();
        let f1 = Frame::coordinate(3, &[2]).unwrap();
        let f2 = Frame::coordinate(3, &[0, 1]).unwrap();
        assert!(Flag::new(seq.clone(), vec![f1, f2.clone()]).is_err());
        let f1 = Frame::coordinate(3, &[1]).unwrap();
        assert!(Flag::new(seq, vec![f1, f2]).is_ok());
    }
}
