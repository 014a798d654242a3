//! Exact propagation of a static (possibly non-Hermitian) generator that
//! splits into decoupled blocks.

use matrixmultiply::{zgemm, CGemmOption};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::SparseOperator;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Upper bound on the entries stored by one propagator ladder.
pub const LADDER_ENTRY_GUARD: usize = 80_000_000;

/// Connected components of the sparsity graph of `op`, each sorted, ordered
/// by smallest index.
pub fn block_partition(op: &SparseOperator) -> Vec<Vec<usize>> {
    let n = op.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (r, c, _) in op.iter() {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[root]].push(i);
    }
    blocks
}

/// Square dense matrix, row-major.
#[derive(Clone, Debug)]
struct Dense {
    n: usize,
    data: Vec<C64>,
}

impl Dense {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    fn matmul(&self, other: &Dense) -> Dense {
        let n = self.n;
        let mut out = Dense::zeros(n);
        // SAFETY: Complex64 is repr(C) with layout [re, im]; all buffers hold n² elements.
        unsafe {
            zgemm(
                CGemmOption::Standard,
                CGemmOption::Standard,
                n,
                n,
                n,
                [1.0, 0.0],
                self.data.as_ptr() as *const [f64; 2],
                n as isize,
                1,
                other.data.as_ptr() as *const [f64; 2],
                n as isize,
                1,
                [0.0, 0.0],
                out.data.as_mut_ptr() as *mut [f64; 2],
                n as isize,
                1,
            );
        }
        out
    }

    fn inf_norm(&self) -> f64 {
        self.data
            .chunks(self.n.max(1))
            .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `Σ_k c_k M^k` with the given powers `I, M, M², M³`.
    fn combo(powers: &[Dense; 4], c: &[f64]) -> Dense {
        let n = powers[0].n;
        let mut out = Dense::zeros(n);
        for (p, &ck) in powers.iter().zip(c) {
            if ck != 0.0 {
                for (o, v) in out.data.iter_mut().zip(&p.data) {
                    *o += v * ck;
                }
            }
        }
        out
    }

    /// `e^{M}` by Taylor series of degree 15 after scaling to `‖M‖∞ ≤ 1/4`.
    fn exp(&self) -> Dense {
        let n = self.n;
        let norm = self.inf_norm();
        let squarings = if norm > 0.25 {
            (norm / 0.25).log2().ceil() as u32
        } else {
            0
        };
        let scale = 0.5f64.powi(squarings as i32);
        let b = Dense {
            n,
            data: self.data.iter().map(|v| v * scale).collect(),
        };
        let mut coef = [0.0f64; 16];
        coef[0] = 1.0;
        for k in 1..16 {
            coef[k] = coef[k - 1] / k as f64;
        }
        let b2 = b.matmul(&b);
        let b3 = b2.matmul(&b);
        let b4 = b2.matmul(&b2);
        let powers = [Dense::identity(n), b, b2, b3];
        // Paterson–Stockmeyer in powers of B⁴.
        let mut acc = Dense::combo(&powers, &coef[12..16]);
        for chunk in (0..3).rev() {
            acc = acc.matmul(&b4);
            let part = Dense::combo(&powers, &coef[4 * chunk..4 * chunk + 4]);
            for (a, p) in acc.data.iter_mut().zip(&part.data) {
                *a += p;
            }
        }
        for _ in 0..squarings {
            acc = acc.matmul(&acc);
        }
        acc
    }
}

/// One dense block in split real/imaginary row-major storage.
#[derive(Clone, Debug)]
struct SplitBlock {
    idx: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl SplitBlock {
    fn new(idx: Vec<usize>, m: &Dense) -> Self {
        Self {
            idx,
            re: m.data.iter().map(|v| v.re).collect(),
            im: m.data.iter().map(|v| v.im).collect(),
        }
    }

    fn to_dense(&self) -> Dense {
        Dense {
            n: self.idx.len(),
            data: self
                .re
                .iter()
                .zip(&self.im)
                .map(|(&r, &i)| C64::new(r, i))
                .collect(),
        }
    }
}

/// Block-diagonal dense operator.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    dim: usize,
    blocks: Vec<SplitBlock>,
}

#[inline(always)]
fn block_matvec(b: &SplitBlock, xr: &[f64], xi: &[f64], y: &mut [C64]) {
    let n = b.idx.len();
    for (r, &i) in b.idx.iter().enumerate() {
        let ar = &b.re[r * n..(r + 1) * n];
        let ai = &b.im[r * n..(r + 1) * n];
        let mut sr = [0.0f64; 4];
        let mut si = [0.0f64; 4];
        let mut k = 0;
        while k + 4 <= n {
            for l in 0..4 {
                sr[l] += ar[k + l] * xr[k + l] - ai[k + l] * xi[k + l];
                si[l] += ar[k + l] * xi[k + l] + ai[k + l] * xr[k + l];
            }
            k += 4;
        }
        let (mut tr, mut ti) = (sr[0] + sr[1] + sr[2] + sr[3], si[0] + si[1] + si[2] + si[3]);
        while k < n {
            tr += ar[k] * xr[k] - ai[k] * xi[k];
            ti += ar[k] * xi[k] + ai[k] * xr[k];
            k += 1;
        }
        y[i] = C64::new(tr, ti);
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn block_matvec_avx2(b: &SplitBlock, xr: &[f64], xi: &[f64], y: &mut [C64]) {
    block_matvec(b, xr, xi, y)
}

impl BlockOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored matrix entries.
    pub fn stored_entries(&self) -> usize {
        self.blocks.iter().map(|b| b.re.len()).sum()
    }

    /// `y = B x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        #[cfg(target_arch = "x86_64")]
        let fast = std::arch::is_x86_feature_detected!("avx2")
            && std::arch::is_x86_feature_detected!("fma");
        let (mut xr, mut xi) = (Vec::new(), Vec::new());
        for b in &self.blocks {
            xr.clear();
            xi.clear();
            xr.extend(b.idx.iter().map(|&i| x[i].re));
            xi.extend(b.idx.iter().map(|&i| x[i].im));
            #[cfg(target_arch = "x86_64")]
            if fast {
                // SAFETY: the CPU supports the enabled features.
                unsafe { block_matvec_avx2(b, &xr, &xi, y) };
                continue;
            }
            block_matvec(b, &xr, &xi, y);
        }
    }

    fn square(&self) -> Self {
        Self {
            dim: self.dim,
            blocks: self
                .blocks
                .iter()
                .map(|b| {
                    let m = b.to_dense();
                    SplitBlock::new(b.idx.clone(), &m.matmul(&m))
                })
                .collect(),
        }
    }
}

/// `e^{−i G τ}` for a static generator `G` (Hermitian or not), exploiting its
/// block structure.
pub fn block_exponential(generator: &SparseOperator, tau: f64) -> Result<BlockOperator> {
    let partition = block_partition(generator);
    exponential_on(generator, &partition, tau)
}

fn exponential_on(
    generator: &SparseOperator,
    partition: &[Vec<usize>],
    tau: f64,
) -> Result<BlockOperator> {
    let dim = generator.nrows();
    if generator.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: generator.ncols(),
        });
    }
    let mut local = vec![usize::MAX; dim];
    let mut blocks = Vec::with_capacity(partition.len());
    let scale = C64::new(0.0, -tau);
    for idx in partition {
        for (k, &i) in idx.iter().enumerate() {
            local[i] = k;
        }
        let n = idx.len();
        let mut m = Dense::zeros(n);
        for (r, &i) in idx.iter().enumerate() {
            let (cols, vals) = generator.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = local[c];
                if k == usize::MAX || idx[k] != c {
                    return Err(Error::InvalidArgument(
                        "partition does not decouple the generator".into(),
                    ));
                }
                m.data[r * n + k] = v * scale;
            }
        }
        blocks.push(SplitBlock::new(idx.clone(), &m.exp()));
    }
    Ok(BlockOperator { dim, blocks })
}

/// Exact propagators for steps `h₀, h₀/2, …, h₀/2^J`, with a single RK4
/// step covering any remainder below `h₀/2^J`.
#[derive(Clone, Debug)]
pub struct PropagatorLadder {
    base_step: f64,
    levels: Vec<BlockOperator>,
}

impl PropagatorLadder {
    /// Build the ladder for `e^{−iGt}`; `finest` bounds the smallest rung.
    pub fn new(generator: &SparseOperator, base_step: f64, finest: f64) -> Result<Self> {
        if !(base_step > 0.0 && finest > 0.0) {
            return Err(Error::InvalidArgument(
                "ladder steps must be positive".into(),
            ));
        }
        let depth = (base_step / finest).log2().ceil().max(0.0) as usize;
        let partition = block_partition(generator);
        let entries: usize =
            partition.iter().map(|b| b.len() * b.len()).sum::<usize>() * (depth + 1);
        if entries > LADDER_ENTRY_GUARD {
            return Err(Error::DimensionGuard {
                dim: entries,
                guard: LADDER_ENTRY_GUARD,
            });
        }
        let smallest = base_step / 2f64.powi(depth as i32);
        let mut levels = vec![exponential_on(generator, &partition, smallest)?];
        for _ in 0..depth {
            let next = levels.last().expect("nonempty").square();
            levels.push(next);
        }
        levels.reverse();
        Ok(Self { base_step, levels })
    }

    pub fn base_step(&self) -> f64 {
        self.base_step
    }

    /// Deepest rung index `J`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Step length of rung `j`.
    pub fn step(&self, level: usize) -> f64 {
        self.base_step / 2f64.powi(level as i32)
    }

    pub fn level(&self, level: usize) -> &BlockOperator {
        &self.levels[level]
    }

    pub fn stored_entries(&self) -> usize {
        self.levels.iter().map(|l| l.stored_entries()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_generator() -> SparseOperator {
        // two decoupled blocks {0, 2} and {1, 3, 4}, with damping
        SparseOperator::from_triplets(
            5,
            5,
            vec![
                (0, 0, C64::new(1.0, -0.1)),
                (0, 2, C64::new(0.3, 0.2)),
                (2, 0, C64::new(0.3, -0.2)),
                (2, 2, C64::new(-2.0, 0.0)),
                (1, 3, C64::new(0.5, 0.0)),
                (3, 1, C64::new(0.5, 0.0)),
                (3, 4, C64::new(0.0, 1.5)),
                (4, 3, C64::new(0.0, -1.5)),
                (4, 4, C64::new(0.7, -0.3)),
            ],
        )
    }

    #[test]
    fn partition_finds_components() {
        assert_eq!(
            block_partition(&test_generator()),
            vec![vec![0, 2], vec![1, 3, 4]]
        );
    }

    #[test]
    fn matches_dense_exponential() {
        let g = test_generator();
        let tau = 3.7;
        let u = block_exponential(&g, tau).unwrap();
        let want = (g.to_dense() * C64::new(0.0, -tau)).exp();
        for c in 0..5 {
            let mut x = vec![ZERO; 5];
            x[c] = ONE;
            let mut y = vec![ZERO; 5];
            u.apply(&x, &mut y);
            for r in 0..5 {
                assert!((y[r] - want[(r, c)]).norm() < 1e-12, "{r} {c}");
            }
        }
    }

    #[test]
    fn ladder_rungs_halve() {
        let g = test_generator();
        let ladder = PropagatorLadder::new(&g, 2.0, 0.3).unwrap();
        assert_eq!(ladder.depth(), 3);
        let x: Vec<C64> = (0..5).map(|i| C64::new(i as f64, 1.0)).collect();
        let (mut a, mut b, mut c) = (vec![ZERO; 5], vec![ZERO; 5], vec![ZERO; 5]);
        ladder.level(0).apply(&x, &mut a);
        ladder.level(1).apply(&x, &mut b);
        ladder.level(1).apply(&b, &mut c);
        for (p, q) in a.iter().zip(&c) {
            assert!((p - q).norm() < 1e-12);
        }
        let direct = block_exponential(&g, 0.25).unwrap();
        direct.apply(&x, &mut a);
        ladder.level(3).apply(&x, &mut b);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).norm() < 1e-12);
        }
    }
}
