use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::SparseOperator;

/// Coefficient attached to one group of stored entries.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Coeff {
    Static,
    /// `amp · e^{iωt}`
    Osc {
        amp: C64,
        freq: f64,
    },
    /// `conj(amp · e^{iωt})`
    OscConj {
        amp: C64,
        freq: f64,
    },
}

impl Coeff {
    fn at(self, t: f64) -> C64 {
        match self {
            Coeff::Static => C64::new(1.0, 0.0),
            Coeff::Osc { amp, freq } => amp * C64::from_polar(1.0, freq * t),
            Coeff::OscConj { amp, freq } => (amp * C64::from_polar(1.0, freq * t)).conj(),
        }
    }
}

/// One oscillating term `amp · e^{iωt} · O + h.c.`.
#[derive(Clone, Debug)]
pub struct OscTerm {
    pub op: SparseOperator,
    pub amp: C64,
    pub freq: f64,
}

/// `H(t) = S + Σ_k (a_k e^{iω_k t} O_k + h.c.)` stored as one merged CSR
/// matrix whose entries carry the index of their coefficient.
#[derive(Clone, Debug)]
pub struct OperatorSum {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
    term: Vec<u32>,
    coeffs: Vec<Coeff>,
    n_osc: usize,
    static_part: SparseOperator,
    osc: Vec<OscTerm>,
}

impl OperatorSum {
    pub fn new(static_part: SparseOperator, osc: Vec<OscTerm>) -> Result<Self> {
        let dim = static_part.dim();
        for t in &osc {
            if t.op.nrows() != dim || t.op.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.op.nrows(),
                });
            }
        }
        let mut coeffs = vec![Coeff::Static];
        let mut entries: Vec<(usize, usize, u32, C64)> =
            static_part.iter().map(|(r, c, v)| (r, c, 0, v)).collect();
        for t in &osc {
            let k = coeffs.len() as u32;
            coeffs.push(Coeff::Osc {
                amp: t.amp,
                freq: t.freq,
            });
            coeffs.push(Coeff::OscConj {
                amp: t.amp,
                freq: t.freq,
            });
            entries.extend(t.op.iter().map(|(r, c, v)| (r, c, k, v)));
            entries.extend(t.op.iter().map(|(r, c, v)| (c, r, k + 1, v.conj())));
        }
        entries.sort_unstable_by_key(|&(r, c, k, _)| (r, c, k));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<C64> = Vec::with_capacity(entries.len());
        let mut term: Vec<u32> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize, u32)> = None;
        for (r, c, k, v) in entries {
            if last == Some((r, c, k)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c, k));
            row_ptr[r + 1] += 1;
            cols.push(c as u32);
            vals.push(v);
            term.push(k);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            dim,
            row_ptr,
            cols,
            vals,
            term,
            coeffs,
            n_osc: osc.len(),
            static_part,
            osc,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_static(&self) -> bool {
        self.n_osc == 0
    }

    pub fn static_part(&self) -> &SparseOperator {
        &self.static_part
    }

    pub fn osc_terms(&self) -> &[OscTerm] {
        &self.osc
    }

    /// Number of oscillating operator blocks, counting each Hermitian
    /// conjugate separately.
    pub fn term_count(&self) -> usize {
        2 * self.n_osc
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Copy with `extra` added to the static part.
    pub fn with_static(&self, extra: &SparseOperator) -> Result<Self> {
        Self::new(self.static_part.add(extra)?, self.osc.clone())
    }

    /// Largest oscillation frequency `max |ω_k|`.
    pub fn max_oscillation(&self) -> f64 {
        self.osc.iter().map(|t| t.freq.abs()).fold(0.0, f64::max)
    }

    /// Time-independent bound on the largest absolute row sum of `H(t)`.
    pub fn norm_bound(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let scale = match self.coeffs[self.term[k] as usize] {
                    Coeff::Static => 1.0,
                    Coeff::Osc { amp, .. } | Coeff::OscConj { amp, .. } => amp.norm(),
                };
                s += self.vals[k].norm() * scale;
            }
            worst = worst.max(s);
        }
        worst
    }

    /// Fastest rate present: oscillation frequencies or the operator norm bound.
    pub fn max_frequency(&self) -> f64 {
        self.max_oscillation().max(self.norm_bound())
    }

    /// Stored entries as `(row, col, value, term)`; the matrix element at `t` is `value · coefficient(term)`.
    pub(crate) fn entries(&self) -> impl Iterator<Item = (usize, usize, C64, usize)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| {
                (
                    r,
                    self.cols[k] as usize,
                    self.vals[k],
                    self.term[k] as usize,
                )
            })
        })
    }

    pub(crate) fn coeff_table(&self, t: f64, scale: C64) -> Vec<C64> {
        self.coeffs.iter().map(|c| c.at(t) * scale).collect()
    }

    /// `y = s · H(t) x`.
    pub fn apply_scaled(&self, t: f64, s: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        let coef = self.coeff_table(t, s);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * coef[self.term[k] as usize] * x[self.cols[k] as usize];
            }
            *out = acc;
        }
    }

    pub fn apply(&self, t: f64, x: &[C64], y: &mut [C64]) {
        self.apply_scaled(t, C64::new(1.0, 0.0), x, y)
    }

    /// `Y = s · H(t) B` for row-major dense `B` with `width` columns.
    pub fn mul_dense_scaled(&self, t: f64, s: C64, b: &[C64], width: usize, y: &mut [C64]) {
        let coef = self.coeff_table(t, s);
        for r in 0..self.dim {
            let out = &mut y[r * width..(r + 1) * width];
            out.fill(C64::new(0.0, 0.0));
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.vals[k] * coef[self.term[k] as usize];
                let c = self.cols[k] as usize;
                crate::fock::caxpy(v, &b[c * width..(c + 1) * width], out);
            }
        }
    }

    /// Assembled `H(t)`.
    pub fn at(&self, t: f64) -> SparseOperator {
        let coef = self.coeff_table(t, C64::new(1.0, 0.0));
        let trips = (0..self.dim).flat_map(|r| {
            let coef = &coef;
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| {
                (
                    r,
                    self.cols[k] as usize,
                    self.vals[k] * coef[self.term[k] as usize],
                )
            })
        });
        SparseOperator::from_triplets(self.dim, self.dim, trips.collect::<Vec<_>>())
    }
}
