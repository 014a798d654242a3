//! Density-matrix evolution split into sectors of fixed excitation difference.
//!
//! When `H_eff` conserves the excitation number `N` and every jump lowers it by a
//! fixed amount, the blocks `ρ_{N, N−K}` with equal `K` evolve on their own.
//! Sector `−K` is the adjoint of sector `K`, so only `K ≥ 0` is integrated.

use num_complex::Complex64 as C64;

use super::rk4::Rk4;
use crate::device::{excitation_number, OperatorSum};
use crate::fock::{caxpy, HilbertSpec, SparseOperator};

const MINUS_I: C64 = C64 { re: 0.0, im: -1.0 };

#[derive(Clone, Copy)]
struct HEntry {
    r: u32,
    c: u32,
    v: C64,
    term: u32,
}

#[derive(Clone, Copy)]
struct LEntry {
    r: u32,
    c: u32,
    v: C64,
}

struct SectorJump {
    delta: usize,
    /// At most one entry per row and per column.
    monomial: bool,
    /// Entries mapping block `q` into block `q − delta`, indexed by `q`.
    by_source: Vec<Vec<LEntry>>,
}

/// Block `(q, q − k)` of sector `k`.
#[derive(Clone, Copy)]
struct BlockSlot {
    q: usize,
    rows: usize,
    cols: usize,
    offset: usize,
}

pub(crate) struct SectorPlan {
    members: Vec<Vec<usize>>,
    h: Vec<Vec<HEntry>>,
    jumps: Vec<SectorJump>,
    heff: OperatorSum,
}

impl SectorPlan {
    /// `None` when the generator or a jump breaks the sector structure.
    pub(crate) fn new(
        spec: &HilbertSpec,
        heff: &OperatorSum,
        jumps: &[SparseOperator],
    ) -> Option<Self> {
        let d = spec.dim();
        let charge: Vec<usize> = (0..d).map(|i| excitation_number(spec, i)).collect();
        let qmax = *charge.iter().max()?;
        let mut members = vec![Vec::new(); qmax + 1];
        let mut pos = vec![0u32; d];
        for (i, &q) in charge.iter().enumerate() {
            pos[i] = members[q].len() as u32;
            members[q].push(i);
        }
        let mut h = vec![Vec::new(); qmax + 1];
        for (r, c, v, term) in heff.entries() {
            if charge[r] != charge[c] {
                return None;
            }
            h[charge[r]].push(HEntry {
                r: pos[r],
                c: pos[c],
                v,
                term: term as u32,
            });
        }
        let mut sj = Vec::with_capacity(jumps.len());
        for l in jumps {
            let mut delta = None;
            let mut by_source = vec![Vec::new(); qmax + 1];
            for (r, c, v) in l.iter() {
                if charge[c] < charge[r] {
                    return None;
                }
                let dq = charge[c] - charge[r];
                if *delta.get_or_insert(dq) != dq {
                    return None;
                }
                by_source[charge[c]].push(LEntry {
                    r: pos[r],
                    c: pos[c],
                    v,
                });
            }
            if let Some(delta) = delta {
                let (mut rows, mut cols) = (vec![0u8; d], vec![0u8; d]);
                let mut monomial = true;
                for (r, c, _) in l.iter() {
                    rows[r] += 1;
                    cols[c] += 1;
                    monomial &= rows[r] == 1 && cols[c] == 1;
                }
                sj.push(SectorJump {
                    delta,
                    monomial,
                    by_source,
                });
            }
        }
        Some(Self {
            members,
            h,
            jumps: sj,
            heff: heff.clone(),
        })
    }

    pub(crate) fn max_charge(&self) -> usize {
        self.members.len() - 1
    }

    fn slots(&self, k: usize) -> (Vec<BlockSlot>, usize) {
        let mut off = 0;
        let slots = (k..self.members.len())
            .map(|q| {
                let s = BlockSlot {
                    q,
                    rows: self.members[q].len(),
                    cols: self.members[q - k].len(),
                    offset: off,
                };
                off += s.rows * s.cols;
                s
            })
            .collect();
        (slots, off)
    }

    /// Sector `k` of a full row-major `ρ`.
    fn gather(&self, k: usize, rho: &[C64], d: usize) -> Vec<C64> {
        let (slots, len) = self.slots(k);
        let mut out = Vec::with_capacity(len);
        for s in &slots {
            for &i in &self.members[s.q] {
                out.extend(self.members[s.q - k].iter().map(|&j| rho[i * d + j]));
            }
        }
        out
    }

    /// Write sector `k` (and its mirror) into a full row-major `ρ`.
    fn scatter(&self, k: usize, sector: &[C64], rho: &mut [C64], d: usize) {
        let (slots, _) = self.slots(k);
        for s in &slots {
            for (a, &i) in self.members[s.q].iter().enumerate() {
                for (b, &j) in self.members[s.q - k].iter().enumerate() {
                    let v = sector[s.offset + a * s.cols + b];
                    rho[i * d + j] = v;
                    if k > 0 {
                        rho[j * d + i] = v.conj();
                    }
                }
            }
        }
    }
}

/// Integrator state for one sector.
pub(crate) struct SectorRun<'a> {
    plan: &'a SectorPlan,
    k: usize,
    slots: Vec<BlockSlot>,
    /// Slot index of block `q` within this sector.
    slot_of: Vec<Option<usize>>,
    state: Vec<C64>,
    rk: Rk4,
    hl: Vec<Vec<C64>>,
    work: Vec<C64>,
    wbuf: Vec<C64>,
}

impl<'a> SectorRun<'a> {
    pub(crate) fn new(plan: &'a SectorPlan, k: usize, rho0: &[C64], d: usize) -> Self {
        let (slots, len) = plan.slots(k);
        let mut slot_of = vec![None; plan.members.len()];
        for (n, s) in slots.iter().enumerate() {
            slot_of[s.q] = Some(n);
        }
        let widest = slots.iter().map(|s| s.cols).max().unwrap_or(0);
        let tallest = plan.members.iter().map(Vec::len).max().unwrap_or(0);
        Self {
            plan,
            k,
            slots,
            slot_of,
            state: plan.gather(k, rho0, d),
            rk: Rk4::new(len),
            hl: plan
                .h
                .iter()
                .map(|e| vec![C64::new(0.0, 0.0); e.len()])
                .collect(),
            work: vec![C64::new(0.0, 0.0); 2 * tallest * tallest],
            wbuf: vec![C64::new(0.0, 0.0); widest * tallest],
        }
    }

    pub(crate) fn state(&self) -> &[C64] {
        &self.state
    }

    pub(crate) fn scatter_into(&self, rho: &mut [C64], d: usize) {
        self.plan.scatter(self.k, &self.state, rho, d);
    }

    pub(crate) fn step(&mut self, t: f64, dt: f64) {
        let mut state = std::mem::take(&mut self.state);
        let mut rk = std::mem::replace(&mut self.rk, Rk4::new(0));
        rk.step(|t, b, out| self.rhs(t, b, out), t, dt, &mut state);
        self.rk = rk;
        self.state = state;
    }

    /// Symmetrize the diagonal blocks of sector 0 and return the trace.
    pub(crate) fn hermitize(&mut self) -> C64 {
        debug_assert_eq!(self.k, 0);
        let mut tr = C64::new(0.0, 0.0);
        for s in &self.slots {
            let m = s.rows;
            let blk = &mut self.state[s.offset..s.offset + m * m];
            for i in 0..m {
                blk[i * m + i].im = 0.0;
                tr += blk[i * m + i];
                for j in i + 1..m {
                    let v = 0.5 * (blk[i * m + j] + blk[j * m + i].conj());
                    blk[i * m + j] = v;
                    blk[j * m + i] = v.conj();
                }
            }
        }
        tr
    }

    fn rhs(&mut self, t: f64, b: &[C64], out: &mut [C64]) {
        let plan = self.plan;
        let coef = plan.heff.coeff_table(t, MINUS_I);
        for (q, entries) in plan.h.iter().enumerate() {
            for (l, e) in self.hl[q].iter_mut().zip(entries) {
                *l = e.v * coef[e.term as usize];
            }
        }
        out.fill(C64::new(0.0, 0.0));
        let k = self.k;
        let half = self.work.len() / 2;
        let (tr, z) = self.work.split_at_mut(half);
        for s in &self.slots {
            let (q, rows, cols) = (s.q, s.rows, s.cols);
            let bq = &b[s.offset..s.offset + rows * cols];
            let oq = &mut out[s.offset..s.offset + rows * cols];
            // X = −i H_q B
            left_mul(
                plan.h[q]
                    .iter()
                    .zip(&self.hl[q])
                    .map(|(e, &v)| (e.r, e.c, v)),
                bq,
                cols,
                oq,
            );
            // + X' † with X' = −i H_{q−k} B†, i.e. + i B H_{q−k}†
            right_mul_adjoint(
                plan.h[q - k]
                    .iter()
                    .zip(&self.hl[q - k])
                    .map(|(e, &v)| (e.r, e.c, v)),
                bq,
                rows,
                cols,
                cols,
                oq,
                tr,
                z,
            );
        }
        for j in &plan.jumps {
            for s in &self.slots {
                let q = s.q;
                if q < j.delta + k {
                    continue;
                }
                let Some(target) = self.slot_of[q - j.delta] else {
                    continue;
                };
                let left = &j.by_source[q];
                let right = &j.by_source[q - k];
                if left.is_empty() || right.is_empty() {
                    continue;
                }
                let cols = s.cols;
                let bq = &b[s.offset..s.offset + s.rows * cols];
                let ts = self.slots[target];
                let ot = &mut out[ts.offset..ts.offset + ts.rows * ts.cols];
                if j.monomial {
                    // out_target[r_a][r_b] += l_a conj(l_b) B[c_a][c_b]
                    for ea in left {
                        let brow = &bq[ea.c as usize * cols..(ea.c as usize + 1) * cols];
                        let orow = &mut ot[ea.r as usize * ts.cols..(ea.r as usize + 1) * ts.cols];
                        for eb in right {
                            orow[eb.r as usize] += ea.v * (eb.v.conj() * brow[eb.c as usize]);
                        }
                    }
                    continue;
                }
                // W = L_q B, then out_target += W L_{q−k}† = (L_{q−k} W†)†
                let w = &mut self.wbuf[..ts.rows * cols];
                w.fill(C64::new(0.0, 0.0));
                left_mul(left.iter().map(|e| (e.r, e.c, e.v)), bq, cols, w);
                right_mul_adjoint(
                    right.iter().map(|e| (e.r, e.c, e.v)),
                    w,
                    ts.rows,
                    cols,
                    ts.cols,
                    ot,
                    tr,
                    z,
                );
            }
        }
    }
}

/// `y += S x` with `x` row-major of width `width`.
#[inline]
fn left_mul(
    entries: impl Iterator<Item = (u32, u32, C64)>,
    x: &[C64],
    width: usize,
    y: &mut [C64],
) {
    for (r, c, v) in entries {
        let (r, c) = (r as usize, c as usize);
        caxpy(
            v,
            &x[c * width..(c + 1) * width],
            &mut y[r * width..(r + 1) * width],
        );
    }
}

/// `y += (S x†)† = x S†`; `x` is `rows × xc`, `y` is `rows × yc`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn right_mul_adjoint(
    entries: impl Iterator<Item = (u32, u32, C64)>,
    x: &[C64],
    rows: usize,
    xc: usize,
    yc: usize,
    y: &mut [C64],
    tr: &mut [C64],
    z: &mut [C64],
) {
    let t = &mut tr[..xc * rows];
    for a in 0..rows {
        for c in 0..xc {
            t[c * rows + a] = x[a * xc + c].conj();
        }
    }
    let z = &mut z[..yc * rows];
    z.fill(C64::new(0.0, 0.0));
    left_mul(entries, t, rows, z);
    for a in 0..rows {
        let yrow = &mut y[a * yc..(a + 1) * yc];
        for (bcol, o) in yrow.iter_mut().enumerate() {
            *o += z[bcol * rows + a].conj();
        }
    }
}
