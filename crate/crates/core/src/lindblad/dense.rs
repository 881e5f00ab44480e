//! Full-space density matrix with sparse operator products.
//!
//! Basis order: spin index `2 z_p + z_q` (most significant), then the Fock
//! number of mode 0, mode 1, ….

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64 as C64;

use super::rk4::Rk4;
use super::{Evolved, Generators, HERMITIZE_EVERY, TRACE_ABORT};
use crate::error::{Error, Result};

/// `4 (n_cut+1)^N`, or an error on overflow.
pub fn dense_dimension(num_modes: usize, n_cut: usize) -> Result<usize> {
    let mut d: usize = 4;
    for _ in 0..num_modes {
        d = d
            .checked_mul(n_cut + 1)
            .ok_or(Error::OverBudget { required: usize::MAX, budget: 0 })?;
    }
    Ok(d)
}

/// Sparse entry `(row, col, value)`.
type Entry = (usize, usize, f64);

/// Building blocks `σ_x^j ⊗ a_m†` and `a_m` on the full space.
#[derive(Debug, Clone)]
pub struct DenseOperators {
    pub dim: usize,
    n_cut: usize,
    num_modes: usize,
    /// `[ion][mode]` entries of `σ_x^j ⊗ a_m†` (ion 0 is p, 1 is q).
    raise: [Vec<Vec<Entry>>; 2],
    /// Entries of `a_m`.
    lower: Vec<Vec<Entry>>,
    /// Fock number of mode `m` for each basis index.
    occupation: Vec<Vec<usize>>,
}

impl DenseOperators {
    #[allow(clippy::needless_range_loop)]
    pub fn new(num_modes: usize, n_cut: usize) -> Result<Self> {
        let dim = dense_dimension(num_modes, n_cut)?;
        let d = n_cut + 1;
        let ph = dim / 4;
        let mut occupation = vec![vec![0usize; dim]; num_modes];
        for idx in 0..dim {
            let mut rest = idx % ph;
            for m in (0..num_modes).rev() {
                occupation[m][idx] = rest % d;
                rest /= d;
            }
        }
        let stride = |m: usize| d.pow((num_modes - 1 - m) as u32);
        let mut lower = Vec::with_capacity(num_modes);
        for m in 0..num_modes {
            let mut e = Vec::new();
            for col in 0..dim {
                let n = occupation[m][col];
                if n > 0 {
                    e.push((col - stride(m), col, (n as f64).sqrt()));
                }
            }
            lower.push(e);
        }
        let flip = |j: usize, spin: usize| if j == 0 { spin ^ 2 } else { spin ^ 1 };
        let raise = [0usize, 1].map(|j| {
            (0..num_modes)
                .map(|m| {
                    let mut e = Vec::new();
                    for col in 0..dim {
                        let n = occupation[m][col];
                        if n < n_cut {
                            let spin = col / ph;
                            let row = flip(j, spin) * ph + (col % ph) + stride(m);
                            e.push((row, col, ((n + 1) as f64).sqrt()));
                        }
                    }
                    e
                })
                .collect()
        });
        Ok(DenseOperators {
            dim,
            n_cut,
            num_modes,
            raise,
            lower,
            occupation,
        })
    }

    /// `H(t)` as a dense matrix (for inspection and tests).
    pub fn hamiltonian(&self, g: &Generators, t: f64, omega_p: f64, omega_q: f64) -> DMatrix<C64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.h_entries(g, t, omega_p, omega_q) {
            h[(r, c)] += v;
        }
        h
    }

    fn h_entries(&self, g: &Generators, t: f64, omega_p: f64, omega_q: f64) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::new();
        for m in 0..self.num_modes {
            let md = &g.modes[m];
            let ph = g.phase(m, t);
            for (j, amp) in [(0usize, md.k_p * omega_p), (1, md.k_q * omega_q)] {
                if amp == 0.0 {
                    continue;
                }
                let coef = C64::new(0.0, amp) * ph;
                for &(r, c, v) in &self.raise[j][m] {
                    out.push((r, c, coef * v));
                    out.push((c, r, coef.conj() * v));
                }
            }
        }
        out
    }
}

pub(super) fn evolve(g: &Generators) -> Result<Evolved> {
    let ops = DenseOperators::new(g.modes.len(), g.n_cut)?;
    let dim = ops.dim;
    let ph = dim / 4;
    // ρ₀ = |ψ⟩⟨ψ| ⊗ diag(p)
    let mut x = vec![C64::new(0.0, 0.0); dim * dim];
    for a in 0..4 {
        for b in 0..4 {
            let w = g.psi0[a] * g.psi0[b].conj();
            if w.norm() == 0.0 {
                continue;
            }
            for k in 0..ph {
                let idx = a * ph + k;
                let p: f64 = (0..g.modes.len()).map(|m| g.populations[m][ops.occupation[m][idx]]).product();
                x[idx * dim + b * ph + k] = w * p;
            }
        }
    }
    let lower_occ: Vec<Vec<f64>> = ops.occupation.iter().map(|o| o.iter().map(|&n| n as f64).collect()).collect();
    let raise_occ: Vec<Vec<f64>> = ops
        .occupation
        .iter()
        .map(|o| o.iter().map(|&n| if n < ops.n_cut { (n + 1) as f64 } else { 0.0 }).collect())
        .collect();
    // a_m† entries on the full space (spin identity)
    let raise_plain: Vec<Vec<Entry>> = ops.lower.iter().map(|e| e.iter().map(|&(r, c, v)| (c, r, v)).collect()).collect();

    let mut rk = Rk4::new(x.len());
    let mut leakage = vec![0.0f64; g.modes.len()];
    let mut steps = 0usize;
    let mut y = vec![C64::new(0.0, 0.0); dim * dim];
    let mi = C64::new(0.0, -1.0);
    for st in &g.stretches {
        let mut rhs = |t: f64, x: &[C64], out: &mut [C64]| {
            out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for (r, c, v) in ops.h_entries(g, t, st.omega_p, st.omega_q) {
                // −i(Hρ − ρH)
                let f = mi * v;
                for k in 0..dim {
                    out[r * dim + k] += f * x[c * dim + k];
                    out[k * dim + c] -= f * x[k * dim + r];
                }
            }
            for (m, md) in g.modes.iter().enumerate() {
                for (rate, ops_m, occ) in [
                    (md.gamma_down, &ops.lower[m], &lower_occ[m]),
                    (md.gamma_up, &raise_plain[m], &raise_occ[m]),
                ] {
                    if rate == 0.0 {
                        continue;
                    }
                    // y = L ρ, then L ρ L†
                    y.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                    for &(r, c, v) in ops_m.iter() {
                        for k in 0..dim {
                            y[r * dim + k] += x[c * dim + k] * v;
                        }
                    }
                    for &(r, c, v) in ops_m.iter() {
                        for k in 0..dim {
                            out[k * dim + r] += y[k * dim + c] * (rate * v);
                        }
                    }
                    for i in 0..dim {
                        for j in 0..dim {
                            out[i * dim + j] -= x[i * dim + j] * (0.5 * rate * (occ[i] + occ[j]));
                        }
                    }
                }
            }
        };
        for k in 0..st.steps {
            let t = st.start + k as f64 * st.dt;
            rk.step(&mut rhs, t, st.dt, &mut x);
            steps += 1;
            for (m, l) in leakage.iter_mut().enumerate() {
                let pop: f64 = (0..dim)
                    .filter(|&i| ops.occupation[m][i] == ops.n_cut)
                    .map(|i| x[i * dim + i].re)
                    .sum();
                *l = l.max(pop);
            }
            if steps.is_multiple_of(HERMITIZE_EVERY) {
                tidy(&mut x, dim, t + st.dt)?;
            }
        }
    }
    tidy(&mut x, dim, g.stretches.last().map(|s| s.start + s.dt * s.steps as f64).unwrap_or(0.0))?;
    let mut spin = Matrix4::<C64>::zeros();
    for a in 0..4 {
        for b in 0..4 {
            spin[(a, b)] = (0..ph).map(|k| x[(a * ph + k) * dim + b * ph + k]).sum();
        }
    }
    Ok(Evolved {
        trace_residual: (spin.trace() - 1.0).norm(),
        spin,
        leakage,
        steps,
    })
}

fn tidy(x: &mut [C64], dim: usize, t: f64) -> Result<()> {
    if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NotFinite("density matrix"));
    }
    for i in 0..dim {
        for j in i..dim {
            let v = (x[i * dim + j] + x[j * dim + i].conj()) * 0.5;
            x[i * dim + j] = v;
            x[j * dim + i] = v.conj();
        }
    }
    let tr: f64 = (0..dim).map(|i| x[i * dim + i].re).sum();
    let drift = (tr - 1.0).abs();
    if drift > TRACE_ABORT {
        return Err(Error::TraceDrift { drift, t });
    }
    Ok(())
}
