//! Spin-block factorisation.
//!
//! `H(t)` only involves `σ_x^p` and `σ_x^q`, and the dissipators act on
//! phonons alone. Writing the state in the joint `σ_x` eigenbasis `|s⟩`,
//! each block `⟨s|ρ|s'⟩` therefore evolves on its own under
//!
//! ```text
//! dX/dt = −i(h_s X − X h_{s'}) + Σ_m (Γ↓ D[a_m] + Γ↑ D[a_m†]) X
//! ```
//!
//! with `h_s` a sum of single-mode terms. Starting from a product phonon
//! state, every block stays a product over modes, so the integration is a
//! set of `(n_cut+1)²` matrix ODEs per (block, mode).

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::Matrix4;
use num_complex::Complex64 as C64;

use super::rk4::Rk4;
use super::{conjugate_hadamard, spin_signs, to_x_basis, Evolved, Generators, HERMITIZE_EVERY, TRACE_ABORT};
use crate::error::{Error, Result};

struct Layout {
    /// Active `(s, s')` pairs with `s ≤ s'` and nonzero spin weight.
    pairs: Vec<(usize, usize)>,
    weights: Vec<C64>,
    num_modes: usize,
    dim: usize,
}

impl Layout {
    fn block(&self, pair: usize, mode: usize) -> usize {
        (pair * self.num_modes + mode) * self.dim * self.dim
    }

    fn len(&self) -> usize {
        self.pairs.len() * self.num_modes * self.dim * self.dim
    }
}

pub(super) fn evolve(g: &Generators) -> Result<Evolved> {
    let psi_x = to_x_basis(&g.psi0);
    let mut pairs = Vec::new();
    let mut weights = Vec::new();
    for s in 0..4 {
        for t in s..4 {
            let w = psi_x[s] * psi_x[t].conj();
            if w.norm() > 0.0 {
                pairs.push((s, t));
                weights.push(w);
            }
        }
    }
    let d = g.n_cut + 1;
    let nm = g.modes.len();
    let lay = Layout {
        pairs,
        weights,
        num_modes: nm,
        dim: d,
    };
    let mut x = vec![C64::new(0.0, 0.0); lay.len()];
    for k in 0..lay.pairs.len() {
        for m in 0..nm {
            let off = lay.block(k, m);
            for i in 0..d {
                x[off + i * d + i] = C64::new(g.populations[m][i], 0.0);
            }
        }
    }
    let sq: Vec<f64> = (0..=d).map(|i| (i as f64).sqrt()).collect();
    let mut rk = Rk4::new(x.len());
    let mut leakage = vec![0.0f64; nm];
    let mut steps = 0usize;
    let mut gs = vec![C64::new(0.0, 0.0); 4 * nm];

    for st in &g.stretches {
        let mut rhs = |t: f64, x: &[C64], out: &mut [C64]| {
            for m in 0..nm {
                let md = &g.modes[m];
                let ph = g.phase(m, t);
                for s in 0..4 {
                    let (sp, sq_) = spin_signs(s);
                    let amp = sp * md.k_p * st.omega_p + sq_ * md.k_q * st.omega_q;
                    gs[s * nm + m] = C64::new(0.0, amp) * ph;
                }
            }
            for (k, &(s, t2)) in lay.pairs.iter().enumerate() {
                for m in 0..nm {
                    let off = lay.block(k, m);
                    let md = &g.modes[m];
                    block_rhs(
                        &x[off..off + d * d],
                        &mut out[off..off + d * d],
                        gs[s * nm + m],
                        gs[t2 * nm + m],
                        md.gamma_down,
                        md.gamma_up,
                        &sq,
                    );
                }
            }
        };
        for k in 0..st.steps {
            let t = st.start + k as f64 * st.dt;
            rk.step(&mut rhs, t, st.dt, &mut x);
            steps += 1;
            track_leakage(&lay, &x, &mut leakage);
            if steps.is_multiple_of(HERMITIZE_EVERY) {
                tidy(&lay, &mut x, t + st.dt)?;
            }
        }
    }
    tidy(&lay, &mut x, g.stretches.last().map(|s| s.start + s.dt * s.steps as f64).unwrap_or(0.0))?;

    let mut r = Matrix4::<C64>::zeros();
    for (k, &(s, t)) in lay.pairs.iter().enumerate() {
        let mut v = lay.weights[k];
        for m in 0..nm {
            let off = lay.block(k, m);
            let tr: C64 = (0..d).map(|i| x[off + i * d + i]).sum();
            v *= tr;
        }
        r[(s, t)] = v;
        r[(t, s)] = v.conj();
    }
    let trace: C64 = (0..4).map(|i| r[(i, i)]).sum();
    Ok(Evolved {
        spin: conjugate_hadamard(&r),
        trace_residual: (trace - 1.0).norm(),
        leakage,
        steps,
    })
}

/// Right-hand side for one `d × d` block, row-major.
fn block_rhs(x: &[C64], out: &mut [C64], gl: C64, gr: C64, down: f64, up: f64, sq: &[f64]) {
    let d = sq.len() - 1;
    let top = d - 1;
    let mi = C64::new(0.0, -1.0);
    let (glc, grc) = (gl.conj(), gr.conj());
    let occ_up = |i: usize| if i < top { (i + 1) as f64 } else { 0.0 };
    for i in 0..d {
        for j in 0..d {
            let at = |a: usize, b: usize| x[a * d + b];
            let mut hx = C64::new(0.0, 0.0);
            if i >= 1 {
                hx += gl * at(i - 1, j) * sq[i];
            }
            if i + 1 < d {
                hx += glc * at(i + 1, j) * sq[i + 1];
            }
            let mut xh = C64::new(0.0, 0.0);
            if j + 1 < d {
                xh += gr * at(i, j + 1) * sq[j + 1];
            }
            if j >= 1 {
                xh += grc * at(i, j - 1) * sq[j];
            }
            let mut v = mi * (hx - xh);
            let xij = at(i, j);
            if down > 0.0 {
                if i + 1 < d && j + 1 < d {
                    v += at(i + 1, j + 1) * (down * sq[i + 1] * sq[j + 1]);
                }
                v -= xij * (0.5 * down * (i + j) as f64);
            }
            if up > 0.0 {
                if i >= 1 && j >= 1 {
                    v += at(i - 1, j - 1) * (up * sq[i] * sq[j]);
                }
                v -= xij * (0.5 * up * (occ_up(i) + occ_up(j)));
            }
            out[i * d + j] = v;
        }
    }
}

fn track_leakage(lay: &Layout, x: &[C64], leakage: &mut [f64]) {
    let d = lay.dim;
    // top-level population of mode m, summed over spin labels
    for (m, l) in leakage.iter_mut().enumerate() {
        let mut pop = 0.0;
        for (k, &(s, t)) in lay.pairs.iter().enumerate() {
            if s == t {
                let off = lay.block(k, m);
                pop += lay.weights[k].re * x[off + (d - 1) * d + (d - 1)].re;
            }
        }
        *l = l.max(pop);
    }
}

/// Re-Hermitise diagonal blocks and check their traces.
fn tidy(lay: &Layout, x: &mut [C64], t: f64) -> Result<()> {
    let d = lay.dim;
    for (k, &(s, u)) in lay.pairs.iter().enumerate() {
        for m in 0..lay.num_modes {
            let off = lay.block(k, m);
            let blk = &mut x[off..off + d * d];
            if blk.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NotFinite("density matrix"));
            }
            if s != u {
                continue;
            }
            for i in 0..d {
                for j in i..d {
                    let a = blk[i * d + j];
                    let b = blk[j * d + i];
                    let v = (a + b.conj()) * 0.5;
                    blk[i * d + j] = v;
                    blk[j * d + i] = v.conj();
                }
            }
            let tr: f64 = (0..d).map(|i| blk[i * d + i].re).sum();
            let drift = (tr - 1.0).abs();
            if drift > TRACE_ABORT {
                return Err(Error::TraceDrift { drift, t });
            }
        }
    }
    Ok(())
}
