use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64 as C64;

/// Scratch buffers for classic fourth-order Runge–Kutta on a flat complex
/// state.
pub(crate) struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub(crate) fn new(n: usize) -> Self {
        let z = C64::new(0.0, 0.0);
        Rk4 {
            k1: vec![z; n],
            k2: vec![z; n],
            k3: vec![z; n],
            k4: vec![z; n],
            tmp: vec![z; n],
        }
    }

    /// Advance `x` from `t` to `t + h`; `f(t, x, out)` overwrites `out`.
    pub(crate) fn step<F>(&mut self, f: &mut F, t: f64, h: f64, x: &mut [C64])
    where
        F: FnMut(f64, &[C64], &mut [C64]) + ?Sized,
    {
        let half = 0.5 * h;
        f(t, x, &mut self.k1);
        for ((y, x), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k1) {
            *y = x + k * half;
        }
        f(t + half, &self.tmp, &mut self.k2);
        for ((y, x), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k2) {
            *y = x + k * half;
        }
        f(t + half, &self.tmp, &mut self.k3);
        for ((y, x), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k3) {
            *y = x + k * h;
        }
        f(t + h, &self.tmp, &mut self.k4);
        let w = h / 6.0;
        for (i, x) in x.iter_mut().enumerate() {
            *x += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
        }
    }
}
