use num_complex::Complex64 as C64;

/// Scratch buffers for classical fourth-order Runge–Kutta on a flat complex
/// vector.
pub(crate) struct Rk4 {
    k: Vec<C64>,
    probe: Vec<C64>,
    acc: Vec<C64>,
}

impl Rk4 {
    pub(crate) fn new(len: usize) -> Self {
        let z = C64::new(0.0, 0.0);
        Self {
            k: vec![z; len],
            probe: vec![z; len],
            acc: vec![z; len],
        }
    }

    /// Advance `x` from `t` to `t + dt`; `f(t, x, out)` writes `dx/dt`.
    pub(crate) fn step<F>(&mut self, mut f: F, t: f64, dt: f64, x: &mut [C64])
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let half = 0.5 * dt;
        f(t, x, &mut self.k);
        for ((a, p), (&xi, &ki)) in self
            .acc
            .iter_mut()
            .zip(self.probe.iter_mut())
            .zip(x.iter().zip(&self.k))
        {
            *a = xi + ki * (dt / 6.0);
            *p = xi + ki * half;
        }
        f(t + half, &self.probe, &mut self.k);
        for ((a, p), (&xi, &ki)) in self
            .acc
            .iter_mut()
            .zip(self.probe.iter_mut())
            .zip(x.iter().zip(&self.k))
        {
            *a += ki * (dt / 3.0);
            *p = xi + ki * half;
        }
        f(t + half, &self.probe, &mut self.k);
        for ((a, p), (&xi, &ki)) in self
            .acc
            .iter_mut()
            .zip(self.probe.iter_mut())
            .zip(x.iter().zip(&self.k))
        {
            *a += ki * (dt / 3.0);
            *p = xi + ki * dt;
        }
        f(t + dt, &self.probe, &mut self.k);
        for ((xi, &a), &ki) in x.iter_mut().zip(&self.acc).zip(&self.k) {
            *xi = a + ki * (dt / 6.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |n: usize| {
            let mut x = [C64::new(1.0, 0.0)];
            let mut rk = Rk4::new(1);
            let dt = 1.0 / n as f64;
            for s in 0..n {
                rk.step(|_, x, out| out[0] = -x[0], s as f64 * dt, dt, &mut x);
            }
            (x[0].re - (-1.0f64).exp()).abs()
        };
        let ratio = err(10) / err(20);
        assert!((ratio - 16.0).abs() < 1.5, "{ratio}");
    }
}
