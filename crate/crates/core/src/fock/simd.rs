//! Complex vector kernels with an AVX2/FMA path picked at runtime.

use num_complex::Complex64 as C64;

#[cfg(target_arch = "x86_64")]
use std::arch::x86_64::*;

pub(crate) fn has_avx2() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
    }
    #[cfg(not(target_arch = "x86_64"))]
    false
}

/// `y += a x`.
#[inline]
pub(crate) fn caxpy(a: C64, x: &[C64], y: &mut [C64]) {
    let n = x.len().min(y.len());
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: feature checked; both slices hold at least n elements.
        unsafe { caxpy_avx2(a, &x[..n], &mut y[..n]) };
        return;
    }
    for (o, v) in y[..n].iter_mut().zip(&x[..n]) {
        *o += a * v;
    }
}

/// `y += a (u ⊙ x)`.
#[inline]
pub(crate) fn caxpy_hadamard(a: C64, u: &[C64], x: &[C64], y: &mut [C64]) {
    let n = x.len().min(y.len()).min(u.len());
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: as above.
        unsafe { caxpy_hadamard_avx2(a, &u[..n], &x[..n], &mut y[..n]) };
        return;
    }
    for ((o, v), w) in y[..n].iter_mut().zip(&x[..n]).zip(&u[..n]) {
        *o += a * (w * v);
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
#[inline]
unsafe fn scalar_mul(ar: __m256d, ai: __m256d, x: __m256d) -> __m256d {
    let xs = _mm256_permute_pd(x, 0b0101);
    _mm256_fmaddsub_pd(ar, x, _mm256_mul_pd(ai, xs))
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn caxpy_avx2(a: C64, x: &[C64], y: &mut [C64]) {
    let n = x.len();
    let (xp, yp) = (x.as_ptr() as *const f64, y.as_mut_ptr() as *mut f64);
    let ar = _mm256_set1_pd(a.re);
    let ai = _mm256_set1_pd(a.im);
    let pairs = n / 2;
    let mut k = 0;
    while k + 2 <= pairs {
        let x0 = _mm256_loadu_pd(xp.add(4 * k));
        let x1 = _mm256_loadu_pd(xp.add(4 * k + 4));
        let y0 = _mm256_loadu_pd(yp.add(4 * k));
        let y1 = _mm256_loadu_pd(yp.add(4 * k + 4));
        _mm256_storeu_pd(yp.add(4 * k), _mm256_add_pd(y0, scalar_mul(ar, ai, x0)));
        _mm256_storeu_pd(yp.add(4 * k + 4), _mm256_add_pd(y1, scalar_mul(ar, ai, x1)));
        k += 2;
    }
    if k < pairs {
        let x0 = _mm256_loadu_pd(xp.add(4 * k));
        let y0 = _mm256_loadu_pd(yp.add(4 * k));
        _mm256_storeu_pd(yp.add(4 * k), _mm256_add_pd(y0, scalar_mul(ar, ai, x0)));
    }
    if n % 2 == 1 {
        y[n - 1] += a * x[n - 1];
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn caxpy_hadamard_avx2(a: C64, u: &[C64], x: &[C64], y: &mut [C64]) {
    let n = x.len();
    let (up, xp, yp) = (
        u.as_ptr() as *const f64,
        x.as_ptr() as *const f64,
        y.as_mut_ptr() as *mut f64,
    );
    let ar = _mm256_set1_pd(a.re);
    let ai = _mm256_set1_pd(a.im);
    for k in 0..n / 2 {
        let uv = _mm256_loadu_pd(up.add(4 * k));
        let xv = _mm256_loadu_pd(xp.add(4 * k));
        let ur = _mm256_movedup_pd(uv);
        let ui = _mm256_permute_pd(uv, 0b1111);
        let prod = _mm256_fmaddsub_pd(ur, xv, _mm256_mul_pd(ui, _mm256_permute_pd(xv, 0b0101)));
        let yv = _mm256_loadu_pd(yp.add(4 * k));
        _mm256_storeu_pd(yp.add(4 * k), _mm256_add_pd(yv, scalar_mul(ar, ai, prod)));
    }
    if n % 2 == 1 {
        y[n - 1] += a * (u[n - 1] * x[n - 1]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize, s: f64) -> Vec<C64> {
        (0..n)
            .map(|k| C64::new((k as f64 * s).sin(), (k as f64 * s * 1.7).cos()))
            .collect()
    }

    #[test]
    fn kernels_match_scalar() {
        for n in [0, 1, 2, 3, 4, 5, 8, 13] {
            let (u, x) = (data(n, 0.3), data(n, 0.7));
            let a = C64::new(0.4, -1.3);
            let mut y1 = data(n, 1.1);
            let mut y2 = y1.clone();
            caxpy(a, &x, &mut y1);
            for (o, v) in y2.iter_mut().zip(&x) {
                *o += a * v;
            }
            caxpy_hadamard(a, &u, &x, &mut y1);
            for ((o, v), w) in y2.iter_mut().zip(&x).zip(&u) {
                *o += a * (w * v);
            }
            for k in 0..n {
                assert!((y1[k] - y2[k]).norm() < 1e-14);
            }
        }
    }
}
