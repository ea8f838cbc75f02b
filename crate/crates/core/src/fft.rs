//! Minimal radix-2 FFT used for long PMF convolutions.
//!
//! The convolution engine works on grids of up to a few hundred thousand
//! bins per arrival distribution; direct convolution is quadratic and
//! becomes the bottleneck, so large products go through frequency space.
//! Only power-of-two sizes are needed because inputs are zero-padded.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Copy)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    #[inline]
    fn mul(self, o: Complex) -> Complex {
        Complex {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

/// In-place iterative Cooley-Tukey; `n` must be a power of two.
fn fft_in_place(buf: &mut [Complex], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());

    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * core::f64::consts::PI / len as f64;
        let wl = Complex {
            re: libm::cos(ang),
            im: libm::sin(ang),
        };
        let mut i = 0;
        while i < n {
            let mut w = Complex { re: 1.0, im: 0.0 };
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2].mul(w);
                buf[i + k] = Complex {
                    re: u.re + v.re,
                    im: u.im + v.im,
                };
                buf[i + k + len / 2] = Complex {
                    re: u.re - v.re,
                    im: u.im - v.im,
                };
                w = w.mul(wl);
            }
            i += len;
        }
        len <<= 1;
    }

    if inverse {
        let inv_n = 1.0 / n as f64;
        for c in buf.iter_mut() {
            c.re *= inv_n;
            c.im *= inv_n;
        }
    }
}

/// Linear convolution of two real sequences via zero-padded FFT.
pub fn convolve_real(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();

    // pack a and b as real and imaginary parts of one transform
    let mut buf = vec![Complex { re: 0.0, im: 0.0 }; n];
    for (i, &x) in a.iter().enumerate() {
        buf[i].re = x;
    }
    for (i, &x) in b.iter().enumerate() {
        buf[i].im = x;
    }
    fft_in_place(&mut buf, false);

    // FFT(a)*FFT(b) recovered from the packed transform:
    // A[k] = (Z[k] + conj(Z[n-k]))/2, B[k] = (Z[k] - conj(Z[n-k]))/(2i)
    let mut prod = vec![Complex { re: 0.0, im: 0.0 }; n];
    for k in 0..n {
        let z = buf[k];
        let zc = buf[(n - k) & (n - 1)];
        let a_k = Complex {
            re: 0.5 * (z.re + zc.re),
            im: 0.5 * (z.im - zc.im),
        };
        let b_k = Complex {
            re: 0.5 * (z.im + zc.im),
            im: 0.5 * (zc.re - z.re),
        };
        prod[k] = a_k.mul(b_k);
    }
    fft_in_place(&mut prod, true);

    prod.truncate(out_len);
    prod.iter().map(|c| c.re).collect()
}
