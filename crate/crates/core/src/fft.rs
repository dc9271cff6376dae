//! Fixed-size radix-2 FFT used by the feature extractor.

use alloc::vec::Vec;
use core::f64::consts::PI;

pub(crate) struct Fft {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    rev: Vec<usize>,
}

impl Fft {
    pub(crate) fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2);
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| i.reverse_bits() >> (usize::BITS - bits))
            .collect();
        let (cos, sin) = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                (libm::cos(a), libm::sin(a))
            })
            .unzip();
        Self { n, cos, sin, rev }
    }

    /// In-place forward transform of `(re, im)`.
    pub(crate) fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        assert!(re.len() == n && im.len() == n);
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let (wr, wi) = (self.cos[k * stride], self.sin[k * stride]);
                    let a = start + k;
                    let b = a + half;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len <<= 1;
        }
    }

    /// Power spectrum `|X_k|^2` for `k = 0..=n/2` of a real input.
    pub(crate) fn power_spectrum(&self, input: &[f64], out: &mut Vec<f64>) {
        let mut re = input.to_vec();
        re.resize(self.n, 0.0);
        let mut im = alloc::vec![0.0; self.n];
        self.forward(&mut re, &mut im);
        out.clear();
        out.extend((0..=self.n / 2).map(|k| re[k] * re[k] + im[k] * im[k]));
    }
}
