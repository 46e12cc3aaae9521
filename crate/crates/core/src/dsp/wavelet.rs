//! Complex Morlet wavelet bank and time-frequency power.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Kernel half-width in Gaussian standard deviations.
pub const SUPPORT_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct WaveletBank {
    freqs: Vec<f64>,
    cycles: Vec<f64>,
    kernels: Vec<Vec<Complex64>>,
    fs: f64,
}

impl WaveletBank {
    /// 1..=40 Hz in 1 Hz steps, cycles rising linearly from 0.1 to 10.
    pub fn standard(fs: f64) -> Result<Self> {
        let freqs: Vec<f64> = (1..=40).map(f64::from).collect();
        build_wavelet_bank(&freqs, (0.1, 10.0), fs)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn cycles(&self) -> &[f64] {
        &self.cycles
    }

    pub fn kernels(&self) -> &[Vec<Complex64>] {
        &self.kernels
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn max_kernel_len(&self) -> usize {
        self.kernels.iter().map(Vec::len).max().unwrap_or(0)
    }
}

pub fn build_wavelet_bank(freqs: &[f64], cycle_range: (f64, f64), fs: f64) -> Result<WaveletBank> {
    let (c_lo, c_hi) = cycle_range;
    if freqs.is_empty() {
        return Err(Error::arg("empty frequency list"));
    }
    if freqs.iter().any(|f| !(*f > 0.0)) || freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("frequencies must be positive and strictly increasing"));
    }
    let f_min = freqs[0];
    let f_max = *freqs.last().unwrap();
    if !(fs > 2.0 * f_max) {
        return Err(Error::arg(format!("fs {fs} must exceed twice the highest frequency {f_max}")));
    }
    if !(c_lo > 0.0 && (c_hi > c_lo || (freqs.len() == 1 && c_hi >= c_lo))) {
        return Err(Error::arg(format!("invalid cycle range [{c_lo}, {c_hi}]")));
    }

    let mut cycles = Vec::with_capacity(freqs.len());
    let mut kernels = Vec::with_capacity(freqs.len());
    for &f in freqs {
        let n = if freqs.len() == 1 { c_lo } else { c_lo + (c_hi - c_lo) * (f - f_min) / (f_max - f_min) };
        let sigma_t = n / (2.0 * PI * f);
        let half = (SUPPORT_SIGMAS * sigma_t * fs).ceil() as i64;
        let mut k: Vec<Complex64> = (-half..=half)
            .map(|i| {
                let t = i as f64 / fs;
                Complex64::from_polar((-t * t / (2.0 * sigma_t * sigma_t)).exp(), 2.0 * PI * f * t)
            })
            .collect();
        let norm = k.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        k.iter_mut().for_each(|c| *c /= norm);
        cycles.push(n);
        kernels.push(k);
    }
    Ok(WaveletBank { freqs: freqs.to_vec(), cycles, kernels, fs })
}

/// Squared magnitude of the same-length convolution of `x` with every kernel,
/// shape `[n_freqs][x.len()]`. Computed in the frequency domain.
pub fn cwt_power(x: &[f64], bank: &WaveletBank) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let longest = bank.max_kernel_len();
    if n < longest {
        return Err(Error::arg(format!("signal of {n} samples shorter than longest kernel ({longest})")));
    }
    let nfft = n + longest - 1;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nfft);
    let inv = planner.plan_fft_inverse(nfft);

    let mut spec: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spec.resize(nfft, Complex64::new(0.0, 0.0));
    fwd.process(&mut spec);

    let scale = 1.0 / nfft as f64;
    let mut out = Vec::with_capacity(bank.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for kernel in bank.kernels() {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        buf[..kernel.len()].copy_from_slice(kernel);
        fwd.process(&mut buf);
        buf.iter_mut().zip(&spec).for_each(|(b, s)| *b *= s);
        inv.process(&mut buf);
        let half = kernel.len() / 2;
        out.push(buf[half..half + n].iter().map(|c| (c * scale).norm_sqr()).collect());
    }
    Ok(out)
}
