//! Butterworth band-pass design as a cascade of biquads.
//!
//! Analog prototype poles are mapped through the low-pass to band-pass
//! transform, discretized with the bilinear transform using pre-warped band
//! edges, and grouped into conjugate-pair second-order sections.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 12;

/// One second-order section, `a[0]` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    pub fn poles(&self) -> [Complex64; 2] {
        // z^2 + a1 z + a2 = 0
        let (a1, a2) = (self.a[1], self.a[2]);
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IirFilter {
    sections: Vec<Biquad>,
    pub order: usize,
    pub lo: f64,
    pub hi: f64,
    pub fs: f64,
}

impl IirFilter {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Complex frequency response at `f` Hz.
    pub fn response(&self, f: f64) -> Complex64 {
        let w = 2.0 * PI * f / self.fs;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    pub fn magnitude(&self, f: f64) -> f64 {
        self.response(f).norm()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Length of the transient `filtfilt` pads against: the order of the
    /// cascade's overall transfer function plus one.
    pub fn effective_len(&self) -> usize {
        2 * self.sections.len() + 1
    }

    /// Samples for the slowest pole's envelope to decay by 1e-4.
    pub fn decay_len(&self) -> usize {
        let r = self.poles().iter().map(|p| p.norm()).fold(0.0, f64::max);
        if r <= 0.0 {
            return 1;
        }
        if r >= 1.0 {
            return usize::MAX;
        }
        ((1e4f64).ln() / -r.ln()).ceil() as usize
    }

    /// Direct-form II transposed cascade. `zi` is the per-section state, or
    /// zero state when `None`.
    pub fn apply(&self, x: &[f64], zi: Option<&[[f64; 2]]>) -> Vec<f64> {
        let mut y = x.to_vec();
        for (k, s) in self.sections.iter().enumerate() {
            let [mut s1, mut s2] = zi.map(|z| z[k]).unwrap_or([0.0, 0.0]);
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            for v in y.iter_mut() {
                let xn = *v;
                let yn = b0 * xn + s1;
                s1 = b1 * xn - a1 * yn + s2;
                s2 = b2 * xn - a2 * yn;
                *v = yn;
            }
        }
        y
    }

    /// Section states for a unit step already in steady state.
    pub fn step_state(&self) -> Vec<[f64; 2]> {
        let mut level = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let g = s.dc_gain();
                let s2 = (s.b[2] - s.a[2] * g) * level;
                let s1 = (g - s.b[0]) * level;
                level *= g;
                [s1, s2]
            })
            .collect()
    }
}

/// Butterworth band-pass of prototype order `order` (the digital filter has
/// `2 * order` poles) with pass band `[lo, hi]` Hz.
pub fn design_butterworth_bandpass(order: usize, lo: f64, hi: f64, fs: f64) -> Result<IirFilter> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::arg(format!("filter order {order} outside 1..={MAX_ORDER}")));
    }
    if !(fs > 0.0 && lo > 0.0 && lo < hi && hi < fs / 2.0) {
        return Err(Error::arg(format!("band edges must satisfy 0 < lo < hi < fs/2, got lo={lo} hi={hi} fs={fs}")));
    }

    let fs2 = 2.0 * fs;
    let w_lo = fs2 * (PI * lo / fs).tan();
    let w_hi = fs2 * (PI * hi / fs).tan();
    let bw = w_hi - w_lo;
    let w0_sq = w_lo * w_hi;

    let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);
    let section = |p1: Complex64, p2: Complex64| Biquad { b: [1.0, 0.0, -1.0], a: [1.0, -(p1 + p2).re, (p1 * p2).re] };
    let to_bandpass = |p: Complex64| {
        let pb = p * bw;
        let disc = (pb * pb - 4.0 * w0_sq).sqrt();
        ((pb + disc) / 2.0, (pb - disc) / 2.0)
    };

    let mut sections = Vec::with_capacity(order);
    for k in 0..order {
        let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let proto = Complex64::from_polar(1.0, theta);
        let (s1, s2) = to_bandpass(proto);
        let (z1, z2) = (bilinear(s1), bilinear(s2));
        if proto.im > 1e-12 {
            sections.push(section(z1, z1.conj()));
            sections.push(section(z2, z2.conj()));
        } else if proto.im.abs() <= 1e-12 {
            // real prototype pole (odd order)
            sections.push(section(z1, z2));
        }
    }
    debug_assert_eq!(sections.len(), order);

    let mut filt = IirFilter { sections, order, lo, hi, fs };
    // unity gain at the digital image of the analog centre frequency
    let f_center = fs / PI * (w0_sq.sqrt() / fs2).atan();
    let g = filt.magnitude(f_center);
    let per_section = g.powf(-1.0 / order as f64);
    for s in filt.sections.iter_mut() {
        s.b.iter_mut().for_each(|b| *b *= per_section);
    }
    Ok(filt)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// |H(jW)|^2 of the analog band-pass prototype, evaluated at the
    /// pre-warped analog frequency corresponding to `f`.
    fn analog_magnitude(order: usize, lo: f64, hi: f64, fs: f64, f: f64) -> f64 {
        let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
        let (wl, wh, w) = (warp(lo), warp(hi), warp(f));
        let x = (w * w - wl * wh) / (w * (wh - wl));
        (1.0 / (1.0 + x.powi(2 * order as i32))).sqrt()
    }

    #[test]
    fn matches_analog_prototype() {
        for &(order, lo, hi) in &[(5, 0.4, 40.0), (4, 1.0, 4.0), (4, 8.0, 14.0), (2, 30.0, 40.0), (7, 3.0, 90.0)] {
            let f = design_butterworth_bandpass(order, lo, hi, 250.0).unwrap();
            for &hz in &[0.2, 0.5, 1.0, 2.0, 4.0, 10.0, 25.0, 39.0, 60.0, 100.0, 124.0] {
                let want = analog_magnitude(order, lo, hi, 250.0, hz);
                let got = f.magnitude(hz);
                assert!((got - want).abs() < 1e-9, "order {order} [{lo},{hi}] at {hz}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn unity_near_geometric_centre() {
        let f = design_butterworth_bandpass(5, 0.4, 40.0, 250.0).unwrap();
        assert!((f.magnitude((0.4f64 * 40.0).sqrt()) - 1.0).abs() < 0.01);
    }

    #[test]
    fn stable_over_supported_range() {
        for order in 1..=MAX_ORDER {
            for &(lo, hi) in &[(0.4, 40.0), (1.0, 4.0), (0.1, 120.0), (30.0, 40.0), (59.0, 61.0)] {
                let f = design_butterworth_bandpass(order, lo, hi, 250.0).unwrap();
                assert_eq!(f.sections().len(), order);
                assert!(f.is_stable(), "order {order} [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(design_butterworth_bandpass(5, 10.0, 10.0, 250.0).is_err());
        assert!(design_butterworth_bandpass(5, 0.0, 10.0, 250.0).is_err());
        assert!(design_butterworth_bandpass(5, 10.0, 125.0, 250.0).is_err());
        assert!(design_butterworth_bandpass(0, 1.0, 10.0, 250.0).is_err());
        assert!(design_butterworth_bandpass(13, 1.0, 10.0, 250.0).is_err());
    }

    #[test]
    fn step_state_is_steady() {
        let f = design_butterworth_bandpass(3, 1.0, 10.0, 250.0).unwrap();
        let zi = f.step_state();
        let y = f.apply(&[1.0; 50], Some(&zi));
        // band-pass has zero DC gain: steady state output is 0
        assert!(y.iter().all(|v| v.abs() < 1e-12), "{y:?}");
    }
}
