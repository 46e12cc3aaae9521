//! Univariate Tree-structured Parzen Estimator.
//!
//! Completed trials are split at the gamma-quantile of their objective; the
//! top fraction fits `l(x)` and the rest `g(x)`, independently per dimension.
//! Both densities of a dimension share one bandwidth, the Scott bandwidth of
//! all completed observations; with separate bandwidths a tight good set
//! against a spread bad set makes `l/g` track `l` alone and the search stalls.
//! Candidates are drawn from `l` and the one maximizing `sum log l/g` wins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::{erf, erf_inv};

use super::space::{Dimension, ParamValue, Params, SearchSpace};
use super::study::{Trial, TrialStatus};
use crate::error::Result;

pub const N_STARTUP: usize = 10;
pub const GAMMA: f64 = 0.25;
pub const N_CANDIDATES: usize = 24;
/// Lower bound on `g(x)` in the acquisition ratio.
pub const DENSITY_FLOOR: f64 = 1e-12;
/// Kernel bandwidth floor as a fraction of the (transformed) range.
pub const BANDWIDTH_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpeConfig {
    pub n_startup: usize,
    pub gamma: f64,
    pub n_candidates: usize,
}

impl Default for TpeConfig {
    fn default() -> Self {
        TpeConfig { n_startup: N_STARTUP, gamma: GAMMA, n_candidates: N_CANDIDATES }
    }
}

/// RNG for trial `number` of a study seeded with `seed`.
pub fn trial_rng(seed: u64, number: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(number as u64);
    rng
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn std_normal_quantile(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0)
}

/// Continuous dimension mapped to an internal interval (log for log dims).
#[derive(Debug, Clone, Copy)]
struct Numeric {
    lo: f64,
    hi: f64,
    log: bool,
    int: bool,
}

impl Numeric {
    fn of(d: &Dimension) -> Option<Self> {
        match *d {
            Dimension::LogUniform { lo, hi } => Some(Numeric { lo: lo.ln(), hi: hi.ln(), log: true, int: false }),
            Dimension::Uniform { lo, hi } => Some(Numeric { lo, hi, log: false, int: false }),
            Dimension::Int { lo, hi } => Some(Numeric { lo: lo as f64, hi: hi as f64, log: false, int: true }),
            Dimension::Categorical { .. } => None,
        }
    }

    fn to_internal(self, v: &ParamValue) -> Option<f64> {
        let x = v.as_f64()?;
        Some(if self.log { x.ln() } else { x })
    }

    /// Snap an internal value to what would be reported, still internal.
    fn snap(&self, u: f64) -> f64 {
        let u = u.clamp(self.lo, self.hi);
        if self.int {
            u.round().clamp(self.lo, self.hi)
        } else {
            u
        }
    }

    fn to_value(self, u: f64, d: &Dimension) -> ParamValue {
        match *d {
            Dimension::LogUniform { lo, hi } => ParamValue::Float(u.exp().clamp(lo, hi)),
            Dimension::Uniform { lo, hi } => ParamValue::Float(u.clamp(lo, hi)),
            Dimension::Int { lo, hi } => ParamValue::Int((u.round() as i64).clamp(lo, hi)),
            Dimension::Categorical { .. } => unreachable!("numeric dimension"),
        }
    }
}

/// Mixture of truncated Gaussians, one per observation, equal weights.
#[derive(Debug, Clone)]
pub struct Parzen {
    mus: Vec<f64>,
    sigma: f64,
    lo: f64,
    hi: f64,
}

impl Parzen {
    /// Scott bandwidth of `obs`, `1.06 sd n^-1/5`, floored at 1% of the range.
    pub fn fit(obs: &[f64], lo: f64, hi: f64) -> Self {
        Self::with_bandwidth(obs, scott_bandwidth(obs, lo, hi), lo, hi)
    }

    pub fn with_bandwidth(obs: &[f64], sigma: f64, lo: f64, hi: f64) -> Self {
        Parzen { mus: obs.to_vec(), sigma, lo, hi }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if self.mus.is_empty() {
            return 1.0 / (self.hi - self.lo);
        }
        let s = self.sigma;
        let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
        let total: f64 = self
            .mus
            .iter()
            .map(|&m| {
                let mass = std_normal_cdf((self.hi - m) / s) - std_normal_cdf((self.lo - m) / s);
                norm * (-0.5 * ((x - m) / s).powi(2)).exp() / mass.max(1e-300)
            })
            .sum();
        total / self.mus.len() as f64
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.mus.is_empty() {
            return rng.random_range(self.lo..=self.hi);
        }
        let m = self.mus[rng.random_range(0..self.mus.len())];
        let s = self.sigma;
        let (a, b) = (std_normal_cdf((self.lo - m) / s), std_normal_cdf((self.hi - m) / s));
        let u = a + (b - a) * rng.random::<f64>();
        let x = m + s * std_normal_quantile(u.clamp(1e-300, 1.0 - 1e-16));
        if x.is_finite() {
            x.clamp(self.lo, self.hi)
        } else {
            m.clamp(self.lo, self.hi)
        }
    }
}

pub fn scott_bandwidth(obs: &[f64], lo: f64, hi: f64) -> f64 {
    let floor = BANDWIDTH_FLOOR * (hi - lo);
    if obs.len() < 2 {
        return floor;
    }
    let n = obs.len() as f64;
    let mean = obs.iter().sum::<f64>() / n;
    let sd = (obs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    (1.06 * sd * n.powf(-0.2)).max(floor)
}

/// Add-one smoothed category frequencies.
fn categorical_probs(obs: &[usize], k: usize) -> Vec<f64> {
    let mut counts = vec![1.0; k];
    for &i in obs {
        counts[i] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    counts.iter().map(|c| c / total).collect()
}

fn sample_categorical<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Independent prior draw, uniform in each dimension's transformed space.
pub fn sample_prior<R: Rng>(space: &SearchSpace, rng: &mut R) -> Params {
    space
        .dims
        .iter()
        .map(|(name, d)| {
            let v = match d {
                Dimension::Categorical { choices } => {
                    ParamValue::Choice(choices[rng.random_range(0..choices.len())].clone())
                }
                _ => {
                    let n = Numeric::of(d).expect("numeric");
                    let u =
                        if n.int { rng.random_range(n.lo - 0.5..n.hi + 0.5) } else { rng.random_range(n.lo..=n.hi) };
                    n.to_value(u, d)
                }
            };
            (name.clone(), v)
        })
        .collect()
}

/// Completed trials split into (good, bad): the best `ceil(gamma n)` by
/// objective, ties broken by trial number.
fn split_trials(trials: &[Trial], gamma: f64) -> (Vec<&Trial>, Vec<&Trial>) {
    let mut done: Vec<&Trial> = trials.iter().filter(|t| t.status == TrialStatus::Complete).collect();
    done.sort_by(|a, b| {
        let (va, vb) = (a.value.unwrap_or(f64::NEG_INFINITY), b.value.unwrap_or(f64::NEG_INFINITY));
        vb.total_cmp(&va).then(a.number.cmp(&b.number))
    });
    let n_good = ((gamma * done.len() as f64).ceil() as usize).clamp(1, done.len().max(1));
    let bad = done.split_off(n_good.min(done.len()));
    (done, bad)
}

/// Next parameter set given the trial history. `rng` should be
/// [`trial_rng`] of the new trial for reproducible studies.
pub fn tpe_suggest<R: Rng>(space: &SearchSpace, trials: &[Trial], cfg: &TpeConfig, rng: &mut R) -> Result<Params> {
    space.validate()?;
    let completed = trials.iter().filter(|t| t.status == TrialStatus::Complete).count();
    if completed < cfg.n_startup.max(2) {
        return Ok(sample_prior(space, rng));
    }
    let (good, bad) = split_trials(trials, cfg.gamma);

    enum Model {
        Num(Numeric, Parzen, Parzen),
        Cat(Vec<f64>, Vec<f64>),
    }
    let models: Vec<Model> = space
        .dims
        .iter()
        .map(|(name, d)| match d {
            Dimension::Categorical { choices } => {
                let idx = |ts: &[&Trial]| -> Vec<usize> {
                    ts.iter()
                        .filter_map(|t| match t.params.get(name) {
                            Some(ParamValue::Choice(c)) => choices.iter().position(|x| x == c),
                            _ => None,
                        })
                        .collect()
                };
                Model::Cat(categorical_probs(&idx(&good), choices.len()), categorical_probs(&idx(&bad), choices.len()))
            }
            _ => {
                let n = Numeric::of(d).expect("numeric");
                let obs = |ts: &[&Trial]| -> Vec<f64> {
                    ts.iter().filter_map(|t| t.params.get(name).and_then(|v| n.to_internal(v))).collect()
                };
                let (lo_obs, hi_obs) = (obs(&good), obs(&bad));
                let all: Vec<f64> = lo_obs.iter().chain(&hi_obs).copied().collect();
                let sigma = scott_bandwidth(&all, n.lo, n.hi);
                Model::Num(
                    n,
                    Parzen::with_bandwidth(&lo_obs, sigma, n.lo, n.hi),
                    Parzen::with_bandwidth(&hi_obs, sigma, n.lo, n.hi),
                )
            }
        })
        .collect();

    enum Draw {
        Num(f64),
        Cat(usize),
    }
    let mut best: Option<(f64, Vec<Draw>)> = None;
    for _ in 0..cfg.n_candidates.max(1) {
        let mut score = 0.0;
        let mut draws = Vec::with_capacity(models.len());
        for m in &models {
            match m {
                Model::Num(n, l, g) => {
                    let u = n.snap(l.sample(rng));
                    score += l.pdf(u).max(DENSITY_FLOOR).ln() - g.pdf(u).max(DENSITY_FLOOR).ln();
                    draws.push(Draw::Num(u));
                }
                Model::Cat(l, g) => {
                    let i = sample_categorical(l, rng);
                    score += l[i].ln() - g[i].max(DENSITY_FLOOR).ln();
                    draws.push(Draw::Cat(i));
                }
            }
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, draws));
        }
    }
    let (_, draws) = best.expect("at least one candidate");
    Ok(space
        .dims
        .iter()
        .zip(draws)
        .map(|((name, d), draw)| {
            let v = match (d, draw) {
                (Dimension::Categorical { choices }, Draw::Cat(i)) => ParamValue::Choice(choices[i].clone()),
                (_, Draw::Num(u)) => Numeric::of(d).expect("numeric").to_value(u, d),
                _ => unreachable!("draw kind follows dimension kind"),
            };
            (name.clone(), v)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parzen_integrates_to_one() {
        let p = Parzen::fit(&[0.1, 0.15, 0.9], 0.0, 1.0);
        let n = 20_000;
        let integral: f64 = (0..n).map(|i| p.pdf((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
        assert!((integral - 1.0).abs() < 1e-3, "{integral}");
    }

    #[test]
    fn bandwidth_floor() {
        let p = Parzen::fit(&[0.5; 5], 0.0, 10.0);
        assert_eq!(p.sigma, 0.1);
    }

    #[test]
    fn add_one_smoothing() {
        assert_eq!(categorical_probs(&[0, 0, 1], 3), vec![0.5, 2.0 / 6.0, 1.0 / 6.0]);
    }
}
