use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::{
    Criterion, MaxFeatures, ModelKind, ModelSpec, RfHyperParams, SvmHyperParams, C_RANGE, GAMMA_RANGE, MAX_DEPTH_RANGE,
    MIN_SAMPLES_LEAF_RANGE, MIN_SAMPLES_SPLIT_RANGE, N_ESTIMATORS_RANGE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Dimension {
    LogUniform { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
    Int { lo: i64, hi: i64 },
    Categorical { choices: Vec<String> },
}

impl Dimension {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Dimension::LogUniform { lo, hi } => *lo > 0.0 && lo < hi && hi.is_finite(),
            Dimension::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Dimension::Int { lo, hi } => lo < hi,
            Dimension::Categorical { choices } => !choices.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("invalid search dimension {self:?}")))
        }
    }

    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (Dimension::LogUniform { lo, hi } | Dimension::Uniform { lo, hi }, ParamValue::Float(x)) => {
                x >= lo && x <= hi
            }
            (Dimension::Int { lo, hi }, ParamValue::Int(x)) => x >= lo && x <= hi,
            (Dimension::Categorical { choices }, ParamValue::Choice(c)) => choices.contains(c),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Choice(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Float(x) => Some(x),
            ParamValue::Int(i) => Some(i as f64),
            ParamValue::Choice(_) => None,
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

/// Named dimensions, sampled independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<(String, Dimension)>,
}

impl SearchSpace {
    pub fn new(dims: Vec<(String, Dimension)>) -> Result<Self> {
        let s = SearchSpace { dims };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::arg("empty search space"));
        }
        self.dims.iter().try_for_each(|(_, d)| d.validate())
    }

    pub fn contains(&self, p: &Params) -> bool {
        p.len() == self.dims.len() && self.dims.iter().all(|(n, d)| p.get(n).is_some_and(|v| d.contains(v)))
    }

    /// C and gamma, log-uniform on [1e-3, 1e3].
    pub fn svm() -> Self {
        SearchSpace {
            dims: vec![
                ("C".into(), Dimension::LogUniform { lo: C_RANGE.0, hi: C_RANGE.1 }),
                ("gamma".into(), Dimension::LogUniform { lo: GAMMA_RANGE.0, hi: GAMMA_RANGE.1 }),
            ],
        }
    }

    pub fn rf() -> Self {
        let int = |(lo, hi): (usize, usize)| Dimension::Int { lo: lo as i64, hi: hi as i64 };
        let cat = |c: &[&str]| Dimension::Categorical { choices: c.iter().map(|s| s.to_string()).collect() };
        SearchSpace {
            dims: vec![
                ("n_estimators".into(), int(N_ESTIMATORS_RANGE)),
                ("max_depth".into(), int(MAX_DEPTH_RANGE)),
                ("min_samples_split".into(), int(MIN_SAMPLES_SPLIT_RANGE)),
                ("min_samples_leaf".into(), int(MIN_SAMPLES_LEAF_RANGE)),
                ("max_features".into(), cat(&MaxFeatures::ALL.map(MaxFeatures::as_str))),
                ("criterion".into(), cat(&Criterion::ALL.map(Criterion::as_str))),
            ],
        }
    }

    pub fn for_model(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Svm => Self::svm(),
            ModelKind::Rf => Self::rf(),
        }
    }
}

fn get_f64(p: &Params, name: &str) -> Result<f64> {
    p.get(name).and_then(ParamValue::as_f64).ok_or_else(|| Error::arg(format!("missing numeric parameter {name}")))
}

fn get_usize(p: &Params, name: &str) -> Result<usize> {
    match p.get(name) {
        Some(ParamValue::Int(i)) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::arg(format!("missing integer parameter {name}"))),
    }
}

fn get_choice<'a>(p: &'a Params, name: &str) -> Result<&'a str> {
    match p.get(name) {
        Some(ParamValue::Choice(c)) => Ok(c),
        _ => Err(Error::arg(format!("missing categorical parameter {name}"))),
    }
}

/// Model spec for a parameter set drawn from [`SearchSpace::for_model`].
pub fn spec_from_params(kind: ModelKind, p: &Params) -> Result<ModelSpec> {
    let spec = match kind {
        ModelKind::Svm => ModelSpec::Svm(SvmHyperParams { c: get_f64(p, "C")?, gamma: get_f64(p, "gamma")? }),
        ModelKind::Rf => {
            let max_features = match get_choice(p, "max_features")? {
                "auto" => MaxFeatures::Auto,
                "sqrt" => MaxFeatures::Sqrt,
                "log2" => MaxFeatures::Log2,
                other => return Err(Error::arg(format!("unknown max_features {other:?}"))),
            };
            let criterion = match get_choice(p, "criterion")? {
                "gini" => Criterion::Gini,
                "entropy" => Criterion::Entropy,
                other => return Err(Error::arg(format!("unknown criterion {other:?}"))),
            };
            ModelSpec::Rf(RfHyperParams {
                n_estimators: get_usize(p, "n_estimators")?,
                max_depth: get_usize(p, "max_depth")?,
                min_samples_split: get_usize(p, "min_samples_split")?,
                min_samples_leaf: get_usize(p, "min_samples_leaf")?,
                max_features,
                criterion,
            })
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Inverse of [`spec_from_params`].
pub fn params_from_spec(spec: &ModelSpec) -> Params {
    let mut p = Params::new();
    match spec {
        ModelSpec::Svm(hp) => {
            p.insert("C".into(), ParamValue::Float(hp.c));
            p.insert("gamma".into(), ParamValue::Float(hp.gamma));
        }
        ModelSpec::Rf(hp) => {
            p.insert("n_estimators".into(), ParamValue::Int(hp.n_estimators as i64));
            p.insert("max_depth".into(), ParamValue::Int(hp.max_depth as i64));
            p.insert("min_samples_split".into(), ParamValue::Int(hp.min_samples_split as i64));
            p.insert("min_samples_leaf".into(), ParamValue::Int(hp.min_samples_leaf as i64));
            p.insert("max_features".into(), ParamValue::Choice(hp.max_features.as_str().into()));
            p.insert("criterion".into(), ParamValue::Choice(hp.criterion.as_str().into()));
        }
    }
    p
}
