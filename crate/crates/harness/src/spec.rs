//! Experiment specification files.
//!
//! A spec is TOML: top-level run settings, one `[problem]` table and one or
//! more `[[solver]]` tables. Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! seeds = [1, 2, 3]
//!
//! [problem]
//! kind = "quadratic"
//! d = 10
//! d_prime = 10
//! singular_values = [0.5, 1.0]
//! q = -0.3
//! mu_y = 0.5
//!
//! [[solver]]
//! name = "pes-ogda"
//! method = "ogda"
//! schedule = "theorem1"
//! eps = 1e-3
//! epochs = 20
//! ```

use std::collections::HashSet;
use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid spec: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Mixed into every run's random stream.
    #[serde(default)]
    pub seed: u64,
    pub seeds: Vec<u64>,
    /// Per-run cap on stochastic gradient calls.
    pub budget: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Fill the `elapsed_s` column. Off by default so outputs are
    /// reproducible byte for byte.
    #[serde(default)]
    pub record_timing: bool,
    pub problem: ProblemSpec,
    #[serde(rename = "solver")]
    pub solvers: Vec<SolverSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `f = xᵀAy − (μ_y/2)‖y‖² + (q/2)‖x‖²` with a random `A` whose
    /// singular values are evenly spaced over `singular_values = [lo, hi]`.
    Quadratic {
        d: usize,
        d_prime: usize,
        singular_values: [f64; 2],
        q: f64,
        mu_y: f64,
        #[serde(default)]
        sigma: f64,
        #[serde(default)]
        coupling_seed: u64,
        /// Restrict `y` to a centered ball.
        y_radius: Option<f64>,
        #[serde(default = "one")]
        start_x: f64,
        #[serde(default)]
        start_y: f64,
    },
    /// The scalar `f = xy − y²/2 − x²/4`.
    ScalarExample {
        #[serde(default)]
        sigma: f64,
        #[serde(default = "one")]
        start_x: f64,
        #[serde(default)]
        start_y: f64,
    },
    /// Linear AUC surrogate on synthetic imbalanced data, or on a CSV file.
    Auc {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_auc_d")]
        d: usize,
        #[serde(default = "default_ratio")]
        positive_ratio: f64,
        #[serde(default)]
        data_seed: u64,
        /// Held-out samples generated alongside the training set.
        #[serde(default)]
        holdout: usize,
        data_file: Option<PathBuf>,
        holdout_file: Option<PathBuf>,
    },
}

fn one() -> f64 {
    1.0
}
fn default_n() -> usize {
    2000
}
fn default_auc_d() -> usize {
    20
}
fn default_ratio() -> f64 {
    0.09
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ogda,
    Sgda,
    Adagrad,
    StocAgda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleSource {
    Theorem1,
    Theorem2,
    Adagrad,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub name: String,
    pub method: Method,
    pub schedule: Option<ScheduleSource>,
    /// Target accuracy for theorem schedules.
    pub eps: Option<f64>,
    /// Initial-gap bound; computed from the problem when omitted.
    pub eps0: Option<f64>,
    pub eta0: Option<f64>,
    /// Overrides the theorem's epoch count.
    pub epochs: Option<usize>,
    /// Multiplies every epoch length.
    pub length_multiplier: Option<f64>,
    pub batch_size: Option<usize>,
    // manual schedule
    pub gamma: Option<f64>,
    pub decay: Option<f64>,
    pub length0: Option<u64>,
    pub growth: Option<f64>,
    // adagrad
    pub delta: Option<f64>,
    pub alpha_growth: Option<f64>,
    pub m: Option<f64>,
    pub cap_t: Option<u64>,
    // stoc-agda
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub lambda: Option<f64>,
    pub iterations: Option<u64>,
    pub stride: Option<u64>,
}

impl SolverSpec {
    /// A block with only `name` and `method` set.
    pub fn new(name: impl Into<String>, method: Method) -> Self {
        Self {
            name: name.into(),
            method,
            schedule: None,
            eps: None,
            eps0: None,
            eta0: None,
            epochs: None,
            length_multiplier: None,
            batch_size: None,
            gamma: None,
            decay: None,
            length0: None,
            growth: None,
            delta: None,
            alpha_growth: None,
            m: None,
            cap_t: None,
            tau1: None,
            tau2: None,
            lambda: None,
            iterations: None,
            stride: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.seeds.is_empty() {
            return invalid("`seeds` must not be empty");
        }
        if self.solvers.is_empty() {
            return invalid("at least one [[solver]] block is required");
        }
        let mut names = HashSet::new();
        for s in &self.solvers {
            if s.name.is_empty()
                || !s
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
            {
                return invalid(format!(
                    "solver name {:?} must be nonempty and use only [A-Za-z0-9-_.]",
                    s.name
                ));
            }
            if !names.insert(s.name.as_str()) {
                return invalid(format!("duplicate solver name {:?}", s.name));
            }
            s.validate()?;
        }
        self.problem.validate()
    }
}

impl ProblemSpec {
    fn validate(&self) -> Result<(), SpecError> {
        match self {
            ProblemSpec::Quadratic {
                d,
                d_prime,
                singular_values,
                mu_y,
                sigma,
                ..
            } => {
                if *d == 0 || *d_prime == 0 {
                    return invalid("problem dimensions must be positive");
                }
                if !(singular_values[0] > 0.0 && singular_values[0] <= singular_values[1]) {
                    return invalid("singular_values must satisfy 0 < lo <= hi");
                }
                if !(*mu_y > 0.0) || !(*sigma >= 0.0) {
                    return invalid("mu_y must be positive and sigma nonnegative");
                }
            }
            ProblemSpec::ScalarExample { sigma, .. } => {
                if !(*sigma >= 0.0) {
                    return invalid("sigma must be nonnegative");
                }
            }
            ProblemSpec::Auc {
                positive_ratio,
                data_file,
                ..
            } => {
                if data_file.is_none() && !(*positive_ratio > 0.0 && *positive_ratio < 1.0) {
                    return invalid("positive_ratio must lie in (0, 1)");
                }
            }
        }
        Ok(())
    }
}

impl SolverSpec {
    fn validate(&self) -> Result<(), SpecError> {
        let name = &self.name;
        match self.method {
            Method::StocAgda => {
                if self.schedule.is_some() {
                    return invalid(format!("solver {name}: stoc-agda takes no schedule"));
                }
                for (key, v) in [
                    ("tau1", self.tau1),
                    ("tau2", self.tau2),
                    ("lambda", self.lambda),
                ] {
                    if v.is_none() {
                        return invalid(format!("solver {name}: stoc-agda needs `{key}`"));
                    }
                }
            }
            method => {
                let Some(schedule) = self.schedule else {
                    return invalid(format!("solver {name}: missing `schedule`"));
                };
                if schedule == ScheduleSource::Manual {
                    for (key, present) in [
                        ("gamma", self.gamma.is_some()),
                        ("eta0", self.eta0.is_some()),
                        ("decay", self.decay.is_some()),
                        ("length0", self.length0.is_some()),
                        ("growth", self.growth.is_some()),
                        ("epochs", self.epochs.is_some()),
                    ] {
                        if !present {
                            return invalid(format!(
                                "solver {name}: manual schedule needs `{key}`"
                            ));
                        }
                    }
                } else if self.eps.is_none() {
                    return invalid(format!("solver {name}: theorem schedules need `eps`"));
                }
                if (schedule == ScheduleSource::Adagrad) != (method == Method::Adagrad)
                    && schedule != ScheduleSource::Manual
                {
                    return invalid(format!(
                        "solver {name}: the adagrad schedule goes with the adagrad method"
                    ));
                }
                if method == Method::Adagrad && self.delta.is_none() {
                    return invalid(format!("solver {name}: adagrad needs `delta`"));
                }
            }
        }
        Ok(())
    }
}

pub fn parse_spec(text: &str) -> Result<ExperimentSpec, SpecError> {
    let spec: ExperimentSpec = toml::from_str(text)?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seeds = [1]
[problem]
kind = "scalar-example"
[[solver]]
name = "ogda"
method = "ogda"
schedule = "theorem1"
eps = 1e-3
"#;

    #[test]
    fn minimal_spec_parses() {
        let s = parse_spec(MINIMAL).unwrap();
        assert_eq!(s.solvers.len(), 1);
        assert!(!s.record_timing);
    }

    #[test]
    fn typo_names_key_and_line() {
        let text = MINIMAL.replace("eps = 1e-3", "eps = 1e-3\nett0 = 0.1");
        let err = parse_spec(&text).unwrap_err().to_string();
        assert!(err.contains("ett0"), "{err}");
        assert!(err.contains("line 10"), "{err}");
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = format!("{MINIMAL}\n[[solver]]\nname = \"ogda\"\nmethod = \"sgda\"\nschedule = \"theorem1\"\neps = 1e-3\n");
        assert!(matches!(parse_spec(&text), Err(SpecError::Invalid(m)) if m.contains("duplicate")));
    }

    #[test]
    fn unknown_section_rejected() {
        let text = format!("{MINIMAL}\n[extras]\nx = 1\n");
        assert!(parse_spec(&text).is_err());
    }
}
