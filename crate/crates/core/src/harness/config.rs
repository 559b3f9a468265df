use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::SmoothnessParam;
use crate::error::{Error, Result};
use crate::hypothesis::{Family, HypothesisClass};
use crate::online::AdversaryKind;

/// First line of every config file.
pub const CONFIG_HEADER: &str = "# smoothlearn-config v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    Online,
    DpAnswer,
    DpRelease,
    SmallDb,
    Brackets,
    MaxDeviation,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Online,
        ExperimentKind::DpAnswer,
        ExperimentKind::DpRelease,
        ExperimentKind::SmallDb,
        ExperimentKind::Brackets,
        ExperimentKind::MaxDeviation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Online => "online",
            ExperimentKind::DpAnswer => "dp-answer",
            ExperimentKind::DpRelease => "dp-release",
            ExperimentKind::SmallDb => "smalldb",
            ExperimentKind::Brackets => "brackets",
            ExperimentKind::MaxDeviation => "lemma31",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param("kind", format!("unknown experiment kind `{s}`")))
    }
}

/// Which mechanism `dp-answer` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnswerMechanism {
    Mwem,
    Smooth,
}

impl AnswerMechanism {
    pub fn name(self) -> &'static str {
        match self {
            AnswerMechanism::Mwem => "mwem",
            AnswerMechanism::Smooth => "smooth",
        }
    }
}

impl FromStr for AnswerMechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mwem" => Ok(AnswerMechanism::Mwem),
            "smooth" => Ok(AnswerMechanism::Smooth),
            _ => Err(Error::param("mechanism", format!("expected mwem or smooth, got `{s}`"))),
        }
    }
}

/// Everything one run needs. The domain is always the unit grid of `n`
/// midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub class: String,
    pub sigma: f64,
    pub horizon: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub seeds: usize,
    pub base_seed: u64,
    /// Online: adversary kind.
    pub adversary: String,
    /// Online: `hedge` or `halving`.
    pub learner: String,
    /// DP: number of records in the private dataset.
    pub records: usize,
    /// DP: number of evenly spaced threshold queries.
    pub queries: usize,
    pub mechanism: AnswerMechanism,
    /// DP: width (uniform mass) of the window the data is drawn from.
    pub window: f64,
    /// Cover radius override.
    pub gamma: Option<f64>,
    /// Cover sample size override.
    pub sample_size: Option<usize>,
    /// Subsampled net: draws `M` and released size `k`.
    pub net_draws: usize,
    pub net_size: usize,
    /// Max-deviation experiment: slab family size and Monte Carlo trials.
    pub family_size: usize,
    pub trials: usize,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        let mut c = Self {
            kind,
            n: 1024,
            class: "threshold1d".into(),
            sigma: 0.1,
            horizon: 1000,
            epsilon: 1.0,
            delta: 0.0,
            seeds: 1,
            base_seed: 0,
            adversary: "uncertainty".into(),
            learner: "hedge".into(),
            records: 500,
            queries: 64,
            mechanism: AnswerMechanism::Mwem,
            window: 0.3,
            gamma: None,
            sample_size: None,
            net_draws: 8,
            net_size: 6,
            family_size: 16,
            trials: 200,
            output: None,
        };
        match kind {
            ExperimentKind::DpAnswer | ExperimentKind::DpRelease => c.horizon = 10,
            ExperimentKind::SmallDb => {
                c.n = 16;
                c.queries = 8;
            }
            ExperimentKind::Brackets => {
                c.n = 1000;
                c.epsilon = 0.1;
            }
            ExperimentKind::MaxDeviation => {
                c.sigma = 0.0625;
                c.horizon = 400;
            }
            ExperimentKind::Online => {}
        }
        c
    }

    /// Checks every field the chosen kind reads.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param("n", "need at least two atoms"));
        }
        if self.seeds == 0 {
            return Err(Error::param("seeds", "need at least one seed"));
        }
        SmoothnessParam::new(self.sigma)?;
        let class = HypothesisClass::parse(&self.class)?;
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::param("gamma", format!("must lie in (0, 1], got {g}")));
            }
        }
        if self.sample_size == Some(0) {
            return Err(Error::param("sample_size", "must be positive"));
        }
        let positive_eps = || {
            if self.epsilon > 0.0 && self.epsilon.is_finite() {
                Ok(())
            } else {
                Err(Error::param(
                    "epsilon",
                    format!("must be positive, got {}", self.epsilon),
                ))
            }
        };
        let need_horizon = || {
            if self.horizon == 0 {
                Err(Error::param("T", "need at least one round"))
            } else {
                Ok(())
            }
        };
        let thresholds_only = |what: &str| {
            if matches!(class.family(), Family::Threshold1d) {
                Ok(())
            } else {
                Err(Error::param("class", format!("{what} supports threshold1d only")))
            }
        };
        match self.kind {
            ExperimentKind::Online => {
                need_horizon()?;
                AdversaryKind::parse(&self.adversary)?;
                match self.learner.as_str() {
                    "hedge" => {}
                    "halving" => thresholds_only("the halving learner")?,
                    other => {
                        return Err(Error::param(
                            "learner",
                            format!("expected hedge or halving, got `{other}`"),
                        ))
                    }
                }
            }
            ExperimentKind::DpAnswer | ExperimentKind::DpRelease | ExperimentKind::SmallDb => {
                positive_eps()?;
                if self.records == 0 {
                    return Err(Error::param("records", "need at least one record"));
                }
                if self.queries == 0 || self.queries > self.n + 1 {
                    return Err(Error::param(
                        "queries",
                        format!("need 1 ≤ queries ≤ N + 1, got {}", self.queries),
                    ));
                }
                if !(self.window > 0.0 && self.window <= 1.0) {
                    return Err(Error::param(
                        "window",
                        format!("must lie in (0, 1], got {}", self.window),
                    ));
                }
                if self.kind == ExperimentKind::SmallDb {
                    if self.net_draws == 0 || self.net_size == 0 {
                        return Err(Error::param("net_draws", "need M ≥ 1 and k ≥ 1"));
                    }
                } else {
                    need_horizon()?;
                }
                if self.kind == ExperimentKind::DpRelease
                    || (self.kind == ExperimentKind::DpAnswer && self.mechanism == AnswerMechanism::Smooth)
                {
                    if self.window < self.sigma {
                        return Err(Error::param(
                            "window",
                            format!("a window of mass {} is not {}-smooth", self.window, self.sigma),
                        ));
                    }
                    let per_atom = (self.records as f64 / (self.sigma * self.n as f64)).floor();
                    let atoms = (self.window * self.n as f64).ceil();
                    if per_atom * atoms < self.records as f64 {
                        return Err(Error::param(
                            "records",
                            "too many records for a σ-smooth dataset on the window",
                        ));
                    }
                }
            }
            ExperimentKind::Brackets => {
                thresholds_only("brackets")?;
                if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
                    return Err(Error::param(
                        "epsilon",
                        format!("must lie in (0, 1], got {}", self.epsilon),
                    ));
                }
            }
            ExperimentKind::MaxDeviation => {
                need_horizon()?;
                if self.trials == 0 {
                    return Err(Error::param("trials", "need at least one trial"));
                }
                let width = (self.n as f64 * self.sigma / 4.0).floor() as usize;
                if width == 0 || self.family_size == 0 || self.family_size * width > self.n {
                    return Err(Error::param(
                        "family_size",
                        format!(
                            "{} slabs of {width} atoms do not fit in {} atoms",
                            self.family_size, self.n
                        ),
                    ));
                }
            }
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::param("delta", format!("must lie in [0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    fn fields(&self, with_output: bool) -> Vec<(&'static str, &'static str, String)> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        let mut f = vec![
            ("kind", "str", self.kind.name().to_string()),
            ("n", "usize", self.n.to_string()),
            ("class", "str", self.class.clone()),
            ("sigma", "f64", format!("{:?}", self.sigma)),
            ("horizon", "usize", self.horizon.to_string()),
            ("epsilon", "f64", format!("{:?}", self.epsilon)),
            ("delta", "f64", format!("{:?}", self.delta)),
            ("seeds", "usize", self.seeds.to_string()),
            ("base_seed", "u64", self.base_seed.to_string()),
            ("adversary", "str", self.adversary.clone()),
            ("learner", "str", self.learner.clone()),
            ("records", "usize", self.records.to_string()),
            ("queries", "usize", self.queries.to_string()),
            ("mechanism", "str", self.mechanism.name().to_string()),
            ("window", "f64", format!("{:?}", self.window)),
            ("gamma", "f64?", opt(self.gamma.map(|g| format!("{g:?}")))),
            ("sample_size", "usize?", opt(self.sample_size.map(|m| m.to_string()))),
            ("net_draws", "usize", self.net_draws.to_string()),
            ("net_size", "usize", self.net_size.to_string()),
            ("family_size", "usize", self.family_size.to_string()),
            ("trials", "usize", self.trials.to_string()),
        ];
        if with_output {
            f.push((
                "output",
                "path?",
                opt(self.output.as_ref().map(|p| p.display().to_string())),
            ));
        }
        f
    }

    fn render(&self, with_output: bool) -> String {
        let mut s = String::from(CONFIG_HEADER);
        s.push('\n');
        for (k, ty, v) in self.fields(with_output) {
            let _ = writeln!(s, "{k}: {ty} = {v}");
        }
        s
    }

    /// `key: type = value` lines under a versioned header.
    pub fn to_text(&self) -> String {
        self.render(true)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some(h) if h == CONFIG_HEADER => {}
            Some(h) => return Err(Error::Parse(format!("expected header `{CONFIG_HEADER}`, got `{h}`"))),
            None => return Err(Error::Parse("empty config".into())),
        }
        let mut entries: Vec<(String, String, String)> = Vec::new();
        for line in lines {
            if line.starts_with('#') {
                continue;
            }
            let (lhs, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected `key: type = value`, got `{line}`")))?;
            let (key, ty) = lhs
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("missing type in `{line}`")))?;
            entries.push((key.trim().into(), ty.trim().into(), value.trim().into()));
        }
        let kind_text = entries
            .iter()
            .find(|e| e.0 == "kind")
            .ok_or_else(|| Error::Parse("missing `kind`".into()))?;
        let mut c = Self::new(kind_text.2.parse()?);
        let expected: Vec<(&str, &str)> = c.fields(true).iter().map(|(k, t, _)| (*k, *t)).collect();
        for (key, ty, value) in entries {
            let declared = expected
                .iter()
                .find(|(k, _)| *k == key)
                .ok_or_else(|| Error::Parse(format!("unknown key `{key}`")))?;
            if declared.1 != ty {
                return Err(Error::Parse(format!("key `{key}` has type {}, not {ty}", declared.1)));
            }
            c.set(&key, &value)?;
        }
        Ok(c)
    }

    /// Sets one field from its text form, as used by the file format and the
    /// command line.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Parse(format!("bad value `{v}` for `{key}`")))
        }
        fn opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
            if v == "none" {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        match key {
            "kind" => self.kind = value.parse()?,
            "n" => self.n = num(key, value)?,
            "class" => self.class = value.into(),
            "sigma" => self.sigma = num(key, value)?,
            "horizon" | "T" => self.horizon = num(key, value)?,
            "epsilon" | "eps" => self.epsilon = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "seeds" => self.seeds = num(key, value)?,
            "base_seed" | "seed" => self.base_seed = num(key, value)?,
            "adversary" => self.adversary = value.into(),
            "learner" => self.learner = value.into(),
            "records" => self.records = num(key, value)?,
            "queries" => self.queries = num(key, value)?,
            "mechanism" => self.mechanism = value.parse()?,
            "window" => self.window = num(key, value)?,
            "gamma" => self.gamma = opt(key, value)?,
            "sample_size" => self.sample_size = opt(key, value)?,
            "net_draws" | "M" => self.net_draws = num(key, value)?,
            "net_size" | "k" => self.net_size = num(key, value)?,
            "family_size" => self.family_size = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "output" | "out" => self.output = if value == "none" { None } else { Some(value.into()) },
            _ => return Err(Error::Parse(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// SHA-256 of the rendered config without the output path.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.render(false).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
