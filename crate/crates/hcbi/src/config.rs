//! Experiment configuration: a JSON document naming one experiment kind,
//! the model or schedule it runs on, and its numerical settings.
//!
//! Parsing collects every problem it finds, each with the path of the
//! offending field, instead of stopping at the first. Numerical settings
//! the experiment needs but the file omits are filled with documented
//! defaults, and the resolved document is what gets echoed into the
//! manifest, so the echo parses back to the same configuration.

use std::fmt;

use hawkes_cbi::cbi::CBIParams;
use hawkes_cbi::cmj::CmjSchedule;
use hawkes_cbi::harness::ScalingSchedule;
use hawkes_cbi::kernels::{HawkesModel, Shape};
use hawkes_cbi::shotnoise::{ResponseFunction, ResponseKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SimulateHawkes,
    Resolvent,
    Cbi,
    Riccati,
    ShotNoise,
    Cmj,
    ScalingReport,
    CollapseReport,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::SimulateHawkes,
        ExperimentKind::Resolvent,
        ExperimentKind::Cbi,
        ExperimentKind::Riccati,
        ExperimentKind::ShotNoise,
        ExperimentKind::Cmj,
        ExperimentKind::ScalingReport,
        ExperimentKind::CollapseReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SimulateHawkes => "simulate-hawkes",
            ExperimentKind::Resolvent => "resolvent",
            ExperimentKind::Cbi => "cbi",
            ExperimentKind::Riccati => "riccati",
            ExperimentKind::ShotNoise => "shot-noise",
            ExperimentKind::Cmj => "cmj",
            ExperimentKind::ScalingReport => "scaling-report",
            ExperimentKind::CollapseReport => "collapse-report",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn describe(self) -> &'static str {
        match self {
            ExperimentKind::SimulateHawkes => {
                "simulate a marked Hawkes model and test its compensator residuals"
            }
            ExperimentKind::Resolvent => {
                "solve resolvent equations against closed forms and the mass identity"
            }
            ExperimentKind::Cbi => {
                "Monte Carlo Laplace transforms of CBI diffusions against the Riccati formula"
            }
            ExperimentKind::Riccati => {
                "Riccati Laplace transforms against closed forms and moment equations"
            }
            ExperimentKind::ShotNoise => {
                "rescaled instantaneous and cumulative shot noise against CBI means"
            }
            ExperimentKind::Cmj => {
                "simulate a CMJ population and test its birth compensator residuals"
            }
            ExperimentKind::ScalingReport => {
                "rescaled Hawkes or CMJ birth-rate moments and transforms along an n ladder"
            }
            ExperimentKind::CollapseReport => {
                "age and residual-life distributions of a CMJ population along an n ladder"
            }
        }
    }

    /// Model sections: exactly one of each inner list is required.
    fn sections(self) -> &'static [&'static [&'static str]] {
        match self {
            ExperimentKind::SimulateHawkes => &[&["hawkes"]],
            ExperimentKind::Resolvent => &[&["resolvent"]],
            ExperimentKind::Cbi | ExperimentKind::Riccati => &[&["cbi"]],
            ExperimentKind::ShotNoise => &[&["schedule"], &["shot_noise"]],
            ExperimentKind::Cmj | ExperimentKind::CollapseReport => &[&["cmj_schedule"]],
            ExperimentKind::ScalingReport => &[&["schedule", "cmj_schedule"]],
        }
    }

    /// Numerics fields the experiment reads.
    fn numerics(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::SimulateHawkes => &["seed", "horizon", "paths", "times"],
            ExperimentKind::Resolvent => &["dt"],
            ExperimentKind::Cbi => &["seed", "dt", "paths", "times", "laplace_z"],
            ExperimentKind::Riccati => &["dt", "times", "laplace_z"],
            ExperimentKind::ShotNoise => &["seed", "dt", "n", "paths", "times"],
            ExperimentKind::Cmj => &["seed", "n", "horizon", "paths", "times"],
            ExperimentKind::ScalingReport => &["seed", "dt", "ns", "paths", "times", "laplace_z"],
            ExperimentKind::CollapseReport => &["seed", "ns", "paths", "horizon"],
        }
    }

    pub fn uses_paths(self) -> bool {
        self.numerics().contains(&"paths")
    }

    pub fn uses_seed(self) -> bool {
        self.numerics().contains(&"seed")
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Numerical settings. Times are in rescaled units wherever a model
/// sequence is involved.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplace_z: Option<Vec<f64>>,
}

impl Numerics {
    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.seed.is_some() {
            v.push("seed");
        }
        if self.dt.is_some() {
            v.push("dt");
        }
        if self.horizon.is_some() {
            v.push("horizon");
        }
        if self.paths.is_some() {
            v.push("paths");
        }
        if self.n.is_some() {
            v.push("n");
        }
        if self.ns.is_some() {
            v.push("ns");
        }
        if self.times.is_some() {
            v.push("times");
        }
        if self.laplace_z.is_some() {
            v.push("laplace_z");
        }
        v
    }

    fn fill_defaults(&mut self, kind: ExperimentKind) {
        use ExperimentKind as K;
        let uses = kind.numerics();
        if uses.contains(&"seed") {
            self.seed.get_or_insert(1);
        }
        if uses.contains(&"dt") {
            self.dt.get_or_insert(1e-3);
        }
        if uses.contains(&"horizon") {
            self.horizon.get_or_insert(match kind {
                K::SimulateHawkes => 10.0,
                K::Cmj => 2.0,
                _ => 1.0,
            });
        }
        if uses.contains(&"paths") {
            self.paths.get_or_insert(match kind {
                K::Cbi => 100_000,
                K::SimulateHawkes => 1000,
                K::CollapseReport => 400,
                _ => 10_000,
            });
        }
        if uses.contains(&"n") {
            self.n.get_or_insert(match kind {
                K::ShotNoise => 400.0,
                _ => 100.0,
            });
        }
        if uses.contains(&"ns") {
            self.ns.get_or_insert_with(|| vec![25.0, 100.0, 400.0]);
        }
        if uses.contains(&"laplace_z") {
            self.laplace_z.get_or_insert_with(|| vec![0.25, 0.5, 1.0]);
        }
        if uses.contains(&"times") && self.times.is_none() {
            self.times = Some(match kind {
                K::SimulateHawkes | K::Cmj => {
                    let h = self.horizon.unwrap_or(1.0);
                    vec![0.25 * h, 0.5 * h, 0.75 * h, h]
                }
                K::ShotNoise => vec![0.25, 0.5, 1.0, 2.0],
                K::ScalingReport => vec![0.5, 1.0, 2.0],
                _ => vec![0.25, 0.5, 1.0],
            });
        }
    }

    fn violations(&self, kind: ExperimentKind) -> Vec<String> {
        let mut errs = Vec::new();
        let mut positive = |name: &str, v: Option<f64>| {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    errs.push(format!(
                        "numerics.{name}: must be finite and positive, got {x}"
                    ));
                }
            }
        };
        positive("dt", self.dt);
        positive("horizon", self.horizon);
        if let Some(n) = self.n {
            if !(n >= 1.0 && n.is_finite()) {
                errs.push(format!("numerics.n: must be at least 1, got {n}"));
            }
        }
        if let Some(p) = self.paths {
            if p < 2 {
                errs.push(format!("numerics.paths: need at least 2 paths, got {p}"));
            }
        }
        if let Some(ns) = &self.ns {
            if ns.len() < 3 {
                errs.push(format!(
                    "numerics.ns: a report needs at least 3 values of n, got {}",
                    ns.len()
                ));
            }
            if ns.iter().any(|n| !(*n >= 1.0 && n.is_finite())) {
                errs.push("numerics.ns: every n must be finite and at least 1".into());
            }
            if ns.windows(2).any(|w| w[1] <= w[0]) {
                errs.push("numerics.ns: values must be strictly increasing".into());
            }
        }
        if let Some(ts) = &self.times {
            if ts.is_empty() {
                errs.push("numerics.times: need at least one time".into());
            }
            if ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                errs.push("numerics.times: times must be finite and nonnegative".into());
            }
            if ts.windows(2).any(|w| w[1] <= w[0]) {
                errs.push("numerics.times: times must be strictly increasing".into());
            }
            if kind == ExperimentKind::SimulateHawkes || kind == ExperimentKind::Cmj {
                if let (Some(h), Some(last)) = (self.horizon, ts.last()) {
                    if *last > h {
                        errs.push(format!(
                            "numerics.times: last time {last} exceeds the horizon {h}"
                        ));
                    }
                }
            }
        }
        if let Some(z) = &self.laplace_z {
            if z.is_empty() || z.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                errs.push("numerics.laplace_z: need finite nonnegative entries".into());
            }
        }
        errs
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("resolved")
    }
    pub fn dt(&self) -> f64 {
        self.dt.expect("resolved")
    }
    pub fn horizon(&self) -> f64 {
        self.horizon.expect("resolved")
    }
    pub fn paths(&self) -> usize {
        self.paths.expect("resolved")
    }
    pub fn n(&self) -> f64 {
        self.n.expect("resolved")
    }
    pub fn ns(&self) -> &[f64] {
        self.ns.as_deref().expect("resolved")
    }
    pub fn times(&self) -> &[f64] {
        self.times.as_deref().expect("resolved")
    }
    pub fn laplace_z(&self) -> &[f64] {
        self.laplace_z.as_deref().expect("resolved")
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// One resolvent test case: the kernel `mass · shape`, solved on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventCase {
    pub shape: Shape,
    pub mass: f64,
    pub horizon: f64,
    /// Compare with the closed form (exponential shapes only), check the
    /// error halves with the step, and cross-check the Neumann series.
    #[serde(default, skip_serializing_if = "is_false")]
    pub closed_form: bool,
}

/// Rescaled-resolvent errors along an n ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaledSection {
    pub schedule: ScalingSchedule,
    pub ns: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Grid step in original time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSection {
    pub cases: Vec<ResolventCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescaled: Option<RescaledSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotNoiseSection {
    pub instantaneous: ResponseFunction,
    pub cumulative: ResponseFunction,
    /// Rescaled times at which the cumulative response is compared.
    pub cumulative_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

/// A parsed and validated experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hawkes: Option<HawkesModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScalingSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cmj_schedule: Option<CmjSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cbi: Option<Vec<CBIParams>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent: Option<ResolventSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_noise: Option<ShotNoiseSection>,
}

const TOP_LEVEL: [&str; 11] = [
    "experiment",
    "name",
    "description",
    "numerics",
    "output",
    "hawkes",
    "schedule",
    "cmj_schedule",
    "cbi",
    "resolvent",
    "shot_noise",
];

const MODEL_SECTIONS: [&str; 6] = [
    "hawkes",
    "schedule",
    "cmj_schedule",
    "cbi",
    "resolvent",
    "shot_noise",
];

/// All problems found in a configuration, one per line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

fn section<T: DeserializeOwned>(
    obj: &serde_json::Map<String, Value>,
    key: &str,
    errs: &mut Vec<String>,
) -> Option<T> {
    let v = obj.get(key)?;
    match serde_path_to_error::deserialize::<_, T>(v) {
        Ok(x) => Some(x),
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." || path.is_empty() {
                errs.push(format!("{key}: {inner}"));
            } else {
                errs.push(format!("{key}.{path}: {inner}"));
            }
            None
        }
    }
}

fn prefixed(prefix: &str, v: Vec<String>) -> impl Iterator<Item = String> + '_ {
    v.into_iter().map(move |e| format!("{prefix}.{e}"))
}

/// Parses, validates and resolves defaults; reports every violation found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| ConfigErrors(vec![format!("syntax: {e}")]))?;
    let obj = match root {
        Value::Object(m) => m,
        _ => {
            return Err(ConfigErrors(vec![
                "config: the document must be a JSON object".into(),
            ]))
        }
    };
    let mut errs = Vec::new();
    for key in obj.keys() {
        if !TOP_LEVEL.contains(&key.as_str()) {
            errs.push(format!(
                "{key}: unknown key (expected one of {})",
                TOP_LEVEL.join(", ")
            ));
        }
    }
    let kind = match obj.get("experiment") {
        None => {
            errs.push("experiment: missing".into());
            None
        }
        Some(Value::String(s)) => match ExperimentKind::from_name(s) {
            Some(k) => Some(k),
            None => {
                let all: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                errs.push(format!(
                    "experiment: unknown kind `{s}` (expected one of {})",
                    all.join(", ")
                ));
                None
            }
        },
        Some(_) => {
            errs.push("experiment: must be a string".into());
            None
        }
    };
    let name: Option<String> = section(&obj, "name", &mut errs);
    let description: Option<String> = section(&obj, "description", &mut errs);
    let mut numerics: Numerics = section(&obj, "numerics", &mut errs).unwrap_or_default();
    let output: Option<OutputSection> = section(&obj, "output", &mut errs);
    let hawkes: Option<HawkesModel> = section(&obj, "hawkes", &mut errs);
    let schedule: Option<ScalingSchedule> = section(&obj, "schedule", &mut errs);
    let cmj_schedule: Option<CmjSchedule> = section(&obj, "cmj_schedule", &mut errs);
    let cbi: Option<Vec<CBIParams>> = section(&obj, "cbi", &mut errs);
    let resolvent: Option<ResolventSection> = section(&obj, "resolvent", &mut errs);
    let shot_noise: Option<ShotNoiseSection> = section(&obj, "shot_noise", &mut errs);

    if let Some(kind) = kind {
        let groups = kind.sections();
        for key in MODEL_SECTIONS {
            if obj.contains_key(key) && !groups.iter().any(|g| g.contains(&key)) {
                errs.push(format!("{key}: section is not used by experiment `{kind}`"));
            }
        }
        for group in groups {
            let present: Vec<&&str> = group.iter().filter(|k| obj.contains_key(**k)).collect();
            match present.len() {
                0 if group.len() == 1 => {
                    errs.push(format!("{}: required by experiment `{kind}`", group[0]))
                }
                0 => errs.push(format!(
                    "experiment `{kind}` needs one of the sections {}",
                    group.join(", ")
                )),
                1 => {}
                _ => errs.push(format!(
                    "sections {} are mutually exclusive",
                    group.join(", ")
                )),
            }
        }
        for field in numerics.present() {
            if !kind.numerics().contains(&field) {
                errs.push(format!("numerics.{field}: not used by experiment `{kind}`"));
            }
        }
        numerics.fill_defaults(kind);
        errs.extend(numerics.violations(kind));
    }

    if let Some(m) = &hawkes {
        if let Err(e) = m.validate() {
            errs.push(format!("hawkes: {e}"));
        }
    }
    if let Some(s) = &schedule {
        errs.extend(prefixed("schedule", s.violations()));
    }
    if let Some(s) = &cmj_schedule {
        errs.extend(prefixed("cmj_schedule", s.violations()));
    }
    if let Some(cases) = &cbi {
        if cases.is_empty() {
            errs.push("cbi: need at least one parameter set".into());
        }
        for (k, p) in cases.iter().enumerate() {
            errs.extend(p.violations().into_iter().map(|e| format!("cbi[{k}].{e}")));
        }
    }
    if let Some(r) = &resolvent {
        errs.extend(resolvent_violations(r));
    }
    if let (Some(s), Some(ExperimentKind::ShotNoise)) = (&schedule, kind) {
        if s.d != 1 {
            errs.push(format!(
                "schedule.d: the shot-noise experiment needs a single-type schedule, got d={}",
                s.d
            ));
        }
    }
    if let Some(s) = &shot_noise {
        for (name, r, kind) in [
            (
                "instantaneous",
                &s.instantaneous,
                ResponseKind::Instantaneous,
            ),
            ("cumulative", &s.cumulative, ResponseKind::Cumulative),
        ] {
            if let Err(e) = r.validate() {
                errs.push(format!("shot_noise.{name}: {e}"));
            }
            if r.kind != kind {
                errs.push(format!("shot_noise.{name}.kind: must be `{name}`"));
            }
        }
        if s.cumulative_times.is_empty()
            || s.cumulative_times
                .iter()
                .any(|t| !(*t > 0.0 && t.is_finite()))
            || s.cumulative_times.windows(2).any(|w| w[1] <= w[0])
        {
            errs.push("shot_noise.cumulative_times: need increasing positive times".into());
        }
    }

    if !errs.is_empty() {
        return Err(ConfigErrors(errs));
    }
    Ok(ExperimentConfig {
        experiment: kind.expect("no errors"),
        name,
        description,
        numerics,
        output,
        hawkes,
        schedule,
        cmj_schedule,
        cbi,
        resolvent,
        shot_noise,
    })
}

fn resolvent_violations(r: &ResolventSection) -> Vec<String> {
    let mut errs = Vec::new();
    if r.cases.is_empty() {
        errs.push("resolvent.cases: need at least one case".into());
    }
    for (k, c) in r.cases.iter().enumerate() {
        let p = format!("resolvent.cases[{k}]");
        if let Err(e) = c.shape.validate() {
            errs.push(format!("{p}.shape: {e}"));
        } else if (c.shape.mass() - 1.0).abs() > 1e-12 && !matches!(c.shape, Shape::Table { .. }) {
            errs.push(format!("{p}.shape: parametric shapes must have unit mass"));
        }
        if !(c.mass >= 0.0 && c.mass.is_finite()) {
            errs.push(format!(
                "{p}.mass: must be finite and nonnegative, got {}",
                c.mass
            ));
        }
        if !(c.horizon > 0.0 && c.horizon.is_finite()) {
            errs.push(format!("{p}.horizon: must be positive, got {}", c.horizon));
        }
        if c.closed_form && !matches!(c.shape, Shape::Exponential { .. }) {
            errs.push(format!(
                "{p}.closed_form: only available for exponential shapes"
            ));
        }
    }
    if let Some(s) = &r.rescaled {
        errs.extend(prefixed(
            "resolvent.rescaled.schedule",
            s.schedule.violations(),
        ));
        if s.ns.len() < 3
            || s.ns.iter().any(|n| !(*n >= 1.0))
            || s.ns.windows(2).any(|w| w[1] <= w[0])
        {
            errs.push("resolvent.rescaled.ns: need at least 3 increasing values >= 1".into());
        }
        if let Some(dt) = s.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                errs.push(format!("resolvent.rescaled.dt: must be positive, got {dt}"));
            }
        }
        if let Some(beta) = s.beta {
            if s.schedule.violations().is_empty() {
                let lb = s.schedule.lambda_b();
                if !(beta >= 0.0 && beta > lb) {
                    errs.push(format!("resolvent.rescaled.beta: must be >= 0 and exceed lambda_b = {lb}, got {beta}"));
                }
            }
        }
    }
    errs
}

impl ExperimentConfig {
    /// The resolved configuration as pretty JSON; parses back to `self`.
    pub fn echo(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.experiment.name().to_string())
    }

    /// Applies command-line overrides, re-checking what they touch.
    pub fn with_overrides(
        mut self,
        seed: Option<u64>,
        paths: Option<usize>,
    ) -> Result<Self, ConfigErrors> {
        let mut errs = Vec::new();
        if let Some(s) = seed {
            if self.experiment.uses_seed() {
                self.numerics.seed = Some(s);
            } else {
                errs.push(format!(
                    "--seed: experiment `{}` is deterministic",
                    self.experiment
                ));
            }
        }
        if let Some(p) = paths {
            if !self.experiment.uses_paths() {
                errs.push(format!(
                    "--paths: experiment `{}` has no Monte Carlo paths",
                    self.experiment
                ));
            } else if p < 2 {
                errs.push(format!("--paths: need at least 2 paths, got {p}"));
            } else {
                self.numerics.paths = Some(p);
            }
        }
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(ConfigErrors(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiment": "simulate-hawkes",
        "hawkes": {
            "d": 1,
            "kernels": [[
                {"shape": {"family": "exponential", "rate": 1.0}, "base_amplitude": 0.5},
                {"shape": {"family": "exponential", "rate": 1.0}, "base_amplitude": 1.0}
            ]],
            "mark_dists": [
                {"family": "constant", "amplitude": [1.0]},
                {"family": "constant", "amplitude": [1.0]}
            ],
            "immigration_rate": 1.0
        }
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.numerics.seed, Some(1));
        assert_eq!(c.numerics.horizon, Some(10.0));
        assert_eq!(
            c.numerics.times.as_deref(),
            Some(&[2.5, 5.0, 7.5, 10.0][..])
        );
        assert!(c.numerics.dt.is_none());
        assert_eq!(parse_config(&c.echo()).unwrap(), c);
    }

    #[test]
    fn every_problem_is_reported() {
        let text = MINIMAL.replace(
            r#""experiment": "simulate-hawkes","#,
            r#""experiment": "simulate-hawkes", "numerics": {"horizon": -1, "ns": [1, 2, 3]}, "bogus": 1,"#,
        );
        let e = parse_config(&text).unwrap_err().0;
        assert!(
            e.iter().any(|m| m.starts_with("bogus: unknown key")),
            "{e:?}"
        );
        assert!(e.iter().any(|m| m.starts_with("numerics.horizon")), "{e:?}");
        assert!(
            e.iter().any(|m| m.starts_with("numerics.ns: not used")),
            "{e:?}"
        );
    }

    #[test]
    fn numerics_reject_unknown_fields_with_a_path() {
        let text = MINIMAL.replace(
            r#""experiment": "simulate-hawkes","#,
            r#""experiment": "simulate-hawkes", "numerics": {"horizn": 3},"#,
        );
        let e = parse_config(&text).unwrap_err().0;
        assert!(e[0].starts_with("numerics"), "{e:?}");
        assert!(e[0].contains("horizn"), "{e:?}");
    }
}
