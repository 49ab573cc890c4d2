//! Run configuration: a TOML file and command-line flags, merged with flags
//! taking precedence. Every leaf of the resolved configuration carries its
//! provenance (`file`, `flag`, `flag (overrides file)` or `default`).

use std::collections::BTreeMap;

use linagg::bounds::UnspecifiedConstants;
use linagg::erm::{NoiseLaw, NoiseSigma, ProblemSpec, Target};
use linagg::experiments::{campaign, CampaignConfig, GridPoint};
use linagg::smallball::{LambdaClass, DEFAULT_RANDOM_DIRECTIONS};
use linagg::{make_dictionary, DictionaryKind, DictionarySpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Smallball,
    Fejer,
    Erm,
    Bounds,
    Campaign,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Smallball => "smallball",
            Subcommand::Fejer => "fejer",
            Subcommand::Erm => "erm",
            Subcommand::Bounds => "bounds",
            Subcommand::Campaign => "campaign",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BoundsKind {
    TheoremA,
    Theorem2,
    Theorem4,
    Tails,
    Rio,
}

impl BoundsKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundsKind::TheoremA => "theorem-a",
            BoundsKind::Theorem2 => "theorem2",
            BoundsKind::Theorem4 => "theorem4",
            BoundsKind::Tails => "tails",
            BoundsKind::Rio => "rio",
        }
    }
}

/// Regression problem minus the dictionary, which has its own table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProblemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<NoiseSigma>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_law: Option<NoiseLaw>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SmallballSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_directions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FejerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
    /// Angle of the tail bound; omitted from the output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErmSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Adds the weighted-l1 diagnostics when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<BoundsKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0_fail: Option<f64>,
    #[serde(rename = "Cm_sq", default, skip_serializing_if = "Option::is_none")]
    pub cm_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(rename = "L1", default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(rename = "L2", default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_f_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_n: Option<f64>,
}

/// The `[campaign]` table; absent entries take the library defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CampaignSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_directions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_class: Option<LambdaClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Subcommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Directory receiving the artifacts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Worker threads for campaigns; 0 means one per core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<GridPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<DictionarySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smallball: Option<SmallballSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fejer: Option<FejerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erm: Option<ErmSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign: Option<CampaignSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<UnspecifiedConstants>,
}

pub type Provenance = BTreeMap<String, String>;

/// Every invalid field, one message each.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid configuration ({} problem{}):", self.0.len(), if self.0.len() == 1 { "" } else { "s" })?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Parses TOML; unknown keys anywhere in the document are errors.
pub fn parse_toml(text: &str) -> Result<RunConfig, ConfigErrors> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigErrors(vec![format!("syntax: {e}")]))?;
    let mut unknown = Vec::new();
    // Option layers show up as `?` segments; the user never typed them.
    let cfg: RunConfig = serde_ignored::deserialize(de, |path| {
        unknown.push(path.to_string().split('.').filter(|s| *s != "?").collect::<Vec<_>>().join("."))
    })
        .map_err(|e| ConfigErrors(vec![e.to_string().trim().to_string()]))?;
    if unknown.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(unknown.into_iter().map(|k| format!("unknown key `{k}`")).collect()))
    }
}

pub fn to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("run configuration serializes to TOML")
}

/// Internally tagged enums: replaced whole on merge and tracked as one leaf.
const TAGGED: [&str; 3] = ["problem.target", "problem.noise_sigma", "problem.noise_law"];

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn leaves(value: &Value, prefix: &str, out: &mut Vec<String>) {
    match value {
        Value::Object(map) if !map.is_empty() && !TAGGED.contains(&prefix) => {
            for (k, v) in map {
                leaves(v, &join(prefix, k), out);
            }
        }
        Value::Null => {}
        _ => out.push(prefix.to_string()),
    }
}

fn merge_values(base: &mut Value, top: Value, prefix: &str) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) if !TAGGED.contains(&prefix) => {
            for (k, v) in t {
                let path = join(prefix, &k);
                match b.get_mut(&k) {
                    Some(slot) => merge_values(slot, v, &path),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// `flags` (a partial config as JSON) over `file`, leaf by leaf.
pub fn merge(file: &RunConfig, flags: Value) -> Result<(RunConfig, Provenance), ConfigErrors> {
    let fv = serde_json::to_value(file).expect("config to json");
    let (mut file_leaves, mut flag_leaves) = (Vec::new(), Vec::new());
    leaves(&fv, "", &mut file_leaves);
    leaves(&flags, "", &mut flag_leaves);
    let mut prov = Provenance::new();
    for k in &file_leaves {
        prov.insert(k.clone(), "file".into());
    }
    for k in &flag_leaves {
        let overrides = file_leaves.iter().any(|f| f == k || f.starts_with(&format!("{k}.")) || k.starts_with(&format!("{f}.")));
        // A flag leaf that replaces a whole file table drops the table's leaves.
        prov.retain(|p, _| !p.starts_with(&format!("{k}.")));
        prov.insert(k.clone(), if overrides { "flag (overrides file)".into() } else { "flag".into() });
    }
    let mut merged = fv;
    merge_values(&mut merged, flags, "");
    // `--D` alone selects a dimension of the default family.
    if let Some(Value::Object(d)) = merged.get_mut("dictionary") {
        if !d.contains_key("kind") {
            d.insert("kind".into(), Value::from("fourier"));
            prov.insert("dictionary.kind".into(), "default".into());
        }
    }
    let cfg = serde_json::from_value(merged).map_err(|e| ConfigErrors(vec![format!("flags: {e}")]))?;
    Ok((cfg, prov))
}

fn fill<T: Clone>(slot: &mut Option<T>, default: T, path: &str, prov: &mut Provenance) -> T {
    if slot.is_none() {
        *slot = Some(default);
        prov.insert(path.to_string(), "default".into());
    }
    slot.clone().expect("filled")
}

fn need<T: Clone>(slot: &Option<T>, path: &str, errors: &mut Vec<String>) -> Option<T> {
    if slot.is_none() {
        errors.push(format!("{path} is required"));
    }
    slot.clone()
}

fn unit_open(v: f64, path: &str, errors: &mut Vec<String>) {
    if !(v > 0.0 && v < 1.0) {
        errors.push(format!("{path} must lie in (0, 1), got {v}"));
    }
}

fn check_dictionary(spec: &DictionarySpec, path: &str, errors: &mut Vec<String>) {
    if let Err(e) = make_dictionary(spec) {
        errors.push(format!("{path}: {e}"));
    }
}

fn default_dictionary() -> DictionarySpec {
    DictionarySpec::fourier(9)
}

impl RunConfig {
    pub fn subcommand(&self) -> Subcommand {
        self.subcommand.expect("resolved config names its subcommand")
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        let p = self.problem.clone().unwrap_or_default();
        ProblemSpec {
            dictionary: self.dictionary.clone().unwrap_or_else(default_dictionary),
            target: p.target.expect("resolved target"),
            noise_sigma: p.noise_sigma.expect("resolved noise level"),
            noise_law: p.noise_law.expect("resolved noise law"),
        }
    }

    pub fn constants(&self) -> UnspecifiedConstants {
        self.constants.unwrap_or_default()
    }

    pub fn campaign_config(&self) -> CampaignConfig {
        let c = self.campaign.clone().unwrap_or_default();
        let mut cfg = CampaignConfig::new(self.problem_spec(), self.grid.clone().unwrap_or_default(), 100, self.seed.unwrap_or(0));
        cfg.replicates = c.replicates.unwrap_or(cfg.replicates);
        cfg.epsilon_grid = c.epsilon_grid.unwrap_or(cfg.epsilon_grid);
        cfg.x_grid = c.x_grid.unwrap_or(cfg.x_grid);
        cfg.x = c.x.unwrap_or(cfg.x);
        cfg.kappa0 = c.kappa0.unwrap_or(cfg.kappa0);
        cfg.random_directions = c.random_directions.unwrap_or(cfg.random_directions);
        cfg.nu = c.nu.unwrap_or(cfg.nu);
        cfg.lambda_class = c.lambda_class;
        cfg.z = c.z.unwrap_or(cfg.z);
        cfg.tail_epsilon = c.tail_epsilon;
        cfg.alpha = c.alpha.unwrap_or(cfg.alpha);
        cfg.constants = self.constants();
        cfg
    }

    /// Fills defaults for the chosen subcommand and validates; the error
    /// lists every invalid field.
    pub fn resolve(mut self, prov: &mut Provenance) -> Result<RunConfig, ConfigErrors> {
        let mut errors = Vec::new();
        let Some(sub) = self.subcommand else {
            return Err(ConfigErrors(vec!["subcommand is required".into()]));
        };
        fill(&mut self.seed, 0, "seed", prov);
        fill(&mut self.output, ".".into(), "output", prov);
        fill(&mut self.workers, 0, "workers", prov);
        if let Some(c) = &self.constants {
            for (name, v) in [("A0", c.a0), ("A1_minus", c.a1_minus), ("A_minus", c.a_minus), ("A_plus", c.a_plus)] {
                if !(v > 0.0 && v.is_finite()) {
                    errors.push(format!("constants.{name} must be positive, got {v}"));
                }
            }
        }
        match sub {
            Subcommand::Smallball => {
                let d = fill(&mut self.dictionary, default_dictionary(), "dictionary", prov);
                check_dictionary(&d, "dictionary", &mut errors);
                let s = self.smallball.get_or_insert_with(Default::default);
                unit_open(fill(&mut s.kappa0, 0.5, "smallball.kappa0", prov), "smallball.kappa0", &mut errors);
                fill(&mut s.random_directions, DEFAULT_RANDOM_DIRECTIONS, "smallball.random_directions", prov);
            }
            Subcommand::Fejer => {
                let f = self.fejer.get_or_insert_with(Default::default);
                if let Some(l) = need(&f.l, "fejer.l", &mut errors) {
                    if l == 0 {
                        errors.push("fejer.l must be at least 1".into());
                    }
                }
                unit_open(fill(&mut f.kappa0, 0.5, "fejer.kappa0", prov), "fejer.kappa0", &mut errors);
                if let Some(eps) = f.epsilon {
                    if !(eps > 0.0 && eps <= std::f64::consts::PI) {
                        errors.push(format!("fejer.epsilon must lie in (0, pi], got {eps}"));
                    }
                }
            }
            Subcommand::Erm => {
                self.fill_problem(prov, &mut errors);
                let e = self.erm.get_or_insert_with(Default::default);
                let n = fill(&mut e.n, 1000, "erm.n", prov);
                if n == 0 {
                    errors.push("erm.n must be at least 1".into());
                }
                if let Some(nu) = e.nu {
                    if !(nu > 0.0) {
                        errors.push(format!("erm.nu must be positive, got {nu}"));
                    }
                    if self.dictionary.as_ref().is_some_and(|d| d.kind != DictionaryKind::Fourier) {
                        errors.push("erm.nu needs a Fourier dictionary".into());
                    }
                }
            }
            Subcommand::Bounds => {
                let b = self.bounds.get_or_insert_with(Default::default);
                match need(&b.kind, "bounds.kind", &mut errors) {
                    Some(BoundsKind::TheoremA) => {
                        for (v, p) in [(&b.beta0, "beta0"), (&b.kappa0, "kappa0"), (&b.sigma, "sigma"), (&b.x, "x")] {
                            need(v, &format!("bounds.{p}"), &mut errors);
                        }
                        need(&b.dim, "bounds.D", &mut errors);
                        need(&b.n, "bounds.n", &mut errors);
                    }
                    Some(BoundsKind::Theorem2) => {
                        need(&b.cm_sq, "bounds.Cm_sq", &mut errors);
                        need(&b.dim, "bounds.D", &mut errors);
                        need(&b.n, "bounds.n", &mut errors);
                        need(&b.epsilon, "bounds.epsilon", &mut errors);
                    }
                    Some(BoundsKind::Theorem4) => {
                        for (v, p) in [(&b.nu, "nu"), (&b.l1, "L1"), (&b.l2, "L2"), (&b.sigma, "sigma"), (&b.x, "x")] {
                            need(v, &format!("bounds.{p}"), &mut errors);
                        }
                        need(&b.dim, "bounds.D", &mut errors);
                        need(&b.n, "bounds.n", &mut errors);
                    }
                    Some(BoundsKind::Tails) => {
                        for (v, p) in [(&b.sigma_f_sq, "sigma_f_sq"), (&b.b, "b"), (&b.mean, "mean"), (&b.x, "x"), (&b.epsilon, "epsilon")] {
                            need(v, &format!("bounds.{p}"), &mut errors);
                        }
                        need(&b.n, "bounds.n", &mut errors);
                    }
                    Some(BoundsKind::Rio) => {
                        for (v, p) in [(&b.mean_sq, "mean_sq"), (&b.sigma_sq, "sigma_sq"), (&b.b, "b"), (&b.kappa_n, "kappa_n")] {
                            need(v, &format!("bounds.{p}"), &mut errors);
                        }
                        need(&b.n, "bounds.n", &mut errors);
                    }
                    None => {}
                }
            }
            Subcommand::Campaign => {
                self.fill_problem(prov, &mut errors);
                let c = self.campaign.get_or_insert_with(Default::default);
                match need(&c.kind, "campaign.kind", &mut errors) {
                    Some(kind) => match campaign(&kind) {
                        Some(camp) => {
                            if self.grid.is_none() {
                                errors.push("grid is required for campaigns".into());
                            } else {
                                errors.extend(camp.validate(&self.campaign_config()));
                            }
                        }
                        None => errors.push(format!("campaign.kind: unknown campaign {kind:?}")),
                    },
                    None => {}
                }
            }
        }
        if errors.is_empty() {
            Ok(self)
        } else {
            errors.dedup();
            Err(ConfigErrors(errors))
        }
    }

    fn fill_problem(&mut self, prov: &mut Provenance, errors: &mut Vec<String>) {
        let d = fill(&mut self.dictionary, default_dictionary(), "dictionary", prov);
        let p = self.problem.get_or_insert_with(Default::default);
        fill(
            &mut p.target,
            Target::FourierSeries { decay: 2.0, amplitude: 1.0, truncation: 10 },
            "problem.target",
            prov,
        );
        fill(&mut p.noise_sigma, NoiseSigma::Constant { sigma: 1.0 }, "problem.noise_sigma", prov);
        fill(&mut p.noise_law, NoiseLaw::Gaussian, "problem.noise_law", prov);
        if self.subcommand != Some(Subcommand::Campaign) {
            check_dictionary(&d, "dictionary", errors);
            if let Err(e) = linagg::erm::RegressionProblem::new(self.problem_spec()) {
                errors.push(format!("problem: {e}"));
            }
        }
    }
}
