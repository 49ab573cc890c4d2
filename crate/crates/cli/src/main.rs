//! `linagg`: least-squares aggregation laboratory.
//!
//! Exit status: 0 on success, 1 on an operational error (bad config, IO),
//! 2 when an asserted check of a campaign fails.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use config::{BoundsKind, Provenance, RunConfig, Subcommand};
use linagg::basis::{fejer_as_model_function, fejer_tail_bound, FejerKernel};
use linagg::bounds::{
    concentration_tail_bounds, rio_lower_mean_bound, rio_min_kappa, theorem2_interval, theorem4_bound, theorem_a_bound,
    BoundInputs, UNSPECIFIED_LABEL,
};
use linagg::erm::{assemble, project_target, sample, RegressionProblem};
use linagg::experiments::{campaign, campaigns, fejer_direction_bound, SCHEMA_VERSION};
use linagg::smallball::{estimate_beta0, smallball_probability, write_smallball_csv, LambdaClass};
use linagg::{make_dictionary, sup_ratio};

const ABOUT: &str = "Least-squares aggregation over orthonormal dictionaries: small-ball constants, risk bounds and seeded Monte-Carlo checks";

const SMALLBALL_CLAIM: &str = "Claim: for every s in the model, P(|s(X)| >= kappa0 ||s||_2) >= beta0. \
The command brackets beta0: the Paley-Zygmund lower bound (1 - kappa0^2)/R_m^2 with R_m = sup ||s||_inf/||s||_2, \
and an upper bound equal to the smallest probability over the basis functions, the family's adversarial \
directions and seeded random directions. Histograms and wavelets have beta0 of order 1/D.";

const FEJER_CLAIM: &str = "Claim: the Fejer kernel F_l is a nonnegative trigonometric polynomial with unit mass and peak F_l(0) = l; \
seen as a direction of the Fourier model with D = 2l + 1 it has small-ball probability at most \
3^{1/4} sqrt2 kappa0^{-1/2} D^{-3/4}, so beta0 of the Fourier model decays at least like D^{-3/4}. \
The tail bound (pi/eps)^2/(l+1) caps the kernel away from the origin.";

const ERM_CLAIM: &str = "Claim: the least-squares estimator solves (I + A) beta_hat = E, with A the centered empirical Gram matrix \
and E the empirical correlations; its excess risk is |beta_hat - beta_m|^2 and concentrates around D Cm^2/n, \
where Cm^2 = E[sigma^2(X)] + ||s* - s_m||_2^2.";

const BOUNDS_CLAIM: &str = "Closed-form risk bounds and concentration radii: the small-ball risk bound, the concentration interval \
(1 +/- eps) D Cm^2/n, the refined bound over weighted-l1 classes, Bousquet/Klein-Rio tail radii and the lower bound on an expected supremum.";

const THEOREM_A_CLAIM: &str = "Claim: under the small-ball condition with constants (beta0, kappa0), with probability at least \
1 - exp(-beta0^2 n/4) - 1/x, the excess risk is at most (16/(beta0 kappa0^2))^2 sigma^2 D x/n once n >= 400^2 D/beta0^2.";

const THEOREM2_CLAIM: &str = "Claim: for bounded data and a dimension in the window A_- (ln n)^2 <= D <= A_+ sqrt(n)/ln n, \
the excess risk lies in (1 +/- eps_n) D Cm^2/n with high probability, eps_n = A0 max(sqrt(ln n/D), D/sqrt n). \
The constants A0, A_-, A_+ are not fixed by the theory and are reported as such.";

const THEOREM4_CLAIM: &str = "Claim: for targets with sum k^nu |beta_k| <= L1 and sup-norm >= L2, the model satisfies the small-ball \
condition with kappa0 = 2^{-1/2} and beta0 = L2^2/(8 C_nu^2 L1^4), giving the D/n risk bound on a dimension window.";

const TAILS_CLAIM: &str = "Claim: for a supremum Z of a centered empirical process with variance bound s^2 and envelope b, \
Z exceeds E[Z] by sqrt(2 s^2 x/n) + eps E[Z] + (1/eps + 1/3) b x/n with probability at most exp(-x) (Bousquet), \
and falls below E[Z] by sqrt(2 s^2 x/n) + eps E[Z] + (1/eps + 1) b x/n with probability at most exp(-x) (Klein-Rio).";

const RIO_CLAIM: &str = "Claim: when kappa_n^2 E[Z^2] >= s^2/n and kappa_n^2 sqrt(E[Z^2]) >= b/n, \
E[Z] >= (1 - kappa_n A_{1,-}) sqrt(E[Z^2]); A_{1,-} is not fixed by the theory.";

const CAMPAIGN_CLAIM: &str = "Seeded Monte-Carlo campaigns confronting empirical quantities with the claims: \
concentration (excess risk around D Cm^2/n and E||F||^2 = D Cm^2/n), rate (mean excess risk linear in D against the \
D^{5/2}/D^3 plugged envelopes), beta0 (bracket scaling with D), opnorm (||A|| of order D/sqrt n), tail \
(Bousquet/Klein-Rio exceedance at most exp(-x)) and regularity (the estimator stays in a widened weighted-l1 class).";

#[derive(Parser, Debug)]
#[command(name = "linagg", version, about = ABOUT)]
struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    output: Option<String>,
    /// Worker threads for campaigns (0: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print the resolved configuration as TOML and exit without running.
    #[arg(long = "print-config", global = true)]
    print_config: bool,
    #[command(flatten)]
    constants: ConstantArgs,
    #[command(subcommand)]
    command: Command,
}

/// Overrides of constants the theory leaves unspecified.
#[derive(Args, Debug, Default)]
struct ConstantArgs {
    #[arg(long = "A0", global = true)]
    a0: Option<f64>,
    #[arg(long = "A1-minus", global = true)]
    a1_minus: Option<f64>,
    #[arg(long = "L-nu", global = true)]
    l_nu: Option<f64>,
    #[arg(long = "A-minus", global = true)]
    a_minus: Option<f64>,
    #[arg(long = "A-plus", global = true)]
    a_plus: Option<f64>,
}

/// Dictionary family; the dimension is set separately.
#[derive(Args, Debug, Default)]
struct FamilyArgs {
    /// fourier | histogram | piecewise-poly | haar-wavelet
    #[arg(long)]
    kind: Option<String>,
    /// Haar level (D = 2^{level+1}).
    #[arg(long)]
    level: Option<i32>,
    /// Piecewise-polynomial degree.
    #[arg(long)]
    degree: Option<usize>,
    /// "[0,2pi]", "[-pi,pi]" or "[0,1]".
    #[arg(long)]
    domain: Option<String>,
}

#[derive(Args, Debug, Default)]
struct DictionaryArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long = "D")]
    dim: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ProblemArgs {
    /// Constant noise level.
    #[arg(long)]
    sigma: Option<f64>,
    /// gaussian | bounded-uniform | rademacher | student-t
    #[arg(long)]
    law: Option<String>,
    /// Student t degrees of freedom (> 2).
    #[arg(long)]
    dof: Option<f64>,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// Bracket the small-ball constant beta0 of a dictionary.
    #[command(long_about = SMALLBALL_CLAIM)]
    Smallball {
        #[command(flatten)]
        dictionary: DictionaryArgs,
        #[arg(long)]
        kappa0: Option<f64>,
        /// Number of random probe directions.
        #[arg(long)]
        directions: Option<usize>,
    },
    /// Fejer-kernel norms, small-ball probability and bounds.
    #[command(long_about = FEJER_CLAIM)]
    Fejer {
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        kappa0: Option<f64>,
        /// Angle for the tail bound.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Sample a regression problem and fit the least-squares estimator.
    #[command(long_about = ERM_CLAIM)]
    Erm {
        #[command(flatten)]
        dictionary: DictionaryArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        n: Option<usize>,
        /// Weighted-l1 exponent for the extra diagnostics.
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Closed-form bounds.
    #[command(long_about = BOUNDS_CLAIM)]
    Bounds {
        #[command(subcommand)]
        kind: BoundsCommand,
    },
    /// Run a Monte-Carlo campaign: concentration, rate, beta0, opnorm, tail, regularity.
    #[command(long_about = CAMPAIGN_CLAIM)]
    Campaign(CampaignArgs),
    /// Print the subcommand-to-claim manifest as JSON.
    Manifest,
}

#[derive(Args, Debug)]
struct CampaignArgs {
    /// Campaign name (omit to take it from the config file).
    #[arg(value_name = "CAMPAIGN")]
    campaign: Option<String>,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    problem: ProblemArgs,
    /// Sample sizes of the grid (comma separated); crossed with --D.
    #[arg(long = "n", value_delimiter = ',')]
    n: Vec<usize>,
    /// Dimensions of the grid (comma separated); crossed with --n.
    #[arg(long = "D", value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    kappa0: Option<f64>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long = "epsilon-grid", value_delimiter = ',')]
    epsilon_grid: Vec<f64>,
    #[arg(long = "x-grid", value_delimiter = ',')]
    x_grid: Vec<f64>,
    #[arg(long = "tail-epsilon")]
    tail_epsilon: Option<f64>,
}

#[derive(ClapSubcommand, Debug)]
enum BoundsCommand {
    /// Small-ball risk bound, failure probability and sample requirement.
    #[command(name = "theorem-a", long_about = THEOREM_A_CLAIM)]
    TheoremA {
        #[arg(long)]
        beta0: Option<f64>,
        #[arg(long)]
        kappa0: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long = "D")]
        dim: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        x: Option<f64>,
        /// Probability of the complementary event, added to the failure probability.
        #[arg(long = "omega0-fail")]
        omega0_fail: Option<f64>,
    },
    /// Concentration interval and dimension window.
    #[command(long_about = THEOREM2_CLAIM)]
    Theorem2 {
        #[arg(long = "Cm-sq")]
        cm_sq: Option<f64>,
        #[arg(long = "D")]
        dim: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Refined bound over a weighted-l1 class.
    #[command(long_about = THEOREM4_CLAIM)]
    Theorem4 {
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long = "L1")]
        l1: Option<f64>,
        #[arg(long = "L2")]
        l2: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long = "D")]
        dim: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        x: Option<f64>,
    },
    /// Bousquet and Klein-Rio radii.
    #[command(long_about = TAILS_CLAIM)]
    Tails {
        #[arg(long = "sigma-f-sq")]
        sigma_f_sq: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        mean: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Lower bound on an expected supremum.
    #[command(long_about = RIO_CLAIM)]
    Rio {
        #[arg(long = "mean-sq")]
        mean_sq: Option<f64>,
        #[arg(long = "sigma-sq")]
        sigma_sq: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "kappa-n")]
        kappa_n: Option<f64>,
    },
}

/// Inserts `value` at a dotted path when present.
fn put<T: Serialize>(root: &mut Map<String, Value>, path: &str, value: Option<T>) {
    let Some(v) = value else { return };
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().expect("nonempty path");
    let mut node = root;
    for p in parts {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .expect("path prefix is a table");
    }
    node.insert(last.to_string(), serde_json::to_value(v).expect("flag value serializes"));
}

fn family_flags(m: &mut Map<String, Value>, f: &FamilyArgs) {
    put(m, "dictionary.kind", f.kind.clone());
    put(m, "dictionary.level", f.level);
    put(m, "dictionary.degree", f.degree);
    put(m, "dictionary.domain", f.domain.clone());
}

fn dictionary_flags(m: &mut Map<String, Value>, d: &DictionaryArgs) {
    family_flags(m, &d.family);
    put(m, "dictionary.dim", d.dim);
}

fn problem_flags(m: &mut Map<String, Value>, p: &ProblemArgs) {
    put(m, "problem.noise_sigma", p.sigma.map(|s| json!({ "kind": "constant", "sigma": s })));
    match (&p.law, p.dof) {
        (Some(law), Some(dof)) if law == "student-t" => put(m, "problem.noise_law", Some(json!({ "kind": law, "dof": dof }))),
        (Some(law), _) if law == "student-t" => {
            put(m, "problem.noise_law", Some(json!({ "kind": law, "dof": linagg::erm::DEFAULT_STUDENT_DOF })))
        }
        (Some(law), _) => put(m, "problem.noise_law", Some(json!({ "kind": law }))),
        (None, Some(dof)) => put(m, "problem.noise_law", Some(json!({ "kind": "student-t", "dof": dof }))),
        (None, None) => {}
    }
}

/// The flag layer as a partial config.
fn flag_layer(cli: &Cli) -> Result<Value, Failure> {
    let mut m = Map::new();
    put(&mut m, "seed", cli.seed);
    put(&mut m, "output", cli.output.clone());
    put(&mut m, "workers", cli.workers);
    put(&mut m, "constants.A0", cli.constants.a0);
    put(&mut m, "constants.A1_minus", cli.constants.a1_minus);
    put(&mut m, "constants.L_nu", cli.constants.l_nu);
    put(&mut m, "constants.A_minus", cli.constants.a_minus);
    put(&mut m, "constants.A_plus", cli.constants.a_plus);
    let sub = match &cli.command {
        Command::Smallball { dictionary, kappa0, directions } => {
            dictionary_flags(&mut m, dictionary);
            put(&mut m, "smallball.kappa0", *kappa0);
            put(&mut m, "smallball.random_directions", *directions);
            Subcommand::Smallball
        }
        Command::Fejer { l, kappa0, epsilon } => {
            put(&mut m, "fejer.l", *l);
            put(&mut m, "fejer.kappa0", *kappa0);
            put(&mut m, "fejer.epsilon", *epsilon);
            Subcommand::Fejer
        }
        Command::Erm { dictionary, problem, n, nu } => {
            dictionary_flags(&mut m, dictionary);
            problem_flags(&mut m, problem);
            put(&mut m, "erm.n", *n);
            put(&mut m, "erm.nu", *nu);
            Subcommand::Erm
        }
        Command::Bounds { kind } => {
            let (k, fields): (BoundsKind, Vec<(&str, Option<Value>)>) = match kind {
                BoundsCommand::TheoremA { beta0, kappa0, sigma, dim, n, x, omega0_fail } => (
                    BoundsKind::TheoremA,
                    vec![
                        ("beta0", beta0.map(Value::from)),
                        ("kappa0", kappa0.map(Value::from)),
                        ("sigma", sigma.map(Value::from)),
                        ("D", dim.map(Value::from)),
                        ("n", n.map(Value::from)),
                        ("x", x.map(Value::from)),
                        ("omega0_fail", omega0_fail.map(Value::from)),
                    ],
                ),
                BoundsCommand::Theorem2 { cm_sq, dim, n, epsilon } => (
                    BoundsKind::Theorem2,
                    vec![
                        ("Cm_sq", cm_sq.map(Value::from)),
                        ("D", dim.map(Value::from)),
                        ("n", n.map(Value::from)),
                        ("epsilon", epsilon.map(Value::from)),
                    ],
                ),
                BoundsCommand::Theorem4 { nu, l1, l2, sigma, dim, n, x } => (
                    BoundsKind::Theorem4,
                    vec![
                        ("nu", nu.map(Value::from)),
                        ("L1", l1.map(Value::from)),
                        ("L2", l2.map(Value::from)),
                        ("sigma", sigma.map(Value::from)),
                        ("D", dim.map(Value::from)),
                        ("n", n.map(Value::from)),
                        ("x", x.map(Value::from)),
                    ],
                ),
                BoundsCommand::Tails { sigma_f_sq, b, mean, n, x, epsilon } => (
                    BoundsKind::Tails,
                    vec![
                        ("sigma_f_sq", sigma_f_sq.map(Value::from)),
                        ("b", b.map(Value::from)),
                        ("mean", mean.map(Value::from)),
                        ("n", n.map(Value::from)),
                        ("x", x.map(Value::from)),
                        ("epsilon", epsilon.map(Value::from)),
                    ],
                ),
                BoundsCommand::Rio { mean_sq, sigma_sq, b, n, kappa_n } => (
                    BoundsKind::Rio,
                    vec![
                        ("mean_sq", mean_sq.map(Value::from)),
                        ("sigma_sq", sigma_sq.map(Value::from)),
                        ("b", b.map(Value::from)),
                        ("n", n.map(Value::from)),
                        ("kappa_n", kappa_n.map(Value::from)),
                    ],
                ),
            };
            put(&mut m, "bounds.kind", Some(k));
            for (name, v) in fields {
                put(&mut m, &format!("bounds.{name}"), v);
            }
            Subcommand::Bounds
        }
        Command::Campaign(c) => {
            family_flags(&mut m, &c.family);
            problem_flags(&mut m, &c.problem);
            put(&mut m, "campaign.kind", c.campaign.clone());
            match (c.n.is_empty(), c.dims.is_empty()) {
                (true, true) => {}
                (false, false) => {
                    let grid: Vec<Value> =
                        c.n.iter().flat_map(|&n| c.dims.iter().map(move |&d| json!({ "n": n, "D": d }))).collect();
                    put(&mut m, "grid", Some(grid));
                }
                _ => return Err("--n and --D build the grid together; give both or neither".into()),
            }
            put(&mut m, "campaign.replicates", c.replicates);
            put(&mut m, "campaign.kappa0", c.kappa0);
            put(&mut m, "campaign.random_directions", c.directions);
            put(&mut m, "campaign.nu", c.nu);
            put(&mut m, "campaign.z", c.z);
            put(&mut m, "campaign.alpha", c.alpha);
            put(&mut m, "campaign.x", c.x);
            put(&mut m, "campaign.tail_epsilon", c.tail_epsilon);
            put(&mut m, "campaign.epsilon_grid", (!c.epsilon_grid.is_empty()).then(|| c.epsilon_grid.clone()));
            put(&mut m, "campaign.x_grid", (!c.x_grid.is_empty()).then(|| c.x_grid.clone()));
            Subcommand::Campaign
        }
        Command::Manifest => unreachable!("manifest needs no configuration"),
    };
    put(&mut m, "subcommand", Some(sub));
    Ok(Value::Object(m))
}

fn manifest() -> Value {
    let mut m = Map::new();
    m.insert("smallball".into(), SMALLBALL_CLAIM.into());
    m.insert("fejer".into(), FEJER_CLAIM.into());
    m.insert("erm".into(), ERM_CLAIM.into());
    m.insert("bounds theorem-a".into(), THEOREM_A_CLAIM.into());
    m.insert("bounds theorem2".into(), THEOREM2_CLAIM.into());
    m.insert("bounds theorem4".into(), THEOREM4_CLAIM.into());
    m.insert("bounds tails".into(), TAILS_CLAIM.into());
    m.insert("bounds rio".into(), RIO_CLAIM.into());
    for c in campaigns() {
        m.insert(format!("campaign {}", c.name()), c.claim().into());
    }
    Value::Object(m)
}

type Failure = Box<dyn std::error::Error>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    format!("{}: {e}", path.display()).into()
}

struct Run {
    cfg: RunConfig,
    prov: Provenance,
}

impl Run {
    fn dir(&self) -> Result<PathBuf, Failure> {
        let dir = PathBuf::from(self.cfg.output.as_deref().unwrap_or("."));
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(dir)
    }

    fn echo(&self) -> Value {
        json!({ "config": self.cfg, "provenance": self.prov })
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(0)
    }

    /// Writes `{stem}.csv` (when given) and `{stem}.json`.
    fn write(&self, stem: &str, csv: Option<Vec<u8>>, result: Value) -> Result<PathBuf, Failure> {
        let dir = self.dir()?;
        if let Some(body) = csv {
            let p = dir.join(format!("{stem}.csv"));
            fs::write(&p, body).map_err(|e| io_err(&p, e))?;
        }
        let p = dir.join(format!("{stem}.json"));
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "subcommand": self.cfg.subcommand().name(),
            "versions": { "linagg": env!("CARGO_PKG_VERSION") },
            "seed": self.seed(),
            "generated_unix_seconds": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            "config": self.echo(),
            "result": result,
        });
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        fs::write(&p, text).map_err(|e| io_err(&p, e))?;
        Ok(p)
    }
}

fn csv_rows<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.to_string())?)
}

#[derive(Serialize)]
struct FejerRow {
    l: usize,
    #[serde(rename = "D")]
    dim: usize,
    kappa0: f64,
    peak: f64,
    l2_norm_sq: f64,
    tail_probability: f64,
    smallball_bound: f64,
    epsilon: Option<f64>,
    tail_bound: Option<f64>,
}

fn smallball(run: &Run) -> Result<u8, Failure> {
    let spec = run.cfg.dictionary.clone().expect("resolved dictionary");
    let s = run.cfg.smallball.clone().expect("resolved smallball");
    let dict = make_dictionary(&spec)?;
    let est = estimate_beta0(&dict, s.kappa0.expect("kappa0"), s.random_directions.expect("directions"), run.seed())?;
    let row = est.row();
    let mut body = Vec::new();
    write_smallball_csv(std::slice::from_ref(&row), &mut body)?;
    let (v_up, v_lo) = est.v0_bracket();
    let path = run.write(
        &format!("smallball-{}", run.seed()),
        Some(body),
        json!({ "row": row, "V0_at_beta0_upper": v_up, "V0_at_beta0_lower": v_lo, "probed_directions": est.probed_directions, "R_m": sup_ratio(&dict) }),
    )?;
    println!(
        "smallball {} D={} kappa0={} beta0 in [{:.6e}, {:.6e}] worst={} -> {}",
        row.kind,
        row.dim,
        row.kappa0,
        row.beta0_lower,
        row.beta0_upper,
        row.worst_direction_tag,
        path.display()
    );
    Ok(0)
}

fn fejer(run: &Run) -> Result<u8, Failure> {
    let f = run.cfg.fejer.clone().expect("resolved fejer");
    let (l, kappa0) = (f.l.expect("l"), f.kappa0.expect("kappa0"));
    let kernel = FejerKernel::new(l);
    let func = fejer_as_model_function(l)?;
    let dim = func.dictionary().dim();
    let row = FejerRow {
        l,
        dim,
        kappa0,
        peak: kernel.peak(),
        l2_norm_sq: kernel.l2_norm_sq(),
        tail_probability: smallball_probability(&func, kappa0)?,
        smallball_bound: fejer_direction_bound(kappa0, dim),
        epsilon: f.epsilon,
        tail_bound: f.epsilon.map(|e| fejer_tail_bound(l, e)).transpose()?,
    };
    let path = run.write(&format!("fejer-{}", run.seed()), Some(csv_rows(std::slice::from_ref(&row))?), serde_json::to_value(&row)?)?;
    println!(
        "fejer l={l} D={dim} ||F||_2^2={:.6} P(|F| >= kappa0 ||F||_2)={:.6e} bound={:.6e} -> {}",
        row.l2_norm_sq,
        row.tail_probability,
        row.smallball_bound,
        path.display()
    );
    Ok(0)
}

fn erm(run: &Run) -> Result<u8, Failure> {
    let e = run.cfg.erm.clone().expect("resolved erm");
    let n = e.n.expect("n");
    let problem = RegressionProblem::new(run.cfg.problem_spec())?;
    let data = sample(&problem, n, run.seed())?;
    let (beta_m, oracle) = project_target(&problem)?;
    let fit = assemble(problem.dictionary(), &data)?.solve(&beta_m, e.nu);
    let d = problem.dictionary().dim();
    let center = d as f64 * oracle.cm_sq / n as f64;
    let mut body = Vec::new();
    data.write_csv(&mut body)?;
    let path = run.write(&format!("erm-{}", run.seed()), Some(body), json!({ "fit": fit, "oracle": oracle, "center": center }))?;
    if fit.solved {
        println!(
            "erm n={n} D={d} excess_risk={:.6e} center={center:.6e} ||A||={:.4e} ||F||^2={:.6e} -> {}",
            fit.excess_risk,
            fit.gram_perturbation_opnorm,
            fit.f_norm_sq,
            path.display()
        );
    } else {
        println!("erm n={n} D={d} unsolved (min eigenvalue {:.3e}) -> {}", fit.min_eigenvalue, path.display());
    }
    Ok(0)
}

fn bounds(run: &Run) -> Result<u8, Failure> {
    let b = run.cfg.bounds.clone().expect("resolved bounds");
    let constants = run.cfg.constants();
    let kind = b.kind.expect("kind");
    let (result, line) = match kind {
        BoundsKind::TheoremA => {
            let inputs = BoundInputs {
                beta0: b.beta0.expect("beta0"),
                kappa0: b.kappa0.expect("kappa0"),
                sigma: b.sigma.expect("sigma"),
                dim: b.dim.expect("D"),
                n: b.n.expect("n"),
                x: b.x.expect("x"),
                omega0_fail: b.omega0_fail,
            };
            let r = theorem_a_bound(&inputs)?;
            let line = format!("risk_bound={:.6e} n_min={:.6e} failure_prob={:.6e}", r.risk_bound, r.n_min, r.failure_prob);
            (serde_json::to_value(r)?, line)
        }
        BoundsKind::Theorem2 => {
            let r = theorem2_interval(b.cm_sq.expect("Cm_sq"), b.dim.expect("D"), b.n.expect("n"), b.epsilon.expect("epsilon"), &constants)?;
            let eps_n = constants.epsilon_n(b.dim.expect("D"), b.n.expect("n"));
            let line = format!("interval=[{:.6e}, {:.6e}] in_window={} eps_n={eps_n:.4}", r.low, r.high, r.in_dimension_window);
            (json!({ "interval": r, "epsilon_n": eps_n, "constants": constants, "constants_label": UNSPECIFIED_LABEL }), line)
        }
        BoundsKind::Theorem4 => {
            let cls = LambdaClass::new(b.nu.expect("nu"), b.l1.expect("L1"), b.l2.expect("L2"))?;
            let r = theorem4_bound(&cls, b.sigma.expect("sigma"), b.dim.expect("D"), b.n.expect("n"), b.x.expect("x"), &constants)?;
            let line = format!(
                "risk_bound={:.6e} beta0={:.6e} window=[{:.4e}, {:.4e}] valid={}",
                r.risk_bound, r.beta0, r.window_low, r.window_high, r.valid
            );
            (serde_json::to_value(r)?, line)
        }
        BoundsKind::Tails => {
            let r = concentration_tail_bounds(
                b.sigma_f_sq.expect("sigma_f_sq"),
                b.b.expect("b"),
                b.mean.expect("mean"),
                b.n.expect("n"),
                b.x.expect("x"),
                b.epsilon.expect("epsilon"),
            )?;
            let line = format!("bousquet={:.6e} klein_rio={:.6e}", r.bousquet, r.klein_rio);
            (serde_json::to_value(r)?, line)
        }
        BoundsKind::Rio => {
            let (mean_sq, sigma_sq, bb, n) = (b.mean_sq.expect("mean_sq"), b.sigma_sq.expect("sigma_sq"), b.b.expect("b"), b.n.expect("n"));
            let r = rio_lower_mean_bound(mean_sq, sigma_sq, bb, n, b.kappa_n.expect("kappa_n"), constants.a1_minus)?;
            let min_kappa = rio_min_kappa(mean_sq, sigma_sq, bb, n);
            let line = format!("bound={:.6e} valid={} min_kappa_n={min_kappa:.4e}", r.bound, r.valid);
            (json!({ "lower_bound": r, "min_kappa_n": min_kappa }), line)
        }
    };
    let path = run.write(&format!("bounds-{}-{}", kind.name(), run.seed()), None, result)?;
    println!("bounds {} {line} -> {}", kind.name(), path.display());
    Ok(0)
}

fn run_campaign(run: &Run) -> Result<u8, Failure> {
    let kind = run.cfg.campaign.as_ref().and_then(|c| c.kind.clone()).expect("resolved kind");
    let camp = campaign(&kind).ok_or_else(|| format!("unknown campaign {kind:?}"))?;
    let cfg = run.cfg.campaign_config();
    let report = linagg::experiments::run(camp, &cfg, run.cfg.workers.unwrap_or(0))?;
    let (csv, json) = report.write_files(&run.dir()?, run.echo())?;
    for line in report.summary_lines() {
        println!("{line}");
    }
    for c in &report.aggregates.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let mode = if c.asserted { "asserted" } else { "flag" };
        println!("check {status} ({mode}) {}: {}", c.name, c.detail);
    }
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(if report.failed_assertions().is_empty() { 0 } else { 2 })
}

fn execute(cli: &Cli) -> Result<u8, Failure> {
    if let Command::Manifest = cli.command {
        println!("{}", serde_json::to_string_pretty(&manifest())?);
        return Ok(0);
    }
    let file = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            config::parse_toml(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => RunConfig::default(),
    };
    let (merged, mut prov) = config::merge(&file, flag_layer(cli)?)?;
    let cfg = merged.resolve(&mut prov)?;
    if cli.print_config {
        print!("{}", config::to_toml(&cfg));
        return Ok(0);
    }
    let run = Run { cfg, prov };
    match run.cfg.subcommand() {
        Subcommand::Smallball => smallball(&run),
        Subcommand::Fejer => fejer(&run),
        Subcommand::Erm => erm(&run),
        Subcommand::Bounds => bounds(&run),
        Subcommand::Campaign => run_campaign(&run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.to_string().trim_end());
            ExitCode::from(1)
        }
    }
}
