//! Experiment orchestration: configs, left/right evaluation, comparison
//! verdicts, and persistence of run artifacts.
//!
//! A run is fully determined by `(config, seed)`: ensembles are generated
//! from counter-based streams and all reductions happen in fixed chunk
//! order, so replaying a manifest reproduces `lhs.mean` bit for bit.

use crate::ensembles::{EnsembleSpec, HeckeMode};
use crate::error::Error;
use crate::geom::Lattice;
use crate::intlin;
use crate::mat::IntMat;
use crate::rhs::{self, EtaMethod, Truncation};
use crate::transforms::{self, Estimate, TestFunction};
use crate::weights::{self, TruncatedValue};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

type Result<T> = std::result::Result<T, Error>;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Siegel,
    Rogers,
    Dual,
    Fbeta,
    Weights,
    Moments,
    Selftest,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Floor for the z-score denominator.
    pub z_floor: f64,
    /// Estimates with stderr above this are inconclusive.
    pub stderr_limit: f64,
    /// Finite-size allowance (relative) applied to limit-theorem targets.
    pub moment_allowance: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            z_floor: 1e-12,
            stderr_limit: 0.05,
            moment_allowance: 0.10,
        }
    }
}

fn default_tolerance() -> TolerancePolicy {
    TolerancePolicy::default()
}

fn default_trunc() -> Truncation {
    Truncation::default()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentParams {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    #[serde(default)]
    pub test_function: Option<TestFunction>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default = "default_trunc")]
    pub trunc: Truncation,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: TolerancePolicy,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub emit_members: bool,
    /// β for the `fbeta` experiment, row-major.
    #[serde(default)]
    pub beta: Option<Vec<Vec<i64>>>,
    /// Ball-volume thresholds for the `moments` experiment.
    #[serde(default)]
    pub moments: Option<MomentParams>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("bad config: {e}")))
    }

    /// Applies a seed override to every seeded component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        if let Some(e) = self.ensemble.as_mut() {
            match e {
                EnsembleSpec::X2Exact { seed: s, .. } => *s = seed,
                EnsembleSpec::Hecke {
                    mode: HeckeMode::Sampled { seed: s, .. },
                    ..
                } => *s = seed,
                _ => {}
            }
        }
        self
    }

    fn tf(&self) -> Result<&TestFunction> {
        self.test_function
            .as_ref()
            .ok_or_else(|| Error::config("experiment needs a test_function"))
    }

    fn ens(&self) -> Result<&EnsembleSpec> {
        self.ensemble
            .as_ref()
            .ok_or_else(|| Error::config("experiment needs an ensemble"))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = &self.ensemble {
            e.validate()?;
            if e.dim() != self.n {
                return Err(Error::config("ensemble dimension differs from n"));
            }
        }
        if let Some(tf) = &self.test_function {
            tf.validate()?;
        }
        match self.experiment {
            ExperimentKind::Siegel => {
                let tf = self.tf()?;
                if tf.k1() != 1 || tf.k2() != 0 {
                    return Err(Error::config("siegel needs k₁ = 1, k₂ = 0"));
                }
                self.ens()?;
            }
            ExperimentKind::Rogers => {
                let tf = self.tf()?;
                if tf.k1() == 0 || tf.k2() != 0 {
                    return Err(Error::config("rogers needs k₁ ≥ 1, k₂ = 0"));
                }
                if tf.k1() >= self.n {
                    return Err(Error::config("rogers needs k₁ < n"));
                }
                self.ens()?;
            }
            ExperimentKind::Dual => {
                let tf = self.tf()?;
                if tf.k1() == 0 || tf.k2() == 0 {
                    return Err(Error::config("dual needs k₁, k₂ ≥ 1"));
                }
                if self.n <= tf.k1() + tf.k2() {
                    return Err(Error::config("dual needs n > k₁ + k₂"));
                }
                self.ens()?;
            }
            ExperimentKind::Fbeta => {
                let tf = self.tf()?;
                let beta = self
                    .beta
                    .as_ref()
                    .ok_or_else(|| Error::config("fbeta needs a beta matrix"))?;
                if beta.len() != tf.k1() || beta.iter().any(|r| r.len() != tf.k2()) {
                    return Err(Error::config("beta shape must be k₁ × k₂"));
                }
                if self.n <= tf.k1() + tf.k2() {
                    return Err(Error::config("fbeta needs n > m₁ + m₂"));
                }
                self.ens()?;
            }
            ExperimentKind::Moments => {
                let m = self
                    .moments
                    .as_ref()
                    .ok_or_else(|| Error::config("moments needs v/w thresholds"))?;
                if m.v.is_empty() && m.w.is_empty() {
                    return Err(Error::config("moments needs at least one threshold"));
                }
                self.ens()?;
            }
            ExperimentKind::Weights | ExperimentKind::Selftest => {}
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub code_version: String,
    pub timestamp_unix: u64,
    pub boundary_warnings: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub lhs: Estimate,
    pub rhs: TruncatedValue,
    pub z_score: f64,
    pub verdict: Verdict,
    pub wall_time_s: f64,
    pub manifest: Manifest,
}

/// `z = (mean − value − tail/2)/max(stderr, floor)`; pass iff
/// `|mean − value| ≤ 3·stderr + tail`; inconclusive when the standard error
/// exceeds the configured limit.
pub fn compare(lhs: &Estimate, rhs: &TruncatedValue, policy: &TolerancePolicy) -> (f64, Verdict) {
    let z = (lhs.mean - rhs.value - rhs.tail_bound / 2.0) / lhs.stderr.max(policy.z_floor);
    if lhs.stderr > policy.stderr_limit {
        return (z, Verdict::Inconclusive);
    }
    let ok = (lhs.mean - rhs.value).abs() <= 3.0 * lhs.stderr + rhs.tail_bound;
    (z, if ok { Verdict::Pass } else { Verdict::Fail })
}

// ---------------------------------------------------------------------------
// Running experiments
// ---------------------------------------------------------------------------

struct Sides {
    lhs: Estimate,
    rhs: TruncatedValue,
    members: Option<Vec<f64>>,
}

fn exact_suite_estimate(passed: usize, total: usize) -> Estimate {
    Estimate {
        mean: passed as f64 / total.max(1) as f64,
        stderr: 0.0,
        count: total as u64,
        seed: 0,
        ensemble: EnsembleSpec::Fixed {
            n: 1,
            bases: vec![vec![1.0]],
        },
    }
}

fn run_sides(config: &ExperimentConfig) -> Result<Sides> {
    let n = config.n;
    let collect_members = config.emit_members;
    let estimate_with =
        |spec: &EnsembleSpec,
         stat: &(dyn Fn(&Lattice<f64>) -> Result<f64> + Sync)|
         -> Result<(Estimate, Option<Vec<f64>>)> {
            let est = transforms::ensemble_estimate(spec, stat)?;
            let members = if collect_members {
                Some(transforms::ensemble_members_values(spec, stat)?)
            } else {
                None
            };
            Ok((est, members))
        };

    match config.experiment {
        ExperimentKind::Siegel => {
            let tf = config.tf()?;
            let profile = tf.primal[0].clone();
            let spec = config.ens()?;
            let stat = move |l: &Lattice<f64>| transforms::siegel_sum(l, &profile);
            let (lhs, members) = estimate_with(spec, &stat)?;
            let rhs = TruncatedValue::exact(rhs::siegel_rhs(&tf.primal[0], n));
            Ok(Sides { lhs, rhs, members })
        }
        ExperimentKind::Rogers => {
            let tf = config.tf()?.clone();
            let spec = config.ens()?;
            let stat = move |l: &Lattice<f64>| transforms::product_multisum(l, &tf);
            let (lhs, members) = estimate_with(spec, &stat)?;
            let rhs = rhs::rogers_rhs(&config.tf()?.primal, n, config.trunc.h)?;
            Ok(Sides { lhs, rhs, members })
        }
        ExperimentKind::Dual => {
            let tf = config.tf()?.clone();
            let spec = config.ens()?;
            let stat = move |l: &Lattice<f64>| transforms::product_multisum(l, &tf);
            let (lhs, members) = estimate_with(spec, &stat)?;
            let breakdown = rhs::dual_rhs(config.tf()?, n, config.trunc)?;
            let rhs = TruncatedValue {
                value: breakdown.total,
                tail_bound: breakdown.tail,
                cutoff: config.trunc.h,
                heuristic: true,
            };
            Ok(Sides { lhs, rhs, members })
        }
        ExperimentKind::Fbeta => {
            let tf = config.tf()?.clone();
            let beta_rows = config.beta.clone().unwrap();
            let beta = IntMat::from_rows(
                &beta_rows
                    .iter()
                    .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                    .collect::<Vec<_>>(),
            );
            let spec = config.ens()?;
            let beta_stat = beta.clone();
            let stat = move |l: &Lattice<f64>| transforms::f_beta_sum(l, &beta_stat, &tf);
            let (lhs, members) = estimate_with(spec, &stat)?;
            let tf2 = config.tf()?;
            let m1 = tf2.k1();
            let eta = rhs::eta_integral(
                &beta,
                &IntMat::identity(m1),
                &IntMat::identity(tf2.k2()),
                tf2,
                n,
                EtaMethod::Auto,
            )?;
            let zprod = weights::zeta_product(n as u32, m1 as u32);
            let rhs = TruncatedValue {
                value: eta.value / zprod,
                tail_bound: eta.tail_bound / zprod,
                cutoff: eta.cutoff,
                heuristic: eta.heuristic,
            };
            Ok(Sides { lhs, rhs, members })
        }
        ExperimentKind::Moments => {
            let params = config.moments.clone().unwrap();
            let spec = config.ens()?;
            let (v, w) = (params.v.clone(), params.w.clone());
            let stat = move |l: &Lattice<f64>| {
                let (nv, nw) = transforms::count_statistic(l, &v, &w)?;
                let prod: f64 = nv.iter().chain(nw.iter()).map(|&c| c as f64).product();
                Ok(prod)
            };
            let (lhs, members) = estimate_with(spec, &stat)?;
            let limit = rhs::moment_rhs(&params.v, &params.w)?;
            let rhs = TruncatedValue {
                value: limit,
                tail_bound: config.tolerance.moment_allowance * limit.abs(),
                cutoff: 0,
                heuristic: true,
            };
            Ok(Sides { lhs, rhs, members })
        }
        ExperimentKind::Weights => {
            let (passed, total) = weights_suite(config)?;
            Ok(Sides {
                lhs: exact_suite_estimate(passed, total),
                rhs: TruncatedValue::exact(1.0),
                members: None,
            })
        }
        ExperimentKind::Selftest => {
            let (passed, total) = selftest_suite();
            Ok(Sides {
                lhs: exact_suite_estimate(passed, total),
                rhs: TruncatedValue::exact(1.0),
                members: None,
            })
        }
    }
}

/// Runs the configured experiment, writes artifacts when an output
/// directory is set, and returns the report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let sides = run_sides(config)?;
    let (z, verdict) = compare(&sides.lhs, &sides.rhs, &config.tolerance);
    let report = RunReport {
        config: config.clone(),
        lhs: sides.lhs,
        rhs: sides.rhs,
        z_score: z,
        verdict,
        wall_time_s: start.elapsed().as_secs_f64(),
        manifest: Manifest {
            seed: config.seed.unwrap_or(0),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            boundary_warnings: transforms::boundary_warning_count(),
        },
    };
    if let Some(dir) = &config.out_dir {
        persist(&report, sides.members.as_deref(), Path::new(dir))?;
    }
    Ok(report)
}

/// Writes `report.json`, `manifest.json` and optionally `members.csv`
/// under `out_dir/run-<timestamp>-<seed>/`. Returns the run directory.
pub fn persist(report: &RunReport, members: Option<&[f64]>, out_dir: &Path) -> Result<PathBuf> {
    let run_dir = out_dir.join(format!(
        "run-{}-{}",
        report.manifest.timestamp_unix, report.manifest.seed
    ));
    std::fs::create_dir_all(&run_dir)?;
    let mut f = std::fs::File::create(run_dir.join("report.json"))?;
    f.write_all(serde_json::to_string_pretty(report)?.as_bytes())?;
    let mut f = std::fs::File::create(run_dir.join("manifest.json"))?;
    f.write_all(serde_json::to_string_pretty(&report.manifest)?.as_bytes())?;
    if let Some(values) = members {
        let mut f = std::fs::File::create(run_dir.join("members.csv"))?;
        writeln!(f, "member_index,statistic_value")?;
        for (i, v) in values.iter().enumerate() {
            writeln!(f, "{i},{v}")?;
        }
    }
    Ok(run_dir)
}

// ---------------------------------------------------------------------------
// The packaged check suites
// ---------------------------------------------------------------------------

/// Weight-module property suite: trivial bounds, exact unimodular
/// invariance, transpose bracket overlap, and the congruence identity grid.
pub fn weights_suite(config: &ExperimentConfig) -> Result<(usize, usize)> {
    use rand::{Rng, SeedableRng};
    let n = (config.n as u32).max(8);
    let dmax = config.trunc.dmax.clamp(60, 400);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(1));
    let mut passed = 0usize;
    let mut total = 0usize;

    // trivial bounds on 50 random β
    for _ in 0..50 {
        let m1 = rng.gen_range(1..=2usize);
        let m2 = rng.gen_range(1..=2usize);
        let data: Vec<i64> = (0..m1 * m2).map(|_| rng.gen_range(-3..=3)).collect();
        let beta = IntMat::from_i64(m1, m2, &data);
        let w = weights::weight_w(&beta, n, dmax)?;
        let (lo, hi) = weights::w_trivial_bounds(m1 as u32, m2 as u32, n);
        total += 1;
        if w.upper() >= lo - 1e-12 && w.value <= hi + 1e-12 {
            passed += 1;
        }
    }
    // exact invariance under 100 unimodular pairs
    let beta0 = IntMat::from_i64(2, 2, &[1, 2, 0, 3]);
    let w0 = weights::weight_w(&beta0, n, dmax)?;
    for _ in 0..100 {
        let g1 = crate::ensembles::random_unimodular(&mut rng, 2, 4);
        let g2 = crate::ensembles::random_unimodular(&mut rng, 2, 4);
        let b = g1.mul(&beta0).mul(&g2);
        if b.to_i64().is_none() {
            continue;
        }
        total += 1;
        let w = weights::weight_w(&b, n, dmax)?;
        if w.value.to_bits() == w0.value.to_bits() {
            passed += 1;
        }
    }
    // transpose bracket overlap on a small grid
    for data in [[0i64, 1, 2, 3], [1, 0, 0, 2], [2, 2, 1, 1]] {
        let beta = IntMat::from_i64(2, 2, &data);
        let w = weights::weight_w(&beta, n, dmax)?;
        let wt = weights::weight_w(&beta.transpose(), n, dmax)?;
        total += 1;
        if w.overlaps(&wt) {
            passed += 1;
        }
    }
    // congruence identity grid
    let rep = weights::linalg_identity_grid(2, 3, 4, &[7, 9], dmax.min(120));
    total += rep.cases;
    passed += rep.cases - rep.failures;
    Ok((passed, total))
}

/// Exact-kernel oracle smoke suite (the full versions live in the
/// acceptance tests).
pub fn selftest_suite() -> (usize, usize) {
    let mut passed = 0usize;
    let mut total = 0usize;
    let mut check = |ok: bool| {
        total += 1;
        if ok {
            passed += 1;
        }
    };
    use num_traits::One;
    let a = IntMat::from_i64(2, 2, &[2, 4, 0, 2]);
    let sd = intlin::smith(&a);
    check(sd.u.mul(&sd.d).mul(&sd.v) == a);
    check(sd.divisors == vec![BigInt::from(2), BigInt::from(2)]);
    check(intlin::is_primitive(&IntMat::from_i64(2, 1, &[2, 1])));
    check(!intlin::is_primitive(&IntMat::from_i64(2, 1, &[2, 0])));
    check(intlin::enumerate_a(2, 1, 1).len() == 4);
    check(intlin::enumerate_w(2, 2).len() == 4);
    check(intlin::congruence_count(&IntMat::from_i64(1, 1, &[2]), 4) == BigInt::from(2));
    let b = IntMat::from_i64(2, 1, &[1, 2]);
    let perp = intlin::perp_rep(&b).unwrap();
    check(b.transpose().mul(&perp).is_zero());
    check(
        intlin::rational_denominator(&IntMat::from_i64(1, 1, &[7]).to_rat()) == BigInt::one(),
    );
    check((crate::special::ball_volume::<f64>(2) - std::f64::consts::PI).abs() < 1e-12);
    (passed, total)
}
