//! Monte Carlo generation of summary statistics and experiment metrics.
//!
//! Each SNP's true effects `(gamma, alpha, phi)` come from a five-component
//! mixture: valid instruments, correlated pleiotropy (through a shared
//! confounder), uncorrelated pleiotropy, outcome-only SNPs, and null SNPs.
//! Total effects are `beta_x = gamma + beta_xu*phi` and
//! `beta_y = theta*beta_x + alpha + beta_yu*phi`; observed estimates add
//! `N(0, 1/n)` noise on each side.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::bagging::{care_estimate, CareConfig};
use crate::baselines::{care_no_correction, hard_select, ivw, IvwMode};
use crate::error::{CareError, Result};
use crate::gwas::SummaryPair;
use crate::par::map_indexed;
use crate::rng::{derive_seed, substream, Purpose};
use crate::selection::SelectionConfig;
use crate::stats::two_sided_z;

/// Distribution family of the correlated-pleiotropy component and the
/// enabled mixture components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Variant {
    /// Main setting: correlated pleiotropy with normal direct effects.
    NormalCorr,
    /// Correlated pleiotropy with uniform direct effects on `(lo, hi)`.
    UniformCorr { lo: f64, hi: f64 },
    /// Balanced horizontal pleiotropy only (`pi2 = 0`), so the
    /// instrument-strength/direct-effect independence assumption holds.
    BalancedInside,
    /// Directional correlated pleiotropy only (`pi3 = 0`).
    DirectionalInsideViolated,
}

/// Data-generating parameters for one scenario.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioConfig {
    pub p_snps: usize,
    /// Mixture proportions `pi1..pi5`; must sum to 1.
    pub pi: [f64; 5],
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub sigma_u2: f64,
    /// Mean of the correlated-pleiotropy direct effect (normal variant).
    pub corr_pleio_mean: f64,
    pub beta_xu: f64,
    pub beta_yu: f64,
    pub n_x: u64,
    pub n_y: u64,
    pub theta: f64,
    pub seed: u64,
    pub variant: Variant,
}

impl Default for ScenarioConfig {
    /// The main setting: 200,000 SNPs, 2% relevant split evenly between
    /// valid and invalid at 50% invalid, 1% outcome-only, component
    /// variances 1e-5, confounder loadings 0.3, both sample sizes 500,000.
    fn default() -> Self {
        ScenarioConfig {
            p_snps: 200_000,
            pi: [0.01, 0.005, 0.005, 0.01, 0.97],
            sigma_x2: 1e-5,
            sigma_y2: 1e-5,
            sigma_u2: 1e-5,
            corr_pleio_mean: 0.015,
            beta_xu: 0.3,
            beta_yu: 0.3,
            n_x: 500_000,
            n_y: 500_000,
            theta: 0.0,
            seed: 0,
            variant: Variant::NormalCorr,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p_snps == 0 {
            return Err(CareError::Config("p_snps must be positive".into()));
        }
        if self.pi.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(CareError::Config(format!("pi must be non-negative: {:?}", self.pi)));
        }
        let total: f64 = self.pi.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CareError::Config(format!(
                "pi must sum to 1 within 1e-12, got {total}"
            )));
        }
        for (name, v) in [
            ("sigma_x2", self.sigma_x2),
            ("sigma_y2", self.sigma_y2),
            ("sigma_u2", self.sigma_u2),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(CareError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.n_x == 0 || self.n_y == 0 {
            return Err(CareError::Config("sample sizes must be positive".into()));
        }
        match self.variant {
            Variant::UniformCorr { lo, hi } if lo.is_nan() || hi.is_nan() || lo >= hi => {
                return Err(CareError::Config(format!(
                    "uniform_corr bounds must satisfy lo < hi, got ({lo}, {hi})"
                )));
            }
            Variant::BalancedInside if self.pi[1] != 0.0 => {
                return Err(CareError::Config(
                    "balanced_inside requires pi2 = 0 (no correlated pleiotropy)".into(),
                ));
            }
            Variant::DirectionalInsideViolated if self.pi[2] != 0.0 => {
                return Err(CareError::Config(
                    "directional_inside_violated requires pi3 = 0".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// Redistributes the relevant-SNP mass `pi1 + pi2 + pi3` so that the
    /// invalid fraction `(pi2 + pi3) / (pi1 + pi2 + pi3)` equals `prop`,
    /// splitting it according to the variant. `pi4`, `pi5`, and the total
    /// stay fixed.
    pub fn with_invalid_proportion(mut self, prop: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&prop) {
            return Err(CareError::Config(format!(
                "invalid proportion must be in [0, 1), got {prop}"
            )));
        }
        let relevant = self.pi[0] + self.pi[1] + self.pi[2];
        let invalid = prop * relevant;
        let (pi2, pi3) = match self.variant {
            Variant::NormalCorr | Variant::UniformCorr { .. } => (invalid / 2.0, invalid / 2.0),
            Variant::BalancedInside => (0.0, invalid),
            Variant::DirectionalInsideViolated => (invalid, 0.0),
        };
        self.pi[0] = relevant - pi2 - pi3;
        self.pi[1] = pi2;
        self.pi[2] = pi3;
        Ok(self)
    }
}

/// A generated dataset with the mixture bookkeeping needed by generator
/// checks: the component label (1..=5) and the true `(gamma, alpha, phi)`
/// of every SNP.
#[derive(Clone, Debug)]
pub struct SimulatedDataset {
    pub pairs: Vec<SummaryPair>,
    pub component: Vec<u8>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SimulatedDataset {
    /// FNV-1a over the observed statistics; used to confirm that different
    /// estimators consume identical per-rep datasets.
    pub fn digest(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        let mut eat = |bits: u64| {
            for byte in bits.to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x1000_0000_01b3);
            }
        };
        for p in &self.pairs {
            eat(p.beta_x.to_bits());
            eat(p.se_x.to_bits());
            eat(p.beta_y.to_bits());
            eat(p.se_y.to_bits());
        }
        hash
    }
}

/// Generates one dataset from the substream keyed by `(cfg.seed, rep)`.
pub fn simulate_dataset(cfg: &ScenarioConfig, rep: u64) -> Result<SimulatedDataset> {
    cfg.validate()?;
    let mut rng = substream(cfg.seed, Purpose::Dataset, rep);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    };

    let sd_x = cfg.sigma_x2.sqrt();
    let sd_y = cfg.sigma_y2.sqrt();
    let sd_u = cfg.sigma_u2.sqrt();
    let se_x = (1.0 / cfg.n_x as f64).sqrt();
    let se_y = (1.0 / cfg.n_y as f64).sqrt();
    let cum = {
        let mut cum = [0.0f64; 5];
        let mut acc = 0.0;
        for (i, &p) in cfg.pi.iter().enumerate() {
            acc += p;
            cum[i] = acc;
        }
        cum[4] = 1.0;
        cum
    };

    let n = cfg.p_snps;
    let mut dataset = SimulatedDataset {
        pairs: Vec::with_capacity(n),
        component: Vec::with_capacity(n),
        gamma: Vec::with_capacity(n),
        alpha: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
    };

    for j in 0..n {
        let u: f64 = rng.random();
        let component = cum.iter().position(|&c| u < c).unwrap_or(4) as u8 + 1;
        let (gamma, alpha, phi) = match component {
            1 => (sd_x * draw(&mut rng), 0.0, 0.0),
            2 => {
                let gamma = sd_x * draw(&mut rng);
                let alpha = match cfg.variant {
                    Variant::UniformCorr { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
                    _ => cfg.corr_pleio_mean + sd_u * draw(&mut rng),
                };
                let phi = sd_u * draw(&mut rng);
                (gamma, alpha, phi)
            }
            3 => (sd_x * draw(&mut rng), sd_y * draw(&mut rng), 0.0),
            4 => (0.0, sd_y * draw(&mut rng), 0.0),
            _ => (0.0, 0.0, 0.0),
        };
        let beta_x = gamma + cfg.beta_xu * phi;
        let beta_y = cfg.theta * beta_x + alpha + cfg.beta_yu * phi;
        dataset.pairs.push(SummaryPair {
            snp_id: format!("s{}", j + 1),
            beta_x: beta_x + se_x * draw(&mut rng),
            se_x,
            beta_y: beta_y + se_y * draw(&mut rng),
            se_y,
        });
        dataset.component.push(component);
        dataset.gamma.push(gamma);
        dataset.alpha.push(alpha);
        dataset.phi.push(phi);
    }
    Ok(dataset)
}

/// Estimator to run inside the harness. Selection for the IVW baselines is
/// plain hard thresholding at `lambda`.
#[derive(Clone, Debug)]
pub enum Estimator {
    Care { sel: SelectionConfig, care: CareConfig },
    CareNoCorrection { lambda: f64, care: CareConfig },
    IvwFixed { lambda: f64 },
    IvwRandom { lambda: f64 },
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Care { .. } => "care",
            Estimator::CareNoCorrection { .. } => "care_no_correction",
            Estimator::IvwFixed { .. } => "ivw_fixed",
            Estimator::IvwRandom { .. } => "ivw_random",
        }
    }
}

/// Point estimate with inference, as consumed by the metrics.
#[derive(Clone, Copy, Debug)]
pub struct PointEstimate {
    pub theta: f64,
    pub se: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

fn run_estimator(est: &Estimator, pairs: &[SummaryPair], rep_seed: u64) -> Result<PointEstimate> {
    match est {
        Estimator::Care { sel, care } => {
            let mut sel = *sel;
            let mut care = care.clone();
            sel.seed = derive_seed(rep_seed, Purpose::Select, 0);
            care.seed = derive_seed(rep_seed, Purpose::Bootstrap, 0);
            care.keep_replicates = Some(false);
            let e = care_estimate(pairs, &sel, &care)?;
            Ok(PointEstimate {
                theta: e.theta_tilde,
                se: e.se,
                p_value: e.p_value,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
            })
        }
        Estimator::CareNoCorrection { lambda, care } => {
            let mut care = care.clone();
            care.seed = derive_seed(rep_seed, Purpose::Bootstrap, 0);
            care.keep_replicates = Some(false);
            let e = care_no_correction(pairs, *lambda, &care)?;
            let z = two_sided_z(0.05);
            Ok(PointEstimate {
                theta: e.theta,
                se: e.se,
                p_value: e.p_value,
                ci_low: e.theta - z * e.se,
                ci_high: e.theta + z * e.se,
            })
        }
        Estimator::IvwFixed { lambda } | Estimator::IvwRandom { lambda } => {
            let mode = if matches!(est, Estimator::IvwFixed { .. }) {
                IvwMode::Fixed
            } else {
                IvwMode::Random
            };
            let selected = hard_select(pairs, *lambda)?;
            let selected_pairs: Vec<SummaryPair> =
                selected.into_iter().map(|s| s.pair).collect();
            let e = ivw(&selected_pairs, mode)?;
            let z = two_sided_z(0.05);
            Ok(PointEstimate {
                theta: e.theta,
                se: e.se,
                p_value: e.p_value,
                ci_low: e.theta - z * e.se,
                ci_high: e.theta + z * e.se,
            })
        }
    }
}

/// Aggregate performance over Monte Carlo repetitions. Rates are over
/// successful repetitions; failed repetitions are counted separately.
#[derive(Clone, Debug, Serialize)]
pub struct RepMetrics {
    /// Repetitions attempted.
    pub rep_count: usize,
    /// Fraction of successful reps with `p < 0.05`.
    pub reject_rate: f64,
    pub mean_bias: f64,
    pub mse: f64,
    /// Fraction of successful reps whose CI contains the true theta.
    pub coverage: f64,
    /// Mean wall time per repetition; zero unless timing was requested.
    pub mean_runtime_s: f64,
    /// Repetitions where the estimator returned an error.
    pub failures: usize,
    /// XOR of per-rep dataset digests; estimator-independent by design.
    pub dataset_digest: u64,
}

/// Compensated summation; keeps the metric reduction exact enough to be
/// independent of accumulation order.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Runs `reps` independent repetitions of `estimator` on datasets drawn
/// from `scenario` adjusted to the given invalid-instrument proportion.
///
/// Dataset streams are keyed by repetition only, so different estimators
/// under the same scenario and seed see identical data. Per-rep estimator
/// seeds derive from `(scenario.seed, rep)`.
pub fn run_experiment(
    scenario: &ScenarioConfig,
    reps: usize,
    estimator: &Estimator,
    invalid_prop: f64,
    timing: bool,
) -> Result<RepMetrics> {
    if reps == 0 {
        return Err(CareError::Config("reps must be positive".into()));
    }
    let scenario = scenario.clone().with_invalid_proportion(invalid_prop)?;
    scenario.validate()?;

    struct RepOutcome {
        estimate: Option<PointEstimate>,
        runtime: f64,
        digest: u64,
    }

    let progress = AtomicUsize::new(0);
    let batch = (reps / 10).max(1);
    let outcomes: Vec<Result<RepOutcome>> = map_indexed(reps, |rep| {
        let started = timing.then(std::time::Instant::now);
        let dataset = simulate_dataset(&scenario, rep as u64)?;
        let digest = dataset.digest();
        let rep_seed = derive_seed(scenario.seed, Purpose::Estimator, rep as u64);
        let estimate = run_estimator(estimator, &dataset.pairs, rep_seed).ok();
        let runtime = started.map_or(0.0, |t| t.elapsed().as_secs_f64());
        let done = progress.fetch_add(1, Ordering::Relaxed) + 1;
        if done.is_multiple_of(batch) {
            log::info!("{}: {done}/{reps} repetitions finished", estimator.name());
        }
        Ok(RepOutcome { estimate, runtime, digest })
    });

    let mut bias = Kahan::default();
    let mut sq_err = Kahan::default();
    let mut runtime = Kahan::default();
    let mut digest = 0u64;
    let mut rejects = 0usize;
    let mut covered = 0usize;
    let mut successes = 0usize;
    for outcome in outcomes {
        let outcome = outcome?;
        digest ^= outcome.digest;
        runtime.add(outcome.runtime);
        let Some(est) = outcome.estimate else { continue };
        successes += 1;
        let err = est.theta - scenario.theta;
        bias.add(err);
        sq_err.add(err * err);
        if est.p_value < 0.05 {
            rejects += 1;
        }
        if est.ci_low <= scenario.theta && scenario.theta <= est.ci_high {
            covered += 1;
        }
    }
    if successes == 0 {
        return Err(CareError::Domain(format!(
            "estimator '{}' failed on every repetition",
            estimator.name()
        )));
    }

    Ok(RepMetrics {
        rep_count: reps,
        reject_rate: rejects as f64 / successes as f64,
        mean_bias: bias.sum / successes as f64,
        mse: sq_err.sum / successes as f64,
        coverage: covered as f64 / successes as f64,
        mean_runtime_s: runtime.sum / reps as f64,
        failures: reps - successes,
        dataset_digest: digest,
    })
}

/// Parses a flat `key = value` scenario file. Unknown keys are errors;
/// `#` starts a comment. The optional `invalid_prop` key rebalances the
/// mixture exactly like the CLI flag.
pub fn parse_scenario(text: &str) -> Result<(ScenarioConfig, Option<f64>)> {
    let mut cfg = ScenarioConfig::default();
    let mut invalid_prop = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CareError::Config(format!(
                "scenario line {}: expected 'key = value', got '{raw}'",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| {
            CareError::Config(format!("scenario line {}: bad {what} '{value}'", lineno + 1))
        };
        match key {
            "p_snps" => cfg.p_snps = value.parse().map_err(|_| bad("integer"))?,
            "pi1" => cfg.pi[0] = value.parse().map_err(|_| bad("number"))?,
            "pi2" => cfg.pi[1] = value.parse().map_err(|_| bad("number"))?,
            "pi3" => cfg.pi[2] = value.parse().map_err(|_| bad("number"))?,
            "pi4" => cfg.pi[3] = value.parse().map_err(|_| bad("number"))?,
            "pi5" => cfg.pi[4] = value.parse().map_err(|_| bad("number"))?,
            "sigma_x2" => cfg.sigma_x2 = value.parse().map_err(|_| bad("number"))?,
            "sigma_y2" => cfg.sigma_y2 = value.parse().map_err(|_| bad("number"))?,
            "sigma_u2" => cfg.sigma_u2 = value.parse().map_err(|_| bad("number"))?,
            "corr_pleio_mean" => cfg.corr_pleio_mean = value.parse().map_err(|_| bad("number"))?,
            "beta_xu" => cfg.beta_xu = value.parse().map_err(|_| bad("number"))?,
            "beta_yu" => cfg.beta_yu = value.parse().map_err(|_| bad("number"))?,
            "n_x" => cfg.n_x = value.parse().map_err(|_| bad("integer"))?,
            "n_y" => cfg.n_y = value.parse().map_err(|_| bad("integer"))?,
            "theta" => cfg.theta = value.parse().map_err(|_| bad("number"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad("integer"))?,
            "invalid_prop" => invalid_prop = Some(value.parse().map_err(|_| bad("number"))?),
            "variant" => {
                cfg.variant = match value {
                    "normal_corr" => Variant::NormalCorr,
                    "balanced_inside" => Variant::BalancedInside,
                    "directional_inside_violated" => Variant::DirectionalInsideViolated,
                    other => {
                        let mut parts = other.split(':');
                        match (parts.next(), parts.next(), parts.next(), parts.next()) {
                            (Some("uniform_corr"), Some(lo), Some(hi), None) => {
                                Variant::UniformCorr {
                                    lo: lo.parse().map_err(|_| bad("uniform bound"))?,
                                    hi: hi.parse().map_err(|_| bad("uniform bound"))?,
                                }
                            }
                            _ => return Err(bad("variant")),
                        }
                    }
                };
            }
            other => {
                return Err(CareError::Config(format!(
                    "scenario line {}: unknown key '{other}'",
                    lineno + 1
                )));
            }
        }
    }
    Ok((cfg, invalid_prop))
}
