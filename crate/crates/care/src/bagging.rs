//! Bootstrap-aggregated causal estimation and nonparametric delta-method
//! inference.
//!
//! Selected instruments are resampled `B` times with multinomial weights;
//! each replicate is screened for invalid instruments and refit on its
//! estimated valid set. The bagged estimate is the mean of the replicate
//! estimates, and its variance comes from the covariance between bootstrap
//! weights and replicate estimates (jackknife-after-bootstrap form).

use rand::Rng;
use serde::Serialize;

use crate::error::{CareError, Result};
use crate::gwas::SummaryPair;
use crate::par::map_indexed;
use crate::rng::{derive_seed, substream, Purpose};
use crate::screening::{gbic_best, ScreeningData, ScreeningProblem};
use crate::selection::{select, SelectedInstrument, SelectionConfig};
use crate::stats::{two_sided_p, two_sided_z};

/// Knobs of the bagged estimator.
#[derive(Clone, Debug, Serialize)]
pub struct CareConfig {
    /// Number of bootstrap replicates `B`.
    pub bootstrap_b: usize,
    /// Confidence/test level: the interval has level `1 - alpha`.
    pub alpha: f64,
    pub seed: u64,
    /// Coordinate-descent restarts per candidate valid count.
    pub restarts: usize,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Sample size entering the GBIC penalty. When absent, falls back to
    /// `median_j(1 / se_y_j^2)` over the selected instruments, which has the
    /// order of the outcome GWAS sample size.
    pub n_effective: Option<f64>,
    /// Replicates whose screening or refit degenerates are dropped; the run
    /// fails if their fraction exceeds this bound.
    pub max_invalid_replicate_fraction: f64,
    /// Retain per-replicate estimates and diagnostics. `None` keeps them
    /// automatically for `B <= 5000`.
    pub keep_replicates: Option<bool>,
}

impl Default for CareConfig {
    fn default() -> Self {
        CareConfig {
            bootstrap_b: 2000,
            alpha: 0.05,
            seed: 0,
            restarts: 1,
            rel_tol: crate::screening::DEFAULT_REL_TOL,
            max_iter: crate::screening::DEFAULT_MAX_ITER,
            n_effective: None,
            max_invalid_replicate_fraction: 0.01,
            keep_replicates: None,
        }
    }
}

impl CareConfig {
    fn validate(&self) -> Result<()> {
        if self.bootstrap_b < 2 {
            return Err(CareError::Config(format!(
                "bootstrap_b must be at least 2, got {}",
                self.bootstrap_b
            )));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(CareError::Config(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.max_invalid_replicate_fraction) {
            return Err(CareError::Config(format!(
                "max_invalid_replicate_fraction must be in [0, 1), got {}",
                self.max_invalid_replicate_fraction
            )));
        }
        if let Some(n) = self.n_effective {
            if n.is_nan() || n <= 1.0 {
                return Err(CareError::Config(format!(
                    "n_effective must exceed 1, got {n}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-replicate diagnostic row.
#[derive(Clone, Debug, Serialize)]
pub struct ReplicateDiag {
    pub b: usize,
    pub theta: f64,
    pub v: usize,
    pub converged: bool,
    pub excluded: bool,
}

/// The bagged estimate with delta-method inference and diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct CareEstimate {
    pub theta_tilde: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    /// Number of selected instruments.
    pub s_lambda: usize,
    /// Mean estimated valid count across retained replicates.
    pub mean_valid_count: f64,
    pub replicates_used: usize,
    pub replicates_excluded: usize,
    /// Per-instrument delta-method contributions; `se^2 = sum S_j^2`.
    pub per_iv_s: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_b: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<ReplicateDiag>>,
}

/// Multinomial bootstrap counts: `s_lambda` draws with replacement from the
/// selected set, keyed by `(seed, b_index)` so every replicate has its own
/// reproducible stream.
pub fn bootstrap_weights(s_lambda: usize, b_index: usize, seed: u64) -> Vec<u32> {
    let mut rng = substream(seed, Purpose::Bootstrap, b_index as u64);
    let mut weights = vec![0u32; s_lambda];
    for _ in 0..s_lambda {
        weights[rng.random_range(0..s_lambda)] += 1;
    }
    weights
}

/// Refit of theta on a valid multiset:
/// `sum_m by*brb/sy^2 / sum_m (brb^2 - var_rb)/sy^2`, each instrument
/// counted with its multiplicity. A non-positive denominator signals an
/// invalid replicate.
pub fn refit_theta(instruments: &[SelectedInstrument], multiplicity: &[u32]) -> Result<f64> {
    assert_eq!(
        instruments.len(),
        multiplicity.len(),
        "multiplicity length must match instrument count"
    );
    let mut num = 0.0;
    let mut den = 0.0;
    let mut any = false;
    for (instr, &m) in instruments.iter().zip(multiplicity) {
        if m == 0 {
            continue;
        }
        any = true;
        let m = m as f64;
        let inv = 1.0 / (instr.pair.se_y * instr.pair.se_y);
        num += m * instr.pair.beta_y * instr.beta_rb * inv;
        den += m * (instr.beta_rb * instr.beta_rb - instr.var_rb) * inv;
    }
    if !any {
        return Err(CareError::Domain("refit requires a nonempty valid multiset".into()));
    }
    if den <= 0.0 {
        return Err(CareError::WeakInstruments);
    }
    let theta = num / den;
    if !theta.is_finite() {
        return Err(CareError::WeakInstruments);
    }
    Ok(theta)
}

/// Nonparametric delta-method standard error of the bagged estimate:
/// `S_j = B^-1 sum_b (w_jb - mean_b w_jb)(theta_b - mean theta)` and
/// `se = sqrt(sum_j S_j^2)`.
pub fn delta_variance(weights: &[Vec<u32>], theta_b: &[f64]) -> Result<(f64, Vec<f64>)> {
    let b_count = theta_b.len();
    if b_count < 2 {
        return Err(CareError::Domain(format!(
            "delta method needs at least 2 replicates, got {b_count}"
        )));
    }
    if weights.len() != b_count {
        return Err(CareError::Domain(format!(
            "weights rows {} != replicate count {}",
            weights.len(),
            b_count
        )));
    }
    let s = weights[0].len();
    let inv_b = 1.0 / b_count as f64;
    let theta_bar: f64 = theta_b.iter().sum::<f64>() * inv_b;

    let mut w_bar = vec![0.0f64; s];
    for row in weights {
        if row.len() != s {
            return Err(CareError::Domain("ragged weights matrix".into()));
        }
        for (acc, &w) in w_bar.iter_mut().zip(row) {
            *acc += w as f64;
        }
    }
    for acc in &mut w_bar {
        *acc *= inv_b;
    }

    let mut per_iv_s = vec![0.0f64; s];
    for (row, &theta) in weights.iter().zip(theta_b) {
        let dt = theta - theta_bar;
        for ((acc, &w), &wb) in per_iv_s.iter_mut().zip(row).zip(&w_bar) {
            *acc += (w as f64 - wb) * dt;
        }
    }
    let mut var = 0.0;
    for acc in &mut per_iv_s {
        *acc *= inv_b;
        var += *acc * *acc;
    }
    Ok((var.sqrt(), per_iv_s))
}

/// Two-sided normal p-value of `theta/se`; degenerates to 1 when both are
/// zero and to 0 when the estimate is nonzero with zero spread.
pub fn p_value(theta: f64, se: f64) -> f64 {
    assert!(se >= 0.0, "standard error must be non-negative");
    if se == 0.0 {
        return if theta == 0.0 { 1.0 } else { 0.0 };
    }
    two_sided_p(theta / se)
}

struct ReplicateOutcome {
    weights: Vec<u32>,
    theta: f64,
    v: usize,
    converged: bool,
    excluded: bool,
}

/// Shared bagging engine; `care_estimate` feeds it rerandomized
/// instruments, the no-correction ablation feeds hard-thresholded ones.
pub(crate) fn bagged_estimate(
    instruments: &[SelectedInstrument],
    cfg: &CareConfig,
) -> Result<CareEstimate> {
    cfg.validate()?;
    let s_lambda = instruments.len();
    if s_lambda < 3 {
        return Err(CareError::InsufficientInstruments {
            found: s_lambda,
            required: 3,
        });
    }
    let data = ScreeningData::from_instruments(instruments)?;
    let n_effective = match cfg.n_effective {
        Some(n) => n,
        None => fallback_n_effective(instruments),
    };
    if n_effective.is_nan() || n_effective <= 1.0 {
        return Err(CareError::Config(format!(
            "n_effective must exceed 1, got {n_effective}"
        )));
    }

    let b_total = cfg.bootstrap_b;
    let outcomes: Vec<Result<ReplicateOutcome>> = map_indexed(b_total, |b| {
        let weights = bootstrap_weights(s_lambda, b, cfg.seed);
        let problem = ScreeningProblem::new(&data, weights.as_slice(), n_effective)?;
        let screen_seed = derive_seed(cfg.seed, Purpose::Estimator, b as u64);
        let solved = gbic_best(
            &problem,
            2..=s_lambda,
            cfg.restarts,
            cfg.rel_tol,
            cfg.max_iter,
            screen_seed,
        )
        .and_then(|best| {
            let theta = refit_theta(instruments, &best.valid_multiplicity)?;
            Ok((theta, best.v, best.converged))
        });
        match solved {
            Ok((theta, v, converged)) => Ok(ReplicateOutcome {
                weights,
                theta,
                v,
                converged,
                excluded: false,
            }),
            Err(CareError::WeakInstruments) | Err(CareError::ScreeningFailed) => {
                Ok(ReplicateOutcome {
                    weights,
                    theta: f64::NAN,
                    v: 0,
                    converged: false,
                    excluded: true,
                })
            }
            Err(other) => Err(other),
        }
    });

    let mut retained_weights = Vec::with_capacity(b_total);
    let mut retained_theta = Vec::with_capacity(b_total);
    let mut valid_count_sum = 0.0;
    let mut diags = Vec::with_capacity(b_total);
    let mut excluded = 0usize;
    for (b, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        if outcome.excluded {
            excluded += 1;
        } else {
            retained_theta.push(outcome.theta);
            retained_weights.push(outcome.weights);
            valid_count_sum += outcome.v as f64;
        }
        diags.push(ReplicateDiag {
            b,
            theta: outcome.theta,
            v: outcome.v,
            converged: outcome.converged,
            excluded: outcome.excluded,
        });
    }

    let fraction = excluded as f64 / b_total as f64;
    if fraction > cfg.max_invalid_replicate_fraction {
        return Err(CareError::UnstableEstimate {
            excluded,
            total: b_total,
            fraction,
            allowed: cfg.max_invalid_replicate_fraction,
        });
    }

    let used = retained_theta.len();
    let theta_tilde: f64 = retained_theta.iter().sum::<f64>() / used as f64;
    let (se, per_iv_s) = delta_variance(&retained_weights, &retained_theta)?;
    let z = two_sided_z(cfg.alpha);
    let keep = cfg.keep_replicates.unwrap_or(b_total <= 5000);

    Ok(CareEstimate {
        theta_tilde,
        se,
        ci_low: theta_tilde - z * se,
        ci_high: theta_tilde + z * se,
        p_value: p_value(theta_tilde, se),
        s_lambda,
        mean_valid_count: valid_count_sum / used as f64,
        replicates_used: used,
        replicates_excluded: excluded,
        per_iv_s,
        theta_b: keep.then_some(retained_theta),
        replicates: keep.then_some(diags),
    })
}

fn fallback_n_effective(instruments: &[SelectedInstrument]) -> f64 {
    let mut precisions: Vec<f64> = instruments
        .iter()
        .map(|i| 1.0 / (i.pair.se_y * i.pair.se_y))
        .collect();
    precisions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = precisions.len() / 2;
    if precisions.len() % 2 == 1 {
        precisions[mid]
    } else {
        0.5 * (precisions[mid - 1] + precisions[mid])
    }
}

/// The full estimator over harmonized, pruned pairs: rerandomized
/// selection, per-replicate bootstrap screening and refit, aggregation,
/// and delta-method inference.
pub fn care_estimate(
    pairs: &[SummaryPair],
    sel_cfg: &SelectionConfig,
    cfg: &CareConfig,
) -> Result<CareEstimate> {
    let instruments = select(pairs, sel_cfg)?;
    bagged_estimate(&instruments, cfg)
}
