//! Rerandomized instrument selection and winner's-curse removal.
//!
//! A SNP is selected when its exposure z-score plus independent pseudo-noise
//! `Z_j ~ N(0, eta^2)` clears the cutoff `lambda` in absolute value. Because
//! the selection event is randomized, a Rao-Blackwellized exposure effect
//! exists in closed form that is conditionally unbiased given selection,
//! so downstream estimation is free of winner's-curse bias.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{CareError, Result};
use crate::gwas::SummaryPair;
use crate::par::map_indexed;
use crate::rng::{substream, Purpose};
use crate::stats::{norm_cdf, norm_pdf, norm_sf, two_sided_z};

/// Parameters of the randomized selection step.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SelectionConfig {
    /// Cutoff on the randomized z-scale.
    pub lambda: f64,
    /// Standard deviation of the pseudo-noise. 0.5 balances enough
    /// randomization to break the winner's curse against selection
    /// stability, and is the recommended default.
    pub eta: f64,
    pub seed: u64,
}

impl SelectionConfig {
    pub fn new(lambda: f64, eta: f64, seed: u64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CareError::Config(format!("lambda must be > 0, got {lambda}")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(CareError::Config(format!("eta must be > 0, got {eta}")));
        }
        Ok(SelectionConfig { lambda, eta, seed })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.lambda, self.eta, self.seed).map(|_| ())
    }
}

impl Default for SelectionConfig {
    /// `lambda` from the suggestive GWAS threshold 5e-5, `eta = 0.5`.
    fn default() -> Self {
        SelectionConfig {
            lambda: lambda_from_pvalue(5e-5).expect("constant threshold"),
            eta: 0.5,
            seed: 0,
        }
    }
}

/// A pair that survived randomized selection, with its debiased exposure
/// effect and the matching variance correction.
#[derive(Clone, Debug, Serialize)]
pub struct SelectedInstrument {
    pub pair: SummaryPair,
    /// The realized pseudo-noise draw.
    pub z_pseudo: f64,
    /// Rao-Blackwellized exposure effect, conditionally unbiased given
    /// selection.
    pub beta_rb: f64,
    /// Variance correction such that `beta_rb^2 - var_rb` is conditionally
    /// unbiased for the squared true effect.
    pub var_rb: f64,
}

/// Selection cutoff corresponding to a two-sided p-value threshold:
/// the (1 - p/2) standard normal quantile.
pub fn lambda_from_pvalue(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CareError::Domain(format!(
            "p-value threshold must be in (0, 1), got {p}"
        )));
    }
    Ok(two_sided_z(p))
}

struct RbTerms {
    /// Conditional selection probability given the observed effect:
    /// `1 - Phi(A+) + Phi(A-)`, assembled from survival functions so both
    /// terms stay accurate in the tails.
    d: f64,
    phi_plus: f64,
    phi_minus: f64,
    a_plus: f64,
    a_minus: f64,
}

fn rb_terms(beta_x: f64, se_x: f64, lambda: f64, eta: f64) -> RbTerms {
    let a_plus = -beta_x / (se_x * eta) + lambda / eta;
    let a_minus = -beta_x / (se_x * eta) - lambda / eta;
    let d = norm_sf(a_plus) + norm_cdf(a_minus);
    RbTerms {
        d,
        phi_plus: norm_pdf(a_plus),
        phi_minus: norm_pdf(a_minus),
        a_plus,
        a_minus,
    }
}

fn check_inputs(beta_x: f64, se_x: f64, cfg: &SelectionConfig) -> Result<()> {
    cfg.validate()?;
    if !(se_x > 0.0 && se_x.is_finite()) || !beta_x.is_finite() {
        return Err(CareError::Domain(format!(
            "rao-blackwell inputs must be finite with se > 0, got beta={beta_x}, se={se_x}"
        )));
    }
    Ok(())
}

/// Rao-Blackwellized exposure effect
/// `beta - (se/eta) * (phi(A+) - phi(A-)) / (1 - Phi(A+) + Phi(A-))`
/// with `A± = -beta/(se*eta) ± lambda/eta`.
pub fn rb_debias(beta_x: f64, se_x: f64, cfg: &SelectionConfig) -> Result<f64> {
    check_inputs(beta_x, se_x, cfg)?;
    let t = rb_terms(beta_x, se_x, cfg.lambda, cfg.eta);
    if t.d <= 0.0 || !t.d.is_finite() {
        return Err(CareError::SelectionUnderflow(String::new()));
    }
    let value = beta_x - (se_x / cfg.eta) * (t.phi_plus - t.phi_minus) / t.d;
    if !value.is_finite() {
        return Err(CareError::SelectionUnderflow(String::new()));
    }
    Ok(value)
}

/// Variance correction paired with [`rb_debias`]:
/// `se^2 * (1 - (A+ phi(A+) - A- phi(A-)) / (eta^2 D) + ((phi(A+) - phi(A-)) / (eta D))^2)`.
///
/// The value may be negative for effects deep inside the rejection region;
/// only `beta_rb^2 - var_rb` has a direct interpretation.
pub fn rb_variance(beta_x: f64, se_x: f64, cfg: &SelectionConfig) -> Result<f64> {
    check_inputs(beta_x, se_x, cfg)?;
    let t = rb_terms(beta_x, se_x, cfg.lambda, cfg.eta);
    if t.d <= 0.0 || !t.d.is_finite() {
        return Err(CareError::SelectionUnderflow(String::new()));
    }
    let inv_eta2 = 1.0 / (cfg.eta * cfg.eta);
    let mills = (t.a_plus * t.phi_plus - t.a_minus * t.phi_minus) / t.d;
    let ratio = (t.phi_plus - t.phi_minus) / t.d;
    let value = se_x * se_x * (1.0 - inv_eta2 * mills + inv_eta2 * ratio * ratio);
    if !value.is_finite() {
        return Err(CareError::SelectionUnderflow(String::new()));
    }
    Ok(value)
}

/// Randomized selection over harmonized pairs.
///
/// The pseudo-noise for pair `j` comes from the substream keyed by
/// `(cfg.seed, j)`, so the selected set is reproducible, independent of
/// thread count, and stable under parallel evaluation.
pub fn select(pairs: &[SummaryPair], cfg: &SelectionConfig) -> Result<Vec<SelectedInstrument>> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(CareError::InsufficientInstruments { found: 0, required: 3 });
    }

    let cfg = *cfg;
    let drawn: Vec<Result<Option<SelectedInstrument>>> = map_indexed(pairs.len(), |j| {
        let pair = &pairs[j];
        let mut rng = substream(cfg.seed, Purpose::Select, j as u64);
        let z_pseudo: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            * cfg.eta;
        let z = pair.beta_x / pair.se_x + z_pseudo;
        if z.abs() <= cfg.lambda {
            return Ok(None);
        }
        let tag = |e| match e {
            CareError::SelectionUnderflow(_) => {
                CareError::SelectionUnderflow(pair.snp_id.clone())
            }
            other => other,
        };
        let beta_rb = rb_debias(pair.beta_x, pair.se_x, &cfg).map_err(tag)?;
        let var_rb = rb_variance(pair.beta_x, pair.se_x, &cfg).map_err(tag)?;
        Ok(Some(SelectedInstrument {
            pair: pair.clone(),
            z_pseudo,
            beta_rb,
            var_rb,
        }))
    });

    let mut selected = Vec::new();
    for item in drawn {
        if let Some(instr) = item? {
            selected.push(instr);
        }
    }
    if selected.len() < 3 {
        return Err(CareError::InsufficientInstruments {
            found: selected.len(),
            required: 3,
        });
    }
    Ok(selected)
}
