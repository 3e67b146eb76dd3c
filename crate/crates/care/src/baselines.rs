//! Reference estimators: inverse-variance weighting (fixed and random
//! effects) and the ablation that skips the winner's-curse correction.

use serde::Serialize;

use crate::bagging::{bagged_estimate, p_value, CareConfig};
use crate::error::{CareError, Result};
use crate::gwas::SummaryPair;
use crate::selection::SelectedInstrument;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    IvwFixed,
    IvwRandom,
    CareNoCorrection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IvwMode {
    Fixed,
    Random,
}

#[derive(Clone, Debug, Serialize)]
pub struct BaselineEstimate {
    pub method: BaselineMethod,
    pub theta: f64,
    pub se: f64,
    pub p_value: f64,
    pub k_instruments: usize,
}

/// Inverse-variance-weighted slope through the origin:
/// `theta = sum by*bx/sy^2 / sum bx^2/sy^2`.
///
/// Fixed effects: `se^2 = 1 / sum(bx^2/sy^2)`. Random effects: the fixed
/// standard error is inflated by `sqrt(max(1, phi))` with the
/// over-dispersion `phi = sum((by - theta*bx)^2/sy^2) / (k - 1)`, so it is
/// never below the fixed-effects value.
pub fn ivw(pairs: &[SummaryPair], mode: IvwMode) -> Result<BaselineEstimate> {
    let k = pairs.len();
    let required = match mode {
        IvwMode::Fixed => 1,
        IvwMode::Random => 3,
    };
    if k < required {
        return Err(CareError::InsufficientInstruments { found: k, required });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for p in pairs {
        let inv = 1.0 / (p.se_y * p.se_y);
        num += p.beta_y * p.beta_x * inv;
        den += p.beta_x * p.beta_x * inv;
    }
    if den <= 0.0 {
        return Err(CareError::Domain(
            "all exposure effects are zero; IVW slope is undefined".into(),
        ));
    }
    let theta = num / den;
    let se_fixed = (1.0 / den).sqrt();
    let (method, se) = match mode {
        IvwMode::Fixed => (BaselineMethod::IvwFixed, se_fixed),
        IvwMode::Random => {
            let mut rss = 0.0;
            for p in pairs {
                let resid = p.beta_y - theta * p.beta_x;
                rss += resid * resid / (p.se_y * p.se_y);
            }
            let phi = rss / (k as f64 - 1.0);
            (BaselineMethod::IvwRandom, se_fixed * phi.max(1.0).sqrt())
        }
    };
    Ok(BaselineEstimate {
        method,
        theta,
        se,
        p_value: p_value(theta, se),
        k_instruments: k,
    })
}

/// Deterministic hard-threshold selection: `|beta_x / se_x| > lambda`.
pub fn hard_select(pairs: &[SummaryPair], lambda: f64) -> Result<Vec<SelectedInstrument>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CareError::Config(format!("lambda must be > 0, got {lambda}")));
    }
    let selected: Vec<SelectedInstrument> = pairs
        .iter()
        .filter(|p| (p.beta_x / p.se_x).abs() > lambda)
        .map(|p| SelectedInstrument {
            pair: p.clone(),
            z_pseudo: 0.0,
            beta_rb: p.beta_x,
            var_rb: p.se_x * p.se_x,
        })
        .collect();
    if selected.len() < 3 {
        return Err(CareError::InsufficientInstruments {
            found: selected.len(),
            required: 3,
        });
    }
    Ok(selected)
}

/// The bagged estimator without winner's-curse correction: selection is
/// deterministic hard thresholding, the raw exposure effect stands in for
/// the debiased one, and the raw variance replaces the selection-adjusted
/// variance throughout the loss and refits.
pub fn care_no_correction(
    pairs: &[SummaryPair],
    lambda: f64,
    cfg: &CareConfig,
) -> Result<BaselineEstimate> {
    let instruments = hard_select(pairs, lambda)?;
    let estimate = bagged_estimate(&instruments, cfg)?;
    Ok(BaselineEstimate {
        method: BaselineMethod::CareNoCorrection,
        theta: estimate.theta_tilde,
        se: estimate.se,
        p_value: estimate.p_value,
        k_instruments: estimate.s_lambda,
    })
}
