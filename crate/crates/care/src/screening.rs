//! Invalid-instrument screening.
//!
//! Minimizes the bias-corrected least-squares loss
//!
//! ```text
//! sum_j w_j * [ (by_j - theta*brb_j - r_j)^2 / sy_j^2
//!               - theta^2 * srb_j^2 / sy_j^2 * 1(r_j = 0) ]
//! ```
//!
//! subject to exactly `v` instruments (counted with bootstrap multiplicity)
//! having `r_j = 0`. Both blocks of the alternating minimization have closed
//! forms: at fixed `theta` the optimal support keeps the `v` multiset
//! entries with the smallest per-copy criterion, and at fixed support the
//! optimal `theta` is a ratio of weighted sums. The number of valid
//! instruments is chosen by minimizing `loss + ln(n) * (s - v)`.

use std::borrow::Cow;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{CareError, Result};
use crate::rng::{substream, Purpose};
use crate::selection::SelectedInstrument;

/// Per-instrument constants of the screening objective, laid out for the
/// solver's inner loop. Built once per analysis; bootstrap replicates swap
/// only the weight vector.
#[derive(Clone, Debug)]
pub struct ScreeningData {
    beta_y: Vec<f64>,
    beta_rb: Vec<f64>,
    var_rb: Vec<f64>,
    inv_var_y: Vec<f64>,
    /// Raw exposure effects; only used for the restart initialization range.
    beta_x: Vec<f64>,
}

impl ScreeningData {
    pub fn from_instruments(instruments: &[SelectedInstrument]) -> Result<Self> {
        let n = instruments.len();
        let mut data = ScreeningData {
            beta_y: Vec::with_capacity(n),
            beta_rb: Vec::with_capacity(n),
            var_rb: Vec::with_capacity(n),
            inv_var_y: Vec::with_capacity(n),
            beta_x: Vec::with_capacity(n),
        };
        for (j, instr) in instruments.iter().enumerate() {
            let ok = instr.pair.beta_y.is_finite()
                && instr.beta_rb.is_finite()
                && instr.var_rb.is_finite()
                && instr.pair.se_y > 0.0
                && instr.pair.se_y.is_finite();
            if !ok {
                return Err(CareError::Domain(format!(
                    "non-finite screening inputs for instrument {j} ('{}')",
                    instr.pair.snp_id
                )));
            }
            data.beta_y.push(instr.pair.beta_y);
            data.beta_rb.push(instr.beta_rb);
            data.var_rb.push(instr.var_rb);
            data.inv_var_y.push(1.0 / (instr.pair.se_y * instr.pair.se_y));
            data.beta_x.push(instr.pair.beta_x);
        }
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.beta_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta_y.is_empty()
    }
}

/// A screening instance: shared per-instrument data, bootstrap
/// multiplicities (all ones for the plain problem), and the sample size
/// entering the GBIC penalty `ln(n_effective)`.
#[derive(Clone, Debug)]
pub struct ScreeningProblem<'a> {
    data: &'a ScreeningData,
    weights: Cow<'a, [u32]>,
    n_effective: f64,
    total_weight: usize,
}

impl<'a> ScreeningProblem<'a> {
    pub fn new(
        data: &'a ScreeningData,
        weights: impl Into<Cow<'a, [u32]>>,
        n_effective: f64,
    ) -> Result<Self> {
        let weights = weights.into();
        if weights.len() != data.len() {
            return Err(CareError::Config(format!(
                "weights length {} != instrument count {}",
                weights.len(),
                data.len()
            )));
        }
        let total_weight: usize = weights.iter().map(|&w| w as usize).sum();
        if total_weight == 0 {
            return Err(CareError::Config("all bootstrap weights are zero".into()));
        }
        if n_effective.is_nan() || n_effective <= 1.0 {
            return Err(CareError::Config(format!(
                "n_effective must exceed 1, got {n_effective}"
            )));
        }
        Ok(ScreeningProblem {
            data,
            weights,
            n_effective,
            total_weight,
        })
    }

    /// The plain problem with every instrument counted once.
    pub fn unweighted(data: &'a ScreeningData, n_effective: f64) -> Result<Self> {
        ScreeningProblem::new(data, vec![1u32; data.len()], n_effective)
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Multiset size `s`: the sum of the weights.
    pub fn total_weight(&self) -> usize {
        self.total_weight
    }

    pub fn n_effective(&self) -> f64 {
        self.n_effective
    }

    fn penalty(&self, v: usize) -> f64 {
        self.n_effective.ln() * (self.total_weight as f64 - v as f64)
    }

    /// The loss at `(theta, r)` with the indicator taken as exact equality
    /// `r_j == 0`, each instrument counted with its full weight.
    pub fn loss_evaluate(&self, theta: f64, r: &[f64]) -> f64 {
        assert_eq!(r.len(), self.data.len(), "r length must match instrument count");
        let d = self.data;
        let mut total = 0.0;
        for (j, (&rj, &w)) in r.iter().zip(self.weights.iter()).enumerate() {
            if w == 0 {
                continue;
            }
            let e = d.beta_y[j] - theta * d.beta_rb[j] - rj;
            let mut term = e * e;
            if rj == 0.0 {
                term -= theta * theta * d.var_rb[j];
            }
            total += w as f64 * term * d.inv_var_y[j];
        }
        total
    }
}

/// Support assignment produced by [`r_update`]: the shared `r` vector, the
/// number of copies of each instrument that are valid, and at most one
/// boundary instrument whose copies are split between valid and invalid
/// (possible only when bootstrap weights exceed one).
#[derive(Clone, Debug)]
pub struct RAssignment {
    pub r: Vec<f64>,
    pub multiplicity: Vec<u32>,
    /// `(index, residual)` for the invalid copies of a split instrument.
    pub split: Option<(usize, f64)>,
}

/// One solution of the constrained problem at a fixed valid count `v`.
#[derive(Clone, Debug, Serialize)]
pub struct ScreeningSolution {
    /// Valid count, counted with multiplicity over the sampled multiset.
    pub v: usize,
    pub theta_hat: f64,
    /// `r_hat[j] == 0` exactly when instrument `j` is (wholly or partially)
    /// valid in the sampled multiset; unsampled instruments carry their
    /// residual so they never masquerade as valid.
    pub r_hat: Vec<f64>,
    /// Copies of each instrument counted valid; sums to `v`.
    pub valid_multiplicity: Vec<u32>,
    pub loss: f64,
    pub gbic: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ScreeningSolution {
    /// Indices with at least one valid copy.
    pub fn valid_set(&self) -> Vec<usize> {
        self.valid_multiplicity
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Per-instrument constants packed in sampled order for the inner loop.
/// The ranking criterion is the quadratic `q(theta) = qa*theta^2 + qb*theta
/// + qc`; `qa` is also the corrected-strength term of the theta update and
/// `num_term`/`raw_term` complete the prefix sums.
#[derive(Clone, Copy)]
struct Item {
    qa: f64,
    qb: f64,
    qc: f64,
    /// `beta_y * beta_rb / sy^2`.
    num_term: f64,
    /// `beta_rb^2 / sy^2`.
    raw_term: f64,
    beta_rb: f64,
    inv_var_y: f64,
    weight: u32,
    /// Original instrument index; also the deterministic tie-break key.
    index: u32,
}

/// Reusable solver buffers, shared across iterations and `v` values.
struct Scratch {
    items: Vec<Item>,
    /// `(criterion, position into items)`, kept sorted by criterion. The
    /// order survives across iterations, so the adaptive sort is nearly
    /// linear once iterates settle.
    keyed: Vec<(f64, u32)>,
}

impl Scratch {
    fn for_problem(problem: &ScreeningProblem) -> Scratch {
        let d = problem.data;
        let items: Vec<Item> = (0..d.len())
            .filter(|&j| problem.weights[j] > 0)
            .map(|j| {
                let inv = d.inv_var_y[j];
                let brb = d.beta_rb[j];
                Item {
                    qa: (brb * brb - d.var_rb[j]) * inv,
                    qb: -2.0 * d.beta_y[j] * brb * inv,
                    qc: d.beta_y[j] * d.beta_y[j] * inv,
                    num_term: d.beta_y[j] * brb * inv,
                    raw_term: brb * brb * inv,

                    beta_rb: brb,
                    inv_var_y: inv,
                    weight: problem.weights[j],
                    index: j as u32,
                }
            })
            .collect();
        let keyed: Vec<(f64, u32)> = (0..items.len() as u32).map(|p| (0.0, p)).collect();
        Scratch { items, keyed }
    }

    /// Computes the per-copy criterion at `theta` and sorts by it. Between
    /// nearby iterates the order rarely changes, so an in-order pass that
    /// detects sortedness first skips most of the sorting work.
    fn rank(&mut self, theta: f64) {
        let items = &self.items;
        let mut sorted = true;
        let mut prev = f64::NEG_INFINITY;
        for slot in self.keyed.iter_mut() {
            let it = &items[slot.1 as usize];
            let q = (it.qa * theta + it.qb) * theta + it.qc;
            slot.0 = q;
            sorted &= q >= prev;
            prev = q;
        }
        if !sorted {
            self.keyed.sort_unstable_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .expect("criterion is finite")
                    .then_with(|| items[a.1 as usize].index.cmp(&items[b.1 as usize].index))
            });
        }
    }

    /// Valid-prefix sums for the theta update: the `v` smallest multiset
    /// copies in the current order. Returns `(num, den, raw)` where `den`
    /// is the prefix's corrected strength and `raw` its uncorrected second
    /// moment, used by the identification guard.
    fn prefix_sums(&self, v: usize) -> (f64, f64, f64) {
        let mut remaining = v;
        let mut num = 0.0;
        let mut den = 0.0;
        let mut raw = 0.0;
        for &(_, pos) in &self.keyed {
            let it = &self.items[pos as usize];
            let m = (it.weight as usize).min(remaining) as f64;
            num += m * it.num_term;
            den += m * it.qa;
            raw += m * it.raw_term;
            remaining -= m as usize;
            if remaining == 0 {
                break;
            }
        }
        (num, den, raw)
    }

    /// Loss of the assignment built at `theta_assign`, evaluated at `theta`.
    /// Invalid copies carry `r = beta_y - theta_assign * beta_rb`.
    fn assignment_loss(&self, v: usize, theta_assign: f64, theta: f64) -> f64 {
        let mut remaining = v;
        let mut total = 0.0;
        for &(_, pos) in &self.keyed {
            let it = &self.items[pos as usize];
            let w = it.weight as usize;
            let m = w.min(remaining);
            remaining -= m;
            if m > 0 {
                total += m as f64 * ((it.qa * theta + it.qb) * theta + it.qc);
            }
            if m < w {
                // r was zeroed against theta_assign, so the residual left at
                // theta is the drift between the two iterates.
                let drift = (theta_assign - theta) * it.beta_rb;
                total += (w - m) as f64 * drift * drift * it.inv_var_y;
            }
        }
        total
    }
}

/// Optimal support of size `v` at fixed `theta` (counted with multiplicity):
/// keeps the `v` multiset copies with the smallest per-copy criterion
/// `(beta_y - theta*beta_rb)^2/sy^2 - theta^2*var_rb/sy^2` and assigns every
/// other copy its loss-annihilating residual.
pub fn r_update(problem: &ScreeningProblem, theta: f64, v: usize) -> Result<RAssignment> {
    if !theta.is_finite() {
        return Err(CareError::Domain(format!("theta must be finite, got {theta}")));
    }
    if v == 0 || v > problem.total_weight() {
        return Err(CareError::Domain(format!(
            "v must be in [1, {}], got {v}",
            problem.total_weight()
        )));
    }
    let mut scratch = Scratch::for_problem(problem);
    scratch.rank(theta);
    Ok(materialize_assignment(problem, &scratch, v, theta))
}

fn materialize_assignment(
    problem: &ScreeningProblem,
    scratch: &Scratch,
    v: usize,
    theta: f64,
) -> RAssignment {
    let d = problem.data;
    let n = d.len();
    let mut r = vec![0.0; n];
    let mut multiplicity = vec![0u32; n];
    let mut split = None;

    // Residuals everywhere first; valid instruments are zeroed below.
    for (j, slot) in r.iter_mut().enumerate() {
        *slot = d.beta_y[j] - theta * d.beta_rb[j];
    }
    let mut remaining = v;
    for &(_, pos) in &scratch.keyed {
        if remaining == 0 {
            break;
        }
        let it = &scratch.items[pos as usize];
        let j = it.index as usize;
        let w = it.weight as usize;
        let m = w.min(remaining);
        remaining -= m;
        multiplicity[j] = m as u32;
        if m < w {
            split = Some((j, r[j]));
        }
        r[j] = 0.0;
    }
    RAssignment { r, multiplicity, split }
}

/// Closed-form optimizer of the loss over `theta` at a fixed support:
/// `theta = sum_valid w*by*brb/sy^2 / sum_valid w*(brb^2 - var_rb)/sy^2`.
///
/// Errors with `WeakInstruments` when the bias-corrected second moment in
/// the denominator is non-positive.
pub fn theta_update(problem: &ScreeningProblem, r: &[f64]) -> Result<f64> {
    assert_eq!(r.len(), problem.data.len(), "r length must match instrument count");
    let d = problem.data;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut any_valid = false;
    for (j, (&rj, &w)) in r.iter().zip(problem.weights.iter()).enumerate() {
        if w == 0 || rj != 0.0 {
            continue;
        }
        any_valid = true;
        let brb = d.beta_rb[j];
        let inv = d.inv_var_y[j];
        num += w as f64 * d.beta_y[j] * brb * inv;
        den += w as f64 * (brb * brb - d.var_rb[j]) * inv;
    }
    if !any_valid {
        return Err(CareError::Domain(
            "theta update requires at least one valid sampled instrument".into(),
        ));
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

/// Plausibility interval for theta iterates.
///
/// The corrected loss is unbounded below: over supports whose corrected
/// instrument strength `sum (brb^2 - var_rb)/sy^2` is non-positive, the
/// objective falls without limit as `|theta|` grows, and a cloud of
/// noise-only instruments can be aligned with any slope. Descent is
/// therefore confined to an interval anchored at the full-sample corrected
/// weighted-least-squares estimate (the one support that always contains
/// the strong instruments and needs no initialization), widened by eight
/// overdispersion-inflated standard errors and by four times its own
/// magnitude. Solutions that finish on the boundary are the would-be
/// escapes and are rejected as weak-instrument failures.
fn theta_box(problem: &ScreeningProblem) -> (f64, f64) {
    let d = problem.data;
    let s_total = problem.total_weight() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..d.len() {
        let w = problem.weights[j] as f64;
        if w == 0.0 {
            continue;
        }
        let brb = d.beta_rb[j];
        let inv = d.inv_var_y[j];
        num += w * d.beta_y[j] * brb * inv;
        den += w * (brb * brb - d.var_rb[j]) * inv;
    }
    if den > 0.0 && s_total >= 2.0 {
        let center = num / den;
        if center.is_finite() {
            let mut resid_sum = 0.0;
            for j in 0..d.len() {
                let w = problem.weights[j] as f64;
                if w == 0.0 {
                    continue;
                }
                let resid = d.beta_y[j] - center * d.beta_rb[j];
                resid_sum += w * resid * resid * d.inv_var_y[j];
            }
            let phi = (resid_sum / (s_total - 1.0)).max(1.0);
            let se_eff = (phi / den).sqrt();
            let slack = 1e-8 * (1.0 + center.abs());
            let half = (8.0 * se_eff).max(4.0 * center.abs()) + slack;
            return (center - half, center + half);
        }
    }
    // Degenerate full sample: fall back to the widened ratio hull.
    let (lo, hi) = init_range(problem);
    let width = hi - lo;
    let slack = 1e-8 * (1.0 + lo.abs() + hi.abs());
    (lo - 0.5 * width - slack, hi + 0.5 * width + slack)
}

/// A converged descent without the materialized vectors; `finish` turns it
/// into a full [`ScreeningSolution`].
#[derive(Clone, Copy, Debug)]
struct CoreSolution {
    v: usize,
    /// The iterate that produced the final support.
    theta_assign: f64,
    theta_hat: f64,
    loss: f64,
    gbic: f64,
    iterations: usize,
    converged: bool,
}

fn bcd_core(
    problem: &ScreeningProblem,
    scratch: &mut Scratch,
    v: usize,
    init_theta: f64,
    rel_tol: f64,
    max_iter: usize,
    box_bounds: (f64, f64),
    mut trace: Option<&mut Vec<f64>>,
) -> Result<CoreSolution> {
    if !init_theta.is_finite() {
        return Err(CareError::Domain(format!(
            "initial theta must be finite, got {init_theta}"
        )));
    }
    if rel_tol.is_nan() || rel_tol <= 0.0 {
        return Err(CareError::Domain(format!("rel_tol must be > 0, got {rel_tol}")));
    }
    if v == 0 || v > problem.total_weight() {
        return Err(CareError::Domain(format!(
            "v must be in [1, {}], got {v}",
            problem.total_weight()
        )));
    }

    let (box_lo, box_hi) = box_bounds;
    let mut theta = init_theta.clamp(box_lo, box_hi);
    let mut theta_prev = f64::NAN;
    let mut iterations = 0usize;
    let mut converged = false;
    let mut edge_hits = 0u32;
    let (theta_assign, theta_final) = loop {
        scratch.rank(theta);
        let (num, den, raw) = scratch.prefix_sums(v);
        if den <= 0.0 {
            return Err(CareError::WeakInstruments);
        }
        // Identification guard: for a truly null instrument, brb^2 and
        // var_rb have equal expectation, so a support whose corrected
        // strength is under half its raw strength is dominated by selection
        // noise. Such supports can push the corrected loss arbitrarily low
        // without identifying anything.
        if den <= 0.5 * raw {
            return Err(CareError::WeakInstruments);
        }
        let theta_next = (num / den).clamp(box_lo, box_hi);
        if !theta_next.is_finite() {
            return Err(CareError::WeakInstruments);
        }
        if theta_next == box_lo || theta_next == box_hi {
            // The unconstrained step wants out of the plausible range; a
            // trajectory doing this repeatedly has no interior minimum.
            edge_hits += 1;
            if edge_hits >= 3 {
                return Err(CareError::WeakInstruments);
            }
        }
        iterations += 1;
        if let Some(tr) = trace.as_deref_mut() {
            // The objective value of the iterate pair (theta, r(theta)):
            // the invalid residuals are freshly annihilated, so this is the
            // sequence the alternation drives downward.
            tr.push(scratch.assignment_loss(v, theta, theta));
        }
        if (theta_next - theta).abs() <= rel_tol * theta.abs() {
            converged = true;
            break (theta, theta_next);
        }
        // Once the support stabilizes, theta is a fixed point of the
        // alternation, so non-convergence means the support is flapping:
        // a period-two limit cycle with constant loss. Stop when detected.
        if theta_next == theta_prev || iterations >= max_iter {
            break (theta, theta_next);
        }
        theta_prev = theta;
        theta = theta_next;
    };

    // A final iterate pinned to the box edge is not a stationary point of
    // the objective; the restricted problem has no interior minimum.
    if theta_final == box_lo || theta_final == box_hi {
        return Err(CareError::WeakInstruments);
    }

    let loss = scratch.assignment_loss(v, theta_assign, theta_final);
    Ok(CoreSolution {
        v,
        theta_assign,
        theta_hat: theta_final,
        loss,
        gbic: loss + problem.penalty(v),
        iterations,
        converged,
    })
}

/// Materializes the support vectors of a core solution. Re-ranks the
/// scratch at the assignment iterate, which reproduces the final support.
fn finish(problem: &ScreeningProblem, scratch: &mut Scratch, core: &CoreSolution) -> ScreeningSolution {
    scratch.rank(core.theta_assign);
    let assignment = materialize_assignment(problem, scratch, core.v, core.theta_assign);
    ScreeningSolution {
        v: core.v,
        theta_hat: core.theta_hat,
        r_hat: assignment.r,
        valid_multiplicity: assignment.multiplicity,
        loss: core.loss,
        gbic: core.gbic,
        iterations: core.iterations,
        converged: core.converged,
    }
}

/// Block coordinate descent from `init_theta` at a fixed valid count.
///
/// Alternates the closed-form support update and theta update; each full
/// iteration can only decrease the loss. Stops when the relative change of
/// theta falls below `rel_tol` (`converged = true`) or after `max_iter`
/// iterations (`converged = false`, last iterate reported).
pub fn bcd_solve(
    problem: &ScreeningProblem,
    v: usize,
    init_theta: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<ScreeningSolution> {
    let mut scratch = Scratch::for_problem(problem);
    let bounds = theta_box(problem);
    let core = bcd_core(problem, &mut scratch, v, init_theta, rel_tol, max_iter, bounds, None)?;
    Ok(finish(problem, &mut scratch, &core))
}

/// [`bcd_solve`] that also reports the loss after every iteration, for
/// verifying monotone descent.
pub fn bcd_solve_traced(
    problem: &ScreeningProblem,
    v: usize,
    init_theta: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(ScreeningSolution, Vec<f64>)> {
    let mut scratch = Scratch::for_problem(problem);
    let bounds = theta_box(problem);
    let mut trace = Vec::new();
    let core = bcd_core(
        problem,
        &mut scratch,
        v,
        init_theta,
        rel_tol,
        max_iter,
        bounds,
        Some(&mut trace),
    )?;
    Ok((finish(problem, &mut scratch, &core), trace))
}

/// The GBIC scan output: the winning solution and, when requested, the full
/// per-`v` path (best restart per `v`).
#[derive(Clone, Debug)]
pub struct GbicOutcome {
    pub best: ScreeningSolution,
    pub path: Vec<ScreeningSolution>,
}

/// Uniform initialization range over sampled ratio estimates `by/bx`.
fn init_range(problem: &ScreeningProblem) -> (f64, f64) {
    let d = problem.data;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..d.len() {
        if problem.weights[j] == 0 {
            continue;
        }
        let ratio = d.beta_y[j] / d.beta_x[j];
        if ratio.is_finite() {
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    if lo > hi {
        (-1.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn gbic_scan(
    problem: &ScreeningProblem,
    v_range: RangeInclusive<usize>,
    restarts: usize,
    rel_tol: f64,
    max_iter: usize,
    seed: u64,
    keep_path: bool,
) -> Result<GbicOutcome> {
    let (v_lo, v_hi) = (*v_range.start(), *v_range.end());
    if v_lo < 2 || v_hi > problem.total_weight() || v_lo > v_hi {
        return Err(CareError::Domain(format!(
            "v range {v_lo}..={v_hi} must lie within [2, {}]",
            problem.total_weight()
        )));
    }
    if restarts == 0 {
        return Err(CareError::Config("restarts must be at least 1".into()));
    }

    let (lo, hi) = init_range(problem);
    let bounds = theta_box(problem);
    let mut scratch = Scratch::for_problem(problem);
    let mut best: Option<CoreSolution> = None;
    let mut path = Vec::new();

    // Scan v from large to small, carrying the previous solution's theta as
    // a warm-start candidate. The top of the path (v = s) is independent of
    // initialization, so the chain pins every v to a solution reachable
    // from the identified regime even when a random restart wanders off.
    let mut warm: Option<f64> = None;
    for v in (v_lo..=v_hi).rev() {
        let mut best_v: Option<CoreSolution> = None;
        let consider = |sol: CoreSolution, best_v: &mut Option<CoreSolution>| {
            if best_v.is_none_or(|b| sol.loss < b.loss) {
                *best_v = Some(sol);
            }
        };
        let mut random_starts = restarts;
        if let Some(theta0) = warm {
            // The warm start counts as the first of the `restarts` starts.
            random_starts -= 1;
            match bcd_core(problem, &mut scratch, v, theta0, rel_tol, max_iter, bounds, None) {
                Ok(sol) => consider(sol, &mut best_v),
                Err(CareError::WeakInstruments) => {}
                Err(other) => return Err(other),
            }
        }
        // Restart draws are uniform over the ratio range, projected onto the
        // plausibility interval: starting outside it only buys edge-abort
        // churn.
        let (init_lo, init_hi) = (lo.max(bounds.0), hi.min(bounds.1));
        for t in 0..random_starts {
            let init = if init_hi > init_lo {
                use rand::Rng;
                let mut rng = substream(
                    seed,
                    Purpose::RestartInit,
                    ((v as u64) << 20) | (t as u64 & 0xF_FFFF),
                );
                init_lo + (init_hi - init_lo) * rng.random::<f64>()
            } else {
                0.5 * (lo + hi)
            };
            match bcd_core(problem, &mut scratch, v, init, rel_tol, max_iter, bounds, None) {
                Ok(sol) => consider(sol, &mut best_v),
                Err(CareError::WeakInstruments) => continue,
                Err(other) => return Err(other),
            }
        }
        let Some(sol) = best_v else { continue };
        warm = Some(sol.theta_hat);
        // Strict `<` while scanning downward, so exact GBIC ties resolve
        // toward the larger valid count.
        if best.is_none_or(|b| sol.gbic < b.gbic) {
            best = Some(sol);
        }
        if keep_path {
            path.push(sol);
        }
    }
    path.reverse();

    match best {
        Some(best) => Ok(GbicOutcome {
            best: finish(problem, &mut scratch, &best),
            path: path
                .iter()
                .map(|core| finish(problem, &mut scratch, core))
                .collect(),
        }),
        None => Err(CareError::ScreeningFailed),
    }
}

/// Scans `v` over `v_range`, solving each with `restarts` uniformly drawn
/// initial values (streams keyed by `(seed, v, restart)`), and returns the
/// solution minimizing `GBIC(v) = loss(v) + ln(n_effective) * (s - v)`,
/// ties broken toward larger `v`, together with the full path.
///
/// Valid counts whose every restart fails the weak-instrument check are
/// skipped; if all fail, the screening itself fails.
pub fn gbic_path(
    problem: &ScreeningProblem,
    v_range: RangeInclusive<usize>,
    restarts: usize,
    rel_tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<GbicOutcome> {
    gbic_scan(problem, v_range, restarts, rel_tol, max_iter, seed, true)
}

/// [`gbic_path`] without retaining the per-`v` path.
pub fn gbic_best(
    problem: &ScreeningProblem,
    v_range: RangeInclusive<usize>,
    restarts: usize,
    rel_tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<ScreeningSolution> {
    gbic_scan(problem, v_range, restarts, rel_tol, max_iter, seed, false)
        .map(|outcome| outcome.best)
}

/// Default stopping tolerance of the coordinate descent.
pub const DEFAULT_REL_TOL: f64 = 1e-7;
/// Default iteration cap; convergence typically takes well under ten.
pub const DEFAULT_MAX_ITER: usize = 100;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::instrument;

    fn exact_data(theta0: f64, betas: &[f64]) -> ScreeningData {
        let instruments: Vec<SelectedInstrument> = betas
            .iter()
            .map(|&b| instrument(b, theta0 * b, 0.0))
            .collect();
        ScreeningData::from_instruments(&instruments).unwrap()
    }

    #[test]
    fn loss_is_zero_when_residuals_are_annihilated() {
        let data = exact_data(0.3, &[0.01, 0.02, 0.03]);
        let problem = ScreeningProblem::unweighted(&data, 1000.0).unwrap();
        let theta = 0.7;
        let r: Vec<f64> = (0..3)
            .map(|j| data.beta_y[j] - theta * data.beta_rb[j])
            .collect();
        assert!(r.iter().all(|&x| x != 0.0));
        assert_eq!(problem.loss_evaluate(theta, &r), 0.0);
    }

    #[test]
    fn loss_closed_form_at_theta_zero() {
        let data = exact_data(0.3, &[0.01, 0.02, 0.03]);
        let problem = ScreeningProblem::unweighted(&data, 1000.0).unwrap();
        let r = vec![0.0; 3];
        let expected: f64 = (0..3)
            .map(|j| data.beta_y[j] * data.beta_y[j] * data.inv_var_y[j])
            .sum();
        let got = problem.loss_evaluate(0.0, &r);
        assert!((got - expected).abs() < 1e-15 * expected.abs());
    }

    #[test]
    fn r_update_with_full_valid_count_zeroes_everything() {
        let data = exact_data(0.3, &[0.01, 0.02, 0.03]);
        let problem = ScreeningProblem::unweighted(&data, 1000.0).unwrap();
        let a = r_update(&problem, 0.1, 3).unwrap();
        assert!(a.r.iter().all(|&x| x == 0.0));
        assert_eq!(a.multiplicity, vec![1, 1, 1]);
        assert!(a.split.is_none());
    }

    #[test]
    fn r_update_marks_largest_criterion_invalid() {
        // Two instruments where the first has the larger criterion.
        let instruments = vec![instrument(0.01, 0.05, 0.0), instrument(0.01, 0.001, 0.0)];
        let data = ScreeningData::from_instruments(&instruments).unwrap();
        let problem = ScreeningProblem::unweighted(&data, 1000.0).unwrap();
        let a = r_update(&problem, 0.0, 1).unwrap();
        assert!(a.r[0] != 0.0, "larger criterion gets the nonzero residual");
        assert_eq!(a.r[1], 0.0);
        assert_eq!(a.multiplicity, vec![0, 1]);
    }

    #[test]
    fn r_update_rejects_out_of_range_v() {
        let data = exact_data(0.3, &[0.01, 0.02]);
        let problem = ScreeningProblem::unweighted(&data, 1000.0).unwrap();
        assert!(r_update(&problem, 0.0, 0).is_err());
        assert!(r_update(&problem, 0.0, 3).is_err());
    }

    #[test]
    fn theta_update_is_the_wald_ratio_for_one_instrument() {
        let instruments = vec![instrument(0.02, 0.006, 0.0)];
        let data = ScreeningData::from_instruments(&instruments).unwrap();
        let problem = ScreeningProblem::unweighted(&data, 1000.0).unwrap();
        let theta = theta_update(&problem, &[0.0]).unwrap();
        assert!((theta - 0.3).abs() < 1e-15);
    }

    #[test]
    fn theta_update_matches_wls_through_origin() {
        // All valid, var_rb = 0: the classic weighted least-squares slope.
        let instruments = vec![
            instrument(0.01, 0.004, 0.0),
            instrument(0.02, 0.005, 0.0),
            instrument(0.03, 0.010, 0.0),
        ];
        let data = ScreeningData::from_instruments(&instruments).unwrap();
        let problem = ScreeningProblem::unweighted(&data, 1000.0).unwrap();
        let theta = theta_update(&problem, &[0.0, 0.0, 0.0]).unwrap();
        let num: f64 = instruments
            .iter()
            .map(|i| i.pair.beta_y * i.pair.beta_x / (i.pair.se_y * i.pair.se_y))
            .sum();
        let den: f64 = instruments
            .iter()
            .map(|i| i.pair.beta_x * i.pair.beta_x / (i.pair.se_y * i.pair.se_y))
            .sum();
        assert!((theta - num / den).abs() < 1e-15);
    }

    #[test]
    fn theta_update_flags_nonpositive_denominator() {
        let instruments = vec![instrument(0.001, 0.0, 0.01)];
        let data = ScreeningData::from_instruments(&instruments).unwrap();
        let problem = ScreeningProblem::unweighted(&data, 1000.0).unwrap();
        assert!(matches!(
            theta_update(&problem, &[0.0]),
            Err(CareError::WeakInstruments)
        ));
    }

    #[test]
    fn bcd_finds_exact_fixed_point_in_one_step() {
        let theta0 = 0.42;
        let data = exact_data(theta0, &[0.01, 0.02, 0.03, 0.04]);
        let problem = ScreeningProblem::unweighted(&data, 1000.0).unwrap();
        let sol = bcd_solve(&problem, 4, 5.0, 1e-7, 100).unwrap();
        assert!(sol.converged);
        assert!((sol.theta_hat - theta0).abs() < 1e-12);
        assert!(sol.loss.abs() < 1e-18);
    }

    #[test]
    fn gbic_two_point_identity() {
        let data = exact_data(0.3, &[0.01, 0.02, 0.03, 0.04]);
        let problem = ScreeningProblem::unweighted(&data, 50_000.0).unwrap();
        let out = gbic_path(&problem, 2..=4, 1, 1e-7, 100, 3).unwrap();
        let kappa = 50_000.0f64.ln();
        for pair in out.path.windows(2) {
            let lhs = pair[1].gbic - pair[0].gbic;
            let rhs =
                pair[1].loss - pair[0].loss - kappa * (pair[1].v as f64 - pair[0].v as f64);
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn split_assignments_only_occur_with_weights() {
        let data = exact_data(0.3, &[0.01, 0.02, 0.03]);
        let problem = ScreeningProblem::new(&data, vec![2u32, 2, 2], 1000.0).unwrap();
        let a = r_update(&problem, 0.05, 3).unwrap();
        assert_eq!(a.multiplicity.iter().sum::<u32>(), 3);
        assert!(a.split.is_some());
        let (j, residual) = a.split.unwrap();
        assert_eq!(a.multiplicity[j], 1);
        assert!(residual != 0.0);
    }
}
