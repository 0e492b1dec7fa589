//! The adaptive measurement loop: sample in growing batches, estimate the
//! energy and its shot noise from all data in hand, and between batches
//! descend the data-driven variance estimate with respect to the POVM
//! parameters (finite-difference gradient + backtracking line search), with
//! the reset / freeze rules and prior recycling of the outer algorithm.

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::povm::{
    estimate::{self, ShotData},
    ProductPovm, ShotRecord, N_PARAMS,
};
use crate::simulator::{self, MomentTensor, StateVector};

/// Shot-batch schedule: `initial_batch` shots first, each following batch
/// grown by `growth_factor`, hard-capped at `shot_cap` cumulative shots per
/// measurement procedure.
#[derive(Clone, Debug)]
pub struct MeasurementSchedule {
    pub initial_batch: usize,
    pub growth_factor: f64,
    pub shot_cap: usize,
}

impl Default for MeasurementSchedule {
    fn default() -> Self {
        MeasurementSchedule { initial_batch: 512, growth_factor: 1.5, shot_cap: 200_000 }
    }
}

impl MeasurementSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.initial_batch == 0 {
            return Err(Error::Invalid("initial_batch must be positive".into()));
        }
        if !(self.growth_factor >= 1.0) {
            return Err(Error::Invalid("growth_factor must be ≥ 1".into()));
        }
        if self.shot_cap < self.initial_batch {
            return Err(Error::Invalid("shot_cap smaller than the first batch".into()));
        }
        Ok(())
    }
}

/// When to stop measuring.
pub enum StopRule<'a> {
    /// Stop once std_error(H) ≤ the target (energy-threshold mode).
    EnergyStdError(f64),
    /// Delegated predicate over the accumulated data (gradient mode).
    Predicate(Box<dyn FnMut(&ShotData) -> Result<bool> + 'a>),
}

/// Measurement access to the (fixed) state being estimated.
pub trait PovmSampler {
    fn sample(&mut self, povm: &ProductPovm, n_shots: usize, seed: u64) -> Result<ShotRecord>;
}

/// Sampler backed by a statevector's precomputed moment tensor.
pub struct StateSampler {
    moments: MomentTensor,
}

impl StateSampler {
    pub fn new(state: &StateVector) -> Result<Self> {
        Ok(StateSampler { moments: simulator::pauli_moments(state)? })
    }

    pub fn moments(&self) -> &MomentTensor {
        &self.moments
    }
}

impl PovmSampler for StateSampler {
    fn sample(&mut self, povm: &ProductPovm, n_shots: usize, seed: u64) -> Result<ShotRecord> {
        simulator::sample_povm_from_moments(&self.moments, povm, n_shots, seed)
    }
}

/// One row per batch of the optimisation trace.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub batch_index: usize,
    pub cumulative_shots: usize,
    pub energy_mean: f64,
    pub std_error: f64,
    pub epsilon_e: f64,
    pub accepted_step: f64,
    pub event: String,
}

pub struct OptimiseOutcome {
    /// Best-so-far POVM by recorded ε_E.
    pub povm: ProductPovm,
    /// Every shot taken, batch by batch, with its producing POVM's duals.
    pub data: ShotData,
    pub trace: Vec<TraceRow>,
    pub stopped: bool,
    pub budget_exhausted: bool,
    pub total_resets: usize,
}

const FD_STEP: f64 = 1e-3;
const LINE_SEARCH_BASE: f64 = 1.0;
const LINE_SEARCH_HALVINGS: u32 = 12;
/// Candidates whose dual frame is this ill-conditioned are numerically
/// untrustworthy under a finite-sample prediction; skip them.
const MAX_DUAL_CONDITION: f64 = 1e6;
/// Predicted relative improvement below this is indistinguishable from
/// finite-sample noise in the moment table; taking such steps lets the
/// optimiser chase noise and drift away from genuinely good POVMs.
const MIN_RELATIVE_GAIN: f64 = 5e-3;
/// A batch whose own ε_E is this much above the best batch's counts as a
/// regression (the margin covers sampling noise of the per-batch ε).
const RESET_MARGIN: f64 = 0.10;
/// Regressions in a row tolerated before the POVM is frozen at the best seen.
const MAX_STRIKES: usize = 3;
/// Smaller batches carry too little data for their ε_E to rank POVMs — the
/// per-shot estimate is heavy-tailed, so variance estimates off a few
/// thousand shots swing by tens of percent. Leave such batches out of the
/// best / regression bookkeeping entirely.
const MIN_ATTRIBUTION_SHOTS: usize = 10_000;

/// The measurement loop: returns once the stop rule holds or the schedule's
/// shot budget is exhausted (flagged, not an error).
///
/// POVM quality is tracked per batch — each batch is sampled under exactly
/// one POVM, so its own ε_E estimate attributes quality correctly, while the
/// pooled ε_E (reported in the trace) blends every POVM used so far and lags
/// behind recent changes.
pub fn optimise_povm(
    h: &PauliSum,
    sampler: &mut dyn PovmSampler,
    schedule: &MeasurementSchedule,
    mut stop: StopRule,
    prior: Option<ProductPovm>,
    seed: u64,
) -> Result<OptimiseOutcome> {
    schedule.validate()?;
    let n = h.n_qubits();
    let sic = ProductPovm::uniform_sic(n);
    let check_prior = match &prior {
        Some(p) => p.fingerprint() != sic.fingerprint(),
        None => false,
    };
    let mut povm = prior.unwrap_or_else(|| sic.clone());
    let mut data = ShotData::new(n);
    let mut trace: Vec<TraceRow> = Vec::new();

    // best POVM seen, keyed by its own batch's ε_E
    let mut best: Option<(f64, ProductPovm)> = None;
    let mut strikes = 0usize;
    let mut frozen = false;
    let mut total_resets = 0usize;

    let mut stopped = false;
    let mut budget_exhausted = false;
    let mut next_size = schedule.initial_batch;
    let mut round = 0usize;
    loop {
        let remaining = schedule.shot_cap - data.total_shots();
        if remaining == 0 {
            budget_exhausted = true;
            break;
        }
        let batch = next_size.min(remaining);
        next_size = ((next_size as f64) * schedule.growth_factor).ceil() as usize;

        let record = sampler.sample(&povm, batch, seed.wrapping_add(round as u64))?;
        data.append(record, &povm)?;

        let (energy_mean, std_error) = data.estimate(h)?;
        let eps = data.epsilon_e(h)?;
        // ε_E of the batch just taken, attributed to the POVM that took it
        let batch_eps =
            estimate::epsilon_e(h, &povm, data.batch_record(data.n_batches() - 1))?;
        let mut event = String::new();
        let mut track_batch = true;

        if round == 0 && check_prior {
            // reject a recycled POVM that starts off worse than the default
            let sic_var = data.candidate_variance(h, &sic)?;
            if batch_eps * batch_eps > sic_var {
                povm = sic.clone();
                event = "prior_rejected".into();
                track_batch = false;
            }
        }

        if track_batch && batch >= MIN_ATTRIBUTION_SHOTS {
            if best.as_ref().map_or(true, |(b, _)| batch_eps < *b) {
                best = Some((batch_eps, povm.clone()));
                strikes = 0;
            } else if !frozen {
                let (best_eps, best_povm) = best.as_ref().expect("have best");
                if batch_eps > best_eps * (1.0 + RESET_MARGIN) {
                    povm = best_povm.clone();
                    strikes += 1;
                    if strikes >= MAX_STRIKES {
                        frozen = true;
                        event = join_event(event, "freeze");
                    } else {
                        total_resets += 1;
                        event = join_event(event, "reset");
                    }
                }
            }
        }

        let satisfied = match &mut stop {
            StopRule::EnergyStdError(target) => std_error <= *target,
            StopRule::Predicate(f) => f(&data)?,
        };
        if satisfied {
            trace.push(TraceRow {
                batch_index: round,
                cumulative_shots: data.total_shots(),
                energy_mean,
                std_error,
                epsilon_e: eps,
                accepted_step: 0.0,
                event,
            });
            stopped = true;
            break;
        }

        let mut accepted_step = 0.0;
        if !frozen && data.total_shots() < schedule.shot_cap {
            if let Some((stepped, step)) = improve_povm(h, &data, &povm)? {
                povm = stepped.rebased();
                accepted_step = step;
            }
        }
        trace.push(TraceRow {
            batch_index: round,
            cumulative_shots: data.total_shots(),
            energy_mean,
            std_error,
            epsilon_e: eps,
            accepted_step,
            event,
        });
        round += 1;
    }

    let best_povm = best.map(|(_, p)| p).unwrap_or(povm);
    Ok(OptimiseOutcome {
        povm: best_povm,
        data,
        trace,
        stopped,
        budget_exhausted,
        total_resets,
    })
}

fn join_event(a: String, b: &str) -> String {
    if a.is_empty() {
        b.to_string()
    } else {
        format!("{a}+{b}")
    }
}

/// One descent step on the data-driven variance estimate: central
/// finite-difference gradient over all 16·N dilation parameters, then a
/// backtracking line search along the per-qubit block-normalised negative
/// gradient; returns the improving POVM if there is one.
///
/// A candidate must beat the current value by at least `MIN_RELATIVE_GAIN`:
/// the predictor is built from finite-sample moments, so sub-noise gains are
/// as likely to be artefacts of the data as real, and accepting them walks
/// the POVM away from genuinely good configurations.
fn improve_povm(
    h: &PauliSum,
    data: &ShotData,
    povm: &ProductPovm,
) -> Result<Option<(ProductPovm, f64)>> {
    let n = povm.n_qubits();
    let ws = data.variance_workspace(h, povm)?;
    let v0 = ws.current_variance();
    let mut grad = vec![0.0f64; n * N_PARAMS];
    for q in 0..n {
        let params = *povm.qubit(q).params();
        for j in 0..N_PARAMS {
            let mut plus = params;
            plus[j] += FD_STEP;
            let mut minus = params;
            minus[j] -= FD_STEP;
            if let (Some(vp), Some(vm)) =
                (axis_value(&ws, q, povm, &plus), axis_value(&ws, q, povm, &minus))
            {
                grad[q * N_PARAMS + j] = (vp - vm) / (2.0 * FD_STEP);
            }
        }
    }
    let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if gnorm < 1e-14 {
        return Ok(None);
    }
    // Per-qubit normalised direction: every qubit moves at unit rate no
    // matter how its gradient block compares to the others, and the overall
    // scale stays bounded so the line search only explores moves where the
    // finite-sample variance prediction is still trustworthy.
    let mut dir = vec![0.0f64; n * N_PARAMS];
    for q in 0..n {
        let block = &grad[q * N_PARAMS..(q + 1) * N_PARAMS];
        let bnorm = block.iter().map(|g| g * g).sum::<f64>().sqrt();
        if bnorm < 1e-14 * gnorm {
            continue;
        }
        for j in 0..N_PARAMS {
            dir[q * N_PARAMS + j] = -block[j] / (bnorm * (n as f64).sqrt());
        }
    }
    let mut best: Option<(f64, ProductPovm, f64)> = None;
    for j in 0..=LINE_SEARCH_HALVINGS {
        let step = LINE_SEARCH_BASE / f64::powi(2.0, j as i32);
        let candidate = match stepped_povm(povm, &dir, step) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if candidate.max_condition() > MAX_DUAL_CONDITION {
            continue;
        }
        let value = match ws.full_variance(&candidate) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if !value.is_finite() || value < 0.0 {
            continue;
        }
        if value < v0 * (1.0 - MIN_RELATIVE_GAIN)
            && best.as_ref().map_or(true, |(b, _, _)| value < *b)
        {
            best = Some((value, candidate, step));
        }
    }
    Ok(best.map(|(_, povm, step)| (povm, step)))
}

fn axis_value(
    ws: &crate::povm::estimate::VarianceWorkspace,
    axis: usize,
    povm: &ProductPovm,
    params: &[f64; N_PARAMS],
) -> Option<f64> {
    let single = povm.qubit(axis).with_params(*params).ok()?;
    ws.axis_variance(axis, &single).ok()
}

fn stepped_povm(povm: &ProductPovm, direction: &[f64], scale: f64) -> Result<ProductPovm> {
    let n = povm.n_qubits();
    let mut qubits = Vec::with_capacity(n);
    for q in 0..n {
        let mut params = *povm.qubit(q).params();
        for j in 0..N_PARAMS {
            params[j] += scale * direction[q * N_PARAMS + j];
        }
        qubits.push(povm.qubit(q).with_params(params)?);
    }
    Ok(ProductPovm::new(qubits))
}
