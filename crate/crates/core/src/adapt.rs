//! The adaptive ansatz driver: symbolic commutator pool, gradient screening
//! from shared IC shot data, operator selection, Rotosolve initialisation,
//! full-ansatz quasi-Newton optimisation with analytic gradients, stopping
//! criteria, and CNOT accounting.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PRUNE_TOL};
use crate::pools::{OperatorKind, OperatorPool, PoolOperator};
use crate::povm::{
    optimise_povm, MeasurementSchedule, ProductPovm, ShotData, StateSampler, StopRule,
};
use crate::simulator::{
    apply_pool_gate, apply_sum, exact_ground_energy, expectation, matrix_element, StateVector,
};

/// Growing ansatz: a reference determinant plus an ordered list of
/// (pool id, θ) exponential gates.
#[derive(Clone, Debug)]
pub struct AnsatzState {
    reference: StateVector,
    gates: Vec<(usize, f64)>,
}

impl AnsatzState {
    pub fn new(reference: StateVector) -> Self {
        AnsatzState { reference, gates: Vec::new() }
    }

    pub fn reference(&self) -> &StateVector {
        &self.reference
    }

    pub fn gates(&self) -> &[(usize, f64)] {
        &self.gates
    }

    pub fn n_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.gates.iter().map(|&(_, t)| t).collect()
    }

    pub fn push_gate(&mut self, pool_id: usize, theta: f64) {
        self.gates.push((pool_id, theta));
    }

    pub fn set_thetas(&mut self, thetas: &[f64]) -> Result<()> {
        if thetas.len() != self.gates.len() {
            return Err(Error::Invalid(format!(
                "theta vector length {} does not match {} gates",
                thetas.len(),
                self.gates.len()
            )));
        }
        for (slot, &t) in self.gates.iter_mut().zip(thetas) {
            slot.1 = t;
        }
        Ok(())
    }

    /// Statevector of the full ansatz at its stored angles.
    pub fn prepare(&self, pool: &OperatorPool) -> Result<StateVector> {
        self.prepare_at(pool, &self.thetas())
    }

    /// Statevector at an arbitrary angle vector (same gate sequence).
    pub fn prepare_at(&self, pool: &OperatorPool, thetas: &[f64]) -> Result<StateVector> {
        if thetas.len() != self.gates.len() {
            return Err(Error::Invalid("theta vector length mismatch".into()));
        }
        let mut state = self.reference.clone();
        for (&(id, _), &theta) in self.gates.iter().zip(thetas) {
            state.rotate_pool(self.op(pool, id)?, theta)?;
        }
        Ok(state)
    }

    fn op<'p>(&self, pool: &'p OperatorPool, id: usize) -> Result<&'p PoolOperator> {
        pool.operators.get(id).ok_or(Error::IndexOutOfRange { index: id, n: pool.len() })
    }

    /// Text manifest: one line per gate plus the CNOT total.
    pub fn manifest(&self, pool: &OperatorPool, costs: &CnotCosts) -> String {
        let mut out = String::new();
        for &(id, theta) in &self.gates {
            let kind = pool.operators.get(id).map(|o| o.kind.name()).unwrap_or("?");
            out.push_str(&format!("{id}\t{kind}\t{theta:+.12e}\n"));
        }
        out.push_str(&format!("# gates={} cnots={}\n", self.gates.len(), cnot_count(self, pool, costs)));
        out
    }
}

/// Hermitian observable i-free form of a pool gradient: ⟨[H, P_i]⟩.
#[derive(Clone, Debug)]
pub struct GradientObservable {
    pub pool_id: usize,
    pub hermitian_form: PauliSum,
}

/// Symbolic [H, P_i] for every pool operator, pruned; Hermiticity is a
/// structural consequence (H Hermitian, P_i anti-Hermitian) and is asserted.
pub fn precompute_commutators(h: &PauliSum, pool: &OperatorPool) -> Result<Vec<GradientObservable>> {
    let mut out = Vec::with_capacity(pool.len());
    for op in &pool.operators {
        let c = h.commutator(&op.generator)?.pruned(PRUNE_TOL);
        if !c.is_hermitian() {
            return Err(Error::Invalid(format!(
                "commutator with pool operator {} is not Hermitian",
                op.id
            )));
        }
        out.push(GradientObservable { pool_id: op.id, hermitian_form: c });
    }
    Ok(out)
}

/// Estimate every commutator from the accumulated shot data — no extra
/// sampling; one (mean, std_error) pair per pool operator, in pool-id order.
pub fn screen_gradients(
    commutators: &[GradientObservable],
    data: &ShotData,
) -> Result<Vec<(f64, f64)>> {
    let obs: Vec<&PauliSum> = commutators.iter().map(|c| &c.hermitian_form).collect();
    data.estimate_many(&obs)
}

/// Exact gradients (infinite-shot limit) of the same observables.
pub fn exact_gradients(
    commutators: &[GradientObservable],
    state: &StateVector,
) -> Result<Vec<f64>> {
    commutators
        .iter()
        .map(|c| Ok(expectation(state, &c.hermitian_form)?.re))
        .collect()
}

/// Argmax of |mean|; ties break to the lowest pool id. Estimates must be in
/// pool-id order (as produced by screen_gradients).
pub fn select_operator(estimates: &[(f64, f64)]) -> usize {
    assert!(!estimates.is_empty(), "no gradient estimates to select from");
    let mut best = 0usize;
    for (i, (mean, _)) in estimates.iter().enumerate() {
        if mean.abs() > estimates[best].0.abs() {
            best = i;
        }
    }
    best
}

/// Relative-error stop: std_error/|mean| ≤ T_τ for the entry with the
/// largest |mean|; degenerate all-zero gradients never satisfy it.
pub fn gradient_stop_satisfied(estimates: &[(f64, f64)], t_tau: f64) -> bool {
    if estimates.is_empty() {
        return false;
    }
    let (mean, std_error) = estimates[select_operator(estimates)];
    if mean.abs() < 1e-12 {
        return false;
    }
    std_error / mean.abs() <= t_tau
}

/// Three-point sinusoidal fit E(θ) = A + B cos 2θ + C sin 2θ for the new
/// gate's angle, with a fourth-probe residual check falling back to a dense
/// scan plus golden-section refinement. Returns θ* in (−π/2, π/2].
pub fn rotosolve_init(h: &PauliSum, state: &StateVector, op: &PoolOperator) -> Result<f64> {
    let energy = |theta: f64| -> Result<f64> {
        Ok(expectation(&apply_pool_gate(state, op, theta)?, h)?.re)
    };
    let e0 = energy(0.0)?;
    let ep = energy(FRAC_PI_4)?;
    let em = energy(-FRAC_PI_4)?;
    let a = 0.5 * (ep + em);
    let c = 0.5 * (ep - em);
    let b = e0 - a;
    let model = |theta: f64| a + b * (2.0 * theta).cos() + c * (2.0 * theta).sin();
    let probe = energy(FRAC_PI_4 / 2.0)?;
    if (probe - model(FRAC_PI_4 / 2.0)).abs() > 1e-6 * b.abs() + 1e-9 {
        return scan_minimum(&energy);
    }
    let mut theta = 0.5 * f64::atan2(-c, -b);
    if theta <= -FRAC_PI_2 {
        theta += PI;
    }
    Ok(theta)
}

/// 64-point scan over (−π/2, π/2] followed by golden-section refinement.
fn scan_minimum(energy: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    const POINTS: usize = 64;
    let grid = |k: isize| -FRAC_PI_2 + (k as f64 + 1.0) * PI / POINTS as f64;
    let mut best_k = 0isize;
    let mut best_e = f64::INFINITY;
    for k in 0..POINTS as isize {
        let e = energy(grid(k))?;
        if e < best_e {
            best_e = e;
            best_k = k;
        }
    }
    // the landscape is π-periodic, so neighbours of the edge points wrap
    let (mut lo, mut hi) = (grid(best_k - 1), grid(best_k + 1));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = energy(wrap_angle(x1))?;
    let mut f2 = energy(wrap_angle(x2))?;
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = energy(wrap_angle(x1))?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = energy(wrap_angle(x2))?;
        }
    }
    Ok(wrap_angle(0.5 * (lo + hi)))
}

fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta;
    while t <= -FRAC_PI_2 {
        t += PI;
    }
    while t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Analytic ∂E/∂θ via one forward sweep and one backward adjoint sweep:
/// g_i = 2 Re ⟨μ_i | P_i | φ_i⟩ with φ_i the state after gate i and
/// μ_i = U_{i+1}†…U_n† H ψ.
pub fn ansatz_gradient(
    h: &PauliSum,
    pool: &OperatorPool,
    ansatz: &AnsatzState,
    thetas: &[f64],
) -> Result<Vec<f64>> {
    Ok(energy_and_gradient(h, pool, ansatz, thetas)?.1)
}

fn energy_and_gradient(
    h: &PauliSum,
    pool: &OperatorPool,
    ansatz: &AnsatzState,
    thetas: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let n = ansatz.gates.len();
    if thetas.len() != n {
        return Err(Error::Invalid("theta vector length mismatch".into()));
    }
    let mut ket = ansatz.prepare_at(pool, thetas)?;
    let mu = apply_sum(&ket, h)?;
    let energy: f64 = ket
        .amplitudes()
        .iter()
        .zip(&mu)
        .map(|(a, m)| (a.conj() * m).re)
        .sum();
    if n == 0 {
        return Ok((energy, Vec::new()));
    }
    let scale = mu.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale < 1e-150 {
        return Ok((energy, vec![0.0; n]));
    }
    let inv = Complex64::new(1.0 / scale, 0.0);
    let mut bra =
        StateVector::from_amplitudes(ket.n_qubits(), mu.iter().map(|z| z * inv).collect())?;
    let mut grad = vec![0.0; n];
    for k in (0..n).rev() {
        let op = ansatz.op(pool, ansatz.gates[k].0)?;
        grad[k] = 2.0 * scale * matrix_element(&bra, &op.generator, &ket)?.re;
        ket.rotate_pool(op, -thetas[k])?;
        bra.rotate_pool(op, -thetas[k])?;
    }
    Ok((energy, grad))
}

const LBFGS_MEMORY: usize = 10;
const LBFGS_GTOL: f64 = 1e-7;
const LBFGS_MAX_ITERS: usize = 500;

/// Quasi-Newton minimisation of the ansatz energy over all angles, driven by
/// the analytic gradient; returns the best angle vector seen.
pub fn optimise_ansatz(
    h: &PauliSum,
    pool: &OperatorPool,
    ansatz: &AnsatzState,
    theta0: &[f64],
) -> Result<Vec<f64>> {
    let n = theta0.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eval = |t: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (f, g) = energy_and_gradient(h, pool, ansatz, t)?;
        if !f.is_finite() {
            return Err(Error::NonFiniteEnergy);
        }
        Ok((f, g))
    };
    let mut theta = theta0.to_vec();
    let (mut f, mut g) = eval(&theta)?;
    let mut best = (f, theta.clone());
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();

    for _ in 0..LBFGS_MAX_ITERS {
        let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if gmax < LBFGS_GTOL {
            break;
        }
        let mut dir = two_loop_direction(&g, &s_hist, &y_hist, &rho_hist);
        let mut slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        if !(slope < 0.0) {
            // not a descent direction: fall back to steepest descent
            dir = g.iter().map(|x| -x).collect();
            slope = -g.iter().map(|x| x * x).sum::<f64>();
        }
        let mut step = if s_hist.is_empty() {
            let gnorm = (-slope).sqrt();
            (1.0 / gnorm).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> =
                theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            match eval(&trial) {
                Ok((ft, gt)) if ft <= f + 1e-4 * step * slope => {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                Ok(_) => {}
                Err(Error::NonFiniteEnergy) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        let Some((trial, ft, gt)) = accepted else { break };
        let s: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let ys: f64 = y.iter().zip(&s).map(|(a, b)| a * b).sum();
        if ys > 1e-12 {
            if s_hist.len() == LBFGS_MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
            rho_hist.push(1.0 / ys);
        }
        theta = trial;
        f = ft;
        g = gt;
        if f < best.0 {
            best = (f, theta.clone());
        }
    }
    Ok(best.1)
}

fn two_loop_direction(
    g: &[f64],
    s_hist: &[Vec<f64>],
    y_hist: &[Vec<f64>],
    rho_hist: &[f64],
) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let m = s_hist.len();
    let mut alpha = vec![0.0; m];
    for i in (0..m).rev() {
        let a = rho_hist[i] * dot(&s_hist[i], &q);
        alpha[i] = a;
        for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
            *qj -= a * yj;
        }
    }
    if m > 0 {
        let y = &y_hist[m - 1];
        let gamma = dot(&s_hist[m - 1], y) / dot(y, y).max(1e-300);
        for qj in q.iter_mut() {
            *qj *= gamma;
        }
    }
    for i in 0..m {
        let beta = rho_hist[i] * dot(&y_hist[i], &q);
        for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
            *qj += (alpha[i] - beta) * sj;
        }
    }
    q.iter_mut().for_each(|x| *x = -*x);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// CNOT cost model per gate kind; string exponentials use the 2(w−1)
/// staircase, QEB gates use efficient-circuit constants.
#[derive(Clone, Copy, Debug)]
pub struct CnotCosts {
    pub qeb_single: usize,
    pub qeb_double: usize,
}

impl Default for CnotCosts {
    fn default() -> Self {
        CnotCosts { qeb_single: 2, qeb_double: 13 }
    }
}

pub fn cnot_count(ansatz: &AnsatzState, pool: &OperatorPool, costs: &CnotCosts) -> usize {
    ansatz
        .gates
        .iter()
        .filter_map(|&(id, _)| pool.operators.get(id))
        .map(|op| operator_cnot_cost(op, costs))
        .sum()
}

pub fn operator_cnot_cost(op: &PoolOperator, costs: &CnotCosts) -> usize {
    match op.kind {
        OperatorKind::QebSingle => costs.qeb_single,
        OperatorKind::QebDouble => costs.qeb_double,
        OperatorKind::QubitString | OperatorKind::FermionicSingle | OperatorKind::FermionicDouble => {
            op.generator
                .terms()
                .map(|(s, _)| 2 * s.weight().saturating_sub(1))
                .sum()
        }
    }
}

/// Outer-loop stopping criterion for the measurement phase.
#[derive(Clone, Copy, Debug)]
pub enum StopMode {
    /// std_error(H) ≤ T_E (Hartree).
    Energy(f64),
    /// relative error of the leading commutator ≤ T_τ.
    Gradient(f64),
}

/// Gradient/energy source: exact statevector oracle or simulated shots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Statevector,
    Shots,
}

#[derive(Clone, Debug)]
pub struct AdaptConfig {
    pub mode: RunMode,
    pub stop_mode: StopMode,
    pub max_iterations: usize,
    /// Pool-gradient-norm convergence floor ε_g (Hartree).
    pub epsilon_g: f64,
    /// Experiment-mode stop: |E − E_exact| below this ends the run.
    pub exact_error_target: Option<f64>,
    pub schedule: MeasurementSchedule,
    /// Optimise all angles every k-th iteration (0 = never, 1 = every).
    pub optimise_every: usize,
    pub cnot_costs: CnotCosts,
    pub seed: u64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            mode: RunMode::Statevector,
            stop_mode: StopMode::Energy(1.6e-3),
            max_iterations: 50,
            epsilon_g: 1e-3,
            exact_error_target: Some(1e-3),
            schedule: MeasurementSchedule::default(),
            optimise_every: 1,
            cnot_costs: CnotCosts::default(),
            seed: 0,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        match self.stop_mode {
            StopMode::Energy(t) if t > 0.0 => {}
            StopMode::Gradient(t) if t > 0.0 && t < 1.0 => {}
            _ => return Err(Error::Invalid("stop threshold out of range".into())),
        }
        if self.max_iterations == 0 {
            return Err(Error::Invalid("max_iterations must be ≥ 1".into()));
        }
        self.schedule.validate()
    }
}

/// One outer-loop iteration's record. `exact_energy` is the oracle energy of
/// the state the shots were taken on; `exact_energy_after` is the oracle
/// energy after this iteration's gate and re-optimisation.
#[derive(Clone, Debug)]
pub struct IterationLog {
    pub iteration: usize,
    pub chosen_op: Option<usize>,
    pub gradient_means: Vec<f64>,
    pub gradient_std_errors: Vec<f64>,
    pub energy_mean: f64,
    pub energy_std_error: f64,
    pub exact_energy: f64,
    pub exact_energy_after: f64,
    pub cumulative_shots: usize,
    pub cnot_count: usize,
    pub reset_events: usize,
}

impl IterationLog {
    pub fn max_abs_gradient(&self) -> f64 {
        self.gradient_means.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct AdaptOutcome {
    pub ansatz: AnsatzState,
    pub logs: Vec<IterationLog>,
    pub converged: bool,
    /// The measurement budget ran out before a stop rule was satisfied.
    pub incomplete: bool,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The full adaptive loop: measure the current state (recycling the POVM
/// across iterations), screen all pool gradients from the shared data, check
/// convergence, select, Rotosolve-initialise, append, re-optimise. Rotosolve
/// and the ansatz optimiser always use the noiseless statevector oracle.
pub fn run_adapt(
    h: &PauliSum,
    pool: &OperatorPool,
    reference: &StateVector,
    config: &AdaptConfig,
) -> Result<AdaptOutcome> {
    config.validate()?;
    let commutators = precompute_commutators(h, pool)?;
    let ground = match config.exact_error_target {
        Some(_) => Some(exact_ground_energy(h)?.0),
        None => None,
    };

    let mut ansatz = AnsatzState::new(reference.clone());
    let mut logs: Vec<IterationLog> = Vec::new();
    let mut prior: Option<ProductPovm> = None;
    let mut cumulative_shots = 0usize;
    let mut converged = false;
    let mut incomplete = false;

    for n in 0.. {
        let state = ansatz.prepare(pool)?;
        let e_state = expectation(&state, h)?.re;

        let (estimates, energy_mean, energy_std_error, resets) = match config.mode {
            RunMode::Statevector => {
                let means = exact_gradients(&commutators, &state)?;
                let ests: Vec<(f64, f64)> = means.into_iter().map(|m| (m, 0.0)).collect();
                (ests, e_state, 0.0, 0)
            }
            RunMode::Shots => {
                let mut sampler = StateSampler::new(&state)?;
                let stop = match config.stop_mode {
                    StopMode::Energy(t_e) => StopRule::EnergyStdError(t_e),
                    StopMode::Gradient(t_tau) => {
                        let comms = &commutators;
                        StopRule::Predicate(Box::new(move |data: &ShotData| {
                            // same decision as gradient_stop_satisfied over
                            // screen_gradients, but the variance transform is
                            // only run for the leading candidate — means are
                            // plain pooled-table lookups
                            let obs: Vec<&PauliSum> =
                                comms.iter().map(|c| &c.hermitian_form).collect();
                            let means = data.means(&obs)?;
                            let mut lead = 0usize;
                            for (i, m) in means.iter().enumerate() {
                                if m.abs() > means[lead].abs() {
                                    lead = i;
                                }
                            }
                            if means[lead].abs() < 1e-12 {
                                return Ok(false);
                            }
                            let (_, se) = data.estimate(obs[lead])?;
                            Ok(se / means[lead].abs() <= t_tau)
                        }))
                    }
                };
                let out = optimise_povm(
                    h,
                    &mut sampler,
                    &config.schedule,
                    stop,
                    prior.take(),
                    splitmix64(config.seed ^ (n as u64).wrapping_mul(0xD134_2543_DE82_EF95)),
                )?;
                prior = Some(out.povm.clone());
                cumulative_shots += out.data.total_shots();
                if out.budget_exhausted && !out.stopped {
                    incomplete = true;
                }
                let ests = screen_gradients(&commutators, &out.data)?;
                let (em, ese) = out.data.estimate(h)?;
                (ests, em, ese, out.total_resets)
            }
        };
        let gradient_means: Vec<f64> = estimates.iter().map(|e| e.0).collect();
        let gradient_std_errors: Vec<f64> = estimates.iter().map(|e| e.1).collect();
        let max_abs = gradient_means.iter().fold(0.0f64, |m, x| m.max(x.abs()));

        let mut stop_now = incomplete;
        if max_abs < config.epsilon_g {
            converged = true;
            stop_now = true;
        }
        if let (Some(target), Some(g)) = (config.exact_error_target, ground) {
            if (e_state - g).abs() < target {
                converged = true;
                stop_now = true;
            }
        }
        if !stop_now && n >= config.max_iterations {
            stop_now = true;
        }
        if stop_now {
            logs.push(IterationLog {
                iteration: n,
                chosen_op: None,
                gradient_means,
                gradient_std_errors,
                energy_mean,
                energy_std_error,
                exact_energy: e_state,
                exact_energy_after: e_state,
                cumulative_shots,
                cnot_count: cnot_count(&ansatz, pool, &config.cnot_costs),
                reset_events: resets,
            });
            break;
        }

        let chosen = select_operator(&estimates);
        let op = &pool.operators[chosen];
        let theta0 = rotosolve_init(h, &state, op)?;
        if let Some(&(last_id, _)) = ansatz.gates.last() {
            // the same operator again at a vanishing angle cannot improve
            // the state: treat as the convergence check firing
            if last_id == chosen && theta0.abs() < 1e-8 {
                converged = true;
                logs.push(IterationLog {
                    iteration: n,
                    chosen_op: Some(chosen),
                    gradient_means,
                    gradient_std_errors,
                    energy_mean,
                    energy_std_error,
                    exact_energy: e_state,
                    exact_energy_after: e_state,
                    cumulative_shots,
                    cnot_count: cnot_count(&ansatz, pool, &config.cnot_costs),
                    reset_events: resets,
                });
                break;
            }
        }
        ansatz.push_gate(chosen, theta0);
        if config.optimise_every > 0 && (n + 1) % config.optimise_every == 0 {
            let theta = optimise_ansatz(h, pool, &ansatz, &ansatz.thetas())?;
            ansatz.set_thetas(&theta)?;
        }
        let e_after = expectation(&ansatz.prepare(pool)?, h)?.re;
        logs.push(IterationLog {
            iteration: n,
            chosen_op: Some(chosen),
            gradient_means,
            gradient_std_errors,
            energy_mean,
            energy_std_error,
            exact_energy: e_state,
            exact_energy_after: e_after,
            cumulative_shots,
            cnot_count: cnot_count(&ansatz, pool, &config.cnot_costs),
            reset_events: resets,
        });
    }

    Ok(AdaptOutcome { ansatz, logs, converged, incomplete })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Letter, PauliString};
    use crate::pools::SourceIndices;
    use approx::assert_abs_diff_eq;

    fn string_op(id: usize, n: usize, letters: &[(usize, Letter)]) -> PoolOperator {
        let mut s = PauliString::identity(n);
        for &(q, l) in letters {
            s.set_letter(q, l);
        }
        PoolOperator {
            id,
            generator: PauliSum::from_string(s, Complex64::new(0.0, 1.0)),
            kind: OperatorKind::QubitString,
            source_indices: SourceIndices::None,
        }
    }

    fn toy_pool(ops: Vec<PoolOperator>) -> OperatorPool {
        OperatorPool {
            operators: ops,
            scheme: crate::fermion::MappingScheme::JW,
            kind: crate::pools::PoolKind::QubitAdapt,
        }
    }

    #[test]
    fn select_and_stop_rules() {
        let ests = vec![(0.1, 0.01), (-0.5, 0.02), (0.2, 0.01)];
        assert_eq!(select_operator(&ests), 1);
        let tie = vec![(0.5, 0.1), (-0.5, 0.1)];
        assert_eq!(select_operator(&tie), 0);
        assert!(gradient_stop_satisfied(&[(1.0, 0.1)], 0.2));
        assert!(!gradient_stop_satisfied(&[(1.0, 0.3)], 0.2));
        assert!(!gradient_stop_satisfied(&[(1e-14, 0.3), (0.0, 0.5)], 0.2));
    }

    #[test]
    fn rotosolve_pure_cosine() {
        // |ψ(θ)⟩ = e^{iθY}|0⟩ gives ⟨Z⟩ = cos 2θ, minimised at θ = π/2
        let h = PauliSum::from_string(PauliString::single(1, 0, Letter::Z), Complex64::new(1.0, 0.0));
        let state = StateVector::basis(1, 0).unwrap();
        let op = string_op(0, 1, &[(0, Letter::Y)]);
        let theta = rotosolve_init(&h, &state, &op).unwrap();
        assert_abs_diff_eq!(theta, FRAC_PI_2, epsilon = 1e-12);
        let e = expectation(&apply_pool_gate(&state, &op, theta).unwrap(), &h).unwrap().re;
        assert_abs_diff_eq!(e, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotosolve_pure_sine() {
        // ⟨X⟩ along e^{iθY}|0⟩ is −sin 2θ, minimised at θ = π/4
        let h = PauliSum::from_string(PauliString::single(1, 0, Letter::X), Complex64::new(1.0, 0.0));
        let state = StateVector::basis(1, 0).unwrap();
        let op = string_op(0, 1, &[(0, Letter::Y)]);
        let theta = rotosolve_init(&h, &state, &op).unwrap();
        assert_abs_diff_eq!(theta, FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let n = 2;
        let mut h = PauliSum::zero(n);
        h.add_term(PauliString::single(n, 0, Letter::Z), Complex64::new(0.7, 0.0));
        h.add_term(PauliString::single(n, 1, Letter::Z), Complex64::new(-0.4, 0.0));
        let mut xx = PauliString::identity(n);
        xx.set_letter(0, Letter::X);
        xx.set_letter(1, Letter::X);
        h.add_term(xx, Complex64::new(0.3, 0.0));

        let pool = toy_pool(vec![
            string_op(0, n, &[(0, Letter::Y)]),
            string_op(1, n, &[(0, Letter::X), (1, Letter::Y)]),
            string_op(2, n, &[(1, Letter::Y)]),
        ]);
        let mut ansatz = AnsatzState::new(StateVector::basis(n, 0).unwrap());
        ansatz.push_gate(0, 0.37);
        ansatz.push_gate(1, -0.21);
        ansatz.push_gate(2, 0.55);
        let thetas = ansatz.thetas();
        let grad = ansatz_gradient(&h, &pool, &ansatz, &thetas).unwrap();
        let fd_step = 1e-5;
        for i in 0..3 {
            let mut tp = thetas.clone();
            tp[i] += fd_step;
            let mut tm = thetas.clone();
            tm[i] -= fd_step;
            let ep = expectation(&ansatz.prepare_at(&pool, &tp).unwrap(), &h).unwrap().re;
            let em = expectation(&ansatz.prepare_at(&pool, &tm).unwrap(), &h).unwrap().re;
            let fd = (ep - em) / (2.0 * fd_step);
            assert!(
                (grad[i] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                "component {i}: analytic {} vs fd {}",
                grad[i],
                fd
            );
        }
    }

    #[test]
    fn gradient_at_origin_is_commutator_expectation() {
        let n = 2;
        let mut h = PauliSum::zero(n);
        h.add_term(PauliString::single(n, 0, Letter::Z), Complex64::new(1.0, 0.0));
        let mut xy = PauliString::identity(n);
        xy.set_letter(0, Letter::X);
        xy.set_letter(1, Letter::Y);
        h.add_term(xy, Complex64::new(0.2, 0.0));
        let pool = toy_pool(vec![string_op(0, n, &[(0, Letter::Y)])]);
        let reference = StateVector::basis(n, 1).unwrap();
        let mut ansatz = AnsatzState::new(reference.clone());
        ansatz.push_gate(0, 0.0);
        let grad = ansatz_gradient(&h, &pool, &ansatz, &[0.0]).unwrap();
        let comms = precompute_commutators(&h, &pool).unwrap();
        let exact = exact_gradients(&comms, &reference).unwrap();
        assert_abs_diff_eq!(grad[0], exact[0], epsilon = 1e-12);
    }

    #[test]
    fn optimise_single_gate_matches_rotosolve() {
        let h = PauliSum::from_string(PauliString::single(1, 0, Letter::Z), Complex64::new(1.0, 0.0));
        let pool = toy_pool(vec![string_op(0, 1, &[(0, Letter::Y)])]);
        let mut ansatz = AnsatzState::new(StateVector::basis(1, 0).unwrap());
        ansatz.push_gate(0, 0.3);
        let theta = optimise_ansatz(&h, &pool, &ansatz, &[0.3]).unwrap();
        ansatz.set_thetas(&theta).unwrap();
        let e = expectation(&ansatz.prepare(&pool).unwrap(), &h).unwrap().re;
        assert_abs_diff_eq!(e, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn optimal_start_is_not_worsened() {
        let h = PauliSum::from_string(PauliString::single(1, 0, Letter::Z), Complex64::new(1.0, 0.0));
        let pool = toy_pool(vec![string_op(0, 1, &[(0, Letter::Y)])]);
        let mut ansatz = AnsatzState::new(StateVector::basis(1, 0).unwrap());
        ansatz.push_gate(0, FRAC_PI_2);
        let theta = optimise_ansatz(&h, &pool, &ansatz, &[FRAC_PI_2]).unwrap();
        let e = expectation(&ansatz.prepare_at(&pool, &theta).unwrap(), &h).unwrap().re;
        assert!(e <= -1.0 + 1e-12);
    }

    #[test]
    fn cnot_costs_per_kind() {
        let n = 4;
        let pool = toy_pool(vec![string_op(0, n, &[(0, Letter::X), (1, Letter::Y), (2, Letter::Z), (3, Letter::Y)])]);
        let mut ansatz = AnsatzState::new(StateVector::basis(n, 0).unwrap());
        assert_eq!(cnot_count(&ansatz, &pool, &CnotCosts::default()), 0);
        ansatz.push_gate(0, 0.1);
        assert_eq!(cnot_count(&ansatz, &pool, &CnotCosts::default()), 6);
        let mut qeb = string_op(0, n, &[(0, Letter::X)]);
        qeb.kind = OperatorKind::QebDouble;
        let pool2 = toy_pool(vec![qeb]);
        let mut a2 = AnsatzState::new(StateVector::basis(n, 0).unwrap());
        a2.push_gate(0, 0.2);
        a2.push_gate(0, 0.3);
        assert_eq!(cnot_count(&a2, &pool2, &CnotCosts::default()), 26);
    }

    #[test]
    fn zero_commutator_means_empty_observable() {
        // N̂-like diagonal H commutes with a Z string
        let n = 2;
        let mut h = PauliSum::zero(n);
        h.add_term(PauliString::single(n, 0, Letter::Z), Complex64::new(1.0, 0.0));
        let pool = toy_pool(vec![string_op(0, n, &[(0, Letter::Z), (1, Letter::Z)])]);
        let comms = precompute_commutators(&h, &pool).unwrap();
        assert!(comms[0].hermitian_form.is_zero());
    }

    #[test]
    fn run_adapt_statevector_two_qubit() {
        // H = Z0 Z1 + 0.4 X0: ground state reachable with Y-string gates
        let n = 2;
        let mut h = PauliSum::zero(n);
        let mut zz = PauliString::identity(n);
        zz.set_letter(0, Letter::Z);
        zz.set_letter(1, Letter::Z);
        h.add_term(zz, Complex64::new(1.0, 0.0));
        h.add_term(PauliString::single(n, 0, Letter::X), Complex64::new(0.4, 0.0));
        let pool = toy_pool(vec![
            string_op(0, n, &[(0, Letter::Y)]),
            string_op(1, n, &[(1, Letter::Y)]),
            string_op(2, n, &[(0, Letter::Y), (1, Letter::Z)]),
            string_op(3, n, &[(0, Letter::X), (1, Letter::Y)]),
        ]);
        let reference = StateVector::basis(n, 0).unwrap();
        let config = AdaptConfig {
            exact_error_target: Some(1e-6),
            max_iterations: 10,
            ..AdaptConfig::default()
        };
        let out = run_adapt(&h, &pool, &reference, &config).unwrap();
        assert!(out.converged, "expected convergence, logs: {}", out.logs.len());
        let (ground, _) = exact_ground_energy(&h).unwrap();
        let last = out.logs.last().unwrap();
        assert!((last.exact_energy_after - ground).abs() < 1e-6);
        // monotone outer loop
        for w in out.logs.windows(2) {
            assert!(w[1].exact_energy_after <= w[0].exact_energy_after + 1e-10);
        }
    }
}
