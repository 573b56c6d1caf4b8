//! Weighted flow plus energy: highest density first on every machine, power
//! equal to the machine's fractional weight, and greedy assignment by the
//! increase in the shadow potential
//!
//! ```text
//! shadow_i = ∫_0^∞ ∫_0^{w_i(q)} x / Q_i(x) dx dq
//! ```
//!
//! where `w_i(q)` is the fractional weight queued on machine `i` with inverse
//! density at least `q`.
//!
//! While job `j` runs with fractional weight `w` on top of `W` from the other
//! queued jobs, `dw/dt = -(speedup / d_j) Q(W + w)`. Separating variables
//! gives elapsed time `(d_j / speedup) ∫ dx/Q(x)` and accrued flow (equal to
//! energy, since power is the fractional weight) `(d_j / speedup) ∫ x/Q(x) dx`,
//! both over `x ∈ [W + w_end, W + w_start]`.

use crate::error::{Error, Result};
use crate::model::{Instance, Job, JobId, MachineState, Metrics, Mode, TraceEvent};
use crate::sim::{integrate_profile, Assignment, Discipline, Simulation};

pub const DEFAULT_COMPLETION_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSchedulerConfig {
    /// Speed multiplier `1 + epsilon`; power is charged at the unaugmented speed.
    pub speedup: f64,
    /// Fraction of a job's weight at which it counts as complete when it is
    /// alone on a machine whose `∫_0 dx/Q(x)` diverges.
    pub completion_threshold: f64,
}

impl Default for WeightedSchedulerConfig {
    fn default() -> Self {
        WeightedSchedulerConfig { speedup: 1.0, completion_threshold: DEFAULT_COMPLETION_THRESHOLD }
    }
}

impl WeightedSchedulerConfig {
    pub fn new(speedup: f64) -> Result<Self> {
        let cfg = WeightedSchedulerConfig { speedup, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speedup >= 1.0) || !self.speedup.is_finite() {
            return Err(Error::InvalidConfig(format!("speedup must be >= 1, got {}", self.speedup)));
        }
        if !(self.completion_threshold > 0.0 && self.completion_threshold < 1e-3) {
            return Err(Error::InvalidConfig(format!(
                "completion_threshold must lie in (0, 1e-3), got {}",
                self.completion_threshold
            )));
        }
        Ok(())
    }

    /// Running job index, its fractional weight, the other jobs' fractional
    /// weight, and the fractional weight at which it completes.
    fn running_split(&self, state: &MachineState) -> Option<(usize, f64, f64, f64)> {
        let idx = state.hdf_index()?;
        let run = &state.queue[idx];
        let own = run.fractional_weight();
        let others: f64 =
            state.queue.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, q)| q.fractional_weight()).sum();
        let end = if others > 0.0 || state.power.slope_at_zero() == 0.0 {
            0.0
        } else {
            self.completion_threshold * run.job.weight
        };
        Some((idx, own, others, end))
    }
}

impl Discipline for WeightedSchedulerConfig {
    fn mode(&self) -> Mode {
        Mode::Weighted
    }

    fn speedup(&self) -> f64 {
        self.speedup
    }

    fn running(&self, state: &MachineState) -> Option<usize> {
        state.hdf_index()
    }

    fn power(&self, state: &MachineState) -> f64 {
        state.fractional_weight()
    }

    fn time_to_completion(&self, state: &MachineState) -> Result<f64> {
        let Some((idx, own, others, end)) = self.running_split(state) else {
            return Ok(f64::INFINITY);
        };
        if own <= end {
            return Ok(0.0);
        }
        let d = state.queue[idx].job.inverse_density();
        let integral = state.power.integral_inv_q(others + end, others + own)?;
        Ok(d / self.speedup * integral)
    }

    fn advance(&self, state: &mut MachineState, dt: f64, finish: bool) -> Result<Metrics> {
        let Some((idx, own, others, end)) = self.running_split(state) else {
            return Ok(Metrics::default());
        };
        let job = state.queue[idx].job;
        let d = job.inverse_density();
        let pf = &state.power;
        let target = if finish {
            end.min(own)
        } else {
            let lo = pf.drain_lower_limit(others + own, self.speedup * dt / d);
            (lo - others).clamp(end.min(own), own)
        };
        // a threshold completion also books the tail below `end`
        let booked = if finish { 0.0 } else { target };
        let flow = d / self.speedup * (pf.xq_primitive(others + own) - pf.xq_primitive(others + booked)).max(0.0);
        let integer = state.integer_weight() * dt;
        state.queue[idx].remaining = if target == 0.0 { 0.0 } else { (target * d).min(job.size) };
        Ok(Metrics { fractional_weighted_flow: flow, integer_weighted_flow: integer, energy: flow })
    }

    fn assignment_delta(&self, state: &MachineState, job: &Job) -> f64 {
        assignment_delta_weighted(state, job)
    }

    fn shadow_potential(&self, state: &MachineState) -> f64 {
        shadow_potential_weighted(state)
    }
}

/// `∫_0^∞ ∫_0^{w(q)} x/Q(x) dx dq`, summed exactly over the profile's steps.
pub fn shadow_potential_weighted(state: &MachineState) -> f64 {
    let pf = &state.power;
    integrate_profile(&state.weighted_profile(), f64::INFINITY, |w| pf.xq_primitive(w))
}

/// `∫_0^{d_j} ∫_{w(q)}^{w(q)+w_j} x/Q(x) dx dq`.
pub fn assignment_delta_weighted(state: &MachineState, job: &Job) -> f64 {
    let pf = &state.power;
    let wj = job.weight;
    integrate_profile(&state.weighted_profile(), job.inverse_density(), |w| {
        pf.xq_primitive(w + wj) - pf.xq_primitive(w)
    })
}

/// Inserts `job` on the machine with the smallest shadow-potential increase
/// (lowest index on ties) and returns that index.
pub fn assign_weighted(machines: &mut [MachineState], job: Job) -> usize {
    let m = crate::sim::greedy_choice(&WeightedSchedulerConfig::default(), machines, &job);
    machines[m].insert(job);
    m
}

/// Result of [`advance_weighted`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance {
    pub elapsed: f64,
    pub metrics: Metrics,
    pub completed: Option<JobId>,
}

/// Runs the densest job for up to `horizon`, stopping early at its completion.
pub fn advance_weighted(state: &mut MachineState, config: &WeightedSchedulerConfig, horizon: f64) -> Result<Advance> {
    if !(horizon >= 0.0) {
        return Err(Error::Domain(format!("horizon must be >= 0, got {horizon}")));
    }
    let ttc = config.time_to_completion(state)?;
    if !ttc.is_finite() {
        return Ok(Advance { elapsed: 0.0, metrics: Metrics::default(), completed: None });
    }
    if ttc <= horizon {
        let id = state.queue[config.running(state).expect("busy")].job.id;
        let metrics = config.advance(state, ttc, true)?;
        state.queue.retain(|q| q.job.id != id);
        Ok(Advance { elapsed: ttc, metrics, completed: Some(id) })
    } else {
        let metrics = config.advance(state, horizon, false)?;
        Ok(Advance { elapsed: horizon, metrics, completed: None })
    }
}

/// Online algorithm on a weighted instance; returns the trace and metrics.
pub fn simulate_weighted(instance: &Instance, config: &WeightedSchedulerConfig) -> Result<(Vec<TraceEvent>, Metrics)> {
    config.validate()?;
    let mut sim = Simulation::new(instance, *config, Assignment::Greedy)?;
    sim.run_to_end()?;
    let metrics = sim.metrics();
    Ok((sim.into_trace(), metrics))
}

/// Objective (fractional flow plus energy) left to pay if nothing else
/// arrives and the machine runs without augmentation: twice the shadow potential.
pub fn future_cost_weighted(state: &MachineState) -> f64 {
    2.0 * shadow_potential_weighted(state)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::power::PowerFunction;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn job(id: u64, release: f64, size: f64, weight: f64) -> Job {
        Job::new(id, release, size, weight).unwrap()
    }

    fn square() -> Arc<PowerFunction> {
        Arc::new(PowerFunction::poly(2.0).unwrap())
    }

    #[test]
    fn shadow_potential_examples() {
        let empty = MachineState::new(square());
        assert_eq!(shadow_potential_weighted(&empty), 0.0);
        let one = MachineState::with_jobs(square(), &[job(0, 0.0, 1.0, 1.0)]);
        assert!(rel(shadow_potential_weighted(&one), 2.0 / 3.0) < 1e-14);
        let two = MachineState::with_jobs(square(), &[job(0, 0.0, 1.0, 1.0), job(1, 0.0, 2.0, 1.0)]);
        let expected = 2f64.powf(2.5) / 3.0 + 2.0 / 3.0;
        assert!(rel(shadow_potential_weighted(&two), expected) < 1e-14);
        assert!((expected - 2.55229).abs() < 1e-5);
    }

    #[test]
    fn assignment_delta_examples() {
        let empty = MachineState::new(square());
        let j = job(9, 0.0, 1.0, 1.0);
        assert!(rel(assignment_delta_weighted(&empty, &j), 2.0 / 3.0) < 1e-14);
        let tiny = job(9, 0.0, 1e-12, 1e-12);
        assert!(rel(assignment_delta_weighted(&empty, &tiny), 1e-18 / 1.5) < 1e-12);
        let busy = MachineState::with_jobs(square(), &[job(0, 0.0, 1.0, 1.0)]);
        let expected = 2f64.powf(2.5) / 3.0 - 2.0 / 3.0;
        assert!(rel(assignment_delta_weighted(&busy, &j), expected) < 1e-14);
        assert!((expected - 1.21895).abs() < 1e-5);
    }

    #[test]
    fn assign_examples() {
        let j = job(9, 0.0, 1.0, 1.0);
        let mut two_empty = vec![MachineState::new(square()), MachineState::new(square())];
        assert_eq!(assign_weighted(&mut two_empty, j), 0);
        assert_eq!(two_empty[0].queue.len(), 1);

        let mut busy_then_empty =
            vec![MachineState::with_jobs(square(), &[job(0, 0.0, 1.0, 1.0)]), MachineState::new(square())];
        assert_eq!(assign_weighted(&mut busy_then_empty, j), 1);

        // 2/3 for s^2 against 3/5 for s^3
        let cube = Arc::new(PowerFunction::poly(3.0).unwrap());
        let mut mixed = vec![MachineState::new(square()), MachineState::new(cube)];
        assert_eq!(assign_weighted(&mut mixed, j), 1);
    }

    #[test]
    fn advance_single_job_closed_form() {
        let mut state = MachineState::with_jobs(square(), &[job(0, 0.0, 1.0, 1.0)]);
        let cfg = WeightedSchedulerConfig::default();
        let adv = advance_weighted(&mut state, &cfg, f64::INFINITY).unwrap();
        assert_eq!(adv.completed, Some(0));
        assert!(rel(adv.elapsed, 2.0) < 1e-14);
        assert!(rel(adv.metrics.fractional_weighted_flow, 2.0 / 3.0) < 1e-14);
        assert!(rel(adv.metrics.energy, 2.0 / 3.0) < 1e-14);
        assert!(state.is_idle());

        let mut state = MachineState::with_jobs(square(), &[job(0, 0.0, 1.0, 1.0)]);
        let cfg = WeightedSchedulerConfig::new(1.5).unwrap();
        let adv = advance_weighted(&mut state, &cfg, f64::INFINITY).unwrap();
        assert!(rel(adv.elapsed, 4.0 / 3.0) < 1e-14);
        assert!(rel(adv.metrics.fractional_weighted_flow, 4.0 / 9.0) < 1e-14);
        assert!(rel(adv.metrics.energy, 4.0 / 9.0) < 1e-14);

        let mut idle = MachineState::new(square());
        let adv = advance_weighted(&mut idle, &cfg, 3.0).unwrap();
        assert_eq!(adv.metrics, Metrics::default());
        assert_eq!(adv.completed, None);
    }

    #[test]
    fn partial_advances_compose() {
        // two half-way steps equal one full run
        let mut state = MachineState::with_jobs(square(), &[job(0, 0.0, 1.0, 1.0)]);
        let cfg = WeightedSchedulerConfig::default();
        let a = advance_weighted(&mut state, &cfg, 0.5).unwrap();
        assert_eq!(a.completed, None);
        // w(t) = (1 - t/2)^2 for P = s^2
        let w = state.fractional_weight();
        assert!(rel(w, 0.75f64.powi(2)) < 1e-14);
        let b = advance_weighted(&mut state, &cfg, f64::INFINITY).unwrap();
        assert!(rel(a.elapsed + b.elapsed, 2.0) < 1e-14);
        let flow = a.metrics.fractional_weighted_flow + b.metrics.fractional_weighted_flow;
        assert!(rel(flow, 2.0 / 3.0) < 1e-14);
    }

    #[test]
    fn divergent_machine_uses_threshold() {
        let table = Arc::new(PowerFunction::table(vec![[1.0, 1.0], [2.0, 4.0]]).unwrap());
        let mut state = MachineState::with_jobs(table.clone(), &[job(0, 0.0, 1.0, 1.0)]);
        let cfg = WeightedSchedulerConfig::default();
        let adv = advance_weighted(&mut state, &cfg, f64::INFINITY).unwrap();
        assert_eq!(adv.completed, Some(0));
        // Q(x) = x on [0, 1]: time ∫_thr^1 dx/x = ln(1/thr)
        assert!(rel(adv.elapsed, (1e9f64).ln()) < 1e-12);
        // flow covers the whole drain, tail included: ∫_0^1 x/Q(x) dx = 1
        assert!(rel(adv.metrics.fractional_weighted_flow, 1.0) < 1e-12);
        assert!(rel(adv.metrics.integer_weighted_flow, (1e9f64).ln()) < 1e-12);
        // the same job next to another one drains exactly
        let mut state = MachineState::with_jobs(table, &[job(0, 0.0, 1.0, 1.0), job(1, 0.0, 5.0, 1.0)]);
        let ttc = cfg.time_to_completion(&state).unwrap();
        assert!(ttc.is_finite());
        let adv = advance_weighted(&mut state, &cfg, f64::INFINITY).unwrap();
        assert_eq!(adv.completed, Some(0));
    }

    #[test]
    fn simulate_examples() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let single = Instance::new(vec![pf.clone()], vec![job(0, 0.0, 1.0, 1.0)], Mode::Weighted).unwrap();
        let (trace, m) = simulate_weighted(&single, &WeightedSchedulerConfig::default()).unwrap();
        assert!(rel(m.objective(Mode::Weighted), 4.0 / 3.0) < 1e-14);
        assert_eq!(trace.len(), 2);
        assert!(rel(trace[1].time(), 2.0) < 1e-14);

        let empty = Instance::new(vec![pf.clone()], vec![], Mode::Weighted).unwrap();
        let (trace, m) = simulate_weighted(&empty, &WeightedSchedulerConfig::default()).unwrap();
        assert!(trace.is_empty());
        assert_eq!(m, Metrics::default());

        let pair =
            Instance::new(vec![pf.clone(), pf], vec![job(0, 0.0, 1.0, 1.0), job(1, 0.0, 1.0, 1.0)], Mode::Weighted)
                .unwrap();
        let (trace, m) = simulate_weighted(&pair, &WeightedSchedulerConfig::default()).unwrap();
        let machines: Vec<usize> = trace
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Arrival { machine, .. } => Some(*machine),
                _ => None,
            })
            .collect();
        assert_eq!(machines, vec![0, 1]);
        assert!(rel(m.objective(Mode::Weighted), 8.0 / 3.0) < 1e-14);
    }

    #[test]
    fn future_cost_examples() {
        assert_eq!(future_cost_weighted(&MachineState::new(square())), 0.0);
        let one = MachineState::with_jobs(square(), &[job(0, 0.0, 1.0, 1.0)]);
        assert!(rel(future_cost_weighted(&one), 4.0 / 3.0) < 1e-14);
        let jobs = [job(0, 0.0, 1.0, 1.0), job(1, 0.0, 2.0, 1.0)];
        let two = MachineState::with_jobs(square(), &jobs);
        let fc = future_cost_weighted(&two);
        assert!(rel(fc, 2.0 * (2f64.powf(2.5) / 3.0 + 2.0 / 3.0)) < 1e-14);
        let mut sim = Simulation::from_states(vec![two], WeightedSchedulerConfig::default());
        sim.run_to_end().unwrap();
        assert!(rel(sim.metrics().objective(Mode::Weighted), fc) < 1e-4);
    }

    #[test]
    fn config_validation() {
        assert!(WeightedSchedulerConfig::new(0.9).is_err());
        let bad = WeightedSchedulerConfig { speedup: 1.0, completion_threshold: 1e-2 };
        assert!(bad.validate().is_err());
        let bad = WeightedSchedulerConfig { speedup: 1.0, completion_threshold: 0.0 };
        assert!(bad.validate().is_err());
    }
}
