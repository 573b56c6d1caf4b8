//! Unweighted flow plus energy: SRPT on every machine, power equal to the
//! number of unfinished jobs `n` (speed `Q(n)`), and greedy assignment by the
//! increase in
//!
//! ```text
//! shadow_i = ∫_0^∞ sum_{j=1}^{n_i(q)} j / Q_i(j) dq
//! ```
//!
//! with `n_i(q)` the number of jobs on machine `i` with remaining size at
//! least `q`. Speeds are piecewise constant, so all events are exact.

use crate::error::{Error, Result};
use crate::model::{Instance, Job, MachineState, Metrics, Mode, TraceEvent};
use crate::power::PowerFunction;
use crate::sim::{integrate_profile, Assignment, Discipline, Simulation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnweightedSchedulerConfig {
    pub speedup: f64,
}

impl Default for UnweightedSchedulerConfig {
    fn default() -> Self {
        UnweightedSchedulerConfig { speedup: 1.0 }
    }
}

impl UnweightedSchedulerConfig {
    pub fn new(speedup: f64) -> Result<Self> {
        let cfg = UnweightedSchedulerConfig { speedup };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speedup >= 1.0) || !self.speedup.is_finite() {
            return Err(Error::InvalidConfig(format!("speedup must be >= 1, got {}", self.speedup)));
        }
        Ok(())
    }
}

/// `[0, 1/Q(1), 1/Q(1) + 2/Q(2), ...]` up to `n`.
pub fn count_prefix_sums(pf: &PowerFunction, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for j in 1..=n {
        acc += pf.x_over_q(j as f64);
        out.push(acc);
    }
    out
}

impl Discipline for UnweightedSchedulerConfig {
    fn mode(&self) -> Mode {
        Mode::Unweighted
    }

    fn speedup(&self) -> f64 {
        self.speedup
    }

    fn running(&self, state: &MachineState) -> Option<usize> {
        state.srpt_index()
    }

    fn power(&self, state: &MachineState) -> f64 {
        state.unfinished() as f64
    }

    fn time_to_completion(&self, state: &MachineState) -> Result<f64> {
        let Some(idx) = state.srpt_index() else {
            return Ok(f64::INFINITY);
        };
        let speed = self.speedup * state.power.speed_at(state.unfinished() as f64);
        Ok(state.queue[idx].remaining / speed)
    }

    fn advance(&self, state: &mut MachineState, dt: f64, finish: bool) -> Result<Metrics> {
        let Some(idx) = state.srpt_index() else {
            return Ok(Metrics::default());
        };
        let n = state.unfinished() as f64;
        let speed = self.speedup * state.power.speed_at(n);
        let before = state.queue[idx];
        let after = if finish { 0.0 } else { (before.remaining - speed * dt).max(0.0) };
        let others: f64 =
            state.queue.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, q)| q.fractional_weight()).sum();
        // the running job's fraction falls linearly over the step
        let running_avg = before.job.weight * 0.5 * (before.remaining + after) / before.job.size;
        state.queue[idx].remaining = after;
        Ok(Metrics {
            fractional_weighted_flow: (others + running_avg) * dt,
            integer_weighted_flow: n * dt,
            energy: n * dt,
        })
    }

    fn assignment_delta(&self, state: &MachineState, job: &Job) -> f64 {
        assignment_delta_unweighted(state, job)
    }

    fn shadow_potential(&self, state: &MachineState) -> f64 {
        shadow_potential_unweighted(state)
    }
}

/// `∫_0^∞ sum_{j=1}^{n(q)} j/Q(j) dq`.
pub fn shadow_potential_unweighted(state: &MachineState) -> f64 {
    let prefix = count_prefix_sums(&state.power, state.unfinished());
    integrate_profile(&state.count_profile(), f64::INFINITY, |n| prefix[n as usize])
}

/// `∫_0^p (n(q)+1) / Q(n(q)+1) dq`.
pub fn assignment_delta_unweighted(state: &MachineState, job: &Job) -> f64 {
    let pf = &state.power;
    integrate_profile(&state.count_profile(), job.size, |n| pf.x_over_q(n + 1.0))
}

/// Inserts `job` where the shadow potential grows least (lowest index on ties).
pub fn assign_unweighted(machines: &mut [MachineState], job: Job) -> usize {
    let m = crate::sim::greedy_choice(&UnweightedSchedulerConfig::default(), machines, &job);
    machines[m].insert(job);
    m
}

pub fn simulate_unweighted(
    instance: &Instance,
    config: &UnweightedSchedulerConfig,
) -> Result<(Vec<TraceEvent>, Metrics)> {
    config.validate()?;
    let mut sim = Simulation::new(instance, *config, Assignment::Greedy)?;
    sim.run_to_end()?;
    let metrics = sim.metrics();
    Ok((sim.into_trace(), metrics))
}

/// Flow plus energy left to pay if nothing else arrives (speedup 1).
pub fn future_cost_unweighted(state: &MachineState) -> f64 {
    2.0 * shadow_potential_unweighted(state)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn square() -> Arc<PowerFunction> {
        Arc::new(PowerFunction::poly(2.0).unwrap())
    }

    fn unit(id: u64, size: f64) -> Job {
        Job::unit(id, 0.0, size).unwrap()
    }

    fn with_remaining(pf: Arc<PowerFunction>, jobs: &[(Job, f64)]) -> MachineState {
        let mut s = MachineState::new(pf);
        for (j, r) in jobs {
            s.insert(*j);
            s.queue.last_mut().unwrap().remaining = *r;
        }
        s
    }

    #[test]
    fn shadow_potential_examples() {
        assert_eq!(shadow_potential_unweighted(&MachineState::new(square())), 0.0);
        let one = MachineState::with_jobs(square(), &[unit(0, 1.0)]);
        assert!((shadow_potential_unweighted(&one) - 1.0).abs() < 1e-15);
        let two = MachineState::with_jobs(square(), &[unit(0, 1.0), unit(1, 1.0)]);
        assert!((shadow_potential_unweighted(&two) - (1.0 + 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn assignment_delta_examples() {
        let empty = MachineState::new(square());
        assert!((assignment_delta_unweighted(&empty, &unit(5, 1.0)) - 1.0).abs() < 1e-15);
        let busy = with_remaining(square(), &[(unit(0, 1.0), 0.5)]);
        let expected = 0.5 * 2.0 / 2f64.sqrt() + 0.5;
        assert!((assignment_delta_unweighted(&busy, &unit(5, 1.0)) - expected).abs() < 1e-15);
        assert!((expected - 1.20711).abs() < 1e-5);
        assert!(assignment_delta_unweighted(&empty, &unit(5, 1e-14)) < 1e-13);
    }

    #[test]
    fn assign_examples() {
        let mut two = vec![MachineState::new(square()), MachineState::new(square())];
        assert_eq!(assign_unweighted(&mut two, unit(5, 1.0)), 0);
        let mut busy = vec![with_remaining(square(), &[(unit(0, 1.0), 0.5)]), MachineState::new(square())];
        assert_eq!(assign_unweighted(&mut busy, unit(5, 1.0)), 1);
        let mut single = vec![with_remaining(square(), &[(unit(0, 1.0), 0.5)])];
        assert_eq!(assign_unweighted(&mut single, unit(5, 1.0)), 0);
    }

    #[test]
    fn simulate_examples() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let one = Instance::new(vec![pf.clone()], vec![unit(0, 1.0)], Mode::Unweighted).unwrap();
        let (trace, m) = simulate_unweighted(&one, &UnweightedSchedulerConfig::default()).unwrap();
        assert!((trace.last().unwrap().time() - 1.0).abs() < 1e-15);
        assert!((m.integer_weighted_flow - 1.0).abs() < 1e-15);
        assert!((m.energy - 1.0).abs() < 1e-15);
        assert!((m.objective(Mode::Unweighted) - 2.0).abs() < 1e-15);

        let two = Instance::new(vec![pf.clone()], vec![unit(0, 1.0), unit(1, 1.0)], Mode::Unweighted).unwrap();
        let (_, m) = simulate_unweighted(&two, &UnweightedSchedulerConfig::default()).unwrap();
        let expected = 2.0 * (1.0 + 2f64.sqrt());
        assert!((m.objective(Mode::Unweighted) - expected).abs() < 1e-12);
        assert!((m.energy - (1.0 + 2f64.sqrt())).abs() < 1e-12);

        let none = Instance::new(vec![pf], vec![], Mode::Unweighted).unwrap();
        let (_, m) = simulate_unweighted(&none, &UnweightedSchedulerConfig::default()).unwrap();
        assert_eq!(m, Metrics::default());
    }

    #[test]
    fn speedup_validation() {
        assert!(UnweightedSchedulerConfig::new(0.5).is_err());
        assert!(UnweightedSchedulerConfig::new(f64::INFINITY).is_err());
    }
}
