//! Event-driven multi-machine simulation shared by both scheduling modes.
//!
//! A [`Discipline`] fixes what happens on a single machine (job selection,
//! speed scaling, the shadow potential used for assignment). The
//! [`Simulation`] owns the machines, routes arrivals through an
//! [`Assignment`] rule and advances time from event to event. There is no
//! fixed time step: every machine moves in closed form between events.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Job, JobId, MachineSnapshot, MachineState, Metrics, Mode, TraceEvent};

/// Per-machine job selection and speed scaling.
pub trait Discipline: Clone + Send + Sync {
    fn mode(&self) -> Mode;

    /// Speed augmentation factor (`1 + epsilon` for the online side).
    fn speedup(&self) -> f64;

    /// Queue index of the job the machine works on.
    fn running(&self, state: &MachineState) -> Option<usize>;

    /// Power drawn in the current state (unaugmented).
    fn power(&self, state: &MachineState) -> f64;

    /// Time until the running job completes; `inf` when idle.
    fn time_to_completion(&self, state: &MachineState) -> Result<f64>;

    /// Evolves the machine for `dt`. With `finish` set, `dt` is the running
    /// job's time to completion and that job ends at its completion point.
    fn advance(&self, state: &mut MachineState, dt: f64, finish: bool) -> Result<Metrics>;

    /// Increase of the shadow potential if `job` joined this machine.
    fn assignment_delta(&self, state: &MachineState, job: &Job) -> f64;

    fn shadow_potential(&self, state: &MachineState) -> f64;
}

/// Job-to-machine map, indexed by the job's position in [`Instance::jobs`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssignmentMap(pub Vec<usize>);

impl AssignmentMap {
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.0.len() != instance.jobs.len() {
            return Err(Error::InvalidConfig(format!(
                "assignment covers {} jobs, instance has {}",
                self.0.len(),
                instance.jobs.len()
            )));
        }
        if let Some(&m) = self.0.iter().find(|&&m| m >= instance.machine_count()) {
            return Err(Error::InvalidConfig(format!("machine index {m} out of range")));
        }
        Ok(())
    }

    /// `(job id, machine)` pairs in job order.
    pub fn pairs(&self, instance: &Instance) -> Vec<(JobId, usize)> {
        instance.jobs.iter().zip(&self.0).map(|(j, &m)| (j.id, m)).collect()
    }
}

#[derive(Debug, Clone)]
pub enum Assignment {
    /// Minimum shadow-potential increase, ties to the lowest machine index.
    Greedy,
    Fixed(Arc<AssignmentMap>),
}

/// Index of the machine with the smallest assignment delta; ties go to the
/// lowest index.
pub fn greedy_choice<D: Discipline>(discipline: &D, machines: &[MachineState], job: &Job) -> usize {
    let mut best = 0;
    let mut best_delta = f64::INFINITY;
    for (i, m) in machines.iter().enumerate() {
        let delta = discipline.assignment_delta(m, job);
        if delta < best_delta {
            best = i;
            best_delta = delta;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct Simulation<D: Discipline> {
    discipline: D,
    jobs: Arc<Vec<Job>>,
    next_job: usize,
    assignment: Assignment,
    machines: Vec<MachineState>,
    /// Job that reached its completion point and awaits removal.
    finishing: Vec<Option<JobId>>,
    machine_metrics: Vec<Metrics>,
    chosen: Vec<usize>,
    time: f64,
    trace: Option<Vec<TraceEvent>>,
}

impl<D: Discipline> Simulation<D> {
    pub fn new(instance: &Instance, discipline: D, assignment: Assignment) -> Result<Self> {
        if instance.mode != discipline.mode() {
            return Err(Error::InvalidConfig(format!(
                "instance mode {} does not match the {} discipline",
                instance.mode,
                discipline.mode()
            )));
        }
        if let Assignment::Fixed(map) = &assignment {
            map.validate(instance)?;
        }
        let machines: Vec<MachineState> =
            instance.machines.iter().map(|pf| MachineState::new(Arc::new(pf.clone()))).collect();
        let m = machines.len();
        Ok(Simulation {
            discipline,
            jobs: Arc::new(instance.jobs.clone()),
            next_job: 0,
            assignment,
            machines,
            finishing: vec![None; m],
            machine_metrics: vec![Metrics::default(); m],
            chosen: Vec::with_capacity(instance.jobs.len()),
            time: 0.0,
            trace: Some(Vec::new()),
        })
    }

    /// Starts from explicit machine states with no pending arrivals.
    pub fn from_states(machines: Vec<MachineState>, discipline: D) -> Self {
        let m = machines.len();
        Simulation {
            discipline,
            jobs: Arc::new(Vec::new()),
            next_job: 0,
            assignment: Assignment::Greedy,
            machines,
            finishing: vec![None; m],
            machine_metrics: vec![Metrics::default(); m],
            chosen: Vec::new(),
            time: 0.0,
            trace: Some(Vec::new()),
        }
    }

    /// Disables trace recording.
    pub fn without_trace(mut self) -> Self {
        self.trace = None;
        self
    }

    pub fn discipline(&self) -> &D {
        &self.discipline
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn machines(&self) -> &[MachineState] {
        &self.machines
    }

    pub fn machine_metrics(&self) -> &[Metrics] {
        &self.machine_metrics
    }

    pub fn metrics(&self) -> Metrics {
        let mut total = Metrics::default();
        for m in &self.machine_metrics {
            total.add(m);
        }
        total
    }

    pub fn trace(&self) -> &[TraceEvent] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn into_trace(self) -> Vec<TraceEvent> {
        self.trace.unwrap_or_default()
    }

    /// Machines chosen so far, in arrival order.
    pub fn assignments(&self) -> &[usize] {
        &self.chosen
    }

    pub fn peek_arrival(&self) -> Option<&Job> {
        self.jobs.get(self.next_job)
    }

    pub fn next_release(&self) -> Option<f64> {
        self.peek_arrival().map(|j| j.release)
    }

    /// Earliest absolute completion time over all machines.
    pub fn next_completion(&self) -> Result<Option<f64>> {
        let mut best: Option<f64> = None;
        for (m, state) in self.machines.iter().enumerate() {
            if self.finishing[m].is_some() {
                return Ok(Some(self.time));
            }
            let ttc = self.discipline.time_to_completion(state)?;
            if ttc.is_finite() {
                let t = self.time + ttc;
                best = Some(best.map_or(t, |b| b.min(t)));
            }
        }
        Ok(best)
    }

    pub fn next_event_time(&self) -> Result<Option<f64>> {
        let c = self.next_completion()?;
        Ok(match (c, self.next_release()) {
            (Some(c), Some(r)) => Some(c.min(r.max(self.time))),
            (c, r) => c.or(r.map(|r| r.max(self.time))),
        })
    }

    /// Is every job released and finished?
    pub fn is_done(&self) -> bool {
        self.next_job >= self.jobs.len()
            && self.machines.iter().all(MachineState::is_idle)
            && self.finishing.iter().all(Option::is_none)
    }

    /// Continuous evolution to `t`, which must not lie beyond the next
    /// event. Machines whose running job completes exactly at `t` finish it;
    /// the job stays queued until [`Simulation::pop_completions`].
    pub fn flow_until(&mut self, t: f64) -> Result<()> {
        if t < self.time {
            return Err(Error::Domain(format!("cannot move back from {} to {t}", self.time)));
        }
        if t == self.time {
            return Ok(());
        }
        for (m, state) in self.machines.iter_mut().enumerate() {
            if state.is_idle() || self.finishing[m].is_some() {
                continue;
            }
            let ttc = self.discipline.time_to_completion(state)?;
            let acc = if self.time + ttc <= t {
                let idx = self.discipline.running(state).expect("busy machine runs a job");
                self.finishing[m] = Some(state.queue[idx].job.id);
                self.discipline.advance(state, ttc, true)?
            } else {
                self.discipline.advance(state, t - self.time, false)?
            };
            self.machine_metrics[m].add(&acc);
        }
        self.time = t;
        Ok(())
    }

    /// Removes jobs that reached their completion point.
    pub fn pop_completions(&mut self) -> Vec<(JobId, usize)> {
        let mut done = Vec::new();
        for (m, slot) in self.finishing.iter_mut().enumerate() {
            if let Some(id) = slot.take() {
                self.machines[m].queue.retain(|q| q.job.id != id);
                done.push((id, m));
                if let Some(trace) = self.trace.as_mut() {
                    trace.push(TraceEvent::Completion { time: self.time, job: id, machine: m });
                }
            }
        }
        done
    }

    /// Machine the next pending job would be routed to.
    pub fn route(&self, job: &Job) -> usize {
        match &self.assignment {
            Assignment::Greedy => greedy_choice(&self.discipline, &self.machines, job),
            Assignment::Fixed(map) => map.0[self.next_job],
        }
    }

    /// Admits the next pending job if it has been released by now.
    pub fn admit_next(&mut self) -> Option<(JobId, usize)> {
        let job = *self.peek_arrival()?;
        if job.release > self.time {
            return None;
        }
        let m = self.route(&job);
        self.machines[m].insert(job);
        self.chosen.push(m);
        self.next_job += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceEvent::Arrival { time: self.time, job: job.id, machine: m });
        }
        Some((job.id, m))
    }

    /// Processes every event up to and including `t` (completions before
    /// arrivals at equal times) and leaves the system at time `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        loop {
            match self.next_event_time()? {
                Some(e) if e <= t => {
                    self.flow_until(e)?;
                    self.pop_completions();
                    while self.admit_next().is_some() {}
                }
                _ => {
                    self.flow_until(t)?;
                    return Ok(());
                }
            }
        }
    }

    /// Runs until every job is released and finished.
    pub fn run_to_end(&mut self) -> Result<()> {
        while let Some(e) = self.next_event_time()? {
            self.flow_until(e)?;
            self.pop_completions();
            while self.admit_next().is_some() {}
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Vec<MachineSnapshot> {
        self.machines
            .iter()
            .map(|state| {
                let power = self.discipline.power(state);
                MachineSnapshot {
                    fractional_weight: state.fractional_weight(),
                    unfinished: state.unfinished(),
                    speed: self.discipline.speedup() * state.power.speed_at(power),
                    power,
                    running: self.discipline.running(state).map(|i| state.queue[i].job.id),
                }
            })
            .collect()
    }

    /// Appends a sample event for the current state.
    pub fn record_sample(&mut self) {
        let snap = self.snapshot();
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceEvent::Sample { time: self.time, machines: snap });
        }
    }
}

/// Sum over segments `(q_prev, q]` of `[0, upto]`, cut at the profile's
/// keys, of `length * f(mass above q)`.
pub(crate) fn integrate_profile<F: Fn(f64) -> f64>(profile: &crate::model::ResidualProfile, upto: f64, f: F) -> f64 {
    let mut total = 0.0;
    let mut prev = 0.0;
    for key in profile.keys() {
        if key <= prev {
            continue;
        }
        if key >= upto {
            break;
        }
        total += (key - prev) * f(profile.value_above(key));
        prev = key;
    }
    if upto > prev && upto.is_finite() {
        total += (upto - prev) * f(profile.value_above(upto));
    }
    total
}
