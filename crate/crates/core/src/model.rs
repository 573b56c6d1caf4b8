//! Jobs, instances, residual profiles, machine state and cost accounting.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::PowerFunction;

pub type JobId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    pub release: f64,
    /// Processing requirement `p_j`.
    pub size: f64,
    pub weight: f64,
}

impl Job {
    pub fn new(id: JobId, release: f64, size: f64, weight: f64) -> Result<Self> {
        let job = Job { id, release, size, weight };
        job.validate()?;
        Ok(job)
    }

    pub fn unit(id: JobId, release: f64, size: f64) -> Result<Self> {
        Self::new(id, release, size, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.release >= 0.0) || !self.release.is_finite() {
            return Err(Error::InvalidInstance(format!("job {}: release must be >= 0", self.id)));
        }
        if !(self.size > 0.0) || !self.size.is_finite() {
            return Err(Error::InvalidInstance(format!("job {}: size must be > 0", self.id)));
        }
        if !(self.weight > 0.0) || !self.weight.is_finite() {
            return Err(Error::InvalidInstance(format!("job {}: weight must be > 0", self.id)));
        }
        Ok(())
    }

    pub fn density(&self) -> f64 {
        self.weight / self.size
    }

    /// `d_j = p_j / w_j`.
    pub fn inverse_density(&self) -> f64 {
        self.size / self.weight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Weighted,
    Unweighted,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Weighted => "weighted",
            Mode::Unweighted => "unweighted",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted" => Ok(Mode::Weighted),
            "unweighted" => Ok(Mode::Unweighted),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

/// A problem instance. Jobs are kept sorted by `(release, id)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct Instance {
    pub machines: Vec<PowerFunction>,
    pub jobs: Vec<Job>,
    pub mode: Mode,
}

#[derive(Deserialize)]
struct RawInstance {
    machines: Vec<PowerFunction>,
    jobs: Vec<Job>,
    mode: Mode,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::new(raw.machines, raw.jobs, raw.mode)
    }
}

impl Instance {
    pub fn new(machines: Vec<PowerFunction>, mut jobs: Vec<Job>, mode: Mode) -> Result<Self> {
        if machines.is_empty() {
            return Err(Error::InvalidInstance("need at least one machine".into()));
        }
        for job in &jobs {
            job.validate()?;
            if mode == Mode::Unweighted && job.weight != 1.0 {
                return Err(Error::InvalidInstance(format!(
                    "job {} has weight {} in unweighted mode",
                    job.id, job.weight
                )));
            }
        }
        jobs.sort_by(|a, b| a.release.total_cmp(&b.release).then(a.id.cmp(&b.id)));
        let mut ids: Vec<_> = jobs.iter().map(|j| j.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInstance("job ids must be unique".into()));
        }
        Ok(Instance { machines, jobs, mode })
    }

    pub fn machine_count(&self) -> usize {
        self.machines.len()
    }

    /// Position of job `id` in `jobs`.
    pub fn job_index(&self, id: JobId) -> Option<usize> {
        self.jobs.iter().position(|j| j.id == id)
    }
}

/// Step function `q -> total mass of entries with key >= q`.
///
/// Weighted mode keys are inverse densities and masses fractional weights;
/// unweighted mode keys are remaining sizes and each mass is one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualProfile {
    /// Sorted by key; ties kept as separate entries.
    entries: Vec<(f64, f64)>,
    /// `suffix[i]` = sum of masses of `entries[i..]`.
    suffix: Vec<f64>,
}

impl ResidualProfile {
    pub fn new(mut entries: Vec<(f64, f64)>) -> Self {
        entries.retain(|&(_, m)| m > 0.0);
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut suffix = vec![0.0; entries.len() + 1];
        for i in (0..entries.len()).rev() {
            suffix[i] = suffix[i + 1] + entries[i].1;
        }
        ResidualProfile { entries, suffix }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.suffix.first().copied().unwrap_or(0.0)
    }

    /// Sum of masses with key `>= q`.
    pub fn value_above(&self, q: f64) -> f64 {
        let i = self.entries.partition_point(|&(k, _)| k < q);
        self.suffix.get(i).copied().unwrap_or(0.0)
    }

    /// Distinct keys in increasing order.
    pub fn keys(&self) -> Vec<f64> {
        let mut keys: Vec<f64> = self.entries.iter().map(|e| e.0).collect();
        keys.dedup();
        keys
    }

    /// `(segment length, mass on the segment)` for each segment `(k_prev, k]`
    /// between consecutive distinct keys, starting from `q = 0`.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.entries.len());
        let mut prev = 0.0;
        let mut i = 0;
        while i < self.entries.len() {
            let key = self.entries[i].0;
            if key > prev {
                out.push((key - prev, self.suffix[i]));
                prev = key;
            }
            while i < self.entries.len() && self.entries[i].0 == key {
                i += 1;
            }
        }
        out
    }
}

/// Sorted union of both profiles' keys together with `0`.
pub fn profile_merge_breakpoints(p1: &ResidualProfile, p2: &ResidualProfile) -> Vec<f64> {
    let mut keys = vec![0.0];
    keys.extend(p1.entries.iter().map(|e| e.0));
    keys.extend(p2.entries.iter().map(|e| e.0));
    keys.retain(|k| *k >= 0.0);
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    keys
}

/// A job waiting or running on a machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueuedJob {
    pub job: Job,
    /// Remaining work `p_j(t)`.
    pub remaining: f64,
}

impl QueuedJob {
    pub fn fractional_weight(&self) -> f64 {
        self.job.weight * self.remaining / self.job.size
    }
}

#[derive(Debug, Clone)]
pub struct MachineState {
    pub power: Arc<PowerFunction>,
    pub queue: Vec<QueuedJob>,
}

impl MachineState {
    pub fn new(power: Arc<PowerFunction>) -> Self {
        MachineState { power, queue: Vec::new() }
    }

    pub fn with_jobs(power: Arc<PowerFunction>, jobs: &[Job]) -> Self {
        let mut state = Self::new(power);
        for job in jobs {
            state.insert(*job);
        }
        state
    }

    pub fn insert(&mut self, job: Job) {
        self.queue.push(QueuedJob { job, remaining: job.size });
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }

    /// `w_{a,i}`: sum of fractional weights in the queue.
    pub fn fractional_weight(&self) -> f64 {
        self.queue.iter().map(QueuedJob::fractional_weight).sum()
    }

    /// Sum of full weights of unfinished jobs.
    pub fn integer_weight(&self) -> f64 {
        self.queue.iter().map(|q| q.job.weight).sum()
    }

    /// `n_{a,i}`.
    pub fn unfinished(&self) -> usize {
        self.queue.len()
    }

    /// `w(q)`: keyed by inverse density, mass = fractional weight.
    pub fn weighted_profile(&self) -> ResidualProfile {
        ResidualProfile::new(self.queue.iter().map(|q| (q.job.inverse_density(), q.fractional_weight())).collect())
    }

    /// `n(q)`: keyed by remaining size, unit masses.
    pub fn count_profile(&self) -> ResidualProfile {
        ResidualProfile::new(self.queue.iter().map(|q| (q.remaining, 1.0)).collect())
    }

    /// Highest density first; ties to the lowest id.
    pub fn hdf_index(&self) -> Option<usize> {
        self.queue
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.job.inverse_density().total_cmp(&b.job.inverse_density()).then(a.job.id.cmp(&b.job.id))
            })
            .map(|(i, _)| i)
    }

    /// Shortest remaining processing time; ties to the lowest id.
    pub fn srpt_index(&self) -> Option<usize> {
        self.queue
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.remaining.total_cmp(&b.remaining).then(a.job.id.cmp(&b.job.id)))
            .map(|(i, _)| i)
    }

    pub fn check_invariants(&self) -> Result<()> {
        for q in &self.queue {
            if !(q.remaining >= 0.0 && q.remaining <= q.job.size) {
                return Err(Error::InvalidInstance(format!(
                    "job {} remaining {} outside [0, {}]",
                    q.job.id, q.remaining, q.job.size
                )));
            }
        }
        Ok(())
    }
}

/// Accumulated costs. The objective depends on the mode: fractional weighted
/// flow plus energy for weighted instances, (integer) flow plus energy for
/// unweighted ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub fractional_weighted_flow: f64,
    pub integer_weighted_flow: f64,
    pub energy: f64,
}

impl Metrics {
    pub fn objective(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Weighted => self.fractional_weighted_flow + self.energy,
            Mode::Unweighted => self.integer_weighted_flow + self.energy,
        }
    }

    pub fn add(&mut self, other: &Metrics) {
        self.fractional_weighted_flow += other.fractional_weighted_flow;
        self.integer_weighted_flow += other.integer_weighted_flow;
        self.energy += other.energy;
    }
}

/// Linear accrual over `dt` at constant rates.
pub fn accrue_metrics(metrics: Metrics, dt: f64, fractional_weight: f64, integer_weight: f64, power: f64) -> Metrics {
    Metrics {
        fractional_weighted_flow: metrics.fractional_weighted_flow + fractional_weight * dt,
        integer_weighted_flow: metrics.integer_weighted_flow + integer_weight * dt,
        energy: metrics.energy + power * dt,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TraceEvent {
    Arrival { time: f64, job: JobId, machine: usize },
    Completion { time: f64, job: JobId, machine: usize },
    Sample { time: f64, machines: Vec<MachineSnapshot> },
}

impl TraceEvent {
    pub fn time(&self) -> f64 {
        match self {
            TraceEvent::Arrival { time, .. }
            | TraceEvent::Completion { time, .. }
            | TraceEvent::Sample { time, .. } => *time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineSnapshot {
    pub fractional_weight: f64,
    pub unfinished: usize,
    pub speed: f64,
    pub power: f64,
    pub running: Option<JobId>,
}
