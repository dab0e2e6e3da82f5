//! Exact stochastic simulation (direct-method SSA) and construction of
//! subsampled observation datasets.
//!
//! Replicates draw from per-replicate ChaCha streams split off one master
//! seed, so datasets are reproducible and replicates can be generated
//! concurrently without coordination.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::system::{hazard, RateVector, ReactionSystem, StateVector};

/// One exact event-by-event realisation of the jump process.
///
/// `states[k+1] = states[k] + V·e_{reaction_indices[k]}`, times strictly
/// increasing from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub event_times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub reaction_indices: Vec<usize>,
}

impl Trajectory {
    pub fn n_events(&self) -> usize {
        self.reaction_indices.len()
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory holds ≥ 1 state")
    }

    /// State at the last event time ≤ `t` (the process is piecewise
    /// constant between events).
    pub fn state_before(&self, t: f64) -> &StateVector {
        let idx = match self
            .event_times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        &self.states[idx]
    }
}

/// When to terminate a simulation (absorption always terminates).
#[derive(Debug, Clone, Copy)]
pub enum StopRule {
    MaxTime(f64),
    MaxEvents(usize),
}

/// Replicate-indexed observations: irregular times allowed, lengths may
/// differ across replicates, each replicate has ≥ 2 time points.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationSet {
    pub replicates: Vec<Replicate>,
}

impl ObservationSet {
    pub fn new(replicates: Vec<Replicate>) -> Result<Self> {
        for (c, rep) in replicates.iter().enumerate() {
            if rep.times.len() < 2 {
                return Err(Error::Invalid {
                    what: "observation set",
                    reason: format!("replicate {c} has fewer than 2 time points"),
                });
            }
            if rep.times.len() != rep.states.len() {
                return Err(Error::Invalid {
                    what: "observation set",
                    reason: format!("replicate {c}: times/states length mismatch"),
                });
            }
            if rep.times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Invalid {
                    what: "observation set",
                    reason: format!("replicate {c}: times not strictly increasing"),
                });
            }
        }
        Ok(Self { replicates })
    }

    pub fn n_replicates(&self) -> usize {
        self.replicates.len()
    }

    /// Total number of transitions (observation pairs), i.e. Σ_c T_c.
    pub fn n_transitions(&self) -> usize {
        self.replicates.iter().map(|r| r.times.len() - 1).sum()
    }

    /// Number of species, from the first state vector.
    pub fn n_species(&self) -> usize {
        self.replicates
            .first()
            .and_then(|r| r.states.first())
            .map_or(0, |s| s.len())
    }

    /// Mean observation gap across all replicates.
    pub fn mean_dt(&self) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for rep in &self.replicates {
            for w in rep.times.windows(2) {
                sum += w[1] - w[0];
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

fn simulate_with_rng(
    system: &ReactionSystem,
    theta: &RateVector,
    y0: &StateVector,
    stop: StopRule,
    rng: &mut ChaCha12Rng,
) -> Result<Trajectory> {
    if y0.as_vector().iter().any(|&c| c.fract() != 0.0) {
        return Err(Error::Invalid {
            what: "initial state",
            reason: "SSA requires integer counts".into(),
        });
    }
    let v = system.net_matrix();
    let mut t = 0.0;
    let mut y = y0.as_vector().clone();
    let mut event_times = vec![0.0];
    let mut states = vec![y0.clone()];
    let mut reaction_indices = Vec::new();

    loop {
        match stop {
            StopRule::MaxEvents(n) if reaction_indices.len() >= n => break,
            _ => {}
        }
        let state = StateVector::new(y.clone()).expect("SSA keeps counts nonnegative");
        let lambda = hazard(system, &state, theta)?;
        let total: f64 = lambda.iter().sum();
        if total <= 0.0 {
            break; // absorbed: no reaction can fire
        }
        // Exponential waiting time from a (0, 1] uniform.
        let u: f64 = rng.gen();
        let wait = -(1.0 - u).ln() / total;
        if let StopRule::MaxTime(t_max) = stop {
            if t + wait > t_max {
                break;
            }
        }
        // Pick the reaction proportional to its hazard.
        let mut pick = rng.gen::<f64>() * total;
        let mut j = 0;
        for (idx, lam) in lambda.iter().enumerate() {
            pick -= lam;
            if pick <= 0.0 {
                j = idx;
                break;
            }
            j = idx; // numerical slack: fall through to the last positive entry
        }
        t += wait;
        y += v.column(j);
        event_times.push(t);
        states.push(StateVector::new(y.clone()).expect("net effects keep counts ≥ 0"));
        reaction_indices.push(j);
    }
    Ok(Trajectory {
        event_times,
        states,
        reaction_indices,
    })
}

/// Direct-method SSA: exponential waiting times from the total hazard,
/// reaction chosen proportional to its hazard. Deterministic per seed.
///
/// A start state with zero total hazard yields the trivial one-state
/// trajectory (absorbed immediately).
pub fn simulate_ssa(
    system: &ReactionSystem,
    theta: &RateVector,
    y0: &StateVector,
    stop: StopRule,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    simulate_with_rng(system, theta, y0, stop, &mut rng)
}

/// Event-indexed subsampling: observation `i` is the state after the
/// `i·keep_every`-th event with its event time, `i = 1..=n_obs`, preceded by
/// the initial state at t = 0. Single-replicate output.
pub fn subsample(trajectory: &Trajectory, keep_every: usize, n_obs: usize) -> Result<ObservationSet> {
    if keep_every == 0 || n_obs == 0 {
        return Err(Error::Invalid {
            what: "subsample",
            reason: "keep_every and n_obs must be ≥ 1".into(),
        });
    }
    let required = keep_every * n_obs;
    if trajectory.n_events() < required {
        return Err(Error::TrajectoryTooShort {
            required,
            available: trajectory.n_events(),
        });
    }
    let mut times = Vec::with_capacity(n_obs + 1);
    let mut states = Vec::with_capacity(n_obs + 1);
    times.push(trajectory.event_times[0]);
    states.push(trajectory.states[0].clone());
    for i in 1..=n_obs {
        let idx = i * keep_every;
        times.push(trajectory.event_times[idx]);
        states.push(trajectory.states[idx].clone());
    }
    ObservationSet::new(vec![Replicate { times, states }])
}

/// Time-grid subsampling: for each grid time, record the state at the last
/// event before (or at) that time, stamped with the grid time itself.
pub fn subsample_at_times(trajectory: &Trajectory, times: &[f64]) -> Result<ObservationSet> {
    if times.len() < 2 {
        return Err(Error::Invalid {
            what: "subsample grid",
            reason: "need at least 2 grid times".into(),
        });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times[0] < 0.0 {
        return Err(Error::Invalid {
            what: "subsample grid",
            reason: "grid times must be nonnegative and strictly increasing".into(),
        });
    }
    let states = times
        .iter()
        .map(|&t| trajectory.state_before(t).clone())
        .collect();
    ObservationSet::new(vec![Replicate {
        times: times.to_vec(),
        states,
    }])
}

/// `n_replicates` independent SSA runs, each subsampled every `keep_every`
/// events for `n_obs` observations. Replicate `c` uses stream `c` of the
/// master seed.
pub fn simulate_dataset(
    system: &ReactionSystem,
    theta: &RateVector,
    y0: &StateVector,
    n_replicates: usize,
    keep_every: usize,
    n_obs: usize,
    seed: u64,
) -> Result<ObservationSet> {
    let replicates: Vec<Replicate> = (0..n_replicates as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let traj = simulate_with_rng(
                system,
                theta,
                y0,
                StopRule::MaxEvents(keep_every * n_obs),
                &mut rng,
            )?;
            let mut set = subsample(&traj, keep_every, n_obs)?;
            Ok(set.replicates.pop().expect("subsample yields one replicate"))
        })
        .collect::<Result<_>>()?;
    ObservationSet::new(replicates)
}

/// Like [`simulate_dataset`] but sampling each replicate at fixed grid
/// times, simulating up to the last grid time.
pub fn simulate_dataset_at_times(
    system: &ReactionSystem,
    theta: &RateVector,
    y0: &StateVector,
    n_replicates: usize,
    times: &[f64],
    seed: u64,
) -> Result<ObservationSet> {
    let t_max = *times.last().ok_or_else(|| Error::Invalid {
        what: "subsample grid",
        reason: "empty grid".into(),
    })?;
    let replicates: Vec<Replicate> = (0..n_replicates as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let traj = simulate_with_rng(system, theta, y0, StopRule::MaxTime(t_max), &mut rng)?;
            let mut set = subsample_at_times(&traj, times)?;
            Ok(set.replicates.pop().expect("subsample yields one replicate"))
        })
        .collect::<Result<_>>()?;
    ObservationSet::new(replicates)
}
