use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::sum_tree::SumTree;
use crate::{Error, Result, Rng};

/// One transition `(s, a, r, s', terminal)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Priority given to freshly added experiences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialPriority {
    /// Largest priority currently stored, or 1.0 for an empty buffer.
    RunningMax,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayConfig {
    pub capacity: usize,
    /// Prioritization exponent; 0 is uniform, 1 fully proportional.
    pub beta: f64,
    /// Added to `|δ|` so every entry stays reachable.
    pub eps_p: f64,
    pub initial_priority: InitialPriority,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            capacity: 100_000,
            beta: 0.7,
            eps_p: 1e-3,
            initial_priority: InitialPriority::RunningMax,
        }
    }
}

/// Ring buffer of experiences with a sum tree over `p_i^β`.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    config: ReplayConfig,
    state_dim: usize,
    num_actions: usize,
    entries: Vec<Experience>,
    priorities: Vec<f64>,
    tree: SumTree,
    next_slot: usize,
    total_added: u64,
}

impl ReplayBuffer {
    pub fn new(config: ReplayConfig, state_dim: usize, num_actions: usize) -> Result<Self> {
        if config.capacity == 0 {
            return Err(Error::config("capacity", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&config.beta) {
            return Err(Error::config("beta", format!("{} outside [0, 1]", config.beta)));
        }
        if !(config.eps_p > 0.0 && config.eps_p.is_finite()) {
            return Err(Error::config("eps_p", "must be positive and finite"));
        }
        if let InitialPriority::Fixed(p) = config.initial_priority {
            if !(p >= config.eps_p && p.is_finite()) {
                return Err(Error::config(
                    "initial_priority",
                    format!("{p} must be finite and at least eps_p"),
                ));
            }
        }
        Ok(Self {
            config,
            state_dim,
            num_actions,
            entries: Vec::with_capacity(config.capacity.min(1 << 20)),
            priorities: Vec::with_capacity(config.capacity.min(1 << 20)),
            tree: SumTree::new(config.capacity),
            next_slot: 0,
            total_added: 0,
        })
    }

    pub fn config(&self) -> &ReplayConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    pub fn total_added(&self) -> u64 {
        self.total_added
    }

    pub fn get(&self, index: usize) -> Option<&Experience> {
        self.entries.get(index)
    }

    pub fn priority(&self, index: usize) -> Option<f64> {
        self.priorities.get(index).copied()
    }

    pub fn priorities(&self) -> &[f64] {
        &self.priorities
    }

    /// Probability that one draw returns `index`.
    pub fn probability(&self, index: usize) -> Option<f64> {
        (index < self.len()).then(|| self.tree.get(index) / self.tree.total())
    }

    fn fresh_priority(&self) -> f64 {
        match self.config.initial_priority {
            InitialPriority::Fixed(p) => p,
            InitialPriority::RunningMax => {
                if self.is_empty() {
                    1.0
                } else {
                    self.priorities
                        .iter()
                        .copied()
                        .fold(self.config.eps_p, f64::max)
                }
            }
        }
    }

    /// Store an experience, evicting the oldest entry when full. Returns the
    /// slot it was written to.
    pub fn add(&mut self, exp: Experience) -> Result<usize> {
        self.validate(&exp)?;
        let priority = self.fresh_priority();
        let slot = self.next_slot;
        if slot == self.entries.len() {
            self.entries.push(exp);
            self.priorities.push(priority);
        } else {
            self.entries[slot] = exp;
            self.priorities[slot] = priority;
        }
        self.tree.set(slot, priority.powf(self.config.beta));
        self.next_slot = (slot + 1) % self.config.capacity;
        self.total_added += 1;
        Ok(slot)
    }

    /// Draw `m` entries with replacement in proportion to `p_i^β`.
    pub fn sample(&self, m: usize, rng: &mut Rng) -> Result<Vec<(usize, &Experience)>> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let total = self.tree.total();
        Ok((0..m)
            .map(|_| {
                let mass = rng.gen::<f64>() * total;
                let index = self.tree.find(mass).min(self.len() - 1);
                (index, &self.entries[index])
            })
            .collect())
    }

    /// Set `p_i = |δ_i| + ε_P`. Repeated indices: the last write wins.
    pub fn update_priorities(&mut self, indices: &[usize], td_errors: &[f64]) -> Result<()> {
        if indices.len() != td_errors.len() {
            return Err(Error::InvalidArgument(format!(
                "{} indices but {} TD errors",
                indices.len(),
                td_errors.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidArgument(format!(
                "index {bad} out of range for buffer of size {}",
                self.len()
            )));
        }
        if let Some(pos) = td_errors.iter().position(|d| !d.is_finite()) {
            return Err(Error::NonFinite {
                index: pos,
                context: "TD error".into(),
            });
        }
        for (&i, &delta) in indices.iter().zip(td_errors) {
            let p = delta.abs() + self.config.eps_p;
            self.priorities[i] = p;
            self.tree.set(i, p.powf(self.config.beta));
        }
        Ok(())
    }

    fn validate(&self, exp: &Experience) -> Result<()> {
        if exp.state.len() != self.state_dim || exp.next_state.len() != self.state_dim {
            return Err(Error::InvalidArgument(format!(
                "experience states must have dimension {}",
                self.state_dim
            )));
        }
        if exp.action >= self.num_actions {
            return Err(Error::InvalidArgument(format!(
                "action {} outside 0..{}",
                exp.action, self.num_actions
            )));
        }
        let finite = exp.reward.is_finite()
            && exp.state.iter().chain(&exp.next_state).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("experience holds non-finite values".into()));
        }
        Ok(())
    }

    /// Write every stored entry as CSV: `index, action, reward, priority,
    /// terminal, s_0.., next_s_0..`.
    pub fn dump_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec![
            "index".to_string(),
            "action".into(),
            "reward".into(),
            "priority".into(),
            "terminal".into(),
        ];
        header.extend((0..self.state_dim).map(|k| format!("s{k}")));
        header.extend((0..self.state_dim).map(|k| format!("next_s{k}")));
        out.write_record(&header)?;
        for (i, (e, p)) in self.entries.iter().zip(&self.priorities).enumerate() {
            let mut row = vec![
                i.to_string(),
                e.action.to_string(),
                e.reward.to_string(),
                p.to_string(),
                (e.terminal as u8).to_string(),
            ];
            row.extend(e.state.iter().chain(&e.next_state).map(f64::to_string));
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::io("replay dump", e))?;
        Ok(())
    }
}
