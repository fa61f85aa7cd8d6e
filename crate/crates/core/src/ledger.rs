//! Regret and average-loss accounting.

use crate::vector::CompensatedSum;

/// Average-loss (and regret) snapshot after `t` inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    pub avg_loss: f64,
    pub regret: Option<f64>,
}

/// One input's contribution: `f(w_t, z_t)` and, when a comparator is known,
/// `f(w*, z_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretTerm {
    pub loss: f64,
    pub comparator_loss: Option<f64>,
}

impl RegretTerm {
    pub fn regret(&self) -> Option<f64> {
        self.comparator_loss.map(|c| self.loss - c)
    }
}

/// Next checkpoint strictly after `t` on the `{1, 2, 5} × 10^p` grid.
pub fn next_checkpoint(t: u64) -> u64 {
    let mut scale = 1u64;
    loop {
        for mult in [1u64, 2, 5] {
            let c = mult.saturating_mul(scale);
            if c > t {
                return c;
            }
        }
        scale = scale.saturating_mul(10);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    inputs: u64,
    loss: CompensatedSum,
    regret: CompensatedSum,
    tracks_regret: bool,
    checkpoints: Vec<Checkpoint>,
    next_checkpoint: u64,
    terms: Option<Vec<RegretTerm>>,
}

impl RegretLedger {
    /// `tracks_regret` is set when a comparator `w*` is available;
    /// `record_terms` keeps every per-input term.
    pub fn new(tracks_regret: bool, record_terms: bool) -> Self {
        RegretLedger {
            inputs: 0,
            loss: CompensatedSum::new(),
            regret: CompensatedSum::new(),
            tracks_regret,
            checkpoints: Vec::new(),
            next_checkpoint: 1,
            terms: record_terms.then(Vec::new),
        }
    }

    pub fn record(&mut self, term: RegretTerm) {
        self.inputs += 1;
        self.loss.add(term.loss);
        if let Some(r) = term.regret() {
            self.regret.add(r);
        }
        if let Some(terms) = &mut self.terms {
            terms.push(term);
        }
        if self.inputs == self.next_checkpoint {
            self.push_checkpoint();
            self.next_checkpoint = next_checkpoint(self.inputs);
        }
    }

    fn push_checkpoint(&mut self) {
        let cp = Checkpoint {
            t: self.inputs,
            avg_loss: self.average_loss(),
            regret: self.regret(),
        };
        self.checkpoints.push(cp);
    }

    /// Closes the ledger, adding a final checkpoint at `t = m` if needed.
    pub fn finish(&mut self) {
        if self.inputs > 0 && self.checkpoints.last().map(|c| c.t) != Some(self.inputs) {
            self.push_checkpoint();
        }
    }

    pub fn inputs(&self) -> u64 {
        self.inputs
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.loss.total()
    }

    /// `(1/t) Σ f(w_i, z_i)`.
    pub fn average_loss(&self) -> f64 {
        if self.inputs == 0 {
            0.0
        } else {
            self.loss.total() / self.inputs as f64
        }
    }

    /// `R(t) = Σ f(w_i, z_i) − f(w*, z_i)`, when a comparator is tracked.
    pub fn regret(&self) -> Option<f64> {
        self.tracks_regret.then(|| self.regret.total())
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn terms(&self) -> Option<&[RegretTerm]> {
        self.terms.as_deref()
    }
}
