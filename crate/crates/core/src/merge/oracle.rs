use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MergeError;

/// Source of the choices a merger generator makes at decision points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecisionOracle {
    /// Always the first candidate (lowest sort key).
    FirstWins,
    /// Uniform choice from a seeded generator.
    SeededRandom(u64),
    /// One zero-based choice per decision point, in order.
    Scripted(Vec<usize>),
}

impl Default for DecisionOracle {
    fn default() -> Self {
        DecisionOracle::FirstWins
    }
}

/// Running state of an oracle during one generation call.
pub(crate) struct Decider {
    oracle: DecisionOracle,
    rng: Option<ChaCha8Rng>,
    made: usize,
    /// Exploration mode: follow the script, then choose 0; never fail.
    padded: bool,
    pub choices: Vec<usize>,
    pub arities: Vec<usize>,
}

impl Decider {
    pub fn new(oracle: &DecisionOracle) -> Self {
        let rng = match oracle {
            DecisionOracle::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        Decider { oracle: oracle.clone(), rng, made: 0, padded: false, choices: Vec::new(), arities: Vec::new() }
    }

    pub fn exploring(prefix: Vec<usize>) -> Self {
        Decider { padded: true, ..Decider::new(&DecisionOracle::Scripted(prefix)) }
    }

    pub fn made(&self) -> usize {
        self.made
    }

    pub fn choose(&mut self, candidates: usize) -> Result<usize, MergeError> {
        debug_assert!(candidates > 0);
        let choice = self.pick(candidates)?;
        self.made += 1;
        self.choices.push(choice);
        self.arities.push(candidates);
        Ok(choice)
    }

    fn pick(&mut self, candidates: usize) -> Result<usize, MergeError> {
        let decision = self.made;
        if self.padded {
            let DecisionOracle::Scripted(prefix) = &self.oracle else { unreachable!() };
            return Ok(prefix.get(decision).copied().unwrap_or(0).min(candidates - 1));
        }
        match &self.oracle {
            DecisionOracle::FirstWins => Ok(0),
            DecisionOracle::SeededRandom(_) => Ok(self.rng.as_mut().expect("seeded").gen_range(0..candidates)),
            DecisionOracle::Scripted(choices) => {
                let &choice = choices.get(decision).ok_or(MergeError::ScriptExhausted { decision })?;
                if choice >= candidates {
                    return Err(MergeError::ScriptOutOfRange { decision, choice, candidates });
                }
                Ok(choice)
            }
        }
    }

    pub fn finish(self) -> Result<(), MergeError> {
        match &self.oracle {
            DecisionOracle::Scripted(choices) if !self.padded && choices.len() > self.made => {
                Err(MergeError::ScriptTooLong { used: self.made, supplied: choices.len() })
            }
            _ => Ok(()),
        }
    }
}
