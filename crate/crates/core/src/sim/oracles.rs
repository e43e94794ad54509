//! Perception oracles answering from the symbolic payload.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::belief::Detection;
use crate::executive::{PerceptionOracle, TraceStep};
use crate::logic::TruthValue;
use crate::model::GroundAtom;

use super::{ObservationPayload, SimError};

/// Answers exactly what the payload shows; `Unknown` for anything not visible.
#[derive(Debug, Clone, Copy, Default)]
pub struct GroundTruthOracle;

impl PerceptionOracle for GroundTruthOracle {
    fn answer(&mut self, queried: &[GroundAtom], payload: &ObservationPayload) -> BTreeMap<GroundAtom, TruthValue> {
        queried
            .iter()
            .map(|a| (a.clone(), payload.reports.get(a).copied().unwrap_or(TruthValue::Unknown)))
            .collect()
    }

    fn detect(&mut self, payload: &ObservationPayload) -> Vec<Detection> {
        payload.visible.clone()
    }
}

/// Ground truth with independent per-answer corruption: a known answer is
/// flipped with `p_flip`, or withheld with `p_abstain`.
#[derive(Debug, Clone)]
pub struct NoisyOracle {
    p_flip: f64,
    p_abstain: f64,
    rng: ChaCha8Rng,
}

impl NoisyOracle {
    pub fn new(p_flip: f64, p_abstain: f64, seed: u64) -> Result<Self, SimError> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(p_flip) || !ok(p_abstain) || p_flip + p_abstain > 1.0 {
            return Err(SimError::InvalidProbability { p_flip, p_abstain });
        }
        Ok(NoisyOracle {
            p_flip,
            p_abstain,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl PerceptionOracle for NoisyOracle {
    fn answer(&mut self, queried: &[GroundAtom], payload: &ObservationPayload) -> BTreeMap<GroundAtom, TruthValue> {
        let mut out = GroundTruthOracle.answer(queried, payload);
        for v in out.values_mut() {
            if !v.is_known() {
                continue;
            }
            let u: f64 = self.rng.gen();
            if u < self.p_flip {
                *v = !*v;
            } else if u < self.p_flip + self.p_abstain {
                *v = TruthValue::Unknown;
            }
        }
        out
    }

    fn detect(&mut self, payload: &ObservationPayload) -> Vec<Detection> {
        payload.visible.clone()
    }
}

/// Replays the answers recorded in an episode trace, one trace line per
/// call. Detections still come from the payload.
#[derive(Debug, Clone, Default)]
pub struct ReplayOracle {
    answers: Vec<BTreeMap<GroundAtom, TruthValue>>,
    next: usize,
}

impl ReplayOracle {
    pub fn new(answers: Vec<BTreeMap<GroundAtom, TruthValue>>) -> Self {
        ReplayOracle { answers, next: 0 }
    }

    /// Reads a JSONL trace as written by the executive.
    pub fn from_trace(text: &str) -> Result<Self, SimError> {
        let mut answers = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let step: TraceStep = serde_json::from_str(line)?;
            answers.push(step.answers);
        }
        Ok(ReplayOracle::new(answers))
    }
}

impl PerceptionOracle for ReplayOracle {
    fn answer(&mut self, queried: &[GroundAtom], _payload: &ObservationPayload) -> BTreeMap<GroundAtom, TruthValue> {
        let recorded = self.answers.get(self.next);
        self.next += 1;
        queried
            .iter()
            .map(|a| {
                let v = recorded.and_then(|r| r.get(a)).copied().unwrap_or(TruthValue::Unknown);
                (a.clone(), v)
            })
            .collect()
    }

    fn detect(&mut self, payload: &ObservationPayload) -> Vec<Detection> {
        payload.visible.clone()
    }
}
