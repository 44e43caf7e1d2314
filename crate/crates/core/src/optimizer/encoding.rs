//! Fixed-width encoding of pipeline configurations.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{Pipeline, PipelineStep};
use crate::pool::ComponentSpec;

/// Slots `0..SLOTS` hold the component chosen at each template position
/// (0 = absent, `k + 1` = k-th candidate); then one slot per pool component
/// holds its grid index, kept at 0 while the component is not chosen.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigEncoding(pub Vec<u16>);

pub const SLOTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("encoding has {found} slots, expected {expected}")]
    Width { expected: usize, found: usize },
    #[error("slot {slot} holds {value}, which names no candidate")]
    NoSuchChoice { slot: usize, value: u16 },
    #[error("no predictor chosen")]
    NoPredictor,
}

#[derive(Debug, Clone)]
pub struct ConfigSpace {
    pool: Vec<ComponentSpec>,
    /// Pool indices of the candidates per template position.
    slots: Vec<Vec<usize>>,
}

impl ConfigSpace {
    pub fn new(pool: &[ComponentSpec]) -> Self {
        let mut slots = vec![Vec::new(); SLOTS];
        for (i, c) in pool.iter().enumerate() {
            slots[c.kind.template_position()].push(i);
        }
        ConfigSpace { pool: pool.to_vec(), slots }
    }

    pub fn width(&self) -> usize {
        SLOTS + self.pool.len()
    }

    pub fn has_predictor(&self) -> bool {
        !self.slots[SLOTS - 1].is_empty()
    }

    /// Every slot drawn uniformly; the predictor slot is never absent.
    pub fn sample(&self, rng: &mut impl Rng) -> ConfigEncoding {
        let mut e = vec![0u16; self.width()];
        for (s, candidates) in self.slots.iter().enumerate() {
            let predictor = s == SLOTS - 1;
            let choices = candidates.len() + usize::from(!predictor);
            if choices == 0 {
                continue;
            }
            let pick = rng.gen_range(0..choices);
            if predictor {
                e[s] = pick as u16 + 1;
            } else {
                e[s] = pick as u16;
            }
            if e[s] > 0 {
                let component = candidates[e[s] as usize - 1];
                e[SLOTS + component] = rng.gen_range(0..self.pool[component].hyperparams.len().max(1)) as u16;
            }
        }
        ConfigEncoding(e)
    }

    pub fn decode(&self, e: &ConfigEncoding) -> Result<Pipeline, DecodeError> {
        if e.0.len() != self.width() {
            return Err(DecodeError::Width { expected: self.width(), found: e.0.len() });
        }
        let mut steps = Vec::new();
        for (s, candidates) in self.slots.iter().enumerate() {
            let v = e.0[s];
            if v == 0 {
                if s == SLOTS - 1 {
                    return Err(DecodeError::NoPredictor);
                }
                continue;
            }
            let &component = candidates.get(v as usize - 1).ok_or(DecodeError::NoSuchChoice { slot: s, value: v })?;
            let spec = &self.pool[component];
            let g = e.0[SLOTS + component];
            let setting = spec
                .hyperparams
                .get(g as usize)
                .cloned()
                .ok_or(DecodeError::NoSuchChoice { slot: SLOTS + component, value: g })?;
            steps.push(PipelineStep { component: spec.clone(), setting });
        }
        Ok(Pipeline::new(steps).expect("one component per template position, predictor last"))
    }

    /// The encoding of a pipeline over this pool, if it has one.
    pub fn encode(&self, p: &Pipeline) -> Option<ConfigEncoding> {
        let mut e = vec![0u16; self.width()];
        for step in p.steps() {
            let s = step.component.kind.template_position();
            let k = self.slots[s].iter().position(|&i| self.pool[i].id == step.component.id)?;
            let component = self.slots[s][k];
            e[s] = k as u16 + 1;
            e[SLOTS + component] = self.pool[component].hyperparams.iter().position(|h| *h == step.setting)? as u16;
        }
        Some(ConfigEncoding(e))
    }

    pub fn n_features(&self) -> usize {
        self.slots.iter().map(|c| c.len() + 1).sum::<usize>() + self.pool.iter().map(|c| c.hyperparams.len()).sum::<usize>()
    }

    /// One-hot over the slot choices and over the grid index of chosen components.
    pub fn features(&self, e: &ConfigEncoding) -> Vec<f64> {
        let mut x = vec![0.0; self.n_features()];
        let mut offset = 0;
        for (s, candidates) in self.slots.iter().enumerate() {
            x[offset + e.0[s] as usize] = 1.0;
            offset += candidates.len() + 1;
        }
        for (i, spec) in self.pool.iter().enumerate() {
            let s = spec.kind.template_position();
            let chosen = e.0[s] > 0 && self.slots[s][e.0[s] as usize - 1] == i;
            if chosen {
                x[offset + e.0[SLOTS + i] as usize] = 1.0;
            }
            offset += spec.hyperparams.len();
        }
        x
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::pool_roster;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_decode_and_re_encode() {
        let space = ConfigSpace::new(&pool_roster());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let e = space.sample(&mut rng);
            let p = space.decode(&e).unwrap();
            assert_eq!(space.encode(&p), Some(e.clone()));
            let x = space.features(&e);
            assert_eq!(x.iter().sum::<f64>() as usize, SLOTS + p.len());
        }
    }

    #[test]
    fn impossible_encodings_are_reported() {
        let space = ConfigSpace::new(&pool_roster());
        assert!(matches!(space.decode(&ConfigEncoding(vec![0; 3])), Err(DecodeError::Width { .. })));
        assert_eq!(space.decode(&ConfigEncoding(vec![0; space.width()])), Err(DecodeError::NoPredictor));
        let mut e = vec![0; space.width()];
        e[0] = 99;
        e[SLOTS - 1] = 1;
        assert!(matches!(space.decode(&ConfigEncoding(e)), Err(DecodeError::NoSuchChoice { slot: 0, .. })));
    }
}
