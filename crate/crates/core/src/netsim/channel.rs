use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{ChannelConfig, LossModel};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelOutcome {
    Delivered { at: SimTime },
    Dropped,
}

/// One direction of a FIFO loss/delay link. Drop decisions draw only from
/// this channel's RNG.
#[derive(Debug, Clone)]
pub struct Channel {
    model: LossModel,
    delay: SimTime,
    rng: ChaCha8Rng,
    bad: bool,
    index: u64,
}

impl Channel {
    pub fn new(cfg: &ChannelConfig) -> Self {
        Channel {
            model: cfg.model.clone(),
            delay: SimTime::from_secs_f64(cfg.one_way_delay),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            bad: false,
            index: 0,
        }
    }

    pub fn delay(&self) -> SimTime {
        self.delay
    }

    /// Packets offered so far.
    pub fn offered(&self) -> u64 {
        self.index
    }

    pub fn transmit(&mut self, now: SimTime) -> ChannelOutcome {
        let index = self.index;
        self.index += 1;
        let drop = match &self.model {
            LossModel::Bernoulli { p } => self.rng.random::<f64>() < *p,
            LossModel::GilbertElliott {
                p_gb,
                p_bg,
                loss_good,
                loss_bad,
            } => {
                let flip = if self.bad { *p_bg } else { *p_gb };
                if self.rng.random::<f64>() < flip {
                    self.bad = !self.bad;
                }
                let loss = if self.bad { *loss_bad } else { *loss_good };
                self.rng.random::<f64>() < loss
            }
            LossModel::Scripted { drops } => drops.contains(&index),
        };
        if drop {
            ChannelOutcome::Dropped
        } else {
            ChannelOutcome::Delivered { at: now + self.delay }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn chan(model: LossModel) -> Channel {
        Channel::new(&ChannelConfig {
            model,
            one_way_delay: 0.05,
            seed: 7,
        })
    }

    #[test]
    fn extremes() {
        let mut c = chan(LossModel::Bernoulli { p: 0.0 });
        for _ in 0..1000 {
            assert_eq!(
                c.transmit(SimTime::from_millis(1)),
                ChannelOutcome::Delivered {
                    at: SimTime::from_millis(51)
                }
            );
        }
        let mut c = chan(LossModel::Bernoulli { p: 1.0 });
        assert!((0..1000).all(|_| c.transmit(SimTime::ZERO) == ChannelOutcome::Dropped));
    }

    #[test]
    fn scripted_drops_by_index() {
        let mut c = chan(LossModel::Scripted { drops: vec![1, 3] });
        let out: alloc::vec::Vec<bool> = (0..5)
            .map(|_| c.transmit(SimTime::ZERO) == ChannelOutcome::Dropped)
            .collect();
        assert_eq!(out, [false, true, false, true, false]);
    }

    #[test]
    fn same_seed_same_decisions() {
        let mut a = chan(LossModel::Bernoulli { p: 0.3 });
        let mut b = chan(LossModel::Bernoulli { p: 0.3 });
        for _ in 0..500 {
            assert_eq!(a.transmit(SimTime::ZERO), b.transmit(SimTime::ZERO));
        }
    }
}
