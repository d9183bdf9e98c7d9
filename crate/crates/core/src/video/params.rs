use rand_core::RngCore;

use super::{VideoError, FRAME_COUNT};
use crate::mnist::DigitPool;

pub const MIN_SPEED: u8 = 1;
pub const MAX_SPEED: u8 = 6;
pub const MIN_BLINK: u8 = 1;
pub const MAX_BLINK: u8 = 12;
/// Straight-line travel between consecutive visible frames, S·V, must stay below this.
pub const MAX_VISIBLE_DISPLACEMENT: u32 = 50;
/// Largest top-left coordinate that keeps the 28×28 box inside the 64×64 frame.
pub const MAX_START: f64 = 36.0;

/// Quadrant orders indexed by order class. Quadrants are numbered row-major:
/// 1 top-left, 2 top-right, 3 bottom-left, 4 bottom-right.
pub const QUADRANT_ORDERS: [[u8; 4]; 6] = [
    [1, 2, 3, 4],
    [1, 2, 4, 3],
    [1, 4, 2, 3],
    [1, 4, 3, 2],
    [1, 3, 2, 4],
    [1, 3, 4, 2],
];

#[inline]
pub fn is_valid_pair(speed: u8, blink: u8) -> bool {
    (MIN_SPEED..=MAX_SPEED).contains(&speed)
        && (MIN_BLINK..=MAX_BLINK).contains(&blink)
        && (speed as u32) * (blink as u32) < MAX_VISIBLE_DISPLACEMENT
}

/// Every admissible (S, V), ordered by S then V.
pub fn valid_pairs() -> Vec<(u8, u8)> {
    (MIN_SPEED..=MAX_SPEED)
        .flat_map(|s| (MIN_BLINK..=MAX_BLINK).map(move |v| (s, v)))
        .filter(|&(s, v)| is_valid_pair(s, v))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub speed: u8,
    pub blink: u8,
    pub order_class: u8,
    /// Radians in [0, 2π).
    pub direction: f64,
    /// Top-left (x, y) of the digit box at frame 0.
    pub start: [f64; 2],
    pub digit_index: usize,
    pub sample_seed: u64,
}

impl GenParams {
    pub fn validate(&self) -> Result<(), VideoError> {
        if !is_valid_pair(self.speed, self.blink) {
            return Err(VideoError::InvalidPair {
                speed: self.speed,
                blink: self.blink,
            });
        }
        if self.order_class as usize >= QUADRANT_ORDERS.len() {
            return Err(VideoError::InvalidOrder(self.order_class));
        }
        if !self.start.iter().all(|c| (0.0..=MAX_START).contains(c)) {
            return Err(VideoError::StartOutOfBounds(self.start));
        }
        Ok(())
    }

    pub fn quadrant_order(&self) -> [u8; 4] {
        QUADRANT_ORDERS[self.order_class as usize]
    }

    pub fn visible_frame_count(&self) -> usize {
        FRAME_COUNT.div_ceil(self.blink as usize)
    }
}

/// Generation switches that apply to a whole dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenOptions {
    pub fixed_speed: Option<u8>,
    pub fixed_blink: Option<u8>,
    /// When false, visible frames show the whole digit instead of one quadrant.
    pub masking: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            fixed_speed: None,
            fixed_blink: None,
            masking: true,
        }
    }
}

impl GenOptions {
    /// The (S, V) pairs this configuration samples from.
    pub fn candidate_pairs(&self) -> Result<Vec<(u8, u8)>, VideoError> {
        if let Some(s) = self.fixed_speed {
            if !(MIN_SPEED..=MAX_SPEED).contains(&s) {
                return Err(VideoError::InvalidOverride(format!(
                    "fixed speed {s} outside {MIN_SPEED}..={MAX_SPEED}"
                )));
            }
        }
        if let Some(v) = self.fixed_blink {
            if !(MIN_BLINK..=MAX_BLINK).contains(&v) {
                return Err(VideoError::InvalidOverride(format!(
                    "fixed blink rate {v} outside {MIN_BLINK}..={MAX_BLINK}"
                )));
            }
        }
        let pairs: Vec<_> = valid_pairs()
            .into_iter()
            .filter(|&(s, v)| {
                self.fixed_speed.is_none_or(|fs| fs == s) && self.fixed_blink.is_none_or(|fv| fv == v)
            })
            .collect();
        if pairs.is_empty() {
            let (s, v) = (self.fixed_speed.unwrap_or(0), self.fixed_blink.unwrap_or(0));
            return Err(VideoError::InvalidOverride(format!(
                "S={s}, V={v}: S*V = {} is not below {MAX_VISIBLE_DISPLACEMENT}",
                s as u32 * v as u32
            )));
        }
        Ok(pairs)
    }
}

/// Uniform integer in `0..n` by rejection, so draws do not depend on any
/// particular distribution implementation.
pub(crate) fn uniform_index<R: RngCore>(rng: &mut R, n: usize) -> usize {
    assert!(n > 0);
    let n = n as u64;
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return (x % n) as usize;
        }
    }
}

/// Uniform real in [0, 1) with 53 bits of precision.
pub(crate) fn uniform_unit<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws one sample's parameters. Draw order is fixed: (S, V) pair, direction,
/// start x, start y, order class, digit index.
pub fn sample_params<R: RngCore>(
    rng: &mut R,
    pool: &DigitPool,
    options: &GenOptions,
    sample_seed: u64,
) -> Result<GenParams, VideoError> {
    if pool.is_empty() {
        return Err(VideoError::EmptyPool);
    }
    let pairs = options.candidate_pairs()?;
    let (speed, blink) = pairs[uniform_index(rng, pairs.len())];
    let direction = uniform_unit(rng) * std::f64::consts::TAU;
    let x = uniform_unit(rng) * MAX_START;
    let y = uniform_unit(rng) * MAX_START;
    let order_class = uniform_index(rng, QUADRANT_ORDERS.len()) as u8;
    let digit_index = uniform_index(rng, pool.len());
    Ok(GenParams {
        speed,
        blink,
        order_class,
        direction,
        start: [x, y],
        digit_index,
        sample_seed,
    })
}
