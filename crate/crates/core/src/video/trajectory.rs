use std::collections::BTreeSet;

use super::params::{GenParams, MAX_START};
use super::FRAME_COUNT;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Top-left (x, y) of the digit box for each of the 48 frames.
    pub positions: Vec<[f64; 2]>,
    /// Frames whose position was produced by a wall reflection.
    pub impact_frames: BTreeSet<usize>,
}

impl Trajectory {
    /// Step `t -> t + 1` is free flight when frame `t + 1` is not an impact.
    pub fn is_free_step(&self, t: usize) -> bool {
        !self.impact_frames.contains(&(t + 1))
    }

    pub fn step_length(&self, t: usize) -> f64 {
        let [x0, y0] = self.positions[t];
        let [x1, y1] = self.positions[t + 1];
        (x1 - x0).hypot(y1 - y0)
    }

    /// Mean displacement over free-flight steps, `None` if there are none.
    pub fn mean_free_step(&self) -> Option<f64> {
        let lengths: Vec<f64> = (0..self.positions.len().saturating_sub(1))
            .filter(|&t| self.is_free_step(t))
            .map(|t| self.step_length(t))
            .collect();
        (!lengths.is_empty()).then(|| lengths.iter().sum::<f64>() / lengths.len() as f64)
    }

    /// Integer top-left pixel used for rendering frame `t`.
    pub fn pixel_position(&self, t: usize) -> (usize, usize) {
        let [x, y] = self.positions[t];
        let snap = |c: f64| c.round().clamp(0.0, MAX_START) as usize;
        (snap(x), snap(y))
    }
}

pub fn velocity(speed: f64, direction: f64) -> [f64; 2] {
    [speed * libm::cos(direction), speed * libm::sin(direction)]
}

pub fn simulate_trajectory(params: &GenParams) -> Trajectory {
    simulate(params.start, velocity(params.speed as f64, params.direction))
}

/// Advances the box one frame at a time. A component leaving [0, 36] is
/// mirrored about the wall it crossed and its velocity sign flips; both
/// components can flip in the same frame at a corner.
pub fn simulate(start: [f64; 2], mut vel: [f64; 2]) -> Trajectory {
    let mut positions = Vec::with_capacity(FRAME_COUNT);
    let mut impact_frames = BTreeSet::new();
    let mut pos = start;
    positions.push(pos);
    for t in 1..FRAME_COUNT {
        let mut hit = false;
        for axis in 0..2 {
            let mut c = pos[axis] + vel[axis];
            if c < 0.0 {
                c = -c;
                vel[axis] = -vel[axis];
                hit = true;
            } else if c > MAX_START {
                c = 2.0 * MAX_START - c;
                vel[axis] = -vel[axis];
                hit = true;
            }
            pos[axis] = c;
        }
        if hit {
            impact_frames.insert(t);
        }
        positions.push(pos);
    }
    Trajectory {
        positions,
        impact_frames,
    }
}
