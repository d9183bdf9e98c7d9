use super::params::QUADRANT_ORDERS;
use super::FRAME_COUNT;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilitySchedule {
    pub visible_frames: Vec<usize>,
    /// Quadrant id (1..=4) shown on each visible frame, parallel to `visible_frames`.
    pub quadrant_at: Vec<u8>,
}

impl VisibilitySchedule {
    pub fn is_visible(&self, frame: usize) -> bool {
        self.visible_frames.binary_search(&frame).is_ok()
    }

    pub fn quadrant_for_frame(&self, frame: usize) -> Option<u8> {
        self.visible_frames
            .binary_search(&frame)
            .ok()
            .map(|k| self.quadrant_at[k])
    }
}

/// Frames `0, V, 2V, ...` below 48 are visible; the k-th visible frame shows
/// quadrant `order[k mod 4]`. Blink phase is pinned to frame 0.
pub fn visibility_schedule(blink: u8, order_class: u8) -> VisibilitySchedule {
    assert!(blink >= 1, "blink rate must be positive");
    let order = QUADRANT_ORDERS[order_class as usize];
    let visible_frames: Vec<usize> = (0..FRAME_COUNT).step_by(blink as usize).collect();
    let quadrant_at = (0..visible_frames.len()).map(|k| order[k % 4]).collect();
    VisibilitySchedule {
        visible_frames,
        quadrant_at,
    }
}
