use super::schedule::VisibilitySchedule;
use super::trajectory::Trajectory;
use super::{FRAME_COUNT, FRAME_PIXELS, FRAME_SIDE};
use crate::mnist::{DigitImage, DIGIT_SIDE};

pub const QUADRANT_SIDE: usize = DIGIT_SIDE / 2;

/// (row, col) offset of a quadrant inside the 28×28 digit.
pub fn quadrant_origin(quadrant: u8) -> (usize, usize) {
    match quadrant {
        1 => (0, 0),
        2 => (0, QUADRANT_SIDE),
        3 => (QUADRANT_SIDE, 0),
        4 => (QUADRANT_SIDE, QUADRANT_SIDE),
        q => panic!("quadrant id {q} outside 1..=4"),
    }
}

/// Renders the 48×64×64 video (frame-major, then row, then column). Visible
/// frames receive one quadrant, or the whole digit when `masking` is off,
/// placed at the rounded trajectory position. Everything else is zero.
pub fn render(digit: &DigitImage, traj: &Trajectory, sched: &VisibilitySchedule, masking: bool) -> Vec<u8> {
    let mut frames = vec![0u8; FRAME_COUNT * FRAME_PIXELS];
    for (&t, &quadrant) in sched.visible_frames.iter().zip(&sched.quadrant_at) {
        let (x0, y0) = traj.pixel_position(t);
        let (r0, c0, side_r, side_c) = if masking {
            let (r, c) = quadrant_origin(quadrant);
            (r, c, QUADRANT_SIDE, QUADRANT_SIDE)
        } else {
            (0, 0, DIGIT_SIDE, DIGIT_SIDE)
        };
        let frame = &mut frames[t * FRAME_PIXELS..(t + 1) * FRAME_PIXELS];
        for r in r0..r0 + side_r {
            let row = (y0 + r) * FRAME_SIDE;
            for c in c0..c0 + side_c {
                frame[row + x0 + c] = digit.at(r, c);
            }
        }
    }
    frames
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnist::DIGIT_PIXELS;
    use crate::video::schedule::visibility_schedule;
    use crate::video::trajectory::{simulate, velocity};

    fn digit(f: impl Fn(usize, usize) -> u8) -> DigitImage {
        let mut px = [0u8; DIGIT_PIXELS];
        for r in 0..DIGIT_SIDE {
            for c in 0..DIGIT_SIDE {
                px[r * DIGIT_SIDE + c] = f(r, c);
            }
        }
        DigitImage {
            pixels: Box::new(px),
            class_label: 0,
        }
    }

    fn nonzero(frames: &[u8]) -> usize {
        frames.iter().filter(|&&p| p != 0).count()
    }

    #[test]
    fn zero_digit_zero_video() {
        let d = digit(|_, _| 0);
        let tr = simulate([3.0, 4.0], velocity(2.0, 0.4));
        let v = render(&d, &tr, &visibility_schedule(1, 0), true);
        assert_eq!(v.len(), 48 * 64 * 64);
        assert!(v.iter().all(|&p| p == 0));
    }

    #[test]
    fn pixel_count_matches_schedule() {
        // Nonzero pixels only in quadrants 1 and 4, with distinct counts.
        let d = digit(|r, c| match (r < 14, c < 14) {
            (true, true) if (r + c) % 2 == 0 => 200,
            (false, false) if r % 3 == 0 => 90,
            _ => 0,
        });
        let per_quadrant = |q: u8| -> usize {
            let (r0, c0) = quadrant_origin(q);
            (r0..r0 + 14)
                .flat_map(|r| (c0..c0 + 14).map(move |c| (r, c)))
                .filter(|&(r, c)| d.at(r, c) != 0)
                .count()
        };
        let tr = simulate([10.0, 10.0], velocity(3.0, 2.1));
        for v in [1u8, 2, 3, 4, 6, 8, 12] {
            for order in 0..6u8 {
                let s = visibility_schedule(v, order);
                let expected: usize = s.quadrant_at.iter().map(|&q| per_quadrant(q)).sum();
                assert_eq!(nonzero(&render(&d, &tr, &s, true)), expected);
            }
        }
    }

    #[test]
    fn unmasked_shows_full_digit() {
        let d = digit(|_, _| 1);
        let tr = simulate([36.0, 0.0], velocity(1.0, 1.0));
        let s = visibility_schedule(4, 2);
        let v = render(&d, &tr, &s, false);
        for t in 0..48 {
            let n = nonzero(&v[t * FRAME_PIXELS..(t + 1) * FRAME_PIXELS]);
            assert_eq!(n, if t % 4 == 0 { 784 } else { 0 });
        }
    }

    #[test]
    fn quadrant_lands_at_rounded_position() {
        let d = digit(|r, c| (r * 28 + c) as u8 | 1);
        let tr = simulate([7.4, 12.6], [0.0, 0.0]);
        let s = visibility_schedule(12, 0);
        let v = render(&d, &tr, &s, true);
        // frame 12 shows quadrant 2 (top-right) with box at (x=7, y=13).
        let frame = &v[12 * FRAME_PIXELS..13 * FRAME_PIXELS];
        assert_eq!(frame[13 * 64 + 7 + 14], d.at(0, 14));
        assert_eq!(frame[(13 + 13) * 64 + 7 + 27], d.at(13, 27));
        assert_eq!(frame[13 * 64 + 7], 0);
        assert_eq!(nonzero(frame), 14 * 14);
    }
}
