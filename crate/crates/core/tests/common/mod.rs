#![allow(dead_code)]

use stmnist::mnist::{build_pool, DigitPixels, DigitPool, DIGIT_PIXELS, DIGIT_SIDE};
use stmnist::video::{mix64, quadrant_origin, LabeledVideo, FRAME_COUNT, FRAME_PIXELS, FRAME_SIDE};

/// Deterministic stand-in digits: sparse ink, with the top-left pixel of
/// every quadrant always inked so the shown quadrant can be read off a frame.
pub fn synthetic_images(per_class: usize) -> (Vec<DigitPixels>, Vec<u8>) {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for k in 0..per_class {
        for class in 0..10u8 {
            let mut px = [0u8; DIGIT_PIXELS];
            for (i, p) in px.iter_mut().enumerate() {
                let h = mix64(((class as u64) << 40) ^ ((k as u64) << 20) ^ i as u64);
                if h % 3 == 0 {
                    *p = (h >> 8) as u8 | 1;
                }
            }
            for q in 1..=4 {
                let (r, c) = quadrant_origin(q);
                px[r * DIGIT_SIDE + c] = 255;
            }
            images.push(px);
            labels.push(class);
        }
    }
    (images, labels)
}

pub fn synthetic_pool(per_class: usize) -> DigitPool {
    let (images, labels) = synthetic_images(per_class);
    build_pool(images, labels).unwrap()
}

/// Frame indices holding any ink.
pub fn inked_frames(v: &LabeledVideo) -> Vec<usize> {
    (0..FRAME_COUNT).filter(|&t| v.frame(t).iter().any(|&p| p != 0)).collect()
}

/// Bounding box (min_row, min_col, max_row, max_col) of ink in frame `t`.
pub fn ink_bbox(v: &LabeledVideo, t: usize) -> Option<(usize, usize, usize, usize)> {
    let frame = v.frame(t);
    let mut bbox: Option<(usize, usize, usize, usize)> = None;
    for i in (0..FRAME_PIXELS).filter(|&i| frame[i] != 0) {
        let (r, c) = (i / FRAME_SIDE, i % FRAME_SIDE);
        bbox = Some(match bbox {
            None => (r, c, r, c),
            Some((r0, c0, r1, c1)) => (r0.min(r), c0.min(c), r1.max(r), c1.max(c)),
        });
    }
    bbox
}

/// The quadrant shown at frame `t`, read from where the ink starts relative
/// to the box position. Requires digits from [`synthetic_images`].
pub fn observed_quadrant(v: &LabeledVideo, t: usize) -> Option<u8> {
    let (r0, c0, _, _) = ink_bbox(v, t)?;
    let (x, y) = v.trajectory.pixel_position(t);
    let dr = r0.checked_sub(y)?;
    let dc = c0.checked_sub(x)?;
    (1..=4).find(|&q| quadrant_origin(q) == (dr, dc))
}
pub mod tables;
