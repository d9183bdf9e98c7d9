use std::cmp::Ordering;
use std::fmt;

use super::arch::{ArchSpec, Dims3, LayerKind, LayerSpec};

/// A receptive-field extent in input coordinates. `Full` spans the whole
/// input along that axis (recurrent state in time, global pooling in space).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Span(u64),
    Full,
}

impl Field {
    pub fn covers(self, extent: u64) -> bool {
        match self {
            Field::Span(n) => n >= extent,
            Field::Full => true,
        }
    }

    pub fn span(self) -> Option<u64> {
        match self {
            Field::Span(n) => Some(n),
            Field::Full => None,
        }
    }

    /// Extent with `Full` resolved to the input length.
    pub fn resolve(self, full: u64) -> u64 {
        self.span().unwrap_or(full)
    }

    fn grow(self, kernel: u64, jump: u64) -> Field {
        match self {
            Field::Span(n) => Field::Span(n + (kernel - 1) * jump),
            Field::Full => Field::Full,
        }
    }
}

impl PartialOrd for Field {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Field {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Field::Span(a), Field::Span(b)) => a.cmp(b),
            (Field::Span(_), Field::Full) => Ordering::Less,
            (Field::Full, Field::Span(_)) => Ordering::Greater,
            (Field::Full, Field::Full) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Span(n) => write!(f, "{n}"),
            Field::Full => f.write_str("full"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RfState {
    pub srf: [Field; 2],
    pub trf: Field,
    pub spatial_jump: [u64; 2],
    pub temporal_jump: u64,
    pub output_size: Dims3,
}

impl RfState {
    pub fn input(size: Dims3) -> Self {
        RfState {
            srf: [Field::Span(1); 2],
            trf: Field::Span(1),
            spatial_jump: [1, 1],
            temporal_jump: 1,
            output_size: size,
        }
    }

    /// Smaller of the two spatial extents, `None` once space has collapsed.
    pub fn srf_span(&self) -> Option<u64> {
        Some(self.srf[0].span()?.min(self.srf[1].span()?))
    }

    pub fn apply(&self, layer: &LayerSpec) -> RfState {
        let k = layer.kernel;
        let s = layer.stride;
        let out = &self.output_size;
        match layer.kind {
            LayerKind::Conv | LayerKind::Recurrent => {
                // Receptive field grows with the jump *before* this layer's stride.
                let srf = [
                    self.srf[0].grow(k.h, self.spatial_jump[0]),
                    self.srf[1].grow(k.w, self.spatial_jump[1]),
                ];
                let (trf, t_stride) = if layer.kind == LayerKind::Recurrent {
                    (Field::Full, 1)
                } else {
                    (self.trf.grow(k.t, self.temporal_jump), s.t)
                };
                RfState {
                    srf,
                    trf,
                    spatial_jump: [self.spatial_jump[0] * s.h, self.spatial_jump[1] * s.w],
                    temporal_jump: self.temporal_jump * t_stride,
                    output_size: Dims3::new(out.h.div_ceil(s.h), out.w.div_ceil(s.w), out.t.div_ceil(t_stride)),
                }
            }
            LayerKind::SpatialPool => RfState {
                srf: [Field::Full; 2],
                output_size: Dims3::new(1, 1, out.t),
                ..*self
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerRf {
    pub name: String,
    pub kind: LayerKind,
    pub input_size: Dims3,
    pub state: RfState,
}

/// Runs the receptive-field recurrence over `layers` starting from an input
/// of `input_size`. Residual blocks are represented by their specialized
/// convolution alone.
pub fn propagate_layers(input_size: Dims3, layers: &[LayerSpec]) -> Vec<LayerRf> {
    let mut state = RfState::input(input_size);
    layers
        .iter()
        .map(|layer| {
            let input_size = state.output_size;
            state = state.apply(layer);
            LayerRf {
                name: layer.name.clone(),
                kind: layer.kind,
                input_size,
                state,
            }
        })
        .collect()
}

pub fn propagate_rf(arch: &ArchSpec) -> Vec<LayerRf> {
    propagate_layers(arch.input_size, &arch.layers)
}

/// State after the last layer, or the input state for an empty stack.
pub fn final_state(input_size: Dims3, layers: &[LayerSpec]) -> RfState {
    propagate_layers(input_size, layers)
        .last()
        .map(|l| l.state)
        .unwrap_or_else(|| RfState::input(input_size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf::arch::preset;

    #[test]
    fn empty_stack_is_identity() {
        let s = final_state(Dims3::new(64, 64, 48), &[]);
        assert_eq!(s.srf, [Field::Span(1); 2]);
        assert_eq!(s.trf, Field::Span(1));
        assert_eq!(s.output_size, Dims3::new(64, 64, 48));
    }

    #[test]
    fn field_order_puts_full_last() {
        assert!(Field::Span(1_000_000) < Field::Full);
        assert!(Field::Span(2) > Field::Span(1));
    }

    #[test]
    fn hand_computed_stack() {
        // k=5 s=1, then k=3 s=2, then k=3 s=1 on a 1D-ish axis:
        // rf: 1 -> 5 -> 7 -> 11, jump: 1 -> 1 -> 2 -> 2
        let layer = |k, s| LayerSpec {
            name: "l".into(),
            kind: LayerKind::Conv,
            kernel: Dims3::new(k, k, k),
            stride: Dims3::new(s, s, s),
            channels: vec![],
        };
        let out = propagate_layers(Dims3::new(20, 20, 20), &[layer(5, 1), layer(3, 2), layer(3, 1)]);
        let rfs: Vec<_> = out.iter().map(|l| l.state.srf[0]).collect();
        assert_eq!(rfs, [Field::Span(5), Field::Span(7), Field::Span(11)]);
        assert_eq!(out[2].state.spatial_jump, [2, 2]);
        assert_eq!(out[2].state.trf, Field::Span(11));
        assert_eq!(out[2].state.output_size, Dims3::new(10, 10, 10));
    }

    #[test]
    fn pool_collapses_space_and_recurrence_fills_time() {
        let a = preset("conv2d").unwrap();
        let out = propagate_rf(&a);
        let pool = &out[8].state;
        assert_eq!(pool.srf, [Field::Full; 2]);
        assert_eq!(pool.output_size, Dims3::new(1, 1, 48));
        assert_eq!(out[9].state.trf, Field::Full);
        assert_eq!(out[9].state.srf, [Field::Full; 2]);
    }
}
