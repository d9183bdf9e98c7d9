use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use super::arch::ArchSpec;
use super::propagate::propagate_rf;

/// Spatial extent of one visible feature: a digit quadrant.
pub const FEATURE_EXTENT: u64 = 14;
pub const COVERAGE_PREDICATE_VERSION: &str = "center-aligned/v1";

/// Input-space footprint of one inter-visible-frame motion: the digit moves
/// `S·V` pixels over `V` frames. A center-aligned field has to reach the
/// displacement on either side plus the feature itself, and must see both
/// endpoints in time.
pub fn spatial_need(speed: u8, blink: u8) -> u64 {
    2 * speed as u64 * blink as u64 + FEATURE_EXTENT
}

pub fn temporal_need(blink: u8) -> u64 {
    blink as u64 + 1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverageCell {
    Covered {
        layer_index: usize,
        layer_name: String,
        /// Spatial downsampling (stride product) at that layer.
        spatial_factor: u64,
        temporal_factor: u64,
    },
    NotCovered,
}

impl CoverageCell {
    pub fn layer_index(&self) -> Option<usize> {
        match self {
            CoverageCell::Covered { layer_index, .. } => Some(*layer_index),
            CoverageCell::NotCovered => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMap {
    pub arch_name: String,
    pub cells: BTreeMap<(u8, u8), CoverageCell>,
}

impl CoverageMap {
    pub fn get(&self, speed: u8, blink: u8) -> Option<&CoverageCell> {
        self.cells.get(&(speed, blink))
    }
}

/// First layer whose fields contain the (S, V) motion; layers past the point
/// where space collapses are never considered.
pub fn first_coverage(arch: &ArchSpec, speed: u8, blink: u8) -> CoverageCell {
    let need_s = spatial_need(speed, blink);
    let need_t = temporal_need(blink);
    propagate_rf(arch)
        .iter()
        .enumerate()
        .take_while(|(_, l)| l.state.srf_span().is_some())
        .find(|(_, l)| l.state.srf_span().is_some_and(|s| s >= need_s) && l.state.trf.covers(need_t))
        .map(|(i, l)| CoverageCell::Covered {
            layer_index: i,
            layer_name: l.name.clone(),
            spatial_factor: l.state.spatial_jump[0].max(l.state.spatial_jump[1]),
            temporal_factor: l.state.temporal_jump,
        })
        .unwrap_or(CoverageCell::NotCovered)
}

pub fn coverage_map(arch: &ArchSpec, speeds: RangeInclusive<u8>, blinks: RangeInclusive<u8>) -> CoverageMap {
    let cells = speeds
        .flat_map(|s| blinks.clone().map(move |v| (s, v)))
        .map(|(s, v)| ((s, v), first_coverage(arch, s, v)))
        .collect();
    CoverageMap {
        arch_name: arch.name.clone(),
        cells,
    }
}
