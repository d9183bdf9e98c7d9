//! Spatial and temporal receptive fields, jumps and output sizes through a
//! layer stack, plus the (S, V) coverage map built on top of them.

mod arch;
mod coverage;
mod propagate;

pub use arch::{parse_arch_spec, preset, ArchError, ArchSpec, Dims3, LayerKind, LayerSpec, PRESET_NAMES};
pub use coverage::{
    coverage_map, first_coverage, spatial_need, temporal_need, CoverageCell, CoverageMap,
    COVERAGE_PREDICATE_VERSION, FEATURE_EXTENT,
};
pub use propagate::{final_state, propagate_layers, propagate_rf, Field, LayerRf, RfState};

/// One printed row, formatted like the architecture tables: SRF as `HxW`
/// (`-` once space is pooled away), TRF as frames with full-sequence fields
/// shown as the input length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RfTableRow {
    pub name: String,
    pub kind: &'static str,
    pub input: String,
    pub output: String,
    pub srf: String,
    pub trf: String,
    pub jump: String,
}

fn size_hwt(d: &Dims3) -> String {
    format!("{}x{}x{}", d.h, d.w, d.t)
}

pub fn rf_table(arch: &ArchSpec) -> Vec<RfTableRow> {
    let seq = arch.input_size.t;
    propagate_rf(arch)
        .into_iter()
        .map(|l| {
            let st = l.state;
            let srf = match st.srf {
                [Field::Span(h), Field::Span(w)] => format!("{h}x{w}"),
                _ => "-".to_string(),
            };
            RfTableRow {
                name: l.name,
                kind: l.kind.as_str(),
                input: size_hwt(&l.input_size),
                output: size_hwt(&st.output_size),
                srf,
                trf: st.trf.resolve(seq).to_string(),
                jump: format!("{}x{}x{}", st.spatial_jump[0], st.spatial_jump[1], st.temporal_jump),
            }
        })
        .collect()
}

pub fn format_rf_table(arch: &ArchSpec) -> String {
    let rows = rf_table(arch);
    let mut out = format!("# {} (input {})\n", arch.name, size_hwt(&arch.input_size));
    out.push_str(&format!(
        "{:<10} {:<13} {:>10} {:>10} {:>9} {:>5} {:>9}\n",
        "layer", "kind", "input", "output", "srf", "trf", "jump"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:<13} {:>10} {:>10} {:>9} {:>5} {:>9}\n",
            r.name, r.kind, r.input, r.output, r.srf, r.trf, r.jump
        ));
    }
    out
}

/// Coverage grid as text: one row per S, one column per V, each cell the
/// first covering layer name, `-` when nothing covers it, blank when `S·V`
/// is not below 50.
pub fn format_coverage(map: &CoverageMap) -> String {
    let speeds: Vec<u8> = map.cells.keys().map(|k| k.0).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let blinks: Vec<u8> = map.cells.keys().map(|k| k.1).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut out = format!(
        "# coverage {} predicate={} need_s=2*S*V+{} need_t=V+1\n",
        map.arch_name, COVERAGE_PREDICATE_VERSION, FEATURE_EXTENT
    );
    out.push_str("S\\V");
    for v in &blinks {
        out.push_str(&format!(" {v:>7}"));
    }
    out.push('\n');
    for s in &speeds {
        out.push_str(&format!("{s:<3}"));
        for v in &blinks {
            let cell = if (*s as u32) * (*v as u32) >= 50 {
                String::new()
            } else {
                match map.get(*s, *v) {
                    Some(CoverageCell::Covered { layer_name, .. }) => layer_name.clone(),
                    _ => "-".to_string(),
                }
            };
            out.push_str(&format!(" {cell:>7}"));
        }
        out.push('\n');
    }
    out
}
