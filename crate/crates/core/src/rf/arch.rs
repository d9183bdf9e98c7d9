use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims3 {
    pub h: u64,
    pub w: u64,
    pub t: u64,
}

impl Dims3 {
    pub const ONE: Dims3 = Dims3 { h: 1, w: 1, t: 1 };

    pub const fn new(h: u64, w: u64, t: u64) -> Self {
        Dims3 { h, w, t }
    }

    fn parse(s: &str) -> Option<Self> {
        let parts: Vec<u64> = s.split('x').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
        match parts[..] {
            [h, w, t] => Some(Dims3 { h, w, t }),
            _ => None,
        }
    }

    fn any_zero(&self) -> bool {
        self.h == 0 || self.w == 0 || self.t == 0
    }
}

impl fmt::Display for Dims3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.h, self.w, self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv,
    /// Convolutional recurrence; the state carries the whole sequence so the
    /// temporal kernel is ignored.
    Recurrent,
    /// Global spatial pooling down to 1×1.
    SpatialPool,
}

impl LayerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Conv => "conv",
            LayerKind::Recurrent => "recurrent",
            LayerKind::SpatialPool => "spatial_pool",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub kernel: Dims3,
    pub stride: Dims3,
    /// (in, mid, out) for residual blocks, (in, out) for plain layers. Informational.
    pub channels: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchSpec {
    pub name: String,
    pub input_size: Dims3,
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArchError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: stride components must be at least 1 ({layer})")]
    InvalidStride { line: usize, layer: String },
    #[error("architecture has no layers")]
    EmptyArch,
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

impl ArchSpec {
    /// Renders the layer-per-line text form accepted by [`parse_arch_spec`].
    pub fn to_text(&self) -> String {
        let mut out = format!("arch {}\ninput {}\n", self.name, self.input_size);
        for l in &self.layers {
            out.push_str(&format!(
                "{} {} kernel={} stride={}",
                l.name,
                l.kind.as_str(),
                l.kernel,
                l.stride
            ));
            if !l.channels.is_empty() {
                let ch: Vec<String> = l.channels.iter().map(u64::to_string).collect();
                out.push_str(&format!(" channels={}", ch.join(",")));
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the arch text format:
///
/// ```text
/// # comment
/// arch <name>                      optional, default "custom"
/// input <h>x<w>x<t>                optional, default 64x64x48
/// <layer> <conv|recurrent|spatial_pool> [kernel=HxWxT] [stride=HxWxT] [channels=a,b,...]
/// ```
///
/// Kernel and stride default to 1x1x1. Recurrent layers may not stride in time.
pub fn parse_arch_spec(text: &str) -> Result<ArchSpec, ArchError> {
    let mut name = "custom".to_string();
    let mut input_size = Dims3::new(64, 64, 48);
    let mut layers = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let perr = |message: String| ArchError::ParseError { line, message };
        let mut tokens = content.split_whitespace();
        let head = tokens.next().unwrap();
        match head {
            "arch" => {
                name = tokens.next().ok_or_else(|| perr("arch needs a name".into()))?.to_string();
            }
            "input" => {
                let dims = tokens.next().ok_or_else(|| perr("input needs HxWxT".into()))?;
                input_size = Dims3::parse(dims)
                    .filter(|d| !d.any_zero())
                    .ok_or_else(|| perr(format!("bad input size {dims:?}")))?;
            }
            layer_name => {
                let kind = match tokens.next() {
                    Some("conv") => LayerKind::Conv,
                    Some("recurrent") => LayerKind::Recurrent,
                    Some("spatial_pool") => LayerKind::SpatialPool,
                    Some(other) => return Err(perr(format!("unknown layer kind {other:?}"))),
                    None => return Err(perr(format!("layer {layer_name:?} is missing its kind"))),
                };
                let mut kernel = Dims3::ONE;
                let mut stride = Dims3::ONE;
                let mut channels = Vec::new();
                for tok in tokens {
                    let (key, value) = tok
                        .split_once('=')
                        .ok_or_else(|| perr(format!("expected key=value, found {tok:?}")))?;
                    match key {
                        "kernel" => {
                            kernel = Dims3::parse(value)
                                .filter(|d| !d.any_zero())
                                .ok_or_else(|| perr(format!("bad kernel {value:?}")))?;
                        }
                        "stride" => {
                            stride = Dims3::parse(value).ok_or_else(|| perr(format!("bad stride {value:?}")))?;
                            if stride.any_zero() {
                                return Err(ArchError::InvalidStride {
                                    line,
                                    layer: layer_name.to_string(),
                                });
                            }
                        }
                        "channels" => {
                            channels = value
                                .split(',')
                                .map(|c| c.trim().parse::<u64>())
                                .collect::<Result<_, _>>()
                                .map_err(|_| perr(format!("bad channels {value:?}")))?;
                        }
                        other => return Err(perr(format!("unknown field {other:?}"))),
                    }
                }
                if kind == LayerKind::Recurrent && stride.t != 1 {
                    return Err(ArchError::InvalidStride {
                        line,
                        layer: layer_name.to_string(),
                    });
                }
                layers.push(LayerSpec {
                    name: layer_name.to_string(),
                    kind,
                    kernel,
                    stride,
                    channels,
                });
            }
        }
    }
    if layers.is_empty() {
        return Err(ArchError::EmptyArch);
    }
    Ok(ArchSpec {
        name,
        input_size,
        layers,
    })
}

pub const PRESET_NAMES: [&str; 8] = [
    "conv2d",
    "conv2d-xl",
    "conv3d",
    "conv3d-xl",
    "ts-conv3d",
    "ts-conv3d-xl",
    "convlstm",
    "convlstm-xl",
];

const BLOCK_NAMES: [&str; 8] = [
    "Res1_1", "Res2_1", "Res3_1", "Res3_2", "Res4_1", "Res4_2", "Res4_3", "Res4_4",
];
const BLOCK_DOWNSAMPLES: [bool; 8] = [true, true, true, false, true, false, false, false];

const CH_BASE: [[u64; 3]; 8] = [
    [1, 16, 64],
    [64, 16, 64],
    [64, 16, 64],
    [64, 16, 64],
    [64, 32, 128],
    [128, 32, 128],
    [128, 32, 128],
    [128, 32, 128],
];
const CH_XL: [[u64; 3]; 8] = [
    [1, 36, 72],
    [72, 36, 72],
    [72, 36, 72],
    [72, 36, 72],
    [72, 72, 144],
    [144, 72, 144],
    [144, 72, 144],
    [144, 72, 144],
];

#[derive(Clone, Copy)]
enum Family {
    Conv2d,
    Conv3d,
    TsConv3d,
    ConvLstm,
}

fn build_preset(name: &str, family: Family, channels: &[[u64; 3]; 8]) -> ArchSpec {
    let (kind, kernel) = match family {
        Family::Conv2d => (LayerKind::Conv, Dims3::new(3, 3, 1)),
        Family::Conv3d | Family::TsConv3d => (LayerKind::Conv, Dims3::new(3, 3, 3)),
        Family::ConvLstm => (LayerKind::Recurrent, Dims3::new(3, 3, 1)),
    };
    let mut layers: Vec<LayerSpec> = BLOCK_NAMES
        .iter()
        .zip(BLOCK_DOWNSAMPLES)
        .zip(channels)
        .map(|((&block, down), ch)| {
            let s = if down { 2 } else { 1 };
            let st = if down && matches!(family, Family::TsConv3d) { 2 } else { 1 };
            LayerSpec {
                name: block.to_string(),
                kind,
                kernel,
                stride: Dims3::new(s, s, st),
                channels: ch.to_vec(),
            }
        })
        .collect();
    let width = channels[7][2];
    layers.push(LayerSpec {
        name: "Pool".into(),
        kind: LayerKind::SpatialPool,
        kernel: Dims3::ONE,
        stride: Dims3::ONE,
        channels: vec![width, width],
    });
    if !matches!(family, Family::ConvLstm) {
        for lstm in ["LSTM1", "LSTM2"] {
            layers.push(LayerSpec {
                name: lstm.into(),
                kind: LayerKind::Recurrent,
                kernel: Dims3::ONE,
                stride: Dims3::ONE,
                channels: vec![width, width],
            });
        }
    }
    ArchSpec {
        name: name.to_string(),
        input_size: Dims3::new(64, 64, 48),
        layers,
    }
}

/// Built-in architectures. `ts-conv3d` exists only at XL width, so both names
/// resolve to the same stack. The ConvLSTM XL plan lists the base channels.
pub fn preset(name: &str) -> Result<ArchSpec, ArchError> {
    let spec = match name {
        "conv2d" => build_preset(name, Family::Conv2d, &CH_BASE),
        "conv2d-xl" => build_preset(name, Family::Conv2d, &CH_XL),
        "conv3d" => build_preset(name, Family::Conv3d, &CH_BASE),
        "conv3d-xl" => build_preset(name, Family::Conv3d, &CH_XL),
        "ts-conv3d" | "ts-conv3d-xl" => build_preset("ts-conv3d-xl", Family::TsConv3d, &CH_XL),
        "convlstm" | "convlstm-xl" => build_preset(name, Family::ConvLstm, &CH_BASE),
        other => return Err(ArchError::UnknownPreset(other.to_string())),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv3d_preset_shape() {
        let a = preset("conv3d").unwrap();
        let names: Vec<&str> = a.layers.iter().map(|l| l.name.as_str()).collect();
        assert_eq!(
            names,
            ["Res1_1", "Res2_1", "Res3_1", "Res3_2", "Res4_1", "Res4_2", "Res4_3", "Res4_4", "Pool", "LSTM1", "LSTM2"]
        );
        let strides: Vec<Dims3> = a.layers[..8].iter().map(|l| l.stride).collect();
        let two = Dims3::new(2, 2, 1);
        assert_eq!(strides, [two, two, two, Dims3::ONE, two, Dims3::ONE, Dims3::ONE, Dims3::ONE]);
        assert_eq!(a.layers[9].kind, LayerKind::Recurrent);
    }

    #[test]
    fn presets_round_trip_through_text() {
        for name in PRESET_NAMES {
            let a = preset(name).unwrap();
            assert_eq!(parse_arch_spec(&a.to_text()).unwrap(), a, "{name}");
        }
    }

    #[test]
    fn zero_stride_rejected() {
        let e = parse_arch_spec("# x\nL1 conv kernel=3x3x3 stride=0x1x1\n").unwrap_err();
        assert_eq!(
            e,
            ArchError::InvalidStride {
                line: 2,
                layer: "L1".into()
            }
        );
    }

    #[test]
    fn recurrent_time_stride_rejected() {
        assert!(matches!(
            parse_arch_spec("L recurrent stride=1x1x2"),
            Err(ArchError::InvalidStride { line: 1, .. })
        ));
    }

    #[test]
    fn empty_file() {
        assert_eq!(parse_arch_spec(""), Err(ArchError::EmptyArch));
        assert_eq!(parse_arch_spec("# only\narch x\ninput 8x8x8\n"), Err(ArchError::EmptyArch));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("L1 conv\nL2 dense\n", 2),
            ("L1 conv kernel=3x3\n", 1),
            ("\n\nL1\n", 3),
            ("input 0x4x4\nL conv\n", 1),
            ("L conv size=3\n", 1),
            ("L conv kernel=0x1x1\n", 1),
            ("L conv channels=1,a\n", 1),
        ];
        for (text, line) in cases {
            match parse_arch_spec(text) {
                Err(ArchError::ParseError { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("resnet50"), Err(ArchError::UnknownPreset(_))));
    }
}
