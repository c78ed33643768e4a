//! Stimulus preparation: nearest-neighbor texture transfer and external
//! G-PCC attribute coding with lossless geometry.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::Serialize;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::index::NeighborIndex;
use crate::ply::{read_ply_file, write_ply_file, PlyFormat};

/// Gives every geometry point the color of its nearest reference point
/// (lowest index on ties). Positions are copied untouched.
pub fn recolor(geometry: &PointCloud, reference: &PointCloud) -> Result<PointCloud> {
    let ref_colors = reference.require_colors()?;
    let index = NeighborIndex::new(reference.positions());
    let colors: Vec<_> = geometry
        .positions()
        .par_iter()
        .map(|p| ref_colors[index.nearest(p).index])
        .collect();
    let mut out = PointCloud::new(geometry.positions().to_vec())?.with_colors(colors)?;
    if let Some(n) = geometry.normals() {
        out = out.with_normals(n.to_vec())?;
    }
    Ok(out)
}

pub const LOSSLESS_GEOMETRY_MODE: &str = "lossless-geometry-lossy-atts";

/// Attribute rate parameters for R01..R05 with the lifting transform.
pub const DEFAULT_RATE_SCHEDULE: [f64; 5] = [0.25, 0.5, 0.75, 0.875, 0.9375];

/// Encoder configuration template used when none is supplied. Placeholders
/// in `{{...}}` are substituted per run.
pub const DEFAULT_CONFIG_TEMPLATE: &str = "\
# G-PCC (TMC13 v14) attribute coding, octree geometry + lifting transform
# condition: lossless-geometry-lossy-atts
# rate schedule R01..R05: 0.25, 0.5, 0.75, 0.875, 0.9375
mode: 0
mergeDuplicatedPoints: 0
positionQuantizationScale: 1
trisoupNodeSizeLog2: 0
neighbourAvailBoundaryLog2: 8
intra_pred_max_node_size_log2: 6
inferredDirectCodingMode: 1
maxNumQtBtBeforeOt: 4
attribute: color
transformType: 2
numberOfNearestNeighborsInPrediction: 3
levelOfDetailCount: 12
lodDecimator: 0
adaptivePredictionThreshold: 64
qp: {{rate_param}}
qpChromaOffset: 0
bitdepth: 8
attrOffset: 0
attrScale: 1
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CodecMode {
    #[serde(rename = "lossless-geometry-lossy-atts")]
    LosslessGeometryLossyAttributes,
}

/// One configured external G-PCC run.
#[derive(Debug, Clone)]
pub struct CodecInvocation {
    pub binary: PathBuf,
    pub mode: CodecMode,
    /// Attribute rate parameter substituted for `{{rate_param}}`.
    pub rate_param: f64,
    pub position_quantization_scale: f64,
    pub config_template: String,
    /// Parent of the per-run temporary directory.
    pub work_root: PathBuf,
    /// Keep the per-run directory after completion.
    pub keep_workdir: bool,
}

impl CodecInvocation {
    pub fn new(binary: impl Into<PathBuf>, rate_param: f64) -> Self {
        Self {
            binary: binary.into(),
            mode: CodecMode::LosslessGeometryLossyAttributes,
            rate_param,
            position_quantization_scale: 1.0,
            config_template: DEFAULT_CONFIG_TEMPLATE.to_string(),
            work_root: std::env::temp_dir(),
            keep_workdir: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == CodecMode::LosslessGeometryLossyAttributes && self.position_quantization_scale != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "positionQuantizationScale must be 1 in {LOSSLESS_GEOMETRY_MODE} mode, got {}",
                self.position_quantization_scale
            )));
        }
        if !self.binary.is_file() {
            return Err(Error::CodecMissing(self.binary.clone()));
        }
        Ok(())
    }

    /// Encoder configuration text for this run.
    pub fn render_config(&self) -> String {
        let mut text = self
            .config_template
            .replace("{{rate_param}}", &self.rate_param.to_string())
            .replace("{{mode}}", LOSSLESS_GEOMETRY_MODE);
        let mut extra = String::new();
        if !text.contains(LOSSLESS_GEOMETRY_MODE) {
            extra.push_str(&format!("# condition: {LOSSLESS_GEOMETRY_MODE}\n"));
        }
        if !text.lines().any(|l| l.trim_start().starts_with("positionQuantizationScale:")) {
            extra.push_str("positionQuantizationScale: 1\n");
        }
        if !extra.is_empty() {
            if !text.ends_with('\n') {
                text.push('\n');
            }
            text.push_str(&extra);
        }
        text
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EncodeOutcome {
    #[serde(skip)]
    pub decoded: PointCloud,
    /// Size of the compressed stream file in bits.
    pub total_bits: u64,
    /// Per-stream sizes reported by the encoder log, in bits.
    pub streams: BTreeMap<String, u64>,
    pub encoder_log: String,
    pub decoder_log: String,
}

/// Parses lines like `positions bitstream size 1234 B` from an encoder log.
pub fn parse_stream_sizes(log: &str) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for line in log.lines() {
        let Some(pos) = line.find("bitstream size") else {
            continue;
        };
        let name = line[..pos].trim().to_string();
        let rest = line[pos + "bitstream size".len()..].split_whitespace().collect::<Vec<_>>();
        if let (Some(n), Some(unit)) = (rest.first().and_then(|n| n.parse::<u64>().ok()), rest.get(1)) {
            let bits = if unit.starts_with('B') { n * 8 } else { n };
            if !name.is_empty() {
                out.insert(name, bits);
            }
        }
    }
    out
}

fn sorted_positions(cloud: &PointCloud) -> Vec<[u64; 3]> {
    let mut v: Vec<[u64; 3]> = cloud.positions().iter().map(|p| p.map(f64::to_bits)).collect();
    v.sort_unstable();
    v
}

/// Checks that two clouds hold the same multiset of coordinates.
pub fn check_same_geometry(input: &PointCloud, decoded: &PointCloud) -> Result<()> {
    if input.len() != decoded.len() {
        return Err(Error::LosslessContract(format!(
            "{} points in, {} points out",
            input.len(),
            decoded.len()
        )));
    }
    let (a, b) = (sorted_positions(input), sorted_positions(decoded));
    if let Some(i) = a.iter().zip(&b).position(|(x, y)| x != y) {
        return Err(Error::LosslessContract(format!(
            "coordinate {:?} has no match in the decoded cloud",
            a[i].map(f64::from_bits)
        )));
    }
    Ok(())
}

fn run(binary: &Path, stage: &'static str, args: &[String], dir: &Path) -> Result<String> {
    let out = Command::new(binary).args(args).current_dir(dir).output()?;
    let log = format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    if !out.status.success() {
        return Err(Error::CodecFailed {
            stage,
            status: out.status.to_string(),
            log,
        });
    }
    Ok(log)
}

/// Encodes `cloud`'s attributes with the external codec, decodes the
/// stream, and verifies the geometry came back unchanged.
pub fn encode_texture_gpcc(cloud: &PointCloud, invocation: &CodecInvocation) -> Result<EncodeOutcome> {
    invocation.validate()?;
    cloud.require_colors()?;

    let workdir = tempfile::Builder::new()
        .prefix("pcqa-gpcc-")
        .tempdir_in(&invocation.work_root)?;
    let dir = workdir.path();
    let input = dir.join("input.ply");
    let config = dir.join("encoder.cfg");
    let stream = dir.join("stream.bin");
    let decoded_path = dir.join("decoded.ply");
    write_ply_file(&input, cloud, PlyFormat::BinaryLittleEndian)?;
    std::fs::write(&config, invocation.render_config())?;

    let path_arg = |flag: &str, p: &Path| format!("--{flag}={}", p.display());
    let encoder_log = run(
        &invocation.binary,
        "encode",
        &[
            "--mode=0".to_string(),
            path_arg("config", &config),
            path_arg("uncompressedDataPath", &input),
            path_arg("compressedStreamPath", &stream),
        ],
        dir,
    )?;
    let decoder_log = run(
        &invocation.binary,
        "decode",
        &[
            "--mode=1".to_string(),
            path_arg("compressedStreamPath", &stream),
            path_arg("reconstructedDataPath", &decoded_path),
            "--outputBinaryPly=0".to_string(),
        ],
        dir,
    )?;

    let total_bits = std::fs::metadata(&stream)?.len() * 8;
    let decoded = read_ply_file(&decoded_path)?;
    check_same_geometry(cloud, &decoded)?;
    if invocation.keep_workdir {
        let _ = workdir.keep();
    }
    Ok(EncodeOutcome {
        decoded,
        total_bits,
        streams: parse_stream_sizes(&encoder_log),
        encoder_log,
        decoder_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn colored(pts: Vec<[f64; 3]>, colors: Vec<[u8; 3]>) -> PointCloud {
        PointCloud::new(pts).unwrap().with_colors(colors).unwrap()
    }

    #[test]
    fn same_positions_copy_colors() {
        let r = colored(vec![[0.0; 3], [1.0, 0.0, 0.0]], vec![[1, 2, 3], [4, 5, 6]]);
        assert_eq!(recolor(&r.clone().without_colors(), &r).unwrap(), r);
    }

    #[test]
    fn equidistant_goes_to_lower_index() {
        let r = colored(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], vec![[9, 9, 9], [1, 1, 1]]);
        let g = PointCloud::new(vec![[0.0; 3]]).unwrap();
        assert_eq!(recolor(&g, &r).unwrap().colors().unwrap(), &[[9, 9, 9]]);
    }

    #[test]
    fn reference_needs_colors() {
        let g = PointCloud::new(vec![[0.0; 3]]).unwrap();
        assert!(matches!(recolor(&g, &g), Err(Error::MissingAttribute("colors"))));
    }

    #[test]
    fn config_carries_required_tokens() {
        let text = CodecInvocation::new("/nonexistent", 0.5).render_config();
        assert!(text.contains("lossless-geometry-lossy-atts"));
        assert!(text.contains("positionQuantizationScale: 1"));
        assert!(text.contains("qp: 0.5"));

        let mut bare = CodecInvocation::new("/nonexistent", 0.25);
        bare.config_template = "qp: {{rate_param}}".into();
        let text = bare.render_config();
        assert!(text.contains("lossless-geometry-lossy-atts"));
        assert!(text.contains("positionQuantizationScale: 1"));
    }

    #[test]
    fn missing_binary_fails_before_writing() {
        let root = tempfile::tempdir().unwrap();
        let mut inv = CodecInvocation::new(root.path().join("no-such-tmc3"), 0.5);
        inv.work_root = root.path().to_path_buf();
        let c = colored(vec![[0.0; 3]], vec![[0, 0, 0]]);
        assert!(matches!(encode_texture_gpcc(&c, &inv), Err(Error::CodecMissing(_))));
        assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);
    }

    #[test]
    fn pqs_must_be_one() {
        let mut inv = CodecInvocation::new("/bin/sh", 0.5);
        inv.position_quantization_scale = 0.5;
        assert!(matches!(inv.validate(), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn geometry_contract() {
        let a = PointCloud::new(vec![[0.0; 3], [1.0, 2.0, 3.0]]).unwrap();
        let shuffled = PointCloud::new(vec![[1.0, 2.0, 3.0], [0.0; 3]]).unwrap();
        assert!(check_same_geometry(&a, &shuffled).is_ok());
        let moved = PointCloud::new(vec![[1.0, 2.0, 3.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(check_same_geometry(&a, &moved), Err(Error::LosslessContract(_))));
        let dropped = PointCloud::new(vec![[0.0; 3]]).unwrap();
        assert!(check_same_geometry(&a, &dropped).is_err());
    }

    #[test]
    fn stream_sizes_from_log() {
        let log = "positions bitstream size 1200 B (0.5 bpp)\ncolors bitstream size 800 B\nTotal bitstream size 2000 B\nnoise\n";
        let s = parse_stream_sizes(log);
        assert_eq!(s["positions"], 9600);
        assert_eq!(s["colors"], 6400);
        assert_eq!(s["Total"], 16000);
    }
}
