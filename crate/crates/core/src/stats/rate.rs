use serde::Serialize;

use crate::error::{Error, Result};

pub fn bpp(bits: u64, points: u64) -> Result<f64> {
    if points == 0 {
        return Err(Error::InvalidArgument("bits per point needs at least one point".into()));
    }
    Ok(bits as f64 / points as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bitrate {
    pub bpp_geometry: f64,
    pub bpp_total: f64,
}

/// Geometry-only and geometry+texture bits per input point.
pub fn bitrate(geometry_bits: u64, texture_bits: u64, points: u64) -> Result<Bitrate> {
    Ok(Bitrate {
        bpp_geometry: bpp(geometry_bits, points)?,
        bpp_total: bpp(geometry_bits + texture_bits, points)?,
    })
}
