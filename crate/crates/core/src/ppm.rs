//! Class-map visualization as binary PPM (P6).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::labels::IGNORE;
use crate::tensor::Tensor;

/// Fixed 16-entry class palette (RGB). Classes beyond the palette are an
/// error; the ignore sentinel renders black.
pub const PALETTE: [[u8; 3]; 16] = [
    [70, 70, 70],    // 0 background / sky
    [128, 64, 128],  // 1 ground
    [0, 0, 142],     // 2 vehicle
    [153, 153, 153], // 3 pole
    [220, 20, 60],   // 4 pedestrian
    [107, 142, 35],  // 5
    [244, 164, 96],  // 6
    [70, 130, 180],  // 7
    [220, 220, 0],   // 8
    [152, 251, 152], // 9
    [119, 11, 32],   // 10
    [0, 60, 100],    // 11
    [0, 80, 100],    // 12
    [0, 0, 230],     // 13
    [255, 255, 255], // 14
    [250, 170, 30],  // 15
];

/// Renders an `H x W` class map to P6 bytes using `palette`.
pub fn encode_ppm(classmap: &Tensor<u16>, palette: &[[u8; 3]]) -> Result<Vec<u8>> {
    let (h, w) = classmap.hw()?;
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for &id in classmap.data() {
        if id == IGNORE {
            out.extend_from_slice(&[0, 0, 0]);
        } else if let Some(rgb) = palette.get(id as usize) {
            out.extend_from_slice(rgb);
        } else {
            return Err(Error::PaletteMissing { id });
        }
    }
    Ok(out)
}

/// Writes a class map to `path` as a binary PPM.
pub fn export_ppm(classmap: &Tensor<u16>, palette: &[[u8; 3]], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(classmap, palette)?).map_err(|e| Error::io(path, e))
}
