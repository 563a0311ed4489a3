//! Label sentinels shared by projection, losses and evaluation.

use crate::tensor::Tensor;

/// Sentinel marking unlabeled pixels in sparse label maps.
pub const IGNORE: u16 = 65535;

/// Sentinel class for points outside every camera frustum; such points get no
/// 2D prediction. Shares the numeric value of [`IGNORE`] so projected label
/// maps and remapped point labels use one out-of-band code.
pub const UNPROJECTED: u16 = 65535;

/// `H x W` map of uint16 class ids with [`IGNORE`] marking unlabeled pixels.
pub type LabelMap = Tensor<u16>;
