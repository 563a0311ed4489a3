//! 4-connected grid graph over guide features.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One undirected edge between 4-adjacent pixels, `u < v` in row-major
/// vertex numbering.
#[derive(Clone, Copy, Debug)]
pub struct GridEdge<T> {
    pub u: u32,
    pub v: u32,
    pub weight: T,
}

/// 4-connected planar graph on an `H x W` pixel grid. Edges are enumerated
/// canonically: for each vertex in row-major order, its right edge then its
/// down edge. That ordering is the tie-break key for MST construction.
#[derive(Clone, Debug)]
pub struct GridGraph<T> {
    pub height: usize,
    pub width: usize,
    pub edges: Vec<GridEdge<T>>,
}

impl<T: Float> GridGraph<T> {
    pub fn vertex_count(&self) -> usize {
        self.height * self.width
    }

    /// Expected edge count `H(W-1) + (H-1)W`.
    pub fn expected_edges(height: usize, width: usize) -> usize {
        height * (width - 1) + (height - 1) * width
    }
}

/// Builds the grid graph whose edge weights are the L2 dissimilarity between
/// adjacent guide feature vectors.
pub fn build_grid_graph<T: Float>(guide: &Tensor<T>) -> Result<GridGraph<T>> {
    let (c, h, w) = guide.chw()?;
    if h * w < 2 {
        return Err(Error::InvalidShape {
            dims: guide.dims().to_vec(),
            reason: "grid graph needs at least 2 pixels".into(),
        });
    }
    let hw = h * w;
    let data = guide.data();
    let dissimilarity = |a: usize, b: usize| -> Result<T> {
        let mut sum = T::zero();
        for ch in 0..c {
            let d = data[ch * hw + a] - data[ch * hw + b];
            sum = sum + d * d;
        }
        let wgt = sum.sqrt();
        if !wgt.is_finite() {
            return Err(Error::InvalidInput(
                "non-finite guide feature dissimilarity".into(),
            ));
        }
        Ok(wgt)
    };

    let mut edges = Vec::with_capacity(GridGraph::<T>::expected_edges(h, w));
    for row in 0..h {
        for col in 0..w {
            let u = (row * w + col) as u32;
            if col + 1 < w {
                edges.push(GridEdge {
                    u,
                    v: u + 1,
                    weight: dissimilarity(u as usize, u as usize + 1)?,
                });
            }
            if row + 1 < h {
                edges.push(GridEdge {
                    u,
                    v: u + w as u32,
                    weight: dissimilarity(u as usize, u as usize + w)?,
                });
            }
        }
    }
    Ok(GridGraph {
        height: h,
        width: w,
        edges,
    })
}
