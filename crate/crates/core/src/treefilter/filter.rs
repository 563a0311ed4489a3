//! Tree-affinity filtering: brute-force reference and the linear-time
//! two-pass implementation, plus the backward pass.
//!
//! Affinity between pixels is `exp(-D)` with `D` the tree path length, so it
//! factorizes over tree edges. The linear pass exploits that: one
//! leaf-to-root accumulation and one root-to-leaf redistribution aggregate
//! every pixel's affinity-weighted sum, and the same passes over an all-ones
//! signal produce the per-pixel normalizer. The root's sentinel self-edge
//! carries affinity zero so every vertex does identical work, which keeps
//! the instrumented multiply-add count exactly linear in the pixel count.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::mst::SpanningTree;

/// `exp(-D)` for a nonnegative tree distance; 1 exactly when `D` is 0.
pub fn affinity<T: Float>(distance: T) -> Result<T> {
    if distance < T::zero() {
        return Err(Error::InvalidInput(
            "tree distance must be nonnegative".into(),
        ));
    }
    Ok((-distance).exp())
}

fn check_dims<T: Float>(t: &SpanningTree<T>, y: &Tensor<T>) -> Result<(usize, usize, usize)> {
    let (c, h, w) = y.chw()?;
    if h != t.height || w != t.width {
        return Err(Error::ShapeMismatch(format!(
            "signal is {h}x{w}, tree is {}x{}",
            t.height, t.width
        )));
    }
    Ok((c, h, w))
}

/// Per-vertex affinity to the parent; zero at the root (sentinel self-edge).
fn parent_affinities<T: Float>(t: &SpanningTree<T>) -> Vec<T> {
    (0..t.vertex_count())
        .map(|v| {
            if v as u32 == t.root {
                T::zero()
            } else {
                (-t.parent_weight[v]).exp()
            }
        })
        .collect()
}

/// Unnormalized aggregation `out(i) = sum_j exp(-D(i,j)) * x(j)` for one
/// channel, via the two tree passes. Every vertex executes one up-pass
/// multiply-add and two down-pass multiply-adds; `ops` counts them.
fn aggregate_channel<T: Float>(
    t: &SpanningTree<T>,
    aff: &[T],
    x: &[T],
    ops: &mut u64,
) -> Vec<T> {
    let n = t.vertex_count();
    debug_assert_eq!(x.len(), n);

    // leaf-to-root: up(v) = x(v) + sum over children c of a(c) * up(c)
    let mut up = x.to_vec();
    for &v in t.order.iter().rev() {
        let v = v as usize;
        let contribution = aff[v] * up[v];
        up[t.parent[v] as usize] = up[t.parent[v] as usize] + contribution;
    }
    *ops += n as u64;

    // root-to-leaf: g(v) = up(v) + a(v) * (g(parent) - a(v) * up(v))
    let mut g = vec![T::zero(); n];
    for &v in t.order.iter() {
        let v = v as usize;
        g[v] = up[v] + aff[v] * (g[t.parent[v] as usize] - aff[v] * up[v]);
    }
    *ops += 2 * n as u64;

    g
}

/// Reference filter: explicit pairwise tree distances, O((H*W)^2).
pub fn filter_brute<T: Float>(t: &SpanningTree<T>, y: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = check_dims(t, y)?;
    let hw = h * w;
    let src = y.data();
    let mut out = vec![T::zero(); c * hw];
    for i in 0..hw as u32 {
        let dist = crate::check::tree_distances_from(t, i);
        let mut z = T::zero();
        let mut acc = vec![T::zero(); c];
        for (j, &d) in dist.iter().enumerate() {
            let a = (-d).exp();
            z = z + a;
            for (ch, slot) in acc.iter_mut().enumerate() {
                *slot = *slot + a * src[ch * hw + j];
            }
        }
        for ch in 0..c {
            out[ch * hw + i as usize] = acc[ch] / z;
        }
    }
    Tensor::new(vec![c, h, w], out)
}

/// Linear-time filter, returning the instrumented multiply-add count along
/// with the result. The count is `(4C + 3) * H * W`: three aggregation ops
/// per vertex per channel, three for the shared normalizer, and one
/// normalizing division per output element.
pub fn filter_linear_counted<T: Float>(
    t: &SpanningTree<T>,
    y: &Tensor<T>,
) -> Result<(Tensor<T>, u64)> {
    let (c, h, w) = check_dims(t, y)?;
    let hw = h * w;
    let aff = parent_affinities(t);
    let mut ops = 0u64;

    let ones = vec![T::one(); hw];
    let z = aggregate_channel(t, &aff, &ones, &mut ops);

    let src = y.data();
    let mut out = vec![T::zero(); c * hw];
    for ch in 0..c {
        let g = aggregate_channel(t, &aff, &src[ch * hw..(ch + 1) * hw], &mut ops);
        for (px, (gi, zi)) in g.iter().zip(&z).enumerate() {
            out[ch * hw + px] = *gi / *zi;
        }
        ops += hw as u64;
    }
    Ok((Tensor::new(vec![c, h, w], out)?, ops))
}

/// Linear-time filter; numerically equal to [`filter_brute`].
pub fn filter_linear<T: Float>(t: &SpanningTree<T>, y: &Tensor<T>) -> Result<Tensor<T>> {
    filter_linear_counted(t, y).map(|(out, _)| out)
}

/// Backward pass of the filter: `grad_in(j) = sum_i A(i,j) * grad_out(i) / z_i`
/// with affinities held constant, computed by unnormalized aggregation of
/// `grad_out / z` (valid because `A` is symmetric).
pub fn filter_backward<T: Float>(t: &SpanningTree<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = check_dims(t, grad_out)?;
    let hw = h * w;
    let aff = parent_affinities(t);
    let mut ops = 0u64;

    let ones = vec![T::one(); hw];
    let z = aggregate_channel(t, &aff, &ones, &mut ops);

    let src = grad_out.data();
    let mut out = vec![T::zero(); c * hw];
    let mut scaled = vec![T::zero(); hw];
    for ch in 0..c {
        for px in 0..hw {
            scaled[px] = src[ch * hw + px] / z[px];
        }
        let g = aggregate_channel(t, &aff, &scaled, &mut ops);
        out[ch * hw..(ch + 1) * hw].copy_from_slice(&g);
    }
    Tensor::new(vec![c, h, w], out)
}

/// Full guided filtering: grid graph from the guide, MST, linear filter. A
/// per-pixel simplex-valued input stays simplex-valued (each output pixel is
/// a convex combination of input pixels).
pub fn guided_filter<T: Float>(y: &Tensor<T>, guide: &Tensor<T>) -> Result<Tensor<T>> {
    let (_, gh, gw) = guide.chw()?;
    let (_, yh, yw) = y.chw()?;
    if (gh, gw) != (yh, yw) {
        return Err(Error::ShapeMismatch(format!(
            "guide is {gh}x{gw}, signal is {yh}x{yw}"
        )));
    }
    let graph = super::graph::build_grid_graph(guide)?;
    let tree = super::mst::build_mst(&graph);
    filter_linear(&tree, y)
}
