//! Built-in verification battery behind the `selftest` CLI command: a
//! compact runtime mirror of the oracle test suites. Each suite checks an
//! implementation against an independent route (brute force, reverse
//! deletion, finite differences, closed forms) and reports pass/fail.

use num_traits::Float;

use crate::check::{gradient_check, max_rel_err, reverse_delete_total_weight};
use crate::labels::IGNORE;
use crate::losses::{
    dycross_loss, dynamic_weight, focal_loss, kl_pixel, lovasz_softmax, tau_schedule,
    total_loss, DycrossConfig,
};
use crate::micronet::{micronet_backward, micronet_forward, micronet_init, NetToggles};
use crate::mmtf::{decode_tensor, encode_tensor};
use crate::projection::{one_hot, project_points, remap_to_points, sparse_label_map, PointCloud};
use crate::rng::Rng;
use crate::synthdata::{default_camera, generate_scene, simulate_lidar, LidarRig, SceneGenConfig};
use crate::tensor::{softmax_channels, Tensor};
use crate::treefilter::{
    build_grid_graph, build_mst, filter_brute, filter_linear, filter_linear_counted,
    guided_filter,
};

/// Outcome of one suite.
pub struct SuiteResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

fn suite(name: &'static str, run: impl FnOnce() -> Result<(), String>) -> SuiteResult {
    SuiteResult {
        name,
        outcome: run(),
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_prediction(rng: &mut Rng, c: usize, h: usize, w: usize) -> Tensor<f64> {
    let logits = Tensor::new(
        vec![c, h, w],
        (0..c * h * w).map(|_| rng.range_f64(-2.0, 2.0)).collect(),
    )
    .unwrap();
    softmax_channels(&logits).unwrap()
}

fn random_labels(rng: &mut Rng, c: usize, h: usize, w: usize) -> Tensor<u16> {
    let data = (0..h * w)
        .map(|_| {
            if rng.next_f64() < 0.6 {
                rng.range_usize(c) as u16
            } else {
                IGNORE
            }
        })
        .collect();
    Tensor::new(vec![h, w], data).unwrap()
}

fn random_tree(rng: &mut Rng, c: usize, h: usize, w: usize) -> crate::treefilter::SpanningTree<f64> {
    let guide = Tensor::new(
        vec![c, h, w],
        (0..c * h * w).map(|_| rng.range_f64(0.0, 2.0)).collect(),
    )
    .unwrap();
    build_mst(&build_grid_graph(&guide).unwrap())
}

fn tensor_io() -> Result<(), String> {
    let mut rng = Rng::new(1);
    for _ in 0..20 {
        let dims = vec![1 + rng.range_usize(4), 1 + rng.range_usize(5)];
        let n: usize = dims.iter().product();
        let t = Tensor::new(dims, (0..n).map(|_| rng.next_f32()).collect())
            .map_err(|e| e.to_string())?;
        let back = decode_tensor(&encode_tensor(&t))
            .map_err(|e| e.to_string())?
            .into_f32()
            .map_err(|e| e.to_string())?;
        ensure(back == t, "float32 round trip differs")?;
    }
    ensure(
        decode_tensor(b"XXXXxxxx").is_err(),
        "bad magic must be rejected",
    )
}

fn filter_oracle() -> Result<(), String> {
    let mut rng = Rng::new(2);
    for trial in 0..20 {
        let h = 2 + rng.range_usize(9);
        let w = 2 + rng.range_usize(9);
        let tree = random_tree(&mut rng, 3, h, w);
        let y = Tensor::new(
            vec![3, h, w],
            (0..3 * h * w).map(|_| rng.range_f64(-1.0, 1.0)).collect(),
        )
        .unwrap();
        let brute = filter_brute(&tree, &y).map_err(|e| e.to_string())?;
        let lin = filter_linear(&tree, &y).map_err(|e| e.to_string())?;
        let err = max_rel_err(lin.data(), brute.data());
        ensure(err < 1e-10, format!("trial {trial}: linear vs brute {err}"))?;
    }
    Ok(())
}

fn linear_op_count() -> Result<(), String> {
    let mut rng = Rng::new(3);
    let mut counts = Vec::new();
    for size in [16usize, 32] {
        let tree = random_tree(&mut rng, 2, size, size);
        let y = Tensor::new(
            vec![3, size, size],
            (0..3 * size * size).map(|_| rng.next_f64()).collect(),
        )
        .unwrap();
        let (_, ops) = filter_linear_counted(&tree, &y).map_err(|e| e.to_string())?;
        ensure(
            ops <= 8 * 3 * (size * size) as u64,
            format!("op count {ops} exceeds bound at {size}x{size}"),
        )?;
        counts.push(ops);
    }
    ensure(
        counts[1] == 4 * counts[0],
        format!("op counts {counts:?} not exactly 4x"),
    )
}

fn mst_oracle() -> Result<(), String> {
    let mut rng = Rng::new(4);
    for trial in 0..20 {
        let h = 2 + rng.range_usize(5);
        let w = 2 + rng.range_usize(5);
        let guide = Tensor::new(
            vec![2, h, w],
            (0..2 * h * w).map(|_| rng.next_f64()).collect(),
        )
        .unwrap();
        let g = build_grid_graph(&guide).unwrap();
        let t = build_mst(&g);
        let want = reverse_delete_total_weight(&g);
        ensure(
            (t.total_weight() - want).abs() < 1e-9,
            format!("trial {trial}: kruskal {} vs reverse-delete {want}", t.total_weight()),
        )?;
    }
    Ok(())
}

fn gradient_suite() -> Result<(), String> {
    let mut rng = Rng::new(5);
    let pred = random_prediction(&mut rng, 3, 4, 4);
    let labels = random_labels(&mut rng, 3, 4, 4);

    let (_, grad) = focal_loss(&pred, &labels, 2.0).map_err(|e| e.to_string())?;
    let f = |d: &[f64]| {
        focal_loss(&Tensor::new(vec![3, 4, 4], d.to_vec()).unwrap(), &labels, 2.0)
            .unwrap()
            .0
    };
    let worst = gradient_check(f, pred.data(), grad.data(), 1e-6);
    ensure(worst < 1e-4, format!("focal gradient off by {worst}"))?;

    let (_, grad) = lovasz_softmax(&pred, &labels).map_err(|e| e.to_string())?;
    let f = |d: &[f64]| {
        lovasz_softmax(&Tensor::new(vec![3, 4, 4], d.to_vec()).unwrap(), &labels)
            .unwrap()
            .0
    };
    let worst = gradient_check(f, pred.data(), grad.data(), 1e-6);
    ensure(worst < 1e-4, format!("lovasz gradient off by {worst}"))?;

    // filter backward against the same probe-loss finite differences
    let tree = random_tree(&mut rng, 2, 5, 5);
    let y = random_prediction(&mut rng, 2, 5, 5);
    let probe = Tensor::new(
        vec![2, 5, 5],
        (0..50).map(|_| rng.range_f64(-1.0, 1.0)).collect(),
    )
    .unwrap();
    let grad = crate::treefilter::filter_backward(&tree, &probe).map_err(|e| e.to_string())?;
    let f = |d: &[f64]| {
        let t = Tensor::new(vec![2, 5, 5], d.to_vec()).unwrap();
        filter_linear(&tree, &t)
            .unwrap()
            .data()
            .iter()
            .zip(probe.data())
            .map(|(o, g)| o * g)
            .sum()
    };
    let worst = gradient_check(f, y.data(), grad.data(), 1e-6);
    ensure(worst < 1e-4, format!("filter backward off by {worst}"))?;

    // whole network, a few sampled parameters
    let params = micronet_init(&mut rng, 3).convert::<f64>();
    let lidar = Tensor::new(
        vec![5, 8, 8],
        (0..5 * 64).map(|_| rng.range_f64(0.0, 12.0)).collect(),
    )
    .unwrap();
    let cam = Tensor::new(vec![3, 8, 8], (0..3 * 64).map(|_| rng.next_f64()).collect()).unwrap();
    let net_labels = random_labels(&mut rng, 3, 8, 8);
    let cfg = DycrossConfig {
        tau_start: 0.2,
        tau_end: 0.3,
        ..DycrossConfig::default()
    };
    let toggles = NetToggles::default();
    let loss_at = |p: &crate::micronet::MicroNetParams<f64>| {
        let out = micronet_forward(&lidar, &cam, p, toggles).unwrap();
        total_loss(&out.y_lidar, &out.y_cam, &net_labels, 0.25, &cfg)
            .unwrap()
            .total
    };
    let out = micronet_forward(&lidar, &cam, &params, toggles).map_err(|e| e.to_string())?;
    let loss = total_loss(&out.y_lidar, &out.y_cam, &net_labels, 0.25, &cfg)
        .map_err(|e| e.to_string())?;
    let grads = micronet_backward(&out.trace, &loss.grad_lidar, &loss.grad_cam, &params);
    let flat = params.flatten();
    let flat_grads = grads.flatten();
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let idx = rng.range_usize(flat.len());
        let h = 1e-6;
        let mut p = params.clone();
        let mut buf = flat.clone();
        buf[idx] += h;
        p.assign_flat(&buf);
        let up = loss_at(&p);
        buf[idx] = flat[idx] - h;
        p.assign_flat(&buf);
        let down = loss_at(&p);
        worst = worst.max(crate::check::rel_err(flat_grads[idx], (up - down) / (2.0 * h)));
    }
    ensure(worst < 1e-3, format!("network gradient off by {worst}"))
}

fn simplex_preservation() -> Result<(), String> {
    let mut rng = Rng::new(6);
    for _ in 0..20 {
        let h = 2 + rng.range_usize(7);
        let w = 2 + rng.range_usize(7);
        let y = random_prediction(&mut rng, 4, h, w);
        let guide = Tensor::new(
            vec![3, h, w],
            (0..3 * h * w).map(|_| rng.next_f64()).collect(),
        )
        .unwrap();
        let out = guided_filter(&y, &guide).map_err(|e| e.to_string())?;
        for px in 0..h * w {
            let sum: f64 = (0..4).map(|c| out.data()[c * h * w + px]).sum();
            ensure(
                (sum - 1.0).abs() < 1e-6,
                format!("pixel sum {sum} after filtering"),
            )?;
        }
    }
    Ok(())
}

fn dynamic_weight_gate() -> Result<(), String> {
    let mut rng = Rng::new(7);
    let sup = crate::losses::confidence_map(&random_prediction(&mut rng, 3, 8, 8)).unwrap();
    let rec = crate::losses::confidence_map(&random_prediction(&mut rng, 3, 8, 8)).unwrap();
    let mut prev_support: Option<Vec<bool>> = None;
    for tau in [0.70, 0.75, 0.80] {
        let w = dynamic_weight(&sup, &rec, tau).map_err(|e| e.to_string())?;
        for ((&wv, &s), &r) in w.data().iter().zip(sup.data()).zip(rec.data()) {
            ensure(wv >= 0.0, "negative weight")?;
            if s <= r.max(tau) {
                ensure(wv == 0.0, "gate leaked below threshold")?;
            }
        }
        let support: Vec<bool> = w.data().iter().map(|&v| v > 0.0).collect();
        if let Some(prev) = &prev_support {
            for (now, before) in support.iter().zip(prev) {
                ensure(!(*now && !before), "support grew as tau rose")?;
            }
        }
        prev_support = Some(support);
    }
    let cfg = DycrossConfig::default();
    ensure(tau_schedule(0.0, &cfg) == 0.70, "tau start")?;
    ensure(tau_schedule(1.0, &cfg) == 0.80, "tau end")
}

fn projection_round_trip() -> Result<(), String> {
    let cam = default_camera(48, 32);
    let rig = LidarRig::covering(&cam);
    for seed in 0..10u64 {
        let scene = generate_scene(Rng::new(seed), &SceneGenConfig::default())
            .map_err(|e| e.to_string())?;
        let (cloud, labels3d) = simulate_lidar(&scene, &rig).map_err(|e| e.to_string())?;
        let cloud = PointCloud {
            points: cloud.points,
        };
        let (_, index) = project_points(&cloud, &cam).map_err(|e| e.to_string())?;
        let sparse = sparse_label_map(&index, &labels3d).map_err(|e| e.to_string())?;
        let onehot: Tensor<f64> = one_hot(&sparse, 5).map_err(|e| e.to_string())?;
        let remapped = remap_to_points(&onehot, &index).map_err(|e| e.to_string())?;
        for (i, px) in index.pixel_of_point.iter().enumerate() {
            if let Some((r, c)) = px {
                let at = *r as usize * cam.width + *c as usize;
                if index.point_of_pixel[at] == Some(i as u32) {
                    ensure(
                        remapped[i] == labels3d[i],
                        format!("seed {seed}: retained point {i} label changed"),
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn loss_sanity() -> Result<(), String> {
    let labels = Tensor::new(vec![2, 2], vec![0u16, 1, 1, 0]).unwrap();
    let onehot: Tensor<f64> = one_hot(&labels, 2).unwrap();
    let cfg = DycrossConfig::default();
    let out = total_loss(&onehot, &onehot, &labels, 0.7, &cfg).map_err(|e| e.to_string())?;
    ensure(out.total.abs() < 1e-6, format!("perfect-case total {}", out.total))?;

    let mut rng = Rng::new(8);
    let y_l = random_prediction(&mut rng, 3, 4, 4);
    let y_c = random_prediction(&mut rng, 3, 4, 4);
    let labels = random_labels(&mut rng, 3, 4, 4);
    let zero_alpha = DycrossConfig { alpha: 0.0, ..cfg };
    let out = total_loss(&y_l, &y_c, &labels, 0.7, &zero_alpha).map_err(|e| e.to_string())?;
    ensure(
        out.total == out.focal_lidar + out.lovasz_lidar + out.focal_cam + out.lovasz_cam,
        "alpha=0 total is not exactly the supervised sum",
    )?;
    let d = kl_pixel(&[0.5, 0.5], &[0.5, 0.5], 1e-8);
    ensure(d.abs() < 1e-12, "KL(p, p) != 0")?;
    let (dy, _, _) =
        dycross_loss(&y_l, &y_l, 0.0, 1e-8).map_err(|e| e.to_string())?;
    ensure(dy.abs() < 1e-12, "dycross(y, y) != 0")
}

/// Runs every suite and returns the per-suite outcomes.
pub fn run_all() -> Vec<SuiteResult> {
    vec![
        suite("tensor-io", tensor_io),
        suite("filter-oracle", filter_oracle),
        suite("linear-op-count", linear_op_count),
        suite("mst-reverse-delete", mst_oracle),
        suite("gradient-suite", gradient_suite),
        suite("simplex-preservation", simplex_preservation),
        suite("dynamic-weight-gate", dynamic_weight_gate),
        suite("projection-round-trip", projection_round_trip),
        suite("loss-sanity", loss_sanity),
    ]
}
