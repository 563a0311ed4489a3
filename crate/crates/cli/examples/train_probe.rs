//! Scratch diagnostic: loss curves and per-class IoU for the toggle variants.
use mmseg_core::evalkit::{confusion_update, miou, ConfusionMatrix};
use mmseg_core::micronet::*;
use mmseg_core::micronet::micronet_forward;
use mmseg_core::projection::{project_points, sparse_label_map};
use mmseg_core::rng::Rng;
use mmseg_core::synthdata::*;
use mmseg_core::treefilter::GuideSource;

fn build(n: usize, seed: u64, w: usize, h: usize) -> Vec<(TrainSample, mmseg_core::tensor::Tensor<u16>, Vec<u16>)> {
    let cam = default_camera(w, h);
    let rig = LidarRig::covering(&cam);
    let cfg = SceneGenConfig::default();
    (0..n).map(|i| {
        let scene = generate_scene(Rng::substream(seed, 2*i as u64), &cfg).unwrap();
        let (image, label2d) = render_camera(&scene, &cam, Rng::substream(seed, 2*i as u64+1));
        let (cloud, labels3d) = simulate_lidar(&scene, &rig).unwrap();
        let (lidar_map, index) = project_points(&cloud, &cam).unwrap();
        let label_p3d = sparse_label_map(&index, &labels3d).unwrap();
        (TrainSample { lidar_map, cam_image: image, label_p3d }, label2d, labels3d)
    }).collect()
}

fn main() {
    let (w, h) = (96usize, 64usize);
    let train_data = build(32, 1000, w, h);
    let test_data = build(8, 2000, w, h);
    let samples: Vec<TrainSample> = train_data.iter().map(|(s, _, _)| s.clone()).collect();
    let epochs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);

    for (name, use_f, use_d) in [("full", true, true), ("base", false, false)] {
        let batch: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(4);
        let cfg = TrainConfig {
            epochs,
            batch_size: batch,
            seed: 0,
            toggles: NetToggles { use_filter: use_f, use_dycross: use_d, guide_source: GuideSource::CamLow },
            ..TrainConfig::default()
        };
        let init = micronet_init(&mut Rng::new(0), 5);
        let mut shuffle = Rng::substream(0, 0x5A5A);
        let (params, log) = train_from(init, &samples, &cfg, &mut shuffle).unwrap();
        print!("{name}: loss ");
        for row in log.iter().step_by((log.len()/8).max(1)) {
            print!("{:.3}@{} ", row.total, row.step);
        }
        let last = log.last().unwrap();
        println!(
            "last {:.3} (foc_l {:.3} lov_l {:.3} foc_c {:.3} lov_c {:.3} dycross {:.3} tau {:.2})",
            last.total, last.l_foc_lidar, last.l_lov_lidar, last.l_foc_cam, last.l_lov_cam,
            last.l_dycross, last.tau
        );

        // evaluate on test
        let mut cm2d = ConfusionMatrix::new(5);
        let mut cm_cam = ConfusionMatrix::new(5);
        let mut cm_empty = ConfusionMatrix::new(5);
        let mut pred_hist = [0u64; 5];
        let mut conf_l_sum = 0.0f64; let mut conf_c_sum = 0.0f64; let mut conf_n = 0usize;
        let mut conf_l_hi = 0usize; let mut conf_c_hi = 0usize;
        for (s, label2d, labels3d) in &test_data {
            let out = micronet_forward(&s.lidar_map, &s.cam_image, &params, cfg.toggles).unwrap();
            let hw = w*h;
            let pred_ids: Vec<u16> = (0..hw).map(|px| {
                let mut best = (out.y_lidar.data()[px], 0u16);
                for ch in 1..5 { let v = out.y_lidar.data()[ch*hw+px]; if v > best.0 { best = (v, ch as u16); } }
                best.1
            }).collect();
            for &p in &pred_ids { pred_hist[p as usize] += 1; }
            confusion_update(&mut cm2d, &pred_ids, label2d.data()).unwrap();
            let cam_ids: Vec<u16> = (0..hw).map(|px| {
                let mut best = (out.y_cam.data()[px], 0u16);
                for ch in 1..5 { let v = out.y_cam.data()[ch*hw+px]; if v > best.0 { best = (v, ch as u16); } }
                best.1
            }).collect();
            confusion_update(&mut cm_cam, &cam_ids, label2d.data()).unwrap();
            for px in 0..hw {
                let cl = (0..5).map(|ch| out.y_lidar.data()[ch*hw+px]).fold(f32::MIN, f32::max);
                let cc = (0..5).map(|ch| out.y_cam.data()[ch*hw+px]).fold(f32::MIN, f32::max);
                conf_l_sum += cl as f64; conf_c_sum += cc as f64; conf_n += 1;
                if cl > 0.7 { conf_l_hi += 1; }
                if cc > 0.7 { conf_c_hi += 1; }
            }
            let mut mp = vec![]; let mut mt = vec![];
            for px in 0..hw { if s.lidar_map.data()[px] == 0.0 { mp.push(pred_ids[px]); mt.push(label2d.data()[px]); } }
            confusion_update(&mut cm_empty, &mp, &mt).unwrap();
            let _ = labels3d;
        }
        let (pc2d, m2d) = miou(&cm2d).unwrap();
        let (pc_cam, m_cam) = miou(&cm_cam).unwrap();
        let (_, m_empty) = miou(&cm_empty).unwrap();
        println!("{name}: cam mIoU {m_cam:.4} per-class {:?}", pc_cam.iter().map(|c| c.map(|v| (v*1000.0).round()/1000.0)).collect::<Vec<_>>());
        println!("{name}: mean conf lidar {:.3} cam {:.3}; frac>0.7 lidar {:.3} cam {:.3}",
            conf_l_sum/conf_n as f64, conf_c_sum/conf_n as f64,
            conf_l_hi as f64/conf_n as f64, conf_c_hi as f64/conf_n as f64);
        println!("{name}: 2D mIoU {m2d:.4} empty {m_empty:.4} per-class {:?}", pc2d.iter().map(|c| c.map(|v| (v*1000.0).round()/1000.0)).collect::<Vec<_>>());
        println!("{name}: pred histogram {pred_hist:?}");
    }
}
