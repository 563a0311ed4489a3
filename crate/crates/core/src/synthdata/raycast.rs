//! Analytic ray intersection against scene primitives.

use super::scene::{Primitive, SceneSpec, CLASS_GROUND};

/// Closest intersection along a ray.
#[derive(Clone, Copy, Debug)]
pub struct Hit {
    pub t: f64,
    pub class: u16,
    pub normal: [f64; 3],
}

const T_MIN: f64 = 1e-6;

fn ray_ground(origin: [f64; 3], dir: [f64; 3]) -> Option<Hit> {
    if dir[2].abs() < 1e-12 {
        return None;
    }
    let t = -origin[2] / dir[2];
    (t > T_MIN).then_some(Hit {
        t,
        class: CLASS_GROUND,
        normal: [0.0, 0.0, 1.0],
    })
}

fn ray_box(origin: [f64; 3], dir: [f64; 3], min: &[f64; 3], max: &[f64; 3], class: u16) -> Option<Hit> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    let mut enter_axis = 0;
    for axis in 0..3 {
        if dir[axis].abs() < 1e-12 {
            if origin[axis] < min[axis] || origin[axis] > max[axis] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[axis];
        let (mut t0, mut t1) = ((min[axis] - origin[axis]) * inv, (max[axis] - origin[axis]) * inv);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0 > t_enter {
            t_enter = t0;
            enter_axis = axis;
        }
        t_exit = t_exit.min(t1);
        if t_enter > t_exit {
            return None;
        }
    }
    if t_enter <= T_MIN {
        return None; // inside or behind; sensors never sit inside primitives
    }
    let mut normal = [0.0; 3];
    normal[enter_axis] = -dir[enter_axis].signum();
    Some(Hit {
        t: t_enter,
        class,
        normal,
    })
}

fn ray_cylinder(
    origin: [f64; 3],
    dir: [f64; 3],
    cx: f64,
    cy: f64,
    radius: f64,
    z0: f64,
    z1: f64,
    class: u16,
) -> Option<Hit> {
    // side surface only: (x - cx)^2 + (y - cy)^2 = r^2 with z in [z0, z1]
    let ox = origin[0] - cx;
    let oy = origin[1] - cy;
    let a = dir[0] * dir[0] + dir[1] * dir[1];
    if a < 1e-14 {
        return None;
    }
    let b = 2.0 * (ox * dir[0] + oy * dir[1]);
    let c = ox * ox + oy * oy - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sqrt_disc = disc.sqrt();
    for t in [(-b - sqrt_disc) / (2.0 * a), (-b + sqrt_disc) / (2.0 * a)] {
        if t > T_MIN {
            let z = origin[2] + t * dir[2];
            if z >= z0 && z <= z1 {
                let px = origin[0] + t * dir[0] - cx;
                let py = origin[1] + t * dir[1] - cy;
                let n = (px * px + py * py).sqrt();
                return Some(Hit {
                    t,
                    class,
                    normal: [px / n, py / n, 0.0],
                });
            }
        }
    }
    None
}

/// Nearest hit among all primitives and (when present) the ground plane,
/// within `t_max`.
pub fn trace_ray(scene: &SceneSpec, origin: [f64; 3], dir: [f64; 3], t_max: f64) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    let mut consider = |hit: Option<Hit>| {
        if let Some(h) = hit {
            if h.t <= t_max && best.map_or(true, |b| h.t < b.t) {
                best = Some(h);
            }
        }
    };
    if scene.has_ground {
        consider(ray_ground(origin, dir));
    }
    for p in &scene.primitives {
        match p {
            Primitive::Box { min, max, class } => consider(ray_box(origin, dir, min, max, *class)),
            Primitive::Cylinder {
                x,
                y,
                radius,
                z0,
                z1,
                class,
            } => consider(ray_cylinder(origin, dir, *x, *y, *radius, *z0, *z1, *class)),
        }
    }
    best
}
