//! Synthetic street scenes: a ground plane plus boxes, poles and
//! pedestrian-sized slabs, with per-class albedos.

use crate::error::{Error, Result};
use crate::rng::Rng;

pub const N_CLASSES: usize = 5;
pub const CLASS_BACKGROUND: u16 = 0;
pub const CLASS_GROUND: u16 = 1;
pub const CLASS_VEHICLE: u16 = 2;
pub const CLASS_POLE: u16 = 3;
pub const CLASS_PEDESTRIAN: u16 = 4;

/// Base RGB albedo per class; index 0 doubles as the sky color.
pub const CLASS_ALBEDO: [[f64; 3]; N_CLASSES] = [
    [0.55, 0.70, 0.90], // background / sky
    [0.34, 0.32, 0.30], // ground
    [0.15, 0.25, 0.75], // vehicle
    [0.80, 0.80, 0.78], // pole
    [0.80, 0.20, 0.15], // pedestrian
];

/// Luminance of a class albedo; used as the LiDAR reflectance channel.
pub fn albedo_luminance(class: u16) -> f64 {
    let [r, g, b] = CLASS_ALBEDO[class as usize];
    0.2126 * r + 0.7152 * g + 0.0722 * b
}

/// Analytic scene primitive in world coordinates (x forward, y left, z up;
/// ground at z = 0).
#[derive(Clone, Debug)]
pub enum Primitive {
    /// Axis-aligned box.
    Box {
        min: [f64; 3],
        max: [f64; 3],
        class: u16,
    },
    /// Finite vertical cylinder (side surface only).
    Cylinder {
        x: f64,
        y: f64,
        radius: f64,
        z0: f64,
        z1: f64,
        class: u16,
    },
}

impl Primitive {
    pub fn class(&self) -> u16 {
        match self {
            Primitive::Box { class, .. } | Primitive::Cylinder { class, .. } => *class,
        }
    }

    /// Containment with a safety margin, for keeping sensors outside.
    pub fn contains(&self, p: [f64; 3], margin: f64) -> bool {
        match self {
            Primitive::Box { min, max, .. } => (0..3).all(|i| {
                p[i] > min[i] - margin && p[i] < max[i] + margin
            }),
            Primitive::Cylinder {
                x,
                y,
                radius,
                z0,
                z1,
                ..
            } => {
                let dx = p[0] - x;
                let dy = p[1] - y;
                dx * dx + dy * dy < (radius + margin) * (radius + margin)
                    && p[2] > z0 - margin
                    && p[2] < z1 + margin
            }
        }
    }
}

/// A generated scene; the ground plane is present unless a test disables it.
#[derive(Clone, Debug)]
pub struct SceneSpec {
    pub seed: u64,
    pub has_ground: bool,
    pub primitives: Vec<Primitive>,
}

impl SceneSpec {
    pub fn count_class(&self, class: u16) -> usize {
        self.primitives.iter().filter(|p| p.class() == class).count()
    }
}

/// Primitive count ranges (inclusive) and placement area.
#[derive(Clone, Copy, Debug)]
pub struct SceneGenConfig {
    pub vehicles: (usize, usize),
    pub poles: (usize, usize),
    pub pedestrians: (usize, usize),
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub max_retries: usize,
}

impl Default for SceneGenConfig {
    fn default() -> Self {
        SceneGenConfig {
            vehicles: (1, 2),
            poles: (1, 3),
            pedestrians: (1, 2),
            x_range: (7.0, 14.0),
            y_range: (-6.0, 6.0),
            max_retries: 64,
        }
    }
}

impl SceneGenConfig {
    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.vehicles, self.poles, self.pedestrians] {
            if lo > hi {
                return Err(Error::InvalidInput("primitive count range inverted".into()));
            }
        }
        if self.x_range.0 >= self.x_range.1 || self.y_range.0 >= self.y_range.1 {
            return Err(Error::InvalidInput("placement range empty".into()));
        }
        Ok(())
    }
}

// sensors sit near the origin; keep primitives clear of both
const SENSOR_POSITIONS: [[f64; 3]; 2] = [[0.0, 0.0, 1.8], [0.2, 0.0, 1.6]];
const SENSOR_MARGIN: f64 = 0.5;

fn clear_of_sensors(p: &Primitive) -> bool {
    SENSOR_POSITIONS
        .iter()
        .all(|&s| !p.contains(s, SENSOR_MARGIN))
}

/// Draws a deterministic scene: primitive counts uniform in their configured
/// ranges, placements rejected (and retried) if they would swallow a sensor.
pub fn generate_scene(mut rng: Rng, cfg: &SceneGenConfig) -> Result<SceneSpec> {
    cfg.validate()?;
    let seed_tag = rng.next_u64();
    let mut primitives = Vec::new();

    let n_vehicles = cfg.vehicles.0 + rng.range_usize(cfg.vehicles.1 - cfg.vehicles.0 + 1);
    let n_poles = cfg.poles.0 + rng.range_usize(cfg.poles.1 - cfg.poles.0 + 1);
    let n_peds = cfg.pedestrians.0 + rng.range_usize(cfg.pedestrians.1 - cfg.pedestrians.0 + 1);

    let place = |rng: &mut Rng, build: &dyn Fn(&mut Rng, f64, f64) -> Primitive| -> Result<Primitive> {
        for _ in 0..cfg.max_retries {
            let x = rng.range_f64(cfg.x_range.0, cfg.x_range.1);
            let y = rng.range_f64(cfg.y_range.0, cfg.y_range.1);
            let candidate = build(rng, x, y);
            if clear_of_sensors(&candidate) {
                return Ok(candidate);
            }
        }
        Err(Error::PlacementInfeasible {
            retries: cfg.max_retries,
        })
    };

    for _ in 0..n_vehicles {
        primitives.push(place(&mut rng, &|rng, x, y| {
            let lx = rng.range_f64(3.2, 4.8);
            let ly = rng.range_f64(1.6, 2.1);
            let lz = rng.range_f64(1.4, 1.9);
            Primitive::Box {
                min: [x - lx / 2.0, y - ly / 2.0, 0.0],
                max: [x + lx / 2.0, y + ly / 2.0, lz],
                class: CLASS_VEHICLE,
            }
        })?);
    }
    for _ in 0..n_poles {
        primitives.push(place(&mut rng, &|rng, x, y| Primitive::Cylinder {
            x,
            y,
            radius: rng.range_f64(0.08, 0.18),
            z0: 0.0,
            z1: rng.range_f64(2.5, 4.5),
            class: CLASS_POLE,
        })?);
    }
    for _ in 0..n_peds {
        primitives.push(place(&mut rng, &|rng, x, y| {
            let lx = rng.range_f64(0.4, 0.7);
            let ly = rng.range_f64(0.4, 0.7);
            let lz = rng.range_f64(1.5, 1.85);
            Primitive::Box {
                min: [x - lx / 2.0, y - ly / 2.0, 0.0],
                max: [x + lx / 2.0, y + ly / 2.0, lz],
                class: CLASS_PEDESTRIAN,
            }
        })?);
    }

    Ok(SceneSpec {
        seed: seed_tag,
        has_ground: true,
        primitives,
    })
}
