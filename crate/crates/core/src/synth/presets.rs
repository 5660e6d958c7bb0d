use super::{SceneObject, SceneSpec};
use crate::error::{Error, Result};
use crate::event_io::Sensor;

pub const PRESETS: &[&str] = &[
    "single_const_velocity",
    "crossing_opposite",
    "overtake_same_direction",
    "enter_exit",
    "nine_objects",
    "human_scale",
];

const RATE: f64 = 1000.0;
const NOISE: f64 = 0.1;

fn object(id: u64, (w, h): (u32, u32), (x0, y0): (f64, f64), (vx, vy): (f64, f64)) -> SceneObject {
    SceneObject {
        id,
        w,
        h,
        x0,
        y0,
        vx,
        vy,
        rate: RATE,
        t_enter_us: 0,
        t_exit_us: None,
        edge_px: 2,
    }
}

fn scene(duration_us: u64, seed: u64, objects: Vec<SceneObject>) -> SceneSpec {
    SceneSpec {
        sensor: Sensor::default(),
        duration_us,
        frame_period_us: 33_000,
        tick_us: 500,
        noise_rate: NOISE,
        seed,
        objects,
    }
}

/// Named canonical scenario on the default 240x180 sensor.
pub fn preset(name: &str, seed: u64) -> Result<SceneSpec> {
    let spec = match name {
        // 30 frames of 33 ms
        "single_const_velocity" => scene(
            990_000,
            seed,
            vec![object(1, (30, 16), (30.0, 80.0), (100.0, 0.0))],
        ),
        // head-on pass, lanes offset so the blob grows vertically too
        "crossing_opposite" => scene(
            2_000_000,
            seed,
            vec![
                object(1, (30, 16), (20.0, 88.0), (80.0, 0.0)),
                object(2, (24, 14), (190.0, 80.0), (-80.0, 0.0)),
            ],
        ),
        "overtake_same_direction" => scene(
            2_000_000,
            seed,
            vec![
                object(1, (30, 16), (10.0, 84.0), (90.0, 0.0)),
                object(2, (24, 14), (70.0, 80.0), (40.0, 0.0)),
            ],
        ),
        "enter_exit" => scene(
            3_000_000,
            seed,
            vec![object(1, (28, 14), (-20.0, 60.0), (100.0, 0.0))],
        ),
        "nine_objects" => {
            let mut objs = Vec::new();
            for (r, y) in [30.0, 85.0, 140.0].into_iter().enumerate() {
                for (c, x) in [30.0, 110.0, 190.0].into_iter().enumerate() {
                    let id = (r * 3 + c + 1) as u64;
                    let vx = if id.is_multiple_of(2) { 10.0 } else { -10.0 };
                    objs.push(object(id, (16, 12), (x, y), (vx, 0.0)));
                }
            }
            scene(1_000_000, seed, objs)
        }
        "human_scale" => {
            let mut o = object(1, (6, 14), (100.0, 90.0), (15.0, 0.0));
            o.rate = 600.0;
            scene(2_000_000, seed, vec![o])
        }
        other => {
            return Err(Error::Validation(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(spec)
}
