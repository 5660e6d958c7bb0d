//! Axis-aligned pixel boxes.
//!
//! `Region` is the integer box used for proposals, predictions and ground
//! truth. `RegionF` carries sub-pixel track state and interpolated boxes.

use serde::{Deserialize, Serialize};

/// Top-left corner plus width/height, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Region {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl Region {
    pub const fn new(x: i32, y: i32, w: i32, h: i32) -> Self {
        Region { x, y, w, h }
    }

    pub fn area(&self) -> i64 {
        i64::from(self.w.max(0)) * i64::from(self.h.max(0))
    }

    pub fn right(&self) -> i32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> i32 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (
            f64::from(self.x) + f64::from(self.w) / 2.0,
            f64::from(self.y) + f64::from(self.h) / 2.0,
        )
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &Region) -> Region {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        Region {
            x,
            y,
            w: self.right().max(other.right()) - x,
            h: self.bottom().max(other.bottom()) - y,
        }
    }

    /// Intersection with `[0,width) x [0,height)`; `None` when nothing remains.
    pub fn clip(&self, width: u32, height: u32) -> Option<Region> {
        let x0 = self.x.max(0);
        let y0 = self.y.max(0);
        let x1 = self.right().min(width as i32);
        let y1 = self.bottom().min(height as i32);
        (x1 > x0 && y1 > y0).then(|| Region::new(x0, y0, x1 - x0, y1 - y0))
    }

    /// Shift (never resize, unless larger than the frame) so the box lies inside the frame.
    pub fn clamp_inside(&self, width: u32, height: u32) -> Region {
        let w = self.w.clamp(1, width as i32);
        let h = self.h.clamp(1, height as i32);
        Region {
            x: self.x.clamp(0, width as i32 - w),
            y: self.y.clamp(0, height as i32 - h),
            w,
            h,
        }
    }

    pub fn contains_pixel(&self, x: i32, y: i32) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn to_f64(self) -> RegionF {
        RegionF {
            x: f64::from(self.x),
            y: f64::from(self.y),
            w: f64::from(self.w),
            h: f64::from(self.h),
        }
    }
}

/// Sub-pixel box.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionF {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl RegionF {
    pub fn lerp(&self, other: &RegionF, lambda: f64) -> RegionF {
        RegionF {
            x: self.x + lambda * (other.x - self.x),
            y: self.y + lambda * (other.y - self.y),
            w: self.w + lambda * (other.w - self.w),
            h: self.h + lambda * (other.h - self.h),
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Shift so the box lies inside the frame; sizes are kept within `[1, frame]`.
    pub fn clamp_inside(&self, width: u32, height: u32) -> RegionF {
        let (fw, fh) = (f64::from(width), f64::from(height));
        let w = self.w.clamp(1.0, fw);
        let h = self.h.clamp(1.0, fh);
        RegionF {
            x: self.x.clamp(0.0, fw - w),
            y: self.y.clamp(0.0, fh - h),
            w,
            h,
        }
    }

    /// Nearest pixel box: each edge rounds to the nearest pixel boundary,
    /// ties up, so a box inside the frame stays inside.
    pub fn round(&self) -> Region {
        let (x, y) = (round_half_up(self.x), round_half_up(self.y));
        Region {
            x,
            y,
            w: (round_half_up(self.x + self.w) - x).max(1),
            h: (round_half_up(self.y + self.h) - y).max(1),
        }
    }
}

/// Values this close below a half still count as the half, so ties reached
/// through different roundoff round the same way.
pub const TIE_SLACK: f64 = 1e-6;

/// Round to the nearest integer, ties toward +infinity.
pub fn round_half_up(v: f64) -> i32 {
    (v + 0.5 + TIE_SLACK).floor() as i32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_ties_go_up() {
        assert_eq!(round_half_up(11.5), 12);
        assert_eq!(round_half_up(-0.5), 0);
        assert_eq!(round_half_up(-1.5), -1);
        assert_eq!(round_half_up(2.49), 2);
        assert_eq!(round_half_up(11.5 - 1e-9), 12);
        assert_eq!(round_half_up(11.5 + 1e-9), 12);
    }

    #[test]
    fn clip_and_clamp() {
        let r = Region::new(230, 10, 20, 10);
        assert_eq!(r.clip(240, 180), Some(Region::new(230, 10, 10, 10)));
        assert_eq!(r.clamp_inside(240, 180), Region::new(220, 10, 20, 10));
        assert_eq!(Region::new(-30, 0, 20, 5).clip(240, 180), None);
    }

    #[test]
    fn union_is_bounding_box() {
        let a = Region::new(0, 0, 4, 4);
        let b = Region::new(6, 2, 4, 4);
        assert_eq!(a.union(&b), Region::new(0, 0, 10, 6));
    }

    #[test]
    fn rounding_uses_edges() {
        let r = RegionF {
            x: 159.6,
            y: 0.4,
            w: 20.4,
            h: 1.0,
        };
        assert_eq!(r.round(), Region::new(160, 0, 20, 1));
        assert_eq!(
            RegionF {
                x: 0.4,
                y: 0.0,
                w: 0.2,
                h: 1.0
            }
            .round()
            .w,
            1
        );
    }

    proptest::proptest! {
        #[test]
        fn rounded_box_stays_inside(
            x in 0.0f64..300.0, y in 0.0f64..300.0, w in 0.0f64..300.0, h in 0.0f64..300.0,
        ) {
            let r = RegionF { x, y, w, h }.clamp_inside(240, 180).round();
            proptest::prop_assert!(r.x >= 0 && r.y >= 0 && r.w >= 1 && r.h >= 1);
            proptest::prop_assert!(r.right() <= 240 && r.bottom() <= 180, "{:?}", r);
        }
    }
}
