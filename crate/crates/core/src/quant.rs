//! Fixed-point emulation of the hardware tracker's arithmetic.
//!
//! A [`FixedFormat`] describes a Q`i`.`f` number. Signed formats count the sign
//! bit inside `integer_bits`, so signed Q8.4 spans `[-128, 127.9375]`.
//! Quantization rounds to nearest (ties away from zero) and saturates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedFormat {
    pub integer_bits: u32,
    pub fraction_bits: u32,
    pub signed: bool,
}

impl FixedFormat {
    pub fn new(integer_bits: u32, fraction_bits: u32, signed: bool) -> Result<Self> {
        if integer_bits + fraction_bits > 32 {
            return Err(Error::Config(format!(
                "Q{integer_bits}.{fraction_bits} exceeds 32 bits"
            )));
        }
        if signed && integer_bits == 0 {
            return Err(Error::Config("signed format needs a sign bit".into()));
        }
        Ok(FixedFormat {
            integer_bits,
            fraction_bits,
            signed,
        })
    }

    pub fn signed(integer_bits: u32, fraction_bits: u32) -> Result<Self> {
        Self::new(integer_bits, fraction_bits, true)
    }

    pub fn unsigned(integer_bits: u32, fraction_bits: u32) -> Result<Self> {
        Self::new(integer_bits, fraction_bits, false)
    }

    fn scale(&self) -> f64 {
        (self.fraction_bits as f64).exp2()
    }

    /// Smallest and largest raw integer codes.
    pub fn raw_range(&self) -> (i64, i64) {
        let total = self.integer_bits + self.fraction_bits;
        if self.signed {
            (-(1i64 << (total - 1)), (1i64 << (total - 1)) - 1)
        } else {
            (0, (1i64 << total) - 1)
        }
    }

    pub fn min_value(&self) -> f64 {
        self.raw_range().0 as f64 / self.scale()
    }

    pub fn max_value(&self) -> f64 {
        self.raw_range().1 as f64 / self.scale()
    }

    /// Raw integer code of the nearest representable value.
    pub fn to_raw(&self, value: f64) -> i64 {
        let (lo, hi) = self.raw_range();
        if value.is_nan() {
            return 0;
        }
        // f64::round rounds ties away from zero
        let scaled = (value * self.scale()).round();
        if scaled <= lo as f64 {
            lo
        } else if scaled >= hi as f64 {
            hi
        } else {
            scaled as i64
        }
    }

    pub fn from_raw(&self, raw: i64) -> f64 {
        raw as f64 / self.scale()
    }
}

/// Round-to-nearest then saturate; returns the representable real value.
pub fn quantize(value: f64, fmt: FixedFormat) -> f64 {
    fmt.from_raw(fmt.to_raw(value))
}

/// Bit widths of the emulated datapath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointConfig {
    pub enabled: bool,
    /// Integer bits of unsigned positions/sizes.
    pub pos_bits: u32,
    /// Fraction bits of positions and displacements.
    pub pos_frac_bits: u32,
    pub vel_int_bits: u32,
    pub vel_frac_bits: u32,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            enabled: false,
            pos_bits: 9,
            pos_frac_bits: 0,
            vel_int_bits: 8,
            vel_frac_bits: 4,
        }
    }
}

/// The three number formats the tracker routes intermediates through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Datapath {
    /// Absolute positions and sizes.
    pub pos: FixedFormat,
    /// Signed position differences and displacements.
    pub disp: FixedFormat,
    pub vel: FixedFormat,
}

impl FixedPointConfig {
    pub fn datapath(&self) -> Result<Datapath> {
        Ok(Datapath {
            pos: FixedFormat::unsigned(self.pos_bits, self.pos_frac_bits)?,
            disp: FixedFormat::signed(self.pos_bits, self.pos_frac_bits)?,
            vel: FixedFormat::signed(self.vel_int_bits, self.vel_frac_bits)?,
        })
    }
}

/// Arithmetic mode of the tracker: exact `f64` or an emulated fixed datapath.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Arith {
    #[default]
    Float,
    Fixed(Datapath),
}

impl Arith {
    #[inline]
    pub fn pos(&self, v: f64) -> f64 {
        match self {
            Arith::Float => v,
            Arith::Fixed(d) => quantize(v, d.pos),
        }
    }

    #[inline]
    pub fn disp(&self, v: f64) -> f64 {
        match self {
            Arith::Float => v,
            Arith::Fixed(d) => quantize(v, d.disp),
        }
    }

    #[inline]
    pub fn vel(&self, v: f64) -> f64 {
        match self {
            Arith::Float => v,
            Arith::Fixed(d) => quantize(v, d.vel),
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Arith::Fixed(_))
    }
}

/// Snaps a blend weight to the nearest multiple of 1/4 (shift-and-add friendly).
pub fn snap_alpha(alpha: f64) -> f64 {
    ((alpha.clamp(0.0, 1.0) * 4.0).round()) / 4.0
}
