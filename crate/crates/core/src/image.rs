//! One-bit images plus the netpbm writers used for crop and overlay export.

use bitvec::prelude::*;
use std::io::Write;

use crate::region::Region;

/// Row-major binary image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitImage {
    width: u32,
    height: u32,
    bits: BitVec,
}

impl BitImage {
    pub fn new(width: u32, height: u32) -> Self {
        BitImage {
            width,
            height,
            bits: bitvec![0; (width as usize) * (height as usize)],
        }
    }

    /// Builds an image from row-major 0/1 values.
    pub fn from_rows(rows: &[&[u8]]) -> Self {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.len() as u32);
        let mut img = BitImage::new(width, height);
        for (y, row) in rows.iter().enumerate() {
            assert_eq!(row.len() as u32, width, "ragged rows");
            for (x, &v) in row.iter().enumerate() {
                img.set(x as u32, y as u32, v != 0);
            }
        }
        img
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        (y as usize) * (self.width as usize) + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[self.index(x, y)]
    }

    /// Out-of-range reads return 0 (zero padding).
    #[inline]
    pub fn get_padded(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= i64::from(self.width) || y >= i64::from(self.height) {
            false
        } else {
            self.get(x as u32, y as u32)
        }
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let i = self.index(x, y);
        self.bits.set(i, v);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    /// Active pixels in row-major order as (x, y).
    pub fn ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter_ones()
            .map(move |i| ((i % w) as u32, (i / w) as u32))
    }

    pub fn count_in(&self, r: &Region) -> usize {
        let Some(c) = r.clip(self.width, self.height) else {
            return 0;
        };
        let mut n = 0;
        for y in c.y..c.bottom() {
            let start = self.index(c.x as u32, y as u32);
            n += self.bits[start..start + c.w as usize].count_ones();
        }
        n
    }

    /// Bounding box of active pixels inside `r`.
    pub fn content_bbox(&self, r: &Region) -> Option<Region> {
        let c = r.clip(self.width, self.height)?;
        let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        for y in c.y..c.bottom() {
            for x in c.x..c.right() {
                if self.get(x as u32, y as u32) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        (x1 >= x0).then(|| Region::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }

    /// Binary PBM (P4), rows padded to whole bytes.
    pub fn write_pbm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P4\n{} {}\n", self.width, self.height)?;
        let row_bytes = (self.width as usize).div_ceil(8);
        let mut row = vec![0u8; row_bytes];
        for y in 0..self.height {
            row.fill(0);
            for x in 0..self.width {
                if self.get(x, y) {
                    row[(x / 8) as usize] |= 0x80 >> (x % 8);
                }
            }
            out.write_all(&row)?;
        }
        Ok(())
    }

    /// Parses a binary PBM written by [`BitImage::write_pbm`].
    pub fn read_pbm(data: &[u8]) -> Option<BitImage> {
        let text_end = data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == b'\n')
            .nth(1)
            .map(|(i, _)| i + 1)?;
        let header = std::str::from_utf8(&data[..text_end]).ok()?;
        let mut parts = header.split_whitespace();
        if parts.next()? != "P4" {
            return None;
        }
        let width: u32 = parts.next()?.parse().ok()?;
        let height: u32 = parts.next()?.parse().ok()?;
        let row_bytes = (width as usize).div_ceil(8);
        let body = &data[text_end..];
        if body.len() != row_bytes * height as usize {
            return None;
        }
        let mut img = BitImage::new(width, height);
        for y in 0..height {
            for x in 0..width {
                let byte = body[y as usize * row_bytes + (x / 8) as usize];
                img.set(x, y, byte & (0x80 >> (x % 8)) != 0);
            }
        }
        Some(img)
    }
}

/// 8-bit RGB canvas written as binary PPM (P6).
#[derive(Debug, Clone)]
pub struct RgbCanvas {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl RgbCanvas {
    pub fn from_bits(img: &BitImage, on: [u8; 3], off: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity((img.width() * img.height()) as usize);
        for y in 0..img.height() {
            for x in 0..img.width() {
                pixels.push(if img.get(x, y) { on } else { off });
            }
        }
        RgbCanvas {
            width: img.width(),
            height: img.height(),
            pixels,
        }
    }

    pub fn put(&mut self, x: i32, y: i32, color: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as u32) < self.width && (y as u32) < self.height {
            self.pixels[(y as u32 * self.width + x as u32) as usize] = color;
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    /// One-pixel rectangle outline, clipped to the canvas.
    pub fn draw_rect(&mut self, r: &Region, color: [u8; 3]) {
        if r.w <= 0 || r.h <= 0 {
            return;
        }
        for x in r.x..r.right() {
            self.put(x, r.y, color);
            self.put(x, r.bottom() - 1, color);
        }
        for y in r.y..r.bottom() {
            self.put(r.x, y, color);
            self.put(r.right() - 1, y, color);
        }
    }

    pub fn write_ppm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        for p in &self.pixels {
            out.write_all(p)?;
        }
        Ok(())
    }
}
