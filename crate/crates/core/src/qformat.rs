//! 16-bit fixed-point sample representation.
//!
//! All samples and weights in the accelerator model are signed 16-bit
//! values with an explicit number of fractional bits. Arithmetic helpers
//! here define the exact rounding and saturation behaviour used by the
//! functional engine and the tiled replay path, so both agree bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-point format annotation for a 16-bit signed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QFormat {
    /// Fractional bits, in `[0, 15]`.
    pub frac_bits: u8,
}

impl QFormat {
    pub const TOTAL_BITS: u32 = 16;

    pub fn new(frac_bits: u8) -> Result<Self> {
        if frac_bits > 15 {
            return Err(Error::Parse(format!(
                "frac_bits {frac_bits} out of range [0, 15]"
            )));
        }
        Ok(Self { frac_bits })
    }

    /// Default activation/weight format: Q8.8.
    pub fn q8_8() -> Self {
        Self { frac_bits: 8 }
    }

    /// Scale factor 2^-frac_bits as f64, for display only.
    pub fn scale(&self) -> f64 {
        (2f64).powi(-(self.frac_bits as i32))
    }
}

impl Default for QFormat {
    fn default() -> Self {
        Self::q8_8()
    }
}

/// Arithmetic right shift with round-to-nearest-even on the shifted-out bits.
///
/// `value = floor * 2^shift + rem` with `0 <= rem < 2^shift`; the result is
/// `floor` rounded toward the nearest integer, ties to even.
pub fn rne_shift(value: i64, shift: u32) -> i64 {
    if shift == 0 {
        return value;
    }
    debug_assert!(shift < 63);
    let floor = value >> shift;
    let rem = value & ((1i64 << shift) - 1);
    let half = 1i64 << (shift - 1);
    if rem > half || (rem == half && (floor & 1) != 0) {
        floor + 1
    } else {
        floor
    }
}

/// Saturate a wide value to the signed 16-bit range, reporting whether
/// clamping happened.
pub fn saturate_i16(value: i64) -> (i16, bool) {
    if value > i16::MAX as i64 {
        (i16::MAX, true)
    } else if value < i16::MIN as i64 {
        (i16::MIN, true)
    } else {
        (value as i16, false)
    }
}

/// Saturating add of two 16-bit samples, reporting clamping.
pub fn sat_add_i16(a: i16, b: i16) -> (i16, bool) {
    saturate_i16(a as i64 + b as i64)
}

/// Channels x time array of 16-bit fixed-point samples.
///
/// Data is stored row-major per channel: `data[ch * length + t]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QTensor {
    pub channels: usize,
    pub length: usize,
    pub data: Vec<i16>,
    pub qformat: QFormat,
}

impl QTensor {
    pub fn new(channels: usize, length: usize, qformat: QFormat) -> Self {
        Self {
            channels,
            length,
            data: vec![0; channels * length],
            qformat,
        }
    }

    pub fn from_data(
        channels: usize,
        length: usize,
        data: Vec<i16>,
        qformat: QFormat,
    ) -> Result<Self> {
        if data.len() != channels * length {
            return Err(Error::Shape(format!(
                "tensor data has {} values, expected {} ({} channels x {} samples)",
                data.len(),
                channels * length,
                channels,
                length
            )));
        }
        Ok(Self {
            channels,
            length,
            data,
            qformat,
        })
    }

    #[inline]
    pub fn get(&self, channel: usize, t: usize) -> i16 {
        self.data[channel * self.length + t]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, t: usize, value: i16) {
        self.data[channel * self.length + t] = value;
    }

    /// Slice of one channel's samples.
    pub fn channel(&self, channel: usize) -> &[i16] {
        &self.data[channel * self.length..(channel + 1) * self.length]
    }

    /// Copy of the trailing `count` samples of every channel.
    pub fn tail(&self, count: usize) -> QTensor {
        assert!(count <= self.length);
        let mut out = QTensor::new(self.channels, count, self.qformat);
        for c in 0..self.channels {
            let src = &self.channel(c)[self.length - count..];
            out.data[c * count..(c + 1) * count].copy_from_slice(src);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rne_rounds_ties_to_even() {
        // 2.5 -> 2, 3.5 -> 4 in units of one shifted bit
        assert_eq!(rne_shift(5, 1), 2);
        assert_eq!(rne_shift(7, 1), 4);
        assert_eq!(rne_shift(6, 2), 2); // 1.5 -> 2
        assert_eq!(rne_shift(10, 2), 2); // 2.5 -> 2
        assert_eq!(rne_shift(-5, 1), -2); // -2.5 -> -2
        assert_eq!(rne_shift(-7, 1), -4); // -3.5 -> -4
        assert_eq!(rne_shift(-6, 2), -2); // -1.5 -> -2
        assert_eq!(rne_shift(123, 0), 123);
    }

    #[test]
    fn rne_matches_float_reference_on_random_values() {
        // Cross-check against a rational reference for a spread of values.
        for shift in 1..12u32 {
            for v in (-5000i64..5000).step_by(37) {
                let got = rne_shift(v, shift);
                let exact = v as f64 / (1i64 << shift) as f64;
                let nearest = exact.round();
                let expect = if (exact - exact.floor() - 0.5).abs() < 1e-12 {
                    // tie: pick even
                    let lo = exact.floor();
                    if (lo as i64) % 2 == 0 {
                        lo
                    } else {
                        lo + 1.0
                    }
                } else {
                    nearest
                };
                assert_eq!(got, expect as i64, "v={v} shift={shift}");
            }
        }
    }

    #[test]
    fn saturation_clamps_and_reports() {
        assert_eq!(saturate_i16(40000), (i16::MAX, true));
        assert_eq!(saturate_i16(-40000), (i16::MIN, true));
        assert_eq!(saturate_i16(123), (123, false));
        assert_eq!(sat_add_i16(i16::MAX, i16::MAX), (i16::MAX, true));
        assert_eq!(sat_add_i16(i16::MIN, -1), (i16::MIN, true));
        assert_eq!(sat_add_i16(100, -30), (70, false));
    }

    #[test]
    fn tensor_layout_round_trips() {
        let mut t = QTensor::new(2, 3, QFormat::q8_8());
        t.set(1, 2, -7);
        t.set(0, 0, 5);
        assert_eq!(t.get(1, 2), -7);
        assert_eq!(t.channel(0), &[5, 0, 0]);
        let tail = t.tail(1);
        assert_eq!(tail.channel(1), &[-7]);
    }

    #[test]
    fn qformat_range_checked() {
        assert!(QFormat::new(16).is_err());
        assert_eq!(QFormat::new(8).unwrap(), QFormat::q8_8());
    }
}
