//! Seeded value noise on surface coordinates.
//!
//! Everything here is integer hashing plus a handful of f64 multiply/adds,
//! so a given seed yields the same intensities on every platform.

/// SplitMix64 finaliser.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Lattice value in `[0, 1)` for cell `(i, j)` of surface `key`.
#[inline]
fn lattice(key: u64, i: i64, j: i64) -> f64 {
    let h = mix(key ^ mix(i as u64 ^ mix(j as u64)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Bilinearly interpolated lattice noise at `(u, v)` in cell units.
fn value_noise(key: u64, u: f64, v: f64) -> f64 {
    let (fu, fv) = (u.floor(), v.floor());
    let (i, j) = (fu as i64, fv as i64);
    let (tu, tv) = (u - fu, v - fv);
    let a = lattice(key, i, j);
    let b = lattice(key, i + 1, j);
    let c = lattice(key, i, j + 1);
    let d = lattice(key, i + 1, j + 1);
    let top = a + (b - a) * tu;
    let bottom = c + (d - c) * tu;
    top + (bottom - top) * tv
}

/// Two-octave surface texture: a fine octave at `texel` metres and a coarse
/// one at four times that size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceTexture {
    key: u64,
    texel: f64,
}

impl SurfaceTexture {
    pub fn new(seed: u64, surface: u64, texel: f64) -> Self {
        debug_assert!(texel > 0.0);
        Self {
            key: mix(seed ^ mix(surface)),
            texel,
        }
    }

    /// Intensity at surface coordinates `(u, v)` in metres.
    pub fn sample(&self, u: f64, v: f64) -> u8 {
        let (u, v) = (u / self.texel, v / self.texel);
        let fine = value_noise(self.key, u, v);
        let coarse = value_noise(self.key ^ 0xA5A5_A5A5_A5A5_A5A5, u * 0.25, v * 0.25);
        let x = 0.7 * fine + 0.3 * coarse;
        // Stretch the mid range; bilinear averaging compresses contrast.
        let x = ((x - 0.5) * 1.8 + 0.5).clamp(0.0, 1.0);
        (x * 255.0).round() as u8
    }
}
