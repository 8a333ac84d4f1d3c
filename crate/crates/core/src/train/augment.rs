use rand::Rng;

use crate::imgdata::Image;

/// Largest brightness shift and contrast deviation.
pub const MAX_BRIGHTNESS: f64 = 0.1;
pub const MAX_CONTRAST: f64 = 0.1;

/// A quarter-turn count plus a photometric change
/// `v -> clip(contrast * (v - 0.5) + 0.5 + brightness, 0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Augmentation {
    /// Counter-clockwise quarter turns, 0..4.
    pub quarter_turns: u8,
    pub brightness: f64,
    pub contrast: f64,
}

impl Augmentation {
    pub const IDENTITY: Augmentation = Augmentation {
        quarter_turns: 0,
        brightness: 0.0,
        contrast: 1.0,
    };

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Augmentation {
            quarter_turns: rng.random_range(0..4),
            brightness: rng.random_range(-MAX_BRIGHTNESS..=MAX_BRIGHTNESS),
            contrast: rng.random_range(1.0 - MAX_CONTRAST..=1.0 + MAX_CONTRAST),
        }
    }

    pub fn apply_tile(&self, tile: &Image) -> Image {
        let (h, w, ch) = (tile.height(), tile.width(), tile.channels());
        assert_eq!(h, w, "tiles are square");
        let mut data = tile.data().to_vec();
        for _ in 0..self.quarter_turns {
            data = rotate_grid(&data, h, h / 2, ch);
        }
        let (b, c) = (self.brightness, self.contrast);
        if b != 0.0 || c != 1.0 {
            for v in &mut data {
                *v = (c * (*v as f64 - 0.5) + 0.5 + b).clamp(0.0, 1.0) as f32;
            }
        }
        Image::new(h, w, ch, data).expect("augmented tile stays in range")
    }

    /// Rotates an odd `n × n` grid about its centre cell.
    pub fn apply_grid<T: Copy>(&self, grid: &[T]) -> Vec<T> {
        let n = (grid.len() as f64).sqrt().round() as usize;
        let mut out = grid.to_vec();
        for _ in 0..self.quarter_turns {
            out = rotate_grid(&out, n, n / 2, 1);
        }
        out
    }
}

/// One counter-clockwise quarter turn of an `n × n` grid of `channels`-wide
/// cells about cell `(center, center)`. Offsets wrap modulo `n`, so for even
/// `n` the map is still a permutation that fixes the centre.
pub fn rotate_grid<T: Copy>(data: &[T], n: usize, center: usize, channels: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(data.len());
    for i in 0..n {
        // new[i][j] = old[j][2c - i], i.e. offset (a, b) takes old (b, -a).
        let src_col = (2 * center + n - i) % n;
        for j in 0..n {
            let k = (j * n + src_col) * channels;
            out.extend_from_slice(&data[k..k + channels]);
        }
    }
    out
}

/// Random rotation plus brightness/contrast change; the label grid is
/// rotated with the tile.
pub fn augment<R: Rng + ?Sized>(tile: &Image, label: &[u8], rng: &mut R) -> (Image, Vec<u8>) {
    let aug = Augmentation::random(rng);
    (aug.apply_tile(tile), aug.apply_grid(label))
}
