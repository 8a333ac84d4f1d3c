//! Exact Euclidean distance transform.
//!
//! Two separable passes of the lower-envelope-of-parabolas transform: first
//! along columns, then along rows. All distances are kept as exact integer
//! squared distances; the square root is only taken on read.

use crate::error::{Error, Result};
use crate::imgdata::Mask;

/// Squared distances at or above this value mean "no foreground in range".
const INF: u64 = u64::MAX / 4;

/// Per-pixel distance to the nearest foreground pixel of a mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    height: usize,
    width: usize,
    squared: Vec<u64>,
}

impl DistanceField {
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn squared(&self, row: usize, col: usize) -> u64 {
        self.squared[row * self.width + col]
    }

    pub fn distance(&self, row: usize, col: usize) -> f64 {
        (self.squared(row, col) as f64).sqrt()
    }
}

pub fn distance_field(mask: &Mask) -> Result<DistanceField> {
    if mask.is_empty() {
        return Err(Error::UndefinedDistance);
    }
    let (h, w) = mask.dims();
    let mut squared: Vec<u64> = mask
        .data()
        .iter()
        .map(|&v| if v != 0 { 0 } else { INF })
        .collect();

    let mut scratch = Scratch::new(h.max(w));
    let mut line = vec![0u64; h.max(w)];
    let mut out = vec![0u64; h.max(w)];
    for c in 0..w {
        for r in 0..h {
            line[r] = squared[r * w + c];
        }
        transform_1d(&line[..h], &mut out[..h], &mut scratch);
        for r in 0..h {
            squared[r * w + c] = out[r];
        }
    }
    for r in 0..h {
        line[..w].copy_from_slice(&squared[r * w..(r + 1) * w]);
        transform_1d(&line[..w], &mut out[..w], &mut scratch);
        squared[r * w..(r + 1) * w].copy_from_slice(&out[..w]);
    }
    Ok(DistanceField {
        height: h,
        width: w,
        squared,
    })
}

struct Scratch {
    /// Sample positions of the parabolas in the envelope.
    vertex: Vec<usize>,
    /// Left boundary of each parabola's interval.
    boundary: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            vertex: vec![0; n],
            boundary: vec![0.0; n + 1],
        }
    }
}

/// `out[q] = min_p (q - p)² + f[p]` over finite `f[p]`.
fn transform_1d(f: &[u64], out: &mut [u64], s: &mut Scratch) {
    let n = f.len();
    let mut k: isize = -1;
    for q in 0..n {
        if f[q] >= INF {
            continue;
        }
        let fq = f[q] as f64 + (q * q) as f64;
        while k >= 0 {
            let v = s.vertex[k as usize];
            let fv = f[v] as f64 + (v * v) as f64;
            let cross = (fq - fv) / (2.0 * (q - v) as f64);
            if cross <= s.boundary[k as usize] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        let ku = k as usize;
        s.vertex[ku] = q;
        s.boundary[ku] = if ku == 0 {
            f64::NEG_INFINITY
        } else {
            let v = s.vertex[ku - 1];
            let fv = f[v] as f64 + (v * v) as f64;
            (fq - fv) / (2.0 * (q - v) as f64)
        };
        s.boundary[ku + 1] = f64::INFINITY;
    }
    if k < 0 {
        out.fill(INF);
        return;
    }
    let mut j = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while s.boundary[j + 1] < q as f64 {
            j += 1;
        }
        let v = s.vertex[j];
        let d = q.abs_diff(v) as u64;
        *slot = d * d + f[v];
    }
}
