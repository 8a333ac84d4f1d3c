use crate::error::{Error, Result};
use crate::imgdata::{Image, Pixel};

/// Cuts a `tile_size × tile_size` tile centred on `center`.
///
/// The centre pixel lands at index `tile_size / 2` on both axes, so the tile
/// spans rows `row - T/2 ..= row + T/2 - 1` (likewise for columns). Positions
/// outside the image are zero.
pub fn extract_tile(img: &Image, center: Pixel, tile_size: usize) -> Result<Image> {
    if tile_size < 2 || !tile_size.is_multiple_of(2) {
        return Err(Error::param(format!(
            "tile size must be even and at least 2, got {tile_size}"
        )));
    }
    img.check_bounds(center)?;
    let channels = img.channels();
    let half = (tile_size / 2) as isize;
    let (row0, col0) = (center.0 as isize - half, center.1 as isize - half);
    let mut data = vec![0.0f32; tile_size * tile_size * channels];

    // Only the in-image column span of each row is copied; the rest stays zero.
    let col_lo = (-col0).max(0) as usize;
    let col_hi = (img.width() as isize - col0).clamp(0, tile_size as isize) as usize;
    if col_lo < col_hi {
        for tr in 0..tile_size {
            let r = row0 + tr as isize;
            if r < 0 || r >= img.height() as isize {
                continue;
            }
            let src_start = (r as usize * img.width() + (col0 + col_lo as isize) as usize) * channels;
            let len = (col_hi - col_lo) * channels;
            let dst_start = (tr * tile_size + col_lo) * channels;
            data[dst_start..dst_start + len].copy_from_slice(&img.data()[src_start..src_start + len]);
        }
    }
    Image::new(tile_size, tile_size, channels, data)
}
