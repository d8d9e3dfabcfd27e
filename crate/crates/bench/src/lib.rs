//! Shared fixtures for the criterion benches.

use bcs_core::GrayImage;

/// Deterministic smooth-plus-texture test card.
pub fn test_card(width: usize, height: usize) -> GrayImage {
    GrayImage::from_fn(width, height, |r, c| {
        let smooth = (r + c) as f64 / (width + height) as f64 * 180.0;
        let texture = ((r * 7 + c * 13) % 32) as f64;
        (smooth + texture) as u8
    })
    .expect("non-empty card")
}
