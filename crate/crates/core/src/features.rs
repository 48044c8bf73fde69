//! 16-bin gray-level histogram features: the fraction of pixels falling in
//! each equal-width intensity interval [0,15], [16,31], ..., [240,255],
//! optionally after per-image min-max rescaling of intensities.

use serde::{Deserialize, Serialize};

use crate::imaging::GrayImage;

pub const N_BINS: usize = 16;

/// Histogram feature vector. Bins are fractions summing to 1; the flag
/// records whether min-max normalization preceded binning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramFeatures {
    pub bins: [f64; N_BINS],
    pub normalized_input: bool,
}

/// Compute the 16-bin gray-level histogram of an image.
///
/// With `normalize_first`, intensities are first rescaled so the image
/// minimum maps to 0 and the maximum to 255 (round half away from zero); a
/// constant image collapses entirely into bin 0. Bin k counts pixels in
/// [16k, 16k + 15]; counts are divided by the pixel total.
pub fn gray_level_histogram(img: &GrayImage, normalize_first: bool) -> HistogramFeatures {
    let pixels = img.pixels();
    let mut counts = [0u64; N_BINS];

    if normalize_first {
        let min = *pixels.iter().min().unwrap() as f64;
        let max = *pixels.iter().max().unwrap() as f64;
        if max > min {
            for &p in pixels {
                let rescaled = ((p as f64 - min) * 255.0 / (max - min)).round() as usize;
                counts[rescaled >> 4] += 1;
            }
        } else {
            counts[0] = pixels.len() as u64;
        }
    } else {
        for &p in pixels {
            counts[(p >> 4) as usize] += 1;
        }
    }

    let total = pixels.len() as f64;
    let mut bins = [0.0; N_BINS];
    for (b, &c) in bins.iter_mut().zip(&counts) {
        *b = c as f64 / total;
    }
    HistogramFeatures {
        bins,
        normalized_input: normalize_first,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn image(width: usize, height: usize, pixels: Vec<u8>) -> GrayImage {
        GrayImage::new(width, height, pixels, "i", "p").unwrap()
    }

    #[test]
    fn all_zero_image_fills_bin_zero() {
        let img = image(8, 8, vec![0; 64]);
        let h = gray_level_histogram(&img, false);
        assert_eq!(h.bins[0], 1.0);
        assert!(h.bins[1..].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn half_black_half_white() {
        let mut px = vec![0u8; 32];
        px.extend(vec![255u8; 32]);
        let h = gray_level_histogram(&image(8, 8, px), false);
        assert_eq!(h.bins[0], 0.5);
        assert_eq!(h.bins[15], 0.5);
        assert_eq!(h.bins[1..15].iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn four_pixel_hand_binned() {
        // 10 -> bin 0, 20 -> bin 1, 200 -> bin 12, 250 -> bin 15
        let h = gray_level_histogram(&image(2, 2, vec![10, 20, 200, 250]), false);
        let mut expected = [0.0; N_BINS];
        expected[0] = 0.25;
        expected[1] = 0.25;
        expected[12] = 0.25;
        expected[15] = 0.25;
        assert_eq!(h.bins, expected);
    }

    #[test]
    fn constant_image_normalized_goes_to_bin_zero() {
        let h = gray_level_histogram(&image(4, 4, vec![137; 16]), true);
        assert_eq!(h.bins[0], 1.0);
    }

    #[test]
    fn normalization_stretches_to_full_range() {
        // min 100 -> 0, max 108 -> 255; midpoints spread over the full range
        let h = gray_level_histogram(&image(3, 3, vec![100, 100, 102, 102, 104, 104, 106, 108, 108]), true);
        assert!(h.bins[0] > 0.0);
        assert!(h.bins[15] > 0.0);
        assert!(h.normalized_input);
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut px: Vec<u8> = (0..100).map(|_| rng.gen()).collect();
        let before = gray_level_histogram(&image(10, 10, px.clone()), false);
        // deterministic shuffle
        for i in (1..px.len()).rev() {
            px.swap(i, rng.gen_range(0..=i));
        }
        let after = gray_level_histogram(&image(10, 10, px), false);
        assert_eq!(before.bins, after.bins);
    }

    #[test]
    fn affine_intensity_map_cancelled_by_normalization() {
        // p -> 2p + 10 stays in range for p <= 122; histograms agree after
        // min-max rescaling up to one bin-boundary quantization
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let px: Vec<u8> = (0..400).map(|_| rng.gen_range(0..=122)).collect();
        let mapped: Vec<u8> = px.iter().map(|&p| 2 * p + 10).collect();
        let a = gray_level_histogram(&image(20, 20, px), true);
        let b = gray_level_histogram(&image(20, 20, mapped), true);
        // mass may shift by at most one bin under quantization
        for k in 0..N_BINS {
            let lo = if k == 0 { 0.0 } else { b.bins[k - 1] };
            let hi = if k == N_BINS - 1 { 0.0 } else { b.bins[k + 1] };
            assert!(
                a.bins[k] <= b.bins[k] + lo + hi + 1e-12,
                "bin {k}: {} vs {} (+neighbors)",
                a.bins[k],
                b.bins[k]
            );
        }
    }

    #[test]
    fn bins_sum_to_one_exactly_in_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let w = rng.gen_range(1..20);
            let h = rng.gen_range(1..20);
            let px: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
            let img = image(w, h, px.clone());
            let feats = gray_level_histogram(&img, rng.gen_bool(0.5));
            let sum: f64 = feats.bins.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            // rational check: reconstructed counts are integers summing to the total
            let total = (w * h) as f64;
            let mut count_sum = 0u64;
            for b in feats.bins {
                let c = b * total;
                assert!((c - c.round()).abs() < 1e-9);
                count_sum += c.round() as u64;
            }
            assert_eq!(count_sum, (w * h) as u64);
        }
    }

    #[test]
    fn matches_per_pixel_hand_binning() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let w = rng.gen_range(1..16);
            let h = rng.gen_range(1..16);
            let px: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
            let img = image(w, h, px.clone());
            let fast = gray_level_histogram(&img, false);
            let mut counts = [0u64; N_BINS];
            for &p in &px {
                for (k, count) in counts.iter_mut().enumerate() {
                    let lo = (16 * k) as u8;
                    let hi = (16 * k + 15) as u8;
                    if p >= lo && p <= hi {
                        *count += 1;
                    }
                }
            }
            let slow = counts.map(|c| c as f64 / (w * h) as f64);
            assert_eq!(fast.bins, slow);
        }
    }
}
