use crate::error::{Error, Result};
use crate::loss::OneHotLabel;

/// Side length images are resized to before feature extraction.
pub const DEFAULT_IMAGE_SIZE: usize = 64;

/// Maps 8-bit intensities to `[-1, 1]` via `x / 127.5 - 1`.
pub fn scale_pixels(raw: &[i32]) -> Result<Vec<f64>> {
    raw.iter()
        .map(|&x| {
            if (0..=255).contains(&x) {
                Ok(f64::from(x) / 127.5 - 1.0)
            } else {
                Err(Error::domain(format!("pixel value {x} outside [0, 255]")))
            }
        })
        .collect()
}

/// Inverse of [`scale_pixels`].
pub fn unscale_pixels(scaled: &[f64]) -> Vec<f64> {
    scaled.iter().map(|x| (x + 1.0) * 127.5).collect()
}

pub fn one_hot(label: usize, num_classes: usize) -> Result<OneHotLabel> {
    OneHotLabel::new(label, num_classes)
}

/// An 8-bit image stored height × width × channels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::domain(format!(
                "image dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::domain(format!(
                "{height}x{width}x{channels} image needs {} bytes, got {}",
                height * width * channels,
                data.len()
            )));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Pixel values scaled to `[-1, 1]`, in storage order.
    pub fn to_features(&self) -> Vec<f64> {
        self.data
            .iter()
            .map(|&x| f64::from(x) / 127.5 - 1.0)
            .collect()
    }
}

/// Source coordinate of output index `i` under corner-aligned sampling.
fn source_coord(i: usize, out_len: usize, in_len: usize) -> f64 {
    if out_len == 1 {
        (in_len - 1) as f64 / 2.0
    } else {
        (i * (in_len - 1)) as f64 / (out_len - 1) as f64
    }
}

/// Bilinear resize with corner-aligned sampling: output corners coincide
/// with input corners. Results are rounded half away from zero.
pub fn resize_image(image: &Image, out_height: usize, out_width: usize) -> Result<Image> {
    if out_height == 0 || out_width == 0 {
        return Err(Error::domain("target size must be positive"));
    }
    let (h, w, ch) = (image.height, image.width, image.channels);
    let mut data = Vec::with_capacity(out_height * out_width * ch);
    for oy in 0..out_height {
        let sy = source_coord(oy, out_height, h);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f64;
        for ox in 0..out_width {
            let sx = source_coord(ox, out_width, w);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f64;
            for c in 0..ch {
                let top = (1.0 - fx) * f64::from(image.get(y0, x0, c))
                    + fx * f64::from(image.get(y0, x1, c));
                let bottom = (1.0 - fx) * f64::from(image.get(y1, x0, c))
                    + fx * f64::from(image.get(y1, x1, c));
                let v = (1.0 - fy) * top + fy * bottom;
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(out_height, out_width, ch, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scale_endpoints_and_midpoint() {
        assert_eq!(scale_pixels(&[0, 255, 0]).unwrap(), vec![-1.0, 1.0, -1.0]);
        let mid = scale_pixels(&[128]).unwrap()[0];
        assert!((mid - 0.003_921_568_627_450_98).abs() < 1e-15);
        assert!(scale_pixels(&[256]).is_err());
        assert!(scale_pixels(&[-1]).is_err());
    }

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot(0, 3).unwrap().to_dense(), vec![1.0, 0.0, 0.0]);
        assert_eq!(one_hot(2, 3).unwrap().to_dense(), vec![0.0, 0.0, 1.0]);
        assert!(one_hot(5, 3).is_err());
    }

    #[test]
    fn resize_constant_identity_and_bounds() {
        let constant = Image::new(17, 33, 3, vec![91; 17 * 33 * 3]).unwrap();
        let out = resize_image(&constant, 64, 64).unwrap();
        assert_eq!((out.height(), out.width(), out.channels()), (64, 64, 3));
        assert!(out.data().iter().all(|&v| v == 91));

        let ramp: Vec<u8> = (0..64 * 64).map(|i| (i * 7 % 256) as u8).collect();
        let img = Image::new(64, 64, 1, ramp).unwrap();
        assert_eq!(resize_image(&img, 64, 64).unwrap(), img);

        let checker: Vec<u8> = (0..128 * 128)
            .map(|i| {
                if (i / 128 + i % 128) % 2 == 0 {
                    10
                } else {
                    240
                }
            })
            .collect();
        let img = Image::new(128, 128, 1, checker).unwrap();
        let out = resize_image(&img, DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE).unwrap();
        assert_eq!(out.data().len(), 64 * 64);
        assert!(out.data().iter().all(|&v| (10..=240).contains(&v)));
        // Corners are sampled exactly.
        assert_eq!(out.get(0, 0, 0), img.get(0, 0, 0));
        assert_eq!(out.get(63, 63, 0), img.get(127, 127, 0));
    }

    #[test]
    fn resize_rejects_empty() {
        assert!(Image::new(0, 4, 1, vec![]).is_err());
        let img = Image::new(2, 2, 1, vec![0; 4]).unwrap();
        assert!(resize_image(&img, 0, 64).is_err());
    }

    #[test]
    fn features_are_scaled() {
        let img = Image::new(1, 2, 1, vec![0, 255]).unwrap();
        assert_eq!(img.to_features(), vec![-1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn scale_is_invertible(raw in proptest::collection::vec(0i32..=255, 1..64)) {
            let back = unscale_pixels(&scale_pixels(&raw).unwrap());
            for (a, b) in raw.iter().zip(back) {
                prop_assert!((f64::from(*a) - b).abs() < 1e-12);
            }
        }

        #[test]
        fn resize_stays_within_input_range(
            h in 1usize..20, w in 1usize..20, oh in 1usize..40, ow in 1usize..40, seed in any::<u64>(),
        ) {
            let data: Vec<u8> = (0..h * w).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 13) as u8).collect();
            let img = Image::new(h, w, 1, data.clone()).unwrap();
            let out = resize_image(&img, oh, ow).unwrap();
            let (lo, hi) = (*data.iter().min().unwrap(), *data.iter().max().unwrap());
            prop_assert!(out.data().iter().all(|v| (lo..=hi).contains(v)));
        }
    }
}
