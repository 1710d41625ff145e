//! Raw RGB8 image buffers and PNG / PPM (P6) file I/O.

use std::path::Path;

use thiserror::Error;

/// Number of interleaved channels in every buffer.
pub const CHANNELS: usize = 3;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("pixel buffer has {actual} bytes, expected {expected} for {width}x{height}x3")]
    BufferSize {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("failed to decode image {path}: {source}")]
    Decode {
        path: String,
        #[source]
        source: ::image::ImageError,
    },
    #[error("failed to encode image {path}: {source}")]
    Encode {
        path: String,
        #[source]
        source: ::image::ImageError,
    },
}

/// Row-major interleaved RGB8 image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage { width, height });
        }
        let expected = width * height * CHANNELS;
        if pixels.len() != expected {
            return Err(ImageError::BufferSize {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// An image filled with a single color.
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self, ImageError> {
        let pixels = color
            .iter()
            .copied()
            .cycle()
            .take(width * height * CHANNELS)
            .collect();
        Self::new(width, height, pixels)
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * CHANNELS;
        self.pixels[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    /// Per-channel mean color, rounded to the nearest integer.
    pub fn mean_color(&self) -> [u8; 3] {
        let mut sums = [0u64; 3];
        for px in self.pixels.chunks_exact(CHANNELS) {
            for (s, &v) in sums.iter_mut().zip(px) {
                *s += u64::from(v);
            }
        }
        let count = self.pixel_count() as f64;
        sums.map(|s| (s as f64 / count).round().clamp(0.0, 255.0) as u8)
    }

    /// Reads a PNG or binary PPM file. The format is detected from the file
    /// contents, and any color type is converted to RGB8.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        let path = path.as_ref();
        let decoded = ::image::ImageReader::open(path)
            .map_err(|e| ImageError::Decode {
                path: path.display().to_string(),
                source: ::image::ImageError::IoError(e),
            })?
            .with_guessed_format()
            .map_err(|e| ImageError::Decode {
                path: path.display().to_string(),
                source: ::image::ImageError::IoError(e),
            })?
            .decode()
            .map_err(|source| ImageError::Decode {
                path: path.display().to_string(),
                source,
            })?
            .into_rgb8();
        let (w, h) = decoded.dimensions();
        Self::new(w as usize, h as usize, decoded.into_raw())
    }

    /// Writes the image; `.ppm`/`.pnm` extensions produce binary P6, anything
    /// else PNG.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let path = path.as_ref();
        let is_ppm = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.eq_ignore_ascii_case("ppm") || e.eq_ignore_ascii_case("pnm"))
            .unwrap_or(false);
        if is_ppm {
            return std::fs::write(path, self.to_ppm_bytes()).map_err(|e| ImageError::Encode {
                path: path.display().to_string(),
                source: ::image::ImageError::IoError(e),
            });
        }
        ::image::save_buffer_with_format(
            path,
            &self.pixels,
            self.width as u32,
            self.height as u32,
            ::image::ExtendedColorType::Rgb8,
            ::image::ImageFormat::Png,
        )
        .map_err(|source| ImageError::Encode {
            path: path.display().to_string(),
            source,
        })
    }

    /// Binary PPM (P6) encoding with maxval 255.
    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}
