//! 3×3 image filtering through the MAC engine, approximate vs exact.

use super::MapError;
use crate::compressor::CompressorSpec;
use crate::exec::{self, Strategy};
use crate::mac::{mac, PrecisionMode};
use crate::perf::OpTally;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, MapError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(MapError::ShapeMismatch(format!(
                "{width}x{height} image with {} pixels",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn random(width: usize, height: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            width,
            height,
            pixels: (0..width * height).map(|_| rng.gen()).collect(),
        }
    }

    /// Pixel with coordinates clamped to the border.
    fn at(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[y * self.width + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvKernel {
    /// Binomial [1 2 1]ᵀ[1 2 1] / 16, unsigned 8-bit.
    Smoothing,
    /// 4-neighbour Laplacian, 16-bit two's complement, output |·| clamped.
    Edge,
}

impl std::fmt::Display for ConvKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConvKernel::Smoothing => "smoothing",
            ConvKernel::Edge => "edge",
        })
    }
}

impl std::str::FromStr for ConvKernel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smoothing" | "smooth" => Ok(ConvKernel::Smoothing),
            "edge" => Ok(ConvKernel::Edge),
            other => Err(format!("unknown kernel {other:?} (smoothing, edge)")),
        }
    }
}

impl ConvKernel {
    fn taps(self) -> [i128; 9] {
        match self {
            ConvKernel::Smoothing => [1, 2, 1, 2, 4, 2, 1, 2, 1],
            ConvKernel::Edge => [0, 1, 0, 1, -4, 1, 0, 1, 0],
        }
    }

    fn mode(self) -> PrecisionMode {
        match self {
            ConvKernel::Smoothing => PrecisionMode::unsigned(8),
            ConvKernel::Edge => PrecisionMode::signed(16),
        }
        .expect("supported mode")
    }

    fn finish(self, acc: i128) -> u8 {
        match self {
            ConvKernel::Smoothing => ((acc + 8) >> 4).clamp(0, 255) as u8,
            ConvKernel::Edge => acc.abs().min(255) as u8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvDemo {
    pub output: GrayImage,
    pub reference: GrayImage,
    /// PSNR of `output` against the exact-spec `reference`, in dB.
    pub psnr_db: f64,
    pub note: Option<String>,
    pub tally: OpTally,
}

/// PSNR for 8-bit images; infinite when the images are identical.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> f64 {
    let mse = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2))
        .sum::<f64>()
        / a.pixels.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// Filters `image` with `spec` and returns it with an exact-spec reference.
pub fn filter(
    strategy: Strategy,
    image: &GrayImage,
    kernel: ConvKernel,
    spec: &CompressorSpec,
) -> Result<(GrayImage, OpTally), MapError> {
    let mode = kernel.mode();
    let taps = kernel.taps();
    let rows = exec::map_indexed(strategy, image.height, |y| {
        let mut row = Vec::with_capacity(image.width);
        let mut tally = OpTally::default();
        for x in 0..image.width {
            let mut patch = [0i128; 9];
            for (k, slot) in patch.iter_mut().enumerate() {
                let dx = (k % 3) as isize - 1;
                let dy = (k / 3) as isize - 1;
                *slot = i128::from(image.at(x as isize + dx, y as isize + dy));
            }
            let r = mac(&patch, &taps, mode, spec)?;
            tally.record_mac(&r, mode);
            let acc = r.values[0].to_i128().expect("small accumulator");
            row.push(kernel.finish(acc));
        }
        Ok::<_, MapError>((row, tally))
    });
    let mut pixels = Vec::with_capacity(image.pixels.len());
    let mut tally = OpTally::default();
    for r in rows {
        let (row, t) = r?;
        pixels.extend(row);
        tally.merge(&t);
    }
    Ok((GrayImage::new(image.width, image.height, pixels)?, tally))
}

pub fn conv_demo(image: &GrayImage, kernel: ConvKernel, spec: &CompressorSpec) -> Result<ConvDemo, MapError> {
    let strategy = Strategy::default();
    let (output, tally) = filter(strategy, image, kernel, spec)?;
    let (reference, _) = filter(strategy, image, kernel, &CompressorSpec::exact())?;
    let psnr_db = psnr(&output, &reference);
    let note = psnr_db.is_infinite().then(|| {
        if reference.pixels.iter().all(|&p| p == 0) {
            "all-zero reference: PSNR undefined, reported as infinity".to_string()
        } else {
            "output identical to exact reference".to_string()
        }
    });
    Ok(ConvDemo {
        output,
        reference,
        psnr_db,
        note,
        tally,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_spec_is_lossless() {
        let img = GrayImage::random(16, 12, 1);
        for k in [ConvKernel::Smoothing, ConvKernel::Edge] {
            let d = conv_demo(&img, k, &CompressorSpec::exact()).unwrap();
            assert!(d.psnr_db.is_infinite());
            assert_eq!(d.output, d.reference);
        }
    }

    #[test]
    fn reference_matches_host_filter() {
        let img = GrayImage::random(9, 7, 2);
        let (out, _) = filter(Strategy::Sequential, &img, ConvKernel::Smoothing, &CompressorSpec::exact()).unwrap();
        let w = [1i32, 2, 1, 2, 4, 2, 1, 2, 1];
        for y in 0..7isize {
            for x in 0..9isize {
                let mut s = 0;
                for k in 0..9 {
                    s += w[k] * i32::from(img.at(x + (k % 3) as isize - 1, y + (k / 3) as isize - 1));
                }
                assert_eq!(out.pixels[(y * 9 + x) as usize], ((s + 8) >> 4) as u8);
            }
        }
    }

    #[test]
    fn zero_image() {
        let img = GrayImage::new(4, 4, vec![0; 16]).unwrap();
        let d = conv_demo(&img, ConvKernel::Edge, &CompressorSpec::exact()).unwrap();
        assert!(d.output.pixels.iter().all(|&p| p == 0));
        assert!(d.psnr_db.is_infinite());
        assert!(d.note.unwrap().contains("undefined"));
    }
}
