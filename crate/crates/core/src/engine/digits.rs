//! Seeded synthetic handwritten-style digits, 14x14 grayscale.
//!
//! Each sample renders a 5x7 glyph through a random affine map (scale,
//! rotation, translation) with bilinear sampling, random stroke intensity
//! and additive Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::quant::{QuantError, Tensor};

pub const DIGIT_SIDE: usize = 14;
pub const DIGIT_PIXELS: usize = DIGIT_SIDE * DIGIT_SIDE;

const GLYPHS: [[&str; 7]; 10] = [
    [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."],
    ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."],
    [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"],
    ["#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."],
    ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."],
    ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."],
    ["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."],
    ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."],
    [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."],
    [".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."],
];

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Row-major `DIGIT_PIXELS` values in `[0, 1]` per sample.
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

fn glyph_at(g: &[&str; 7], col: i64, row: i64) -> f64 {
    if !(0..5).contains(&col) || !(0..7).contains(&row) {
        return 0.0;
    }
    if g[row as usize].as_bytes()[col as usize] == b'#' {
        1.0
    } else {
        0.0
    }
}

fn bilinear(g: &[&str; 7], u: f64, v: f64) -> f64 {
    let (c0, r0) = (u.floor(), v.floor());
    let (tu, tv) = (u - c0, v - r0);
    let (c0, r0) = (c0 as i64, r0 as i64);
    let top = glyph_at(g, c0, r0) * (1.0 - tu) + glyph_at(g, c0 + 1, r0) * tu;
    let bottom = glyph_at(g, c0, r0 + 1) * (1.0 - tu) + glyph_at(g, c0 + 1, r0 + 1) * tu;
    top * (1.0 - tv) + bottom * tv
}

fn render(label: usize, rng: &mut ChaCha8Rng, noise: &Normal<f64>) -> Vec<f64> {
    let g = &GLYPHS[label];
    let scale = rng.random_range(1.45..1.85);
    let theta: f64 = rng.random_range(-0.22..0.22);
    let (tx, ty) = (rng.random_range(-1.3..1.3), rng.random_range(-1.0..1.0));
    let ink = rng.random_range(0.65..1.0);
    let (sin, cos) = theta.sin_cos();
    let center = (DIGIT_SIDE as f64 - 1.0) / 2.0;
    let mut img = Vec::with_capacity(DIGIT_PIXELS);
    for py in 0..DIGIT_SIDE {
        for px in 0..DIGIT_SIDE {
            let dx = px as f64 - center - tx;
            let dy = py as f64 - center - ty;
            let u = (cos * dx + sin * dy) / scale + 2.0;
            let v = (-sin * dx + cos * dy) / scale + 3.0;
            let p = ink * bilinear(g, u, v) + noise.sample(rng);
            img.push(p.clamp(0.0, 1.0));
        }
    }
    img
}

/// `n` samples with labels cycling 0..9, fully determined by `seed`.
pub fn generate_digits(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.12).expect("positive std");
    let labels: Vec<usize> = (0..n).map(|i| i % 10).collect();
    let images = labels.iter().map(|&l| render(l, &mut rng, &noise)).collect();
    Dataset { images, labels }
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `[n, 196]` images and `[n]` labels.
    pub fn to_tensors(&self) -> (Tensor, Tensor) {
        let width = self.images.first().map_or(DIGIT_PIXELS, Vec::len);
        let data = self.images.iter().flatten().copied().collect();
        let images = Tensor::new(vec![self.len(), width], data).expect("uniform image size");
        let labels = Tensor::vector(self.labels.iter().map(|&l| l as f64).collect());
        (images, labels)
    }

    pub fn from_tensors(images: &Tensor, labels: &Tensor) -> Result<Self, QuantError> {
        let n = labels.len();
        if images.shape().len() < 2 || images.shape()[0] != n {
            return Err(QuantError::Shape(format!("images {:?} vs {n} labels", images.shape())));
        }
        let width = images.len() / n.max(1);
        let images = images.data().chunks(width.max(1)).map(<[f64]>::to_vec).collect();
        let labels = labels
            .data()
            .iter()
            .map(|&l| {
                if l >= 0.0 && l.fract() == 0.0 {
                    Ok(l as usize)
                } else {
                    Err(QuantError::Shape(format!("label {l} is not a class index")))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Dataset { images, labels })
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        Dataset { images: self.images[range.clone()].to_vec(), labels: self.labels[range].to_vec() }
    }
}
