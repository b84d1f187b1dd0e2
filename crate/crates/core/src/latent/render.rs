//! Toy latent-to-image decoder: bilinear upsampling of each channel to
//! 128x128, a fixed channel-to-RGB matrix, and a sigmoid into [0, 255].

use super::LatentTensor;

pub const IMAGE_SIZE: u32 = 128;

const COLOR: [[f64; 4]; 3] = [[1.2, 0.4, -0.3, 0.2], [-0.2, 1.0, 0.5, -0.4], [0.3, -0.5, 1.1, 0.6]];
const COLOR_BIAS: [f64; 3] = [0.1, -0.2, 0.3];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB triples.
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Source coordinate of an output pixel centre: the two neighbouring latent
/// indices and the weight of the second.
fn sample_axis(pixel: u32, latent_len: usize) -> (usize, usize, f64) {
    let u = ((f64::from(pixel) + 0.5) * latent_len as f64 / f64::from(IMAGE_SIZE) - 0.5).clamp(0.0, (latent_len - 1) as f64);
    let i0 = u.floor() as usize;
    let i1 = (i0 + 1).min(latent_len - 1);
    (i0, i1, u - i0 as f64)
}

pub fn toy_generate(z: &LatentTensor) -> RgbImage {
    let shape = z.shape();
    let mut pixels = Vec::with_capacity((IMAGE_SIZE * IMAGE_SIZE * 3) as usize);
    let mut channels = vec![0.0; shape.channels];
    for py in 0..IMAGE_SIZE {
        let (y0, y1, wy) = sample_axis(py, shape.height);
        for px in 0..IMAGE_SIZE {
            let (x0, x1, wx) = sample_axis(px, shape.width);
            for (c, out) in channels.iter_mut().enumerate() {
                let top = z.get(y0, x0, c) * (1.0 - wx) + z.get(y0, x1, c) * wx;
                let bottom = z.get(y1, x0, c) * (1.0 - wx) + z.get(y1, x1, c) * wx;
                *out = top * (1.0 - wy) + bottom * wy;
            }
            for (row, bias) in COLOR.iter().zip(COLOR_BIAS) {
                let v = bias + channels.iter().enumerate().map(|(c, v)| row[c % 4] * v).sum::<f64>();
                pixels.push((255.0 * sigmoid(v)).round() as u8);
            }
        }
    }
    RgbImage { width: IMAGE_SIZE, height: IMAGE_SIZE, pixels }
}

pub fn encode_png(image: &RgbImage) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, image.width, image.height);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().expect("in-memory PNG header");
        writer.write_image_data(&image.pixels).expect("in-memory PNG data");
    }
    out
}
