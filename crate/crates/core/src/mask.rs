use image::{GrayImage, Luma};

/// Binary image, row-major. Set pixels mark the polyp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Option<Self> {
        (bits.len() == width as usize * height as usize).then_some(Self { width, height, bits })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Grayscale image with values exactly 0 and 255.
    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| Luma([if self.get(x, y) { 255 } else { 0 }]))
    }

    /// Strict inverse of [`Mask::to_image`]: any value other than 0 or 255 is an error.
    pub fn from_image(image: &GrayImage) -> Result<Self, String> {
        let mut bits = Vec::with_capacity(image.len());
        for (x, y, Luma([v])) in image.enumerate_pixels() {
            match v {
                0 => bits.push(false),
                255 => bits.push(true),
                other => return Err(format!("mask pixel ({x}, {y}) has value {other}, expected 0 or 255")),
            }
        }
        Ok(Self {
            width: image.width(),
            height: image.height(),
            bits,
        })
    }
}
