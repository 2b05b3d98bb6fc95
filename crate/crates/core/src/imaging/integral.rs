use super::ImageBuffer;
use crate::error::{Error, Result};

/// Summed-area tables of pixel values and squared pixel values.
///
/// Both grids are `(width + 1) x (height + 1)` with a zero first row and
/// column, so `sum[y][x]` covers pixels in `[0, x) x [0, y)`.
#[derive(Clone, Debug)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    sum: Vec<u64>,
    sq_sum: Vec<u64>,
}

impl IntegralImage {
    pub fn new(img: &ImageBuffer) -> Result<Self> {
        if !img.is_gray() {
            return Err(Error::invalid(
                "integral image requires a single-channel input",
            ));
        }
        let (w, h) = (img.width(), img.height());
        let stride = w + 1;
        let mut sum = vec![0u64; stride * (h + 1)];
        let mut sq_sum = vec![0u64; stride * (h + 1)];
        let data = img.data();
        for y in 0..h {
            let mut row = 0u64;
            let mut row_sq = 0u64;
            for x in 0..w {
                let p = data[y * w + x] as u64;
                row += p;
                row_sq += p * p;
                let i = (y + 1) * stride + x + 1;
                sum[i] = sum[i - stride] + row;
                sq_sum[i] = sq_sum[i - stride] + row_sq;
            }
        }
        Ok(Self {
            width: w,
            height: h,
            sum,
            sq_sum,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row stride of the underlying grids (`width + 1`).
    pub fn stride(&self) -> usize {
        self.width + 1
    }

    /// Value of the sum grid at corner `(x, y)`.
    pub fn at(&self, x: usize, y: usize) -> u64 {
        self.sum[y * self.stride() + x]
    }

    pub fn sq_at(&self, x: usize, y: usize) -> u64 {
        self.sq_sum[y * self.stride() + x]
    }

    pub(crate) fn sums(&self) -> &[u64] {
        &self.sum
    }

    pub(crate) fn sq_sums(&self) -> &[u64] {
        &self.sq_sum
    }

    fn check(&self, x: usize, y: usize, w: usize, h: usize) -> Result<()> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::invalid(format!(
                "rectangle ({x},{y},{w},{h}) exceeds {}x{} image",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Sum of pixels in the rectangle, via four corner lookups.
    pub fn rect_sum(&self, x: usize, y: usize, w: usize, h: usize) -> Result<u64> {
        self.check(x, y, w, h)?;
        Ok(self.rect_sum_unchecked(x, y, w, h))
    }

    /// Sum of squared pixels in the rectangle.
    pub fn rect_sq_sum(&self, x: usize, y: usize, w: usize, h: usize) -> Result<u64> {
        self.check(x, y, w, h)?;
        Ok(corner_sum(&self.sq_sum, self.stride(), x, y, w, h))
    }

    #[inline]
    pub(crate) fn rect_sum_unchecked(&self, x: usize, y: usize, w: usize, h: usize) -> u64 {
        corner_sum(&self.sum, self.stride(), x, y, w, h)
    }

    #[inline]
    pub(crate) fn rect_sq_sum_unchecked(&self, x: usize, y: usize, w: usize, h: usize) -> u64 {
        corner_sum(&self.sq_sum, self.stride(), x, y, w, h)
    }
}

#[inline]
fn corner_sum(grid: &[u64], stride: usize, x: usize, y: usize, w: usize, h: usize) -> u64 {
    let a = y * stride + x;
    let b = a + w;
    let c = a + h * stride;
    let d = c + w;
    // Wrapping arithmetic: the intermediate a - b may underflow, the result never does.
    grid[d]
        .wrapping_sub(grid[b])
        .wrapping_sub(grid[c])
        .wrapping_add(grid[a])
}
