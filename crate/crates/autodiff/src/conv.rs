//! SAME-padded 2D convolution and its adjoint (transpose convolution) on
//! NHWC tensors, built from im2col/col2im and a GEMM.
//!
//! A strided convolution maps a "large" grid onto a "small" one; the
//! transpose convolution with the same geometry maps small back to large.
//! Both kernels work on rectangular windows so that a region of the output
//! can be computed from the part of the input it depends on. For any output
//! cell the arithmetic is identical whether the whole grid or a window is
//! computed.

use crate::error::{Result, TensorError};
use crate::real::Real;
use crate::tensor::Tensor;

/// Half-open rectangle `[h0, h1) x [w0, w1)` in grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub h0: usize,
    pub h1: usize,
    pub w0: usize,
    pub w1: usize,
}

impl Rect {
    pub fn new(h0: usize, h1: usize, w0: usize, w1: usize) -> Self {
        Rect { h0, h1, w0, w1 }
    }

    pub fn full(h: usize, w: usize) -> Self {
        Rect::new(0, h, 0, w)
    }

    pub fn height(&self) -> usize {
        self.h1 - self.h0
    }

    pub fn width(&self) -> usize {
        self.w1 - self.w0
    }

    pub fn area(&self) -> usize {
        self.height() * self.width()
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.h0 >= self.h0 && other.h1 <= self.h1 && other.w0 >= self.w0 && other.w1 <= self.w1
    }

    /// Grows by `r` on every side, clipped to `[0, h) x [0, w)`.
    pub fn dilate(&self, r: usize, h: usize, w: usize) -> Rect {
        Rect::new(
            self.h0.saturating_sub(r),
            (self.h1 + r).min(h),
            self.w0.saturating_sub(r),
            (self.w1 + r).min(w),
        )
    }
}

/// SAME-padding geometry of a strided convolution from a large grid to a
/// small grid: `small = ceil(large / stride)`, padding split with the extra
/// cell after.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad_h: usize,
    pub pad_w: usize,
    pub large_h: usize,
    pub large_w: usize,
    pub small_h: usize,
    pub small_w: usize,
}

fn same_padding(large: usize, k: usize, stride: usize) -> (usize, usize) {
    let small = large.div_ceil(stride);
    let total = ((small.saturating_sub(1)) * stride + k).saturating_sub(large);
    (small, total / 2)
}

impl ConvGeometry {
    pub fn same(large_h: usize, large_w: usize, kh: usize, kw: usize, stride: usize) -> Self {
        let (small_h, pad_h) = same_padding(large_h, kh, stride);
        let (small_w, pad_w) = same_padding(large_w, kw, stride);
        ConvGeometry {
            kh,
            kw,
            stride,
            pad_h,
            pad_w,
            large_h,
            large_w,
            small_h,
            small_w,
        }
    }

    /// Large-grid cells read when computing `small` (clipped to the grid;
    /// padding cells are implicit zeros).
    pub fn large_footprint(&self, small: &Rect) -> Rect {
        let lo = |s: usize, pad: usize| (s * self.stride).saturating_sub(pad);
        let hi = |s_end: usize, pad: usize, k: usize, limit: usize| {
            ((s_end - 1) * self.stride + k).saturating_sub(pad).min(limit)
        };
        Rect::new(
            lo(small.h0, self.pad_h),
            hi(small.h1, self.pad_h, self.kh, self.large_h),
            lo(small.w0, self.pad_w),
            hi(small.w1, self.pad_w, self.kw, self.large_w),
        )
    }

    /// Small-grid cells whose transpose-convolution footprint touches
    /// `large`.
    pub fn small_footprint(&self, large: &Rect) -> Rect {
        let lo = |l: usize, pad: usize, k: usize| (l + pad + 1).saturating_sub(k).div_ceil(self.stride);
        let hi = |l_end: usize, pad: usize, limit: usize| ((l_end - 1 + pad) / self.stride + 1).min(limit);
        Rect::new(
            lo(large.h0, self.pad_h, self.kh),
            hi(large.h1, self.pad_h, self.small_h),
            lo(large.w0, self.pad_w, self.kw),
            hi(large.w1, self.pad_w, self.small_w),
        )
    }
}

/// Gathers patches of `large` (an `(n, win.h, win.w, c)` window at `win`)
/// for every small-grid cell in `region`. Rows are `(b, sy, sx)`, columns
/// `(ky, kx, c)`.
fn im2col<T: Real>(
    large: &[T],
    win: &Rect,
    n: usize,
    c: usize,
    g: &ConvGeometry,
    region: &Rect,
) -> Vec<T> {
    let row_len = g.kh * g.kw * c;
    let mut cols = vec![T::zero(); n * region.area() * row_len];
    let mut row = 0;
    for b in 0..n {
        for sy in region.h0..region.h1 {
            for sx in region.w0..region.w1 {
                let dst = &mut cols[row * row_len..(row + 1) * row_len];
                for ky in 0..g.kh {
                    let ly = (sy * g.stride + ky) as isize - g.pad_h as isize;
                    if ly < 0 || ly as usize >= g.large_h {
                        continue;
                    }
                    let ly = ly as usize;
                    assert!(ly >= win.h0 && ly < win.h1, "im2col read outside the input window");
                    for kx in 0..g.kw {
                        let lx = (sx * g.stride + kx) as isize - g.pad_w as isize;
                        if lx < 0 || lx as usize >= g.large_w {
                            continue;
                        }
                        let lx = lx as usize;
                        assert!(lx >= win.w0 && lx < win.w1, "im2col read outside the input window");
                        let src = ((b * win.height() + ly - win.h0) * win.width() + lx - win.w0) * c;
                        let off = (ky * g.kw + kx) * c;
                        dst[off..off + c].copy_from_slice(&large[src..src + c]);
                    }
                }
                row += 1;
            }
        }
    }
    cols
}

/// Scatter-adds patch rows (one per small cell of `win`) into the large
/// grid, keeping only cells inside `region`. Output is
/// `(n, region.h, region.w, c)`.
fn col2im<T: Real>(
    cols: &[T],
    win: &Rect,
    n: usize,
    c: usize,
    g: &ConvGeometry,
    region: &Rect,
) -> Vec<T> {
    let row_len = g.kh * g.kw * c;
    let mut out = vec![T::zero(); n * region.area() * c];
    let mut row = 0;
    for b in 0..n {
        for sy in win.h0..win.h1 {
            for sx in win.w0..win.w1 {
                let src = &cols[row * row_len..(row + 1) * row_len];
                row += 1;
                for ky in 0..g.kh {
                    let ly = (sy * g.stride + ky) as isize - g.pad_h as isize;
                    if ly < region.h0 as isize || ly >= region.h1 as isize {
                        continue;
                    }
                    let ly = ly as usize - region.h0;
                    for kx in 0..g.kw {
                        let lx = (sx * g.stride + kx) as isize - g.pad_w as isize;
                        if lx < region.w0 as isize || lx >= region.w1 as isize {
                            continue;
                        }
                        let lx = lx as usize - region.w0;
                        let dst = ((b * region.height() + ly) * region.width() + lx) * c;
                        let off = (ky * g.kw + kx) * c;
                        for (o, &v) in out[dst..dst + c].iter_mut().zip(&src[off..off + c]) {
                            *o += v;
                        }
                    }
                }
            }
        }
    }
    out
}

fn kernel4(k: &Tensor<impl Real>) -> Result<(usize, usize, usize, usize)> {
    match k.shape() {
        &[kh, kw, a, b] => Ok((kh, kw, a, b)),
        other => Err(TensorError::Shape(format!("kernel must be rank 4, got {other:?}"))),
    }
}

fn check_stride(stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(TensorError::Shape("stride must be positive".into()));
    }
    Ok(())
}

/// Convolution of the window `x` (located at `win` in a `large_h x large_w`
/// grid) restricted to output cells in `region`.
pub fn conv2d_region<T: Real>(
    x: &Tensor<T>,
    win: &Rect,
    large_hw: (usize, usize),
    k: &Tensor<T>,
    stride: usize,
    region: &Rect,
) -> Result<Tensor<T>> {
    check_stride(stride)?;
    let (n, h, w, cin) = x.dims4()?;
    let (kh, kw, kc, cout) = kernel4(k)?;
    if kc != cin {
        return Err(TensorError::Shape(format!(
            "conv2d: input has {cin} channels but kernel expects {kc}"
        )));
    }
    if (h, w) != (win.height(), win.width()) {
        return Err(TensorError::Shape(format!(
            "conv2d: window {win:?} does not match input {h}x{w}"
        )));
    }
    let g = ConvGeometry::same(large_hw.0, large_hw.1, kh, kw, stride);
    if !Rect::full(g.small_h, g.small_w).contains_rect(region) {
        return Err(TensorError::Shape(format!(
            "conv2d: region {region:?} outside output {}x{}",
            g.small_h, g.small_w
        )));
    }
    if !win.contains_rect(&g.large_footprint(region)) {
        return Err(TensorError::Shape(format!(
            "conv2d: window {win:?} does not cover the footprint of {region:?}"
        )));
    }
    let cols = im2col(x.data(), win, n, cin, &g, region);
    let rows = n * region.area();
    let mut out = vec![T::zero(); rows * cout];
    T::gemm(rows, kh * kw * cin, cout, &cols, false, k.data(), false, T::zero(), &mut out);
    Tensor::from_vec(&[n, region.height(), region.width(), cout], out)
}

/// `(n, h, w, c_in) * (kh, kw, c_in, c_out) -> (n, ceil(h/s), ceil(w/s), c_out)`.
pub fn conv2d<T: Real>(x: &Tensor<T>, k: &Tensor<T>, stride: usize) -> Result<Tensor<T>> {
    let (_, h, w, _) = x.dims4()?;
    check_stride(stride)?;
    let full = Rect::full(h.div_ceil(stride), w.div_ceil(stride));
    conv2d_region(x, &Rect::full(h, w), (h, w), k, stride, &full)
}

/// Gradients of `conv2d(x, k, stride)` given the output gradient.
pub fn conv2d_backward<T: Real>(
    x: &Tensor<T>,
    k: &Tensor<T>,
    stride: usize,
    dout: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (n, h, w, cin) = x.dims4()?;
    let (kh, kw, _, cout) = kernel4(k)?;
    let g = ConvGeometry::same(h, w, kh, kw, stride);
    let small = Rect::full(g.small_h, g.small_w);
    let large = Rect::full(h, w);
    let cols = im2col(x.data(), &large, n, cin, &g, &small);
    let rows = n * small.area();
    let kk = kh * kw * cin;

    let mut dk = vec![T::zero(); kk * cout];
    T::gemm(kk, rows, cout, &cols, true, dout.data(), false, T::zero(), &mut dk);

    let mut dcols = vec![T::zero(); rows * kk];
    T::gemm(rows, cout, kk, dout.data(), false, k.data(), true, T::zero(), &mut dcols);
    let dx = col2im(&dcols, &small, n, cin, &g, &large);

    Ok((Tensor::from_vec(x.shape(), dx)?, Tensor::from_vec(k.shape(), dk)?))
}

/// Transpose convolution of the window `x` (at `win` in a
/// `small_h x small_w` grid) onto the output cells in `region` of the
/// `stride`-times larger grid. Kernel layout is `(kh, kw, c_out, c_in)`.
pub fn conv_transpose2d_region<T: Real>(
    x: &Tensor<T>,
    win: &Rect,
    small_hw: (usize, usize),
    k: &Tensor<T>,
    stride: usize,
    region: &Rect,
) -> Result<Tensor<T>> {
    check_stride(stride)?;
    let (n, h, w, cin) = x.dims4()?;
    let (kh, kw, cout, kc) = kernel4(k)?;
    if kc != cin {
        return Err(TensorError::Shape(format!(
            "conv_transpose2d: input has {cin} channels but kernel expects {kc}"
        )));
    }
    if (h, w) != (win.height(), win.width()) {
        return Err(TensorError::Shape(format!(
            "conv_transpose2d: window {win:?} does not match input {h}x{w}"
        )));
    }
    let g = ConvGeometry::same(small_hw.0 * stride, small_hw.1 * stride, kh, kw, stride);
    if !Rect::full(g.large_h, g.large_w).contains_rect(region) {
        return Err(TensorError::Shape(format!(
            "conv_transpose2d: region {region:?} outside output {}x{}",
            g.large_h, g.large_w
        )));
    }
    if !win.contains_rect(&g.small_footprint(region)) {
        return Err(TensorError::Shape(format!(
            "conv_transpose2d: window {win:?} does not cover the footprint of {region:?}"
        )));
    }
    let rows = n * win.area();
    let kk = kh * kw * cout;
    let mut cols = vec![T::zero(); rows * kk];
    T::gemm(rows, cin, kk, x.data(), false, k.data(), true, T::zero(), &mut cols);
    let out = col2im(&cols, win, n, cout, &g, region);
    Tensor::from_vec(&[n, region.height(), region.width(), cout], out)
}

/// `(n, h, w, c_in) -> (n, s*h, s*w, c_out)`; the adjoint of `conv2d` with
/// the same kernel read as `(kh, kw, c_out, c_in)`.
pub fn conv_transpose2d<T: Real>(x: &Tensor<T>, k: &Tensor<T>, stride: usize) -> Result<Tensor<T>> {
    let (_, h, w, _) = x.dims4()?;
    let full = Rect::full(h * stride, w * stride);
    conv_transpose2d_region(x, &Rect::full(h, w), (h, w), k, stride, &full)
}

pub fn conv_transpose2d_backward<T: Real>(
    x: &Tensor<T>,
    k: &Tensor<T>,
    stride: usize,
    dout: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (n, h, w, cin) = x.dims4()?;
    let (kh, kw, cout, _) = kernel4(k)?;
    let g = ConvGeometry::same(h * stride, w * stride, kh, kw, stride);
    let small = Rect::full(h, w);
    let large = Rect::full(g.large_h, g.large_w);
    let dcols = im2col(dout.data(), &large, n, cout, &g, &small);
    let rows = n * small.area();
    let kk = kh * kw * cout;

    let mut dx = vec![T::zero(); rows * cin];
    T::gemm(rows, kk, cin, &dcols, false, k.data(), false, T::zero(), &mut dx);

    let mut dk = vec![T::zero(); kk * cin];
    T::gemm(kk, rows, cin, &dcols, true, x.data(), false, T::zero(), &mut dk);

    Ok((Tensor::from_vec(x.shape(), dx)?, Tensor::from_vec(k.shape(), dk)?))
}
