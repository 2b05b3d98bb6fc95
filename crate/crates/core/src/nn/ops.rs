//! Layer kernels. Every function checks its shapes and reports problems as
//! [`Error::Shape`] with the op name as the layer; the network runner
//! substitutes the real layer name.

use super::{Tensor, WeightTensor};
use crate::error::{Error, Result};

fn out_dim(input: usize, kernel: usize, stride: usize, pad: usize, op: &str) -> Result<usize> {
    if stride == 0 {
        return Err(Error::shape(op, "stride must be >= 1"));
    }
    let padded = input + 2 * pad;
    if kernel == 0 || kernel > padded {
        return Err(Error::shape(
            op,
            format!("kernel {kernel} does not fit padded extent {padded}"),
        ));
    }
    Ok((padded - kernel) / stride + 1)
}

/// Valid kernel-offset range for output coordinate `o`.
#[inline]
fn tap_range(o: usize, stride: usize, pad: usize, kernel: usize, input: usize) -> (usize, usize, isize) {
    let origin = (o * stride) as isize - pad as isize;
    let lo = (-origin).max(0) as usize;
    let hi = ((input as isize - origin).min(kernel as isize)).max(0) as usize;
    (lo, hi.max(lo), origin)
}

/// Cross-correlation with weights `(out, in, kh, kw)`, zero padding `pad` on
/// every side and floor-mode output size.
pub fn conv2d(x: &Tensor, weight: &WeightTensor, bias: &[f32], stride: usize, pad: usize) -> Result<Tensor> {
    let op = "conv2d";
    let [oc, ic, kh, kw] = weight.dims4(op)?;
    let (c, h, w) = x.shape();
    if ic != c {
        return Err(Error::shape(op, format!("input has {c} channels, kernel expects {ic}")));
    }
    if bias.len() != oc {
        return Err(Error::shape(op, format!("bias has {} values for {oc} outputs", bias.len())));
    }
    let oh = out_dim(h, kh, stride, pad, op)?;
    let ow = out_dim(w, kw, stride, pad, op)?;
    let xs: Vec<_> = (0..ow).map(|o| tap_range(o, stride, pad, kw, w)).collect();
    let ys: Vec<_> = (0..oh).map(|o| tap_range(o, stride, pad, kh, h)).collect();
    let src = x.data();
    let k = &weight.data;
    let mut out = Vec::with_capacity(oc * oh * ow);
    for o in 0..oc {
        let ko = &k[o * ic * kh * kw..(o + 1) * ic * kh * kw];
        for &(ky0, ky1, oy) in &ys {
            for &(kx0, kx1, ox) in &xs {
                let mut acc = bias[o];
                for i in 0..ic {
                    let plane = &src[i * h * w..(i + 1) * h * w];
                    let ki = &ko[i * kh * kw..(i + 1) * kh * kw];
                    for ky in ky0..ky1 {
                        let row = &plane[(oy + ky as isize) as usize * w..];
                        let krow = &ki[ky * kw..(ky + 1) * kw];
                        for kx in kx0..kx1 {
                            acc += krow[kx] * row[(ox + kx as isize) as usize];
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    Tensor::new(oc, oh, ow, out)
}

/// Per-channel convolution with weights `(c, kh, kw)`.
pub fn depthwise_conv2d(
    x: &Tensor,
    weight: &WeightTensor,
    bias: &[f32],
    stride: usize,
    pad: usize,
) -> Result<Tensor> {
    let op = "depthwise_conv2d";
    let [kc, kh, kw] = weight.dims3(op)?;
    let (c, h, w) = x.shape();
    if kc != c {
        return Err(Error::shape(op, format!("input has {c} channels, kernel expects {kc}")));
    }
    if bias.len() != c {
        return Err(Error::shape(op, format!("bias has {} values for {c} channels", bias.len())));
    }
    let oh = out_dim(h, kh, stride, pad, op)?;
    let ow = out_dim(w, kw, stride, pad, op)?;
    let xs: Vec<_> = (0..ow).map(|o| tap_range(o, stride, pad, kw, w)).collect();
    let ys: Vec<_> = (0..oh).map(|o| tap_range(o, stride, pad, kh, h)).collect();
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let plane = x.channel(ch);
        let ki = &weight.data[ch * kh * kw..(ch + 1) * kh * kw];
        for &(ky0, ky1, oy) in &ys {
            for &(kx0, kx1, ox) in &xs {
                let mut acc = bias[ch];
                for ky in ky0..ky1 {
                    let row = &plane[(oy + ky as isize) as usize * w..];
                    for kx in kx0..kx1 {
                        acc += ki[ky * kw + kx] * row[(ox + kx as isize) as usize];
                    }
                }
                out.push(acc);
            }
        }
    }
    Tensor::new(c, oh, ow, out)
}

fn pool_dim(input: usize, kernel: usize, stride: usize, ceil_mode: bool) -> Result<usize> {
    let op = "max_pool";
    if stride == 0 || kernel == 0 {
        return Err(Error::shape(op, "kernel and stride must be >= 1"));
    }
    if kernel > input {
        return Err(Error::shape(op, format!("kernel {kernel} larger than extent {input}")));
    }
    let span = input - kernel;
    let mut n = if ceil_mode { span.div_ceil(stride) } else { span / stride } + 1;
    // a window may not start past the last input element
    if ceil_mode && (n - 1) * stride >= input {
        n -= 1;
    }
    Ok(n)
}

/// Max pooling without padding; `ceil_mode` keeps partial windows at the
/// right and bottom edges.
pub fn max_pool(x: &Tensor, kernel: usize, stride: usize, ceil_mode: bool) -> Result<Tensor> {
    let (c, h, w) = x.shape();
    let oh = pool_dim(h, kernel, stride, ceil_mode)?;
    let ow = pool_dim(w, kernel, stride, ceil_mode)?;
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let plane = x.channel(ch);
        for oy in 0..oh {
            let (y0, y1) = (oy * stride, (oy * stride + kernel).min(h));
            for ox in 0..ow {
                let (x0, x1) = (ox * stride, (ox * stride + kernel).min(w));
                let mut m = f32::NEG_INFINITY;
                for y in y0..y1 {
                    for v in &plane[y * w + x0..y * w + x1] {
                        m = m.max(*v);
                    }
                }
                out.push(m);
            }
        }
    }
    Tensor::new(c, oh, ow, out)
}

pub fn relu(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    y
}

/// Per-channel leaky slope for negative inputs.
pub fn prelu(x: &Tensor, slopes: &[f32]) -> Result<Tensor> {
    let (c, h, w) = x.shape();
    if slopes.len() != c {
        return Err(Error::shape("prelu", format!("{} slopes for {c} channels", slopes.len())));
    }
    let mut y = x.clone();
    for (ch, plane) in y.data_mut().chunks_mut(h * w).enumerate() {
        let a = slopes[ch];
        plane.iter_mut().for_each(|v| {
            if *v < 0.0 {
                *v *= a
            }
        });
    }
    Ok(y)
}

/// Logistic with the input clipped to `[-100, 100]`.
pub fn sigmoid(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    y.data_mut()
        .iter_mut()
        .for_each(|v| *v = sigmoid_scalar(*v));
    y
}

#[inline]
pub fn sigmoid_scalar(v: f32) -> f32 {
    1.0 / (1.0 + (-v.clamp(-100.0, 100.0)).exp())
}

/// Softmax across channels at every spatial position.
pub fn softmax_channel(x: &Tensor) -> Tensor {
    let (c, h, w) = x.shape();
    let hw = h * w;
    let mut y = x.clone();
    let data = y.data_mut();
    for p in 0..hw {
        let m = (0..c).map(|ch| data[ch * hw + p]).fold(f32::NEG_INFINITY, f32::max);
        let mut sum = 0.0;
        for ch in 0..c {
            let e = (data[ch * hw + p] - m).exp();
            data[ch * hw + p] = e;
            sum += e;
        }
        for ch in 0..c {
            data[ch * hw + p] /= sum;
        }
    }
    y
}

/// Fully connected layer over the flattened `(c, h, w)` input; weights are
/// `(out, in)`. The result has shape `(out, 1, 1)`.
pub fn dense(x: &Tensor, weight: &WeightTensor, bias: &[f32]) -> Result<Tensor> {
    let op = "dense";
    let [out_f, in_f] = weight.dims2(op)?;
    let input = x.data();
    if input.len() != in_f {
        return Err(Error::shape(op, format!("input has {} values, weights expect {in_f}", input.len())));
    }
    if bias.len() != out_f {
        return Err(Error::shape(op, format!("bias has {} values for {out_f} outputs", bias.len())));
    }
    let out = (0..out_f)
        .map(|o| {
            let row = &weight.data[o * in_f..(o + 1) * in_f];
            let mut acc = bias[o];
            for (wv, xv) in row.iter().zip(input) {
                acc += wv * xv;
            }
            acc
        })
        .collect();
    Tensor::new(out_f, 1, 1, out)
}

/// Zero padding of the spatial dimensions.
pub fn pad(x: &Tensor, top: usize, bottom: usize, left: usize, right: usize) -> Tensor {
    let (c, h, w) = x.shape();
    let (nh, nw) = (h + top + bottom, w + left + right);
    let mut y = Tensor::zeros(c, nh, nw);
    for ch in 0..c {
        for r in 0..h {
            let src = &x.channel(ch)[r * w..(r + 1) * w];
            let start = (ch * nh + r + top) * nw + left;
            y.data_mut()[start..start + w].copy_from_slice(src);
        }
    }
    y
}

/// `x + skip`, where `skip` may have fewer channels; the missing channels
/// count as zeros.
pub fn add_residual(x: &Tensor, skip: &Tensor) -> Result<Tensor> {
    let (c, h, w) = x.shape();
    let (sc, sh, sw) = skip.shape();
    if (sh, sw) != (h, w) || sc > c {
        return Err(Error::shape(
            "add_residual",
            format!("cannot add {sc}x{sh}x{sw} onto {c}x{h}x{w}"),
        ));
    }
    let mut y = x.clone();
    for (a, b) in y.data_mut().iter_mut().zip(skip.data()) {
        *a += b;
    }
    Ok(y)
}
