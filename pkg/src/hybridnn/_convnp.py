"""Pure-numpy grouped 1-D convolution kernels (fallback backend).

The forward pass and both backward passes are expressed as matrix products
over a strided column view so the heavy lifting stays inside BLAS.  The
compiled backend in ``_convcy`` exposes the same three functions; callers go
through :mod:`hybridnn.kernels`, which selects a backend at import time.

Gradient functions take pre-conjugated operands (``w_conj`` / ``x_conj``) so
both backends stay conjugation-free; for real dtypes conjugation is a no-op.
"""

import numpy as np


def _out_length(length, kernel, stride, pad_left, pad_right):
    return (length + pad_left + pad_right - kernel) // stride + 1


def _col_view(xp, kernel, stride, t_out):
    """Strided [B, C, T, K] window view of a padded signal (no copy)."""
    b, c, _ = xp.shape
    s0, s1, s2 = xp.strides
    return np.lib.stride_tricks.as_strided(
        xp, (b, c, t_out, kernel), (s0, s1, s2 * stride, s2), writeable=False
    )


def conv1d_forward(x, w, stride, pad_left, pad_right, groups):
    """y[b,o,t] = sum_{c,k} w[o,c,k] * x[b, gC+c, t*stride - pad_left + k]."""
    batch, channels, length = x.shape
    out_ch, cg, kernel = w.shape
    t_out = _out_length(length, kernel, stride, pad_left, pad_right)
    xp = np.pad(x, ((0, 0), (0, 0), (pad_left, pad_right)))
    cols = _col_view(xp, kernel, stride, t_out)
    og = out_ch // groups
    y = np.empty((batch, out_ch, t_out), dtype=x.dtype)
    for g in range(groups):
        part = cols[:, g * cg:(g + 1) * cg]  # [B, cg, T, K]
        mat = np.ascontiguousarray(part.transpose(0, 2, 1, 3)).reshape(batch * t_out, cg * kernel)
        wg = w[g * og:(g + 1) * og].reshape(og, cg * kernel)
        y[:, g * og:(g + 1) * og] = (mat @ wg.T).reshape(batch, t_out, og).transpose(0, 2, 1)
    return y


def conv1d_grad_weight(gy, x_conj, kernel, stride, pad_left, groups):
    """gw[o,c,k] = sum_{b,t} gy[b,o,t] * conj(x)[b, gC+c, t*stride - pad_left + k]."""
    batch, out_ch, t_out = gy.shape
    channels = x_conj.shape[1]
    cg = channels // groups
    og = out_ch // groups
    pad_right = max(0, (t_out - 1) * stride + kernel - pad_left - x_conj.shape[2])
    xp = np.pad(x_conj, ((0, 0), (0, 0), (pad_left, pad_right)))
    cols = _col_view(xp, kernel, stride, t_out)
    gw = np.empty((out_ch, cg, kernel), dtype=gy.dtype)
    for g in range(groups):
        part = cols[:, g * cg:(g + 1) * cg]
        mat = np.ascontiguousarray(part.transpose(0, 2, 1, 3)).reshape(batch * t_out, cg * kernel)
        gyg = gy[:, g * og:(g + 1) * og].transpose(0, 2, 1).reshape(batch * t_out, og)
        gw[g * og:(g + 1) * og] = (gyg.T @ mat).reshape(og, cg, kernel)
    return gw


def conv1d_grad_input(gy, w_conj, in_length, stride, pad_left, groups):
    """gx[b,c,i] = sum_{o,t,k : t*stride - pad_left + k = i} conj(w)[o,c,k] * gy[b,o,t]."""
    batch, out_ch, t_out = gy.shape
    og = out_ch // groups
    cg = w_conj.shape[1]
    kernel = w_conj.shape[2]
    padded = in_length + pad_left + max(0, (t_out - 1) * stride + kernel - pad_left - in_length)
    gxp = np.zeros((batch, cg * groups, padded), dtype=gy.dtype)
    for g in range(groups):
        gyg = gy[:, g * og:(g + 1) * og].transpose(0, 2, 1).reshape(batch * t_out, og)
        wg = w_conj[g * og:(g + 1) * og].reshape(og, cg * kernel)
        z = (gyg @ wg).reshape(batch, t_out, cg, kernel).transpose(0, 2, 1, 3)  # [B, cg, T, K]
        target = gxp[:, g * cg:(g + 1) * cg]
        for k in range(kernel):
            target[:, :, k:k + stride * t_out:stride] += z[:, :, :, k]
    return np.ascontiguousarray(gxp[:, :, pad_left:pad_left + in_length])
