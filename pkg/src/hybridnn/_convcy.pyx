# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled grouped 1-D convolution kernels (hot-loop backend).

Mirrors the API of ``_convnp``: forward plus the two backward passes, each
specialized for float64 and complex128 through a fused element type.
Gradient entry points expect pre-conjugated operands, same as the fallback.
"""

import numpy as np

ctypedef double complex cplx128

ctypedef fused elem_t:
    double
    cplx128


def _out_length(Py_ssize_t length, Py_ssize_t kernel, Py_ssize_t stride,
                Py_ssize_t pad_left, Py_ssize_t pad_right):
    return (length + pad_left + pad_right - kernel) // stride + 1


cdef void _forward_loop(elem_t[:, :, ::1] x, elem_t[:, :, ::1] w,
                        elem_t[:, :, ::1] y, Py_ssize_t stride,
                        Py_ssize_t pad_left, Py_ssize_t groups) noexcept nogil:
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t O = w.shape[0], CG = w.shape[1], K = w.shape[2]
    cdef Py_ssize_t T = y.shape[2]
    cdef Py_ssize_t og = O // groups
    cdef Py_ssize_t b, o, t, c, k, c0, i0, kmin, kmax
    cdef elem_t acc
    for b in range(B):
        for o in range(O):
            c0 = (o // og) * CG
            for t in range(T):
                i0 = t * stride - pad_left
                kmin = -i0 if i0 < 0 else 0
                kmax = L - i0 if i0 + K > L else K
                acc = 0
                for c in range(CG):
                    for k in range(kmin, kmax):
                        acc = acc + w[o, c, k] * x[b, c0 + c, i0 + k]
                y[b, o, t] = acc


cdef void _grad_weight_loop(elem_t[:, :, ::1] gy, elem_t[:, :, ::1] xc,
                            elem_t[:, :, ::1] gw, Py_ssize_t stride,
                            Py_ssize_t pad_left, Py_ssize_t groups) noexcept nogil:
    cdef Py_ssize_t B = gy.shape[0], O = gy.shape[1], T = gy.shape[2]
    cdef Py_ssize_t CG = gw.shape[1], K = gw.shape[2]
    cdef Py_ssize_t L = xc.shape[2]
    cdef Py_ssize_t og = O // groups
    cdef Py_ssize_t b, o, t, c, k, c0, i0, kmin, kmax
    for b in range(B):
        for o in range(O):
            c0 = (o // og) * CG
            for t in range(T):
                i0 = t * stride - pad_left
                kmin = -i0 if i0 < 0 else 0
                kmax = L - i0 if i0 + K > L else K
                for c in range(CG):
                    for k in range(kmin, kmax):
                        gw[o, c, k] = gw[o, c, k] + gy[b, o, t] * xc[b, c0 + c, i0 + k]


cdef void _grad_input_loop(elem_t[:, :, ::1] gy, elem_t[:, :, ::1] wc,
                           elem_t[:, :, ::1] gx, Py_ssize_t stride,
                           Py_ssize_t pad_left, Py_ssize_t groups) noexcept nogil:
    cdef Py_ssize_t B = gy.shape[0], O = gy.shape[1], T = gy.shape[2]
    cdef Py_ssize_t CG = wc.shape[1], K = wc.shape[2]
    cdef Py_ssize_t L = gx.shape[2]
    cdef Py_ssize_t og = O // groups
    cdef Py_ssize_t b, o, t, c, k, c0, i0, kmin, kmax
    for b in range(B):
        for o in range(O):
            c0 = (o // og) * CG
            for t in range(T):
                i0 = t * stride - pad_left
                kmin = -i0 if i0 < 0 else 0
                kmax = L - i0 if i0 + K > L else K
                for c in range(CG):
                    for k in range(kmin, kmax):
                        gx[b, c0 + c, i0 + k] = gx[b, c0 + c, i0 + k] + wc[o, c, k] * gy[b, o, t]


def conv1d_forward(x, w, stride, pad_left, pad_right, groups):
    x = np.ascontiguousarray(x)
    w = np.ascontiguousarray(w)
    t_out = _out_length(x.shape[2], w.shape[2], stride, pad_left, pad_right)
    y = np.zeros((x.shape[0], w.shape[0], t_out), dtype=x.dtype)
    if x.dtype == np.complex128:
        _forward_loop[cplx128](x, w, y, stride, pad_left, groups)
    else:
        _forward_loop[double](x, w, y, stride, pad_left, groups)
    return y


def conv1d_grad_weight(gy, x_conj, kernel, stride, pad_left, groups):
    gy = np.ascontiguousarray(gy)
    x_conj = np.ascontiguousarray(x_conj)
    cg = x_conj.shape[1] // groups
    gw = np.zeros((gy.shape[1], cg, kernel), dtype=gy.dtype)
    if gy.dtype == np.complex128:
        _grad_weight_loop[cplx128](gy, x_conj, gw, stride, pad_left, groups)
    else:
        _grad_weight_loop[double](gy, x_conj, gw, stride, pad_left, groups)
    return gw


def conv1d_grad_input(gy, w_conj, in_length, stride, pad_left, groups):
    gy = np.ascontiguousarray(gy)
    w_conj = np.ascontiguousarray(w_conj)
    gx = np.zeros((gy.shape[0], w_conj.shape[1] * groups, in_length), dtype=gy.dtype)
    if gy.dtype == np.complex128:
        _grad_input_loop[cplx128](gy, w_conj, gx, stride, pad_left, groups)
    else:
        _grad_input_loop[double](gy, w_conj, gx, stride, pad_left, groups)
    return gx
