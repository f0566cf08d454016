# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled warp and dense-descriptor kernels (see _kernels_py for contracts)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, floor, sin

cnp.import_array()

DEF PI = 3.141592653589793


def warp_rigid(const double[:, ::1] src, double angle_deg, double scale,
               double tx, double ty, Py_ssize_t out_h=0, Py_ssize_t out_w=0,
               double ox=0.0, double oy=0.0):
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    if out_h <= 0:
        out_h = h
    if out_w <= 0:
        out_w = w
    cdef double rad = angle_deg * PI / 180.0
    cdef double ca = cos(rad)
    cdef double sa = sin(rad)
    cdef double cx = (w - 1) / 2.0
    cdef double cy = (h - 1) / 2.0

    out_arr = np.zeros((out_h, out_w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, x0, y0, x1, y1
    cdef double u, v, sx, sy, fx, fy, v00, v01, v10, v11
    for j in range(out_h):
        v = (j + oy) - cy - ty
        for i in range(out_w):
            u = (i + ox) - cx - tx
            sx = (ca * u + sa * v) / scale + cx
            sy = (-sa * u + ca * v) / scale + cy
            if sx < 0.0 or sx > w - 1.0 or sy < 0.0 or sy > h - 1.0:
                continue
            fx = floor(sx)
            fy = floor(sy)
            x0 = <Py_ssize_t>fx
            y0 = <Py_ssize_t>fy
            fx = sx - fx
            fy = sy - fy
            x1 = x0 + 1
            y1 = y0 + 1
            if x1 > w - 1:
                x1 = w - 1
            if y1 > h - 1:
                y1 = h - 1
            v00 = src[y0, x0]
            v01 = src[y0, x1]
            v10 = src[y1, x0]
            v11 = src[y1, x1]
            out[j, i] = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * (
                (1.0 - fx) * v10 + fx * v11
            )
    return out_arr


def warp_ncc(const double[:, ::1] fixed, const double[:, ::1] moving,
             double angle_deg, double scale, double tx, double ty):
    """NCC of fixed against warp(moving, params) without materializing the warp.

    Returns -2.0 when either side has zero variance.
    """
    cdef Py_ssize_t h = fixed.shape[0]
    cdef Py_ssize_t w = fixed.shape[1]
    cdef double rad = angle_deg * PI / 180.0
    cdef double ca = cos(rad)
    cdef double sa = sin(rad)
    cdef double cx = (w - 1) / 2.0
    cdef double cy = (h - 1) / 2.0
    cdef double sf = 0.0, sf2 = 0.0, sw = 0.0, sw2 = 0.0, sfw = 0.0
    cdef Py_ssize_t i, j, x0, y0, x1, y1
    cdef double u, v, sx, sy, fx, fy, val, fval
    for j in range(h):
        v = j - cy - ty
        for i in range(w):
            fval = fixed[j, i]
            sf += fval
            sf2 += fval * fval
            u = i - cx - tx
            sx = (ca * u + sa * v) / scale + cx
            sy = (-sa * u + ca * v) / scale + cy
            if sx < 0.0 or sx > w - 1.0 or sy < 0.0 or sy > h - 1.0:
                continue
            fx = floor(sx)
            fy = floor(sy)
            x0 = <Py_ssize_t>fx
            y0 = <Py_ssize_t>fy
            fx = sx - fx
            fy = sy - fy
            x1 = x0 + 1
            y1 = y0 + 1
            if x1 > w - 1:
                x1 = w - 1
            if y1 > h - 1:
                y1 = h - 1
            val = (1.0 - fy) * ((1.0 - fx) * moving[y0, x0] + fx * moving[y0, x1]) \
                + fy * ((1.0 - fx) * moving[y1, x0] + fx * moving[y1, x1])
            if val < 0.0:
                val = 0.0
            elif val > 1.0:
                val = 1.0
            sw += val
            sw2 += val * val
            sfw += fval * val
    cdef double n = <double>(h * w)
    cdef double df = sf2 - sf * sf / n
    cdef double dw = sw2 - sw * sw / n
    if df <= 0.0 or dw <= 0.0:
        return -2.0
    cdef double r = (sfw - sf * sw / n) / ((df ** 0.5) * (dw ** 0.5))
    if r > 1.0:
        r = 1.0
    elif r < -1.0:
        r = -1.0
    return r


def surf_descriptors(const double[:, ::1] sat, const double[::1] xs, const double[::1] ys,
                     double scale):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t hp = sat.shape[0] - 1
    cdef Py_ssize_t wp = sat.shape[1] - 1
    cdef Py_ssize_t half = <Py_ssize_t>floor(scale + 0.5)
    if half < 1:
        half = 1
    cdef double sigma = 3.3 * scale
    cdef double denom = 2.0 * sigma * sigma

    out_arr = np.zeros((n, 64), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, i, j, cx, cy, q
    cdef double x, y, u, v, wg, dx, dy, right, left, bottom, top
    for k in range(n):
        x = xs[k]
        y = ys[k]
        for j in range(20):
            v = (j - 9.5) * scale
            cy = <Py_ssize_t>floor(y + v + 0.5)
            if cy - half < 0 or cy + half > hp:
                raise ValueError("Haar footprint outside image")
            for i in range(20):
                u = (i - 9.5) * scale
                cx = <Py_ssize_t>floor(x + u + 0.5)
                if cx - half < 0 or cx + half > wp:
                    raise ValueError("Haar footprint outside image")
                wg = exp(-(u * u + v * v) / denom)
                right = (sat[cy + half, cx + half] - sat[cy - half, cx + half]
                         - sat[cy + half, cx] + sat[cy - half, cx])
                left = (sat[cy + half, cx] - sat[cy - half, cx]
                        - sat[cy + half, cx - half] + sat[cy - half, cx - half])
                dx = right - left
                bottom = (sat[cy + half, cx + half] - sat[cy, cx + half]
                          - sat[cy + half, cx - half] + sat[cy, cx - half])
                top = (sat[cy, cx + half] - sat[cy - half, cx + half]
                       - sat[cy, cx - half] + sat[cy - half, cx - half])
                dy = bottom - top
                q = 4 * (4 * (j // 5) + (i // 5))
                out[k, q] += wg * dx
                out[k, q + 1] += wg * dy
                out[k, q + 2] += wg * fabs(dx)
                out[k, q + 3] += wg * fabs(dy)
    return out_arr
