/*******************************************************************************
 * Copyright 2026 The gspc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *******************************************************************************/

#include "gspc/baselines.hpp"

#include <algorithm>
#include <utility>

#include "gspc/errors.hpp"

namespace gspc {

namespace {

void check_weights(const Tensor4 &w, const ConvParams &params) {
    if (w.shape() != params.weight_shape())
        throw config_error("weights " + to_string(w.shape()) + " do not match "
                + to_string(params.weight_shape()));
}

} // namespace

namespace {

// First output index whose tap k lands inside [0, extent), and one past the last.
std::pair<int, int> valid_range(int out_n, int stride, int pad, int k, int extent) {
    const int first_in = k - pad; // input index of output 0
    int lo = first_in >= 0 ? 0 : (-first_in + stride - 1) / stride;
    int hi = extent - 1 - first_in < 0 ? 0 : (extent - 1 - first_in) / stride + 1;
    return {std::min(lo, out_n), std::min(hi, out_n)};
}

} // namespace

Tensor4 grouped_direct_conv_timed(
        const Tensor4 &x, const Tensor4 &w, const ConvParams &params) {
    const Shape4 ys = output_shape(params, x.shape());
    check_weights(w, params);
    const Shape4 &xs = x.shape();
    const int kpg = params.kpg(), cpg = params.cpg();
    const int ph = params.pad.pad_h, pw = params.pad.pad_w;
    const int sh = params.s_h, sw = params.s_w;
    Tensor4 y(ys, 0.f);

    // Each output plane accumulates one (c, kh, kw) tap at a time, so every
    // element sums its products in the oracle's order. Taps that fall into
    // the padding contribute +-0 to a sum that is never -0 and are skipped.
    for (int n = 0; n < ys.n; ++n)
        for (int k = 0; k < ys.c; ++k) {
            const int c0 = (k / kpg) * cpg;
            float *yp = &y(n, k, 0, 0);
            for (int c = 0; c < cpg; ++c)
                for (int kh = 0; kh < params.k_h; ++kh) {
                    const auto [oh_lo, oh_hi] = valid_range(ys.h, sh, ph, kh, xs.h);
                    for (int kw = 0; kw < params.k_w; ++kw) {
                        const auto [ow_lo, ow_hi] = valid_range(ys.w, sw, pw, kw, xs.w);
                        const float wv = w(k, c, kh, kw);
                        for (int oh = oh_lo; oh < oh_hi; ++oh) {
                            const float *xr = &x(n, c0 + c, oh * sh - ph + kh, 0);
                            float *yr = yp + std::size_t(oh) * ys.w;
                            const int shift = kw - pw;
                            if (sw == 1) {
                                for (int ow = ow_lo; ow < ow_hi; ++ow)
                                    yr[ow] += wv * xr[ow + shift];
                            } else {
                                for (int ow = ow_lo; ow < ow_hi; ++ow)
                                    yr[ow] += wv * xr[ow * sw + shift];
                            }
                        }
                    }
                }
        }
    return y;
}

Matrix2D im2col_group(
        const Tensor4 &x_padded, const ConvParams &params, int group, int n) {
    params.validate();
    const Shape4 &s = x_padded.shape();
    if (group < 0 || group >= params.groups)
        throw bounds_error("group " + std::to_string(group) + " outside [0, "
                + std::to_string(params.groups) + ")");
    if (n < 0 || n >= s.n)
        throw bounds_error("batch index " + std::to_string(n) + " out of range");
    if (s.c != params.c_in)
        throw config_error("input channel count does not match params");
    if (s.h < params.k_h || s.w < params.k_w)
        throw config_error("kernel larger than padded input");
    const int oh_n = (s.h - params.k_h) / params.s_h + 1;
    const int ow_n = (s.w - params.k_w) / params.s_w + 1;
    const int cpg = params.cpg();

    Matrix2D m(cpg * params.k_h * params.k_w, oh_n * ow_n);
    float *dst = m.data.data();
    for (int c = 0; c < cpg; ++c)
        for (int kh = 0; kh < params.k_h; ++kh)
            for (int kw = 0; kw < params.k_w; ++kw)
                for (int oh = 0; oh < oh_n; ++oh)
                    for (int ow = 0; ow < ow_n; ++ow)
                        *dst++ = x_padded(n, group * cpg + c, oh * params.s_h + kh,
                                ow * params.s_w + kw);
    return m;
}

Matrix2D gemm(const Matrix2D &a, const Matrix2D &b) {
    if (a.cols != b.rows)
        throw config_error("gemm: " + std::to_string(a.rows) + "x"
                + std::to_string(a.cols) + " times " + std::to_string(b.rows)
                + "x" + std::to_string(b.cols));
    constexpr int kBlockK = 256;
    constexpr int kBlockN = 512;
    constexpr int kRows = 4;
    const int m = a.rows, kk = a.cols, nn = b.cols;
    Matrix2D c(m, nn, 0.f);

    for (int j0 = 0; j0 < nn; j0 += kBlockN) {
        const int jn = std::min(kBlockN, nn - j0);
        for (int k0 = 0; k0 < kk; k0 += kBlockK) {
            const int kn = std::min(kBlockK, kk - k0);
            int i = 0;
            for (; i + kRows <= m; i += kRows) {
                float *c0 = &c(i, j0), *c1 = &c(i + 1, j0);
                float *c2 = &c(i + 2, j0), *c3 = &c(i + 3, j0);
                for (int k = k0; k < k0 + kn; ++k) {
                    const float a0 = a(i, k), a1 = a(i + 1, k);
                    const float a2 = a(i + 2, k), a3 = a(i + 3, k);
                    const float *brow = &b.data[static_cast<std::size_t>(k) * nn + j0];
                    for (int j = 0; j < jn; ++j) {
                        const float bv = brow[j];
                        c0[j] += a0 * bv;
                        c1[j] += a1 * bv;
                        c2[j] += a2 * bv;
                        c3[j] += a3 * bv;
                    }
                }
            }
            for (; i < m; ++i) {
                float *ci = &c(i, j0);
                for (int k = k0; k < k0 + kn; ++k) {
                    const float av = a(i, k);
                    const float *brow = &b.data[static_cast<std::size_t>(k) * nn + j0];
                    for (int j = 0; j < jn; ++j)
                        ci[j] += av * brow[j];
                }
            }
        }
    }
    return c;
}

Tensor4 im2col_grouped_conv(
        const Tensor4 &x, const Tensor4 &w, const ConvParams &params) {
    const Shape4 ys = output_shape(params, x.shape());
    check_weights(w, params);
    const Tensor4 xp = pad_input(x, params.pad);
    const int kpg = params.kpg();
    const int row_len = params.cpg() * params.k_h * params.k_w;
    Tensor4 y(ys);

    for (int j = 0; j < params.groups; ++j) {
        // filters of group j are a contiguous KPG x row_len block of w
        Matrix2D filters(kpg, row_len);
        const float *src = w.data().data() + static_cast<std::size_t>(j) * kpg * row_len;
        std::copy(src, src + filters.data.size(), filters.data.begin());
        for (int n = 0; n < ys.n; ++n) {
            const Matrix2D out = gemm(filters, im2col_group(xp, params, j, n));
            std::copy(out.data.begin(), out.data.end(), &y(n, j * kpg, 0, 0));
        }
    }
    return y;
}

} // namespace gspc
