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

#pragma once

#include <vector>

#include "gspc/reference.hpp"
#include "gspc/tensor.hpp"

namespace gspc {

/// Row-major float32 matrix.
struct Matrix2D {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    Matrix2D() = default;
    Matrix2D(int r, int c, float fill = 0.f)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    float &operator()(int r, int c) {
        return data[static_cast<std::size_t>(r) * cols + c];
    }
    float operator()(int r, int c) const {
        return data[static_cast<std::size_t>(r) * cols + c];
    }
    bool operator==(const Matrix2D &) const = default;
};

/// Sliding-window grouped convolution on the unpadded input: no packing and
/// no allocation besides the output. Padding taps are skipped rather than
/// read, which leaves every sum bit-identical to direct_grouped_conv.
Tensor4 grouped_direct_conv_timed(
        const Tensor4 &x, const Tensor4 &w, const ConvParams &params);

/// Receptive fields of group j as columns: (CPG*K_h*K_w) x (H_out*W_out),
/// row c*K_h*K_w + kh*K_w + kw, column oh*W_out + ow. Batch item n.
Matrix2D im2col_group(
        const Tensor4 &x_padded, const ConvParams &params, int group, int n = 0);

/// a * b with a cache-blocked i-k-j loop nest. Each output element
/// accumulates its k terms in ascending order from zero.
Matrix2D gemm(const Matrix2D &a, const Matrix2D &b);

/// Per group: KPG x (CPG*K_h*K_w) filter matrix times im2col_group.
Tensor4 im2col_grouped_conv(
        const Tensor4 &x, const Tensor4 &w, const ConvParams &params);

} // namespace gspc
