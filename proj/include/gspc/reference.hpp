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

#include <string>

#include "gspc/tensor.hpp"

namespace gspc {

/// Full configuration of a (grouped) 2D convolution. Bias-free.
///
/// Filter k belongs to group k / kpg() and reads the contiguous input
/// channel range [group * cpg(), group * cpg() + cpg()).
struct ConvParams {
    int c_in = 1;
    int c_out = 1;
    int k_h = 1;
    int k_w = 1;
    int s_h = 1;
    int s_w = 1;
    PaddingSpec pad {};
    int groups = 1;

    int kpg() const { return c_out / groups; } // kernels per group
    int cpg() const { return c_in / groups; } // input channels per group

    /// Throws config_error naming the first violated invariant.
    void validate() const;

    Shape4 weight_shape() const { return {c_out, c_in / groups, k_h, k_w}; }

    bool operator==(const ConvParams &) const = default;
};

std::string to_string(const ConvParams &p);

struct SpatialDims {
    int h = 0;
    int w = 0;
    bool operator==(const SpatialDims &) const = default;
};

/// floor((in + 2 * pad - k) / stride) + 1 along each axis.
SpatialDims output_spatial_dims(const ConvParams &params, int in_h, int in_w);

/// Output shape for input x under params; validates channel counts.
Shape4 output_shape(const ConvParams &params, const Shape4 &x);

// Correctness oracle. Zero-pads x, then for every output element sums
// x_pad * w over (c, kh, kw) in ascending nested order starting from 0.
// The loop nest is kept as plain as possible; it is not a timed kernel.
Tensor4 direct_grouped_conv(
        const Tensor4 &x, const Tensor4 &w, const ConvParams &params);

/// 1x1, stride 1, ungrouped convolution. w must be C_out x C_in x 1 x 1.
Tensor4 pointwise_conv(const Tensor4 &x, const Tensor4 &w);

/// Grouped convolution followed by a pointwise convolution.
Tensor4 grouped_block(const Tensor4 &x, const Tensor4 &w_grouped,
        const Tensor4 &w_pointwise, const ConvParams &params);

} // namespace gspc
