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

// Helpers shared by the test binaries: an independently written standard
// convolution, random parameter generators and scratch directories.

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>

#include "gspc/reference.hpp"
#include "gspc/tensor.hpp"

namespace gspc::test {

// Textbook ungrouped convolution, written without padding copies: taps
// outside the input are treated as zero. Loop order differs from the
// library kernels on purpose.
inline Tensor4 five_loop_standard_conv(
        const Tensor4 &x, const Tensor4 &w, int s_h, int s_w, int pad_h, int pad_w) {
    const Shape4 xs = x.shape(), ws = w.shape();
    const int oh_n = (xs.h + 2 * pad_h - ws.h) / s_h + 1;
    const int ow_n = (xs.w + 2 * pad_w - ws.w) / s_w + 1;
    Tensor4 y({xs.n, ws.n, oh_n, ow_n});
    for (int n = 0; n < xs.n; ++n)
        for (int k = 0; k < ws.n; ++k)
            for (int oh = 0; oh < oh_n; ++oh)
                for (int ow = 0; ow < ow_n; ++ow) {
                    double acc = 0;
                    for (int kh = 0; kh < ws.h; ++kh)
                        for (int kw = 0; kw < ws.w; ++kw)
                            for (int c = 0; c < xs.c; ++c) {
                                const int ih = oh * s_h + kh - pad_h;
                                const int iw = ow * s_w + kw - pad_w;
                                if (ih < 0 || iw < 0 || ih >= xs.h || iw >= xs.w) continue;
                                acc += double(x(n, c, ih, iw)) * w(k, c, kh, kw);
                            }
                    y(n, k, oh, ow) = static_cast<float>(acc);
                }
    return y;
}

struct RandomCase {
    ConvParams params;
    Shape4 input;
};

// g drawn from {1, 2, 4, 8, C_in}; K, stride, pad from {1,3}, {1,2}, {0,1}.
inline RandomCase random_case(std::mt19937 &gen, int max_channels = 16, int max_hw = 9) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
    static constexpr int groups[] = {1, 2, 4, 8, 0};
    int g = groups[pick(0, 4)];
    const int unit = g == 0 ? 1 : g;
    const int c_in = unit * pick(1, std::max(1, max_channels / unit));
    if (g == 0) g = c_in;
    const int c_out = g * pick(1, std::max(1, max_channels / g));
    const int k = pick(0, 1) ? 3 : 1;
    const int s = pick(1, 2);
    const int pad = pick(0, 1);
    const int min_hw = std::max(1, k - 2 * pad);
    RandomCase rc;
    rc.params = {c_in, c_out, k, k, s, s, {pad, pad}, g};
    rc.input = {pick(1, 2), c_in, pick(min_hw, max_hw), pick(min_hw, max_hw)};
    return rc;
}

class ScratchDir {
public:
    explicit ScratchDir(const std::string &tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path()
                / ("gspc_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir &) = delete;
    ScratchDir &operator=(const ScratchDir &) = delete;
    const std::filesystem::path &path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline bool bit_equal(const Tensor4 &a, const Tensor4 &b) {
    return a.shape() == b.shape() && checksum(a) == checksum(b)
            && std::equal(a.data().begin(), a.data().end(), b.data().begin(),
                    [](float p, float q) { return std::memcmp(&p, &q, sizeof p) == 0; });
}

} // namespace gspc::test
