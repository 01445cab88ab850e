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

#include "gspc/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "binary_io.hpp"
#include "gspc/errors.hpp"

namespace gspc {

std::string to_string(const Shape4 &s) {
    return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + ","
            + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

void check_shape(const Shape4 &s) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
        throw config_error("tensor extents must be >= 1, got " + to_string(s));
    const double elems = double(s.n) * double(s.c) * double(s.h) * double(s.w);
    if (elems * sizeof(float) > double(std::numeric_limits<std::ptrdiff_t>::max()))
        throw config_error("tensor " + to_string(s) + " exceeds addressable range");
}

std::size_t flat_index(const Shape4 &s, int n, int c, int h, int w) {
    if (n < 0 || n >= s.n || c < 0 || c >= s.c || h < 0 || h >= s.h || w < 0
            || w >= s.w)
        throw bounds_error("index (" + std::to_string(n) + ","
                + std::to_string(c) + "," + std::to_string(h) + ","
                + std::to_string(w) + ") outside " + to_string(s));
    return ((static_cast<std::size_t>(n) * s.c + c) * s.h + h) * s.w + w;
}

Tensor4::Tensor4(const Shape4 &shape, float fill)
    : shape_(shape), data_((check_shape(shape), shape.count()), fill) {}

Tensor4::Tensor4(const Shape4 &shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
    check_shape(shape);
    if (data_.size() != shape.count())
        throw config_error("tensor data length " + std::to_string(data_.size())
                + " does not match shape " + to_string(shape));
}

Tensor4 pad_input(const Tensor4 &x, const PaddingSpec &pad) {
    if (pad.pad_h < 0 || pad.pad_w < 0)
        throw config_error("padding must be non-negative");
    const Shape4 &s = x.shape();
    if (pad.pad_h == 0 && pad.pad_w == 0) return x;

    Tensor4 out({s.n, s.c, s.h + 2 * pad.pad_h, s.w + 2 * pad.pad_w}, 0.f);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int h = 0; h < s.h; ++h) {
                const float *src = &x(n, c, h, 0);
                std::copy(src, src + s.w, &out(n, c, h + pad.pad_h, pad.pad_w));
            }
    return out;
}

bool allclose(const Tensor4 &a, const Tensor4 &b, double rtol, double atol) {
    if (a.shape() != b.shape())
        throw config_error("allclose: shape mismatch " + to_string(a.shape())
                + " vs " + to_string(b.shape()));
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double diff = std::abs(double(da[i]) - double(db[i]));
        if (!(diff <= atol + rtol * std::abs(double(db[i])))) return false;
    }
    return true;
}

double max_relative_error(const Tensor4 &a, const Tensor4 &b, double floor) {
    if (a.shape() != b.shape())
        throw config_error("max_relative_error: shape mismatch");
    auto da = a.data();
    auto db = b.data();
    double worst = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double diff = std::abs(double(da[i]) - double(db[i]));
        const double rel = diff / std::max(std::abs(double(db[i])), floor);
        if (std::isnan(rel)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, rel);
    }
    return worst;
}

Tensor4 random_fill(const Shape4 &shape, std::uint32_t seed) {
    check_shape(shape);
    std::mt19937 gen(seed);
    std::vector<float> data(shape.count());
    constexpr float scale = 1.0f / float(1u << 23);
    for (float &v : data)
        v = static_cast<float>(gen() >> 8) * scale - 1.0f;
    return Tensor4(shape, std::move(data));
}

std::uint64_t checksum(const Tensor4 &t) {
    std::uint64_t h = 1469598103934665603ull;
    for (float f : t.data()) {
        auto bits = std::bit_cast<std::uint32_t>(f);
        for (int i = 0; i < 4; ++i) {
            h ^= (bits >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

void write_tensor(const std::filesystem::path &path, const Tensor4 &t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open " + path.string() + " for writing");
    const Shape4 &s = t.shape();
    for (int e : {s.n, s.c, s.h, s.w})
        detail::put_u32(os, static_cast<std::uint32_t>(e));
    detail::put_floats(os, t.data());
    if (!os) throw io_error("write failed: " + path.string());
}

Tensor4 read_tensor(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open " + path.string());
    Shape4 s;
    s.n = static_cast<int>(detail::get_u32(is, "N"));
    s.c = static_cast<int>(detail::get_u32(is, "C"));
    s.h = static_cast<int>(detail::get_u32(is, "H"));
    s.w = static_cast<int>(detail::get_u32(is, "W"));
    check_shape(s);
    std::vector<float> data(s.count());
    detail::get_floats(is, data);
    detail::expect_eof(is);
    return Tensor4(s, std::move(data));
}

} // namespace gspc
