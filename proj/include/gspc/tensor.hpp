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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gspc {

/// Extents of an NCHW tensor. All four must be >= 1.
struct Shape4 {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t count() const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c)
                * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
    bool operator==(const Shape4 &) const = default;
};

std::string to_string(const Shape4 &s);

/// Throws config_error unless every extent is >= 1.
void check_shape(const Shape4 &s);

/// Row-major offset of (n, c, h, w). Throws bounds_error outside the box.
std::size_t flat_index(const Shape4 &s, int n, int c, int h, int w);

/// Symmetric zero padding: pad_h rows top and bottom, pad_w columns left and right.
struct PaddingSpec {
    int pad_h = 0;
    int pad_w = 0;
    bool operator==(const PaddingSpec &) const = default;
};

/// Dense float32 NCHW tensor, row-major, contiguous.
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(const Shape4 &shape, float fill = 0.f);
    Tensor4(const Shape4 &shape, std::vector<float> data);

    const Shape4 &shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }

    // unchecked element access
    float &operator()(int n, int c, int h, int w) {
        return data_[offset(n, c, h, w)];
    }
    const float &operator()(int n, int c, int h, int w) const {
        return data_[offset(n, c, h, w)];
    }

    float &at(int n, int c, int h, int w) {
        return data_[flat_index(shape_, n, c, h, w)];
    }
    float at(int n, int c, int h, int w) const {
        return data_[flat_index(shape_, n, c, h, w)];
    }

    std::vector<float> release() && { return std::move(data_); }

    bool operator==(const Tensor4 &) const = default;

private:
    std::size_t offset(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h)
                * shape_.w
                + w;
    }

    Shape4 shape_ {};
    std::vector<float> data_;
};

Tensor4 pad_input(const Tensor4 &x, const PaddingSpec &pad);

/// |a_i - b_i| <= atol + rtol * |b_i| for every element. Shapes must match.
bool allclose(const Tensor4 &a, const Tensor4 &b, double rtol = 1e-5,
        double atol = 1e-8);

/// Largest |a_i - b_i| / max(|b_i|, floor). Shapes must match.
double max_relative_error(
        const Tensor4 &a, const Tensor4 &b, double floor = 1e-6);

/// Uniform values in [-1, 1) from std::mt19937 seeded with `seed`:
/// value = (u >> 8) * 2^-23 - 1 for each 32-bit draw u, in flat order.
/// Bit-identical across platforms for the same (shape, seed).
Tensor4 random_fill(const Shape4 &shape, std::uint32_t seed);

/// FNV-1a over the IEEE bit patterns of every element, in flat order.
std::uint64_t checksum(const Tensor4 &t);

// Fixture files: four little-endian u32 extents N, C, H, W followed by
// N*C*H*W little-endian float32 values.
void write_tensor(const std::filesystem::path &path, const Tensor4 &t);
Tensor4 read_tensor(const std::filesystem::path &path);

} // namespace gspc
