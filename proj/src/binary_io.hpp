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

// Little-endian u32 / float32 stream helpers shared by the fixture and
// prepacked-kernel file formats.

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>

#include "gspc/errors.hpp"

namespace gspc::detail {

inline void put_u32(std::ostream &os, std::uint32_t v) {
    std::array<char, 4> b {};
    for (int i = 0; i < 4; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b.data(), b.size());
}

inline std::uint32_t get_u32(std::istream &is, const std::string &what) {
    std::array<unsigned char, 4> b {};
    is.read(reinterpret_cast<char *>(b.data()), b.size());
    if (!is) throw parse_error("truncated header reading " + what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline void put_floats(std::ostream &os, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char *>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(float)));
    } else {
        for (float f : values)
            put_u32(os, std::bit_cast<std::uint32_t>(f));
    }
}

inline void get_floats(std::istream &is, std::span<float> out) {
    if constexpr (std::endian::native == std::endian::little) {
        is.read(reinterpret_cast<char *>(out.data()),
                static_cast<std::streamsize>(out.size() * sizeof(float)));
        if (!is) throw parse_error("truncated payload");
    } else {
        for (float &f : out)
            f = std::bit_cast<float>(get_u32(is, "payload"));
    }
}

inline void expect_eof(std::istream &is) {
    if (is.peek() != std::char_traits<char>::eof())
        throw parse_error("trailing bytes after payload");
}

} // namespace gspc::detail
