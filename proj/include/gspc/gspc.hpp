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

// Grouped spatial pack convolution: the kernels are relaid into a 7D volume,
// the padded input into a 6D volume, the convolution accumulates into a 6D
// output volume whose innermost axis is the output-channel tile, and a final
// relayout produces the NCHW result.

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "gspc/reference.hpp"
#include "gspc/tensor.hpp"

namespace gspc {

/// Tuning parameters. t_o tiles output channels within a group, t_i input
/// channels within a group; both must divide their per-group count.
struct TileConfig {
    int t_o = 1;
    int t_i = 1;
    bool unroll_kw = false;
    bool operator==(const TileConfig &) const = default;
};

std::string to_string(const TileConfig &t);

/// Returns tiles unchanged or throws tile_error naming the violated bound.
TileConfig validate_tiles(const ConvParams &params, const TileConfig &tiles);

/// Largest divisor of KPG (resp. CPG) not above simd_lanes; no unrolling.
TileConfig default_tiles(const ConvParams &params, int simd_lanes);

/// Host SIMD width in float32 lanes, from the instruction set compiled for.
int native_simd_lanes();

/// Row-major packed volume. Tag keeps the three volume kinds distinct.
template <class Tag, std::size_t Rank>
struct PackedVolume {
    std::array<int, Rank> dims {};
    std::vector<float> data;

    static constexpr std::size_t rank = Rank;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (int d : dims)
            n *= static_cast<std::size_t>(d);
        return n;
    }

    std::size_t offset(const std::array<int, Rank> &idx) const {
        std::size_t off = 0;
        for (std::size_t i = 0; i < Rank; ++i)
            off = off * static_cast<std::size_t>(dims[i]) + idx[i];
        return off;
    }

    float at(const std::array<int, Rank> &idx) const {
        return data[offset(idx)];
    }

    bool operator==(const PackedVolume &) const = default;
};

struct kernels_tag {};
struct inputs_tag {};
struct outputs_tag {};

/// (g, KPG/T_O, CPG/T_I, K_h, K_w, T_I, T_O)
using PackedKernels = PackedVolume<kernels_tag, 7>;
/// (g, N, CPG/T_I, H_pad, T_I, W_pad)
using PackedInputs = PackedVolume<inputs_tag, 6>;
/// (g, N, KPG/T_O, H_out, W_out, T_O)
using PackedOutputs = PackedVolume<outputs_tag, 6>;

/// W'[j][k][c][kh][kw][ci][co] = W[j*KPG + k*T_O + co][c*T_I + ci][kh][kw]
PackedKernels pack_kernels(
        const Tensor4 &w, const ConvParams &params, const TileConfig &tiles);

/// x must already carry params.pad.
/// X'[j][n][C][h][c][w] = X_pad[n][j*CPG + C*T_I + c][h][w]
PackedInputs pack_inputs(
        const Tensor4 &x_padded, const ConvParams &params, const TileConfig &tiles);

/// Pads and packs in one pass; equal to pack_inputs(pad_input(x, pad), ...).
PackedInputs pack_padded_inputs(
        const Tensor4 &x, const ConvParams &params, const TileConfig &tiles);

struct ComputeOptions {
    /// Worker threads over the (group, batch) slabs. 1 runs inline.
    int threads = 1;
};

/// Tiled convolution on packed volumes. For every Y' element the products
/// are summed over input channel c, then kh, then kw, in ascending order,
/// so the result is bit-identical to direct_grouped_conv for any tiling.
PackedOutputs compute(const PackedInputs &px, const PackedKernels &pw,
        const ConvParams &params, const TileConfig &tiles,
        const ComputeOptions &opts = {});

struct UnpackStats {
    std::size_t element_moves = 0;
    bool identity = false; // storage of Y' was reused as Y
};

/// True when the Y' -> Y relayout is the identity permutation of flat memory.
bool unpack_is_identity(const ConvParams &params, const TileConfig &tiles,
        int batch, int out_h, int out_w);

/// Y[n][c][h][w] = Y'[c / KPG][n][(c % KPG) / T_O][h][w][(c % KPG) % T_O].
/// When the relayout is the identity the buffer is moved, not copied.
Tensor4 unpack_outputs(PackedOutputs py, const ConvParams &params,
        UnpackStats *stats = nullptr);

/// The four stages end to end. A non-null prepacked skips kernel packing and
/// must have been produced with the same params and tiles.
Tensor4 gspc_conv(const Tensor4 &x, const Tensor4 &w, const ConvParams &params,
        const TileConfig &tiles, const PackedKernels *prepacked = nullptr,
        const ComputeOptions &opts = {});

// Prepacked kernel file: seven little-endian u32 dims in packed order, then
// the row-major float32 payload.
void write_packed_kernels(
        const std::filesystem::path &path, const PackedKernels &pw);
PackedKernels read_packed_kernels(const std::filesystem::path &path);

/// Tiles encoded in a packed kernel volume's dims (unroll_kw unset).
TileConfig tiles_of(const PackedKernels &pw);

} // namespace gspc
