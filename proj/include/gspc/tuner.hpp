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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gspc/gspc.hpp"
#include "gspc/workloads.hpp"

namespace gspc {

/// Timed kernels. The oracle is deliberately not one of them.
enum class KernelId { gspc, direct, im2col };

std::string_view to_string(KernelId k);
KernelId parse_kernel(std::string_view s);

/// Deterministic input and weights for a layer: random_fill with seed and
/// seed + 1 respectively.
struct LayerData {
    Tensor4 x;
    Tensor4 w;
};
LayerData make_layer_data(const LayerSpec &layer, std::uint32_t seed);

/// Runs one kernel. tiles and prepacked only matter for KernelId::gspc.
Tensor4 run_kernel(KernelId kernel, const LayerData &data,
        const ConvParams &params, const TileConfig &tiles,
        const PackedKernels *prepacked = nullptr, int threads = 1);

/// Checksum of direct_grouped_conv on make_layer_data(layer, seed).
std::uint64_t oracle_checksum(const LayerSpec &layer, std::uint32_t seed);

struct TrialResult {
    TileConfig tiles;
    std::int64_t median_ns = 0;
    int reps = 0;
    std::uint64_t checksum = 0;
    bool valid = true;
    bool operator==(const TrialResult &) const = default;
};

struct MeasureOptions {
    int reps = 3;
    int warmup = 1;
    std::uint32_t seed = 0;
    int threads = 1;
};

/// Middle element for odd counts; mean of the two middles (rounded down)
/// for even counts.
std::int64_t median_of(std::vector<std::int64_t> samples);

/// Runs warmup untimed iterations, then reps timed ones on fixed-seed data.
/// GSPC weights are packed before the timed region; input packing and the
/// output relayout are inside it. A throwing kernel yields valid == false.
TrialResult measure(KernelId kernel, const TileConfig &tiles,
        const LayerSpec &layer, const MeasureOptions &opts = {});

/// Every (T_O, T_I, unroll) with T_O | KPG, T_I | CPG, ascending T_O, then
/// T_I, unroll false before true.
std::vector<TileConfig> enumerate_space(const ConvParams &params);

struct SearchStrategy {
    enum class Kind { exhaustive, random };
    Kind kind = Kind::exhaustive;
    std::size_t budget = 0; // random only
    std::uint32_t seed = 0; // random only

    static SearchStrategy exhaustive() { return {}; }
    static SearchStrategy random(std::size_t budget, std::uint32_t seed) {
        return {Kind::random, budget, seed};
    }
};

struct TuningRecord {
    std::string layer_key;
    TrialResult best;
    std::vector<TrialResult> all_trials;
    std::string platform_tag;
    bool operator==(const TuningRecord &) const = default;
};

/// CPU model string plus the compiled SIMD width.
std::string host_platform_tag();

/// Evaluates the search space sequentially on one thread. The default tiles
/// are always among the trials. Trials whose checksum differs from the
/// oracle's are marked invalid and never chosen as best.
TuningRecord tune(const LayerSpec &layer, const SearchStrategy &strategy,
        int simd_lanes, const MeasureOptions &opts = {},
        const std::string &platform_tag = host_platform_tag());

/// "<layer_key>.json"
std::string record_filename(const LayerSpec &layer);

void save_record(const TuningRecord &record, const std::filesystem::path &path);
TuningRecord load_record(const std::filesystem::path &path);
/// Throws key_mismatch_error when the stored key is not layer_key(layer).
TuningRecord load_record(
        const std::filesystem::path &path, const LayerSpec &layer);

/// $GSPC_RECORD_DIR if set, else "gspc_records".
std::filesystem::path record_dir();

} // namespace gspc
