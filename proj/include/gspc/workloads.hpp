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

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gspc/reference.hpp"

namespace gspc {

enum class LayerKind { standard, grouped, pointwise };

std::string_view to_string(LayerKind k);
LayerKind parse_layer_kind(std::string_view s);

/// One convolution of a network at batch size n (1 throughout the tables).
struct LayerSpec {
    ConvParams params;
    int in_h = 1;
    int in_w = 1;
    int n = 1;
    LayerKind kind = LayerKind::standard;

    Shape4 input_shape() const { return {n, params.c_in, in_h, in_w}; }
    Shape4 weight_shape() const { return params.weight_shape(); }
    Shape4 output_shape() const;

    /// ConvParams invariants plus kernel fitting the padded input.
    void validate() const;

    bool operator==(const LayerSpec &) const = default;
};

/// Canonical shape key, e.g. "n1_ci32_co32_k3x3_s1x1_p1x1_g16_in32x32".
std::string layer_key(const LayerSpec &layer);

/// S, then G(g) for g in {2, 4, 8, 16, N}; G(N) sets g to each layer's C_in.
enum class Variant { S, G2, G4, G8, G16, GN };

/// In plotting order S, G(2), G(4), G(8), G(16), G(N).
inline constexpr std::array<Variant, 6> all_variants
        = {Variant::S, Variant::G2, Variant::G4, Variant::G8, Variant::G16,
                Variant::GN};

std::string to_string(Variant v); // "S", "G(2)", ..., "G(N)"
std::string file_tag(Variant v); // "S", "G2", ..., "GN"
/// Accepts "S", "G(4)", "G4", "G(N)", "GN" (case-insensitive N).
Variant parse_variant(std::string_view s);

inline constexpr std::array<std::string_view, 3> builtin_network_names
        = {"wrn40_2", "resnet34", "mobilenet_v2"};

/// Parameters and MACs outside the convolutions (batch norm, classifier).
struct ExtraCost {
    std::uint64_t params = 0;
    std::uint64_t macs = 0;
    std::string note;
    bool operator==(const ExtraCost &) const = default;
};

struct NetworkSpec {
    std::string name;
    Variant variant = Variant::S;
    std::vector<LayerSpec> layers;
    std::vector<ExtraCost> extras;
    std::optional<double> top1; // inert metadata

    bool operator==(const NetworkSpec &) const = default;
};

/// N * C_in * C_out * K_h * K_w * H_out * W_out / g
std::uint64_t macs(const LayerSpec &layer);

/// standard: C_out*C_in*K_h*K_w; grouped: C_out*(C_in/g)*K_h*K_w;
/// pointwise: C_out*C_in.
std::uint64_t params_count(const LayerSpec &layer);

struct LayerCost {
    std::size_t index = 0;
    std::uint64_t macs = 0;
    std::uint64_t params = 0;
};

struct MacsReport {
    std::vector<LayerCost> per_layer;
    std::uint64_t conv_macs = 0; // sum of per_layer macs
    std::uint64_t conv_params = 0;
    std::uint64_t total_macs = 0; // conv plus extras
    std::uint64_t total_params = 0;
    std::optional<double> expected_ms;
};

MacsReport network_totals(const NetworkSpec &net);

/// s_time_ms * target_macs / s_macs. Inputs must be positive.
double expected_time(double s_time_ms, double s_macs, double target_macs);

// Network table text format, one record per line ('#' starts a comment):
//   gspc-network 1
//   network <name>
//   variant <S|G(g)|G(N)>
//   top1 <error %>                                     (optional)
//   conv <kind> c_in c_out k_h k_w s_h s_w pad_h pad_w g in_h in_w
//   extra <params> <macs> <free-text note>
NetworkSpec parse_network(std::istream &is, const std::string &source = "<stream>");
NetworkSpec load_network(const std::filesystem::path &path);
void write_network(std::ostream &os, const NetworkSpec &net);

/// Directory holding the shipped tables: $GSPC_DATA_DIR if set, else the
/// path baked in at build time.
std::filesystem::path network_data_dir();

/// Loads <data dir>/<name>_<tag>.net. Throws lookup_error for unknown names.
NetworkSpec builtin_network(std::string_view name, Variant variant);

/// Randomized grouped-convolution layers spanning g in {1,2,4,8,C_in},
/// K in {1,3}, stride in {1,2}, pad in {0,1}, up to max_channels channels.
std::vector<LayerSpec> random_layer_suite(
        std::size_t count, std::uint32_t seed, int max_channels = 32);

} // namespace gspc
