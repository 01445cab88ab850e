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

// Library side of the command-line tool: verification sweeps, per-layer
// benchmarks with network totals, tuning sweeps and report emission.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gspc/tuner.hpp"
#include "gspc/workloads.hpp"

namespace gspc {

/// Process exit codes of the gspc tool.
enum class ExitCode : int {
    ok = 0,
    verify_failed = 1,
    config_error = 2,
    io_error = 3,
};

/// Networks to run: one built-in name with a variant list, or a table file.
struct WorkloadSelection {
    std::string network; // built-in name; empty when layers_file is set
    std::vector<Variant> variants;
    std::optional<std::filesystem::path> layers_file;
};

/// Loads the selected tables in the order given.
std::vector<NetworkSpec> load_selection(const WorkloadSelection &sel);

// ---------------------------------------------------------------- verify

struct VerifyConfig {
    WorkloadSelection workloads; // may be empty: random suite only
    std::vector<KernelId> kernels {KernelId::gspc, KernelId::direct, KernelId::im2col};
    std::size_t suite_size = 200;
    std::uint32_t seed = 0;
    int simd_lanes = native_simd_lanes();
    int threads = 1;
    double rtol = 1e-5;
    double atol = 1e-6;
    /// Test hook applied to every kernel output before comparison.
    std::function<void(KernelId, const LayerSpec &, Tensor4 &)> corrupt;
};

struct VerifyFailure {
    KernelId kernel;
    std::string where; // e.g. "wrn40_2 G(8) layer 5 (n1_ci32_...)"
    double max_rel_error = 0;
};

struct KernelVerifyStats {
    KernelId kernel;
    std::size_t cases = 0;
    double max_rel_error = 0;
};

struct VerifyReport {
    std::vector<KernelVerifyStats> per_kernel;
    std::vector<VerifyFailure> failures;
    std::size_t distinct_shapes = 0;
    bool passed() const { return failures.empty(); }
};

/// Every kernel against the oracle on the random suite and on each distinct
/// layer shape of the selected networks. GSPC runs with default tiles.
VerifyReport run_verify(const VerifyConfig &cfg);

void print_verify_report(std::ostream &os, const VerifyReport &r);

// ----------------------------------------------------------------- bench

struct BenchConfig {
    WorkloadSelection workloads;
    std::vector<KernelId> kernels {KernelId::gspc};
    bool tuned = false; // load tiles from record_dir, else default tiles
    std::filesystem::path records = record_dir();
    int reps = 5;
    int warmup = 1;
    std::uint32_t seed = 0;
    int simd_lanes = native_simd_lanes();
    int threads = 1; // anything else is not comparable to 1-thread results

    /// Throws config_error on reps < 3, warmup < 1, threads < 1, bad lanes.
    void validate() const;
};

struct BenchRow {
    enum class Kind { layer, total, warning };
    std::string network;
    Variant variant = Variant::S;
    Kind kind = Kind::layer;
    std::size_t layer = 0; // layer index for layer and warning rows
    KernelId kernel = KernelId::gspc;
    std::optional<TileConfig> tiles; // GSPC layer rows only
    double median_ms = 0;
    double weight_pack_ms = 0;
    std::uint64_t macs = 0;
    std::uint64_t params = 0;
    std::optional<double> expected_ms;
    std::optional<double> ratio; // median_ms / expected_ms
    /// Output checksum of layer rows. Not part of the CSV schema.
    std::optional<std::uint64_t> checksum;

    bool operator==(const BenchRow &) const = default;
};

/// Times each kernel on each layer. Per kernel, the S variant's total time
/// over its conv MACs is the per-MAC time behind every expected_ms; S is
/// benchmarked first when the selection of a built-in network omits it, so
/// that calibration always comes from the same session. Warnings for missing
/// tuning records go to diag as well as into warning rows.
std::vector<BenchRow> run_bench(const BenchConfig &cfg, std::ostream *diag = nullptr);

inline constexpr std::string_view kCsvHeader
        = "network,variant,layer,kernel,t_o,t_i,unroll,median_ms,weight_pack_ms,"
          "macs,params,expected_ms,ratio";

void write_csv(std::ostream &os, const std::vector<BenchRow> &rows);
/// Inverse of write_csv (checksums are not recovered).
std::vector<BenchRow> parse_csv(std::istream &is, const std::string &source = "<csv>");
void write_json(std::ostream &os, const std::vector<BenchRow> &rows);

/// Per-variant totals per kernel, variants in the order S, G(2), ..., G(N).
void write_summary(std::ostream &os, const std::vector<BenchRow> &rows);
/// Tab-separated plot data: kernel, variant, macs, measured_ms, expected_ms.
void write_plot_data(std::ostream &os, const std::vector<BenchRow> &rows);

// ------------------------------------------------------------------ tune

struct TuneConfig {
    WorkloadSelection workloads;
    /// Layer kinds to tune. Empty means all kinds.
    std::vector<LayerKind> kinds {LayerKind::grouped};
    SearchStrategy strategy;
    std::filesystem::path records = record_dir();
    bool resume = false;
    MeasureOptions measure {5, 1, 0, 1};
    int simd_lanes = native_simd_lanes();
};

struct TuneSummary {
    std::vector<std::filesystem::path> written;
    std::vector<std::filesystem::path> skipped; // present and --resume
    std::size_t distinct_shapes = 0;
};

/// Tunes each distinct layer shape once and writes one record per shape.
TuneSummary run_tune(const TuneConfig &cfg, std::ostream *progress = nullptr);

/// Distinct layer shapes of the selected kinds, in first-appearance order.
std::vector<LayerSpec> distinct_layers(
        const std::vector<NetworkSpec> &nets, const std::vector<LayerKind> &kinds);

} // namespace gspc
