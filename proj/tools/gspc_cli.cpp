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

// gspc command-line tool: verify | bench | tune | report | pack.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gspc/bench.hpp"
#include "gspc/errors.hpp"

namespace {

using namespace gspc;

std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<Variant> parse_variants(const std::string &s) {
    if (s == "all") return {all_variants.begin(), all_variants.end()};
    std::vector<Variant> v;
    for (const auto &item : split_list(s))
        v.push_back(parse_variant(item));
    if (v.empty()) throw config_error("--variant is empty");
    return v;
}

std::vector<KernelId> parse_kernels(const std::string &s) {
    if (s == "all") return {KernelId::gspc, KernelId::direct, KernelId::im2col};
    std::vector<KernelId> k;
    for (const auto &item : split_list(s))
        k.push_back(parse_kernel(item));
    if (k.empty()) throw config_error("--kernel is empty");
    return k;
}

std::vector<LayerKind> parse_kinds(const std::string &s) {
    if (s == "all") return {};
    std::vector<LayerKind> k;
    for (const auto &item : split_list(s)) {
        try {
            k.push_back(parse_layer_kind(item));
        } catch (const parse_error &e) {
            throw config_error(e.what());
        }
    }
    return k;
}

struct Common {
    std::string network;
    std::string variant = "all";
    std::string layers;
    std::string kernel;
    int reps = 5;
    int warmup = 1;
    std::uint32_t seed = 0;
    int simd_lanes = native_simd_lanes();
    int threads = 1;
    std::string out;
    std::string format = "csv";
};

WorkloadSelection selection(const Common &c) {
    WorkloadSelection sel;
    if (!c.layers.empty()) {
        if (!c.network.empty()) throw config_error("give --network or --layers, not both");
        sel.layers_file = c.layers;
        return sel;
    }
    sel.network = c.network;
    if (!c.network.empty()) sel.variants = parse_variants(c.variant);
    return sel;
}

std::ofstream open_out(const std::filesystem::path &p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p);
    if (!os) throw io_error("cannot write " + p.string());
    return os;
}

int cmd_verify(const Common &c, int corrupt_layer) {
    VerifyConfig cfg;
    cfg.workloads = selection(c);
    if (!c.kernel.empty()) cfg.kernels = parse_kernels(c.kernel);
    cfg.seed = c.seed;
    cfg.simd_lanes = c.simd_lanes;
    cfg.threads = c.threads;
    if (corrupt_layer >= 0) {
        // negative control: swap two output elements of one network layer
        const auto nets = load_selection(cfg.workloads);
        if (nets.empty() || static_cast<std::size_t>(corrupt_layer) >= nets[0].layers.size())
            throw config_error("--corrupt-layer needs a network with that layer");
        const LayerSpec target = nets[0].layers[corrupt_layer];
        cfg.corrupt = [target](KernelId, const LayerSpec &l, Tensor4 &y) {
            if (!(l == target) || y.size() < 2) return;
            auto d = y.data();
            std::swap(d[0], d[d.size() - 1]);
            d[0] += 1.0f;
        };
    }
    const VerifyReport r = run_verify(cfg);
    print_verify_report(std::cout, r);
    return static_cast<int>(r.passed() ? ExitCode::ok : ExitCode::verify_failed);
}

void emit_rows(const std::vector<BenchRow> &rows, const Common &c) {
    if (c.out.empty()) {
        if (c.format == "json") write_json(std::cout, rows);
        else write_csv(std::cout, rows);
    } else {
        auto os = open_out(c.out);
        if (c.format == "json") write_json(os, rows);
        else write_csv(os, rows);
    }
}

int cmd_bench(const Common &c, bool tuned) {
    BenchConfig cfg;
    cfg.workloads = selection(c);
    if (!c.kernel.empty()) cfg.kernels = parse_kernels(c.kernel);
    cfg.tuned = tuned;
    cfg.reps = c.reps;
    cfg.warmup = c.warmup;
    cfg.seed = c.seed;
    cfg.simd_lanes = c.simd_lanes;
    cfg.threads = c.threads;
    if (c.threads != 1)
        std::cerr << "note: --threads " << c.threads
                  << " results are not comparable with single-thread runs\n";
    const auto rows = run_bench(cfg, &std::cerr);
    emit_rows(rows, c);
    write_summary(c.out.empty() ? std::cerr : std::cout, rows);
    return 0;
}

int cmd_tune(const Common &c, const std::string &strategy, std::size_t budget,
        bool resume, const std::string &kinds) {
    TuneConfig cfg;
    cfg.workloads = selection(c);
    cfg.kinds = parse_kinds(kinds);
    if (strategy == "random") {
        if (budget == 0) throw config_error("--strategy random needs --budget > 0");
        cfg.strategy = SearchStrategy::random(budget, c.seed);
    }
    if (!c.out.empty()) cfg.records = c.out;
    cfg.resume = resume;
    cfg.measure = {c.reps, c.warmup, c.seed, 1};
    if (c.reps < 3) throw config_error("--reps must be >= 3");
    if (c.warmup < 1) throw config_error("--warmup must be >= 1");
    cfg.simd_lanes = c.simd_lanes;
    const TuneSummary s = run_tune(cfg, &std::cout);
    std::cout << s.distinct_shapes << " shapes, " << s.written.size() << " written, "
              << s.skipped.size() << " skipped, records in " << cfg.records.string() << "\n";
    return 0;
}

int cmd_report(const Common &c, const std::string &input) {
    std::ifstream is(input);
    if (!is) throw io_error("cannot open " + input);
    const auto rows = parse_csv(is, input);
    write_summary(std::cout, rows);
    if (!c.out.empty()) {
        auto sum = open_out(c.out + ".summary.txt");
        write_summary(sum, rows);
        auto plot = open_out(c.out + ".plot.tsv");
        write_plot_data(plot, rows);
        if (c.format == "json") {
            auto js = open_out(c.out + ".json");
            write_json(js, rows);
        }
    }
    return 0;
}

int cmd_pack(const Common &c, int layer_index, const std::string &weights,
        int t_o, int t_i) {
    const auto sel = selection(c);
    const auto nets = load_selection(sel);
    if (nets.empty()) throw config_error("pack needs --network/--variant or --layers");
    if (layer_index < 0 || static_cast<std::size_t>(layer_index) >= nets[0].layers.size())
        throw config_error("--layer-index out of range");
    if (c.out.empty()) throw config_error("pack needs --out");
    const LayerSpec &layer = nets[0].layers[layer_index];
    TileConfig tiles = default_tiles(layer.params, c.simd_lanes);
    if (t_o > 0) tiles.t_o = t_o;
    if (t_i > 0) tiles.t_i = t_i;
    const Tensor4 w = weights.empty() ? make_layer_data(layer, c.seed).w
                                      : read_tensor(weights);
    const PackedKernels pw = pack_kernels(w, layer.params, validate_tiles(layer.params, tiles));
    write_packed_kernels(c.out, pw);
    std::cout << "packed " << layer_key(layer) << " tiles " << to_string(tiles) << " -> "
              << c.out << "\n";
    return 0;
}

void add_common(CLI::App *sub, Common &c, bool timing) {
    sub->add_option("--network", c.network, "wrn40_2, resnet34 or mobilenet_v2");
    sub->add_option("--variant", c.variant, "comma list of S,G(2),..,G(N) or 'all'");
    sub->add_option("--layers", c.layers, "network table file instead of --network");
    sub->add_option("--seed", c.seed, "data seed");
    sub->add_option("--simd-lanes", c.simd_lanes, "lane count for default tiles");
    if (timing) {
        sub->add_option("--kernel", c.kernel, "comma list of gspc,direct,im2col or 'all'");
        sub->add_option("--reps", c.reps, "timed repetitions (>= 3)");
        sub->add_option("--warmup", c.warmup, "untimed warmup runs (>= 1)");
        sub->add_option("--threads", c.threads, "worker threads for GSPC compute");
    }
    sub->add_option("--out", c.out, "output path");
    sub->add_option("--format", c.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app {"Grouped spatial pack convolution tool"};
    app.require_subcommand(1);
    Common c;

    auto *verify = app.add_subcommand("verify", "check every kernel against the oracle");
    add_common(verify, c, false);
    verify->add_option("--kernel", c.kernel, "comma list of gspc,direct,im2col or 'all'");
    verify->add_option("--threads", c.threads, "worker threads for GSPC compute");
    int corrupt_layer = -1;
    verify->add_option("--corrupt-layer", corrupt_layer)->group("");

    auto *bench = app.add_subcommand("bench", "time kernels per layer and per network");
    add_common(bench, c, true);
    bool tuned = false;
    auto *tuned_flag = bench->add_flag("--tuned", tuned, "tiles from tuning records");
    bench->add_flag("--default", "default tiles (the default)")->excludes(tuned_flag);

    auto *tune = app.add_subcommand("tune", "search GSPC tiles per distinct layer shape");
    add_common(tune, c, true);
    std::string strategy = "exhaustive", kinds = "grouped";
    std::size_t budget = 0;
    bool resume = false;
    tune->add_option("--strategy", strategy)->check(CLI::IsMember({"exhaustive", "random"}));
    tune->add_option("--budget", budget, "configs sampled by --strategy random");
    tune->add_flag("--resume", resume, "skip shapes that already have a record");
    tune->add_option("--kinds", kinds, "layer kinds to tune: grouped,pointwise,standard or all");

    auto *report = app.add_subcommand("report", "summary and plot data from a bench CSV");
    std::string input;
    report->add_option("--input", input, "CSV written by bench")->required();
    report->add_option("--out", c.out, "output prefix");
    report->add_option("--format", c.format)->check(CLI::IsMember({"csv", "json"}));

    auto *pack = app.add_subcommand("pack", "write prepacked kernels for one layer");
    add_common(pack, c, false);
    int layer_index = 0, t_o = 0, t_i = 0;
    std::string weights;
    pack->add_option("--layer-index", layer_index, "layer of the table");
    pack->add_option("--weights", weights, "weight tensor file (random if omitted)");
    pack->add_option("--t-o", t_o, "output channel tile");
    pack->add_option("--t-i", t_i, "input channel tile");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::config_error);
    }

    try {
        if (*verify) return cmd_verify(c, corrupt_layer);
        if (*bench) return cmd_bench(c, tuned);
        if (*tune) return cmd_tune(c, strategy, budget, resume, kinds);
        if (*report) return cmd_report(c, input);
        if (*pack) return cmd_pack(c, layer_index, weights, t_o, t_i);
    } catch (const config_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::config_error);
    } catch (const lookup_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::config_error);
    } catch (const key_mismatch_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::config_error);
    } catch (const tuning_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::verify_failed);
    } catch (const io_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::io_error);
    } catch (const parse_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::io_error);
    } catch (const std::filesystem::filesystem_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::io_error);
    }
    return static_cast<int>(ExitCode::config_error);
}
