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

#include "gspc/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gspc/errors.hpp"

namespace gspc {

std::vector<NetworkSpec> load_selection(const WorkloadSelection &sel) {
    std::vector<NetworkSpec> nets;
    if (sel.layers_file) {
        nets.push_back(load_network(*sel.layers_file));
        return nets;
    }
    if (sel.network.empty()) return nets;
    if (sel.variants.empty()) throw config_error("no variant selected");
    for (Variant v : sel.variants)
        nets.push_back(builtin_network(sel.network, v));
    return nets;
}

std::vector<LayerSpec> distinct_layers(
        const std::vector<NetworkSpec> &nets, const std::vector<LayerKind> &kinds) {
    std::vector<LayerSpec> out;
    std::set<std::string> seen;
    for (const NetworkSpec &net : nets)
        for (const LayerSpec &l : net.layers) {
            if (!kinds.empty()
                    && std::find(kinds.begin(), kinds.end(), l.kind) == kinds.end())
                continue;
            if (seen.insert(layer_key(l)).second) out.push_back(l);
        }
    return out;
}

// ---------------------------------------------------------------- verify

VerifyReport run_verify(const VerifyConfig &cfg) {
    struct Case {
        LayerSpec layer;
        std::string where;
    };
    std::vector<Case> cases;
    std::set<std::string> seen;
    const auto suite = random_layer_suite(cfg.suite_size, cfg.seed);
    for (std::size_t i = 0; i < suite.size(); ++i)
        cases.push_back({suite[i],
                "random[" + std::to_string(i) + "] (" + layer_key(suite[i]) + ")"});
    // network layers of one shape run once; the label lists every site
    std::map<std::string, std::size_t> case_of;
    for (const NetworkSpec &net : load_selection(cfg.workloads))
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            const std::string key = layer_key(net.layers[i]);
            const std::string site = net.name + " " + to_string(net.variant)
                    + " layer " + std::to_string(i);
            if (seen.insert(key).second) {
                case_of[key] = cases.size();
                cases.push_back({net.layers[i], site + " (" + key + ")"});
            } else {
                cases[case_of[key]].where += ", " + site;
            }
        }

    VerifyReport r;
    r.distinct_shapes = seen.size();
    for (KernelId k : cfg.kernels)
        r.per_kernel.push_back({k, 0, 0.0});

    for (const Case &c : cases) {
        const LayerData data = make_layer_data(c.layer, cfg.seed);
        const Tensor4 ref = direct_grouped_conv(data.x, data.w, c.layer.params);
        const TileConfig tiles = default_tiles(c.layer.params, cfg.simd_lanes);
        for (KernelVerifyStats &st : r.per_kernel) {
            Tensor4 y = run_kernel(st.kernel, data, c.layer.params, tiles, nullptr,
                    cfg.threads);
            if (cfg.corrupt) cfg.corrupt(st.kernel, c.layer, y);
            ++st.cases;
            if (y.shape() != ref.shape()) {
                r.failures.push_back({st.kernel, c.where + " shape " + to_string(y.shape()),
                        0.0});
                continue;
            }
            const double err = max_relative_error(y, ref);
            st.max_rel_error = std::max(st.max_rel_error, err);
            if (!allclose(y, ref, cfg.rtol, cfg.atol))
                r.failures.push_back({st.kernel, c.where, err});
        }
    }
    return r;
}

void print_verify_report(std::ostream &os, const VerifyReport &r) {
    char buf[160];
    for (const KernelVerifyStats &st : r.per_kernel) {
        std::snprintf(buf, sizeof buf, "%-8s cases=%zu max_rel_err=%.3e\n",
                std::string(to_string(st.kernel)).c_str(), st.cases, st.max_rel_error);
        os << buf;
    }
    for (const VerifyFailure &f : r.failures) {
        std::snprintf(buf, sizeof buf, " max_rel_err=%.3e\n", f.max_rel_error);
        os << "FAIL " << to_string(f.kernel) << " " << f.where << buf;
    }
    os << (r.passed() ? "verify: PASS" : "verify: FAIL") << " ("
       << r.failures.size() << " failures)\n";
}

// ----------------------------------------------------------------- bench

void BenchConfig::validate() const {
    if (reps < 3) throw config_error("--reps must be >= 3");
    if (warmup < 1) throw config_error("--warmup must be >= 1");
    if (threads < 1) throw config_error("--threads must be >= 1");
    if (simd_lanes < 1) throw config_error("--simd-lanes must be >= 1");
    if (kernels.empty()) throw config_error("no kernel selected");
}

namespace {

double ns_to_ms(std::int64_t ns) {
    return static_cast<double>(ns) * 1e-6;
}

std::int64_t time_weight_packing(
        const LayerSpec &layer, const TileConfig &tiles, const BenchConfig &cfg) {
    const LayerData data = make_layer_data(layer, cfg.seed);
    std::vector<std::int64_t> samples;
    for (int i = 0; i < cfg.warmup + cfg.reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        PackedKernels pw = pack_kernels(data.w, layer.params, tiles);
        const auto t1 = std::chrono::steady_clock::now();
        if (i >= cfg.warmup)
            samples.push_back(
                    std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }
    return median_of(std::move(samples));
}

std::string layer_where(const NetworkSpec &net, std::size_t i) {
    return net.name + " " + to_string(net.variant) + " layer " + std::to_string(i);
}

} // namespace

std::vector<BenchRow> run_bench(const BenchConfig &cfg, std::ostream *diag) {
    cfg.validate();
    WorkloadSelection sel = cfg.workloads;
    if (!sel.layers_file && !sel.network.empty()
            && std::find(sel.variants.begin(), sel.variants.end(), Variant::S)
                    == sel.variants.end()) {
        sel.variants.insert(sel.variants.begin(), Variant::S);
        if (diag) *diag << "note: benchmarking S as well to calibrate expected_ms\n";
    }
    const std::vector<NetworkSpec> nets = load_selection(sel);
    if (nets.empty()) throw config_error("bench needs --network or --layers");
    const MeasureOptions mopts {cfg.reps, cfg.warmup, cfg.seed, cfg.threads};

    std::vector<BenchRow> rows;
    for (const NetworkSpec &net : nets)
        for (KernelId kernel : cfg.kernels) {
            BenchRow total;
            total.network = net.name;
            total.variant = net.variant;
            total.kind = BenchRow::Kind::total;
            total.kernel = kernel;
            for (std::size_t i = 0; i < net.layers.size(); ++i) {
                const LayerSpec &layer = net.layers[i];
                BenchRow row;
                row.network = net.name;
                row.variant = net.variant;
                row.layer = i;
                row.kernel = kernel;
                TileConfig tiles = default_tiles(layer.params, cfg.simd_lanes);
                if (kernel == KernelId::gspc && cfg.tuned) {
                    const auto path = cfg.records / record_filename(layer);
                    try {
                        tiles = load_record(path, layer).best.tiles;
                    } catch (const std::exception &e) {
                        BenchRow warn = row;
                        warn.kind = BenchRow::Kind::warning;
                        rows.push_back(warn);
                        if (diag)
                            *diag << "warning: " << layer_where(net, i)
                                  << ": no usable tuning record, using default tiles ("
                                  << e.what() << ")\n";
                    }
                }
                const TrialResult tr = measure(kernel, tiles, layer, mopts);
                if (!tr.valid)
                    throw tuning_error(std::string(to_string(kernel)) + " failed on "
                            + layer_where(net, i));
                row.median_ms = ns_to_ms(tr.median_ns);
                row.checksum = tr.checksum;
                if (kernel == KernelId::gspc) {
                    row.tiles = tiles;
                    row.weight_pack_ms = ns_to_ms(time_weight_packing(layer, tiles, cfg));
                }
                row.macs = macs(layer);
                row.params = params_count(layer);
                total.median_ms += row.median_ms;
                total.weight_pack_ms += row.weight_pack_ms;
                total.macs += row.macs;
                total.params += row.params;
                rows.push_back(row);
            }
            rows.push_back(total);
        }

    // per-MAC time of each kernel on its network's S variant
    std::map<std::pair<std::string, KernelId>, double> per_mac;
    for (const BenchRow &r : rows)
        if (r.kind == BenchRow::Kind::total && r.variant == Variant::S && r.macs > 0)
            per_mac[{r.network, r.kernel}] = r.median_ms / static_cast<double>(r.macs);
    for (BenchRow &r : rows) {
        if (r.kind == BenchRow::Kind::warning) continue;
        const auto it = per_mac.find({r.network, r.kernel});
        if (it == per_mac.end() || r.macs == 0) continue;
        r.expected_ms = it->second * static_cast<double>(r.macs);
        r.ratio = r.median_ms / *r.expected_ms;
    }
    return rows;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::string layer_field(const BenchRow &r) {
    switch (r.kind) {
        case BenchRow::Kind::layer: return std::to_string(r.layer);
        case BenchRow::Kind::total: return "TOTAL";
        case BenchRow::Kind::warning: return "WARNING:" + std::to_string(r.layer);
    }
    return "?";
}

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

template <class T>
T parse_number(const std::string &s, const std::string &where) {
    T v {};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw parse_error(where + " is not a number: '" + s + "'");
    return v;
}

} // namespace

void write_csv(std::ostream &os, const std::vector<BenchRow> &rows) {
    os << kCsvHeader << "\n";
    for (const BenchRow &r : rows) {
        os << r.network << ',' << to_string(r.variant) << ',' << layer_field(r) << ','
           << to_string(r.kernel) << ',';
        if (r.tiles)
            os << r.tiles->t_o << ',' << r.tiles->t_i << ','
               << (r.tiles->unroll_kw ? 1 : 0) << ',';
        else
            os << ",,,";
        os << fmt_double(r.median_ms) << ',' << fmt_double(r.weight_pack_ms) << ','
           << r.macs << ',' << r.params << ','
           << (r.expected_ms ? fmt_double(*r.expected_ms) : "") << ','
           << (r.ratio ? fmt_double(*r.ratio) : "") << "\n";
    }
    if (!os) throw io_error("failed writing CSV");
}

std::vector<BenchRow> parse_csv(std::istream &is, const std::string &source) {
    std::string line;
    if (!std::getline(is, line)) throw parse_error(source + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw parse_error(source + ":1: unexpected header");
    std::vector<BenchRow> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string at = source + ":" + std::to_string(lineno);
        if (f.size() != 13)
            throw parse_error(at + ": expected 13 fields, got " + std::to_string(f.size()));
        BenchRow r;
        r.network = f[0];
        try {
            r.variant = parse_variant(f[1]);
            r.kernel = parse_kernel(f[3]);
        } catch (const lookup_error &e) {
            throw parse_error(at + ": " + e.what());
        }
        if (f[2] == "TOTAL") {
            r.kind = BenchRow::Kind::total;
        } else if (f[2].rfind("WARNING:", 0) == 0) {
            r.kind = BenchRow::Kind::warning;
            r.layer = parse_number<std::size_t>(f[2].substr(8), at + ": field 'layer'");
        } else {
            r.layer = parse_number<std::size_t>(f[2], at + ": field 'layer'");
        }
        if (!f[4].empty() || !f[5].empty() || !f[6].empty()) {
            TileConfig t;
            t.t_o = parse_number<int>(f[4], at + ": field 't_o'");
            t.t_i = parse_number<int>(f[5], at + ": field 't_i'");
            t.unroll_kw = parse_number<int>(f[6], at + ": field 'unroll'") != 0;
            r.tiles = t;
        }
        r.median_ms = parse_number<double>(f[7], at + ": field 'median_ms'");
        r.weight_pack_ms = parse_number<double>(f[8], at + ": field 'weight_pack_ms'");
        r.macs = parse_number<std::uint64_t>(f[9], at + ": field 'macs'");
        r.params = parse_number<std::uint64_t>(f[10], at + ": field 'params'");
        if (!f[11].empty())
            r.expected_ms = parse_number<double>(f[11], at + ": field 'expected_ms'");
        if (!f[12].empty()) r.ratio = parse_number<double>(f[12], at + ": field 'ratio'");
        rows.push_back(r);
    }
    return rows;
}

void write_json(std::ostream &os, const std::vector<BenchRow> &rows) {
    using json = nlohmann::json;
    json arr = json::array();
    for (const BenchRow &r : rows) {
        json j = {{"network", r.network}, {"variant", to_string(r.variant)},
                {"layer", layer_field(r)}, {"kernel", to_string(r.kernel)},
                {"median_ms", r.median_ms}, {"weight_pack_ms", r.weight_pack_ms},
                {"macs", r.macs}, {"params", r.params}};
        if (r.tiles)
            j["tiles"] = {{"t_o", r.tiles->t_o}, {"t_i", r.tiles->t_i},
                    {"unroll_kw", r.tiles->unroll_kw}};
        j["expected_ms"] = r.expected_ms ? json(*r.expected_ms) : json(nullptr);
        j["ratio"] = r.ratio ? json(*r.ratio) : json(nullptr);
        if (r.checksum) {
            char buf[19];
            std::snprintf(buf, sizeof buf, "0x%016llx",
                    static_cast<unsigned long long>(*r.checksum));
            j["checksum"] = buf;
        }
        arr.push_back(std::move(j));
    }
    os << arr.dump(2) << "\n";
    if (!os) throw io_error("failed writing JSON");
}

namespace {

// TOTAL rows sorted by network, kernel, then plotting order of variants
std::vector<const BenchRow *> sorted_totals(const std::vector<BenchRow> &rows) {
    std::vector<const BenchRow *> t;
    for (const BenchRow &r : rows)
        if (r.kind == BenchRow::Kind::total) t.push_back(&r);
    std::stable_sort(t.begin(), t.end(), [](const BenchRow *a, const BenchRow *b) {
        if (a->network != b->network) return a->network < b->network;
        if (a->kernel != b->kernel) return a->kernel < b->kernel;
        return a->variant < b->variant;
    });
    return t;
}

} // namespace

void write_summary(std::ostream &os, const std::vector<BenchRow> &rows) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-14s %-8s %-7s %12s %12s %8s %14s\n", "network",
            "variant", "kernel", "total_ms", "expected_ms", "ratio", "macs");
    os << buf;
    for (const BenchRow *r : sorted_totals(rows)) {
        char exp[32] = "-", ratio[32] = "-";
        if (r->expected_ms) std::snprintf(exp, sizeof exp, "%.3f", *r->expected_ms);
        if (r->ratio) std::snprintf(ratio, sizeof ratio, "%.3f", *r->ratio);
        std::snprintf(buf, sizeof buf, "%-14s %-8s %-7s %12.3f %12s %8s %14llu\n",
                r->network.c_str(), to_string(r->variant).c_str(),
                std::string(to_string(r->kernel)).c_str(), r->median_ms, exp, ratio,
                static_cast<unsigned long long>(r->macs));
        os << buf;
    }
    if (!os) throw io_error("failed writing summary");
}

void write_plot_data(std::ostream &os, const std::vector<BenchRow> &rows) {
    os << "network\tkernel\tvariant\tmacs\tmeasured_ms\texpected_ms\n";
    for (const BenchRow *r : sorted_totals(rows))
        os << r->network << '\t' << to_string(r->kernel) << '\t'
           << to_string(r->variant) << '\t' << r->macs << '\t'
           << fmt_double(r->median_ms) << '\t'
           << (r->expected_ms ? fmt_double(*r->expected_ms) : "nan") << "\n";
    if (!os) throw io_error("failed writing plot data");
}

// ------------------------------------------------------------------ tune

TuneSummary run_tune(const TuneConfig &cfg, std::ostream *progress) {
    const auto nets = load_selection(cfg.workloads);
    if (nets.empty()) throw config_error("tune needs --network or --layers");
    const auto layers = distinct_layers(nets, cfg.kinds);
    TuneSummary s;
    s.distinct_shapes = layers.size();
    const std::string platform = host_platform_tag();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto path = cfg.records / record_filename(layers[i]);
        if (cfg.resume && std::filesystem::exists(path)) {
            try {
                load_record(path, layers[i]);
                s.skipped.push_back(path);
                if (progress) *progress << "skip " << path.filename().string() << "\n";
                continue;
            } catch (const std::exception &e) {
                if (progress) *progress << "retune " << path.string() << ": " << e.what() << "\n";
            }
        }
        const TuningRecord rec
                = tune(layers[i], cfg.strategy, cfg.simd_lanes, cfg.measure, platform);
        save_record(rec, path);
        s.written.push_back(path);
        if (progress)
            *progress << "[" << i + 1 << "/" << layers.size() << "] " << rec.layer_key
                      << " best " << to_string(rec.best.tiles) << " "
                      << ns_to_ms(rec.best.median_ns) << " ms over "
                      << rec.all_trials.size() << " trials\n";
    }
    return s;
}

} // namespace gspc
