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

#include "gspc/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>

#include <json.hpp>

#include "gspc/baselines.hpp"
#include "gspc/errors.hpp"

namespace gspc {

using json = nlohmann::json;

std::string_view to_string(KernelId k) {
    switch (k) {
        case KernelId::gspc: return "gspc";
        case KernelId::direct: return "direct";
        case KernelId::im2col: return "im2col";
    }
    return "?";
}

KernelId parse_kernel(std::string_view s) {
    if (s == "gspc") return KernelId::gspc;
    if (s == "direct") return KernelId::direct;
    if (s == "im2col") return KernelId::im2col;
    throw lookup_error("unknown kernel '" + std::string(s)
            + "' (expected gspc, direct or im2col)");
}

LayerData make_layer_data(const LayerSpec &layer, std::uint32_t seed) {
    layer.validate();
    return {random_fill(layer.input_shape(), seed),
            random_fill(layer.weight_shape(), seed + 1u)};
}

Tensor4 run_kernel(KernelId kernel, const LayerData &data,
        const ConvParams &params, const TileConfig &tiles,
        const PackedKernels *prepacked, int threads) {
    switch (kernel) {
        case KernelId::gspc:
            return gspc_conv(data.x, data.w, params, tiles, prepacked, {threads});
        case KernelId::direct:
            return grouped_direct_conv_timed(data.x, data.w, params);
        case KernelId::im2col: return im2col_grouped_conv(data.x, data.w, params);
    }
    throw config_error("unknown kernel");
}

std::uint64_t oracle_checksum(const LayerSpec &layer, std::uint32_t seed) {
    const LayerData d = make_layer_data(layer, seed);
    return checksum(direct_grouped_conv(d.x, d.w, layer.params));
}

std::int64_t median_of(std::vector<std::int64_t> samples) {
    if (samples.empty()) throw config_error("median of no samples");
    std::sort(samples.begin(), samples.end());
    const std::size_t mid = samples.size() / 2;
    if (samples.size() % 2) return samples[mid];
    return (samples[mid - 1] + samples[mid]) / 2;
}

TrialResult measure(KernelId kernel, const TileConfig &tiles,
        const LayerSpec &layer, const MeasureOptions &opts) {
    if (opts.reps < 3) throw config_error("measure needs reps >= 3");
    if (opts.warmup < 1) throw config_error("measure needs warmup >= 1");

    TrialResult r;
    r.tiles = tiles;
    r.reps = opts.reps;
    try {
        const LayerData data = make_layer_data(layer, opts.seed);
        PackedKernels prepacked;
        const PackedKernels *pp = nullptr;
        if (kernel == KernelId::gspc) {
            prepacked = pack_kernels(data.w, layer.params, tiles);
            pp = &prepacked;
        }
        Tensor4 y;
        for (int i = 0; i < opts.warmup; ++i)
            y = run_kernel(kernel, data, layer.params, tiles, pp, opts.threads);
        std::vector<std::int64_t> samples;
        samples.reserve(opts.reps);
        for (int i = 0; i < opts.reps; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            y = run_kernel(kernel, data, layer.params, tiles, pp, opts.threads);
            const auto t1 = std::chrono::steady_clock::now();
            samples.push_back(
                    std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
                            .count());
        }
        r.median_ns = std::max<std::int64_t>(1, median_of(std::move(samples)));
        r.checksum = checksum(y);
    } catch (const std::exception &) {
        r.valid = false;
    }
    return r;
}

std::vector<TileConfig> enumerate_space(const ConvParams &params) {
    params.validate();
    auto divisors = [](int n) {
        std::vector<int> d;
        for (int i = 1; i <= n; ++i)
            if (n % i == 0) d.push_back(i);
        return d;
    };
    std::vector<TileConfig> space;
    for (int to : divisors(params.kpg()))
        for (int ti : divisors(params.cpg()))
            for (bool unroll : {false, true})
                space.push_back({to, ti, unroll});
    return space;
}

std::string host_platform_tag() {
    std::string model = "unknown-cpu";
    if (std::ifstream cpuinfo("/proc/cpuinfo"); cpuinfo) {
        std::string line;
        while (std::getline(cpuinfo, line)) {
            if (line.rfind("model name", 0) == 0) {
                if (auto colon = line.find(':'); colon != std::string::npos) {
                    model = line.substr(colon + 1);
                    model.erase(0, model.find_first_not_of(' '));
                }
                break;
            }
        }
    }
    return model + " simd" + std::to_string(native_simd_lanes());
}

TuningRecord tune(const LayerSpec &layer, const SearchStrategy &strategy,
        int simd_lanes, const MeasureOptions &opts,
        const std::string &platform_tag) {
    layer.validate();
    std::vector<TileConfig> space = enumerate_space(layer.params);
    if (strategy.kind == SearchStrategy::Kind::random
            && strategy.budget < space.size()) {
        std::mt19937 gen(strategy.seed);
        std::shuffle(space.begin(), space.end(), gen);
        space.resize(strategy.budget);
    }
    const TileConfig def = default_tiles(layer.params, simd_lanes);
    if (std::find(space.begin(), space.end(), def) == space.end())
        space.push_back(def);

    MeasureOptions single = opts;
    single.threads = 1; // concurrent work would contaminate the timings

    const std::uint64_t expected = oracle_checksum(layer, opts.seed);
    TuningRecord rec;
    rec.layer_key = layer_key(layer);
    rec.platform_tag = platform_tag;
    for (const TileConfig &t : space) {
        TrialResult r = measure(KernelId::gspc, t, layer, single);
        if (r.valid && r.checksum != expected) r.valid = false;
        rec.all_trials.push_back(r);
    }
    const TrialResult *best = nullptr;
    for (const TrialResult &r : rec.all_trials)
        if (r.valid && (!best || r.median_ns < best->median_ns)) best = &r;
    if (!best) throw tuning_error("no valid trial for layer " + rec.layer_key);
    rec.best = *best;
    return rec;
}

std::string record_filename(const LayerSpec &layer) {
    return layer_key(layer) + ".json";
}

std::filesystem::path record_dir() {
    if (const char *env = std::getenv("GSPC_RECORD_DIR"); env && *env) return env;
    return "gspc_records";
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json trial_to_json(const TrialResult &t) {
    return {{"t_o", t.tiles.t_o}, {"t_i", t.tiles.t_i},
            {"unroll_kw", t.tiles.unroll_kw}, {"median_ns", t.median_ns},
            {"reps", t.reps}, {"checksum", hex64(t.checksum)}, {"valid", t.valid}};
}

const json &field(const json &j, const char *key, const std::string &where) {
    if (!j.is_object() || !j.contains(key))
        throw parse_error("tuning record: missing field '" + where + key + "'");
    return j.at(key);
}

template <class T>
T typed(const json &j, const char *key, const std::string &where) {
    const json &v = field(j, key, where);
    try {
        return v.get<T>();
    } catch (const json::exception &) {
        throw parse_error("tuning record: field '" + where + key
                + "' has the wrong type");
    }
}

TrialResult trial_from_json(const json &j, const std::string &where) {
    TrialResult t;
    t.tiles.t_o = typed<int>(j, "t_o", where);
    t.tiles.t_i = typed<int>(j, "t_i", where);
    t.tiles.unroll_kw = typed<bool>(j, "unroll_kw", where);
    t.median_ns = typed<std::int64_t>(j, "median_ns", where);
    t.reps = typed<int>(j, "reps", where);
    t.valid = typed<bool>(j, "valid", where);
    const auto cs = typed<std::string>(j, "checksum", where);
    try {
        std::size_t used = 0;
        t.checksum = std::stoull(cs, &used, 16);
        if (used != cs.size()) throw std::invalid_argument(cs);
    } catch (const std::exception &) {
        throw parse_error("tuning record: field '" + where
                + "checksum' is not a hex integer");
    }
    if (t.valid && t.median_ns <= 0)
        throw parse_error("tuning record: field '" + where + "median_ns' must be > 0");
    if (t.reps < 3)
        throw parse_error("tuning record: field '" + where + "reps' must be >= 3");
    return t;
}

} // namespace

void save_record(const TuningRecord &record, const std::filesystem::path &path) {
    json trials = json::array();
    for (const TrialResult &t : record.all_trials)
        trials.push_back(trial_to_json(t));
    const json doc = {{"format", "gspc-tuning-record"}, {"version", 1},
            {"layer_key", record.layer_key}, {"platform_tag", record.platform_tag},
            {"best", trial_to_json(record.best)}, {"trials", trials}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw io_error("cannot write tuning record " + path.string());
    os << doc.dump(2) << "\n";
    if (!os) throw io_error("write failed: " + path.string());
}

TuningRecord load_record(const std::filesystem::path &path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open tuning record " + path.string());
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error &e) {
        throw parse_error("tuning record " + path.string() + ": " + e.what());
    }
    if (typed<std::string>(doc, "format", "") != "gspc-tuning-record")
        throw parse_error("tuning record: field 'format' is not gspc-tuning-record");
    if (typed<int>(doc, "version", "") != 1)
        throw parse_error("tuning record: field 'version' unsupported");
    TuningRecord rec;
    rec.layer_key = typed<std::string>(doc, "layer_key", "");
    rec.platform_tag = typed<std::string>(doc, "platform_tag", "");
    rec.best = trial_from_json(field(doc, "best", ""), "best.");
    const json &trials = field(doc, "trials", "");
    if (!trials.is_array())
        throw parse_error("tuning record: field 'trials' is not an array");
    for (std::size_t i = 0; i < trials.size(); ++i)
        rec.all_trials.push_back(
                trial_from_json(trials[i], "trials[" + std::to_string(i) + "]."));
    return rec;
}

TuningRecord load_record(
        const std::filesystem::path &path, const LayerSpec &layer) {
    TuningRecord rec = load_record(path);
    if (rec.layer_key != layer_key(layer))
        throw key_mismatch_error("tuning record " + path.string() + " is for "
                + rec.layer_key + ", requested " + layer_key(layer));
    return rec;
}

} // namespace gspc
