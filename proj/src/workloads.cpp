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

#include "gspc/workloads.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "gspc/errors.hpp"

#ifndef GSPC_DEFAULT_DATA_DIR
#define GSPC_DEFAULT_DATA_DIR "data/networks"
#endif

namespace gspc {

std::string_view to_string(LayerKind k) {
    switch (k) {
        case LayerKind::standard: return "standard";
        case LayerKind::grouped: return "grouped";
        case LayerKind::pointwise: return "pointwise";
    }
    return "?";
}

LayerKind parse_layer_kind(std::string_view s) {
    if (s == "standard") return LayerKind::standard;
    if (s == "grouped") return LayerKind::grouped;
    if (s == "pointwise") return LayerKind::pointwise;
    throw parse_error("unknown layer kind '" + std::string(s) + "'");
}

Shape4 LayerSpec::output_shape() const {
    auto [oh, ow] = output_spatial_dims(params, in_h, in_w);
    return {n, params.c_out, oh, ow};
}

void LayerSpec::validate() const {
    params.validate();
    if (n < 1) throw config_error("batch size must be >= 1");
    output_spatial_dims(params, in_h, in_w);
}

std::string layer_key(const LayerSpec &layer) {
    return "n" + std::to_string(layer.n) + "_" + to_string(layer.params) + "_in"
            + std::to_string(layer.in_h) + "x" + std::to_string(layer.in_w);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::S: return "S";
        case Variant::G2: return "G(2)";
        case Variant::G4: return "G(4)";
        case Variant::G8: return "G(8)";
        case Variant::G16: return "G(16)";
        case Variant::GN: return "G(N)";
    }
    return "?";
}

std::string file_tag(Variant v) {
    std::string s = to_string(v);
    std::erase(s, '(');
    std::erase(s, ')');
    return s;
}

Variant parse_variant(std::string_view s) {
    std::string t;
    for (char ch : s)
        if (ch != '(' && ch != ')' && !std::isspace(static_cast<unsigned char>(ch)))
            t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    for (Variant v : all_variants)
        if (file_tag(v) == t) return v;
    throw lookup_error("unknown variant '" + std::string(s) + "'");
}

std::uint64_t macs(const LayerSpec &layer) {
    const Shape4 o = layer.output_shape();
    const auto &p = layer.params;
    const std::uint64_t num = std::uint64_t(layer.n) * p.c_in * p.c_out * p.k_h
            * p.k_w * o.h * o.w;
    return num / static_cast<std::uint64_t>(p.groups);
}

std::uint64_t params_count(const LayerSpec &layer) {
    const auto &p = layer.params;
    switch (layer.kind) {
        case LayerKind::standard:
            return std::uint64_t(p.c_out) * p.c_in * p.k_h * p.k_w;
        case LayerKind::grouped:
            return std::uint64_t(p.c_out) * (p.c_in / p.groups) * p.k_h * p.k_w;
        case LayerKind::pointwise: return std::uint64_t(p.c_out) * p.c_in;
    }
    return 0;
}

MacsReport network_totals(const NetworkSpec &net) {
    MacsReport r;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerCost lc {i, macs(net.layers[i]), params_count(net.layers[i])};
        r.per_layer.push_back(lc);
        r.conv_macs += lc.macs;
        r.conv_params += lc.params;
    }
    r.total_macs = r.conv_macs;
    r.total_params = r.conv_params;
    for (const ExtraCost &e : net.extras) {
        r.total_macs += e.macs;
        r.total_params += e.params;
    }
    return r;
}

double expected_time(double s_time_ms, double s_macs, double target_macs) {
    if (!(s_time_ms > 0.0)) throw config_error("S-model time must be positive");
    if (!(s_macs > 0.0)) throw config_error("S-model MACs must be positive");
    if (target_macs < 0.0) throw config_error("target MACs must be non-negative");
    return s_time_ms * target_macs / s_macs;
}

namespace {

[[noreturn]] void parse_fail(
        const std::string &source, int line, const std::string &what) {
    throw parse_error(source + ":" + std::to_string(line) + ": " + what);
}

void check_grouped_followed_by_pointwise(
        const NetworkSpec &net, const std::string &source) {
    if (net.variant == Variant::S) return;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.layers[i].kind != LayerKind::grouped) continue;
        if (i + 1 >= net.layers.size()
                || net.layers[i + 1].kind != LayerKind::pointwise
                || net.layers[i + 1].params.c_in != net.layers[i].params.c_out)
            throw parse_error(source + ": grouped layer " + std::to_string(i)
                    + " is not followed by a matching pointwise layer");
    }
}

} // namespace

NetworkSpec parse_network(std::istream &is, const std::string &source) {
    NetworkSpec net;
    std::string line;
    int lineno = 0;
    bool have_header = false, have_name = false, have_variant = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;

        if (!have_header) {
            int version = 0;
            if (tag != "gspc-network" || !(ls >> version))
                parse_fail(source, lineno, "missing 'gspc-network <version>' header");
            if (version != 1)
                parse_fail(source, lineno,
                        "unsupported table version " + std::to_string(version));
            have_header = true;
        } else if (tag == "network") {
            if (!(ls >> net.name)) parse_fail(source, lineno, "field 'network' is empty");
            have_name = true;
        } else if (tag == "variant") {
            std::string v;
            ls >> v;
            try {
                net.variant = parse_variant(v);
            } catch (const lookup_error &) {
                parse_fail(source, lineno, "field 'variant' has bad value '" + v + "'");
            }
            have_variant = true;
        } else if (tag == "top1") {
            double t = 0;
            if (!(ls >> t)) parse_fail(source, lineno, "field 'top1' is not a number");
            net.top1 = t;
        } else if (tag == "conv") {
            static constexpr const char *fields[] = {"c_in", "c_out", "k_h", "k_w",
                    "s_h", "s_w", "pad_h", "pad_w", "g", "in_h", "in_w"};
            std::string kind;
            ls >> kind;
            LayerSpec l;
            try {
                l.kind = parse_layer_kind(kind);
            } catch (const parse_error &e) {
                parse_fail(source, lineno, e.what());
            }
            int v[11];
            for (int i = 0; i < 11; ++i)
                if (!(ls >> v[i]))
                    parse_fail(source, lineno,
                            std::string("field '") + fields[i] + "' missing or not an integer");
            l.params = {v[0], v[1], v[2], v[3], v[4], v[5], {v[6], v[7]}, v[8]};
            l.in_h = v[9];
            l.in_w = v[10];
            try {
                l.validate();
            } catch (const config_error &e) {
                parse_fail(source, lineno, e.what());
            }
            net.layers.push_back(l);
        } else if (tag == "extra") {
            ExtraCost e;
            if (!(ls >> e.params)) parse_fail(source, lineno, "field 'params' of extra");
            if (!(ls >> e.macs)) parse_fail(source, lineno, "field 'macs' of extra");
            std::getline(ls >> std::ws, e.note);
            net.extras.push_back(e);
        } else {
            parse_fail(source, lineno, "unknown record '" + tag + "'");
        }
    }
    if (!have_header) parse_fail(source, lineno, "empty network table");
    if (!have_name) parse_fail(source, lineno, "missing 'network' record");
    if (!have_variant) parse_fail(source, lineno, "missing 'variant' record");
    if (net.layers.empty()) parse_fail(source, lineno, "no conv records");
    check_grouped_followed_by_pointwise(net, source);
    return net;
}

NetworkSpec load_network(const std::filesystem::path &path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open network table " + path.string());
    return parse_network(is, path.string());
}

void write_network(std::ostream &os, const NetworkSpec &net) {
    os << "gspc-network 1\n";
    os << "network " << net.name << "\n";
    os << "variant " << to_string(net.variant) << "\n";
    if (net.top1) os << "top1 " << *net.top1 << "\n";
    for (const LayerSpec &l : net.layers) {
        const auto &p = l.params;
        os << "conv " << to_string(l.kind) << ' ' << p.c_in << ' ' << p.c_out << ' '
           << p.k_h << ' ' << p.k_w << ' ' << p.s_h << ' ' << p.s_w << ' '
           << p.pad.pad_h << ' ' << p.pad.pad_w << ' ' << p.groups << ' ' << l.in_h
           << ' ' << l.in_w << "\n";
    }
    for (const ExtraCost &e : net.extras)
        os << "extra " << e.params << ' ' << e.macs << ' ' << e.note << "\n";
}

std::filesystem::path network_data_dir() {
    if (const char *env = std::getenv("GSPC_DATA_DIR"); env && *env) return env;
    return GSPC_DEFAULT_DATA_DIR;
}

NetworkSpec builtin_network(std::string_view name, Variant variant) {
    if (std::find(builtin_network_names.begin(), builtin_network_names.end(), name)
            == builtin_network_names.end())
        throw lookup_error("unknown network '" + std::string(name)
                + "' (expected wrn40_2, resnet34 or mobilenet_v2)");
    const auto path = network_data_dir()
            / (std::string(name) + "_" + file_tag(variant) + ".net");
    NetworkSpec net = load_network(path);
    if (net.name != name || net.variant != variant)
        throw parse_error(path.string() + ": table header names "
                + net.name + " " + to_string(net.variant));
    return net;
}

std::vector<LayerSpec> random_layer_suite(
        std::size_t count, std::uint32_t seed, int max_channels) {
    std::mt19937 gen(seed);
    auto pick = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(gen);
    };
    std::vector<LayerSpec> suite;
    suite.reserve(count);
    static constexpr int group_choices[] = {1, 2, 4, 8, 0}; // 0 = C_in
    while (suite.size() < count) {
        LayerSpec l;
        const std::size_t i = suite.size();
        // cycle the structural choices so every combination shows up
        int g = group_choices[i % 5];
        const int k = (i / 5) % 2 ? 3 : 1;
        const int s = (i / 10) % 2 ? 2 : 1;
        const int pad = (i / 20) % 2;
        const int unit = g == 0 ? 1 : g;
        const int c_in = unit * pick(1, std::max(1, max_channels / unit));
        if (g == 0) g = c_in;
        const int c_out = g * pick(1, std::max(1, max_channels / g));
        l.params = {c_in, c_out, k, k, s, s, {pad, pad}, g};
        l.n = pick(1, 2);
        l.in_h = pick(std::max(1, k - 2 * pad), 12);
        l.in_w = pick(std::max(1, k - 2 * pad), 12);
        l.kind = g == 1 ? (k == 1 ? LayerKind::pointwise : LayerKind::standard)
                        : LayerKind::grouped;
        suite.push_back(l);
    }
    return suite;
}

} // namespace gspc
