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

#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "gspc/errors.hpp"
#include "gspc/tuner.hpp"
#include "support.hpp"

using namespace gspc;

namespace {

LayerSpec grouped_layer(int c_in, int c_out, int g, int hw = 8) {
    LayerSpec l;
    l.params = {c_in, c_out, 3, 3, 1, 1, {1, 1}, g};
    l.in_h = hw;
    l.in_w = hw;
    l.kind = LayerKind::grouped;
    return l;
}

const MeasureOptions quick {3, 1, 0, 1};

} // namespace

TEST_CASE("kernel names") {
    for (KernelId k : {KernelId::gspc, KernelId::direct, KernelId::im2col})
        CHECK(parse_kernel(to_string(k)) == k);
    CHECK_THROWS_AS(parse_kernel("oracle"), lookup_error);
}

TEST_CASE("enumerate_space") {
    const auto space = enumerate_space({16, 32, 3, 3, 1, 1, {1, 1}, 2}); // KPG 16, CPG 8
    CHECK(space.size() == 40);
    CHECK(space.front() == TileConfig {1, 1, false});
    CHECK(space[1] == TileConfig {1, 1, true});
    CHECK(space.back() == TileConfig {16, 8, true});
    CHECK(enumerate_space({32, 32, 3, 3, 1, 1, {1, 1}, 32}).size() == 2);
    // 12 has 6 divisors
    CHECK(enumerate_space({12, 12, 1, 1, 1, 1, {0, 0}, 1}).size() == 6 * 6 * 2);
    for (const TileConfig &t : space)
        CHECK_NOTHROW(validate_tiles({16, 32, 3, 3, 1, 1, {1, 1}, 2}, t));
}

TEST_CASE("median_of") {
    CHECK(median_of({5, 7, 100}) == 7);
    CHECK(median_of({100, 5, 7}) == 7);
    CHECK(median_of({4, 1, 3, 2}) == 2);
    CHECK(median_of({9}) == 9);
    CHECK_THROWS_AS(median_of({}), config_error);
}

TEST_CASE("measure") {
    const LayerSpec l = grouped_layer(8, 8, 2);
    const TrialResult r = measure(KernelId::gspc, {2, 2, false}, l, quick);
    CHECK(r.valid);
    CHECK(r.reps == 3);
    CHECK(r.median_ns > 0);
    CHECK(r.checksum == oracle_checksum(l, 0));
    for (KernelId k : {KernelId::direct, KernelId::im2col})
        CHECK(measure(k, {1, 1, false}, l, quick).checksum == oracle_checksum(l, 0));
    // invalid tiles make the trial invalid instead of throwing
    CHECK_FALSE(measure(KernelId::gspc, {3, 1, false}, l, quick).valid);
    CHECK_THROWS_AS(measure(KernelId::gspc, {1, 1, false}, l, {2, 1, 0, 1}), config_error);
    CHECK_THROWS_AS(measure(KernelId::gspc, {1, 1, false}, l, {3, 0, 0, 1}), config_error);
}

TEST_CASE("exhaustive tuning is sound") {
    for (const LayerSpec &l : {grouped_layer(16, 16, 4), grouped_layer(8, 8, 8),
                 grouped_layer(6, 12, 1, 5)}) {
        const TuningRecord rec = tune(l, SearchStrategy::exhaustive(), 4, quick, "test");
        CHECK(rec.layer_key == layer_key(l));
        CHECK(rec.platform_tag == "test");
        CHECK(rec.all_trials.size() == enumerate_space(l.params).size());
        const std::uint64_t want = oracle_checksum(l, 0);
        const TileConfig def = default_tiles(l.params, 4);
        bool saw_default = false;
        for (const TrialResult &t : rec.all_trials) {
            CHECK(t.valid);
            CHECK(t.checksum == want);
            CHECK(rec.best.median_ns <= t.median_ns);
            saw_default |= t.tiles == def;
        }
        CHECK(saw_default);
        CHECK(std::find(rec.all_trials.begin(), rec.all_trials.end(), rec.best)
                != rec.all_trials.end());
    }
}

TEST_CASE("random search") {
    const LayerSpec l = grouped_layer(16, 32, 2);
    const std::size_t full = enumerate_space(l.params).size();
    SUBCASE("budget below the space keeps the default tiles") {
        const TuningRecord rec = tune(l, SearchStrategy::random(8, 3), 16, quick);
        CHECK(rec.all_trials.size() <= 9);
        CHECK(rec.all_trials.size() >= 8);
        const TileConfig def = default_tiles(l.params, 16);
        CHECK(std::any_of(rec.all_trials.begin(), rec.all_trials.end(),
                [&](const TrialResult &t) { return t.tiles == def; }));
    }
    SUBCASE("budget at least the space covers the exhaustive set") {
        const TuningRecord rec = tune(l, SearchStrategy::random(full + 5, 3), 16, quick);
        CHECK(rec.all_trials.size() == full);
        std::vector<TileConfig> got;
        for (const TrialResult &t : rec.all_trials)
            got.push_back(t.tiles);
        CHECK(got == enumerate_space(l.params));
    }
}

TEST_CASE("tuning records") {
    test::ScratchDir dir("records");
    const LayerSpec l = grouped_layer(8, 16, 4);
    const TuningRecord rec = tune(l, SearchStrategy::exhaustive(), 4, quick);
    const auto path = dir.path() / record_filename(l);
    CHECK(path.filename() == "n1_ci8_co16_k3x3_s1x1_p1x1_g4_in8x8.json");
    save_record(rec, path);
    CHECK(load_record(path) == rec);
    CHECK(load_record(path, l) == rec);
    CHECK_THROWS_AS(load_record(path, grouped_layer(8, 16, 2)), key_mismatch_error);
    CHECK_THROWS_AS(load_record(dir.path() / "none.json"), io_error);

    auto rewrite = [&](auto edit) {
        std::ifstream is(path);
        nlohmann::json j = nlohmann::json::parse(is);
        edit(j);
        const auto p2 = dir.path() / "edited.json";
        std::ofstream(p2) << j.dump();
        try {
            load_record(p2);
        } catch (const parse_error &e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(rewrite([](auto &j) { j["best"].erase("median_ns"); })
            == "tuning record: missing field 'best.median_ns'");
    CHECK(rewrite([](auto &j) { j["trials"][1]["t_o"] = "two"; })
            == "tuning record: field 'trials[1].t_o' has the wrong type");
    CHECK(rewrite([](auto &j) { j["trials"][0]["checksum"] = "0xzz"; })
            == "tuning record: field 'trials[0].checksum' is not a hex integer");
    CHECK(rewrite([](auto &j) { j["best"]["median_ns"] = 0; })
            == "tuning record: field 'best.median_ns' must be > 0");
    CHECK(rewrite([](auto &j) { j["best"]["reps"] = 2; })
            == "tuning record: field 'best.reps' must be >= 3");
    CHECK(rewrite([](auto &j) { j["format"] = "other"; })
            == "tuning record: field 'format' is not gspc-tuning-record");
    CHECK(rewrite([](auto &j) { j["trials"] = 3; })
            == "tuning record: field 'trials' is not an array");
    CHECK(rewrite([](auto &j) { j.erase("layer_key"); })
            == "tuning record: missing field 'layer_key'");

    std::ofstream(dir.path() / "junk.json") << "{ not json";
    CHECK_THROWS_AS(load_record(dir.path() / "junk.json"), parse_error);
}

TEST_CASE("record_dir honours GSPC_RECORD_DIR") {
    ::setenv("GSPC_RECORD_DIR", "/tmp/elsewhere", 1);
    CHECK(record_dir() == "/tmp/elsewhere");
    ::unsetenv("GSPC_RECORD_DIR");
    CHECK(record_dir() == "gspc_records");
}

TEST_CASE("platform tag names the SIMD width") {
    CHECK(host_platform_tag().find("simd" + std::to_string(native_simd_lanes()))
            != std::string::npos);
}
