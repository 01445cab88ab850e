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

#include <bit>

#include "gspc/errors.hpp"
#include "gspc/reference.hpp"
#include "support.hpp"

using namespace gspc;

namespace {

const ConvParams two_group {4, 4, 2, 2, 1, 1, {0, 0}, 2};

} // namespace

TEST_CASE("ConvParams validation") {
    CHECK_NOTHROW(two_group.validate());
    CHECK(two_group.kpg() == 2);
    CHECK(two_group.cpg() == 2);
    CHECK_THROWS_AS((ConvParams {4, 6, 1, 1, 1, 1, {0, 0}, 4}).validate(), config_error);
    CHECK_THROWS_AS((ConvParams {6, 4, 1, 1, 1, 1, {0, 0}, 4}).validate(), config_error);
    CHECK_THROWS_AS((ConvParams {4, 4, 1, 1, 0, 1, {0, 0}, 1}).validate(), config_error);
    CHECK_THROWS_AS((ConvParams {4, 4, 0, 1, 1, 1, {0, 0}, 1}).validate(), config_error);
    CHECK_THROWS_AS((ConvParams {4, 4, 1, 1, 1, 1, {-1, 0}, 1}).validate(), config_error);
    CHECK_THROWS_AS((ConvParams {4, 4, 1, 1, 1, 1, {0, 0}, 0}).validate(), config_error);
    CHECK(to_string(ConvParams {32, 32, 3, 3, 1, 1, {1, 1}, 16})
            == "ci32_co32_k3x3_s1x1_p1x1_g16");
}

TEST_CASE("oracle examples") {
    SUBCASE("single element") {
        const Tensor4 y = direct_grouped_conv(Tensor4({1, 1, 1, 1}, 3.f),
                Tensor4({1, 1, 1, 1}, -2.5f), ConvParams {});
        REQUIRE(y.shape() == Shape4 {1, 1, 1, 1});
        CHECK(y(0, 0, 0, 0) == -7.5f);
    }
    SUBCASE("two_group-shaped all ones") {
        const Tensor4 y = direct_grouped_conv(
                Tensor4({1, 4, 2, 2}, 1.f), Tensor4({4, 2, 2, 2}, 1.f), two_group);
        REQUIRE(y.shape() == Shape4 {1, 4, 1, 1});
        for (float v : y.data())
            CHECK(v == 8.f);
    }
    SUBCASE("shape mismatches") {
        CHECK_THROWS_AS(direct_grouped_conv(Tensor4({1, 3, 2, 2}),
                                Tensor4({4, 2, 2, 2}), two_group),
                config_error);
        CHECK_THROWS_AS(direct_grouped_conv(Tensor4({1, 4, 2, 2}),
                                Tensor4({4, 4, 2, 2}), two_group),
                config_error);
    }
}

TEST_CASE("oracle matches frozen float32 values") {
    // values from tests/oracle/frozen_values.py
    const Tensor4 y = direct_grouped_conv(
            random_fill({1, 4, 2, 2}, 0), random_fill({4, 2, 2, 2}, 1), two_group);
    const std::uint32_t bits[] = {0x3f5f9e02, 0xbf3ddfc0, 0x3f070453, 0x3d0014b0};
    for (int k = 0; k < 4; ++k)
        CHECK(std::bit_cast<std::uint32_t>(y(0, k, 0, 0)) == bits[k]);

    const Tensor4 y2 = direct_grouped_conv(random_fill({1, 8, 6, 6}, 3),
            random_fill({8, 4, 3, 3}, 4), {8, 8, 3, 3, 1, 1, {1, 1}, 2});
    CHECK(checksum(y2) == 0x31f38f3a856a9583ull);
    CHECK(std::bit_cast<std::uint32_t>(y2(0, 5, 2, 3)) == 0x3e1283f2u);

    const Tensor4 y3 = direct_grouped_conv(random_fill({1, 6, 7, 7}, 5),
            random_fill({6, 1, 3, 3}, 6), {6, 6, 3, 3, 2, 2, {1, 1}, 6});
    CHECK(checksum(y3) == 0x5b364c31babb6449ull);
}

TEST_CASE("g=1 oracle equals an independent standard convolution on 60 configs") {
    std::mt19937 gen(2024);
    int checked = 0;
    while (checked < 60) {
        test::RandomCase rc = test::random_case(gen);
        ConvParams p = rc.params;
        p.groups = 1;
        const Tensor4 x = random_fill(rc.input, checked);
        const Tensor4 w = random_fill(p.weight_shape(), checked + 1000);
        const Tensor4 got = direct_grouped_conv(x, w, p);
        const Tensor4 want = test::five_loop_standard_conv(
                x, w, p.s_h, p.s_w, p.pad.pad_h, p.pad.pad_w);
        INFO(to_string(p), " input ", to_string(rc.input));
        // float32 sums of up to 144 products against a double accumulator:
        // absolute slack covers cancellation near zero
        CHECK(allclose(got, want, 1e-5, 1e-5));
        ++checked;
    }
}

TEST_CASE("depthwise: output channel k depends only on input channel k") {
    const ConvParams p {6, 6, 3, 3, 1, 1, {1, 1}, 6};
    const Tensor4 x = random_fill({1, 6, 5, 5}, 1);
    const Tensor4 w = random_fill(p.weight_shape(), 2);
    const Tensor4 y = direct_grouped_conv(x, w, p);
    for (int k = 0; k < 6; ++k) {
        // single-channel standard conv on channel k alone
        Tensor4 xk({1, 1, 5, 5}), wk({1, 1, 3, 3});
        for (int h = 0; h < 5; ++h)
            for (int v = 0; v < 5; ++v)
                xk(0, 0, h, v) = x(0, k, h, v);
        for (int h = 0; h < 3; ++h)
            for (int v = 0; v < 3; ++v)
                wk(0, 0, h, v) = w(k, 0, h, v);
        const Tensor4 yk = test::five_loop_standard_conv(xk, wk, 1, 1, 1, 1);
        for (int h = 0; h < 5; ++h)
            for (int v = 0; v < 5; ++v)
                CHECK(y(0, k, h, v) == doctest::Approx(yk(0, 0, h, v)).epsilon(1e-5));
    }
}

TEST_CASE("linearity in the input") {
    std::mt19937 gen(7);
    for (int trial = 0; trial < 25; ++trial) {
        const test::RandomCase rc = test::random_case(gen);
        const Tensor4 x = random_fill(rc.input, trial);
        const Tensor4 w = random_fill(rc.params.weight_shape(), trial + 50);
        const float alpha = std::uniform_real_distribution<float>(-4.f, 4.f)(gen);
        Tensor4 ax = x;
        for (float &v : ax.data())
            v *= alpha;
        Tensor4 ay = direct_grouped_conv(x, w, rc.params);
        for (float &v : ay.data())
            v *= alpha;
        CHECK(allclose(direct_grouped_conv(ax, w, rc.params), ay, 1e-5, 1e-5));
    }
}

TEST_CASE("group independence: zeroing group j's inputs changes only group j's outputs") {
    const ConvParams p {8, 12, 3, 3, 1, 1, {1, 1}, 4};
    const Tensor4 x = random_fill({2, 8, 6, 6}, 10);
    const Tensor4 w = random_fill(p.weight_shape(), 11);
    const Tensor4 y = direct_grouped_conv(x, w, p);
    for (int j = 0; j < p.groups; ++j) {
        Tensor4 xz = x;
        for (int n = 0; n < 2; ++n)
            for (int c = j * p.cpg(); c < (j + 1) * p.cpg(); ++c)
                for (int h = 0; h < 6; ++h)
                    for (int v = 0; v < 6; ++v)
                        xz(n, c, h, v) = 0.f;
        const Tensor4 yz = direct_grouped_conv(xz, w, p);
        for (int n = 0; n < 2; ++n)
            for (int k = 0; k < p.c_out; ++k)
                for (int h = 0; h < 6; ++h)
                    for (int v = 0; v < 6; ++v) {
                        if (k / p.kpg() == j) CHECK(yz(n, k, h, v) == 0.f);
                        else CHECK(yz(n, k, h, v) == y(n, k, h, v));
                    }
    }
}

TEST_CASE("pointwise_conv") {
    SUBCASE("identity weights") {
        const Tensor4 x = random_fill({1, 5, 3, 4}, 1);
        Tensor4 w({5, 5, 1, 1});
        for (int c = 0; c < 5; ++c)
            w(c, c, 0, 0) = 1.f;
        CHECK(pointwise_conv(x, w) == x);
    }
    SUBCASE("ones sum C_in") {
        const Tensor4 y = pointwise_conv(Tensor4({1, 2, 3, 3}, 1.f), Tensor4({4, 2, 1, 1}, 1.f));
        REQUIRE(y.shape() == Shape4 {1, 4, 3, 3});
        for (float v : y.data())
            CHECK(v == 2.f);
    }
    SUBCASE("equals the oracle with g=1, K=1") {
        const Tensor4 x = random_fill({2, 6, 4, 4}, 3);
        const Tensor4 w = random_fill({3, 6, 1, 1}, 4);
        CHECK(pointwise_conv(x, w) == direct_grouped_conv(x, w, {6, 3, 1, 1, 1, 1, {0, 0}, 1}));
    }
    CHECK_THROWS_AS(pointwise_conv(Tensor4({1, 2, 3, 3}), Tensor4({4, 2, 3, 3})), config_error);
}

TEST_CASE("grouped_block") {
    const ConvParams p {8, 8, 3, 3, 1, 1, {1, 1}, 4};
    const Tensor4 x = random_fill({1, 8, 8, 8}, 21);
    const Tensor4 wg = random_fill(p.weight_shape(), 22);
    const Tensor4 wp = random_fill({8, 8, 1, 1}, 23);

    SUBCASE("identity pointwise leaves the grouped output") {
        Tensor4 id({8, 8, 1, 1});
        for (int c = 0; c < 8; ++c)
            id(c, c, 0, 0) = 1.f;
        CHECK(grouped_block(x, wg, id, p) == direct_grouped_conv(x, wg, p));
    }
    SUBCASE("equals a single fused loop nest") {
        const Tensor4 got = grouped_block(x, wg, wp, p);
        Tensor4 fused({1, 8, 8, 8});
        for (int o = 0; o < 8; ++o)
            for (int h = 0; h < 8; ++h)
                for (int v = 0; v < 8; ++v) {
                    double acc = 0;
                    for (int k = 0; k < 8; ++k) {
                        double inner = 0;
                        const int c0 = (k / p.kpg()) * p.cpg();
                        for (int c = 0; c < p.cpg(); ++c)
                            for (int kh = 0; kh < 3; ++kh)
                                for (int kw = 0; kw < 3; ++kw) {
                                    const int ih = h + kh - 1, iw = v + kw - 1;
                                    if (ih < 0 || iw < 0 || ih >= 8 || iw >= 8) continue;
                                    inner += double(x(0, c0 + c, ih, iw)) * wg(k, c, kh, kw);
                                }
                        acc += inner * wp(o, k, 0, 0);
                    }
                    fused(0, o, h, v) = static_cast<float>(acc);
                }
        CHECK(allclose(got, fused, 1e-4, 1e-5));
    }
    SUBCASE("g=1 is standard then 1x1") {
        const ConvParams p1 {8, 8, 3, 3, 1, 1, {1, 1}, 1};
        const Tensor4 w1 = random_fill(p1.weight_shape(), 24);
        const Tensor4 want = pointwise_conv(
                test::five_loop_standard_conv(x, w1, 1, 1, 1, 1), wp);
        CHECK(allclose(grouped_block(x, w1, wp, p1), want, 1e-4, 1e-5));
    }
    CHECK_THROWS_AS(grouped_block(x, wg, Tensor4({8, 4, 1, 1}), p), config_error);
}
