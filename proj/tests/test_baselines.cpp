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

#include <atomic>
#include <cstdlib>
#include <new>

#include "gspc/baselines.hpp"
#include "gspc/errors.hpp"
#include "support.hpp"

using namespace gspc;

// Counts heap allocations made while `counting` is set.
namespace {
std::atomic<bool> counting {false};
std::atomic<long> allocations {0};
} // namespace

void *operator new(std::size_t n) {
    if (counting) ++allocations;
    if (void *p = std::malloc(n ? n : 1)) return p;
    throw std::bad_alloc();
}
void operator delete(void *p) noexcept { std::free(p); }
void operator delete(void *p, std::size_t) noexcept { std::free(p); }

namespace {

const ConvParams two_group {4, 4, 2, 2, 1, 1, {0, 0}, 2};

Matrix2D triple_loop(const Matrix2D &a, const Matrix2D &b) {
    Matrix2D c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            float acc = 0.f;
            for (int k = 0; k < a.cols; ++k)
                acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

Matrix2D random_matrix(int r, int c, std::uint32_t seed) {
    const Tensor4 t = random_fill({1, 1, r, c}, seed);
    Matrix2D m(r, c);
    std::copy(t.data().begin(), t.data().end(), m.data.begin());
    return m;
}

} // namespace

TEST_CASE("grouped_direct_conv_timed is bit-identical to the oracle") {
    std::mt19937 gen(41);
    for (int trial = 0; trial < 50; ++trial) {
        const auto rc = test::random_case(gen, 32, 12);
        const Tensor4 x = random_fill(rc.input, trial);
        const Tensor4 w = random_fill(rc.params.weight_shape(), trial + 3);
        INFO(to_string(rc.params), " ", to_string(rc.input));
        CHECK(test::bit_equal(grouped_direct_conv_timed(x, w, rc.params),
                direct_grouped_conv(x, w, rc.params)));
    }
    const Tensor4 y = grouped_direct_conv_timed(
            Tensor4({1, 4, 2, 2}, 1.f), Tensor4({4, 2, 2, 2}, 1.f), two_group);
    CHECK(y.shape() == Shape4 {1, 4, 1, 1});
    for (float v : y.data())
        CHECK(v == 8.f);
    CHECK_THROWS_AS(grouped_direct_conv_timed(Tensor4({1, 4, 2, 2}),
                            Tensor4({4, 4, 2, 2}), two_group),
            config_error);
}

TEST_CASE("grouped_direct_conv_timed allocates only its output") {
    const ConvParams p {16, 16, 3, 3, 2, 2, {1, 1}, 4};
    const Tensor4 x = random_fill({2, 16, 9, 9}, 1);
    const Tensor4 w = random_fill(p.weight_shape(), 2);
    allocations = 0;
    counting = true;
    Tensor4 y = grouped_direct_conv_timed(x, w, p);
    counting = false;
    CHECK(allocations == 1);
    CHECK(y.shape() == Shape4 {2, 16, 5, 5});
}

TEST_CASE("im2col_group examples") {
    SUBCASE("two-group 4x4 example: 8 x 1 per group") {
        const Tensor4 x = random_fill({1, 4, 2, 2}, 0);
        const Matrix2D m = im2col_group(x, two_group, 1);
        CHECK(m.rows == 8);
        CHECK(m.cols == 1);
        for (int c = 0; c < 2; ++c)
            for (int kh = 0; kh < 2; ++kh)
                for (int kw = 0; kw < 2; ++kw)
                    CHECK(m(c * 4 + kh * 2 + kw, 0) == x(0, 2 + c, kh, kw));
    }
    SUBCASE("(1,4,4,4) K3 g2 gives 18 x 4") {
        const ConvParams p {4, 4, 3, 3, 1, 1, {0, 0}, 2};
        const Tensor4 x = random_fill({1, 4, 4, 4}, 1);
        const Matrix2D m = im2col_group(x, p, 0);
        CHECK(m.rows == 18);
        CHECK(m.cols == 4);
        CHECK(m(1 * 9 + 2 * 3 + 1, 1 * 2 + 1) == x(0, 1, 1 + 2, 1 + 1));
    }
    SUBCASE("K=1 is a reshape of the group's channels") {
        const ConvParams p {6, 3, 1, 1, 1, 1, {0, 0}, 3};
        const Tensor4 x = random_fill({1, 6, 3, 5}, 2);
        const Matrix2D m = im2col_group(x, p, 2);
        CHECK(m.rows == 2);
        CHECK(m.cols == 15);
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < 15; ++i)
                CHECK(m(c, i) == x(0, 4 + c, i / 5, i % 5));
    }
    CHECK_THROWS_AS(im2col_group(Tensor4({1, 4, 2, 2}), two_group, 2), bounds_error);
    CHECK_THROWS_AS(im2col_group(Tensor4({1, 4, 2, 2}), two_group, -1), bounds_error);
    CHECK_THROWS_AS(im2col_group(Tensor4({1, 4, 2, 2}), two_group, 0, 1), bounds_error);
}

TEST_CASE("gemm") {
    SUBCASE("2x2") {
        Matrix2D a(2, 2), b(2, 2);
        a.data = {1, 2, 3, 4};
        b.data = {5, 6, 7, 8};
        CHECK(gemm(a, b).data == std::vector<float> {19, 22, 43, 50});
    }
    SUBCASE("identity") {
        const Matrix2D a = random_matrix(5, 7, 3);
        Matrix2D id(7, 7);
        for (int i = 0; i < 7; ++i)
            id(i, i) = 1.f;
        CHECK(gemm(a, id) == a);
    }
    SUBCASE("odd sizes and block edges equal a triple loop bit-exactly") {
        for (auto [m, k, n] : {std::array {17, 23, 9}, std::array {1, 1, 1},
                     std::array {70, 130, 300}, std::array {3, 257, 65}}) {
            const Matrix2D a = random_matrix(m, k, 4), b = random_matrix(k, n, 5);
            CHECK(gemm(a, b) == triple_loop(a, b));
        }
    }
    CHECK_THROWS_AS(gemm(Matrix2D(2, 3), Matrix2D(2, 3)), config_error);
}

TEST_CASE("im2col_grouped_conv is bit-identical to the oracle") {
    std::mt19937 gen(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto rc = test::random_case(gen, 32, 12);
        const Tensor4 x = random_fill(rc.input, trial);
        const Tensor4 w = random_fill(rc.params.weight_shape(), trial + 9);
        INFO(to_string(rc.params), " ", to_string(rc.input));
        CHECK(test::bit_equal(im2col_grouped_conv(x, w, rc.params),
                direct_grouped_conv(x, w, rc.params)));
    }
    const Tensor4 y = im2col_grouped_conv(
            Tensor4({1, 4, 2, 2}, 1.f), Tensor4({4, 2, 2, 2}, 1.f), two_group);
    CHECK(y.shape() == Shape4 {1, 4, 1, 1});
    for (float v : y.data())
        CHECK(v == 8.f);
}
