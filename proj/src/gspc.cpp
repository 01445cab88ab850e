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

#include "gspc/gspc.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <thread>
#include <type_traits>
#include <utility>

#include "binary_io.hpp"
#include "gspc/errors.hpp"

namespace gspc {

std::string to_string(const TileConfig &t) {
    return "to" + std::to_string(t.t_o) + "_ti" + std::to_string(t.t_i)
            + (t.unroll_kw ? "_u" : "");
}

TileConfig validate_tiles(const ConvParams &params, const TileConfig &tiles) {
    params.validate();
    const int kpg = params.kpg();
    const int cpg = params.cpg();
    auto fail = [](const std::string &what) { throw tile_error(what); };
    if (tiles.t_o <= 0) fail("T_O must be > 0, got " + std::to_string(tiles.t_o));
    if (tiles.t_i <= 0) fail("T_I must be > 0, got " + std::to_string(tiles.t_i));
    if (tiles.t_o > kpg)
        fail("T_O " + std::to_string(tiles.t_o) + " exceeds KPG "
                + std::to_string(kpg));
    if (tiles.t_i > cpg)
        fail("T_I " + std::to_string(tiles.t_i) + " exceeds CPG "
                + std::to_string(cpg));
    if (kpg % tiles.t_o != 0)
        fail("T_O " + std::to_string(tiles.t_o) + " does not divide KPG "
                + std::to_string(kpg));
    if (cpg % tiles.t_i != 0)
        fail("T_I " + std::to_string(tiles.t_i) + " does not divide CPG "
                + std::to_string(cpg));
    return tiles;
}

namespace {

int largest_divisor_at_most(int n, int bound) {
    for (int d = std::min(n, bound); d > 1; --d)
        if (n % d == 0) return d;
    return 1;
}

} // namespace

TileConfig default_tiles(const ConvParams &params, int simd_lanes) {
    params.validate();
    if (simd_lanes < 1) throw config_error("simd_lanes must be >= 1");
    return {largest_divisor_at_most(params.kpg(), simd_lanes),
            largest_divisor_at_most(params.cpg(), simd_lanes), false};
}

int native_simd_lanes() {
#if defined(__AVX512F__)
    return 16;
#elif defined(__AVX__)
    return 8;
#else
    return 4; // SSE / NEON width
#endif
}

PackedKernels pack_kernels(
        const Tensor4 &w, const ConvParams &params, const TileConfig &tiles) {
    validate_tiles(params, tiles);
    if (w.shape() != params.weight_shape())
        throw config_error("weights " + to_string(w.shape()) + " do not match "
                + to_string(params.weight_shape()));
    const int g = params.groups, kpg = params.kpg(), cpg = params.cpg();
    const int to = tiles.t_o, ti = tiles.t_i;
    const int kh_n = params.k_h, kw_n = params.k_w;

    PackedKernels pw;
    pw.dims = {g, kpg / to, cpg / ti, kh_n, kw_n, ti, to};
    pw.data.resize(pw.element_count());
    float *dst = pw.data.data();
    for (int j = 0; j < g; ++j)
        for (int k = 0; k < kpg / to; ++k)
            for (int c = 0; c < cpg / ti; ++c)
                for (int kh = 0; kh < kh_n; ++kh)
                    for (int kw = 0; kw < kw_n; ++kw)
                        for (int ci = 0; ci < ti; ++ci)
                            for (int co = 0; co < to; ++co)
                                *dst++ = w(j * kpg + k * to + co, c * ti + ci, kh, kw);
    return pw;
}

namespace {

void check_packed_input_source(const Tensor4 &x, const ConvParams &params,
        const TileConfig &tiles) {
    validate_tiles(params, tiles);
    check_shape(x.shape());
    if (x.shape().c != params.c_in)
        throw config_error("input has " + std::to_string(x.shape().c)
                + " channels, params expect " + std::to_string(params.c_in));
}

} // namespace

PackedInputs pack_inputs(const Tensor4 &x_padded, const ConvParams &params,
        const TileConfig &tiles) {
    check_packed_input_source(x_padded, params, tiles);
    const Shape4 &s = x_padded.shape();
    const int g = params.groups, cpg = params.cpg(), ti = tiles.t_i;

    PackedInputs px;
    px.dims = {g, s.n, cpg / ti, s.h, ti, s.w};
    px.data.resize(px.element_count());
    float *dst = px.data.data();
    for (int j = 0; j < g; ++j)
        for (int n = 0; n < s.n; ++n)
            for (int cb = 0; cb < cpg / ti; ++cb)
                for (int h = 0; h < s.h; ++h)
                    for (int c = 0; c < ti; ++c) {
                        const float *src = &x_padded(n, j * cpg + cb * ti + c, h, 0);
                        dst = std::copy(src, src + s.w, dst);
                    }
    return px;
}

PackedInputs pack_padded_inputs(
        const Tensor4 &x, const ConvParams &params, const TileConfig &tiles) {
    check_packed_input_source(x, params, tiles);
    const Shape4 &s = x.shape();
    const int g = params.groups, cpg = params.cpg(), ti = tiles.t_i;
    const int ph = params.pad.pad_h, pw = params.pad.pad_w;
    const int hp = s.h + 2 * ph, wp = s.w + 2 * pw;

    PackedInputs px;
    px.dims = {g, s.n, cpg / ti, hp, ti, wp};
    px.data.assign(px.element_count(), 0.f);
    float *dst = px.data.data();
    for (int j = 0; j < g; ++j)
        for (int n = 0; n < s.n; ++n)
            for (int cb = 0; cb < cpg / ti; ++cb)
                for (int h = 0; h < hp; ++h)
                    for (int c = 0; c < ti; ++c, dst += wp) {
                        const int src_h = h - ph;
                        if (src_h < 0 || src_h >= s.h) continue;
                        const float *src = &x(n, j * cpg + cb * ti + c, src_h, 0);
                        std::copy(src, src + s.w, dst + pw);
                    }
    return px;
}

namespace {

// Strides and base pointers for one (group, batch, output-channel tile) slab.
struct TileArgs {
    const float *x = nullptr; // X'[j][n]
    const float *w = nullptr; // W'[j][occ] + first lane of the chunk
    float *y = nullptr; // Y'[j][n][occ][oh][ow0] + first lane of the chunk
    int c_blocks = 0;
    int t_i = 0;
    int k_h = 0;
    int k_w = 0;
    int s_w = 1;
    int row0 = 0; // oh * S_h
    int col0 = 0; // ow0 * S_w
    std::ptrdiff_t x_cb = 0, x_h = 0, x_ti = 0;
    std::ptrdiff_t w_cb = 0, w_kh = 0, w_kw = 0, w_ti = 0;
    std::ptrdiff_t y_ow = 0;
};

// Computes OWB consecutive output columns for VB consecutive output-channel
// lanes. KW > 0 fixes the kernel width at compile time (unrolled kw loop).
// Reduction order per output element: c-block, t_i, kh, kw -- i.e. ascending
// input channel, then kh, then kw, exactly as the oracle.
// Lane vectors of 4 or 8 floats. Scalar operands broadcast.
typedef float vec4 __attribute__((vector_size(16)));
typedef float vec8 __attribute__((vector_size(32)));

template <int VB>
using lane_vec = std::conditional_t<VB % 8 == 0, vec8, vec4>;

template <class V>
V load_vec(const float *p) {
    V v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

template <int VB, int OWB, int KW>
void tile_kernel(const TileArgs &a) {
    const int kw_n = KW > 0 ? KW : a.k_w;
    if constexpr (VB % 4 == 0) {
        using V = lane_vec<VB>;
        constexpr int L = sizeof(V) / sizeof(float);
        constexpr int NV = VB / L;
        V acc[OWB][NV] = {};
        for (int cb = 0; cb < a.c_blocks; ++cb)
            for (int ti = 0; ti < a.t_i; ++ti) {
                const float *xc = a.x + cb * a.x_cb + ti * a.x_ti + a.col0;
                const float *wc = a.w + cb * a.w_cb + ti * a.w_ti;
                for (int kh = 0; kh < a.k_h; ++kh) {
                    const float *xr = xc + (a.row0 + kh) * a.x_h;
                    const float *wr = wc + kh * a.w_kh;
                    for (int kw = 0; kw < kw_n; ++kw) {
                        V wv[NV];
                        for (int i = 0; i < NV; ++i)
                            wv[i] = load_vec<V>(wr + kw * a.w_kw + i * L);
                        for (int b = 0; b < OWB; ++b) {
                            const float xv = xr[b * a.s_w + kw];
                            for (int i = 0; i < NV; ++i)
                                acc[b][i] += xv * wv[i];
                        }
                    }
                }
            }
        for (int b = 0; b < OWB; ++b)
            for (int i = 0; i < NV; ++i)
                std::memcpy(a.y + b * a.y_ow + i * L, &acc[b][i], sizeof(V));
    } else {
        float acc[OWB][VB] = {};
        for (int cb = 0; cb < a.c_blocks; ++cb)
            for (int ti = 0; ti < a.t_i; ++ti) {
                const float *xc = a.x + cb * a.x_cb + ti * a.x_ti + a.col0;
                const float *wc = a.w + cb * a.w_cb + ti * a.w_ti;
                for (int kh = 0; kh < a.k_h; ++kh) {
                    const float *xr = xc + (a.row0 + kh) * a.x_h;
                    const float *wr = wc + kh * a.w_kh;
                    for (int kw = 0; kw < kw_n; ++kw) {
                        const float *wv = wr + kw * a.w_kw;
                        for (int b = 0; b < OWB; ++b) {
                            const float xv = xr[b * a.s_w + kw];
                            for (int v = 0; v < VB; ++v)
                                acc[b][v] += xv * wv[v];
                        }
                    }
                }
            }
        for (int b = 0; b < OWB; ++b)
            for (int v = 0; v < VB; ++v)
                a.y[b * a.y_ow + v] = acc[b][v];
    }
}

// Narrow lane counts vectorize across output columns instead: 8*OWV
// consecutive columns per lane, stride-1 only. Same reduction order.
template <int VB, int OWV, int KW>
void column_kernel(const TileArgs &a) {
    const int kw_n = KW > 0 ? KW : a.k_w;
    vec8 acc[VB][OWV] = {};
    for (int cb = 0; cb < a.c_blocks; ++cb)
        for (int ti = 0; ti < a.t_i; ++ti) {
            const float *xc = a.x + cb * a.x_cb + ti * a.x_ti + a.col0;
            const float *wc = a.w + cb * a.w_cb + ti * a.w_ti;
            for (int kh = 0; kh < a.k_h; ++kh) {
                const float *xr = xc + (a.row0 + kh) * a.x_h;
                const float *wr = wc + kh * a.w_kh;
                for (int kw = 0; kw < kw_n; ++kw) {
                    vec8 xv[OWV];
                    for (int i = 0; i < OWV; ++i)
                        xv[i] = load_vec<vec8>(xr + kw + 8 * i);
                    const float *wv = wr + kw * a.w_kw;
                    for (int v = 0; v < VB; ++v)
                        for (int i = 0; i < OWV; ++i)
                            acc[v][i] += xv[i] * wv[v];
                }
            }
        }
    for (int v = 0; v < VB; ++v)
        for (int i = 0; i < OWV; ++i)
            for (int l = 0; l < 8; ++l)
                a.y[(8 * i + l) * a.y_ow + v] = acc[v][i][l];
}

using tile_fn = void (*)(const TileArgs &);

// Column kernels from widest to narrowest; the last one covers one column.
struct KernelSet {
    struct Entry {
        tile_fn fn = nullptr;
        int cols = 0;
    };
    std::array<Entry, 3> by_width {};
    int vb = 1;
};

// accumulators for 16 lanes x owb columns must fit the vector register file
#if defined(__AVX512F__)
constexpr int kWideOwb = 8;
#else
constexpr int kWideOwb = 4;
#endif

template <int VB, int KW>
KernelSet make_set(bool unit_stride) {
    if constexpr (VB <= 4) {
        if (unit_stride) {
            constexpr int owv = VB == 3 ? 2 : (VB == 4 ? 2 : 4);
            return {{{{&column_kernel<VB, owv, KW>, 8 * owv},
                             {&column_kernel<VB, 1, KW>, 8},
                             {&tile_kernel<VB, 1, KW>, 1}}},
                    VB};
        }
    }
    constexpr int owb = VB >= 16 ? kWideOwb : 8;
    return {{{{&tile_kernel<VB, owb, KW>, owb}, {&tile_kernel<VB, 1, KW>, 1}, {}}}, VB};
}

template <int VB>
KernelSet pick_kw(int kw, bool unit_stride) {
    switch (kw) {
        case 1: return make_set<VB, 1>(unit_stride);
        case 3: return make_set<VB, 3>(unit_stride);
        default: return make_set<VB, 0>(unit_stride);
    }
}

KernelSet select_kernels(int t_o, bool unroll_kw, int k_w, int s_w) {
    // unrolled specialisations exist for K_w in {1, 3}
    const int kw = unroll_kw && (k_w == 1 || k_w == 3) ? k_w : 0;
    const bool unit = s_w == 1;
    if (t_o % 16 == 0) return pick_kw<16>(kw, unit);
    if (t_o % 8 == 0) return pick_kw<8>(kw, unit);
    if (t_o % 4 == 0) return pick_kw<4>(kw, unit);
    if (t_o % 3 == 0) return pick_kw<3>(kw, unit);
    if (t_o % 2 == 0) return pick_kw<2>(kw, unit);
    return pick_kw<1>(kw, unit);
}

template <class F>
void parallel_for(int count, int threads, F &&body) {
    threads = std::clamp(threads, 1, std::max(count, 1));
    if (threads == 1) {
        for (int i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            const int lo = count * t / threads;
            const int hi = count * (t + 1) / threads;
            for (int i = lo; i < hi; ++i)
                body(i);
        });
}

} // namespace

PackedOutputs compute(const PackedInputs &px, const PackedKernels &pw,
        const ConvParams &params, const TileConfig &tiles,
        const ComputeOptions &opts) {
    validate_tiles(params, tiles);
    const int g = params.groups, kpg = params.kpg(), cpg = params.cpg();
    const int to = tiles.t_o, ti = tiles.t_i;
    const std::array<int, 7> want_w
            = {g, kpg / to, cpg / ti, params.k_h, params.k_w, ti, to};
    if (pw.dims != want_w)
        throw config_error("packed kernels do not match params/tiles");
    if (pw.data.size() != pw.element_count() || px.data.size() != px.element_count())
        throw config_error("packed volume data length does not match its dims");
    const int batch = px.dims[1], hp = px.dims[3], wp = px.dims[5];
    if (px.dims[0] != g || px.dims[2] != cpg / ti || px.dims[4] != ti)
        throw config_error("packed inputs do not match params/tiles");
    if (hp < params.k_h || wp < params.k_w)
        throw config_error("packed input smaller than kernel");
    const int oh_n = (hp - params.k_h) / params.s_h + 1;
    const int ow_n = (wp - params.k_w) / params.s_w + 1;

    PackedOutputs py;
    py.dims = {g, batch, kpg / to, oh_n, ow_n, to};
    py.data.resize(py.element_count());

    const KernelSet ks = select_kernels(to, tiles.unroll_kw, params.k_w, params.s_w);

    TileArgs base;
    base.c_blocks = cpg / ti;
    base.t_i = ti;
    base.k_h = params.k_h;
    base.k_w = params.k_w;
    base.s_w = params.s_w;
    base.x_ti = wp;
    base.x_h = std::ptrdiff_t(ti) * wp;
    base.x_cb = std::ptrdiff_t(hp) * ti * wp;
    base.w_ti = to;
    base.w_kw = std::ptrdiff_t(ti) * to;
    base.w_kh = std::ptrdiff_t(params.k_w) * ti * to;
    base.w_cb = std::ptrdiff_t(params.k_h) * params.k_w * ti * to;
    base.y_ow = to;

    const std::ptrdiff_t x_slab = std::ptrdiff_t(cpg / ti) * base.x_cb;
    const std::ptrdiff_t w_group = std::ptrdiff_t(kpg / to) * base.w_cb * (cpg / ti);
    const std::ptrdiff_t w_occ = std::ptrdiff_t(cpg / ti) * base.w_cb;
    const std::ptrdiff_t y_row = std::ptrdiff_t(ow_n) * to;
    const std::ptrdiff_t y_occ = std::ptrdiff_t(oh_n) * y_row;
    const std::ptrdiff_t y_slab = std::ptrdiff_t(kpg / to) * y_occ;

    // Groups (and batch items) write disjoint slabs of Y'.
    parallel_for(g * batch, opts.threads, [&](int slab) {
        const int j = slab / batch;
        TileArgs a = base;
        a.x = px.data.data() + slab * x_slab;
        float *y_base = py.data.data() + slab * y_slab;
        for (int occ = 0; occ < kpg / to; ++occ)
            for (int oh = 0; oh < oh_n; ++oh) {
                a.row0 = oh * params.s_h;
                for (int o0 = 0; o0 < to; o0 += ks.vb) {
                    a.w = pw.data.data() + j * w_group + occ * w_occ + o0;
                    float *y_rowp = y_base + occ * y_occ + oh * y_row + o0;
                    int ow = 0;
                    for (const auto &k : ks.by_width) {
                        if (!k.fn) break;
                        for (; ow + k.cols <= ow_n; ow += k.cols) {
                            a.col0 = ow * params.s_w;
                            a.y = y_rowp + ow * to;
                            k.fn(a);
                        }
                    }
                }
            }
    });
    return py;
}

bool unpack_is_identity(const ConvParams &params, const TileConfig &tiles,
        int batch, int out_h, int out_w) {
    const bool lanes_trivial = tiles.t_o == 1 || out_h * out_w == 1;
    const bool slabs_trivial = batch == 1 || params.groups == 1;
    return lanes_trivial && slabs_trivial;
}

Tensor4 unpack_outputs(
        PackedOutputs py, const ConvParams &params, UnpackStats *stats) {
    params.validate();
    const int g = params.groups, kpg = params.kpg();
    const auto [dg, batch, kb, oh_n, ow_n, to] = py.dims;
    if (dg != g || to < 1 || kb * to != kpg)
        throw config_error("packed outputs do not match params");
    if (py.data.size() != py.element_count())
        throw config_error("packed output data length does not match its dims");
    const Shape4 ys {batch, params.c_out, oh_n, ow_n};
    TileConfig tiles {to, 1, false};

    if (unpack_is_identity(params, tiles, batch, oh_n, ow_n)) {
        if (stats) *stats = {0, true};
        return Tensor4(ys, std::move(py.data));
    }

    Tensor4 y(ys);
    const std::size_t plane = std::size_t(oh_n) * ow_n;
    for (int j = 0; j < g; ++j)
        for (int n = 0; n < batch; ++n)
            for (int occ = 0; occ < kb; ++occ) {
                const float *src = py.data.data()
                        + ((std::size_t(j) * batch + n) * kb + occ) * plane * to;
                for (int ocb = 0; ocb < to; ++ocb) {
                    float *dst = &y(n, j * kpg + occ * to + ocb, 0, 0);
                    for (std::size_t p = 0; p < plane; ++p)
                        dst[p] = src[p * to + ocb];
                }
            }
    if (stats) *stats = {ys.count(), false};
    return y;
}

Tensor4 gspc_conv(const Tensor4 &x, const Tensor4 &w, const ConvParams &params,
        const TileConfig &tiles, const PackedKernels *prepacked,
        const ComputeOptions &opts) {
    output_shape(params, x.shape());
    validate_tiles(params, tiles);
    PackedInputs px = pack_padded_inputs(x, params, tiles);
    PackedOutputs py;
    if (prepacked) {
        py = compute(px, *prepacked, params, tiles, opts);
    } else {
        py = compute(px, pack_kernels(w, params, tiles), params, tiles, opts);
    }
    return unpack_outputs(std::move(py), params);
}

TileConfig tiles_of(const PackedKernels &pw) {
    return {pw.dims[6], pw.dims[5], false};
}

void write_packed_kernels(
        const std::filesystem::path &path, const PackedKernels &pw) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open " + path.string() + " for writing");
    for (int d : pw.dims)
        detail::put_u32(os, static_cast<std::uint32_t>(d));
    detail::put_floats(os, pw.data);
    if (!os) throw io_error("write failed: " + path.string());
}

PackedKernels read_packed_kernels(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open " + path.string());
    static constexpr const char *names[]
            = {"g", "KPG/T_O", "CPG/T_I", "K_h", "K_w", "T_I", "T_O"};
    PackedKernels pw;
    for (std::size_t i = 0; i < pw.dims.size(); ++i) {
        pw.dims[i] = static_cast<int>(detail::get_u32(is, names[i]));
        if (pw.dims[i] < 1)
            throw parse_error(std::string("packed dim ") + names[i] + " must be >= 1");
    }
    pw.data.resize(pw.element_count());
    detail::get_floats(is, pw.data);
    detail::expect_eof(is);
    return pw;
}

} // namespace gspc
