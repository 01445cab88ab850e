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

#include "gspc/reference.hpp"

#include "gspc/errors.hpp"

namespace gspc {

void ConvParams::validate() const {
    auto fail = [](const std::string &what) { throw config_error(what); };
    if (c_in < 1 || c_out < 1) fail("channel counts must be >= 1");
    if (k_h < 1 || k_w < 1) fail("kernel extents must be >= 1");
    if (s_h < 1 || s_w < 1) fail("strides must be >= 1");
    if (pad.pad_h < 0 || pad.pad_w < 0) fail("padding must be >= 0");
    if (groups < 1) fail("groups must be >= 1");
    if (c_in % groups != 0)
        fail("c_in " + std::to_string(c_in) + " not divisible by groups "
                + std::to_string(groups));
    if (c_out % groups != 0)
        fail("c_out " + std::to_string(c_out) + " not divisible by groups "
                + std::to_string(groups));
}

std::string to_string(const ConvParams &p) {
    return "ci" + std::to_string(p.c_in) + "_co" + std::to_string(p.c_out)
            + "_k" + std::to_string(p.k_h) + "x" + std::to_string(p.k_w) + "_s"
            + std::to_string(p.s_h) + "x" + std::to_string(p.s_w) + "_p"
            + std::to_string(p.pad.pad_h) + "x" + std::to_string(p.pad.pad_w)
            + "_g" + std::to_string(p.groups);
}

SpatialDims output_spatial_dims(const ConvParams &params, int in_h, int in_w) {
    const int ph = in_h + 2 * params.pad.pad_h;
    const int pw = in_w + 2 * params.pad.pad_w;
    if (in_h < 1 || in_w < 1) throw config_error("input extents must be >= 1");
    if (params.s_h < 1 || params.s_w < 1)
        throw config_error("strides must be >= 1");
    if (ph < params.k_h || pw < params.k_w)
        throw config_error("kernel " + std::to_string(params.k_h) + "x"
                + std::to_string(params.k_w) + " larger than padded input "
                + std::to_string(ph) + "x" + std::to_string(pw));
    return {(ph - params.k_h) / params.s_h + 1, (pw - params.k_w) / params.s_w + 1};
}

Shape4 output_shape(const ConvParams &params, const Shape4 &x) {
    params.validate();
    check_shape(x);
    if (x.c != params.c_in)
        throw config_error("input has " + std::to_string(x.c)
                + " channels, params expect " + std::to_string(params.c_in));
    auto [oh, ow] = output_spatial_dims(params, x.h, x.w);
    return {x.n, params.c_out, oh, ow};
}

Tensor4 direct_grouped_conv(
        const Tensor4 &x, const Tensor4 &w, const ConvParams &params) {
    const Shape4 ys = output_shape(params, x.shape());
    if (w.shape() != params.weight_shape())
        throw config_error("weights " + to_string(w.shape()) + " do not match "
                + to_string(params.weight_shape()));

    const Tensor4 xp = pad_input(x, params.pad);
    const int kpg = params.kpg();
    const int cpg = params.cpg();
    Tensor4 y(ys, 0.f);

    for (int n = 0; n < ys.n; ++n)
        for (int k = 0; k < ys.c; ++k) {
            const int group = k / kpg;
            for (int c = 0; c < cpg; ++c)
                for (int kh = 0; kh < params.k_h; ++kh)
                    for (int kw = 0; kw < params.k_w; ++kw) {
                        const float wv = w(k, c, kh, kw);
                        for (int oh = 0; oh < ys.h; ++oh)
                            for (int ow = 0; ow < ys.w; ++ow)
                                y(n, k, oh, ow) += wv
                                        * xp(n, group * cpg + c,
                                                oh * params.s_h + kh,
                                                ow * params.s_w + kw);
                    }
        }
    return y;
}

Tensor4 pointwise_conv(const Tensor4 &x, const Tensor4 &w) {
    const Shape4 &ws = w.shape();
    if (ws.h != 1 || ws.w != 1)
        throw config_error("pointwise weights must be 1x1, got " + to_string(ws));
    ConvParams p;
    p.c_in = ws.c;
    p.c_out = ws.n;
    return direct_grouped_conv(x, w, p);
}

Tensor4 grouped_block(const Tensor4 &x, const Tensor4 &w_grouped,
        const Tensor4 &w_pointwise, const ConvParams &params) {
    if (w_pointwise.shape().c != params.c_out)
        throw config_error("pointwise stage expects "
                + std::to_string(w_pointwise.shape().c)
                + " input channels, grouped stage produces "
                + std::to_string(params.c_out));
    return pointwise_conv(direct_grouped_conv(x, w_grouped, params), w_pointwise);
}

} // namespace gspc
