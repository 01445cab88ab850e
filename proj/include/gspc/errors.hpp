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

#include <stdexcept>
#include <string>

namespace gspc {

/// Shapes, parameters or tile sizes that violate an operation's contract.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Tile sizes outside the packing constraints (0 < T <= per-group count, T divides it).
struct tile_error : config_error {
    using config_error::config_error;
};

struct bounds_error : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed file contents. The message names the offending field or line.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct lookup_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct key_mismatch_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct tuning_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gspc
