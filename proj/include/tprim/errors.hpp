// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tprim {

/// Precondition violated by a caller-supplied value.
class InvalidInput : public std::invalid_argument {
  public:
    explicit InvalidInput(const std::string &what) : std::invalid_argument(what) {}
};

/// Malformed scene, grid or point file.
class FormatError : public std::runtime_error {
  public:
    explicit FormatError(const std::string &what) : std::runtime_error(what) {}
};

/// Divergence or a non-finite value during optimization.
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace tprim
