// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/error.hpp"

#include <sstream>

namespace emodiff {

void throw_shape(const std::string& what, long expected_rows, long expected_cols, long rows,
                 long cols) {
  std::ostringstream os;
  os << what << ": expected " << expected_rows << "x" << expected_cols << ", got " << rows << "x"
     << cols;
  throw ShapeError(os.str());
}

}  // namespace emodiff
