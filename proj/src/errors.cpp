#include "gapflow/errors.hpp"

namespace gapflow {

void require_same_size(std::ptrdiff_t expected, std::ptrdiff_t actual,
                       const char* what) {
  if (expected != actual) {
    throw DimensionMismatch(std::string(what) + ": expected size " +
                            std::to_string(expected) + ", got " +
                            std::to_string(actual));
  }
}

}  // namespace gapflow
