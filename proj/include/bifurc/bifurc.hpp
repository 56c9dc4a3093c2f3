#pragma once

#include "bifurc/bench.hpp"
#include "bifurc/encoding.hpp"
#include "bifurc/errors.hpp"
#include "bifurc/ising.hpp"
#include "bifurc/markets.hpp"
#include "bifurc/matrix.hpp"
#include "bifurc/sb.hpp"

namespace bifurc {
inline constexpr const char* kVersion = "0.1.0";
}
