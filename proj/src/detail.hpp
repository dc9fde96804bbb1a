#pragma once

#include <span>

#include "boxflow/core.hpp"

namespace boxflow::detail {

inline std::span<const double> view(const Vec& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<double> view(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

} // namespace boxflow::detail
