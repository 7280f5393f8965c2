#pragma once

#include <mutex>

namespace kaclab::detail {

/// FFTW planning and plan destruction are not thread safe.
std::mutex& fftw_planner_mutex();

}  // namespace kaclab::detail
