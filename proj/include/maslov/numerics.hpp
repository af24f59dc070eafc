#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <cstddef>
#include <functional>
#include <thread>
#include <utility>
#include <vector>

namespace maslov {

struct MinimumBracket {
  double x = 0.0;
  double value = 0.0;
  double half_width = 0.0;
};

/// Golden-section search for the minimum of a unimodal f on [a, b]. Works for
/// non-smooth (V-shaped) minima, unlike parabolic interpolation.
inline MinimumBracket golden_section_minimize(const std::function<double(double)>& f, double a,
                                              double b, double xtol, int max_iter = 200) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > 2.0 * xtol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  MinimumBracket out;
  out.x = fc <= fd ? c : d;
  out.value = std::min(fc, fd);
  out.half_width = 0.5 * (b - a);
  return out;
}

/// Evaluates fn(i) for i in [0, count) on up to `jobs` threads; results keep index order.
template <typename Result, typename Fn>
std::vector<Result> parallel_map(std::size_t count, int jobs, Fn&& fn) {
  std::vector<Result> out(count);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) out[i] = fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace maslov
