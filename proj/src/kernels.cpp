#include "thermotob/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace thermotob::kernels {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct TermConstants {
  double mean;
  double inv_var;
  double log_norm;  // log weight - 0.5 log(2 pi var)
};

std::vector<TermConstants> precompute(std::span<const MixtureTerm> terms) {
  std::vector<TermConstants> c;
  c.reserve(terms.size());
  for (const auto& t : terms) {
    c.push_back({t.mean, 1.0 / t.variance, t.log_weight - 0.5 * (kLog2Pi + std::log(t.variance))});
  }
  return c;
}

// Accumulates one contiguous range into `sums`. Shared by both variants so
// the per-sample arithmetic is identical.
void accumulate(std::span<const double> x, const std::vector<TermConstants>& c, EStepSums& sums) {
  const std::size_t m = c.size();
  std::array<double, 16> stack_lp{};
  std::vector<double> heap_lp;
  double* lp = stack_lp.data();
  if (m > stack_lp.size()) {
    heap_lp.resize(m);
    lp = heap_lp.data();
  }
  for (const double xi : x) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
      const double d = xi - c[k].mean;
      lp[k] = c[k].log_norm - 0.5 * d * d * c[k].inv_var;
      best = std::max(best, lp[k]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      lp[k] = std::exp(lp[k] - best);
      total += lp[k];
    }
    sums.log_likelihood += best + std::log(total);
    const double inv_total = 1.0 / total;
    for (std::size_t k = 0; k < m; ++k) {
      const double r = lp[k] * inv_total;
      const double d = xi - c[k].mean;
      sums.resp[k] += r;
      sums.first[k] += r * d;
      sums.second[k] += r * d * d;
    }
  }
}

void normalize_range(std::span<const std::uint16_t> raw, const CalibrationMap& cal, double lo,
                     double span, std::span<double> out, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    const double t = cal.offset + cal.scale * static_cast<double>(raw[i]);
    out[i] = std::clamp((t - lo) / span, 0.0, 1.0);
  }
}

double window_mean(std::span<const double> in, std::size_t k, std::size_t n) {
  const std::size_t taps = std::min(k, n + 1);
  double acc = 0.0;
  for (std::size_t j = 0; j < taps; ++j) acc += in[n - j];
  return acc / static_cast<double>(k);
}

}  // namespace

void EStepSums::add(const EStepSums& other) {
  log_likelihood += other.log_likelihood;
  for (std::size_t k = 0; k < resp.size(); ++k) {
    resp[k] += other.resp[k];
    first[k] += other.first[k];
    second[k] += other.second[k];
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

EStepSums estep(std::span<const double> x, std::span<const MixtureTerm> terms) {
  EStepSums sums(terms.size());
  accumulate(x, precompute(terms), sums);
  return sums;
}

void normalize(std::span<const std::uint16_t> raw, const CalibrationMap& cal, double lo, double hi,
               std::span<double> out) {
  normalize_range(raw, cal, lo, hi - lo, out, 0, raw.size());
}

void maxmin_normalize(std::span<const std::uint16_t> raw, const CalibrationMap& cal,
                      std::span<double> out) {
  if (raw.empty()) return;
  const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
  if (*mn == *mx) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double lo = cal.offset + cal.scale * static_cast<double>(*mn);
  const double hi = cal.offset + cal.scale * static_cast<double>(*mx);
  normalize_range(raw, cal, lo, hi - lo, out, 0, raw.size());
}

void fir_moving_average(std::span<const double> in, std::size_t k, std::span<double> out) {
  for (std::size_t n = 0; n < in.size(); ++n) out[n] = window_mean(in, k, n);
}

}  // namespace serial

namespace parallel {

EStepSums estep(std::span<const double> x, std::span<const MixtureTerm> terms) {
  const auto c = precompute(terms);
  const std::size_t blocks = (x.size() + kReductionBlock - 1) / kReductionBlock;
  std::vector<EStepSums> partial(blocks, EStepSums(terms.size()));
  const auto nblocks = static_cast<std::int64_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nblocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t len = std::min(kReductionBlock, x.size() - begin);
    accumulate(x.subspan(begin, len), c, partial[static_cast<std::size_t>(b)]);
  }
  EStepSums sums(terms.size());
  for (const auto& p : partial) sums.add(p);
  return sums;
}

void normalize(std::span<const std::uint16_t> raw, const CalibrationMap& cal, double lo, double hi,
               std::span<double> out) {
  const double span = hi - lo;
  const auto n = static_cast<std::int64_t>(raw.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = cal.offset + cal.scale * static_cast<double>(raw[static_cast<std::size_t>(i)]);
    out[static_cast<std::size_t>(i)] = std::clamp((t - lo) / span, 0.0, 1.0);
  }
}

void maxmin_normalize(std::span<const std::uint16_t> raw, const CalibrationMap& cal,
                      std::span<double> out) {
  if (raw.empty()) return;
  std::uint16_t mn = raw[0];
  std::uint16_t mx = raw[0];
  const auto n = static_cast<std::int64_t>(raw.size());
#pragma omp parallel for reduction(min : mn) reduction(max : mx) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto v = raw[static_cast<std::size_t>(i)];
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  if (mn == mx) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double lo = cal.offset + cal.scale * static_cast<double>(mn);
  const double hi = cal.offset + cal.scale * static_cast<double>(mx);
  normalize(raw, cal, lo, hi, out);
}

void fir_moving_average(std::span<const double> in, std::size_t k, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(in.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = window_mean(in, k, static_cast<std::size_t>(i));
  }
}

}  // namespace parallel

}  // namespace thermotob::kernels
