#include "hopgat/hop_codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hopgat/errors.hpp"

namespace hopgat {

HopEncodingTable::HopEncodingTable(std::size_t d, int max_hv) : d_(d), max_hv_(max_hv) {
  if (d < 2 || d % 2 != 0) throw ConfigError("hop encoding width must be even and >= 2, got " + std::to_string(d));
  if (max_hv < 2) throw ConfigError("hop encoding needs max_hv >= 2, got " + std::to_string(max_hv));
  const std::size_t half = d / 2;
  rows_ = Tensor({static_cast<std::size_t>(max_hv) + 1, d});
  for (int hv = 0; hv <= max_hv; ++hv) {
    for (std::size_t i = 0; i < half; ++i) {
      const double angle = hv * frequency(i);
      rows_.at(hv, i) = std::sin(angle);
      rows_.at(hv, i + half) = std::cos(angle);
    }
  }
}

double HopEncodingTable::frequency(std::size_t i) const {
  const double half = static_cast<double>(d_ / 2);
  return std::exp(static_cast<double>(i) * (-std::log(static_cast<double>(max_hv_)) / std::max(half - 1.0, 1.0)));
}

std::span<const double> HopEncodingTable::lookup(int hv) const {
  if (hv < 0 || hv > max_hv_) {
    throw UsageError("hop value " + std::to_string(hv) + " outside [0, " + std::to_string(max_hv_) + "]");
  }
  return rows_.data().subspan(static_cast<std::size_t>(hv) * d_, d_);
}

std::size_t hop_table_width(std::size_t n) { return std::max<std::size_t>(2, n + (n % 2)); }

}  // namespace hopgat
