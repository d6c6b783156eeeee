#pragma once

#include <cstddef>
#include <span>

#include "hopgat/tensor.hpp"

namespace hopgat {

// Sinusoidal hop encodings, one row per hop value 0..max_hv. The first d/2
// columns hold sin(hv·inv_i), the last d/2 hold cos(hv·inv_i) with the same
// frequencies inv_i = exp(-i·log(max_hv) / max(d/2 - 1, 1)), i in [0, d/2).
class HopEncodingTable {
 public:
  HopEncodingTable() = default;
  // Throws ConfigError for odd or zero d, or max_hv < 2.
  HopEncodingTable(std::size_t d, int max_hv);

  std::size_t dim() const { return d_; }
  int max_hv() const { return max_hv_; }
  const Tensor& rows() const { return rows_; }
  double frequency(std::size_t i) const;

  // Row `hv`. Saturate hop values before calling; hv > max_hv is a UsageError.
  std::span<const double> lookup(int hv) const;

 private:
  std::size_t d_ = 0;
  int max_hv_ = 0;
  Tensor rows_;
};

// Smallest even width >= n (at least 2); used to size a layer's table.
std::size_t hop_table_width(std::size_t n);

}  // namespace hopgat
