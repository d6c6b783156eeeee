#include "hopgat/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "hopgat/errors.hpp"
#include "hopgat/rng.hpp"

namespace hopgat {

double ground_truth(int hv, int max_hv) {
  if (hv < 0) throw UsageError("ground_truth: negative hop value");
  if (hv == 0) return 1.0;
  if (hv < max_hv) return 1.0 - hv;
  return 1.0 - max_hv;
}

PairList PairSample::combined() const {
  PairList all;
  all.centers.reserve(size());
  all.neighbors.reserve(size());
  all.hops.reserve(size());
  for (const PairList* part : {&near, &far}) {
    all.centers.insert(all.centers.end(), part->centers.begin(), part->centers.end());
    all.neighbors.insert(all.neighbors.end(), part->neighbors.begin(), part->neighbors.end());
    all.hops.insert(all.hops.end(), part->hops.begin(), part->hops.end());
  }
  return all;
}

PairSampler::PairSampler(const HopMatrix& hops, double ratio) : hops_(&hops), ratio_(ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("sample ratio must be in (0, 1], got " + std::to_string(ratio));
  near_ = neighborhood_pairs(hops, hops.max_hv() - 1);
  const auto n = static_cast<std::uint64_t>(hops.size());
  far_total_ = n * n - near_.size();
}

std::uint64_t PairSampler::far_sample_size() const {
  return std::min<std::uint64_t>(far_total_, static_cast<std::uint64_t>(std::llround(ratio_ * static_cast<double>(far_total_))));
}

PairSample PairSampler::sample(std::uint64_t seed) const {
  PairSample out;
  out.near = near_;
  out.ratio = ratio_;
  out.far_total = far_total_;
  const std::uint64_t want = far_sample_size();
  if (want == 0) return out;

  const HopMatrix& hops = *hops_;
  const std::size_t n = hops.size();
  const int max_hv = hops.max_hv();
  Rng rng(seed);
  std::vector<std::uint64_t> chosen;
  chosen.reserve(want);
  if (want * 2 > far_total_) {
    // Dense request: enumerate and partially shuffle.
    std::vector<std::uint64_t> all;
    all.reserve(far_total_);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (hops.at(i, j) >= max_hv) all.push_back(static_cast<std::uint64_t>(i) * n + j);
    for (std::uint64_t k = 0; k < want; ++k) std::swap(all[k], all[k + rng.below(all.size() - k)]);
    chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(want));
  } else {
    // Sparse request: far pairs are at least half of what remains, so
    // rejection sampling terminates quickly.
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(want * 2);
    const std::uint64_t space = static_cast<std::uint64_t>(n) * n;
    while (chosen.size() < want) {
      const std::uint64_t key = rng.below(space);
      if (hops.at(key / n, key % n) < max_hv) continue;
      if (seen.insert(key).second) chosen.push_back(key);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  for (std::uint64_t key : chosen) {
    out.far.push_back(static_cast<std::uint32_t>(key / n), static_cast<std::uint32_t>(key % n), max_hv);
  }
  return out;
}

Var attention_loss(std::span<const HeadScores> fields, const PairSample& sample, int max_hv) {
  if (fields.empty()) throw UsageError("attention_loss: no attention fields");
  if (sample.size() == 0) throw UsageError("attention_loss: no supervised pairs");
  const PairList pairs = sample.combined();
  Tensor target({pairs.size()});
  for (std::size_t p = 0; p < pairs.size(); ++p) target[p] = ground_truth(pairs.hops[p], max_hv);

  Tape& tape = *fields.front().center.tape();
  const Var target_var = tape.constant(std::move(target));
  Var total;
  for (const HeadScores& field : fields) {
    const Var sq = sum(square(pair_logits(field, pairs) - target_var));
    total = total.valid() ? total + sq : sq;
  }
  return scale(total, 1.0 / static_cast<double>(fields.size() * pairs.size()));
}

std::vector<HeadScores> collect_fields(const ModelOutput& out) {
  std::vector<HeadScores> fields;
  for (const LayerOutput& layer : out.layers) fields.insert(fields.end(), layer.heads.begin(), layer.heads.end());
  return fields;
}

}  // namespace hopgat
