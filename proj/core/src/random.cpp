#include "latwalk/random.hpp"

#include <cmath>

#include "latwalk/error.hpp"
#include "latwalk/walk_model.hpp"

namespace latwalk {

namespace philox {

namespace {
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}
}  // namespace

Counter block(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace philox

StepSampler::StepSampler(const WalkModel& model) {
  const auto& steps = model.steps();
  std::vector<const Step*> charged;
  for (const auto& s : steps)
    if (s.prob > 0.0) charged.push_back(&s);
  if (charged.empty()) fail(ErrorCode::InvalidArgument, "step law has no mass");

  for (int b = 1; b <= 12 && dyadic_bits_ == 0; ++b) {
    const double scale = std::ldexp(1.0, b);
    bool ok = true;
    for (const auto* s : charged) {
      const double m = s->prob * scale;
      if (m != std::floor(m)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    dyadic_bits_ = b;
    table_.reserve(std::size_t{1} << b);
    for (const auto* s : charged)
      table_.insert(table_.end(), static_cast<std::size_t>(s->prob * scale), s->offset);
    if (table_.size() != (std::size_t{1} << b)) {
      table_.clear();
      dyadic_bits_ = 0;
    }
  }
  if (dyadic_bits_ > 0) return;

  // Vose's alias construction.
  n_ = charged.size();
  table_.resize(n_);
  threshold_.assign(n_, 0);
  alias_.assign(n_, 0);
  std::vector<double> q(n_);
  double total = 0.0;
  for (const auto* s : charged) total += s->prob;
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n_; ++i) {
    table_[i] = charged[i]->offset;
    q[i] = charged[i]->prob / total * static_cast<double>(n_);
    (q[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    threshold_[s] = static_cast<std::uint64_t>(std::llround(q[s] * 4294967296.0));
    alias_[s] = l;
    q[l] = (q[l] + q[s]) - 1.0;
    if (q[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) threshold_[i] = std::uint64_t{1} << 32, alias_[i] = i;
  for (auto i : small) threshold_[i] = std::uint64_t{1} << 32, alias_[i] = i;
}

}  // namespace latwalk
