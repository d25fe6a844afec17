#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "latwalk/random.hpp"
#include "latwalk/regions.hpp"
#include "latwalk/stats.hpp"
#include "latwalk/walk_model.hpp"

namespace latwalk {

enum class TriggerKind { EnterRegion, ExitRegion, StepBudget };

struct Trigger {
  std::string label;
  TriggerKind kind = TriggerKind::StepBudget;
  Region region = Region::empty();
  /// EnterRegion only: may fire at step 0 (T0) instead of from step 1 (T).
  bool at_time_zero = false;
  std::uint64_t budget = 0;
};

/// Ordered list of triggers; the first trigger (in list order) that fires ends
/// the trajectory. ExitRegion fires at the first j >= 0 with S_j outside the
/// region, StepBudget(N) at step N.
class StoppingRule {
 public:
  StoppingRule& enter(std::string label, Region region, bool at_time_zero = false);
  StoppingRule& exit(std::string label, Region region);
  StoppingRule& budget(std::string label, std::uint64_t steps);

  const std::vector<Trigger>& triggers() const { return triggers_; }
  /// Index of the trigger with this label; throws Error{InvalidArgument} if absent.
  int find(const std::string& label) const;
  /// True if some trigger fires a.s. in finite time (exit from a disk or strip, or a step budget).
  bool guaranteed_finite() const;

 private:
  std::vector<Trigger> triggers_;
};

struct Outcome {
  static constexpr int kCapped = -1;
  int trigger = kCapped;  ///< index into the rule, kCapped if the hard cap was reached
  std::uint64_t step = 0;
  Point position;

  bool capped() const { return trigger == kCapped; }
};

struct McConfig {
  std::uint64_t seed = 0;
  std::uint64_t n_samples = 100000;
  std::uint64_t chunk = 4096;
  unsigned workers = 0;  ///< 0 = hardware concurrency
  std::uint64_t hard_cap = 1000000000;
};

/// Monte Carlo result. std_error = sample sd / sqrt(n); the Wilson interval is
/// filled for proportions.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t successes = 0;
  std::uint64_t cap_hits = 0;
  Interval wilson;
  bool proportion = false;
  std::uint64_t seed = 0;
  std::uint64_t chunk = 0;
};

/// Mixes a master seed with tags so each experiment cell gets its own stream family.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

// ---------------------------------------------------------------------------
// Trajectory loop

namespace detail {

inline bool fires(const Trigger& t, Point p, std::uint64_t step, const LatticeBasis& basis) {
  switch (t.kind) {
    case TriggerKind::EnterRegion: return (step > 0 || t.at_time_zero) && t.region.contains(p, basis);
    case TriggerKind::ExitRegion: return !t.region.contains(p, basis);
    case TriggerKind::StepBudget: return step >= t.budget;
  }
  return false;
}

inline int first_firing(const StoppingRule& rule, Point p, std::uint64_t step, const LatticeBasis& basis) {
  const auto& ts = rule.triggers();
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (fires(ts[i], p, step, basis)) return static_cast<int>(i);
  return Outcome::kCapped;
}

struct NoObserver {
  void operator()(Point, std::uint64_t) const {}
};

}  // namespace detail

/// Runs one trajectory from `start`; `observe(position, step)` sees S_0, ..., S_T.
template <class Observer = detail::NoObserver>
Outcome run_trajectory(const StepSampler& sampler, const LatticeBasis& basis, Point start, const StoppingRule& rule,
                       PhiloxStream& rng, std::uint64_t hard_cap, Observer&& observe = {}) {
  Point p = start;
  observe(p, 0);
  int fired = detail::first_firing(rule, p, 0, basis);
  std::uint64_t step = 0;
  while (fired == Outcome::kCapped && step < hard_cap) {
    p = p + sampler.sample(rng);
    ++step;
    observe(p, step);
    fired = detail::first_firing(rule, p, step, basis);
  }
  return {fired, step, p};
}

/// Splits n_samples trajectories into fixed chunks; trajectory t uses the
/// Philox stream (seed, t). `per_chunk(first, count, acc)` fills one
/// accumulator per chunk and the accumulators are returned in chunk order,
/// so any fold over them is independent of the worker count.
template <class Acc, class Fn>
std::vector<Acc> run_chunks(const McConfig& cfg, Fn&& per_chunk) {
  const std::uint64_t chunk = std::max<std::uint64_t>(cfg.chunk, 1);
  const std::uint64_t n_chunks = (cfg.n_samples + chunk - 1) / chunk;
  std::vector<Acc> out(n_chunks);
  unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(n_chunks, 1)));
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t c; (c = next.fetch_add(1)) < n_chunks;) {
      const std::uint64_t first = c * chunk;
      per_chunk(first, std::min(chunk, cfg.n_samples - first), out[c]);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

/// One trajectory; throws Error{CapExceeded} if nothing fired within hard_cap.
Outcome simulate_until(const WalkModel& model, Point start, const StoppingRule& rule, std::uint64_t seed,
                       std::uint64_t trajectory = 0, std::uint64_t hard_cap = 1000000000);

struct EventSpec {
  StoppingRule rule;
  /// Capped trajectories never reach this predicate; they count as failures.
  std::function<bool(const Outcome&)> success;

  /// Success iff the trigger labelled `label` ended the trajectory.
  static EventSpec fired(StoppingRule rule, const std::string& label);
};

Estimate estimate_event(const WalkModel& model, Point start, const EventSpec& event, const McConfig& cfg);

using Functional = std::function<double(const Outcome&)>;

namespace functional {
Functional modulus(const LatticeBasis& basis);
Functional log_modulus(const LatticeBasis& basis);
Functional constant(double c);
}  // namespace functional

/// Sample mean of functional(outcome). Capped trajectories are evaluated at
/// their last position and counted in cap_hits.
Estimate estimate_expectation(const WalkModel& model, Point start, const StoppingRule& rule, const Functional& f,
                              const McConfig& cfg);

/// Mean number of j <= T with S_j in `targets`.
Estimate estimate_visits(const WalkModel& model, Point start, const StoppingRule& rule, const Region& targets,
                         const McConfig& cfg);

}  // namespace latwalk
