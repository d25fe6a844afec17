#include "latwalk/monte_carlo.hpp"

#include "latwalk/error.hpp"

namespace latwalk {

StoppingRule& StoppingRule::enter(std::string label, Region region, bool at_time_zero) {
  triggers_.push_back({std::move(label), TriggerKind::EnterRegion, std::move(region), at_time_zero, 0});
  return *this;
}

StoppingRule& StoppingRule::exit(std::string label, Region region) {
  triggers_.push_back({std::move(label), TriggerKind::ExitRegion, std::move(region), false, 0});
  return *this;
}

StoppingRule& StoppingRule::budget(std::string label, std::uint64_t steps) {
  triggers_.push_back({std::move(label), TriggerKind::StepBudget, Region::empty(), false, steps});
  return *this;
}

int StoppingRule::find(const std::string& label) const {
  for (std::size_t i = 0; i < triggers_.size(); ++i)
    if (triggers_[i].label == label) return static_cast<int>(i);
  fail(ErrorCode::InvalidArgument, "stopping rule has no trigger labelled '" + label + "'");
}

bool StoppingRule::guaranteed_finite() const {
  for (const auto& t : triggers_) {
    if (t.kind == TriggerKind::StepBudget) return true;
    if (t.kind != TriggerKind::ExitRegion) continue;
    const auto& v = t.region.variant();
    if (std::holds_alternative<region::Disk>(v) || std::holds_alternative<region::Strip>(v)) return true;
    if (t.region.bounding_radius(LatticeBasis{})) return true;
  }
  return false;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  // splitmix64 finalizer chained over the tags.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  for (auto t : tags) h = mix(h ^ mix(t));
  return h;
}

Outcome simulate_until(const WalkModel& model, Point start, const StoppingRule& rule, std::uint64_t seed,
                       std::uint64_t trajectory, std::uint64_t hard_cap) {
  const StepSampler sampler(model);
  PhiloxStream rng(seed, trajectory);
  const auto out = run_trajectory(sampler, model.basis(), start, rule, rng, hard_cap);
  if (out.capped())
    fail(ErrorCode::CapExceeded, "no trigger fired within " + std::to_string(hard_cap) + " steps");
  return out;
}

EventSpec EventSpec::fired(StoppingRule rule, const std::string& label) {
  const int index = rule.find(label);
  return {std::move(rule), [index](const Outcome& o) { return o.trigger == index; }};
}

namespace {

void require_finite(const StoppingRule& rule, const McConfig& cfg) {
  if (rule.triggers().empty()) fail(ErrorCode::InvalidArgument, "stopping rule has no triggers");
  if (!rule.guaranteed_finite() && cfg.hard_cap == 0)
    fail(ErrorCode::InvalidArgument, "stopping rule is not a.s. finite and no hard cap is set");
  if (cfg.n_samples == 0) fail(ErrorCode::InvalidArgument, "n_samples must be positive");
}

/// Running mean and centred second moment, merged in chunk order.
struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t successes = 0;
  std::uint64_t caps = 0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0) return;
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    mean += d * static_cast<double>(o.n) / total;
    n += o.n;
    successes += o.successes;
    caps += o.caps;
  }
};

Estimate finish(const std::vector<Moments>& chunks, const McConfig& cfg, bool proportion) {
  Moments all;
  for (const auto& c : chunks) all.merge(c);
  Estimate e;
  e.n_samples = all.n;
  e.mean = all.mean;
  e.std_error = all.n > 1 ? std::sqrt(all.m2 / static_cast<double>(all.n - 1) / static_cast<double>(all.n)) : 0.0;
  e.successes = all.successes;
  e.cap_hits = all.caps;
  e.proportion = proportion;
  if (proportion && all.n > 0) {
    // Exact successes / n rather than the running mean.
    const double p = static_cast<double>(all.successes) / static_cast<double>(all.n);
    e.mean = p;
    e.std_error = all.n > 1 ? std::sqrt(p * (1.0 - p) / static_cast<double>(all.n - 1)) : 0.0;
    e.wilson = wilson_interval(all.successes, all.n);
  }
  e.seed = cfg.seed;
  e.chunk = cfg.chunk;
  return e;
}

}  // namespace

Estimate estimate_event(const WalkModel& model, Point start, const EventSpec& event, const McConfig& cfg) {
  require_finite(event.rule, cfg);
  const StepSampler sampler(model);
  const auto& basis = model.basis();
  auto chunks = run_chunks<Moments>(cfg, [&](std::uint64_t first, std::uint64_t count, Moments& acc) {
    for (std::uint64_t t = first; t < first + count; ++t) {
      PhiloxStream rng(cfg.seed, t);
      const auto o = run_trajectory(sampler, basis, start, event.rule, rng, cfg.hard_cap);
      const bool ok = !o.capped() && event.success(o);
      if (o.capped()) ++acc.caps;
      if (ok) ++acc.successes;
      acc.add(ok ? 1.0 : 0.0);
    }
  });
  return finish(chunks, cfg, true);
}

namespace functional {
Functional modulus(const LatticeBasis& basis) {
  return [basis](const Outcome& o) { return std::sqrt(basis.norm2(o.position)); };
}
Functional log_modulus(const LatticeBasis& basis) {
  return [basis](const Outcome& o) { return 0.5 * std::log(basis.norm2(o.position)); };
}
Functional constant(double c) {
  return [c](const Outcome&) { return c; };
}
}  // namespace functional

Estimate estimate_expectation(const WalkModel& model, Point start, const StoppingRule& rule, const Functional& f,
                              const McConfig& cfg) {
  require_finite(rule, cfg);
  const StepSampler sampler(model);
  const auto& basis = model.basis();
  auto chunks = run_chunks<Moments>(cfg, [&](std::uint64_t first, std::uint64_t count, Moments& acc) {
    for (std::uint64_t t = first; t < first + count; ++t) {
      PhiloxStream rng(cfg.seed, t);
      const auto o = run_trajectory(sampler, basis, start, rule, rng, cfg.hard_cap);
      if (o.capped()) ++acc.caps;
      acc.add(f(o));
    }
  });
  return finish(chunks, cfg, false);
}

Estimate estimate_visits(const WalkModel& model, Point start, const StoppingRule& rule, const Region& targets,
                         const McConfig& cfg) {
  require_finite(rule, cfg);
  const StepSampler sampler(model);
  const auto& basis = model.basis();
  auto chunks = run_chunks<Moments>(cfg, [&](std::uint64_t first, std::uint64_t count, Moments& acc) {
    for (std::uint64_t t = first; t < first + count; ++t) {
      PhiloxStream rng(cfg.seed, t);
      std::uint64_t visits = 0;
      const auto o = run_trajectory(sampler, basis, start, rule, rng, cfg.hard_cap, [&](Point p, std::uint64_t) {
        if (targets.contains(p, basis)) ++visits;
      });
      if (o.capped()) ++acc.caps;
      acc.add(static_cast<double>(visits));
    }
  });
  return finish(chunks, cfg, false);
}

}  // namespace latwalk
