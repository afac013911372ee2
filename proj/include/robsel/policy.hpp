#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "robsel/baselines.hpp"
#include "robsel/errors.hpp"
#include "robsel/problem.hpp"
#include "robsel/vfa_policy.hpp"

namespace robsel {

enum class PolicyKind { raoda, rocba, ea, ptv };

inline constexpr std::array<PolicyKind, 4> kAllPolicies{PolicyKind::raoda, PolicyKind::rocba,
                                                        PolicyKind::ea, PolicyKind::ptv};

constexpr std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::raoda: return "raoda";
    case PolicyKind::rocba: return "rocba";
    case PolicyKind::ea: return "ea";
    case PolicyKind::ptv: return "ptv";
  }
  return "?";
}

inline PolicyKind parse_policy(std::string_view name) {
  for (PolicyKind kind : kAllPolicies)
    if (policy_name(kind) == name) return kind;
  throw ConfigError("unknown policy '" + std::string(name) + "' (expected raoda|rocba|ea|ptv)");
}

struct PolicyOptions {
  std::int64_t rocba_resolve_every = 1;
};

// One sequential allocation rule behind a common interface. Holds whatever
// per-replication state the rule needs (ROCBA's warm-started solver).
class Allocator {
 public:
  explicit Allocator(PolicyKind kind, PolicyOptions options = {})
      : kind_(kind), rocba_(options.rocba_resolve_every) {}

  PolicyKind kind() const { return kind_; }
  bool needs_ranking() const { return kind_ == PolicyKind::raoda || kind_ == PolicyKind::rocba; }

  PairIndex next(const PosteriorState& state, const SampleVarianceTracker& tracker,
                 const Ranking* ranking) {
    switch (kind_) {
      case PolicyKind::raoda: return raoda_allocate(state, require(ranking));
      case PolicyKind::rocba: return rocba_.allocate(state, require(ranking));
      case PolicyKind::ea: return ea_allocate(state);
      case PolicyKind::ptv: return ptv_allocate(state, tracker);
    }
    throw PreconditionError("unhandled policy");
  }

  std::size_t fallbacks() const { return kind_ == PolicyKind::rocba ? rocba_.fallbacks() : 0; }
  std::size_t approximate_targets() const {
    return kind_ == PolicyKind::rocba ? rocba_.approximate_targets() : 0;
  }

 private:
  static const Ranking& require(const Ranking* r) {
    if (r == nullptr) throw PreconditionError("policy needs the current ranking");
    return *r;
  }

  PolicyKind kind_;
  RocbaPolicy rocba_;
};

}  // namespace robsel
