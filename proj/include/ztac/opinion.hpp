#pragma once

#include <initializer_list>
#include <span>

#include "ztac/error.hpp"

namespace ztac {

/// A binomial subjective-logic opinion about one binary proposition.
///
/// Invariants: belief + disbelief + uncertainty = 1 (within kAdditivityTol)
/// and every component lies in [0,1]. Construct through make_opinion() or
/// vacuous() to get those checked; plain aggregate construction is reserved
/// for code that has already established validity.
struct Opinion {
  double belief = 0.0;
  double disbelief = 0.0;
  double uncertainty = 1.0;
  double base_rate = 0.5;
};

/// Dirichlet evidence view of a non-dogmatic opinion: r observations in
/// favor, s against, with non-informative prior weight 2 (binary domain).
struct EvidencePair {
  double positive = 0.0;  // r
  double negative = 0.0;  // s
};

/// The four propositions opinions are formed about: per-entity
/// trustworthiness and the risk of damage if the request is permitted.
enum class Proposition { UserTrust, DeviceTrust, ChannelTrust, RiskOfDamage };

const char* proposition_name(Proposition p) noexcept;

/// Absolute tolerance for all equality checks on opinion components.
inline constexpr double kAdditivityTol = 1e-9;

/// Operands this close to the dogmatic (u=0) or vacuous (u=1) limit are
/// routed to the corresponding closed-form limit branch of the fusions.
inline constexpr double kBranchEps = 1e-12;

/// Validated constructor. Throws ComponentOutOfRange if any component is
/// outside [0,1], AdditivityViolated if |b+d+u-1| > kAdditivityTol.
Opinion make_opinion(double belief, double disbelief, double uncertainty,
                     double base_rate);

/// The totally uncertain opinion {0,0,1,base_rate}.
Opinion vacuous(double base_rate);

/// Re-checks the Opinion invariants; throws like make_opinion.
void validate(const Opinion& op);

bool is_vacuous(const Opinion& op) noexcept;
bool is_dogmatic(const Opinion& op) noexcept;

/// Projected probability P = b + u*a — the scalar probability the opinion
/// assigns to its proposition.
double projected_probability(const Opinion& op) noexcept;

/// N-ary weighted belief fusion: operands are weighted by their confidence
/// (1-u), so low-uncertainty opinions dominate. Idempotent; a vacuous
/// operand is neutral as long as some other operand carries confidence.
///
/// Limit branches: all operands dogmatic -> componentwise mean with u=0;
/// all vacuous -> vacuous with the mean base rate; a mix containing
/// dogmatic operands -> mean over the dogmatic ones (infinite confidence
/// dominates).
Opinion weighted_fusion(std::span<const Opinion> ops);

/// N-ary cumulative belief fusion via Dirichlet evidence additivity:
/// opinions are converted to evidence pairs, summed, and converted back.
/// Associative and commutative by construction; uncertainty strictly
/// decreases whenever new evidence is added. All operands must share one
/// base rate (BaseRateMismatch otherwise); dogmatic operands collapse the
/// result to their componentwise mean.
Opinion cumulative_fusion(std::span<const Opinion> ops);

/// Evidence mapping r = 2b/u, s = 2d/u. Throws DogmaticOpinion when u = 0.
EvidencePair to_evidence(const Opinion& op);

/// Inverse mapping b = r/(r+s+2), d = s/(r+s+2), u = 2/(r+s+2).
Opinion from_evidence(const EvidencePair& ev, double base_rate);

inline Opinion weighted_fusion(std::initializer_list<Opinion> ops) {
  return weighted_fusion(std::span<const Opinion>(ops.begin(), ops.size()));
}
inline Opinion cumulative_fusion(std::initializer_list<Opinion> ops) {
  return cumulative_fusion(std::span<const Opinion>(ops.begin(), ops.size()));
}

}  // namespace ztac
