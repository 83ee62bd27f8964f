#include "ztac/opinion.hpp"

#include <cmath>
#include <cstddef>
#include <string>

namespace ztac {

namespace {

bool in_unit_interval(double v) noexcept { return v >= 0.0 && v <= 1.0; }

std::string component_text(const char* name, double v) {
  return std::string(name) + " = " + std::to_string(v);
}

}  // namespace

const char* proposition_name(Proposition p) noexcept {
  switch (p) {
    case Proposition::UserTrust: return "user_trust";
    case Proposition::DeviceTrust: return "device_trust";
    case Proposition::ChannelTrust: return "channel_trust";
    case Proposition::RiskOfDamage: return "risk_of_damage";
  }
  return "unknown";
}

Opinion make_opinion(double belief, double disbelief, double uncertainty,
                     double base_rate) {
  Opinion op{belief, disbelief, uncertainty, base_rate};
  validate(op);
  return op;
}

Opinion vacuous(double base_rate) {
  if (!in_unit_interval(base_rate)) {
    throw Error(Errc::ComponentOutOfRange,
                component_text("base_rate", base_rate));
  }
  return Opinion{0.0, 0.0, 1.0, base_rate};
}

void validate(const Opinion& op) {
  if (!in_unit_interval(op.belief)) {
    throw Error(Errc::ComponentOutOfRange, component_text("belief", op.belief));
  }
  if (!in_unit_interval(op.disbelief)) {
    throw Error(Errc::ComponentOutOfRange,
                component_text("disbelief", op.disbelief));
  }
  if (!in_unit_interval(op.uncertainty)) {
    throw Error(Errc::ComponentOutOfRange,
                component_text("uncertainty", op.uncertainty));
  }
  if (!in_unit_interval(op.base_rate)) {
    throw Error(Errc::ComponentOutOfRange,
                component_text("base_rate", op.base_rate));
  }
  const double sum = op.belief + op.disbelief + op.uncertainty;
  if (std::abs(sum - 1.0) > kAdditivityTol) {
    throw Error(Errc::AdditivityViolated, "b+d+u = " + std::to_string(sum));
  }
}

bool is_vacuous(const Opinion& op) noexcept {
  return op.uncertainty >= 1.0 - kBranchEps;
}

bool is_dogmatic(const Opinion& op) noexcept {
  return op.uncertainty <= kBranchEps;
}

double projected_probability(const Opinion& op) noexcept {
  return op.belief + op.uncertainty * op.base_rate;
}

Opinion weighted_fusion(std::span<const Opinion> ops) {
  if (ops.empty()) {
    throw Error(Errc::EmptyInput, "weighted_fusion of zero opinions");
  }
  for (const Opinion& op : ops) validate(op);

  const auto n = static_cast<double>(ops.size());

  bool all_vacuous = true;
  bool any_dogmatic = false;
  for (const Opinion& op : ops) {
    if (!is_vacuous(op)) all_vacuous = false;
    if (is_dogmatic(op)) any_dogmatic = true;
  }

  if (all_vacuous) {
    double a = 0.0;
    for (const Opinion& op : ops) a += op.base_rate;
    return Opinion{0.0, 0.0, 1.0, a / n};
  }

  // Fused base rate: confidence-weighted mean, sum a_i*(1-u_i) / sum (1-u_i).
  // The denominator is positive because not every operand is vacuous.
  double confidence_sum = 0.0;
  double base_rate_num = 0.0;
  for (const Opinion& op : ops) {
    const double confidence = 1.0 - op.uncertainty;
    confidence_sum += confidence;
    base_rate_num += op.base_rate * confidence;
  }
  const double fused_base_rate = base_rate_num / confidence_sum;

  if (any_dogmatic) {
    // Dogmatic operands carry infinite relative weight; with equal limit
    // rates they share it evenly, so the limit is their componentwise mean.
    double belief = 0.0;
    double disbelief = 0.0;
    std::size_t count = 0;
    for (const Opinion& op : ops) {
      if (!is_dogmatic(op)) continue;
      belief += op.belief;
      disbelief += op.disbelief;
      ++count;
    }
    belief /= static_cast<double>(count);
    disbelief /= static_cast<double>(count);
    const double uncertainty = std::max(0.0, 1.0 - belief - disbelief);
    return Opinion{belief, disbelief, uncertainty, fused_base_rate};
  }

  // General branch. The textbook form divides products of uncertainties by
  // D = sum_i prod_{j!=i} u_j - n*prod_i u_i, which underflows for long
  // operand lists. Dividing numerator and denominator by prod_i u_i gives
  // the equivalent confidence-ratio form with c_i = (1-u_i)/u_i:
  //   b = sum b_i*c_i / C,  d = sum d_i*c_i / C,  u = sum (1-u_i) / C.
  double ratio_sum = 0.0;
  double belief_num = 0.0;
  double disbelief_num = 0.0;
  for (const Opinion& op : ops) {
    const double ratio = (1.0 - op.uncertainty) / op.uncertainty;
    ratio_sum += ratio;
    belief_num += op.belief * ratio;
    disbelief_num += op.disbelief * ratio;
  }
  return Opinion{belief_num / ratio_sum, disbelief_num / ratio_sum,
                 confidence_sum / ratio_sum, fused_base_rate};
}

Opinion cumulative_fusion(std::span<const Opinion> ops) {
  if (ops.empty()) {
    throw Error(Errc::EmptyInput, "cumulative_fusion of zero opinions");
  }
  for (const Opinion& op : ops) validate(op);

  double base_rate_sum = 0.0;
  for (const Opinion& op : ops) {
    if (std::abs(op.base_rate - ops.front().base_rate) > kAdditivityTol) {
      throw Error(Errc::BaseRateMismatch,
                  std::to_string(op.base_rate) + " vs " +
                      std::to_string(ops.front().base_rate));
    }
    base_rate_sum += op.base_rate;
  }
  // Mean of (near-identical) base rates keeps the result exactly
  // permutation-invariant.
  const double base_rate = base_rate_sum / static_cast<double>(ops.size());

  bool any_dogmatic = false;
  for (const Opinion& op : ops) {
    if (is_dogmatic(op)) any_dogmatic = true;
  }

  if (any_dogmatic) {
    // Dogmatic limit: infinite evidence swamps every finite operand.
    double belief = 0.0;
    double disbelief = 0.0;
    std::size_t count = 0;
    for (const Opinion& op : ops) {
      if (!is_dogmatic(op)) continue;
      belief += op.belief;
      disbelief += op.disbelief;
      ++count;
    }
    belief /= static_cast<double>(count);
    disbelief /= static_cast<double>(count);
    const double uncertainty = std::max(0.0, 1.0 - belief - disbelief);
    return Opinion{belief, disbelief, uncertainty, base_rate};
  }

  double positive = 0.0;
  double negative = 0.0;
  for (const Opinion& op : ops) {
    positive += 2.0 * op.belief / op.uncertainty;
    negative += 2.0 * op.disbelief / op.uncertainty;
  }
  return from_evidence(EvidencePair{positive, negative}, base_rate);
}

EvidencePair to_evidence(const Opinion& op) {
  validate(op);
  if (op.uncertainty <= 0.0) {
    throw Error(Errc::DogmaticOpinion,
                "u = 0 has no finite evidence representation");
  }
  return EvidencePair{2.0 * op.belief / op.uncertainty,
                      2.0 * op.disbelief / op.uncertainty};
}

Opinion from_evidence(const EvidencePair& ev, double base_rate) {
  if (ev.positive < 0.0 || ev.negative < 0.0) {
    throw Error(Errc::ComponentOutOfRange, "evidence counts must be >= 0");
  }
  if (!in_unit_interval(base_rate)) {
    throw Error(Errc::ComponentOutOfRange,
                component_text("base_rate", base_rate));
  }
  const double total = ev.positive + ev.negative + 2.0;
  return Opinion{ev.positive / total, ev.negative / total, 2.0 / total,
                 base_rate};
}

}  // namespace ztac
