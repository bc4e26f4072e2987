#include "divsf/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "divsf/errors.hpp"
#include "divsf/robustness_fw.hpp"

namespace divsf {
namespace {

void require_non_empty(const PolicySet& set, std::string_view mechanism) {
  if (set.empty()) {
    throw MechanismPrecondition(std::string(mechanism) +
                                " diversity reward needs a non-empty policy set");
  }
}

void require_prior(const Vector& prior, std::size_t expected) {
  if (static_cast<std::size_t>(prior.size()) != expected) {
    throw InvalidArgument("prior has " + std::to_string(prior.size()) +
                          " entries, expected " + std::to_string(expected));
  }
  if ((prior.array() < 0.0).any() || std::abs(prior.sum() - 1.0) > 1e-9) {
    throw InvalidArgument("prior is not a normalized probability vector");
  }
}

Vector uniform_or(const Vector& prior, std::size_t n) {
  if (prior.size() == 0) return Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / n);
  require_prior(prior, n);
  return prior;
}

void require_distributions(std::span<const Vector> ds, const Vector& prior) {
  if (ds.empty()) throw InvalidArgument("no distributions given");
  require_prior(prior, ds.size());
  for (const Vector& d : ds) {
    if (d.size() != ds.front().size()) {
      throw DimensionError("distributions differ in length");
    }
    if ((d.array() <= 0.0).any()) {
      throw StrictPositivityError("distribution has a zero entry");
    }
  }
}

}  // namespace

void DiversityMechanism::validate() const {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (prior.size() > 0) {
    if ((prior.array() < 0.0).any() || std::abs(prior.sum() - 1.0) > 1e-9) {
      throw InvalidArgument("prior is not a normalized probability vector");
    }
  }
}

RewardTable reward_none(const FeatureTensor& phi) {
  return RewardTable::Zero(phi.n_states(), phi.n_actions());
}

RewardTable bound_transform(const RewardTable& raw, const Vector& w, double tau,
                            BoundVariant variant) {
  const double w2 = w.squaredNorm();
  if (!(w2 > 0.0)) throw DegenerateWeight("bounding transform needs ||w|| > 0");
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  const double denom = variant == BoundVariant::kNormalized
                           ? 1.0 - std::exp(-tau)
                           : 1.0 - std::exp(tau);
  const Eigen::ArrayXXd shifted = (raw.array() + w2) / w2;
  return ((1.0 - (-tau * shifted).exp()) / denom).matrix();
}

RewardTable reward_average(const PolicySet& set, const FeatureTensor& phi,
                           const Bounding& bounding, double tau) {
  require_non_empty(set, "average");
  Vector w = Vector::Zero(phi.dim());
  for (const PolicyEntry& e : set.entries) w -= e.psi.psi;
  w /= static_cast<double>(set.size());
  const RewardTable raw = phi.project(w);
  if (!bounding.enabled) return raw;
  if (w.squaredNorm() == 0.0) return reward_none(phi);
  return bound_transform(raw, w, tau, bounding.variant);
}

RewardTable reward_min(const PolicySet& set, const FeatureTensor& phi,
                       const Bounding& bounding, double tau) {
  require_non_empty(set, "min");
  RewardTable out = RewardTable::Constant(phi.n_states(), phi.n_actions(),
                                          std::numeric_limits<double>::infinity());
  for (const PolicyEntry& e : set.entries) {
    const Vector w = -e.psi.psi;
    RewardTable term = phi.project(w);
    if (bounding.enabled) {
      term = w.squaredNorm() == 0.0 ? reward_none(phi)
                                    : bound_transform(term, w, tau, bounding.variant);
    }
    out = out.cwiseMin(term);
  }
  return out;
}

RewardTable reward_discrimination(const PolicySet& set,
                                  const SuccessorFeatures& current,
                                  const Vector& prior, const FeatureTensor& phi,
                                  bool subtract_log_prior) {
  const std::size_t n = set.size() + 1;
  const Vector p = uniform_or(prior, n);
  if (current.psi.size() != phi.dim()) {
    throw DimensionError("current SFs do not match the feature dimension");
  }
  std::vector<const Vector*> psis;
  psis.reserve(n);
  for (const PolicyEntry& e : set.entries) psis.push_back(&e.psi.psi);
  psis.push_back(&current.psi);

  const double log_p_current = std::log(p(static_cast<Eigen::Index>(n - 1)));
  RewardTable out(phi.n_states(), phi.n_actions());
  std::vector<double> logits(n);
  for (int s = 0; s < phi.n_states(); ++s) {
    for (int a = 0; a < phi.n_actions(); ++a) {
      const auto f = phi.at(s, a);
      double max_logit = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        const double pj = p(static_cast<Eigen::Index>(j));
        logits[j] = pj > 0.0 ? std::log(pj) + f.dot(*psis[j])
                             : -std::numeric_limits<double>::infinity();
        max_logit = std::max(max_logit, logits[j]);
      }
      double sum = 0.0;
      for (double l : logits) sum += std::exp(l - max_logit);
      double r = logits[n - 1] - max_logit - std::log(sum);
      if (subtract_log_prior) r -= log_p_current;
      out(s, a) = r;
    }
  }
  return out;
}

DiversityReward reward_robustness(const PolicySet& set, const FeatureTensor& phi,
                                  const Bounding& bounding, double tau) {
  require_non_empty(set, "robustness");
  const std::vector<Vector> sfs = set.sfs();
  const WorstCaseReward wc = worst_case_reward(sfs);
  DiversityReward out;
  out.w = wc.w;
  if (wc.degenerate) {
    out.reward = reward_none(phi);
    out.degenerate = true;
    return out;
  }
  out.reward = phi.project(wc.w);
  if (bounding.enabled) out.reward = bound_transform(out.reward, wc.w, tau, bounding.variant);
  return out;
}

DiversityReward compute_diversity_reward(const DiversityMechanism& mechanism,
                                         const PolicySet& set,
                                         const FeatureTensor& phi,
                                         const SuccessorFeatures* current) {
  mechanism.validate();
  DiversityReward out;
  switch (mechanism.kind) {
    case MechanismKind::kNone:
      out.reward = reward_none(phi);
      break;
    case MechanismKind::kAverage:
      out.reward = reward_average(set, phi, mechanism.bounding, mechanism.tau);
      break;
    case MechanismKind::kMin:
      out.reward = reward_min(set, phi, mechanism.bounding, mechanism.tau);
      break;
    case MechanismKind::kDiscrimination:
      if (current == nullptr) {
        throw MechanismPrecondition("discrimination reward needs the current SFs");
      }
      out.reward = reward_discrimination(set, *current, mechanism.prior, phi,
                                         mechanism.subtract_log_prior);
      break;
    case MechanismKind::kRobustness:
      out = reward_robustness(set, phi, mechanism.bounding, mechanism.tau);
      break;
  }
  return out;
}

double diayn_term(std::size_t z, std::span<const Vector> distributions,
                  const Vector& prior) {
  require_distributions(distributions, prior);
  if (z >= distributions.size()) throw InvalidArgument("skill index out of range");
  Vector mixture = Vector::Zero(distributions.front().size());
  for (std::size_t k = 0; k < distributions.size(); ++k) {
    mixture += prior(static_cast<Eigen::Index>(k)) * distributions[k];
  }
  const Vector& dz = distributions[z];
  const double pz = prior(static_cast<Eigen::Index>(z));
  double total = 0.0;
  for (Eigen::Index s = 0; s < dz.size(); ++s) {
    total += dz(s) * std::log(dz(s) * pz / mixture(s));
  }
  return total;
}

double diayn_objective(std::span<const Vector> distributions, const Vector& prior) {
  require_distributions(distributions, prior);
  double total = 0.0;
  for (std::size_t z = 0; z < distributions.size(); ++z) {
    const double pz = prior(static_cast<Eigen::Index>(z));
    if (pz > 0.0) total += pz * diayn_term(z, distributions, prior);
  }
  return total;
}

Matrix bayes_posterior(std::span<const Vector> distributions, const Vector& prior) {
  require_distributions(distributions, prior);
  const Eigen::Index n_states = distributions.front().size();
  Matrix post(static_cast<Eigen::Index>(distributions.size()), n_states);
  for (std::size_t z = 0; z < distributions.size(); ++z) {
    post.row(static_cast<Eigen::Index>(z)) =
        prior(static_cast<Eigen::Index>(z)) * distributions[z].transpose();
  }
  for (Eigen::Index s = 0; s < n_states; ++s) post.col(s) /= post.col(s).sum();
  return post;
}

std::string_view to_string(MechanismKind k) {
  switch (k) {
    case MechanismKind::kNone: return "none";
    case MechanismKind::kAverage: return "average";
    case MechanismKind::kMin: return "min";
    case MechanismKind::kDiscrimination: return "discrimination";
    case MechanismKind::kRobustness: return "robustness";
  }
  return "?";
}

std::optional<MechanismKind> parse_mechanism_kind(std::string_view s) {
  for (MechanismKind k : {MechanismKind::kNone, MechanismKind::kAverage,
                          MechanismKind::kMin, MechanismKind::kDiscrimination,
                          MechanismKind::kRobustness}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(BoundVariant v) {
  return v == BoundVariant::kNormalized ? "normalized" : "as_written";
}

std::optional<BoundVariant> parse_bound_variant(std::string_view s) {
  if (s == "normalized") return BoundVariant::kNormalized;
  if (s == "as_written") return BoundVariant::kAsWritten;
  return std::nullopt;
}

}  // namespace divsf
