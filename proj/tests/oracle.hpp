#pragma once

// Brute-force reference computations over raw probability tables. Nothing
// here calls the library's inference code.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "coherence/system.hpp"

namespace oracle {

struct RawMixture {
  std::vector<double> weights;                         // [k]
  std::vector<std::vector<std::vector<double>>> rows;  // [k][context][behavior]
};

inline std::vector<double> dirichlet(std::mt19937_64& rng, std::size_t n, double alpha) {
  std::gamma_distribution<double> g(alpha, 1.0);
  std::vector<double> v(n);
  double total = 0.0;
  for (auto& x : v) total += (x = g(rng) + 1e-12);
  for (auto& x : v) x /= total;
  return v;
}

inline RawMixture random_raw(std::uint64_t seed, std::size_t contexts, std::size_t behaviors, std::size_t latents,
                             double alpha = 1.0) {
  std::mt19937_64 rng(seed);
  RawMixture m;
  m.weights = dirichlet(rng, latents, alpha);
  m.rows.resize(latents);
  for (auto& table : m.rows)
    for (std::size_t c = 0; c < contexts; ++c) table.push_back(dirichlet(rng, behaviors, alpha));
  return m;
}

inline coherence::ContextPartition names_for(const RawMixture& m) {
  std::vector<std::string> contexts;
  std::vector<std::vector<std::string>> behaviors;
  for (std::size_t c = 0; c < m.rows[0].size(); ++c) {
    contexts.push_back("c" + std::to_string(c));
    std::vector<std::string> row;
    for (std::size_t a = 0; a < m.rows[0][c].size(); ++a) row.push_back("c" + std::to_string(c) + "a" + std::to_string(a));
    behaviors.push_back(row);
  }
  return coherence::ContextPartition(contexts, behaviors);
}

inline coherence::MixtureBayesSystem build(const RawMixture& m) {
  std::vector<std::vector<double>> emissions;
  for (const auto& table : m.rows) {
    std::vector<double> flat;
    for (const auto& row : table) flat.insert(flat.end(), row.begin(), row.end());
    emissions.push_back(flat);
  }
  return coherence::MixtureBayesSystem(names_for(m), m.weights, emissions);
}

/// Raw tables read back from a constructed system, for scenarios generated
/// by the library.
inline RawMixture raw_from(const coherence::MixtureBayesSystem& s) {
  RawMixture m;
  const auto& p = s.partition();
  m.rows.resize(s.num_latents());
  for (std::size_t k = 0; k < s.num_latents(); ++k) {
    m.weights.push_back(s.latent_weight(k));
    for (std::size_t c = 0; c < p.num_contexts(); ++c) {
      auto row = s.emission_row(k, c);
      m.rows[k].emplace_back(row.begin(), row.end());
    }
  }
  return m;
}

/// P(observations) where observations may repeat contexts: Σ_k w_k Π e_k.
inline double likelihood(const RawMixture& m, const std::vector<std::pair<std::size_t, std::size_t>>& obs) {
  double total = 0.0;
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    double p = m.weights[k];
    for (auto [c, a] : obs) p *= m.rows[k][c][a];
    total += p;
  }
  return total;
}

/// σ(φ, c)(a) by Bayes over Θ.
inline double conditional(const RawMixture& m, std::vector<std::pair<std::size_t, std::size_t>> given,
                          std::size_t c, std::size_t a) {
  const double denom = likelihood(m, given);
  given.emplace_back(c, a);
  return likelihood(m, given) / denom;
}

/// All policies with context 0 most significant.
inline std::vector<std::vector<std::size_t>> all_policies(const std::vector<std::size_t>& shape) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> p(shape.size(), 0);
  while (true) {
    out.push_back(p);
    std::size_t i = shape.size();
    while (i > 0) {
      --i;
      if (++p[i] < shape[i]) break;
      p[i] = 0;
      if (i == 0) return out;
    }
    if (shape.empty()) return out;
  }
}

inline std::vector<std::pair<std::size_t, std::size_t>> as_obs(const std::vector<std::size_t>& policy) {
  std::vector<std::pair<std::size_t, std::size_t>> obs;
  for (std::size_t c = 0; c < policy.size(); ++c) obs.emplace_back(c, policy[c]);
  return obs;
}

/// Joint mass of every policy, enumeration order.
inline std::vector<double> joint(const RawMixture& m) {
  std::vector<std::size_t> shape;
  for (const auto& row : m.rows[0]) shape.push_back(row.size());
  std::vector<double> out;
  for (const auto& p : all_policies(shape)) out.push_back(likelihood(m, as_obs(p)));
  return out;
}

/// X^β from joint masses: p^β normalized.
inline std::vector<double> tempered_joint(const std::vector<double>& joint, double beta) {
  std::vector<double> out(joint.size());
  double total = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) total += (out[i] = joint[i] > 0 ? std::pow(joint[i], beta) : 0.0);
  for (auto& x : out) x /= total;
  return out;
}

inline double tv(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

/// Sauces joint table, burger-major.
inline std::vector<double> sauces_table(double eps) {
  const double b = 0.175 - eps;
  return {0.3, eps, eps, eps, b, b, eps, b, b};
}

}  // namespace oracle
