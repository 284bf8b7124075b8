#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "zenlda/corpus.hpp"
#include "zenlda/kernels.hpp"
#include "zenlda/model.hpp"

namespace zenlda {

struct MetricRecord {
  std::int32_t iteration = 0;
  double llh_total = 0.0;
  double llh_word = 0.0;
  double llh_doc = 0.0;
  double perplexity = 0.0;
};

using MetricHistory = std::vector<MetricRecord>;

// Training-set log likelihood, summed over every token occurrence:
//   sum_(d,w) log sum_k (N_k|d + a_k)/(N_d + K*a_k) * (N_w|k + beta)/(N_k + W*beta)
// with a_k = (N_k + alpha')/(N + K*alpha'). Compensated summation keeps the
// result stable under partition-order reshuffling.
double log_likelihood_total(const ModelState& state, const TokenGraph& graph,
                            const HyperParams& hyper);

// Collapsed word/doc split: llh_word = log p(w|z) with the symmetric beta
// prior, llh_doc = log p(z) with the asymmetric alpha_k frozen at evaluation
// time, both via multivariate-Beta log ratios.
struct SplitLikelihood {
  double word = 0.0;
  double doc = 0.0;
};

SplitLikelihood log_likelihood_split(const ModelState& state, const HyperParams& hyper);

double perplexity(double llh_total, std::int64_t tokens);

// True when training should stop: iteration budget exhausted or the latest
// perplexity is at or below the target.
bool check_termination(const MetricHistory& history, std::int32_t max_iterations,
                       std::optional<double> target_perplexity);

}  // namespace zenlda
