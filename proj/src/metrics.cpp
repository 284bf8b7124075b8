#include "zenlda/metrics.hpp"

#include <cmath>

namespace zenlda {

namespace {

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

double log_likelihood_total(const ModelState& state, const TokenGraph& graph,
                            const HyperParams& hyper) {
  const std::int32_t k_count = state.topics;
  const std::int64_t total = state.total_tokens();
  const double w_beta = static_cast<double>(state.vocab()) * hyper.beta;
  // a_k = (N_k + alpha') / (N + K*alpha')
  std::vector<double> prior(static_cast<std::size_t>(k_count));
  const double denom = static_cast<double>(total) +
                       static_cast<double>(k_count) * hyper.alpha_as;
  for (std::int32_t k = 0; k < k_count; ++k) {
    prior[static_cast<std::size_t>(k)] =
        (static_cast<double>(state.topic_totals[static_cast<std::size_t>(k)]) + hyper.alpha_as) /
        denom;
  }

  // word factor (N_w|k + beta)/(N_k + W*beta), doc factor (N_k|d + a_k)/(N_d + K*a_k)
  std::vector<double> word_base(static_cast<std::size_t>(k_count));
  for (std::int32_t k = 0; k < k_count; ++k) {
    word_base[static_cast<std::size_t>(k)] =
        1.0 / (static_cast<double>(state.topic_totals[static_cast<std::size_t>(k)]) + w_beta);
  }

  std::vector<double> doc_factor(static_cast<std::size_t>(k_count));
  std::vector<double> word_factor(static_cast<std::size_t>(k_count));
  KahanSum llh;
  DocId current_doc = -1;
  // Edges are word-major, so doc factors recur; recompute on change of doc.
  // The word factor is rebuilt per edge group head below.
  WordId current_word = -1;
  for (const Edge& edge : graph.edges) {
    if (edge.word != current_word) {
      current_word = edge.word;
      const SparseCounts& wc = state.word_counts[static_cast<std::size_t>(edge.word)];
      for (std::int32_t k = 0; k < k_count; ++k) {
        word_factor[static_cast<std::size_t>(k)] = hyper.beta * word_base[static_cast<std::size_t>(k)];
      }
      for (std::int32_t i = 0; i < wc.nnz(); ++i) {
        const std::size_t k = static_cast<std::size_t>(wc.indices[static_cast<std::size_t>(i)]);
        word_factor[k] =
            (static_cast<double>(wc.values[static_cast<std::size_t>(i)]) + hyper.beta) *
            word_base[k];
      }
    }
    if (edge.doc != current_doc) {
      current_doc = edge.doc;
      const SparseCounts& dc = state.doc_counts[static_cast<std::size_t>(edge.doc)];
      const double n_d = static_cast<double>(graph.doc_degree[static_cast<std::size_t>(edge.doc)]);
      for (std::int32_t k = 0; k < k_count; ++k) {
        const std::size_t ki = static_cast<std::size_t>(k);
        doc_factor[ki] = prior[ki] / (n_d + static_cast<double>(k_count) * prior[ki]);
      }
      for (std::int32_t i = 0; i < dc.nnz(); ++i) {
        const std::size_t k = static_cast<std::size_t>(dc.indices[static_cast<std::size_t>(i)]);
        doc_factor[k] = (static_cast<double>(dc.values[static_cast<std::size_t>(i)]) + prior[k]) /
                        (n_d + static_cast<double>(k_count) * prior[k]);
      }
    }
    double inner = 0.0;
    for (std::int32_t k = 0; k < k_count; ++k) {
      inner += doc_factor[static_cast<std::size_t>(k)] * word_factor[static_cast<std::size_t>(k)];
    }
    llh.add(static_cast<double>(edge.count) * std::log(inner));
  }
  return llh.sum;
}

SplitLikelihood log_likelihood_split(const ModelState& state, const HyperParams& hyper) {
  SplitLikelihood out;
  const std::int32_t k_count = state.topics;
  const std::int64_t total = state.total_tokens();
  if (total == 0) return out;

  const std::int32_t vocab = state.vocab();
  const double w_beta = static_cast<double>(vocab) * hyper.beta;
  const double lg_beta = std::lgamma(hyper.beta);

  // log p(w|z) = sum_k [ sum_w lgamma(N_w|k + beta) - lgamma(N_k + W*beta) ]
  //              - K [ W lgamma(beta) - lgamma(W beta) ]
  std::vector<std::int64_t> word_nnz_per_topic(static_cast<std::size_t>(k_count), 0);
  KahanSum word_term;
  for (const SparseCounts& wc : state.word_counts) {
    for (std::int32_t i = 0; i < wc.nnz(); ++i) {
      const std::size_t k = static_cast<std::size_t>(wc.indices[static_cast<std::size_t>(i)]);
      word_term.add(std::lgamma(static_cast<double>(wc.values[static_cast<std::size_t>(i)]) +
                                hyper.beta));
      ++word_nnz_per_topic[k];
    }
  }
  for (std::int32_t k = 0; k < k_count; ++k) {
    const std::size_t ki = static_cast<std::size_t>(k);
    word_term.add(static_cast<double>(vocab - word_nnz_per_topic[ki]) * lg_beta);
    word_term.add(-std::lgamma(static_cast<double>(state.topic_totals[ki]) + w_beta));
  }
  word_term.add(-static_cast<double>(k_count) *
                (static_cast<double>(vocab) * lg_beta - std::lgamma(w_beta)));
  out.word = word_term.sum;

  // log p(z) with alpha_k frozen at evaluation time
  const double alpha_scale = static_cast<double>(k_count) * hyper.alpha /
                             (static_cast<double>(total) + hyper.alpha_as);
  const double alpha_over_k = hyper.alpha_as / static_cast<double>(k_count);
  std::vector<double> alpha_k(static_cast<std::size_t>(k_count));
  double alpha_sum = 0.0;
  for (std::int32_t k = 0; k < k_count; ++k) {
    const std::size_t ki = static_cast<std::size_t>(k);
    alpha_k[ki] =
        alpha_scale * (static_cast<double>(state.topic_totals[ki]) + alpha_over_k);
    alpha_sum += alpha_k[ki];
  }

  // Zero-count topics cancel between the two Beta terms, so each document
  // contributes only over its support.
  KahanSum doc_term;
  for (const SparseCounts& dc : state.doc_counts) {
    double n_d = 0.0;
    for (std::int32_t i = 0; i < dc.nnz(); ++i) {
      const std::size_t k = static_cast<std::size_t>(dc.indices[static_cast<std::size_t>(i)]);
      const double v = static_cast<double>(dc.values[static_cast<std::size_t>(i)]);
      doc_term.add(std::lgamma(v + alpha_k[k]) - std::lgamma(alpha_k[k]));
      n_d += v;
    }
    doc_term.add(std::lgamma(alpha_sum) - std::lgamma(n_d + alpha_sum));
  }
  out.doc = doc_term.sum;
  return out;
}

double perplexity(double llh_total, std::int64_t tokens) {
  return std::exp(-llh_total / static_cast<double>(tokens));
}

bool check_termination(const MetricHistory& history, std::int32_t max_iterations,
                       std::optional<double> target_perplexity) {
  const std::int32_t done = history.empty() ? 0 : history.back().iteration;
  if (done >= max_iterations) return true;
  if (target_perplexity && !history.empty() &&
      history.back().perplexity <= *target_perplexity) {
    return true;
  }
  return false;
}

}  // namespace zenlda
