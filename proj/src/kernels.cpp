#include "zenlda/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace zenlda {

void HyperParams::validate() const {
  if (topics < 1) throw ConfigError("topic count must be >= 1");
  if (alpha <= 0.0) throw ConfigError("alpha must be > 0");
  if (beta <= 0.0) throw ConfigError("beta must be > 0");
  if (alpha_as <= 0.0) throw ConfigError("alpha-as must be > 0");
}

KernelKind parse_kernel(const std::string& name) {
  if (name == "standard") return KernelKind::kStandard;
  if (name == "zen") return KernelKind::kZen;
  if (name == "zen-hybrid") return KernelKind::kZenHybrid;
  if (name == "sparse") return KernelKind::kSparse;
  if (name == "light") return KernelKind::kLight;
  throw ConfigError("unknown kernel: " + name +
                    " (expected zen|zen-hybrid|sparse|light|standard)");
}

std::string kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::kStandard: return "standard";
    case KernelKind::kZen: return "zen";
    case KernelKind::kZenHybrid: return "zen-hybrid";
    case KernelKind::kSparse: return "sparse";
    case KernelKind::kLight: return "light";
  }
  return "?";
}

IterationTerms precompute_terms(std::span<const std::int64_t> topic_totals, std::int32_t vocab,
                                const HyperParams& hyper) {
  hyper.validate();
  IterationTerms terms;
  terms.topics = hyper.topics;
  terms.vocab = vocab;
  terms.beta = hyper.beta;
  const std::size_t k_count = topic_totals.size();
  std::int64_t total = 0;
  for (std::int64_t nk : topic_totals) total += nk;
  terms.total_tokens = total;

  const double w_beta = static_cast<double>(vocab) * hyper.beta;
  const double k_alpha = static_cast<double>(hyper.topics) * hyper.alpha;
  terms.alpha_scale = k_alpha / (static_cast<double>(total) + hyper.alpha_as);
  terms.alpha_shift = hyper.alpha_as / static_cast<double>(hyper.topics) - w_beta;

  terms.inv_mass.resize(k_count);
  terms.alpha_rate.resize(k_count);
  terms.beta_rate.resize(k_count);
  terms.smooth.resize(k_count);
  terms.alpha_k.resize(k_count);
  double smooth_mass = 0.0;
  const double scaled_shift = terms.alpha_scale * terms.alpha_shift;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double inv = 1.0 / (static_cast<double>(topic_totals[k]) + w_beta);
    terms.inv_mass[k] = inv;
    terms.alpha_rate[k] = terms.alpha_scale + scaled_shift * inv;
    terms.beta_rate[k] = hyper.beta * inv;
    terms.smooth[k] = hyper.beta * terms.alpha_rate[k];
    terms.alpha_k[k] =
        terms.alpha_scale * (static_cast<double>(topic_totals[k]) +
                             hyper.alpha_as / static_cast<double>(hyper.topics));
    smooth_mass += terms.smooth[k];
  }
  terms.smooth_mass = smooth_mass;
  return terms;
}

namespace {

Count lookup(std::span<const std::int32_t> support, std::span<const Count> counts, TopicId k) {
  auto it = std::lower_bound(support.begin(), support.end(), k);
  if (it == support.end() || *it != k) return 0;
  return counts[static_cast<std::size_t>(it - support.begin())];
}

}  // namespace

Count TokenContext::word_at(TopicId k) const { return lookup(word_support, word_counts, k); }
Count TokenContext::doc_at(TopicId k) const { return lookup(doc_support, doc_counts, k); }

double standard_cgs_probability(TopicId k, const TokenContext& ctx, const IterationTerms& terms) {
  const std::size_t ki = static_cast<std::size_t>(k);
  const double word_part =
      (static_cast<double>(ctx.word_at(k)) + terms.beta) * terms.inv_mass[ki];
  return word_part * (static_cast<double>(ctx.doc_at(k)) + terms.alpha_k[ki]);
}

double remedy_probability(SampleBucket bucket, Count word_count_prev, Count doc_count_prev) {
  switch (bucket) {
    case SampleBucket::kSmooth:
      return 0.0;
    case SampleBucket::kWord:
      return word_count_prev >= 1 ? 1.0 / static_cast<double>(word_count_prev) : 0.0;
    case SampleBucket::kDoc: {
      if (doc_count_prev < 1) return 0.0;
      const double nd = static_cast<double>(doc_count_prev);
      double p = 1.0 / nd;
      if (word_count_prev >= 1) {
        const double nw = static_cast<double>(word_count_prev);
        p += (nd + nw - 1.0) / (nd * nw);
      }
      return std::min(1.0, p);
    }
  }
  return 0.0;
}

ZenWordTables zen_build_word_table(std::span<const std::int32_t> support,
                                   std::span<const Count> counts, const IterationTerms& terms) {
  ZenWordTables out;
  AliasTable::Workspace ws;
  std::vector<double> scratch;
  zen_build_word_table_into(out, ws, scratch, support, counts, terms);
  return out;
}

void zen_build_word_table_into(ZenWordTables& out, AliasTable::Workspace& ws,
                               std::vector<double>& weight_scratch,
                               std::span<const std::int32_t> support,
                               std::span<const Count> counts, const IterationTerms& terms) {
  out.mass = 0.0;
  if (support.empty()) return;
  weight_scratch.resize(support.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    weight_scratch[i] = static_cast<double>(counts[i]) *
                        terms.alpha_rate[static_cast<std::size_t>(support[i])];
    mass += weight_scratch[i];
  }
  out.mass = mass;
  if (mass > 0.0) out.table.assign(support, weight_scratch, ws);
}

ZenPairCdf zen_build_doc_cdf(std::span<const std::int32_t> doc_support,
                             std::span<const Count> doc_dense,
                             std::span<const Count> word_dense, const IterationTerms& terms,
                             TopicId exclude_prev, const std::vector<std::int32_t>* boost_support,
                             double beta_boost) {
  ZenPairCdf out;
  zen_build_doc_cdf_into(out, doc_support, doc_dense, word_dense, terms, exclude_prev,
                         boost_support, beta_boost);
  return out;
}

void zen_build_doc_cdf_into(ZenPairCdf& out, std::span<const std::int32_t> doc_support,
                            std::span<const Count> doc_dense,
                            std::span<const Count> word_dense, const IterationTerms& terms,
                            TopicId exclude_prev, const std::vector<std::int32_t>* boost_support,
                            double beta_boost) {
  out.excluded = exclude_prev >= 0;
  out.cdf.clear_keep_capacity();
  out.mass = 0.0;
  if (doc_support.empty()) return;
  if (boost_support == nullptr) {
    for (const TopicId k : doc_support) {
      const std::size_t ki = static_cast<std::size_t>(k);
      double w;
      if (k != exclude_prev) {
        w = static_cast<double>(doc_dense[ki]) *
            (static_cast<double>(word_dense[ki]) + terms.beta) * terms.inv_mass[ki];
      } else {
        w = std::max(0.0, (static_cast<double>(doc_dense[ki]) - 1.0) *
                              (static_cast<double>(word_dense[ki]) - 1.0 + terms.beta) *
                              terms.inv_mass[ki]);
      }
      out.cdf.push(k, w);
    }
  } else {
    for (const TopicId k : doc_support) {
      const std::size_t ki = static_cast<std::size_t>(k);
      double doc_count = static_cast<double>(doc_dense[ki]);
      double word_count = static_cast<double>(word_dense[ki]);
      if (k == exclude_prev) {
        doc_count -= 1.0;
        word_count -= 1.0;
      }
      double beta = terms.beta;
      if (!std::binary_search(boost_support->begin(), boost_support->end(), k)) {
        beta *= 1.0 + beta_boost;
      }
      out.cdf.push(k, std::max(0.0, doc_count * (word_count + beta) * terms.inv_mass[ki]));
    }
  }
  out.mass = out.cdf.total();
}

namespace {

struct MixtureDraw {
  TopicId topic;
  SampleBucket bucket;
};

// One uniform covers the whole draw: the bucket comes from its position in
// the stacked masses and the residual within the chosen bucket, rescaled, is
// again uniform, so it doubles as the in-bucket draw.
MixtureDraw zen_mixture_draw(const AliasTable& smooth_table, double smooth_mass,
                             const ZenWordTables& word, const ZenPairCdf& pair, Rng& rng) {
  const double total = smooth_mass + word.mass + pair.mass;
  const double u = rng.uniform(total);
  if (u < smooth_mass || (word.mass <= 0.0 && pair.mass <= 0.0)) {
    return {smooth_table.sample_unit(u / smooth_mass), SampleBucket::kSmooth};
  }
  if (u < smooth_mass + word.mass || pair.mass <= 0.0) {
    return {word.table.sample_unit((u - smooth_mass) / word.mass), SampleBucket::kWord};
  }
  return {pair.cdf.sample(u - smooth_mass - word.mass), SampleBucket::kDoc};
}

}  // namespace

TopicId zen_sample_token(const AliasTable& smooth_table, double smooth_mass,
                         const ZenWordTables& word, const ZenPairCdf& pair,
                         const ZenTokenInfo& info, bool remedy_enabled, Rng& rng) {
  MixtureDraw draw = zen_mixture_draw(smooth_table, smooth_mass, word, pair, rng);
  if (!remedy_enabled || draw.topic != info.prev) return draw.topic;
  double redo = 0.0;
  if (draw.bucket == SampleBucket::kWord) {
    redo = remedy_probability(SampleBucket::kWord, info.word_count_prev, info.doc_count_prev);
  } else if (draw.bucket == SampleBucket::kDoc && !pair.excluded) {
    redo = remedy_probability(SampleBucket::kDoc, info.word_count_prev, info.doc_count_prev);
  }
  if (redo > 0.0 && rng.uniform() < redo) {
    draw = zen_mixture_draw(smooth_table, smooth_mass, word, pair, rng);
  }
  return draw.topic;
}

HybridMode hybrid_select(std::int32_t doc_support_size, std::int32_t word_support_size) {
  return doc_support_size <= word_support_size ? HybridMode::kDocSide : HybridMode::kWordSide;
}

HybridDocTree hybrid_build_doc_tree(std::span<const std::int32_t> doc_support,
                                    std::span<const Count> doc_counts,
                                    const IterationTerms& terms) {
  HybridDocTree out;
  out.support.assign(doc_support.begin(), doc_support.end());
  std::vector<double> weights(doc_support.size());
  for (std::size_t i = 0; i < doc_support.size(); ++i) {
    weights[i] = static_cast<double>(doc_counts[i]) *
                 terms.beta_rate[static_cast<std::size_t>(doc_support[i])];
  }
  out.tree = FPlusTree(weights);
  return out;
}

HybridWordCdf hybrid_build_word_cdf(std::span<const std::int32_t> word_support,
                                    std::span<const Count> word_counts,
                                    std::span<const Count> doc_dense,
                                    const IterationTerms& terms, TopicId exclude_prev) {
  HybridWordCdf out;
  out.excluded = exclude_prev >= 0;
  if (word_support.empty()) return out;
  std::vector<double> weights(word_support.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < word_support.size(); ++i) {
    const TopicId k = word_support[i];
    const std::size_t ki = static_cast<std::size_t>(k);
    double word_count = static_cast<double>(word_counts[i]);
    double doc_count = static_cast<double>(doc_dense[ki]);
    if (k == exclude_prev) {
      word_count -= 1.0;
      doc_count -= 1.0;
    }
    const double w = word_count * (doc_count + terms.alpha_k[ki]) * terms.inv_mass[ki];
    weights[i] = std::max(w, 0.0);
    mass += weights[i];
  }
  out.mass = mass;
  if (mass > 0.0) out.cdf = CumulativeTable::build(word_support, weights);
  return out;
}

namespace {

MixtureDraw hybrid_mixture_draw(const AliasTable& smooth_table, double smooth_mass,
                                const HybridDocTree& doc_tree, TopicId excl_leaf,
                                double excl_delta, const HybridWordCdf& pair, Rng& rng) {
  const double doc_mass = doc_tree.tree.total() - excl_delta;
  const double total = smooth_mass + doc_mass + pair.mass;
  const double u = rng.uniform(total);
  if (u < smooth_mass || (doc_mass <= 0.0 && pair.mass <= 0.0)) {
    return {smooth_table.sample(rng), SampleBucket::kSmooth};
  }
  if (u < smooth_mass + doc_mass || pair.mass <= 0.0) {
    const TopicId leaf = excl_delta > 0.0
                             ? doc_tree.tree.sample_excluding(excl_leaf, excl_delta,
                                                              rng.uniform(doc_mass))
                             : doc_tree.tree.sample(rng.uniform(doc_mass));
    return {doc_tree.support[static_cast<std::size_t>(leaf)], SampleBucket::kDoc};
  }
  return {pair.cdf.sample(rng.uniform(pair.mass)), SampleBucket::kWord};
}

}  // namespace

TopicId hybrid_word_side_sample(const AliasTable& smooth_table, double smooth_mass,
                                const HybridDocTree& doc_tree, const HybridWordCdf& pair,
                                const IterationTerms& terms, const ZenTokenInfo& info,
                                bool remedy_enabled, Rng& rng) {
  // Single-occurrence pairs view the doc-beta tree with the previous topic's
  // unit of weight removed; the adjusted descent avoids mutating the shared
  // per-doc tree.
  TopicId excl_leaf = -1;
  double excl_delta = 0.0;
  if (pair.excluded && info.prev >= 0 && info.doc_count_prev >= 1) {
    auto it = std::lower_bound(doc_tree.support.begin(), doc_tree.support.end(), info.prev);
    if (it != doc_tree.support.end() && *it == info.prev) {
      excl_leaf = static_cast<TopicId>(it - doc_tree.support.begin());
      excl_delta = terms.beta_rate[static_cast<std::size_t>(info.prev)];
    }
  }

  MixtureDraw draw =
      hybrid_mixture_draw(smooth_table, smooth_mass, doc_tree, excl_leaf, excl_delta, pair, rng);
  if (remedy_enabled && !pair.excluded && draw.topic == info.prev) {
    double redo = 0.0;
    if (draw.bucket == SampleBucket::kDoc && info.doc_count_prev >= 1) {
      redo = 1.0 / static_cast<double>(info.doc_count_prev);
    } else if (draw.bucket == SampleBucket::kWord && info.doc_count_prev >= 1 &&
               info.word_count_prev >= 1) {
      const double nd = static_cast<double>(info.doc_count_prev);
      const double nw = static_cast<double>(info.word_count_prev);
      redo = std::min(1.0, (nd + nw - 1.0) / (nd * nw));
    }
    if (redo > 0.0 && rng.uniform() < redo) {
      draw = hybrid_mixture_draw(smooth_table, smooth_mass, doc_tree, excl_leaf, excl_delta,
                                 pair, rng);
    }
  }
  return draw.topic;
}

TopicId standard_fresh_sample(const FreshView& fresh, const HyperParams& hyper,
                              std::span<double> scratch, Rng& rng) {
  const std::int32_t k_count = hyper.topics;
  const double w_beta = static_cast<double>(fresh.vocab) * hyper.beta;
  const double alpha_scale = static_cast<double>(hyper.topics) * hyper.alpha /
                             (static_cast<double>(fresh.prior_total) + hyper.alpha_as);
  const double alpha_over_k = hyper.alpha_as / static_cast<double>(hyper.topics);
  double total = 0.0;
  for (std::int32_t k = 0; k < k_count; ++k) {
    const std::size_t ki = static_cast<std::size_t>(k);
    const double nk = static_cast<double>(fresh.topic_totals[ki]);
    const double alpha_k = alpha_scale * (nk + alpha_over_k);
    const double p = (static_cast<double>(fresh.word_dense[ki]) + hyper.beta) / (nk + w_beta) *
                     (static_cast<double>(fresh.doc_dense[ki]) + alpha_k);
    scratch[ki] = p;
    total += p;
  }
  return linear_sample(scratch.subspan(0, static_cast<std::size_t>(k_count)),
                       rng.uniform(total));
}

void SmoothingCache::init(std::span<const std::int64_t> topic_totals, std::int64_t prior_total,
                          const HyperParams& hyper, std::int32_t vocab) {
  alpha_scale_ = static_cast<double>(hyper.topics) * hyper.alpha /
                 (static_cast<double>(prior_total) + hyper.alpha_as);
  alpha_over_k_ = hyper.alpha_as / static_cast<double>(hyper.topics);
  w_beta_ = static_cast<double>(vocab) * hyper.beta;
  beta_ = hyper.beta;
  weights_.resize(topic_totals.size());
  alpha_.resize(topic_totals.size());
  inv_.resize(topic_totals.size());
  mass_ = 0.0;
  for (std::size_t k = 0; k < topic_totals.size(); ++k) {
    inv_[k] = 1.0 / (static_cast<double>(topic_totals[k]) + w_beta_);
    alpha_[k] = alpha_scale_ * (static_cast<double>(topic_totals[k]) + alpha_over_k_);
    weights_[k] = alpha_[k] * beta_ * inv_[k];
    mass_ += weights_[k];
  }
}

void SmoothingCache::on_change(TopicId k, std::int64_t nk) {
  const std::size_t ki = static_cast<std::size_t>(k);
  mass_ -= weights_[ki];
  inv_[ki] = 1.0 / (static_cast<double>(nk) + w_beta_);
  alpha_[ki] = alpha_scale_ * (static_cast<double>(nk) + alpha_over_k_);
  weights_[ki] = alpha_[ki] * beta_ * inv_[ki];
  mass_ += weights_[ki];
}

TopicId sparse_lda_sample_token(const FreshView& fresh, const SmoothingCache& smooth,
                                const HyperParams& hyper, Rng& rng, double* bucket_sums_out) {
  // doc bucket: N_k|d * beta / (N_k + W*beta)
  double doc_mass = 0.0;
  for (std::size_t i = 0; i < fresh.doc_support.size(); ++i) {
    const TopicId k = fresh.doc_support[i];
    doc_mass += static_cast<double>(fresh.doc_dense[static_cast<std::size_t>(k)]) *
                hyper.beta * smooth.inv_mass(k);
  }
  // word bucket: N_w|k * (N_k|d + alpha_k) / (N_k + W*beta)
  double word_mass = 0.0;
  for (std::size_t i = 0; i < fresh.word_support.size(); ++i) {
    const TopicId k = fresh.word_support[i];
    const std::size_t ki = static_cast<std::size_t>(k);
    word_mass += static_cast<double>(fresh.word_dense[ki]) *
                 (static_cast<double>(fresh.doc_dense[ki]) + smooth.alpha_k(k)) *
                 smooth.inv_mass(k);
  }
  if (bucket_sums_out != nullptr) {
    bucket_sums_out[0] = smooth.mass();
    bucket_sums_out[1] = doc_mass;
    bucket_sums_out[2] = word_mass;
  }

  double u = rng.uniform(smooth.mass() + doc_mass + word_mass);
  if (u < smooth.mass()) {
    double running = 0.0;
    TopicId last = 0;
    for (TopicId k = 0; k < hyper.topics; ++k) {
      const double w = smooth.weight(k);
      running += w;
      if (running > u) return k;
      if (w > 0.0) last = k;
    }
    return last;
  }
  u -= smooth.mass();
  if (u < doc_mass) {
    double running = 0.0;
    TopicId last = fresh.doc_support.empty() ? 0 : fresh.doc_support[0];
    for (std::size_t i = 0; i < fresh.doc_support.size(); ++i) {
      const TopicId k = fresh.doc_support[i];
      const double w = static_cast<double>(fresh.doc_dense[static_cast<std::size_t>(k)]) *
                       hyper.beta * smooth.inv_mass(k);
      running += w;
      if (running > u) return k;
      if (w > 0.0) last = k;
    }
    return last;
  }
  u -= doc_mass;
  double running = 0.0;
  TopicId last = fresh.word_support.empty() ? 0 : fresh.word_support[0];
  for (std::size_t i = 0; i < fresh.word_support.size(); ++i) {
    const TopicId k = fresh.word_support[i];
    const std::size_t ki = static_cast<std::size_t>(k);
    const double w = static_cast<double>(fresh.word_dense[ki]) *
                     (static_cast<double>(fresh.doc_dense[ki]) + smooth.alpha_k(k)) *
                     smooth.inv_mass(k);
    running += w;
    if (running > u) return k;
    if (w > 0.0) last = k;
  }
  return last;
}

LightWordProposal light_build_word_proposal(std::span<const Count> word_dense,
                                            const IterationTerms& terms) {
  LightWordProposal out;
  out.weights.resize(word_dense.size());
  double mass = 0.0;
  for (std::size_t k = 0; k < word_dense.size(); ++k) {
    out.weights[k] = (static_cast<double>(word_dense[k]) + terms.beta) * terms.inv_mass[k];
    mass += out.weights[k];
  }
  out.mass = mass;
  out.table = AliasTable::build(out.weights);
  return out;
}

namespace {

// Fresh Formula-3 conditional with the token already excluded from counts.
double light_true_probability(const FreshView& fresh, const HyperParams& hyper, TopicId k) {
  const std::size_t ki = static_cast<std::size_t>(k);
  const double w_beta = static_cast<double>(fresh.vocab) * hyper.beta;
  const double alpha_scale = static_cast<double>(hyper.topics) * hyper.alpha /
                             (static_cast<double>(fresh.prior_total) + hyper.alpha_as);
  const double nk = static_cast<double>(fresh.topic_totals[ki]);
  const double alpha_k =
      alpha_scale * (nk + hyper.alpha_as / static_cast<double>(hyper.topics));
  return (static_cast<double>(fresh.word_dense[ki]) + hyper.beta) / (nk + w_beta) *
         (static_cast<double>(fresh.doc_dense[ki]) + alpha_k);
}

}  // namespace

TopicId light_doc_proposal_draw(const LightDocView& doc, std::int32_t topics, double alpha,
                                Rng& rng) {
  const double doc_len = static_cast<double>(doc.token_offsets.size());
  const double u = rng.uniform(doc_len + static_cast<double>(topics) * alpha);
  if (u < doc_len) {
    return doc.topics[doc.token_offsets[static_cast<std::size_t>(u)]];
  }
  return static_cast<TopicId>(rng.below_i32(topics));
}

TopicId light_lda_sample_token(const LightWordProposal& word_prop, const LightDocView& doc,
                               const FreshView& fresh, const HyperParams& hyper, TopicId prev,
                               std::int32_t mh_steps, Rng& rng) {
  TopicId state = prev;
  double pi_state = light_true_probability(fresh, hyper, state);

  // The lookup table still holds this token at `prev`, so the doc-proposal
  // density includes that self entry.
  auto doc_proposal_weight = [&](TopicId k) {
    double c = static_cast<double>(fresh.doc_dense[static_cast<std::size_t>(k)]);
    if (k == prev) c += 1.0;
    return c + hyper.alpha;
  };

  for (std::int32_t step = 0; step < mh_steps; ++step) {
    TopicId candidate;
    double q_state, q_candidate;
    if (step % 2 == 0) {
      candidate = light_doc_proposal_draw(doc, hyper.topics, hyper.alpha, rng);
      q_state = doc_proposal_weight(state);
      q_candidate = doc_proposal_weight(candidate);
    } else {
      candidate = word_prop.table.sample(rng);
      q_state = word_prop.weights[static_cast<std::size_t>(state)];
      q_candidate = word_prop.weights[static_cast<std::size_t>(candidate)];
    }
    if (candidate == state) continue;  // acceptance ratio is exactly 1
    const double pi_candidate = light_true_probability(fresh, hyper, candidate);
    const double ratio = (pi_candidate * q_state) / (pi_state * q_candidate);
    if (ratio >= 1.0 || rng.uniform() < ratio) {
      state = candidate;
      pi_state = pi_candidate;
    }
  }
  return state;
}

}  // namespace zenlda
