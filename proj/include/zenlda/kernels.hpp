#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zenlda/rng.hpp"
#include "zenlda/samplers.hpp"
#include "zenlda/types.hpp"

namespace zenlda {

struct HyperParams {
  std::int32_t topics = 0;  // K
  double alpha = 0.01;      // symmetric base of the document-topic prior
  double beta = 0.01;       // word prior
  double alpha_as = 1.0;    // concentration of the asymmetric prior approximation

  void validate() const;
};

enum class KernelKind { kStandard, kZen, kZenHybrid, kSparse, kLight };

KernelKind parse_kernel(const std::string& name);
std::string kernel_name(KernelKind kind);

// Per-iteration terms over the frozen topic totals. The asymmetric prior is
// alpha_k = K*alpha*(N_k + alpha'/K)/(N + alpha'), and the factored arrays
// satisfy alpha_rate = alpha_scale + (alpha_scale*alpha_shift)*inv_mass and
// smooth = beta*alpha_rate, which avoids recomputing the shared divisions
// per token.
struct IterationTerms {
  std::int32_t topics = 0;
  std::int32_t vocab = 0;
  double beta = 0.0;
  std::int64_t total_tokens = 0;     // N
  double alpha_scale = 0.0;          // K*alpha / (N + alpha')
  double alpha_shift = 0.0;          // alpha'/K - W*beta
  std::vector<double> inv_mass;      // 1 / (N_k + W*beta)
  std::vector<double> alpha_rate;    // alpha_k / (N_k + W*beta)
  std::vector<double> beta_rate;     // beta / (N_k + W*beta)
  std::vector<double> smooth;        // alpha_k*beta / (N_k + W*beta)
  std::vector<double> alpha_k;
  double smooth_mass = 0.0;
};

IterationTerms precompute_terms(std::span<const std::int64_t> topic_totals, std::int32_t vocab,
                                const HyperParams& hyper);

// Sparse view of the counts a single token's draw depends on. Counts are
// expected to already have the previous-topic exclusion applied when the
// calling kernel works with fresh state.
struct TokenContext {
  std::span<const std::int32_t> word_support;
  std::span<const Count> word_counts;
  std::span<const std::int32_t> doc_support;
  std::span<const Count> doc_counts;
  TopicId prev_topic = -1;
  Count occurrences = 1;

  Count word_at(TopicId k) const;
  Count doc_at(TopicId k) const;
};

// Unnormalized conditional p_k = (N_w|k + beta)/(N_k + W*beta) * (N_k|d + alpha_k)
// with the prior taken from the supplied iteration terms.
double standard_cgs_probability(TopicId k, const TokenContext& ctx, const IterationTerms& terms);

// ---------------------------------------------------------------------------
// Decomposed sampling: smoothing bucket + word bucket + doc bucket.

enum class SampleBucket { kSmooth, kWord, kDoc };

// Redraw probability when the drawn topic equals the previous one and the
// bucket was built without the previous-topic exclusion. Values above 1 are
// clamped.
double remedy_probability(SampleBucket bucket, Count word_count_prev, Count doc_count_prev);

// Word bucket: alias table over the word's support of N_w|k * alpha_rate[k].
// Built once per word per iteration and reused for all of its tokens.
struct ZenWordTables {
  AliasTable table;
  double mass = 0.0;
};

ZenWordTables zen_build_word_table(std::span<const std::int32_t> support,
                                   std::span<const Count> counts, const IterationTerms& terms);

// In-place rebuild for the per-word hot path; scratch buffers are reused
// across words.
void zen_build_word_table_into(ZenWordTables& out, AliasTable::Workspace& ws,
                               std::vector<double>& weight_scratch,
                               std::span<const std::int32_t> support,
                               std::span<const Count> counts, const IterationTerms& terms);

// Doc bucket: prefix-sum table over the document support of
// N_k|d * (N_w|k + beta) / (N_k + W*beta), computed once per (word, doc)
// pair. When the pair has exactly one occurrence the previous-topic
// exclusion is applied directly (exclude_prev >= 0); pairs with multiple
// occurrences rely on the resampling remedy instead.
//
// boost_support, when non-null, holds the word's sparse-initialization topic
// set; topics outside it use beta*(1+beta_boost) in place of beta.
struct ZenPairCdf {
  CumulativeTable cdf;
  double mass = 0.0;
  bool excluded = false;
};

// doc_dense is the document's count array indexed by topic; doc_support its
// sorted non-zero topics.
ZenPairCdf zen_build_doc_cdf(std::span<const std::int32_t> doc_support,
                             std::span<const Count> doc_dense,
                             std::span<const Count> word_dense, const IterationTerms& terms,
                             TopicId exclude_prev,
                             const std::vector<std::int32_t>* boost_support = nullptr,
                             double beta_boost = 0.0);

// In-place single-pass variant for the sweep's per-pair hot path.
void zen_build_doc_cdf_into(ZenPairCdf& out, std::span<const std::int32_t> doc_support,
                            std::span<const Count> doc_dense,
                            std::span<const Count> word_dense, const IterationTerms& terms,
                            TopicId exclude_prev,
                            const std::vector<std::int32_t>* boost_support = nullptr,
                            double beta_boost = 0.0);

struct ZenTokenInfo {
  TopicId prev = -1;
  Count word_count_prev = 0;  // stale N_w|k at prev
  Count doc_count_prev = 0;   // stale N_k|d at prev
};

// Mixture draw over (smoothing, word, doc) bucket masses followed by the
// in-bucket draw; applies at most one remedy redraw.
TopicId zen_sample_token(const AliasTable& smooth_table, double smooth_mass,
                         const ZenWordTables& word, const ZenPairCdf& pair,
                         const ZenTokenInfo& info, bool remedy_enabled, Rng& rng);

// ---------------------------------------------------------------------------
// Hybrid: pick the decomposition whose fresh term runs over the smaller
// support. Doc side is the default on ties.

enum class HybridMode { kDocSide, kWordSide };

HybridMode hybrid_select(std::int32_t doc_support_size, std::int32_t word_support_size);

// Word-side decomposition buckets:
//   smooth     alpha_k*beta/(N_k+W*beta)        (shared alias table)
//   doc-beta   N_k|d*beta/(N_k+W*beta)          (F+ tree, built per doc)
//   word       N_w|k*(N_k|d+alpha_k)/(N_k+W*beta)  (prefix sums, per pair)
struct HybridDocTree {
  FPlusTree tree;
  std::vector<std::int32_t> support;  // leaf index -> topic
};

HybridDocTree hybrid_build_doc_tree(std::span<const std::int32_t> doc_support,
                                    std::span<const Count> doc_counts,
                                    const IterationTerms& terms);

struct HybridWordCdf {
  CumulativeTable cdf;
  double mass = 0.0;
  bool excluded = false;
};

HybridWordCdf hybrid_build_word_cdf(std::span<const std::int32_t> word_support,
                                    std::span<const Count> word_counts,
                                    std::span<const Count> doc_dense,
                                    const IterationTerms& terms, TopicId exclude_prev);

TopicId hybrid_word_side_sample(const AliasTable& smooth_table, double smooth_mass,
                                const HybridDocTree& doc_tree, const HybridWordCdf& pair,
                                const IterationTerms& terms, const ZenTokenInfo& info,
                                bool remedy_enabled, Rng& rng);

// ---------------------------------------------------------------------------
// Fresh-count kernels (standard CGS, SparseLDA, LightLDA acceptance step).

// View over fully fresh counts with the current token already removed.
// prior_total is the token total the asymmetric prior sees (sum of
// topic_totals).
struct FreshView {
  std::span<const Count> word_dense;
  std::span<const std::int32_t> word_support;
  std::span<const Count> doc_dense;
  std::span<const std::int32_t> doc_support;
  std::span<const std::int64_t> topic_totals;
  std::int64_t prior_total = 0;
  std::int32_t vocab = 0;  // W
};

// Dense Formula-3 evaluation over all K topics; consumes one uniform.
TopicId standard_fresh_sample(const FreshView& fresh, const HyperParams& hyper,
                              std::span<double> scratch, Rng& rng);

// Smoothing bucket of the SparseLDA decomposition, alpha_k*beta/(N_k+W*beta),
// maintained incrementally as topic totals change between tokens.
class SmoothingCache {
 public:
  void init(std::span<const std::int64_t> topic_totals, std::int64_t prior_total,
            const HyperParams& hyper, std::int32_t vocab);
  // Topic total for k changed to nk.
  void on_change(TopicId k, std::int64_t nk);

  double mass() const { return mass_; }
  double weight(TopicId k) const { return weights_[static_cast<std::size_t>(k)]; }
  double alpha_k(TopicId k) const { return alpha_[static_cast<std::size_t>(k)]; }
  double inv_mass(TopicId k) const { return inv_[static_cast<std::size_t>(k)]; }

 private:
  double alpha_scale_ = 0.0;
  double alpha_over_k_ = 0.0;  // alpha'/K
  double w_beta_ = 0.0;
  double beta_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> alpha_;
  std::vector<double> inv_;
  double mass_ = 0.0;
};

// Three-bucket fresh draw: alpha_k*beta + N_k|d*beta + N_w|k*(N_k|d+alpha_k),
// all over (N_k + W*beta), searched linearly bucket by bucket in that order.
// bucket_sums_out, when non-null, receives the three bucket masses.
TopicId sparse_lda_sample_token(const FreshView& fresh, const SmoothingCache& smooth,
                                const HyperParams& hyper, Rng& rng,
                                double* bucket_sums_out = nullptr);

// Stale word proposal (N_w|k + beta)/(N_k + W*beta) over all K topics.
struct LightWordProposal {
  AliasTable table;
  std::vector<double> weights;
  double mass = 0.0;
};

LightWordProposal light_build_word_proposal(std::span<const Count> word_dense,
                                            const IterationTerms& terms);

// The document side of the cycle proposal reads the token-topic lookup table
// directly: token_offsets index into the live topic array, so the list stays
// fresh as the sweep reassigns tokens.
struct LightDocView {
  const TopicId* topics = nullptr;
  std::span<const std::int64_t> token_offsets;
};

// One draw from the doc proposal: uniform over the token list for the count
// mass, uniform over topics for the alpha mass, q(k) proportional to
// list-count(k) + alpha.
TopicId light_doc_proposal_draw(const LightDocView& doc, std::int32_t topics, double alpha,
                                Rng& rng);

// Metropolis-Hastings cycle proposal alternating doc and word proposals
// (doc first), accepted against the fresh Formula-3 conditional. Returns the
// state after mh_steps steps.
TopicId light_lda_sample_token(const LightWordProposal& word_prop, const LightDocView& doc,
                               const FreshView& fresh, const HyperParams& hyper, TopicId prev,
                               std::int32_t mh_steps, Rng& rng);

}  // namespace zenlda
