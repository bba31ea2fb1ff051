#pragma once

#include <string>
#include <vector>

#include "sada/encoders.hpp"
#include "sada/rng.hpp"
#include "sada/tape.hpp"

namespace sada {

// J groups of L trainable prompts; each prompt is M context rows of width E
// shared across classes, joined with a per-class token at a configurable
// position. Group j trains only on images augmented by operation j.

enum class TokenPosition { front, middle, end };
TokenPosition token_position_from_name(const std::string& name);
const char* token_position_name(TokenPosition p);

struct PromptCollection {
    int J = 0, L = 0, M = 0, E = 0;
    TokenPosition position = TokenPosition::end;
    std::vector<double> values;  // J x L x M x E

    static PromptCollection init(int J, int L, int M, int E, TokenPosition position, Rng& rng);
    std::vector<int> shape() const { return {J, L, M, E}; }
    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
};

// The whole collection as one trainable leaf, so cross-group gradient
// isolation is observable in the leaf's gradient buffer.
Tensor register_prompts(Tape& tape, const PromptCollection& prompts, bool trainable = true);

// (M, E) context matrix of prompt l in group j, sliced out of the leaf.
Tensor prompt_matrix(Tape& tape, const Tensor& leaf, const PromptCollection& prompts, int j,
                     int l);

// Context rows joined with the class token row at the configured position;
// output has M+1 rows.
Tensor build_prompt_text(Tape& tape, const Tensor& context, const EmbeddingTable& table, int k,
                         TokenPosition position);

// row index the class token occupies for a placement with M context rows
int cls_row_of(TokenPosition position, int m);

// Mean text feature of group j for class k over the given prompt indices
// (all L when empty).
Tensor group_text_feature(Tape& tape, const Tensor& leaf, const PromptCollection& prompts,
                          const FrozenTextEncoder& text, const EmbeddingTable& table, int j,
                          int k, const std::vector<int>& prompt_indices = {});

// Eq-uniform mean over every group and prompt; equals the mean over j of
// group_text_feature(j, k).
Tensor language_prototype(Tape& tape, const Tensor& leaf, const PromptCollection& prompts,
                          const FrozenTextEncoder& text, const EmbeddingTable& table, int k);

// Value-only helpers (scratch tape inside).
std::vector<std::vector<double>> group_text_features_plain(const PromptCollection& prompts,
                                                           const FrozenTextEncoder& text,
                                                           const EmbeddingTable& table, int j);
// [k][j*L + l] -> feature vector; the raw per-prompt features behind Eq-style
// means, used for language-side statistics.
std::vector<std::vector<std::vector<double>>> all_text_features_plain(
    const PromptCollection& prompts, const FrozenTextEncoder& text, const EmbeddingTable& table);
std::vector<std::vector<double>> language_prototypes_plain(const PromptCollection& prompts,
                                                           const FrozenTextEncoder& text,
                                                           const EmbeddingTable& table);

// Per-group mean of every text-feature entry (over prompts, classes and
// coordinates) plus the population std of those group means.
struct PromptDiversity {
    std::vector<double> group_means;
    double std_over_groups = 0.0;
};
PromptDiversity prompt_diversity(const PromptCollection& prompts, const FrozenTextEncoder& text,
                                 const EmbeddingTable& table);

}  // namespace sada
