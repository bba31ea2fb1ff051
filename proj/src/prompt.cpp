#include "sada/prompt.hpp"

#include <cmath>

#include "sada/errors.hpp"

namespace sada {

TokenPosition token_position_from_name(const std::string& name) {
    if (name == "front") return TokenPosition::front;
    if (name == "middle") return TokenPosition::middle;
    if (name == "end") return TokenPosition::end;
    throw ConfigError("unknown token position: " + name);
}

const char* token_position_name(TokenPosition p) {
    switch (p) {
        case TokenPosition::front: return "front";
        case TokenPosition::middle: return "middle";
        case TokenPosition::end: return "end";
    }
    return "?";
}

PromptCollection PromptCollection::init(int J, int L, int M, int E, TokenPosition position,
                                        Rng& rng) {
    if (J < 1 || L < 1 || M < 1 || E < 1)
        throw ConfigError("prompt collection: non-positive dimension");
    PromptCollection p;
    p.J = J;
    p.L = L;
    p.M = M;
    p.E = E;
    p.position = position;
    // Unit-scale init. The frozen text head gates the class-token signal
    // through sigmoid curvature; context vectors initialized near zero leave
    // it in its linear range where that gate is constant and prompt learning
    // cannot reshape the class geometry.
    p.values.resize(static_cast<std::size_t>(J) * L * M * E);
    for (auto& v : p.values) v = rng.normal(0.0, 1.0);
    return p;
}

Tensor register_prompts(Tape& tape, const PromptCollection& prompts, bool trainable) {
    return tape.leaf(prompts.shape(), prompts.values, trainable);
}

Tensor prompt_matrix(Tape& tape, const Tensor& leaf, const PromptCollection& prompts, int j,
                     int l) {
    if (j < 0 || j >= prompts.J) throw IndexError("prompt group " + std::to_string(j));
    if (l < 0 || l >= prompts.L) throw IndexError("prompt index " + std::to_string(l));
    Tensor group = tape.reshape(tape.slice(leaf, j, j + 1), {prompts.L, prompts.M, prompts.E});
    return tape.reshape(tape.slice(group, l, l + 1), {prompts.M, prompts.E});
}

Tensor build_prompt_text(Tape& tape, const Tensor& context, const EmbeddingTable& table, int k,
                         TokenPosition position) {
    const int m = context.shape[0];
    const int e = context.shape[1];
    Tensor cls = tape.constant({1, e}, table.row(k));
    switch (position) {
        case TokenPosition::front: return tape.concat({cls, context}, 0);
        case TokenPosition::middle: {
            Tensor head = tape.slice(context, 0, m / 2);
            Tensor tail = tape.slice(context, m / 2, m);
            return tape.concat({head, cls, tail}, 0);
        }
        case TokenPosition::end: return tape.concat({context, cls}, 0);
    }
    throw ConfigError("build_prompt_text: unreachable position");
}

// row index of the class token for a given placement
int cls_row_of(TokenPosition position, int m) {
    switch (position) {
        case TokenPosition::front: return 0;
        case TokenPosition::middle: return m / 2;
        case TokenPosition::end: return m;
    }
    return m;
}

Tensor group_text_feature(Tape& tape, const Tensor& leaf, const PromptCollection& prompts,
                          const FrozenTextEncoder& text, const EmbeddingTable& table, int j,
                          int k, const std::vector<int>& prompt_indices) {
    if (k < 0 || k >= table.num_classes()) throw IndexError("class " + std::to_string(k));
    std::vector<int> ls = prompt_indices;
    if (ls.empty())
        for (int l = 0; l < prompts.L; ++l) ls.push_back(l);
    std::vector<Tensor> features;
    features.reserve(ls.size());
    for (int l : ls) {
        Tensor ctx = prompt_matrix(tape, leaf, prompts, j, l);
        Tensor tokens = build_prompt_text(tape, ctx, table, k, prompts.position);
        features.push_back(text.encode(tape, tokens, cls_row_of(prompts.position, prompts.M)));
    }
    if (features.size() == 1) return features[0];
    return tape.reduce_mean(tape.stack(features));
}

Tensor language_prototype(Tape& tape, const Tensor& leaf, const PromptCollection& prompts,
                          const FrozenTextEncoder& text, const EmbeddingTable& table, int k) {
    std::vector<Tensor> group_feats;
    group_feats.reserve(static_cast<std::size_t>(prompts.J));
    for (int j = 0; j < prompts.J; ++j)
        group_feats.push_back(group_text_feature(tape, leaf, prompts, text, table, j, k));
    if (group_feats.size() == 1) return group_feats[0];
    return tape.reduce_mean(tape.stack(group_feats));
}

std::vector<std::vector<double>> group_text_features_plain(const PromptCollection& prompts,
                                                           const FrozenTextEncoder& text,
                                                           const EmbeddingTable& table, int j) {
    Tape tape;
    Tensor leaf = register_prompts(tape, prompts, false);
    std::vector<std::vector<double>> out;
    for (int k = 0; k < table.num_classes(); ++k)
        out.push_back(group_text_feature(tape, leaf, prompts, text, table, j, k).values);
    return out;
}

std::vector<std::vector<std::vector<double>>> all_text_features_plain(
    const PromptCollection& prompts, const FrozenTextEncoder& text, const EmbeddingTable& table) {
    Tape tape;
    Tensor leaf = register_prompts(tape, prompts, false);
    std::vector<std::vector<std::vector<double>>> out(
        static_cast<std::size_t>(table.num_classes()));
    for (int k = 0; k < table.num_classes(); ++k) {
        auto& per_class = out[static_cast<std::size_t>(k)];
        per_class.reserve(static_cast<std::size_t>(prompts.J) * prompts.L);
        for (int j = 0; j < prompts.J; ++j)
            for (int l = 0; l < prompts.L; ++l) {
                Tensor ctx = prompt_matrix(tape, leaf, prompts, j, l);
                Tensor tokens = build_prompt_text(tape, ctx, table, k, prompts.position);
                per_class.push_back(
                    text.encode(tape, tokens, cls_row_of(prompts.position, prompts.M)).values);
            }
    }
    return out;
}

std::vector<std::vector<double>> language_prototypes_plain(const PromptCollection& prompts,
                                                           const FrozenTextEncoder& text,
                                                           const EmbeddingTable& table) {
    Tape tape;
    Tensor leaf = register_prompts(tape, prompts, false);
    std::vector<std::vector<double>> out;
    for (int k = 0; k < table.num_classes(); ++k)
        out.push_back(language_prototype(tape, leaf, prompts, text, table, k).values);
    return out;
}

PromptDiversity prompt_diversity(const PromptCollection& prompts, const FrozenTextEncoder& text,
                                 const EmbeddingTable& table) {
    Tape tape;
    Tensor leaf = register_prompts(tape, prompts, false);
    PromptDiversity d;
    for (int j = 0; j < prompts.J; ++j) {
        double acc = 0.0;
        std::int64_t count = 0;
        for (int k = 0; k < table.num_classes(); ++k)
            for (int l = 0; l < prompts.L; ++l) {
                Tensor ctx = prompt_matrix(tape, leaf, prompts, j, l);
                Tensor f = text.encode(tape, build_prompt_text(tape, ctx, table, k, prompts.position),
                                       cls_row_of(prompts.position, prompts.M));
                for (double v : f.values) acc += v;
                count += f.numel();
            }
        d.group_means.push_back(acc / static_cast<double>(count));
    }
    double mean = 0.0;
    for (double m : d.group_means) mean += m;
    mean /= static_cast<double>(d.group_means.size());
    double var = 0.0;
    for (double m : d.group_means) var += (m - mean) * (m - mean);
    d.std_over_groups = std::sqrt(var / static_cast<double>(d.group_means.size()));
    return d;
}

}  // namespace sada
