#include <doctest.h>

#include <cmath>

#include "sada/prompt.hpp"
#include "support.hpp"

using namespace sada;

namespace {

struct Fixture {
    EncoderDims dims;
    Encoders enc;
    PromptCollection prompts;

    explicit Fixture(TokenPosition pos = TokenPosition::end, int J = 2, int L = 3)
        : dims{}, enc{}, prompts{} {
        dims.H = 8;
        dims.W = 8;
        dims.E = 6;
        dims.D = 10;
        dims.blocks = 1;
        enc = build_encoders(17, dims, 3, 4);
        Rng rng(23);
        prompts = PromptCollection::init(J, L, 4, dims.E, pos, rng);
    }
};

}  // namespace

TEST_CASE("prompt text assembly") {
    Fixture f;
    Tape tape;
    Tensor leaf = register_prompts(tape, f.prompts, false);
    Tensor ctx = prompt_matrix(tape, leaf, f.prompts, 1, 2);
    CHECK(ctx.shape == std::vector<int>{4, 6});

    SUBCASE("class token at the end") {
        Tensor seq = build_prompt_text(tape, ctx, f.enc.table, 1, TokenPosition::end);
        CHECK(seq.shape == std::vector<int>{5, 6});
        for (int e = 0; e < 6; ++e)
            CHECK(seq.values[static_cast<std::size_t>(4) * 6 + e] ==
                  f.enc.table.row(1)[static_cast<std::size_t>(e)]);
    }
    SUBCASE("class token at the front") {
        Tensor seq = build_prompt_text(tape, ctx, f.enc.table, 2, TokenPosition::front);
        for (int e = 0; e < 6; ++e)
            CHECK(seq.values[static_cast<std::size_t>(e)] == f.enc.table.row(2)[static_cast<std::size_t>(e)]);
        // context rows follow unchanged
        for (int i = 0; i < 4 * 6; ++i)
            CHECK(seq.values[static_cast<std::size_t>(6 + i)] == ctx.values[static_cast<std::size_t>(i)]);
    }
    SUBCASE("class token in the middle") {
        Tensor seq = build_prompt_text(tape, ctx, f.enc.table, 0, TokenPosition::middle);
        CHECK(seq.shape == std::vector<int>{5, 6});
        for (int e = 0; e < 6; ++e)
            CHECK(seq.values[static_cast<std::size_t>(2) * 6 + e] ==
                  f.enc.table.row(0)[static_cast<std::size_t>(e)]);
    }
    SUBCASE("two classes share the context rows and differ only in the token row") {
        Tensor s0 = build_prompt_text(tape, ctx, f.enc.table, 0, TokenPosition::end);
        Tensor s1 = build_prompt_text(tape, ctx, f.enc.table, 1, TokenPosition::end);
        for (int i = 0; i < 4 * 6; ++i)
            CHECK(s0.values[static_cast<std::size_t>(i)] == s1.values[static_cast<std::size_t>(i)]);
        CHECK(s0.values != s1.values);
    }
    SUBCASE("class index out of range") {
        CHECK_THROWS_AS(build_prompt_text(tape, ctx, f.enc.table, 9, TokenPosition::end),
                        IndexError);
    }
}

TEST_CASE("group feature is the mean of its prompt features") {
    Fixture f;
    Tape tape;
    Tensor leaf = register_prompts(tape, f.prompts, false);

    SUBCASE("a single prompt index gives that prompt's feature") {
        Tensor one = group_text_feature(tape, leaf, f.prompts, f.enc.text, f.enc.table, 0, 1, {2});
        Tensor ctx = prompt_matrix(tape, leaf, f.prompts, 0, 2);
        Tensor direct = f.enc.text.encode(
            tape, build_prompt_text(tape, ctx, f.enc.table, 1, f.prompts.position),
            cls_row_of(f.prompts.position, f.prompts.M));
        CHECK(one.values == direct.values);
    }
    SUBCASE("identical prompts collapse to the shared feature") {
        PromptCollection same = f.prompts;
        // copy prompt (0, 0) over the whole collection
        const std::size_t block = static_cast<std::size_t>(same.M) * same.E;
        for (int j = 0; j < same.J; ++j)
            for (int l = 0; l < same.L; ++l)
                std::copy_n(f.prompts.values.begin(), block,
                            same.values.begin() +
                                (static_cast<std::size_t>(j) * same.L + l) * block);
        Tape t2;
        Tensor leaf2 = register_prompts(t2, same, false);
        Tensor group = group_text_feature(t2, leaf2, same, f.enc.text, f.enc.table, 1, 0);
        Tensor single = group_text_feature(t2, leaf2, same, f.enc.text, f.enc.table, 1, 0, {0});
        for (std::size_t i = 0; i < group.values.size(); ++i)
            CHECK(group.values[i] == doctest::Approx(single.values[i]).epsilon(1e-14));
    }
    SUBCASE("group feature norm stays inside the unit ball") {
        for (int j = 0; j < f.prompts.J; ++j)
            for (int k = 0; k < 3; ++k) {
                Tensor g = group_text_feature(tape, leaf, f.prompts, f.enc.text, f.enc.table, j, k);
                double n = 0.0;
                for (double v : g.values) n += v * v;
                CHECK(std::sqrt(n) <= 1.0 + 1e-12);
            }
    }
}

TEST_CASE("language prototype equals the brute-force double loop") {
    Fixture f;
    Tape tape;
    Tensor leaf = register_prompts(tape, f.prompts, false);
    for (int k = 0; k < 3; ++k) {
        Tensor proto = language_prototype(tape, leaf, f.prompts, f.enc.text, f.enc.table, k);

        // brute force: average every individual prompt feature
        std::vector<double> acc(static_cast<std::size_t>(f.dims.D), 0.0);
        int count = 0;
        for (int j = 0; j < f.prompts.J; ++j)
            for (int l = 0; l < f.prompts.L; ++l) {
                Tensor ctx = prompt_matrix(tape, leaf, f.prompts, j, l);
                Tensor feat = f.enc.text.encode(
                    tape, build_prompt_text(tape, ctx, f.enc.table, k, f.prompts.position),
                    cls_row_of(f.prompts.position, f.prompts.M));
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += feat.values[i];
                ++count;
            }
        for (std::size_t i = 0; i < acc.size(); ++i)
            CHECK(proto.values[i] == doctest::Approx(acc[i] / count).epsilon(1e-14));

        // and the mean over group features agrees
        std::vector<double> by_groups(static_cast<std::size_t>(f.dims.D), 0.0);
        for (int j = 0; j < f.prompts.J; ++j) {
            Tensor g = group_text_feature(tape, leaf, f.prompts, f.enc.text, f.enc.table, j, k);
            for (std::size_t i = 0; i < by_groups.size(); ++i) by_groups[i] += g.values[i];
        }
        for (std::size_t i = 0; i < by_groups.size(); ++i)
            CHECK(proto.values[i] ==
                  doctest::Approx(by_groups[i] / f.prompts.J).epsilon(1e-14));
    }
}

TEST_CASE("prompt diversity statistic has one mean per group") {
    Fixture f(TokenPosition::end, 4, 2);
    PromptDiversity div = prompt_diversity(f.prompts, f.enc.text, f.enc.table);
    CHECK(div.group_means.size() == 4);
    CHECK(div.std_over_groups >= 0.0);
    // identical groups have zero spread
    PromptCollection same = f.prompts;
    const std::size_t block = static_cast<std::size_t>(same.L) * same.M * same.E;
    for (int j = 1; j < same.J; ++j)
        std::copy_n(same.values.begin(), block, same.values.begin() + static_cast<std::size_t>(j) * block);
    PromptDiversity flat = prompt_diversity(same, f.enc.text, f.enc.table);
    CHECK(flat.std_over_groups == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("prompt index errors") {
    Fixture f;
    Tape tape;
    Tensor leaf = register_prompts(tape, f.prompts, false);
    CHECK_THROWS_AS(prompt_matrix(tape, leaf, f.prompts, 5, 0), IndexError);
    CHECK_THROWS_AS(prompt_matrix(tape, leaf, f.prompts, 0, 9), IndexError);
    CHECK_THROWS_AS(group_text_feature(tape, leaf, f.prompts, f.enc.text, f.enc.table, 0, 7),
                    IndexError);
}
