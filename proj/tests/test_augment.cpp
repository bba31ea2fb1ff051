#include <doctest.h>

#include "sada/augment.hpp"
#include "support.hpp"

using namespace sada;
using test_support::random_tensor;

TEST_CASE("flip is an involution") {
    Rng rng(1);
    Tensor img = random_tensor({8, 6, 3}, rng);
    Rng unused(0);
    Tensor once = apply(AugmentOp::of(AugmentKind::flip), img, unused);
    Tensor twice = apply(AugmentOp::of(AugmentKind::flip), once, unused);
    CHECK(twice.values == img.values);
    CHECK(once.values != img.values);
}

TEST_CASE("identity resize returns the image unchanged") {
    Rng rng(2);
    Tensor img = random_tensor({8, 8, 3}, rng);
    AugmentOp op = AugmentOp::of(AugmentKind::resize);
    op.resize_scale = 1.0;
    Rng unused(0);
    CHECK(apply(op, img, unused).values == img.values);
}

TEST_CASE("rotations compose back to the identity") {
    Rng rng(3);
    Tensor img = random_tensor({6, 6, 2}, rng);
    Rng unused(0);
    AugmentOp r90 = AugmentOp::of(AugmentKind::rotate);
    Tensor x = img;
    for (int i = 0; i < 4; ++i) x = apply(r90, x, unused);
    CHECK(x.values == img.values);

    AugmentOp r180 = AugmentOp::of(AugmentKind::rotate);
    r180.rotate_degrees = 180;
    Tensor y = apply(r180, apply(r180, img, unused), unused);
    CHECK(y.values == img.values);

    // 90-degree turns are only defined for square images
    Tensor rect = random_tensor({4, 6, 1}, rng);
    CHECK_THROWS_AS(apply(r90, rect, unused), ShapeError);
    CHECK_NOTHROW(apply(r180, rect, unused));
}

TEST_CASE("random gray equalizes channels when it fires") {
    Rng rng(4);
    Tensor img = random_tensor({5, 5, 3}, rng);
    AugmentOp op = AugmentOp::of(AugmentKind::random_gray);
    op.gray_prob = 1.0;
    Rng stream(9);
    Tensor gray = apply(op, img, stream);
    for (int i = 0; i < 25; ++i) {
        const double c0 = gray.values[static_cast<std::size_t>(i) * 3];
        CHECK(gray.values[static_cast<std::size_t>(i) * 3 + 1] == doctest::Approx(c0));
        CHECK(gray.values[static_cast<std::size_t>(i) * 3 + 2] == doctest::Approx(c0));
    }
}

TEST_CASE("every op preserves shape and is seed-deterministic") {
    Rng rng(5);
    Tensor img = random_tensor({12, 12, 3}, rng);
    for (const auto& op : full_pool()) {
        CAPTURE(augment_kind_name(op.kind));
        Rng s1(42), s2(42);
        Tensor a = apply(op, img, s1);
        Tensor b = apply(op, img, s2);
        CHECK(a.shape == img.shape);
        CHECK(a.values == b.values);
        for (double v : a.values) CHECK(std::isfinite(v));
    }
}

TEST_CASE("default plan matches the reported best four operations") {
    AugmentPlan plan = default_plan();
    CHECK(plan.size() == 4);
    CHECK(plan.ops[0].kind == AugmentKind::flip);
    CHECK(plan.ops[1].kind == AugmentKind::gaussian_blur);
    CHECK(plan.ops[2].kind == AugmentKind::random_gray);
    CHECK(plan.ops[3].kind == AugmentKind::random_crop_resize);
    for (std::size_t i = 0; i < plan.ops.size(); ++i)
        for (std::size_t j = i + 1; j < plan.ops.size(); ++j)
            CHECK(plan.ops[i].kind != plan.ops[j].kind);
}

TEST_CASE("plan selection") {
    const auto pool = full_pool();
    SUBCASE("J equal to the pool size returns the whole pool") {
        AugmentPlan plan = select_plan(pool, 7, [](const AugmentPlan&) { return 0.5; });
        CHECK(plan.size() == 7);
        for (std::size_t i = 0; i < pool.size(); ++i) CHECK(plan.ops[i].kind == pool[i].kind);
    }
    SUBCASE("an eval function favoring flip selects flip at J=1") {
        AugmentPlan plan = select_plan(pool, 1, [](const AugmentPlan& p) {
            return p.ops[0].kind == AugmentKind::flip ? 0.9 : 0.1;
        });
        CHECK(plan.size() == 1);
        CHECK(plan.ops[0].kind == AugmentKind::flip);
    }
    SUBCASE("out-of-range J is rejected") {
        CHECK_THROWS_AS(select_plan(pool, 0, [](const AugmentPlan&) { return 0.0; }), ConfigError);
        CHECK_THROWS_AS(select_plan(pool, 8, [](const AugmentPlan&) { return 0.0; }), ConfigError);
    }
    SUBCASE("ties break toward earlier pool order") {
        AugmentPlan plan = select_plan(pool, 2, [](const AugmentPlan&) { return 1.0; });
        CHECK(plan.ops[0].kind == pool[0].kind);
        CHECK(plan.ops[1].kind == pool[1].kind);
    }
}

TEST_CASE("duplicate kinds are rejected in plans") {
    CHECK_THROWS_AS(make_plan({AugmentKind::flip, AugmentKind::flip}), ConfigError);
}
