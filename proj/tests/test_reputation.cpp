#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "repufed/reputation.hpp"
#include "repufed/rng.hpp"

using namespace repufed;

namespace {

Opinion random_opinion(Rng& rng) {
    // Dirichlet-ish: three positive draws normalized.
    double a = rng.uniform01(), b = rng.uniform01(), c = rng.uniform01();
    double s = a + b + c;
    return {a / s, b / s, c / s};
}

}  // namespace

TEST_CASE("validate_opinion") {
    CHECK_NOTHROW(validate_opinion({0.5, 0.3, 0.2}));
    CHECK_NOTHROW(validate_opinion({0.0, 0.0, 1.0}));
    CHECK_THROWS_AS(validate_opinion({0.5, 0.5, 0.5}), ValidationError);
    CHECK_THROWS_AS(validate_opinion({-0.1, 0.6, 0.5}), ValidationError);
}

TEST_CASE("local_opinion hand case") {
    InteractionStats st;
    st.alpha = 3;
    st.beta = 1;
    st.s = 0.8;
    Opinion op = local_opinion(st);
    CHECK(op.r == doctest::Approx(0.6));
    CHECK(op.d == doctest::Approx(0.2));
    CHECK(op.u == doctest::Approx(0.2));
    CHECK_NOTHROW(validate_opinion(op));
}

TEST_CASE("local_opinion edge cases") {
    InteractionStats st;
    st.alpha = 5;
    st.beta = 2;
    st.s = 0.0;
    Opinion op = local_opinion(st);
    CHECK(op.r == 0.0);
    CHECK(op.d == 0.0);
    CHECK(op.u == 1.0);

    st.alpha = 4;
    st.beta = 4;
    st.s = 0.7;
    op = local_opinion(st);
    CHECK(op.r == doctest::Approx(op.d));

    st.alpha = 0;
    st.beta = 0;
    CHECK_THROWS_AS(local_opinion(st), ValidationError);
}

TEST_CASE("reputation hand cases") {
    CHECK(reputation({0.6, 0.2, 0.2}, 0.5) == doctest::Approx(0.7));
    CHECK(reputation({1.0, 0.0, 0.0}, 0.3) == doctest::Approx(1.0));
    CHECK(reputation({0.0, 0.0, 1.0}, 0.0) == 0.0);
    CHECK_THROWS_AS(reputation({0.6, 0.2, 0.2}, 1.5), ValidationError);
    CHECK_THROWS_AS(reputation({0.6, 0.2, 0.2}, -0.1), ValidationError);
}

TEST_CASE("reputation monotone in r and in gamma*u") {
    Rng rng(7);
    for (int t = 0; t < 200; ++t) {
        Opinion a = random_opinion(rng);
        Opinion b = random_opinion(rng);
        double g = rng.uniform01();
        if (a.r + g * a.u <= b.r + g * b.u)
            CHECK(reputation(a, g) <= reputation(b, g) + 1e-12);
    }
}

TEST_CASE("combine_recommendations") {
    Opinion o1{0.6, 0.2, 0.2}, o2{0.4, 0.4, 0.2};
    auto avg = combine_recommendations({{1.0, o1}, {1.0, o2}});
    CHECK(avg.r == doctest::Approx(0.5));
    CHECK(avg.d == doctest::Approx(0.3));
    CHECK(avg.u == doctest::Approx(0.2));

    auto single = combine_recommendations({{2.5, o1}});
    CHECK(single.r == doctest::Approx(o1.r));
    CHECK(single.d == doctest::Approx(o1.d));
    CHECK(single.u == doctest::Approx(o1.u));

    CHECK_THROWS_AS(combine_recommendations({}), ValidationError);
    CHECK_THROWS_AS(combine_recommendations({{0.0, o1}, {0.0, o2}}),
                    ValidationError);
}

TEST_CASE("combine_recommendations weighted oracle and sum-to-one fuzz") {
    Rng rng(21);
    for (int t = 0; t < 100; ++t) {
        std::vector<Recommendation> recs;
        int n = 1 + static_cast<int>(rng.below(5));
        double wr = 0, wd = 0, wu = 0, wsum = 0;
        for (int i = 0; i < n; ++i) {
            Recommendation rec{rng.uniform(0.01, 3.0), random_opinion(rng)};
            recs.push_back(rec);
            wr += rec.delta * rec.opinion.r;
            wd += rec.delta * rec.opinion.d;
            wu += rec.delta * rec.opinion.u;
            wsum += rec.delta;
        }
        auto out = combine_recommendations(recs);
        CHECK(out.r == doctest::Approx(wr / wsum).epsilon(1e-12));
        CHECK(out.d == doctest::Approx(wd / wsum).epsilon(1e-12));
        CHECK(out.u == doctest::Approx(wu / wsum).epsilon(1e-12));
        CHECK_NOTHROW(validate_opinion(out));
    }
}

TEST_CASE("fuse_final hand case") {
    Opinion local{0.6, 0.2, 0.2}, rec{0.5, 0.3, 0.2};
    // Oracle: r=(r1 u2 + r2 u1)/(u1+u2-u1 u2) etc., denominator 0.36.
    Opinion f = fuse_final(local, rec);
    CHECK(f.r == doctest::Approx(0.22 / 0.36).epsilon(1e-9));
    CHECK(f.d == doctest::Approx(0.10 / 0.36).epsilon(1e-9));
    CHECK(f.u == doctest::Approx(0.04 / 0.36).epsilon(1e-9));
    CHECK(f.r == doctest::Approx(0.6111).epsilon(1e-3));
    CHECK_NOTHROW(validate_opinion(f));

    CHECK(final_reputation(f, 0.5) == doctest::Approx(0.6667).epsilon(1e-3));
}

TEST_CASE("fuse_final with a fully uncertain local returns the rec") {
    Opinion rec{0.5, 0.3, 0.2};
    Opinion f = fuse_final({0.0, 0.0, 1.0}, rec);
    CHECK(f.r == doctest::Approx(rec.r));
    CHECK(f.d == doctest::Approx(rec.d));
    CHECK(f.u == doctest::Approx(rec.u));
}

TEST_CASE("fuse_final symmetry and validity fuzz") {
    Rng rng(55);
    for (int t = 0; t < 200; ++t) {
        Opinion a = random_opinion(rng), b = random_opinion(rng);
        Opinion ab = fuse_final(a, b), ba = fuse_final(b, a);
        CHECK(ab.r == doctest::Approx(ba.r).epsilon(1e-12));
        CHECK(ab.d == doctest::Approx(ba.d).epsilon(1e-12));
        CHECK(ab.u == doctest::Approx(ba.u).epsilon(1e-12));
        CHECK_NOTHROW(validate_opinion(ab));
    }
}

TEST_CASE("fuse_final rejects both-certain opinions") {
    CHECK_THROWS_AS(fuse_final({1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}),
                    ValidationError);
}

TEST_CASE("count_interaction classification") {
    InteractionStats st;
    st.alpha = 0;
    st.beta = 0;
    st.s = 1.0;
    st.total = 0;
    st.delivered = 0;

    st = count_interaction(st, 0.9, 0.5, true);
    CHECK(st.alpha == 1);
    CHECK(st.beta == 0);
    CHECK(st.s == doctest::Approx(1.0));

    st = count_interaction(st, 0.9, 0.5, false);
    CHECK(st.alpha == 1);
    CHECK(st.beta == 1);
    CHECK(st.s == doctest::Approx(0.5));

    // Delivered but dissimilar: negative event, s still improves.
    st = count_interaction(st, 0.2, 0.5, true);
    CHECK(st.beta == 2);
    CHECK(st.s == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("count_interaction matches a hand-counted event sequence") {
    struct Event {
        double sim;
        bool delivered;
    };
    std::vector<Event> events{{0.9, true},  {0.8, true},  {0.3, true},
                              {0.9, false}, {0.6, true},  {0.5, true},
                              {0.4, false}, {0.95, true}, {0.1, false},
                              {0.7, true}};
    InteractionStats st;
    st.alpha = 0;
    st.beta = 0;
    st.total = 0;
    st.delivered = 0;
    for (const auto& e : events)
        st = count_interaction(st, e.sim, 0.5, e.delivered);
    // Hand count: positive = delivered && sim >= 0.5 -> events
    // 1,2,5,6,8,10 = 6; negative = 4; delivered = 7 of 10.
    CHECK(st.alpha == 6);
    CHECK(st.beta == 4);
    CHECK(st.total == 10);
    CHECK(st.delivered == 7);
    CHECK(st.s == doctest::Approx(0.7));
}

TEST_CASE("pipeline fuzz: stats -> opinion -> fusion -> reputation") {
    // End-to-end validity across 1e4 random operations.
    Rng rng(404);
    for (int t = 0; t < 10000; ++t) {
        InteractionStats st;
        st.alpha = 1 + rng.below(20);
        st.beta = rng.below(20);
        st.s = rng.uniform01();
        Opinion local = local_opinion(st);
        CHECK_NOTHROW(validate_opinion(local));

        Opinion rec = random_opinion(rng);
        if (local.u + rec.u - local.u * rec.u > 1e-12) {
            Opinion f = fuse_final(local, rec);
            validate_opinion(f);
            double rep = final_reputation(f, 0.5);
            CHECK(rep >= 0.0);
            CHECK(rep <= 1.0 + 1e-12);
        }
    }
}
