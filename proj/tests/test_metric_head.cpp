#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "dbrn/metric_head.hpp"
#include "dbrn/rng.hpp"
#include "test_util.hpp"

using namespace dbrn;

namespace {

// r orthonormal descriptors on an r x 1 grid (dim r, identity rows).
FeatureMap identity_map(int r) {
    std::vector<double> data(static_cast<std::size_t>(r) * r, 0.0);
    for (int i = 0; i < r; ++i) data[static_cast<std::size_t>(i) * r + i] = 1.0;
    return FeatureMap(r, 1, r, std::move(data));
}

} // namespace

TEST_CASE("compute_prototype means the support maps") {
    Rng rng(21);
    const FeatureMap solo = random_map(rng, 3, 2, 4);
    const Prototype p1 = compute_prototype({solo}, 7);
    CHECK(p1.class_id == 7);
    CHECK(p1.map.data == solo.data); // mean of one map is the map itself

    const FeatureMap a(1, 1, 2, {2.0, 0.0});
    const FeatureMap b(1, 1, 2, {0.0, 2.0});
    const Prototype mid = compute_prototype({a, b}, 0);
    CHECK(mid.map.data[0] == 1.0);
    CHECK(mid.map.data[1] == 1.0);

    std::vector<FeatureMap> maps;
    std::vector<oracle::DescGrid> grids;
    for (int i = 0; i < 5; ++i) {
        maps.push_back(random_map(rng, 5, 5, 8));
        grids.push_back(to_grid(maps.back()));
    }
    const Prototype p = compute_prototype(maps, 1);
    const oracle::DescGrid want = oracle::prototype(grids);
    for (int c = 0; c < p.map.cells(); ++c) {
        const auto got = p.map.descriptor(c);
        for (int d = 0; d < p.map.dim; ++d) {
            CHECK(got[d] == doctest::Approx(want[c][d]).epsilon(1e-12));
        }
    }

    CHECK_THROWS_AS(compute_prototype({}, 0), ParameterError);
    CHECK_THROWS_AS(compute_prototype({solo, a}, 0), DimensionError);
}

TEST_CASE("rectify weights: orthonormal, degenerate, and hand-worked cases") {
    const FeatureMap eye = identity_map(4);
    const Prototype ref{0, eye};
    const RectifyWeights self = rectify_weights(eye, ref, 2.0, true);
    REQUIRE(self.values.size() == 4);
    for (double w : self.values) CHECK(w == 1.0); // exactly one unit match per row

    // query orthogonal to every reference descriptor: raw weights vanish,
    // uniform fallback kicks in
    const FeatureMap lo(2, 1, 4, {1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0});
    const FeatureMap hi(2, 1, 4, {0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0});
    const RectifyWeights fb = rectify_weights(lo, Prototype{0, hi}, 2.0, true);
    for (double w : fb.values) CHECK(w == 1.0);

    // query {[1,0],[1,1]} against reference {[1,0],[0,1]}: both raw sums are
    // 1, so the normalized weights are one each
    const FeatureMap query(2, 1, 2, {1.0, 0.0, 1.0, 1.0});
    const FeatureMap refmap(2, 1, 2, {1.0, 0.0, 0.0, 1.0});
    const RectifyWeights hand = rectify_weights(query, Prototype{0, refmap}, 2.0, true);
    CHECK(hand.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hand.values[1] == doctest::Approx(1.0).epsilon(1e-12));

    const FeatureMap wrong_d(2, 1, 3, {1, 0, 0, 0, 1, 0});
    CHECK_THROWS_AS(rectify_weights(wrong_d, ref, 2.0, true), DimensionError);
    CHECK_THROWS_AS(rectify_weights(eye, ref, 0.0, true), ParameterError);
}

TEST_CASE("rectify weights are nonnegative, mean-one, and match the oracle") {
    Rng rng(22);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(6));
        const FeatureMap q = random_map(rng, 1 + static_cast<int>(rng.below(3)),
                                        1 + static_cast<int>(rng.below(3)), d);
        const FeatureMap ref = random_map(rng, 1 + static_cast<int>(rng.below(3)),
                                          1 + static_cast<int>(rng.below(3)), d);
        const double omegas[] = {0.5, 1.0, 2.0, 3.0, 2.7};
        const double omega = omegas[rng.below(5)];
        const bool use_pow = rng.below(2) == 0;

        const RectifyWeights w = rectify_weights(q, Prototype{0, ref}, omega, use_pow);
        REQUIRE(static_cast<int>(w.values.size()) == q.cells());
        double sum = 0.0;
        for (double v : w.values) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum / q.cells() == doctest::Approx(1.0).epsilon(1e-9));

        const std::vector<double> want = oracle::rectify(to_grid(q), to_grid(ref), omega, use_pow);
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(w.values[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("pow-off weights equal omega=1 weights bitwise") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const FeatureMap q = random_map(rng, 2, 2, 3);
        const FeatureMap ref = random_map(rng, 3, 1, 3);
        const RectifyWeights off = rectify_weights(q, Prototype{0, ref}, 2.7, false);
        const RectifyWeights one = rectify_weights(q, Prototype{0, ref}, 1.0, true);
        CHECK(off.values == one.values);
    }
}

TEST_CASE("similarity: orthonormal self-match and tau scaling") {
    for (int r : {2, 3, 5}) {
        const FeatureMap eye = identity_map(r);
        const double s =
            similarity(Prototype{0, eye}, eye, RectifyWeights::uniform(r), 1, 1.0);
        CHECK(s == static_cast<double>(r)); // each descriptor's best match is itself
    }

    Rng rng(24);
    for (int trial = 0; trial < 100; ++trial) {
        const FeatureMap q = random_map(rng, 2, 2, 3);
        const FeatureMap p = random_map(rng, 3, 1, 3);
        const RectifyWeights w = rectify_weights(q, Prototype{0, p}, 2.0, true);
        const double tau = rng.uniform(0.5, 8.0);
        const double s1 = similarity(Prototype{0, p}, q, w, 2, tau);
        const double s2 = similarity(Prototype{0, p}, q, w, 2, 2.0 * tau);
        CHECK(s2 == 2.0 * s1); // logits are linear in tau, exactly
    }
}

TEST_CASE("similarity matches the oracle and validates its inputs") {
    Rng rng(25);
    for (int trial = 0; trial < 200; ++trial) {
        const FeatureMap q = random_map(rng, 2, 2, 3);
        const FeatureMap p = random_map(rng, 2, 2, 3);
        const RectifyWeights w = rectify_weights(q, Prototype{0, p}, 2.0, true);
        const double got = similarity(Prototype{0, p}, q, w, 2, 5.0);
        const double want = oracle::similarity(to_grid(p), to_grid(q), w.values, 2, 5.0);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }

    const FeatureMap q = random_map(rng, 2, 2, 3);
    const FeatureMap p = random_map(rng, 2, 2, 3);
    const RectifyWeights w = RectifyWeights::uniform(4);
    CHECK_THROWS_AS(similarity(Prototype{0, p}, q, w, 0, 1.0), ParameterError);
    CHECK_THROWS_AS(similarity(Prototype{0, p}, q, w, 5, 1.0), ParameterError);
    CHECK_THROWS_AS(similarity(Prototype{0, p}, q, w, 2, 0.0), ParameterError);
    CHECK_THROWS_AS(similarity(Prototype{0, p}, q, RectifyWeights::uniform(3), 2, 1.0),
                    DimensionError);
    const FeatureMap bad_d = random_map(rng, 2, 2, 4);
    CHECK_THROWS_AS(similarity(Prototype{0, bad_d}, q, w, 2, 1.0), DimensionError);
}

TEST_CASE("classify matches the oracle across random episodes") {
    Rng rng(26);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(4));
        const int d = 1 + static_cast<int>(rng.below(6));
        const int pw = 1 + static_cast<int>(rng.below(3));
        const int ph = 1 + static_cast<int>(rng.below(3));
        std::vector<Prototype> protos;
        std::vector<oracle::DescGrid> grids;
        for (int c = 0; c < n; ++c) {
            protos.push_back(Prototype{c, random_map(rng, pw, ph, d)});
            grids.push_back(to_grid(protos.back().map));
        }
        const FeatureMap q = random_map(rng, 1 + static_cast<int>(rng.below(3)),
                                        1 + static_cast<int>(rng.below(3)), d);
        const HeadConfig cfg = random_head(rng, pw * ph);

        const ProbVector got = classify(protos, q, cfg);
        const std::vector<double> want = oracle::classify(grids, to_grid(q), to_oracle(cfg));
        REQUIRE(got.values.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(got.values[i] == doctest::Approx(want[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("classify: self-match wins, identical prototypes tie at exactly 1/n") {
    Rng rng(27);
    std::vector<Prototype> protos;
    for (int c = 0; c < 3; ++c) protos.push_back(Prototype{c, random_map(rng, 3, 3, 8)});
    HeadConfig cfg;
    cfg.k = 1; // top-1: the exact self-match at cosine 1 always dominates
    for (int c = 0; c < 3; ++c) {
        const ProbVector probs = classify(protos, protos[c].map, cfg);
        CHECK(argmax_class(probs) == c);
    }
    cfg.k = 2;

    const FeatureMap shared = random_map(rng, 2, 2, 4);
    const std::vector<Prototype> same{{0, shared}, {1, shared}};
    const ProbVector tie = classify(same, random_map(rng, 2, 2, 4), cfg);
    CHECK(tie.values[0] == 0.5);
    CHECK(tie.values[1] == 0.5);
    CHECK(argmax_class(tie) == 0); // ties break to the lowest index

    CHECK(argmax_class(ProbVector{{0.2, 0.4, 0.4}}) == 1);
    CHECK_THROWS_AS(argmax_class(ProbVector{{}}), ParameterError);
    CHECK_THROWS_AS(classify({protos[0]}, protos[0].map, cfg), ParameterError);
}

TEST_CASE("classify is invariant to per-descriptor query rescaling") {
    Rng rng(28);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Prototype> protos;
        for (int c = 0; c < 4; ++c) protos.push_back(Prototype{c, random_map(rng, 2, 2, 5)});
        const FeatureMap q = random_map(rng, 3, 1, 5);
        FeatureMap scaled = q;
        for (int i = 0; i < scaled.cells(); ++i) {
            const double gamma = rng.uniform(0.1, 10.0);
            for (int d = 0; d < scaled.dim; ++d) {
                scaled.data[static_cast<std::size_t>(i) * scaled.dim + d] *= gamma;
            }
        }
        const HeadConfig cfg = random_head(rng, 4);
        const ProbVector a = classify(protos, q, cfg);
        const ProbVector b = classify(protos, scaled, cfg);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            CHECK(b.values[i] == doctest::Approx(a.values[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("classify is equivariant under class permutation, bitwise") {
    Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(3));
        std::vector<Prototype> protos;
        for (int c = 0; c < n; ++c) protos.push_back(Prototype{c, random_map(rng, 2, 2, 4)});
        const FeatureMap q = random_map(rng, 2, 2, 4);
        const HeadConfig cfg = random_head(rng, 4);

        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) {
            std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
        }
        std::vector<Prototype> shuffled;
        for (int i = 0; i < n; ++i) shuffled.push_back(protos[perm[i]]);

        const ProbVector base = classify(protos, q, cfg);
        const ProbVector perms = classify(shuffled, q, cfg);
        for (int i = 0; i < n; ++i) {
            CHECK(perms.values[i] == base.values[perm[i]]);
        }
    }
}

TEST_CASE("weight-off logits equal uniform-weight similarities bitwise") {
    Rng rng(30);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Prototype> protos;
        for (int c = 0; c < 3; ++c) protos.push_back(Prototype{c, random_map(rng, 2, 2, 4)});
        const FeatureMap q = random_map(rng, 2, 2, 4);
        HeadConfig cfg;
        cfg.k = 2;
        cfg.tau = 7.0;
        cfg.use_weight = false;
        const std::vector<double> logits = class_logits(protos, q, cfg);
        for (int c = 0; c < 3; ++c) {
            const double want = similarity(protos[c], q, RectifyWeights::uniform(q.cells()),
                                           cfg.k, cfg.tau);
            CHECK(logits[c] == want);
        }
    }
}

TEST_CASE("omega=1 with pow on equals pow off bitwise") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Prototype> protos;
        for (int c = 0; c < 3; ++c) protos.push_back(Prototype{c, random_map(rng, 2, 2, 4)});
        const FeatureMap q = random_map(rng, 2, 2, 4);
        HeadConfig on;
        on.k = 2;
        on.omega = 1.0;
        on.use_pow = true;
        HeadConfig off = on;
        off.omega = 2.7; // ignored when use_pow is off
        off.use_pow = false;
        CHECK(class_logits(protos, q, on) == class_logits(protos, q, off));
    }
}

TEST_CASE("tau_gradient: closed forms") {
    // zero logits: p is uniform and every logit contributes zero
    CHECK(tau_gradient({{0.0, 0.0, 0.0}}, {1}, 2.0) == 0.0);

    // logits [1, 0] at tau=1, true class 0: d loss / d tau = sigma1 - 1
    const double sigma1 = std::exp(1.0) / (std::exp(1.0) + 1.0);
    CHECK(tau_gradient({{1.0, 0.0}}, {0}, 1.0) ==
          doctest::Approx(sigma1 - 1.0).epsilon(1e-12));

    CHECK_THROWS_AS(tau_gradient({{1.0, 0.0}}, {0}, 0.0), ParameterError);
    CHECK_THROWS_AS(tau_gradient({}, {}, 1.0), ParameterError);
    CHECK_THROWS_AS(tau_gradient({{1.0, 0.0}}, {0, 1}, 1.0), DimensionError);
    CHECK_THROWS_AS(tau_gradient({{1.0, 0.0}}, {2}, 1.0), ParameterError);
}

TEST_CASE("tau_gradient agrees with a central finite difference") {
    Rng rng(32);
    for (int trial = 0; trial < 25; ++trial) {
        const double tau = rng.uniform(0.5, 15.0);
        const int nq = 2 + static_cast<int>(rng.below(6));
        const int nc = 2 + static_cast<int>(rng.below(4));
        std::vector<std::vector<double>> logits(nq, std::vector<double>(nc));
        std::vector<int> labels(nq);
        for (int q = 0; q < nq; ++q) {
            for (int c = 0; c < nc; ++c) logits[q][c] = tau * rng.uniform(-3.0, 3.0);
            labels[q] = static_cast<int>(rng.below(static_cast<std::uint64_t>(nc)));
        }
        const double analytic = tau_gradient(logits, labels, tau);

        const double h = 1e-4 * tau;
        auto loss_at = [&](double t) {
            std::vector<std::vector<double>> scaled = logits;
            for (auto& row : scaled) {
                for (double& v : row) v *= t / tau; // logits are linear in tau
            }
            return oracle::mean_cross_entropy(scaled, labels);
        };
        const double numeric = (loss_at(tau + h) - loss_at(tau - h)) / (2.0 * h);
        const double denom = std::max(std::abs(analytic), 1e-8);
        CHECK(std::abs(analytic - numeric) / denom <= 1e-4);
    }
}

TEST_CASE("fit_tau: fixed points, descent, and validation") {
    // orthonormal prototypes with the queries sitting on them: the correct
    // class always scores highest, so sharpening tau can only lower the loss
    std::vector<FeatureEpisode> sep;
    for (int e = 0; e < 4; ++e) {
        FeatureEpisode ep;
        for (int c = 0; c < 3; ++c) {
            FeatureMap m(1, 1, 3, {0.0, 0.0, 0.0});
            m.data[c] = 1.0;
            ep.prototypes.push_back(Prototype{c, m});
            ep.queries.push_back(m);
            ep.labels.push_back(c);
        }
        sep.push_back(std::move(ep));
    }
    HeadConfig cfg;
    cfg.k = 1;
    cfg.tau = 2.0;
    const TauFit fit = fit_tau(sep, cfg, 0.5, 40);
    REQUIRE(fit.loss_trace.size() == 41);
    CHECK(fit.loss_trace.back() <= fit.loss_trace.front());
    CHECK(fit.tau >= 1e-3);
    CHECK(fit.tau <= 1e3);

    // all-zero features: every logit is zero at any tau, so the gradient
    // vanishes and tau stays put
    FeatureEpisode flat;
    for (int c = 0; c < 2; ++c) {
        flat.prototypes.push_back(Prototype{c, FeatureMap(1, 1, 2, {0.0, 0.0})});
        flat.queries.push_back(FeatureMap(1, 1, 2, {0.0, 0.0}));
        flat.labels.push_back(c);
    }
    const TauFit still = fit_tau({flat}, cfg, 0.5, 10);
    CHECK(still.tau == cfg.tau);
    for (double l : still.loss_trace) CHECK(l == still.loss_trace.front());

    // zero learning rate: trace still has steps+1 entries, tau unchanged
    const TauFit frozen = fit_tau(sep, cfg, 0.0, 5);
    CHECK(frozen.tau == cfg.tau);
    REQUIRE(frozen.loss_trace.size() == 6);
    for (double l : frozen.loss_trace) CHECK(l == frozen.loss_trace.front());

    CHECK_THROWS_AS(fit_tau(sep, cfg, 0.5, 0), ParameterError);
    CHECK_THROWS_AS(fit_tau(sep, cfg, -0.1, 5), ParameterError);
    CHECK_THROWS_AS(fit_tau({}, cfg, 0.5, 5), ParameterError);
}
