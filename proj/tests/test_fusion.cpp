#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gdcnet/fusion.hpp"
#include "gdcnet/model.hpp"
#include "testutil.hpp"

using namespace gdcnet;

TEST_CASE("gate closed forms") {
    Mat zero(2, 2);
    CHECK(gate(zero, {1.0, -3.0}) == Vec{0.5, 0.5});

    Mat ident(2, 2);
    ident(0, 0) = ident(1, 1) = 1.0;
    const Vec g = gate(ident, {std::log(3.0), -std::log(3.0)});
    CHECK(g[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.25).epsilon(1e-12));

    CHECK_THROWS_AS(gate(ident, Vec{1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("gate outputs are strictly inside (0,1)") {
    // pre-activations capped below ~36 where sigmoid still resolves < 1
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int rep = 0; rep < 500; ++rep) {
        Mat w(3, 3);
        for (auto& x : w.data) x = u(rng);
        Vec f(3);
        for (auto& x : f) x = u(rng);
        for (double g : gate(w, f)) {
            CHECK(g > 0.0);
            CHECK(g < 1.0);
        }
    }
}

namespace {
FusionParams small_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return FusionParams::init(4, 4, 4, 8, rng);
}
}  // namespace

TEST_CASE("fuse composition rules") {
    FusionParams p = small_params(1);
    SUBCASE("zero gates halve the only live modality") {
        std::fill(p.gate_text.data.begin(), p.gate_text.data.end(), 0.0);
        std::fill(p.gate_image.data.begin(), p.gate_image.data.end(), 0.0);
        std::fill(p.gate_disc.data.begin(), p.gate_disc.data.end(), 0.0);
        const Vec ft{2.0, -4.0, 6.0, 0.0};
        const Vec zero(4, 0.0);
        const Vec fused = fuse(ft, zero, zero, p);
        for (std::size_t k = 0; k < 4; ++k) CHECK(fused[k] == doctest::Approx(0.5 * ft[k]));
    }
    SUBCASE("all-zero features fuse to zero") {
        const Vec zero(4, 0.0);
        for (double x : fuse(zero, zero, zero, p)) CHECK(x == 0.0);
    }
    SUBCASE("matches an elementwise oracle") {
        std::mt19937_64 rng(9);
        const Vec ft = testutil::random_unit(4, rng);
        const Vec fi = testutil::random_unit(4, rng);
        const Vec fd = testutil::random_unit(4, rng);
        const Vec fused = fuse(ft, fi, fd, p);
        for (std::size_t k = 0; k < 4; ++k) {
            double gt = 0, gi = 0, gd = 0;
            for (std::size_t j = 0; j < 4; ++j) {
                gt += p.gate_text(k, j) * ft[j];
                gi += p.gate_image(k, j) * fi[j];
                gd += p.gate_disc(k, j) * fd[j];
            }
            const double expect = sigmoid(gt) * ft[k] + sigmoid(gi) * fi[k] + sigmoid(gd) * fd[k];
            CHECK(fused[k] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(fuse(Vec{1, 2}, Vec{1, 2, 3, 4}, Vec{1, 2, 3, 4}, p), ShapeError);
    }
}

TEST_CASE("fused output is elementwise bounded by the feature magnitudes") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int rep = 0; rep < 300; ++rep) {
        FusionParams p = small_params(rep + 10);
        Vec ft(4), fi(4), fd(4);
        for (auto* v : {&ft, &fi, &fd})
            for (auto& x : *v) x = u(rng);
        const Vec fused = fuse(ft, fi, fd, p);
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(std::abs(fused[k]) <=
                  std::abs(ft[k]) + std::abs(fi[k]) + std::abs(fd[k]) + 1e-12);
        }
    }
}

TEST_CASE("predict closed forms") {
    FusionParams p = small_params(2);
    const Vec f(4, 0.7);
    SUBCASE("all-zero network gives 0.5") {
        FusionParams z = p;
        for (auto* c : {&z.clf_text, &z.clf_image, &z.clf_disc, &z.clf_fused}) {
            std::fill(c->weight.begin(), c->weight.end(), 0.0);
            c->bias = 0.0;
        }
        std::fill(z.head_w1.data.begin(), z.head_w1.data.end(), 0.0);
        std::fill(z.head_b1.begin(), z.head_b1.end(), 0.0);
        std::fill(z.head_w2.begin(), z.head_w2.end(), 0.0);
        z.head_b2 = 0.0;
        CHECK(predict(f, f, f, f, z) == doctest::Approx(0.5));
    }
    SUBCASE("selector head passes through the fused classifier logit") {
        FusionParams z = p;
        // hidden unit 0 carries max(0, l_fused); unit 1 carries max(0, -l_fused)
        std::fill(z.head_w1.data.begin(), z.head_w1.data.end(), 0.0);
        std::fill(z.head_b1.begin(), z.head_b1.end(), 0.0);
        std::fill(z.head_w2.begin(), z.head_w2.end(), 0.0);
        z.head_b2 = 0.0;
        z.head_w1(0, 3) = 1.0;
        z.head_w1(1, 3) = -1.0;
        z.head_w2[0] = 1.0;
        z.head_w2[1] = -1.0;
        const Vec fused = fuse(f, f, f, z);
        const double expect = sigmoid(z.clf_fused.logit(fused));
        CHECK(predict(f, f, f, fused, z) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("matches a brute-force forward pass") {
        std::mt19937_64 rng(77);
        const Vec ft = testutil::random_unit(4, rng);
        const Vec fi = testutil::random_unit(4, rng);
        const Vec fd = testutil::random_unit(4, rng);
        const Vec fused = fuse(ft, fi, fd, p);
        Vec logits{p.clf_text.logit(ft), p.clf_image.logit(fi), p.clf_disc.logit(fd),
                   p.clf_fused.logit(fused)};
        double out = p.head_b2;
        for (std::size_t i = 0; i < p.head_w2.size(); ++i) {
            double h = p.head_b1[i];
            for (std::size_t j = 0; j < 4; ++j) h += p.head_w1(i, j) * logits[j];
            out += p.head_w2[i] * std::max(0.0, h);
        }
        CHECK(predict(ft, fi, fd, fused, p) == doctest::Approx(sigmoid(out)).epsilon(1e-12));
    }
}

TEST_CASE("batch permutation permutes predictions identically") {
    const Dims dims{16, 8, 6, 5, 4, 6, 4};
    ModelParams model = ModelParams::init(dims, 99);
    std::mt19937_64 rng(123);
    BatchInput in;
    for (int i = 0; i < 5; ++i) {
        in.h_text.push_back(testutil::random_unit(dims.d_t, rng));
        in.h_caption.push_back(testutil::random_unit(dims.d_t, rng));
        in.h_image.push_back(testutil::random_unit(dims.d_v, rng));
        in.d_sen.push_back(0.3 * i);
        in.labels.push_back(i % 2);
    }
    const AblationFlags flags;
    const Vec probs = forward_batch(model, in, flags, 0.1, 0.2).probs;
    BatchInput rev;
    for (int i = 4; i >= 0; --i) {
        rev.h_text.push_back(in.h_text[i]);
        rev.h_caption.push_back(in.h_caption[i]);
        rev.h_image.push_back(in.h_image[i]);
        rev.d_sen.push_back(in.d_sen[i]);
        rev.labels.push_back(in.labels[i]);
    }
    const Vec probs_rev = forward_batch(model, rev, flags, 0.1, 0.2).probs;
    for (int i = 0; i < 5; ++i) CHECK(probs_rev[i] == probs[4 - i]);
}

TEST_CASE("ablation contract: no_gdrm removes the discrepancy path") {
    const Dims dims{16, 8, 6, 5, 4, 6, 4};
    ModelParams model = ModelParams::init(dims, 7);
    std::mt19937_64 rng(8);
    BatchInput in;
    for (int i = 0; i < 3; ++i) {
        in.h_text.push_back(testutil::random_unit(dims.d_t, rng));
        in.h_caption.push_back(testutil::random_unit(dims.d_t, rng));
        in.h_image.push_back(testutil::random_unit(dims.d_v, rng));
        in.d_sen.push_back(0.5);
        in.labels.push_back(i % 2);
    }
    AblationFlags off;
    off.no_gdrm = true;
    ForwardCache c = forward_batch(model, in, off, 0.1, 0.2);
    for (const auto& fd : c.f_disc)
        for (double x : fd) CHECK(x == 0.0);
    for (const auto& l : c.logits) CHECK(l[2] == 0.0);

    // gradient through the discrepancy path is exactly zero
    ModelParams g = backward_batch(model, c, in, off, 0.1, 0.2);
    auto all_zero = [](const Vec& v) {
        for (double x : v)
            if (x != 0.0) return false;
        return true;
    };
    CHECK(all_zero(g.disc_mlp.w1.data));
    CHECK(all_zero(g.disc_mlp.b1));
    CHECK(all_zero(g.disc_mlp.w2.data));
    CHECK(all_zero(g.disc_mlp.b2));
    CHECK(all_zero(g.fusion.proj_disc.data));
    CHECK(all_zero(g.fusion.clf_disc.weight));
    CHECK(g.fusion.clf_disc.bias == 0.0);
    // head column for the discrepancy logit gets no gradient either
    for (std::size_t i = 0; i < dims.head_hidden; ++i) CHECK(g.fusion.head_w1(i, 2) == 0.0);
}

TEST_CASE("masking ablations zero single triple entries") {
    const Dims dims{16, 8, 6, 5, 4, 6, 4};
    ModelParams model = ModelParams::init(dims, 7);
    std::mt19937_64 rng(18);
    BatchInput in;
    in.h_text.push_back(testutil::random_unit(dims.d_t, rng));
    in.h_caption.push_back(testutil::random_unit(dims.d_t, rng));
    in.h_image.push_back(testutil::random_unit(dims.d_v, rng));
    in.d_sen.push_back(0.8);
    in.labels.push_back(1);
    in.h_text.push_back(testutil::random_unit(dims.d_t, rng));
    in.h_caption.push_back(testutil::random_unit(dims.d_t, rng));
    in.h_image.push_back(testutil::random_unit(dims.d_v, rng));
    in.d_sen.push_back(0.2);
    in.labels.push_back(0);

    AblationFlags none;
    AblationFlags semd_off;
    semd_off.no_semd = true;
    AblationFlags send_off;
    send_off.no_send = true;

    const auto full = forward_batch(model, in, none, 0.1, 0.2);
    const auto no_semd = forward_batch(model, in, semd_off, 0.1, 0.2);
    const auto no_send = forward_batch(model, in, send_off, 0.1, 0.2);
    for (int i = 0; i < 2; ++i) {
        CHECK(no_semd.triples[i].d_sem == 0.0);
        CHECK(no_semd.triples[i].d_sen == full.triples[i].d_sen);
        CHECK(no_semd.triples[i].d_fidelity == full.triples[i].d_fidelity);
        CHECK(no_send.triples[i].d_sen == 0.0);
        CHECK(no_send.triples[i].d_sem == full.triples[i].d_sem);
    }
}
