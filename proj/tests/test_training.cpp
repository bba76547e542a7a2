#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gdcnet/checkpoint.hpp"
#include "gdcnet/losses.hpp"
#include "gdcnet/metrics.hpp"
#include "gdcnet/runner.hpp"
#include "gdcnet/train.hpp"
#include "synthetic.hpp"
#include "testutil.hpp"

using namespace gdcnet;

TEST_CASE("bce loss oracles") {
    CHECK(bce_loss({0.5}, {1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss({1.0 - 1e-7}, {1}) == doctest::Approx(1e-7).epsilon(1e-2));
    CHECK(bce_loss({0.9, 0.2}, {1, 0}) ==
          doctest::Approx((-std::log(0.9) - std::log(0.8)) / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(bce_loss({0.5, 0.5}, {1}), ShapeError);
    // clamping keeps the loss finite at the boundaries
    CHECK(std::isfinite(bce_loss({0.0, 1.0}, {1, 0})));
}

TEST_CASE("total loss combines the two terms") {
    CHECK(total_loss(1.0, 0.0, 0.1) == 1.0);
    CHECK(total_loss(0.7, 0.2, 0.1) == doctest::Approx(0.72).epsilon(1e-12));
    CHECK(total_loss(0.5, 123.0, 0.0) == 0.5);
    CHECK_THROWS_AS(total_loss(1.0, 1.0, -0.1), ConfigError);
}

TEST_CASE("ablation flag parsing") {
    auto f = parse_ablation_flags({"no_gdrm", "no_send"});
    CHECK(f.no_gdrm);
    CHECK(f.no_send);
    CHECK_FALSE(f.no_semd);
    CHECK_THROWS_AS(parse_ablation_flags({"no_everything"}), ConfigError);
    AblationFlags empty = parse_ablation_flags({});
    CHECK_FALSE(empty.no_gdrm);
}

namespace {

BatchInput random_batch(const Dims& dims, std::size_t b, std::mt19937_64& rng) {
    BatchInput in;
    for (std::size_t i = 0; i < b; ++i) {
        in.h_text.push_back(testutil::random_unit(dims.d_t, rng));
        in.h_caption.push_back(testutil::random_unit(dims.d_t, rng));
        in.h_image.push_back(testutil::random_unit(dims.d_v, rng));
        in.d_sen.push_back(0.1 + 0.3 * static_cast<double>(i % 4));
        in.labels.push_back(static_cast<double>(i % 2));
    }
    return in;
}

}  // namespace

TEST_CASE("end-to-end gradient of the joint objective matches finite differences") {
    const Dims dims{12, 10, 6, 5, 4, 6, 4};
    const double alpha = 0.1, margin = 0.2;
    const AblationFlags flags;
    std::mt19937_64 rng(2024);

    // scan seeds for a configuration clear of hinge/rectifier kinks
    ModelParams model = ModelParams::init(dims, 31);
    BatchInput in = random_batch(dims, 4, rng);
    ForwardCache cache = forward_batch(model, in, flags, alpha, margin);
    for (std::uint64_t seed = 32; !testutil::away_from_kinks(cache, margin) && seed < 200; ++seed) {
        model = ModelParams::init(dims, seed);
        in = random_batch(dims, 4, rng);
        cache = forward_batch(model, in, flags, alpha, margin);
    }
    REQUIRE(testutil::away_from_kinks(cache, margin));
    ModelParams grads = backward_batch(model, cache, in, flags, alpha, margin);

    auto loss_fn = [&](const ModelParams& p) {
        return forward_batch(p, in, flags, alpha, margin).loss_total;
    };
    auto failures = testutil::fd_check(model, grads, loss_fn, rng, 200);
    for (const auto& f : failures) {
        CAPTURE(f.tensor);
        CAPTURE(f.index);
        CAPTURE(f.analytic);
        CAPTURE(f.numeric);
        CHECK(f.rel_err <= 1e-3);
    }
    CHECK(failures.empty());
}

TEST_CASE("gradient check holds under each ablation") {
    const Dims dims{12, 10, 6, 5, 4, 6, 4};
    std::mt19937_64 rng(77);
    for (const char* flag : {"no_gdrm", "no_semd", "no_send", "symmetric_contrastive"}) {
        const AblationFlags flags = parse_ablation_flags({flag});
        ModelParams model = ModelParams::init(dims, 5);
        BatchInput in = random_batch(dims, 4, rng);
        ForwardCache cache = forward_batch(model, in, flags, 0.1, 0.2);
        if (!testutil::away_from_kinks(cache, 0.2)) continue;
        ModelParams grads = backward_batch(model, cache, in, flags, 0.1, 0.2);
        auto loss_fn = [&](const ModelParams& p) {
            return forward_batch(p, in, flags, 0.1, 0.2).loss_total;
        };
        auto failures = testutil::fd_check(model, grads, loss_fn, rng, 80);
        CAPTURE(flag);
        CHECK(failures.empty());
    }
}

TEST_CASE("alpha=0 leaves projection heads without contrastive gradients") {
    const Dims dims{12, 10, 6, 5, 4, 6, 4};
    std::mt19937_64 rng(99);
    ModelParams model = ModelParams::init(dims, 3);
    BatchInput in = random_batch(dims, 4, rng);
    const AblationFlags flags;

    ForwardCache c0 = forward_batch(model, in, flags, 0.0, 0.2);
    ModelParams g0 = backward_batch(model, c0, in, flags, 0.0, 0.2);
    ForwardCache c1 = forward_batch(model, in, flags, 0.1, 0.2);
    ModelParams g1 = backward_batch(model, c1, in, flags, 0.1, 0.2);

    // the difference g1-g0 is exactly alpha * dL_cont; with alpha=0 the
    // similarity path contributes nothing
    bool contrastive_active = false;
    const std::size_t b = c1.sim.batch_size;
    for (std::size_t i = 0; i < b && !contrastive_active; ++i)
        for (std::size_t j = 0; j < b; ++j)
            if (j != i && 0.2 + c1.sim.scores(i, j) - c1.sim.scores(i, i) > 0)
                contrastive_active = true;
    REQUIRE(contrastive_active);

    // gradients for non-encoder parameters agree exactly
    CHECK(g0.fusion.head_w1.data == g1.fusion.head_w1.data);
    CHECK(g0.disc_mlp.w1.data == g1.disc_mlp.w1.data);
    // encoder heads differ once the contrastive term is on
    CHECK(g0.text_head.weight.data != g1.text_head.weight.data);
}

TEST_CASE("gradient clipping caps the global norm") {
    const Dims dims{12, 10, 6, 5, 4, 6, 4};
    ModelParams grads = ModelParams::init(dims, 1);
    double sq = 0.0;
    grads.visit([&](const std::string&, const Vec& v) {
        for (double x : v) sq += x * x;
    });
    const double before = std::sqrt(sq);
    REQUIRE(before > 0.5);
    const double reported = clip_gradients(grads, 0.5);
    CHECK(reported == doctest::Approx(before).epsilon(1e-12));
    double sq_after = 0.0;
    grads.visit([&](const std::string&, const Vec& v) {
        for (double x : v) sq_after += x * x;
    });
    CHECK(std::sqrt(sq_after) == doctest::Approx(0.5).epsilon(1e-9));

    // under the cap: untouched
    ModelParams small = grads;
    const double n = clip_gradients(small, 10.0);
    CHECK(n == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("train_epoch is deterministic and clips every step") {
    testutil::SyntheticSpec spec;
    spec.n = 16;
    spec.d_t = 32;
    spec.d_v = 8;
    auto syn = testutil::make_synthetic(spec);
    Dims dims{spec.d_t, spec.d_v, 8, 6, 6, 8, 4};
    EncodedDataset data = encode_dataset(syn.manifest, dims, syn.lexicon);

    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 3;
    cfg.seed = 11;

    auto run = [&] {
        ModelParams model = ModelParams::init(dims, cfg.seed);
        AdamOptimizer opt(cfg.lr_task, cfg.weight_decay);
        std::vector<double> losses, postclip;
        for (std::size_t e = 0; e < cfg.epochs; ++e) {
            EpochStats s = train_epoch(model, opt, data, cfg, e);
            losses.insert(losses.end(), s.batch_losses.begin(), s.batch_losses.end());
            postclip.insert(postclip.end(), s.postclip_grad_norms.begin(),
                            s.postclip_grad_norms.end());
        }
        return std::make_pair(losses, postclip);
    };
    auto [l1, c1] = run();
    auto [l2, c2] = run();
    CHECK(l1 == l2);  // bit-identical loss traces
    for (double n : c1) CHECK(n <= 5.0 + 1e-6);
}

TEST_CASE("train_epoch rejects an empty train split and non-finite losses") {
    testutil::SyntheticSpec spec;
    spec.n = 8;
    spec.d_t = 32;
    spec.d_v = 8;
    auto syn = testutil::make_synthetic(spec);
    for (auto& s : syn.manifest.samples) s.split = Split::test;
    syn.manifest.recount();
    Dims dims{spec.d_t, spec.d_v, 8, 6, 6, 8, 4};
    EncodedDataset data = encode_dataset(syn.manifest, dims, syn.lexicon);
    TrainConfig cfg;
    cfg.batch_size = 4;
    ModelParams model = ModelParams::init(dims, 1);
    AdamOptimizer opt(cfg.lr_task, cfg.weight_decay);
    CHECK_THROWS_AS(train_epoch(model, opt, data, cfg, 0), ConfigError);
}

TEST_CASE("loss decreases on the separable synthetic set") {
    testutil::SyntheticSpec spec;
    spec.n = 32;
    spec.d_t = 64;
    spec.d_v = 16;
    auto syn = testutil::make_synthetic(spec);
    Dims dims{spec.d_t, spec.d_v, 16, 16, 16, 16, 16};
    EncodedDataset data = encode_dataset(syn.manifest, dims, syn.lexicon);

    TrainConfig cfg;  // published defaults
    cfg.epochs = 10;
    ModelParams model = ModelParams::init(dims, cfg.seed);
    AdamOptimizer opt(cfg.lr_task, cfg.weight_decay);
    std::vector<double> epoch_losses;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        epoch_losses.push_back(train_epoch(model, opt, data, cfg, e).mean_loss);
    }
    // monotone in a 5-epoch moving average
    auto avg = [&](std::size_t start) {
        double acc = 0;
        for (std::size_t i = start; i < start + 5; ++i) acc += epoch_losses[i];
        return acc / 5.0;
    };
    for (std::size_t s = 0; s + 6 <= epoch_losses.size(); ++s) CHECK(avg(s + 1) <= avg(s));
}

TEST_CASE("checkpoint round trip is bit exact") {
    const Dims dims{12, 10, 6, 5, 4, 6, 4};
    Checkpoint ckpt;
    ckpt.params = ModelParams::init(dims, 17);
    ckpt.epoch = 3;
    ckpt.config.seed = 17;
    ckpt.metric_history.push_back({{"epoch", 0}, {"mean_loss", 0.7}});

    const auto path = (std::filesystem::temp_directory_path() / "gdcnet_ckpt.json").string();
    save_checkpoint(ckpt, path);
    Checkpoint loaded = load_checkpoint(path);

    std::vector<Vec> orig, restored;
    ckpt.params.visit([&](const std::string&, const Vec& v) { orig.push_back(v); });
    loaded.params.visit([&](const std::string&, const Vec& v) { restored.push_back(v); });
    REQUIRE(orig.size() == restored.size());
    for (std::size_t i = 0; i < orig.size(); ++i) CHECK(orig[i] == restored[i]);
    CHECK(loaded.epoch == 3);
    CHECK(loaded.config.seed == 17);

    // predictions from the restored model are bit-identical
    std::mt19937_64 rng(55);
    BatchInput in = random_batch(dims, 4, rng);
    const AblationFlags flags;
    const Vec p1 = forward_batch(ckpt.params, in, flags, 0.1, 0.2).probs;
    const Vec p2 = forward_batch(loaded.params, in, flags, 0.1, 0.2).probs;
    CHECK(p1 == p2);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects a schema version mismatch") {
    const Dims dims{12, 10, 6, 5, 4, 6, 4};
    Checkpoint ckpt;
    ckpt.params = ModelParams::init(dims, 1);
    nlohmann::json j = checkpoint_to_json(ckpt);
    j["schema_version"] = 999;
    CHECK_THROWS_AS(checkpoint_from_json(j), ParseError);
}
