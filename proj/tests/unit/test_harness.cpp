#include "doctest.h"
#include "helpers.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/harness.hpp"

#include <set>

using namespace tdn;
using namespace tdn::harness;
using nlohmann::json;
using tdn::testing::TempDir;

namespace {

std::vector<int> balanced_labels(std::size_t per_class, int k) {
    std::vector<int> l;
    for (int c = 0; c < k; ++c) l.insert(l.end(), per_class, c);
    return l;
}

ExperimentConfig tiny(const std::string& name) {
    ExperimentConfig c = default_config(synth::Paradigm::SSVEP);
    c.name = name;
    c.synth.channels = 4;
    c.synth.samples = 256;
    c.synth.trials_per_class = 10;
    c.synth.signal_amp = 0.5;
    c.noise = {synth::NoiseKind::EMG, -5.0, 5.0};
    c.methods = {DecompMethod::PCA};
    c.train.epochs_pretrain = 3;
    c.train.epochs_collab = 2;
    c.train.batch_size = 8;
    c.folds = 2;
    c.seeds = {1, 2};
    return c;
}

}  // namespace

TEST_CASE("k-fold splits: sizes, disjointness, coverage, stratification") {
    const auto labels = balanced_labels(50, 2);
    const auto splits = kfold_splits(100, labels, 5, SplitRatio{}, RngSeed{1});
    REQUIRE(splits.size() == 5);
    std::set<std::size_t> all_tests;
    for (const auto& s : splits) {
        CHECK(s.train.size() == 60);
        CHECK(s.val.size() == 20);
        CHECK(s.test.size() == 20);
        std::set<std::size_t> seen;
        for (const auto* part : {&s.train, &s.val, &s.test}) {
            CHECK(std::is_sorted(part->begin(), part->end()));
            int zeros = 0;
            for (auto i : *part) {
                CHECK(seen.insert(i).second);
                zeros += labels[i] == 0 ? 1 : 0;
            }
            CHECK(zeros * 2 == static_cast<int>(part->size()));
        }
        CHECK(seen.size() == 100);
        all_tests.insert(s.test.begin(), s.test.end());
    }
    // Rotation by n_c / k moves the test block so the folds' test sets tile the data.
    CHECK(all_tests.size() == 100);
}

TEST_CASE("k-fold splits: uneven classes stay within one of proportional") {
    std::vector<int> labels = balanced_labels(23, 3);
    labels.resize(23 + 23 + 11);
    const auto splits = kfold_splits(labels.size(), labels, 4, SplitRatio{6, 2, 2}, RngSeed{2});
    for (const auto& s : splits) {
        for (int c = 0; c < 3; ++c) {
            const std::size_t nc = c == 2 ? 11 : 23;
            auto count = [&](const std::vector<std::size_t>& v) {
                return std::count_if(v.begin(), v.end(), [&](std::size_t i) { return labels[i] == c; });
            };
            CHECK(std::abs(count(s.train) - 0.6 * nc) <= 1.0);
            CHECK(std::abs(count(s.val) - 0.2 * nc) <= 1.0);
            CHECK(std::abs(count(s.test) - 0.2 * nc) <= 1.0);
        }
    }
}

TEST_CASE("k-fold splits: determinism and errors") {
    const auto labels = balanced_labels(20, 2);
    const auto a = kfold_splits(40, labels, 5, SplitRatio{}, RngSeed{3});
    const auto b = kfold_splits(40, labels, 5, SplitRatio{}, RngSeed{3});
    const auto c = kfold_splits(40, labels, 5, SplitRatio{}, RngSeed{4});
    for (std::size_t f = 0; f < a.size(); ++f) {
        CHECK(a[f].train == b[f].train);
        CHECK(a[f].test == b[f].test);
    }
    CHECK(a[0].test != c[0].test);
    std::vector<int> few = balanced_labels(20, 2);
    few.push_back(2);
    CHECK_THROWS_AS(kfold_splits(41, few, 5, SplitRatio{}, RngSeed{1}), ValidationError);
    CHECK_THROWS_AS(kfold_splits(40, labels, 1, SplitRatio{}, RngSeed{1}), ValidationError);
    CHECK_THROWS_AS(kfold_splits(39, labels, 5, SplitRatio{}, RngSeed{1}), ValidationError);
    CHECK_THROWS_AS(kfold_splits(40, labels, 5, SplitRatio{6, 0, 2}, RngSeed{1}), ValidationError);
}

TEST_CASE("random-mixing control") {
    const Trial x(tdn::testing::random_matrix(4, 128, 5), 128.0);
    DecompConfig d;
    d.method = DecompMethod::PCA;
    const ComponentSet cs = decompose(x, d, RngSeed{});
    const Trial ones = random_mixing_control(cs, [] { return 1.0; });
    CHECK((ones.data() - x.data()).norm() <= 1e-12 * x.data().norm());
    CHECK(random_mixing_control(cs, [] { return 0.0; }).data().norm() == 0.0);

    CHECK(random_mixing_control(cs, RngSeed{7}).data() == random_mixing_control(cs, RngSeed{7}).data());
    CHECK(random_mixing_control(cs, RngSeed{7}).data() != random_mixing_control(cs, RngSeed{8}).data());

    // E[u] = 1/2, so the Monte Carlo mean approaches X / 2.
    Mat acc = Mat::Zero(4, 128);
    const int draws = 4000;
    for (int i = 0; i < draws; ++i) acc += random_mixing_control(cs, RngSeed{static_cast<std::uint64_t>(i)}).data();
    acc /= draws;
    CHECK((acc - 0.5 * x.data()).norm() / (0.5 * x.data().norm()) < 0.03);
}

TEST_CASE("component probe binning") {
    synth::SynthConfig sc;
    sc.channels = 4;
    sc.samples = 256;
    sc.trials_per_class = 15;
    sc.seed = RngSeed{2};
    const TrialSet data = synth::gen_dataset(sc);
    train::TrainConfig tcfg;
    tcfg.epochs_pretrain = 2;
    tcfg.seed = RngSeed{1};
    tcfg.decomposition.method = DecompMethod::PCA;
    nn::ModelParams params = train::pretrain(data, tcfg).params;
    ProbeConfig pc;
    pc.enabled = true;
    pc.method = DecompMethod::PCA;
    pc.epochs = 2;
    pc.folds = 3;
    pc.min_bin_size = 5;

    SUBCASE("constant selector puts everything in one bin") {
        auto& sel = params.mutable_block(nn::Block::Selector);
        for (auto& v : sel.values) v = 0.0;
        const ProbeTable t = component_probe(data, params, tcfg.decomposition, pc, tcfg, RngSeed{3});
        REQUIRE(t.bins.size() == 1);
        CHECK(t.bins[0].count + t.excluded == t.total_components);
        CHECK(t.bins[0].p_lo == t.bins[0].p_hi);
        CHECK(t.bins[0].accuracy.has_value());
        CHECK_FALSE(t.spearman.has_value());
    }
    SUBCASE("initialized selector spreads components over bins") {
        const ProbeTable t = component_probe(data, params, tcfg.decomposition, pc, tcfg, RngSeed{3});
        std::size_t counted = 0;
        double prev_hi = -1.0;
        for (const auto& b : t.bins) {
            counted += b.count;
            CHECK(b.p_lo <= b.p_hi);
            CHECK(b.p_lo >= prev_hi);
            prev_hi = b.p_hi;
            CHECK(b.skipped == !b.accuracy.has_value());
            CHECK(b.skipped == (b.count < pc.min_bin_size));
        }
        CHECK(counted + t.excluded == t.total_components);
        CHECK(t.total_components == data.size() * 5);
        CHECK(t.bins.size() > 1);
        // Identical inputs, identical table.
        const ProbeTable again = component_probe(data, params, tcfg.decomposition, pc, tcfg, RngSeed{3});
        CHECK(again.spearman == t.spearman);
    }
}

TEST_CASE("config JSON round trip and strict keys") {
    const ExperimentConfig c = tiny("roundtrip");
    const json j = to_json(c);
    const ExperimentConfig back = config_from_json(j);
    CHECK(to_json(back) == j);

    CHECK(default_config(synth::Paradigm::SSVEP).train.epochs_pretrain == 500);
    CHECK(default_config(synth::Paradigm::ERD).train.epochs_collab == 50);
    const ExperimentConfig d = config_from_json(json::object());
    CHECK(d.ratio.train == 6.0);
    CHECK(d.folds == 5);
    CHECK(d.train.batch_size == 32);
    CHECK(d.train.lr_selector == 0.001);
    CHECK(d.train.cosine_alpha == 0.9);

    for (const char* bad : {R"({"epochs": 3})", R"({"train": {"epoch": 3}})", R"({"data": {"chans": 3}})",
                            R"({"noise": {"snr": 1}})", R"({"probe": {"bin": 3}})", R"({"decomposition": {"tol": 1}})"}) {
        CAPTURE(bad);
        CHECK_THROWS_WITH_AS(config_from_json(json::parse(bad)), doctest::Contains("unknown key"), ValidationError);
    }
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"methods": ["pca", "pca"]})")), ValidationError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"ratio": [6, 2]})")), ValidationError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"folds": 1})")), ValidationError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"methods": ["pca"], "probe": {"enabled": true, "method": "ica"}})")),
                    ValidationError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"train": {"batch_size": "big"}})")), ValidationError);
    CHECK_THROWS_AS(load_config("/nonexistent.json"), IoError);
}

TEST_CASE("shipped configs load") {
    for (const char* name : {"ssvep_default.json", "erd_default.json", "acceptance_erd_eog.json",
                             "acceptance_ssvep_emg.json", "smoke.json"}) {
        CAPTURE(name);
        CHECK_NOTHROW(load_config(std::string(TDN_SOURCE_DIR) + "/configs/" + name));
    }
}

TEST_CASE("experiment reports are deterministic") {
    const ExperimentConfig c = tiny("determinism");
    const EvalReport a = run_experiment(c);
    const EvalReport b = run_experiment(c);
    CHECK_FALSE(a.failed);
    CHECK(a.folds.size() == 4);
    CHECK(a.to_json(false).dump() == b.to_json(false).dump());
    CHECK(a.to_json(false).contains("created_at") == false);
    CHECK(a.to_json(true).contains("created_at"));
    CHECK(a.config_hash == hash_json(to_json(c)));

    const auto& s = a.summary(DecompMethod::PCA);
    CHECK(s.seed_acc_baseline.size() == 2);
    CHECK(s.snr_clean_noisy.has_value());
    REQUIRE(s.fundamental_noisy.has_value());
    for (const auto& f : a.folds) {
        CHECK(f.ok);
        CHECK(f.n_train + f.n_val + f.n_test == 20);
    }

    TempDir dir;
    a.write(dir.path);
    for (const char* f : {"report.json", "summary.csv", "folds.csv", "psd_pca.csv"}) {
        CAPTURE(f);
        CHECK(std::filesystem::exists(dir.path / f));
    }
}

TEST_CASE("an all-pass selector reproduces the noisy baseline") {
    ExperimentConfig c = tiny("all-pass");
    c.noise.kind = synth::NoiseKind::None;
    c.seeds = {3};
    c.train.epochs_collab = 0;
    c.train.selector_init_bias = 40.0;
    const EvalReport r = run_experiment(c);
    REQUIRE_FALSE(r.failed);
    for (const auto& f : r.folds) {
        REQUIRE(f.methods.size() == 1);
        const auto& m = f.methods[0];
        CHECK(m.mean_retention == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(m.denoised.report.accuracy == f.baseline.report.accuracy);
        CHECK(m.denoised.vs_raw.snr_db > 150.0);
    }
}

TEST_CASE("aborted folds are recorded, strict mode fails the report") {
    ExperimentConfig c = tiny("abort");
    c.methods = {DecompMethod::ICA};
    c.train.decomposition.ica_strict = true;
    c.train.decomposition.ica_max_iter = 1;
    c.train.decomposition.ica_tol = 1e-12;
    const EvalReport r = run_experiment(c);
    CHECK(r.failed);
    CHECK(r.aborted == r.folds.size());
    for (const auto& f : r.folds) {
        CHECK_FALSE(f.ok);
        CHECK(f.error.find("FastICA") != std::string::npos);
    }
    CHECK(r.to_json()["status"] == "failed");
    c.strict = false;
    CHECK_FALSE(run_experiment(c).failed);
}
