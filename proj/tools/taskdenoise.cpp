// taskdenoise: synth | decompose | train | denoise | evaluate | probe | report

#include "taskdenoise/checkpoint.hpp"
#include "taskdenoise/error.hpp"
#include "taskdenoise/harness.hpp"
#include "taskdenoise/io.hpp"
#include "taskdenoise/synth.hpp"
#include "taskdenoise/training.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace tdn;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string method;
    std::string arch;
    int jobs = 0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "experiment config (JSON)");
    app->add_option("--seed", c.seed, "seed");
    app->add_option("--out", c.out, "output path");
    app->add_option("--method", c.method, "pca | svd | ica");
    app->add_option("--arch", c.arch, "band_power_mlp | compact_cnn");
    app->add_option("--jobs", c.jobs, "parallel fold jobs");
}

harness::ExperimentConfig resolve(const Common& c, const std::string& paradigm = "ssvep") {
    auto cfg = c.config.empty() ? harness::default_config(synth::parse_paradigm(paradigm)) : harness::load_config(c.config);
    if (c.seed) cfg.seeds = {*c.seed};
    if (!c.method.empty()) cfg.methods = {parse_decomp_method(c.method)};
    if (!c.arch.empty()) cfg.train.arch = nn::parse_arch(c.arch);
    if (c.jobs > 0) cfg.jobs = c.jobs;
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (cfg.probe.enabled &&
        std::find(cfg.methods.begin(), cfg.methods.end(), cfg.probe.method) == cfg.methods.end()) {
        cfg.probe.method = cfg.methods.front();
    }
    cfg.validate();
    return cfg;
}

void setup_logging() {
    spdlog::set_level(spdlog::level::warn);
    if (const char* lv = std::getenv("TASKDENOISE_LOG")) spdlog::set_level(spdlog::level::from_str(lv));
}

void print_summary(const json& report) {
    std::printf("%-6s %-14s %9s %9s %12s %12s\n", "method", "condition", "accuracy", "macro_f1", "snr_clean_db",
                "mse_clean");
    auto cell = [](const json& v) { return v.is_number() ? v.get<double>() : std::nan(""); };
    for (const auto& a : report.at("aggregate")) {
        const std::string m = a.at("method");
        const char* conds[] = {"baseline", "denoised", "control"};
        const char* snr_keys[] = {"noisy", "denoised", "control"};
        for (int i = 0; i < 3; ++i) {
            const json& mse = a.at("mse_vs_clean");
            const double mse_v = i < 2 ? cell(mse.at(snr_keys[i])) : std::nan("");
            std::printf("%-6s %-14s %9.4f %9.4f %12.3f %12.5f\n", m.c_str(), i == 2 ? "random_mixing" : conds[i],
                        cell(a.at("accuracy").at(conds[i])), cell(a.at("macro_f1").at(conds[i])),
                        cell(a.at("snr_vs_clean").at(snr_keys[i])), mse_v);
        }
        const json& t = a.at("tests").at("acc_denoised_vs_baseline");
        if (t.is_object()) {
            std::printf("%-6s wilcoxon denoised vs baseline accuracy: p = %.4g (n = %d, %s)\n", m.c_str(),
                        cell(t.at("p_value")), t.at("n_effective").get<int>(), t.at("method").get<std::string>().c_str());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Task-supervised component selection for multichannel signal denoising"};
    app.require_subcommand(1);

    Common c;

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic labeled dataset and its contaminated copy");
    add_common(synth_cmd, c);
    std::string paradigm = "ssvep";
    std::string noise = "none";
    synth_cmd->add_option("--paradigm", paradigm, "ssvep | erd");
    synth_cmd->add_option("--noise", noise, "none | eog | emg");

    auto* decomp_cmd = app.add_subcommand("decompose", "decompose every trial and list component energies");
    add_common(decomp_cmd, c);
    std::string input;
    decomp_cmd->add_option("--in", input, "trial set (TDNSIG01)")->required();

    auto* train_cmd = app.add_subcommand("train", "pretrain and collaboratively train on a trial set");
    add_common(train_cmd, c);
    std::string val_input;
    train_cmd->add_option("--in", input, "training trial set")->required();
    train_cmd->add_option("--val", val_input, "validation trial set");

    auto* denoise_cmd = app.add_subcommand("denoise", "denoise a trial set with a trained model");
    add_common(denoise_cmd, c);
    std::string model_path;
    denoise_cmd->add_option("--in", input, "trial set")->required();
    denoise_cmd->add_option("--model", model_path, "model checkpoint (TDNMDL01)")->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "run a cross-validated experiment and write an EvalReport");
    add_common(eval_cmd, c);
    eval_cmd->add_option("--paradigm", paradigm, "paradigm used when no config is given");

    auto* probe_cmd = app.add_subcommand("probe", "component-level probe of a trained selector");
    add_common(probe_cmd, c);
    probe_cmd->add_option("--in", input, "trial set")->required();
    probe_cmd->add_option("--model", model_path, "model checkpoint")->required();

    auto* report_cmd = app.add_subcommand("report", "print the method x metric table of an EvalReport");
    report_cmd->add_option("--in", input, "report.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const RngSeed seed{c.seed.value_or(1)};
        if (synth_cmd->parsed()) {
            auto cfg = resolve(c, paradigm);
            if (c.config.empty()) cfg.noise.kind = synth::parse_noise_kind(noise);
            cfg.synth.seed = seed;
            const fs::path dir = c.out.empty() ? fs::path("data") : fs::path(c.out);
            fs::create_directories(dir);
            const TrialSet clean = synth::gen_dataset(cfg.synth);
            const auto cont = synth::contaminate(clean, cfg.noise, derive(seed, 2));
            io::save_trialset(clean, dir / "clean.tdn");
            io::save_trialset(cont.noisy, dir / "noisy.tdn");
            std::ofstream snr(dir / "contamination.csv");
            snr << "trial,label,snr_db,lambda\n";
            for (std::size_t i = 0; i < clean.size(); ++i) {
                snr << i << ',' << clean.label(i) << ',' << (cont.snr_db.empty() ? 0.0 : cont.snr_db[i]) << ','
                    << (cont.lambda.empty() ? 0.0 : cont.lambda[i]) << '\n';
            }
            std::printf("wrote %zu trials to %s\n", clean.size(), dir.string().c_str());
        } else if (decomp_cmd->parsed()) {
            auto cfg = resolve(c);
            DecompConfig d = cfg.train.decomposition;
            d.method = cfg.methods.front();
            const TrialSet ts = io::load_trialset(input);
            const auto comps = train::decompose_all(ts, d, seed);
            std::ostream* os = &std::cout;
            std::ofstream file;
            if (!c.out.empty()) {
                file.open(c.out);
                if (!file) throw IoError("cannot write " + c.out);
                os = &file;
            }
            *os << "trial,component,residual,energy,converged,iterations\n";
            for (std::size_t i = 0; i < comps.size(); ++i) {
                const auto e = comps[i].energies();
                for (std::size_t k = 0; k < e.size(); ++k) {
                    *os << i << ',' << k << ',' << (k + 1 == e.size()) << ',' << e[k] << ','
                        << comps[i].convergence().converged << ',' << comps[i].convergence().iterations << '\n';
                }
            }
        } else if (train_cmd->parsed()) {
            auto cfg = resolve(c);
            train::TrainConfig t = cfg.train;
            t.decomposition.method = cfg.methods.front();
            t.seed = seed;
            const TrialSet tr = io::load_trialset(input);
            std::optional<TrialSet> va;
            if (!val_input.empty()) va = io::load_trialset(val_input);
            const auto res = train::train(tr, t, va ? &*va : nullptr);
            const fs::path out = c.out.empty() ? fs::path("model.tdm") : fs::path(c.out);
            nn::save_params(res.params, out);
            fs::path hist = out;
            hist.replace_extension(".history.csv");
            res.history.write_csv(hist);
            std::printf("saved %s (best collab epoch %d)\n", out.string().c_str(), res.history.best_epoch);
        } else if (denoise_cmd->parsed()) {
            auto cfg = resolve(c);
            DecompConfig d = cfg.train.decomposition;
            d.method = cfg.methods.front();
            const auto params = nn::load_params(model_path);
            const TrialSet ts = io::load_trialset(input);
            std::vector<Trial> den;
            const fs::path out = c.out.empty() ? fs::path("denoised.tdn") : fs::path(c.out);
            fs::path probs = out;
            probs.replace_extension(".probabilities.csv");
            std::ofstream pcsv(probs);
            pcsv << "trial,component,probability\n";
            for (std::size_t i = 0; i < ts.size(); ++i) {
                auto r = train::denoise(params, ts.trial(i), d, derive(seed, i));
                for (std::size_t k = 0; k < r.probabilities.size(); ++k) pcsv << i << ',' << k << ',' << r.probabilities[k] << '\n';
                den.push_back(std::move(r.reconstructed));
            }
            io::save_trialset(ts.with_trials(std::move(den)), out);
            std::printf("wrote %s\n", out.string().c_str());
        } else if (eval_cmd->parsed()) {
            const auto cfg = resolve(c, paradigm);
            const auto rep = harness::run_experiment(cfg);
            rep.write(cfg.output_dir);
            print_summary(rep.to_json());
            std::printf("report written to %s\n", cfg.output_dir.string().c_str());
            if (rep.failed) {
                std::fprintf(stderr, "%zu fold(s) aborted; see report.json\n", rep.aborted);
                return 1;
            }
        } else if (probe_cmd->parsed()) {
            auto cfg = resolve(c);
            DecompConfig d = cfg.train.decomposition;
            d.method = cfg.methods.front();
            const auto params = nn::load_params(model_path);
            const TrialSet ts = io::load_trialset(input);
            const auto table = harness::component_probe(ts, params, d, cfg.probe, cfg.train, seed);
            std::printf("bin,p_lo,p_hi,count,skipped,accuracy\n");
            for (const auto& b : table.bins) {
                std::printf("%d,%.6f,%.6f,%zu,%d,%s\n", b.bin, b.p_lo, b.p_hi, b.count, b.skipped ? 1 : 0,
                            b.accuracy ? std::to_string(*b.accuracy).c_str() : "");
            }
            if (table.spearman) {
                std::printf("spearman,%.6f\n", *table.spearman);
            } else {
                std::printf("spearman,\n");
            }
        } else if (report_cmd->parsed()) {
            std::ifstream in(input);
            if (!in) throw IoError("cannot open " + input);
            print_summary(json::parse(in));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
