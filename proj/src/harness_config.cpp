#include "taskdenoise/harness.hpp"

#include "taskdenoise/error.hpp"

#include <fstream>
#include <set>

namespace tdn::harness {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) throw ValidationError(std::string(where) + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (auto key : keys) known = known || k == key;
        if (!known) throw ValidationError(std::string(where) + ": unknown key '" + k + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config key '") + key + "': " + e.what());
    }
}

synth::SynthConfig synth_from_json(const json& j, synth::SynthConfig s) {
    read(j, "channels", s.channels);
    read(j, "samples", s.samples);
    read(j, "fs", s.fs);
    read(j, "num_classes", s.num_classes);
    read(j, "trials_per_class", s.trials_per_class);
    read(j, "stimulus_freqs", s.stimulus_freqs);
    read(j, "signal_amp", s.signal_amp);
    read(j, "background_pink_noise_amp", s.background_pink_noise_amp);
    return s;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!(ratio.train > 0.0 && ratio.val > 0.0 && ratio.test > 0.0)) {
        throw ValidationError("split ratio components must be positive");
    }
    if (folds < 2) throw ValidationError("need at least 2 folds");
    if (seeds.empty()) throw ValidationError("need at least one seed");
    if (methods.empty()) throw ValidationError("need at least one decomposition method");
    if (std::set<DecompMethod>(methods.begin(), methods.end()).size() != methods.size()) {
        throw ValidationError("decomposition methods listed twice");
    }
    if (jobs < 1) throw ValidationError("jobs must be >= 1");
    train.validate();
    noise.validate();
    if (data_file.empty()) synth.validate();
    if (probe.enabled) {
        if (probe.bins < 2 || probe.folds < 2 || probe.epochs < 1) throw ValidationError("probe: bad bins/folds/epochs");
        if (probe.min_bin_size < static_cast<std::size_t>(probe.folds)) {
            throw ValidationError("probe: min_bin_size must be at least the number of folds");
        }
        if (std::find(methods.begin(), methods.end(), probe.method) == methods.end()) {
            throw ValidationError("probe method must be one of the experiment methods");
        }
    }
}

ExperimentConfig default_config(synth::Paradigm paradigm) {
    ExperimentConfig c;
    c.synth.paradigm = paradigm;
    const int epochs = paradigm == synth::Paradigm::SSVEP ? 500 : 50;
    c.train.epochs_pretrain = epochs;
    c.train.epochs_collab = epochs;
    return c;
}

ExperimentConfig config_from_json(const json& j) {
    reject_unknown(j, "config", {"name", "data", "noise", "methods", "arch", "train", "decomposition", "folds", "ratio",
                                 "seeds", "probe", "strict", "jobs", "output_dir"});
    const json data = j.value("data", json::object());
    reject_unknown(data, "data", {"source", "path", "paradigm", "channels", "samples", "fs", "num_classes",
                                  "trials_per_class", "stimulus_freqs", "signal_amp", "background_pink_noise_amp"});
    const std::string source = data.value("source", "synth");
    if (source != "synth" && source != "file") throw ValidationError("data.source must be 'synth' or 'file'");

    ExperimentConfig c = default_config(synth::parse_paradigm(data.value("paradigm", "ssvep")));
    c.synth = synth_from_json(data, c.synth);
    if (source == "file") {
        if (!data.contains("path")) throw ValidationError("data.path required for a file source");
        c.data_file = data.at("path").get<std::string>();
    }
    read(j, "name", c.name);

    if (j.contains("noise")) {
        const json& n = j.at("noise");
        reject_unknown(n, "noise", {"kind", "snr_lo", "snr_hi"});
        c.noise.kind = synth::parse_noise_kind(n.value("kind", "none"));
        read(n, "snr_lo", c.noise.snr_lo);
        read(n, "snr_hi", c.noise.snr_hi);
    }
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods")) c.methods.push_back(parse_decomp_method(m.get<std::string>()));
    }
    if (j.contains("arch")) c.train.arch = nn::parse_arch(j.at("arch").get<std::string>());
    if (j.contains("train")) {
        const json& t = j.at("train");
        reject_unknown(t, "train", {"epochs_pretrain", "epochs_collab", "batch_size", "lr_selector", "lr_proxy",
                                    "clip_threshold", "cosine_alpha", "weight_decay", "max_norm", "selector_init_bias",
                                    "full_batch_descent_mode"});
        read(t, "epochs_pretrain", c.train.epochs_pretrain);
        read(t, "epochs_collab", c.train.epochs_collab);
        read(t, "batch_size", c.train.batch_size);
        read(t, "lr_selector", c.train.lr_selector);
        read(t, "lr_proxy", c.train.lr_proxy);
        read(t, "clip_threshold", c.train.clip_threshold);
        read(t, "cosine_alpha", c.train.cosine_alpha);
        read(t, "weight_decay", c.train.weight_decay);
        read(t, "max_norm", c.train.max_norm);
        read(t, "selector_init_bias", c.train.selector_init_bias);
        read(t, "full_batch_descent_mode", c.train.full_batch_descent_mode);
    }
    if (j.contains("decomposition")) {
        const json& d = j.at("decomposition");
        reject_unknown(d, "decomposition", {"ica_max_iter", "ica_tol", "ica_nonlinearity", "center", "ica_strict"});
        read(d, "ica_max_iter", c.train.decomposition.ica_max_iter);
        read(d, "ica_tol", c.train.decomposition.ica_tol);
        if (d.contains("ica_nonlinearity")) {
            c.train.decomposition.ica_nonlinearity = parse_ica_nonlinearity(d.at("ica_nonlinearity").get<std::string>());
        }
        read(d, "center", c.train.decomposition.center);
        read(d, "ica_strict", c.train.decomposition.ica_strict);
    }
    read(j, "folds", c.folds);
    if (j.contains("ratio")) {
        const auto r = j.at("ratio").get<std::vector<double>>();
        if (r.size() != 3) throw ValidationError("ratio needs three entries (train, val, test)");
        c.ratio = {r[0], r[1], r[2]};
    }
    read(j, "seeds", c.seeds);
    if (j.contains("probe")) {
        const json& p = j.at("probe");
        reject_unknown(p, "probe", {"enabled", "method", "bins", "folds", "min_bin_size", "epochs"});
        read(p, "enabled", c.probe.enabled);
        if (p.contains("method")) c.probe.method = parse_decomp_method(p.at("method").get<std::string>());
        read(p, "bins", c.probe.bins);
        read(p, "folds", c.probe.folds);
        read(p, "min_bin_size", c.probe.min_bin_size);
        read(p, "epochs", c.probe.epochs);
    }
    read(j, "strict", c.strict);
    read(j, "jobs", c.jobs);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    c.validate();
    return c;
}

json to_json(const ExperimentConfig& c) {
    json data;
    if (c.data_file.empty()) {
        data = {{"source", "synth"},
                {"paradigm", synth::to_string(c.synth.paradigm)},
                {"channels", c.synth.channels},
                {"samples", c.synth.samples},
                {"fs", c.synth.fs},
                {"num_classes", c.synth.num_classes},
                {"trials_per_class", c.synth.trials_per_class},
                {"stimulus_freqs", c.synth.resolved_freqs()},
                {"signal_amp", c.synth.signal_amp},
                {"background_pink_noise_amp", c.synth.background_pink_noise_amp}};
        if (c.synth.paradigm == synth::Paradigm::ERD) data.erase("stimulus_freqs");
    } else {
        data = {{"source", "file"}, {"path", c.data_file.string()}, {"paradigm", synth::to_string(c.synth.paradigm)}};
    }
    json methods = json::array();
    for (auto m : c.methods) methods.push_back(to_string(m));
    const auto& t = c.train;
    const auto& d = t.decomposition;
    return {{"name", c.name},
            {"data", data},
            {"noise", {{"kind", synth::to_string(c.noise.kind)}, {"snr_lo", c.noise.snr_lo}, {"snr_hi", c.noise.snr_hi}}},
            {"methods", methods},
            {"arch", nn::to_string(t.arch)},
            {"train",
             {{"epochs_pretrain", t.epochs_pretrain},
              {"epochs_collab", t.epochs_collab},
              {"batch_size", t.batch_size},
              {"lr_selector", t.lr_selector},
              {"lr_proxy", t.lr_proxy},
              {"clip_threshold", t.clip_threshold},
              {"cosine_alpha", t.cosine_alpha},
              {"weight_decay", t.weight_decay},
              {"max_norm", t.max_norm},
              {"selector_init_bias", t.selector_init_bias},
              {"full_batch_descent_mode", t.full_batch_descent_mode}}},
            {"decomposition",
             {{"ica_max_iter", d.ica_max_iter},
              {"ica_tol", d.ica_tol},
              {"ica_nonlinearity", to_string(d.ica_nonlinearity)},
              {"center", d.center},
              {"ica_strict", d.ica_strict}}},
            {"folds", c.folds},
            {"ratio", {c.ratio.train, c.ratio.val, c.ratio.test}},
            {"seeds", c.seeds},
            {"probe",
             {{"enabled", c.probe.enabled},
              {"method", to_string(c.probe.method)},
              {"bins", c.probe.bins},
              {"folds", c.probe.folds},
              {"min_bin_size", c.probe.min_bin_size},
              {"epochs", c.probe.epochs}}},
            {"strict", c.strict},
            {"jobs", c.jobs},
            {"output_dir", c.output_dir.string()}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

std::string hash_json(const json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace tdn::harness
