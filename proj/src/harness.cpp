#include "taskdenoise/harness.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace tdn::harness {

namespace {

// Seed streams below one experiment seed.
enum Stream : std::uint64_t {
    kData = 1,
    kNoise = 2,
    kDecomp = 3,
    kControl = 4,
    kSplits = 5,
    kEvaluator = 6,
    kPipeline = 7,
    kProbe = 8,
};

std::size_t cumulative(std::size_t n, double frac) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) * frac));
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::nan("");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<int> labels_of(const TrialSet& ts, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(ts.label(i));
    return out;
}

template <class T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

struct SeedData {
    TrialSet raw;
    std::optional<TrialSet> clean;  // synthetic only
    TrialSet noisy;
    std::vector<double> stimulus;   // SSVEP synthetic: frequency per class
    std::vector<std::vector<ComponentSet>> comps;  // per method
    std::vector<TrialSet> control;                 // per method
    std::vector<std::size_t> unconverged;          // per method
    std::vector<Split> splits;
};

// Channel-averaged PSD sums over a set of trials.
void accumulate_psd(const TrialSet& ts, const std::vector<std::size_t>& idx, std::vector<double>& freqs,
                    std::vector<double>& sum) {
    for (auto i : idx) {
        const Mat& x = ts.trial(i).data();
        for (Eigen::Index c = 0; c < x.rows(); ++c) {
            const auto psd = metrics::welch_psd({x.row(c).data(), static_cast<std::size_t>(x.cols())}, ts.fs());
            if (sum.empty()) {
                freqs = psd.freqs;
                sum.assign(psd.density.size(), 0.0);
            }
            for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += psd.density[k];
        }
    }
}

std::optional<double> mean_fundamental(const TrialSet& ts, const std::vector<std::size_t>& idx,
                                       const std::vector<double>& stimulus) {
    if (stimulus.empty()) return std::nullopt;
    double s = 0.0;
    std::size_t n = 0;
    for (auto i : idx) {
        const Mat& x = ts.trial(i).data();
        const double f0 = stimulus.at(static_cast<std::size_t>(ts.label(i)));
        for (Eigen::Index c = 0; c < x.rows(); ++c, ++n) {
            s += metrics::fundamental_power_ratio({x.row(c).data(), static_cast<std::size_t>(x.cols())}, ts.fs(), f0);
        }
    }
    return n ? std::optional(s / static_cast<double>(n)) : std::nullopt;
}

// Mean sliding-window alpha/beta ratio over channels and trials.
std::optional<double> mean_alpha_beta(const TrialSet& ts, const std::vector<std::size_t>& idx) {
    double s = 0.0;
    std::size_t n = 0;
    for (auto i : idx) {
        const Mat& x = ts.trial(i).data();
        for (Eigen::Index c = 0; c < x.rows(); ++c) {
            for (double r : metrics::band_power_ratio({x.row(c).data(), static_cast<std::size_t>(x.cols())}, ts.fs())) {
                if (std::isfinite(r)) {
                    s += r;
                    ++n;
                }
            }
        }
    }
    return n ? std::optional(s / static_cast<double>(n)) : std::nullopt;
}

metrics::SignalQuality mean_quality(const TrialSet& xhat, const TrialSet& ref, const std::vector<std::size_t>& idx) {
    metrics::SignalQuality q;
    for (auto i : idx) {
        const auto one = metrics::signal_quality(xhat.trial(i).data(), ref.trial(i).data());
        q.mse += one.mse;
        q.snr_db += one.snr_db;
    }
    const auto n = static_cast<double>(idx.size());
    q.mse /= n;
    q.snr_db /= n;
    return q;
}

// Fresh evaluator trained on one condition; identical seed across conditions.
ConditionResult evaluate_condition(const TrialSet& cond, const SeedData& sd, const Split& split,
                                   const train::TrainConfig& ecfg, bool erd) {
    const TrialSet tr = cond.subset(split.train);
    const TrialSet va = cond.subset(split.val);
    const auto model = train::pretrain(tr, ecfg, &va);
    std::vector<int> pred;
    pred.reserve(split.test.size());
    for (auto i : split.test) pred.push_back(train::predict(model.params, cond.trial(i).data()));
    const auto truth = labels_of(cond, split.test);
    ConditionResult r;
    r.report = metrics::class_report(pred, truth, cond.num_classes());
    if (sd.clean) r.vs_clean = mean_quality(cond, *sd.clean, split.test);
    r.vs_raw = mean_quality(cond, sd.raw, split.test);
    r.fundamental_ratio = mean_fundamental(cond, split.test, sd.stimulus);
    if (erd) r.alpha_beta_ratio = mean_alpha_beta(cond, split.test);
    return r;
}

struct FoldWork {
    FoldResult result;
    std::vector<std::vector<double>> psd_denoised;  // per method
    std::optional<SeedProbe> probe;
};

SeedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed_value) {
    const RngSeed seed{seed_value};
    std::optional<TrialSet> raw;
    std::optional<TrialSet> clean;
    std::vector<double> stimulus;
    if (cfg.data_file.empty()) {
        synth::SynthConfig sc = cfg.synth;
        sc.seed = derive(seed, kData);
        clean = synth::gen_dataset(sc);
        raw = *clean;
        if (sc.paradigm == synth::Paradigm::SSVEP) stimulus = sc.resolved_freqs();
    } else {
        raw = io::load_trialset(cfg.data_file);
    }
    auto cont = synth::contaminate(*raw, cfg.noise, derive(seed, kNoise));
    SeedData sd{std::move(*raw), std::move(clean), std::move(cont.noisy), std::move(stimulus), {}, {}, {}, {}};

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        DecompConfig dcfg = cfg.train.decomposition;
        dcfg.method = cfg.methods[mi];
        auto comps = train::decompose_all(sd.noisy, dcfg, derive(seed, kDecomp));
        std::size_t bad = 0;
        std::vector<Trial> ctrl;
        ctrl.reserve(comps.size());
        for (std::size_t i = 0; i < comps.size(); ++i) {
            bad += comps[i].convergence().converged ? 0 : 1;
            ctrl.push_back(random_mixing_control(comps[i], derive(seed, kControl, i)));
        }
        if (bad) spdlog::info("seed {} {}: FastICA did not converge on {}/{} trials", seed_value, to_string(dcfg.method), bad, comps.size());
        sd.control.push_back(sd.noisy.with_trials(std::move(ctrl)));
        sd.comps.push_back(std::move(comps));
        sd.unconverged.push_back(bad);
    }
    sd.splits = kfold_splits(sd.noisy.size(), sd.noisy.labels(), cfg.folds, cfg.ratio, derive(seed, kSplits));
    return sd;
}

FoldWork run_fold(const ExperimentConfig& cfg, const SeedData& sd, std::uint64_t seed_value, int fold) {
    const RngSeed seed{seed_value};
    const Split& split = sd.splits[static_cast<std::size_t>(fold)];
    const bool erd = cfg.data_file.empty() && cfg.synth.paradigm == synth::Paradigm::ERD;
    FoldWork w;
    FoldResult& r = w.result;
    r.seed = seed_value;
    r.fold = fold;
    r.n_train = split.train.size();
    r.n_val = split.val.size();
    r.n_test = split.test.size();

    train::TrainConfig ecfg = cfg.train;
    ecfg.seed = derive(seed, kEvaluator, static_cast<std::uint64_t>(fold));
    r.baseline = evaluate_condition(sd.noisy, sd, split, ecfg, erd);

    const TrialSet tr = sd.noisy.subset(split.train);
    const TrialSet va = sd.noisy.subset(split.val);
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const auto& comps = sd.comps[mi];
        train::TrainConfig tcfg = cfg.train;
        tcfg.decomposition.method = cfg.methods[mi];
        tcfg.seed = derive(seed, kPipeline, static_cast<std::uint64_t>(fold));
        const auto ctr = pick(comps, split.train);
        const auto cva = pick(comps, split.val);
        const auto model = train::train(tr, ctr, tcfg, &va, &cva);

        std::vector<Trial> den;
        den.reserve(comps.size());
        double retention = 0.0;
        std::size_t n_prob = 0;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            auto sel = train::select(model.params, comps[i]);
            if (std::binary_search(split.test.begin(), split.test.end(), i)) {
                for (double p : sel.probabilities) retention += p;
                n_prob += sel.probabilities.size();
            }
            den.push_back(std::move(sel.reconstructed));
        }
        const TrialSet denoised = sd.noisy.with_trials(std::move(den));

        MethodFold mf;
        mf.method = cfg.methods[mi];
        mf.denoised = evaluate_condition(denoised, sd, split, ecfg, erd);
        mf.control = evaluate_condition(sd.control[mi], sd, split, ecfg, erd);
        mf.best_epoch = model.history.best_epoch;
        mf.best_val_loss = model.history.best_val_loss;
        mf.mean_retention = n_prob ? retention / static_cast<double>(n_prob) : 0.0;
        mf.ica_unconverged = 0;
        for (auto i : split.test) mf.ica_unconverged += comps[i].convergence().converged ? 0 : 1;
        r.methods.push_back(std::move(mf));

        std::vector<double> freqs;
        std::vector<double> sum;
        accumulate_psd(denoised, split.test, freqs, sum);
        w.psd_denoised.push_back(std::move(sum));

        if (cfg.probe.enabled && fold == 0 && cfg.methods[mi] == cfg.probe.method) {
            w.probe = SeedProbe{seed_value, cfg.methods[mi],
                                component_probe(sd.noisy, comps, model.params, cfg.probe, cfg.train,
                                                derive(seed, kProbe))};
        }
    }
    r.ok = true;
    return w;
}

std::optional<double> finite_mean(const std::vector<double>& v) {
    std::vector<double> f;
    for (double x : v)
        if (std::isfinite(x)) f.push_back(x);
    if (f.empty()) return std::nullopt;
    return mean_of(f);
}

// Undefined when every paired difference is zero.
std::optional<metrics::TestResult> paired_test(const std::vector<double>& a, const std::vector<double>& b) {
    bool any = false;
    for (std::size_t i = 0; i < a.size(); ++i) any = any || a[i] != b[i];
    if (!any) return std::nullopt;
    return metrics::wilcoxon_signed_rank(a, b);
}

MethodSummary summarize(const ExperimentConfig& cfg, const std::vector<FoldResult>& folds, std::size_t mi,
                        std::size_t unconverged) {
    MethodSummary s;
    s.method = cfg.methods[mi];
    s.ica_unconverged = unconverged;
    std::vector<double> ab, ad, ac, fb, fd, fc, sn, sdn, sc, mn, md, sr, mr, fun, fud, abn, abd;
    std::map<std::uint64_t, std::vector<const FoldResult*>> by_seed;
    for (const auto& f : folds) {
        if (!f.ok) continue;
        by_seed[f.seed].push_back(&f);
        const auto& m = f.methods[mi];
        ab.push_back(f.baseline.report.accuracy);
        ad.push_back(m.denoised.report.accuracy);
        ac.push_back(m.control.report.accuracy);
        fb.push_back(f.baseline.report.macro_f1);
        fd.push_back(m.denoised.report.macro_f1);
        fc.push_back(m.control.report.macro_f1);
        if (f.baseline.vs_clean) {
            sn.push_back(f.baseline.vs_clean->snr_db);
            sdn.push_back(m.denoised.vs_clean->snr_db);
            sc.push_back(m.control.vs_clean->snr_db);
            mn.push_back(f.baseline.vs_clean->mse);
            md.push_back(m.denoised.vs_clean->mse);
        }
        sr.push_back(m.denoised.vs_raw.snr_db);
        mr.push_back(m.denoised.vs_raw.mse);
        if (f.baseline.fundamental_ratio) {
            fun.push_back(*f.baseline.fundamental_ratio);
            fud.push_back(*m.denoised.fundamental_ratio);
        }
        if (f.baseline.alpha_beta_ratio) {
            abn.push_back(*f.baseline.alpha_beta_ratio);
            abd.push_back(*m.denoised.alpha_beta_ratio);
        }
    }
    s.acc_baseline = mean_of(ab);
    s.acc_denoised = mean_of(ad);
    s.acc_control = mean_of(ac);
    s.f1_baseline = mean_of(fb);
    s.f1_denoised = mean_of(fd);
    s.f1_control = mean_of(fc);
    s.snr_clean_noisy = finite_mean(sn);
    s.snr_clean_denoised = finite_mean(sdn);
    s.snr_clean_control = finite_mean(sc);
    s.mse_clean_noisy = finite_mean(mn);
    s.mse_clean_denoised = finite_mean(md);
    s.snr_raw_denoised = mean_of(sr);
    s.mse_raw_denoised = mean_of(mr);
    s.fundamental_noisy = finite_mean(fun);
    s.fundamental_denoised = finite_mean(fud);
    s.alpha_beta_noisy = finite_mean(abn);
    s.alpha_beta_denoised = finite_mean(abd);

    // Seeds in config order; a seed whose folds all aborted is left out.
    for (auto seed : cfg.seeds) {
        auto it = by_seed.find(seed);
        if (it == by_seed.end()) continue;
        std::vector<double> a, b, c, d, e, g, h, k, l;
        for (const FoldResult* f : it->second) {
            const auto& m = f->methods[mi];
            a.push_back(f->baseline.report.accuracy);
            b.push_back(m.denoised.report.accuracy);
            c.push_back(m.control.report.accuracy);
            if (f->baseline.vs_clean) {
                d.push_back(f->baseline.vs_clean->snr_db);
                e.push_back(m.denoised.vs_clean->snr_db);
                g.push_back(f->baseline.vs_clean->mse);
                h.push_back(m.denoised.vs_clean->mse);
            }
            if (f->baseline.fundamental_ratio) {
                k.push_back(*f->baseline.fundamental_ratio);
                l.push_back(*m.denoised.fundamental_ratio);
            }
        }
        s.seed_acc_baseline.push_back(mean_of(a));
        s.seed_acc_denoised.push_back(mean_of(b));
        s.seed_acc_control.push_back(mean_of(c));
        if (!d.empty()) {
            s.seed_snr_noisy.push_back(mean_of(d));
            s.seed_snr_denoised.push_back(mean_of(e));
            s.seed_mse_noisy.push_back(mean_of(g));
            s.seed_mse_denoised.push_back(mean_of(h));
        }
        if (!k.empty()) {
            s.seed_fundamental_noisy.push_back(mean_of(k));
            s.seed_fundamental_denoised.push_back(mean_of(l));
        }
    }

    const bool across_seeds = s.seed_acc_baseline.size() >= 2;
    const auto& pa = across_seeds ? s.seed_acc_denoised : ad;
    const auto& pb = across_seeds ? s.seed_acc_baseline : ab;
    const auto& pc = across_seeds ? s.seed_acc_control : ac;
    if (pa.size() >= 2) {
        s.test_acc_denoised_vs_baseline = paired_test(pa, pb);
        s.test_acc_denoised_vs_control = paired_test(pa, pc);
    }
    const auto& qa = across_seeds ? s.seed_snr_denoised : sdn;
    const auto& qb = across_seeds ? s.seed_snr_noisy : sn;
    if (qa.size() >= 2 && qa.size() == qb.size() && std::all_of(qa.begin(), qa.end(), [](double x) { return std::isfinite(x); }) &&
        std::all_of(qb.begin(), qb.end(), [](double x) { return std::isfinite(x); })) {
        s.test_snr_denoised_vs_noisy = paired_test(qa, qb);
    }
    return s;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::vector<Split> kfold_splits(std::size_t n_trials, const std::vector<int>& labels, int k, SplitRatio ratio,
                                RngSeed seed) {
    if (labels.size() != n_trials) throw ValidationError("kfold_splits: one label per trial required");
    if (k < 2) throw ValidationError("kfold_splits: need k >= 2");
    if (!(ratio.train > 0.0 && ratio.val > 0.0 && ratio.test > 0.0)) {
        throw ValidationError("kfold_splits: ratio components must be positive");
    }
    const double total = ratio.train + ratio.val + ratio.test;
    const double c_train = ratio.train / total;
    const double c_val = (ratio.train + ratio.val) / total;

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n_trials; ++i) by_class[labels[i]].push_back(i);
    Engine eng = make_engine(seed);
    for (auto& [label, idx] : by_class) {
        if (idx.size() < static_cast<std::size_t>(k)) {
            throw ValidationError("kfold_splits: class " + std::to_string(label) + " has " + std::to_string(idx.size()) +
                                  " trials, fewer than k = " + std::to_string(k));
        }
        shuffle(idx, eng);
    }

    std::vector<Split> out(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) {
        Split& s = out[static_cast<std::size_t>(f)];
        for (const auto& [label, idx] : by_class) {
            const std::size_t n = idx.size();
            const std::size_t shift = cumulative(n, static_cast<double>(f) / k) % n;
            const std::size_t a = cumulative(n, c_train);
            const std::size_t b = cumulative(n, c_val);
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t v = idx[(j + shift) % n];
                (j < a ? s.train : j < b ? s.val : s.test).push_back(v);
            }
        }
        std::sort(s.train.begin(), s.train.end());
        std::sort(s.val.begin(), s.val.end());
        std::sort(s.test.begin(), s.test.end());
    }
    return out;
}

Trial random_mixing_control(const ComponentSet& cs, const std::function<double()>& draw) {
    std::vector<double> w(cs.size());
    for (double& v : w) v = draw();
    return reconstruct(cs, w);
}

Trial random_mixing_control(const ComponentSet& cs, RngSeed seed) {
    Engine eng = make_engine(seed);
    return random_mixing_control(cs, [&] { return uniform(eng, 0.0, 1.0); });
}

ProbeTable component_probe(const TrialSet& data, const std::vector<ComponentSet>& components,
                           const nn::ModelParams& params, const ProbeConfig& cfg, const train::TrainConfig& tcfg,
                           RngSeed seed) {
    if (components.size() != data.size()) throw ValidationError("component_probe: one ComponentSet per trial required");
    if (cfg.bins < 1 || cfg.folds < 2) throw ValidationError("component_probe: need bins >= 1 and folds >= 2");
    struct Item {
        std::size_t trial;
        std::size_t comp;
        double p;
    };
    std::vector<Item> items;
    ProbeTable table;
    for (std::size_t i = 0; i < components.size(); ++i) {
        const auto p = train::component_probabilities(params, components[i]);
        const auto e = components[i].energies();
        const double total = std::accumulate(e.begin(), e.end(), 0.0);
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (e[k] <= 1e-12 * total) {
                ++table.excluded;
            } else {
                items.push_back({i, k, p[k]});
            }
        }
    }
    table.total_components = items.size() + table.excluded;
    if (items.empty()) return table;

    std::vector<double> sorted;
    for (const auto& it : items) sorted.push_back(it.p);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int b = 1; b < cfg.bins; ++b) {
        edges.push_back(sorted[static_cast<std::size_t>(b) * sorted.size() / static_cast<std::size_t>(cfg.bins)]);
    }
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(cfg.bins));
    for (std::size_t n = 0; n < items.size(); ++n) {
        const auto bin = std::upper_bound(edges.begin(), edges.end(), items[n].p) - edges.begin();
        members[static_cast<std::size_t>(bin)].push_back(n);
    }

    train::TrainConfig pcfg = tcfg;
    pcfg.epochs_pretrain = cfg.epochs;
    std::vector<double> centres;
    std::vector<double> accs;
    for (int b = 0; b < cfg.bins; ++b) {
        auto& mem = members[static_cast<std::size_t>(b)];
        if (mem.empty()) continue;
        ProbeBin pb;
        pb.bin = b;
        pb.count = mem.size();
        pb.p_lo = items[mem.front()].p;
        pb.p_hi = pb.p_lo;
        for (auto n : mem) {
            pb.p_lo = std::min(pb.p_lo, items[n].p);
            pb.p_hi = std::max(pb.p_hi, items[n].p);
        }
        if (mem.size() < cfg.min_bin_size) {
            pb.skipped = true;
            table.bins.push_back(pb);
            continue;
        }
        Engine eng = make_engine(derive(seed, static_cast<std::uint64_t>(b)));
        shuffle(mem, eng);
        std::size_t correct = 0;
        for (int f = 0; f < cfg.folds; ++f) {
            const std::size_t lo = mem.size() * static_cast<std::size_t>(f) / static_cast<std::size_t>(cfg.folds);
            const std::size_t hi = mem.size() * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(cfg.folds);
            std::vector<Trial> tr;
            std::vector<int> tl;
            for (std::size_t j = 0; j < mem.size(); ++j) {
                if (j >= lo && j < hi) continue;
                const Item& it = items[mem[j]];
                tr.emplace_back(components[it.trial].component(it.comp), data.fs());
                tl.push_back(data.label(it.trial));
            }
            pcfg.seed = derive(seed, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(f) + 1000);
            const auto model = train::pretrain(TrialSet(std::move(tr), std::move(tl), data.num_classes()), pcfg);
            for (std::size_t j = lo; j < hi; ++j) {
                const Item& it = items[mem[j]];
                correct += train::predict(model.params, components[it.trial].component(it.comp)) == data.label(it.trial);
            }
        }
        pb.accuracy = static_cast<double>(correct) / static_cast<double>(mem.size());
        centres.push_back(static_cast<double>(b));
        accs.push_back(*pb.accuracy);
        table.bins.push_back(pb);
    }
    table.spearman = metrics::spearman(centres, accs);
    return table;
}

ProbeTable component_probe(const TrialSet& data, const nn::ModelParams& params, const DecompConfig& dcfg,
                           const ProbeConfig& cfg, const train::TrainConfig& tcfg, RngSeed seed) {
    return component_probe(data, train::decompose_all(data, dcfg, derive(seed, 1)), params, cfg, tcfg, derive(seed, 2));
}

const MethodSummary& EvalReport::summary(DecompMethod m) const {
    for (const auto& s : summaries)
        if (s.method == m) return s;
    throw ValidationError("no summary for method " + std::string(to_string(m)));
}

EvalReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    EvalReport rep;
    rep.config = to_json(cfg);
    rep.config_hash = hash_json(rep.config);
    rep.created_at = utc_now();
    rep.spectra.resize(cfg.methods.size());
    std::vector<std::size_t> unconverged(cfg.methods.size(), 0);
    std::vector<std::vector<double>> psd_sum(cfg.methods.size());
    std::vector<double> psd_clean, psd_noisy, freqs;
    std::size_t psd_rows = 0;

    for (auto seed_value : cfg.seeds) {
        std::optional<SeedData> sd;
        std::string seed_error;
        try {
            sd = prepare_seed(cfg, seed_value);
        } catch (const std::exception& e) {
            seed_error = e.what();
        }
        std::vector<FoldWork> work(static_cast<std::size_t>(cfg.folds));
        parallel_for(work.size(), cfg.jobs, [&](std::size_t f) {
            const int fold = static_cast<int>(f);
            try {
                if (!sd) throw Error("data preparation failed: " + seed_error);
                work[f] = run_fold(cfg, *sd, seed_value, fold);
            } catch (const std::exception& e) {
                work[f] = FoldWork{};
                work[f].result.seed = seed_value;
                work[f].result.fold = fold;
                work[f].result.error = e.what();
            }
            spdlog::debug("seed {} fold {} done", seed_value, fold);
        });
        // Reduction in fold order keeps the report independent of scheduling.
        for (auto& w : work) {
            if (!w.result.ok) {
                spdlog::error("seed {} fold {} aborted: {}", seed_value, w.result.fold, w.result.error);
                ++rep.aborted;
            } else {
                const Split& split = sd->splits[static_cast<std::size_t>(w.result.fold)];
                for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
                    auto& acc = psd_sum[mi];
                    if (acc.empty()) acc.assign(w.psd_denoised[mi].size(), 0.0);
                    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += w.psd_denoised[mi][k];
                }
                if (sd->clean) accumulate_psd(*sd->clean, split.test, freqs, psd_clean);
                accumulate_psd(sd->noisy, split.test, freqs, psd_noisy);
                psd_rows += split.test.size() * sd->noisy.channels();
            }
            if (w.probe) rep.probes.push_back(std::move(*w.probe));
            rep.folds.push_back(std::move(w.result));
        }
        if (sd) {
            for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) unconverged[mi] += sd->unconverged[mi];
        }
    }

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        rep.summaries.push_back(summarize(cfg, rep.folds, mi, unconverged[mi]));
        auto& sp = rep.spectra[mi];
        if (psd_rows == 0) continue;
        const double n = static_cast<double>(psd_rows);
        sp.freqs = freqs;
        sp.count = psd_rows;
        for (double v : psd_noisy) sp.noisy.push_back(v / n);
        for (double v : psd_clean) sp.clean.push_back(v / n);
        for (double v : psd_sum[mi]) sp.denoised.push_back(v / n);
    }
    rep.failed = cfg.strict && rep.aborted > 0;
    return rep;
}

}  // namespace tdn::harness
