#include "taskdenoise/signal.hpp"

#include "taskdenoise/error.hpp"

#include <cmath>
#include <utility>

namespace tdn {

bool all_finite(const Mat& m) {
    const double* p = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        if (!std::isfinite(p[i])) return false;
    }
    return true;
}

Trial::Trial(Mat data, double fs) : data_(std::move(data)), fs_(fs) {
    if (data_.rows() < 1) throw ValidationError("trial needs at least one channel");
    if (data_.cols() < 2) throw ValidationError("trial needs at least two samples");
    if (!(fs_ > 0.0) || !std::isfinite(fs_)) throw ValidationError("sampling rate must be positive");
    if (!all_finite(data_)) throw ValidationError("trial contains non-finite samples");
}

TrialSet::TrialSet(std::vector<Trial> trials, std::vector<int> labels, int num_classes, std::string subject_id)
    : trials_(std::move(trials)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      subject_id_(std::move(subject_id)),
      channels_(0),
      samples_(0),
      fs_(0.0) {
    if (num_classes_ < 2) throw ValidationError("need at least two classes");
    if (trials_.size() != labels_.size()) {
        throw ValidationError("labels length " + std::to_string(labels_.size()) + " != trials length " +
                              std::to_string(trials_.size()));
    }
    if (trials_.empty()) throw ValidationError("use the geometry constructor for an empty TrialSet");
    channels_ = trials_.front().channels();
    samples_ = trials_.front().samples();
    fs_ = trials_.front().fs();
    for (std::size_t i = 0; i < trials_.size(); ++i) {
        const auto& t = trials_[i];
        if (t.channels() != channels_ || t.samples() != samples_ || t.fs() != fs_) {
            throw ValidationError("trial " + std::to_string(i) + " geometry differs from trial 0");
        }
        if (labels_[i] < 0 || labels_[i] >= num_classes_) {
            throw ValidationError("label " + std::to_string(labels_[i]) + " outside [0," +
                                  std::to_string(num_classes_) + ")");
        }
    }
}

TrialSet::TrialSet(std::size_t channels, std::size_t samples, double fs, int num_classes, std::string subject_id)
    : num_classes_(num_classes), subject_id_(std::move(subject_id)), channels_(channels), samples_(samples), fs_(fs) {
    if (num_classes_ < 2) throw ValidationError("need at least two classes");
    if (channels_ < 1 || samples_ < 2) throw ValidationError("invalid trial geometry");
    if (!(fs_ > 0.0)) throw ValidationError("sampling rate must be positive");
}

TrialSet TrialSet::subset(const std::vector<std::size_t>& indices) const {
    if (indices.empty()) return TrialSet(channels_, samples_, fs_, num_classes_, subject_id_);
    std::vector<Trial> t;
    std::vector<int> l;
    t.reserve(indices.size());
    l.reserve(indices.size());
    for (auto i : indices) {
        t.push_back(trials_.at(i));
        l.push_back(labels_.at(i));
    }
    return TrialSet(std::move(t), std::move(l), num_classes_, subject_id_);
}

TrialSet TrialSet::with_trials(std::vector<Trial> trials) const {
    if (trials.size() != trials_.size()) throw ValidationError("with_trials: size mismatch");
    if (trials.empty()) return *this;
    return TrialSet(std::move(trials), labels_, num_classes_, subject_id_);
}

}  // namespace tdn
