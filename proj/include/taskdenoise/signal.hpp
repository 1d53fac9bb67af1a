#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace tdn {

// Channel-major: one row per channel, samples contiguous.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

bool all_finite(const Mat& m);

// One multichannel recording (C x T) at sampling rate fs.
class Trial {
public:
    Trial(Mat data, double fs);

    const Mat& data() const noexcept { return data_; }
    double fs() const noexcept { return fs_; }
    std::size_t channels() const noexcept { return static_cast<std::size_t>(data_.rows()); }
    std::size_t samples() const noexcept { return static_cast<std::size_t>(data_.cols()); }

private:
    Mat data_;
    double fs_;
};

class TrialSet {
public:
    TrialSet(std::vector<Trial> trials, std::vector<int> labels, int num_classes, std::string subject_id = {});
    // Empty set with a fixed geometry.
    TrialSet(std::size_t channels, std::size_t samples, double fs, int num_classes, std::string subject_id = {});

    const std::vector<Trial>& trials() const noexcept { return trials_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    const Trial& trial(std::size_t i) const { return trials_.at(i); }
    int label(std::size_t i) const { return labels_.at(i); }
    std::size_t size() const noexcept { return trials_.size(); }
    bool empty() const noexcept { return trials_.empty(); }
    int num_classes() const noexcept { return num_classes_; }
    const std::string& subject_id() const noexcept { return subject_id_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t samples() const noexcept { return samples_; }
    double fs() const noexcept { return fs_; }

    TrialSet subset(const std::vector<std::size_t>& indices) const;
    // Same labels and geometry, new data.
    TrialSet with_trials(std::vector<Trial> trials) const;

private:
    std::vector<Trial> trials_;
    std::vector<int> labels_;
    int num_classes_;
    std::string subject_id_;
    std::size_t channels_;
    std::size_t samples_;
    double fs_;
};

}  // namespace tdn
