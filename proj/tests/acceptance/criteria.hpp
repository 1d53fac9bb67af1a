#pragma once
// Property checks shared by the acceptance binary and the unit tests. Each
// returns the measured quantity; the caller owns the threshold.

#include "taskdenoise/nnet.hpp"
#include "taskdenoise/rng.hpp"

#include <cstdint>
#include <vector>

namespace tdn::criteria {

// Worst ||sum C_i - X||_F / ||X||_F over `per_combo` random trials for every
// method and C in {4, 8}, T in {256, 512}.
double reconstruction_identity(int per_combo, std::uint64_t seed);

// Mean |corr| between recovered and true temporal sources over `mixtures`
// seeded 2-source mixtures, after resolving permutation and sign.
double ica_recovery(int mixtures, std::uint64_t seed);

// Worst blockwise relative error of analytic vs central-difference gradients,
// over both extractors, both heads and every parameter block.
double gradient_check(double h = 1e-5);

struct DescentRun {
    std::uint64_t seed = 0;
    // Largest loss increase over all half-steps (A, then B) of the run.
    double worst_increase = 0.0;
    double first_loss = 0.0;
    double last_loss = 0.0;
};

// Full-batch alternating steps on a small synthetic set.
DescentRun descent_run(std::uint64_t seed, int iterations, double lr);

// Worst |requested - measured| contamination SNR in dB over the given levels,
// both artifact kinds and `trials` random clean trials.
double mixing_exactness(const std::vector<double>& snr_db, int trials, std::uint64_t seed);

// Two-sided p-value by walking all 2^n sign assignments of the ranked
// differences (ties averaged, zeros dropped).
double wilcoxon_enumeration_p(const std::vector<double>& a, const std::vector<double>& b);

// Worst |library exact p - enumeration p| over `datasets` random paired samples
// with n cycling through 1..12; integer-valued data so ties and zeros occur.
double wilcoxon_oracle(int datasets, std::uint64_t seed);

}  // namespace tdn::criteria
