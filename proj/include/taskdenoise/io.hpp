#pragma once
// Binary trial-set container ("TDNSIG01") and CSV export.
//
// Layout, all little-endian:
//   offset 0   char[8]  magic "TDNSIG01"
//   offset 8   u32      version (1)
//   offset 12  u32      n_trials
//   offset 16  u32      C (channels)
//   offset 20  u32      T (samples)
//   offset 24  u32      K (classes)
//   offset 28  f32      fs
//   offset 32  per trial: u32 label, then C*T f32 samples, channel-major

#include "taskdenoise/signal.hpp"

#include <cstddef>
#include <filesystem>

namespace tdn::io {

inline constexpr char kTrialMagic[9] = "TDNSIG01";
inline constexpr std::uint32_t kTrialVersion = 1;
inline constexpr std::size_t kTrialHeaderBytes = 32;

std::size_t trialset_file_size(std::size_t n_trials, std::size_t channels, std::size_t samples);

void save_trialset(const TrialSet& ts, const std::filesystem::path& path);
TrialSet load_trialset(const std::filesystem::path& path);

// One CSV per trial (rows = channels) plus labels.csv with "index,label" rows.
void export_csv(const TrialSet& ts, const std::filesystem::path& dir);
void write_matrix_csv(const Mat& m, const std::filesystem::path& path);
Mat read_matrix_csv(const std::filesystem::path& path);

}  // namespace tdn::io
