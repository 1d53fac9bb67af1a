#include "taskdenoise/io.hpp"

#include "taskdenoise/error.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace tdn::io {
namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::vector<unsigned char>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xffffffffu) throw ValidationError(std::string(what) + " does not fit in u32");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

std::size_t trialset_file_size(std::size_t n_trials, std::size_t channels, std::size_t samples) {
    return kTrialHeaderBytes + n_trials * (4 + channels * samples * 4);
}

void save_trialset(const TrialSet& ts, const std::filesystem::path& path) {
    std::vector<unsigned char> buf;
    buf.reserve(trialset_file_size(ts.size(), ts.channels(), ts.samples()));
    buf.insert(buf.end(), kTrialMagic, kTrialMagic + 8);
    put_u32(buf, kTrialVersion);
    put_u32(buf, checked_u32(ts.size(), "n_trials"));
    put_u32(buf, checked_u32(ts.channels(), "channels"));
    put_u32(buf, checked_u32(ts.samples(), "samples"));
    put_u32(buf, checked_u32(static_cast<std::size_t>(ts.num_classes()), "num_classes"));
    put_f32(buf, static_cast<float>(ts.fs()));
    for (std::size_t i = 0; i < ts.size(); ++i) {
        put_u32(buf, static_cast<std::uint32_t>(ts.label(i)));
        const Mat& m = ts.trial(i).data();
        for (Eigen::Index k = 0; k < m.size(); ++k) {
            const float f = static_cast<float>(m.data()[k]);
            if (!std::isfinite(f)) throw ValidationError("sample overflows f32 in trial " + std::to_string(i));
            put_f32(buf, f);
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

TrialSet load_trialset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < kTrialHeaderBytes) {
        throw FormatError("truncated header: expected at least " + std::to_string(kTrialHeaderBytes) +
                          " bytes, got " + std::to_string(buf.size()));
    }
    if (std::memcmp(buf.data(), kTrialMagic, 8) != 0) throw FormatError("bad magic in " + path.string());
    const std::uint32_t version = get_u32(&buf[8]);
    if (version != kTrialVersion) throw FormatError("unsupported version " + std::to_string(version));
    const std::size_t n = get_u32(&buf[12]);
    const std::size_t c = get_u32(&buf[16]);
    const std::size_t t = get_u32(&buf[20]);
    const int k = static_cast<int>(get_u32(&buf[24]));
    const double fs = get_f32(&buf[28]);
    const std::size_t expected = trialset_file_size(n, c, t);
    if (buf.size() != expected) {
        throw FormatError("payload size mismatch: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(buf.size()));
    }
    if (n == 0) return TrialSet(c, t, fs, k);

    std::vector<Trial> trials;
    std::vector<int> labels;
    trials.reserve(n);
    labels.reserve(n);
    const unsigned char* p = buf.data() + kTrialHeaderBytes;
    for (std::size_t i = 0; i < n; ++i) {
        labels.push_back(static_cast<int>(get_u32(p)));
        p += 4;
        Mat m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t));
        for (Eigen::Index j = 0; j < m.size(); ++j, p += 4) {
            const float f = get_f32(p);
            if (!std::isfinite(f)) throw ValidationError("non-finite sample in trial " + std::to_string(i));
            m.data()[j] = f;
        }
        trials.emplace_back(std::move(m), fs);
    }
    return TrialSet(std::move(trials), std::move(labels), k);
}

void write_matrix_csv(const Mat& m, const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    char cell[64];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::string line;
        for (Eigen::Index col = 0; col < m.cols(); ++col) {
            // %g is locale-sensitive only through LC_NUMERIC, which we never change.
            std::snprintf(cell, sizeof cell, "%.17g", m(r, col));
            if (col) line.push_back(',');
            line += cell;
        }
        line.push_back('\n');
        if (std::fputs(line.c_str(), f) < 0) {
            std::fclose(f);
            throw IoError("write failed: " + path.string());
        }
    }
    if (std::fclose(f) != 0) throw IoError("close failed: " + path.string());
}

Mat read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw FormatError("bad CSV cell '" + cell + "' in " + path.string());
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) throw FormatError("ragged CSV: " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError("empty CSV: " + path.string());
    Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

void export_csv(const TrialSet& ts, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::ofstream labels(dir / "labels.csv");
    if (!labels) throw IoError("cannot write labels.csv in " + dir.string());
    labels << "index,label\n";
    char name[32];
    for (std::size_t i = 0; i < ts.size(); ++i) {
        std::snprintf(name, sizeof name, "trial_%05zu.csv", i);
        write_matrix_csv(ts.trial(i).data(), dir / name);
        labels << i << ',' << ts.label(i) << '\n';
    }
    if (!labels) throw IoError("write failed: labels.csv");
}

}  // namespace tdn::io
