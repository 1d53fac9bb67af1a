#include "doctest.h"
#include "helpers.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/io.hpp"

#include <cstring>
#include <fstream>
#include <limits>

using namespace tdn;
using tdn::testing::random_matrix;
using tdn::testing::TempDir;

namespace {

TrialSet small_set(std::size_t n, std::size_t c, std::size_t t, std::uint64_t seed) {
    std::vector<Trial> trials;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
        trials.emplace_back(random_matrix(c, t, seed + i), 128.0);
        labels.push_back(static_cast<int>(i % 3));
    }
    return TrialSet(std::move(trials), std::move(labels), 3, "s01");
}

std::vector<char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& b) {
    std::ofstream out(p, std::ios::binary);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("trial and trial set validation") {
    Mat bad = Mat::Zero(2, 4);
    bad(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Trial(bad, 128.0), ValidationError);
    CHECK_THROWS_AS(Trial(Mat::Zero(2, 4), 0.0), ValidationError);
    CHECK_THROWS_AS(Trial(Mat::Zero(0, 4), 128.0), ValidationError);

    std::vector<Trial> t{Trial(Mat::Zero(2, 4), 128.0), Trial(Mat::Zero(2, 4), 128.0)};
    CHECK_THROWS_AS(TrialSet(t, {0}, 2), ValidationError);
    CHECK_THROWS_AS(TrialSet(t, {0, 2}, 2), ValidationError);
    CHECK_THROWS_AS(TrialSet(t, {0, 1}, 1), ValidationError);
    std::vector<Trial> mixed{Trial(Mat::Zero(2, 4), 128.0), Trial(Mat::Zero(3, 4), 128.0)};
    CHECK_THROWS_AS(TrialSet(mixed, {0, 1}, 2), ValidationError);

    const TrialSet ts = small_set(6, 2, 8, 1);
    const TrialSet sub = ts.subset({4, 1});
    REQUIRE(sub.size() == 2);
    CHECK(sub.label(0) == ts.label(4));
    CHECK(sub.trial(1).data() == ts.trial(1).data());
    CHECK(ts.subset({}).empty());
    CHECK(ts.subset({}).channels() == 2);
}

TEST_CASE("TDNSIG01 header and file size") {
    CHECK(io::kTrialHeaderBytes == 32);
    CHECK(io::trialset_file_size(1, 2, 4) == 68);
    CHECK(io::trialset_file_size(3, 8, 512) == 32 + 3 * (4 + 8 * 512 * 4));

    TempDir dir;
    std::vector<Trial> one{Trial(random_matrix(2, 4, 5), 250.0)};
    const TrialSet ts(std::move(one), {1}, 2);
    const auto path = dir.path / "one.tdn";
    io::save_trialset(ts, path);
    const auto bytes = read_bytes(path);
    REQUIRE(bytes.size() == 68);
    CHECK(std::memcmp(bytes.data(), "TDNSIG01", 8) == 0);
    auto u32 = [&](std::size_t off) {
        std::uint32_t v;
        std::memcpy(&v, bytes.data() + off, 4);
        return v;
    };
    CHECK(u32(8) == 1);
    CHECK(u32(12) == 1);
    CHECK(u32(16) == 2);
    CHECK(u32(20) == 4);
    CHECK(u32(24) == 2);
    float fs;
    std::memcpy(&fs, bytes.data() + 28, 4);
    CHECK(fs == 250.0f);
    CHECK(u32(32) == 1);
    float s0;
    std::memcpy(&s0, bytes.data() + 36, 4);
    CHECK(s0 == static_cast<float>(ts.trial(0).data()(0, 0)));
}

TEST_CASE("empty TDNSIG01 set is header only") {
    TempDir dir;
    const TrialSet empty(8, 256, 128.0, 2);
    io::save_trialset(empty, dir.path / "empty.tdn");
    CHECK(std::filesystem::file_size(dir.path / "empty.tdn") == io::kTrialHeaderBytes);
    const TrialSet back = io::load_trialset(dir.path / "empty.tdn");
    CHECK(back.empty());
    CHECK(back.channels() == 8);
    CHECK(back.samples() == 256);
    CHECK(back.num_classes() == 2);
}

TEST_CASE("TDNSIG01 round trip is exact at f32 precision") {
    TempDir dir;
    const TrialSet ts = small_set(5, 3, 17, 9);
    const auto path = dir.path / "set.tdn";
    io::save_trialset(ts, path);
    const TrialSet back = io::load_trialset(path);
    REQUIRE(back.size() == ts.size());
    CHECK(back.num_classes() == 3);
    CHECK(back.fs() == 128.0);
    CHECK(back.labels() == ts.labels());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const Mat expect = ts.trial(i).data().cast<float>().cast<double>();
        CHECK(back.trial(i).data() == expect);
    }
    // A second save of the loaded set is byte-identical.
    io::save_trialset(back, dir.path / "again.tdn");
    CHECK(read_bytes(path) == read_bytes(dir.path / "again.tdn"));
}

TEST_CASE("TDNSIG01 corruption is reported") {
    TempDir dir;
    const auto path = dir.path / "set.tdn";
    io::save_trialset(small_set(2, 2, 4, 3), path);
    const auto good = read_bytes(path);

    auto bad = good;
    bad[0] = 'X';
    write_bytes(dir.path / "magic.tdn", bad);
    CHECK_THROWS_AS(io::load_trialset(dir.path / "magic.tdn"), FormatError);

    bad = good;
    bad.resize(good.size() - 3);
    write_bytes(dir.path / "short.tdn", bad);
    CHECK_THROWS_AS(io::load_trialset(dir.path / "short.tdn"), FormatError);

    bad = good;
    bad.resize(20);
    write_bytes(dir.path / "header.tdn", bad);
    CHECK_THROWS_AS(io::load_trialset(dir.path / "header.tdn"), FormatError);

    bad = good;
    bad[8] = 2;
    write_bytes(dir.path / "version.tdn", bad);
    CHECK_THROWS_AS(io::load_trialset(dir.path / "version.tdn"), FormatError);

    bad = good;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bad.data() + 36, &nan, 4);
    write_bytes(dir.path / "nan.tdn", bad);
    CHECK_THROWS_AS(io::load_trialset(dir.path / "nan.tdn"), ValidationError);

    CHECK_THROWS_AS(io::load_trialset(dir.path / "missing.tdn"), IoError);
}

TEST_CASE("CSV export and matrix round trip") {
    TempDir dir;
    const TrialSet ts = small_set(3, 2, 5, 4);
    io::export_csv(ts, dir.path / "csv");
    CHECK(std::filesystem::exists(dir.path / "csv" / "labels.csv"));
    const Mat m = random_matrix(3, 7, 8);
    io::write_matrix_csv(m, dir.path / "m.csv");
    const Mat back = io::read_matrix_csv(dir.path / "m.csv");
    CHECK(back == m);

    std::ofstream(dir.path / "ragged.csv") << "1,2,3\n4,5\n";
    CHECK_THROWS_AS(io::read_matrix_csv(dir.path / "ragged.csv"), FormatError);
    std::ofstream(dir.path / "text.csv") << "1,abc\n";
    CHECK_THROWS_AS(io::read_matrix_csv(dir.path / "text.csv"), FormatError);
}

TEST_CASE("seed derivation is deterministic and separates streams") {
    const RngSeed s{42};
    CHECK(derive(s, 1).value == derive(s, 1).value);
    CHECK(derive(s, 1).value != derive(s, 2).value);
    CHECK(derive(s, 1, 2).value == derive(derive(s, 1), 2).value);
    CHECK(derive(s, 1, 2).value != derive(s, 2, 1).value);
    Engine a = make_engine(s);
    Engine b = make_engine(s);
    std::vector<int> va(20);
    std::vector<int> vb(20);
    for (int i = 0; i < 20; ++i) va[i] = vb[i] = i;
    tdn::shuffle(va, a);
    tdn::shuffle(vb, b);
    CHECK(va == vb);
    std::vector<int> sorted = va;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);
}
