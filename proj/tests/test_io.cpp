#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>

#include "neoeeg/io/edf.hpp"
#include "neoeeg/io/labels.hpp"
#include "neoeeg/io/montage.hpp"
#include "neoeeg/io/signal_csv.hpp"
#include "neoeeg/io/split.hpp"

using namespace neoeeg;
using namespace neoeeg::io;

namespace {

std::string padded(const std::string& s, std::size_t w) {
    std::string out = s.substr(0, w);
    out.append(w - out.size(), ' ');
    return out;
}

struct EdfSpec {
    std::vector<std::string> labels;
    int spr = 256;
    int records = 2;
    double phys_min = -3276.8, phys_max = 3276.7;
    int dig_min = -32768, dig_max = 32767;
    std::string dimension = "uV";
};

// Writes the EDF byte layout field by field, independently of the library serializer.
std::vector<unsigned char> build_edf(const EdfSpec& s, const std::function<std::int16_t(std::size_t, std::size_t)>& digital) {
    const std::size_t ns = s.labels.size();
    std::string h;
    h += padded("0", 8);
    h += padded("X X X X", 80);
    h += padded("Startdate X X X X", 80);
    h += "01.01.20";
    h += "00.00.00";
    h += padded(std::to_string(256 * (ns + 1)), 8);
    h += padded("", 44);
    h += padded(std::to_string(s.records), 8);
    h += padded("1", 8);
    h += padded(std::to_string(ns), 4);
    auto each = [&](const std::function<std::string(std::size_t)>& f, std::size_t w) {
        for (std::size_t i = 0; i < ns; ++i) h += padded(f(i), w);
    };
    char buf[32];
    each([&](std::size_t i) { return s.labels[i]; }, 16);
    each([](std::size_t) { return std::string("AgAgCl electrode"); }, 80);
    each([&](std::size_t) { return s.dimension; }, 8);
    std::snprintf(buf, sizeof buf, "%g", s.phys_min);
    const std::string pmin = buf;
    std::snprintf(buf, sizeof buf, "%g", s.phys_max);
    const std::string pmax = buf;
    each([&](std::size_t) { return pmin; }, 8);
    each([&](std::size_t) { return pmax; }, 8);
    each([&](std::size_t) { return std::to_string(s.dig_min); }, 8);
    each([&](std::size_t) { return std::to_string(s.dig_max); }, 8);
    each([](std::size_t) { return std::string("HP:0.1Hz"); }, 80);
    each([&](std::size_t) { return std::to_string(s.spr); }, 8);
    each([](std::size_t) { return std::string(); }, 32);
    std::vector<unsigned char> bytes(h.begin(), h.end());
    for (int r = 0; r < s.records; ++r)
        for (std::size_t c = 0; c < ns; ++c)
            for (int k = 0; k < s.spr; ++k) {
                const auto v = static_cast<std::uint16_t>(digital(c, static_cast<std::size_t>(r * s.spr + k)));
                bytes.push_back(static_cast<unsigned char>(v & 0xFF));
                bytes.push_back(static_cast<unsigned char>(v >> 8));
            }
    return bytes;
}

Recording nine_channel(double fs, std::size_t n) {
    Recording rec;
    rec.fs = fs;
    rec.channel_labels = {"F3", "F4", "C3", "C4", "Cz", "T3", "T4", "P3", "P4"};
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d(0, 20);
    for (std::size_t c = 0; c < 9; ++c) {
        std::vector<double> x(n);
        for (auto& v : x) v = d(rng);
        rec.samples.push_back(x);
    }
    return rec;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("neoeeg_io_" + name);
}

}  // namespace

TEST(Edf, DigitalMaxMapsToPhysicalMax) {
    EdfSpec s;
    s.labels = {"Cz"};
    s.phys_min = -200;
    s.phys_max = 200;
    s.dig_min = -2048;
    s.dig_max = 2047;
    const auto rec = parse_edf(build_edf(s, [&](std::size_t, std::size_t) { return std::int16_t(2047); }));
    ASSERT_EQ(rec.num_channels(), 1u);
    for (double v : rec.samples[0]) EXPECT_NEAR(v, 200.0, 1e-12);
}

TEST(Edf, NineChannelsAt256Hz) {
    EdfSpec s;
    s.labels = {"F3", "F4", "C3", "C4", "Cz", "T3", "T4", "P3", "P4"};
    const auto rec = parse_edf(build_edf(s, [](std::size_t c, std::size_t i) { return std::int16_t(c * 100 + i % 50); }));
    EXPECT_DOUBLE_EQ(rec.fs, 256.0);
    EXPECT_EQ(rec.channel_labels, s.labels);
    EXPECT_EQ(rec.num_samples(), 512u);
    EXPECT_NEAR(rec.samples[3][7], (300 + 7) * 0.1, 1e-9);
}

TEST(Edf, MillivoltsAreConverted) {
    EdfSpec s;
    s.labels = {"C3"};
    s.dimension = "mV";
    s.phys_min = -1;
    s.phys_max = 1;
    s.dig_min = -1000;
    s.dig_max = 1000;
    const auto rec = parse_edf(build_edf(s, [](std::size_t, std::size_t) { return std::int16_t(500); }));
    EXPECT_NEAR(rec.samples[0][0], 500.0, 1e-9);
}

TEST(Edf, ByteExactRoundTrip) {
    EdfSpec s;
    s.labels = {"F3", "C4", "O1"};
    s.records = 3;
    s.spr = 250;
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> d(-32768, 32767);
    std::vector<std::int16_t> values(3 * 750);
    for (auto& v : values) v = static_cast<std::int16_t>(d(rng));
    const auto bytes = build_edf(s, [&](std::size_t c, std::size_t i) { return values[c * 750 + i]; });
    const auto rec = parse_edf(bytes);
    EXPECT_EQ(serialize_edf(rec), bytes);
    const auto path = temp_file("roundtrip.edf");
    write_edf(rec, path);
    EXPECT_EQ(read_edf(path), rec);
    std::filesystem::remove(path);
}

TEST(Edf, SynthesizedHeaderRoundTrip) {
    const auto rec = nine_channel(256, 256 * 4);
    const auto back = parse_edf(serialize_edf(rec));
    EXPECT_EQ(back.channel_labels, rec.channel_labels);
    EXPECT_DOUBLE_EQ(back.fs, 256.0);
    for (std::size_t c = 0; c < 9; ++c)
        for (std::size_t i = 0; i < rec.num_samples(); i += 97) EXPECT_NEAR(back.samples[c][i], rec.samples[c][i], 0.05);
}

TEST(Edf, MalformedHeadersReportOffsets) {
    EdfSpec s;
    s.labels = {"Cz"};
    auto bytes = build_edf(s, [](std::size_t, std::size_t) { return std::int16_t(0); });
    {
        auto bad = bytes;
        bad.resize(100);
        EXPECT_THROW(parse_edf(bad), ParseError);
    }
    {
        auto bad = bytes;
        bad[252] = 'x';
        try {
            parse_edf(bad);
            FAIL();
        } catch (const ParseError& e) {
            EXPECT_EQ(e.offset(), 252u);
        }
    }
    {
        auto bad = bytes;
        bad.pop_back();
        EXPECT_THROW(parse_edf(bad), ParseError);
    }
    {
        auto bad = bytes;
        bad[0] = 0xFF;
        EXPECT_THROW(parse_edf(bad), UnsupportedFormat);
    }
}

TEST(Edf, AnnotationSignalIgnored) {
    EdfSpec s;
    s.labels = {"Cz", "EDF Annotations"};
    const auto rec = parse_edf(build_edf(s, [](std::size_t, std::size_t) { return std::int16_t(1); }));
    EXPECT_EQ(rec.channel_labels, std::vector<std::string>{"Cz"});
}

TEST(Montage, SelfPairIsZero) {
    const auto rec = nine_channel(256, 100);
    const auto out = derive_montage(rec, parse_montage("F3-F3"));
    for (double v : out.samples[0]) EXPECT_EQ(v, 0.0);
}

TEST(Montage, CnnMontageWithParietalFallback) {
    const auto out = derive_montage(nine_channel(256, 10), cnn_montage());
    EXPECT_EQ(out.channel_labels, (std::vector<std::string>{"F3-C3", "F4-C4", "T3-P3", "T4-P4"}));
}

TEST(Montage, SineMinusNegatedSine) {
    Recording rec;
    rec.fs = 256;
    rec.channel_labels = {"A1", "B1"};
    std::vector<double> a(512), b(512);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::sin(2 * std::numbers::pi * i / 64.0);
        b[i] = -a[i];
    }
    rec.samples = {a, b};
    const auto out = derive_montage(rec, parse_montage("A1-B1"));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(out.samples[0][i], a[i] - b[i]);
}

TEST(Montage, MissingLabelNamed) {
    auto rec = nine_channel(256, 10);
    rec.channel_labels[5] = "X";
    try {
        derive_montage(rec, cnn_montage());
        FAIL();
    } catch (const MontageError& e) {
        EXPECT_NE(std::string(e.what()).find("T3"), std::string::npos);
    }
}

TEST(Montage, Linearity) {
    const auto rec = nine_channel(256, 300);
    auto scaled = rec;
    for (auto& ch : scaled.samples)
        for (auto& v : ch) v *= -2.5;
    const auto a = derive_montage(rec, neural_montage());
    const auto b = derive_montage(scaled, neural_montage());
    for (std::size_t c = 0; c < a.samples.size(); ++c)
        for (std::size_t i = 0; i < 300; ++i) EXPECT_NEAR(b.samples[c][i], -2.5 * a.samples[c][i], 1e-9);
}

TEST(Montage, ParseAndHemispherePairs) {
    const auto m = parse_montage("F3-C3, F4-C4,T3-O1,T4-O2");
    ASSERT_EQ(m.pairs.size(), 4u);
    EXPECT_EQ(m.hemisphere_pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {2, 3}}));
    EXPECT_THROW(parse_montage("F3C3"), MontageError);
    EXPECT_THROW(parse_montage(""), MontageError);
    EXPECT_EQ(montage_by_name("gasf").pairs.size(), 3u);
    EXPECT_EQ(neural_montage().pairs.size(), 8u);
}

TEST(Labels, Parsing) {
    EXPECT_EQ(parse_label_rows("epoch_id,subject_id,grade\ne001,s01,4\n").front().grade, 4);
    EXPECT_THROW(parse_label_rows("epoch_id,subject_id,grade\ne001,s01,0\n"), LabelError);
    EXPECT_THROW(parse_label_rows("epoch_id,subject_id,grade\ne001,s01,5\n"), LabelError);
    EXPECT_THROW(parse_label_rows("epoch_id,subject_id,grade\ne001,s01,2\ne001,s02,3\n"), LabelError);
    EXPECT_THROW(parse_label_rows("id,grade\n"), LabelError);
}

TEST(Labels, HundredFiveRows) {
    std::vector<LabelRow> rows;
    for (int i = 0; i < 105; ++i) rows.push_back({"e" + std::to_string(i), "s" + std::to_string(i % 30), 1 + i % 4});
    const auto path = temp_file("labels.csv");
    atomic_write(path, format_label_rows(rows));
    EXPECT_EQ(load_labels(path).size(), 105u);
    std::filesystem::remove(path);
}

TEST(SignalCsv, RoundTripWithSidecar) {
    auto rec = nine_channel(250, 40);
    rec.subject_id = "s07";
    rec.start_offset = 21600;
    for (auto& ch : rec.samples)
        for (auto& v : ch) v = std::round(v * 1000) / 1000;
    const auto path = temp_file("signal.csv");
    write_signal_csv(rec, path);
    const auto back = read_signal_csv(path);
    EXPECT_EQ(back, rec);
    std::filesystem::remove(path);
    std::filesystem::remove(sidecar_path(path));
}

TEST(SignalCsv, MissingSidecarIsParseError) {
    const auto path = temp_file("nosidecar.csv");
    atomic_write(path, "Cz\n1\n");
    EXPECT_THROW(read_signal_csv(path), ParseError);
    std::filesystem::remove(path);
}

TEST(Split, TwoSubjects) {
    const std::vector<EpochRef> e{{"a1", "A"}, {"a2", "A"}, {"b1", "B"}, {"b2", "B"}};
    const auto s = split_by_subject(e, 0.5, 3);
    EXPECT_EQ(s.train.size(), 2u);
    EXPECT_EQ(s.test.size(), 2u);
    EXPECT_EQ(s.train.count("a1"), s.train.count("a2"));
}

TEST(Split, DeterministicAndLeakFree) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> per(1, 5);
    std::vector<EpochRef> e;
    for (int subject = 0; subject < 53; ++subject)
        for (int k = per(rng); k > 0; --k)
            e.push_back({"s" + std::to_string(subject) + "_" + std::to_string(k), "s" + std::to_string(subject)});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = split_by_subject(e, 0.6, seed);
        const auto b = split_by_subject(e, 0.6, seed);
        EXPECT_EQ(a.train, b.train);
        EXPECT_EQ(a.test, b.test);
        std::set<std::string> train_subjects, test_subjects;
        for (const auto& x : e) {
            const bool in_train = a.train.count(x.epoch_id) > 0, in_test = a.test.count(x.epoch_id) > 0;
            EXPECT_NE(in_train, in_test);
            (in_train ? train_subjects : test_subjects).insert(x.subject_id);
        }
        for (const auto& s : train_subjects) EXPECT_EQ(test_subjects.count(s), 0u) << s;
        const double frac = static_cast<double>(a.train.size()) / e.size();
        EXPECT_NEAR(frac, 0.6, 0.06);
    }
}

TEST(Split, Errors) {
    const std::vector<EpochRef> one{{"a", "S"}, {"b", "S"}};
    EXPECT_THROW(split_by_subject(one, 0.5, 1), SplitError);
    const std::vector<EpochRef> two{{"a", "S"}, {"b", "T"}};
    EXPECT_THROW(split_by_subject(two, 1.0, 1), SplitError);
    EXPECT_THROW(split_by_subject(two, 0.0, 1), SplitError);
}

TEST(GradedEpoch, DurationAndGrade) {
    GradedEpoch e{"e", "s", nine_channel(4, 4 * 3600), 3};
    EXPECT_NO_THROW(e.validate());
    e.grade = 0;
    EXPECT_THROW(e.validate(), LabelError);
    e.grade = 2;
    e.recording.samples.assign(9, std::vector<double>(4 * 3000));
    EXPECT_THROW(e.validate(), Error);
}
