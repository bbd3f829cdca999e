#include <doctest.h>

#include "fluidrc/errors.hpp"
#include "fluidrc/record_io.hpp"
#include "fluidrc/reservoir.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

using namespace fluidrc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("fluidrc_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string csv_of(const signal_record& r)
{
    std::ostringstream s;
    write_signal_csv(s, r);
    return s.str();
}

signal_record sample_record()
{
    const auto corpus = canonical_corpus();
    auto recs = run_corpus({corpus[13]}, default_topology(), {}, sensor_noise{2.0, 4});
    recs[0].config_hash = "00000000deadbeef";
    return recs[0];
}

} // namespace

TEST_CASE("format_double round trips exactly")
{
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(gen);
        CHECK(parse_double(format_double(v), "t") == v);
    }
    CHECK(format_double(120.0) == "120");
    CHECK(parse_double(format_double(0.1), "t") == 0.1);
    CHECK_THROWS_AS(parse_double("12x", "t"), data_error);
    CHECK_THROWS_AS(parse_double("", "t"), data_error);
}

TEST_CASE("signal CSV header and shape")
{
    const auto rec = sample_record();
    const auto text = csv_of(rec);
    CHECK(text.rfind("frame,D1_R,D1_G,D1_B,D2_R,D2_G,D2_B,D3_R,D3_G,D3_B\n", 0) == 0);
    std::istringstream in(text);
    const auto back = read_signal_csv(in, "mem.csv");
    CHECK(back.same_signals(rec));
}

TEST_CASE("simulate -> persist -> ingest is the identity for the whole corpus")
{
    const auto dir = scratch("corpus");
    const auto recs = run_corpus(canonical_corpus(), default_topology(), {}, sensor_noise{2.0, 17});
    write_signal_dir(dir, recs);
    const auto back = read_signal_dir(dir);
    REQUIRE(back.size() == 80);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(back[i].label == recs[i].label);
        CHECK(back[i].seed == recs[i].seed);
        CHECK(back[i].same_signals(recs[i]));
    }
    fs::remove_all(dir);
}

TEST_CASE("signal CSV error cases are line numbered")
{
    const auto rec = sample_record();
    const auto text = csv_of(rec);

    SUBCASE("missing header")
    {
        std::istringstream in(text.substr(text.find('\n') + 1));
        try {
            read_signal_csv(in, "x.csv");
            FAIL("expected data_error");
        } catch (const data_error& e) {
            CHECK(std::string(e.what()).find("x.csv:1") != std::string::npos);
        }
    }
    SUBCASE("1799 rows is a dimension error")
    {
        auto cut = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
        std::istringstream in(cut);
        CHECK_THROWS_AS(read_signal_csv(in, "x.csv"), dimension_error);
    }
    SUBCASE("bad number")
    {
        auto bad = text;
        const auto pos = bad.find("\n1,") + 3;
        bad.replace(pos, 1, "q");
        std::istringstream in(bad);
        try {
            read_signal_csv(in, "x.csv");
            FAIL("expected data_error");
        } catch (const data_error& e) {
            CHECK(std::string(e.what()).find("x.csv:3") != std::string::npos);
        }
    }
    SUBCASE("out of range value")
    {
        auto r2 = rec;
        r2.series[3][7] = 300.0;
        std::istringstream in(csv_of(r2));
        CHECK_THROWS_AS(read_signal_csv(in, "x.csv"), data_error);
    }
    SUBCASE("frame out of sequence")
    {
        auto bad = text;
        const auto pos = bad.find("\n5,");
        bad.replace(pos + 1, 1, "6");
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_signal_csv(in, "x.csv"), data_error);
    }
    SUBCASE("missing column")
    {
        auto bad = text;
        const auto line_end = bad.find('\n', bad.find("\n2,") + 1);
        bad.erase(bad.rfind(',', line_end), line_end - bad.rfind(',', line_end));
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_signal_csv(in, "x.csv"), data_error);
    }
}

TEST_CASE("signal sidecar is required and validated")
{
    const auto dir = scratch("sidecar");
    const auto rec = sample_record();
    const auto path = dir / signal_file_name(rec.label);
    write_signal_record(path, rec);
    const auto back = read_signal_record(path);
    CHECK(back.config_hash == rec.config_hash);
    CHECK(back.label == rec.label);

    write_text_file(dir / (path.stem().string() + ".json"), "{\"class\": \"PZ\", \"variant\": 1}");
    CHECK_THROWS_AS(read_signal_record(path), data_error);
    fs::remove(dir / (path.stem().string() + ".json"));
    CHECK_THROWS_AS(read_signal_record(path), data_error);
    CHECK_THROWS_AS(read_signal_record(dir / "nope.csv"), data_error);
    CHECK_THROWS_AS(read_signal_dir(dir / "missing"), data_error);
    fs::remove_all(dir);
}

TEST_CASE("quantized CSV round trip with and without the synthetic flag")
{
    const auto dir = scratch("quant");
    const auto recs = quantize_all(run_corpus(canonical_corpus(), default_topology(), {}),
                                   quantization_config{5, {0, 2}});
    const auto path = dir / "q.csv";
    write_quantized_file(path, recs, quantization_config{5, {0, 2}});
    const auto back = read_quantized_file(path);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(back[i].features == recs[i].features);
        CHECK(back[i].label == recs[i].label);
        CHECK(back[i].intervals == 5);
        CHECK_FALSE(back[i].synthetic);
    }
    std::ostringstream s;
    write_quantized_csv(s, recs, false);
    CHECK(s.str().rfind("feature_0,feature_1,", 0) == 0);
    CHECK(s.str().find("feature_29,class,variant\n") != std::string::npos);

    auto flagged = recs;
    flagged[3].synthetic = true;
    std::ostringstream f;
    write_quantized_csv(f, flagged, true);
    std::istringstream fin(f.str());
    const auto fb = read_quantized_csv(fin, "f.csv", 5);
    CHECK(fb[3].synthetic);
    CHECK_FALSE(fb[2].synthetic);

    std::istringstream bad_q(s.str());
    CHECK_THROWS_AS(read_quantized_csv(bad_q, "q.csv", 7), data_error);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_quantized_csv(empty, "q.csv", 5), data_error);
    fs::remove_all(dir);
}

TEST_CASE("matrix CSV round trip")
{
    labeled_matrix m;
    m.labels = {"P1", "P2"};
    m.values = {0.0, 12.5, 12.5, 1.0 / 3.0};
    std::ostringstream s;
    write_matrix_csv(s, m);
    CHECK(s.str().rfind(",P1,P2\n", 0) == 0);
    std::istringstream in(s.str());
    const auto back = read_matrix_csv(in, "m.csv");
    CHECK(back.labels == m.labels);
    CHECK(back.values == m.values);
    std::istringstream bad("P1,P2\nP1,0,1\n");
    CHECK_THROWS_AS(read_matrix_csv(bad, "m.csv"), data_error);
}

TEST_CASE("report CSV writers produce labelled tables")
{
    mi_heatmap hm;
    hm.values[1][4] = 0.25;
    std::ostringstream h;
    write_heatmap_csv(h, hm);
    CHECK(h.str().find("D1_R") != std::string::npos);
    CHECK(h.str().find("0.25") != std::string::npos);

    sweep_grid g;
    g.cells.push_back({2, 4, 80.5, 1.5});
    std::ostringstream w;
    write_sweep_csv(w, g);
    CHECK(w.str().find("80.5") != std::string::npos);

    std::ostringstream a;
    write_area_csv(a, {{{0, 2}, 12, 70.0, 2.0, 65.0, 75.0}});
    CHECK(a.str().find("D1+D3,12,70") != std::string::npos);

    std::ostringstream sg;
    write_sigma_csv(sg, {{8.0, 77.0}});
    CHECK(sg.str().find("77") != std::string::npos);
}
