#include <doctest.h>

#include "fluidrc/augmentation.hpp"
#include "fluidrc/errors.hpp"

#include <cmath>
#include <map>

using namespace fluidrc;

namespace {

std::vector<quantized_record> toy_train(int per_class, int intervals, int outputs)
{
    std::vector<quantized_record> out;
    for (auto c : all_classes)
        for (int v = 1; v <= per_class; ++v) {
            quantized_record r;
            r.label = {c, v};
            r.intervals = intervals;
            for (int i = 0; i < intervals * outputs; ++i)
                r.features.push_back(50.0 + 3.0 * static_cast<int>(c) + v + 0.1 * i);
            out.push_back(r);
        }
    return out;
}

} // namespace

TEST_CASE("32 real records augment to 200 with 25 per class")
{
    const auto train = toy_train(4, 2, 6);
    const auto all = gaussian_augment(train, {8.0, 200, 42});
    REQUIRE(all.size() == 200);
    std::map<pattern_class, int> per_class;
    int synthetic = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        ++per_class[all[i].label.cls];
        if (all[i].synthetic)
            ++synthetic;
        if (i < train.size()) {
            CHECK_FALSE(all[i].synthetic);
            CHECK(all[i].features == train[i].features);
        }
    }
    CHECK(synthetic == 168);
    for (auto c : all_classes)
        CHECK(per_class[c] == 25);
}

TEST_CASE("synthetic class counts differ by at most one")
{
    const auto train = toy_train(3, 1, 3);
    const auto all = gaussian_augment(train, {8.0, 24 + 13, 1});
    std::map<pattern_class, int> counts;
    for (const auto& r : all)
        if (r.synthetic)
            ++counts[r.label.cls];
    int lo = 1000;
    int hi = 0;
    for (auto c : all_classes) {
        lo = std::min(lo, counts[c]);
        hi = std::max(hi, counts[c]);
    }
    CHECK(hi - lo <= 1);
}

TEST_CASE("sigma 0 copies sources exactly")
{
    const auto train = toy_train(2, 5, 9);
    const auto all = gaussian_augment(train, {0.0, 64, 9});
    for (const auto& r : all) {
        bool matched = false;
        for (const auto& t : train)
            matched = matched || (t.label == r.label && t.features == r.features);
        CHECK(matched);
    }
}

TEST_CASE("each series shifts by a single offset")
{
    const int q = 10;
    const int outputs = 9;
    const auto train = toy_train(1, q, outputs);
    const auto all = gaussian_augment(train, {8.0, 200, 3});
    for (std::size_t i = train.size(); i < all.size(); ++i) {
        const auto& syn = all[i];
        const auto& src = train[i % n_classes];
        REQUIRE(src.label.cls == syn.label.cls);
        for (int s = 0; s < outputs; ++s) {
            double lo = 1e300;
            double hi = -1e300;
            for (int j = 0; j < q; ++j) {
                const double d = syn.features[s * q + j] - src.features[s * q + j];
                lo = std::min(lo, d);
                hi = std::max(hi, d);
            }
            // Exact up to the rounding of x + o - x.
            CHECK(hi - lo <= 1e-12);
        }
    }
}

TEST_CASE("10,000 offsets at sigma 8 have the expected moments")
{
    // One output with one interval: each synthetic feature is source + offset.
    std::vector<quantized_record> train;
    for (auto c : all_classes) {
        quantized_record r;
        r.label = {c, 1};
        r.features = {0.0};
        train.push_back(r);
    }
    const auto all = gaussian_augment(train, {8.0, 8 + 10000, 2024});
    double sum = 0.0;
    double sq = 0.0;
    int n = 0;
    for (const auto& r : all)
        if (r.synthetic) {
            sum += r.features[0];
            sq += r.features[0] * r.features[0];
            ++n;
        }
    REQUIRE(n == 10000);
    const double mean = sum / n;
    const double sd = std::sqrt((sq - n * mean * mean) / (n - 1));
    CHECK(mean >= -0.25);
    CHECK(mean <= 0.25);
    CHECK(sd >= 7.6);
    CHECK(sd <= 8.4);
}

TEST_CASE("augmentation is deterministic given the seed")
{
    const auto train = toy_train(2, 2, 6);
    const auto a = gaussian_augment(train, {8.0, 100, 77});
    const auto b = gaussian_augment(train, {8.0, 100, 77});
    const auto c = gaussian_augment(train, {8.0, 100, 78});
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i].features == b[i].features);
    CHECK(a.back().features != c.back().features);
    // A longer run starts with the same synthetic records.
    const auto longer = gaussian_augment(train, {8.0, 140, 77});
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(longer[i].features == a[i].features);
}

TEST_CASE("augmentation error cases")
{
    auto train = toy_train(1, 1, 3);
    CHECK_THROWS_AS(gaussian_augment(train, {8.0, 4, 1}), config_error);
    CHECK_THROWS_AS(gaussian_generator(-1.0), config_error);
    auto missing = train;
    missing.pop_back();
    CHECK_THROWS_AS(gaussian_augment(missing, {8.0, 50, 1}), data_error);
    auto tainted = train;
    tainted[0].synthetic = true;
    CHECK_THROWS_AS(gaussian_augment(tainted, {8.0, 50, 1}), data_error);
    CHECK_THROWS_AS(require_real(tainted, "test"), data_error);
    CHECK_NOTHROW(require_real(train, "test"));
}

TEST_CASE("sigma sweep echoes sigmas in order")
{
    const auto train = toy_train(2, 1, 3);
    const auto test = toy_train(1, 1, 3);
    std::vector<double> seen;
    const auto rows = sigma_sweep(train, test, {1.0, 8.0, 15.0}, {8.0, 40, 5},
                                  [&](const std::vector<quantized_record>& aug,
                                      const std::vector<quantized_record>&) {
                                      CHECK(aug.size() == 40);
                                      seen.push_back(aug.back().features[0]);
                                      return 50.0;
                                  });
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].sigma == 1.0);
    CHECK(rows[1].sigma == 8.0);
    CHECK(rows[2].sigma == 15.0);
    for (const auto& r : rows) {
        CHECK(r.mean_accuracy >= 0.0);
        CHECK(r.mean_accuracy <= 100.0);
    }
    auto bad = test;
    bad[0].synthetic = true;
    CHECK_THROWS_AS(sigma_sweep(train, bad, {1.0}, {8.0, 40, 5},
                                [](const auto&, const auto&) { return 0.0; }),
                    data_error);
}
