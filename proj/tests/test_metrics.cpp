// Copyright 2026 The JML Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "jml/metrics.hpp"
#include "metric_check.hpp"

namespace {

namespace m = jml::metrics;
using jml::Shape;
using jml::Tensor;

TEST(Metrics, MatchBruteForceOnSmallInstances)
{
    std::mt19937_64 rng(2026);
    oracle::Deviation dev;
    for (std::size_t i = 0; i < 1000; ++i) {
        oracle::compare_instance(oracle::draw_instance(rng, i), dev);
    }
    EXPECT_TRUE(dev.counts_exact);
    EXPECT_LE(dev.ratio, 1e-12);
    EXPECT_LE(dev.bece_vs_ece, 1e-12);
    EXPECT_EQ(dev.compared, 1000u);
}

TEST(Metrics, MaskedCalibrationMatchesOracle)
{
    std::mt19937_64 rng(7);
    for (std::size_t i = 0; i < 300; ++i) {
        auto in = oracle::draw_instance(rng, i);
        std::vector<int> truth;
        std::vector<std::vector<double>> rows(in.classes);
        for (std::size_t b = 0; b < in.truth.size(); ++b) {
            const std::size_t p = in.truth[b].size();
            truth.insert(truth.end(), in.truth[b].begin(), in.truth[b].end());
            for (std::size_t c = 0; c < in.classes; ++c) {
                rows[c].insert(rows[c].end(), in.probs[b].begin() + static_cast<long>(c * p),
                               in.probs[b].begin() + static_cast<long>((c + 1) * p));
            }
        }
        std::vector<double> joined;
        for (auto& r : rows) {
            joined.insert(joined.end(), r.begin(), r.end());
        }
        std::vector<std::uint8_t> mask(truth.size());
        for (auto& v : mask) {
            v = rng() % 2;
        }
        const double expected = oracle::calibration(in, false, mask);
        const Tensor probs(Shape{in.classes, truth.size()}, joined);
        if (std::isnan(expected)) {
            EXPECT_THROW(m::calibration_error(probs, truth, in.bins, m::CalibrationKind::ece, &mask),
                         std::domain_error);
            continue;
        }
        EXPECT_NEAR(m::calibration_error(probs, truth, in.bins, m::CalibrationKind::ece, &mask).value, expected,
                    1e-12);
    }
}

TEST(Metrics, BinEdges)
{
    m::CalibrationBins bins(10);
    EXPECT_EQ(bins.bin_of(0.0), 0u);
    EXPECT_EQ(bins.bin_of(0.05), 0u);
    EXPECT_EQ(bins.bin_of(0.5), 5u);
    EXPECT_EQ(bins.bin_of(1.0), 9u);
    m::CalibrationBins eight(8);
    EXPECT_EQ(eight.bin_of(0.125), 1u);
    EXPECT_EQ(eight.bin_of(0.875), 7u);
}

TEST(Metrics, HandComputedExample)
{
    // 2 classes, 4 pixels: predictions 0,0,1,1 ; truth 0,1,1,ignored
    const Tensor probs(Shape{2, 4}, {0.9, 0.6, 0.2, 0.3, 0.1, 0.4, 0.8, 0.7});
    const std::vector<int> truth{0, 1, 1, 255};
    m::ConfusionAccumulator acc(2);
    acc.accumulate(m::argmax_labels(probs), truth, 255);
    EXPECT_EQ(acc.total(), 3u);
    EXPECT_EQ(acc.correct(), 2u);
    // class 0: I = 1, U = 2; class 1: I = 1, U = 2
    EXPECT_DOUBLE_EQ(m::miou(acc).value, 0.5);
    // conf 0.9 (correct), 0.6 (wrong), 0.8 (correct) in 10 bins
    const auto ece = m::calibration_error(probs, truth, 10, m::CalibrationKind::ece);
    EXPECT_NEAR(ece.value, (0.1 + 0.6 + 0.2) / 3.0, 1e-15);
}

TEST(Metrics, AbsentClassesAreSkipped)
{
    m::ConfusionAccumulator acc(3);
    acc.accumulate(std::vector<int>{0, 0}, std::vector<int>{0, 0}, std::nullopt);
    auto r = m::miou(acc);
    EXPECT_DOUBLE_EQ(r.value, 1.0);
    EXPECT_FALSE(r.per_class[1].has_value());
    m::ConfusionAccumulator empty(2);
    EXPECT_THROW(m::miou(empty), std::domain_error);
}

TEST(Metrics, RejectsBadInput)
{
    m::ConfusionAccumulator acc(2);
    EXPECT_THROW(acc.accumulate(std::vector<int>{2}, std::vector<int>{0}, std::nullopt), std::invalid_argument);
    EXPECT_THROW(acc.accumulate(std::vector<int>{0}, std::vector<int>{0, 1}, std::nullopt), std::invalid_argument);
    const Tensor unnormalized(Shape{2, 1}, {0.5, 0.2});
    EXPECT_THROW(m::calibration_error(unnormalized, std::vector<int>{0}, 10, m::CalibrationKind::ece),
                 std::invalid_argument);
}

TEST(Metrics, SerialAndParallelAgree)
{
    std::mt19937_64 rng(9);
    const std::size_t classes = 4, pixels = 20000;
    std::vector<double> p(classes * pixels);
    std::vector<int> truth(pixels);
    std::exponential_distribution<double> ex(1.0);
    for (std::size_t j = 0; j < pixels; ++j) {
        double total = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            total += p[c * pixels + j] = ex(rng);
        }
        for (std::size_t c = 0; c < classes; ++c) {
            p[c * pixels + j] /= total;
        }
        truth[j] = static_cast<int>(rng() % classes);
    }
    const Tensor probs(Shape{classes, pixels}, p);
    for (auto kind : {m::CalibrationKind::ece, m::CalibrationKind::sce}) {
        auto s = m::calibration_error(probs, truth, 15, kind, nullptr, 255, jml::Exec::serial);
        auto q = m::calibration_error(probs, truth, 15, kind, nullptr, 255, jml::Exec::parallel);
        EXPECT_NEAR(s.value, q.value, 1e-12);
        EXPECT_EQ(s.scored, q.scored);
    }
    m::ConfusionAccumulator a(classes), b(classes);
    const auto pred = m::argmax_labels(probs);
    a.accumulate(pred, truth, 255, jml::Exec::serial);
    b.accumulate(pred, truth, 255, jml::Exec::parallel);
    EXPECT_EQ(a, b);
}

TEST(Metrics, CsvWriters)
{
    const Tensor probs(Shape{2, 2}, {0.9, 0.3, 0.1, 0.7});
    const std::vector<int> truth{0, 1};
    std::ostringstream bins;
    m::write_bins_csv(bins, m::calibration_error(probs, truth, 2, m::CalibrationKind::ece));
    EXPECT_EQ(bins.str().substr(0, bins.str().find('\n')), "bin_lo,bin_hi,count,mean_conf,mean_acc");
    m::ConfusionAccumulator acc(3);
    acc.accumulate(std::vector<int>{0, 1}, truth, 255);
    std::ostringstream iou;
    m::write_class_iou_csv(iou, m::miou(acc));
    EXPECT_EQ(iou.str(), "class,iou\n0,1\n1,1\n2,\n");
}

}  // namespace
