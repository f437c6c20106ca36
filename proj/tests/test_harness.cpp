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
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "jml/config.hpp"
#include "jml/evaluation.hpp"
#include "jml/losscurve.hpp"
#include "jml/model.hpp"
#include "jml/ptf.hpp"
#include "jml/synthetic.hpp"
#include "jml/train.hpp"

namespace {

namespace fs = std::filesystem;
namespace hs = jml::harness;
using jml::Shape;
using jml::Tensor;

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("jml_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

hs::ExperimentConfig tiny_config(hs::Technique technique)
{
    hs::ExperimentConfig c;
    c.seed = 3;
    c.technique = technique;
    c.dataset.height = 12;
    c.dataset.width = 12;
    c.dataset.train_images = 4;
    c.dataset.val_images = 2;
    c.dataset.shape_density = 1.5;
    c.optimizer.iterations = 12;
    c.optimizer.crop = 8;
    c.eval.interval = 5;
    c.kd.teacher_iterations = 6;
    c.kd.width_multiplier = 2;
    return c;
}

TEST(Ptf, RoundTrip)
{
    std::stringstream buf;
    const std::vector<float> data{1.5f, -2.0f, 0.25f, 3.0f, 4.0f, 5.0f};
    jml::ptf::write(buf, {2, 3}, data);
    const std::string bytes = buf.str();
    ASSERT_EQ(bytes.size(), 4u + 4u + 8u + 24u);
    EXPECT_EQ(bytes.substr(0, 4), "PTF1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2u);  // little-endian rank
    auto back = jml::ptf::read(buf);
    EXPECT_EQ(back.shape, (Shape{2, 3}));
    EXPECT_EQ(back.data, data);
}

TEST(Ptf, RejectsMalformedInput)
{
    std::stringstream bad_magic("PTF2\x01\x00\x00\x00");
    EXPECT_THROW(jml::ptf::read(bad_magic), std::runtime_error);
    std::stringstream truncated;
    jml::ptf::write(truncated, {4}, std::vector<float>{1, 2, 3, 4});
    std::string s = truncated.str();
    std::stringstream cut(s.substr(0, s.size() - 2));
    EXPECT_THROW(jml::ptf::read(cut), std::runtime_error);
    std::stringstream trailing(s + "x");
    EXPECT_THROW(jml::ptf::read(trailing), std::runtime_error);
    EXPECT_THROW(jml::ptf::write(truncated, {3}, std::vector<float>{1}), std::invalid_argument);
}

TEST(Ptf, TensorFiles)
{
    auto dir = scratch("ptf");
    Tensor t(Shape{2, 2}, {0.5, 0.25, 1.0, 0.0});
    jml::ptf::write_tensor(dir / "t.ptf", t);
    EXPECT_EQ(jml::ptf::read_tensor(dir / "t.ptf"), t);
    EXPECT_THROW(jml::ptf::read_tensor(dir / "missing.ptf"), std::runtime_error);
    fs::remove_all(dir);
}

TEST(Config, JsonRoundTripAndDefaults)
{
    hs::ExperimentConfig c = tiny_config(hs::Technique::kd);
    c.loss.variant.family = jml::losses::Family::jml2;
    c.loss.active = jml::losses::ActiveClassPolicy{jml::losses::ActiveMode::both, 0.2};
    c.weights.lambda_ce = 0.4;
    auto j = hs::to_json(c);
    auto back = hs::config_from_json(j);
    EXPECT_EQ(hs::to_json(back), j);

    auto defaults = hs::config_from_json(nlohmann::json::object());
    EXPECT_EQ(defaults.optimizer.learning_rate, 0.01);
    EXPECT_EQ(defaults.optimizer.momentum, 0.9);
    EXPECT_EQ(defaults.optimizer.poly_power, 0.9);
    EXPECT_EQ(defaults.weights.lambda_ce, 0.25);
    EXPECT_EQ(defaults.weights.lambda_jml, 0.75);
    EXPECT_EQ(defaults.loss.smoothing_epsilon, 0.5);
    EXPECT_EQ(defaults.loss.boundary_kernel, 3u);
    EXPECT_EQ(defaults.loss.teacher_active.mode, jml::losses::ActiveMode::label);
}

TEST(Config, RejectsInvalidConfigs)
{
    EXPECT_THROW(hs::config_from_json(nlohmann::json{{"sed", 1}}), std::invalid_argument);
    EXPECT_THROW(hs::config_from_json(nlohmann::json{{"optimizer", {{"iterations", 0}}}}), std::invalid_argument);
    EXPECT_THROW(hs::config_from_json(nlohmann::json{{"optimizer", {{"batch_size", 0}}}}), std::invalid_argument);
    EXPECT_THROW(hs::config_from_json(nlohmann::json{{"technique", "magic"}}), std::invalid_argument);
    EXPECT_THROW(hs::config_from_json(nlohmann::json{{"loss", {{"boundary_kernel", 4}}}}), std::invalid_argument);
    EXPECT_THROW(hs::config_from_json(nlohmann::json{{"dataset", {{"classes", 1}}}}), std::invalid_argument);
    EXPECT_THROW(hs::config_from_json(nlohmann::json{{"dataset", {{"height", 16}}}, {"optimizer", {{"crop", 20}}}}),
                 std::invalid_argument);
}

TEST(Synthetic, DeterministicAndInRange)
{
    hs::DatasetSpec spec;
    spec.height = 20;
    spec.width = 16;
    spec.train_images = 3;
    spec.val_images = 2;
    auto a = hs::generate_synthetic(spec, 5);
    auto b = hs::generate_synthetic(spec, 5);
    auto c = hs::generate_synthetic(spec, 6);
    ASSERT_EQ(a.train.size(), 3u);
    ASSERT_EQ(a.val.size(), 2u);
    EXPECT_EQ(a.train[1].features, b.train[1].features);
    EXPECT_EQ(a.train[1].labels.classes, b.train[1].labels.classes);
    EXPECT_NE(a.train[1].features, c.train[1].features);
    EXPECT_EQ(a.train[0].features.shape(), (Shape{6, 20, 16}));
    for (const auto& s : a.train) {
        EXPECT_NO_THROW(s.labels.validate(4));
    }
    EXPECT_EQ(hs::draw_layout(spec, 5, 0).classes, a.train[0].clean.classes);
}

TEST(Synthetic, JitterOnlyMovesBoundaryPixels)
{
    hs::DatasetSpec spec;
    spec.height = 32;
    spec.width = 32;
    spec.boundary_jitter = 1.0;
    auto d = hs::generate_synthetic(spec, 2);
    for (const auto& s : d.train) {
        auto boundary = jml::labels::boundary_mask(s.clean, 3);
        for (std::size_t i = 0; i < s.clean.size(); ++i) {
            if (!boundary[i]) {
                EXPECT_EQ(s.labels.classes[i], s.clean.classes[i]);
            }
        }
    }
}

TEST(Model, PatchFeaturesReplicateBorders)
{
    Tensor f(Shape{1, 2, 2}, {1, 2, 3, 4});
    auto p = hs::patch_features(f, 3);
    ASSERT_EQ(p.shape(), (Shape{9, 4}));
    // pixel (0, 0): neighbourhood rows -1..1, cols -1..1 clamped
    const std::vector<double> expect{1, 1, 2, 1, 1, 2, 3, 3, 4};
    for (std::size_t r = 0; r < 9; ++r) {
        EXPECT_EQ(p[r * 4], expect[r]) << r;
    }
    EXPECT_EQ(hs::patch_features(f, 3, jml::Exec::serial), p);
    EXPECT_THROW(hs::patch_features(f, 2), std::invalid_argument);
}

TEST(Model, PredictMatchesGraphAndSerializes)
{
    hs::Mlp m(hs::MlpSpec{5, {7, 3}, 4}, 9);
    EXPECT_EQ(m.names(), (std::vector<std::string>{"w0", "b0", "w1", "b1", "w2", "b2"}));
    Tensor x(Shape{5, 6});
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::sin(static_cast<double>(i));
    }
    jml::ad::Graph g;
    auto probs = jml::ad::softmax(m.forward(g, g.constant(x)), 0);
    jml::ad::Evaluator ev(g, m.bindings());
    const Tensor& a = ev.value(probs);
    const Tensor b = m.predict(x);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a[i], b[i], 1e-14);
    }
    auto copy = hs::Mlp::from_json(m.to_json());
    EXPECT_EQ(copy.params(), m.params());
}

TEST(Evaluation, PerfectPredictions)
{
    jml::labels::LabelMap map(2, 2, {0, 1, 1, 255});
    Tensor probs(Shape{2, 1, 2, 2}, {1, 0, 0, 0.5, 0, 1, 1, 0.5});
    auto m = hs::evaluate_predictions(probs, {map}, 15, 3);
    EXPECT_DOUBLE_EQ(m.acc, 1.0);
    EXPECT_DOUBLE_EQ(m.miou_dataset, 1.0);
    EXPECT_DOUBLE_EQ(m.ece, 0.0);
    EXPECT_DOUBLE_EQ(m.bece, 0.0);
}

TEST(Training, TargetsByTechnique)
{
    jml::labels::LabelMap map(1, 4, {0, 0, 1, 1});
    jml::losses::LossConfig loss;
    loss.smoothing_epsilon = 0.2;
    loss.boundary_kernel = 1;
    auto hard = hs::training_targets(map, 2, hs::Technique::supervised, loss);
    auto uni = hs::training_targets(map, 2, hs::Technique::ls, loss);
    auto bls = hs::training_targets(map, 2, hs::Technique::bls, loss);
    EXPECT_EQ(hard.values.storage(), (std::vector<double>{1, 1, 0, 0, 0, 0, 1, 1}));
    EXPECT_NEAR(uni.values[0], 0.9, 1e-15);
    // k = 1 has no boundary pixels
    EXPECT_EQ(bls.values, hard.values);
}

TEST(Training, DeterministicWithHistory)
{
    auto c = tiny_config(hs::Technique::supervised);
    auto a = hs::train(c);
    auto b = hs::train(c);
    ASSERT_EQ(a.student.history.size(), 3u);  // iterations 5, 10, 12
    EXPECT_EQ(a.student.history.back().iteration, 12u);
    EXPECT_EQ(a.student.val_probs, b.student.val_probs);
    EXPECT_EQ(a.student.model.params(), b.student.model.params());
    for (const auto& row : a.student.history) {
        EXPECT_TRUE(std::isfinite(row.train_loss));
    }
    // poly schedule: lr_t = lr (1 - t / T)^0.9 for the step t = 11 (0-based)
    EXPECT_NEAR(a.student.history.back().learning_rate, 0.01 * std::pow(1.0 - 11.0 / 12.0, 0.9), 1e-15);
}

TEST(Training, WholeImageCropMatchesNoCrop)
{
    for (auto t : {hs::Technique::supervised, hs::Technique::kd, hs::Technique::ssl}) {
        auto c = tiny_config(t);
        c.optimizer.crop = 0;
        auto whole = hs::train(c);
        c.optimizer.crop = 12;
        auto covering = hs::train(c);
        EXPECT_EQ(whole.student.val_probs, covering.student.val_probs) << hs::to_string(t);
        c.optimizer.crop = 8;
        auto cropped = hs::train(c);
        EXPECT_NE(whole.student.val_probs, cropped.student.val_probs) << hs::to_string(t);
        EXPECT_EQ(cropped.student.val_probs.shape(), whole.student.val_probs.shape());
    }
}

TEST(Training, PresentModeSkipsAbsentClasses)
{
    auto c = tiny_config(hs::Technique::supervised);
    c.dataset.classes = 5;
    c.dataset.shape_density = 0.5;
    c.optimizer.batch_size = 1;
    std::size_t smaller = 0;
    hs::TrainHooks hooks;
    hooks.on_step = [&](std::size_t, const jml::compose::Objective& obj) {
        for (const auto& term : obj.terms) {
            if (term.name == "jml") {
                EXPECT_FALSE(term.active_classes.empty());
                smaller += term.active_classes.size() < 5 ? 1 : 0;
            }
        }
    };
    hs::train(c, hooks);
    EXPECT_GT(smaller, 0u);
}

TEST(Training, EveryTechniqueRunsAndWritesArtifacts)
{
    for (auto t : {hs::Technique::ls, hs::Technique::bls, hs::Technique::kd, hs::Technique::ssl}) {
        auto c = tiny_config(t);
        auto r = hs::train(c);
        EXPECT_EQ(r.teacher.has_value(), t == hs::Technique::kd);
        auto dir = scratch(std::string(hs::to_string(t)));
        hs::write_artifacts(r, dir);
        for (const char* f : {"history.csv", "final_metrics.json", "config.json", "model.json", "class_iou.csv",
                              "calibration_bins.csv", "predictions.ptf", "val_labels.ptf"}) {
            EXPECT_TRUE(fs::exists(dir / f)) << f;
        }
        EXPECT_EQ(fs::exists(dir / "teacher_history.csv"), t == hs::Technique::kd);
        auto header = slurp(dir / "history.csv");
        EXPECT_EQ(header.substr(0, header.find('\n')),
                  "iteration,train_loss,lr,acc,miou_dataset,miou_image,ece,bece,sce,bsce");
        fs::remove_all(dir);
    }
}

TEST(LossCurve, ShapesAndCsv)
{
    auto curve = hs::losscurve("jml1,ce", 0.9, 11);
    ASSERT_EQ(curve.x.size(), 11u);
    EXPECT_DOUBLE_EQ(curve.x.back(), 1.0);
    EXPECT_NEAR(curve.values[0][9], 0.0, 1e-15);
    auto csv = curve.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,jml1,ce");
    EXPECT_THROW(hs::losscurve("nope", 0.5, 11), std::invalid_argument);
    EXPECT_THROW(hs::losscurve("jml1", 1.5, 11), std::invalid_argument);
    EXPECT_NEAR(hs::curve_value("ce", 0.25, 1.0), -std::log(0.25), 1e-15);
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(JML_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, GenDataAndCalibrate)
{
    auto dir = scratch("cli");
    std::ofstream(dir / "spec.json") << R"({"height": 8, "width": 8, "train_images": 2, "val_images": 1})";
    ASSERT_EQ(run_cli("gen-data --spec " + (dir / "spec.json").string() + " --seed 4 --out-dir " + dir.string()),
              0);
    auto labels = jml::ptf::read_file(dir / "val_labels.ptf");
    EXPECT_EQ(labels.shape, (Shape{1, 8, 8}));
    EXPECT_EQ(jml::ptf::read_file(dir / "train_features.ptf").shape, (Shape{2, 6, 8, 8}));

    // one-hot predictions of the labels themselves
    Tensor pred(Shape{4, 1, 8, 8});
    for (std::size_t i = 0; i < 64; ++i) {
        pred[static_cast<std::size_t>(labels.data[i]) * 64 + i] = 1.0;
    }
    jml::ptf::write_tensor(dir / "pred.ptf", pred);
    ASSERT_EQ(run_cli("calibrate --pred " + (dir / "pred.ptf").string() + " --labels " +
                      (dir / "val_labels.ptf").string() + " --out " + (dir / "m.json").string()),
              0);
    auto j = nlohmann::json::parse(slurp(dir / "m.json"));
    EXPECT_DOUBLE_EQ(j.at("acc").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(j.at("ece").get<double>(), 0.0);

    EXPECT_NE(run_cli("train --config " + (dir / "missing.json").string() + " --out-dir " + dir.string()), 0);
    EXPECT_NE(run_cli("losscurve --loss jml1 --y 2"), 0);
    fs::remove_all(dir);
}

TEST(Cli, VerifyExitCode)
{
    auto dir = scratch("verify");
    const std::string out = (dir / "v.json").string();
    ASSERT_EQ(run_cli("verify --axiom-samples 200 --pair-samples 200 --ordering-samples 200 --gradient-points 2 "
                      "--sign-samples 50 --out " +
                      out),
              0);
    auto j = nlohmann::json::parse(slurp(out));
    EXPECT_TRUE(j.at("all_pass").get<bool>());
    EXPECT_GT(j.at("checks").size(), 20u);
    fs::remove_all(dir);
}

}  // namespace
