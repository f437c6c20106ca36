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

// Command-line front end: verify, losscurve, train, calibrate, gen-data.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "jml/config.hpp"
#include "jml/evaluation.hpp"
#include "jml/losscurve.hpp"
#include "jml/ptf.hpp"
#include "jml/synthetic.hpp"
#include "jml/train.hpp"
#include "jml/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit(const std::string& text, const std::string& out)
{
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream os(out);
    if (!os) {
        throw std::runtime_error("cannot write " + out);
    }
    os << text;
}

std::vector<jml::labels::LabelMap> label_maps_from(const jml::Tensor& t)
{
    if (t.rank() != 2 && t.rank() != 3) {
        throw std::invalid_argument("labels must be H x W or B x H x W, got " + jml::to_string(t.shape()));
    }
    const std::size_t images = t.rank() == 3 ? t.shape()[0] : 1;
    const std::size_t h = t.shape()[t.rank() - 2];
    const std::size_t w = t.shape()[t.rank() - 1];
    std::vector<jml::labels::LabelMap> maps;
    for (std::size_t b = 0; b < images; ++b) {
        std::vector<int> v(h * w);
        for (std::size_t i = 0; i < h * w; ++i) {
            const double x = t[b * h * w + i];
            if (x != std::floor(x)) {
                throw std::invalid_argument("labels must be integral class indices");
            }
            v[i] = static_cast<int>(x);
        }
        maps.emplace_back(h, w, std::move(v));
    }
    return maps;
}

void write_split(const fs::path& dir, const std::string& name, const std::vector<jml::harness::Sample>& samples)
{
    const auto& first = samples.front().features;
    const std::size_t f = first.shape()[0];
    const std::size_t h = first.shape()[1];
    const std::size_t w = first.shape()[2];
    jml::Tensor features(jml::Shape{samples.size(), f, h, w});
    jml::Tensor labels(jml::Shape{samples.size(), h, w});
    for (std::size_t b = 0; b < samples.size(); ++b) {
        for (std::size_t i = 0; i < f * h * w; ++i) {
            features[b * f * h * w + i] = samples[b].features[i];
        }
        for (std::size_t i = 0; i < h * w; ++i) {
            labels[b * h * w + i] = samples[b].labels.classes[i];
        }
    }
    jml::ptf::write_tensor(dir / (name + "_features.ptf"), features);
    jml::ptf::write_tensor(dir / (name + "_labels.ptf"), labels);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Jaccard metric losses: verification, loss curves, desk-scale training and calibration"};
    app.require_subcommand(1);

    auto* verify = app.add_subcommand("verify", "run the theory suite and print a JSON report");
    jml::harness::VerifyOptions vopt;
    std::string verify_out;
    verify->add_option("--seed", vopt.seed, "base seed");
    verify->add_option("--axiom-samples", vopt.axiom_samples, "samples per dimension for the metric axioms");
    verify->add_option("--pair-samples", vopt.pair_samples, "samples for equivalence and KD triangle checks");
    verify->add_option("--ordering-samples", vopt.ordering_samples, "samples for the JML1 <= JML2 check");
    verify->add_option("--gradient-points", vopt.gradient_points, "finite-difference points per loss");
    verify->add_option("--sign-samples", vopt.sign_samples, "configurations for the SJL-L1 sign check");
    verify->add_option("--out", verify_out, "report path (default stdout)");

    auto* curve = app.add_subcommand("losscurve", "single-pixel loss sweep as CSV");
    std::string curve_loss;
    double curve_y = 0.5;
    std::size_t curve_n = 101;
    std::string curve_out;
    curve->add_option("--loss", curve_loss, "comma-separated loss names")->required();
    curve->add_option("--y", curve_y, "label value in [0, 1]")->required();
    curve->add_option("--n", curve_n, "grid size (>= 2)");
    curve->add_option("--out", curve_out, "CSV path (default stdout)");

    auto* train = app.add_subcommand("train", "train on synthetic data and write reports");
    std::string train_config;
    std::string train_out;
    train->add_option("--config", train_config, "experiment config (JSON)")->required();
    train->add_option("--out-dir", train_out, "output directory")->required();

    auto* calibrate = app.add_subcommand("calibrate", "score stored predictions");
    std::string cal_pred;
    std::string cal_labels;
    std::size_t cal_bins = 15;
    std::size_t cal_k = 3;
    std::string cal_out;
    calibrate->add_option("--pred", cal_pred, "C x B x H x W (or C x H x W) probabilities, PTF")->required();
    calibrate->add_option("--labels", cal_labels, "B x H x W (or H x W) class indices, PTF; 255 = ignore")
        ->required();
    calibrate->add_option("--bins", cal_bins, "calibration bins");
    calibrate->add_option("--boundary-k", cal_k, "odd boundary kernel size");
    calibrate->add_option("--out", cal_out, "JSON path (default stdout)");

    auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset as PTF files");
    std::string gen_spec;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--spec", gen_spec, "dataset spec (JSON)")->required();
    gen->add_option("--seed", gen_seed, "seed");
    gen->add_option("--out-dir", gen_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) {
            const auto report = jml::harness::run_verify(vopt);
            json doc{{"suite", "theory"}, {"seed", vopt.seed}, {"all_pass", report.all_pass()},
                     {"checks", report.checks}};
            emit(doc.dump(2) + "\n", verify_out);
            return report.all_pass() ? 0 : 1;
        }
        if (curve->parsed()) {
            emit(jml::harness::losscurve(curve_loss, curve_y, curve_n).to_csv(), curve_out);
            return 0;
        }
        if (train->parsed()) {
            const auto config = jml::harness::load_config(train_config);
            const auto result = jml::harness::train(config);
            jml::harness::write_artifacts(result, train_out);
            std::cout << json{{"metrics", result.student.final_metrics.to_json()}}.dump(2) << '\n';
            return 0;
        }
        if (calibrate->parsed()) {
            jml::Tensor probs = jml::ptf::read_tensor(cal_pred);
            if (probs.rank() == 3) {
                probs = probs.reshaped({probs.shape()[0], 1, probs.shape()[1], probs.shape()[2]});
            }
            const auto maps = label_maps_from(jml::ptf::read_tensor(cal_labels));
            const auto m = jml::harness::evaluate_predictions(probs, maps, cal_bins, cal_k);
            emit(m.to_json().dump(2) + "\n", cal_out);
            return 0;
        }
        if (gen->parsed()) {
            std::ifstream is(gen_spec);
            if (!is) {
                throw std::runtime_error("cannot open " + gen_spec);
            }
            const auto spec = jml::harness::dataset_from_json(json::parse(is));
            const auto data = jml::harness::generate_synthetic(spec, gen_seed);
            fs::create_directories(gen_out);
            write_split(gen_out, "train", data.train);
            write_split(gen_out, "val", data.val);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
