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

#include "jml/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

namespace jml::harness {

using nlohmann::json;

std::string_view to_string(Technique t)
{
    switch (t) {
    case Technique::supervised: return "supervised";
    case Technique::ls: return "ls";
    case Technique::bls: return "bls";
    case Technique::kd: return "kd";
    case Technique::ssl: return "ssl";
    }
    return "?";
}

Technique parse_technique(std::string_view name)
{
    for (auto t : {Technique::supervised, Technique::ls, Technique::bls, Technique::kd, Technique::ssl}) {
        if (name == to_string(t)) {
            return t;
        }
    }
    throw std::invalid_argument("unknown technique '" + std::string(name) + "'; valid: supervised, ls, bls, kd, ssl");
}

namespace {

// Reads `key` into `out` if present.
template <class T>
void take(const json& j, const char* key, T& out)
{
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where)
{
    if (!j.is_object()) {
        throw std::invalid_argument(std::string("config: ") + where + " must be an object");
    }
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) {
            throw std::invalid_argument(std::string("config: unknown key '") + k + "' in " + where);
        }
    }
}

json policy_json(const losses::ActiveClassPolicy& p)
{
    return {{"mode", losses::to_string(p.mode)}, {"threshold", p.threshold}};
}

losses::ActiveClassPolicy policy_from(const json& j)
{
    reject_unknown(j, {"mode", "threshold"}, "active class policy");
    losses::ActiveClassPolicy p;
    if (j.contains("mode")) {
        p.mode = losses::parse_active_mode(j.at("mode").get<std::string>());
    }
    take(j, "threshold", p.threshold);
    return p;
}

}  // namespace

json to_json(const DatasetSpec& d)
{
    return {{"height", d.height},
            {"width", d.width},
            {"classes", d.classes},
            {"train_images", d.train_images},
            {"val_images", d.val_images},
            {"shape_density", d.shape_density},
            {"label_noise", d.label_noise},
            {"boundary_jitter", d.boundary_jitter},
            {"feature_noise", d.feature_noise},
            {"signal", d.signal}};
}

DatasetSpec dataset_from_json(const json& j)
{
    reject_unknown(j,
                   {"height", "width", "classes", "train_images", "val_images", "shape_density", "label_noise",
                    "boundary_jitter", "feature_noise", "signal"},
                   "dataset");
    DatasetSpec d;
    take(j, "height", d.height);
    take(j, "width", d.width);
    take(j, "classes", d.classes);
    take(j, "train_images", d.train_images);
    take(j, "val_images", d.val_images);
    take(j, "shape_density", d.shape_density);
    take(j, "label_noise", d.label_noise);
    take(j, "boundary_jitter", d.boundary_jitter);
    take(j, "feature_noise", d.feature_noise);
    take(j, "signal", d.signal);
    return d;
}

json to_json(const ExperimentConfig& c)
{
    const auto& l = c.loss;
    const auto& w = c.weights;
    json loss{{"family", losses::to_string(l.variant.family)},
              {"norm", losses::to_string(l.variant.norm)},
              {"alpha", l.variant.alpha},
              {"beta", l.variant.beta},
              {"active", l.active ? policy_json(*l.active) : json(nullptr)},
              {"teacher_active", policy_json(l.teacher_active)},
              {"scope", losses::to_string(l.scope)},
              {"smoothing_epsilon", l.smoothing_epsilon},
              {"boundary_kernel", l.boundary_kernel}};
    return {{"seed", c.seed},
            {"technique", to_string(c.technique)},
            {"dataset", to_json(c.dataset)},
            {"model", {{"patch", c.model.patch}, {"hidden", c.model.hidden}}},
            {"optimizer",
             {{"learning_rate", c.optimizer.learning_rate},
              {"momentum", c.optimizer.momentum},
              {"poly_power", c.optimizer.poly_power},
              {"weight_decay", c.optimizer.weight_decay},
              {"iterations", c.optimizer.iterations},
              {"batch_size", c.optimizer.batch_size},
              {"crop", c.optimizer.crop}}},
            {"loss", loss},
            {"weights",
             {{"lambda_ce", w.lambda_ce},
              {"lambda_jml", w.lambda_jml},
              {"mu_label", w.mu_label},
              {"mu_teacher", w.mu_teacher},
              {"nu_label", w.nu_label},
              {"nu_teacher", w.nu_teacher},
              {"eta_sup", w.eta_sup},
              {"eta_unsup", w.eta_unsup},
              {"theta_sup", w.theta_sup},
              {"theta_unsup", w.theta_unsup}}},
            {"kd",
             {{"width_multiplier", c.kd.width_multiplier},
              {"teacher_technique", to_string(c.kd.teacher_technique)},
              {"teacher_iterations", c.kd.teacher_iterations}}},
            {"ssl",
             {{"labeled_fraction", c.ssl.labeled_fraction},
              {"ema_decay", c.ssl.ema_decay},
              {"augment_noise", c.ssl.augment_noise}}},
            {"eval", {{"interval", c.eval.interval}, {"bins", c.eval.bins}, {"boundary_kernel", c.eval.boundary_kernel}}}};
}

ExperimentConfig config_from_json(const json& j)
{
    reject_unknown(j, {"seed", "technique", "dataset", "model", "optimizer", "loss", "weights", "kd", "ssl", "eval"},
                   "config");
    ExperimentConfig c;
    take(j, "seed", c.seed);
    if (j.contains("technique")) {
        c.technique = parse_technique(j.at("technique").get<std::string>());
    }
    if (j.contains("dataset")) {
        c.dataset = dataset_from_json(j.at("dataset"));
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        reject_unknown(m, {"patch", "hidden"}, "model");
        take(m, "patch", c.model.patch);
        take(m, "hidden", c.model.hidden);
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        reject_unknown(o, {"learning_rate", "momentum", "poly_power", "weight_decay", "iterations", "batch_size", "crop"},
                       "optimizer");
        take(o, "learning_rate", c.optimizer.learning_rate);
        take(o, "momentum", c.optimizer.momentum);
        take(o, "poly_power", c.optimizer.poly_power);
        take(o, "weight_decay", c.optimizer.weight_decay);
        take(o, "iterations", c.optimizer.iterations);
        take(o, "batch_size", c.optimizer.batch_size);
        take(o, "crop", c.optimizer.crop);
    }
    if (j.contains("loss")) {
        const auto& l = j.at("loss");
        reject_unknown(l,
                       {"family", "norm", "alpha", "beta", "active", "teacher_active", "scope", "smoothing_epsilon",
                        "boundary_kernel"},
                       "loss");
        if (l.contains("family")) {
            c.loss.variant.family = losses::parse_family(l.at("family").get<std::string>());
        }
        if (l.contains("norm")) {
            c.loss.variant.norm = losses::parse_norm(l.at("norm").get<std::string>());
        }
        take(l, "alpha", c.loss.variant.alpha);
        take(l, "beta", c.loss.variant.beta);
        if (l.contains("active") && !l.at("active").is_null()) {
            c.loss.active = policy_from(l.at("active"));
        }
        if (l.contains("teacher_active")) {
            c.loss.teacher_active = policy_from(l.at("teacher_active"));
        }
        if (l.contains("scope")) {
            c.loss.scope = losses::parse_scope(l.at("scope").get<std::string>());
        }
        take(l, "smoothing_epsilon", c.loss.smoothing_epsilon);
        take(l, "boundary_kernel", c.loss.boundary_kernel);
    }
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        reject_unknown(w,
                       {"lambda_ce", "lambda_jml", "mu_label", "mu_teacher", "nu_label", "nu_teacher", "eta_sup",
                        "eta_unsup", "theta_sup", "theta_unsup"},
                       "weights");
        take(w, "lambda_ce", c.weights.lambda_ce);
        take(w, "lambda_jml", c.weights.lambda_jml);
        take(w, "mu_label", c.weights.mu_label);
        take(w, "mu_teacher", c.weights.mu_teacher);
        take(w, "nu_label", c.weights.nu_label);
        take(w, "nu_teacher", c.weights.nu_teacher);
        take(w, "eta_sup", c.weights.eta_sup);
        take(w, "eta_unsup", c.weights.eta_unsup);
        take(w, "theta_sup", c.weights.theta_sup);
        take(w, "theta_unsup", c.weights.theta_unsup);
    }
    if (j.contains("kd")) {
        const auto& k = j.at("kd");
        reject_unknown(k, {"width_multiplier", "teacher_technique", "teacher_iterations"}, "kd");
        take(k, "width_multiplier", c.kd.width_multiplier);
        if (k.contains("teacher_technique")) {
            c.kd.teacher_technique = parse_technique(k.at("teacher_technique").get<std::string>());
        }
        take(k, "teacher_iterations", c.kd.teacher_iterations);
    }
    if (j.contains("ssl")) {
        const auto& s = j.at("ssl");
        reject_unknown(s, {"labeled_fraction", "ema_decay", "augment_noise"}, "ssl");
        take(s, "labeled_fraction", c.ssl.labeled_fraction);
        take(s, "ema_decay", c.ssl.ema_decay);
        take(s, "augment_noise", c.ssl.augment_noise);
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        reject_unknown(e, {"interval", "bins", "boundary_kernel"}, "eval");
        take(e, "interval", c.eval.interval);
        take(e, "bins", c.eval.bins);
        take(e, "boundary_kernel", c.eval.boundary_kernel);
    }
    c.validate();
    return c;
}

void ExperimentConfig::validate() const
{
    dataset.validate();
    weights.validate();
    if (model.patch == 0 || model.patch % 2 == 0) {
        throw std::invalid_argument("config: model.patch must be odd");
    }
    for (std::size_t h : model.hidden) {
        if (h == 0) {
            throw std::invalid_argument("config: hidden widths must be positive");
        }
    }
    if (optimizer.iterations == 0) {
        throw std::invalid_argument("config: optimizer.iterations must be positive");
    }
    if (optimizer.batch_size == 0) {
        throw std::invalid_argument("config: optimizer.batch_size must be at least 1");
    }
    if (optimizer.crop > std::min(dataset.height, dataset.width)) {
        throw std::invalid_argument("config: optimizer.crop exceeds the image size");
    }
    if (!(optimizer.learning_rate > 0.0) || !(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0) ||
        !(optimizer.poly_power >= 0.0) || !(optimizer.weight_decay >= 0.0)) {
        throw std::invalid_argument("config: optimizer hyper-parameters out of range");
    }
    if (!(loss.smoothing_epsilon >= 0.0 && loss.smoothing_epsilon <= 1.0)) {
        throw std::invalid_argument("config: loss.smoothing_epsilon must lie in [0, 1]");
    }
    if (loss.boundary_kernel == 0 || loss.boundary_kernel % 2 == 0 || eval.boundary_kernel == 0 ||
        eval.boundary_kernel % 2 == 0) {
        throw std::invalid_argument("config: boundary kernels must be odd");
    }
    if (loss.variant.alpha < 0.0 || loss.variant.beta < 0.0) {
        throw std::invalid_argument("config: Tversky weights must be non-negative");
    }
    if (loss.variant.family == losses::Family::cross_entropy || loss.variant.family == losses::Family::iou_hard) {
        throw std::invalid_argument("config: loss.family must be an IoU-type surrogate");
    }
    if (kd.width_multiplier == 0) {
        throw std::invalid_argument("config: kd.width_multiplier must be positive");
    }
    if (kd.teacher_technique == Technique::kd || kd.teacher_technique == Technique::ssl) {
        throw std::invalid_argument("config: kd.teacher_technique must be supervised, ls or bls");
    }
    if (!(ssl.labeled_fraction > 0.0 && ssl.labeled_fraction < 1.0)) {
        throw std::invalid_argument("config: ssl.labeled_fraction must lie in (0, 1)");
    }
    if (!(ssl.ema_decay >= 0.0 && ssl.ema_decay < 1.0) || !(ssl.augment_noise >= 0.0)) {
        throw std::invalid_argument("config: ssl hyper-parameters out of range");
    }
    if (technique == Technique::ssl && dataset.train_images < 2) {
        throw std::invalid_argument("config: ssl needs at least two training images");
    }
    if (eval.interval == 0 || eval.bins == 0) {
        throw std::invalid_argument("config: eval.interval and eval.bins must be positive");
    }
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot open config " + path.string());
    }
    return config_from_json(json::parse(is));
}

}  // namespace jml::harness
