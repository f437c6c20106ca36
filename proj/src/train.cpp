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

#include "jml/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "jml/ptf.hpp"
#include "jml/synthetic.hpp"

namespace jml::harness {

TrainingDiverged::TrainingDiverged(std::size_t iteration, double loss)
    : std::runtime_error("training diverged at iteration " + std::to_string(iteration) + ": loss = " +
                         std::to_string(loss)),
      iteration_(iteration)
{
}

labels::SoftLabelField training_targets(const labels::LabelMap& map, std::size_t classes, Technique technique,
                                        const losses::LossConfig& loss)
{
    labels::SoftLabelField field = labels::one_hot(map, classes);
    if (technique == Technique::ls) {
        return labels::smooth_labels(field, loss.smoothing_epsilon, labels::SmoothingMode::uniform);
    }
    if (technique == Technique::bls) {
        return labels::smooth_labels(field, loss.smoothing_epsilon, labels::SmoothingMode::boundary,
                                     loss.boundary_kernel);
    }
    return field;
}

namespace {

// Cycles through shuffled permutations of [0, n).
class BatchSampler {
public:
    BatchSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) { reshuffle(); }

    std::vector<std::size_t> next(std::size_t count)
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < count; ++i) {
            if (pos_ == order_.size()) {
                reshuffle();
            }
            out.push_back(order_[pos_++]);
        }
        return out;
    }

private:
    void reshuffle()
    {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
    }

    std::vector<std::size_t> order_;
    std::mt19937_64 rng_;
    std::size_t pos_ = 0;
};

struct Prepared {
    std::vector<Tensor> patches;              // D x HW per image
    std::vector<labels::SoftLabelField> targets;
};

// Seeds for every random stream of a run, drawn in a fixed order from one
// generator seeded by the config seed.
struct Seeds {
    std::uint64_t model, batches, teacher_model, teacher_batches, augment, crops, teacher_crops;

    explicit Seeds(std::uint64_t seed)
    {
        std::mt19937_64 master(seed);
        model = master();
        batches = master();
        teacher_model = master();
        teacher_batches = master();
        augment = master();
        crops = master();
        teacher_crops = master();
    }
};

// A training window in image coordinates.
struct Window {
    std::size_t row = 0, col = 0, height = 0, width = 0;
};

// Draws square windows of side `crop` uniformly; crop 0 (or one covering the
// image) always yields the whole image without consuming randomness.
class WindowSampler {
public:
    WindowSampler(std::size_t h, std::size_t w, std::size_t crop, std::uint64_t seed)
        : h_(h), w_(w), side_(crop), rng_(seed)
    {
        if (side_ == 0 || (side_ >= h_ && side_ >= w_)) {
            side_ = 0;
        }
    }

    std::size_t height() const { return side_ == 0 ? h_ : side_; }
    std::size_t width() const { return side_ == 0 ? w_ : side_; }

    Window next()
    {
        if (side_ == 0) {
            return {0, 0, h_, w_};
        }
        std::uniform_int_distribution<std::size_t> row(0, h_ - side_);
        std::uniform_int_distribution<std::size_t> col(0, w_ - side_);
        const std::size_t r = row(rng_);
        return {r, col(rng_), side_, side_};
    }

private:
    std::size_t h_, w_, side_;
    std::mt19937_64 rng_;
};

// Cuts the window out of every row of a rows x (h*w) tensor (any trailing
// shape with h*w elements per row). Result is rows x (wh*ww).
Tensor crop_columns(const Tensor& t, std::size_t w, const Window& win)
{
    const std::size_t rows = t.shape()[0];
    const std::size_t stride = t.size() / rows;
    Tensor out(Shape{rows, win.height * win.width});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t y = 0; y < win.height; ++y) {
            for (std::size_t x = 0; x < win.width; ++x) {
                out[(r * win.height + y) * win.width + x] = t[r * stride + (win.row + y) * w + win.col + x];
            }
        }
    }
    return out;
}

labels::SoftLabelField crop_field(const labels::SoftLabelField& f, const Window& win)
{
    labels::SoftLabelField out;
    out.values = crop_columns(f.values, f.width(), win).reshaped({f.classes(), win.height, win.width});
    for (std::size_t y = 0; y < win.height; ++y) {
        const auto first = f.valid.begin() + static_cast<long>((win.row + y) * f.width() + win.col);
        out.valid.insert(out.valid.end(), first, first + static_cast<long>(win.width));
    }
    return out;
}

compose::Supervision batch_supervision(const std::vector<labels::SoftLabelField>& batch, std::size_t classes)
{
    const std::size_t b = batch.size();
    const std::size_t pixels = batch[0].height() * batch[0].width();
    compose::Supervision s;
    Tensor labels(Shape{classes, b, batch[0].height(), batch[0].width()});
    for (std::size_t k = 0; k < b; ++k) {
        const auto& t = batch[k];
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t i = 0; i < pixels; ++i) {
                labels[(c * b + k) * pixels + i] = t.values[c * pixels + i];
            }
        }
        s.valid.insert(s.valid.end(), t.valid.begin(), t.valid.end());
    }
    s.labels = std::move(labels);
    return s;
}

Tensor batch_inputs(const std::vector<Tensor>& patches)
{
    std::vector<const Tensor*> parts;
    for (const auto& p : patches) {
        parts.push_back(&p);
    }
    return concat_columns(parts);
}

// Mirrors every image of a C x B x H x W (or C x N with N = B*H*W) tensor
// left to right where flip[b] is set.
Tensor flip_images(const Tensor& t, std::size_t channels, std::size_t images, std::size_t h, std::size_t w,
                   const std::vector<bool>& flip)
{
    Tensor out = t;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t b = 0; b < images; ++b) {
            if (!flip[b]) {
                continue;
            }
            const std::size_t base = (c * images + b) * h * w;
            for (std::size_t r = 0; r < h; ++r) {
                for (std::size_t x = 0; x < w; ++x) {
                    out[base + r * w + x] = t[base + r * w + (w - 1 - x)];
                }
            }
        }
    }
    return out;
}

class Trainer {
public:
    Trainer(const ExperimentConfig& config, const Dataset& data, const TrainHooks& hooks)
        : config_(config), data_(data), hooks_(hooks)
    {
        const WindowSampler probe(data.spec.height, data.spec.width, config.optimizer.crop, 0);
        layout_ = {data.spec.classes, config.optimizer.batch_size, probe.height(), probe.width()};
        for (const auto& s : data.val) {
            val_labels_.push_back(s.labels);
            val_patch_parts_.push_back(patch_features(s.features, config.model.patch));
        }
        std::vector<const Tensor*> parts;
        for (const auto& p : val_patch_parts_) {
            parts.push_back(&p);
        }
        val_inputs_ = concat_columns(parts);
        for (const auto& s : data.train) {
            train_patches_.push_back(patch_features(s.features, config.model.patch));
        }
    }

    const std::vector<labels::LabelMap>& val_labels() const { return val_labels_; }

    // Supervised, ls, bls and (with a teacher) kd runs.
    RunResult run(Technique technique, const std::vector<std::size_t>& hidden, std::size_t iterations,
                  std::uint64_t model_seed, std::uint64_t batch_seed, std::uint64_t crop_seed, const Mlp* teacher)
    {
        const std::size_t classes = data_.spec.classes;
        const std::size_t w = data_.spec.width;
        std::vector<labels::SoftLabelField> targets;
        const Technique label_kind = technique == Technique::kd ? Technique::supervised : technique;
        for (const auto& s : data_.train) {
            targets.push_back(training_targets(s.labels, classes, label_kind, config_.loss));
        }
        Mlp model(MlpSpec{train_patches_.front().shape()[0], hidden, classes}, model_seed);
        BatchSampler sampler(data_.train.size(), batch_seed);
        WindowSampler windows(data_.spec.height, w, config_.optimizer.crop, crop_seed);
        return optimize(model, iterations, [&](ad::Graph& g, ad::Evaluator& ev, const Mlp& m) {
            std::vector<Tensor> patches;
            std::vector<labels::SoftLabelField> fields;
            for (std::size_t i : sampler.next(config_.optimizer.batch_size)) {
                const Window win = windows.next();
                patches.push_back(crop_columns(train_patches_[i], w, win));
                fields.push_back(crop_field(targets[i], win));
            }
            const Tensor x = batch_inputs(patches);
            ad::Expr student = student_probs(g, m, x);
            const Tensor sv = ev.value(student);
            const auto sup = batch_supervision(fields, classes);
            if (technique == Technique::kd) {
                const Tensor tv = teacher->predict(x).reshaped(layout_.shape());
                return compose::kd_objective(g, student, sv, g.constant(tv), tv, sup, layout_, config_.weights,
                                             config_.loss);
            }
            return compose::ls_objective(g, student, sv, sup, layout_, config_.weights, config_.loss);
        });
    }

    RunResult run_ssl(std::uint64_t model_seed, std::uint64_t batch_seed, std::uint64_t augment_seed,
                      std::uint64_t crop_seed)
    {
        const std::size_t classes = data_.spec.classes;
        const std::size_t h = data_.spec.height;
        const std::size_t w = data_.spec.width;
        const std::size_t n = data_.train.size();
        const std::size_t labeled = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::ceil(config_.ssl.labeled_fraction * static_cast<double>(n))), 1, n - 1);
        std::vector<labels::SoftLabelField> targets;
        for (std::size_t i = 0; i < labeled; ++i) {
            targets.push_back(training_targets(data_.train[i].labels, classes, Technique::supervised, config_.loss));
        }
        std::vector<Tensor> labeled_patches(train_patches_.begin(), train_patches_.begin() + static_cast<long>(labeled));
        Mlp model(MlpSpec{train_patches_.front().shape()[0], config_.model.hidden, classes}, model_seed);
        Mlp ema = model;
        BatchSampler sup_sampler(labeled, batch_seed);
        BatchSampler unsup_sampler(n - labeled, batch_seed ^ 0x5bd1e995ULL);
        std::mt19937_64 augment(augment_seed);
        std::normal_distribution<double> noise(0.0, config_.ssl.augment_noise);
        WindowSampler windows(h, w, config_.optimizer.crop, crop_seed);
        const std::size_t b = config_.optimizer.batch_size;
        return optimize(
            model, config_.optimizer.iterations,
            [&](ad::Graph& g, ad::Evaluator& ev, const Mlp& m) {
                std::vector<Tensor> sup_patches;
                std::vector<labels::SoftLabelField> fields;
                for (std::size_t i : sup_sampler.next(b)) {
                    const Window win = windows.next();
                    sup_patches.push_back(crop_columns(labeled_patches[i], w, win));
                    fields.push_back(crop_field(targets[i], win));
                }
                const Tensor xs = batch_inputs(sup_patches);
                ad::Expr ps = student_probs(g, m, xs);
                const compose::SslBatch sup{ps, ev.value(ps), layout_};
                const auto labels = batch_supervision(fields, classes);

                // The student sees a flipped, noisy view; the teacher sees the
                // clean window, and its output is flipped to match.
                const auto uidx = unsup_sampler.next(b);
                std::vector<bool> flip(b);
                std::vector<Tensor> views;
                std::vector<Tensor> clean;
                for (std::size_t k = 0; k < b; ++k) {
                    flip[k] = (augment() & 1U) != 0;
                    const Window win = windows.next();
                    const Tensor& f = data_.train[labeled + uidx[k]].features;
                    Tensor view = flip_images(f, f.shape()[0], 1, h, w, std::vector<bool>{flip[k]});
                    for (std::size_t i = 0; i < view.size(); ++i) {
                        view[i] += noise(augment);
                    }
                    Window seen = win;
                    if (flip[k]) {
                        seen.col = w - win.col - win.width;
                    }
                    views.push_back(crop_columns(patch_features(view, config_.model.patch), w, seen));
                    clean.push_back(crop_columns(train_patches_[labeled + uidx[k]], w, win));
                }
                const Tensor xu = batch_inputs(views);
                ad::Expr pu = student_probs(g, m, xu);
                const compose::SslBatch unsup{pu, ev.value(pu), layout_};
                const Tensor teacher = flip_images(ema.predict(batch_inputs(clean)).reshaped(layout_.shape()), classes,
                                                   b, layout_.height, layout_.width, flip);
                return compose::ssl_objective(g, sup, labels, unsup, g.constant(teacher), teacher, config_.weights,
                                              config_.loss);
            },
            [&](const Mlp& m) { compose::ema_update(ema.params(), m.params(), config_.ssl.ema_decay); });
    }

private:
    using StepFn = std::function<compose::Objective(ad::Graph&, ad::Evaluator&, const Mlp&)>;
    using AfterStep = std::function<void(const Mlp&)>;

    ad::Expr student_probs(ad::Graph& g, const Mlp& m, const Tensor& x) const
    {
        return ad::reshape(ad::softmax(m.forward(g, g.constant(x)), 0), layout_.shape());
    }

    RunResult optimize(Mlp& model, std::size_t iterations, const StepFn& step, const AfterStep& after = {})
    {
        const auto& opt = config_.optimizer;
        std::vector<Tensor> velocity;
        for (const auto& p : model.params()) {
            velocity.emplace_back(p.shape());
        }
        RunResult result;
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t it = 0; it < iterations; ++it) {
            const double lr = opt.learning_rate *
                              std::pow(1.0 - static_cast<double>(it) / static_cast<double>(iterations), opt.poly_power);
            ad::Graph g;
            ad::Evaluator ev(g, model.bindings());
            const compose::Objective objective = step(g, ev, model);
            const double loss = ev.value(objective.total).item();
            if (!std::isfinite(loss)) {
                throw TrainingDiverged(it + 1, loss);
            }
            const auto grads = ev.gradients(objective.total, model.names());
            for (std::size_t k = 0; k < model.params().size(); ++k) {
                Tensor& p = model.params()[k];
                Tensor& v = velocity[k];
                const Tensor& gk = grads.at(model.names()[k]);
                for (std::size_t i = 0; i < p.size(); ++i) {
                    v[i] = opt.momentum * v[i] + gk[i] + opt.weight_decay * p[i];
                    p[i] -= lr * v[i];
                }
            }
            if (after) {
                after(model);
            }
            if (hooks_.on_step) {
                hooks_.on_step(it + 1, objective);
            }
            loss_sum += loss;
            ++loss_count;
            if ((it + 1) % config_.eval.interval == 0 || it + 1 == iterations) {
                HistoryRow row{it + 1, loss_sum / static_cast<double>(loss_count), lr, validate(model)};
                result.history.push_back(std::move(row));
                loss_sum = 0.0;
                loss_count = 0;
            }
        }
        result.val_probs = val_probs(model);
        result.final_metrics = result.history.back().metrics;
        result.model = model;
        return result;
    }

    Tensor val_probs(const Mlp& model) const
    {
        return model.predict(val_inputs_).reshaped(
            {data_.spec.classes, data_.val.size(), data_.spec.height, data_.spec.width});
    }

    EvalMetrics validate(const Mlp& model) const
    {
        return evaluate_predictions(val_probs(model), val_labels_, config_.eval.bins, config_.eval.boundary_kernel);
    }

    const ExperimentConfig& config_;
    const Dataset& data_;
    const TrainHooks& hooks_;
    compose::BatchLayout layout_;
    std::vector<labels::LabelMap> val_labels_;
    std::vector<Tensor> val_patch_parts_;
    Tensor val_inputs_;
    std::vector<Tensor> train_patches_;
};

std::string format_double(double v)
{
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

void write_history(const std::vector<HistoryRow>& history, const std::filesystem::path& path)
{
    std::ofstream os(path);
    os << "iteration,train_loss,lr,acc,miou_dataset,miou_image,ece,bece,sce,bsce\n";
    for (const auto& r : history) {
        const auto& m = r.metrics;
        os << r.iteration;
        for (double v : {r.train_loss, r.learning_rate, m.acc, m.miou_dataset, m.miou_image, m.ece, m.bece, m.sce,
                         m.bsce}) {
            os << ',' << format_double(v);
        }
        os << '\n';
    }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path)
{
    std::ofstream os(path);
    os << j.dump(2) << '\n';
}

}  // namespace

TrainResult train(const ExperimentConfig& config, const TrainHooks& hooks)
{
    config.validate();
    const Dataset data = generate_synthetic(config.dataset, config.seed);
    const Seeds seeds(config.seed);
    Trainer trainer(config, data, hooks);
    TrainResult result;
    result.config = config;
    result.val_labels = trainer.val_labels();
    switch (config.technique) {
    case Technique::supervised:
    case Technique::ls:
    case Technique::bls:
        result.student = trainer.run(config.technique, config.model.hidden, config.optimizer.iterations, seeds.model,
                                     seeds.batches, seeds.crops, nullptr);
        break;
    case Technique::kd: {
        std::vector<std::size_t> wide = config.model.hidden;
        for (auto& h : wide) {
            h *= config.kd.width_multiplier;
        }
        const std::size_t teacher_iters =
            config.kd.teacher_iterations == 0 ? config.optimizer.iterations : config.kd.teacher_iterations;
        result.teacher = trainer.run(config.kd.teacher_technique, wide, teacher_iters, seeds.teacher_model,
                                     seeds.teacher_batches, seeds.teacher_crops, nullptr);
        result.student = trainer.run(Technique::kd, config.model.hidden, config.optimizer.iterations, seeds.model,
                                     seeds.batches, seeds.crops, &result.teacher->model);
        break;
    }
    case Technique::ssl:
        result.student = trainer.run_ssl(seeds.model, seeds.batches, seeds.augment, seeds.crops);
        break;
    }
    return result;
}

void write_artifacts(const TrainResult& result, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    write_history(result.student.history, out_dir / "history.csv");
    nlohmann::json final{{"technique", to_string(result.config.technique)},
                         {"seed", result.config.seed},
                         {"iterations", result.config.optimizer.iterations},
                         {"metrics", result.student.final_metrics.to_json()}};
    if (result.teacher) {
        final["teacher_metrics"] = result.teacher->final_metrics.to_json();
        write_history(result.teacher->history, out_dir / "teacher_history.csv");
        write_json(result.teacher->model.to_json(), out_dir / "teacher_model.json");
    }
    write_json(final, out_dir / "final_metrics.json");
    write_json(to_json(result.config), out_dir / "config.json");
    write_json(result.student.model.to_json(), out_dir / "model.json");
    {
        std::ofstream os(out_dir / "class_iou.csv");
        metrics::write_class_iou_csv(os, result.student.final_metrics.class_iou);
    }
    {
        std::ofstream os(out_dir / "calibration_bins.csv");
        metrics::write_bins_csv(os, result.student.final_metrics.ece_table);
    }
    ptf::write_tensor(out_dir / "predictions.ptf", result.student.val_probs);
    const auto& maps = result.val_labels;
    Tensor labels(Shape{maps.size(), maps.front().height, maps.front().width});
    for (std::size_t b = 0; b < maps.size(); ++b) {
        for (std::size_t i = 0; i < maps[b].size(); ++i) {
            labels[b * maps[b].size() + i] = maps[b].classes[i];
        }
    }
    ptf::write_tensor(out_dir / "val_labels.ptf", labels);
}

}  // namespace jml::harness
