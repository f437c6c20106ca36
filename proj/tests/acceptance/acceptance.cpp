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

// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
// criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "jml/labels.hpp"
#include "jml/losscurve.hpp"
#include "jml/losses.hpp"
#include "jml/theory.hpp"
#include "jml/train.hpp"
#include "metric_check.hpp"

namespace {

namespace fs = std::filesystem;
namespace th = jml::theory;
namespace hs = jml::harness;
namespace lb = jml::labels;

constexpr std::uint64_t kSeed = 20260;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome metric_axioms()
{
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    double worst = 0.0;
    std::string failed;
    for (const char* name : {"jml1", "jml2"}) {
        const auto loss = th::loss_by_name(name);
        for (std::size_t p = 1; p <= 8; ++p) {
            const auto report = th::check_metric_axioms(loss, p, 100000, kSeed + p, 1e-9);
            for (const auto& c : report.checks) {
                worst = std::max(worst, c.magnitude);
            }
            if (!report.pass()) {
                pass = false;
                failed += std::string(" ") + name + "/p=" + std::to_string(p);
            }
        }
    }
    const double elapsed = seconds_since(t0);
    std::string detail = "JML1, JML2 at p=1..8, 1e5 samples each: max violation " + fmt("%.3g", worst) +
                         " (tol 1e-9), " + fmt("%.1f", elapsed) + " s (limit 60 s)";
    if (!failed.empty()) {
        detail += "; failing:" + failed;
    }
    return {pass && elapsed < 60.0, detail};
}

Outcome counterexamples()
{
    const std::vector<double> half{0.5};
    const double self = th::loss_by_name("sjl-l1")(half, half);
    const th::Triple t{{0.8}, {0.4}, {0.2}};
    const double tri = th::violation(th::loss_by_name("sjl-l2"), th::Axiom::triangle, t);
    const bool pass = std::fabs(self - 2.0 / 3.0) <= 1e-12 && tri > 0.02;
    return {pass, "SJL-L1(0.5, 0.5) = " + fmt("%.15f", self) + " (2/3 +- 1e-12); SJL-L2 triangle gap at (0.8, 0.4, 0.2) = " +
                      fmt("%.6f", tri) + " (> 0.02)"};
}

Outcome equivalence()
{
    bool pass = true;
    double hard = 0.0, l2 = 0.0;
    for (std::size_t p = 1; p <= 8; ++p) {
        const auto r = th::verify_hard_label_equivalence(p, 10000, kSeed + p, 1e-12);
        hard = std::max({hard, r.soft_x_hard_y.magnitude, r.hard_x_soft_y.magnitude});
        l2 = std::max(l2, r.squared_l2.magnitude);
        pass = pass && r.soft_x_hard_y.pass && r.hard_x_soft_y.pass && r.squared_l2.pass;
    }
    // Witness x = 0.8, y = 0.5 worked by hand:
    //   JML1 = 1 - (1.3 - 0.3) / (1.3 + 0.3) = 3/8
    //   JML2 = 1 - 0.4 / (0.4 + 0.3)         = 3/7
    //   SJL  = 1 - 0.4 / (1.3 - 0.4)         = 5/9
    const double expected[3] = {3.0 / 8.0, 3.0 / 7.0, 5.0 / 9.0};
    const auto r = th::verify_hard_label_equivalence(1, 1, kSeed, 1e-12);
    double witness_error = 0.0;
    for (int i = 0; i < 3; ++i) {
        witness_error = std::max(witness_error, std::fabs(r.witness[static_cast<std::size_t>(i)] - expected[i]));
    }
    pass = pass && witness_error <= 1e-12 && r.witness_gap > 0.04;
    return {pass, "hard-label max deviation " + fmt("%.3g", hard) + ", squared-L2 soft max deviation " +
                      fmt("%.3g", l2) + " (tol 1e-12, 1e4 pairs per p=1..8); witness " + fmt("%.4f", r.witness[0]) +
                      " / " + fmt("%.4f", r.witness[1]) + " / " + fmt("%.4f", r.witness[2]) + ", min gap " +
                      fmt("%.4f", r.witness_gap)};
}

Outcome ordering()
{
    const auto r = th::check_ordering(th::loss_by_name("jml1"), th::loss_by_name("jml2"), 8, 100000, kSeed, 1e-12);
    return {r.pass, "JML1 <= JML2 + 1e-12 on 1e5 soft pairs, p=1..8: worst JML1 - JML2 = " + fmt("%.3g", r.magnitude)};
}

Outcome nonconcavity()
{
    const auto r = th::verify_nonconcavity_counterexample();
    auto show = [](const th::JensenProbe& p) {
        return p.name + " mean " + fmt("%.6f", p.mean_of_values) + " vs at-mean " + fmt("%.6f", p.value_at_mean);
    };
    return {r.jml1.violated && r.jml2.violated,
            show(r.jml1) + "; " + show(r.jml2) + "; control " + (r.control.violated ? "violated" : "holds")};
}

Outcome kd_triangle()
{
    const auto r = th::check_kd_triangle(th::loss_by_name("jml1"), 8, 10000, kSeed, 1e-12);
    return {r.pass, "JML1(S,L) - JML1(S,T) - JML1(T,L) worst " + fmt("%.3g", r.magnitude) + " on 1e4 triples"};
}

Outcome gradients()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto cases = th::check_gradients(1000, kSeed, 1e-4);
    bool pass = !cases.empty();
    double worst = 0.0;
    std::string names;
    for (const auto& c : cases) {
        pass = pass && c.pass && c.points == 1000;
        worst = std::max(worst, c.max_relative_error);
        names += (names.empty() ? "" : ",") + c.name;
        if (!c.pass) {
            names += "(FAIL " + fmt("%.3g", c.max_relative_error) + ")";
        }
    }
    return {pass, std::to_string(cases.size()) + " cases x 1000 points, max rel. error " + fmt("%.3g", worst) +
                      " (< 1e-4), " + fmt("%.1f", seconds_since(t0)) + " s [" + names + "]"};
}

Outcome lovasz()
{
    const auto r = th::verify_lovasz_oracle(6);
    return {r.pass(), std::to_string(r.pairs) + " binary pairs p<=6, max deviation " + fmt("%.3g", r.max_deviation) +
                          "; worked example " + fmt("%.15f", r.worked_example)};
}

Outcome gradient_sign()
{
    const auto r = th::check_gradient_sign(1000, kSeed, 1e-3);
    return {r.pass() && r.checked > 0, std::to_string(r.agreed) + "/" + std::to_string(r.checked) +
                                           " agree, " + std::to_string(r.skipped) + " skipped within 1e-3 of r2"};
}

Outcome loss_shape()
{
    const std::size_t n = 1001;  // x = i / 1000
    const auto high = hs::losscurve("jml1", 0.9, n);
    bool monotone = true;
    for (std::size_t i = 1; i <= 900; ++i) {
        monotone = monotone && high.values[0][i] < high.values[0][i - 1];
    }
    const double at_label = high.values[0][900];
    const auto low = hs::losscurve("jml1,ce", 0.1, n);
    double slope_jml = 0.0, slope_ce = 0.0;
    for (std::size_t i = 51; i <= 100; ++i) {
        const double dx = low.x[i] - low.x[i - 1];
        slope_jml = std::max(slope_jml, std::fabs(low.values[0][i] - low.values[0][i - 1]) / dx);
        slope_ce = std::max(slope_ce, std::fabs(low.values[1][i] - low.values[1][i - 1]) / dx);
    }
    const bool pass = monotone && high.x[900] == 0.9 && at_label == 0.0 && slope_jml > slope_ce;
    return {pass, std::string("y=0.9: ") + (monotone ? "strictly decreasing" : "NOT decreasing") +
                      " on [0, 0.9], value at 0.9 = " + fmt("%.3g", at_label) + "; y=0.1 max |slope| on [0.05, 0.1]: JML1 " +
                      fmt("%.4f", slope_jml) + " vs CE " + fmt("%.4f", slope_ce)};
}

Outcome metrics()
{
    std::mt19937_64 rng(kSeed);
    oracle::Deviation dev;
    for (std::size_t i = 0; i < 1000; ++i) {
        oracle::compare_instance(oracle::draw_instance(rng, i), dev);
    }
    const bool pass = dev.counts_exact && dev.ratio <= 1e-12 && dev.bece_vs_ece <= 1e-12;
    return {pass, std::to_string(dev.compared) + " scored instances of 1000: counts " +
                      (dev.counts_exact ? "exact" : "DIFFER") + ", max ratio deviation " + fmt("%.3g", dev.ratio) +
                      ", |BECE(all-ones) - ECE| " + fmt("%.3g", dev.bece_vs_ece)};
}

Outcome bls_mechanics()
{
    std::mt19937_64 rng(kSeed);
    double row_error = 0.0;
    std::size_t mismatched = 0, altered = 0, uniform_mismatch = 0, maps = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t h = 4 + rng() % 13, w = 4 + rng() % 13, classes = 2 + rng() % 4;
        std::vector<int> v(h * w);
        for (auto& c : v) {
            c = rng() % 19 == 0 ? lb::kDefaultIgnore : static_cast<int>(rng() % classes);
        }
        v[0] = 0;
        v[1] = 1;
        const lb::LabelMap map(h, w, v);
        const auto onehot = lb::one_hot(map, classes);
        const auto smoothed = lb::smooth_labels(onehot, 0.5, lb::SmoothingMode::boundary, 3);
        const auto boundary = lb::boundary_mask(map, 3);
        const std::size_t n = h * w;
        for (std::size_t i = 0; i < n; ++i) {
            double total = 0.0;
            bool changed = false;
            for (std::size_t c = 0; c < classes; ++c) {
                total += smoothed.values[c * n + i];
                changed = changed || smoothed.values[c * n + i] != onehot.values[c * n + i];
            }
            if (onehot.valid[i]) {
                row_error = std::max(row_error, std::fabs(total - 1.0));
            }
            mismatched += changed != (boundary[i] != 0) ? 1 : 0;
            altered += changed ? 1 : 0;
        }
        // a kernel of 2 max(H, W) - 1 covers the whole image from every pixel
        const std::size_t k = 2 * std::max(h, w) - 1;
        const auto wide = lb::smooth_labels(onehot, 0.5, lb::SmoothingMode::boundary, k);
        const auto uniform = lb::smooth_labels(onehot, 0.5, lb::SmoothingMode::uniform);
        uniform_mismatch += wide.values == uniform.values ? 0 : 1;
        ++maps;
    }
    const bool pass = row_error <= 1e-9 && mismatched == 0 && altered > 0 && uniform_mismatch == 0;
    return {pass, std::to_string(maps) + " multi-class maps: max |row sum - 1| " + fmt("%.3g", row_error) + ", " +
                      std::to_string(altered) + " pixels altered, " + std::to_string(mismatched) +
                      " differ from boundary_mask; image-spanning kernel (k = 2 max(H,W) - 1) differs from uniform "
                      "LS on " +
                      std::to_string(uniform_mismatch) + " maps"};
}

hs::ExperimentConfig desk_config(hs::Technique technique, std::uint64_t seed, bool ce_only = false)
{
    hs::ExperimentConfig c;
    c.seed = seed;
    c.technique = technique;
    if (ce_only) {
        c.weights.lambda_ce = 1.0;
        c.weights.lambda_jml = 0.0;
    }
    c.eval.interval = c.optimizer.iterations;
    return c;
}

Outcome desk_experiment()
{
    const auto t0 = std::chrono::steady_clock::now();
    struct Arm {
        std::string name;
        hs::Technique technique;
        bool ce_only;
        double miou = 0.0, bece = 0.0;
    };
    std::vector<Arm> arms{{"CE", hs::Technique::supervised, true},
                          {"CE+JML", hs::Technique::supervised, false},
                          {"JML-BLS", hs::Technique::bls, false},
                          {"KD", hs::Technique::kd, false}};
    const std::size_t seeds = 5;
    for (auto& arm : arms) {
        for (std::size_t s = 1; s <= seeds; ++s) {
            const auto r = hs::train(desk_config(arm.technique, s, arm.ce_only));
            arm.miou += r.student.final_metrics.miou_dataset / seeds;
            arm.bece += r.student.final_metrics.bece / seeds;
        }
    }
    const bool miou_up = arms[1].miou > arms[0].miou;
    const bool bece_down = arms[2].bece < arms[1].bece;
    const bool kd_up = arms[3].miou >= arms[1].miou;
    std::string detail = "5 seeds, mean val mIoU / BECE:";
    for (const auto& arm : arms) {
        detail += " " + arm.name + " " + fmt("%.4f", arm.miou) + "/" + fmt("%.4f", arm.bece) + ";";
    }
    detail += std::string(" CE+JML > CE ") + (miou_up ? "yes" : "NO") + ", BLS BECE < JML BECE " +
              (bece_down ? "yes" : "NO") + ", KD >= JML " + (kd_up ? "yes" : "NO") + ", " +
              fmt("%.0f", seconds_since(t0)) + " s";
    return {miou_up && bece_down && kd_up, detail};
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(JML_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Number of files that differ between two output directories (missing
// files count as differing), or -1 when a directory is empty.
long compare_dirs(const fs::path& a, const fs::path& b, std::size_t& files)
{
    long differing = 0;
    files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        ++files;
        const fs::path other = b / entry.path().filename();
        differing += fs::exists(other) && slurp(entry.path()) == slurp(other) ? 0 : 1;
    }
    for (const auto& entry : fs::directory_iterator(b)) {
        differing += fs::exists(a / entry.path().filename()) ? 0 : 1;
    }
    return files == 0 ? -1 : differing;
}

Outcome determinism()
{
    const fs::path root = fs::temp_directory_path() / ("jml_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    for (const char* d : {"v1", "v2", "t1", "t2", "k1", "k2"}) {
        fs::create_directories(root / d);
    }
    const std::string verify_args =
        "verify --seed 7 --axiom-samples 5000 --pair-samples 2000 --ordering-samples 5000 --gradient-points 20 "
        "--sign-samples 200 --out ";
    int status = run_cli(verify_args + (root / "v1" / "report.json").string());
    status |= run_cli(verify_args + (root / "v2" / "report.json").string());

    std::ofstream(root / "train.json") << R"({"seed": 11, "optimizer": {"iterations": 60}, "eval": {"interval": 20}})";
    std::ofstream(root / "kd.json")
        << R"({"seed": 12, "technique": "kd", "dataset": {"height": 32, "width": 32},)"
        << R"( "optimizer": {"iterations": 40}, "eval": {"interval": 20}})";
    for (const char* d : {"t1", "t2"}) {
        status |= run_cli("train --config " + (root / "train.json").string() + " --out-dir " + (root / d).string());
    }
    for (const char* d : {"k1", "k2"}) {
        status |= run_cli("train --config " + (root / "kd.json").string() + " --out-dir " + (root / d).string());
    }
    std::size_t nv = 0, nt = 0, nk = 0;
    const long dv = compare_dirs(root / "v1", root / "v2", nv);
    const long dt = compare_dirs(root / "t1", root / "t2", nt);
    const long dk = compare_dirs(root / "k1", root / "k2", nk);
    fs::remove_all(root);
    const bool pass = status == 0 && dv == 0 && dt == 0 && dk == 0;
    return {pass, "verify: " + std::to_string(nv) + " file(s), " + std::to_string(dv) + " differ; train: " +
                      std::to_string(nt) + " files, " + std::to_string(dt) + " differ; train (kd): " +
                      std::to_string(nk) + " files, " + std::to_string(dk) + " differ" +
                      (status == 0 ? "" : "; a CLI call exited non-zero")};
}

}  // namespace

// With arguments, runs only the listed criterion numbers.
int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"metric axioms", metric_axioms},
        {"counterexamples", counterexamples},
        {"hard-label equivalence", equivalence},
        {"JML1 <= JML2", ordering},
        {"non-concavity", nonconcavity},
        {"KD triangle bound", kd_triangle},
        {"gradients", gradients},
        {"Lovasz oracle", lovasz},
        {"SJL-L1 gradient sign", gradient_sign},
        {"loss curve shape", loss_shape},
        {"metrics brute force", metrics},
        {"BLS mechanics", bls_mechanics},
        {"desk-scale experiment", desk_experiment},
        {"determinism", determinism},
    };
    std::vector<bool> selected(criteria.size(), argc == 1);
    for (int a = 1; a < argc; ++a) {
        const std::size_t k = std::stoul(argv[a]);
        if (k < 1 || k > criteria.size()) {
            std::cerr << "no criterion " << argv[a] << "\n";
            return 2;
        }
        selected[k - 1] = true;
    }
    int failures = 0;
    std::size_t ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i]) {
            continue;
        }
        ++ran;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1) << " (" << criteria[i].first
                  << "): " << o.detail << std::endl;
    }
    std::cout << (ran - static_cast<std::size_t>(failures)) << "/" << ran
              << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
