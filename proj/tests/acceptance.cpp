// Acceptance gate: one PASS/FAIL line per criterion, exit 0 iff all pass.
// Usage: fclm_acceptance <path to fclm tool>

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
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fclm/checks.hpp"
#include "fclm/image_io.hpp"
#include "fclm/toy_harness.hpp"

namespace fs = std::filesystem;
using namespace fclm;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Outcome timed_check(const std::function<checks::CheckResult()>& fn, double budget = 0.0) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = fn();
    const double s = seconds_since(t0);
    if (budget <= 0.0) return {r.passed, r.detail + "; " + fmt(s) + " s"};
    return {r.passed && s < budget, r.detail + "; " + fmt(s) + " s (budget " + fmt(budget) + " s)"};
}

Outcome criterion_8() {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig cfg;
    const auto data = make_blob_dataset(8, 16, cfg.seed);
    const auto full = run_training(data, cfg);
    auto no_grl = cfg;
    no_grl.lambda = 0.0;
    const auto grl_off = run_training(data, no_grl);
    auto no_align = cfg;
    no_align.weights.adv = 0.0;
    no_align.weights.ot = 0.0;
    const auto align_off = run_training(data, no_align);
    const double s = seconds_since(t0);

    const auto& first = full.entries.front();
    const auto& last = full.entries.back();
    const double ratio = last.total / first.total;
    const bool a = ratio <= 0.5;
    const bool b = last.disc_acc <= 0.6 && grl_off.entries.back().disc_acc > 0.9;
    const bool c = last.align_stat < align_off.entries.back().align_stat;
    double late = 0.0;
    const std::size_t window = std::min<std::size_t>(50, full.entries.size());
    for (std::size_t i = full.entries.size() - window; i < full.entries.size(); ++i) late += full.entries[i].disc_acc;
    late /= static_cast<double>(window);
    std::ostringstream d;
    d << "total ratio " << fmt(ratio) << ", disc acc " << fmt(last.disc_acc) << " (last-50 mean "
      << fmt(late) << "; lambda 0: "
      << fmt(grl_off.entries.back().disc_acc) << "), align " << fmt(last.align_stat) << " vs "
      << fmt(align_off.entries.back().align_stat) << " without alignment; " << fmt(s) << " s (budget 120 s)";
    return {a && b && c && s < 120.0, d.str()};
}

// ---- CLI-level criteria ----

std::string quote(const std::string& s) { return "'" + s + "'"; }

int shell(const std::string& tool, const std::string& args, const fs::path& out) {
    const std::string cmd = quote(tool) + " " + args + " > " + quote(out.string()) + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// Text outputs may name the run's own directory, and manifests carry wall
// time and the --workers flag; apart from that every byte must match.
std::string normalized(const fs::path& p, const fs::path& root) {
    std::string text = slurp(p);
    if (p.extension() == ".png") return text;
    if (p.filename().string().find("manifest") != std::string::npos) {
        auto j = nlohmann::json::parse(text);
        j.erase("wall_time_seconds");
        if (j.contains("config")) j["config"].erase("workers");
        text = j.dump();
    }
    const std::string r = root.string();
    for (auto pos = text.find(r); pos != std::string::npos; pos = text.find(r, pos)) text.replace(pos, r.size(), "<run>");
    return text;
}

// Byte comparison of every file in two output trees.
bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<fs::path> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a)) if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b)) if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    if (fa != fb || fa.empty()) {
        why = "file lists differ under " + a.string();
        return false;
    }
    for (const auto& rel : fa) {
        if (normalized(a / rel, a) != normalized(b / rel, b)) {
            why = (a / rel).string() + " differs";
            return false;
        }
    }
    return true;
}

void make_corpus(const fs::path& root) {
    Rng rng(404);
    for (const char* d : {"gt", "pred", "fg", "alpha", "bg"}) fs::create_directories(root / d);
    for (int i = 0; i < 6; ++i) {
        const std::string name = "im" + std::to_string(i) + ".png";
        AlphaMatte gt(24, 24), pred(24, 24);
        for (std::size_t y = 0; y < 24; ++y) {
            for (std::size_t x = 0; x < 24; ++x) {
                const double dx = static_cast<double>(x) - 12.0, dy = static_cast<double>(y) - 12.0;
                gt(x, y) = std::clamp(6.0 - std::sqrt(dx * dx + dy * dy), 0.0, 1.0);
                pred(x, y) = std::clamp(gt(x, y) + 0.3 * (rng.uniform() - 0.5), 0.0, 1.0);
            }
        }
        io::write_gray8(root / "gt" / name, gt);
        io::write_gray8(root / "pred" / name, pred);
        io::write_gray8(root / "alpha" / name, gt);
        RgbImage fg(24, 24);
        for (auto& v : fg.data()) v = static_cast<std::uint8_t>(rng.index(256));
        io::write_rgb(root / "fg" / name, fg);
        RgbImage bg(32, 32);
        for (auto& v : bg.data()) v = static_cast<std::uint8_t>(rng.index(256));
        io::write_rgb(root / "bg" / name, bg);
    }
    std::ofstream(root / "cost.csv") << "0.1,0.9,0.5\n0.7,0.2,0.4\n0.3,0.8,0.05\n";
}

Outcome criterion_9(const std::string& tool, const fs::path& work) {
    const fs::path corpus = work / "corpus";
    make_corpus(corpus);
    const auto c = [&](const char* d) { return quote((corpus / d).string()); };

    // each command: (label, args given an output dir and a worker count)
    struct Cmd {
        std::string label;
        std::function<std::string(const fs::path&, int)> args;
        bool parallel;
    };
    const std::vector<Cmd> cmds = {
        {"eval-matting",
         [&](const fs::path& o, int w) {
             return "eval-matting --pred " + c("pred") + " --gt " + c("gt") + " --out " + quote((o / "m.json").string()) +
                    " --workers " + std::to_string(w);
         },
         true},
        {"eval-dis",
         [&](const fs::path& o, int w) {
             return "eval-dis --pred " + c("pred") + " --gt " + c("gt") + " --out " + quote((o / "d.json").string()) +
                    " --workers " + std::to_string(w);
         },
         true},
        {"composite",
         [&](const fs::path& o, int w) {
             return "composite --fg " + c("fg") + " --alpha " + c("alpha") + " --bg " + c("bg") + " --out " +
                    quote((o / "pairs").string()) + " --pairs 8 --seed 5 --workers " + std::to_string(w);
         },
         true},
        {"loss",
         [&](const fs::path& o, int) {
             return "loss --pred " + quote((corpus / "pred" / "im0.png").string()) + " --gt " +
                    quote((corpus / "gt" / "im0.png").string()) + " --manifest " + quote((o / "loss.manifest.json").string());
         },
         false},
        {"sinkhorn",
         [&](const fs::path& o, int) {
             return "sinkhorn --cost " + quote((corpus / "cost.csv").string()) + " --reg 0.01 --manifest " +
                    quote((o / "sk.manifest.json").string());
         },
         false},
        {"gradcheck", [&](const fs::path&, int) { return std::string("gradcheck --seed 3"); }, false},
        {"train-toy",
         [&](const fs::path& o, int) {
             return "train-toy --steps 20 --seed 9 --out " + quote((o / "log.jsonl").string());
         },
         false},
        {"selftest", [&](const fs::path&, int) { return std::string("selftest"); }, false},
    };

    std::vector<std::string> checked;
    for (const auto& cmd : cmds) {
        std::vector<std::pair<std::string, int>> runs{{"r1", 1}, {"r2", 1}};
        if (cmd.parallel) runs.push_back({"r4", 4});
        std::vector<fs::path> dirs;
        for (const auto& [tag, w] : runs) {
            const fs::path d = work / cmd.label / tag;
            fs::create_directories(d);
            if (shell(tool, cmd.args(d, w), d / "stdout.txt") != 0) {
                return {false, cmd.label + " (" + tag + ") did not exit 0"};
            }
            dirs.push_back(d);
        }
        for (std::size_t i = 1; i < dirs.size(); ++i) {
            std::string why;
            if (!same_tree(dirs[0], dirs[i], why)) return {false, cmd.label + ": " + why};
        }
        checked.push_back(cmd.label + (cmd.parallel ? " (x2, workers 1 vs 4)" : " (x2)"));
    }
    std::string d = "identical outputs for";
    for (std::size_t i = 0; i < checked.size(); ++i) d += (i ? ", " : " ") + checked[i];
    return {true, d};
}

Outcome criterion_10(const std::string& tool, const fs::path& work) {
    const auto t0 = std::chrono::steady_clock::now();
    const int code = shell(tool, "selftest", work / "selftest.txt");
    const double s = seconds_since(t0);
    const std::string text = slurp(work / "selftest.txt");
    const bool all = text.find("all checks passed") != std::string::npos;
    return {code == 0 && all && s < 60.0, "exit " + std::to_string(code) + ", " + fmt(s) + " s (budget 60 s)"};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: fclm_acceptance <fclm tool>\n";
        return 2;
    }
    const std::string tool = fs::absolute(argv[1]).string();
    const fs::path work = fs::temp_directory_path() / ("fclm_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);

    const checks::CheckOptions opts;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"sinkhorn matches LP optimum", [&] { return timed_check([&] { return checks::sinkhorn_lp(opts); }, 5.0); }},
        {"gradient suite", [&] { return timed_check([&] { return checks::gradients(opts); }, 30.0); }},
        {"depth weight contract", [&] { return timed_check([&] { return checks::depth_weights_contract(opts); }); }},
        {"gradient reversal contract", [&] { return timed_check([&] { return checks::grl_contract(opts); }); }},
        {"metric identities", [&] { return timed_check([&] { return checks::metric_identities(opts); }); }},
        {"metric oracles", [&] { return timed_check([&] { return checks::metric_oracles(opts); }); }},
        {"compositor algebra", [&] { return timed_check([&] { return checks::compositor_algebra(opts); }); }},
        {"training dynamics", criterion_8},
        {"determinism", [&] { return criterion_9(tool, work / "det"); }},
        {"selftest", [&] { return criterion_10(tool, work); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.passed ? "PASS" : "FAIL") << "  " << (i + 1) << "  " << criteria[i].first << "  " << o.detail
                  << std::endl;
        failed += o.passed ? 0 : 1;
    }
    fs::remove_all(work);
    return failed == 0 ? 0 : 1;
}
