#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fclm/cli.hpp"
#include "fclm/toy_harness.hpp"

namespace fclm::cli {

namespace fs = std::filesystem;

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

struct EvalMattingArgs {
    fs::path pred_dir;
    fs::path gt_dir;
    fs::path out;
    std::size_t workers = 1;
    double sigma = 1.4;
    double conn_step = 0.1;
    std::optional<fs::path> pred_instances;
    std::optional<fs::path> gt_instances;
};

struct EvalDisArgs {
    fs::path pred_dir;
    fs::path gt_dir;
    fs::path out;
    std::size_t workers = 1;
    std::string e_mode = "mean";
    std::size_t hce_gamma = 5;
};

struct CompositeArgs {
    fs::path fg_dir;
    fs::path alpha_dir;
    fs::path bg_dir;
    fs::path out_dir;
    std::size_t pairs = 1;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
};

struct LossArgs {
    fs::path pred;
    fs::path gt;
    std::string task = "matting";
    std::optional<fs::path> manifest;
};

struct SinkhornArgs {
    fs::path cost;
    double reg = 0.05;
    std::size_t max_iters = 500;
    double tol = 1e-6;
    bool epsilon_scaling = false;
    std::optional<fs::path> manifest;
};

struct CheckArgs {
    std::optional<std::uint64_t> seed;
    bool corrupt_gradient = false;
    std::optional<fs::path> manifest;
};

struct TrainToyArgs {
    TrainConfig config;
    std::optional<std::uint64_t> seed;
    std::size_t pairs = 8;
    std::size_t image_size = 16;
    std::string task = "matting";
    std::optional<fs::path> out;
    std::optional<fs::path> manifest;
};

int eval_matting(const EvalMattingArgs& args, Streams io);
int eval_dis(const EvalDisArgs& args, Streams io);
int composite(const CompositeArgs& args, Streams io);
int loss(const LossArgs& args, Streams io);
int sinkhorn(const SinkhornArgs& args, Streams io);
int gradcheck(const CheckArgs& args, Streams io);
int selftest(const CheckArgs& args, Streams io);
int train_toy(const TrainToyArgs& args, Streams io);

// shared plumbing

/// Runs body(i) for i < n on up to `workers` threads. Failures are rethrown
/// for the lowest failing index so errors do not depend on scheduling.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

/// Sorted names of the *.png files directly inside dir.
std::vector<std::string> list_pngs(const fs::path& dir);

/// Shortest round-trip text of a double, as in the JSON output.
std::string number_text(double v);

void write_text(const fs::path& path, const std::string& text);

/// x.json -> x.manifest.json
fs::path manifest_path_for(const fs::path& output);

}  // namespace fclm::cli
