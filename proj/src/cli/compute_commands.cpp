#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "fclm/checks.hpp"
#include "fclm/fg_align.hpp"
#include "fclm/image_io.hpp"
#include "fclm/pred_loss.hpp"

namespace fclm::cli {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

DenseMatrix read_cost_csv(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path.string());
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::size_t count = 0;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const std::string t = trim(cell);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
            if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
                throw InputError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + t + "'");
            }
            values.push_back(v);
            ++count;
        }
        if (rows > 0 && count != cols) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(cols) + " values, got " + std::to_string(count));
        }
        cols = count;
        ++rows;
    }
    if (rows == 0) throw InputError(path.string() + ": empty cost matrix");
    return DenseMatrix(rows, cols, std::move(values));
}

nlohmann::json matrix_json(const DenseMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

void maybe_write_manifest(const std::optional<fs::path>& path, RunManifest m,
                          std::chrono::steady_clock::time_point t0) {
    if (!path) return;
    m.wall_time_seconds = seconds_since(t0);
    m.write(*path);
}

}  // namespace

int loss(const LossArgs& args, Streams io) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto pred = io::read_gray(args.pred);
    const auto gt = io::read_gray(args.gt);
    if (pred.width() != gt.width() || pred.height() != gt.height()) {
        throw InputError("prediction and ground truth sizes differ");
    }
    const HeadTask task = parse_head_task(args.task);
    nlohmann::json j;
    j["task"] = args.task;
    if (task == HeadTask::matting) {
        j["l1"] = l1_matte_loss(pred, gt);
        j["laplacian"] = laplacian_pyramid_loss(pred, gt);
    } else {
        const auto mask = binarize(gt);
        j["bce"] = bce_loss(pred, mask);
        j["iou"] = iou_loss(pred, mask);
    }
    j["head"] = head_loss_grad(task, pred, gt).value;
    io.out << j.dump(2) << "\n";

    RunManifest m;
    m.command = "loss";
    m.config = {{"task", args.task}};
    m.inputs = {args.pred.string(), args.gt.string()};
    maybe_write_manifest(args.manifest, m, t0);
    return kExitOk;
}

int sinkhorn(const SinkhornArgs& args, Streams io) {
    const auto t0 = std::chrono::steady_clock::now();
    const DenseMatrix cost = read_cost_csv(args.cost);
    const SinkhornOptions opts{args.reg, args.max_iters, args.tol, args.epsilon_scaling};
    RunManifest m;
    m.command = "sinkhorn";
    m.config = {{"reg", args.reg}, {"max_iters", args.max_iters}, {"tol", args.tol},
                {"epsilon_scaling", args.epsilon_scaling}};
    m.inputs = {args.cost.string()};
    try {
        const auto plan = sinkhorn_plan(cost, EmpiricalDistribution::uniform(cost.rows()),
                                        EmpiricalDistribution::uniform(cost.cols()), opts);
        nlohmann::json j;
        j["loss"] = plan.transport_cost();
        j["entropic_objective"] = plan.entropic_objective();
        j["plan"] = matrix_json(plan.pi);
        j["iterations"] = plan.iterations_used;
        j["row_residual"] = plan.row_residual;
        j["col_residual"] = plan.col_residual;
        j["reg"] = plan.reg;
        io.out << j.dump(2) << "\n";
    } catch (const SinkhornError& e) {
        io.err << "error: " << e.what() << "\n";
        maybe_write_manifest(args.manifest, m, t0);
        return kExitCheckFailed;
    }
    maybe_write_manifest(args.manifest, m, t0);
    return kExitOk;
}

int gradcheck(const CheckArgs& args, Streams io) {
    const auto t0 = std::chrono::steady_clock::now();
    checks::CheckOptions opts;
    opts.seed = resolve_seed(args.seed, checks::kCheckSeed);
    opts.corrupt_gradient = args.corrupt_gradient;
    const auto suite = checks::gradient_suite(opts);
    nlohmann::json j;
    j["step"] = suite.step;
    j["tolerance"] = suite.tolerance;
    j["seed"] = opts.seed;
    nlohmann::json errs = nlohmann::json::object();
    for (const auto& e : suite.entries) errs[e.loss] = e.max_rel_error;
    j["max_rel_error"] = errs;
    j["passed"] = suite.passed();
    io.out << j.dump(2) << "\n";

    RunManifest m;
    m.command = "gradcheck";
    m.config = {{"corrupt_gradient", args.corrupt_gradient}};
    m.seed = opts.seed;
    maybe_write_manifest(args.manifest, m, t0);
    return suite.passed() ? kExitOk : kExitCheckFailed;
}

int selftest(const CheckArgs& args, Streams io) {
    const auto t0 = std::chrono::steady_clock::now();
    checks::CheckOptions opts;
    opts.seed = resolve_seed(args.seed, checks::kCheckSeed);
    opts.corrupt_gradient = args.corrupt_gradient;
    const auto results = checks::run_all(opts);
    std::size_t failed = 0;
    for (const auto& r : results) {
        io.out << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  " << r.detail << "\n";
        failed += r.passed ? 0 : 1;
    }
    io.out << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << "\n";
    const double elapsed = seconds_since(t0);
    if (elapsed > 60.0) {
        io.err << "warning: selftest took " << elapsed << " s (budget 60 s)\n";
    }

    RunManifest m;
    m.command = "selftest";
    m.config = {{"corrupt_gradient", args.corrupt_gradient}};
    m.seed = opts.seed;
    maybe_write_manifest(args.manifest, m, t0);
    return failed == 0 ? kExitOk : kExitCheckFailed;
}

int train_toy(const TrainToyArgs& args, Streams io) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig cfg = args.config;
    cfg.seed = resolve_seed(args.seed, cfg.seed);
    cfg.task = parse_head_task(args.task);
    if (args.image_size % cfg.patch_size != 0) {
        throw InputError("--image-size must be a multiple of --patch-size");
    }

    RunManifest m;
    m.command = "train-toy";
    m.config = {{"steps", cfg.steps},
                {"learning_rate", cfg.learning_rate},
                {"lambda", cfg.lambda},
                {"exchange_ratio", cfg.exchange_ratio},
                {"delta", cfg.delta},
                {"sinkhorn_reg", cfg.sinkhorn_reg},
                {"sinkhorn_tol", cfg.sinkhorn_tol},
                {"sinkhorn_max_iters", cfg.sinkhorn_max_iters},
                {"temperature", cfg.temperature},
                {"weights", {{"kd", cfg.weights.kd}, {"adv", cfg.weights.adv}, {"ot", cfg.weights.ot}, {"head", cfg.weights.head}}},
                {"patch_size", cfg.patch_size},
                {"dim", cfg.dim},
                {"encoder_gain", cfg.encoder_gain},
                {"teacher_dim", cfg.teacher_dim},
                {"discriminator_hidden", cfg.discriminator_hidden},
                {"task", args.task},
                {"pairs", args.pairs},
                {"image_size", args.image_size}};
    m.seed = cfg.seed;

    const auto data = make_blob_dataset(args.pairs, args.image_size, cfg.seed);
    TrainLog log;
    try {
        log = run_training(data, cfg);
    } catch (const TrainingDivergedError& e) {
        io.err << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }

    std::ostringstream lines;
    for (const auto& e : log.entries) {
        const nlohmann::ordered_json j = {{"step", e.step},       {"l_kd", e.l_kd},   {"l_adv", e.l_adv},
                                  {"l_ot", e.l_ot},       {"l_head", e.l_head}, {"total", e.total},
                                  {"disc_acc", e.disc_acc}, {"align_stat", e.align_stat}};
        lines << j.dump() << "\n";
    }
    if (args.out) {
        write_text(*args.out, lines.str());
        m.wall_time_seconds = seconds_since(t0);
        m.write(args.manifest ? *args.manifest : manifest_path_for(*args.out));
    } else {
        io.out << lines.str();
        maybe_write_manifest(args.manifest, m, t0);
    }
    return kExitOk;
}

}  // namespace fclm::cli
