#include "fclm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"
#include "fclm/image_io.hpp"

namespace fclm::cli {

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = inputs;
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    j["tool_version"] = tool_version;
    j["wall_time_seconds"] = wall_time_seconds;
    return j;
}

void RunManifest::write(const std::filesystem::path& path) const {
    write_text(path, to_json().dump(2) + "\n");
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t fallback) {
    if (flag) return *flag;
    const char* env = std::getenv(kSeedEnv);
    if (env == nullptr || *env == '\0') return fallback;
    std::uint64_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec != std::errc() || ptr != end) {
        throw InputError(std::string(kSeedEnv) + " is not an unsigned integer: '" + env + "'");
    }
    return v;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<std::string> list_pngs(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw InputError("not a directory: " + dir.string());
    }
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

std::string number_text(double v) {
    return nlohmann::json(v).dump();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    f << text;
    if (!f) throw InputError("write failed: " + path.string());
}

fs::path manifest_path_for(const fs::path& output) {
    fs::path p = output;
    p.replace_extension();
    return p.string() + ".manifest.json";
}

namespace {

template <class T>
std::optional<T> flag_value(const CLI::Option* opt, const T& v) {
    return opt->count() ? std::optional<T>(v) : std::nullopt;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Matting and segmentation math core: metrics, losses, transport, toy training"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    Streams io{out, err};
    std::function<int()> action;

    // eval-matting
    EvalMattingArgs em;
    auto* c_em = app.add_subcommand("eval-matting", "Matting errors for same-named PNG mattes");
    c_em->add_option("--pred", em.pred_dir, "Directory of predicted mattes")->required();
    c_em->add_option("--gt", em.gt_dir, "Directory of ground-truth mattes")->required();
    c_em->add_option("--out", em.out, "Aggregate JSON path; the CSV goes next to it")->required();
    c_em->add_option("--workers", em.workers, "Worker threads")->check(CLI::PositiveNumber);
    c_em->add_option("--sigma", em.sigma, "Gradient filter sigma")->check(CLI::PositiveNumber);
    c_em->add_option("--conn-step", em.conn_step, "Connectivity threshold step")->check(CLI::Range(1e-6, 0.999999));
    std::string em_pred_inst, em_gt_inst;
    auto* o_pi = c_em->add_option("--pred-instances", em_pred_inst, "Per-image directories of predicted instance mattes");
    auto* o_gi = c_em->add_option("--gt-instances", em_gt_inst, "Per-image directories of ground-truth instance mattes");
    o_pi->needs(o_gi);
    o_gi->needs(o_pi);
    c_em->callback([&] {
        if (o_pi->count()) em.pred_instances = em_pred_inst;
        if (o_gi->count()) em.gt_instances = em_gt_inst;
        action = [&] { return eval_matting(em, io); };
    });

    // eval-dis
    EvalDisArgs ed;
    auto* c_ed = app.add_subcommand("eval-dis", "Segmentation metrics for same-named PNG maps");
    c_ed->add_option("--pred", ed.pred_dir, "Directory of predicted probability maps")->required();
    c_ed->add_option("--gt", ed.gt_dir, "Directory of ground-truth masks")->required();
    c_ed->add_option("--out", ed.out, "Aggregate JSON path; the CSV goes next to it")->required();
    c_ed->add_option("--workers", ed.workers, "Worker threads")->check(CLI::PositiveNumber);
    c_ed->add_option("--e-mode", ed.e_mode, "E-measure mode")->check(CLI::IsMember({"mean", "max", "adaptive"}));
    c_ed->add_option("--hce-gamma", ed.hce_gamma, "HCE tolerance in pixels");
    c_ed->callback([&] { action = [&] { return eval_dis(ed, io); }; });

    // composite
    CompositeArgs co;
    std::uint64_t co_seed = 0;
    auto* c_co = app.add_subcommand("composite", "Paired composites of each foreground over two backgrounds");
    c_co->add_option("--fg", co.fg_dir, "Foreground RGB PNGs")->required();
    c_co->add_option("--alpha", co.alpha_dir, "Same-named alpha mattes")->required();
    c_co->add_option("--bg", co.bg_dir, "Background pool")->required();
    c_co->add_option("--out", co.out_dir, "Output directory")->required();
    c_co->add_option("--pairs", co.pairs, "Number of pairs")->check(CLI::PositiveNumber);
    auto* o_co_seed = c_co->add_option("--seed", co_seed, "Base seed");
    c_co->add_option("--workers", co.workers, "Worker threads")->check(CLI::PositiveNumber);
    c_co->callback([&] {
        co.seed = flag_value(o_co_seed, co_seed);
        action = [&] { return composite(co, io); };
    });

    // loss
    LossArgs lo;
    std::string lo_manifest;
    auto* c_lo = app.add_subcommand("loss", "Prediction-head losses for one image pair");
    c_lo->add_option("--pred", lo.pred, "Predicted matte or probability map")->required();
    c_lo->add_option("--gt", lo.gt, "Ground truth")->required();
    c_lo->add_option("--task", lo.task, "matting or dis")->check(CLI::IsMember({"matting", "dis"}));
    auto* o_lo_m = c_lo->add_option("--manifest", lo_manifest, "Run manifest path");
    c_lo->callback([&] {
        if (o_lo_m->count()) lo.manifest = lo_manifest;
        action = [&] { return loss(lo, io); };
    });

    // sinkhorn
    SinkhornArgs sk;
    std::string sk_manifest;
    auto* c_sk = app.add_subcommand("sinkhorn", "Entropic transport plan for a CSV cost matrix");
    c_sk->add_option("--cost", sk.cost, "Cost matrix CSV, one row per line")->required();
    c_sk->add_option("--reg", sk.reg, "Entropic regularization")->check(CLI::PositiveNumber);
    c_sk->add_option("--max-iters", sk.max_iters, "Iteration budget");
    c_sk->add_option("--tol", sk.tol, "L1 marginal tolerance")->check(CLI::PositiveNumber);
    c_sk->add_flag("--epsilon-scaling", sk.epsilon_scaling, "Warm-start from coarser regularization");
    auto* o_sk_m = c_sk->add_option("--manifest", sk_manifest, "Run manifest path");
    c_sk->callback([&] {
        if (o_sk_m->count()) sk.manifest = sk_manifest;
        action = [&] { return sinkhorn(sk, io); };
    });

    // gradcheck / selftest
    CheckArgs gc, st;
    std::uint64_t gc_seed = 0, st_seed = 0;
    std::string gc_manifest, st_manifest;
    auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference check of every analytic gradient");
    auto* o_gc_seed = c_gc->add_option("--seed", gc_seed, "Instance seed");
    c_gc->add_flag("--corrupt-gradient", gc.corrupt_gradient, "Debug: perturb one analytic gradient");
    auto* o_gc_m = c_gc->add_option("--manifest", gc_manifest, "Run manifest path");
    c_gc->callback([&] {
        gc.seed = flag_value(o_gc_seed, gc_seed);
        if (o_gc_m->count()) gc.manifest = gc_manifest;
        action = [&] { return gradcheck(gc, io); };
    });
    auto* c_st = app.add_subcommand("selftest", "Oracle, gradient and identity checks");
    auto* o_st_seed = c_st->add_option("--seed", st_seed, "Instance seed");
    c_st->add_flag("--corrupt-gradient", st.corrupt_gradient, "Debug: perturb one analytic gradient");
    auto* o_st_m = c_st->add_option("--manifest", st_manifest, "Run manifest path");
    c_st->callback([&] {
        st.seed = flag_value(o_st_seed, st_seed);
        if (o_st_m->count()) st.manifest = st_manifest;
        action = [&] { return selftest(st, io); };
    });

    // train-toy
    TrainToyArgs tt;
    std::uint64_t tt_seed = 0;
    std::string tt_out, tt_manifest;
    auto& cfg = tt.config;
    auto* c_tt = app.add_subcommand("train-toy", "Train the toy model on seeded blob pairs");
    c_tt->add_option("--steps", cfg.steps, "Gradient steps");
    auto* o_tt_seed = c_tt->add_option("--seed", tt_seed, "Model and data seed");
    auto* o_tt_out = c_tt->add_option("--out", tt_out, "JSON-lines log path (default stdout)");
    c_tt->add_option("--pairs", tt.pairs, "Dataset pairs")->check(CLI::Range(8, 4096));
    c_tt->add_option("--image-size", tt.image_size, "Dataset image side")->check(CLI::PositiveNumber);
    c_tt->add_option("--lr", cfg.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
    c_tt->add_option("--lambda", cfg.lambda, "Gradient reversal strength")->check(CLI::NonNegativeNumber);
    c_tt->add_option("--exchange-ratio", cfg.exchange_ratio, "Token exchange ratio")->check(CLI::Range(0.0, 1.0));
    c_tt->add_option("--delta", cfg.delta, "Depth threshold")->check(CLI::Range(0.0, 1.0));
    c_tt->add_option("--sinkhorn-reg", cfg.sinkhorn_reg, "Entropic regularization")->check(CLI::PositiveNumber);
    c_tt->add_option("--sinkhorn-tol", cfg.sinkhorn_tol, "Marginal tolerance")->check(CLI::PositiveNumber);
    c_tt->add_option("--sinkhorn-max-iters", cfg.sinkhorn_max_iters, "Sinkhorn iteration budget");
    c_tt->add_option("--temperature", cfg.temperature, "Distillation temperature")->check(CLI::PositiveNumber);
    c_tt->add_option("--w-kd", cfg.weights.kd, "Distillation weight")->check(CLI::NonNegativeNumber);
    c_tt->add_option("--w-adv", cfg.weights.adv, "Adversarial weight")->check(CLI::NonNegativeNumber);
    c_tt->add_option("--w-ot", cfg.weights.ot, "Transport weight")->check(CLI::NonNegativeNumber);
    c_tt->add_option("--w-head", cfg.weights.head, "Head weight")->check(CLI::NonNegativeNumber);
    c_tt->add_option("--patch-size", cfg.patch_size, "Patch side")->check(CLI::PositiveNumber);
    c_tt->add_option("--dim", cfg.dim, "Student token dim")->check(CLI::PositiveNumber);
    c_tt->add_option("--encoder-gain", cfg.encoder_gain, "Encoder init gain")->check(CLI::PositiveNumber);
    c_tt->add_option("--teacher-dim", cfg.teacher_dim, "Teacher token dim")->check(CLI::PositiveNumber);
    c_tt->add_option("--disc-hidden", cfg.discriminator_hidden, "Discriminator hidden width")->check(CLI::PositiveNumber);
    c_tt->add_option("--task", tt.task, "matting or dis")->check(CLI::IsMember({"matting", "dis"}));
    auto* o_tt_m = c_tt->add_option("--manifest", tt_manifest, "Run manifest path (default next to --out)");
    c_tt->callback([&] {
        tt.seed = flag_value(o_tt_seed, tt_seed);
        if (o_tt_out->count()) tt.out = tt_out;
        if (o_tt_m->count()) tt.manifest = tt_manifest;
        action = [&] { return train_toy(tt, io); };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        return action();
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const io::ImageIoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
}

}  // namespace fclm::cli
