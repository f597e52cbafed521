#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iterator>
#include <map>
#include <sstream>

#include "commands.hpp"
#include "fclm/compositor.hpp"
#include "fclm/image_io.hpp"
#include "fclm/metrics_dis.hpp"
#include "fclm/metrics_matting.hpp"

namespace fclm::cli {

namespace {

using Row = std::map<std::string, double>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

// Same-named PNGs in both directories, or an InputError describing why not.
std::vector<std::string> paired_names(const fs::path& pred_dir, const fs::path& gt_dir) {
    const auto p = list_pngs(pred_dir);
    const auto g = list_pngs(gt_dir);
    if (p.empty() && g.empty()) {
        throw InputError("no images in " + pred_dir.string() + " or " + gt_dir.string());
    }
    std::vector<std::string> only_p, only_g;
    std::set_difference(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(only_p));
    std::set_difference(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(only_g));
    if (!only_p.empty() || !only_g.empty()) {
        std::string msg = "file sets differ;";
        if (!only_p.empty()) msg += " only in " + pred_dir.string() + ": " + join(only_p) + ";";
        if (!only_g.empty()) msg += " only in " + gt_dir.string() + ": " + join(only_g) + ";";
        msg.pop_back();
        throw InputError(msg);
    }
    return p;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

// CSV (filename, then metric columns in key order) and aggregate JSON of means.
void write_tables(const fs::path& out, const std::vector<std::string>& names, const std::vector<Row>& rows,
                  nlohmann::json extra) {
    std::ostringstream csv;
    csv << "filename";
    for (const auto& [key, value] : rows.front()) csv << "," << key;
    csv << "\n";
    Row sums;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        csv << csv_field(names[i]);
        for (const auto& [key, value] : rows[i]) {
            csv << "," << number_text(value);
            sums[key] += value;
        }
        csv << "\n";
    }
    fs::path csv_path = out;
    csv_path.replace_extension(".csv");
    write_text(csv_path, csv.str());

    nlohmann::json agg = std::move(extra);
    agg["images"] = rows.size();
    for (const auto& [key, total] : sums) agg[key] = total / static_cast<double>(rows.size());
    write_text(out, agg.dump(2) + "\n");
}

AlphaMatte read_gray_checked(const fs::path& path) {
    try {
        return io::read_gray(path);
    } catch (const io::ImageIoError& e) {
        throw InputError(std::string("unreadable image: ") + e.what());
    }
}

template <class A, class B>
void require_same_size(const Plane<A>& a, const Plane<B>& b, const std::string& name) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw InputError(name + ": prediction is " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " but ground truth is " + std::to_string(b.width()) +
                         "x" + std::to_string(b.height()));
    }
}

std::vector<AlphaMatte> read_instances(const fs::path& dir) {
    std::vector<AlphaMatte> out;
    for (const auto& name : list_pngs(dir)) out.push_back(read_gray_checked(dir / name));
    return out;
}

}  // namespace

int eval_matting(const EvalMattingArgs& args, Streams io) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto names = paired_names(args.pred_dir, args.gt_dir);
    std::vector<Row> rows(names.size());
    parallel_for(names.size(), args.workers, [&](std::size_t i) {
        const auto pred = read_gray_checked(args.pred_dir / names[i]);
        const auto gt = read_gray_checked(args.gt_dir / names[i]);
        require_same_size(pred, gt, names[i]);
        const auto m = matte_report(pred, gt, args.sigma, args.conn_step);
        Row& r = rows[i];
        r = {{"SAD", m.sad}, {"SAD_raw", m.sad_raw}, {"MSE", m.mse}, {"MAD", m.mad},
             {"Grad", m.grad}, {"Grad_raw", m.grad_raw}, {"Conn", m.conn}, {"Conn_raw", m.conn_raw}};
        if (args.pred_instances) {
            const std::string stem = fs::path(names[i]).stem().string();
            const auto pi = read_instances(*args.pred_instances / stem);
            const auto gi = read_instances(*args.gt_instances / stem);
            for (const auto& inst : pi) require_same_size(inst, gt, stem + " instance");
            for (const auto& inst : gi) require_same_size(inst, gt, stem + " instance");
            r["IMQ_MSE"] = imq(pi, gi, ImqQuality::mse);
            r["IMQ_MAD"] = imq(pi, gi, ImqQuality::mad);
            r["IMQ_Grad"] = imq(pi, gi, ImqQuality::grad);
            r["IMQ_Conn"] = imq(pi, gi, ImqQuality::conn);
        }
    });
    write_tables(args.out, names, rows, nlohmann::json::object());

    RunManifest m;
    m.command = "eval-matting";
    m.config = {{"workers", args.workers}, {"sigma", args.sigma}, {"conn_step", args.conn_step},
                {"out", args.out.string()}};
    m.inputs = {args.pred_dir.string(), args.gt_dir.string()};
    if (args.pred_instances) {
        m.inputs.push_back(args.pred_instances->string());
        m.inputs.push_back(args.gt_instances->string());
    }
    m.wall_time_seconds = seconds_since(t0);
    m.write(manifest_path_for(args.out));
    io.out << "evaluated " << names.size() << " image(s) -> " << args.out.string() << "\n";
    return kExitOk;
}

int eval_dis(const EvalDisArgs& args, Streams io) {
    const auto t0 = std::chrono::steady_clock::now();
    DisOptions opts;
    opts.e_mode = parse_e_measure_mode(args.e_mode);
    opts.hce_gamma = args.hce_gamma;
    const std::string e_key = args.e_mode == "mean" ? "E_phi_m" : args.e_mode == "max" ? "E_phi_max" : "E_phi_adp";

    const auto names = paired_names(args.pred_dir, args.gt_dir);
    std::vector<Row> rows(names.size());
    parallel_for(names.size(), args.workers, [&](std::size_t i) {
        const auto pred = read_gray_checked(args.pred_dir / names[i]);
        const auto gt = binarize(read_gray_checked(args.gt_dir / names[i]));
        require_same_size(pred, gt, names[i]);
        DisReport d;
        try {
            d = dis_report(pred, gt, opts);
        } catch (const UndefinedRecallError&) {
            throw InputError(names[i] + ": ground truth has no foreground");
        }
        rows[i] = {{"maxF_beta", d.max_f}, {"F_beta_w", d.weighted_f}, {"M", d.mae},
                   {"S_alpha", d.s_measure}, {e_key, d.e_measure}, {"HCE_gamma", static_cast<double>(d.hce)}};
    });
    write_tables(args.out, names, rows, {{"hce_approx", true}});

    RunManifest m;
    m.command = "eval-dis";
    m.config = {{"workers", args.workers}, {"e_mode", args.e_mode}, {"hce_gamma", args.hce_gamma},
                {"out", args.out.string()}};
    m.inputs = {args.pred_dir.string(), args.gt_dir.string()};
    m.wall_time_seconds = seconds_since(t0);
    m.write(manifest_path_for(args.out));
    io.out << "evaluated " << names.size() << " image(s) -> " << args.out.string() << "\n";
    return kExitOk;
}

int composite(const CompositeArgs& args, Streams io) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = resolve_seed(args.seed, 0);
    const auto fgs = list_pngs(args.fg_dir);
    if (fgs.empty()) throw InputError("no images in " + args.fg_dir.string());
    const auto bg_names = list_pngs(args.bg_dir);
    if (bg_names.size() < 2) throw InputError("background pool needs at least 2 images");

    std::vector<Background> pool(bg_names.size());
    parallel_for(bg_names.size(), args.workers, [&](std::size_t i) {
        try {
            pool[i] = {fs::path(bg_names[i]).stem().string(), io::read_rgb(args.bg_dir / bg_names[i])};
        } catch (const io::ImageIoError& e) {
            throw InputError(std::string("unreadable image: ") + e.what());
        }
    });

    fs::create_directories(args.out_dir);
    nlohmann::json entries = nlohmann::json::array();
    std::vector<nlohmann::json> slots(args.pairs);
    parallel_for(args.pairs, args.workers, [&](std::size_t i) {
        const std::string& name = fgs[i % fgs.size()];
        RgbImage fg;
        try {
            fg = io::read_rgb(args.fg_dir / name);
        } catch (const io::ImageIoError& e) {
            throw InputError(std::string("unreadable image: ") + e.what());
        }
        const auto alpha = read_gray_checked(args.alpha_dir / name);
        if (fg.width() != alpha.width() || fg.height() != alpha.height()) {
            throw InputError(name + ": foreground and alpha sizes differ");
        }
        const std::uint64_t pair_seed = mix_seed(seed, i);
        CompositePair pair;
        try {
            pair = make_pair(fg, alpha, pool, pair_seed);
        } catch (const std::invalid_argument& e) {
            throw InputError(name + ": " + e.what());
        }
        char id[32];
        std::snprintf(id, sizeof id, "pair_%04zu", i);
        io::write_rgb(args.out_dir / (std::string(id) + "_a.png"), pair.image_a);
        io::write_rgb(args.out_dir / (std::string(id) + "_b.png"), pair.image_b);
        io::write_gray16(args.out_dir / (std::string(id) + "_alpha.png"), pair.alpha);
        slots[i] = {{"pair_id", id}, {"foreground", name}, {"background_a", pair.background_a_id},
                    {"background_b", pair.background_b_id}, {"seed", pair_seed}};
    });
    for (auto& s : slots) entries.push_back(std::move(s));
    write_text(args.out_dir / "pairs.json",
               nlohmann::json{{"seed", seed}, {"pairs", entries}}.dump(2) + "\n");

    RunManifest m;
    m.command = "composite";
    m.config = {{"pairs", args.pairs}, {"workers", args.workers}, {"out", args.out_dir.string()}};
    m.inputs = {args.fg_dir.string(), args.alpha_dir.string(), args.bg_dir.string()};
    m.seed = seed;
    m.wall_time_seconds = seconds_since(t0);
    m.write(args.out_dir / "run.manifest.json");
    io.out << "wrote " << args.pairs << " pair(s) -> " << args.out_dir.string() << "\n";
    return kExitOk;
}

}  // namespace fclm::cli
