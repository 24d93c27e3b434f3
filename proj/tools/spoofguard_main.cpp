// spoofguard CLI: simulate | train | detect | eval | export-images.
//
// Exit codes are a stable contract:
//   0 ok / 1 spoof detected / 2 usage / 3 data / 4 compatibility.
// SPOOFGUARD_SEED overrides the master seed of any seeded command. Every
// command echoes its fully resolved configuration (flags + config file +
// defaults) into its output artifacts so a run is reproducible from them.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spoofguard/spoofguard.hpp"

namespace sg = spoofguard;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSpoofed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitCompat = 4;

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

int usage_error(const std::string& msg) {
    std::cerr << "error: " << msg << '\n';
    return kExitUsage;
}

int data_error(const std::string& msg) {
    std::cerr << "error: " << msg << '\n';
    return kExitData;
}

bool apply_seed_env(std::uint64_t& seed, std::string& err) {
    const char* env = std::getenv("SPOOFGUARD_SEED");
    if (env == nullptr)
        return true;
    const char* end = env + std::strlen(env);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(env, end, v);
    if (ec != std::errc() || p != end) {
        err = "SPOOFGUARD_SEED is not an unsigned integer: " + std::string(env);
        return false;
    }
    seed = v;
    return true;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot open for writing");
    out << content;
    if (!out)
        throw std::runtime_error(path.string() + ": write failed");
}

std::string config_lines(const std::map<std::string, std::string>& kv) {
    std::string s;
    for (const auto& [k, v] : kv) {
        s += k;
        s += '=';
        s += v;
        s += '\n';
    }
    return s;
}

std::string trimmed(std::string s) {
    const auto is_ws = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_ws(s.back()))
        s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && is_ws(s[i]))
        ++i;
    return s.substr(i);
}

/// Expands `--config FILE` into `--key value` tokens appended to `args`.
///
/// Keys are the long option names of the subcommand in args[0]. Entries whose
/// option already appears on the command line are dropped, which is what gives
/// explicit flags precedence. Injected values still pass through the normal
/// option validation during parse.
bool inject_config_args(const CLI::App& app, std::vector<std::string>& args, std::string& err) {
    if (args.empty())
        return true;
    const CLI::App* sub = app.get_subcommand_no_throw(args[0]);
    if (sub == nullptr)
        return true;  // let the parser report the unknown subcommand

    std::string file;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            file = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            file = args[i].substr(std::strlen("--config="));
    }
    if (file.empty())
        return true;

    std::ifstream in(file);
    if (!in) {
        err = "cannot read config file: " + file;
        return false;
    }

    const auto given_on_cli = [&](const CLI::Option* opt) {
        for (std::size_t i = 1; i < args.size(); ++i) {
            const std::string& t = args[i];
            for (const std::string& l : opt->get_lnames())
                if (t == "--" + l || t.rfind("--" + l + "=", 0) == 0)
                    return true;
            if (t.size() >= 2 && t[0] == '-' && t[1] != '-')
                for (const std::string& s : opt->get_snames())
                    if (t.compare(1, s.size(), s) == 0)
                        return true;
        }
        return false;
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trimmed(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            err = file + ":" + std::to_string(lineno) + ": expected key=value";
            return false;
        }
        const std::string key = trimmed(line.substr(0, eq));
        const std::string value = trimmed(line.substr(eq + 1));
        if (key.empty()) {
            err = file + ":" + std::to_string(lineno) + ": empty key";
            return false;
        }
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr) {
            err = file + ": unknown config key for " + args[0] + ": " + key;
            return false;
        }
        if (given_on_cli(opt))
            continue;
        args.push_back("--" + key);
        args.push_back(value);
    }
    return true;
}

/// Maps library failures onto the exit-code contract.
template <typename Body>
int guarded(Body&& body) {
    try {
        return body();
    } catch (const sg::DimensionMismatchError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCompat;
    } catch (const std::exception& e) {
        return data_error(e.what());
    }
}

struct GridArgs {
    int p = 224;
    int q = 224;
    double i_min = -1.5;
    double i_max = 1.5;
    double q_min = -1.5;
    double q_max = 1.5;
};

void add_grid_flags(CLI::App* sub, GridArgs& g) {
    sub->add_option("--grid-p", g.p, "histogram bins along I");
    sub->add_option("--grid-q", g.q, "histogram bins along Q");
    sub->add_option("--i-min", g.i_min, "left edge of the I range");
    sub->add_option("--i-max", g.i_max, "right edge of the I range");
    sub->add_option("--q-min", g.q_min, "bottom edge of the Q range");
    sub->add_option("--q-max", g.q_max, "top edge of the Q range");
}

sg::GridSpec to_grid(const GridArgs& g) {
    sg::GridSpec spec;
    spec.p = g.p;
    spec.q = g.q;
    spec.i_min = g.i_min;
    spec.i_max = g.i_max;
    spec.q_min = g.q_min;
    spec.q_max = g.q_max;
    return spec;
}

void put_grid(std::map<std::string, std::string>& kv, const GridArgs& g) {
    kv["grid-p"] = std::to_string(g.p);
    kv["grid-q"] = std::to_string(g.q);
    kv["i-min"] = fmt(g.i_min);
    kv["i-max"] = fmt(g.i_max);
    kv["q-min"] = fmt(g.q_min);
    kv["q-max"] = fmt(g.q_max);
}

struct HyperArgs {
    int epochs = 250;
    double beta = 0.5;     // sparsity penalty weight
    double rho = 0.05;     // sparsity target
    double lambda = 0.01;  // L2 weight penalty
    int latent = 16;
    int hidden2 = 16;
    int hidden3 = 16;
};

void add_hyper_flags(CLI::App* sub, HyperArgs& h) {
    sub->add_option("--epochs", h.epochs, "L-BFGS iterations");
    sub->add_option("--beta", h.beta, "sparsity penalty weight");
    sub->add_option("--rho", h.rho, "sparsity target activation");
    sub->add_option("--lambda", h.lambda, "L2 weight penalty");
    sub->add_option("--latent", h.latent, "latent layer width");
    sub->add_option("--hidden2", h.hidden2, "first decoder hidden width");
    sub->add_option("--hidden3", h.hidden3, "second decoder hidden width");
}

sg::TrainConfig to_train_config(const HyperArgs& h, std::uint64_t seed) {
    sg::TrainConfig cfg;
    cfg.epochs = h.epochs;
    cfg.sparsity_weight = h.beta;
    cfg.sparsity_target = h.rho;
    cfg.l2_weight = h.lambda;
    cfg.latent = h.latent;
    cfg.hidden2 = h.hidden2;
    cfg.hidden3 = h.hidden3;
    cfg.seed = seed;
    return cfg;
}

void put_hypers(std::map<std::string, std::string>& kv, const HyperArgs& h) {
    kv["epochs"] = std::to_string(h.epochs);
    kv["beta"] = fmt(h.beta);
    kv["rho"] = fmt(h.rho);
    kv["lambda"] = fmt(h.lambda);
    kv["latent"] = std::to_string(h.latent);
    kv["hidden2"] = std::to_string(h.hidden2);
    kv["hidden3"] = std::to_string(h.hidden3);
}

int check_hypers(const HyperArgs& h) {
    if (h.epochs < 0)
        return usage_error("--epochs must be >= 0");
    if (h.latent < 1 || h.hidden2 < 1 || h.hidden3 < 1)
        return usage_error("layer widths must be >= 1");
    if (!(h.rho > 0.0 && h.rho < 1.0))
        return usage_error("--rho must lie in (0,1)");
    if (h.beta < 0.0 || h.lambda < 0.0)
        return usage_error("--beta and --lambda must be >= 0");
    return kExitOk;
}

int check_grid(const GridArgs& g) {
    try {
        to_grid(g).validate();
    } catch (const std::exception& e) {
        return usage_error(e.what());
    }
    return kExitOk;
}

std::vector<sg::HistogramImage> chunks_to_images(const std::vector<sg::IqChunk>& chunks,
                                                 const sg::GridSpec& grid) {
    std::vector<sg::HistogramImage> images;
    images.reserve(chunks.size());
    for (const sg::IqChunk& c : chunks)
        images.push_back(sg::make_histogram(c, grid));
    return images;
}

void print_progress(const sg::LbfgsIterate& it) {
    if (it.iteration == 1 || it.iteration % 25 == 0)
        std::cerr << "  iter " << it.iteration << "  loss " << fmt(it.loss) << '\n';
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string out;
    std::size_t chunks = 500;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    double legit_sigma = 0.05;
    double spoof_sigma = 0.15;
    double legit_amplitude = 1.0;
    double spoof_amplitude = 1.0;
    double legit_jitter = 0.0;
    double spoof_jitter = 0.0;
    double legit_k = std::numeric_limits<double>::infinity();
    double spoof_k = std::numeric_limits<double>::infinity();
    double sample_rate = 1.0;
};

int run_simulate(SimulateArgs a) {
    if (a.chunks == 0)
        return usage_error("--chunks must be >= 1");
    if (a.n == 0)
        return usage_error("--n must be >= 1");
    std::string err;
    if (!apply_seed_env(a.seed, err))
        return usage_error(err);

    sg::ChannelParams legit;
    legit.noise_sigma = a.legit_sigma;
    legit.amplitude = a.legit_amplitude;
    legit.phase_jitter = a.legit_jitter;
    legit.fading_k = a.legit_k;
    sg::ChannelParams spoof;
    spoof.noise_sigma = a.spoof_sigma;
    spoof.amplitude = a.spoof_amplitude;
    spoof.phase_jitter = a.spoof_jitter;
    spoof.fading_k = a.spoof_k;

    std::map<std::string, std::string> resolved;
    resolved["command"] = "simulate";
    resolved["out"] = a.out;
    resolved["chunks"] = std::to_string(a.chunks);
    resolved["n"] = std::to_string(a.n);
    resolved["seed"] = std::to_string(a.seed);
    resolved["legit-sigma"] = fmt(a.legit_sigma);
    resolved["spoof-sigma"] = fmt(a.spoof_sigma);
    resolved["legit-amplitude"] = fmt(a.legit_amplitude);
    resolved["spoof-amplitude"] = fmt(a.spoof_amplitude);
    resolved["legit-jitter"] = fmt(a.legit_jitter);
    resolved["spoof-jitter"] = fmt(a.spoof_jitter);
    resolved["legit-k"] = fmt(a.legit_k);
    resolved["spoof-k"] = fmt(a.spoof_k);
    resolved["sample-rate"] = fmt(a.sample_rate);

    // Parameter and filesystem problems alike are usage errors here: the
    // command takes no data inputs.
    try {
        const sg::Dataset ds = sg::gen_dataset(legit, spoof, a.chunks, a.n, a.seed);
        sg::export_dataset(ds, a.out, a.sample_rate);
        write_text_file(fs::path(a.out) / "simulate_config.txt", config_lines(resolved));
        std::cout << "legitimate: " << ds.legit.size() << " chunks\n";
        std::cout << "spoofed: " << ds.spoof.size() << " chunks\n";
        std::cout << "wrote " << (ds.legit.size() + ds.spoof.size()) << " captures under " << a.out
                  << '\n';
    } catch (const std::exception& e) {
        return usage_error(e.what());
    }
    return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
    std::string data;
    std::string model = "detector.aemd";
    std::size_t n = 1000;
    GridArgs grid;
    HyperArgs hyper;
    std::uint64_t seed = 0;
};

int run_train(TrainArgs a) {
    if (a.n == 0)
        return usage_error("--n must be >= 1");
    if (const int rc = check_grid(a.grid); rc != kExitOk)
        return rc;
    if (const int rc = check_hypers(a.hyper); rc != kExitOk)
        return rc;
    std::string err;
    if (!apply_seed_env(a.seed, err))
        return usage_error(err);

    std::map<std::string, std::string> resolved;
    resolved["command"] = "train";
    resolved["data"] = a.data;
    resolved["model"] = a.model;
    resolved["n"] = std::to_string(a.n);
    resolved["seed"] = std::to_string(a.seed);
    put_grid(resolved, a.grid);
    put_hypers(resolved, a.hyper);

    return guarded([&]() {
        fs::path dir(a.data);
        if (fs::is_directory(dir / "legit"))
            dir /= "legit";
        const std::vector<sg::IqChunk> chunks =
            sg::load_class_dir(dir, a.n, sg::Label::legitimate);
        if (chunks.size() < 2)
            return data_error("insufficient training data: " + std::to_string(chunks.size()) +
                              " chunks under " + dir.string() + " (need at least 2)");
        const sg::GridSpec grid = to_grid(a.grid);
        const Eigen::MatrixXd batch = sg::images_to_batch(chunks_to_images(chunks, grid));
        const sg::TrainConfig cfg = to_train_config(a.hyper, a.seed);

        if (cfg.epochs == 0)
            std::cerr << "warning: --epochs 0, emitting an untrained detector\n";
        const auto t0 = std::chrono::steady_clock::now();
        const sg::AeModel model = sg::train(batch, cfg, print_progress);
        const auto t1 = std::chrono::steady_clock::now();

        const sg::DetectorState det = sg::fit_detector(model, grid, batch);
        sg::save_detector(det, a.model, resolved);

        const double seconds = std::chrono::duration<double>(t1 - t0).count();
        std::cout << "images: " << chunks.size() << '\n';
        std::cout << "final loss: " << fmt(sg::loss(model, batch, cfg).total) << '\n';
        std::cout << "tau: " << fmt(det.tau) << '\n';
        std::cout << "train time: " << fmt(seconds) << " s\n";
        std::cout << "wrote " << a.model << " and " << sg::sidecar_path_for(a.model).string()
                  << '\n';
        return kExitOk;
    });
}

// ------------------------------------------------------------------ detect

struct DetectArgs {
    std::string model;
    std::string input;
    std::size_t n = 1000;
};

int run_detect(const DetectArgs& a) {
    if (a.n == 0)
        return usage_error("--n must be >= 1");

    std::map<std::string, std::string> resolved;
    resolved["command"] = "detect";
    resolved["model"] = a.model;
    resolved["input"] = a.input;
    resolved["n"] = std::to_string(a.n);

    return guarded([&]() {
        const sg::DetectorState det = sg::load_detector(a.model);
        const std::vector<sg::IqChunk> chunks = sg::load_capture(a.input, a.n);
        for (const auto& [k, v] : resolved)
            std::cout << "# " << k << '=' << v << '\n';
        std::size_t spoofed = 0;
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const sg::Verdict v = sg::classify_chunk(det, chunks[i]);
            if (v.decision == sg::Label::spoofed)
                ++spoofed;
            std::cout << i << ' ' << fmt(v.mse) << ' ' << fmt(v.tau) << ' '
                      << sg::to_string(v.decision) << '\n';
        }
        std::cout << "# summary chunks=" << chunks.size() << " legitimate="
                  << (chunks.size() - spoofed) << " spoofed=" << spoofed << '\n';
        return spoofed > 0 ? kExitSpoofed : kExitOk;
    });
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
    std::string data;
    std::string report = "eval_report";
    int k = 5;
    std::size_t n = 1000;
    GridArgs grid;
    HyperArgs hyper;
    std::uint64_t seed = 0;
    int reps = 1000;
};

int run_eval(EvalArgs a) {
    if (a.k < 2)
        return usage_error("--k must be >= 2");
    if (a.n == 0)
        return usage_error("--n must be >= 1");
    if (a.reps < 1)
        return usage_error("--reps must be >= 1");
    if (const int rc = check_grid(a.grid); rc != kExitOk)
        return rc;
    if (const int rc = check_hypers(a.hyper); rc != kExitOk)
        return rc;
    std::string err;
    if (!apply_seed_env(a.seed, err))
        return usage_error(err);

    std::map<std::string, std::string> resolved;
    resolved["command"] = "eval";
    resolved["data"] = a.data;
    resolved["report"] = a.report;
    resolved["k"] = std::to_string(a.k);
    resolved["n"] = std::to_string(a.n);
    resolved["seed"] = std::to_string(a.seed);
    resolved["reps"] = std::to_string(a.reps);
    put_grid(resolved, a.grid);
    put_hypers(resolved, a.hyper);

    return guarded([&]() {
        const fs::path dir(a.data);
        for (const char* cls : {"legit", "spoof"})
            if (!fs::is_directory(dir / cls))
                return data_error("missing class directory: " + (dir / cls).string());
        const sg::Dataset ds = sg::load_dataset(dir, a.n);
        if (ds.legit.empty() || ds.spoof.empty())
            return data_error("dataset has an empty class under " + dir.string());

        const sg::GridSpec grid = to_grid(a.grid);
        const Eigen::MatrixXd legit_batch = sg::images_to_batch(chunks_to_images(ds.legit, grid));
        const Eigen::MatrixXd spoof_batch = sg::images_to_batch(chunks_to_images(ds.spoof, grid));

        sg::KfoldConfig cfg;
        cfg.k = a.k;
        cfg.train = to_train_config(a.hyper, a.seed);
        cfg.seed = a.seed;
        std::cerr << "running " << a.k << "-fold evaluation on " << ds.legit.size()
                  << " legitimate / " << ds.spoof.size() << " spoofed images\n";
        sg::EvalReport report = sg::kfold_eval(legit_batch, spoof_batch, cfg);

        report.snr_overlap = sg::snr_overlap(ds.legit, ds.spoof);

        sg::TrainConfig final_cfg = cfg.train;
        final_cfg.seed = sg::derive_seed(a.seed, static_cast<std::uint64_t>(a.k) + 1);
        const sg::AeModel final_model = sg::train(legit_batch, final_cfg);
        const sg::DetectorState det = sg::fit_detector(final_model, grid, legit_batch);
        report.overhead = sg::measure_overhead(det, ds.legit.front(), a.reps);
        report.config = resolved;

        write_text_file(a.report + ".json", sg::report_to_json(report).dump(2) + "\n");
        write_text_file(a.report + ".csv", sg::report_to_csv(report));
        const std::string text = sg::report_to_text(report);
        write_text_file(a.report + ".txt", text);
        std::cout << text;
        std::cout << "wrote " << a.report << ".json, .csv, .txt\n";
        return kExitOk;
    });
}

// ----------------------------------------------------------- export-images

struct ExportArgs {
    std::string input;
    std::string out;
    std::size_t n = 1000;
    GridArgs grid;
};

int run_export_images(const ExportArgs& a) {
    if (a.n == 0)
        return usage_error("--n must be >= 1");
    if (const int rc = check_grid(a.grid); rc != kExitOk)
        return rc;

    std::map<std::string, std::string> resolved;
    resolved["command"] = "export-images";
    resolved["input"] = a.input;
    resolved["out"] = a.out;
    resolved["n"] = std::to_string(a.n);
    put_grid(resolved, a.grid);

    return guarded([&]() {
        const std::vector<sg::IqChunk> chunks = sg::load_capture(a.input, a.n);
        const sg::GridSpec grid = to_grid(a.grid);
        fs::create_directories(a.out);
        for (std::size_t i = 0; i < chunks.size(); ++i)
            sg::export_pgm(sg::make_histogram(chunks[i], grid),
                           fs::path(a.out) / (sg::detail::chunk_name(i) + ".pgm"));
        write_text_file(fs::path(a.out) / "export_config.txt", config_lines(resolved));
        std::cout << "wrote " << chunks.size() << " images to " << a.out << '\n';
        return kExitOk;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spoofguard: detects spoofed downlinks from IQ constellation images"};
    app.require_subcommand(1);
    if (argc > 0)
        app.name(argv[0]);
    std::string config_file;  // consumed by inject_config_args before the parse

    SimulateArgs sim;
    CLI::App* sim_cmd = app.add_subcommand(
        "simulate", "generate a labeled synthetic DQPSK dataset (legit/ + spoof/)");
    sim_cmd->add_option("--config", config_file, "flat key=value config file; flags take precedence");
    sim_cmd->add_option("-o,--out", sim.out, "output directory")->required();
    sim_cmd->add_option("--chunks", sim.chunks, "chunks per class");
    sim_cmd->add_option("--n", sim.n, "samples per chunk");
    sim_cmd->add_option("--seed", sim.seed, "master seed");
    sim_cmd->add_option("--legit-sigma", sim.legit_sigma, "legitimate per-axis noise std");
    sim_cmd->add_option("--spoof-sigma", sim.spoof_sigma, "spoofer per-axis noise std");
    sim_cmd->add_option("--legit-amplitude", sim.legit_amplitude, "legitimate constellation radius");
    sim_cmd->add_option("--spoof-amplitude", sim.spoof_amplitude, "spoofer constellation radius");
    sim_cmd->add_option("--legit-jitter", sim.legit_jitter, "legitimate phase jitter std (rad)");
    sim_cmd->add_option("--spoof-jitter", sim.spoof_jitter, "spoofer phase jitter std (rad)");
    sim_cmd->add_option("--legit-k", sim.legit_k, "legitimate Rician K-factor (inf = none)");
    sim_cmd->add_option("--spoof-k", sim.spoof_k, "spoofer Rician K-factor (inf = none)");
    sim_cmd->add_option("--sample-rate", sim.sample_rate, "sample rate recorded in sidecars");

    TrainArgs tr;
    CLI::App* train_cmd =
        app.add_subcommand("train", "train the detector on legitimate captures");
    train_cmd->add_option("--config", config_file, "flat key=value config file; flags take precedence");
    train_cmd->add_option("--data", tr.data, "capture directory (uses data/legit when present)")
        ->required();
    train_cmd->add_option("--model", tr.model, "output model path");
    train_cmd->add_option("--n", tr.n, "samples per chunk");
    train_cmd->add_option("--seed", tr.seed, "training seed");
    add_grid_flags(train_cmd, tr.grid);
    add_hyper_flags(train_cmd, tr.hyper);

    DetectArgs det;
    CLI::App* detect_cmd = app.add_subcommand("detect", "classify chunks of a capture");
    detect_cmd->add_option("--config", config_file, "flat key=value config file; flags take precedence");
    detect_cmd->add_option("--model", det.model, "detector model path")->required();
    detect_cmd->add_option("--input", det.input, "capture file (.iq)")->required();
    detect_cmd->add_option("--n", det.n, "samples per chunk");

    EvalArgs ev;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "k-fold ROC AUC evaluation on a labeled dataset");
    eval_cmd->add_option("--config", config_file, "flat key=value config file; flags take precedence");
    eval_cmd->add_option("--data", ev.data, "dataset directory with legit/ and spoof/")
        ->required();
    eval_cmd->add_option("--report", ev.report, "report path prefix");
    eval_cmd->add_option("--k", ev.k, "number of folds");
    eval_cmd->add_option("--n", ev.n, "samples per chunk");
    eval_cmd->add_option("--seed", ev.seed, "master seed");
    eval_cmd->add_option("--reps", ev.reps, "timing repetitions");
    add_grid_flags(eval_cmd, ev.grid);
    add_hyper_flags(eval_cmd, ev.hyper);

    ExportArgs ex;
    CLI::App* export_cmd =
        app.add_subcommand("export-images", "write per-chunk histogram images as PGM");
    export_cmd->add_option("--config", config_file, "flat key=value config file; flags take precedence");
    export_cmd->add_option("--input", ex.input, "capture file (.iq)")->required();
    export_cmd->add_option("-o,--out", ex.out, "output directory")->required();
    export_cmd->add_option("--n", ex.n, "samples per chunk");
    add_grid_flags(export_cmd, ex.grid);

    std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
    std::string cfg_err;
    if (!inject_config_args(app, args, cfg_err))
        return usage_error(cfg_err);
    std::reverse(args.begin(), args.end());  // the vector overload wants them reversed
    try {
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (sim_cmd->parsed())
        return run_simulate(sim);
    if (train_cmd->parsed())
        return run_train(tr);
    if (detect_cmd->parsed())
        return run_detect(det);
    if (eval_cmd->parsed())
        return run_eval(ev);
    if (export_cmd->parsed())
        return run_export_images(ex);
    return usage_error("no subcommand given");
}
