#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msnlac/divergence.hpp"
#include "msnlac/error.hpp"
#include "msnlac/eval.hpp"
#include "msnlac/grid.hpp"
#include "msnlac/levelset.hpp"
#include "msnlac/multiscale.hpp"
#include "msnlac/speckle.hpp"
#include "msnlac/stats.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace msnlac;

namespace {

enum class Type { Int, UInt, Real, Bool, Text };

struct KeySpec {
    const char* key; // config / run.json name; the flag is the same with dashes
    Type type;
    const char* help;
};

const std::vector<KeySpec> kKeys = {
    {"model", Type::Text, "patch model: lognormal|rayleigh|gamma|weibull|ga0"},
    {"bins", Type::Int, "PMF bin count"},
    {"looks", Type::Int, "number of looks (ga0)"},
    {"distance", Type::Text, "patch distance: kl|hellinger|tv|js|em"},
    {"js_mode", Type::Text, "Jensen-Shannon variant: standard|verbatim"},
    {"patch_half", Type::Int, "patch half size tau"},
    {"nl_radius", Type::Int, "non-local window half size"},
    {"nl_sigma", Type::Real, "window Gaussian sigma (<= 0: radius / 2)"},
    {"scales", Type::Int, "pyramid levels (1 = single scale)"},
    {"sigma0", Type::Real, "pyramid anti-alias sigma"},
    {"seed", Type::UInt, "initialisation seed"},
    {"restarts", Type::Int, "random starts on the coarsest level"},
    {"threads", Type::Int, "worker threads"},
    {"lambda", Type::Real, "length weight"},
    {"xi", Type::Real, "step size (initial step with auto_xi)"},
    {"auto_xi", Type::Bool, "halve xi until the first steps descend"},
    {"max_xi_halvings", Type::Int, "limit on step halvings"},
    {"omega", Type::Real, "stop when the energy change is below omega"},
    {"max_iters", Type::Int, "iteration cap per level"},
    {"epsilon", Type::Real, "Heaviside width"},
    {"phi_clamp", Type::Real, "phi is clamped to +-phi_clamp"},
    {"ties", Type::Text, "gradient at ties: steepest|zero"},
    {"snapshot_every", Type::Int, "dump phi every k iterations (0 = off)"},
};

json default_config()
{
    const multiscale::MsConfig ms;
    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    return {
        {"model", "gamma"},
        {"bins", ms.bins},
        {"looks", ms.looks},
        {"distance", "kl"},
        {"js_mode", "standard"},
        {"patch_half", ms.tau},
        {"nl_radius", ms.nl_radius},
        {"nl_sigma", ms.nl_sigma},
        {"scales", ms.levels},
        {"sigma0", ms.sigma0},
        {"seed", ms.seed},
        {"restarts", ms.restarts},
        {"threads", cores},
        {"lambda", ms.nlac.lambda},
        {"xi", ms.nlac.xi},
        {"auto_xi", ms.nlac.auto_xi},
        {"max_xi_halvings", ms.nlac.max_xi_halvings},
        {"omega", ms.nlac.omega},
        {"max_iters", ms.nlac.max_iters},
        {"epsilon", ms.nlac.epsilon},
        {"phi_clamp", ms.nlac.phi_clamp},
        {"ties", "steepest"},
        {"snapshot_every", 0},
    };
}

std::string dashed(std::string s)
{
    for (char& c : s)
        if (c == '_')
            c = '-';
    return s;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

const KeySpec& find_key(const std::string& key)
{
    for (const KeySpec& k : kKeys)
        if (key == k.key || key == dashed(k.key))
            return k;
    throw InputError("unknown configuration key '" + key + "'");
}

json parse_value(const KeySpec& spec, const std::string& text)
{
    const std::string v = trim(text);
    const auto bad = [&]() -> InputError {
        return InputError("invalid value '" + v + "' for " + spec.key);
    };
    try {
        std::size_t used = 0;
        switch (spec.type) {
        case Type::Int: {
            const long long x = std::stoll(v, &used);
            if (used != v.size())
                throw bad();
            return x;
        }
        case Type::UInt: {
            if (!v.empty() && v[0] == '-')
                throw bad();
            const unsigned long long x = std::stoull(v, &used);
            if (used != v.size())
                throw bad();
            return x;
        }
        case Type::Real: {
            const double x = std::stod(v, &used);
            if (used != v.size())
                throw bad();
            return x;
        }
        case Type::Bool:
            if (v == "1" || v == "true" || v == "on" || v == "yes")
                return true;
            if (v == "0" || v == "false" || v == "off" || v == "no")
                return false;
            throw bad();
        case Type::Text:
            if (v.empty())
                throw bad();
            return v;
        }
    } catch (const std::logic_error&) {
        throw bad();
    }
    throw bad();
}

// Flat `key = value` lines; `#` starts a comment.
void merge_config_file(json& cfg, const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot read config file " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (trim(line).empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        const KeySpec& spec = find_key(trim(line.substr(0, eq)));
        cfg[spec.key] = parse_value(spec, line.substr(eq + 1));
    }
}

void merge_json_config(json& cfg, const json& src)
{
    for (const auto& [key, value] : src.items()) {
        const KeySpec& spec = find_key(key);
        cfg[spec.key] = parse_value(spec, value.is_string() ? value.get<std::string>() : value.dump());
    }
}

struct Resolved {
    multiscale::MsConfig ms;
    int snapshot_every = 0;
};

Resolved resolve(const json& cfg)
{
    Resolved r;
    multiscale::MsConfig& ms = r.ms;
    ms.model = stats::parse_model(cfg["model"].get<std::string>());
    ms.bins = cfg["bins"].get<int>();
    ms.looks = cfg["looks"].get<int>();
    ms.tau = cfg["patch_half"].get<int>();
    ms.nl_radius = cfg["nl_radius"].get<int>();
    ms.nl_sigma = cfg["nl_sigma"].get<double>();
    ms.levels = cfg["scales"].get<int>();
    ms.sigma0 = cfg["sigma0"].get<double>();
    ms.seed = cfg["seed"].get<std::uint64_t>();
    ms.restarts = cfg["restarts"].get<int>();
    levelset::NlacParams& p = ms.nlac;
    p.distance = divergence::parse_kind(cfg["distance"].get<std::string>());
    p.js_mode = divergence::parse_js_mode(cfg["js_mode"].get<std::string>());
    p.threads = cfg["threads"].get<int>();
    p.lambda = cfg["lambda"].get<double>();
    p.xi = cfg["xi"].get<double>();
    p.auto_xi = cfg["auto_xi"].get<bool>();
    p.max_xi_halvings = cfg["max_xi_halvings"].get<int>();
    p.omega = cfg["omega"].get<double>();
    p.max_iters = cfg["max_iters"].get<int>();
    p.epsilon = cfg["epsilon"].get<double>();
    p.phi_clamp = cfg["phi_clamp"].get<double>();
    const std::string ties = cfg["ties"].get<std::string>();
    if (ties == "steepest")
        p.ties = levelset::TieRule::Steepest;
    else if (ties == "zero")
        p.ties = levelset::TieRule::Zero;
    else
        throw InputError("unknown tie rule '" + ties + "' (expected steepest or zero)");
    r.snapshot_every = cfg["snapshot_every"].get<int>();
    require(r.snapshot_every >= 0, "snapshot_every must be non-negative");
    return r;
}

std::string fnv1a_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot read " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016" PRIx64, h);
    return hex;
}

// Raw float inputs carry their geometry in a sidecar, which is hashed too.
std::string input_hash(const fs::path& path)
{
    std::string h = fnv1a_file(path);
    const fs::path sidecar = path.string() + ".json";
    if (path.extension() != ".pgm" && fs::exists(sidecar))
        h += ":" + fnv1a_file(sidecar);
    return h;
}

void require_file(const fs::path& path, const char* what)
{
    if (!fs::is_regular_file(path))
        throw InputError(std::string(what) + " not found: " + path.string());
}

void write_json(const json& j, const fs::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw InputError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out)
        throw InputError("write failed: " + path.string());
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
    int size = 512;
    double alpha = 4.0;
    std::uint64_t seed = 1;
    double fg = 3.0;
    double bg = 1.0;
    double span = 0.0;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a)
{
    require(a.size >= 64, "size must be at least 64");
    require(a.alpha > 0.0, "alpha must be positive");
    require(a.fg > 0.0 && a.bg > 0.0, "reflectivity levels must be positive");
    require(a.span >= 0.0, "gradient span must be non-negative");
    require(!a.out.empty(), "--out is required");

    const speckle::Phantom ph = speckle::make_shapes(a.size, a.size, a.fg, a.bg, a.span);
    const grid::Image noisy = speckle::simulate(ph.clean, a.alpha, a.seed);

    const fs::path dir = a.out;
    fs::create_directories(dir);
    grid::save_raw(ph.clean.pixels(), dir / "clean.raw");
    grid::save_raw(noisy.pixels(), dir / "speckled.raw");
    grid::save_mask(ph.gt_mask, dir / "gt.pgm");
    std::cout << "wrote " << (dir / "clean.raw").string() << ", " << (dir / "speckled.raw").string() << ", "
              << (dir / "gt.pgm").string() << '\n';
    return 0;
}

// ---- segment ---------------------------------------------------------------

struct SegmentArgs {
    std::string input;
    std::string gt;
    std::string out;
    std::string config;
    std::string from_run;
    std::map<std::string, std::string> flags; // key -> raw flag text
};

int cmd_segment(SegmentArgs a, const CLI::App& sub)
{
    json cfg = default_config();
    json base;
    if (!a.from_run.empty()) {
        require_file(a.from_run, "run file");
        std::ifstream in(a.from_run);
        try {
            base = json::parse(in);
        } catch (const json::exception& e) {
            throw InputError("cannot parse " + a.from_run + ": " + e.what());
        }
        require(base.contains("config") && base["config"].is_object(), a.from_run + " has no config object");
        merge_json_config(cfg, base["config"]);
        if (a.input.empty() && base.contains("input"))
            a.input = base["input"].get<std::string>();
        if (a.gt.empty() && base.contains("gt") && base["gt"].is_string())
            a.gt = base["gt"].get<std::string>();
    }
    if (!a.config.empty()) {
        require_file(a.config, "config file");
        merge_config_file(cfg, a.config);
    }
    for (const KeySpec& k : kKeys)
        if (sub.count("--" + dashed(k.key)) > 0)
            cfg[k.key] = parse_value(k, a.flags[k.key]);

    require(!a.input.empty(), "--input is required");
    require(!a.out.empty(), "--out is required");
    require_file(a.input, "input image");
    if (!a.gt.empty())
        require_file(a.gt, "ground truth");

    const std::string in_hash = input_hash(a.input);
    const std::string gt_hash = a.gt.empty() ? std::string() : input_hash(a.gt);
    if (!base.is_null()) {
        if (base.value("input_hash", in_hash) != in_hash)
            throw InputError("input " + a.input + " differs from the one recorded in " + a.from_run);
        if (!a.gt.empty() && base.value("gt_hash", gt_hash) != gt_hash)
            throw InputError("ground truth " + a.gt + " differs from the one recorded in " + a.from_run);
    }

    const Resolved r = resolve(cfg);
    const grid::Image img = grid::load_image(a.input);
    std::optional<grid::BinaryMask> gt;
    if (!a.gt.empty()) {
        gt = grid::load_mask(a.gt);
        if (!gt->same_shape(img.pixels()))
            throw DimensionMismatch("ground truth is " + std::to_string(gt->width()) + "x" +
                                    std::to_string(gt->height()) + " but image is " + std::to_string(img.width()) +
                                    "x" + std::to_string(img.height()));
    }
    multiscale::validate(r.ms, img.width(), img.height());

    const fs::path dir = a.out;
    fs::create_directories(dir);
    multiscale::IterationCallback snapshot;
    if (r.snapshot_every > 0) {
        fs::create_directories(dir / "snapshots");
        snapshot = [&](int level, int restart, int iter, const levelset::LevelSet& ls) {
            if (iter % r.snapshot_every != 0)
                return;
            char name[64];
            std::snprintf(name, sizeof name, "phi_L%d_r%d_i%05d.raw", level, restart, iter);
            grid::save_raw(ls.phi, dir / "snapshots" / name);
        };
    }

    const multiscale::MsResult res = multiscale::msnlac_run(img, r.ms, gt ? &*gt : nullptr, nullptr, snapshot);

    grid::save_mask(res.mask, dir / "mask.pgm");
    eval::save_ppm(eval::overlay(img, res.mask), dir / "overlay.ppm");
    eval::export_trace(res.traces, dir / "trace.csv");

    json run;
    run["command"] = "segment";
    run["input"] = fs::absolute(a.input).string();
    run["input_hash"] = in_hash;
    run["gt"] = a.gt.empty() ? json(nullptr) : json(fs::absolute(a.gt).string());
    run["gt_hash"] = a.gt.empty() ? json(nullptr) : json(gt_hash);
    run["config"] = cfg;
    json levels = json::array();
    for (std::size_t l = 0; l < res.levels.size(); ++l) {
        const levelset::RunResult& lv = res.levels[l];
        levels.push_back({{"level", l},
                          {"width", lv.phi.phi.width()},
                          {"height", lv.phi.phi.height()},
                          {"updates", lv.updates},
                          {"xi", lv.xi},
                          {"converged", lv.converged},
                          {"energy", lv.trace.records.back().energy}});
    }
    json result = {{"levels", levels},
                   {"chosen_restart", res.chosen_restart},
                   {"pixel_iterations", res.pixel_iterations},
                   {"mask_hash", fnv1a_file(dir / "mask.pgm")}};
    double final_rfe = 0.0;
    if (gt) {
        final_rfe = eval::rfe(res.mask, *gt);
        result["rfe"] = final_rfe;
    }
    run["result"] = result;
    write_json(run, dir / "run.json");

    std::cout << "wrote " << dir.string() << " (mask.pgm, overlay.ppm, trace_L*.csv, run.json)\n";
    if (gt)
        std::printf("RFE %.4f\n", final_rfe);
    return 0;
}

// ---- evaluate / overlay ----------------------------------------------------

int cmd_evaluate(const std::string& mask_path, const std::string& gt_path)
{
    require_file(mask_path, "mask");
    require_file(gt_path, "ground truth");
    const grid::BinaryMask mask = grid::load_mask(mask_path);
    const grid::BinaryMask gt = grid::load_mask(gt_path);
    std::printf("%.4f\n", eval::rfe(mask, gt));
    return 0;
}

eval::Rgb parse_color(const std::string& s)
{
    eval::Rgb c{};
    int r = 0, g = 0, b = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%d,%d,%d%c", &r, &g, &b, &tail) != 3 || r < 0 || r > 255 || g < 0 || g > 255 ||
        b < 0 || b > 255)
        throw InputError("color must be R,G,B with components in [0, 255], got '" + s + "'");
    c[0] = static_cast<std::uint8_t>(r);
    c[1] = static_cast<std::uint8_t>(g);
    c[2] = static_cast<std::uint8_t>(b);
    return c;
}

int cmd_overlay(const std::string& image, const std::string& mask_path, const std::string& out,
                const std::string& color)
{
    require_file(image, "image");
    require_file(mask_path, "mask");
    const eval::Rgb c = parse_color(color);
    const grid::Image img = grid::load_image(image);
    const grid::BinaryMask mask = grid::load_mask(mask_path);
    eval::save_ppm(eval::overlay(img, mask, c), out);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multiscale non-local active contours for speckled images"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "write a speckled three-shape phantom");
    simulate->add_option("--size", sim.size, "image side in pixels")->capture_default_str();
    simulate->add_option("--alpha", sim.alpha, "gamma speckle shape (looks)")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "speckle seed")->capture_default_str();
    simulate->add_option("--fg", sim.fg, "object reflectivity")->capture_default_str();
    simulate->add_option("--bg", sim.bg, "background reflectivity")->capture_default_str();
    simulate->add_option("--span", sim.span, "reflectivity ramp along the horseshoe")->capture_default_str();
    simulate->add_option("--out", sim.out, "output directory")->required();

    SegmentArgs seg;
    CLI::App* segment = app.add_subcommand("segment", "segment an image (single or multiple scales)");
    segment->add_option("--input", seg.input, "input image (.pgm, or raw float32 with .json sidecar)");
    segment->add_option("--gt", seg.gt, "ground-truth mask for RFE tracing");
    segment->add_option("--out", seg.out, "output directory");
    segment->add_option("--config", seg.config, "key = value file; flags take precedence");
    segment->add_option("--from-run", seg.from_run, "reuse config and inputs recorded in a run.json");
    const json defaults = default_config();
    for (const KeySpec& k : kKeys) {
        const std::string def = defaults[k.key].is_string() ? defaults[k.key].get<std::string>()
                                                             : defaults[k.key].dump();
        static const char* const names[] = {"INT", "UINT", "REAL", "BOOL", "TEXT"};
        segment->add_option("--" + dashed(k.key), seg.flags[k.key], std::string(k.help) + " [" + def + "]")
            ->type_name(names[static_cast<int>(k.type)]);
    }

    std::string ev_mask, ev_gt;
    CLI::App* evaluate = app.add_subcommand("evaluate", "print the region fitting error of a mask");
    evaluate->add_option("--mask", ev_mask, "segmentation mask")->required();
    evaluate->add_option("--gt", ev_gt, "ground-truth mask")->required();

    std::string ov_image, ov_mask, ov_out, ov_color = "255,0,0";
    CLI::App* overlay = app.add_subcommand("overlay", "draw a mask boundary over an image");
    overlay->add_option("--image", ov_image, "image")->required();
    overlay->add_option("--mask", ov_mask, "mask")->required();
    overlay->add_option("--out", ov_out, "output .ppm")->required();
    overlay->add_option("--color", ov_color, "boundary color R,G,B")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*simulate)
            return cmd_simulate(sim);
        if (*segment)
            return cmd_segment(seg, *segment);
        if (*evaluate)
            return cmd_evaluate(ev_mask, ev_gt);
        if (*overlay)
            return cmd_overlay(ov_image, ov_mask, ov_out, ov_color);
    } catch (const DimensionMismatch& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 4;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
