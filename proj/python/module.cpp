#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "msnlac/divergence.hpp"
#include "msnlac/error.hpp"
#include "msnlac/eval.hpp"
#include "msnlac/grid.hpp"
#include "msnlac/levelset.hpp"
#include "msnlac/multiscale.hpp"
#include "msnlac/similarity.hpp"
#include "msnlac/speckle.hpp"
#include "msnlac/stats.hpp"

namespace py = pybind11;
using namespace msnlac;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

template <class T>
void check_2d(const py::array_t<T, py::array::c_style | py::array::forcecast>& a, const char* name)
{
    if (a.ndim() != 2)
        throw InputError(std::string(name) + " must be a 2-D array");
}

grid::Field to_field(const DoubleArray& a, const char* name)
{
    check_2d(a, name);
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    return grid::Field(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

grid::Image to_image(const DoubleArray& a) { return grid::Image(to_field(a, "image")); }

grid::BinaryMask to_mask(const MaskArray& a, const char* name)
{
    check_2d(a, name);
    grid::BinaryMask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    for (py::ssize_t i = 0; i < a.size(); ++i)
        m[static_cast<std::size_t>(i)] = a.data()[i] != 0;
    return m;
}

template <class T>
py::array_t<T> to_array(const grid::Raster<T>& r)
{
    py::array_t<T> out({static_cast<py::ssize_t>(r.height()), static_cast<py::ssize_t>(r.width())});
    std::copy(r.data().begin(), r.data().end(), out.mutable_data());
    return out;
}

py::array_t<double> to_array(const grid::Image& img) { return to_array(img.pixels()); }

py::dict trace_dict(const eval::RunTrace& t)
{
    const auto n = static_cast<py::ssize_t>(t.records.size());
    const std::vector<py::ssize_t> shape{n};
    py::array_t<int> iter(shape);
    py::array_t<double> energy(shape), data(shape), reg(shape), rfe(shape), ms(shape);
    int* pi = iter.mutable_data();
    double *pe = energy.mutable_data(), *pd = data.mutable_data(), *pr = reg.mutable_data();
    double *pf = rfe.mutable_data(), *pm = ms.mutable_data();
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        const auto& r = t.records[i];
        pi[i] = r.iter;
        pe[i] = r.energy;
        pd[i] = r.data;
        pr[i] = r.reg;
        pf[i] = r.rfe ? *r.rfe : std::numeric_limits<double>::quiet_NaN();
        pm[i] = r.ms;
    }
    py::dict d;
    d["iter"] = iter;
    d["energy"] = energy;
    d["data"] = data;
    d["reg"] = reg;
    d["rfe"] = rfe;
    d["ms"] = ms;
    return d;
}

levelset::TieRule parse_ties(const std::string& s)
{
    if (s == "steepest")
        return levelset::TieRule::Steepest;
    if (s == "zero")
        return levelset::TieRule::Zero;
    throw InputError("unknown tie rule '" + s + "'");
}

// Keys mirror the command-line config file.
multiscale::MsConfig config_from(const py::dict& opts)
{
    multiscale::MsConfig cfg;
    for (const auto& [k, v] : opts) {
        const auto key = py::cast<std::string>(k);
        auto& n = cfg.nlac;
        if (key == "model")
            cfg.model = stats::parse_model(py::cast<std::string>(v));
        else if (key == "bins")
            cfg.bins = py::cast<int>(v);
        else if (key == "looks")
            cfg.looks = py::cast<int>(v);
        else if (key == "distance")
            n.distance = divergence::parse_kind(py::cast<std::string>(v));
        else if (key == "js_mode")
            n.js_mode = divergence::parse_js_mode(py::cast<std::string>(v));
        else if (key == "patch_half")
            cfg.tau = py::cast<int>(v);
        else if (key == "nl_radius")
            cfg.nl_radius = py::cast<int>(v);
        else if (key == "nl_sigma")
            cfg.nl_sigma = py::cast<double>(v);
        else if (key == "scales")
            cfg.levels = py::cast<int>(v);
        else if (key == "sigma0")
            cfg.sigma0 = py::cast<double>(v);
        else if (key == "seed")
            cfg.seed = py::cast<std::uint64_t>(v);
        else if (key == "restarts")
            cfg.restarts = py::cast<int>(v);
        else if (key == "threads")
            n.threads = py::cast<int>(v);
        else if (key == "lambda")
            n.lambda = py::cast<double>(v);
        else if (key == "xi")
            n.xi = py::cast<double>(v);
        else if (key == "auto_xi")
            n.auto_xi = py::cast<bool>(v);
        else if (key == "max_xi_halvings")
            n.max_xi_halvings = py::cast<int>(v);
        else if (key == "omega")
            n.omega = py::cast<double>(v);
        else if (key == "max_iters")
            n.max_iters = py::cast<int>(v);
        else if (key == "epsilon")
            n.epsilon = py::cast<double>(v);
        else if (key == "phi_clamp")
            n.phi_clamp = py::cast<double>(v);
        else if (key == "ties")
            n.ties = parse_ties(py::cast<std::string>(v));
        else
            throw InputError("unknown option '" + key + "'");
    }
    return cfg;
}

py::dict params_dict(const stats::DistParams& p)
{
    py::dict d;
    d["model"] = std::string(stats::model_name(p.model()));
    d["degenerate"] = p.degenerate;
    std::visit(
        [&](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, stats::LogNormalParams>) {
                d["mu"] = q.mu;
                d["sigma"] = q.sigma;
            } else if constexpr (std::is_same_v<T, stats::RayleighParams>) {
                d["sigma"] = q.sigma;
            } else if constexpr (std::is_same_v<T, stats::GammaParams>) {
                d["alpha"] = q.alpha;
                d["beta"] = q.beta;
            } else if constexpr (std::is_same_v<T, stats::WeibullParams>) {
                d["beta"] = q.beta;
                d["eta"] = q.eta;
            } else {
                d["alpha"] = q.alpha;
                d["gamma"] = q.gamma;
                d["looks"] = q.looks;
            }
        },
        p.params);
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Multiscale non-local active contours for speckled images.";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto input = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<DimensionMismatch>(m, "DimensionMismatch", input.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    m.def("load_image", [](const std::string& path) { return to_array(grid::load_image(path)); }, py::arg("path"),
          "Read a PGM or raw float32 image (with .json sidecar) as a (height, width) float array.");
    m.def("load_mask", [](const std::string& path) { return to_array(grid::load_mask(path)); }, py::arg("path"));
    m.def("save_mask", [](const MaskArray& mask, const std::string& path) { grid::save_mask(to_mask(mask, "mask"), path); },
          py::arg("mask"), py::arg("path"));

    m.def(
        "make_shapes",
        [](int width, int height, double fg, double bg, double span) {
            const speckle::Phantom ph = speckle::make_shapes(width, height, fg, bg, span);
            return py::make_tuple(to_array(ph.clean), to_array(ph.gt_mask));
        },
        py::arg("width"), py::arg("height"), py::arg("fg") = 3.0, py::arg("bg") = 1.0, py::arg("span") = 0.0,
        "Three-shape phantom. Returns (clean reflectivity, ground-truth mask).");
    m.def(
        "simulate",
        [](const DoubleArray& clean, double alpha, std::uint64_t seed) {
            return to_array(speckle::simulate(to_image(clean), alpha, seed));
        },
        py::arg("clean"), py::arg("alpha") = 4.0, py::arg("seed") = 1, "Multiplicative gamma speckle.");

    m.def(
        "estimate",
        [](const std::string& model, const DoubleArray& samples, int looks) {
            const std::span<const double> s(samples.data(), static_cast<std::size_t>(samples.size()));
            return params_dict(stats::estimate(stats::parse_model(model), stats::moments(s), looks));
        },
        py::arg("model"), py::arg("samples"), py::arg("looks") = 1, "Moment-based fit of one model.");

    m.def(
        "divergence",
        [](const std::string& kind, const DoubleArray& p, const DoubleArray& q, const std::string& js_mode) {
            if (p.ndim() != 1 || q.ndim() != 1 || p.size() != q.size() || p.size() == 0)
                throw InputError("divergence: p and q must be 1-D arrays of equal, non-zero length");
            const auto edges = stats::uniform_edges(0.0, 1.0, static_cast<int>(p.size()));
            const std::span<const double> ps(p.data(), static_cast<std::size_t>(p.size()));
            const std::span<const double> qs(q.data(), static_cast<std::size_t>(q.size()));
            return divergence::divergence(divergence::parse_kind(kind), {edges, ps}, {edges, qs},
                                          divergence::parse_js_mode(js_mode));
        },
        py::arg("kind"), py::arg("p"), py::arg("q"), py::arg("js_mode") = "standard",
        "Distance between two probability mass vectors: kl, hellinger, tv, js or em.");

    m.def(
        "patch_moments",
        [](const DoubleArray& image, int tau) {
            const grid::Image img = to_image(image);
            const auto mom = similarity::patch_moments(img, tau);
            grid::Field mean(img.width(), img.height()), var(img.width(), img.height()),
                half(img.width(), img.height());
            for (std::size_t i = 0; i < mom.size(); ++i) {
                mean[i] = mom[i].mean;
                var[i] = mom[i].var;
                half[i] = mom[i].m_half;
            }
            return py::make_tuple(to_array(mean), to_array(var), to_array(half));
        },
        py::arg("image"), py::arg("tau"), "Per-pixel patch mean, variance and mean square root (mirrored borders).");

    m.def("rfe", [](const MaskArray& mask, const MaskArray& gt) { return eval::rfe(to_mask(mask, "mask"), to_mask(gt, "gt")); },
          py::arg("mask"), py::arg("gt"), "Region fitting error of a mask against ground truth.");

    m.def(
        "random_init",
        [](int width, int height, std::uint64_t seed) { return to_array(levelset::random_init(width, height, seed).phi); },
        py::arg("width"), py::arg("height"), py::arg("seed"));

    m.def(
        "segment",
        [](const DoubleArray& image, const std::optional<MaskArray>& gt, const py::kwargs& opts) {
            const grid::Image img = to_image(image);
            const multiscale::MsConfig cfg = config_from(opts);
            std::optional<grid::BinaryMask> truth;
            if (gt)
                truth = to_mask(*gt, "gt");
            multiscale::MsResult r;
            {
                py::gil_scoped_release release;
                r = multiscale::msnlac_run(img, cfg, truth ? &*truth : nullptr);
            }
            py::dict out;
            out["mask"] = to_array(r.mask);
            out["phi"] = to_array(r.phi.phi);
            py::list traces;
            for (const auto& t : r.traces)
                traces.append(trace_dict(t));
            out["traces"] = traces;
            out["pixel_iterations"] = r.pixel_iterations;
            out["chosen_restart"] = r.chosen_restart;
            out["rfe"] = truth ? py::cast(eval::rfe(r.mask, *truth)) : py::none();
            return out;
        },
        py::arg("image"), py::arg("gt") = py::none(),
        "Coarse-to-fine segmentation. Options use the config-file keys (scales, patch_half, nl_radius, lambda, ...).");

    m.def(
        "classic_segment",
        [](const DoubleArray& image, const DoubleArray& phi0, double lam, int max_iters,
           const std::optional<MaskArray>& gt) {
            const grid::Image img = to_image(image);
            levelset::ClassicParams p;
            p.lambda = lam;
            p.max_iters = max_iters;
            std::optional<grid::BinaryMask> truth;
            if (gt)
                truth = to_mask(*gt, "gt");
            levelset::RunResult r;
            {
                const levelset::LevelSet start{to_field(phi0, "phi0"), p.epsilon};
                py::gil_scoped_release release;
                r = levelset::classic_ac_run(img, start, p, truth ? &*truth : nullptr);
            }
            py::dict out;
            out["mask"] = to_array(levelset::to_mask(r.phi));
            out["phi"] = to_array(r.phi.phi);
            out["trace"] = trace_dict(r.trace);
            out["collapsed"] = r.collapsed;
            out["converged"] = r.converged;
            return out;
        },
        py::arg("image"), py::arg("phi0"), py::arg("lam") = 0.2, py::arg("max_iters") = 200, py::arg("gt") = py::none(),
        "Two-region gamma active contour with an edge-weighted length term.");
}
