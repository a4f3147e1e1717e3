#include "mkdepth/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "mkdepth/error.hpp"
#include "mkdepth/geometry.hpp"
#include "mkdepth/measures.hpp"

namespace mkdepth {

namespace {

// Error raised at a named stage of a command, keeping the library error code.
struct StageError {
    std::string stage;
    ErrorCode code;
    std::string message;
};

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw StageError{name, e.code(), e.what()};
    }
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::NumericalFailure:
        case ErrorCode::MaxItersExceeded:
        case ErrorCode::EmptyCellUnrecoverable:
        case ErrorCode::InstanceTooLarge: return kExitSolver;
        default: return kExitConfig;
    }
}

void write_text(const RunConfig& cfg, std::ostream& out, const std::string& text) {
    if (cfg.output.empty()) {
        out << text;
        return;
    }
    stage("write output", [&] {
        std::ofstream f(cfg.output, std::ios::binary);
        if (!f) throw Error(ErrorCode::IoError, "cannot write '" + cfg.output + "'");
        f << text;
        if (!f) throw Error(ErrorCode::IoError, "write to '" + cfg.output + "' failed");
    });
}

DiscreteMeasure read_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw StageError{"load input", ErrorCode::InvalidArgument, "--input is required"};
    return stage("load input", [&] { return load_csv(cfg.input, cfg.weights); });
}

FittedTransport read_model(const RunConfig& cfg) {
    if (cfg.model.empty()) throw StageError{"load model", ErrorCode::InvalidArgument, "--model is required"};
    return stage("load model", [&] { return load_model(cfg.model); });
}

SyntheticFamily make_family(const RunConfig& cfg) {
    const FamilyKind kind = family_kind_from_string(cfg.family);
    switch (kind) {
        case FamilyKind::Banana: return banana_family();
        case FamilyKind::UniformBall: return uniform_ball_family(cfg.dim);
        case FamilyKind::UnivariateUniform: return univariate_uniform_family();
        case FamilyKind::EllipticalSpherical: return elliptical_spherical_family(cfg.dim, 1.0);
    }
    return banana_family();
}

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
}

int cmd_sample(const RunConfig& cfg, std::ostream& out) {
    const auto data = stage("sample", [&] {
        if (cfg.n == 0) throw Error(ErrorCode::InvalidArgument, "--n must be positive");
        const SyntheticFamily family = make_family(cfg);
        family.validate();
        return family.sample(cfg.n, cfg.seed);
    });
    std::ostringstream buf;
    write_csv(buf, data);
    write_text(cfg, out, buf.str());
    return kExitOk;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
    const DiscreteMeasure data = read_input(cfg);
    const ReferenceSpec spec = stage("parse reference", [&] { return ReferenceSpec::parse(cfg.reference); });
    if (cfg.solver == FitMode::Assignment && spec.size() != data.size()) {
        throw StageError{"configure", ErrorCode::SizeMismatch,
                         "assignment needs as many reference atoms (" + std::to_string(spec.size()) +
                             ") as data atoms (" + std::to_string(data.size()) + ")"};
    }
    const DiscreteMeasure ref = stage("build reference", [&] { return spec.build(data.dim(), cfg.seed); });
    FittedTransport fit = stage("solve", [&] {
        if (cfg.solver == FitMode::Assignment) return fit_assignment(ref, spec.kind(), data);
        SemiDiscreteOptions opts;
        opts.tol_mass = cfg.tol_mass;
        opts.max_iters = cfg.max_iters;
        return fit_semidiscrete(ref, spec.kind(), data, opts);
    });
    fit.reference_spec = spec.str();
    fit.seed = cfg.seed;
    nlohmann::json j;
    to_json(j, fit);
    write_text(cfg, out, j.dump(1) + "\n");
    return kExitOk;
}

int cmd_depth(const RunConfig& cfg, std::ostream& out) {
    const FittedTransport fit = read_model(cfg);
    const DiscreteMeasure queries = [&] {
        if (cfg.input.empty()) throw StageError{"load input", ErrorCode::InvalidArgument, "--input is required"};
        // Queries keep their order and multiplicity, so no merging here.
        return stage("load input", [&] {
            std::ifstream in(cfg.input);
            if (!in) throw Error(ErrorCode::IoError, "cannot open '" + cfg.input + "'");
            return parse_csv(in, false);
        });
    }();
    std::vector<DepthReport> reports;
    stage("evaluate", [&] {
        for (std::size_t i = 0; i < queries.size(); ++i) reports.push_back(eval_rank(fit, queries.point(i)));
    });
    std::ostringstream buf;
    write_depth_csv(buf, reports);
    write_text(cfg, out, buf.str());
    return kExitOk;
}

int cmd_contour(const RunConfig& cfg, std::ostream& out) {
    const FittedTransport fit = read_model(cfg);
    if (cfg.taus.empty()) throw StageError{"configure", ErrorCode::InvalidTau, "--tau is required"};
    std::ostringstream buf;
    buf.precision(17);
    buf << "#tau";
    for (std::size_t k = 0; k < fit.dim(); ++k) buf << ",x" << k + 1;
    buf << "\n";
    stage("evaluate", [&] {
        for (double tau : cfg.taus) {
            const auto pts = cfg.region ? depth_region(fit, tau).points : quantile_contour(fit, tau, cfg.spokes);
            for (const auto& p : pts) {
                buf << tau;
                for (double c : p) buf << "," << c;
                buf << "\n";
            }
        }
    });
    write_text(cfg, out, buf.str());
    return kExitOk;
}

int cmd_converge(const RunConfig& cfg, std::ostream& out) {
    ConvergenceRun run;
    stage("configure", [&] {
        run.family = make_family(cfg);
        run.band = cfg.band;
        run.band.validate();
        if (cfg.sizes.empty()) throw Error(ErrorCode::InvalidArgument, "--sizes is required");
        run.sizes = cfg.sizes;
        run.seeds = cfg.seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : cfg.seeds;
        run.taus = cfg.taus;
        run.probe_count = cfg.probes;
    });
    stage("run", [&] { run_convergence(run); });
    std::ostringstream buf;
    write_convergence_csv(buf, run);
    write_text(cfg, out, buf.str());
    return kExitOk;
}

int cmd_figure(const RunConfig& cfg, std::ostream& out) {
    const FittedTransport fit = read_model(cfg);
    if (fit.dim() != 2) {
        throw StageError{"figure", ErrorCode::UnsupportedDimension,
                         "figures need 2-d data, model has d = " + std::to_string(fit.dim())};
    }
    FigureOptions opts;
    if (!cfg.taus.empty()) opts.taus = cfg.taus;
    opts.spokes = cfg.spokes;
    opts.smooth = cfg.smooth;
    opts.alpha = cfg.alpha;
    std::ostringstream buf;
    stage("render", [&] { write_figure_svg(buf, fit, opts); });
    write_text(cfg, out, buf.str());
    return kExitOk;
}

}  // namespace

void RunConfig::validate() const {
    for (double tau : taus) {
        if (!(tau > 0.0 && tau <= 1.0)) {
            throw Error(ErrorCode::InvalidTau, "tau must lie in (0, 1], got " + fmt(tau));
        }
    }
}

std::vector<double> default_figure_taus() {
    std::vector<double> taus;
    for (int k = 1; k <= 11; ++k) taus.push_back(k / 12.0);
    return taus;
}

void write_figure_svg(std::ostream& out, const FittedTransport& fit, const FigureOptions& options) {
    if (fit.dim() != 2) throw Error(ErrorCode::UnsupportedDimension, "figures need 2-d data");
    for (double tau : options.taus) {
        if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorCode::InvalidTau, "tau must lie in (0, 1], got " + fmt(tau));
    }
    const auto& data = fit.target();
    const double lo_x = fit.box_lo[0], hi_x = fit.box_hi[0];
    const double lo_y = fit.box_lo[1], hi_y = fit.box_hi[1];
    const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
    const double pad = 0.05 * span;
    const double size = 800.0;
    const double scale = size / (span + 2.0 * pad);
    const double width = std::ceil((hi_x - lo_x + 2.0 * pad) * scale);
    const double height = std::ceil((hi_y - lo_y + 2.0 * pad) * scale);

    std::ostringstream svg;
    svg.precision(9);
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<!-- " << options.version_comment << " -->\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // Everything below is in data coordinates.
    svg << "<g transform=\"matrix(" << scale << " 0 0 " << -scale << " " << (pad - lo_x) * scale << " "
        << (hi_y + pad) * scale << ")\">\n";
    svg << "<g class=\"sample\" fill=\"#555555\" fill-opacity=\"0.5\">\n";
    const double r = 1.5 / scale;
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto y = data.point(j);
        svg << "<circle cx=\"" << y[0] << "\" cy=\"" << y[1] << "\" r=\"" << r << "\"/>\n";
    }
    svg << "</g>\n";
    auto points_attr = [&](const std::vector<Point>& pts) {
        std::ostringstream s;
        s.precision(9);
        for (std::size_t k = 0; k < pts.size(); ++k) s << (k ? " " : "") << pts[k][0] << "," << pts[k][1];
        return s.str();
    };
    for (double tau : options.taus) {
        auto contour = quantile_contour(fit, tau, options.spokes);
        contour.erase(std::unique(contour.begin(), contour.end()), contour.end());
        while (contour.size() > 1 && contour.back() == contour.front()) contour.pop_back();
        contour.push_back(contour.front());
        svg << "<polyline class=\"contour\" data-tau=\"" << tau << "\" fill=\"none\" stroke=\"#c0392b\" "
            << "stroke-width=\"1.2\" vector-effect=\"non-scaling-stroke\" points=\"" << points_attr(contour)
            << "\"/>\n";
        if (options.smooth) {
            for (auto loop : alpha_shape_boundary(depth_region(fit, tau).points, options.alpha)) {
                loop.push_back(loop.front());
                svg << "<polyline class=\"alpha-hull\" data-tau=\"" << tau << "\" fill=\"none\" stroke=\"#2471a3\" "
                    << "stroke-width=\"1\" vector-effect=\"non-scaling-stroke\" points=\"" << points_attr(loop)
                    << "\"/>\n";
            }
        }
    }
    svg << "</g>\n</svg>\n";
    out << svg.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Monge-Kantorovich depth, quantiles and ranks"};
    app.require_subcommand(1);
    std::string solver = "assignment";
    std::string band = "0.2,0.8";

    auto add_io = [&](CLI::App* sub) {
        sub->add_option("--output", cfg.output, "Output file (default: stdout)");
    };
    auto add_taus = [&](CLI::App* sub, const char* help) {
        sub->add_option("--tau", cfg.taus, help)->delimiter(',');
    };

    auto* sample = app.add_subcommand("sample", "Draw a synthetic sample as CSV");
    sample->add_option("--family", cfg.family, "banana, uniform-ball, univariate-uniform, elliptical-spherical");
    sample->add_option("--n", cfg.n, "Sample size")->required();
    sample->add_option("--dim", cfg.dim, "Dimension (ball families)");
    sample->add_option("--seed", cfg.seed, "Random seed");
    add_io(sample);

    auto* fit = app.add_subcommand("fit", "Fit the empirical transport and write a JSON model");
    fit->add_option("--input", cfg.input, "Data CSV")->required();
    fit->add_option("--reference", cfg.reference, "ball-grid:R,S | ball-grid:N | ball-mc:N | cube:N");
    fit->add_option("--solver", solver, "assignment or semidiscrete");
    fit->add_option("--seed", cfg.seed, "Seed for Monte-Carlo references");
    fit->add_flag("--weights", cfg.weights, "Last CSV column holds atom weights");
    fit->add_option("--tol", cfg.tol_mass, "Semi-discrete cell mass tolerance");
    fit->add_option("--max-iters", cfg.max_iters, "Semi-discrete iteration budget");
    add_io(fit);

    auto* depth = app.add_subcommand("depth", "Ranks, signs and depths of query points");
    depth->add_option("--model", cfg.model, "Model JSON")->required();
    depth->add_option("--input", cfg.input, "Query CSV")->required();
    add_io(depth);

    auto* contour = app.add_subcommand("contour", "Quantile contours or depth regions as CSV");
    contour->add_option("--model", cfg.model, "Model JSON")->required();
    add_taus(contour, "Probability contents, comma separated");
    contour->add_option("--spokes", cfg.spokes, "Directions per contour");
    contour->add_flag("--region", cfg.region, "Write depth region points instead of contours");
    add_io(contour);

    auto* converge = app.add_subcommand("converge", "Convergence experiment against a closed-form family");
    converge->add_option("--family", cfg.family, "uniform-ball, univariate-uniform, elliptical-spherical");
    converge->add_option("--dim", cfg.dim, "Dimension (ball families)");
    converge->add_option("--sizes", cfg.sizes, "Sample sizes, comma separated")->delimiter(',')->required();
    converge->add_option("--seeds", cfg.seeds, "Seeds, comma separated")->delimiter(',');
    converge->add_option("--seed", cfg.seed, "Single seed when --seeds is absent");
    converge->add_option("--band", band, "Probe band r_lo,r_hi");
    converge->add_option("--probes", cfg.probes, "Probe count on the band");
    add_taus(converge, "Contour levels inside the band, comma separated");
    add_io(converge);

    auto* figure = app.add_subcommand("figure", "SVG of the sample and its quantile contours");
    figure->add_option("--model", cfg.model, "Model JSON")->required();
    add_taus(figure, "Contour levels (default k/12, k = 1..11)");
    figure->add_option("--spokes", cfg.spokes, "Directions per contour");
    figure->add_flag("--smooth", cfg.smooth, "Add alpha-shape outlines of the depth regions");
    figure->add_option("--alpha", cfg.alpha, "Alpha-shape radius in data units");
    add_io(figure);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "mkdepth: " << e.what() << "\n";
        return kExitConfig;
    }

    std::string name;
    try {
        stage("configure", [&] {
            cfg.solver = fit_mode_from_string(solver);
            const auto comma = band.find(',');
            if (comma == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--band needs r_lo,r_hi");
            try {
                cfg.band.r_lo = std::stod(band.substr(0, comma));
                cfg.band.r_hi = std::stod(band.substr(comma + 1));
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidArgument, "bad --band '" + band + "'");
            }
            cfg.validate();
        });
        if (sample->parsed()) {
            name = "sample";
            cfg.command = Command::Sample;
            return cmd_sample(cfg, out);
        }
        if (fit->parsed()) {
            name = "fit";
            cfg.command = Command::Fit;
            return cmd_fit(cfg, out);
        }
        if (depth->parsed()) {
            name = "depth";
            cfg.command = Command::Depth;
            return cmd_depth(cfg, out);
        }
        if (contour->parsed()) {
            name = "contour";
            cfg.command = Command::Contour;
            return cmd_contour(cfg, out);
        }
        if (converge->parsed()) {
            name = "converge";
            cfg.command = Command::Converge;
            return cmd_converge(cfg, out);
        }
        name = "figure";
        cfg.command = Command::Figure;
        return cmd_figure(cfg, out);
    } catch (const StageError& e) {
        err << "mkdepth" << (name.empty() ? "" : " " + name) << ": " << e.stage << ": " << e.message << "\n";
        if (name == "figure" && e.code == ErrorCode::UnsupportedDimension) return kExitDimension;
        return exit_code_for(e.code);
    } catch (const std::exception& e) {
        err << "mkdepth" << (name.empty() ? "" : " " + name) << ": " << e.what() << "\n";
        return kExitSolver;
    }
}

}  // namespace mkdepth
