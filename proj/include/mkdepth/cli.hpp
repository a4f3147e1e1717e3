#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mkdepth/depth.hpp"
#include "mkdepth/metrics.hpp"

namespace mkdepth {

enum class Command { Sample, Fit, Depth, Contour, Converge, Figure };

/// Exit codes of the command line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitSolver = 3, kExitDimension = 4 };

struct RunConfig {
    Command command = Command::Fit;
    std::string input;
    std::string output;
    std::string model;
    std::string reference = "ball-grid:101,99";
    FitMode solver = FitMode::Assignment;
    std::uint64_t seed = 0;
    std::vector<double> taus;
    double alpha = 0.3;
    bool smooth = false;
    bool weights = false;
    bool region = false;
    Band band;
    std::vector<std::size_t> sizes;
    std::vector<std::uint64_t> seeds;
    std::string family = "banana";
    std::size_t n = 0;
    std::size_t dim = 2;
    std::size_t spokes = 360;
    std::size_t probes = 2000;
    double tol_mass = 1e-6;
    std::size_t max_iters = 2000;

    /// Throws on tau values outside (0, 1].
    void validate() const;
};

/// Default figure contour levels k/12, k = 1..11.
std::vector<double> default_figure_taus();

struct FigureOptions {
    std::vector<double> taus = default_figure_taus();
    std::size_t spokes = 360;
    bool smooth = false;
    double alpha = 0.3;
    std::string version_comment = "mkdepth 0.1.0";
};

/// Scatter of the model's data atoms with its tau contours as closed
/// polylines (class "contour"), drawn in data coordinates under a single
/// flipping transform. With smooth, the alpha-shape boundary of each depth
/// region is added as paths of class "alpha-hull". Needs d = 2.
void write_figure_svg(std::ostream& out, const FittedTransport& fit, const FigureOptions& options);

/// Runs the tool as if invoked with argv; returns the exit code. Normal
/// output goes to out when no --output is given, diagnostics to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mkdepth
