#pragma once

// Static SVG diagnostics: log-log infidelity curves and POVM heatmaps.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "remqst/quantum.hpp"

namespace remqst::cli {

struct CurveSeries {
  std::string name;
  std::vector<std::uint64_t> shots;
  std::vector<double> values;
};

/// Reads any of the curve CSV layouts written by the pipeline:
///   strength,series,target,shots,infidelity        (per target; averaged here)
///   strength,series,shots,mean_infidelity,std_infidelity
///   shots,mean_infidelity,std_infidelity           (single series "curve")
/// Throws InvalidArgument on malformed input or when no series is present.
std::vector<CurveSeries> read_curve_csv(const std::filesystem::path& path);
std::vector<CurveSeries> parse_curve_csv(const std::string& text);

/// Log-log plot with one polyline and legend entry per series and a marker
/// on each series' last (saturation) point.
std::string render_curves_svg(const std::vector<CurveSeries>& series);

/// Real and imaginary parts of every effect as annotated 2-D heatmaps.
/// Effects labelled by Pauli basis ("x0", "y1", ...) are shown in their
/// ideal eigenbasis.
std::string render_povm_svg(const Povm& povm);

void plot_curves(const std::filesystem::path& csv_path, const std::filesystem::path& out_svg);
void plot_povm_heatmap(const std::filesystem::path& povm_json, const std::filesystem::path& out_svg);

/// "%.2f" with negative zero printed as "0.00".
std::string cell_text(double value);

}  // namespace remqst::cli
