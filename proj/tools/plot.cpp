#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "remqst/detector_tomography.hpp"
#include "remqst/errors.hpp"
#include "remqst/pipeline.hpp"
#include "remqst/serialization.hpp"

namespace remqst::cli {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 180.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 60.0;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("curve CSV line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

std::uint64_t parse_shots(const std::string& s, std::size_t line) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw InvalidArgument("curve CSV line " + std::to_string(line) + ": '" + s + "' is not a shot count");
  }
  return std::stoull(s);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string series_color(const std::string& name, std::size_t index) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  if (name.find("unmitigated") != std::string::npos && index < 2) return "#d62728";
  if (name.find("mitigated") != std::string::npos && index < 2) return "#1f77b4";
  return palette[index % 8];
}

// Blue for negative, red for positive, white at zero.
std::string heat_color(double v) {
  const double t = std::clamp(std::abs(v), 0.0, 1.0);
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  char buf[8];
  if (v >= 0) std::snprintf(buf, sizeof(buf), "#ff%02x%02x", fade, fade);
  else std::snprintf(buf, sizeof(buf), "#%02x%02xff", fade, fade);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) { write_file_atomic(path, text); }

}  // namespace

std::string cell_text(double value) {
  std::string s = fmt(value);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::vector<CurveSeries> parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("curve CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');

  enum class Layout { per_target, means, single };
  Layout layout;
  if (header == std::vector<std::string>{"strength", "series", "target", "shots", "infidelity"}) {
    layout = Layout::per_target;
  } else if (header == std::vector<std::string>{"strength", "series", "shots", "mean_infidelity", "std_infidelity"}) {
    layout = Layout::means;
  } else if (header == std::vector<std::string>{"shots", "mean_infidelity", "std_infidelity"}) {
    layout = Layout::single;
  } else {
    throw InvalidArgument("curve CSV: unrecognised header '" + line + "'");
  }

  // name -> shots -> (sum, count), kept in first-seen order.
  std::vector<std::string> order;
  std::map<std::string, std::map<std::uint64_t, std::pair<double, int>>> acc;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) {
      throw InvalidArgument("curve CSV line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
    }
    std::string name;
    std::uint64_t shots = 0;
    double value = 0.0;
    switch (layout) {
      case Layout::per_target:
        name = f[0].empty() ? f[1] : f[1] + " (" + f[0] + ")";
        shots = parse_shots(f[3], line_no);
        value = parse_double(f[4], line_no);
        break;
      case Layout::means:
        name = f[0].empty() ? f[1] : f[1] + " (" + f[0] + ")";
        shots = parse_shots(f[2], line_no);
        value = parse_double(f[3], line_no);
        break;
      case Layout::single:
        name = "curve";
        shots = parse_shots(f[0], line_no);
        value = parse_double(f[1], line_no);
        break;
    }
    if (!acc.count(name)) order.push_back(name);
    auto& cell = acc[name][shots];
    cell.first += value;
    cell.second += 1;
  }
  if (order.empty()) throw InvalidArgument("curve CSV: no data rows (empty series)");
  std::vector<CurveSeries> out;
  for (const auto& name : order) {
    CurveSeries s{name, {}, {}};
    for (const auto& [shots, cell] : acc[name]) {
      s.shots.push_back(shots);
      s.values.push_back(cell.first / cell.second);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CurveSeries> read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_curve_csv(buf.str());
}

std::string render_curves_svg(const std::vector<CurveSeries>& series) {
  if (series.empty()) throw InvalidArgument("plot: no series");
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& s : series) {
    if (s.shots.empty()) throw InvalidArgument("plot: series '" + s.name + "' is empty");
    bool any = false;
    for (std::size_t k = 0; k < s.shots.size(); ++k) {
      if (s.shots[k] == 0 || !(s.values[k] > 0.0)) continue;
      any = true;
      x_lo = std::min(x_lo, std::log10(static_cast<double>(s.shots[k])));
      x_hi = std::max(x_hi, std::log10(static_cast<double>(s.shots[k])));
      y_lo = std::min(y_lo, std::log10(s.values[k]));
      y_hi = std::max(y_hi, std::log10(s.values[k]));
    }
    if (!any) throw InvalidArgument("plot: series '" + s.name + "' has no positive points");
  }
  x_lo = std::floor(x_lo);
  x_hi = std::max(std::ceil(x_hi), x_lo + 1);
  y_lo = std::floor(y_lo);
  y_hi = std::max(std::ceil(y_hi), y_lo + 1);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double lx) { return kLeft + (lx - x_lo) / (x_hi - x_lo) * plot_w; };
  auto sy = [&](double ly) { return kTop + (y_hi - ly) / (y_hi - y_lo) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<g class=\"axes\" data-scale=\"log-log\" stroke=\"#333\">\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\"/>\n";
  for (double d = x_lo; d <= x_hi + 1e-9; d += 1.0) {
    const double x = sx(d);
    svg << "<line class=\"tick-x\" x1=\"" << fmt(x) << "\" y1=\"" << fmt(kTop + plot_h) << "\" x2=\"" << fmt(x)
        << "\" y2=\"" << fmt(kTop + plot_h + 5) << "\"/>\n";
    svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kTop + plot_h + 20)
        << "\" text-anchor=\"middle\" stroke=\"none\">1e" << static_cast<int>(d) << "</text>\n";
  }
  for (double d = y_lo; d <= y_hi + 1e-9; d += 1.0) {
    const double y = sy(d);
    svg << "<line class=\"tick-y\" x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(kLeft)
        << "\" y2=\"" << fmt(y) << "\"/>\n";
    svg << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(y + 4)
        << "\" text-anchor=\"end\" stroke=\"none\">1e" << static_cast<int>(d) << "</text>\n";
  }
  svg << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 15)
      << "\" text-anchor=\"middle\" stroke=\"none\">shots</text>\n";
  svg << "<text transform=\"translate(20," << fmt(kTop + plot_h / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" stroke=\"none\">infidelity</text>\n";
  svg << "</g>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const std::string color = series_color(s.name, series.size() <= 2 ? i : 2);
    svg << "<polyline class=\"series\" data-name=\"" << escape(s.name) << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    double last_x = 0, last_y = 0;
    bool first = true;
    for (std::size_t k = 0; k < s.shots.size(); ++k) {
      if (s.shots[k] == 0 || !(s.values[k] > 0.0)) continue;
      last_x = sx(std::log10(static_cast<double>(s.shots[k])));
      last_y = sy(std::log10(s.values[k]));
      svg << (first ? "" : " ") << fmt(last_x) << ',' << fmt(last_y);
      first = false;
    }
    svg << "\"/>\n";
    svg << "<circle class=\"saturation\" cx=\"" << fmt(last_x) << "\" cy=\"" << fmt(last_y)
        << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(i);
    const double lx = kLeft + plot_w + 15;
    svg << "<g class=\"legend\"><line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 20)
        << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << fmt(lx + 26)
        << "\" y=\"" << fmt(ly + 4) << "\">" << escape(s.name) << "</text></g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_povm_svg(const Povm& povm) {
  if (povm.dim() > 8) throw InvalidArgument("plot: heatmaps support dimension up to 8");
  const auto rotations = pauli_basis_rotations();
  const int d = povm.dim();
  const double cell = 44.0;
  const double panel = cell * d;
  const double gap = 24.0;
  const double block_w = 2 * panel + 3 * gap;
  const double block_h = panel + 50.0;
  const std::size_t per_row = 3;
  const std::size_t rows = (povm.size() + per_row - 1) / per_row;

  std::ostringstream svg;
  const double width = block_w * static_cast<double>(std::min(per_row, povm.size()));
  const double height = block_h * static_cast<double>(rows) + 10;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < povm.size(); ++i) {
    const std::string& label = povm.label(i);
    std::string basis = label;
    while (!basis.empty() && std::isdigit(static_cast<unsigned char>(basis.back()))) basis.pop_back();
    Matrix m = povm.effect(i).matrix();
    const auto rot = rotations.find(basis);
    if (rot != rotations.end() && d == 2) m = rot->second * m * rot->second.adjoint();

    const double bx = block_w * static_cast<double>(i % per_row);
    const double by = block_h * static_cast<double>(i / per_row);
    svg << "<g class=\"effect\" data-effect=\"" << escape(label) << "\">\n";
    svg << "<text x=\"" << fmt(bx + gap) << "\" y=\"" << fmt(by + 18) << "\" font-weight=\"bold\">"
        << escape(label) << "</text>\n";
    for (int part = 0; part < 2; ++part) {
      const double px = bx + gap + part * (panel + gap);
      const double py = by + 26;
      const char* part_name = part == 0 ? "re" : "im";
      svg << "<text x=\"" << fmt(px + panel) << "\" y=\"" << fmt(by + 18) << "\" text-anchor=\"end\">"
          << (part == 0 ? "Re" : "Im") << "</text>\n";
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
          const double v = part == 0 ? m(r, c).real() : m(r, c).imag();
          const double x = px + c * cell;
          const double y = py + r * cell;
          svg << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << cell << "\" height=\"" << cell
              << "\" fill=\"" << heat_color(v) << "\" stroke=\"#999\"/>\n";
          svg << "<text class=\"cell\" data-effect=\"" << escape(label) << "\" data-part=\"" << part_name
              << "\" data-row=\"" << r << "\" data-col=\"" << c << "\" x=\"" << fmt(x + cell / 2) << "\" y=\""
              << fmt(y + cell / 2 + 4) << "\" text-anchor=\"middle\">" << cell_text(v) << "</text>\n";
        }
      }
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void plot_curves(const std::filesystem::path& csv_path, const std::filesystem::path& out_svg) {
  write_text(out_svg, render_curves_svg(read_curve_csv(csv_path)));
}

void plot_povm_heatmap(const std::filesystem::path& povm_json, const std::filesystem::path& out_svg) {
  const Json j = read_json_file(povm_json);
  write_text(out_svg, render_povm_svg(povm_from_json(j)));
}

}  // namespace remqst::cli
