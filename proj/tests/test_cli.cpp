#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "cli.hpp"
#include "plot.hpp"
#include "remqst/errors.hpp"
#include "remqst/noise.hpp"
#include "remqst/pipeline.hpp"
#include "remqst/serialization.hpp"

namespace remqst {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("remqst_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::vector<std::string> small_run(const fs::path& out, const std::string& seed) {
  return {"--targets", "3", "--qst-shots", "2000", "--qdt-shots", "2000", "--seed", seed, "--out", out.string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<std::pair<double, double>> polyline_points(const std::string& svg, std::size_t which) {
  const std::regex poly(R"re(<polyline class="series"[^>]*points="([^"]*)")re");
  std::size_t k = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator(); ++it, ++k) {
    if (k != which) continue;
    std::vector<std::pair<double, double>> out;
    std::istringstream in((*it)[1].str());
    std::string pair;
    while (in >> pair) {
      const auto comma = pair.find(',');
      out.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
    }
    return out;
  }
  return {};
}

std::size_t occurrences(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

TEST(Cli, RunIsDeterministic) {
  const fs::path dir = scratch_dir("determinism");
  const fs::path config = dir / "cfg.json";
  spit(config, R"({"noise": {"kind": "depolarizing", "params": {"p": 0.2}}})");
  ASSERT_EQ(cli::run(concat({"run", "--config", config.string()}, small_run(dir / "a", "7"))), cli::kExitOk);
  ASSERT_EQ(cli::run(concat({"run", "--config", config.string()}, small_run(dir / "b", "7"))), cli::kExitOk);
  for (const char* name : {"curves.csv", "saturations.csv", "mean_curves.csv", "povm_estm.json"}) {
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
  }
  const Json manifest = read_json_file(dir / "a" / "manifest.json");
  EXPECT_EQ(manifest["seed"], 7u);
  EXPECT_EQ(manifest["tool"], "remqst");
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(slurp(config), R"({"noise": {"kind": "depolarizing", "params": {"p": 0.2}}})");

  ASSERT_EQ(cli::run(concat({"run", "--config", config.string()}, small_run(dir / "c", "8"))), cli::kExitOk);
  EXPECT_NE(slurp(dir / "a" / "curves.csv"), slurp(dir / "c" / "curves.csv"));
  fs::remove_all(dir);
}

TEST(Cli, SweepRowCount) {
  const fs::path dir = scratch_dir("sweep");
  ASSERT_EQ(cli::run(concat({"sweep", "--kind", "depolarizing", "--strengths", "0.1,0.3,0.5"}, small_run(dir, "3"))),
            cli::kExitOk);
  const std::string sat = slurp(dir / "saturations.csv");
  EXPECT_EQ(count_lines(sat), 1u + 3u * 3u);
  EXPECT_EQ(sat.substr(0, sat.find('\n')), "strength,target,mitigated,unmitigated");
  EXPECT_EQ(sat.find('\r'), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, ConfigErrorsExitWithOne) {
  const fs::path dir = scratch_dir("errors");
  EXPECT_EQ(cli::run({"run", "--config", (dir / "missing.json").string()}), cli::kExitConfig);
  EXPECT_EQ(cli::run({"run", "--seed", "minus-one"}), cli::kExitConfig);
  EXPECT_EQ(cli::run({"frobnicate"}), cli::kExitConfig);
  EXPECT_EQ(cli::run({}), cli::kExitConfig);
  EXPECT_EQ(cli::run({"run", "--noise", R"({"kind": "depolarizing", "params": {"p": 2}})"}), cli::kExitConfig);
  spit(dir / "bad.json", "{\"seed\": }");
  EXPECT_EQ(cli::run({"run", "--config", (dir / "bad.json").string()}), cli::kExitConfig);
  spit(dir / "unknown.json", R"({"seeed": 3})");
  EXPECT_EQ(cli::run({"run", "--config", (dir / "unknown.json").string()}), cli::kExitConfig);
  EXPECT_EQ(cli::run({"sweep", "--kind", "depolarizing", "--strengths", "0.1,abc"}), cli::kExitConfig);
  fs::remove_all(dir);
}

TEST(Cli, QdtQstAndCoherenceSubcommands) {
  const fs::path dir = scratch_dir("stages");
  ASSERT_EQ(cli::run(concat({"run", "--noise", R"({"kind": "depolarizing", "params": {"p": 0.3}})"},
                            small_run(dir / "run", "5"))),
            cli::kExitOk);
  const fs::path qdt_counts = dir / "run" / "qdt_counts.json";
  const fs::path qst_counts = dir / "run" / "qst_counts.json";
  ASSERT_TRUE(fs::exists(qdt_counts));
  ASSERT_TRUE(fs::exists(qst_counts));
  const std::string before = slurp(qdt_counts);

  ASSERT_EQ(cli::run({"qdt", qdt_counts.string(), "--out", (dir / "qdt").string()}), cli::kExitOk);
  EXPECT_EQ(slurp(dir / "qdt" / "povm_estm.json"), slurp(dir / "run" / "povm_estm.json"));
  EXPECT_EQ(slurp(qdt_counts), before);

  ASSERT_EQ(cli::run({"qst", qst_counts.string(), "--povm", (dir / "qdt" / "povm_estm.json").string(), "--out",
                      (dir / "qst").string()}),
            cli::kExitOk);
  EXPECT_TRUE(fs::exists(dir / "qst" / "estimates.json"));
  EXPECT_TRUE(fs::exists(dir / "qst" / "manifest.json"));

  ASSERT_EQ(cli::run({"ingest", "--qdt", qdt_counts.string(), "--qst", qst_counts.string(), "--out",
                      (dir / "ingest").string(), "--targets", "3", "--qst-shots", "2000", "--qdt-shots", "2000",
                      "--seed", "5", "--noise", R"({"kind": "depolarizing", "params": {"p": 0.3}})"}),
            cli::kExitOk);
  EXPECT_EQ(slurp(dir / "ingest" / "saturations.csv"), slurp(dir / "run" / "saturations.csv"));

  ASSERT_EQ(cli::run({"coherence", (dir / "qdt" / "povm_estm.json").string(), "--threshold", "0.03", "--out",
                      (dir / "coh").string()}),
            cli::kExitOk);
  const Json report = read_json_file(dir / "coh" / "coherence_report.json");
  EXPECT_DOUBLE_EQ(report["threshold"].get<double>(), 0.03);
  EXPECT_EQ(report["effects"].size(), 6u);
  fs::remove_all(dir);
}

TEST(Cli, CalibrationSweepWritesExactRow) {
  const fs::path dir = scratch_dir("calibration");
  ASSERT_EQ(cli::run(concat({"calibration-sweep", "--budgets", "1000,exact", "--noise",
                             R"({"kind": "depolarizing", "params": {"p": 0.3}})"},
                            small_run(dir, "2"))),
            cli::kExitOk);
  const std::string csv = slurp(dir / "calibration.csv");
  EXPECT_EQ(count_lines(csv), 1u + 2u * 3u);
  EXPECT_NE(csv.find("\nexact,"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Plot, CurvesSvgStructure) {
  const fs::path dir = scratch_dir("plot");
  ASSERT_EQ(cli::run(concat({"run", "--noise", R"({"kind": "depolarizing", "params": {"p": 0.2}})"},
                            small_run(dir, "4"))),
            cli::kExitOk);
  ASSERT_EQ(cli::run({"plot", (dir / "curves.csv").string(), "-o", (dir / "fig.svg").string()}), cli::kExitOk);
  const std::string svg = slurp(dir / "fig.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find(R"(data-scale="log-log")"), std::string::npos);
  EXPECT_EQ(occurrences(svg, R"(<polyline class="series")"), 2u);
  EXPECT_NE(svg.find("mitigated"), std::string::npos);
  EXPECT_NE(svg.find("unmitigated"), std::string::npos);
  EXPECT_EQ(occurrences(svg, R"(class="saturation")"), 2u);
  EXPECT_TRUE(fs::exists(dir / "fig.svg.manifest.json"));
  fs::remove_all(dir);
}

TEST(Plot, MonotoneCurveMapsToMonotonePath) {
  const auto series = cli::parse_curve_csv(
      "shots,mean_infidelity,std_infidelity\n10,0.5,0\n100,0.1,0\n1000,0.02,0\n10000,0.004,0\n");
  ASSERT_EQ(series.size(), 1u);
  const auto pts = polyline_points(cli::render_curves_svg(series), 0);
  ASSERT_EQ(pts.size(), 4u);
  for (std::size_t k = 1; k < pts.size(); ++k) {
    EXPECT_GT(pts[k].first, pts[k - 1].first);
    // SVG y grows downward, so a falling curve has growing y.
    EXPECT_GT(pts[k].second, pts[k - 1].second);
  }
}

TEST(Plot, TwoSeriesGiveTwoPolylinesAndLegendEntries) {
  const auto series = cli::parse_curve_csv(
      "strength,series,shots,mean_infidelity,std_infidelity\n"
      "0.3,mitigated,10,0.4,0\n0.3,mitigated,100,0.05,0\n"
      "0.3,unmitigated,10,0.45,0\n0.3,unmitigated,100,0.16,0\n");
  ASSERT_EQ(series.size(), 2u);
  const std::string svg = cli::render_curves_svg(series);
  EXPECT_EQ(occurrences(svg, R"(<polyline class="series")"), 2u);
  const auto legend = svg.find(R"(<g class="legend")");
  ASSERT_NE(legend, std::string::npos);
  EXPECT_NE(svg.find("mitigated (0.3)", legend), std::string::npos);
  EXPECT_NE(svg.find("unmitigated (0.3)", legend), std::string::npos);
}

TEST(Plot, EmptySeriesIsAnError) {
  EXPECT_THROW(cli::parse_curve_csv("shots,mean_infidelity,std_infidelity\n"), InvalidArgument);
  EXPECT_THROW(cli::parse_curve_csv("a,b\n1,2\n"), InvalidArgument);
  EXPECT_THROW(cli::parse_curve_csv("shots,mean_infidelity,std_infidelity\n10,abc,0\n"), InvalidArgument);
  const fs::path dir = scratch_dir("empty");
  spit(dir / "empty.csv", "shots,mean_infidelity,std_infidelity\n");
  EXPECT_EQ(cli::run({"plot", (dir / "empty.csv").string(), "-o", (dir / "x.svg").string()}), cli::kExitConfig);
  EXPECT_FALSE(fs::exists(dir / "x.svg"));
  fs::remove_all(dir);
}

struct Cell {
  std::string effect, part;
  int row, col;
  double value;
};

std::vector<Cell> heatmap_cells(const std::string& svg) {
  const std::regex cell(
      R"re(<text class="cell" data-effect="([^"]*)" data-part="(re|im)" data-row="(\d+)" data-col="(\d+)"[^>]*>([^<]*)</text>)re");
  std::vector<Cell> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), cell); it != std::sregex_iterator(); ++it) {
    out.push_back({(*it)[1], (*it)[2], std::stoi((*it)[3]), std::stoi((*it)[4]), std::stod((*it)[5])});
  }
  return out;
}

TEST(Heatmap, IdealPauliSixHasZeroOffDiagonals) {
  const auto cells = heatmap_cells(cli::render_povm_svg(pauli6_povm()));
  ASSERT_EQ(cells.size(), 6u * 2u * 4u);
  for (const auto& c : cells) {
    if (c.row != c.col || c.part == "im") {
      EXPECT_EQ(cli::cell_text(c.value), "0.00");
    }
    // Each effect sits on the diagonal slot of its own outcome.
    const int slot = c.effect.back() - '0';
    if (c.part == "re" && c.row == slot && c.col == slot) {
      EXPECT_NEAR(c.value, 0.33, 1e-12);
    }
  }
}

TEST(Heatmap, IdentityEffect) {
  const Povm trivial({Effect(Matrix::Identity(2, 2))}, {"all"});
  const auto cells = heatmap_cells(cli::render_povm_svg(trivial));
  ASSERT_EQ(cells.size(), 8u);
  for (const auto& c : cells) {
    const double expected = c.part == "re" && c.row == c.col ? 1.0 : 0.0;
    EXPECT_DOUBLE_EQ(c.value, expected);
  }
  EXPECT_EQ(cli::cell_text(-0.001), "0.00");
  EXPECT_EQ(cli::cell_text(0.3333), "0.33");
}

TEST(Heatmap, ValuesRoundTripThroughTheSvg) {
  const fs::path dir = scratch_dir("heatmap");
  const Povm noisy = pull_back(KrausChannel::unitary(detuning_error(4e6, 200e-9)),
                               pull_back(depolarizing_channel(0.2), pauli6_povm()));
  spit(dir / "povm.json", to_json(noisy).dump(2));
  ASSERT_EQ(cli::run({"plot", "--povm", (dir / "povm.json").string(), "-o", (dir / "h.svg").string()}),
            cli::kExitOk);
  const auto cells = heatmap_cells(slurp(dir / "h.svg"));
  ASSERT_EQ(cells.size(), 48u);
  const auto rotations = pauli_basis_rotations();
  for (const auto& c : cells) {
    const std::size_t i = noisy.index_of(c.effect);
    const Matrix& r = rotations.at(c.effect.substr(0, 1));
    const Matrix rotated = r * noisy.effect(i).matrix() * r.adjoint();
    const auto z = rotated(c.row, c.col);
    EXPECT_NEAR(c.value, c.part == "re" ? z.real() : z.imag(), 0.005);
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace remqst
