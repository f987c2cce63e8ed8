#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "plot.hpp"
#include "remqst/errors.hpp"
#include "remqst/pipeline.hpp"

namespace remqst::cli {
namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string estimator;
  bool readout_only = false;
  std::optional<std::uint64_t> qdt_shots;
  std::optional<std::uint64_t> qst_shots;
  std::optional<int> n_targets;
  std::string noise;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--preset", o.preset, "Base preset")->check(CLI::IsMember({"desk", "paper"}));
  app->add_option("--seed", o.seed, "Run seed");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--estimator", o.estimator, "State estimator")->check(CLI::IsMember({"mle", "bme"}));
  app->add_flag("--readout-only", o.readout_only, "Confine preparation noise to the readout");
  app->add_option("--qdt-shots", o.qdt_shots, "QDT shots per calibration state per basis")
      ->check(CLI::PositiveNumber);
  app->add_option("--qst-shots", o.qst_shots, "QST shots per basis")->check(CLI::PositiveNumber);
  app->add_option("--targets", o.n_targets, "Number of Haar-random targets")->check(CLI::PositiveNumber);
  app->add_option("--noise", o.noise, "Noise spec as inline JSON, e.g. {\"kind\":\"depolarizing\",\"params\":{\"p\":0.3}}");
}

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig c = ExperimentConfig::desk();
  if (o.preset == "paper") c = ExperimentConfig::paper();
  if (!o.config_path.empty()) c = experiment_config_from_json(read_json_file(o.config_path), c);
  if (!o.preset.empty() && !o.config_path.empty()) {
    // An explicit preset on the command line replaces the config's budgets.
    const ExperimentConfig p = o.preset == "paper" ? ExperimentConfig::paper() : ExperimentConfig::desk();
    c.n_targets = p.n_targets;
    c.qdt_shots_per_state_per_basis = p.qdt_shots_per_state_per_basis;
    c.qst_shots_per_basis = p.qst_shots_per_basis;
  }
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.estimator.empty()) c.estimator = parse_estimator(o.estimator);
  if (o.readout_only) c.readout_only = true;
  if (o.qdt_shots) c.qdt_shots_per_state_per_basis = *o.qdt_shots;
  if (o.qst_shots) {
    c.qst_shots_per_basis = *o.qst_shots;
    if (o.config_path.empty()) c.checkpoints.clear();
  }
  if (o.n_targets) c.n_targets = *o.n_targets;
  if (!o.noise.empty()) {
    Json j;
    try {
      j = Json::parse(o.noise);
    } catch (const Json::parse_error&) {
      throw SchemaError("--noise: invalid JSON");
    }
    c.noise = noise_spec_from_json(j);
  }
  c.validate();
  return c;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "inf") {
      out.push_back(INFINITY);
      continue;
    }
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string(what) + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw InvalidArgument(std::string(what) + ": empty list");
  return out;
}

std::string command_line(const std::vector<std::string>& args) {
  std::string s = "remqst";
  for (const auto& a : args) s += " " + a;
  return s;
}

int report(const ProtocolResult& r) {
  if (r.mitigated_curve) {
    std::cout << "mean saturation: mitigated " << format_number(r.mean_saturation_mitigated()) << ", unmitigated "
              << format_number(r.mean_saturation_unmitigated()) << "\n";
  }
  const std::string diag = r.convergence_diagnostic();
  if (!diag.empty()) std::cerr << "warning: " << diag << "\n";
  return r.numerical_failure() ? kExitNumerical : kExitOk;
}

fs::path out_dir(const std::string& out, const char* fallback) { return out.empty() ? fs::path(fallback) : fs::path(out); }

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Readout error mitigation by detector and state tomography", "remqst"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CommonOptions run_opts, sweep_opts, cal_opts, ingest_opts;
  auto* run_cmd = app.add_subcommand("run", "Simulate the full protocol");
  add_common(run_cmd, run_opts);

  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat the protocol over noise strengths");
  add_common(sweep_cmd, sweep_opts);
  std::string sweep_kind, sweep_strengths;
  sweep_cmd->add_option("--kind", sweep_kind, "Noise kind to sweep")->required();
  sweep_cmd->add_option("--strengths", sweep_strengths, "Comma-separated strengths")->required();

  auto* cal_cmd = app.add_subcommand("calibration-sweep", "Vary the total QDT budget");
  add_common(cal_cmd, cal_opts);
  std::string budgets_text;
  cal_cmd->add_option("--budgets", budgets_text, "Comma-separated total QDT shots; 'exact' for exact calibration")
      ->required();

  auto* qdt_cmd = app.add_subcommand("qdt", "Reconstruct a POVM from calibration counts");
  std::string qdt_counts, qdt_out, qdt_layout = "per_basis";
  double qdt_k = 3.0;
  qdt_cmd->add_option("counts", qdt_counts, "QDT counts (JSON)")->required()->check(CLI::ExistingFile);
  qdt_cmd->add_option("--out", qdt_out, "Output directory");
  qdt_cmd->add_option("--layout", qdt_layout, "Reconstruction layout")->check(CLI::IsMember({"per_basis", "joint"}));
  qdt_cmd->add_option("--coherence-k", qdt_k, "Coherence threshold multiplier")->check(CLI::PositiveNumber);

  auto* qst_cmd = app.add_subcommand("qst", "Reconstruct states from tomography counts");
  std::string qst_counts, qst_povm, qst_out, qst_estimator = "mle";
  std::uint64_t qst_seed = 1;
  qst_cmd->add_option("counts", qst_counts, "QST counts (JSON object or array)")->required()->check(CLI::ExistingFile);
  qst_cmd->add_option("--povm", qst_povm, "Measurement POVM (JSON); default ideal Pauli-6")->check(CLI::ExistingFile);
  qst_cmd->add_option("--out", qst_out, "Output directory");
  qst_cmd->add_option("--estimator", qst_estimator, "State estimator")->check(CLI::IsMember({"mle", "bme"}));
  qst_cmd->add_option("--seed", qst_seed, "Seed for the Bayesian estimator");

  auto* ingest_cmd = app.add_subcommand("ingest", "Run QDT and dual QST on recorded counts");
  add_common(ingest_cmd, ingest_opts);
  std::string ingest_qdt;
  std::vector<std::string> ingest_qst;
  ingest_cmd->add_option("--qdt", ingest_qdt, "QDT counts (JSON)")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--qst", ingest_qst, "QST counts (JSON object or array), repeatable")
      ->required()
      ->check(CLI::ExistingFile);

  auto* coh_cmd = app.add_subcommand("coherence", "Coherent-error report for a POVM");
  std::string coh_povm, coh_out;
  std::optional<std::uint64_t> coh_shots;
  std::optional<double> coh_threshold;
  coh_cmd->add_option("povm", coh_povm, "POVM (JSON)")->required()->check(CLI::ExistingFile);
  auto* shots_opt = coh_cmd->add_option("--shots", coh_shots, "Calibration shots per setting (threshold 3/sqrt(N))");
  coh_cmd->add_option("--threshold", coh_threshold, "Explicit off-diagonal threshold")->excludes(shots_opt);
  coh_cmd->add_option("--out", coh_out, "Output directory");

  auto* plot_cmd = app.add_subcommand("plot", "Render curves or a POVM heatmap as SVG");
  std::string plot_in, plot_out;
  bool plot_povm = false;
  plot_cmd->add_option("input", plot_in, "curves CSV, or POVM JSON with --povm")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("-o,--output", plot_out, "Output SVG")->required();
  plot_cmd->add_flag("--povm", plot_povm, "Input is a POVM; draw heatmaps");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    std::cout << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const std::string cmdline = command_line(args);
  try {
    if (*run_cmd) {
      const ExperimentConfig c = resolve_config(run_opts);
      const ProtocolResult r = run_protocol(c);
      write_protocol_outputs(r, cmdline);
      return report(r);
    }
    if (*sweep_cmd) {
      const ExperimentConfig c = resolve_config(sweep_opts);
      const SweepResult r = noise_sweep(parse_noise_kind(sweep_kind), parse_list(sweep_strengths, "--strengths"), c);
      write_sweep_outputs(r, c, cmdline);
      int code = kExitOk;
      for (const auto& e : r.entries) {
        std::cout << "strength " << format_number(e.strength) << ": mitigated "
                  << format_number(e.run.mean_saturation_mitigated()) << ", unmitigated "
                  << format_number(e.run.mean_saturation_unmitigated()) << "\n";
        if (e.run.numerical_failure()) {
          std::cerr << "warning: strength " << format_number(e.strength) << ": " << e.run.convergence_diagnostic()
                    << "\n";
          code = kExitNumerical;
        }
      }
      return code;
    }
    if (*cal_cmd) {
      const ExperimentConfig c = resolve_config(cal_opts);
      std::vector<std::optional<std::uint64_t>> budgets;
      std::stringstream in(budgets_text);
      std::string item;
      while (std::getline(in, item, ',')) {
        if (item == "exact") {
          budgets.emplace_back(std::nullopt);
        } else if (!item.empty() && item.find_first_not_of("0123456789") == std::string::npos) {
          budgets.emplace_back(std::stoull(item));
        } else {
          throw InvalidArgument("--budgets: '" + item + "' is neither a shot count nor 'exact'");
        }
      }
      const CalibrationSweepResult r = calibration_sweep(budgets, c);
      write_calibration_outputs(r, c, cmdline);
      std::cout << "unmitigated: " << format_number(r.mean_unmitigated) << "\n";
      for (const auto& p : r.points) {
        std::cout << (p.budget ? std::to_string(*p.budget) : std::string("exact")) << ": "
                  << format_number(p.mean_mitigated) << "\n";
      }
      return kExitOk;
    }
    if (*qdt_cmd) {
      const PauliQdtRecord record = pauli_qdt_record_from_json(read_json_file(qdt_counts));
      const PauliQdtResult r = reconstruct_pauli_detector(
          record, {}, qdt_layout == "joint" ? QdtLayout::joint : QdtLayout::per_basis);
      std::uint64_t min_shots = UINT64_MAX;
      for (const auto& row : record.counts) {
        for (const auto& pair : row) min_shots = std::min<std::uint64_t>(min_shots, pair[0] + pair[1]);
      }
      const CoherenceReport coherence =
          coherent_error_report(r.povm, pauli_basis_rotations(), shot_noise_threshold(std::max<std::uint64_t>(1, min_shots), qdt_k));
      const fs::path dir = out_dir(qdt_out, "remqst_qdt");
      write_file_atomic(dir / "povm_estm.json", to_json(r.povm).dump(2) + "\n");
      write_file_atomic(dir / "coherence_report.json", to_json(coherence).dump(2) + "\n");
      ExperimentConfig c;
      c.output_dir = dir;
      write_file_atomic(dir / "manifest.json",
                        run_manifest(cmdline, c, {"povm_estm.json", "coherence_report.json"}).dump(2) + "\n");
      for (const auto& rec : r.reconstructions) {
        if (!rec.converged) std::cerr << "warning: " << rec.diagnostic << "\n";
      }
      return r.converged() ? kExitOk : kExitNumerical;
    }
    if (*qst_cmd) {
      const Json j = read_json_file(qst_counts);
      std::vector<QstData> sets;
      if (j.is_array()) {
        for (const auto& item : j) sets.push_back(qst_data_from_json(item));
      } else {
        sets.push_back(qst_data_from_json(j));
      }
      if (sets.empty()) throw SchemaError("QST data: empty array");
      const Povm povm = qst_povm.empty() ? pauli6_povm() : povm_from_json(read_json_file(qst_povm));
      EstimatorOptions options;
      options.kind = parse_estimator(qst_estimator);
      Json estimates = Json::array();
      std::ostringstream csv;
      csv << "strength,series,target,shots,infidelity\n";
      int stalled = 0;
      for (std::size_t k = 0; k < sets.size(); ++k) {
        SeededRng rng = SeededRng(qst_seed).split(k);
        const QstData& d = sets[k];
        const std::string label = d.target_label.empty() ? "data_" + std::to_string(k) : d.target_label;
        const CurveRun run = d.target_state ? reconstruct_checkpoints(*d.target_state, povm, d, options, rng)
                                            : estimate_checkpoints(povm, d, options, rng);
        stalled += run.stalled;
        estimates.push_back({{"target", label}, {"estimate", to_json(run.estimates.back())}});
        for (std::size_t i = 0; i < run.infidelities.size(); ++i) {
          csv << ",estimate," << label << ',' << d.checkpoints[i] << ',' << format_number(run.infidelities[i]) << '\n';
        }
      }
      const fs::path dir = out_dir(qst_out, "remqst_qst");
      write_file_atomic(dir / "estimates.json", estimates.dump(2) + "\n");
      write_file_atomic(dir / "curves.csv", csv.str());
      ExperimentConfig c;
      c.seed = qst_seed;
      c.estimator = options.kind;
      c.output_dir = dir;
      write_file_atomic(dir / "manifest.json",
                        run_manifest(cmdline, c, {"estimates.json", "curves.csv"}).dump(2) + "\n");
      if (stalled > 0) {
        std::cerr << "warning: " << stalled << " reconstruction(s) stopped away from a stationary point\n";
        return kExitNumerical;
      }
      return kExitOk;
    }
    if (*ingest_cmd) {
      const ExperimentConfig c = resolve_config(ingest_opts);
      const PauliQdtRecord record = pauli_qdt_record_from_json(read_json_file(ingest_qdt));
      std::vector<QstData> sets;
      for (const auto& path : ingest_qst) {
        const Json j = read_json_file(path);
        try {
          if (j.is_array()) {
            for (const auto& item : j) sets.push_back(qst_data_from_json(item));
          } else {
            sets.push_back(qst_data_from_json(j));
          }
        } catch (const SchemaError& e) {
          throw SchemaError(path + ": " + e.what());
        }
      }
      const ProtocolResult r = ingest_experiment(record, sets, c);
      write_protocol_outputs(r, cmdline);
      return report(r);
    }
    if (*coh_cmd) {
      const Povm povm = povm_from_json(read_json_file(coh_povm));
      const double threshold = coh_threshold ? *coh_threshold : shot_noise_threshold(coh_shots ? *coh_shots : 10000);
      const CoherenceReport report = coherent_error_report(povm, pauli_basis_rotations(), threshold);
      const std::string text = to_json(report).dump(2) + "\n";
      if (coh_out.empty()) {
        std::cout << text;
      } else {
        write_file_atomic(fs::path(coh_out) / "coherence_report.json", text);
        ExperimentConfig c;
        c.output_dir = coh_out;
        write_file_atomic(fs::path(coh_out) / "manifest.json",
                          run_manifest(cmdline, c, {"coherence_report.json"}).dump(2) + "\n");
      }
      for (const auto& e : report.effects) {
        std::cerr << e.label << ": max off-diagonal " << format_number(e.max_off_diagonal)
                  << (e.classical ? "" : " (coherent)") << "\n";
      }
      return kExitOk;
    }
    if (*plot_cmd) {
      if (plot_povm) plot_povm_heatmap(plot_in, plot_out);
      else plot_curves(plot_in, plot_out);
      fs::path manifest = plot_out;
      manifest += ".manifest.json";
      ExperimentConfig c;
      c.output_dir = fs::path(plot_out).parent_path();
      write_file_atomic(manifest, run_manifest(cmdline, c, {fs::path(plot_out).filename().string()}).dump(2) + "\n");
      return kExitOk;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace remqst::cli
