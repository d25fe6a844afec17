#include "latwalk_cli/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include "CLI11.hpp"
#endif
#include "latwalk/error.hpp"
#include "latwalk/model_io.hpp"
#include "latwalk/scaling.hpp"

namespace latwalk::cli {

using nlohmann::json;

WalkModel resolve_model(const json& ref, const std::filesystem::path& base_dir) {
  if (ref.is_object()) return parse_model(ref.dump());
  if (!ref.is_string()) fail(ErrorCode::ParseError, "model must be a preset name, an object or a file path");
  const auto name = ref.get<std::string>();
  if (name == "srw") return presets::srw();
  if (name == "range2") return presets::range2();
  if (name == "skewed") return presets::skewed();
  if (name == "skewed_normalized") return presets::skewed_normalized();
  if (name == "diagonal") return presets::diagonal();
  if (name == "heavy") return presets::heavy_tail();
  std::filesystem::path path(name);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  return load_model(path.string());
}

const ManifestEntry& Manifest::find(const std::string& id) const {
  for (const auto& e : experiments)
    if (e.id == id) return e;
  fail(ErrorCode::InvalidArgument, "unknown experiment id '" + id + "'");
}

namespace {

const std::set<std::string> kKinds{"identities", "log_asymptotics", "gottahit",    "halfline",
                                   "line",       "strip",           "factorization", "entry_point",
                                   "shifted",    "overshoot",       "beurling"};

template <class T>
T param(const json& p, const char* key, T fallback) {
  if (!p.contains(key)) return fallback;
  try {
    return p.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("parameter '") + key + "': " + e.what());
  }
}

std::vector<DensePolicy> policies(const json& p, std::vector<DensePolicy> fallback) {
  if (!p.contains("policies")) return fallback;
  const auto seed = param<std::uint64_t>(p, "policy_seed", 0);
  std::vector<DensePolicy> out;
  for (const auto& name : param<std::vector<std::string>>(p, "policies", {})) out.push_back(parse_policy(name, seed));
  return out;
}

BeurlingParams beurling_params(const json& p) {
  BeurlingParams b;
  b.kappa = param(p, "kappa", b.kappa);
  b.k_grid = param(p, "k_grid", b.k_grid);
  b.n_grid = param(p, "n_grid", b.n_grid);
  b.policies = policies(p, b.policies);
  b.samples = param(p, "samples", b.samples);
  b.spread_max = param(p, "spread_max", b.spread_max);
  b.spearman_max = param(p, "spearman_max", b.spearman_max);
  b.exact_n = param(p, "exact_n", b.exact_n);
  b.exact_k = param(p, "exact_k", b.exact_k);
  b.exact_samples = param(p, "exact_samples", b.exact_samples);
  return b;
}

void validate_entry(const ManifestEntry& e) {
  if (e.models.empty()) fail(ErrorCode::ParseError, "experiment '" + e.id + "' has no model");
  if (e.kind == "beurling") {
    const auto b = beurling_params(e.params);
    for (int k : b.k_grid)
      for (int n : b.n_grid)
        if (2 * k > n)
          fail(ErrorCode::InvalidArgument, "experiment '" + e.id + "': beurling grid needs k <= n/2, got k=" +
                                               std::to_string(k) + " n=" + std::to_string(n));
  }
}

}  // namespace

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorCode::ParseError, "manifest line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                                    e.what());
  }
  if (!doc.is_object() || !doc.contains("experiments") || !doc.at("experiments").is_array())
    fail(ErrorCode::ParseError, "manifest needs an \"experiments\" array");
  Manifest m;
  if (doc.contains("seed")) m.seed = param<std::uint64_t>(doc, "seed", 0);
  std::set<std::string> ids;
  for (const auto& item : doc.at("experiments")) {
    if (!item.is_object() || !item.contains("id")) fail(ErrorCode::ParseError, "experiment entries need an \"id\"");
    ManifestEntry e;
    e.id = param<std::string>(item, "id", "");
    e.kind = param<std::string>(item, "kind", e.id);
    if (!kKinds.count(e.kind)) fail(ErrorCode::ParseError, "experiment '" + e.id + "' has unknown kind '" + e.kind + "'");
    if (!ids.insert(e.id).second) fail(ErrorCode::ParseError, "duplicate experiment id '" + e.id + "'");
    if (item.contains("models")) {
      for (const auto& ref : item.at("models")) e.models.push_back(resolve_model(ref, base_dir));
    } else {
      e.models.push_back(resolve_model(item.value("model", json("srw")), base_dir));
    }
    e.params = item.value("params", json::object());
    validate_entry(e);
    m.experiments.push_back(std::move(e));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path.string()), path.parent_path());
}

ExperimentReport run_entry(const ManifestEntry& entry, const RunOptions& options) {
  const auto& p = entry.params;
  const WalkModel& model = entry.models.front();
  ExperimentReport report;
  if (entry.kind == "identities") {
    IdentityParams q;
    q.radius = param(p, "radius", q.radius);
    q.segment_lo = param(p, "segment_lo", q.segment_lo);
    q.segment_hi = param(p, "segment_hi", q.segment_hi);
    q.kernel_checks = param(p, "kernel_checks", q.kernel_checks);
    q.harmonic_radius = param(p, "harmonic_radius", q.harmonic_radius);
    q.identity_tolerance = param(p, "identity_tolerance", q.identity_tolerance);
    q.kernel_tolerance = param(p, "kernel_tolerance", q.kernel_tolerance);
    report = exact_identities(model, q);
  } else if (entry.kind == "log_asymptotics") {
    LogParams q;
    q.n_grid = param(p, "n_grid", q.n_grid);
    q.bracket_width = param(p, "bracket_width", q.bracket_width);
    q.spread_max = param(p, "spread_max", q.spread_max);
    report = exp_log_asymptotics(model, q);
  } else if (entry.kind == "gottahit") {
    GottahitParams q;
    q.kappa = param(p, "kappa", q.kappa);
    q.n_grid = param(p, "n_grid", q.n_grid);
    q.policies = policies(p, q.policies);
    q.spread_max = param(p, "spread_max", q.spread_max);
    report = exp_gottahit(model, q, options);
  } else if (entry.kind == "halfline") {
    HalflineParams q;
    q.kappa = param(p, "kappa", q.kappa);
    q.n_grid = param(p, "n_grid", q.n_grid);
    q.samples = param(p, "samples", q.samples);
    q.slope_lo = param(p, "slope_lo", q.slope_lo);
    q.slope_hi = param(p, "slope_hi", q.slope_hi);
    q.compare_n = param(p, "compare_n", q.compare_n);
    report = exp_halfline(model, q, options);
  } else if (entry.kind == "line") {
    LineParams q;
    q.kappa = param(p, "kappa", q.kappa);
    q.n_grid = param(p, "n_grid", q.n_grid);
    q.samples = param(p, "samples", q.samples);
    q.slope_lo = param(p, "slope_lo", q.slope_lo);
    q.slope_hi = param(p, "slope_hi", q.slope_hi);
    q.spread_max = param(p, "spread_max", q.spread_max);
    q.exact_n = param(p, "exact_n", q.exact_n);
    q.exact_samples = param(p, "exact_samples", q.exact_samples);
    report = exp_line(model, q, options);
  } else if (entry.kind == "strip") {
    StripParams q;
    q.kappa = param(p, "kappa", q.kappa);
    q.n_grid = param(p, "n_grid", q.n_grid);
    q.samples = param(p, "samples", q.samples);
    q.slope_lo = param(p, "slope_lo", q.slope_lo);
    q.slope_hi = param(p, "slope_hi", q.slope_hi);
    report = exp_strip(entry.models, q, options);
  } else if (entry.kind == "factorization") {
    FactorizationParams q;
    q.kappa = param(p, "kappa", q.kappa);
    q.n_list = param(p, "n_list", q.n_list);
    q.samples = param(p, "samples", q.samples);
    q.sigmas = param(p, "sigmas", q.sigmas);
    report = exp_factorization(entry.models, q, options);
  } else if (entry.kind == "entry_point") {
    EntryParams q;
    q.kappa = param(p, "kappa", q.kappa);
    q.n_grid_minus = param(p, "n_grid_minus", q.n_grid_minus);
    q.n_grid_plus = param(p, "n_grid_plus", q.n_grid_plus);
    q.samples_minus = param(p, "samples_minus", q.samples_minus);
    q.samples_plus = param(p, "samples_plus", q.samples_plus);
    q.trunc_factor = param(p, "trunc_factor", q.trunc_factor);
    q.spread_max = param(p, "spread_max", q.spread_max);
    q.spearman_max = param(p, "spearman_max", q.spearman_max);
    report = exp_entry_point(model, q, options);
  } else if (entry.kind == "shifted") {
    ShiftedParams q;
    q.kappa = param(p, "kappa", q.kappa);
    q.j_list = param(p, "j_list", q.j_list);
    q.n_grid = param(p, "n_grid", q.n_grid);
    q.samples = param(p, "samples", q.samples);
    q.spread_max = param(p, "spread_max", q.spread_max);
    report = exp_shifted(model, q, options);
  } else if (entry.kind == "overshoot") {
    OvershootParams q;
    q.n_grid = param(p, "n_grid", q.n_grid);
    q.samples = param(p, "samples", q.samples);
    q.exponent_max = param(p, "exponent_max", q.exponent_max);
    report = exp_overshoot(model, q, options);
  } else if (entry.kind == "beurling") {
    report = exp_beurling(model, beurling_params(p), options);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown experiment kind '" + entry.kind + "'");
  }
  report.experiment = entry.id;
  for (auto& row : report.rows) row.experiment_id = entry.id;
  return report;
}

namespace {

void print_checks(const ExperimentReport& report, std::ostream& out) {
  for (const auto& c : report.checks)
    out << (c.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(36) << c.name << ' ' << c.detail << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  f << text;
  if (!f) fail(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

int report_error(const Error& e, std::ostream& err) {
  err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
  return 1;
}

}  // namespace

int cmd_verify(const VerifyConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const WalkModel model = config.model ? resolve_model(json(*config.model)) : presets::srw();
    model.require_admissible();
    IdentityParams params;
    params.identity_tolerance = config.identity_tolerance;
    params.kernel_tolerance = config.kernel_tolerance;
    params.kernel_checks = config.kernel_checks;
    const auto report = exact_identities(model, params);
    out << "model " << model.name() << " hash=" << model.hash() << '\n';
    print_checks(report, out);
    for (const auto& [key, value] : report.metrics) out << "  " << key << " = " << std::setprecision(6) << value << '\n';
    return report.pass() ? 0 : 1;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const auto manifest = load_manifest(config.manifest);
    ManifestEntry entry = manifest.find(config.experiment);
    if (config.model) {
      entry.models = {resolve_model(json(*config.model))};
      validate_entry(entry);
    }
    RunOptions options;
    options.seed = config.seed.value_or(manifest.seed.value_or(options.seed));
    options.workers = config.workers;
    options.chunk = config.chunk;
    options.samples_override = config.samples_override;

    const auto start = std::chrono::steady_clock::now();
    const auto report = run_entry(entry, options);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::filesystem::create_directories(config.out_dir);
    const auto csv = config.out_dir / (entry.id + ".csv");
    const auto summary = config.out_dir / (entry.id + ".json");
    write_text(csv, results_csv(report));
    write_text(summary, summary_json(report, seconds));
    print_checks(report, out);
    out << "wrote " << csv.string() << " and " << summary.string() << '\n';
    return report.pass() ? 0 : 1;
  } catch (const Error& e) {
    return report_error(e, err);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error [IoError]: " << e.what() << '\n';
    return 1;
  }
}

int cmd_fit(const std::string& csv, double target, const std::string& label, std::ostream& out, std::ostream& err) {
  try {
    const auto table = read_scaling_csv(csv, label);
    const auto fit = fit_power(table, target);
    out << "label " << table.label << " (" << table.rows.size() << " rows)\n"
        << std::setprecision(6) << "slope " << fit.slope << " +- " << fit.slope_stderr << '\n'
        << "intercept " << fit.intercept << '\n'
        << "ratio p*n^" << -target << " in [" << fit.ratio_min << ", " << fit.ratio_max << "], spread " << fit.spread
        << '\n';
    return 0;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Lattice random walk hitting-probability experiments"};
  app.require_subcommand(1);

  VerifyConfig verify;
  auto* v = app.add_subcommand("verify", "Run the exact-identity suite");
  v->add_option("--model", verify.model, "Model preset name or JSON model file");
  v->add_option("--identity-tolerance", verify.identity_tolerance, "Tolerance for solver identities");
  v->add_option("--kernel-tolerance", verify.kernel_tolerance, "Tolerance for potential-kernel identities");
  v->add_flag("!--no-kernel", verify.kernel_checks, "Skip the potential-kernel checks");

  RunConfig run;
  std::string out_dir;
  if (const char* env = std::getenv("LATWALK_OUT")) out_dir = env;
  if (out_dir.empty()) out_dir = "results";
  std::uint64_t samples = 0;
  auto* r = app.add_subcommand("run", "Run one experiment from a manifest");
  std::string manifest;
  r->add_option("--manifest", manifest, "Experiment manifest (JSON)")->required()->check(CLI::ExistingFile);
  r->add_option("--experiment", run.experiment, "Experiment id")->required();
  r->add_option("--out", out_dir, "Output directory (default $LATWALK_OUT or ./results)");
  r->add_option("--model", run.model, "Replace the experiment's model (preset or file)");
  r->add_option("--seed", run.seed, "Master seed (default: manifest seed)");
  r->add_option("--workers", run.workers, "Worker threads (0 = all cores)");
  r->add_option("--chunk", run.chunk, "Trajectories per chunk")->check(CLI::PositiveNumber);
  auto* so = r->add_option("--samples-override", samples, "Replace every Monte Carlo sample count")
                 ->check(CLI::PositiveNumber);

  std::string csv, label;
  double target = -0.5;
  auto* f = app.add_subcommand("fit", "Fit a power law to one label of a results CSV");
  f->add_option("--csv", csv, "Results CSV")->required();
  f->add_option("--target", target, "Target exponent for the ratio diagnostic");
  f->add_option("--label", label, "Label to fit (default: first)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (v->parsed()) return cmd_verify(verify, std::cout, std::cerr);
  if (r->parsed()) {
    run.manifest = manifest;
    run.out_dir = out_dir;
    if (so->count()) run.samples_override = samples;
    return cmd_run(run, std::cout, std::cerr);
  }
  return cmd_fit(csv, target, label, std::cout, std::cerr);
}

}  // namespace latwalk::cli
