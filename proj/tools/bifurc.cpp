// bifurc: mean-variance portfolio selection through simulated bifurcation.
//
//   bifurc solve   --problem p.json | --prices prices.csv | --ising m.json
//   bifurc oracle  --problem p.json | --ising m.json
//   bifurc ingest  prices.csv -o problem.json
//   bifurc study   --preset accuracy-grid --out-dir results/
//   bifurc convert --problem p.json | --ising m.json --gamma G --alpha A
//
// Exit codes: 0 success, 1 input or configuration error, 2 solver did not converge.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "bifurc/bifurc.hpp"
#include "bifurc/io.hpp"

namespace {

using bifurc::io::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bifurc::ConfigError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Provenance block attached to every output document.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)), started_(utc_now()) {}

  void input(const std::string& path) { inputs_.push_back({{"path", path}, {"sha256", sha256_file(path)}}); }
  void set(const std::string& key, json value) { config_[key] = std::move(value); }

  json finish() const {
    return json{{"command", command_},
                {"version", bifurc::kVersion},
                {"config", config_},
                {"inputs", inputs_},
                {"started_at", started_},
                {"finished_at", utc_now()}};
  }

 private:
  std::string command_;
  std::string started_;
  json config_ = json::object();
  json inputs_ = json::array();
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bifurc::ConfigError("cannot write " + path);
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Solver flags shared by solve and study; each overrides the config file.
struct SolverFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<int> msym;
  std::optional<std::uint64_t> sample_period;
  std::optional<std::size_t> window;
  std::optional<std::uint64_t> max_steps;
  std::optional<std::string> xi0;
  std::optional<double> pump_slope;
  std::optional<double> field_coefficient;

  void attach(CLI::App* app) {
    const bifurc::SolverConfig d;
    app->add_option("--config", config_path, "Solver config JSON file");
    app->add_option("--seed", seed, "Seed for every random draw")->default_str(std::to_string(d.seed));
    app->add_option("--dt", dt, "Euler macro-step")->default_str(CLI::detail::to_string(d.dt));
    app->add_option("--msym", msym, "Symplectic sub-steps per macro-step (>= 2)")
        ->default_str(std::to_string(d.substeps));
    app->add_option("--sample-period", sample_period, "Steps between stop-window samples")
        ->default_str(std::to_string(d.sample_period));
    app->add_option("--window", window, "Samples kept in the stop window")->default_str(std::to_string(d.window));
    app->add_option("--max-steps", max_steps, "Hard cap on macro-steps")->default_str(std::to_string(d.max_steps));
    app->add_option("--xi0", xi0, "Coupling scale: auto or a positive number")->default_str("auto");
    app->add_option("--pump-slope", pump_slope, "Pump schedule slope")->default_str(CLI::detail::to_string(d.pump_slope));
    app->add_option("--field-coefficient", field_coefficient, "Field weight c in the kick J x - c A(t) h")
        ->default_str(CLI::detail::to_string(d.field_coefficient));
  }

  bifurc::SolverConfig resolve(Manifest* manifest) const {
    bifurc::SolverConfig c;
    if (!config_path.empty()) {
      c = bifurc::io::solver_config_from_json(bifurc::io::read_json_file(config_path));
      if (manifest) manifest->input(config_path);
    }
    if (seed) c.seed = *seed;
    if (dt) c.dt = *dt;
    if (msym) c.substeps = *msym;
    if (sample_period) c.sample_period = *sample_period;
    if (window) c.window = *window;
    if (max_steps) c.max_steps = *max_steps;
    if (pump_slope) c.pump_slope = *pump_slope;
    if (field_coefficient) c.field_coefficient = *field_coefficient;
    if (xi0) {
      if (*xi0 == "auto") {
        c.xi0.reset();
      } else {
        try {
          std::size_t used = 0;
          c.xi0 = std::stod(*xi0, &used);
          if (used != xi0->size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw bifurc::ConfigError("--xi0 must be 'auto' or a number");
        }
      }
    }
    bifurc::validate(c);
    return c;
  }
};

// Problem source and overrides shared by solve, oracle and convert.
struct ProblemFlags {
  std::string problem_path;
  std::string prices_path;
  std::string ising_path;
  std::optional<double> gamma;
  std::optional<int> alpha;
  std::optional<double> capital;
  std::optional<std::string> from;
  std::optional<std::string> to;
  std::optional<std::size_t> last;
  std::string mu_mode = "mean";

  void attach(CLI::App* app, bool allow_prices) {
    auto* src = app->add_option_group("source");
    src->add_option("--problem", problem_path, "Markowitz problem JSON");
    if (allow_prices) src->add_option("--prices", prices_path, "Closing-price CSV (date,TICKER,...)");
    src->add_option("--ising", ising_path, "Ising model JSON");
    src->require_option(1);
    app->add_option("--gamma", gamma, "Risk aversion (default 1.0, or the problem file's value)");
    app->add_option("--alpha", alpha, "Bits per weight (default 1, or the problem file's value)");
    app->add_option("--capital", capital, "Capital budget; derives alpha = floor(log2(C/N)) + 1");
    if (allow_prices) attach_window(app);
  }

  void attach_window(CLI::App* app) {
    app->add_option("--from", from, "First date kept (YYYY-MM-DD)");
    app->add_option("--to", to, "Last date kept (YYYY-MM-DD)");
    app->add_option("--last", last, "Keep only the trailing N price rows");
    app->add_option("--mu-mode", mu_mode, "Expected-return estimator")->check(CLI::IsMember({"mean", "last"}));
  }

  int pick_alpha(int file_alpha, std::size_t assets) const {
    if (alpha && capital) throw bifurc::ConfigError("give either --alpha or --capital, not both");
    if (capital) return bifurc::alpha_from_capital(*capital, assets);
    return alpha.value_or(file_alpha);
  }

  json window_json() const {
    return json{{"from", from ? json(*from) : json(nullptr)},
                {"to", to ? json(*to) : json(nullptr)},
                {"last", last ? json(*last) : json(nullptr)},
                {"mu_mode", mu_mode}};
  }

  bifurc::MarkowitzProblem from_prices(const std::string& path, Manifest& m, json* extra) const {
    using namespace bifurc::markets;
    m.input(path);
    const IngestResult ing = ingest_prices(path);
    const PriceSeries window = select_window(ing.series, from, to, last);
    const Moments mom = estimate_moments(daily_returns(window), mu_mode == "last" ? MuMode::last_day : MuMode::mean);
    const int a = pick_alpha(1, window.assets());
    m.set("window", window_json());
    if (extra) {
      (*extra)["dropped_rows"] = ing.dropped_rows;
      (*extra)["price_rows"] = window.days();
      (*extra)["first_date"] = window.dates.empty() ? "" : window.dates.front();
      (*extra)["last_date"] = window.dates.empty() ? "" : window.dates.back();
    }
    return assemble_problem(mom.mu, mom.sigma, gamma.value_or(1.0), a, window.tickers);
  }

  bifurc::MarkowitzProblem load_problem(Manifest& m) const {
    if (!prices_path.empty()) return from_prices(prices_path, m, nullptr);
    m.input(problem_path);
    bifurc::MarkowitzProblem p = bifurc::io::problem_from_json(bifurc::io::read_json_file(problem_path));
    if (gamma) p = p.with_gamma(*gamma);
    const int a = pick_alpha(p.alpha(), p.assets());
    if (a != p.alpha()) p = p.with_alpha(a);
    return p;
  }

  bifurc::IsingModel load_ising(Manifest& m) const {
    m.input(ising_path);
    return bifurc::io::ising_from_json(bifurc::io::read_json_file(ising_path));
  }
};

json problem_config(const bifurc::MarkowitzProblem& p) {
  return json{{"gamma", p.gamma()}, {"alpha", p.alpha()}, {"assets", p.assets()}};
}

std::vector<std::string> selected(const bifurc::WeightVector& w, const std::vector<std::string>& tickers) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0) out.push_back(i < tickers.size() ? tickers[i] : "asset_" + std::to_string(i));
  return out;
}

std::string weights_csv(const bifurc::WeightVector& w, const std::vector<std::string>& tickers) {
  std::ostringstream s;
  bifurc::io::write_weights_csv(s, w, tickers);
  return s.str();
}

struct OutputFlags {
  std::string output;
  std::string csv;
  std::string trace;
  std::string format = "json";

  void attach(CLI::App* app, bool with_trace) {
    app->add_option("-o,--output", output, "Result file (default stdout)");
    app->add_option("--csv", csv, "Also write asset_index,ticker,weight CSV here");
    if (with_trace) app->add_option("--trace", trace, "Write the sampled evolution as CSV");
    app->add_option("--format", format, "Result format")->check(CLI::IsMember({"json", "csv"}));
  }
};

int cmd_solve(const ProblemFlags& pf, const SolverFlags& sf, const OutputFlags& of) {
  Manifest manifest("solve");
  bifurc::SolverConfig cfg = sf.resolve(&manifest);
  cfg.record_trace = cfg.record_trace || !of.trace.empty();
  json doc;

  if (!pf.ising_path.empty()) {
    const bifurc::IsingModel model = pf.load_ising(manifest);
    const bifurc::SolverResult r = bifurc::solve(model, cfg);
    manifest.set("solver", bifurc::io::to_json(cfg));
    doc = json{{"spins", r.spins.values()},
               {"ising_energy", r.energy},
               {"converged", r.converged},
               {"steps", r.steps_run},
               {"xi0", r.xi0}};
    if (!of.trace.empty()) {
      std::ostringstream t;
      bifurc::io::write_trace_csv(t, r);
      write_text(of.trace, t.str());
    }
    doc["manifest"] = manifest.finish();
    write_text(of.output, dump(doc));
    return r.converged ? kExitOk : kExitNotConverged;
  }

  const bifurc::MarkowitzProblem p = pf.load_problem(manifest);
  const bifurc::IsingReduction red = bifurc::markowitz_to_ising(p);
  const bifurc::SolverResult r = bifurc::solve(red.model, cfg);
  const bifurc::WeightVector w = bifurc::decode_spins(r.spins, p.assets(), p.alpha());
  manifest.set("problem", problem_config(p));
  manifest.set("solver", bifurc::io::to_json(cfg));

  doc = json{{"weights", w.values()},
             {"utility", bifurc::utility(p, w)},
             {"ising_energy", r.energy},
             {"ising_offset", red.offset},
             {"converged", r.converged},
             {"steps", r.steps_run},
             {"xi0", r.xi0},
             {"spins", r.spins.values()}};
  if (!p.tickers().empty()) doc["tickers"] = p.tickers();
  if (p.alpha() == 1) doc["selected"] = selected(w, p.tickers());
  doc["manifest"] = manifest.finish();

  if (!of.trace.empty()) {
    std::ostringstream t;
    bifurc::io::write_trace_csv(t, r);
    write_text(of.trace, t.str());
  }
  if (!of.csv.empty()) write_text(of.csv, weights_csv(w, p.tickers()));
  write_text(of.output, of.format == "csv" ? weights_csv(w, p.tickers()) : dump(doc));
  if (!r.converged) std::cerr << "bifurc: no bifurcation within " << cfg.max_steps << " steps\n";
  return r.converged ? kExitOk : kExitNotConverged;
}

int cmd_oracle(const ProblemFlags& pf, const OutputFlags& of) {
  Manifest manifest("oracle");
  const std::size_t ceiling = bifurc::oracle_ceiling_from_env();
  manifest.set("ceiling", ceiling);
  json doc;

  if (!pf.ising_path.empty()) {
    const bifurc::IsingModel model = pf.load_ising(manifest);
    bifurc::OracleOptions oo;
    oo.ceiling = ceiling;
    const bifurc::GroundState gs = bifurc::brute_force_ground_state(model, oo);
    doc = json{{"spins", gs.spins.values()}, {"ising_energy", gs.energy}};
    doc["manifest"] = manifest.finish();
    write_text(of.output, dump(doc));
    return kExitOk;
  }

  const bifurc::MarkowitzProblem p = pf.load_problem(manifest);
  manifest.set("problem", problem_config(p));
  const bifurc::WeightOptimum best = bifurc::brute_force_weights(p, ceiling);
  const bifurc::IsingReduction red = bifurc::markowitz_to_ising(p);
  doc = json{{"weights", best.weights.values()},
             {"utility", best.utility},
             {"ising_energy", bifurc::energy(red.model, bifurc::encode_weights(best.weights, p.alpha()))}};
  if (!p.tickers().empty()) doc["tickers"] = p.tickers();
  if (p.alpha() == 1) doc["selected"] = selected(best.weights, p.tickers());
  doc["manifest"] = manifest.finish();
  if (!of.csv.empty()) write_text(of.csv, weights_csv(best.weights, p.tickers()));
  write_text(of.output, of.format == "csv" ? weights_csv(best.weights, p.tickers()) : dump(doc));
  return kExitOk;
}

int cmd_ingest(const std::string& prices, const ProblemFlags& pf, const std::string& output) {
  Manifest manifest("ingest");
  json extra;
  const bifurc::MarkowitzProblem p = pf.from_prices(prices, manifest, &extra);
  manifest.set("problem", problem_config(p));
  json doc = bifurc::io::to_json(p);
  doc["ingest"] = extra;
  doc["manifest"] = manifest.finish();
  write_text(output, dump(doc));
  return kExitOk;
}

bifurc::bench::StudySpec preset(const std::string& name) {
  if (name == "accuracy-grid") return bifurc::bench::accuracy_grid_preset();
  if (name == "gap-grid") return bifurc::bench::gap_grid_preset();
  if (name == "onebit-curve") return bifurc::bench::onebit_curve_preset();
  throw bifurc::ConfigError("unknown preset '" + name + "' (accuracy-grid, gap-grid, onebit-curve)");
}

struct StudyFlags {
  std::string spec_path;
  std::string preset_name;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out_dir = ".";
};

int cmd_study(const StudyFlags& f) {
  Manifest manifest("study");
  bifurc::bench::StudySpec spec;
  std::string preset_name = f.preset_name;
  json spec_json;
  if (!f.spec_path.empty()) {
    manifest.input(f.spec_path);
    spec_json = bifurc::io::read_json_file(f.spec_path);
    if (spec_json.is_object() && spec_json.contains("preset")) preset_name = spec_json.at("preset").get<std::string>();
  }
  if (!preset_name.empty()) spec = preset(preset_name);
  if (!spec_json.is_null()) spec = bifurc::io::study_from_json(spec_json, spec);
  if (f.trials) spec.trials = *f.trials;
  if (f.seed) spec.seed = *f.seed;
  if (f.threads) spec.threads = *f.threads;
  spec.ceiling = bifurc::oracle_ceiling_from_env();
  if (spec.grid.empty()) throw bifurc::ConfigError("study needs --spec or --preset");

  const bifurc::bench::StudyReport report = bifurc::bench::run_study(spec);
  manifest.set("study", bifurc::io::to_json(spec));
  if (!preset_name.empty()) manifest.set("preset", preset_name);

  std::filesystem::create_directories(f.out_dir);
  const std::filesystem::path dir(f.out_dir);
  json doc = bifurc::io::to_json(report);
  doc["timing"] = bifurc::io::timing_json(report);
  doc["manifest"] = manifest.finish();
  write_text((dir / "report.json").string(), dump(doc));
  std::ostringstream summary;
  std::ostringstream trials;
  std::ostringstream curve;
  bifurc::io::write_summary_csv(summary, report);
  bifurc::io::write_trials_csv(trials, report);
  bifurc::io::write_accuracy_curve_csv(curve, report);
  write_text((dir / "summary.csv").string(), summary.str());
  write_text((dir / "trials.csv").string(), trials.str());
  write_text((dir / "accuracy_curve.csv").string(), curve.str());

  std::printf("%6s %5s %7s %10s %14s %14s %9s\n", "assets", "bits", "trials", "exact[%]", "gapE[1e-4]",
              "gapU[1e-4]", "hamming");
  for (const auto& c : report.cells)
    std::printf("%6zu %5d %7zu %10.1f %14.4f %14.4f %9.4f\n", c.cell.assets, c.cell.alpha, c.trials,
                c.exact_match_pct, c.mean_rel_gap_ising * 1e4, c.mean_rel_gap_utility * 1e4,
                c.mean_hamming_accuracy);
  return kExitOk;
}

int cmd_convert(const ProblemFlags& pf, const std::string& output) {
  Manifest manifest("convert");
  json doc;
  if (!pf.ising_path.empty()) {
    if (!pf.gamma || !(pf.alpha || pf.capital)) throw bifurc::ConfigError("converting an Ising model needs --gamma and --alpha");
    const bifurc::IsingModel model = pf.load_ising(manifest);
    const int a = pf.alpha ? *pf.alpha : 0;
    if (a == 0) throw bifurc::ConfigError("converting an Ising model needs --alpha");
    doc = bifurc::io::to_json(bifurc::ising_to_markowitz(model, *pf.gamma, a));
  } else {
    const bifurc::MarkowitzProblem p = pf.load_problem(manifest);
    const bifurc::IsingReduction red = bifurc::markowitz_to_ising(p);
    manifest.set("problem", problem_config(p));
    doc = bifurc::io::to_json(red.model);
    doc["offset"] = red.offset;
  }
  doc["manifest"] = manifest.finish();
  write_text(output, dump(doc));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Portfolio optimisation on Ising machines via simulated bifurcation", "bifurc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bifurc::kVersion);

  ProblemFlags solve_pf, oracle_pf, convert_pf, ingest_pf;
  SolverFlags solve_sf;
  OutputFlags solve_of, oracle_of;

  auto* solve = app.add_subcommand("solve", "Optimise a portfolio (or raw Ising model) with simulated bifurcation");
  solve_pf.attach(solve, true);
  solve_sf.attach(solve);
  solve_of.attach(solve, true);

  auto* oracle = app.add_subcommand("oracle", "Exact optimum by exhaustive enumeration");
  oracle_pf.attach(oracle, false);
  oracle_of.attach(oracle, false);

  std::string ingest_input;
  std::string ingest_output;
  auto* ingest = app.add_subcommand("ingest", "Estimate returns and covariance from a closing-price CSV");
  ingest->add_option("prices", ingest_input, "Closing-price CSV (date,TICKER,...)")->required();
  ingest->add_option("--gamma", ingest_pf.gamma, "Risk aversion")->default_str("1");
  ingest->add_option("--alpha", ingest_pf.alpha, "Bits per weight")->default_str("1");
  ingest->add_option("--capital", ingest_pf.capital, "Capital budget; derives alpha");
  ingest_pf.attach_window(ingest);
  ingest->add_option("-o,--output", ingest_output, "Problem JSON (default stdout)");

  StudyFlags study_f;
  auto* study = app.add_subcommand("study", "Accuracy study against the exhaustive oracle");
  auto* study_src = study->add_option_group("source");
  study_src->add_option("--spec", study_f.spec_path, "Study spec JSON");
  study_src->add_option("--preset", study_f.preset_name, "accuracy-grid | gap-grid | onebit-curve");
  study_src->require_option(1, 2);
  study->add_option("--trials", study_f.trials, "Trials per cell");
  study->add_option("--seed", study_f.seed, "Study seed")->default_str("0");
  study->add_option("--threads", study_f.threads, "Worker threads (0: all cores)")->default_str("0");
  study->add_option("--out-dir", study_f.out_dir, "Directory for report.json and CSV tables")->capture_default_str();

  std::string convert_output;
  auto* convert = app.add_subcommand("convert", "Convert between problem and Ising JSON");
  convert_pf.attach(convert, false);
  convert->add_option("-o,--output", convert_output, "Output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*solve) return cmd_solve(solve_pf, solve_sf, solve_of);
    if (*oracle) return cmd_oracle(oracle_pf, oracle_of);
    if (*ingest) return cmd_ingest(ingest_input, ingest_pf, ingest_output);
    if (*study) return cmd_study(study_f);
    if (*convert) return cmd_convert(convert_pf, convert_output);
  } catch (const bifurc::InstanceTooLargeError& e) {
    std::cerr << "bifurc: " << e.what() << " (raise it with BIFURC_ORACLE_CEILING)\n";
    return kExitInput;
  } catch (const bifurc::NumericalDivergenceError& e) {
    std::cerr << "bifurc: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const bifurc::Error& e) {
    std::cerr << "bifurc: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "bifurc: malformed JSON input: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "bifurc: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
