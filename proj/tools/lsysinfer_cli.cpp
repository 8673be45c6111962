#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsysinfer/bootstrap.hpp"
#include "lsysinfer/hypothesis.hpp"
#include "lsysinfer/inference.hpp"
#include "lsysinfer/mixedlogit.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

using nlohmann::json;
using namespace lsysinfer;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << text << "\n";
}

LambdaMode parse_lambda(const std::string& flag) {
  if (flag == "rot") return LambdaMode::rule_of_thumb();
  if (flag == "boot") return LambdaMode::bootstrap_rule();
  if (flag.rfind("two-stage:", 0) == 0) {
    const double gamma = std::stod(flag.substr(10));
    return LambdaMode::two_stage(gamma);
  }
  try {
    std::size_t pos = 0;
    const double v = std::stod(flag, &pos);
    if (pos != flag.size()) throw std::invalid_argument("");
    return LambdaMode::fixed(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad --lambda value '" + flag +
                                "': expected rot, boot, two-stage:<gamma>, or a number");
  }
}

json lambda_flag_json(const LambdaMode& mode) {
  switch (mode.kind) {
    case LambdaMode::Kind::RuleOfThumb: return "rot";
    case LambdaMode::Kind::BootstrapRule: return "boot";
    case LambdaMode::Kind::TwoStage: return "two-stage:" + std::to_string(mode.value);
    case LambdaMode::Kind::Fixed: break;
  }
  return mode.value;
}

// CSV microdata: header "y,w", one row per observation.
RawSample read_csv_sample(const std::string& path, const Vector& w_support) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("CSV " + path + ": empty file");
  RawSample sample;
  sample.w_levels = w_support;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string y_str, w_str;
    if (!std::getline(row, y_str, ',') || !std::getline(row, w_str, ','))
      throw std::invalid_argument("CSV " + path + ": line " + std::to_string(line_no) +
                                  ": expected y,w");
    const int y = std::stoi(y_str);
    const double w = std::stod(w_str);
    if (y != 0 && y != 1)
      throw std::invalid_argument("CSV " + path + ": line " + std::to_string(line_no) +
                                  ": field y must be 0 or 1");
    int idx = -1;
    for (std::size_t k = 0; k < w_support.size(); ++k)
      if (std::fabs(w_support[k] - w) <= 1e-9) {
        idx = static_cast<int>(k);
        break;
      }
    if (idx < 0)
      throw std::invalid_argument("CSV " + path + ": line " + std::to_string(line_no) +
                                  ": field w not on the design support");
    sample.y.push_back(static_cast<std::uint8_t>(y));
    sample.w_index.push_back(idx);
  }
  if (sample.size() == 0) throw std::invalid_argument("CSV " + path + ": no data rows");
  return sample;
}

struct DesignFlags {
  std::size_t d = 4;
  std::size_t w_points = 4;
  double t = -1.0;
  double w_bar = 1.0;
};

void add_design_flags(CLI::App* cmd, DesignFlags& f) {
  cmd->add_option("--d", f.d, "number of consumer types (perfect square)");
  cmd->add_option("--w-points", f.w_points, "price support size (4 or 16)");
  cmd->add_option("--t", f.t, "elasticity threshold");
  cmd->add_option("--w-bar", f.w_bar, "evaluation price");
}

GridSpec parse_grid(const std::string& flag) {
  GridSpec grid;
  char c1 = 0, c2 = 0;
  std::istringstream in(flag);
  if (!(in >> grid.lo >> c1 >> grid.hi >> c2 >> grid.points) || c1 != ':' || c2 != ':')
    throw std::invalid_argument("bad grid '" + flag + "': expected lo:hi:points");
  return grid;
}

json report_to_json(const TestReport& rep, double alpha, std::size_t b_draws) {
  json j;
  j["tool_version"] = kToolVersion;
  j["seed"] = rep.seed;
  j["B"] = b_draws;
  j["alpha"] = alpha;
  j["lambda_used"] = rep.critical.lambda_used;
  j["statistic"] = {{"t_e", rep.statistic.t_e}, {"t_i", rep.statistic.t_i},
                    {"t_n", rep.statistic.t_n}};
  j["c_value"] = rep.critical.c_value;
  j["method"] =
      rep.critical.method == CriticalValueMethod::TwoStage ? "two-stage" : "one-step";
  if (rep.critical.method == CriticalValueMethod::TwoStage) j["gamma"] = rep.critical.gamma;
  j["reject"] = rep.reject;
  j["p_value"] = rep.p_value;
  j["bootstrap_redraws"] = rep.bootstrap_redraws;
  j["timing_ms"] = rep.timing_ms;
  return j;
}

struct MixedLogitInput {
  MixedLogitDesign design;
  RawSample sample;
};

MixedLogitInput load_data_input(const std::string& data_path, const DesignFlags& flags) {
  MixedLogitDesign design = build_design(flags.d, flags.w_points, flags.t, flags.w_bar, 1);
  RawSample sample = read_csv_sample(data_path, design.w_support);
  design.n = static_cast<long>(sample.size());
  return {std::move(design), std::move(sample)};
}

int cmd_test(const std::string& problem_path, const std::string& data_path,
             const DesignFlags& flags, double gamma, double alpha, const std::string& lambda_flag,
             std::size_t b_draws, std::uint64_t seed, int threads, const std::string& out_path) {
  const LambdaMode mode = parse_lambda(lambda_flag);
  TestReport rep;
  if (!problem_path.empty()) {
    const HypothesisProblem problem = problem_from_json_text(read_file(problem_path));
    const GaussianResampler resampler(problem);
    rep = run_test(problem, resampler, alpha, mode, b_draws, seed, threads);
  } else {
    const MixedLogitInput in = load_data_input(data_path, flags);
    const HypothesisProblem problem = build_problem(in.design, in.sample, gamma);
    const MixedLogitResampler resampler(in.design, in.sample, gamma);
    rep = run_test(problem, resampler, alpha, mode, b_draws, seed, threads);
  }
  json j = report_to_json(rep, alpha, b_draws);
  j["command"] = "test";
  write_output(out_path, j.dump(2));
  return kExitOk;
}

int cmd_invert(const std::string& problem_path, const std::string& a_row_flag,
               const std::string& data_path, const DesignFlags& flags, double alpha,
               const std::string& lambda_flag, const GridSpec& grid, std::size_t b_draws,
               std::uint64_t seed, int threads, const std::string& out_path) {
  const LambdaMode mode = parse_lambda(lambda_flag);
  ProblemFamily family;
  ResamplerFactory factory;
  MixedLogitInput in;
  HypothesisProblem base;
  if (!problem_path.empty()) {
    base = problem_from_json_text(read_file(problem_path));
    Vector a_row;
    {
      std::istringstream rs(a_row_flag);
      std::string tok;
      while (std::getline(rs, tok, ',')) a_row.push_back(std::stod(tok));
    }
    if (a_row.size() != base.d())
      throw std::invalid_argument("--a-row length does not match the problem's d");
    family = [base, a_row](double gamma) {
      return augment_with_counterfactual(base, a_row, gamma);
    };
    factory = [](const HypothesisProblem& p) -> std::unique_ptr<BetaResampler> {
      return std::make_unique<GaussianResampler>(p);
    };
  } else {
    in = load_data_input(data_path, flags);
    family = [&in](double gamma) { return build_problem(in.design, in.sample, gamma); };
    factory = [&in](const HypothesisProblem& p) -> std::unique_ptr<BetaResampler> {
      return std::make_unique<MixedLogitResampler>(in.design, in.sample, p.beta_hat.back());
    };
  }
  const ConfidenceInterval ci =
      invert_ci(family, factory, alpha, mode, grid, b_draws, seed, threads);
  json j;
  j["command"] = "invert";
  j["tool_version"] = kToolVersion;
  j["seed"] = seed;
  j["B"] = b_draws;
  j["alpha"] = alpha;
  j["lambda_used"] = lambda_flag_json(mode);
  j["lower"] = ci.lower;
  j["upper"] = ci.upper;
  json grid_json = json::array();
  for (const auto& pt : ci.grid)
    grid_json.push_back({{"gamma", pt.gamma}, {"reject", pt.reject}, {"t_n", pt.t_n},
                         {"c_value", pt.c_value}});
  j["grid"] = grid_json;
  j["diagnostics"] = ci.diagnostics;
  write_output(out_path, j.dump(2));
  return kExitOk;
}

int cmd_bounds(const std::string& design_path, const std::string& data_path,
               const DesignFlags& flags, const std::string& out_path) {
  MixedLogitDesign design;
  Vector cond_probs;
  if (!design_path.empty()) {
    const json dj = json::parse(read_file(design_path));
    design = build_design(dj.at("d").get<std::size_t>(), dj.at("w_points").get<std::size_t>(),
                          dj.at("t").get<double>(), dj.at("w_bar").get<double>(),
                          dj.value("n", 1L));
    cond_probs = population_cond_probs(design);
  } else {
    const MixedLogitInput in = load_data_input(data_path, flags);
    design = in.design;
    const HypothesisProblem problem = build_problem(in.design, in.sample, 0.0);
    cond_probs.assign(problem.beta_hat.begin(),
                      problem.beta_hat.begin() + static_cast<long>(design.w_support.size()));
  }
  const ElasticityBounds b = identified_bounds(design, cond_probs);
  json j;
  j["command"] = "bounds";
  j["tool_version"] = kToolVersion;
  j["t"] = b.t;
  j["w_bar"] = b.w_bar;
  j["lower"] = b.lower;
  j["upper"] = b.upper;
  j["width"] = b.width();
  write_output(out_path, j.dump(2));
  return kExitOk;
}

GammaRule gamma_rule_from_json(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "lower") return GammaRule::lower_bound();
    if (s == "upper") return GammaRule::upper_bound();
    throw std::invalid_argument("design field gamma_rule: expected lower, upper, a number, "
                                "or {\"sweep\": [lo, hi, points]}");
  }
  if (v.is_number()) return GammaRule::fixed(v.get<double>());
  if (v.is_object() && v.contains("sweep")) {
    const json& s = v["sweep"];
    GridSpec grid;
    grid.lo = s.at(0).get<double>();
    grid.hi = s.at(1).get<double>();
    grid.points = s.at(2).get<std::size_t>();
    return GammaRule::sweep(grid);
  }
  throw std::invalid_argument("design field gamma_rule: unrecognized value");
}

int cmd_mc(const std::string& design_path, const std::string& sweep_flag,
           const std::string& csv_path, int threads, const std::string& out_path,
           bool require_sweep) {
  const json dj = json::parse(read_file(design_path));
  const MixedLogitDesign design =
      build_design(dj.at("d").get<std::size_t>(), dj.at("w_points").get<std::size_t>(),
                   dj.at("t").get<double>(), dj.at("w_bar").get<double>(),
                   dj.at("n").get<long>());
  const auto replications = dj.at("replications").get<std::size_t>();
  const auto b_draws = dj.value("bootstrap", std::size_t{250});
  const double alpha = dj.value("alpha", 0.05);
  const LambdaMode mode = dj.contains("lambda") && dj["lambda"].is_number()
                              ? LambdaMode::fixed(dj["lambda"].get<double>())
                              : parse_lambda(dj.value("lambda", std::string("rot")));
  const auto seed = dj.value("seed", std::uint64_t{1});

  GammaRule rule = GammaRule::lower_bound();
  if (!sweep_flag.empty())
    rule = GammaRule::sweep(parse_grid(sweep_flag));
  else if (dj.contains("gamma_rule"))
    rule = gamma_rule_from_json(dj["gamma_rule"]);
  if (require_sweep && rule.kind != GammaRule::Kind::Sweep)
    throw std::invalid_argument("power: need --sweep lo:hi:points or a sweep gamma_rule");

  const MonteCarloResult result =
      monte_carlo(design, rule, replications, b_draws, alpha, mode, seed, threads);

  json j;
  j["command"] = require_sweep ? "power" : "mc";
  j["tool_version"] = kToolVersion;
  j["seed"] = seed;
  j["B"] = b_draws;
  j["alpha"] = alpha;
  j["lambda_used"] = lambda_flag_json(mode);
  j["bounds"] = {{"lower", result.bounds.lower}, {"upper", result.bounds.upper}};
  json rows = json::array();
  for (const auto& row : result.rows)
    rows.push_back({{"gamma", row.gamma}, {"replications", row.replications},
                    {"reject_rate", row.reject_rate}, {"mc_se", row.mc_se}});
  j["rows"] = rows;
  write_output(out_path, j.dump(2));

  if (!csv_path.empty() || require_sweep) {
    std::ostringstream csv;
    csv << "gamma,reject_rate,mc_se\n";
    for (const auto& row : result.rows)
      csv << row.gamma << "," << row.reject_rate << "," << row.mc_se << "\n";
    if (csv_path.empty())
      std::cout << csv.str();
    else {
      std::ofstream out(csv_path, std::ios::binary);
      if (!out) throw std::invalid_argument("cannot write file: " + csv_path);
      out << csv.str();
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LP-based inference for beta = Ax, x >= 0"};
  app.require_subcommand(1);

  std::string problem_path, data_path, out_path, lambda_flag = "rot";
  std::string a_row_flag, grid_flag = "0:1:21", design_path, sweep_flag, csv_path;
  DesignFlags flags;
  double gamma = 0.0, alpha = 0.05;
  std::size_t b_draws = 250;
  std::uint64_t seed = 1;
  int threads = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "test level, in (0, 0.5)");
    cmd->add_option("--lambda", lambda_flag, "rot | boot | two-stage:<gamma> | <float>");
    cmd->add_option("--bootstrap", b_draws, "bootstrap draws B");
    cmd->add_option("--seed", seed, "master RNG seed");
    cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    cmd->add_option("--output", out_path, "output JSON path (default stdout)");
  };

  CLI::App* test = app.add_subcommand("test", "run the feasibility test");
  test->add_option("--problem", problem_path, "problem JSON file");
  test->add_option("--data", data_path, "y,w CSV microdata");
  test->add_option("--gamma", gamma, "hypothesized counterfactual value (with --data)");
  add_design_flags(test, flags);
  add_common(test);

  CLI::App* invert = app.add_subcommand("invert", "confidence interval by test inversion");
  invert->add_option("--problem", problem_path, "problem JSON file");
  invert->add_option("--a-row", a_row_flag, "comma-separated counterfactual row (with --problem)");
  invert->add_option("--data", data_path, "y,w CSV microdata");
  invert->add_option("--grid", grid_flag, "gamma search grid lo:hi:points");
  add_design_flags(invert, flags);
  add_common(invert);

  CLI::App* bounds = app.add_subcommand("bounds", "identified-set bounds by LP");
  bounds->add_option("--design", design_path, "design JSON (population probabilities)");
  bounds->add_option("--data", data_path, "y,w CSV microdata");
  add_design_flags(bounds, flags);
  bounds->add_option("--output", out_path, "output JSON path (default stdout)");

  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo rejection-rate study");
  mc->add_option("--design", design_path, "design JSON file")->required();
  mc->add_option("--sweep", sweep_flag, "gamma sweep lo:hi:points (power curve)");
  mc->add_option("--csv", csv_path, "power-curve CSV path");
  mc->add_option("--threads", threads, "worker threads (0 = all cores)");
  mc->add_option("--output", out_path, "output JSON path (default stdout)");

  CLI::App* power = app.add_subcommand("power", "power curve over a gamma sweep");
  power->add_option("--design", design_path, "design JSON file")->required();
  power->add_option("--sweep", sweep_flag, "gamma sweep lo:hi:points");
  power->add_option("--csv", csv_path, "power-curve CSV path");
  power->add_option("--threads", threads, "worker threads (0 = all cores)");
  power->add_option("--output", out_path, "output JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (test->parsed()) {
      if (problem_path.empty() == data_path.empty())
        throw std::invalid_argument("test: exactly one of --problem or --data is required");
      return cmd_test(problem_path, data_path, flags, gamma, alpha, lambda_flag, b_draws, seed,
                      threads, out_path);
    }
    if (invert->parsed()) {
      if (problem_path.empty() == data_path.empty())
        throw std::invalid_argument("invert: exactly one of --problem or --data is required");
      if (!problem_path.empty() && a_row_flag.empty())
        throw std::invalid_argument("invert: --a-row is required with --problem");
      return cmd_invert(problem_path, a_row_flag, data_path, flags, alpha, lambda_flag,
                        parse_grid(grid_flag), b_draws, seed, threads, out_path);
    }
    if (bounds->parsed()) {
      if (design_path.empty() == data_path.empty())
        throw std::invalid_argument("bounds: exactly one of --design or --data is required");
      return cmd_bounds(design_path, data_path, flags, out_path);
    }
    if (mc->parsed()) return cmd_mc(design_path, sweep_flag, csv_path, threads, out_path, false);
    if (power->parsed()) return cmd_mc(design_path, sweep_flag, csv_path, threads, out_path, true);
    throw std::invalid_argument("no command given");
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
