// permlab: permanents of row-constrained random matrices.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or guard error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "permlab/permlab.hpp"

namespace {

using namespace permlab;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string fmt15(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// Decimal rendering that survives magnitudes beyond double range.
std::string decimal(const ScaledValue& v) {
  if (v.is_zero()) return "0";
  if (std::fabs(v.log_mag()) < 700) return fmt15(v.value());
  const double log10v = v.log_mag() / std::log(10.0);
  double exponent = std::floor(log10v);
  double mantissa = std::pow(10.0, log10v - exponent);
  if (mantissa >= 9.999999999999995) {
    mantissa /= 10;
    exponent += 1;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%.14fe%+.0f", v.sign() < 0 ? "-" : "", mantissa, exponent);
  return buf;
}

std::string log_text(const ScaledValue& v) { return v.is_zero() ? "-inf" : detail::format_g17(v.log_mag()); }

std::vector<std::size_t> parse_n_list(const std::string& text) {
  std::vector<std::size_t> ns;
  std::string_view rest = text;
  while (true) {
    auto comma = rest.find(',');
    double v = detail::parse_real(rest.substr(0, comma), "--n");
    if (v < 1 || v != std::floor(v)) throw ParseError("--n: '" + text + "' is not a list of positive integers");
    ns.push_back(static_cast<std::size_t>(v));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return ns;
}

struct SpecFlags {
  std::size_t n = 3;
  std::string r = "2";
  std::string dist = "const:1";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--n", n, "matrix dimension")->required();
    cmd->add_option("--r", r, "nonzeros per row: one integer, or a comma list of length n")->required();
    cmd->add_option("--dist", dist, "weight law: const:c, uniform:a,b, exp:lambda, lognormal:m,s")
        ->capture_default_str();
  }
  ModelSpec spec() const { return ModelSpec::from_r_text(n, r, DistributionSpec::parse(dist)); }
};

// Fills options not given on the command line from a flat key=value file.
// CLI11 only reads config files attached to the root app, so subcommands
// carry a plain --config option and apply it here.
void apply_config(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::FileError& e) {
    throw FileError(e.what());
  }
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "config" || item.name == "++" || item.name == "--") continue;
    CLI::Option* opt = cmd->get_option_no_throw("--" + item.name);
    if (opt == nullptr) opt = cmd->get_option_no_throw(item.name);
    if (opt == nullptr) throw ArgumentError("config '" + path + "': unknown key '" + item.fullname() + "'");
    if (opt->count() > 0) continue;
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    opt->add_result(value);
    opt->run_callback();
  }
}

void echo_config(const CLI::App* cmd) {
  std::cerr << "# permlab " << cmd->get_name() << " resolved configuration\n" << cmd->config_to_str(true, false);
}

int cmd_per(const std::string& path, const std::string& algorithm) {
  const DenseMatrix m = read_matrix_file(path);
  ScaledValue per;
  if (algorithm == "naive") {
    per = per_naive(m);
  } else {
    // Power-of-two row scales keep the kernel near magnitude 1 without
    // rounding the input.
    std::vector<double> scales(m.n(), 1.0);
    for (std::size_t i = 0; i < m.n(); ++i) {
      double row_max = 0;
      for (double v : m.row(i)) row_max = std::max(row_max, v);
      if (row_max > 0) scales[i] = std::exp2(std::ceil(std::log2(row_max)));
    }
    per = per_scaled(m, scales);
  }
  std::cout << "per = " << decimal(per) << "  log_per = " << log_text(per) << '\n';
  return 0;
}

int cmd_sample(const SpecFlags& flags, std::uint64_t seed, std::uint64_t trial, const std::string& x_out,
               const std::string& y_out) {
  const ConstrainedSample s = sample_constrained_matrix(flags.spec(), TrialSeed{seed, trial});
  auto save = [](const std::string& path, const DenseMatrix& m) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!(out << write_matrix(m))) throw FileError("cannot write '" + path + "'");
  };
  save(x_out, s.x);
  save(y_out, s.y);
  std::cout << "X:\n" << write_matrix(s.x) << "Y:\n" << write_matrix(s.y);
  return 0;
}

int cmd_moments(const SpecFlags& flags) {
  const ModelSpec spec = flags.spec();
  const MomentReport rep = moment_report(spec);
  std::cout << "mu_n = " << decimal(rep.mu_n) << "  log_mu_n = " << log_text(rep.mu_n) << '\n';
  if (rep.vdw) std::cout << "vdw = " << decimal(*rep.vdw) << "  log_vdw = " << log_text(*rep.vdw) << '\n';
  if (rep.alpha_beta) {
    const AlphaBeta& ab = *rep.alpha_beta;
    std::cout << "alpha_up = " << fmt15(ab.alpha_up) << "  beta_up = " << fmt15(ab.beta_up) << '\n'
              << "alpha_low = " << fmt15(ab.alpha_low) << "  beta_low = " << fmt15(ab.beta_low) << '\n';
  } else {
    std::cout << "alpha/beta: " << rep.alpha_beta_error << '\n';
  }
  if (rep.bounds) {
    std::cout << "bounds: lower = " << fmt15(rep.bounds->lower) << "  upper = " << fmt15(rep.bounds->upper)
              << "  (E T^2 / mu^2, large-n statement)\n";
  } else {
    std::cout << "bounds: " << rep.bounds_error << " (r_low = " << spec.r_low()
              << ", 6δ/ν² = " << fmt15(6 * spec.dist().delta_over_nu2()) << ")\n";
  }
  if (rep.exact_ratio)
    std::cout << "exact_ratio = " << fmt15(*rep.exact_ratio) << "  (E T^2 / mu^2, homogeneous closed form)\n";
  std::cout << "a_n = " << fmt15(rep.diagnostics.a_n) << "  c_n = " << fmt15(rep.diagnostics.c_n) << '\n';
  if (rep.diagnostics.theta) std::cout << "theta = " << fmt15(*rep.diagnostics.theta) << '\n';
  return 0;
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& out) {
  if (out.empty())
    std::cout << csv_text(rows);
  else
    write_csv(rows, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"permlab: permanents of row-constrained random matrices"};
  app.require_subcommand(1);

  // per
  std::string per_path;
  std::string per_algo = "ryser";
  auto* per = app.add_subcommand("per", "permanent of a matrix file");
  per->add_option("input", per_path, "matrix file (one row per line)")->required();
  per->add_option("--algo", per_algo, "naive or ryser")
      ->check(CLI::IsMember({"naive", "ryser"}))
      ->capture_default_str();

  // sample
  SpecFlags sample_flags;
  std::uint64_t sample_seed = 1;
  std::uint64_t sample_trial = 0;
  std::string x_out, y_out;
  auto* sample = app.add_subcommand("sample", "draw X and Y = X (.) Z");
  sample_flags.add_to(sample);
  sample->add_option("--seed", sample_seed, "master seed")->capture_default_str();
  sample->add_option("--trial", sample_trial, "trial index")->capture_default_str();
  sample->add_option("--x-out", x_out, "also write X to this file");
  sample->add_option("--y-out", y_out, "also write Y to this file");

  // moments
  SpecFlags moment_flags;
  auto* moments = app.add_subcommand("moments", "closed-form mean, bounds and diagnostics");
  moment_flags.add_to(moments);

  // mc
  SpecFlags mc_flags;
  std::size_t mc_trials = 1000;
  std::uint64_t mc_seed = 1;
  double mc_eps = kDefaultEpsilon;
  unsigned mc_workers = 1;
  std::string mc_out;
  auto* mc = app.add_subcommand("mc", "Monte Carlo estimate of E and Var of T/mu for one spec");
  mc_flags.add_to(mc);
  mc->add_option("--trials", mc_trials)->capture_default_str();
  mc->add_option("--seed", mc_seed, "master seed")->capture_default_str();
  mc->add_option("--epsilon", mc_eps, "deviation threshold for P(|T/mu - 1| > eps)")->capture_default_str();
  mc->add_option("--workers", mc_workers)->envname("PERMLAB_WORKERS")->capture_default_str();
  mc->add_option("--out", mc_out, "CSV path (stdout when omitted)");

  // sweep
  std::string sweep_ns = "8,12,16,20";
  std::string sweep_rule = "power:0.75";
  std::string sweep_dist = "const:1";
  std::size_t sweep_trials = 400;
  std::uint64_t sweep_seed = 1;
  double sweep_eps = kDefaultEpsilon;
  unsigned sweep_workers = 1;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "concentration sweep over n");
  sweep->add_option("--n", sweep_ns, "comma list of dimensions")->capture_default_str();
  sweep->add_option("--r-rule", sweep_rule, "const:k, sqrt-log, power:p, fixed:N=r1,..;M=..")->capture_default_str();
  sweep->add_option("--dist", sweep_dist)->capture_default_str();
  sweep->add_option("--trials", sweep_trials, "trials per n")->capture_default_str();
  sweep->add_option("--seed", sweep_seed, "master seed")->capture_default_str();
  sweep->add_option("--epsilon", sweep_eps)->capture_default_str();
  sweep->add_option("--workers", sweep_workers)->envname("PERMLAB_WORKERS")->capture_default_str();
  sweep->add_option("--out", sweep_out, "CSV path (stdout when omitted)");

  // verify
  bool verify_quick = false;
  auto* verify = app.add_subcommand("verify", "enumeration oracles vs closed forms, n <= 5");
  verify->add_flag("--quick", verify_quick, "n = 5: nondecreasing r vectors only");

  std::map<CLI::App*, std::string> config_paths;
  for (CLI::App* cmd : {per, sample, moments, mc, sweep, verify})
    cmd->add_option("--config", config_paths[cmd], "flat key=value file; flags override it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    for (CLI::App* cmd : app.get_subcommands()) {
      apply_config(cmd, config_paths[cmd]);
      echo_config(cmd);
    }
    if (*per) return cmd_per(per_path, per_algo);
    if (*sample) return cmd_sample(sample_flags, sample_seed, sample_trial, x_out, y_out);
    if (*moments) return cmd_moments(moment_flags);
    if (*mc) {
      const TrialBatch batch = estimate_moments(mc_flags.spec(), mc_trials, mc_seed, mc_workers, mc_eps);
      emit_csv({make_row(batch)}, mc_out);
      return 0;
    }
    if (*sweep) {
      SweepPlan plan;
      plan.ns = parse_n_list(sweep_ns);
      plan.rule = RRule::parse(sweep_rule);
      plan.dist = DistributionSpec::parse(sweep_dist);
      plan.trials = sweep_trials;
      plan.master_seed = sweep_seed;
      plan.epsilon = sweep_eps;
      plan.workers = sweep_workers;
      emit_csv(concentration_sweep(plan, [](const std::string& msg) { std::cerr << msg << '\n'; }), sweep_out);
      return 0;
    }
    if (*verify) {
      VerifyOptions opts;
      opts.all_r_vectors = !verify_quick;
      return run_verification(std::cout, mu_n, opts).ok() ? 0 : kExitRuntime;
    }
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
