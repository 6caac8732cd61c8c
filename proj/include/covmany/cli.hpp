#pragma once

// Command-line front end. run_cli is the whole program; tools/covmany_cli.cpp
// only forwards argv. Needs CLI11 and nlohmann/json on the include path.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covmany/errors.hpp"
#include "covmany/io.hpp"
#include "covmany/oracle.hpp"
#include "covmany/procedures.hpp"
#include "covmany/simgen.hpp"

namespace covmany {

namespace detail {

struct LoadedManifest {
  Manifest manifest;
  std::vector<std::string> names;
  std::vector<Sample> samples;
};

inline LoadedManifest load_all(const std::string& path, bool force_center) {
  LoadedManifest m{load_manifest(path), {}, {}};
  const bool center = m.manifest.center || force_center;
  for (const auto& e : m.manifest.populations) {
    m.names.push_back(e.name);
    m.samples.push_back(load_population(e.path, center, m.manifest.header));
  }
  return m;
}

// Population i supplies column i of every matrix observation.
inline TransposableSample transposable_from(const std::vector<Sample>& cols) {
  const Index n = cols[0].n();
  const Index p = cols[0].p();
  for (const auto& c : cols)
    require(c.n() == n && c.p() == p, "kron manifest: all population files must have the same shape");
  std::vector<Matrix> obs(static_cast<std::size_t>(n), Matrix(p, static_cast<Index>(cols.size())));
  for (std::size_t i = 0; i < cols.size(); ++i)
    for (Index k = 0; k < n; ++k) obs[static_cast<std::size_t>(k)].col(static_cast<Index>(i)) = cols[i].data().col(k);
  return TransposableSample(std::move(obs));
}

// "-" or empty means stdout.
inline void emit(const std::string& text, const std::string& out, std::ostream& os) {
  if (out.empty() || out == "-")
    os << text;
  else
    write_text(text, out);
}

inline std::string sibling(const std::string& out, const std::string& suffix, const std::string& ext) {
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix + ext)).string();
}

struct SimFlags {
  std::string scenario = "prop_case_a";
  Index p = 100;
  Index q = 50;
  Index n_low = 50;
  Index n_high = 150;
  std::string noise = "gaussian";
  std::optional<double> beta_max;
  std::optional<double> beta_step;
  Index reps = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::string out;
};

inline void add_sim_flags(CLI::App* app, SimFlags& f) {
  app->add_option("--scenario", f.scenario,
                  "prop_case_a | prop_case_b | eq_case_a | eq_case_b | kron_case_I | kron_case_II")
      ->capture_default_str();
  app->add_option("--p", f.p, "dimension")->capture_default_str();
  app->add_option("--q", f.q, "number of populations")->capture_default_str();
  app->add_option("--n-low", f.n_low, "smallest sample size")->capture_default_str();
  app->add_option("--n-high", f.n_high, "largest sample size")->capture_default_str();
  app->add_option("--noise", f.noise, "gaussian | gamma")->capture_default_str();
  app->add_option("--reps", f.reps, "replications")->capture_default_str();
  app->add_option("--alpha", f.alpha, "nominal level")->capture_default_str();
  app->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
  app->add_option("--out", f.out, "output path (default stdout)");
}

inline ExperimentConfig to_config(const SimFlags& f) {
  ExperimentConfig c;
  c.scenario = parse_scenario(f.scenario);
  c.noise = parse_noise(f.noise);
  c.p = f.p;
  c.q = f.q;
  c.n_low = f.n_low;
  c.n_high = f.n_high;
  c.n_reps = f.reps;
  c.alpha = f.alpha;
  c.seed = f.seed;
  return c;
}

inline json oracle_reports(const std::string& check, Index p, Index n, NoiseKind noise, Index n_draws,
                           std::uint64_t seed) {
  json arr = json::array();
  auto add = [&](const OracleReport& r) { arr.push_back(to_json(r)); };
  const bool all = check == "all";
  bool known = all;
  if (all || check == "lemma1") {
    known = true;
    const Index pp = p > 0 ? p : 4;
    Vector d(pp), a(pp);
    for (Index k = 0; k < pp; ++k) {
      d(k) = static_cast<double>(k + 1);
      a(k) = static_cast<double>(pp - k);
    }
    for (const auto& r : check_lemma1(PsdMat::identity(pp), n, SymMat::identity(pp), noise, n_draws, seed)) add(r);
    for (const auto& r : check_lemma1(PsdMat::certify(SymMat::diagonal(d)), n, SymMat::diagonal(a), noise, n_draws,
                                      derive_seed(seed, 1)))
      add(r);
  }
  if (all || check == "a1") {
    known = true;
    const Index pp = p > 0 ? p : 8;
    for (const auto& r : check_expectations_A1(PsdMat::identity(pp), n, noise, n_draws, derive_seed(seed, 2)))
      add(r);
  }
  if (all || check == "a5") {
    known = true;
    const Index pp = p > 0 ? p : 200;
    add(check_variance_A5(PsdMat::identity(pp), pp, noise, n_draws, derive_seed(seed, 3)));
  }
  if (all || check == "h1") {
    known = true;
    const Index pp = p > 0 ? p : 400;
    const SymMat id = SymMat::identity(pp);
    for (const auto& r : check_quadform_H1(id, id, id, id, noise, n_draws, derive_seed(seed, 4))) add(r);
  }
  require(known, "oracle: unknown check '" + check + "' (expected lemma1, a1, a5, h1 or all)");
  return arr;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Many-sample tests for proportionality and equality of covariance matrices", "covmany"};
  app.require_subcommand(1);
  app.fallthrough();

  // test
  std::string manifest_path;
  std::string out_path;
  bool center = false;
  std::optional<double> alpha_flag;
  auto* test = app.add_subcommand("test", "run the test named in a manifest and print a JSON report");
  test->add_option("--manifest", manifest_path, "manifest JSON")->required();
  test->add_option("--alpha", alpha_flag, "overrides the manifest alpha");
  test->add_flag("--center", center, "center each population by its sample mean");
  test->add_option("--out", out_path, "output path (default stdout)");

  // pairwise
  Index p_sub = 0;
  Index n_rep = 1;
  std::uint64_t seed = 1;
  auto* pairwise = app.add_subcommand("pairwise", "pairwise equality contributions with heatmap CSV");
  pairwise->add_option("--manifest", manifest_path, "manifest JSON")->required();
  pairwise->add_flag("--center", center, "center each population by its sample mean");
  pairwise->add_option("--p-sub", p_sub, "variables per subsample (default all)");
  pairwise->add_option("--n-rep", n_rep, "subsamples to average")->capture_default_str();
  pairwise->add_option("--seed", seed, "RNG seed")->capture_default_str();
  pairwise->add_option("--out", out_path, "JSON output path; CSVs go next to it");

  // scan
  auto* scan = app.add_subcommand("scan", "equality tests on random variable subsets");
  scan->add_option("--manifest", manifest_path, "manifest JSON")->required();
  scan->add_flag("--center", center, "center each population by its sample mean");
  scan->add_option("--p-sub", p_sub, "variables per subsample")->required();
  scan->add_option("--n-rep", n_rep, "subsamples")->capture_default_str();
  scan->add_option("--alpha", alpha_flag, "overrides the manifest alpha");
  scan->add_option("--seed", seed, "RNG seed")->capture_default_str();
  scan->add_option("--out", out_path, "output path (default stdout)");

  // simulate-size / simulate-power
  detail::SimFlags size_flags, power_flags;
  auto* sim_size = app.add_subcommand("simulate-size", "empirical size of a scenario at beta = 0");
  detail::add_sim_flags(sim_size, size_flags);
  auto* sim_power = app.add_subcommand("simulate-power", "empirical and theoretical power curve");
  detail::add_sim_flags(sim_power, power_flags);
  sim_power->add_option("--beta-max", power_flags.beta_max, "top of the beta grid (default: theory reaches 0.99)");
  sim_power->add_option("--beta-step", power_flags.beta_step, "grid step (default beta-max / 10)");

  // oracle
  std::string check = "all";
  Index n_draws = 200000;
  Index oracle_p = 0;
  Index oracle_n = 10;
  std::string oracle_noise = "gaussian";
  auto* oracle = app.add_subcommand("oracle", "Monte Carlo checks of the moment formulas");
  oracle->add_option("--check", check, "lemma1 | a1 | a5 | h1 | all")->capture_default_str();
  oracle->add_option("--N", n_draws, "Monte Carlo draws")->capture_default_str();
  oracle->add_option("--p", oracle_p, "dimension (default depends on the check)");
  oracle->add_option("--n", oracle_n, "sample size for lemma1 and a1")->capture_default_str();
  oracle->add_option("--noise", oracle_noise, "gaussian | gamma")->capture_default_str();
  oracle->add_option("--seed", seed, "RNG seed")->capture_default_str();
  oracle->add_option("--out", out_path, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (test->parsed()) {
      auto m = detail::load_all(manifest_path, center);
      const double alpha = alpha_flag.value_or(m.manifest.alpha);
      TestReport r;
      switch (m.manifest.test) {
        case ManifestTest::prop: r = prop_test(m.samples, alpha); break;
        case ManifestTest::eq: r = eq_test(m.samples, alpha); break;
        case ManifestTest::kron: r = kron_spec_test(detail::transposable_from(m.samples), alpha); break;
      }
      detail::emit(to_json_text(to_json(r)), out_path, out);
    } else if (pairwise->parsed()) {
      auto m = detail::load_all(manifest_path, center);
      const Index p = m.samples[0].p();
      const Index ps = p_sub > 0 ? p_sub : p;
      // centering already happened at load time
      const PairwiseReport r = pairwise_contributions(m.samples, n_rep, ps, seed, false);
      detail::emit(to_json_text(to_json(r)), out_path, out);
      if (!out_path.empty() && out_path != "-") {
        write_text(pairwise_csv(r, m.names, false), detail::sibling(out_path, "_g", ".csv"));
        write_text(pairwise_csv(r, m.names, true), detail::sibling(out_path, "_classes", ".csv"));
      }
    } else if (scan->parsed()) {
      auto m = detail::load_all(manifest_path, center);
      const double alpha = alpha_flag.value_or(m.manifest.alpha);
      const ScanResult r = subsampled_eq_scan(m.samples, p_sub, n_rep, alpha, seed, false);
      detail::emit(to_json_text(to_json(r, p_sub, n_rep)), out_path, out);
    } else if (sim_size->parsed()) {
      const ExperimentConfig c = detail::to_config(size_flags);
      const SizeResult s = run_size_experiment(c);
      detail::emit(to_json_text(to_json(s, c)), size_flags.out, out);
    } else if (sim_power->parsed()) {
      ExperimentConfig c = detail::to_config(power_flags);
      const double bmax = power_flags.beta_max ? *power_flags.beta_max : default_beta_max(c);
      const double step = power_flags.beta_step ? *power_flags.beta_step : bmax / 10.0;
      c.beta_grid = make_beta_grid(bmax, step);
      const PowerCurve pc = run_power_experiment(c);
      detail::emit(power_curve_csv(pc), power_flags.out, out);
      if (!power_flags.out.empty() && power_flags.out != "-") {
        json meta = to_json(pc);
        meta["scenario"] = to_string(c.scenario);
        meta["noise"] = to_string(c.noise);
        meta["p"] = c.p;
        meta["q"] = c.q;
        meta["n_low"] = c.n_low;
        meta["n_high"] = c.n_high;
        meta["alpha"] = c.alpha;
        write_report(meta, detail::sibling(power_flags.out, "", ".json"));
      }
    } else if (oracle->parsed()) {
      const json arr = detail::oracle_reports(check, oracle_p, oracle_n, parse_noise(oracle_noise), n_draws, seed);
      detail::emit(to_json_text(arr), out_path, out);
    }
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace covmany
