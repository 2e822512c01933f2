#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "slabprox/checks.hpp"
#include "slabprox/harness.hpp"
#include "slabprox/io.hpp"
#include "slabprox/lasso.hpp"
#include "slabprox/sampler.hpp"
#include "slabprox/scenario.hpp"

namespace fs = std::filesystem;
using slabprox::json;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("SLABPROX_OUT_DIR");
  return env && *env ? env : ".";
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

int cmd_simulate(const slabprox::ScenarioConfig& cfg, std::uint64_t seed,
                 const std::string& out_dir) {
  const fs::path out = prepare_out(out_dir);
  const slabprox::Scenario sc = slabprox::gen_scenario(cfg, seed);

  slabprox::write_csv_matrix((out / "X.csv").string(), sc.data.X);
  slabprox::write_csv_matrix((out / "z.csv").string(), sc.data.z, "z");
  Eigen::MatrixXd truth(sc.truth.theta_star.size(), 2);
  for (Eigen::Index j = 0; j < truth.rows(); ++j) {
    truth(j, 0) = sc.truth.theta_star[j];
    truth(j, 1) = sc.truth.support[j];
  }
  slabprox::write_csv_matrix((out / "truth.csv").string(), truth, "theta_star,support");

  json meta;
  meta["n"] = cfg.n;
  meta["d"] = cfg.d;
  meta["s_star"] = cfg.s_star;
  meta["rho"] = cfg.rho;
  meta["v"] = cfg.v > 0.0 ? cfg.v : slabprox::default_signal_scale(cfg.n, cfg.d);
  meta["sigma"] = cfg.sigma;
  meta["seed"] = seed;
  slabprox::write_json((out / "meta.json").string(), meta);

  std::cout << "wrote X.csv (" << cfg.n << "x" << cfg.d << "), z.csv, truth.csv, meta.json to "
            << out.string() << "\n";
  return 0;
}

struct FitArgs {
  std::string x_path, z_path, truth_path;
  double sigma2 = 1.0;
  double alpha = 1.0;
  double u = 1.1;
  double gamma0 = 0.25;
  double gamma = 0.0;
  double q0 = 0.0, lambda1 = 0.0, lambda2 = 0.0;
  double mala_step = 0.0, drift_cap = 0.0, rwm_scale = 0.0;
  long sweeps = 5000;
  long burn_in = -1;  // -1 -> sweeps / 5
  long thin = 0;      // 0 -> 10 when d > 100 else 1
  int reps = 1;
  bool fixed_phi = false;
  bool no_adapt = false;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int cmd_fit(const FitArgs& a) {
  const fs::path out = prepare_out(a.out_dir);
  const slabprox::Dataset data = slabprox::load_dataset(a.x_path, a.z_path, a.sigma2);
  const double lmax = slabprox::lambda_max(data);
  if (a.reps < 1) throw std::runtime_error("fit: --reps must be at least 1");

  Eigen::VectorXd theta_star;
  slabprox::DeltaVec support_star;
  const bool have_truth = !a.truth_path.empty();
  if (have_truth) {
    const Eigen::MatrixXd t = slabprox::load_csv_matrix(a.truth_path);
    if (t.rows() != data.d())
      throw std::runtime_error("fit: truth rows do not match the design columns");
    theta_star = t.col(0);
    support_star.resize(t.rows());
    for (Eigen::Index j = 0; j < t.rows(); ++j) support_star[j] = theta_star[j] != 0.0 ? 1 : 0;
  }

  slabprox::HyperState phi = slabprox::default_hyper(data, a.alpha, a.u, lmax);
  if (a.q0 > 0.0) phi.q = a.q0;
  if (a.lambda1 > 0.0) phi.lambda1 = a.lambda1;
  if (a.lambda2 > 0.0) phi.lambda2 = a.lambda2;
  slabprox::validate_hyper(phi);

  slabprox::SamplerConfig cfg;
  cfg.gamma0 = a.gamma0;
  cfg.gamma = a.gamma;
  cfg.mala_step = a.mala_step;
  cfg.drift_cap = a.drift_cap;
  cfg.rwm_scale = a.rwm_scale;
  cfg.sweeps = a.sweeps;
  cfg.burn_in = a.burn_in >= 0 ? a.burn_in : a.sweeps / 5;
  cfg.thin = a.thin > 0 ? a.thin : (data.d() > 100 ? 10 : 1);
  cfg.fixed_phi = a.fixed_phi;
  cfg.adapt_mala = !a.no_adapt;

  const double gamma = cfg.gamma > 0.0
                           ? cfg.gamma
                           : slabprox::gamma_from_rule(lmax, data.sigma2, cfg.gamma0);
  slabprox::LinearLoss loss(data);

  std::vector<slabprox::RepMetrics> reps;
  json rep_list = json::array();
  slabprox::ChainSummary sum0;
  long trace_records = 0;
  for (int r = 0; r < a.reps; ++r) {
    slabprox::RepMetrics m;
    m.rep = r;
    m.chain_seed = a.reps == 1 ? a.seed : slabprox::derive_seed(a.seed, r);
    slabprox::SamplerConfig rcfg = cfg;
    rcfg.seed = m.chain_seed;

    std::optional<slabprox::TraceWriter> trace0;
    if (r == 0) trace0.emplace((out / "trace.jsonl").string());

    auto cb = [&](const slabprox::TraceRecord& rec) {
      if (trace0) trace0->write(rec);
      if (!have_truth) return;
      slabprox::HyperState hp = phi;
      hp.lambda1 = std::min(std::max(rec.lambda1, phi.a_min), phi.M);
      hp.lambda2 = std::min(std::max(rec.lambda2, phi.a_min), phi.M);
      const slabprox::PriorSpec pr = slabprox::slab_prior(hp, data.sigma2);
      slabprox::DeltaVec dl(data.d());
      for (Eigen::Index j = 0; j < dl.size(); ++j)
        dl[j] = rec.delta[static_cast<std::size_t>(j)] == '1' ? 1 : 0;
      const auto [e, f] =
          slabprox::state_metrics(loss, gamma, pr, dl, rec.theta, theta_star, support_star);
      m.curve_iters.push_back(rec.iter);
      m.curve_rel_err.push_back(e);
      m.curve_f.push_back(f);
    };
    m.summary = slabprox::run_chain(data, phi, rcfg, cb);
    if (trace0) {
      trace0->close();
      sum0 = m.summary;
      trace_records = trace0->count();
    }

    if (have_truth) {
      m.rel_err_mean = slabprox::relative_error(m.summary.theta_mean, theta_star);
      slabprox::HyperState hp = phi;
      if (!rcfg.fixed_phi) {
        hp.lambda1 = std::min(std::max(m.summary.lambda1_mean, phi.a_min), phi.M);
        hp.lambda2 = std::min(std::max(m.summary.lambda2_mean, phi.a_min), phi.M);
      }
      // sparse point estimate: prox of the posterior mean on the median model
      const slabprox::PriorSpec pr = slabprox::slab_prior(hp, data.sigma2);
      slabprox::DeltaVec med(data.d());
      for (Eigen::Index j = 0; j < med.size(); ++j)
        med[j] = m.summary.inclusion[j] >= 0.5 ? 1 : 0;
      Eigen::VectorXd shrunk(data.d());
      for (Eigen::Index j = 0; j < shrunk.size(); ++j)
        shrunk[j] =
            med[j] ? slabprox::shrink_scalar(pr, gamma, m.summary.theta_mean[j]) : 0.0;
      m.rel_err_prox = slabprox::relative_error(shrunk, theta_star);
      m.f_delta = slabprox::sen_prec_f(med, support_star).f1;
      m.f_prox =
          slabprox::sen_prec_f(slabprox::support_from_threshold(shrunk, 0.0), support_star).f1;
    }

    json jr;
    jr["rep"] = r;
    jr["seed"] = m.chain_seed;
    jr["summary"] = slabprox::summary_json(m.summary, false);
    if (have_truth) {
      jr["rel_err_mean"] = m.rel_err_mean;
      jr["rel_err_prox"] = m.rel_err_prox;
      jr["f_delta"] = m.f_delta;
      jr["f_prox"] = m.f_prox;
    }
    rep_list.push_back(std::move(jr));
    reps.push_back(std::move(m));
  }

  json report;
  report["data"] = {{"x", a.x_path}, {"z", a.z_path}, {"n", data.n()}, {"d", data.d()},
                    {"sigma2", data.sigma2}};
  report["hyper_init"] = {{"q", phi.q},       {"lambda1", phi.lambda1}, {"lambda2", phi.lambda2},
                          {"alpha", phi.alpha}, {"u", phi.u},           {"a_min", phi.a_min},
                          {"M", phi.M}};
  report["config"] = {{"gamma0", cfg.gamma0},     {"gamma", gamma},
                      {"sweeps", cfg.sweeps},     {"burn_in", cfg.burn_in},
                      {"thin", cfg.thin},         {"fixed_phi", cfg.fixed_phi},
                      {"adapt_mala", cfg.adapt_mala}, {"seed", a.seed},
                      {"reps", a.reps},           {"lambda_max", lmax}};
  report["summary"] = slabprox::summary_json(sum0, false);
  report["trace_records"] = trace_records;
  if (a.reps > 1) {
    report["replicates"] = rep_list;
    const slabprox::ExperimentAggregate agg = slabprox::aggregate_metrics(reps);
    json ja;
    if (have_truth) {
      ja["rel_err_mean"] = {{"mean", agg.rel_err_mean.mean}, {"se", agg.rel_err_mean.se}};
      ja["rel_err_prox"] = {{"mean", agg.rel_err_prox.mean}, {"se", agg.rel_err_prox.se}};
      ja["f_delta"] = {{"mean", agg.f_delta.mean}, {"se", agg.f_delta.se}};
      ja["f_prox"] = {{"mean", agg.f_prox.mean}, {"se", agg.f_prox.se}};
    }
    report["aggregate"] = std::move(ja);
  } else if (have_truth) {
    report["rel_err_mean"] = reps[0].rel_err_mean;
    report["rel_err_prox"] = reps[0].rel_err_prox;
    report["f_delta"] = reps[0].f_delta;
    report["f_prox"] = reps[0].f_prox;
  }
  slabprox::write_json((out / "report.json").string(), report);

  if (have_truth) {
    const slabprox::ExperimentAggregate agg = slabprox::aggregate_metrics(reps);
    Eigen::MatrixXd curves(agg.curve_iters.size(), 5);
    for (std::size_t i = 0; i < agg.curve_iters.size(); ++i) {
      curves(i, 0) = static_cast<double>(agg.curve_iters[i]);
      curves(i, 1) = agg.curve_rel_err[i].mean;
      curves(i, 2) = agg.curve_rel_err[i].se;
      curves(i, 3) = agg.curve_f[i].mean;
      curves(i, 4) = agg.curve_f[i].se;
    }
    slabprox::write_csv_matrix((out / "curves.csv").string(), curves,
                               "iter,rel_err_mean,rel_err_se,f_mean,f_se");
  }

  json timing;
  timing["wall_seconds"] = sum0.wall_seconds;
  if (a.reps > 1) {
    const slabprox::ExperimentAggregate agg = slabprox::aggregate_metrics(reps);
    timing["wall_seconds_mean"] = agg.wall_seconds.mean;
    timing["wall_seconds_se"] = agg.wall_seconds.se;
  }
  slabprox::write_json((out / "timing.json").string(), timing);

  std::cout << "fit: " << cfg.sweeps << " sweeps (burn-in " << cfg.burn_in << "), gamma "
            << gamma << ", avg active " << sum0.avg_active << ", rates mala/ind/rwm "
            << sum0.mala_rate << "/" << sum0.ind_rate << "/" << sum0.rwm_rate << "\n"
            << "wrote trace.jsonl, report.json, timing.json"
            << (have_truth ? ", curves.csv" : "") << " to " << out.string() << "\n";
  return 0;
}

int cmd_validate(std::vector<int> only, const std::string& out_dir) {
  const fs::path out = prepare_out(out_dir);
  if (only.empty()) only = {1, 2, 3, 4};

  std::vector<slabprox::CheckResult> results;
  for (int id : only) {
    switch (id) {
      case 1: results.push_back(slabprox::check_flat_loss_smoothing()); break;
      case 2: results.push_back(slabprox::check_envelope_ordering()); break;
      case 3: results.push_back(slabprox::check_shrinkage_oracle()); break;
      case 4: results.push_back(slabprox::check_smoothing_bounds()); break;
      default:
        std::cerr << "validate: unknown check " << id << " (have 1-4)\n";
        return 1;
    }
  }

  bool all = true;
  json rep = json::array();
  for (const auto& r : results) {
    all = all && r.pass;
    std::cout << "[" << (r.pass ? "pass" : "FAIL") << "] check " << r.id << ": " << r.name
              << " (" << r.detail << ")\n";
    rep.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
  }
  slabprox::write_json((out / "validation.json").string(), rep);
  std::cout << (all ? "all checks passed" : "some checks FAILED") << "\n";
  return all ? 0 : 2;
}

int cmd_eb(const std::string& x_path, const std::string& z_path, const std::string& out_dir) {
  const fs::path out = prepare_out(out_dir);
  const slabprox::Dataset data = slabprox::load_dataset(x_path, z_path, 1.0);
  const slabprox::EbResult eb = slabprox::eb_fit(data.X, data.z);

  json j;
  j["lambda_cv"] = eb.lambda_cv;
  j["sigma2_hat"] = eb.sigma2;
  j["support_size"] = eb.fit.support_size;
  j["kkt_residual"] = eb.fit.kkt_residual;
  j["iters"] = eb.fit.iters;
  j["lambda1_pilot"] = slabprox::lambda1_default(data);
  std::vector<double> beta(eb.fit.beta.data(), eb.fit.beta.data() + eb.fit.beta.size());
  j["beta"] = beta;
  slabprox::write_json((out / "eb.json").string(), j);

  std::cout << "eb: lambda " << eb.lambda_cv << ", sigma2_hat " << eb.sigma2 << ", support "
            << eb.fit.support_size << ", kkt " << eb.fit.kkt_residual << "\n"
            << "wrote eb.json to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spike-and-slab linear regression through proximal smoothing"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file");

  int code = 0;

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a correlated-design scenario");
  slabprox::ScenarioConfig sc_cfg;
  std::uint64_t sim_seed = 1;
  std::string sim_out = default_out_dir();
  sim->add_option("--n", sc_cfg.n, "rows")->capture_default_str();
  sim->add_option("--d", sc_cfg.d, "columns")->capture_default_str();
  sim->add_option("--s", sc_cfg.s_star, "true support size")->capture_default_str();
  sim->add_option("--rho", sc_cfg.rho, "row AR(1) correlation")->capture_default_str();
  sim->add_option("--v", sc_cfg.v, "signal scale (0 = sqrt(log d / n))")->capture_default_str();
  sim->add_option("--sigma", sc_cfg.sigma, "noise sd")->capture_default_str();
  sim->add_option("--seed", sim_seed, "rng seed")->capture_default_str();
  sim->add_option("--out", sim_out, "output directory")->capture_default_str();
  sim->callback([&] { code = cmd_simulate(sc_cfg, sim_seed, sim_out); });

  // fit
  auto* fit = app.add_subcommand("fit", "sample the smoothed posterior");
  FitArgs fa;
  fa.out_dir = default_out_dir();
  fit->add_option("--x", fa.x_path, "design matrix csv")->required();
  fit->add_option("--z", fa.z_path, "response csv")->required();
  fit->add_option("--truth", fa.truth_path, "truth csv for error/F curves");
  fit->add_option("--reps", fa.reps, "chain replications (seeds derived)")->capture_default_str();
  fit->add_option("--sigma2", fa.sigma2, "noise variance")->capture_default_str();
  fit->add_option("--alpha", fa.alpha, "elastic-net mix (1 = pure l1)")->capture_default_str();
  fit->add_option("--u", fa.u, "inclusion hyperprior exponent")->capture_default_str();
  fit->add_option("--gamma0", fa.gamma0, "step-rule fraction in (0, 1/4]")->capture_default_str();
  fit->add_option("--gamma", fa.gamma, "smoothing step (0 = step rule)")->capture_default_str();
  fit->add_option("--q0", fa.q0, "initial q (0 = prior mean)")->capture_default_str();
  fit->add_option("--lambda1", fa.lambda1, "initial lambda1 (0 = pilot)")->capture_default_str();
  fit->add_option("--lambda2", fa.lambda2, "initial lambda2 (0 = default)")->capture_default_str();
  fit->add_option("--mala-step", fa.mala_step, "walk step on the active block (0 = gamma)")
      ->capture_default_str();
  fit->add_option("--drift-cap", fa.drift_cap, "drift norm cap (0 = default)")->capture_default_str();
  fit->add_option("--rwm-scale", fa.rwm_scale, "lambda walk scale (0 = default)")
      ->capture_default_str();
  fit->add_option("--sweeps", fa.sweeps, "total sweeps")->capture_default_str();
  fit->add_option("--burn-in", fa.burn_in, "burn-in sweeps (-1 = sweeps/5)")->capture_default_str();
  fit->add_option("--thin", fa.thin, "trace thinning (0 = auto)")->capture_default_str();
  fit->add_flag("--fixed-phi", fa.fixed_phi, "freeze q and the lambdas");
  fit->add_flag("--no-adapt", fa.no_adapt, "disable step adaptation");
  fit->add_option("--seed", fa.seed, "rng seed")->capture_default_str();
  fit->add_option("--out", fa.out_dir, "output directory")->capture_default_str();
  fit->callback([&] { code = cmd_fit(fa); });

  // validate
  auto* val = app.add_subcommand("validate", "run the numerical validation checks");
  std::vector<int> only;
  std::string val_out = default_out_dir();
  val->add_option("--only", only, "subset of checks to run (1-4)");
  val->add_option("--out", val_out, "output directory")->capture_default_str();
  val->callback([&] { code = cmd_validate(only, val_out); });

  // eb
  auto* ebc = app.add_subcommand("eb", "noise-level pilot from the l1 path");
  std::string eb_x, eb_z;
  std::string eb_out = default_out_dir();
  ebc->add_option("--x", eb_x, "design matrix csv")->required();
  ebc->add_option("--z", eb_z, "response csv")->required();
  ebc->add_option("--out", eb_out, "output directory")->capture_default_str();
  ebc->callback([&] { code = cmd_eb(eb_x, eb_z, eb_out); });

  // exit codes: 0 success, 2 validation-suite failure, 1 I/O or config errors
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}
