// Copyright 2026 The spikeslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License is
// distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and limitations under the License.

#include "spikeslab/cli.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "spikeslab/errors.hpp"
#include "spikeslab/gaussian_posterior.hpp"
#include "spikeslab/io.hpp"
#include "spikeslab/laplace_posterior.hpp"
#include "spikeslab/math.hpp"
#include "spikeslab/model.hpp"
#include "spikeslab/oracle.hpp"
#include "spikeslab/sparse_recovery.hpp"

namespace spikeslab {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitContract = 3;

int thread_budget() {
  if (const char* env = std::getenv("SSS_THREADS")) {
    const int t = std::atoi(env);
    if (t >= 1) return t;
  }
  return 1;
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

VectorXd parse_q(const std::string& text, int d) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  VectorXd q;
  if (vals.size() == 1) {
    q = VectorXd::Constant(d, vals[0]);
  } else if (static_cast<int>(vals.size()) == d) {
    q = Eigen::Map<VectorXd>(vals.data(), d);
  } else {
    throw std::invalid_argument("--q must be a scalar or a comma list of d values");
  }
  for (int i = 0; i < d; ++i)
    if (!(q[i] >= 0.0 && q[i] <= 1.0))
      throw std::invalid_argument("--q: entry " + std::to_string(i + 1) + " = " +
                                  std::to_string(q[i]) + " outside [0,1]");
  return q;
}

// A --config JSON file overrides flag values; subcommands register the keys
// they honor here.
struct ConfigOverrides {
  std::map<std::string, std::function<void(const nlohmann::json&)>> setters;

  template <class T>
  void bind(const std::string& key, T* target) {
    setters[key] = [target](const nlohmann::json& v) { *target = v.get<T>(); };
  }

  void apply(const std::string& path) {
    if (path.empty()) return;
    const nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    for (const auto& [key, value] : j.items()) {
      auto it = setters.find(key);
      if (it == setters.end())
        throw std::invalid_argument("--config: unknown key '" + key + "'");
      it->second(value);
    }
  }
};

struct HintFlags {
  std::string estimator = "linf";
  double delta = 0.05;
  double eps = std::numeric_limits<double>::quiet_NaN();
  double c_inf = 0.0;
  double c2 = 3.0;
  int m = 0;
  int k = 0;

  void add_to(CLI::App* cmd, ConfigOverrides& cfg) {
    cmd->add_option("--estimator", estimator, "hint estimator: linf or l2iht")
        ->check(CLI::IsMember({"linf", "l2iht"}));
    cmd->add_option("--hint-delta", delta, "failure budget for the hint estimator");
    cmd->add_option("--eps", eps, "assumed RIP constant (default: measure at a feasible level)");
    cmd->add_option("--c-inf", c_inf, "l-infinity radius multiplier (0 = derive from RIP)");
    cmd->add_option("--c2", c2, "l2/IHT radius multiplier");
    cmd->add_option("--m", m, "row-prefix count for the l2 estimator (0 = all rows)");
    cmd->add_option("--k", k, "assumed sparsity (0 = ceil of prior expected sparsity)");
    cfg.bind("estimator", &estimator);
    cfg.bind("hint_delta", &delta);
    cfg.bind("eps", &eps);
    cfg.bind("c_inf", &c_inf);
    cfg.bind("c2", &c2);
    cfg.bind("m", &m);
    cfg.bind("k", &k);
  }

  RecoveryConfig to_config(const Instance& inst) const {
    RecoveryConfig rc;
    rc.kind = (estimator == "linf") ? EstimatorKind::LInf : EstimatorKind::L2Iht;
    rc.sigma = inst.sigma;
    rc.k = k > 0 ? k : std::max(1, (int)std::ceil(inst.prior.expected_sparsity()));
    rc.c_inf = c_inf;
    rc.c2 = c2;
    rc.m = m;
    rc.delta = delta;
    rc.eps_override = eps;
    return rc;
  }
};

struct SamplerFlags {
  int k_star = 0;
  double eps = std::numeric_limits<double>::quiet_NaN();
  double delta = 0.01;
  double ratio_cap = 0.0;
  bool clamp_ratios = false;
  bool no_renormalize = false;
  double anneal_delta = 0.0;
  std::uint64_t anneal_n = 0;
  int gibbs_sweeps = 4;
  int theta_sweeps = 200;

  void add_to(CLI::App* cmd, ConfigOverrides& cfg) {
    cmd->add_option("--k-star", k_star, "working sparsity cap (0 = 16(k + ln(40/delta)))");
    cmd->add_option("--sampler-eps", eps, "assumed RIP constant for the sampler envelope");
    cmd->add_option("--delta", delta, "sampler total-variation budget");
    cmd->add_option("--ratio-cap", ratio_cap, "rejection ratio bound C (0 = path default)");
    cmd->add_flag("--clamp-ratios", clamp_ratios,
                  "record rather than fail on ratio-envelope excursions");
    cmd->add_flag("--no-renormalize", no_renormalize,
                  "disable rescaling the target at the proposal mode");
    cmd->add_option("--anneal-delta", anneal_delta,
                    "relative tolerance of annealed Z estimates (0 = delta/12)");
    cmd->add_option("--anneal-n", anneal_n, "per-stage sample count (0 = M^2/Delta^2)");
    cmd->add_option("--gibbs-sweeps", gibbs_sweeps, "Gibbs thinning inside annealing");
    cmd->add_option("--theta-sweeps", theta_sweeps, "Gibbs sweeps for Laplace theta draws");
    cfg.bind("k_star", &k_star);
    cfg.bind("sampler_eps", &eps);
    cfg.bind("delta", &delta);
    cfg.bind("ratio_cap", &ratio_cap);
    cfg.bind("clamp_ratios", &clamp_ratios);
    cfg.bind("anneal_delta", &anneal_delta);
    cfg.bind("anneal_n", &anneal_n);
    cfg.bind("gibbs_sweeps", &gibbs_sweeps);
    cfg.bind("theta_sweeps", &theta_sweeps);
  }

  SamplerConfig to_config() const {
    SamplerConfig sc;
    sc.k_star = k_star;
    sc.eps = eps;
    sc.delta = delta;
    sc.ratio_cap = ratio_cap;
    sc.ratio_policy = clamp_ratios ? RatioPolicy::kClamp : RatioPolicy::kError;
    sc.renormalize_at_mode = !no_renormalize;
    return sc;
  }

  LaplaceSamplerConfig to_laplace_config() const {
    LaplaceSamplerConfig lc;
    lc.base = to_config();
    lc.anneal.Delta = anneal_delta;
    lc.anneal.N = anneal_n;
    lc.anneal.gibbs_sweeps = gibbs_sweeps;
    lc.theta_sweeps = theta_sweeps;
    return lc;
  }
};

std::string support_joined(const SupportSet& s, char sep) {
  std::string out;
  for (size_t i = 0; i < s.indices().size(); ++i) {
    if (i) out += sep;
    out += std::to_string(s.indices()[i] + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(int n, int d, const std::string& q_text, double sigma,
            const std::string& prior_kind, const std::string& ensemble, std::uint64_t seed,
            const std::string& out) {
  if (n < 1 || d < 1) throw std::invalid_argument("--n and --d must be >= 1");
  if (sigma < 0.0) throw std::invalid_argument("--sigma must be >= 0");
  PriorSpec prior;
  prior.q = parse_q(q_text, d);
  prior.diffuse = (prior_kind == "laplace") ? Diffuse::Laplace01 : Diffuse::GaussianN01;

  RngStream root(seed);
  const std::uint64_t mat_seed = root.child(1).next_u64();
  const std::uint64_t draw_seed = root.child(2).next_u64();
  const MatrixXd X = (ensemble == "rademacher") ? gen_rademacher_matrix(n, d, mat_seed)
                                                : gen_gaussian_matrix(n, d, mat_seed);
  Instance inst = draw_instance(prior, X, sigma, draw_seed);
  inst.seed = seed;
  inst.validate();
  write_instance(out, inst);

  int nnz = 0;
  for (int i = 0; i < d; ++i)
    if ((*inst.theta_star)[i] != 0.0) ++nnz;
  std::cout << "wrote " << out << ": n=" << n << " d=" << d
            << " k=" << format_double(prior.expected_sparsity()) << " nnz(theta*)=" << nnz
            << " sigma=" << format_double(sigma) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// hint

nlohmann::json hint_to_json(const HintEstimate& hint, int d) {
  nlohmann::json j;
  j["d"] = d;
  j["estimator"] = hint.kind == EstimatorKind::LInf ? "linf" : "l2iht";
  j["clip_level"] = hint.clip_level;
  j["support"] = nlohmann::json::array();
  for (int i : hint.support.indices()) j["support"].push_back(i + 1);
  nlohmann::json theta = nlohmann::json::object();
  for (int i : hint.support.indices())
    theta[std::to_string(i + 1)] = hint.theta_hat[i];
  j["theta_hat"] = theta;
  return j;
}

HintEstimate compute_hint(const Instance& inst, const HintFlags& hf, int k_star,
                          double sampler_delta) {
  RecoveryConfig rc = hf.to_config(inst);
  double eps = rc.eps_override;
  if (!std::isfinite(eps)) {
    int s = std::min(rc.k + 1, inst.d());
    while (s > 1 && binomial_capped(inst.d(), s, rc.rip_subset_budget) > rc.rip_subset_budget)
      --s;
    eps = verify_rip(inst.X, s, rc.rip_subset_budget).eps_hat;
  }
  const int ks = k_star > 0
                     ? k_star
                     : std::min(inst.d(), (int)std::ceil(16.0 * (inst.prior.expected_sparsity() +
                                                                 std::log(40.0 / sampler_delta))));
  return build_hint(inst, ks, eps, sampler_delta, rc);
}

int cmd_hint(const std::string& instance_path, const HintFlags& hf, int k_star, double delta,
             const std::string& out) {
  const Instance inst = read_instance(instance_path);
  const HintEstimate hint = compute_hint(inst, hf, k_star, delta);
  const nlohmann::json j = hint_to_json(hint, inst.d());
  if (!out.empty()) write_text_file(out, j.dump(2) + "\n");
  std::cout << "hint support = {" << support_joined(hint.support, ',') << "}, clip level "
            << format_double(hint.clip_level) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample

int cmd_sample(const std::string& instance_path, int samples, std::uint64_t seed,
               const HintFlags& hf, const SamplerFlags& sf, const std::string& out_csv,
               const std::string& out_report) {
  const Instance inst = read_instance(instance_path);
  if (samples < 1) throw std::invalid_argument("--samples must be >= 1");
  const HintEstimate hint = compute_hint(inst, hf, sf.k_star, sf.delta);
  const bool gaussian = inst.prior.diffuse == Diffuse::GaussianN01;

  RngStream root(seed);
  std::vector<std::string> rows(samples);
  SamplerReport aggregate;
  std::mutex agg_mu;
  std::string error_note;
  int exit_code = kExitOk;

  auto run_one = [&](int i, auto&& draw_support, auto&& draw_theta) {
    RngStream rng = root.child(static_cast<std::uint64_t>(i));
    SampleResult res = draw_support(rng);
    const VectorXd theta = draw_theta(res.support, rng);
    std::string row = std::to_string(i) + "," + support_joined(res.support, ';') + ",";
    bool first = true;
    for (int j : res.support.indices()) {
      if (!first) row += ';';
      first = false;
      row += std::to_string(j + 1) + ":" + format_double(theta[j]);
    }
    rows[i] = row;
    std::lock_guard<std::mutex> lock(agg_mu);
    aggregate.merge(res.report);
  };

  try {
    if (gaussian) {
      const SamplerConfig sc = sf.to_config();
      parallel_for(samples, thread_budget(), [&](int i) {
        run_one(
            i, [&](RngStream& rng) { return posterior_sample_gaussian(inst, hint, sc, rng); },
            [&](const SupportSet& s, RngStream& rng) {
              return draw_theta_given_support(inst, s, rng);
            });
      });
    } else {
      const LaplaceSamplerConfig lc = sf.to_laplace_config();
      PTildeCache cache;  // shared across draws; keeps P~ evaluations consistent
      for (int i = 0; i < samples; ++i) {
        run_one(
            i,
            [&](RngStream& rng) {
              return posterior_sample_laplace(inst, hint, lc, rng, cache);
            },
            [&](const SupportSet& s, RngStream& rng) {
              return draw_theta_given_support_laplace(inst, s, lc.theta_sweeps, rng);
            });
      }
    }
  } catch (const ContractViolation& e) {
    error_note = e.what();
    exit_code = kExitContract;
  }

  if (!out_csv.empty()) {
    std::string csv = "sample_index,support,theta\n";
    for (const std::string& row : rows)
      if (!row.empty()) csv += row + "\n";
    write_text_file(out_csv, csv);
  }
  if (!out_report.empty()) write_text_file(out_report, report_to_json(aggregate));
  if (!error_note.empty()) std::cerr << "contract violation: " << error_note << "\n";
  std::cout << "drew " << samples << " samples, " << aggregate.attempts
            << " proposal attempts\n";
  return exit_code;
}

// ---------------------------------------------------------------------------
// verify

struct CheckResult {
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed);

int cmd_verify(const std::string& mode, const std::string& instance_path, int samples,
               std::uint64_t seed, double tv_limit, std::uint64_t mc_samples,
               const HintFlags& hf, const SamplerFlags& sf, const std::string& out) {
  nlohmann::json j;
  j["mode"] = mode;
  bool pass = true;

  if (mode == "invariants") {
    const auto results = run_invariant_suite(seed);
    j["checks"] = nlohmann::json::array();
    for (const auto& r : results) {
      j["checks"].push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
      pass = pass && r.pass;
    }
  } else if (mode == "oracle-tv") {
    const Instance inst = read_instance(instance_path);
    const HintEstimate hint = compute_hint(inst, hf, sf.k_star, sf.delta);
    RngStream root(seed);
    std::vector<SupportSet> draws;
    draws.reserve(samples);
    SupportPmf oracle;
    if (inst.prior.diffuse == Diffuse::GaussianN01) {
      oracle = enumerate_posterior_gaussian(inst);
      const SamplerConfig sc = sf.to_config();
      for (int i = 0; i < samples; ++i) {
        RngStream rng = root.child(i);
        draws.push_back(posterior_sample_gaussian(inst, hint, sc, rng).support);
      }
    } else {
      RngStream oracle_rng = root.split();
      oracle = enumerate_posterior_laplace(inst, mc_samples, oracle_rng);
      const LaplaceSamplerConfig lc = sf.to_laplace_config();
      PTildeCache cache;
      for (int i = 0; i < samples; ++i) {
        RngStream rng = root.child(i);
        draws.push_back(posterior_sample_laplace(inst, hint, lc, rng, cache).support);
      }
    }
    const double tv = tv_distance(empirical_support_pmf(draws, inst.d()), oracle);
    const double limit = tv_limit + oracle.tv_uncertainty();
    j["tv"] = tv;
    j["limit"] = limit;
    j["oracle_uncertainty"] = oracle.tv_uncertainty();
    pass = tv <= limit;
  } else if (mode == "ratio-audit") {
    const Instance inst = read_instance(instance_path);
    const HintEstimate hint = compute_hint(inst, hf, sf.k_star, sf.delta);
    if (inst.prior.diffuse != Diffuse::GaussianN01)
      throw std::invalid_argument("ratio-audit currently covers the Gaussian path");
    const RecenteredState state = recenter(inst, hint);
    SamplerConfig sc = sf.to_config();
    const int k_star = sc.effective_k_star(inst.d(), inst.prior.expected_sparsity());
    double eps = sc.eps;
    if (!std::isfinite(eps)) {
      int s = std::min(k_star, inst.d());
      while (s > 1 && binomial_capped(inst.d(), s, 2000) > 2000) --s;
      eps = verify_rip(inst.X, s, 2000).eps_hat;
    }
    if (eps >= 0.5) throw std::invalid_argument("ratio-audit: measured eps >= 1/2");
    SamplerConfig proposal_cfg = sc;
    proposal_cfg.k_star = (3 * k_star) / 4;
    RngStream rng(seed);
    double worst_low = std::numeric_limits<double>::infinity();
    double worst_high = -std::numeric_limits<double>::infinity();
    double ratio_min = std::numeric_limits<double>::infinity(), ratio_max = 0.0;
    int violations = 0;
    for (int i = 0; i < samples; ++i) {
      const SupportSet s = product_sample_gaussian(state, proposal_cfg, rng);
      const double lr = log_P_gaussian(state, s) - log_Q_gaussian(state, s);
      double zsq = 0.0;
      for (int idx : s.indices()) zsq += state.z[idx] * state.z[idx];
      const auto [lo, hi] = ratio_bounds_gaussian(eps, k_star, inst.sigma, zsq);
      const double r = std::exp(lr);
      ratio_min = std::min(ratio_min, r);
      ratio_max = std::max(ratio_max, r);
      worst_low = std::min(worst_low, r / lo);
      worst_high = std::max(worst_high, r / hi);
      if (r < lo * (1 - 1e-9) || r > hi * (1 + 1e-9)) ++violations;
    }
    j["eps"] = eps;
    j["ratio_min"] = ratio_min;
    j["ratio_max"] = ratio_max;
    j["envelope_violations"] = violations;
    pass = violations == 0;
  } else {
    throw std::invalid_argument("--mode must be oracle-tv, invariants, or ratio-audit");
  }

  j["pass"] = pass;
  const std::string text = j.dump(2) + "\n";
  if (!out.empty()) write_text_file(out, text);
  std::cout << text;
  return pass ? kExitOk : kExitVerifyFail;
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(const std::string& d_list, int n, const std::string& q_text, double sigma,
              int samples, std::uint64_t seed, const HintFlags& hf, const SamplerFlags& sf,
              const std::string& out) {
  std::vector<int> dims;
  {
    std::stringstream ss(d_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) dims.push_back(std::stoi(tok));
  }
  if (dims.empty()) throw std::invalid_argument("--d: empty grid");

  std::string csv =
      "d,n,k_star,samples,gen_ms,hint_ms,per_sample_ms,attempts,acceptance_rate,failures\n";
  for (int d : dims) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    PriorSpec prior;
    prior.q = parse_q(q_text, d);
    RngStream root(seed ^ static_cast<std::uint64_t>(d));
    const MatrixXd X = gen_gaussian_matrix(n, d, root.child(1).next_u64());
    Instance inst = draw_instance(prior, X, sigma, root.child(2).next_u64());
    const auto t1 = clock::now();

    const HintEstimate hint = compute_hint(inst, hf, sf.k_star, sf.delta);
    const auto t2 = clock::now();

    const SamplerConfig sc = sf.to_config();
    const int k_star = sc.effective_k_star(d, prior.expected_sparsity());
    SamplerReport agg;
    int failures = 0;
    for (int i = 0; i < samples; ++i) {
      RngStream rng = root.child(100 + i);
      try {
        agg.merge(posterior_sample_gaussian(inst, hint, sc, rng).report);
      } catch (const ContractViolation&) {
        ++failures;
      }
    }
    const auto t3 = clock::now();
    const double gen_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const double hint_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    const double sample_ms = std::chrono::duration<double, std::milli>(t3 - t2).count();
    csv += std::to_string(d) + "," + std::to_string(n) + "," + std::to_string(k_star) + "," +
           std::to_string(samples) + "," + format_double(gen_ms) + "," +
           format_double(hint_ms) + "," + format_double(sample_ms / samples) + "," +
           std::to_string(agg.attempts) + "," +
           format_double(agg.attempts ? static_cast<double>(agg.accepted) / agg.attempts
                                      : 0.0) +
           "," + std::to_string(failures) + "\n";
  }
  if (!out.empty()) write_text_file(out, csv);
  std::cout << csv;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// invariant battery (verify --mode invariants)

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  RngStream root(seed);

  {
    // Conditional Poisson normalization at d = 8.
    VectorXd p(8);
    RngStream r = root.child(1);
    for (int i = 0; i < 8; ++i) p[i] = 0.05 + 0.85 * r.uniform();
    const DpTable t = DpTable::build(p, 3);
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < 256; ++mask) {
      const SupportSet s = SupportSet::from_mask(mask);
      if (s.size() <= 3) total += t.pmf(s);
    }
    out.push_back({"conditional_poisson_pmf_normalization", std::fabs(total - 1.0) < 1e-12,
                   "sum = " + format_double(total)});
  }
  {
    // clip is idempotent and strict.
    VectorXd v(5);
    v << 3.0, 0.1, -2.0, 1.0, -1.0;
    const VectorXd once = clip(v, 1.0);
    const VectorXd twice = clip(once, 1.0);
    const bool ok = (once - twice).cwiseAbs().maxCoeff() == 0.0 && once[3] == 0.0 &&
                    once[4] == 0.0 && once[0] == 3.0;
    out.push_back({"clip_idempotent_strict", ok, ""});
  }
  {
    // Recentering identity on a random instance.
    RngStream r = root.child(2);
    const MatrixXd X = gen_gaussian_matrix(40, 12, r.next_u64());
    PriorSpec prior;
    prior.q = VectorXd::Constant(12, 0.3);
    const Instance inst = draw_instance(prior, X, 0.5, r.next_u64());
    VectorXd th = VectorXd::Zero(12);
    th[2] = 1.3;
    th[7] = -0.4;
    const RecenteredState state = recenter(inst, th);
    const VectorXd b = (X.transpose() * inst.y) / (0.5 * 0.5);
    const SupportSet s1({2, 7, 1}), s2({2, 7, 4, 9});
    auto quad = [&](const SupportSet& s, const VectorXd& vec) {
      const MatrixXd a = state.precision_on(s);
      VectorXd vs(s.size());
      for (int i = 0; i < s.size(); ++i) vs[i] = vec[s.indices()[i]];
      return 0.5 * vs.dot(a.llt().solve(vs));
    };
    const double lhs = quad(s1, b) - quad(s2, b);
    const double rhs = quad(s1, state.z) - quad(s2, state.z);
    const bool ok = std::fabs(lhs - rhs) <= 1e-9 * std::max(1.0, std::fabs(lhs));
    out.push_back({"recentering_identity", ok,
                   "lhs - rhs = " + format_double(lhs - rhs)});
  }
  {
    // Slab weight symmetry v(u) = v(-u).
    bool ok = true;
    for (double u : {0.3, 1.7, 8.0, 44.0})
      ok = ok && std::fabs(log_laplace_slab_weight(u, 0.3, 0.1) -
                           log_laplace_slab_weight(-u, 0.3, 0.1)) < 1e-12;
    out.push_back({"laplace_slab_weight_symmetry", ok, ""});
  }
  {
    // Gaussian ratio envelope at eps = 0 (orthonormal columns).
    MatrixXd X = MatrixXd::Zero(16, 8);
    for (int i = 0; i < 8; ++i) X(i, i) = 1.0;
    PriorSpec prior;
    prior.q = VectorXd::Constant(8, 0.25);
    RngStream r = root.child(3);
    const Instance inst = draw_instance(prior, X, 0.7, r.next_u64());
    const RecenteredState state = recenter(inst, VectorXd::Zero(8));
    bool ok = true;
    double worst = 0.0;
    for (std::uint32_t mask = 0; mask < 256; ++mask) {
      const SupportSet s = SupportSet::from_mask(mask);
      const double lr = log_P_gaussian(state, s) - log_Q_gaussian(state, s);
      worst = std::max(worst, std::fabs(lr));
      ok = ok && std::fabs(lr) < 1e-9;
    }
    out.push_back({"gaussian_ratio_identity_at_eps0", ok,
                   "max |log P/Q| = " + format_double(worst)});
  }
  return out;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"spike-and-slab posterior sampling toolkit"};
  app.require_subcommand(1);

  // gen ----------------------------------------------------------------
  int gen_n = 64, gen_d = 10;
  std::string gen_q = "0.2";
  double gen_sigma = 0.5;
  std::string gen_prior = "gaussian", gen_ensemble = "gaussian";
  std::uint64_t gen_seed = 0;
  std::string gen_out = "instance.json", gen_config;
  ConfigOverrides gen_cfg;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic instance");
  gen->add_option("--n", gen_n, "measurement count")->capture_default_str();
  gen->add_option("--d", gen_d, "dimension")->capture_default_str();
  gen->add_option("--q", gen_q, "inclusion probability (scalar or comma list)")
      ->capture_default_str();
  gen->add_option("--sigma", gen_sigma, "noise standard deviation")->capture_default_str();
  gen->add_option("--prior", gen_prior, "slab density: gaussian or laplace")
      ->check(CLI::IsMember({"gaussian", "laplace"}))
      ->capture_default_str();
  gen->add_option("--ensemble", gen_ensemble, "matrix ensemble: gaussian or rademacher")
      ->check(CLI::IsMember({"gaussian", "rademacher"}))
      ->capture_default_str();
  gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output instance path")->capture_default_str();
  gen->add_option("--config", gen_config, "JSON file overriding flags");
  gen_cfg.bind("n", &gen_n);
  gen_cfg.bind("d", &gen_d);
  gen_cfg.bind("q", &gen_q);
  gen_cfg.bind("sigma", &gen_sigma);
  gen_cfg.bind("prior", &gen_prior);
  gen_cfg.bind("ensemble", &gen_ensemble);
  gen_cfg.bind("seed", &gen_seed);
  gen_cfg.bind("out", &gen_out);

  // hint ---------------------------------------------------------------
  std::string hint_instance, hint_out, hint_config;
  HintFlags hint_flags;
  int hint_k_star = 0;
  double hint_sampler_delta = 0.01;
  ConfigOverrides hint_cfg;
  CLI::App* hint = app.add_subcommand("hint", "sparse-recovery hint estimate");
  hint->add_option("--instance", hint_instance, "instance JSON path")->required();
  hint->add_option("--out", hint_out, "output hint path");
  hint->add_option("--k-star", hint_k_star, "working sparsity cap for the clip radius");
  hint->add_option("--delta", hint_sampler_delta, "sampler delta the clip level targets");
  hint->add_option("--config", hint_config, "JSON file overriding flags");
  hint_flags.add_to(hint, hint_cfg);
  hint_cfg.bind("instance", &hint_instance);
  hint_cfg.bind("out", &hint_out);
  hint_cfg.bind("k_star", &hint_k_star);
  hint_cfg.bind("delta", &hint_sampler_delta);

  // sample -------------------------------------------------------------
  std::string sample_instance, sample_csv = "samples.csv", sample_report = "report.json",
              sample_config;
  int sample_count = 1000;
  std::uint64_t sample_seed = 0;
  HintFlags sample_hint_flags;
  SamplerFlags sample_flags;
  ConfigOverrides sample_cfg;
  CLI::App* sample = app.add_subcommand("sample", "draw posterior samples");
  sample->add_option("--instance", sample_instance, "instance JSON path")->required();
  sample->add_option("--samples", sample_count, "number of posterior draws")
      ->capture_default_str();
  sample->add_option("--seed", sample_seed, "RNG seed")->capture_default_str();
  sample->add_option("--out-csv", sample_csv, "samples CSV path")->capture_default_str();
  sample->add_option("--out-report", sample_report, "report JSON path")
      ->capture_default_str();
  sample->add_option("--config", sample_config, "JSON file overriding flags");
  sample_hint_flags.add_to(sample, sample_cfg);
  sample_flags.add_to(sample, sample_cfg);
  sample_cfg.bind("instance", &sample_instance);
  sample_cfg.bind("samples", &sample_count);
  sample_cfg.bind("seed", &sample_seed);
  sample_cfg.bind("out_csv", &sample_csv);
  sample_cfg.bind("out_report", &sample_report);

  // verify ---------------------------------------------------------------
  std::string verify_mode = "invariants", verify_instance, verify_out, verify_config;
  int verify_samples = 50000;
  std::uint64_t verify_seed = 0, verify_mc = 200000;
  double verify_tv_limit = 0.05;
  HintFlags verify_hint_flags;
  SamplerFlags verify_flags;
  ConfigOverrides verify_cfg;
  CLI::App* verify = app.add_subcommand("verify", "oracle and invariant verification");
  verify->add_option("--mode", verify_mode, "oracle-tv | invariants | ratio-audit")
      ->check(CLI::IsMember({"oracle-tv", "invariants", "ratio-audit"}))
      ->capture_default_str();
  verify->add_option("--instance", verify_instance, "instance JSON path");
  verify->add_option("--samples", verify_samples, "draw count")->capture_default_str();
  verify->add_option("--seed", verify_seed, "RNG seed")->capture_default_str();
  verify->add_option("--tv-limit", verify_tv_limit, "TV pass threshold")
      ->capture_default_str();
  verify->add_option("--mc-samples", verify_mc, "Laplace oracle importance samples")
      ->capture_default_str();
  verify->add_option("--out", verify_out, "verification report path");
  verify->add_option("--config", verify_config, "JSON file overriding flags");
  verify_hint_flags.add_to(verify, verify_cfg);
  verify_flags.add_to(verify, verify_cfg);
  verify_cfg.bind("mode", &verify_mode);
  verify_cfg.bind("instance", &verify_instance);
  verify_cfg.bind("samples", &verify_samples);
  verify_cfg.bind("seed", &verify_seed);
  verify_cfg.bind("tv_limit", &verify_tv_limit);
  verify_cfg.bind("mc_samples", &verify_mc);
  verify_cfg.bind("out", &verify_out);

  // bench --------------------------------------------------------------
  std::string bench_d = "512,1024,2048", bench_q = "0.05", bench_out, bench_config;
  int bench_n = 128, bench_samples = 200;
  double bench_sigma = 0.5;
  std::uint64_t bench_seed = 0;
  HintFlags bench_hint_flags;
  SamplerFlags bench_flags;
  ConfigOverrides bench_cfg;
  CLI::App* bench = app.add_subcommand("bench", "timing sweeps over the problem grid");
  bench->add_option("--d", bench_d, "comma list of dimensions")->capture_default_str();
  bench->add_option("--n", bench_n, "measurement count")->capture_default_str();
  bench->add_option("--q", bench_q, "inclusion probability")->capture_default_str();
  bench->add_option("--sigma", bench_sigma, "noise level")->capture_default_str();
  bench->add_option("--samples", bench_samples, "draws per cell")->capture_default_str();
  bench->add_option("--seed", bench_seed, "RNG seed")->capture_default_str();
  bench->add_option("--out", bench_out, "CSV output path");
  bench->add_option("--config", bench_config, "JSON file overriding flags");
  bench_hint_flags.add_to(bench, bench_cfg);
  bench_flags.add_to(bench, bench_cfg);
  bench_cfg.bind("d", &bench_d);
  bench_cfg.bind("n", &bench_n);
  bench_cfg.bind("q", &bench_q);
  bench_cfg.bind("sigma", &bench_sigma);
  bench_cfg.bind("samples", &bench_samples);
  bench_cfg.bind("seed", &bench_seed);
  bench_cfg.bind("out", &bench_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // e.g. --help
      (void)app.exit(e);
      return kExitOk;
    }
    (void)app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      gen_cfg.apply(gen_config);
      return cmd_gen(gen_n, gen_d, gen_q, gen_sigma, gen_prior, gen_ensemble, gen_seed,
                     gen_out);
    }
    if (hint->parsed()) {
      hint_cfg.apply(hint_config);
      return cmd_hint(hint_instance, hint_flags, hint_k_star, hint_sampler_delta, hint_out);
    }
    if (sample->parsed()) {
      sample_cfg.apply(sample_config);
      return cmd_sample(sample_instance, sample_count, sample_seed, sample_hint_flags,
                        sample_flags, sample_csv, sample_report);
    }
    if (verify->parsed()) {
      verify_cfg.apply(verify_config);
      return cmd_verify(verify_mode, verify_instance, verify_samples, verify_seed,
                        verify_tv_limit, verify_mc, verify_hint_flags, verify_flags,
                        verify_out);
    }
    if (bench->parsed()) {
      bench_cfg.apply(bench_config);
      return cmd_bench(bench_d, bench_n, bench_q, bench_sigma, bench_samples, bench_seed,
                       bench_hint_flags, bench_flags, bench_out);
    }
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kExitContract;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerifyFail;
  }
  return kExitUsage;
}

}  // namespace spikeslab
