#pragma once

#include "birth_death.hpp"
#include "graded_complex.hpp"
#include "io.hpp"
#include "morse_complex.hpp"
#include "torsion_forms.hpp"
#include "witten1d.hpp"

#include <map>
#include <random>
#include <set>

namespace tlab {

// One experiment parameter. Numbers carry a closed range; enums a value list.
struct ParamSpec {
  std::string key;
  std::string def;
  std::string doc;
  double lo = -INFINITY, hi = INFINITY;
  bool integer = false;
  std::vector<std::string> choices;  // non-empty for enums
};

struct ExperimentOutput {
  Table table{{"empty"}};
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
};

class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(std::string experiment, std::map<std::string, std::string> v) : exp_(std::move(experiment)), v_(std::move(v)) {}
  double num(const std::string& k) const { return parse_number(exp_ + "." + k, v_.at(k)); }
  int integer(const std::string& k) const { return static_cast<int>(std::lround(num(k))); }
  const std::string& str(const std::string& k) const { return v_.at(k); }
  bool has(const std::string& k) const { return v_.count(k) > 0; }
  const std::map<std::string, std::string>& values() const { return v_; }

 private:
  std::string exp_;
  std::map<std::string, std::string> v_;
};

struct Experiment {
  std::string name;
  std::string doc;
  std::vector<ParamSpec> params;
  // extra cross-parameter checks, run before any computation
  std::function<void(const ParamSet&)> check;
  std::function<ExperimentOutput(const ParamSet&, std::uint64_t seed)> run;
};

namespace detail {

inline ParamSpec num(std::string k, std::string d, double lo, double hi, std::string doc) {
  return {std::move(k), std::move(d), std::move(doc), lo, hi, false, {}};
}
inline ParamSpec inum(std::string k, std::string d, double lo, double hi, std::string doc) {
  return {std::move(k), std::move(d), std::move(doc), lo, hi, true, {}};
}
inline ParamSpec choice(std::string k, std::string d, std::vector<std::string> c, std::string doc) {
  return {std::move(k), std::move(d), std::move(doc), 0, 0, false, std::move(c)};
}

inline ModelParams bd_params(const ParamSet& p) {
  ModelParams m;
  m.n = p.integer("n");
  m.i = p.integer("i");
  m.r1 = p.num("r1");
  m.r2 = p.num("r2");
  m.delta = p.num("delta");
  m.y = p.num("y");
  if (p.has("a")) m.A = p.num("a");
  return m;
}

inline std::vector<double> ladder(const ParamSet& p) {
  std::vector<double> T;
  for (double t = p.num("t_min"); t <= p.num("t_max") + 1e-9; t += p.num("t_step")) T.push_back(t);
  return T;
}

inline void check_ladder(const ParamSet& p) {
  require(p.num("t_min") < p.num("t_max"), ErrorKind::invalid_argument, "t_min must be below t_max");
  require(ladder(p).size() >= 2, ErrorKind::invalid_argument, "T ladder needs at least two values");
}

inline std::string join_ranks(const std::vector<int>& r) {
  std::string s;
  for (std::size_t i = 0; i < r.size(); ++i) s += (i ? ":" : "") + std::to_string(r[i]);
  return s;
}

}  // namespace detail

inline const std::vector<Experiment>& experiments() {
  using detail::choice;
  using detail::inum;
  using detail::num;
  static const std::vector<Experiment> all = [] {
    std::vector<Experiment> v;

    v.push_back({"torsion",
                 "torsion of random finite complexes, determinant form against the heat-kernel integral",
                 {inum("samples", "5", 1, 200, "number of random complexes"),
                  inum("degrees", "3", 1, 6, "top degree"), inum("max_rank", "4", 1, 8, "largest rank per degree")},
                 {},
                 [](const ParamSet& p, std::uint64_t seed) {
                   std::mt19937_64 rng(seed);
                   std::uniform_int_distribution<int> R(1, p.integer("max_rank"));
                   ExperimentOutput out;
                   out.table = Table({"sample", "ranks", "torsion", "integral", "difference"});
                   for (int s = 0; s < p.integer("samples"); ++s) {
                     std::vector<int> ranks(p.integer("degrees") + 1);
                     for (int& r : ranks) r = R(rng);
                     GradedComplex c = random_complex(ranks, rng);
                     double t = finite_torsion(c), ti = finite_torsion_integral(c);
                     out.table.add({static_cast<long long>(s), detail::join_ranks(ranks), t, ti, ti - t});
                   }
                   return out;
                 }});

    v.push_back({"anomaly",
                 "edge residual of the torsion-form anomaly formula on a circle family",
                 {choice("family", "rank221", {"rank221", "acyclic121"}, "test family"),
                  inum("m", "64", 8, 4096, "base samples"), num("tau", "1e-3", 0, 1, "small-time cutoff"),
                  inum("t_nodes", "200", 20, 20000, "quadrature nodes"),
                  num("amp", "0.1", 0, 0.5, "metric perturbation amplitude")},
                 {},
                 [](const ParamSet& p, std::uint64_t) {
                   HolonomyFamilyParams hp;
                   hp.amp = p.num("amp");
                   auto fm = p.str("family") == "rank221" ? rank221_family(p.integer("m"), hp)
                                                          : acyclic121_family(p.integer("m"), hp);
                   TorsionFormOptions opt;
                   opt.t_nodes = p.integer("t_nodes");
                   AnomalyReport rep = anomaly_check(fm.family, fm.metric, p.num("tau"), opt);
                   ExperimentOutput out;
                   out.table = Table({"edge", "torsion", "h_family", "h_harmonic", "residual"});
                   for (int j = 0; j < fm.family.m; ++j)
                     out.table.add({static_cast<long long>(j), rep.torsion[j], rep.h_family[j], rep.h_harmonic[j],
                                    rep.residual[j]});
                   out.summary["max_residual"] = rep.max_residual;
                   return out;
                 }});

    v.push_back({"birth-death",
                 "critical point census of the deformed birth-death model",
                 {inum("n", "6", 3, 40, "dimension minus one"), inum("i", "3", 2, 39, "index of the pair"),
                  num("r1", "0.04", 0, 1, "inner radius"), num("r2", "0.06", 0, 1, "outer radius"),
                  num("delta", "0.0015", 0, 1, "linear term size"), num("y", "0", -1, 1, "unfolding parameter"),
                  num("a", "1000", 0, 1e12, "deformation strength A")},
                 [](const ParamSet& p) { validate(detail::bd_params(p)); },
                 [](const ParamSet& p, std::uint64_t seed) {
                   ModelParams m = detail::bd_params(p);
                   Census cs = find_critical_points(build_profiles(m), 64, 1000, seed);
                   ExperimentOutput out;
                   out.table = Table({"k", "u0", "u1", "radius", "value", "index", "birth_death", "newton_residual"});
                   for (std::size_t k = 0; k < cs.points.size(); ++k) {
                     const auto& c = cs.points[k];
                     out.table.add({static_cast<long long>(k), c.location(0), c.location(1), c.location.norm(), c.value,
                                    static_cast<long long>(c.morse_index), static_cast<long long>(c.birth_death),
                                    c.newton_residual});
                   }
                   CensusCheck ck = check_census(cs, m);
                   out.summary["points"] = cs.points.size();
                   out.summary["counts_ok"] = ck.counts_ok;
                   out.summary["indices_ok"] = ck.indices_ok;
                   out.summary["warnings"] = cs.warnings;
                   return out;
                 }});

    // no explicit "A large enough" constant exists; locate it empirically
    v.push_back({"census-threshold",
                 "smallest deformation strength A at which the census is complete",
                 {inum("n", "6", 3, 40, "dimension minus one"), inum("i", "3", 2, 39, "index of the pair"),
                  num("r1", "0.04", 0, 1, "inner radius"), num("r2", "0.06", 0, 1, "outer radius"),
                  num("delta", "0.0015", 0, 1, "linear term size"), num("y", "0", -1, 1, "unfolding parameter"),
                  num("a_lo", "1", 0, 1e12, "lower end of the search"),
                  num("a_hi", "1000", 0, 1e12, "upper end of the search"),
                  inum("iterations", "8", 1, 60, "bisection steps")},
                 [](const ParamSet& p) {
                   ModelParams m = detail::bd_params(p);
                   validate(m);
                   require(p.num("a_lo") > 0 && p.num("a_lo") < p.num("a_hi"), ErrorKind::invalid_argument,
                           "census-threshold needs 0 < a_lo < a_hi");
                 },
                 [](const ParamSet& p, std::uint64_t) {
                   ModelParams m = detail::bd_params(p);
                   double A = census_threshold_A(m, p.num("a_lo"), p.num("a_hi"), p.integer("iterations"));
                   ExperimentOutput out;
                   out.table = Table({"y", "a_lo", "a_hi", "threshold_a"});
                   out.table.add({m.y, p.num("a_lo"), p.num("a_hi"), A});
                   out.summary["threshold_a"] = A;
                   return out;
                 }});

    v.push_back({"witten-glue",
                 "interface-deformed circle spectrum against the split boundary problems",
                 {num("t", "40", 0.1, 1e3, "Witten parameter"), num("amp", "0.25", 0.01, 10, "amplitude of cos 2s"),
                  num("r", "0.1", 1e-3, 0.3, "interface half-width"), inum("n", "32768", 64, 1 << 22, "grid nodes"),
                  inum("k", "6", 1, 40, "eigenvalues per problem"),
                  inum("form_degree", "0", 0, 1, "form degree"), num("a_max", "64", 1, 1e6, "largest A"),
                  num("a_factor", "4", 1.5, 100, "A ladder ratio")},
                 [](const ParamSet& p) {
                   require(p.integer("n") % 8 == 0, ErrorKind::invalid_argument,
                           "witten-glue.n must be a multiple of 8 so the interfaces sit on nodes");
                 },
                 [](const ParamSet& p, std::uint64_t) {
                   GluingConfig cfg;
                   cfg.f = cosine_potential(2.0, p.num("amp"));
                   cfg.T = p.num("t");
                   cfg.r = p.num("r");
                   cfg.N = p.integer("n");
                   cfg.k = p.integer("k");
                   cfg.form_degree = p.integer("form_degree");
                   cfg.A_ladder.clear();
                   for (double A = 1; A <= p.num("a_max") * (1 + 1e-12); A *= p.num("a_factor")) cfg.A_ladder.push_back(A);
                   GluingTable tab = gluing_scan(cfg);
                   ExperimentOutput out;
                   out.table = Table({"a", "k", "full", "split", "gap", "cluster"});
                   for (auto& row : tab.rows)
                     for (int q = 0; q < cfg.k; ++q)
                       out.table.add({row.A, static_cast<long long>(q), row.full[q], row.split[q], row.gap[q],
                                      static_cast<long long>(row.cluster)});
                   out.summary["split_kernel"] = tab.split_kernel;
                   out.summary["r_snapped"] = tab.r;
                   return out;
                 }});

    v.push_back({"small-eig",
                 "tunnelling eigenvalues of cos(k s) on the circle against the Agmon barrier",
                 {num("k", "2", 1, 8, "wave number"), num("t_min", "20", 1, 500, "first T"),
                  num("t_max", "80", 1, 500, "last T"), num("t_step", "10", 0.5, 500, "T step")},
                 detail::check_ladder,
                 [](const ParamSet& p, std::uint64_t) {
                   DecayFit fit = small_eigenvalue_scan(cosine_potential(p.num("k")), detail::ladder(p));
                   ExperimentOutput out;
                   out.table = Table({"t", "branch", "lambda", "log_lambda"});
                   for (std::size_t i = 0; i < fit.T.size(); ++i)
                     for (std::size_t q = 0; q < fit.branches[i].size(); ++q)
                       out.table.add({fit.T[i], static_cast<long long>(q), fit.branches[i][q],
                                      std::log(fit.branches[i][q])});
                   out.summary["slope"] = fit.slope;
                   out.summary["barrier"] = fit.barrier;
                   out.summary["predicted_slope"] = fit.predicted;
                   return out;
                 }});

    v.push_back({"agmon",
                 "weighted sup of the ground state away from the wells across T",
                 {num("k", "2", 1, 8, "wave number"), num("t_min", "20", 1, 500, "first T"),
                  num("t_max", "80", 1, 500, "last T"), num("t_step", "10", 0.5, 500, "T step"),
                  num("b", "0.5", 0.01, 0.99, "Agmon weight"), num("radius", "0.1", 1e-3, 0.5, "well radius")},
                 detail::check_ladder,
                 [](const ParamSet& p, std::uint64_t) {
                   const Potential f = cosine_potential(p.num("k"));
                   auto Ts = detail::ladder(p);
                   const int N = resolved_circle_nodes(f, Ts.back());
                   std::vector<AgmonDecayReport> reps(Ts.size());
                   parallel_for(Ts.size(), [&](std::size_t i) {
                     auto pb = circle_problem(f, Ts[i], N);
                     auto s = mp_spectrum(pb, 2);
                     auto crit = grid_critical_points(pb);
                     auto rho = agmon_distance(pb, Ts[i], neighborhood_mask(pb, crit, p.num("radius")));
                     reps[i] = agmon_decay_check(pb, s, 0, rho, p.num("b"), p.num("radius"));
                   });
                   ExperimentOutput out;
                   out.table = Table({"t", "sup", "threshold", "eigenvalue"});
                   double lo = INFINITY, hi = -INFINITY;
                   for (std::size_t i = 0; i < Ts.size(); ++i) {
                     out.table.add({Ts[i], reps[i].sup, reps[i].threshold, reps[i].eigenvalue});
                     lo = std::min(lo, reps[i].sup);
                     hi = std::max(hi, reps[i].sup);
                   }
                   out.summary["spread"] = hi - lo;
                   out.summary["nodes"] = N;
                   return out;
                 }});

    v.push_back({"cubic",
                 "lowest Witten eigenvalues of the cubic model on T-rescaled grids",
                 {inum("k", "5", 1, 50, "eigenvalues"), inum("n", "400", 20, 100000, "cells"),
                  num("ratio", "8", 1.5, 100, "T ladder ratio"), inum("levels", "3", 2, 8, "T ladder length")},
                 {},
                 [](const ParamSet& p, std::uint64_t) {
                   ExperimentOutput out;
                   out.table = Table({"t", "k", "lambda", "scaled"});
                   double T = 1;
                   for (int l = 0; l < p.integer("levels"); ++l, T *= p.num("ratio")) {
                     auto c = cubic_model_eigs(T, p.integer("k"), p.integer("n"));
                     for (int q = 0; q < p.integer("k"); ++q)
                       out.table.add({T, static_cast<long long>(q), c.eigenvalues[q], c.scaled[q]});
                   }
                   return out;
                 }});

    v.push_back({"cheeger-muller",
                 "combinatorial against analytic torsion of the twisted circle",
                 {num("theta", "3.14159265358979", -1e3, 1e3, "holonomy angle"),
                  inum("n_grid", "2000", 16, 8000, "finite element nodes")},
                 [](const ParamSet& p) {
                   double a = p.num("theta") / (2 * pi);
                   a -= std::floor(a);
                   require(a > 1e-9 && a < 1 - 1e-9, ErrorKind::invalid_argument,
                           "cheeger-muller.theta must not be a multiple of 2 pi");
                 },
                 [](const ParamSet& p, std::uint64_t) {
                   CheegerMuller cm = cheeger_muller_compare(p.num("theta"), p.integer("n_grid"));
                   ExperimentOutput out;
                   out.table = Table({"theta", "comb", "exact", "fem", "gap_exact", "gap_fem"});
                   out.table.add({cm.theta, cm.combinatorial, cm.analytic_exact, cm.analytic_fem, cm.gap_exact,
                                  cm.gap_fem});
                   out.summary["resolved_modes"] = cm.resolved;
                   return out;
                 }});

    v.push_back({"suspension",
                 "suspended Morse complex: ranks with and without a removed ball, Gaussian normalisation",
                 {choice("model", "circle", {"circle", "torus"}, "base model"),
                  inum("n", "4", 2, 64, "suspension dimension (even)"), inum("m", "1", 1, 8, "coefficient rank"),
                  inum("ball", "1", 0, 1, "remove a ball"), num("t", "1", 1e-3, 1e3, "Gaussian T"),
                  num("t_prime", "2", 1e-3, 1e3, "second Gaussian T")},
                 [](const ParamSet& p) {
                   require(p.integer("n") % 2 == 0, ErrorKind::invalid_argument, "suspension.n must be even");
                 },
                 [](const ParamSet& p, std::uint64_t) {
                   const int m = p.integer("m"), N = p.integer("n");
                   cmat I = cmat::Identity(m, m);
                   MorseComplexData D = build_complex(p.str("model") == "circle" ? circle_model(1.0, I) : torus_model(I, I));
                   BallRanks br = ball_removed_ranks(D, N, p.integer("ball") == 1);
                   SuspendedComplex s = suspend(D.complex, N, p.num("t"));
                   GaussianProbe g = gaussian_normalization_probe(N, p.num("t"), p.num("t_prime"));
                   EulerData e0 = euler_chars(D.complex);
                   ExperimentOutput out;
                   out.table = Table({"degree", "computed", "expected"});
                   for (std::size_t l = 0; l < br.computed.size(); ++l)
                     out.table.add({static_cast<long long>(l), static_cast<long long>(br.computed[l]),
                                    static_cast<long long>(br.expected[l])});
                   out.summary["ranks_match"] = br.match;
                   out.summary["chi_prime"] = e0.chi_prime;
                   out.summary["chi_prime_suspended"] = s.euler.chi_prime;
                   out.summary["torsion"] = finite_torsion(D.complex);
                   out.summary["torsion_suspended"] = finite_torsion(s.complex);
                   out.summary["gaussian_ratio_heat_normalisation"] = g.ratio_heat;
                   out.summary["gaussian_ratio_predicted"] = g.predicted_heat_ratio;
                   out.summary["gaussian_ratio_probability_normalisation"] = g.ratio_prob;
                   out.summary["t_independent_normalisation"] = g.invariant;
                   return out;
                 }});
    return v;
  }();
  return all;
}

inline const Experiment& find_experiment(const std::string& name) {
  for (const auto& e : experiments())
    if (e.name == name) return e;
  throw Error(ErrorKind::invalid_argument, "unknown experiment '" + name + "'");
}

// Merges defaults with the given values, rejects unknown keys, range-checks
// numbers and enums, then runs the experiment's own precondition check.
inline ParamSet resolve_params(const Experiment& ex, const std::map<std::string, std::string>& given) {
  std::map<std::string, std::string> v;
  for (const auto& s : ex.params) v[s.key] = s.def;
  for (const auto& [k, val] : given) {
    auto it = std::find_if(ex.params.begin(), ex.params.end(), [&](const ParamSpec& s) { return s.key == k; });
    require(it != ex.params.end(), ErrorKind::invalid_argument, "unknown parameter " + ex.name + "." + k);
    v[k] = val;
  }
  for (const auto& s : ex.params) {
    const std::string full = ex.name + "." + s.key;
    if (!s.choices.empty()) {
      require(std::find(s.choices.begin(), s.choices.end(), v[s.key]) != s.choices.end(), ErrorKind::invalid_argument,
              full + " must be one of the listed values");
      continue;
    }
    double x = parse_number(full, v[s.key]);
    require(std::isfinite(x), ErrorKind::invalid_argument, full + " must be finite");
    require(x >= s.lo && x <= s.hi, ErrorKind::invalid_argument,
            full + " must lie in [" + format_double(s.lo) + ", " + format_double(s.hi) + "]");
    if (s.integer) require(x == std::floor(x), ErrorKind::invalid_argument, full + " must be an integer");
  }
  ParamSet ps(ex.name, v);
  if (ex.check) ex.check(ps);
  return ps;
}

// Canonical text of a resolved configuration; its hash goes into the manifest.
inline std::string canonical_config(const std::string& experiment, const ParamSet& p, std::uint64_t seed) {
  std::string s = "experiment=" + experiment + "\nseed=" + std::to_string(seed) + "\n";
  for (const auto& [k, v] : p.values()) s += experiment + "." + k + "=" + v + "\n";
  return s;
}

}  // namespace tlab
