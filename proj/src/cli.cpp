#include "spilloverfree/cli.hpp"

#include <complex>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "spilloverfree/embedding.hpp"
#include "spilloverfree/io.hpp"
#include "spilloverfree/log.hpp"
#include "spilloverfree/objective.hpp"
#include "spilloverfree/pencil.hpp"
#include "spilloverfree/probgen.hpp"
#include "spilloverfree/spectral.hpp"

namespace spillfree {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMu = "Mu.mtx";
constexpr const char* kK = "K.mtx";
constexpr const char* kOld = "old.spec";
constexpr const char* kTargets = "targets.spec";
constexpr const char* kSpectrum = "spectrum.spec";
constexpr const char* kMuTilde = "Mu_tilde.mtx";
constexpr const char* kKTilde = "K_tilde.mtx";
constexpr const char* kTheta = "Theta.mtx";
constexpr const char* kGamma = "GammaTilde.mtx";
constexpr const char* kNew = "new.spec";
constexpr const char* kReport = "report.txt";

struct RunConfig {
  Tolerances tol;
  std::string method = "auto";
  double tau1 = 1.0;
  double tau2 = 1.0;
  Index restarts = 3;
  Index max_evaluations = 0;
  ProblemSpec spec;
  std::string in;
  std::string out;
  std::string updated;
  std::string targets;
  std::string theta;
  std::string gamma;
  int example = 1;
};

Method parse_method(const std::string& m) {
  if (m == "direct") return Method::Direct;
  if (m == "smw") return Method::Smw;
  return Method::Auto;
}

void add_tolerances(CLI::App* sub, RunConfig& cfg) {
  const auto pos = CLI::PositiveNumber;
  sub->add_option("--tol-symmetry", cfg.tol.symmetry, "accepted relative asymmetry of inputs")
      ->check(pos);
  sub->add_option("--tol-nonsingular", cfg.tol.nonsingular,
                  "minimum reciprocal condition of M_u, K_phi, Gamma")
      ->check(pos);
  sub->add_option("--tol-ill-defined", cfg.tol.ill_defined,
                  "minimum reciprocal condition of inverted matrices in the update")
      ->check(pos);
  sub->add_option("--tol-simplicity", cfg.tol.simplicity, "relative eigenvalue separation")
      ->check(pos);
  sub->add_option("--tol-rank", cfg.tol.rank, "relative singular value cutoff")->check(pos);
  sub->add_option("--tol-match", cfg.tol.match, "relative eigenvalue matching window")->check(pos);
  sub->add_option("--tol-residual", cfg.tol.residual, "residual bound used by verify")->check(pos);
}

void add_weights(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--method", cfg.method, "update formula")
      ->check(CLI::IsMember({"direct", "smw", "auto"}));
  sub->add_option("--tau1", cfg.tau1, "weight of the M_u term of Rec.MK")->check(CLI::PositiveNumber);
  sub->add_option("--tau2", cfg.tau2, "weight of the K term of Rec.MK")->check(CLI::PositiveNumber);
}

void add_optimizer(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--restarts", cfg.restarts, "sign-flipped restarts")->check(CLI::NonNegativeNumber);
  sub->add_option("--max-evals", cfg.max_evaluations, "evaluations per simplex run (0: 200 p)")
      ->check(CLI::NonNegativeNumber);
}

void add_spec(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--nu", cfg.spec.n_u, "structural DOF count")->check(CLI::PositiveNumber);
  sub->add_option("--nphi", cfg.spec.n_phi, "electric DOF count")->check(CLI::PositiveNumber);
  sub->add_option("--p", cfg.spec.p, "number of replaced eigenvalues")->check(CLI::PositiveNumber);
  sub->add_option("--s", cfg.spec.s, "conjugate pairs among the replaced eigenvalues");
  sub->add_option("--stilde", cfg.spec.s_tilde, "conjugate pairs among the new eigenvalues")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--max-perturb", cfg.spec.max_perturbation, "bound on |new - old|")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", cfg.spec.seed, "random seed");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::IOError, fmt::format("cannot create directory '{}'", dir.string()));
  }
}

StructuredPencil<double> load_pencil(const fs::path& dir, const Tolerances& tol) {
  const Matrix<double> m_u = read_matrix(dir / kMu);
  const Matrix<double> k = read_matrix(dir / kK);
  if (m_u.rows() != m_u.cols() || k.rows() <= m_u.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "K must be larger than M_u; the pencil needs n_phi >= 1 electric unknowns");
  }
  return validate_pencil(m_u, k, m_u.rows(), k.rows() - m_u.rows(), tol);
}

std::vector<std::complex<double>> expand(const RealSpectralData<double>& d) {
  std::vector<std::complex<double>> out;
  for (const auto& v : d.block_values()) {
    out.push_back(v);
    if (v.imag() > 0) out.push_back(std::conj(v));
  }
  return out;
}

/// Original pencil with its replaced and retained eigendata and the targets.
struct Setup {
  StructuredPencil<double> pencil;
  SpectrumResult<double> spectrum;
  RealSpectralData<double> old;
  RealSpectralData<double> retained;
  Matrix<double> target_lambda;
  Index target_pairs = 0;
  bool identity_targets = false;
  std::vector<std::pair<std::string, fs::path>> inputs;
};

Setup load_setup(const RunConfig& cfg) {
  const fs::path dir(cfg.in);
  if (cfg.in.empty()) throw Error(ErrorCode::Usage, "--in is required");
  auto pencil = load_pencil(dir, cfg.tol);
  auto spectrum = solve_spectrum(pencil, cfg.tol);
  auto old = read_spectral(dir / kOld);
  const auto old_values = expand(old);
  const auto selection = select_eigendata<double>(spectrum, old_values, cfg.tol);
  if (old.X.rows() == 0) {
    old = selection.old;
  } else if (old.X.rows() != pencil.n()) {
    throw Error(ErrorCode::DimensionMismatch, "old eigenvectors must have n rows");
  }
  Setup s{pencil, spectrum, old, retained_eigendata(spectrum, selection.retained, cfg.tol),
          Matrix<double>(), 0, false, {}};
  s.inputs = {{"Mu", dir / kMu}, {"K", dir / kK}, {"old", dir / kOld}};
  fs::path targets = cfg.targets.empty() ? dir / kTargets : fs::path(cfg.targets);
  if (fs::exists(targets)) {
    const auto t = read_spectral(targets);
    if (t.p() != old.p()) {
      throw Error(ErrorCode::DimensionMismatch, "target and replaced sets differ in size");
    }
    s.target_lambda = t.Lambda;
    s.target_pairs = t.s;
    s.inputs.emplace_back("targets", targets);
    const auto values = expand(t);
    check_disjoint<double>(spectrum, selection.retained, values, cfg.tol);
  } else if (!cfg.targets.empty()) {
    throw Error(ErrorCode::IOError, fmt::format("cannot open '{}' for reading", targets.string()));
  } else {
    s.target_lambda = old.Lambda;
    s.target_pairs = old.s;
    s.identity_targets = true;
  }
  return s;
}

ParameterSet<double> initial_parameters(const RunConfig& cfg, const Embedder<double>& e) {
  ParameterSet<double> ps = default_gamma_tilde(e.gamma1(), e.s(), e.s_tilde());
  if (!cfg.theta.empty()) ps.theta = read_matrix(cfg.theta);
  if (!cfg.gamma.empty()) {
    ps.gamma_tilde = read_matrix(cfg.gamma);
    ps.mode = GammaChoice::Custom;
  }
  if (!cfg.theta.empty() && ps.mode == GammaChoice::ChoiceA) ps.mode = GammaChoice::Custom;
  return ps;
}

void describe(Report& r, const Setup& s, const Embedder<double>& e) {
  r.set("n_u", s.pencil.n_u());
  r.set("n_phi", s.pencil.n_phi());
  r.set("p", e.p());
  r.set("s", e.s());
  r.set("s_tilde", e.s_tilde());
  r.set("identity_targets", s.identity_targets);
}

void add_residuals(Report& r, const std::string& prefix, const ResidualReport<double>& rr) {
  r.set(prefix + "method", std::string(to_string(rr.method)));
  r.set(prefix + "gamma_choice", std::string(to_string(rr.mode)));
  r.set(prefix + "res1_original", rr.res1_original);
  r.set(prefix + "res2_original", rr.res2_original ? format_double(*rr.res2_original) : "unavailable");
  r.set(prefix + "res1_updated", rr.res1_updated);
  r.set(prefix + "res2_updated", rr.res2_updated ? format_double(*rr.res2_updated) : "unavailable");
  r.set(prefix + "rec_mk", rr.rec_mk);
}

void write_updated(const fs::path& dir, const UpdatedSystem<double>& u,
                   const Matrix<double>& target_lambda, Index target_pairs) {
  ensure_dir(dir);
  write_matrix(u.M_u_tilde, dir / kMuTilde, MatrixSymmetry::Symmetric);
  write_matrix(u.K_tilde, dir / kKTilde, MatrixSymmetry::Symmetric);
  write_matrix(u.params.theta, dir / kTheta);
  write_matrix(u.params.gamma_tilde, dir / kGamma);
  write_spectral(RealSpectralData<double>{target_lambda, u.X1_tilde, target_pairs}, dir / kNew);
}

void add_hashes(Report& r, const Setup& s, const fs::path& out_dir, bool outputs) {
  for (const auto& [name, path] : s.inputs) r.set("hash.input." + name, sha256_file(path));
  if (!outputs) return;
  for (const char* f : {kMuTilde, kKTilde, kTheta, kGamma, kNew}) {
    r.set(std::string("hash.output.") + fs::path(f).stem().string(), sha256_file(out_dir / f));
  }
}

void emit(const Report& r, const std::string& out_dir, std::ostream& out) {
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    r.write(fs::path(out_dir) / kReport);
  }
  out << r.str();
}

int run_gen(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw Error(ErrorCode::Usage, "--out is required");
  const auto prob = make_problem<double>(cfg.spec, cfg.tol);
  const fs::path dir(cfg.out);
  ensure_dir(dir);
  write_matrix(prob.pencil.M_u(), dir / kMu, MatrixSymmetry::Symmetric);
  write_matrix(prob.pencil.K(), dir / kK, MatrixSymmetry::Symmetric);
  write_spectral(prob.selection.old, dir / kOld);
  RealSpectralData<double> targets{prob.target_lambda, Matrix<double>(0, prob.target_lambda.rows()),
                                   prob.target_pairs};
  write_spectral(targets, dir / kTargets);
  std::vector<Index> all(prob.spectrum.finite_pairs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  write_spectral(retained_eigendata(prob.spectrum, all, cfg.tol), dir / kSpectrum);

  Report r;
  r.set("command", "gen");
  r.set("n_u", prob.spec.n_u);
  r.set("n_phi", prob.spec.n_phi);
  r.set("p", prob.spec.p);
  r.set("s", prob.spec.old_pairs());
  r.set("s_tilde", prob.spec.s_tilde);
  r.set("max_perturbation", prob.spec.max_perturbation);
  r.set("seed", std::to_string(prob.spec.seed));
  r.set("spectral_radius", prob.spectrum.spectral_radius());
  for (const char* f : {kMu, kK, kOld, kTargets, kSpectrum}) {
    r.set(std::string("hash.output.") + fs::path(f).stem().string(), sha256_file(dir / f));
  }
  emit(r, cfg.out, out);
  return 0;
}

int run_solve(const RunConfig& cfg, std::ostream& out) {
  if (cfg.in.empty()) throw Error(ErrorCode::Usage, "--in is required");
  const auto pencil = load_pencil(cfg.in, cfg.tol);
  const auto spectrum = solve_spectrum(pencil, cfg.tol);
  std::vector<Index> all(spectrum.finite_pairs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  const auto finite = retained_eigendata(spectrum, all, cfg.tol);
  const auto jordan = check_jordan_pair(pencil, real_jordan_pair(spectrum, cfg.tol),
                                        cfg.tol.residual, cfg.tol);

  Report r;
  r.set("command", "solve");
  r.set("n_u", pencil.n_u());
  r.set("n_phi", pencil.n_phi());
  r.set("finite_count", static_cast<long long>(spectrum.finite_pairs.size()));
  r.set("infinite_count", spectrum.infinite_basis.cols());
  r.set("conjugate_pairs", finite.s);
  r.set("spectral_radius", spectrum.spectral_radius());
  double margin = std::numeric_limits<double>::infinity();
  for (double m : spectrum.margins) margin = std::min(margin, m);
  r.set("min_simplicity_margin", margin);
  for (const auto& c : jordan.checks) {
    r.set("jordan." + c.name, c.value);
    r.set("jordan." + c.name + ".passed", c.passed);
  }
  r.set("hash.input.Mu", sha256_file(fs::path(cfg.in) / kMu));
  r.set("hash.input.K", sha256_file(fs::path(cfg.in) / kK));
  if (!cfg.out.empty()) {
    ensure_dir(cfg.out);
    write_spectral(finite, fs::path(cfg.out) / kSpectrum);
    r.set("hash.output.spectrum", sha256_file(fs::path(cfg.out) / kSpectrum));
  }
  emit(r, cfg.out, out);
  return jordan.passed() ? 0 : exit_code(ErrorCode::VerificationFailed);
}

int run_embed(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw Error(ErrorCode::Usage, "--out is required");
  const Setup s = load_setup(cfg);
  const Embedder<double> e(s.pencil, s.old, s.target_lambda, cfg.tol);
  const auto ps = initial_parameters(cfg, e);
  const auto u = e.apply(ps, parse_method(cfg.method));
  const auto rr = residual_report(s.pencil, u, s.old, s.target_lambda,
                                  std::optional<RealSpectralData<double>>(s.retained), cfg.tau1,
                                  cfg.tau2);
  write_updated(cfg.out, u, s.target_lambda, e.s_tilde());
  Report r;
  r.set("command", "embed");
  describe(r, s, e);
  r.set("choice_a_available", ps.choice_a_available);
  r.set("tau1", cfg.tau1);
  r.set("tau2", cfg.tau2);
  add_residuals(r, "", rr);
  add_hashes(r, s, cfg.out, true);
  emit(r, cfg.out, out);
  return 0;
}

int run_optimize(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw Error(ErrorCode::Usage, "--out is required");
  const Setup s = load_setup(cfg);
  const Embedder<double> e(s.pencil, s.old, s.target_lambda, cfg.tol);
  const auto seed = initial_parameters(cfg, e);
  OptimizerConfig oc;
  oc.tau1 = cfg.tau1;
  oc.tau2 = cfg.tau2;
  oc.restarts = cfg.restarts;
  oc.max_evaluations = cfg.max_evaluations;
  oc.method = parse_method(cfg.method);
  const auto res = optimize_gamma_tilde(e, seed, oc);
  const auto rr = residual_report(s.pencil, res.best_system, s.old, s.target_lambda,
                                  std::optional<RealSpectralData<double>>(s.retained), cfg.tau1,
                                  cfg.tau2);
  write_updated(cfg.out, res.best_system, s.target_lambda, e.s_tilde());
  Report r;
  r.set("command", "optimize");
  describe(r, s, e);
  r.set("choice_a_available", seed.choice_a_available);
  r.set("tau1", cfg.tau1);
  r.set("tau2", cfg.tau2);
  r.set("baseline_rec_mk",
        res.baseline_rec_mk ? format_double(*res.baseline_rec_mk) : "unavailable");
  r.set("iterations", res.iterations);
  r.set("evaluations", res.evaluations);
  r.set("converged", res.converged);
  add_residuals(r, "", rr);
  add_hashes(r, s, cfg.out, true);
  emit(r, cfg.out, out);
  return 0;
}

int run_verify(const RunConfig& cfg, std::ostream& out) {
  if (cfg.updated.empty()) throw Error(ErrorCode::Usage, "--updated is required");
  const Setup s = load_setup(cfg);
  const fs::path udir(cfg.updated);
  const Matrix<double> m_t = read_matrix(udir / kMuTilde);
  const Matrix<double> k_t = read_matrix(udir / kKTilde);
  const Matrix<double> theta = read_matrix(udir / kTheta);
  const auto fresh = read_spectral(udir / kNew);
  if (m_t.rows() != s.pencil.n_u() || m_t.cols() != s.pencil.n_u() || k_t.rows() != s.pencil.n() ||
      k_t.cols() != s.pencil.n() || theta.rows() != s.old.p() || theta.cols() != s.old.p() ||
      fresh.p() != s.old.p()) {
    throw Error(ErrorCode::DimensionMismatch, "updated system does not fit the problem");
  }
  if (!m_t.allFinite() || !k_t.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "updated matrices must be finite");
  }
  const Matrix<double> x1t = s.old.X * theta;

  CheckReport checks;
  checks.add_at_most("res1_updated", eigen_residual(m_t, k_t, x1t, fresh.Lambda), cfg.tol.residual);
  checks.add_at_most("res2_updated", retained_residual(m_t, k_t, s.retained), cfg.tol.residual);
  checks.add_at_most("symmetry_M_u_tilde", relative_asymmetry(m_t), cfg.tol.symmetry);
  checks.add_at_most("symmetry_K_tilde", relative_asymmetry(k_t), cfg.tol.symmetry);
  checks.add_at_most("target_eigenvalues",
                     (fresh.Lambda - s.target_lambda).norm() /
                         std::max(1.0, s.target_lambda.norm()),
                     cfg.tol.residual);

  Report r;
  r.set("command", "verify");
  for (const auto& c : checks.checks) {
    r.set(c.name, c.value);
    r.set(c.name + ".passed", c.passed);
  }

  bool hashes_ok = true;
  const auto stored = read_report(udir / kReport);
  std::vector<std::pair<std::string, fs::path>> files = s.inputs;
  for (const char* f : {kMuTilde, kKTilde, kTheta, kGamma, kNew}) {
    files.emplace_back(std::string("output.") + fs::path(f).stem().string(), udir / f);
  }
  for (auto& [name, path] : files) {
    const std::string key = name.rfind("output.", 0) == 0 ? "hash." + name : "hash.input." + name;
    const auto it = stored.find(key);
    const bool ok = it != stored.end() && it->second == sha256_file(path);
    r.set(key + ".matches", ok);
    hashes_ok = hashes_ok && ok;
  }
  r.set("residuals_passed", checks.passed());
  r.set("hashes_passed", hashes_ok);
  emit(r, cfg.out, out);
  if (!checks.passed()) {
    for (const auto& c : checks.checks) {
      if (!c.passed) {
        throw Error(ErrorCode::VerificationFailed,
                    fmt::format("{} = {:.3e} exceeds {:.1e}", c.name, c.value, c.threshold));
      }
    }
  }
  if (!hashes_ok) {
    throw Error(ErrorCode::HashMismatch, "stored artifact hashes do not match the files");
  }
  return 0;
}

int run_demo(const RunConfig& cfg, std::ostream& out) {
  ProblemSpec spec = cfg.spec;
  if (cfg.example == 2) {
    if (spec.s < 0) spec.s = 2;
    if (spec.s == spec.s_tilde) spec.s_tilde = spec.s - 1;
  }
  const auto prob = make_problem<double>(spec, cfg.tol);
  const auto retained = retained_eigendata(prob.spectrum, prob.selection.retained, cfg.tol);
  const Embedder<double> e(prob.pencil, prob.selection.old, prob.target_lambda, cfg.tol);
  const auto seed = default_gamma_tilde(e.gamma1(), e.s(), e.s_tilde());
  const Method method = parse_method(cfg.method);

  Report r;
  r.set("command", "demo");
  r.set("example", cfg.example);
  r.set("seed", std::to_string(spec.seed));
  r.set("n_u", spec.n_u);
  r.set("n_phi", spec.n_phi);
  r.set("p", spec.p);
  r.set("s", spec.old_pairs());
  r.set("s_tilde", spec.s_tilde);
  const auto old_values = prob.selection.old.block_values();
  for (std::size_t i = 0; i < old_values.size(); ++i) {
    r.set(fmt::format("old.{}", i), fmt::format("{:.10g} {:.10g}", old_values[i].real(),
                                                 old_values[i].imag()));
  }
  RealSpectralData<double> tgt{prob.target_lambda, Matrix<double>(0, e.p()), prob.target_pairs};
  const auto new_values = tgt.block_values();
  for (std::size_t i = 0; i < new_values.size(); ++i) {
    r.set(fmt::format("target.{}", i), fmt::format("{:.10g} {:.10g}", new_values[i].real(),
                                                    new_values[i].imag()));
  }
  r.set("choice_a_available", seed.choice_a_available);
  if (seed.choice_a_available) {
    const auto u = e.apply(seed, method);
    add_residuals(r, "a.",
                  residual_report(prob.pencil, u, prob.selection.old, prob.target_lambda,
                                  std::optional<RealSpectralData<double>>(retained), cfg.tau1,
                                  cfg.tau2));
  }
  OptimizerConfig oc;
  oc.tau1 = cfg.tau1;
  oc.tau2 = cfg.tau2;
  oc.restarts = cfg.restarts;
  oc.max_evaluations = cfg.max_evaluations;
  oc.method = method;
  const auto res = optimize_gamma_tilde(e, seed, oc);
  add_residuals(r, "b.",
                residual_report(prob.pencil, res.best_system, prob.selection.old,
                                prob.target_lambda, std::optional<RealSpectralData<double>>(retained),
                                cfg.tau1, cfg.tau2));
  r.set("b.iterations", res.iterations);
  r.set("b.evaluations", res.evaluations);
  r.set("b.converged", res.converged);
  emit(r, cfg.out, out);
  return 0;
}

}  // namespace

int cli_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"No-spillover eigenvalue embedding for piezoelectric structure pencils",
               "spilloverfree"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a random problem directory");
  add_spec(gen, cfg);
  add_tolerances(gen, cfg);
  gen->add_option("--out", cfg.out, "problem directory to write");

  auto* solve = app.add_subcommand("solve", "finite and infinite spectrum of a pencil");
  solve->add_option("--in", cfg.in, "problem directory with Mu.mtx and K.mtx")->required();
  solve->add_option("--out", cfg.out, "directory for spectrum.spec and report.txt");
  add_tolerances(solve, cfg);

  auto* embed = app.add_subcommand("embed", "replace eigenvalues without spillover");
  embed->add_option("--in", cfg.in, "problem directory")->required();
  embed->add_option("--out", cfg.out, "directory for the updated system");
  embed->add_option("--targets", cfg.targets, "spectral file with the new eigenvalues");
  embed->add_option("--theta", cfg.theta, "Matrix Market file with Theta");
  embed->add_option("--gamma", cfg.gamma, "Matrix Market file with Gamma~_1");
  add_weights(embed, cfg);
  add_tolerances(embed, cfg);

  auto* optimize = app.add_subcommand("optimize", "minimize Rec.MK over Gamma~_1");
  optimize->add_option("--in", cfg.in, "problem directory")->required();
  optimize->add_option("--out", cfg.out, "directory for the updated system");
  optimize->add_option("--targets", cfg.targets, "spectral file with the new eigenvalues");
  optimize->add_option("--theta", cfg.theta, "Matrix Market file with Theta");
  add_weights(optimize, cfg);
  add_optimizer(optimize, cfg);
  add_tolerances(optimize, cfg);

  auto* verify = app.add_subcommand("verify", "recheck a stored updated system");
  verify->add_option("--in", cfg.in, "problem directory")->required();
  verify->add_option("--updated", cfg.updated, "directory written by embed or optimize")
      ->required();
  verify->add_option("--out", cfg.out, "directory for the verification report");
  add_tolerances(verify, cfg);

  auto* demo = app.add_subcommand("demo", "end-to-end scenario with choices (a) and (b)");
  demo->add_option("--example", cfg.example, "1: same pair count, 2: one pair fewer")
      ->check(CLI::IsMember({1, 2}));
  add_spec(demo, cfg);
  add_weights(demo, cfg);
  add_optimizer(demo, cfg);
  add_tolerances(demo, cfg);
  demo->add_option("--out", cfg.out, "directory for report.txt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : exit_code(ErrorCode::Usage);
  }

  try {
    if (*gen) return run_gen(cfg, out);
    if (*solve) return run_solve(cfg, out);
    if (*embed) return run_embed(cfg, out);
    if (*optimize) return run_optimize(cfg, out);
    if (*verify) return run_verify(cfg, out);
    if (*demo) return run_demo(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return exit_code(ErrorCode::Usage);
}

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"spilloverfree"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace spillfree
