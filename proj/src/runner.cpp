#include "brm/runner.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <limits>
#include <ostream>

#include "brm/config.hpp"
#include "brm/errors.hpp"
#include "brm/montecarlo.hpp"
#include "brm/output.hpp"
#include "brm/theory.hpp"

namespace brm {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string_view path_name(TracePath p) {
  switch (p) {
    case TracePath::banded: return "banded";
    case TracePath::spectral: return "spectral";
    default: return "automatic";
  }
}

class Run {
 public:
  Run(const ExperimentSpec& spec, fs::path dir, std::ostream& out, std::ostream& err)
      : spec_(spec), dir_(std::move(dir)), out_(out), err_(err) {
    opt_.threads = resolve_threads(spec.threads);
    opt_.path = spec.dense_oracle ? TracePath::spectral : TracePath::automatic;
  }

  json header() const {
    const auto& c = spec_.ensemble;
    json h;
    h["tool"] = version_string();
    h["command"] = std::string(to_string(spec_.command));
    h["config"] = to_config_text(spec_);
    h["started"] = utc_now();
    h["model"] = std::string(to_string(spec_.model));
    h["base_seed"] = c.base_seed;
    h["replicas"] = spec_.replicas;
    h["threads"] = opt_.threads;
    h["trace_path"] = spec_.dense_oracle ? "spectral" : "automatic";
    h["seed_scheme"] =
        "philox4x32-10, key = base seed, counter = (replica, x, y); one stream per replica";
    h["profile"] = c.profile.describe();
    h["v"] = c.v;
    if (spec_.model == Model::band) {
      h["N"] = c.N();
      h["b"] = c.b;
      h["bandwidth"] = c.bandwidth();
      h["truncation"] = c.truncation;
      h["chi"] = c.chi();
      h["regime_warning"] = !c.in_recommended_regime();
      h["config_digest"] = config_digest(c);
    } else {
      h["N"] = spec_.goe_size;
    }
    h["exploratory"] = exploratory();
    return h;
  }

  bool exploratory() const {
    if (spec_.command == Subcommand::local_scale || spec_.command == Subcommand::semicircle)
      return false;
    for (const auto* list : {&spec_.z1, &spec_.z2})
      for (cplx z : *list)
        if (!in_lambda_eta(z, spec_.ensemble.v)) return true;
    return false;
  }

  void emit(RunManifest& m, const std::string& name, const CsvTable& t) {
    m.add_output(name, write_table(dir_, name, t));
  }

  void execute(RunManifest& m) {
    switch (spec_.command) {
      case Subcommand::semicircle: semicircle(m); break;
      case Subcommand::correlation: correlation(m); break;
      case Subcommand::scaling: scaling(m); break;
      case Subcommand::local_scale: local_scale(m); break;
      case Subcommand::theory_table: theory_table(m); break;
      case Subcommand::pointwise: pointwise(m); break;
    }
  }

 private:
  BandMatrixSample draw(long r) const {
    if (spec_.model == Model::goe)
      return sample_goe(spec_.goe_size, spec_.ensemble.v, spec_.ensemble.base_seed,
                        static_cast<std::uint64_t>(r));
    return sample(spec_.ensemble, static_cast<std::uint64_t>(r));
  }

  TraceSamples traces(const EnsembleConfig& c, long goe_size, std::span<const cplx> z) const {
    if (spec_.model == Model::goe)
      return trace_samples_goe(goe_size, c.v, c.base_seed, z, spec_.replicas, opt_);
    return trace_samples(c, z, spec_.replicas, opt_);
  }

  CsvTable trace_table(const TraceSamples& s) const {
    CsvTable t("normalized resolvent traces f(z) = (1/N) tr (H - z)^-1, one row per replica and z",
               {{"replica", "1"}, {"z_re", "1"}, {"z_im", "1"}, {"f_re", "1"}, {"f_im", "1"}});
    for (long r = 0; r < s.replicas; ++r)
      for (std::size_t k = 0; k < s.z.size(); ++k)
        t.row().cell(r).cell(s.z[k].real()).cell(s.z[k].imag()).cell(s.at(r, k).real()).cell(s.at(r, k).imag());
    return t;
  }

  // Leading coefficient of the covariance and the factor that scales the
  // estimate to it: Nb for the band model, N^2 for GOE.
  std::pair<cplx, double> theory_pair(cplx z1, cplx z2, double N, double b) const {
    const double v = spec_.ensemble.v;
    if (spec_.model == Model::goe) return {s_goe(z1, z2, v), N * N};
    cplx s(kNaN, kNaN);
    try {
      s = s_leading(z1, z2, v, spec_.ensemble.profile);
    } catch (const DomainError&) {
      // outside the domain of the theory; leave the column empty
    }
    return {s, N * b};
  }

  void semicircle(RunManifest& m) {
    const long R = spec_.replicas;
    std::vector<SpectralSample> eigs(R);
    parallel_for(R, opt_.threads, [&](long r) { eigs[r] = eigenvalues_dense(draw(r)); });
    CsvTable ev("eigenvalues of each sample, ascending", {{"replica", "1"}, {"index", "1"}, {"lambda", "1"}});
    CsvTable ks("Kolmogorov-Smirnov distance between the empirical eigenvalue distribution and the semicircle law of variance v",
                {{"replica", "1"}, {"N", "1"}, {"b", "1"}, {"v", "1"}, {"ks_distance", "1"}});
    const double b = spec_.model == Model::goe ? spec_.goe_size : spec_.ensemble.b;
    for (long r = 0; r < R; ++r) {
      const auto& e = eigs[r].eigenvalues;
      for (std::size_t i = 0; i < e.size(); ++i) ev.row().cell(r).cell(static_cast<long>(i)).cell(e[i]);
      const double d = counting_function_distance(eigs[r], spec_.ensemble.v);
      ks.row().cell(r).cell(spec_.matrix_size()).cell(b).cell(spec_.ensemble.v).cell(d);
      out_ << "replica " << r << " ks_distance " << format_double(d) << "\n";
    }
    emit(m, "eigenvalues.csv", ev);
    emit(m, "semicircle.csv", ks);
  }

  std::vector<cplx> all_z() const {
    std::vector<cplx> z = spec_.z1;
    z.insert(z.end(), spec_.z2.begin(), spec_.z2.end());
    return z;
  }

  void correlation(RunManifest& m) {
    const auto z = all_z();
    const auto s = traces(spec_.ensemble, spec_.goe_size, z);
    m.set("trace_path_used", std::string(path_name(s.path_used)));
    emit(m, "traces.csv", trace_table(s));
    const std::size_t nz = spec_.z1.size();
    const bool paired = !spec_.z2.empty();
    CsvTable t("scaled covariance estimate K*C(z1,z2) against its leading coefficient S(z1,z2); "
               "K = N b (band) or N^2 (goe); tolerance = 3 K stderr + 0.2 |S|",
               {{"z1_re", "1"}, {"z1_im", "1"}, {"z2_re", "1"}, {"z2_im", "1"},
                {"scaled_C_re", "1"}, {"scaled_C_im", "1"}, {"scaled_stderr", "1"},
                {"S_re", "1"}, {"S_im", "1"}, {"deviation", "1"}, {"tolerance", "1"},
                {"within_tolerance", "bool"}, {"exploratory", "bool"}});
    const double N = static_cast<double>(spec_.matrix_size());
    for (std::size_t i = 0; i < nz; ++i) {
      const std::size_t k2 = paired ? nz + i : i;
      const cplx z1 = z[i], z2 = z[k2];
      const auto e = correlation_estimate(s, i, k2);
      const auto [S, scale] = theory_pair(z1, z2, N, spec_.ensemble.b);
      const cplx scaled = scale * e.mean;
      const double dev = std::abs(scaled - S);
      const double tol = 3.0 * scale * e.stderr + 0.2 * std::abs(S);
      const bool expl = !in_lambda_eta(z1, spec_.ensemble.v) || !in_lambda_eta(z2, spec_.ensemble.v);
      t.row().cell(z1.real()).cell(z1.imag()).cell(z2.real()).cell(z2.imag());
      t.cell(scaled.real()).cell(scaled.imag()).cell(scale * e.stderr);
      t.cell(S.real()).cell(S.imag()).cell(dev).cell(tol).cell(dev <= tol ? 1L : 0L).cell(expl ? 1L : 0L);
      out_ << "pair " << i << " scaled_C " << format_complex(scaled) << " stderr "
           << format_double(scale * e.stderr) << " S " << format_complex(S) << "\n";
    }
    emit(m, "correlation.csv", t);
  }

  void scaling(RunManifest& m) {
    const bool goe = spec_.model == Model::goe;
    const cplx z1 = spec_.z1[0];
    const bool paired = !spec_.z2.empty();
    const cplx z2 = paired ? spec_.z2[0] : z1;
    std::vector<cplx> z{z1};
    if (paired && z2 != z1) z.push_back(z2);
    CsvTable t(std::string("covariance estimate C(z1,z2) over the size grid; abscissa = ") +
                   (goe ? "N" : "N b"),
               {{"N", "1"}, {"b", "1"}, {"abscissa", "1"}, {"C_re", "1"}, {"C_im", "1"},
                {"abs_C", "1"}, {"stderr", "1"}, {"scaled_C_re", "1"}, {"scaled_C_im", "1"},
                {"S_re", "1"}, {"S_im", "1"}});
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < spec_.sizes.size(); ++i) {
      EnsembleConfig c = spec_.ensemble;
      const long N = spec_.sizes[i];
      double b = static_cast<double>(N);
      if (!goe) {
        c.n = (N - 1) / 2;
        c.b = b = spec_.bands[i];
        c.validate();
      }
      const auto s = traces(c, N, z);
      emit(m, "traces_" + std::to_string(i) + ".csv", trace_table(s));
      const auto e = correlation_estimate(s, 0, z.size() - 1);
      const double x = goe ? static_cast<double>(N) : static_cast<double>(N) * b;
      const auto [S, scale] = theory_pair(z1, z2, static_cast<double>(N), b);
      t.row().cell(N).cell(b).cell(x).cell(e.mean.real()).cell(e.mean.imag()).cell(std::abs(e.mean));
      t.cell(e.stderr).cell(scale * e.mean.real()).cell(scale * e.mean.imag()).cell(S.real()).cell(S.imag());
      pts.emplace_back(x, std::abs(e.mean));
      out_ << "N " << N << " b " << format_double(b) << " abs_C " << format_double(std::abs(e.mean))
           << " stderr " << format_double(e.stderr) << "\n";
    }
    emit(m, "scaling.csv", t);
    const auto fit = scaling_fit(pts);
    CsvTable f("least-squares fit of log |C| against log abscissa",
               {{"slope", "1"}, {"slope_stderr", "1"}, {"intercept", "1"}, {"points", "1"}});
    f.row().cell(fit.slope).cell(fit.slope_stderr).cell(fit.intercept).cell(static_cast<long>(pts.size()));
    emit(m, "fit.csv", f);
    m.set("slope", fit.slope);
    out_ << "slope " << format_double(fit.slope) << " +- " << format_double(fit.slope_stderr) << "\n";
  }

  CsvTable local_table() const {
    return CsvTable(
        "smoothed local-scale correlation at lambda -+ delta/2 divided by N b, and its leading "
        "small-delta term",
        {{"lambda", "1"}, {"delta", "1"}, {"sigma", "1"}, {"sigma_asymptotic", "1"}, {"nu", "1"},
         {"c1", "1"}});
  }

  void local_rows(CsvTable& t, double lambda, std::vector<std::pair<double, double>>* pts) const {
    const auto& c = spec_.ensemble;
    for (double d : spec_.delta) {
      const auto r = sigma_asymptotic(lambda, d, c.v, c.profile, static_cast<double>(c.N()), c.b);
      t.row().cell(r.lambda).cell(r.delta).cell(r.sigma_value).cell(r.asymptotic_value).cell(r.nu).cell(r.c1);
      if (pts) pts->emplace_back(d, std::abs(r.sigma_value));
    }
  }

  void local_scale(RunManifest& m) {
    auto t = local_table();
    CsvTable f("least-squares fit of log |sigma| against log delta, with the predicted exponent -(2 - 1/nu)",
               {{"lambda", "1"}, {"slope", "1"}, {"slope_stderr", "1"}, {"intercept", "1"},
                {"predicted_slope", "1"}});
    const double nu = spec_.ensemble.profile.small_p_constants().nu;
    for (double lambda : spec_.lambda) {
      std::vector<std::pair<double, double>> pts;
      local_rows(t, lambda, &pts);
      const auto fit = scaling_fit(pts);
      f.row().cell(lambda).cell(fit.slope).cell(fit.slope_stderr).cell(fit.intercept).cell(-(2.0 - 1.0 / nu));
      out_ << "lambda " << format_double(lambda) << " slope " << format_double(fit.slope)
           << " predicted " << format_double(-(2.0 - 1.0 / nu)) << "\n";
    }
    emit(m, "local_scale.csv", t);
    emit(m, "fit.csv", f);
  }

  void theory_table(RunManifest& m) {
    const double v = spec_.ensemble.v;
    if (!spec_.z1.empty()) {
      CsvTable w("semicircle Stieltjes transform w(z), root of v w^2 + z w + 1 = 0 with Im w Im z >= 0",
                 {{"z_re", "1"}, {"z_im", "1"}, {"w_re", "1"}, {"w_im", "1"}, {"residual", "1"},
                  {"in_domain", "bool"}});
      std::vector<cplx> seen;
      for (cplx z : all_z()) {
        if (std::find(seen.begin(), seen.end(), z) != seen.end()) continue;
        seen.push_back(z);
        const auto s = stieltjes_w(z, v);
        w.row().cell(z.real()).cell(z.imag()).cell(s.w.real()).cell(s.w.imag()).cell(s.residual());
        w.cell(in_lambda_eta(z, v) ? 1L : 0L);
        out_ << "z " << format_complex(z) << " w " << format_complex(s.w) << "\n";
      }
      emit(m, "stieltjes.csv", w);
    }
    if (!spec_.z2.empty()) {
      CsvTable t("leading covariance coefficient S(z1,z2) and the integral Q(z1,z2) it is built from",
                 {{"z1_re", "1"}, {"z1_im", "1"}, {"z2_re", "1"}, {"z2_im", "1"}, {"S_re", "1"},
                  {"S_im", "1"}, {"Q_re", "1"}, {"Q_im", "1"}});
      for (std::size_t i = 0; i < spec_.z1.size(); ++i) {
        const cplx z1 = spec_.z1[i], z2 = spec_.z2[i];
        cplx S(kNaN, kNaN), Q(kNaN, kNaN);
        const cplx w1 = stieltjes_w(z1, v).w, w2 = stieltjes_w(z2, v).w;
        const cplx denom = (1.0 - v * w1 * w1) * (1.0 - v * w2 * w2);
        if (spec_.model == Model::goe) {
          S = s_goe(z1, z2, v);
          Q = S * denom / (2.0 * v);
        } else if (in_lambda_eta(z1, v) && in_lambda_eta(z2, v)) {
          Q = q_integral(z1, z2, v, spec_.ensemble.profile);
          S = 2.0 * v * Q / denom;
        }
        t.row().cell(z1.real()).cell(z1.imag()).cell(z2.real()).cell(z2.imag());
        t.cell(S.real()).cell(S.imag()).cell(Q.real()).cell(Q.imag());
      }
      emit(m, "s_table.csv", t);
    }
    if (!spec_.delta.empty()) {
      auto t = local_table();
      for (double lambda : spec_.lambda) local_rows(t, lambda, nullptr);
      emit(m, "local_scale.csv", t);
    }
  }

  void pointwise(RunManifest& m) {
    const cplx z = spec_.z1[0];
    CsvTable t("sup over the bulk index set |x| <= n - bL of |mean G(x,x;z) - w(z)|, jackknife stderr",
               {{"N", "1"}, {"b", "1"}, {"L", "1"}, {"range_first", "1"}, {"range_last", "1"},
                {"sup_distance", "1"}, {"stderr", "1"}, {"w_re", "1"}, {"w_im", "1"}});
    for (std::size_t i = 0; i < spec_.bands.size(); ++i) {
      EnsembleConfig c = spec_.ensemble;
      c.b = spec_.bands[i];
      const auto p = pointwise_diagonal_study(c, z, spec_.L, spec_.replicas, opt_);
      t.row().cell(c.N()).cell(c.b).cell(spec_.L).cell(p.range.first).cell(p.range.last);
      t.cell(p.sup_distance).cell(p.stderr).cell(p.w.real()).cell(p.w.imag());
      CsvTable d("replica mean of the resolvent diagonal G(x,x;z), centred index x",
                 {{"x", "1"}, {"g_re", "1"}, {"g_im", "1"}, {"abs_deviation", "1"}, {"in_range", "bool"}});
      for (long k = 0; k < c.N(); ++k) {
        const long x = k - c.n;
        const cplx g = p.mean_diagonal[k];
        d.row().cell(x).cell(g.real()).cell(g.imag()).cell(std::abs(g - p.w)).cell(p.range.contains(x) ? 1L : 0L);
      }
      emit(m, "diagonal_" + std::to_string(i) + ".csv", d);
      out_ << "b " << format_double(c.b) << " sup_distance " << format_double(p.sup_distance)
           << " stderr " << format_double(p.stderr) << "\n";
    }
    emit(m, "pointwise.csv", t);
  }

  const ExperimentSpec& spec_;
  fs::path dir_;
  std::ostream& out_;
  std::ostream& err_;
  EngineOptions opt_;
};

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Band random matrix experiments", "brm"};
  std::string command_name, config_path, out_dir = "brm-out";
  std::optional<std::uint64_t> seed;
  std::optional<long> replicas;
  std::optional<int> threads;
  bool dense_oracle = false, version = false;
  app.add_option("command", command_name,
                 "semicircle | correlation | scaling | local-scale | theory-table | pointwise");
  app.add_option("--config", config_path, "config file, or a manifest.json to rerun");
  app.add_option("--out", out_dir, "output directory (created if missing)");
  app.add_option("--seed", seed, "base seed (overrides the config)");
  app.add_option("--replicas", replicas, "replica count (overrides the config)");
  app.add_option("--threads", threads, "worker threads, 0 = all cores (overrides the config)");
  app.add_flag("--dense-oracle", dense_oracle, "force the eigendecomposition path");
  app.add_flag("--version", version, "print the version and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage: " << e.what() << "\n";
    return kExitConfig;
  }
  if (version) {
    out << version_string() << "\n";
    return kExitOk;
  }

  ExperimentSpec spec;
  try {
    if (config_path.empty()) throw ConfigError("--config is required");
    std::optional<Subcommand> cmd;
    if (!command_name.empty()) cmd = parse_subcommand(command_name);
    spec = load_config_file(config_path, cmd);
    if (seed) spec.ensemble.base_seed = *seed;
    if (replicas) spec.replicas = *replicas;
    if (threads) spec.threads = *threads;
    if (dense_oracle) spec.dense_oracle = true;
    spec.validate();
  } catch (const ConfigError& e) {
    err << "config: " << e.what() << "\n";
    return kExitConfig;
  }

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "io: cannot create " << dir.string() << ": " << ec.message() << "\n";
    return kExitFailure;
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  Run run(spec, dir, out, err);
  if (spec.model == Model::band && !spec.ensemble.in_recommended_regime())
    err << "warning: regime: chi = log b / log n = " << format_double(spec.ensemble.chi())
        << " is outside (1/3, 1)\n";
  if (run.exploratory())
    err << "warning: exploratory: some z lie outside |Im z| >= " << format_double(lambda_eta(spec.ensemble.v))
        << "\n";
  std::optional<RunManifest> manifest;
  try {
    manifest.emplace(dir, run.header());
    run.execute(*manifest);
    manifest->finish("complete", elapsed());
  } catch (const NumericalError& e) {
    if (manifest) manifest->fail("numerical", e.what(), elapsed());
    err << "numerical: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DomainError& e) {
    if (manifest) manifest->fail("domain", e.what(), elapsed());
    err << "numerical: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    if (manifest) manifest->fail("config", e.what(), elapsed());
    err << "config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    if (manifest) {
      try {
        manifest->fail("error", e.what(), elapsed());
      } catch (const std::exception&) {
      }
    }
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  out << "wrote " << manifest->path().string() << "\n";
  return kExitOk;
}

}  // namespace brm
