// Command-line front end: density/cdf grids, sampling, moments, Mardia
// sweeps, parameter transforms, validity checks, contour and quadratic-form
// data. Everything is reproducible given --seed; CSV uses '.' decimals and
// '#' comment lines. Exit codes: 0 ok, 2 input error, 3 numeric error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sut/density.hpp"
#include "sut/errors.hpp"
#include "sut/moments.hpp"
#include "sut/params.hpp"
#include "sut/presets.hpp"
#include "sut/quadform.hpp"
#include "sut/sampling.hpp"
#include "sut/transforms.hpp"

using nlohmann::json;
using namespace sut;

namespace {

struct RunConfig {
  std::uint64_t seed = 20240617;
  int qmc_points = 1 << 13;
  int qmc_rand = 8;
  double tolerance = 1e-6;
  std::string out;
  std::string format = "csv";
  std::string params_path;
};

QmcConfig qmc_of(const RunConfig& rc) {
  if (rc.qmc_points <= 0 || (rc.qmc_points & (rc.qmc_points - 1)) != 0)
    throw Error("--qmc-points must be a power of two");
  if (rc.tolerance <= 0.0) throw Error("--tol must be positive");
  return QmcConfig(rc.qmc_points, rc.qmc_rand, rc.seed);
}

SutParams load_params(const RunConfig& rc) {
  if (rc.params_path.empty()) throw Error("missing --params file");
  std::ifstream in(rc.params_path);
  if (!in) throw Error("cannot open params file: " + rc.params_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return params_from_json_text(ss.str());
}

std::ofstream open_or_stdout(const RunConfig& rc, std::ostream*& os) {
  std::ofstream f;
  if (!rc.out.empty()) {
    f.open(rc.out);
    if (!f) throw Error("cannot open output file: " + rc.out);
    os = &f;
  } else {
    os = &std::cout;
  }
  os->precision(12);
  return f;
}

// grid spec "lo:hi:n[,lo:hi:n...]", one block per axis
std::vector<VectorXd> parse_grid(const std::string& spec, int d) {
  std::vector<VectorXd> axes;
  std::stringstream ss(spec);
  std::string block;
  while (std::getline(ss, block, ',')) {
    double lo, hi;
    int n;
    char c1, c2;
    std::stringstream bs(block);
    if (!(bs >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1)
      throw Error("bad grid block '" + block + "', want lo:hi:n");
    VectorXd ax(n);
    for (int i = 0; i < n; ++i) ax[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1.0);
    axes.push_back(ax);
  }
  if (static_cast<int>(axes.size()) != d)
    throw Error("grid spec has " + std::to_string(axes.size()) + " axes, params have d = " +
                std::to_string(d));
  return axes;
}

void emit_grid_eval(const SutParams& p, const RunConfig& rc, const std::string& spec,
                    bool want_cdf) {
  const QmcConfig cfg = qmc_of(rc);
  const Density dens(p, cfg);
  const auto axes = parse_grid(spec, p.d());
  std::ostream* os;
  auto guard = open_or_stdout(rc, os);
  *os << "# seed=" << rc.seed << ", qmc_points=" << rc.qmc_points
      << ", qmc_rand=" << rc.qmc_rand << "\n";
  for (int j = 0; j < p.d(); ++j) *os << "y" << (j + 1) << ",";
  *os << "value,se\n";
  std::vector<int> idx(axes.size(), 0);
  VectorXd y(p.d());
  for (;;) {
    for (size_t j = 0; j < axes.size(); ++j) y[j] = axes[j][idx[j]];
    double value, se;
    if (want_cdf) {
      const CdfResult c = dens.cdf(y);
      value = c.value;
      se = c.error_estimate;
    } else {
      const PdfValue v = dens.pdf_detail(y);
      value = v.value;
      se = v.error_estimate;
    }
    for (int j = 0; j < p.d(); ++j) *os << y[j] << ",";
    *os << value << "," << se << "\n";
    int ax = static_cast<int>(axes.size()) - 1;
    while (ax >= 0 && ++idx[ax] == static_cast<int>(axes[ax].size())) idx[ax--] = 0;
    if (ax < 0) break;
  }
}

json moment_report(const MomentSet& ms, const MardiaMeasures* md) {
  json j;
  auto put_vec = [&](const char* key, const VectorXd& v) {
    j[key] = std::vector<double>(v.data(), v.data() + v.size());
  };
  auto put_mat = [&](const char* key, const MatrixXd& m) {
    std::vector<std::vector<double>> rows(m.rows());
    for (int i = 0; i < m.rows(); ++i)
      for (int c = 0; c < m.cols(); ++c) rows[i].push_back(m(i, c));
    j[key] = rows;
  };
  j["kind"] = ms.kind == MomentSet::Kind::raw ? "raw" : "central";
  if (ms.mu1) put_vec("mu1", *ms.mu1);
  if (ms.mu2) put_mat("mu2", *ms.mu2);
  if (ms.mu3) put_mat("mu3", *ms.mu3);
  if (ms.mu4) put_mat("mu4", *ms.mu4);
  if (ms.mu1) put_vec("mu1_se", ms.mu1_se);
  if (ms.mu2) put_mat("mu2_se", ms.mu2_se);
  if (md) {
    j["mardia"] = {{"beta1", md->beta1},   {"beta2", md->beta2},
                   {"gamma1", md->gamma1}, {"gamma2", md->gamma2},
                   {"se_gamma1", md->se_gamma1}, {"se_gamma2", md->se_gamma2}};
  }
  return j;
}

int dispatch(const std::string& cmd, const RunConfig& rc, CLI::App* sub) {
  const QmcConfig cfg = qmc_of(rc);
  if (cmd == "pdf" || cmd == "cdf") {
    emit_grid_eval(load_params(rc), rc, sub->get_option("--grid")->as<std::string>(),
                   cmd == "cdf");
  } else if (cmd == "sample") {
    const SutParams p = load_params(rc);
    const int n = sub->get_option("--n")->as<int>();
    const std::string method = sub->get_option("--method")->as<std::string>();
    SampleBatch b;
    if (method == "selection")
      b = sample_selection(p, n, rc.seed, cfg);
    else if (method == "convolution")
      b = sample_convolution(p, n, rc.seed, cfg);
    else if (method == "sun-mixture")
      b = sample_sun_mixture(p, n, rc.seed, cfg);
    else
      throw Error("unknown method '" + method + "'");
    std::ostream* os;
    auto guard = open_or_stdout(rc, os);
    write_csv(b, *os);
  } else if (cmd == "moments") {
    const SutParams p = load_params(rc);
    const std::string route = sub->get_option("--route")->as<std::string>();
    json j;
    if (route == "convolution") {
      const MomentSet ms = moments_34(p, cfg);
      const bool can_mardia = is_inf_dof(p.nu) || p.nu > 4.0;
      MardiaMeasures md;
      if (can_mardia) md = mardia(p, cfg);
      j = moment_report(ms, can_mardia ? &md : nullptr);
    } else if (route == "mixture") {
      const MomentSet ms = moments_via_mixture(p, cfg);
      const bool can_mardia = is_inf_dof(p.nu) || p.nu > 4.0;
      MardiaMeasures md;
      if (can_mardia) md = mardia(p, cfg, MomentRoute::mixture);
      j = moment_report(ms, can_mardia ? &md : nullptr);
    } else if (route == "mc") {
      const int n = sub->get_option("--n")->as<int>();
      const SampleBatch b = sample_selection(p, n, rc.seed, cfg);
      const MomentSet ms = sample_moments_raw(b.draws);
      const MardiaMeasures md = sample_mardia(b.draws);
      j = moment_report(ms, &md);
      j["n"] = n;
    } else {
      throw Error("unknown route '" + route + "'");
    }
    j["route"] = route;
    j["seed"] = rc.seed;
    std::ostream* os;
    auto guard = open_or_stdout(rc, os);
    *os << j.dump(2) << "\n";
  } else if (cmd == "mardia-sweep") {
    const std::string family = sub->get_option("--family")->as<std::string>();
    const int m_max = sub->get_option("--m-max")->as<int>();
    std::ostream* os;
    auto guard = open_or_stdout(rc, os);
    *os << "# family=" << family << ", seed=" << rc.seed << "\n";
    *os << "m,gamma1,gamma2,se_gamma1,se_gamma2\n";
    for (int m = 1; m <= m_max; ++m) {
      SutParams p;
      MomentRoute route = MomentRoute::mixture;
      if (family == "fig2") {
        p = from_hpsi(mardia_sweep_family(m));
      } else if (family == "symmetric") {
        p = make_t(VectorXd::Zero(2), MatrixXd::Identity(2, 2), 5.0);
        route = MomentRoute::convolution;
      } else {
        throw Error("unknown family '" + family + "' (want fig2 or symmetric)");
      }
      const MardiaMeasures md = mardia(p, cfg, route);
      *os << m << "," << md.gamma1 << "," << md.gamma2 << "," << md.se_gamma1 << ","
          << md.se_gamma2 << "\n";
    }
  } else if (cmd == "transform") {
    const SutParams p = load_params(rc);
    const std::string op_path = sub->get_option("--op")->as<std::string>();
    std::ifstream in(op_path);
    if (!in) throw Error("cannot open op-spec: " + op_path);
    json op = json::parse(in, nullptr, true);
    const std::string kind = op.at("kind").get<std::string>();
    SutParams result;
    if (kind == "linear") {
      const auto mat = op.at("matrix").get<std::vector<std::vector<double>>>();
      MatrixXd a(mat.size(), mat.empty() ? 0 : mat[0].size());
      for (size_t i = 0; i < mat.size(); ++i)
        for (size_t c = 0; c < mat[i].size(); ++c) a(i, c) = mat[i][c];
      VectorXd b = VectorXd::Zero(a.rows());
      if (op.contains("vector")) {
        const auto v = op.at("vector").get<std::vector<double>>();
        b = Eigen::Map<const VectorXd>(v.data(), v.size());
      }
      result = linear(p, a, b);
    } else if (kind == "marginal") {
      const PartitionSpec spec{op.at("partition").at("d1").get<int>(),
                               op.at("partition").at("d2").get<int>()};
      result = marginal(p, spec, op.value("which", 1));
    } else if (kind == "sum") {
      const PartitionSpec spec{p.d() / 2, p.d() - p.d() / 2};
      result = add_marginals(p, spec);
    } else if (kind == "conditional") {
      const PartitionSpec spec{op.at("partition").at("d1").get<int>(),
                               op.at("partition").at("d2").get<int>()};
      const auto v = op.at("y1").get<std::vector<double>>();
      result = conditional(p, spec, Eigen::Map<const VectorXd>(v.data(), v.size())).params;
    } else if (kind == "condition_positive") {
      const PartitionSpec spec{op.at("partition").at("d1").get<int>(),
                               op.at("partition").at("d2").get<int>()};
      result = condition_positive(p, spec);
    } else if (kind == "reduce_latent") {
      result = reduce_latent(p, op.at("m1").get<int>());
    } else if (kind == "canonical") {
      result = canonical(p).params;
    } else if (kind == "permute") {
      result = permute_latent(p, op.at("perm").get<std::vector<int>>());
    } else {
      throw Error("unknown transform kind '" + kind + "'");
    }
    std::ostream* os;
    auto guard = open_or_stdout(rc, os);
    *os << params_to_json_text(result) << "\n";
  } else if (cmd == "check") {
    std::ifstream in(rc.params_path);
    if (!in) throw Error("cannot open params file: " + rc.params_path);
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    SutParams p;
    bool valid = true;
    try {
      p = params_from_json_text(ss.str());
    } catch (const ValidationFailure& e) {
      valid = false;
      j["violations"] = e.violations;
    }
    j["valid"] = valid;
    if (valid) {
      j["violations"] = json::array();
      // equicorrelation advisory
      bool equi = p.m() >= 2;
      double rho = p.m() >= 2 ? p.gamma_bar(0, 1) : 0.0;
      for (int i = 0; i < p.m() && equi; ++i)
        for (int k = 0; k < p.m() && equi; ++k)
          if (i != k && std::abs(p.gamma_bar(i, k) - rho) > 1e-12) equi = false;
      j["equicorrelated_latent"] = equi;
      j["st_limit_advisory"] = equi && rho > 0.95;
      try {
        const CanonicalResult cr = canonical(p);
        j["canonical_exists"] = true;
        j["canonical_output_dim"] = cr.params.d();
      } catch (const CanonicalNotExists&) {
        j["canonical_exists"] = false;
      } catch (const DimensionMismatch&) {
        j["canonical_exists"] = false;
      }
      // reducibility pattern: leading latent block with zero delta, zero tau,
      // block-diagonal gamma_bar
      int reducible = 0;
      for (int m1 = p.m() - 1; m1 >= 1; --m1) {
        try {
          reduce_latent(p, m1);
          reducible = m1;
          break;
        } catch (const StructureNotReducible&) {
        }
      }
      j["reducible_leading_latents"] = reducible;
    }
    std::ostream* os;
    auto guard = open_or_stdout(rc, os);
    *os << j.dump(2) << "\n";
  } else if (cmd == "contour") {
    const std::string preset = sub->get_option("--preset")->as<std::string>();
    const int steps = sub->get_option("--steps")->as<int>();
    SutParams p;
    try {
      if (preset.rfind("fig1-sut-m", 0) == 0)
        p = contour_preset(true, std::stoi(preset.substr(10)));
      else if (preset.rfind("fig1-sun-m", 0) == 0)
        p = contour_preset(false, std::stoi(preset.substr(10)));
      else
        throw Error("unknown preset '" + preset + "' (want fig1-{sun|sut}-m{1,2,3})");
    } catch (const std::invalid_argument&) {
      throw Error("unknown preset '" + preset + "' (want fig1-{sun|sut}-m{1,2,3})");
    }
    const Density dens(p, cfg);
    std::ostream* os;
    auto guard = open_or_stdout(rc, os);
    *os << "# preset=" << preset << ", seed=" << rc.seed << "\n";
    *os << "y1,y2,value,se\n";
    const double lo = -4.0, hi = 4.0;
    VectorXd y(2);
    for (int i = 0; i < steps; ++i) {
      y[0] = lo + (hi - lo) * i / (steps - 1.0);
      for (int jx = 0; jx < steps; ++jx) {
        y[1] = lo + (hi - lo) * jx / (steps - 1.0);
        const PdfValue v = dens.pdf_detail(y);
        *os << y[0] << "," << y[1] << "," << v.value << "," << v.error_estimate << "\n";
      }
    }
  } else if (cmd == "quadform") {
    const SutParams p = load_params(rc);
    const int npts = sub->get_option("--grid-points")->as<int>();
    QuadFormEstimate est = quadform_pdf(p, VectorXd(), cfg);
    if (npts != 200) {
      VectorXd grid(npts);
      const double lo = est.grid[0], hi = est.grid[est.grid.size() - 1];
      for (int i = 0; i < npts; ++i) grid[i] = lo + (hi - lo) * i / (npts - 1.0);
      est = quadform_pdf(p, grid, cfg);
    }
    std::ostream* os;
    auto guard = open_or_stdout(rc, os);
    *os << "# seed=" << rc.seed << "\n";
    *os << "v,density,se\n";
    for (int i = 0; i < est.grid.size(); ++i)
      *os << est.grid[i] << "," << est.density[i] << "," << est.se[i] << "\n";
  } else {
    throw Error("unknown command");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unified skew-t distribution toolkit"};
  app.require_subcommand(1);
  RunConfig rc;
  app.add_option("--seed", rc.seed, "RNG / QMC seed");
  app.add_option("--qmc-points", rc.qmc_points, "QMC points per randomization (power of two)");
  app.add_option("--qmc-rand", rc.qmc_rand, "QMC randomizations");
  app.add_option("--tol", rc.tolerance, "tolerance knob passed to reports");
  app.add_option("--out", rc.out, "output file (default stdout)");
  app.add_option("--format", rc.format, "csv|json where applicable");
  app.add_option("--params", rc.params_path, "parameter JSON file");

  auto* c_pdf = app.add_subcommand("pdf", "evaluate the density on a grid");
  c_pdf->add_option("--grid", "grid spec lo:hi:n per axis, comma separated")->required();
  auto* c_cdf = app.add_subcommand("cdf", "evaluate the cdf on a grid");
  c_cdf->add_option("--grid", "grid spec lo:hi:n per axis, comma separated")->required();
  auto* c_sample = app.add_subcommand("sample", "draw i.i.d. samples");
  c_sample->add_option("--n", "number of draws")->default_val(10000);
  c_sample->add_option("--method", "selection|convolution|sun-mixture")
      ->default_val("selection");
  auto* c_mom = app.add_subcommand("moments", "moments and Mardia measures");
  c_mom->add_option("--route", "convolution|mixture|mc")->default_val("convolution");
  c_mom->add_option("--n", "draws for the mc route")->default_val(100000);
  auto* c_sweep = app.add_subcommand("mardia-sweep", "Mardia measures against latent dimension");
  c_sweep->add_option("--family", "fig2|symmetric")->default_val("fig2");
  c_sweep->add_option("--m-max", "largest latent dimension")->default_val(10);
  auto* c_tr = app.add_subcommand("transform", "apply a parameter transform");
  c_tr->add_option("--op", "JSON op-spec file")->required();
  app.add_subcommand("check", "validity / identifiability report");
  auto* c_ct = app.add_subcommand("contour", "figure-style contour grid data");
  c_ct->add_option("--preset", "fig1-{sun|sut}-m{1,2,3}")->required();
  c_ct->add_option("--steps", "grid steps per axis")->default_val(101);
  auto* c_qf = app.add_subcommand("quadform", "quadratic form density");
  c_qf->add_option("--grid-points", "grid size")->default_val(200);

  // global flags may appear after the subcommand name
  for (auto* s : app.get_subcommands({})) s->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    return dispatch(app.get_subcommands().front()->get_name(), rc,
                    app.get_subcommands().front());
  } catch (const ValidationFailure& e) {
    std::cerr << "input error: " << e.what() << "\n";
    for (const auto& v : e.violations) std::cerr << "  - " << v << "\n";
    return 2;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const DofTooSmall& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const AcceptanceTooLow& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const DenominatorUnderflow& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const TauMustBeZero& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
