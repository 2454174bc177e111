#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include "mfdeg/bubble.hpp"
#include "mfdeg/degree.hpp"
#include "mfdeg/errors.hpp"
#include "mfdeg/expression.hpp"
#include "mfdeg/mf_solver.hpp"
#include "mfdeg/series.hpp"
#include "mfdeg/shadow.hpp"

namespace mfdeg::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using std::numbers::pi;
using torus::Point;
using torus::TorusField;
using torus::TorusGrid;

namespace {

// ---------------------------------------------------------------- output

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
};

std::string cell_text(const json& v) {
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isnan(d)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", d);
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

void write_csv(const Table& t, std::ostream& os) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell_text(r[i]);
    os << '\n';
  }
}

void write_json(const Table& t, std::ostream& os) {
  json arr = json::array();
  for (const auto& r : t.rows) {
    json o = json::object();
    for (std::size_t i = 0; i < r.size(); ++i) {
      const json& v = r[i];
      o[t.columns[i]] = (v.is_number_float() && !std::isfinite(v.get<double>())) ? json() : v;
    }
    arr.push_back(o);
  }
  os << arr.dump(2) << '\n';
}

void write_aligned(const Table& t, std::ostream& os) {
  std::vector<std::size_t> w(t.columns.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = t.columns[i].size();
  for (const auto& r : t.rows)
    for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], cell_text(r[i]).size());
  const auto line = [&](const auto& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string s = cells[i];
      os << (i ? "  " : "") << std::string(w[i] - s.size(), ' ') << s;
    }
    os << '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) {
    std::vector<std::string> c;
    for (const auto& v : r) c.push_back(cell_text(v));
    line(c);
  }
}

struct Common {
  std::string format = "auto";  // table for degree, csv otherwise
  std::string out_dir;
  unsigned long long seed = 12345;
  std::string config;
};

void emit(const Table& t, const Common& c, std::ostream& out, const std::string& stem) {
  if (c.format == "json")
    write_json(t, out);
  else if (c.format == "table")
    write_aligned(t, out);
  else
    write_csv(t, out);
  if (!c.out_dir.empty()) {
    fs::create_directories(c.out_dir);
    const bool js = c.format == "json";
    std::ofstream f(fs::path(c.out_dir) / (stem + (js ? ".json" : ".csv")));
    if (js)
      write_json(t, f);
    else
      write_csv(t, f);
    if (!f) throw InputError("cannot write to " + c.out_dir);
  }
}

void write_text(const Common& c, const std::string& name, const std::string& text) {
  if (c.out_dir.empty()) return;
  fs::create_directories(c.out_dir);
  std::ofstream f(fs::path(c.out_dir) / name);
  f << text;
  if (!f) throw InputError("cannot write to " + c.out_dir);
}

// ---------------------------------------------------------------- parsing helpers

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  for (const auto& t : split(s, ',')) v.push_back(evaluate_constant(t));
  if (v.empty()) throw InputError("empty list: '" + s + "'");
  return v;
}

Point parse_point(const std::string& s) {
  const auto v = parse_list(s);
  if (v.size() != 2) throw InputError("a point needs two coordinates: '" + s + "'");
  return {v[0], v[1]};
}

std::vector<Point> parse_points(const std::string& s) {
  std::vector<Point> out;
  for (const auto& t : split(s, ';')) out.push_back(parse_point(t));
  return out;
}

TorusField field_from(const std::string& expr, const std::string& file, const TorusGrid& g) {
  if (!file.empty()) {
    TorusField f(g);
    if (fs::path(file).extension() == ".csv") {
      std::ifstream is(file);
      if (!is) throw InputError("cannot open " + file);
      f = torus::read_csv(is);
    } else {
      f = torus::load_binary(file);
    }
    if (!(f.grid() == g))
      throw InputError(file + ": grid size " + std::to_string(f.grid().n()) + " does not match --n");
    return f;
  }
  const Expression e = Expression::parse(expr);
  return TorusField::sample(g, [&](Point p) { return e.eval(p); });
}

// rho / 8 pi as a rational: continued fraction to 1e-12.
series::Rational rational_of(double v) {
  const double tol = 1e-12 * std::max(1.0, std::abs(v));
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = v;
  for (int i = 0; i < 40; ++i) {
    const long long a = static_cast<long long>(std::floor(x));
    const long long h2 = a * h1 + h0, k2 = a * k1 + k0;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    if (std::abs(double(h1) / double(k1) - v) <= tol) break;
    const double frac = x - double(a);
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  series::Rational q(static_cast<long>(h1), static_cast<long>(k1));
  q.canonicalize();
  return q;
}

// Turns a JSON config object into option tokens.
std::vector<std::string> config_tokens(const json& cfg) {
  std::vector<std::string> tok;
  for (const auto& [key, val] : cfg.items()) {
    if (key == "command") continue;
    const std::string opt = "--" + key;
    if (val.is_boolean()) {
      if (val.get<bool>()) tok.push_back(opt);
    } else if (val.is_array()) {
      std::string joined;
      for (const auto& e : val) joined += (joined.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
      tok.push_back(opt);
      tok.push_back(joined);
    } else if (val.is_string()) {
      tok.push_back(opt);
      tok.push_back(val.get<std::string>());
    } else if (val.is_number()) {
      tok.push_back(opt);
      tok.push_back(val.dump());
    } else {
      throw InputError("config key '" + key + "' has an unsupported value");
    }
  }
  return tok;
}

json resolved_config(const std::string& command, const CLI::App& sub) {
  json j = json::object();
  j["command"] = command;
  for (const CLI::Option* o : sub.get_options()) {
    const std::string name = o->get_lnames().empty() ? "" : o->get_lnames().front();
    if (name.empty() || name == "help" || name == "config") continue;
    if (o->get_expected_min() == 0) {
      j[name] = o->count() > 0;
    } else if (o->count() > 0) {
      j[name] = o->results().back();
    } else {
      j[name] = o->get_default_str();
    }
  }
  return j;
}

void add_common(CLI::App& sub, Common& c) {
  sub.add_option("--format", c.format, "csv, json or table")
      ->check(CLI::IsMember({"auto", "csv", "json", "table"}))
      ->capture_default_str();
  sub.add_option("--out", c.out_dir, "directory for output files");
  sub.add_option("--seed", c.seed, "seed for randomised checks")->capture_default_str();
  sub.add_option("--config", c.config, "JSON file of option values; flags take precedence");
}

// ---------------------------------------------------------------- degree

struct DegreeArgs {
  long chi = 2;
  std::string kind = "auto";
  std::string rho1, rho2, rho, alpha;
};

json degree_cell(const degree::DegreeResult& r) {
  if (r.critical || !r.value) return "CRIT";
  return json(r.value->get_str());
}

int cmd_degree(const DegreeArgs& a, const Common& c, std::ostream& out) {
  const degree::SurfaceTopology topo(a.chi);
  const auto rats = [](const std::string& s) {
    std::vector<series::Rational> v;
    for (const auto& t : split(s, ',')) v.push_back(series::parse_rational(t));
    if (v.empty()) throw InputError("empty rational list");
    return v;
  };
  std::string kind = a.kind;
  if (kind == "auto") kind = !a.rho.empty() ? "singular" : (!a.rho1.empty() ? "two-param" : "shadow");
  Table t;
  bool unsupported = false;
  if (kind == "two-param") {
    if (a.rho1.empty() || a.rho2.empty()) throw InputError("two-param degree needs --rho1 and --rho2");
    t.columns = {"chi", "rho1", "rho2", "degree"};
    for (const auto& r1 : rats(a.rho1))
      for (const auto& r2 : rats(a.rho2)) {
        json cell;
        try {
          cell = degree_cell(degree::degree_two_param(r1, r2, topo));
        } catch (const UnsupportedRangeError&) {
          cell = "UNSUPPORTED";
          unsupported = true;
        }
        t.rows.push_back({a.chi, series::to_string(r1), series::to_string(r2), cell});
      }
  } else if (kind == "singular") {
    if (a.rho.empty()) throw InputError("singular degree needs --rho");
    std::vector<series::Rational> alphas;
    if (!a.alpha.empty()) alphas = rats(a.alpha);
    const degree::SingularSet sing(alphas);
    t.columns = {"chi", "alpha", "rho", "degree"};
    for (const auto& r : rats(a.rho))
      t.rows.push_back({a.chi, a.alpha, series::to_string(r),
                        degree_cell(degree::degree_singular(r, topo, sing))});
  } else if (kind == "shadow") {
    if (a.rho2.empty()) throw InputError("shadow degree needs --rho2");
    t.columns = {"chi", "rho2", "degree"};
    for (const auto& r2 : rats(a.rho2))
      t.rows.push_back({a.chi, series::to_string(r2), degree_cell(degree::degree_shadow(r2, topo))});
  } else if (kind == "b") {
    if (a.rho.empty()) throw InputError("--kind b needs --rho (the index k)");
    t.columns = {"chi", "k", "b"};
    for (const auto& k : rats(a.rho)) {
      if (k.get_den() != 1) throw InputError("b_k needs integer k");
      t.rows.push_back({a.chi, series::to_string(k),
                        degree::b_coeff(topo, k.get_num().get_si()).get_str()});
    }
  } else {
    throw InputError("unknown --kind '" + kind + "'");
  }
  emit(t, c, out, "degree");
  return unsupported ? kInput : kOk;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  int n = 64;
  std::string rho1 = "4*pi", rho2 = "4*pi";
  std::string h1 = "1", h2 = "1", h1_file, h2_file;
  std::string u0 = "0";
  bool system = false;
  bool morse = false;
  std::string continue_to;
  double step = 0.5;
  double tol = 1e-9;
  int max_iter = 50;
};

int cmd_solve(const SolveArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  const TorusGrid g(a.n);
  const double rho1 = evaluate_constant(a.rho1), rho2 = evaluate_constant(a.rho2);
  const solver::ProblemParams params(rho1, rho2, field_from(a.h1, a.h1_file, g),
                                     field_from(a.h2, a.h2_file, g));
  TorusField u0 = field_from(a.u0, "", g);
  u0.project_mean_zero();
  solver::SolverOptions so;
  so.tol = a.tol;
  so.max_iter = a.max_iter;
  so.compute_morse = a.morse;

  Table trace{{"rho1", "rho2", "residual", "max_u", "neg_eigs", "sigma1", "sigma2"}, {}};
  int code = kOk;
  std::string status = "converged";
  std::optional<solver::SolveReport> last;
  TorusField last_u = u0;

  const auto row = [&](double r1, const solver::SolveReport& rep, const TorusField& u) {
    const solver::ProblemParams pp(r1, rho2, params.h1, params.h2);
    const auto [s1, s2] = solver::local_mass(u, pp, solver::argmax(u), 0.1);
    trace.rows.push_back({r1, rho2, rep.residual_norm, u.max(), rep.neg_eigs, s1, s2});
  };

  try {
    if (a.system) {
      auto [v1, v2] = solver::decompose(u0, params);
      solver::SolveReport rep = solver::newton_system(v1, v2, params, so);
      if (a.morse && g.n() <= 48) rep.neg_eigs = solver::morse_count_system(rep.fields[0], rep.fields[1], params);
      last_u = rep.fields[0] - rep.fields[1];
      row(rho1, rep, last_u);
      last = rep;
      if (!rep.converged) code = kNonConvergence;
    } else {
      solver::SolveReport rep = solver::newton_scalar(u0, params, so);
      last_u = rep.fields[0];
      row(rho1, rep, last_u);
      last = rep;
      if (!rep.converged) {
        code = kNonConvergence;
      } else if (!a.continue_to.empty()) {
        const double target = evaluate_constant(a.continue_to);
        std::vector<double> targets;
        const double dir = target >= rho1 ? 1.0 : -1.0;
        for (double r = rho1 + dir * a.step; dir * (target - r) > 1e-12; r += dir * a.step)
          targets.push_back(r);
        targets.push_back(target);
        solver::ContinuationOptions co;
        co.initial_step = a.step;
        co.newton = so;
        const auto res = solver::continue_rho1(last_u, params, targets, co);
        for (const auto& p : res.points) {
          if (p.rho1 == rho1) continue;  // the start is already in the trace
          trace.rows.push_back({p.rho1, p.rho2, p.report.residual_norm, p.max_u,
                                p.report.neg_eigs, p.sigma1, p.sigma2});
          last = p.report;
          last_u = p.report.fields[0];
        }
        if (!res.completed) code = res.blew_up ? kBlowUp : kNonConvergence;
      }
    }
  } catch (const BlowUpError& e) {
    err << "blow-up: " << e.what() << '\n';
    code = kBlowUp;
  } catch (const ConvergenceError& e) {
    err << "non-convergence: " << e.what() << '\n';
    code = kNonConvergence;
  }
  if (code == kBlowUp) status = "blow-up";
  if (code == kNonConvergence) status = "non-convergence";

  emit(trace, c, out, "trace");
  if (!c.out_dir.empty() && last) {
    if (a.system) {
      torus::save_binary(last->fields[0], (fs::path(c.out_dir) / "v1.bin").string());
      torus::save_binary(last->fields[1], (fs::path(c.out_dir) / "v2.bin").string());
    }
    torus::save_binary(last_u, (fs::path(c.out_dir) / "u.bin").string());
  }
  json rep = json::object();
  rep["status"] = status;
  rep["n"] = a.n;
  rep["points"] = trace.rows.size();
  if (last) {
    rep["residual"] = last->residual_norm;
    rep["newton_iters"] = last->newton_iters;
    rep["neg_eigs"] = last->neg_eigs;
  }
  write_text(c, "report.json", rep.dump(2) + "\n");
  return code;
}

// ---------------------------------------------------------------- bubble

struct BubbleArgs {
  std::string check = "mass";
  std::string lambdas = "8,10,12";
  std::string quadrature = "polar";
  int grid_n = 256;
  std::string h1 = "1";
  std::string rho1 = "8*pi";
  std::string q = "0.5,0.5";
  double lambda = 6.0;
  std::string sizes = "256,512,1024";
  int samples = 20;
};

void add_expansion_rows(Table& t, const bubble::ExpansionCheck& e) {
  for (const auto& r : e.rows)
    t.rows.push_back({r.lambda, r.measured, r.predicted, r.residual, e.fitted_exponent});
}

int cmd_bubble(const BubbleArgs& a, const Common& c, std::ostream& out) {
  const auto h1 = expression_function(Expression::parse(a.h1));
  const bubble::BubbleAnsatz base(parse_point(a.q), a.lambda, 1.0, evaluate_constant(a.rho1), h1);
  const std::vector<std::string> cols{"lambda", "measured", "predicted", "residual", "fitted_exponent"};
  if (a.check == "mass") {
    bubble::QuadratureOptions qo;
    qo.kind = a.quadrature == "grid" ? bubble::Quadrature::Grid : bubble::Quadrature::Polar;
    qo.grid_n = a.grid_n;
    Table t{cols, {}};
    add_expansion_rows(t, bubble::mass_expansion_check(base, parse_list(a.lambdas), qo));
    emit(t, c, out, "mass");
  } else if (a.check == "projections") {
    const auto p = bubble::projection_checks(base, parse_list(a.lambdas));
    const std::pair<const char*, const bubble::ExpansionCheck*> parts[] = {
        {"dq", &p.dq}, {"dlambda", &p.dlambda}, {"vq", &p.vq}};
    for (const auto& [name, e] : parts) {
      Table t{cols, {}};
      add_expansion_rows(t, *e);
      if (c.format != "json") out << "# projection " << name << '\n';
      emit(t, c, out, std::string("projection_") + name);
    }
  } else if (a.check == "identity") {
    Table t{{"n", "spacing", "residual", "ratio"}, {}};
    double prev = 0.0;
    for (double n : parse_list(a.sizes)) {
      const int ni = static_cast<int>(n);
      const double r = bubble::bubble_identity_residual(base, ni);
      t.rows.push_back({ni, 0.25 / ni, r, prev > 0 ? json(prev / r) : json("")});
      prev = r;
    }
    emit(t, c, out, "identity");
  } else if (a.check == "bilinear") {
    const auto b = bubble::bilinear_form_check(base, TorusGrid(a.grid_n), a.samples, c.seed);
    Table t{{"sample", "ratio"}, {}};
    for (std::size_t i = 0; i < b.ratios.size(); ++i) t.rows.push_back({i, b.ratios[i]});
    emit(t, c, out, "bilinear");
  } else {
    throw InputError("unknown --check '" + a.check + "'");
  }
  return kOk;
}

// ---------------------------------------------------------------- shadow

struct ShadowArgs {
  int n = 32;
  std::string rho2 = "4*pi";
  std::string h1 = "exp(0.5*(cos(2*pi*x) + cos(2*pi*y)))";
  std::string h2 = "1", h2_file;
  bool decoupled = false;
  bool census = false;
  std::string starts = "0.04,0.03;0.53,0.02;0.03,0.46;0.46,0.54";
  double tol = 1e-9;
};

int cmd_shadow(const ShadowArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  const TorusGrid g(a.n);
  const double rho2 = evaluate_constant(a.rho2);
  const shadow::ShadowParams params(rho2, expression_function(Expression::parse(a.h1)),
                                    field_from(a.h2, a.h2_file, g), a.decoupled);
  shadow::ShadowOptions so;
  so.tol = a.tol;
  const auto starts = parse_points(a.starts);
  std::vector<shadow::ShadowReport> reps;
  if (a.census) {
    reps = shadow::solve_from_starts(starts, params, so);
  } else {
    for (const auto& p : starts) reps.push_back(shadow::shadow_newton({TorusField(g), p}, params, so));
  }
  if (reps.empty()) throw ConvergenceError("no shadow solution converged");

  Table t{{"px", "py", "field_residual", "gradient_residual", "smallest_singular_value",
           "morse_sign", "vanishing_exponent"},
          {}};
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto& r = reps[k];
    const json sv = r.smallest_singular_value ? json(*r.smallest_singular_value) : json("");
    t.rows.push_back({r.state.p.x, r.state.p.y, r.field_residual, r.gradient_residual, sv,
                      r.morse_sign, shadow::vanishing_exponent(r.state, params)});
    if (!c.out_dir.empty()) {
      fs::create_directories(c.out_dir);
      const std::string stem = "shadow_" + std::to_string(k);
      torus::save_binary(r.state.w, (fs::path(c.out_dir) / (stem + ".bin")).string());
      json side = json::object();
      side["p"] = {r.state.p.x, r.state.p.y};
      side["residuals"] = {{"field", r.field_residual}, {"gradient", r.gradient_residual}};
      side["smallest_singular_value"] = r.smallest_singular_value ? json(*r.smallest_singular_value) : json();
      side["morse_sign"] = r.morse_sign == 0 ? json() : json(r.morse_sign);
      write_text(c, stem + ".json", side.dump(2) + "\n");
    }
  }
  emit(t, c, out, "shadow");
  if (a.census) {
    const int sum = shadow::morse_census(reps);
    const auto d = degree::degree_shadow(rational_of(rho2 / (8 * pi)), degree::SurfaceTopology(0));
    err << "census: " << sum << " over " << reps.size() << " solutions; torus shadow degree "
        << (d.value ? d.value->get_str() : std::string("CRIT")) << '\n';
    json cj = {{"census", sum}, {"solutions", reps.size()},
               {"degree_shadow", d.value ? json(d.value->get_str()) : json("CRIT")}};
    write_text(c, "census.json", cj.dump(2) + "\n");
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Degree tables and mean field numerics on the flat torus", "mfdeg"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  DegreeArgs da;
  SolveArgs sa;
  BubbleArgs ba;
  ShadowArgs sh;

  auto* deg = app.add_subcommand("degree", "Leray-Schauder degree tables (rho in units of 8 pi)");
  deg->add_option("--chi", da.chi, "Euler characteristic")->capture_default_str();
  deg->add_option("--kind", da.kind, "auto, two-param, singular, shadow or b")->capture_default_str();
  deg->add_option("--rho1", da.rho1, "comma list of rationals");
  deg->add_option("--rho2", da.rho2, "comma list of rationals");
  deg->add_option("--rho", da.rho, "comma list of rationals (singular equation, or k for b)");
  deg->add_option("--alpha", da.alpha, "comma list of singular weights");
  add_common(*deg, common);

  auto* sol = app.add_subcommand("solve", "Newton solve and continuation on the torus grid");
  sol->add_option("--n", sa.n, "grid size (power of two)")->capture_default_str();
  sol->add_option("--rho1", sa.rho1, "expression, e.g. 4*pi")->capture_default_str();
  sol->add_option("--rho2", sa.rho2, "expression")->capture_default_str();
  sol->add_option("--h1", sa.h1, "expression in x, y")->capture_default_str();
  sol->add_option("--h2", sa.h2, "expression in x, y")->capture_default_str();
  sol->add_option("--h1-file", sa.h1_file, "field file (.bin or .csv) overriding --h1");
  sol->add_option("--h2-file", sa.h2_file, "field file overriding --h2");
  sol->add_option("--u0", sa.u0, "initial guess expression")->capture_default_str();
  sol->add_flag("--system", sa.system, "solve the two-component form");
  sol->add_flag("--morse", sa.morse, "Morse counts (n <= 48)");
  sol->add_option("--continue-to", sa.continue_to, "continue in rho1 up to this value");
  sol->add_option("--step", sa.step, "continuation step")->capture_default_str();
  sol->add_option("--tol", sa.tol, "Newton tolerance (sup norm)")->capture_default_str();
  sol->add_option("--max-iter", sa.max_iter, "Newton iteration cap")->capture_default_str();
  add_common(*sol, common);

  auto* bub = app.add_subcommand("bubble", "Bubble ansatz expansion checks");
  bub->add_option("--check", ba.check, "mass, projections, identity or bilinear")
      ->check(CLI::IsMember({"mass", "projections", "identity", "bilinear"}))
      ->capture_default_str();
  bub->add_option("--lambdas", ba.lambdas, "comma list, increasing")->capture_default_str();
  bub->add_option("--quadrature", ba.quadrature, "polar or grid")
      ->check(CLI::IsMember({"polar", "grid"}))
      ->capture_default_str();
  bub->add_option("--grid-n", ba.grid_n, "grid size for grid quadrature / bilinear")->capture_default_str();
  bub->add_option("--h1", ba.h1, "expression in x, y")->capture_default_str();
  bub->add_option("--rho1", ba.rho1, "expression")->capture_default_str();
  bub->add_option("--q", ba.q, "bubble centre x,y")->capture_default_str();
  bub->add_option("--lambda", ba.lambda, "height for identity / bilinear")->capture_default_str();
  bub->add_option("--sizes", ba.sizes, "patch resolutions for identity")->capture_default_str();
  bub->add_option("--samples", ba.samples, "random fields for bilinear")->capture_default_str();
  add_common(*bub, common);

  auto* sha = app.add_subcommand("shadow", "Shadow system solves and Morse census");
  sha->add_option("--n", sh.n, "grid size")->capture_default_str();
  sha->add_option("--rho2", sh.rho2, "expression")->capture_default_str();
  sha->add_option("--h1", sh.h1, "expression in x, y")->capture_default_str();
  sha->add_option("--h2", sh.h2, "expression in x, y")->capture_default_str();
  sha->add_option("--h2-file", sh.h2_file, "field file overriding --h2");
  sha->add_flag("--decoupled", sh.decoupled, "solve the decoupled endpoint");
  sha->add_flag("--census", sh.census, "deduplicate and sum Morse signs");
  sha->add_option("--starts", sh.starts, "start points x,y;x,y;...")->capture_default_str();
  sha->add_option("--tol", sh.tol, "Newton tolerance")->capture_default_str();
  add_common(*sha, common);

  try {
    // splice config-file values in front of the command-line flags
    std::vector<std::string> args = args_in;
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      if (path.empty()) continue;
      std::ifstream f(path);
      if (!f) throw InputError("cannot open config " + path);
      json cfg;
      try {
        cfg = json::parse(f);
      } catch (const json::exception& e) {
        throw InputError(std::string("bad config JSON: ") + e.what());
      }
      if (!cfg.is_object()) throw InputError("config must be a JSON object");
      const auto tok = config_tokens(cfg);
      const bool has_cmd = !args.empty() && (args[0] == "degree" || args[0] == "solve" ||
                                             args[0] == "bubble" || args[0] == "shadow");
      if (!has_cmd) {
        if (!cfg.contains("command")) throw InputError("no command given");
        args.insert(args.begin(), cfg["command"].get<std::string>());
      }
      args.insert(args.begin() + 1, tok.begin(), tok.end());
      break;
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInput;
  }

  CLI::App* sub = app.get_subcommands().front();
  const json cfg = resolved_config(sub->get_name(), *sub);
  err << "config: " << cfg.dump() << '\n';

  try {
    write_text(common, "config.json", cfg.dump(2) + "\n");
    if (common.format == "auto") common.format = sub == deg ? "table" : "csv";
    if (sub == deg) return cmd_degree(da, common, out);
    if (sub == sol) return cmd_solve(sa, common, out, err);
    if (sub == bub) return cmd_bubble(ba, common, out);
    return cmd_shadow(sh, common, out, err);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const UnsupportedRangeError& e) {
    err << "unsupported range: " << e.what() << '\n';
    return kInput;
  } catch (const ConvergenceError& e) {
    err << "non-convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const BlowUpError& e) {
    err << "blow-up: " << e.what() << '\n';
    return kBlowUp;
  } catch (const ResolutionError& e) {
    err << "resolution: " << e.what() << '\n';
    return kResolution;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
    return kInput;
  }
}

}  // namespace mfdeg::cli
