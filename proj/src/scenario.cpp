#include "cardio/scenario.hpp"

#include "cardio/errors.hpp"
#include "cardio/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

namespace cardio {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + text + "'");
}

long long to_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(t, &used);
    if (used == t.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + text + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list of numbers");
  return out;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <class T, std::size_t N>
std::string fmt_list(const std::array<T, N>& a, int count) {
  std::string out;
  for (int i = 0; i < count; ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(a[i]);
    else
      out += std::to_string(a[i]);
  }
  return out;
}

/// Reads keys from a parsed INI tree and remembers which ones were consumed.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& key) {
    known_.insert(key);
    if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return trim(*v);
    return std::nullopt;
  }
  std::string require(const std::string& key) {
    auto v = get(key);
    if (!v) throw ConfigError(key + ": missing required key");
    return *v;
  }
  void number(const std::string& key, double& out) {
    if (auto v = get(key)) out = to_double(key, *v);
  }
  void integer(const std::string& key, int& out) {
    if (auto v = get(key)) out = static_cast<int>(to_int(key, *v));
  }
  void triple(const std::string& key, std::array<double, 3>& out) {
    if (auto v = get(key)) {
      const auto vals = to_doubles(key, *v);
      if (vals.size() > 3) throw ConfigError(key + ": at most 3 values");
      for (std::size_t i = 0; i < 3; ++i) out[i] = vals[std::min(i, vals.size() - 1)];
    }
  }
  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) throw ConfigError(section + ": key outside any section");
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (!known_.count(full)) throw ConfigError(full + ": unknown key");
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> known_;
};

TensorSpec parse_tensor(const std::string& key, const std::string& text) {
  TensorSpec t;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string kind = trim(text.substr(0, colon));
    if (kind != "isotropic") throw ConfigError(key + ": expected 'isotropic: value' or a list of entries");
    t.isotropic = true;
    t.entries = {to_double(key, text.substr(colon + 1))};
    return t;
  }
  t.entries = to_doubles(key, text);
  t.isotropic = false;
  return t;
}

std::string fmt_tensor(const TensorSpec& t) {
  if (t.isotropic) return "isotropic: " + fmt(t.entries.at(0));
  std::string out;
  for (std::size_t i = 0; i < t.entries.size(); ++i) out += (i ? ", " : "") + fmt(t.entries[i]);
  return out;
}

void read_stimulus(Reader& r, const std::string& section, StimulusSpec& s) {
  r.number(section + ".amplitude", s.amplitude);
  r.triple(section + ".center", s.center);
  r.number(section + ".width", s.width);
  r.number(section + ".t_on", s.t_on);
  r.number(section + ".t_off", s.t_off);
  if (auto v = r.get(section + ".file")) s.file = *v;
}

void write_stimulus(std::ostream& os, const std::string& section, const StimulusSpec& s) {
  os << "\n[" << section << "]\n";
  os << "amplitude = " << fmt(s.amplitude) << "\n";
  os << "center = " << fmt_list(s.center, 3) << "\n";
  os << "width = " << fmt(s.width) << "\n";
  os << "t_on = " << fmt(s.t_on) << "\n";
  os << "t_off = " << fmt(s.t_off) << "\n";
  if (!s.file.empty()) os << "file = " << s.file << "\n";
}

void check_tensor(const std::string& key, const TensorSpec& t, int dim) {
  if (t.isotropic) {
    if (t.entries.size() != 1 || !(t.entries[0] > 0.0)) throw ConfigError(key + ": isotropic value must be > 0");
    return;
  }
  if (static_cast<int>(t.entries.size()) != dim * dim)
    throw ConfigError(key + ": expected " + std::to_string(dim * dim) + " entries for dim " + std::to_string(dim));
  const LocalTensor m = t.local(dim);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw ConfigError(key + ": tensor must be symmetric");
  Eigen::SelfAdjointEigenSolver<LocalTensor> es(m, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw ConfigError(key + ": tensor must be positive definite");
}

double gaussian(const StimulusSpec& s, const std::array<double, 3>& x, int dim) {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += (x[a] - s.center[a]) * (x[a] - s.center[a]);
  return s.amplitude * std::exp(-r2 / (2.0 * s.width * s.width));
}

}  // namespace

LocalTensor TensorSpec::local(int dim) const {
  if (isotropic) return entries.at(0) * LocalTensor::Identity(dim, dim);
  LocalTensor m(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) m(r, c) = entries.at(static_cast<std::size_t>(r * dim + c));
  return m;
}

Grid Scenario::grid() const { return Grid(dim, nodes, lengths, T, steps); }

void Scenario::validate() const {
  if (dim < 1 || dim > 3) throw ConfigError("geometry.dim: must be 1, 2 or 3");
  for (int a = 0; a < dim; ++a) {
    if (nodes[a] < 2) throw ConfigError("geometry.nodes: need at least 2 nodes per axis");
    if (!(lengths[a] > 0.0)) throw ConfigError("geometry.lengths: must be > 0");
  }
  if (!(T > 0.0)) throw ConfigError("geometry.T: must be > 0");
  if (steps < 1) throw ConfigError("geometry.steps: must be >= 1");
  try {
    ionic.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("model.") + e.what());
  }
  check_tensor("tensors.Mi", m_i, dim);
  if (has_m_e) check_tensor("tensors.Me", m_e, dim);
  if (!(lambda > 0.0)) throw ConfigError("tensors.lambda: must be > 0");
  if (!(phi0_width > 0.0)) throw ConfigError("initial.phi_width: must be > 0");
  for (const auto& [name, s] : {std::pair{"stimulus_i", &stimulus_i}, std::pair{"stimulus_e", &stimulus_e}}) {
    if (!(s->width > 0.0)) throw ConfigError(std::string(name) + ".width: must be > 0");
    if (!(s->t_off >= s->t_on)) throw ConfigError(std::string(name) + ".t_off: must be >= t_on");
    if (!s->file.empty()) {
      const auto p = std::filesystem::path(base_dir) / s->file;
      if (!std::filesystem::exists(p)) throw ConfigError(std::string(name) + ".file: not found: " + p.string());
    }
  }
  if (target != "rest" && target != "uncontrolled") to_double("cost.target", target);
  if (!(w_phi >= 0.0)) throw ConfigError("cost.w_phi: must be >= 0");
  if (!(w_eta >= 0.0)) throw ConfigError("cost.w_eta: must be >= 0");
  if (!(w_gate >= 0.0)) throw ConfigError("cost.w_gate: must be >= 0");
  if (!(mu > 0.0)) throw ConfigError("cost.mu: must be > 0");
  if (!(radius > 0.0)) throw ConfigError("cost.R: must be > 0");
  if (max_iter < 0) throw ConfigError("cost.max_iter: must be >= 0");
  if (!(gradient_tol >= 0.0)) throw ConfigError("cost.gradient_tol: must be >= 0");
  for (int a = 0; a < dim; ++a)
    if (!(control_hi[a] >= control_lo[a])) throw ConfigError("cost.control_hi: must be >= control_lo");
  if (!(cg_tol > 0.0 && cg_tol < 1.0)) throw ConfigError("solver.cg_tol: must lie in (0,1)");
  if (!(inner_tol > 0.0 && inner_tol < 1.0)) throw ConfigError("solver.inner_tol: must lie in (0,1)");
}

Series stimulus_series(const StimulusSpec& spec, const Grid& grid, const std::string& base_dir) {
  if (!spec.file.empty()) {
    const Snapshot snap = read_snapshot(std::filesystem::path(base_dir) / spec.file);
    if (snap.frames.rows() != grid.node_count() || snap.frames.cols() != grid.n_frames())
      throw ConfigError("stimulus file " + spec.file + ": frames do not match the grid");
    return snap.frames;
  }
  Series out = Series::Zero(grid.node_count(), grid.n_frames());
  if (spec.amplitude == 0.0) return out;
  Field bump(grid.node_count());
  for (Eigen::Index n = 0; n < bump.size(); ++n) bump[n] = gaussian(spec, grid.coords(n), grid.dim());
  for (int k = 0; k < grid.n_frames(); ++k) {
    const double t = grid.time(k);
    if (t >= spec.t_on && t <= spec.t_off) out.col(k) = bump;
  }
  return out;
}

ControlProblem Scenario::instantiate(const Grid& g, std::vector<std::string>* warnings) const {
  validate();
  OperatorsPtr ops = has_m_e ? build_operators(g, TensorField::uniform(g, m_i.local(dim)),
                                               TensorField::uniform(g, m_e.local(dim)), lambda)
                             : build_operators(g, TensorField::uniform(g, m_i.local(dim)), lambda);

  ControlProblem p;
  ProblemConfig& c = p.config;
  c.ops = ops;
  c.ionic = ionic;
  c.kind = system;
  c.reaction = reaction;
  c.tol = {cg_tol, inner_tol};
  StimulusSpec bump{phi0_amplitude, phi0_center, phi0_width, 0.0, kInfinity, {}};
  c.phi0 = Field::Constant(g.node_count(), phi0_offset);
  for (Eigen::Index n = 0; n < c.phi0.size(); ++n) c.phi0[n] += gaussian(bump, g.coords(n), g.dim());
  c.w0 = Field::Constant(g.node_count(), w0);
  c.I_i = stimulus_series(stimulus_i, g, base_dir);
  c.I_e = stimulus_series(stimulus_e, g, base_dir);
  if (system == SystemKind::Bidomain && compatibility_defect(g, c.I_i, c.I_e) > 1e-12) {
    if (warnings)
      warnings->push_back("stimulus: I_i + I_e does not integrate to zero; compatibility_enforce adjusts I_e");
    std::tie(c.I_i, c.I_e) = compatibility_enforce(g, c.I_i, c.I_e);
  }

  CostConfig& cost = p.cost;
  cost.w_phi = w_phi;
  cost.w_eta = w_eta;
  cost.w_gate = w_gate;
  cost.mu = mu;
  cost.mask = Field::Zero(g.node_count());
  for (Eigen::Index n = 0; n < cost.mask.size(); ++n) {
    const auto x = g.coords(n);
    bool inside = true;
    for (int a = 0; a < g.dim(); ++a) inside = inside && x[a] >= control_lo[a] - 1e-12 && x[a] <= control_hi[a] + 1e-12;
    cost.mask[n] = inside ? 1.0 : 0.0;
  }
  if (target == "uncontrolled") {
    ProblemConfig free = c;
    free.I_e.setZero();
    if (system == SystemKind::Bidomain) std::tie(free.I_i, free.I_e) = compatibility_enforce(g, free.I_i, free.I_e);
    const Trajectory t = simulate(free);
    cost.phi_des = t.phi_tr;
    cost.eta_des = t.phi_e;
  } else if (target != "rest") {
    cost.phi_des = Series::Constant(g.node_count(), g.n_frames(), to_double("cost.target", target));
  }
  p.max_iter = max_iter;
  p.radius = radius;
  p.gradient_tol = gradient_tol;
  return p;
}

Scenario parse_config_text(const std::string& text, const std::string& base_dir, std::vector<std::string>* warnings) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Reader r(tree);
  Scenario s;
  s.base_dir = base_dir;

  s.dim = static_cast<int>(to_int("geometry.dim", r.require("geometry.dim")));
  if (s.dim < 1 || s.dim > 3) throw ConfigError("geometry.dim: must be 1, 2 or 3");
  {
    const std::string key = "geometry.nodes";
    std::vector<long long> vals;
    for (const auto& item : split(r.require(key), ',')) vals.push_back(to_int(key, item));
    if (vals.empty() || static_cast<int>(vals.size()) > s.dim) throw ConfigError(key + ": expected 1 to dim values");
    for (int a = 0; a < 3; ++a)
      s.nodes[a] = a < s.dim ? static_cast<int>(vals[std::min<std::size_t>(a, vals.size() - 1)]) : 1;
  }
  r.triple("geometry.lengths", s.lengths);
  for (int a = s.dim; a < 3; ++a) s.lengths[a] = 1.0;
  s.T = to_double("geometry.T", r.require("geometry.T"));
  s.steps = static_cast<int>(to_int("geometry.steps", r.require("geometry.steps")));

  if (auto v = r.get("model.system")) {
    if (*v == "monodomain")
      s.system = SystemKind::Monodomain;
    else if (*v == "bidomain")
      s.system = SystemKind::Bidomain;
    else
      throw ConfigError("model.system: expected monodomain or bidomain, got '" + *v + "'");
  }
  if (auto v = r.get("model.ionic")) {
    try {
      s.ionic.kind = parse_ionic_model(*v);
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("model.ionic: ") + e.what());
    }
  }
  r.number("model.a", s.ionic.a);
  r.number("model.b", s.ionic.b);
  r.number("model.kappa", s.ionic.kappa);
  r.number("model.eps", s.ionic.eps);
  if (auto v = r.get("model.reaction")) s.reaction = to_bool("model.reaction", *v);

  if (auto v = r.get("tensors.Mi")) s.m_i = parse_tensor("tensors.Mi", *v);
  if (auto v = r.get("tensors.Me")) {
    s.m_e = parse_tensor("tensors.Me", *v);
    s.has_m_e = true;
  }
  r.number("tensors.lambda", s.lambda);

  r.number("initial.phi_offset", s.phi0_offset);
  r.number("initial.phi_amplitude", s.phi0_amplitude);
  r.triple("initial.phi_center", s.phi0_center);
  r.number("initial.phi_width", s.phi0_width);
  r.number("initial.w", s.w0);

  read_stimulus(r, "stimulus_i", s.stimulus_i);
  read_stimulus(r, "stimulus_e", s.stimulus_e);

  if (auto v = r.get("cost.target")) s.target = *v;
  r.number("cost.w_phi", s.w_phi);
  r.number("cost.w_eta", s.w_eta);
  r.number("cost.w_gate", s.w_gate);
  r.number("cost.mu", s.mu);
  r.triple("cost.control_lo", s.control_lo);
  r.triple("cost.control_hi", s.control_hi);
  r.number("cost.R", s.radius);
  r.integer("cost.max_iter", s.max_iter);
  r.number("cost.gradient_tol", s.gradient_tol);

  r.number("solver.cg_tol", s.cg_tol);
  r.number("solver.inner_tol", s.inner_tol);

  if (auto v = r.get("output.dir")) s.out_dir = *v;
  if (auto v = r.get("output.seed")) {
    const std::string t = trim(*v);
    std::size_t used = 0;
    try {
      if (!t.empty() && t[0] != '-') s.seed = std::stoull(t, &used);
    } catch (const std::exception&) {
    }
    if (t.empty() || used != t.size()) throw ConfigError("output.seed: expected an unsigned integer, got '" + *v + "'");
  }

  r.reject_unknown();
  s.validate();

  if (warnings && s.system == SystemKind::Bidomain) {
    const Grid g = s.grid();
    const Series I_i = stimulus_series(s.stimulus_i, g, s.base_dir);
    const Series I_e = stimulus_series(s.stimulus_e, g, s.base_dir);
    if (compatibility_defect(g, I_i, I_e) > 1e-12)
      warnings->push_back("stimulus: I_i + I_e does not integrate to zero; compatibility_enforce will adjust I_e");
  }
  return s;
}

Scenario parse_config(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config_text(ss.str(), dir.empty() ? "." : dir.string(), warnings);
}

std::string serialize(const Scenario& s) {
  std::ostringstream os;
  os << "[geometry]\n";
  os << "dim = " << s.dim << "\n";
  os << "nodes = " << fmt_list(s.nodes, s.dim) << "\n";
  os << "lengths = " << fmt_list(s.lengths, s.dim) << "\n";
  os << "T = " << fmt(s.T) << "\n";
  os << "steps = " << s.steps << "\n";

  os << "\n[model]\n";
  os << "system = " << to_string(s.system) << "\n";
  os << "ionic = " << to_string(s.ionic.kind) << "\n";
  os << "a = " << fmt(s.ionic.a) << "\n";
  os << "b = " << fmt(s.ionic.b) << "\n";
  os << "kappa = " << fmt(s.ionic.kappa) << "\n";
  os << "eps = " << fmt(s.ionic.eps) << "\n";
  os << "reaction = " << (s.reaction ? "true" : "false") << "\n";

  os << "\n[tensors]\n";
  os << "Mi = " << fmt_tensor(s.m_i) << "\n";
  if (s.has_m_e) os << "Me = " << fmt_tensor(s.m_e) << "\n";
  os << "lambda = " << fmt(s.lambda) << "\n";

  os << "\n[initial]\n";
  os << "phi_offset = " << fmt(s.phi0_offset) << "\n";
  os << "phi_amplitude = " << fmt(s.phi0_amplitude) << "\n";
  os << "phi_center = " << fmt_list(s.phi0_center, 3) << "\n";
  os << "phi_width = " << fmt(s.phi0_width) << "\n";
  os << "w = " << fmt(s.w0) << "\n";

  write_stimulus(os, "stimulus_i", s.stimulus_i);
  write_stimulus(os, "stimulus_e", s.stimulus_e);

  os << "\n[cost]\n";
  os << "target = " << s.target << "\n";
  os << "w_phi = " << fmt(s.w_phi) << "\n";
  os << "w_eta = " << fmt(s.w_eta) << "\n";
  os << "w_gate = " << fmt(s.w_gate) << "\n";
  os << "mu = " << fmt(s.mu) << "\n";
  os << "control_lo = " << fmt_list(s.control_lo, 3) << "\n";
  os << "control_hi = " << fmt_list(s.control_hi, 3) << "\n";
  os << "R = " << fmt(s.radius) << "\n";
  os << "max_iter = " << s.max_iter << "\n";
  os << "gradient_tol = " << fmt(s.gradient_tol) << "\n";

  os << "\n[solver]\n";
  os << "cg_tol = " << fmt(s.cg_tol) << "\n";
  os << "inner_tol = " << fmt(s.inner_tol) << "\n";

  os << "\n[output]\n";
  os << "dir = " << s.out_dir << "\n";
  os << "seed = " << s.seed << "\n";
  return os.str();
}

}  // namespace cardio
